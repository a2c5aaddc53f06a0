use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::expr::Expr;

use super::Curve;

/// Largest matrix expanded symbolically; beyond this the cofactor tree is
/// too large to be useful.
pub const MAX_WRONSKIAN_SIZE: usize = 6;

/// `W(f_0, …, f_k) = det (f_j^{(i)})_{0 ≤ i, j ≤ k}` as an expression,
/// for the first `k + 1` components (all of them by default).
pub fn wronskian(f: &Curve, k: Option<usize>) -> Result<Expr> {
    let size = k.map_or(f.components().len(), |k| k + 1);
    if size < 1 || size > f.components().len() {
        return Err(Error::InvalidInput(format!(
            "Wronskian size {size} out of range for {} components",
            f.components().len()
        )));
    }
    if size > MAX_WRONSKIAN_SIZE {
        return Err(Error::CombinatorialLimit(size));
    }
    let rows: Vec<Vec<Expr>> = (0..size)
        .map(|i| f.components()[..size].iter().map(|e| e.differentiate(i)).collect())
        .collect();
    let mut memo = HashMap::new();
    Ok(minor(&rows, (1u32 << size) - 1, &mut memo))
}

/// Determinant of the bottom rows against the column set `cols`, expanded
/// along its first row; the row is fixed by the number of columns.
fn minor(rows: &[Vec<Expr>], cols: u32, memo: &mut HashMap<u32, Expr>) -> Expr {
    if cols == 0 {
        return Expr::one();
    }
    if let Some(e) = memo.get(&cols) {
        return e.clone();
    }
    let row = rows.len() - cols.count_ones() as usize;
    let mut terms = Vec::new();
    let mut sign = 1.0;
    for j in 0..rows.len() {
        if cols & (1 << j) == 0 {
            continue;
        }
        let entry = &rows[row][j];
        if !entry.is_zero() {
            let rest = minor(rows, cols & !(1 << j), memo);
            if !rest.is_zero() {
                terms.push(Expr::product(vec![Expr::real(sign), entry.clone(), rest]));
            }
        }
        sign = -sign;
    }
    let det = Expr::sum(terms);
    memo.insert(cols, det.clone());
    det
}

/// Numeric derivative matrix `(f_j^{(i)}(z))`.
pub fn wronskian_matrix_at(f: &Curve, z: Complex64) -> Result<DMatrix<Complex64>> {
    let n = f.components().len();
    let mut m = DMatrix::zeros(n, n);
    for (j, e) in f.components().iter().enumerate() {
        let mut d = e.clone();
        for i in 0..n {
            m[(i, j)] = d.eval(z)?;
            d = d.derivative();
        }
    }
    Ok(m)
}

/// The curve `A · f`, with `F_i = Σ_j A_ij f_j`.
pub fn transform(f: &Curve, a: &DMatrix<Complex64>) -> Result<Curve> {
    let n = f.components().len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.nrows(),
        });
    }
    let comps = (0..n)
        .map(|i| {
            Expr::sum(
                (0..n)
                    .filter(|&j| a[(i, j)].norm() != 0.0)
                    .map(|j| f.components()[j].scale(a[(i, j)]))
                    .collect(),
            )
        })
        .collect();
    Curve::new(comps, f.plane())
}

/// `max | |W(Af)| - |det A| |W(f)| | / (1 + |W(f)|)` over 100 sample points.
pub fn frame_deviation(f: &Curve, a: &DMatrix<Complex64>, cfg: &Config) -> Result<f64> {
    let det = a.determinant();
    if det.norm() <= 1e-12 {
        return Err(Error::SingularFrame(det.norm()));
    }
    let w = wronskian(f, None)?;
    let wa = wronskian(&transform(f, a)?, None)?;
    let mut worst: f64 = 0.0;
    for z in f.sample_points(100, cfg.seed) {
        let base = w.eval(z)?.norm();
        let moved = wa.eval(z)?.norm();
        worst = worst.max((moved - det.norm() * base).abs() / (1.0 + base));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::PuncturedPlane;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pm1() -> PuncturedPlane {
        PuncturedPlane::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap()
    }

    #[test]
    fn examples() {
        let p = pm1();
        let w = wronskian(&Curve::parse(&["1", "z"], &p).unwrap(), None).unwrap();
        assert_eq!(w.eval(c(0.3, 2.0)).unwrap(), c(1.0, 0.0));
        let w = wronskian(&Curve::parse(&["1", "z", "z^2"], &p).unwrap(), None).unwrap();
        for z in [c(0.0, 0.0), c(5.0, -2.0)] {
            assert!((w.eval(z).unwrap() - c(2.0, 0.0)).norm() < 1e-12);
        }
        let w = wronskian(&Curve::parse(&["1", "z", "z^4"], &p).unwrap(), None).unwrap();
        let z = c(1.5, 0.5);
        assert!((w.eval(z).unwrap() - 12.0 * z * z).norm() < 1e-12);
    }

    #[test]
    fn matches_numeric_determinant() {
        let p = pm1();
        let f = Curve::parse(&["1", "z", "exp(1/(z-1))"], &p).unwrap();
        let w = wronskian(&f, None).unwrap();
        for z in f.sample_points(10, 3) {
            let numeric = wronskian_matrix_at(&f, z).unwrap().determinant();
            let symbolic = w.eval(z).unwrap();
            assert!((numeric - symbolic).norm() <= 1e-10 * (1.0 + numeric.norm()));
        }
    }

    #[test]
    fn matches_finite_difference_matrix() {
        let p = pm1();
        let f = Curve::parse(&["1", "z", "exp(1/(z-1))"], &p).unwrap();
        let w = wronskian(&f, None).unwrap();
        let fd = |e: &Expr, z: Complex64, order: usize| -> Complex64 {
            let h = 1e-3 * (1.0 + z.norm());
            let v = |k: f64| e.eval(z + c(k * h, 0.0)).unwrap();
            match order {
                0 => v(0.0),
                1 => (-v(2.0) + 8.0 * v(1.0) - 8.0 * v(-1.0) + v(-2.0)) / (12.0 * h),
                _ => (-v(2.0) + 16.0 * v(1.0) - 30.0 * v(0.0) + 16.0 * v(-1.0) - v(-2.0)) / (12.0 * h * h),
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 10 {
            let z = c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            if (z - c(1.0, 0.0)).norm() < 0.6 || (z + c(1.0, 0.0)).norm() < 0.2 {
                continue;
            }
            let m = DMatrix::from_fn(3, 3, |i, j| fd(&f.components()[j], z, i));
            let exact = w.eval(z).unwrap();
            assert!((m.determinant() - exact).norm() < 1e-6 * exact.norm().max(1e-3), "{z}");
            checked += 1;
        }
    }

    #[test]
    fn degenerate_curve_has_zero_wronskian() {
        let p = pm1();
        let f = Curve::parse(&["1", "z", "2*z + 3"], &p).unwrap();
        let w = wronskian(&f, None).unwrap();
        for z in f.sample_points(50, 5) {
            assert!(w.eval(z).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn frame_examples() {
        let p = pm1();
        let f = Curve::parse(&["1", "z"], &p).unwrap();
        let cfg = Config::default();
        assert!(frame_deviation(&f, &DMatrix::identity(2, 2), &cfg).unwrap() < 1e-14);
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0, 0.0), c(3.0, 0.0)]));
        let wa = wronskian(&transform(&f, &a).unwrap(), None).unwrap();
        assert!((wa.eval(c(0.7, -0.2)).unwrap().norm() - 6.0).abs() < 1e-14);
        assert!(frame_deviation(&f, &a, &cfg).unwrap() < 1e-14);

        let g = Curve::parse(&["1", "z", "z^2"], &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = DMatrix::from_fn(3, 3, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        assert!(frame_deviation(&g, &a, &cfg).unwrap() < 1e-10);

        let singular = DMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(matches!(
            frame_deviation(&f, &singular, &cfg),
            Err(Error::SingularFrame(_))
        ));
    }
}
