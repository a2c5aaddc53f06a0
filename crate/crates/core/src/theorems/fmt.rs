use crate::cartan::{Composition, Curve, Normalization, Target};
use crate::config::Config;
use crate::error::Result;
use crate::roots::counting_function;

use super::{per_radius, validate_grid, TheoremId, TheoremReport};

/// `d·T_f(r) − m_f(r, D) − N_f(r, D)` over the grid; passes when the
/// residual varies by less than ten quadrature tolerances.
pub fn fmt_residual_series(f: &Curve, target: &Target, r_grid: &[f64], cfg: &Config) -> Result<TheoremReport> {
    validate_grid(f.plane(), r_grid)?;
    let comp = Composition::new(f, target, cfg)?;
    let zeros = comp.zeros(*r_grid.last().unwrap(), cfg)?;
    let rows = per_radius(r_grid, |r| {
        let t = f.characteristic_detail(r, cfg)?;
        let m = comp.proximity_detail(r, Normalization::Raw, cfg)?;
        let n = counting_function(&zeros, f.plane(), r, None)?;
        Ok((t, m, n))
    })?;

    let d = f64::from(target.degree());
    let mut rep = TheoremReport::new(TheoremId::FirstMain, r_grid);
    let t: Vec<f64> = rows.iter().map(|row| row.0.value).collect();
    let m: Vec<f64> = rows.iter().map(|row| row.1.value).collect();
    let n: Vec<f64> = rows.iter().map(|row| row.2).collect();
    rep.sides(
        t.iter().map(|v| d * v).collect(),
        m.iter().zip(&n).map(|(a, b)| a + b).collect(),
        true,
    );
    for (row, r) in rows.iter().zip(r_grid) {
        if row.0.perturbed() || row.1.perturbed() {
            rep.note(format!("contour radius perturbed at r = {r}"));
        }
    }
    rep.series.insert("T_f".into(), t);
    rep.series.insert("m_f".into(), m);
    rep.series.insert("N_f".into(), n);
    rep.param(
        "curve",
        f.components().iter().map(ToString::to_string).collect::<Vec<_>>(),
    );
    rep.param("target", target.to_string());
    rep.param("degree", target.degree());
    rep.param("zeros", zeros.total_multiplicity());
    rep.check_constant("slack", 10.0 * cfg.quad_tol)?;
    Ok(rep.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{Hyperplane, Hypersurface};
    use crate::domain::PuncturedPlane;
    use crate::error::Error;
    use num_complex::Complex64;

    fn pm1() -> PuncturedPlane {
        PuncturedPlane::new(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]).unwrap()
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    fn h(a: &[f64]) -> Target {
        Target::Hyperplane(Hyperplane::real(a).unwrap())
    }

    #[test]
    fn polynomial_curve() {
        let p = pm1();
        let f = Curve::parse(&["1", "z"], &p).unwrap();
        let rep = fmt_residual_series(&f, &h(&[0.0, 1.0]), &grid(2.5, 40.0, 20), &Config::default()).unwrap();
        assert!(rep.verdict, "{:?}", rep.criteria);
        let r40 = rep.get("N_f").unwrap()[19];
        assert!((r40 - (40.0f64 / 2.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_free_composition() {
        let p = pm1();
        let f = Curve::parse(&["1", "exp(1/(z-1))"], &p).unwrap();
        let rep = fmt_residual_series(&f, &h(&[0.0, 1.0]), &grid(2.5, 40.0, 20), &Config::default()).unwrap();
        assert!(rep.verdict);
        assert!(rep.get("N_f").unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn degree_two_target_is_sum_of_hyperplanes() {
        let p = pm1();
        let f = Curve::parse(&["1", "z"], &p).unwrap();
        let g = grid(2.5, 30.0, 8);
        let cfg = Config::default();
        let q = Target::Hypersurface(Hypersurface::parse("x0*x1", 2).unwrap());
        let both = fmt_residual_series(&f, &q, &g, &cfg).unwrap();
        assert!(both.verdict, "{:?} {:?} {:?}", both.criteria, both.slack, both.series);
        let a = fmt_residual_series(&f, &h(&[1.0, 0.0]), &g, &cfg).unwrap();
        let b = fmt_residual_series(&f, &h(&[0.0, 1.0]), &g, &cfg).unwrap();
        for i in 0..g.len() {
            assert!((both.slack[i] - a.slack[i] - b.slack[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn degree_one_hypersurface_matches_hyperplane() {
        let p = pm1();
        let f = Curve::parse(&["z - 2", "z + 3", "z^2"], &p).unwrap();
        let g = grid(2.5, 20.0, 5);
        let cfg = Config::default();
        let hp = Hyperplane::real(&[1.0, -2.0, 0.5]).unwrap();
        let a = fmt_residual_series(&f, &Target::Hyperplane(hp.clone()), &g, &cfg).unwrap();
        let b = fmt_residual_series(&f, &Target::Hypersurface(Hypersurface::from_hyperplane(&hp)), &g, &cfg).unwrap();
        for i in 0..g.len() {
            assert!((a.slack[i] - b.slack[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn containing_target_is_rejected() {
        let p = pm1();
        let f = Curve::parse(&["z", "z"], &p).unwrap();
        assert!(matches!(
            fmt_residual_series(&f, &h(&[1.0, -1.0]), &grid(2.5, 5.0, 3), &Config::default()),
            Err(Error::TargetContainsCurve)
        ));
    }

    #[test]
    fn rescaling_leaves_residual_constant() {
        let p = pm1();
        let f = Curve::parse(&["1", "z"], &p).unwrap();
        let g = crate::expr::parse("exp(z/7) * exp(1/(z+1))", &p).unwrap();
        let fg = f.rescaled(&g).unwrap();
        let gr = grid(2.5, 12.0, 6);
        let cfg = Config::default();
        let a = fmt_residual_series(&f, &h(&[1.0, 1.0]), &gr, &cfg).unwrap();
        let b = fmt_residual_series(&fg, &h(&[1.0, 1.0]), &gr, &cfg).unwrap();
        assert!(a.verdict && b.verdict);
        // The shift is the boundary average of log|g|, here Re 1/(1+1).
        for i in 0..gr.len() {
            assert!((b.slack[i] - a.slack[i] - 0.5).abs() < 1e-6);
        }
    }
}
