use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::quadrature::omega_boundary_average;

use super::{Composition, Curve, Hyperplane, Hypersurface, Normalization, Target};

const RANK_RATIO: f64 = 1e-10;
const MAX_TARGETS: usize = 12;
const HEURISTIC_STARTS: usize = 200;

/// All `k`-subsets of `0..n`, in lexicographic order.
pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn full_rank(rows: &[&[Complex64]]) -> bool {
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let s = m.svd(false, false).singular_values;
    let top = s.max();
    top > 0.0 && s.min() > RANK_RATIO * top
}

/// Whether every `n + 1` of the coefficient tuples are linearly independent
/// (every subset, when there are at most `n + 1` of them).
pub fn general_position_hyperplanes(hs: &[Hyperplane], n: usize) -> bool {
    if hs.is_empty() || hs.iter().any(|h| h.n_vars() != n + 1) {
        return false;
    }
    let k = hs.len().min(n + 1);
    subsets(hs.len(), k)
        .iter()
        .all(|s| full_rank(&s.iter().map(|&i| hs[i].coefficients()).collect::<Vec<_>>()))
}

/// Outcome of a general-position test for hypersurfaces in `P^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PositionCheck {
    /// Decided from factorizations into linear forms.
    Exact { in_general_position: bool },
    /// No common zero found by Gauss-Newton from random starts.
    Heuristic {
        probably_in_general_position: bool,
        starts: usize,
        min_residual: f64,
    },
}

impl PositionCheck {
    pub fn passed(&self) -> bool {
        match self {
            PositionCheck::Exact { in_general_position } => *in_general_position,
            PositionCheck::Heuristic {
                probably_in_general_position,
                ..
            } => *probably_in_general_position,
        }
    }
}

/// Whether every `n + 1` of the hypersurfaces have no common zero in `P^n`.
pub fn general_position_hypersurfaces(ds: &[Hypersurface], n: usize, seed: u64) -> Result<PositionCheck> {
    if let Some(q) = ds.iter().find(|q| q.n_vars() != n + 1) {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            got: q.n_vars(),
        });
    }
    if ds.len() < n + 1 {
        return Err(Error::NotEnoughTargets {
            needed: n + 1,
            got: ds.len(),
        });
    }
    let groups = subsets(ds.len(), n + 1);
    if ds.iter().all(|q| q.linear_factors().is_some()) {
        let ok = groups.iter().all(|g| {
            let lists: Vec<&[_]> = g.iter().map(|&i| ds[i].linear_factors().unwrap()).collect();
            every_choice_independent(&lists)
        });
        return Ok(PositionCheck::Exact {
            in_general_position: ok,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_residual = f64::INFINITY;
    for g in &groups {
        let qs: Vec<&Hypersurface> = g.iter().map(|&i| &ds[i]).collect();
        for _ in 0..HEURISTIC_STARTS {
            let res = common_zero_search(&qs, &mut rng);
            min_residual = min_residual.min(res);
            if res < 1e-10 {
                return Ok(PositionCheck::Heuristic {
                    probably_in_general_position: false,
                    starts: HEURISTIC_STARTS,
                    min_residual,
                });
            }
        }
    }
    Ok(PositionCheck::Heuristic {
        probably_in_general_position: true,
        starts: HEURISTIC_STARTS,
        min_residual,
    })
}

/// A common zero of products of linear forms needs one vanishing factor
/// from each; so the supports meet iff some choice of factors is dependent.
fn every_choice_independent(lists: &[&[super::LinearFactor]]) -> bool {
    let mut idx = vec![0; lists.len()];
    loop {
        let rows: Vec<&[Complex64]> = lists.iter().zip(&idx).map(|(l, &i)| l[i].0.as_slice()).collect();
        if !full_rank(&rows) {
            return false;
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return true;
            }
            idx[k] += 1;
            if idx[k] < lists[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn eval_table(terms: &std::collections::BTreeMap<Vec<u32>, Complex64>, x: &[Complex64]) -> Complex64 {
    terms
        .iter()
        .map(|(e, c)| e.iter().zip(x).fold(*c, |acc, (k, v)| acc * v.powu(*k)))
        .sum()
}

/// Gauss-Newton on `Q_l(x) / ‖Q_l‖ = 0` in a random affine chart; returns
/// the final residual relative to `‖x‖^d`.
fn common_zero_search(qs: &[&Hypersurface], rng: &mut ChaCha8Rng) -> f64 {
    let n_vars = qs[0].n_vars();
    let chart = rng.gen_range(0..n_vars);
    let mut x: Vec<Complex64> = (0..n_vars)
        .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
        .collect();
    x[chart] = Complex64::new(1.0, 0.0);
    let partials: Vec<Vec<_>> = qs.iter().map(|q| (0..n_vars).map(|k| q.partial(k)).collect()).collect();
    let norms: Vec<f64> = qs.iter().map(|q| q.norm()).collect();
    let residual = |x: &[Complex64]| {
        let scale = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
        qs.iter()
            .zip(&norms)
            .map(|(q, nq)| q.eval(x).norm() / (nq * scale.powi(q.degree() as i32)))
            .fold(0.0, f64::max)
    };
    for _ in 0..60 {
        let f = DVector::from_iterator(qs.len(), qs.iter().zip(&norms).map(|(q, nq)| q.eval(&x) / *nq));
        let free: Vec<usize> = (0..n_vars).filter(|&k| k != chart).collect();
        let jac = DMatrix::from_fn(qs.len(), free.len(), |i, j| {
            eval_table(&partials[i][free[j]], &x) / norms[i]
        });
        let Ok(step) = jac.svd(true, true).solve(&f, 1e-14) else {
            break;
        };
        for (j, &k) in free.iter().enumerate() {
            x[k] -= step[j];
        }
        if step.norm() < 1e-15 {
            break;
        }
    }
    residual(&x)
}

/// Two-part average of `max_K Σ_{l ∈ K} log(‖f‖ / |(a_l, f)|)`, the maximum
/// taken over `(n + 1)`-subsets `K` with independent coefficient tuples.
pub fn max_proximity(f: &Curve, hs: &[Hyperplane], r: f64, cfg: &Config) -> Result<f64> {
    let n = f.dimension();
    if hs.len() > MAX_TARGETS {
        return Err(Error::CombinatorialLimit(hs.len()));
    }
    if hs.len() < n + 1 {
        return Err(Error::NotEnoughTargets {
            needed: n + 1,
            got: hs.len(),
        });
    }
    let targets: Vec<Target> = hs.iter().cloned().map(Target::Hyperplane).collect();
    let comps = targets
        .iter()
        .map(|t| Composition::new(f, t, cfg))
        .collect::<Result<Vec<_>>>()?;
    let admissible: Vec<Vec<usize>> = subsets(hs.len(), n + 1)
        .into_iter()
        .filter(|s| full_rank(&s.iter().map(|&i| hs[i].coefficients()).collect::<Vec<_>>()))
        .collect();
    if admissible.is_empty() {
        return Err(Error::NotGeneralPosition("no independent subset of hyperplanes".into()));
    }
    let all = admissible.len() == subsets(hs.len(), n + 1).len();
    let integrand = |z: Complex64| -> Result<f64> {
        let v = comps
            .iter()
            .map(|c| c.log_ratio(z, Normalization::Raw))
            .collect::<Result<Vec<f64>>>()?;
        if all {
            let mut sorted = v.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            return Ok(sorted[..=n].iter().sum());
        }
        Ok(admissible
            .iter()
            .map(|s| s.iter().map(|&i| v[i]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max))
    };
    Ok(omega_boundary_average(f.plane(), r, integrand, cfg)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::PuncturedPlane;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hp(a: &[f64]) -> Hyperplane {
        Hyperplane::real(a).unwrap()
    }

    #[test]
    fn subset_enumeration() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(subsets(2, 3).len(), 0);
    }

    #[test]
    fn hyperplane_examples() {
        let coord_plus = [
            hp(&[1.0, 0.0, 0.0]),
            hp(&[0.0, 1.0, 0.0]),
            hp(&[0.0, 0.0, 1.0]),
            hp(&[1.0, 1.0, 1.0]),
        ];
        assert!(general_position_hyperplanes(&coord_plus, 2));
        let bad = [
            hp(&[1.0, 0.0, 0.0]),
            hp(&[0.0, 1.0, 0.0]),
            hp(&[1.0, 1.0, 0.0]),
            hp(&[0.0, 0.0, 1.0]),
        ];
        assert!(!general_position_hyperplanes(&bad, 2));
        assert!(general_position_hyperplanes(&coord_plus[..3], 2));
    }

    #[test]
    fn hypersurface_exact_examples() {
        let qs: Vec<Hypersurface> = ["x0^2", "x1^2", "x2^2", "(x0+x1+x2)^2"]
            .iter()
            .map(|s| Hypersurface::parse(s, 3).unwrap())
            .collect();
        assert_eq!(
            general_position_hypersurfaces(&qs, 2, 1).unwrap(),
            PositionCheck::Exact {
                in_general_position: true
            }
        );
        let qs: Vec<Hypersurface> = ["x0*x1", "x1^2", "x2^2"]
            .iter()
            .map(|s| Hypersurface::parse(s, 3).unwrap())
            .collect();
        assert!(!general_position_hypersurfaces(&qs, 2, 1).unwrap().passed());
        assert!(matches!(
            general_position_hypersurfaces(&qs[..2], 2, 1),
            Err(Error::NotEnoughTargets { .. })
        ));
    }

    #[test]
    fn hypersurface_heuristic_examples() {
        // Conic x0^2 + x1^2 - x2^2 meets every line.
        let qs: Vec<Hypersurface> = ["x0^2 + x1^2 - x2^2", "x0", "x1 - x2"]
            .iter()
            .map(|s| Hypersurface::parse(s, 3).unwrap())
            .collect();
        let check = general_position_hypersurfaces(&qs, 2, 9).unwrap();
        assert!(matches!(check, PositionCheck::Heuristic { .. }));
        assert!(!check.passed());
        // Fermat conic against two coordinate lines has no common zero.
        let qs: Vec<Hypersurface> = ["x0^2 + x1^2 + x2^2", "x0", "x1"]
            .iter()
            .map(|s| Hypersurface::parse(s, 3).unwrap())
            .collect();
        assert!(general_position_hypersurfaces(&qs, 2, 9).unwrap().passed());
    }

    #[test]
    fn max_proximity_examples() {
        let cfg = Config::default();
        let p = PuncturedPlane::new(vec![c(1.0, 0.0), c(-2.0, 0.0)]).unwrap();
        let f = Curve::parse(&["1", "z"], &p).unwrap();
        let two = [hp(&[1.0, 0.0]), hp(&[0.0, 1.0])];
        let three = [hp(&[1.0, 0.0]), hp(&[0.0, 1.0]), hp(&[1.0, 1.0])];
        for r in [p.base_radius(), 7.0, 20.0] {
            let single = max_proximity(&f, &two, r, &cfg).unwrap();
            let sum: f64 = two
                .iter()
                .map(|h| super::super::proximity_hyperplane(&f, h, r, &cfg).unwrap())
                .sum();
            assert!((single - sum).abs() < 1e-9);
            let mx = max_proximity(&f, &three, r, &cfg).unwrap();
            for h in &three {
                assert!(mx >= super::super::proximity_hyperplane(&f, h, r, &cfg).unwrap() - 1e-9);
            }
        }
        let many: Vec<Hyperplane> = (0..13).map(|k| hp(&[1.0, k as f64])).collect();
        assert!(matches!(
            max_proximity(&f, &many, 5.0, &cfg),
            Err(Error::CombinatorialLimit(13))
        ));
    }
}
