use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::cartan::{
    general_position_hyperplanes, general_position_hypersurfaces, max_proximity, wronskian, wronskian_matrix_at,
    Composition, Curve, Hyperplane, Hypersurface, Normalization, PositionCheck, Target,
};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fit::EnvelopeShape;
use crate::hilbert::{alpha_truncation_bound, binomial, proof_constants};
use crate::roots::{counting_function, locate_zeros, ZeroSet};

use super::{per_radius, validate_grid, TheoremId, TheoremReport};

/// Largest number of components `monomial_lift` will build.
pub const MONOMIAL_LIFT_BUDGET: usize = 84;

const SAME_POINT: f64 = 1e-6;

fn hyperplane_targets(f: &Curve, hs: &[Hyperplane]) -> Result<Vec<Target>> {
    let n = f.dimension();
    if hs.len() < n + 1 {
        return Err(Error::NotEnoughTargets {
            needed: n + 1,
            got: hs.len(),
        });
    }
    if let Some(h) = hs.iter().find(|h| h.n_vars() != n + 1) {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            got: h.n_vars(),
        });
    }
    if !general_position_hyperplanes(hs, n) {
        return Err(Error::NotGeneralPosition(format!(
            "some {} of the {} hyperplanes are linearly dependent",
            n + 1,
            hs.len()
        )));
    }
    Ok(hs.iter().cloned().map(Target::Hyperplane).collect())
}

fn located(f: &Curve, targets: &[Target], r_max: f64, cfg: &Config) -> Result<Vec<ZeroSet>> {
    targets
        .iter()
        .map(|t| Composition::new(f, t, cfg)?.zeros(r_max, cfg))
        .collect()
}

fn curve_params(rep: &mut TheoremReport, f: &Curve) {
    rep.param(
        "curve",
        f.components().iter().map(ToString::to_string).collect::<Vec<_>>(),
    );
    rep.param("punctures", f.plane().punctures());
}

/// `(q − n − 1) T_f(r) ≤ Σ_l N^n_f(r, H_l)` up to a fitted
/// `A log r + B log⁺ T_f + C`.
pub fn smt_hyperplanes_report(f: &Curve, hs: &[Hyperplane], r_grid: &[f64], cfg: &Config) -> Result<TheoremReport> {
    validate_grid(f.plane(), r_grid)?;
    let targets = hyperplane_targets(f, hs)?;
    let n = f.dimension();
    let q = hs.len();
    let zeros = located(f, &targets, *r_grid.last().unwrap(), cfg)?;
    let trunc = n as u32;
    let rows = per_radius(r_grid, |r| {
        let t = f.characteristic(r, cfg)?;
        let ns = zeros
            .iter()
            .map(|zs| counting_function(zs, f.plane(), r, Some(trunc)))
            .collect::<Result<Vec<f64>>>()?;
        Ok((t, ns))
    })?;

    let mut rep = TheoremReport::new(TheoremId::SmtHyperplanes, r_grid);
    let t: Vec<f64> = rows.iter().map(|row| row.0).collect();
    let factor = (q - n - 1) as f64;
    rep.sides(
        t.iter().map(|v| factor * v).collect(),
        rows.iter().map(|row| row.1.iter().sum()).collect(),
        false,
    );
    rep.series.insert("T_f".into(), t);
    for l in 0..q {
        rep.series
            .insert(format!("N_trunc_{l}"), rows.iter().map(|row| row.1[l]).collect());
    }
    curve_params(&mut rep, f);
    rep.param("targets", hs.iter().map(ToString::to_string).collect::<Vec<_>>());
    rep.param("truncation", trunc);
    if q == n + 1 {
        rep.note("q = n + 1: the left side vanishes identically");
    }
    rep.check_envelope(
        "(q-n-1) T_f <= sum N^n_f",
        "lhs",
        "rhs",
        "T_f",
        EnvelopeShape::LogGrowth,
    )?;
    Ok(rep.finish())
}

fn wronskian_checked(f: &Curve, cfg: &Config) -> Result<Expr> {
    let w = wronskian(f, None)?;
    if !w.is_zero() {
        // Measured against the Hadamard bound of the derivative matrix.
        for z in f.sample_points(20, cfg.seed) {
            let m = wronskian_matrix_at(f, z)?;
            let hadamard: f64 = m.column_iter().map(|c| c.norm()).product();
            if w.eval(z)?.norm() > 1e-10 * hadamard {
                return Ok(w);
            }
        }
    }
    Err(Error::InvalidInput(
        "the Wronskian vanishes: the curve is linearly degenerate".into(),
    ))
}

/// The chain `Σ m_f(r, H_l) ≤ ∫ max_K + O(1) ≤ (n+1) T_f(r) − N_W(r, 0) + E`.
pub fn lemma31_report(f: &Curve, hs: &[Hyperplane], r_grid: &[f64], cfg: &Config) -> Result<TheoremReport> {
    validate_grid(f.plane(), r_grid)?;
    let targets = hyperplane_targets(f, hs)?;
    let n = f.dimension();
    let r_max = *r_grid.last().unwrap();
    let w = wronskian_checked(f, cfg)?;
    let w_zeros = locate_zeros(&w, f.plane(), r_max, cfg.root_tol)?;
    let comps = targets
        .iter()
        .map(|t| Composition::new(f, t, cfg))
        .collect::<Result<Vec<_>>>()?;
    let rows = per_radius(r_grid, |r| {
        let t = f.characteristic(r, cfg)?;
        let sum_m = comps
            .iter()
            .map(|c| c.proximity(r, Normalization::Raw, cfg))
            .sum::<Result<f64>>()?;
        let mp = max_proximity(f, hs, r, cfg)?;
        let nw = counting_function(&w_zeros, f.plane(), r, None)?;
        Ok([t, sum_m, mp, nw])
    })?;

    let mut rep = TheoremReport::new(TheoremId::Lemma31, r_grid);
    let col = |k: usize| rows.iter().map(|row| row[k]).collect::<Vec<f64>>();
    let bound: Vec<f64> = rows.iter().map(|row| (n + 1) as f64 * row[0] - row[3]).collect();
    rep.sides(col(1), bound, false);
    rep.series.insert("T_f".into(), col(0));
    rep.series.insert("max_proximity".into(), col(2));
    rep.series.insert("N_W".into(), col(3));
    curve_params(&mut rep, f);
    rep.param("targets", hs.iter().map(ToString::to_string).collect::<Vec<_>>());
    rep.param("wronskian", w.to_string());
    rep.param("wronskian_zeros", w_zeros.total_multiplicity());
    rep.check_envelope(
        "sum m_f <= max_K + O(1)",
        "lhs",
        "max_proximity",
        "T_f",
        EnvelopeShape::Constant,
    )?;
    rep.check_envelope(
        "max_K <= (n+1) T_f - N_W + E",
        "max_proximity",
        "rhs",
        "T_f",
        EnvelopeShape::LogGrowth,
    )?;
    Ok(rep.finish())
}

/// One point where several hyperplane compositions vanish, or one vanishes
/// to order at least two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub location: Complex64,
    /// Zero order of `(a_l, f)` at the point, per target.
    pub multiplicities: Vec<u32>,
    /// `Σ_l max(0, k_l − n)`.
    pub required: u32,
    pub wronskian_order: u32,
    pub holds: bool,
}

/// Checks `ord_{z_0} W ≥ Σ_l max(0, k_l − n)` at every multiple
/// intersection inside `Ω̄_r`.
pub fn wronskian_order_ledger(f: &Curve, hs: &[Hyperplane], r: f64, cfg: &Config) -> Result<Vec<LedgerEntry>> {
    let targets = hyperplane_targets(f, hs)?;
    let n = f.dimension() as u32;
    let zeros = located(f, &targets, r, cfg)?;
    let w = wronskian_checked(f, cfg)?;
    let w_zeros = locate_zeros(&w, f.plane(), r, cfg.root_tol)?;

    let mut points: Vec<(Complex64, Vec<u32>)> = Vec::new();
    for (l, zs) in zeros.iter().enumerate() {
        for rec in &zs.records {
            let slot = points
                .iter()
                .position(|(z, _)| (z - rec.location).norm() < SAME_POINT * (1.0 + z.norm()));
            let idx = slot.unwrap_or_else(|| {
                points.push((rec.location, vec![0; hs.len()]));
                points.len() - 1
            });
            points[idx].1[l] += rec.multiplicity;
        }
    }
    Ok(points
        .into_iter()
        .filter(|(_, ks)| ks.iter().sum::<u32>() >= 2)
        .map(|(location, multiplicities)| {
            let required = multiplicities.iter().map(|k| k.saturating_sub(n)).sum();
            let wronskian_order = w_zeros
                .records
                .iter()
                .filter(|rec| (rec.location - location).norm() < SAME_POINT * (1.0 + location.norm()))
                .map(|rec| rec.multiplicity)
                .sum();
            LedgerEntry {
                location,
                multiplicities,
                required,
                wronskian_order,
                holds: wronskian_order >= required,
            }
        })
        .collect())
}

/// `(q(1 − ε/3) − (n+1) − ε/3) T_f(r) ≤ Σ_l N^α_f(r, Q_l)/d_l` up to a fitted
/// `A log r + B log⁺ T_f + C`, for targets in `P^n` with `N = n`.
pub fn smt_hypersurfaces_report(
    f: &Curve,
    ds: &[Hypersurface],
    epsilon: f64,
    r_grid: &[f64],
    cfg: &Config,
) -> Result<TheoremReport> {
    validate_grid(f.plane(), r_grid)?;
    let n = f.dimension();
    let q = ds.len();
    if q <= n {
        return Err(Error::NotEnoughTargets { needed: n + 1, got: q });
    }
    let position = general_position_hypersurfaces(ds, n, cfg.seed)?;
    if !position.passed() {
        return Err(Error::NotGeneralPosition(
            "some n + 1 of the hypersurfaces share a zero".into(),
        ));
    }
    let d = ds.iter().fold(1u32, |acc, q| acc.lcm(&q.degree()));
    let alpha = alpha_truncation_bound(n as u32, d, epsilon, 1)?;
    let trunc = alpha.to_u32().unwrap_or(u32::MAX);
    let delta = d
        .checked_pow(n as u32)
        .ok_or_else(|| Error::InvalidInput("d^n overflows".into()))?;
    let constants = proof_constants(n as u32, delta, epsilon)?;

    let targets: Vec<Target> = ds.iter().cloned().map(Target::Hypersurface).collect();
    let zeros = located(f, &targets, *r_grid.last().unwrap(), cfg)?;
    let rows = per_radius(r_grid, |r| {
        let t = f.characteristic(r, cfg)?;
        let ns = zeros
            .iter()
            .zip(ds)
            .map(|(zs, q)| Ok(counting_function(zs, f.plane(), r, Some(trunc))? / f64::from(q.degree())))
            .sum::<Result<f64>>()?;
        Ok((t, ns))
    })?;

    let kappa = q as f64 * (1.0 - epsilon / 3.0) - (n + 1) as f64 - epsilon / 3.0;
    let mut rep = TheoremReport::new(TheoremId::SmtHypersurfaces, r_grid);
    let t: Vec<f64> = rows.iter().map(|row| row.0).collect();
    rep.sides(
        t.iter().map(|v| kappa * v).collect(),
        rows.iter().map(|row| row.1).collect(),
        false,
    );
    rep.series.insert("T_f".into(), t);
    curve_params(&mut rep, f);
    rep.param("targets", ds.iter().map(ToString::to_string).collect::<Vec<_>>());
    rep.param("epsilon", epsilon);
    rep.param("coefficient", kappa);
    rep.param("lcm_degree", d);
    rep.param("alpha", alpha.to_string());
    rep.param("m", constants.m);
    rep.param("delta", delta);
    rep.param("n_m_bound", constants.n_m_bound.to_string());
    rep.param("general_position", position);
    if let PositionCheck::Heuristic { starts, .. } = position {
        rep.note(format!(
            "general position checked heuristically from {starts} starts per subset"
        ));
    }
    if kappa <= 0.0 {
        rep.note("coefficient of T_f is nonpositive: the inequality holds trivially");
    }
    rep.check_envelope(
        "kappa T_f <= sum N^alpha_f / d_l",
        "lhs",
        "rhs",
        "T_f",
        EnvelopeShape::LogGrowth,
    )?;
    Ok(rep.finish())
}

/// All degree-`m` exponent tuples in `vars` variables, in descending
/// lexicographic order.
fn exponents(vars: usize, m: u32) -> Vec<Vec<u32>> {
    if vars == 1 {
        return vec![vec![m]];
    }
    (0..=m)
        .rev()
        .flat_map(|a| {
            exponents(vars - 1, m - a).into_iter().map(move |mut rest| {
                rest.insert(0, a);
                rest
            })
        })
        .collect()
}

/// The curve `(φ_0(Q∘f) : … : φ_K(Q∘f))` over all degree-`m` monomials `φ`
/// in the compositions `Q_l ∘ f`.
pub fn monomial_lift(f: &Curve, qs: &[Hypersurface], m: u32) -> Result<Curve> {
    let Some(first) = qs.first() else {
        return Err(Error::InvalidInput(
            "monomial lift needs at least one hypersurface".into(),
        ));
    };
    if m == 0 {
        return Err(Error::InvalidInput("monomial degree must be positive".into()));
    }
    if let Some(q) = qs.iter().find(|q| q.degree() != first.degree()) {
        return Err(Error::InvalidInput(format!(
            "hypersurfaces must share one degree, got {} and {}",
            first.degree(),
            q.degree()
        )));
    }
    let needed = binomial((qs.len() - 1) as u64 + u64::from(m), (qs.len() - 1) as u64)
        .to_usize()
        .unwrap_or(usize::MAX);
    if needed > MONOMIAL_LIFT_BUDGET {
        return Err(Error::SizeBudgetExceeded {
            needed,
            budget: MONOMIAL_LIFT_BUDGET,
        });
    }
    let base = qs.iter().map(|q| q.compose(f)).collect::<Result<Vec<_>>>()?;
    let comps = exponents(qs.len(), m)
        .into_iter()
        .map(|a| {
            let factors = a
                .iter()
                .zip(&base)
                .filter(|(k, _)| **k > 0)
                .map(|(k, g)| g.powi(*k as i32))
                .collect::<Result<Vec<_>>>()?;
            Ok(Expr::product(factors))
        })
        .collect::<Result<Vec<_>>>()?;
    Curve::new(comps, f.plane())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::PuncturedPlane;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pm1() -> PuncturedPlane {
        PuncturedPlane::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap()
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    fn hp(a: &[f64]) -> Hyperplane {
        Hyperplane::real(a).unwrap()
    }

    fn lines() -> Vec<Hyperplane> {
        vec![
            hp(&[1.0, 0.0, 0.0]),
            hp(&[0.0, 1.0, 0.0]),
            hp(&[0.0, 0.0, 1.0]),
            hp(&[1.0, 1.0, 1.0]),
        ]
    }

    #[test]
    fn theorem2_quadratic_curve() {
        let p = pm1();
        let f = Curve::parse(&["1", "z", "z^2"], &p).unwrap();
        let rep = smt_hyperplanes_report(&f, &lines(), &grid(2.5, 60.0, 12), &Config::scan()).unwrap();
        assert!(rep.verdict, "{:?}", rep.criteria);
        assert!(rep.recheck().unwrap());
    }

    #[test]
    fn theorem2_trivial_and_errors() {
        let p = pm1();
        let f = Curve::parse(&["1", "z", "z^2"], &p).unwrap();
        let g = grid(2.5, 20.0, 6);
        let rep = smt_hyperplanes_report(&f, &lines()[..3], &g, &Config::scan()).unwrap();
        assert!(rep.verdict && rep.lhs.iter().all(|v| *v == 0.0));
        assert!(rep.slack.iter().all(|v| *v >= 0.0));
        let mut bad = lines();
        bad[3] = hp(&[1.0, 1.0, 0.0]);
        assert!(matches!(
            smt_hyperplanes_report(&f, &bad, &g, &Config::scan()),
            Err(Error::NotGeneralPosition(_))
        ));
        assert!(matches!(
            smt_hyperplanes_report(&f, &lines()[..2], &g, &Config::scan()),
            Err(Error::NotEnoughTargets { .. })
        ));
    }

    #[test]
    fn lemma31_examples() {
        let p = pm1();
        let g = grid(2.5, 30.0, 8);
        let f = Curve::parse(&["1", "z"], &p).unwrap();
        let rep = lemma31_report(&f, &[hp(&[1.0, 0.0]), hp(&[0.0, 1.0])], &g, &Config::default()).unwrap();
        assert!(rep.verdict, "{:?}", rep.criteria);
        assert!(rep.get("N_W").unwrap().iter().all(|v| *v == 0.0));
        // A single admissible subset: the first link is an identity.
        for (a, b) in rep.lhs.iter().zip(rep.get("max_proximity").unwrap()) {
            assert!(a - b >= -1e-6 && (a - b).abs() < 1e-6);
        }

        let f = Curve::parse(&["1", "z", "z^2"], &p).unwrap();
        let rep = lemma31_report(&f, &lines(), &g, &Config::scan()).unwrap();
        assert!(rep.verdict, "{:?}", rep.criteria);
        assert!(rep.get("N_W").unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lemma31_counts_wronskian_zeros() {
        let p = pm1();
        let f = Curve::parse(&["1", "z", "z^3"], &p).unwrap();
        let hs = [hp(&[1.0, 0.0, 0.0]), hp(&[0.0, 1.0, 0.0]), hp(&[0.0, 0.0, 1.0])];
        let rep = lemma31_report(&f, &hs, &grid(2.5, 20.0, 6), &Config::scan()).unwrap();
        let nw = rep.get("N_W").unwrap();
        // W = 6z, one simple zero at the origin (entry radius r_0).
        assert!((nw[5] - (20.0f64 / 2.0).ln()).abs() < 1e-12);
        assert!(rep.verdict, "{:?}", rep.criteria);
    }

    #[test]
    fn wronskian_ledger() {
        let p = pm1();
        let f = Curve::parse(&["1", "z", "z^3"], &p).unwrap();
        let hs = [
            hp(&[1.0, 0.0, 0.0]),
            hp(&[0.0, 1.0, 0.0]),
            hp(&[0.0, 0.0, 1.0]),
            hp(&[16.0, -12.0, 1.0]),
        ];
        let ledger = wronskian_order_ledger(&f, &hs, 10.0, &Config::default()).unwrap();
        let origin = ledger.iter().find(|e| e.location.norm() < 1e-6).unwrap();
        assert_eq!(origin.multiplicities, vec![0, 1, 3, 0]);
        assert_eq!(origin.required, 1);
        assert_eq!(origin.wronskian_order, 1);
        // z^3 - 12z + 16 = (z - 2)^2 (z + 4): a double zero with nothing required.
        let two = ledger.iter().find(|e| (e.location - 2.0).norm() < 1e-6).unwrap();
        assert_eq!((two.multiplicities.clone(), two.required), (vec![0, 0, 0, 2], 0));
        assert!(ledger.iter().all(|e| e.holds));
    }

    #[test]
    fn degenerate_curve_is_rejected() {
        let p = pm1();
        let f = Curve::parse(&["1", "z", "2*z + 3"], &p).unwrap();
        assert!(lemma31_report(&f, &lines(), &grid(2.5, 5.0, 3), &Config::scan()).is_err());
    }

    #[test]
    fn theorem3_conics() {
        let p = pm1();
        let f = Curve::parse(&["1", "z", "z^2"], &p).unwrap();
        let ds: Vec<Hypersurface> = ["x0^2", "x1^2", "x2^2", "(x0+x1+x2)^2"]
            .iter()
            .map(|s| Hypersurface::parse(s, 3).unwrap())
            .collect();
        let rep = smt_hypersurfaces_report(&f, &ds, 3.0, &grid(2.5, 60.0, 10), &Config::scan()).unwrap();
        assert!(rep.verdict, "{:?}", rep.criteria);
        assert_eq!(rep.parameters["alpha"], "184832");
        assert!(matches!(
            smt_hypersurfaces_report(&f, &ds[..2], 3.0, &grid(2.5, 5.0, 3), &Config::scan()),
            Err(Error::NotEnoughTargets { .. })
        ));
        let trivial = smt_hypersurfaces_report(&f, &ds, 12.0, &grid(2.5, 10.0, 4), &Config::scan()).unwrap();
        assert!(trivial.lhs.iter().all(|v| *v <= 0.0) && trivial.verdict);
    }

    #[test]
    fn theorem3_dominates_theorem2_for_lines() {
        let p = pm1();
        let f = Curve::parse(&["1", "z", "z^2"], &p).unwrap();
        let g = grid(2.5, 30.0, 6);
        let cfg = Config::scan();
        let t2 = smt_hyperplanes_report(&f, &lines(), &g, &cfg).unwrap();
        let ds: Vec<Hypersurface> = lines().iter().map(Hypersurface::from_hyperplane).collect();
        let t3 = smt_hypersurfaces_report(&f, &ds, 0.5, &g, &cfg).unwrap();
        for (a, b) in t3.rhs.iter().zip(&t2.rhs) {
            assert!(a >= b);
        }
    }

    #[test]
    fn monomial_lift_examples() {
        let p = pm1();
        let f = Curve::parse(&["1", "z"], &p).unwrap();
        let qs = [
            Hypersurface::parse("x0", 2).unwrap(),
            Hypersurface::parse("x1", 2).unwrap(),
        ];
        let z = c(0.3, 1.7);
        let lift1 = monomial_lift(&f, &qs, 1).unwrap();
        assert_eq!(lift1.eval(z).unwrap(), vec![c(1.0, 0.0), z]);
        let lift2 = monomial_lift(&f, &qs, 2).unwrap();
        let v = lift2.eval(z).unwrap();
        assert_eq!(v.len(), 3);
        assert!((v[0] - 1.0).norm() < 1e-15 && (v[1] - z).norm() < 1e-15 && (v[2] - z * z).norm() < 1e-14);
        let many: Vec<Hypersurface> = (0..4).map(|_| qs[0].clone()).collect();
        assert!(matches!(
            monomial_lift(&f, &many, 7),
            Err(Error::SizeBudgetExceeded { .. })
        ));
        let mixed = [qs[0].clone(), Hypersurface::parse("x0*x1", 2).unwrap()];
        assert!(monomial_lift(&f, &mixed, 2).is_err());
    }

    #[test]
    fn monomial_lift_growth() {
        let p = pm1();
        let f = Curve::parse(&["1", "z"], &p).unwrap();
        let qs = [
            Hypersurface::parse("x0^2", 2).unwrap(),
            Hypersurface::parse("x1^2", 2).unwrap(),
            Hypersurface::parse("(x0 + x1)^2", 2).unwrap(),
        ];
        let lift = monomial_lift(&f, &qs, 2).unwrap();
        let cfg = Config::scan();
        let diffs: Vec<f64> = grid(2.5, 40.0, 8)
            .iter()
            .map(|&r| lift.characteristic(r, &cfg).unwrap() - 4.0 * f.characteristic(r, &cfg).unwrap())
            .collect();
        let spread = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - diffs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(diffs.iter().all(|d| *d <= 3.0) && spread < 1.0, "{diffs:?}");
    }
}
