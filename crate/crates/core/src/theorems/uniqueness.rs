use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cartan::{
    general_position_hypersurfaces, Composition, Curve, Hyperplane, Hypersurface, PositionCheck, Target,
};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fit::{EnvelopeShape, POINT_TOLERANCE};
use crate::roots::{counting_function, locate_zeros};

use super::{per_radius, validate_grid, TheoremId, TheoremReport};

/// Largest fitted `B` in `deficit ≤ B·T_f + C` accepted as `o(T_f)`.
pub const LITTLE_O_LIMIT: f64 = 0.05;

/// `D = Σ_i H_i^n Q_i` together with its pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessConstruction {
    /// Dimension `N` of the target space.
    pub n_dim: u32,
    /// Exponent `n` on the hyperplanes.
    pub power: u32,
    /// Common degree `d` of the `Q_i`.
    pub degree: u32,
    pub hyperplanes: Vec<Hyperplane>,
    pub qs: Vec<Hypersurface>,
    /// `H_i^n Q_i`, with their linear factors.
    pub pieces: Vec<Hypersurface>,
    pub hypersurface: Hypersurface,
    pub position: PositionCheck,
}

impl UniquenessConstruction {
    /// `(n − (d + N + 1) N)`, the coefficient of `T_f`.
    pub fn coefficient(&self) -> i64 {
        i64::from(self.power) - i64::from((self.degree + self.n_dim + 1) * self.n_dim)
    }
}

/// Builds `D = Σ_{i=0}^N H_i^n Q_i`; needs `n > N(d + N + 1)` and the pieces
/// `H_i^n Q_i` in general position.
pub fn build_uniqueness_hypersurface(
    n_dim: u32,
    power: u32,
    degree: u32,
    hyperplanes: &[Hyperplane],
    qs: &[Hypersurface],
    seed: u64,
) -> Result<UniquenessConstruction> {
    let bound = n_dim * (degree + n_dim + 1);
    if power <= bound {
        return Err(Error::DegreeBoundViolated { n: power, bound });
    }
    let count = n_dim as usize + 1;
    for len in [hyperplanes.len(), qs.len()] {
        if len != count {
            return Err(Error::DimensionMismatch {
                expected: count,
                got: len,
            });
        }
    }
    if let Some(q) = qs.iter().find(|q| q.degree() != degree) {
        return Err(Error::InvalidInput(format!(
            "Q has degree {}, expected {degree}",
            q.degree()
        )));
    }
    let pieces = hyperplanes
        .iter()
        .zip(qs)
        .map(|(h, q)| Hypersurface::from_hyperplane(h).pow(power)?.mul(q))
        .collect::<Result<Vec<_>>>()?;
    let position = general_position_hypersurfaces(&pieces, n_dim as usize, seed)?;
    if !position.passed() {
        return Err(Error::NotGeneralPosition("the pieces H_i^n Q_i share a zero".into()));
    }
    let hypersurface = pieces[1..].iter().try_fold(pieces[0].clone(), |acc, p| acc.add(p))?;
    Ok(UniquenessConstruction {
        n_dim,
        power,
        degree,
        hyperplanes: hyperplanes.to_vec(),
        qs: qs.to_vec(),
        pieces,
        hypersurface,
        position,
    })
}

/// `D = Σ_i (Σ_{t ≤ i} x_t)^n x_i^d`.
pub fn example2(n_dim: u32, power: u32, degree: u32) -> Result<UniquenessConstruction> {
    let vars = n_dim as usize + 1;
    let hyperplanes = (0..vars)
        .map(|i| Hyperplane::real(&(0..vars).map(|t| if t <= i { 1.0 } else { 0.0 }).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    let qs = (0..vars)
        .map(|i| Hypersurface::from_hyperplane(&Hyperplane::coordinate(vars, i)).pow(degree))
        .collect::<Result<Vec<_>>>()?;
    build_uniqueness_hypersurface(n_dim, power, degree, &hyperplanes, &qs, 0)
}

fn check_dimension(f: &Curve, c: &UniquenessConstruction) -> Result<()> {
    if f.dimension() != c.n_dim as usize {
        return Err(Error::DimensionMismatch {
            expected: c.n_dim as usize,
            got: f.dimension(),
        });
    }
    Ok(())
}

fn construction_params(rep: &mut TheoremReport, c: &UniquenessConstruction) {
    rep.param("N", c.n_dim);
    rep.param("n", c.power);
    rep.param("d", c.degree);
    rep.param("D", c.hypersurface.to_string());
    rep.param("pieces", c.pieces.iter().map(ToString::to_string).collect::<Vec<_>>());
}

/// `(n − (d+N+1)N) T_f + Σ_i (N_f(r, D_i) − N^N_f(r, D_i)) ≤ N^N_f(r, D) + o(T_f)`,
/// with `o(T_f)` read as a fitted `B·T_f + C` with `B < 0.05`.
pub fn uniqueness_inequality_report(
    f: &Curve,
    c: &UniquenessConstruction,
    r_grid: &[f64],
    cfg: &Config,
) -> Result<TheoremReport> {
    validate_grid(f.plane(), r_grid)?;
    check_dimension(f, c)?;
    let r_max = *r_grid.last().unwrap();
    let trunc = c.n_dim;
    let pieces: Vec<Target> = c.pieces.iter().cloned().map(Target::Hypersurface).collect();
    let whole = Target::Hypersurface(c.hypersurface.clone());
    let piece_zeros = pieces
        .iter()
        .map(|t| Composition::new(f, t, cfg)?.zeros(r_max, cfg))
        .collect::<Result<Vec<_>>>()?;
    let d_zeros = Composition::new(f, &whole, cfg)?.zeros(r_max, cfg)?;
    let rows = per_radius(r_grid, |r| {
        let t = f.characteristic(r, cfg)?;
        let mut excess = 0.0;
        for zs in &piece_zeros {
            excess += counting_function(zs, f.plane(), r, None)? - counting_function(zs, f.plane(), r, Some(trunc))?;
        }
        let nd = counting_function(&d_zeros, f.plane(), r, Some(trunc))?;
        Ok([t, excess, nd])
    })?;

    let k = c.coefficient() as f64;
    let mut rep = TheoremReport::new(TheoremId::UniquenessInequality, r_grid);
    rep.sides(
        rows.iter().map(|row| k * row[0] + row[1]).collect(),
        rows.iter().map(|row| row[2]).collect(),
        false,
    );
    rep.series.insert("T_f".into(), rows.iter().map(|row| row[0]).collect());
    rep.series
        .insert("piece_excess".into(), rows.iter().map(|row| row[1]).collect());
    construction_params(&mut rep, c);
    rep.param(
        "curve",
        f.components().iter().map(ToString::to_string).collect::<Vec<_>>(),
    );
    rep.param("zeros_of_D", d_zeros.total_multiplicity());
    rep.param("little_o_limit", LITTLE_O_LIMIT);
    let idx = rep.check_envelope(
        "lhs <= N^N_f(r, D) + B T_f + C",
        "lhs",
        "rhs",
        "T_f",
        EnvelopeShape::LinearInT,
    )?;
    rep.check_coefficient("fitted B < 0.05", idx, LITTLE_O_LIMIT)?;
    Ok(rep.finish())
}

/// Outcome of the uniqueness test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    /// `f` and `g` agree on the preimages and at every probe.
    Consistent,
    /// No preimage points inside `Ω̄_r`: the hypothesis carries no content.
    Vacuous,
    /// Agreement on the preimages, yet `f ≢ g`: the inequality chain must
    /// break, and the report records where.
    Contradiction,
}

/// Projective distance `max_{α<β} |f_α g_β − f_β g_α| / (‖f‖ ‖g‖)`.
fn projective_deviation(f: &[Complex64], g: &[Complex64]) -> f64 {
    let nf = f.iter().fold(0.0, |m: f64, v| m.max(v.norm()));
    let ng = g.iter().fold(0.0, |m: f64, v| m.max(v.norm()));
    let mut worst: f64 = 0.0;
    for a in 0..f.len() {
        for b in a + 1..f.len() {
            worst = worst.max((f[a] * g[b] - f[b] * g[a]).norm());
        }
    }
    worst / (nf * ng)
}

/// Tests the hypothesis `f = g` on `f^{-1}(D) ∪ g^{-1}(D)` inside
/// `Ω̄_{r_max}` and decides between `f ≡ g`, a vacuous hypothesis and a
/// contradiction certificate.
pub fn uniqueness_decision(
    f: &Curve,
    g: &Curve,
    c: &UniquenessConstruction,
    r_grid: &[f64],
    agreement_tol: f64,
    cfg: &Config,
) -> Result<TheoremReport> {
    validate_grid(f.plane(), r_grid)?;
    check_dimension(f, c)?;
    check_dimension(g, c)?;
    if f.plane() != g.plane() {
        return Err(Error::InvalidInput("curves live on different punctured planes".into()));
    }
    let bound = c.n_dim * (c.degree + c.n_dim + 3);
    if c.power <= bound {
        return Err(Error::DegreeBoundViolated { n: c.power, bound });
    }
    let r_max = *r_grid.last().unwrap();
    let target = Target::Hypersurface(c.hypersurface.clone());
    let zf = Composition::new(f, &target, cfg)?.zeros(r_max, cfg)?;
    let zg = Composition::new(g, &target, cfg)?.zeros(r_max, cfg)?;

    let mut worst_on_preimage: f64 = 0.0;
    for rec in zf.records.iter().chain(&zg.records) {
        let z = rec.location;
        let deviation = projective_deviation(&f.eval(z)?, &g.eval(z)?);
        if deviation > agreement_tol {
            return Err(Error::AgreementViolated { location: z, deviation });
        }
        worst_on_preimage = worst_on_preimage.max(deviation);
    }
    let mut probe_deviation: f64 = 0.0;
    for z in f.sample_points(32, cfg.seed) {
        probe_deviation = probe_deviation.max(projective_deviation(&f.eval(z)?, &g.eval(z)?));
    }
    let differ = probe_deviation > agreement_tol;
    let preimages = zf.records.len() + zg.records.len();
    let decision = match (differ, preimages) {
        (false, _) => Decision::Consistent,
        (true, 0) => Decision::Vacuous,
        (true, _) => Decision::Contradiction,
    };

    let n = f64::from(c.n_dim);
    let k = c.coefficient() as f64;
    let rows = per_radius(r_grid, |r| {
        Ok([
            f.characteristic(r, cfg)?,
            g.characteristic(r, cfg)?,
            counting_function(&zf, f.plane(), r, Some(c.n_dim))?,
        ])
    })?;
    let mut rep = TheoremReport::new(TheoremId::UniquenessDecision, r_grid);
    rep.sides(
        rows.iter().map(|row| k * row[0]).collect(),
        rows.iter().map(|row| n * (row[0] + row[1])).collect(),
        false,
    );
    rep.series.insert("T_f".into(), rows.iter().map(|row| row[0]).collect());
    rep.series.insert("T_g".into(), rows.iter().map(|row| row[1]).collect());
    rep.series
        .insert("N_trunc_D_f".into(), rows.iter().map(|row| row[2]).collect());
    construction_params(&mut rep, c);
    rep.param("f", f.components().iter().map(ToString::to_string).collect::<Vec<_>>());
    rep.param("g", g.components().iter().map(ToString::to_string).collect::<Vec<_>>());
    rep.param("agreement_tol", agreement_tol);
    rep.param("preimage_points", preimages);
    rep.param("preimage_deviation", worst_on_preimage);
    rep.param("probe_deviation", probe_deviation);
    rep.param("decision", decision);

    match decision {
        Decision::Consistent => {
            rep.note("f and g agree on the preimages and at every probe: consistent with f ≡ g");
            rep.flag("consistent with f ≡ g", true);
        }
        Decision::Vacuous => {
            rep.note(format!(
                "no zeros of D∘f or D∘g inside the closed region of radius {r_max}: the agreement hypothesis is vacuous and no contradiction is derivable"
            ));
            rep.flag("vacuous hypothesis", true);
        }
        Decision::Contradiction => contradiction_certificate(&mut rep, f, g, r_max, cfg)?,
    }
    Ok(rep.finish())
}

/// Evaluates each link of `N^N_f(r, D) ≤ N·N(r, f_α g_β − f_β g_α) ≤
/// N(T_f + T_g) + O(1)` and `(n − (d+N+1)N) T_f ≤ N^N_f(r, D) + o(T_f)`.
fn contradiction_certificate(rep: &mut TheoremReport, f: &Curve, g: &Curve, r_max: f64, cfg: &Config) -> Result<()> {
    let dim = f.components().len();
    let mut cross = None;
    'pairs: for a in 0..dim {
        for b in a + 1..dim {
            let e = f.components()[a].clone() * g.components()[b].clone()
                - f.components()[b].clone() * g.components()[a].clone();
            for z in f.sample_points(8, cfg.seed) {
                if e.eval(z)?.norm() > 0.0 {
                    cross = Some(e);
                    break 'pairs;
                }
            }
        }
    }
    let cross: Expr = cross.ok_or_else(|| Error::InvalidInput("every cross term vanishes".into()))?;
    let zeros = locate_zeros(&cross, f.plane(), r_max, cfg.root_tol)?;
    let n_cross = rep
        .r_grid
        .iter()
        .map(|&r| counting_function(&zeros, f.plane(), r, None))
        .collect::<Result<Vec<f64>>>()?;
    let n_dim = rep.parameters["N"].as_f64().unwrap_or(1.0);
    let nd = rep.series["N_trunc_D_f"].clone();
    let first = nd.iter().zip(&n_cross).all(|(a, b)| *a <= n_dim * b + POINT_TOLERANCE);
    rep.series.insert("N_cross".into(), n_cross);
    rep.series
        .insert("T_f_plus_T_g".into(), rep.rhs.iter().map(|v| v / n_dim).collect());
    rep.flag("N^N_f(r, D) <= N * N_cross", first);
    rep.check_envelope(
        "N_cross <= T_f + T_g + O(1)",
        "N_cross",
        "T_f_plus_T_g",
        "T_f",
        EnvelopeShape::Constant,
    )?;
    rep.check_envelope(
        "(n-(d+N+1)N) T_f <= N^N_f(r, D) + o(T_f)",
        "lhs",
        "N_trunc_D_f",
        "T_f",
        EnvelopeShape::LinearInT,
    )?;
    let last = rep.r_grid.len() - 1;
    let closes = rep.lhs[last] <= rep.rhs[last];
    rep.flag("(n-(d+N+1)N) T_f <= N (T_f + T_g) at the largest radius", closes);
    for crit in &rep.criteria.clone() {
        if !crit.passed() {
            rep.note(format!("inequality fails: {crit:?}"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::PuncturedPlane;

    fn pm1() -> PuncturedPlane {
        PuncturedPlane::new(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]).unwrap()
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn example2_small() {
        let c = example2(1, 4, 1).unwrap();
        assert_eq!(c.hypersurface.degree(), 5);
        assert_eq!(c.hypersurface.terms().len(), 6);
        assert!(matches!(
            c.position,
            PositionCheck::Exact {
                in_general_position: true
            }
        ));
        let x = [Complex64::new(0.3, -1.0), Complex64::new(2.0, 0.5)];
        let direct = x[0].powu(5) + (x[0] + x[1]).powu(4) * x[1];
        assert!((c.hypersurface.eval(&x) - direct).norm() < 1e-12 * direct.norm());
    }

    #[test]
    fn example2_plane() {
        let c = example2(2, 9, 1).unwrap();
        assert_eq!(c.hypersurface.degree(), 10);
        assert!(c.hypersurface.terms().keys().all(|e| e.iter().sum::<u32>() == 10));
        assert!(c.position.passed());
    }

    #[test]
    fn degree_bound_is_strict() {
        assert_eq!(
            example2(1, 3, 1).unwrap_err(),
            Error::DegreeBoundViolated { n: 3, bound: 3 }
        );
        assert!(matches!(example2(2, 8, 1), Err(Error::DegreeBoundViolated { .. })));
    }

    #[test]
    fn dependent_pieces_are_rejected() {
        let h = [
            Hyperplane::real(&[1.0, 0.0]).unwrap(),
            Hyperplane::real(&[1.0, 0.0]).unwrap(),
        ];
        let q = [
            Hypersurface::parse("x0", 2).unwrap(),
            Hypersurface::parse("x0", 2).unwrap(),
        ];
        assert!(matches!(
            build_uniqueness_hypersurface(1, 4, 1, &h, &q, 0),
            Err(Error::NotGeneralPosition(_))
        ));
    }

    #[test]
    fn inequality_on_essential_curve() {
        let p = pm1();
        let f = Curve::parse(&["1", "exp(1/(z-1))"], &p).unwrap();
        let c = example2(1, 4, 1).unwrap();
        let rep = uniqueness_inequality_report(&f, &c, &grid(2.5, 12.0, 6), &Config::scan()).unwrap();
        assert!(rep.verdict, "{:?}", rep.criteria);
        assert!(rep.get("piece_excess").unwrap().iter().any(|v| *v > 0.0));
    }

    #[test]
    fn inequality_is_representation_independent() {
        let p = pm1();
        let f = Curve::parse(&["1", "z"], &p).unwrap();
        let g = crate::expr::parse("exp(z/5)", &p).unwrap();
        let c = example2(1, 4, 1).unwrap();
        let gr = grid(2.5, 10.0, 5);
        let a = uniqueness_inequality_report(&f, &c, &gr, &Config::scan()).unwrap();
        let b = uniqueness_inequality_report(&f.rescaled(&g).unwrap(), &c, &gr, &Config::scan()).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn decision_examples() {
        let p = pm1();
        let c = example2(1, 6, 1).unwrap();
        let gr = grid(2.5, 8.0, 4);
        let cfg = Config::scan();
        let f = Curve::parse(&["1", "z"], &p).unwrap();
        let rep = uniqueness_decision(&f, &f.clone(), &c, &gr, 1e-6, &cfg).unwrap();
        assert_eq!(rep.parameters["decision"], "consistent");
        assert!(rep.verdict);

        let g = Curve::parse(&["1", "z + 0.001"], &p).unwrap();
        assert!(matches!(
            uniqueness_decision(&f, &g, &c, &gr, 1e-6, &cfg),
            Err(Error::AgreementViolated { .. })
        ));

        let far = Curve::parse(&["1", "z/1000"], &p).unwrap();
        let scaled = Curve::parse(&["1", "z/500"], &p).unwrap();
        let rep = uniqueness_decision(&far, &scaled, &c, &gr, 1e-6, &cfg).unwrap();
        assert_eq!(rep.parameters["decision"], "vacuous");

        assert!(matches!(
            uniqueness_decision(&f, &f, &example2(1, 5, 1).unwrap(), &gr, 1e-6, &cfg),
            Err(Error::DegreeBoundViolated { n: 5, bound: 5 })
        ));
    }
}
