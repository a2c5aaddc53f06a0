//! Circle averages `(1/2π) ∫ log g(c + ρ e^{iθ}) dθ`.
//!
//! The base rule is the periodic trapezoid with node doubling, which is
//! spectrally accurate for integrands analytic near the circle. Integrands
//! built from `max` or `log⁺` have kinks, and zeros close to the circle give
//! near-singular logs; for those the trapezoid stalls and the average is
//! finished with adaptive Gauss-Kronrod panels.
//!
//! A node that lands on a zero (non-finite log, or an isolated spike of more
//! than `ln 1e13` past both neighbours) triggers a radius perturbation of
//! relative size `1e-6`, first inward and then outward. The average is taken
//! at two perturbed radii on the same side and extrapolated back to the
//! requested one.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::domain::{ContourSet, PuncturedPlane};
use crate::error::{Error, Result};

pub const PERTURBATION: f64 = 1e-6;
const MIN_NODES: usize = 16;
const DEFAULT_NODES: usize = 64;
const TRAPEZOID_LIMIT: usize = 4096;
const SPIKE: f64 = 29.933_606_208_922_594; // ln 1e13
const LOCALITY: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleSpec {
    pub center: Complex64,
    pub radius: f64,
    /// Starting node count for the trapezoid; a power of two, at least 16.
    pub node_count: usize,
}

impl CircleSpec {
    pub fn new(center: Complex64, radius: f64) -> Self {
        CircleSpec {
            center,
            radius,
            node_count: DEFAULT_NODES,
        }
    }

    pub fn with_nodes(mut self, node_count: usize) -> Self {
        self.node_count = node_count;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "circle radius {} must be positive",
                self.radius
            )));
        }
        if self.node_count < MIN_NODES || !self.node_count.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "node count {} must be a power of two and at least {MIN_NODES}",
                self.node_count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadMethod {
    Trapezoid,
    GaussKronrod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    /// Difference of the last two trapezoid stages, or the summed panel
    /// error estimate when the adaptive rule finished the job. The trapezoid
    /// stops only after two consecutive differences are below tolerance.
    pub est_error: f64,
    pub nodes_used: usize,
    /// Relative radius offset applied after a zero was hit on the circle.
    pub perturbation: Option<f64>,
    pub method: QuadMethod,
    /// Trapezoid estimates, one per doubling stage.
    pub stages: Vec<f64>,
}

impl QuadResult {
    pub fn perturbed(&self) -> bool {
        self.perturbation.is_some()
    }
}

enum Attempt {
    Done(QuadResult),
    Singular,
}

/// A node whose value jumps past both neighbours by more than `SPIKE`, while
/// the next neighbours out move by a small fraction of that jump. Kinks and
/// steep but smooth integrands change at least linearly across five nodes
/// and are not flagged.
fn is_spike(values: &[f64]) -> bool {
    let n = values.len();
    let at = |k: usize, off: isize| values[(k as isize + off).rem_euclid(n as isize) as usize];
    (0..n).any(|k| {
        let v = values[k];
        if !v.is_finite() {
            return true;
        }
        let (a, b) = (at(k, -1), at(k, 1));
        let jump = (a.min(b) - v).max(v - a.max(b));
        let outer = (at(k, -2) - a).abs().max((at(k, 2) - b).abs());
        jump > SPIKE && jump > LOCALITY * outer
    })
}

fn trapezoid<F>(
    g: &F,
    center: Complex64,
    radius: f64,
    start: usize,
    tol: f64,
    max_nodes: usize,
) -> Result<Option<Attempt>>
where
    F: Fn(Complex64) -> Result<f64>,
{
    let point = |theta: f64| {
        let (s, c) = theta.sin_cos();
        center + Complex64::new(radius * c, radius * s)
    };
    let mut n = start;
    let mut values = (0..n)
        .map(|k| g(point(TAU * k as f64 / n as f64)))
        .collect::<Result<Vec<_>>>()?;
    let mut used = n;
    let mut stages = vec![values.iter().sum::<f64>() / n as f64];
    if values.iter().any(|v| !v.is_finite()) {
        return Ok(Some(Attempt::Singular));
    }
    loop {
        let next = 2 * n;
        if next > TRAPEZOID_LIMIT || used + n > max_nodes {
            return Ok(None);
        }
        let mut merged = Vec::with_capacity(next);
        for (k, v) in values.iter().enumerate() {
            merged.push(*v);
            merged.push(g(point(TAU * (2 * k + 1) as f64 / next as f64))?);
        }
        used += n;
        n = next;
        values = merged;
        if n >= DEFAULT_NODES && is_spike(&values) {
            return Ok(Some(Attempt::Singular));
        }
        let estimate = values.iter().sum::<f64>() / n as f64;
        let last = stages.len() - 1;
        let err = (estimate - stages[last]).abs();
        // Kinked integrands converge irregularly; one small step is not enough.
        let settled = last > 0 && (stages[last] - stages[last - 1]).abs() <= tol;
        stages.push(estimate);
        if err <= tol && settled && n >= DEFAULT_NODES {
            return Ok(Some(Attempt::Done(QuadResult {
                value: estimate,
                est_error: err,
                nodes_used: used,
                perturbation: None,
                method: QuadMethod::Trapezoid,
                stages,
            })));
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// 15-point Kronrod rule on `[a, b]` with its embedded 7-point Gauss error.
fn gauss_kronrod<F>(f: &F, a: f64, b: f64) -> Result<Option<(f64, f64)>>
where
    F: Fn(f64) -> Result<f64>,
{
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut finite = fc.is_finite();
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(mid - dx)?, f(mid + dx)?);
        finite &= f1.is_finite() && f2.is_finite();
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    if !finite {
        return Ok(None);
    }
    Ok(Some((kronrod * half, ((kronrod - gauss) * half).abs())))
}

fn adaptive<F>(
    g: &F,
    center: Complex64,
    radius: f64,
    tol: f64,
    budget: usize,
    stages: Vec<f64>,
    spent: usize,
) -> Result<Attempt>
where
    F: Fn(Complex64) -> Result<f64>,
{
    let f = |theta: f64| {
        let (s, c) = theta.sin_cos();
        g(center + Complex64::new(radius * c, radius * s))
    };
    // The integral is divided by 2π at the end, so panel tolerances scale by it.
    let target = tol * TAU;
    let mut heap = BinaryHeap::new();
    let mut used = spent;
    let initial = 16;
    for k in 0..initial {
        let a = TAU * k as f64 / initial as f64;
        let b = TAU * (k + 1) as f64 / initial as f64;
        let Some((value, error)) = gauss_kronrod(&f, a, b)? else {
            return Ok(Attempt::Singular);
        };
        used += 15;
        heap.push(Panel { a, b, value, error });
    }
    let mut total_err: f64 = heap.iter().map(|p| p.error).sum();
    while total_err > target {
        if used + 30 > budget {
            return Err(Error::NoConvergence {
                max_nodes: budget,
                estimate: total_err / TAU,
            });
        }
        let worst = heap.pop().expect("panels are never exhausted");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            total_err -= worst.error;
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        let (Some(left), Some(right)) = (gauss_kronrod(&f, worst.a, mid)?, gauss_kronrod(&f, mid, worst.b)?) else {
            return Ok(Attempt::Singular);
        };
        used += 30;
        total_err += left.1 + right.1 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: left.0,
            error: left.1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: right.0,
            error: right.1,
        });
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = panels.iter().map(|p| p.value).sum::<f64>() / TAU;
    let est_error = panels.iter().map(|p| p.error).sum::<f64>() / TAU;
    Ok(Attempt::Done(QuadResult {
        value,
        est_error,
        nodes_used: used,
        perturbation: None,
        method: QuadMethod::GaussKronrod,
        stages,
    }))
}

fn average_once<F>(g: &F, spec: &CircleSpec, radius: f64, tol: f64, max_nodes: usize) -> Result<Attempt>
where
    F: Fn(Complex64) -> Result<f64>,
{
    match trapezoid(g, spec.center, radius, spec.node_count, tol, max_nodes)? {
        Some(done) => Ok(done),
        None => {
            let spent = (TRAPEZOID_LIMIT).min(max_nodes);
            adaptive(g, spec.center, radius, tol, max_nodes, Vec::new(), spent)
        }
    }
}

/// Average of `log_g` over the circle, where `log_g(z)` returns the
/// logarithm of a positive magnitude (`-inf` at zeros).
pub fn circle_log_average<F>(log_g: F, spec: &CircleSpec, tol: f64, max_nodes: usize) -> Result<QuadResult>
where
    F: Fn(Complex64) -> Result<f64>,
{
    spec.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    if let Attempt::Done(res) = average_once(&log_g, spec, spec.radius, tol, max_nodes)? {
        return Ok(res);
    }
    for offset in [-PERTURBATION, PERTURBATION] {
        if let Some(res) = one_sided(&log_g, spec, offset, tol, max_nodes)? {
            return Ok(res);
        }
    }
    Err(Error::ContourThroughZero { radius: spec.radius })
}

/// Averages at `ρ(1 + δ)` and `ρ(1 + 2δ)`, extrapolated linearly in `log ρ`
/// back to the requested radius. Between the contour and the offsets the
/// average is smooth in `log ρ` (linear for `log|g|`, slope the winding
/// number), and it is continuous across the zero.
fn one_sided<F>(log_g: &F, spec: &CircleSpec, offset: f64, tol: f64, max_nodes: usize) -> Result<Option<QuadResult>>
where
    F: Fn(Complex64) -> Result<f64>,
{
    let near = spec.radius * (1.0 + offset);
    let far = spec.radius * (1.0 + 2.0 * offset);
    let Attempt::Done(a) = average_once(log_g, spec, near, tol / 3.0, max_nodes)? else {
        return Ok(None);
    };
    let Attempt::Done(b) = average_once(log_g, spec, far, tol / 3.0, max_nodes)? else {
        return Ok(None);
    };
    let w = (1.0 + offset).ln() / ((1.0 + 2.0 * offset).ln() - (1.0 + offset).ln());
    Ok(Some(QuadResult {
        value: a.value - w * (b.value - a.value),
        est_error: (1.0 + w.abs()) * a.est_error + w.abs() * b.est_error,
        nodes_used: a.nodes_used + b.nodes_used,
        perturbation: Some(offset),
        method: a.method,
        stages: a.stages,
    }))
}

/// Sum of circle averages over a boundary, circles in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAverage {
    pub value: f64,
    pub circles: Vec<QuadResult>,
}

impl BoundaryAverage {
    pub fn perturbed(&self) -> bool {
        self.circles.iter().any(QuadResult::perturbed)
    }

    pub fn nodes_used(&self) -> usize {
        self.circles.iter().map(|c| c.nodes_used).sum()
    }
}

/// Averages over every circle of a contour set, each to an equal share of
/// `quad_tol`. Orientation flags are ignored: the averages use the `dθ`
/// measure.
pub fn contour_average<F>(contours: &ContourSet, log_g: F, cfg: &Config) -> Result<BoundaryAverage>
where
    F: Fn(Complex64) -> Result<f64>,
{
    let mut circles = Vec::with_capacity(1 + contours.inner.len());
    let tol = cfg.quad_tol / (1 + contours.inner.len()) as f64;
    for circle in contours.circles() {
        let spec = CircleSpec::new(circle.center, circle.radius);
        circles.push(circle_log_average(&log_g, &spec, tol, cfg.max_quad_nodes)?);
    }
    Ok(BoundaryAverage {
        value: circles.iter().map(|c| c.value).sum(),
        circles,
    })
}

/// Outer-circle average at radius `r` plus the `M` inner-circle averages at
/// radius `1/r`.
pub fn omega_boundary_average<F>(plane: &PuncturedPlane, r: f64, log_g: F, cfg: &Config) -> Result<BoundaryAverage>
where
    F: Fn(Complex64) -> Result<f64>,
{
    contour_average(&plane.boundary(r)?, log_g, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn origin(r: f64) -> CircleSpec {
        CircleSpec::new(c(0.0, 0.0), r)
    }

    /// Dense trapezoid with `2^16` nodes, as an independent reference.
    fn dense(g: impl Fn(Complex64) -> f64, spec: &CircleSpec) -> f64 {
        let n = 1 << 16;
        (0..n)
            .map(|k| g(spec.center + Complex64::from_polar(spec.radius, TAU * k as f64 / n as f64)))
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn constant_magnitude() {
        let res = circle_log_average(|z| Ok(z.norm().ln()), &origin(5.0), 1e-12, 1 << 20).unwrap();
        assert!((res.value - 5f64.ln()).abs() < 1e-12);
        assert!(res.est_error < 1e-12);
        assert!(!res.perturbed());
    }

    #[test]
    fn mean_value_identity_for_outside_zero() {
        let a = c(3.0, 0.0);
        let g = |z: Complex64| (z - a).norm().ln();
        let res = circle_log_average(|z| Ok(g(z)), &origin(2.0), 1e-12, 1 << 20).unwrap();
        assert!((res.value - 3f64.ln()).abs() < 1e-12);
        assert!((dense(g, &origin(2.0)) - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_on_the_circle_perturbs_the_radius() {
        let a = c(3.0, 0.0);
        let res = circle_log_average(|z| Ok((z - a).norm().ln()), &origin(3.0), 1e-9, 1 << 20).unwrap();
        assert!(res.perturbed());
        assert!((res.value - 3f64.ln()).abs() < 1e-6);

        // log max(r, |a|) is continuous at r = |a|, and the extrapolation
        // recovers it at the requested radius.
        assert!((res.value - 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn double_zero_on_the_circle_with_winding_inside() {
        // Average of log|z² (z - 3)²| on |z| = 3 is 2 log 3 + 2 log 3.
        let a = c(3.0, 0.0);
        let g = |z: Complex64| Ok(2.0 * z.norm().ln() + 2.0 * (z - a).norm().ln());
        let res = circle_log_average(g, &origin(3.0), 1e-10, 1 << 20).unwrap();
        assert!(res.perturbed());
        assert!((res.value - 4.0 * 3f64.ln()).abs() < 1e-9, "{}", res.value);
    }

    #[test]
    fn steep_kinks_are_not_spikes() {
        // log⁺|exp(z²)| on |z| = 30: smooth up to 900 with corners of slope 1800.
        let g = |z: Complex64| (z * z).re.max(0.0);
        let res = circle_log_average(|z| Ok(g(z)), &origin(30.0), 1e-9, 1 << 20).unwrap();
        assert!(!res.perturbed());
        assert!((res.value - 900.0 / std::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn near_zero_node_is_a_spike() {
        let mut values: Vec<f64> = (0..64).map(|k| (k as f64 * 0.1).sin()).collect();
        assert!(!is_spike(&values));
        values[10] = -40.0;
        assert!(is_spike(&values));
    }

    #[test]
    fn perturbation_bound() {
        let a = c(3.0, 0.0);
        let tol = 1e-7;
        let g = |z: Complex64| Ok((z - a).norm().ln());
        let lo = circle_log_average(g, &origin(3.0 * (1.0 - PERTURBATION)), tol, 1 << 20).unwrap();
        let hi = circle_log_average(g, &origin(3.0 * (1.0 + PERTURBATION)), tol, 1 << 20).unwrap();
        assert!((lo.value - hi.value).abs() < 10.0 * tol);
    }

    #[test]
    fn geometric_convergence_for_analytic_integrands() {
        let a = c(3.0, 1.0);
        let res = circle_log_average(|z| Ok((z - a).norm().ln()), &origin(2.0).with_nodes(16), 1e-14, 1 << 20).unwrap();
        assert_eq!(res.method, QuadMethod::Trapezoid);
        let errs: Vec<f64> = res.stages.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        for w in errs.windows(2) {
            if w[0] > 1e-14 {
                assert!(w[1] < 0.5 * w[0], "{errs:?}");
            }
        }
    }

    #[test]
    fn kinked_integrand_falls_back_to_panels() {
        // log⁺ of |exp(ρ⁻¹ e^{-iθ})| = max(0, cos θ / ρ): average 1/(πρ).
        let rho = 1.0 / 50.0;
        let g = |z: Complex64| Ok((z.inv().re).max(0.0));
        let res = circle_log_average(g, &origin(rho), 1e-10, 1 << 20).unwrap();
        assert_eq!(res.method, QuadMethod::GaussKronrod);
        assert!((res.value - 50.0 / std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let g = |z: Complex64| Ok((z.im - 0.3).abs().sqrt());
        let err = circle_log_average(g, &origin(1.0), 1e-13, 5000).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn rejects_bad_specs() {
        let g = |_: Complex64| Ok(0.0);
        assert!(circle_log_average(g, &origin(1.0).with_nodes(8), 1e-9, 1 << 20).is_err());
        assert!(circle_log_average(g, &origin(1.0).with_nodes(48), 1e-9, 1 << 20).is_err());
        assert!(circle_log_average(g, &origin(-1.0), 1e-9, 1 << 20).is_err());
        assert!(circle_log_average(g, &origin(1.0), 0.0, 1 << 20).is_err());
    }

    #[test]
    fn omega_boundary_examples() {
        let cfg = Config::default();
        let pm1 = PuncturedPlane::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let zero = omega_boundary_average(&pm1, 3.0, |_| Ok(0.0), &cfg).unwrap();
        assert_eq!(zero.value, 0.0);

        let logz = |z: Complex64| Ok(z.norm().ln());
        let v = omega_boundary_average(&pm1, 3.0, logz, &cfg).unwrap();
        assert!((v.value - 3f64.ln()).abs() < 1e-10);

        let p01 = PuncturedPlane::new(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let v = omega_boundary_average(&p01, 4.0, logz, &cfg).unwrap();
        assert!(v.value.abs() < 1e-10);
        assert_eq!(v.circles.len(), 3);
    }

    #[test]
    fn orientation_does_not_matter() {
        let cfg = Config::default();
        let plane = PuncturedPlane::new(vec![c(0.5, 0.5), c(-1.0, 0.0)]).unwrap();
        let contours = plane.boundary(5.0).unwrap();
        let g = |z: Complex64| Ok((z * z - c(0.3, 2.0)).norm().ln() + (z.re).max(0.0));
        let a = contour_average(&contours, g, &cfg).unwrap();
        let b = contour_average(&contours.reversed(), g, &cfg).unwrap();
        assert_eq!(a.value, b.value);
    }
}
