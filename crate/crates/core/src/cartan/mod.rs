//! Holomorphic curves `f = (f_0 : … : f_N)` on the punctured plane and their
//! Nevanlinna-Cartan functionals against hyperplanes and hypersurfaces.
//!
//! Unlike the scalar functionals, `T_f`, `m_f` are plain averages over `∂Ω_r`
//! with no base-radius subtraction.

mod hypersurface;
mod position;
mod wronskian;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::domain::PuncturedPlane;
use crate::error::{Error, Result};
use crate::expr::{parse, Expr, Scaled};
use crate::quadrature::{omega_boundary_average, BoundaryAverage};
use crate::roots::{counting_function, locate_zeros, ZeroSet};

pub use hypersurface::{Hyperplane, Hypersurface, LinearFactor};
pub use position::{general_position_hyperplanes, general_position_hypersurfaces, max_proximity, PositionCheck};
pub use wronskian::{frame_deviation, transform, wronskian, wronskian_matrix_at, MAX_WRONSKIAN_SIZE};

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    components: Vec<Expr>,
    plane: PuncturedPlane,
}

impl Curve {
    pub fn new(components: Vec<Expr>, plane: &PuncturedPlane) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::InvalidInput("a curve needs at least two components".into()));
        }
        if components.iter().all(Expr::is_zero) {
            return Err(Error::InvalidInput("all curve components are identically zero".into()));
        }
        let m = plane.len();
        for e in &components {
            if let Some(&j) = e.singularities().iter().find(|&&j| j >= m) {
                return Err(Error::InvalidInput(format!(
                    "component refers to undeclared puncture index {j}"
                )));
            }
        }
        Ok(Curve {
            components,
            plane: plane.clone(),
        })
    }

    pub fn parse(components: &[&str], plane: &PuncturedPlane) -> Result<Self> {
        Curve::new(
            components.iter().map(|s| parse(s, plane)).collect::<Result<_>>()?,
            plane,
        )
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn plane(&self) -> &PuncturedPlane {
        &self.plane
    }

    /// Target dimension `N` of `P^N`.
    pub fn dimension(&self) -> usize {
        self.components.len() - 1
    }

    pub(crate) fn check_vars(&self, n_vars: usize) -> Result<()> {
        if n_vars != self.components.len() {
            return Err(Error::DimensionMismatch {
                expected: self.components.len(),
                got: n_vars,
            });
        }
        Ok(())
    }

    pub fn eval_scaled(&self, z: Complex64) -> Result<Vec<Scaled>> {
        self.components.iter().map(|e| e.eval_scaled(z)).collect()
    }

    pub fn eval(&self, z: Complex64) -> Result<Vec<Complex64>> {
        self.components.iter().map(|e| e.eval(z)).collect()
    }

    /// `log ‖f(z)‖` with the max norm.
    pub fn log_height(&self, z: Complex64) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for e in &self.components {
            best = best.max(e.eval_scaled(z)?.ln_abs());
        }
        Ok(best)
    }

    pub fn height(&self, z: Complex64) -> Result<f64> {
        Ok(self.log_height(z)?.exp())
    }

    /// `T_f(r)`: average of `log ‖f‖` over `∂Ω_r`.
    pub fn characteristic(&self, r: f64, cfg: &Config) -> Result<f64> {
        Ok(self.characteristic_detail(r, cfg)?.value)
    }

    pub fn characteristic_detail(&self, r: f64, cfg: &Config) -> Result<BoundaryAverage> {
        omega_boundary_average(&self.plane, r, |z| self.log_height(z), cfg)
    }

    /// Same point of `P^N`, represented by `g · f`.
    pub fn rescaled(&self, g: &Expr) -> Result<Self> {
        if !g.is_zero_free() {
            return Err(Error::InvalidInput(format!("rescaling factor {g} is not zero-free")));
        }
        Curve::new(
            self.components.iter().map(|e| g.clone() * e.clone()).collect(),
            &self.plane,
        )
    }

    /// Checks the reduced-representation condition at every zero of every
    /// component inside `Ω̄_r`: some other component must not vanish there.
    pub fn check_reduced(&self, r: f64, cfg: &Config) -> Result<()> {
        for (i, e) in self.components.iter().enumerate() {
            if e.is_zero() || e.as_const().is_some() {
                continue;
            }
            let zs = locate_zeros(e, &self.plane, r, cfg.root_tol)?;
            for rec in &zs.records {
                let z = rec.location;
                let probe = z + Complex64::new(1e-3, 0.0) / (1.0 + self.plane.entry_time(z)?);
                let scale = self.log_height(probe)?;
                let others = self
                    .components
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, f)| f.eval_scaled(z).map(|v| v.ln_abs()))
                    .collect::<Result<Vec<_>>>()?;
                if others.iter().all(|v| *v <= scale + (1e-9f64).ln()) {
                    return Err(Error::InvalidInput(format!("components have a common zero near {z}")));
                }
            }
        }
        Ok(())
    }

    /// Deterministic sample points in `Ω̄_{2 r_0}`, used by identity checks.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Complex64> {
        sample_points(&self.plane, count, seed)
    }
}

pub(crate) fn sample_points(plane: &PuncturedPlane, count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r0 = plane.base_radius();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z = Complex64::from_polar(
            2.0 * r0 * rng.gen::<f64>().sqrt(),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        if plane.entry_time(z).is_ok_and(|t| t <= 2.0 * r0) {
            out.push(z);
        }
    }
    out
}

/// A hyperplane or hypersurface target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Hyperplane(Hyperplane),
    Hypersurface(Hypersurface),
}

impl Target {
    pub fn degree(&self) -> u32 {
        match self {
            Target::Hyperplane(_) => 1,
            Target::Hypersurface(q) => q.degree(),
        }
    }

    pub fn n_vars(&self) -> usize {
        match self {
            Target::Hyperplane(h) => h.n_vars(),
            Target::Hypersurface(q) => q.n_vars(),
        }
    }

    /// Largest coefficient magnitude, used by the normalized proximity.
    pub fn norm(&self) -> f64 {
        match self {
            Target::Hyperplane(h) => h.norm(),
            Target::Hypersurface(q) => q.norm(),
        }
    }

    pub fn to_hypersurface(&self) -> Hypersurface {
        match self {
            Target::Hyperplane(h) => Hypersurface::from_hyperplane(h),
            Target::Hypersurface(q) => q.clone(),
        }
    }

    /// The scalar function `(a, f)` or `Q(f)`.
    pub fn compose(&self, f: &Curve) -> Result<Expr> {
        match self {
            Target::Hyperplane(h) => h.compose(f),
            Target::Hypersurface(q) => q.compose(f),
        }
    }
}

impl From<Hyperplane> for Target {
    fn from(h: Hyperplane) -> Self {
        Target::Hyperplane(h)
    }
}

impl From<Hypersurface> for Target {
    fn from(q: Hypersurface) -> Self {
        Target::Hypersurface(q)
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Hyperplane(h) => write!(f, "{h}"),
            Target::Hypersurface(q) => write!(f, "{q}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `log(‖f‖^d / |Q(f)|)` as written.
    #[default]
    Raw,
    /// `log(‖f‖^d ‖Q‖ / |Q(f)|)`, nonnegative at every point.
    Normalized,
}

/// A curve composed with a target, checked not to vanish identically.
#[derive(Debug, Clone)]
pub struct Composition<'a> {
    pub curve: &'a Curve,
    pub target: &'a Target,
    pub scalar: Expr,
}

impl<'a> Composition<'a> {
    pub fn new(curve: &'a Curve, target: &'a Target, cfg: &Config) -> Result<Self> {
        let scalar = target.compose(curve)?;
        if scalar.is_zero() {
            return Err(Error::TargetContainsCurve);
        }
        let d = f64::from(target.degree());
        let vanishes = |z: Complex64| -> Result<bool> {
            let v = scalar.eval_scaled(z)?.ln_abs();
            Ok(v <= d * curve.log_height(z)? + (1e-12f64).ln() + target.norm().ln())
        };
        let mut all = true;
        for z in curve.sample_points(20, cfg.seed) {
            if !vanishes(z)? {
                all = false;
                break;
            }
        }
        if all {
            let refined = curve.sample_points(3, cfg.seed.wrapping_add(1));
            if refined
                .into_iter()
                .map(vanishes)
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .all(|b| b)
            {
                return Err(Error::TargetContainsCurve);
            }
        }
        Ok(Composition { curve, target, scalar })
    }

    /// Pointwise `log(‖f‖^d / |Q(f)|)`, adjusted by the normalization.
    pub fn log_ratio(&self, z: Complex64, norm: Normalization) -> Result<f64> {
        let d = f64::from(self.target.degree());
        let base = d * self.curve.log_height(z)? - self.scalar.eval_scaled(z)?.ln_abs();
        Ok(match norm {
            Normalization::Raw => base,
            Normalization::Normalized => base + self.target.norm().ln(),
        })
    }

    /// `m_f(r, target)`.
    pub fn proximity(&self, r: f64, norm: Normalization, cfg: &Config) -> Result<f64> {
        Ok(self.proximity_detail(r, norm, cfg)?.value)
    }

    pub fn proximity_detail(&self, r: f64, norm: Normalization, cfg: &Config) -> Result<BoundaryAverage> {
        omega_boundary_average(self.curve.plane(), r, |z| self.log_ratio(z, norm), cfg)
    }

    /// Average of `log |Q(f)|` over `∂Ω_r`.
    pub fn log_scalar_average(&self, r: f64, cfg: &Config) -> Result<BoundaryAverage> {
        omega_boundary_average(self.curve.plane(), r, |z| Ok(self.scalar.eval_scaled(z)?.ln_abs()), cfg)
    }

    /// Zeros of the composed scalar in `Ω̄_{r_max}`.
    pub fn zeros(&self, r_max: f64, cfg: &Config) -> Result<ZeroSet> {
        locate_zeros(&self.scalar, self.curve.plane(), r_max, cfg.root_tol)
    }
}

pub fn proximity(f: &Curve, target: &Target, r: f64, norm: Normalization, cfg: &Config) -> Result<f64> {
    Composition::new(f, target, cfg)?.proximity(r, norm, cfg)
}

pub fn proximity_hyperplane(f: &Curve, h: &Hyperplane, r: f64, cfg: &Config) -> Result<f64> {
    proximity(f, &Target::Hyperplane(h.clone()), r, Normalization::Raw, cfg)
}

pub fn proximity_hypersurface(f: &Curve, q: &Hypersurface, r: f64, cfg: &Config) -> Result<f64> {
    proximity(f, &Target::Hypersurface(q.clone()), r, Normalization::Raw, cfg)
}

/// `N_f(r, target)`, or `N^δ_f` when a truncation is given.
pub fn counting_target(f: &Curve, target: &Target, r: f64, truncation: Option<u32>, cfg: &Config) -> Result<f64> {
    let comp = Composition::new(f, target, cfg)?;
    let zs = comp.zeros(r, cfg)?;
    counting_function(&zs, f.plane(), r, truncation)
}
