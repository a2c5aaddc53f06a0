//! Scalar Nevanlinna functionals on the punctured plane.
//!
//! Here `m_0` subtracts the averages on `∂Ω_{r_0}`, and `N_0` carries no
//! `1/2π` prefactor, so that Jensen's formula
//!
//! ```text
//! N_0(r, 1/f) - N_0(r, f) = A(r) - A(r_0),   A(t) = Σ_{∂Ω_t} avg log|f|
//! ```
//!
//! holds exactly. `jensen_residual` returns the difference of the two sides.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::domain::PuncturedPlane;
use crate::error::{Error, Result};
use crate::expr::MeromorphicFunction;
use crate::quadrature::{omega_boundary_average, BoundaryAverage};
use crate::roots::{counting_function, locate_zeros, ZeroRecord, ZeroSet};

/// Zeros and poles of a meromorphic function in `Ω̄_r`, with common zeros of
/// numerator and denominator cancelled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divisor {
    pub zeros: ZeroSet,
    pub poles: ZeroSet,
}

/// Distance under which a numerator zero and a denominator zero are taken
/// to be the same point.
const MATCH: f64 = 1e-7;

impl Divisor {
    pub fn locate(f: &MeromorphicFunction, plane: &PuncturedPlane, r: f64, cfg: &Config) -> Result<Self> {
        let mut zeros = locate_zeros(&f.numerator, plane, r, cfg.root_tol)?;
        let mut poles = locate_zeros(&f.denominator, plane, r, cfg.root_tol)?;
        for pole in &mut poles.records {
            if let Some(zero) = zeros
                .records
                .iter_mut()
                .find(|z| z.multiplicity > 0 && (z.location - pole.location).norm() < MATCH)
            {
                let common = zero.multiplicity.min(pole.multiplicity);
                zero.multiplicity -= common;
                pole.multiplicity -= common;
            }
        }
        let keep = |set: &mut ZeroSet| set.records.retain(|z: &ZeroRecord| z.multiplicity > 0);
        keep(&mut zeros);
        keep(&mut poles);
        Ok(Divisor { zeros, poles })
    }

    fn check(&self, r: f64) -> Result<()> {
        let limit = self.zeros.search_radius.min(self.poles.search_radius);
        if r > limit * (1.0 + 1e-9) {
            return Err(Error::InvalidInput(format!("radius {r} exceeds located range {limit}")));
        }
        Ok(())
    }

    /// `N_0(r, f)`, counting poles.
    pub fn pole_counting(&self, plane: &PuncturedPlane, r: f64) -> Result<f64> {
        self.check(r)?;
        counting_function(&self.poles, plane, r, None)
    }

    /// `N_0(r, 1/f)`, counting zeros.
    pub fn zero_counting(&self, plane: &PuncturedPlane, r: f64) -> Result<f64> {
        self.check(r)?;
        counting_function(&self.zeros, plane, r, None)
    }
}

fn log_plus_average(f: &MeromorphicFunction, plane: &PuncturedPlane, r: f64, cfg: &Config) -> Result<BoundaryAverage> {
    omega_boundary_average(plane, r, |z: Complex64| Ok(f.ln_abs(z)?.max(0.0)), cfg)
}

fn log_average(f: &MeromorphicFunction, plane: &PuncturedPlane, r: f64, cfg: &Config) -> Result<BoundaryAverage> {
    omega_boundary_average(plane, r, |z: Complex64| f.ln_abs(z), cfg)
}

/// `m_0(r, f)`: `log⁺|f|` averaged over `∂Ω_r` minus the same over `∂Ω_{r_0}`.
pub fn proximity_m0(f: &MeromorphicFunction, plane: &PuncturedPlane, r: f64, cfg: &Config) -> Result<f64> {
    plane.check_radius(r)?;
    let at_r = log_plus_average(f, plane, r, cfg)?;
    let at_base = log_plus_average(f, plane, plane.base_radius(), cfg)?;
    Ok(at_r.value - at_base.value)
}

/// `N_0(r, f)` from the poles of `f` in `Ω̄_r`.
pub fn counting_n0(f: &MeromorphicFunction, plane: &PuncturedPlane, r: f64, cfg: &Config) -> Result<f64> {
    plane.check_radius(r)?;
    Divisor::locate(f, plane, r, cfg)?.pole_counting(plane, r)
}

/// `T_0(r, f) = N_0(r, f) + m_0(r, f)`.
pub fn characteristic_t0(f: &MeromorphicFunction, plane: &PuncturedPlane, r: f64, cfg: &Config) -> Result<f64> {
    Ok(counting_n0(f, plane, r, cfg)? + proximity_m0(f, plane, r, cfg)?)
}

/// Both sides of Jensen's formula at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenSides {
    pub counting: f64,
    pub integral: f64,
    pub perturbed: bool,
}

impl JensenSides {
    pub fn residual(&self) -> f64 {
        self.counting - self.integral
    }
}

pub fn jensen_sides(
    f: &MeromorphicFunction,
    plane: &PuncturedPlane,
    divisor: &Divisor,
    r: f64,
    cfg: &Config,
) -> Result<JensenSides> {
    plane.check_radius(r)?;
    let counting = divisor.zero_counting(plane, r)? - divisor.pole_counting(plane, r)?;
    let at_r = log_average(f, plane, r, cfg)?;
    let at_base = log_average(f, plane, plane.base_radius(), cfg)?;
    Ok(JensenSides {
        counting,
        integral: at_r.value - at_base.value,
        perturbed: at_r.perturbed() || at_base.perturbed(),
    })
}

/// `N_0(r,1/f) - N_0(r,f)` minus the boundary-average side; zero up to
/// quadrature error.
pub fn jensen_residual(f: &MeromorphicFunction, plane: &PuncturedPlane, r: f64, cfg: &Config) -> Result<f64> {
    let divisor = Divisor::locate(f, plane, r, cfg)?;
    Ok(jensen_sides(f, plane, &divisor, r, cfg)?.residual())
}

/// `m_0(r, f'/f)`, with `f'/f` formed symbolically.
pub fn log_derivative_proximity(f: &MeromorphicFunction, plane: &PuncturedPlane, r: f64, cfg: &Config) -> Result<f64> {
    let q = f.log_derivative();
    if q.numerator.is_zero() {
        plane.check_radius(r)?;
        return Ok(0.0);
    }
    proximity_m0(&q, plane, r, cfg)
}

/// A functional sampled on an increasing grid of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSeries {
    pub label: String,
    pub r_grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl ScalarSeries {
    /// Evaluates `g` at every radius, in parallel, keeping grid order.
    pub fn sample<F>(label: &str, r_grid: &[f64], g: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        if r_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("radius grid must be strictly increasing".into()));
        }
        let values = r_grid.par_iter().map(|&r| g(r)).collect::<Result<Vec<_>>>()?;
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("{label} produced non-finite value {v}")));
        }
        Ok(ScalarSeries {
            label: label.to_owned(),
            r_grid: r_grid.to_vec(),
            values,
        })
    }
}

/// `m_0`, `N_0` and `T_0` of `f` over a grid, sharing one pole search.
pub fn characteristic_series(
    f: &MeromorphicFunction,
    plane: &PuncturedPlane,
    r_grid: &[f64],
    cfg: &Config,
) -> Result<[ScalarSeries; 3]> {
    let r_max = r_grid.iter().copied().fold(plane.base_radius(), f64::max);
    let divisor = Divisor::locate(f, plane, r_max, cfg)?;
    let base = log_plus_average(f, plane, plane.base_radius(), cfg)?.value;
    let m = ScalarSeries::sample("m_0", r_grid, |r| Ok(log_plus_average(f, plane, r, cfg)?.value - base))?;
    let n = ScalarSeries::sample("N_0", r_grid, |r| divisor.pole_counting(plane, r))?;
    let t = ScalarSeries {
        label: "T_0".into(),
        r_grid: r_grid.to_vec(),
        values: m.values.iter().zip(&n.values).map(|(a, b)| a + b).collect(),
    };
    Ok([m, n, t])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pm1() -> PuncturedPlane {
        PuncturedPlane::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap()
    }

    fn mf(num: &str, den: &str) -> MeromorphicFunction {
        MeromorphicFunction::parse(num, den, &pm1()).unwrap()
    }

    fn cfg() -> Config {
        Config::default()
    }

    /// `m_0` by a dense trapezoid rule over the six circles.
    fn dense_m0(f: &MeromorphicFunction, p: &PuncturedPlane, r: f64) -> f64 {
        let n = 1 << 17;
        let total = |t: f64| {
            let mut circles = vec![(c(0.0, 0.0), t)];
            circles.extend(p.punctures().iter().map(|&cj| (cj, 1.0 / t)));
            circles
                .iter()
                .map(|&(center, rho)| {
                    (0..n)
                        .map(|k| {
                            let z = center + Complex64::from_polar(rho, std::f64::consts::TAU * k as f64 / n as f64);
                            f.ln_abs(z).unwrap().max(0.0)
                        })
                        .sum::<f64>()
                        / n as f64
                })
                .sum::<f64>()
        };
        total(r) - total(p.base_radius())
    }

    #[test]
    fn proximity_examples() {
        let p = pm1();
        assert_eq!(proximity_m0(&mf("1", "1"), &p, 7.0, &cfg()).unwrap(), 0.0);

        // Inner circle about 1 carries log|f| = r cos θ, giving r/π; the
        // base-radius circles subtract 2/π plus the outer-circle share.
        let f = mf("exp(1/(z-1))", "1");
        let v = proximity_m0(&f, &p, 50.0, &cfg()).unwrap();
        assert!((v - dense_m0(&f, &p, 50.0)).abs() < 1e-6);
        assert!((v - 48.0 / PI).abs() < 0.02 * 48.0 / PI, "{v}");

        // Outer circles give log 10 - log 2; the inner circles of radius
        // 1/r_0 = 1/2 subtract a further 0.25.
        let f = mf("z", "1");
        let v = proximity_m0(&f, &p, 10.0, &cfg()).unwrap();
        assert!((v - dense_m0(&f, &p, 10.0)).abs() < 1e-6);
        assert!((v - 5f64.ln()).abs() < 0.3);
    }

    #[test]
    fn counting_examples() {
        let p = pm1();
        assert_eq!(counting_n0(&mf("z", "1"), &p, 9.0, &cfg()).unwrap(), 0.0);
        let v = counting_n0(&mf("1", "(z-3)^2"), &p, 9.0, &cfg()).unwrap();
        assert!((v - 2.0 * 3f64.ln()).abs() < 1e-9);
        let v = counting_n0(&mf("1", "(z-3)*(z-4)"), &p, 3.5, &cfg()).unwrap();
        assert!((v - (3.5f64 / 3.0).ln()).abs() < 1e-9);
    }

    #[test]
    fn common_zeros_cancel() {
        let p = pm1();
        let f = mf("(z-3)^2*(z+4)", "(z-3)*(z-5)");
        let d = Divisor::locate(&f, &p, 10.0, &cfg()).unwrap();
        assert_eq!(d.zeros.total_multiplicity(), 2);
        assert_eq!(d.poles.total_multiplicity(), 1);
        assert!((d.poles.records[0].location - c(5.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn characteristic_examples() {
        let p = pm1();
        assert_eq!(characteristic_t0(&mf("3", "1"), &p, 12.0, &cfg()).unwrap(), 0.0);
        let f = mf("z", "1");
        let v = characteristic_t0(&f, &p, 10.0, &cfg()).unwrap();
        assert!((v - dense_m0(&f, &p, 10.0)).abs() < 1e-6);
        let f = mf("exp(1/(z-1))", "1");
        let v = characteristic_t0(&f, &p, 50.0, &cfg()).unwrap();
        assert!((v - dense_m0(&f, &p, 50.0)).abs() < 1e-6);
    }

    #[test]
    fn jensen_examples() {
        let p = pm1();
        assert_eq!(jensen_residual(&mf("7", "1"), &p, 9.0, &cfg()).unwrap(), 0.0);
        assert!(jensen_residual(&mf("z-3", "1"), &p, 10.0, &cfg()).unwrap().abs() < 1e-8);
        assert!(jensen_residual(&mf("z-3", "z-5"), &p, 20.0, &cfg()).unwrap().abs() < 1e-8);
    }

    #[test]
    fn jensen_holds_with_punctured_zeros_and_essential_singularities() {
        let p = pm1();
        for (num, den) in [
            ("(z-0.5)*(z+3)^2", "z-4*i"),
            ("exp(1/(z-1)) - 2", "1"),
            ("z*exp(1/(z+1))", "(z-1.5)^2"),
            ("(1/(z-1))^2 + 1", "z-6"),
        ] {
            for r in [2.5, 7.0, 15.0] {
                let res = jensen_residual(&mf(num, den), &p, r, &cfg()).unwrap();
                assert!(res.abs() < 1e-8, "{num}/{den} at r={r}: {res}");
            }
        }
    }

    #[test]
    fn log_derivative_examples() {
        let p = pm1();
        assert_eq!(
            log_derivative_proximity(&mf("exp(5)", "1"), &p, 10.0, &cfg()).unwrap(),
            0.0
        );

        let f = mf("z-3", "1");
        let r = 100.0;
        let v = log_derivative_proximity(&f, &p, r, &cfg()).unwrap();
        let t = characteristic_t0(&f, &p, r, &cfg()).unwrap();
        assert!(v >= 0.0 && v <= 3.0 * (r.ln() + t.ln()) + 20.0);

        let f = mf("exp(1/(z-1))", "1");
        let ratios: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&r| {
                let v = log_derivative_proximity(&f, &p, r, &cfg()).unwrap();
                let t = characteristic_t0(&f, &p, r, &cfg()).unwrap();
                v / (r.ln() + t.ln())
            })
            .collect();
        assert!(ratios.iter().all(|x| x.is_finite() && *x < 10.0), "{ratios:?}");
    }

    #[test]
    fn series_are_monotone_and_nonnegative() {
        let p = pm1();
        let grid: Vec<f64> = (0..12).map(|k| 2.0 + 4.0 * k as f64).collect();
        for (num, den) in [("z-3", "z-5"), ("exp(1/(z-1))", "z^2+9"), ("z^3", "1")] {
            let [m, n, t] = characteristic_series(&mf(num, den), &p, &grid, &Config::scan()).unwrap();
            assert!(m.values.iter().all(|v| *v >= -1e-6));
            assert!(n.values.iter().all(|v| *v >= 0.0));
            assert!(n.values.windows(2).all(|w| w[1] >= w[0]));
            assert!(
                t.values.windows(2).all(|w| w[1] >= w[0] - 1e-6),
                "{num}/{den}: {:?}",
                t.values
            );
        }
    }

    #[test]
    fn first_main_theorem_at_scalar_level() {
        let p = pm1();
        let a = 2.0f64;
        let grid: Vec<f64> = (0..10).map(|k| 2.5 + 10.0 * k as f64).collect();
        for (num, den) in [("z^2", "z-5"), ("exp(1/(z-1))", "1")] {
            let f = mf(num, den);
            let shifted = MeromorphicFunction::new(
                f.denominator.clone(),
                f.numerator.clone() - f.denominator.scale(c(a, 0.0)),
            )
            .unwrap();
            let [_, _, tf] = characteristic_series(&f, &p, &grid, &Config::scan()).unwrap();
            let [_, _, tg] = characteristic_series(&shifted, &p, &grid, &Config::scan()).unwrap();
            let diffs: Vec<f64> = tf.values.iter().zip(&tg.values).map(|(x, y)| y - x).collect();
            let range = diffs.iter().copied().fold(f64::MIN, f64::max) - diffs.iter().copied().fold(f64::MAX, f64::min);
            assert!(range < 2.0 * (a.ln().abs() + 5.0), "{num}/{den}: {diffs:?}");
        }
    }
}
