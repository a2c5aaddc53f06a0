//! Envelope fits standing in for the existential error terms of the
//! inequality theorems.
//!
//! A check `lhs ≤ rhs + E(r)` is made falsifiable by fitting the deficit
//! `lhs − rhs` over the upper half of the grid to a nonnegative combination
//! of growth terms plus a constant, then testing the envelope on the whole
//! grid. Every admissible envelope is nondecreasing in `r`, so it dominates
//! the deficit iff it dominates the running maximum of the deficit; the fit
//! is made against that running maximum.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on each pointwise comparison.
pub const POINT_TOLERANCE: f64 = 1e-6;
/// Fraction of grid points that must satisfy the fitted inequality.
pub const MIN_PASS_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeShape {
    /// `A log r + B log⁺ T + C`.
    LogGrowth,
    /// `B T + C`.
    LinearInT,
    /// `C`.
    Constant,
}

/// Fitted envelope `A·g_1(r) + B·g_2(T) + C` with `A, B ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub shape: EnvelopeShape,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// First grid index of the fit window.
    pub fit_start: usize,
}

impl Envelope {
    fn basis(shape: EnvelopeShape, r: f64, t: f64) -> [f64; 2] {
        match shape {
            EnvelopeShape::LogGrowth => [r.ln(), t.ln().max(0.0)],
            EnvelopeShape::LinearInT => [0.0, t],
            EnvelopeShape::Constant => [0.0, 0.0],
        }
    }

    pub fn eval(&self, r: f64, t: f64) -> f64 {
        let [g1, g2] = Self::basis(self.shape, r, t);
        self.a * g1 + self.b * g2 + self.c
    }
}

/// Least squares for `hull ≈ A g_1 + B g_2 + C` over the upper half of the
/// grid with `A, B ≥ 0`, by enumerating the four active sets; `C` is then
/// raised until the window is covered.
pub fn fit_envelope(shape: EnvelopeShape, r: &[f64], t: &[f64], deficit: &[f64]) -> Result<Envelope> {
    let len = r.len();
    if len < 2 || t.len() != len || deficit.len() != len {
        return Err(Error::InvalidInput(format!(
            "envelope fit needs matching series of length ≥ 2 (got {len}, {}, {})",
            t.len(),
            deficit.len()
        )));
    }
    if deficit.iter().chain(t).chain(r).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("envelope fit on non-finite data".into()));
    }
    let fit_start = len / 2;
    let window = fit_start..len;
    let rows: Vec<[f64; 2]> = window.clone().map(|i| Envelope::basis(shape, r[i], t[i])).collect();
    let hull: Vec<f64> = deficit
        .iter()
        .scan(f64::NEG_INFINITY, |m, &d| {
            *m = m.max(d);
            Some(*m)
        })
        .collect();
    let y = DVector::from_iterator(rows.len(), window.clone().map(|i| hull[i]));

    let mut best: Option<(f64, [f64; 3])> = None;
    for free in [[true, true], [true, false], [false, true], [false, false]] {
        let cols: Vec<usize> = (0..2).filter(|&k| free[k]).collect();
        let x = DMatrix::from_fn(rows.len(), cols.len() + 1, |i, j| {
            if j < cols.len() {
                rows[i][cols[j]]
            } else {
                1.0
            }
        });
        let Ok(sol) = x.clone().svd(true, true).solve(&y, 1e-12) else {
            continue;
        };
        let mut coef = [0.0, 0.0, sol[cols.len()]];
        for (j, &k) in cols.iter().enumerate() {
            coef[k] = sol[j];
        }
        if coef[0] < 0.0 || coef[1] < 0.0 {
            continue;
        }
        let sse = (&x * &sol - &y).norm_squared();
        if best.is_none_or(|(b, _)| sse < b - 1e-15 * b.abs()) {
            best = Some((sse, coef));
        }
    }
    let (_, [a, b, c]) = best.expect("the constant-only fit is always feasible");
    let mut env = Envelope {
        shape,
        a,
        b,
        c,
        fit_start,
    };
    let lift = window.map(|i| hull[i] - env.eval(r[i], t[i])).fold(0.0, f64::max);
    env.c += lift;
    Ok(env)
}

/// Pointwise outcome of an envelope test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeVerdict {
    pub pass_fraction: f64,
    /// Grid indices where `rhs + E < lhs − tol`.
    pub failures: Vec<usize>,
    pub passed: bool,
}

/// Passes when at least 95% of the points satisfy `rhs + E ≥ lhs − 1e-6`
/// and every failure lies below the fit window.
pub fn judge(env: &Envelope, r: &[f64], t: &[f64], lhs: &[f64], rhs: &[f64]) -> EnvelopeVerdict {
    let failures: Vec<usize> = (0..r.len())
        .filter(|&i| !(rhs[i] + env.eval(r[i], t[i]) >= lhs[i] - POINT_TOLERANCE))
        .collect();
    let pass_fraction = 1.0 - failures.len() as f64 / r.len() as f64;
    let passed = pass_fraction >= MIN_PASS_FRACTION && failures.iter().all(|&i| i < env.fit_start);
    EnvelopeVerdict {
        pass_fraction,
        failures,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| 2.5 + 2.0 * i as f64).collect()
    }

    #[test]
    fn recovers_exact_log_growth() {
        let r = grid(20);
        let t: Vec<f64> = r.iter().map(|x| 2.0 * x.ln() + 1.0).collect();
        let d: Vec<f64> = r
            .iter()
            .zip(&t)
            .map(|(x, tt)| 0.7 * x.ln() + 1.3 * tt.ln() - 2.0)
            .collect();
        let env = fit_envelope(EnvelopeShape::LogGrowth, &r, &t, &d).unwrap();
        assert!((env.a - 0.7).abs() < 1e-8 && (env.b - 1.3).abs() < 1e-8, "{env:?}");
        assert!((env.c + 2.0).abs() < 1e-8);
    }

    #[test]
    fn coefficients_stay_nonnegative() {
        let r = grid(20);
        let t: Vec<f64> = r.clone();
        let d: Vec<f64> = r.iter().map(|x| -3.0 * x.ln() + 5.0).collect();
        let env = fit_envelope(EnvelopeShape::LogGrowth, &r, &t, &d).unwrap();
        assert!(env.a >= 0.0 && env.b >= 0.0);
        assert!(judge(&env, &r, &t, &d, &[0.0; 20]).passed);
    }

    #[test]
    fn linear_growth_in_t_is_measured() {
        let r = grid(16);
        let t: Vec<f64> = r.iter().map(|x| x / std::f64::consts::PI).collect();
        let d: Vec<f64> = t.iter().map(|tt| 0.4 * tt + 1.0).collect();
        let env = fit_envelope(EnvelopeShape::LinearInT, &r, &t, &d).unwrap();
        assert!((env.b - 0.4).abs() < 1e-9);
        let neg: Vec<f64> = t.iter().map(|tt| -tt).collect();
        assert_eq!(fit_envelope(EnvelopeShape::LinearInT, &r, &t, &neg).unwrap().b, 0.0);
    }

    #[test]
    fn failures_in_fit_window_fail_the_verdict() {
        let r = grid(20);
        let t = vec![1.0; 20];
        let env = Envelope {
            shape: EnvelopeShape::Constant,
            a: 0.0,
            b: 0.0,
            c: 0.0,
            fit_start: 10,
        };
        let mut lhs = vec![0.0; 20];
        lhs[3] = 1.0;
        assert!(judge(&env, &r, &t, &lhs, &[0.0; 20]).passed);
        lhs[3] = 0.0;
        lhs[15] = 1.0;
        let v = judge(&env, &r, &t, &lhs, &[0.0; 20]);
        assert_eq!(v.failures, vec![15]);
        assert!(!v.passed);
    }

    #[test]
    fn linear_deficit_escapes_log_envelope() {
        let r: Vec<f64> = (0..30).map(|i| 2.5 * (24.0f64).powf(i as f64 / 29.0)).collect();
        let t: Vec<f64> = r.iter().map(|x| 2.0 * x.ln() + 1.0).collect();
        let env = fit_envelope(EnvelopeShape::LogGrowth, &r, &t, &r).unwrap();
        assert!(!judge(&env, &r, &t, &r, &vec![0.0; 30]).passed);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_envelope(EnvelopeShape::Constant, &[1.0], &[1.0], &[1.0]).is_err());
        assert!(fit_envelope(EnvelopeShape::Constant, &[1.0, 2.0], &[1.0, 1.0], &[1.0, f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn fit_window_is_always_covered(
            d in proptest::collection::vec(-50.0f64..50.0, 4..30),
            shape in prop_oneof![Just(EnvelopeShape::LogGrowth), Just(EnvelopeShape::LinearInT), Just(EnvelopeShape::Constant)],
        ) {
            let r = grid(d.len());
            let t: Vec<f64> = r.iter().map(|x| x.ln() * 3.0).collect();
            let env = fit_envelope(shape, &r, &t, &d).unwrap();
            prop_assert!(env.a >= 0.0 && env.b >= 0.0);
            for i in env.fit_start..d.len() {
                prop_assert!(env.eval(r[i], t[i]) >= d[i] - 1e-9);
            }
        }
    }
}
