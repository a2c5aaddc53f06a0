//! The M-punctured plane `Ω = C \ {c_1, …, c_M}` and its exhaustion.
//!
//! For `t ≥ r_0` the region `Ω̄_t` is the closed disk `|z| ≤ t` with the open
//! disks `|z - c_j| < 1/t` removed. The boundary `∂Ω_t` is the outer circle
//! of radius `t` together with `M` inner circles of radius `1/t`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuncturedPlane {
    punctures: Vec<Complex64>,
    separation: f64,
    base_radius: f64,
}

impl PuncturedPlane {
    /// Builds the plane, computing `d = min|c_j - c_k| / 2` and
    /// `r_0 = 1/d + max|c_j|`.
    ///
    /// Punctures are compared exactly.
    pub fn new(punctures: Vec<Complex64>) -> Result<Self> {
        if punctures.len() < 2 {
            return Err(Error::TooFewPunctures(punctures.len()));
        }
        let mut min_gap = f64::INFINITY;
        for (j, a) in punctures.iter().enumerate() {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::InvalidInput(format!("puncture {a} is not finite")));
            }
            for b in &punctures[j + 1..] {
                if a == b {
                    return Err(Error::DuplicatePuncture(*a));
                }
                min_gap = min_gap.min((a - b).norm());
            }
        }
        let separation = 0.5 * min_gap;
        let max_abs = punctures.iter().map(|c| c.norm()).fold(0.0, f64::max);
        Ok(PuncturedPlane {
            punctures,
            separation,
            base_radius: 1.0 / separation + max_abs,
        })
    }

    pub fn punctures(&self) -> &[Complex64] {
        &self.punctures
    }

    pub fn len(&self) -> usize {
        self.punctures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.punctures.is_empty()
    }

    /// Half the minimal puncture distance, `d`.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// The base radius `r_0` where every counting integral starts.
    pub fn base_radius(&self) -> f64 {
        self.base_radius
    }

    /// Index of `c` among the punctures, by exact comparison.
    pub fn puncture_index(&self, c: Complex64) -> Option<usize> {
        self.punctures.iter().position(|p| *p == c)
    }

    pub fn check_radius(&self, t: f64) -> Result<()> {
        if t.is_nan() || t < self.base_radius {
            return Err(Error::RadiusBelowBase {
                radius: t,
                base: self.base_radius,
            });
        }
        Ok(())
    }

    /// Membership in the closed region `Ω̄_t`.
    pub fn region_contains(&self, t: f64, z: Complex64) -> Result<bool> {
        self.check_radius(t)?;
        let inv = 1.0 / t;
        Ok(z.norm() <= t && self.punctures.iter().all(|c| (z - c).norm() >= inv))
    }

    /// Smallest `t` with `z ∈ Ω̄_t`: `max(|z|, max_j 1/|z - c_j|)`.
    pub fn entry_time(&self, z: Complex64) -> Result<f64> {
        let mut t = z.norm();
        for c in &self.punctures {
            let dist = (z - c).norm();
            if dist == 0.0 {
                return Err(Error::AtPuncture(z));
            }
            t = t.max(1.0 / dist);
        }
        Ok(t)
    }

    /// The circles making up `∂Ω_r`.
    pub fn boundary(&self, r: f64) -> Result<ContourSet> {
        self.check_radius(r)?;
        Ok(ContourSet {
            outer: Circle {
                center: Complex64::new(0.0, 0.0),
                radius: r,
                orientation: Orientation::CounterClockwise,
            },
            inner: self
                .punctures
                .iter()
                .map(|&c| Circle {
                    center: c,
                    radius: 1.0 / r,
                    orientation: Orientation::Clockwise,
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
    pub orientation: Orientation,
}

impl Circle {
    pub fn point(&self, theta: f64) -> Complex64 {
        let (s, c) = theta.sin_cos();
        self.center + Complex64::new(self.radius * c, self.radius * s)
    }

    pub fn reversed(self) -> Self {
        let orientation = match self.orientation {
            Orientation::CounterClockwise => Orientation::Clockwise,
            Orientation::Clockwise => Orientation::CounterClockwise,
        };
        Circle { orientation, ..self }
    }
}

/// Oriented boundary of `Ω_r`: outer circle counterclockwise, inner circles
/// clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub outer: Circle,
    pub inner: Vec<Circle>,
}

impl ContourSet {
    pub fn circles(&self) -> impl Iterator<Item = &Circle> {
        std::iter::once(&self.outer).chain(self.inner.iter())
    }

    pub fn reversed(&self) -> Self {
        ContourSet {
            outer: self.outer.reversed(),
            inner: self.inner.iter().map(|c| c.reversed()).collect(),
        }
    }
}
