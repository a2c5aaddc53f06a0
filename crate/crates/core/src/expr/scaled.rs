use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

const HI: f64 = 1e100;
const LO: f64 = 1e-100;

/// A complex number stored as `mantissa · exp(log_scale)`.
///
/// Functions with essential singularities at the punctures reach
/// magnitudes like `exp(r)` on the inner circles, far outside `f64` for the
/// radii the growth checks use. Logarithms of such values stay finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    mantissa: Complex64,
    log_scale: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled {
        mantissa: Complex64::new(0.0, 0.0),
        log_scale: 0.0,
    };
    pub const ONE: Scaled = Scaled {
        mantissa: Complex64::new(1.0, 0.0),
        log_scale: 0.0,
    };

    pub fn new(value: Complex64) -> Self {
        Scaled {
            mantissa: value,
            log_scale: 0.0,
        }
        .normalized()
    }

    /// `exp(w)` without forming the real exponential.
    pub fn exp(w: Complex64) -> Self {
        let (s, c) = w.im.sin_cos();
        Scaled {
            mantissa: Complex64::new(c, s),
            log_scale: w.re,
        }
    }

    fn normalized(self) -> Self {
        let n = self.mantissa.norm();
        if n == 0.0 {
            return Scaled::ZERO;
        }
        if !(LO..=HI).contains(&n) {
            Scaled {
                mantissa: self.mantissa / n,
                log_scale: self.log_scale + n.ln(),
            }
        } else {
            self
        }
    }

    fn unit(self) -> Self {
        let n = self.mantissa.norm();
        if n == 0.0 {
            return Scaled::ZERO;
        }
        Scaled {
            mantissa: self.mantissa / n,
            log_scale: self.log_scale + n.ln(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.norm() == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.mantissa.re.is_finite()
            && self.mantissa.im.is_finite()
            && !self.log_scale.is_nan()
            && self.log_scale != f64::INFINITY
    }

    /// `ln |value|`; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.norm().ln() + self.log_scale
        }
    }

    pub fn arg(&self) -> f64 {
        self.mantissa.arg()
    }

    /// Plain complex value, or `None` when it leaves the `f64` range.
    pub fn to_complex(&self) -> Option<Complex64> {
        if self.is_zero() {
            return Some(Complex64::new(0.0, 0.0));
        }
        let v = self.mantissa * self.log_scale.exp();
        (v.re.is_finite() && v.im.is_finite()).then_some(v)
    }

    pub fn scale(self, c: Complex64) -> Scaled {
        self * Scaled::new(c)
    }

    /// Quotient; `None` when dividing by zero.
    pub fn checked_div(self, other: Scaled) -> Option<Scaled> {
        if other.is_zero() {
            return None;
        }
        Some(
            Scaled {
                mantissa: self.mantissa / other.mantissa,
                log_scale: self.log_scale - other.log_scale,
            }
            .normalized(),
        )
    }

    pub fn powi(self, k: i32) -> Option<Scaled> {
        if k == 0 {
            return Some(Scaled::ONE);
        }
        if self.is_zero() {
            return (k > 0).then_some(Scaled::ZERO);
        }
        let u = self.unit();
        Some(
            Scaled {
                mantissa: u.mantissa.powi(k),
                log_scale: u.log_scale * f64::from(k),
            }
            .normalized(),
        )
    }

    /// `exp(self)`; `None` when the exponent itself is out of range.
    pub fn exp_of(self) -> Option<Scaled> {
        self.to_complex().map(Scaled::exp)
    }
}

impl Mul for Scaled {
    type Output = Scaled;

    fn mul(self, other: Scaled) -> Scaled {
        Scaled {
            mantissa: self.mantissa * other.mantissa,
            log_scale: self.log_scale + other.log_scale,
        }
        .normalized()
    }
}

impl Add for Scaled {
    type Output = Scaled;

    fn add(self, other: Scaled) -> Scaled {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let top = self.log_scale.max(other.log_scale);
        let a = self.mantissa * (self.log_scale - top).exp();
        let b = other.mantissa * (other.log_scale - top).exp();
        Scaled {
            mantissa: a + b,
            log_scale: top,
        }
        .normalized()
    }
}

impl Neg for Scaled {
    type Output = Scaled;

    fn neg(self) -> Scaled {
        Scaled {
            mantissa: -self.mantissa,
            log_scale: self.log_scale,
        }
    }
}

impl Sub for Scaled {
    type Output = Scaled;

    fn sub(self, other: Scaled) -> Scaled {
        self + -other
    }
}
