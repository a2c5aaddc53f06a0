//! Hilbert function and weight of `P^N` (trivial ideal), the Chow-weight
//! lower bound, and the integer constants of the hypersurface theorem.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonnegative weights `c = (c_0, …, c_N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTuple(Vec<f64>);

impl WeightTuple {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("weight tuple is empty".into()));
        }
        if let Some(bad) = entries.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "weight {bad} is not a finite nonnegative number"
            )));
        }
        Ok(WeightTuple(entries))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

/// `C(n, k)` as a big integer.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// `I(x) = min{k ∈ N : k > x}`.
pub fn strict_ceiling(x: f64) -> u64 {
    x.floor() as u64 + 1
}

/// `H(m) = C(N + m, N)`: the number of degree-`m` monomials in `N + 1`
/// variables.
pub fn hilbert_function_trivial(n_dim: u32, m: u32) -> Result<u64> {
    if m < 1 {
        return Err(Error::InvalidInput("degree m must be at least 1".into()));
    }
    binomial(u64::from(n_dim + m), u64::from(n_dim))
        .to_u64()
        .ok_or_else(|| Error::InvalidInput(format!("H({m}) overflows u64 for N = {n_dim}")))
}

/// `S(m, c)`, the c-weight of the full monomial basis of degree `m`.
///
/// Each variable carries total exponent `m·H(m)/(N+1)` over the basis, so
/// `S = m·H(m)/(N+1)·Σ c_i`.
pub fn hilbert_weight_trivial(n_dim: u32, m: u32, c: &WeightTuple) -> Result<f64> {
    check_len(c, n_dim as usize + 1)?;
    let h = hilbert_function_trivial(n_dim, m)? as f64;
    Ok(f64::from(m) * h / f64::from(n_dim + 1) * c.sum())
}

fn check_len(c: &WeightTuple, len: usize) -> Result<()> {
    if c.entries().len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            got: c.entries().len(),
        });
    }
    Ok(())
}

/// `S/(m H) − [e_lower/((N+1)Δ) − (2N+1)Δ/m · max c]`.
pub fn lemma23_gap(n_dim: u32, m: u32, c: &WeightTuple, e_lower: f64, delta: u32) -> Result<f64> {
    if m <= delta {
        return Err(Error::InvalidInput(format!("need m > Δ, got m = {m}, Δ = {delta}")));
    }
    if delta == 0 {
        return Err(Error::InvalidInput("Δ must be positive".into()));
    }
    let s = hilbert_weight_trivial(n_dim, m, c)?;
    let h = hilbert_function_trivial(n_dim, m)? as f64;
    let (m, n, d) = (f64::from(m), f64::from(n_dim), f64::from(delta));
    let lhs = s / (m * h);
    let rhs = e_lower / ((n + 1.0) * d) - (2.0 * n + 1.0) * d / m * c.max();
    Ok(lhs - rhs)
}

/// `(Σ_{i ∈ subset} c_i)·Δ`.
pub fn chow_lower_bound(c: &WeightTuple, subset: &[usize], delta: u32) -> Result<f64> {
    let len = c.entries().len();
    if subset.is_empty() {
        return Err(Error::BadSubset("empty subset".into()));
    }
    let mut seen = vec![false; len];
    for &i in subset {
        if i >= len {
            return Err(Error::BadSubset(format!("index {i} out of range for {len} weights")));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::BadSubset(format!("index {i} repeated")));
        }
    }
    Ok(subset.iter().map(|&i| c.entries()[i]).sum::<f64>() * f64::from(delta))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// Smallest integer `α ≥ n^n d^{n²+n} (19 n I(1/ε))^n (deg V)^{n+1} / n!`.
pub fn alpha_truncation_bound(n: u32, d: u32, epsilon: f64, deg_v: u32) -> Result<BigUint> {
    if n == 0 || d == 0 || deg_v == 0 {
        return Err(Error::InvalidInput("n, d and deg V must be positive".into()));
    }
    check_epsilon(epsilon)?;
    let i = strict_ceiling(1.0 / epsilon);
    let n64 = u64::from(n);
    let num = BigUint::from(n64).pow(n)
        * BigUint::from(d).pow(n * n + n)
        * BigUint::from(19 * n64 * i).pow(n)
        * BigUint::from(deg_v).pow(n + 1);
    Ok(num.div_ceil(&factorial(n64)))
}

/// Integer constants from the proof of the hypersurface theorem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofConstants {
    /// `m = 18 n² Δ I(1/ε)`.
    pub m: u64,
    /// `Δ·C(m + n, n)`, an upper bound for `n_m`.
    pub n_m_bound: BigUint,
    /// Whether `Δ·C(m+n, n) ≤ Δ(1 + m/n)^n n^n / n!`.
    pub chain_holds: bool,
}

pub fn proof_constants(n: u32, delta: u32, epsilon: f64) -> Result<ProofConstants> {
    if n == 0 || delta == 0 {
        return Err(Error::InvalidInput("n and Δ must be positive".into()));
    }
    check_epsilon(epsilon)?;
    let n64 = u64::from(n);
    let m = 18 * n64 * n64 * u64::from(delta) * strict_ceiling(1.0 / epsilon);
    let n_m_bound = binomial(m + n64, n64) * delta;
    // Δ(1 + m/n)^n n^n / n! = Δ(n + m)^n / n!, compared without division.
    let chain_holds = &n_m_bound * factorial(n64) <= BigUint::from(m + n64).pow(n) * delta;
    Ok(ProofConstants {
        m,
        n_m_bound,
        chain_holds,
    })
}
