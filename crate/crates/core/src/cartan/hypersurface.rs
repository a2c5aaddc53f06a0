//! Hyperplanes and homogeneous polynomials in `x_0, …, x_N`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{format_complex, Expr};

use super::Curve;

/// Coefficients below this fraction of the largest are dropped after
/// expansion.
const DROP: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    coefficients: Vec<Complex64>,
}

impl Hyperplane {
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(Error::InvalidInput(
                "a hyperplane needs at least two coefficients".into(),
            ));
        }
        if coefficients.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::InvalidInput("hyperplane coefficients must be finite".into()));
        }
        if coefficients.iter().all(|a| a.norm() == 0.0) {
            return Err(Error::InvalidInput("hyperplane coefficients are all zero".into()));
        }
        Ok(Hyperplane { coefficients })
    }

    pub fn real(coefficients: &[f64]) -> Result<Self> {
        Hyperplane::new(coefficients.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// The coordinate hyperplane `x_k = 0` in `P^N`.
    pub fn coordinate(n_vars: usize, k: usize) -> Self {
        let mut a = vec![Complex64::new(0.0, 0.0); n_vars];
        a[k] = Complex64::new(1.0, 0.0);
        Hyperplane { coefficients: a }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn n_vars(&self) -> usize {
        self.coefficients.len()
    }

    /// `max_j |a_j|`.
    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, lambda: Complex64) -> Result<Self> {
        Hyperplane::new(self.coefficients.iter().map(|a| a * lambda).collect())
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.coefficients.iter().zip(x).map(|(a, v)| a * v).sum()
    }

    /// `(a, f) = Σ a_j f_j`.
    pub fn compose(&self, f: &Curve) -> Result<Expr> {
        f.check_vars(self.n_vars())?;
        Ok(Expr::sum(
            self.coefficients
                .iter()
                .zip(f.components())
                .filter(|(a, _)| a.norm() != 0.0)
                .map(|(a, fj)| fj.scale(*a))
                .collect(),
        ))
    }
}

impl fmt::Display for Hyperplane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Hypersurface::from_hyperplane(self))
    }
}

/// A linear form together with the power it appears to.
pub type LinearFactor = (Vec<Complex64>, u32);

/// Homogeneous polynomial `Q` of degree `d` in `N + 1` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypersurface {
    degree: u32,
    n_vars: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
    /// Factorization into powers of linear forms, when known.
    factors: Option<Vec<LinearFactor>>,
}

fn prune(terms: &mut BTreeMap<Vec<u32>, Complex64>) {
    let top = terms.values().map(|c| c.norm()).fold(0.0, f64::max);
    terms.retain(|_, c| c.norm() > DROP * top);
}

impl Hypersurface {
    pub fn new(n_vars: usize, terms: BTreeMap<Vec<u32>, Complex64>) -> Result<Self> {
        let mut poly = Poly {
            n_vars,
            terms,
            factors: None,
        };
        prune(&mut poly.terms);
        poly.into_hypersurface()
    }

    pub fn from_hyperplane(h: &Hyperplane) -> Self {
        let n = h.n_vars();
        let mut terms = BTreeMap::new();
        for (k, a) in h.coefficients().iter().enumerate() {
            if a.norm() != 0.0 {
                let mut e = vec![0; n];
                e[k] = 1;
                terms.insert(e, *a);
            }
        }
        Hypersurface {
            degree: 1,
            n_vars: n,
            terms,
            factors: Some(vec![(h.coefficients().to_vec(), 1)]),
        }
    }

    /// Parses text such as `x0^2 + (1+2i)*x1*x2 - (x0 + x1)^2`.
    pub fn parse(text: &str, n_vars: usize) -> Result<Self> {
        PolyParser::new(text, n_vars).parse()?.into_hypersurface()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, Complex64> {
        &self.terms
    }

    pub fn linear_factors(&self) -> Option<&[LinearFactor]> {
        self.factors.as_deref()
    }

    /// `‖Q‖`, the largest coefficient magnitude.
    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| e.iter().zip(x).fold(*c, |acc, (k, v)| acc * v.powu(*k)))
            .sum()
    }

    /// Partial derivative in `x_k`, as a coefficient table of degree `d-1`.
    pub fn partial(&self, k: usize) -> BTreeMap<Vec<u32>, Complex64> {
        let mut out = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[k] > 0 {
                let mut e2 = e.clone();
                e2[k] -= 1;
                *out.entry(e2).or_insert(Complex64::new(0.0, 0.0)) += c * f64::from(e[k]);
            }
        }
        out
    }

    fn poly(&self) -> Poly {
        Poly {
            n_vars: self.n_vars,
            terms: self.terms.clone(),
            factors: self.factors.clone().map(|f| (Complex64::new(1.0, 0.0), f)),
        }
    }

    pub fn mul(&self, other: &Hypersurface) -> Result<Self> {
        self.poly().mul(&other.poly())?.into_hypersurface()
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("zero power of a hypersurface".into()));
        }
        self.poly().pow(k).into_hypersurface()
    }

    pub fn add(&self, other: &Hypersurface) -> Result<Self> {
        self.poly().add(&other.poly())?.into_hypersurface()
    }

    pub fn scaled(&self, lambda: Complex64) -> Result<Self> {
        let mut p = self.poly();
        p.scale(lambda);
        p.into_hypersurface()
    }

    /// `Q(f_0, …, f_N)` as an expression.
    pub fn compose(&self, f: &Curve) -> Result<Expr> {
        f.check_vars(self.n_vars)?;
        if let Some(factors) = &self.factors {
            // Factored form keeps zeros of high multiplicity well conditioned.
            let lead = self.leading_constant(factors);
            let mut parts = vec![Expr::constant(lead)];
            for (a, k) in factors {
                let h = Hyperplane::new(a.clone())?;
                parts.push(h.compose(f)?.powi(*k as i32)?);
            }
            return Ok(Expr::product(parts));
        }
        let comps = f.components();
        Ok(Expr::sum(
            self.terms
                .iter()
                .map(|(e, c)| {
                    let mut parts = vec![Expr::constant(*c)];
                    for (fj, k) in comps.iter().zip(e) {
                        if *k > 0 {
                            parts.push(fj.powi(*k as i32).expect("nonnegative power"));
                        }
                    }
                    Expr::product(parts)
                })
                .collect(),
        ))
    }

    /// Constant `λ` with `Q = λ Π L_i^{k_i}`, read off at a generic point.
    fn leading_constant(&self, factors: &[LinearFactor]) -> Complex64 {
        let x: Vec<Complex64> = (0..self.n_vars)
            .map(|k| Complex64::new(0.731 + 0.173 * k as f64, 0.419 - 0.287 * k as f64))
            .collect();
        let prod: Complex64 = factors
            .iter()
            .map(|(a, k)| a.iter().zip(&x).map(|(c, v)| c * v).sum::<Complex64>().powu(*k))
            .product();
        self.eval(&x) / prod
    }
}

impl fmt::Display for Hypersurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", format_complex(*c))?;
            for (k, p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "*x{k}")?,
                    _ => write!(f, "*x{k}^{p}")?,
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Polynomial under construction; not necessarily homogeneous.
#[derive(Debug, Clone)]
struct Poly {
    n_vars: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
    /// `λ Π L_i^{k_i}` when the polynomial is known in that form.
    factors: Option<(Complex64, Vec<LinearFactor>)>,
}

impl Poly {
    fn constant(n_vars: usize, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c.norm() != 0.0 {
            terms.insert(vec![0; n_vars], c);
        }
        Poly {
            n_vars,
            terms,
            factors: Some((c, Vec::new())),
        }
    }

    fn var(n_vars: usize, k: usize) -> Self {
        let mut e = vec![0; n_vars];
        e[k] = 1;
        let mut a = vec![Complex64::new(0.0, 0.0); n_vars];
        a[k] = Complex64::new(1.0, 0.0);
        Poly {
            n_vars,
            terms: BTreeMap::from([(e, Complex64::new(1.0, 0.0))]),
            factors: Some((Complex64::new(1.0, 0.0), vec![(a, 1)])),
        }
    }

    fn homogeneous_degree(&self) -> Option<u32> {
        let mut degrees = self.terms.keys().map(|e| e.iter().sum::<u32>());
        let d = degrees.next()?;
        degrees.all(|x| x == d).then_some(d)
    }

    /// Linear form of a degree-one homogeneous polynomial.
    fn as_linear(&self) -> Option<Vec<Complex64>> {
        if self.homogeneous_degree() != Some(1) {
            return None;
        }
        let mut a = vec![Complex64::new(0.0, 0.0); self.n_vars];
        for (e, c) in &self.terms {
            let k = e.iter().position(|p| *p == 1)?;
            a[k] = *c;
        }
        Some(a)
    }

    fn scale(&mut self, lambda: Complex64) {
        for c in self.terms.values_mut() {
            *c *= lambda;
        }
        if let Some((lead, _)) = &mut self.factors {
            *lead *= lambda;
        }
        prune(&mut self.terms);
    }

    fn add(&self, other: &Poly) -> Result<Poly> {
        if self.n_vars != other.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                got: other.n_vars,
            });
        }
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            *terms.entry(e.clone()).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        prune(&mut terms);
        let mut out = Poly {
            n_vars: self.n_vars,
            terms,
            factors: None,
        };
        out.factors = match out.homogeneous_degree() {
            Some(0) => out.terms.values().next().map(|c| (*c, Vec::new())),
            _ => out.as_linear().map(|a| (Complex64::new(1.0, 0.0), vec![(a, 1)])),
        };
        Ok(out)
    }

    fn mul(&self, other: &Poly) -> Result<Poly> {
        if self.n_vars != other.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                got: other.n_vars,
            });
        }
        let mut terms = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                *terms.entry(e).or_insert(Complex64::new(0.0, 0.0)) += c1 * c2;
            }
        }
        prune(&mut terms);
        let factors = match (&self.factors, &other.factors) {
            (Some((l1, f1)), Some((l2, f2))) => {
                let mut all = f1.clone();
                for (a, k) in f2 {
                    match all.iter_mut().find(|(b, _)| b == a) {
                        Some((_, j)) => *j += k,
                        None => all.push((a.clone(), *k)),
                    }
                }
                Some((l1 * l2, all))
            }
            _ => None,
        };
        Ok(Poly {
            n_vars: self.n_vars,
            terms,
            factors,
        })
    }

    fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::constant(self.n_vars, Complex64::new(1.0, 0.0));
        for _ in 0..k {
            acc = acc.mul(self).expect("same variable count");
        }
        acc
    }

    fn into_hypersurface(self) -> Result<Hypersurface> {
        if self.terms.is_empty() {
            return Err(Error::InvalidInput("polynomial is identically zero".into()));
        }
        if self.terms.keys().any(|e| e.len() != self.n_vars) {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                got: self.terms.keys().map(Vec::len).find(|l| *l != self.n_vars).unwrap_or(0),
            });
        }
        let degree = self.homogeneous_degree().ok_or_else(|| {
            let degrees: std::collections::BTreeSet<u32> = self.terms.keys().map(|e| e.iter().sum()).collect();
            Error::NotHomogeneous(format!("term degrees {degrees:?}"))
        })?;
        if degree == 0 {
            return Err(Error::NotHomogeneous("constant polynomial has degree 0".into()));
        }
        let factors = self
            .factors
            .map(|(_, f)| f)
            .filter(|f| !f.is_empty() && f.iter().map(|(_, k)| k).sum::<u32>() == degree);
        Ok(Hypersurface {
            degree,
            n_vars: self.n_vars,
            terms: self.terms,
            factors,
        })
    }
}

struct PolyParser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    n_vars: usize,
}

impl<'a> PolyParser<'a> {
    fn new(src: &'a str, n_vars: usize) -> Self {
        PolyParser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            n_vars,
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse(mut self) -> Result<Poly> {
        if self.n_vars < 2 {
            return Err(Error::InvalidInput("need at least two variables".into()));
        }
        let p = self.sum()?;
        if self.peek().is_some() {
            return self.error("unexpected trailing input");
        }
        Ok(p)
    }

    fn sum(&mut self) -> Result<Poly> {
        let mut acc = if self.eat(b'-') {
            let mut t = self.product()?;
            t.scale(Complex64::new(-1.0, 0.0));
            t
        } else {
            self.eat(b'+');
            self.product()?
        };
        loop {
            if self.eat(b'+') {
                acc = acc.add(&self.product()?)?;
            } else if self.eat(b'-') {
                let mut t = self.product()?;
                t.scale(Complex64::new(-1.0, 0.0));
                acc = acc.add(&t)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Poly> {
        let mut acc = self.power()?;
        while self.eat(b'*') {
            acc = acc.mul(&self.power()?)?;
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let Ok(k) = self.src[start..self.pos].parse::<u32>() else {
                self.pos = start;
                return self.error("expected a nonnegative integer exponent");
            };
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Poly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let p = self.sum()?;
                if !self.eat(b')') {
                    return self.error("expected ')'");
                }
                Ok(p)
            }
            Some(b'x') => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let Ok(k) = self.src[start..self.pos].parse::<usize>() else {
                    self.pos = start;
                    return self.error("expected a variable index after 'x'");
                };
                if k >= self.n_vars {
                    self.pos = start;
                    return self.error(format!("variable x{k} out of range for {} variables", self.n_vars));
                }
                Ok(Poly::var(self.n_vars, k))
            }
            Some(b'i') => {
                self.pos += 1;
                Ok(Poly::constant(self.n_vars, Complex64::new(0.0, 1.0)))
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_digit()
                        || self.bytes[self.pos] == b'.'
                        || ((self.bytes[self.pos] == b'e' || self.bytes[self.pos] == b'E')
                            && self
                                .bytes
                                .get(self.pos + 1)
                                .is_some_and(|n| n.is_ascii_digit() || *n == b'-' || *n == b'+')))
                {
                    if self.bytes[self.pos] == b'e' || self.bytes[self.pos] == b'E' {
                        self.pos += 1;
                    }
                    self.pos += 1;
                }
                let Ok(v) = self.src[start..self.pos].parse::<f64>() else {
                    self.pos = start;
                    return self.error("malformed number");
                };
                let c = if self.bytes.get(self.pos) == Some(&b'i') {
                    self.pos += 1;
                    Complex64::new(0.0, v)
                } else {
                    Complex64::new(v, 0.0)
                };
                Ok(Poly::constant(self.n_vars, c))
            }
            Some(_) => self.error("expected a number, variable or '('"),
            None => self.error("unexpected end of input"),
        }
    }
}
