//! Closed-form expressions for functions holomorphic on a punctured plane.
//!
//! The grammar is rational in `z` and in `1/(z - c_j)`, closed under sums,
//! products, integer powers and `exp`. Every singularity therefore sits at a
//! declared puncture, and derivatives of any order are again expressions,
//! which is what the Wronskian machinery needs.

mod parse;
mod scaled;

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::domain::PuncturedPlane;
use crate::error::{Error, Result};

pub use parse::{parse, parse_with_punctures};
pub use scaled::Scaled;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Complex64),
    Var,
    /// `1/(z - center)`, with `center` the puncture at `index`.
    Pole {
        index: usize,
        center: Complex64,
    },
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    /// Integer power. Negative exponents only on zero-free bases.
    Pow(Expr, i32),
    Exp(Expr),
}

/// Immutable, cheaply clonable expression tree.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl Expr {
    fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: Complex64) -> Self {
        Expr::from_node(Node::Const(c))
    }

    pub fn real(x: f64) -> Self {
        Expr::constant(c64(x, 0.0))
    }

    pub fn zero() -> Self {
        Expr::real(0.0)
    }

    pub fn one() -> Self {
        Expr::real(1.0)
    }

    pub fn z() -> Self {
        Expr::from_node(Node::Var)
    }

    /// `1/(z - c_j)` for the puncture with the given index.
    pub fn pole(plane: &PuncturedPlane, index: usize) -> Result<Self> {
        let center = *plane
            .punctures()
            .get(index)
            .ok_or_else(|| Error::InvalidInput(format!("no puncture with index {index}")))?;
        Ok(Expr::from_node(Node::Pole { index, center }))
    }

    /// `z - c` as an expression.
    pub fn linear(c: Complex64) -> Self {
        Expr::sum(vec![Expr::z(), Expr::constant(-c)])
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(c64(0.0, 0.0))
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(c64(1.0, 0.0))
    }

    /// Sum with flattening and constant folding.
    pub fn sum(terms: Vec<Expr>) -> Self {
        let mut constant = c64(0.0, 0.0);
        let mut rest = Vec::with_capacity(terms.len());
        for t in terms {
            match t.node() {
                Node::Const(c) => constant += c,
                Node::Sum(inner) => {
                    for u in inner {
                        match u.node() {
                            Node::Const(c) => constant += c,
                            _ => rest.push(u.clone()),
                        }
                    }
                }
                _ => rest.push(t),
            }
        }
        if constant != c64(0.0, 0.0) {
            rest.push(Expr::constant(constant));
        }
        match rest.len() {
            0 => Expr::zero(),
            1 => rest.pop().unwrap(),
            _ => Expr::from_node(Node::Sum(rest)),
        }
    }

    /// Product with flattening and constant folding.
    pub fn product(factors: Vec<Expr>) -> Self {
        let mut constant = c64(1.0, 0.0);
        let mut rest = Vec::with_capacity(factors.len());
        for f in factors {
            match f.node() {
                Node::Const(c) => constant *= c,
                Node::Product(inner) => {
                    for u in inner {
                        match u.node() {
                            Node::Const(c) => constant *= c,
                            _ => rest.push(u.clone()),
                        }
                    }
                }
                _ => rest.push(f),
            }
        }
        if constant == c64(0.0, 0.0) {
            return Expr::zero();
        }
        if constant != c64(1.0, 0.0) {
            rest.insert(0, Expr::constant(constant));
        }
        match rest.len() {
            0 => Expr::one(),
            1 => rest.pop().unwrap(),
            _ => Expr::from_node(Node::Product(rest)),
        }
    }

    /// Structural check that the function never vanishes on `Ω`.
    pub fn is_zero_free(&self) -> bool {
        match self.node() {
            Node::Const(c) => *c != c64(0.0, 0.0),
            Node::Var | Node::Sum(_) => false,
            Node::Pole { .. } | Node::Exp(_) => true,
            Node::Product(fs) => fs.iter().all(Expr::is_zero_free),
            Node::Pow(b, _) => b.is_zero_free(),
        }
    }

    /// Integer power; negative exponents need a zero-free base.
    pub fn powi(&self, k: i32) -> Result<Self> {
        if k < 0 && !self.is_zero_free() {
            return Err(Error::InvalidDivisor(self.to_string()));
        }
        Ok(self.pow_unchecked(k))
    }

    fn pow_unchecked(&self, k: i32) -> Self {
        match (k, self.node()) {
            (0, _) => Expr::one(),
            (1, _) => self.clone(),
            (_, Node::Const(c)) => Expr::constant(c.powi(k)),
            (_, Node::Pow(b, j)) => b.pow_unchecked(j * k),
            _ => Expr::from_node(Node::Pow(self.clone(), k)),
        }
    }

    pub fn exp(&self) -> Self {
        match self.node() {
            Node::Const(c) => Expr::constant(c.exp()),
            _ => Expr::from_node(Node::Exp(self.clone())),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Expr::product(vec![Expr::constant(c), self.clone()])
    }

    /// Indices of the punctures where the expression is singular.
    pub fn singularities(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_singularities(&mut out);
        out
    }

    fn collect_singularities(&self, out: &mut BTreeSet<usize>) {
        match self.node() {
            Node::Const(_) | Node::Var => {}
            Node::Pole { index, .. } => {
                out.insert(*index);
            }
            Node::Sum(xs) | Node::Product(xs) => xs.iter().for_each(|x| x.collect_singularities(out)),
            Node::Pow(b, _) => b.collect_singularities(out),
            Node::Exp(u) => u.collect_singularities(out),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + match self.node() {
            Node::Const(_) | Node::Var | Node::Pole { .. } => 0,
            Node::Sum(xs) | Node::Product(xs) => xs.iter().map(Expr::size).sum(),
            Node::Pow(b, _) => b.size(),
            Node::Exp(u) => u.size(),
        }
    }

    /// Value in extended range.
    pub fn eval_scaled(&self, z: Complex64) -> Result<Scaled> {
        let v = match self.node() {
            Node::Const(c) => Scaled::new(*c),
            Node::Var => Scaled::new(z),
            Node::Pole { center, .. } => {
                let d = z - center;
                if d == c64(0.0, 0.0) {
                    return Err(Error::AtSingularity(z));
                }
                Scaled::new(d.inv())
            }
            Node::Sum(xs) => {
                let mut acc = Scaled::ZERO;
                for x in xs {
                    acc = acc + x.eval_scaled(z)?;
                }
                acc
            }
            Node::Product(xs) => {
                let mut acc = Scaled::ONE;
                for x in xs {
                    acc = acc * x.eval_scaled(z)?;
                }
                acc
            }
            Node::Pow(b, k) => b.eval_scaled(z)?.powi(*k).ok_or(Error::AtSingularity(z))?,
            Node::Exp(u) => u.eval_scaled(z)?.exp_of().ok_or(Error::RangeOverflow(z))?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::RangeOverflow(z))
        }
    }

    /// Value as a plain complex number.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.eval_scaled(z)?.to_complex().ok_or(Error::RangeOverflow(z))
    }

    /// First derivative in `z`.
    pub fn derivative(&self) -> Expr {
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var => Expr::one(),
            Node::Pole { .. } => Expr::product(vec![Expr::real(-1.0), self.pow_unchecked(2)]),
            Node::Sum(xs) => Expr::sum(xs.iter().map(Expr::derivative).collect()),
            Node::Product(xs) => {
                let mut terms = Vec::with_capacity(xs.len());
                for (i, xi) in xs.iter().enumerate() {
                    let di = xi.derivative();
                    if di.is_zero() {
                        continue;
                    }
                    let mut factors = Vec::with_capacity(xs.len());
                    for (j, xj) in xs.iter().enumerate() {
                        factors.push(if i == j { di.clone() } else { xj.clone() });
                    }
                    terms.push(Expr::product(factors));
                }
                Expr::sum(terms)
            }
            Node::Pow(b, k) => Expr::product(vec![Expr::real(f64::from(*k)), b.pow_unchecked(k - 1), b.derivative()]),
            Node::Exp(u) => Expr::product(vec![self.clone(), u.derivative()]),
        }
    }

    /// Derivative of the given order; order 0 returns the expression itself.
    pub fn differentiate(&self, order: usize) -> Expr {
        let mut e = self.clone();
        for _ in 0..order {
            e = e.derivative();
        }
        e
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

fn write_complex(f: &mut fmt::Formatter<'_>, c: Complex64) -> fmt::Result {
    let neg = |x: f64| x < 0.0 || (x == 0.0 && x.is_sign_negative());
    if c.im == 0.0 {
        if neg(c.re) {
            write!(f, "({})", c.re)
        } else {
            write!(f, "{}", c.re)
        }
    } else if c.re == 0.0 {
        if neg(c.im) {
            write!(f, "({}i)", c.im)
        } else {
            write!(f, "{}i", c.im)
        }
    } else if neg(c.im) {
        write!(f, "({}-{}i)", c.re, -c.im)
    } else {
        write!(f, "({}+{}i)", c.re, c.im)
    }
}

struct ComplexLiteral(Complex64);

impl fmt::Display for ComplexLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_complex(f, self.0)
    }
}

/// Text form of a complex constant in the expression grammar.
pub fn format_complex(c: Complex64) -> String {
    ComplexLiteral(c).to_string()
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write_complex(f, *c),
            Node::Var => write!(f, "z"),
            Node::Pole { center, .. } => write!(f, "(1/(z-{}))", ComplexLiteral(*center)),
            Node::Sum(xs) => {
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            Node::Product(xs) => {
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            Node::Pow(b, k) if *k < 0 => write!(f, "({b})^({k})"),
            Node::Pow(b, k) => write!(f, "({b})^{k}"),
            Node::Exp(u) => write!(f, "exp({u})"),
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs])
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, -rhs])
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product(vec![self, rhs])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product(vec![Expr::real(-1.0), self])
    }
}

/// Quotient `numerator / denominator` of two holomorphic expressions.
///
/// Zeros of the denominator are the poles; common zeros are screened at
/// located points rather than cancelled symbolically.
#[derive(Debug, Clone, PartialEq)]
pub struct MeromorphicFunction {
    pub numerator: Expr,
    pub denominator: Expr,
}

impl fmt::Display for MeromorphicFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denominator.is_one() {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "({}) / ({})", self.numerator, self.denominator)
        }
    }
}

impl MeromorphicFunction {
    pub fn new(numerator: Expr, denominator: Expr) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::InvalidInput("denominator is identically zero".into()));
        }
        Ok(MeromorphicFunction { numerator, denominator })
    }

    pub fn holomorphic(e: Expr) -> Self {
        MeromorphicFunction {
            numerator: e,
            denominator: Expr::one(),
        }
    }

    pub fn parse(numerator: &str, denominator: &str, plane: &PuncturedPlane) -> Result<Self> {
        MeromorphicFunction::new(parse(numerator, plane)?, parse(denominator, plane)?)
    }

    pub fn reciprocal(&self) -> Result<Self> {
        MeromorphicFunction::new(self.denominator.clone(), self.numerator.clone())
    }

    /// `ln|f(z)|`, `-inf` at zeros and `+inf` at poles.
    pub fn ln_abs(&self, z: Complex64) -> Result<f64> {
        let n = self.numerator.eval_scaled(z)?.ln_abs();
        let d = self.denominator.eval_scaled(z)?.ln_abs();
        Ok(n - d)
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let n = self.numerator.eval_scaled(z)?;
        let d = self.denominator.eval_scaled(z)?;
        n.checked_div(d)
            .ok_or(Error::AtSingularity(z))?
            .to_complex()
            .ok_or(Error::RangeOverflow(z))
    }

    /// `f'/f` by the quotient rule: `(n' d - n d') / (n d)`.
    pub fn log_derivative(&self) -> Self {
        let (n, d) = (&self.numerator, &self.denominator);
        MeromorphicFunction {
            numerator: n.derivative() * d.clone() - n.clone() * d.derivative(),
            denominator: n.clone() * d.clone(),
        }
    }
}
