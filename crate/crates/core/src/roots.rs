//! Zero counting and location in `Ω̄_r` by the argument principle.
//!
//! Winding numbers `(1/2πi) ∮ e'/e dz` are computed by tracking the argument
//! of `e` along the contour with adaptive refinement, which stays reliable
//! when a zero lies close to the contour. Counting sums the windings of the
//! boundary circles. Location covers the disk by a box quadtree, computes
//! box winding numbers the same way, and isolates zeros with damped Newton on
//! `e/e'`. The multiplicity of a zero is the winding number of a small
//! verification square around it.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::PuncturedPlane;
use crate::error::{Error, Result};
use crate::expr::{Expr, Scaled};

const ROUNDING: f64 = 0.25;
const RADIUS_OFFSETS: [f64; 3] = [0.0, 1e-6, -1e-6];
const SPLITS: [f64; 3] = [0.5123, 0.2617, 0.7591];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroRecord {
    pub location: Complex64,
    pub multiplicity: u32,
    pub entry_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub records: Vec<ZeroRecord>,
    pub search_radius: f64,
    pub residual_count: i64,
}

impl ZeroSet {
    pub fn empty(search_radius: f64) -> Self {
        ZeroSet {
            records: Vec::new(),
            search_radius,
            residual_count: 0,
        }
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.records.iter().map(|z| u64::from(z.multiplicity)).sum()
    }

    /// Number of zeros, with multiplicity, in `Ω̄_t`.
    pub fn count_within(&self, t: f64) -> u64 {
        self.records
            .iter()
            .filter(|z| z.entry_radius <= t)
            .map(|z| u64::from(z.multiplicity))
            .sum()
    }

    /// Records sorted by `(|z|, arg z)`.
    fn sort(&mut self) {
        self.records.sort_by(|a, b| {
            a.location
                .norm()
                .total_cmp(&b.location.norm())
                .then(a.location.arg().total_cmp(&b.location.arg()))
        });
    }
}

/// Winding count with the radius actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroCount {
    pub count: u64,
    pub radius: f64,
    pub perturbation: Option<f64>,
    pub raw: f64,
}

/// Winding number of `e` around a counterclockwise circle.
fn circle_winding(e: &Expr, de: &Expr, center: Complex64, radius: f64) -> Result<Option<f64>> {
    let path = |t: f64| center + Complex64::from_polar(radius, t);
    let mut total = 0.0;
    for k in 0..8 {
        let (t0, t1) = (TAU * k as f64 / 8.0, TAU * (k + 1) as f64 / 8.0);
        match track(e, de, &path, t0, t1, 1e-14)? {
            Some(d) => total += d,
            None => return Ok(None),
        }
    }
    Ok(Some(total / TAU))
}

fn boundary_winding(e: &Expr, de: &Expr, plane: &PuncturedPlane, r: f64) -> Result<Option<f64>> {
    let b = plane.boundary(r)?;
    let Some(mut total) = circle_winding(e, de, b.outer.center, b.outer.radius)? else {
        return Ok(None);
    };
    for c in &b.inner {
        match circle_winding(e, de, c.center, c.radius)? {
            Some(w) => total -= w,
            None => return Ok(None),
        }
    }
    Ok(Some(total))
}

/// Number of zeros of `e` in `Ω̄_r`, with multiplicity, and the radius used.
///
/// When a zero sits on the boundary the radius is moved outward by a
/// relative `1e-6` (then inward), so zeros on `∂Ω_r` are counted.
pub fn count_zeros_detailed(e: &Expr, plane: &PuncturedPlane, r: f64) -> Result<ZeroCount> {
    plane.check_radius(r)?;
    if e.is_zero() {
        return Err(Error::InvalidInput("expression is identically zero".into()));
    }
    let de = e.derivative();
    for offset in RADIUS_OFFSETS {
        let radius = r * (1.0 + offset);
        if radius < plane.base_radius() {
            continue;
        }
        if let Some(raw) = boundary_winding(e, &de, plane, radius)? {
            let rounded = raw.round();
            if (raw - rounded).abs() > ROUNDING || rounded < 0.0 {
                return Err(Error::NonIntegerWinding { value: raw });
            }
            return Ok(ZeroCount {
                count: rounded as u64,
                radius,
                perturbation: (offset != 0.0).then_some(offset),
                raw,
            });
        }
    }
    Err(Error::ContourThroughZero { radius: r })
}

pub fn count_zeros(e: &Expr, plane: &PuncturedPlane, r: f64) -> Result<u64> {
    Ok(count_zeros_detailed(e, plane, r)?.count)
}

fn wrap(a: f64) -> f64 {
    let x = (a + PI).rem_euclid(TAU) - PI;
    if x == -PI {
        PI
    } else {
        x
    }
}

struct Sample {
    t: f64,
    z: Complex64,
    arg: f64,
    /// `e'/e` at `z`.
    q: Complex64,
}

/// Evaluates `e` and `e'/e` for argument tracking; `None` at an exact zero
/// or where the logarithmic derivative overflows.
fn sample(e: &Expr, de: &Expr, path: &impl Fn(f64) -> Complex64, t: f64) -> Result<Option<Sample>> {
    let z = path(t);
    let v: Scaled = e.eval_scaled(z)?;
    if v.is_zero() {
        return Ok(None);
    }
    let Some(q) = de.eval_scaled(z)?.checked_div(v).and_then(|q| q.to_complex()) else {
        return Ok(None);
    };
    Ok(Some(Sample { t, z, arg: v.arg(), q }))
}

/// Continuous change of `arg e` along `path` over `[t0, t1]`, or `None`
/// when a zero lies on or too close to the path.
///
/// A piece is accepted when `Im(e'/e · Δz)` is below one at both ends and
/// the midpoint, and the wrapped change of argument agrees with the Simpson
/// estimate. Checking the ends rules out a full turn hidden next to an
/// endpoint.
fn track(e: &Expr, de: &Expr, path: &impl Fn(f64) -> Complex64, t0: f64, t1: f64, min_dt: f64) -> Result<Option<f64>> {
    let (Some(sa), Some(sb)) = (sample(e, de, path, t0)?, sample(e, de, path, t1)?) else {
        return Ok(None);
    };
    let mut stack = vec![(sa, sb)];
    let mut total = 0.0;
    while let Some((sa, sb)) = stack.pop() {
        let delta = wrap(sb.arg - sa.arg);
        let tm = 0.5 * (sa.t + sb.t);
        let Some(sm) = sample(e, de, path, tm)? else {
            return Ok(None);
        };
        let dz = sb.z - sa.z;
        let ends = [sa.q, sm.q, sb.q].map(|q| (q * dz).im);
        let est = (ends[0] + 4.0 * ends[1] + ends[2]) / 6.0;
        if ends.iter().all(|v| v.is_finite() && v.abs() < 1.0) && (delta - est).abs() < 0.1 {
            total += delta;
            continue;
        }
        if (sb.t - sa.t).abs() < min_dt * (1.0 + t0.abs().max(t1.abs())) {
            return Ok(None);
        }
        let sm2 = Sample { ..sm };
        stack.push((sm, sb));
        stack.push((sa, sm2));
    }
    Ok(Some(total))
}

/// Change of `arg e` along the segment `a → b`.
fn arg_change(e: &Expr, de: &Expr, a: Complex64, b: Complex64) -> Result<Option<f64>> {
    let path = |t: f64| a + (b - a) * t;
    let scale = (b - a).norm().max(f64::MIN_POSITIVE);
    let min_dt = 1e-13 * (1.0 + a.norm().max(b.norm())) / scale;
    track(e, de, &path, 0.0, 1.0, min_dt)
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    lo: Complex64,
    hi: Complex64,
}

impl Cell {
    fn square(center: Complex64, half: f64) -> Cell {
        let h = Complex64::new(half, half);
        Cell {
            lo: center - h,
            hi: center + h,
        }
    }

    fn side(&self) -> f64 {
        (self.hi.re - self.lo.re).max(self.hi.im - self.lo.im)
    }

    fn center(&self) -> Complex64 {
        0.5 * (self.lo + self.hi)
    }

    fn contains(&self, z: Complex64) -> bool {
        (self.lo.re..=self.hi.re).contains(&z.re) && (self.lo.im..=self.hi.im).contains(&z.im)
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            self.lo,
            Complex64::new(self.hi.re, self.lo.im),
            self.hi,
            Complex64::new(self.lo.re, self.hi.im),
        ]
    }

    fn nearest_distance(&self, p: Complex64) -> f64 {
        let x = p.re.clamp(self.lo.re, self.hi.re);
        let y = p.im.clamp(self.lo.im, self.hi.im);
        (Complex64::new(x, y) - p).norm()
    }

    fn farthest_distance(&self, p: Complex64) -> f64 {
        self.corners().iter().map(|c| (c - p).norm()).fold(0.0, f64::max)
    }

    fn split(&self, fx: f64, fy: f64) -> [Cell; 4] {
        let x = self.lo.re + fx * (self.hi.re - self.lo.re);
        let y = self.lo.im + fy * (self.hi.im - self.lo.im);
        let m = Complex64::new(x, y);
        [
            Cell { lo: self.lo, hi: m },
            Cell {
                lo: Complex64::new(x, self.lo.im),
                hi: Complex64::new(self.hi.re, y),
            },
            Cell { lo: m, hi: self.hi },
            Cell {
                lo: Complex64::new(self.lo.re, y),
                hi: Complex64::new(x, self.hi.im),
            },
        ]
    }
}

/// Winding number of `e` around the boundary of `cell`; `None` when a zero
/// lies on the boundary or the total is not close to an integer.
fn cell_winding(e: &Expr, de: &Expr, cell: &Cell) -> Result<Option<i64>> {
    let c = cell.corners();
    let mut total = 0.0;
    for k in 0..4 {
        match arg_change(e, de, c[k], c[(k + 1) % 4])? {
            Some(d) => total += d,
            None => return Ok(None),
        }
    }
    let w = total / TAU;
    let rounded = w.round();
    Ok(((w - rounded).abs() < 0.1).then_some(rounded as i64))
}

/// Damped Newton on `e/e'` from `start`, confined near `cell`.
fn newton(e: &Expr, de: &Expr, dde: &Expr, cell: &Cell, start: Complex64) -> Result<Option<Complex64>> {
    let mut z = start;
    let side = cell.side();
    for _ in 0..80 {
        let v = e.eval_scaled(z)?;
        if v.is_zero() {
            return Ok(Some(z));
        }
        let d1 = de.eval_scaled(z)?;
        let d2 = dde.eval_scaled(z)?;
        let (Some(g), Some(h)) = (
            v.checked_div(d1).and_then(|q| q.to_complex()),
            d2.checked_div(d1).and_then(|q| q.to_complex()),
        ) else {
            return Ok(None);
        };
        let slope = Complex64::new(1.0, 0.0) - g * h;
        let mut step = g / slope;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return Ok(None);
        }
        if step.norm() > 0.5 * side {
            step *= 0.5 * side / step.norm();
        }
        z -= step;
        if cell.nearest_distance(z) > side {
            return Ok(None);
        }
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            return Ok(Some(z));
        }
    }
    Ok(Some(z))
}

#[derive(Debug, Clone, Copy)]
struct Tile {
    cell: Cell,
    /// Winding number of the boundary; absent for cells too close to a
    /// puncture, which are split without evaluating `e` there.
    winding: Option<i64>,
}

enum TileOutcome {
    Drop,
    Found(ZeroRecord),
    Split(Vec<Tile>),
}

struct Locator<'a> {
    e: &'a Expr,
    de: Expr,
    dde: Expr,
    plane: &'a PuncturedPlane,
    r: f64,
    tol: f64,
}

impl Locator<'_> {
    fn outer_limit(&self) -> f64 {
        self.r * (1.0 + 1e-3)
    }

    fn discard(&self, cell: &Cell) -> bool {
        if cell.nearest_distance(Complex64::new(0.0, 0.0)) > self.outer_limit() {
            return true;
        }
        let inner = (1.0 - 1e-3) / self.r;
        self.plane
            .punctures()
            .iter()
            .any(|&c| cell.farthest_distance(c) < inner)
    }

    fn near_puncture(&self, cell: &Cell) -> bool {
        let safe = 0.5 / self.r;
        self.plane.punctures().iter().any(|&c| cell.nearest_distance(c) < safe)
    }

    /// Tile for `cell`, or `None` when a zero lies on its boundary.
    fn tile(&self, cell: Cell) -> Result<Option<Tile>> {
        if self.discard(&cell) || self.near_puncture(&cell) {
            return Ok(Some(Tile { cell, winding: None }));
        }
        Ok(cell_winding(self.e, &self.de, &cell)?.map(|w| Tile { cell, winding: Some(w) }))
    }

    /// Splits `cell`, moving the split lines by a quarter cell when one of
    /// them runs through a zero.
    fn split(&self, cell: &Cell) -> Result<Vec<Tile>> {
        'pairs: for (k, fx) in SPLITS.iter().enumerate() {
            let fy = SPLITS[(k + 1) % SPLITS.len()];
            let mut kids = Vec::with_capacity(4);
            for child in cell.split(*fx, fy) {
                match self.tile(child)? {
                    Some(t) => kids.push(t),
                    None => continue 'pairs,
                }
            }
            return Ok(kids);
        }
        Err(Error::ClusterUnresolved {
            location: cell.center(),
            separation: cell.side(),
        })
    }

    fn isolate(&self, cell: &Cell, w: i64) -> Result<Option<ZeroRecord>> {
        let Some(z) = newton(self.e, &self.de, &self.dde, cell, cell.center())? else {
            return Ok(None);
        };
        if !cell.contains(z) {
            return Ok(None);
        }
        // Past 1000·tol the squares have cluster scale: a multiple zero of an
        // expanded expression splits into nearby simple ones under rounding.
        let scale = 1.0 + z.norm();
        for half in [
            10.0 * self.tol,
            100.0 * self.tol,
            1000.0 * self.tol,
            1e-7 * scale,
            1e-6 * scale,
        ] {
            let square = Cell::square(z, half);
            if let Some(m) = cell_winding(self.e, &self.de, &square)? {
                if m == w {
                    return Ok(Some(ZeroRecord {
                        location: z,
                        multiplicity: m as u32,
                        entry_radius: self.plane.entry_time(z)?,
                    }));
                }
                if m > w {
                    break;
                }
            }
        }
        Ok(None)
    }

    fn process(&self, tile: Tile) -> Result<TileOutcome> {
        let cell = tile.cell;
        if self.discard(&cell) {
            return Ok(TileOutcome::Drop);
        }
        let Some(w) = tile.winding else {
            return Ok(TileOutcome::Split(self.split(&cell)?));
        };
        if w < 0 {
            return Err(Error::NonIntegerWinding { value: w as f64 });
        }
        if w == 0 {
            return Ok(TileOutcome::Drop);
        }
        if let Some(rec) = self.isolate(&cell, w)? {
            return Ok(TileOutcome::Found(rec));
        }
        if cell.side() < 10.0 * self.tol {
            return Err(Error::ClusterUnresolved {
                location: cell.center(),
                separation: cell.side(),
            });
        }
        Ok(TileOutcome::Split(self.split(&cell)?))
    }

    fn run(&self) -> Result<Vec<ZeroRecord>> {
        let mut root = None;
        for (k, f) in SPLITS.iter().enumerate() {
            let half = self.outer_limit() * (1.0 + 1e-3 * (f + k as f64));
            if let Some(t) = self.tile(Cell::square(Complex64::new(0.0, 0.0), half))? {
                root = Some(t);
                break;
            }
        }
        let root = root.ok_or(Error::ContourThroughZero { radius: self.r })?;
        let mut level = vec![root];
        let mut found = Vec::new();
        while !level.is_empty() {
            let outcomes: Vec<Result<TileOutcome>> = level.par_iter().map(|t| self.process(*t)).collect();
            let mut next = Vec::new();
            for outcome in outcomes {
                match outcome? {
                    TileOutcome::Drop => {}
                    TileOutcome::Found(z) => found.push(z),
                    TileOutcome::Split(kids) => next.extend(kids),
                }
            }
            level = next;
        }
        Ok(found)
    }
}

/// Locates every zero of `e` in `Ω̄_r` to within `tol`.
///
/// The result is checked against the argument-principle count; a mismatch
/// is reported as `IncompleteLocation`.
pub fn locate_zeros(e: &Expr, plane: &PuncturedPlane, r: f64, tol: f64) -> Result<ZeroSet> {
    plane.check_radius(r)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    if e.as_const().is_some() {
        if e.is_zero() {
            return Err(Error::InvalidInput("expression is identically zero".into()));
        }
        return Ok(ZeroSet::empty(r));
    }
    let count = count_zeros_detailed(e, plane, r)?;
    let radius = count.radius;
    let locator = Locator {
        e,
        de: e.derivative(),
        dde: e.differentiate(2),
        plane,
        r: radius,
        tol,
    };
    let found = locator.run()?;
    let mut set = ZeroSet {
        records: found.into_iter().filter(|z| z.entry_radius <= radius).collect(),
        search_radius: radius,
        residual_count: 0,
    };
    set.sort();
    let located = set.total_multiplicity() as i64;
    set.residual_count = count.count as i64 - located;
    if set.residual_count != 0 {
        return Err(Error::IncompleteLocation {
            expected: count.count as i64,
            found: located,
        });
    }
    Ok(set)
}

/// `Σ m̃ · log(r / max(entry, r_0))` over records with entry radius `≤ r`.
pub fn counting_function(zs: &ZeroSet, plane: &PuncturedPlane, r: f64, truncation: Option<u32>) -> Result<f64> {
    plane.check_radius(r)?;
    let r0 = plane.base_radius();
    Ok(zs
        .records
        .iter()
        .filter(|z| z.entry_radius <= r)
        .map(|z| {
            let m = truncation.map_or(z.multiplicity, |t| z.multiplicity.min(t));
            f64::from(m) * (r / z.entry_radius.max(r0)).ln()
        })
        .fold(0.0, |acc, v| acc + v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pm1() -> PuncturedPlane {
        PuncturedPlane::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap()
    }

    fn factored(roots: &[(Complex64, i32)], lead: Complex64) -> Expr {
        let mut factors = vec![Expr::constant(lead)];
        for &(a, m) in roots {
            factors.push(Expr::linear(a).powi(m).unwrap());
        }
        Expr::product(factors)
    }

    #[test]
    fn count_examples() {
        let p = pm1();
        assert_eq!(count_zeros(&parse("z", &p).unwrap(), &p, 3.0).unwrap(), 1);
        let e = parse("(z-5)^2", &p).unwrap();
        assert_eq!(count_zeros(&e, &p, 3.0).unwrap(), 0);
        assert_eq!(count_zeros(&e, &p, 6.0).unwrap(), 2);
        assert_eq!(count_zeros(&parse("exp(1/(z-1))", &p).unwrap(), &p, 10.0).unwrap(), 0);
    }

    #[test]
    fn boundary_zero_is_counted_after_perturbation() {
        let p = pm1();
        let e = parse("z-3", &p).unwrap();
        let n = count_zeros_detailed(&e, &p, 3.0).unwrap();
        assert_eq!(n.count, 1);
        assert_eq!(n.perturbation, Some(1e-6));
        for k in 2..=5 {
            let e = factored(&[(c(3.0, 0.0), k), (c(-0.5, 0.0), 2)], c(1.0, 0.0));
            assert_eq!(count_zeros(&e, &p, 3.0).unwrap(), k as u64 + 2);
        }
    }

    #[test]
    fn zeros_near_punctures_are_excluded() {
        // exp(1/(z-1)) - 2 has zeros 1 + 1/(ln 2 + 2πik) accumulating at 1.
        let p = pm1();
        let e = parse("exp(1/(z-1)) - 2", &p).unwrap();
        let r = 20.0;
        let zs = locate_zeros(&e, &p, r, 1e-11).unwrap();
        let expected: Vec<Complex64> = (-10i32..=10)
            .map(|k| c(1.0, 0.0) + c(2f64.ln(), TAU * f64::from(k)).inv())
            .filter(|z| p.entry_time(*z).unwrap() <= r)
            .collect();
        assert_eq!(zs.records.len(), expected.len());
        for z in &expected {
            assert!(zs.records.iter().any(|rec| (rec.location - z).norm() < 1e-9));
        }
        assert_eq!(count_zeros(&e, &p, r).unwrap(), expected.len() as u64);
    }

    #[test]
    fn locate_examples() {
        let p = pm1();
        let e = parse("z*(z-2)^3", &p).unwrap();
        let zs = locate_zeros(&e, &p, 3.0, 1e-11).unwrap();
        assert_eq!(zs.records.len(), 2);
        assert!(zs.records[0].location.norm() < 1e-9);
        assert_eq!(zs.records[0].multiplicity, 1);
        assert_eq!(zs.records[0].entry_radius, 1.0);
        assert!((zs.records[1].location - c(2.0, 0.0)).norm() < 1e-9);
        assert_eq!(zs.records[1].multiplicity, 3);
        assert!((zs.records[1].entry_radius - 2.0).abs() < 1e-9);
        assert_eq!(zs.residual_count, 0);

        let q = PuncturedPlane::new(vec![c(0.5, 0.0), c(-0.5, 0.0)]).unwrap();
        assert_eq!(q.base_radius(), 2.5);
        let zs = locate_zeros(&parse("z^2 + 1", &q).unwrap(), &q, 3.0, 1e-11).unwrap();
        assert_eq!(zs.records.len(), 2);
        for target in [c(0.0, 1.0), c(0.0, -1.0)] {
            assert!(zs
                .records
                .iter()
                .any(|z| (z.location - target).norm() < 1e-9 && z.multiplicity == 1));
        }

        let zs = locate_zeros(&Expr::real(5.0), &p, 4.0, 1e-11).unwrap();
        assert!(zs.records.is_empty());
    }

    #[test]
    fn counting_examples() {
        let p = pm1();
        let zs = locate_zeros(&parse("z", &p).unwrap(), &p, 8.0, 1e-11).unwrap();
        assert!((counting_function(&zs, &p, 8.0, None).unwrap() - 4f64.ln()).abs() < 1e-12);

        let zs = locate_zeros(&parse("(z-2)^3", &p).unwrap(), &p, 8.0, 1e-11).unwrap();
        assert!((counting_function(&zs, &p, 8.0, Some(1)).unwrap() - 4f64.ln()).abs() < 1e-9);
        assert!((counting_function(&zs, &p, 8.0, None).unwrap() - 3.0 * 4f64.ln()).abs() < 1e-9);

        assert_eq!(counting_function(&ZeroSet::empty(5.0), &p, 5.0, None).unwrap(), 0.0);
        assert!(matches!(
            counting_function(&zs, &p, 1.0, None),
            Err(Error::RadiusBelowBase { .. })
        ));
    }

    #[test]
    fn counting_matches_integrated_step_function() {
        let p = pm1();
        let e = factored(&[(c(3.0, 1.0), 2), (c(-5.0, 0.5), 1), (c(0.2, 7.0), 1)], c(1.0, 0.0));
        let r = 12.0;
        let zs = locate_zeros(&e, &p, r, 1e-11).unwrap();
        let closed = counting_function(&zs, &p, r, None).unwrap();

        let trapezoid = |grid: &[f64]| {
            grid.windows(2)
                .map(|w| {
                    let f = |t: f64| zs.count_within(t) as f64 / t;
                    0.5 * (w[1] - w[0]) * (f(w[0]) + f(w[1]))
                })
                .sum::<f64>()
        };
        let r0 = p.base_radius();
        let coarse: Vec<f64> = (0..400).map(|k| r0 + (r - r0) * k as f64 / 399.0).collect();
        assert!((trapezoid(&coarse) - closed).abs() < 1e-3 * closed.max(1.0) * 30.0);

        let mut fine = coarse.clone();
        for z in &zs.records {
            if z.entry_radius > r0 {
                fine.push(z.entry_radius);
                fine.push(z.entry_radius * (1.0 - 1e-15));
            }
        }
        fine.sort_by(f64::total_cmp);
        fine.dedup();
        // Between jumps the integrand is m/t; refine each panel so the
        // trapezoid error on 1/t is below 1e-6.
        let refined: Vec<f64> = fine
            .windows(2)
            .flat_map(|w| (0..200).map(move |k| w[0] + (w[1] - w[0]) * k as f64 / 200.0))
            .chain(std::iter::once(r))
            .collect();
        assert!((trapezoid(&refined) - closed).abs() < 1e-6);
    }

    #[test]
    fn product_zeros_are_unions() {
        let p = pm1();
        let a = factored(&[(c(3.0, 0.0), 1), (c(0.0, 2.0), 2)], c(2.0, 0.0));
        let b = factored(&[(c(3.0, 0.0), 2), (c(-4.0, 1.0), 1)], c(1.0, 0.0));
        let r = 8.0;
        let za = locate_zeros(&a, &p, r, 1e-11).unwrap();
        let zb = locate_zeros(&b, &p, r, 1e-11).unwrap();
        let zab = locate_zeros(&(a * b), &p, r, 1e-11).unwrap();
        assert_eq!(
            zab.total_multiplicity(),
            za.total_multiplicity() + zb.total_multiplicity()
        );
        let at3 = zab
            .records
            .iter()
            .find(|z| (z.location - c(3.0, 0.0)).norm() < 1e-9)
            .unwrap();
        assert_eq!(at3.multiplicity, 3);
    }

    #[test]
    fn random_factored_polynomials() {
        let p = pm1();
        let r = 6.0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut roots = Vec::new();
            let mut degree = 0;
            let target = rng.gen_range(1..=8);
            while degree < target {
                let z = c(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
                let entry = p.entry_time(z).unwrap();
                if (entry - r).abs() < 0.05 || roots.iter().any(|(w, _): &(Complex64, i32)| (w - z).norm() < 1e-3) {
                    continue;
                }
                let m = rng.gen_range(1..=(target - degree).min(3));
                roots.push((z, m));
                degree += m;
            }
            let e = factored(&roots, c(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0)));
            let zs = locate_zeros(&e, &p, r, 1e-11).unwrap();
            let inside: Vec<_> = roots.iter().filter(|(z, _)| p.entry_time(*z).unwrap() <= r).collect();
            assert_eq!(zs.records.len(), inside.len());
            for (z, m) in inside {
                let rec = zs.records.iter().find(|rec| (rec.location - z).norm() < 1e-9).unwrap();
                assert_eq!(rec.multiplicity as i32, *m);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn truncation_is_monotone(delta in 1u32..5, r in 2.0f64..40.0) {
            let p = pm1();
            let e = factored(&[(c(0.0, 0.0), 4), (c(3.0, 1.0), 2), (c(5.0, -5.0), 3)], c(1.0, 0.0));
            let zs = locate_zeros(&e, &p, 40.0, 1e-11).unwrap();
            let a = counting_function(&zs, &p, r, Some(delta)).unwrap();
            let b = counting_function(&zs, &p, r, Some(delta + 1)).unwrap();
            let full = counting_function(&zs, &p, r, None).unwrap();
            prop_assert!(a <= b + 1e-15 && b <= full + 1e-15);
        }
    }
}
