//! Residual and inequality checkers assembled from the functionals.
//!
//! Every checker returns a [`TheoremReport`]: the sampled series, the
//! criteria applied to them and the verdict. The verdict can be recomputed
//! from the stored numbers alone with [`TheoremReport::recheck`].

mod fmt;
mod smt;
mod uniqueness;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::Config;
use crate::domain::PuncturedPlane;
use crate::error::{Error, Result};
use crate::expr::MeromorphicFunction;
use crate::fit::{fit_envelope, judge, Envelope, EnvelopeShape};
use crate::nevanlinna::{counting_n0, jensen_sides, log_derivative_proximity, proximity_m0, Divisor};

pub use fmt::fmt_residual_series;
pub use smt::{
    lemma31_report, monomial_lift, smt_hyperplanes_report, smt_hypersurfaces_report, wronskian_order_ledger,
    LedgerEntry, MONOMIAL_LIFT_BUDGET,
};
pub use uniqueness::{
    build_uniqueness_hypersurface, example2, uniqueness_decision, uniqueness_inequality_report, Decision,
    UniquenessConstruction,
};

/// Which statement a report checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    Jensen,
    LogDerivative,
    FirstMain,
    SmtHyperplanes,
    Lemma31,
    SmtHypersurfaces,
    UniquenessInequality,
    UniquenessDecision,
}

impl TheoremId {
    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremId::Jensen => "jensen",
            TheoremId::LogDerivative => "log_derivative",
            TheoremId::FirstMain => "first_main",
            TheoremId::SmtHyperplanes => "smt_hyperplanes",
            TheoremId::Lemma31 => "lemma31",
            TheoremId::SmtHypersurfaces => "smt_hypersurfaces",
            TheoremId::UniquenessInequality => "uniqueness_inequality",
            TheoremId::UniquenessDecision => "uniqueness_decision",
        }
    }

    /// Identities store `lhs − rhs` as slack; inequalities store `rhs − lhs`.
    pub fn is_identity(&self) -> bool {
        matches!(self, TheoremId::Jensen | TheoremId::FirstMain)
    }
}

/// A test applied to named series of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    /// `max − min` of the series below `tolerance`.
    Constant {
        series: String,
        tolerance: f64,
        range: f64,
        passed: bool,
    },
    /// `max |value|` below `tolerance`.
    Small {
        series: String,
        tolerance: f64,
        max_abs: f64,
        passed: bool,
    },
    /// `lower ≤ upper + E` with a fitted envelope `E` in `r` and `growth`.
    Envelope {
        label: String,
        lower: String,
        upper: String,
        growth: String,
        envelope: Envelope,
        pass_fraction: f64,
        failures: Vec<usize>,
        passed: bool,
    },
    /// A fitted envelope coefficient below a calibration limit.
    Coefficient {
        label: String,
        criterion: usize,
        value: f64,
        limit: f64,
        passed: bool,
    },
    /// A yes/no outcome decided outside the series.
    Flag { label: String, passed: bool },
}

impl Criterion {
    pub fn passed(&self) -> bool {
        match self {
            Criterion::Constant { passed, .. }
            | Criterion::Small { passed, .. }
            | Criterion::Envelope { passed, .. }
            | Criterion::Coefficient { passed, .. }
            | Criterion::Flag { passed, .. } => *passed,
        }
    }
}

/// Sampled series, criteria and verdict for one theorem check.
///
/// For identities `slack` holds the residual `lhs − rhs`; for inequalities
/// it holds `rhs − lhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem: TheoremId,
    pub r_grid: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub slack: Vec<f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub criteria: Vec<Criterion>,
    pub verdict: bool,
    pub parameters: BTreeMap<String, Value>,
    pub notes: Vec<String>,
}

impl TheoremReport {
    pub(crate) fn new(theorem: TheoremId, r_grid: &[f64]) -> Self {
        TheoremReport {
            theorem,
            r_grid: r_grid.to_vec(),
            lhs: Vec::new(),
            rhs: Vec::new(),
            slack: Vec::new(),
            series: BTreeMap::new(),
            criteria: Vec::new(),
            verdict: false,
            parameters: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub(crate) fn sides(&mut self, lhs: Vec<f64>, rhs: Vec<f64>, identity: bool) {
        self.slack = lhs
            .iter()
            .zip(&rhs)
            .map(|(l, r)| if identity { l - r } else { r - l })
            .collect();
        self.lhs = lhs;
        self.rhs = rhs;
    }

    pub(crate) fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub(crate) fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Name of the slack column: `residual` for identities.
    pub fn slack_label(&self) -> &'static str {
        if self.theorem.is_identity() {
            "residual"
        } else {
            "slack"
        }
    }

    /// Looks up `r`, `lhs`, `rhs`, `slack` (or `residual`) or a named series.
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        match name {
            "r" => Some(&self.r_grid),
            "lhs" => Some(&self.lhs),
            "rhs" => Some(&self.rhs),
            "slack" => Some(&self.slack),
            "residual" if self.theorem.is_identity() => Some(&self.slack),
            _ => self.series.get(name).map(Vec::as_slice),
        }
    }

    fn need(&self, name: &str) -> Result<&[f64]> {
        self.get(name)
            .ok_or_else(|| Error::InvalidInput(format!("report has no series `{name}`")))
    }

    pub(crate) fn check_constant(&mut self, series: &str, tolerance: f64) -> Result<()> {
        let range = range(self.need(series)?);
        self.criteria.push(Criterion::Constant {
            series: series.into(),
            tolerance,
            range,
            passed: range < tolerance,
        });
        Ok(())
    }

    pub(crate) fn check_small(&mut self, series: &str, tolerance: f64) -> Result<()> {
        let max_abs = max_abs(self.need(series)?);
        self.criteria.push(Criterion::Small {
            series: series.into(),
            tolerance,
            max_abs,
            passed: max_abs < tolerance,
        });
        Ok(())
    }

    /// Fits and tests `lower ≤ upper + E(r, growth)`; returns the index of
    /// the new criterion.
    pub(crate) fn check_envelope(
        &mut self,
        label: &str,
        lower: &str,
        upper: &str,
        growth: &str,
        shape: EnvelopeShape,
    ) -> Result<usize> {
        let (lo, up, t) = (self.need(lower)?, self.need(upper)?, self.need(growth)?);
        let deficit: Vec<f64> = lo.iter().zip(up).map(|(a, b)| a - b).collect();
        let envelope = fit_envelope(shape, &self.r_grid, t, &deficit)?;
        let v = judge(&envelope, &self.r_grid, t, lo, up);
        self.criteria.push(Criterion::Envelope {
            label: label.into(),
            lower: lower.into(),
            upper: upper.into(),
            growth: growth.into(),
            envelope,
            pass_fraction: v.pass_fraction,
            failures: v.failures,
            passed: v.passed,
        });
        Ok(self.criteria.len() - 1)
    }

    pub(crate) fn check_coefficient(&mut self, label: &str, criterion: usize, limit: f64) -> Result<()> {
        let Some(Criterion::Envelope { envelope, .. }) = self.criteria.get(criterion) else {
            return Err(Error::InvalidInput(format!("criterion {criterion} is not an envelope")));
        };
        let value = envelope.b;
        self.criteria.push(Criterion::Coefficient {
            label: label.into(),
            criterion,
            value,
            limit,
            passed: value < limit,
        });
        Ok(())
    }

    pub(crate) fn flag(&mut self, label: &str, passed: bool) {
        self.criteria.push(Criterion::Flag {
            label: label.into(),
            passed,
        });
    }

    pub(crate) fn finish(mut self) -> Self {
        self.verdict = self.criteria.iter().all(Criterion::passed);
        self
    }

    /// Recomputes every criterion from the stored series, refitting the
    /// envelopes, and returns the resulting verdict.
    pub fn recheck(&self) -> Result<bool> {
        let mut ok = true;
        for c in &self.criteria {
            let passed = match c {
                Criterion::Constant {
                    series,
                    tolerance,
                    range: stored,
                    ..
                } => {
                    let r = range(self.need(series)?);
                    ok &= r == *stored;
                    r < *tolerance
                }
                Criterion::Small {
                    series,
                    tolerance,
                    max_abs: stored,
                    ..
                } => {
                    let m = max_abs(self.need(series)?);
                    ok &= m == *stored;
                    m < *tolerance
                }
                Criterion::Envelope {
                    lower,
                    upper,
                    growth,
                    envelope,
                    ..
                } => {
                    let (lo, up, t) = (self.need(lower)?, self.need(upper)?, self.need(growth)?);
                    let deficit: Vec<f64> = lo.iter().zip(up).map(|(a, b)| a - b).collect();
                    let refit = fit_envelope(envelope.shape, &self.r_grid, t, &deficit)?;
                    ok &= refit == *envelope;
                    judge(&refit, &self.r_grid, t, lo, up).passed
                }
                Criterion::Coefficient {
                    criterion,
                    limit,
                    value,
                    ..
                } => match self.criteria.get(*criterion) {
                    Some(Criterion::Envelope { envelope, .. }) => {
                        ok &= envelope.b == *value;
                        envelope.b < *limit
                    }
                    _ => false,
                },
                Criterion::Flag { passed, .. } => *passed,
            };
            ok &= passed;
        }
        Ok(ok)
    }

    /// Radii at which some envelope test failed.
    pub fn exceptions(&self) -> Vec<f64> {
        let mut idx: Vec<usize> = self
            .criteria
            .iter()
            .flat_map(|c| match c {
                Criterion::Envelope { failures, .. } => failures.clone(),
                _ => Vec::new(),
            })
            .collect();
        idx.sort_unstable();
        idx.dedup();
        idx.into_iter().map(|i| self.r_grid[i]).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    /// One row per radius: `r, lhs, rhs, slack`, the named series, and an
    /// `exception` flag. Floats carry 17 significant digits.
    pub fn to_csv(&self) -> Result<String> {
        let exceptions = self.exceptions();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["r", "lhs", "rhs", self.slack_label()];
        header.extend(self.series.keys().map(String::as_str));
        header.push("exception");
        w.write_record(&header).map_err(csv_err)?;
        for (i, r) in self.r_grid.iter().enumerate() {
            let mut row = vec![fmt_f64(*r)];
            for s in [&self.lhs, &self.rhs, &self.slack] {
                row.push(s.get(i).map_or_else(String::new, |v| fmt_f64(*v)));
            }
            row.extend(self.series.values().map(|s| fmt_f64(s[i])));
            row.push(u8::from(exceptions.contains(r)).to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(e.to_string())
}

/// `{:.16e}`: round-trips every finite `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn range(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(*x), hi.max(*x))
    });
    if v.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Radii `≥ r_0`, strictly increasing, at least two of them.
pub fn validate_grid(plane: &PuncturedPlane, r_grid: &[f64]) -> Result<()> {
    if r_grid.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "r-grid needs at least 2 radii, got {}",
            r_grid.len()
        )));
    }
    if r_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("r-grid must be strictly increasing".into()));
    }
    plane.check_radius(r_grid[0])
}

/// Evaluates `g` at every radius in parallel.
pub(crate) fn per_radius<T, F>(r_grid: &[f64], g: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(f64) -> Result<T> + Sync,
{
    r_grid.par_iter().map(|&r| g(r)).collect()
}

/// `N_0(r, 1/f) − N_0(r, f)` against the contour integral side of Jensen's
/// formula on the whole grid; passes when every residual is below `1e-8`.
pub fn jensen_report(
    f: &MeromorphicFunction,
    plane: &PuncturedPlane,
    r_grid: &[f64],
    cfg: &Config,
) -> Result<TheoremReport> {
    validate_grid(plane, r_grid)?;
    let r_max = *r_grid.last().unwrap();
    let divisor = Divisor::locate(f, plane, r_max, cfg)?;
    let sides = per_radius(r_grid, |r| jensen_sides(f, plane, &divisor, r, cfg))?;
    let mut rep = TheoremReport::new(TheoremId::Jensen, r_grid);
    rep.sides(
        sides.iter().map(|s| s.counting).collect(),
        sides.iter().map(|s| s.integral).collect(),
        true,
    );
    for (s, r) in sides.iter().zip(r_grid) {
        if s.perturbed {
            rep.note(format!("contour radius perturbed at r = {r}"));
        }
    }
    rep.param("function", f.to_string());
    rep.check_small("slack", 1e-8)?;
    Ok(rep.finish())
}

/// Growth of `m_0(r, f'/f)` against `A log r + B log⁺ T_0(r, f) + C`.
pub fn log_derivative_report(
    f: &MeromorphicFunction,
    plane: &PuncturedPlane,
    r_grid: &[f64],
    cfg: &Config,
) -> Result<TheoremReport> {
    validate_grid(plane, r_grid)?;
    let rows = per_radius(r_grid, |r| {
        Ok((
            log_derivative_proximity(f, plane, r, cfg)?,
            proximity_m0(f, plane, r, cfg)?,
            counting_n0(f, plane, r, cfg)?,
        ))
    })?;
    let mut rep = TheoremReport::new(TheoremId::LogDerivative, r_grid);
    rep.sides(rows.iter().map(|p| p.0).collect(), vec![0.0; rows.len()], false);
    rep.series.insert("m_0".into(), rows.iter().map(|p| p.1).collect());
    rep.series.insert("N_0".into(), rows.iter().map(|p| p.2).collect());
    rep.series
        .insert("T_0".into(), rows.iter().map(|p| p.1 + p.2).collect());
    rep.param("function", f.to_string());
    rep.check_envelope(
        "m_0(f'/f) <= O(log r + log T_0)",
        "lhs",
        "rhs",
        "T_0",
        EnvelopeShape::LogGrowth,
    )?;
    Ok(rep.finish())
}
