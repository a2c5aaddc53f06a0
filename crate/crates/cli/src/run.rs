use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use vdist::theorems::{
    fmt_f64, fmt_residual_series, jensen_report, lemma31_report, log_derivative_report, smt_hyperplanes_report,
    smt_hypersurfaces_report, uniqueness_decision, uniqueness_inequality_report, TheoremReport,
};
use vdist::Config;

use crate::scenario::{construction, CheckSpec, Resolved};

/// Runs one check. Name lookups were validated by `resolve`.
pub fn run_check(res: &Resolved, check: &CheckSpec) -> vdist::Result<TheoremReport> {
    let (grid, cfg) = (&res.r_grid, &res.config);
    let lookup = |m: String| vdist::Error::InvalidInput(m);
    match check {
        CheckSpec::Jensen { function } => jensen_report(&res.functions[function], &res.plane, grid, cfg),
        CheckSpec::LogDerivative { function } => log_derivative_report(&res.functions[function], &res.plane, grid, cfg),
        CheckSpec::FirstMain { curve, target } => {
            fmt_residual_series(&res.curves[curve], res.target(target).map_err(lookup)?, grid, cfg)
        }
        CheckSpec::SmtHyperplanes { curve, targets } => smt_hyperplanes_report(
            &res.curves[curve],
            &res.hyperplanes(targets).map_err(lookup)?,
            grid,
            cfg,
        ),
        CheckSpec::Lemma31 { curve, targets } => lemma31_report(
            &res.curves[curve],
            &res.hyperplanes(targets).map_err(lookup)?,
            grid,
            cfg,
        ),
        CheckSpec::SmtHypersurfaces {
            curve,
            targets,
            epsilon,
        } => smt_hypersurfaces_report(
            &res.curves[curve],
            &res.hypersurfaces(targets).map_err(lookup)?,
            *epsilon,
            grid,
            cfg,
        ),
        CheckSpec::UniquenessInequality { curve, construction: c } => {
            uniqueness_inequality_report(&res.curves[curve], &construction(c)?, grid, cfg)
        }
        CheckSpec::UniquenessDecision {
            curve,
            other,
            construction: c,
        } => uniqueness_decision(
            &res.curves[curve],
            &res.curves[other],
            &construction(c)?,
            grid,
            res.agreement_tol,
            cfg,
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub label: String,
    pub check: CheckSpec,
    pub verdict: bool,
    pub report_json: String,
    pub report_csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub summary: String,
    pub config: Config,
    pub agreement_tol: f64,
    pub r_grid: Vec<f64>,
    pub checks: Vec<CheckSummary>,
    pub series_csv: String,
    pub plot_csv: String,
    pub passed: bool,
}

/// Why a run stopped before producing a verdict.
#[derive(Debug)]
pub enum RunError {
    Check { label: String, source: vdist::Error },
    Io(io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Check { label, source } => write!(f, "{label}: {source}"),
            RunError::Io(e) => write!(f, "writing outputs: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

fn label(i: usize, report: &TheoremReport) -> String {
    format!("{:02}-{}", i + 1, report.theorem.as_str())
}

/// Columns of a report in output order: sides, slack, then named series.
fn columns(report: &TheoremReport) -> Vec<(String, &[f64])> {
    let mut out: Vec<(String, &[f64])> = vec![
        ("lhs".into(), &report.lhs),
        ("rhs".into(), &report.rhs),
        (report.slack_label().into(), &report.slack),
    ];
    out.extend(report.series.iter().map(|(k, v)| (k.clone(), v.as_slice())));
    out
}

fn csv_bytes(rows: Vec<Vec<String>>) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

/// Long-format table of every series: `check, theorem, series, r, value`.
fn series_table(reports: &[(String, TheoremReport)]) -> io::Result<Vec<u8>> {
    let mut rows = vec![["check", "theorem", "series", "r", "value"].map(String::from).to_vec()];
    for (label, rep) in reports {
        for (name, values) in columns(rep) {
            for (r, v) in rep.r_grid.iter().zip(values) {
                rows.push(vec![
                    label.clone(),
                    rep.theorem.as_str().into(),
                    name.clone(),
                    fmt_f64(*r),
                    fmt_f64(*v),
                ]);
            }
        }
    }
    csv_bytes(rows)
}

/// Wide plot data: `r` then one `label:series` column per functional.
fn plot_table(r_grid: &[f64], reports: &[(String, TheoremReport)]) -> io::Result<Vec<u8>> {
    let mut header = vec!["r".to_string()];
    let mut cols = Vec::new();
    for (label, rep) in reports {
        for (name, values) in columns(rep) {
            header.push(format!("{label}:{name}"));
            cols.push(values);
        }
    }
    let mut rows = vec![header];
    for (i, r) in r_grid.iter().enumerate() {
        let mut row = vec![fmt_f64(*r)];
        row.extend(cols.iter().map(|c| fmt_f64(c[i])));
        rows.push(row);
    }
    csv_bytes(rows)
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<String> {
    fs::write(dir.join(name), bytes)?;
    Ok(name.to_string())
}

/// Runs every check of the scenario and writes its artifacts into `dir`.
pub fn run_scenario(res: &Resolved, dir: &Path) -> Result<RunSummary, RunError> {
    let mut reports = Vec::new();
    for (i, check) in res.scenario.checks.iter().enumerate() {
        let rep = run_check(res, check).map_err(|source| RunError::Check {
            label: format!("checks[{i}] ({})", check_name(check)),
            source,
        })?;
        reports.push((label(i, &rep), rep));
    }

    fs::create_dir_all(dir)?;
    let mut checks = Vec::new();
    for ((label, rep), check) in reports.iter().zip(&res.scenario.checks) {
        let json = rep.to_json().map_err(|e| io::Error::other(e.to_string()))?;
        let csv = rep.to_csv().map_err(|e| io::Error::other(e.to_string()))?;
        checks.push(CheckSummary {
            label: label.clone(),
            check: check.clone(),
            verdict: rep.verdict,
            report_json: write(dir, &format!("{label}.json"), json.as_bytes())?,
            report_csv: write(dir, &format!("{label}.csv"), csv.as_bytes())?,
        });
    }
    let series_csv = write(dir, "series.csv", &series_table(&reports)?)?;
    let plot_csv = write(dir, "plot.csv", &plot_table(&res.r_grid, &reports)?)?;
    let summary = RunSummary {
        scenario: res.scenario.name.clone(),
        summary: res.scenario.summary.clone(),
        config: res.config,
        agreement_tol: res.agreement_tol,
        r_grid: res.r_grid.clone(),
        passed: checks.iter().all(|c| c.verdict),
        checks,
        series_csv,
        plot_csv,
    };
    let text = serde_json::to_string_pretty(&summary).map_err(io::Error::other)?;
    write(dir, "summary.json", text.as_bytes())?;
    Ok(summary)
}

pub fn check_name(check: &CheckSpec) -> &'static str {
    match check {
        CheckSpec::Jensen { .. } => "jensen",
        CheckSpec::LogDerivative { .. } => "log_derivative",
        CheckSpec::FirstMain { .. } => "first_main",
        CheckSpec::SmtHyperplanes { .. } => "smt_hyperplanes",
        CheckSpec::Lemma31 { .. } => "lemma31",
        CheckSpec::SmtHypersurfaces { .. } => "smt_hypersurfaces",
        CheckSpec::UniquenessInequality { .. } => "uniqueness_inequality",
        CheckSpec::UniquenessDecision { .. } => "uniqueness_decision",
    }
}

/// Directory for a scenario's artifacts under the output root.
pub fn scenario_dir(root: &Path, name: &str) -> PathBuf {
    root.join(name)
}
