use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use vdist_cli::run::scenario_dir;
use vdist_cli::{builtin, parse_scenario, run_scenario, Overrides, RunSummary, Scenario, BUILTINS};

const PASS: u8 = 0;
const CONFIG_ERROR: u8 = 1;
const VERDICT_FAILURE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "vdist", version, about = "Run value-distribution checks on punctured planes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario file (or a built-in id).
    Run {
        scenario: String,
        /// Output root; artifacts go to <out-dir>/<scenario name>.
        #[arg(long, env = "VDIST_OUT_DIR", default_value = "vdist-out")]
        out_dir: PathBuf,
        /// Quadrature tolerance per boundary average.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_quad_nodes: Option<usize>,
        /// Print the run summary as JSON.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the built-in scenarios.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Run every built-in scenario.
    CheckAll {
        #[arg(long, env = "VDIST_OUT_DIR", default_value = "vdist-out")]
        out_dir: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn load(arg: &str) -> Result<Scenario, String> {
    let path = Path::new(arg);
    if !path.exists() {
        return builtin(arg).ok_or_else(|| format!("{arg}: no such file or built-in scenario"));
    }
    let text = fs::read_to_string(path).map_err(|e| format!("{arg}: {e}"))?;
    parse_scenario(&text).map_err(|e| format!("{arg}: {e}"))
}

fn print_summary(s: &RunSummary, dir: &Path) {
    for c in &s.checks {
        println!("  {:<28} {}", c.label, if c.verdict { "PASS" } else { "FAIL" });
    }
    let passed = s.checks.iter().filter(|c| c.verdict).count();
    println!(
        "{}: {} ({passed}/{} checks), artifacts in {}",
        s.scenario,
        if s.passed { "PASS" } else { "FAIL" },
        s.checks.len(),
        dir.display()
    );
}

/// Exit code of one scenario; prints diagnostics to stderr.
fn execute(scenario: &Scenario, out_dir: &Path, ov: Overrides, as_json: bool) -> (u8, Option<RunSummary>) {
    let resolved = match scenario.resolve(ov) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}: {e}", scenario.name);
            return (CONFIG_ERROR, None);
        }
    };
    let dir = scenario_dir(out_dir, &scenario.name);
    match run_scenario(&resolved, &dir) {
        Ok(s) => {
            if !as_json {
                print_summary(&s, &dir);
            }
            (if s.passed { PASS } else { VERDICT_FAILURE }, Some(s))
        }
        Err(e) => {
            eprintln!("{}: {e}", scenario.name);
            (CONFIG_ERROR, None)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { PASS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run {
            scenario,
            out_dir,
            tol,
            max_quad_nodes,
            json,
            seed,
        } => {
            let scenario = match load(&scenario) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(CONFIG_ERROR);
                }
            };
            let ov = Overrides {
                quad_tol: tol,
                max_quad_nodes,
                seed,
            };
            let (code, summary) = execute(&scenario, &out_dir, ov, json);
            if let (true, Some(s)) = (json, summary) {
                println!("{}", serde_json::to_string_pretty(&s).expect("summary serializes"));
            }
            ExitCode::from(code)
        }
        Command::List { json } => {
            let entries: Vec<(&str, String)> = BUILTINS
                .iter()
                .map(|(id, _)| (*id, builtin(id).map(|s| s.summary).unwrap_or_default()))
                .collect();
            if json {
                let list: Vec<_> = entries
                    .iter()
                    .map(|(id, s)| json!({ "id": id, "summary": s }))
                    .collect();
                println!("{}", serde_json::to_string_pretty(&list).expect("listing serializes"));
            } else {
                for (id, s) in entries {
                    println!("{id:<30} {s}");
                }
            }
            ExitCode::from(PASS)
        }
        Command::CheckAll { out_dir, json } => {
            let mut worst = PASS;
            let mut results = Vec::new();
            for (id, _) in BUILTINS {
                let scenario = builtin(id).expect("built-in scenarios parse");
                let (code, summary) = execute(&scenario, &out_dir, Overrides::default(), json);
                worst = worst.max(code);
                results.push(json!({ "scenario": id, "exit": code, "passed": summary.map(|s| s.passed) }));
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&results).expect("results serialize"));
            }
            ExitCode::from(worst)
        }
    }
}
