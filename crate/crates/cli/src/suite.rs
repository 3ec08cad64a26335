//! The acceptance suite run by `reproduce-all`: nine checks, each one named
//! experiment in its default configuration.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::config::ExperimentSpec;
use crate::report::{Outcome, Table};
use crate::{experiments, Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct Check {
    pub number: usize,
    /// Experiment name, also the check's name.
    pub name: &'static str,
    pub tags: &'static [&'static str],
    /// The claim being reproduced, in one line.
    pub claim: &'static str,
    pub budget: Duration,
}

const fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

pub const CHECKS: [Check; 9] = [
    Check {
        number: 1,
        name: "kappa-tightness",
        tags: &["kappa", "tightness", "subadditivity"],
        claim: "identical copies attain the generalized subadditivity bound with the closed-form κ",
        budget: secs(1),
    },
    Check {
        number: 2,
        name: "kappa-validity",
        tags: &["kappa", "validity", "subadditivity"],
        claim: "no random density in S_μ exceeds the generalized subadditivity bound",
        budget: secs(120),
    },
    Check {
        number: 3,
        name: "sharp-upper-bound",
        tags: &["sharp", "upper-bound", "entropy-production"],
        claim: "the sharp test density gives κ ≤ D/Ent ≤ 4(1−Δ_ν)/n + C/n²",
        budget: secs(60),
    },
    Check {
        number: 4,
        name: "entropy-decay",
        tags: &["decay", "entropy-decay"],
        claim: "relative entropy decays at rate κ in continuous and discrete time",
        budget: secs(60),
    },
    Check {
        number: 5,
        name: "spectral-gap",
        tags: &["spectral", "linearization"],
        claim: "uniform crossover kernel has spectrum 1, ½ (×n), rest ≤ ¼",
        budget: secs(30),
    },
    Check {
        number: 6,
        name: "shearer",
        tags: &["shearer", "submodularity"],
        claim: "entropy submodularity and the improved Shearer bounds; exact c/d identities",
        budget: secs(120),
    },
    Check {
        number: 7,
        name: "rqs-axioms",
        tags: &["rqs", "h-theorem", "ising"],
        claim: "reversibility, symmetry, D ≥ 0, dH/dt = −D and conservation for all generators",
        budget: secs(120),
    },
    Check {
        number: 8,
        name: "ising-structure",
        tags: &["ising", "stationarity", "dissipative"],
        claim: "Ising-form stationary measures and dissipative relaxation",
        budget: secs(180),
    },
    Check {
        number: 9,
        name: "linearization",
        tags: &["linearization", "near-equilibrium"],
        claim: "Ent and D near equilibrium match ½μ[φ²] and −μ[(Γφ)φ]",
        budget: secs(30),
    },
];

impl Check {
    /// Matches the number, the name, or any tag (case-insensitive).
    pub fn matches(&self, filter: &str) -> bool {
        let f = filter.trim().to_lowercase();
        f == self.number.to_string() || f == self.name || self.tags.contains(&f.as_str())
    }

    pub fn spec(&self) -> ExperimentSpec {
        ExperimentSpec::default_for(self.name).expect("every check has a default configuration")
    }
}

pub fn select(filter: Option<&str>) -> Vec<&'static Check> {
    CHECKS.iter().filter(|c| filter.is_none_or(|f| c.matches(f))).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub number: usize,
    pub name: &'static str,
    pub claim: &'static str,
    pub passed: bool,
    #[serde(skip)]
    pub runtime: Duration,
    #[serde(skip)]
    pub budget: Duration,
    /// The experiment outcome, or the error that stopped it.
    pub outcome: std::result::Result<Outcome, String>,
}

impl CheckResult {
    pub fn within_budget(&self) -> bool {
        self.runtime <= self.budget
    }

    /// `PASS`/`FAIL` line with runtime against the budget.
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!(
            "{status} {}. {:<18} {:>8.2}s (budget {}s) {}",
            self.number,
            self.name,
            self.runtime.as_secs_f64(),
            self.budget.as_secs(),
            self.claim
        );
        if !self.within_budget() {
            s.push_str(" [over budget]");
        }
        match &self.outcome {
            Ok(o) => {
                for a in o.failures() {
                    s.push_str(&format!("\n     failed: {} ({})", a.label, a.detail));
                }
            }
            Err(e) => s.push_str(&format!("\n     error: {e}")),
        }
        s
    }
}

pub fn run_check(check: &Check, seed: u64) -> CheckResult {
    let start = Instant::now();
    let outcome = experiments::run(&check.spec(), seed).map_err(|e| e.to_string());
    let runtime = start.elapsed();
    let passed = outcome.as_ref().is_ok_and(Outcome::passed);
    CheckResult {
        number: check.number,
        name: check.name,
        claim: check.claim,
        passed,
        runtime,
        budget: check.budget,
        outcome,
    }
}

/// Runs the selected checks in order, reporting each result through
/// `on_result` as it completes, and writes artifacts into `out_dir` if given.
pub fn reproduce_all(
    filter: Option<&str>,
    seed: u64,
    out_dir: Option<&Path>,
    mut on_result: impl FnMut(&CheckResult),
) -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();
    for check in select(filter) {
        let r = run_check(check, seed);
        on_result(&r);
        results.push(r);
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut summary = Table::new("summary", &["number", "check", "claim", "passed"]);
        for r in &results {
            summary.push(vec![r.number.to_string(), r.name.into(), r.claim.into(), r.passed.to_string()]);
            if let Ok(o) = &r.outcome {
                o.write_tables(dir, &format!("{}-", r.name))?;
            }
        }
        summary.write_csv(&dir.join("summary.csv"))?;
        crate::runner::write_json(&dir.join("report.json"), &results)?;
    }
    Ok(results)
}

/// The summary table printed by `reproduce-all`.
pub fn summary_table(results: &[CheckResult]) -> String {
    let mut s = format!("{:<3} {:<18} {:<6} {:>9} {:>7}  claim\n", "#", "check", "result", "runtime", "budget");
    for r in results {
        s.push_str(&format!(
            "{:<3} {:<18} {:<6} {:>8.2}s {:>6}s  {}\n",
            r.number,
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.runtime.as_secs_f64(),
            r.budget.as_secs(),
            r.claim
        ));
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let total: f64 = results.iter().map(|r| r.runtime.as_secs_f64()).sum();
    s.push_str(&format!("{} checks, {failed} failed, {total:.1}s total\n", results.len()));
    s
}
