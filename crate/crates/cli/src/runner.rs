//! `recomb-lab run`: execute a config and write its artifacts.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::report::Outcome;
use crate::{experiments, Error, Result, EXIT_FAILED, EXIT_OK};

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub outcomes: Vec<Outcome>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(Outcome::passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_OK
        } else {
            EXIT_FAILED
        }
    }
}

/// Runs every experiment of `config` (concurrently) and, unless the list is
/// empty, writes `report.json` plus one CSV per table into `out_dir`.
pub fn run(config: &Config, out_dir: &Path) -> Result<RunReport> {
    let outcomes: Vec<Outcome> =
        config.experiments.par_iter().map(|spec| experiments::run(spec, config.seed)).collect::<Result<_>>()?;
    let report = RunReport { seed: config.seed, outcomes };
    if report.outcomes.is_empty() {
        return Ok(report);
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let numbered = report.outcomes.len() > 1;
    for (i, o) in report.outcomes.iter().enumerate() {
        let prefix = if numbered { format!("{i:02}-{}-", o.experiment) } else { format!("{}-", o.experiment) };
        o.write_tables(out_dir, &prefix)?;
    }
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Human-readable lines: one per assertion, failures marked.
pub fn describe(report: &RunReport) -> String {
    let mut s = String::new();
    for o in &report.outcomes {
        for a in &o.assertions {
            let mark = if a.passed { "ok  " } else { "FAIL" };
            s.push_str(&format!("[{mark}] {}: {} ({})\n", o.experiment, a.label, a.detail));
        }
        for n in &o.notes {
            s.push_str(&format!("[note] {}: {n}\n", o.experiment));
        }
    }
    s
}
