//! Suite selection, thread pools and report files.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use lhk_core::report::EstimateReport;
use lhk_core::{LhkError, Result};

use crate::config::Config;
use crate::emit::{render, render_conditions, write_file, Format};
use crate::suites::multiplier::NamedCondition;
use crate::suites::{core, hp, multiplier};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Core,
    Hp,
    Multiplier,
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "core" => Ok(Suite::Core),
            "hp" => Ok(Suite::Hp),
            "multiplier" => Ok(Suite::Multiplier),
            other => Err(format!("unknown suite '{other}' (expected core, hp or multiplier)")),
        }
    }
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Core => "core",
            Suite::Hp => "hp",
            Suite::Multiplier => "multiplier",
        }
    }
}

/// "all" means the suites listed in the config, in order.
pub fn select(config: &Config, which: &str) -> std::result::Result<Vec<Suite>, String> {
    if which == "all" {
        config.suites.iter().map(|s| s.parse()).collect()
    } else {
        Ok(vec![which.parse()?])
    }
}

/// Reports of one suite, one per alpha, and the multiplier condition tables.
#[derive(Debug, Clone)]
pub struct SuiteOutput {
    pub suite: Suite,
    pub reports: Vec<EstimateReport>,
    pub conditions: Vec<NamedCondition>,
}

impl SuiteOutput {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.all_pass())
    }
}

pub fn run_suite(config: &Config, suite: Suite) -> Result<SuiteOutput> {
    let (reports, conditions) = match suite {
        Suite::Core => (core::verify_core(config)?, Vec::new()),
        Suite::Hp => (hp::verify_hp(config)?, Vec::new()),
        Suite::Multiplier => {
            let outs = multiplier::verify_multiplier(config)?;
            let conditions = outs.iter().flat_map(|o| o.conditions.clone()).collect();
            (outs.into_iter().map(|o| o.report).collect(), conditions)
        }
    };
    Ok(SuiteOutput { suite, reports, conditions })
}

/// Thread count from LHK_THREADS; None when unset or empty.
pub fn threads_from_env() -> std::result::Result<Option<usize>, String> {
    match std::env::var("LHK_THREADS") {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("LHK_THREADS must be a positive integer, got '{v}'")),
        },
        Err(_) => Ok(None),
    }
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| LhkError::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// `{suite}.{ext}` and, for the multiplier suite, `multiplier_conditions.{ext}`.
pub fn write_outputs(dir: &Path, out: &SuiteOutput, format: Format) -> std::io::Result<Vec<PathBuf>> {
    let ext = format.extension();
    let report_path = dir.join(format!("{}.{ext}", out.suite.name()));
    write_file(&report_path, &render(&out.reports, format))?;
    let mut paths = vec![report_path];
    if out.suite == Suite::Multiplier {
        let path = dir.join(format!("multiplier_conditions.{ext}"));
        write_file(&path, &render_conditions(&out.conditions, format))?;
        paths.push(path);
    }
    Ok(paths)
}

/// One line per report: suite, alpha, counts by status, and the failing metrics.
pub fn summary(out: &SuiteOutput) -> String {
    let mut lines = Vec::new();
    for r in &out.reports {
        let count = |s: &str| r.metrics.iter().filter(|m| m.status.as_str() == s).count();
        let alpha = r.parameters.iter().find(|(k, _)| k == "alpha").map_or("?", |(_, v)| v.as_str());
        lines.push(format!(
            "{} alpha={alpha}: {} pass, {} fail, {} measured",
            r.suite,
            count("pass"),
            count("fail"),
            count("measured")
        ));
        for m in r.failures() {
            lines.push(format!("  FAIL {} = {}", m.name, m.value));
        }
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_selection() {
        let c = Config::default();
        assert_eq!(select(&c, "all").unwrap(), vec![Suite::Core, Suite::Hp, Suite::Multiplier]);
        assert_eq!(select(&c, "hp").unwrap(), vec![Suite::Hp]);
        assert!(select(&c, "nope").is_err());
    }

    #[test]
    fn pool_runs_the_closure() {
        let n = with_threads(Some(2), rayon::current_num_threads).unwrap();
        assert_eq!(n, 2);
    }
}
