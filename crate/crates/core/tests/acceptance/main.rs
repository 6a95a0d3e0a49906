//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod oracles;
mod replication;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

/// Outcome of one criterion: pass flag and a one-line summary.
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

fn run(id: u32, name: &str, budget: Option<Duration>, check: impl FnOnce() -> Verdict) -> bool {
    let started = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(check));
    let elapsed = started.elapsed();
    let mut verdict = match outcome {
        Ok(v) => v,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Verdict::new(false, msg)
        }
    };
    if let Some(limit) = budget {
        if elapsed > limit {
            verdict.pass = false;
            verdict.detail.push_str(&format!("; over the {:.0} s budget", limit.as_secs_f64()));
        }
    }
    let tag = if verdict.pass { "PASS" } else { "FAIL" };
    println!("{tag} {id:>2} {name} ({:.2} s): {}", elapsed.as_secs_f64(), verdict.detail);
    verdict.pass
}

fn main() -> ExitCode {
    // Quiet the default hook; panics are reported on the criterion line.
    std::panic::set_hook(Box::new(|_| {}));
    let secs = Duration::from_secs;
    let mut results = vec![
        run(1, "special functions", Some(secs(1)), oracles::special_functions),
        run(2, "mass conservation", Some(secs(1)), oracles::mass_conservation),
        run(3, "KL oracle", Some(secs(30)), oracles::kl_oracle),
        run(4, "gradients", Some(secs(60)), oracles::gradients),
        run(5, "schedule identities", Some(secs(1)), oracles::schedule),
        run(6, "metric oracles", Some(secs(10)), oracles::metrics),
    ];

    let started = Instant::now();
    let runs = replication::seed_runs();
    println!("     trained {} models in {:.1} s", runs.len() * 4, started.elapsed().as_secs_f64());
    let budget = secs(600).saturating_sub(started.elapsed());
    results.push(run(7, "calibration vs softmax", Some(budget), || replication::calibration(&runs)));
    results.push(run(8, "OOV/OOD detection", None, || replication::detection(&runs)));
    results.push(run(9, "ablations", None, || replication::ablations(&runs)));
    results.push(run(10, "active selection", Some(secs(900)), replication::selection));
    results.push(run(11, "determinism", None, replication::determinism));

    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
