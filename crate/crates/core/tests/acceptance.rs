//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use cloning_core::analytic::calibrated_operators;
use cloning_core::covariant::DEFAULT_TWIRL_SAMPLES;
use cloning_core::verify::*;

fn main() -> ExitCode {
    let cfg = VerifyConfig::default();
    let start = Instant::now();
    let t = match calibrated_operators(DEFAULT_TWIRL_SAMPLES, cfg.seed) {
        Ok(t) => t,
        Err(e) => {
            println!("acceptance: cannot build T operators: {e}");
            return ExitCode::FAILURE;
        }
    };
    let checks: Vec<Box<dyn Fn() -> CheckResult>> = vec![
        Box::new(check_endpoints),
        Box::new(check_threshold),
        Box::new(|| check_sdp_grid(&cfg, &t)),
        Box::new(|| check_kink(&cfg, &t)),
        Box::new(|| check_below_threshold(&cfg, &t)),
        Box::new(|| check_kraus_choi(&t)),
        Box::new(|| check_protocol(&cfg)),
        Box::new(check_locc_invariants),
        Box::new(|| check_structure(&cfg, &t)),
    ];
    let mut failed = 0;
    for check in &checks {
        let c = check();
        println!("{}", format_line(&c));
        if !c.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        checks.len() - failed,
        checks.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
