use std::process::ExitCode;

use rwrp_core::acceptance::run_all;

const SEED: u64 = 20_240_611;

fn main() -> ExitCode {
    let results = run_all(SEED, |r| {
        println!(
            "[{}] criterion {:>2} {} ({:.1}s): {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.seconds,
            r.detail
        );
    });
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
