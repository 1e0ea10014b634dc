//! Runs every acceptance criterion at full size and prints one PASS/FAIL
//! line each. Exits nonzero when any criterion fails or errors.

use qsplit_cli::report::{run_criterion, Profile, Settings, CRITERIA};

fn main() {
    let full = Settings::new(Profile::Full);
    let mut failed = 0;
    for (id, name) in CRITERIA {
        match run_criterion(id, &full) {
            Ok(outcome) => {
                println!("{}", outcome.line());
                failed += !outcome.pass as usize;
            }
            Err(e) => {
                println!("FAIL [{id:2}] {name}: error: {e}");
                failed += 1;
            }
        }
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    // negative control: with zero tolerance the constants check must fail
    let control = Settings { profile: Profile::Quick, tol_scale: 0.0 };
    match run_criterion(3, &control) {
        Ok(o) if !o.pass => println!("ok: zero tolerance fails criterion 3"),
        _ => {
            println!("FAIL: zero tolerance did not fail criterion 3");
            failed += 1;
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
