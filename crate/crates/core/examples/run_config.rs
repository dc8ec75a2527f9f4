//! Driving an experiment from a JSON configuration, as the `tsam` binary does.
//!
//! `cargo run --release --example run_config -- configs/shifted_t_mc_estimate.json`

use std::path::PathBuf;

fn main() {
    let path: PathBuf = std::env::args().nth(1).map_or_else(
        || PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/banana_coverage.json"),
        PathBuf::from,
    );
    let out = std::env::temp_dir().join("tsam_run_config");
    match tsam::cli::run(&path, None, Some(out)) {
        Ok(report) => {
            report.notes.iter().for_each(|n| println!("{n}"));
            for f in report.files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
