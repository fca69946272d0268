//! Monte Carlo BER sweep with CSV output, metadata and a gnuplot script.
//!
//! `cargo run --release --example ber_sweep [config.toml]`

use std::fs::File;

use cpsc_ris::analysis::BoundOptions;
use cpsc_ris::config::{DetectorKind, SnrGrid};
use cpsc_ris::harness::{
    plot_script, run_ber_sweep, run_bound, write_ber_csv, write_bound_csv, PlotKind, RunOptions,
};
use cpsc_ris::SystemConfig;

fn main() -> cpsc_ris::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => SystemConfig::from_file(path)?,
        None => SystemConfig {
            detectors: vec![DetectorKind::Ml, DetectorKind::Mmse, DetectorKind::Zf],
            snr_db: SnrGrid::Range("25:5:40".into()),
            min_trials: 20_000,
            ..Default::default()
        },
    };
    let options = RunOptions::default();
    let run = run_ber_sweep(&cfg, &options)?;
    write_ber_csv(&mut std::io::stdout(), &run.records)?;

    let dir = std::env::temp_dir();
    let ber_csv = dir.join("ber_sweep.csv");
    write_ber_csv(&mut File::create(&ber_csv)?, &run.records)?;
    std::fs::write(dir.join("ber_sweep.csv.meta.json"), run.metadata.to_json())?;

    let mut extra = Vec::new();
    if let Ok(bound) = run_bound(&cfg, &options, BoundOptions::default()) {
        let bound_csv = dir.join("ber_sweep_bound.csv");
        write_bound_csv(&mut File::create(&bound_csv)?, &bound.records)?;
        extra.push((PlotKind::Bound, bound_csv.display().to_string()));
    }
    let script = plot_script(
        PlotKind::Ber,
        &ber_csv.display().to_string(),
        &dir.join("ber_sweep.png").display().to_string(),
        &extra,
    );
    let script_path = dir.join("ber_sweep.gp");
    std::fs::write(&script_path, script)?;
    eprintln!("wrote {} (run gnuplot on it)", script_path.display());
    Ok(())
}
