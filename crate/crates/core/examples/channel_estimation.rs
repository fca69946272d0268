//! Least-squares estimation of the equivalent channel from one pilot block:
//! a Zadoff-Chu pilot reaches the N0 floor, a random QPSK pilot does not.

use cpsc_ris::config::{CsiMode, PilotKind, SnrGrid};
use cpsc_ris::harness::{run_mse_sweep, RunOptions};
use cpsc_ris::SystemConfig;

fn main() -> cpsc_ris::Result<()> {
    let base = SystemConfig {
        block_len: 16,
        groups: 4,
        csi: CsiMode::Estimated,
        inv_n0_db: SnrGrid::Range("0:10:40".into()),
        min_trials: 2000,
        ..Default::default()
    };
    for (name, pilot, m) in [
        ("zadoff-chu", PilotKind::ZadoffChu, 2),
        ("random qpsk", PilotKind::RandomPsk, 4),
    ] {
        let cfg = SystemConfig {
            pilot,
            psk_order: m,
            ..base.clone()
        };
        let run = run_mse_sweep(&cfg, &RunOptions::default())?;
        println!("{name} pilot");
        println!("  1/N0 dB   empirical   closed form");
        for r in &run.records {
            println!(
                "  {:7.1}   {:.3e}   {:.3e}",
                r.inv_n0, r.mse_empirical, r.mse_theoretical
            );
        }
    }
    Ok(())
}
