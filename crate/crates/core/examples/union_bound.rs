//! Union bound on ML BER next to the closed-form and channel-averaged PEP
//! of a single codeword pair.

use cpsc_ris::analysis::{BoundOptions, UnionBound};
use cpsc_ris::harness::{run_pep, RunOptions};
use cpsc_ris::config::SnrGrid;
use cpsc_ris::SystemConfig;

fn main() -> cpsc_ris::Result<()> {
    let cfg = SystemConfig::default();
    let ub = UnionBound::build(&cfg, BoundOptions::default())?;
    println!("{} error-event classes", ub.classes.len());
    for snr in [30.0, 35.0, 40.0, 45.0, 50.0] {
        println!("  {snr} dB: BER ≤ {:.3e}", ub.evaluate(cfg.noise_power(snr)));
    }

    let small = SystemConfig {
        block_len: 4,
        groups: 1,
        snr_db: SnrGrid::List(vec![30.0, 35.0, 40.0]),
        ..Default::default()
    };
    let (records, _) = run_pep(&small, &RunOptions::default(), (0, 15), 200_000)?;
    println!("pair (0, 15) of the four-symbol codebook:");
    for r in records {
        println!(
            "  {} dB: closed form {:.3e}, channel average {:.3e}",
            r.snr_db, r.unconditional_pep, r.semi_analytic_pep
        );
    }
    Ok(())
}
