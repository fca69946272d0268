//! Rank spectrum of the error-event matrices: the constant pair keeps the
//! diversity order at one no matter how many groups reflect.

use cpsc_ris::analysis::diversity_rank_scan;
use cpsc_ris::config::LinkTaps;
use cpsc_ris::SystemConfig;

fn main() -> cpsc_ris::Result<()> {
    for groups in [1, 2] {
        let cfg = SystemConfig {
            block_len: 6,
            groups,
            cp_len: 1,
            delay_step: 2,
            link_taps: LinkTaps::Uniform(1),
            ..Default::default()
        };
        let spectrum = diversity_rank_scan(&cfg, cfg.noise_power(40.0))?;
        println!(
            "R = {groups}: {} taps, minimum rank {}, ordered pairs per rank {:?}",
            cfg.core_len(),
            spectrum.rank_min,
            spectrum.histogram
        );
        let worst = spectrum
            .pairs
            .iter()
            .filter(|e| e.rank == spectrum.rank_min)
            .max_by(|a, b| a.pep.total_cmp(&b.pep))
            .unwrap();
        println!(
            "  worst low-rank pair {} -> {} with PEP {:.3e} at 40 dB",
            worst.transmitted, worst.detected, worst.pep
        );
    }
    Ok(())
}
