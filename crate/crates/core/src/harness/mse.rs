use std::time::Instant;

use rayon::prelude::*;

use super::ber::TrialSetup;
use super::records::{MseRecord, RunMetadata};
use super::seeding::stream_rng;
use super::RunOptions;
use crate::channel::{assemble_equivalent_cir, generate_realization, identity_permutation};
use crate::config::{CsiMode, SystemConfig};
use crate::error::Result;
use crate::estimation::{denoise, ls_estimate, theoretical_mse};
use crate::transceiver::synthesize_received;

#[derive(Debug, Clone)]
pub struct MseRun {
    pub records: Vec<MseRecord>,
    pub metadata: RunMetadata,
}

/// Empirical `E‖ĝ − g‖²` against its closed form over the `inv_n0_db` grid,
/// with `min_trials` fading realizations per point.
pub fn run_mse_sweep(config: &SystemConfig, options: &RunOptions) -> Result<MseRun> {
    let config = SystemConfig {
        csi: CsiMode::Estimated,
        ..config.clone()
    };
    let setup = TrialSetup::new(&config)?;
    let pilot = setup.pilot().expect("estimated CSI always has a pilot").clone();
    let grid = config.inv_n0_db.values()?;
    let identity = identity_permutation(config.groups);
    let seed = config.master_seed;
    let trials = config.min_trials;
    options.install(|| {
        let mut records = Vec::new();
        let mut wall = Vec::new();
        for (point, &inv_db) in grid.iter().enumerate() {
            let started = Instant::now();
            let n0 = 10f64.powf(-inv_db / 10.0);
            let mut total = 0.0;
            let mut done = 0u64;
            while done < trials {
                let batch = options.batch.min(trials - done);
                let errs: Vec<f64> = (done..done + batch)
                    .into_par_iter()
                    .map(|t| {
                        let mut rng = stream_rng(seed, point as u64, t);
                        let real = generate_realization(&config, t, &mut rng)?;
                        let cir = assemble_equivalent_cir(&real, &identity, &config)?;
                        let y = synthesize_received(&pilot.symbols, &cir.g_eq, n0, &mut rng)?;
                        let mut est = ls_estimate(&y, &pilot, n0)?;
                        if config.denoise_estimate {
                            denoise(&mut est, &cir.core_positions);
                        }
                        Ok(est
                            .g_hat
                            .iter()
                            .zip(&cir.g_eq)
                            .map(|(a, b)| (a - b).norm_sqr())
                            .sum())
                    })
                    .collect::<Result<_>>()?;
                total += errs.iter().sum::<f64>();
                done += batch;
            }
            let mut theory = theoretical_mse(&pilot, n0)?;
            if config.denoise_estimate && pilot.is_orthogonal() {
                // Only the support entries keep their N0/N error.
                theory *= config.core_len() as f64 / config.block_len as f64;
            }
            wall.push(started.elapsed().as_secs_f64());
            records.push(MseRecord {
                inv_n0: inv_db,
                mse_empirical: total / trials as f64,
                mse_theoretical: theory,
                trials,
            });
        }
        Ok(MseRun {
            records,
            metadata: RunMetadata {
                command: "mse".into(),
                scheme: config.scheme.name().into(),
                master_seed: seed,
                stopping_rule: "fixed: min_trials realizations per point".into(),
                approximate: false,
                wall_times_s: wall,
                notes: vec!["inv_n0 is 1/N0 in dB".into()],
                config: config.to_toml_string(),
            },
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{PilotKind, SnrGrid};

    #[test]
    fn zadoff_chu_sweep_tracks_n0() {
        let cfg = SystemConfig {
            min_trials: 4000,
            inv_n0_db: SnrGrid::List(vec![0.0, 20.0]),
            ..Default::default()
        };
        let run = run_mse_sweep(&cfg, &RunOptions::default()).unwrap();
        for r in &run.records {
            let n0 = 10f64.powf(-r.inv_n0 / 10.0);
            assert!((r.mse_theoretical - n0).abs() < 1e-12 * n0);
            assert!((r.mse_empirical / n0 - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn random_pilot_is_worse() {
        let cfg = SystemConfig {
            min_trials: 4000,
            pilot: PilotKind::RandomPsk,
            psk_order: 4,
            master_seed: 3,
            inv_n0_db: SnrGrid::List(vec![10.0]),
            ..Default::default()
        };
        let run = run_mse_sweep(&cfg, &RunOptions::default()).unwrap();
        let r = &run.records[0];
        assert!(r.mse_theoretical > 0.1);
        assert!(r.mse_empirical > 0.1);
    }
}
