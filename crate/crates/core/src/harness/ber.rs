use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::records::{BerRecord, RunMetadata};
use super::seeding::stream_rng;
use super::RunOptions;
use crate::channel::{
    assemble_equivalent_cir, draw_links, identity_permutation, link_profiles, LinkProfile,
};
use crate::config::{CsiMode, DetectorKind, EqualizerMode, PilotKind, SystemConfig};
use crate::detection::{fd_equalize, im_low_complexity_detect, im_ml_detect, ml_detect, ImHypotheses};
use crate::error::{Error, Result};
use crate::estimation::{denoise, ls_estimate, random_psk_pilot, theoretical_mse, zadoff_chu_pilot, PilotBlock};
use crate::numerics::C64;
use crate::transceiver::{apply_anchor, psk_modulate, synthesize_received, PermutationCode};
use crate::detection::anchor_in_use;

/// Stream index reserved for run-level draws (e.g. a random pilot).
const RUN_STREAM: u64 = u64::MAX;

/// Everything a trial needs that does not change between trials.
#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub config: SystemConfig,
    profiles: Vec<LinkProfile>,
    code: Option<PermutationCode>,
    anchor: bool,
    pilot: Option<PilotBlock>,
}

impl TrialSetup {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        let code = if config.scheme.is_im() {
            Some(PermutationCode::new(config.groups)?)
        } else {
            None
        };
        let pilot = match config.csi {
            CsiMode::Perfect => None,
            CsiMode::Estimated => Some(match config.pilot {
                PilotKind::ZadoffChu => zadoff_chu_pilot(config.block_len, config.zc_root)?,
                PilotKind::RandomPsk => {
                    let mut rng = stream_rng(config.master_seed, RUN_STREAM, 0);
                    let p = random_psk_pilot(config.block_len, config.psk_order, &mut rng)?;
                    theoretical_mse(&p, 1.0).map_err(|_| {
                        Error::Config("the random pilot drawn for this seed is singular".into())
                    })?;
                    p
                }
            }),
        };
        Ok(TrialSetup {
            profiles: link_profiles(config)?,
            anchor: code.as_ref().is_some_and(anchor_in_use),
            code,
            pilot,
            config: config.clone(),
        })
    }

    pub fn pilot(&self) -> Option<&PilotBlock> {
        self.pilot.as_ref()
    }
}

/// Runs one trial and returns the bit errors of each configured detector.
///
/// `n0` is the physical noise power; detectors that need it are told the
/// same value.
pub fn simulate_trial<R: Rng + ?Sized>(
    setup: &TrialSetup,
    trial_id: u64,
    n0: f64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let config = &setup.config;
    let m = config.psk_order;
    let real = draw_links(&setup.profiles, config.phase_model, trial_id, rng);

    let bits: Vec<u8> = (0..config.bits_per_block())
        .map(|_| rng.random_range(0..2u8))
        .collect();
    let index_bits = config.index_bits();
    let k = match &setup.code {
        Some(code) => code.encode(&bits[..index_bits])?,
        None => identity_permutation(config.groups),
    };
    let block = psk_modulate(&bits[index_bits..], m)?;
    let tx = if setup.anchor {
        apply_anchor(&block.symbols, m)
    } else {
        block.symbols
    };
    let g = assemble_equivalent_cir(&real, &k, config)?.g_eq;
    let y = synthesize_received(&tx, &g, n0, rng)?;

    // Channel knowledge handed to the receivers: the identity-layout
    // channel, either exact or estimated from one pilot block.
    let identity = identity_permutation(config.groups);
    let g_identity = if k == identity {
        g.clone()
    } else {
        assemble_equivalent_cir(&real, &identity, config)?.g_eq
    };
    let g_known: Vec<C64> = match &setup.pilot {
        None => g_identity,
        Some(pilot) => {
            let y_p = synthesize_received(&pilot.symbols, &g_identity, n0, rng)?;
            let mut est = ls_estimate(&y_p, pilot, n0)?;
            if config.denoise_estimate {
                let support = assemble_equivalent_cir(&real, &identity, config)?.core_positions;
                denoise(&mut est, &support);
            }
            est.g_hat
        }
    };

    let hypotheses = if config.scheme.is_im() {
        Some(match config.csi {
            CsiMode::Perfect => ImHypotheses::from_realization(&real, config)?,
            CsiMode::Estimated => ImHypotheses::from_estimate(&g_known, config)?,
        })
    } else {
        None
    };

    config
        .detectors
        .iter()
        .map(|&det| {
            let result = match det {
                DetectorKind::Ml => ml_detect(&y, &g_known, m)?,
                DetectorKind::Zf => fd_equalize(&y, &g_known, n0, EqualizerMode::Zf, m)?,
                DetectorKind::Mmse => fd_equalize(&y, &g_known, n0, EqualizerMode::Mmse, m)?,
                DetectorKind::ImMl => im_ml_detect(&y, hypotheses.as_ref().expect("IM scheme"))?,
                DetectorKind::ImLc => im_low_complexity_detect(
                    &y,
                    hypotheses.as_ref().expect("IM scheme"),
                    n0,
                    config.im_equalizer,
                )?,
            };
            Ok(result
                .x_hat
                .source_bits
                .iter()
                .zip(&bits)
                .filter(|(a, b)| a != b)
                .count() as u64)
        })
        .collect()
}

/// Result of a BER sweep.
#[derive(Debug, Clone)]
pub struct BerRun {
    pub records: Vec<BerRecord>,
    pub metadata: RunMetadata,
}

pub const STOPPING_RULE: &str = "a point stops once trials reach min_trials, or earlier at a batch \
     boundary once every detector has at least min_bit_errors bit errors";

/// Monte Carlo BER over the SNR grid for every configured detector.
pub fn run_ber_sweep(config: &SystemConfig, options: &RunOptions) -> Result<BerRun> {
    let setup = TrialSetup::new(config)?;
    let grid = config.snr_grid()?;
    let bits = config.bits_per_block() as u64;
    let seed = config.master_seed;
    options.install(|| {
        let mut records = Vec::new();
        let mut wall = Vec::new();
        for (point, &snr) in grid.iter().enumerate() {
            let started = Instant::now();
            let n0 = if options.noiseless {
                0.0
            } else {
                config.noise_power(snr)
            };
            let mut errors = vec![0u64; config.detectors.len()];
            let mut trials = 0u64;
            loop {
                let batch = options.batch.min(config.min_trials - trials);
                let outcomes: Vec<Vec<u64>> = (trials..trials + batch)
                    .into_par_iter()
                    .map(|t| {
                        let mut rng = stream_rng(seed, point as u64, t);
                        simulate_trial(&setup, t, n0, &mut rng)
                    })
                    .collect::<Result<_>>()?;
                for o in &outcomes {
                    for (e, v) in errors.iter_mut().zip(o) {
                        *e += v;
                    }
                }
                trials += batch;
                if trials >= config.min_trials
                    || errors.iter().all(|&e| e >= config.min_bit_errors)
                {
                    break;
                }
            }
            let elapsed = started.elapsed().as_secs_f64();
            wall.push(elapsed);
            for (det, &e) in config.detectors.iter().zip(&errors) {
                records.push(BerRecord {
                    scheme: config.scheme.name().into(),
                    detector: det.name().into(),
                    snr_db: snr,
                    trials,
                    bit_errors: e,
                    ber: e as f64 / (trials * bits) as f64,
                    seed,
                    wall_time_s: if options.timing { elapsed } else { 0.0 },
                });
            }
        }
        let mut notes = vec![format!("csi = {:?}", config.csi)];
        if options.noiseless {
            notes.push("noiseless debug run".into());
        }
        Ok(BerRun {
            records,
            metadata: RunMetadata {
                command: "ber".into(),
                scheme: config.scheme.name().into(),
                master_seed: seed,
                stopping_rule: STOPPING_RULE.into(),
                approximate: false,
                wall_times_s: wall,
                notes,
                config: config.to_toml_string(),
            },
        })
    })
}
