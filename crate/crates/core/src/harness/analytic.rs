use std::time::Instant;

use rayon::prelude::*;

use super::records::{BoundRecord, PepRecord, RunMetadata};
use super::seeding::stream_rng;
use super::RunOptions;
use crate::analysis::{
    codeword, difference_matrix, diversity_rank_scan, semi_analytic_sum, BoundOptions,
    ErrorEventSpectrum, PairGeometry, TapStatistics, UnionBound,
};
use crate::config::SystemConfig;
use crate::error::{invalid, Result};

fn metadata(command: &str, config: &SystemConfig, wall: Vec<f64>) -> RunMetadata {
    RunMetadata {
        command: command.into(),
        scheme: config.scheme.name().into(),
        master_seed: config.master_seed,
        stopping_rule: String::new(),
        approximate: false,
        wall_times_s: wall,
        notes: vec![],
        config: config.to_toml_string(),
    }
}

#[derive(Debug, Clone)]
pub struct BoundRun {
    pub records: Vec<BoundRecord>,
    pub metadata: RunMetadata,
}

/// Union bound of `config`'s scheme over its SNR grid.
pub fn run_bound(
    config: &SystemConfig,
    options: &RunOptions,
    bound: BoundOptions,
) -> Result<BoundRun> {
    options.install(|| {
        let started = Instant::now();
        let ub = UnionBound::build(config, bound)?;
        let records = config
            .snr_grid()?
            .into_iter()
            .map(|snr| BoundRecord {
                scheme: config.scheme.name().into(),
                snr_db: snr,
                union_bound: ub.evaluate(config.noise_power(snr)),
            })
            .collect();
        let mut meta = metadata("bound", config, vec![started.elapsed().as_secs_f64()]);
        meta.approximate = ub.approximate;
        meta.notes.push(format!(
            "{} distinct error-event classes over {} codewords",
            ub.classes.len(),
            ub.normalisation / ub.bits_per_block as f64
        ));
        if let Some(t) = bound.max_symbol_errors.filter(|_| ub.approximate) {
            meta.notes
                .push(format!("truncated to events with at most {t} symbol errors"));
        }
        Ok(BoundRun { records, metadata: meta })
    })
}

/// Draws per parallel work unit of the semi-analytic average.
const DRAW_CHUNK: u64 = 10_000;

/// Closed-form PEP of codeword pair `(tx, rx)` over the SNR grid, next to
/// the conditional PEP averaged over `draws` channel draws.
pub fn run_pep(
    config: &SystemConfig,
    options: &RunOptions,
    pair: (usize, usize),
    draws: u64,
) -> Result<(Vec<PepRecord>, RunMetadata)> {
    config.validate()?;
    if pair.0 == pair.1 {
        return Err(invalid("a pair needs two different codewords"));
    }
    if draws == 0 {
        return Err(invalid("at least one draw is required"));
    }
    let stats = TapStatistics::from_config(config)?;
    let a = codeword(config, pair.0)?;
    let b = codeword(config, pair.1)?;
    let d = difference_matrix(&a.symbols, &a.positions, &b.symbols, &b.positions)?;
    let geometry = PairGeometry::from_gram(&d.gram(), &stats)?;
    let seed = config.master_seed;
    options.install(|| {
        let mut records = Vec::new();
        let mut wall = Vec::new();
        for (point, snr) in config.snr_grid()?.into_iter().enumerate() {
            let started = Instant::now();
            let n0 = config.noise_power(snr);
            let chunks = draws.div_ceil(DRAW_CHUNK);
            let sums: Vec<f64> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let count = DRAW_CHUNK.min(draws - c * DRAW_CHUNK) as usize;
                    let mut rng = stream_rng(seed, point as u64, c);
                    semi_analytic_sum(&d, &stats, n0, count, &mut rng)
                })
                .collect::<Result<_>>()?;
            wall.push(started.elapsed().as_secs_f64());
            records.push(PepRecord {
                transmitted: pair.0,
                detected: pair.1,
                snr_db: snr,
                unconditional_pep: geometry.pep(n0),
                semi_analytic_pep: sums.iter().sum::<f64>() / draws as f64,
                draws,
            });
        }
        let mut meta = metadata("pep", config, wall);
        meta.notes.push(format!("rank(A) = {}", geometry.rank()));
        Ok((records, meta))
    })
}

#[derive(Debug, Clone)]
pub struct RankScanRun {
    pub spectrum: ErrorEventSpectrum,
    pub snr_db: f64,
    pub metadata: RunMetadata,
}

/// Rank of `A` over every codeword pair, with PEPs at the first grid SNR.
pub fn run_rankscan(config: &SystemConfig, options: &RunOptions) -> Result<RankScanRun> {
    let snr = *config
        .snr_grid()?
        .first()
        .ok_or_else(|| invalid("empty SNR grid"))?;
    options.install(|| {
        let started = Instant::now();
        let spectrum = diversity_rank_scan(config, config.noise_power(snr))?;
        let mut meta = metadata("rankscan", config, vec![started.elapsed().as_secs_f64()]);
        meta.notes.push(format!("minimum rank {}", spectrum.rank_min));
        Ok(RankScanRun {
            spectrum,
            snr_db: snr,
            metadata: meta,
        })
    })
}
