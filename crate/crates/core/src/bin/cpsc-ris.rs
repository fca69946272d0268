use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cpsc_ris::analysis::BoundOptions;
use cpsc_ris::config::{DetectorKind, SnrGrid};
use cpsc_ris::harness::{self, PlotKind, RunMetadata, RunOptions};
use cpsc_ris::{Error, Result, SystemConfig};

#[derive(Parser)]
#[command(name = "cpsc-ris", version, about = "Link-level simulator and analytic bounds for RIS-assisted single-carrier blocks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER sweep
    Ber(Common),
    /// Channel-estimation MSE against its closed form (`--snr` sets the 1/N0 grid)
    Mse(Common),
    /// Analytic union bound on BER
    Bound {
        #[command(flatten)]
        common: Common,
        /// Keep only error events with at most this many symbol errors
        #[arg(long)]
        max_symbol_errors: Option<usize>,
    },
    /// Closed-form PEP of one codeword pair against a channel-averaged estimate
    Pep {
        #[command(flatten)]
        common: Common,
        /// Codeword indices `tx,rx`
        #[arg(long, value_parser = parse_pair)]
        pair: (usize, usize),
        #[arg(long, default_value_t = 1_000_000)]
        draws: u64,
    },
    /// Rank histogram of every codeword pair's error-event matrix
    Rankscan {
        #[command(flatten)]
        common: Common,
        /// Also write one row per ordered pair to this file
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML scenario file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid as `min:step:max` in dB
    #[arg(long)]
    snr: Option<String>,
    /// Comma-separated detector list
    #[arg(long, value_delimiter = ',')]
    detectors: Option<Vec<String>>,
    #[arg(long)]
    threads: Option<usize>,
    /// Transmit without noise
    #[arg(long)]
    noiseless: bool,
    /// Record wall-clock times in the CSV
    #[arg(long)]
    timing: bool,
    /// Write a gnuplot script for the output here (requires --out)
    #[arg(long)]
    plot: Option<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("`{s}` is not `idx,idx`"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

impl Common {
    fn load(&self, grid_is_inv_n0: bool) -> Result<(SystemConfig, RunOptions)> {
        let mut config = match &self.config {
            Some(path) => SystemConfig::from_file(path)?,
            None => SystemConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        if let Some(snr) = &self.snr {
            let grid = SnrGrid::Range(snr.clone());
            grid.values()?;
            if grid_is_inv_n0 {
                config.inv_n0_db = grid;
            } else {
                config.snr_db = grid;
            }
        }
        if let Some(list) = &self.detectors {
            config.detectors = list
                .iter()
                .map(|d| DetectorKind::parse(d))
                .collect::<Result<_>>()?;
        }
        config.validate()?;
        let options = RunOptions {
            threads: self.threads,
            noiseless: self.noiseless,
            timing: self.timing,
            ..Default::default()
        };
        Ok((config, options))
    }

    fn emit(
        &self,
        write: impl FnOnce(&mut dyn Write) -> Result<()>,
        meta: &RunMetadata,
        plot: Option<PlotKind>,
    ) -> Result<()> {
        match &self.out {
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                write(&mut lock)?;
                lock.flush()?;
            }
            Some(path) => {
                let mut f = BufWriter::new(File::create(path)?);
                write(&mut f)?;
                f.flush()?;
                std::fs::write(sidecar(path), meta.to_json())?;
            }
        }
        if let Some(script) = &self.plot {
            let (Some(kind), Some(csv)) = (plot, &self.out) else {
                return Err(Error::InvalidArgument(
                    "--plot needs --out and a ber, bound or mse run".into(),
                ));
            };
            let image = csv.with_extension("png");
            let text = harness::plot_script(
                kind,
                &csv.to_string_lossy(),
                &image.to_string_lossy(),
                &[],
            );
            std::fs::write(script, text)?;
        }
        Ok(())
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ber(common) => {
            let (config, options) = common.load(false)?;
            let run = harness::run_ber_sweep(&config, &options)?;
            common.emit(
                |w| harness::write_ber_csv(w, &run.records),
                &run.metadata,
                Some(PlotKind::Ber),
            )
        }
        Command::Mse(common) => {
            let (config, options) = common.load(true)?;
            let run = harness::run_mse_sweep(&config, &options)?;
            common.emit(
                |w| harness::write_mse_csv(w, &run.records),
                &run.metadata,
                Some(PlotKind::Mse),
            )
        }
        Command::Bound {
            common,
            max_symbol_errors,
        } => {
            let (config, options) = common.load(false)?;
            let run = harness::run_bound(&config, &options, BoundOptions { max_symbol_errors })?;
            common.emit(
                |w| harness::write_bound_csv(w, &run.records),
                &run.metadata,
                Some(PlotKind::Bound),
            )
        }
        Command::Pep {
            common,
            pair,
            draws,
        } => {
            let (config, options) = common.load(false)?;
            let (records, meta) = harness::run_pep(&config, &options, pair, draws)?;
            common.emit(|w| harness::write_pep_csv(w, &records), &meta, None)
        }
        Command::Rankscan { common, pairs } => {
            let (config, options) = common.load(false)?;
            let run = harness::run_rankscan(&config, &options)?;
            if let Some(path) = pairs {
                let mut f = BufWriter::new(File::create(path)?);
                writeln!(f, "transmitted,detected,rank,pep,weight")?;
                for e in &run.spectrum.pairs {
                    writeln!(f, "{},{},{},{:e},{}", e.transmitted, e.detected, e.rank, e.pep, e.xi)?;
                }
                f.flush()?;
            }
            common.emit(
                |w| harness::write_histogram_csv(w, &run.spectrum.histogram),
                &run.metadata,
                None,
            )
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
