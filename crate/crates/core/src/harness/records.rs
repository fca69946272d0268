use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// One Monte Carlo BER point for one detector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub scheme: String,
    pub detector: String,
    pub snr_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl BerRecord {
    /// Binomial standard error of `ber`.
    pub fn std_error(&self, bits_per_trial: usize) -> f64 {
        let n = (self.trials * bits_per_trial as u64) as f64;
        (self.ber * (1.0 - self.ber) / n).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRecord {
    pub scheme: String,
    pub snr_db: f64,
    pub union_bound: f64,
}

/// Estimator sweep point; `inv_n0` is `1/N0` in dB.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseRecord {
    pub inv_n0: f64,
    pub mse_empirical: f64,
    pub mse_theoretical: f64,
    pub trials: u64,
}

/// Single-pair PEP at one SNR: closed form and its semi-analytic check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PepRecord {
    pub transmitted: usize,
    pub detected: usize,
    pub snr_db: f64,
    pub unconditional_pep: f64,
    pub semi_analytic_pep: f64,
    pub draws: u64,
}

/// Sidecar describing how a result file was produced.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunMetadata {
    pub command: String,
    pub scheme: String,
    pub master_seed: u64,
    pub stopping_rule: String,
    pub approximate: bool,
    pub wall_times_s: Vec<f64>,
    pub notes: Vec<String>,
    pub config: String,
}

impl RunMetadata {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metadata is always serialisable")
    }
}

pub fn write_ber_csv(out: &mut (impl Write + ?Sized), records: &[BerRecord]) -> Result<()> {
    writeln!(out, "scheme,detector,snr_db,trials,bit_errors,ber,seed,wall_time_s")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{:e},{},{}",
            r.scheme, r.detector, r.snr_db, r.trials, r.bit_errors, r.ber, r.seed, r.wall_time_s
        )?;
    }
    Ok(())
}

pub fn write_bound_csv(out: &mut (impl Write + ?Sized), records: &[BoundRecord]) -> Result<()> {
    writeln!(out, "scheme,snr_db,union_bound")?;
    for r in records {
        writeln!(out, "{},{},{:e}", r.scheme, r.snr_db, r.union_bound)?;
    }
    Ok(())
}

pub fn write_mse_csv(out: &mut (impl Write + ?Sized), records: &[MseRecord]) -> Result<()> {
    writeln!(out, "inv_n0,mse_empirical,mse_theoretical")?;
    for r in records {
        writeln!(out, "{},{:e},{:e}", r.inv_n0, r.mse_empirical, r.mse_theoretical)?;
    }
    Ok(())
}

pub fn write_pep_csv(out: &mut (impl Write + ?Sized), records: &[PepRecord]) -> Result<()> {
    writeln!(out, "transmitted,detected,snr_db,unconditional_pep,semi_analytic_pep,draws")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{:e},{:e},{}",
            r.transmitted, r.detected, r.snr_db, r.unconditional_pep, r.semi_analytic_pep, r.draws
        )?;
    }
    Ok(())
}

/// `rank,ordered_pairs` rows of a rank histogram.
pub fn write_histogram_csv(
    out: &mut (impl Write + ?Sized),
    histogram: &std::collections::BTreeMap<usize, u64>,
) -> Result<()> {
    writeln!(out, "rank,ordered_pairs")?;
    for (rank, count) in histogram {
        writeln!(out, "{rank},{count}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ber_csv_layout() {
        let rec = BerRecord {
            scheme: "cpsc-ris".into(),
            detector: "mmse".into(),
            snr_db: 35.0,
            trials: 1000,
            bit_errors: 12,
            ber: 0.0015,
            seed: 9,
            wall_time_s: 0.0,
        };
        let mut buf = Vec::new();
        write_ber_csv(&mut buf, &[rec]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "scheme,detector,snr_db,trials,bit_errors,ber,seed,wall_time_s\n\
             cpsc-ris,mmse,35,1000,12,1.5e-3,9,0\n"
        );
    }

    #[test]
    fn other_headers() {
        let mut buf = Vec::new();
        write_bound_csv(&mut buf, &[]).unwrap();
        write_mse_csv(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "scheme,snr_db,union_bound\ninv_n0,mse_empirical,mse_theoretical\n"
        );
    }
}
