//! Scenario description shared by every module.
//!
//! A [`SystemConfig`] is normally loaded from a TOML file. Every key is
//! optional and falls back to the two-group, eight-symbol BPSK reference
//! scenario; unknown keys are rejected.
//!
//! | key | meaning |
//! |-----|---------|
//! | `scheme` | `"cpsc"`, `"cpsc-ris"` or `"cpsc-ris-im"` |
//! | `block_len` | symbols per block `N` |
//! | `psk_order` | PSK order `M` (power of two) |
//! | `groups` | reflecting groups `R` (0 for plain CPSC) |
//! | `elements_per_group` | elements per group `N_G` |
//! | `cp_len` | cyclic prefix length `L` |
//! | `delay_step` | base cyclic delay `Δ` |
//! | `link_taps` | taps per link, one integer for all links or an array of `R + 1` |
//! | `fading_m` | Nakagami order, one integer or an array of per-link arrays |
//! | `pdp_decay` | exponential power-delay-profile decay per tap |
//! | `d0`, `d1`, `d2` | Tx-Rx, Tx-RIS and RIS-Rx distances in metres |
//! | `path_loss_exp_direct`, `path_loss_exp_tx_ris`, `path_loss_exp_ris_rx` | path-loss exponents |
//! | `phase_model` | `"per-tap"` or `"common"` draw of the Nakagami mean phase |
//! | `snr_db` | Eb/N0 grid in dB, an array or a `"min:step:max"` string |
//! | `inv_n0_db` | 1/N0 grid in dB for the estimator sweep, same forms as `snr_db` |
//! | `detectors` | any of `"ml"`, `"zf"`, `"mmse"`, `"im-ml"`, `"im-lc"` |
//! | `im_equalizer` | `"mmse"` or `"zf"`, equaliser inside the `im-lc` detector |
//! | `csi` | `"perfect"` or `"estimated"` |
//! | `pilot` | `"zadoff-chu"` or `"random-psk"` |
//! | `zc_root` | Zadoff-Chu root, coprime with `block_len` |
//! | `denoise_estimate` | zero estimated taps outside the known channel support |
//! | `master_seed` | seed for every random stream |
//! | `min_trials` | trial budget per SNR point |
//! | `min_bit_errors` | per-point early-stop error count |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Cpsc,
    CpscRis,
    CpscRisIm,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Cpsc => "cpsc",
            Scheme::CpscRis => "cpsc-ris",
            Scheme::CpscRisIm => "cpsc-ris-im",
        }
    }

    pub fn is_im(self) -> bool {
        self == Scheme::CpscRisIm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    Ml,
    Zf,
    Mmse,
    ImMl,
    ImLc,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Ml => "ml",
            DetectorKind::Zf => "zf",
            DetectorKind::Mmse => "mmse",
            DetectorKind::ImMl => "im-ml",
            DetectorKind::ImLc => "im-lc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "ml" => Ok(DetectorKind::Ml),
            "zf" => Ok(DetectorKind::Zf),
            "mmse" => Ok(DetectorKind::Mmse),
            "im-ml" => Ok(DetectorKind::ImMl),
            "im-lc" => Ok(DetectorKind::ImLc),
            other => Err(Error::Config(format!("unknown detector `{other}`"))),
        }
    }

    pub fn is_im(self) -> bool {
        matches!(self, DetectorKind::ImMl | DetectorKind::ImLc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqualizerMode {
    Zf,
    Mmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsiMode {
    Perfect,
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PilotKind {
    ZadoffChu,
    RandomPsk,
}

/// How the phase of each tap's line-of-sight mean is drawn per realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseModel {
    /// Independent uniform phase for every tap.
    PerTap,
    /// One uniform phase shared by all taps of a realization.
    Common,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinkTaps {
    Uniform(usize),
    PerLink(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FadingOrders {
    Uniform(u32),
    PerTap(Vec<Vec<u32>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnrGrid {
    List(Vec<f64>),
    Range(String),
}

impl SnrGrid {
    /// Expands the grid to explicit dB values.
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            SnrGrid::List(v) => Ok(v.clone()),
            SnrGrid::Range(s) => parse_snr_range(s),
        }
    }
}

/// Parses `min:step:max` into an inclusive grid.
pub fn parse_snr_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Config(format!("SNR range `{s}` is not `min:step:max`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (lo, step, hi) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || hi < lo || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + step * i as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub scheme: Scheme,
    pub block_len: usize,
    pub psk_order: usize,
    pub groups: usize,
    pub elements_per_group: usize,
    pub cp_len: usize,
    pub delay_step: usize,
    pub link_taps: LinkTaps,
    pub fading_m: FadingOrders,
    pub pdp_decay: f64,
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub path_loss_exp_direct: f64,
    pub path_loss_exp_tx_ris: f64,
    pub path_loss_exp_ris_rx: f64,
    pub phase_model: PhaseModel,
    pub snr_db: SnrGrid,
    pub inv_n0_db: SnrGrid,
    pub detectors: Vec<DetectorKind>,
    pub im_equalizer: EqualizerMode,
    pub csi: CsiMode,
    pub pilot: PilotKind,
    pub zc_root: i64,
    pub denoise_estimate: bool,
    pub master_seed: u64,
    pub min_trials: u64,
    pub min_bit_errors: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            scheme: Scheme::CpscRis,
            block_len: 8,
            psk_order: 2,
            groups: 2,
            elements_per_group: 8,
            cp_len: 2,
            delay_step: 2,
            link_taps: LinkTaps::Uniform(2),
            fading_m: FadingOrders::Uniform(2),
            pdp_decay: 1.0,
            d0: 50.0,
            d1: 5.0,
            d2: 50.0,
            path_loss_exp_direct: 2.5,
            path_loss_exp_tx_ris: 2.0,
            path_loss_exp_ris_rx: 2.0,
            phase_model: PhaseModel::Common,
            snr_db: SnrGrid::List(vec![30.0, 35.0, 40.0, 45.0, 50.0]),
            inv_n0_db: SnrGrid::Range("0:5:30".into()),
            detectors: vec![DetectorKind::Mmse],
            im_equalizer: EqualizerMode::Mmse,
            csi: CsiMode::Perfect,
            pilot: PilotKind::ZadoffChu,
            zc_root: 1,
            denoise_estimate: false,
            master_seed: 1,
            min_trials: 100_000,
            min_bit_errors: 200,
        }
    }
}

impl SystemConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always serialisable")
    }

    /// Number of links including the direct one (`R + 1`).
    pub fn link_count(&self) -> usize {
        self.groups + 1
    }

    /// Total RIS elements `N_R = N_G · R`.
    pub fn total_elements(&self) -> usize {
        self.elements_per_group * self.groups
    }

    pub fn taps_per_link(&self) -> Vec<usize> {
        match &self.link_taps {
            LinkTaps::Uniform(t) => vec![*t; self.link_count()],
            LinkTaps::PerLink(v) => v.clone(),
        }
    }

    /// Total non-zero taps of the equivalent channel, `L_s`.
    pub fn core_len(&self) -> usize {
        self.taps_per_link().iter().sum()
    }

    pub fn fading_orders(&self) -> Vec<Vec<u32>> {
        match &self.fading_m {
            FadingOrders::Uniform(m) => self
                .taps_per_link()
                .iter()
                .map(|&t| vec![*m; t])
                .collect(),
            FadingOrders::PerTap(v) => v.clone(),
        }
    }

    pub fn snr_grid(&self) -> Result<Vec<f64>> {
        self.snr_db.values()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.psk_order.trailing_zeros() as usize
    }

    /// Constellation bits per block, `N log2 M`.
    pub fn data_bits(&self) -> usize {
        self.block_len * self.bits_per_symbol()
    }

    /// Index bits per block, `⌊log2 R!⌋` for the IM scheme and zero otherwise.
    pub fn index_bits(&self) -> usize {
        if self.scheme.is_im() {
            floor_log2_factorial(self.groups)
        } else {
            0
        }
    }

    pub fn bits_per_block(&self) -> usize {
        self.data_bits() + self.index_bits()
    }

    /// Average transmitted energy per bit, `(N + L) / b`.
    pub fn energy_per_bit(&self) -> f64 {
        (self.block_len + self.cp_len) as f64 / self.bits_per_block() as f64
    }

    /// Noise power for an Eb/N0 given in dB.
    pub fn noise_power(&self, snr_db: f64) -> f64 {
        self.energy_per_bit() / 10f64.powf(snr_db / 10.0)
    }

    /// Large-scale power gain of link `link` (0 = direct).
    pub fn link_gain(&self, link: usize) -> f64 {
        if link == 0 {
            self.d0.powf(-self.path_loss_exp_direct)
        } else {
            let ng = self.elements_per_group as f64;
            ng * ng
                * self.d1.powf(-self.path_loss_exp_tx_ris)
                * self.d2.powf(-self.path_loss_exp_ris_rx)
        }
    }

    /// Checks every structural constraint of the scenario.
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        let n = self.block_len;
        if n == 0 {
            return err("block_len must be at least 1".into());
        }
        if self.psk_order < 2 || !self.psk_order.is_power_of_two() {
            return err(format!("psk_order {} is not a power of two ≥ 2", self.psk_order));
        }
        match (self.scheme, self.groups) {
            (Scheme::Cpsc, r) if r != 0 => {
                return err(format!("scheme cpsc requires groups = 0, got {r}"))
            }
            (Scheme::CpscRis | Scheme::CpscRisIm, 0) => {
                return err(format!("scheme {} requires groups ≥ 1", self.scheme.name()))
            }
            _ => {}
        }
        if self.groups > 0 && self.elements_per_group == 0 {
            return err("elements_per_group must be at least 1".into());
        }
        if self.cp_len >= n {
            return err(format!("cp_len {} must be smaller than block_len {n}", self.cp_len));
        }
        let taps = self.taps_per_link();
        if taps.len() != self.link_count() {
            return err(format!(
                "link_taps has {} entries, expected groups + 1 = {}",
                taps.len(),
                self.link_count()
            ));
        }
        if taps.contains(&0) {
            return err("every link needs at least one tap".into());
        }
        let max_taps = *taps.iter().max().unwrap();
        if self.cp_len < max_taps {
            return err(format!(
                "cp_len {} is shorter than the longest link ({max_taps} taps)",
                self.cp_len
            ));
        }
        if self.groups == 0 {
            if max_taps > n {
                return err(format!("direct link has more taps than block_len {n}"));
            }
        } else {
            let upper = n / (self.groups + 1);
            if self.delay_step < self.cp_len {
                return err(format!(
                    "delay_step {} violates L ≤ Δ (cp_len = {})",
                    self.delay_step, self.cp_len
                ));
            }
            if self.delay_step > upper {
                return err(format!(
                    "delay_step {} violates Δ ≤ ⌊N/(R+1)⌋ = {upper}",
                    self.delay_step
                ));
            }
        }
        let orders = self.fading_orders();
        if orders.len() != taps.len() || orders.iter().zip(&taps).any(|(o, &t)| o.len() != t) {
            return err("fading_m must have one entry per tap of every link".into());
        }
        if orders.iter().flatten().any(|&m| m < 1) {
            return err("fading_m must be ≥ 1".into());
        }
        if !(self.pdp_decay >= 0.0) || !self.pdp_decay.is_finite() {
            return err("pdp_decay must be finite and ≥ 0".into());
        }
        for (name, d) in [("d0", self.d0), ("d1", self.d1), ("d2", self.d2)] {
            if !(d > 0.0) || !d.is_finite() {
                return err(format!("{name} must be a positive distance"));
            }
        }
        let grid = self.snr_grid()?;
        if grid.is_empty() || grid.iter().any(|s| !s.is_finite()) {
            return err("snr_db must be a non-empty list of finite values".into());
        }
        let inv = self.inv_n0_db.values()?;
        if inv.is_empty() || inv.iter().any(|s| !s.is_finite()) {
            return err("inv_n0_db must be a non-empty list of finite values".into());
        }
        if self.detectors.is_empty() {
            return err("at least one detector is required".into());
        }
        for d in &self.detectors {
            if d.is_im() != self.scheme.is_im() {
                return err(format!(
                    "detector {} cannot be used with scheme {}",
                    d.name(),
                    self.scheme.name()
                ));
            }
        }
        if self.csi == CsiMode::Estimated && !n.is_multiple_of(2) {
            return err("estimated CSI needs an even block_len".into());
        }
        if self.min_trials == 0 {
            return err("min_trials must be at least 1".into());
        }
        Ok(())
    }
}

/// `⌊log2(R!)⌋`, exact while `R!` fits in 128 bits.
pub fn floor_log2_factorial(r: usize) -> usize {
    let mut acc: u128 = 1;
    for k in 2..=r as u128 {
        match acc.checked_mul(k) {
            Some(v) => acc = v,
            None => return (2..=r).map(|k| (k as f64).log2()).sum::<f64>().floor() as usize,
        }
    }
    (127 - acc.leading_zeros()) as usize
}
