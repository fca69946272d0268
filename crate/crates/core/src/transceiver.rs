//! Transmit chain: Gray-coded PSK, cyclic prefix, RIS phase profiles that
//! realise cyclic delays, index-modulation permutation coding and the anchor
//! rotation, plus received-signal synthesis.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::FadingRealization;
use crate::config::SystemConfig;
use crate::error::{invalid, Error, Result};
use crate::numerics::{cir, cyclic_shift, C64, ZERO};

/// Tolerance used when checking that samples are unit modulus.
const UNIT_TOL: f64 = 1e-9;

fn check_order(m: usize) -> Result<usize> {
    if m < 2 || !m.is_power_of_two() {
        return Err(invalid(format!("PSK order {m} is not a power of two ≥ 2")));
    }
    Ok(m.trailing_zeros() as usize)
}

/// Constellation point with index `d`, `exp(j2πd/M)`.
pub fn psk_point(d: usize, m: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * d as f64 / m as f64)
}

pub fn gray(d: usize) -> usize {
    d ^ (d >> 1)
}

pub fn gray_inverse(mut g: usize) -> usize {
    let mut d = g;
    while g > 0 {
        g >>= 1;
        d ^= g;
    }
    d
}

/// Minimum-distance constellation index of a received sample.
pub fn slice_index(z: C64, m: usize) -> usize {
    let step = 2.0 * PI / m as f64;
    let k = (z.arg() / step).round() as i64;
    k.rem_euclid(m as i64) as usize
}

/// Bits of constellation index `d`, most significant first.
pub fn index_bits(d: usize, bits_per_symbol: usize, out: &mut Vec<u8>) {
    let g = gray(d);
    for b in (0..bits_per_symbol).rev() {
        out.push(((g >> b) & 1) as u8);
    }
}

/// A block of `N` PSK symbols and the bits it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    pub symbols: Vec<C64>,
    /// Every bit of the block: index bits first (IM only), then data bits.
    pub source_bits: Vec<u8>,
    pub im_permutation: Option<Vec<usize>>,
    pub anchor_applied: bool,
}

impl SymbolBlock {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Gray-coded M-PSK mapping (bits are taken most significant first).
pub fn psk_modulate(bits: &[u8], m: usize) -> Result<SymbolBlock> {
    let k = check_order(m)?;
    if !bits.len().is_multiple_of(k) {
        return Err(invalid(format!(
            "{} bits cannot be split into {k}-bit symbols",
            bits.len()
        )));
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(invalid("bits must be 0 or 1"));
    }
    let symbols = bits
        .chunks(k)
        .map(|c| {
            let word = c.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            psk_point(gray_inverse(word), m)
        })
        .collect();
    Ok(SymbolBlock {
        symbols,
        source_bits: bits.to_vec(),
        im_permutation: None,
        anchor_applied: false,
    })
}

/// Per-symbol minimum-distance demodulation back to bits.
pub fn psk_demodulate(symbols: &[C64], m: usize) -> Result<Vec<u8>> {
    let k = check_order(m)?;
    let mut out = Vec::with_capacity(symbols.len() * k);
    for &z in symbols {
        index_bits(slice_index(z, m), k, &mut out);
    }
    Ok(out)
}

/// Prefixes the last `cp_len` samples.
pub fn add_cp(x: &[C64], cp_len: usize) -> Result<Vec<C64>> {
    let n = x.len();
    if cp_len >= n {
        return Err(invalid(format!("CP length {cp_len} must be below block length {n}")));
    }
    let mut out = Vec::with_capacity(n + cp_len);
    out.extend_from_slice(&x[n - cp_len..]);
    out.extend_from_slice(x);
    Ok(out)
}

pub fn remove_cp(v: &[C64], cp_len: usize) -> Result<Vec<C64>> {
    if 2 * cp_len >= v.len() {
        return Err(invalid(format!(
            "CP length {cp_len} must be below block length {}",
            v.len().saturating_sub(cp_len)
        )));
    }
    Ok(v[cp_len..].to_vec())
}

/// Per-group phase sequences (radians, reduced to `[0, 2π)`).
#[derive(Debug, Clone, PartialEq)]
pub struct RisPhaseProfile {
    pub per_group: Vec<Vec<f64>>,
}

impl RisPhaseProfile {
    /// Reflects `x_cp` off group `r` (zero-based).
    pub fn apply(&self, group: usize, x_cp: &[C64]) -> Vec<C64> {
        self.per_group[group]
            .iter()
            .zip(x_cp)
            .map(|(&t, &x)| x * C64::from_polar(1.0, t))
            .collect()
    }

    /// True when every phase lies on the grid `{0, 2π/M, …}`.
    pub fn on_grid(&self, m: usize, tol: f64) -> bool {
        let step = 2.0 * PI / m as f64;
        self.per_group.iter().flatten().all(|&t| {
            let k = (t / step).round();
            (t - k * step).abs() <= tol
        })
    }
}

/// Phases that turn `x_cp` into its CP-extended cyclic shifts by `delays`.
pub fn ris_phase_profile(x_cp: &[C64], cp_len: usize, delays: &[usize]) -> Result<RisPhaseProfile> {
    if x_cp.iter().any(|z| (z.norm() - 1.0).abs() > UNIT_TOL) {
        return Err(invalid("RIS phase profiles need a unit-modulus block"));
    }
    let x = remove_cp(x_cp, cp_len)?;
    let per_group = delays
        .iter()
        .map(|&d| {
            let shifted = add_cp(&cyclic_shift(&x, d)?, cp_len)?;
            Ok(shifted
                .iter()
                .zip(x_cp)
                .map(|(s, o)| (s.arg() - o.arg()).rem_euclid(2.0 * PI))
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(RisPhaseProfile { per_group })
}

/// Cyclic delays `Δ_r = k_r Δ` for a delay permutation.
pub fn group_delays(k: &[usize], delay_step: usize) -> Vec<usize> {
    k.iter().map(|&kr| kr * delay_step).collect()
}

/// Maps `⌊log2 R!⌋` bits to delay permutations.
///
/// The used permutations are the first `2^{b₁}` in lexicographic order. The
/// bit word is read least-significant bit first, which reproduces the
/// classic R = 3 table (`00 → 123`, `01 → 213`, `10 → 132`, `11 → 231`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationCode {
    groups: usize,
    bits: usize,
}

impl PermutationCode {
    pub fn new(groups: usize) -> Result<Self> {
        if groups == 0 {
            return Err(invalid("permutation coding needs at least one group"));
        }
        let bits = crate::config::floor_log2_factorial(groups);
        if bits > 24 {
            return Err(Error::Capacity {
                what: "permutation table",
                required: 1u128 << bits,
                limit: 1 << 24,
                advice: "use fewer reflecting groups",
            });
        }
        Ok(PermutationCode { groups, bits })
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    /// Number of bits carried, `b₁`.
    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Number of permutations in use, `2^{b₁}`.
    pub fn len(&self) -> usize {
        1 << self.bits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Permutation at table position `index` (lexicographic rank).
    pub fn permutation(&self, index: usize) -> Vec<usize> {
        assert!(index < self.len());
        let mut pool: Vec<usize> = (1..=self.groups).collect();
        let mut fact: Vec<usize> = vec![1; self.groups];
        for i in 1..self.groups {
            fact[i] = fact[i - 1] * i;
        }
        let mut rest = index;
        (0..self.groups)
            .rev()
            .map(|pos| {
                let q = rest / fact[pos];
                rest %= fact[pos];
                pool.remove(q)
            })
            .collect()
    }

    pub fn table(&self) -> Vec<Vec<usize>> {
        (0..self.len()).map(|i| self.permutation(i)).collect()
    }

    /// Table position of `k`, or an error when `k` is unused or invalid.
    pub fn index_of(&self, k: &[usize]) -> Result<usize> {
        if k.len() != self.groups {
            return Err(Error::PermutationNotInTable(k.to_vec()));
        }
        let mut rank = 0usize;
        let mut used = vec![false; self.groups + 1];
        for (pos, &v) in k.iter().enumerate() {
            if v == 0 || v > self.groups || used[v] {
                return Err(Error::PermutationNotInTable(k.to_vec()));
            }
            let smaller = (1..v).filter(|&u| !used[u]).count();
            let remaining = self.groups - pos - 1;
            rank += smaller * (1..=remaining).product::<usize>();
            used[v] = true;
        }
        if rank >= self.len() {
            return Err(Error::PermutationNotInTable(k.to_vec()));
        }
        Ok(rank)
    }

    pub fn index_from_bits(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.bits {
            return Err(invalid(format!(
                "expected {} index bits, got {}",
                self.bits,
                bits.len()
            )));
        }
        Ok(bits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | ((b as usize & 1) << i)))
    }

    pub fn bits_of_index(&self, index: usize) -> Vec<u8> {
        (0..self.bits).map(|i| ((index >> i) & 1) as u8).collect()
    }

    pub fn encode(&self, bits: &[u8]) -> Result<Vec<usize>> {
        Ok(self.permutation(self.index_from_bits(bits)?))
    }

    pub fn decode(&self, k: &[usize]) -> Result<Vec<u8>> {
        Ok(self.bits_of_index(self.index_of(k)?))
    }
}

/// Rotates the first symbol by `π/M`.
pub fn apply_anchor(x: &[C64], m: usize) -> Vec<C64> {
    let mut out = x.to_vec();
    if let Some(first) = out.first_mut() {
        *first *= C64::from_polar(1.0, PI / m as f64);
    }
    out
}

/// Undoes [`apply_anchor`].
pub fn strip_anchor(x: &[C64], m: usize) -> Vec<C64> {
    let mut out = x.to_vec();
    if let Some(first) = out.first_mut() {
        *first *= C64::from_polar(1.0, -PI / m as f64);
    }
    out
}

/// Circularly-symmetric complex Gaussian noise with per-entry power `n0`.
pub fn awgn<R: Rng + ?Sized>(len: usize, n0: f64, rng: &mut R) -> Vec<C64> {
    let s = (n0 / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            C64::new(s * a, s * b)
        })
        .collect()
}

/// `y = cir(x) g_eq + w` with `w ~ CN(0, n0 I)`.
pub fn synthesize_received<R: Rng + ?Sized>(
    x: &[C64],
    g_eq: &[C64],
    n0: f64,
    rng: &mut R,
) -> Result<Vec<C64>> {
    if !(n0 >= 0.0) {
        return Err(invalid("noise power must be ≥ 0"));
    }
    if x.len() != g_eq.len() {
        return Err(invalid("channel and block lengths differ"));
    }
    let mut y = cir(g_eq)?.mul_vec(x);
    if n0 > 0.0 {
        for (yi, w) in y.iter_mut().zip(awgn(x.len(), n0, rng)) {
            *yi += w;
        }
    }
    Ok(y)
}

/// Noiseless received block built the physical way: CP insertion, RIS phase
/// profiles per group, linear convolution with each link and CP removal.
pub fn propagate_links(
    x: &[C64],
    realization: &FadingRealization,
    delays: &[usize],
    cp_len: usize,
) -> Result<Vec<C64>> {
    let n = x.len();
    if delays.len() + 1 != realization.links.len() {
        return Err(invalid("one delay per reflecting group is required"));
    }
    let x_cp = add_cp(x, cp_len)?;
    let profile = ris_phase_profile(&x_cp, cp_len, delays)?;
    let mut y = vec![ZERO; n];
    for (link, taps) in realization.links.iter().enumerate() {
        if taps.len() > cp_len + 1 {
            return Err(invalid("link longer than the cyclic prefix"));
        }
        let incident = if link == 0 {
            x_cp.clone()
        } else {
            profile.apply(link - 1, &x_cp)
        };
        for (i, yi) in y.iter_mut().enumerate() {
            let t = i + cp_len;
            for (l, g) in taps.iter().enumerate() {
                if l <= t {
                    *yi += g * incident[t - l];
                }
            }
        }
    }
    Ok(y)
}

/// Bits per second per hertz of a scenario.
pub fn spectral_efficiency(config: &SystemConfig, im: bool) -> f64 {
    let extra = if im {
        crate::config::floor_log2_factorial(config.groups)
    } else {
        0
    };
    (config.data_bits() + extra) as f64 / (config.block_len + config.cp_len) as f64
}
