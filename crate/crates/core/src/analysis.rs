//! Pairwise error probabilities and BER union bounds.
//!
//! For a transmit/detect pair the squared distance `‖(X − X̂) g_eq‖²` only
//! involves the core taps, so it equals `g′ᴴ A g′` with `A = DᴴD`, `D` the
//! core columns of the difference. Diagonalising `A = UᴴΛU` turns it into
//! `Σ_l d_l |g̃_l|²` with `g̃ = U g′`. Under the Gaussian tap model each
//! `|g̃_l|²` has a closed-form MGF; combined with the two-exponential
//! approximation of `Q(x)` this gives the unconditional PEP, and summing
//! bit-weighted PEPs over all pairs gives the union bound.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::channel::{core_positions, identity_permutation, link_profiles};
use crate::config::SystemConfig;
use crate::error::{invalid, Error, Result};
use crate::numerics::{cyclic_shift, hermitian_eig, norm_sqr, CMatrix, C64, ZERO};
use crate::transceiver::{apply_anchor, gray_inverse, psk_point, PermutationCode};

/// Eigenvalues below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-9;

/// Largest codebook the exhaustive union bound will enumerate.
pub const CODEBOOK_LIMIT: u128 = 1 << 12;

/// Largest codebook the truncated union bound will enumerate.
pub const TRUNCATED_CODEBOOK_LIMIT: u128 = 1 << 20;

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Two-exponential approximation `e^{−x²/2}/12 + e^{−2x²/3}/4` of `Q(x)`.
///
/// It exceeds `Q(x)` only for `x` above roughly 0.7; near zero it
/// underestimates (it gives 1/3 at `x = 0`).
pub fn chiani_q(x: f64) -> f64 {
    let x2 = x * x;
    (-x2 / 2.0).exp() / 12.0 + (-2.0 * x2 / 3.0).exp() / 4.0
}

/// Conditional PEP given the (possibly estimated) channel `g`.
///
/// `Q(‖Dg‖² / √(2N0‖Dg‖² + 2σ_e²‖XᴴDg‖²))` with `X = cir(x)` and
/// `D = cir(x − x̂)`; with `σ_e² = 0` this is `Q(√(‖Dg‖²/(2N0)))`.
pub fn conditional_pep(x: &[C64], x_hat: &[C64], g: &[C64], n0: f64, sigma_e2: f64) -> Result<f64> {
    let n = x.len();
    if x_hat.len() != n || g.len() != n {
        return Err(invalid("pair and channel lengths differ"));
    }
    let diff: Vec<C64> = x.iter().zip(x_hat).map(|(a, b)| a - b).collect();
    let u = crate::numerics::cir(&diff)?.mul_vec(g);
    let dist = norm_sqr(&u);
    if dist == 0.0 {
        return Ok(0.5);
    }
    // Xᴴu: (Xᴴu)(j) = Σ_i conj(x[(i − j) mod N]) u(i).
    let xhu: Vec<C64> = (0..n)
        .map(|j| (0..n).map(|i| x[(i + n - j) % n].conj() * u[i]).sum())
        .collect();
    let var = 2.0 * n0 * dist + 2.0 * sigma_e2 * norm_sqr(&xhu);
    if var <= 0.0 {
        return Ok(0.0);
    }
    Ok(q_function(dist / var.sqrt()))
}

/// Statistics of the stacked core taps `g′` (direct link first) under the
/// Gaussian approximation, with the common phase set to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TapStatistics {
    pub m: Vec<u32>,
    pub omega: Vec<f64>,
    pub mu: Vec<C64>,
    pub omega_s: Vec<f64>,
    taps_per_link: Vec<usize>,
    delay_step: usize,
    block_len: usize,
}

impl TapStatistics {
    pub fn from_config(config: &SystemConfig) -> Result<Self> {
        let profiles = link_profiles(config)?;
        let taps = profiles.iter().flat_map(|p| p.taps.iter());
        let (mut m, mut omega, mut mu, mut omega_s) = (vec![], vec![], vec![], vec![]);
        for t in taps {
            m.push(t.m());
            omega.push(t.omega());
            mu.push(t.mean(0.0));
            omega_s.push(t.scatter_power());
        }
        Ok(TapStatistics {
            m,
            omega,
            mu,
            omega_s,
            taps_per_link: profiles.iter().map(|p| p.len()).collect(),
            delay_step: config.delay_step,
            block_len: config.block_len,
        })
    }

    /// Number of core taps `L_s`.
    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Core-tap positions in the equivalent channel for permutation `k`.
    pub fn positions(&self, k: &[usize]) -> Vec<usize> {
        core_positions(&self.taps_per_link, k, self.delay_step)
    }

    /// Positions under the identity permutation.
    pub fn identity_positions(&self) -> Vec<usize> {
        self.positions(&identity_permutation(self.taps_per_link.len() - 1))
    }

    /// Variance `v_l = Σ_j |u_lj|² Ω_s(j)` and mean power
    /// `p_l = |Σ_j u_lj μ_j|²` of the rotated tap `g̃_l = u_lᵀ g′`.
    pub fn rotated(&self, row: &[C64]) -> (f64, f64) {
        let v = row
            .iter()
            .zip(&self.omega_s)
            .map(|(u, w)| u.norm_sqr() * w)
            .sum();
        let p = row
            .iter()
            .zip(&self.mu)
            .map(|(u, m)| u * m)
            .sum::<C64>()
            .norm_sqr();
        (v, p)
    }
}

fn mgf(t: f64, v: f64, p: f64) -> Result<f64> {
    let den = 1.0 - t * v;
    if den <= 0.0 {
        return Err(Error::Domain(format!(
            "MGF evaluated at t = {t} beyond its pole 1/{v}"
        )));
    }
    Ok((t * p / den).exp() / den)
}

/// MGF of `|g̃_l|²` where `row` is `u_l`.
pub fn tap_mgf(t: f64, row: &[C64], stats: &TapStatistics) -> Result<f64> {
    if row.len() != stats.len() {
        return Err(invalid("eigenvector length differs from the core length"));
    }
    let (v, p) = stats.rotated(row);
    mgf(t, v, p)
}

/// `D`: column `j` is `shift(x, pos[j]) − shift(x̂, pos_hat[j])`.
pub fn difference_matrix(
    x: &[C64],
    positions: &[usize],
    x_hat: &[C64],
    positions_hat: &[usize],
) -> Result<CMatrix> {
    if x.len() != x_hat.len() || positions.len() != positions_hat.len() {
        return Err(invalid("pair members differ in shape"));
    }
    let cols = positions
        .iter()
        .zip(positions_hat)
        .map(|(&p, &q)| {
            let a = cyclic_shift(x, p)?;
            let b = cyclic_shift(x_hat, q)?;
            Ok(a.iter().zip(&b).map(|(s, t)| s - t).collect())
        })
        .collect::<Result<Vec<Vec<C64>>>>()?;
    Ok(CMatrix::from_columns(&cols))
}

/// Eigen-geometry of one error event: eigenvalues `d_l` of `A` and the
/// variance / mean power of the matching rotated taps.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGeometry {
    pub d: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
}

impl PairGeometry {
    pub fn from_gram(a: &CMatrix, stats: &TapStatistics) -> Result<Self> {
        let eig = hermitian_eig(a)?;
        let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
        let mut g = PairGeometry {
            d: vec![],
            v: vec![],
            p: vec![],
        };
        for (l, &d) in eig.values.iter().enumerate() {
            let d = if d > RANK_TOL * top { d } else { 0.0 };
            let (v, p) = stats.rotated(eig.u.row(l));
            g.d.push(d);
            g.v.push(v);
            g.p.push(p);
        }
        Ok(g)
    }

    pub fn rank(&self) -> usize {
        self.d.iter().filter(|&&d| d > 0.0).count()
    }

    /// `1/12 Π M_l(−d_l/4N0) + 1/4 Π M_l(−d_l/3N0)`.
    pub fn pep(&self, n0: f64) -> f64 {
        let mut a = 1.0;
        let mut b = 1.0;
        for ((&d, &v), &p) in self.d.iter().zip(&self.v).zip(&self.p) {
            if d == 0.0 {
                continue;
            }
            // Arguments are negative, so the MGF is always in its domain.
            a *= mgf(-d / (4.0 * n0), v, p).unwrap_or(0.0);
            b *= mgf(-d / (3.0 * n0), v, p).unwrap_or(0.0);
        }
        a / 12.0 + b / 4.0
    }
}

/// Unconditional PEP of a pair on the identity layout.
pub fn unconditional_pep(x: &[C64], x_hat: &[C64], stats: &TapStatistics, n0: f64) -> Result<f64> {
    let pos = stats.identity_positions();
    unconditional_pep_with_positions(x, &pos, x_hat, &pos, stats, n0)
}

/// Unconditional PEP with explicit core layouts for both pair members (the
/// index-modulation case).
pub fn unconditional_pep_with_positions(
    x: &[C64],
    positions: &[usize],
    x_hat: &[C64],
    positions_hat: &[usize],
    stats: &TapStatistics,
    n0: f64,
) -> Result<f64> {
    if !(n0 > 0.0) {
        return Err(invalid("noise power must be positive"));
    }
    let d = difference_matrix(x, positions, x_hat, positions_hat)?;
    Ok(PairGeometry::from_gram(&d.gram(), stats)?.pep(n0))
}

/// Averages the exact conditional PEP over channel draws from the Gaussian
/// tap model (common phase), a semi-analytic cross-check of
/// [`unconditional_pep`].
pub fn semi_analytic_pep<R: Rng + ?Sized>(
    x: &[C64],
    x_hat: &[C64],
    stats: &TapStatistics,
    n0: f64,
    draws: usize,
    rng: &mut R,
) -> Result<f64> {
    let pos = stats.identity_positions();
    let d = difference_matrix(x, &pos, x_hat, &pos)?;
    Ok(semi_analytic_sum(&d, stats, n0, draws, rng)? / draws as f64)
}

/// Sum of `Q(√(‖D g′‖²/2N0))` over `draws` core-tap draws; `D` holds the
/// core columns of the pair difference.
pub fn semi_analytic_sum<R: Rng + ?Sized>(
    d: &CMatrix,
    stats: &TapStatistics,
    n0: f64,
    draws: usize,
    rng: &mut R,
) -> Result<f64> {
    if d.cols() != stats.len() {
        return Err(invalid("difference matrix does not match the core length"));
    }
    if !(n0 > 0.0) {
        return Err(invalid("noise power must be positive"));
    }
    let mut acc = 0.0;
    let mut g = vec![ZERO; stats.len()];
    for _ in 0..draws {
        let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        for (j, gj) in g.iter_mut().enumerate() {
            let s = (stats.omega_s[j] / 2.0).sqrt();
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            *gj = stats.mu[j] * phase + C64::new(s * a, s * b);
        }
        let dist = norm_sqr(&d.mul_vec(&g));
        acc += q_function((dist / (2.0 * n0)).sqrt());
    }
    Ok(acc)
}

/// One transmittable block of a scheme: transmitted samples (anchor
/// included), core layout, and its bit label.
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    pub symbols: Vec<C64>,
    pub positions: Vec<usize>,
    /// Bits packed most-significant first: index bits then data bits.
    pub label: u64,
}

struct CodebookLayout {
    block_len: usize,
    psk_order: usize,
    bits_per_symbol: usize,
    data_bits: usize,
    index_bits: usize,
    positions: Vec<Vec<usize>>,
    anchor: bool,
}

impl CodebookLayout {
    fn new(config: &SystemConfig, limit: u128) -> Result<Self> {
        let stats = TapStatistics::from_config(config)?;
        let (index_bits, table) = if config.scheme.is_im() {
            let code = PermutationCode::new(config.groups)?;
            (code.bits(), code.table())
        } else {
            (0, vec![identity_permutation(config.groups)])
        };
        let total = index_bits + config.data_bits();
        if total >= 64 || (1u128 << total) > limit {
            return Err(Error::Capacity {
                what: "union-bound codebook",
                required: 1u128.checked_shl(total as u32).unwrap_or(u128::MAX),
                limit,
                advice: "shrink the block length or the constellation order",
            });
        }
        Ok(CodebookLayout {
            block_len: config.block_len,
            psk_order: config.psk_order,
            bits_per_symbol: config.bits_per_symbol(),
            data_bits: config.data_bits(),
            index_bits,
            anchor: table.len() > 1,
            positions: table.iter().map(|k| stats.positions(k)).collect(),
        })
    }

    fn len(&self) -> usize {
        1 << (self.index_bits + self.data_bits)
    }

    fn word(&self, position: usize) -> Codeword {
        let (n, k, m) = (self.block_len, self.bits_per_symbol, self.psk_order);
        let i = position >> self.data_bits;
        let w = (position & ((1 << self.data_bits) - 1)) as u64;
        let symbols: Vec<C64> = (0..n)
            .map(|s| {
                let gray_word = ((w >> ((n - 1 - s) * k)) & ((1 << k) - 1)) as usize;
                psk_point(gray_inverse(gray_word), m)
            })
            .collect();
        let symbols = if self.anchor { apply_anchor(&symbols, m) } else { symbols };
        // The code reads index bits least-significant first; pack them in
        // transmission order.
        let index_label =
            (0..self.index_bits).fold(0u64, |acc, b| (acc << 1) | ((i >> b) & 1) as u64);
        Codeword {
            symbols,
            positions: self.positions[i].clone(),
            label: (index_label << self.data_bits) | w,
        }
    }
}

/// Every codeword of `config`'s scheme: table position major, data word
/// minor.
pub fn codebook(config: &SystemConfig, limit: u128) -> Result<Vec<Codeword>> {
    let layout = CodebookLayout::new(config, limit)?;
    Ok((0..layout.len()).map(|p| layout.word(p)).collect())
}

/// Codeword at `position` of [`codebook`] without building the whole book.
pub fn codeword(config: &SystemConfig, position: usize) -> Result<Codeword> {
    let layout = CodebookLayout::new(config, 1 << 62)?;
    if position >= layout.len() {
        return Err(invalid(format!(
            "codeword {position} is out of range (codebook has {})",
            layout.len()
        )));
    }
    Ok(layout.word(position))
}

fn gram_key(a: &CMatrix) -> Vec<i64> {
    let n = a.rows();
    let mut key = Vec::with_capacity(n * (n + 1));
    for i in 0..n {
        for j in i..n {
            key.push((a[(i, j)].re * 1e9).round() as i64);
            key.push((a[(i, j)].im * 1e9).round() as i64);
        }
    }
    key
}

/// Error events sharing one Gram matrix, with their summed bit weights.
#[derive(Debug, Clone)]
pub struct EventClass {
    pub geometry: PairGeometry,
    /// `Σ ξ` over the ordered pairs in the class.
    pub weight: f64,
    pub pairs: u64,
}

/// Union bound, precomputed so it can be evaluated at many noise levels.
#[derive(Debug, Clone)]
pub struct UnionBound {
    pub classes: Vec<EventClass>,
    /// `b·2^b`.
    pub normalisation: f64,
    pub bits_per_block: usize,
    /// True when only events with few symbol errors were enumerated.
    pub approximate: bool,
}

/// How to enumerate the pair space.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BoundOptions {
    /// Keep only detected blocks within this many symbol errors of the
    /// transmitted one (non-IM schemes only); permits larger codebooks and
    /// marks the result approximate.
    pub max_symbol_errors: Option<usize>,
}

struct PairVisit {
    key: Vec<i64>,
    gram: CMatrix,
    xi: u32,
}

/// Indices of codewords differing from word `w` in 1..=`t` symbols, for a
/// plain (non-IM) codebook indexed by data word.
fn neighbours(w: u64, n: usize, k: usize, t: usize) -> Vec<u64> {
    fn rec(w: u64, start: usize, left: usize, n: usize, k: usize, out: &mut Vec<u64>) {
        if left == 0 {
            return;
        }
        let mask = (1u64 << k) - 1;
        for s in start..n {
            let shift = (n - 1 - s) * k;
            let own = (w >> shift) & mask;
            for v in 0..=mask {
                if v == own {
                    continue;
                }
                let u = (w & !(mask << shift)) | (v << shift);
                out.push(u);
                rec(u, s + 1, left - 1, n, k, out);
            }
        }
    }
    let mut out = Vec::new();
    rec(w, 0, t, n, k, &mut out);
    out.sort_unstable();
    out
}

/// Visits every unordered pair `i < j` (only pairs within
/// `max_symbol_errors` symbols when truncating) in a fixed order and groups
/// them by Gram matrix.
fn classify_pairs(
    words: &[Codeword],
    max_symbol_errors: Option<usize>,
) -> Result<Vec<(CMatrix, f64, u64)>> {
    let n = words[0].symbols.len();
    let k = (words.len().trailing_zeros() as usize) / n.max(1);
    let per_word: Vec<Vec<PairVisit>> = (0..words.len())
        .into_par_iter()
        .map(|i| {
            let a = &words[i];
            let partners: Vec<usize> = match max_symbol_errors {
                Some(t) => neighbours(i as u64, n, k, t)
                    .into_iter()
                    .map(|j| j as usize)
                    .filter(|&j| j > i)
                    .collect(),
                None => (i + 1..words.len()).collect(),
            };
            partners
                .into_iter()
                .map(|j| {
                    let b = &words[j];
                    let d = difference_matrix(&a.symbols, &a.positions, &b.symbols, &b.positions)?;
                    let gram = d.gram();
                    Ok(PairVisit {
                        key: gram_key(&gram),
                        gram,
                        xi: (a.label ^ b.label).count_ones(),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut classes: Vec<(CMatrix, f64, u64)> = Vec::new();
    for visit in per_word.into_iter().flatten() {
        let slot = *index.entry(visit.key).or_insert_with(|| {
            classes.push((visit.gram, 0.0, 0));
            classes.len() - 1
        });
        // Both orderings of the pair share A and ξ.
        classes[slot].1 += 2.0 * visit.xi as f64;
        classes[slot].2 += 2;
    }
    Ok(classes)
}

impl UnionBound {
    pub fn build(config: &SystemConfig, options: BoundOptions) -> Result<Self> {
        config.validate()?;
        let stats = TapStatistics::from_config(config)?;
        let truncate = options.max_symbol_errors.filter(|_| !config.scheme.is_im());
        let b = config.bits_per_block();
        let oversized = b >= 127 || (1u128 << b) > CODEBOOK_LIMIT;
        let (limit, truncate) = match truncate {
            Some(t) if oversized => (TRUNCATED_CODEBOOK_LIMIT, Some(t)),
            _ => (CODEBOOK_LIMIT, None),
        };
        let words = codebook(config, limit)?;
        Self::from_codebook(&words, b, &stats, truncate)
    }

    /// Bound over an explicit codebook with `bits` bits per block.
    pub fn from_codebook(
        words: &[Codeword],
        bits: usize,
        stats: &TapStatistics,
        max_symbol_errors: Option<usize>,
    ) -> Result<Self> {
        if bits == 0 || words.len() < 2 {
            return Err(invalid("a union bound needs at least two codewords"));
        }
        let classes = classify_pairs(words, max_symbol_errors)?
            .into_par_iter()
            .map(|(gram, weight, pairs)| {
                Ok(EventClass {
                    geometry: PairGeometry::from_gram(&gram, stats)?,
                    weight,
                    pairs,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(UnionBound {
            classes,
            normalisation: bits as f64 * words.len() as f64,
            bits_per_block: bits,
            approximate: max_symbol_errors.is_some(),
        })
    }

    /// Bound on the bit error rate at noise power `n0`.
    pub fn evaluate(&self, n0: f64) -> f64 {
        self.classes
            .iter()
            .map(|c| c.weight * c.geometry.pep(n0))
            .sum::<f64>()
            / self.normalisation
    }
}

/// BER union bound of `config`'s scheme at noise power `n0`.
pub fn ber_union_bound(config: &SystemConfig, n0: f64) -> Result<f64> {
    Ok(UnionBound::build(config, BoundOptions::default())?.evaluate(n0))
}

/// One error event of the rank scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEvent {
    pub transmitted: usize,
    pub detected: usize,
    pub rank: usize,
    pub pep: f64,
    pub xi: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEventSpectrum {
    pub pairs: Vec<ErrorEvent>,
    pub rank_min: usize,
    /// Number of ordered pairs per rank of `A`.
    pub histogram: BTreeMap<usize, u64>,
}

/// Rank of `A` and unconditional PEP (at `n0`) for every ordered pair.
pub fn diversity_rank_scan(config: &SystemConfig, n0: f64) -> Result<ErrorEventSpectrum> {
    config.validate()?;
    if !(n0 > 0.0) {
        return Err(invalid("noise power must be positive"));
    }
    let stats = TapStatistics::from_config(config)?;
    let words = codebook(config, CODEBOOK_LIMIT)?;
    // upper[i][j - i - 1] describes the pair (i, j), j > i; A is shared by
    // both orderings.
    let upper: Vec<Vec<(usize, f64, u32)>> = (0..words.len())
        .into_par_iter()
        .map(|i| {
            let a = &words[i];
            words[i + 1..]
                .iter()
                .map(|b| {
                    let d = difference_matrix(&a.symbols, &a.positions, &b.symbols, &b.positions)?;
                    let g = PairGeometry::from_gram(&d.gram(), &stats)?;
                    Ok((g.rank(), g.pep(n0), (a.label ^ b.label).count_ones()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut pairs = Vec::with_capacity(words.len() * words.len().saturating_sub(1));
    let mut histogram = BTreeMap::new();
    for i in 0..words.len() {
        for j in 0..words.len() {
            if i == j {
                continue;
            }
            let (lo, hi) = (i.min(j), i.max(j));
            let (rank, pep, xi) = upper[lo][hi - lo - 1];
            *histogram.entry(rank).or_insert(0u64) += 1;
            pairs.push(ErrorEvent {
                transmitted: i,
                detected: j,
                rank,
                pep,
                xi,
            });
        }
    }
    let rank_min = histogram.keys().next().copied().unwrap_or(0);
    Ok(ErrorEventSpectrum {
        pairs,
        rank_min,
        histogram,
    })
}
