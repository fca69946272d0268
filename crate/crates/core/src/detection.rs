//! Receivers: exhaustive ML, one-tap frequency-domain ZF/MMSE, and the two
//! index-modulation detectors (joint ML and the per-permutation
//! low-complexity search).
//!
//! All searches visit candidates in a fixed order and keep the first
//! minimiser, so results never depend on scheduling.

use std::f64::consts::PI;

use crate::channel::{
    apply_permutation_map, assemble_equivalent_cir, identity_permutation, permutation_map,
    FadingRealization,
};
use crate::config::{DetectorKind, EqualizerMode, SystemConfig};
use crate::error::{invalid, Error, Result};
use crate::numerics::{cir, dft, idft, C64, ZERO};
use crate::transceiver::{
    apply_anchor, index_bits, psk_point, slice_index, strip_anchor, PermutationCode, SymbolBlock,
};

/// Largest exhaustive search (candidate count) a detector will attempt.
pub const SEARCH_LIMIT: u128 = 1 << 20;

/// Below this magnitude a ZF frequency bin counts as a deep fade.
const ZF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Detected data symbols (anchor removed) with the detected bits; for IM
    /// the index bits come first.
    pub x_hat: SymbolBlock,
    /// Constellation index of every detected symbol.
    pub symbol_indices: Vec<usize>,
    pub k_hat: Option<Vec<usize>>,
    /// Table position of `k_hat`.
    pub k_index: Option<usize>,
    pub metric: f64,
    pub detector: DetectorKind,
    /// Candidates scored by the search.
    pub candidates: u64,
}

fn search_size(m: usize, n: usize, extra: usize) -> Result<u128> {
    let mut total = extra as u128;
    for _ in 0..n {
        total = total.saturating_mul(m as u128);
        if total > SEARCH_LIMIT {
            return Err(Error::Capacity {
                what: "exhaustive detection",
                required: (m as f64).powi(n as i32) as u128 * extra as u128,
                limit: SEARCH_LIMIT,
                advice: "use a shorter block, a smaller constellation, or a linear detector",
            });
        }
    }
    Ok(total)
}

fn bits_per_symbol(m: usize) -> Result<usize> {
    if m < 2 || !m.is_power_of_two() {
        return Err(invalid(format!("PSK order {m} is not a power of two ≥ 2")));
    }
    Ok(m.trailing_zeros() as usize)
}

fn block_from_indices(
    indices: &[usize],
    m: usize,
    prefix_bits: Vec<u8>,
    k: Option<Vec<usize>>,
) -> SymbolBlock {
    let k_bits = m.trailing_zeros() as usize;
    let mut bits = prefix_bits;
    for &d in indices {
        index_bits(d, k_bits, &mut bits);
    }
    SymbolBlock {
        symbols: indices.iter().map(|&d| psk_point(d, m)).collect(),
        source_bits: bits,
        im_permutation: k,
        anchor_applied: false,
    }
}

/// `‖y − cir(x) g‖²`.
pub fn residual_energy(y: &[C64], x: &[C64], g: &[C64]) -> Result<f64> {
    if y.len() != x.len() || x.len() != g.len() {
        return Err(invalid("block, channel and observation lengths differ"));
    }
    let fit = cir(g)?.mul_vec(x);
    Ok(y.iter().zip(&fit).map(|(a, b)| (a - b).norm_sqr()).sum())
}

/// Depth-first exhaustive search over `M^N` blocks for one channel.
///
/// `columns[j]` is the contribution of a unit symbol at position `j`
/// (column `j` of `cir(g)`), with the anchor rotation already folded into
/// column 0 where needed. Candidates are visited in lexicographic order of
/// their constellation indices, first position most significant.
struct BlockSearch<'a> {
    y: &'a [C64],
    columns: Vec<Vec<C64>>,
    points: Vec<C64>,
    best: f64,
    best_indices: Vec<usize>,
    current: Vec<usize>,
    count: u64,
}

impl<'a> BlockSearch<'a> {
    fn new(y: &'a [C64], g: &[C64], m: usize, anchor: bool) -> Result<Self> {
        let n = y.len();
        let circ = cir(g)?;
        let mut columns: Vec<Vec<C64>> = (0..n).map(|j| circ.column(j)).collect();
        if anchor {
            let rot = C64::from_polar(1.0, PI / m as f64);
            for v in &mut columns[0] {
                *v *= rot;
            }
        }
        Ok(BlockSearch {
            y,
            columns,
            points: (0..m).map(|d| psk_point(d, m)).collect(),
            best: f64::INFINITY,
            best_indices: vec![0; n],
            current: vec![0; n],
            count: 0,
        })
    }

    fn run(&mut self) {
        let acc = vec![ZERO; self.y.len()];
        self.descend(0, &acc);
    }

    fn descend(&mut self, depth: usize, acc: &[C64]) {
        let n = self.y.len();
        let mut next = vec![ZERO; n];
        for d in 0..self.points.len() {
            let s = self.points[d];
            self.current[depth] = d;
            for ((o, a), c) in next.iter_mut().zip(acc).zip(&self.columns[depth]) {
                *o = a + c * s;
            }
            if depth + 1 == n {
                self.count += 1;
                let metric: f64 = self
                    .y
                    .iter()
                    .zip(&next)
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum();
                if metric < self.best {
                    self.best = metric;
                    self.best_indices.copy_from_slice(&self.current);
                }
            } else {
                self.descend(depth + 1, &next);
            }
        }
    }
}

/// `arg min_x ‖y − cir(x) g‖²` over every M-PSK block.
pub fn ml_detect(y: &[C64], g: &[C64], m: usize) -> Result<DetectionResult> {
    bits_per_symbol(m)?;
    if y.len() != g.len() || y.is_empty() {
        return Err(invalid("observation and channel lengths differ"));
    }
    search_size(m, y.len(), 1)?;
    let mut search = BlockSearch::new(y, g, m, false)?;
    search.run();
    Ok(DetectionResult {
        x_hat: block_from_indices(&search.best_indices, m, Vec::new(), None),
        symbol_indices: search.best_indices,
        k_hat: None,
        k_index: None,
        metric: search.best,
        detector: DetectorKind::Ml,
        candidates: search.count,
    })
}

/// Soft output of the one-tap equalizer, before slicing.
pub fn equalize(y: &[C64], g: &[C64], n0: f64, mode: EqualizerMode) -> Result<Vec<C64>> {
    if y.len() != g.len() || y.is_empty() {
        return Err(invalid("observation and channel lengths differ"));
    }
    let lambda = dft(g, false);
    let yf = dft(y, true);
    let reg = match mode {
        EqualizerMode::Zf => 0.0,
        EqualizerMode::Mmse => n0,
    };
    let mut xf = Vec::with_capacity(y.len());
    for (k, (l, v)) in lambda.iter().zip(&yf).enumerate() {
        let p = l.norm_sqr();
        let denom = p + reg;
        if mode == EqualizerMode::Zf && l.norm() < ZF_FLOOR || denom == 0.0 {
            return Err(Error::Singular(format!("channel frequency bin {k} is in a deep fade")));
        }
        xf.push(l.conj() / denom * v);
    }
    Ok(idft(&xf, true))
}

/// Frequency-domain ZF/MMSE equalization followed by per-symbol slicing.
pub fn fd_equalize(
    y: &[C64],
    g: &[C64],
    n0: f64,
    mode: EqualizerMode,
    m: usize,
) -> Result<DetectionResult> {
    bits_per_symbol(m)?;
    let soft = equalize(y, g, n0, mode)?;
    let indices: Vec<usize> = soft.iter().map(|&z| slice_index(z, m)).collect();
    let x_hat = block_from_indices(&indices, m, Vec::new(), None);
    let metric = residual_energy(y, &x_hat.symbols, g)?;
    Ok(DetectionResult {
        x_hat,
        symbol_indices: indices,
        k_hat: None,
        k_index: None,
        metric,
        detector: match mode {
            EqualizerMode::Zf => DetectorKind::Zf,
            EqualizerMode::Mmse => DetectorKind::Mmse,
        },
        candidates: 1,
    })
}

/// The equivalent channel under every permutation of the index-modulation
/// table.
#[derive(Debug, Clone, PartialEq)]
pub struct ImHypotheses {
    pub code: PermutationCode,
    /// `channels[i]` is the channel seen when table entry `i` is active.
    pub channels: Vec<Vec<C64>>,
    /// Whether transmitted blocks carry the anchor rotation.
    pub anchor: bool,
    pub psk_order: usize,
}

/// The anchor is only needed when more than one permutation is in use.
pub fn anchor_in_use(code: &PermutationCode) -> bool {
    code.len() > 1
}

impl ImHypotheses {
    /// Hypotheses built from the true fading realization.
    pub fn from_realization(realization: &FadingRealization, config: &SystemConfig) -> Result<Self> {
        let code = PermutationCode::new(config.groups)?;
        let channels = code
            .table()
            .iter()
            .map(|k| assemble_equivalent_cir(realization, k, config).map(|c| c.g_eq))
            .collect::<Result<_>>()?;
        Ok(ImHypotheses {
            anchor: anchor_in_use(&code),
            code,
            channels,
            psk_order: config.psk_order,
        })
    }

    /// Hypotheses derived from a channel estimated while the identity
    /// permutation was active.
    pub fn from_estimate(g_identity: &[C64], config: &SystemConfig) -> Result<Self> {
        let code = PermutationCode::new(config.groups)?;
        let id = identity_permutation(config.groups);
        let channels = code
            .table()
            .iter()
            .map(|k| {
                let map = permutation_map(&id, k, config.block_len, config.delay_step)?;
                Ok(apply_permutation_map(&map, g_identity))
            })
            .collect::<Result<_>>()?;
        Ok(ImHypotheses {
            anchor: anchor_in_use(&code),
            code,
            channels,
            psk_order: config.psk_order,
        })
    }

    fn result(
        &self,
        k_index: usize,
        indices: Vec<usize>,
        metric: f64,
        detector: DetectorKind,
        candidates: u64,
    ) -> DetectionResult {
        let k = self.code.permutation(k_index);
        let x_hat = block_from_indices(
            &indices,
            self.psk_order,
            self.code.bits_of_index(k_index),
            Some(k.clone()),
        );
        DetectionResult {
            x_hat,
            symbol_indices: indices,
            k_hat: Some(k),
            k_index: Some(k_index),
            metric,
            detector,
            candidates,
        }
    }
}

/// Joint ML over every table permutation and every data block.
pub fn im_ml_detect(y: &[C64], hyp: &ImHypotheses) -> Result<DetectionResult> {
    let m = hyp.psk_order;
    bits_per_symbol(m)?;
    search_size(m, y.len(), hyp.channels.len())?;
    let mut best: Option<(usize, Vec<usize>, f64)> = None;
    let mut count = 0;
    for (i, g) in hyp.channels.iter().enumerate() {
        if g.len() != y.len() {
            return Err(invalid("observation and channel lengths differ"));
        }
        let mut search = BlockSearch::new(y, g, m, hyp.anchor)?;
        search.run();
        count += search.count;
        if best.as_ref().is_none_or(|b| search.best < b.2) {
            best = Some((i, search.best_indices, search.best));
        }
    }
    let (i, indices, metric) = best.ok_or_else(|| invalid("empty permutation table"))?;
    Ok(hyp.result(i, indices, metric, DetectorKind::ImMl, count))
}

/// Per-permutation equalize-and-slice, keeping the permutation with the
/// smallest reconstruction error `‖y − cir(x̃) g_k‖²`.
pub fn im_low_complexity_detect(
    y: &[C64],
    hyp: &ImHypotheses,
    n0: f64,
    mode: EqualizerMode,
) -> Result<DetectionResult> {
    let m = hyp.psk_order;
    bits_per_symbol(m)?;
    let mut best: Option<(usize, Vec<usize>, f64)> = None;
    for (i, g) in hyp.channels.iter().enumerate() {
        let mut soft = equalize(y, g, n0, mode)?;
        if hyp.anchor {
            soft = strip_anchor(&soft, m);
        }
        let indices: Vec<usize> = soft.iter().map(|&z| slice_index(z, m)).collect();
        let mut x: Vec<C64> = indices.iter().map(|&d| psk_point(d, m)).collect();
        if hyp.anchor {
            x = apply_anchor(&x, m);
        }
        let metric = residual_energy(y, &x, g)?;
        if best.as_ref().is_none_or(|b| metric < b.2) {
            best = Some((i, indices, metric));
        }
    }
    let (i, indices, metric) = best.ok_or_else(|| invalid("empty permutation table"))?;
    Ok(hyp.result(i, indices, metric, DetectorKind::ImLc, hyp.channels.len() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_realization;
    use crate::config::{LinkTaps, Scheme};
    use crate::transceiver::{awgn, psk_modulate, synthesize_received};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_block(rng: &mut impl Rng, n: usize, m: usize) -> SymbolBlock {
        let k = m.trailing_zeros() as usize;
        let bits: Vec<u8> = (0..n * k).map(|_| rng.random_range(0..2u8)).collect();
        psk_modulate(&bits, m).unwrap()
    }

    fn im_config(groups: usize, n: usize) -> SystemConfig {
        SystemConfig {
            scheme: Scheme::CpscRisIm,
            block_len: n,
            groups,
            detectors: vec![DetectorKind::ImMl, DetectorKind::ImLc],
            ..Default::default()
        }
    }

    #[test]
    fn ml_noiseless_recovery_and_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in [2usize, 4] {
            let n = if m == 2 { 8 } else { 5 };
            for _ in 0..5 {
                let x = random_block(&mut rng, n, m);
                let g = awgn(n, 1.0, &mut rng);
                let y = synthesize_received(&x.symbols, &g, 0.0, &mut rng).unwrap();
                let r = ml_detect(&y, &g, m).unwrap();
                assert_eq!(r.x_hat.source_bits, x.source_bits);
                assert_eq!(r.candidates, (m as u64).pow(n as u32));
                assert!(r.metric < 1e-20);
            }
        }
    }

    #[test]
    fn ml_matches_hand_enumeration() {
        // N = 2, BPSK: four candidates scored by hand.
        let g = [C64::new(1.0, 0.0), C64::new(0.5, 0.0)];
        let y = [C64::new(0.2, 0.1), C64::new(-1.4, 0.0)];
        let cands = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
        let scores: Vec<f64> = cands
            .iter()
            .map(|c| {
                // cir(x) g for N = 2: [x0 g0 + x1 g1, x1 g0 + x0 g1].
                let f0 = c[0] * 1.0 + c[1] * 0.5;
                let f1 = c[1] * 1.0 + c[0] * 0.5;
                (y[0] - C64::new(f0, 0.0)).norm_sqr() + (y[1] - C64::new(f1, 0.0)).norm_sqr()
            })
            .collect();
        let best = (0..4)
            .min_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap())
            .unwrap();
        let r = ml_detect(&y, &g, 2).unwrap();
        let idx = r.symbol_indices[0] * 2 + r.symbol_indices[1];
        assert_eq!(idx, best);
        assert!((r.metric - scores[best]).abs() < 1e-12);
    }

    #[test]
    fn ml_ties_pick_first_candidate() {
        let y = vec![ZERO; 3];
        let g = vec![ZERO; 3];
        let r = ml_detect(&y, &g, 2).unwrap();
        assert_eq!(r.symbol_indices, vec![0, 0, 0]);
    }

    #[test]
    fn ml_capacity_guard() {
        let y = vec![ZERO; 21];
        assert!(matches!(ml_detect(&y, &y, 2), Err(Error::Capacity { .. })));
        let y = vec![ZERO; 11];
        assert!(matches!(ml_detect(&y, &y, 4), Err(Error::Capacity { .. })));
    }

    #[test]
    fn flat_channel_equalizer_is_a_slicer() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 8;
        let x = random_block(&mut rng, n, 4);
        let mut g = vec![ZERO; n];
        g[0] = C64::new(1.0, 0.0);
        let y = synthesize_received(&x.symbols, &g, 0.5, &mut rng).unwrap();
        let r = fd_equalize(&y, &g, 0.5, EqualizerMode::Zf, 4).unwrap();
        let direct: Vec<usize> = y.iter().map(|&z| slice_index(z, 4)).collect();
        assert_eq!(r.symbol_indices, direct);
    }

    #[test]
    fn zf_inverts_noiseless_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 16;
        for _ in 0..10 {
            let x = random_block(&mut rng, n, 8);
            let g = awgn(n, 1.0, &mut rng);
            let y = synthesize_received(&x.symbols, &g, 0.0, &mut rng).unwrap();
            let zf = equalize(&y, &g, 0.0, EqualizerMode::Zf).unwrap();
            let mmse = equalize(&y, &g, 0.0, EqualizerMode::Mmse).unwrap();
            // Dense-solve oracle.
            let dense = cir(&g).unwrap().to_dense().inverse().unwrap().mul_vec(&y);
            for ((a, b), c) in zf.iter().zip(&mmse).zip(&dense) {
                assert!((a - b).norm() < 1e-10);
                assert!((a - c).norm() < 1e-9);
            }
            let r = fd_equalize(&y, &g, 0.0, EqualizerMode::Zf, 8).unwrap();
            assert_eq!(r.x_hat.source_bits, x.source_bits);
        }
    }

    #[test]
    fn zf_deep_fade_is_singular() {
        // g = [1, 1]: λ(1) = 0.
        let g = [C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        let y = [ZERO; 2];
        assert!(matches!(
            fd_equalize(&y, &g, 0.1, EqualizerMode::Zf, 2),
            Err(Error::Singular(_))
        ));
        assert!(fd_equalize(&y, &g, 0.1, EqualizerMode::Mmse, 2).is_ok());
    }

    fn transmit_im(
        rng: &mut ChaCha8Rng,
        hyp: &ImHypotheses,
        n: usize,
        m: usize,
        n0: f64,
    ) -> (usize, SymbolBlock, Vec<C64>) {
        let x = random_block(rng, n, m);
        let i = rng.random_range(0..hyp.code.len());
        let tx = if hyp.anchor {
            apply_anchor(&x.symbols, m)
        } else {
            x.symbols.clone()
        };
        let y = synthesize_received(&tx, &hyp.channels[i], n0, rng).unwrap();
        (i, x, y)
    }

    #[test]
    fn im_detectors_noiseless() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for groups in 1..=3 {
            let config = SystemConfig {
                delay_step: 2,
                ..im_config(groups, 8)
            };
            for _ in 0..20 {
                let real = generate_realization(&config, 0, &mut rng).unwrap();
                let hyp = ImHypotheses::from_realization(&real, &config).unwrap();
                let (i, x, y) = transmit_im(&mut rng, &hyp, 8, 2, 0.0);
                let ml = im_ml_detect(&y, &hyp).unwrap();
                let lc = im_low_complexity_detect(&y, &hyp, 0.0, EqualizerMode::Mmse).unwrap();
                assert_eq!(ml.k_index, Some(i));
                assert_eq!(ml.symbol_indices, lc.symbol_indices);
                assert_eq!(ml.k_index, lc.k_index);
                assert_eq!(ml.candidates, (hyp.code.len() as u64) << 8);
                let mut bits = hyp.code.bits_of_index(i);
                bits.extend_from_slice(&x.source_bits);
                assert_eq!(ml.x_hat.source_bits, bits);
            }
        }
    }

    #[test]
    fn single_permutation_lc_is_mmse() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let config = im_config(1, 8);
        let real = generate_realization(&config, 0, &mut rng).unwrap();
        let hyp = ImHypotheses::from_realization(&real, &config).unwrap();
        assert!(!hyp.anchor);
        for _ in 0..20 {
            let (_, _, y) = transmit_im(&mut rng, &hyp, 8, 2, 1e-7);
            let lc = im_low_complexity_detect(&y, &hyp, 1e-7, EqualizerMode::Mmse).unwrap();
            let mmse = fd_equalize(&y, &hyp.channels[0], 1e-7, EqualizerMode::Mmse, 2).unwrap();
            assert_eq!(lc.symbol_indices, mmse.symbol_indices);
        }
    }

    #[test]
    fn anchor_resolves_permutation_ambiguity() {
        // Constant block: without the anchor, swapping the delays of two
        // equal-energy groups gives identical observations.
        let config = SystemConfig {
            link_taps: LinkTaps::Uniform(1),
            cp_len: 1,
            delay_step: 2,
            ..im_config(2, 8)
        };
        let real = FadingRealization {
            links: vec![
                vec![C64::new(1.0, 0.0)],
                vec![C64::new(0.3, 0.2)],
                vec![C64::new(-0.4, 0.1)],
            ],
            draw_id: 0,
        };
        let mut hyp = ImHypotheses::from_realization(&real, &config).unwrap();
        let x = vec![C64::new(1.0, 0.0); 8];
        let plain: Vec<Vec<C64>> = hyp
            .channels
            .iter()
            .map(|g| cir(g).unwrap().mul_vec(&x))
            .collect();
        assert!(plain[0].iter().zip(&plain[1]).all(|(a, b)| (a - b).norm() < 1e-12));

        let xt = apply_anchor(&x, 2);
        let y = cir(&hyp.channels[1]).unwrap().mul_vec(&xt);
        let gap = residual_energy(&y, &xt, &hyp.channels[0]).unwrap();
        assert!(gap > 1e-3);
        let r = im_ml_detect(&y, &hyp).unwrap();
        assert_eq!(r.k_index, Some(1));

        // Without the anchor both permutations fit the constant block.
        hyp.anchor = false;
        let y = cir(&hyp.channels[1]).unwrap().mul_vec(&x);
        assert!(residual_energy(&y, &x, &hyp.channels[0]).unwrap() < 1e-20);
        assert!(im_ml_detect(&y, &hyp).unwrap().metric < 1e-20);
    }

    #[test]
    fn im_ml_matches_naive_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let config = SystemConfig {
            link_taps: LinkTaps::Uniform(1),
            cp_len: 1,
            delay_step: 1,
            ..im_config(2, 4)
        };
        for _ in 0..10 {
            let real = generate_realization(&config, 0, &mut rng).unwrap();
            let hyp = ImHypotheses::from_realization(&real, &config).unwrap();
            let y = awgn(4, 1.0, &mut rng);
            let mut naive = Vec::new();
            for (i, g) in hyp.channels.iter().enumerate() {
                for c in 0..16usize {
                    let x: Vec<C64> = (0..4)
                        .map(|p| if (c >> (3 - p)) & 1 == 0 { C64::new(1.0, 0.0) } else { C64::new(-1.0, 0.0) })
                        .collect();
                    let mut xt = x.clone();
                    xt[0] *= C64::new(0.0, 1.0);
                    let mut fit = vec![ZERO; 4];
                    for (r, f) in fit.iter_mut().enumerate() {
                        for (j, xj) in xt.iter().enumerate() {
                            *f += g[(r + 4 - j) % 4] * xj;
                        }
                    }
                    let d: f64 = y.iter().zip(&fit).map(|(a, b)| (a - b).norm_sqr()).sum();
                    naive.push((d, i, c));
                }
            }
            let best = naive
                .iter()
                .fold(naive[0], |b, &v| if v.0 < b.0 { v } else { b });
            let r = im_ml_detect(&y, &hyp).unwrap();
            let c = r.symbol_indices.iter().fold(0, |acc, &d| acc * 2 + d);
            assert_eq!((r.k_index.unwrap(), c), (best.1, best.2));
            assert!((r.metric - best.0).abs() < 1e-12);
        }
    }

    #[test]
    fn estimate_hypotheses_match_true_layouts() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let config = SystemConfig {
            delay_step: 2,
            ..im_config(3, 16)
        };
        let real = generate_realization(&config, 0, &mut rng).unwrap();
        let truth = ImHypotheses::from_realization(&real, &config).unwrap();
        let from_est = ImHypotheses::from_estimate(&truth.channels[0], &config).unwrap();
        assert_eq!(truth, from_est);
    }
}
