//! Block-fading Nakagami-m multipath links and the equivalent channel seen
//! through the RIS cyclic delays.
//!
//! Every tap is drawn from the Gaussian approximation of a complex
//! Nakagami-m gain: real and imaginary parts are independent normals with
//! means `μ_X = (1 - 1/m)^{1/4} √Ω cos φ`, `μ_Y` likewise with `sin φ`, and
//! variance `Ω_s / 2` where `Ω_s = Ω (1 - √(1 - 1/m))`. The same model backs
//! the analytic bounds in [`crate::analysis`].

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{PhaseModel, SystemConfig};
use crate::error::{invalid, Error, Result};
use crate::numerics::{C64, ZERO};

/// Nakagami-m tap: fading order `m` and spreading (mean power) `Ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NakagamiTap {
    m: u32,
    omega: f64,
}

impl NakagamiTap {
    pub fn new(m: u32, omega: f64) -> Result<Self> {
        if m < 1 {
            return Err(invalid("Nakagami order m must be ≥ 1"));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(invalid("Nakagami spreading Ω must be positive"));
        }
        Ok(NakagamiTap { m, omega })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    fn mean_share(&self) -> f64 {
        (1.0 - 1.0 / self.m as f64).sqrt()
    }

    /// Line-of-sight mean `μ_X + jμ_Y` at angle `phi`.
    pub fn mean(&self, phi: f64) -> C64 {
        C64::from_polar(self.mean_share().sqrt() * self.omega.sqrt(), phi)
    }

    /// Power of the diffuse part, `Ω_s`.
    pub fn scatter_power(&self) -> f64 {
        self.omega * (1.0 - self.mean_share())
    }
}

/// Exponentially decaying power-delay profile normalised to unit sum.
pub fn pdp_weights(taps: usize, decay: f64) -> Result<Vec<f64>> {
    if taps == 0 {
        return Err(invalid("a power-delay profile needs at least one tap"));
    }
    if !(decay >= 0.0) {
        return Err(invalid("PDP decay must be ≥ 0"));
    }
    let raw: Vec<f64> = (0..taps).map(|l| (-decay * l as f64).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Draws one complex tap gain.
pub fn sample_tap<R: Rng + ?Sized>(params: &NakagamiTap, phi: f64, rng: &mut R) -> C64 {
    let sigma = (params.scatter_power() / 2.0).sqrt();
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    params.mean(phi) + C64::new(sigma * z1, sigma * z2)
}

/// Per-tap statistics of one link after path loss, group gain and PDP.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkProfile {
    pub taps: Vec<NakagamiTap>,
}

impl LinkProfile {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

/// Builds the `R + 1` link profiles of a scenario, direct link first.
pub fn link_profiles(config: &SystemConfig) -> Result<Vec<LinkProfile>> {
    let orders = config.fading_orders();
    config
        .taps_per_link()
        .iter()
        .enumerate()
        .map(|(link, &taps)| {
            let gain = config.link_gain(link);
            let pdp = pdp_weights(taps, config.pdp_decay)?;
            let taps = pdp
                .iter()
                .zip(&orders[link])
                .map(|(w, &m)| NakagamiTap::new(m, gain * w))
                .collect::<Result<_>>()?;
            Ok(LinkProfile { taps })
        })
        .collect()
}

/// One block-fading draw of every link.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingRealization {
    pub links: Vec<Vec<C64>>,
    pub draw_id: u64,
}

impl FadingRealization {
    /// Core taps stacked in link order, `[g_0; g_1; …; g_R]`.
    pub fn stacked(&self) -> Vec<C64> {
        self.links.iter().flatten().copied().collect()
    }
}

/// Draws a realization from precomputed link profiles.
pub fn draw_links<R: Rng + ?Sized>(
    profiles: &[LinkProfile],
    phase_model: PhaseModel,
    draw_id: u64,
    rng: &mut R,
) -> FadingRealization {
    let common = rng.random_range(0.0..2.0 * PI);
    let links = profiles
        .iter()
        .map(|p| {
            p.taps
                .iter()
                .map(|tap| {
                    let phi = match phase_model {
                        PhaseModel::PerTap => rng.random_range(0.0..2.0 * PI),
                        PhaseModel::Common => common,
                    };
                    sample_tap(tap, phi, rng)
                })
                .collect()
        })
        .collect();
    FadingRealization { links, draw_id }
}

/// Draws every tap of every link for `config`.
pub fn generate_realization<R: Rng + ?Sized>(
    config: &SystemConfig,
    draw_id: u64,
    rng: &mut R,
) -> Result<FadingRealization> {
    let profiles = link_profiles(config)?;
    Ok(draw_links(&profiles, config.phase_model, draw_id, rng))
}

/// Length-`N` equivalent channel for one delay permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentCir {
    pub g_eq: Vec<C64>,
    /// Non-zero taps in link order.
    pub core: Vec<C64>,
    /// Position in `g_eq` of each entry of `core`.
    pub core_positions: Vec<usize>,
    pub permutation: Vec<usize>,
}

/// Identity delay permutation `[1, 2, …, R]`.
pub fn identity_permutation(groups: usize) -> Vec<usize> {
    (1..=groups).collect()
}

fn check_permutation(k: &[usize], groups: usize) -> Result<()> {
    if k.len() != groups {
        return Err(invalid(format!(
            "permutation has {} entries, expected {groups}",
            k.len()
        )));
    }
    let mut seen = vec![false; groups + 1];
    for &v in k {
        if v == 0 || v > groups || seen[v] {
            return Err(invalid(format!("{k:?} is not a permutation of 1..={groups}")));
        }
        seen[v] = true;
    }
    Ok(())
}

/// Positions of the core taps in `g_eq` when link `r` sits at `k_r Δ`.
pub fn core_positions(taps: &[usize], k: &[usize], delay_step: usize) -> Vec<usize> {
    taps.iter()
        .enumerate()
        .flat_map(|(link, &t)| {
            let offset = if link == 0 { 0 } else { k[link - 1] * delay_step };
            (0..t).map(move |l| offset + l)
        })
        .collect()
}

/// Places each link at offset `k_r Δ` of a length-`N` vector.
pub fn assemble_equivalent_cir(
    realization: &FadingRealization,
    k: &[usize],
    config: &SystemConfig,
) -> Result<EquivalentCir> {
    let n = config.block_len;
    let groups = config.groups;
    if realization.links.len() != groups + 1 {
        return Err(invalid("realization does not match the number of groups"));
    }
    check_permutation(k, groups)?;
    let taps: Vec<usize> = realization.links.iter().map(Vec::len).collect();
    let max_taps = taps.iter().copied().max().unwrap_or(0);
    if groups > 0 {
        let delay = config.delay_step;
        if delay < max_taps {
            return Err(Error::Config(format!(
                "L ≤ Δ violated: link with {max_taps} taps does not fit delay {delay}"
            )));
        }
        if delay > n / (groups + 1) {
            return Err(Error::Config(format!(
                "Δ ≤ ⌊N/(R+1)⌋ violated: {delay} > {}",
                n / (groups + 1)
            )));
        }
    } else if max_taps > n {
        return Err(Error::Config("direct link longer than the block".into()));
    }
    let positions = core_positions(&taps, k, config.delay_step);
    let core = realization.stacked();
    let mut g_eq = vec![ZERO; n];
    for (&p, &g) in positions.iter().zip(&core) {
        g_eq[p] = g;
    }
    Ok(EquivalentCir {
        g_eq,
        core,
        core_positions: positions,
        permutation: k.to_vec(),
    })
}

/// Index map `P` with `(P g)(i) = g(map[i])` turning the channel laid out for
/// permutation `from` into the one laid out for `to`.
pub fn permutation_map(
    from: &[usize],
    to: &[usize],
    block_len: usize,
    delay_step: usize,
) -> Result<Vec<usize>> {
    if from.len() != to.len() {
        return Err(invalid("permutations differ in length"));
    }
    check_permutation(from, from.len())?;
    check_permutation(to, to.len())?;
    if (from.len() + 1) * delay_step > block_len {
        return Err(invalid("delay blocks exceed the block length"));
    }
    let mut map: Vec<usize> = (0..block_len).collect();
    for (&src, &dst) in from.iter().zip(to) {
        for t in 0..delay_step {
            map[dst * delay_step + t] = src * delay_step + t;
        }
    }
    Ok(map)
}

/// Applies an index map from [`permutation_map`].
pub fn apply_permutation_map(map: &[usize], g: &[C64]) -> Vec<C64> {
    map.iter().map(|&i| g[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{LinkTaps, Scheme};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn labelled(links: &[usize]) -> FadingRealization {
        // Tap (link r, index l) carries the value 10 r + l + 1.
        FadingRealization {
            links: links
                .iter()
                .enumerate()
                .map(|(r, &t)| (0..t).map(|l| C64::new((10 * r + l + 1) as f64, 0.0)).collect())
                .collect(),
            draw_id: 0,
        }
    }

    fn reals(v: &[C64]) -> Vec<f64> {
        v.iter().map(|z| z.re).collect()
    }

    #[test]
    fn pdp_cases() {
        assert_eq!(pdp_weights(1, 3.0).unwrap(), vec![1.0]);
        let w = pdp_weights(2, 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert!((w[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((w[1] - e / (1.0 + e)).abs() < 1e-15);
        assert!((w[0] - 0.7311).abs() < 1e-4);
        let flat = pdp_weights(3, 0.0).unwrap();
        assert!(flat.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        assert!(pdp_weights(0, 1.0).is_err());
        let sum: f64 = pdp_weights(7, 0.3).unwrap().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tap_parameter_identity() {
        for m in [1, 2, 3, 10, 1000] {
            let tap = NakagamiTap::new(m, 2.5).unwrap();
            let mu = tap.mean(0.7);
            let total = mu.norm_sqr() + tap.scatter_power();
            assert!((total - 2.5).abs() < 1e-12);
        }
        let rayleigh = NakagamiTap::new(1, 1.0).unwrap();
        assert_eq!(rayleigh.mean(1.0), ZERO);
        assert!(NakagamiTap::new(0, 1.0).is_err());
        assert!(NakagamiTap::new(2, 0.0).is_err());
    }

    #[test]
    fn nakagami_moments() {
        let tap = NakagamiTap::new(2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let (mut m2, mut m4) = (0.0, 0.0);
        for _ in 0..n {
            let phi = rng.random_range(0.0..2.0 * PI);
            let p = sample_tap(&tap, phi, &mut rng).norm_sqr();
            m2 += p;
            m4 += p * p;
        }
        m2 /= n as f64;
        m4 /= n as f64;
        assert!((m2 - 1.0).abs() < 0.01, "E|g|² = {m2}");
        assert!((m4 - 1.5).abs() < 0.03, "E|g|⁴ = {m4}");
    }

    #[test]
    fn large_m_is_nearly_deterministic() {
        let tap = NakagamiTap::new(1_000_000, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let g = sample_tap(&tap, 0.0, &mut rng);
            assert!((g - C64::new(1.0, 0.0)).norm() < 0.01);
        }
    }

    #[test]
    fn realization_shapes_and_determinism() {
        let cfg = SystemConfig::default();
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        let ra = generate_realization(&cfg, 3, &mut a).unwrap();
        let rb = generate_realization(&cfg, 3, &mut b).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(ra.links.len(), 3);
        assert!(ra.links.iter().all(|l| l.len() == 2));

        let direct = SystemConfig {
            scheme: Scheme::Cpsc,
            groups: 0,
            ..Default::default()
        };
        let r = generate_realization(&direct, 0, &mut a).unwrap();
        assert_eq!(r.links.len(), 1);
    }

    #[test]
    fn equivalent_cir_layouts() {
        let cfg = SystemConfig::default();
        let real = labelled(&[2, 2, 2]);
        let id = assemble_equivalent_cir(&real, &[1, 2], &cfg).unwrap();
        assert_eq!(reals(&id.g_eq), vec![1.0, 2.0, 11.0, 12.0, 21.0, 22.0, 0.0, 0.0]);
        let sw = assemble_equivalent_cir(&real, &[2, 1], &cfg).unwrap();
        assert_eq!(reals(&sw.g_eq), vec![1.0, 2.0, 21.0, 22.0, 11.0, 12.0, 0.0, 0.0]);
        assert_eq!(reals(&sw.core), vec![1.0, 2.0, 11.0, 12.0, 21.0, 22.0]);
        assert_eq!(sw.core_positions, vec![0, 1, 4, 5, 2, 3]);

        let direct = SystemConfig {
            scheme: Scheme::Cpsc,
            groups: 0,
            ..Default::default()
        };
        let d = assemble_equivalent_cir(&labelled(&[2]), &[], &direct).unwrap();
        assert_eq!(reals(&d.g_eq), vec![1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn delay_violation_is_reported() {
        let cfg = SystemConfig {
            link_taps: LinkTaps::Uniform(3),
            cp_len: 3,
            delay_step: 2,
            ..Default::default()
        };
        let e = assemble_equivalent_cir(&labelled(&[3, 3, 3]), &[1, 2], &cfg).unwrap_err();
        assert!(e.to_string().contains("L ≤ Δ"));
        assert!(assemble_equivalent_cir(&labelled(&[2, 2, 2]), &[1, 1], &SystemConfig::default()).is_err());
    }

    #[test]
    fn permutation_maps_connect_layouts() {
        let cfg = SystemConfig {
            block_len: 16,
            groups: 3,
            ..Default::default()
        };
        let real = labelled(&[2, 2, 2, 2]);
        let perms = [[1, 2, 3], [1, 3, 2], [2, 1, 3], [2, 3, 1], [3, 1, 2], [3, 2, 1]];
        for a in &perms {
            let ga = assemble_equivalent_cir(&real, a, &cfg).unwrap();
            for b in &perms {
                let gb = assemble_equivalent_cir(&real, b, &cfg).unwrap();
                let map = permutation_map(a, b, 16, 2).unwrap();
                assert_eq!(apply_permutation_map(&map, &ga.g_eq), gb.g_eq);
            }
        }
    }
}
