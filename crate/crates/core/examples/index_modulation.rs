//! Index bits carried by the order of the cyclic delays: permutation table,
//! the anchor rotation, and both IM detectors on a noisy block.

use cpsc_ris::channel::{assemble_equivalent_cir, generate_realization};
use cpsc_ris::config::{DetectorKind, Scheme};
use cpsc_ris::detection::{im_low_complexity_detect, im_ml_detect, ImHypotheses};
use cpsc_ris::transceiver::{apply_anchor, psk_modulate, spectral_efficiency, synthesize_received, PermutationCode};
use cpsc_ris::SystemConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cpsc_ris::Result<()> {
    let table = PermutationCode::new(3)?;
    println!("R = 3 uses {} of 6 delay orders:", table.len());
    for i in 0..table.len() {
        println!("  bits {:?} -> k = {:?}", table.bits_of_index(i), table.permutation(i));
    }

    let cfg = SystemConfig {
        scheme: Scheme::CpscRisIm,
        detectors: vec![DetectorKind::ImMl, DetectorKind::ImLc],
        ..Default::default()
    };
    println!(
        "spectral efficiency {:.3} bps/Hz (without index bits {:.3})",
        spectral_efficiency(&cfg, true),
        spectral_efficiency(&cfg, false)
    );

    let code = PermutationCode::new(cfg.groups)?;
    let n0 = cfg.noise_power(40.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let real = generate_realization(&cfg, 0, &mut rng)?;
    let bits: Vec<u8> = (0..cfg.bits_per_block()).map(|_| rng.random_range(0..2u8)).collect();
    let ib = cfg.index_bits();
    let k = code.encode(&bits[..ib])?;
    let x = apply_anchor(&psk_modulate(&bits[ib..], cfg.psk_order)?.symbols, cfg.psk_order);
    let g = assemble_equivalent_cir(&real, &k, &cfg)?.g_eq;
    let y = synthesize_received(&x, &g, n0, &mut rng)?;

    let hyp = ImHypotheses::from_realization(&real, &cfg)?;
    let ml = im_ml_detect(&y, &hyp)?;
    let lc = im_low_complexity_detect(&y, &hyp, n0, cfg.im_equalizer)?;
    println!("sent k = {k:?}, bits {bits:?}");
    for d in [&ml, &lc] {
        println!(
            "{:>6}: k = {:?}, bits {:?}, {} candidates",
            d.detector.name(),
            d.k_hat.as_ref().unwrap(),
            d.x_hat.source_bits,
            d.candidates
        );
    }
    Ok(())
}
