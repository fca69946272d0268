//! One noisy block through ML, MMSE and ZF detection.

use cpsc_ris::channel::{assemble_equivalent_cir, generate_realization, identity_permutation};
use cpsc_ris::config::EqualizerMode;
use cpsc_ris::detection::{fd_equalize, ml_detect};
use cpsc_ris::transceiver::{psk_modulate, synthesize_received};
use cpsc_ris::SystemConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cpsc_ris::Result<()> {
    let cfg = SystemConfig::default();
    let n0 = cfg.noise_power(35.0);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut errors = [0usize; 3];
    let blocks = 2000;
    for t in 0..blocks {
        let real = generate_realization(&cfg, t, &mut rng)?;
        let g = assemble_equivalent_cir(&real, &identity_permutation(cfg.groups), &cfg)?.g_eq;
        let bits: Vec<u8> = (0..cfg.bits_per_block()).map(|_| rng.random_range(0..2u8)).collect();
        let x = psk_modulate(&bits, cfg.psk_order)?;
        let y = synthesize_received(&x.symbols, &g, n0, &mut rng)?;
        let guesses = [
            ml_detect(&y, &g, cfg.psk_order)?,
            fd_equalize(&y, &g, n0, EqualizerMode::Mmse, cfg.psk_order)?,
            fd_equalize(&y, &g, n0, EqualizerMode::Zf, cfg.psk_order)?,
        ];
        for (e, d) in errors.iter_mut().zip(&guesses) {
            *e += d.x_hat.source_bits.iter().zip(&bits).filter(|(a, b)| a != b).count();
        }
    }
    let total = (blocks as usize * cfg.bits_per_block()) as f64;
    for (name, e) in ["ml", "mmse", "zf"].iter().zip(errors) {
        println!("{name:>4}: BER {:.3e} at 35 dB", e as f64 / total);
    }
    Ok(())
}
