//! Builds the equivalent channel of a two-group surface and checks that the
//! physical path (CP, per-group phase profiles, per-link convolution) lands
//! on the same received block as the circulant shortcut.

use cpsc_ris::channel::{assemble_equivalent_cir, generate_realization, identity_permutation};
use cpsc_ris::transceiver::{
    add_cp, group_delays, propagate_links, psk_modulate, ris_phase_profile, synthesize_received,
};
use cpsc_ris::SystemConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cpsc_ris::Result<()> {
    let cfg = SystemConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    let real = generate_realization(&cfg, 0, &mut rng)?;
    let k = identity_permutation(cfg.groups);
    let cir = assemble_equivalent_cir(&real, &k, &cfg)?;
    println!("core taps sit at {:?} of g_eq", cir.core_positions);
    for (i, g) in cir.g_eq.iter().enumerate() {
        println!("  g_eq[{i}] = {:+.3e} {:+.3e}j", g.re, g.im);
    }

    let bits: Vec<u8> = (0..cfg.block_len).map(|_| rng.random_range(0..2u8)).collect();
    let x = psk_modulate(&bits, cfg.psk_order)?.symbols;
    let delays = group_delays(&k, cfg.delay_step);
    let profile = ris_phase_profile(&add_cp(&x, cfg.cp_len)?, cfg.cp_len, &delays)?;
    for (r, phases) in profile.per_group.iter().enumerate() {
        let deg: Vec<i64> = phases.iter().map(|t| t.to_degrees().round() as i64).collect();
        println!("group {} phases (deg): {deg:?}", r + 1);
    }

    let physical = propagate_links(&x, &real, &delays, cfg.cp_len)?;
    let shortcut = synthesize_received(&x, &cir.g_eq, 0.0, &mut rng)?;
    let gap = physical
        .iter()
        .zip(&shortcut)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("max |physical - cir(x) g_eq| = {gap:.2e}");
    Ok(())
}
