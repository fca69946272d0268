use cpsc_ris::analysis::{unconditional_pep, TapStatistics};
use cpsc_ris::channel::{
    apply_permutation_map, assemble_equivalent_cir, generate_realization, permutation_map,
};
use cpsc_ris::config::DetectorKind;
use cpsc_ris::estimation::zadoff_chu_pilot;
use cpsc_ris::numerics::{cir, cyclic_shift, dft, hermitian_eig, idft, CMatrix};
use cpsc_ris::transceiver::{
    add_cp, psk_demodulate, psk_modulate, ris_phase_profile, PermutationCode,
};
use cpsc_ris::{SystemConfig, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn complex_vec(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
        .prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

proptest! {
    #[test]
    fn circulant_matches_dense_product_and_dft(g in complex_vec(1..=24), seed in any::<u64>()) {
        let n = g.len();
        let c = cir(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<C64> = (0..n)
            .map(|_| C64::new(rand::Rng::random_range(&mut rng, -1.0..1.0), 0.5))
            .collect();
        prop_assert!(close(&c.mul_vec(&x), &c.to_dense().mul_vec(&x), 1e-12));
        prop_assert!(close(&c.eigenvalues(), &dft(&g, false), 1e-10));
    }

    #[test]
    fn dft_round_trip(v in complex_vec(1..=40), unitary in any::<bool>()) {
        prop_assert!(close(&idft(&dft(&v, unitary), unitary), &v, 1e-12));
    }

    #[test]
    fn cyclic_shifts_compose(v in complex_vec(2..=20), a in 0usize..20, b in 0usize..20) {
        let n = v.len();
        let (a, b) = (a % n, b % n);
        let twice = cyclic_shift(&cyclic_shift(&v, a).unwrap(), b).unwrap();
        prop_assert_eq!(twice, cyclic_shift(&v, (a + b) % n).unwrap());
    }

    #[test]
    fn hermitian_eigenvalues_match_reference(v in complex_vec(1..=36)) {
        let n = (v.len() as f64).sqrt() as usize;
        let b = CMatrix::from_fn(n, n, |i, j| v[i * n + j]);
        let a = b.adjoint().matmul(&b);
        let ours = hermitian_eig(&a).unwrap();
        let reference = nalgebra::DMatrix::from_fn(n, n, |i, j| a.row(i)[j]);
        let mut theirs: Vec<f64> = reference.symmetric_eigenvalues().iter().copied().collect();
        theirs.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (x, y) in ours.values.iter().zip(&theirs) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
        prop_assert!(ours.reconstruct().max_abs_diff(&a) <= 1e-9 * (1.0 + a.max_abs()));
    }

    #[test]
    fn permutation_code_round_trip(groups in 1usize..=6, word in any::<u64>()) {
        let code = PermutationCode::new(groups).unwrap();
        let bits: Vec<u8> = (0..code.bits()).map(|i| ((word >> i) & 1) as u8).collect();
        let k = code.encode(&bits).unwrap();
        let mut sorted = k.clone();
        sorted.sort();
        prop_assert_eq!(sorted, (1..=groups).collect::<Vec<_>>());
        prop_assert_eq!(code.decode(&k).unwrap(), bits);
    }

    #[test]
    fn psk_round_trip(order_log in 1u32..=4, word in prop::collection::vec(0u8..2, 1..=64)) {
        let m = 1usize << order_log;
        let k = order_log as usize;
        let bits: Vec<u8> = word.iter().copied().take(word.len() / k * k).collect();
        prop_assume!(!bits.is_empty());
        let block = psk_modulate(&bits, m).unwrap();
        prop_assert!(block.symbols.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        prop_assert_eq!(psk_demodulate(&block.symbols, m).unwrap(), bits);
    }

    #[test]
    fn zadoff_chu_is_orthogonal(half in 1usize..=32, root in 1usize..64) {
        let n = 2 * half;
        let root = root % n;
        prop_assume!(root > 0 && gcd(root, n) == 1);
        let p = zadoff_chu_pilot(n, root as i64).unwrap();
        prop_assert!(p.is_orthogonal());
        prop_assert!(p.spectrum().iter().all(|&s| (s - n as f64).abs() < 1e-9));
    }

    #[test]
    fn phase_profiles_stay_on_the_psk_grid(order_log in 1u32..=3, seed in any::<u64>()) {
        let m = 1usize << order_log;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<u8> = (0..8 * order_log as usize)
            .map(|_| rand::Rng::random_range(&mut rng, 0..2u8))
            .collect();
        let x = psk_modulate(&bits, m).unwrap().symbols;
        let profile = ris_phase_profile(&add_cp(&x, 2).unwrap(), 2, &[2, 4, 6]).unwrap();
        prop_assert!(profile.on_grid(m, 1e-9));
    }

    #[test]
    fn permutation_map_relayouts_the_channel(seed in any::<u64>(), flip in any::<bool>()) {
        let cfg = SystemConfig { groups: 3, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let real = generate_realization(&cfg, 0, &mut rng).unwrap();
        let from = vec![1, 2, 3];
        let to = if flip { vec![3, 1, 2] } else { vec![2, 3, 1] };
        let g_from = assemble_equivalent_cir(&real, &from, &cfg).unwrap().g_eq;
        let g_to = assemble_equivalent_cir(&real, &to, &cfg).unwrap().g_eq;
        let map = permutation_map(&from, &to, cfg.block_len, cfg.delay_step).unwrap();
        prop_assert_eq!(apply_permutation_map(&map, &g_from), g_to);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairwise_error_probability_is_symmetric(a in 0u32..16, b in 0u32..16, snr in 10.0..50.0f64) {
        prop_assume!(a != b);
        let cfg = SystemConfig {
            block_len: 4,
            groups: 1,
            detectors: vec![DetectorKind::Ml],
            ..Default::default()
        };
        let stats = TapStatistics::from_config(&cfg).unwrap();
        let word = |w: u32| -> Vec<C64> {
            (0..4).map(|i| if (w >> i) & 1 == 1 { C64::new(-1.0, 0.0) } else { C64::new(1.0, 0.0) }).collect()
        };
        let n0 = cfg.noise_power(snr);
        let forward = unconditional_pep(&word(a), &word(b), &stats, n0).unwrap();
        let backward = unconditional_pep(&word(b), &word(a), &stats, n0).unwrap();
        prop_assert!((forward - backward).abs() <= 1e-12 * forward.max(1e-300));
        prop_assert!(forward > 0.0 && forward <= 1.0);
    }
}
