//! Single-block least-squares estimation of the equivalent channel.
//!
//! With a Zadoff-Chu pilot the pilot matrix satisfies `X_pᴴX_p = N·I`, so the
//! LS estimate is just a scaled circular correlation and its total error is
//! exactly `N0`, the smallest achievable by any unit-modulus pilot.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::numerics::{cir, dft, idft, C64, ZERO};
use crate::transceiver::psk_point;

/// Spectral bins below this (relative to `N²`) are treated as zero.
const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PilotBlock {
    pub symbols: Vec<C64>,
    /// Zadoff-Chu root, `None` for other pilots.
    pub root: Option<i64>,
}

impl PilotBlock {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// `d_p(k)`: eigenvalues of `X_pᴴX_p`, obtained as the DFT of the
    /// periodic autocorrelation.
    pub fn spectrum(&self) -> Vec<f64> {
        dft(&autocorrelation(&self.symbols), false)
            .iter()
            .map(|z| z.re)
            .collect()
    }

    /// True when the periodic autocorrelation vanishes off zero lag.
    pub fn is_orthogonal(&self) -> bool {
        let n = self.len() as f64;
        autocorrelation(&self.symbols)
            .iter()
            .skip(1)
            .all(|z| z.norm() <= 1e-10 * n)
    }
}

/// Periodic autocorrelation `x_pp(k) = Σ_n x(n+k) x*(n)`; `x_pp(0) = ‖x‖²`.
pub fn autocorrelation(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    (0..n)
        .map(|k| (0..n).map(|i| x[(i + k) % n] * x[i].conj()).sum())
        .collect()
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `x_p(n) = exp(jϖπn²/N)` for `n = 0 … N−1`.
pub fn zadoff_chu_pilot(n: usize, root: i64) -> Result<PilotBlock> {
    if n == 0 || n % 2 == 1 {
        return Err(invalid(format!("Zadoff-Chu pilots need an even length, got {n}")));
    }
    if gcd(root.unsigned_abs(), n as u64) != 1 {
        return Err(invalid(format!("root {root} is not coprime with {n}")));
    }
    // Reduce ϖn² modulo 2N before scaling to keep the phase accurate.
    let period = 2 * n as i128;
    let symbols = (0..n as i128)
        .map(|k| {
            let e = (root as i128 * k * k).rem_euclid(period);
            C64::from_polar(1.0, PI * e as f64 / n as f64)
        })
        .collect();
    Ok(PilotBlock {
        symbols,
        root: Some(root),
    })
}

/// A random M-PSK pilot (generally not orthogonal).
pub fn random_psk_pilot<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<PilotBlock> {
    if n == 0 {
        return Err(invalid("pilot length must be positive"));
    }
    if m < 2 {
        return Err(invalid("pilot alphabet needs at least two points"));
    }
    Ok(PilotBlock {
        symbols: (0..n).map(|_| psk_point(rng.random_range(0..m), m)).collect(),
        root: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub g_hat: Vec<C64>,
    /// Per-entry error variance `σ_e²`.
    pub error_variance: f64,
}

/// LS estimate `ĝ = X_p⁻¹ y`.
///
/// Orthogonal pilots use `(1/N) X_pᴴ y`; other pilots are inverted bin by bin
/// in the frequency domain. `n0` only sets the reported error variance.
pub fn ls_estimate(y: &[C64], pilot: &PilotBlock, n0: f64) -> Result<ChannelEstimate> {
    let n = pilot.len();
    if y.len() != n {
        return Err(invalid(format!(
            "received pilot has {} samples, expected {n}",
            y.len()
        )));
    }
    if pilot.is_orthogonal() {
        let scale = 1.0 / n as f64;
        let x = &pilot.symbols;
        let g_hat = (0..n)
            .map(|j| {
                let mut acc = ZERO;
                for (i, yi) in y.iter().enumerate() {
                    acc += x[(i + n - j) % n].conj() * yi;
                }
                acc * scale
            })
            .collect();
        return Ok(ChannelEstimate {
            g_hat,
            error_variance: n0 / n as f64,
        });
    }
    let lambda = dft(&pilot.symbols, false);
    let floor = SINGULAR_TOL * (n * n) as f64;
    if let Some(k) = lambda.iter().position(|l| l.norm_sqr() < floor) {
        return Err(Error::Singular(format!("pilot spectrum vanishes at bin {k}")));
    }
    let yf = dft(y, false);
    let gf: Vec<C64> = yf.iter().zip(&lambda).map(|(a, b)| a / b).collect();
    Ok(ChannelEstimate {
        g_hat: idft(&gf, false),
        error_variance: theoretical_mse(pilot, n0)? / n as f64,
    })
}

/// `ε = N0 Σ_k 1/d_p(k)`, the total estimation error `E‖ĝ − g‖²`.
pub fn theoretical_mse(pilot: &PilotBlock, n0: f64) -> Result<f64> {
    let n = pilot.len();
    let floor = SINGULAR_TOL * (n * n) as f64;
    let mut acc = 0.0;
    for (k, d) in pilot.spectrum().into_iter().enumerate() {
        if d < floor {
            return Err(Error::Singular(format!("pilot spectrum vanishes at bin {k}")));
        }
        acc += 1.0 / d;
    }
    Ok(n0 * acc)
}

/// `N0 Tr{(X_pᴴX_p)⁻¹}` by dense inversion; a cross-check of
/// [`theoretical_mse`].
pub fn theoretical_mse_dense(pilot: &PilotBlock, n0: f64) -> Result<f64> {
    let gram = cir(&pilot.symbols)?.to_dense().gram();
    Ok(n0 * gram.inverse()?.trace().re)
}

/// Zeroes every entry of `g_hat` outside `support`. The per-entry error
/// variance on the support is unchanged.
pub fn denoise(estimate: &mut ChannelEstimate, support: &[usize]) {
    let n = estimate.g_hat.len();
    let mut keep = vec![false; n];
    for &p in support {
        if p < n {
            keep[p] = true;
        }
    }
    for (g, k) in estimate.g_hat.iter_mut().zip(keep) {
        if !k {
            *g = ZERO;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transceiver::awgn;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_zadoff_chu_sequences() {
        let p = zadoff_chu_pilot(2, 1).unwrap();
        assert!((p.symbols[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((p.symbols[1] - C64::new(0.0, 1.0)).norm() < 1e-15);

        let p = zadoff_chu_pilot(4, 1).unwrap();
        let expect = [0.0, PI / 4.0, PI, 9.0 * PI / 4.0];
        for (s, e) in p.symbols.iter().zip(expect) {
            assert!((s - C64::from_polar(1.0, e)).norm() < 1e-14);
        }
    }

    #[test]
    fn zadoff_chu_rejections() {
        assert!(zadoff_chu_pilot(7, 1).is_err());
        assert!(zadoff_chu_pilot(8, 2).is_err());
        assert!(zadoff_chu_pilot(0, 1).is_err());
        assert!(zadoff_chu_pilot(8, -3).is_ok());
    }

    #[test]
    fn gram_identity() {
        for n in (2..=64).step_by(2) {
            for root in 1..n as i64 {
                if gcd(root as u64, n as u64) != 1 {
                    continue;
                }
                let p = zadoff_chu_pilot(n, root).unwrap();
                let gram = cir(&p.symbols).unwrap().to_dense().gram();
                let dev = (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .map(|(i, j)| {
                        let target = if i == j { n as f64 } else { 0.0 };
                        (gram[(i, j)] - C64::new(target, 0.0)).norm()
                    })
                    .fold(0.0, f64::max);
                assert!(dev < 1e-10, "N={n} root={root} dev={dev}");
            }
        }
    }

    #[test]
    fn noiseless_estimate_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 16;
        let g: Vec<C64> = awgn(n, 1.0, &mut rng);
        for pilot in [
            zadoff_chu_pilot(n, 1).unwrap(),
            random_psk_pilot(n, 4, &mut ChaCha8Rng::seed_from_u64(9)).unwrap(),
        ] {
            let y = cir(&pilot.symbols).unwrap().mul_vec(&g);
            let est = ls_estimate(&y, &pilot, 0.0).unwrap();
            let err: f64 = est.g_hat.iter().zip(&g).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10);
        }
    }

    #[test]
    fn zadoff_chu_mse_is_n0() {
        let p = zadoff_chu_pilot(16, 3).unwrap();
        assert!((theoretical_mse(&p, 0.25).unwrap() - 0.25).abs() < 1e-12);
        assert!((theoretical_mse_dense(&p, 0.25).unwrap() - 0.25).abs() < 1e-10);
    }

    #[test]
    fn non_constant_pilot_matches_dense_trace() {
        let p = PilotBlock {
            symbols: vec![
                C64::new(2.0, 0.0),
                C64::new(0.5, 0.0),
                C64::new(0.0, 0.3),
                C64::new(0.0, 0.0),
                C64::new(-0.2, 0.1),
                C64::new(0.0, 0.0),
            ],
            root: None,
        };
        let spectral = theoretical_mse(&p, 0.7).unwrap();
        let dense = theoretical_mse_dense(&p, 0.7).unwrap();
        assert!((spectral - dense).abs() < 1e-10 * dense);
    }

    #[test]
    fn singular_pilot() {
        let p = PilotBlock {
            symbols: vec![C64::new(1.0, 0.0); 4],
            root: None,
        };
        assert!(matches!(theoretical_mse(&p, 1.0), Err(Error::Singular(_))));
        assert!(matches!(
            ls_estimate(&[ZERO; 4], &p, 1.0),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn estimation_error_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 16;
        let n0 = 0.1;
        let pilot = zadoff_chu_pilot(n, 1).unwrap();
        let g = awgn(n, 1.0, &mut rng);
        let clean = cir(&pilot.symbols).unwrap().mul_vec(&g);
        let trials = 20_000;
        let mut total = 0.0;
        let mut mean = vec![ZERO; n];
        for _ in 0..trials {
            let y: Vec<C64> = clean
                .iter()
                .zip(awgn(n, n0, &mut rng))
                .map(|(a, b)| a + b)
                .collect();
            let est = ls_estimate(&y, &pilot, n0).unwrap();
            assert!((est.error_variance - n0 / n as f64).abs() < 1e-15);
            for ((m, a), b) in mean.iter_mut().zip(&est.g_hat).zip(&g) {
                *m += a - b;
                total += (a - b).norm_sqr();
            }
        }
        let mse = total / trials as f64;
        assert!((mse / n0 - 1.0).abs() < 0.02, "{mse}");
        // Unbiased: the mean error shrinks like sqrt(σ_e²/trials).
        let sd = (n0 / n as f64 / trials as f64).sqrt();
        assert!(mean.iter().all(|m| (m / trials as f64).norm() < 5.0 * sd));
    }

    #[test]
    fn denoising_keeps_support() {
        let mut est = ChannelEstimate {
            g_hat: vec![C64::new(1.0, 0.0); 8],
            error_variance: 0.8,
        };
        denoise(&mut est, &[0, 1, 4]);
        let kept: Vec<usize> = (0..8).filter(|&i| est.g_hat[i] != ZERO).collect();
        assert_eq!(kept, vec![0, 1, 4]);
    }
}
