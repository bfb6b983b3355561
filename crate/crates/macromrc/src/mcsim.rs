//! Monte Carlo link-level simulator: the independent end-to-end reference
//! for every analytic SER claim.
//!
//! Channel and noise are drawn per symbol, the combiner output is decided by
//! minimum distance, and errors are counted. Substreams are seeded from
//! (seed, stream index) with a counter-based generator, so results are
//! bit-identical for a fixed seed regardless of how work is split across
//! threads.

use crate::error::{Error, Result};
use crate::gamma_dist::InterfererMagnitudeProfile;
use crate::powermodel::SystemConfig;
use crate::ser_analytic::Modulation;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// RNG identity recorded in estimates for reproducibility.
pub const RNG_ALGORITHM: &str = "chacha12";

/// Number of parallel substreams; fixed (not thread-count dependent) so the
/// merged result is reproducible on any machine.
const SUBSTREAMS: u64 = 64;

/// Monte Carlo SER estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SerEstimate {
    pub ser: f64,
    pub std_err: f64,
    pub n_symbols: u64,
    pub n_errors: u64,
    pub seed: u64,
    pub rng_algorithm: &'static str,
}

impl SerEstimate {
    fn from_counts(n_errors: u64, n_symbols: u64, seed: u64) -> Self {
        let ser = n_errors as f64 / n_symbols as f64;
        SerEstimate {
            ser,
            std_err: (ser * (1.0 - ser) / n_symbols as f64).sqrt(),
            n_symbols,
            n_errors,
            seed,
            rng_algorithm: RNG_ALGORITHM,
        }
    }
}

/// One channel draw: a column per source plus the noise vector.
#[derive(Debug, Clone)]
pub struct ChannelSample {
    /// h_columns[k][i]: gain from source k (0 = desired) to antenna i.
    pub h_columns: Vec<Vec<Complex64>>,
    pub noise: Vec<Complex64>,
}

#[inline]
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; each call consumes two uniforms
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[inline]
fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    if variance == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let s = (variance / 2.0).sqrt();
    Complex64::new(s * standard_normal(rng), s * standard_normal(rng))
}

/// Draw one channel realization: entry (i, k) has E{|h|^2} = P_ik and the
/// noise entries have E{|n|^2} = sigma^2, each split evenly between real and
/// imaginary parts.
pub fn generate_channel<R: Rng>(config: &SystemConfig, rng: &mut R) -> ChannelSample {
    let n_r = config.n_antennas();
    let mut h_columns = Vec::with_capacity(1 + config.interferers.len());
    h_columns.push(
        (0..n_r)
            .map(|i| complex_gaussian(rng, config.desired.entries[i]))
            .collect(),
    );
    for m in &config.interferers {
        h_columns.push(
            (0..n_r)
                .map(|i| complex_gaussian(rng, m.entries[i]))
                .collect(),
        );
    }
    let noise = (0..n_r)
        .map(|_| complex_gaussian(rng, config.noise_power))
        .collect();
    ChannelSample { h_columns, noise }
}

/// MRC combiner output: h1^H r / h1^H h1.
pub fn mrc_combine(h1: &[Complex64], r: &[Complex64]) -> Result<Complex64> {
    let energy: f64 = h1.iter().map(|h| h.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    let dot: Complex64 = h1.iter().zip(r).map(|(h, x)| h.conj() * x).sum();
    Ok(dot / energy)
}

fn nearest_symbol(points: &[Complex64], z: Complex64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (idx, p) in points.iter().enumerate() {
        let d = (z - p).norm_sqr();
        if d < best_d {
            best_d = d;
            best = idx;
        }
    }
    best
}

fn substream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulate `n_symbols` transmissions and estimate the SER.
///
/// The desired symbol and every interferer symbol are uniform i.i.d. draws
/// from the constellation; detection is minimum distance on the combiner
/// output. Runs on `SUBSTREAMS` seeded substreams merged by error-count
/// addition, in parallel.
pub fn simulate_ser(
    config: &SystemConfig,
    modulation: &Modulation,
    n_symbols: u64,
    seed: u64,
) -> Result<SerEstimate> {
    if n_symbols == 0 {
        return Err(Error::InvalidParameter(
            "n_symbols must be at least 1".into(),
        ));
    }
    let points = modulation.constellation();
    let n_r = config.n_antennas();
    let per = n_symbols / SUBSTREAMS;
    let rem = n_symbols % SUBSTREAMS;
    let errors: u64 = (0..SUBSTREAMS)
        .into_par_iter()
        .map(|stream| {
            let mut rng = substream_rng(seed, stream);
            let quota = per + u64::from(stream < rem);
            let mut errs = 0u64;
            let mut rx = vec![Complex64::new(0.0, 0.0); n_r];
            for _ in 0..quota {
                let ch = generate_channel(config, &mut rng);
                let tx = rng.gen_range(0..points.len());
                for i in 0..n_r {
                    rx[i] = ch.h_columns[0][i] * points[tx] + ch.noise[i];
                }
                for col in &ch.h_columns[1..] {
                    let s = points[rng.gen_range(0..points.len())];
                    for i in 0..n_r {
                        rx[i] += col[i] * s;
                    }
                }
                let combined = match mrc_combine(&ch.h_columns[0], &rx) {
                    Ok(z) => z,
                    Err(_) => continue, // zero channel: probability zero
                };
                if nearest_symbol(&points, combined) != tx {
                    errs += 1;
                }
            }
            errs
        })
        .sum();
    Ok(SerEstimate::from_counts(errors, n_symbols, seed))
}

/// Draw `n` samples of gamma = X^2 / Y = (h1^H h1)^2 / (h1^H D(s) h1) for a
/// fixed magnitude profile.
pub fn sample_gamma(
    config: &SystemConfig,
    profile: &InterfererMagnitudeProfile,
    n: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let d = crate::gamma_dist::interference_levels(config, profile)?;
    let n_r = config.n_antennas();
    let per = n / SUBSTREAMS;
    let rem = n % SUBSTREAMS;
    let chunks: Vec<Vec<f64>> = (0..SUBSTREAMS)
        .into_par_iter()
        .map(|stream| {
            let mut rng = substream_rng(seed, stream);
            let quota = per + u64::from(stream < rem);
            let mut out = Vec::with_capacity(quota as usize);
            for _ in 0..quota {
                let mut x = 0.0;
                let mut y = 0.0;
                for i in 0..n_r {
                    let g = complex_gaussian(&mut rng, config.desired.entries[i]).norm_sqr();
                    x += g;
                    y += d[i] * g;
                }
                out.push(x * x / y);
            }
            out
        })
        .collect();
    Ok(chunks.concat())
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_samples: u64,
}

/// Smooth Monte Carlo estimate of E{a Q(sqrt(b gamma))} (or the Q^2
/// analogue) by direct sampling of the gamma representation.
///
/// Unlike [`simulate_ser`] this averages the Q-functional itself instead of
/// counting rare symbol errors, so a few 1e7 samples give three to four
/// significant digits even for floors around 1e-7. Deterministic per seed.
pub fn smooth_w_estimate(
    a: f64,
    b: f64,
    squared: bool,
    config: &SystemConfig,
    profile: &InterfererMagnitudeProfile,
    n: u64,
    seed: u64,
) -> Result<MeanEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let d = crate::gamma_dist::interference_levels(config, profile)?;
    let p = &config.desired.entries;
    let n_r = config.n_antennas();
    let per = n / SUBSTREAMS;
    let rem = n % SUBSTREAMS;
    let (sum, sum_sq): (f64, f64) = (0..SUBSTREAMS)
        .into_par_iter()
        .map(|stream| {
            let mut rng = substream_rng(seed, stream.wrapping_add(0x51300));
            let quota = per + u64::from(stream < rem);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..quota {
                let mut x = 0.0;
                let mut y = 0.0;
                for i in 0..n_r {
                    let e: f64 = -(rng.gen_range(f64::MIN_POSITIVE..1.0f64)).ln();
                    let g = e * p[i];
                    x += g;
                    y += d[i] * g;
                }
                let gamma = x * x / y;
                let q = crate::specfun::gaussian_q((b * gamma).sqrt());
                let v = if squared { a * q * q } else { a * q };
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .reduce(|| (0.0, 0.0), |u, v| (u.0 + v.0, u.1 + v.1));
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0);
    Ok(MeanEstimate {
        mean,
        std_err: (var / nf).sqrt(),
        n_samples: n,
    })
}

/// Sample-mean estimate of the exact combiner mean SINR
/// E{(h1^H h1)^2 / (h1^H (sum_k h_k h_k^H + sigma^2 I) h1)}.
pub fn mc_mean_sinr(config: &SystemConfig, n_samples: u64, seed: u64) -> Result<MeanEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter(
            "n_samples must be at least 1".into(),
        ));
    }
    let per = n_samples / SUBSTREAMS;
    let rem = n_samples % SUBSTREAMS;
    let (sum, sum_sq): (f64, f64) = (0..SUBSTREAMS)
        .into_par_iter()
        .map(|stream| {
            let mut rng = substream_rng(seed, stream);
            let quota = per + u64::from(stream < rem);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..quota {
                let ch = generate_channel(config, &mut rng);
                let h1 = &ch.h_columns[0];
                let x: f64 = h1.iter().map(|h| h.norm_sqr()).sum();
                let mut denom = config.noise_power * x;
                for col in &ch.h_columns[1..] {
                    let dot: Complex64 = h1.iter().zip(col).map(|(a, b)| a.conj() * b).sum();
                    denom += dot.norm_sqr();
                }
                let v = x * x / denom;
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(MeanEstimate {
        mean,
        std_err: (var / n).sqrt(),
        n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powermodel::PowerMatrix;

    fn two_antenna_config(sigma2: f64) -> SystemConfig {
        SystemConfig::new(
            PowerMatrix::new(vec![1.0, 2.0], "desired").unwrap(),
            vec![PowerMatrix::new(vec![2.0, 1.0], "i1").unwrap()],
            sigma2,
        )
        .unwrap()
    }

    #[test]
    fn zero_power_entry_gives_zero_gain() {
        let cfg = SystemConfig::new(
            PowerMatrix::new(vec![1.0, 2.0], "desired").unwrap(),
            vec![PowerMatrix::new(vec![0.0, 1.0], "i1").unwrap()],
            0.5,
        )
        .unwrap();
        let mut rng = substream_rng(7, 0);
        let ch = generate_channel(&cfg, &mut rng);
        assert_eq!(ch.h_columns[1][0], Complex64::new(0.0, 0.0));
        assert_ne!(ch.h_columns[1][1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn channel_second_moment_matches_power() {
        let cfg = two_antenna_config(0.25);
        let mut rng = substream_rng(11, 0);
        let n = 200_000;
        let mut acc = [0.0f64; 2];
        let mut noise_acc = 0.0f64;
        for _ in 0..n {
            let ch = generate_channel(&cfg, &mut rng);
            acc[0] += ch.h_columns[0][0].norm_sqr();
            acc[1] += ch.h_columns[0][1].norm_sqr();
            noise_acc += ch.noise[0].norm_sqr();
        }
        // 5-sigma bands around the configured powers
        assert!((acc[0] / n as f64 - 1.0).abs() < 0.012);
        assert!((acc[1] / n as f64 - 2.0).abs() < 0.024);
        assert!((noise_acc / n as f64 - 0.25).abs() < 0.004);
    }

    #[test]
    fn determinism_per_seed() {
        let cfg = two_antenna_config(0.1);
        let a = simulate_ser(&cfg, &Modulation::Bpsk, 20_000, 42).unwrap();
        let b = simulate_ser(&cfg, &Modulation::Bpsk, 20_000, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_ser(&cfg, &Modulation::Bpsk, 20_000, 43).unwrap();
        assert_ne!(a.n_errors, c.n_errors);
        // gamma samples too
        let g1 = sample_gamma(&cfg, &InterfererMagnitudeProfile::unit(1), 1000, 9).unwrap();
        let g2 = sample_gamma(&cfg, &InterfererMagnitudeProfile::unit(1), 1000, 9).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(sample_gamma(&cfg, &InterfererMagnitudeProfile::unit(1), 0, 9)
            .unwrap()
            .len(), 0);
    }

    #[test]
    fn combiner_recovers_clean_symbol() {
        let h1 = vec![Complex64::new(0.3, -0.2), Complex64::new(1.1, 0.4)];
        let s = Complex64::new(0.3, 0.4);
        let r: Vec<Complex64> = h1.iter().map(|h| h * s).collect();
        let out = mrc_combine(&h1, &r).unwrap();
        assert!((out - s).norm() < 1e-14);
        // linearity
        let r2: Vec<Complex64> = h1.iter().map(|h| h * Complex64::new(-1.0, 0.25)).collect();
        let sum: Vec<Complex64> = r.iter().zip(&r2).map(|(a, b)| a + b).collect();
        let lhs = mrc_combine(&h1, &sum).unwrap();
        let rhs = mrc_combine(&h1, &r).unwrap() + mrc_combine(&h1, &r2).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
        // zero channel guarded
        let zero = vec![Complex64::new(0.0, 0.0); 2];
        assert!(mrc_combine(&zero, &r).is_err());
    }

    #[test]
    fn combiner_matches_compensated_reference() {
        // re-evaluate the formula with compensated accumulation as an
        // extended-precision reference
        let mut rng = substream_rng(5, 3);
        let h1: Vec<Complex64> = (0..6)
            .map(|_| complex_gaussian(&mut rng, 1.7))
            .collect();
        let r: Vec<Complex64> = (0..6)
            .map(|_| complex_gaussian(&mut rng, 2.3))
            .collect();
        let out = mrc_combine(&h1, &r).unwrap();
        let mut num_re = crate::numeric::CompensatedSum::new();
        let mut num_im = crate::numeric::CompensatedSum::new();
        let mut den = crate::numeric::CompensatedSum::new();
        for (h, x) in h1.iter().zip(&r) {
            let p = h.conj() * x;
            num_re.add(p.re);
            num_im.add(p.im);
            den.add(h.norm_sqr());
        }
        let want = Complex64::new(num_re.value(), num_im.value()) / den.value();
        assert!((out - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn noiseless_interference_free_bpsk_is_error_free() {
        let cfg = SystemConfig::new(
            PowerMatrix::new(vec![1.0, 2.0], "desired").unwrap(),
            vec![],
            1e-12,
        )
        .unwrap();
        let est = simulate_ser(&cfg, &Modulation::Bpsk, 100_000, 1).unwrap();
        assert_eq!(est.n_errors, 0);
    }

    #[test]
    fn microdiversity_gamma_matches_chisquared_cdf() {
        // D proportional to I: gamma = X / d with X a sum of two unit-mean
        // exponentials (chi-squared with 4 dof scaled by 1/2)
        let cfg = SystemConfig::new(
            PowerMatrix::new(vec![1.0, 1.0], "desired").unwrap(),
            vec![PowerMatrix::new(vec![0.5, 0.5], "i1").unwrap()],
            0.5,
        )
        .unwrap();
        let n = 400_000u64;
        let samples = sample_gamma(&cfg, &InterfererMagnitudeProfile::unit(1), n, 31).unwrap();
        // F(r) = 1 - e^{-r d}(1 + r d), d = 1.0
        let d = 1.0;
        for r in [0.5f64, 1.0, 2.0, 4.0] {
            let emp = samples.iter().filter(|&&g| g < r).count() as f64 / n as f64;
            let want = 1.0 - (-r * d).exp() * (1.0 + r * d);
            let band = 3.0 * (want * (1.0 - want) / n as f64).sqrt();
            assert!(
                (emp - want).abs() < band.max(1e-4),
                "r={r}: {emp} vs {want}"
            );
        }
    }

    #[test]
    fn mean_sinr_no_interference() {
        // P2 = 0, sigma^2 = 1, P1 = diag(1): gamma~ = h1^H h1, mean 1
        let cfg = SystemConfig::new(
            PowerMatrix::new(vec![1.0], "desired").unwrap(),
            vec![],
            1.0,
        )
        .unwrap();
        let est = mc_mean_sinr(&cfg, 400_000, 3).unwrap();
        assert!((est.mean - 1.0).abs() < 3.0 * est.std_err + 0.01);
        let again = mc_mean_sinr(&cfg, 400_000, 3).unwrap();
        assert_eq!(est, again);
    }
}
