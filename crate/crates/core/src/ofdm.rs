//! OFDM forward model, per-subcarrier channel estimation and CIR computation.

use std::f64::consts::PI;

use ndarray::Array3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AntennaArray;
use crate::scene::PropagationPath;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmConfig {
    pub fft_size: usize,
    pub valid_subcarriers: usize,
    /// Sampling rate / occupied bandwidth (Hz).
    pub bandwidth: f64,
    pub carrier: f64,
    /// `None` disables noise.
    pub noise_snr_db: Option<f64>,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            fft_size: 1024,
            valid_subcarriers: 900,
            bandwidth: 1.2288e9,
            carrier: 60e9,
            noise_snr_db: None,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.valid_subcarriers == 0 || self.valid_subcarriers > self.fft_size {
            return Err(Error::InvalidConfig(format!(
                "valid_subcarriers must be in 1..={}, got {}",
                self.fft_size, self.valid_subcarriers
            )));
        }
        if !(self.bandwidth > 0.0) || !(self.carrier > self.bandwidth) {
            return Err(Error::InvalidConfig(
                "bandwidth must be positive and below the carrier frequency".into(),
            ));
        }
        if let Some(snr) = self.noise_snr_db {
            if !snr.is_finite() {
                return Err(Error::InvalidConfig("noise_snr_db must be finite".into()));
            }
        }
        Ok(())
    }

    /// Same configuration with every subcarrier valid.
    pub fn all_valid(mut self) -> Self {
        self.valid_subcarriers = self.fft_size;
        self
    }

    /// Signed baseband index of FFT bin `k`: `k` below `K/2`, `k − K` above.
    pub fn signed_index(&self, k: usize) -> i64 {
        if k < self.fft_size / 2 {
            k as i64
        } else {
            k as i64 - self.fft_size as i64
        }
    }

    /// Valid subcarriers are the `V` bins closest to DC:
    /// signed indices in `[-⌊V/2⌋, ⌈V/2⌉)`.
    pub fn is_valid(&self, k: usize) -> bool {
        let s = self.signed_index(k);
        let lo = -((self.valid_subcarriers / 2) as i64);
        let hi = lo + self.valid_subcarriers as i64;
        s >= lo && s < hi
    }

    pub fn subcarrier_frequency(&self, k: usize) -> f64 {
        self.signed_index(k) as f64 * self.bandwidth / self.fft_size as f64
    }

    pub fn wavelength(&self) -> f64 {
        crate::geometry::SPEED_OF_LIGHT / self.carrier
    }
}

/// Unit-magnitude QPSK symbols on valid subcarriers, zero elsewhere.
pub fn qpsk_symbols(config: &OfdmConfig, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = std::f64::consts::FRAC_1_SQRT_2;
    (0..config.fft_size)
        .map(|k| {
            let bits: u8 = rng.random_range(0..4);
            if config.is_valid(k) {
                Complex64::new(
                    if bits & 1 == 0 { a } else { -a },
                    if bits & 2 == 0 { a } else { -a },
                )
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// Received symbols for every antenna pair, shape `(tx, rx, K)`.
///
/// `Y(k) = Σ_p a_p · X(k) · exp(−j2π(f_c + f_k)τ_p) + noise`. Noise is
/// circular Gaussian at the configured SNR (mean signal power over valid
/// subcarriers divided by noise power), drawn from a stream keyed by
/// `(seed, pair)`.
pub fn synthesize_rx(
    paths: &[PropagationPath],
    tx_symbols: &[Complex64],
    config: &OfdmConfig,
    array: &AntennaArray,
    seed: u64,
) -> Result<Array3<Complex64>> {
    config.validate()?;
    let k_len = config.fft_size;
    if tx_symbols.len() != k_len {
        return Err(Error::ShapeMismatch(format!(
            "expected {k_len} transmitted symbols, got {}",
            tx_symbols.len()
        )));
    }
    let (n_tx, n_rx) = (array.n_tx(), array.n_rx());
    if let Some(p) = paths.iter().find(|p| p.delays.len() != n_tx * n_rx) {
        return Err(Error::ShapeMismatch(format!(
            "path carries {} delays for a {n_tx}x{n_rx} array",
            p.delays.len()
        )));
    }

    let pairs: Vec<Vec<Complex64>> = (0..n_tx * n_rx)
        .into_par_iter()
        .map(|pair| {
            let mut channel = pair_channel(paths, pair, config);
            let mut y: Vec<Complex64> = channel
                .iter_mut()
                .zip(tx_symbols)
                .enumerate()
                .map(|(k, (h, x))| if config.is_valid(k) { *h * x } else { Complex64::new(0.0, 0.0) })
                .collect();
            if let Some(snr_db) = config.noise_snr_db {
                add_noise(&mut y, config, snr_db, seed, pair as u64);
            }
            y
        })
        .collect();

    let flat: Vec<Complex64> = pairs.into_iter().flatten().collect();
    Ok(Array3::from_shape_vec((n_tx, n_rx, k_len), flat).expect("pair-major buffer"))
}

/// Noiseless frequency response `H(k) = Σ_p a_p·exp(−j2π(f_c+f_k)τ_p)` of one
/// antenna pair over all FFT bins.
fn pair_channel(paths: &[PropagationPath], pair: usize, config: &OfdmConfig) -> Vec<Complex64> {
    const REANCHOR: i64 = 64;
    let k_len = config.fft_size;
    let df = config.bandwidth / k_len as f64;
    let s_min = -((k_len / 2) as i64);
    let s_max = s_min + k_len as i64 - 1;
    // accumulate in signed-index order, then scatter into FFT bin order
    let mut acc = vec![Complex64::new(0.0, 0.0); k_len];
    for path in paths {
        let tau = path.delays[pair];
        let step = Complex64::from_polar(1.0, -2.0 * PI * df * tau);
        let mut s = s_min;
        while s <= s_max {
            let f = config.carrier + s as f64 * df;
            let mut ph = Complex64::from_polar(path.amplitude, -2.0 * PI * f * tau);
            let end = (s + REANCHOR - 1).min(s_max);
            for idx in s..=end {
                acc[(idx - s_min) as usize] += ph;
                ph *= step;
            }
            s = end + 1;
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); k_len];
    for (i, v) in acc.into_iter().enumerate() {
        let s = i as i64 + s_min;
        let k = if s < 0 { (s + k_len as i64) as usize } else { s as usize };
        out[k] = v;
    }
    out
}

fn add_noise(y: &mut [Complex64], config: &OfdmConfig, snr_db: f64, seed: u64, pair: u64) {
    let valid: Vec<usize> = (0..y.len()).filter(|&k| config.is_valid(k)).collect();
    let power = valid.iter().map(|&k| y[k].norm_sqr()).sum::<f64>() / valid.len() as f64;
    if power <= 0.0 {
        return;
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pair);
    for k in valid {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        y[k] += Complex64::new(re * sigma, im * sigma);
    }
}

/// `Ĥ(k) = Y(k) / X(k)` on valid subcarriers, zero elsewhere.
pub fn estimate_channel(y: &[Complex64], x: &[Complex64], config: &OfdmConfig) -> Result<Vec<Complex64>> {
    if y.len() != config.fft_size || x.len() != config.fft_size {
        return Err(Error::ShapeMismatch(format!(
            "expected {} subcarriers, got y={} x={}",
            config.fft_size,
            y.len(),
            x.len()
        )));
    }
    (0..config.fft_size)
        .map(|k| {
            if !config.is_valid(k) {
                Ok(Complex64::new(0.0, 0.0))
            } else if x[k] == Complex64::new(0.0, 0.0) {
                Err(Error::ZeroSubcarrier { index: k })
            } else {
                Ok(y[k] / x[k])
            }
        })
        .collect()
}

/// Inverse DFT with `1/K` normalization; tap `n` maps to range `n·c/(2B)`.
pub fn compute_cir(h_freq: &[Complex64], config: &OfdmConfig) -> Result<Vec<Complex64>> {
    if h_freq.len() != config.fft_size {
        return Err(Error::ShapeMismatch(format!(
            "expected {} bins, got {}",
            config.fft_size,
            h_freq.len()
        )));
    }
    let mut buf = h_freq.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let scale = 1.0 / config.fft_size as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    Ok(buf)
}

/// Per-pair channel impulse responses, shape `(tx, rx, K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirTensor {
    pub taps: Array3<Complex64>,
    pub config: OfdmConfig,
}

impl CirTensor {
    pub fn shape(&self) -> (usize, usize, usize) {
        self.taps.dim()
    }

    pub fn validate(&self, array: &AntennaArray) -> Result<()> {
        let (t, r, k) = self.shape();
        if t != array.n_tx() || r != array.n_rx() || k != self.config.fft_size {
            return Err(Error::ShapeMismatch(format!(
                "CIR shape ({t}, {r}, {k}) does not match a {}x{} array with K = {}",
                array.n_tx(),
                array.n_rx(),
                self.config.fft_size
            )));
        }
        if !self.taps.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::ShapeMismatch("CIR contains non-finite taps".into()));
        }
        Ok(())
    }
}

/// Estimates the channel and computes the CIR for every antenna pair.
pub fn cir_tensor(y: &Array3<Complex64>, x: &[Complex64], config: &OfdmConfig) -> Result<CirTensor> {
    let (n_tx, n_rx, k_len) = y.dim();
    if k_len != config.fft_size {
        return Err(Error::ShapeMismatch(format!(
            "received tensor has {k_len} bins, config expects {}",
            config.fft_size
        )));
    }
    let fft = FftPlanner::new().plan_fft_inverse(k_len);
    let scale = 1.0 / k_len as f64;
    let rows: Vec<Vec<Complex64>> = (0..n_tx * n_rx)
        .into_par_iter()
        .map(|pair| {
            let row: Vec<Complex64> = y.slice(ndarray::s![pair / n_rx, pair % n_rx, ..]).to_vec();
            let mut h = estimate_channel(&row, x, config)?;
            fft.process(&mut h);
            h.iter_mut().for_each(|v| *v *= scale);
            Ok(h)
        })
        .collect::<Result<_>>()?;
    let taps = Array3::from_shape_vec((n_tx, n_rx, k_len), rows.into_iter().flatten().collect())
        .expect("pair-major buffer");
    Ok(CirTensor { taps, config: *config })
}
