//! Truncated-Fourier-series view of a circuit's output.
//!
//! A circuit output `f_theta(x)` with feature `i` encoded `d_i` times is a
//! trigonometric polynomial with frequencies `omega_i` in `{-d_i..d_i}`:
//! exactly `2 d_i + 1` terms per dimension. Sampling `f` on an equidistant
//! grid of that size per dimension recovers every coefficient exactly by a
//! discrete Fourier transform. Expressivity is then read off from how far
//! the coefficients move as the trainable parameters are redrawn.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qsim::{expectation, run_circuit, AngleSource, CircuitSpec, Observable};

/// Guard against intractable grids; larger requests should slice dimensions.
pub const MAX_GRID_CELLS: usize = 1_000_000;

/// A coefficient counts as accessible when its standard deviation across
/// parameter draws exceeds this.
pub const COEFF_STD_THRESHOLD: f64 = 1e-4;

/// Sampled Fourier coefficients of one circuit observable.
///
/// Coefficients are stored flat, row-major over the per-dimension frequency
/// grids; axis `i` runs over `omega_i = -d_i ..= d_i`.
#[derive(Debug, Clone)]
pub struct FourierSpectrum {
    /// Encoding degree per feature dimension.
    pub degrees: Vec<usize>,
    /// Grid size per dimension, `2 d_i + 1`.
    pub sizes: Vec<usize>,
    /// Per draw: all coefficients.
    pub coeffs: Vec<Vec<Complex64>>,
    /// Per coefficient: standard deviation across draws,
    /// `sqrt(Var(re) + Var(im))`.
    pub std: Vec<f64>,
    pub nonzero: usize,
    pub threshold: f64,
}

impl FourierSpectrum {
    pub fn grid_len(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Frequency tuple of a flat coefficient index.
    pub fn freq_tuple(&self, mut flat: usize) -> Vec<i64> {
        let mut out = vec![0i64; self.sizes.len()];
        for (i, &n) in self.sizes.iter().enumerate().rev() {
            let m = flat % n;
            flat /= n;
            out[i] = m as i64 - self.degrees[i] as i64;
        }
        out
    }

    pub fn nonzero_fraction(&self) -> f64 {
        self.nonzero as f64 / self.grid_len() as f64
    }

    /// Evaluates the truncated series of one draw at an arbitrary point:
    /// `sum_omega c_omega exp(-i omega . x)`.
    pub fn reconstruct(&self, draw: usize, x: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (flat, c) in self.coeffs[draw].iter().enumerate() {
            let freq = self.freq_tuple(flat);
            let phase: f64 = freq.iter().zip(x).map(|(w, xi)| -(*w as f64) * xi).sum();
            acc += c * Complex64::from_polar(1.0, phase);
        }
        acc
    }

    /// `flat_index, freq_0.., std, mean_re, mean_im` rows.
    pub fn to_csv(&self) -> String {
        let dims = self.sizes.len();
        let mut out = String::from("index,");
        for i in 0..dims {
            out.push_str(&format!("freq_{i},"));
        }
        out.push_str("std,mean_re,mean_im\n");
        let draws = self.coeffs.len() as f64;
        for flat in 0..self.grid_len() {
            let mean = self
                .coeffs
                .iter()
                .map(|c| c[flat])
                .sum::<Complex64>()
                / draws;
            let freq = self.freq_tuple(flat);
            out.push_str(&format!("{flat},"));
            for w in freq {
                out.push_str(&format!("{w},"));
            }
            out.push_str(&format!("{},{},{}\n", self.std[flat], mean.re, mean.im));
        }
        out
    }
}

/// Counts how many encoding gates consume each feature slot.
fn encoding_degrees(circuit: &CircuitSpec) -> Vec<usize> {
    let mut degrees = vec![0usize; circuit.n_features];
    for gate in &circuit.gates {
        if let Some(AngleSource::Feature(k)) = gate.angle_source() {
            degrees[k] += 1;
        }
    }
    degrees
}

/// Samples the exact Fourier coefficients of `<obs>` for `n_theta` parameter
/// draws (uniform over one period). The evaluation grid has `2 d_i + 1`
/// equidistant points per feature dimension over `[0, 2 pi)`.
pub fn fourier_spectrum(
    circuit: &CircuitSpec,
    obs: &Observable,
    n_theta: usize,
    threshold: f64,
    seed: u64,
) -> Result<FourierSpectrum> {
    if n_theta == 0 {
        return Err(Error::contract("spectrum needs at least one draw"));
    }
    let degrees = encoding_degrees(circuit);
    let sizes: Vec<usize> = degrees.iter().map(|d| 2 * d + 1).collect();
    let total: usize = sizes.iter().product();
    if total > MAX_GRID_CELLS {
        return Err(Error::contract(format!(
            "frequency grid has {total} cells (> {MAX_GRID_CELLS}); slice dimensions or fix some features"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = Vec::with_capacity(n_theta);
    for _ in 0..n_theta {
        let theta: Vec<f64> = (0..circuit.n_params)
            .map(|_| rng.gen_range(0.0..2.0 * std::f64::consts::PI))
            .collect();

        // Evaluate on the full grid.
        let mut values = vec![Complex64::new(0.0, 0.0); total];
        let mut x = vec![0.0; degrees.len()];
        for (flat, slot) in values.iter_mut().enumerate() {
            let mut rem = flat;
            for i in (0..sizes.len()).rev() {
                let k = rem % sizes[i];
                rem /= sizes[i];
                x[i] = 2.0 * std::f64::consts::PI * k as f64 / sizes[i] as f64;
            }
            let state = run_circuit(circuit, &theta, &x)?;
            *slot = Complex64::new(expectation(&state, obs)?, 0.0);
        }

        dft_all_axes(&mut values, &sizes);
        coeffs.push(values);
    }

    // Spread across draws per coefficient.
    let draws = coeffs.len() as f64;
    let mut std = vec![0.0; total];
    for flat in 0..total {
        let mean = coeffs.iter().map(|c| c[flat]).sum::<Complex64>() / draws;
        let var: f64 = coeffs
            .iter()
            .map(|c| {
                let d = c[flat] - mean;
                d.re * d.re + d.im * d.im
            })
            .sum::<f64>()
            / draws;
        std[flat] = var.sqrt();
    }
    let nonzero = std.iter().filter(|s| **s > threshold).count();

    Ok(FourierSpectrum {
        degrees,
        sizes,
        coeffs,
        std,
        nonzero,
        threshold,
    })
}

/// In-place multi-dimensional DFT, one axis at a time:
/// `c[m] = (1/n) sum_k v[k] exp(+2 pi i (m - d) k / n)` so that index `m`
/// along each axis carries frequency `m - d` and the series reads
/// `f(x) = sum c_omega exp(-i omega . x)`.
fn dft_all_axes(values: &mut [Complex64], sizes: &[usize]) {
    let total = values.len();
    let mut stride = 1usize;
    for axis in (0..sizes.len()).rev() {
        let n = sizes[axis];
        if n > 1 {
            let d = (n - 1) / 2;
            // Twiddle table: w[m][k] = exp(2 pi i (m - d) k / n) / n.
            let mut table = vec![Complex64::new(0.0, 0.0); n * n];
            for m in 0..n {
                let omega = m as f64 - d as f64;
                for k in 0..n {
                    let phase = 2.0 * std::f64::consts::PI * omega * k as f64 / n as f64;
                    table[m * n + k] = Complex64::from_polar(1.0 / n as f64, phase);
                }
            }
            let block = n * stride;
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for start in (0..total).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = values[base + k * stride];
                    }
                    for m in 0..n {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (k, v) in line.iter().enumerate() {
                            acc += table[m * n + k] * v;
                        }
                        values[base + m * stride] = acc;
                    }
                }
            }
        }
        stride *= n;
    }
}
