//! Fisher information of a circuit's outcome distribution.
//!
//! For parameters `theta` and inputs `x ~ N(0,1)` per feature slot, the
//! outcome probabilities are `P(y | x, theta) = |<y | psi(theta, x)>|^2`
//! over all computational-basis outcomes `y`. The Fisher information matrix
//! is `F = E[grad log P . grad log P^T]`, estimated by averaging over `x`
//! draws and outcomes weighted by `P`, then over `theta` draws.
//!
//! Probability gradients come from the parameter-shift rule applied per gate
//! occurrence, which is exact for the RX/RY/RZ gate set.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{QdiConfig, QdiReadout, VvrqConfig};
use crate::qsim::{run_circuit, AngleSource, CircuitSpec};

/// Relative eigenvalue cutoff for numerical rank.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Matrices whose largest eigenvalue sits below this are all roundoff; rank
/// is 0. Squared double-precision noise lives around 1e-32.
const RANK_ABS_FLOOR: f64 = 1e-18;

/// Outcomes with probability below this are skipped; their weight in the
/// estimator is zero.
const PROB_CUTOFF: f64 = 1e-12;

/// Estimated Fisher information: the mean matrix across `theta` draws, its
/// eigenvalues (descending) and numerical rank.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FimResult {
    pub n: usize,
    /// Row-major `n x n`, symmetric.
    pub matrix: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    pub tolerance: f64,
    pub theta_draws: usize,
    pub x_draws: usize,
}

impl FimResult {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    pub fn eigenvalues_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue\n");
        for (i, ev) in self.eigenvalues.iter().enumerate() {
            out.push_str(&format!("{i},{ev}\n"));
        }
        out
    }

    pub fn matrix_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.entry(i, j).to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// All outcome probabilities and their exact Jacobian with respect to the
/// parameter slots, via one shifted evaluation pair per gate occurrence.
fn probability_jacobian(
    circuit: &CircuitSpec,
    params: &[f64],
    features: &[f64],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let probs = run_circuit(circuit, params, features)?.probabilities();
    let dim = probs.len();
    let mut jac = vec![vec![0.0; dim]; circuit.n_params];
    const SHIFT: f64 = std::f64::consts::FRAC_PI_2;
    for (i, gate) in circuit.gates.iter().enumerate() {
        let Some(AngleSource::Param(k)) = gate.angle_source() else {
            continue;
        };
        let plus =
            crate::qsim::run_circuit_shifted(circuit, params, features, Some((i, SHIFT)))?
                .probabilities();
        let minus =
            crate::qsim::run_circuit_shifted(circuit, params, features, Some((i, -SHIFT)))?
                .probabilities();
        for y in 0..dim {
            jac[k][y] += (plus[y] - minus[y]) / 2.0;
        }
    }
    Ok((probs, jac))
}

/// Estimates the FIM of `circuit` with `n_theta` parameter draws (uniform on
/// one period) and `n_x` Gaussian input draws per parameter draw.
pub fn fim_estimate(
    circuit: &CircuitSpec,
    n_theta: usize,
    n_x: usize,
    seed: u64,
) -> Result<FimResult> {
    if n_theta == 0 || n_x == 0 {
        return Err(Error::contract("FIM estimation needs at least one draw"));
    }
    let n = circuit.n_params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = vec![0.0; n * n];

    for _ in 0..n_theta {
        let theta: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0.0..2.0 * std::f64::consts::PI))
            .collect();
        let mut acc = vec![0.0; n * n];
        for _ in 0..n_x {
            let x: Vec<f64> = (0..circuit.n_features)
                .map(|_| rng.sample(StandardNormal))
                .collect();
            let (probs, jac) = probability_jacobian(circuit, &theta, &x)?;
            for (y, &p) in probs.iter().enumerate() {
                if p < PROB_CUTOFF {
                    continue;
                }
                for a in 0..n {
                    let ga = jac[a][y] / p;
                    for b in a..n {
                        acc[a * n + b] += p * ga * (jac[b][y] / p);
                    }
                }
            }
        }
        let w = 1.0 / (n_x as f64 * n_theta as f64);
        for a in 0..n {
            for b in a..n {
                mean[a * n + b] += acc[a * n + b] * w;
            }
        }
    }
    // Mirror the upper triangle.
    for a in 0..n {
        for b in 0..a {
            mean[a * n + b] = mean[b * n + a];
        }
    }

    let (eigenvalues, rank) = eigen_rank(&mean, n, RANK_TOLERANCE);
    Ok(FimResult {
        n,
        matrix: mean,
        eigenvalues,
        rank,
        tolerance: RANK_TOLERANCE,
        theta_draws: n_theta,
        x_draws: n_x,
    })
}

fn eigen_rank(matrix: &[f64], n: usize, tolerance: f64) -> (Vec<f64>, usize) {
    if n == 0 {
        return (Vec::new(), 0);
    }
    let m = DMatrix::from_row_slice(n, n, matrix);
    let mut eigenvalues: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let max = eigenvalues.first().copied().unwrap_or(0.0);
    let rank = if max <= 0.0 {
        0
    } else {
        eigenvalues.iter().filter(|&&ev| ev > tolerance * max).count()
    };
    (eigenvalues, rank)
}

/// A depth-parameterized circuit family for rank curves.
#[derive(Debug, Clone, Copy)]
pub enum CircuitFamily {
    Vvrq(VvrqConfig),
    Qdi(QdiConfig),
}

impl CircuitFamily {
    pub fn at_depth(&self, depth: usize) -> Result<CircuitSpec> {
        match self {
            CircuitFamily::Vvrq(base) => {
                let cfg = VvrqConfig { depth, ..*base };
                cfg.build_circuit()
            }
            CircuitFamily::Qdi(base) => {
                let cfg = QdiConfig {
                    blocks: depth,
                    ..*base
                };
                cfg.build_circuit()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CircuitFamily::Vvrq(_) => "vvrq",
            CircuitFamily::Qdi(_) => "qdi",
        }
    }
}

/// Numerical FIM rank at each depth.
pub fn fim_rank_curve(
    family: &CircuitFamily,
    depths: &[usize],
    n_theta: usize,
    n_x: usize,
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    let mut curve = Vec::with_capacity(depths.len());
    for &d in depths {
        let circuit = family.at_depth(d)?;
        let fim = fim_estimate(&circuit, n_theta, n_x, seed)?;
        curve.push((d, fim.rank));
    }
    Ok(curve)
}

/// Eigenvalue histogram normalized to unit mass, plus the fraction of
/// near-zero eigenvalues.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenHistogram {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub near_zero_fraction: f64,
}

pub fn fim_eigenspectrum(fim: &FimResult, bins: usize) -> EigenHistogram {
    let n = fim.eigenvalues.len().max(1);
    let max = fim.eigenvalues.first().copied().unwrap_or(0.0);
    let min = fim.eigenvalues.last().copied().unwrap_or(0.0).min(0.0);
    let hi = if max > min { max } else { min + 1.0 };
    let width = (hi - min) / bins as f64;
    let mut masses = vec![0.0; bins];
    for &ev in &fim.eigenvalues {
        let mut idx = ((ev - min) / width) as usize;
        if idx >= bins {
            idx = bins - 1;
        }
        masses[idx] += 1.0 / n as f64;
    }
    let edges = (0..=bins).map(|i| min + width * i as f64).collect();
    let near_zero = fim
        .eigenvalues
        .iter()
        .filter(|&&ev| ev <= fim.tolerance * max.max(f64::MIN_POSITIVE))
        .count();
    EigenHistogram {
        edges,
        masses,
        near_zero_fraction: near_zero as f64 / n as f64,
    }
}

/// QDI analysis family used for rank curves: the hybrid-LSTM gate layer with
/// variable block count.
pub fn qdi_family() -> CircuitFamily {
    CircuitFamily::Qdi(QdiConfig {
        qubits: 4,
        blocks: 1,
        reupload: true,
        readout: QdiReadout::VectorZ,
    })
}

/// VVRQ analysis family: the HQNN layer with variable depth.
pub fn vvrq_family() -> CircuitFamily {
    CircuitFamily::Vvrq(VvrqConfig::hqnn_default())
}
