//! Building-block layers: fully-connected, LSTM cell, and the two quantum
//! layers (VVRQ and QDI).
//!
//! Layer configs know how to build their circuits and count their
//! parameters; the tape-level step functions wire layer parameters (already
//! placed on a [`Tape`] as leaves) into one forward computation.

use std::sync::Arc;

use crate::autodiff::{Activation, Readout, Tape, TensorId};
use crate::error::{Error, Result};
use crate::qsim::{self, AngleSource, Axis, CircuitSpec, GateOp};

/// Entangling pattern of one VVRQ variational layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Entanglement {
    /// One RX rotation per qubit, then a CNOT ring.
    Basic,
    /// RZ-RY-RZ rotations per qubit, then a CNOT ring.
    Strong,
}

/// Vanilla variational repetitive quantum layer: angle embedding followed by
/// `depth` variational+entangling blocks, read out per qubit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VvrqConfig {
    pub qubits: usize,
    pub depth: usize,
    pub embedding_axis: Axis,
    pub entanglement: Entanglement,
    pub measure_axis: Axis,
}

impl VvrqConfig {
    /// The HQNN configuration: 8 qubits, 7 basic layers, RX embedding,
    /// Pauli-Z readout.
    pub fn hqnn_default() -> Self {
        VvrqConfig {
            qubits: 8,
            depth: 7,
            embedding_axis: Axis::X,
            entanglement: Entanglement::Basic,
            measure_axis: Axis::Z,
        }
    }

    pub fn param_count(&self) -> usize {
        match self.entanglement {
            Entanglement::Basic => self.qubits * self.depth,
            Entanglement::Strong => 3 * self.qubits * self.depth,
        }
    }

    pub fn feature_count(&self) -> usize {
        self.qubits
    }

    /// Gate list: embedding rotations, then per layer the variational
    /// rotations and a CNOT ring `CNOT(i, (i+1) mod q)`. Degenerate registers
    /// (`qubits == 1`) skip the ring.
    pub fn build_circuit(&self) -> Result<CircuitSpec> {
        let q = self.qubits;
        let mut gates = Vec::new();
        for j in 0..q {
            gates.push(rotation(self.embedding_axis, j, AngleSource::Feature(j)));
        }
        for layer in 0..self.depth {
            match self.entanglement {
                Entanglement::Basic => {
                    for j in 0..q {
                        gates.push(GateOp::Rx {
                            target: j,
                            angle: AngleSource::Param(layer * q + j),
                        });
                    }
                }
                Entanglement::Strong => {
                    for j in 0..q {
                        let base = 3 * (layer * q + j);
                        gates.push(GateOp::Rz {
                            target: j,
                            angle: AngleSource::Param(base),
                        });
                        gates.push(GateOp::Ry {
                            target: j,
                            angle: AngleSource::Param(base + 1),
                        });
                        gates.push(GateOp::Rz {
                            target: j,
                            angle: AngleSource::Param(base + 2),
                        });
                    }
                }
            }
            if q >= 2 {
                for j in 0..q {
                    gates.push(GateOp::Cnot {
                        control: j,
                        target: (j + 1) % q,
                    });
                }
            }
        }
        CircuitSpec::new(q, gates, self.param_count(), self.feature_count())
    }

    pub fn readout(&self) -> Readout {
        Readout::PerQubit(self.measure_axis)
    }
}

fn rotation(axis: Axis, target: usize, angle: AngleSource) -> GateOp {
    match axis {
        Axis::X => GateOp::Rx { target, angle },
        Axis::Y => GateOp::Ry { target, angle },
        Axis::Z => GateOp::Rz { target, angle },
    }
}

/// Readout mode of a QDI layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum QdiReadout {
    /// Fan-in CNOTs onto qubit 0, then a single Pauli-Y expectation.
    ScalarY,
    /// Pauli-Z expectation on every qubit.
    VectorZ,
}

/// Quantum depth-infused layer: an initial variational sub-layer, then
/// `blocks` encoding blocks (RZ angle embedding) each followed by its own
/// variational sub-layer (RY rotations plus an open CNOT chain).
///
/// With `reupload` set, every block re-encodes the same `qubits`-length
/// feature group; otherwise block `b` consumes features
/// `[b*qubits, (b+1)*qubits)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QdiConfig {
    pub qubits: usize,
    pub blocks: usize,
    pub reupload: bool,
    pub readout: QdiReadout,
}

impl QdiConfig {
    /// Per-gate layer inside the hybrid LSTM cell: 4 qubits, 3 re-uploading
    /// blocks, vector readout.
    pub fn hqlstm_gate() -> Self {
        QdiConfig {
            qubits: 4,
            blocks: 3,
            reupload: true,
            readout: QdiReadout::VectorZ,
        }
    }

    /// Forecast head of the hybrid sequence-to-sequence model: 4 qubits, a
    /// depth-4 lattice over 16 distinct features, scalar readout.
    pub fn hqseq2seq_head() -> Self {
        QdiConfig {
            qubits: 4,
            blocks: 4,
            reupload: false,
            readout: QdiReadout::ScalarY,
        }
    }

    /// One initial variational sub-layer plus one per block, one rotation
    /// per qubit each.
    pub fn param_count(&self) -> usize {
        self.qubits * (self.blocks + 1)
    }

    pub fn feature_count(&self) -> usize {
        if self.reupload {
            self.qubits
        } else {
            self.qubits * self.blocks
        }
    }

    pub fn output_len(&self) -> usize {
        match self.readout {
            QdiReadout::ScalarY => 1,
            QdiReadout::VectorZ => self.qubits,
        }
    }

    pub fn build_circuit(&self) -> Result<CircuitSpec> {
        let q = self.qubits;
        let mut gates = Vec::new();
        let variational = |gates: &mut Vec<GateOp>, layer: usize| {
            for j in 0..q {
                gates.push(GateOp::Ry {
                    target: j,
                    angle: AngleSource::Param(layer * q + j),
                });
            }
            for j in 0..q.saturating_sub(1) {
                gates.push(GateOp::Cnot {
                    control: j,
                    target: j + 1,
                });
            }
        };
        variational(&mut gates, 0);
        for b in 0..self.blocks {
            for j in 0..q {
                let slot = if self.reupload { j } else { b * q + j };
                gates.push(GateOp::Rz {
                    target: j,
                    angle: AngleSource::Feature(slot),
                });
            }
            variational(&mut gates, b + 1);
        }
        if self.readout == QdiReadout::ScalarY {
            for j in 1..q {
                gates.push(GateOp::Cnot {
                    control: j,
                    target: 0,
                });
            }
        }
        CircuitSpec::new(q, gates, self.param_count(), self.feature_count())
    }

    pub fn tape_readout(&self) -> Readout {
        match self.readout {
            QdiReadout::ScalarY => Readout::SingleQubit(0, Axis::Y),
            QdiReadout::VectorZ => Readout::PerQubit(Axis::Z),
        }
    }
}

/// Eager VVRQ evaluation: embeds `x`, runs the circuit, returns one
/// expectation per qubit.
pub fn vvrq_forward(cfg: &VvrqConfig, weights: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let circuit = cfg.build_circuit()?;
    let state = qsim::run_circuit(&circuit, weights, x)?;
    (0..cfg.qubits)
        .map(|j| qsim::expectation(&state, &qsim::Observable::single(j, cfg.measure_axis)))
        .collect()
}

/// Eager QDI evaluation; scalar readouts yield a single-element vector.
pub fn qdi_forward(cfg: &QdiConfig, weights: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let circuit = cfg.build_circuit()?;
    let state = qsim::run_circuit(&circuit, weights, x)?;
    match cfg.readout {
        QdiReadout::ScalarY => Ok(vec![qsim::expectation(
            &state,
            &qsim::Observable::single(0, Axis::Y),
        )?]),
        QdiReadout::VectorZ => (0..cfg.qubits)
            .map(|j| qsim::expectation(&state, &qsim::Observable::single(j, Axis::Z)))
            .collect(),
    }
}

/// Fully-connected forward: affine map plus activation.
pub fn fc_forward(
    tape: &mut Tape,
    x: TensorId,
    w: TensorId,
    b: TensorId,
    act: Activation,
) -> Result<TensorId> {
    let lin = tape.affine(x, w, b)?;
    Ok(match act {
        Activation::Identity => lin,
        other => tape.activation(lin, other),
    })
}

/// Shape block of one LSTM cell (dual-bias convention).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LstmDims {
    pub input: usize,
    pub hidden: usize,
}

impl LstmDims {
    /// `W_ih [4h, x]`, `W_hh [4h, h]`, `b_ih [4h]`, `b_hh [4h]`.
    pub fn param_count(&self) -> usize {
        4 * self.hidden * (self.input + self.hidden + 2)
    }
}

/// Tape leaves for one LSTM cell's parameter block.
#[derive(Debug, Clone, Copy)]
pub struct LstmCellIds {
    pub w_ih: TensorId,
    pub w_hh: TensorId,
    pub b_ih: TensorId,
    pub b_hh: TensorId,
}

/// One step of the standard LSTM recurrence.
///
/// Gate pre-activations are `W_ih x + b_ih + W_hh h + b_hh`, split in gate
/// order (input, forget, cell, output); updates are
/// `C_t = f.C_prev + i.g` and `h_t = o.tanh(C_t)`.
pub fn lstm_cell_step(
    tape: &mut Tape,
    ids: &LstmCellIds,
    x_t: TensorId,
    h_prev: TensorId,
    c_prev: TensorId,
) -> Result<(TensorId, TensorId)> {
    let from_x = tape.affine(x_t, ids.w_ih, ids.b_ih)?;
    let from_h = tape.affine(h_prev, ids.w_hh, ids.b_hh)?;
    let pre = tape.add(from_x, from_h)?;
    let groups = tape.split(pre, 4)?;
    let i = tape.activation(groups[0], Activation::Sigmoid);
    let f = tape.activation(groups[1], Activation::Sigmoid);
    let g = tape.activation(groups[2], Activation::Tanh);
    let o = tape.activation(groups[3], Activation::Sigmoid);
    finish_gates(tape, i, f, g, o, c_prev)
}

/// Tape leaves for one hybrid LSTM cell: the two input projections, then per
/// gate a QDI weight vector and an output projection back to `hidden`.
#[derive(Debug, Clone)]
pub struct HqLstmCellIds {
    pub w_x: TensorId,
    pub b_x: TensorId,
    pub w_h: TensorId,
    pub b_h: TensorId,
    pub qdi_weights: [TensorId; 4],
    pub w_out: [TensorId; 4],
    pub b_out: [TensorId; 4],
}

/// One step of the hybrid recurrence: project `x_t` and `h_prev` to `4 n_q`,
/// add, split into four gate groups, push each group through its own QDI
/// layer and output projection, then apply the classical gate algebra.
pub fn hq_lstm_cell_step(
    tape: &mut Tape,
    circuit: &Arc<CircuitSpec>,
    ids: &HqLstmCellIds,
    x_t: TensorId,
    h_prev: TensorId,
    c_prev: TensorId,
) -> Result<(TensorId, TensorId)> {
    let from_x = tape.affine(x_t, ids.w_x, ids.b_x)?;
    let from_h = tape.affine(h_prev, ids.w_h, ids.b_h)?;
    let pre = tape.add(from_x, from_h)?;
    let groups = tape.split(pre, 4)?;

    let mut gate_pre = Vec::with_capacity(4);
    for (gate, &group) in groups.iter().enumerate() {
        let q_out = tape.quantum(
            Arc::clone(circuit),
            ids.qdi_weights[gate],
            group,
            Readout::PerQubit(Axis::Z),
        )?;
        gate_pre.push(tape.affine(q_out, ids.w_out[gate], ids.b_out[gate])?);
    }

    let i = tape.activation(gate_pre[0], Activation::Sigmoid);
    let f = tape.activation(gate_pre[1], Activation::Sigmoid);
    let g = tape.activation(gate_pre[2], Activation::Tanh);
    let o = tape.activation(gate_pre[3], Activation::Sigmoid);
    finish_gates(tape, i, f, g, o, c_prev)
}

fn finish_gates(
    tape: &mut Tape,
    i: TensorId,
    f: TensorId,
    g: TensorId,
    o: TensorId,
    c_prev: TensorId,
) -> Result<(TensorId, TensorId)> {
    let keep = tape.mul(f, c_prev)?;
    let write = tape.mul(i, g)?;
    let c_t = tape.add(keep, write)?;
    let c_act = tape.activation(c_t, Activation::Tanh);
    let h_t = tape.mul(o, c_act)?;
    Ok((h_t, c_t))
}

/// Validates a feature vector length against a config before circuit use.
pub fn check_feature_len(expected: usize, got: usize, layer: &str) -> Result<()> {
    if expected != got {
        return Err(Error::shape(format!(
            "{layer} expects {expected} inputs, got {got}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vvrq_identity_circuit_reads_ones() {
        let cfg = VvrqConfig {
            qubits: 3,
            depth: 2,
            embedding_axis: Axis::X,
            entanglement: Entanglement::Basic,
            measure_axis: Axis::Z,
        };
        let out = vvrq_forward(&cfg, &vec![0.0; cfg.param_count()], &[0.0, 0.0, 0.0]).unwrap();
        for v in out {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vvrq_single_qubit_degenerate() {
        let cfg = VvrqConfig {
            qubits: 1,
            depth: 1,
            embedding_axis: Axis::X,
            entanglement: Entanglement::Basic,
            measure_axis: Axis::Z,
        };
        let out = vvrq_forward(&cfg, &[0.0], &[std::f64::consts::PI]).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn vvrq_hqnn_weight_count() {
        let cfg = VvrqConfig::hqnn_default();
        assert_eq!(cfg.param_count(), 56);
        let circuit = cfg.build_circuit().unwrap();
        assert_eq!(circuit.n_params, 56);
        assert_eq!(circuit.n_features, 8);
    }

    #[test]
    fn vvrq_strong_triples_params() {
        let cfg = VvrqConfig {
            qubits: 4,
            depth: 2,
            embedding_axis: Axis::Y,
            entanglement: Entanglement::Strong,
            measure_axis: Axis::Z,
        };
        assert_eq!(cfg.param_count(), 24);
        cfg.build_circuit().unwrap().validate().unwrap();
    }

    #[test]
    fn vvrq_depth_zero_reads_embedding_directly() {
        // Test-only variant: without variational layers each output is the
        // cosine of its own input under X embedding and Z readout.
        let cfg = VvrqConfig {
            qubits: 3,
            depth: 0,
            embedding_axis: Axis::X,
            entanglement: Entanglement::Basic,
            measure_axis: Axis::Z,
        };
        let x = [0.3, 1.1, -0.4];
        let out = vvrq_forward(&cfg, &[], &x).unwrap();
        for (v, xi) in out.iter().zip(&x) {
            assert!((v - xi.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn vvrq_rejects_bad_lengths() {
        let cfg = VvrqConfig::hqnn_default();
        assert!(vvrq_forward(&cfg, &[0.0; 3], &[0.0; 8]).is_err());
        assert!(vvrq_forward(&cfg, &[0.0; 56], &[0.0; 5]).is_err());
    }

    #[test]
    fn qdi_zero_inputs_scalar_zero() {
        let cfg = QdiConfig::hqseq2seq_head();
        let out = qdi_forward(&cfg, &vec![0.0; 20], &vec![0.0; 16]).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].abs() < 1e-12);
    }

    #[test]
    fn qdi_lattice_counts() {
        let cfg = QdiConfig::hqseq2seq_head();
        assert_eq!(cfg.param_count(), 20);
        assert_eq!(cfg.feature_count(), 16);
        let gate = QdiConfig::hqlstm_gate();
        assert_eq!(gate.param_count(), 16);
        assert_eq!(gate.feature_count(), 4);
    }

    #[test]
    fn qdi_scalar_stays_bounded() {
        use rand::{Rng, SeedableRng};
        let cfg = QdiConfig::hqseq2seq_head();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let w: Vec<f64> = (0..20).map(|_| rng.gen_range(-6.0..6.0)).collect();
            let x: Vec<f64> = (0..16).map(|_| rng.gen_range(-6.0..6.0)).collect();
            let out = qdi_forward(&cfg, &w, &x).unwrap();
            assert!(out[0] >= -1.0 - 1e-12 && out[0] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn qdi_weight_periodicity() {
        use rand::{Rng, SeedableRng};
        let cfg = QdiConfig::hqlstm_gate();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let w: Vec<f64> = (0..16).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let base = qdi_forward(&cfg, &w, &x).unwrap();
        for k in 0..w.len() {
            let mut shifted = w.clone();
            shifted[k] += 2.0 * std::f64::consts::PI;
            let out = qdi_forward(&cfg, &shifted, &x).unwrap();
            for (a, b) in base.iter().zip(&out) {
                assert!((a - b).abs() < 1e-10, "weight {k} breaks periodicity");
            }
        }
    }

    #[test]
    fn lstm_zero_parameters_zero_hidden() {
        let dims = LstmDims { input: 3, hidden: 2 };
        let h = dims.hidden;
        let mut tape = Tape::new();
        let ids = LstmCellIds {
            w_ih: tape.leaf_matrix(4 * h, dims.input, vec![0.0; 4 * h * dims.input]).unwrap(),
            w_hh: tape.leaf_matrix(4 * h, h, vec![0.0; 4 * h * h]).unwrap(),
            b_ih: tape.leaf(vec![0.0; 4 * h]),
            b_hh: tape.leaf(vec![0.0; 4 * h]),
        };
        let x = tape.leaf(vec![0.9, -2.0, 5.0]);
        let h0 = tape.leaf(vec![0.0; h]);
        let c0 = tape.leaf(vec![0.0; h]);
        let (h1, c1) = lstm_cell_step(&mut tape, &ids, x, h0, c0).unwrap();
        assert!(tape.values(h1).iter().all(|v| *v == 0.0));
        assert!(tape.values(c1).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lstm_param_count_matches_dual_bias_formula() {
        let dims = LstmDims { input: 5, hidden: 21 };
        assert_eq!(dims.param_count(), 2352);
    }

    #[test]
    fn lstm_forget_bias_saturation_preserves_cell() {
        let mut tape = Tape::new();
        // b_ih layout: [i, f, g, o]; push the forget gate to saturation and
        // the input gate far negative.
        let ids = LstmCellIds {
            w_ih: tape.leaf_matrix(4, 1, vec![0.0; 4]).unwrap(),
            w_hh: tape.leaf_matrix(4, 1, vec![0.0; 4]).unwrap(),
            b_ih: tape.leaf(vec![-30.0, 10.0, 0.0, 0.0]),
            b_hh: tape.leaf(vec![0.0; 4]),
        };
        let x = tape.leaf(vec![0.7]);
        let h0 = tape.leaf(vec![0.0]);
        let c0 = tape.leaf(vec![0.8]);
        let (_h1, c1) = lstm_cell_step(&mut tape, &ids, x, h0, c0).unwrap();
        assert!((tape.values(c1)[0] - 0.8).abs() < 1e-4);
    }

    #[test]
    fn hq_cell_zero_weights_zero_hidden() {
        let cfg = QdiConfig::hqlstm_gate();
        let circuit = Arc::new(cfg.build_circuit().unwrap());
        let n_q = cfg.qubits;
        let h_dim = 20;
        let mut tape = Tape::new();
        let zeros_mat = |tape: &mut Tape, r: usize, c: usize| {
            tape.leaf_matrix(r, c, vec![0.0; r * c]).unwrap()
        };
        let ids = HqLstmCellIds {
            w_x: zeros_mat(&mut tape, 4 * n_q, 5),
            b_x: tape.leaf(vec![0.0; 4 * n_q]),
            w_h: zeros_mat(&mut tape, 4 * n_q, h_dim),
            b_h: tape.leaf(vec![0.0; 4 * n_q]),
            qdi_weights: [
                tape.leaf(vec![0.0; cfg.param_count()]),
                tape.leaf(vec![0.0; cfg.param_count()]),
                tape.leaf(vec![0.0; cfg.param_count()]),
                tape.leaf(vec![0.0; cfg.param_count()]),
            ],
            w_out: [
                zeros_mat(&mut tape, h_dim, n_q),
                zeros_mat(&mut tape, h_dim, n_q),
                zeros_mat(&mut tape, h_dim, n_q),
                zeros_mat(&mut tape, h_dim, n_q),
            ],
            b_out: [
                tape.leaf(vec![0.0; h_dim]),
                tape.leaf(vec![0.0; h_dim]),
                tape.leaf(vec![0.0; h_dim]),
                tape.leaf(vec![0.0; h_dim]),
            ],
        };
        let x = tape.leaf(vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        let h0 = tape.leaf(vec![0.0; h_dim]);
        let c0 = tape.leaf(vec![0.0; h_dim]);
        let (h1, _c1) = hq_lstm_cell_step(&mut tape, &circuit, &ids, x, h0, c0).unwrap();
        assert!(tape.values(h1).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn fc_forward_identity_passthrough() {
        let mut tape = Tape::new();
        let x = tape.leaf(vec![1.0, -2.0]);
        let w = tape.leaf_matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = tape.leaf(vec![0.0, 0.0]);
        let y = fc_forward(&mut tape, x, w, b, Activation::Identity).unwrap();
        assert_eq!(tape.values(y), &[1.0, -2.0]);
    }
}
