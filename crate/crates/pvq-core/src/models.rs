//! Assembly of the six forecasting architectures, their parameter
//! registries, forecast entry points, and model-file serialization.
//!
//! Hour-ahead models (MLP, HQNN, LSTM, HQLSTM) consume a 24-hour window of
//! all five features and emit one scaled power value. The two
//! sequence-to-sequence models consume an arbitrary-length history and
//! autoregressively decode an arbitrary horizon.

use std::ops::Range;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Activation, Tape, TensorId};
use crate::data::{ScalerStats, N_FEATURES};
use crate::error::{Error, Result};
use crate::layers::{
    fc_forward, hq_lstm_cell_step, lstm_cell_step, HqLstmCellIds, LstmCellIds, LstmDims,
    QdiConfig, VvrqConfig,
};
use crate::qsim::CircuitSpec;

/// Hour-ahead input window length in hours.
pub const HOUR_WINDOW: usize = 24;
/// Training sequence length for the sequence-to-sequence pair.
pub const SEQ_WINDOW: usize = 96;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mlp,
    Hqnn,
    Lstm,
    HqLstm,
    Seq2Seq,
    HqSeq2Seq,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Mlp,
        ModelKind::Hqnn,
        ModelKind::Lstm,
        ModelKind::HqLstm,
        ModelKind::Seq2Seq,
        ModelKind::HqSeq2Seq,
    ];

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "mlp" => Ok(ModelKind::Mlp),
            "hqnn" => Ok(ModelKind::Hqnn),
            "lstm" => Ok(ModelKind::Lstm),
            "hqlstm" => Ok(ModelKind::HqLstm),
            "seq2seq" => Ok(ModelKind::Seq2Seq),
            "hqseq2seq" => Ok(ModelKind::HqSeq2Seq),
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Hqnn => "hqnn",
            ModelKind::Lstm => "lstm",
            ModelKind::HqLstm => "hqlstm",
            ModelKind::Seq2Seq => "seq2seq",
            ModelKind::HqSeq2Seq => "hqseq2seq",
        }
    }

    pub fn is_sequence(self) -> bool {
        matches!(self, ModelKind::Seq2Seq | ModelKind::HqSeq2Seq)
    }

    /// Registry totals for the reference configurations. The classical
    /// models and the HQNN reproduce the quoted reference counts exactly;
    /// the hybrid recurrent variants are wiring-dependent and their registry
    /// counts are reconciled against these in the README.
    pub fn reference_total_params(self) -> usize {
        match self {
            ModelKind::Mlp => 3987,
            ModelKind::Hqnn => 2266,
            ModelKind::Lstm => 2857,
            ModelKind::HqLstm => 1109,
            ModelKind::Seq2Seq => 2705,
            ModelKind::HqSeq2Seq => 2750,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One named block of the flat parameter vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSegment {
    pub name: String,
    pub offset: usize,
    /// `[rows, cols]` for matrices, `[len]` for vectors.
    pub shape: Vec<usize>,
}

impl ParamSegment {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Named flat parameter storage; the single source of truth for parameter
/// counting and serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamRegistry {
    segments: Vec<ParamSegment>,
    values: Vec<f64>,
}

impl ParamRegistry {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn set_values(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::shape(format!(
                "registry holds {} parameters, got {}",
                self.values.len(),
                values.len()
            )));
        }
        self.values = values;
        Ok(())
    }

    pub fn segments(&self) -> &[ParamSegment] {
        &self.segments
    }

    pub fn segment(&self, name: &str) -> Option<&ParamSegment> {
        self.segments.iter().find(|s| s.name == name)
    }

    pub fn segment_values(&self, name: &str) -> Option<&[f64]> {
        self.segment(name).map(|s| &self.values[s.range()])
    }
}

struct RegistryBuilder {
    segments: Vec<ParamSegment>,
    values: Vec<f64>,
    rng: ChaCha8Rng,
}

impl RegistryBuilder {
    fn new(seed: u64) -> Self {
        RegistryBuilder {
            segments: Vec::new(),
            values: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform init in `[-bound, bound]`, the usual fan-in convention for
    /// dense and recurrent blocks.
    fn dense(&mut self, name: &str, shape: &[usize], fan_in: usize) -> &mut Self {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        self.push(name, shape, |rng| rng.gen_range(-bound..bound))
    }

    /// Rotation-angle init, uniform over one period.
    fn angles(&mut self, name: &str, len: usize) -> &mut Self {
        self.push(name, &[len], |rng| {
            rng.gen_range(0.0..2.0 * std::f64::consts::PI)
        })
    }

    fn push(&mut self, name: &str, shape: &[usize], mut init: impl FnMut(&mut ChaCha8Rng) -> f64) -> &mut Self {
        let len: usize = shape.iter().product();
        let offset = self.values.len();
        for _ in 0..len {
            let v = init(&mut self.rng);
            self.values.push(v);
        }
        self.segments.push(ParamSegment {
            name: name.to_string(),
            offset,
            shape: shape.to_vec(),
        });
        self
    }

    fn finish(self) -> ParamRegistry {
        ParamRegistry {
            segments: self.segments,
            values: self.values,
        }
    }
}

/// Everything needed to rebuild a model's structure (but not its weights).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub kind: ModelKind,
    /// Hour-ahead: fully-connected sizes. Sequence pair: `[enc_in, hidden, dec_in]`.
    pub layer_dims: Vec<usize>,
    pub window: usize,
    pub vvrq: Option<VvrqConfig>,
    pub qdi: Option<QdiConfig>,
    pub dropout: f64,
    pub total_params: usize,
}

/// A forecasting model: descriptor, parameter registry, and (after training)
/// the scaler statistics needed to map to and from physical units.
#[derive(Debug, Clone)]
pub struct Model {
    pub descriptor: ModelDescriptor,
    pub params: ParamRegistry,
    pub scaler: Option<ScalerStats>,
    /// Circuits are immutable once built and shared across forward passes.
    vvrq_circuit: Option<Arc<CircuitSpec>>,
    qdi_circuit: Option<Arc<CircuitSpec>>,
}

pub fn build_mlp(seed: u64) -> Model {
    let dims = vec![HOUR_WINDOW * N_FEATURES, 32, 3, 3, 1];
    let mut b = RegistryBuilder::new(seed);
    for (i, pair) in dims.windows(2).enumerate() {
        let (n_in, n_out) = (pair[0], pair[1]);
        b.dense(&format!("fc{}.weight", i + 1), &[n_out, n_in], n_in);
        b.dense(&format!("fc{}.bias", i + 1), &[n_out], n_in);
    }
    let params = b.finish();
    Model::assemble(
        ModelDescriptor {
            kind: ModelKind::Mlp,
            layer_dims: dims,
            window: HOUR_WINDOW,
            vvrq: None,
            qdi: None,
            dropout: 0.0,
            total_params: params.len(),
        },
        params,
    )
}

pub fn build_hqnn(seed: u64) -> Model {
    let dims = vec![HOUR_WINDOW * N_FEATURES, 17, 8];
    let vvrq = VvrqConfig::hqnn_default();
    let mut b = RegistryBuilder::new(seed);
    b.dense("fc1.weight", &[17, 120], 120);
    b.dense("fc1.bias", &[17], 120);
    b.dense("fc2.weight", &[8, 17], 17);
    b.dense("fc2.bias", &[8], 17);
    b.angles("vvrq.weights", vvrq.param_count());
    b.dense("head.weight", &[1, 8], 8);
    b.dense("head.bias", &[1], 8);
    let params = b.finish();
    Model::assemble(
        ModelDescriptor {
            kind: ModelKind::Hqnn,
            layer_dims: dims,
            window: HOUR_WINDOW,
            vvrq: Some(vvrq),
            qdi: None,
            dropout: 0.0,
            total_params: params.len(),
        },
        params,
    )
}

pub fn build_lstm(seed: u64) -> Model {
    let dims = LstmDims { input: N_FEATURES, hidden: 21 };
    let mut b = RegistryBuilder::new(seed);
    push_lstm_block(&mut b, "lstm", dims);
    let head_in = HOUR_WINDOW * dims.hidden;
    b.dense("head.weight", &[1, head_in], head_in);
    b.dense("head.bias", &[1], head_in);
    let params = b.finish();
    Model::assemble(
        ModelDescriptor {
            kind: ModelKind::Lstm,
            layer_dims: vec![dims.input, dims.hidden],
            window: HOUR_WINDOW,
            vvrq: None,
            qdi: None,
            dropout: 0.158,
            total_params: params.len(),
        },
        params,
    )
}

pub fn build_hqlstm(seed: u64) -> Model {
    let h_dim = 20;
    let qdi = QdiConfig::hqlstm_gate();
    let n_q = qdi.qubits;
    let mut b = RegistryBuilder::new(seed);
    b.dense("in_x.weight", &[4 * n_q, N_FEATURES], N_FEATURES);
    b.dense("in_x.bias", &[4 * n_q], N_FEATURES);
    b.dense("in_h.weight", &[4 * n_q, h_dim], h_dim);
    b.dense("in_h.bias", &[4 * n_q], h_dim);
    for gate in GATE_NAMES {
        b.angles(&format!("qdi.{gate}.weights"), qdi.param_count());
    }
    for gate in GATE_NAMES {
        b.dense(&format!("out.{gate}.weight"), &[h_dim, n_q], n_q);
        b.dense(&format!("out.{gate}.bias"), &[h_dim], n_q);
    }
    let head_in = HOUR_WINDOW * h_dim;
    b.dense("head.weight", &[1, head_in], head_in);
    b.dense("head.bias", &[1], head_in);
    let params = b.finish();
    Model::assemble(
        ModelDescriptor {
            kind: ModelKind::HqLstm,
            layer_dims: vec![N_FEATURES, h_dim],
            window: HOUR_WINDOW,
            vvrq: None,
            qdi: Some(qdi),
            dropout: 0.239,
            total_params: params.len(),
        },
        params,
    )
}

pub fn build_seq2seq(seed: u64) -> Model {
    let params = seq2seq_registry(seed, false);
    Model::assemble(
        ModelDescriptor {
            kind: ModelKind::Seq2Seq,
            layer_dims: vec![N_FEATURES, 16, 1],
            window: SEQ_WINDOW,
            vvrq: None,
            qdi: None,
            dropout: 0.0,
            total_params: params.len(),
        },
        params,
    )
}

pub fn build_hqseq2seq(seed: u64) -> Model {
    let params = seq2seq_registry(seed, true);
    Model::assemble(
        ModelDescriptor {
            kind: ModelKind::HqSeq2Seq,
            layer_dims: vec![N_FEATURES, 16, 1],
            window: SEQ_WINDOW,
            vvrq: None,
            qdi: Some(QdiConfig::hqseq2seq_head()),
            dropout: 0.0,
            total_params: params.len(),
        },
        params,
    )
}

const GATE_NAMES: [&str; 4] = ["i", "f", "g", "o"];

fn push_lstm_block(b: &mut RegistryBuilder, prefix: &str, dims: LstmDims) {
    let h = dims.hidden;
    b.dense(&format!("{prefix}.w_ih"), &[4 * h, dims.input], h);
    b.dense(&format!("{prefix}.w_hh"), &[4 * h, h], h);
    b.dense(&format!("{prefix}.b_ih"), &[4 * h], h);
    b.dense(&format!("{prefix}.b_hh"), &[4 * h], h);
}

fn seq2seq_registry(seed: u64, hybrid: bool) -> ParamRegistry {
    let hidden = 16;
    let mut b = RegistryBuilder::new(seed);
    push_lstm_block(&mut b, "enc", LstmDims { input: N_FEATURES, hidden });
    push_lstm_block(&mut b, "dec", LstmDims { input: 1, hidden });
    if hybrid {
        b.angles("qdi.weights", QdiConfig::hqseq2seq_head().param_count());
    } else {
        b.dense("head.weight", &[1, hidden], hidden);
        b.dense("head.bias", &[1], hidden);
    }
    b.finish()
}

impl Model {
    fn assemble(descriptor: ModelDescriptor, params: ParamRegistry) -> Model {
        let vvrq_circuit = descriptor
            .vvrq
            .map(|cfg| Arc::new(cfg.build_circuit().expect("valid VVRQ config")));
        let qdi_circuit = descriptor
            .qdi
            .map(|cfg| Arc::new(cfg.build_circuit().expect("valid QDI config")));
        Model {
            descriptor,
            params,
            scaler: None,
            vvrq_circuit,
            qdi_circuit,
        }
    }

    pub fn build(kind: ModelKind, seed: u64) -> Model {
        match kind {
            ModelKind::Mlp => build_mlp(seed),
            ModelKind::Hqnn => build_hqnn(seed),
            ModelKind::Lstm => build_lstm(seed),
            ModelKind::HqLstm => build_hqlstm(seed),
            ModelKind::Seq2Seq => build_seq2seq(seed),
            ModelKind::HqSeq2Seq => build_hqseq2seq(seed),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.descriptor.kind
    }

    pub fn total_params(&self) -> usize {
        self.params.len()
    }

    /// Places every registry segment on a tape as a leaf, preserving order.
    pub(crate) fn place_params(&self, tape: &mut Tape) -> Vec<TensorId> {
        self.params
            .segments()
            .iter()
            .map(|seg| {
                let vals = self.params.values()[seg.range()].to_vec();
                if seg.shape.len() == 2 {
                    tape.leaf_matrix(seg.shape[0], seg.shape[1], vals)
                        .expect("registry shapes are consistent")
                } else {
                    tape.leaf(vals)
                }
            })
            .collect()
    }

    fn seg_id(&self, placed: &[TensorId], name: &str) -> TensorId {
        let idx = self
            .params
            .segments()
            .iter()
            .position(|s| s.name == name)
            .unwrap_or_else(|| panic!("missing registry segment `{name}`"));
        placed[idx]
    }

    /// Gathers leaf gradients back into one flat vector aligned with the
    /// registry layout. Call after `tape.backward`.
    pub(crate) fn collect_grads(&self, tape: &Tape, placed: &[TensorId]) -> Vec<f64> {
        let mut grads = vec![0.0; self.params.len()];
        for (seg, id) in self.params.segments().iter().zip(placed) {
            grads[seg.range()].copy_from_slice(tape.grad(*id));
        }
        grads
    }

    /// Forward pass for hour-ahead models. `window_leaf` is the flattened
    /// 24x5 input already on the tape; dropout runs only when a training RNG
    /// is supplied.
    pub(crate) fn forward_hour(
        &self,
        tape: &mut Tape,
        placed: &[TensorId],
        window_leaf: TensorId,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<TensorId> {
        match self.descriptor.kind {
            ModelKind::Mlp => {
                let mut x = window_leaf;
                let n_layers = self.descriptor.layer_dims.len() - 1;
                for i in 1..=n_layers {
                    let act = if i == n_layers {
                        Activation::Identity
                    } else {
                        Activation::Tanh
                    };
                    let w = self.seg_id(placed, &format!("fc{i}.weight"));
                    let b = self.seg_id(placed, &format!("fc{i}.bias"));
                    x = fc_forward(tape, x, w, b, act)?;
                }
                Ok(x)
            }
            ModelKind::Hqnn => {
                let fc1w = self.seg_id(placed, "fc1.weight");
                let fc1b = self.seg_id(placed, "fc1.bias");
                let h1 = fc_forward(tape, window_leaf, fc1w, fc1b, Activation::Tanh)?;
                let fc2w = self.seg_id(placed, "fc2.weight");
                let fc2b = self.seg_id(placed, "fc2.bias");
                let h2 = fc_forward(tape, h1, fc2w, fc2b, Activation::Tanh)?;
                let weights = self.seg_id(placed, "vvrq.weights");
                let circuit = self.vvrq_circuit.as_ref().expect("HQNN has a VVRQ circuit");
                let readout = self.descriptor.vvrq.unwrap().readout();
                let q_out = tape.quantum(Arc::clone(circuit), weights, h2, readout)?;
                let hw = self.seg_id(placed, "head.weight");
                let hb = self.seg_id(placed, "head.bias");
                fc_forward(tape, q_out, hw, hb, Activation::Identity)
            }
            ModelKind::Lstm => {
                let ids = LstmCellIds {
                    w_ih: self.seg_id(placed, "lstm.w_ih"),
                    w_hh: self.seg_id(placed, "lstm.w_hh"),
                    b_ih: self.seg_id(placed, "lstm.b_ih"),
                    b_hh: self.seg_id(placed, "lstm.b_hh"),
                };
                let hidden = self.descriptor.layer_dims[1];
                self.recurrent_head(tape, placed, window_leaf, dropout_rng, |tape, x_t, h, c| {
                    lstm_cell_step(tape, &ids, x_t, h, c)
                }, hidden)
            }
            ModelKind::HqLstm => {
                let ids = HqLstmCellIds {
                    w_x: self.seg_id(placed, "in_x.weight"),
                    b_x: self.seg_id(placed, "in_x.bias"),
                    w_h: self.seg_id(placed, "in_h.weight"),
                    b_h: self.seg_id(placed, "in_h.bias"),
                    qdi_weights: GATE_NAMES
                        .map(|g| self.seg_id(placed, &format!("qdi.{g}.weights"))),
                    w_out: GATE_NAMES.map(|g| self.seg_id(placed, &format!("out.{g}.weight"))),
                    b_out: GATE_NAMES.map(|g| self.seg_id(placed, &format!("out.{g}.bias"))),
                };
                let circuit = Arc::clone(self.qdi_circuit.as_ref().expect("HQLSTM has a QDI circuit"));
                let hidden = self.descriptor.layer_dims[1];
                self.recurrent_head(tape, placed, window_leaf, dropout_rng, move |tape, x_t, h, c| {
                    hq_lstm_cell_step(tape, &circuit, &ids, x_t, h, c)
                }, hidden)
            }
            kind => Err(Error::contract(format!(
                "{kind} is a sequence model; use the sequence forecast path"
            ))),
        }
    }

    /// Shared recurrent trunk: iterate a cell over the window, dropout on
    /// each hidden state (training only), concatenate, one-neuron head.
    fn recurrent_head(
        &self,
        tape: &mut Tape,
        placed: &[TensorId],
        window_leaf: TensorId,
        mut dropout_rng: Option<&mut ChaCha8Rng>,
        mut step: impl FnMut(&mut Tape, TensorId, TensorId, TensorId) -> Result<(TensorId, TensorId)>,
        hidden: usize,
    ) -> Result<TensorId> {
        let steps = tape.len(window_leaf) / N_FEATURES;
        let mut h = tape.leaf(vec![0.0; hidden]);
        let mut c = tape.leaf(vec![0.0; hidden]);
        let mut collected = Vec::with_capacity(steps);
        for t in 0..steps {
            let x_t = tape.slice(window_leaf, t * N_FEATURES, N_FEATURES)?;
            let (h_t, c_t) = step(tape, x_t, h, c)?;
            h = h_t;
            c = c_t;
            let kept = match dropout_rng.as_deref_mut() {
                Some(rng) => tape.dropout(h_t, self.descriptor.dropout, rng),
                None => h_t,
            };
            collected.push(kept);
        }
        let concat = tape.concat(&collected);
        let hw = self.seg_id(placed, "head.weight");
        let hb = self.seg_id(placed, "head.bias");
        fc_forward(tape, concat, hw, hb, Activation::Identity)
    }

    /// Forward pass for the sequence pair: encode the full history, then
    /// decode `horizon` steps autoregressively starting from the most recent
    /// power value. Returns the `[horizon]` output tensor.
    pub(crate) fn forward_seq(
        &self,
        tape: &mut Tape,
        placed: &[TensorId],
        history_leaf: TensorId,
        horizon: usize,
    ) -> Result<TensorId> {
        if !self.descriptor.kind.is_sequence() {
            return Err(Error::contract(format!(
                "{} is an hour-ahead model; use the window forecast path",
                self.descriptor.kind
            )));
        }
        if horizon == 0 {
            return Err(Error::contract("horizon must be at least 1"));
        }
        let t_len = tape.len(history_leaf);
        if t_len == 0 || t_len % N_FEATURES != 0 {
            return Err(Error::contract(format!(
                "history must be a non-empty multiple of {N_FEATURES} values, got {t_len}"
            )));
        }
        let steps = t_len / N_FEATURES;
        let hidden = self.descriptor.layer_dims[1];

        let enc = LstmCellIds {
            w_ih: self.seg_id(placed, "enc.w_ih"),
            w_hh: self.seg_id(placed, "enc.w_hh"),
            b_ih: self.seg_id(placed, "enc.b_ih"),
            b_hh: self.seg_id(placed, "enc.b_hh"),
        };
        let mut h = tape.leaf(vec![0.0; hidden]);
        let mut c = tape.leaf(vec![0.0; hidden]);
        for t in 0..steps {
            let x_t = tape.slice(history_leaf, t * N_FEATURES, N_FEATURES)?;
            let (h_t, c_t) = lstm_cell_step(tape, &enc, x_t, h, c)?;
            h = h_t;
            c = c_t;
        }

        let dec = LstmCellIds {
            w_ih: self.seg_id(placed, "dec.w_ih"),
            w_hh: self.seg_id(placed, "dec.w_hh"),
            b_ih: self.seg_id(placed, "dec.b_ih"),
            b_hh: self.seg_id(placed, "dec.b_hh"),
        };
        // Seed input: power component of the last history row.
        let mut input = tape.slice(
            history_leaf,
            (steps - 1) * N_FEATURES + crate::data::POWER_COL,
            1,
        )?;
        let mut outputs = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let (h_t, c_t) = lstm_cell_step(tape, &dec, input, h, c)?;
            h = h_t;
            c = c_t;
            let y = match self.descriptor.kind {
                ModelKind::Seq2Seq => {
                    let hw = self.seg_id(placed, "head.weight");
                    let hb = self.seg_id(placed, "head.bias");
                    fc_forward(tape, h_t, hw, hb, Activation::Identity)?
                }
                ModelKind::HqSeq2Seq => {
                    let weights = self.seg_id(placed, "qdi.weights");
                    let circuit = self.qdi_circuit.as_ref().expect("hybrid head circuit");
                    let readout = self.descriptor.qdi.unwrap().tape_readout();
                    tape.quantum(Arc::clone(circuit), weights, h_t, readout)?
                }
                _ => unreachable!(),
            };
            outputs.push(y);
            input = y;
        }
        Ok(tape.concat(&outputs))
    }

    /// Deterministic scalar forecast from a scaled 24x5 window (flattened,
    /// hour-major). Dropout is disabled; repeated calls are identical.
    pub fn forecast_next_hour(&self, window: &[f64]) -> Result<f64> {
        if self.descriptor.kind.is_sequence() {
            return Err(Error::contract(format!(
                "{} forecasts sequences; use seq2seq_forecast",
                self.descriptor.kind
            )));
        }
        let expect = self.descriptor.window * N_FEATURES;
        if window.len() != expect {
            return Err(Error::shape(format!(
                "window must hold {expect} values, got {}",
                window.len()
            )));
        }
        let mut tape = Tape::new();
        let placed = self.place_params(&mut tape);
        let leaf = tape.leaf(window.to_vec());
        let out = self.forward_hour(&mut tape, &placed, leaf, None)?;
        Ok(tape.scalar(out))
    }

    /// Autoregressive multi-hour forecast from a scaled T x 5 history
    /// (flattened, hour-major). Works for any `history` length >= 1 and any
    /// `horizon` >= 1.
    pub fn seq2seq_forecast(&self, history: &[f64], horizon: usize) -> Result<Vec<f64>> {
        if history.is_empty() {
            return Err(Error::contract("history must not be empty"));
        }
        if history.len() % N_FEATURES != 0 {
            return Err(Error::shape(format!(
                "history length {} is not a multiple of {N_FEATURES}",
                history.len()
            )));
        }
        let mut tape = Tape::new();
        let placed = self.place_params(&mut tape);
        let leaf = tape.leaf(history.to_vec());
        let out = self.forward_seq(&mut tape, &placed, leaf, horizon)?;
        Ok(tape.values(out).to_vec())
    }
}

/// On-disk model document. JSON keeps the flat parameter array as 64-bit
/// floats with shortest-round-trip encoding, so save/load is bit-exact.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    descriptor: ModelDescriptor,
    scaler: Option<ScalerStats>,
    params: Vec<f64>,
}

impl Model {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let doc = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            descriptor: self.descriptor.clone(),
            scaler: self.scaler,
            params: self.params.values().to_vec(),
        };
        let text = serde_json::to_string_pretty(&doc)
            .map_err(|e| Error::Format(format!("encode failed: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Model> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let doc: ModelFile = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("decode failed: {e}")))?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {} (expected {MODEL_FORMAT_VERSION})",
                doc.format_version
            )));
        }
        let mut model = Model::build(doc.descriptor.kind, 0);
        if model.descriptor.total_params != doc.descriptor.total_params
            || doc.params.len() != model.params.len()
        {
            return Err(Error::Format(format!(
                "parameter count mismatch: file has {}, architecture needs {}",
                doc.params.len(),
                model.params.len()
            )));
        }
        model.descriptor = doc.descriptor;
        model.params.set_values(doc.params)?;
        model.scaler = doc.scaler;
        Ok(model)
    }
}
