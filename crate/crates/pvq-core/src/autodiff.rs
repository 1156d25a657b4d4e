//! Minimal reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Tape`] records operations eagerly (forward values computed at record
//! time) in topological order; [`Tape::backward`] then walks the record in
//! reverse, accumulating gradients into every node. The op set is exactly
//! what fully-connected and LSTM graphs with embedded quantum layers need.
//! Quantum nodes delegate their local vector-Jacobian product to the adjoint
//! method in [`crate::qsim`].

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::qsim::{self, Axis, CircuitSpec, Observable};

/// Handle to a node on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Identity,
}

/// How a quantum node turns its final state into classical outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    /// One expectation per qubit on the given axis; output length = n_qubits.
    PerQubit(Axis),
    /// Single expectation on one qubit; output length = 1.
    SingleQubit(usize, Axis),
}

impl Readout {
    fn observables(&self, n_qubits: usize) -> Vec<Observable> {
        match *self {
            Readout::PerQubit(axis) => (0..n_qubits)
                .map(|q| Observable::single(q, axis))
                .collect(),
            Readout::SingleQubit(q, axis) => vec![Observable::single(q, axis)],
        }
    }
}

enum Op {
    Leaf,
    Affine { x: TensorId, w: TensorId, b: TensorId },
    Activation { x: TensorId, kind: Activation },
    Add { a: TensorId, b: TensorId },
    Mul { a: TensorId, b: TensorId },
    Concat { parts: Vec<TensorId> },
    Slice { x: TensorId, start: usize },
    Dropout { x: TensorId, mask: Vec<f64> },
    Quantum {
        circuit: Arc<CircuitSpec>,
        weights: TensorId,
        features: TensorId,
        readout: Readout,
    },
    Mse { pred: TensorId, target: TensorId },
}

struct Node {
    shape: Vec<usize>,
    values: Vec<f64>,
    op: Op,
}

/// Ordered record of one forward computation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Vec<f64>>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, shape: Vec<usize>, values: Vec<f64>, op: Op) -> TensorId {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        self.nodes.push(Node { shape, values, op });
        TensorId(self.nodes.len() - 1)
    }

    /// Input node: parameters, features, targets.
    pub fn leaf(&mut self, values: Vec<f64>) -> TensorId {
        let shape = vec![values.len()];
        self.push(shape, values, Op::Leaf)
    }

    /// Matrix-shaped input node, row-major.
    pub fn leaf_matrix(&mut self, rows: usize, cols: usize, values: Vec<f64>) -> Result<TensorId> {
        if values.len() != rows * cols {
            return Err(Error::shape(format!(
                "matrix leaf expects {}x{}={} values, got {}",
                rows,
                cols,
                rows * cols,
                values.len()
            )));
        }
        Ok(self.push(vec![rows, cols], values, Op::Leaf))
    }

    pub fn values(&self, id: TensorId) -> &[f64] {
        &self.nodes[id.0].values
    }

    pub fn shape(&self, id: TensorId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn len(&self, id: TensorId) -> usize {
        self.nodes[id.0].values.len()
    }

    /// Gradient of the last backward pass, empty before one runs.
    pub fn grad(&self, id: TensorId) -> &[f64] {
        &self.grads[id.0]
    }

    pub fn scalar(&self, id: TensorId) -> f64 {
        debug_assert_eq!(self.nodes[id.0].values.len(), 1);
        self.nodes[id.0].values[0]
    }

    /// `out_i = sum_j W_ij x_j + b_i` with `W` row-major `[m, n]`.
    pub fn affine(&mut self, x: TensorId, w: TensorId, b: TensorId) -> Result<TensorId> {
        let wshape = self.shape(w);
        if wshape.len() != 2 {
            return Err(Error::shape(format!(
                "affine weight must be a matrix, got shape {wshape:?}"
            )));
        }
        let (m, n) = (wshape[0], wshape[1]);
        if self.len(x) != n || self.len(b) != m {
            return Err(Error::shape(format!(
                "affine shapes disagree: W [{m}, {n}], x [{}], b [{}]",
                self.len(x),
                self.len(b)
            )));
        }
        let mut out = self.nodes[b.0].values.clone();
        {
            let wv = &self.nodes[w.0].values;
            let xv = &self.nodes[x.0].values;
            for i in 0..m {
                let row = &wv[i * n..(i + 1) * n];
                let mut acc = 0.0;
                for j in 0..n {
                    acc += row[j] * xv[j];
                }
                out[i] += acc;
            }
        }
        Ok(self.push(vec![m], out, Op::Affine { x, w, b }))
    }

    pub fn activation(&mut self, x: TensorId, kind: Activation) -> TensorId {
        let values: Vec<f64> = self.nodes[x.0]
            .values
            .iter()
            .map(|&v| match kind {
                Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
                Activation::Tanh => v.tanh(),
                Activation::Identity => v,
            })
            .collect();
        let shape = self.nodes[x.0].shape.clone();
        self.push(shape, values, Op::Activation { x, kind })
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.check_same_len(a, b, "add")?;
        let values: Vec<f64> = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.nodes[a.0].shape.clone();
        Ok(self.push(shape, values, Op::Add { a, b }))
    }

    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.check_same_len(a, b, "elementwise-multiply")?;
        let values: Vec<f64> = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(x, y)| x * y)
            .collect();
        let shape = self.nodes[a.0].shape.clone();
        Ok(self.push(shape, values, Op::Mul { a, b }))
    }

    pub fn concat(&mut self, parts: &[TensorId]) -> TensorId {
        let mut values = Vec::new();
        for p in parts {
            values.extend_from_slice(&self.nodes[p.0].values);
        }
        let shape = vec![values.len()];
        self.push(
            shape,
            values,
            Op::Concat {
                parts: parts.to_vec(),
            },
        )
    }

    pub fn slice(&mut self, x: TensorId, start: usize, len: usize) -> Result<TensorId> {
        if start + len > self.len(x) {
            return Err(Error::shape(format!(
                "slice [{start}, {}) out of range for length {}",
                start + len,
                self.len(x)
            )));
        }
        let values = self.nodes[x.0].values[start..start + len].to_vec();
        Ok(self.push(vec![len], values, Op::Slice { x, start }))
    }

    /// Partitions a vector into `groups` equal contiguous pieces.
    pub fn split(&mut self, x: TensorId, groups: usize) -> Result<Vec<TensorId>> {
        let total = self.len(x);
        if groups == 0 || total % groups != 0 {
            return Err(Error::shape(format!(
                "cannot split length {total} into {groups} equal groups"
            )));
        }
        let each = total / groups;
        (0..groups)
            .map(|g| self.slice(x, g * each, each))
            .collect()
    }

    /// Inverted dropout: keeps each component with probability `1 - p` and
    /// rescales by `1 / (1 - p)` so expectations match inference.
    pub fn dropout(&mut self, x: TensorId, p: f64, rng: &mut impl rand::Rng) -> TensorId {
        if p <= 0.0 {
            return x;
        }
        let keep = 1.0 - p;
        let mask: Vec<f64> = (0..self.len(x))
            .map(|_| {
                if rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        let values: Vec<f64> = self.nodes[x.0]
            .values
            .iter()
            .zip(&mask)
            .map(|(v, m)| v * m)
            .collect();
        let shape = self.nodes[x.0].shape.clone();
        self.push(shape, values, Op::Dropout { x, mask })
    }

    /// Runs a parameterized circuit with `weights` bound to param slots and
    /// `features` to feature slots, measuring per the readout.
    pub fn quantum(
        &mut self,
        circuit: Arc<CircuitSpec>,
        weights: TensorId,
        features: TensorId,
        readout: Readout,
    ) -> Result<TensorId> {
        let state = qsim::run_circuit(
            &circuit,
            &self.nodes[weights.0].values,
            &self.nodes[features.0].values,
        )?;
        let values: Result<Vec<f64>> = readout
            .observables(circuit.n_qubits)
            .iter()
            .map(|obs| qsim::expectation(&state, obs))
            .collect();
        let values = values?;
        let shape = vec![values.len()];
        Ok(self.push(
            shape,
            values,
            Op::Quantum {
                circuit,
                weights,
                features,
                readout,
            },
        ))
    }

    /// Scalar `mean((pred - target)^2)`.
    pub fn mse(&mut self, pred: TensorId, target: TensorId) -> Result<TensorId> {
        self.check_same_len(pred, target, "mse")?;
        let n = self.len(pred);
        if n == 0 {
            return Err(Error::contract("mse over empty vectors"));
        }
        let loss = self.nodes[pred.0]
            .values
            .iter()
            .zip(&self.nodes[target.0].values)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / n as f64;
        Ok(self.push(vec![1], vec![loss], Op::Mse { pred, target }))
    }

    fn check_same_len(&self, a: TensorId, b: TensorId, what: &str) -> Result<()> {
        if self.len(a) != self.len(b) {
            return Err(Error::shape(format!(
                "{what}: lengths differ ({} vs {})",
                self.len(a),
                self.len(b)
            )));
        }
        Ok(())
    }

    /// Reverse sweep from a scalar loss; populates gradients for every node
    /// reachable from it. A node consumed k times receives the sum of its k
    /// contributions.
    pub fn backward(&mut self, loss: TensorId) -> Result<()> {
        if self.nodes[loss.0].values.len() != 1 {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.nodes[loss.0].shape
            )));
        }
        let mut grads: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.values.len()])
            .collect();
        grads[loss.0][0] = 1.0;

        for id in (0..=loss.0).rev() {
            if grads[id].iter().all(|&g| g == 0.0) {
                continue;
            }
            let g = std::mem::take(&mut grads[id]);
            match &self.nodes[id].op {
                Op::Leaf => {
                    grads[id] = g;
                    continue;
                }
                Op::Affine { x, w, b } => {
                    let n = self.nodes[x.0].values.len();
                    let m = g.len();
                    let wv = &self.nodes[w.0].values;
                    let xv = &self.nodes[x.0].values;
                    let (gx, rest) = split_two(&mut grads, x.0, w.0);
                    for i in 0..m {
                        let gi = g[i];
                        let row = &wv[i * n..(i + 1) * n];
                        for j in 0..n {
                            gx[j] += gi * row[j];
                            rest[i * n + j] += gi * xv[j];
                        }
                    }
                    for i in 0..m {
                        grads[b.0][i] += g[i];
                    }
                }
                Op::Activation { x, kind } => {
                    let y = &self.nodes[id].values;
                    let gx = &mut grads[x.0];
                    match kind {
                        Activation::Sigmoid => {
                            for i in 0..g.len() {
                                gx[i] += g[i] * y[i] * (1.0 - y[i]);
                            }
                        }
                        Activation::Tanh => {
                            for i in 0..g.len() {
                                gx[i] += g[i] * (1.0 - y[i] * y[i]);
                            }
                        }
                        Activation::Identity => {
                            for i in 0..g.len() {
                                gx[i] += g[i];
                            }
                        }
                    }
                }
                Op::Add { a, b } => {
                    let (a, b) = (*a, *b);
                    for i in 0..g.len() {
                        grads[a.0][i] += g[i];
                    }
                    for i in 0..g.len() {
                        grads[b.0][i] += g[i];
                    }
                }
                Op::Mul { a, b } => {
                    let (a, b) = (*a, *b);
                    let av = self.nodes[a.0].values.clone();
                    let bv = self.nodes[b.0].values.clone();
                    for i in 0..g.len() {
                        grads[a.0][i] += g[i] * bv[i];
                        grads[b.0][i] += g[i] * av[i];
                    }
                }
                Op::Concat { parts } => {
                    let parts = parts.clone();
                    let mut offset = 0;
                    for p in parts {
                        let len = self.nodes[p.0].values.len();
                        for i in 0..len {
                            grads[p.0][i] += g[offset + i];
                        }
                        offset += len;
                    }
                }
                Op::Slice { x, start } => {
                    let (x, start) = (*x, *start);
                    for i in 0..g.len() {
                        grads[x.0][start + i] += g[i];
                    }
                }
                Op::Dropout { x, mask } => {
                    let x = *x;
                    let mask = mask.clone();
                    for i in 0..g.len() {
                        grads[x.0][i] += g[i] * mask[i];
                    }
                }
                Op::Quantum {
                    circuit,
                    weights,
                    features,
                    readout,
                } => {
                    let terms: Vec<(f64, Observable)> = readout
                        .observables(circuit.n_qubits)
                        .into_iter()
                        .zip(&g)
                        .map(|(obs, &coeff)| (coeff, obs))
                        .collect();
                    let local = qsim::adjoint_gradient_sum(
                        circuit,
                        &self.nodes[weights.0].values,
                        &self.nodes[features.0].values,
                        &terms,
                    )?;
                    let (weights, features) = (*weights, *features);
                    for (i, gw) in local.params.iter().enumerate() {
                        grads[weights.0][i] += gw;
                    }
                    for (i, gf) in local.features.iter().enumerate() {
                        grads[features.0][i] += gf;
                    }
                }
                Op::Mse { pred, target } => {
                    let (pred, target) = (*pred, *target);
                    let n = self.nodes[pred.0].values.len() as f64;
                    let scale = 2.0 * g[0] / n;
                    let pv = self.nodes[pred.0].values.clone();
                    let tv = self.nodes[target.0].values.clone();
                    for i in 0..pv.len() {
                        let d = scale * (pv[i] - tv[i]);
                        grads[pred.0][i] += d;
                        grads[target.0][i] -= d;
                    }
                }
            }
            grads[id] = g;
        }

        self.grads = grads;
        Ok(())
    }
}

/// Two disjoint mutable gradient slots out of the same vector.
fn split_two(grads: &mut [Vec<f64>], i: usize, j: usize) -> (&mut Vec<f64>, &mut Vec<f64>) {
    debug_assert_ne!(i, j);
    if i < j {
        let (lo, hi) = grads.split_at_mut(j);
        (&mut lo[i], &mut hi[0])
    } else {
        let (lo, hi) = grads.split_at_mut(i);
        (&mut hi[0], &mut lo[j])
    }
}
