//! Dense state-vector simulation of parameterized quantum circuits.
//!
//! Conventions, fixed once and used everywhere:
//!
//! * Rotations are half-angle: `R_A(theta) = exp(-i * theta * A / 2)` for
//!   `A` in `{X, Y, Z}`.
//! * Qubit 0 is the **most significant bit** of the amplitude index, so for
//!   an n-qubit register qubit `k` owns bit `1 << (n - 1 - k)`.
//!
//! Gates are applied in-place by stride iteration over the amplitude array;
//! no gate matrix is ever materialized.

mod gradient;

pub use gradient::{adjoint_gradient, adjoint_gradient_sum, parameter_shift_gradient, Gradient};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hard cap on register width; 2^12 amplitudes keep every code path desk-scale.
pub const MAX_QUBITS: usize = 12;

/// 2^n complex amplitudes of an n-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Sum of squared amplitude magnitudes; 1 for any physical state.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probabilities of all computational-basis outcomes.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Debug dump as CSV lines `index,re,im`, for test tooling.
    pub fn amplitudes_csv(&self) -> String {
        let mut out = String::from("index,re,im\n");
        for (i, a) in self.amps.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i, a.re, a.im));
        }
        out
    }

    fn qubit_mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::config(format!(
                "qubit index {} out of range for {}-qubit register",
                qubit, self.n_qubits
            )));
        }
        Ok(())
    }

    /// Single-qubit rotation about X: pairs `(a0, a1)` map through
    /// `[[cos, -i sin], [-i sin, cos]]` at half angle.
    pub fn apply_rx(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let m_is = Complex64::new(0.0, -s);
        self.map_pairs(self.qubit_mask(qubit), |a0, a1| {
            (c * a0 + m_is * a1, m_is * a0 + c * a1)
        });
        Ok(())
    }

    /// Single-qubit rotation about Y: `[[cos, -sin], [sin, cos]]` at half angle.
    pub fn apply_ry(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        self.map_pairs(self.qubit_mask(qubit), |a0, a1| {
            (c * a0 - s * a1, s * a0 + c * a1)
        });
        Ok(())
    }

    /// Single-qubit rotation about Z: `diag(exp(-i t/2), exp(i t/2))`.
    pub fn apply_rz(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let phase = Complex64::from_polar(1.0, theta / 2.0);
        let conj = phase.conj();
        self.map_pairs(self.qubit_mask(qubit), |a0, a1| (conj * a0, phase * a1));
        Ok(())
    }

    /// CNOT: flips `target` where `control` is set. Exact permutation.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::config(format!(
                "CNOT control and target coincide on qubit {control}"
            )));
        }
        let cm = self.qubit_mask(control);
        let tm = self.qubit_mask(target);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
        Ok(())
    }

    /// Pauli X on one qubit (amplitude swap).
    pub fn apply_pauli_x(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        self.map_pairs(self.qubit_mask(qubit), |a0, a1| (a1, a0));
        Ok(())
    }

    /// Pauli Y on one qubit.
    pub fn apply_pauli_y(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let i = Complex64::new(0.0, 1.0);
        self.map_pairs(self.qubit_mask(qubit), |a0, a1| (-i * a1, i * a0));
        Ok(())
    }

    /// Pauli Z on one qubit (sign flip on the set branch).
    pub fn apply_pauli_z(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        self.map_pairs(self.qubit_mask(qubit), |a0, a1| (a0, -a1));
        Ok(())
    }

    /// Visits each `(index with bit clear, index with bit set)` amplitude pair
    /// exactly once, in blocks of `2 * mask`.
    fn map_pairs(&mut self, mask: usize, f: impl Fn(Complex64, Complex64) -> (Complex64, Complex64)) {
        let dim = self.amps.len();
        let block = mask << 1;
        let mut start = 0;
        while start < dim {
            for i in start..start + mask {
                let j = i | mask;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                let (b0, b1) = f(a0, a1);
                self.amps[i] = b0;
                self.amps[j] = b1;
            }
            start += block;
        }
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub(crate) fn add_scaled(&mut self, other: &StateVector, factor: Complex64) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += factor * b;
        }
    }

    pub(crate) fn zeros_like(&self) -> StateVector {
        StateVector {
            n_qubits: self.n_qubits,
            amps: vec![Complex64::new(0.0, 0.0); self.amps.len()],
        }
    }
}

/// All-zeros register `|0...0>`.
pub fn init_state(n_qubits: usize) -> Result<StateVector> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::config(format!(
            "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
        )));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    amps[0] = Complex64::new(1.0, 0.0);
    Ok(StateVector { n_qubits, amps })
}

/// Where a gate's rotation angle comes from when the circuit runs.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum AngleSource {
    /// Trainable parameter slot.
    Param(usize),
    /// Classical input feature slot.
    Feature(usize),
    /// Fixed angle in radians.
    Const(f64),
}

/// One gate in a circuit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum GateOp {
    Rx { target: usize, angle: AngleSource },
    Ry { target: usize, angle: AngleSource },
    Rz { target: usize, angle: AngleSource },
    Cnot { control: usize, target: usize },
}

impl GateOp {
    pub fn angle_source(&self) -> Option<AngleSource> {
        match self {
            GateOp::Rx { angle, .. } | GateOp::Ry { angle, .. } | GateOp::Rz { angle, .. } => {
                Some(*angle)
            }
            GateOp::Cnot { .. } => None,
        }
    }
}

/// Pauli axis of a single observable factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Tensor product of single-qubit Paulis on distinct qubits.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Observable {
    terms: Vec<(usize, Axis)>,
}

impl Observable {
    pub fn new(terms: Vec<(usize, Axis)>) -> Result<Self> {
        for (i, (q, _)) in terms.iter().enumerate() {
            if terms[..i].iter().any(|(p, _)| p == q) {
                return Err(Error::config(format!(
                    "observable repeats qubit {q} within one product"
                )));
            }
        }
        Ok(Observable { terms })
    }

    pub fn single(qubit: usize, axis: Axis) -> Self {
        Observable {
            terms: vec![(qubit, axis)],
        }
    }

    pub fn terms(&self) -> &[(usize, Axis)] {
        &self.terms
    }

    /// `O|psi>` as a fresh state (not normalized; O is not unitary in general,
    /// though Pauli products are).
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let mut out = state.clone();
        for &(qubit, axis) in &self.terms {
            match axis {
                Axis::X => out.apply_pauli_x(qubit)?,
                Axis::Y => out.apply_pauli_y(qubit)?,
                Axis::Z => out.apply_pauli_z(qubit)?,
            }
        }
        Ok(out)
    }
}

/// Exact expectation `<psi|O|psi>`; always in [-1, 1] for Pauli products.
pub fn expectation(state: &StateVector, obs: &Observable) -> Result<f64> {
    let applied = obs.apply(state)?;
    Ok(state.inner(&applied).re)
}

/// Ordered gate list with trainable-parameter and input-feature bindings.
///
/// Slots may be reused across gates (data re-uploading); `n_params` and
/// `n_features` declare how many distinct slots exist.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub gates: Vec<GateOp>,
    pub n_params: usize,
    pub n_features: usize,
}

impl CircuitSpec {
    pub fn new(n_qubits: usize, gates: Vec<GateOp>, n_params: usize, n_features: usize) -> Result<Self> {
        let spec = CircuitSpec {
            n_qubits,
            gates,
            n_params,
            n_features,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return Err(Error::config(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {}",
                self.n_qubits
            )));
        }
        for (i, gate) in self.gates.iter().enumerate() {
            let check = |q: usize| -> Result<()> {
                if q >= self.n_qubits {
                    return Err(Error::config(format!(
                        "gate {i}: qubit index {q} out of range for {} qubits",
                        self.n_qubits
                    )));
                }
                Ok(())
            };
            match gate {
                GateOp::Rx { target, angle }
                | GateOp::Ry { target, angle }
                | GateOp::Rz { target, angle } => {
                    check(*target)?;
                    match angle {
                        AngleSource::Param(k) if *k >= self.n_params => {
                            return Err(Error::config(format!(
                                "gate {i}: param slot {k} >= n_params {}",
                                self.n_params
                            )));
                        }
                        AngleSource::Feature(k) if *k >= self.n_features => {
                            return Err(Error::config(format!(
                                "gate {i}: feature slot {k} >= n_features {}",
                                self.n_features
                            )));
                        }
                        _ => {}
                    }
                }
                GateOp::Cnot { control, target } => {
                    check(*control)?;
                    check(*target)?;
                    if control == target {
                        return Err(Error::config(format!(
                            "gate {i}: CNOT control equals target ({control})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn check_bindings(&self, params: &[f64], features: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::shape(format!(
                "expected {} params, got {}",
                self.n_params,
                params.len()
            )));
        }
        if features.len() != self.n_features {
            return Err(Error::shape(format!(
                "expected {} features, got {}",
                self.n_features,
                features.len()
            )));
        }
        Ok(())
    }
}

pub(crate) fn resolve_angle(source: AngleSource, params: &[f64], features: &[f64]) -> f64 {
    match source {
        AngleSource::Param(k) => params[k],
        AngleSource::Feature(k) => features[k],
        AngleSource::Const(v) => v,
    }
}

pub(crate) fn apply_gate_resolved(
    state: &mut StateVector,
    gate: &GateOp,
    params: &[f64],
    features: &[f64],
    shift: Option<(usize, f64)>,
    index: usize,
) -> Result<()> {
    let angle_of = |src: AngleSource| {
        let mut a = resolve_angle(src, params, features);
        if let Some((gi, delta)) = shift {
            if gi == index {
                a += delta;
            }
        }
        a
    };
    match gate {
        GateOp::Rx { target, angle } => state.apply_rx(*target, angle_of(*angle)),
        GateOp::Ry { target, angle } => state.apply_ry(*target, angle_of(*angle)),
        GateOp::Rz { target, angle } => state.apply_rz(*target, angle_of(*angle)),
        GateOp::Cnot { control, target } => state.apply_cnot(*control, *target),
    }
}

/// Applies one gate with an explicitly resolved angle.
pub fn apply_gate(state: &mut StateVector, gate: &GateOp, angle: f64) -> Result<()> {
    match gate {
        GateOp::Rx { target, .. } => state.apply_rx(*target, angle),
        GateOp::Ry { target, .. } => state.apply_ry(*target, angle),
        GateOp::Rz { target, .. } => state.apply_rz(*target, angle),
        GateOp::Cnot { control, target } => state.apply_cnot(*control, *target),
    }
}

/// Runs the whole circuit from `|0...0>` with the given bindings.
pub fn run_circuit(circuit: &CircuitSpec, params: &[f64], features: &[f64]) -> Result<StateVector> {
    circuit.check_bindings(params, features)?;
    run_circuit_shifted(circuit, params, features, None)
}

pub(crate) fn run_circuit_shifted(
    circuit: &CircuitSpec,
    params: &[f64],
    features: &[f64],
    shift: Option<(usize, f64)>,
) -> Result<StateVector> {
    let mut state = init_state(circuit.n_qubits)?;
    for (i, gate) in circuit.gates.iter().enumerate() {
        apply_gate_resolved(&mut state, gate, params, features, shift, i)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn init_state_is_ket_zero() {
        let s = init_state(1).unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert_eq!(s.amplitudes()[1], Complex64::new(0.0, 0.0));
        let s2 = init_state(2).unwrap();
        assert_eq!(s2.dim(), 4);
        assert_eq!(s2.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(s2.amplitudes()[1..].iter().all(|a| a.norm_sqr() == 0.0));
    }

    #[test]
    fn init_state_rejects_out_of_range() {
        assert!(matches!(init_state(13), Err(Error::Config(_))));
        assert!(matches!(init_state(0), Err(Error::Config(_))));
    }

    #[test]
    fn rx_pi_flips_with_phase() {
        let mut s = init_state(1).unwrap();
        s.apply_rx(0, std::f64::consts::PI).unwrap();
        assert!(s.amplitudes()[0].norm() < TOL);
        assert!((s.amplitudes()[1] - Complex64::new(0.0, -1.0)).norm() < TOL);
        let z = expectation(&s, &Observable::single(0, Axis::Z)).unwrap();
        assert!((z + 1.0).abs() < TOL);
    }

    #[test]
    fn rx_zero_is_identity() {
        let mut s = init_state(2).unwrap();
        s.apply_ry(0, 0.7).unwrap();
        s.apply_cnot(0, 1).unwrap();
        let before = s.clone();
        s.apply_rx(1, 0.0).unwrap();
        for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
            assert!((a - b).norm() < TOL);
        }
    }

    #[test]
    fn cnot_truth_table() {
        // |10> -> |11>: qubit 0 is the most significant bit.
        let mut s = init_state(2).unwrap();
        s.apply_pauli_x(0).unwrap(); // |10>
        s.apply_cnot(0, 1).unwrap();
        assert!((s.amplitudes()[0b11].norm() - 1.0).abs() < TOL);
        // |01> unchanged by CNOT(0, 1).
        let mut s = init_state(2).unwrap();
        s.apply_pauli_x(1).unwrap(); // |01>
        s.apply_cnot(0, 1).unwrap();
        assert!((s.amplitudes()[0b01].norm() - 1.0).abs() < TOL);
    }

    #[test]
    fn cnot_rejects_equal_wires() {
        let mut s = init_state(2).unwrap();
        assert!(matches!(s.apply_cnot(1, 1), Err(Error::Config(_))));
    }

    #[test]
    fn expectation_basics() {
        let s = init_state(1).unwrap();
        assert!((expectation(&s, &Observable::single(0, Axis::Z)).unwrap() - 1.0).abs() < TOL);
        assert!(expectation(&s, &Observable::single(0, Axis::Y)).unwrap().abs() < TOL);

        // (|0> + |1>)/sqrt(2) has <Z> = 0.
        let mut plus = init_state(1).unwrap();
        plus.apply_ry(0, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(expectation(&plus, &Observable::single(0, Axis::Z)).unwrap().abs() < TOL);
        assert!((expectation(&plus, &Observable::single(0, Axis::X)).unwrap() - 1.0).abs() < TOL);
    }

    #[test]
    fn observable_rejects_repeated_qubit() {
        assert!(Observable::new(vec![(0, Axis::Z), (0, Axis::X)]).is_err());
        assert!(Observable::new(vec![(0, Axis::Z), (1, Axis::X)]).is_ok());
    }

    #[test]
    fn run_circuit_feature_embedding() {
        // Single RX(feature 0) at pi/2: <Z> = cos(pi/2) = 0.
        let circuit = CircuitSpec::new(
            1,
            vec![GateOp::Rx {
                target: 0,
                angle: AngleSource::Feature(0),
            }],
            0,
            1,
        )
        .unwrap();
        let s = run_circuit(&circuit, &[], &[std::f64::consts::FRAC_PI_2]).unwrap();
        let z = expectation(&s, &Observable::single(0, Axis::Z)).unwrap();
        assert!(z.abs() < TOL);
    }

    #[test]
    fn run_circuit_empty_gate_list() {
        let circuit = CircuitSpec::new(3, vec![], 0, 0).unwrap();
        let s = run_circuit(&circuit, &[], &[]).unwrap();
        assert!((s.amplitudes()[0].re - 1.0).abs() < TOL);
    }

    #[test]
    fn run_circuit_rejects_length_mismatch() {
        let circuit = CircuitSpec::new(
            1,
            vec![GateOp::Rx {
                target: 0,
                angle: AngleSource::Param(0),
            }],
            1,
            0,
        )
        .unwrap();
        assert!(matches!(run_circuit(&circuit, &[], &[]), Err(Error::Shape(_))));
        assert!(matches!(
            run_circuit(&circuit, &[0.1, 0.2], &[]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn circuit_spec_validation() {
        assert!(CircuitSpec::new(
            2,
            vec![GateOp::Rx {
                target: 5,
                angle: AngleSource::Const(0.0)
            }],
            0,
            0
        )
        .is_err());
        assert!(CircuitSpec::new(
            2,
            vec![GateOp::Rx {
                target: 0,
                angle: AngleSource::Param(0)
            }],
            0,
            0
        )
        .is_err());
        assert!(CircuitSpec::new(2, vec![GateOp::Cnot { control: 1, target: 1 }], 0, 0).is_err());
    }

    #[test]
    fn amplitudes_csv_dump() {
        let s = init_state(1).unwrap();
        let csv = s.amplitudes_csv();
        assert!(csv.starts_with("index,re,im\n"));
        assert!(csv.contains("0,1,0"));
    }
}
