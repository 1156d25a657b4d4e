//! Exact gradients of circuit expectations.
//!
//! Two independent routes are provided: the adjoint method (one forward pass
//! plus one backward sweep over the gate list) and the parameter-shift rule
//! (two shifted evaluations per gate occurrence). Both differentiate every
//! `Param` slot and every `Feature` slot, so hybrid backward passes can flow
//! into upstream classical layers.

use num_complex::Complex64;

use super::{
    apply_gate_resolved, expectation, resolve_angle, run_circuit, run_circuit_shifted,
    CircuitSpec, GateOp, Observable, StateVector,
};
use crate::error::Result;

/// Value and gradient of one expectation, split by slot kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub value: f64,
    pub params: Vec<f64>,
    pub features: Vec<f64>,
}

/// Adjoint-method gradient of `<O>` for a single Pauli-product observable.
pub fn adjoint_gradient(
    circuit: &CircuitSpec,
    params: &[f64],
    features: &[f64],
    obs: &Observable,
) -> Result<Gradient> {
    adjoint_gradient_sum(circuit, params, features, &[(1.0, obs.clone())])
}

/// Adjoint-method gradient of a weighted sum `sum_i c_i <O_i>`.
///
/// One backward sweep regardless of the number of terms, which is what makes
/// vector-valued quantum layers cheap to backpropagate: the upstream gradient
/// becomes the coefficient vector.
pub fn adjoint_gradient_sum(
    circuit: &CircuitSpec,
    params: &[f64],
    features: &[f64],
    terms: &[(f64, Observable)],
) -> Result<Gradient> {
    circuit.check_bindings(params, features)?;
    let mut state = run_circuit(circuit, params, features)?;

    let mut lam = state.zeros_like();
    for (coeff, obs) in terms {
        lam.add_scaled(&obs.apply(&state)?, Complex64::new(*coeff, 0.0));
    }
    let value = state.inner(&lam).re;

    let mut grad_params = vec![0.0; circuit.n_params];
    let mut grad_features = vec![0.0; circuit.n_features];

    for gate in circuit.gates.iter().rev() {
        undo_gate(&mut state, gate, params, features)?;
        if let Some(source) = gate.angle_source() {
            let contrib = generator_overlap(&lam, &state, gate, params, features)?;
            match source {
                super::AngleSource::Param(k) => grad_params[k] += contrib,
                super::AngleSource::Feature(k) => grad_features[k] += contrib,
                super::AngleSource::Const(_) => {}
            }
        }
        undo_gate(&mut lam, gate, params, features)?;
    }

    Ok(Gradient {
        value,
        params: grad_params,
        features: grad_features,
    })
}

/// `Im(<lam| A U |psi_prev>)` where `A` is the rotation's Pauli generator.
///
/// For `U = exp(-i theta A / 2)` the derivative is `dU/dtheta = (-i/2) A U`,
/// and `d<O>/dtheta = 2 Re(<lam| dU |psi_prev>) = Im(<lam| A U |psi_prev>)`.
fn generator_overlap(
    lam: &StateVector,
    psi_prev: &StateVector,
    gate: &GateOp,
    params: &[f64],
    features: &[f64],
) -> Result<f64> {
    let mut mu = psi_prev.clone();
    apply_gate_resolved(&mut mu, gate, params, features, None, usize::MAX)?;
    match gate {
        GateOp::Rx { target, .. } => mu.apply_pauli_x(*target)?,
        GateOp::Ry { target, .. } => mu.apply_pauli_y(*target)?,
        GateOp::Rz { target, .. } => mu.apply_pauli_z(*target)?,
        GateOp::Cnot { .. } => unreachable!("CNOT has no angle source"),
    }
    Ok(lam.inner(&mu).im)
}

fn undo_gate(
    state: &mut StateVector,
    gate: &GateOp,
    params: &[f64],
    features: &[f64],
) -> Result<()> {
    match gate {
        GateOp::Rx { target, angle } => {
            state.apply_rx(*target, -resolve_angle(*angle, params, features))
        }
        GateOp::Ry { target, angle } => {
            state.apply_ry(*target, -resolve_angle(*angle, params, features))
        }
        GateOp::Rz { target, angle } => {
            state.apply_rz(*target, -resolve_angle(*angle, params, features))
        }
        GateOp::Cnot { control, target } => state.apply_cnot(*control, *target),
    }
}

/// Parameter-shift gradient: `grad = [f(+pi/2 shift) - f(-pi/2 shift)] / 2`
/// applied per gate occurrence, with reused slots accumulating one shifted
/// pair per occurrence. Exact for the RX/RY/RZ gate set; serves as an oracle
/// for the adjoint route.
pub fn parameter_shift_gradient(
    circuit: &CircuitSpec,
    params: &[f64],
    features: &[f64],
    obs: &Observable,
) -> Result<Gradient> {
    circuit.check_bindings(params, features)?;
    let value = expectation(&run_circuit(circuit, params, features)?, obs)?;

    let mut grad_params = vec![0.0; circuit.n_params];
    let mut grad_features = vec![0.0; circuit.n_features];
    const SHIFT: f64 = std::f64::consts::FRAC_PI_2;

    for (i, gate) in circuit.gates.iter().enumerate() {
        let Some(source) = gate.angle_source() else {
            continue;
        };
        let slot = match source {
            super::AngleSource::Param(k) => Some((true, k)),
            super::AngleSource::Feature(k) => Some((false, k)),
            super::AngleSource::Const(_) => None,
        };
        let Some((is_param, k)) = slot else { continue };
        let plus = expectation(
            &run_circuit_shifted(circuit, params, features, Some((i, SHIFT)))?,
            obs,
        )?;
        let minus = expectation(
            &run_circuit_shifted(circuit, params, features, Some((i, -SHIFT)))?,
            obs,
        )?;
        let g = (plus - minus) / 2.0;
        if is_param {
            grad_params[k] += g;
        } else {
            grad_features[k] += g;
        }
    }

    Ok(Gradient {
        value,
        params: grad_params,
        features: grad_features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{AngleSource, Axis};

    fn rx_param_circuit() -> CircuitSpec {
        CircuitSpec::new(
            1,
            vec![GateOp::Rx {
                target: 0,
                angle: AngleSource::Param(0),
            }],
            1,
            0,
        )
        .unwrap()
    }

    #[test]
    fn adjoint_single_rx_at_half_pi() {
        let z = Observable::single(0, Axis::Z);
        let g = adjoint_gradient(&rx_param_circuit(), &[std::f64::consts::FRAC_PI_2], &[], &z)
            .unwrap();
        assert!(g.value.abs() < 1e-12);
        assert!((g.params[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn adjoint_single_rx_at_zero_is_extremum() {
        let z = Observable::single(0, Axis::Z);
        let g = adjoint_gradient(&rx_param_circuit(), &[0.0], &[], &z).unwrap();
        assert!((g.value - 1.0).abs() < 1e-12);
        assert!(g.params[0].abs() < 1e-12);
    }

    #[test]
    fn shift_single_rx_matches_analytic() {
        let z = Observable::single(0, Axis::Z);
        let g = parameter_shift_gradient(
            &rx_param_circuit(),
            &[std::f64::consts::FRAC_PI_2],
            &[],
            &z,
        )
        .unwrap();
        assert!((g.params[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_reused_slot_accumulates_per_occurrence() {
        // Two RX gates fed by one slot: <Z> = cos(2 theta), slope 0 at theta=0.
        let circuit = CircuitSpec::new(
            1,
            vec![
                GateOp::Rx {
                    target: 0,
                    angle: AngleSource::Param(0),
                },
                GateOp::Rx {
                    target: 0,
                    angle: AngleSource::Param(0),
                },
            ],
            1,
            0,
        )
        .unwrap();
        let z = Observable::single(0, Axis::Z);
        let g = parameter_shift_gradient(&circuit, &[0.0], &[], &z).unwrap();
        assert!(g.params[0].abs() < 1e-12);
        // And away from the extremum both routes agree with -2 sin(2 theta).
        let theta = 0.3;
        let g1 = parameter_shift_gradient(&circuit, &[theta], &[], &z).unwrap();
        let g2 = adjoint_gradient(&circuit, &[theta], &[], &z).unwrap();
        let analytic = -2.0 * (2.0 * theta).sin();
        assert!((g1.params[0] - analytic).abs() < 1e-12);
        assert!((g2.params[0] - analytic).abs() < 1e-12);
    }

    #[test]
    fn feature_slots_differentiate_like_params() {
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
        let z = Observable::single(0, Axis::Z);
        let x = 0.7;
        let adj = adjoint_gradient(&circuit, &[], &[x], &z).unwrap();
        let psr = parameter_shift_gradient(&circuit, &[], &[x], &z).unwrap();
        assert!((adj.features[0] + x.sin()).abs() < 1e-12);
        assert!((psr.features[0] + x.sin()).abs() < 1e-12);
    }

    #[test]
    fn weighted_sum_is_linear_in_terms() {
        let circuit = CircuitSpec::new(
            2,
            vec![
                GateOp::Ry {
                    target: 0,
                    angle: AngleSource::Param(0),
                },
                GateOp::Cnot { control: 0, target: 1 },
                GateOp::Rx {
                    target: 1,
                    angle: AngleSource::Param(1),
                },
            ],
            2,
            0,
        )
        .unwrap();
        let params = [0.4, -1.1];
        let z0 = Observable::single(0, Axis::Z);
        let z1 = Observable::single(1, Axis::Z);
        let (c0, c1) = (0.8, -2.5);
        let combined =
            adjoint_gradient_sum(&circuit, &params, &[], &[(c0, z0.clone()), (c1, z1.clone())])
                .unwrap();
        let g0 = adjoint_gradient(&circuit, &params, &[], &z0).unwrap();
        let g1 = adjoint_gradient(&circuit, &params, &[], &z1).unwrap();
        for k in 0..2 {
            let expect = c0 * g0.params[k] + c1 * g1.params[k];
            assert!((combined.params[k] - expect).abs() < 1e-12);
        }
        assert!((combined.value - (c0 * g0.value + c1 * g1.value)).abs() < 1e-12);
    }
}
