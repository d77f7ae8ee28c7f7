use serde::{Deserialize, Serialize};

use super::{evolve_master, NoiseParams};
use crate::encoding::with_plus_ancilla;
use crate::error::{Error, Result};
use crate::fock::ops::{controlled_parity, parity_local};
use crate::fock::{LocalOperator, Pauli};
use crate::pulse::{controlled_parity_schedule, engineered_controlled_parity, hybrid_layout, HybridHamiltonianParams};
use crate::scalar::{creal, lit, to_f64, Real};
use crate::thermal::{boltzmann_ratio, thermal_state, ThermalSpec};

/// Thermal weight left above the cutoff.
pub const PROTOCOL_TAIL: f64 = 1e-6;
/// Levels kept above the tail rule for displacement leakage.
const PROTOCOL_MARGIN: usize = 8;
/// Branches less likely than this contribute a factor 1 to the fidelity.
pub const DEGENERATE_BRANCH: f64 = 1e-9;

/// Controlled-parity implementation used in the fidelity protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParityGate {
    /// Exact `Ĉ`.
    Ideal,
    /// Powered second-order sequence with compensations.
    Engineered { repetitions: usize, eta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    pub n_mean: f64,
    pub fidelity: f64,
    /// Zero for the ideal gate.
    pub repetitions: usize,
    pub eta: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    /// Ground-state population of the thermal state, `1/(⟨n⟩+1)`.
    pub baseline: f64,
    pub cutoff: usize,
    pub truncation_tail: f64,
}

/// `⌈ln(tail)/ln q⌉` plus a margin, at least 8.
pub fn protocol_cutoff(n_mean: f64) -> usize {
    if n_mean <= 0.0 {
        return PROTOCOL_MARGIN;
    }
    let q = boltzmann_ratio(n_mean);
    (PROTOCOL_TAIL.ln() / q.ln()).ceil() as usize + PROTOCOL_MARGIN
}

/// Prepares `|+⟩ ⊗ ρ_th`, applies the controlled parity, measures the
/// ancilla in the X basis and scores the mode parity of both branches:
/// `F = ½Tr(ρ₊(I+P)) · ½Tr(ρ₋(I−P))`.
pub fn figure3_fidelity<T: Real>(
    n_mean: f64,
    gate: ParityGate,
    noise: Option<&NoiseParams>,
    cutoff: Option<usize>,
    dt: f64,
) -> Result<FidelityPoint> {
    let d = cutoff.unwrap_or_else(|| protocol_cutoff(n_mean));
    let spec = ThermalSpec::new(n_mean)?.with_cutoff(d).with_tail_tolerance(PROTOCOL_TAIL);
    let mode = thermal_state::<T>(&spec)?;
    let layout = hybrid_layout(d)?;
    let start = with_plus_ancilla(&mode).to_density();
    let (repetitions, eta) = match gate {
        ParityGate::Ideal => (0, 0.0),
        ParityGate::Engineered { repetitions, eta } => (repetitions, eta),
    };
    let after = match (gate, noise) {
        (ParityGate::Ideal, _) => start.apply_unitary(&controlled_parity::<T>(&layout, 0, 0)?)?,
        (ParityGate::Engineered { .. }, None) => {
            let params = HybridHamiltonianParams::new(eta)?;
            start.apply_unitary(&engineered_controlled_parity::<T>(&params, &layout, repetitions as u64)?)?
        }
        (ParityGate::Engineered { .. }, Some(noise)) => {
            let noise = NoiseParams { eta, ..*noise };
            let sched = controlled_parity_schedule(&noise.hybrid()?, repetitions)?;
            evolve_master(&start, &sched, &noise, dt)?.state
        }
    };
    let s = lit::<T>(std::f64::consts::FRAC_1_SQRT_2);
    let hadamard = (Pauli::X.matrix::<T>() + Pauli::Z.matrix::<T>()) * creal(s);
    let rotated = after.apply_map(&LocalOperator::new(&layout, vec![0], hadamard)?)?;
    let parity = parity_local::<T>(&layout, 0)?;
    let branch = |minus: bool| -> Result<(f64, f64)> {
        match rotated.project_qubit(0, minus) {
            Ok((state, p)) => {
                let p = to_f64(p);
                if p < DEGENERATE_BRANCH {
                    return Ok((p, 1.0));
                }
                let exp_p = to_f64(state.expectation_map(&parity)?.re);
                let sign = if minus { -1.0 } else { 1.0 };
                Ok((p, 0.5 * (1.0 + sign * exp_p)))
            }
            Err(Error::EmptyBranch(p)) => Ok((p, 1.0)),
            Err(e) => Err(e),
        }
    };
    let (p_plus, f_plus) = branch(false)?;
    let (p_minus, f_minus) = branch(true)?;
    Ok(FidelityPoint {
        n_mean,
        fidelity: (f_plus * f_minus).clamp(0.0, 1.0),
        repetitions,
        eta,
        p_plus,
        p_minus,
        baseline: 1.0 / (n_mean + 1.0),
        cutoff: d,
        truncation_tail: to_f64(after.truncation_tail()),
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::eta_for_repetitions;

    fn eng(reps: usize) -> ParityGate {
        ParityGate::Engineered {
            repetitions: reps,
            eta: eta_for_repetitions(reps),
        }
    }

    #[test]
    fn cutoff_rule() {
        assert_eq!(protocol_cutoff(0.2), 16);
        assert_eq!(protocol_cutoff(1.0), 28);
        assert_eq!(protocol_cutoff(4.0), 70);
        assert!(boltzmann_ratio(4.0).powi(62) < PROTOCOL_TAIL);
    }

    #[test]
    fn ideal_gate_is_perfect() {
        for n in [0.2, 1.0, 3.0] {
            let f = figure3_fidelity::<f64>(n, ParityGate::Ideal, None, None, 0.01).unwrap();
            assert!((f.fidelity - 1.0).abs() < 1e-12, "{f:?}");
            assert!((f.p_plus + f.p_minus - 1.0).abs() < 1e-8);
            // even and odd weights of the thermal state
            let q = boltzmann_ratio(n);
            assert!((f.p_plus - 1.0 / (1.0 + q)).abs() < 1e-6);
        }
    }

    #[test]
    fn independent_reference_values() {
        // from a separate dense implementation of the same protocol
        for (n, reps, expect) in [(0.2, 50, 0.99798), (1.0, 100, 0.99165), (1.0, 50, 0.97206)] {
            let f = figure3_fidelity::<f64>(n, eng(reps), None, None, 0.01).unwrap();
            assert!((f.fidelity - expect).abs() < 2e-5, "{n} {reps}: {}", f.fidelity);
        }
    }

    #[test]
    fn ordering_and_baseline_at_two() {
        let f: Vec<f64> = [50, 100, 200]
            .iter()
            .map(|&r| figure3_fidelity::<f64>(2.0, eng(r), None, None, 0.01).unwrap().fidelity)
            .collect();
        assert!(f[2] > f[1] && f[1] > f[0], "{f:?}");
        assert!(f.iter().all(|&x| x > 1.0 / 3.0));
    }

    #[test]
    fn noisy_variant_runs() {
        let noise = NoiseParams::bath(0.0, 1e5, 0.1);
        let f = figure3_fidelity::<f64>(0.2, eng(50), Some(&noise), Some(10), 0.01).unwrap();
        let closed = figure3_fidelity::<f64>(0.2, eng(50), None, Some(10), 0.01).unwrap();
        assert!(f.fidelity <= closed.fidelity + 1e-6);
        assert!(closed.fidelity - f.fidelity < 0.05);
    }
}
