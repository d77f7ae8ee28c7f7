//! Two-qumode parity encoding: logical operators, gate circuits and the
//! ancilla-assisted parity measurement.
//!
//! Logical qubit `k` lives on modes `2k` (odd-parity carrier in `|0_L⟩`)
//! and `2k + 1`, whose parity is `Z_L`. `X_L` swaps the two modes.
//! Angles follow `R_σ(θ) = exp(iθσ)`, and every gate circuit returns the
//! ancilla to `|+⟩` while applying `exp(iθ O_L)` to the modes.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::ops::{
    beam_splitter_5050_local, controlled_parity_local, parity_local, parity_matrix, qubit_rotation_local,
    two_mode_swap_local, Pauli,
};
use crate::fock::state::Representation;
use crate::fock::{HybridState, LocalOperator, OperatorSequence, SpaceLayout, TruncatedOperator};
use crate::scalar::{cplx, creal, kron, lit, to_f64, CVector, Real, C};

/// Largest accepted `1 − ⟨+|ρ_A|+⟩` for the ancilla.
pub const ANCILLA_TOL: f64 = 1e-10;
/// Largest accepted `‖O² − I‖_max` for exponentiated involutions.
pub const INVOLUTION_TOL: f64 = 1e-10;

/// One logical qubit inside a layout, with the ancilla used by its gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalQubitRef {
    pub index: usize,
    pub ancilla: usize,
}

impl LogicalQubitRef {
    pub fn new(layout: &SpaceLayout, index: usize, ancilla: usize) -> Result<Self> {
        let r = Self { index, ancilla };
        r.validate(layout)?;
        Ok(r)
    }

    pub fn first_mode(&self) -> usize {
        2 * self.index
    }

    pub fn second_mode(&self) -> usize {
        2 * self.index + 1
    }

    pub fn validate(&self, layout: &SpaceLayout) -> Result<()> {
        layout.check_qubit(self.ancilla)?;
        if self.second_mode() >= layout.mode_count() {
            return Err(Error::InvalidQubit {
                index: self.index,
                count: layout.mode_count() / 2,
            });
        }
        layout.check_mode_pair(self.first_mode(), self.second_mode())?;
        Ok(())
    }
}

pub fn logical_z<T: Real>(layout: &SpaceLayout, r: LogicalQubitRef) -> Result<TruncatedOperator<T>> {
    r.validate(layout)?;
    Ok(parity_local(layout, r.second_mode())?.embed())
}

pub fn logical_x<T: Real>(layout: &SpaceLayout, r: LogicalQubitRef) -> Result<TruncatedOperator<T>> {
    r.validate(layout)?;
    Ok(two_mode_swap_local(layout, r.first_mode(), r.second_mode())?.embed())
}

/// `cos θ I + i sin θ O` for an involution `O`.
pub fn exponential_hermitian_unitary<T: Real>(
    o: &TruncatedOperator<T>,
    theta: T,
) -> Result<TruncatedOperator<T>> {
    let residual = o.involution_residual();
    if to_f64(residual) > INVOLUTION_TOL {
        return Err(Error::NotInvolution(to_f64(residual)));
    }
    Ok(o.affine_identity(creal(theta.cos()), cplx(T::zero(), theta.sin())))
}

/// Logical gates of the universal set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LogicalGate {
    /// `exp(iθ Z_L)`
    Z { qubit: usize, theta: f64 },
    /// `exp(iθ X_L)`
    X { qubit: usize, theta: f64 },
    /// `exp(iθ Z_L Z_L)`
    ZZ { first: usize, second: usize, theta: f64 },
}

impl LogicalGate {
    pub fn theta(&self) -> f64 {
        match *self {
            LogicalGate::Z { theta, .. }
            | LogicalGate::X { theta, .. }
            | LogicalGate::ZZ { theta, .. } => theta,
        }
    }
}

/// `Ĉ R_X(θ) Ĉ`, as a sequence in application order.
pub fn gate_uz<T: Real>(layout: &SpaceLayout, r: LogicalQubitRef, theta: T) -> Result<OperatorSequence<T>> {
    r.validate(layout)?;
    let c = controlled_parity_local(layout, r.ancilla, r.second_mode())?;
    OperatorSequence::new(layout)
        .then(c.clone())?
        .then(qubit_rotation_local(layout, r.ancilla, Pauli::X, theta)?)?
        .then(c)
}

/// `B† Ĉ R_X(θ) Ĉ B`.
pub fn gate_ux<T: Real>(layout: &SpaceLayout, r: LogicalQubitRef, theta: T) -> Result<OperatorSequence<T>> {
    r.validate(layout)?;
    let b = beam_splitter_5050_local(layout, r.first_mode(), r.second_mode())?;
    OperatorSequence::new(layout)
        .then(b.clone())?
        .extend(&gate_uz(layout, r, theta)?)?
        .then(b.adjoint())
}

/// `Ĉ_l Ĉ_k R_X(θ) Ĉ_k Ĉ_l` on the second modes of both qubits.
pub fn gate_uzz<T: Real>(
    layout: &SpaceLayout,
    k: LogicalQubitRef,
    l: LogicalQubitRef,
    theta: T,
) -> Result<OperatorSequence<T>> {
    k.validate(layout)?;
    l.validate(layout)?;
    if k.index == l.index {
        return Err(Error::InvalidCircuit(format!(
            "ZZ gate needs two distinct logical qubits, got {} twice",
            k.index
        )));
    }
    if k.ancilla != l.ancilla {
        return Err(Error::InvalidCircuit("ZZ gate needs a shared ancilla".into()));
    }
    let ck = controlled_parity_local(layout, k.ancilla, k.second_mode())?;
    let cl = controlled_parity_local(layout, l.ancilla, l.second_mode())?;
    OperatorSequence::new(layout)
        .then(cl.clone())?
        .then(ck.clone())?
        .then(qubit_rotation_local(layout, k.ancilla, Pauli::X, theta)?)?
        .then(ck)?
        .then(cl)
}

/// Circuit for one logical gate with a shared ancilla.
pub fn gate_circuit<T: Real>(
    layout: &SpaceLayout,
    ancilla: usize,
    gate: &LogicalGate,
) -> Result<OperatorSequence<T>> {
    match *gate {
        LogicalGate::Z { qubit, theta } => {
            gate_uz(layout, LogicalQubitRef::new(layout, qubit, ancilla)?, lit(theta))
        }
        LogicalGate::X { qubit, theta } => {
            gate_ux(layout, LogicalQubitRef::new(layout, qubit, ancilla)?, lit(theta))
        }
        LogicalGate::ZZ { first, second, theta } => gate_uzz(
            layout,
            LogicalQubitRef::new(layout, first, ancilla)?,
            LogicalQubitRef::new(layout, second, ancilla)?,
            lit(theta),
        ),
    }
}

/// The involution a gate exponentiates.
pub fn gate_generator<T: Real>(
    layout: &SpaceLayout,
    ancilla: usize,
    gate: &LogicalGate,
) -> Result<TruncatedOperator<T>> {
    match *gate {
        LogicalGate::Z { qubit, .. } => logical_z(layout, LogicalQubitRef::new(layout, qubit, ancilla)?),
        LogicalGate::X { qubit, .. } => logical_x(layout, LogicalQubitRef::new(layout, qubit, ancilla)?),
        LogicalGate::ZZ { first, second, .. } => {
            let a = logical_z(layout, LogicalQubitRef::new(layout, first, ancilla)?)?;
            let b = logical_z(layout, LogicalQubitRef::new(layout, second, ancilla)?)?;
            a.compose(&b)
        }
    }
}

/// `1 − ⟨+|ρ_A|+⟩` for one qubit, `ρ_A` its reduced state.
pub fn ancilla_deficit<T: Real>(state: &HybridState<T>, ancilla: usize) -> Result<T> {
    let layout = state.layout();
    let f = layout.qubit_factor(ancilla)?;
    let stride = layout.strides()[f];
    let dim = layout.dim();
    // ⟨X_A⟩ = 2 Re Σ_{i: digit 0} ρ[i + stride, i]
    let mut coherence = C::new(T::zero(), T::zero());
    match state.representation() {
        Representation::Pure(v) => {
            for i in (0..dim).filter(|&i| (i / stride) % 2 == 0) {
                coherence += v[i].conj() * v[i + stride];
            }
        }
        Representation::Density(rho) => {
            for i in (0..dim).filter(|&i| (i / stride) % 2 == 0) {
                coherence += rho[(i + stride, i)];
            }
        }
    }
    let trace = state.trace();
    let x = (coherence.re + coherence.re) / trace;
    Ok((T::one() - x) * lit::<T>(0.5))
}

fn check_ancilla<T: Real>(state: &HybridState<T>, ancilla: usize) -> Result<()> {
    let deficit = to_f64(ancilla_deficit(state, ancilla)?);
    if deficit > ANCILLA_TOL {
        Err(Error::AncillaNotPlus(deficit))
    } else {
        Ok(())
    }
}

/// Applies a gate circuit, asserting the ancilla is `|+⟩` before and after.
pub fn apply_gate<T: Real>(
    state: &HybridState<T>,
    ancilla: usize,
    gate: &LogicalGate,
) -> Result<HybridState<T>> {
    check_ancilla(state, ancilla)?;
    let circuit = gate_circuit(state.layout(), ancilla, gate)?;
    let out = state.apply_map(&circuit)?;
    check_ancilla(&out, ancilla)?;
    Ok(out)
}

/// `|+⟩ ⊗ state` with the new qubit first.
pub fn with_plus_ancilla<T: Real>(state: &HybridState<T>) -> HybridState<T> {
    let s = lit::<T>(std::f64::consts::FRAC_1_SQRT_2);
    let plus = DVector::from_vec(vec![creal(s), creal(s)]);
    let layout = SpaceLayout::new(1, vec![]).expect("single qubit layout");
    HybridState::new_unchecked(layout, Representation::Pure(plus)).tensor(state)
}

/// Keeps the block where `qubit` has value `bit`, dropping the qubit.
/// The caller is responsible for the state living in that block.
fn drop_qubit<T: Real>(state: &HybridState<T>, qubit: usize, bit: usize) -> Result<HybridState<T>> {
    let layout = state.layout();
    let f = layout.qubit_factor(qubit)?;
    let reduced = layout.without_qubit(qubit)?;
    let rows: Vec<usize> = (0..layout.dim())
        .filter(|&i| layout.digits_of(i)[f] == bit)
        .collect();
    let repr = match state.representation() {
        Representation::Pure(v) => Representation::Pure(DVector::from_fn(rows.len(), |i, _| v[rows[i]])),
        Representation::Density(rho) => Representation::Density(DMatrix::from_fn(
            rows.len(),
            rows.len(),
            |r, c| rho[(rows[r], rows[c])],
        )),
    };
    Ok(HybridState::new_unchecked(reduced, repr).with_discarded_tail(state.truncation_tail()))
}

/// One branch of a parity measurement.
#[derive(Clone, Debug)]
pub struct ParityBranch<T: Real> {
    /// `true` for the `+` (even) outcome.
    pub even: bool,
    pub probability: T,
    /// Post-measurement state with the ancilla removed.
    pub state: HybridState<T>,
}

/// How the ancilla readout is resolved.
pub enum MeasurementMode<'a, R: Rng> {
    Sample(&'a mut R),
    Forced(bool),
}

/// Branches of a parity measurement: `Ĉ`, then Hadamard on the ancilla,
/// then a Z-basis readout. Outcome `0` (the `|+⟩` input direction) is the
/// even branch.
pub fn parity_measurement_branches<T: Real>(
    state: &HybridState<T>,
    ancilla: usize,
    mode: usize,
) -> Result<Vec<ParityBranch<T>>> {
    check_ancilla(state, ancilla)?;
    let layout = state.layout();
    let seq = OperatorSequence::new(layout)
        .then(controlled_parity_local(layout, ancilla, mode)?)?
        .then(hadamard_local(layout, ancilla)?)?;
    let after = state.apply_map(&seq)?;
    let mut out = Vec::with_capacity(2);
    for even in [true, false] {
        match after.project_qubit(ancilla, !even) {
            Ok((projected, p)) => out.push(ParityBranch {
                even,
                probability: p,
                state: drop_qubit(&projected, ancilla, usize::from(!even))?,
            }),
            Err(Error::EmptyBranch(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Single parity measurement, sampled or forced to one outcome.
pub fn parity_measurement<T: Real, R: Rng>(
    state: &HybridState<T>,
    ancilla: usize,
    mode: usize,
    how: MeasurementMode<'_, R>,
) -> Result<ParityBranch<T>> {
    let branches = parity_measurement_branches(state, ancilla, mode)?;
    let p_even = branches
        .iter()
        .find(|b| b.even)
        .map(|b| to_f64(b.probability))
        .unwrap_or(0.0);
    let want_even = match how {
        MeasurementMode::Sample(rng) => rng.gen::<f64>() < p_even,
        MeasurementMode::Forced(even) => even,
    };
    branches
        .into_iter()
        .find(|b| b.even == want_even)
        .ok_or(Error::EmptyBranch(if want_even { p_even } else { 1.0 - p_even }))
}

fn hadamard_local<T: Real>(layout: &SpaceLayout, qubit: usize) -> Result<crate::fock::LocalOperator<T>> {
    let s = creal(lit::<T>(std::f64::consts::FRAC_1_SQRT_2));
    let h = DMatrix::from_row_slice(2, 2, &[s, s, s, -s]);
    crate::fock::LocalOperator::new(layout, vec![layout.qubit_factor(qubit)?], h)
}

/// Basis choice `Q^V`: the Fock pairs transformed by a unitary `V`.
#[derive(Clone, Debug)]
pub enum EncodingVariant<T: Real> {
    Fock,
    Unitary(TruncatedOperator<T>),
}

impl<T: Real> EncodingVariant<T> {
    pub fn unitary(v: TruncatedOperator<T>) -> Result<Self> {
        let check = v.unitarity();
        if !check.holds {
            return Err(Error::InvalidParameter(format!(
                "variant is not unitary (residual {:e})",
                to_f64(check.residual)
            )));
        }
        Ok(Self::Unitary(v))
    }

    /// `V|ψ⟩`.
    pub fn transform(&self, v: &CVector<T>) -> CVector<T> {
        match self {
            Self::Fock => v.clone(),
            Self::Unitary(u) => u.apply(v),
        }
    }
}

/// `V O V†`.
pub fn variant_conjugate<T: Real>(
    encoding: &EncodingVariant<T>,
    op: &TruncatedOperator<T>,
) -> Result<TruncatedOperator<T>> {
    match encoding {
        EncodingVariant::Fock => Ok(op.clone()),
        EncodingVariant::Unitary(v) => v.conjugate(op),
    }
}

/// Dense `Ĉ' R_X(θ) Ĉ'` with `Ĉ' = V Ĉ V†`.
pub fn variant_gate_uz<T: Real>(
    encoding: &EncodingVariant<T>,
    layout: &SpaceLayout,
    r: LogicalQubitRef,
    theta: T,
) -> Result<TruncatedOperator<T>> {
    let c = variant_conjugate(encoding, &controlled_parity_local(layout, r.ancilla, r.second_mode())?.embed())?;
    let rx = qubit_rotation_local(layout, r.ancilla, Pauli::X, theta)?.embed();
    TruncatedOperator::sequence(layout, [&c, &rx, &c])
}

/// Worst-case agreement of a gate circuit with `|+⟩ ⊗ exp(iθO)` over the
/// supplied mode states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateCheck {
    /// `max ‖out − |+⟩ ⊗ exp(iθO)ψ‖_∞`.
    pub action_error: f64,
    /// `max 1 − ⟨+|ρ_A|+⟩`.
    pub ancilla_deficit: f64,
}

/// Checks a gate on mode-space inputs `psis` (full layout minus ancilla,
/// which must be qubit 0 of `layout`).
pub fn check_gate<T: Real>(
    layout: &SpaceLayout,
    gate: &LogicalGate,
    psis: &[CVector<T>],
) -> Result<GateCheck> {
    let modes = layout.without_qubit(0)?;
    let circuit = gate_circuit::<T>(layout, 0, gate)?;
    let oracle = exponential_hermitian_unitary(&mode_generator::<T>(&modes, gate)?, lit(gate.theta()))?;
    let mut worst = GateCheck {
        action_error: 0.0,
        ancilla_deficit: 0.0,
    };
    for psi in psis {
        let input = with_plus_ancilla(&HybridState::new_unchecked(modes.clone(), Representation::Pure(psi.clone())));
        let out = input.apply_map(&circuit)?;
        let expected = with_plus_ancilla(&HybridState::new_unchecked(
            modes.clone(),
            Representation::Pure(oracle.apply(psi)),
        ));
        let diff = out.vector().expect("pure") - expected.vector().expect("pure");
        let err = diff.iter().fold(0.0f64, |acc, z| acc.max(to_f64(crate::scalar::cabs(*z))));
        worst.action_error = worst.action_error.max(err);
        worst.ancilla_deficit = worst
            .ancilla_deficit
            .max(to_f64(ancilla_deficit(&out, 0)?).abs());
    }
    Ok(worst)
}

/// Gate generator on a mode-only layout.
pub fn mode_generator<T: Real>(modes: &SpaceLayout, gate: &LogicalGate) -> Result<TruncatedOperator<T>> {
    let z = |k: usize| -> Result<TruncatedOperator<T>> { Ok(parity_local(modes, 2 * k + 1)?.embed()) };
    match *gate {
        LogicalGate::Z { qubit, .. } => z(qubit),
        LogicalGate::X { qubit, .. } => Ok(two_mode_swap_local(modes, 2 * qubit, 2 * qubit + 1)?.embed()),
        LogicalGate::ZZ { first, second, .. } => {
            // both parities at once; a dense product of the two costs D³
            let (a, b) = (modes.mode_factor(2 * first + 1)?, modes.mode_factor(2 * second + 1)?);
            let m = kron(&parity_matrix::<T>(modes.factor_dim(a)), &parity_matrix(modes.factor_dim(b)));
            Ok(LocalOperator::new(modes, vec![a, b], m)?.embed())
        }
    }
}

/// `max |⟨ψ|(XZ + ZX)|ψ⟩|`-style anticommutator residual on vectors.
pub fn anticommutator_residual<T: Real>(
    x: &TruncatedOperator<T>,
    z: &TruncatedOperator<T>,
    psi: &CVector<T>,
) -> T {
    let v = x.apply(&z.apply(psi)) + z.apply(&x.apply(psi));
    v.iter().fold(T::zero(), |acc, c| acc.max(crate::scalar::cabs(*c)))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ops::{basis_vector, beam_splitter_5050, parity, phase_rotation};
    use crate::scalar::{max_abs, CMatrix};
    use crate::thermal::{even_thermal, thermal_state, ThermalSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type V = CVector<f64>;

    fn random_in(layout: &SpaceLayout, support: &[usize], rng: &mut ChaCha8Rng) -> V {
        let mut v = DVector::zeros(layout.dim());
        for &i in support {
            v[i] = cplx(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        let n = v.norm();
        v.unscale(n)
    }

    /// Indices of two-mode basis states with total number at most `max_total`.
    fn low_number(layout: &SpaceLayout, max_total: usize) -> Vec<usize> {
        let q = layout.qubit_count();
        (0..layout.dim())
            .filter(|&i| layout.digits_of(i)[q..].iter().sum::<usize>() <= max_total)
            .collect()
    }

    #[test]
    fn logical_operators_on_basis() {
        let layout = SpaceLayout::new(1, vec![4, 4]).unwrap();
        let r = LogicalQubitRef::new(&layout, 0, 0).unwrap();
        let z = logical_z::<f64>(&layout, r).unwrap();
        let x = logical_x::<f64>(&layout, r).unwrap();
        let zero = basis_vector::<f64>(&layout, &[0, 1, 0]);
        let one = basis_vector::<f64>(&layout, &[0, 0, 1]);
        assert_eq!(z.apply(&zero), zero);
        assert_eq!(z.apply(&one), -one.clone());
        assert_eq!(x.apply(&zero), one);
    }

    #[test]
    fn anticommutation_within_a_basis_pair() {
        let d = 6;
        let layout = SpaceLayout::modes(vec![d, d]).unwrap().with_qubits(1);
        let r = LogicalQubitRef::new(&layout, 0, 0).unwrap();
        let z = logical_z::<f64>(&layout, r).unwrap();
        let x = logical_x::<f64>(&layout, r).unwrap();
        // (m, n) = (1, 2): |3⟩|4⟩ and |4⟩|3⟩, for either ancilla value
        let support: Vec<usize> = [[0, 3, 4], [0, 4, 3], [1, 3, 4], [1, 4, 3]]
            .iter()
            .map(|dg| layout.index_of(dg))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let psi = random_in(&layout, &support, &mut rng);
            assert!(anticommutator_residual(&x, &z, &psi) < 1e-14);
        }
    }

    #[test]
    fn involution_exponential() {
        let layout = SpaceLayout::modes(vec![5, 5]).unwrap();
        let p = parity::<f64>(&layout, 0).unwrap();
        let e = exponential_hermitian_unitary(&p, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(e.distance_max(&p.scale(cplx(0.0, 1.0))).unwrap() < 1e-15);
        let e = exponential_hermitian_unitary(&p, std::f64::consts::PI).unwrap();
        let minus = TruncatedOperator::identity(&layout).scale(creal(-1.0));
        assert!(e.distance_max(&minus).unwrap() < 1e-15);
        let pp = p.compose(&parity::<f64>(&layout, 1).unwrap()).unwrap();
        let e = exponential_hermitian_unitary(&pp, 0.3).unwrap();
        let oracle = pp.scale(cplx(0.0, 0.3)).exp();
        assert!(e.distance_max(&oracle).unwrap() < 1e-12);
        let n = crate::fock::ops::number::<f64>(&layout, 0).unwrap();
        assert!(matches!(
            exponential_hermitian_unitary(&n, 0.3),
            Err(Error::NotInvolution(_))
        ));
    }

    #[test]
    fn uz_phases_on_basis_pair() {
        let d = 8;
        let layout = SpaceLayout::new(1, vec![d, d]).unwrap();
        let modes = layout.without_qubit(0).unwrap();
        let theta = std::f64::consts::FRAC_PI_2;
        let gate = LogicalGate::Z { qubit: 0, theta };
        let oracle = mode_generator::<f64>(&modes, &gate)
            .unwrap()
            .scale(cplx(0.0, theta))
            .exp();
        for (digits, phase) in [([1, 0], cplx(0.0, 1.0)), ([0, 1], cplx(0.0, -1.0))] {
            let psi = basis_vector::<f64>(&modes, &digits);
            let check = check_gate(&layout, &gate, &[psi.clone()]).unwrap();
            assert!(check.action_error < 1e-12);
            assert!(check.ancilla_deficit < 1e-12);
            assert!((oracle.apply(&psi) - &psi * phase).norm() < 1e-10);
        }
        let id = check_gate::<f64>(
            &layout,
            &LogicalGate::Z { qubit: 0, theta: 0.0 },
            &[basis_vector(&modes, &[3, 2])],
        )
        .unwrap();
        assert!(id.action_error < 1e-15);
    }

    #[test]
    fn ux_is_exponential_of_swap() {
        let d = 6;
        let layout = SpaceLayout::new(1, vec![d, d]).unwrap();
        let modes = layout.without_qubit(0).unwrap();
        let support = low_number(&modes, d - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let theta = rng.gen_range(-3.0..3.0);
            let psis: Vec<V> = (0..3).map(|_| random_in(&modes, &support, &mut rng)).collect();
            let check = check_gate::<f64>(&layout, &LogicalGate::X { qubit: 0, theta }, &psis).unwrap();
            assert!(check.action_error < 1e-9, "{check:?}");
            assert!(check.ancilla_deficit < 1e-10);
        }
    }

    #[test]
    fn uzz_on_two_qubits() {
        let d = 4;
        let layout = SpaceLayout::new(1, vec![d; 4]).unwrap();
        let modes = layout.without_qubit(0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let all: Vec<usize> = (0..modes.dim()).collect();
        let psis: Vec<V> = (0..3).map(|_| random_in(&modes, &all, &mut rng)).collect();
        let gate = LogicalGate::ZZ { first: 0, second: 1, theta: 0.77 };
        let check = check_gate::<f64>(&layout, &gate, &psis).unwrap();
        assert!(check.action_error < 1e-12);
        assert!(check.ancilla_deficit < 1e-12);
        assert!(gate_circuit::<f64>(&layout, 0, &LogicalGate::ZZ { first: 1, second: 1, theta: 0.1 }).is_err());
    }

    #[test]
    fn gates_conserve_total_parity() {
        let d = 6;
        let layout = SpaceLayout::new(1, vec![d, d]).unwrap();
        let modes = layout.without_qubit(0).unwrap();
        let pp = parity::<f64>(&layout, 0)
            .unwrap()
            .compose(&parity::<f64>(&layout, 1).unwrap())
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = random_in(&modes, &low_number(&modes, d - 1), &mut rng);
        let st = with_plus_ancilla(&HybridState::from_pure(&modes, psi).unwrap());
        let before = st.expectation(&pp).unwrap().re;
        for gate in [
            LogicalGate::Z { qubit: 0, theta: 0.4 },
            LogicalGate::X { qubit: 0, theta: 1.1 },
        ] {
            let after = apply_gate(&st, 0, &gate).unwrap().expectation(&pp).unwrap().re;
            assert!((after - before).abs() < 1e-10);
        }
        let b = beam_splitter_5050::<f64>(&layout, 0, 1).unwrap();
        assert!((st.apply_unitary(&b).unwrap().expectation(&pp).unwrap().re - before).abs() < 1e-10);
    }

    #[test]
    fn ancilla_must_be_plus() {
        let layout = SpaceLayout::new(1, vec![3, 3]).unwrap();
        let st = HybridState::<f64>::fock(&layout, &[0, 1, 0]).unwrap();
        assert!(matches!(
            apply_gate(&st, 0, &LogicalGate::Z { qubit: 0, theta: 0.1 }),
            Err(Error::AncillaNotPlus(_))
        ));
    }

    #[test]
    fn measurement_examples() {
        let layout = SpaceLayout::modes(vec![6]).unwrap();
        let vac = with_plus_ancilla(&HybridState::<f64>::fock(&layout, &[0]).unwrap());
        let br = parity_measurement_branches(&vac, 0, 0).unwrap();
        assert_eq!(br.len(), 1);
        assert!(br[0].even && (br[0].probability - 1.0).abs() < 1e-15);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = DVector::zeros(6);
        v[0] = creal(s);
        v[1] = creal(s);
        let sup = with_plus_ancilla(&HybridState::from_pure(&layout, v).unwrap());
        let br = parity_measurement_branches(&sup, 0, 0).unwrap();
        assert_eq!(br.len(), 2);
        for b in &br {
            assert!((b.probability - 0.5).abs() < 1e-14);
            let want = if b.even { 0 } else { 1 };
            assert!((b.state.populations()[want] - 1.0).abs() < 1e-14);
        }

        let fine = ThermalSpec::new(1.0).unwrap().with_tail_tolerance(1e-12);
        let th = with_plus_ancilla(&thermal_state::<f64>(&fine).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let even = parity_measurement(&th, 0, 0, MeasurementMode::<ChaCha8Rng>::Forced(true)).unwrap();
        assert!((even.probability - 2.0 / 3.0).abs() < 1e-10);
        let closed: CMatrix<f64> = even_thermal::<f64>(&fine).unwrap().density();
        assert!(max_abs(&(even.state.density() - closed)) < 1e-10);
        // nondemolition: a second measurement repeats the outcome
        let again = parity_measurement_branches(&with_plus_ancilla(&even.state), 0, 0).unwrap();
        assert_eq!(again.len(), 1);
        assert!(again[0].even && (again[0].probability - 1.0).abs() < 1e-10);
        let sampled = parity_measurement(&th, 0, 0, MeasurementMode::Sample(&mut rng)).unwrap();
        let p = if sampled.even { 2.0 / 3.0 } else { 1.0 / 3.0 };
        assert!((sampled.probability - p).abs() < 1e-10);
        assert!(matches!(
            parity_measurement(&vac, 0, 0, MeasurementMode::<ChaCha8Rng>::Forced(false)),
            Err(Error::EmptyBranch(_))
        ));
    }

    #[test]
    fn beam_splitter_variant() {
        let d = 6;
        let layout = SpaceLayout::new(1, vec![d, d]).unwrap();
        let r = LogicalQubitRef::new(&layout, 0, 0).unwrap();
        let v = EncodingVariant::unitary(beam_splitter_5050::<f64>(&layout, 0, 1).unwrap()).unwrap();
        assert!(matches!(variant_conjugate(&EncodingVariant::Fock, &logical_z::<f64>(&layout, r).unwrap()), Ok(_)));
        let theta = 0.63;
        let gate = variant_gate_uz(&v, &layout, r, theta).unwrap();
        let zv = variant_conjugate(&v, &logical_z::<f64>(&layout, r).unwrap()).unwrap();
        let oracle = zv.scale(cplx(0.0, theta)).exp();
        let modes = layout.without_qubit(0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            // modes-only input in the exact beam-splitter blocks
            let support: Vec<usize> = low_number(&modes, d - 1);
            let psi = random_in(&modes, &support, &mut rng);
            let input = with_plus_ancilla(&HybridState::from_pure(&modes, psi).unwrap());
            let out = gate.apply(input.vector().unwrap());
            let expected = oracle.apply(input.vector().unwrap());
            assert!((out - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn conjugated_pauli_algebra() {
        let d = 6;
        let layout = SpaceLayout::new(1, vec![d, d]).unwrap();
        let r = LogicalQubitRef::new(&layout, 0, 0).unwrap();
        let z = logical_z::<f64>(&layout, r).unwrap();
        let x = logical_x::<f64>(&layout, r).unwrap();
        let b = beam_splitter_5050::<f64>(&layout, 0, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let ph0 = phase_rotation::<f64>(&layout, 0, rng.gen_range(0.0..6.0)).unwrap();
            let ph1 = phase_rotation::<f64>(&layout, 1, rng.gen_range(0.0..6.0)).unwrap();
            let v = TruncatedOperator::sequence(&layout, [&ph0, &b, &ph1, &b]).unwrap();
            let enc = EncodingVariant::unitary(v).unwrap();
            let zv = variant_conjugate(&enc, &z).unwrap();
            let xv = variant_conjugate(&enc, &x).unwrap();
            // |ψ_0⟩ = V|2m+1⟩|2n⟩, |ψ_1⟩ = V|2n⟩|2m+1⟩ for (m, n) = (1, 1)
            let psi0 = enc.transform(&basis_vector(&layout, &[0, 3, 2]));
            let psi1 = enc.transform(&basis_vector(&layout, &[0, 2, 3]));
            assert!((zv.apply(&psi0) - &psi0).norm() < 1e-12);
            assert!((zv.apply(&psi1) + &psi1).norm() < 1e-12);
            assert!((xv.apply(&psi0) - &psi1).norm() < 1e-12);
            assert!(anticommutator_residual(&xv, &zv, &(&psi0 + &psi1 * cplx(0.3, 0.2))) < 1e-12);
        }
    }
}
