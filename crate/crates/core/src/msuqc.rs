//! Logical circuits executed on TQP qubits, from pure basis pairs or from
//! thermal mixtures, plus a plain qubit-space reference.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::circuit::LogicalCircuit;
use crate::encoding::{ancilla_deficit, apply_gate, gate_circuit, with_plus_ancilla, ANCILLA_TOL};
use crate::error::{Error, Result};
use crate::fock::state::Representation;
use crate::fock::{HybridState, SpaceLayout, SubspaceBasis};
use crate::scalar::{creal, lit, sandwich, to_f64, CMatrix, Real, C};
use crate::thermal::ThermalSpec;

pub const DEFAULT_CUTOFF: usize = 8;
pub const DEFAULT_DIMENSION_BUDGET: usize = 1 << 15;
/// Qubit count accepted by the qubit-space reference.
pub const ORACLE_MAX_QUBITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Pure,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComputationResult {
    /// Probability of reading every logical qubit as `0`.
    pub a: f64,
    pub mode: RunMode,
    /// `(m_k, n_k)` per qubit for pure runs.
    pub basis_indices: Option<Vec<(usize, usize)>>,
    pub seed: Option<u64>,
    /// Thermal weight discarded by the cutoff (mixed runs).
    pub truncation_tail: f64,
    /// Population that left the initial basis pairs (pure runs) or the
    /// total-number sectors (mixed runs).
    pub leakage: f64,
    /// Worst `1 − ⟨+|ρ_A|+⟩` seen after any gate.
    pub max_ancilla_deficit: f64,
    pub cutoff: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub cutoff: usize,
    pub dimension_budget: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            cutoff: DEFAULT_CUTOFF,
            dimension_budget: DEFAULT_DIMENSION_BUDGET,
        }
    }
}

impl RunOptions {
    pub fn with_cutoff(cutoff: usize) -> Self {
        Self {
            cutoff,
            ..Self::default()
        }
    }
}

/// `|⟨0…0|U|0…0⟩|²` computed on `K` plain qubits.
pub fn qubit_space_oracle(circuit: &LogicalCircuit) -> Result<f64> {
    circuit.validate()?;
    let k = circuit.qubits;
    if k > ORACLE_MAX_QUBITS {
        return Err(Error::DimensionBudget {
            dim: 1 << k,
            budget: 1 << ORACLE_MAX_QUBITS,
        });
    }
    let dim = 1usize << k;
    let mut psi = vec![Complex::new(0.0, 0.0); dim];
    psi[0] = Complex::new(1.0, 0.0);
    // qubit j is bit j; Z eigenvalue +1 on bit value 0
    let z = |i: usize, j: usize| if i >> j & 1 == 0 { 1.0 } else { -1.0 };
    for gate in circuit.gates() {
        match gate {
            crate::encoding::LogicalGate::Z { qubit, theta } => {
                for (i, amp) in psi.iter_mut().enumerate() {
                    *amp *= Complex::from_polar(1.0, theta * z(i, qubit));
                }
            }
            crate::encoding::LogicalGate::ZZ { first, second, theta } => {
                for (i, amp) in psi.iter_mut().enumerate() {
                    *amp *= Complex::from_polar(1.0, theta * z(i, first) * z(i, second));
                }
            }
            crate::encoding::LogicalGate::X { qubit, theta } => {
                let (c, s) = (theta.cos(), Complex::new(0.0, theta.sin()));
                let bit = 1 << qubit;
                for i in (0..dim).filter(|i| i & bit == 0) {
                    let (a, b) = (psi[i], psi[i | bit]);
                    psi[i] = a * c + b * s;
                    psi[i | bit] = b * c + a * s;
                }
            }
        }
    }
    Ok(psi[0].norm_sqr())
}

fn mode_layout(qubits: usize, cutoff: usize) -> Result<SpaceLayout> {
    SpaceLayout::uniform(0, 2 * qubits, cutoff)
}

fn check_budget(dim: usize, budget: usize) -> Result<()> {
    if dim > budget {
        Err(Error::DimensionBudget { dim, budget })
    } else {
        Ok(())
    }
}

/// Checks that `|2m+1⟩|2n⟩` and its swap lie in the exactly represented
/// part of the space, i.e. `2m+1 + 2n ≤ d − 1`.
pub fn check_basis_pair(m: usize, n: usize, cutoff: usize) -> Result<()> {
    if 2 * m + 1 + 2 * n > cutoff - 1 {
        Err(Error::BasisOutOfRange { m, n, cutoff })
    } else {
        Ok(())
    }
}

/// Probability that every logical `Z` reads `+1`, i.e. all second modes even.
fn readout(layout: &SpaceLayout, populations: impl Iterator<Item = (usize, f64)>) -> f64 {
    let q = layout.qubit_count();
    populations
        .filter(|&(i, _)| {
            let digits = layout.digits_of(i);
            digits[q..].chunks(2).all(|pair| pair[1] % 2 == 0)
        })
        .map(|(_, p)| p)
        .sum()
}

/// Runs `circuit` on `|+⟩_A ⊗_k |2m_k+1⟩|2n_k⟩`.
pub fn run_pure<T: Real>(
    circuit: &LogicalCircuit,
    basis: &[(usize, usize)],
    options: &RunOptions,
) -> Result<ComputationResult> {
    circuit.validate()?;
    let k = circuit.qubits;
    if basis.len() != k {
        return Err(Error::InvalidParameter(format!(
            "{} basis pairs for {k} logical qubits",
            basis.len()
        )));
    }
    let d = options.cutoff;
    for &(m, n) in basis {
        check_basis_pair(m, n, d)?;
    }
    let modes = mode_layout(k, d)?;
    let layout = modes.with_qubits(1);
    check_budget(layout.dim(), options.dimension_budget)?;
    let digits: Vec<usize> = basis.iter().flat_map(|&(m, n)| [2 * m + 1, 2 * n]).collect();
    let mut state = with_plus_ancilla(&HybridState::<T>::fock(&modes, &digits)?);
    let mut worst = 0.0f64;
    for gate in circuit.gates() {
        state = apply_gate(&state, 0, &gate)?;
        worst = worst.max(to_f64(ancilla_deficit(&state, 0)?).abs());
    }
    let pops: Vec<f64> = state.populations().into_iter().map(to_f64).collect();
    let a = readout(&layout, pops.iter().copied().enumerate());
    let leakage: f64 = pops
        .iter()
        .enumerate()
        .filter(|&(i, _)| {
            let dg = layout.digits_of(i);
            !dg[1..].chunks(2).zip(basis).all(|(pair, &(m, n))| {
                let (odd, even) = (2 * m + 1, 2 * n);
                (pair[0], pair[1]) == (odd, even) || (pair[0], pair[1]) == (even, odd)
            })
        })
        .map(|(_, p)| p)
        .sum();
    Ok(ComputationResult {
        a,
        mode: RunMode::Pure,
        basis_indices: Some(basis.to_vec()),
        seed: None,
        truncation_tail: 0.0,
        leakage,
        max_ancilla_deficit: worst,
        cutoff: d,
    })
}

/// Thermal weight of `|a⟩|b⟩` in `ρ_odd ⊗ ρ_even` (zero unless `a` odd, `b` even).
fn pair_weight(q2: f64, a: usize, b: usize) -> f64 {
    if a % 2 == 1 && b % 2 == 0 {
        let (i, j) = ((a - 1) / 2, b / 2);
        (1.0 - q2) * q2.powi(i as i32) * (1.0 - q2) * q2.powi(j as i32)
    } else {
        0.0
    }
}

/// Weights of the odd total-number sectors `N ≤ d − 1` of one qubit.
fn sector_weights(q2: f64, d: usize) -> Vec<(usize, f64)> {
    (1..d)
        .step_by(2)
        .map(|total| (total, (0..=total).map(|a| pair_weight(q2, a, total - a)).sum::<f64>()))
        .filter(|&(_, w)| w > 0.0)
        .collect()
}

/// All combinations of per-qubit sectors with their joint weight.
fn sector_products(per_qubit: &[(usize, f64)], k: usize) -> Vec<(Vec<usize>, f64)> {
    let mut combos = vec![(Vec::new(), 1.0)];
    for _ in 0..k {
        combos = combos
            .into_iter()
            .flat_map(|(totals, w)| {
                per_qubit.iter().map(move |&(n, wn)| {
                    let mut t = totals.clone();
                    t.push(n);
                    (t, w * wn)
                })
            })
            .collect();
    }
    combos
}

/// Basis of one sector: ancilla outermost, then `(a, N_k − a)` per qubit.
fn sector_basis(layout: &SpaceLayout, totals: &[usize]) -> Vec<Vec<usize>> {
    let mut mode_digits: Vec<Vec<usize>> = vec![Vec::new()];
    for &total in totals {
        mode_digits = mode_digits
            .into_iter()
            .flat_map(|prefix| {
                (0..=total).map(move |a| {
                    let mut p = prefix.clone();
                    p.extend([a, total - a]);
                    p
                })
            })
            .collect();
    }
    debug_assert_eq!(layout.qubit_count(), 1);
    [0, 1]
        .iter()
        .flat_map(|&bit| {
            mode_digits.iter().map(move |m| {
                let mut digits = vec![bit];
                digits.extend(m);
                digits
            })
        })
        .collect()
}

/// Runs `circuit` on `|+⟩⟨+| ⊗_k ρ_odd ⊗ ρ_even`, conditioned on each
/// qubit's total excitation number staying below the cutoff.
///
/// The density matrix is block diagonal in the per-qubit total numbers and
/// every gate preserves them, so each block is evolved on its own.
pub fn run_mixed<T: Real>(
    circuit: &LogicalCircuit,
    spec: &ThermalSpec,
    options: &RunOptions,
) -> Result<ComputationResult> {
    circuit.validate()?;
    spec.validate()?;
    let k = circuit.qubits;
    let d = options.cutoff;
    let layout = mode_layout(k, d)?.with_qubits(1);
    let q = spec.ratio();
    let q2 = q * q;
    let per_qubit = sector_weights(q2, d);
    let kept_per_qubit: f64 = per_qubit.iter().map(|&(_, w)| w).sum();
    let kept = kept_per_qubit.powi(k as i32);
    let gates = circuit.gates();
    let circuits = gates
        .iter()
        .map(|g| gate_circuit::<T>(&layout, 0, g))
        .collect::<Result<Vec<_>>>()?;

    let mut a_total = 0.0;
    let mut leakage = 0.0f64;
    let mut worst = 0.0f64;
    for (totals, weight) in sector_products(&per_qubit, k) {
        let digits = sector_basis(&layout, &totals);
        let size = digits.len();
        check_budget(size, options.dimension_budget)?;
        let basis = SubspaceBasis::new(digits.iter().map(|dg| layout.index_of(dg)).collect());
        let half = size / 2;
        let mut rho: CMatrix<T> = DMatrix::zeros(size, size);
        for j in 0..half {
            let modes = &digits[j][1..];
            let w: f64 = modes.chunks(2).map(|p| pair_weight(q2, p[0], p[1])).product();
            if w == 0.0 {
                continue;
            }
            let v = creal(lit::<T>(0.5 * w / weight));
            // |+⟩⟨+| on the ancilla
            for (r, c) in [(j, j), (j, j + half), (j + half, j), (j + half, j + half)] {
                rho[(r, c)] = v;
            }
        }
        for seq in &circuits {
            let (u, leak) = seq.restrict(&basis);
            leakage = leakage.max(to_f64(leak));
            rho = sandwich(&u, &rho);
            let deficit = sector_deficit(&rho, half);
            worst = worst.max(deficit.abs());
            if deficit > ANCILLA_TOL {
                return Err(Error::AncillaNotPlus(deficit));
            }
        }
        let pops = (0..size).map(|i| (basis.indices()[i], to_f64(rho[(i, i)].re)));
        a_total += weight * readout(&layout, pops);
    }
    Ok(ComputationResult {
        a: a_total / kept,
        mode: RunMode::Mixed,
        basis_indices: None,
        seed: None,
        truncation_tail: 1.0 - kept,
        leakage,
        max_ancilla_deficit: worst,
        cutoff: d,
    })
}

fn sector_deficit<T: Real>(rho: &CMatrix<T>, half: usize) -> f64 {
    let mut coherence = C::new(T::zero(), T::zero());
    for j in 0..half {
        coherence += rho[(j + half, j)];
    }
    let trace = to_f64(rho.trace().re);
    0.5 * (1.0 - 2.0 * to_f64(coherence.re) / trace)
}

/// Dense single-qubit mixed run over the full `2·d²` space, used to
/// cross-check the sector route.
pub fn run_mixed_dense<T: Real>(
    circuit: &LogicalCircuit,
    spec: &ThermalSpec,
    options: &RunOptions,
) -> Result<ComputationResult> {
    circuit.validate()?;
    spec.validate()?;
    if circuit.qubits != 1 {
        return Err(Error::InvalidParameter(
            "dense mixed runs support one logical qubit".into(),
        ));
    }
    let d = options.cutoff;
    let modes = mode_layout(1, d)?;
    let layout = modes.with_qubits(1);
    check_budget(layout.dim(), options.dimension_budget)?;
    let q2 = spec.ratio().powi(2);
    let weights: Vec<f64> = (0..modes.dim())
        .map(|i| {
            let dg = modes.digits_of(i);
            if dg[0] + dg[1] <= d - 1 {
                pair_weight(q2, dg[0], dg[1])
            } else {
                0.0
            }
        })
        .collect();
    let kept: f64 = weights.iter().sum();
    let diag = DVector::from_iterator(weights.len(), weights.iter().map(|&w| creal(lit::<T>(w / kept))));
    let rho0 = HybridState::new_unchecked(modes, Representation::Density(DMatrix::from_diagonal(&diag)));
    let mut state = with_plus_ancilla(&rho0);
    let mut worst = 0.0f64;
    for gate in circuit.gates() {
        state = apply_gate(&state, 0, &gate)?;
        worst = worst.max(to_f64(ancilla_deficit(&state, 0)?).abs());
    }
    let pops: Vec<f64> = state.populations().into_iter().map(to_f64).collect();
    Ok(ComputationResult {
        a: readout(&layout, pops.into_iter().enumerate()),
        mode: RunMode::Mixed,
        basis_indices: None,
        seed: None,
        truncation_tail: 1.0 - kept,
        leakage: 0.0,
        max_ancilla_deficit: worst,
        cutoff: d,
    })
}

/// Largest `|A − A'|` between the entries.
pub fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitStep;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_step(phi: f64, theta: f64) -> LogicalCircuit {
        LogicalCircuit::new(1, vec![CircuitStep { phi: vec![phi], theta: vec![theta], gamma: vec![] }]).unwrap()
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(qubit_space_oracle(&LogicalCircuit::empty(3)).unwrap(), 1.0);
        let quarter = one_step(0.0, std::f64::consts::FRAC_PI_4);
        assert!((qubit_space_oracle(&quarter).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pure_examples() {
        let opts = RunOptions::with_cutoff(8);
        let empty = run_pure::<f64>(&LogicalCircuit::empty(1), &[(0, 0)], &opts).unwrap();
        assert!((empty.a - 1.0).abs() < 1e-14);
        let flip = run_pure::<f64>(&one_step(0.0, std::f64::consts::FRAC_PI_2), &[(1, 1)], &opts).unwrap();
        assert!(flip.a.abs() < 1e-10);
        let phases = LogicalCircuit::new(
            1,
            (0..3).map(|i| CircuitStep { phi: vec![0.3 * i as f64 + 0.1], theta: vec![0.0], gamma: vec![] }).collect(),
        )
        .unwrap();
        let r = run_pure::<f64>(&phases, &[(2, 0)], &opts).unwrap();
        assert!((r.a - 1.0).abs() < 1e-10);
        assert!(matches!(
            run_pure::<f64>(&LogicalCircuit::empty(1), &[(2, 2)], &opts),
            Err(Error::BasisOutOfRange { .. })
        ));
    }

    #[test]
    fn pure_runs_agree_across_basis_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let opts = RunOptions::with_cutoff(8);
        for _ in 0..5 {
            let c = LogicalCircuit::random(1, 2, &mut rng);
            let oracle = qubit_space_oracle(&c).unwrap();
            let values: Vec<f64> = [(0, 0), (1, 1), (0, 3), (2, 1)]
                .iter()
                .map(|&p| {
                    let r = run_pure::<f64>(&c, &[p], &opts).unwrap();
                    assert!(r.leakage < 1e-9);
                    assert!(r.max_ancilla_deficit < 1e-10);
                    r.a
                })
                .collect();
            assert!(spread(&values) < 1e-10);
            assert!((values[0] - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn two_qubit_pure_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = LogicalCircuit::random(2, 1, &mut rng);
        let oracle = qubit_space_oracle(&c).unwrap();
        let opts = RunOptions::with_cutoff(6);
        for basis in [[(0, 0), (0, 0)], [(1, 0), (0, 2)], [(0, 1), (2, 0)]] {
            let r = run_pure::<f64>(&c, &basis, &opts).unwrap();
            assert!((r.a - oracle).abs() < 1e-9, "{} vs {oracle}", r.a);
        }
    }

    #[test]
    fn mixed_matches_oracle_and_dense_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let opts = RunOptions::with_cutoff(8);
        for n in [0.5, 1.0, 2.0] {
            let spec = ThermalSpec::new(n).unwrap();
            let c = LogicalCircuit::random(1, 2, &mut rng);
            let oracle = qubit_space_oracle(&c).unwrap();
            let sector = run_mixed::<f64>(&c, &spec, &opts).unwrap();
            let dense = run_mixed_dense::<f64>(&c, &spec, &opts).unwrap();
            assert!((sector.a - oracle).abs() < 1e-8);
            assert!((dense.a - sector.a).abs() < 1e-10);
            assert!((dense.truncation_tail - sector.truncation_tail).abs() < 1e-12);
            assert!(sector.leakage < 1e-12);
        }
    }

    #[test]
    fn zero_temperature_mixed_equals_pure_vacuum_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = LogicalCircuit::random(1, 3, &mut rng);
        let opts = RunOptions::default();
        let mixed = run_mixed::<f64>(&c, &ThermalSpec::new(0.0).unwrap(), &opts).unwrap();
        let pure = run_pure::<f64>(&c, &[(0, 0)], &opts).unwrap();
        assert!((mixed.a - pure.a).abs() < 1e-10);
        assert_eq!(mixed.truncation_tail, 0.0);
    }

    #[test]
    fn two_qubit_entangler_mixed() {
        let c = LogicalCircuit::new(
            2,
            vec![
                CircuitStep { phi: vec![0.2, -0.4], theta: vec![0.9, 0.3], gamma: vec![std::f64::consts::FRAC_PI_4] },
                CircuitStep { phi: vec![0.0, 0.0], theta: vec![0.5, -1.2], gamma: vec![0.0] },
            ],
        )
        .unwrap();
        let oracle = qubit_space_oracle(&c).unwrap();
        let r = run_mixed::<f64>(&c, &ThermalSpec::new(1.0).unwrap(), &RunOptions::with_cutoff(8)).unwrap();
        assert!((r.a - oracle).abs() < 1e-8);
        assert!(r.truncation_tail > 0.0 && r.truncation_tail < 1.0);
    }
}
