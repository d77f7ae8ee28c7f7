use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tqpsim::encoding::{
    anticommutator_residual, check_gate, gate_circuit, logical_x, logical_z, LogicalGate, LogicalQubitRef,
};
use tqpsim::fock::ops::{
    basis_vector, beam_splitter_5050, controlled_parity, parity, phase_rotation, qubit_rotation, total_number,
    two_mode_swap,
};
use tqpsim::fock::{Pauli, SpaceLayout};
use tqpsim::{Complex, Operator, Vector};

use crate::config::Context;
use crate::error::CliError;
use crate::output::{all_passed, write_json, Check, Outcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgebraParams {
    pub cutoffs: Vec<usize>,
    pub tolerance: f64,
    pub gate_samples: usize,
    /// Cutoff for single-qubit gate checks; needs `2m+1 + 2n ≤ d−1`.
    pub gate_cutoff: usize,
    /// Cutoff for the two-qubit checks, which use no beam splitter.
    pub zz_cutoff: usize,
    /// Largest `2m+1` and `2n` drawn.
    pub max_label: usize,
    pub gate_tolerance: f64,
    pub ancilla_tolerance: f64,
}

impl Default for AlgebraParams {
    fn default() -> Self {
        Self {
            cutoffs: vec![6, 12, 20],
            tolerance: 1e-10,
            gate_samples: 30,
            gate_cutoff: 10,
            zz_cutoff: 6,
            max_label: 5,
            gate_tolerance: 1e-9,
            ancilla_tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Residual {
    pub name: &'static str,
    pub cutoff: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GateSample {
    pub gate: LogicalGate,
    /// `(m, n)` per logical qubit.
    pub labels: Vec<(usize, usize)>,
    pub action_error: f64,
    pub ancilla_deficit: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraResults {
    pub residuals: Vec<Residual>,
    pub gates: Vec<GateSample>,
    pub max_residual: f64,
    pub max_anticommutator: f64,
    pub max_gate_error: f64,
    pub max_ancilla_deficit: f64,
}

fn max_abs_vec(v: &Vector) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn commutator_norm(a: &Operator, b: &Operator) -> Result<f64, tqpsim::Error> {
    Ok(a.commutator(b)?.max_abs())
}

/// Encoded basis states `|2m+1, 2n⟩` and `|2n, 2m+1⟩` behind an ancilla.
fn code_pair(layout: &SpaceLayout, m: usize, n: usize) -> (Vector, Vector) {
    (
        basis_vector(layout, &[0, 2 * m + 1, 2 * n]),
        basis_vector(layout, &[0, 2 * n, 2 * m + 1]),
    )
}

/// Pauli algebra, involutions, unitarity and conservation laws at one cutoff.
fn residuals_at(d: usize) -> Result<Vec<Residual>, tqpsim::Error> {
    let modes = SpaceLayout::modes(vec![d, d])?;
    let hybrid = SpaceLayout::new(1, vec![d, d])?;
    let r = LogicalQubitRef::new(&hybrid, 0, 0)?;
    let z = logical_z::<f64>(&hybrid, r)?;
    let x = logical_x::<f64>(&hybrid, r)?;
    let p = parity::<f64>(&modes, 1)?;
    let s = two_mode_swap::<f64>(&modes, 0, 1)?;
    let c = controlled_parity::<f64>(&hybrid, 0, 1)?;
    let b = beam_splitter_5050::<f64>(&modes, 0, 1)?;
    let n_modes = total_number::<f64>(&modes);
    let n_hybrid = total_number::<f64>(&hybrid);
    let total_parity = parity::<f64>(&hybrid, 0)?.compose(&parity(&hybrid, 1)?)?;

    let mut pauli: f64 = 0.0;
    let mut anti: f64 = 0.0;
    for m in 0..d {
        for n in 0..d {
            if 2 * m + 1 > d - 1 || 2 * n > d - 1 {
                continue;
            }
            let (psi0, psi1) = code_pair(&hybrid, m, n);
            pauli = pauli
                .max(max_abs_vec(&(z.apply(&psi0) - &psi0)))
                .max(max_abs_vec(&(z.apply(&psi1) + &psi1)))
                .max(max_abs_vec(&(x.apply(&psi0) - &psi1)))
                .max(max_abs_vec(&(x.apply(&psi1) - &psi0)));
            let mixed = (&psi0 * Complex::new(0.6, 0.0) + &psi1 * Complex::new(0.0, 0.8)).normalize();
            for v in [&psi0, &psi1, &mixed] {
                anti = anti.max(anticommutator_residual(&x, &z, v));
            }
        }
    }

    let mut out = vec![
        ("pauli action on code states", pauli),
        ("Z_L X_L + X_L Z_L on code states", anti),
        ("P^2 = I", p.involution_residual()),
        ("S^2 = I", s.involution_residual()),
        ("C^2 = I", c.involution_residual()),
        ("Z_L^2 = I", z.involution_residual()),
        ("X_L^2 = I", x.involution_residual()),
        ("P unitary", p.unitarity().residual),
        ("S unitary", s.unitarity().residual),
        ("C unitary", c.unitarity().residual),
        ("beam splitter unitary", b.unitarity().residual),
        ("phase rotation unitary", phase_rotation::<f64>(&modes, 0, 0.7)?.unitarity().residual),
        ("qubit rotation unitary", qubit_rotation::<f64>(&hybrid, 0, Pauli::X, 0.3)?.unitarity().residual),
        ("[B, N] = 0", commutator_norm(&b, &n_modes)?),
        ("[S, N] = 0", commutator_norm(&s, &n_modes)?),
        ("[C, N] = 0", commutator_norm(&c, &n_hybrid)?),
    ];
    for (name, theta) in [("[U_Z, P1 P2] = 0", 0.37), ("[U_X, P1 P2] = 0", -1.1)] {
        let gate = if name.contains("U_Z") {
            LogicalGate::Z { qubit: 0, theta }
        } else {
            LogicalGate::X { qubit: 0, theta }
        };
        let u = gate_circuit::<f64>(&hybrid, 0, &gate)?.to_operator();
        out.push((name, commutator_norm(&u, &total_parity)?));
        out.push((if name.contains("U_Z") { "[U_Z, N] = 0" } else { "[U_X, N] = 0" }, commutator_norm(&u, &n_hybrid)?));
    }
    Ok(out
        .into_iter()
        .map(|(name, residual)| Residual { name, cutoff: d, residual })
        .collect())
}

fn random_label(rng: &mut ChaCha8Rng, max_label: usize) -> (usize, usize) {
    // 2m+1 ≤ max_label and 2n ≤ max_label.
    let m = rng.gen_range(0..=(max_label.saturating_sub(1)) / 2);
    let n = rng.gen_range(0..=max_label / 2);
    (m, n)
}

fn unit_combination(rng: &mut ChaCha8Rng, basis: &[Vector]) -> Vector {
    let mut v = basis[0].clone() * Complex::new(0.0, 0.0);
    for b in basis {
        v += b * Complex::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
    }
    v.normalize()
}

/// Draws one gate and its code states. Kinds cycle Z, X, ZZ.
fn gate_sample(i: usize, rng: &mut ChaCha8Rng, params: &AlgebraParams) -> Result<GateSample, tqpsim::Error> {
    let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let (gate, labels, layout) = match i % 3 {
        0 | 1 => {
            let gate = if i % 3 == 0 {
                LogicalGate::Z { qubit: 0, theta }
            } else {
                LogicalGate::X { qubit: 0, theta }
            };
            let l = random_label(rng, params.max_label);
            (gate, vec![l], SpaceLayout::new(1, vec![params.gate_cutoff; 2])?)
        }
        _ => {
            let gate = LogicalGate::ZZ { first: 0, second: 1, theta };
            let labels = vec![random_label(rng, params.max_label), random_label(rng, params.max_label)];
            (gate, labels, SpaceLayout::new(1, vec![params.zz_cutoff; 4])?)
        }
    };
    let modes = layout.without_qubit(0)?;
    let codes: Vec<[[usize; 2]; 2]> = labels.iter().map(|&(m, n)| [[2 * m + 1, 2 * n], [2 * n, 2 * m + 1]]).collect();
    let mut basis = Vec::new();
    for bits in 0..(1usize << labels.len()) {
        let digits: Vec<usize> = codes
            .iter()
            .enumerate()
            .flat_map(|(k, c)| c[(bits >> k) & 1])
            .collect();
        if digits.iter().any(|&v| v >= modes.mode_cutoffs()[0]) {
            return Err(tqpsim::Error::BasisOutOfRange {
                m: labels[0].0,
                n: labels[0].1,
                cutoff: modes.mode_cutoffs()[0],
            });
        }
        basis.push(basis_vector::<f64>(&modes, &digits));
    }
    let mut psis = basis.clone();
    psis.push(unit_combination(rng, &basis));
    let check = check_gate(&layout, &gate, &psis)?;
    Ok(GateSample {
        gate,
        labels,
        action_error: check.action_error,
        ancilla_deficit: check.ancilla_deficit,
    })
}

/// Operator-algebra invariants at each cutoff, then random gate circuits
/// against `cosθ I + i sinθ O`.
pub fn algebra_check(params: &AlgebraParams, ctx: &Context) -> Result<Outcome, CliError> {
    let cutoffs = match ctx.cutoff {
        Some(d) => vec![d],
        None => params.cutoffs.clone(),
    };
    if cutoffs.iter().any(|&d| d < 2) {
        return Err(CliError::Usage("algebra cutoffs must be at least 2".into()));
    }
    // U_X is exact only while 2m+1 + 2n <= d-1.
    if 2 * params.max_label > params.gate_cutoff || params.max_label >= params.zz_cutoff {
        return Err(CliError::Usage(format!(
            "max_label {} does not fit gate_cutoff {} / zz_cutoff {}",
            params.max_label, params.gate_cutoff, params.zz_cutoff
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let draws: Vec<ChaCha8Rng> = (0..params.gate_samples)
        .map(|_| ChaCha8Rng::seed_from_u64(rng.gen()))
        .collect();

    let (residuals, gates) = ctx.install(|| {
        let residuals = cutoffs
            .par_iter()
            .map(|&d| residuals_at(d))
            .collect::<Result<Vec<_>, _>>();
        let gates = draws
            .into_par_iter()
            .enumerate()
            .map(|(i, mut r)| gate_sample(i, &mut r, params))
            .collect::<Result<Vec<_>, _>>();
        (residuals, gates)
    })?;
    let residuals: Vec<Residual> = residuals?.into_iter().flatten().collect();
    let gates = gates?;

    let max_residual = residuals.iter().map(|r| r.residual).fold(0.0, f64::max);
    let max_anti = residuals
        .iter()
        .filter(|r| r.name.starts_with("Z_L X_L"))
        .map(|r| r.residual)
        .fold(0.0, f64::max);
    let max_gate = gates.iter().map(|g| g.action_error).fold(0.0, f64::max);
    let max_deficit = gates.iter().map(|g| g.ancilla_deficit).fold(0.0, f64::max);
    let mut checks: Vec<Check> = residuals
        .iter()
        .map(|r| Check::at_most(format!("{} (d={})", r.name, r.cutoff), r.residual, params.tolerance))
        .collect();
    checks.push(Check::at_most("gate circuit vs exponential", max_gate, params.gate_tolerance));
    checks.push(Check::at_most("ancilla return deficit", max_deficit, params.ancilla_tolerance));
    let results = AlgebraResults {
        residuals,
        gates,
        max_residual,
        max_anticommutator: max_anti,
        max_gate_error: max_gate,
        max_ancilla_deficit: max_deficit,
    };
    write_json(&ctx.out, "algebra-check", ctx, params, &results, &checks)?;
    Ok(Outcome {
        passed: all_passed(&checks),
        checks,
        files: vec![ctx.out.clone()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes() {
        let dir = tempfile::tempdir().unwrap();
        let ctx = Context::new(dir.path().join("a.json"), 3);
        let params = AlgebraParams {
            cutoffs: vec![6],
            gate_samples: 6,
            ..Default::default()
        };
        let out = algebra_check(&params, &ctx).unwrap();
        assert!(out.passed, "{:?}", out.failed_checks().collect::<Vec<_>>());
        let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&ctx.out).unwrap()).unwrap();
        assert_eq!(meta["results"]["gates"].as_array().unwrap().len(), 6);
        assert_eq!(meta["params"]["tolerance"], 1e-10);
    }

    #[test]
    fn labels_respect_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let (m, n) = random_label(&mut rng, 5);
            assert!(2 * m + 1 <= 5 && 2 * n <= 5);
        }
    }

    #[test]
    fn oversized_labels_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let ctx = Context::new(dir.path().join("a.json"), 3);
        let params = AlgebraParams {
            max_label: 9,
            ..Default::default()
        };
        assert_eq!(algebra_check(&params, &ctx).unwrap_err().exit_code(), 2);
    }
}
