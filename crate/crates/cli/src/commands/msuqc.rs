use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tqpsim::circuit::LogicalCircuit;
use tqpsim::msuqc::{check_basis_pair, qubit_space_oracle, run_mixed, run_pure, spread, RunOptions};
use tqpsim::thermal::ThermalSpec;

use crate::config::Context;
use crate::error::CliError;
use crate::output::{all_passed, write_json, Check, Outcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MsuqcParams {
    pub circuits: usize,
    /// Circuits alternate `K = 1, …, max_qubits`.
    pub max_qubits: usize,
    pub steps: usize,
    pub means: Vec<f64>,
    pub cutoff: usize,
    /// Random `(m, n)` labellings per circuit for the pure runs.
    pub labellings: usize,
    pub tolerance: f64,
}

impl Default for MsuqcParams {
    fn default() -> Self {
        Self {
            circuits: 20,
            max_qubits: 2,
            steps: 3,
            means: vec![0.5, 1.0, 2.0],
            cutoff: tqpsim::msuqc::DEFAULT_CUTOFF,
            labellings: 3,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MixedRun {
    pub mean: f64,
    pub a: f64,
    pub truncation_tail: f64,
    pub leakage: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PureRun {
    pub basis: Vec<(usize, usize)>,
    pub a: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CircuitRun {
    pub index: usize,
    pub circuit: LogicalCircuit,
    pub oracle: f64,
    pub mixed: Vec<MixedRun>,
    pub pure: Vec<PureRun>,
    pub mixed_deviation: f64,
    pub pure_deviation: f64,
    pub pure_spread: f64,
    pub max_ancilla_deficit: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MsuqcResults {
    pub circuits: Vec<CircuitRun>,
    pub empty: Vec<CircuitRun>,
    pub max_mixed_deviation: f64,
    pub max_pure_deviation: f64,
    pub max_pure_spread: f64,
    pub cutoff: usize,
}

/// All `(m, n)` with `|2m+1⟩|2n⟩` exactly represented at cutoff `d`.
pub fn valid_pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d)
        .flat_map(|m| (0..d).map(move |n| (m, n)))
        .filter(|&(m, n)| check_basis_pair(m, n, d).is_ok())
        .collect()
}

fn run_one(
    index: usize,
    circuit: LogicalCircuit,
    labellings: Vec<Vec<(usize, usize)>>,
    params: &MsuqcParams,
    opts: &RunOptions,
) -> Result<CircuitRun, tqpsim::Error> {
    let oracle = qubit_space_oracle(&circuit)?;
    let mut deficit: f64 = 0.0;
    let mut mixed = Vec::new();
    for &mean in &params.means {
        let r = run_mixed::<f64>(&circuit, &ThermalSpec::new(mean)?, opts)?;
        deficit = deficit.max(r.max_ancilla_deficit);
        mixed.push(MixedRun {
            mean,
            a: r.a,
            truncation_tail: r.truncation_tail,
            leakage: r.leakage,
        });
    }
    let mut pure = Vec::new();
    for basis in labellings {
        let r = run_pure::<f64>(&circuit, &basis, opts)?;
        deficit = deficit.max(r.max_ancilla_deficit);
        pure.push(PureRun { basis, a: r.a });
    }
    let dev = |a: f64| (a - oracle).abs();
    let pure_a: Vec<f64> = pure.iter().map(|p| p.a).collect();
    Ok(CircuitRun {
        index,
        oracle,
        mixed_deviation: mixed.iter().map(|m| dev(m.a)).fold(0.0, f64::max),
        pure_deviation: pure_a.iter().map(|&a| dev(a)).fold(0.0, f64::max),
        pure_spread: if pure_a.is_empty() { 0.0 } else { spread(&pure_a) },
        max_ancilla_deficit: deficit,
        circuit,
        mixed,
        pure,
    })
}

/// Random logical circuits run on thermal and pure inputs, compared with the
/// plain-qubit probability of reading all zeros.
pub fn msuqc_demo(params: &MsuqcParams, ctx: &Context) -> Result<Outcome, CliError> {
    if params.max_qubits == 0 || params.means.is_empty() {
        return Err(CliError::Usage("need max_qubits >= 1 and at least one mean".into()));
    }
    let d = ctx.cutoff.unwrap_or(params.cutoff);
    let opts = RunOptions::with_cutoff(d);
    let pairs = valid_pairs(d);
    if pairs.is_empty() {
        return Err(CliError::Usage(format!("cutoff {d} holds no basis pair")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut jobs = Vec::new();
    for i in 0..params.circuits {
        let k = 1 + i % params.max_qubits;
        let circuit = LogicalCircuit::random(k, params.steps, &mut rng);
        let labellings: Vec<Vec<(usize, usize)>> = (0..params.labellings)
            .map(|_| (0..k).map(|_| *pairs.choose(&mut rng).expect("non-empty")).collect())
            .collect();
        jobs.push((i, circuit, labellings));
    }
    let empty_jobs: Vec<_> = (1..=params.max_qubits)
        .map(|k| {
            let basis = (0..k).map(|_| pairs[rng.gen_range(0..pairs.len())]).collect();
            (k, LogicalCircuit::empty(k), vec![basis])
        })
        .collect();

    let (runs, empty) = ctx.install(|| {
        let runs = jobs
            .into_par_iter()
            .map(|(i, c, l)| run_one(i, c, l, params, &opts))
            .collect::<Result<Vec<_>, _>>();
        let empty = empty_jobs
            .into_par_iter()
            .map(|(i, c, l)| run_one(i, c, l, params, &opts))
            .collect::<Result<Vec<_>, _>>();
        (runs, empty)
    })?;
    let (runs, empty) = (runs?, empty?);

    let fold = |f: fn(&CircuitRun) -> f64| runs.iter().map(f).fold(0.0, f64::max);
    let results = MsuqcResults {
        max_mixed_deviation: fold(|r| r.mixed_deviation),
        max_pure_deviation: fold(|r| r.pure_deviation),
        max_pure_spread: fold(|r| r.pure_spread),
        cutoff: d,
        circuits: runs,
        empty,
    };
    let empty_dev = results
        .empty
        .iter()
        .flat_map(|r| r.mixed.iter().map(|m| m.a).chain(r.pure.iter().map(|p| p.a)))
        .map(|a| (a - 1.0).abs())
        .fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("|A_mixed - A_oracle|", results.max_mixed_deviation, params.tolerance),
        Check::at_most("|A_pure - A_oracle|", results.max_pure_deviation, params.tolerance),
        Check::at_most("A_pure spread over labellings", results.max_pure_spread, params.tolerance),
        Check::at_most("empty circuit |A - 1|", empty_dev, params.tolerance),
    ];
    write_json(&ctx.out, "msuqc-demo", ctx, params, &results, &checks)?;
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
    fn pairs_at_default_cutoff() {
        let p = valid_pairs(8);
        assert!(p.contains(&(0, 0)) && p.contains(&(3, 0)) && p.contains(&(0, 3)));
        assert!(!p.contains(&(2, 2)));
        assert!(p.iter().all(|&(m, n)| 2 * m + 1 + 2 * n <= 7));
    }

    #[test]
    fn small_demo_passes() {
        let dir = tempfile::tempdir().unwrap();
        let ctx = Context::new(dir.path().join("m.json"), 5).with_cutoff(6);
        let params = MsuqcParams {
            circuits: 3,
            means: vec![0.5],
            labellings: 2,
            ..Default::default()
        };
        let out = msuqc_demo(&params, &ctx).unwrap();
        assert!(out.passed, "{:?}", out.checks);
        let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&ctx.out).unwrap()).unwrap();
        assert_eq!(meta["results"]["cutoff"], 6);
        assert_eq!(meta["results"]["circuits"].as_array().unwrap().len(), 3);
    }
}
