//! Acceptance suite. Runs every criterion at its pinned tolerance and prints
//! one PASS/FAIL line each; exits non-zero if any fails.
//!
//! `cargo test -p tqpsim-cli --test acceptance -- 4 6` runs a subset.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use tqpsim::encoding::with_plus_ancilla;
use tqpsim::open_system::{
    epsilon_tqp, epsilon_tqp_trajectory, evolve_master, jump_probability, jump_unravelling, trace_distance,
    NoiseParams,
};
use tqpsim::pulse::{
    controlled_parity_schedule, eta_for_repetitions, exact_free_propagator, free_propagator, h2_residual,
    hamiltonian, hybrid_layout, low_subspace, HybridHamiltonianParams,
};
use tqpsim::thermal::{thermal_state, ThermalSpec};
use tqpsim_cli::commands::{
    algebra_check, entropy_sweep, fidelity_sweep, msuqc_demo, ns_check, AlgebraParams, EntropyParams,
    FidelityParams, MsuqcParams,
};
use tqpsim_cli::output::sidecar_path;
use tqpsim_cli::{Context, Outcome};

type Verdict = Result<(bool, String), String>;

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().expect("temp dir")
}

fn outcome_detail(o: &Outcome, keys: &[&str]) -> String {
    o.checks
        .iter()
        .filter(|c| !c.passed || keys.iter().any(|k| c.name.contains(k)))
        .map(|c| format!("{}={:.3e}{}", c.name, c.value, if c.passed { "" } else { " FAILED" }))
        .collect::<Vec<_>>()
        .join("; ")
}

fn c1_algebra() -> Verdict {
    let dir = tmp();
    let ctx = Context::new(dir.path().join("algebra.json"), 1);
    let params = AlgebraParams {
        cutoffs: vec![6, 12, 20],
        gate_samples: 0,
        tolerance: 1e-10,
        ..Default::default()
    };
    let o = algebra_check(&params, &ctx).map_err(|e| e.to_string())?;
    let worst = o.checks.iter().map(|c| c.value).fold(0.0, f64::max);
    Ok((o.passed, format!("{} checks, worst residual {worst:.2e} (<= 1e-10)", o.checks.len())))
}

fn c2_gates() -> Verdict {
    let dir = tmp();
    let ctx = Context::new(dir.path().join("gates.json"), 2);
    let params = AlgebraParams {
        cutoffs: vec![],
        gate_samples: 30,
        max_label: 5,
        gate_tolerance: 1e-9,
        ancilla_tolerance: 1e-10,
        ..Default::default()
    };
    let o = algebra_check(&params, &ctx).map_err(|e| e.to_string())?;
    Ok((o.passed, outcome_detail(&o, &["gate", "ancilla"])))
}

fn c3_msuqc() -> Verdict {
    let dir = tmp();
    let ctx = Context::new(dir.path().join("msuqc.json"), 3).with_cutoff(8);
    let params = MsuqcParams {
        circuits: 20,
        max_qubits: 2,
        means: vec![0.5, 1.0, 2.0],
        tolerance: 1e-6,
        ..Default::default()
    };
    let o = msuqc_demo(&params, &ctx).map_err(|e| e.to_string())?;
    Ok((o.passed, outcome_detail(&o, &["A_mixed", "empty"])))
}

fn c4_entropy() -> Verdict {
    let dir = tmp();
    let ctx = Context::new(dir.path().join("entropy.csv"), 4);
    let o = entropy_sweep(&EntropyParams::default(), &ctx).map_err(|e| e.to_string())?;
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(sidecar_path(&ctx.out)).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let root = meta["results"]["crossover_root"].as_f64().unwrap_or(f64::NAN);
    let dev = meta["results"]["max_spectral_deviation"].as_f64().unwrap_or(f64::NAN);
    let ok = o.passed && (0.7..=0.9).contains(&root) && dev <= 1e-6;
    Ok((ok, format!("root {root:.5} in [0.7, 0.9]; closed form vs spectrum {dev:.2e} (<= 1e-6)")))
}

fn c5_pulse() -> Verdict {
    let p = |eta| HybridHamiltonianParams::new(eta).map_err(|e| e.to_string());
    let r04 = h2_residual(&p(0.04)?, 16, 6).map_err(|e| e.to_string())?;
    let r02 = h2_residual(&p(0.02)?, 16, 6).map_err(|e| e.to_string())?;
    let layout = hybrid_layout(30).map_err(|e| e.to_string())?;
    let sub = low_subspace(&layout, 15);
    let mut prop: f64 = 0.0;
    for eta in [0.01, 0.02, 0.05] {
        for t in [0.3, 1.0, std::f64::consts::PI, 5.0] {
            let a = exact_free_propagator::<f64>(&p(eta)?, &layout, t).map_err(|e| e.to_string())?;
            let b = free_propagator::<f64>(&p(eta)?, &layout, t).map_err(|e| e.to_string())?;
            let diff = (a.restricted(&sub) - b.restricted(&sub)).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            prop = prop.max(diff);
        }
    }
    let ratio = r04 / r02;
    Ok((
        ratio >= 4.0 && prop <= 1e-8,
        format!("residual {r04:.3e} -> {r02:.3e}, factor {ratio:.1} (>= 4); closed-form propagator {prop:.1e} (<= 1e-8)"),
    ))
}

fn c6_fidelity_curves() -> Verdict {
    let dir = tmp();
    let ctx = Context::new(dir.path().join("fidelity.csv"), 6);
    let o = fidelity_sweep(&FidelityParams::default(), &ctx).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(&ctx.out).map_err(|e| e.to_string())?;
    let rows = text.lines().count() - 1;
    Ok((o.passed, format!("{rows} rows; {}", outcome_detail(&o, &[">="]))))
}

fn c7_bath_errors() -> Verdict {
    let err = |e: tqpsim::Error| e.to_string();

    // short-time jump probability
    let noise = NoiseParams::bath(0.016, 1e6, 100.0);
    let spec = ThermalSpec::new(1.0).map_err(err)?.with_cutoff(28).with_tail_tolerance(1e-4);
    let s = with_plus_ancilla(&thermal_state::<f64>(&spec).map_err(err)?).to_density();
    let h = hamiltonian::<f64>(&noise.hybrid().map_err(err)?, s.layout()).map_err(err)?;
    let jp = jump_probability(&s, &h, &noise, 1e-3).map_err(err)?;

    // closed form vs trajectory-counted jumps
    let closed = epsilon_tqp(&noise, 1.0, 0.016).map_err(err)?;
    let count = epsilon_tqp_trajectory(&noise, 1.0, 0.016, 2000, 7, None).map_err(err)?;

    // unravelling vs master equation
    let reps = 50;
    let n_traj = 2000;
    let noise = NoiseParams::bath(eta_for_repetitions(reps), 1e4, 1.0);
    let sched = controlled_parity_schedule(&noise.hybrid().map_err(err)?, reps).map_err(err)?;
    let spec = ThermalSpec::new(0.2).map_err(err)?.with_cutoff(10).with_tail_tolerance(1e-6);
    let start = with_plus_ancilla(&thermal_state::<f64>(&spec).map_err(err)?).to_density();
    let ens = jump_unravelling(&start, &sched, &noise, 7, n_traj).map_err(err)?;
    let master = evolve_master(&start, &sched, &noise, 0.05).map_err(err)?;
    let dist = trace_distance(&ens.density, &master.state.density());
    let bound = 3.0 / (n_traj as f64).sqrt();

    let ok = jp.relative_error <= 0.05 && count.relative_error <= 0.2 && dist <= bound;
    Ok((
        ok,
        format!(
            "jump prob rel err {:.2e} (<= 0.05); eps_TQP {:.4} vs {:.4}+-{:.4} jumps, rel err {:.3} (<= 0.2); ensemble vs master {dist:.4} (<= {bound:.4}, {} jumps/traj)",
            jp.relative_error,
            closed.nominal,
            count.mean_jumps,
            count.std_error,
            count.relative_error,
            ens.mean_jumps()
        ),
    ))
}

fn c8_ns() -> Verdict {
    let dir = tmp();
    let ctx = Context::new(dir.path().join("ns.json"), 8);
    let o = ns_check(&tqpsim::ns::NsConfig::default(), &ctx).map_err(|e| e.to_string())?;
    Ok((o.passed, outcome_detail(&o, &["commutator", "negative", "singular", "null"])))
}

fn run_bin(args: &[&str], out: &Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_tqpsim"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("tqpsim {args:?} exited with {status}"));
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

fn c9_reproducible() -> Verdict {
    let dir = tmp();
    let cfg = dir.path().join("fig.json");
    std::fs::write(&cfg, r#"{"params": {"start": 0.2, "stop": 1.0, "step": 0.4}}"#).map_err(|e| e.to_string())?;
    let cfg = cfg.to_str().ok_or("non-utf8 temp path")?;
    let mut detail = Vec::new();
    let mut ok = true;
    let runs: [(&str, Vec<&str>); 2] = [
        ("entropy-sweep", vec!["entropy-sweep", "--seed", "42"]),
        ("fidelity-sweep", vec!["fidelity-sweep", "--seed", "42", "--config", cfg]),
    ];
    for (name, args) in runs {
        let a = run_bin(&[&args[..], &["--threads", "1"]].concat(), &dir.path().join(format!("{name}-a.csv")))?;
        let b = run_bin(&[&args[..], &["--threads", "4"]].concat(), &dir.path().join(format!("{name}-b.csv")))?;
        let same = a == b && !a.is_empty();
        ok &= same;
        detail.push(format!("{name} {} bytes {}", a.len(), if same { "identical" } else { "DIFFER" }));
    }
    Ok((ok, detail.join("; ")))
}

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    run: fn() -> Verdict,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "algebra suite", budget: Duration::from_secs(30), run: c1_algebra },
        Criterion { id: 2, name: "gate circuit equivalence", budget: Duration::from_secs(120), run: c2_gates },
        Criterion { id: 3, name: "mixed vs qubit equivalence", budget: Duration::from_secs(600), run: c3_msuqc },
        Criterion { id: 4, name: "entropy crossover", budget: Duration::from_secs(10), run: c4_entropy },
        Criterion { id: 5, name: "pulse sequence engineering", budget: Duration::from_secs(60), run: c5_pulse },
        Criterion { id: 6, name: "controlled-parity fidelity ordering", budget: Duration::from_secs(1800), run: c6_fidelity_curves },
        Criterion { id: 7, name: "bath error consistency", budget: Duration::from_secs(1200), run: c7_bath_errors },
        Criterion { id: 8, name: "collective-noise subsystem", budget: Duration::from_secs(60), run: c8_ns },
        Criterion { id: 9, name: "reproducibility", budget: Duration::from_secs(600), run: c9_reproducible },
    ];
    // Positional arguments select criteria by number; libtest flags are ignored.
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for c in criteria.iter().filter(|c| wanted.is_empty() || wanted.contains(&c.id)) {
        let start = Instant::now();
        let verdict = (c.run)();
        let took = start.elapsed();
        let (passed, detail) = match verdict {
            Ok((p, d)) => (p && took <= c.budget, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {} [{}]: {} in {:.1}s (budget {}s): {}",
            c.id,
            c.name,
            if passed { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            c.budget.as_secs(),
            detail
        );
    }
    if failures > 0 {
        println!("{failures} criterion/criteria failed");
        std::process::exit(1);
    }
}
