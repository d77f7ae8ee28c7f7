use tqpsim::ns::{ns_check as verify, NsConfig};

use crate::config::Context;
use crate::error::CliError;
use crate::output::{write_json, Check, Outcome};

/// Collective-noise commutators, the negative control and the DFS search.
pub fn ns_check(params: &NsConfig, ctx: &Context) -> Result<Outcome, CliError> {
    let mut config = params.clone();
    if let Some(d) = ctx.cutoff {
        config.cutoff = d;
    }
    let report = ctx.install(|| verify(&config, ctx.seed))??;
    let t = &report.thresholds;
    let mut checks = vec![
        Check::at_most("max commutator", report.max_commutator(), t.commutator),
        Check::at_least("negative control", report.negative_control.residual, t.negative_control_min),
        Check::at_least("smallest DFS singular value", report.min_singular(), t.min_singular),
    ];
    let null = report.dfs.iter().map(|e| e.null_dimension).max().unwrap_or(0);
    checks.push(Check::at_most("DFS null dimension", null as f64, 0.0));
    checks.push(Check::at_most(
        "simultaneous eigenvectors found",
        report.simultaneous_eigenvectors_found as f64,
        0.0,
    ));
    let passed = report.passed && checks.iter().all(|c| c.passed);
    write_json(&ctx.out, "ns-check", ctx, &config, &report, &checks)?;
    Ok(Outcome {
        passed,
        checks,
        files: vec![ctx.out.clone()],
    })
}
