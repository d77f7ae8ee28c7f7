use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tqpsim::thermal::{entropy_crossover, entropy_report, tqp_entropy_bits, EntropyReport, ThermalSpec};

use crate::config::Context;
use crate::error::CliError;
use crate::output::{all_passed, fmt_sig, grid, sidecar_path, write_csv, write_json, Check, Outcome};

pub const HEADER: [&str; 7] = [
    "n_mean",
    "S_thermal",
    "S_tqp",
    "n_tilde",
    "landauer_pure",
    "landauer_tqp",
    "crossover_flag",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropyParams {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Boltzmann weight allowed above the cutoff.
    pub tail_tolerance: f64,
    /// Closed form vs spectrum of the constructed state.
    pub spectral_tolerance: f64,
    pub crossover_bracket: [f64; 2],
    pub crossover_tolerance: f64,
    pub crossover_window: [f64; 2],
}

impl Default for EntropyParams {
    fn default() -> Self {
        Self {
            start: 0.1,
            stop: 2.0,
            step: 0.1,
            tail_tolerance: tqpsim::thermal::DEFAULT_TAIL_TOLERANCE,
            spectral_tolerance: 1e-6,
            crossover_bracket: [0.1, 2.0],
            crossover_tolerance: 1e-4,
            crossover_window: [0.7, 0.9],
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyResults {
    pub rows: usize,
    pub crossover_root: f64,
    pub max_spectral_deviation: f64,
    /// Largest deviation of the written `S_tqp` column from a fresh closed-form evaluation.
    pub max_closed_form_deviation: f64,
    /// Edge population plus discarded weight, both factors.
    pub max_truncation_tail: f64,
    pub truncation_tails: Vec<f64>,
    pub cutoffs: Vec<usize>,
}

fn row(r: &EntropyReport) -> Vec<String> {
    vec![
        fmt_sig(r.mean_excitation),
        fmt_sig(r.s_thermal),
        fmt_sig(r.s_tqp),
        fmt_sig(r.n_tilde),
        fmt_sig(r.landauer_pure),
        fmt_sig(r.landauer_tqp),
        u8::from(r.crossover_flag).to_string(),
    ]
}

/// Entropy bookkeeping over an `⟨n⟩` grid. Writes the CSV at `ctx.out` and
/// metadata beside it.
pub fn entropy_sweep(params: &EntropyParams, ctx: &Context) -> Result<Outcome, CliError> {
    let points = grid(params.start, params.stop, params.step)?;
    let specs = points
        .iter()
        .map(|&n| {
            let spec = ThermalSpec::new(n)?.with_tail_tolerance(params.tail_tolerance);
            Ok(match ctx.cutoff {
                Some(d) => spec.with_cutoff(d),
                None => spec,
            })
        })
        .collect::<Result<Vec<_>, tqpsim::Error>>()?;
    let reports = ctx.install(|| specs.par_iter().map(entropy_report).collect::<Result<Vec<_>, _>>())??;

    let [lo, hi] = params.crossover_bracket;
    let root = entropy_crossover(lo, hi, params.crossover_tolerance)?;
    let rows: Vec<Vec<String>> = reports.iter().map(row).collect();
    let closed_dev = rows
        .iter()
        .zip(&points)
        .map(|(r, &n)| (r[2].parse::<f64>().expect("written float") - tqp_entropy_bits(n)).abs())
        .fold(0.0, f64::max);
    let results = EntropyResults {
        rows: rows.len(),
        crossover_root: root,
        max_spectral_deviation: reports.iter().map(|r| r.spectral_deviation()).fold(0.0, f64::max),
        max_closed_form_deviation: closed_dev,
        max_truncation_tail: reports.iter().map(|r| r.truncation_tail).fold(0.0, f64::max),
        truncation_tails: reports.iter().map(|r| r.truncation_tail).collect(),
        cutoffs: reports.iter().map(|r| r.cutoff).collect(),
    };
    let [wlo, whi] = params.crossover_window;
    let checks = vec![
        Check::within("crossover root", root, wlo, whi),
        Check::at_most("S_tqp spectral deviation", results.max_spectral_deviation, params.spectral_tolerance),
        Check::at_most("S_tqp column vs closed form", closed_dev, params.spectral_tolerance),
    ];

    write_csv(&ctx.out, &HEADER, &rows)?;
    let meta = sidecar_path(&ctx.out);
    write_json(&meta, "entropy-sweep", ctx, params, &results, &checks)?;
    Ok(Outcome {
        passed: all_passed(&checks),
        checks,
        files: vec![ctx.out.clone(), meta],
    })
}
