use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tqpsim::open_system::{protocol_cutoff, figure3_fidelity, ParityGate, FidelityPoint, NoiseParams};
use tqpsim::pulse::eta_for_repetitions;

use crate::config::Context;
use crate::error::CliError;
use crate::output::{all_passed, fmt_sig, grid, sidecar_path, write_csv, write_json, Check, Outcome};

pub const HEADER: [&str; 9] = [
    "n_mean",
    "eta",
    "repetitions",
    "fidelity",
    "p_plus",
    "p_minus",
    "baseline",
    "cutoff",
    "seed",
];

/// One engineered curve. `eta` defaults to `sqrt(π/(128·repetitions))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curve {
    pub repetitions: usize,
    #[serde(default)]
    pub eta: Option<f64>,
}

impl Curve {
    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or_else(|| eta_for_repetitions(self.repetitions))
    }
}

/// Bath used by the noisy variant; `eta` comes from each curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bath {
    pub q_factor: f64,
    pub n_th: f64,
    pub gamma_dc: f64,
    pub gamma_dp: f64,
}

impl Default for Bath {
    fn default() -> Self {
        Self {
            q_factor: 1e6,
            n_th: 0.0,
            gamma_dc: 0.0,
            gamma_dp: 0.0,
        }
    }
}

impl Bath {
    fn noise(&self, eta: f64) -> NoiseParams {
        NoiseParams {
            gamma_dc: self.gamma_dc,
            gamma_dp: self.gamma_dp,
            ..NoiseParams::bath(eta, self.q_factor, self.n_th)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FidelityParams {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub curves: Vec<Curve>,
    pub include_ideal: bool,
    pub noisy: bool,
    pub bath: Bath,
    /// Master-equation step, in units of `1/ν`.
    pub dt: f64,
    /// Largest hybrid dimension `2d` accepted for closed runs.
    pub dimension_budget: usize,
    /// Same, for master-equation runs.
    pub noisy_dimension_budget: usize,
    pub monotone_slack: f64,
    pub ideal_tolerance: f64,
}

impl Default for FidelityParams {
    fn default() -> Self {
        Self {
            start: 0.2,
            stop: 4.0,
            step: 0.2,
            curves: [50, 100, 200]
                .into_iter()
                .map(|repetitions| Curve { repetitions, eta: None })
                .collect(),
            include_ideal: true,
            noisy: false,
            bath: Bath::default(),
            dt: 0.05,
            dimension_budget: 256,
            noisy_dimension_budget: 32,
            monotone_slack: 1e-3,
            ideal_tolerance: 1e-12,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveSummary {
    pub repetitions: usize,
    pub eta: f64,
    pub min_fidelity: f64,
    pub max_increase: f64,
    pub min_margin_over_baseline: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FidelityResults {
    pub rows: usize,
    pub grid: Vec<f64>,
    pub cutoffs: Vec<usize>,
    pub curves: Vec<CurveSummary>,
    pub noise: Option<Vec<NoiseParams>>,
    pub max_truncation_tail: f64,
}

fn row(p: &FidelityPoint, seed: u64) -> Vec<String> {
    vec![
        fmt_sig(p.n_mean),
        fmt_sig(p.eta),
        p.repetitions.to_string(),
        fmt_sig(p.fidelity),
        fmt_sig(p.p_plus),
        fmt_sig(p.p_minus),
        fmt_sig(p.baseline),
        p.cutoff.to_string(),
        seed.to_string(),
    ]
}

/// `points[i][c]` is grid point `i` on curve `c`; curves are sorted by
/// repetitions ascending.
fn curve_checks(params: &FidelityParams, curves: &[Curve], grid: &[f64], points: &[Vec<FidelityPoint>]) -> (Vec<Check>, Vec<CurveSummary>) {
    let mut checks = Vec::new();
    let mut summaries = Vec::new();
    for (c, curve) in curves.iter().enumerate() {
        let f: Vec<f64> = points.iter().map(|row| row[c].fidelity).collect();
        let max_increase = f.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let margin = grid
            .iter()
            .zip(&f)
            .filter(|(&n, _)| n >= 1.0)
            .map(|(&n, &fi)| fi - 1.0 / (n + 1.0))
            .reduce(f64::min);
        if f.len() > 1 {
            checks.push(Check::at_most(
                format!("curve {} monotone in <n>", curve.repetitions),
                max_increase,
                params.monotone_slack,
            ));
        }
        if let Some(m) = margin {
            checks.push(Check {
                name: format!("curve {} above 1/(<n>+1) for <n> >= 1", curve.repetitions),
                value: m,
                bound: 0.0,
                passed: m > 0.0,
            });
        }
        summaries.push(CurveSummary {
            repetitions: curve.repetitions,
            eta: curve.eta(),
            min_fidelity: f.iter().copied().fold(f64::INFINITY, f64::min),
            max_increase,
            min_margin_over_baseline: margin,
        });
    }
    for c in 1..curves.len() {
        let worst = points
            .iter()
            .map(|row| row[c].fidelity - row[c - 1].fidelity)
            .fold(f64::INFINITY, f64::min);
        checks.push(Check::at_least(
            format!("F({}) >= F({}) at every point", curves[c].repetitions, curves[c - 1].repetitions),
            worst,
            0.0,
        ));
    }
    (checks, summaries)
}

/// Controlled-parity fidelity protocol over an `⟨n⟩` grid for each curve plus the exact gate.
pub fn fidelity_sweep(params: &FidelityParams, ctx: &Context) -> Result<Outcome, CliError> {
    let grid = grid(params.start, params.stop, params.step)?;
    let mut curves = params.curves.clone();
    curves.sort_by_key(|c| c.repetitions);
    if curves.iter().any(|c| c.repetitions == 0) {
        return Err(CliError::Usage("curve repetitions must be positive".into()));
    }
    let cutoffs: Vec<usize> = grid.iter().map(|&n| ctx.cutoff.unwrap_or_else(|| protocol_cutoff(n))).collect();
    let budget = if params.noisy { params.noisy_dimension_budget } else { params.dimension_budget };
    if let Some(&d) = cutoffs.iter().max() {
        if 2 * d > budget {
            return Err(tqpsim::Error::DimensionBudget { dim: 2 * d, budget }.into());
        }
    }
    let noises: Option<Vec<NoiseParams>> = params.noisy.then(|| curves.iter().map(|c| params.bath.noise(c.eta())).collect());
    if let Some(ns) = &noises {
        for n in ns {
            n.validate()?;
        }
    }

    let mut gates: Vec<(ParityGate, Option<NoiseParams>)> = curves
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let gate = ParityGate::Engineered {
                repetitions: c.repetitions,
                eta: c.eta(),
            };
            (gate, noises.as_ref().map(|n| n[i]))
        })
        .collect();
    if params.include_ideal {
        gates.push((ParityGate::Ideal, None));
    }
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|i| (0..gates.len()).map(move |g| (i, g))).collect();
    let flat = ctx.install(|| {
        jobs.par_iter()
            .map(|&(i, g)| {
                let (gate, noise) = &gates[g];
                figure3_fidelity::<f64>(grid[i], *gate, noise.as_ref(), Some(cutoffs[i]), params.dt)
            })
            .collect::<Result<Vec<_>, _>>()
    })??;
    let points: Vec<Vec<FidelityPoint>> = flat.chunks(gates.len()).map(<[_]>::to_vec).collect();

    let (mut checks, summaries) = curve_checks(params, &curves, &grid, &points);
    if params.include_ideal {
        let dev = points
            .iter()
            .map(|row| (row[gates.len() - 1].fidelity - 1.0).abs())
            .fold(0.0, f64::max);
        checks.push(Check::at_most("ideal gate fidelity = 1", dev, params.ideal_tolerance));
    }
    let baseline_dev = flat
        .iter()
        .map(|p| (p.baseline - 1.0 / (p.n_mean + 1.0)).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("baseline = 1/(<n>+1)", baseline_dev, 1e-15));

    let rows: Vec<Vec<String>> = flat.iter().map(|p| row(p, ctx.seed)).collect();
    let results = FidelityResults {
        rows: rows.len(),
        grid: grid.clone(),
        cutoffs,
        curves: summaries,
        noise: noises,
        max_truncation_tail: flat.iter().map(|p| p.truncation_tail).fold(0.0, f64::max),
    };
    write_csv(&ctx.out, &HEADER, &rows)?;
    let meta = sidecar_path(&ctx.out);
    write_json(&meta, "fidelity-sweep", ctx, params, &results, &checks)?;
    Ok(Outcome {
        passed: all_passed(&checks),
        checks,
        files: vec![ctx.out.clone(), meta],
    })
}
