use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use serde::Serialize;

use super::{protocol_cutoff, jump_unravelling, NoiseParams};
use crate::encoding::with_plus_ancilla;
use crate::error::{Error, Result};
use crate::pulse::{controlled_parity_schedule, hybrid_layout, required_repetitions, truncate_schedule};
use crate::thermal::{thermal_state, ThermalSpec};

/// Closed-form TQP error over one controlled parity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpsilonTqp {
    /// `(2N_th⟨n⟩ + N_th + ⟨n⟩)·9π/(64η²Q)`.
    pub nominal: f64,
    /// Same rate over the engineered gate time `9π²/(64η²ν)`.
    pub engineered: f64,
    /// `N_th ≫ ⟨n⟩`, taken as `N_th ≥ 10⟨n⟩`.
    pub bath_dominated: bool,
}

pub fn epsilon_tqp(noise: &NoiseParams, n_mean: f64, eta: f64) -> Result<EpsilonTqp> {
    noise.validate()?;
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter("eta must be positive".into()));
    }
    let q = noise
        .q_factor
        .ok_or_else(|| Error::InvalidParameter("epsilon_tqp needs a finite Q".into()))?;
    let pi = std::f64::consts::PI;
    let rate = 2.0 * noise.n_th * n_mean + noise.n_th + n_mean;
    let nominal = rate * 9.0 * pi / (64.0 * eta * eta * q);
    if !(noise.n_th >= 10.0 * n_mean) {
        log::warn!("epsilon_tqp outside N_th >> <n> (N_th = {}, <n> = {n_mean})", noise.n_th);
    }
    Ok(EpsilonTqp {
        nominal,
        engineered: nominal * pi,
        bath_dominated: noise.n_th >= 10.0 * n_mean,
    })
}

/// Mean number of jumps over the nominal gate time, counted on
/// trajectories of the engineered schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryCount {
    pub closed_form: f64,
    pub mean_jumps: f64,
    pub std_error: f64,
    pub relative_error: f64,
    pub duration: f64,
    pub n_traj: usize,
    pub cutoff: usize,
    pub seed: u64,
}

pub fn epsilon_tqp_trajectory(
    noise: &NoiseParams,
    n_mean: f64,
    eta: f64,
    n_traj: usize,
    seed: u64,
    cutoff: Option<usize>,
) -> Result<TrajectoryCount> {
    let closed_form = epsilon_tqp(noise, n_mean, eta)?.nominal;
    let noise = NoiseParams { eta, ..*noise };
    let params = noise.hybrid()?;
    let duration = 9.0 * std::f64::consts::PI / (64.0 * eta * eta * noise.nu);
    let full = controlled_parity_schedule(&params, required_repetitions(eta))?;
    let sched = truncate_schedule(&full, duration);
    let d = cutoff.unwrap_or_else(|| protocol_cutoff(n_mean));
    let spec = ThermalSpec::new(n_mean)?.with_cutoff(d).with_tail_tolerance(1e-4);
    let start = with_plus_ancilla(&thermal_state::<f64>(&spec)?);
    debug_assert_eq!(start.layout(), &hybrid_layout(d)?);
    let ens = jump_unravelling(&start.to_density(), &sched, &noise, seed, n_traj)?;
    let mean_jumps = ens.mean_jumps();
    Ok(TrajectoryCount {
        closed_form,
        mean_jumps,
        std_error: ens.jump_std_error(),
        relative_error: (mean_jumps - closed_form).abs() / closed_form,
        duration,
        n_traj,
        cutoff: d,
        seed,
    })
}

/// `Γ̃_c = 4η²ν²Γ_dcΓ_dpΔΩ² / [ν(Γ_dp² + Δ² + Ω²)(Γ_dc(Γ_dp² + Δ²) + Γ_dpΩ²)]`.
pub fn cooling_rate(noise: &NoiseParams) -> f64 {
    let NoiseParams {
        nu,
        eta,
        gamma_dc: dc,
        gamma_dp: dp,
        delta,
        omega,
        ..
    } = *noise;
    let num = 4.0 * eta * eta * nu * nu * dc * dp * delta * omega * omega;
    let den = nu * (dp * dp + delta * delta + omega * omega) * (dc * (dp * dp + delta * delta) + dp * omega * omega);
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Log-grid bounds and resolution for the `(Δ, Ω)` search.
const LOG_RANGE: (f64, f64) = (-3.0, 5.0);
const GRID: usize = 32;
const NM_SD_TOL: f64 = 1e-12;
const NM_MAX_ITERS: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoolingReport {
    /// Best `Γ̃_c` found and where.
    pub gamma_c: f64,
    pub delta: f64,
    pub omega: f64,
    /// `η²νΓ_dc/Γ_dp`.
    pub scaling: f64,
    pub scaling_ratio: f64,
    /// `Γ_dc ≪ ν ≪ Γ_dp`, read as a factor of 10 on each side.
    pub resolved_regime: bool,
    /// `N_th(ν/Q)/Γ̃_c`.
    pub epsilon_cool: f64,
    pub epsilon_tqp: f64,
    /// `⟨n⟩ ≪ Γ_dp/Γ_dc`, read as a factor of 10.
    pub tqp_favoured: bool,
    pub grid_points: usize,
    pub log_range: (f64, f64),
    pub nm_sd_tolerance: f64,
}

/// `−Γ̃_c` in units of the scaling estimate, so the simplex tolerance is
/// relative.
struct NegRate(NoiseParams, f64);

impl CostFunction for NegRate {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let n = NoiseParams {
            delta: 10f64.powf(p[0]),
            omega: 10f64.powf(p[1]),
            ..self.0
        };
        Ok(-cooling_rate(&n) / self.1)
    }
}

/// Maximises `Γ̃_c` over `(Δ, Ω)` (grid, then Nelder-Mead in log space)
/// and compares the cooling and TQP error estimates at `n_mean`.
pub fn cooling_comparison(noise: &NoiseParams, n_mean: f64) -> Result<CoolingReport> {
    noise.validate()?;
    if !(noise.gamma_dc > 0.0 && noise.gamma_dp > 0.0 && noise.eta > 0.0) {
        return Err(Error::InvalidParameter("cooling needs positive eta, gamma_dc and gamma_dp".into()));
    }
    let scaling = noise.eta * noise.eta * noise.nu * noise.gamma_dc / noise.gamma_dp;
    let cost = NegRate(*noise, scaling);
    let step = (LOG_RANGE.1 - LOG_RANGE.0) / (GRID - 1) as f64;
    let mut best = (f64::INFINITY, vec![0.0, 0.0]);
    for i in 0..GRID {
        for j in 0..GRID {
            let p = vec![LOG_RANGE.0 + i as f64 * step, LOG_RANGE.0 + j as f64 * step];
            let c = cost.cost(&p).map_err(|e| Error::Optimizer(e.to_string()))?;
            if c < best.0 {
                best = (c, p);
            }
        }
    }
    let p0 = best.1.clone();
    let simplex = vec![p0.clone(), vec![p0[0] + step, p0[1]], vec![p0[0], p0[1] + step]];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(NM_SD_TOL)
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let res = Executor::new(cost, solver)
        .configure(|s| s.max_iters(NM_MAX_ITERS))
        .run()
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let state = res.state();
    let p = state
        .get_best_param()
        .cloned()
        .ok_or_else(|| Error::Optimizer("no best point".into()))?;
    let refined = -state.get_best_cost();
    if !(refined.is_finite() && refined >= -best.0 * (1.0 - 1e-12)) {
        return Err(Error::Optimizer(format!("refinement lost ground: {refined} < {}", -best.0)));
    }
    let (delta, omega) = (10f64.powf(p[0]), 10f64.powf(p[1]));
    let gamma_c = refined * scaling;
    let epsilon_cool = noise.n_th * noise.damping() / gamma_c;
    let epsilon_tqp = if noise.q_factor.is_some() {
        epsilon_tqp(noise, n_mean, noise.eta)?.nominal
    } else {
        0.0
    };
    Ok(CoolingReport {
        gamma_c,
        delta,
        omega,
        scaling,
        scaling_ratio: gamma_c / scaling,
        resolved_regime: 10.0 * noise.gamma_dc <= noise.nu && 10.0 * noise.nu <= noise.gamma_dp,
        epsilon_cool,
        epsilon_tqp,
        tqp_favoured: 10.0 * n_mean <= noise.gamma_dp / noise.gamma_dc,
        grid_points: GRID * GRID,
        log_range: LOG_RANGE,
        nm_sd_tolerance: NM_SD_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cooling(delta: f64, omega: f64) -> NoiseParams {
        NoiseParams {
            eta: 0.016,
            q_factor: Some(1e6),
            n_th: 100.0,
            gamma_dc: 0.01,
            gamma_dp: 100.0,
            delta,
            omega,
            ..NoiseParams::default()
        }
    }

    #[test]
    fn epsilon_closed_form() {
        let n = NoiseParams::bath(0.016, 1e6, 0.0);
        assert_eq!(epsilon_tqp(&n, 0.0, 0.016).unwrap().nominal, 0.0);
        let n = NoiseParams::bath(0.016, 1e6, 100.0);
        let a = epsilon_tqp(&n, 1.0, 0.016).unwrap();
        let b = epsilon_tqp(&n, 1.0, 0.032).unwrap();
        assert!((a.nominal / b.nominal - 4.0).abs() < 1e-12);
        let direct = 301.0 * 9.0 * std::f64::consts::PI / (64.0 * 0.016f64.powi(2) * 1e6);
        assert!((a.nominal - direct).abs() < 1e-15);
        assert!(a.bath_dominated);
    }

    #[test]
    fn rate_zeros_and_optimum() {
        assert_eq!(cooling_rate(&cooling(0.0, 10.0)), 0.0);
        assert_eq!(cooling_rate(&cooling(10.0, 0.0)), 0.0);
        let r = cooling_comparison(&cooling(1.0, 1.0), 1.0).unwrap();
        assert!((0.25..=4.0).contains(&r.scaling_ratio), "{r:?}");
        assert!(r.resolved_regime && r.tqp_favoured);
        assert!(r.epsilon_tqp / r.epsilon_cool < 0.1);
        // the optimum is a stationary point
        for (dd, dw) in [(1.01, 1.0), (0.99, 1.0), (1.0, 1.01), (1.0, 0.99)] {
            assert!(cooling_rate(&cooling(r.delta * dd, r.omega * dw)) <= r.gamma_c * (1.0 + 1e-9));
        }
    }

    #[test]
    fn trajectory_count_small() {
        // strong damping so a few hundred trajectories resolve the count
        let noise = NoiseParams::bath(0.0, 1e3, 2.0);
        let t = epsilon_tqp_trajectory(&noise, 0.5, 0.05, 300, 5, Some(10)).unwrap();
        assert!(t.relative_error < 0.2, "{t:?}");
    }
}
