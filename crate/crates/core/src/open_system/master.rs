use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{NoiseParams, Stepper};
use crate::error::{Error, Result};
use crate::fock::state::hermitian_eigenvalues;
use crate::fock::{HybridState, Representation};
use crate::pulse::{resolve_schedule, PulseSchedule, ResolvedSegment};
use crate::scalar::{lit, matrix_power, max_abs, sandwich, to_f64, CMatrix, Real};

/// Largest trace distance accepted between the runs at `dt` and `dt/2`.
pub const CERTIFY_TOL: f64 = 1e-6;
pub const MAX_HALVINGS: usize = 3;
/// Above this Liouville-space dimension segments are stepped directly
/// instead of through a powered step superoperator.
pub const SUPEROPERATOR_MAX_DIM: usize = 1600;

/// Certified master-equation result.
#[derive(Clone, Debug)]
pub struct MasterRun<T: Real> {
    pub state: HybridState<T>,
    pub report: MasterReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MasterReport {
    /// Step of the returned (finer) run.
    pub dt: f64,
    pub halvings: usize,
    /// Trace distance between the last two runs.
    pub change: f64,
    pub trace_error: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

enum Plan<T: Real> {
    Evolve { ham: usize, duration: f64 },
    Instant(CMatrix<T>),
}

/// `½‖a − b‖₁` for Hermitian `a`, `b`.
pub fn trace_distance<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b)).iter().map(|&x| to_f64(x).abs()).sum::<f64>()
}

/// Integrates the master equation through `schedule` with fixed steps of
/// at most `dt`, halving the step until two consecutive runs agree to
/// [`CERTIFY_TOL`].
pub fn evolve_master<T: Real>(
    state: &HybridState<T>,
    schedule: &PulseSchedule,
    noise: &NoiseParams,
    dt: f64,
) -> Result<MasterRun<T>> {
    noise.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let params = noise.hybrid()?;
    let layout = state.layout();
    let stepper = Stepper::<T>::new(layout, noise)?;
    let h0 = stepper.h0_matrix();
    let mut hams: Vec<CMatrix<T>> = Vec::new();
    let mut plan = Vec::new();
    for seg in resolve_schedule::<T>(&params, layout, schedule)? {
        match seg {
            ResolvedSegment::Instant(u) => plan.push(Plan::Instant(u.into_matrix())),
            ResolvedSegment::Evolve { hamiltonian, duration } => {
                let h1 = hamiltonian.matrix() - &h0;
                let ham = match hams.iter().position(|h| h == &h1) {
                    Some(i) => i,
                    None => {
                        hams.push(h1);
                        hams.len() - 1
                    }
                };
                plan.push(Plan::Evolve { ham, duration });
            }
        }
    }
    let rho0 = state.density();
    let superop = rho0.len() <= SUPEROPERATOR_MAX_DIM;
    let run = |h: f64| -> CMatrix<T> {
        let mut cache: HashMap<(usize, u64), CMatrix<T>> = HashMap::new();
        let mut rho = rho0.clone();
        let d = rho.nrows();
        for p in &plan {
            match p {
                Plan::Instant(u) => rho = sandwich(u, &rho),
                Plan::Evolve { ham, duration } => {
                    if *duration <= 0.0 {
                        continue;
                    }
                    let n = (duration / h - 1e-9).ceil().max(1.0) as u64;
                    let step = lit::<T>(duration / n as f64);
                    if superop {
                        let s = cache.entry((*ham, duration.to_bits())).or_insert_with(|| {
                            matrix_power(&stepper.step_superoperator(&hams[*ham], step), n)
                        });
                        let v = &*s * nalgebra::DVector::from_column_slice(rho.as_slice());
                        rho = DMatrix::from_column_slice(d, d, v.as_slice());
                    } else {
                        for _ in 0..n {
                            rho = stepper.step(&hams[*ham], &rho, step);
                        }
                    }
                }
            }
        }
        rho
    };
    let mut coarse = run(dt);
    let mut change = f64::INFINITY;
    for k in 1..=MAX_HALVINGS {
        let h = dt / (1u64 << k) as f64;
        let fine = run(h);
        change = trace_distance(&coarse, &fine);
        if change < CERTIFY_TOL {
            let report = MasterReport {
                dt: h,
                halvings: k,
                change,
                trace_error: (to_f64(fine.trace().re) - 1.0).abs(),
                hermiticity: to_f64(max_abs(&(&fine - fine.adjoint()))),
                min_eigenvalue: hermitian_eigenvalues(&fine).iter().map(|&x| to_f64(x)).fold(f64::INFINITY, f64::min),
            };
            let out = HybridState::new_unchecked(layout.clone(), Representation::Density(fine));
            let extra = (state.truncation_tail() - out.truncation_tail()).max(T::zero());
            return Ok(MasterRun {
                state: out.with_discarded_tail(extra),
                report,
            });
        }
        coarse = fine;
    }
    Err(Error::NonConvergence {
        halvings: MAX_HALVINGS,
        change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::with_plus_ancilla;
    use crate::fock::ops::{number, number_local};
    use crate::fock::{SpaceLayout, TruncatedOperator};
    use crate::open_system::lindblad_rhs;
    use crate::pulse::{build_h2_sequence, hybrid_layout, schedule_unitary, Segment};
    use crate::thermal::{thermal_state, ThermalSpec};

    fn hybrid_thermal(n: f64, d: usize) -> HybridState<f64> {
        let mode = thermal_state::<f64>(&ThermalSpec::new(n).unwrap().with_cutoff(d).with_tail_tolerance(1e-2)).unwrap();
        with_plus_ancilla(&mode).to_density()
    }

    #[test]
    fn rhs_limits() {
        let layout = SpaceLayout::modes(vec![6]).unwrap();
        let one = HybridState::<f64>::fock(&layout, &[1]).unwrap().to_density();
        let zero_h = TruncatedOperator::zeros(&layout);
        let noise = NoiseParams {
            q_factor: Some(50.0),
            ..NoiseParams::default()
        };
        let drho = lindblad_rhs(&one, &zero_h, &noise).unwrap();
        let n = number::<f64>(&layout, 0).unwrap();
        let dn = (n.matrix() * &drho).trace().re;
        assert!((dn + 1.0 / 50.0).abs() < 1e-14);
        assert!(drho.trace().norm() < 1e-12);
        // closed limit is the commutator
        let h = n.scale(crate::scalar::creal(0.3));
        let mixed = HybridState::from_density(&layout, DMatrix::from_fn(6, 6, |i, j| {
            crate::scalar::cplx(if i == j { 1.0 / 6.0 } else { 0.01 }, 0.0)
        }))
        .unwrap();
        let closed = lindblad_rhs(&mixed, &h, &NoiseParams::default()).unwrap();
        let rho = mixed.density();
        let comm = (h.matrix() * &rho - &rho * h.matrix()) * crate::scalar::cplx(0.0, -1.0);
        assert!(max_abs(&(closed - comm)) < 1e-15);
    }

    #[test]
    fn zero_duration_is_identity() {
        let s = hybrid_thermal(0.5, 6);
        let run = evolve_master(&s, &PulseSchedule::default(), &NoiseParams::bath(0.02, 100.0, 1.0), 0.01).unwrap();
        assert!(max_abs(&(run.state.density() - s.density())) < 1e-15);
    }

    #[test]
    fn closed_run_matches_unitary() {
        let s = hybrid_thermal(0.3, 6);
        let noise = NoiseParams::closed(0.03);
        let sched = build_h2_sequence(&noise.hybrid().unwrap(), 1).unwrap();
        let run = evolve_master(&s, &sched, &noise, 0.01).unwrap();
        let u = schedule_unitary::<f64>(&noise.hybrid().unwrap(), &hybrid_layout(6).unwrap(), &sched).unwrap();
        let expect = u.matrix() * s.density() * u.matrix().adjoint();
        assert!(trace_distance(&run.state.density(), &expect) < 1e-6);
        assert!(run.report.trace_error < 1e-8);
    }

    #[test]
    fn damped_run_stays_physical() {
        let s = hybrid_thermal(0.5, 6);
        let noise = NoiseParams::bath(0.03, 20.0, 0.5);
        let sched = PulseSchedule::new(vec![
            Segment::FreeEvolution { duration: 3.0 },
            Segment::QubitRotation { axis: crate::fock::Pauli::X, angle: 0.4 },
            Segment::WaitingPeriod { duration: 2.0, flip_interval: None },
        ])
        .unwrap();
        let run = evolve_master(&s, &sched, &noise, 0.01).unwrap();
        assert!(run.report.trace_error < 1e-8);
        assert!(run.report.hermiticity < 1e-10);
        assert!(run.report.min_eigenvalue > -1e-8);
        assert!(run.report.change < CERTIFY_TOL);
    }

    #[test]
    fn relaxes_to_bath_occupation() {
        // ⟨n⟩ obeys d⟨n⟩/dt = (ν/Q)(N_th − ⟨n⟩); the decay is e^{−20} after 20Q/ν
        let d = 14;
        let layout = crate::pulse::hybrid_layout(d).unwrap();
        let vac = HybridState::<f64>::fock(&layout, &[0, 0]).unwrap().to_density();
        let noise = NoiseParams::bath(0.0, 5.0, 0.4);
        let sched = PulseSchedule::new(vec![Segment::WaitingPeriod {
            duration: 100.0,
            flip_interval: None,
        }])
        .unwrap();
        let run = evolve_master(&vac, &sched, &noise, 0.01).unwrap();
        let n = run.state.expectation_map(&number_local::<f64>(&layout, 0).unwrap()).unwrap().re;
        assert!((n - 0.4).abs() < 1e-3, "{n}");
        let q: f64 = 0.4 / 1.4;
        let rho = run.state.density();
        let p1 = rho[(1, 1)].re + rho[(d + 1, d + 1)].re;
        let p0 = rho[(0, 0)].re + rho[(d, d)].re;
        assert!((p1 / p0 - q).abs() < 1e-3);
    }
}
