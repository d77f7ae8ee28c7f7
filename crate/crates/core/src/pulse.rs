//! Pulse-level engineering of the second-order hybrid interaction.
//!
//! The hybrid system is one auxiliary qubit and one mode with
//! `H = ν a†a + νη σ (a + a†)`, `σ` the coupling axis (Z by default).
//! Time is measured in units of `1/ν`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::ops::{
    annihilation_matrix, displacement_matrix, number_matrix, phase_matrix, rotation_matrix, Pauli,
};
use crate::fock::{expm, SpaceLayout, TruncatedOperator};
use crate::scalar::{cplx, creal, lit, operator_norm, to_f64, CMatrix, Real, C};

/// Largest accepted Lamb-Dicke parameter.
pub const ETA_MAX: f64 = 0.2;
/// Above this a warning is logged.
pub const ETA_WARN: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridHamiltonianParams {
    #[serde(default = "default_nu")]
    pub nu: f64,
    pub eta: f64,
    #[serde(default = "default_axis")]
    pub coupling_axis: Pauli,
}

fn default_nu() -> f64 {
    1.0
}

fn default_axis() -> Pauli {
    Pauli::Z
}

impl HybridHamiltonianParams {
    pub fn new(eta: f64) -> Result<Self> {
        let p = Self {
            nu: 1.0,
            eta,
            coupling_axis: Pauli::Z,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::InvalidParameter(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.eta.is_finite() && (0.0..=ETA_MAX).contains(&self.eta)) {
            return Err(Error::InvalidParameter(format!(
                "eta must lie in [0, {ETA_MAX}], got {}",
                self.eta
            )));
        }
        if self.coupling_axis == Pauli::I {
            return Err(Error::InvalidParameter("coupling axis must be X, Y or Z".into()));
        }
        if self.eta > ETA_WARN {
            log::warn!("eta = {} is outside the weak-coupling regime", self.eta);
        }
        Ok(())
    }
}

/// One qubit and one mode with cutoff `d`.
pub fn hybrid_layout(d: usize) -> Result<SpaceLayout> {
    SpaceLayout::new(1, vec![d])
}

fn mode_cutoff(layout: &SpaceLayout) -> Result<usize> {
    if layout.qubit_count() != 1 || layout.mode_count() != 1 {
        return Err(Error::LayoutMismatch(
            "pulse operators need one qubit and one mode".into(),
        ));
    }
    layout.cutoff(0)
}

fn identity<T: Real>(n: usize) -> CMatrix<T> {
    DMatrix::identity(n, n)
}

/// `ν a†a + νη σ (a + a†)`.
pub fn hamiltonian<T: Real>(params: &HybridHamiltonianParams, layout: &SpaceLayout) -> Result<TruncatedOperator<T>> {
    params.validate()?;
    let d = mode_cutoff(layout)?;
    let a = annihilation_matrix::<T>(d);
    let x = &a + a.adjoint();
    let nu = lit::<T>(params.nu);
    let m = identity::<T>(2).kronecker(&number_matrix::<T>(d)) * creal(nu)
        + params.coupling_axis.matrix::<T>().kronecker(&x) * creal(nu * lit::<T>(params.eta));
    TruncatedOperator::from_matrix(layout.clone(), m)
}

/// `ν a†a` on the mode, identity on the qubit.
pub fn bare_hamiltonian<T: Real>(params: &HybridHamiltonianParams, layout: &SpaceLayout) -> Result<TruncatedOperator<T>> {
    let d = mode_cutoff(layout)?;
    let m = identity::<T>(2).kronecker(&number_matrix::<T>(d)) * creal(lit::<T>(params.nu));
    TruncatedOperator::from_matrix(layout.clone(), m)
}

/// `exp(−iHt)` by matrix exponential of the truncated Hamiltonian.
pub fn free_propagator<T: Real>(params: &HybridHamiltonianParams, layout: &SpaceLayout, t: f64) -> Result<TruncatedOperator<T>> {
    Ok(hamiltonian::<T>(params, layout)?.scale(cplx(T::zero(), lit(-t))).exp())
}

/// Closed form `Σ_± |±⟩⟨±| ⊗ U_±(t)` with
/// `U_±(t) = e^{iη²(νt − sin νt)} e^{−iνt a†a} D(∓η(e^{iνt} − 1))`,
/// `|±⟩` the eigenvectors of the coupling axis.
pub fn exact_free_propagator<T: Real>(
    params: &HybridHamiltonianParams,
    layout: &SpaceLayout,
    t: f64,
) -> Result<TruncatedOperator<T>> {
    params.validate()?;
    let d = mode_cutoff(layout)?;
    let (eta, phase_t) = (params.eta, params.nu * t);
    let global = eta * eta * (phase_t - phase_t.sin());
    let shift = C::new(phase_t.cos() - 1.0, phase_t.sin());
    let rotation = phase_matrix::<T>(d, lit(-phase_t));
    let branch = |sign: f64| -> CMatrix<T> {
        let alpha = shift * (-sign * eta);
        let disp = displacement_matrix::<T>(d, cplx(lit(alpha.re), lit(alpha.im)));
        &rotation * disp * cplx(lit::<T>(global.cos()), lit::<T>(global.sin()))
    };
    let (plus, minus) = axis_projectors::<T>(params.coupling_axis);
    let m = plus.kronecker(&branch(1.0)) + minus.kronecker(&branch(-1.0));
    TruncatedOperator::from_matrix(layout.clone(), m)
}

/// Projectors onto the `+1` and `−1` eigenvectors of a Pauli axis.
fn axis_projectors<T: Real>(axis: Pauli) -> (CMatrix<T>, CMatrix<T>) {
    let id = identity::<T>(2);
    let s = axis.matrix::<T>();
    let half = creal(lit::<T>(0.5));
    ((&id + &s) * half, (&id - &s) * half)
}

/// A physical primitive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Segment {
    /// Evolution under the full hybrid Hamiltonian.
    FreeEvolution { duration: f64 },
    /// Instantaneous `exp(i·angle·σ_axis)` on the qubit.
    QubitRotation { axis: Pauli, angle: f64 },
    /// Bare mode evolution `exp(−i·duration·ν a†a)`. Without a flip interval
    /// the hybrid term is taken as perfectly cancelled; with one, it is
    /// cancelled by qubit flips every `flip_interval`.
    WaitingPeriod {
        duration: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        flip_interval: Option<f64>,
    },
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match *self {
            Segment::FreeEvolution { duration } | Segment::WaitingPeriod { duration, .. } => duration,
            Segment::QubitRotation { .. } => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("{what} in {self:?}")));
        match *self {
            Segment::FreeEvolution { duration } if !(duration >= 0.0 && duration.is_finite()) => bad("negative duration"),
            Segment::WaitingPeriod { duration, flip_interval } => {
                if !(duration >= 0.0 && duration.is_finite()) {
                    return bad("negative duration");
                }
                match flip_interval {
                    Some(dt) if !(dt > 0.0 && dt <= duration.max(dt)) => bad("invalid flip interval"),
                    _ => Ok(()),
                }
            }
            Segment::QubitRotation { angle, .. } if !angle.is_finite() => bad("non-finite angle"),
            _ => Ok(()),
        }
    }
}

/// Ordered primitives, first segment first.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSchedule {
    pub segments: Vec<Segment>,
}

impl PulseSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let s = Self { segments };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.segments.iter().try_for_each(Segment::validate)
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    pub fn push(&mut self, s: Segment) {
        self.segments.push(s);
    }

    pub fn extend(&mut self, other: &PulseSchedule) {
        self.segments.extend_from_slice(&other.segments);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }
}

/// One second-order sequence: a 13-element pattern applied four times, lasting
/// `18π/ν`.
pub fn h2_sequence(params: &HybridHamiltonianParams) -> PulseSchedule {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
    let f = Segment::FreeEvolution { duration: PI / params.nu };
    let r = |axis, angle| Segment::QubitRotation { axis, angle };
    let pattern = [
        r(Pauli::X, -FRAC_PI_4),
        f,
        r(Pauli::X, FRAC_PI_4),
        r(Pauli::Y, -FRAC_PI_4),
        f,
        r(Pauli::Y, FRAC_PI_4),
        r(Pauli::X, FRAC_PI_4),
        f,
        r(Pauli::X, -FRAC_PI_4),
        r(Pauli::Y, FRAC_PI_4),
        f,
        r(Pauli::Y, -FRAC_PI_4),
        Segment::WaitingPeriod {
            duration: FRAC_PI_2 / params.nu,
            flip_interval: None,
        },
    ];
    let mut segments = Vec::with_capacity(4 * pattern.len());
    for _ in 0..4 {
        segments.extend_from_slice(&pattern);
    }
    PulseSchedule { segments }
}

/// The part of `schedule` that runs before time `t`; the segment straddling
/// `t` is shortened.
pub fn truncate_schedule(schedule: &PulseSchedule, t: f64) -> PulseSchedule {
    let mut out = PulseSchedule::default();
    let mut elapsed = 0.0;
    for seg in &schedule.segments {
        let left = t - elapsed;
        if left <= 0.0 && seg.duration() > 0.0 {
            break;
        }
        if seg.duration() <= left {
            out.push(*seg);
            elapsed += seg.duration();
            continue;
        }
        out.push(match *seg {
            Segment::FreeEvolution { .. } => Segment::FreeEvolution { duration: left },
            Segment::WaitingPeriod { flip_interval, .. } => Segment::WaitingPeriod {
                duration: left,
                flip_interval: flip_interval.map(|dt| dt.min(left)),
            },
            other => other,
        });
        break;
    }
    out
}

/// `repetitions` consecutive second-order sequences.
pub fn build_h2_sequence(params: &HybridHamiltonianParams, repetitions: usize) -> Result<PulseSchedule> {
    params.validate()?;
    if repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be at least 1".into()));
    }
    let one = h2_sequence(params);
    let mut s = PulseSchedule::default();
    for _ in 0..repetitions {
        s.extend(&one);
    }
    Ok(s)
}

/// A schedule segment reduced to something a simulator can apply.
#[derive(Clone, Debug)]
pub enum ResolvedSegment<T: Real> {
    /// Constant Hamiltonian for a duration.
    Evolve {
        hamiltonian: TruncatedOperator<T>,
        duration: f64,
    },
    /// Instantaneous unitary.
    Instant(TruncatedOperator<T>),
}

/// Expands a schedule into Hamiltonian segments and instantaneous
/// rotations, including the flips inside waiting periods.
pub fn resolve_schedule<T: Real>(
    params: &HybridHamiltonianParams,
    layout: &SpaceLayout,
    schedule: &PulseSchedule,
) -> Result<Vec<ResolvedSegment<T>>> {
    schedule.validate()?;
    let h = hamiltonian::<T>(params, layout)?;
    let h0 = bare_hamiltonian::<T>(params, layout)?;
    let mut out = Vec::new();
    for seg in &schedule.segments {
        match *seg {
            Segment::FreeEvolution { duration } => out.push(ResolvedSegment::Evolve {
                hamiltonian: h.clone(),
                duration,
            }),
            Segment::QubitRotation { axis, angle } => out.push(ResolvedSegment::Instant(qubit_rotation(layout, axis, angle)?)),
            Segment::WaitingPeriod { duration, flip_interval: None } => out.push(ResolvedSegment::Evolve {
                hamiltonian: h0.clone(),
                duration,
            }),
            Segment::WaitingPeriod { duration, flip_interval: Some(dt) } => {
                let (pairs, step) = flip_pairs(duration, dt);
                let flip_on = qubit_rotation::<T>(layout, Pauli::X, -std::f64::consts::FRAC_PI_2)?;
                let flip_off = qubit_rotation::<T>(layout, Pauli::X, std::f64::consts::FRAC_PI_2)?;
                for _ in 0..pairs {
                    out.push(ResolvedSegment::Evolve { hamiltonian: h.clone(), duration: step });
                    out.push(ResolvedSegment::Instant(flip_on.clone()));
                    out.push(ResolvedSegment::Evolve { hamiltonian: h.clone(), duration: step });
                    out.push(ResolvedSegment::Instant(flip_off.clone()));
                }
            }
        }
    }
    Ok(out)
}

/// Number of flip pairs and the adjusted interval filling `duration`.
pub fn flip_pairs(duration: f64, dt: f64) -> (usize, f64) {
    let pairs = ((duration / (2.0 * dt)).round() as usize).max(1);
    (pairs, duration / (2.0 * pairs as f64))
}

fn qubit_rotation<T: Real>(layout: &SpaceLayout, axis: Pauli, angle: f64) -> Result<TruncatedOperator<T>> {
    let d = mode_cutoff(layout)?;
    TruncatedOperator::from_matrix(
        layout.clone(),
        rotation_matrix::<T>(axis, lit(angle)).kronecker(&identity::<T>(d)),
    )
}

/// Unitary of a schedule; propagators of repeated durations are reused.
pub fn schedule_unitary<T: Real>(
    params: &HybridHamiltonianParams,
    layout: &SpaceLayout,
    schedule: &PulseSchedule,
) -> Result<TruncatedOperator<T>> {
    let resolved = resolve_schedule::<T>(params, layout, schedule)?;
    let mut cache: HashMap<(u64, bool), TruncatedOperator<T>> = HashMap::new();
    let h0 = bare_hamiltonian::<T>(params, layout)?;
    let mut acc = TruncatedOperator::identity(layout);
    for seg in &resolved {
        let u = match seg {
            ResolvedSegment::Instant(u) => u.clone(),
            ResolvedSegment::Evolve { hamiltonian, duration } => {
                let bare = hamiltonian == &h0;
                cache
                    .entry((duration.to_bits(), bare))
                    .or_insert_with(|| hamiltonian.scale(cplx(T::zero(), lit(-duration))).exp())
                    .clone()
            }
        };
        acc = u.compose(&acc)?;
    }
    Ok(acc)
}

/// Unitary of `repetitions` second-order sequences, by powering one sequence.
pub fn h2_unitary<T: Real>(
    params: &HybridHamiltonianParams,
    layout: &SpaceLayout,
    repetitions: u64,
) -> Result<TruncatedOperator<T>> {
    Ok(schedule_unitary::<T>(params, layout, &h2_sequence(params))?.pow(repetitions))
}

/// `exp(−i·64η²·reps·σ(a†a + ½))`.
pub fn h2_target<T: Real>(params: &HybridHamiltonianParams, layout: &SpaceLayout, repetitions: u64) -> Result<TruncatedOperator<T>> {
    let d = mode_cutoff(layout)?;
    let strength = 64.0 * params.eta * params.eta * repetitions as f64;
    let shifted = number_matrix::<T>(d) + identity::<T>(d) * creal(lit::<T>(0.5));
    let gen = params.coupling_axis.matrix::<T>().kronecker(&shifted) * cplx(T::zero(), lit(-strength));
    TruncatedOperator::from_matrix(layout.clone(), expm(&gen))
}

/// Basis indices with mode occupation at most `n_max`, both qubit values.
pub fn low_subspace(layout: &SpaceLayout, n_max: usize) -> Vec<usize> {
    (0..layout.dim())
        .filter(|&i| layout.digits_of(i)[layout.qubit_count()..].iter().all(|&n| n <= n_max))
        .collect()
}

/// `min_φ ‖U_s − e^{iφ} V_s‖₂` with `φ = arg Tr(V_s† U_s)`, both operators
/// restricted to `indices`.
pub fn gauged_distance<T: Real>(u: &TruncatedOperator<T>, v: &TruncatedOperator<T>, indices: &[usize]) -> f64 {
    let us = u.restricted(indices);
    let vs = v.restricted(indices);
    let overlap = (vs.adjoint() * &us).trace();
    let modulus = crate::scalar::cabs(overlap);
    let phase = if to_f64(modulus) > 0.0 {
        overlap / creal(modulus)
    } else {
        creal(T::one())
    };
    to_f64(operator_norm(&(us - vs * phase)))
}

/// Residual of one second-order sequence against its target on `n ≤ n_max`.
pub fn h2_residual(params: &HybridHamiltonianParams, d: usize, n_max: usize) -> Result<f64> {
    let layout = hybrid_layout(d)?;
    let u = h2_unitary::<f64>(params, &layout, 1)?;
    let v = h2_target::<f64>(params, &layout, 1)?;
    Ok(gauged_distance(&u, &v, &low_subspace(&layout, n_max)))
}

/// Split of the single-sequence error into qubit-flip leakage and the
/// diagonal phase error `δ_z(n) ≈ c₀ + c₁ n + c₂ n²`, reported as the
/// qubit-odd parts `(c(z=0) − c(z=1))/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualDecomposition {
    pub total: f64,
    /// Norm of the qubit off-diagonal block.
    pub off_diagonal: f64,
    pub phase_constant: f64,
    pub phase_linear: f64,
    pub phase_quadratic: f64,
}

pub fn residual_decomposition(params: &HybridHamiltonianParams, d: usize, n_max: usize) -> Result<ResidualDecomposition> {
    let layout = hybrid_layout(d)?;
    let u = h2_unitary::<f64>(params, &layout, 1)?;
    let v = h2_target::<f64>(params, &layout, 1)?;
    let sub = low_subspace(&layout, n_max);
    let total = gauged_distance(&u, &v, &sub);
    let block = DMatrix::from_fn(n_max + 1, n_max + 1, |r, c| u.matrix()[(r, d + c)]);
    let off_diagonal = operator_norm(&block);
    let mut coeffs = [[0.0; 3]; 2];
    for (z, out) in coeffs.iter_mut().enumerate() {
        let phases: Vec<f64> = (0..=n_max)
            .map(|n| {
                let i = z * d + n;
                (u.matrix()[(i, i)] * v.matrix()[(i, i)].conj()).arg()
            })
            .collect();
        *out = quadratic_fit(&phases)?;
    }
    let odd = |k: usize| 0.5 * (coeffs[0][k] - coeffs[1][k]);
    Ok(ResidualDecomposition {
        total,
        off_diagonal,
        phase_constant: odd(0),
        phase_linear: odd(1),
        phase_quadratic: odd(2),
    })
}

/// Least-squares `c₀ + c₁ n + c₂ n²` through `y[n]`.
fn quadratic_fit(y: &[f64]) -> Result<[f64; 3]> {
    let a = DMatrix::from_fn(y.len(), 3, |n, k| (n as f64).powi(k as i32));
    let b = nalgebra::DVector::from_column_slice(y);
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok([sol[0], sol[1], sol[2]])
}

/// Slope of `log r` against `log η`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy, sxx, sxy) = points.iter().fold((0.0, 0.0, 0.0, 0.0), |acc, &(x, y)| {
        let (lx, ly) = (x.ln(), y.ln());
        (acc.0 + lx, acc.1 + ly, acc.2 + lx * lx, acc.3 + lx * ly)
    });
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Timing and strength of the engineered interaction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoupling {
    /// `(32/9) η² ν`, the nominal strength.
    pub lambda_nominal: f64,
    /// `64η²` of phase per `18π/ν` sequence, i.e. `32η²ν/(9π)`.
    pub lambda_engineered: f64,
    pub sequence_time: f64,
    /// `repetitions · 18π/ν`.
    pub total_time: f64,
    /// `π/(2λ)` with the nominal λ, `9π/(64η²ν)`.
    pub controlled_parity_time_nominal: f64,
    /// Sequences needed for a controlled parity with the nominal λ, `1/(128η²)`.
    pub repetitions_nominal: f64,
    /// Sequences needed for `64η²·reps = π/2`, `π/(128η²)`.
    pub repetitions_engineered: f64,
}

pub fn effective_coupling(params: &HybridHamiltonianParams, repetitions: usize) -> Result<EffectiveCoupling> {
    params.validate()?;
    let (eta, nu) = (params.eta, params.nu);
    let pi = std::f64::consts::PI;
    let sequence_time = 18.0 * pi / nu;
    Ok(EffectiveCoupling {
        lambda_nominal: 32.0 / 9.0 * eta * eta * nu,
        lambda_engineered: 32.0 * eta * eta * nu / (9.0 * pi),
        sequence_time,
        total_time: repetitions as f64 * sequence_time,
        controlled_parity_time_nominal: 9.0 * pi / (64.0 * eta * eta * nu),
        repetitions_nominal: 1.0 / (128.0 * eta * eta),
        repetitions_engineered: pi / (128.0 * eta * eta),
    })
}

/// Repetition count for a controlled parity, `round(π/(128η²))`.
pub fn required_repetitions(eta: f64) -> usize {
    (std::f64::consts::PI / (128.0 * eta * eta)).round() as usize
}

/// `η` for which `repetitions` sequences give exactly a controlled parity.
pub fn eta_for_repetitions(repetitions: usize) -> f64 {
    (std::f64::consts::PI / (128.0 * repetitions as f64)).sqrt()
}

/// Literal flip-cancelled waiting period and its distance from the bare
/// evolution `exp(−i·duration·ν a†a)` on `n ≤ n_max`.
pub fn waiting_period_flip_cancellation<T: Real>(
    params: &HybridHamiltonianParams,
    layout: &SpaceLayout,
    duration: f64,
    dt: f64,
    n_max: usize,
) -> Result<(TruncatedOperator<T>, f64)> {
    if !(dt > 0.0 && dt <= duration) {
        return Err(Error::InvalidParameter(format!(
            "flip interval {dt} must lie in (0, {duration}]"
        )));
    }
    let schedule = PulseSchedule::new(vec![Segment::WaitingPeriod {
        duration,
        flip_interval: Some(dt),
    }])?;
    let u = schedule_unitary::<T>(params, layout, &schedule)?;
    let bare = bare_hamiltonian::<T>(params, layout)?
        .scale(cplx(T::zero(), lit(-duration)))
        .exp();
    let residual = gauged_distance(&u, &bare, &low_subspace(layout, n_max));
    Ok((u, residual))
}

/// Schedule for the engineered controlled parity: the powered sequence,
/// then `exp(iπ/4 Z)` and a `3π/(2ν)` wait giving `exp(iπ/2 a†a)`.
pub fn controlled_parity_schedule(params: &HybridHamiltonianParams, repetitions: usize) -> Result<PulseSchedule> {
    let mut s = build_h2_sequence(params, repetitions)?;
    s.push(Segment::QubitRotation {
        axis: Pauli::Z,
        angle: std::f64::consts::FRAC_PI_4,
    });
    s.push(Segment::WaitingPeriod {
        duration: 1.5 * std::f64::consts::PI / params.nu,
        flip_interval: None,
    });
    Ok(s)
}

/// Dense unitary of [`controlled_parity_schedule`].
pub fn engineered_controlled_parity<T: Real>(
    params: &HybridHamiltonianParams,
    layout: &SpaceLayout,
    repetitions: u64,
) -> Result<TruncatedOperator<T>> {
    let d = mode_cutoff(layout)?;
    let powered = h2_unitary::<T>(params, layout, repetitions)?;
    let z = rotation_matrix::<T>(Pauli::Z, lit(std::f64::consts::FRAC_PI_4)).kronecker(&identity::<T>(d));
    let wait = identity::<T>(2).kronecker(&phase_matrix::<T>(d, lit(std::f64::consts::FRAC_PI_2)));
    TruncatedOperator::from_matrix(layout.clone(), wait * z * powered.into_matrix())
}
