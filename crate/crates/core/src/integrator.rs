//! Forward integration of `q' = −(q·a·q + b·q + q·c + d)`.
//!
//! Adaptive Dormand–Prince 5(4) with escape detection by a norm cap. Steps
//! are clipped so that every point of the uniform output grid is an exact
//! step endpoint; between endpoints the trajectory can be evaluated by cubic
//! Hermite interpolation.

use std::cell::Cell;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficients::RiccatiSystem;
use crate::quaternion::Quaternion;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `None` means `T/64`.
    pub max_step: Option<f64>,
    pub escape_norm: f64,
    pub max_steps: u64,
    /// Uniform output points per period.
    pub samples_per_period: usize,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: None,
            escape_norm: 1e8,
            max_steps: 10_000_000,
            samples_per_period: 256,
        }
    }
}

impl IntegrationSettings {
    pub fn validate(&self) -> Result<(), IntegrationError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.rel_tol) {
            return Err(IntegrationError::BadSetting("rel_tol"));
        }
        if !ok(self.abs_tol) {
            return Err(IntegrationError::BadSetting("abs_tol"));
        }
        if self.max_step.is_some_and(|h| !ok(h)) {
            return Err(IntegrationError::BadSetting("max_step"));
        }
        if !ok(self.escape_norm) {
            return Err(IntegrationError::BadSetting("escape_norm"));
        }
        if self.max_steps == 0 {
            return Err(IntegrationError::BadSetting("max_steps"));
        }
        if self.samples_per_period == 0 {
            return Err(IntegrationError::BadSetting("samples_per_period"));
        }
        Ok(())
    }

    /// Same settings with both tolerances divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self { rel_tol: self.rel_tol / factor, abs_tol: self.abs_tol / factor, ..*self }
    }

    fn max_step_for(&self, period: f64) -> f64 {
        self.max_step.unwrap_or(period / 64.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("integration setting `{0}` must be positive and finite")]
    BadSetting(&'static str),
    #[error("bad time span [{t0}, {t1}]")]
    BadSpan { t0: f64, t1: f64 },
    #[error("initial value is not finite")]
    NonFiniteInitial,
}

/// Why a flow evaluation did not reach its end time.
#[derive(Debug, Clone, Copy, PartialEq, Error, Serialize, Deserialize)]
pub enum FlowError {
    #[error("solution escaped (norm above cap) at t = {0}")]
    Escaped(f64),
    #[error("step limit reached at t = {0}")]
    StepLimit(f64),
    #[error("invalid integration request")]
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Completed,
    Escaped { t_escape: f64 },
    StepLimit { t_reached: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub q: Quaternion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
    slopes: Vec<Quaternion>,
    grid: Vec<usize>,
    status: TrajectoryStatus,
    accepted: u64,
    rejected: u64,
}

impl Trajectory {
    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn status(&self) -> TrajectoryStatus {
        self.status
    }

    pub fn is_completed(&self) -> bool {
        self.status == TrajectoryStatus::Completed
    }

    pub fn steps(&self) -> (u64, u64) {
        (self.accepted, self.rejected)
    }

    pub fn last(&self) -> Sample {
        *self.samples.last().expect("trajectory holds the initial sample")
    }

    /// Samples on the uniform output grid (always exact step endpoints).
    pub fn grid_samples(&self) -> impl Iterator<Item = Sample> + '_ {
        self.grid.iter().map(|&i| self.samples[i])
    }

    pub fn into_result(self) -> Result<Self, FlowError> {
        match self.status {
            TrajectoryStatus::Completed => Ok(self),
            TrajectoryStatus::Escaped { t_escape } => Err(FlowError::Escaped(t_escape)),
            TrajectoryStatus::StepLimit { t_reached } => Err(FlowError::StepLimit(t_reached)),
        }
    }

    /// Cubic Hermite interpolation between step endpoints; `None` outside
    /// the integrated span.
    pub fn interpolate(&self, t: f64) -> Option<Quaternion> {
        let first = self.samples.first()?;
        let last = self.samples.last()?;
        if t < first.t || t > last.t {
            return None;
        }
        let i = self.samples.partition_point(|s| s.t <= t);
        if i == 0 {
            return Some(first.q);
        }
        if i == self.samples.len() {
            return Some(last.q);
        }
        let (s0, s1) = (self.samples[i - 1], self.samples[i]);
        let (f0, f1) = (self.slopes[i - 1], self.slopes[i]);
        let h = s1.t - s0.t;
        let u = (t - s0.t) / h;
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        Some(s0.q * h00 + f0 * (h10 * h) + s1.q * h01 + f1 * (h11 * h))
    }
}

/// `−(q·a(t)·q + b(t)·q + q·c(t) + d(t))`.
#[inline]
pub fn riccati_rhs(sys: &RiccatiSystem, t: f64, q: Quaternion) -> Quaternion {
    let v = sys.values_at(t);
    -(q * v.a * q + v.b * q + q * v.c + v.d)
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

struct Step {
    y5: Quaternion,
    y4: Quaternion,
    f_end: Quaternion,
}

/// One Dormand–Prince step; `f0` is the slope at `(t, y)`.
fn dp_step(sys: &RiccatiSystem, t: f64, y: Quaternion, f0: Quaternion, h: f64) -> Step {
    let mut k = [Quaternion::ZERO; 7];
    k[0] = f0;
    for s in 1..6 {
        let mut acc = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            if A[s][j] != 0.0 {
                acc += *kj * (h * A[s][j]);
            }
        }
        k[s] = riccati_rhs(sys, t + C[s] * h, acc);
    }
    let mut y5 = y;
    for (j, kj) in k.iter().enumerate().take(6) {
        if B5[j] != 0.0 {
            y5 += *kj * (h * B5[j]);
        }
    }
    k[6] = riccati_rhs(sys, t + h, y5);
    let mut y4 = y;
    for (j, kj) in k.iter().enumerate() {
        if B4[j] != 0.0 {
            y4 += *kj * (h * B4[j]);
        }
    }
    Step { y5, y4, f_end: k[6] }
}

fn error_norm(y: Quaternion, y_new: Quaternion, err: Quaternion, s: &IntegrationSettings) -> f64 {
    let ya = y.to_array();
    let yn = y_new.to_array();
    let e = err.to_array();
    let mut acc = 0.0;
    for n in 0..4 {
        let sc = s.abs_tol + s.rel_tol * ya[n].abs().max(yn[n].abs());
        acc += (e[n] / sc).powi(2);
    }
    (acc / 4.0).sqrt()
}

/// Uniform output grid on `[t0, t1]` with spacing close to `T/samples`.
fn output_grid(t0: f64, t1: f64, period: f64, samples: usize) -> Vec<f64> {
    let span = t1 - t0;
    if span == 0.0 {
        return vec![t0];
    }
    let ratio = span * samples as f64 / period;
    let nearest = ratio.round();
    let n = if (ratio - nearest).abs() < 1e-9 * ratio.max(1.0) { nearest } else { ratio.ceil() }.max(1.0) as usize;
    let mut g: Vec<f64> = (0..=n).map(|k| t0 + span * (k as f64 / n as f64)).collect();
    g[n] = t1;
    g
}

/// Adaptive integration from `(t0, q0)` to `t1`.
pub fn integrate_ivp(
    sys: &RiccatiSystem,
    q0: Quaternion,
    t0: f64,
    t1: f64,
    settings: &IntegrationSettings,
) -> Result<Trajectory, IntegrationError> {
    settings.validate()?;
    if !(t0.is_finite() && t1.is_finite() && t0 <= t1) {
        return Err(IntegrationError::BadSpan { t0, t1 });
    }
    if !q0.is_finite() {
        return Err(IntegrationError::NonFiniteInitial);
    }
    let period = sys.period();
    let grid = output_grid(t0, t1, period, settings.samples_per_period);
    let h_max = settings.max_step_for(period);

    let mut t = t0;
    let mut y = q0;
    let mut f = riccati_rhs(sys, t, y);
    let mut traj = Trajectory {
        samples: vec![Sample { t, q: y }],
        slopes: vec![f],
        grid: vec![0],
        status: TrajectoryStatus::Completed,
        accepted: 0,
        rejected: 0,
    };
    if y.norm() > settings.escape_norm {
        traj.status = TrajectoryStatus::Escaped { t_escape: t };
        return Ok(traj);
    }

    let mut h = initial_step(y, f, settings).min(h_max);
    let mut next = 1;
    while next < grid.len() {
        if traj.accepted + traj.rejected >= settings.max_steps {
            traj.status = TrajectoryStatus::StepLimit { t_reached: t };
            return Ok(traj);
        }
        let target = grid[next];
        let remaining = target - t;
        let lands = h >= remaining * (1.0 - 1e-12);
        let step = if lands { remaining } else { h };
        if step <= f64::EPSILON * t.abs().max(1.0) * 4.0 && !lands {
            traj.status = TrajectoryStatus::StepLimit { t_reached: t };
            return Ok(traj);
        }
        let st = dp_step(sys, t, y, f, step);
        let err = if st.y5.is_finite() && st.f_end.is_finite() {
            error_norm(y, st.y5, st.y5 - st.y4, settings)
        } else {
            f64::INFINITY
        };
        if err <= 1.0 {
            t = if lands { target } else { t + step };
            y = st.y5;
            f = st.f_end;
            traj.accepted += 1;
            traj.samples.push(Sample { t, q: y });
            traj.slopes.push(f);
            if lands {
                traj.grid.push(traj.samples.len() - 1);
                next += 1;
            }
            if y.norm() > settings.escape_norm {
                traj.status = TrajectoryStatus::Escaped { t_escape: t };
                return Ok(traj);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // A step shortened to land on the grid says little about the
            // size the controller wanted; do not let it shrink `h`.
            h = if lands { h.max(step * factor) } else { step * factor };
            h = h.min(h_max);
        } else {
            traj.rejected += 1;
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
            h = step * factor;
        }
    }
    Ok(traj)
}

fn initial_step(y: Quaternion, f: Quaternion, s: &IntegrationSettings) -> f64 {
    let scale = s.abs_tol + s.rel_tol * y.norm();
    let d0 = y.norm() / scale;
    let d1 = f.norm() / scale;
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
}

/// Which member of the embedded pair advances a fixed-step run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedOrder {
    Fourth,
    Fifth,
}

/// Fixed-step integration with `n_steps` equal steps; used for convergence
/// studies. Returns `None` if the solution becomes non-finite.
pub fn integrate_fixed(
    sys: &RiccatiSystem,
    q0: Quaternion,
    t0: f64,
    t1: f64,
    n_steps: usize,
    order: FixedOrder,
) -> Option<Quaternion> {
    let h = (t1 - t0) / n_steps as f64;
    let mut y = q0;
    for i in 0..n_steps {
        let t = t0 + h * i as f64;
        let st = dp_step(sys, t, y, riccati_rhs(sys, t, y), h);
        y = match order {
            FixedOrder::Fourth => st.y4,
            FixedOrder::Fifth => st.y5,
        };
        if !y.is_finite() {
            return None;
        }
    }
    Some(y)
}

/// Value at `t = m0·T` of the solution starting from `q0` at `t = 0`.
pub fn poincare_map(
    sys: &RiccatiSystem,
    q0: Quaternion,
    m0: u32,
    settings: &IntegrationSettings,
) -> Result<Quaternion, FlowError> {
    let t1 = m0.max(1) as f64 * sys.period();
    let traj = integrate_ivp(sys, q0, 0.0, t1, settings).map_err(|_| FlowError::Invalid)?;
    Ok(traj.into_result()?.last().q)
}

/// The Poincaré map bound to a system, counting its evaluations.
#[derive(Debug)]
pub struct PoincareMap<'a> {
    sys: &'a RiccatiSystem,
    m0: u32,
    settings: IntegrationSettings,
    evaluations: Cell<usize>,
}

impl<'a> PoincareMap<'a> {
    pub fn new(sys: &'a RiccatiSystem, m0: u32, settings: IntegrationSettings) -> Self {
        Self { sys, m0: m0.max(1), settings, evaluations: Cell::new(0) }
    }

    pub fn system(&self) -> &RiccatiSystem {
        self.sys
    }

    pub fn m0(&self) -> u32 {
        self.m0
    }

    pub fn settings(&self) -> &IntegrationSettings {
        &self.settings
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.get()
    }

    pub fn end_time(&self) -> f64 {
        self.m0 as f64 * self.sys.period()
    }

    pub fn apply(&self, q0: Quaternion) -> Result<Quaternion, FlowError> {
        self.evaluations.set(self.evaluations.get() + 1);
        poincare_map(self.sys, q0, self.m0, &self.settings)
    }

    /// Full trajectory over `[0, m0·T]`; counts as one evaluation.
    pub fn trajectory(&self, q0: Quaternion) -> Result<Trajectory, FlowError> {
        self.evaluations.set(self.evaluations.get() + 1);
        integrate_ivp(self.sys, q0, 0.0, self.end_time(), &self.settings).map_err(|_| FlowError::Invalid)?.into_result()
    }

    /// `|P(q0) − q0|`.
    pub fn residual(&self, q0: Quaternion) -> Result<f64, FlowError> {
        Ok((self.apply(q0)? - q0).norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, d: f64) -> RiccatiSystem {
        RiccatiSystem::constant(1.0, Quaternion::real(a), Quaternion::ZERO, Quaternion::ZERO, Quaternion::real(d))
            .unwrap()
    }

    #[test]
    fn rhs_at_zero_is_minus_d() {
        let sys = RiccatiSystem::constant(
            1.0,
            Quaternion::I,
            Quaternion::J,
            Quaternion::K,
            Quaternion::new(0.3, -0.2, 0.1, 0.5),
        )
        .unwrap();
        assert_eq!(riccati_rhs(&sys, 0.4, Quaternion::ZERO), -Quaternion::new(0.3, -0.2, 0.1, 0.5));
    }

    #[test]
    fn tanh_equilibrium_and_solution() {
        let sys = scalar(1.0, -1.0);
        assert_eq!(riccati_rhs(&sys, 0.0, Quaternion::ONE), Quaternion::ZERO);
        let traj = integrate_ivp(&sys, Quaternion::ZERO, 0.0, 5.0, &IntegrationSettings::default()).unwrap();
        assert!(traj.is_completed());
        assert_eq!(traj.last().t, 5.0);
        assert!((traj.last().q.w - 5f64.tanh()).abs() < 1e-8);
        for s in traj.grid_samples() {
            assert!((s.q.w - s.t.tanh()).abs() < 1e-8);
        }
        let mid = traj.interpolate(1.2345).unwrap();
        assert!((mid.w - 1.2345f64.tanh()).abs() < 1e-7);
    }

    #[test]
    fn zero_system_is_constant() {
        let sys = scalar(0.0, 0.0);
        let q0 = Quaternion::new(0.3, 1.0, -2.0, 0.5);
        let traj = integrate_ivp(&sys, q0, 0.0, 3.0, &IntegrationSettings::default()).unwrap();
        assert!(traj.samples().iter().all(|s| s.q == q0));
    }

    #[test]
    fn blow_up_detected() {
        let sys = scalar(-1.0, 0.0);
        let traj = integrate_ivp(&sys, Quaternion::ONE, 0.0, 2.0, &IntegrationSettings::default()).unwrap();
        match traj.status() {
            TrajectoryStatus::Escaped { t_escape } => assert!((0.99..=1.0).contains(&t_escape), "{t_escape}"),
            s => panic!("unexpected {s:?}"),
        }
        let sys2 =
            RiccatiSystem::constant(2.0, Quaternion::real(-1.0), Quaternion::ZERO, Quaternion::ZERO, Quaternion::ZERO)
                .unwrap();
        assert!(matches!(
            poincare_map(&sys2, Quaternion::ONE, 1, &IntegrationSettings::default()),
            Err(FlowError::Escaped(_))
        ));
    }

    #[test]
    fn poincare_examples() {
        let sys = scalar(1.0, -1.0);
        let s = IntegrationSettings::default();
        assert!((poincare_map(&sys, Quaternion::ONE, 1, &s).unwrap().w - 1.0).abs() < 1e-10);
        assert!((poincare_map(&sys, Quaternion::ZERO, 1, &s).unwrap().w - 0.7615941559557649).abs() < 1e-9);
        let pm = PoincareMap::new(&sys, 1, s);
        pm.apply(Quaternion::ZERO).unwrap();
        pm.residual(Quaternion::ONE).unwrap();
        assert_eq!(pm.evaluations(), 2);
    }

    #[test]
    fn step_limit_reported() {
        let sys = scalar(1.0, -1.0);
        let s = IntegrationSettings { max_steps: 10, ..Default::default() };
        let traj = integrate_ivp(&sys, Quaternion::ZERO, 0.0, 5.0, &s).unwrap();
        assert!(matches!(traj.status(), TrajectoryStatus::StepLimit { .. }));
    }

    #[test]
    fn rejects_bad_input() {
        let sys = scalar(1.0, -1.0);
        let s = IntegrationSettings { rel_tol: -1.0, ..Default::default() };
        assert!(integrate_ivp(&sys, Quaternion::ZERO, 0.0, 1.0, &s).is_err());
        assert!(integrate_ivp(&sys, Quaternion::ZERO, 1.0, 0.0, &IntegrationSettings::default()).is_err());
    }

    #[test]
    fn fixed_step_fourth_order() {
        let sys = scalar(1.0, -1.0);
        let exact = 5f64.tanh();
        let e1 = (integrate_fixed(&sys, Quaternion::ZERO, 0.0, 5.0, 100, FixedOrder::Fourth).unwrap().w - exact).abs();
        let e2 = (integrate_fixed(&sys, Quaternion::ZERO, 0.0, 5.0, 200, FixedOrder::Fourth).unwrap().w - exact).abs();
        let ratio = e1 / e2;
        assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn grid_lands_on_period_multiples() {
        let g = output_grid(0.0, 3.0, 1.0, 256);
        assert_eq!(g.len(), 3 * 256 + 1);
        assert_eq!(g[256], 1.0);
        assert_eq!(g[512], 2.0);
        assert_eq!(*g.last().unwrap(), 3.0);
    }
}
