//! Normal/extremal classification of a pair of solutions through the growth
//! of `𝕀(t) = ∫₀ᵗ Re[a(τ)(q_a(τ) − q_b(τ))] dτ`.

use serde::{Deserialize, Serialize};

use crate::coefficients::RiccatiSystem;
use crate::integrator::{integrate_ivp, IntegrationSettings, TrajectoryStatus};
use crate::quaternion::Quaternion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    /// `𝕀` stays bounded: normal pair.
    BoundedPair,
    /// `𝕀` decreases at a steady rate: extremal indicator.
    DriftNegative,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub q0_a: Quaternion,
    pub q0_b: Quaternion,
    pub periods: u32,
    /// `𝕀` at `t = kT`, `k = 0..=periods`.
    pub integral: Vec<f64>,
    pub classification: PairClass,
    /// Mean increment per unit time.
    pub drift_rate: f64,
    pub note: Option<String>,
}

/// Bounded if the range over the second half is below this fraction of
/// `1 + range over the first half`.
const BOUNDED_FRACTION: f64 = 1e-3;
/// Largest relative spread of per-period increments for steady drift.
const DRIFT_SPREAD: f64 = 0.1;

pub fn classify_pair(
    sys: &RiccatiSystem,
    q0_a: Quaternion,
    q0_b: Quaternion,
    periods: u32,
    settings: &IntegrationSettings,
) -> NormalityReport {
    let periods = periods.max(2);
    let mut report = NormalityReport {
        q0_a,
        q0_b,
        periods,
        integral: Vec::new(),
        classification: PairClass::Inconclusive,
        drift_rate: f64::NAN,
        note: None,
    };
    let t_end = periods as f64 * sys.period();
    let run = |q0| integrate_ivp(sys, q0, 0.0, t_end, settings);
    let (ta, tb) = match (run(q0_a), run(q0_b)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            report.note = Some(e.to_string());
            return report;
        }
    };
    for (name, t) in [("a", &ta), ("b", &tb)] {
        if let TrajectoryStatus::Escaped { t_escape } = t.status() {
            report.note = Some(format!("solution {name} escaped at t = {t_escape}"));
            return report;
        }
        if let TrajectoryStatus::StepLimit { t_reached } = t.status() {
            report.note = Some(format!("solution {name} hit the step limit at t = {t_reached}"));
            return report;
        }
    }

    let spp = settings.samples_per_period;
    let mut cum = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (k, (a, b)) in ta.grid_samples().zip(tb.grid_samples()).enumerate() {
        let g = (sys.a.evaluate(a.t) * (a.q - b.q)).w;
        if let Some((t0, g0)) = prev {
            cum += 0.5 * (a.t - t0) * (g0 + g);
        }
        prev = Some((a.t, g));
        if k % spp == 0 {
            report.integral.push(cum);
        }
    }

    let vals = &report.integral;
    let half = periods as usize / 2;
    let range = |s: &[f64]| {
        let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let first = range(&vals[..=half]);
    let second = range(&vals[half..]);
    let inc: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = inc.iter().sum::<f64>() / inc.len() as f64;
    report.drift_rate = mean / sys.period();

    report.classification = if second < BOUNDED_FRACTION * (1.0 + first) {
        PairClass::BoundedPair
    } else {
        let lo = inc.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = inc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi < 0.0 && (hi - lo) < DRIFT_SPREAD * mean.abs() {
            PairClass::DriftNegative
        } else {
            PairClass::Inconclusive
        }
    };
    report
}
