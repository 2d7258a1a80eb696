//! Locating and certifying `m₀T`-periodic solutions.
//!
//! The pipeline follows the existence argument: the sign signature of the
//! zero-start solution, a corner of the search box scaled until the
//! Poincaré map points inward, then nested-interval bisection updating all
//! four components from one trajectory per step. A Newton polish refines the
//! result unless strict mode is on.

pub mod bisection;
pub mod newton;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficients::{discriminants, ModelError, RiccatiSystem};
use crate::conditions::{
    check_theorem31_conditions, estimate_m0, ConditionReport, ConditionSettings, M0Error, M0Estimate, M0Method,
    M0Policy, Route,
};
use crate::integrator::{integrate_ivp, FlowError, IntegrationSettings, PoincareMap, Sample, Trajectory};
use crate::quaternion::{Quaternion, SignedComponents};
use crate::transforms::time_reversed;

pub use bisection::{bisection_find, calibrate_corner, initial_signature, BisectionState, Calibration, Signature};
pub use newton::{floquet, newton_polish, FloquetData, NewtonOutcome, Stability};

use bisection::{residual, to_q, to_x};

/// Sign slack for the component certificates.
pub const SIGN_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinderError {
    #[error("conditions do not hold (route {route:?}); rerun with force to try anyway")]
    NotApplicable { route: Route },
    #[error("no periodic solution certified: {}", diagnostics.join("; "))]
    NoConvergence { diagnostics: Vec<String> },
    #[error("certification failure: {0}")]
    CertificationFailure(String),
    #[error("corner calibration failed, last signs {last_signs:?}")]
    CalibrationFailed { last_signs: [f64; 4] },
    #[error("solution from bisection midpoint {midpoint:?} did not complete: {reason}")]
    MidpointEscape { midpoint: SignedComponents, reason: String },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl Serialize for FinderError {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        match self {
            Self::NotApplicable { route } => {
                m.serialize_entry("kind", "not_applicable")?;
                m.serialize_entry("route", route)?;
            }
            Self::NoConvergence { diagnostics } => {
                m.serialize_entry("kind", "no_convergence")?;
                m.serialize_entry("diagnostics", diagnostics)?;
            }
            Self::CertificationFailure(msg) => {
                m.serialize_entry("kind", "certification_failure")?;
                m.serialize_entry("message", msg)?;
            }
            Self::CalibrationFailed { last_signs } => {
                m.serialize_entry("kind", "calibration_failed")?;
                m.serialize_entry("last_signs", last_signs)?;
            }
            Self::MidpointEscape { midpoint, reason } => {
                m.serialize_entry("kind", "midpoint_escape")?;
                m.serialize_entry("midpoint", midpoint)?;
                m.serialize_entry("reason", reason)?;
            }
            Self::Flow(e) => {
                m.serialize_entry("kind", "flow")?;
                m.serialize_entry("flow", e)?;
            }
            Self::Model(e) => {
                m.serialize_entry("kind", "model")?;
                m.serialize_entry("message", &e.to_string())?;
            }
        }
        m.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinderOptions {
    pub integration: IntegrationSettings,
    pub conditions: ConditionSettings,
    pub bisection_tol: f64,
    pub max_bisection_iter: usize,
    /// Largest residual accepted as a periodic solution.
    pub accept_tol: f64,
    pub polish: bool,
    /// Pure bisection, proof formula for `m₀`.
    pub strict_proof: bool,
    /// Run even when the conditions fail.
    pub force: bool,
    pub m0_override: Option<u32>,
    pub max_m0: u32,
}

impl Default for FinderOptions {
    fn default() -> Self {
        Self {
            integration: IntegrationSettings::default(),
            conditions: ConditionSettings::default(),
            bisection_tol: 1e-8,
            max_bisection_iter: 200,
            accept_tol: 1e-6,
            polish: true,
            strict_proof: false,
            force: false,
            m0_override: None,
            max_m0: 64,
        }
    }
}

impl FinderOptions {
    fn m0_policy(&self) -> M0Policy {
        if self.strict_proof {
            M0Policy::ProofFormula
        } else {
            M0Policy::LogThreshold
        }
    }

    fn polishing(&self) -> bool {
        self.polish && !self.strict_proof
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `c₀, c₁ ≥ 0`
    Nonnegative,
    /// `c₀, c₁ ≤ 0`
    Nonpositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignCertificate {
    pub orientation: Orientation,
    pub c0_ok: bool,
    pub c1_ok: bool,
    /// Worst value of `c₀` and `c₁` in the certified direction (minimum for
    /// nonnegative, maximum for nonpositive).
    pub worst_c0: f64,
    pub worst_c1: f64,
}

impl SignCertificate {
    pub fn holds(&self) -> bool {
        self.c0_ok && self.c1_ok
    }
}

pub fn sign_certificate(samples: &[Sample], orientation: Orientation) -> SignCertificate {
    let comps = samples.iter().map(|s| SignedComponents::from_quaternion(s.q));
    let (worst_c0, worst_c1, c0_ok, c1_ok) = match orientation {
        Orientation::Nonnegative => {
            let (m0, m1) = comps.fold((f64::INFINITY, f64::INFINITY), |(a, b), c| (a.min(c.c0), b.min(c.c1)));
            (m0, m1, m0 >= -SIGN_SLACK, m1 >= -SIGN_SLACK)
        }
        Orientation::Nonpositive => {
            let (m0, m1) = comps.fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |(a, b), c| (a.max(c.c0), b.max(c.c1)));
            (m0, m1, m0 <= SIGN_SLACK, m1 <= SIGN_SLACK)
        }
    };
    SignCertificate { orientation, c0_ok, c1_ok, worst_c0, worst_c1 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionBranch {
    pub orientation: Orientation,
    pub q0: SignedComponents,
    pub quaternion: Quaternion,
    pub m0: u32,
    pub residual: f64,
    /// Residual recomputed with tolerances 10× tighter and a doubled grid.
    pub residual_tight: f64,
    pub recheck_ok: bool,
    pub sign_certificate: SignCertificate,
    pub floquet: FloquetData,
    /// Largest `|q(t + m₀T) − q(t)|` over `[0, 2m₀T]` on the output grid.
    pub extension_deviation: f64,
    pub extension_ok: bool,
    /// Search data; for a nonpositive branch found through time reversal
    /// these live in the reversed frame.
    pub search: SearchData,
    pub polish: Option<NewtonOutcome>,
    pub polish_accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchData {
    pub time_reversed: bool,
    pub signature: Signature,
    pub calibration: Calibration,
    pub bisection: BisectionState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCheck {
    /// `∫ Re[a(q* − q)]` over one common period of both branches.
    pub increment: f64,
    pub window: f64,
    pub negative: bool,
    /// Whether the extra hypotheses for strict drift hold.
    pub expected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSolutionReport {
    pub route: Route,
    pub forced: bool,
    pub m0_estimate: M0Estimate,
    pub solution: SolutionBranch,
    /// The nonpositive solution when both are sought.
    pub companion: Option<SolutionBranch>,
    pub drift_check: Option<DriftCheck>,
    pub poincare_evaluations: usize,
    pub diagnostics: Vec<String>,
    pub conditions: ConditionReport,
}

impl PeriodicSolutionReport {
    pub fn branches(&self) -> impl Iterator<Item = &SolutionBranch> {
        std::iter::once(&self.solution).chain(self.companion.as_ref())
    }
}

struct Counter(usize);

/// Result of the search in one frame, before certification.
struct RawBranch {
    x: [f64; 4],
    m0: u32,
    search: SearchData,
    polish: Option<NewtonOutcome>,
    polish_accepted: bool,
}

fn m0_candidates(sys: &RiccatiSystem, opts: &FinderOptions) -> Result<(M0Estimate, Vec<u32>), FinderError> {
    let doubling = |start: u32| -> Vec<u32> {
        let mut v = vec![start];
        let mut m = start;
        while m.saturating_mul(2) <= opts.max_m0 {
            m *= 2;
            v.push(m);
        }
        v
    };
    let i0 = sys.drift_integral();
    if let Some(m) = opts.m0_override {
        let est =
            M0Estimate { m0: m, method: M0Method::Override, drift_integral: i0, epsilon0: None, bound_value: None };
        return Ok((est, vec![m]));
    }
    let profile = discriminants(sys, opts.conditions.grid, opts.conditions.reading)?;
    match estimate_m0(sys, &profile, opts.m0_policy(), opts.conditions.integral_tol) {
        Ok(est) => {
            let list = doubling(est.m0.min(opts.max_m0));
            Ok((est, list))
        }
        Err(M0Error::CapExceeded { .. }) | Err(M0Error::NegativeIntegral(_)) => {
            let est =
                M0Estimate { m0: 1, method: M0Method::Search, drift_integral: i0, epsilon0: None, bound_value: None };
            Ok((est, doubling(1)))
        }
    }
}

fn search_once(
    sys: &RiccatiSystem,
    m0: u32,
    settings: IntegrationSettings,
    opts: &FinderOptions,
    count: &mut Counter,
) -> Result<RawBranch, FinderError> {
    let map = PoincareMap::new(sys, m0, settings);
    let result = (|| {
        let signature = initial_signature(&map)?;
        let calibration = calibrate_corner(&map, &signature)?;
        let bisection = bisection_find(
            &map,
            calibration.corner.to_array(),
            signature.endpoint.to_array(),
            opts.bisection_tol,
            opts.max_bisection_iter,
        )?;
        let mut x = if bisection.iterations == 0 { [0.0; 4] } else { bisection.gamma };
        let mut polish = None;
        let mut polish_accepted = false;
        if opts.polishing() {
            let out = newton_polish(&map, x)?;
            let slack = box_slack(&bisection);
            if out.residual < bisection.residual && bisection.in_initial_box(&out.x, slack) {
                x = out.x;
                polish_accepted = true;
            }
            polish = Some(out);
        }
        Ok(RawBranch {
            x,
            m0,
            search: SearchData { time_reversed: false, signature, calibration, bisection },
            polish,
            polish_accepted,
        })
    })();
    count.0 += map.evaluations();
    result
}

fn box_slack(b: &BisectionState) -> f64 {
    let scale = b.initial_beta.iter().chain(&b.initial_alpha).fold(0.0_f64, |m, v| m.max(v.abs()));
    1e-6 * (1.0 + scale)
}

fn search_branch(
    sys: &RiccatiSystem,
    candidates: &[u32],
    opts: &FinderOptions,
    count: &mut Counter,
    diagnostics: &mut Vec<String>,
) -> Result<RawBranch, FinderError> {
    let mut last_err = None;
    for &m0 in candidates {
        let attempt = match search_once(sys, m0, opts.integration, opts, count) {
            Err(FinderError::MidpointEscape { midpoint, reason }) => {
                diagnostics.push(format!(
                    "m0={m0}: midpoint {:?} escaped ({reason}); retrying with tighter tolerances",
                    midpoint.to_array()
                ));
                search_once(sys, m0, opts.integration.tightened(10.0), opts, count)
            }
            other => other,
        };
        match attempt {
            Ok(raw) => {
                let map = PoincareMap::new(sys, m0, opts.integration);
                let r = map.residual(to_q(raw.x));
                count.0 += map.evaluations();
                match r {
                    Ok(r) if r < opts.accept_tol => return Ok(raw),
                    Ok(r) => diagnostics.push(format!("m0={m0}: residual {r:.3e} above acceptance")),
                    Err(e) => diagnostics.push(format!("m0={m0}: candidate did not complete: {e}")),
                }
            }
            Err(e) => {
                diagnostics.push(format!("m0={m0}: {e}"));
                last_err = Some(e);
            }
        }
    }
    match last_err {
        Some(e @ FinderError::CertificationFailure(_)) => Err(e),
        _ => Err(FinderError::NoConvergence { diagnostics: diagnostics.clone() }),
    }
}

/// Integrates one `m₀T` window at a time, restarting at each boundary so
/// that every window sees the same step pattern.
fn periodic_windows(
    sys: &RiccatiSystem,
    q0: Quaternion,
    m0: u32,
    windows: u32,
    settings: &IntegrationSettings,
) -> Result<Vec<Trajectory>, FlowError> {
    let span = m0 as f64 * sys.period();
    let mut out = Vec::with_capacity(windows as usize);
    let mut q = q0;
    for k in 0..windows {
        let t0 = k as f64 * span;
        let traj = integrate_ivp(sys, q, t0, t0 + span, settings).map_err(|_| FlowError::Invalid)?.into_result()?;
        q = traj.last().q;
        out.push(traj);
    }
    Ok(out)
}

fn extension_deviation(windows: &[Trajectory]) -> f64 {
    windows
        .windows(2)
        .map(|w| w[0].grid_samples().zip(w[1].grid_samples()).map(|(a, b)| a.q.max_abs_diff(b.q)).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// Allowed `|q(t + m₀T) − q(t)|` over two windows: `100·residual`, scaled by
/// the growth `|μ|²` an unstable solution imposes on the residual.
pub fn extension_bound(residual: f64, max_multiplier: f64) -> f64 {
    100.0 * residual.max(1e-15) * max_multiplier.max(1.0).powi(2)
}

/// Certification of a candidate in the original frame.
fn certify(
    sys: &RiccatiSystem,
    raw: RawBranch,
    x: [f64; 4],
    orientation: Orientation,
    opts: &FinderOptions,
    count: &mut Counter,
) -> Result<SolutionBranch, FinderError> {
    let m0 = raw.m0;
    let map = PoincareMap::new(sys, m0, opts.integration);
    let tight_settings = IntegrationSettings {
        samples_per_period: opts.integration.samples_per_period * 2,
        ..opts.integration.tightened(10.0)
    };
    let tight = PoincareMap::new(sys, m0, tight_settings);
    let q0 = to_q(x);
    let result = (|| {
        let image = to_x(map.apply(q0)?);
        let res = residual(&x, &image);
        let residual_tight = tight.residual(q0)?;
        let windows = periodic_windows(sys, q0, m0, 3, &opts.integration)?;
        let cert = sign_certificate(windows[0].samples(), orientation);
        let dev = extension_deviation(&windows);
        let floquet = floquet(&map, &x)?;
        let floquet_max = floquet.max_modulus;
        Ok::<_, FinderError>(SolutionBranch {
            orientation,
            q0: SignedComponents::from_array(x),
            quaternion: q0,
            m0,
            residual: res,
            residual_tight,
            recheck_ok: residual_tight < 10.0 * opts.accept_tol,
            sign_certificate: cert,
            floquet,
            extension_deviation: dev,
            extension_ok: dev <= extension_bound(res, floquet_max),
            search: raw.search,
            polish: raw.polish,
            polish_accepted: raw.polish_accepted,
        })
    })();
    count.0 += map.evaluations() + tight.evaluations();
    result
}

/// Nonpositive solution `q*(t) = −p(−t)` from the nonnegative solution `p`
/// of the time-reversed system.
fn nonpositive_branch(
    sys: &RiccatiSystem,
    opts: &FinderOptions,
    count: &mut Counter,
    diagnostics: &mut Vec<String>,
) -> Result<(SolutionBranch, M0Estimate), FinderError> {
    let rev = time_reversed(sys);
    let (est, candidates) = m0_candidates(&rev, opts)?;
    let mut raw = search_branch(&rev, &candidates, opts, count, diagnostics)?;
    raw.search.time_reversed = true;
    let mut x = raw.x.map(|v| -v);
    if opts.polishing() {
        let map = PoincareMap::new(sys, raw.m0, opts.integration);
        let out = newton_polish(&map, x);
        count.0 += map.evaluations();
        match out {
            Ok(out) => {
                let b = &raw.search.bisection;
                let slack = box_slack(b);
                let back = out.x.map(|v| -v);
                if out.converged || out.residual < 1e-8 {
                    if b.in_initial_box(&back, slack) {
                        x = out.x;
                    } else {
                        diagnostics.push("original-frame polish left the search box; kept reversed-frame value".into());
                    }
                }
                raw.polish_accepted = raw.polish_accepted || x == out.x;
                raw.polish = Some(out);
            }
            Err(e) => diagnostics.push(format!("original-frame polish failed: {e}")),
        }
    }
    let branch = certify(sys, raw, x, Orientation::Nonpositive, opts, count)?;
    Ok((branch, est))
}

fn nonnegative_branch(
    sys: &RiccatiSystem,
    opts: &FinderOptions,
    count: &mut Counter,
    diagnostics: &mut Vec<String>,
) -> Result<(SolutionBranch, M0Estimate), FinderError> {
    let (est, candidates) = m0_candidates(sys, opts)?;
    let raw = search_branch(sys, &candidates, opts, count, diagnostics)?;
    let x = raw.x;
    let branch = certify(sys, raw, x, Orientation::Nonnegative, opts, count)?;
    Ok((branch, est))
}

/// `∫ Re[a(q* − q)]` over `lcm(m₀, m₀*)·T`.
fn drift_check(
    sys: &RiccatiSystem,
    q: &SolutionBranch,
    q_star: &SolutionBranch,
    expected: bool,
    settings: &IntegrationSettings,
) -> Result<DriftCheck, FlowError> {
    let m = lcm(q.m0, q_star.m0);
    let window = m as f64 * sys.period();
    let ta = integrate_ivp(sys, q.quaternion, 0.0, window, settings).map_err(|_| FlowError::Invalid)?.into_result()?;
    let tb =
        integrate_ivp(sys, q_star.quaternion, 0.0, window, settings).map_err(|_| FlowError::Invalid)?.into_result()?;
    let pts: Vec<(f64, f64)> =
        ta.grid_samples().zip(tb.grid_samples()).map(|(a, b)| (a.t, (sys.a.evaluate(a.t) * (b.q - a.q)).w)).collect();
    let increment = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum::<f64>();
    Ok(DriftCheck { increment, window, negative: increment < 0.0, expected })
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

/// Full pipeline: conditions, `m₀`, search, certification.
pub fn find_periodic_solution(
    sys: &RiccatiSystem,
    opts: &FinderOptions,
) -> Result<PeriodicSolutionReport, FinderError> {
    let conditions = check_theorem31_conditions(sys, &opts.conditions)?;
    let mut route = conditions.route;
    let forced = route == Route::NotApplicable;
    if forced {
        if !opts.force {
            return Err(FinderError::NotApplicable { route });
        }
        let i0 = conditions.drift_integral;
        let tol = opts.conditions.integral_tol;
        route = if i0 > tol {
            Route::Theorem31
        } else if i0 >= -tol {
            Route::Corollary32
        } else {
            Route::Corollary31
        };
    }
    let mut count = Counter(0);
    let mut diagnostics = Vec::new();
    if forced {
        diagnostics.push(format!("conditions fail; forced run along {route:?}"));
    }
    let (solution, companion, m0_estimate) = match route {
        Route::Theorem31 => {
            let (b, est) = nonnegative_branch(sys, opts, &mut count, &mut diagnostics)?;
            (b, None, est)
        }
        Route::Corollary31 => {
            let (b, est) = nonpositive_branch(sys, opts, &mut count, &mut diagnostics)?;
            (b, None, est)
        }
        Route::Corollary32 => {
            let (b, est) = nonnegative_branch(sys, opts, &mut count, &mut diagnostics)?;
            let star = match nonpositive_branch(sys, opts, &mut count, &mut diagnostics) {
                Ok((s, _)) => Some(s),
                Err(e) => {
                    diagnostics.push(format!("nonpositive branch: {e}"));
                    None
                }
            };
            (b, star, est)
        }
        Route::NotApplicable => unreachable!("route resolved above"),
    };
    let drift = match &companion {
        Some(star) => match drift_check(sys, &solution, star, conditions.strict_extras, &opts.integration) {
            Ok(d) => Some(d),
            Err(e) => {
                diagnostics.push(format!("drift check: {e}"));
                None
            }
        },
        None => None,
    };
    for b in std::iter::once(&solution).chain(&companion) {
        if !b.sign_certificate.holds() {
            diagnostics.push(format!("{:?} branch: sign certificate fails", b.orientation));
        }
        if !b.recheck_ok {
            diagnostics.push(format!("{:?} branch: tight-tolerance residual {:.3e}", b.orientation, b.residual_tight));
        }
        if !b.extension_ok {
            diagnostics.push(format!(
                "{:?} branch: periodic extension deviation {:.3e}",
                b.orientation, b.extension_deviation
            ));
        }
    }
    Ok(PeriodicSolutionReport {
        route,
        forced,
        m0_estimate,
        solution,
        companion,
        drift_check: drift,
        poincare_evaluations: count.0,
        diagnostics,
        conditions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPreservation {
    pub min_c0: f64,
    pub min_c1: f64,
    pub holds: bool,
    pub escaped: bool,
}

/// Integrates from `q0` over `periods·T` and checks that `c₀, c₁` stay
/// above `−SIGN_SLACK`.
pub fn sign_preservation(
    sys: &RiccatiSystem,
    q0: Quaternion,
    periods: u32,
    settings: &IntegrationSettings,
) -> SignPreservation {
    let span = periods as f64 * sys.period();
    let traj = match integrate_ivp(sys, q0, 0.0, span, settings) {
        Ok(t) => t,
        Err(_) => return SignPreservation { min_c0: f64::NAN, min_c1: f64::NAN, holds: false, escaped: false },
    };
    let cert = sign_certificate(traj.samples(), Orientation::Nonnegative);
    let escaped = !traj.is_completed();
    SignPreservation { min_c0: cert.worst_c0, min_c1: cert.worst_c1, holds: cert.holds() && !escaped, escaped }
}
