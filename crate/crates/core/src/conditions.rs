//! Applicability checks for the periodic-solution theorem, the `m₀` estimate,
//! and the Ark-based criteria used for comparison.
//!
//! Every "≡ 0" or "≤ 0" statement is decided on a grid with explicit
//! tolerances; each verdict carries its margin so borderline systems show up
//! as such instead of passing silently.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficients::{
    bracket_sup, discriminants, DiscriminantProfile, DiscriminantReading, ModelError, RiccatiSystem, DEFAULT_GRID,
};
use crate::fourier::RealFourierSeries;
use crate::quaternion::Quaternion;
use crate::transforms::time_reversed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionSettings {
    pub grid: usize,
    /// Threshold for "≡ 0" and for support membership.
    pub identity_tol: f64,
    /// Slack for "≤ 0" and for "≢ 0".
    pub sign_tol: f64,
    /// Slack for the drift integral `I₀` being zero.
    pub integral_tol: f64,
    /// Bracket suprema above this are reported as indeterminate.
    pub bracket_cap: f64,
    pub reading: DiscriminantReading,
}

impl Default for ConditionSettings {
    fn default() -> Self {
        Self {
            grid: DEFAULT_GRID,
            identity_tol: 1e-12,
            sign_tol: 1e-9,
            integral_tol: 1e-10,
            bracket_cap: 1e6,
            reading: DiscriminantReading::Adopted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub verdict: Verdict,
    /// Grid time of the worst offender (always present on failure).
    pub witness: Option<f64>,
    /// Signed slack: positive means room to spare.
    pub margin: f64,
    pub note: String,
}

impl ConditionVerdict {
    fn pass(margin: f64, note: impl Into<String>) -> Self {
        Self { verdict: Verdict::Pass, witness: None, margin, note: note.into() }
    }

    fn fail(witness: f64, margin: f64, note: impl Into<String>) -> Self {
        Self { verdict: Verdict::Fail, witness: Some(witness), margin, note: note.into() }
    }

    fn indeterminate(witness: Option<f64>, margin: f64, note: impl Into<String>) -> Self {
        Self { verdict: Verdict::Indeterminate, witness, margin, note: note.into() }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// `I₀ > 0`: nonnegative periodic solution directly.
    Theorem31,
    /// `I₀ < 0`: nonpositive solution through time reversal.
    Corollary31,
    /// `I₀ = 0`: both solutions.
    Corollary32,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantSummary {
    pub max: [f64; 4],
    pub min: [f64; 4],
    pub argmax: [f64; 4],
    pub nonpositive: [bool; 4],
    pub identically_zero: [bool; 4],
    pub reading: DiscriminantReading,
    /// An alternate `p_{2,3}` / `p_{3,3}` reading changes a sign flag.
    pub alternate_disagrees: bool,
}

impl DiscriminantSummary {
    fn from_profile(p: &DiscriminantProfile) -> Self {
        Self {
            max: std::array::from_fn(|n| p.flags[n].max),
            min: std::array::from_fn(|n| p.flags[n].min),
            argmax: std::array::from_fn(|n| p.flags[n].argmax),
            nonpositive: std::array::from_fn(|n| p.flags[n].nonpositive),
            identically_zero: std::array::from_fn(|n| p.flags[n].identically_zero),
            reading: p.reading,
            alternate_disagrees: p.alternate.disagrees,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArkCriteriaReport {
    pub cond_i: ConditionVerdict,
    pub cond_ii: ConditionVerdict,
    pub cond_iii: ConditionVerdict,
    pub max_ark_a: f64,
    pub max_ark_minus_d: f64,
    pub applicable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub grid_size: usize,
    pub period: f64,
    pub condition_1: ConditionVerdict,
    pub condition_2: ConditionVerdict,
    pub condition_3: ConditionVerdict,
    pub condition_4: ConditionVerdict,
    pub condition_5: ConditionVerdict,
    /// `∫₀ᵀ (b₀ + c₀)`.
    pub drift_integral: f64,
    /// `I₀ > ln √2`, which allows `m₀ = 1`.
    pub log_threshold: bool,
    /// `D₀ ≤ 0` and `D₁ ≤ 0`, the sign-preservation prerequisite.
    pub existence_guard: ConditionVerdict,
    /// `D₀·D₁ ≢ 0` and (`a₀ > 0` or `a₁ > 0` throughout).
    pub strict_extras: bool,
    pub discriminants: DiscriminantSummary,
    /// Conditions 1–4 recomputed on the time-reversed system when the route
    /// goes through time reversal.
    pub reversed_recheck: Option<bool>,
    pub route: Route,
    pub ark_criteria: ArkCriteriaReport,
}

impl ConditionReport {
    pub fn conditions(&self) -> [&ConditionVerdict; 5] {
        [&self.condition_1, &self.condition_2, &self.condition_3, &self.condition_4, &self.condition_5]
    }

    pub fn theorem31_applicable(&self) -> bool {
        self.route != Route::NotApplicable
    }
}

/// Conditions 1–4 (the part invariant under time reversal).
fn structural(
    sys: &RiccatiSystem,
    grid: &[f64],
    profile: &DiscriminantProfile,
    s: &ConditionSettings,
) -> [ConditionVerdict; 4] {
    [condition_1(sys, grid, s), condition_2(profile, s), condition_3(sys, grid, s), condition_4(sys, grid, s)]
}

fn condition_1(sys: &RiccatiSystem, grid: &[f64], s: &ConditionSettings) -> ConditionVerdict {
    let mut min_a01 = (f64::INFINITY, 0.0);
    let mut max_a23 = (0.0_f64, 0.0);
    let mut max_sum = f64::NEG_INFINITY;
    for &t in grid {
        let a = sys.a.evaluate(t);
        for v in [a.w, a.x] {
            if v < min_a01.0 {
                min_a01 = (v, t);
            }
        }
        let off = a.y.abs().max(a.z.abs());
        if off > max_a23.0 {
            max_a23 = (off, t);
        }
        max_sum = max_sum.max(a.w + a.x);
    }
    if min_a01.0 < -s.identity_tol {
        return ConditionVerdict::fail(min_a01.1, min_a01.0, "a0 or a1 negative");
    }
    if max_a23.0 > s.identity_tol {
        return ConditionVerdict::fail(max_a23.1, -max_a23.0, "a2 or a3 not identically zero");
    }
    if max_sum <= s.sign_tol {
        return ConditionVerdict::fail(grid[0], max_sum, "a0 + a1 identically zero");
    }
    ConditionVerdict::pass(min_a01.0.min(max_sum), "")
}

fn condition_2(profile: &DiscriminantProfile, s: &ConditionSettings) -> ConditionVerdict {
    let mut margin = f64::INFINITY;
    let mut zero = Vec::new();
    for n in [1, 2] {
        let f = &profile.flags[n];
        if !f.nonpositive {
            return ConditionVerdict::fail(f.argmax, -f.max, format!("D{n} positive"));
        }
        margin = margin.min(-f.max);
        if f.min >= -s.sign_tol {
            zero.push(n);
        }
    }
    if zero.is_empty() {
        ConditionVerdict::pass(margin, "")
    } else {
        let names: Vec<String> = zero.iter().map(|n| format!("D{n}")).collect();
        ConditionVerdict::indeterminate(None, margin, format!("{} identically zero on the grid", names.join(", ")))
    }
}

fn condition_3(sys: &RiccatiSystem, grid: &[f64], s: &ConditionSettings) -> ConditionVerdict {
    let mut worst: Option<(f64, f64, String)> = None;
    for n in [2, 3] {
        let plus = sys.b_plus_c(n);
        let minus = sys.b_minus_c(n);
        for &t in grid {
            let a = sys.a.evaluate(t);
            for (u, base, label) in [(&plus, a.w, "a0"), (&minus, a.x, "a1")] {
                let uv = u.value(t).abs();
                if uv > s.identity_tol && base.abs() <= s.identity_tol {
                    let bigger = worst.as_ref().is_none_or(|w| uv > w.1);
                    if bigger {
                        worst = Some((t, uv, format!("support of b{n}±c{n} not inside support of {label}")));
                    }
                }
            }
        }
    }
    match worst {
        Some((t, v, note)) => ConditionVerdict::fail(t, -v, note),
        None => ConditionVerdict::pass(0.0, ""),
    }
}

fn condition_4(sys: &RiccatiSystem, grid: &[f64], s: &ConditionSettings) -> ConditionVerdict {
    let a0 = sys.a.component(0);
    let a1 = sys.a.component(1);
    let mut sup = 0.0_f64;
    let mut at = grid[0];
    for n in [2, 3] {
        for (u, v) in [(sys.b_plus_c(n), a0), (sys.b_minus_c(n), a1)] {
            let (m, t) = bracket_sup(&u, v, grid);
            if m > sup {
                sup = m;
                at = t;
            }
        }
    }
    if sup.is_finite() && sup <= s.bracket_cap {
        ConditionVerdict::pass(s.bracket_cap - sup, format!("sup of brackets {sup:.6e}"))
    } else {
        ConditionVerdict::indeterminate(
            Some(at),
            s.bracket_cap - sup,
            format!("sup of brackets {sup:.6e} exceeds the cap"),
        )
    }
}

fn condition_5(i0: f64, s: &ConditionSettings) -> ConditionVerdict {
    if i0 >= -s.integral_tol {
        ConditionVerdict::pass(i0, "")
    } else {
        ConditionVerdict::fail(0.0, i0, "drift integral negative")
    }
}

fn existence_guard(profile: &DiscriminantProfile) -> ConditionVerdict {
    let f0 = &profile.flags[0];
    let f1 = &profile.flags[1];
    if !f0.nonpositive {
        return ConditionVerdict::fail(f0.argmax, -f0.max, "D0 positive");
    }
    if !f1.nonpositive {
        return ConditionVerdict::fail(f1.argmax, -f1.max, "D1 positive");
    }
    ConditionVerdict::pass(-f0.max.max(f1.max), "")
}

fn strict_extras(sys: &RiccatiSystem, grid: &[f64], profile: &DiscriminantProfile, s: &ConditionSettings) -> bool {
    let product_nonzero = profile.d[0].iter().zip(&profile.d[1]).any(|(x, y)| (x * y).abs() > s.sign_tol);
    let a0_pos = grid.iter().all(|&t| sys.a.component(0).value(t) > s.identity_tol);
    let a1_pos = grid.iter().all(|&t| sys.a.component(1).value(t) > s.identity_tol);
    product_nonzero && (a0_pos || a1_pos)
}

/// Checks everything and picks the route.
pub fn check_theorem31_conditions(
    sys: &RiccatiSystem,
    settings: &ConditionSettings,
) -> Result<ConditionReport, ModelError> {
    let profile = discriminants(sys, settings.grid, settings.reading)?;
    let grid = profile.grid.clone();
    let [c1, c2, c3, c4] = structural(sys, &grid, &profile, settings);
    let i0 = sys.drift_integral();
    let c5 = condition_5(i0, settings);
    let structural_ok = ![&c1, &c2, &c3, &c4].iter().any(|c| c.failed());

    let mut reversed_recheck = None;
    let route = if !structural_ok {
        Route::NotApplicable
    } else if i0 > settings.integral_tol {
        Route::Theorem31
    } else if i0 >= -settings.integral_tol {
        Route::Corollary32
    } else {
        let rev = time_reversed(sys);
        let rprof = discriminants(&rev, settings.grid, settings.reading)?;
        let ok = !structural(&rev, &rprof.grid, &rprof, settings).iter().any(|c| c.failed());
        reversed_recheck = Some(ok);
        if ok {
            Route::Corollary31
        } else {
            Route::NotApplicable
        }
    };

    Ok(ConditionReport {
        grid_size: settings.grid,
        period: sys.period(),
        condition_1: c1,
        condition_2: c2,
        condition_3: c3,
        condition_4: c4,
        condition_5: c5,
        drift_integral: i0,
        log_threshold: i0 > 0.5 * LN_2,
        existence_guard: existence_guard(&profile),
        strict_extras: strict_extras(sys, &grid, &profile, settings),
        discriminants: DiscriminantSummary::from_profile(&profile),
        reversed_recheck,
        route,
        ark_criteria: check_ark_criteria(sys, &grid, settings),
    })
}

/// Conditions (i)–(iii) of the Ark-based criterion.
pub fn check_ark_criteria(sys: &RiccatiSystem, grid: &[f64], s: &ConditionSettings) -> ArkCriteriaReport {
    let mut max_ark_a = (0.0_f64, grid[0]);
    let mut max_ark_d = (0.0_f64, grid[0]);
    let mut ad_nonzero = false;
    let mut worst_re = (f64::NEG_INFINITY, grid[0]);
    let mut worst_im = (0.0_f64, grid[0]);
    for &t in grid {
        let v = sys.values_at(t);
        let ka = v.a.ark();
        if ka > max_ark_a.0 {
            max_ark_a = (ka, t);
        }
        let kd = (-v.d).ark();
        if kd > max_ark_d.0 {
            max_ark_d = (kd, t);
        }
        if (v.a * v.d).norm() > s.identity_tol {
            ad_nonzero = true;
        }
        let bc = v.b + v.c;
        if bc.w > worst_re.0 {
            worst_re = (bc.w, t);
        }
        if bc.vector_norm() > worst_im.0 {
            worst_im = (bc.vector_norm(), t);
        }
    }
    let cond_i = if !ad_nonzero {
        ConditionVerdict::fail(grid[0], 0.0, "a·d identically zero")
    } else if max_ark_a.0 >= FRAC_PI_4 {
        ConditionVerdict::fail(max_ark_a.1, FRAC_PI_4 - max_ark_a.0, "Ark[a] reaches pi/4")
    } else {
        ConditionVerdict::pass(FRAC_PI_4 - max_ark_a.0, "")
    };
    let total = max_ark_a.0 + max_ark_d.0;
    let cond_ii = if total <= FRAC_PI_2 + s.identity_tol {
        ConditionVerdict::pass(FRAC_PI_2 - total, "")
    } else {
        let t = if max_ark_a.0 >= max_ark_d.0 { max_ark_a.1 } else { max_ark_d.1 };
        ConditionVerdict::fail(t, FRAC_PI_2 - total, "Ark[a] + Ark[-d] exceeds pi/2")
    };
    let cond_iii = if worst_re.0 > s.identity_tol {
        ConditionVerdict::fail(worst_re.1, -worst_re.0, "Re[b + c] positive")
    } else if worst_im.0 > s.identity_tol {
        ConditionVerdict::fail(worst_im.1, -worst_im.0, "b + c not real")
    } else {
        ConditionVerdict::pass(-worst_re.0, "")
    };
    let applicable = cond_i.passed() && cond_ii.passed() && cond_iii.passed();
    ArkCriteriaReport { cond_i, cond_ii, cond_iii, max_ark_a: max_ark_a.0, max_ark_minus_d: max_ark_d.0, applicable }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum M0Policy {
    /// `floor(1/I₀) + 1` only.
    ProofFormula,
    /// `m₀ = 1` when `I₀ > ln √2`, else the formula.
    #[default]
    LogThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum M0Method {
    ReciprocalIntegral,
    LogThreshold,
    ConstructiveBound,
    Search,
    Override,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M0Estimate {
    pub m0: u32,
    pub method: M0Method,
    pub drift_integral: f64,
    pub epsilon0: Option<f64>,
    /// `ε₀²·(∫∫−D₀)·(∫∫−D₁)` at the returned `m0`.
    pub bound_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum M0Error {
    #[error("drift integral {0} is negative")]
    NegativeIntegral(f64),
    #[error("no m0 up to {cap} meets the constructive bound (value at cap {value:e})")]
    CapExceeded { cap: u32, value: f64 },
}

pub const M0_CAP: u32 = 1_000_000;

/// `m₀` from a positive drift integral.
pub fn m0_from_integral(i0: f64, policy: M0Policy) -> M0Estimate {
    let (m0, method) = if policy == M0Policy::LogThreshold && i0 > 0.5 * LN_2 {
        (1, M0Method::LogThreshold)
    } else {
        let m = (1.0 / i0).floor() + 1.0;
        (m.min(M0_CAP as f64) as u32, M0Method::ReciprocalIntegral)
    };
    M0Estimate { m0, method, drift_integral: i0, epsilon0: None, bound_value: None }
}

/// `∫₀^{mT} ∫₀^t g` for a `T`-periodic `g` sampled on a grid covering one
/// period: returns `(P, G)` with `P = ∫₀ᵀ g`, `G = ∫₀ᵀ ∫₀^t g`, so that the
/// double integral over `m` periods is `m·G + T·P·m(m−1)/2`.
pub fn periodic_double_integral_parts(grid: &[f64], g: &[f64]) -> (f64, f64) {
    let mut cum = 0.0;
    let mut outer = 0.0;
    for i in 1..grid.len() {
        let h = grid[i] - grid[i - 1];
        let next = cum + 0.5 * h * (g[i - 1] + g[i]);
        outer += 0.5 * h * (cum + next);
        cum = next;
    }
    (cum, outer)
}

fn double_integral(parts: (f64, f64), period: f64, m: f64) -> f64 {
    m * parts.1 + period * parts.0 * m * (m - 1.0) / 2.0
}

/// Oscillation `max S − min S` of `S(t) = ∫₀ᵗ f` over one period.
fn oscillation(f: &RealFourierSeries, grid: &[f64]) -> f64 {
    let mut lo = 0.0_f64;
    let mut hi = 0.0_f64;
    for &t in grid {
        let s = f.integral(0.0, t);
        lo = lo.min(s);
        hi = hi.max(s);
    }
    hi - lo
}

/// The `m₀` estimate following the existence proof.
pub fn estimate_m0(
    sys: &RiccatiSystem,
    profile: &DiscriminantProfile,
    policy: M0Policy,
    integral_tol: f64,
) -> Result<M0Estimate, M0Error> {
    let i0 = sys.drift_integral();
    if i0 > integral_tol {
        return Ok(m0_from_integral(i0, policy));
    }
    if i0 < -integral_tol {
        return Err(M0Error::NegativeIntegral(i0));
    }
    let eps0 = (-oscillation(&sys.b_plus_c(0), &profile.grid)).exp();
    let neg = |n: usize| -> Vec<f64> { profile.d[n].iter().map(|v| -v).collect() };
    let p0 = periodic_double_integral_parts(&profile.grid, &neg(0));
    let p1 = periodic_double_integral_parts(&profile.grid, &neg(1));
    let t = sys.period();
    let value = |m: u32| {
        let m = m as f64;
        eps0 * eps0 * double_integral(p0, t, m) * double_integral(p1, t, m)
    };
    let target = 3f64.exp();
    if value(M0_CAP) < target {
        return Err(M0Error::CapExceeded { cap: M0_CAP, value: value(M0_CAP) });
    }
    // The bound grows with m once both double integrals are positive, so
    // bisect for the first m past the threshold after a doubling search.
    let mut hi = 1;
    while value(hi) < target {
        hi = (hi * 2).min(M0_CAP);
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if value(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Guard against non-monotone data near the start.
    let m0 = (1..=hi).find(|&m| value(m) >= target).unwrap_or(hi);
    Ok(M0Estimate {
        m0,
        method: M0Method::ConstructiveBound,
        drift_integral: i0,
        epsilon0: Some(eps0),
        bound_value: Some(value(m0)),
    })
}

/// Per-period increment of `∫ Re[a(t)·x]` for constant `x`; used by callers
/// that want the exact drift of a constant difference.
pub fn constant_drift(sys: &RiccatiSystem, x: Quaternion) -> f64 {
    let a = &sys.a;
    let t = sys.period();
    let c = |n: usize| a.component(n).integral(0.0, t);
    c(0) * x.w - c(1) * x.x - c(2) * x.y - c(3) * x.z
}
