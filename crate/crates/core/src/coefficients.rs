//! Periodic quaternion coefficients and the Riccati system built from them.
//!
//! A [`RiccatiSystem`] is the quadruple `(a, b, c, d)` of
//! `q' + q·a(t)·q + b(t)·q + q·c(t) + d(t) = 0`, each coefficient a
//! [`QuaternionCoefficient`] of four real Fourier series sharing the period.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fourier::{same_period, RealFourierSeries, SeriesError};
use crate::quaternion::Quaternion;

/// Values with absolute value at or below this are treated as zero.
pub const ZERO_TOL: f64 = 1e-12;
/// Slack for "≤ 0" decisions on discriminants and for "≢ 0" detection.
pub const SIGN_TOL: f64 = 1e-9;
/// Default number of uniform grid intervals per period.
pub const DEFAULT_GRID: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("coefficient components have different periods")]
    MixedPeriods,
    #[error("coefficient `{name}` has period {found}, system period is {expected}")]
    PeriodMismatch { name: &'static str, expected: f64, found: f64 },
    #[error("grid needs at least 2 intervals, got {0}")]
    GridTooSmall(usize),
}

/// A `T`-periodic quaternion-valued function; component `n` multiplies the
/// unit `1, i, j, k` respectively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuaternionCoefficient {
    components: [RealFourierSeries; 4],
}

impl QuaternionCoefficient {
    pub fn new(components: [RealFourierSeries; 4]) -> Result<Self, ModelError> {
        let t = components[0].period();
        if components.iter().any(|s| !same_period(s.period(), t)) {
            return Err(ModelError::MixedPeriods);
        }
        Ok(Self { components })
    }

    pub fn zero(period: f64) -> Result<Self, ModelError> {
        Self::constant(period, Quaternion::ZERO)
    }

    pub fn constant(period: f64, q: Quaternion) -> Result<Self, ModelError> {
        let c = |v| RealFourierSeries::constant(period, v);
        Ok(Self { components: [c(q.w)?, c(q.x)?, c(q.y)?, c(q.z)?] })
    }

    pub fn period(&self) -> f64 {
        self.components[0].period()
    }

    pub fn components(&self) -> &[RealFourierSeries; 4] {
        &self.components
    }

    pub fn component(&self, n: usize) -> &RealFourierSeries {
        &self.components[n]
    }

    pub fn is_constant(&self) -> bool {
        self.components.iter().all(RealFourierSeries::is_constant)
    }

    pub fn evaluate(&self, t: f64) -> Quaternion {
        Quaternion::new(
            self.components[0].value(t),
            self.components[1].value(t),
            self.components[2].value(t),
            self.components[3].value(t),
        )
    }

    pub fn derivative(&self) -> Self {
        Self { components: self.components.clone().map(|s| s.derivative()) }
    }

    pub fn time_reversed(&self) -> Self {
        Self { components: self.components.clone().map(|s| s.time_reversed()) }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { components: self.components.clone().map(|c| c.scaled(s)) }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn conjugate(&self) -> Self {
        let [c0, c1, c2, c3] = self.components.clone();
        Self { components: [c0, c1.scaled(-1.0), c2.scaled(-1.0), c3.scaled(-1.0)] }
    }

    pub fn plus(&self, other: &Self) -> Result<Self, ModelError> {
        let mut out = self.components.clone();
        for (o, b) in out.iter_mut().zip(&other.components) {
            *o = o.plus(b)?;
        }
        Ok(Self { components: out })
    }

    pub fn minus(&self, other: &Self) -> Result<Self, ModelError> {
        self.plus(&other.negated())
    }

    /// Hamilton product with a constant on the left, `u·f(t)`.
    pub fn left_mul_const(&self, u: Quaternion) -> Self {
        self.mul_const_impl(u, true)
    }

    /// Hamilton product with a constant on the right, `f(t)·u`.
    pub fn right_mul_const(&self, u: Quaternion) -> Self {
        self.mul_const_impl(u, false)
    }

    fn mul_const_impl(&self, u: Quaternion, left: bool) -> Self {
        // Each output component is a fixed linear combination of the input
        // components; read the combination off the images of the basis.
        let basis = [Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K];
        let images = basis.map(|e| if left { u * e } else { e * u }.to_array());
        let period = self.period();
        let comps: [RealFourierSeries; 4] = std::array::from_fn(|row| {
            let mut acc = RealFourierSeries::zero(period).expect("period already validated");
            for (col, img) in images.iter().enumerate() {
                let w = img[row];
                if w != 0.0 {
                    acc = acc.add_scaled(&self.components[col], w).expect("components share the period");
                }
            }
            acc
        });
        Self { components: comps }
    }

    /// Exact pointwise Hamilton product of two coefficients.
    pub fn hamilton(&self, other: &Self) -> Result<Self, ModelError> {
        let a = &self.components;
        let b = &other.components;
        let term = |i: usize, j: usize| a[i].product(&b[j]);
        let c0 = term(0, 0)?.minus(&term(1, 1)?)?.minus(&term(2, 2)?)?.minus(&term(3, 3)?)?;
        let c1 = term(0, 1)?.plus(&term(1, 0)?)?.plus(&term(2, 3)?)?.minus(&term(3, 2)?)?;
        let c2 = term(0, 2)?.minus(&term(1, 3)?)?.plus(&term(2, 0)?)?.plus(&term(3, 1)?)?;
        let c3 = term(0, 3)?.plus(&term(1, 2)?)?.minus(&term(2, 1)?)?.plus(&term(3, 0)?)?;
        Ok(Self { components: [c0, c1, c2, c3] })
    }

    /// Componentwise fit of a sampled quaternion function.
    pub fn fit_uniform(period: f64, samples: &[Quaternion], harmonics: usize) -> Result<(Self, f64), ModelError> {
        let mut resid = 0.0_f64;
        let mut comps = Vec::with_capacity(4);
        for n in 0..4 {
            let vals: Vec<f64> = samples.iter().map(|q| q.to_array()[n]).collect();
            let (s, r) = RealFourierSeries::fit_uniform_with_residual(period, &vals, harmonics)?;
            resid = resid.max(r);
            comps.push(s);
        }
        let components: [RealFourierSeries; 4] = comps.try_into().expect("four components");
        Ok((Self { components }, resid))
    }

    /// Largest componentwise deviation on the given times.
    pub fn max_deviation(&self, other: &Self, times: &[f64]) -> f64 {
        times.iter().map(|&t| self.evaluate(t).max_abs_diff(other.evaluate(t))).fold(0.0, f64::max)
    }
}

/// `q' + q·a(t)·q + b(t)·q + q·c(t) + d(t) = 0` with `T`-periodic coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiccatiSystem {
    pub a: QuaternionCoefficient,
    pub b: QuaternionCoefficient,
    pub c: QuaternionCoefficient,
    pub d: QuaternionCoefficient,
    period: f64,
    /// Extra grid nodes in `[0, T]` declared by the input (e.g. kinks in
    /// tabulated data).
    #[serde(default)]
    breakpoints: Vec<f64>,
}

/// The four coefficient values at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientValues {
    pub a: Quaternion,
    pub b: Quaternion,
    pub c: Quaternion,
    pub d: Quaternion,
}

impl RiccatiSystem {
    pub fn new(
        a: QuaternionCoefficient,
        b: QuaternionCoefficient,
        c: QuaternionCoefficient,
        d: QuaternionCoefficient,
    ) -> Result<Self, ModelError> {
        let period = a.period();
        for (name, coef) in [("b", &b), ("c", &c), ("d", &d)] {
            if !same_period(coef.period(), period) {
                return Err(ModelError::PeriodMismatch { name, expected: period, found: coef.period() });
            }
        }
        Ok(Self { a, b, c, d, period, breakpoints: Vec::new() })
    }

    /// System with constant coefficients.
    pub fn constant(
        period: f64,
        a: Quaternion,
        b: Quaternion,
        c: Quaternion,
        d: Quaternion,
    ) -> Result<Self, ModelError> {
        Self::new(
            QuaternionCoefficient::constant(period, a)?,
            QuaternionCoefficient::constant(period, b)?,
            QuaternionCoefficient::constant(period, c)?,
            QuaternionCoefficient::constant(period, d)?,
        )
    }

    pub fn with_breakpoints(mut self, mut points: Vec<f64>) -> Self {
        points.retain(|t| t.is_finite());
        points.sort_by(f64::total_cmp);
        points.dedup();
        self.breakpoints = points;
        self
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn coefficients(&self) -> [&QuaternionCoefficient; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    #[inline]
    pub fn values_at(&self, t: f64) -> CoefficientValues {
        CoefficientValues { a: self.a.evaluate(t), b: self.b.evaluate(t), c: self.c.evaluate(t), d: self.d.evaluate(t) }
    }

    /// `b_n + c_n` as a series.
    pub fn b_plus_c(&self, n: usize) -> RealFourierSeries {
        self.b.component(n).plus(self.c.component(n)).expect("shared period")
    }

    /// `b_n − c_n` as a series.
    pub fn b_minus_c(&self, n: usize) -> RealFourierSeries {
        self.b.component(n).minus(self.c.component(n)).expect("shared period")
    }

    /// `I₀ = ∫₀ᵀ (b₀ + c₀)`.
    pub fn drift_integral(&self) -> f64 {
        mean_integral(&self.b_plus_c(0), 0.0, self.period)
    }

    /// Uniform grid on `[0, T]` with `intervals + 1` nodes plus breakpoints.
    pub fn grid(&self, intervals: usize) -> Result<Vec<f64>, ModelError> {
        uniform_grid(self.period, intervals, &self.breakpoints)
    }

    /// Largest coefficient deviation from `other` on a grid.
    pub fn max_deviation(&self, other: &Self, times: &[f64]) -> f64 {
        self.coefficients().iter().zip(other.coefficients()).map(|(p, q)| p.max_deviation(q, times)).fold(0.0, f64::max)
    }
}

/// `∫_{t0}^{t1} f` in closed form.
pub fn mean_integral(f: &RealFourierSeries, t0: f64, t1: f64) -> f64 {
    f.integral(t0, t1)
}

pub fn uniform_grid(period: f64, intervals: usize, extra: &[f64]) -> Result<Vec<f64>, ModelError> {
    if intervals < 2 {
        return Err(ModelError::GridTooSmall(intervals));
    }
    let n = intervals as f64;
    let mut g: Vec<f64> = (0..=intervals).map(|k| (k as f64 * period) / n).collect();
    g.extend(extra.iter().copied().filter(|t| (0.0..=period).contains(t)));
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

/// `[u/v]₀`: the quotient where `|v| > ZERO_TOL`, zero otherwise.
pub fn bracket_ratio(u: &RealFourierSeries, v: &RealFourierSeries, t: f64) -> f64 {
    let vv = v.value(t);
    if vv.abs() > ZERO_TOL {
        u.value(t) / vv
    } else {
        0.0
    }
}

/// `sup |[u/v]₀|` over the grid, with the time where it is attained.
pub fn bracket_sup(u: &RealFourierSeries, v: &RealFourierSeries, grid: &[f64]) -> (f64, f64) {
    grid.iter().fold((0.0, grid.first().copied().unwrap_or(0.0)), |(m, tm), &t| {
        let r = bracket_ratio(u, v, t).abs();
        if r > m {
            (r, t)
        } else {
            (m, tm)
        }
    })
}

/// Which branch variable selects the `a ≠ 0` case of `D_n`, `n ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscriminantReading {
    /// `D_n = Σ p_{n,m}² − 4 a_n d_n` if `a_n ≠ 0`, else `−4 d_n`.
    #[default]
    Adopted,
    /// As printed: tests `a₀ ≠ 0` and uses `a₀ d₀` for every `n ≥ 1`.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantFlags {
    /// `max D_n ≤ SIGN_TOL` on the grid.
    pub nonpositive: bool,
    /// `max |D_n| ≤ SIGN_TOL` on the grid.
    pub identically_zero: bool,
    pub max: f64,
    pub min: f64,
    pub argmax: f64,
}

impl DiscriminantFlags {
    fn from_values(grid: &[f64], values: &[f64]) -> Self {
        let mut max = f64::NEG_INFINITY;
        let mut min = f64::INFINITY;
        let mut argmax = 0.0;
        let mut max_abs = 0.0_f64;
        for (&t, &v) in grid.iter().zip(values) {
            if v > max {
                max = v;
                argmax = t;
            }
            min = min.min(v);
            max_abs = max_abs.max(v.abs());
        }
        Self { nonpositive: max <= SIGN_TOL, identically_zero: max_abs <= SIGN_TOL, max, min, argmax }
    }
}

/// The `p_{n,m}` and `D_n` quantities sampled over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantProfile {
    pub reading: DiscriminantReading,
    pub grid: Vec<f64>,
    /// `p[n][m-1][i]` at `grid[i]`.
    pub p: [[Vec<f64>; 3]; 4],
    /// `d[n][i]` at `grid[i]`.
    pub d: [Vec<f64>; 4],
    pub flags: [DiscriminantFlags; 4],
    /// `D₂` and `D₃` recomputed with `p_{2,3} = b₃ + c₃` and
    /// `p_{3,3} = b₃ + c₃` respectively.
    pub alternate: AlternateDiscriminants,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternateDiscriminants {
    pub d2: DiscriminantFlags,
    pub d3: DiscriminantFlags,
    /// True when an alternate reading changes a sign flag of `D₂` or `D₃`.
    pub disagrees: bool,
}

/// `p_{n,m}(t)` for the table `p₀ = (b₁+c₁, b₂+c₂, b₃+c₃)`,
/// `p₁ = (b₁+c₁, b₂−c₂, b₃−c₃)`, `p₂ = (b₁−c₁, b₂+c₂, b₃−c₃)`,
/// `p₃ = (b₁−c₁, b₂−c₂, b₃−c₃)`.
pub fn p_values(b: Quaternion, c: Quaternion) -> [[f64; 3]; 4] {
    let bs = b.to_array();
    let cs = c.to_array();
    let plus = |m: usize| bs[m] + cs[m];
    let minus = |m: usize| bs[m] - cs[m];
    [
        [plus(1), plus(2), plus(3)],
        [plus(1), minus(2), minus(3)],
        [minus(1), plus(2), minus(3)],
        [minus(1), minus(2), minus(3)],
    ]
}

fn discriminant(n: usize, p: &[f64; 3], a: [f64; 4], d: [f64; 4], reading: DiscriminantReading) -> f64 {
    let sum_sq: f64 = p.iter().map(|v| v * v).sum();
    if n == 0 {
        return if a[0].abs() > ZERO_TOL { sum_sq + 4.0 * a[0] * d[0] } else { 4.0 * d[0] };
    }
    let branch = match reading {
        DiscriminantReading::Adopted => n,
        DiscriminantReading::Literal => 0,
    };
    if a[branch].abs() > ZERO_TOL {
        sum_sq - 4.0 * a[branch] * d[branch]
    } else {
        -4.0 * d[n]
    }
}

/// Sample `p_{n,m}` and `D_n` on `grid_size` uniform intervals.
pub fn discriminants(
    sys: &RiccatiSystem,
    grid_size: usize,
    reading: DiscriminantReading,
) -> Result<DiscriminantProfile, ModelError> {
    let grid = sys.grid(grid_size)?;
    let len = grid.len();
    let mut p: [[Vec<f64>; 3]; 4] = Default::default();
    let mut dv: [Vec<f64>; 4] = Default::default();
    let mut alt2 = Vec::with_capacity(len);
    let mut alt3 = Vec::with_capacity(len);
    for row in p.iter_mut() {
        for col in row.iter_mut() {
            col.reserve(len);
        }
    }
    for &t in &grid {
        let v = sys.values_at(t);
        let pv = p_values(v.b, v.c);
        let a = v.a.to_array();
        let d = v.d.to_array();
        for n in 0..4 {
            for m in 0..3 {
                p[n][m].push(pv[n][m]);
            }
            dv[n].push(discriminant(n, &pv[n], a, d, reading));
        }
        let b3c3 = v.b.z + v.c.z;
        let mut p2 = pv[2];
        p2[2] = b3c3;
        alt2.push(discriminant(2, &p2, a, d, reading));
        let mut p3 = pv[3];
        p3[2] = b3c3;
        alt3.push(discriminant(3, &p3, a, d, reading));
    }
    let flags: [DiscriminantFlags; 4] = std::array::from_fn(|n| DiscriminantFlags::from_values(&grid, &dv[n]));
    let d2 = DiscriminantFlags::from_values(&grid, &alt2);
    let d3 = DiscriminantFlags::from_values(&grid, &alt3);
    let disagrees = d2.nonpositive != flags[2].nonpositive
        || d2.identically_zero != flags[2].identically_zero
        || d3.nonpositive != flags[3].nonpositive
        || d3.identically_zero != flags[3].identically_zero;
    Ok(DiscriminantProfile { reading, grid, p, d: dv, flags, alternate: AlternateDiscriminants { d2, d3, disagrees } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::Harmonic;
    use rand::{Rng, SeedableRng};

    fn q(w: f64, x: f64, y: f64, z: f64) -> Quaternion {
        Quaternion::new(w, x, y, z)
    }

    #[test]
    fn constant_coefficient_evaluates_everywhere() {
        let c = QuaternionCoefficient::constant(1.0, q(2.0, 1.0, 0.0, 0.0)).unwrap();
        for &t in &[0.0, 0.3, 17.2, -4.0] {
            assert_eq!(c.evaluate(t), q(2.0, 1.0, 0.0, 0.0));
        }
    }

    #[test]
    fn coefficient_periodicity() {
        let s = RealFourierSeries::new(1.3, 0.2, [Harmonic { k: 2, cos_amp: 0.4, sin_amp: -0.7 }]).unwrap();
        let z = RealFourierSeries::zero(1.3).unwrap();
        let c = QuaternionCoefficient::new([s.clone(), z.clone(), s, z]).unwrap();
        for &t in &[0.1, 0.77, 1.2] {
            assert!(c.evaluate(t).max_abs_diff(c.evaluate(t + 7.0 * 1.3)) < 1e-13);
        }
    }

    #[test]
    fn constant_multiplication_matches_pointwise() {
        let s = RealFourierSeries::sine(1.0, 1, 0.5).unwrap();
        let k = RealFourierSeries::cosine(1.0, 2, -0.3).unwrap();
        let one = RealFourierSeries::constant(1.0, 1.0).unwrap();
        let f = QuaternionCoefficient::new([one, s, k.clone(), k]).unwrap();
        let u = q(0.3, -0.2, 0.9, 0.1);
        let l = f.left_mul_const(u);
        let r = f.right_mul_const(u);
        for i in 0..20 {
            let t = 0.05 * i as f64;
            assert!(l.evaluate(t).max_abs_diff(u * f.evaluate(t)) < 1e-15);
            assert!(r.evaluate(t).max_abs_diff(f.evaluate(t) * u) < 1e-15);
        }
    }

    #[test]
    fn coefficient_product_matches_pointwise() {
        let mk = |c: f64, k: u32, a: f64, b: f64| {
            RealFourierSeries::new(1.0, c, [Harmonic { k, cos_amp: a, sin_amp: b }]).unwrap()
        };
        let f = QuaternionCoefficient::new([
            mk(1.0, 1, 0.2, 0.1),
            mk(0.0, 2, 0.3, 0.0),
            mk(-0.5, 1, 0.0, 0.4),
            mk(0.1, 3, 0.1, 0.1),
        ])
        .unwrap();
        let g = f.conjugate().left_mul_const(q(0.0, 1.0, 0.5, 0.0));
        let fg = f.hamilton(&g).unwrap();
        for i in 0..30 {
            let t = 0.033 * i as f64;
            assert!(fg.evaluate(t).max_abs_diff(f.evaluate(t) * g.evaluate(t)) < 1e-14);
        }
    }

    #[test]
    fn mismatched_periods_rejected() {
        let a = QuaternionCoefficient::constant(1.0, Quaternion::ONE).unwrap();
        let b = QuaternionCoefficient::constant(2.0, Quaternion::ONE).unwrap();
        let err = RiccatiSystem::new(a.clone(), b, a.clone(), a).unwrap_err();
        assert!(matches!(err, ModelError::PeriodMismatch { name: "b", .. }));
    }

    #[test]
    fn integral_examples() {
        let t = 1.0;
        let s = RealFourierSeries::sine(t, 1, 1.0).unwrap();
        assert!(mean_integral(&s, 0.0, t).abs() < 1e-15);
        assert!((mean_integral(&s, 0.0, 0.5) - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        let c = RealFourierSeries::constant(t, 3.0).unwrap();
        assert_eq!(mean_integral(&c, 0.0, t), 3.0);
    }

    #[test]
    fn discriminants_of_quaternionic_constant_system() {
        // a = 1+i, b = c = 0, d = −1 + 0.5i + 0.2j
        let sys = RiccatiSystem::constant(
            1.0,
            q(1.0, 1.0, 0.0, 0.0),
            Quaternion::ZERO,
            Quaternion::ZERO,
            q(-1.0, 0.5, 0.2, 0.0),
        )
        .unwrap();
        let prof = discriminants(&sys, 64, DiscriminantReading::Adopted).unwrap();
        let expect = [-4.0, -2.0, -0.8, 0.0];
        for (n, e) in expect.iter().enumerate() {
            for &v in &prof.d[n] {
                assert!((v - e).abs() < 1e-15, "D{n} = {v}");
            }
            assert!(prof.p[n].iter().flatten().all(|&v| v == 0.0));
        }
        assert!(prof.flags[3].identically_zero);
        assert!(prof.flags[0].nonpositive && !prof.flags[0].identically_zero);
    }

    #[test]
    fn zero_a_uses_else_branch() {
        let sys =
            RiccatiSystem::constant(1.0, Quaternion::ZERO, Quaternion::ZERO, Quaternion::ZERO, q(-1.0, 0.0, 0.0, 0.0))
                .unwrap();
        let prof = discriminants(&sys, 8, DiscriminantReading::Adopted).unwrap();
        assert!(prof.d[0].iter().all(|&v| v == -4.0));
    }

    #[test]
    fn symmetric_b_c_first_component() {
        // b = c = i, a = d = 0: p_{0,1} = 2, D₀ = 4·d₀ = 0 on the a₀ = 0 branch.
        // With a₀ = 1 instead the sum of squares enters: D₀ = 4 + 4·0 = 4.
        let mut sys =
            RiccatiSystem::constant(1.0, Quaternion::ZERO, Quaternion::I, Quaternion::I, Quaternion::ZERO).unwrap();
        let prof = discriminants(&sys, 8, DiscriminantReading::Adopted).unwrap();
        assert!(prof.p[0][0].iter().all(|&v| v == 2.0));
        sys.a = QuaternionCoefficient::constant(1.0, Quaternion::ONE).unwrap();
        let prof = discriminants(&sys, 8, DiscriminantReading::Adopted).unwrap();
        assert!(prof.d[0].iter().all(|&v| v == 4.0));
    }

    #[test]
    fn literal_reading_differs() {
        let sys = RiccatiSystem::constant(
            1.0,
            q(1.0, 1.0, 0.0, 0.0),
            Quaternion::ZERO,
            Quaternion::ZERO,
            q(-1.0, 0.5, 0.2, 0.0),
        )
        .unwrap();
        let prof = discriminants(&sys, 8, DiscriminantReading::Literal).unwrap();
        // −4·a₀·d₀ = 4 for every n ≥ 1 since a₀ ≠ 0
        for n in 1..4 {
            assert!(prof.d[n].iter().all(|&v| v == 4.0));
        }
    }

    #[test]
    fn real_b_c_hand_expansion() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..3 {
            let a0: f64 = rng.gen_range(0.1..2.0);
            let d0: f64 = rng.gen_range(-2.0..2.0);
            let b0: f64 = rng.gen_range(-1.0..1.0);
            let c0: f64 = rng.gen_range(-1.0..1.0);
            let sys = RiccatiSystem::constant(
                1.0,
                q(a0, 0.0, 0.0, 0.0),
                q(b0, 0.0, 0.0, 0.0),
                q(c0, 0.0, 0.0, 0.0),
                q(d0, 0.0, 0.0, 0.0),
            )
            .unwrap();
            let prof = discriminants(&sys, 8, DiscriminantReading::Adopted).unwrap();
            assert!(prof.d[0].iter().all(|&v| v == 4.0 * a0 * d0));
        }
    }

    #[test]
    fn finer_grid_agrees_at_shared_nodes() {
        let d1 = RealFourierSeries::new(1.0, 0.5, [Harmonic { k: 1, cos_amp: 0.0, sin_amp: 0.3 }]).unwrap();
        let z = RealFourierSeries::zero(1.0).unwrap();
        let d = QuaternionCoefficient::new([
            RealFourierSeries::constant(1.0, -0.8).unwrap(),
            d1,
            RealFourierSeries::constant(1.0, 0.2).unwrap(),
            z,
        ])
        .unwrap();
        let a = QuaternionCoefficient::constant(1.0, q(1.0, 1.0, 0.0, 0.0)).unwrap();
        let zero = QuaternionCoefficient::zero(1.0).unwrap();
        let sys = RiccatiSystem::new(a, zero.clone(), zero, d).unwrap();
        let coarse = discriminants(&sys, 256, DiscriminantReading::Adopted).unwrap();
        let fine = discriminants(&sys, 512, DiscriminantReading::Adopted).unwrap();
        for (i, &t) in coarse.grid.iter().enumerate() {
            assert_eq!(fine.grid[2 * i], t);
            for n in 0..4 {
                assert_eq!(fine.d[n][2 * i], coarse.d[n][i]);
            }
        }
        for n in 0..4 {
            assert_eq!(fine.flags[n].nonpositive, coarse.flags[n].nonpositive);
        }
    }

    #[test]
    fn bracket_examples() {
        let two = RealFourierSeries::constant(1.0, 2.0).unwrap();
        let four = RealFourierSeries::constant(1.0, 4.0).unwrap();
        let zero = RealFourierSeries::zero(1.0).unwrap();
        assert_eq!(bracket_ratio(&two, &four, 0.3), 0.5);
        assert_eq!(bracket_ratio(&two, &zero, 0.3), 0.0);
        let s = RealFourierSeries::sine(1.0, 1, 1.0).unwrap();
        let grid = uniform_grid(1.0, 512, &[]).unwrap();
        for &t in &grid {
            let r = bracket_ratio(&s, &s, t);
            assert!(r == 0.0 || (r - 1.0).abs() < 1e-15);
        }
        let (sup, _) = bracket_sup(&s, &s, &grid);
        assert!((sup - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_contains_breakpoints() {
        let g = uniform_grid(1.0, 4, &[0.3, 0.5, 2.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.3, 0.5, 0.75, 1.0]);
        assert!(uniform_grid(1.0, 1, &[]).is_err());
    }
}
