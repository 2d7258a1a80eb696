//! Finite real Fourier series on a fixed period.
//!
//! `f(t) = c + Σ_k [a_k cos(2πk t/T) + b_k sin(2πk t/T)]`. Evaluation,
//! differentiation and integration are closed form, and every evaluation
//! reduces the phase `k·t/T` modulo one so that `f(t + nT) = f(t)` holds to
//! rounding for any integer `n`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("period must be positive and finite, got {0}")]
    BadPeriod(f64),
    #[error("harmonic index must be a positive integer, got {0}")]
    BadHarmonic(f64),
    #[error("series periods differ: {0} vs {1}")]
    PeriodMismatch(f64, f64),
    #[error("need more than {needed} samples to fit {harmonics} harmonics, got {got}")]
    TooFewSamples { harmonics: usize, needed: usize, got: usize },
    #[error("non-finite value in series data")]
    NonFinite,
}

/// One harmonic term `cos_amp·cos(2πk t/T) + sin_amp·sin(2πk t/T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub k: u32,
    pub cos_amp: f64,
    pub sin_amp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealFourierSeries {
    period: f64,
    constant: f64,
    /// Sorted by `k`, unique, no zero-amplitude entries.
    harmonics: Vec<Harmonic>,
}

/// Periods are compared exactly except for rounding-level noise.
pub(crate) fn same_period(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

#[inline]
fn reduced_angle(k: u32, u: f64) -> f64 {
    // u is t/T; reduce k·u to [0, 1) before scaling by 2π.
    let ku = k as f64 * u;
    TAU * (ku - ku.floor())
}

impl RealFourierSeries {
    pub fn new(period: f64, constant: f64, harmonics: impl IntoIterator<Item = Harmonic>) -> Result<Self, SeriesError> {
        if !(period.is_finite() && period > 0.0) {
            return Err(SeriesError::BadPeriod(period));
        }
        if !constant.is_finite() {
            return Err(SeriesError::NonFinite);
        }
        let mut s = Self { period, constant, harmonics: Vec::new() };
        for h in harmonics {
            if h.k == 0 {
                return Err(SeriesError::BadHarmonic(0.0));
            }
            if !(h.cos_amp.is_finite() && h.sin_amp.is_finite()) {
                return Err(SeriesError::NonFinite);
            }
            s.accumulate(h.k, h.cos_amp, h.sin_amp);
        }
        s.normalize();
        Ok(s)
    }

    pub fn constant(period: f64, value: f64) -> Result<Self, SeriesError> {
        Self::new(period, value, [])
    }

    pub fn zero(period: f64) -> Result<Self, SeriesError> {
        Self::constant(period, 0.0)
    }

    /// `amp·sin(2πk t/T)`.
    pub fn sine(period: f64, k: u32, amp: f64) -> Result<Self, SeriesError> {
        Self::new(period, 0.0, [Harmonic { k, cos_amp: 0.0, sin_amp: amp }])
    }

    /// `amp·cos(2πk t/T)`.
    pub fn cosine(period: f64, k: u32, amp: f64) -> Result<Self, SeriesError> {
        Self::new(period, 0.0, [Harmonic { k, cos_amp: amp, sin_amp: 0.0 }])
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    pub fn is_constant(&self) -> bool {
        self.harmonics.is_empty()
    }

    pub fn max_harmonic(&self) -> u32 {
        self.harmonics.last().map_or(0, |h| h.k)
    }

    fn accumulate(&mut self, k: u32, c: f64, s: f64) {
        match self.harmonics.binary_search_by_key(&k, |h| h.k) {
            Ok(i) => {
                self.harmonics[i].cos_amp += c;
                self.harmonics[i].sin_amp += s;
            }
            Err(i) => self.harmonics.insert(i, Harmonic { k, cos_amp: c, sin_amp: s }),
        }
    }

    fn normalize(&mut self) {
        self.harmonics.retain(|h| h.cos_amp != 0.0 || h.sin_amp != 0.0);
    }

    pub fn value(&self, t: f64) -> f64 {
        let u = t / self.period;
        self.harmonics.iter().fold(self.constant, |acc, h| {
            let th = reduced_angle(h.k, u);
            acc + h.cos_amp * th.cos() + h.sin_amp * th.sin()
        })
    }

    pub fn derivative_value(&self, t: f64) -> f64 {
        let u = t / self.period;
        let w = TAU / self.period;
        self.harmonics.iter().fold(0.0, |acc, h| {
            let th = reduced_angle(h.k, u);
            let kw = h.k as f64 * w;
            acc + kw * (h.sin_amp * th.cos() - h.cos_amp * th.sin())
        })
    }

    /// The periodic part of an antiderivative (without the `c·t` term).
    fn periodic_antiderivative(&self, t: f64) -> f64 {
        let u = t / self.period;
        let w = TAU / self.period;
        self.harmonics.iter().fold(0.0, |acc, h| {
            let th = reduced_angle(h.k, u);
            let kw = h.k as f64 * w;
            acc + (h.cos_amp * th.sin() - h.sin_amp * th.cos()) / kw
        })
    }

    /// Exact `∫_{t0}^{t1} f`.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        self.constant * (t1 - t0) + self.periodic_antiderivative(t1) - self.periodic_antiderivative(t0)
    }

    pub fn derivative(&self) -> Self {
        let w = TAU / self.period;
        let harmonics = self
            .harmonics
            .iter()
            .map(|h| {
                let kw = h.k as f64 * w;
                Harmonic { k: h.k, cos_amp: kw * h.sin_amp, sin_amp: -kw * h.cos_amp }
            })
            .collect();
        let mut s = Self { period: self.period, constant: 0.0, harmonics };
        s.normalize();
        s
    }

    /// `t ↦ f(−t)`.
    pub fn time_reversed(&self) -> Self {
        Self {
            period: self.period,
            constant: self.constant,
            harmonics: self
                .harmonics
                .iter()
                .map(|h| Harmonic { k: h.k, cos_amp: h.cos_amp, sin_amp: -h.sin_amp })
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = Self {
            period: self.period,
            constant: self.constant * s,
            harmonics: self
                .harmonics
                .iter()
                .map(|h| Harmonic { k: h.k, cos_amp: h.cos_amp * s, sin_amp: h.sin_amp * s })
                .collect(),
        };
        out.normalize();
        out
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self, SeriesError> {
        if !same_period(self.period, other.period) {
            return Err(SeriesError::PeriodMismatch(self.period, other.period));
        }
        let mut out = self.clone();
        out.constant += s * other.constant;
        for h in &other.harmonics {
            out.accumulate(h.k, s * h.cos_amp, s * h.sin_amp);
        }
        out.normalize();
        Ok(out)
    }

    pub fn plus(&self, other: &Self) -> Result<Self, SeriesError> {
        self.add_scaled(other, 1.0)
    }

    pub fn minus(&self, other: &Self) -> Result<Self, SeriesError> {
        self.add_scaled(other, -1.0)
    }

    /// Exact product; the result carries harmonics up to the sum of the
    /// operands' highest indices.
    pub fn product(&self, other: &Self) -> Result<Self, SeriesError> {
        if !same_period(self.period, other.period) {
            return Err(SeriesError::PeriodMismatch(self.period, other.period));
        }
        let mut out = Self { period: self.period, constant: self.constant * other.constant, harmonics: Vec::new() };
        for h in &self.harmonics {
            out.accumulate(h.k, h.cos_amp * other.constant, h.sin_amp * other.constant);
        }
        for h in &other.harmonics {
            out.accumulate(h.k, h.cos_amp * self.constant, h.sin_amp * self.constant);
        }
        for p in &self.harmonics {
            for q in &other.harmonics {
                let (a1, b1, a2, b2) = (p.cos_amp, p.sin_amp, q.cos_amp, q.sin_amp);
                // cos·cos = [cos(k−l) + cos(k+l)]/2, sin·sin = [cos(k−l) − cos(k+l)]/2,
                // sin_k·cos_l = [sin(k+l) + sin(k−l)]/2.
                let sum = p.k + q.k;
                out.accumulate(sum, 0.5 * (a1 * a2 - b1 * b2), 0.5 * (a1 * b2 + b1 * a2));
                let (diff, sign) = if p.k >= q.k { (p.k - q.k, 1.0) } else { (q.k - p.k, -1.0) };
                let cos_part = 0.5 * (a1 * a2 + b1 * b2);
                let sin_part = sign * 0.5 * (b1 * a2 - a1 * b2);
                if diff == 0 {
                    out.constant += cos_part;
                } else {
                    out.accumulate(diff, cos_part, sin_part);
                }
            }
        }
        out.normalize();
        Ok(out)
    }

    /// Least-squares fit of `harmonics` harmonics to samples taken at
    /// `t_i = i·T/N`, `i = 0..N`. For uniform samples and `2·harmonics < N`
    /// the normal equations are diagonal, so the fit is the discrete Fourier
    /// projection.
    pub fn fit_uniform(period: f64, samples: &[f64], harmonics: usize) -> Result<Self, SeriesError> {
        if !(period.is_finite() && period > 0.0) {
            return Err(SeriesError::BadPeriod(period));
        }
        let n = samples.len();
        if n <= 2 * harmonics {
            return Err(SeriesError::TooFewSamples { harmonics, needed: 2 * harmonics + 1, got: n });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite);
        }
        let nf = n as f64;
        let constant = samples.iter().sum::<f64>() / nf;
        let mut hs = Vec::with_capacity(harmonics);
        for k in 1..=harmonics {
            let (mut c, mut s) = (0.0, 0.0);
            for (i, v) in samples.iter().enumerate() {
                // phase k·i/N reduced exactly in integers
                let th = TAU * ((k * i) % n) as f64 / nf;
                c += v * th.cos();
                s += v * th.sin();
            }
            hs.push(Harmonic { k: k as u32, cos_amp: 2.0 * c / nf, sin_amp: 2.0 * s / nf });
        }
        Self::new(period, constant, hs)
    }

    /// Same as [`fit_uniform`](Self::fit_uniform) but also returns the largest
    /// deviation of the fit from the samples.
    pub fn fit_uniform_with_residual(
        period: f64,
        samples: &[f64],
        harmonics: usize,
    ) -> Result<(Self, f64), SeriesError> {
        let s = Self::fit_uniform(period, samples, harmonics)?;
        let n = samples.len() as f64;
        let resid =
            samples.iter().enumerate().map(|(i, v)| (s.value(period * i as f64 / n) - v).abs()).fold(0.0, f64::max);
        Ok((s, resid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sample_series() -> RealFourierSeries {
        RealFourierSeries::new(
            2.5,
            0.7,
            [Harmonic { k: 1, cos_amp: 0.3, sin_amp: -1.1 }, Harmonic { k: 3, cos_amp: -0.2, sin_amp: 0.05 }],
        )
        .unwrap()
    }

    #[test]
    fn sine_quarter_period() {
        let s = RealFourierSeries::sine(3.0, 1, 1.0).unwrap();
        assert!((s.value(0.75) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn periodicity_far_out() {
        let s = sample_series();
        for &t in &[0.0, 0.3, 1.7, -0.9] {
            assert!((s.value(t) - s.value(t + 7.0 * 2.5)).abs() < 1e-13);
        }
    }

    #[test]
    fn integrals() {
        let t = 1.7;
        let s = RealFourierSeries::sine(t, 1, 1.0).unwrap();
        assert!(s.integral(0.0, t).abs() < 1e-15);
        assert!((s.integral(0.0, t / 2.0) - t / PI).abs() < 1e-14);
        let c = RealFourierSeries::constant(t, 2.5).unwrap();
        assert!((c.integral(0.0, t) - 2.5 * t).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let s = sample_series();
        let d = s.derivative();
        for &t in &[0.1, 0.9, 2.2] {
            let h = 1e-5;
            let fd = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
            assert!((fd - d.value(t)).abs() < 1e-8);
            assert!((d.value(t) - s.derivative_value(t)).abs() < 1e-13);
        }
    }

    #[test]
    fn time_reversal() {
        let s = sample_series();
        let r = s.time_reversed();
        for &t in &[0.1, 0.9, 2.2] {
            assert!((r.value(t) - s.value(-t)).abs() < 1e-14);
        }
    }

    #[test]
    fn product_is_pointwise() {
        let p = sample_series();
        let q = RealFourierSeries::new(
            2.5,
            -0.4,
            [Harmonic { k: 2, cos_amp: 0.6, sin_amp: 0.25 }, Harmonic { k: 3, cos_amp: 0.1, sin_amp: -0.3 }],
        )
        .unwrap();
        let pq = p.product(&q).unwrap();
        for i in 0..50 {
            let t = 0.05 * i as f64;
            assert!((pq.value(t) - p.value(t) * q.value(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn fit_recovers_trig_polynomial() {
        let s = sample_series();
        let n = 64;
        let samples: Vec<f64> = (0..n).map(|i| s.value(2.5 * i as f64 / n as f64)).collect();
        let (fit, resid) = RealFourierSeries::fit_uniform_with_residual(2.5, &samples, 8).unwrap();
        assert!(resid < 1e-14);
        for i in 0..40 {
            let t = 0.0625 * i as f64 + 0.01;
            assert!((fit.value(t) - s.value(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn fit_rejects_too_many_harmonics() {
        assert!(RealFourierSeries::fit_uniform(1.0, &[0.0; 8], 4).is_err());
    }

    #[test]
    fn rejects_bad_period() {
        assert_eq!(RealFourierSeries::constant(0.0, 1.0), Err(SeriesError::BadPeriod(0.0)));
        assert!(RealFourierSeries::constant(f64::NAN, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn period_integral_independent_of_start(t0 in -20.0..20.0f64) {
            let s = sample_series();
            let full = s.integral(0.0, 2.5);
            prop_assert!((s.integral(t0, t0 + 2.5) - full).abs() < 1e-12);
            prop_assert!((full - 0.7 * 2.5).abs() < 1e-14);
        }
    }
}
