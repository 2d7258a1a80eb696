//! Signature, corner calibration and coordinatewise nested-interval bisection
//! on the Poincaré map.

use serde::{Deserialize, Serialize};

use super::FinderError;
use crate::integrator::{FlowError, PoincareMap};
use crate::quaternion::{Quaternion, SignedComponents};

/// Largest doubling exponent tried during calibration.
pub const CALIBRATION_CAP_EXP: i32 = 60;

/// Endpoint components at or below this are read as exactly zero.
const ZERO_ENDPOINT: f64 = 1e-14;

pub(crate) fn to_q(x: [f64; 4]) -> Quaternion {
    SignedComponents::from_array(x).to_quaternion()
}

pub(crate) fn to_x(q: Quaternion) -> [f64; 4] {
    SignedComponents::from_quaternion(q).to_array()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    /// `ξ_n ∈ {−1, +1}`; a zero endpoint component maps to `+1`.
    pub xi: [f64; 4],
    /// Components of the zero-start solution at `m₀T`.
    pub endpoint: SignedComponents,
    /// Components whose endpoint is exactly zero; the zero-start solution
    /// stays in the invariant subspace they define.
    pub vanishing: [bool; 4],
}

pub fn initial_signature(map: &PoincareMap) -> Result<Signature, FinderError> {
    let end = map
        .apply(Quaternion::ZERO)
        .map_err(|e| FinderError::CertificationFailure(format!("zero-start solution did not complete: {e}")))?;
    let x = to_x(end);
    Ok(signature_from_endpoint(x))
}

pub fn signature_from_endpoint(x: [f64; 4]) -> Signature {
    Signature {
        xi: x.map(|v| if v < 0.0 { -1.0 } else { 1.0 }),
        endpoint: SignedComponents::from_array(x),
        vanishing: x.map(|v| v.abs() <= ZERO_ENDPOINT),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub lambda: f64,
    pub mu: f64,
    pub corner: SignedComponents,
    /// `sign(V_n(0) − V_n(m₀T))` at the accepted corner (0 where both vanish).
    pub signs: [f64; 4],
    pub attempts: u32,
}

fn corner_for(sig: &Signature, lambda: f64, mu: f64) -> [f64; 4] {
    std::array::from_fn(|n| {
        if sig.vanishing[n] {
            0.0
        } else if n < 2 {
            lambda * sig.xi[n]
        } else {
            mu * sig.xi[n]
        }
    })
}

/// Doubles `λ = μ` from 1 until the corner's image lies on the side
/// prescribed by the signature in every component.
pub fn calibrate_corner(map: &PoincareMap, sig: &Signature) -> Result<Calibration, FinderError> {
    let mut last_signs = [0.0; 4];
    for k in 0..=CALIBRATION_CAP_EXP {
        let lambda = 2f64.powi(k);
        let corner = corner_for(sig, lambda, lambda);
        let image = match map.apply(to_q(corner)) {
            Ok(q) => to_x(q),
            Err(FlowError::Escaped(_)) => continue,
            Err(e) => return Err(FinderError::Flow(e)),
        };
        let mut ok = true;
        for n in 0..4 {
            let diff = corner[n] - image[n];
            let slack = 1e-9 * (1.0 + corner[n].abs());
            if sig.vanishing[n] {
                last_signs[n] = 0.0;
                ok &= diff.abs() <= slack;
            } else {
                last_signs[n] = diff.signum();
                ok &= sig.xi[n] * diff > slack;
            }
        }
        if ok {
            return Ok(Calibration {
                lambda,
                mu: lambda,
                corner: SignedComponents::from_array(corner),
                signs: last_signs,
                attempts: k as u32 + 1,
            });
        }
    }
    Err(FinderError::CalibrationFailed { last_signs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionState {
    pub alpha: [f64; 4],
    pub beta: [f64; 4],
    pub initial_alpha: [f64; 4],
    pub initial_beta: [f64; 4],
    pub iterations: usize,
    pub gamma: [f64; 4],
    pub image: [f64; 4],
    pub residual: f64,
    /// Largest interval width after each iteration, starting with the
    /// initial width.
    pub width_history: Vec<f64>,
}

impl BisectionState {
    pub fn new(corner: [f64; 4]) -> Self {
        let alpha = corner.map(|c| c.min(0.0));
        let beta = corner.map(|c| c.max(0.0));
        Self {
            alpha,
            beta,
            initial_alpha: alpha,
            initial_beta: beta,
            iterations: 0,
            gamma: [0.0; 4],
            image: [0.0; 4],
            residual: f64::INFINITY,
            width_history: vec![max_width(&alpha, &beta)],
        }
    }

    pub fn max_width(&self) -> f64 {
        max_width(&self.alpha, &self.beta)
    }

    pub fn midpoint(&self) -> [f64; 4] {
        std::array::from_fn(|n| 0.5 * (self.alpha[n] + self.beta[n]))
    }

    /// Whether `x` lies in the initial box, with a little slack.
    pub fn in_initial_box(&self, x: &[f64; 4], slack: f64) -> bool {
        (0..4).all(|n| x[n] >= self.initial_alpha[n] - slack && x[n] <= self.initial_beta[n] + slack)
    }

    /// One update from a single trajectory started at the midpoint.
    pub fn step(&mut self, map: &PoincareMap) -> Result<(), FlowError> {
        let gamma = self.midpoint();
        let image = to_x(map.apply(to_q(gamma))?);
        for n in 0..4 {
            if self.beta[n] > self.alpha[n] {
                if gamma[n] < image[n] {
                    self.alpha[n] = gamma[n];
                } else {
                    self.beta[n] = gamma[n];
                }
            }
        }
        self.gamma = gamma;
        self.image = image;
        self.residual = residual(&gamma, &image);
        self.iterations += 1;
        self.width_history.push(self.max_width());
        Ok(())
    }
}

fn max_width(alpha: &[f64; 4], beta: &[f64; 4]) -> f64 {
    (0..4).map(|n| beta[n] - alpha[n]).fold(0.0, f64::max)
}

pub(crate) fn residual(x: &[f64; 4], image: &[f64; 4]) -> f64 {
    (0..4).map(|n| (image[n] - x[n]).powi(2)).sum::<f64>().sqrt()
}

/// Runs the bisection until the box is narrower than `tol`, the midpoint
/// residual is below `tol`, or `max_iter` iterations have been made.
/// `zero_image` is the image of the origin, known from the signature.
pub fn bisection_find(
    map: &PoincareMap,
    corner: [f64; 4],
    zero_image: [f64; 4],
    tol: f64,
    max_iter: usize,
) -> Result<BisectionState, FinderError> {
    let mut state = BisectionState::new(corner);
    let r0 = residual(&[0.0; 4], &zero_image);
    if r0 < tol {
        state.image = zero_image;
        state.residual = r0;
        return Ok(state);
    }
    while state.iterations < max_iter && state.max_width() >= tol {
        if let Err(e) = state.step(map) {
            return Err(FinderError::MidpointEscape {
                midpoint: SignedComponents::from_array(state.midpoint()),
                reason: e.to_string(),
            });
        }
        if state.residual < tol {
            break;
        }
    }
    Ok(state)
}
