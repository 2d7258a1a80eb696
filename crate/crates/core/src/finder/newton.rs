//! Newton refinement of fixed points of the Poincaré map and the
//! finite-difference linearisation used for Floquet multipliers.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::bisection::{residual, to_q, to_x};
use crate::integrator::{FlowError, PoincareMap};

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 20;
pub const SINGULAR_COND: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonOutcome {
    pub x: [f64; 4],
    pub residual: f64,
    pub iterations: usize,
    pub singular: bool,
    pub converged: bool,
}

fn image(map: &PoincareMap, x: &[f64; 4]) -> Result<[f64; 4], FlowError> {
    Ok(to_x(map.apply(to_q(*x))?))
}

/// Forward-difference Jacobian of `F(x) = P(x) − x`, given `P(x)`.
fn jacobian_forward(map: &PoincareMap, x: &[f64; 4], px: &[f64; 4]) -> Result<Matrix4<f64>, FlowError> {
    let mut j = Matrix4::zeros();
    for col in 0..4 {
        let h = 1e-6 * (1.0 + x[col].abs());
        let mut xp = *x;
        xp[col] += h;
        let pp = image(map, &xp)?;
        for row in 0..4 {
            let delta = if row == col { 1.0 } else { 0.0 };
            j[(row, col)] = (pp[row] - px[row]) / h - delta;
        }
    }
    Ok(j)
}

fn condition_number(m: &Matrix4<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Damped Newton on `P(x) − x` starting from `x0` (signed components).
pub fn newton_polish(map: &PoincareMap, x0: [f64; 4]) -> Result<NewtonOutcome, FlowError> {
    let mut x = x0;
    let mut px = image(map, &x)?;
    let mut r = residual(&x, &px);
    let mut out = NewtonOutcome { x, residual: r, iterations: 0, singular: false, converged: r < NEWTON_TOL };
    while !out.converged && out.iterations < NEWTON_MAX_ITER {
        let j = jacobian_forward(map, &x, &px)?;
        if condition_number(&j) > SINGULAR_COND {
            out.singular = true;
            break;
        }
        let f = Vector4::from_fn(|i, _| px[i] - x[i]);
        let Some(dx) = j.lu().solve(&(-f)) else {
            out.singular = true;
            break;
        };
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..10 {
            let trial: [f64; 4] = std::array::from_fn(|i| x[i] + t * dx[i]);
            if let Ok(pt) = image(map, &trial) {
                let rt = residual(&trial, &pt);
                if rt < r {
                    x = trial;
                    px = pt;
                    r = rt;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        out.iterations += 1;
        out.x = x;
        out.residual = r;
        out.converged = r < NEWTON_TOL;
        if !improved {
            break;
        }
    }
    Ok(out)
}

/// Central-difference Jacobian of `P` at `x` in raw quaternion coordinates.
pub fn poincare_jacobian(map: &PoincareMap, x: &[f64; 4]) -> Result<Matrix4<f64>, FlowError> {
    let q = to_q(*x).to_array();
    let mut j = Matrix4::zeros();
    for col in 0..4 {
        let h = 1e-5 * (1.0 + q[col].abs());
        let mut plus = q;
        let mut minus = q;
        plus[col] += h;
        minus[col] -= h;
        let pp = map.apply(crate::Quaternion::from_array(plus))?.to_array();
        let pm = map.apply(crate::Quaternion::from_array(minus))?.to_array();
        for row in 0..4 {
            j[(row, col)] = (pp[row] - pm[row]) / (2.0 * h);
        }
    }
    Ok(j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    AsymptoticallyStable,
    Marginal,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetData {
    /// `(re, im)` of each multiplier, sorted by decreasing modulus.
    pub multipliers: Vec<[f64; 2]>,
    pub max_modulus: f64,
    pub stability: Stability,
}

pub fn floquet(map: &PoincareMap, x: &[f64; 4]) -> Result<FloquetData, FlowError> {
    let j = poincare_jacobian(map, x)?;
    let mut eig: Vec<[f64; 2]> = j.complex_eigenvalues().iter().map(|c| [c.re, c.im]).collect();
    let modulus = |v: &[f64; 2]| v[0].hypot(v[1]);
    eig.sort_by(|a, b| modulus(b).total_cmp(&modulus(a)).then(b[0].total_cmp(&a[0])).then(b[1].total_cmp(&a[1])));
    let max_modulus = eig.iter().map(modulus).fold(0.0, f64::max);
    let stability = if max_modulus < 1.0 - 1e-6 {
        Stability::AsymptoticallyStable
    } else if max_modulus <= 1.0 + 1e-6 {
        Stability::Marginal
    } else {
        Stability::Unstable
    };
    Ok(FloquetData { multipliers: eig, max_modulus, stability })
}
