#![allow(dead_code)]

use std::path::{Path, PathBuf};

use qriccati::integrator::{integrate_ivp, IntegrationSettings, Trajectory};
use qriccati::transforms::{apply_basic_transform, map_value, TransformStep};
use qriccati::{Harmonic, Quaternion, QuaternionCoefficient, RealFourierSeries, RiccatiSystem};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn q(w: f64, x: f64, y: f64, z: f64) -> Quaternion {
    Quaternion::new(w, x, y, z)
}

pub fn tanh_system() -> RiccatiSystem {
    RiccatiSystem::constant(1.0, Quaternion::ONE, Quaternion::ZERO, Quaternion::ZERO, Quaternion::real(-1.0)).unwrap()
}

/// `a = 1 + i`, `d = −0.8 + i(0.5 + 0.3 sin 2πt) + 0.2 j`, `T = 1`.
pub fn quaternionic_system() -> RiccatiSystem {
    let t = 1.0;
    let c = |v| RealFourierSeries::constant(t, v).unwrap();
    let d1 = RealFourierSeries::new(t, 0.5, [Harmonic { k: 1, cos_amp: 0.0, sin_amp: 0.3 }]).unwrap();
    let a = QuaternionCoefficient::constant(t, q(1.0, 1.0, 0.0, 0.0)).unwrap();
    let d = QuaternionCoefficient::new([c(-0.8), d1, c(0.2), c(0.0)]).unwrap();
    let zero = QuaternionCoefficient::zero(t).unwrap();
    RiccatiSystem::new(a, zero.clone(), zero, d).unwrap()
}

fn random_series(rng: &mut StdRng, period: f64, scale: f64) -> RealFourierSeries {
    let hs: Vec<Harmonic> = (1..=2)
        .map(|k| Harmonic { k, cos_amp: rng.gen_range(-0.3..0.3) * scale, sin_amp: rng.gen_range(-0.3..0.3) * scale })
        .collect();
    RealFourierSeries::new(period, rng.gen_range(-0.5..0.5) * scale, hs).unwrap()
}

fn random_coefficient(rng: &mut StdRng, period: f64, scale: f64) -> QuaternionCoefficient {
    QuaternionCoefficient::new(std::array::from_fn(|_| random_series(rng, period, scale))).unwrap()
}

/// Small smooth coefficients, so solutions from small starts stay bounded
/// over a few periods.
pub fn random_system(seed: u64) -> RiccatiSystem {
    let mut rng = StdRng::seed_from_u64(seed);
    let period = rng.gen_range(0.5..2.0);
    let a = random_coefficient(&mut rng, period, 0.6);
    let b = random_coefficient(&mut rng, period, 1.0);
    let c = random_coefficient(&mut rng, period, 1.0);
    let d = random_coefficient(&mut rng, period, 1.0);
    RiccatiSystem::new(a, b, c, d).unwrap()
}

pub fn random_quaternion(rng: &mut StdRng, scale: f64) -> Quaternion {
    Quaternion::from_array(std::array::from_fn(|_| rng.gen_range(-scale..scale)))
}

pub fn random_unit(rng: &mut StdRng) -> Quaternion {
    let u = random_quaternion(rng, 1.0);
    u / u.norm()
}

/// `q' = −(q a q + b q + q c + d)` written out with scalar and vector parts,
/// without the Hamilton product.
pub fn rhs_oracle(sys: &RiccatiSystem, t: f64, q: Quaternion) -> Quaternion {
    type V = [f64; 3];
    let dot = |x: V, y: V| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let cross = |x: V, y: V| [x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]];
    let split = |p: Quaternion| (p.w, [p.x, p.y, p.z]);

    let v = sys.values_at(t);
    let (w, u) = split(q);
    let (alpha, av) = split(v.a);
    let (beta, bv) = split(v.b);
    let (gamma, cv) = split(v.c);
    let (delta, dv) = split(v.d);

    let uu = dot(u, u);
    let au = dot(av, u);
    // q a q
    let s1 = alpha * (w * w - uu) - 2.0 * w * au;
    let v1: V = std::array::from_fn(|n| 2.0 * w * alpha * u[n] - 2.0 * au * u[n] + (w * w + uu) * av[n]);
    // b q + q c
    let bc: V = std::array::from_fn(|n| bv[n] + cv[n]);
    let bmc: V = std::array::from_fn(|n| bv[n] - cv[n]);
    let s2 = (beta + gamma) * w - dot(u, bc);
    let rot = cross(bmc, u);
    let v2: V = std::array::from_fn(|n| (beta + gamma) * u[n] + w * bc[n] + rot[n]);

    -Quaternion::new(s1 + s2 + delta, v1[0] + v2[0] + dv[0], v1[1] + v2[1] + dv[1], v1[2] + v2[2] + dv[2])
}

pub fn settings() -> IntegrationSettings {
    IntegrationSettings::default()
}

fn run(sys: &RiccatiSystem, q0: Quaternion, t0: f64, t1: f64) -> Trajectory {
    let tr = integrate_ivp(sys, q0, t0, t1, &settings()).unwrap();
    assert!(tr.is_completed(), "trajectory did not complete: {:?}", tr.status());
    tr
}

/// Largest deviation over `[0, span]` between the transformed system's
/// solution and the image of the original solution under `step`.
pub fn consistency_deviation(sys: &RiccatiSystem, step: &TransformStep, q0: Quaternion, span: f64) -> f64 {
    let out = apply_basic_transform(sys, step).unwrap();
    if *step == TransformStep::TimeReverse {
        // r(t) = −q(−t): run the original over [−span, 0]
        let orig = run(sys, q0, -span, 0.0);
        let end = orig.last().q;
        let rev = run(&out, -end, 0.0, span);
        let o: Vec<_> = orig.grid_samples().collect();
        let r: Vec<_> = rev.grid_samples().collect();
        assert_eq!(o.len(), r.len());
        return r
            .iter()
            .zip(o.iter().rev())
            .map(|(rs, os)| {
                let (t, mapped) = map_value(step, os.t, os.q);
                assert!((t - rs.t).abs() < 1e-9);
                mapped.max_abs_diff(rs.q)
            })
            .fold(0.0, f64::max);
    }
    let orig = run(sys, q0, 0.0, span);
    let (_, r0) = map_value(step, 0.0, q0);
    let tr = run(&out, r0, 0.0, span);
    orig.grid_samples()
        .zip(tr.grid_samples())
        .map(|(os, rs)| {
            assert_eq!(os.t, rs.t);
            map_value(step, os.t, os.q).1.max_abs_diff(rs.q)
        })
        .fold(0.0, f64::max)
}

pub fn lambda_sample(period: f64) -> QuaternionCoefficient {
    let zero = RealFourierSeries::zero(period).unwrap();
    QuaternionCoefficient::new([
        RealFourierSeries::constant(period, 2.0).unwrap(),
        RealFourierSeries::sine(period, 1, 0.5).unwrap(),
        zero.clone(),
        zero,
    ])
    .unwrap()
}
