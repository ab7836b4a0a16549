//! Central finite-difference oracle, independent of the backward passes
//! it checks: it only ever calls forward computations.
#![allow(dead_code)]

pub mod cases;
pub mod oracles;

use mtl_embed::neural::{Grads, ParamId, ParamSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const FD_EPS: f64 = 1e-4;
pub const MAX_REL_ERR: f64 = 1e-4;
/// Denominator floor so that gradients which are zero up to round-off do
/// not turn absolute noise into a huge relative error.
pub const REL_FLOOR: f64 = 1e-6;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Largest relative error between `analytic` and central differences of
/// `f` over every entry of the listed parameters.
pub fn check_params(
    ps: &mut ParamSet,
    ids: &[ParamId],
    analytic: &Grads,
    f: impl Fn(&ParamSet) -> f64,
) -> f64 {
    let mut worst = 0.0f64;
    for &id in ids {
        for j in 0..ps.get(id).len() {
            let orig = ps.get(id).data()[j];
            ps.get_mut(id).data_mut()[j] = orig + FD_EPS;
            let up = f(ps);
            ps.get_mut(id).data_mut()[j] = orig - FD_EPS;
            let down = f(ps);
            ps.get_mut(id).data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * FD_EPS);
            worst = worst.max(rel_err(analytic.get(id).data()[j], numeric));
        }
    }
    worst
}

/// Same check for a plain input vector.
pub fn check_vec(x: &mut [f64], analytic: &[f64], f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..x.len() {
        let orig = x[j];
        x[j] = orig + FD_EPS;
        let up = f(x);
        x[j] = orig - FD_EPS;
        let down = f(x);
        x[j] = orig;
        worst = worst.max(rel_err(analytic[j], (up - down) / (2.0 * FD_EPS)));
    }
    worst
}

/// Checks a sequence of vectors by flattening it.
pub fn check_seq(xs: &mut [Vec<f64>], analytic: &[Vec<f64>], f: impl Fn(&[Vec<f64>]) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for t in 0..xs.len() {
        for j in 0..xs[t].len() {
            let orig = xs[t][j];
            xs[t][j] = orig + FD_EPS;
            let up = f(xs);
            xs[t][j] = orig - FD_EPS;
            let down = f(xs);
            xs[t][j] = orig;
            worst = worst.max(rel_err(analytic[t][j], (up - down) / (2.0 * FD_EPS)));
        }
    }
    worst
}

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn rand_seq(rng: &mut ChaCha8Rng, steps: usize, n: usize) -> Vec<Vec<f64>> {
    (0..steps).map(|_| rand_vec(rng, n)).collect()
}
