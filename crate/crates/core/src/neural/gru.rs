use rand_chacha::ChaCha8Rng;

use super::tensor::{matvec_acc, matvec_t_acc, outer_acc, sigmoid};
use super::{Grads, NeuralError, ParamId, ParamSet};

/// GRU cell parameters for input size `m` and hidden size `d`.
///
/// ```text
/// z  = σ(W_z x + U_z h + b_z)
/// r  = σ(W_r x + U_r h + b_r)
/// ĥ  = tanh(W_h x + U_h (r ∘ h) + b_h)
/// h' = (1 − z) ∘ h + z ∘ ĥ
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub w_z: ParamId,
    pub u_z: ParamId,
    pub b_z: ParamId,
    pub w_r: ParamId,
    pub u_r: ParamId,
    pub b_r: ParamId,
    pub w_h: ParamId,
    pub u_h: ParamId,
    pub b_h: ParamId,
    pub input: usize,
    pub hidden: usize,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct GruCache {
    x: Vec<f64>,
    h: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    rh: Vec<f64>,
    cand: Vec<f64>,
}

impl GruCell {
    pub fn new(ps: &mut ParamSet, name: &str, input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let fan = input + hidden;
        let mut w = |suffix: &str, cols: usize| {
            ps.add_uniform(format!("{name}.{suffix}"), &[hidden, cols], fan, rng)
        };
        let (w_z, u_z) = (w("w_z", input), w("u_z", hidden));
        let (w_r, u_r) = (w("w_r", input), w("u_r", hidden));
        let (w_h, u_h) = (w("w_h", input), w("u_h", hidden));
        let b_z = ps.add_uniform(format!("{name}.b_z"), &[hidden], fan, rng);
        let b_r = ps.add_uniform(format!("{name}.b_r"), &[hidden], fan, rng);
        let b_h = ps.add_uniform(format!("{name}.b_h"), &[hidden], fan, rng);
        GruCell {
            w_z,
            u_z,
            b_z,
            w_r,
            u_r,
            b_r,
            w_h,
            u_h,
            b_h,
            input,
            hidden,
        }
    }

    pub fn params(&self) -> [ParamId; 9] {
        [
            self.w_z, self.u_z, self.b_z, self.w_r, self.u_r, self.b_r, self.w_h, self.u_h,
            self.b_h,
        ]
    }

    pub fn forward(&self, ps: &ParamSet, x: &[f64], h: &[f64]) -> Result<(Vec<f64>, GruCache), NeuralError> {
        if x.len() != self.input || h.len() != self.hidden {
            return Err(NeuralError::Shape(format!(
                "gru cell expects input {} / hidden {}, got {} / {}",
                self.input,
                self.hidden,
                x.len(),
                h.len()
            )));
        }
        let gate = |w, u, b, hv: &[f64]| {
            let mut a = ps.get(b).data().to_vec();
            matvec_acc(ps.get(w), x, &mut a);
            matvec_acc(ps.get(u), hv, &mut a);
            a
        };
        let z: Vec<f64> = gate(self.w_z, self.u_z, self.b_z, h).into_iter().map(sigmoid).collect();
        let r: Vec<f64> = gate(self.w_r, self.u_r, self.b_r, h).into_iter().map(sigmoid).collect();
        let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
        let cand: Vec<f64> = gate(self.w_h, self.u_h, self.b_h, &rh)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let h_new: Vec<f64> = (0..self.hidden)
            .map(|i| (1.0 - z[i]) * h[i] + z[i] * cand[i])
            .collect();
        if h_new.iter().any(|v| !v.is_finite()) {
            return Err(NeuralError::NonFinite("gru cell output".into()));
        }
        Ok((
            h_new,
            GruCache {
                x: x.to_vec(),
                h: h.to_vec(),
                z,
                r,
                rh,
                cand,
            },
        ))
    }

    /// Given `dL/dh'`, accumulates parameter gradients and returns
    /// `(dL/dx, dL/dh)`.
    pub fn backward(
        &self,
        ps: &ParamSet,
        grads: &mut Grads,
        cache: &GruCache,
        dh_new: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let d = self.hidden;
        let mut dx = vec![0.0; self.input];
        let mut dh: Vec<f64> = (0..d).map(|i| dh_new[i] * (1.0 - cache.z[i])).collect();

        let da_h: Vec<f64> = (0..d)
            .map(|i| dh_new[i] * cache.z[i] * (1.0 - cache.cand[i] * cache.cand[i]))
            .collect();
        let da_z: Vec<f64> = (0..d)
            .map(|i| dh_new[i] * (cache.cand[i] - cache.h[i]) * cache.z[i] * (1.0 - cache.z[i]))
            .collect();

        outer_acc(grads.get_mut(self.w_h), &da_h, &cache.x);
        outer_acc(grads.get_mut(self.u_h), &da_h, &cache.rh);
        super::tensor::add_acc(grads.get_mut(self.b_h).data_mut(), &da_h);
        matvec_t_acc(ps.get(self.w_h), &da_h, &mut dx);
        let mut drh = vec![0.0; d];
        matvec_t_acc(ps.get(self.u_h), &da_h, &mut drh);
        let da_r: Vec<f64> = (0..d)
            .map(|i| drh[i] * cache.h[i] * cache.r[i] * (1.0 - cache.r[i]))
            .collect();
        for i in 0..d {
            dh[i] += drh[i] * cache.r[i];
        }

        for (w, u, b, da) in [
            (self.w_z, self.u_z, self.b_z, &da_z),
            (self.w_r, self.u_r, self.b_r, &da_r),
        ] {
            outer_acc(grads.get_mut(w), da, &cache.x);
            outer_acc(grads.get_mut(u), da, &cache.h);
            super::tensor::add_acc(grads.get_mut(b).data_mut(), da);
            matvec_t_acc(ps.get(w), da, &mut dx);
            matvec_t_acc(ps.get(u), da, &mut dh);
        }
        (dx, dh)
    }
}
