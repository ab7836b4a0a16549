use rand_chacha::ChaCha8Rng;

use super::tensor::{matvec_acc, matvec_t_acc, outer_acc, sigmoid};
use super::{Grads, NeuralError, ParamId, ParamSet};

/// LSTM cell with separate input/forget/output/candidate weights. The forget
/// bias starts at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    /// `(W, U, b)` for the input, forget, output and candidate gates.
    pub gates: [(ParamId, ParamId, ParamId); 4],
    pub input: usize,
    pub hidden: usize,
}

const I: usize = 0;
const F: usize = 1;
const O: usize = 2;
const G: usize = 3;

#[derive(Debug, Clone)]
pub struct LstmCache {
    x: Vec<f64>,
    h: Vec<f64>,
    c: Vec<f64>,
    acts: [Vec<f64>; 4],
    tanh_c: Vec<f64>,
}

impl LstmCell {
    pub fn new(ps: &mut ParamSet, name: &str, input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let fan = input + hidden;
        let gates = ["i", "f", "o", "g"].map(|g| {
            let w = ps.add_uniform(format!("{name}.w_{g}"), &[hidden, input], fan, rng);
            let u = ps.add_uniform(format!("{name}.u_{g}"), &[hidden, hidden], fan, rng);
            let b = ps.add(format!("{name}.b_{g}"), super::Tensor::zeros(&[hidden]));
            (w, u, b)
        });
        ps.get_mut(gates[F].2).fill(1.0);
        LstmCell {
            gates,
            input,
            hidden,
        }
    }

    pub fn params(&self) -> Vec<ParamId> {
        self.gates.iter().flat_map(|&(w, u, b)| [w, u, b]).collect()
    }

    pub fn forward(
        &self,
        ps: &ParamSet,
        x: &[f64],
        h: &[f64],
        c: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>, LstmCache), NeuralError> {
        if x.len() != self.input || h.len() != self.hidden || c.len() != self.hidden {
            return Err(NeuralError::Shape(format!(
                "lstm cell expects input {} / hidden {}, got {} / {} / {}",
                self.input,
                self.hidden,
                x.len(),
                h.len(),
                c.len()
            )));
        }
        let acts = [I, F, O, G].map(|k| {
            let (w, u, b) = self.gates[k];
            let mut a = ps.get(b).data().to_vec();
            matvec_acc(ps.get(w), x, &mut a);
            matvec_acc(ps.get(u), h, &mut a);
            if k == G {
                a.into_iter().map(f64::tanh).collect::<Vec<_>>()
            } else {
                a.into_iter().map(sigmoid).collect()
            }
        });
        let c_new: Vec<f64> = (0..self.hidden)
            .map(|j| acts[F][j] * c[j] + acts[I][j] * acts[G][j])
            .collect();
        let tanh_c: Vec<f64> = c_new.iter().map(|v| v.tanh()).collect();
        let h_new: Vec<f64> = (0..self.hidden).map(|j| acts[O][j] * tanh_c[j]).collect();
        if c_new.iter().chain(&h_new).any(|v| !v.is_finite()) {
            return Err(NeuralError::NonFinite("lstm cell output".into()));
        }
        Ok((
            h_new,
            c_new,
            LstmCache {
                x: x.to_vec(),
                h: h.to_vec(),
                c: c.to_vec(),
                acts,
                tanh_c,
            },
        ))
    }

    /// Given `dL/dh'` and `dL/dc'`, returns `(dL/dx, dL/dh, dL/dc)`.
    pub fn backward(
        &self,
        ps: &ParamSet,
        grads: &mut Grads,
        cache: &LstmCache,
        dh_new: &[f64],
        dc_new: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.hidden;
        let a = &cache.acts;
        let dc: Vec<f64> = (0..n)
            .map(|j| dc_new[j] + dh_new[j] * a[O][j] * (1.0 - cache.tanh_c[j] * cache.tanh_c[j]))
            .collect();
        let d_pre: [Vec<f64>; 4] = [
            (0..n).map(|j| dc[j] * a[G][j] * a[I][j] * (1.0 - a[I][j])).collect(),
            (0..n).map(|j| dc[j] * cache.c[j] * a[F][j] * (1.0 - a[F][j])).collect(),
            (0..n)
                .map(|j| dh_new[j] * cache.tanh_c[j] * a[O][j] * (1.0 - a[O][j]))
                .collect(),
            (0..n).map(|j| dc[j] * a[I][j] * (1.0 - a[G][j] * a[G][j])).collect(),
        ];
        let mut dx = vec![0.0; self.input];
        let mut dh = vec![0.0; n];
        for (k, da) in d_pre.iter().enumerate() {
            let (w, u, b) = self.gates[k];
            outer_acc(grads.get_mut(w), da, &cache.x);
            outer_acc(grads.get_mut(u), da, &cache.h);
            super::tensor::add_acc(grads.get_mut(b).data_mut(), da);
            matvec_t_acc(ps.get(w), da, &mut dx);
            matvec_t_acc(ps.get(u), da, &mut dh);
        }
        let dc_prev = (0..n).map(|j| dc[j] * a[F][j]).collect();
        (dx, dh, dc_prev)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn forget_bias_starts_at_one() {
        let mut ps = ParamSet::new();
        let cell = LstmCell::new(&mut ps, "l", 2, 3, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(ps.get(cell.gates[F].2).data().iter().all(|&b| b == 1.0));
        assert!(ps.get(cell.gates[I].2).data().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn zero_inputs_give_zero_state() {
        let mut ps = ParamSet::new();
        let cell = LstmCell::new(&mut ps, "l", 2, 3, &mut ChaCha8Rng::seed_from_u64(0));
        let (h, c, _) = cell.forward(&ps, &[0.0; 2], &[0.0; 3], &[0.0; 3]).unwrap();
        assert_eq!(h, [0.0; 3]);
        assert_eq!(c, [0.0; 3]);
    }

    #[test]
    fn cell_state_is_linear_in_previous_cell_with_fixed_gates() {
        let mut ps = ParamSet::new();
        let cell = LstmCell::new(&mut ps, "l", 2, 3, &mut ChaCha8Rng::seed_from_u64(4));
        let x = [0.3, -0.2];
        let h = [0.1, 0.0, -0.4];
        let c1 = [0.5, -1.0, 2.0];
        let c2 = [-0.7, 0.2, 0.9];
        let c0 = [0.0; 3];
        let run = |c: &[f64]| cell.forward(&ps, &x, &h, c).unwrap().1;
        let (y1, y2, y0) = (run(&c1), run(&c2), run(&c0));
        let sum: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| a + b).collect();
        let ys = run(&sum);
        for j in 0..3 {
            // c' = f∘c + i∘g, so c'(c1 + c2) = c'(c1) + c'(c2) − c'(0)
            assert!((ys[j] - (y1[j] + y2[j] - y0[j])).abs() < 1e-12);
        }
    }
}
