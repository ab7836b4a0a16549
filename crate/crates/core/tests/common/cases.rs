//! Gradient-check cases: each builds a small random instance of one op
//! from `seed` and returns the worst relative error between its backward
//! pass and central differences.

use mtl_embed::affect::AffectLabel;
use mtl_embed::neural::tensor::{dot, softmax_backward};
use mtl_embed::neural::{
    label_cross_entropy_batch, seq_cross_entropy, Attention, BiGruStack, Decoder, GruCell,
    LayerFinal, LstmCell, Mlp, ParamSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

pub const SEEDS: u64 = 10;

pub fn gru_cell(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, d) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
    let mut ps = ParamSet::new();
    let cell = GruCell::new(&mut ps, "g", m, d, &mut rng);
    let mut x = rand_vec(&mut rng, m);
    let mut h = rand_vec(&mut rng, d);
    let c = rand_vec(&mut rng, d);

    let (_, cache) = cell.forward(&ps, &x, &h).unwrap();
    let mut grads = ps.zeros_like();
    let (dx, dh) = cell.backward(&ps, &mut grads, &cache, &c);

    let worst = check_params(&mut ps, &cell.params(), &grads, |p| {
        dot(&c, &cell.forward(p, &x, &h).unwrap().0)
    });
    let hx = h.clone();
    let wx = check_vec(&mut x, &dx, |xv| dot(&c, &cell.forward(&ps, xv, &hx).unwrap().0));
    let xh = x.clone();
    let wh = check_vec(&mut h, &dh, |hv| dot(&c, &cell.forward(&ps, &xh, hv).unwrap().0));
    worst.max(wx).max(wh)
}

pub fn lstm_cell(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
    let (m, d) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
    let mut ps = ParamSet::new();
    let cell = LstmCell::new(&mut ps, "l", m, d, &mut rng);
    let mut x = rand_vec(&mut rng, m);
    let mut h = rand_vec(&mut rng, d);
    let mut c = rand_vec(&mut rng, d);
    let (ch, cc) = (rand_vec(&mut rng, d), rand_vec(&mut rng, d));
    let objective = |p: &ParamSet, x: &[f64], h: &[f64], c: &[f64]| {
        let (h2, c2, _) = cell.forward(p, x, h, c).unwrap();
        dot(&ch, &h2) + dot(&cc, &c2)
    };

    let (_, _, cache) = cell.forward(&ps, &x, &h, &c).unwrap();
    let mut grads = ps.zeros_like();
    let (dx, dh, dc) = cell.backward(&ps, &mut grads, &cache, &ch, &cc);

    let worst = check_params(&mut ps, &cell.params(), &grads, |p| objective(p, &x, &h, &c));
    let (h0, c0) = (h.clone(), c.clone());
    let wx = check_vec(&mut x, &dx, |v| objective(&ps, v, &h0, &c0));
    let x0 = x.clone();
    let wh = check_vec(&mut h, &dh, |v| objective(&ps, &x0, v, &c0));
    let wc = check_vec(&mut c, &dc, |v| objective(&ps, &x0, &h0, v));
    worst.max(wx).max(wh).max(wc)
}

pub fn bi_gru_stack(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
    let m = rng.gen_range(1..=6);
    let d = rng.gen_range(1..=4);
    let layers = rng.gen_range(1..=3);
    let steps = rng.gen_range(1..=5);
    let mut ps = ParamSet::new();
    let stack = BiGruStack::new(&mut ps, "enc", m, d, layers, &mut rng);
    let mut seq = rand_seq(&mut rng, steps, m);
    let c_top = rand_seq(&mut rng, steps, 2 * d);
    let c_fin: Vec<LayerFinal> = (0..layers)
        .map(|_| LayerFinal {
            fwd: rand_vec(&mut rng, d),
            bwd: rand_vec(&mut rng, d),
        })
        .collect();
    let objective = |p: &ParamSet, s: &[Vec<f64>]| {
        let out = stack.forward(p, s).unwrap();
        let top: f64 = out.top().iter().zip(&c_top).map(|(o, c)| dot(o, c)).sum();
        let fin: f64 = out
            .finals
            .iter()
            .zip(&c_fin)
            .map(|(f, c)| dot(&f.fwd, &c.fwd) + dot(&f.bwd, &c.bwd))
            .sum();
        top + fin
    };

    let out = stack.forward(&ps, &seq).unwrap();
    let mut grads = ps.zeros_like();
    let d_seq = stack.backward(&ps, &mut grads, &out, &c_top, &c_fin);

    let worst = check_params(&mut ps, &stack.params(), &grads, |p| objective(p, &seq));
    let ws = check_seq(&mut seq, &d_seq, |s| objective(&ps, s));
    worst.max(ws)
}

pub fn attention(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
    let q = rng.gen_range(1..=8);
    let k = rng.gen_range(1..=8);
    let steps = rng.gen_range(1..=6);
    let mut ps = ParamSet::new();
    let attn = Attention::new(&mut ps, "a", q, k, &mut rng);
    let mut state = rand_vec(&mut rng, q);
    let mut enc = rand_seq(&mut rng, steps, k);
    let c = rand_vec(&mut rng, k);
    let objective =
        |p: &ParamSet, s: &[f64], e: &[Vec<f64>]| dot(&c, &attn.forward(p, s, e).unwrap().0);

    let (_, cache) = attn.forward(&ps, &state, &enc).unwrap();
    let mut grads = ps.zeros_like();
    let mut d_enc = vec![vec![0.0; k]; steps];
    let d_state = attn.backward(&ps, &mut grads, &cache, &enc, &c, &mut d_enc);

    let worst = check_params(&mut ps, &[attn.proj], &grads, |p| objective(p, &state, &enc));
    let e0 = enc.clone();
    let wq = check_vec(&mut state, &d_state, |s| objective(&ps, s, &e0));
    let s0 = state.clone();
    let we = check_seq(&mut enc, &d_enc, |e| objective(&ps, &s0, e));
    worst.max(wq).max(we)
}

pub fn decoder_end_to_end(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
    let (vocab, d, steps, layers, emb) = (12, 4, 3, 2, 5);
    let mut ps = ParamSet::new();
    let dec = Decoder::new(&mut ps, "dec", emb, d, layers, vocab, &mut rng);
    let mut inputs = rand_seq(&mut rng, steps, emb);
    let mut enc_top = rand_seq(&mut rng, 4, 2 * d);
    let finals: Vec<LayerFinal> = (0..layers)
        .map(|_| LayerFinal {
            fwd: rand_vec(&mut rng, d),
            bwd: rand_vec(&mut rng, d),
        })
        .collect();
    let targets: Vec<u32> = (0..steps).map(|_| rng.gen_range(0..vocab as u32)).collect();
    let mask = vec![true; steps];
    let objective = |p: &ParamSet, x: &[Vec<f64>], f: &[LayerFinal], e: &[Vec<f64>]| {
        seq_cross_entropy(&dec.forward(p, x, f, e).unwrap().logits, &targets, &mask).0
    };

    let out = dec.forward(&ps, &inputs, &finals, &enc_top).unwrap();
    let (_, d_logits) = seq_cross_entropy(&out.logits, &targets, &mask);
    let mut grads = ps.zeros_like();
    let dg = dec.backward(&ps, &mut grads, &out, &enc_top, &d_logits);

    let worst = check_params(&mut ps, &dec.params(), &grads, |p| {
        objective(p, &inputs, &finals, &enc_top)
    });
    let e0 = enc_top.clone();
    let wi = check_seq(&mut inputs, &dg.inputs, |x| objective(&ps, x, &finals, &e0));
    let i0 = inputs.clone();
    let we = check_seq(&mut enc_top, &dg.encoder_top, |e| objective(&ps, &i0, &finals, e));
    let mut fin_flat: Vec<Vec<f64>> = finals
        .iter()
        .flat_map(|f| [f.fwd.clone(), f.bwd.clone()])
        .collect();
    let d_fin_flat: Vec<Vec<f64>> = dg
        .encoder_finals
        .iter()
        .flat_map(|f| [f.fwd.clone(), f.bwd.clone()])
        .collect();
    let wf = check_seq(&mut fin_flat, &d_fin_flat, |ff| {
        let f: Vec<LayerFinal> = ff
            .chunks(2)
            .map(|c| LayerFinal {
                fwd: c[0].clone(),
                bwd: c[1].clone(),
            })
            .collect();
        objective(&ps, &inputs, &f, &enc_top)
    });
    worst.max(wi).max(we).max(wf)
}

pub fn mlp_head(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
    let input = rng.gen_range(1..=8);
    let hidden: Vec<usize> = (0..4).map(|_| rng.gen_range(2..=8)).collect();
    let mut ps = ParamSet::new();
    let mlp = Mlp::new(&mut ps, "m", input, &hidden, 2, &mut rng);
    // zero biases can put a pre-activation exactly on the ReLU kink
    for l in &mlp.layers {
        let b = rand_vec(&mut rng, l.output);
        ps.get_mut(l.b).data_mut().copy_from_slice(&b);
    }
    let mut x = rand_vec(&mut rng, input);
    let c = rand_vec(&mut rng, 2);
    let objective = |p: &ParamSet, x: &[f64]| dot(&c, &mlp.forward(p, x).unwrap().probs);

    let out = mlp.forward(&ps, &x).unwrap();
    let d_logits = softmax_backward(&out.probs, &c);
    let mut grads = ps.zeros_like();
    let dx = mlp.backward(&ps, &mut grads, &out, &d_logits);

    let worst = check_params(&mut ps, &mlp.params(), &grads, |p| objective(p, &x));
    let wx = check_vec(&mut x, &dx, |v| objective(&ps, v));
    worst.max(wx)
}

pub fn sequence_loss(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
    let vocab = rng.gen_range(2..=20);
    let steps = rng.gen_range(1..=6);
    let mut logits = rand_seq(&mut rng, steps, vocab);
    let targets: Vec<u32> = (0..steps).map(|_| rng.gen_range(0..vocab as u32)).collect();
    let mut mask: Vec<bool> = (0..steps).map(|_| rng.gen_bool(0.8)).collect();
    mask[0] = true;
    let (_, g) = seq_cross_entropy(&logits, &targets, &mask);
    check_seq(&mut logits, &g, |l| seq_cross_entropy(l, &targets, &mask).0)
}

pub fn label_loss(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(700 + seed);
    let n = rng.gen_range(1..=6);
    let mut logits = rand_seq(&mut rng, n, 2);
    let mut labels: Vec<AffectLabel> = (0..n)
        .map(|_| match rng.gen_range(0..3) {
            0 => AffectLabel::Positive,
            1 => AffectLabel::Negative,
            _ => AffectLabel::Unlabeled,
        })
        .collect();
    labels[0] = AffectLabel::Positive;
    let probs = |l: &[Vec<f64>]| -> Vec<Vec<f64>> {
        l.iter().map(|v| mtl_embed::neural::tensor::softmax(v)).collect()
    };
    let (_, g) = label_cross_entropy_batch(&probs(&logits), &labels);
    check_seq(&mut logits, &g, |l| label_cross_entropy_batch(&probs(l), &labels).0)
}

/// Every case, by name.
pub const ALL: [(&str, fn(u64) -> f64); 8] = [
    ("gru_cell", gru_cell),
    ("lstm_cell", lstm_cell),
    ("bi_gru_stack", bi_gru_stack),
    ("attention", attention),
    ("decoder_end_to_end", decoder_end_to_end),
    ("mlp_head", mlp_head),
    ("sequence_loss", sequence_loss),
    ("label_loss", label_loss),
];
