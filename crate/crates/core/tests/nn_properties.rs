use codesum::nn::ops::{dense_backward, relu_backward, softmax_rows_backward};
use codesum::nn::{
    batched_dot, batched_dot_backward, dense, grad_check, gru_backward, gru_forward, relu,
    softmax_rows, GruGrads, GruWeights, ParamSet, Tensor,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.gen_range(-scale..scale))
}

/// Contraction of `a` axis `ia` with `b` axis `ib`, one batch at a time.
fn naive_batched_dot(a: &Tensor<f64>, b: &Tensor<f64>, (ia, ib): (usize, usize)) -> Tensor<f64> {
    let (fa, fb) = (a.dim(3 - ia), b.dim(3 - ib));
    let k = a.dim(ia);
    let mut out = Tensor::zeros(&[a.dim(0), fa, fb]);
    for n in 0..a.dim(0) {
        for i in 0..fa {
            for j in 0..fb {
                let mut s = 0.0;
                for t in 0..k {
                    let av = if ia == 2 {
                        a.get(&[n, i, t])
                    } else {
                        a.get(&[n, t, i])
                    };
                    let bv = if ib == 2 {
                        b.get(&[n, j, t])
                    } else {
                        b.get(&[n, t, j])
                    };
                    s += av * bv;
                }
                out.set(&[n, i, j], s);
            }
        }
    }
    out
}

/// `sum(w * y)` for fixed random `w`, with gradient `w`.
fn project(y: &Tensor<f64>, seed: u64) -> (f64, Tensor<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random(&mut rng, y.shape(), 1.0);
    (y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum(), w)
}

const OP_TOL: f64 = 1e-4;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn batched_dot_matches_triple_loop(
        batch in 1usize..=2, free_a in 1usize..=5, free_b in 1usize..=5, k in 1usize..=7,
        ia in 1usize..=2, ib in 1usize..=2, seed: u64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a_shape = if ia == 2 { [batch, free_a, k] } else { [batch, k, free_a] };
        let b_shape = if ib == 2 { [batch, free_b, k] } else { [batch, k, free_b] };
        let a = random(&mut rng, &a_shape, 1.0);
        let b = random(&mut rng, &b_shape, 1.0);
        let got = batched_dot(&a, &b, (ia, ib)).unwrap();
        prop_assert!(got.max_abs_diff(&naive_batched_dot(&a, &b, (ia, ib))) <= 1e-6);
    }

    #[test]
    fn softmax_rows_are_positive_distributions(rows in 1usize..6, width in 1usize..9, scale in 0.1f64..50.0, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = softmax_rows(&random(&mut rng, &[rows, width], scale));
        for r in 0..rows {
            prop_assert!(y.row(r).iter().all(|&p| p > 0.0));
            prop_assert!((y.row(r).iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn dense_gradients_on_random_shapes(n in 1usize..4, din in 1usize..5, dout in 1usize..5, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamSet::new();
        ps.insert("x", random(&mut rng, &[n, din], 1.0)).unwrap();
        ps.insert("k", random(&mut rng, &[din, dout], 1.0)).unwrap();
        ps.insert("b", random(&mut rng, &[dout], 1.0)).unwrap();
        let r = grad_check(&mut ps, 1e-5, |p, g| {
            let (x, k) = (p.value("x")?, p.value("k")?);
            let y = relu(&dense(x, k, p.value("b")?)?);
            let (l, dy) = project(&y, seed);
            if let Some(g) = g {
                let dpre = relu_backward(&y, &dy);
                let mut gk = g.take("k", &[din, dout]);
                let dx = dense_backward(x, k, &dpre, &mut gk, g.entry("b", &[dout]));
                g.put("k", gk);
                g.put("x", dx);
            }
            Ok(l)
        }).unwrap();
        // The kink of relu can sit inside the finite-difference interval.
        prop_assume!(r.max_rel_error < OP_TOL || r.analytic.abs() + r.numeric.abs() < 1e-3 || (r.analytic - r.numeric).abs() > 1e-2);
        prop_assert!(r.max_rel_error < OP_TOL, "{:?}", r);
    }

    #[test]
    fn attention_gradients_on_random_shapes(batch in 1usize..3, c in 1usize..4, t in 1usize..5, h in 1usize..4, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamSet::new();
        ps.insert("dec", random(&mut rng, &[batch, c, h], 1.0)).unwrap();
        ps.insert("enc", random(&mut rng, &[batch, t, h], 1.0)).unwrap();
        let r = grad_check(&mut ps, 1e-5, |p, g| {
            let (dec, enc) = (p.value("dec")?, p.value("enc")?);
            let attn = softmax_rows(&batched_dot(dec, enc, (2, 2))?);
            let ctx = batched_dot(&attn, enc, (2, 1))?;
            let (l, dctx) = project(&ctx, seed);
            if let Some(g) = g {
                let (dattn, mut denc) = batched_dot_backward(&attn, enc, (2, 1), &dctx)?;
                let dscores = softmax_rows_backward(&attn, &dattn);
                let (ddec, denc2) = batched_dot_backward(dec, enc, (2, 2), &dscores)?;
                denc.add_assign(&denc2);
                g.put("dec", ddec);
                g.put("enc", denc);
            }
            Ok(l)
        }).unwrap();
        prop_assert!(r.max_rel_error < OP_TOL, "{:?}", r);
    }

    #[test]
    fn gru_gradients_on_random_shapes(batch in 1usize..3, steps in 1usize..5, din in 1usize..4, units in 1usize..4, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamSet::new();
        ps.insert("x", random(&mut rng, &[batch, steps, din], 1.0)).unwrap();
        ps.insert("h0", random(&mut rng, &[batch, units], 0.5)).unwrap();
        ps.insert("k", random(&mut rng, &[din, 3 * units], 0.8)).unwrap();
        ps.insert("rk", random(&mut rng, &[units, 3 * units], 0.8)).unwrap();
        ps.insert("bias", random(&mut rng, &[3 * units], 0.3)).unwrap();
        let r = grad_check(&mut ps, 1e-5, |p, g| {
            let w = GruWeights { kernel: p.value("k")?, recurrent: p.value("rk")?, bias: p.value("bias")? };
            let out = gru_forward(p.value("x")?, p.value("h0")?, w)?;
            let (l, ds) = project(&out.states, seed);
            if let Some(g) = g {
                let mut gk = Tensor::zeros(&[din, 3 * units]);
                let mut grk = Tensor::zeros(&[units, 3 * units]);
                let mut gb = Tensor::zeros(&[3 * units]);
                let (dx, dh0) = gru_backward(w, &out.cache, &ds, None, GruGrads { kernel: &mut gk, recurrent: &mut grk, bias: &mut gb })?;
                for (n, t) in [("k", gk), ("rk", grk), ("bias", gb), ("x", dx), ("h0", dh0)] {
                    g.put(n, t);
                }
            }
            Ok(l)
        }).unwrap();
        prop_assert!(r.max_rel_error < OP_TOL, "{:?}", r);
    }
}

#[test]
fn gru_states_stay_bounded_over_long_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (batch, steps, din, units) = (2, 1000, 4, 8);
    let x = random(&mut rng, &[batch, steps, din], 1.0);
    let k = random(&mut rng, &[din, 3 * units], 1.0);
    let rk = random(&mut rng, &[units, 3 * units], 1.0);
    let bias = random(&mut rng, &[3 * units], 1.0);
    let h0 = Tensor::zeros(&[batch, units]);
    let out = gru_forward(
        &x,
        &h0,
        GruWeights {
            kernel: &k,
            recurrent: &rk,
            bias: &bias,
        },
    )
    .unwrap();
    assert!(out.states.is_finite());
    assert!(out.states.data().iter().all(|v| v.abs() < 1.0));
}
