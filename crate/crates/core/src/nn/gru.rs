//! Gated recurrent unit over a whole sequence.
//!
//! Gate layout in every kernel and in the bias is `[z | r | h]`, each `units`
//! wide. The reset gate multiplies the previous state before the recurrent
//! matmul for the candidate state:
//!
//! ```text
//! z  = sigmoid(x Wz + h Uz + bz)
//! r  = sigmoid(x Wr + h Ur + br)
//! h~ = tanh(x Wh + (r * h) Uh + bh)
//! h' = (1 - z) * h + z * h~
//! ```

use super::linalg::{gemm, MatMut, MatRef};
use super::{NnError, Real, Tensor};

/// Borrowed GRU parameters: `kernel[in, 3u]`, `recurrent[u, 3u]`, `bias[3u]`.
#[derive(Clone, Copy)]
pub struct GruWeights<'a, T: Real> {
    pub kernel: &'a Tensor<T>,
    pub recurrent: &'a Tensor<T>,
    pub bias: &'a Tensor<T>,
}

impl<T: Real> GruWeights<'_, T> {
    pub fn units(&self) -> usize {
        self.recurrent.dim(0)
    }

    fn check(&self, input_dim: usize) -> Result<usize, NnError> {
        let u = self.units();
        if self.kernel.shape() != [input_dim, 3 * u]
            || self.recurrent.shape() != [u, 3 * u]
            || self.bias.shape() != [3 * u]
        {
            return Err(NnError::Shape(format!(
                "gru weights {:?}/{:?}/{:?} do not fit input dim {input_dim}",
                self.kernel.shape(),
                self.recurrent.shape(),
                self.bias.shape()
            )));
        }
        Ok(u)
    }
}

/// Mutable gradient accumulators matching [`GruWeights`].
pub struct GruGrads<'a, T: Real> {
    pub kernel: &'a mut Tensor<T>,
    pub recurrent: &'a mut Tensor<T>,
    pub bias: &'a mut Tensor<T>,
}

/// Everything the backward pass needs from the forward pass.
#[derive(Clone, Debug)]
pub struct GruCache<T: Real> {
    x: Tensor<T>,
    h0: Tensor<T>,
    states: Tensor<T>,
    z: Vec<T>,
    r: Vec<T>,
    cand: Vec<T>,
    reset_state: Vec<T>,
}

impl<T: Real> GruCache<T> {
    pub fn states(&self) -> &Tensor<T> {
        &self.states
    }
}

pub struct GruOutput<T: Real> {
    /// State after every step, `[batch, steps, units]`.
    pub states: Tensor<T>,
    /// Final state, `[batch, units]`; equal to `states[:, steps - 1, :]`.
    pub last: Tensor<T>,
    pub cache: GruCache<T>,
}

fn sigmoid<T: Real>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

/// Runs the recurrence over `x[batch, steps, in]` starting from `h0[batch, units]`.
pub fn gru_forward<T: Real>(
    x: &Tensor<T>,
    h0: &Tensor<T>,
    w: GruWeights<'_, T>,
) -> Result<GruOutput<T>, NnError> {
    if x.rank() != 3 {
        return Err(NnError::Shape(
            "gru input must be [batch, steps, in]".into(),
        ));
    }
    let (b, steps, din) = (x.dim(0), x.dim(1), x.dim(2));
    let u = w.check(din)?;
    if h0.shape() != [b, u] {
        return Err(NnError::Shape(format!(
            "gru initial state {:?}, expected [{b}, {u}]",
            h0.shape()
        )));
    }
    let u3 = 3 * u;

    // Input projections for every step at once: [b * steps, 3u].
    let mut xp = vec![T::zero(); b * steps * u3];
    for row in xp.chunks_mut(u3) {
        row.copy_from_slice(w.bias.data());
    }
    gemm(
        MatRef::new(x.data(), b * steps, din),
        MatRef::new(w.kernel.data(), din, u3),
        MatMut::new(&mut xp, b * steps, u3),
        true,
    );

    let n = b * steps * u;
    let mut states = Tensor::zeros(&[b, steps, u]);
    let (mut z, mut r, mut cand, mut reset_state) = (
        vec![T::zero(); n],
        vec![T::zero(); n],
        vec![T::zero(); n],
        vec![T::zero(); n],
    );
    let mut hzr = vec![T::zero(); b * 2 * u];
    let mut hc = vec![T::zero(); b * u];
    let row_stride = steps * u;

    for t in 0..steps {
        // Recurrent contribution to z and r.
        {
            let (prev, prev_rs): (&[T], usize) = if t == 0 {
                (h0.data(), u)
            } else {
                (&states.data()[(t - 1) * u..], row_stride)
            };
            gemm(
                MatRef::strided(prev, b, u, prev_rs, 1),
                MatRef::cols_of(w.recurrent.data(), u, u3, 0, 2 * u),
                MatMut::new(&mut hzr, b, 2 * u),
                false,
            );
        }
        for bi in 0..b {
            let o = (bi * steps + t) * u;
            let xrow = &xp[(bi * steps + t) * u3..(bi * steps + t + 1) * u3];
            for j in 0..u {
                let hp = if t == 0 {
                    h0.data()[bi * u + j]
                } else {
                    states.data()[o - u + j]
                };
                let zv = sigmoid(xrow[j] + hzr[bi * 2 * u + j]);
                let rv = sigmoid(xrow[u + j] + hzr[bi * 2 * u + u + j]);
                z[o + j] = zv;
                r[o + j] = rv;
                reset_state[o + j] = rv * hp;
            }
        }
        gemm(
            MatRef::strided(&reset_state[t * u..], b, u, row_stride, 1),
            MatRef::cols_of(w.recurrent.data(), u, u3, 2 * u, u),
            MatMut::new(&mut hc, b, u),
            false,
        );
        for bi in 0..b {
            let o = (bi * steps + t) * u;
            let xrow = &xp[(bi * steps + t) * u3..(bi * steps + t + 1) * u3];
            for j in 0..u {
                let hp = if t == 0 {
                    h0.data()[bi * u + j]
                } else {
                    states.data()[o - u + j]
                };
                let c = (xrow[2 * u + j] + hc[bi * u + j]).tanh();
                cand[o + j] = c;
                let zv = z[o + j];
                states.data_mut()[o + j] = (T::one() - zv) * hp + zv * c;
            }
        }
    }

    let mut last = Tensor::zeros(&[b, u]);
    if steps > 0 {
        for bi in 0..b {
            last.row_mut(bi)
                .copy_from_slice(states.row(bi * steps + steps - 1));
        }
    } else {
        last = h0.clone();
    }
    Ok(GruOutput {
        states: states.clone(),
        last,
        cache: GruCache {
            x: x.clone(),
            h0: h0.clone(),
            states,
            z,
            r,
            cand,
            reset_state,
        },
    })
}

/// Backpropagation through time.
///
/// `d_states` is the gradient on every step's output, `d_last` an optional
/// extra gradient on the final state. Weight gradients are accumulated into
/// `grads`; returns `(dx, dh0)`.
pub fn gru_backward<T: Real>(
    w: GruWeights<'_, T>,
    cache: &GruCache<T>,
    d_states: &Tensor<T>,
    d_last: Option<&Tensor<T>>,
    grads: GruGrads<'_, T>,
) -> Result<(Tensor<T>, Tensor<T>), NnError> {
    let x = &cache.x;
    let (b, steps, din) = (x.dim(0), x.dim(1), x.dim(2));
    let u = w.check(din)?;
    let u3 = 3 * u;
    if d_states.shape() != [b, steps, u] {
        return Err(NnError::Shape(
            "gru_backward: d_states shape mismatch".into(),
        ));
    }
    let row_stride = steps * u;
    let mut dh = match d_last {
        Some(d) if d.shape() == [b, u] => d.data().to_vec(),
        Some(_) => return Err(NnError::Shape("gru_backward: d_last shape mismatch".into())),
        None => vec![T::zero(); b * u],
    };
    let mut d_xp = vec![T::zero(); b * steps * u3];
    let mut d_cand_pre = vec![T::zero(); b * u];
    let mut d_reset_state = vec![T::zero(); b * u];
    let mut d_prev = vec![T::zero(); b * u];

    for t in (0..steps).rev() {
        let h_prev = |bi: usize, j: usize| -> T {
            if t == 0 {
                cache.h0.data()[bi * u + j]
            } else {
                cache.states.data()[(bi * steps + t - 1) * u + j]
            }
        };
        for bi in 0..b {
            let o = (bi * steps + t) * u;
            for j in 0..u {
                let g = dh[bi * u + j] + d_states.data()[o + j];
                let (zv, c) = (cache.z[o + j], cache.cand[o + j]);
                let hp = h_prev(bi, j);
                let dz = g * (c - hp);
                d_prev[bi * u + j] = g * (T::one() - zv);
                d_cand_pre[bi * u + j] = g * zv * (T::one() - c * c);
                d_xp[(bi * steps + t) * u3 + j] = dz * zv * (T::one() - zv);
            }
        }
        // Candidate path: dUh += (r*h)^T dcand; d(r*h) = dcand Uh^T.
        gemm(
            MatRef::strided(&cache.reset_state[t * u..], b, u, row_stride, 1).t(),
            MatRef::new(&d_cand_pre, b, u),
            MatMut::cols_of(grads.recurrent.data_mut(), u, u3, 2 * u, u),
            true,
        );
        gemm(
            MatRef::new(&d_cand_pre, b, u),
            MatRef::cols_of(w.recurrent.data(), u, u3, 2 * u, u).t(),
            MatMut::new(&mut d_reset_state, b, u),
            false,
        );
        for bi in 0..b {
            let o = (bi * steps + t) * u;
            let base = (bi * steps + t) * u3;
            for j in 0..u {
                let rv = cache.r[o + j];
                let drs = d_reset_state[bi * u + j];
                d_prev[bi * u + j] += drs * rv;
                let dr = drs * h_prev(bi, j);
                d_xp[base + u + j] = dr * rv * (T::one() - rv);
                d_xp[base + 2 * u + j] = d_cand_pre[bi * u + j];
            }
        }
        // Gate path: dUzr += h^T [dz | dr]; dh += [dz | dr] Uzr^T.
        let (prev, prev_rs): (&[T], usize) = if t == 0 {
            (cache.h0.data(), u)
        } else {
            (&cache.states.data()[(t - 1) * u..], row_stride)
        };
        let gates = MatRef::strided(&d_xp[t * u3..], b, 2 * u, steps * u3, 1);
        gemm(
            MatRef::strided(prev, b, u, prev_rs, 1).t(),
            gates,
            MatMut::cols_of(grads.recurrent.data_mut(), u, u3, 0, 2 * u),
            true,
        );
        gemm(
            gates,
            MatRef::cols_of(w.recurrent.data(), u, u3, 0, 2 * u).t(),
            MatMut::new(&mut d_prev, b, u),
            true,
        );
        std::mem::swap(&mut dh, &mut d_prev);
    }

    gemm(
        MatRef::new(x.data(), b * steps, din).t(),
        MatRef::new(&d_xp, b * steps, u3),
        MatMut::new(grads.kernel.data_mut(), din, u3),
        true,
    );
    for row in d_xp.chunks(u3) {
        for (g, &d) in grads.bias.data_mut().iter_mut().zip(row) {
            *g += d;
        }
    }
    let mut dx = Tensor::zeros(&[b, steps, din]);
    gemm(
        MatRef::new(&d_xp, b * steps, u3),
        MatRef::new(w.kernel.data(), din, u3).t(),
        MatMut::new(dx.data_mut(), b * steps, din),
        false,
    );
    let dh0 = Tensor::from_vec(&[b, u], dh)?;
    Ok((dx, dh0))
}
