//! Stateless tensor operations, each paired with its backward pass.
//!
//! Backward functions take the forward inputs (or outputs, where cheaper)
//! plus the upstream gradient, and return or accumulate input gradients.

use super::linalg::{gemm, MatMut, MatRef};
use super::{NnError, Real, Tensor};

fn shape_err(msg: impl Into<String>) -> NnError {
    NnError::Shape(msg.into())
}

/// Row gather: `indices` holds `batch * seqlen` ids; output is `[batch, seqlen, dims]`.
pub fn embedding<T: Real>(
    indices: &[usize],
    batch: usize,
    seqlen: usize,
    table: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    if table.rank() != 2 {
        return Err(shape_err("embedding table must be rank 2"));
    }
    if indices.len() != batch * seqlen {
        return Err(shape_err(format!(
            "embedding expects {batch}x{seqlen} indices, got {}",
            indices.len()
        )));
    }
    let (vocab, dims) = (table.dim(0), table.dim(1));
    let mut out = Tensor::zeros(&[batch, seqlen, dims]);
    for (pos, &ix) in indices.iter().enumerate() {
        if ix >= vocab {
            return Err(NnError::IndexOutOfRange {
                index: ix,
                size: vocab,
            });
        }
        out.row_mut(pos).copy_from_slice(table.row(ix));
    }
    Ok(out)
}

/// Scatters `grad_out` rows back into `grad_table`.
pub fn embedding_backward<T: Real>(
    indices: &[usize],
    grad_out: &Tensor<T>,
    grad_table: &mut Tensor<T>,
) {
    for (pos, &ix) in indices.iter().enumerate() {
        for (g, &d) in grad_table.row_mut(ix).iter_mut().zip(grad_out.row(pos)) {
            *g += d;
        }
    }
}

/// Softmax over the last axis.
pub fn softmax_rows<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let mut y = x.clone();
    let w = *x.shape().last().unwrap();
    for row in y.data_mut().chunks_mut(w) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    y
}

/// Gradient through a row softmax given its output `y`.
pub fn softmax_rows_backward<T: Real>(y: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
    let w = *y.shape().last().unwrap();
    let mut dx = dy.clone();
    for (drow, yrow) in dx.data_mut().chunks_mut(w).zip(y.data().chunks(w)) {
        let dot: T = drow.iter().zip(yrow).map(|(&d, &p)| d * p).sum();
        for (d, &p) in drow.iter_mut().zip(yrow) {
            *d = p * (*d - dot);
        }
    }
    dx
}

pub fn relu<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| *v = v.max(T::zero()));
    y
}

/// Gradient through relu given its output.
pub fn relu_backward<T: Real>(y: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
    let mut dx = dy.clone();
    for (d, &v) in dx.data_mut().iter_mut().zip(y.data()) {
        if v <= T::zero() {
            *d = T::zero();
        }
    }
    dx
}

/// `x[n, in] * kernel[in, out] + bias[out]`.
pub fn dense<T: Real>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    if x.rank() != 2 || kernel.rank() != 2 || bias.rank() != 1 {
        return Err(shape_err(
            "dense expects x[n,in], kernel[in,out], bias[out]",
        ));
    }
    let (n, din) = (x.dim(0), x.dim(1));
    let dout = kernel.dim(1);
    if kernel.dim(0) != din || bias.dim(0) != dout {
        return Err(shape_err(format!(
            "dense: x {:?}, kernel {:?}, bias {:?}",
            x.shape(),
            kernel.shape(),
            bias.shape()
        )));
    }
    let mut out = Tensor::zeros(&[n, dout]);
    for i in 0..n {
        out.row_mut(i).copy_from_slice(bias.data());
    }
    gemm(
        MatRef::new(x.data(), n, din),
        MatRef::new(kernel.data(), din, dout),
        MatMut::new(out.data_mut(), n, dout),
        true,
    );
    Ok(out)
}

/// Accumulates kernel/bias gradients and returns the input gradient.
pub fn dense_backward<T: Real>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    dy: &Tensor<T>,
    grad_kernel: &mut Tensor<T>,
    grad_bias: &mut Tensor<T>,
) -> Tensor<T> {
    let (n, din) = (x.dim(0), x.dim(1));
    let dout = kernel.dim(1);
    gemm(
        MatRef::new(x.data(), n, din).t(),
        MatRef::new(dy.data(), n, dout),
        MatMut::new(grad_kernel.data_mut(), din, dout),
        true,
    );
    for i in 0..n {
        for (g, &d) in grad_bias.data_mut().iter_mut().zip(dy.row(i)) {
            *g += d;
        }
    }
    let mut dx = Tensor::zeros(&[n, din]);
    gemm(
        MatRef::new(dy.data(), n, dout),
        MatRef::new(kernel.data(), din, dout).t(),
        MatMut::new(dx.data_mut(), n, din),
        false,
    );
    dx
}

/// The same dense layer applied at every position of `x[b, t, in]`.
pub fn time_distributed_dense<T: Real>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    if x.rank() != 3 {
        return Err(shape_err("time_distributed_dense expects rank-3 input"));
    }
    let (b, t) = (x.dim(0), x.dim(1));
    let flat = x.clone().reshape(&[b * t, x.dim(2)])?;
    dense(&flat, kernel, bias)?.reshape(&[b, t, kernel.dim(1)])
}

pub fn time_distributed_dense_backward<T: Real>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    dy: &Tensor<T>,
    grad_kernel: &mut Tensor<T>,
    grad_bias: &mut Tensor<T>,
) -> Tensor<T> {
    let (b, t, din) = (x.dim(0), x.dim(1), x.dim(2));
    let x2 = x.clone().reshape(&[b * t, din]).unwrap();
    let dy2 = dy.clone().reshape(&[b * t, kernel.dim(1)]).unwrap();
    dense_backward(&x2, kernel, &dy2, grad_kernel, grad_bias)
        .reshape(&[b, t, din])
        .unwrap()
}

/// `[b, t, h]` to `[b, t * h]`.
pub fn flatten<T: Real>(x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    if x.rank() != 3 {
        return Err(shape_err("flatten expects rank-3 input"));
    }
    x.clone().reshape(&[x.dim(0), x.dim(1) * x.dim(2)])
}

/// Joins tensors of equal leading shape along the last axis.
pub fn concatenate_lastaxis<T: Real>(parts: &[&Tensor<T>]) -> Result<Tensor<T>, NnError> {
    let first = parts
        .first()
        .ok_or_else(|| shape_err("concatenate of nothing"))?;
    let lead = &first.shape()[..first.rank() - 1];
    let mut width = 0;
    for p in parts {
        if &p.shape()[..p.rank() - 1] != lead {
            return Err(shape_err(format!(
                "concatenate: leading shape {:?} vs {:?}",
                p.shape(),
                first.shape()
            )));
        }
        width += p.shape()[p.rank() - 1];
    }
    let rows: usize = lead.iter().product();
    let mut shape = lead.to_vec();
    shape.push(width);
    let mut out = Tensor::zeros(&shape);
    for r in 0..rows {
        let dst = out.row_mut(r);
        let mut off = 0;
        for p in parts {
            let src = p.row(r);
            dst[off..off + src.len()].copy_from_slice(src);
            off += src.len();
        }
    }
    Ok(out)
}

/// Splits a last-axis concatenation gradient back into parts of the given widths.
pub fn split_lastaxis<T: Real>(grad: &Tensor<T>, widths: &[usize]) -> Vec<Tensor<T>> {
    let lead = &grad.shape()[..grad.rank() - 1];
    let rows: usize = lead.iter().product();
    let mut parts: Vec<Tensor<T>> = widths
        .iter()
        .map(|&w| {
            let mut s = lead.to_vec();
            s.push(w);
            Tensor::zeros(&s)
        })
        .collect();
    for r in 0..rows {
        let src = grad.row(r);
        let mut off = 0;
        for (p, &w) in parts.iter_mut().zip(widths) {
            p.row_mut(r).copy_from_slice(&src[off..off + w]);
            off += w;
        }
    }
    parts
}

/// Per-batch-item dot product of two rank-3 tensors, contracting axis
/// `axes.0` of `a` with axis `axes.1` of `b` (each 1 or 2).
///
/// The result is `[batch, free(a), free(b)]`, e.g. `(2, 2)` computes
/// `a * b^T` and `(2, 1)` computes `a * b` for every batch item.
pub fn batched_dot<T: Real>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    axes: (usize, usize),
) -> Result<Tensor<T>, NnError> {
    let (la, lb) = bdot_layout(a, b, axes)?;
    let batch = a.dim(0);
    let mut out = Tensor::zeros(&[batch, la.free, lb.free]);
    let (sa, sb, so) = (la.free * la.k, lb.free * lb.k, la.free * lb.free);
    for i in 0..batch {
        gemm(
            la.view(&a.data()[i * sa..(i + 1) * sa]),
            lb.view(&b.data()[i * sb..(i + 1) * sb]).t(),
            MatMut::new(&mut out.data_mut()[i * so..(i + 1) * so], la.free, lb.free),
            false,
        );
    }
    Ok(out)
}

/// Gradients of [`batched_dot`] with respect to both operands.
pub fn batched_dot_backward<T: Real>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    axes: (usize, usize),
    grad: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>), NnError> {
    let (la, lb) = bdot_layout(a, b, axes)?;
    let batch = a.dim(0);
    if grad.shape() != [batch, la.free, lb.free] {
        return Err(shape_err("batched_dot_backward: gradient shape mismatch"));
    }
    let mut ga = Tensor::zeros(a.shape());
    let mut gb = Tensor::zeros(b.shape());
    let (sa, sb, so) = (la.free * la.k, lb.free * lb.k, la.free * lb.free);
    for i in 0..batch {
        let g = MatRef::new(&grad.data()[i * so..(i + 1) * so], la.free, lb.free);
        // dA (free_a x k) = G * B (free_b x k)
        gemm(
            g,
            lb.view(&b.data()[i * sb..(i + 1) * sb]),
            la.view_mut(&mut ga.data_mut()[i * sa..(i + 1) * sa]),
            false,
        );
        // dB (free_b x k) = G^T * A (free_a x k)
        gemm(
            g.t(),
            la.view(&a.data()[i * sa..(i + 1) * sa]),
            lb.view_mut(&mut gb.data_mut()[i * sb..(i + 1) * sb]),
            false,
        );
    }
    Ok((ga, gb))
}

/// How one batch item of an operand maps onto a `free x k` matrix.
struct BdotLayout {
    free: usize,
    k: usize,
    /// Contracted axis is the last one (row-major `free x k`), else `k x free`.
    k_last: bool,
}

impl BdotLayout {
    fn view<'a, T: Real>(&self, data: &'a [T]) -> MatRef<'a, T> {
        if self.k_last {
            MatRef::new(data, self.free, self.k)
        } else {
            MatRef::new(data, self.k, self.free).t()
        }
    }

    fn view_mut<'a, T: Real>(&self, data: &'a mut [T]) -> MatMut<'a, T> {
        if self.k_last {
            MatMut::new(data, self.free, self.k)
        } else {
            MatMut::strided(data, self.free, self.k, 1, self.free)
        }
    }
}

fn bdot_layout<T: Real>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    axes: (usize, usize),
) -> Result<(BdotLayout, BdotLayout), NnError> {
    if a.rank() != 3 || b.rank() != 3 {
        return Err(shape_err("batched_dot expects rank-3 operands"));
    }
    if a.dim(0) != b.dim(0) {
        return Err(shape_err(format!(
            "batched_dot batch mismatch: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let layout = |t: &Tensor<T>, axis: usize| -> Result<BdotLayout, NnError> {
        match axis {
            1 => Ok(BdotLayout {
                free: t.dim(2),
                k: t.dim(1),
                k_last: false,
            }),
            2 => Ok(BdotLayout {
                free: t.dim(1),
                k: t.dim(2),
                k_last: true,
            }),
            _ => Err(shape_err(format!("batched_dot axis {axis} must be 1 or 2"))),
        }
    };
    let (la, lb) = (layout(a, axes.0)?, layout(b, axes.1)?);
    if la.k != lb.k {
        return Err(shape_err(format!(
            "batched_dot contracted dims differ: {:?} axis {} vs {:?} axis {}",
            a.shape(),
            axes.0,
            b.shape(),
            axes.1
        )));
    }
    Ok((la, lb))
}

/// Mean negative log-likelihood of `targets` under softmax outputs `probs[b, v]`.
///
/// Returns the loss and its gradient with respect to the pre-softmax
/// logits, `(probs - onehot) / batch`.
pub fn cross_entropy<T: Real>(
    probs: &Tensor<T>,
    targets: &[usize],
) -> Result<(T, Tensor<T>), NnError> {
    let (loss_sum, grad) = cross_entropy_sum(probs, targets)?;
    let n = T::of(targets.len() as f64);
    let mut grad = grad;
    grad.data_mut().iter_mut().for_each(|g| *g /= n);
    Ok((loss_sum / n, grad))
}

/// Summed (not averaged) variant used when batches are accumulated piecewise.
pub fn cross_entropy_sum<T: Real>(
    probs: &Tensor<T>,
    targets: &[usize],
) -> Result<(T, Tensor<T>), NnError> {
    if probs.rank() != 2 || probs.dim(0) != targets.len() {
        return Err(shape_err(format!(
            "cross_entropy: probs {:?} vs {} targets",
            probs.shape(),
            targets.len()
        )));
    }
    let v = probs.dim(1);
    let mut grad = probs.clone();
    let mut loss = T::zero();
    for (i, &t) in targets.iter().enumerate() {
        if t >= v {
            return Err(NnError::IndexOutOfRange { index: t, size: v });
        }
        let p = probs.row(i)[t].max(T::min_positive_value());
        loss -= p.ln();
        grad.row_mut(i)[t] -= T::one();
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t64(shape: &[usize], seed: u64) -> Tensor<f64> {
        let mut s = seed;
        Tensor::from_fn(shape, |_| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn embedding_shape_and_identity_table() {
        let table = Tensor::<f64>::from_fn(&[4, 4], |i| if i % 5 == 0 { 1.0 } else { 0.0 });
        let out = embedding(&[2, 0, 3], 1, 3, &table).unwrap();
        assert_eq!(out.shape(), &[1, 3, 4]);
        assert_eq!(out.row(0), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(out.row(1), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn embedding_rejects_out_of_range() {
        let table = Tensor::<f32>::zeros(&[3, 2]);
        assert!(matches!(
            embedding(&[3], 1, 1, &table),
            Err(NnError::IndexOutOfRange { index: 3, size: 3 })
        ));
    }

    #[test]
    fn embedding_gradient_counts_occurrences() {
        let ids = [1, 1, 2, 1];
        let ones = Tensor::<f64>::from_fn(&[1, 4, 3], |_| 1.0);
        let mut g = Tensor::zeros(&[4, 3]);
        embedding_backward(&ids, &ones, &mut g);
        assert_eq!(g.row(0), &[0.0; 3]);
        assert_eq!(g.row(1), &[3.0; 3]);
        assert_eq!(g.row(2), &[1.0; 3]);
    }

    #[test]
    fn softmax_rows_sum_to_one_and_positive() {
        let x = t64(&[2, 3, 7], 3);
        let y = softmax_rows(&x);
        for r in 0..6 {
            let s: f64 = y.row(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(y.row(r).iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn concat_and_flatten_shapes() {
        let a = Tensor::<f32>::zeros(&[2, 13, 256]);
        let c = concatenate_lastaxis(&[&a, &a, &a]).unwrap();
        assert_eq!(c.shape(), &[2, 13, 768]);
        let single = Tensor::<f32>::zeros(&[1, 13, 256]);
        assert_eq!(flatten(&single).unwrap().shape(), &[1, 3328]);
        let bad = Tensor::<f32>::zeros(&[3, 13, 256]);
        assert!(concatenate_lastaxis(&[&a, &bad]).is_err());
    }

    #[test]
    fn split_inverts_concat() {
        let a = t64(&[2, 3, 4], 1);
        let b = t64(&[2, 3, 2], 2);
        let c = concatenate_lastaxis(&[&a, &b]).unwrap();
        let parts = split_lastaxis(&c, &[4, 2]);
        assert_eq!(parts[0], a);
        assert_eq!(parts[1], b);
    }

    #[test]
    fn batched_dot_attention_shapes() {
        let dec = Tensor::<f32>::zeros(&[2, 13, 256]);
        let enc = Tensor::<f32>::zeros(&[2, 100, 256]);
        let attn = batched_dot(&dec, &enc, (2, 2)).unwrap();
        assert_eq!(attn.shape(), &[2, 13, 100]);
        let ctx = batched_dot(&attn, &enc, (2, 1)).unwrap();
        assert_eq!(ctx.shape(), &[2, 13, 256]);
        assert!(batched_dot(&dec, &attn, (2, 2)).is_err());
        assert!(batched_dot(&dec, &enc, (0, 2)).is_err());
    }

    #[test]
    fn cross_entropy_edge_values() {
        let perfect = Tensor::<f64>::from_vec(&[1, 3], vec![0.0, 1.0, 0.0]).unwrap();
        let (loss, _) = cross_entropy(&perfect, &[1]).unwrap();
        assert_eq!(loss, 0.0);
        let v = 7;
        let uniform = Tensor::<f64>::from_fn(&[2, v], |_| 1.0 / v as f64);
        let (loss, grad) = cross_entropy(&uniform, &[0, 6]).unwrap();
        assert!((loss - (v as f64).ln()).abs() < 1e-12);
        assert!((grad.get(&[0, 0]) - (1.0 / 7.0 - 1.0) / 2.0).abs() < 1e-12);
        assert!(cross_entropy(&uniform, &[0, 7]).is_err());
    }

    #[test]
    fn dense_known_values() {
        let x = Tensor::<f64>::from_vec(&[1, 2], vec![1.0, 2.0]).unwrap();
        let k = Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 3.0, -1.0]).unwrap();
        let b = Tensor::from_vec(&[2], vec![0.5, 0.5]).unwrap();
        let y = dense(&x, &k, &b).unwrap();
        assert_eq!(y.data(), &[7.5, -1.5]);
        assert_eq!(relu(&y).data(), &[7.5, 0.0]);
    }
}
