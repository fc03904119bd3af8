//! Named layers: thin wrappers that resolve their tensors in a [`ParamSet`].

use rand::Rng;

use super::gru::{gru_backward, gru_forward, GruCache, GruGrads, GruOutput, GruWeights};
use super::ops;
use super::{Gradients, NnError, ParamSet, Real, Tensor};

/// Half-width of the uniform distribution for embedding tables.
pub const EMBEDDING_INIT_LIMIT: f64 = 0.05;

/// Fresh value for a parameter, chosen by its name suffix: embedding tables
/// are uniform in `±EMBEDDING_INIT_LIMIT`, biases start at zero, and every
/// `[fan_in, fan_out]` kernel (recurrent ones included) is Glorot uniform.
pub fn initial_value<T: Real, R: Rng>(name: &str, shape: &[usize], rng: &mut R) -> Tensor<T> {
    let limit = if name.ends_with(".table") {
        EMBEDDING_INIT_LIMIT
    } else if name.ends_with(".bias") {
        return Tensor::zeros(shape);
    } else {
        (6.0 / (shape[0] + shape[shape.len() - 1]) as f64).sqrt()
    };
    Tensor::from_fn(shape, |_| T::of(rng.gen_range(-limit..limit)))
}

#[derive(Clone, Debug)]
pub struct Embedding {
    pub name: String,
    pub vocab: usize,
    pub dims: usize,
}

impl Embedding {
    pub fn new(name: &str, vocab: usize, dims: usize) -> Self {
        Embedding {
            name: name.to_string(),
            vocab,
            dims,
        }
    }

    pub fn table_name(&self) -> String {
        format!("{}.table", self.name)
    }

    pub fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        vec![(self.table_name(), vec![self.vocab, self.dims])]
    }

    pub fn forward<T: Real>(
        &self,
        params: &ParamSet<T>,
        ids: &[usize],
        batch: usize,
        seqlen: usize,
    ) -> Result<Tensor<T>, NnError> {
        ops::embedding(ids, batch, seqlen, params.value(&self.table_name())?)
    }

    pub fn backward<T: Real>(&self, ids: &[usize], grad_out: &Tensor<T>, grads: &mut Gradients<T>) {
        let g = grads.entry(&self.table_name(), &[self.vocab, self.dims]);
        ops::embedding_backward(ids, grad_out, g);
    }
}

#[derive(Clone, Debug)]
pub struct Dense {
    pub name: String,
    pub input: usize,
    pub output: usize,
}

impl Dense {
    pub fn new(name: &str, input: usize, output: usize) -> Self {
        Dense {
            name: name.to_string(),
            input,
            output,
        }
    }

    fn kernel_name(&self) -> String {
        format!("{}.kernel", self.name)
    }

    fn bias_name(&self) -> String {
        format!("{}.bias", self.name)
    }

    pub fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        vec![
            (self.bias_name(), vec![self.output]),
            (self.kernel_name(), vec![self.input, self.output]),
        ]
    }

    pub fn kernel<'a, T: Real>(&self, params: &'a ParamSet<T>) -> Result<&'a Tensor<T>, NnError> {
        params.value(&self.kernel_name())
    }

    /// Rank-2 input: plain dense. Rank-3 input: applied at every position.
    pub fn forward<T: Real>(
        &self,
        params: &ParamSet<T>,
        x: &Tensor<T>,
    ) -> Result<Tensor<T>, NnError> {
        let (k, b) = (
            params.value(&self.kernel_name())?,
            params.value(&self.bias_name())?,
        );
        match x.rank() {
            2 => ops::dense(x, k, b),
            3 => ops::time_distributed_dense(x, k, b),
            r => Err(NnError::Shape(format!("dense input rank {r}"))),
        }
    }

    pub fn backward<T: Real>(
        &self,
        params: &ParamSet<T>,
        x: &Tensor<T>,
        dy: &Tensor<T>,
        grads: &mut Gradients<T>,
    ) -> Result<Tensor<T>, NnError> {
        let k = params.value(&self.kernel_name())?;
        let mut gk = grads.take(&self.kernel_name(), k.shape());
        let gb = grads.entry(&self.bias_name(), &[self.output]);
        let dx = if x.rank() == 3 {
            ops::time_distributed_dense_backward(x, k, dy, &mut gk, gb)
        } else {
            ops::dense_backward(x, k, dy, &mut gk, gb)
        };
        grads.put(&self.kernel_name(), gk);
        Ok(dx)
    }
}

#[derive(Clone, Debug)]
pub struct Gru {
    pub name: String,
    pub input: usize,
    pub units: usize,
}

impl Gru {
    pub fn new(name: &str, input: usize, units: usize) -> Self {
        Gru {
            name: name.to_string(),
            input,
            units,
        }
    }

    fn names(&self) -> [String; 3] {
        [
            format!("{}.kernel", self.name),
            format!("{}.recurrent_kernel", self.name),
            format!("{}.bias", self.name),
        ]
    }

    pub fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        let [k, rk, b] = self.names();
        vec![
            (b, vec![3 * self.units]),
            (k, vec![self.input, 3 * self.units]),
            (rk, vec![self.units, 3 * self.units]),
        ]
    }

    pub fn weights<'a, T: Real>(
        &self,
        params: &'a ParamSet<T>,
    ) -> Result<GruWeights<'a, T>, NnError> {
        let [k, rk, b] = self.names();
        Ok(GruWeights {
            kernel: params.value(&k)?,
            recurrent: params.value(&rk)?,
            bias: params.value(&b)?,
        })
    }

    pub fn forward<T: Real>(
        &self,
        params: &ParamSet<T>,
        x: &Tensor<T>,
        h0: &Tensor<T>,
    ) -> Result<GruOutput<T>, NnError> {
        gru_forward(x, h0, self.weights(params)?)
    }

    pub fn backward<T: Real>(
        &self,
        params: &ParamSet<T>,
        cache: &GruCache<T>,
        d_states: &Tensor<T>,
        d_last: Option<&Tensor<T>>,
        grads: &mut Gradients<T>,
    ) -> Result<(Tensor<T>, Tensor<T>), NnError> {
        let w = self.weights(params)?;
        let [k, rk, b] = self.names();
        let mut gk = grads.take(&k, w.kernel.shape());
        let mut grk = grads.take(&rk, w.recurrent.shape());
        let gb = grads.entry(&b, w.bias.shape());
        let out = gru_backward(
            w,
            cache,
            d_states,
            d_last,
            GruGrads {
                kernel: &mut gk,
                recurrent: &mut grk,
                bias: gb,
            },
        );
        grads.put(&k, gk);
        grads.put(&rk, grk);
        out
    }
}
