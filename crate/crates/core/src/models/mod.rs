//! The three encoder-decoder networks and their checkpoint format.
//!
//! A forward pass is split in two: [`Model::encode`] runs the encoders once
//! per method, and [`Model::decode`] runs the decoder and output head for any
//! number of comment prefixes that point back at encoded rows. Training feeds
//! every teacher-forcing prefix of a method through one shared encoding.

mod checkpoint;
mod config;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::nn::ops::{relu_backward, softmax_rows_backward};
use crate::nn::{
    batched_dot, batched_dot_backward, concatenate_lastaxis, cross_entropy, flatten, initial_value,
    relu, softmax_rows, split_lastaxis, Dense, Embedding, Gradients, Gru, GruCache, NnError,
    ParamSet, Real, Tensor,
};

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use config::{InputSource, ModelConfig, ModelKind};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("bad model input: {0}")]
    Input(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Encoder-side indices for one method.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncoderInput {
    /// Code/text (or SBT) indices, `txtlen` long.
    pub primary: Vec<usize>,
    /// SBT-AO indices, `astlen` long. Only for `ast-attendgru`.
    pub ast: Option<Vec<usize>>,
}

/// Named tensor shapes observed during a pass, in execution order.
pub type ShapeTrace = Vec<(&'static str, Vec<usize>)>;

/// Encoder outputs for a batch of methods plus what backprop needs.
#[derive(Debug)]
pub struct Encoded<T: Real> {
    batch: usize,
    txt_ids: Vec<usize>,
    ast_ids: Option<Vec<usize>>,
    txtout: Tensor<T>,
    astout: Option<Tensor<T>>,
    /// Final code/text state, which seeds the decoder.
    state: Tensor<T>,
    txt_cache: GruCache<T>,
    ast_cache: Option<GruCache<T>>,
    pub trace: ShapeTrace,
}

impl<T: Real> Encoded<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// Decoder and head outputs for a batch of comment prefixes.
#[derive(Debug)]
pub struct Decoded<T: Real> {
    /// Next-word distributions, `[m, comvocabsize]`.
    pub probs: Tensor<T>,
    /// `[m, comlen, txtlen]`; each row sums to one.
    pub txt_attn: Tensor<T>,
    /// `[m, comlen, astlen]` for `ast-attendgru`.
    pub ast_attn: Option<Tensor<T>>,
    pub trace: ShapeTrace,
    rows: Vec<usize>,
    prefixes: Vec<usize>,
    txtout: Tensor<T>,
    astout: Option<Tensor<T>>,
    dec_cache: GruCache<T>,
    decout: Tensor<T>,
    context: Tensor<T>,
    hidden: Tensor<T>,
    flat: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct Model<T: Real = f32> {
    config: ModelConfig,
    params: ParamSet<T>,
}

fn gather_rows<T: Real>(t: &Tensor<T>, rows: &[usize]) -> Tensor<T> {
    let mut shape = t.shape().to_vec();
    let stride = t.len() / shape[0];
    shape[0] = rows.len();
    let mut data = Vec::with_capacity(rows.len() * stride);
    for &r in rows {
        data.extend_from_slice(&t.data()[r * stride..(r + 1) * stride]);
    }
    Tensor::from_vec(&shape, data).expect("gathered shape")
}

fn scatter_add_rows<T: Real>(src: &Tensor<T>, rows: &[usize], dst: &mut Tensor<T>) {
    let stride = src.len() / rows.len().max(1);
    for (i, &r) in rows.iter().enumerate() {
        let d = &mut dst.data_mut()[r * stride..(r + 1) * stride];
        for (a, &b) in d.iter_mut().zip(&src.data()[i * stride..(i + 1) * stride]) {
            *a += b;
        }
    }
}

impl<T: Real> Model<T> {
    /// Seeded initialization, drawing parameters in name order.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        for (name, shape) in config.param_shapes() {
            let value = initial_value(&name, &shape, &mut rng);
            params.insert(&name, value)?;
        }
        Ok(Model { config, params })
    }

    /// Wraps existing parameters, requiring exactly the configured names and shapes.
    pub fn from_params(config: ModelConfig, params: ParamSet<T>) -> Result<Self, ModelError> {
        config.validate()?;
        let expected = config.param_shapes();
        for (name, shape) in &expected {
            let got = params
                .value(name)
                .map_err(|_| ModelError::Config(format!("missing parameter `{name}`")))?;
            if got.shape() != shape.as_slice() {
                return Err(ModelError::Config(format!(
                    "parameter `{name}` has shape {:?}, expected {shape:?}",
                    got.shape()
                )));
            }
        }
        if let Some(extra) = params
            .names()
            .find(|n| !expected.iter().any(|(e, _)| e == n))
        {
            return Err(ModelError::Config(format!(
                "unexpected parameter `{extra}`"
            )));
        }
        Ok(Model { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    pub fn cast<U: Real>(&self) -> Model<U> {
        Model {
            config: self.config.clone(),
            params: self.params.cast(),
        }
    }

    fn txt_embedding(&self) -> Embedding {
        Embedding::new(
            "txt_embedding",
            self.config.txtvocabsize,
            self.config.embdims,
        )
    }

    fn ast_embedding(&self) -> Embedding {
        Embedding::new(
            "ast_embedding",
            self.config.astvocabsize,
            self.config.embdims,
        )
    }

    fn com_embedding(&self) -> Embedding {
        Embedding::new(
            "com_embedding",
            self.config.comvocabsize,
            self.config.embdims,
        )
    }

    fn gru(&self, name: &str) -> Gru {
        Gru::new(name, self.config.embdims, self.config.rnndims)
    }

    fn td_dense(&self) -> Dense {
        Dense::new("td_dense", self.config.context_width(), self.config.rnndims)
    }

    fn out_dense(&self) -> Dense {
        Dense::new(
            "out_dense",
            self.config.comlen * self.config.rnndims,
            self.config.comvocabsize,
        )
    }

    fn check_input(&self, input: &EncoderInput) -> Result<(), ModelError> {
        let c = &self.config;
        if input.primary.len() != c.txtlen {
            return Err(ModelError::Input(format!(
                "primary sequence has {} slots, expected {}",
                input.primary.len(),
                c.txtlen
            )));
        }
        match (&input.ast, c.kind.has_ast_encoder()) {
            (Some(a), true) if a.len() != c.astlen => Err(ModelError::Input(format!(
                "AST sequence has {} slots, expected {}",
                a.len(),
                c.astlen
            ))),
            (None, true) => Err(ModelError::Input(format!(
                "{} needs an AST sequence",
                c.kind
            ))),
            (Some(_), false) => Err(ModelError::Input(format!(
                "{} takes no AST sequence",
                c.kind
            ))),
            _ => Ok(()),
        }
    }

    /// Runs the encoders over a batch of methods.
    pub fn encode(&self, inputs: &[EncoderInput]) -> Result<Encoded<T>, ModelError> {
        let c = &self.config;
        let n = inputs.len();
        if n == 0 {
            return Err(ModelError::Input("empty batch".into()));
        }
        for input in inputs {
            self.check_input(input)?;
        }
        let mut trace = ShapeTrace::new();
        let zeros = Tensor::zeros(&[n, c.rnndims]);

        let (ast_ids, astout, ast_cache, txt_h0) = if c.kind.has_ast_encoder() {
            let ids: Vec<usize> = inputs
                .iter()
                .flat_map(|i| i.ast.as_ref().unwrap().iter().copied())
                .collect();
            let emb = self
                .ast_embedding()
                .forward(&self.params, &ids, n, c.astlen)?;
            trace.push(("ast_embedding", emb.shape().to_vec()));
            let out = self.gru("ast_gru").forward(&self.params, &emb, &zeros)?;
            trace.push(("ast_gru.states", out.states.shape().to_vec()));
            (Some(ids), Some(out.states), Some(out.cache), out.last)
        } else {
            (None, None, None, zeros)
        };

        let txt_ids: Vec<usize> = inputs
            .iter()
            .flat_map(|i| i.primary.iter().copied())
            .collect();
        let emb = self
            .txt_embedding()
            .forward(&self.params, &txt_ids, n, c.txtlen)?;
        trace.push(("txt_embedding", emb.shape().to_vec()));
        let out = self.gru("txt_gru").forward(&self.params, &emb, &txt_h0)?;
        trace.push(("txt_gru.states", out.states.shape().to_vec()));
        out.states.check_finite("txt_gru states")?;

        Ok(Encoded {
            batch: n,
            txt_ids,
            ast_ids,
            txtout: out.states,
            astout,
            state: out.last,
            txt_cache: out.cache,
            ast_cache,
            trace,
        })
    }

    /// Runs the decoder and head for comment prefixes (`comlen` indices each)
    /// attached to encoded methods `rows`.
    pub fn decode(
        &self,
        enc: &Encoded<T>,
        rows: &[usize],
        prefixes: &[usize],
    ) -> Result<Decoded<T>, ModelError> {
        let c = &self.config;
        let m = rows.len();
        if m == 0 || prefixes.len() != m * c.comlen {
            return Err(ModelError::Input(format!(
                "{} prefix indices for {m} rows of {} slots",
                prefixes.len(),
                c.comlen
            )));
        }
        if let Some(&r) = rows.iter().find(|&&r| r >= enc.batch) {
            return Err(ModelError::Input(format!(
                "row {r} outside encoded batch of {}",
                enc.batch
            )));
        }
        let mut trace = ShapeTrace::new();
        let txtout = gather_rows(&enc.txtout, rows);
        let astout = enc.astout.as_ref().map(|a| gather_rows(a, rows));
        let state = gather_rows(&enc.state, rows);

        let emb = self
            .com_embedding()
            .forward(&self.params, prefixes, m, c.comlen)?;
        trace.push(("com_embedding", emb.shape().to_vec()));
        let dec = self.gru("dec_gru").forward(&self.params, &emb, &state)?;
        let decout = dec.states;
        trace.push(("dec_gru.states", decout.shape().to_vec()));

        let txt_attn = softmax_rows(&batched_dot(&decout, &txtout, (2, 2))?);
        trace.push(("txt_attn", txt_attn.shape().to_vec()));
        let txt_context = batched_dot(&txt_attn, &txtout, (2, 1))?;
        trace.push(("txt_context", txt_context.shape().to_vec()));

        let (ast_attn, context) = match &astout {
            Some(astout) => {
                let ast_attn = softmax_rows(&batched_dot(&decout, astout, (2, 2))?);
                trace.push(("ast_attn", ast_attn.shape().to_vec()));
                let ast_context = batched_dot(&ast_attn, astout, (2, 1))?;
                trace.push(("ast_context", ast_context.shape().to_vec()));
                (
                    Some(ast_attn),
                    concatenate_lastaxis(&[&txt_context, &ast_context, &decout])?,
                )
            }
            None => (None, concatenate_lastaxis(&[&txt_context, &decout])?),
        };
        trace.push(("context", context.shape().to_vec()));

        let hidden = relu(&self.td_dense().forward(&self.params, &context)?);
        trace.push(("td_dense", hidden.shape().to_vec()));
        let flat = flatten(&hidden)?;
        trace.push(("flatten", flat.shape().to_vec()));
        let probs = softmax_rows(&self.out_dense().forward(&self.params, &flat)?);
        trace.push(("probs", probs.shape().to_vec()));
        probs.check_finite("output distribution")?;

        Ok(Decoded {
            probs,
            txt_attn,
            ast_attn,
            trace,
            rows: rows.to_vec(),
            prefixes: prefixes.to_vec(),
            txtout,
            astout,
            dec_cache: dec.cache,
            decout,
            context,
            hidden,
            flat,
        })
    }

    /// Encodes `inputs` and decodes one prefix per input.
    pub fn forward(
        &self,
        inputs: &[EncoderInput],
        prefixes: &[usize],
    ) -> Result<Decoded<T>, ModelError> {
        let enc = self.encode(inputs)?;
        let rows: Vec<usize> = (0..inputs.len()).collect();
        let mut dec = self.decode(&enc, &rows, prefixes)?;
        let mut trace = enc.trace;
        trace.append(&mut dec.trace);
        dec.trace = trace;
        Ok(dec)
    }

    /// Mean cross-entropy of `targets` given prefixes on encoded `rows`.
    /// With `grads`, also accumulates the gradient of that mean.
    pub fn loss(
        &self,
        inputs: &[EncoderInput],
        rows: &[usize],
        prefixes: &[usize],
        targets: &[usize],
        grads: Option<&mut Gradients<T>>,
    ) -> Result<T, ModelError> {
        let enc = self.encode(inputs)?;
        let dec = self.decode(&enc, rows, prefixes)?;
        let (loss, dlogits) = cross_entropy(&dec.probs, targets)?;
        if let Some(grads) = grads {
            self.backward(&enc, &dec, &dlogits, grads)?;
        }
        Ok(loss)
    }

    /// Backpropagates a gradient on the pre-softmax output logits through
    /// the head, decoder and encoders, accumulating into `grads`.
    pub fn backward(
        &self,
        enc: &Encoded<T>,
        dec: &Decoded<T>,
        dlogits: &Tensor<T>,
        grads: &mut Gradients<T>,
    ) -> Result<(), ModelError> {
        let c = &self.config;
        let m = dec.rows.len();
        let dflat = self
            .out_dense()
            .backward(&self.params, &dec.flat, dlogits, grads)?;
        let dhidden = dflat.reshape(&[m, c.comlen, c.rnndims])?;
        let dpre = relu_backward(&dec.hidden, &dhidden);
        let dcontext = self
            .td_dense()
            .backward(&self.params, &dec.context, &dpre, grads)?;

        let widths = vec![c.rnndims; c.context_width() / c.rnndims];
        let mut parts = split_lastaxis(&dcontext, &widths);
        let mut d_decout = parts.pop().unwrap();

        let mut attend_backward = |attn: &Tensor<T>,
                                   states: &Tensor<T>,
                                   d_ctx: &Tensor<T>|
         -> Result<Tensor<T>, ModelError> {
            let (d_attn, mut d_states) = batched_dot_backward(attn, states, (2, 1), d_ctx)?;
            let d_scores = softmax_rows_backward(attn, &d_attn);
            let (d_dec, d_states2) = batched_dot_backward(&dec.decout, states, (2, 2), &d_scores)?;
            d_decout.add_assign(&d_dec);
            d_states.add_assign(&d_states2);
            Ok(d_states)
        };
        let d_txtout_rows = attend_backward(&dec.txt_attn, &dec.txtout, &parts[0])?;
        let d_astout_rows = match (&dec.ast_attn, &dec.astout) {
            (Some(attn), Some(astout)) => Some(attend_backward(attn, astout, &parts[1])?),
            _ => None,
        };

        let (d_comemb, d_state_rows) =
            self.gru("dec_gru")
                .backward(&self.params, &dec.dec_cache, &d_decout, None, grads)?;
        self.com_embedding()
            .backward(&dec.prefixes, &d_comemb, grads);

        let mut d_txtout = Tensor::zeros(enc.txtout.shape());
        scatter_add_rows(&d_txtout_rows, &dec.rows, &mut d_txtout);
        let mut d_state = Tensor::zeros(enc.state.shape());
        scatter_add_rows(&d_state_rows, &dec.rows, &mut d_state);

        let (d_txtemb, d_txt_h0) = self.gru("txt_gru").backward(
            &self.params,
            &enc.txt_cache,
            &d_txtout,
            Some(&d_state),
            grads,
        )?;
        self.txt_embedding()
            .backward(&enc.txt_ids, &d_txtemb, grads);

        if let (Some(rows_grad), Some(astout), Some(cache), Some(ids)) =
            (d_astout_rows, &enc.astout, &enc.ast_cache, &enc.ast_ids)
        {
            let mut d_astout = Tensor::zeros(astout.shape());
            scatter_add_rows(&rows_grad, &dec.rows, &mut d_astout);
            let (d_astemb, _) = self.gru("ast_gru").backward(
                &self.params,
                cache,
                &d_astout,
                Some(&d_txt_h0),
                grads,
            )?;
            self.ast_embedding().backward(ids, &d_astemb, grads);
        }
        Ok(())
    }
}
