//! Greedy and ensemble decoding.

use super::InferError;
use crate::corpus::{END_INDEX, PAD_INDEX, START_INDEX};
use crate::models::{Encoded, EncoderInput, Model};
use crate::nn::Real;

/// Anything that scores the next comment word given encoder inputs and a
/// comment prefix. Models implement it; tests plug in stubs.
pub trait NextWord {
    type Encoded;

    fn comlen(&self) -> usize;
    fn vocab_size(&self) -> usize;
    fn encode_batch(&self, inputs: &[EncoderInput]) -> Result<Self::Encoded, InferError>;
    /// Next-word distributions, row-major `[rows.len(), vocab_size]`, for
    /// `comlen`-long `prefixes` attached to encoded `rows`.
    fn next_probs(
        &self,
        enc: &Self::Encoded,
        rows: &[usize],
        prefixes: &[usize],
    ) -> Result<Vec<f64>, InferError>;
}

impl<T: Real> NextWord for Model<T> {
    type Encoded = Encoded<T>;

    fn comlen(&self) -> usize {
        self.config().comlen
    }

    fn vocab_size(&self) -> usize {
        self.config().comvocabsize
    }

    fn encode_batch(&self, inputs: &[EncoderInput]) -> Result<Encoded<T>, InferError> {
        Ok(self.encode(inputs)?)
    }

    fn next_probs(
        &self,
        enc: &Encoded<T>,
        rows: &[usize],
        prefixes: &[usize],
    ) -> Result<Vec<f64>, InferError> {
        Ok(self
            .decode(enc, rows, prefixes)?
            .probs
            .data()
            .iter()
            .map(|p| p.as_f64())
            .collect())
    }
}

/// Highest-probability index other than padding and start; ties go to the
/// lowest index.
pub fn pick_word<T: PartialOrd + Copy>(probs: &[T]) -> usize {
    let mut best = None;
    for (i, &p) in probs.iter().enumerate() {
        if i == PAD_INDEX || i == START_INDEX {
            continue;
        }
        if best.is_none_or(|(_, b)| p > b) {
            best = Some((i, p));
        }
    }
    best.map_or(END_INDEX, |(i, _)| i)
}

/// Prefix and output bookkeeping shared by both decoders.
struct Beamless {
    comlen: usize,
    prefixes: Vec<usize>,
    out: Vec<Vec<usize>>,
    active: Vec<usize>,
}

impl Beamless {
    fn new(n: usize, comlen: usize) -> Self {
        let mut prefixes = vec![PAD_INDEX; n * comlen];
        for i in 0..n {
            prefixes[i * comlen] = START_INDEX;
        }
        Beamless {
            comlen,
            prefixes,
            out: vec![Vec::new(); n],
            active: (0..n).collect(),
        }
    }

    fn active_prefixes(&self) -> Vec<usize> {
        self.active
            .iter()
            .flat_map(|&i| {
                self.prefixes[i * self.comlen..(i + 1) * self.comlen]
                    .iter()
                    .copied()
            })
            .collect()
    }

    /// Records the chosen words for step `t` and retires finished rows.
    fn advance(&mut self, t: usize, chosen: &[usize]) {
        let mut still = Vec::with_capacity(self.active.len());
        for (&i, &w) in self.active.iter().zip(chosen) {
            if w == END_INDEX {
                continue;
            }
            self.out[i].push(w);
            self.prefixes[i * self.comlen + t] = w;
            still.push(i);
        }
        self.active = still;
    }
}

/// Greedy decoding: starting from `<s>`, append the best next word until
/// the end token or until the prefix is full. The result holds word indices
/// without delimiters.
pub fn greedy_decode<M: NextWord>(
    model: &M,
    inputs: &[EncoderInput],
) -> Result<Vec<Vec<usize>>, InferError> {
    let (comlen, vocab) = (model.comlen(), model.vocab_size());
    let enc = model.encode_batch(inputs)?;
    let mut st = Beamless::new(inputs.len(), comlen);
    for t in 1..comlen {
        if st.active.is_empty() {
            break;
        }
        let probs = model.next_probs(&enc, &st.active, &st.active_prefixes())?;
        let chosen: Vec<usize> = probs.chunks(vocab).map(pick_word).collect();
        st.advance(t, &chosen);
    }
    Ok(st.out)
}

/// Element-wise mean of equally long vectors.
pub fn average_distributions(members: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = members.first() else {
        return Vec::new();
    };
    let mut mean = vec![0.0; first.len()];
    for m in members {
        for (a, p) in mean.iter_mut().zip(m) {
            *a += p;
        }
    }
    let k = members.len() as f64;
    mean.iter_mut().for_each(|a| *a /= k);
    mean
}

/// Ensemble decoding: at every step the members' next-word distributions
/// are averaged element-wise, the best word of the mean is chosen, and that
/// word extends every member's prefix. `inputs[k]` are member `k`'s inputs.
pub fn ensemble_decode<M: NextWord>(
    models: &[&M],
    inputs: &[Vec<EncoderInput>],
) -> Result<Vec<Vec<usize>>, InferError> {
    let first = models
        .first()
        .ok_or_else(|| InferError::Config("an ensemble needs at least one model".into()))?;
    let (comlen, vocab) = (first.comlen(), first.vocab_size());
    for m in models {
        if m.vocab_size() != vocab || m.comlen() != comlen {
            return Err(InferError::VocabMismatch {
                expected: (vocab, comlen),
                found: (m.vocab_size(), m.comlen()),
            });
        }
    }
    if inputs.len() != models.len() || inputs.iter().any(|x| x.len() != inputs[0].len()) {
        return Err(InferError::Config(
            "each ensemble member needs inputs for the same methods".into(),
        ));
    }
    let encoded: Vec<M::Encoded> = models
        .iter()
        .zip(inputs)
        .map(|(m, x)| m.encode_batch(x))
        .collect::<Result<_, _>>()?;
    let mut st = Beamless::new(inputs[0].len(), comlen);
    for t in 1..comlen {
        if st.active.is_empty() {
            break;
        }
        let prefixes = st.active_prefixes();
        let members: Vec<Vec<f64>> = models
            .iter()
            .zip(&encoded)
            .map(|(m, enc)| m.next_probs(enc, &st.active, &prefixes))
            .collect::<Result<_, _>>()?;
        let mean = average_distributions(&members);
        let chosen: Vec<usize> = mean.chunks(vocab).map(pick_word).collect();
        st.advance(t, &chosen);
    }
    Ok(st.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Returns a fixed distribution per step, by prefix length.
    struct Stub {
        steps: Vec<Vec<f64>>,
    }

    impl NextWord for Stub {
        type Encoded = ();

        fn comlen(&self) -> usize {
            4
        }

        fn vocab_size(&self) -> usize {
            self.steps[0].len()
        }

        fn encode_batch(&self, _: &[EncoderInput]) -> Result<(), InferError> {
            Ok(())
        }

        fn next_probs(
            &self,
            _: &(),
            rows: &[usize],
            prefixes: &[usize],
        ) -> Result<Vec<f64>, InferError> {
            let mut out = Vec::new();
            for (r, p) in prefixes.chunks(4).enumerate() {
                assert!(r < rows.len());
                let known = p.iter().take_while(|&&i| i != PAD_INDEX).count();
                out.extend(&self.steps[known - 1]);
            }
            Ok(out)
        }
    }

    fn input() -> Vec<EncoderInput> {
        vec![EncoderInput {
            primary: vec![0],
            ast: None,
        }]
    }

    #[test]
    fn pick_word_masks_and_breaks_ties_low() {
        assert_eq!(pick_word(&[0.9, 0.0, 0.05, 0.05]), 3);
        assert_eq!(pick_word(&[0.2f32; 6]), 1);
        assert_eq!(pick_word(&[0.1, 0.2, 0.3, 0.2, 0.2]), 1);
        assert_eq!(pick_word(&[0.5, 0.5]), 1);
    }

    #[test]
    fn greedy_stops_at_end_or_length() {
        // vocab: 0 pad, 1 unk, 2 <s>, 3 </s>, 4 x, 5 y
        let s = Stub {
            steps: vec![
                vec![0.0, 0.0, 0.0, 0.1, 0.8, 0.1],
                vec![0.0, 0.0, 0.0, 0.1, 0.1, 0.8],
                vec![0.0, 0.0, 0.0, 0.1, 0.8, 0.1],
            ],
        };
        assert_eq!(greedy_decode(&s, &input()).unwrap(), [vec![4, 5, 4]]);
        let ends = Stub {
            steps: vec![vec![0.5, 0.0, 0.4, 0.5, 0.0, 0.0]; 3],
        };
        assert_eq!(
            greedy_decode(&ends, &input()).unwrap(),
            [Vec::<usize>::new()]
        );
    }

    #[test]
    fn two_stub_ensemble_uses_the_mean() {
        let a = Stub {
            steps: vec![
                vec![0.0, 0.0, 0.0, 0.1, 0.6, 0.3],
                vec![0.0, 0.0, 0.0, 0.7, 0.1, 0.2],
                vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            ],
        };
        let b = Stub {
            steps: vec![
                vec![0.0, 0.0, 0.0, 0.1, 0.0, 0.9],
                vec![0.0, 0.0, 0.0, 0.1, 0.5, 0.4],
                vec![0.0, 0.0, 0.0, 0.2, 0.0, 0.8],
            ],
        };
        // Step 1 means: x 0.30, y 0.60 -> y. Step 2: </s> 0.40, x 0.30, y 0.30 -> </s>.
        assert_eq!(greedy_decode(&a, &input()).unwrap(), [vec![4]]);
        assert_eq!(greedy_decode(&b, &input()).unwrap(), [vec![5, 4, 5]]);
        assert_eq!(
            ensemble_decode(&[&a, &b], &[input(), input()]).unwrap(),
            [vec![5]]
        );
        assert_eq!(
            ensemble_decode(&[&a], &[input()]).unwrap(),
            greedy_decode(&a, &input()).unwrap()
        );
    }

    #[test]
    fn ensemble_checks_members() {
        let a = Stub {
            steps: vec![vec![0.0, 0.0, 0.0, 1.0]],
        };
        let b = Stub {
            steps: vec![vec![0.0, 0.0, 0.0, 1.0, 0.0]],
        };
        assert!(matches!(
            ensemble_decode(&[&a, &b], &[input(), input()]),
            Err(InferError::VocabMismatch { .. })
        ));
        assert!(matches!(
            ensemble_decode::<Stub>(&[], &[]),
            Err(InferError::Config(_))
        ));
        assert!(matches!(
            ensemble_decode(&[&a, &a], &[input()]),
            Err(InferError::Config(_))
        ));
    }
}
