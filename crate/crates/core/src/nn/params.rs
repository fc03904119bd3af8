use std::collections::BTreeMap;

use super::{NnError, Real, Tensor};

/// One trainable tensor and its gradient accumulator.
#[derive(Clone, Debug)]
pub struct Param<T: Real> {
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

/// Named trainable tensors. Iteration order is the lexicographic name order,
/// which fixes the order of initialization, reductions and serialization.
#[derive(Clone, Debug, Default)]
pub struct ParamSet<T: Real> {
    params: BTreeMap<String, Param<T>>,
}

impl<T: Real> ParamSet<T> {
    pub fn new() -> Self {
        ParamSet {
            params: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, value: Tensor<T>) -> Result<(), NnError> {
        if self.params.contains_key(name) {
            return Err(NnError::DuplicateParam(name.to_string()));
        }
        let grad = Tensor::zeros(value.shape());
        self.params.insert(name.to_string(), Param { value, grad });
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn value(&self, name: &str) -> Result<&Tensor<T>, NnError> {
        self.params
            .get(name)
            .map(|p| &p.value)
            .ok_or_else(|| NnError::MissingParam(name.to_string()))
    }

    pub fn value_mut(&mut self, name: &str) -> Result<&mut Tensor<T>, NnError> {
        self.params
            .get_mut(name)
            .map(|p| &mut p.value)
            .ok_or_else(|| NnError::MissingParam(name.to_string()))
    }

    /// Replaces a value, keeping the registered shape.
    pub fn set_value(&mut self, name: &str, value: Tensor<T>) -> Result<(), NnError> {
        let slot = self.value_mut(name)?;
        if slot.shape() != value.shape() {
            return Err(NnError::Shape(format!(
                "{name}: expected {:?}, got {:?}",
                slot.shape(),
                value.shape()
            )));
        }
        *slot = value;
        Ok(())
    }

    pub fn grad(&self, name: &str) -> Result<&Tensor<T>, NnError> {
        self.params
            .get(name)
            .map(|p| &p.grad)
            .ok_or_else(|| NnError::MissingParam(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param<T>)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param<T>)> {
        self.params.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.values().map(|p| p.value.len()).sum()
    }

    /// Adds a gradient store into the accumulators.
    pub fn accumulate(&mut self, grads: &Gradients<T>) -> Result<(), NnError> {
        for (name, g) in grads.iter() {
            let p = self
                .params
                .get_mut(name)
                .ok_or_else(|| NnError::MissingParam(name.to_string()))?;
            if p.grad.shape() != g.shape() {
                return Err(NnError::Shape(format!(
                    "gradient shape mismatch for {name}"
                )));
            }
            p.grad.add_assign(g);
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for p in self.params.values_mut() {
            p.grad.fill(T::zero());
        }
    }

    pub fn value_norms(&self) -> Vec<(String, f64)> {
        self.params
            .iter()
            .map(|(k, p)| (k.clone(), p.value.norm()))
            .collect()
    }

    pub fn cast<U: Real>(&self) -> ParamSet<U> {
        ParamSet {
            params: self
                .params
                .iter()
                .map(|(k, p)| {
                    (
                        k.clone(),
                        Param {
                            value: p.value.cast(),
                            grad: p.grad.cast(),
                        },
                    )
                })
                .collect(),
        }
    }
}

/// Gradient store written by backward passes; created lazily per name.
#[derive(Clone, Debug, Default)]
pub struct Gradients<T: Real> {
    grads: BTreeMap<String, Tensor<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn new() -> Self {
        Gradients {
            grads: BTreeMap::new(),
        }
    }

    /// The accumulator for `name`, zero-initialised with `shape` on first use.
    pub fn entry(&mut self, name: &str, shape: &[usize]) -> &mut Tensor<T> {
        let t = self
            .grads
            .entry(name.to_string())
            .or_insert_with(|| Tensor::zeros(shape));
        debug_assert_eq!(t.shape(), shape);
        t
    }

    /// Removes the accumulator for `name` (zeros if absent); pair with [`Gradients::put`].
    pub fn take(&mut self, name: &str, shape: &[usize]) -> Tensor<T> {
        self.grads
            .remove(name)
            .unwrap_or_else(|| Tensor::zeros(shape))
    }

    pub fn put(&mut self, name: &str, grad: Tensor<T>) {
        self.grads.insert(name.to_string(), grad);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.grads.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.grads.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn merge(&mut self, other: &Gradients<T>) {
        for (name, g) in other.iter() {
            self.entry(name, g.shape()).add_assign(g);
        }
    }
}
