use std::collections::HashMap;

use super::spectral::SpectralNormState;
use crate::autodiff::{Gradients, Graph, ParamRef, Scalar, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

/// A named trainable tensor with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Parameter<T> {
    pub name: String,
    /// Logical dims, e.g. `[out, in, kernel]` for a conv weight. The value
    /// tensor is the first dim by the product of the rest.
    pub dims: Vec<usize>,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
    pub spectral: Option<SpectralNormState<T>>,
}

impl<T: Scalar> Parameter<T> {
    pub fn numel(&self) -> usize {
        self.value.len()
    }
}

/// Owns the parameters of one model (generator or discriminator).
///
/// `key` tags every leaf this store binds into a graph so gradients can be
/// routed back even when several stores share one tape.
#[derive(Debug, Clone)]
pub struct ParamStore<T> {
    key: u32,
    params: Vec<Parameter<T>>,
    by_name: HashMap<String, usize>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new(key: u32) -> Self {
        Self {
            key,
            params: Vec::new(),
            by_name: HashMap::new(),
        }
    }

    pub fn key(&self) -> u32 {
        self.key
    }

    pub fn add(&mut self, name: impl Into<String>, dims: Vec<usize>, values: Vec<T>) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::invalid(format!("duplicate parameter name {name}")));
        }
        let rows = *dims.first().ok_or_else(|| Error::invalid("parameter needs dims"))?;
        let cols: usize = dims[1..].iter().product::<usize>().max(1);
        let value = Tensor::from_vec(rows, cols, values)?;
        let grad = Tensor::zeros(rows, cols);
        let id = self.params.len();
        self.by_name.insert(name.clone(), id);
        self.params.push(Parameter {
            name,
            dims,
            value,
            grad,
            spectral: None,
        });
        Ok(ParamId(id))
    }

    pub fn set_spectral(&mut self, id: ParamId, state: SpectralNormState<T>) {
        self.params[id.0].spectral = Some(state);
    }

    pub fn get(&self, id: ParamId) -> &Parameter<T> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter<T> {
        &mut self.params[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter<T>> {
        self.params.iter_mut()
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.params.iter().map(Parameter::numel).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(T::zero());
        }
    }

    /// Adds the gradients of this store's leaves on a tape into the
    /// accumulators.
    pub fn accumulate(&mut self, grads: &Gradients<T>) {
        for (r, g) in grads.params() {
            if r.store == self.key {
                self.params[r.index].grad.add_assign(g);
            }
        }
    }

    /// Advances every spectral-norm estimate by one power iteration.
    pub fn power_iterate(&mut self) {
        for p in &mut self.params {
            if let Some(s) = &mut p.spectral {
                s.power_iterate(&p.value);
            }
        }
    }

    /// Binds parameters into a graph. Frozen binding records leaves that
    /// take no gradient.
    pub fn binder(&self, trainable: bool) -> Binder<'_, T> {
        Binder {
            store: self,
            trainable,
        }
    }

    /// Copy converted to another precision (spectral state included).
    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            key: self.key,
            params: self
                .params
                .iter()
                .map(|p| Parameter {
                    name: p.name.clone(),
                    dims: p.dims.clone(),
                    value: p.value.cast(),
                    grad: p.grad.cast(),
                    spectral: p.spectral.as_ref().map(|s| SpectralNormState {
                        u: s.u.iter().map(|&x| U::from_f64(x.as_f64())).collect(),
                        v: s.v.iter().map(|&x| U::from_f64(x.as_f64())).collect(),
                    }),
                })
                .collect(),
            by_name: self.by_name.clone(),
        }
    }
}

pub struct Binder<'a, T> {
    store: &'a ParamStore<T>,
    trainable: bool,
}

impl<T: Scalar> Binder<'_, T> {
    pub fn store(&self) -> &ParamStore<T> {
        self.store
    }

    /// Raw parameter leaf.
    pub fn bind(&self, g: &mut Graph<T>, id: ParamId) -> Var {
        let p = &self.store.params[id.0];
        g.param(
            p.value.clone(),
            ParamRef {
                store: self.store.key,
                index: id.0,
            },
            self.trainable,
        )
    }

    /// Weight leaf, spectrally normalized when the parameter carries a
    /// power-iteration state.
    pub fn weight(&self, g: &mut Graph<T>, id: ParamId) -> Result<Var> {
        let w = self.bind(g, id);
        match &self.store.params[id.0].spectral {
            Some(s) => g.spectral_norm(w, &s.u, &s.v),
            None => Ok(w),
        }
    }
}
