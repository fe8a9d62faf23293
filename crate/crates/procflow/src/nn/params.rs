//! Named parameter store with a stable insertion order.
//!
//! The order tensors are inserted is the order they are iterated, updated by
//! optimizers, and serialized, so a given architecture always produces the
//! same layout.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, Default)]
pub struct NetParams {
    entries: Vec<(String, Tensor)>,
    index: HashMap<String, usize>,
}

impl NetParams {
    pub fn new() -> Self {
        NetParams::default()
    }

    /// Register a tensor under `name`; names are unique.
    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) {
        let name = name.into();
        assert!(
            !self.index.contains_key(&name),
            "duplicate parameter name {name}"
        );
        self.index.insert(name.clone(), self.entries.len());
        self.entries.push((name, tensor));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Panics on unknown names: parameter wiring is a programming invariant
    /// of the architecture builders, not a runtime input.
    pub fn get(&self, name: &str) -> &Tensor {
        let i = *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        &self.entries[i].1
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Tensor {
        let i = *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        &mut self.entries[i].1
    }

    pub fn try_get(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.entries[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    /// Same names and shapes, all entries zero.
    pub fn zeros_like(&self) -> NetParams {
        let mut out = NetParams::new();
        for (name, t) in &self.entries {
            out.insert(name.clone(), Tensor::zeros(t.rows(), t.cols()));
        }
        out
    }

    pub fn fill(&mut self, v: f64) {
        for (_, t) in self.entries.iter_mut() {
            t.fill(v);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for (_, t) in self.entries.iter_mut() {
            t.scale(s);
        }
    }

    /// self += s * other; stores must have identical layouts.
    pub fn add_scaled(&mut self, other: &NetParams, s: f64) {
        assert_eq!(self.entries.len(), other.entries.len(), "param layout");
        for ((na, ta), (nb, tb)) in self.entries.iter_mut().zip(&other.entries) {
            assert_eq!(na, nb, "param layout");
            ta.add_scaled(tb, s);
        }
    }

    pub fn n_values(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    pub fn validate_finite(&self) -> Result<()> {
        for (name, t) in &self.entries {
            if t.data().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("parameter tensor {name}")));
            }
        }
        Ok(())
    }
}
