use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tape::Gradients;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Format tag written into parameter checkpoints.
pub const PARAM_FORMAT: &str = "synsrl-params";
const PARAM_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub(crate) fn index(self) -> usize {
        self.0
    }

    pub(crate) fn from_index(i: usize) -> Self {
        ParamId(i)
    }
}

/// A named tensor with its gradient buffer and Adadelta running averages.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    name: String,
    pub(super) value: Tensor,
    pub(super) grad: Vec<f64>,
    pub(super) sq_grad: Vec<f64>,
    pub(super) sq_update: Vec<f64>,
}

impl Parameter {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self) -> &Tensor {
        &self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    /// Running average of squared gradients.
    pub fn sq_grad(&self) -> &[f64] {
        &self.sq_grad
    }

    /// Running average of squared updates.
    pub fn sq_update(&self) -> &[f64] {
        &self.sq_update
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterStore {
    params: Vec<Parameter>,
    index: HashMap<String, usize>,
    has_grads: bool,
}

#[derive(Serialize, Deserialize)]
struct ParamRecord {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ParamFile {
    format: String,
    version: u32,
    params: Vec<ParamRecord>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::DuplicateParameter(name));
        }
        let n = value.len();
        self.index.insert(name.clone(), self.params.len());
        self.params.push(Parameter {
            name,
            value,
            grad: vec![0.0; n],
            sq_grad: vec![0.0; n],
            sq_update: vec![0.0; n],
        });
        Ok(ParamId(self.params.len() - 1))
    }

    pub fn id(&self, name: &str) -> Result<ParamId> {
        self.index
            .get(name)
            .map(|&i| ParamId(i))
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub(crate) fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.params[id.0].grad
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut [f64] {
        self.has_grads = true;
        &mut self.params[id.0].grad
    }

    /// Whether gradients were accumulated since the last update.
    pub fn has_grads(&self) -> bool {
        self.has_grads
    }

    /// Adds the parameter gradients of one backward pass.
    pub fn accumulate(&mut self, grads: &Gradients) {
        for (id, g) in grads.params() {
            for (d, x) in self.params[id.0].grad.iter_mut().zip(g) {
                *d += x;
            }
        }
        self.has_grads = true;
    }

    /// Adds `grad` to one parameter's gradient buffer.
    pub fn accumulate_param(&mut self, id: ParamId, grad: &[f64]) {
        for (d, x) in self.params[id.0].grad.iter_mut().zip(grad) {
            *d += x;
        }
        self.has_grads = true;
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
        self.has_grads = false;
    }

    /// Global L2 norm over every gradient entry.
    pub fn grad_norm(&self) -> f64 {
        self.params
            .iter()
            .flat_map(|p| p.grad.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale_grads(&mut self, factor: f64) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g *= factor);
        }
    }

    /// Values only; optimizer state is not persisted.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.in_file(path))
    }

    fn to_file(&self) -> ParamFile {
        ParamFile {
            format: PARAM_FORMAT.to_string(),
            version: PARAM_VERSION,
            params: self
                .params
                .iter()
                .map(|p| ParamRecord {
                    name: p.name.clone(),
                    shape: p.value.shape().to_vec(),
                    values: p.value.data().to_vec(),
                })
                .collect(),
        }
    }

    fn from_file(file: ParamFile) -> Result<Self> {
        if file.format != PARAM_FORMAT || file.version != PARAM_VERSION {
            return Err(Error::Incompatible(format!(
                "expected {} v{}, found {} v{}",
                PARAM_FORMAT, PARAM_VERSION, file.format, file.version
            )));
        }
        let mut store = ParameterStore::new();
        for r in file.params {
            store.add(r.name, Tensor::new(r.shape, r.values)?)?;
        }
        Ok(store)
    }
}

impl Serialize for ParameterStore {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_file().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ParameterStore {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = ParamFile::deserialize(deserializer)?;
        ParameterStore::from_file(file).map_err(serde::de::Error::custom)
    }
}
