use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Adadelta;
use crate::syntax::{SyntaxDims, SyntaxMode};

/// What goes into each token's input vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub word_dim: usize,
    pub predicate_dim: usize,
    pub syntax: SyntaxMode,
    /// Width of externally supplied per-token vectors; 0 disables them.
    pub external_dim: usize,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            word_dim: 100,
            predicate_dim: 100,
            syntax: SyntaxMode::None,
            external_dim: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub input: InputConfig,
    pub syntax_dims: SyntaxDims,
    /// LSTM hidden size.
    pub hidden: usize,
    /// Stacked LSTM layers with alternating directions; the top one runs
    /// backwards.
    pub layers: usize,
    /// Embeddings start in U(-embed_init, embed_init).
    pub embed_init: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input: InputConfig::default(),
            syntax_dims: SyntaxDims::default(),
            hidden: 300,
            layers: 4,
            embed_init: 0.01,
        }
    }
}

impl ModelConfig {
    /// Width of `x_i`.
    pub fn input_dim(&self) -> usize {
        self.input.word_dim
            + self.input.predicate_dim
            + self.syntax_dims.output_dim(self.input.syntax)
            + self.input.external_dim
    }

    pub fn validate(&self) -> Result<()> {
        let i = &self.input;
        let d = &self.syntax_dims;
        let mut bad = Vec::new();
        if i.word_dim == 0 {
            bad.push("word_dim");
        }
        if i.predicate_dim == 0 {
            bad.push("predicate_dim");
        }
        if self.hidden == 0 {
            bad.push("hidden");
        }
        if self.layers == 0 {
            bad.push("layers");
        }
        match i.syntax {
            SyntaxMode::None => {}
            SyntaxMode::TreeGru => {
                if d.label_dim == 0 {
                    bad.push("label_dim");
                }
                if d.tree_gru_hidden == 0 {
                    bad.push("tree_gru_hidden");
                }
            }
            SyntaxMode::Sdp => {
                if d.label_dim == 0 {
                    bad.push("label_dim");
                }
            }
            SyntaxMode::Tpf => {
                if d.tpf_dim == 0 {
                    bad.push("tpf_dim");
                }
            }
            SyntaxMode::Pe => {
                if d.label_dim == 0 {
                    bad.push("label_dim");
                }
                if d.pattern_dim == 0 {
                    bad.push("pattern_dim");
                }
            }
        }
        if !(self.embed_init.is_finite() && self.embed_init >= 0.0) {
            bad.push("embed_init");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("must be positive: {}", bad.join(", "))))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: Adadelta,
    /// Global gradient-norm bound.
    pub clip: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Stop once the training set is tagged perfectly.
    pub stop_at_perfect_train: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Adadelta::default(),
            clip: 1.0,
            batch_size: 80,
            epochs: 500,
            seed: 1,
            stop_at_perfect_train: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        let o = &self.optimizer;
        if !(0.0..1.0).contains(&o.rho) || o.eps <= 0.0 || o.lr <= 0.0 {
            return Err(Error::Config(format!("bad optimizer settings {o:?}")));
        }
        if self.clip <= 0.0 {
            return Err(Error::Config("clip must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_dims() {
        let mut c = ModelConfig::default();
        assert_eq!(c.input_dim(), 200);
        c.input.syntax = SyntaxMode::Tpf;
        assert_eq!(c.input_dim(), 300);
        c.input.syntax = SyntaxMode::Pe;
        assert_eq!(c.input_dim(), 600);
        c.input.syntax = SyntaxMode::TreeGru;
        c.input.external_dim = 1024;
        assert_eq!(c.input_dim(), 1424);
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c: ModelConfig = serde_json::from_str(r#"{"hidden": 8, "input": {"syntax": "tree-gru"}}"#).unwrap();
        assert_eq!(c.hidden, 8);
        assert_eq!(c.input.syntax, SyntaxMode::TreeGru);
        assert_eq!(c.input.word_dim, 100);
        assert!(serde_json::from_str::<ModelConfig>(r#"{"hiden": 8}"#).is_err());
    }

    #[test]
    fn zero_dims_rejected() {
        let mut c = ModelConfig::default();
        c.hidden = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
