//! The tagger: word and predicate-indicator embeddings plus an optional
//! syntax vector per token, a stacked highway LSTM, and a softmax over
//! BIO tags decoded with constrained Viterbi.

mod config;
mod encoder;
mod ensemble;
mod train;

pub use config::{InputConfig, ModelConfig, TrainConfig};
pub use encoder::{encode, layer_is_forward, EncoderParams, LayerParams};
pub use ensemble::ensemble_predict;
pub use train::{mean_loss, train, EpochLog, TrainOutcome};

pub use crate::decode::sequence_score;

use std::collections::BTreeSet;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decode::{build_transition_mask, viterbi_indices, TagSet, TransitionMask};
use crate::error::{Error, Result};
use crate::numerics::{NodeId, ParamId, ParameterStore, Tape, Tensor};
use crate::syntax::SyntaxEncoder;
use crate::treebank::{bio_to_spans, spans_to_bio, DependencyTree, PredicateFrame, Sentence};
use crate::vocab::Vocab;

/// One sentence with its tree, gold frames and optional external vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub sentence: Sentence,
    pub tree: Option<DependencyTree>,
    pub frames: Vec<PredicateFrame>,
    pub external: Option<Vec<Vec<f64>>>,
}

impl Instance {
    pub fn new(
        sentence: Sentence,
        tree: Option<DependencyTree>,
        mut frames: Vec<PredicateFrame>,
    ) -> Result<Self> {
        let n = sentence.len();
        if let Some(t) = &tree {
            if t.len() != n {
                return Err(Error::Input(format!(
                    "tree has {} tokens, sentence has {}",
                    t.len(),
                    n
                )));
            }
        }
        frames.sort_by_key(|f| f.predicate);
        for f in &frames {
            f.check_len(n)?;
        }
        if frames.windows(2).any(|w| w[0].predicate == w[1].predicate) {
            return Err(Error::Input("two frames for one predicate".into()));
        }
        Ok(Instance {
            sentence,
            tree,
            frames,
            external: None,
        })
    }

    pub fn with_external(mut self, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if vectors.len() != self.sentence.len() {
            return Err(Error::Input(format!(
                "{} external vectors for {} tokens",
                vectors.len(),
                self.sentence.len()
            )));
        }
        self.external = Some(vectors);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.sentence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentence.is_empty()
    }

    pub fn predicates(&self) -> Vec<usize> {
        self.frames.iter().map(|f| f.predicate).collect()
    }
}

/// Word, relation-label and role inventories of a model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabularies {
    pub words: Vocab,
    pub labels: Vocab,
    /// Argument roles plus `V`, sorted.
    pub roles: Vec<String>,
}

impl Vocabularies {
    pub fn from_corpus(corpus: &[Instance]) -> Self {
        let mut words = Vocab::new();
        let mut labels = Vocab::new();
        let mut roles = BTreeSet::from(["V".to_string()]);
        for inst in corpus {
            for w in inst.sentence.tokens() {
                words.insert(w);
            }
            if let Some(t) = &inst.tree {
                for l in t.labels() {
                    labels.insert(l);
                }
            }
            for f in &inst.frames {
                roles.extend(f.spans.iter().map(|s| s.role.clone()));
            }
        }
        Vocabularies {
            words,
            labels,
            roles: roles.into_iter().collect(),
        }
    }
}

/// A complete tagger: configuration, vocabularies and weights.
#[derive(Clone, Debug)]
pub struct SrlModel {
    config: ModelConfig,
    vocab: Vocabularies,
    mask: TransitionMask,
    store: ParameterStore,
    words: ParamId,
    predicate: ParamId,
    syntax: SyntaxEncoder,
    encoder: EncoderParams,
    out_w: ParamId,
    out_b: ParamId,
}

const MODEL_FORMAT: &str = "synsrl-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    config: ModelConfig,
    vocab: Vocabularies,
    params: ParameterStore,
}

impl SrlModel {
    /// Freshly initialized model. Embeddings are uniform in
    /// `±embed_init`; matrices are Gaussian scaled by fan-in.
    pub fn new(config: ModelConfig, vocab: Vocabularies, seed: u64) -> Result<Self> {
        config.validate()?;
        let mask = build_transition_mask(&vocab.roles)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParameterStore::new();
        let init = config.embed_init;
        let i = &config.input;
        store.add(
            "input.words",
            Tensor::uniform(&[vocab.words.len(), i.word_dim], init, &mut rng),
        )?;
        store.add(
            "input.predicate",
            Tensor::uniform(&[2, i.predicate_dim], init, &mut rng),
        )?;
        SyntaxEncoder::register(
            &mut store,
            i.syntax,
            &config.syntax_dims,
            &vocab.labels,
            init,
            &mut rng,
        )?;
        EncoderParams::register(
            &mut store,
            "encoder",
            config.input_dim(),
            config.hidden,
            config.layers,
            &mut rng,
        )?;
        let tags = mask.len();
        store.add(
            "output.w",
            Tensor::gaussian(&[tags, config.hidden], 1.0 / (config.hidden as f64).sqrt(), &mut rng),
        )?;
        store.add("output.b", Tensor::zeros(&[tags]))?;
        Self::from_parts(config, vocab, store)
    }

    /// Attaches configuration and vocabularies to an existing store,
    /// checking every expected parameter and shape.
    pub fn from_parts(config: ModelConfig, vocab: Vocabularies, store: ParameterStore) -> Result<Self> {
        config.validate()?;
        let mask = build_transition_mask(&vocab.roles)?;
        let check = |name: &str, shape: &[usize]| -> Result<ParamId> {
            let id = store.id(name)?;
            if store.value(id).shape() != shape {
                return Err(Error::Incompatible(format!(
                    "{name} has shape {:?}, expected {:?}",
                    store.value(id).shape(),
                    shape
                )));
            }
            Ok(id)
        };
        let words = check("input.words", &[vocab.words.len(), config.input.word_dim])?;
        let predicate = check("input.predicate", &[2, config.input.predicate_dim])?;
        let out_w = check("output.w", &[mask.len(), config.hidden])?;
        let out_b = check("output.b", &[mask.len()])?;
        let syntax = SyntaxEncoder::bind(&store, config.input.syntax, &config.syntax_dims, &vocab.labels)?;
        let encoder = EncoderParams::bind(&store, "encoder", config.input_dim(), config.hidden, config.layers)?;
        Ok(SrlModel {
            config,
            vocab,
            mask,
            store,
            words,
            predicate,
            syntax,
            encoder,
            out_w,
            out_b,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabularies {
        &self.vocab
    }

    pub fn tagset(&self) -> &TagSet {
        self.mask.tagset()
    }

    pub fn mask(&self) -> &TransitionMask {
        &self.mask
    }

    pub fn store(&self) -> &ParameterStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParameterStore {
        &mut self.store
    }

    pub fn encoder(&self) -> &EncoderParams {
        &self.encoder
    }

    pub fn syntax(&self) -> &SyntaxEncoder {
        &self.syntax
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            params: self.store.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Incompatible(format!(
                "expected {} v{}, found {} v{}",
                MODEL_FORMAT, MODEL_VERSION, file.format, file.version
            )));
        }
        Self::from_parts(file.config, file.vocab, file.params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.in_file(path))
    }

    /// `x_i = emb_word(w_i) ⊕ emb_prd[i == p] ⊕ syn_i? ⊕ ext_i?`.
    pub fn build_input(
        &self,
        tape: &mut Tape,
        sentence: &Sentence,
        p: usize,
        syntax: Option<&[NodeId]>,
        external: Option<&[Vec<f64>]>,
    ) -> Result<Vec<NodeId>> {
        let n = sentence.len();
        if p >= n {
            return Err(Error::Input(format!("predicate {} outside sentence of length {}", p + 1, n)));
        }
        if let Some(s) = syntax {
            if s.len() != n {
                return Err(Error::Input(format!("{} syntax vectors for {} tokens", s.len(), n)));
            }
        }
        let ext_dim = self.config.input.external_dim;
        let external = match (ext_dim, external) {
            (0, _) => None,
            (_, None) => {
                return Err(Error::Input(format!(
                    "model expects {ext_dim}-dimensional external vectors"
                )))
            }
            (_, Some(e)) => {
                if e.len() != n {
                    return Err(Error::Input(format!("{} external vectors for {} tokens", e.len(), n)));
                }
                if let Some(v) = e.iter().find(|v| v.len() != ext_dim) {
                    return Err(Error::Input(format!(
                        "external vector of width {}, expected {}",
                        v.len(),
                        ext_dim
                    )));
                }
                Some(e)
            }
        };
        let words = tape.param(self.words);
        let pred = tape.param(self.predicate);
        let mut out = Vec::with_capacity(n);
        for (i, w) in sentence.tokens().iter().enumerate() {
            let mut parts = vec![
                tape.lookup(words, self.vocab.words.get(w))?,
                tape.lookup(pred, usize::from(i == p))?,
            ];
            if let Some(s) = syntax {
                parts.push(s[i]);
            }
            if let Some(e) = external {
                parts.push(tape.input(Tensor::vector(e[i].clone())));
            }
            out.push(tape.concat(&parts)?);
        }
        Ok(out)
    }

    /// Log-distribution over tags for one encoded token.
    pub fn classify(&self, tape: &mut Tape, h: NodeId) -> Result<NodeId> {
        let w = tape.param(self.out_w);
        let b = tape.param(self.out_b);
        let logits = tape.matmul(w, h)?;
        let logits = tape.add(logits, b)?;
        tape.log_softmax(logits)
    }

    /// Per-token tag log-distributions for predicate `p`, on the tape.
    pub fn forward(&self, tape: &mut Tape, inst: &Instance, p: usize) -> Result<Vec<NodeId>> {
        let syntax = self.syntax.encode(tape, inst.tree.as_ref(), p)?;
        let xs = self.build_input(
            tape,
            &inst.sentence,
            p,
            syntax.as_deref(),
            inst.external.as_deref(),
        )?;
        let hs = encode(tape, &xs, &self.encoder)?;
        hs.into_iter().map(|h| self.classify(tape, h)).collect()
    }

    /// Gold tag indices of a frame.
    pub fn gold_tags(&self, frame: &PredicateFrame, n: usize) -> Result<Vec<usize>> {
        let seq = spans_to_bio(frame, n)?;
        seq.tags()
            .iter()
            .map(|t| {
                self.tagset()
                    .index(t)
                    .ok_or_else(|| Error::Input(format!("tag {t} is not in the model's tag set")))
            })
            .collect()
    }

    /// Summed negative log-likelihood of a frame's gold tags, scaled by
    /// `weight`.
    pub fn loss(&self, tape: &mut Tape, inst: &Instance, frame: &PredicateFrame, weight: f64) -> Result<NodeId> {
        let gold = self.gold_tags(frame, inst.len())?;
        let dists = self.forward(tape, inst, frame.predicate)?;
        let picks = dists
            .iter()
            .zip(&gold)
            .map(|(&d, &g)| tape.pick(d, g))
            .collect::<Result<Vec<_>>>()?;
        let total = tape.sum(&picks)?;
        Ok(tape.scale(total, -weight))
    }

    /// Tag log-probabilities for predicate `p` as plain rows.
    pub fn log_distributions(&self, inst: &Instance, p: usize) -> Result<Vec<Vec<f64>>> {
        let mut tape = Tape::new(&self.store);
        let dists = self.forward(&mut tape, inst, p)?;
        Ok(dists.iter().map(|&d| tape.value(d).data().to_vec()).collect())
    }

    /// Best legal tag sequence for predicate `p`, as a frame.
    pub fn predict(&self, inst: &Instance, p: usize) -> Result<PredicateFrame> {
        let dists = self.log_distributions(inst, p)?;
        self.frame_from_lattice(&dists, p)
    }

    pub(crate) fn frame_from_lattice(&self, dists: &[Vec<f64>], p: usize) -> Result<PredicateFrame> {
        let (path, _) = viterbi_indices(dists, &self.mask)?;
        let tags = self.tagset().sequence(&path)?;
        PredicateFrame::new(p, bio_to_spans(tags.tags())?)
    }

    /// Frames for every predicate of `inst`.
    pub fn predict_instance(&self, inst: &Instance) -> Result<Vec<PredicateFrame>> {
        inst.predicates().into_iter().map(|p| self.predict(inst, p)).collect()
    }
}
