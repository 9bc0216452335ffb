use std::time::Instant;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Instance, ModelConfig, SrlModel, TrainConfig, Vocabularies};
use crate::analysis::evaluate;
use crate::error::{Error, Result};
use crate::numerics::{adadelta_step, clip_global_norm, ParamId, Tape};

/// Gradients of one example, per parameter.
type ParamGrads = Vec<(ParamId, Vec<f64>)>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean per-token negative log-likelihood over the epoch's batches
    /// (epoch 0: the untrained model).
    pub loss: f64,
    pub train_f1: Option<f64>,
    pub dev_f1: Option<f64>,
    pub seconds: f64,
}

pub struct TrainOutcome {
    /// Dev-best model when a dev set was given, otherwise the last one.
    pub model: SrlModel,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

/// Mean per-token negative log-likelihood of every frame in `corpus`.
pub fn mean_loss(model: &SrlModel, corpus: &[Instance]) -> Result<f64> {
    let items: Vec<(usize, usize)> = frames_of(corpus);
    let parts = items
        .par_iter()
        .map(|&(i, f)| {
            let inst = &corpus[i];
            let mut tape = Tape::new(model.store());
            let loss = model.loss(&mut tape, inst, &inst.frames[f], 1.0)?;
            Ok((tape.value(loss).item(), inst.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (sum, tokens) = parts
        .iter()
        .fold((0.0, 0usize), |(s, t), &(l, n)| (s + l, t + n));
    Ok(if tokens == 0 { 0.0 } else { sum / tokens as f64 })
}

fn frames_of(corpus: &[Instance]) -> Vec<(usize, usize)> {
    corpus
        .iter()
        .enumerate()
        .flat_map(|(i, inst)| (0..inst.frames.len()).map(move |f| (i, f)))
        .collect()
}

fn span_f1(model: &SrlModel, corpus: &[Instance]) -> Result<f64> {
    let pred = corpus
        .par_iter()
        .map(|inst| model.predict_instance(inst))
        .collect::<Result<Vec<_>>>()?;
    let gold: Vec<_> = corpus.iter().map(|i| i.frames.clone()).collect();
    Ok(evaluate(&gold, &pred)?.f1)
}

/// Trains one model on every (sentence, predicate) pair of `corpus` by
/// minimizing mean per-token cross-entropy with Adadelta and global norm
/// clipping. Deterministic for a given seed.
pub fn train(
    corpus: &[Instance],
    dev: Option<&[Instance]>,
    model_config: &ModelConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let items = frames_of(corpus);
    if items.is_empty() {
        return Err(Error::Input("training corpus has no predicates".into()));
    }
    let vocab = Vocabularies::from_corpus(corpus);
    let mut model = SrlModel::new(model_config.clone(), vocab, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));

    let started = Instant::now();
    let mut log = vec![EpochLog {
        epoch: 0,
        loss: mean_loss(&model, corpus)?,
        train_f1: None,
        dev_f1: match dev {
            Some(d) => Some(span_f1(&model, d)?),
            None => None,
        },
        seconds: 0.0,
    }];
    let mut best: Option<(f64, usize, SrlModel)> = None;
    let mut order = items.clone();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut nll = 0.0;
        let mut tokens = 0usize;
        for batch in order.chunks(config.batch_size) {
            let batch_tokens: usize = batch.iter().map(|&(i, _)| corpus[i].len()).sum();
            let weight = 1.0 / batch_tokens as f64;
            let results = batch
                .par_iter()
                .map(|&(i, f)| -> Result<(f64, ParamGrads)> {
                    let inst = &corpus[i];
                    let mut tape = Tape::new(model.store());
                    let loss = model.loss(&mut tape, inst, &inst.frames[f], weight)?;
                    let value = tape.value(loss).item();
                    let grads = tape.backward(loss)?;
                    Ok((value, grads.params().map(|(id, g)| (id, g.to_vec())).collect()))
                })
                .collect::<Result<Vec<_>>>()?;
            let store = model.store_mut();
            for (value, grads) in &results {
                nll += value / weight;
                for (id, g) in grads {
                    store.accumulate_param(*id, g);
                }
            }
            tokens += batch_tokens;
            clip_global_norm(store, config.clip);
            adadelta_step(store, &config.optimizer)?;
        }

        let train_f1 = if config.stop_at_perfect_train {
            Some(span_f1(&model, corpus)?)
        } else {
            None
        };
        let dev_f1 = match dev {
            Some(d) => Some(span_f1(&model, d)?),
            None => None,
        };
        let entry = EpochLog {
            epoch,
            loss: nll / tokens as f64,
            train_f1,
            dev_f1,
            seconds: started.elapsed().as_secs_f64(),
        };
        info!(
            "epoch {} loss {:.5} train F1 {} dev F1 {}",
            epoch,
            entry.loss,
            fmt_opt(train_f1),
            fmt_opt(dev_f1)
        );
        log.push(entry);

        if let Some(f1) = dev_f1 {
            if best.as_ref().is_none_or(|(b, _, _)| f1 > *b) {
                best = Some((f1, epoch, model.clone()));
            }
        }
        if train_f1 == Some(100.0) {
            break;
        }
    }

    let last_epoch = log.last().map_or(0, |e| e.epoch);
    Ok(match best {
        Some((_, epoch, m)) => TrainOutcome {
            model: m,
            best_epoch: epoch,
            log,
        },
        None => TrainOutcome {
            model,
            best_epoch: last_epoch,
            log,
        },
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}
