use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{NodeId, ParamId, ParameterStore, Tape, Tensor};

/// One highway LSTM layer. `gates` stacks the input, forget, output,
/// candidate and highway-gate rows and reads `[x_t; h_{t-1}]`; `proj`
/// maps the layer input onto the highway path.
#[derive(Clone, Debug)]
pub struct LayerParams {
    pub input: usize,
    pub hidden: usize,
    pub forward: bool,
    gates_w: ParamId,
    gates_b: ParamId,
    proj: ParamId,
}

/// Stacked highway LSTMs with alternating directions, ending with a
/// backward layer.
#[derive(Clone, Debug)]
pub struct EncoderParams {
    pub layers: Vec<LayerParams>,
}

/// Direction of layer `k` of `total` when the top layer runs backwards.
pub fn layer_is_forward(k: usize, total: usize) -> bool {
    (total - 1 - k) % 2 == 1
}

impl EncoderParams {
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        layers: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut out = Vec::with_capacity(layers);
        for k in 0..layers {
            let in_dim = if k == 0 { input } else { hidden };
            let std = 1.0 / ((in_dim + hidden) as f64).sqrt();
            let gates_w = store.add(
                format!("{prefix}.{k}.gates_w"),
                Tensor::gaussian(&[5 * hidden, in_dim + hidden], std, rng),
            )?;
            let mut bias = vec![0.0; 5 * hidden];
            // forget gate starts open
            bias[hidden..2 * hidden].iter_mut().for_each(|b| *b = 1.0);
            let gates_b = store.add(format!("{prefix}.{k}.gates_b"), Tensor::vector(bias))?;
            let proj = store.add(
                format!("{prefix}.{k}.proj"),
                Tensor::gaussian(&[hidden, in_dim], 1.0 / (in_dim as f64).sqrt(), rng),
            )?;
            out.push(LayerParams {
                input: in_dim,
                hidden,
                forward: layer_is_forward(k, layers),
                gates_w,
                gates_b,
                proj,
            });
        }
        Ok(EncoderParams { layers: out })
    }

    pub fn bind(
        store: &ParameterStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        layers: usize,
    ) -> Result<Self> {
        let mut out = Vec::with_capacity(layers);
        for k in 0..layers {
            let in_dim = if k == 0 { input } else { hidden };
            let get = |name: &str, shape: &[usize]| -> Result<ParamId> {
                let full = format!("{prefix}.{k}.{name}");
                let id = store.id(&full)?;
                if store.value(id).shape() != shape {
                    return Err(Error::Incompatible(format!(
                        "{full} has shape {:?}, expected {:?}",
                        store.value(id).shape(),
                        shape
                    )));
                }
                Ok(id)
            };
            out.push(LayerParams {
                input: in_dim,
                hidden,
                forward: layer_is_forward(k, layers),
                gates_w: get("gates_w", &[5 * hidden, in_dim + hidden])?,
                gates_b: get("gates_b", &[5 * hidden])?,
                proj: get("proj", &[hidden, in_dim])?,
            });
        }
        Ok(EncoderParams { layers: out })
    }

    /// Copy with every layer direction flipped.
    pub fn mirrored(&self) -> Self {
        let mut m = self.clone();
        m.layers.iter_mut().for_each(|l| l.forward = !l.forward);
        m
    }
}

/// Runs one layer over the sequence in its direction:
///
/// ```text
/// [i; f; o; g; r] = W [x_t; h_prev] + b
/// c_t = σ(f) ⊙ c_prev + σ(i) ⊙ tanh(g)
/// h_t = σ(r) ⊙ (σ(o) ⊙ tanh(c_t)) + (1 - σ(r)) ⊙ P x_t
/// ```
///
/// `h_t` feeds both the next layer and the next step.
fn run_layer(tape: &mut Tape, xs: &[NodeId], layer: &LayerParams) -> Result<Vec<NodeId>> {
    let d = layer.hidden;
    let w = tape.param(layer.gates_w);
    let b = tape.param(layer.gates_b);
    let proj = tape.param(layer.proj);
    let mut h = tape.input(Tensor::zeros(&[d]));
    let mut c = h;
    let mut out = vec![h; xs.len()];
    let steps: Box<dyn Iterator<Item = usize>> = if layer.forward {
        Box::new(0..xs.len())
    } else {
        Box::new((0..xs.len()).rev())
    };
    for t in steps {
        let xh = tape.concat(&[xs[t], h])?;
        let wx = tape.matmul(w, xh)?;
        let pre = tape.add(wx, b)?;
        let acts = tape.sigmoid(pre);
        let i = tape.slice(acts, 0, d)?;
        let f = tape.slice(acts, d, d)?;
        let o = tape.slice(acts, 2 * d, d)?;
        let g_pre = tape.slice(pre, 3 * d, d)?;
        let g = tape.tanh(g_pre);
        let r = tape.slice(acts, 4 * d, d)?;

        let keep = tape.hadamard(f, c)?;
        let write = tape.hadamard(i, g)?;
        c = tape.add(keep, write)?;
        let tc = tape.tanh(c);
        let h_lstm = tape.hadamard(o, tc)?;

        let px = tape.matmul(proj, xs[t])?;
        let carry = tape.hadamard(r, h_lstm)?;
        let r_inv = tape.one_minus(r);
        let skip = tape.hadamard(r_inv, px)?;
        h = tape.add(carry, skip)?;
        out[t] = h;
    }
    Ok(out)
}

/// Top-layer outputs for every token.
pub fn encode(tape: &mut Tape, inputs: &[NodeId], params: &EncoderParams) -> Result<Vec<NodeId>> {
    if inputs.is_empty() {
        return Err(Error::Input("cannot encode an empty sequence".into()));
    }
    let mut xs = inputs.to_vec();
    for layer in &params.layers {
        xs = run_layer(tape, &xs, layer)?;
    }
    Ok(xs)
}
