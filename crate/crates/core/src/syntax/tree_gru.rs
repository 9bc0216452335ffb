use rand::Rng;

use super::LabelEmbeddings;
use crate::error::{Error, Result};
use crate::numerics::{NodeId, ParamId, ParameterStore, Tape, Tensor};
use crate::treebank::DependencyTree;

/// Weights of the bidirectional Tree-GRU.
///
/// Bottom-up, per node `i` with label embedding `l` and summed left/right
/// child states `hl`, `hr`:
///
/// ```text
/// [r_L; r_R; z_L; z_R; z] = σ(W_g l + U_g hl + V_g hr)
/// ĥ = tanh(W l + U (r_L ⊙ hl) + V (r_R ⊙ hr))
/// h↑ = z_L ⊙ hl + z_R ⊙ hr + z ⊙ ĥ
/// ```
///
/// Top-down is a single-input GRU with the parent's state as hidden:
///
/// ```text
/// [r; z] = σ(W_g l + U_g h_parent)
/// ĥ = tanh(W l + U (r ⊙ h_parent))
/// h↓ = (1 - z) ⊙ h_parent + z ⊙ ĥ
/// ```
#[derive(Clone, Debug)]
pub struct TreeGruParams {
    pub hidden: usize,
    up_w_gates: ParamId,
    up_u_gates: ParamId,
    up_v_gates: ParamId,
    up_w: ParamId,
    up_u: ParamId,
    up_v: ParamId,
    down_w_gates: ParamId,
    down_u_gates: ParamId,
    down_w: ParamId,
    down_u: ParamId,
}

const NAMES: [&str; 10] = [
    "up.w_gates",
    "up.u_gates",
    "up.v_gates",
    "up.w",
    "up.u",
    "up.v",
    "down.w_gates",
    "down.u_gates",
    "down.w",
    "down.u",
];

fn shapes(input: usize, hidden: usize) -> [[usize; 2]; 10] {
    [
        [5 * hidden, input],
        [5 * hidden, hidden],
        [5 * hidden, hidden],
        [hidden, input],
        [hidden, hidden],
        [hidden, hidden],
        [2 * hidden, input],
        [2 * hidden, hidden],
        [hidden, input],
        [hidden, hidden],
    ]
}

impl TreeGruParams {
    /// Adds freshly initialized weights under `prefix`. Matrices are
    /// Gaussian with standard deviation `1/sqrt(fan_in)`.
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut ids = Vec::with_capacity(NAMES.len());
        for (name, shape) in NAMES.iter().zip(shapes(input, hidden)) {
            let std = 1.0 / (shape[1] as f64).sqrt();
            ids.push(store.add(format!("{prefix}.{name}"), Tensor::gaussian(&shape, std, rng))?);
        }
        Ok(Self::from_ids(hidden, &ids))
    }

    /// Re-attaches to weights already in `store`.
    pub fn bind(store: &ParameterStore, prefix: &str, input: usize, hidden: usize) -> Result<Self> {
        let mut ids = Vec::with_capacity(NAMES.len());
        for (name, shape) in NAMES.iter().zip(shapes(input, hidden)) {
            let full = format!("{prefix}.{name}");
            let id = store.id(&full)?;
            if store.value(id).shape() != shape {
                return Err(Error::Incompatible(format!(
                    "{full} has shape {:?}, expected {:?}",
                    store.value(id).shape(),
                    shape
                )));
            }
            ids.push(id);
        }
        Ok(Self::from_ids(hidden, &ids))
    }

    fn from_ids(hidden: usize, ids: &[ParamId]) -> Self {
        TreeGruParams {
            hidden,
            up_w_gates: ids[0],
            up_u_gates: ids[1],
            up_v_gates: ids[2],
            up_w: ids[3],
            up_u: ids[4],
            up_v: ids[5],
            down_w_gates: ids[6],
            down_u_gates: ids[7],
            down_w: ids[8],
            down_u: ids[9],
        }
    }
}

/// Bottom-up states for every node, visiting children before parents.
pub fn tree_gru_bottom_up(
    tape: &mut Tape,
    tree: &DependencyTree,
    labels: &LabelEmbeddings,
    params: &TreeGruParams,
) -> Result<Vec<NodeId>> {
    tree_gru_bottom_up_in_order(tape, tree, labels, params, &tree.bottom_up_order())
}

/// As [`tree_gru_bottom_up`] with an explicit visiting order, which must
/// list every node after all of its children.
pub fn tree_gru_bottom_up_in_order(
    tape: &mut Tape,
    tree: &DependencyTree,
    labels: &LabelEmbeddings,
    params: &TreeGruParams,
    order: &[usize],
) -> Result<Vec<NodeId>> {
    let n = tree.len();
    let h = params.hidden;
    check_order(order, n, |node, seen| tree.children(node).iter().all(|&c| seen[c]))?;

    let wg = tape.param(params.up_w_gates);
    let ug = tape.param(params.up_u_gates);
    let vg = tape.param(params.up_v_gates);
    let w = tape.param(params.up_w);
    let u = tape.param(params.up_u);
    let v = tape.param(params.up_v);
    let zero = tape.input(Tensor::zeros(&[h]));

    let mut states: Vec<Option<NodeId>> = vec![None; n];
    for &i in order {
        let (left, right): (Vec<usize>, Vec<usize>) = tree.children(i).iter().partition(|&&c| c < i);
        let sum_states = |tape: &mut Tape, kids: &[usize]| -> Result<NodeId> {
            if kids.is_empty() {
                Ok(zero)
            } else {
                let hs: Vec<NodeId> = kids.iter().map(|&c| states[c].unwrap()).collect();
                tape.sum(&hs)
            }
        };
        let hl = sum_states(tape, &left)?;
        let hr = sum_states(tape, &right)?;
        let l = labels.of_token(tape, tree, i)?;

        let a = tape.matmul(wg, l)?;
        let b = tape.matmul(ug, hl)?;
        let c = tape.matmul(vg, hr)?;
        let pre = tape.sum(&[a, b, c])?;
        let gates = tape.sigmoid(pre);
        let r_l = tape.slice(gates, 0, h)?;
        let r_r = tape.slice(gates, h, h)?;
        let z_l = tape.slice(gates, 2 * h, h)?;
        let z_r = tape.slice(gates, 3 * h, h)?;
        let z = tape.slice(gates, 4 * h, h)?;

        let rl_hl = tape.hadamard(r_l, hl)?;
        let rr_hr = tape.hadamard(r_r, hr)?;
        let a = tape.matmul(w, l)?;
        let b = tape.matmul(u, rl_hl)?;
        let c = tape.matmul(v, rr_hr)?;
        let pre = tape.sum(&[a, b, c])?;
        let cand = tape.tanh(pre);

        let a = tape.hadamard(z_l, hl)?;
        let b = tape.hadamard(z_r, hr)?;
        let c = tape.hadamard(z, cand)?;
        states[i] = Some(tape.sum(&[a, b, c])?);
    }
    Ok(states.into_iter().map(Option::unwrap).collect())
}

/// Top-down states for every node; the root sees a zero parent state.
pub fn tree_gru_top_down(
    tape: &mut Tape,
    tree: &DependencyTree,
    labels: &LabelEmbeddings,
    params: &TreeGruParams,
) -> Result<Vec<NodeId>> {
    let n = tree.len();
    let h = params.hidden;
    let order = tree.top_down_order();
    check_order(&order, n, |node, seen| tree.head(node).is_none_or(|p| seen[p]))?;

    let wg = tape.param(params.down_w_gates);
    let ug = tape.param(params.down_u_gates);
    let w = tape.param(params.down_w);
    let u = tape.param(params.down_u);
    let zero = tape.input(Tensor::zeros(&[h]));

    let mut states: Vec<Option<NodeId>> = vec![None; n];
    for &i in &order {
        let parent = tree.head(i).map_or(zero, |p| states[p].unwrap());
        let l = labels.of_token(tape, tree, i)?;
        let a = tape.matmul(wg, l)?;
        let b = tape.matmul(ug, parent)?;
        let pre = tape.add(a, b)?;
        let gates = tape.sigmoid(pre);
        let r = tape.slice(gates, 0, h)?;
        let z = tape.slice(gates, h, h)?;

        let r_h = tape.hadamard(r, parent)?;
        let a = tape.matmul(w, l)?;
        let b = tape.matmul(u, r_h)?;
        let pre = tape.add(a, b)?;
        let cand = tape.tanh(pre);

        let keep = tape.one_minus(z);
        let a = tape.hadamard(keep, parent)?;
        let b = tape.hadamard(z, cand)?;
        states[i] = Some(tape.add(a, b)?);
    }
    Ok(states.into_iter().map(Option::unwrap).collect())
}

/// `h↑ ⊕ h↓` for every node.
pub fn tree_gru_encode(
    tape: &mut Tape,
    tree: &DependencyTree,
    labels: &LabelEmbeddings,
    params: &TreeGruParams,
) -> Result<Vec<NodeId>> {
    let up = tree_gru_bottom_up(tape, tree, labels, params)?;
    let down = tree_gru_top_down(tape, tree, labels, params)?;
    up.into_iter()
        .zip(down)
        .map(|(u, d)| tape.concat(&[u, d]))
        .collect()
}

fn check_order(
    order: &[usize],
    n: usize,
    ready: impl Fn(usize, &[bool]) -> bool,
) -> Result<()> {
    let mut seen = vec![false; n];
    for &node in order {
        if node >= n || seen[node] || !ready(node, &seen) {
            return Err(Error::Tree(format!("invalid visiting order {order:?}")));
        }
        seen[node] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Tree(format!("visiting order {order:?} misses nodes")));
    }
    Ok(())
}
