use super::params::{ParamId, ParameterStore};
use super::tape::{NodeId, Tape};
use crate::error::Result;

/// Denominator floor for [`relative_error`]: below this magnitude the
/// comparison degrades to an absolute one scaled by the floor.
const REL_FLOOR: f64 = 1e-6;

/// `|a - b| / max(|a|, |b|, 1e-6)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

#[derive(Clone, Debug)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    /// Flat index of the worst entry.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.params.iter().map(|p| p.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tol
    }

    pub fn worst(&self) -> Option<&ParamCheck> {
        self.params
            .iter()
            .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }
}

/// Compares tape gradients of `loss` against central differences with
/// step `h` for every entry of every parameter in `store`.
pub fn grad_check<F>(store: &ParameterStore, loss: F, h: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape) -> Result<NodeId>,
{
    let eval = |s: &ParameterStore| -> Result<f64> {
        let mut tape = Tape::new(s);
        let out = loss(&mut tape)?;
        Ok(tape.value(out).item())
    };

    let analytic = {
        let mut tape = Tape::new(store);
        let out = loss(&mut tape)?;
        let grads = tape.backward(out)?;
        store
            .ids()
            .map(|id| {
                grads
                    .param(id)
                    .map(<[f64]>::to_vec)
                    .unwrap_or_else(|| vec![0.0; store.value(id).len()])
            })
            .collect::<Vec<_>>()
    };

    let mut probe = store.clone();
    let mut params = Vec::with_capacity(store.len());
    for (k, id) in store.ids().enumerate() {
        let mut worst = ParamCheck {
            name: store.name(id).to_string(),
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for j in 0..store.value(id).len() {
            let orig = store.value(id).data()[j];
            let numeric = {
                set(&mut probe, id, j, orig + h);
                let up = eval(&probe)?;
                set(&mut probe, id, j, orig - h);
                let down = eval(&probe)?;
                set(&mut probe, id, j, orig);
                (up - down) / (2.0 * h)
            };
            let a = analytic[k][j];
            let err = relative_error(a, numeric);
            if err > worst.max_rel_error || j == 0 {
                worst.max_rel_error = err;
                worst.worst_index = j;
                worst.analytic = a;
                worst.numeric = numeric;
            }
        }
        params.push(worst);
    }
    Ok(GradCheckReport { params, tol })
}

fn set(store: &mut ParameterStore, id: ParamId, j: usize, v: f64) {
    store.value_mut(id).data_mut()[j] = v;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quadratic_is_exact() {
        let mut s = ParameterStore::new();
        let id = s.add("x", Tensor::vector(vec![1.0, -2.0, 0.5])).unwrap();
        let report = grad_check(
            &s,
            |t| {
                let x = t.param(id);
                let sq = t.hadamard(x, x)?;
                Ok(t.sum_all(sq))
            },
            1e-5,
            1e-8,
        )
        .unwrap();
        assert!(report.passed(), "{report:?}");
    }

    /// Every differentiable op against finite differences on small random
    /// shapes, many seeds.
    #[test]
    fn every_op_passes() {
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = 1 + (seed as usize % 4);
            let k = 1 + (seed as usize / 4 % 4);
            let mut s = ParameterStore::new();
            let w = s.add("w", Tensor::gaussian(&[m, k], 1.0, &mut rng)).unwrap();
            let x = s.add("x", Tensor::gaussian(&[k], 1.0, &mut rng)).unwrap();
            let y = s.add("y", Tensor::gaussian(&[m], 1.0, &mut rng)).unwrap();
            let table = s.add("table", Tensor::gaussian(&[3, m], 1.0, &mut rng)).unwrap();
            let mat = s.add("mat", Tensor::gaussian(&[k, 2], 1.0, &mut rng)).unwrap();
            let report = grad_check(
                &s,
                |t| {
                    let (w, x, y, table, mat) =
                        (t.param(w), t.param(x), t.param(y), t.param(table), t.param(mat));
                    let wx = t.matmul(w, x)?;
                    let a = t.add(wx, y)?;
                    let b = t.sigmoid(a);
                    let c = t.tanh(y);
                    let d = t.hadamard(b, c)?;
                    let e = t.sub(d, y)?;
                    let f = t.one_minus(e);
                    let g = t.scale(f, 0.7);
                    let row = t.lookup(table, (seed % 3) as usize)?;
                    let h = t.max_pool(&[g, row, b])?;
                    let cat = t.concat(&[h, x])?;
                    let part = t.slice(cat, 1, m + k - 1)?;
                    let ls = t.log_softmax(cat)?;
                    let pick = t.pick(ls, (seed as usize) % (m + k))?;
                    let wm = t.matmul(w, mat)?;
                    let s1 = t.sum_all(wm);
                    let s2 = t.sum_all(part);
                    let sq = t.hadamard(s2, s2)?;
                    t.sum(&[pick, s1, sq])
                },
                1e-5,
                1e-4,
            )
            .unwrap();
            assert!(report.passed(), "seed {seed}: {:?}", report.worst());
        }
    }
}
