use serde::{Deserialize, Serialize};

use super::params::ParameterStore;
use crate::error::{Error, Result};

/// Adadelta hyper-parameters. `lr` multiplies the computed update and is
/// 1.0 in the standard formulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Adadelta {
    pub rho: f64,
    pub eps: f64,
    pub lr: f64,
}

impl Default for Adadelta {
    fn default() -> Self {
        Adadelta {
            rho: 0.95,
            eps: 1e-6,
            lr: 1.0,
        }
    }
}

/// Applies one Adadelta update from the accumulated gradients and clears
/// them:
///
/// ```text
/// E[g²] ← ρ E[g²] + (1-ρ) g²
/// Δ     = -sqrt(E[Δ²] + ε) / sqrt(E[g²] + ε) · g
/// E[Δ²] ← ρ E[Δ²] + (1-ρ) Δ²
/// θ     ← θ + lr · Δ
/// ```
pub fn adadelta_step(store: &mut ParameterStore, opt: &Adadelta) -> Result<()> {
    if !store.has_grads() {
        return Err(Error::MissingGradients);
    }
    let Adadelta { rho, eps, lr } = *opt;
    for p in store.iter_mut() {
        let values = p.value.data_mut();
        for (j, &g) in p.grad.iter().enumerate() {
            let sg = rho * p.sq_grad[j] + (1.0 - rho) * g * g;
            let delta = -((p.sq_update[j] + eps).sqrt() / (sg + eps).sqrt()) * g;
            p.sq_grad[j] = sg;
            p.sq_update[j] = rho * p.sq_update[j] + (1.0 - rho) * delta * delta;
            values[j] += lr * delta;
        }
    }
    store.zero_grad();
    Ok(())
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the factor applied (1.0 when no clipping happened).
pub fn clip_global_norm(store: &mut ParameterStore, max_norm: f64) -> f64 {
    let norm = store.grad_norm();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        store.scale_grads(scale);
        scale
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Tape, Tensor};

    fn scalar_store(x: f64) -> ParameterStore {
        let mut s = ParameterStore::new();
        s.add("x", Tensor::vector(vec![x])).unwrap();
        s
    }

    #[test]
    fn missing_gradients() {
        let mut s = scalar_store(1.0);
        assert!(matches!(
            adadelta_step(&mut s, &Adadelta::default()),
            Err(Error::MissingGradients)
        ));
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = scalar_store(1.5);
        let id = s.id("x").unwrap();
        s.grad_mut(id)[0] = 0.0;
        adadelta_step(&mut s, &Adadelta::default()).unwrap();
        assert_eq!(s.value(id).data(), &[1.5]);
    }

    #[test]
    fn first_step_closed_form() {
        let (rho, eps) = (0.95, 1e-6);
        let mut s = ParameterStore::new();
        let id = s.add("w", Tensor::vector(vec![0.0, 1.0, -2.0])).unwrap();
        let g = [0.5, -3.0, 1e-4];
        s.grad_mut(id).copy_from_slice(&g);
        adadelta_step(&mut s, &Adadelta { rho, eps, lr: 1.0 }).unwrap();
        let before = [0.0, 1.0, -2.0];
        for j in 0..3 {
            let delta = -(eps / ((1.0 - rho) * g[j] * g[j] + eps)).sqrt() * g[j];
            assert!((s.value(id).data()[j] - (before[j] + delta)).abs() < 1e-15);
        }
        assert!(!s.has_grads());
    }

    #[test]
    fn quadratic_shrinks_monotonically() {
        // f(x) = x², grad 2x; run the recurrence by hand alongside.
        let mut s = scalar_store(3.0);
        let id = s.id("x").unwrap();
        let opt = Adadelta::default();
        let (mut x, mut eg, mut ed) = (3.0f64, 0.0f64, 0.0f64);
        let mut prev = 3.0;
        for _ in 0..2 {
            let mut tape = Tape::new(&s);
            let p = tape.param(id);
            let sq = tape.hadamard(p, p).unwrap();
            let loss = tape.sum_all(sq);
            let grads = tape.backward(loss).unwrap();
            drop(tape);
            s.accumulate(&grads);
            adadelta_step(&mut s, &opt).unwrap();

            let g = 2.0 * x;
            eg = 0.95 * eg + 0.05 * g * g;
            let d = -((ed + 1e-6).sqrt() / (eg + 1e-6).sqrt()) * g;
            ed = 0.95 * ed + 0.05 * d * d;
            x += d;

            let now = s.value(id).data()[0];
            assert!((now - x).abs() < 1e-14);
            assert!(now < prev && now > 0.0);
            prev = now;
        }
    }

    #[test]
    fn clipping() {
        let mut s = ParameterStore::new();
        let id = s.add("g", Tensor::vector(vec![0.0, 0.0])).unwrap();
        s.grad_mut(id).copy_from_slice(&[3.0, 4.0]);
        let scale = clip_global_norm(&mut s, 1.0);
        assert!((scale - 0.2).abs() < 1e-15);
        assert!((s.grad(id)[0] - 0.6).abs() < 1e-15);
        assert!((s.grad(id)[1] - 0.8).abs() < 1e-15);

        s.grad_mut(id).copy_from_slice(&[0.3, 0.4]);
        assert_eq!(clip_global_norm(&mut s, 1.0), 1.0);
        assert_eq!(s.grad(id), &[0.3, 0.4]);
    }
}
