use super::{Instance, SrlModel};
use crate::error::{Error, Result};
use crate::treebank::PredicateFrame;

/// Averages the members' per-token tag log-probabilities and decodes the
/// mean lattice once.
pub fn ensemble_predict(models: &[&SrlModel], inst: &Instance, p: usize) -> Result<PredicateFrame> {
    let (first, rest) = models
        .split_first()
        .ok_or_else(|| Error::Input("empty ensemble".into()))?;
    if let Some(m) = rest.iter().find(|m| m.tagset() != first.tagset()) {
        return Err(Error::Incompatible(format!(
            "ensemble members disagree on roles: {:?} vs {:?}",
            first.tagset().roles(),
            m.tagset().roles()
        )));
    }
    let mut mean = first.log_distributions(inst, p)?;
    for m in rest {
        let d = m.log_distributions(inst, p)?;
        for (row, other) in mean.iter_mut().zip(&d) {
            for (a, b) in row.iter_mut().zip(other) {
                *a += b;
            }
        }
    }
    let k = models.len() as f64;
    if models.len() > 1 {
        mean.iter_mut().flatten().for_each(|x| *x /= k);
    }
    first.frame_from_lattice(&mean, p)
}
