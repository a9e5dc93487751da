use rand::seq::index;

use super::params::ParamSet;
use crate::error::{Error, Result};
use crate::rng;

/// Coordinates checked per call; smaller parameter sets are checked in full.
const MAX_COORDS: usize = 2000;

/// Central-difference check of an analytic gradient.
///
/// `objective` returns the loss and its analytic gradient at the given
/// parameters and must be deterministic. Returns the largest
/// `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)` over the
/// checked coordinates.
pub fn gradient_check<P, F>(mut objective: F, params: &P, step: f64) -> Result<f64>
where
    P: ParamSet,
    F: FnMut(&P) -> Result<(f64, P)>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid step {step}")));
    }
    let (loss, analytic) = objective(params)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss at the check point".into()));
    }

    let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    let total: usize = shapes.iter().sum();
    let coords: Vec<usize> = if total <= MAX_COORDS {
        (0..total).collect()
    } else {
        let mut picked = index::sample(&mut rng::stream(0, "gradcheck"), total, MAX_COORDS).into_vec();
        picked.sort_unstable();
        picked
    };

    let locate = |mut flat: usize| {
        for (t, &len) in shapes.iter().enumerate() {
            if flat < len {
                return (t, flat);
            }
            flat -= len;
        }
        unreachable!("coordinate out of range")
    };

    let analytic = analytic.tensors().iter().map(|t| t.to_vec()).collect::<Vec<_>>();
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for flat in coords {
        let (t, i) = locate(flat);
        let original = probe.tensors()[t][i];

        probe.tensors_mut()[t][i] = original + step;
        let (plus, _) = objective(&probe)?;
        probe.tensors_mut()[t][i] = original - step;
        let (minus, _) = objective(&probe)?;
        probe.tensors_mut()[t][i] = original;

        if !(plus.is_finite() && minus.is_finite()) {
            return Err(Error::NonFinite("loss during finite differencing".into()));
        }
        let numeric = (plus - minus) / (2.0 * step);
        let a = analytic[t][i];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}
