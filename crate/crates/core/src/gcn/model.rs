//! Forward and reverse pass of
//! `Z = Â · (Drop(ReLU(Â · Drop(X) · W1 + b1)) · W2) + b2`.

use ndarray::{Array2, Axis, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::params::GcnParams;
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;

/// Pre-scaled inverted-dropout masks: entries are `0` or `1 / (1 - p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub input: Array2<f64>,
    pub hidden: Array2<f64>,
}

pub enum Mode<'a> {
    Eval,
    Train { dropout: f64, rng: &'a mut ChaCha8Rng },
    /// Re-applies recorded masks so the pass is a deterministic function of
    /// the parameters.
    Fixed(&'a DropoutMasks),
}

#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `Drop(X)`.
    pub input: Array2<f64>,
    pub pre_activation: Array2<f64>,
    /// `ReLU(pre_activation)`, before the second dropout.
    pub hidden: Array2<f64>,
    /// `Drop(hidden)`.
    pub hidden_input: Array2<f64>,
    pub masks: Option<DropoutMasks>,
    pub logits: Array2<f64>,
}

pub fn forward(
    params: &GcnParams,
    adjacency: &NormalizedAdjacency,
    features: &Array2<f64>,
    mode: Mode<'_>,
) -> Result<ForwardTrace> {
    let n = features.nrows();
    if adjacency.dim() != n {
        return Err(Error::Shape(format!("adjacency is {0}x{0} but features have {n} rows", adjacency.dim())));
    }
    if features.ncols() != params.input_dim() {
        return Err(Error::Shape(format!(
            "features have {} columns, W1 expects {}",
            features.ncols(),
            params.input_dim()
        )));
    }
    let h = params.hidden_dim();

    let mut sampler: Option<(f64, &mut ChaCha8Rng)> = None;
    let fixed = match mode {
        Mode::Eval => None,
        Mode::Train { dropout, rng } => {
            if !(0.0..1.0).contains(&dropout) {
                return Err(Error::InvalidArgument(format!("dropout {dropout} not in [0, 1)")));
            }
            sampler = Some((dropout, rng));
            None
        }
        Mode::Fixed(masks) => {
            if masks.input.dim() != features.dim() || masks.hidden.dim() != (n, h) {
                return Err(Error::Shape("dropout masks do not match the forward pass".into()));
            }
            Some(masks)
        }
    };

    let input_mask = match (&mut sampler, fixed) {
        (Some((p, rng)), _) => Some(sample_mask(features.dim(), *p, rng)),
        (None, Some(m)) => Some(m.input.clone()),
        (None, None) => None,
    };
    let input = match &input_mask {
        Some(mask) => features * mask,
        None => features.clone(),
    };

    let mut pre_activation = adjacency.matmul(input.dot(&params.w1).view());
    pre_activation += &params.b1;
    let hidden = pre_activation.mapv(|v| v.max(0.0));

    let hidden_mask = match (&mut sampler, fixed) {
        (Some((p, rng)), _) => Some(sample_mask((n, h), *p, rng)),
        (None, Some(m)) => Some(m.hidden.clone()),
        (None, None) => None,
    };
    let hidden_input = match &hidden_mask {
        Some(mask) => &hidden * mask,
        None => hidden.clone(),
    };

    let mut logits = adjacency.matmul(hidden_input.dot(&params.w2).view());
    logits += &params.b2;
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logits".into()));
    }

    let masks = match (input_mask, hidden_mask) {
        (Some(input), Some(hidden)) => Some(DropoutMasks { input, hidden }),
        _ => None,
    };
    Ok(ForwardTrace {
        input,
        pre_activation,
        hidden,
        hidden_input,
        masks,
        logits,
    })
}

fn sample_mask(shape: (usize, usize), p: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let keep = 1.0 / (1.0 - p);
    Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() >= p { keep } else { 0.0 })
}

/// Gradients of the loss with respect to every parameter, given
/// `dL/dZ`. Adds `weight_decay · W` to both weight gradients; biases are
/// not decayed.
///
/// Relies on `Â` being symmetric, so `Âᵀ` is `Â`.
pub fn backward(
    params: &GcnParams,
    adjacency: &NormalizedAdjacency,
    trace: &ForwardTrace,
    grad_logits: &Array2<f64>,
    weight_decay: f64,
) -> Result<GcnParams> {
    if grad_logits.dim() != trace.logits.dim() {
        return Err(Error::Shape(format!(
            "grad_logits {:?} vs logits {:?}",
            grad_logits.dim(),
            trace.logits.dim()
        )));
    }

    let b2 = grad_logits.sum_axis(Axis(0));
    let propagated = adjacency.matmul(grad_logits.view());
    let mut w2 = trace.hidden_input.t().dot(&propagated);
    w2.scaled_add(weight_decay, &params.w2);

    let mut grad_hidden = propagated.dot(&params.w2.t());
    if let Some(masks) = &trace.masks {
        grad_hidden *= &masks.hidden;
    }
    Zip::from(&mut grad_hidden)
        .and(&trace.pre_activation)
        .for_each(|g, &pre| {
            if pre <= 0.0 {
                *g = 0.0;
            }
        });

    let b1 = grad_hidden.sum_axis(Axis(0));
    let propagated = adjacency.matmul(grad_hidden.view());
    let mut w1 = trace.input.t().dot(&propagated);
    w1.scaled_add(weight_decay, &params.w1);

    Ok(GcnParams { w1, b1, w2, b2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcn::params::init_params;
    use crate::rng;
    use ndarray::{array, Array1};

    fn single_node() -> NormalizedAdjacency {
        NormalizedAdjacency::symmetric_from_edges(1, &[])
    }

    #[test]
    fn zero_params_give_zero_logits() {
        let p = GcnParams::zeros(3, 4, 2);
        let adj = NormalizedAdjacency::symmetric_from_edges(2, &[(0, 1)]);
        let x = array![[1.0, 2.0, 3.0], [-1.0, 0.5, 0.0]];
        let t = forward(&p, &adj, &x, Mode::Eval).unwrap();
        assert!(t.logits.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn one_node_hand_computation() {
        // h = ReLU([1, 0] · I + [0.5, -2]) = [1.5, 0]; z = h · W2 + b2
        let p = GcnParams {
            w1: array![[1.0, 0.0], [0.0, 1.0]],
            b1: array![0.5, -2.0],
            w2: array![[2.0, -1.0], [3.0, 3.0]],
            b2: array![0.1, 0.2],
        };
        let t = forward(&p, &single_node(), &array![[1.0, 0.0]], Mode::Eval).unwrap();
        assert_eq!(t.hidden, array![[1.5, 0.0]]);
        assert_eq!(t.logits, array![[3.1, -1.3]]);
    }

    #[test]
    fn eval_is_deterministic() {
        let p = init_params(3, 5, 2, 4);
        let adj = NormalizedAdjacency::symmetric_from_edges(3, &[(0, 1), (1, 2)]);
        let x = Array2::from_shape_fn((3, 3), |(i, j)| (i as f64 - j as f64) * 0.3);
        let a = forward(&p, &adj, &x, Mode::Eval).unwrap();
        let b = forward(&p, &adj, &x, Mode::Eval).unwrap();
        assert_eq!(a.logits, b.logits);
        assert!(a.masks.is_none());
    }

    #[test]
    fn shape_mismatch() {
        let p = init_params(3, 5, 2, 4);
        let adj = single_node();
        assert!(matches!(forward(&p, &adj, &Array2::zeros((1, 4)), Mode::Eval), Err(Error::Shape(_))));
        assert!(matches!(forward(&p, &adj, &Array2::zeros((2, 3)), Mode::Eval), Err(Error::Shape(_))));
        let t = forward(&p, &adj, &Array2::zeros((1, 3)), Mode::Eval).unwrap();
        assert!(matches!(backward(&p, &adj, &t, &Array2::zeros((1, 3)), 0.0), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_upstream_gradient() {
        let p = init_params(3, 5, 2, 4);
        let adj = NormalizedAdjacency::symmetric_from_edges(3, &[(0, 1)]);
        let x = Array2::from_elem((3, 3), 0.7);
        let mut rng = rng::stream(0, "test");
        let t = forward(&p, &adj, &x, Mode::Train { dropout: 0.5, rng: &mut rng }).unwrap();
        let zero = Array2::zeros((3, 2));

        let g = backward(&p, &adj, &t, &zero, 0.0).unwrap();
        assert!(g.w1.iter().chain(g.w2.iter()).chain(g.b1.iter()).chain(g.b2.iter()).all(|&v| v == 0.0));

        let g = backward(&p, &adj, &t, &zero, 5e-4).unwrap();
        assert_eq!(g.w1, &p.w1 * 5e-4);
        assert_eq!(g.w2, &p.w2 * 5e-4);
        assert_eq!(g.b1, Array1::<f64>::zeros(5));
    }

    #[test]
    fn dropout_scaling_matches_eval_in_expectation() {
        let p = GcnParams {
            w1: Array2::from_elem((2, 2), 0.5),
            b1: Array1::zeros(2),
            w2: Array2::eye(2),
            b2: Array1::zeros(2),
        };
        let adj = single_node();
        let x = array![[1.0, 1.0]];
        let eval = forward(&p, &adj, &x, Mode::Eval).unwrap().logits;
        let mut rng = rng::stream(1, "dropout-check");
        let draws = 10_000;
        let mut sum = Array2::<f64>::zeros((1, 2));
        let mut hidden_sum = 0.0;
        for _ in 0..draws {
            let t = forward(&p, &adj, &x, Mode::Train { dropout: 0.5, rng: &mut rng }).unwrap();
            hidden_sum += t.hidden_input.sum() / 2.0;
            sum += &t.logits;
        }
        // all weights and inputs are positive, so ReLU is linear here and the
        // masked means must match eval exactly in expectation
        let hidden_eval = forward(&p, &adj, &x, Mode::Eval).unwrap().hidden.sum() / 2.0;
        let mean_hidden = hidden_sum / draws as f64;
        assert!((mean_hidden - hidden_eval).abs() / hidden_eval < 0.02, "{mean_hidden} vs {hidden_eval}");
        let mean = sum / draws as f64;
        for (m, e) in mean.iter().zip(eval.iter()) {
            assert!((m - e).abs() / e.abs() < 0.02, "{m} vs {e}");
        }
    }
}
