use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::model::{backward, forward, Mode};
use super::params::{init_params, BinaryHead, GcnParams};
use crate::error::{Error, Result};
use crate::eval::{auroc, id_accuracy};
use crate::graph::NormalizedAdjacency;
use crate::objectives::{binary_head_loss, ObjectiveKind, ObjectiveSpec, DEFAULT_S_ID, DEFAULT_S_OOD};
use crate::rng;
use crate::scoring::binary_head_score;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub dropout: f64,
    pub weight_decay: f64,
    pub hidden: usize,
    pub lambda: f64,
    pub s_id: f64,
    pub s_ood: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            dropout: 0.5,
            weight_decay: 5e-4,
            hidden: 32,
            lambda: 0.01,
            s_id: DEFAULT_S_ID,
            s_ood: DEFAULT_S_OOD,
            max_epochs: 200,
            patience: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} not in [0, 1)", self.dropout));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return fail(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be at least 1".into());
        }
        if self.patience > self.max_epochs {
            return fail(format!("patience {} exceeds max_epochs {}", self.patience, self.max_epochs));
        }
        if self.s_ood <= self.s_id {
            return fail(format!("s_ood ({}) must exceed s_id ({})", self.s_ood, self.s_id));
        }
        if self.hidden == 0 {
            return fail("hidden dimension must be at least 1".into());
        }
        Ok(())
    }
}

/// Everything the trainer reads from the (possibly augmented) graph.
pub struct TrainingData<'a> {
    pub features: &'a Array2<f64>,
    pub adjacency: &'a NormalizedAdjacency,
    /// Compact ID class per node; only entries for training and validation
    /// nodes are read.
    pub targets: &'a [Option<usize>],
    pub num_classes: usize,
    pub train_ids: &'a [usize],
    pub val_id: &'a [usize],
    pub val_ood: &'a [usize],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub val_acc: f64,
    pub val_auroc: f64,
}

impl EpochRecord {
    pub fn selection(&self) -> f64 {
        self.val_acc + self.val_auroc
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: GcnParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl TrainOutcome {
    pub fn best(&self) -> &EpochRecord {
        &self.history[self.best_epoch - 1]
    }
}

/// Full-batch training with Adam and early stopping on validation
/// `ID ACC + AUROC`. `val_scorer` maps eval-mode logits to one OOD score
/// per node. Returns the parameters of the best epoch (earliest on ties).
pub fn train(
    data: &TrainingData<'_>,
    config: &TrainConfig,
    objective: &ObjectiveSpec,
    val_scorer: &dyn Fn(&Array2<f64>) -> Result<Vec<f64>>,
) -> Result<TrainOutcome> {
    config.validate()?;
    objective.validate()?;
    if objective.kind == ObjectiveKind::BinaryHead {
        return Err(Error::InvalidArgument(
            "binary-head objective trains a frozen backbone; use train_binary_head".into(),
        ));
    }
    if data.train_ids.is_empty() {
        return Err(Error::Empty("training set"));
    }

    let k_out = objective.output_dim(data.num_classes);
    let mut params = init_params(data.features.ncols(), config.hidden, k_out, config.seed);
    let mut adam = AdamState::new(&params);
    let mut dropout_rng = rng::stream(config.seed, "gcn/dropout");

    let mut history = Vec::new();
    let mut best: Option<(f64, usize, GcnParams)> = None;
    let mut stale = 0usize;

    for epoch in 1..=config.max_epochs {
        let trace = forward(
            &params,
            data.adjacency,
            data.features,
            Mode::Train {
                dropout: config.dropout,
                rng: &mut dropout_rng,
            },
        )?;
        let (loss, grad_logits) = objective.evaluate(&trace.logits, data.targets, data.train_ids)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                objective: format!("{:?}", objective.kind),
            });
        }
        let grads = backward(&params, data.adjacency, &trace, &grad_logits, config.weight_decay)?;
        adam.step(&mut params, &grads, config.learning_rate);

        let logits = forward(&params, data.adjacency, data.features, Mode::Eval)?.logits;
        let val_acc = id_accuracy(&logits, data.targets, data.val_id, data.num_classes)?;
        let scores = val_scorer(&logits)?;
        let pick = |ids: &[usize]| ids.iter().map(|&v| scores[v]).collect::<Vec<_>>();
        let val_auroc = auroc(&pick(data.val_id), &pick(data.val_ood))?;

        let record = EpochRecord {
            epoch,
            loss,
            val_acc,
            val_auroc,
        };
        let selection = record.selection();
        history.push(record);
        log::debug!("epoch {epoch}: loss {loss:.5} val_acc {val_acc:.4} val_auroc {val_auroc:.4}");

        if best.as_ref().is_none_or(|(s, _, _)| selection > *s) {
            best = Some((selection, epoch, params.clone()));
            stale = 0;
        } else {
            stale += 1;
        }
        if stale >= config.patience {
            break;
        }
    }

    let (_, best_epoch, params) = best.expect("at least one epoch runs");
    Ok(TrainOutcome {
        params,
        history,
        best_epoch,
    })
}

#[derive(Debug, Clone)]
pub struct HeadOutcome {
    pub head: BinaryHead,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

/// Fits the binary OOD head on frozen hidden features. Early stopping uses
/// validation AUROC of the head score (`val_acc` is fixed by the frozen
/// backbone and recorded as 0).
pub fn train_binary_head(
    hidden: &Array2<f64>,
    id_ids: &[usize],
    ood_ids: &[usize],
    val_id: &[usize],
    val_ood: &[usize],
    config: &TrainConfig,
) -> Result<HeadOutcome> {
    config.validate()?;
    let mut head = BinaryHead {
        weights: Array1::zeros(hidden.ncols()),
    };
    let mut adam = AdamState::new(&head);
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, BinaryHead)> = None;
    let mut stale = 0usize;

    for epoch in 1..=config.max_epochs {
        let logits = hidden.dot(&head.weights);
        let (loss, grad_z) = binary_head_loss(logits.as_slice().expect("contiguous"), id_ids, ood_ids)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                objective: "binary head".into(),
            });
        }
        let mut grad = hidden.t().dot(&Array1::from(grad_z));
        grad.scaled_add(config.weight_decay, &head.weights);
        adam.step(&mut head, &BinaryHead { weights: grad }, config.learning_rate);

        let scores = binary_head_score(hidden, head.weights.as_slice().expect("contiguous"))?;
        let val_auroc = auroc(&scores.select(val_id), &scores.select(val_ood))?;
        history.push(EpochRecord {
            epoch,
            loss,
            val_acc: 0.0,
            val_auroc,
        });
        if best.as_ref().is_none_or(|(s, _, _)| val_auroc > *s) {
            best = Some((val_auroc, epoch, head.clone()));
            stale = 0;
        } else {
            stale += 1;
        }
        if stale >= config.patience {
            break;
        }
    }
    let (_, best_epoch, head) = best.expect("at least one epoch runs");
    Ok(HeadOutcome {
        head,
        history,
        best_epoch,
    })
}
