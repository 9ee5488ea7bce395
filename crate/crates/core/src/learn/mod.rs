//! Analytically differentiated training stack: dense networks, Adam, the
//! winner-takes-all reconstruction losses, the ranking loss, and the
//! combined lane-anchor objective with its cross-coordinate regularizers.

mod adam;
mod anchor_loss;
mod encode;
mod fit;
mod loss;
mod mlp;
mod model;
mod train;

pub use adam::AdamState;
pub use anchor_loss::{anchor_loss, LossBreakdown, LossConfig, OutputGrads};
pub use encode::{encode_agent, AnchorFrame, EncodedInput, INPUT_SCALE};
pub use fit::{fit_unconditional, FitReport, HypothesisParams};
pub use loss::{
    ioc_target_q, per_hypothesis_l2, per_hypothesis_l2_grad, score_loss,
    score_loss_grad_distances, score_loss_grad_logits, softmax,
};
pub use mlp::{Mlp, MlpCache, MlpGrads};
pub use model::{AnchorModel, AnchorOutputs, GoalModel, GoalOutputs, MultiHeadNet, NetCache};
pub use train::{
    train_conditional, train_two_stage, AnchorSample, GoalSample, TrainConfig, TrainReport,
    TwoStageReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite gradient; training aborted")]
    NonFiniteGradient,
    #[error("non-finite loss at iteration {iter}; training aborted")]
    NonFiniteLoss { iter: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}
