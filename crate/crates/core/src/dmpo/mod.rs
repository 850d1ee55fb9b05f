//! Preference alignment of a small autoregressive layout generator.
//!
//! Layouts are tokenized onto a coordinate grid, a tabular-softmax policy is
//! pretrained by maximum likelihood, and then aligned to an evaluator with
//! DPO, fixed-margin DPO, or the dynamic margin `f(d) = e^d - e^-d` where `d`
//! is the evaluator score gap of a preference pair.

pub mod ablation;
pub mod checkpoint;
pub mod loss;
pub mod policy;
pub mod pretrain;
pub mod tokens;
pub mod train;

pub use ablation::{ablation_harness, eval_seed, AblationConfig, AblationRow, AblationTable};
pub use loss::{f_transform, margin, preference_loss, MarginKind, PreferencePair};
pub use policy::{context_id, ToyPolicy, NUM_CONTEXTS};
pub use pretrain::{mean_nll, nll_pretrain};
pub use tokens::{Token, TokenScheme};
pub use train::{
    dmpo_train, evaluate_policy, rule_evaluator, PolicyEval, PromptContext, TrainConfig,
    TrainHistory, TrainingData,
};
