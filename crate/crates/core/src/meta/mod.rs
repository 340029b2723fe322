//! Meta-models: the stacking network over concatenated representations and
//! linear stacking over base-model outputs.

pub mod mlp;
pub mod normalize;
pub mod stack;

pub use mlp::{gradient_check, train_mlp, MlpConfig, MlpModel, OutputHead};
pub use normalize::{Normalizer, NormalizerKind};
pub use stack::{assemble_stack_input, stack_base_outputs, train_linear_stack, BaseOutput, StackInputSpec, StackMode};
