//! Self-supervised objective kernel: masking, query-decoder attention,
//! spatially constrained Sinkhorn K-Means, assignment and distillation
//! losses with analytic gradients, EMA and finite-difference checking.

mod decoder;
mod kmeans;
mod losses;
mod mask;
mod sinkhorn;

pub use decoder::{query_decoder_forward, DecoderOutput};
pub use kmeans::{constrained_kmeans, ClusterState, KMeansConfig, KMeansIteration, KMeansResult};
pub use losses::{
    assignment_loss, assignment_loss_grad_logits, cosine_similarity, ema_update, finite_diff_grad,
    global_distill_grad, global_distill_loss, local_distill_grad, local_distill_loss, softmax_rows,
    student_assignment, student_logits, total_loss, LossConfig, LossReport, DEFAULT_LAMBDA_G, DEFAULT_LAMBDA_L,
    DEFAULT_TAU,
};
pub use mask::{masked_count, random_mask, MaskPartition, DEFAULT_MASK_RATIO};
pub use sinkhorn::{sinkhorn_normalize, SinkhornResult};
