//! File formats: PLY clouds, `S4F1` feature matrices, partition files,
//! token files and the JSON configuration.

mod config;
mod features;
mod partition;
mod ply;
mod tokens;

pub use config::Config;
pub use features::{decode_feature_matrix, encode_feature_matrix, read_feature_matrix, write_feature_matrix, FEATURE_MAGIC};
pub use partition::{format_partition, parse_partition, read_partition, write_partition};
pub use ply::{encode_ply, parse_ply, read_ply, write_ply, PlyFormat};
pub use tokens::{offsets_path, read_tokens, write_tokens};
