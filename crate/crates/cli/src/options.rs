use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use s4tok_core::tokenizer::GroupingMode;
use s4tok_core::Config;

use crate::error::{at_path, CliResult};

#[derive(Debug, Parser)]
#[command(name = "s4tok", version, about = "Scale-invariant superpoint tokenization of point clouds")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON configuration file; missing sections keep their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for sampling, masking and clustering.
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,
}

impl GlobalArgs {
    pub fn load_config(&self) -> CliResult<Config> {
        let mut config = match &self.config {
            Some(path) => Config::load(path).map_err(at_path(path))?,
            None => Config::default(),
        };
        if let Some(seed) = self.seed {
            config.tokenizer.seed = seed;
            config.kmeans.seed = seed;
            config.losses.seed = seed;
        }
        Ok(config)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Oversegment a cloud into superpoints.
    Segment(SegmentArgs),
    /// Sample centers and group patches.
    Tokenize(TokenizeArgs),
    /// Upsample token features to every point.
    Propagate(PropagateArgs),
    /// Spatially constrained Sinkhorn K-Means over token features.
    Cluster(ClusterArgs),
    /// Evaluate the self-supervised losses on feature files.
    Losses(LossesArgs),
    /// Compare grouping modes across coordinate scales.
    Bench(BenchArgs),
    /// Write a labeled synthetic scene.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Input PLY.
    pub cloud: PathBuf,
    /// Partition file to write, one label per line.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Command-line overrides of the tokenizer configuration.
#[derive(Debug, Args, Default)]
pub struct TokenizerOverrides {
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<GroupingMode>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of tokens N.
    #[arg(long, value_name = "N")]
    pub tokens: Option<usize>,
    /// Patch size cap M.
    #[arg(long, value_name = "M")]
    pub cap: Option<usize>,
    /// Keep raw offsets instead of dividing by the radius.
    #[arg(long)]
    pub no_normalize: bool,
}

impl TokenizerOverrides {
    pub fn apply(&self, config: &mut Config) {
        let t = &mut config.tokenizer;
        if let Some(m) = self.mode {
            t.mode = m;
        }
        if let Some(g) = self.gamma {
            t.gamma = g;
        }
        if let Some(a) = self.alpha {
            t.alpha = a;
        }
        if let Some(n) = self.tokens {
            t.n_tokens = n;
        }
        if let Some(m) = self.cap {
            t.patch_cap = m;
        }
        if self.no_normalize {
            t.normalize = false;
        }
    }
}

fn parse_mode(s: &str) -> Result<GroupingMode, String> {
    s.parse().map_err(|e: s4tok_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct TokenizeArgs {
    pub cloud: PathBuf,
    /// Superpoint partition of the cloud.
    #[arg(long, value_name = "PATH", conflicts_with = "segment", required_unless_present = "segment")]
    pub partition: Option<PathBuf>,
    /// Segment the cloud first instead of reading a partition.
    #[arg(long)]
    pub segment: bool,
    /// Token JSON to write; offsets go to a sibling `.offsets.s4f` file.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: TokenizerOverrides,
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    pub cloud: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub tokens: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub partition: PathBuf,
    /// Token features, one S4F1 row per token.
    #[arg(long, value_name = "PATH")]
    pub features: PathBuf,
    /// Per-point features to write (S4F1).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Also write per-superpoint mean features (S4F1).
    #[arg(long, value_name = "PATH")]
    pub pooled: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long, value_name = "PATH")]
    pub tokens: PathBuf,
    /// Token features, one S4F1 row per token.
    #[arg(long, value_name = "PATH")]
    pub features: PathBuf,
    /// Soft assignment matrix to write (S4F1, tokens x clusters).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LossesArgs {
    #[arg(long, value_name = "PATH")]
    pub tokens: PathBuf,
    /// Teacher token features (S4F1).
    #[arg(long, value_name = "PATH")]
    pub teacher: PathBuf,
    /// Distillation target token features (S4F1).
    #[arg(long, value_name = "PATH")]
    pub target: PathBuf,
    /// Student token features; defaults to the teacher features.
    #[arg(long, value_name = "PATH")]
    pub student: Option<PathBuf>,
    /// Write the report here as well as to stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Input PLY files.
    pub clouds: Vec<PathBuf>,
    /// Ground-truth label files, one per cloud, in partition format.
    #[arg(long, value_name = "PATH")]
    pub labels: Vec<PathBuf>,
    /// Benchmark generated scenes instead of (or besides) files.
    #[arg(long)]
    pub synthetic: bool,
    /// Points per synthetic scene.
    #[arg(long, default_value_t = 4000)]
    pub points: usize,
    /// Coordinate scale factors.
    #[arg(long, value_delimiter = ',', default_value = "0.01,1,100")]
    pub scales: Vec<f64>,
    /// Report path; timings go to a sibling `.timings.json` file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: TokenizerOverrides,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SceneKind {
    Indoor,
    PerpendicularPlanes,
    ParallelPlanes,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "indoor")]
    pub scene: SceneKind,
    #[arg(long, default_value_t = 4000)]
    pub points: usize,
    /// Gaussian noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Plane separation for `parallel-planes`.
    #[arg(long, default_value_t = 0.25)]
    pub gap: f64,
    /// PLY to write; ground-truth labels go to a sibling `.labels` file.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

pub fn labels_path(cloud: &std::path::Path) -> PathBuf {
    cloud.with_extension("labels")
}
