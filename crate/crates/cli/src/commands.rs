use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{s, Array2, Axis};
use serde::Serialize;

use s4tok_core::geometry::Point3;
use s4tok_core::io::{
    read_feature_matrix, read_partition, read_ply, read_tokens, write_feature_matrix, write_partition, write_ply,
    write_tokens, PlyFormat,
};
use s4tok_core::propagation::{pool_superpoint_features, propagate_features, PropagationInputs};
use s4tok_core::segmentation::segment as run_segmentation;
use s4tok_core::ssl::{
    assignment_loss, constrained_kmeans, global_distill_loss, local_distill_loss, query_decoder_forward, random_mask,
    student_assignment, total_loss, KMeansConfig, KMeansResult, LossReport,
};
use s4tok_core::synthetic::{indoor_scene, parallel_planes, perpendicular_planes};
use s4tok_core::tokenizer::{boundary_crossing_rate, patch_purity, positional_encoding, tokenize as run_tokenizer};
use s4tok_core::{Config, PointCloud, SuperpointPartition, TokenizerOutput};

use crate::error::{at_path, CliError, CliResult};
use crate::options::{
    labels_path, ClusterArgs, LossesArgs, PropagateArgs, SceneKind, SegmentArgs, SynthArgs, TokenizeArgs,
};

pub fn emit<T: Serialize>(report: &T, out: Option<&Path>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    if let Some(path) = out {
        std::fs::write(path, &text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    }
    print!("{text}");
    Ok(())
}

pub fn load_cloud(path: &Path) -> CliResult<PointCloud> {
    read_ply(path).map_err(at_path(path))
}

pub fn load_partition(path: &Path, cloud: &PointCloud) -> CliResult<SuperpointPartition> {
    let partition = read_partition(path).map_err(at_path(path))?;
    if partition.len() != cloud.len() {
        return Err(CliError::input(format!(
            "{}: {} labels for a cloud of {} points",
            path.display(),
            partition.len(),
            cloud.len()
        )));
    }
    Ok(partition)
}

fn load_features(path: &Path, rows: usize, what: &str) -> CliResult<Array2<f64>> {
    let m = read_feature_matrix(path).map_err(at_path(path))?;
    if m.nrows() != rows {
        return Err(CliError::input(format!(
            "{}: {what} features are {}x{} but there are {rows} tokens",
            path.display(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

pub fn size_histogram(sizes: impl IntoIterator<Item = usize>) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for s in sizes {
        *hist.entry(s).or_insert(0) += 1;
    }
    hist
}

#[derive(Serialize)]
struct SegmentReport {
    points: usize,
    superpoints: usize,
    size_histogram: BTreeMap<usize, usize>,
    energy: f64,
    energy_trace: Vec<f64>,
    iterations: usize,
    small_merges: usize,
}

pub fn segment(config: &Config, args: &SegmentArgs) -> CliResult<()> {
    let cloud = load_cloud(&args.cloud)?;
    let result = run_segmentation(&cloud, &config.segmentation)?;
    if let Some(out) = &args.out {
        write_partition(out, &result.partition).map_err(at_path(out))?;
    }
    emit(
        &SegmentReport {
            points: cloud.len(),
            superpoints: result.partition.count(),
            size_histogram: size_histogram(result.partition.sizes().iter().copied()),
            energy: result.energy,
            energy_trace: result.energy_trace,
            iterations: result.iterations,
            small_merges: result.small_merges,
        },
        None,
    )
}

#[derive(Serialize)]
struct TokenizeReport {
    tokens: usize,
    mode: String,
    normalize: bool,
    radius: f64,
    spacing: f64,
    size_histogram: BTreeMap<usize, usize>,
    singleton_count: usize,
    superpoints: usize,
    purity: f64,
    boundary_crossing: f64,
}

pub fn tokenize(config: &Config, args: &TokenizeArgs) -> CliResult<()> {
    let mut config = config.clone();
    args.overrides.apply(&mut config);
    let cloud = load_cloud(&args.cloud)?;
    let partition = match &args.partition {
        Some(path) => load_partition(path, &cloud)?,
        None => run_segmentation(&cloud, &config.segmentation)?.partition,
    };
    let output = run_tokenizer(&cloud, &partition, &config.tokenizer)?;
    write_tokens(&output, &args.out).map_err(at_path(&args.out))?;
    emit(
        &TokenizeReport {
            tokens: output.patches.len(),
            mode: output.mode.to_string(),
            normalize: output.normalize,
            radius: output.radius,
            spacing: output.spacing,
            size_histogram: output.stats.size_histogram.clone(),
            singleton_count: output.stats.singleton_count,
            superpoints: partition.count(),
            purity: patch_purity(&output.patches, partition.labels()),
            boundary_crossing: boundary_crossing_rate(&output.patches, partition.labels()),
        },
        None,
    )
}

fn load_tokens(path: &Path) -> CliResult<TokenizerOutput> {
    read_tokens(path).map_err(at_path(path))
}

#[derive(Serialize)]
struct PropagateReport {
    points: usize,
    tokens: usize,
    feature_dim: usize,
    superpoints: usize,
    fallback_points: usize,
}

pub fn propagate(config: &Config, args: &PropagateArgs) -> CliResult<()> {
    let cloud = load_cloud(&args.cloud)?;
    let partition = load_partition(&args.partition, &cloud)?;
    let tokens = load_tokens(&args.tokens)?;
    if let Some(&i) = tokens.centroid_indices.iter().find(|&&i| i >= cloud.len()) {
        return Err(CliError::input(format!(
            "{}: centroid index {i} is outside a cloud of {} points",
            args.tokens.display(),
            cloud.len()
        )));
    }
    let features = load_features(&args.features, tokens.centroids.len(), "token")?;
    let centroid_labels: Vec<usize> = tokens.centroid_indices.iter().map(|&i| partition.label(i)).collect();
    let propagated = propagate_features(&PropagationInputs {
        point_positions: cloud.positions(),
        point_labels: partition.labels(),
        centroid_positions: &tokens.centroids,
        centroid_labels: &centroid_labels,
        centroid_features: features.view(),
        epsilon: config.propagation.epsilon,
    })?;
    write_feature_matrix(&args.out, propagated.features.view()).map_err(at_path(&args.out))?;
    if let Some(path) = &args.pooled {
        let pooled = pool_superpoint_features(propagated.features.view(), &partition)?;
        write_feature_matrix(path, pooled.view()).map_err(at_path(path))?;
    }
    emit(
        &PropagateReport {
            points: cloud.len(),
            tokens: tokens.centroids.len(),
            feature_dim: features.ncols(),
            superpoints: partition.count(),
            fallback_points: propagated.fallback_points.len(),
        },
        None,
    )
}

fn run_kmeans(config: &Config, features: &Array2<f64>, tokens: &TokenizerOutput) -> CliResult<KMeansResult> {
    let kc = KMeansConfig {
        k: config.kmeans.k.min(features.nrows()),
        ..config.kmeans
    };
    let radius = config.kmeans.radius.unwrap_or(tokens.radius);
    Ok(constrained_kmeans(features.view(), &tokens.centroids, radius, &kc)?)
}

#[derive(Serialize)]
struct ClusterReport {
    tokens: usize,
    clusters: usize,
    radius: f64,
    relaxed_rows: usize,
    reseeded: usize,
    /// Tokens whose largest assignment goes to each cluster.
    cluster_sizes: Vec<usize>,
}

pub fn cluster(config: &Config, args: &ClusterArgs) -> CliResult<()> {
    let tokens = load_tokens(&args.tokens)?;
    let features = load_features(&args.features, tokens.centroids.len(), "token")?;
    let result = run_kmeans(config, &features, &tokens)?;
    if let Some(out) = &args.out {
        write_feature_matrix(out, result.gamma.view()).map_err(at_path(out))?;
    }
    let mut sizes = vec![0; result.gamma.ncols()];
    for row in result.gamma.rows() {
        let best = row
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (j, &v)| if v > b.1 { (j, v) } else { b })
            .0;
        sizes[best] += 1;
    }
    emit(
        &ClusterReport {
            tokens: features.nrows(),
            clusters: result.gamma.ncols(),
            radius: result.state.radius,
            relaxed_rows: result.relaxed_rows,
            reseeded: result.reseeded,
            cluster_sizes: sizes,
        },
        None,
    )
}

#[derive(Serialize)]
struct LossesReport {
    #[serde(flatten)]
    losses: LossReport,
    tokens: usize,
    masked: usize,
    clusters: usize,
    superpoints: usize,
    warnings: Vec<String>,
}

pub fn losses(config: &Config, args: &LossesArgs) -> CliResult<()> {
    let tokens = load_tokens(&args.tokens)?;
    let n = tokens.centroids.len();
    let teacher = load_features(&args.teacher, n, "teacher")?;
    let target = load_features(&args.target, n, "target")?;
    let student = match &args.student {
        Some(path) => load_features(path, n, "student")?,
        None => teacher.clone(),
    };
    if student.ncols() != teacher.ncols() {
        return Err(CliError::input(format!(
            "student features are {}x{} but teacher features are {}x{}",
            student.nrows(),
            student.ncols(),
            teacher.nrows(),
            teacher.ncols()
        )));
    }
    if target.ncols() != student.ncols() {
        return Err(CliError::input(format!(
            "target features are {}x{} but student features are {}x{}",
            target.nrows(),
            target.ncols(),
            student.nrows(),
            student.ncols()
        )));
    }
    let lc = config.losses;
    let mut warnings = Vec::new();
    let mask = random_mask(n, lc.mask_ratio, lc.seed)?;
    let km = run_kmeans(config, &teacher, &tokens)?;

    let assign = if mask.masked.is_empty() {
        warnings.push("mask is empty; assignment loss over no tokens reported as 0".to_string());
        0.0
    } else {
        let d = student.ncols();
        let masked_centroids: Vec<Point3> = mask.masked.iter().map(|&i| tokens.centroids[i]).collect();
        let pe = positional_encoding(&masked_centroids, d.div_ceil(6) * 6)?;
        let pe = pe.slice(s![.., ..d]);
        let queries = Array2::zeros((mask.masked.len(), d));
        let visible = student.select(Axis(0), &mask.visible);
        let decoded = query_decoder_forward(queries.view(), pe, visible.view(), lc.heads)?;
        let mut predicted = student.clone();
        for (row, &i) in decoded.output.rows().into_iter().zip(&mask.masked) {
            predicted.row_mut(i).assign(&row);
        }
        let student_gamma = student_assignment(predicted.view(), km.state.centroid_features.view(), lc.tau)?;
        assignment_loss(km.gamma.view(), student_gamma.view(), &mask.masked)?
    };

    let groups: Vec<usize> = tokens.patches.iter().map(|p| p.superpoint).collect();
    let groups = SuperpointPartition::from_raw_labels(&groups)?;
    let pooled_student = pool_superpoint_features(student.view(), &groups)?;
    let pooled_target = pool_superpoint_features(target.view(), &groups)?;
    let local = local_distill_loss(pooled_student.view(), pooled_target.view())?;
    let mean = |m: &Array2<f64>| m.mean_axis(Axis(0)).expect("at least one token");
    let global = global_distill_loss(mean(&student).view(), mean(&target).view())?;

    for w in &warnings {
        eprintln!("warning: {w}");
    }
    emit(
        &LossesReport {
            losses: total_loss(assign, local, global, lc.lambda_l, lc.lambda_g),
            tokens: n,
            masked: mask.masked.len(),
            clusters: km.gamma.ncols(),
            superpoints: groups.count(),
            warnings,
        },
        args.out.as_deref(),
    )
}

#[derive(Serialize)]
struct SynthReport {
    points: usize,
    primitives: usize,
    cloud: String,
    labels: String,
}

pub fn synth(config: &Config, args: &SynthArgs) -> CliResult<()> {
    let seed = config.tokenizer.seed;
    let scene = match args.scene {
        SceneKind::Indoor => indoor_scene(args.points, args.noise, seed)?,
        SceneKind::PerpendicularPlanes => perpendicular_planes(args.points, args.noise, seed)?,
        SceneKind::ParallelPlanes => parallel_planes(args.points, args.gap, seed)?,
    };
    let labels = SuperpointPartition::from_raw_labels(&scene.labels)?;
    let labels_out = labels_path(&args.out);
    write_ply(&args.out, &scene.cloud, PlyFormat::BinaryLittleEndian).map_err(at_path(&args.out))?;
    write_partition(&labels_out, &labels).map_err(at_path(&labels_out))?;
    emit(
        &SynthReport {
            points: scene.cloud.len(),
            primitives: labels.count(),
            cloud: args.out.display().to_string(),
            labels: labels_out.display().to_string(),
        },
        None,
    )
}
