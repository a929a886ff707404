use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use s4tok_core::io::read_partition;
use s4tok_core::segmentation::segment;
use s4tok_core::synthetic::{indoor_scene, perpendicular_planes};
use s4tok_core::tokenizer::{boundary_crossing_rate, patch_purity, tokenize, GroupingMode};
use s4tok_core::{Config, PointCloud, SuperpointPartition, TokenizerOutput};

use crate::commands::{emit, load_cloud};
use crate::error::{at_path, CliError, CliResult};
use crate::options::BenchArgs;

/// Noise on generated indoor scenes, in scene units (about 4 across).
const SYNTHETIC_NOISE: f64 = 0.005;

struct Scene {
    name: String,
    cloud: PointCloud,
    truth: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct ScaleRecord {
    scale: f64,
    purity: f64,
    boundary_crossing: f64,
    singleton_count: usize,
}

#[derive(Serialize)]
struct VariantRecord {
    scene: String,
    mode: String,
    normalize: bool,
    scales: Vec<ScaleRecord>,
    /// Fraction of patch ranks whose member sets agree at every scale.
    agreement: f64,
    /// Largest offset difference to the first scale, relative to the
    /// largest first-scale offset.
    offset_deviation: f64,
}

#[derive(Serialize)]
struct SceneRecord {
    name: String,
    points: usize,
    /// `labels` when ground truth was supplied, else `superpoints`.
    reference: &'static str,
    superpoints: Vec<usize>,
    /// Partitions at every scale equal up to relabeling.
    partitions_consistent: bool,
}

#[derive(Serialize)]
struct BenchReport {
    seed: u64,
    tokens: usize,
    patch_cap: usize,
    gamma: f64,
    alpha: f64,
    scales: Vec<f64>,
    scenes: Vec<SceneRecord>,
    variants: Vec<VariantRecord>,
}

#[derive(Serialize)]
struct VariantTiming {
    mode: String,
    normalize: bool,
    tokenize_seconds: Vec<f64>,
}

#[derive(Serialize)]
struct SceneTiming {
    name: String,
    segment_seconds: Vec<f64>,
    variants: Vec<VariantTiming>,
}

struct SceneResult {
    record: SceneRecord,
    variants: Vec<VariantRecord>,
    timing: SceneTiming,
}

fn load_scenes(config: &Config, args: &BenchArgs) -> CliResult<Vec<Scene>> {
    if !args.labels.is_empty() && args.labels.len() != args.clouds.len() {
        return Err(CliError::input(format!(
            "{} label files for {} clouds",
            args.labels.len(),
            args.clouds.len()
        )));
    }
    let mut scenes = Vec::new();
    for (i, path) in args.clouds.iter().enumerate() {
        let cloud = load_cloud(path)?;
        let truth = match args.labels.get(i) {
            Some(lp) => Some(read_truth(lp, cloud.len())?),
            None => None,
        };
        scenes.push(Scene {
            name: path.display().to_string(),
            cloud,
            truth,
        });
    }
    if args.synthetic {
        let seed = config.tokenizer.seed;
        for (name, scene) in [
            ("synthetic:indoor", indoor_scene(args.points, SYNTHETIC_NOISE, seed)?),
            ("synthetic:perpendicular-planes", perpendicular_planes(args.points, 0.0, seed)?),
        ] {
            scenes.push(Scene {
                name: name.to_string(),
                cloud: scene.cloud,
                truth: Some(scene.labels),
            });
        }
    }
    if scenes.is_empty() {
        return Err(CliError::input("bench needs at least one cloud or --synthetic"));
    }
    Ok(scenes)
}

fn read_truth(path: &Path, points: usize) -> CliResult<Vec<usize>> {
    let labels = read_partition(path).map_err(at_path(path))?;
    if labels.len() != points {
        return Err(CliError::input(format!(
            "{}: {} labels for a cloud of {points} points",
            path.display(),
            labels.len()
        )));
    }
    Ok(labels.labels().to_vec())
}

fn sorted_members(output: &TokenizerOutput) -> Vec<Vec<usize>> {
    output
        .patches
        .iter()
        .map(|p| {
            let mut m = p.members.clone();
            m.sort_unstable();
            m
        })
        .collect()
}

fn agreement(runs: &[TokenizerOutput]) -> f64 {
    let sets: Vec<_> = runs.iter().map(sorted_members).collect();
    let most = sets.iter().map(Vec::len).max().unwrap_or(0);
    if most == 0 {
        return 1.0;
    }
    let same = (0..most)
        .filter(|&p| sets.iter().all(|s| s.get(p).is_some() && s.get(p) == sets[0].get(p)))
        .count();
    same as f64 / most as f64
}

fn offset_deviation(runs: &[TokenizerOutput]) -> f64 {
    let flat = |o: &TokenizerOutput| -> Vec<f64> { o.patches.iter().flat_map(|p| p.offsets.iter().copied()).collect() };
    let base = flat(&runs[0]);
    let scale = base.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    runs[1..]
        .iter()
        .map(|r| {
            let other = flat(r);
            if other.len() != base.len() {
                return f64::INFINITY;
            }
            base.iter().zip(&other).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
        })
        .fold(0.0, f64::max)
}

fn run_scene(config: &Config, scene: &Scene, scales: &[f64]) -> CliResult<SceneResult> {
    let mut clouds = Vec::with_capacity(scales.len());
    let mut partitions: Vec<SuperpointPartition> = Vec::with_capacity(scales.len());
    let mut segment_seconds = Vec::with_capacity(scales.len());
    for &c in scales {
        let cloud = scene.cloud.scaled(c)?;
        let start = Instant::now();
        let result = segment(&cloud, &config.segmentation)?;
        segment_seconds.push(start.elapsed().as_secs_f64());
        clouds.push(cloud);
        partitions.push(result.partition);
    }
    let reference = scene.truth.clone().unwrap_or_else(|| partitions[0].labels().to_vec());

    let mut variants = Vec::new();
    let mut timings = Vec::new();
    for mode in GroupingMode::ALL {
        for normalize in [true, false] {
            let mut tc = config.tokenizer.clone();
            tc.mode = mode;
            tc.normalize = normalize;
            let mut runs = Vec::with_capacity(scales.len());
            let mut seconds = Vec::with_capacity(scales.len());
            for (cloud, partition) in clouds.iter().zip(&partitions) {
                let start = Instant::now();
                runs.push(tokenize(cloud, partition, &tc)?);
                seconds.push(start.elapsed().as_secs_f64());
            }
            variants.push(VariantRecord {
                scene: scene.name.clone(),
                mode: mode.to_string(),
                normalize,
                scales: scales
                    .iter()
                    .zip(&runs)
                    .map(|(&scale, r)| ScaleRecord {
                        scale,
                        purity: patch_purity(&r.patches, &reference),
                        boundary_crossing: boundary_crossing_rate(&r.patches, &reference),
                        singleton_count: r.stats.singleton_count,
                    })
                    .collect(),
                agreement: agreement(&runs),
                offset_deviation: offset_deviation(&runs),
            });
            timings.push(VariantTiming {
                mode: mode.to_string(),
                normalize,
                tokenize_seconds: seconds,
            });
        }
    }
    Ok(SceneResult {
        record: SceneRecord {
            name: scene.name.clone(),
            points: scene.cloud.len(),
            reference: if scene.truth.is_some() { "labels" } else { "superpoints" },
            superpoints: partitions.iter().map(SuperpointPartition::count).collect(),
            partitions_consistent: partitions.iter().all(|p| p.equivalent(&partitions[0])),
        },
        variants,
        timing: SceneTiming {
            name: scene.name.clone(),
            segment_seconds,
            variants: timings,
        },
    })
}

pub fn run(config: &Config, args: &BenchArgs) -> CliResult<()> {
    let mut config = config.clone();
    args.overrides.apply(&mut config);
    if args.scales.is_empty() {
        return Err(CliError::input("--scales needs at least one value"));
    }
    if let Some(c) = args.scales.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(CliError::input(format!("scale {c} must be finite and positive")));
    }
    let scenes = load_scenes(&config, args)?;
    let results = scenes
        .par_iter()
        .map(|s| run_scene(&config, s, &args.scales))
        .collect::<CliResult<Vec<_>>>()?;

    let mut report = BenchReport {
        seed: config.tokenizer.seed,
        tokens: config.tokenizer.n_tokens,
        patch_cap: config.tokenizer.patch_cap,
        gamma: config.tokenizer.gamma,
        alpha: config.tokenizer.alpha,
        scales: args.scales.clone(),
        scenes: Vec::new(),
        variants: Vec::new(),
    };
    let mut timings = Vec::new();
    for r in results {
        report.scenes.push(r.record);
        report.variants.extend(r.variants);
        timings.push(r.timing);
    }
    let timing_text = serde_json::to_string_pretty(&timings).map_err(|e| CliError::Numerical(e.to_string()))?;
    match &args.out {
        Some(out) => {
            let path = out.with_extension("timings.json");
            std::fs::write(&path, timing_text + "\n")
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        }
        None => eprintln!("{timing_text}"),
    }
    emit(&report, args.out.as_deref())
}
