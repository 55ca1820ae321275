use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use xvrmot_core::datamodel::{validate_description, validate_scene, AttributeVocabulary, DetKey};
use xvrmot_core::fusion::self_check;
use xvrmot_core::ingest::{
    parse_descriptions, parse_predictions, parse_scene, read_descriptions, read_scene_unchecked, read_scores,
    read_track_dir, view_file, write_descriptions, write_predictions, write_report, write_scene, write_scores,
    write_track_dir, EvaluationReport, IngestError, ScoreMap,
};
use xvrmot_core::metrics::evaluate_description;
use xvrmot_core::predictor::filter_tracks;
use xvrmot_core::synth::{generate_descriptions, generate_scene, perturb, score_tracks, ErrorSpec, ScoreLevels};

use crate::settings::Settings;
use crate::table::render_table;

fn gt_dir_for(manifest: &Path, gt: &Option<PathBuf>) -> PathBuf {
    gt.clone().unwrap_or_else(|| manifest.parent().unwrap_or(Path::new(".")).join("gt"))
}

#[derive(Args, Debug, Clone)]
pub struct EvaluateArgs {
    /// scene manifest (JSON)
    #[arg(long)]
    pub scene: PathBuf,
    /// ground-truth directory; defaults to `gt/` next to the manifest
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub descriptions: PathBuf,
    /// root holding one directory of per-view CSVs per description
    #[arg(long)]
    pub predictions: PathBuf,
}

pub fn evaluate(args: &EvaluateArgs, settings: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool> {
    let scene = parse_scene(&args.scene, &gt_dir_for(&args.scene, &args.gt))?;
    let descriptions = parse_descriptions(&args.descriptions, &scene, &AttributeVocabulary::standard())?;
    let config = settings.run.eval;
    let scored: Vec<_> = settings.pool()?.install(|| {
        descriptions
            .par_iter()
            .map(|d| {
                let (tracks, warning) = match parse_predictions(&args.predictions, &d.id, scene.num_views) {
                    Ok(set) => (set.tracks, None),
                    Err(IngestError::MissingFile { path }) if path == args.predictions.join(&d.id) => {
                        (Vec::new(), Some(format!("{}: no predictions, scored as empty", path.display())))
                    }
                    Err(e) => return Err(anyhow::Error::new(e)),
                };
                let result = evaluate_description(&scene, d, &tracks, &config)?;
                Ok((result, warning))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut results = Vec::with_capacity(scored.len());
    for (result, warning) in scored {
        if let Some(w) = warning {
            writeln!(err, "warning: {w}")?;
        }
        results.push(result);
    }
    let report = EvaluationReport::new(settings.run, results);
    if let Some(path) = &settings.out {
        write_report(path, &report)?;
    }
    write!(out, "{}", render_table(&report))?;
    Ok(true)
}

#[derive(Args, Debug, Clone)]
pub struct FilterArgs {
    /// directory of per-view track CSVs
    #[arg(long)]
    pub tracks: PathBuf,
    /// per-view score tables, or one subdirectory of them per description
    #[arg(long)]
    pub scores: PathBuf,
}

/// Number of consecutive `view_<j>.csv` files starting at view 0.
fn count_views(dir: &Path) -> Result<usize> {
    let n = (0..).take_while(|&v| view_file(dir, v).is_file()).count();
    if n == 0 {
        bail!("{}: no view_0.csv found", dir.display());
    }
    Ok(n)
}

pub fn filter(args: &FilterArgs, settings: &Settings, out: &mut dyn Write) -> Result<bool> {
    let out_dir = settings.require_out("filter")?;
    let num_views = count_views(&args.tracks)?;
    let (tracks, _) = read_track_dir(&args.tracks, num_views)?;

    let jobs: Vec<(String, PathBuf, PathBuf)> = if view_file(&args.scores, 0).is_file() {
        vec![(String::from("."), args.scores.clone(), out_dir.to_path_buf())]
    } else {
        let entries = fs::read_dir(&args.scores).with_context(|| format!("{}: cannot list", args.scores.display()))?;
        let mut names: Vec<String> = Vec::new();
        for entry in entries {
            let entry = entry.with_context(|| format!("{}: cannot list", args.scores.display()))?;
            if entry.file_type()?.is_dir() {
                names.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        names.sort();
        names.into_iter().map(|n| (n.clone(), args.scores.join(&n), out_dir.join(&n))).collect()
    };
    if jobs.is_empty() {
        bail!("{}: no score tables", args.scores.display());
    }

    let beta = settings.run.fusion.beta;
    let predictor = settings.run.predictor;
    let summaries = settings.pool()?.install(|| {
        jobs.par_iter()
            .map(|(name, score_dir, dest)| {
                let scores = read_scores(score_dir, num_views)?;
                let kept = filter_tracks(&tracks, &scores, beta, &predictor)
                    .with_context(|| format!("{}: filtering failed", score_dir.display()))?;
                let kept_keys: BTreeSet<DetKey> =
                    kept.iter().flat_map(|t| t.detections.iter().map(|d| d.key())).collect();
                let kept_scores: ScoreMap = scores.into_iter().filter(|(k, _)| kept_keys.contains(k)).collect();
                write_track_dir(dest, &kept, &kept_scores, num_views)?;
                Ok(format!(
                    "{name}: kept {} of {} tracks, {} of {} detections",
                    kept.len(),
                    tracks.len(),
                    kept_keys.len(),
                    tracks.iter().map(|t| t.len()).sum::<usize>()
                ))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    for line in summaries {
        writeln!(out, "{line}")?;
    }
    Ok(true)
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    #[arg(long)]
    pub views: usize,
    #[arg(long)]
    pub ids: usize,
    #[arg(long)]
    pub frames: u32,
    /// TOML error spec: misses, false_positives, temporal_switches, crossview_mismatches
    #[arg(long, value_name = "FILE")]
    pub errors: Option<PathBuf>,
    /// number of descriptions, `d0` included
    #[arg(long, default_value_t = 4)]
    pub descriptions: usize,
    #[arg(long, default_value_t = 1920)]
    pub image_width: u32,
    #[arg(long, default_value_t = 1080)]
    pub image_height: u32,
    /// score level for referred detections
    #[arg(long, default_value_t = 0.95)]
    pub hi: f64,
    /// score level for other detections
    #[arg(long, default_value_t = 0.05)]
    pub lo: f64,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
}

fn read_error_spec(path: &Path) -> Result<ErrorSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("{}: cannot read error spec", path.display()))?;
    toml::from_str(&text).with_context(|| format!("{}: invalid error spec", path.display()))
}

/// Writes `scene.json`, `gt/`, `descriptions.json`, `tracks/` (ground truth as
/// tracker output), `scores/<description>/`, and with an error spec also
/// `predictions/d0/` and `ledger.json`.
pub fn synth(args: &SynthArgs, settings: &Settings, out: &mut dyn Write) -> Result<bool> {
    let dir = settings.require_out("synth")?;
    let spec = args.errors.as_deref().map(read_error_spec).transpose()?;
    let seed = settings.seed;
    let scene = generate_scene(args.views, args.ids, args.frames, (args.image_width, args.image_height), seed)?;
    write_scene(&scene, &dir.join("scene.json"), &dir.join("gt"))?;

    let (descriptions, _) = generate_descriptions(&scene, args.descriptions, seed);
    write_descriptions(&dir.join("descriptions.json"), &descriptions)?;
    write_track_dir(&dir.join("tracks"), &scene.gt_tracks, &ScoreMap::new(), scene.num_views)?;

    let levels = ScoreLevels { hi: args.hi, lo: args.lo, jitter: args.jitter };
    for (k, d) in descriptions.iter().enumerate() {
        let scores =
            score_tracks(&scene, &scene.gt_tracks, &d.referred_identities, levels, seed.wrapping_add(k as u64 + 1))?;
        write_scores(&dir.join("scores").join(&d.id), &scores, scene.num_views)?;
    }

    if let Some(spec) = spec {
        let (mut predictions, ledger) = perturb(&scene, &spec, seed)?;
        predictions.description_id = "d0".into();
        write_predictions(&dir.join("predictions"), &predictions, scene.num_views)?;
        let ledger_path = dir.join("ledger.json");
        let text = serde_json::to_string_pretty(&ledger)? + "\n";
        fs::write(&ledger_path, text).with_context(|| format!("{}: cannot write", ledger_path.display()))?;
        writeln!(
            out,
            "ledger: {} misses, {} false positives, {} mismatches over {} ground-truth detections, expected CVMA {:.6}",
            ledger.totals.misses,
            ledger.totals.false_positives,
            ledger.totals.mismatches(),
            ledger.totals.gt,
            ledger.expected_cvma_raw
        )?;
    }
    writeln!(
        out,
        "wrote {} ({} views, {} identities, {} frames, {} descriptions) to {}",
        scene.name,
        scene.num_views,
        args.ids,
        args.frames,
        descriptions.len(),
        dir.display()
    )?;
    Ok(true)
}

#[derive(Args, Debug, Clone)]
pub struct ValidateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub descriptions: Option<PathBuf>,
    /// prediction root to check as well, one directory per description
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

/// Reports every problem found instead of stopping at the first.
pub fn validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<bool> {
    let mut problems: Vec<String> = Vec::new();
    let scene = match read_scene_unchecked(&args.scene, &gt_dir_for(&args.scene, &args.gt)) {
        Ok(scene) => {
            problems
                .extend(validate_scene(&scene).violations().iter().map(|v| format!("{}: {v}", args.scene.display())));
            Some(scene)
        }
        Err(e) => {
            problems.push(e.to_string());
            None
        }
    };
    let vocab = AttributeVocabulary::standard();
    let descriptions = match &args.descriptions {
        None => Vec::new(),
        Some(path) => match read_descriptions(path) {
            Ok(ds) => {
                if let Some(scene) = &scene {
                    for d in &ds {
                        let report = validate_description(d, scene, &vocab);
                        problems.extend(report.violations().iter().map(|v| format!("{}: {v}", path.display())));
                    }
                }
                ds
            }
            Err(e) => {
                problems.push(e.to_string());
                Vec::new()
            }
        },
    };
    if let (Some(root), Some(scene)) = (&args.predictions, &scene) {
        for d in &descriptions {
            if let Err(e) = parse_predictions(root, &d.id, scene.num_views) {
                problems.push(e.to_string());
            }
        }
    }
    for p in &problems {
        writeln!(out, "{p}")?;
    }
    if problems.is_empty() {
        writeln!(out, "ok")?;
    }
    Ok(problems.is_empty())
}

#[derive(Args, Debug, Clone)]
pub struct FuseCheckArgs {
    /// random cases for the gradient and argmax checks
    #[arg(long, default_value_t = 1000)]
    pub cases: usize,
}

pub fn fuse_check(args: &FuseCheckArgs, settings: &Settings, out: &mut dyn Write) -> Result<bool> {
    let outcomes = self_check(settings.run.fusion, args.cases, settings.seed);
    for o in &outcomes {
        writeln!(out, "{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail)?;
    }
    Ok(outcomes.iter().all(|o| o.passed))
}
