//! Effective run settings: defaults, then command-line flags, then the config file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;
use xvrmot_core::predictor::{Accumulation, Emission};
use xvrmot_core::RunConfig;

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalFlags {
    /// TOML file whose values take precedence over flags
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "T")]
    pub iou_threshold: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub t_as: Option<f64>,
    #[arg(long, global = true)]
    pub t_ss: Option<f64>,
    #[arg(long, global = true)]
    pub t_hs: Option<f64>,
    #[arg(long, global = true)]
    pub s1: Option<f64>,
    #[arg(long, global = true)]
    pub s2: Option<f64>,
    #[arg(long, global = true)]
    pub s3: Option<f64>,
    /// worker threads; defaults to the number of processors
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// output file or directory, depending on the command
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalSection {
    iou_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FusionSection {
    alpha: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictorSection {
    t_as: Option<f64>,
    t_ss: Option<f64>,
    t_hs: Option<f64>,
    s1: Option<f64>,
    s2: Option<f64>,
    s3: Option<f64>,
    accumulation: Option<Accumulation>,
    emission: Option<Emission>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    jobs: Option<usize>,
    #[serde(default)]
    eval: EvalSection,
    #[serde(default)]
    fusion: FusionSection,
    #[serde(default)]
    predictor: PredictorSection,
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub run: RunConfig,
    pub seed: u64,
    pub jobs: usize,
    pub out: Option<PathBuf>,
}

impl Settings {
    pub fn resolve(flags: &GlobalFlags) -> Result<Self> {
        let mut run = RunConfig::default();
        let mut seed = 0;
        let mut jobs = std::thread::available_parallelism().map_or(1, |n| n.get());

        set(&mut seed, flags.seed);
        set(&mut jobs, flags.jobs);
        set(&mut run.eval.iou_threshold, flags.iou_threshold);
        set(&mut run.fusion.alpha, flags.alpha);
        set(&mut run.fusion.beta, flags.beta);
        let p = &mut run.predictor;
        set(&mut p.t_as, flags.t_as);
        set(&mut p.t_ss, flags.t_ss);
        set(&mut p.t_hs, flags.t_hs);
        set(&mut p.s1, flags.s1);
        set(&mut p.s2, flags.s2);
        set(&mut p.s3, flags.s3);

        if let Some(path) = &flags.config {
            let file = read_config(path)?;
            set(&mut seed, file.seed);
            set(&mut jobs, file.jobs);
            set(&mut run.eval.iou_threshold, file.eval.iou_threshold);
            set(&mut run.fusion.alpha, file.fusion.alpha);
            set(&mut run.fusion.beta, file.fusion.beta);
            let (p, f) = (&mut run.predictor, file.predictor);
            set(&mut p.t_as, f.t_as);
            set(&mut p.t_ss, f.t_ss);
            set(&mut p.t_hs, f.t_hs);
            set(&mut p.s1, f.s1);
            set(&mut p.s2, f.s2);
            set(&mut p.s3, f.s3);
            set(&mut p.accumulation, f.accumulation);
            set(&mut p.emission, f.emission);
        }

        run.eval.validate()?;
        run.predictor.validate()?;
        if !run.fusion.alpha.is_finite() || !run.fusion.beta.is_finite() {
            bail!("alpha and beta must be finite");
        }
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        Ok(Settings { run, seed, jobs, out: flags.out.clone() })
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new().num_threads(self.jobs).build().context("cannot start worker pool")
    }

    pub fn require_out(&self, command: &str) -> Result<&Path> {
        self.out.as_deref().with_context(|| format!("`{command}` needs --out"))
    }
}

fn read_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("{}: cannot read config", path.display()))?;
    toml::from_str(&text).with_context(|| format!("{}: invalid config", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let s = Settings::resolve(&GlobalFlags { jobs: Some(2), ..Default::default() }).unwrap();
        assert_eq!(s.run, RunConfig::default());
        assert_eq!((s.seed, s.jobs), (0, 2));
    }

    #[test]
    fn file_beats_flags_beats_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "seed = 9\n[predictor]\nt_hs = 12.5\nemission = \"whole_track\"\n[fusion]\nbeta = 0.2\n")
            .unwrap();
        let flags = GlobalFlags {
            config: Some(path),
            seed: Some(1),
            t_hs: Some(40.0),
            s1: Some(4.0),
            beta: Some(0.3),
            ..Default::default()
        };
        let s = Settings::resolve(&flags).unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.run.predictor.t_hs, 12.5);
        assert_eq!(s.run.predictor.s1, 4.0);
        assert_eq!(s.run.predictor.emission, Emission::WholeTrack);
        assert_eq!(s.run.fusion.beta, 0.2);
        assert_eq!(s.run.fusion.alpha, 0.01);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Settings::resolve(&GlobalFlags { iou_threshold: Some(1.5), ..Default::default() }).is_err());
        assert!(Settings::resolve(&GlobalFlags { t_ss: Some(0.0), ..Default::default() }).is_err());
        assert!(Settings::resolve(&GlobalFlags { jobs: Some(0), ..Default::default() }).is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "[predictor]\nt_zz = 1.0\n").unwrap();
        let err = Settings::resolve(&GlobalFlags { config: Some(path), ..Default::default() }).unwrap_err();
        assert!(format!("{err:#}").contains("c.toml"));
    }
}
