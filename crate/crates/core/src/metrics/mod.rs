//! Cross-view identity F1 and matching accuracy, per description and aggregated.
//!
//! For one referring description only the referred ground-truth objects count
//! as targets. A prediction that lands on a visible but non-referred object is
//! a false positive.
//!
//! * CVMA = 1 - (sum_t m_t + fp_t + 2 mme_t) / sum_t gt_t
//! * CVIDF1 = 2 CVIDP CVIDR / (CVIDP + CVIDR)
//! * CVRIDF1 = mean of CVIDF1 over descriptions
//! * CVRMA = mean of max(CVMA, 0) over descriptions

mod events;
mod identity;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{
    validate_description, AttributeVocabulary, LanguageDescription, Scene, Track, ValidationReport,
};

pub use events::{count_events, match_frame, EventTotals, FrameCounts, FrameMatch};
pub use identity::{cvidf1, id_measures, overlap_counts, IdMeasures};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("cannot aggregate zero descriptions")]
    EmptyAggregate,
    #[error("description `{id}` does not match the scene:\n{report}")]
    InvalidDescription { id: String, report: ValidationReport },
    #[error("IoU threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub iou_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { iou_threshold: 0.5 }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.iou_threshold > 0.0 && self.iou_threshold <= 1.0 {
            Ok(())
        } else {
            Err(MetricsError::InvalidThreshold(self.iou_threshold))
        }
    }
}

/// Ground-truth tracks of the identities a description refers to.
pub fn restrict_gt(scene: &Scene, description: &LanguageDescription) -> Vec<Track> {
    scene.gt_tracks.iter().filter(|t| description.referred_identities.contains(&t.identity)).cloned().collect()
}

/// Matching accuracy from summed events; `None` when there is no ground truth.
pub fn cvma(totals: &EventTotals) -> Option<f64> {
    (totals.gt > 0).then(|| 1.0 - totals.error_weight() as f64 / totals.gt as f64)
}

/// Like [`cvma`], but total: with no ground truth the value is 1 when nothing
/// was predicted and `1 - errors` otherwise.
pub fn cvma_or_empty(totals: &EventTotals) -> f64 {
    cvma(totals).unwrap_or(1.0 - totals.error_weight() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionResult {
    pub description_id: String,
    pub cvidf1: f64,
    /// Unclamped; may be negative.
    pub cvma_raw: f64,
    pub id_measures: IdMeasures,
    pub totals: EventTotals,
    pub frames: Vec<FrameCounts>,
}

/// Scores one description's predictions against the scene.
pub fn evaluate_description(
    scene: &Scene,
    description: &LanguageDescription,
    predictions: &[Track],
    config: &EvalConfig,
) -> Result<DescriptionResult, MetricsError> {
    config.validate()?;
    let report = validate_description(description, scene, &AttributeVocabulary::standard());
    if !report.is_empty() {
        return Err(MetricsError::InvalidDescription { id: description.id.clone(), report });
    }
    let referred = restrict_gt(scene, description);
    Ok(evaluate_tracks(&description.id, &referred, predictions, config))
}

/// Scores predictions against an already restricted ground-truth set.
pub fn evaluate_tracks(
    description_id: &str,
    referred_gt: &[Track],
    predictions: &[Track],
    config: &EvalConfig,
) -> DescriptionResult {
    let frames = count_events(referred_gt, predictions, config.iou_threshold);
    let totals = EventTotals::from_frames(&frames);
    let ids = id_measures(referred_gt, predictions, config.iou_threshold);
    DescriptionResult {
        description_id: description_id.to_string(),
        cvidf1: cvidf1(&ids),
        cvma_raw: cvma_or_empty(&totals),
        id_measures: ids,
        totals,
        frames,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n_l: usize,
    pub cvridf1: f64,
    pub cvrma: f64,
}

pub fn aggregate(results: &[DescriptionResult]) -> Result<Aggregate, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyAggregate);
    }
    let n = results.len() as f64;
    let cvridf1 = results.iter().map(|r| r.cvidf1).sum::<f64>() / n;
    let cvrma = results.iter().map(|r| r.cvma_raw.max(0.0)).sum::<f64>() / n;
    Ok(Aggregate { n_l: results.len(), cvridf1, cvrma })
}
