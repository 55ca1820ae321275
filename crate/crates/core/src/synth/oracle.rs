use std::collections::{BTreeMap, BTreeSet};

use super::SynthError;
use crate::datamodel::{iou, DetKey, Frame, Identity, Track, ViewId};
use crate::metrics::{FrameCounts, IdMeasures};

/// Largest number of identities per side accepted by the exhaustive oracles.
pub const ORACLE_LIMIT: usize = 6;

/// Maximum total weight over all partial one-to-one maps from rows to columns,
/// found by trying every one.
pub fn best_partial_bijection(weights: &[Vec<u64>]) -> u64 {
    fn go(row: usize, weights: &[Vec<u64>], used: &mut Vec<bool>) -> u64 {
        if row == weights.len() {
            return 0;
        }
        let mut best = go(row + 1, weights, used);
        for col in 0..used.len() {
            if !used[col] {
                used[col] = true;
                best = best.max(weights[row][col] + go(row + 1, weights, used));
                used[col] = false;
            }
        }
        best
    }
    let cols = weights.first().map_or(0, Vec::len);
    go(0, weights, &mut vec![false; cols])
}

/// Identity precision and recall by exhaustive search over identity bijections.
pub fn oracle_id_measures(
    referred_gt: &[Track],
    predictions: &[Track],
    iou_threshold: f64,
) -> Result<IdMeasures, SynthError> {
    if referred_gt.len() > ORACLE_LIMIT || predictions.len() > ORACLE_LIMIT {
        return Err(SynthError::TooLarge { gt: referred_gt.len(), pred: predictions.len() });
    }
    let at = |t: &Track| -> BTreeMap<(ViewId, Frame), crate::datamodel::BBox> {
        t.detections.iter().map(|d| ((d.view, d.frame), d.bbox)).collect()
    };
    let pred_boxes: Vec<_> = predictions.iter().map(at).collect();
    let weights: Vec<Vec<u64>> = referred_gt
        .iter()
        .map(|g| {
            let gb = at(g);
            pred_boxes
                .iter()
                .map(|pb| {
                    gb.iter().filter(|(slot, b)| pb.get(slot).is_some_and(|p| iou(b, p) >= iou_threshold)).count()
                        as u64
                })
                .collect()
        })
        .collect();
    let idtp = best_partial_bijection(&weights);
    let total_gt: u64 = referred_gt.iter().map(|t| t.len() as u64).sum();
    let total_pred: u64 = predictions.iter().map(|t| t.len() as u64).sum();
    Ok(IdMeasures::from_counts(idtp, total_pred - idtp, total_gt - idtp))
}

/// Per-frame events of a prediction that reuses ground-truth boxes under new
/// labels, read off the labels without any box matching.
///
/// `labels` maps each kept ground-truth detection to its predicted identity;
/// ground-truth detections without an entry are misses. `false_positives`
/// counts added boxes per frame.
pub fn label_walk(
    gt: &[Track],
    labels: &BTreeMap<DetKey, Identity>,
    false_positives: &BTreeMap<Frame, u64>,
) -> Vec<FrameCounts> {
    let mut frames: BTreeSet<Frame> = false_positives.keys().copied().collect();
    let mut by_frame: BTreeMap<Frame, Vec<DetKey>> = BTreeMap::new();
    for d in gt.iter().flat_map(|t| &t.detections) {
        frames.insert(d.frame);
        by_frame.entry(d.frame).or_default().push(d.key());
    }
    let mut previous: BTreeMap<(ViewId, Identity), Identity> = BTreeMap::new();
    frames
        .into_iter()
        .map(|frame| {
            let keys = by_frame.remove(&frame).unwrap_or_default();
            let mut c = FrameCounts { frame, gt: keys.len() as u64, ..Default::default() };
            c.false_positives = false_positives.get(&frame).copied().unwrap_or(0);
            let mut seen_in_views: BTreeMap<Identity, Vec<Identity>> = BTreeMap::new();
            for k in keys {
                match labels.get(&k) {
                    None => c.misses += 1,
                    Some(&label) => {
                        if previous.insert((k.view, k.identity), label).is_some_and(|p| p != label) {
                            c.temporal_mismatches += 1;
                        }
                        seen_in_views.entry(k.identity).or_default().push(label);
                    }
                }
            }
            for labels in seen_in_views.values() {
                for (i, a) in labels.iter().enumerate() {
                    c.crossview_mismatches += labels[i + 1..].iter().filter(|b| *b != a).count() as u64;
                }
            }
            c
        })
        .collect()
}
