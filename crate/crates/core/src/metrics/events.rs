use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::assignment::{solve_lap, CostMatrix};
use crate::datamodel::{iou, Detection, Frame, Identity, Track, ViewId};

/// Result of matching ground truth against predictions in one `(view, frame)` slot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrameMatch {
    /// `(gt index, prediction index)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub missed_gt: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

/// Minimum `1 - IoU` matching; pairs below `iou_threshold` are forbidden.
pub fn match_frame(gt: &[Detection], pred: &[Detection], iou_threshold: f64) -> FrameMatch {
    if gt.is_empty() || pred.is_empty() {
        return FrameMatch {
            pairs: Vec::new(),
            missed_gt: (0..gt.len()).collect(),
            unmatched_pred: (0..pred.len()).collect(),
        };
    }
    let costs = CostMatrix::from_fn(gt.len(), pred.len(), |g, p| {
        let v = iou(&gt[g].bbox, &pred[p].bbox);
        if v >= iou_threshold {
            1.0 - v
        } else {
            f64::INFINITY
        }
    })
    .expect("IoU costs are finite or +inf");
    let assignment = solve_lap(&costs);
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; pred.len()];
    for &(g, p) in &assignment.pairs {
        gt_used[g] = true;
        pred_used[p] = true;
    }
    FrameMatch {
        pairs: assignment.pairs,
        missed_gt: (0..gt.len()).filter(|&i| !gt_used[i]).collect(),
        unmatched_pred: (0..pred.len()).filter(|&i| !pred_used[i]).collect(),
    }
}

/// Event tallies at one time step, summed over views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameCounts {
    pub frame: Frame,
    pub misses: u64,
    pub false_positives: u64,
    /// GT identity matched in a view to a different predicted identity than at
    /// its previous matched frame in that view.
    pub temporal_mismatches: u64,
    /// Unordered view pairs in which the same GT identity is matched to
    /// different predicted identities.
    pub crossview_mismatches: u64,
    pub gt: u64,
}

impl FrameCounts {
    pub fn mismatches(&self) -> u64 {
        self.temporal_mismatches + self.crossview_mismatches
    }
}

/// Sums over all frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventTotals {
    pub misses: u64,
    pub false_positives: u64,
    pub temporal_mismatches: u64,
    pub crossview_mismatches: u64,
    pub gt: u64,
}

impl EventTotals {
    pub fn from_frames(frames: &[FrameCounts]) -> Self {
        frames.iter().fold(EventTotals::default(), |acc, f| EventTotals {
            misses: acc.misses + f.misses,
            false_positives: acc.false_positives + f.false_positives,
            temporal_mismatches: acc.temporal_mismatches + f.temporal_mismatches,
            crossview_mismatches: acc.crossview_mismatches + f.crossview_mismatches,
            gt: acc.gt + f.gt,
        })
    }

    pub fn mismatches(&self) -> u64 {
        self.temporal_mismatches + self.crossview_mismatches
    }

    /// `misses + false positives + 2 * mismatches`.
    pub fn error_weight(&self) -> u64 {
        self.misses + self.false_positives + 2 * self.mismatches()
    }
}

type Slot<'a> = (Vec<&'a Detection>, Vec<&'a Detection>);

/// Ground truth and predictions bucketed by frame, then view. Each bucket is
/// sorted by identity so matching indices are reproducible.
pub(crate) fn bucket<'a>(gt: &'a [Track], pred: &'a [Track]) -> BTreeMap<Frame, BTreeMap<ViewId, Slot<'a>>> {
    let mut out: BTreeMap<Frame, BTreeMap<ViewId, Slot<'a>>> = BTreeMap::new();
    for d in gt.iter().flat_map(|t| &t.detections) {
        out.entry(d.frame).or_default().entry(d.view).or_default().0.push(d);
    }
    for d in pred.iter().flat_map(|t| &t.detections) {
        out.entry(d.frame).or_default().entry(d.view).or_default().1.push(d);
    }
    for views in out.values_mut() {
        for (g, p) in views.values_mut() {
            g.sort_by_key(|d| d.identity);
            p.sort_by_key(|d| d.identity);
        }
    }
    out
}

/// Per-frame misses, false positives, temporal and cross-view mismatches.
///
/// Every frame in which either side has a detection gets an entry; frames with
/// no referred ground truth contribute only false positives.
pub fn count_events(referred_gt: &[Track], predictions: &[Track], iou_threshold: f64) -> Vec<FrameCounts> {
    let mut last_match: HashMap<(ViewId, Identity), Identity> = HashMap::new();
    let mut out = Vec::new();
    for (frame, views) in bucket(referred_gt, predictions) {
        let mut counts = FrameCounts { frame, ..Default::default() };
        let mut matched: BTreeMap<Identity, Vec<Identity>> = BTreeMap::new();
        for (view, (g, p)) in views {
            let gt_dets: Vec<Detection> = g.iter().map(|d| **d).collect();
            let pred_dets: Vec<Detection> = p.iter().map(|d| **d).collect();
            let fm = match_frame(&gt_dets, &pred_dets, iou_threshold);
            counts.gt += gt_dets.len() as u64;
            counts.misses += fm.missed_gt.len() as u64;
            counts.false_positives += fm.unmatched_pred.len() as u64;
            for (gi, pi) in fm.pairs {
                let gid = gt_dets[gi].identity;
                let pid = pred_dets[pi].identity;
                if let Some(prev) = last_match.insert((view, gid), pid) {
                    if prev != pid {
                        counts.temporal_mismatches += 1;
                    }
                }
                matched.entry(gid).or_default().push(pid);
            }
        }
        for pids in matched.values() {
            for i in 0..pids.len() {
                for j in i + 1..pids.len() {
                    if pids[i] != pids[j] {
                        counts.crossview_mismatches += 1;
                    }
                }
            }
        }
        out.push(counts);
    }
    out
}
