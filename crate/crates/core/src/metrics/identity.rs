use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::events::bucket;
use crate::assignment::{solve_lap, CostMatrix};
use crate::datamodel::{iou, Identity, Track};

/// Detection-level tallies under the optimal global identity bijection.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IdMeasures {
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
    pub cvidp: f64,
    pub cvidr: f64,
}

impl IdMeasures {
    /// Derives the ratios; zero denominators give 0.
    pub fn from_counts(idtp: u64, idfp: u64, idfn: u64) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        IdMeasures { idtp, idfp, idfn, cvidp: ratio(idtp, idtp + idfp), cvidr: ratio(idtp, idtp + idfn) }
    }
}

/// Per identity pair, the number of `(view, frame)` slots where their boxes
/// overlap by at least `iou_threshold`. Rows follow `gt_ids`, columns `pred_ids`,
/// both ascending.
pub fn overlap_counts(
    referred_gt: &[Track],
    predictions: &[Track],
    iou_threshold: f64,
) -> (Vec<Identity>, Vec<Identity>, Vec<Vec<u64>>) {
    let gt_ids: Vec<Identity> =
        referred_gt.iter().map(|t| t.identity).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let pred_ids: Vec<Identity> =
        predictions.iter().map(|t| t.identity).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let gi: BTreeMap<Identity, usize> = gt_ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let pi: BTreeMap<Identity, usize> = pred_ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut overlap = vec![vec![0u64; pred_ids.len()]; gt_ids.len()];
    for views in bucket(referred_gt, predictions).values() {
        for (g, p) in views.values() {
            // a pair counts once per slot
            let mut seen: HashSet<(usize, usize)> = HashSet::new();
            for gd in g {
                for pd in p {
                    if iou(&gd.bbox, &pd.bbox) >= iou_threshold {
                        let key = (gi[&gd.identity], pi[&pd.identity]);
                        if seen.insert(key) {
                            overlap[key.0][key.1] += 1;
                        }
                    }
                }
            }
        }
    }
    (gt_ids, pred_ids, overlap)
}

/// Pools all detections across views and time, then picks the identity
/// bijection maximizing matched detections.
pub fn id_measures(referred_gt: &[Track], predictions: &[Track], iou_threshold: f64) -> IdMeasures {
    let total_gt: u64 = referred_gt.iter().map(|t| t.len() as u64).sum();
    let total_pred: u64 = predictions.iter().map(|t| t.len() as u64).sum();
    let (gt_ids, pred_ids, overlap) = overlap_counts(referred_gt, predictions, iou_threshold);
    let idtp = if gt_ids.is_empty() || pred_ids.is_empty() {
        0
    } else {
        let costs =
            CostMatrix::from_fn(gt_ids.len(), pred_ids.len(), |g, p| -(overlap[g][p] as f64)).expect("finite costs");
        solve_lap(&costs).pairs.iter().map(|&(g, p)| overlap[g][p]).sum()
    };
    IdMeasures::from_counts(idtp, total_pred - idtp, total_gt - idtp)
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn cvidf1(m: &IdMeasures) -> f64 {
    let s = m.cvidp + m.cvidr;
    if s == 0.0 {
        0.0
    } else {
        2.0 * m.cvidp * m.cvidr / s
    }
}
