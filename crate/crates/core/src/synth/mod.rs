//! Seeded synthetic scenes with exactly known errors, plus brute-force references.
//!
//! All randomness comes from a ChaCha8 stream seeded with the caller's seed,
//! so outputs are identical across platforms.

mod oracle;
mod scores;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{tracks_from_detections, BBox, DetKey, Detection, Frame, Identity, Scene, Track};
use crate::ingest::{PredictionSet, ScoreMap};
use crate::metrics::{EventTotals, FrameCounts, IdMeasures};

pub use oracle::{best_partial_bijection, label_walk, oracle_id_measures, ORACLE_LIMIT};
pub use scores::{generate_descriptions, score_tracks, ScoreLevels};

pub const MIN_IMAGE_SIDE: u32 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("scene needs at least 2 views, 1 identity and 1 frame (got {views}, {ids}, {frames})")]
    InvalidShape { views: usize, ids: usize, frames: u32 },
    #[error("image size {0}x{1} is degenerate; both sides must be at least {MIN_IMAGE_SIDE}")]
    DegenerateImage(u32, u32),
    #[error("infeasible error spec: {0}")]
    Infeasible(String),
    #[error("oracle limited to {ORACLE_LIMIT} identities per side, got {gt} ground truth and {pred} predicted")]
    TooLarge { gt: usize, pred: usize },
    #[error("invalid score levels: {0}")]
    InvalidScores(String),
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Reflects a coordinate into `[0, 1]`, flipping the velocity on a bounce.
fn bounce(p: &mut f64, v: &mut f64) {
    if *p < 0.0 {
        *p = -*p;
        *v = -*v;
    }
    if *p > 1.0 {
        *p = 2.0 - *p;
        *v = -*v;
    }
    *p = p.clamp(0.0, 1.0);
}

/// Every identity is visible in every view at every frame. Identities move on
/// a shared ground plane along straight lines with jitter, bouncing off the
/// plane's edges, and each view sees the plane through its own scale and offset.
pub fn generate_scene(
    num_views: usize,
    num_identities: usize,
    num_frames: u32,
    image_size: (u32, u32),
    seed: u64,
) -> Result<Scene, SynthError> {
    if num_views < 2 || num_identities < 1 || num_frames < 1 {
        return Err(SynthError::InvalidShape { views: num_views, ids: num_identities, frames: num_frames });
    }
    let (iw, ih) = image_size;
    if iw < MIN_IMAGE_SIDE || ih < MIN_IMAGE_SIDE {
        return Err(SynthError::DegenerateImage(iw, ih));
    }
    let (width, height) = (iw as f64, ih as f64);
    let mut rng = rng(seed);

    struct Walker {
        w: f64,
        h: f64,
        p: (f64, f64),
        v: (f64, f64),
    }
    let mut walkers: Vec<Walker> = (0..num_identities)
        .map(|_| {
            let w = rng.gen_range(0.04..0.08) * width;
            let h = (w * rng.gen_range(2.0..2.6)).min(0.3 * height);
            Walker {
                w,
                h,
                p: (rng.gen::<f64>(), rng.gen::<f64>()),
                v: (rng.gen_range(-0.03..0.03), rng.gen_range(-0.03..0.03)),
            }
        })
        .collect();
    let max_w = walkers.iter().map(|k| k.w).fold(0.0, f64::max);
    let max_h = walkers.iter().map(|k| k.h).fold(0.0, f64::max);
    let views: Vec<(f64, f64, f64)> = (0..num_views)
        .map(|_| {
            let s = rng.gen_range(0.7..=1.0);
            let ox = rng.gen::<f64>() * (1.0 - s) * (width - max_w);
            let oy = rng.gen::<f64>() * (1.0 - s) * (height - max_h);
            (s, ox, oy)
        })
        .collect();

    let mut detections = Vec::with_capacity(num_views * num_identities * num_frames as usize);
    for frame in 1..=num_frames {
        for (k, walker) in walkers.iter_mut().enumerate() {
            if frame > 1 {
                walker.p.0 += walker.v.0 + rng.gen_range(-0.004..0.004);
                walker.p.1 += walker.v.1 + rng.gen_range(-0.004..0.004);
                bounce(&mut walker.p.0, &mut walker.v.0);
                bounce(&mut walker.p.1, &mut walker.v.1);
            }
            for (view, &(s, ox, oy)) in views.iter().enumerate() {
                let w = round2(s * walker.w);
                let h = round2(s * walker.h);
                let x = round2(ox + s * walker.p.0 * (width - max_w)).min(width - w);
                let y = round2(oy + s * walker.p.1 * (height - max_h)).min(height - h);
                let bbox = BBox::new(x, y, w, h).expect("box sizes are positive by construction");
                detections.push(Detection::new(view, frame, k as Identity + 1, bbox));
            }
        }
    }
    Ok(Scene {
        name: format!("synth-{seed}"),
        num_views,
        frames_per_view: num_frames,
        image_size,
        gt_tracks: tracks_from_detections(detections),
    })
}

/// Requested error counts for [`perturb`].
///
/// * a miss deletes one detection
/// * a false positive adds a box far from every ground-truth box, under a fresh identity
/// * a temporal switch relabels one identity in all views from some frame `t >= 2` on
/// * a cross-view mismatch relabels a single detection
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorSpec {
    pub misses: usize,
    pub false_positives: usize,
    pub temporal_switches: usize,
    pub crossview_mismatches: usize,
}

impl ErrorSpec {
    pub fn is_zero(&self) -> bool {
        *self == ErrorSpec::default()
    }
}

/// Event counts realized by a perturbation, derived from labels alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub requested: ErrorSpec,
    pub frames: Vec<FrameCounts>,
    pub totals: EventTotals,
    pub expected_cvma_raw: f64,
    /// Present when both sides have at most [`ORACLE_LIMIT`] identities.
    pub expected_id_measures: Option<IdMeasures>,
}

impl Ledger {
    /// Builds a ledger from a label assignment over ground-truth detections.
    /// `labels` holds the predicted identity of every kept detection; absent keys are misses.
    pub fn from_labels(
        requested: ErrorSpec,
        gt: &[Track],
        labels: &BTreeMap<DetKey, Identity>,
        false_positives: &BTreeMap<Frame, u64>,
    ) -> Self {
        let frames = label_walk(gt, labels, false_positives);
        let totals = EventTotals::from_frames(&frames);
        let expected_cvma_raw = if totals.gt == 0 {
            1.0 - totals.error_weight() as f64
        } else {
            1.0 - totals.error_weight() as f64 / totals.gt as f64
        };

        let gt_ids: Vec<Identity> = gt.iter().map(|t| t.identity).collect();
        let pred_ids: Vec<Identity> = labels.values().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let expected_id_measures = (gt_ids.len() <= ORACLE_LIMIT && pred_ids.len() <= ORACLE_LIMIT).then(|| {
            let overlap: Vec<Vec<u64>> = gt_ids
                .iter()
                .map(|g| {
                    pred_ids
                        .iter()
                        .map(|p| labels.iter().filter(|(k, l)| k.identity == *g && *l == p).count() as u64)
                        .collect()
                })
                .collect();
            let idtp = best_partial_bijection(&overlap);
            let total_gt: u64 = gt.iter().map(|t| t.len() as u64).sum();
            let total_pred = labels.len() as u64 + false_positives.values().sum::<u64>();
            IdMeasures::from_counts(idtp, total_pred - idtp, total_gt - idtp)
        });
        Ledger { requested, frames, totals, expected_cvma_raw, expected_id_measures }
    }
}

/// Places a false-positive box of size `w x h` in one view and frame so that it
/// keeps at least one box extent of clearance from every ground-truth box.
fn place_false_positive(
    rng: &mut ChaCha8Rng,
    occupied: &[BBox],
    (w, h): (f64, f64),
    image: (f64, f64),
    fallback_index: usize,
) -> BBox {
    let clear = |cand: &BBox| {
        occupied.iter().all(|b| {
            let gap_x = (cand.x() - b.right()).max(b.x() - cand.right());
            let gap_y = (cand.y() - b.bottom()).max(b.y() - cand.bottom());
            gap_x >= w.max(b.w()) || gap_y >= h.max(b.h())
        })
    };
    for _ in 0..200 {
        let x = round2(rng.gen::<f64>() * (image.0 - w));
        let y = round2(rng.gen::<f64>() * (image.1 - h));
        let cand = BBox::new(x, y, w, h).expect("positive size");
        if clear(&cand) {
            return cand;
        }
    }
    // crowded view: park the box beyond the right image edge
    let right = occupied.iter().map(BBox::right).fold(image.0, f64::max);
    let margin = occupied.iter().map(BBox::w).fold(w, f64::max);
    let cand = BBox::new(right + margin * (fallback_index + 1) as f64, 0.0, w, h).expect("positive size");
    debug_assert!(clear(&cand));
    cand
}

/// Turns ground truth into predictions carrying the requested errors.
///
/// Misses and cross-view relabels land on distinct detections, and temporal
/// switches on distinct `(identity, frame)` pairs. The ledger records the
/// counts these edits actually produce, which can exceed the request: a
/// relabelled single detection also breaks temporal continuity in its view,
/// and a temporal switch is counted once per view the identity appears in.
pub fn perturb(scene: &Scene, spec: &ErrorSpec, seed: u64) -> Result<(PredictionSet, Ledger), SynthError> {
    let mut rng = rng(seed);
    let slots: Vec<DetKey> = {
        let mut keys: Vec<DetKey> = scene.detections().map(Detection::key).collect();
        keys.sort();
        keys
    };
    let boxes: BTreeMap<DetKey, BBox> = scene.detections().map(|d| (d.key(), d.bbox)).collect();
    let mut fresh = scene.identities().last().copied().unwrap_or(0) + 1;
    let mut next_id = || {
        let id = fresh;
        fresh += 1;
        id
    };

    let edited = spec.misses + spec.crossview_mismatches;
    if edited > slots.len() {
        return Err(SynthError::Infeasible(format!(
            "{} misses plus {} cross-view relabels exceed {} detections",
            spec.misses,
            spec.crossview_mismatches,
            slots.len()
        )));
    }
    let switch_points: Vec<(Identity, Frame)> = scene
        .gt_tracks
        .iter()
        .flat_map(|t| {
            let frames: Vec<Frame> = t.frames().into_keys().collect();
            frames.into_iter().skip(1).map(move |f| (t.identity, f))
        })
        .collect();
    if spec.temporal_switches > switch_points.len() {
        return Err(SynthError::Infeasible(format!(
            "{} temporal switches requested but only {} (identity, frame) pairs follow an earlier frame",
            spec.temporal_switches,
            switch_points.len()
        )));
    }
    if spec.false_positives > 0 && slots.is_empty() {
        return Err(SynthError::Infeasible(
            "false positives need at least one ground-truth detection to size them".into(),
        ));
    }

    let mut labels: BTreeMap<DetKey, Identity> = slots.iter().map(|k| (*k, k.identity)).collect();

    let mut switches: Vec<(Identity, Frame)> =
        sample(&mut rng, switch_points.len(), spec.temporal_switches).into_iter().map(|i| switch_points[i]).collect();
    switches.sort();
    for (g, t) in switches {
        let id = next_id();
        for (k, label) in labels.iter_mut() {
            if k.identity == g && k.frame >= t {
                *label = id;
            }
        }
    }

    let picked: Vec<DetKey> = sample(&mut rng, slots.len(), edited).into_iter().map(|i| slots[i]).collect();
    let (missed, relabelled) = picked.split_at(spec.misses);
    for k in relabelled {
        labels.insert(*k, next_id());
    }
    for k in missed {
        labels.remove(k);
    }

    let mut detections: Vec<Detection> =
        labels.iter().map(|(k, id)| Detection::new(k.view, k.frame, *id, boxes[k])).collect();

    let image = (scene.image_size.0 as f64, scene.image_size.1 as f64);
    let mut fp_frames: BTreeMap<Frame, u64> = BTreeMap::new();
    for n in 0..spec.false_positives {
        let anchor = slots[rng.gen_range(0..slots.len())];
        let occupied: Vec<BBox> =
            slots.iter().filter(|k| k.view == anchor.view && k.frame == anchor.frame).map(|k| boxes[k]).collect();
        let size = (boxes[&anchor].w(), boxes[&anchor].h());
        let bbox = place_false_positive(&mut rng, &occupied, size, image, n);
        detections.push(Detection::new(anchor.view, anchor.frame, next_id(), bbox));
        *fp_frames.entry(anchor.frame).or_default() += 1;
    }

    let ledger = Ledger::from_labels(*spec, &scene.gt_tracks, &labels, &fp_frames);
    let predictions = PredictionSet {
        description_id: String::new(),
        tracks: tracks_from_detections(detections),
        scores: ScoreMap::new(),
    };
    Ok((predictions, ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::validate_scene;

    #[test]
    fn counts_are_conserved() {
        let s = generate_scene(2, 1, 5, (640, 480), 7).unwrap();
        assert_eq!(s.num_detections(), 10);
        assert!(validate_scene(&s).is_empty());
    }

    #[test]
    fn same_seed_same_scene() {
        let a = generate_scene(3, 4, 10, (640, 480), 11).unwrap();
        let b = generate_scene(3, 4, 10, (640, 480), 11).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_ne!(a, generate_scene(3, 4, 10, (640, 480), 12).unwrap());
    }

    #[test]
    fn object_density() {
        let s = generate_scene(3, 4, 10, (640, 480), 1).unwrap();
        let per_slot = s.num_detections() as f64 / (3.0 * 10.0);
        assert_eq!(per_slot, 4.0);
    }

    #[test]
    fn boxes_stay_inside_the_image() {
        for seed in 0..20 {
            let s = generate_scene(4, 6, 40, (64, 80), seed).unwrap();
            for d in s.detections() {
                let b = d.bbox;
                assert!(b.x() >= 0.0 && b.y() >= 0.0 && b.right() <= 64.0 && b.bottom() <= 80.0, "{b:?}");
            }
        }
    }

    #[test]
    fn bad_shapes() {
        assert!(matches!(generate_scene(1, 1, 1, (640, 480), 0), Err(SynthError::InvalidShape { .. })));
        assert!(matches!(generate_scene(2, 0, 1, (640, 480), 0), Err(SynthError::InvalidShape { .. })));
        assert_eq!(generate_scene(2, 1, 1, (63, 480), 0), Err(SynthError::DegenerateImage(63, 480)));
    }

    #[test]
    fn zero_errors() {
        let s = generate_scene(2, 3, 6, (640, 480), 3).unwrap();
        let (p, l) = perturb(&s, &ErrorSpec::default(), 9).unwrap();
        assert_eq!(p.tracks, s.gt_tracks);
        assert_eq!(l.totals.error_weight(), 0);
        assert_eq!(l.expected_cvma_raw, 1.0);
        let m = l.expected_id_measures.unwrap();
        assert_eq!((m.cvidp, m.cvidr), (1.0, 1.0));
    }

    #[test]
    fn misses_and_false_positives_are_exact() {
        // 2 views x 4 ids x 5 frames = 40 detections
        let s = generate_scene(2, 4, 5, (640, 480), 5).unwrap();
        let spec = ErrorSpec { misses: 4, false_positives: 2, ..Default::default() };
        let (p, l) = perturb(&s, &spec, 1).unwrap();
        assert_eq!((l.totals.misses, l.totals.false_positives, l.totals.mismatches(), l.totals.gt), (4, 2, 0, 40));
        assert!((l.expected_cvma_raw - 0.85).abs() < 1e-15);
        assert_eq!(p.tracks.iter().map(Track::len).sum::<usize>(), 38);
    }

    #[test]
    fn temporal_switch_counts_once_per_view() {
        let s = generate_scene(3, 2, 6, (640, 480), 5).unwrap();
        let spec = ErrorSpec { temporal_switches: 1, ..Default::default() };
        let (_, l) = perturb(&s, &spec, 2).unwrap();
        assert_eq!((l.totals.temporal_mismatches, l.totals.crossview_mismatches), (3, 0));
    }

    #[test]
    fn single_relabel_in_two_views() {
        let s = generate_scene(2, 2, 6, (640, 480), 5).unwrap();
        let spec = ErrorSpec { crossview_mismatches: 1, ..Default::default() };
        let (_, l) = perturb(&s, &spec, 4).unwrap();
        assert_eq!(l.totals.crossview_mismatches, 1);
        // one switch away from the base label, and one back unless it sat on an end frame
        assert!((1..=2).contains(&l.totals.temporal_mismatches));
    }

    #[test]
    fn infeasible_specs() {
        let s = generate_scene(2, 1, 2, (640, 480), 0).unwrap();
        assert!(perturb(&s, &ErrorSpec { misses: 5, ..Default::default() }, 0).is_err());
        assert!(perturb(&s, &ErrorSpec { temporal_switches: 2, ..Default::default() }, 0).is_err());
        assert!(perturb(&s, &ErrorSpec { misses: 2, crossview_mismatches: 2, ..Default::default() }, 0).is_ok());
    }

    #[test]
    fn false_positives_clear_ground_truth() {
        let s = generate_scene(2, 8, 4, (128, 128), 2).unwrap();
        let (p, _) = perturb(&s, &ErrorSpec { false_positives: 30, ..Default::default() }, 3).unwrap();
        let gt_ids = s.identities();
        for fp in p.tracks.iter().filter(|t| !gt_ids.contains(&t.identity)) {
            let d = fp.detections[0];
            for g in s.detections().filter(|g| g.view == d.view && g.frame == d.frame) {
                assert_eq!(crate::datamodel::iou(&g.bbox, &d.bbox), 0.0);
            }
        }
    }
}
