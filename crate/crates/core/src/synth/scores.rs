use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{rng, SynthError};
use crate::datamodel::{
    iou, AttributeCategory, AttributeSet, AttributeVocabulary, Detection, Frame, Identity, LanguageDescription, Scene,
    Track, ViewId, NULL_WORD,
};
use crate::fusion::ScoreRecord;
use crate::ingest::{render_description, ScoreMap};

/// Score levels for referred (`hi`) and other (`lo`) detections, with uniform jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreLevels {
    pub hi: f64,
    pub lo: f64,
    pub jitter: f64,
}

impl Default for ScoreLevels {
    fn default() -> Self {
        ScoreLevels { hi: 0.95, lo: 0.05, jitter: 0.0 }
    }
}

/// Scores predicted detections by whether they sit on a referred identity.
///
/// A detection's origin is the ground-truth box in the same view and frame with
/// the highest IoU, provided it reaches 0.5. Both `s_t` and `s_a` get the level
/// plus independent jitter, clamped to `[0, 1]`.
pub fn score_tracks(
    scene: &Scene,
    predictions: &[Track],
    referred: &BTreeSet<Identity>,
    levels: ScoreLevels,
    seed: u64,
) -> Result<ScoreMap, SynthError> {
    let ScoreLevels { hi, lo, jitter } = levels;
    let unit = 0.0..=1.0;
    if !unit.contains(&hi) || !unit.contains(&lo) || lo > hi || !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(SynthError::InvalidScores(format!("need 0 <= lo <= hi <= 1 and jitter >= 0, got {levels:?}")));
    }
    let mut gt_at: BTreeMap<(ViewId, Frame), Vec<&Detection>> = BTreeMap::new();
    for d in scene.detections() {
        gt_at.entry((d.view, d.frame)).or_default().push(d);
    }
    let mut rng = rng(seed);
    let mut jittered = |base: f64| {
        if jitter == 0.0 {
            base
        } else {
            (base + rng.gen_range(-jitter..=jitter)).clamp(0.0, 1.0)
        }
    };
    let mut out = ScoreMap::new();
    for d in predictions.iter().flat_map(|t| &t.detections) {
        let origin = gt_at
            .get(&(d.view, d.frame))
            .into_iter()
            .flatten()
            .map(|g| (iou(&g.bbox, &d.bbox), g.identity))
            .filter(|(v, _)| *v >= 0.5)
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
            .map(|(_, id)| id);
        let base = if origin.is_some_and(|id| referred.contains(&id)) { hi } else { lo };
        let s_t = jittered(base);
        let s_a = jittered(base);
        out.insert(d.key(), ScoreRecord::new(s_t, s_a));
    }
    Ok(out)
}

fn random_profile(rng: &mut impl Rng, vocab: &AttributeVocabulary) -> AttributeSet {
    let mut attrs = AttributeSet::new();
    for cat in AttributeCategory::ALL {
        let words: Vec<&String> = vocab.words(cat).iter().filter(|w| *w != NULL_WORD).collect();
        // categories are left unset about half the time; coats are always annotated
        if cat == AttributeCategory::Coat || rng.gen_bool(0.5) {
            attrs.set(cat, words.choose(rng).expect("every category has words"));
        }
    }
    attrs
}

/// Random attribute profiles for each identity and `count` descriptions built from them.
///
/// `d0` has no attributes and refers to everyone. Each later description
/// queries one or two attributes of a randomly chosen identity and refers to
/// every identity whose profile matches, so no referred set is empty.
pub fn generate_descriptions(
    scene: &Scene,
    count: usize,
    seed: u64,
) -> (Vec<LanguageDescription>, BTreeMap<Identity, AttributeSet>) {
    let vocab = AttributeVocabulary::standard();
    let mut rng = rng(seed);
    let ids: Vec<Identity> = scene.identities().into_iter().collect();
    let profiles: BTreeMap<Identity, AttributeSet> =
        ids.iter().map(|&id| (id, random_profile(&mut rng, &vocab))).collect();

    let mut out = Vec::with_capacity(count);
    if count > 0 {
        out.push(LanguageDescription {
            id: "d0".into(),
            text: render_description(&AttributeSet::new(), "default").expect("known template"),
            attributes: AttributeSet::new(),
            referred_identities: ids.iter().copied().collect(),
        });
    }
    for k in 1..count {
        let Some(anchor) = ids.choose(&mut rng) else { break };
        let profile = &profiles[anchor];
        let set: Vec<AttributeCategory> =
            AttributeCategory::ALL.into_iter().filter(|c| profile.get(*c).is_some()).collect();
        let n = rng.gen_range(1..=set.len().min(2));
        let mut query = AttributeSet::new();
        for cat in set.choose_multiple(&mut rng, n) {
            query.set(*cat, profile.get(*cat).expect("chosen from set categories"));
        }
        let referred = profiles.iter().filter(|(_, p)| query.is_satisfied_by(p)).map(|(id, _)| *id).collect();
        out.push(LanguageDescription {
            id: format!("d{k}"),
            text: render_description(&query, "default").expect("known template"),
            attributes: query,
            referred_identities: referred,
        });
    }
    (out, profiles)
}
