//! Fixtures shared by the throughput benches.

use std::collections::BTreeSet;

use xvrmot_core::datamodel::{LanguageDescription, Scene};
use xvrmot_core::ingest::ScoreMap;
use xvrmot_core::synth::{generate_descriptions, generate_scene, score_tracks, ScoreLevels};

pub struct Fixture {
    pub scene: Scene,
    pub description: LanguageDescription,
    pub scores: ScoreMap,
}

/// A synthetic scene with its all-identities description and hi/lo scores for
/// a second description referring to roughly half the identities.
pub fn fixture(views: usize, ids: usize, frames: u32, seed: u64) -> Fixture {
    let scene = generate_scene(views, ids, frames, (1920, 1080), seed).expect("valid shape");
    let (mut descriptions, _) = generate_descriptions(&scene, 1, seed);
    let description = descriptions.remove(0);
    let half: BTreeSet<_> = scene.identities().into_iter().step_by(2).collect();
    let scores = score_tracks(&scene, &scene.gt_tracks, &half, ScoreLevels::default(), seed).expect("valid levels");
    Fixture { scene, description, scores }
}
