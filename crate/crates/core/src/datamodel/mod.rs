//! Domain types shared by every other module.

mod attributes;
mod bbox;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use attributes::{validate_attributes, AttributeCategory, AttributeSet, AttributeVocabulary, NULL_WORD};
pub use bbox::{iou, BBox, BBoxError};

pub type ViewId = usize;
/// 1-based frame index.
pub type Frame = u32;
pub type Identity = u32;

/// Position of a detection: `(view, frame, identity)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DetKey {
    pub view: ViewId,
    pub frame: Frame,
    pub identity: Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub view: ViewId,
    pub frame: Frame,
    pub identity: Identity,
    pub bbox: BBox,
}

impl Detection {
    pub fn new(view: ViewId, frame: Frame, identity: Identity, bbox: BBox) -> Self {
        Detection { view, frame, identity, bbox }
    }

    pub fn key(&self) -> DetKey {
        DetKey { view: self.view, frame: self.frame, identity: self.identity }
    }
}

/// All observations of one global identity, across views, ordered by `(frame, view)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub identity: Identity,
    pub detections: Vec<Detection>,
}

impl Track {
    /// Builds a track, sorting detections by `(frame, view)`.
    pub fn new(identity: Identity, mut detections: Vec<Detection>) -> Self {
        detections.sort_by_key(|d| (d.frame, d.view));
        Track { identity, detections }
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    /// Detections grouped by frame, frames ascending.
    pub fn frames(&self) -> BTreeMap<Frame, Vec<&Detection>> {
        let mut out: BTreeMap<Frame, Vec<&Detection>> = BTreeMap::new();
        for d in &self.detections {
            out.entry(d.frame).or_default().push(d);
        }
        out
    }
}

/// Groups loose detections into tracks by identity, identities ascending.
pub fn tracks_from_detections(detections: impl IntoIterator<Item = Detection>) -> Vec<Track> {
    let mut by_id: BTreeMap<Identity, Vec<Detection>> = BTreeMap::new();
    for d in detections {
        by_id.entry(d.identity).or_default().push(d);
    }
    by_id.into_iter().map(|(id, dets)| Track::new(id, dets)).collect()
}

/// Synchronized multi-view ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub name: String,
    pub num_views: usize,
    pub frames_per_view: u32,
    /// `(width, height)` in pixels.
    pub image_size: (u32, u32),
    pub gt_tracks: Vec<Track>,
}

impl Scene {
    pub fn identities(&self) -> BTreeSet<Identity> {
        self.gt_tracks.iter().map(|t| t.identity).collect()
    }

    pub fn num_detections(&self) -> usize {
        self.gt_tracks.iter().map(Track::len).sum()
    }

    pub fn detections(&self) -> impl Iterator<Item = &Detection> {
        self.gt_tracks.iter().flat_map(|t| t.detections.iter())
    }
}

/// A referring query and the identities it refers to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageDescription {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub attributes: AttributeSet,
    pub referred_identities: BTreeSet<Identity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    TooFewViews { num_views: usize },
    EmptyImage { width: u32, height: u32 },
    ViewOutOfRange { key: DetKey, num_views: usize },
    FrameOutOfRange { key: DetKey, frames_per_view: u32 },
    IdentityMismatch { track: Identity, key: DetKey },
    DuplicateDetection { key: DetKey },
    UnsortedTrack { track: Identity },
    UnknownReferredIdentity { description: String, identity: Identity },
    UnknownAttributeCategory { category: String },
    UnknownAttributeWord { category: String, word: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewViews { num_views } => {
                write!(f, "scene has {num_views} view(s), at least 2 required")
            }
            Violation::EmptyImage { width, height } => {
                write!(f, "image size {width}x{height} is empty")
            }
            Violation::ViewOutOfRange { key, num_views } => write!(
                f,
                "detection (view {}, frame {}, id {}) has view outside 0..{num_views}",
                key.view, key.frame, key.identity
            ),
            Violation::FrameOutOfRange { key, frames_per_view } => write!(
                f,
                "detection (view {}, frame {}, id {}) has frame outside 1..={frames_per_view}",
                key.view, key.frame, key.identity
            ),
            Violation::IdentityMismatch { track, key } => write!(
                f,
                "track {track} holds detection (view {}, frame {}) labelled id {}",
                key.view, key.frame, key.identity
            ),
            Violation::DuplicateDetection { key } => {
                write!(f, "duplicate detection (view {}, frame {}, id {})", key.view, key.frame, key.identity)
            }
            Violation::UnsortedTrack { track } => {
                write!(f, "track {track} is not sorted by (frame, view)")
            }
            Violation::UnknownReferredIdentity { description, identity } => {
                write!(f, "description `{description}` refers to identity {identity}, absent from ground truth")
            }
            Violation::UnknownAttributeCategory { category } => {
                write!(f, "unknown attribute category `{category}`")
            }
            Violation::UnknownAttributeWord { category, word } => {
                write!(f, "`{word}` is not a listed word for `{category}`")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn push(&mut self, v: Violation) {
        self.violations.push(v);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_scene(scene: &Scene) -> ValidationReport {
    let mut report = ValidationReport::default();
    if scene.num_views < 2 {
        report.push(Violation::TooFewViews { num_views: scene.num_views });
    }
    if scene.image_size.0 == 0 || scene.image_size.1 == 0 {
        report.push(Violation::EmptyImage { width: scene.image_size.0, height: scene.image_size.1 });
    }
    let mut seen: HashSet<DetKey> = HashSet::new();
    for track in &scene.gt_tracks {
        let sorted = track.detections.windows(2).all(|w| (w[0].frame, w[0].view) <= (w[1].frame, w[1].view));
        if !sorted {
            report.push(Violation::UnsortedTrack { track: track.identity });
        }
        for d in &track.detections {
            let key = d.key();
            if d.identity != track.identity {
                report.push(Violation::IdentityMismatch { track: track.identity, key });
            }
            if d.view >= scene.num_views {
                report.push(Violation::ViewOutOfRange { key, num_views: scene.num_views });
            }
            if d.frame == 0 || d.frame > scene.frames_per_view {
                report.push(Violation::FrameOutOfRange { key, frames_per_view: scene.frames_per_view });
            }
            if !seen.insert(key) {
                report.push(Violation::DuplicateDetection { key });
            }
        }
    }
    report
}

/// Checks that a description only refers to identities in the scene and uses listed attribute words.
pub fn validate_description(
    description: &LanguageDescription,
    scene: &Scene,
    vocab: &AttributeVocabulary,
) -> ValidationReport {
    let ids = scene.identities();
    let mut report = ValidationReport::default();
    for id in &description.referred_identities {
        if !ids.contains(id) {
            report.push(Violation::UnknownReferredIdentity { description: description.id.clone(), identity: *id });
        }
    }
    report.extend(validate_attributes(&description.attributes, vocab));
    report
}
