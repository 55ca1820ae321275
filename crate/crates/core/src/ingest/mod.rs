//! Reading and writing every on-disk artifact.
//!
//! Layout conventions:
//!
//! * scene manifest: JSON object `name, views, frames_per_view, image_width, image_height`
//! * ground truth: `<gt_dir>/view_<j>.csv`, rows `frame,id,x,y,w,h`, no header
//! * descriptions: JSON array of `id, text, attributes, referred_identities`
//! * predictions: `<root>/<description_id>/view_<j>.csv`, rows `frame,id,x,y,w,h[,s_t,s_a]`
//! * score tables: `<dir>/view_<j>.csv`, rows `frame,id,s_t,s_a`
//! * embeddings: rows `view,frame,id,D,F_f[D],F_Ai[D]`
//!
//! Parsers report every malformed row with its file and line rather than
//! stopping at the first one.

mod embeddings;
mod render;
mod report;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{
    tracks_from_detections, validate_description, validate_scene, AttributeVocabulary, BBox, DetKey, Detection, Frame,
    Identity, LanguageDescription, Scene, Track, ValidationReport, ViewId,
};
use crate::fusion::ScoreRecord;

pub use embeddings::{parse_embeddings, write_embeddings, EmbeddingRecord};
pub use render::{render_description, TEMPLATES};
pub use report::{read_report, write_report, AggregateBlock, EvaluationReport};

/// Per-detection scores keyed by `(view, frame, identity)`.
pub type ScoreMap = HashMap<DetKey, ScoreRecord>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

fn list_rows(errors: &[RowError]) -> String {
    errors.iter().map(|e| format!("\n  line {}: {}", e.line, e.message)).collect()
}

fn list_descriptions(problems: &[(String, ValidationReport)]) -> String {
    problems.iter().map(|(id, r)| format!("\n  description `{id}`:\n{r}")).collect()
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: file not found", path.display())]
    MissingFile { path: PathBuf },
    #[error("{}: {} malformed row(s){}", path.display(), errors.len(), list_rows(errors))]
    Rows { path: PathBuf, errors: Vec<RowError> },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{}: scene fails validation\n{report}", path.display())]
    InvalidScene { path: PathBuf, report: ValidationReport },
    #[error("{}: invalid descriptions{}", path.display(), list_descriptions(problems))]
    InvalidDescriptions { path: PathBuf, problems: Vec<(String, ValidationReport)> },
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
}

impl IngestError {
    fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            IngestError::MissingFile { path: path.to_path_buf() }
        } else {
            IngestError::Io { path: path.to_path_buf(), source }
        }
    }

    fn format(path: &Path, message: impl fmt::Display) -> Self {
        IngestError::Format { path: path.to_path_buf(), message: message.to_string() }
    }
}

/// Path of the per-view table inside a directory.
pub fn view_file(dir: &Path, view: ViewId) -> PathBuf {
    dir.join(format!("view_{view}.csv"))
}

fn read_text(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|e| IngestError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), IngestError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| IngestError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| IngestError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IngestError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| IngestError::format(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IngestError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| IngestError::format(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

/// A headerless CSV row with typed field access.
struct Row<'a>(&'a csv::StringRecord);

impl Row<'_> {
    fn get<T: FromStr>(&self, idx: usize, name: &str) -> Result<T, String> {
        let raw = self.0.get(idx).ok_or_else(|| format!("missing field `{name}`"))?;
        raw.parse().map_err(|_| format!("field `{name}`: cannot parse `{raw}`"))
    }

    fn frame(&self, idx: usize) -> Result<Frame, String> {
        let frame: Frame = self.get(idx, "frame")?;
        if frame == 0 {
            return Err("frame indices start at 1".into());
        }
        Ok(frame)
    }

    fn bbox(&self, start: usize) -> Result<BBox, String> {
        BBox::new(
            self.get(start, "x")?,
            self.get(start + 1, "y")?,
            self.get(start + 2, "w")?,
            self.get(start + 3, "h")?,
        )
        .map_err(|e| e.to_string())
    }

    fn score(&self, idx: usize, name: &str) -> Result<f64, String> {
        let s: f64 = self.get(idx, name)?;
        if (0.0..=1.0).contains(&s) {
            Ok(s)
        } else {
            Err(format!("{name} = {s} outside [0, 1]"))
        }
    }

    fn expect_len(&self, allowed: &[usize]) -> Result<(), String> {
        if allowed.contains(&self.0.len()) {
            Ok(())
        } else {
            let want: Vec<String> = allowed.iter().map(usize::to_string).collect();
            Err(format!("expected {} fields, found {}", want.join(" or "), self.0.len()))
        }
    }
}

/// Parses every row of a headerless CSV file, collecting all row errors.
fn read_rows<T>(path: &Path, mut parse: impl FnMut(&Row) -> Result<T, String>) -> Result<Vec<T>, IngestError> {
    let text = read_text(path)?;
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for record in reader.records() {
        match record {
            Ok(rec) => {
                let line = rec.position().map_or(0, |p| p.line());
                match parse(&Row(&rec)) {
                    Ok(v) => rows.push(v),
                    Err(message) => errors.push(RowError { line, message }),
                }
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                errors.push(RowError { line, message: e.to_string() });
            }
        }
    }
    if errors.is_empty() {
        Ok(rows)
    } else {
        Err(IngestError::Rows { path: path.to_path_buf(), errors })
    }
}

/// Rejects a second row for the same `(frame, id)` within one view file.
fn unique_slot(seen: &mut HashSet<(Frame, Identity)>, frame: Frame, id: Identity) -> Result<(), String> {
    if seen.insert((frame, id)) {
        Ok(())
    } else {
        Err(format!("duplicate row for frame {frame}, id {id}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub name: String,
    pub views: usize,
    pub frames_per_view: u32,
    pub image_width: u32,
    pub image_height: u32,
}

fn read_gt_view(path: &Path, view: ViewId) -> Result<Vec<Detection>, IngestError> {
    let mut seen = HashSet::new();
    read_rows(path, |row| {
        row.expect_len(&[6])?;
        let frame = row.frame(0)?;
        let id: Identity = row.get(1, "id")?;
        unique_slot(&mut seen, frame, id)?;
        Ok(Detection::new(view, frame, id, row.bbox(2)?))
    })
}

/// Reads a scene without checking its invariants.
pub fn read_scene_unchecked(manifest_path: &Path, gt_dir: &Path) -> Result<Scene, IngestError> {
    let manifest: SceneManifest = read_json(manifest_path)?;
    let mut detections = Vec::new();
    for view in 0..manifest.views {
        detections.extend(read_gt_view(&view_file(gt_dir, view), view)?);
    }
    Ok(Scene {
        name: manifest.name,
        num_views: manifest.views,
        frames_per_view: manifest.frames_per_view,
        image_size: (manifest.image_width, manifest.image_height),
        gt_tracks: tracks_from_detections(detections),
    })
}

/// Reads and validates a scene.
pub fn parse_scene(manifest_path: &Path, gt_dir: &Path) -> Result<Scene, IngestError> {
    let scene = read_scene_unchecked(manifest_path, gt_dir)?;
    let report = validate_scene(&scene);
    if report.is_empty() {
        Ok(scene)
    } else {
        Err(IngestError::InvalidScene { path: manifest_path.to_path_buf(), report })
    }
}

fn sorted_by_view<'a>(detections: impl Iterator<Item = &'a Detection>) -> BTreeMap<ViewId, Vec<&'a Detection>> {
    let mut out: BTreeMap<ViewId, Vec<&Detection>> = BTreeMap::new();
    for d in detections {
        out.entry(d.view).or_default().push(d);
    }
    for dets in out.values_mut() {
        dets.sort_by_key(|d| (d.frame, d.identity));
    }
    out
}

fn bbox_fields(b: &BBox) -> String {
    format!("{},{},{},{}", b.x(), b.y(), b.w(), b.h())
}

pub fn write_scene(scene: &Scene, manifest_path: &Path, gt_dir: &Path) -> Result<(), IngestError> {
    let manifest = SceneManifest {
        name: scene.name.clone(),
        views: scene.num_views,
        frames_per_view: scene.frames_per_view,
        image_width: scene.image_size.0,
        image_height: scene.image_size.1,
    };
    write_json(manifest_path, &manifest)?;
    let by_view = sorted_by_view(scene.detections());
    for view in 0..scene.num_views {
        let mut text = String::new();
        for d in by_view.get(&view).into_iter().flatten() {
            text.push_str(&format!("{},{},{}\n", d.frame, d.identity, bbox_fields(&d.bbox)));
        }
        write_text(&view_file(gt_dir, view), &text)?;
    }
    Ok(())
}

fn check_description_ids(path: &Path, descriptions: &[LanguageDescription]) -> Result<(), IngestError> {
    let mut seen = BTreeSet::new();
    for d in descriptions {
        let id = d.id.as_str();
        if id.is_empty() || id == "." || id == ".." || id.contains(['/', '\\']) {
            return Err(IngestError::format(path, format!("description id `{id}` is not usable as a directory name")));
        }
        if !seen.insert(id) {
            return Err(IngestError::format(path, format!("duplicate description id `{id}`")));
        }
    }
    Ok(())
}

/// Reads descriptions, checking only the file structure and id uniqueness.
pub fn read_descriptions(path: &Path) -> Result<Vec<LanguageDescription>, IngestError> {
    let descriptions: Vec<LanguageDescription> = read_json(path)?;
    check_description_ids(path, &descriptions)?;
    Ok(descriptions)
}

/// Reads descriptions and validates each against the scene and vocabulary.
pub fn parse_descriptions(
    path: &Path,
    scene: &Scene,
    vocab: &AttributeVocabulary,
) -> Result<Vec<LanguageDescription>, IngestError> {
    let descriptions = read_descriptions(path)?;
    let problems: Vec<(String, ValidationReport)> = descriptions
        .iter()
        .map(|d| (d.id.clone(), validate_description(d, scene, vocab)))
        .filter(|(_, r)| !r.is_empty())
        .collect();
    if problems.is_empty() {
        Ok(descriptions)
    } else {
        Err(IngestError::InvalidDescriptions { path: path.to_path_buf(), problems })
    }
}

pub fn write_descriptions(path: &Path, descriptions: &[LanguageDescription]) -> Result<(), IngestError> {
    write_json(path, &descriptions)
}

/// Tracker output for one description.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionSet {
    pub description_id: String,
    pub tracks: Vec<Track>,
    /// Present only for detections whose rows carried score columns.
    pub scores: ScoreMap,
}

/// Reads `view_<j>.csv` prediction tables from one directory.
pub fn read_track_dir(dir: &Path, num_views: usize) -> Result<(Vec<Track>, ScoreMap), IngestError> {
    if !dir.is_dir() {
        return Err(IngestError::MissingFile { path: dir.to_path_buf() });
    }
    let mut detections = Vec::new();
    let mut scores = ScoreMap::new();
    for view in 0..num_views {
        let mut seen = HashSet::new();
        let rows = read_rows(&view_file(dir, view), |row| {
            row.expect_len(&[6, 8])?;
            let frame = row.frame(0)?;
            let id: Identity = row.get(1, "id")?;
            let bbox = row.bbox(2)?;
            let score = if row.0.len() == 8 {
                Some(ScoreRecord::new(row.score(6, "s_t")?, row.score(7, "s_a")?))
            } else {
                None
            };
            unique_slot(&mut seen, frame, id)?;
            Ok((Detection::new(view, frame, id, bbox), score))
        })?;
        for (det, score) in rows {
            if let Some(s) = score {
                scores.insert(det.key(), s);
            }
            detections.push(det);
        }
    }
    Ok((tracks_from_detections(detections), scores))
}

/// Writes tracks as per-view tables; detections with a score get the two score columns.
pub fn write_track_dir(dir: &Path, tracks: &[Track], scores: &ScoreMap, num_views: usize) -> Result<(), IngestError> {
    let by_view = sorted_by_view(tracks.iter().flat_map(|t| &t.detections));
    if let Some(&view) = by_view.keys().find(|&&v| v >= num_views) {
        return Err(IngestError::format(dir, format!("detection in view {view} but only {num_views} views")));
    }
    for view in 0..num_views {
        let mut text = String::new();
        for d in by_view.get(&view).into_iter().flatten() {
            text.push_str(&format!("{},{},{}", d.frame, d.identity, bbox_fields(&d.bbox)));
            if let Some(s) = scores.get(&d.key()) {
                text.push_str(&format!(",{},{}", s.s_t, s.s_a));
            }
            text.push('\n');
        }
        write_text(&view_file(dir, view), &text)?;
    }
    Ok(())
}

/// Reads `<root>/<description_id>/view_<j>.csv`.
pub fn parse_predictions(root: &Path, description_id: &str, num_views: usize) -> Result<PredictionSet, IngestError> {
    let (tracks, scores) = read_track_dir(&root.join(description_id), num_views)?;
    Ok(PredictionSet { description_id: description_id.to_string(), tracks, scores })
}

pub fn write_predictions(root: &Path, set: &PredictionSet, num_views: usize) -> Result<(), IngestError> {
    write_track_dir(&root.join(&set.description_id), &set.tracks, &set.scores, num_views)
}

/// Reads `view_<j>.csv` score tables with rows `frame,id,s_t,s_a`.
pub fn read_scores(dir: &Path, num_views: usize) -> Result<ScoreMap, IngestError> {
    let mut scores = ScoreMap::new();
    for view in 0..num_views {
        let mut seen = HashSet::new();
        let rows = read_rows(&view_file(dir, view), |row| {
            row.expect_len(&[4])?;
            let frame = row.frame(0)?;
            let id: Identity = row.get(1, "id")?;
            let record = ScoreRecord::new(row.score(2, "s_t")?, row.score(3, "s_a")?);
            unique_slot(&mut seen, frame, id)?;
            Ok((DetKey { view, frame, identity: id }, record))
        })?;
        scores.extend(rows);
    }
    Ok(scores)
}

pub fn write_scores(dir: &Path, scores: &ScoreMap, num_views: usize) -> Result<(), IngestError> {
    let mut keys: Vec<&DetKey> = scores.keys().collect();
    keys.sort();
    if let Some(k) = keys.iter().find(|k| k.view >= num_views) {
        return Err(IngestError::format(dir, format!("score for view {} but only {num_views} views", k.view)));
    }
    let mut files: Vec<String> = vec![String::new(); num_views];
    for k in keys {
        let s = scores[k];
        files[k.view].push_str(&format!("{},{},{},{}\n", k.frame, k.identity, s.s_t, s.s_a));
    }
    for (view, text) in files.iter().enumerate() {
        write_text(&view_file(dir, view), text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::AttributeSet;

    fn write(path: &Path, text: &str) {
        write_text(path, text).unwrap();
    }

    fn manifest(dir: &Path, views: usize) -> PathBuf {
        let path = dir.join("scene.json");
        write(
            &path,
            &format!(r#"{{"name":"s","views":{views},"frames_per_view":5,"image_width":640,"image_height":480}}"#),
        );
        path
    }

    #[test]
    fn two_views_three_rows_each() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest(dir.path(), 2);
        let gt = dir.path().join("gt");
        for v in 0..2 {
            write(&view_file(&gt, v), "1,1,10,10,20,40\n2,1,12,10,20,40\n1,2,100,50,20,40\n");
        }
        let scene = parse_scene(&m, &gt).unwrap();
        assert_eq!(scene.num_detections(), 6);
        assert_eq!(scene.gt_tracks.len(), 2);
        assert_eq!(scene.image_size, (640, 480));
    }

    #[test]
    fn zero_width_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest(dir.path(), 2);
        let gt = dir.path().join("gt");
        write(&view_file(&gt, 0), "1,1,10,10,20,40\n");
        write(&view_file(&gt, 1), "1,1,10,10,20,40\n2,1,10,10,0,40\n");
        let err = parse_scene(&m, &gt).unwrap_err();
        match &err {
            IngestError::Rows { path, errors } => {
                assert_eq!(path, &view_file(&gt, 1));
                assert_eq!(errors.len(), 1);
                assert_eq!(errors[0].line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = err.to_string();
        assert!(text.contains("view_1.csv") && text.contains("line 2"), "{text}");
    }

    #[test]
    fn every_bad_row_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest(dir.path(), 2);
        let gt = dir.path().join("gt");
        write(&view_file(&gt, 0), "1,1,10,10,20,40\nx,1,0,0,1,1\n2,1,10,10,20\n3,1,1,1,1,1\n0,4,1,1,1,1\n");
        write(&view_file(&gt, 1), "");
        match read_scene_unchecked(&m, &gt).unwrap_err() {
            IngestError::Rows { errors, .. } => {
                assert_eq!(errors.iter().map(|e| e.line).collect::<Vec<_>>(), vec![2, 3, 5]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_view_file() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest(dir.path(), 2);
        let gt = dir.path().join("gt");
        write(&view_file(&gt, 0), "1,1,10,10,20,40\n");
        assert!(matches!(parse_scene(&m, &gt), Err(IngestError::MissingFile { path }) if path == view_file(&gt, 1)));
    }

    #[test]
    fn scene_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let dets = (1..=3).flat_map(|f| {
            (0..2).flat_map(move |v| {
                (1..=2).map(move |id| {
                    Detection::new(
                        v,
                        f,
                        id,
                        BBox::new(0.1 * f as f64 + 50.0 * id as f64, 1.0 / 3.0, 20.5, 40.0).unwrap(),
                    )
                })
            })
        });
        let scene = Scene {
            name: "rt".into(),
            num_views: 2,
            frames_per_view: 3,
            image_size: (320, 240),
            gt_tracks: tracks_from_detections(dets),
        };
        let (m, gt) = (dir.path().join("scene.json"), dir.path().join("gt"));
        write_scene(&scene, &m, &gt).unwrap();
        assert_eq!(parse_scene(&m, &gt).unwrap(), scene);
    }

    fn small_scene() -> Scene {
        let dets = [1, 2].into_iter().map(|id| Detection::new(0, 1, id, BBox::new(0.0, 0.0, 5.0, 5.0).unwrap()));
        Scene {
            name: "d".into(),
            num_views: 2,
            frames_per_view: 1,
            image_size: (64, 64),
            gt_tracks: tracks_from_detections(dets),
        }
    }

    #[test]
    fn descriptions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        write(
            &path,
            r#"[{"id":"a","text":"A person in a black coat.","attributes":{"coat":"black coat","shoes":"null"},"referred_identities":[1,2]},
                {"id":"b","text":"Nobody.","referred_identities":[]}]"#,
        );
        let ds = parse_descriptions(&path, &small_scene(), &AttributeVocabulary::standard()).unwrap();
        assert_eq!(ds[0].referred_identities.len(), 2);
        assert!(ds[1].referred_identities.is_empty());
        assert_eq!(ds[0].attributes, AttributeSet::new().with(crate::datamodel::AttributeCategory::Coat, "black coat"));

        let out = dir.path().join("out.json");
        write_descriptions(&out, &ds).unwrap();
        assert_eq!(read_descriptions(&out).unwrap(), ds);
    }

    #[test]
    fn unknown_referred_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        write(&path, r#"[{"id":"a","text":"t","attributes":{},"referred_identities":[1,99]}]"#);
        let err = parse_descriptions(&path, &small_scene(), &AttributeVocabulary::standard()).unwrap_err();
        assert!(err.to_string().contains("99"), "{err}");
    }

    #[test]
    fn bad_description_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        write(
            &path,
            r#"[{"id":"a","text":"t","referred_identities":[]},{"id":"a","text":"u","referred_identities":[]}]"#,
        );
        assert!(matches!(read_descriptions(&path), Err(IngestError::Format { .. })));
        write(&path, r#"[{"id":"../x","text":"t","referred_identities":[]}]"#);
        assert!(matches!(read_descriptions(&path), Err(IngestError::Format { .. })));
    }

    #[test]
    fn predictions_group_by_identity() {
        let dir = tempfile::tempdir().unwrap();
        write(&view_file(&dir.path().join("d"), 0), "1,1,0,0,5,5\n2,1,0,0,5,5\n1,2,9,9,5,5\n");
        let set = parse_predictions(dir.path(), "d", 1).unwrap();
        assert_eq!(set.tracks.len(), 2);
        assert!(set.scores.is_empty());
    }

    #[test]
    fn predictions_with_scores() {
        let dir = tempfile::tempdir().unwrap();
        write(&view_file(&dir.path().join("d"), 0), "1,1,0,0,5,5,0.9,0.1\n2,1,0,0,5,5,1,0\n1,2,9,9,5,5,0.25,0.5\n");
        let set = parse_predictions(dir.path(), "d", 1).unwrap();
        assert_eq!(set.scores.len(), 3);
        assert_eq!(set.scores[&DetKey { view: 0, frame: 1, identity: 2 }], ScoreRecord::new(0.25, 0.5));
    }

    #[test]
    fn score_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        write(&view_file(&dir.path().join("d"), 0), "1,1,0,0,5,5,0.9,0.1\n2,1,0,0,5,5,1.2,0\n");
        match parse_predictions(dir.path(), "d", 1).unwrap_err() {
            IngestError::Rows { errors, .. } => {
                assert_eq!(errors[0].line, 2);
                assert!(errors[0].message.contains("s_t"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_prediction_rows() {
        let dir = tempfile::tempdir().unwrap();
        write(&view_file(&dir.path().join("d"), 0), "1,1,0,0,5,5\n1,1,3,3,5,5\n");
        assert!(matches!(parse_predictions(dir.path(), "d", 1), Err(IngestError::Rows { .. })));
    }

    #[test]
    fn empty_prediction_file() {
        let dir = tempfile::tempdir().unwrap();
        write(&view_file(&dir.path().join("d"), 0), "");
        write(&view_file(&dir.path().join("d"), 1), "");
        let set = parse_predictions(dir.path(), "d", 2).unwrap();
        assert!(set.tracks.is_empty() && set.scores.is_empty());
        assert!(matches!(parse_predictions(dir.path(), "missing", 2), Err(IngestError::MissingFile { .. })));
    }

    #[test]
    fn prediction_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let dets: Vec<Detection> = (1..=4)
            .flat_map(|f| {
                (0..2)
                    .map(move |v| Detection::new(v, f, 3 + v as u32, BBox::new(f as f64 * 0.7, 2.0, 9.0, 9.5).unwrap()))
            })
            .collect();
        let mut scores = ScoreMap::new();
        for d in dets.iter().filter(|d| d.frame % 2 == 0) {
            scores.insert(d.key(), ScoreRecord::new(0.1 * d.frame as f64, 1.0 / 7.0));
        }
        let set = PredictionSet { description_id: "q".into(), tracks: tracks_from_detections(dets), scores };
        write_predictions(dir.path(), &set, 2).unwrap();
        assert_eq!(parse_predictions(dir.path(), "q", 2).unwrap(), set);
    }

    #[test]
    fn score_table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let scores: ScoreMap = (1..=3)
            .map(|f| {
                (DetKey { view: (f % 2) as usize, frame: f, identity: 7 }, ScoreRecord::new(0.95, 0.05 * f as f64))
            })
            .collect();
        write_scores(dir.path(), &scores, 2).unwrap();
        assert_eq!(read_scores(dir.path(), 2).unwrap(), scores);
        assert!(write_scores(dir.path(), &scores, 1).is_err());
    }
}
