use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_rows, write_text, IngestError};
use crate::datamodel::{DetKey, Identity, ViewId};
use crate::fusion::{fuse_features, FusionError};

/// Full re-identification feature and encoder feature of one detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub key: DetKey,
    pub f_full: Vec<f64>,
    pub f_encoder: Vec<f64>,
}

impl EmbeddingRecord {
    pub fn dim(&self) -> usize {
        self.f_full.len()
    }

    pub fn fused(&self, alpha: f64) -> Result<Vec<f64>, FusionError> {
        fuse_features(&self.f_full, &self.f_encoder, alpha)
    }
}

/// Reads rows `view,frame,id,D,F_f[D],F_Ai[D]`.
pub fn parse_embeddings(path: &Path) -> Result<Vec<EmbeddingRecord>, IngestError> {
    read_rows(path, |row| {
        let view: ViewId = row.get(0, "view")?;
        let frame = row.frame(1)?;
        let identity: Identity = row.get(2, "id")?;
        let dim: usize = row.get(3, "D")?;
        if dim == 0 {
            return Err("D must be positive".into());
        }
        let want = dim.checked_mul(2).and_then(|n| n.checked_add(4)).ok_or("D too large")?;
        row.expect_len(&[want])?;
        let mut values = Vec::with_capacity(2 * dim);
        for i in 4..want {
            let v: f64 = row.get(i, "feature")?;
            if !v.is_finite() {
                return Err(format!("feature column {} is not finite", i + 1));
            }
            values.push(v);
        }
        let f_encoder = values.split_off(dim);
        Ok(EmbeddingRecord { key: DetKey { view, frame, identity }, f_full: values, f_encoder })
    })
}

pub fn write_embeddings(path: &Path, records: &[EmbeddingRecord]) -> Result<(), IngestError> {
    let mut text = String::new();
    for r in records {
        if r.f_full.is_empty() || r.f_full.len() != r.f_encoder.len() {
            return Err(IngestError::format(
                path,
                format!("embedding {:?}: feature lengths {} and {}", r.key, r.f_full.len(), r.f_encoder.len()),
            ));
        }
        text.push_str(&format!("{},{},{},{}", r.key.view, r.key.frame, r.key.identity, r.dim()));
        for v in r.f_full.iter().chain(&r.f_encoder) {
            text.push_str(&format!(",{v}"));
        }
        text.push('\n');
    }
    write_text(path, &text)
}
