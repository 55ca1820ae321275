use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, write_json, IngestError};
use crate::config::RunConfig;
use crate::metrics::{aggregate, DescriptionResult};

/// Aggregate scores; undefined (all `None`) when no description was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateBlock {
    pub n_l: usize,
    pub defined: bool,
    pub cvridf1: Option<f64>,
    pub cvrma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: RunConfig,
    pub descriptions: Vec<DescriptionResult>,
    pub aggregate: AggregateBlock,
}

impl EvaluationReport {
    pub fn new(config: RunConfig, descriptions: Vec<DescriptionResult>) -> Self {
        let aggregate = match aggregate(&descriptions) {
            Ok(a) => AggregateBlock { n_l: a.n_l, defined: true, cvridf1: Some(a.cvridf1), cvrma: Some(a.cvrma) },
            Err(_) => AggregateBlock { n_l: 0, defined: false, cvridf1: None, cvrma: None },
        };
        EvaluationReport { config, descriptions, aggregate }
    }
}

pub fn write_report(path: &Path, report: &EvaluationReport) -> Result<(), IngestError> {
    write_json(path, report)
}

pub fn read_report(path: &Path) -> Result<EvaluationReport, IngestError> {
    read_json(path)
}
