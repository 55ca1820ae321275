use serde::{Deserialize, Serialize};

use crate::fusion::FusionWeights;
use crate::metrics::EvalConfig;
use crate::predictor::PredictorConfig;

/// Every parameter that influences an evaluation or filtering run.
///
/// Echoed verbatim into reports. Execution-only settings such as thread
/// counts are deliberately absent so they cannot change report bytes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunConfig {
    pub eval: EvalConfig,
    pub fusion: FusionWeights,
    pub predictor: PredictorConfig,
}
