//! Feature and score fusion plus the tracking/referring training losses.
//!
//! These are plain numeric functions. The loss gradients with respect to the
//! uncertainty weights are analytic so external trainers can use them and so
//! they can be checked against finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("feature lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("row {row} of {what} is invalid: {reason}")]
    InvalidRow { what: &'static str, row: usize, reason: String },
    #[error("loss term {name} = {value} must be finite and non-negative")]
    InvalidLoss { name: &'static str, value: f64 },
}

/// Feature fusion weight `alpha` and score fusion weight `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for FusionWeights {
    fn default() -> Self {
        FusionWeights { alpha: 0.01, beta: 0.1 }
    }
}

/// Text score and attribute score of one detection. The fused score is always
/// derived, never stored, so weight sweeps need no re-export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub s_t: f64,
    pub s_a: f64,
}

impl ScoreRecord {
    pub fn new(s_t: f64, s_a: f64) -> Self {
        ScoreRecord { s_t, s_a }
    }

    pub fn fused(&self, beta: f64) -> f64 {
        fuse_scores(self.s_t, self.s_a, beta)
    }
}

/// `F_f + alpha * F_Ai`, elementwise.
pub fn fuse_features(f_full: &[f64], f_encoder: &[f64], alpha: f64) -> Result<Vec<f64>, FusionError> {
    if f_full.len() != f_encoder.len() {
        return Err(FusionError::LengthMismatch { left: f_full.len(), right: f_encoder.len() });
    }
    Ok(f_full.iter().zip(f_encoder).map(|(f, a)| f + alpha * a).collect())
}

/// `S_t + beta * exp(S_a)`.
pub fn fuse_scores(s_t: f64, s_a: f64, beta: f64) -> f64 {
    s_t + beta * s_a.exp()
}

/// Inputs of the uncertainty-weighted tracking loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmotLossInputs {
    /// detection loss
    pub l_d: f64,
    /// single-view re-identification loss
    pub l_s: f64,
    /// cross-view re-identification loss
    pub l_c: f64,
    pub w1: f64,
    pub w2: f64,
}

impl CmotLossInputs {
    fn check(&self) -> Result<(), FusionError> {
        for (name, value) in [("L_d", self.l_d), ("L_s", self.l_s), ("L_c", self.l_c)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(FusionError::InvalidLoss { name, value });
            }
        }
        Ok(())
    }
}

/// `0.5 * (exp(-w1) L_d + exp(-w2) (L_s + L_c) + w1 + w2)`
pub fn loss_cmot(x: &CmotLossInputs) -> Result<f64, FusionError> {
    x.check()?;
    Ok(0.5 * ((-x.w1).exp() * x.l_d + (-x.w2).exp() * (x.l_s + x.l_c) + x.w1 + x.w2))
}

/// Partial derivatives of [`loss_cmot`] with respect to `(w1, w2)`.
pub fn grad_loss_cmot(x: &CmotLossInputs) -> Result<(f64, f64), FusionError> {
    x.check()?;
    Ok((0.5 * (1.0 - (-x.w1).exp() * x.l_d), 0.5 * (1.0 - (-x.w2).exp() * (x.l_s + x.l_c))))
}

pub const LOG_FLOOR: f64 = 1e-12;
const ROW_SUM_TOL: f64 = 1e-9;

/// Mean cross-entropy `-(1/N) sum_i sum_j y_ij log p_ij` over `N` objects and `K` classes.
///
/// Each row of `probs` must be a distribution and each row of `labels` one-hot.
/// `log` is taken of `max(p, 1e-12)`.
pub fn loss_referring(probs: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<f64, FusionError> {
    if probs.is_empty() {
        return Err(FusionError::ShapeMismatch("no objects (N = 0)".into()));
    }
    if probs.len() != labels.len() {
        return Err(FusionError::ShapeMismatch(format!(
            "{} probability rows vs {} label rows",
            probs.len(),
            labels.len()
        )));
    }
    let k = probs[0].len();
    let mut total = 0.0;
    for (i, (p, y)) in probs.iter().zip(labels).enumerate() {
        if p.len() != k || y.len() != k {
            return Err(FusionError::ShapeMismatch(format!(
                "row {i} has {} probabilities and {} labels, expected {k}",
                p.len(),
                y.len()
            )));
        }
        let sum: f64 = p.iter().sum();
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) || (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(FusionError::InvalidRow {
                what: "probs",
                row: i,
                reason: format!("not a distribution (sum {sum})"),
            });
        }
        let ones = y.iter().filter(|v| **v == 1.0).count();
        let zeros = y.iter().filter(|v| **v == 0.0).count();
        if ones != 1 || ones + zeros != k {
            return Err(FusionError::InvalidRow { what: "labels", row: i, reason: "not one-hot".into() });
        }
        total += p.iter().zip(y).map(|(p, y)| y * p.max(LOG_FLOOR).ln()).sum::<f64>();
    }
    Ok(-total / probs.len() as f64)
}

/// Full training objective: tracking loss plus referring loss.
pub fn loss_total(cmot: &CmotLossInputs, probs: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<f64, FusionError> {
    Ok(loss_cmot(cmot)? + loss_referring(probs, labels)?)
}

/// Central finite-difference gradient of [`loss_cmot`] in `(w1, w2)`.
pub fn numeric_grad_loss_cmot(x: &CmotLossInputs, h: f64) -> Result<(f64, f64), FusionError> {
    let at = |w1: f64, w2: f64| loss_cmot(&CmotLossInputs { w1, w2, ..*x });
    let d1 = (at(x.w1 + h, x.w2)? - at(x.w1 - h, x.w2)?) / (2.0 * h);
    let d2 = (at(x.w1, x.w2 + h)? - at(x.w1, x.w2 - h)?) / (2.0 * h);
    Ok((d1, d2))
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Outcome of one fusion/loss self-test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name: name.to_string(), passed, detail }
}

/// Random `(w1, w2, L_d, L_s, L_c)` draws used by the gradient check.
pub fn random_cmot_inputs(rng: &mut impl Rng) -> CmotLossInputs {
    CmotLossInputs {
        l_d: rng.gen_range(0.0..10.0),
        l_s: rng.gen_range(0.0..5.0),
        l_c: rng.gen_range(0.0..5.0),
        w1: rng.gen_range(-3.0..3.0),
        w2: rng.gen_range(-3.0..3.0),
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Worked examples, the finite-difference gradient check over `cases` random
/// inputs, and the argmax shift-invariance of fused scores over `cases`
/// random detection sets.
#[allow(clippy::approx_constant)]
pub fn self_check(weights: FusionWeights, cases: usize, seed: u64) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let fused = fuse_features(&[1.0, 2.0], &[100.0, -100.0], 0.01).unwrap_or_default();
    let ok = fused.len() == 2 && (fused[0] - 2.0).abs() <= 1e-9 && (fused[1] - 1.0).abs() <= 1e-9;
    out.push(outcome("fuse_features worked example", ok, format!("{fused:?}")));

    let s = fuse_scores(0.42, 0.9, 0.1);
    let expected = 0.42 + 0.1 * 0.9f64.exp();
    out.push(outcome(
        "fuse_scores worked example",
        (s - expected).abs() <= 1e-9 && (s - 0.665_960_311).abs() <= 1e-8,
        format!("{s:.9}"),
    ));

    let half = loss_referring(&[vec![0.5, 0.5]], &[vec![1.0, 0.0]]).unwrap_or(f64::NAN);
    let two = loss_referring(&[vec![0.5, 0.5], vec![0.9, 0.1]], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap_or(f64::NAN);
    out.push(outcome(
        "loss_referring worked examples",
        (half - 0.693_15).abs() <= 1e-5 && (two - 1.497_87).abs() <= 1e-5,
        format!("{half:.5}, {two:.5}"),
    ));

    let mut worst = 0.0f64;
    for _ in 0..cases {
        let x = random_cmot_inputs(&mut rng);
        let (Ok(a), Ok(n)) = (grad_loss_cmot(&x), numeric_grad_loss_cmot(&x, 1e-5)) else {
            worst = f64::INFINITY;
            break;
        };
        worst = worst.max(relative_error(a.0, n.0)).max(relative_error(a.1, n.1));
    }
    out.push(outcome(
        "grad_loss_cmot vs central differences",
        worst <= 1e-6,
        format!("{cases} cases, max relative error {worst:.3e}"),
    ));

    let mut violations = 0;
    for _ in 0..cases {
        let n = rng.gen_range(2..20);
        let dets: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))).collect();
        let shift = rng.gen_range(-1.0..1.0);
        let base: Vec<f64> = dets.iter().map(|(t, a)| fuse_scores(*t, *a, weights.beta)).collect();
        let shifted: Vec<f64> = dets.iter().map(|(t, a)| fuse_scores(t + shift, *a, weights.beta)).collect();
        if argmax(&base) != argmax(&shifted) {
            violations += 1;
        }
    }
    out.push(outcome(
        "argmax invariant under common text-score shift",
        violations == 0,
        format!("{cases} detection sets, {violations} violations"),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cmot(l_d: f64, l_s: f64, l_c: f64, w1: f64, w2: f64) -> CmotLossInputs {
        CmotLossInputs { l_d, l_s, l_c, w1, w2 }
    }

    #[test]
    fn feature_fusion_examples() {
        let f = fuse_features(&[1.0, 2.0], &[100.0, -100.0], 0.01).unwrap();
        assert!((f[0] - 2.0).abs() < 1e-12 && (f[1] - 1.0).abs() < 1e-12);
        assert_eq!(fuse_features(&[1.5, -2.0], &[3.0, 4.0], 0.0).unwrap(), vec![1.5, -2.0]);
        assert_eq!(fuse_features(&[1.5, -2.0], &[0.0, 0.0], 0.01).unwrap(), vec![1.5, -2.0]);
        assert_eq!(fuse_features(&[1.0], &[1.0, 2.0], 0.01), Err(FusionError::LengthMismatch { left: 1, right: 2 }));
    }

    #[test]
    fn score_fusion_examples() {
        assert!((fuse_scores(0.5, 0.0, 0.1) - 0.6).abs() < 1e-15);
        // 0.42 + 0.1 * e^0.9 = 0.42 + 0.245960311...
        assert!((fuse_scores(0.42, 0.9, 0.1) - 0.665_960_311_115_695).abs() < 1e-12);
        assert_eq!(fuse_scores(0.3, 0.8, 0.0), 0.3);
        assert_eq!(ScoreRecord::new(0.5, 0.0).fused(0.1), fuse_scores(0.5, 0.0, 0.1));
    }

    #[test]
    fn cmot_loss_examples() {
        assert!((loss_cmot(&cmot(1.0, 0.5, 0.5, 0.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        // 0.5 * (0.5 + 1 + ln 2)
        let v = loss_cmot(&cmot(1.0, 0.5, 0.5, 2f64.ln(), 0.0)).unwrap();
        assert!((v - 1.096_573_590_279_972_6).abs() < 1e-12);
        assert_eq!(loss_cmot(&cmot(0.0, 0.0, 0.0, 0.0, 0.0)).unwrap(), 0.0);
        assert!(loss_cmot(&cmot(-1.0, 0.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn cmot_gradient_examples() {
        let (g1, g2) = grad_loss_cmot(&cmot(1.0, 0.25, 0.75, 0.0, 0.0)).unwrap();
        assert_eq!(g1, 0.0);
        assert_eq!(g2, 0.0);
        for w1 in [-2.0, 0.0, 3.5] {
            assert_eq!(grad_loss_cmot(&cmot(0.0, 1.0, 1.0, w1, 0.0)).unwrap().0, 0.5);
        }
    }

    #[test]
    fn referring_loss_examples() {
        assert_eq!(loss_referring(&[vec![1.0, 0.0]], &[vec![1.0, 0.0]]).unwrap(), 0.0);
        let v = loss_referring(&[vec![0.5, 0.5]], &[vec![1.0, 0.0]]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        let v = loss_referring(&[vec![0.5, 0.5], vec![0.9, 0.1]], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        // (ln 2 + ln 10) / 2
        assert!((v - 0.5 * (2f64.ln() + 10f64.ln())).abs() < 1e-15);
        assert!((v - 1.497_87).abs() < 1e-5);
    }

    #[test]
    fn referring_loss_floor_keeps_it_finite() {
        let v = loss_referring(&[vec![0.0, 1.0]], &[vec![1.0, 0.0]]).unwrap();
        assert!((v - -LOG_FLOOR.ln()).abs() < 1e-9);
    }

    #[test]
    fn referring_loss_rejects_bad_shapes() {
        assert!(matches!(loss_referring(&[], &[]), Err(FusionError::ShapeMismatch(_))));
        assert!(matches!(
            loss_referring(&[vec![0.5, 0.5]], &[vec![1.0, 0.0], vec![0.0, 1.0]]),
            Err(FusionError::ShapeMismatch(_))
        ));
        assert!(matches!(
            loss_referring(&[vec![0.5, 0.4]], &[vec![1.0, 0.0]]),
            Err(FusionError::InvalidRow { what: "probs", .. })
        ));
        assert!(matches!(
            loss_referring(&[vec![0.5, 0.5]], &[vec![1.0, 1.0]]),
            Err(FusionError::InvalidRow { what: "labels", .. })
        ));
    }

    #[test]
    fn total_loss_composes() {
        let c = cmot(1.0, 0.5, 0.5, 0.0, 0.0);
        let probs = vec![vec![0.5, 0.5], vec![0.9, 0.1]];
        let labels = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let total = loss_total(&c, &probs, &labels).unwrap();
        assert!((total - 2.497_87).abs() < 1e-5);
        assert_eq!(loss_total(&cmot(0.0, 0.0, 0.0, 0.0, 0.0), &[vec![1.0]], &[vec![1.0]]).unwrap(), 0.0);
    }

    #[test]
    fn self_check_passes_with_defaults() {
        for o in self_check(FusionWeights::default(), 200, 7) {
            assert!(o.passed, "{}: {}", o.name, o.detail);
        }
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(
            l_d in 0.0..10.0f64, l_s in 0.0..5.0f64, l_c in 0.0..5.0f64,
            w1 in -3.0..3.0f64, w2 in -3.0..3.0f64,
        ) {
            let x = cmot(l_d, l_s, l_c, w1, w2);
            let a = grad_loss_cmot(&x).unwrap();
            let n = numeric_grad_loss_cmot(&x, 1e-5).unwrap();
            prop_assert!(relative_error(a.0, n.0) <= 1e-6 || (a.0 - n.0).abs() < 1e-10);
            prop_assert!(relative_error(a.1, n.1) <= 1e-6 || (a.1 - n.1).abs() < 1e-10);
        }

        #[test]
        fn cmot_minimized_at_log_detection_loss(l_d in 0.01..10.0f64, dw in -2.0..2.0f64) {
            let at = |w1: f64| loss_cmot(&cmot(l_d, 1.0, 1.0, w1, 0.0)).unwrap();
            let w_star = l_d.ln();
            prop_assert!(at(w_star) <= at(w_star + dw) + 1e-12);
        }

        #[test]
        fn referring_loss_nonnegative(p in 0.0..1.0f64, hot in 0usize..2) {
            let mut y = vec![0.0, 0.0];
            y[hot] = 1.0;
            let v = loss_referring(&[vec![p, 1.0 - p]], &[y]).unwrap();
            prop_assert!(v >= 0.0);
        }

        #[test]
        fn fused_score_strictly_increasing(t in 0.0..1.0f64, a in 0.0..1.0f64, d in 1e-6..1.0f64) {
            prop_assert!(fuse_scores(t + d, a, 0.1) > fuse_scores(t, a, 0.1));
            prop_assert!(fuse_scores(t, a + d, 0.1) > fuse_scores(t, a, 0.1));
        }
    }
}
