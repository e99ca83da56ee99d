//! Fitting-error metrics and model comparisons.

use crate::error::{Error, Result};
use crate::inference::{
    estimate_missing, fit, AgentHistory, FitOptions, FitReport, ModelVariant,
};
use crate::trust::TrustRating;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;

/// Per-session fitting error e_k = |mu_k − t_k|.
pub fn fitting_error_series(report: &FitReport, ratings: &[TrustRating]) -> Result<Vec<f64>> {
    if report.expected_trust.len() != ratings.len() {
        return Err(Error::misuse(format!(
            "expected-trust series has {} entries but {} ratings were supplied",
            report.expected_trust.len(),
            ratings.len()
        )));
    }
    Ok(report
        .expected_trust
        .iter()
        .zip(ratings)
        .map(|(mu, t)| (mu - t.value()).abs())
        .collect())
}

/// Pooled root-mean-square error over a group of equal-length error
/// series (one per agent): the mean square runs over agents and
/// sessions jointly.
pub fn rmse(series: &[Vec<f64>]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::misuse("rmse over an empty collection"));
    }
    let len = series[0].len();
    if len == 0 || series.iter().any(|s| s.len() != len) {
        return Err(Error::misuse("rmse requires equal-length non-empty series"));
    }
    let n = series.len() as f64;
    let per_agent: f64 = series
        .iter()
        .map(|s| s.iter().map(|e| e * e).sum::<f64>() / len as f64)
        .sum();
    Ok((per_agent / n).sqrt())
}

/// Holdout RMSE over the last `k_hat` sessions: each agent contributes
/// the mean square of its prediction errors; the result is the square
/// root of the across-agent mean.
pub fn holdout_rmse(
    estimates: &[Vec<(usize, f64)>],
    truths: &[Vec<(usize, f64)>],
    k_hat: usize,
) -> Result<f64> {
    if estimates.is_empty() || estimates.len() != truths.len() {
        return Err(Error::misuse(
            "holdout_rmse needs one estimate list and one truth list per agent",
        ));
    }
    let mut total = 0.0;
    for (est, truth) in estimates.iter().zip(truths) {
        if est.len() != k_hat || truth.len() != k_hat {
            return Err(Error::misuse(format!(
                "every agent must hold out exactly {k_hat} sessions"
            )));
        }
        let mut sq = 0.0;
        for ((u_e, mu), (u_t, t)) in est.iter().zip(truth) {
            if u_e != u_t {
                return Err(Error::misuse(format!(
                    "estimate session {u_e} does not match truth session {u_t}"
                )));
            }
            sq += (mu - t) * (mu - t);
        }
        total += sq / k_hat as f64;
    }
    Ok((total / estimates.len() as f64).sqrt())
}

/// One history in a comparison corpus, tagged with who it belongs to.
#[derive(Debug, Clone)]
pub struct LabeledHistory {
    pub agent: String,
    pub robot: String,
    pub history: AgentHistory,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub agent: String,
    pub robot: String,
    pub variant: ModelVariant,
    /// Mean |mu_k − t_k| over the sessions with an observed rating.
    pub mean_error: f64,
    pub final_loglik: f64,
    pub converged: bool,
    /// Set when the fit failed; the row is kept so the comparison can
    /// still be emitted.
    pub failed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Pooled RMSE keyed by (robot, variant).
    pub rmse_by_robot: BTreeMap<String, f64>,
}

fn variant_key(robot: &str, variant: ModelVariant) -> String {
    format!("{robot}:{variant}")
}

/// Fits every history under every variant and tabulates per-agent mean
/// errors plus pooled per-robot RMSE. Histories with missing ratings
/// are fit on the observed sessions with carry-forward inputs; their
/// errors are measured on observed sessions only.
pub fn compare_models(
    corpus: &[LabeledHistory],
    variants: &[ModelVariant],
    opts: &FitOptions,
) -> Comparison {
    let mut rows = Vec::new();
    let mut error_groups: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();

    for item in corpus {
        for &variant in variants {
            let fitted = if item.history.is_complete() {
                fit(&item.history, variant, opts)
            } else {
                estimate_missing(&item.history, variant, opts).map(|e| e.fit)
            };
            match fitted {
                Ok(report) => {
                    let mut errors = Vec::new();
                    for (k, rating) in item.history.ratings().iter().enumerate() {
                        if let Some(t) = rating {
                            let t = TrustRating::clamped(*t).expect("validated at construction");
                            errors.push((report.expected_trust[k] - t.value()).abs());
                        }
                    }
                    let mean_error = errors.iter().sum::<f64>() / errors.len() as f64;
                    error_groups
                        .entry(variant_key(&item.robot, variant))
                        .or_default()
                        .push(errors);
                    rows.push(ComparisonRow {
                        agent: item.agent.clone(),
                        robot: item.robot.clone(),
                        variant,
                        mean_error,
                        final_loglik: report.final_loglik,
                        converged: report.converged,
                        failed: false,
                    });
                }
                Err(_) => rows.push(ComparisonRow {
                    agent: item.agent.clone(),
                    robot: item.robot.clone(),
                    variant,
                    mean_error: f64::NAN,
                    final_loglik: f64::NAN,
                    converged: false,
                    failed: true,
                }),
            }
        }
    }

    let mut rmse_by_robot = BTreeMap::new();
    for (key, group) in error_groups {
        // Groups can mix lengths when datasets differ; pool the squares.
        let n: usize = group.iter().map(Vec::len).sum();
        let sq: f64 = group.iter().flatten().map(|e| e * e).sum();
        rmse_by_robot.insert(key, (sq / n as f64).sqrt());
    }
    Comparison { rows, rmse_by_robot }
}

impl Comparison {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "agent,robot,variant,mean_error,final_loglik,converged")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{:.6},{:.6},{}",
                row.agent, row.robot, row.variant, row.mean_error, row.final_loglik, row.converged
            )?;
        }
        Ok(())
    }
}
