//! Maximum-likelihood fitting of trust parameters from session logs.
//!
//! The experience pair after session k is linear in the parameter
//! vector once four cumulative sums are extracted from the data: the
//! direct success/failure sums and the rectified, discounted
//! trust-difference sums from indirect sessions. The log-likelihood of
//! the observed ratings is then concave in the parameters, and its
//! gradient has a closed form in terms of the digamma function, so a
//! projected gradient ascent with backtracking converges globally.

use crate::error::{Error, Result};
use crate::special::{digamma_unchecked, log_beta_pdf_unchecked};
use crate::trust::{PerformanceObservation, TrustParams, TrustRating};
use serde::{Deserialize, Serialize};

/// What happened in one session, from one (human, robot) pair's view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SessionKind {
    /// The human worked with the robot and observed its performance.
    Direct(PerformanceObservation),
    /// The teammate worked with the robot and communicated trust in it.
    /// Either value may be missing in partially observed logs.
    Indirect {
        peer_trust: Option<f64>,
        trust_in_peer: Option<f64>,
    },
}

/// One human's interaction history with one robot over sessions 0..=K.
/// Session 0 carries only the initial rating; sessions 1..=K are each
/// either direct or indirect, which makes the direct/indirect index
/// sets a partition by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentHistory {
    ratings: Vec<Option<f64>>,
    sessions: Vec<SessionKind>,
}

impl AgentHistory {
    pub fn new(ratings: Vec<Option<f64>>, sessions: Vec<SessionKind>) -> Result<Self> {
        if ratings.is_empty() || ratings.len() != sessions.len() + 1 {
            return Err(Error::misuse(format!(
                "need one rating per session plus the initial rating, got {} ratings for {} sessions",
                ratings.len(),
                sessions.len()
            )));
        }
        if ratings[0].is_none() {
            return Err(Error::domain("the initial trust rating must be present"));
        }
        for (k, r) in ratings.iter().enumerate() {
            if let Some(v) = r {
                if !(0.0..=1.0).contains(v) {
                    return Err(Error::domain(format!("rating at session {k} outside [0,1]: {v}")));
                }
            }
        }
        for (i, s) in sessions.iter().enumerate() {
            if let SessionKind::Indirect {
                peer_trust,
                trust_in_peer,
            } = s
            {
                for (name, v) in [("peer_trust", peer_trust), ("trust_in_peer", trust_in_peer)] {
                    if let Some(v) = v {
                        if !(0.0..=1.0).contains(v) {
                            return Err(Error::domain(format!(
                                "{name} at session {} outside [0,1]: {v}",
                                i + 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self { ratings, sessions })
    }

    /// Number of interaction sessions K (ratings run 0..=K).
    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    pub fn ratings(&self) -> &[Option<f64>] {
        &self.ratings
    }

    pub fn sessions(&self) -> &[SessionKind] {
        &self.sessions
    }

    /// Sessions whose own rating is missing.
    pub fn missing_set(&self) -> Vec<usize> {
        self.ratings
            .iter()
            .enumerate()
            .filter_map(|(k, r)| r.is_none().then_some(k))
            .collect()
    }

    /// True when every rating and every indirect-session input is present.
    pub fn is_complete(&self) -> bool {
        self.ratings.iter().all(Option::is_some)
            && self.sessions.iter().all(|s| {
                !matches!(
                    s,
                    SessionKind::Indirect {
                        peer_trust: None,
                        ..
                    } | SessionKind::Indirect {
                        trust_in_peer: None,
                        ..
                    }
                )
            })
    }
}

/// Carry-forward imputation: every missing value is replaced by the
/// most recent observed value of the same series. Own ratings are
/// seeded by the (always present) initial rating; the indirect-session
/// series carry forward across indirect sessions.
pub fn impute_series(h: &AgentHistory) -> Result<AgentHistory> {
    let mut ratings = h.ratings.clone();
    let mut last = ratings[0].expect("validated at construction");
    for r in ratings.iter_mut() {
        match r {
            Some(v) => last = *v,
            None => *r = Some(last),
        }
    }

    let mut sessions = h.sessions.clone();
    let mut last_peer: Option<f64> = None;
    let mut last_tp: Option<f64> = None;
    for (i, s) in sessions.iter_mut().enumerate() {
        if let SessionKind::Indirect {
            peer_trust,
            trust_in_peer,
        } = s
        {
            match peer_trust {
                Some(v) => last_peer = Some(*v),
                None => {
                    *peer_trust = Some(last_peer.ok_or_else(|| {
                        Error::domain(format!(
                            "cannot impute peer trust at session {}: no earlier observation",
                            i + 1
                        ))
                    })?)
                }
            }
            match trust_in_peer {
                Some(v) => last_tp = Some(*v),
                None => {
                    *trust_in_peer = Some(last_tp.ok_or_else(|| {
                        Error::domain(format!(
                            "cannot impute trust in peer at session {}: no earlier observation",
                            i + 1
                        ))
                    })?)
                }
            }
        }
    }
    AgentHistory::new(ratings, sessions)
}

/// Cumulative per-session sums that make the experience pair linear in
/// the parameters: direct success/failure totals and rectified,
/// discounted trust-difference totals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SufficientSums {
    pub p: Vec<f64>,
    pub p_bar: Vec<f64>,
    pub q: Vec<f64>,
    pub q_bar: Vec<f64>,
}

impl SufficientSums {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Experience pair after session k under parameters `theta`.
    pub fn experience_at(&self, theta: &TrustParams, k: usize) -> (f64, f64) {
        (
            theta.alpha0 + theta.s * self.p[k] + theta.s_hat * self.q[k],
            theta.beta0 + theta.f * self.p_bar[k] + theta.f_hat * self.q_bar[k],
        )
    }

    /// Expected-trust series mu_k under parameters `theta`.
    pub fn expected_trust_series(&self, theta: &TrustParams) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (a, b) = self.experience_at(theta, k);
                a / (a + b)
            })
            .collect()
    }
}

/// Builds the sufficient sums from a complete history. Ratings are
/// clamped before entering the rectified differences, matching their
/// treatment in the likelihood.
pub fn build_sufficient_sums(h: &AgentHistory) -> Result<SufficientSums> {
    if !h.is_complete() {
        return Err(Error::misuse(
            "history has missing values; run impute_series (or estimate_missing) first",
        ));
    }
    let clamped: Vec<f64> = h
        .ratings
        .iter()
        .map(|r| TrustRating::clamped(r.unwrap()).map(|t| t.value()))
        .collect::<Result<_>>()?;

    let len = h.ratings.len();
    let mut sums = SufficientSums {
        p: vec![0.0; len],
        p_bar: vec![0.0; len],
        q: vec![0.0; len],
        q_bar: vec![0.0; len],
    };
    for (i, session) in h.sessions.iter().enumerate() {
        let k = i + 1;
        sums.p[k] = sums.p[k - 1];
        sums.p_bar[k] = sums.p_bar[k - 1];
        sums.q[k] = sums.q[k - 1];
        sums.q_bar[k] = sums.q_bar[k - 1];
        match session {
            SessionKind::Direct(obs) => {
                sums.p[k] += obs.p();
                sums.p_bar[k] += obs.p_bar();
            }
            SessionKind::Indirect {
                peer_trust,
                trust_in_peer,
            } => {
                let peer = TrustRating::clamped(peer_trust.unwrap())?.value();
                let discount = TrustRating::clamped(trust_in_peer.unwrap())?.value();
                let diff = peer - clamped[k - 1];
                if diff >= 0.0 {
                    sums.q[k] += discount * diff;
                } else {
                    sums.q_bar[k] += discount * (-diff);
                }
            }
        }
    }
    Ok(sums)
}

/// Clamped ratings of a complete history, ready for the likelihood.
pub fn clamped_ratings(h: &AgentHistory) -> Result<Vec<TrustRating>> {
    h.ratings
        .iter()
        .map(|r| {
            TrustRating::clamped(r.ok_or_else(|| {
                Error::misuse("history has missing ratings; run impute_series first")
            })?)
        })
        .collect()
}

fn log_likelihood_masked(
    theta: &TrustParams,
    sums: &SufficientSums,
    ratings: &[TrustRating],
    include: &[bool],
) -> f64 {
    let mut h = 0.0;
    for k in 0..ratings.len() {
        if !include[k] {
            continue;
        }
        let (a, b) = sums.experience_at(theta, k);
        h += log_beta_pdf_unchecked(ratings[k].value(), a, b);
    }
    h
}

/// Log-likelihood of the rating series under `theta`: the summed Beta
/// log-density of each rating at its session's experience pair.
pub fn log_likelihood(theta: &TrustParams, sums: &SufficientSums, ratings: &[TrustRating]) -> f64 {
    log_likelihood_masked(theta, sums, ratings, &vec![true; ratings.len()])
}

fn gradient_masked(
    theta: &TrustParams,
    sums: &SufficientSums,
    ratings: &[TrustRating],
    include: &[bool],
) -> [f64; 6] {
    let mut g = [0.0; 6];
    for k in 0..ratings.len() {
        if !include[k] {
            continue;
        }
        let (a, b) = sums.experience_at(theta, k);
        let psi_ab = digamma_unchecked(a + b);
        let t = ratings[k].value();
        // Contribution through alpha_k and through beta_k.
        let da = psi_ab - digamma_unchecked(a) + t.ln();
        let db = psi_ab - digamma_unchecked(b) + (1.0 - t).ln();
        g[0] += da;
        g[1] += db;
        g[2] += sums.p[k] * da;
        g[3] += sums.p_bar[k] * db;
        g[4] += sums.q[k] * da;
        g[5] += sums.q_bar[k] * db;
    }
    g
}

/// Analytic gradient of the log-likelihood in the parameter order
/// (alpha0, beta0, s, f, s_hat, f_hat).
pub fn gradient(theta: &TrustParams, sums: &SufficientSums, ratings: &[TrustRating]) -> [f64; 6] {
    gradient_masked(theta, sums, ratings, &vec![true; ratings.len()])
}

/// Which parameters a fit is allowed to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelVariant {
    /// Full model: direct and indirect channels both active.
    Tip,
    /// Indirect unit gains frozen at zero.
    #[serde(rename = "direct")]
    DirectOnly,
    /// Direct unit gains frozen at zero.
    #[serde(rename = "indirect")]
    IndirectOnly,
}

impl ModelVariant {
    /// Indices (into the 6-vector) frozen at zero for this variant.
    fn frozen(&self) -> &'static [usize] {
        match self {
            ModelVariant::Tip => &[],
            ModelVariant::DirectOnly => &[4, 5],
            ModelVariant::IndirectOnly => &[2, 3],
        }
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelVariant::Tip => "tip",
            ModelVariant::DirectOnly => "direct",
            ModelVariant::IndirectOnly => "indirect",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Sup-norm threshold on the projected gradient.
    pub grad_tol: f64,
    /// Armijo sufficient-increase constant.
    pub armijo_c: f64,
    /// Line search starts here and halves.
    pub initial_step: f64,
    /// Free parameters are projected onto [floor, inf).
    pub floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            grad_tol: 1e-6,
            armijo_c: 1e-4,
            initial_step: 1.0,
            floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub theta_star: TrustParams,
    pub loglik_trajectory: Vec<f64>,
    /// mu_k for k = 0..=K at theta_star.
    pub expected_trust: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub variant: ModelVariant,
    pub final_loglik: f64,
    pub warning: Option<String>,
}

#[cfg(test)]
fn theta_to_vec(t: &TrustParams) -> [f64; 6] {
    [t.alpha0, t.beta0, t.s, t.f, t.s_hat, t.f_hat]
}

fn vec_to_theta(v: &[f64; 6]) -> TrustParams {
    TrustParams {
        alpha0: v[0],
        beta0: v[1],
        s: v[2],
        f: v[3],
        s_hat: v[4],
        f_hat: v[5],
    }
}

fn ascend(
    sums: &SufficientSums,
    ratings: &[TrustRating],
    include: &[bool],
    variant: ModelVariant,
    opts: &FitOptions,
) -> Result<FitReport> {
    let frozen = variant.frozen();
    let mut theta = [1.0f64; 6];
    for &i in frozen {
        theta[i] = 0.0;
    }

    let eval = |v: &[f64; 6]| log_likelihood_masked(&vec_to_theta(v), sums, ratings, include);
    let mut h = eval(&theta);
    if !h.is_finite() {
        return Err(Error::numeric(format!(
            "log-likelihood is not finite at the starting point (H = {h})"
        )));
    }
    let mut trajectory = vec![h];
    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = 0u32;

    while iterations < opts.max_iters {
        let mut g = gradient_masked(&vec_to_theta(&theta), sums, ratings, include);
        for &i in frozen {
            g[i] = 0.0;
        }
        // Projected gradient: a coordinate pinned at the floor with an
        // inward-pointing (negative) gradient cannot move.
        let mut pg_norm = 0.0f64;
        for i in 0..6 {
            let blocked = theta[i] <= opts.floor && g[i] < 0.0;
            if !blocked {
                pg_norm = pg_norm.max(g[i].abs());
            }
        }
        if pg_norm < opts.grad_tol {
            converged = true;
            break;
        }

        let mut step = opts.initial_step;
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand = [0.0f64; 6];
            let mut dot = 0.0;
            for i in 0..6 {
                cand[i] = if frozen.contains(&i) {
                    0.0
                } else {
                    (theta[i] + step * g[i]).max(opts.floor)
                };
                dot += g[i] * (cand[i] - theta[i]);
            }
            if dot > 0.0 {
                let h_new = eval(&cand);
                if h_new.is_finite() && h_new >= h + opts.armijo_c * dot {
                    stalled = if h_new - h < 1e-13 * (1.0 + h.abs()) {
                        stalled + 1
                    } else {
                        0
                    };
                    theta = cand;
                    h = h_new;
                    trajectory.push(h);
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted || stalled > 50 {
            break;
        }
    }

    let theta_star = vec_to_theta(&theta);
    Ok(FitReport {
        expected_trust: sums.expected_trust_series(&theta_star),
        theta_star,
        final_loglik: h,
        loglik_trajectory: trajectory,
        iterations,
        converged,
        variant,
        warning: None,
    })
}

/// Fits the parameters of a complete history by projected gradient
/// ascent on the concave log-likelihood.
pub fn fit(h: &AgentHistory, variant: ModelVariant, opts: &FitOptions) -> Result<FitReport> {
    if !h.is_complete() {
        return Err(Error::misuse(
            "history has missing values; use impute_series + fit, or estimate_missing",
        ));
    }
    let sums = build_sufficient_sums(h)?;
    let ratings = clamped_ratings(h)?;
    let include = vec![true; ratings.len()];
    ascend(&sums, &ratings, &include, variant, opts)
}

/// Fit with missing ratings plus predictions for the missing sessions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub fit: FitReport,
    /// (session, predicted expected trust) for each missing session.
    pub estimates: Vec<(usize, f64)>,
}

/// Handles histories with missing ratings: inputs are imputed by
/// carry-forward, the likelihood is summed over observed sessions only,
/// and each missing session's rating is predicted by the fitted
/// expected trust.
pub fn estimate_missing(
    h: &AgentHistory,
    variant: ModelVariant,
    opts: &FitOptions,
) -> Result<EstimateReport> {
    let missing = h.missing_set();
    let include: Vec<bool> = h.ratings.iter().map(Option::is_some).collect();
    let observed = include.iter().filter(|&&b| b).count();

    let complete = impute_series(h)?;
    let sums = build_sufficient_sums(&complete)?;
    let ratings = clamped_ratings(&complete)?;
    let mut report = ascend(&sums, &ratings, &include, variant, opts)?;
    if observed <= 1 {
        report.warning = Some(
            "underdetermined fit: only the initial rating is observed".to_string(),
        );
    }
    let estimates = missing
        .iter()
        .map(|&u| (u, report.expected_trust[u]))
        .collect();
    Ok(EstimateReport {
        fit: report,
        estimates,
    })
}
