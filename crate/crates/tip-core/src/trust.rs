//! Trust state and the two experience-update channels.
//!
//! A human agent's trust in a robot is a Beta random variable whose
//! shape parameters are the cumulative positive and negative experience
//! the human has accumulated. Direct interaction adds experience scaled
//! by the robot's observed success/failure; hearing a teammate's trust
//! report adds experience scaled by the (discounted) difference between
//! the report and one's own previous trust.

use crate::error::{Error, Result};
use crate::special;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Ratings are clamped into this closed interval before any log-density
/// evaluation so that reports of exactly 0 or 1 keep the likelihood finite.
pub const RATING_CLAMP: f64 = 1e-4;

/// Cumulative positive/negative experience (the Beta shape parameters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperiencePair {
    alpha: f64,
    beta: f64,
}

impl ExperiencePair {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::domain(format!(
                "experience pair requires positive finite entries, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Mean of the Beta trust distribution, alpha / (alpha + beta).
    pub fn expected_trust(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Variance of the Beta trust distribution.
    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    /// Experience gained from one direct interaction: alpha grows by
    /// s·p, beta by f·p̄. Returns the updated pair; `self` is unchanged.
    pub fn direct_update(&self, params: &TrustParams, obs: &PerformanceObservation) -> Self {
        Self {
            alpha: self.alpha + params.s * obs.p,
            beta: self.beta + params.f * obs.p_bar,
        }
    }

    /// Experience gained from a teammate's trust report. The report is
    /// compared against one's own previous trust; the positive part of
    /// the difference feeds alpha, the negative part feeds beta, both
    /// discounted by the trust held in the reporting teammate. At most
    /// one of the two fields changes.
    pub fn indirect_update(
        &self,
        params: &TrustParams,
        own_prev_trust: TrustRating,
        peer_trust: TrustRating,
        trust_in_peer: TrustRating,
    ) -> Self {
        let diff = peer_trust.value() - own_prev_trust.value();
        if diff >= 0.0 {
            Self {
                alpha: self.alpha + params.s_hat * trust_in_peer.value() * diff,
                beta: self.beta,
            }
        } else {
            Self {
                alpha: self.alpha,
                beta: self.beta + params.f_hat * trust_in_peer.value() * (-diff),
            }
        }
    }

    /// Log-density of the trust distribution at rating `t`.
    pub fn log_pdf(&self, t: TrustRating) -> f64 {
        special::log_beta_pdf_unchecked(t.value(), self.alpha, self.beta)
    }

    /// One random trust report drawn from Beta(alpha, beta).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TrustRating {
        TrustRating::new_unchecked(special::sample_beta(self.alpha, self.beta, rng))
    }
}

/// The six parameters characterizing one human's trust in one robot:
/// prior experience (alpha0, beta0), unit direct gains (s, f), and unit
/// indirect gains (s_hat, f_hat). Zero indirect gains encode the
/// direct-only ablation; zero direct gains the indirect-only one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustParams {
    pub alpha0: f64,
    pub beta0: f64,
    pub s: f64,
    pub f: f64,
    pub s_hat: f64,
    pub f_hat: f64,
}

impl TrustParams {
    /// Validating constructor for externally supplied parameters:
    /// alpha0, beta0, s, f must be positive; s_hat, f_hat non-negative.
    pub fn new(alpha0: f64, beta0: f64, s: f64, f: f64, s_hat: f64, f_hat: f64) -> Result<Self> {
        let p = Self {
            alpha0,
            beta0,
            s,
            f,
            s_hat,
            f_hat,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha0", self.alpha0),
            ("beta0", self.beta0),
            ("s", self.s),
            ("f", self.f),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("s_hat", self.s_hat), ("f_hat", self.f_hat)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Uniform-prior, unit-gain parameters.
    pub fn ones() -> Self {
        Self {
            alpha0: 1.0,
            beta0: 1.0,
            s: 1.0,
            f: 1.0,
            s_hat: 1.0,
            f_hat: 1.0,
        }
    }

    /// Prior experience as a pair.
    pub fn prior(&self) -> ExperiencePair {
        ExperiencePair {
            alpha: self.alpha0,
            beta: self.beta0,
        }
    }
}

/// A robot's success/failure measure for one interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceObservation {
    p: f64,
    p_bar: f64,
}

impl PerformanceObservation {
    /// Standard constructor: failure is the complement of success.
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!(
                "performance must lie in [0,1], got {p}"
            )));
        }
        Ok(Self { p, p_bar: 1.0 - p })
    }

    /// Escape hatch for independent success and failure measures. The
    /// update equations do not require p + p̄ = 1; the experiment does.
    pub fn independent(p: f64, p_bar: f64) -> Result<Self> {
        for v in [p, p_bar] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!(
                    "performance measures must lie in [0,1], got {v}"
                )));
            }
        }
        Ok(Self { p, p_bar })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_bar(&self) -> f64 {
        self.p_bar
    }
}

/// A single trust rating in the open unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TrustRating(f64);

impl TrustRating {
    /// Accepts a value strictly inside (0, 1).
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::domain(format!(
                "trust rating must lie strictly inside (0,1), got {value}"
            )));
        }
        Ok(Self(value))
    }

    /// Ingests a raw rating from data: validates it lies in [0, 1] and
    /// clamps into [RATING_CLAMP, 1 − RATING_CLAMP] so log-densities at
    /// reports of exactly 0 or 1 stay finite.
    pub fn clamped(raw: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&raw) {
            return Err(Error::domain(format!(
                "trust rating must lie in [0,1], got {raw}"
            )));
        }
        Ok(Self(raw.clamp(RATING_CLAMP, 1.0 - RATING_CLAMP)))
    }

    pub(crate) fn new_unchecked(value: f64) -> Self {
        debug_assert!(value > 0.0 && value < 1.0);
        Self(value)
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(a: f64, b: f64) -> ExperiencePair {
        ExperiencePair::new(a, b).unwrap()
    }

    fn rating(v: f64) -> TrustRating {
        TrustRating::new(v).unwrap()
    }

    #[test]
    fn expected_trust_hand_values() {
        assert_eq!(pair(2.0, 2.0).expected_trust(), 0.5);
        assert_eq!(pair(3.0, 1.0).expected_trust(), 0.75);
        assert!((pair(1.0, 9.0).expected_trust() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn direct_update_hand_values() {
        let params = TrustParams::new(1.0, 1.0, 2.0, 3.0, 0.0, 0.0).unwrap();
        let obs = PerformanceObservation::new(0.9).unwrap();
        let e = pair(1.0, 1.0).direct_update(&params, &obs);
        assert!((e.alpha() - 2.8).abs() < 1e-12);
        assert!((e.beta() - 1.3).abs() < 1e-12);

        // Zero-success boundary with f = 1.
        let params = TrustParams::new(1.0, 1.0, 5.0, 1.0, 0.0, 0.0).unwrap();
        let e = pair(5.0, 7.0).direct_update(&params, &PerformanceObservation::new(0.0).unwrap());
        assert_eq!((e.alpha(), e.beta()), (5.0, 8.0));

        // Zero-failure boundary.
        let params = TrustParams::ones();
        let e = pair(5.0, 7.0).direct_update(&params, &PerformanceObservation::new(1.0).unwrap());
        assert_eq!((e.alpha(), e.beta()), (6.0, 7.0));
    }

    #[test]
    fn indirect_update_hand_values() {
        let mut params = TrustParams::ones();
        params.s_hat = 2.0;
        let e = pair(1.0, 1.0).indirect_update(&params, rating(0.5), rating(0.8), rating(0.5));
        assert!((e.alpha() - 1.3).abs() < 1e-12);
        assert_eq!(e.beta(), 1.0);

        // Peer agrees exactly: nothing changes.
        let e = pair(1.0, 1.0).indirect_update(&params, rating(0.5), rating(0.5), rating(0.5));
        assert_eq!((e.alpha(), e.beta()), (1.0, 1.0));

        // Negative difference feeds beta only.
        params.f_hat = 4.0;
        let e = pair(1.0, 1.0).indirect_update(&params, rating(0.5), rating(0.2), rating(0.5));
        assert_eq!(e.alpha(), 1.0);
        assert!((e.beta() - 1.6).abs() < 1e-12);
    }

    #[test]
    fn observation_complement_enforced() {
        let o = PerformanceObservation::new(0.3).unwrap();
        assert!((o.p() + o.p_bar() - 1.0).abs() < 1e-9);
        assert!(PerformanceObservation::new(1.2).is_err());
        // The escape hatch allows independent measures.
        let o = PerformanceObservation::independent(0.4, 0.9).unwrap();
        assert_eq!((o.p(), o.p_bar()), (0.4, 0.9));
    }

    #[test]
    fn rating_clamp() {
        assert_eq!(TrustRating::clamped(0.0).unwrap().value(), RATING_CLAMP);
        assert_eq!(
            TrustRating::clamped(1.0).unwrap().value(),
            1.0 - RATING_CLAMP
        );
        assert_eq!(TrustRating::clamped(0.37).unwrap().value(), 0.37);
        assert!(TrustRating::clamped(-0.01).is_err());
        assert!(TrustRating::new(0.0).is_err());
        assert!(TrustRating::new(1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(TrustParams::new(1.0, 1.0, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(TrustParams::new(0.0, 1.0, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(TrustParams::new(1.0, 1.0, 1.0, 1.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn variance_bound_shrinks_along_direct_trajectories() {
        // The deviation bound var <= 1/(4(alpha+beta+1)) strictly
        // decreases whenever experience grows, and the variance itself
        // becomes monotone decreasing once experience dominates the
        // prior; together these drive reports onto the mean in the limit.
        let params = TrustParams::new(1.0, 1.0, 1.3, 0.7, 0.0, 0.0).unwrap();
        let obs = PerformanceObservation::new(0.85).unwrap();
        let mut e = pair(0.4, 3.0);
        let mut bound = 0.25 / (e.alpha() + e.beta() + 1.0);
        let mut vars = Vec::new();
        for _ in 0..300 {
            e = e.direct_update(&params, &obs);
            let b = 0.25 / (e.alpha() + e.beta() + 1.0);
            assert!(b < bound);
            bound = b;
            vars.push(e.variance());
        }
        // Tail of the variance sequence is strictly decreasing.
        for w in vars[50..].windows(2) {
            assert!(w[1] < w[0], "variance not shrinking: {} -> {}", w[0], w[1]);
        }
        assert!(vars.last().unwrap() < &1e-3);
    }

    proptest! {
        #[test]
        fn updates_never_decrease_experience(
            a in 0.05f64..50.0, b in 0.05f64..50.0,
            s in 0.01f64..10.0, f in 0.01f64..10.0,
            sh in 0.0f64..10.0, fh in 0.0f64..10.0,
            p in 0.0f64..=1.0,
            own in 0.001f64..0.999, peer in 0.001f64..0.999, tp in 0.001f64..0.999,
        ) {
            let params = TrustParams { alpha0: a, beta0: b, s, f, s_hat: sh, f_hat: fh };
            let e = pair(a, b);
            let d = e.direct_update(&params, &PerformanceObservation::new(p).unwrap());
            prop_assert!(d.alpha() >= e.alpha());
            prop_assert!(d.beta() >= e.beta());

            let i = e.indirect_update(&params, rating(own), rating(peer), rating(tp));
            prop_assert!(i.alpha() >= e.alpha());
            prop_assert!(i.beta() >= e.beta());
            // Exclusive channel: alpha xor beta xor neither, never both.
            prop_assert!(i.alpha() == e.alpha() || i.beta() == e.beta());
        }

        #[test]
        fn direct_update_moves_trust_toward_outcome(
            a in 0.05f64..50.0, b in 0.05f64..50.0,
            s in 0.01f64..10.0, f in 0.01f64..10.0,
        ) {
            let params = TrustParams { alpha0: a, beta0: b, s, f, s_hat: 0.0, f_hat: 0.0 };
            let e = pair(a, b);
            let up = e.direct_update(&params, &PerformanceObservation::new(1.0).unwrap());
            prop_assert!(up.expected_trust() > e.expected_trust());
            let down = e.direct_update(&params, &PerformanceObservation::new(0.0).unwrap());
            prop_assert!(down.expected_trust() < e.expected_trust());
        }
    }
}
