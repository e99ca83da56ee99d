//! Monte-Carlo engine for the alternating-turn schedule.
//!
//! Per block, x has m direct interactions with the robot and y has n.
//! Every direct interaction updates the actor's experience with the
//! robot's constant (r, 1−r) performance, the actor then realizes and
//! communicates a trust report, and the other agent immediately applies
//! the indirect update with that report before realizing a report of
//! its own. Replica streams are split off the base seed so runs are
//! individually reproducible and mutually independent.

use crate::equilibrium::ScheduleSpec;
use crate::error::{Error, Result};
use crate::trust::{ExperiencePair, PerformanceObservation, TrustParams, TrustRating};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// How agents turn their experience state into the trust value they
/// communicate: a fresh Beta draw (the model's reported rating), or the
/// distribution mean for noise-free checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CommunicationMode {
    ReportedSample,
    ExpectedValue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub sched: ScheduleSpec,
    pub params_x: TrustParams,
    pub params_y: TrustParams,
    /// Number of full (m+n)-interaction blocks.
    pub turns: u32,
    pub replicas: u32,
    pub seed: u64,
    pub communication: CommunicationMode,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.turns == 0 || self.replicas == 0 {
            return Err(Error::misuse("turns and replicas must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Actor {
    X,
    Y,
}

impl std::fmt::Display for Actor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Actor::X => "x",
            Actor::Y => "y",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InteractionKind {
    Direct,
    Indirect,
}

impl std::fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InteractionKind::Direct => "direct",
            InteractionKind::Indirect => "indirect",
        })
    }
}

/// One event in a trajectory: experience states after the event and the
/// trust value the acting agent realized/reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub event_index: usize,
    pub block: u32,
    pub actor: Actor,
    pub kind: InteractionKind,
    pub exp_x: ExperiencePair,
    pub exp_y: ExperiencePair,
    pub reported_trust: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    /// Chronological reported-trust series of one actor.
    pub fn reports_of(&self, actor: Actor) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.actor == actor)
            .map(|r| r.reported_trust)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "event_index,block,actor,kind,alpha_x,beta_x,alpha_y,beta_y,reported_trust"
        )?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{:.9},{:.9},{:.9},{:.9},{:.9}",
                r.event_index,
                r.block,
                r.actor,
                r.kind,
                r.exp_x.alpha(),
                r.exp_x.beta(),
                r.exp_y.alpha(),
                r.exp_y.beta(),
                r.reported_trust
            )?;
        }
        Ok(())
    }
}

struct AgentState {
    exp: ExperiencePair,
    last_report: TrustRating,
}

struct Engine {
    rng: ChaCha12Rng,
    mode: CommunicationMode,
    x: AgentState,
    y: AgentState,
}

impl Engine {
    fn new(cfg: &SimConfig, replica_index: u32) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        rng.set_stream(u64::from(replica_index));
        let mut engine = Engine {
            rng,
            mode: cfg.communication,
            x: AgentState {
                exp: cfg.params_x.prior(),
                last_report: TrustRating::new_unchecked(0.5),
            },
            y: AgentState {
                exp: cfg.params_y.prior(),
                last_report: TrustRating::new_unchecked(0.5),
            },
        };
        // Initial realizations before any interaction.
        engine.x.last_report = engine.realize(cfg.params_x.prior());
        engine.y.last_report = engine.realize(cfg.params_y.prior());
        engine
    }

    fn realize(&mut self, exp: ExperiencePair) -> TrustRating {
        match self.mode {
            CommunicationMode::ReportedSample => exp.sample(&mut self.rng),
            CommunicationMode::ExpectedValue => TrustRating::new_unchecked(exp.expected_trust()),
        }
    }

    /// One direct interaction of `actor` plus the paired indirect update
    /// of the other agent; invokes `emit` for both events.
    fn interaction<F: FnMut(Actor, InteractionKind, ExperiencePair, ExperiencePair, f64)>(
        &mut self,
        cfg: &SimConfig,
        actor: Actor,
        emit: &mut F,
    ) {
        let obs = PerformanceObservation::new(cfg.sched.r).expect("reliability in (0,1)");
        let (params_act, params_other, trust_in_actor) = match actor {
            Actor::X => (&cfg.params_x, &cfg.params_y, cfg.sched.trust_y_in_x),
            Actor::Y => (&cfg.params_y, &cfg.params_x, cfg.sched.trust_x_in_y),
        };

        // Direct update and report by the acting agent.
        let (acting, other, other_actor) = match actor {
            Actor::X => (&mut self.x, &mut self.y, Actor::Y),
            Actor::Y => (&mut self.y, &mut self.x, Actor::X),
        };
        acting.exp = acting.exp.direct_update(params_act, &obs);
        let report = match self.mode {
            CommunicationMode::ReportedSample => acting.exp.sample(&mut self.rng),
            CommunicationMode::ExpectedValue => {
                TrustRating::new_unchecked(acting.exp.expected_trust())
            }
        };
        acting.last_report = report;
        let (ex, ey) = match actor {
            Actor::X => (acting.exp, other.exp),
            Actor::Y => (other.exp, acting.exp),
        };
        emit(actor, InteractionKind::Direct, ex, ey, report.value());

        // Paired indirect update by the other agent, who then realizes
        // its own trust; that value carries forward as the comparison
        // point for the next report it hears.
        let trust_in_peer = TrustRating::new_unchecked(trust_in_actor.clamp(1e-12, 1.0 - 1e-12));
        other.exp = other
            .exp
            .indirect_update(params_other, other.last_report, report, trust_in_peer);
        let other_report = match self.mode {
            CommunicationMode::ReportedSample => other.exp.sample(&mut self.rng),
            CommunicationMode::ExpectedValue => {
                TrustRating::new_unchecked(other.exp.expected_trust())
            }
        };
        other.last_report = other_report;
        let (ex, ey) = match actor {
            Actor::X => (acting.exp, other.exp),
            Actor::Y => (other.exp, acting.exp),
        };
        emit(
            other_actor,
            InteractionKind::Indirect,
            ex,
            ey,
            other_report.value(),
        );
    }
}

fn run_with<F: FnMut(Actor, InteractionKind, ExperiencePair, ExperiencePair, f64)>(
    cfg: &SimConfig,
    replica_index: u32,
    mut emit: F,
) {
    let mut engine = Engine::new(cfg, replica_index);
    for _block in 0..cfg.turns {
        for _ in 0..cfg.sched.m {
            engine.interaction(cfg, Actor::X, &mut emit);
        }
        for _ in 0..cfg.sched.n {
            engine.interaction(cfg, Actor::Y, &mut emit);
        }
    }
}

/// Runs one replica and records the full event trajectory.
/// Deterministic for a fixed (seed, replica_index).
pub fn run_schedule(cfg: &SimConfig, replica_index: u32) -> Trajectory {
    let per_block = (cfg.sched.m + cfg.sched.n) as usize * 2;
    let mut records = Vec::with_capacity(per_block * cfg.turns as usize);
    let mut event_index = 0usize;
    let mut block = 0u32;
    run_with(cfg, replica_index, |actor, kind, exp_x, exp_y, reported| {
        records.push(TrajectoryRecord {
            event_index,
            block,
            actor,
            kind,
            exp_x,
            exp_y,
            reported_trust: reported,
        });
        event_index += 1;
        if event_index % per_block == 0 {
            block += 1;
        }
    });
    Trajectory { records }
}

/// Cross-replica summary of where trust settles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    /// Mean over replicas of the tail-window (last 5% of reports) mean.
    pub mean_final_x: f64,
    pub mean_final_y: f64,
    /// Cross-replica standard deviation of the per-replica tail means.
    pub sd_final_x: f64,
    pub sd_final_y: f64,
    /// |tail-window mean − previous-window mean|, averaged over replicas.
    pub drift_x: f64,
    pub drift_y: f64,
    pub replicas: u32,
}

fn tail_stats(reports: &[f64]) -> (f64, f64) {
    let len = reports.len();
    let window = (len / 20).max(1);
    let tail = &reports[len - window..];
    let prev = &reports[len.saturating_sub(2 * window)..len - window];
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let prev_mean = if prev.is_empty() {
        tail_mean
    } else {
        prev.iter().sum::<f64>() / prev.len() as f64
    };
    (tail_mean, (tail_mean - prev_mean).abs())
}

/// Runs all replicas and aggregates final-window trust statistics.
/// Deterministic for a fixed seed; replicas are reduced in index order.
pub fn monte_carlo_limit(cfg: &SimConfig) -> Result<McSummary> {
    cfg.validate()?;
    let mut tails_x = Vec::with_capacity(cfg.replicas as usize);
    let mut tails_y = Vec::with_capacity(cfg.replicas as usize);
    let mut drift_x = 0.0;
    let mut drift_y = 0.0;
    let per_actor = (cfg.sched.m + cfg.sched.n) as usize * cfg.turns as usize;
    for replica in 0..cfg.replicas {
        let mut reports_x = Vec::with_capacity(per_actor);
        let mut reports_y = Vec::with_capacity(per_actor);
        run_with(cfg, replica, |actor, _, _, _, reported| match actor {
            Actor::X => reports_x.push(reported),
            Actor::Y => reports_y.push(reported),
        });
        let (tx, dx) = tail_stats(&reports_x);
        let (ty, dy) = tail_stats(&reports_y);
        tails_x.push(tx);
        tails_y.push(ty);
        drift_x += dx;
        drift_y += dy;
    }
    let nrep = cfg.replicas as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sd = |v: &[f64], m: f64| {
        if v.len() < 2 {
            0.0
        } else {
            (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
        }
    };
    let mx = mean(&tails_x);
    let my = mean(&tails_y);
    Ok(McSummary {
        mean_final_x: mx,
        mean_final_y: my,
        sd_final_x: sd(&tails_x, mx),
        sd_final_y: sd(&tails_y, my),
        drift_x: drift_x / nrep,
        drift_y: drift_y / nrep,
        replicas: cfg.replicas,
    })
}

/// Rolling statistics over each agent's reported-trust series plus the
/// per-event |t_x − t_y| gap built from the latest report of each agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub rolling_mean_x: Vec<f64>,
    pub rolling_var_x: Vec<f64>,
    pub rolling_mean_y: Vec<f64>,
    pub rolling_var_y: Vec<f64>,
    pub trust_gap: Vec<f64>,
}

fn rolling(series: &[f64], window: usize) -> (Vec<f64>, Vec<f64>) {
    let mut means = Vec::with_capacity(series.len() + 1 - window);
    let mut vars = Vec::with_capacity(series.len() + 1 - window);
    for chunk in series.windows(window) {
        // Shift by the first element so a constant window yields an
        // exact zero variance.
        let pivot = chunk[0];
        let m = pivot + chunk.iter().map(|x| x - pivot).sum::<f64>() / window as f64;
        let v = chunk.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / window as f64;
        means.push(m);
        vars.push(v);
    }
    (means, vars)
}

pub fn convergence_diagnostics(traj: &Trajectory, window: usize) -> Result<Diagnostics> {
    let reports_x = traj.reports_of(Actor::X);
    let reports_y = traj.reports_of(Actor::Y);
    if window == 0 || window > reports_x.len() || window > reports_y.len() {
        return Err(Error::misuse(format!(
            "window {window} exceeds per-agent report count ({}, {})",
            reports_x.len(),
            reports_y.len()
        )));
    }
    let (rolling_mean_x, rolling_var_x) = rolling(&reports_x, window);
    let (rolling_mean_y, rolling_var_y) = rolling(&reports_y, window);

    let mut latest_x = f64::NAN;
    let mut latest_y = f64::NAN;
    let mut trust_gap = Vec::with_capacity(traj.records.len());
    for r in &traj.records {
        match r.actor {
            Actor::X => latest_x = r.reported_trust,
            Actor::Y => latest_y = r.reported_trust,
        }
        if latest_x.is_finite() && latest_y.is_finite() {
            trust_gap.push((latest_x - latest_y).abs());
        }
    }
    Ok(Diagnostics {
        rolling_mean_x,
        rolling_var_x,
        rolling_mean_y,
        rolling_var_y,
        trust_gap,
    })
}
