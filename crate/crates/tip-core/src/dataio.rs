//! Session-log file formats and the synthetic experiment generator.
//!
//! A dataset records a two-human two-robot experiment: per session one
//! robot is assigned to each human, both robots' correct counts are
//! logged, and six trust ratings are reported (each human on each
//! robot, plus each human on the other human). Session 0 carries only
//! the initial ratings. The CSV schema is fixed:
//!
//! `session,robot_x,robot_y,correct_A,correct_B,t_x_A,t_x_B,t_y_A,t_y_B,t_x_y,t_y_x`
//!
//! Ratings are written with six decimals; an empty cell is a missing
//! rating. Session 0 leaves assignment and correct counts empty.

use crate::error::{Error, Result};
use crate::inference::{AgentHistory, SessionKind};
use crate::special::sample_beta;
use crate::trust::{PerformanceObservation, TrustParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

pub const CSV_HEADER: &str = "session,robot_x,robot_y,correct_A,correct_B,t_x_A,t_x_B,t_y_A,t_y_B,t_x_y,t_y_x";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Robot {
    A,
    B,
}

impl Robot {
    pub fn other(self) -> Robot {
        match self {
            Robot::A => Robot::B,
            Robot::B => Robot::A,
        }
    }
}

impl std::fmt::Display for Robot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Robot::A => "A",
            Robot::B => "B",
        })
    }
}

impl std::str::FromStr for Robot {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Robot::A),
            "B" => Ok(Robot::B),
            other => Err(Error::config(format!("unknown robot '{other}', expected A or B"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Human {
    X,
    Y,
}

impl Human {
    pub fn other(self) -> Human {
        match self {
            Human::X => Human::Y,
            Human::Y => Human::X,
        }
    }
}

impl std::fmt::Display for Human {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Human::X => "x",
            Human::Y => "y",
        })
    }
}

impl std::str::FromStr for Human {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Human::X),
            "y" => Ok(Human::Y),
            other => Err(Error::config(format!("unknown agent '{other}', expected x or y"))),
        }
    }
}

/// Index into the six-rating array of a session row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingSlot {
    XinA = 0,
    XinB = 1,
    YinA = 2,
    YinB = 3,
    XinY = 4,
    YinX = 5,
}

pub fn rating_slot(human: Human, robot: Robot) -> RatingSlot {
    match (human, robot) {
        (Human::X, Robot::A) => RatingSlot::XinA,
        (Human::X, Robot::B) => RatingSlot::XinB,
        (Human::Y, Robot::A) => RatingSlot::YinA,
        (Human::Y, Robot::B) => RatingSlot::YinB,
    }
}

pub fn peer_slot(human: Human) -> RatingSlot {
    match human {
        Human::X => RatingSlot::XinY,
        Human::Y => RatingSlot::YinX,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRow {
    pub session: usize,
    /// (x's robot, y's robot); absent only at session 0.
    pub assignment: Option<(Robot, Robot)>,
    pub correct_a: Option<u32>,
    pub correct_b: Option<u32>,
    /// t_x_A, t_x_B, t_y_A, t_y_B, t_x_y, t_y_x.
    pub ratings: [Option<f64>; 6],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentDataset {
    pub tasks_per_session: u32,
    /// Rows 0..=K in session order.
    pub rows: Vec<SessionRow>,
}

impl ExperimentDataset {
    pub fn session_count(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn rating(&self, session: usize, slot: RatingSlot) -> Option<f64> {
        self.rows[session].ratings[slot as usize]
    }

    /// Extracts one (human, robot) pair's view as an inference history.
    pub fn agent_history(&self, human: Human, robot: Robot) -> Result<AgentHistory> {
        let own = rating_slot(human, robot);
        let peer_on_robot = rating_slot(human.other(), robot);
        let trust_in_peer = peer_slot(human);

        let ratings: Vec<Option<f64>> = self.rows.iter().map(|r| r.ratings[own as usize]).collect();
        let mut sessions = Vec::with_capacity(self.session_count());
        for row in &self.rows[1..] {
            let (rx, ry) = row.assignment.expect("validated: assignment present after session 0");
            let own_robot = match human {
                Human::X => rx,
                Human::Y => ry,
            };
            if own_robot == robot {
                let correct = match robot {
                    Robot::A => row.correct_a,
                    Robot::B => row.correct_b,
                }
                .expect("validated: correct counts present after session 0");
                let p = f64::from(correct) / f64::from(self.tasks_per_session);
                sessions.push(SessionKind::Direct(PerformanceObservation::new(p)?));
            } else {
                sessions.push(SessionKind::Indirect {
                    peer_trust: row.ratings[peer_on_robot as usize],
                    trust_in_peer: row.ratings[trust_in_peer as usize],
                });
            }
        }
        AgentHistory::new(ratings, sessions)
    }

    fn validate(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            let line = i + 2; // header is line 1
            if row.session != i {
                return Err(Error::parse(
                    line,
                    format!("expected session {i}, found {}", row.session),
                ));
            }
            if i == 0 {
                if row.assignment.is_some() || row.correct_a.is_some() || row.correct_b.is_some() {
                    return Err(Error::parse(
                        line,
                        "session 0 must leave assignment and correct counts empty",
                    ));
                }
                if row.ratings.iter().any(Option::is_none) {
                    return Err(Error::parse(line, "session 0 must carry all six initial ratings"));
                }
            } else {
                let (rx, ry) = row.assignment.ok_or_else(|| {
                    Error::parse(line, "sessions after 0 require a robot assignment")
                })?;
                if rx == ry {
                    return Err(Error::parse(
                        line,
                        "assignment must pair each human with a different robot",
                    ));
                }
                for (name, v) in [("correct_A", row.correct_a), ("correct_B", row.correct_b)] {
                    let v = v.ok_or_else(|| {
                        Error::parse(line, format!("sessions after 0 require {name}"))
                    })?;
                    if v > self.tasks_per_session {
                        return Err(Error::parse(
                            line,
                            format!("{name} = {v} exceeds tasks per session ({})", self.tasks_per_session),
                        ));
                    }
                }
            }
            for r in row.ratings.iter().flatten() {
                if !(0.0..=1.0).contains(r) {
                    return Err(Error::parse(line, format!("rating {r} outside [0,1]")));
                }
            }
        }
        Ok(())
    }
}

fn parse_cell<T: std::str::FromStr>(cell: &str, line: usize, name: &str) -> Result<Option<T>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<T>()
        .map(Some)
        .map_err(|_| Error::parse(line, format!("invalid {name}: '{cell}'")))
}

/// Parses a dataset from CSV. `tasks_per_session` bounds the correct
/// counts and converts them to performance fractions downstream.
pub fn parse_dataset<R: BufRead>(reader: R, tasks_per_session: u32) -> Result<ExperimentDataset> {
    if tasks_per_session == 0 {
        return Err(Error::config("tasks per session must be positive"));
    }
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty file"))?;
    let header = header?;
    if header.trim_end() != CSV_HEADER {
        return Err(Error::parse(1, format!("bad header: '{header}'")));
    }

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 11 {
            return Err(Error::parse(
                line_no,
                format!("expected 11 columns, found {}", cells.len()),
            ));
        }
        let session: usize = cells[0]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("invalid session: '{}'", cells[0])))?;
        let robot_x: Option<Robot> = parse_cell(cells[1], line_no, "robot_x")?;
        let robot_y: Option<Robot> = parse_cell(cells[2], line_no, "robot_y")?;
        let assignment = match (robot_x, robot_y) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(Error::parse(line_no, "robot_x and robot_y must both be set or both empty")),
        };
        let correct_a = parse_cell(cells[3], line_no, "correct_A")?;
        let correct_b = parse_cell(cells[4], line_no, "correct_B")?;
        let mut ratings = [None; 6];
        for (slot, cell) in cells[5..].iter().enumerate() {
            ratings[slot] = parse_cell(cell, line_no, "rating")?;
        }
        rows.push(SessionRow {
            session,
            assignment,
            correct_a,
            correct_b,
            ratings,
        });
    }
    let ds = ExperimentDataset {
        tasks_per_session,
        rows,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn parse_dataset_file(path: &Path, tasks_per_session: u32) -> Result<ExperimentDataset> {
    let file = std::fs::File::open(path)?;
    parse_dataset(std::io::BufReader::new(file), tasks_per_session)
}

fn fmt_opt_rating(r: Option<f64>) -> String {
    r.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// Writes the canonical CSV form: six-decimal ratings, empty cells for
/// missing values, rows in session order.
pub fn write_dataset<W: Write>(ds: &ExperimentDataset, mut w: W) -> Result<()> {
    ds.validate().map_err(|e| match e {
        Error::Parse { msg, .. } => Error::misuse(format!("dataset invalid: {msg}")),
        other => other,
    })?;
    writeln!(w, "{CSV_HEADER}")?;
    for row in &ds.rows {
        let (rx, ry) = match row.assignment {
            Some((a, b)) => (a.to_string(), b.to_string()),
            None => (String::new(), String::new()),
        };
        writeln!(
            w,
            "{},{},{},{},{},{}",
            row.session,
            rx,
            ry,
            row.correct_a.map(|v| v.to_string()).unwrap_or_default(),
            row.correct_b.map(|v| v.to_string()).unwrap_or_default(),
            row.ratings.map(fmt_opt_rating).join(","),
        )?;
    }
    Ok(())
}

pub fn write_dataset_file(ds: &ExperimentDataset, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_dataset(ds, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// How the generator produces the human-on-human trust ratings: hold
/// them at the configured constants, or draw around the constants from
/// a Beta with the given concentration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PeerTrustMode {
    Constant,
    Drift { concentration: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssignmentMode {
    /// Uniform random bijection each session.
    Randomized,
    /// x always works with A, y with B.
    Fixed,
}

/// Configuration for the synthetic two-human two-robot experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub sessions: u32,
    pub tasks_per_session: u32,
    pub reliability_a: f64,
    pub reliability_b: f64,
    /// True parameters per (human, robot) pair.
    pub params_x_a: TrustParams,
    pub params_x_b: TrustParams,
    pub params_y_a: TrustParams,
    pub params_y_b: TrustParams,
    pub peer_trust_x_in_y: f64,
    pub peer_trust_y_in_x: f64,
    pub peer_mode: PeerTrustMode,
    pub assignment: AssignmentMode,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sessions == 0 || self.tasks_per_session == 0 {
            return Err(Error::config("sessions and tasks per session must be positive"));
        }
        for (name, r) in [
            ("reliability_a", self.reliability_a),
            ("reliability_b", self.reliability_b),
        ] {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::config(format!(
                    "{name} must lie strictly inside (0,1), got {r}"
                )));
            }
        }
        for (name, t) in [
            ("peer_trust_x_in_y", self.peer_trust_x_in_y),
            ("peer_trust_y_in_x", self.peer_trust_y_in_x),
        ] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::config(format!("{name} must lie in (0,1], got {t}")));
            }
        }
        for p in [&self.params_x_a, &self.params_x_b, &self.params_y_a, &self.params_y_b] {
            p.validate()?;
        }
        Ok(())
    }

    /// Paper-protocol defaults: 15 sessions of 10 tasks, reliabilities
    /// 0.9 and 0.6, random assignment.
    pub fn protocol_defaults(seed: u64) -> Self {
        let params = TrustParams::new(2.0, 2.0, 2.0, 2.0, 1.5, 1.0).unwrap();
        Self {
            sessions: 15,
            tasks_per_session: 10,
            reliability_a: 0.9,
            reliability_b: 0.6,
            params_x_a: params,
            params_x_b: params,
            params_y_a: params,
            params_y_b: params,
            peer_trust_x_in_y: 0.85,
            peer_trust_y_in_x: 0.85,
            peer_mode: PeerTrustMode::Constant,
            assignment: AssignmentMode::Randomized,
            seed,
        }
    }
}

/// Runs the session protocol forward: random assignment, binomial robot
/// performance, a direct update plus sampled report for the paired
/// human, and the indirect update for the teammate who hears the report.
/// Deterministic per seed.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<ExperimentDataset> {
    cfg.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);

    let mut exp = BTreeMap::new();
    exp.insert((Human::X, Robot::A), cfg.params_x_a.prior());
    exp.insert((Human::X, Robot::B), cfg.params_x_b.prior());
    exp.insert((Human::Y, Robot::A), cfg.params_y_a.prior());
    exp.insert((Human::Y, Robot::B), cfg.params_y_b.prior());
    let params = |human: Human, robot: Robot| match (human, robot) {
        (Human::X, Robot::A) => &cfg.params_x_a,
        (Human::X, Robot::B) => &cfg.params_x_b,
        (Human::Y, Robot::A) => &cfg.params_y_a,
        (Human::Y, Robot::B) => &cfg.params_y_b,
    };

    let draw_peer = |rng: &mut ChaCha12Rng, mean: f64| -> f64 {
        match cfg.peer_mode {
            PeerTrustMode::Constant => mean,
            PeerTrustMode::Drift { concentration } => {
                sample_beta(mean * concentration, (1.0 - mean) * concentration, rng)
            }
        }
    };

    // Session 0: initial ratings drawn from the priors.
    let mut rows = Vec::with_capacity(cfg.sessions as usize + 1);
    let mut ratings0 = [None; 6];
    for (human, robot) in [
        (Human::X, Robot::A),
        (Human::X, Robot::B),
        (Human::Y, Robot::A),
        (Human::Y, Robot::B),
    ] {
        let e = exp[&(human, robot)];
        ratings0[rating_slot(human, robot) as usize] = Some(e.sample(&mut rng).value());
    }
    ratings0[RatingSlot::XinY as usize] = Some(draw_peer(&mut rng, cfg.peer_trust_x_in_y));
    ratings0[RatingSlot::YinX as usize] = Some(draw_peer(&mut rng, cfg.peer_trust_y_in_x));
    let mut prev_ratings = ratings0;
    rows.push(SessionRow {
        session: 0,
        assignment: None,
        correct_a: None,
        correct_b: None,
        ratings: ratings0,
    });

    for session in 1..=cfg.sessions as usize {
        let robot_x = match cfg.assignment {
            AssignmentMode::Fixed => Robot::A,
            AssignmentMode::Randomized => {
                if rng.gen_bool(0.5) {
                    Robot::A
                } else {
                    Robot::B
                }
            }
        };
        let robot_y = robot_x.other();

        let correct_a = Binomial::new(u64::from(cfg.tasks_per_session), cfg.reliability_a)
            .expect("validated reliability")
            .sample(&mut rng) as u32;
        let correct_b = Binomial::new(u64::from(cfg.tasks_per_session), cfg.reliability_b)
            .expect("validated reliability")
            .sample(&mut rng) as u32;
        let perf = |robot: Robot| {
            let correct = match robot {
                Robot::A => correct_a,
                Robot::B => correct_b,
            };
            PerformanceObservation::new(f64::from(correct) / f64::from(cfg.tasks_per_session))
        };

        let peer_x_in_y = draw_peer(&mut rng, cfg.peer_trust_x_in_y);
        let peer_y_in_x = draw_peer(&mut rng, cfg.peer_trust_y_in_x);

        let mut ratings = [None; 6];
        ratings[RatingSlot::XinY as usize] = Some(peer_x_in_y);
        ratings[RatingSlot::YinX as usize] = Some(peer_y_in_x);

        // Direct updates and reports, x first.
        for (human, robot) in [(Human::X, robot_x), (Human::Y, robot_y)] {
            let e = exp.get_mut(&(human, robot)).unwrap();
            *e = e.direct_update(params(human, robot), &perf(robot)?);
            ratings[rating_slot(human, robot) as usize] = Some(e.sample(&mut rng).value());
        }

        // Indirect updates from the communicated reports, then each
        // human realizes a rating for the robot they did not operate.
        for (human, robot) in [(Human::X, robot_y), (Human::Y, robot_x)] {
            let peer_report = ratings[rating_slot(human.other(), robot) as usize]
                .expect("direct report recorded above");
            let own_prev = prev_ratings[rating_slot(human, robot) as usize]
                .expect("ratings complete in generated data");
            let discount = match human {
                Human::X => peer_x_in_y,
                Human::Y => peer_y_in_x,
            };
            let clamp01 = |v: f64| v.clamp(1e-12, 1.0 - 1e-12);
            let e = exp.get_mut(&(human, robot)).unwrap();
            *e = e.indirect_update(
                params(human, robot),
                crate::trust::TrustRating::new(clamp01(own_prev))?,
                crate::trust::TrustRating::new(clamp01(peer_report))?,
                crate::trust::TrustRating::new(clamp01(discount))?,
            );
            ratings[rating_slot(human, robot) as usize] = Some(e.sample(&mut rng).value());
        }

        prev_ratings = ratings;
        rows.push(SessionRow {
            session,
            assignment: Some((robot_x, robot_y)),
            correct_a: Some(correct_a),
            correct_b: Some(correct_b),
            ratings,
        });
    }

    Ok(ExperimentDataset {
        tasks_per_session: cfg.tasks_per_session,
        rows,
    })
}

/// Named trust parameters per (human, robot) pair, file format
/// `{ "pairs": { "x:A": { "alpha0": ..., ... }, ... } }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub pairs: BTreeMap<String, TrustParams>,
}

impl ParamSet {
    pub fn get(&self, human: Human, robot: Robot) -> Result<&TrustParams> {
        let key = format!("{human}:{robot}");
        self.pairs
            .get(&key)
            .ok_or_else(|| Error::config(format!("missing parameter pair '{key}'")))
    }

    /// All four pairs set to the same parameters.
    pub fn uniform(params: TrustParams) -> Self {
        let mut pairs = BTreeMap::new();
        for key in ["x:A", "x:B", "y:A", "y:B"] {
            pairs.insert(key.to_string(), params);
        }
        Self { pairs }
    }
}

pub fn load_params(path: &Path) -> Result<ParamSet> {
    let text = std::fs::read_to_string(path)?;
    let set: ParamSet = serde_json::from_str(&text)?;
    for (key, params) in &set.pairs {
        params
            .validate()
            .map_err(|e| Error::config(format!("pairs.{key}: {e}")))?;
    }
    Ok(set)
}

pub fn save_params(set: &ParamSet, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(set)?;
    std::fs::write(path, text)?;
    Ok(())
}
