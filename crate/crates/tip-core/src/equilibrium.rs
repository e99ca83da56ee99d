//! Long-run trust equilibrium under an alternating interaction schedule.
//!
//! Two humans take turns working with one robot: per block, x has m
//! direct interactions and y has n, each followed by a trust report to
//! the other agent. With constant robot reliability the per-block
//! experience gains are constant in the limit, and the limiting trust
//! pair (t_x, t_y) solves a two-equation rational system. Substituting
//! z = 1 − t_y turns it into a polynomial system solved here by a 2×2
//! Newton iteration, with an exhaustive grid search as an independent
//! oracle.

use crate::error::{Error, Result};
use crate::trust::TrustParams;
use serde::{Deserialize, Serialize};

/// Iterates are kept strictly inside the unit square.
const COORD_MIN: f64 = 1e-9;
const COORD_MAX: f64 = 1.0 - 1e-9;

/// Alternating-schedule description: x has `m` direct interactions per
/// block, y has `n`, the robot succeeds with constant reliability `r`,
/// and the humans hold constant trust in each other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub m: u32,
    pub n: u32,
    pub r: f64,
    pub trust_x_in_y: f64,
    pub trust_y_in_x: f64,
}

impl ScheduleSpec {
    pub fn new(m: u32, n: u32, r: f64, trust_x_in_y: f64, trust_y_in_x: f64) -> Result<Self> {
        if m == 0 && n == 0 {
            return Err(Error::misuse("schedule requires m > 0 or n > 0"));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::domain(format!(
                "reliability must lie strictly inside (0,1), got {r}"
            )));
        }
        for (name, t) in [("trust_x_in_y", trust_x_in_y), ("trust_y_in_x", trust_y_in_x)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::domain(format!("{name} must lie in (0,1], got {t}")));
            }
        }
        Ok(Self {
            m,
            n,
            r,
            trust_x_in_y,
            trust_y_in_x,
        })
    }
}

/// Per-block expected experience gains in the long run, for both agents.
/// Direct gains scale with the number of own interactions and the
/// robot's reliability; indirect gains scale with the number of the
/// teammate's interactions and the trust held in the teammate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongRunGains {
    pub direct_pos_x: f64,
    pub direct_neg_x: f64,
    pub indirect_pos_x: f64,
    pub indirect_neg_x: f64,
    pub direct_pos_y: f64,
    pub direct_neg_y: f64,
    pub indirect_pos_y: f64,
    pub indirect_neg_y: f64,
}

/// Builds the eight per-block aggregates from unit gains and schedule:
/// direct_pos_x = m·s_x·r, direct_neg_x = m·f_x·(1−r),
/// indirect_pos_x = n·t_xy·s_hat_x, indirect_neg_x = n·t_xy·f_hat_x,
/// and the mirror for y with the roles of m and n swapped.
pub fn long_run_gains(
    params_x: &TrustParams,
    params_y: &TrustParams,
    sched: &ScheduleSpec,
) -> LongRunGains {
    let m = f64::from(sched.m);
    let n = f64::from(sched.n);
    let r = sched.r;
    let r_bar = 1.0 - r;
    LongRunGains {
        direct_pos_x: m * params_x.s * r,
        direct_neg_x: m * params_x.f * r_bar,
        indirect_pos_x: n * sched.trust_x_in_y * params_x.s_hat,
        indirect_neg_x: n * sched.trust_x_in_y * params_x.f_hat,
        direct_pos_y: n * params_y.s * r,
        direct_neg_y: n * params_y.f * r_bar,
        indirect_pos_y: m * sched.trust_y_in_x * params_y.s_hat,
        indirect_neg_y: m * sched.trust_y_in_x * params_y.f_hat,
    }
}

/// Which branch of the equilibrium system applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumCase {
    /// x's per-interaction direct trust gain dominates: t_x >= t_y.
    XDominant,
    /// y's dominates: t_y >= t_x.
    YDominant,
    /// n = 0: only x interacts directly; closed form applies.
    ClosedFormNZero,
    /// m = 0: only y interacts directly; closed form applies.
    ClosedFormMZero,
}

impl std::fmt::Display for EquilibriumCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EquilibriumCase::XDominant => "x-dominant",
            EquilibriumCase::YDominant => "y-dominant",
            EquilibriumCase::ClosedFormNZero => "closed-form-n0",
            EquilibriumCase::ClosedFormMZero => "closed-form-m0",
        };
        f.write_str(s)
    }
}

/// XDominant iff direct_pos_x·direct_neg_y >= direct_neg_x·direct_pos_y;
/// ties resolve to XDominant (both branches then agree).
pub fn select_case(g: &LongRunGains) -> EquilibriumCase {
    if g.direct_pos_x * g.direct_neg_y >= g.direct_neg_x * g.direct_pos_y {
        EquilibriumCase::XDominant
    } else {
        EquilibriumCase::YDominant
    }
}

/// A solved long-run trust pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub t_x: f64,
    pub t_y: f64,
    pub case_used: EquilibriumCase,
    /// Max absolute defect of the two governing equations at (t_x, t_y).
    pub residual: f64,
    /// True when Newton failed and the grid oracle supplied the answer.
    pub fell_back_to_grid: bool,
    /// Additional distinct roots surfaced by the grid scan, if any.
    pub alternate_roots: Vec<(f64, f64)>,
}

/// Coefficients of one polynomial branch in the (x, z) variables, where
/// x is the dominant agent's trust and z = 1 − (other agent's trust):
///   f1(x,z) = ind_neg_d·x² + ind_neg_d·z·x + (neg_d + pos_d − ind_neg_d)·x − pos_d
///   f2(x,z) = ind_pos_o·z² + ind_pos_o·z·x + (pos_o + neg_o − ind_pos_o)·z − neg_o
#[derive(Debug, Clone, Copy)]
struct BranchSystem {
    pos_d: f64,
    neg_d: f64,
    ind_neg_d: f64,
    pos_o: f64,
    neg_o: f64,
    ind_pos_o: f64,
}

impl BranchSystem {
    fn for_case(g: &LongRunGains, case: EquilibriumCase) -> Self {
        match case {
            EquilibriumCase::XDominant | EquilibriumCase::ClosedFormNZero => Self {
                pos_d: g.direct_pos_x,
                neg_d: g.direct_neg_x,
                ind_neg_d: g.indirect_neg_x,
                pos_o: g.direct_pos_y,
                neg_o: g.direct_neg_y,
                ind_pos_o: g.indirect_pos_y,
            },
            EquilibriumCase::YDominant | EquilibriumCase::ClosedFormMZero => Self {
                pos_d: g.direct_pos_y,
                neg_d: g.direct_neg_y,
                ind_neg_d: g.indirect_neg_y,
                pos_o: g.direct_pos_x,
                neg_o: g.direct_neg_x,
                ind_pos_o: g.indirect_pos_x,
            },
        }
    }

    fn eval(&self, x: f64, z: f64) -> (f64, f64) {
        let f1 = self.ind_neg_d * x * x
            + self.ind_neg_d * z * x
            + (self.neg_d + self.pos_d - self.ind_neg_d) * x
            - self.pos_d;
        let f2 = self.ind_pos_o * z * z
            + self.ind_pos_o * z * x
            + (self.pos_o + self.neg_o - self.ind_pos_o) * z
            - self.neg_o;
        (f1, f2)
    }

    fn max_abs(&self, x: f64, z: f64) -> f64 {
        let (f1, f2) = self.eval(x, z);
        f1.abs().max(f2.abs())
    }

    fn jacobian(&self, x: f64, z: f64) -> [[f64; 2]; 2] {
        [
            [
                2.0 * self.ind_neg_d * x + self.ind_neg_d * z + self.neg_d + self.pos_d
                    - self.ind_neg_d,
                self.ind_neg_d * x,
            ],
            [
                self.ind_pos_o * z,
                2.0 * self.ind_pos_o * z + self.ind_pos_o * x + self.pos_o + self.neg_o
                    - self.ind_pos_o,
            ],
        ]
    }

    /// Translates a branch-space root back into (t_x, t_y).
    fn to_trust_pair(&self, case: EquilibriumCase, x: f64, z: f64) -> (f64, f64) {
        match case {
            EquilibriumCase::XDominant | EquilibriumCase::ClosedFormNZero => (x, 1.0 - z),
            EquilibriumCase::YDominant | EquilibriumCase::ClosedFormMZero => (1.0 - z, x),
        }
    }

    /// Inverse of `to_trust_pair`.
    #[cfg(test)]
    fn from_trust_pair(&self, case: EquilibriumCase, t_x: f64, t_y: f64) -> (f64, f64) {
        match case {
            EquilibriumCase::XDominant | EquilibriumCase::ClosedFormNZero => (t_x, 1.0 - t_y),
            EquilibriumCase::YDominant | EquilibriumCase::ClosedFormMZero => (t_y, 1.0 - t_x),
        }
    }

    fn scale(&self) -> f64 {
        [
            self.pos_d,
            self.neg_d,
            self.ind_neg_d,
            self.pos_o,
            self.neg_o,
            self.ind_pos_o,
        ]
        .into_iter()
        .fold(1.0f64, f64::max)
    }
}

/// Defect of the governing rational equations at a trust pair, in the
/// branch selected by `case`. Values near the boundary blow up, which
/// is what screens out spurious roots of the polynomial form.
fn rational_residual(g: &LongRunGains, case: EquilibriumCase, t_x: f64, t_y: f64) -> f64 {
    let tx = t_x.clamp(COORD_MIN, COORD_MAX);
    let ty = t_y.clamp(COORD_MIN, COORD_MAX);
    let (r1, r2) = match case {
        EquilibriumCase::XDominant | EquilibriumCase::ClosedFormNZero => (
            g.direct_pos_x * (1.0 - tx) / tx - (g.indirect_neg_x * (tx - ty) + g.direct_neg_x),
            g.direct_neg_y * ty / (1.0 - ty) - (g.indirect_pos_y * (tx - ty) + g.direct_pos_y),
        ),
        EquilibriumCase::YDominant | EquilibriumCase::ClosedFormMZero => (
            g.direct_neg_x * tx / (1.0 - tx) - (g.indirect_pos_x * (ty - tx) + g.direct_pos_x),
            g.direct_pos_y * (1.0 - ty) / ty - (g.indirect_neg_y * (ty - tx) + g.direct_neg_y),
        ),
    };
    r1.abs().max(r2.abs())
}

/// Closed-form equilibrium for degenerate schedules. With n = 0 both
/// trusts stabilize at s·r / (f·(1−r) + s·r) using x's unit gains; with
/// m = 0 the same expression with y's gains applies.
pub fn closed_form_degenerate(
    params_x: &TrustParams,
    params_y: &TrustParams,
    sched: &ScheduleSpec,
) -> Result<Equilibrium> {
    let (params, case) = if sched.n == 0 {
        (params_x, EquilibriumCase::ClosedFormNZero)
    } else if sched.m == 0 {
        (params_y, EquilibriumCase::ClosedFormMZero)
    } else {
        return Err(Error::misuse(
            "closed_form_degenerate requires m = 0 or n = 0",
        ));
    };
    let r = sched.r;
    let t = params.s * r / (params.f * (1.0 - r) + params.s * r);
    let g = long_run_gains(params_x, params_y, sched);
    Ok(Equilibrium {
        t_x: t,
        t_y: t,
        case_used: case,
        residual: rational_residual(&g, case, t, t),
        fell_back_to_grid: false,
        alternate_roots: Vec::new(),
    })
}

/// Newton iteration on the selected polynomial branch, started from
/// (0.5, 0.5) with iterates clamped to the closed unit square. Falls
/// back to the grid oracle on a singular Jacobian or non-convergence.
pub fn newton_solve(g: &LongRunGains, sched: &ScheduleSpec) -> Result<Equilibrium> {
    if sched.m == 0 || sched.n == 0 {
        return Err(Error::misuse(
            "newton_solve requires m > 0 and n > 0; use closed_form_degenerate",
        ));
    }
    let case = select_case(g);
    let sys = BranchSystem::for_case(g, case);
    let tol = 1e-13 * sys.scale();

    let mut x = 0.5;
    let mut z = 0.5;
    let mut converged = false;
    for _ in 0..200 {
        let (f1, f2) = sys.eval(x, z);
        if f1.abs().max(f2.abs()) < tol {
            converged = true;
            break;
        }
        let j = sys.jacobian(x, z);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-14 * sys.scale() * sys.scale() {
            converged = false;
            break;
        }
        x = (x - (j[1][1] * f1 - j[0][1] * f2) / det).clamp(COORD_MIN, COORD_MAX);
        z = (z - (j[0][0] * f2 - j[1][0] * f1) / det).clamp(COORD_MIN, COORD_MAX);
    }

    if converged {
        let (t_x, t_y) = sys.to_trust_pair(case, x, z);
        return Ok(Equilibrium {
            t_x,
            t_y,
            case_used: case,
            residual: rational_residual(g, case, t_x, t_y),
            fell_back_to_grid: false,
            alternate_roots: Vec::new(),
        });
    }

    let mut eq = grid_oracle(g, sched)?;
    eq.fell_back_to_grid = true;
    Ok(eq)
}

/// Exhaustive root search used to verify the Newton solver: a coarse
/// scan of the whole unit square followed by three rounds of local grid
/// shrinkage around each coarse minimum, locating roots to ~1e-6.
/// Candidates whose rational residual exceeds tolerance are spurious
/// artifacts of the polynomial substitution (boundary roots) and are
/// discarded; surviving extra roots are reported, not suppressed.
pub fn grid_oracle(g: &LongRunGains, sched: &ScheduleSpec) -> Result<Equilibrium> {
    let _ = sched;
    let case = select_case(g);
    let sys = BranchSystem::for_case(g, case);

    const POINTS: usize = 101;
    let coarse_step = 1.0 / (POINTS - 1) as f64;
    let mut values = vec![0.0f64; POINTS * POINTS];
    for i in 0..POINTS {
        for j in 0..POINTS {
            values[i * POINTS + j] = sys.max_abs(i as f64 * coarse_step, j as f64 * coarse_step);
        }
    }

    // Coarse local minima of the max-residual field (8-neighborhood).
    let mut candidates: Vec<(f64, f64, f64)> = Vec::new();
    for i in 0..POINTS {
        for j in 0..POINTS {
            let v = values[i * POINTS + j];
            let mut is_min = true;
            'outer: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= POINTS as i64 || nj >= POINTS as i64 {
                        continue;
                    }
                    if values[ni as usize * POINTS + nj as usize] < v {
                        is_min = false;
                        break 'outer;
                    }
                }
            }
            if is_min {
                candidates.push((i as f64 * coarse_step, j as f64 * coarse_step, v));
            }
        }
    }
    candidates.sort_by(|a, b| a.2.total_cmp(&b.2));
    // Plateaus produce clusters of tied minima; keep well-separated seeds.
    let mut seeds: Vec<(f64, f64)> = Vec::new();
    for &(x, z, _) in &candidates {
        if seeds
            .iter()
            .all(|&(sx, sz)| (sx - x).abs().max((sz - z).abs()) > 3.0 * coarse_step)
        {
            seeds.push((x, z));
        }
        if seeds.len() >= 8 {
            break;
        }
    }

    // Three rounds of local refinement around each seed.
    let mut roots: Vec<(f64, f64, f64)> = Vec::new();
    for &(mut cx, mut cz) in &seeds {
        let mut half = 2.0 * coarse_step;
        for _ in 0..3 {
            let (mut bx, mut bz, mut bv) = (cx, cz, f64::INFINITY);
            for i in 0..POINTS {
                for j in 0..POINTS {
                    let x = (cx - half + 2.0 * half * i as f64 / (POINTS - 1) as f64)
                        .clamp(0.0, 1.0);
                    let z = (cz - half + 2.0 * half * j as f64 / (POINTS - 1) as f64)
                        .clamp(0.0, 1.0);
                    let v = sys.max_abs(x, z);
                    if v < bv {
                        (bx, bz, bv) = (x, z, v);
                    }
                }
            }
            (cx, cz) = (bx, bz);
            half = 2.0 * (2.0 * half / (POINTS - 1) as f64);
        }
        let v = sys.max_abs(cx, cz);
        if v < 1e-4 {
            roots.push((cx, cz, v));
        }
    }

    if roots.is_empty() {
        return Err(Error::numeric(
            "no equilibrium located: no grid point drives both equations below 1e-4",
        ));
    }

    // Screen through the governing rational equations and deduplicate.
    let mut screened: Vec<(f64, f64, f64)> = Vec::new();
    for &(x, z, _) in &roots {
        let (t_x, t_y) = sys.to_trust_pair(case, x, z);
        let rres = rational_residual(g, case, t_x, t_y);
        if rres < 1e-3
            && screened
                .iter()
                .all(|&(px, py, _)| (px - t_x).abs().max((py - t_y).abs()) > 1e-4)
        {
            screened.push((t_x, t_y, rres));
        }
    }
    if screened.is_empty() {
        return Err(Error::numeric(
            "no equilibrium located: every polynomial root fails the governing equations",
        ));
    }
    screened.sort_by(|a, b| a.2.total_cmp(&b.2));
    let (t_x, t_y, residual) = screened[0];
    Ok(Equilibrium {
        t_x,
        t_y,
        case_used: case,
        residual,
        fell_back_to_grid: false,
        alternate_roots: screened[1..].iter().map(|&(a, b, _)| (a, b)).collect(),
    })
}

/// Solver entry point: degenerate schedules take the closed form, all
/// others the requested method.
pub fn solve(
    params_x: &TrustParams,
    params_y: &TrustParams,
    sched: &ScheduleSpec,
    method: SolveMethod,
) -> Result<Equilibrium> {
    if sched.m == 0 || sched.n == 0 {
        if method == SolveMethod::Grid {
            let g = long_run_gains(params_x, params_y, sched);
            return grid_oracle(&g, sched);
        }
        return closed_form_degenerate(params_x, params_y, sched);
    }
    let g = long_run_gains(params_x, params_y, sched);
    match method {
        SolveMethod::Newton => newton_solve(&g, sched),
        SolveMethod::Grid => grid_oracle(&g, sched),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Newton,
    Grid,
}
