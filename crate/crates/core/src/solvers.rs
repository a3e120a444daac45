//! Branch-and-bound global solver, local ascent baselines and a grid oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::bounds::{ContrastBound, Mode, SearchCube};
use crate::error::{Error, Result};
use crate::events::{CameraIntrinsics, EventWindow};
use crate::image::{contrast, render_continuous_prepared, reward, KernelSpec};
use crate::warp::{AngularVelocity, PreparedWindow};

/// Step of the central differences used by the local solver, in rad/s.
pub const GRADIENT_STEP: f64 = 1e-5;
const LOCAL_MAX_ITERATIONS: u64 = 200;
const LOCAL_REL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Radius of the feasible ball of angular velocities, rad/s.
    pub r_max: f64,
    /// Absolute gap; `None` selects `1e-3 N^2 / P`.
    pub tau: Option<f64>,
    /// Relative gap, scaled by `max(C, 1)`.
    pub tau_rel: f64,
    pub mode: Mode,
    pub max_iterations: u64,
    /// Evaluate sibling bounds on the rayon pool.
    pub parallel: bool,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            r_max: 20.0,
            tau: None,
            tau_rel: 1e-2,
            mode: Mode::Discrete,
            max_iterations: 1_000_000,
            parallel: false,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub fn discrete(r_max: f64) -> Self {
        Self {
            r_max,
            ..Self::default()
        }
    }

    pub fn continuous(r_max: f64, kernel: KernelSpec) -> Self {
        Self {
            r_max,
            mode: Mode::Continuous(kernel),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("r_max must be positive, got {}", self.r_max)));
        }
        let tau = self.tau.unwrap_or(1.0);
        if !(tau >= 0.0 && tau.is_finite() && self.tau_rel >= 0.0 && self.tau_rel.is_finite()) {
            return Err(Error::InvalidArgument("gap thresholds must be finite and non-negative".into()));
        }
        if tau == 0.0 && self.tau_rel == 0.0 {
            return Err(Error::InvalidArgument("one of tau and tau_rel must be positive".into()));
        }
        Ok(())
    }

    /// Absolute gap for a window of `n` events on `p` pixels.
    pub fn tau_for(&self, n: usize, p: usize) -> f64 {
        self.tau.unwrap_or(1e-3 * (n * n) as f64 / p as f64)
    }

    /// `max(tau, tau_rel * max(c, 1))`.
    pub fn gap_threshold(&self, n: usize, p: usize, c: f64) -> f64 {
        self.tau_for(n, p).max(self.tau_rel * c.max(1.0))
    }

    fn kernel(&self) -> KernelSpec {
        match self.mode {
            Mode::Continuous(k) => k,
            Mode::Discrete => KernelSpec::default(),
        }
    }
}

/// One dequeue of the branch-and-bound search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    pub elapsed_s: f64,
    /// Incumbent contrast.
    pub lower: f64,
    /// Bound of the dequeued cube, the largest in the queue.
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub omega: AngularVelocity,
    /// Objective value at `omega`.
    pub contrast: f64,
    /// Global upper bound at exit; `None` for local solvers.
    pub upper_bound_at_exit: Option<f64>,
    pub iterations: u64,
    pub cubes_pruned: u64,
    pub runtime: Duration,
    pub trace: Option<Vec<TraceRow>>,
    /// Gap closed within the threshold.
    pub certified: bool,
    pub gap_threshold: f64,
    /// Half-width of the last dequeued cube.
    pub final_half_width: f64,
}

struct Node {
    upper: f64,
    seq: u64,
    cube: SearchCube,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap on the bound; earlier insertions first among equals.
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper.total_cmp(&other.upper).then(other.seq.cmp(&self.seq))
    }
}

fn clamp_to_ball(omega: AngularVelocity, r_max: f64) -> AngularVelocity {
    let n = omega.norm();
    if n > r_max {
        omega * (r_max / n)
    } else {
        omega
    }
}

/// Best-first branch and bound over the `r_max` ball.
///
/// On certified exit `C(omega) >= max C - gap_threshold`. Hitting
/// `max_iterations` returns the incumbent with `certified == false`.
pub fn solve_bnb(window: &EventWindow, cam: &CameraIntrinsics, config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    let start = Instant::now();
    let bound = ContrastBound::new(window, cam, config.mode);
    let (n, p) = (window.len(), cam.pixel_count());

    let mut best_omega = Vector3::zeros();
    let mut best = bound.objective(&best_omega);
    let mut trace = config.record_trace.then(Vec::new);
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let root = SearchCube::new(Vector3::zeros(), config.r_max);
    heap.push(Node {
        upper: bound.upper(&root),
        seq,
        cube: root,
    });

    let mut iterations = 0u64;
    let mut pruned = 0u64;
    let mut certified = false;
    let mut upper_exit = best;
    let mut final_half_width = root.half_width;

    while let Some(node) = heap.pop() {
        iterations += 1;
        final_half_width = node.cube.half_width;
        if let Some(t) = trace.as_mut() {
            t.push(TraceRow {
                iteration: iterations,
                elapsed_s: start.elapsed().as_secs_f64(),
                lower: best,
                upper: node.upper,
            });
        }
        upper_exit = node.upper;
        if node.upper - best <= config.gap_threshold(n, p, best) {
            certified = true;
            break;
        }
        if iterations >= config.max_iterations {
            break;
        }

        let centre = clamp_to_ball(node.cube.centre, config.r_max);
        let c = bound.objective(&centre);
        if c > best {
            best = c;
            best_omega = centre;
        }

        let children: Vec<SearchCube> = node
            .cube
            .split()
            .into_iter()
            .filter(|b| b.min_norm() <= config.r_max)
            .collect();
        pruned += 8 - children.len() as u64;
        let uppers: Vec<f64> = if config.parallel {
            children.par_iter().map(|b| bound.upper(b)).collect()
        } else {
            children.iter().map(|b| bound.upper(b)).collect()
        };
        for (cube, u) in children.into_iter().zip(uppers) {
            // A subcube's bound can never exceed its parent's.
            let upper = u.min(node.upper);
            if upper >= best {
                seq += 1;
                heap.push(Node { upper, seq, cube });
            } else {
                pruned += 1;
            }
        }
    }
    if heap.is_empty() && !certified && iterations < config.max_iterations {
        // Everything was pruned below the incumbent.
        certified = true;
        upper_exit = best;
    }

    Ok(SolveResult {
        omega: best_omega,
        contrast: best,
        upper_bound_at_exit: Some(upper_exit.max(best)),
        iterations,
        cubes_pruned: pruned,
        runtime: start.elapsed(),
        trace,
        certified,
        gap_threshold: config.gap_threshold(n, p, best),
        final_half_width,
    })
}

/// Smooth objective ascended by [`solve_local`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Contrast,
    Reward,
}

impl Objective {
    /// Value on the continuous image of `pw` warped by `omega`.
    pub fn eval(&self, pw: &PreparedWindow, kernel: &KernelSpec, omega: &AngularVelocity) -> f64 {
        let img = render_continuous_prepared(pw, omega, kernel);
        match self {
            Objective::Contrast => contrast(&img),
            Objective::Reward => reward(&img),
        }
    }
}

/// Central-difference gradient of `f` with step `h` along each axis.
pub fn central_gradient(f: impl Fn(&AngularVelocity) -> f64, omega: &AngularVelocity, h: f64) -> Vector3<f64> {
    Vector3::from_fn(|i, _| {
        let mut e = Vector3::zeros();
        e[i] = h;
        (f(&(omega + e)) - f(&(omega - e))) / (2.0 * h)
    })
}

/// Gradient of the continuous objective as used by [`solve_local`].
pub fn objective_gradient(
    pw: &PreparedWindow,
    kernel: &KernelSpec,
    objective: Objective,
    omega: &AngularVelocity,
) -> Vector3<f64> {
    central_gradient(|w| objective.eval(pw, kernel, w), omega, GRADIENT_STEP)
}

/// Gradient ascent with backtracking on the continuous objective, starting at
/// `omega_init` and staying inside the `r_max` ball. Uses the config's kernel,
/// or the default kernel in discrete mode.
pub fn solve_local(
    window: &EventWindow,
    cam: &CameraIntrinsics,
    config: &SolverConfig,
    objective: Objective,
    omega_init: &AngularVelocity,
) -> Result<SolveResult> {
    config.validate()?;
    let start = Instant::now();
    let pw = PreparedWindow::new(window, cam);
    let kernel = config.kernel();
    let f = |w: &AngularVelocity| objective.eval(&pw, &kernel, w);

    let mut x = clamp_to_ball(*omega_init, config.r_max);
    let mut fx = f(&x);
    let mut step = 0.01 * config.r_max.min(1.0);
    let mut iterations = 0;
    while iterations < LOCAL_MAX_ITERATIONS {
        iterations += 1;
        let g = objective_gradient(&pw, &kernel, objective, &x);
        let Some(dir) = g.try_normalize(0.0) else { break };
        let mut accepted = None;
        while step > 1e-12 {
            let y = clamp_to_ball(x + dir * step, config.r_max);
            let fy = f(&y);
            if fy > fx {
                accepted = Some((y, fy));
                break;
            }
            step *= 0.5;
        }
        let Some((y, fy)) = accepted else { break };
        let gain = (fy - fx) / fx.abs().max(f64::MIN_POSITIVE);
        x = y;
        fx = fy;
        step *= 2.0;
        if gain < LOCAL_REL_TOL {
            break;
        }
    }

    Ok(SolveResult {
        omega: x,
        contrast: fx,
        upper_bound_at_exit: None,
        iterations,
        cubes_pruned: 0,
        runtime: start.elapsed(),
        trace: None,
        certified: false,
        gap_threshold: 0.0,
        final_half_width: 0.0,
    })
}

/// Exhaustive search of the config-mode contrast over a `steps^3` grid on
/// `[-r_max, r_max]^3`, nodes outside the ball pulled radially onto it. Ties
/// go to the lowest lexicographic grid index.
pub fn grid_oracle(
    window: &EventWindow,
    cam: &CameraIntrinsics,
    config: &SolverConfig,
    steps: usize,
) -> Result<(AngularVelocity, f64)> {
    config.validate()?;
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("grid needs at least 2 steps per axis, got {steps}")));
    }
    let bound = ContrastBound::new(window, cam, config.mode);
    let r = config.r_max;
    let coord = |i: usize| -r + 2.0 * r * i as f64 / (steps - 1) as f64;
    let slab = |i: usize| {
        let mut best: Option<(f64, usize, AngularVelocity)> = None;
        for j in 0..steps {
            for k in 0..steps {
                let w = clamp_to_ball(Vector3::new(coord(i), coord(j), coord(k)), r);
                let c = bound.objective(&w);
                if best.is_none_or(|(b, _, _)| c > b) {
                    best = Some((c, (i * steps + j) * steps + k, w));
                }
            }
        }
        best
    };
    let pick = |a: Option<(f64, usize, AngularVelocity)>, b: Option<(f64, usize, AngularVelocity)>| match (a, b) {
        (Some(x), Some(y)) => Some(if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    };
    let best = if config.parallel {
        (0..steps).into_par_iter().map(slab).reduce(|| None, pick)
    } else {
        (0..steps).map(slab).fold(None, pick)
    };
    let (c, _, w) = best.expect("steps >= 2 gives a non-empty grid");
    Ok((w, c))
}

/// `(|w_true - w_est|, ||w_true| - |w_est||)`.
pub fn error_metrics(truth: &AngularVelocity, estimate: &AngularVelocity) -> (f64, f64) {
    ((truth - estimate).norm(), (truth.norm() - estimate.norm()).abs())
}

/// Writes `iteration,elapsed_s,lower,upper`.
pub fn write_trace_csv(mut w: impl Write, trace: &[TraceRow]) -> Result<()> {
    writeln!(w, "iteration,elapsed_s,lower,upper")?;
    for r in trace {
        writeln!(w, "{},{:.9},{:.17e},{:.17e}", r.iteration, r.elapsed_s, r.lower, r.upper)?;
    }
    Ok(())
}
