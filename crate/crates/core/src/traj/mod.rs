//! Piece-wise cubic jerk splines, their Bézier control points, and the
//! corridor-constrained trajectory optimisation built on top of them.

mod build;

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;

pub use build::{build_miqp, line_search_factors, line_search_solve, spline_from_solution, FinalMode, LineSearch, TrajError, TrajRequest};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: Vec3,
    pub v: Vec3,
    pub a: Vec3,
}

impl State {
    pub fn at_rest(x: Vec3) -> Self {
        Self { x, v: Vec3::zeros(), a: Vec3::zeros() }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.v.iter()).chain(self.a.iter()).all(|c| c.is_finite())
    }
}

/// Per-axis magnitude bounds on velocity, acceleration and jerk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub v_max: Vec3,
    pub a_max: Vec3,
    pub j_max: Vec3,
}

impl Limits {
    pub fn uniform(v: f64, a: f64, j: f64) -> Self {
        Self { v_max: Vec3::repeat(v), a_max: Vec3::repeat(a), j_max: Vec3::repeat(j) }
    }

    pub fn is_valid(&self) -> bool {
        self.v_max.iter().chain(self.a_max.iter()).chain(self.j_max.iter()).all(|&c| c > 0.0 && c.is_finite())
    }
}

/// One interval `x(τ) = a τ³ + b τ² + c τ + d`, τ ∈ [0, dt].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cubic {
    pub a: Vec3,
    pub b: Vec3,
    pub c: Vec3,
    pub d: Vec3,
}

impl Cubic {
    /// Interval starting at `s` under constant jerk `j`.
    pub fn from_state(s: &State, j: Vec3) -> Self {
        Self { a: j / 6.0, b: s.a / 2.0, c: s.v, d: s.x }
    }

    pub fn eval(&self, tau: f64) -> State {
        let t2 = tau * tau;
        State {
            x: self.a * (t2 * tau) + self.b * t2 + self.c * tau + self.d,
            v: self.a * (3.0 * t2) + self.b * (2.0 * tau) + self.c,
            a: self.a * (6.0 * tau) + self.b * 2.0,
        }
    }

    pub fn jerk(&self) -> Vec3 {
        self.a * 6.0
    }
}

/// Bézier control points of a cubic interval of duration `dt`.
pub fn control_points(cubic: &Cubic, dt: f64) -> [Vec3; 4] {
    let Cubic { a, b, c, d } = *cubic;
    [
        d,
        (c * dt + d * 3.0) / 3.0,
        (b * dt * dt + c * (2.0 * dt) + d * 3.0) / 3.0,
        a * dt.powi(3) + b * dt * dt + c * dt + d,
    ]
}

/// Evaluates a cubic Bézier curve at parameter `u ∈ [0, 1]`.
pub fn bezier_point(r: &[Vec3; 4], u: f64) -> Vec3 {
    let w = 1.0 - u;
    r[0] * (w * w * w) + r[1] * (3.0 * w * w * u) + r[2] * (3.0 * w * u * u) + r[3] * (u * u * u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JerkSpline {
    pub intervals: Vec<Cubic>,
    pub dt: f64,
    pub t0: f64,
}

/// Result of sampling: the state and whether `t` had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: State,
    pub clamped: bool,
}

impl JerkSpline {
    /// Forward-integrates piece-wise constant jerks from `init`.
    pub fn from_jerks(init: &State, jerks: &[Vec3], dt: f64, t0: f64) -> Self {
        let mut s = *init;
        let intervals = jerks
            .iter()
            .map(|j| {
                let c = Cubic::from_state(&s, *j);
                s = c.eval(dt);
                c
            })
            .collect();
        Self { intervals, dt, t0 }
    }

    /// A spline that stays at rest at `x` for `duration`.
    pub fn hold(x: Vec3, t0: f64, duration: f64) -> Self {
        let s = State::at_rest(x);
        Self::from_jerks(&s, &[Vec3::zeros()], duration.max(1e-3), t0)
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.intervals.len() as f64
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.duration()
    }

    pub fn start(&self) -> State {
        self.intervals[0].eval(0.0)
    }

    pub fn end(&self) -> State {
        self.intervals[self.intervals.len() - 1].eval(self.dt)
    }

    /// Knot `n` (0 ≤ n ≤ N) state.
    pub fn knot(&self, n: usize) -> State {
        if n < self.intervals.len() {
            self.intervals[n].eval(0.0)
        } else {
            self.end()
        }
    }

    pub fn sample(&self, t: f64) -> Sample {
        let clamped = t < self.t0 || t > self.t_end();
        let t = t.clamp(self.t0, self.t_end());
        let rel = (t - self.t0) / self.dt;
        let n = (rel.floor() as usize).min(self.intervals.len() - 1);
        let tau = t - self.t0 - n as f64 * self.dt;
        Sample { state: self.intervals[n].eval(tau.max(0.0)), clamped }
    }

    pub fn at(&self, t: f64) -> State {
        self.sample(t).state
    }

    pub fn control_points(&self, n: usize) -> [Vec3; 4] {
        control_points(&self.intervals[n], self.dt)
    }

    /// Σ ‖j_n‖² dt.
    pub fn jerk_cost(&self) -> f64 {
        self.intervals.iter().map(|c| c.jerk().norm_squared() * self.dt).sum()
    }

    /// Uniformly spaced samples with spacing at most `step`, including both ends.
    pub fn samples(&self, t_from: f64, t_to: f64, step: f64) -> Vec<(f64, State)> {
        let span = (t_to - t_from).max(0.0);
        let n = ((span / step).ceil() as usize).max(1);
        (0..=n)
            .map(|i| {
                let t = t_from + span * i as f64 / n as f64;
                (t, self.at(t))
            })
            .collect()
    }
}

/// Per-interval duration from constant-input rest-to-rest time estimates.
pub fn dt_lower_bound(init: &State, final_pos: &Vec3, limits: &Limits, n: usize, f: f64) -> f64 {
    const FLOOR: f64 = 1e-3;
    let mut t: f64 = 0.0;
    for k in 0..3 {
        let d = (final_pos[k] - init.x[k]).abs();
        t = t
            .max(d / limits.v_max[k])
            .max((2.0 * d / limits.a_max[k]).sqrt())
            .max((6.0 * d / limits.j_max[k]).cbrt());
    }
    if t <= 0.0 {
        return FLOOR;
    }
    f * t / n.max(1) as f64
}
