//! Corridor-constrained minimum-jerk problem and the time-factor line search.
//!
//! Decision variables are the per-interval jerks, `[j_0x, j_0y, j_0z, j_1x, …]`.
//! Knot states follow from forward integration of the initial state, so every
//! control point is an affine function of the jerks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{dt_lower_bound, JerkSpline, Limits, State};
use crate::decomp::Corridor;
use crate::geom::Vec3;
use crate::solver::{solve_miqp, BinaryId, Indicator, MiqpProblem, MiqpSolution, MiqpStatus, QpProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FinalMode {
    /// Stop at the given position.
    FixedStop(Vec3),
    /// Stop anywhere the corridor allows.
    FreeStop,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajError {
    #[error("no feasible trajectory for any tried time factor")]
    Infeasible,
    #[error("invalid request: {0}")]
    Invalid(String),
}

/// Scalar affine form `const + Σ_m coef[m]·j_m` along one axis.
#[derive(Clone)]
struct Affine {
    konst: Vec3,
    coef: Vec<f64>,
}

impl Affine {
    fn constant(c: Vec3, n: usize) -> Self {
        Self { konst: c, coef: vec![0.0; n] }
    }

    fn axpy(&self, s: f64, o: &Affine) -> Affine {
        Affine { konst: self.konst + o.konst * s, coef: self.coef.iter().zip(&o.coef).map(|(a, b)| a + s * b).collect() }
    }
}

/// Knot position, velocity and acceleration as affine forms of the jerks.
fn knot_forms(init: &State, n: usize, dt: f64) -> Vec<[Affine; 3]> {
    let mut x = Affine::constant(init.x, n);
    let mut v = Affine::constant(init.v, n);
    let mut a = Affine::constant(init.a, n);
    let mut out = vec![[x.clone(), v.clone(), a.clone()]];
    for m in 0..n {
        let mut nx = x.axpy(dt, &v).axpy(dt * dt / 2.0, &a);
        nx.coef[m] += dt.powi(3) / 6.0;
        let mut nv = v.axpy(dt, &a);
        nv.coef[m] += dt * dt / 2.0;
        let mut na = a.clone();
        na.coef[m] += dt;
        x = nx;
        v = nv;
        a = na;
        out.push([x.clone(), v.clone(), a.clone()]);
    }
    out
}

/// Control points of interval `n` as affine forms.
fn control_forms(knots: &[[Affine; 3]], n: usize, dt: f64) -> [Affine; 4] {
    let [x, v, a] = &knots[n];
    let r1 = x.axpy(dt / 3.0, v);
    let r2 = x.axpy(2.0 * dt / 3.0, v).axpy(dt * dt / 6.0, a);
    [x.clone(), r1, r2, knots[n + 1][0].clone()]
}

/// Row `w · form_k ≤ rhs` over all axes, returned as (coefficients, adjusted rhs).
fn row(form: &Affine, w: &Vec3, rhs: f64, nvar: usize) -> (Vec<f64>, f64) {
    let mut r = vec![0.0; nvar];
    for (m, &c) in form.coef.iter().enumerate() {
        for k in 0..3 {
            r[3 * m + k] = w[k] * c;
        }
    }
    (r, rhs - w.dot(&form.konst))
}

fn stack(rows: &[(Vec<f64>, f64)], nvar: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut a = DMatrix::zeros(rows.len(), nvar);
    let mut b = DVector::zeros(rows.len());
    for (i, (r, c)) in rows.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            a[(i, j)] = *v;
        }
        b[i] = *c;
    }
    (a, b)
}

fn axis(k: usize) -> Vec3 {
    let mut e = Vec3::zeros();
    e[k] = 1.0;
    e
}

/// Assembles the mixed-integer problem: minimise Σ‖j_n‖²dt subject to the
/// initial state, the stop condition, knot limits, and each interval's four
/// control points lying in at least one corridor polyhedron.
pub fn build_miqp(init: &State, mode: FinalMode, corridor: &Corridor, n: usize, dt: f64, limits: &Limits) -> MiqpProblem {
    let nvar = 3 * n;
    let knots = knot_forms(init, n, dt);
    let h = DMatrix::identity(nvar, nvar) * (2.0 * dt);
    let g = DVector::zeros(nvar);

    let mut eq = Vec::new();
    let [xf, vf, af] = &knots[n];
    for k in 0..3 {
        let e = axis(k);
        if let FinalMode::FixedStop(p) = mode {
            eq.push(row(xf, &e, p[k], nvar));
        }
        eq.push(row(vf, &e, 0.0, nvar));
        eq.push(row(af, &e, 0.0, nvar));
    }

    let mut ineq = Vec::new();
    for m in 0..n {
        for k in 0..3 {
            let mut r = vec![0.0; nvar];
            r[3 * m + k] = 1.0;
            ineq.push((r.clone(), limits.j_max[k]));
            r[3 * m + k] = -1.0;
            ineq.push((r, limits.j_max[k]));
        }
    }
    // the initial knot is fixed, so its limit rows would be constants
    for kn in knots.iter().skip(1) {
        for k in 0..3 {
            let e = axis(k);
            ineq.push(row(&kn[1], &e, limits.v_max[k], nvar));
            ineq.push(row(&kn[1], &(-e), limits.v_max[k], nvar));
            ineq.push(row(&kn[2], &e, limits.a_max[k], nvar));
            ineq.push(row(&kn[2], &(-e), limits.a_max[k], nvar));
        }
    }
    // keep every control point in the corridor's bounding box so that the
    // big-M constants computed from the box corners are valid
    let bx = corridor.bounding_box();
    let forms: Vec<[Affine; 4]> = (0..n).map(|m| control_forms(&knots, m, dt)).collect();
    for f in &forms {
        // the first point is the previous interval's last (or the fixed start)
        for r in f.iter().skip(1) {
            for k in 0..3 {
                let e = axis(k);
                ineq.push(row(r, &e, bx.max[k], nvar));
                ineq.push(row(r, &(-e), -bx.min[k], nvar));
            }
        }
    }

    let corners: Vec<Vec3> = (0..8)
        .map(|c| Vec3::new(if c & 1 == 0 { bx.min.x } else { bx.max.x }, if c & 2 == 0 { bx.min.y } else { bx.max.y }, if c & 4 == 0 { bx.min.z } else { bx.max.z }))
        .collect();
    let mut indicators = Vec::new();
    let mut covers = Vec::new();
    for (m, f) in forms.iter().enumerate() {
        let mut cover = Vec::new();
        for (p, poly) in corridor.polys.iter().enumerate() {
            let mut rows = Vec::new();
            let mut big_m = Vec::new();
            for (i, r) in f.iter().enumerate() {
                for (nrm, &c) in poly.normals.iter().zip(&poly.offsets) {
                    let (coef, rhs) = row(r, nrm, c, nvar);
                    if m == 0 && i == 0 && rhs >= 0.0 {
                        continue; // constant row that already holds
                    }
                    let mm = corners.iter().map(|q| nrm.dot(q) - c).fold(f64::NEG_INFINITY, f64::max).max(0.0);
                    rows.push((coef, rhs));
                    big_m.push(mm);
                }
            }
            let (a, c) = stack(&rows, nvar);
            cover.push(indicators.len());
            indicators.push(Indicator { id: BinaryId { interval: m, poly: p }, a, c, big_m: DVector::from_vec(big_m) });
        }
        covers.push(cover);
    }

    let (aeq, beq) = stack(&eq, nvar);
    let (ain, bin) = stack(&ineq, nvar);
    MiqpProblem { base: QpProblem { h, g, aeq, beq, ain, bin }, indicators, covers }
}

/// Rebuilds the spline from a jerk solution vector.
pub fn spline_from_solution(init: &State, x: &DVector<f64>, dt: f64, t0: f64) -> JerkSpline {
    let jerks: Vec<Vec3> = (0..x.len() / 3).map(|m| Vec3::new(x[3 * m], x[3 * m + 1], x[3 * m + 2])).collect();
    JerkSpline::from_jerks(init, &jerks, dt, t0)
}

/// Outcome of a successful line search.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearch {
    pub spline: JerkSpline,
    pub factor: f64,
    pub solution: MiqpSolution,
    pub trials: usize,
    pub nodes: usize,
}

/// Time factors tried, in increasing order, on the lattice anchored at the
/// clamped lower end.
pub fn line_search_factors(f_prev: f64, gamma: f64, gamma_prime: f64, n_steps: usize) -> Vec<f64> {
    let lo = (f_prev - gamma).max(1.0);
    let hi = f_prev + gamma_prime;
    let step = (gamma + gamma_prime) / n_steps.max(1) as f64;
    if step <= 0.0 {
        return vec![lo];
    }
    let mut out = Vec::new();
    let mut i = 0;
    loop {
        let f = lo + step * i as f64;
        if f > hi + 1e-12 {
            break;
        }
        out.push(f);
        i += 1;
    }
    if out.is_empty() {
        out.push(lo);
    }
    out
}

/// Inputs shared by every trial of the line search.
#[derive(Debug, Clone)]
pub struct TrajRequest<'a> {
    pub init: State,
    pub mode: FinalMode,
    /// Position used by the time heuristic (the seed path's end).
    pub target: Vec3,
    pub corridor: &'a Corridor,
    pub intervals: usize,
    pub limits: Limits,
    pub t0: f64,
    pub node_budget: usize,
    pub warm: Option<Vec<usize>>,
}

/// Tries increasing time factors and returns the first feasible trajectory.
pub fn line_search_solve(
    req: &TrajRequest<'_>,
    f_prev: f64,
    gamma: f64,
    gamma_prime: f64,
    n_steps: usize,
) -> Result<LineSearch, TrajError> {
    if req.intervals == 0 || req.corridor.polys.is_empty() {
        return Err(TrajError::Invalid("need at least one interval and one polyhedron".into()));
    }
    let mut nodes = 0;
    let factors = line_search_factors(f_prev, gamma, gamma_prime, n_steps);
    let warm = req.warm.as_ref().filter(|w| w.len() == req.intervals && w.iter().all(|&p| p < req.corridor.polys.len()));
    for (trial, &f) in factors.iter().enumerate() {
        let dt = dt_lower_bound(&req.init, &req.target, &req.limits, req.intervals, f);
        let problem = build_miqp(&req.init, req.mode, req.corridor, req.intervals, dt, &req.limits);
        let Ok(sol) = solve_miqp(&problem, req.node_budget, warm.map(|w| w.as_slice())) else {
            continue;
        };
        nodes += sol.nodes_explored;
        let usable = match sol.status {
            MiqpStatus::Optimal => true,
            MiqpStatus::Timeout => sol.has_solution(),
            MiqpStatus::Infeasible => false,
        };
        if usable {
            let spline = spline_from_solution(&req.init, &sol.x, dt, req.t0);
            return Ok(LineSearch { spline, factor: f, solution: sol, trials: trial + 1, nodes });
        }
    }
    Err(TrajError::Infeasible)
}
