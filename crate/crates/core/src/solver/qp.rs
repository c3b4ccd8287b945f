//! Dense convex QP: minimise ½xᵀHx + gᵀx subject to equalities and
//! inequalities. Positive definite H goes to the dual active-set method;
//! semidefinite H, or a dual run that cycles, to a primal active-set method
//! in the null space of the working constraints.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::dual::{solve_dual, DualFailure};
use super::linalg::{back_substitute, full_qr};

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub aeq: DMatrix<f64>,
    pub beq: DVector<f64>,
    pub ain: DMatrix<f64>,
    pub bin: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QpError {
    #[error("constraints are infeasible (phase-1 residual {0:.3e})")]
    Infeasible(f64),
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("iteration limit reached")]
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Multipliers λ with Hx + g + Aeqᵀλ + Ainᵀμ = 0.
    pub eq_multipliers: DVector<f64>,
    pub ineq_multipliers: DVector<f64>,
    pub iterations: usize,
}

impl QpProblem {
    pub fn unconstrained(h: DMatrix<f64>, g: DVector<f64>) -> Self {
        let n = g.len();
        Self { h, g, aeq: DMatrix::zeros(0, n), beq: DVector::zeros(0), ain: DMatrix::zeros(0, n), bin: DVector::zeros(0) }
    }

    pub fn with_eq(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.aeq = a;
        self.beq = b;
        self
    }

    pub fn with_ineq(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.ain = a;
        self.bin = b;
        self
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.g.dot(x)
    }

    pub fn validate(&self) -> Result<(), QpError> {
        let n = self.g.len();
        let bad = |what: &str| Err(QpError::Dimension(what.to_string()));
        if self.h.shape() != (n, n) {
            return bad("H must be n×n");
        }
        if self.aeq.ncols() != n || self.aeq.nrows() != self.beq.len() {
            return bad("equality block");
        }
        if self.ain.ncols() != n || self.ain.nrows() != self.bin.len() {
            return bad("inequality block");
        }
        if (&self.h - self.h.transpose()).amax() > 1e-9 * (1.0 + self.h.amax()) {
            return bad("H must be symmetric");
        }
        Ok(())
    }

    /// Largest inequality violation and equality residual at `x`.
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        let vi = (&self.ain * x - &self.bin).iter().fold(0.0f64, |m, &v| m.max(v));
        let ve = (&self.aeq * x - &self.beq).amax();
        vi.max(ve)
    }
}

/// Working copy with unit-norm rows.
struct Scaled {
    h: DMatrix<f64>,
    g: DVector<f64>,
    eq: Vec<(DVector<f64>, f64, f64)>,
    ineq: Vec<(DVector<f64>, f64, f64)>,
}

fn unit_rows(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<(DVector<f64>, f64, f64)> {
    (0..a.nrows())
        .map(|i| {
            let row = a.row(i).transpose();
            let norm = row.norm();
            if norm == 0.0 {
                (row, b[i], 0.0)
            } else {
                (row / norm, b[i] / norm, norm)
            }
        })
        .collect()
}

struct ActiveSetResult {
    x: DVector<f64>,
    eq_mult: Vec<f64>,
    ineq_mult: Vec<(usize, f64)>,
    iterations: usize,
}

/// Primal active set from a feasible `x`. `eq` rows are always active;
/// `ineq` rows may enter and leave the working set.
fn active_set(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    eq: &[&(DVector<f64>, f64, f64)],
    ineq: &[&(DVector<f64>, f64, f64)],
    mut x: DVector<f64>,
    tol: f64,
) -> Result<ActiveSetResult, QpError> {
    let n = x.len();
    let mut work: Vec<usize> = Vec::new();
    let max_iter = 50 * (n + ineq.len() + 10);
    for iter in 0..max_iter {
        let m = eq.len() + work.len();
        let grad = h * &x + g;
        let (q, r) = if m > 0 {
            let mut at = DMatrix::zeros(n, m);
            for (j, row) in eq.iter().map(|e| &e.0).chain(work.iter().map(|&i| &ineq[i].0)).enumerate() {
                at.set_column(j, row);
            }
            full_qr(&at)
        } else {
            (DMatrix::identity(n, n), DMatrix::zeros(0, 0))
        };
        let free = n - m;
        let gscale = 1.0 + grad.amax();
        let mut step: Option<(DVector<f64>, f64)> = None;
        if free > 0 {
            let z = q.columns(m, free);
            let gz = z.transpose() * &grad;
            if gz.amax() > 1e-11 * gscale {
                let hz = z.transpose() * h * z;
                let (pz, amax) = match hz.clone().cholesky() {
                    Some(ch) => (-ch.solve(&gz), 1.0),
                    None => {
                        let eig = SymmetricEigen::new(hz);
                        let lam_scale = 1.0 + eig.eigenvalues.amax();
                        let gv = eig.eigenvectors.transpose() * &gz;
                        let flat: Vec<usize> = (0..free).filter(|&i| eig.eigenvalues[i] <= 1e-10 * lam_scale).collect();
                        if flat.iter().any(|&i| gv[i].abs() > 1e-11 * gscale) {
                            let mut pz = DVector::zeros(free);
                            for &i in &flat {
                                pz -= eig.eigenvectors.column(i) * gv[i];
                            }
                            (pz, f64::INFINITY)
                        } else {
                            let mut pz = DVector::zeros(free);
                            for i in (0..free).filter(|i| !flat.contains(i)) {
                                pz -= eig.eigenvectors.column(i) * (gv[i] / eig.eigenvalues[i]);
                            }
                            (pz, 1.0)
                        }
                    }
                };
                let p = z * pz;
                if p.amax() > 1e-14 * (1.0 + x.amax()) {
                    step = Some((p, amax));
                }
            }
        }
        match step {
            Some((p, amax)) => {
                let mut block: Option<(usize, f64)> = None;
                for (i, c) in ineq.iter().enumerate() {
                    if work.contains(&i) {
                        continue;
                    }
                    let cp = c.0.dot(&p);
                    if cp > 1e-12 {
                        let a = ((c.1 - c.0.dot(&x)) / cp).max(0.0);
                        if block.is_none_or(|(_, best)| a < best) {
                            block = Some((i, a));
                        }
                    }
                }
                match block {
                    Some((i, a)) if a < amax => {
                        x += &p * a;
                        work.push(i);
                    }
                    _ if amax.is_infinite() => return Err(QpError::Unbounded),
                    _ => x += &p,
                }
            }
            None => {
                // stationary on the working set: check multiplier signs
                let mult = if m > 0 {
                    let q1 = q.columns(0, m);
                    back_substitute(&r, &(-(q1.transpose() * &grad)))
                } else {
                    DVector::zeros(0)
                };
                let ne = eq.len();
                let mscale = 1.0 + mult.amax();
                let drop = work
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| mult[ne + k] < -tol * mscale)
                    .min_by_key(|&(_, &i)| i)
                    .map(|(k, _)| k);
                match drop {
                    Some(k) => {
                        work.remove(k);
                    }
                    None => {
                        return Ok(ActiveSetResult {
                            x,
                            eq_mult: (0..ne).map(|k| mult[k]).collect(),
                            ineq_mult: work.iter().enumerate().map(|(k, &i)| (i, mult[ne + k])).collect(),
                            iterations: iter,
                        });
                    }
                }
            }
        }
    }
    Err(QpError::IterationLimit)
}

/// Cholesky factor of `h` when it is comfortably positive definite.
fn positive_definite(h: &DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let ch = h.clone().cholesky()?;
    let diag = ch.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    (lo > 1e-6 * hi).then_some(ch)
}

/// Keeps a linearly independent subset of the equality rows.
fn independent_rows(rows: &[(DVector<f64>, f64, f64)]) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for (i, (row, _, norm)) in rows.iter().enumerate() {
        if *norm == 0.0 {
            continue;
        }
        let mut r = row.clone();
        for b in &basis {
            r -= b * b.dot(&r);
        }
        let rn = r.norm();
        if rn > 1e-10 {
            basis.push(r / rn);
            keep.push(i);
        }
    }
    keep
}

pub fn solve_qp(p: &QpProblem, tol: f64) -> Result<QpSolution, QpError> {
    solve_qp_from(p, tol, None)
}

/// As [`solve_qp`], starting phase 1 from `hint` when given.
pub fn solve_qp_from(p: &QpProblem, tol: f64, hint: Option<&DVector<f64>>) -> Result<QpSolution, QpError> {
    p.validate()?;
    let n = p.dim();
    let s = Scaled { h: p.h.clone(), g: p.g.clone(), eq: unit_rows(&p.aeq, &p.beq), ineq: unit_rows(&p.ain, &p.bin) };
    for (_, b, norm) in &s.ineq {
        if *norm == 0.0 && *b < -tol {
            return Err(QpError::Infeasible(-b));
        }
    }
    for (_, b, norm) in &s.eq {
        if *norm == 0.0 && b.abs() > tol {
            return Err(QpError::Infeasible(b.abs()));
        }
    }
    let keep_eq = independent_rows(&s.eq);
    let eq: Vec<&(DVector<f64>, f64, f64)> = keep_eq.iter().map(|&i| &s.eq[i]).collect();
    let ineq_idx: Vec<usize> = (0..s.ineq.len()).filter(|&i| s.ineq[i].2 > 0.0).collect();
    let ineq: Vec<&(DVector<f64>, f64, f64)> = ineq_idx.iter().map(|&i| &s.ineq[i]).collect();

    if let Some(chol) = positive_definite(&s.h) {
        match solve_dual(&chol, &s.g, &eq, &ineq, tol) {
            Ok(d) => {
                let mut eq_mult = DVector::zeros(p.aeq.nrows());
                for (k, &i) in keep_eq.iter().enumerate() {
                    eq_mult[i] = d.eq_mult[k] / s.eq[i].2;
                }
                let mut ineq_mult = DVector::zeros(p.ain.nrows());
                for (k, &i) in ineq_idx.iter().enumerate() {
                    ineq_mult[i] = d.ineq_mult[k] / s.ineq[i].2;
                }
                let objective = p.objective(&d.x);
                return Ok(QpSolution { x: d.x, objective, eq_multipliers: eq_mult, ineq_multipliers: ineq_mult, iterations: d.iterations });
            }
            Err(DualFailure::Infeasible(v)) => return Err(QpError::Infeasible(v)),
            // degenerate cycling: fall back to the primal method
            Err(DualFailure::IterationLimit) => {}
        }
    }

    // closest point to the hint on the equality manifold
    let mut x = hint.cloned().unwrap_or_else(|| DVector::zeros(n));
    if !eq.is_empty() {
        let mut at = DMatrix::zeros(n, eq.len());
        for (j, e) in eq.iter().enumerate() {
            at.set_column(j, &e.0);
        }
        let qr = at.clone().qr();
        let r = qr.r();
        let res = DVector::from_iterator(eq.len(), eq.iter().map(|e| e.1 - e.0.dot(&x)));
        let y = r.transpose().solve_lower_triangular(&res).ok_or(QpError::IterationLimit)?;
        x += qr.q() * y;
    }
    let eq_res = s.eq.iter().map(|e| (e.0.dot(&x) - e.1).abs()).fold(0.0, f64::max);
    if eq_res > tol.max(1e-9) {
        return Err(QpError::Infeasible(eq_res));
    }

    let worst = ineq.iter().map(|c| c.0.dot(&x) - c.1).fold(0.0, f64::max);
    let mut iterations = 0;
    if worst > 0.0 {
        // phase 1: minimise t subject to c·x − t ≤ d, t ≥ 0
        let mut h1 = DMatrix::zeros(n + 1, n + 1);
        h1[(n, n)] = 0.0;
        let mut g1 = DVector::zeros(n + 1);
        g1[n] = 1.0;
        let lift = |row: &DVector<f64>, tcoef: f64| {
            let mut v = DVector::zeros(n + 1);
            v.rows_mut(0, n).copy_from(row);
            v[n] = tcoef;
            v
        };
        let eq1: Vec<(DVector<f64>, f64, f64)> = eq.iter().map(|e| (lift(&e.0, 0.0), e.1, 1.0)).collect();
        let mut in1: Vec<(DVector<f64>, f64, f64)> = ineq
            .iter()
            .map(|c| {
                let v = lift(&c.0, -1.0);
                let norm = v.norm();
                (v / norm, c.1 / norm, 1.0)
            })
            .collect();
        in1.push((lift(&DVector::zeros(n), -1.0), 0.0, 1.0));
        let mut x1 = DVector::zeros(n + 1);
        x1.rows_mut(0, n).copy_from(&x);
        x1[n] = worst;
        let eq1r: Vec<_> = eq1.iter().collect();
        let in1r: Vec<_> = in1.iter().collect();
        h1.fill(0.0);
        let r1 = active_set(&h1, &g1, &eq1r, &in1r, x1, tol)?;
        iterations += r1.iterations;
        let t = r1.x[n];
        if t > tol {
            return Err(QpError::Infeasible(t));
        }
        x = r1.x.rows(0, n).into_owned();
    }

    let r2 = active_set(&s.h, &s.g, &eq, &ineq, x, tol)?;
    iterations += r2.iterations;
    let mut eq_mult = DVector::zeros(p.aeq.nrows());
    for (k, &i) in keep_eq.iter().enumerate() {
        eq_mult[i] = r2.eq_mult[k] / s.eq[i].2;
    }
    let mut ineq_mult = DVector::zeros(p.ain.nrows());
    for &(k, mu) in &r2.ineq_mult {
        let i = ineq_idx[k];
        ineq_mult[i] = mu.max(0.0) / s.ineq[i].2;
    }
    let objective = p.objective(&r2.x);
    Ok(QpSolution { x: r2.x, objective, eq_multipliers: eq_mult, ineq_multipliers: ineq_mult, iterations })
}

/// Stationarity, primal feasibility and complementarity residuals.
pub fn kkt_residuals(p: &QpProblem, sol: &QpSolution) -> (f64, f64, f64) {
    let stat = &p.h * &sol.x + &p.g + p.aeq.transpose() * &sol.eq_multipliers + p.ain.transpose() * &sol.ineq_multipliers;
    let slack = &p.bin - &p.ain * &sol.x;
    let comp = slack.iter().zip(sol.ineq_multipliers.iter()).map(|(s, m)| (s * m).abs()).fold(0.0, f64::max);
    let dual = sol.ineq_multipliers.iter().fold(0.0f64, |m, &v| m.max(-v));
    (stat.amax(), p.violation(&sol.x), comp.max(dual))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_bound() {
        let p = QpProblem::unconstrained(DMatrix::from_element(1, 1, 2.0), DVector::zeros(1))
            .with_ineq(DMatrix::from_element(1, 1, -1.0), DVector::from_element(1, -1.0));
        let s = solve_qp(&p, DEFAULT_TOL).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory() {
        let p = QpProblem::unconstrained(DMatrix::from_element(1, 1, 2.0), DVector::zeros(1))
            .with_ineq(DMatrix::from_row_slice(2, 1, &[1.0, -1.0]), DVector::from_row_slice(&[0.0, -1.0]));
        assert!(matches!(solve_qp(&p, DEFAULT_TOL), Err(QpError::Infeasible(_))));
    }

    #[test]
    fn linear_objective_on_box() {
        // H = 0: minimise x + y on the unit box
        let p = QpProblem::unconstrained(DMatrix::zeros(2, 2), DVector::from_row_slice(&[1.0, 1.0])).with_ineq(
            DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]),
            DVector::from_row_slice(&[1.0, 0.0, 1.0, 0.0]),
        );
        let s = solve_qp(&p, DEFAULT_TOL).unwrap();
        assert!(s.x.amax() < 1e-12);
        let (st, pf, cs) = kkt_residuals(&p, &s);
        assert!(st < 1e-8 && pf < 1e-8 && cs < 1e-8);
    }

    #[test]
    fn unbounded_is_reported() {
        let p = QpProblem::unconstrained(DMatrix::zeros(1, 1), DVector::from_element(1, 1.0));
        assert_eq!(solve_qp(&p, DEFAULT_TOL), Err(QpError::Unbounded));
    }
}
