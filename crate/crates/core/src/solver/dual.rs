//! Dual active-set method for strictly convex QPs. Starts at the
//! unconstrained minimiser and adds violated constraints one at a time,
//! keeping `J = L⁻ᵀQ` and the triangular factor `R` up to date with Givens
//! rotations, so no phase-1 problem is needed.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::linalg::back_substitute;

/// A unit-norm row `n·x ≤ b` (or `= b`) with its original scale.
pub(super) type Row = (DVector<f64>, f64, f64);

pub(super) struct DualResult {
    pub x: DVector<f64>,
    pub eq_mult: Vec<f64>,
    pub ineq_mult: Vec<f64>,
    pub iterations: usize,
}

pub(super) enum DualFailure {
    Infeasible(f64),
    IterationLimit,
}

#[derive(Clone, Copy)]
enum Act {
    Eq(usize),
    In(usize),
}

struct Factors {
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    q: usize,
}

fn rotate_cols(j: &mut DMatrix<f64>, a: usize, b: usize, c: f64, s: f64) {
    for k in 0..j.nrows() {
        let (x, y) = (j[(k, a)], j[(k, b)]);
        j[(k, a)] = c * x + s * y;
        j[(k, b)] = -s * x + c * y;
    }
}

impl Factors {
    /// Step data for row `n`: `d = Jᵀn`, primal direction `z` and the change
    /// `r` of the active multipliers per unit multiplier on `n`.
    fn directions(&self, n: &DVector<f64>) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let d = self.j.tr_mul(n);
        let nn = d.len();
        let z = self.j.columns(self.q, nn - self.q) * d.rows(self.q, nn - self.q);
        let r = if self.q > 0 {
            back_substitute(&self.r.view((0, 0), (self.q, self.q)).into_owned(), &d.rows(0, self.q).into_owned())
        } else {
            DVector::zeros(0)
        };
        (d, z, r)
    }

    fn add(&mut self, mut d: DVector<f64>) {
        let n = d.len();
        for i in ((self.q + 1)..n).rev() {
            if d[i] == 0.0 {
                continue;
            }
            let h = d[i - 1].hypot(d[i]);
            let (c, s) = (d[i - 1] / h, d[i] / h);
            d[i - 1] = h;
            d[i] = 0.0;
            rotate_cols(&mut self.j, i - 1, i, c, s);
        }
        for i in 0..=self.q {
            self.r[(i, self.q)] = d[i];
        }
        self.q += 1;
    }

    fn remove(&mut self, k: usize) {
        let q = self.q;
        for col in k..q - 1 {
            for i in 0..q {
                self.r[(i, col)] = self.r[(i, col + 1)];
            }
        }
        for i in 0..q {
            self.r[(i, q - 1)] = 0.0;
        }
        for i in k..q - 1 {
            let (a, b) = (self.r[(i, i)], self.r[(i + 1, i)]);
            let h = a.hypot(b);
            if h == 0.0 {
                continue;
            }
            let (c, s) = (a / h, b / h);
            for col in i..q - 1 {
                let (x, y) = (self.r[(i, col)], self.r[(i + 1, col)]);
                self.r[(i, col)] = c * x + s * y;
                self.r[(i + 1, col)] = -s * x + c * y;
            }
            self.r[(i + 1, i)] = 0.0;
            rotate_cols(&mut self.j, i, i + 1, c, s);
        }
        self.q -= 1;
    }
}

pub(super) fn solve_dual(
    chol: &Cholesky<f64, Dyn>,
    g: &DVector<f64>,
    eq: &[&Row],
    ineq: &[&Row],
    tol: f64,
) -> Result<DualResult, DualFailure> {
    let n = g.len();
    let linv = chol.l().solve_lower_triangular(&DMatrix::identity(n, n)).ok_or(DualFailure::IterationLimit)?;
    let mut f = Factors { j: linv.transpose(), r: DMatrix::zeros(n, n), q: 0 };
    let mut x = chol.solve(&(-g));
    let mut active: Vec<Act> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let tiny = 1e-12;

    for (k, e) in eq.iter().enumerate() {
        let (d, z, r) = f.directions(&e.0);
        let zn = z.dot(&e.0);
        let s = e.0.dot(&x) - e.1;
        if zn <= tiny {
            if s.abs() > tol {
                return Err(DualFailure::Infeasible(s.abs()));
            }
            continue;
        }
        let t = s / zn;
        x -= &z * t;
        for (ui, ri) in u.iter_mut().zip(r.iter()) {
            *ui -= t * ri;
        }
        active.push(Act::Eq(k));
        u.push(t);
        f.add(d);
    }

    let mut is_active = vec![false; ineq.len()];
    let max_iter = 20 * (n + ineq.len() + 10);
    let mut iterations = 0;
    // rows stacked once so the violation scan is a single product
    let a = DMatrix::from_fn(ineq.len(), n, |i, k| ineq[i].0[k]);
    let b = DVector::from_iterator(ineq.len(), ineq.iter().map(|c| c.1));
    let mut slack = DVector::zeros(ineq.len());
    loop {
        slack.gemv(1.0, &a, &x, 0.0);
        slack -= &b;
        let mut pick: Option<(usize, f64)> = None;
        for (i, &s) in slack.iter().enumerate() {
            if s > tol && !is_active[i] && pick.is_none_or(|(_, best)| s > best) {
                pick = Some((i, s));
            }
        }
        let Some((p, _)) = pick else { break };
        let np = &ineq[p].0;
        let mut lam = 0.0;
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(DualFailure::IterationLimit);
            }
            let (d, z, r) = f.directions(np);
            let zn = z.dot(np);
            let s = np.dot(&x) - ineq[p].1;
            let mut t1 = f64::INFINITY;
            let mut block = None;
            for k in 0..active.len() {
                if let Act::In(_) = active[k] {
                    if r[k] > tiny {
                        let ratio = u[k] / r[k];
                        if ratio < t1 {
                            t1 = ratio;
                            block = Some(k);
                        }
                    }
                }
            }
            let t2 = if zn > tiny { (s / zn).max(0.0) } else { f64::INFINITY };
            let t = t1.min(t2);
            if t.is_infinite() {
                return Err(DualFailure::Infeasible(s));
            }
            if t2.is_finite() {
                x -= &z * t;
            }
            for (ui, ri) in u.iter_mut().zip(r.iter()) {
                *ui -= t * ri;
            }
            lam += t;
            if t2 <= t1 {
                active.push(Act::In(p));
                u.push(lam);
                is_active[p] = true;
                f.add(d);
                break;
            }
            let k = block.expect("finite partial step has a blocking constraint");
            if let Act::In(i) = active[k] {
                is_active[i] = false;
            }
            active.remove(k);
            u.remove(k);
            f.remove(k);
        }
    }

    let mut eq_mult = vec![0.0; eq.len()];
    let mut ineq_mult = vec![0.0; ineq.len()];
    for (a, &m) in active.iter().zip(&u) {
        match *a {
            Act::Eq(k) => eq_mult[k] = m,
            Act::In(i) => ineq_mult[i] = m.max(0.0),
        }
    }
    Ok(DualResult { x, eq_mult, ineq_mult, iterations })
}
