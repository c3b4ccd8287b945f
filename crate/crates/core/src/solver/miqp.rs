//! Best-first branch and bound over big-M relaxations of indicator
//! constraints `b = 1 ⇒ A x ≤ c` with per-interval covers `Σ b ≥ 1`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::qp::{solve_qp_from, QpError, QpProblem};

pub const DEFAULT_NODE_BUDGET: usize = 20_000;
pub const TOL_FEAS: f64 = 1e-7;
const REGULARISATION: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinaryId {
    pub interval: usize,
    pub poly: usize,
}

/// Rows `A x ≤ c` that must hold when binary `id` is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Indicator {
    pub id: BinaryId,
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
    /// Per-row relaxation constants: `A x − c ≤ M` everywhere in the region of interest.
    pub big_m: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiqpProblem {
    pub base: QpProblem,
    pub indicators: Vec<Indicator>,
    /// Indicator indices grouped per interval; at least one of each group is active.
    pub covers: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MiqpStatus {
    Optimal,
    Infeasible,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiqpSolution {
    /// Continuous optimum; empty when no feasible assignment was found.
    pub x: DVector<f64>,
    /// Chosen polyhedron per interval (cover group order).
    pub assignment: Vec<usize>,
    pub objective: f64,
    pub status: MiqpStatus,
    pub nodes_explored: usize,
}

impl MiqpSolution {
    pub fn has_solution(&self) -> bool {
        !self.assignment.is_empty() && self.x.len() > 0
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MiqpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
}

impl MiqpProblem {
    pub fn validate(&self) -> Result<(), MiqpError> {
        self.base.validate().map_err(|e| MiqpError::Malformed(e.to_string()))?;
        let n = self.base.dim();
        let mut seen = vec![0usize; self.indicators.len()];
        for cover in &self.covers {
            if cover.is_empty() {
                return Err(MiqpError::Malformed("empty cover".into()));
            }
            for &i in cover {
                if i >= self.indicators.len() {
                    return Err(MiqpError::Malformed(format!("cover references indicator {i}")));
                }
                seen[i] += 1;
            }
        }
        if seen.iter().any(|&c| c != 1) {
            return Err(MiqpError::Malformed("every indicator must appear in exactly one cover".into()));
        }
        for ind in &self.indicators {
            if ind.a.ncols() != n || ind.a.nrows() != ind.c.len() || ind.big_m.len() != ind.c.len() {
                return Err(MiqpError::Malformed(format!("indicator {:?} dimensions", ind.id)));
            }
        }
        Ok(())
    }

    /// Largest row violation of indicator `i` at `x`.
    pub fn indicator_violation(&self, i: usize, x: &DVector<f64>) -> f64 {
        let ind = &self.indicators[i];
        (&ind.a * x - &ind.c).iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Largest violation of the base constraints and the assigned indicators.
    pub fn assignment_violation(&self, assignment: &[usize], x: &DVector<f64>) -> f64 {
        let mut v = self.base.violation(x);
        for (cover, &p) in self.covers.iter().zip(assignment) {
            v = v.max(self.indicator_violation(cover[p], x));
        }
        v
    }

    /// QP with exactly the indicators in `active` enforced.
    pub fn activated(&self, active: &[usize]) -> QpProblem {
        let n = self.base.dim();
        let extra: usize = active.iter().map(|&i| self.indicators[i].c.len()).sum();
        let rows = self.base.ain.nrows() + extra;
        let mut a = DMatrix::zeros(rows, n);
        let mut b = DVector::zeros(rows);
        a.rows_mut(0, self.base.ain.nrows()).copy_from(&self.base.ain);
        b.rows_mut(0, self.base.bin.len()).copy_from(&self.base.bin);
        let mut r = self.base.ain.nrows();
        for &i in active {
            let ind = &self.indicators[i];
            a.rows_mut(r, ind.c.len()).copy_from(&ind.a);
            b.rows_mut(r, ind.c.len()).copy_from(&ind.c);
            r += ind.c.len();
        }
        QpProblem { ain: a, bin: b, ..self.base.clone() }
    }

    fn assignment_indices(&self, assignment: &[usize]) -> Vec<usize> {
        self.covers.iter().zip(assignment).map(|(c, &p)| c[p]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fix {
    Free,
    Zero,
    One,
}

struct Node {
    bound: f64,
    seq: usize,
    fixes: Vec<Fix>,
    hint: Option<DVector<f64>>,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // max-heap: smaller bound first, then earlier creation
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.total_cmp(&self.bound).then(o.seq.cmp(&self.seq))
    }
}

struct Relaxation {
    x: DVector<f64>,
    objective: f64,
}

/// Big-M relaxation under `fixes`: variables are x followed by one b per free binary.
fn relax(p: &MiqpProblem, fixes: &[Fix], hint: Option<&DVector<f64>>) -> Result<Option<Relaxation>, QpError> {
    let n = p.base.dim();
    let free: Vec<usize> = (0..fixes.len()).filter(|&i| fixes[i] == Fix::Free).collect();
    let nb = free.len();
    let nv = n + nb;
    let mut col = vec![usize::MAX; fixes.len()];
    for (k, &i) in free.iter().enumerate() {
        col[i] = n + k;
    }
    let mut dense: Vec<DVector<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for r in 0..p.base.ain.nrows() {
        let mut v = DVector::zeros(nv);
        v.rows_mut(0, n).copy_from(&p.base.ain.row(r).transpose());
        dense.push(v);
        rhs.push(p.base.bin[r]);
    }
    for (i, ind) in p.indicators.iter().enumerate() {
        match fixes[i] {
            Fix::Zero => {}
            Fix::One | Fix::Free => {
                for r in 0..ind.c.len() {
                    let mut v = DVector::zeros(nv);
                    v.rows_mut(0, n).copy_from(&ind.a.row(r).transpose());
                    let mut c = ind.c[r];
                    if fixes[i] == Fix::Free {
                        let m = ind.big_m[r].max(0.0);
                        v[col[i]] = m;
                        c += m;
                    }
                    dense.push(v);
                    rhs.push(c);
                }
            }
        }
    }
    for cover in &p.covers {
        if cover.iter().any(|&i| fixes[i] == Fix::One) {
            continue;
        }
        let open: Vec<usize> = cover.iter().copied().filter(|&i| fixes[i] == Fix::Free).collect();
        if open.is_empty() {
            return Ok(None);
        }
        let mut v = DVector::zeros(nv);
        for &i in &open {
            v[col[i]] = -1.0;
        }
        dense.push(v);
        rhs.push(-1.0);
    }
    for k in 0..nb {
        let mut lo = DVector::zeros(nv);
        lo[n + k] = -1.0;
        dense.push(lo);
        rhs.push(0.0);
        let mut hi = DVector::zeros(nv);
        hi[n + k] = 1.0;
        dense.push(hi);
        rhs.push(1.0);
    }
    let mut ain = DMatrix::zeros(dense.len(), nv);
    for (r, v) in dense.iter().enumerate() {
        ain.set_row(r, &v.transpose());
    }
    let mut h = DMatrix::zeros(nv, nv);
    h.view_mut((0, 0), (n, n)).copy_from(&p.base.h);
    // a small curvature on the binaries keeps the problem strictly convex;
    // its largest possible contribution is taken off the bound below
    let scale = p.base.h.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let reg = REGULARISATION * scale;
    for k in 0..nb {
        h[(n + k, n + k)] = reg;
    }
    let mut g = DVector::zeros(nv);
    g.rows_mut(0, n).copy_from(&p.base.g);
    let mut aeq = DMatrix::zeros(p.base.aeq.nrows(), nv);
    aeq.columns_mut(0, n).copy_from(&p.base.aeq);
    let qp = QpProblem { h, g, aeq, beq: p.base.beq.clone(), ain, bin: DVector::from_vec(rhs) };
    let hint_full = hint.map(|x| {
        let mut v = DVector::from_element(nv, 1.0);
        v.rows_mut(0, n).copy_from(x);
        v
    });
    match solve_qp_from(&qp, super::qp::DEFAULT_TOL, hint_full.as_ref()) {
        Ok(s) => Ok(Some(Relaxation { x: s.x.rows(0, n).into_owned(), objective: s.objective - 0.5 * reg * nb as f64 })),
        Err(QpError::Infeasible(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Per-interval polyhedron whose rows `x` satisfies, if every interval has one.
fn integral_assignment(p: &MiqpProblem, fixes: &[Fix], x: &DVector<f64>) -> Option<Vec<usize>> {
    p.covers
        .iter()
        .map(|cover| {
            if let Some(k) = cover.iter().position(|&i| fixes[i] == Fix::One) {
                return Some(k);
            }
            cover.iter().position(|&i| fixes[i] != Fix::Zero && p.indicator_violation(i, x) <= TOL_FEAS)
        })
        .collect()
}

/// Canonical relaxed value of binary `i`: the largest b the rows allow at `x`.
fn relaxed_value(p: &MiqpProblem, i: usize, x: &DVector<f64>) -> f64 {
    let ind = &p.indicators[i];
    let mut u: f64 = 1.0;
    for r in 0..ind.c.len() {
        let viol = ind.a.row(r).transpose().dot(x) - ind.c[r];
        if viol > TOL_FEAS {
            let m = ind.big_m[r].max(viol);
            u = u.min(1.0 - viol / m);
        }
    }
    u.clamp(0.0, 1.0)
}

/// Propagates covers: a cover with a single non-zero binary forces it to one.
fn propagate(p: &MiqpProblem, fixes: &mut [Fix]) -> bool {
    for cover in &p.covers {
        let open: Vec<usize> = cover.iter().copied().filter(|&i| fixes[i] != Fix::Zero).collect();
        match open.len() {
            0 => return false,
            1 => fixes[open[0]] = Fix::One,
            _ => {}
        }
    }
    true
}

struct Incumbent {
    x: DVector<f64>,
    assignment: Vec<usize>,
    objective: f64,
}

fn fixed_qp(p: &MiqpProblem, assignment: &[usize], hint: Option<&DVector<f64>>) -> Option<Incumbent> {
    if assignment.len() != p.covers.len() || p.covers.iter().zip(assignment).any(|(c, &k)| k >= c.len()) {
        return None;
    }
    let qp = p.activated(&p.assignment_indices(assignment));
    solve_qp_from(&qp, super::qp::DEFAULT_TOL, hint)
        .ok()
        .map(|s| Incumbent { x: s.x, assignment: assignment.to_vec(), objective: s.objective })
}

fn prunable(bound: f64, inc: &Option<Incumbent>) -> bool {
    inc.as_ref().is_some_and(|b| bound >= b.objective - 1e-9 * b.objective.abs().max(1.0))
}

pub fn solve_miqp(p: &MiqpProblem, budget: usize, warm: Option<&[usize]>) -> Result<MiqpSolution, MiqpError> {
    p.validate()?;
    let nbin = p.indicators.len();
    let mut incumbent: Option<Incumbent> = None;
    let mut nodes = 0usize;
    if let Some(w) = warm {
        nodes += 1;
        incumbent = fixed_qp(p, w, None);
    }
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut root = vec![Fix::Free; nbin];
    if propagate(p, &mut root) {
        heap.push(Node { bound: f64::NEG_INFINITY, seq, fixes: root, hint: None });
    }
    let mut timed_out = false;
    while let Some(node) = heap.pop() {
        if prunable(node.bound, &incumbent) {
            continue;
        }
        if nodes >= budget {
            timed_out = true;
            break;
        }
        nodes += 1;
        // numerical trouble in a node counts as infeasible
        let Ok(Some(rel)) = relax(p, &node.fixes, node.hint.as_ref()) else {
            continue;
        };
        if prunable(rel.objective, &incumbent) {
            continue;
        }
        if let Some(assign) = integral_assignment(p, &node.fixes, &rel.x) {
            let objective = p.base.objective(&rel.x);
            if !prunable(objective, &incumbent) {
                incumbent = Some(Incumbent { x: rel.x, assignment: assign, objective });
            }
            continue;
        }
        // branch on the binary whose relaxed value is closest to one half
        let mut best: Option<(f64, BinaryId, usize)> = None;
        for cover in &p.covers {
            if cover.iter().any(|&i| node.fixes[i] == Fix::One) {
                continue;
            }
            for &i in cover {
                if node.fixes[i] != Fix::Free {
                    continue;
                }
                let score = (relaxed_value(p, i, &rel.x) - 0.5).abs();
                let id = p.indicators[i].id;
                if best.is_none_or(|(s, bid, _)| score < s || (score == s && id < bid)) {
                    best = Some((score, id, i));
                }
            }
        }
        let Some((_, _, bi)) = best else { continue };
        for value in [Fix::One, Fix::Zero] {
            let mut fixes = node.fixes.clone();
            fixes[bi] = value;
            if !propagate(p, &mut fixes) {
                continue;
            }
            seq += 1;
            heap.push(Node { bound: rel.objective, seq, fixes, hint: Some(rel.x.clone()) });
        }
    }
    let status = match (&incumbent, timed_out) {
        (_, true) => MiqpStatus::Timeout,
        (Some(_), false) => MiqpStatus::Optimal,
        (None, false) => MiqpStatus::Infeasible,
    };
    Ok(match incumbent {
        Some(inc) => MiqpSolution { x: inc.x, assignment: inc.assignment, objective: inc.objective, status, nodes_explored: nodes },
        None => MiqpSolution { x: DVector::zeros(0), assignment: vec![], objective: f64::INFINITY, status, nodes_explored: nodes },
    })
}

/// Exhaustive search over one polyhedron per interval; for testing and tiny instances.
pub fn enumerate_assignments(p: &MiqpProblem) -> Option<(Vec<usize>, f64)> {
    let sizes: Vec<usize> = p.covers.iter().map(|c| c.len()).collect();
    let mut idx = vec![0usize; sizes.len()];
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        if let Some(inc) = fixed_qp(p, &idx, None) {
            if best.as_ref().is_none_or(|b| inc.objective < b.1) {
                best = Some((idx.clone(), inc.objective));
            }
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
