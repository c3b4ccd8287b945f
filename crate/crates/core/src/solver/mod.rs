//! Dense convex QP and the mixed-integer layer used for corridor assignment.

mod dual;
mod io;
mod linalg;
mod miqp;
mod qp;

pub use io::{dump_miqp, parse_miqp, DumpError};
pub use miqp::{
    enumerate_assignments, solve_miqp, BinaryId, Indicator, MiqpError, MiqpProblem, MiqpSolution, MiqpStatus,
    DEFAULT_NODE_BUDGET, TOL_FEAS,
};
pub use qp::{kkt_residuals, solve_qp, solve_qp_from, QpError, QpProblem, QpSolution, DEFAULT_TOL};
