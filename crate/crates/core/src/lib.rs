//! Standard-form semidefinite programming by alternating-direction augmented
//! Lagrangian methods.
//!
//! Two outer solvers are provided: [`Method::Adal`], which alternates an exact
//! `y` update with a projection onto the semidefinite cone, and
//! [`Method::Dadal`], which additionally performs a few ascent steps on the
//! augmented Lagrangian with the dual matrix written as `Z = V V^T` before each
//! projection.
//!
//! ```
//! use dadal_core::{instances::{theta_sdp, Graph}, solve, Method, SolverConfig};
//!
//! let problem = theta_sdp(&Graph::cycle(5));
//! let report = solve(&problem, &SolverConfig::with_method(Method::Dadal)).unwrap();
//! let theta = problem.objective_map.apply(report.final_report.primal_obj);
//! assert!((theta - 5f64.sqrt()).abs() < 1e-4);
//! ```

pub mod engine;
pub mod error;
pub mod instances;
pub mod io;
pub mod problem;
pub mod subsolver;
pub mod symmat;

pub use engine::{
    solve, solve_observed, Iterate, IterationRecord, Method, SolveReport, SolveStatus, SolverConfig,
};
pub use error::{Result, SdpError};
pub use problem::{ConstraintMatrix, ConstraintOperator, ResidualReport, SdpProblem};
pub use symmat::{Factor, SymMatrix};
