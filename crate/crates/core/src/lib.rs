//! Discontinuous Galerkin solver for elliptic problems in nonvariational form,
//! `-A : D²u = f` on the unit square, built around a discrete finite element
//! Hessian.
//!
//! The usual entry point is [`analysis::run_study`]:
//!
//! ```no_run
//! use nvdg::analysis::{run_study, StudyOptions};
//! use nvdg::problems::ProblemId;
//!
//! let report = run_study(&ProblemId::Test1.problem(), &StudyOptions::new(1, 3)).unwrap();
//! print!("{}", report.to_markdown());
//! ```

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod femspace;
pub mod hessian;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod projection;

mod blocks;

pub use error::{Error, Result};
