//! Branch and bound for mixed-integer nonlinear programs, with homotopy
//! continuation between parent and child node subproblems.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`]: expressions, problems, relaxation, the text format
//! - [`nlp`]: the local continuous solver (augmented Lagrangian over a
//!   bound-constrained quasi-Newton inner loop)
//! - [`homotopy`]: parametric node subproblems and the adaptive step-length
//!   continuation with schedule reuse
//! - [`bnb`]: the best-first tree search in its plain and homotopy variants
//! - [`postcheck`]: revisiting stalled nodes with aggressive continuation
//!   settings
//! - [`bench`]: enumeration oracle, instance generators, comparative reports
//! - [`cli`]: the command-line front end

pub mod model;
pub mod nlp;
pub mod homotopy;
pub mod bnb;
pub mod postcheck;
pub mod bench;
pub mod cli;
