//! Model-independent bounds for multi-period martingale optimal transport on
//! finitely supported marginals.
//!
//! The dual problem is evaluated by a backward cascade of convex (or concave)
//! envelopes and maximized by subgradient ascent over the static positions
//! `u_2, …, u_n`. The discretized primal is a linear program over martingale
//! couplings; both are exposed so their values can be compared.

pub mod cascade;
pub mod cli;
pub mod cost;
pub mod envelope;
pub mod error;
pub mod generate;
pub mod grid;
pub mod instance;
pub mod lp;
pub mod measures;
pub mod optimizer;
pub mod primal;
pub mod vertex;

pub use cascade::{DualCertificate, DualEvaluator, DualVariables, Variant};
pub use cost::{CostSpec, CostTensor};
pub use envelope::{GridFunction, Orientation};
pub use error::{MotError, Result};
pub use measures::{DiscreteMeasure, MarginalSequence};
pub use primal::{Coupling, PrimalOptions, PrimalSolution, SemiStaticHedge};
