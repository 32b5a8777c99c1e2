//! Truncated Fock-space calculus for the Gaussian environment: graded
//! vectors, the generator's building blocks, operator-norm scans and the
//! resolvent variance formula.

pub mod analysis;
pub mod generator;
pub mod grid;
pub mod krylov;
pub mod ops;
pub mod space;

pub use analysis::{kv_variance, norm_growth_scan, resolvent_sigma2, KvReport, NormTable, ResolventOptions};
pub use generator::Generator;
pub use grid::{GridKind, MomentumGrid};
pub use space::{FockSpace, GradedVector};
