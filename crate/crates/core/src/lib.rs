//! Exact computation and event-driven simulation for exchangeable
//! distinguished coalescents, their dual flows of partitions, and the
//! generalized Fleming-Viot processes with immigration (GFVI) embedded in them.
//!
//! The crate is organised bottom-up:
//!
//! * [`partition`]: distinguished partitions, `coag`, ancestor maps, paint-boxes.
//! * [`measure`]: coagulation measures `(c0, c1, nu)` and their jump rates.
//! * [`coalescent`]: Poisson event logs, backward and forward (dual) folds.
//! * [`gfvi`]: typed lookdown populations and empirical type measures.
//! * [`exact`]: enumeration of small partition spaces, rate matrices,
//!   semigroups, duality functionals and both forms of the generator.
//! * [`harness`]: Monte Carlo versus exact comparisons.
//! * [`cdi`]: coming down from infinity, extinction criteria, fixation bounds.

pub mod cdi;
pub mod coalescent;
pub mod error;
pub mod exact;
pub mod functional;
pub mod gfvi;
pub mod harness;
pub mod law;
pub mod measure;
pub mod partition;
pub mod quad;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use functional::{Factor, MomentFunctional};
pub use law::AtomicMeasure;
pub use measure::{CoagulationMeasure, MeasureSpec};
pub use partition::{DistinguishedPartition, MassPartition};
