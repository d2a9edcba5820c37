//! Quasimorphism extension machinery on concrete finitely presented groups.
//!
//! The crate is organised bottom-up:
//!
//! * [`word`] and [`group`]: words, presentations and decidable word-problem
//!   strategies (free, free abelian, C'(1/6) quotients, faithful integer
//!   matrix representations, kernels).
//! * [`qm`]: quasimorphism families and empirical defect estimation.
//! * [`relcayley`]: the free product `K * F(X)`, the projections `eta` and
//!   `theta`, penalised pull-backs and finite relative Cayley balls.
//! * [`control`]: control profiles, relator suprema, quasi-splittings and
//!   central-extension distortion.
//! * [`extend`]: the penalised-infimum extension with certified bounds.
//! * [`scl`]: commutator-length search and Bavard-type lower bounds.
//!
//! All values are exact rationals ([`Rat`]). Data-parallel loops go through
//! [`par`], which falls back to sequential iteration when the `parallel`
//! feature is disabled.

pub mod control;
pub mod error;
pub mod extend;
pub mod group;
pub mod par;
pub mod qm;
pub mod rat;
pub mod relcayley;
pub mod scl;
pub mod word;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use rat::Rat;
pub use word::{Alphabet, Letter, Word};
