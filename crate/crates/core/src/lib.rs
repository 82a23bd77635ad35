//! Lie–Schwinger block-diagonalization of finite quantum chains.
//!
//! The crate conjugates a chain Hamiltonian `K_N = Σ H_i + t Σ V_I` by a
//! sequence of local unitaries until it is block-diagonal with respect to the
//! all-vacuum projector, then certifies the ground energy and spectral gap of
//! the result. An independent exact-diagonalization oracle, the Kitaev-chain
//! model builder, and a JSON/CSV run harness sit on top.

pub mod certify;
pub mod chain;
pub mod error;
pub mod linalg;
pub mod kitaev;
pub mod lie_schwinger;
pub mod model;
pub mod oracle;
pub mod par;

pub use chain::{Interval, LocalOperator, ProjectorPair, StepIndex};
pub use error::{Error, Result};
pub use lie_schwinger::{BlockDiagState, SeriesControls, StepDiagnostics};
pub use model::ChainModel;
pub use par::Parallelism;
