//! Strong-converse bounds for quantum and classical communication over the
//! quantum erasure channel.
//!
//! The channel delivers its input with probability 1-p and an orthogonal
//! flag state with probability p. For entanglement-generation codes at rates
//! above the quantum capacity (1-2p) log2 d, Rényi relative entropies of
//! order alpha in (1, 2] give computable fidelity bounds; for Haar-random
//! code states the bounds decay exponentially in the number of channel uses,
//! and concentration of measure makes the decay hold for almost all codes.
//!
//! What lives where:
//!
//! - [`states`]: dense multipartite states, partial traces, spectra,
//!   marginal alpha-purities, fidelity, seeded Haar sampling.
//! - [`erasure`]: the channel, its n-fold branch decomposition over erasure
//!   patterns, and both capacity formulas.
//! - [`renyi`]: Rényi/von Neumann relative entropies, the binary-flag
//!   divergence, and the direct (full-output) Rényi coherent information.
//! - [`bounds`]: the per-code fidelity bound, the ensemble expected-fidelity
//!   bound, exponent optimization, Markov/Levy tails, and the classical
//!   success bound.
//! - [`oracle`]: exact optimal-decoder fidelity by per-branch semidefinite
//!   optimization with primal/dual certificates, plus the exhaustive
//!   classical maximum-likelihood oracle.
//! - [`ensemble`]: seeded Monte Carlo over Haar code states, the empirical
//!   operator-norm constant, fraction audits, the Lipschitz check.
//! - [`cli`]: the command-line surface with deterministic JSON/CSV reports.

pub mod bounds;
pub mod cli;
pub mod ensemble;
pub mod erasure;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod renyi;
pub mod rng;
pub mod states;

pub use bounds::{BoundReport, CodeParams, ConstantEstimates, ExponentProfile};
pub use erasure::{BranchDecomposition, ErasureParams, ErasurePattern};
pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use renyi::BinaryFlagDistribution;
pub use states::{DensityMatrix, PureState, SubsystemLayout};
