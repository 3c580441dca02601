//! Spectral toolkit for the quantum Rabi model and its N-level
//! generalizations: displaced-Hermite overlaps, Fock-basis operator
//! assembly, Rellich perturbation coefficients and quasimodes, inertia-based
//! eigenvalue counting, Braak interval checks and two-term Weyl asymptotics.

pub mod dd;
pub mod error;
pub mod fock;
pub mod inertia;
pub mod overlaps;
pub mod perturbation;
pub mod quadrature;
pub mod specfun;
pub mod spectral;
pub mod symmat;
pub mod tridiag;
pub mod weyl;

pub use error::{Error, Result};
pub use fock::{BasisDescriptor, Family, ModelSpec, TruncatedOperator};
pub use overlaps::{OverlapMethod, OverlapResult};
pub use perturbation::{FirstOrderSplit, QuasimodeExpansion, RabiParameters};
pub use specfun::{AvoidanceSequence, LaguerreZeroSet, PolynomialConvention};
pub use symmat::SymMatrix;
