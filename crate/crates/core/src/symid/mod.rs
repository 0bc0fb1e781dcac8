//! Exact derivation of boundary identities for bilinear forms in two
//! Helmholtz fields, and their numerical verification.
//!
//! Vectors `p_a` built from `u`, `v` and `r` are differentiated with a small
//! diagram calculus; collecting `div p_a = sum_b M_ab q_b` over a fixed scalar
//! basis gives a polynomial matrix `M` in `(E_u, E_v, d)`. Inverting it (or
//! solving the transposed system at equal energy) expresses volume integrals
//! of the scalars through boundary fluxes.

pub mod diagram;
pub mod identity;
pub mod poly;
pub mod ratfunc;
pub mod system;
pub mod verify;

pub use diagram::{divergence, Atom, DiagramExpr, Molecule, VectorDiagram};
pub use identity::{EnergyMode, Identity, FLUX_NAMES, SCALAR_NAMES};
pub use poly::Poly;
pub use ratfunc::RatFunc;
pub use system::{
    assemble_m, equal_energy_solve, invert, nullspace, standard_scalars, standard_vectors, CoeffMatrix,
    EqualEnergySolution, RatMatrix,
};
pub use verify::{verify_identity, TrialKind, VerifyGrid};
