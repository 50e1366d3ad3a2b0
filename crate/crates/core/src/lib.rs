//! Higher-order operator truncation of nonlinear quantum Langevin equations.
//!
//! The crate builds exact symbolic bosonic algebra ([`algebra`]), assembles
//! linearized Langevin systems from a Hamiltonian and an operator basis
//! ([`assembler`]), ships a catalog of ready-built systems ([`models`]) and
//! evaluates them in the frequency domain ([`spectral`]) and the time domain
//! ([`timedomain`]). Derived quantities live in [`analysis`]; [`verify`]
//! replays reference commutator tables against the engine and a Fock-space
//! oracle.

pub mod algebra;
pub mod analysis;
pub mod assembler;
pub mod error;
pub mod models;
pub mod spectral;
pub mod timedomain;
pub mod verify;

pub use algebra::{
    antinormal_order, commute, mean_field_reduce, normal_order, parse_expr, verify_closure,
    AffineCombination, AlgebraError, BasisSet, Coeff, FockSpace, Ladder, MeanFieldContext, Mode,
    Monomial, OperatorExpr, PairWeight, Rational,
};
pub use error::{Error, Result};
