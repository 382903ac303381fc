//! Classical phase-space layer.
//!
//! Polynomial observables ([`PolySymbol`]) in canonical coordinates `q_k` and
//! momenta `p_k`, their Poisson bracket, dynamical operators
//! ([`DynOpSymbol`]) built from multiplication and differentiation, the
//! vector field a first-order dynamical operator generates, and a fixed-step
//! RK4 reference integrator.
//!
//! Modes are indexed from zero in the API. Textual output (CSV headers,
//! observable names) numbers them from one.

mod classical;
mod dynop;
mod poly;
mod systems;

pub use classical::{integrate_classical, write_trajectory_csv, ClassicalState, VectorField};
pub use dynop::DynOpSymbol;
pub use poly::{poisson_bracket, random_symbol, MultiIndex, PolySymbol};
pub use systems::{
    dynop_friction_oscillator, harmonic_hamiltonian, leipnik_newton_coefficients, lorenz_coefficients,
    lorenz_type_dynop, rossler_coefficients, FrictionCoefficients,
};
