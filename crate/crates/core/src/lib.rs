//! Exact and effective dynamics of two-mode second-harmonic generation.
//!
//! The interaction `g (a² b† + a†² b)` conserves `N = a†a + k b†b`, so the
//! Hamiltonian splits into small real symmetric tridiagonal blocks, one per
//! value of `N`. Each block is diagonalized once and states are propagated by
//! phases, which keeps long dispersive runs (`gt ~ 10²`) exact.
//!
//! Units are `ħ = g = 1`: energies are in units of `g`, time is `gt`, the
//! detuning is `Δ/g` and the Kerr strength is `λ/g = g/Δ`.
//!
//! Module map:
//!
//! - [`fock`]: coherent amplitudes, truncation, sector bases and blocked states.
//! - [`hamiltonian`]: sector blocks and the diagonal effective forms.
//! - [`linalg`]: tridiagonal (production) and Jacobi (oracle) eigensolvers.
//! - [`evolution`]: spectral, effective and closed-form propagation.
//! - [`observables`]: partial trace, Q function, cats, fidelity, variances.

pub mod error;
pub mod evolution;
pub mod fock;
pub mod hamiltonian;
pub mod linalg;
pub mod observables;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
