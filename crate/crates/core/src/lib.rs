//! Numerical toolkit for quasiperiodic Jacobi operators
//! `(Hu)_n = w_n u_{n+1} + conj(w_{n-1}) u_{n-1} + v_n u_n`
//! with possibly vanishing off-diagonal weights.

pub mod cocycle;
pub mod fourier;
pub mod lattice;
pub mod numberkit;
pub mod periodicity;
pub mod spectral;
pub mod transport;
