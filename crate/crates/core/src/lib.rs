//! Exact-statevector workbench for variational quantum eigensolvers on small
//! molecules: Pauli algebra, Jordan-Wigner mapping, compiled simulation
//! kernels, an FCI reference solver, operator pools, and ground- and
//! excited-state drivers.

pub mod error;
pub mod excited;
pub mod fci;
pub mod fermion;
pub mod optimize;
pub mod pauli;
pub mod pools;
pub mod statevector;
pub mod vqe;

pub use error::{Error, Result};
