//! Quantum computation by dynamic invariants.
//!
//! A computation is specified by an invariant schedule I(s) whose ground
//! state at s = 0 is easy to prepare and whose ground state at s = 1 encodes
//! the answer. Any Hamiltonian satisfying `∂I/∂s + iT[H, I] = 0` then carries
//! the initial state to the answer exactly, for any total time T.
//!
//! * [`linalg`]: dense complex vectors and operators.
//! * [`pauli`]: Pauli strings, sums and bracket-closed bases.
//! * [`invariant`]: invariant schedules, residual and spectrum checks.
//! * [`synth`]: Hamiltonian synthesis and diagnostics.
//! * [`evolve`]: propagation, ground-state tracking and phase prediction.
//! * [`algorithms`]: Deutsch-Jozsa and Grover builders.

pub mod algorithms;
pub mod csvout;
pub mod error;
pub mod evolve;
pub mod invariant;
pub mod linalg;
pub mod numeric;
pub mod pauli;
pub mod synth;

pub use error::{Error, Result};
pub use linalg::{ComplexVector, DenseOperator, C64};
pub use pauli::{PauliBasis, PauliString, PauliSum};
