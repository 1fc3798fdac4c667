//! Local-unitary equivalence of multi-qubit states through Bloch tensor
//! invariants.

pub mod bloch;
pub mod decide;
pub mod invariants;
pub mod linalg;
pub mod qstate;
pub mod words;
