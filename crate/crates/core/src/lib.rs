pub mod error;
pub mod linalg;
pub mod taylor;
pub mod combinatorics;
pub mod symplectic;
pub mod fock;
pub mod generating;
