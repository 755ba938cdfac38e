//! Dense complex linear algebra over labeled tensor-product spaces.

mod eig;
mod layout;
mod matrix;
mod state;

pub use eig::{hermitian_eig, hermitian_eigvals, min_eigenvalue, HermitianEigen, HERMITIAN_TOL};
pub use layout::{partial_trace, partial_transpose, permute_rows, permute_subsystems, SubsystemLayout};
pub use matrix::{pauli_x, pauli_y, pauli_z, ComplexMatrix, C64, I, ONE, ZERO};
pub use state::{check_density, random_density, StateVector};

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.dagger()
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> crate::Result<ComplexMatrix> {
    a.matmul(b)
}

pub fn frobenius_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> crate::Result<f64> {
    a.frobenius_distance(b)
}
