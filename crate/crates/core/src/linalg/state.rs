use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

pub const NORM_TOL: f64 = 1e-12;

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidState("empty amplitude vector".into()));
        }
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm2}")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes `amplitudes`; fails on the zero vector.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize zero vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// `alpha |00> + sqrt(1 - alpha^2) |11>`
    pub fn schmidt(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidState(format!("Schmidt amplitude {alpha}")));
        }
        let beta = (1.0 - alpha * alpha).max(0.0).sqrt();
        Ok(Self {
            amplitudes: vec![
                C64::new(alpha, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(beta, 0.0),
            ],
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn transformed(&self, u: &ComplexMatrix) -> Result<Self> {
        Self::normalized(u.apply(&self.amplitudes)?)
    }

    /// `<self|m|self>`
    pub fn expectation(&self, m: &ComplexMatrix) -> Result<C64> {
        let mv = m.apply(&self.amplitudes)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&mv)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Checks that `rho` is a density matrix of the given dimension.
pub fn check_density(rho: &ComplexMatrix, dim: usize, tol: f64) -> Result<()> {
    if rho.shape() != (dim, dim) {
        return Err(Error::InvalidState(format!(
            "expected {dim}x{dim} density matrix, got {}x{}",
            rho.rows(),
            rho.cols()
        )));
    }
    if !rho.is_hermitian(tol) {
        return Err(Error::InvalidState("density matrix not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(Error::InvalidState(format!("trace {tr}")));
    }
    let min = super::eig::min_eigenvalue(rho)?;
    if min < -tol {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

/// Random density matrix `G G† / Tr(G G†)` with complex Gaussian `G`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let mut gauss = || -> f64 { StandardNormal.sample(rng) };
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| C64::new(gauss(), gauss()));
    let p = &g * &g.dagger();
    let tr = p.trace().re;
    p.scale_real(1.0 / tr)
}
