//! Hermitian eigensolver: cyclic complex Jacobi rotations.
//!
//! Each rotation first removes the phase of the pivot `a_pq` and then applies
//! the classical real Jacobi rotation, so the combined transform is unitary
//! and the diagonal stays real.

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Relative Hermiticity tolerance accepted before symmetrizing.
pub const HERMITIAN_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 64;

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// `V f(Λ) V†`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| self.vectors[(i, k)] * self.vectors[(j, k)].conj() * fv[k])
                .sum()
        })
    }
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    jacobi(m, true)
}

pub fn hermitian_eigvals(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(jacobi(m, false)?.values)
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigvals(m)?[0])
}

fn jacobi(m: &ComplexMatrix, want_vectors: bool) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigensolve of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let scale = m.frobenius_norm().max(1.0);
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation: defect });
    }
    let n = m.rows();
    let mut a: Vec<C64> = m.hermitian_part().as_slice().to_vec();
    let mut v = if want_vectors {
        ComplexMatrix::identity(n).as_slice().to_vec()
    } else {
        Vec::new()
    };

    let off_norm = |a: &[C64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[i * n + j].norm_sqr();
            }
        }
        (2.0 * s).sqrt()
    };
    let eps = f64::EPSILON * m.frobenius_norm();

    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        if off_norm(&a) <= eps {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                // Skip pivots already negligible relative to the diagonal.
                if r < 1e-3 * f64::EPSILON * (app.abs() + aqq.abs()) {
                    a[p * n + q] = C64::new(0.0, 0.0);
                    a[q * n + p] = C64::new(0.0, 0.0);
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let zeta = (aqq - app) / (2.0 * r);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Q columns: p -> c e_p - s e^{-i phi} e_q, q -> s e_p + c e^{-i phi} e_q
                let sp = phase.conj() * s;
                let cp = phase.conj() * c;

                // A <- A Q
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - akq * sp;
                    a[k * n + q] = akp * s + akq * cp;
                }
                // A <- Q† A
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - aqk * sp.conj();
                    a[q * n + k] = apk * s + aqk * cp.conj();
                }
                a[p * n + q] = C64::new(0.0, 0.0);
                a[q * n + p] = C64::new(0.0, 0.0);
                a[p * n + p] = C64::new(a[p * n + p].re, 0.0);
                a[q * n + q] = C64::new(a[q * n + q].re, 0.0);

                if want_vectors {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp * c - vkq * sp;
                        v[k * n + q] = vkp * s + vkq * cp;
                    }
                }
            }
        }
    }
    if !converged
        && off_norm(&a) > 1e3 * eps.max(f64::EPSILON) {
            return Err(Error::EigenNoConvergence { sweeps: MAX_SWEEPS });
        }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let vectors = if want_vectors {
        ComplexMatrix::from_fn(n, n, |i, j| v[i * n + order[j]])
    } else {
        ComplexMatrix::zeros(1, 1)
    };
    Ok(HermitianEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::{pauli_x, pauli_y};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = ComplexMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        g.hermitian_part()
    }

    #[test]
    fn diagonal_and_pauli() {
        let e = hermitian_eig(&ComplexMatrix::diag_real(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);

        let x = hermitian_eigvals(&pauli_x()).unwrap();
        assert!((x[0] + 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let y = hermitian_eigvals(&pauli_y()).unwrap();
        assert!((y[0] + 1.0).abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
        let r = ComplexMatrix::zeros(2, 3);
        assert!(hermitian_eig(&r).is_err());
    }

    #[test]
    fn random_64_reconstructs() {
        let m = random_hermitian(64, 7);
        let e = hermitian_eig(&m).unwrap();
        let v = &e.vectors;
        let vdv = &v.dagger() * v;
        assert!(vdv.frobenius_distance(&ComplexMatrix::identity(64)).unwrap() < 1e-10);
        let rec = e.map(|x| x);
        assert!(rec.frobenius_distance(&m).unwrap() <= 1e-10 * m.frobenius_norm().max(1.0));
        let sum: f64 = e.values.iter().sum();
        assert!((sum - m.trace().re).abs() < 1e-10 * 64.0);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn degenerate_spectrum() {
        // Projector of rank 3 on C^6 with a random unitary frame.
        let m = random_hermitian(6, 3);
        let e = hermitian_eig(&m).unwrap();
        let proj = e.map(|x| if x > e.values[2] { 1.0 } else { 0.0 });
        let pe = hermitian_eigvals(&proj).unwrap();
        for (k, &l) in pe.iter().enumerate() {
            let expect = if k < 3 { 0.0 } else { 1.0 };
            assert!((l - expect).abs() < 1e-12, "{pe:?}");
        }
    }
}
