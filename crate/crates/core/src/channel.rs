//! Cloning channels in Choi or Kraus form, clone reductions, the local
//! fidelity functional and the linear constraints on `a_ij`.
//!
//! Choi convention: `P_E = Σ_ij E(|i><j|) ⊗ |i><j|` on `(out, in)` with the
//! unnormalized maximally entangled reference, so trace preservation reads
//! `Tr_out P_E = I_in` and `E(ρ) = Tr_in[P_E (I ⊗ ρᵀ)]`.

use crate::analytic::SchmidtAlpha;
use crate::covariant::{basis_element, reorder_to_choi, CovariantParams, TOperators, N_PARAMS};
use crate::covariant::{assemble_ptilde, choi_layout};
use crate::error::{Error, Result};
use crate::linalg::{
    check_density, min_eigenvalue, partial_trace, ComplexMatrix, StateVector, SubsystemLayout,
    C64, ZERO,
};

pub const INPUT_DIM: usize = 4;
pub const OUTPUT_DIM: usize = 16;

pub const OUTPUT_ORDER: [&str; 4] = ["1A", "1B", "2A", "2B"];
pub const CLONE1: [&str; 2] = ["1A", "1B"];
pub const CLONE2: [&str; 2] = ["2A", "2B"];
pub const INPUT: [&str; 2] = ["A", "B"];

const CHANNEL_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-8;

pub fn output_layout() -> SubsystemLayout {
    SubsystemLayout::qubits(&OUTPUT_ORDER).expect("static layout")
}

#[derive(Debug, Clone)]
pub enum CloningChannel {
    /// `P_E` on `(1A, 1B, 2A, 2B, A, B)`.
    Choi(ComplexMatrix),
    /// Operators `(A, B) -> (1A, 1B, 2A, 2B)`, each 16x4.
    Kraus(Vec<ComplexMatrix>),
}

impl CloningChannel {
    pub fn from_params(a: &CovariantParams, t: &TOperators) -> Result<Self> {
        Ok(Self::Choi(reorder_to_choi(&assemble_ptilde(a, t))?))
    }

    pub fn choi(&self) -> Result<ComplexMatrix> {
        match self {
            Self::Choi(p) => Ok(p.clone()),
            Self::Kraus(ks) => kraus_choi(ks),
        }
    }

    /// Checks positivity and trace preservation within `1e-10`.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Choi(p) => {
                let min = min_eigenvalue(p)?;
                if min < -CHANNEL_TOL {
                    return Err(Error::Infeasible(format!(
                        "Choi operator not positive (min eigenvalue {min:.3e})"
                    )));
                }
                let marginal = partial_trace(p, &choi_layout(), &OUTPUT_ORDER)?;
                let dev = marginal.frobenius_distance(&ComplexMatrix::identity(INPUT_DIM))?;
                if dev > CHANNEL_TOL {
                    return Err(Error::Infeasible(format!(
                        "not trace preserving (deviation {dev:.3e})"
                    )));
                }
            }
            Self::Kraus(ks) => {
                let dev = kraus_completeness(ks)?
                    .frobenius_distance(&ComplexMatrix::identity(INPUT_DIM))?;
                if dev > CHANNEL_TOL {
                    return Err(Error::KrausInvariant(format!(
                        "sum K†K deviates from identity by {dev:.3e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Applies the channel without validating the input state.
    pub fn apply_unchecked(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        match self {
            Self::Choi(p) => {
                let rt = ComplexMatrix::identity(OUTPUT_DIM).kron(&rho.transpose());
                let prod = p.matmul(&rt)?;
                partial_trace(&prod, &choi_layout(), &INPUT)
            }
            Self::Kraus(ks) => {
                let mut out = ComplexMatrix::zeros(OUTPUT_DIM, OUTPUT_DIM);
                for k in ks {
                    out.add_scaled(C64::new(1.0, 0.0), &(&(k * rho) * &k.dagger()))?;
                }
                Ok(out)
            }
        }
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_density(rho, INPUT_DIM, CHANNEL_TOL)?;
        self.apply_unchecked(rho)
    }
}

/// `Σ K†K`
pub fn kraus_completeness(ks: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let first = ks
        .first()
        .ok_or_else(|| Error::KrausInvariant("empty Kraus set".into()))?;
    let mut s = ComplexMatrix::zeros(first.cols(), first.cols());
    for k in ks {
        s.add_scaled(C64::new(1.0, 0.0), &(&k.dagger() * k))?;
    }
    Ok(s)
}

/// Choi operator `Σ_k |K_k>><<K_k|` of a Kraus set, `|K>> = Σ_i K|i> ⊗ |i>`.
pub fn kraus_choi(ks: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let first = ks
        .first()
        .ok_or_else(|| Error::KrausInvariant("empty Kraus set".into()))?;
    let (dout, din) = first.shape();
    let n = dout * din;
    let mut p = ComplexMatrix::zeros(n, n);
    for k in ks {
        if k.shape() != (dout, din) {
            return Err(Error::Dimension("Kraus operators of mixed shapes".into()));
        }
        let mut vec = vec![ZERO; n];
        for o in 0..dout {
            for i in 0..din {
                vec[o * din + i] = k[(o, i)];
            }
        }
        p.add_scaled(C64::new(1.0, 0.0), &ComplexMatrix::outer(&vec, &vec))?;
    }
    Ok(p)
}

/// `(ρ1, ρ2)`: the two clone marginals of a `(1A, 1B, 2A, 2B)` state.
pub fn clone_reductions(rho_out: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let layout = output_layout();
    let rho1 = partial_trace(rho_out, &layout, &CLONE2)?;
    let rho2 = partial_trace(rho_out, &layout, &CLONE1)?;
    Ok((rho1, rho2))
}

/// Representative input `alpha |00> + sqrt(1 - alpha^2) |11>`.
pub fn representative_state(alpha: SchmidtAlpha) -> StateVector {
    StateVector::schmidt(alpha.value()).expect("alpha in domain")
}

/// Clone fidelities `(<Φ|ρ1|Φ>, <Φ|ρ2|Φ>)` of the channel on input `phi`.
pub fn clone_fidelities(ch: &CloningChannel, phi: &StateVector) -> Result<(f64, f64)> {
    let out = ch.apply_unchecked(&phi.projector())?;
    let (r1, r2) = clone_reductions(&out)?;
    Ok((phi.expectation(&r1)?.re, phi.expectation(&r2)?.re))
}

/// Local fidelity `<Φ|ρ1|Φ>` on the representative state; fails when the two
/// clones differ by more than `1e-8` in Frobenius norm.
pub fn local_fidelity(ch: &CloningChannel, alpha: SchmidtAlpha) -> Result<f64> {
    local_fidelity_on(ch, &representative_state(alpha))
}

pub fn local_fidelity_on(ch: &CloningChannel, phi: &StateVector) -> Result<f64> {
    let out = ch.apply_unchecked(&phi.projector())?;
    let (r1, r2) = clone_reductions(&out)?;
    let asym = r1.frobenius_distance(&r2)?;
    if asym > SYMMETRY_TOL {
        return Err(Error::SymmetryViolation(asym));
    }
    Ok(phi.expectation(&r1)?.re)
}

/// `f_ij` with `F(a) = Σ f_ij a_ij`, using the clone-averaged fidelity.
pub fn fidelity_coefficients(alpha: SchmidtAlpha, t: &TOperators) -> Result<[[f64; 5]; 5]> {
    let phi = representative_state(alpha);
    let mut f = [[0.0; 5]; 5];
    for i in 1..=5 {
        for j in 1..=5 {
            let ch = CloningChannel::Choi(reorder_to_choi(&basis_element(t, i, j))?);
            let (f1, f2) = clone_fidelities(&ch, &phi)?;
            f[i - 1][j - 1] = 0.5 * (f1 + f2);
        }
    }
    Ok(f)
}

pub fn evaluate_linear(f: &[[f64; 5]; 5], a: &CovariantParams) -> f64 {
    let mut s = 0.0;
    for i in 1..=5 {
        for j in 1..=5 {
            s += f[i - 1][j - 1] * a.get(i, j);
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct Constraints {
    /// Coefficients of the trace-preservation equality, right-hand side 1.
    pub trace_row: Vec<f64>,
    /// Linearly independent clone-symmetry equalities, right-hand side 0.
    pub symmetry_rows: Vec<Vec<f64>>,
}

impl Constraints {
    /// Stacked equality system `E a = b`.
    pub fn system(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rows = vec![self.trace_row.clone()];
        rows.extend(self.symmetry_rows.iter().cloned());
        let mut rhs = vec![1.0];
        rhs.extend(std::iter::repeat_n(0.0, self.symmetry_rows.len()));
        (rows, rhs)
    }

    /// Largest absolute residual of `E a = b`.
    pub fn residual(&self, a: &CovariantParams) -> f64 {
        let v = a.to_vector();
        let (rows, rhs) = self.system();
        rows.iter()
            .zip(rhs)
            .map(|(r, b)| (dot(r, &v) - b).abs())
            .fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Derives the trace-preservation row and the clone-symmetry rows numerically
/// from the basis elements `T_i ⊗ T_j`.
pub fn constraint_matrices(t: &TOperators) -> Result<Constraints> {
    let layout = choi_layout();
    let mut trace_row = vec![0.0; N_PARAMS];
    // columns: one per parameter; rows: real and imaginary parts of every
    // entry of Tr_{2A,2B} P - Tr_{1A,1B} P on (clone, input)
    let mut sym_cols: Vec<Vec<f64>> = Vec::with_capacity(N_PARAMS);
    for i in 1..=5 {
        for j in 1..=5 {
            let choi = reorder_to_choi(&basis_element(t, i, j))?;
            let marginal = partial_trace(&choi, &layout, &OUTPUT_ORDER)?;
            // Tr_out T_i⊗T_j is a multiple of the identity by covariance.
            trace_row[5 * (i - 1) + (j - 1)] = marginal.trace().re / INPUT_DIM as f64;

            let r1 = partial_trace(&choi, &layout, &CLONE2)?;
            let r2 = partial_trace(&choi, &layout, &CLONE1)?;
            let d = &r1 - &r2;
            sym_cols.push(
                d.as_slice()
                    .iter()
                    .flat_map(|z| [z.re, z.im])
                    .collect(),
            );
        }
    }
    let n_rows = sym_cols[0].len();
    let candidate_rows: Vec<Vec<f64>> = (0..n_rows)
        .map(|r| sym_cols.iter().map(|c| c[r]).collect())
        .collect();
    let symmetry_rows = independent_rows(&candidate_rows, 1e-9);
    Ok(Constraints {
        trace_row,
        symmetry_rows,
    })
}

/// Greedy pivoted Gram–Schmidt: keeps the original rows that add a new
/// direction to the span (residual norm above `tol` times the row scale).
pub fn independent_rows(rows: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let scale = rows
        .iter()
        .map(|r| dot(r, r).sqrt())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut remaining: Vec<(usize, Vec<f64>)> = rows.iter().cloned().enumerate().collect();
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let mut picked = Vec::new();
    loop {
        // residuals against current orthonormal set
        let mut best: Option<(usize, f64)> = None;
        for (k, (_, r)) in remaining.iter_mut().enumerate() {
            for q in &ortho {
                let c = dot(q, r);
                r.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
            let n = dot(r, r).sqrt();
            if best.is_none_or(|(_, bn)| n > bn) {
                best = Some((k, n));
            }
        }
        match best {
            Some((k, n)) if n > tol * scale => {
                let (orig, r) = remaining.swap_remove(k);
                ortho.push(r.iter().map(|x| x / n).collect());
                picked.push(orig);
            }
            _ => break,
        }
    }
    picked.sort_unstable();
    picked.into_iter().map(|k| rows[k].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{
        alpha_grid, default_operators, fidelity_bh, fidelity_for, params_for, CloneFamily,
    };
    use crate::linalg::SubsystemLayout;
    use std::f64::consts::FRAC_1_SQRT_2;
    use std::sync::OnceLock;

    fn ops() -> &'static TOperators {
        static T: OnceLock<TOperators> = OnceLock::new();
        T.get_or_init(|| default_operators().unwrap())
    }

    fn a(x: f64) -> SchmidtAlpha {
        SchmidtAlpha::new(x).unwrap()
    }

    #[test]
    fn identity_channel_round_trip() {
        // Single qubit identity: Choi = |Ω><Ω| with |Ω> = |00> + |11>.
        let omega = [C64::new(1.0, 0.0), ZERO, ZERO, C64::new(1.0, 0.0)];
        let choi = ComplexMatrix::outer(&omega, &omega);
        let layout = SubsystemLayout::qubits(&["out", "in"]).unwrap();
        let rho = ComplexMatrix::new(
            2,
            2,
            vec![
                C64::new(0.6, 0.0),
                C64::new(0.2, 0.1),
                C64::new(0.2, -0.1),
                C64::new(0.4, 0.0),
            ],
        )
        .unwrap();
        let prod = &choi * &ComplexMatrix::identity(2).kron(&rho.transpose());
        let out = partial_trace(&prod, &layout, &["in"]).unwrap();
        assert!(out.frobenius_distance(&rho).unwrap() < 1e-15);
    }

    #[test]
    fn bh_on_product_state() {
        let ch = CloningChannel::from_params(
            &params_for(CloneFamily::BuzekHillerySquared, a(0.0)),
            ops(),
        )
        .unwrap();
        ch.validate().unwrap();
        let phi = StateVector::basis(4, 0);
        let out = ch.apply(&phi.projector()).unwrap();
        assert!((out.trace().re - 1.0).abs() < 1e-12);
        let (r1, r2) = clone_reductions(&out).unwrap();
        assert!(r1.frobenius_distance(&r2).unwrap() < 1e-12);
        assert!((phi.expectation(&r1).unwrap().re - 25.0 / 36.0).abs() < 1e-12);
    }

    #[test]
    fn reductions_of_product() {
        let r = StateVector::schmidt(0.3).unwrap().projector();
        let s = StateVector::basis(4, 2).projector();
        let (r1, r2) = clone_reductions(&r.kron(&s)).unwrap();
        assert!(r1.frobenius_distance(&r).unwrap() < 1e-15);
        assert!(r2.frobenius_distance(&s).unwrap() < 1e-15);
    }

    #[test]
    fn family_fidelities_match_formulas() {
        for x in alpha_grid(0.0, FRAC_1_SQRT_2, 21) {
            for fam in CloneFamily::ALL {
                let ch = CloningChannel::from_params(&params_for(fam, a(x)), ops()).unwrap();
                let f = local_fidelity(&ch, a(x)).unwrap();
                let expect = fidelity_for(fam, a(x));
                assert!((f - expect).abs() < 1e-10, "{fam:?} alpha={x}: {f} vs {expect}");
            }
        }
    }

    #[test]
    fn linear_functional() {
        let t = ops();
        for x in [0.0, 0.2, 0.5, FRAC_1_SQRT_2] {
            let f = fidelity_coefficients(a(x), t).unwrap();
            assert!((f[1][1] - fidelity_bh(a(x))).abs() < 1e-12);
            for fam in CloneFamily::ALL {
                let v = evaluate_linear(&f, &params_for(fam, a(x)));
                assert!((v - fidelity_for(fam, a(x))).abs() < 1e-10);
            }
            let p = params_for(CloneFamily::GlobalOptimal, a(x));
            let q = params_for(CloneFamily::LoccOptimal, a(x));
            let sum = CovariantParams::from_vector(
                &p.to_vector().iter().zip(q.to_vector()).map(|(u, v)| u + v).collect::<Vec<_>>(),
            );
            let lhs = evaluate_linear(&f, &sum);
            assert!((lhs - evaluate_linear(&f, &p) - evaluate_linear(&f, &q)).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_row_matches_printed_equality() {
        let c = constraint_matrices(ops()).unwrap();
        let expected = [1.0, 1.0, 2.0, 1.0, 1.0, 2.0, 2.0, 2.0, 4.0];
        for i in 0..5 {
            for j in 0..5 {
                let e = if i < 3 && j < 3 { expected[3 * i + j] } else { 0.0 };
                assert!((c.trace_row[5 * i + j] - e).abs() < 1e-12, "({i},{j})");
            }
        }
        for x in alpha_grid(0.0, FRAC_1_SQRT_2, 11) {
            for fam in CloneFamily::ALL {
                assert!(c.residual(&params_for(fam, a(x))) < 1e-12, "{fam:?} {x}");
            }
        }
        assert!(!c.symmetry_rows.is_empty());
    }

    #[test]
    fn asymmetric_channel_is_rejected() {
        // a_14 alone breaks the clone symmetry.
        let p = CovariantParams::zero().with(2, 2, 1.0).with(1, 4, 0.25);
        let c = constraint_matrices(ops()).unwrap();
        assert!(c.residual(&p) > 1e-3);
        let ch = CloningChannel::from_params(&p, ops()).unwrap();
        assert!(matches!(
            local_fidelity(&ch, a(0.5)),
            Err(Error::SymmetryViolation(_))
        ));
    }

    #[test]
    fn independent_rows_drops_duplicates() {
        let rows = vec![
            vec![1.0, 0.0, 0.0],
            vec![2.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0],
        ];
        assert_eq!(independent_rows(&rows, 1e-9).len(), 2);
    }
}
