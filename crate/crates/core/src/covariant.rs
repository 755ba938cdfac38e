//! The SU(2)⊗SU(2)-covariant operator family.
//!
//! A single party's space `1s ⊗ 2s ⊗ s` (two clone qubits and the input
//! qubit) carries the representation `U ⊗ U ⊗ U*`. It splits into two
//! equivalent spin-1/2 blocks `M1`, `M2` and one spin-3/2 block `M3`. Every
//! Hermitian operator commuting with the action is a real combination of
//!
//! * `T1`, `T2`, `T3`: projectors onto `M1`, `M2`, `M3`,
//! * `T4 = T12 + T21`, `T5 = i T12 - i T21`, with `T12` the intertwiner
//!   `M1 -> M2` and `T21 = T12†`.
//!
//! The Choi operator of a covariant cloner, with factors ordered
//! `(1A, 2A, A, 1B, 2B, B)`, is `Σ a_ij T_i ⊗ T_j`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, partial_transpose, permute_subsystems, ComplexMatrix, StateVector,
    SubsystemLayout, C64, I, ZERO,
};

pub const PARTY_DIM: usize = 8;
pub const CHOI_DIM: usize = 64;

/// Number of Haar samples used to pin down the intertwiner.
pub const DEFAULT_TWIRL_SAMPLES: usize = 200;
pub const DEFAULT_TWIRL_SEED: u64 = 0x5eed_c10e;

pub const PTILDE_ORDER: [&str; 6] = ["1A", "2A", "A", "1B", "2B", "B"];
pub const CHOI_ORDER: [&str; 6] = ["1A", "1B", "2A", "2B", "A", "B"];
pub const B_SIDE: [&str; 3] = ["1B", "2B", "B"];

pub fn ptilde_layout() -> SubsystemLayout {
    SubsystemLayout::qubits(&PTILDE_ORDER).expect("static layout")
}

pub fn choi_layout() -> SubsystemLayout {
    SubsystemLayout::qubits(&CHOI_ORDER).expect("static layout")
}

#[derive(Debug, Clone)]
pub struct InvariantBasis {
    pub m1: [StateVector; 2],
    pub m2: [StateVector; 2],
    pub m3: Vec<StateVector>,
}

fn ket(entries: &[(usize, f64)], norm: f64) -> StateVector {
    let mut amps = vec![ZERO; PARTY_DIM];
    for &(idx, a) in entries {
        amps[idx] = C64::new(a / norm, 0.0);
    }
    StateVector::new(amps).expect("listed vectors are normalized")
}

pub fn build_invariant_basis() -> InvariantBasis {
    let s2 = 2f64.sqrt();
    let s6 = 6f64.sqrt();
    // indices: |xyz> = 4x + 2y + z
    let m1 = [
        ket(&[(0b011, 1.0), (0b101, -1.0)], s2),
        ket(&[(0b010, 1.0), (0b100, -1.0)], s2),
    ];
    let m2 = [
        ket(&[(0b000, 2.0), (0b011, 1.0), (0b101, 1.0)], s6),
        ket(&[(0b010, 1.0), (0b100, 1.0), (0b111, 2.0)], s6),
    ];

    // Gram–Schmidt over the standard basis, in index order.
    let mut frame: Vec<Vec<C64>> = m1
        .iter()
        .chain(m2.iter())
        .map(|s| s.amplitudes().to_vec())
        .collect();
    let mut m3 = Vec::new();
    for e in 0..PARTY_DIM {
        let mut v = StateVector::basis(PARTY_DIM, e).amplitudes().to_vec();
        for _ in 0..2 {
            for f in &frame {
                let overlap: C64 = f.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(f) {
                    *x -= overlap * y;
                }
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            let s = StateVector::normalized(v).expect("nonzero");
            frame.push(s.amplitudes().to_vec());
            m3.push(s);
        }
    }
    debug_assert_eq!(m3.len(), 4);
    InvariantBasis { m1, m2, m3 }
}

impl InvariantBasis {
    pub fn vectors(&self) -> impl Iterator<Item = &StateVector> {
        self.m1.iter().chain(self.m2.iter()).chain(self.m3.iter())
    }

    /// Columns: m1, m2, m3 vectors in order.
    pub fn unitary(&self) -> ComplexMatrix {
        let cols: Vec<&StateVector> = self.vectors().collect();
        ComplexMatrix::from_fn(PARTY_DIM, PARTY_DIM, |i, j| cols[j].amplitudes()[i])
    }

    pub fn gram(&self) -> ComplexMatrix {
        let u = self.unitary();
        &u.dagger() * &u
    }

    pub fn projector_m1(&self) -> ComplexMatrix {
        projector(&self.m1)
    }

    pub fn projector_m2(&self) -> ComplexMatrix {
        projector(&self.m2)
    }

    pub fn projector_m3(&self) -> ComplexMatrix {
        projector(&self.m3)
    }

    fn block(vectors: &[StateVector]) -> ComplexMatrix {
        ComplexMatrix::from_fn(PARTY_DIM, vectors.len(), |i, j| vectors[j].amplitudes()[i])
    }
}

fn projector(vectors: &[StateVector]) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(PARTY_DIM, PARTY_DIM);
    for v in vectors {
        p.add_scaled(C64::new(1.0, 0.0), &v.projector())
            .expect("same shape");
    }
    p
}

/// Haar-random SU(2) element from a normalized Gaussian quaternion.
pub fn random_su2<R: rand::Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    let mut q = [0f64; 4];
    loop {
        for x in q.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            q.iter_mut().for_each(|x| *x /= n);
            break;
        }
    }
    let a = C64::new(q[0], q[1]);
    let b = C64::new(q[2], q[3]);
    ComplexMatrix::new(2, 2, vec![a, -b.conj(), b, a.conj()]).expect("2x2")
}

/// `U ⊗ U ⊗ U*` on one party's `(1s, 2s, s)` space.
pub fn party_action(u: &ComplexMatrix) -> ComplexMatrix {
    u.kron(u).kron(&u.conj())
}

/// Group action on the `(1A, 2A, A, 1B, 2B, B)` ordering.
pub fn local_action(ua: &ComplexMatrix, ub: &ComplexMatrix) -> ComplexMatrix {
    party_action(ua).kron(&party_action(ub))
}

/// Builds the intertwiner `T12: M1 -> M2`.
///
/// The commutation constraint `R2(U) X = X R1(U)` for the 2x2 block
/// representations is stacked over `samples` Haar elements (more are drawn
/// while the solution space is not one-dimensional); the seed operator
/// `|m2_1><m1_1|` is projected onto the joint solution space, which is the
/// group twirl of the seed. The result is normalized to an isometry with
/// `<m2_1|T12|m1_1>` real and non-negative.
pub fn build_intertwiner(basis: &InvariantBasis, samples: usize, seed: u64) -> Result<ComplexMatrix> {
    if samples == 0 {
        return Err(Error::Intertwiner("need at least one Haar sample".into()));
    }
    let b1 = InvariantBasis::block(&basis.m1);
    let b2 = InvariantBasis::block(&basis.m2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Gram matrix of the linear map vec(X) -> vec(R2 X - X R1), X row-major.
    let mut gram = ComplexMatrix::zeros(4, 4);
    let mut drawn = 0;
    let max_draws = samples + 64;
    let null_vector = loop {
        let g = party_action(&random_su2(&mut rng));
        let r1 = &(&b1.dagger() * &g) * &b1;
        let r2 = &(&b2.dagger() * &g) * &b2;
        let mut l = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let row = 2 * i + j;
                for k in 0..2 {
                    // (R2 X)_ij = Σ_k R2_ik X_kj
                    l[(row, 2 * k + j)] += r2[(i, k)];
                    // (X R1)_ij = Σ_k X_ik R1_kj
                    l[(row, 2 * i + k)] -= r1[(k, j)];
                }
            }
        }
        gram.add_scaled(C64::new(1.0, 0.0), &(&l.dagger() * &l))?;
        drawn += 1;
        if drawn < samples {
            continue;
        }
        let eig = hermitian_eig(&gram)?;
        let scale = eig.max().max(1.0);
        if eig.values[0] < 1e-12 * scale && eig.values[1] > 1e-6 * scale {
            break eig.vectors.column(0);
        }
        if drawn >= max_draws {
            return Err(Error::Intertwiner(format!(
                "commutant not one-dimensional after {drawn} samples: {:?}",
                &eig.values[..2]
            )));
        }
    };

    // Seeds |m2_a><m1_b| in turn; retry while the twirl vanishes.
    let seeds = [(0, 0), (1, 1), (0, 1), (1, 0)];
    let mut x = None;
    for (a, b) in seeds {
        let overlap = null_vector[2 * a + b].conj();
        if overlap.norm() > 1e-6 {
            x = Some(
                ComplexMatrix::new(2, 2, null_vector.iter().map(|&z| z * overlap).collect())
                    .expect("2x2"),
            );
            break;
        }
    }
    let x = x.ok_or_else(|| Error::Intertwiner("twirl of every seed vanished".into()))?;

    // Polar normalization: X (X†X)^{-1/2}.
    let xdx = hermitian_eig(&(&x.dagger() * &x))?;
    if xdx.min() <= 1e-12 {
        return Err(Error::Intertwiner("twirled operator is singular".into()));
    }
    let x = &x * &xdx.map(|l| 1.0 / l.sqrt());
    let pivot = if x[(0, 0)].norm() > 1e-8 {
        x[(0, 0)]
    } else {
        *x.as_slice()
            .iter()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("nonempty")
    };
    let x = x.scale(pivot.conj() / pivot.norm());
    Ok(&(&b2 * &x) * &b1.dagger())
}

/// Global sign choice for `T4` (equivalently `T12 -> -T12` in `T4` only).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    Standard,
    FlippedT4,
}

impl SignConvention {
    pub fn describe(self) -> &'static str {
        match self {
            SignConvention::Standard => "T12 phase: <m2_1|T12|m1_1> > 0; T4 = T12 + T21",
            SignConvention::FlippedT4 => "T12 phase: <m2_1|T12|m1_1> > 0; T4 = -(T12 + T21)",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TOperators {
    pub t1: ComplexMatrix,
    pub t2: ComplexMatrix,
    pub t3: ComplexMatrix,
    pub t4: ComplexMatrix,
    pub t5: ComplexMatrix,
    pub t12: ComplexMatrix,
    pub basis: InvariantBasis,
    pub convention: SignConvention,
}

impl TOperators {
    pub fn from_intertwiner(basis: InvariantBasis, t12: ComplexMatrix) -> Self {
        let t1 = basis.projector_m1();
        let t2 = basis.projector_m2();
        let t3 = &(&ComplexMatrix::identity(PARTY_DIM) - &t1) - &t2;
        let t21 = t12.dagger();
        let t4 = &t12 + &t21;
        let t5 = &t12.scale(I) - &t21.scale(I);
        Self {
            t1,
            t2,
            t3,
            t4,
            t5,
            t12,
            basis,
            convention: SignConvention::Standard,
        }
    }

    pub fn build(samples: usize, seed: u64) -> Result<Self> {
        let basis = build_invariant_basis();
        let t12 = build_intertwiner(&basis, samples, seed)?;
        Ok(Self::from_intertwiner(basis, t12))
    }

    pub fn with_convention(mut self, convention: SignConvention) -> Self {
        if convention != self.convention {
            self.t4 = -&self.t4;
            self.convention = convention;
        }
        self
    }

    /// `T_i` for `i` in `1..=5`.
    pub fn get(&self, i: usize) -> &ComplexMatrix {
        match i {
            1 => &self.t1,
            2 => &self.t2,
            3 => &self.t3,
            4 => &self.t4,
            5 => &self.t5,
            _ => panic!("T index {i} out of 1..=5"),
        }
    }

    pub fn all(&self) -> [&ComplexMatrix; 5] {
        [&self.t1, &self.t2, &self.t3, &self.t4, &self.t5]
    }
}

/// Real 5x5 coefficients `a_ij` of `P̃ = Σ a_ij T_i ⊗ T_j`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CovariantParams {
    a: [[f64; 5]; 5],
}

pub const N_PARAMS: usize = 25;

impl CovariantParams {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_matrix(a: [[f64; 5]; 5]) -> Self {
        Self { a }
    }

    /// Row-major: entry `(i, j)` (1-based) sits at `5 (i-1) + (j-1)`.
    pub fn from_vector(v: &[f64]) -> Self {
        assert_eq!(v.len(), N_PARAMS, "covariant parameter vector length");
        let mut a = [[0.0; 5]; 5];
        for (k, &x) in v.iter().enumerate() {
            a[k / 5][k % 5] = x;
        }
        Self { a }
    }

    pub fn to_vector(&self) -> Vec<f64> {
        self.a.iter().flatten().copied().collect()
    }

    /// `a_ij`, 1-based.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i - 1][j - 1]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.a[i - 1][j - 1] = value;
    }

    pub fn with(mut self, i: usize, j: usize, value: f64) -> Self {
        self.set(i, j, value);
        self
    }

    pub fn matrix(&self) -> &[[f64; 5]; 5] {
        &self.a
    }

    /// Labeled nonzero entries, e.g. `("a22", 1.0)`.
    pub fn nonzero_entries(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for i in 1..=5 {
            for j in 1..=5 {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.push((format!("a{i}{j}"), v));
                }
            }
        }
        out
    }

    /// Left-hand side of the trace-preservation equality (must equal 1).
    pub fn trace_functional(&self) -> f64 {
        const W: [f64; 5] = [1.0, 1.0, 2.0, 0.0, 0.0];
        let mut s = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                s += W[i] * W[j] * self.a[i][j];
            }
        }
        s
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_vector()
            .iter()
            .zip(other.to_vector())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `T_i ⊗ T_j` on `(1A, 2A, A, 1B, 2B, B)`, 1-based.
pub fn basis_element(t: &TOperators, i: usize, j: usize) -> ComplexMatrix {
    t.get(i).kron(t.get(j))
}

pub fn assemble_ptilde(a: &CovariantParams, t: &TOperators) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(CHOI_DIM, CHOI_DIM);
    for i in 1..=5 {
        for j in 1..=5 {
            let aij = a.get(i, j);
            if aij != 0.0 {
                p.add_scaled(C64::new(aij, 0.0), &basis_element(t, i, j))
                    .expect("64x64");
            }
        }
    }
    p
}

pub fn reorder_to_choi(ptilde: &ComplexMatrix) -> Result<ComplexMatrix> {
    permute_subsystems(ptilde, &ptilde_layout(), &CHOI_ORDER)
}

pub fn reorder_to_ptilde(choi: &ComplexMatrix) -> Result<ComplexMatrix> {
    permute_subsystems(choi, &choi_layout(), &PTILDE_ORDER)
}

/// Partial transpose on Bob's factors `(1B, 2B, B)` of a `P̃`-ordered operator.
pub fn partial_transpose_b(ptilde: &ComplexMatrix) -> Result<ComplexMatrix> {
    partial_transpose(ptilde, &ptilde_layout(), &B_SIDE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigvals, min_eigenvalue};

    fn ops() -> TOperators {
        TOperators::build(DEFAULT_TWIRL_SAMPLES, DEFAULT_TWIRL_SEED).unwrap()
    }

    #[test]
    fn listed_vectors() {
        let b = build_invariant_basis();
        let v = b.m1[0].amplitudes();
        let h = 0.5f64.sqrt();
        for (k, z) in v.iter().enumerate() {
            let expected = match k {
                0b011 => h,
                0b101 => -h,
                _ => 0.0,
            };
            assert!((z.re - expected).abs() < 1e-15 && z.im == 0.0);
        }
        assert!(b
            .gram()
            .frobenius_distance(&ComplexMatrix::identity(8))
            .unwrap()
            < 1e-14);
        let rest = &(&ComplexMatrix::identity(8) - &b.projector_m1()) - &b.projector_m2();
        assert!(b.projector_m3().frobenius_distance(&rest).unwrap() < 1e-14);
    }

    #[test]
    fn t_algebra() {
        let t = ops();
        let id = ComplexMatrix::identity(8);
        for p in [&t.t1, &t.t2, &t.t3] {
            assert!((p * p).frobenius_distance(p).unwrap() < 1e-12);
            assert!(p.is_hermitian(1e-14));
        }
        assert!((&t.t1 * &t.t2).frobenius_norm() < 1e-12);
        assert!((&t.t1 * &t.t3).frobenius_norm() < 1e-12);
        assert!((&t.t2 * &t.t3).frobenius_norm() < 1e-12);
        assert!((&(&t.t1 + &t.t2) + &t.t3).frobenius_distance(&id).unwrap() < 1e-12);
        assert!((t.t1.trace().re - 2.0).abs() < 1e-12);
        assert!((t.t3.trace().re - 4.0).abs() < 1e-12);

        let sq = &(&t.t4 * &t.t4) + &(&t.t5 * &t.t5);
        let twice = (&t.t1 + &t.t2).scale_real(2.0);
        assert!(sq.frobenius_distance(&twice).unwrap() < 1e-12);
        assert!((&(&t.t4 * &t.t1) * &t.t4).frobenius_distance(&t.t2).unwrap() < 1e-12);
        assert!(t.t5.is_hermitian(1e-14));
        assert!(t.t5.trace().norm() < 1e-12);

        let t21 = t.t12.dagger();
        assert!((&t21 * &t.t12).frobenius_distance(&t.t1).unwrap() < 1e-10);
        assert!((&t.t12 * &t21).frobenius_distance(&t.t2).unwrap() < 1e-10);
        // <m2_1|T12|m1_1>
        let m = t.basis.m2[0].amplitudes();
        let col = t.t12.apply(t.basis.m1[0].amplitudes()).unwrap();
        let z: C64 = m.iter().zip(&col).map(|(a, b)| a.conj() * b).sum();
        assert!(z.im.abs() < 1e-12 && z.re > 0.0, "{z}");
    }

    #[test]
    fn covariance_of_t_operators() {
        let t = ops();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = party_action(&random_su2(&mut rng));
            for ti in t.all() {
                let lhs = &g * ti;
                let rhs = ti * &g;
                assert!(lhs.frobenius_distance(&rhs).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn intertwiner_is_seed_stable() {
        let basis = build_invariant_basis();
        let a = build_intertwiner(&basis, 200, 1).unwrap();
        let b = build_intertwiner(&basis, 200, 2).unwrap();
        assert!(a.frobenius_distance(&b).unwrap() < 1e-8);
        // one sample is topped up internally
        let c = build_intertwiner(&basis, 1, 3).unwrap();
        assert!(a.frobenius_distance(&c).unwrap() < 1e-8);
        assert!(build_intertwiner(&basis, 0, 3).is_err());
    }

    #[test]
    fn ptilde_examples() {
        let t = ops();
        assert_eq!(
            assemble_ptilde(&CovariantParams::zero(), &t).frobenius_norm(),
            0.0
        );
        let bh = CovariantParams::zero().with(2, 2, 1.0);
        let ev = hermitian_eigvals(&assemble_ptilde(&bh, &t)).unwrap();
        for (k, &l) in ev.iter().enumerate() {
            let expected = if k >= 60 { 1.0 } else { 0.0 };
            assert!((l - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn reorder_round_trip_and_spectrum() {
        let t = ops();
        let a = CovariantParams::from_vector(&(0..25).map(|k| (k as f64 * 0.37).sin()).collect::<Vec<_>>());
        let p = assemble_ptilde(&a, &t);
        assert!(p.is_hermitian(1e-12));
        let choi = reorder_to_choi(&p).unwrap();
        assert_eq!(reorder_to_ptilde(&choi).unwrap(), p);
        assert!((choi.trace() - p.trace()).norm() < 1e-12);
        let s1 = hermitian_eigvals(&p).unwrap();
        let s2 = hermitian_eigvals(&choi).unwrap();
        for (x, y) in s1.iter().zip(&s2) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn b_side_transpose_is_coefficientwise() {
        let t = ops();
        let a = CovariantParams::from_vector(&(0..25).map(|k| (k as f64 * 0.91).cos()).collect::<Vec<_>>());
        let pt = partial_transpose_b(&assemble_ptilde(&a, &t)).unwrap();
        let mut direct = ComplexMatrix::zeros(64, 64);
        for i in 1..=5 {
            for j in 1..=5 {
                direct
                    .add_scaled(C64::new(a.get(i, j), 0.0), &t.get(i).kron(&t.get(j).transpose()))
                    .unwrap();
            }
        }
        assert!(pt.frobenius_distance(&direct).unwrap() < 1e-12);
    }

    #[test]
    fn flipping_t4_is_involutive() {
        let t = ops();
        let f = t.clone().with_convention(SignConvention::FlippedT4);
        assert!((&f.t4 + &t.t4).frobenius_norm() < 1e-15);
        let back = f.with_convention(SignConvention::Standard);
        assert_eq!(back.t4, t.t4);
        let _ = min_eigenvalue(&back.t1).unwrap();
    }
}
