//! One-way LOCC realization of the optimal PPT cloner.
//!
//! Alice measures a four-outcome POVM `{M_i ⊗ I}` that also writes her two
//! clone qubits, sends one bit (`i ∈ {2, 4}`), and Bob applies
//! `{√2 M_1, √2 M_3}` or `{√2 M_2, √2 M_4}` accordingly. The product Kraus
//! operators `K = √2 M_a ⊗ M_b` reproduce the covariant LOCC family.
//!
//! Each `M_i` maps one input qubit to the clone pair `(1X, 2X)`, rows in the
//! order `|00>, |01>, |10>, |11>`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytic::{alpha_critical, params_for, CloneFamily, SchmidtAlpha};
use crate::channel::{clone_reductions, kraus_choi, CloningChannel, INPUT_DIM, OUTPUT_DIM, OUTPUT_ORDER};
use crate::covariant::reorder_to_ptilde;
use crate::error::{Error, Result};
use crate::linalg::{check_density, permute_rows, ComplexMatrix, SubsystemLayout, C64};

const KRAUS_TOL: f64 = 1e-12;
const STATE_TOL: f64 = 1e-10;
/// Branches below this probability are not reported.
const NEGLIGIBLE: f64 = 1e-14;

/// Alice's outcome pairs `(a, b)` of `K = √2 M_a ⊗ M_b`, in `K_1..K_8` order.
pub const KRAUS_PAIRS: [(usize, usize); 8] = [
    (1, 1),
    (1, 3),
    (3, 1),
    (3, 3),
    (2, 2),
    (2, 4),
    (4, 2),
    (4, 4),
];

/// Output order of the product operators before regrouping into clones.
const LOCAL_ORDER: [&str; 4] = ["1A", "2A", "1B", "2B"];

#[derive(Debug, Clone)]
pub struct LocalKrausSet {
    w: f64,
    v: f64,
    m: [ComplexMatrix; 4],
    /// `K_1..K_8` on `(1A, 1B, 2A, 2B) <- (A, B)`.
    k: Vec<ComplexMatrix>,
}

impl LocalKrausSet {
    /// Builds the set from `w`, `v` directly and checks its invariants.
    pub fn from_wv(w: f64, v: f64) -> Result<Self> {
        let m = m_matrices(w, v);
        let layout = SubsystemLayout::qubits(&LOCAL_ORDER)?;
        let s2 = C64::new(2f64.sqrt(), 0.0);
        let k = KRAUS_PAIRS
            .iter()
            .map(|&(a, b)| {
                let local = m[a - 1].kron(&m[b - 1]).scale(s2);
                permute_rows(&local, &layout, &OUTPUT_ORDER)
            })
            .collect::<Result<Vec<_>>>()?;
        let ks = Self { w, v, m, k };
        ks.check()?;
        Ok(ks)
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    /// `M_i`, 1-based.
    pub fn m(&self, i: usize) -> &ComplexMatrix {
        &self.m[i - 1]
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.k
    }

    pub fn channel(&self) -> CloningChannel {
        CloningChannel::Kraus(self.k.clone())
    }

    /// Bob's operators for a given bit, paired with their `M` index.
    pub fn bob_set(&self, bit: u8) -> [(usize, ComplexMatrix); 2] {
        let s2 = C64::new(2f64.sqrt(), 0.0);
        let (p, q) = if bit == 0 { (1, 3) } else { (2, 4) };
        [(p, self.m(p).scale(s2)), (q, self.m(q).scale(s2))]
    }

    /// `Σ M_i†M_i`, `M_1†M_1 + M_3†M_3`, `M_2†M_2 + M_4†M_4` and `Σ K†K`,
    /// each compared with its target.
    pub fn invariant_defects(&self) -> Result<[f64; 4]> {
        let gram = |i: usize| self.m(i).dagger().matmul(self.m(i));
        let i2 = ComplexMatrix::identity(2);
        let half = i2.scale_real(0.5);
        let mut all = ComplexMatrix::zeros(2, 2);
        for i in 1..=4 {
            all = &all + &gram(i)?;
        }
        let odd = &gram(1)? + &gram(3)?;
        let even = &gram(2)? + &gram(4)?;
        let kk = crate::channel::kraus_completeness(&self.k)?;
        Ok([
            all.frobenius_distance(&i2)?,
            odd.frobenius_distance(&half)?,
            even.frobenius_distance(&half)?,
            kk.frobenius_distance(&ComplexMatrix::identity(INPUT_DIM))?,
        ])
    }

    pub fn check(&self) -> Result<()> {
        let names = ["Σ M†M = I", "M1†M1 + M3†M3 = I/2", "M2†M2 + M4†M4 = I/2", "Σ K†K = I"];
        for (name, d) in names.iter().zip(self.invariant_defects()?) {
            if d > KRAUS_TOL {
                return Err(Error::KrausInvariant(format!("{name} off by {d:.3e}")));
            }
        }
        Ok(())
    }
}

fn m_matrices(w: f64, v: f64) -> [ComplexMatrix; 4] {
    let col = |c0: [f64; 4], c1: [f64; 4]| {
        ComplexMatrix::from_fn(4, 2, |r, c| C64::new(if c == 0 { c0[r] } else { c1[r] }, 0.0))
    };
    let (lo, hi) = (w / 2.0 - v, w / 2.0 + v);
    [
        col([w, 0.0, 0.0, 0.0], [0.0, lo, hi, 0.0]),
        col([w, 0.0, 0.0, 0.0], [0.0, hi, lo, 0.0]),
        col([0.0, hi, lo, 0.0], [0.0, 0.0, 0.0, w]),
        col([0.0, lo, hi, 0.0], [0.0, 0.0, 0.0, w]),
    ]
}

/// The local Kraus set of the optimal LOCC cloner at `alpha`; at or below the
/// threshold this is the `v = 0` Bužek–Hillery product.
pub fn build_kraus(alpha: SchmidtAlpha) -> Result<LocalKrausSet> {
    if alpha.value() <= alpha_critical() {
        return LocalKrausSet::from_wv(1.0 / 3f64.sqrt(), 0.0);
    }
    let a = params_for(CloneFamily::LoccOptimal, alpha);
    let w = a.get(2, 2).powf(0.25) / 3f64.sqrt();
    let v = a.get(1, 1).powf(0.25) / 2.0;
    LocalKrausSet::from_wv(w, v)
}

/// Choi operator of `Σ K ρ K†` in the `(1A, 2A, A, 1B, 2B, B)` ordering.
pub fn kraus_to_choi(ks: &LocalKrausSet) -> Result<ComplexMatrix> {
    reorder_to_ptilde(&kraus_choi(&ks.k)?)
}

#[derive(Debug, Clone)]
pub struct ProtocolTranscript {
    /// 1..4
    pub alice_outcome: usize,
    /// 0 for Alice outcomes 1, 3 and 1 for 2, 4.
    pub classical_bit: u8,
    /// Index of the `M` Bob applied: 1 or 3 on bit 0, 2 or 4 on bit 1.
    pub bob_outcome: usize,
    pub joint_probability: f64,
    /// Normalized output on `(1A, 1B, 2A, 2B)`.
    pub post_state: ComplexMatrix,
    /// `(Tr ρ ρ1 + Tr ρ ρ2) / 2` for this branch.
    pub clone_fidelity: f64,
}

pub fn classical_bit(alice_outcome: usize) -> u8 {
    u8::from(alice_outcome.is_multiple_of(2))
}

/// Enumerates every measurement branch of the protocol on `rho`.
pub fn run_protocol_exact(alpha: SchmidtAlpha, rho: &ComplexMatrix) -> Result<Vec<ProtocolTranscript>> {
    check_density(rho, INPUT_DIM, STATE_TOL)?;
    let ks = build_kraus(alpha)?;
    let layout = SubsystemLayout::qubits(&LOCAL_ORDER)?;
    let mut out = Vec::with_capacity(8);
    for alice in 1..=4 {
        let bit = classical_bit(alice);
        for (bob, mb) in ks.bob_set(bit) {
            let k = permute_rows(&ks.m(alice).kron(&mb), &layout, &OUTPUT_ORDER)?;
            let unnorm = &(&k * rho) * &k.dagger();
            let p = unnorm.trace().re;
            if p <= NEGLIGIBLE {
                continue;
            }
            let post_state = unnorm.scale_real(1.0 / p);
            let clone_fidelity = clone_fidelity(rho, &post_state)?;
            out.push(ProtocolTranscript {
                alice_outcome: alice,
                classical_bit: bit,
                bob_outcome: bob,
                joint_probability: p,
                post_state,
                clone_fidelity,
            });
        }
    }
    Ok(out)
}

/// `(Tr ρ ρ1 + Tr ρ ρ2) / 2` for an output on `(1A, 1B, 2A, 2B)`.
pub fn clone_fidelity(rho_in: &ComplexMatrix, rho_out: &ComplexMatrix) -> Result<f64> {
    let (r1, r2) = clone_reductions(rho_out)?;
    let f1 = rho_in.matmul(&r1)?.trace().re;
    let f2 = rho_in.matmul(&r2)?.trace().re;
    Ok((f1 + f2) / 2.0)
}

/// Probability-weighted average output of the branches.
pub fn average_state(branches: &[ProtocolTranscript]) -> Result<ComplexMatrix> {
    let mut acc = ComplexMatrix::zeros(OUTPUT_DIM, OUTPUT_DIM);
    for b in branches {
        acc.add_scaled(C64::new(b.joint_probability, 0.0), &b.post_state)?;
    }
    Ok(acc)
}

pub fn average_fidelity(branches: &[ProtocolTranscript]) -> f64 {
    branches
        .iter()
        .map(|b| b.joint_probability * b.clone_fidelity)
        .sum()
}

/// Monte Carlo run: draws `trials` branches with a seeded generator and
/// returns the mean clone fidelity with its standard error.
pub fn run_protocol_sampled(
    alpha: SchmidtAlpha,
    rho: &ComplexMatrix,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::Dimension("at least one trial is required".into()));
    }
    let branches = run_protocol_exact(alpha, rho)?;
    let weights: Vec<f64> = branches.iter().map(|b| b.joint_probability).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::KrausInvariant(format!("branch probabilities: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..trials {
        let f = branches[dist.sample(&mut rng)].clone_fidelity;
        sum += f;
        sum2 += f * f;
    }
    let n = trials as f64;
    let mean = sum / n;
    let stderr = if trials > 1 {
        let var = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok((mean, stderr))
}

/// Dilation isometries restricted to the domain `|x, 0, a_1>`, `x ∈ {0, 1}`.
#[derive(Debug, Clone)]
pub struct Dilations {
    /// 16x2 on `(1A, 2A, aA)` with a four-level ancilla.
    pub u_a: ComplexMatrix,
    /// 8x2 on `(1B, 2B, aB)`, bit 0.
    pub u_b_plus: ComplexMatrix,
    /// 8x2 on `(1B, 2B, aB)`, bit 1.
    pub u_b_minus: ComplexMatrix,
}

/// `Σ_k ops[k] ⊗ |a_k>`, stacked so the ancilla is the last factor.
fn stack_ancilla(ops: &[ComplexMatrix]) -> ComplexMatrix {
    let d = ops.len();
    let (rows, cols) = ops[0].shape();
    ComplexMatrix::from_fn(rows * d, cols, |r, c| ops[r % d][(r / d, c)])
}

pub fn build_dilations(ks: &LocalKrausSet) -> Result<Dilations> {
    ks.check()?;
    let u_a = stack_ancilla(&ks.m);
    let [(_, p1), (_, p3)] = ks.bob_set(0);
    let [(_, m2), (_, m4)] = ks.bob_set(1);
    Ok(Dilations {
        u_a,
        u_b_plus: stack_ancilla(&[p1, p3]),
        u_b_minus: stack_ancilla(&[m2, m4]),
    })
}

/// `(I ⊗ <a_k|) u` for an isometry whose last factor is an ancilla of
/// dimension `ancilla_dim`.
pub fn project_ancilla(u: &ComplexMatrix, ancilla_dim: usize, k: usize) -> Result<ComplexMatrix> {
    if ancilla_dim == 0 || !u.rows().is_multiple_of(ancilla_dim) || k >= ancilla_dim {
        return Err(Error::Dimension(format!(
            "cannot project ancilla level {k} of {ancilla_dim} from {} rows",
            u.rows()
        )));
    }
    let rows = u.rows() / ancilla_dim;
    Ok(ComplexMatrix::from_fn(rows, u.cols(), |r, c| {
        u[(r * ancilla_dim + k, c)]
    }))
}

/// `|u†u - I|_F`
pub fn isometry_defect(u: &ComplexMatrix) -> Result<f64> {
    u.dagger()
        .matmul(u)?
        .frobenius_distance(&ComplexMatrix::identity(u.cols()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{default_operators, fidelity_bh, fidelity_locc};
    use crate::channel::representative_state;
    use crate::covariant::{assemble_ptilde, partial_transpose_b, TOperators};
    use crate::linalg::{min_eigenvalue, random_density, StateVector};
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
    fn kraus_parameters_at_maximal_entanglement() {
        let ks = build_kraus(SchmidtAlpha::max()).unwrap();
        assert!((ks.v() - 0.25).abs() < 1e-15);
        assert!((ks.w() - 0.5).abs() < 1e-15);
        for d in ks.invariant_defects().unwrap() {
            assert!(d < 1e-14, "{d}");
        }
    }

    #[test]
    fn printed_layouts() {
        let ks = build_kraus(a(0.6)).unwrap();
        let (w, v) = (ks.w(), ks.v());
        let m3 = ks.m(3);
        assert_eq!(m3[(1, 0)].re, w / 2.0 + v);
        assert_eq!(m3[(2, 0)].re, w / 2.0 - v);
        assert_eq!(m3[(3, 1)].re, w);
        assert_eq!(m3[(0, 0)].re, 0.0);
        assert_eq!(ks.m(2)[(1, 1)].re, w / 2.0 + v);
        assert_eq!(ks.kraus().len(), 8);
        assert!(ks.kraus().iter().all(|k| k.shape() == (16, 4)));
    }

    #[test]
    fn below_threshold_is_bh_product() {
        let ks = build_kraus(a(0.2)).unwrap();
        assert_eq!(ks.v(), 0.0);
        assert_eq!(ks.m(1), ks.m(2));
        assert_eq!(ks.m(3), ks.m(4));
        let bh = assemble_ptilde(&params_for(CloneFamily::BuzekHillerySquared, a(0.2)), ops());
        let d = kraus_to_choi(&ks).unwrap().frobenius_distance(&bh).unwrap();
        assert!(d < 1e-10, "{d}");
        assert_eq!(ks.bob_set(0)[0].1, ks.bob_set(1)[0].1);
    }

    #[test]
    fn choi_matches_locc_family() {
        for x in [0.4, 0.5, 0.6, FRAC_1_SQRT_2] {
            let ks = build_kraus(a(x)).unwrap();
            let p = kraus_to_choi(&ks).unwrap();
            let target = assemble_ptilde(&params_for(CloneFamily::LoccOptimal, a(x)), ops());
            let d = p.frobenius_distance(&target).unwrap();
            assert!(d <= 1e-10, "alpha {x}: {d}");
            let pt = partial_transpose_b(&p).unwrap();
            assert!(min_eigenvalue(&pt).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn kraus_and_choi_channels_agree() {
        let ks = build_kraus(a(0.55)).unwrap();
        let kr = ks.channel();
        let ch = CloningChannel::Choi(kr.choi().unwrap());
        for i in 0..4 {
            for j in 0..4 {
                let e = ComplexMatrix::from_fn(4, 4, |r, c| {
                    C64::new(f64::from(u8::from(r == i && c == j)), 0.0)
                });
                let d = kr
                    .apply_unchecked(&e)
                    .unwrap()
                    .frobenius_distance(&ch.apply_unchecked(&e).unwrap())
                    .unwrap();
                assert!(d < 1e-12);
            }
        }
    }

    #[test]
    fn bell_input_gives_five_eighths() {
        let bell = representative_state(SchmidtAlpha::max()).projector();
        let br = run_protocol_exact(SchmidtAlpha::max(), &bell).unwrap();
        let total: f64 = br.iter().map(|b| b.joint_probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((average_fidelity(&br) - 0.625).abs() < 1e-12);
        for b in &br {
            assert_eq!(b.classical_bit, classical_bit(b.alice_outcome));
            let allowed = if b.classical_bit == 0 { [1, 3] } else { [2, 4] };
            assert!(allowed.contains(&b.bob_outcome));
        }
        let prob = |al: usize, bo: usize| {
            br.iter()
                .find(|b| b.alice_outcome == al && b.bob_outcome == bo)
                .map_or(0.0, |b| b.joint_probability)
        };
        assert!((prob(1, 1) - prob(2, 2)).abs() < 1e-14);
        assert!((prob(3, 3) - prob(4, 4)).abs() < 1e-14);
        assert!((prob(1, 3) - prob(2, 4)).abs() < 1e-14);
    }

    #[test]
    fn product_input_in_bh_limit() {
        let rho = StateVector::basis(4, 3).projector();
        let br = run_protocol_exact(a(0.0), &rho).unwrap();
        assert!((average_fidelity(&br) - 25.0 / 36.0).abs() < 1e-12);
    }

    #[test]
    fn exact_average_matches_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for x in [0.2, 0.45, FRAC_1_SQRT_2] {
            let ch = build_kraus(a(x)).unwrap().channel();
            for _ in 0..10 {
                let rho = random_density(&mut rng, 4);
                let br = run_protocol_exact(a(x), &rho).unwrap();
                let avg = average_state(&br).unwrap();
                let d = avg.frobenius_distance(&ch.apply(&rho).unwrap()).unwrap();
                assert!(d < 1e-12, "{d}");
                let (r1, r2) = clone_reductions(&avg).unwrap();
                assert!(r1.frobenius_distance(&r2).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn fidelity_on_representative_state() {
        for x in [0.1, 0.3, 0.4, 0.65] {
            let rho = representative_state(a(x)).projector();
            let br = run_protocol_exact(a(x), &rho).unwrap();
            assert!((average_fidelity(&br) - fidelity_locc(a(x))).abs() < 1e-12);
        }
        assert_eq!(fidelity_locc(a(0.1)), fidelity_bh(a(0.1)));
    }

    #[test]
    fn sampled_estimate() {
        let bell = representative_state(SchmidtAlpha::max()).projector();
        let (f, se) = run_protocol_sampled(SchmidtAlpha::max(), &bell, 100_000, 1).unwrap();
        assert!((f - 0.625).abs() <= 3.0 * se.max(1e-15), "{f} ± {se}");
        let again = run_protocol_sampled(SchmidtAlpha::max(), &bell, 100_000, 1).unwrap();
        assert_eq!((f.to_bits(), se.to_bits()), (again.0.to_bits(), again.1.to_bits()));
        let (one, _) = run_protocol_sampled(a(0.5), &bell, 1, 3).unwrap();
        assert!((0.0..=1.0).contains(&one));
        assert!(run_protocol_sampled(a(0.5), &bell, 0, 3).is_err());
    }

    #[test]
    fn invalid_input_rejected() {
        let bad = ComplexMatrix::identity(4);
        assert!(run_protocol_exact(a(0.5), &bad).is_err());
    }

    #[test]
    fn dilations() {
        let ks = build_kraus(SchmidtAlpha::max()).unwrap();
        let d = build_dilations(&ks).unwrap();
        assert_eq!(d.u_a.shape(), (16, 2));
        assert_eq!(d.u_b_plus.shape(), (8, 2));
        for u in [&d.u_a, &d.u_b_plus, &d.u_b_minus] {
            assert!(isometry_defect(u).unwrap() < 1e-12);
        }
        for i in 0..4 {
            assert_eq!(&project_ancilla(&d.u_a, 4, i).unwrap(), ks.m(i + 1));
        }
        let s2 = C64::new(2f64.sqrt(), 0.0);
        let pairs = [(&d.u_b_plus, [1, 3]), (&d.u_b_minus, [2, 4])];
        for (u, idx) in pairs {
            for (k, i) in idx.into_iter().enumerate() {
                let p = project_ancilla(u, 2, k).unwrap();
                assert!(p.frobenius_distance(&ks.m(i).scale(s2)).unwrap() < 1e-15);
            }
        }
        // <a3| U_A |0>: (w/2 + v)|01> + (w/2 - v)|10>
        let col = project_ancilla(&d.u_a, 4, 2).unwrap();
        let (w, v) = (ks.w(), ks.v());
        assert_eq!(col[(1, 0)].re, w / 2.0 + v);
        assert_eq!(col[(2, 0)].re, w / 2.0 - v);
        assert!(project_ancilla(&d.u_a, 3, 0).is_err());
    }

    #[test]
    fn off_family_set_is_rejected() {
        assert!(matches!(
            LocalKrausSet::from_wv(0.5, 0.2),
            Err(Error::KrausInvariant(_))
        ));
    }
}
