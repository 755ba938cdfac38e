//! Semidefinite program over the covariant parameters `a_ij`.
//!
//! maximize `c·x` subject to `E x = b` and `C_k(x) ⪰ 0` for every cone, where
//! each cone is a linear map `x -> Σ x_i A_i` into Hermitian matrices.
//!
//! The solver is a log-barrier path-following method: the equalities are
//! eliminated through an orthonormal null-space basis `x = x0 + N z`, and
//! `t c·x + Σ log det C_k(x)` is maximized by damped Newton steps for an
//! increasing sequence of `t` (factor 10 per stage). Cone matrices are
//! split into their connected diagonal blocks before iterating; identical
//! blocks are merged with a multiplicity, so a Newton step only touches a
//! handful of small matrices.

use rayon::prelude::*;

use crate::analytic::{calibrated_operators, params_for, CloneFamily, SchmidtAlpha};
use crate::channel::{constraint_matrices, fidelity_coefficients};
use crate::covariant::{CovariantParams, TOperators, DEFAULT_TWIRL_SAMPLES, N_PARAMS};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, min_eigenvalue, ComplexMatrix, C64, ZERO};

/// Objective tolerance used when none is given.
pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 200;

const BARRIER_GROWTH: f64 = 10.0;
const CENTERING_TOL: f64 = 1e-7;
const INTERIOR_EPS: [f64; 3] = [0.1, 0.3, 0.5];

/// `x -> Σ x_i basis[i]`
#[derive(Debug, Clone)]
pub struct LinearCone {
    pub label: String,
    pub basis: Vec<ComplexMatrix>,
}

impl LinearCone {
    pub fn map(&self, x: &[f64]) -> ComplexMatrix {
        let (r, c) = self.basis[0].shape();
        let mut m = ComplexMatrix::zeros(r, c);
        for (xi, b) in x.iter().zip(&self.basis) {
            if *xi != 0.0 {
                m.add_scaled(C64::new(*xi, 0.0), b).expect("uniform cone shape");
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.basis[0].rows()
    }
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub objective: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub cones: Vec<LinearCone>,
    /// Feasible point, possibly on the cone boundary.
    pub anchor: Vec<f64>,
    /// Strictly feasible point used to push the anchor into the interior.
    pub center: Vec<f64>,
}

impl SdpProblem {
    /// Cloning SDP at `alpha`: maximize the clone-averaged local fidelity over
    /// trace-preserving, clone-symmetric `P̃(a) ⪰ 0`, optionally with the
    /// partial transpose on Bob's side also positive.
    ///
    /// Cones are expressed in the invariant basis `W ⊗ W` (`W` has the
    /// `M1, M2, M3` vectors as columns); this is a unitary change of basis of
    /// `P̃` and its partial transpose, so spectra are unchanged.
    pub fn cloning(alpha: SchmidtAlpha, with_ppt: bool, t: &TOperators) -> Result<Self> {
        let f = fidelity_coefficients(alpha, t)?;
        let objective: Vec<f64> = f.iter().flatten().copied().collect();
        let constraints = constraint_matrices(t)?;
        let (eq_matrix, eq_rhs) = constraints.system();

        let w = t.basis.unitary();
        let wd = w.dagger();
        let adapted: Vec<ComplexMatrix> = t.all().iter().map(|ti| &(&wd * ti) * &w).collect();
        let adapted_t: Vec<ComplexMatrix> = t
            .all()
            .iter()
            .map(|ti| &(&wd * &ti.transpose()) * &w)
            .collect();

        let mut cones = vec![LinearCone {
            label: "ptilde".into(),
            basis: kron_basis(&adapted, &adapted),
        }];
        if with_ppt {
            cones.push(LinearCone {
                label: "ptilde_pt_b".into(),
                basis: kron_basis(&adapted, &adapted_t),
            });
        }

        let anchor = params_for(CloneFamily::BuzekHillerySquared, alpha).to_vector();
        // Choi of the channel preparing the maximally mixed output: P̃ = I/16.
        let mut center = CovariantParams::zero();
        for i in 1..=3 {
            for j in 1..=3 {
                center.set(i, j, 1.0 / 16.0);
            }
        }
        Ok(Self {
            objective,
            eq_matrix,
            eq_rhs,
            cones,
            anchor,
            center: center.to_vector(),
        })
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_ppt(&self) -> bool {
        self.cones.len() > 1
    }

    pub fn equality_residual(&self, x: &[f64]) -> f64 {
        self.eq_matrix
            .iter()
            .zip(&self.eq_rhs)
            .map(|(r, b)| (dot(r, x) - b).abs())
            .fold(0.0, f64::max)
    }
}

fn kron_basis(left: &[ComplexMatrix], right: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(left.len() * right.len());
    for l in left {
        for r in right {
            out.push(l.kron(r));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub a_star: CovariantParams,
    pub f_star: f64,
    pub min_eigenvalues: Vec<f64>,
    pub iterations: usize,
    pub duality_gap_estimate: f64,
    pub equality_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn real_sym_eig(m: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = m.len();
    let c = ComplexMatrix::from_fn(n, n, |i, j| C64::new(m[i][j], 0.0));
    let e = hermitian_eig(&c)?;
    let vecs = (0..n)
        .map(|k| (0..n).map(|i| e.vectors[(i, k)].re).collect())
        .collect();
    Ok((e.values, vecs))
}

/// Orthonormal null-space basis and minimum-norm particular solution.
pub fn affine_parametrization(
    eq: &[Vec<f64>],
    rhs: &[f64],
    n: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if eq.is_empty() {
        return Ok((vec![0.0; n], (0..n).map(|k| unit(n, k)).collect()));
    }
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| eq.iter().map(|r| r[i] * r[j]).sum()).collect())
        .collect();
    let (vals, vecs) = real_sym_eig(&gram)?;
    let top = vals.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let etb: Vec<f64> = (0..n)
        .map(|i| eq.iter().zip(rhs).map(|(r, b)| r[i] * b).sum())
        .collect();
    let mut x0 = vec![0.0; n];
    let mut null = Vec::new();
    for (l, v) in vals.iter().zip(vecs) {
        if *l <= 1e-10 * top {
            null.push(v);
        } else {
            let c = dot(&v, &etb) / l;
            x0.iter_mut().zip(&v).for_each(|(x, vi)| *x += c * vi);
        }
    }
    let resid = eq
        .iter()
        .zip(rhs)
        .map(|(r, b)| (dot(r, &x0) - b).abs())
        .fold(0.0, f64::max);
    if resid > 1e-9 {
        return Err(Error::Infeasible(format!(
            "equality system inconsistent (residual {resid:.3e})"
        )));
    }
    Ok((x0, null))
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

/// One diagonal block of a cone in the reduced coordinates `z`.
#[derive(Debug, Clone)]
struct Block {
    mult: usize,
    offset: ComplexMatrix,
    slopes: Vec<ComplexMatrix>,
}

impl Block {
    fn at(&self, z: &[f64]) -> ComplexMatrix {
        let mut m = self.offset.clone();
        for (zk, s) in z.iter().zip(&self.slopes) {
            m.add_scaled(C64::new(*zk, 0.0), s).expect("block shape");
        }
        m
    }

    fn same_as(&self, other: &Block, tol: f64) -> bool {
        self.offset.shape() == other.offset.shape()
            && self.offset.frobenius_distance(&other.offset).unwrap() <= tol
            && self
                .slopes
                .iter()
                .zip(&other.slopes)
                .all(|(a, b)| a.frobenius_distance(b).unwrap() <= tol)
    }
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut k = i;
    while parent[k] != r {
        let next = parent[k];
        parent[k] = r;
        k = next;
    }
    r
}

/// Splits `offset + Σ z_k slopes_k` into connected diagonal blocks and merges
/// identical ones.
fn split_blocks(offset: &ComplexMatrix, slopes: &[ComplexMatrix]) -> Vec<Block> {
    let n = offset.rows();
    let scale = slopes
        .iter()
        .map(|s| s.max_abs())
        .fold(offset.max_abs(), f64::max)
        .max(1e-300);
    let thr = 1e-12 * scale;
    let mut parent: Vec<usize> = (0..n).collect();
    for m in std::iter::once(offset).chain(slopes) {
        for i in 0..n {
            for j in (i + 1)..n {
                if m[(i, j)].norm() > thr {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_of[r] == usize::MAX {
            root_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_of[r]].push(i);
    }
    let mut blocks: Vec<Block> = Vec::new();
    for idx in groups {
        let b = Block {
            mult: 1,
            offset: offset.principal_submatrix(&idx),
            slopes: slopes.iter().map(|s| s.principal_submatrix(&idx)).collect(),
        };
        if let Some(existing) = blocks.iter_mut().find(|e| e.same_as(&b, thr)) {
            existing.mult += 1;
        } else {
            blocks.push(b);
        }
    }
    blocks
}

struct Barrier {
    blocks: Vec<Block>,
    /// `Σ mult * size`, the barrier parameter.
    degree: f64,
}

impl Barrier {
    /// `(Σ mult log det, gradient, Hessian)` of the log-det term, or `None`
    /// outside the open cone.
    fn eval(&self, z: &[f64], need_derivs: bool) -> Result<Option<(f64, Vec<f64>, Vec<Vec<f64>>)>> {
        let k = z.len();
        let mut value = 0.0;
        let mut grad = vec![0.0; k];
        let mut hess = vec![vec![0.0; k]; if need_derivs { k } else { 0 }];
        for b in &self.blocks {
            let m = b.at(z);
            let e = hermitian_eig(&m)?;
            if e.min() <= 0.0 {
                return Ok(None);
            }
            let mult = b.mult as f64;
            value += mult * e.values.iter().map(|l| l.ln()).sum::<f64>();
            if !need_derivs {
                continue;
            }
            let inv = e.map(|l| 1.0 / l);
            let y: Vec<ComplexMatrix> = b.slopes.iter().map(|s| &inv * s).collect();
            for p in 0..k {
                grad[p] += mult * y[p].trace().re;
                for q in p..k {
                    let mut acc = ZERO;
                    let d = y[p].rows();
                    for i in 0..d {
                        for j in 0..d {
                            acc += y[p][(i, j)] * y[q][(j, i)];
                        }
                    }
                    hess[p][q] += mult * acc.re;
                }
            }
        }
        if need_derivs {
            for p in 0..k {
                for q in 0..p {
                    hess[p][q] = hess[q][p];
                }
            }
        }
        Ok(Some((value, grad, hess)))
    }

    fn feasible(&self, z: &[f64]) -> Result<bool> {
        Ok(self.eval(z, false)?.is_some())
    }
}

/// Solves the SPD system `H x = r` by Cholesky, with a small ridge fallback.
fn spd_solve(h: &[Vec<f64>], r: &[f64]) -> Option<Vec<f64>> {
    let n = r.len();
    let diag_scale = (0..n).map(|i| h[i][i].abs()).fold(0.0, f64::max).max(1e-300);
    for ridge in [0.0, 1e-14, 1e-12, 1e-10] {
        let mut l = vec![vec![0.0; n]; n];
        let mut ok = true;
        'outer: for i in 0..n {
            for j in 0..=i {
                let mut s = h[i][j];
                if i == j {
                    s += ridge * diag_scale;
                }
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    if s <= 0.0 {
                        ok = false;
                        break 'outer;
                    }
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        if !ok {
            continue;
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s: f64 = r[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>();
            y[i] = s / l[i][i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = y[i] - ((i + 1)..n).map(|k| l[k][i] * x[k]).sum::<f64>();
            x[i] = s / l[i][i];
        }
        return Some(x);
    }
    None
}

/// Maximizes the problem's objective to within `tol` (bound `m/t` on the
/// duality gap at a centered point). Deterministic: no randomness is used.
pub fn solve(problem: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution> {
    let n = problem.n_vars();
    if n != N_PARAMS {
        return Err(Error::Dimension(format!(
            "expected {N_PARAMS} covariant parameters, got {n}"
        )));
    }
    let (x0, null) = affine_parametrization(&problem.eq_matrix, &problem.eq_rhs, n)?;
    let k = null.len();
    let to_x = |z: &[f64]| -> Vec<f64> {
        let mut x = x0.clone();
        for (zj, v) in z.iter().zip(&null) {
            x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += zj * vi);
        }
        x
    };
    let to_z = |x: &[f64]| -> Vec<f64> {
        let d: Vec<f64> = x.iter().zip(&x0).map(|(a, b)| a - b).collect();
        null.iter().map(|v| dot(v, &d)).collect()
    };

    let mut blocks = Vec::new();
    let mut degree = 0.0;
    for cone in &problem.cones {
        let offset = cone.map(&x0);
        let slopes: Vec<ComplexMatrix> = null.iter().map(|v| cone.map(v)).collect();
        for b in split_blocks(&offset, &slopes) {
            degree += (b.mult * b.offset.rows()) as f64;
            blocks.push(b);
        }
    }
    let barrier = Barrier { blocks, degree };
    let c_red: Vec<f64> = null.iter().map(|v| dot(v, &problem.objective)).collect();

    let mut z = None;
    for eps in INTERIOR_EPS {
        let x: Vec<f64> = problem
            .anchor
            .iter()
            .zip(&problem.center)
            .map(|(a, c)| (1.0 - eps) * a + eps * c)
            .collect();
        let cand = to_z(&x);
        if barrier.feasible(&cand)? {
            z = Some(cand);
            break;
        }
    }
    let mut z = z.ok_or_else(|| Error::Infeasible("no strictly feasible start".into()))?;

    let finish = |z: &[f64], iterations: usize, gap: f64| -> Result<SdpSolution> {
        let x = to_x(z);
        let a_star = CovariantParams::from_vector(&x);
        let min_eigenvalues = problem
            .cones
            .iter()
            .map(|c| min_eigenvalue(&c.map(&x)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SdpSolution {
            a_star,
            f_star: dot(&problem.objective, &x),
            min_eigenvalues,
            iterations,
            duality_gap_estimate: gap,
            equality_residual: problem.equality_residual(&x),
        })
    };

    let mut t = barrier.degree;
    let mut iterations = 0;
    loop {
        // centering: minimize -t c·z - logdet
        loop {
            let (logdet, g_bar, h) = barrier
                .eval(&z, true)?
                .expect("iterate stays strictly feasible");
            let phi = -t * dot(&c_red, &z) - logdet;
            let grad: Vec<f64> = (0..k).map(|p| -t * c_red[p] - g_bar[p]).collect();
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Some(step) = spd_solve(&h, &neg) else {
                return Err(Error::Infeasible("singular barrier Hessian".into()));
            };
            let decrement = -dot(&grad, &step);
            if decrement / 2.0 <= CENTERING_TOL {
                break;
            }
            if iterations >= max_iter {
                let best = finish(&z, iterations, barrier.degree / t)?;
                return Err(Error::NonConvergence {
                    iterations,
                    gap: barrier.degree / t,
                    best: Box::new(best),
                });
            }
            iterations += 1;
            let mut s = 1.0;
            let mut stalled = false;
            let slope = dot(&grad, &step);
            loop {
                let trial: Vec<f64> = z.iter().zip(&step).map(|(a, d)| a + s * d).collect();
                if let Some((ld, _, _)) = barrier.eval(&trial, false)? {
                    let phi_trial = -t * dot(&c_red, &trial) - ld;
                    if phi_trial <= phi + 0.25 * s * slope {
                        z = trial;
                        break;
                    }
                    // decrease lost in the rounding of phi: already centered
                    if (phi_trial - phi).abs() <= 1e-13 * phi.abs().max(1.0) && s == 1.0 {
                        stalled = true;
                        break;
                    }
                }
                s *= 0.5;
                if s < 1e-14 {
                    // no progress possible at this t; accept the centering
                    break;
                }
            }
            if s < 1e-14 || stalled {
                break;
            }
        }
        let gap = barrier.degree / t;
        if gap <= tol {
            return finish(&z, iterations, gap);
        }
        t *= BARRIER_GROWTH;
    }
}

/// Independent solves on each `alpha`, in input order.
pub fn solve_sweep(alphas: &[f64], with_ppt: bool, tol: f64, seed: u64) -> Result<Vec<(f64, f64)>> {
    let t = calibrated_operators(DEFAULT_TWIRL_SAMPLES, seed)?;
    solve_sweep_with(alphas, with_ppt, tol, &t)
}

pub fn solve_sweep_with(
    alphas: &[f64],
    with_ppt: bool,
    tol: f64,
    t: &TOperators,
) -> Result<Vec<(f64, f64)>> {
    alphas
        .par_iter()
        .enumerate()
        .map(|(index, &alpha)| {
            let point = || -> Result<f64> {
                let a = SchmidtAlpha::new(alpha)?;
                let problem = SdpProblem::cloning(a, with_ppt, t)?;
                Ok(solve(&problem, tol, DEFAULT_MAX_ITER)?.f_star)
            };
            point()
                .map(|f| (alpha, f))
                .map_err(|e| Error::SweepPoint {
                    index,
                    alpha,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Ratio of the largest jump in the discrete second derivative to the median
/// jump above which a kink is reported.
pub const KINK_RATIO: f64 = 10.0;
/// Absolute floor on that jump, in units of the second derivative.
pub const KINK_FLOOR: f64 = 1e-6;

/// Locates a kink (a jump in the second derivative) of a sampled curve.
///
/// Second divided differences estimate `F''` at interior points; the kink is
/// placed at the largest jump between consecutive estimates, refined by the
/// jump-weighted centroid of the neighbouring intervals.
pub fn detect_threshold(sweep: &[(f64, f64)]) -> Result<f64> {
    let mut pts = sweep.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() < 5 {
        return Err(Error::NoKink(format!("need at least 5 points, got {}", pts.len())));
    }
    let d2: Vec<f64> = pts
        .windows(3)
        .map(|w| {
            let (h0, h1) = (w[1].0 - w[0].0, w[2].0 - w[1].0);
            2.0 * ((w[2].1 - w[1].1) / h1 - (w[1].1 - w[0].1) / h0) / (h0 + h1)
        })
        .collect();
    // jump k sits between the second differences centred at pts[k+1], pts[k+2]
    let jumps: Vec<f64> = d2.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let (imax, jmax) = jumps
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    let mut sorted = jumps.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if !(jmax > KINK_RATIO * median + KINK_FLOOR) {
        return Err(Error::NoKink(format!(
            "largest jump {jmax:.3e} vs median {median:.3e}"
        )));
    }
    let lo = imax.saturating_sub(1);
    let hi = (imax + 1).min(jumps.len() - 1);
    let (mut wsum, mut asum) = (0.0, 0.0);
    for k in lo..=hi {
        let mid = 0.5 * (pts[k + 1].0 + pts[k + 2].0);
        wsum += jumps[k];
        asum += jumps[k] * mid;
    }
    Ok(asum / wsum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{
        alpha_critical, alpha_grid, default_operators, fidelity_bh, fidelity_global,
        fidelity_locc,
    };
    use std::f64::consts::FRAC_1_SQRT_2;
    use std::sync::OnceLock;

    fn ops() -> &'static TOperators {
        static T: OnceLock<TOperators> = OnceLock::new();
        T.get_or_init(|| default_operators().unwrap())
    }

    fn solve_at(alpha: f64, ppt: bool) -> SdpSolution {
        let p = SdpProblem::cloning(SchmidtAlpha::new(alpha).unwrap(), ppt, ops()).unwrap();
        solve(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap()
    }

    #[test]
    fn problem_is_feasible_at_bh() {
        let p = SdpProblem::cloning(SchmidtAlpha::new(0.4).unwrap(), true, ops()).unwrap();
        assert!(p.equality_residual(&p.anchor) < 1e-12);
        assert!(p.equality_residual(&p.center) < 1e-12);
        for c in &p.cones {
            assert!(min_eigenvalue(&c.map(&p.anchor)).unwrap() > -1e-12);
            assert!(min_eigenvalue(&c.map(&p.center)).unwrap() > 1e-3);
        }
    }

    #[test]
    fn global_optimum_at_maximal_entanglement() {
        let s = solve_at(FRAC_1_SQRT_2, false);
        assert!((s.f_star - (5.0 + 13f64.sqrt()) / 12.0).abs() < 1e-6, "{}", s.f_star);
        assert!(s.min_eigenvalues[0] > -1e-8);
        assert!(s.equality_residual < 1e-9);
        assert!(s.iterations <= DEFAULT_MAX_ITER);
    }

    #[test]
    fn ppt_optimum_at_maximal_entanglement() {
        let s = solve_at(FRAC_1_SQRT_2, true);
        assert!((s.f_star - 0.625).abs() < 1e-6, "{}", s.f_star);
        assert!(s.min_eigenvalues.iter().all(|&m| m > -1e-8));
    }

    #[test]
    fn ppt_optimum_below_threshold_is_bh() {
        let s = solve_at(0.2, true);
        let bh = fidelity_bh(SchmidtAlpha::new(0.2).unwrap());
        assert!((s.f_star - bh).abs() < 1e-6);
        let target = CovariantParams::zero().with(2, 2, 1.0);
        assert!(s.a_star.max_abs_diff(&target) <= 1e-3, "{:?}", s.a_star);
    }

    #[test]
    fn deterministic() {
        let a = solve_at(0.45, true);
        let b = solve_at(0.45, true);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.f_star.to_bits(), b.f_star.to_bits());
    }

    #[test]
    fn unattainable_tolerance_reports_best_iterate() {
        let p = SdpProblem::cloning(SchmidtAlpha::new(0.5).unwrap(), false, ops()).unwrap();
        match solve(&p, 1e-30, 40) {
            Err(Error::NonConvergence { best, iterations, .. }) => {
                assert_eq!(iterations, 40);
                assert!(best.f_star <= fidelity_global(SchmidtAlpha::new(0.5).unwrap()) + 1e-6);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn sweep_is_monotone_in_constraints() {
        let alphas = alpha_grid(0.0, FRAC_1_SQRT_2, 8);
        let free = solve_sweep_with(&alphas, false, DEFAULT_TOL, ops()).unwrap();
        let ppt = solve_sweep_with(&alphas, true, DEFAULT_TOL, ops()).unwrap();
        for ((a, f), (_, g)) in free.iter().zip(&ppt) {
            let al = SchmidtAlpha::new(*a).unwrap();
            assert!(g <= &(f + 1e-8));
            assert!(*f <= fidelity_global(al) + 1e-6);
            assert!((g - fidelity_locc(al)).abs() < 1e-6);
        }
    }

    #[test]
    fn sweep_rejects_out_of_domain() {
        let err = solve_sweep_with(&[0.1, 0.9], false, DEFAULT_TOL, ops()).unwrap_err();
        assert!(matches!(err, Error::SweepPoint { index: 1, .. }));
    }

    #[test]
    fn kink_on_analytic_curves() {
        let alphas = alpha_grid(0.30, 0.37, 36);
        let locc: Vec<(f64, f64)> = alphas
            .iter()
            .map(|&a| (a, fidelity_locc(SchmidtAlpha::new(a).unwrap())))
            .collect();
        let k = detect_threshold(&locc).unwrap();
        assert!((k - alpha_critical()).abs() < 0.005, "{k}");

        let global: Vec<(f64, f64)> = alphas
            .iter()
            .map(|&a| (a, fidelity_global(SchmidtAlpha::new(a).unwrap())))
            .collect();
        assert!(detect_threshold(&global).is_err());
        let bh: Vec<(f64, f64)> = alphas
            .iter()
            .map(|&a| (a, fidelity_bh(SchmidtAlpha::new(a).unwrap())))
            .collect();
        assert!(detect_threshold(&bh).is_err());
        assert!(detect_threshold(&locc[..3]).is_err());
    }

    #[test]
    fn blocks_are_small() {
        let p = SdpProblem::cloning(SchmidtAlpha::new(0.5).unwrap(), true, ops()).unwrap();
        let (x0, null) = affine_parametrization(&p.eq_matrix, &p.eq_rhs, 25).unwrap();
        assert_eq!(null.len(), 25 - p.eq_matrix.len());
        let slopes: Vec<_> = null.iter().map(|v| p.cones[0].map(v)).collect();
        let blocks = split_blocks(&p.cones[0].map(&x0), &slopes);
        let total: usize = blocks.iter().map(|b| b.mult * b.offset.rows()).sum();
        assert_eq!(total, 64);
        assert!(blocks.iter().all(|b| b.offset.rows() <= 4));
    }
}
