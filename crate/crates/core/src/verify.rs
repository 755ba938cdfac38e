//! The acceptance checks, runnable from the library, the CLI and tests.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::{
    alpha_critical, alpha_grid, calibrated_operators, fidelity_bh, fidelity_global, fidelity_locc,
    params_for, CloneFamily, SchmidtAlpha,
};
use crate::channel::{clone_reductions, representative_state, CloningChannel};
use crate::covariant::{
    assemble_ptilde, local_action, partial_transpose_b, random_su2, CovariantParams, TOperators,
    DEFAULT_TWIRL_SAMPLES,
};
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, random_density, ComplexMatrix};
use crate::protocol::{
    average_fidelity, build_dilations, build_kraus, isometry_defect, kraus_to_choi,
    run_protocol_exact, run_protocol_sampled,
};
use crate::sdp::{
    affine_parametrization, detect_threshold, solve, solve_sweep_with, SdpProblem,
    DEFAULT_MAX_ITER,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    /// Objective tolerance handed to the SDP solver.
    pub tol: f64,
    /// Seed for the intertwiner and every randomized check.
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            tol: crate::sdp::DEFAULT_TOL,
            seed: crate::covariant::DEFAULT_TWIRL_SEED,
        }
    }
}

pub const CHECK_NAMES: [&str; 9] = [
    "analytic endpoints",
    "threshold",
    "SDP vs analytic oracle",
    "kink detection",
    "communication useless below threshold",
    "Kraus/Choi equivalence",
    "protocol realization",
    "LOCC-validity invariants",
    "structural properties",
];

/// Accumulates named conditions; the first few failures end up in the detail.
#[derive(Default)]
struct Report {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Report {
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn close(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        let err = (got - want).abs();
        self.require(err <= tol, || {
            format!("{what}: {got:.15} vs {want:.15} (err {err:.2e} > {tol:.0e})")
        });
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    fn finish(self, id: u8) -> CheckResult {
        let passed = self.failures.is_empty();
        let detail = if passed {
            self.notes.join("; ")
        } else {
            let mut f = self.failures;
            let more = f.len().saturating_sub(3);
            f.truncate(3);
            if more > 0 {
                f.push(format!("... {more} more"));
            }
            f.join("; ")
        };
        CheckResult {
            id,
            name: CHECK_NAMES[id as usize - 1],
            passed,
            detail,
        }
    }
}

fn run(id: u8, body: impl FnOnce(&mut Report) -> Result<()>) -> CheckResult {
    let mut r = Report::default();
    if let Err(e) = body(&mut r) {
        r.failures.push(e.to_string());
    }
    r.finish(id)
}

fn a(x: f64) -> Result<SchmidtAlpha> {
    SchmidtAlpha::new(x)
}

pub fn check_endpoints() -> CheckResult {
    run(1, |r| {
        let max = SchmidtAlpha::max();
        r.close("F_global(1/√2)", fidelity_global(max), (5.0 + 13f64.sqrt()) / 12.0, 1e-12);
        r.close("F_global(0)", fidelity_global(a(0.0)?), (17.0 + 73f64.sqrt()) / 36.0, 1e-12);
        r.close("F_bh(1/√2)", fidelity_bh(max), 7.0 / 12.0, 1e-12);
        r.close("F_locc(1/√2)", fidelity_locc(max), 5.0 / 8.0, 1e-12);
        r.note(format!("F_global(1/√2) = {:.15}", fidelity_global(max)));
        Ok(())
    })
}

pub fn check_threshold() -> CheckResult {
    run(2, |r| {
        let a0 = alpha_critical();
        r.require(format!("{a0:.4}") == "0.3357", || format!("alpha_0 = {a0}"));
        let a11 = params_for(CloneFamily::LoccOptimal, a(a0)?).get(1, 1);
        // evaluate the above-threshold formula itself at alpha_0
        let x = a(a0)?.mix();
        let branch = (1.0 - 10.0 * x).powi(2) / (4.0 * (1.0 + 8.0 * x).powi(2));
        r.close("LOCC a11 at alpha_0", a11, 0.0, 1e-13);
        r.close("LOCC a11 formula at alpha_0", branch, 0.0, 1e-13);
        let h = 1e-5;
        let d = (fidelity_global(a(a0 + h)?) - fidelity_global(a(a0 - h)?)) / (2.0 * h);
        r.require(d.abs() <= 1e-8, || format!("F_global'(alpha_0) = {d:.3e}"));
        let (lo, mid, hi) = (
            fidelity_global(a(a0 - h)?),
            fidelity_global(a(a0)?),
            fidelity_global(a(a0 + h)?),
        );
        r.require(mid <= lo && mid <= hi, || "F_global not minimal at alpha_0".into());
        r.note(format!("alpha_0 = {a0:.10}, F' = {d:.1e}"));
        Ok(())
    })
}

pub fn check_sdp_grid(cfg: &VerifyConfig, t: &TOperators) -> CheckResult {
    run(3, |r| {
        let (mut err_g, mut err_p, mut worst_it) = (0f64, 0f64, 0usize);
        for x in alpha_grid(0.0, FRAC_1_SQRT_2, 50) {
            let al = a(x)?;
            for ppt in [false, true] {
                let s = solve(&SdpProblem::cloning(al, ppt, t)?, cfg.tol, DEFAULT_MAX_ITER)?;
                worst_it = worst_it.max(s.iterations);
                if ppt {
                    err_p = err_p.max((s.f_star - fidelity_locc(al)).abs());
                } else {
                    err_g = err_g.max((s.f_star - fidelity_global(al)).abs());
                }
            }
        }
        r.require(err_g <= 1e-6, || format!("no-PPT sup error {err_g:.3e}"));
        r.require(err_p <= 1e-6, || format!("PPT sup error {err_p:.3e}"));
        r.require(worst_it <= DEFAULT_MAX_ITER, || format!("{worst_it} Newton steps"));
        r.note(format!(
            "sup error {err_g:.1e} / {err_p:.1e}, at most {worst_it} Newton steps"
        ));
        Ok(())
    })
}

/// `0.30, 0.302, ..., 0.37`
pub fn kink_grid() -> Vec<f64> {
    (0..=35).map(|k| 0.30 + 0.002 * k as f64).collect()
}

pub fn check_kink(cfg: &VerifyConfig, t: &TOperators) -> CheckResult {
    run(4, |r| {
        let grid = kink_grid();
        let ppt = solve_sweep_with(&grid, true, cfg.tol, t)?;
        let a0 = alpha_critical();
        match detect_threshold(&ppt) {
            Ok(k) => {
                r.require((k - a0).abs() <= 0.005, || format!("kink at {k:.5}, expected {a0:.5}"));
                r.note(format!("PPT kink at {k:.5}"));
            }
            Err(e) => r.require(false, || format!("PPT sweep: {e}")),
        }
        let global = solve_sweep_with(&grid, false, cfg.tol, t)?;
        match detect_threshold(&global) {
            Ok(k) => r.require(false, || format!("spurious kink at {k:.5} without PPT")),
            Err(Error::NoKink(_)) => r.note("none without PPT".into()),
            Err(e) => return Err(e),
        }
        Ok(())
    })
}

pub fn check_below_threshold(cfg: &VerifyConfig, t: &TOperators) -> CheckResult {
    run(5, |r| {
        let mut worst = 0f64;
        for x in [0.05, 0.15, 0.25, 0.33] {
            let al = a(x)?;
            let s = solve(&SdpProblem::cloning(al, true, t)?, cfg.tol, DEFAULT_MAX_ITER)?;
            r.close(&format!("PPT optimum at {x}"), s.f_star, fidelity_bh(al), 1e-6);
            worst = worst.max((s.f_star - fidelity_bh(al)).abs());
        }
        r.note(format!("max deviation from BH {worst:.1e}"));
        Ok(())
    })
}

pub fn check_kraus_choi(t: &TOperators) -> CheckResult {
    run(6, |r| {
        let mut worst = (0f64, 0f64);
        for x in [0.4, 0.5, 0.6, FRAC_1_SQRT_2] {
            let al = a(x)?;
            let ks = build_kraus(al)?;
            let target = assemble_ptilde(&params_for(CloneFamily::LoccOptimal, al), t);
            let d = kraus_to_choi(&ks)?.frobenius_distance(&target)?;
            let kk = ks.invariant_defects()?[3];
            r.require(d <= 1e-10, || format!("alpha {x}: Choi distance {d:.3e}"));
            r.require(kk <= 1e-12, || format!("alpha {x}: Σ K†K off by {kk:.3e}"));
            worst = (worst.0.max(d), worst.1.max(kk));
        }
        r.note(format!(
            "Choi distance {:.1e}, completeness {:.1e} ({})",
            worst.0,
            worst.1,
            t.convention.describe()
        ));
        Ok(())
    })
}

pub fn check_protocol(cfg: &VerifyConfig) -> CheckResult {
    run(7, |r| {
        let max = SchmidtAlpha::max();
        let bell = representative_state(max).projector();
        let branches = run_protocol_exact(max, &bell)?;
        let total: f64 = branches.iter().map(|b| b.joint_probability).sum();
        let exact = average_fidelity(&branches);
        r.close("exact average fidelity", exact, 0.625, 1e-12);
        r.close("total branch probability", total, 1.0, 1e-12);
        let mut covered = 0;
        for k in 0..100u64 {
            let (f, se) = run_protocol_sampled(max, &bell, 100_000, cfg.seed.wrapping_add(k))?;
            if (f - exact).abs() <= 3.0 * se {
                covered += 1;
            }
        }
        r.require(covered >= 99, || format!("only {covered}/100 seeds within 3σ"));
        r.note(format!("{} branches, {covered}/100 seeds within 3σ", branches.len()));
        Ok(())
    })
}

pub fn check_locc_invariants() -> CheckResult {
    run(8, |r| {
        let mut worst = 0f64;
        for x in alpha_grid(0.0, FRAC_1_SQRT_2, 50) {
            let ks = build_kraus(a(x)?)?;
            let mut defects = ks.invariant_defects()?[..3].to_vec();
            let d = build_dilations(&ks)?;
            for u in [&d.u_a, &d.u_b_plus, &d.u_b_minus] {
                defects.push(isometry_defect(u)?);
            }
            let m = defects.iter().copied().fold(0.0, f64::max);
            r.require(m <= 1e-12, || format!("alpha {x}: defect {m:.3e}"));
            worst = worst.max(m);
        }
        r.note(format!("largest defect {worst:.1e} over 50 points"));
        Ok(())
    })
}

pub fn check_structure(cfg: &VerifyConfig, t: &TOperators) -> CheckResult {
    run(9, |r| {
        let tol = 1e-10;
        let id = ComplexMatrix::identity(8);
        for (i, p) in [&t.t1, &t.t2, &t.t3].into_iter().enumerate() {
            let d = (p * p).frobenius_distance(p)?;
            r.require(d <= tol, || format!("T{} not idempotent ({d:.1e})", i + 1));
        }
        let sum = &(&t.t1 + &t.t2) + &t.t3;
        r.require(sum.frobenius_distance(&id)? <= tol, || "T1+T2+T3 != I".into());
        let d = (&(&t.t4 * &t.t1) * &t.t4).frobenius_distance(&t.t2)?;
        r.require(d <= tol, || format!("T4 T1 T4 != T2 ({d:.1e})"));

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut random_params = || {
            let v: Vec<f64> = (0..25).map(|_| rng.random::<f64>() - 0.5).collect();
            CovariantParams::from_vector(&v)
        };
        let generic = assemble_ptilde(&random_params(), t);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 1);
        let mut cov = 0f64;
        for _ in 0..20 {
            let g = local_action(&random_su2(&mut rng), &random_su2(&mut rng));
            cov = cov.max((&(&g * &generic) * &g.dagger()).frobenius_distance(&generic)?);
        }
        r.require(cov <= tol, || format!("covariance defect {cov:.1e}"));

        // random points of the affine constraint set, positive or not
        let problem = SdpProblem::cloning(SchmidtAlpha::max(), false, t)?;
        let (x0, null) = affine_parametrization(&problem.eq_matrix, &problem.eq_rhs, 25)?;
        let (mut tr_err, mut sym_err) = (0f64, 0f64);
        for _ in 0..10 {
            let mut x = x0.clone();
            for v in &null {
                let z = 2.0 * rng.random::<f64>() - 1.0;
                x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += z * vi);
            }
            let ch = CloningChannel::from_params(&CovariantParams::from_vector(&x), t)?;
            for _ in 0..3 {
                let out = ch.apply_unchecked(&random_density(&mut rng, 4))?;
                tr_err = tr_err.max((out.trace().re - 1.0).abs());
                let (r1, r2) = clone_reductions(&out)?;
                sym_err = sym_err.max(r1.frobenius_distance(&r2)?);
            }
        }
        r.require(tr_err <= 1e-9, || format!("trace defect {tr_err:.1e}"));
        r.require(sym_err <= 1e-9, || format!("clone asymmetry {sym_err:.1e}"));

        let mut min_pt = f64::INFINITY;
        for x in alpha_grid(0.0, FRAC_1_SQRT_2, 11) {
            for fam in [CloneFamily::BuzekHillerySquared, CloneFamily::LoccOptimal] {
                let p = assemble_ptilde(&params_for(fam, a(x)?), t);
                min_pt = min_pt.min(min_eigenvalue(&partial_transpose_b(&p)?)?);
            }
        }
        r.require(min_pt >= -1e-10, || format!("partial transpose eigenvalue {min_pt:.3e}"));
        r.note(format!(
            "covariance {cov:.1e}, trace {tr_err:.1e}, asymmetry {sym_err:.1e}, min PT eig {min_pt:.1e}"
        ));
        Ok(())
    })
}

/// Runs every check in order. Only building the T operators can fail here;
/// check failures are reported in the results.
pub fn run_all(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let t = calibrated_operators(DEFAULT_TWIRL_SAMPLES, cfg.seed)?;
    Ok(vec![
        check_endpoints(),
        check_threshold(),
        check_sdp_grid(cfg, &t),
        check_kink(cfg, &t),
        check_below_threshold(cfg, &t),
        check_kraus_choi(&t),
        check_protocol(cfg),
        check_locc_invariants(),
        check_structure(cfg, &t),
    ])
}

pub fn format_line(c: &CheckResult) -> String {
    format!(
        "[{}] {}. {}: {}",
        if c.passed { "PASS" } else { "FAIL" },
        c.id,
        c.name,
        c.detail
    )
}
