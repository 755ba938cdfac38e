//! Closed-form fidelities and parameter families.
//!
//! All functions take the Schmidt coefficient `alpha` of
//! `alpha |00> + sqrt(1 - alpha^2) |11>` on the closed interval
//! `[0, 1/sqrt(2)]`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::covariant::{assemble_ptilde, CovariantParams, SignConvention, TOperators};
use crate::error::{Error, Result};
use crate::linalg::min_eigenvalue;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SchmidtAlpha(f64);

impl SchmidtAlpha {
    pub const MAX: f64 = FRAC_1_SQRT_2;

    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || !(0.0..=Self::MAX + 1e-15).contains(&alpha) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        Ok(Self(alpha.min(Self::MAX)))
    }

    pub fn max() -> Self {
        Self(Self::MAX)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `alpha^2 (1 - alpha^2)`, the combination every formula depends on.
    pub fn mix(self) -> f64 {
        let a2 = self.0 * self.0;
        a2 * (1.0 - a2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CloneFamily {
    GlobalOptimal,
    BuzekHillerySquared,
    LoccOptimal,
}

impl CloneFamily {
    pub const ALL: [CloneFamily; 3] = [
        CloneFamily::GlobalOptimal,
        CloneFamily::BuzekHillerySquared,
        CloneFamily::LoccOptimal,
    ];
}

pub fn c_of_alpha(alpha: SchmidtAlpha) -> f64 {
    let x = alpha.mix();
    (73.0 + 16.0 * x * (1.0 + 40.0 * x)).sqrt()
}

/// Optimal local fidelity without locality constraints.
pub fn fidelity_global(alpha: SchmidtAlpha) -> f64 {
    let a2 = alpha.value().powi(2);
    let a4 = a2 * a2;
    (16.0 + (1.0 - 4.0 * a2).powi(2) - 8.0 * a4 + c_of_alpha(alpha)) / 36.0
}

/// Two independent Bužek–Hillery cloners.
pub fn fidelity_bh(alpha: SchmidtAlpha) -> f64 {
    (25.0 - 16.0 * alpha.mix()) / 36.0
}

/// `sqrt(1/2 - sqrt(15)/10)`
pub fn alpha_critical() -> f64 {
    (0.5 - 15f64.sqrt() / 10.0).sqrt()
}

/// Optimal LOCC (equivalently PPT) local fidelity; the Bužek–Hillery value up
/// to the threshold.
pub fn fidelity_locc(alpha: SchmidtAlpha) -> f64 {
    if alpha.value() <= alpha_critical() {
        return fidelity_bh(alpha);
    }
    fidelity_locc_branch(alpha)
}

/// The above-threshold formula, evaluated regardless of `alpha`.
pub fn fidelity_locc_branch(alpha: SchmidtAlpha) -> f64 {
    let x = alpha.mix();
    (3.0 + 8.0 * x * (2.0 + x)) / (4.0 * (1.0 + 8.0 * x))
}

pub fn fidelity_for(family: CloneFamily, alpha: SchmidtAlpha) -> f64 {
    match family {
        CloneFamily::GlobalOptimal => fidelity_global(alpha),
        CloneFamily::BuzekHillerySquared => fidelity_bh(alpha),
        CloneFamily::LoccOptimal => fidelity_locc(alpha),
    }
}

pub fn params_for(family: CloneFamily, alpha: SchmidtAlpha) -> CovariantParams {
    match family {
        CloneFamily::GlobalOptimal => {
            let x = alpha.mix();
            let a11 = 0.5 - 4.0 * (1.0 - x) / c_of_alpha(alpha);
            let a22 = 1.0 - a11;
            let a44 = (a11 * a22).sqrt() / 2.0;
            CovariantParams::zero()
                .with(1, 1, a11)
                .with(2, 2, a22)
                .with(4, 4, a44)
                .with(5, 5, -a44)
        }
        CloneFamily::BuzekHillerySquared => CovariantParams::zero().with(2, 2, 1.0),
        CloneFamily::LoccOptimal => {
            if alpha.value() <= alpha_critical() {
                return params_for(CloneFamily::BuzekHillerySquared, alpha);
            }
            let x = alpha.mix();
            let a11 = (1.0 - 10.0 * x).powi(2) / (4.0 * (1.0 + 8.0 * x).powi(2));
            let a22 = (1.0 - a11.sqrt()).powi(2);
            let off = (a11 * a22).sqrt();
            CovariantParams::zero()
                .with(1, 1, a11)
                .with(2, 2, a22)
                .with(1, 2, off)
                .with(2, 1, off)
                .with(4, 4, off)
        }
    }
}

/// Builds the T operators and fixes the global `T4` sign so that the
/// published parameter families assemble to positive operators at the
/// maximally entangled point. The choice is made once, never per alpha.
pub fn calibrated_operators(samples: usize, seed: u64) -> Result<TOperators> {
    let t = TOperators::build(samples, seed)?;
    let alpha = SchmidtAlpha::max();
    let is_psd = |t: &TOperators| -> Result<bool> {
        for family in [CloneFamily::GlobalOptimal, CloneFamily::LoccOptimal] {
            let p = assemble_ptilde(&params_for(family, alpha), t);
            if min_eigenvalue(&p)? < -1e-10 {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if is_psd(&t)? {
        return Ok(t);
    }
    let flipped = t.with_convention(SignConvention::FlippedT4);
    if is_psd(&flipped)? {
        return Ok(flipped);
    }
    Err(Error::Intertwiner(
        "published parameters are not positive under either T4 sign".into(),
    ))
}

pub fn default_operators() -> Result<TOperators> {
    calibrated_operators(
        crate::covariant::DEFAULT_TWIRL_SAMPLES,
        crate::covariant::DEFAULT_TWIRL_SEED,
    )
}

/// `n` points evenly spaced on `[lo, hi]` (a single point when `n == 1`).
pub fn alpha_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}
