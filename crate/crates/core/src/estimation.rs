//! Homodyne means, signal vectors and Cramér–Rao bounds on ρ_M.
//!
//! The signal vector is normalized so that its projections on v₊ = (1, 1)
//! and v₋ = (1, −1) are the intensity and phase signals of the single-channel
//! bounds: v₊·s = dn̄_p/dρ and v₋·s = −n̄_p·dφ̄/dρ. The phase sign follows
//! the homodyne means, which makes s parallel to (S₁, S₂).

use core::f64::consts::FRAC_PI_4;

use nalgebra::{SymmetricEigen, Vector2};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fcs::Mat2;

pub type Vec2 = Vector2<f64>;

/// Components smaller than this count as no signal.
pub const MIN_SIGNAL: f64 = 1e-300;
/// Largest accepted condition number of a covariance.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Psnl,
    Cl,
    Ir,
    Unclassified,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Psnl => "PSNL",
            Regime::Cl => "CL",
            Regime::Ir => "IR",
            Regime::Unclassified => "Unclassified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    pub delta: f64,
    pub theta: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            delta: 0.1,
            theta: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub sigma_plus_ratio: f64,
    pub sigma_minus_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityReport {
    pub rel_full: f64,
    pub rel_intensity: f64,
    pub rel_phase: f64,
    pub rel_psn: f64,
    pub regime: Regime,
    pub diagnostics: Diagnostics,
}

/// Balanced-detector means for total photon number `n_plus`.
pub fn homodyne_means(n_plus: f64, phase: f64, phase_lo: f64) -> (f64, f64) {
    let arg = FRAC_PI_4 + 0.5 * (phase - phase_lo);
    let c = arg.cos();
    let n1 = n_plus * c * c;
    (n1, n_plus - n1)
}

/// Signal derivatives at path length z: (dn̄_p/dρ, dφ̄/dρ) and n̄_p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Signals {
    pub n_p: f64,
    pub dn_p: f64,
    pub dphi: f64,
}

impl Signals {
    /// At fixed thickness z: dn̄_p/dρ = −S₊z·n̄_p, dφ̄/dρ = S₋z.
    pub fn at(n_p: f64, s_plus: f64, s_minus: f64, z: f64) -> Self {
        Signals {
            n_p,
            dn_p: -s_plus * z * n_p,
            dphi: s_minus * z,
        }
    }

    pub fn vector(&self) -> Vec2 {
        let plus = 0.5 * self.dn_p;
        let minus = -0.5 * self.n_p * self.dphi;
        Vec2::new(plus + minus, plus - minus)
    }
}

/// Signal vector at z_opt: dn̄_p/dρ = −n_p0/(eρ), dφ̄/dρ = S₋/(ρS₊).
pub fn signal_vector(n_p0: f64, density: f64, s_plus: f64, s_minus: f64) -> Result<Vec2> {
    let z = crate::propagation::z_optimal(density, s_plus)?;
    let n_p = n_p0 / core::f64::consts::E;
    let s = Signals::at(n_p, s_plus, s_minus, z).vector();
    if s[0].abs() < MIN_SIGNAL && s[1].abs() < MIN_SIGNAL {
        return Err(Error::DegenerateSignal);
    }
    Ok(s)
}

fn checked_inverse(sigma2: &Mat2) -> Result<Mat2> {
    let sym = (sigma2 + sigma2.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.max();
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularCovariance { condition });
    }
    sym.try_inverse()
        .ok_or(Error::SingularCovariance { condition })
}

/// Δρ from [sᵀ(Σ²)⁻¹s]^{−1/2}.
pub fn cramer_rao_full(signal: &Vec2, sigma2: &Mat2) -> Result<f64> {
    if signal.amax() < MIN_SIGNAL {
        return Err(Error::DegenerateSignal);
    }
    let inv = checked_inverse(sigma2)?;
    let info = (signal.transpose() * inv * signal)[(0, 0)];
    Ok(1.0 / info.sqrt())
}

pub fn cramer_rao_intensity(signals: &Signals, sigma_plus_sq: f64) -> Result<f64> {
    if signals.dn_p.abs() < MIN_SIGNAL {
        return Err(Error::DegenerateSignal);
    }
    Ok(sigma_plus_sq.sqrt() / signals.dn_p.abs())
}

pub fn cramer_rao_phase(signals: &Signals, sigma_minus_sq: f64) -> Result<f64> {
    let s = signals.n_p * signals.dphi;
    if s.abs() < MIN_SIGNAL {
        return Err(Error::DegenerateSignal);
    }
    Ok(sigma_minus_sq.sqrt() / s.abs())
}

/// Both channels at pure shot noise σ² = 2n̄_p, Fisher information added.
pub fn psn_estimate(signals: &Signals) -> Result<f64> {
    let sigma_sq = 2.0 * signals.n_p;
    let info = (signals.dn_p.powi(2) + (signals.n_p * signals.dphi).powi(2)) / sigma_sq;
    if !(info > 0.0) {
        return Err(Error::DegenerateSignal);
    }
    Ok(1.0 / info.sqrt())
}

pub fn classify_regime(d: &Diagnostics, t: &RegimeThresholds) -> Regime {
    let (p, m) = (d.sigma_plus_ratio, d.sigma_minus_ratio);
    let quiet = 1.0 + t.delta;
    if p < quiet && m < quiet {
        Regime::Psnl
    } else if p > t.theta && m > t.theta {
        Regime::Cl
    } else if p < quiet && m > t.theta {
        Regime::Ir
    } else {
        Regime::Unclassified
    }
}

/// Projection v·Σ·vᵀ with v = (1, ±1).
pub fn project(sigma2: &Mat2, sign: f64) -> f64 {
    sigma2[(0, 0)] + sigma2[(1, 1)] + sign * (sigma2[(0, 1)] + sigma2[(1, 0)])
}

/// All four bounds, divided by ρ_M. The phase bound is infinite when S₋ = 0.
pub fn sensitivity_report(
    signals: &Signals,
    sigma2: &Mat2,
    density: f64,
    thresholds: &RegimeThresholds,
) -> Result<SensitivityReport> {
    let sigma_psn = 2.0 * signals.n_p;
    let plus = project(sigma2, 1.0);
    let minus = project(sigma2, -1.0);
    let diagnostics = Diagnostics {
        sigma_plus_ratio: plus / sigma_psn,
        sigma_minus_ratio: minus / sigma_psn,
    };
    let rel_phase = match cramer_rao_phase(signals, minus) {
        Ok(v) => v / density,
        Err(Error::DegenerateSignal) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(SensitivityReport {
        rel_full: cramer_rao_full(&signals.vector(), sigma2)? / density,
        rel_intensity: cramer_rao_intensity(signals, plus)? / density,
        rel_phase,
        rel_psn: psn_estimate(signals)? / density,
        regime: classify_regime(&diagnostics, thresholds),
        diagnostics,
    })
}
