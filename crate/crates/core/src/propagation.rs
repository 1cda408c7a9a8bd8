//! Beer-law transport of the probe mean, phase and photon-count covariance.

use core::f64::consts::E;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fcs::{DiffusionExpansion, Mat2};
use crate::params::ModelParams;

/// Weight of the D⁽²⁾ term in the integrated covariance; the ½ of the
/// second-order flux expansion survives the z′-integral unchanged.
pub const KAPPA: f64 = 0.5;

/// Cross sections below this are treated as no absorption.
pub const MIN_CROSS_SECTION: f64 = 1e-40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationState {
    pub z: f64,
    pub n_p: f64,
    pub phase: f64,
    pub sigma2: Mat2,
}

/// Everything the transport needs, fixed for one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transport {
    pub n_p0: f64,
    pub j0: f64,
    pub density: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    pub expansion: DiffusionExpansion,
}

impl Transport {
    pub fn new(
        params: &ModelParams,
        s_plus: f64,
        s_minus: f64,
        expansion: DiffusionExpansion,
    ) -> Result<Self> {
        let derived = params.derived()?;
        Ok(Transport {
            n_p0: derived.n_p0,
            j0: derived.photon_flux_j0,
            density: params.sample.density,
            s_plus,
            s_minus,
            expansion,
        })
    }

    pub fn z_optimal(&self) -> Result<f64> {
        z_optimal(self.density, self.s_plus)
    }

    pub fn mean(&self, z: f64) -> (f64, f64) {
        propagate_mean(self.n_p0, self.density, self.s_plus, self.s_minus, z)
    }

    /// Σ²(z) from the integrated transport equation.
    pub fn covariance(&self, z: f64) -> Mat2 {
        covariance_closed_form(
            self.n_p0,
            self.j0,
            self.density,
            self.s_plus,
            &self.expansion,
            z,
        )
    }

    pub fn state(&self, z: f64) -> PropagationState {
        let (n_p, phase) = self.mean(z);
        PropagationState {
            z,
            n_p,
            phase,
            sigma2: self.covariance(z),
        }
    }

    /// (Σ₊², Σ₋²) at z_opt.
    pub fn sigma_pm_at_zopt(&self) -> Result<(f64, f64)> {
        self.z_optimal()?;
        let e2 = E * E;
        let proj = |m: &Mat2, sign: f64| m[(0, 0)] + m[(1, 1)] + sign * (m[(0, 1)] + m[(1, 0)]);
        let (d1, d2) = (&self.expansion.d1, &self.expansion.d2);
        let at = |sign: f64| {
            2.0 * self.n_p0 / e2
                + self.n_p0 * proj(d1, sign) / self.s_plus * (1.0 / E - 1.0 / e2)
                + KAPPA * self.n_p0 * self.j0 * proj(d2, sign) / (e2 * self.s_plus)
        };
        Ok((at(1.0), at(-1.0)))
    }
}

pub fn z_optimal(density: f64, s_plus: f64) -> Result<f64> {
    if !(s_plus > MIN_CROSS_SECTION) {
        return Err(Error::DegenerateAbsorption { s_plus });
    }
    Ok(1.0 / (density * s_plus))
}

/// (n_p, φ) after a path length z.
pub fn propagate_mean(n_p0: f64, density: f64, s_plus: f64, s_minus: f64, z: f64) -> (f64, f64) {
    (n_p0 * (-density * s_plus * z).exp(), density * s_minus * z)
}

pub fn covariance_closed_form(
    n_p0: f64,
    j0: f64,
    density: f64,
    s_plus: f64,
    expansion: &DiffusionExpansion,
    z: f64,
) -> Mat2 {
    let x = density * s_plus * z;
    let a = (-x).exp();
    let a2 = a * a;
    let linear = if s_plus > 0.0 {
        // e^{−x} − e^{−2x} without cancellation for thin samples.
        expansion.d1 * (-n_p0 / s_plus * a * Float::exp_m1(-x))
    } else {
        // Limit S₊ → 0: (e^{−x} − e^{−2x})/S₊ → ρz.
        expansion.d1 * (n_p0 * density * z)
    };
    Mat2::identity() * (n_p0 * a2) + linear + expansion.d2 * (KAPPA * a2 * n_p0 * j0 * density * z)
}
