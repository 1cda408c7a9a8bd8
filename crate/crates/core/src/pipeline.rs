//! One parameter point from inputs to sensitivity bounds.

use crate::adiabatic;
use crate::error::Result;
use crate::estimation::{sensitivity_report, RegimeThresholds, SensitivityReport, Signals};
use crate::fcs::{self, DiffusionExpansion};
use crate::liouvillian::{two_sided_matrix, CountingField, Molecule};
use crate::params::{ModelParams, ThicknessPolicy};
use crate::propagation::Transport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    FullFcs,
    Adiabatic,
}

impl Route {
    pub fn label(self) -> &'static str {
        match self {
            Route::FullFcs => "full",
            Route::Adiabatic => "adiabatic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResult {
    pub route: Route,
    pub s_plus: f64,
    pub s_minus: f64,
    pub expansion: DiffusionExpansion,
    /// Sample thickness used, m.
    pub z: f64,
    pub report: SensitivityReport,
    /// Gap of L₀ at J₀ (full route only), rad/s.
    pub spectral_gap: Option<f64>,
    /// False when the adiabatic route runs outside r_A + r_B ≤ γ/10.
    pub within_adiabatic_gate: bool,
}

/// Spectral gap of the χ = 0 Liouvillian at J₀.
pub fn spectral_gap(params: &ModelParams) -> Result<f64> {
    let m = Molecule::from_params(params)?;
    let l0 = crate::liouvillian::CountingLiouvillian {
        matrix: two_sided_matrix(&m, CountingField::ZERO, [0.0, 0.0]),
        chi: CountingField::ZERO,
        phase_phi: [0.0, 0.0],
    };
    // The gap is reported, not gated: small rates are handled perturbatively.
    Ok(fcs::dominant_eigenvalue(&l0, 0.0)?.gap)
}

pub fn statistics(params: &ModelParams, route: Route) -> Result<(f64, f64, DiffusionExpansion)> {
    match route {
        Route::FullFcs => {
            let w = fcs::weak_probe(params)?;
            Ok((w.s_plus(), w.s_minus(), w.expansion))
        }
        Route::Adiabatic => {
            let (sp, sm) = adiabatic::effective_cross_sections(params)?;
            Ok((sp, sm, adiabatic::adiabatic_expansion(params)?))
        }
    }
}

pub fn evaluate_with(
    params: &ModelParams,
    route: Route,
    thresholds: &RegimeThresholds,
) -> Result<PointResult> {
    params.validate()?;
    let (s_plus, s_minus, expansion) = statistics(params, route)?;
    let transport = Transport::new(params, s_plus, s_minus, expansion)?;
    let z_opt = transport.z_optimal()?;
    let z = match params.sample.thickness {
        ThicknessPolicy::Optimal => z_opt,
        ThicknessPolicy::Fixed(z) => z,
    };
    let state = transport.state(z);
    let signals = Signals::at(state.n_p, s_plus, s_minus, z);
    let report = sensitivity_report(&signals, &state.sigma2, params.sample.density, thresholds)?;
    let spectral_gap = match route {
        Route::FullFcs => Some(spectral_gap(params)?),
        Route::Adiabatic => None,
    };
    Ok(PointResult {
        route,
        s_plus,
        s_minus,
        expansion,
        z,
        report,
        spectral_gap,
        within_adiabatic_gate: adiabatic::within_gate(params),
    })
}

pub fn evaluate(params: &ModelParams, route: Route) -> Result<PointResult> {
    evaluate_with(params, route, &RegimeThresholds::default())
}
