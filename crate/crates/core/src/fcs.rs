//! Counting statistics of the probe photons exchanged with one molecule.
//!
//! Cumulant rates are derivatives of the dominant eigenvalue λ(s) of L_χ at
//! χ_k = i·s_k. The primary route is exact perturbation theory around the
//! stationary state; a finite-difference route on the eigenvalue itself is
//! kept as an independent check where the spectral gap allows it.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{expm, trace, BorderedSolver, Super, Vec16};
use crate::liouvillian::{
    moment_derivatives, two_sided_matrix, CountingField, CountingLiouvillian, Molecule,
};
use crate::params::ModelParams;

pub type Mat2 = Matrix2<f64>;

/// Relative gap below which the dominant branch is not trusted.
pub const GAP_THRESHOLD: f64 = 1e-6;
/// Default tolerance on the two-order diffusion fit.
pub const FIT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominantEigenvalue {
    pub lambda: Complex64,
    /// Re λ₀ − Re λ₁.
    pub gap: f64,
}

fn spectrum_top(matrix: &Super) -> Result<DominantEigenvalue> {
    let eigs = matrix.eigenvalues().ok_or(Error::EigenSolverFailed)?;
    let mut sorted: [Complex64; 16] = core::array::from_fn(|i| eigs[i]);
    sorted.sort_by(|a, b| b.re.total_cmp(&a.re));
    Ok(DominantEigenvalue {
        lambda: sorted[0],
        gap: sorted[0].re - sorted[1].re,
    })
}

/// Eigenvalue of maximal real part, with its gap to the runner-up.
pub fn dominant_eigenvalue(l: &CountingLiouvillian, gamma: f64) -> Result<DominantEigenvalue> {
    let top = spectrum_top(&l.matrix)?;
    let threshold = GAP_THRESHOLD * gamma;
    if !(top.gap >= threshold) {
        return Err(Error::GapTooSmall {
            gap: top.gap,
            threshold,
        });
    }
    Ok(top)
}

/// K_χ(τ) = log tr[exp(L_χ τ) ρ_ss], starting from the χ = 0 stationary state.
pub fn cgf_finite_time(m: &Molecule, chi: CountingField, tau: f64) -> Result<Complex64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParam {
            field: "tau",
            reason: "must be > 0",
        });
    }
    chi.check(crate::liouvillian::TRUST_RADIUS)?;
    let l0 = two_sided_matrix(m, CountingField::ZERO, [0.0, 0.0]);
    let rho = *BorderedSolver::new(&l0)?.stationary();
    let lchi = two_sided_matrix(m, chi, [0.0, 0.0]);
    let propagator = expm(&(lchi * Complex64::new(tau, 0.0)))?;
    Ok(trace(&(propagator * rho)).ln())
}

/// First and second cumulant rates per molecule (s⁻¹), counting photons
/// removed from detector k: c1 = ∂λ/∂s, c2 = ∂²λ/∂s∂s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCumulants {
    pub c1: [f64; 2],
    pub c2: Mat2,
}

impl RateCumulants {
    pub fn c1_plus(&self) -> f64 {
        self.c1[0] + self.c1[1]
    }
}

/// Rayleigh–Schrödinger perturbation theory at s = 0 with phases φ.
pub fn rate_cumulants_at_phase(m: &Molecule, phi: [f64; 2]) -> Result<RateCumulants> {
    let l0 = two_sided_matrix(m, CountingField::ZERO, phi);
    let solver = BorderedSolver::new(&l0)?;
    let rho = *solver.stationary();
    let d = moment_derivatives(m, phi);
    let drive: [Vec16; 2] = [d.first[0] * rho, d.first[1] * rho];
    let response: [Vec16; 2] = [solver.drazin(&drive[0]), solver.drazin(&drive[1])];
    let c1 = [trace(&drive[0]).re, trace(&drive[1]).re];
    let mut c2 = Mat2::zeros();
    for k in 0..2 {
        for l in 0..2 {
            let mut value =
                -trace(&(d.first[k] * response[l])) - trace(&(d.first[l] * response[k]));
            if k == l {
                value += trace(&(d.second[k] * rho));
            }
            c2[(k, l)] = value.re;
        }
    }
    Ok(RateCumulants { c1, c2 })
}

pub fn rate_cumulants(m: &Molecule) -> Result<RateCumulants> {
    rate_cumulants_at_phase(m, [0.0, 0.0])
}

fn moment_lambda(m: &Molecule, s1: f64, s2: f64, gamma: f64) -> Result<f64> {
    let matrix = two_sided_matrix(m, CountingField::moment(s1, s2), [0.0, 0.0]);
    let top = spectrum_top(&matrix)?;
    let threshold = GAP_THRESHOLD * gamma;
    if !(top.gap >= threshold) {
        return Err(Error::GapTooSmall {
            gap: top.gap,
            threshold,
        });
    }
    Ok(top.lambda.re)
}

/// Richardson estimate from step h and h/2 of a second-order scheme.
fn richardson(coarse: f64, fine: f64) -> (f64, f64) {
    let value = (4.0 * fine - coarse) / 3.0;
    (value, (value - fine).abs())
}

/// Cumulant rates from central differences of the dominant eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDifferenceCumulants {
    pub cumulants: RateCumulants,
    /// Largest Richardson error estimate relative to the scale of its block.
    pub error: f64,
}

pub fn rate_cumulants_fd(
    m: &Molecule,
    step_first: f64,
    step_second: f64,
    tolerance: f64,
) -> Result<FiniteDifferenceCumulants> {
    let gamma = m.gamma;
    let lam = |s1: f64, s2: f64| moment_lambda(m, s1, s2, gamma);
    let lambda0 = lam(0.0, 0.0)?;

    let first = |k: usize, h: f64| -> Result<f64> {
        let (p, q) = if k == 0 {
            ((h, 0.0), (-h, 0.0))
        } else {
            ((0.0, h), (0.0, -h))
        };
        Ok((lam(p.0, p.1)? - lam(q.0, q.1)?) / (2.0 * h))
    };
    let diag = |k: usize, h: f64| -> Result<f64> {
        let (p, q) = if k == 0 {
            ((h, 0.0), (-h, 0.0))
        } else {
            ((0.0, h), (0.0, -h))
        };
        Ok((lam(p.0, p.1)? - 2.0 * lambda0 + lam(q.0, q.1)?) / (h * h))
    };
    let mixed = |h: f64| -> Result<f64> {
        Ok((lam(h, h)? - lam(h, -h)? - lam(-h, h)? + lam(-h, -h)?) / (4.0 * h * h))
    };

    let mut c1 = [0.0; 2];
    let mut err1 = [0.0; 2];
    for k in 0..2 {
        let (v, e) = richardson(first(k, step_first)?, first(k, 0.5 * step_first)?);
        c1[k] = v;
        err1[k] = e;
    }
    let mut c2 = Mat2::zeros();
    let mut err2 = Mat2::zeros();
    for k in 0..2 {
        let (v, e) = richardson(diag(k, step_second)?, diag(k, 0.5 * step_second)?);
        c2[(k, k)] = v;
        err2[(k, k)] = e;
    }
    let (v, e) = richardson(mixed(step_second)?, mixed(0.5 * step_second)?);
    c2[(0, 1)] = v;
    c2[(1, 0)] = v;
    err2[(0, 1)] = e;

    let scale1 = c1[0].abs().max(c1[1].abs()).max(f64::MIN_POSITIVE);
    let scale2 = c2.abs().max().max(f64::MIN_POSITIVE);
    let error = (err1[0].max(err1[1]) / scale1).max(err2.max() / scale2);
    if !(error <= tolerance) {
        return Err(Error::DifferentiationUnstable { error });
    }
    Ok(FiniteDifferenceCumulants {
        cumulants: RateCumulants { c1, c2 },
        error,
    })
}

/// Shot noise of the local oscillator held at n_LO = n_p(z): every absorbed
/// probe photon is matched by an LO photon removed from the two balanced
/// detectors, adding ½·c1₊ to both diagonal entries.
pub fn local_oscillator_term(c1_plus: f64) -> Mat2 {
    Mat2::identity() * (0.5 * c1_plus)
}

/// Detector-level second-cumulant rate: molecular plus local oscillator.
pub fn detector_rates(c: &RateCumulants) -> Mat2 {
    c.c2 + local_oscillator_term(c.c1_plus())
}

fn extensive_prefactor(params: &ModelParams) -> Result<f64> {
    let derived = params.derived()?;
    Ok(params.sample.density * derived.beam_area * params.laser.measurement_time)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantSet {
    pub s1: f64,
    pub s2: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    /// D_J at `flux`, per unit length.
    pub d: Mat2,
    pub flux: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionExpansion {
    /// m²
    pub d1: Mat2,
    /// m⁴·s
    pub d2: Mat2,
    pub fit_residual: f64,
}

impl DiffusionExpansion {
    /// D_J/(ρ_M τ 𝒜) reconstructed from the two orders.
    pub fn rates_at(&self, flux: f64) -> Mat2 {
        self.d1 * flux + self.d2 * (0.5 * flux * flux)
    }
}

/// Linear-response cross sections and the two-order diffusion expansion
/// fitted on one flux grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakProbe {
    /// (S₁, S₂) in m².
    pub cross_sections: [f64; 2],
    pub expansion: DiffusionExpansion,
}

impl WeakProbe {
    pub fn s_plus(&self) -> f64 {
        self.cross_sections[0] + self.cross_sections[1]
    }

    pub fn s_minus(&self) -> f64 {
        self.cross_sections[0] - self.cross_sections[1]
    }
}

/// Five log-spaced fluxes over [1e-4, 1e-3]·J₀. Higher fluxes let the
/// saturation of the chemical J² term leak into the linear order.
pub fn default_flux_grid(j0: f64) -> [f64; 5] {
    core::array::from_fn(|i| j0 * 10.0.powf(-4.0 + 0.25 * i as f64))
}

/// Least squares y ≈ a·x + ½b·x² through the origin.
fn fit_two_orders(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mut m = Matrix2::<f64>::zeros();
    let mut rhs = Vector2::<f64>::zeros();
    for (&x, &y) in xs.iter().zip(ys) {
        let row = Vector2::new(x, 0.5 * x * x);
        m += row * row.transpose();
        rhs += row * y;
    }
    let sol = m.lu().solve(&rhs).unwrap_or_else(Vector2::zeros);
    (sol[0], sol[1])
}

pub fn weak_probe_on_grid(params: &ModelParams, grid: &[f64], tolerance: f64) -> Result<WeakProbe> {
    let derived = params.derived()?;
    let j0 = derived.photon_flux_j0;
    if grid.len() < 4 || grid.iter().any(|&j| !(j > 0.0)) {
        return Err(Error::InvalidParam {
            field: "flux_grid",
            reason: "needs at least 4 positive fluxes",
        });
    }
    let xs: alloc::vec::Vec<f64> = grid.iter().map(|j| j / j0).collect();
    let mut c1s = [alloc::vec::Vec::new(), alloc::vec::Vec::new()];
    let mut entries: [[alloc::vec::Vec<f64>; 2]; 2] = Default::default();
    for &flux in grid {
        let c = rate_cumulants(&Molecule::at_flux(params, flux)?)?;
        let rates = detector_rates(&c);
        for k in 0..2 {
            c1s[k].push(c.c1[k]);
            for l in 0..2 {
                entries[k][l].push(rates[(k, l)]);
            }
        }
    }
    let mut cross_sections = [0.0; 2];
    for k in 0..2 {
        cross_sections[k] = fit_two_orders(&xs, &c1s[k]).0 / j0;
    }
    let mut d1 = Mat2::zeros();
    let mut d2 = Mat2::zeros();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..2 {
        for l in 0..2 {
            let ys = &entries[k][l];
            let (a, b) = fit_two_orders(&xs, ys);
            d1[(k, l)] = a / j0;
            d2[(k, l)] = b / (j0 * j0);
            for (&x, &y) in xs.iter().zip(ys) {
                worst = worst.max((a * x + 0.5 * b * x * x - y).abs());
                scale = scale.max(y.abs());
            }
        }
    }
    let fit_residual = if scale > 0.0 { worst / scale } else { 0.0 };
    if !(fit_residual <= tolerance) {
        return Err(Error::FitResidualExceeded {
            residual: fit_residual,
            tolerance,
        });
    }
    Ok(WeakProbe {
        cross_sections,
        expansion: DiffusionExpansion {
            d1,
            d2,
            fit_residual,
        },
    })
}

pub fn weak_probe(params: &ModelParams) -> Result<WeakProbe> {
    let j0 = params.derived()?.photon_flux_j0;
    weak_probe_on_grid(params, &default_flux_grid(j0), FIT_TOLERANCE)
}

/// Per-detector cross sections (S₁, S₂) in the weak-probe limit.
pub fn cross_sections(params: &ModelParams) -> Result<(f64, f64)> {
    let w = weak_probe(params)?;
    Ok((w.cross_sections[0], w.cross_sections[1]))
}

pub fn fit_diffusion_expansion(params: &ModelParams, grid: &[f64]) -> Result<DiffusionExpansion> {
    Ok(weak_probe_on_grid(params, grid, FIT_TOLERANCE)?.expansion)
}

/// D_J at photon flux `flux` (per unit length, prefactor ρ_M𝒜τ).
pub fn diffusion_matrix(params: &ModelParams, flux: f64) -> Result<Mat2> {
    if !(flux > 0.0) {
        return Err(Error::InvalidParam {
            field: "flux",
            reason: "must be > 0",
        });
    }
    let c = rate_cumulants(&Molecule::at_flux(params, flux)?)?;
    Ok(detector_rates(&c) * extensive_prefactor(params)?)
}

/// D_J from the finite-difference eigenvalue route.
pub fn diffusion_matrix_fd(params: &ModelParams, flux: f64, tolerance: f64) -> Result<Mat2> {
    let c = rate_cumulants_fd(&Molecule::at_flux(params, flux)?, 1e-4, 1e-3, tolerance)?;
    Ok(detector_rates(&c.cumulants) * extensive_prefactor(params)?)
}

pub fn cumulant_set(params: &ModelParams, flux: f64) -> Result<CumulantSet> {
    let w = weak_probe(params)?;
    Ok(CumulantSet {
        s1: w.cross_sections[0],
        s2: w.cross_sections[1],
        s_plus: w.s_plus(),
        s_minus: w.s_minus(),
        d: diffusion_matrix(params, flux)?,
        flux,
    })
}
