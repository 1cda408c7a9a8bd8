//! Rotating-frame Hamiltonian and the counting-field Liouvillian.
//!
//! Basis order is |g_A⟩, |e_A⟩, |g_B⟩, |e_B⟩. Density matrices are vectorized
//! row-major, vec(ρ)[4i + j] = ρ[i, j], so vec(AρB) = (A ⊗ Bᵀ) vec(ρ).
//!
//! The counting fields enter as Hamiltonian phases: the left Hamiltonian is
//! evaluated at φ + χ/2 and the right one at φ − χ/2. Physical cumulants use
//! the continuation χ_k = i·s_k with real s_k.

use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::{kron, Mat4, Super};
use crate::params::ModelParams;

pub const TRUST_RADIUS: f64 = 0.1;

const G_A: usize = 0;
const E_A: usize = 1;
const G_B: usize = 2;
const E_B: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingField {
    pub chi: [Complex64; 2],
}

impl CountingField {
    pub const ZERO: CountingField = CountingField {
        chi: [Complex64::new(0.0, 0.0); 2],
    };

    pub fn new(chi1: Complex64, chi2: Complex64) -> Self {
        CountingField { chi: [chi1, chi2] }
    }

    pub fn real(chi1: f64, chi2: f64) -> Self {
        Self::new(Complex64::new(chi1, 0.0), Complex64::new(chi2, 0.0))
    }

    /// χ_k = i·s_k, under which K becomes a real moment-generating function.
    pub fn moment(s1: f64, s2: f64) -> Self {
        Self::new(Complex64::new(0.0, s1), Complex64::new(0.0, s2))
    }

    pub fn magnitude(&self) -> f64 {
        self.chi[0].norm().max(self.chi[1].norm())
    }

    pub fn check(&self, radius: f64) -> Result<()> {
        let magnitude = self.magnitude();
        if magnitude > radius {
            Err(Error::TrustRadiusExceeded { magnitude, radius })
        } else {
            Ok(())
        }
    }
}

/// The molecule seen by a probe of given intensity. All entries in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Molecule {
    pub detuning: [f64; 2],
    pub rabi: [f64; 2],
    pub gamma: f64,
    pub rate_a: f64,
    pub rate_b: f64,
}

impl Molecule {
    /// Molecule driven at photon flux `flux`; Ω² scales linearly with flux.
    pub fn at_flux(params: &ModelParams, flux: f64) -> Result<Self> {
        let derived = params.derived()?;
        let scale = (flux / derived.photon_flux_j0).sqrt();
        let m = &params.molecule;
        Ok(Molecule {
            detuning: [m.state_a.detuning, m.state_b.detuning],
            rabi: [derived.rabi[0] * scale, derived.rabi[1] * scale],
            gamma: m.decay_gamma,
            rate_a: m.rate_a,
            rate_b: m.rate_b,
        })
    }

    pub fn from_params(params: &ModelParams) -> Result<Self> {
        let derived = params.derived()?;
        Self::at_flux(params, derived.photon_flux_j0)
    }
}

/// Coupling pieces e^{σiφ_k}·A_{kσ}, indexed `[k][σ]` with σ = 0 for e^{+iφ}
/// (the |g⟩⟨e| element) and σ = 1 for e^{−iφ} (the |e⟩⟨g| element).
fn coupling_terms(m: &Molecule, phi: [Complex64; 2]) -> [[Mat4; 2]; 2] {
    let offsets = [FRAC_PI_4, -FRAC_PI_4];
    let i = Complex64::i();
    let mut terms = [[Mat4::zeros(); 2]; 2];
    for k in 0..2 {
        let up = (i * (phi[k] + offsets[k])).exp();
        let down = (-i * (phi[k] + offsets[k])).exp();
        for (alpha, (g, e)) in [(G_A, E_A), (G_B, E_B)].into_iter().enumerate() {
            let amplitude = 0.5 * FRAC_1_SQRT_2 * m.rabi[alpha];
            terms[k][0][(g, e)] = up * amplitude;
            terms[k][1][(e, g)] = down * amplitude;
        }
    }
    terms
}

fn diagonal(m: &Molecule) -> Mat4 {
    let mut h = Mat4::zeros();
    h[(E_A, E_A)] = Complex64::new(m.detuning[0], 0.0);
    h[(E_B, E_B)] = Complex64::new(m.detuning[1], 0.0);
    h
}

fn hamiltonian_at(m: &Molecule, phi: [Complex64; 2]) -> Mat4 {
    let terms = coupling_terms(m, phi);
    diagonal(m) + terms[0][0] + terms[0][1] + terms[1][0] + terms[1][1]
}

/// H(φ) in units of ħ (rad/s). Hermitian for real φ.
pub fn build_hamiltonian(m: &Molecule, phi: [f64; 2]) -> Mat4 {
    hamiltonian_at(
        m,
        [Complex64::new(phi[0], 0.0), Complex64::new(phi[1], 0.0)],
    )
}

fn commutator_part(left: &Mat4, right: &Mat4) -> Super {
    let id = Mat4::identity();
    (kron(left, &id) - kron(&id, &right.transpose())) * Complex64::new(0.0, -1.0)
}

fn jump(from: usize, to: usize) -> Mat4 {
    let mut c = Mat4::zeros();
    c[(to, from)] = Complex64::new(1.0, 0.0);
    c
}

/// Spontaneous decay in both states plus chemical transfer B→A at r_A and
/// A→B at r_B, acting on ground and excited levels alike.
pub fn dissipator(m: &Molecule) -> Super {
    let id = Mat4::identity();
    let channels = [
        (m.gamma, jump(E_A, G_A)),
        (m.gamma, jump(E_B, G_B)),
        (m.rate_a, jump(G_B, G_A)),
        (m.rate_a, jump(E_B, E_A)),
        (m.rate_b, jump(G_A, G_B)),
        (m.rate_b, jump(E_A, E_B)),
    ];
    let mut out = Super::zeros();
    for (rate, c) in channels {
        if rate.is_zero() {
            continue;
        }
        let cdc = c.adjoint() * c;
        let term = kron(&c, &c.conjugate())
            - (kron(&cdc, &id) + kron(&id, &cdc.transpose())) * Complex64::new(0.5, 0.0);
        out += term * Complex64::new(rate, 0.0);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountingLiouvillian {
    pub matrix: Super,
    pub chi: CountingField,
    pub phase_phi: [f64; 2],
}

/// L_χ with no trust-radius check.
pub fn two_sided_matrix(m: &Molecule, chi: CountingField, phi: [f64; 2]) -> Super {
    let half = Complex64::new(0.5, 0.0);
    let left = [phi[0] + chi.chi[0] * half, phi[1] + chi.chi[1] * half];
    let right = [phi[0] - chi.chi[0] * half, phi[1] - chi.chi[1] * half];
    commutator_part(&hamiltonian_at(m, left), &hamiltonian_at(m, right)) + dissipator(m)
}

pub fn build_two_sided(
    m: &Molecule,
    chi: CountingField,
    phi: [f64; 2],
) -> Result<CountingLiouvillian> {
    chi.check(TRUST_RADIUS)?;
    Ok(CountingLiouvillian {
        matrix: two_sided_matrix(m, chi, phi),
        chi,
        phase_phi: phi,
    })
}

/// Exact derivatives of L at s = 0 under χ_k = i·s_k.
#[derive(Debug, Clone)]
pub struct MomentDerivatives {
    /// ∂L/∂s_k
    pub first: [Super; 2],
    /// ∂²L/∂s_k²; mixed derivatives vanish since each term carries one φ_k.
    pub second: [Super; 2],
}

pub fn moment_derivatives(m: &Molecule, phi: [f64; 2]) -> MomentDerivatives {
    let terms = coupling_terms(
        m,
        [Complex64::new(phi[0], 0.0), Complex64::new(phi[1], 0.0)],
    );
    let signs = [1.0, -1.0];
    let mut first = [Super::zeros(); 2];
    let mut second = [Super::zeros(); 2];
    for k in 0..2 {
        // Left phases carry e^{−σ s/2}, right phases e^{+σ s/2}.
        let mut d_left = Mat4::zeros();
        let mut d_right = Mat4::zeros();
        let mut dd = Mat4::zeros();
        for (sigma, sign) in signs.iter().enumerate() {
            d_left += terms[k][sigma] * Complex64::new(-0.5 * sign, 0.0);
            d_right += terms[k][sigma] * Complex64::new(0.5 * sign, 0.0);
            dd += terms[k][sigma] * Complex64::new(0.25, 0.0);
        }
        first[k] = commutator_part(&d_left, &d_right);
        second[k] = commutator_part(&dd, &dd);
    }
    MomentDerivatives { first, second }
}
