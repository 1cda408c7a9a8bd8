//! Physical inputs, unit conversion and derived quantities.
//!
//! User-facing frequencies are ordinary frequencies in MHz; everything stored
//! here is angular (rad/s) or SI.

use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// CODATA SI constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub eps0: f64,
    pub c: f64,
    pub debye: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    eps0: 8.854_187_812_8e-12,
    c: 299_792_458.0,
    debye: 3.335_640_952e-30,
};

/// Ordinary frequency in MHz to angular frequency in rad/s.
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    2.0 * PI * 1e6 * f_mhz
}

pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e6)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoPhotonPolicy {
    /// n_LO = n_p(z) at the measurement plane.
    #[default]
    MatchProbe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserParams {
    /// W
    pub power: f64,
    /// m
    pub wavelength: f64,
    /// m
    pub beam_diameter: f64,
    /// s
    pub measurement_time: f64,
    pub lo_photon_policy: LoPhotonPolicy,
}

/// One chemical state of the molecule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChemicalState {
    /// C·m
    pub dipole: f64,
    /// Detuning from the probe, rad/s.
    pub detuning: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum State {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoleculeParams {
    pub state_a: ChemicalState,
    pub state_b: ChemicalState,
    /// Spontaneous decay, rad/s.
    pub decay_gamma: f64,
    /// Rate into A (B -> A), rad/s.
    pub rate_a: f64,
    /// Rate into B (A -> B), rad/s.
    pub rate_b: f64,
}

impl MoleculeParams {
    pub fn state(&self, state: State) -> &ChemicalState {
        match state {
            State::A => &self.state_a,
            State::B => &self.state_b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThicknessPolicy {
    Optimal,
    /// Fixed sample thickness in m.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleParams {
    /// m^-3
    pub density: f64,
    pub thickness: ThicknessPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub laser: LaserParams,
    pub molecule: MoleculeParams,
    pub sample: SampleParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    /// rad/s
    pub omega_p: f64,
    /// m^2
    pub beam_area: f64,
    /// V/m
    pub field_e: f64,
    /// Rabi frequencies of A and B at full probe power, rad/s.
    pub rabi: [f64; 2],
    /// β² = 2Ω²/J0 per state, m²·s⁻¹.
    pub beta_sq: [f64; 2],
    /// m^-2 s^-1
    pub photon_flux_j0: f64,
    pub n_p0: f64,
}

impl DerivedQuantities {
    pub fn rabi_of(&self, state: State) -> f64 {
        self.rabi[state as usize]
    }

    pub fn beta_sq_of(&self, state: State) -> f64 {
        self.beta_sq[state as usize]
    }
}

fn positive(value: f64, field: &'static str) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam {
            field,
            reason: "must be finite and > 0",
        })
    }
}

fn non_negative(value: f64, field: &'static str) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam {
            field,
            reason: "must be finite and >= 0",
        })
    }
}

fn finite(value: f64, field: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParam {
            field,
            reason: "must be finite",
        })
    }
}

impl LaserParams {
    pub fn validate(&self) -> Result<()> {
        positive(self.power, "power")?;
        positive(self.wavelength, "wavelength")?;
        positive(self.beam_diameter, "beam_diameter")?;
        positive(self.measurement_time, "measurement_time")
    }
}

impl MoleculeParams {
    pub fn validate(&self) -> Result<()> {
        non_negative(self.state_a.dipole, "dipole_A")?;
        non_negative(self.state_b.dipole, "dipole_B")?;
        finite(self.state_a.detuning, "detuning_A")?;
        finite(self.state_b.detuning, "detuning_B")?;
        positive(self.decay_gamma, "decay_gamma")?;
        non_negative(self.rate_a, "rate_A")?;
        non_negative(self.rate_b, "rate_B")?;
        if self.rate_a + self.rate_b <= 0.0 {
            return Err(Error::InvalidParam {
                field: "rate_A",
                reason: "rate_A + rate_B must be > 0",
            });
        }
        Ok(())
    }
}

impl SampleParams {
    pub fn validate(&self) -> Result<()> {
        positive(self.density, "density")?;
        if let ThicknessPolicy::Fixed(z) = self.thickness {
            positive(z, "thickness")?;
        }
        Ok(())
    }
}

pub fn derive(
    constants: &PhysicalConstants,
    laser: &LaserParams,
    molecule: &MoleculeParams,
) -> Result<DerivedQuantities> {
    laser.validate()?;
    molecule.validate()?;
    let PhysicalConstants { hbar, eps0, c, .. } = *constants;
    let omega_p = 2.0 * PI * c / laser.wavelength;
    let beam_area = PI * laser.beam_diameter * laser.beam_diameter / 4.0;
    let field_e = (2.0 * laser.power / (beam_area * eps0 * c)).sqrt();
    let n_p0 = laser.power * laser.measurement_time * laser.wavelength / (2.0 * PI * hbar * c);
    let photon_flux_j0 = n_p0 / (beam_area * laser.measurement_time);
    let rabi = [
        molecule.state_a.dipole * field_e / hbar,
        molecule.state_b.dipole * field_e / hbar,
    ];
    let beta_sq = [
        2.0 * rabi[0] * rabi[0] / photon_flux_j0,
        2.0 * rabi[1] * rabi[1] / photon_flux_j0,
    ];
    Ok(DerivedQuantities {
        omega_p,
        beam_area,
        field_e,
        rabi,
        beta_sq,
        photon_flux_j0,
        n_p0,
    })
}

impl ModelParams {
    /// 1 mW at 500 nm through a 0.5 cm beam for 1 s, a 1 D transition in A
    /// only, γ = 10 MHz, ε_Δ = 40 MHz, r_A = r_B = 1e-4 MHz, ρ_M = 1e17 m⁻³.
    pub fn reference() -> Self {
        ModelParams {
            laser: LaserParams {
                power: 1e-3,
                wavelength: 500e-9,
                beam_diameter: 0.5e-2,
                measurement_time: 1.0,
                lo_photon_policy: LoPhotonPolicy::MatchProbe,
            },
            molecule: MoleculeParams {
                state_a: ChemicalState {
                    dipole: CODATA.debye,
                    detuning: mhz_to_angular(40.0),
                },
                state_b: ChemicalState {
                    dipole: 0.0,
                    detuning: 0.0,
                },
                decay_gamma: mhz_to_angular(10.0),
                rate_a: mhz_to_angular(1e-4),
                rate_b: mhz_to_angular(1e-4),
            },
            sample: SampleParams {
                density: 1e17,
                thickness: ThicknessPolicy::Optimal,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.laser.validate()?;
        self.molecule.validate()?;
        self.sample.validate()
    }

    pub fn derived(&self) -> Result<DerivedQuantities> {
        self.sample.validate()?;
        derive(&CODATA, &self.laser, &self.molecule)
    }

    pub fn gamma(&self) -> f64 {
        self.molecule.decay_gamma
    }

    /// Stationary chemical probabilities (p_A, p_B).
    pub fn probabilities(&self) -> (f64, f64) {
        let total = self.molecule.rate_a + self.molecule.rate_b;
        (self.molecule.rate_a / total, self.molecule.rate_b / total)
    }

    pub fn reaction_time(&self) -> f64 {
        1.0 / (self.molecule.rate_a + self.molecule.rate_b)
    }

    /// Same parameters with both rates set to `rate` (rad/s).
    pub fn with_rate(mut self, rate: f64) -> Self {
        self.molecule.rate_a = rate;
        self.molecule.rate_b = rate;
        self
    }

    /// Same parameters with the detuning of state A set (rad/s).
    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.molecule.state_a.detuning = detuning;
        self
    }
}
