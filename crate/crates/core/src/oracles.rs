//! Independent checks: adaptive quadrature of the covariance integral,
//! a telegraph Monte Carlo for the chemical noise and a finite-difference
//! derivative.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::adiabatic::{self, conditioned_detector_cross_sections};
use crate::error::{Error, Result};
use crate::fcs::Mat2;
use crate::params::{ModelParams, State};

// Gauss–Kronrod 7/15 on [−1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: Mat2,
    /// Absolute error estimate (max-entry norm).
    pub error: f64,
}

struct Interval {
    a: f64,
    b: f64,
    value: Mat2,
    error: f64,
}

fn max_abs(m: &Mat2) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn gauss_kronrod<F: FnMut(f64) -> Result<Mat2>>(f: &mut F, a: f64, b: f64) -> Result<Interval> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let sum = f(c - dx)? + f(c + dx)?;
        kronrod += sum * WGK[j];
        if j % 2 == 1 {
            gauss += sum * WG[j / 2];
        }
    }
    Ok(Interval {
        a,
        b,
        value: kronrod * h,
        error: max_abs(&((kronrod - gauss) * h)),
    })
}

/// Globally adaptive Gauss–Kronrod integration of a 2×2 integrand to
/// `rel_tol` relative to the max-entry norm of the result.
pub fn integrate<F: FnMut(f64) -> Result<Mat2>>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<QuadratureResult> {
    let mut intervals = alloc::vec![gauss_kronrod(&mut f, a, b)?];
    loop {
        let value = intervals.iter().fold(Mat2::zeros(), |acc, i| acc + i.value);
        let error: f64 = intervals.iter().map(|i| i.error).sum();
        if !value.iter().all(|v| v.is_finite()) || !error.is_finite() {
            return Err(Error::QuadratureNotConverged { error });
        }
        if error <= rel_tol * max_abs(&value) || error == 0.0 {
            return Ok(QuadratureResult { value, error });
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureNotConverged { error });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(k, _)| k)
            .unwrap_or(0);
        let Interval { a, b, .. } = intervals.swap_remove(worst);
        let mid = 0.5 * (a + b);
        intervals.push(gauss_kronrod(&mut f, a, mid)?);
        intervals.push(gauss_kronrod(&mut f, mid, b)?);
    }
}

/// Inputs of the covariance integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceProblem {
    /// Σ₀², the input covariance.
    pub sigma0: Mat2,
    pub j0: f64,
    pub density: f64,
    pub s_plus: f64,
}

/// Σ²(z) = Σ₀²e^{−2ρS₊z} + ∫₀ᶻ e^{−2ρS₊(z−z′)} D_{J(z′)} dz′ with
/// J(z′) = J₀e^{−ρS₊z′}; `d_j` returns D_J per unit length.
pub fn quadrature_covariance<F: FnMut(f64) -> Result<Mat2>>(
    problem: &CovarianceProblem,
    mut d_j: F,
    z: f64,
    rel_tol: f64,
) -> Result<QuadratureResult> {
    let k = problem.density * problem.s_plus;
    let attenuated = problem.sigma0 * (-2.0 * k * z).exp();
    if z == 0.0 {
        return Ok(QuadratureResult {
            value: attenuated,
            error: 0.0,
        });
    }
    let integral = integrate(
        |zp| Ok(d_j(problem.j0 * (-k * zp).exp())? * (-2.0 * k * (z - zp)).exp()),
        0.0,
        z,
        rel_tol,
    )?;
    Ok(QuadratureResult {
        value: attenuated + integral.value,
        error: integral.error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_trajectories: usize,
    pub seed: u64,
    /// s
    pub dt: f64,
    /// s
    pub horizon: f64,
}

impl McConfig {
    /// Smallest valid configuration for the given reaction time.
    pub fn for_reaction_time(t_r: f64, n_trajectories: usize, seed: u64) -> Self {
        McConfig {
            n_trajectories,
            seed,
            dt: 0.01 * t_r,
            horizon: 10.0 * t_r,
        }
    }

    pub fn validate(&self, t_r: f64) -> Result<()> {
        if self.n_trajectories < 1000 {
            return Err(Error::InvalidParam {
                field: "n_trajectories",
                reason: "must be >= 1000",
            });
        }
        if !(self.dt > 0.0 && self.dt <= 0.01 * t_r * (1.0 + 1e-12)) {
            return Err(Error::InvalidParam {
                field: "dt",
                reason: "must be in (0, 0.01 t_R]",
            });
        }
        if !(self.horizon >= 10.0 * t_r * (1.0 - 1e-12)) {
            return Err(Error::InvalidParam {
                field: "horizon",
                reason: "must be >= 10 t_R",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    /// Chemical diffusion at J₀, per unit length.
    pub covariance: Mat2,
    pub standard_error: Mat2,
    /// 2t_R p_A p_B ΔS_kΔS_l J₀² ρ_M𝒜τ.
    pub analytic: Mat2,
    pub trajectories: usize,
}

/// Switching process and conditioned cross sections of one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Telegraph {
    /// A → B at `rate_b`, B → A at `rate_a`.
    pub rate_a: f64,
    pub rate_b: f64,
    pub p_a: f64,
    /// (S₁, S₂) conditioned on A and on B.
    pub s: [[f64; 2]; 2],
}

impl Telegraph {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let (p_a, _) = params.probabilities();
        Ok(Telegraph {
            rate_a: params.molecule.rate_a,
            rate_b: params.molecule.rate_b,
            p_a,
            s: [
                conditioned_detector_cross_sections(params, State::A)?,
                conditioned_detector_cross_sections(params, State::B)?,
            ],
        })
    }

    /// ∫₀^T S_{k|α(t)} dt for trajectory `index`, started from the stationary
    /// distribution. The stream is keyed by (seed, index) only.
    pub fn trajectory(&self, seed: u64, index: u64, horizon: f64) -> [f64; 2] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut in_a = uniform(&mut rng) < self.p_a;
        let mut t = 0.0;
        let mut acc = [0.0; 2];
        loop {
            let rate = if in_a { self.rate_b } else { self.rate_a };
            let wait = if rate > 0.0 {
                -uniform(&mut rng).ln() / rate
            } else {
                f64::INFINITY
            };
            let stay = wait.min(horizon - t);
            // The flux is constant between jumps, so the segment integral is exact.
            let s = &self.s[if in_a { 0 } else { 1 }];
            acc[0] += s[0] * stay;
            acc[1] += s[1] * stay;
            t += stay;
            if t >= horizon {
                return acc;
            }
            in_a = !in_a;
        }
    }

    /// Horizon minus the start-up deficit of the stationary autocorrelation,
    /// so that Cov/T_eff is unbiased at any horizon.
    pub fn effective_time(&self, horizon: f64) -> f64 {
        let total = self.rate_a + self.rate_b;
        horizon - (1.0 - (-total * horizon).exp()) / total
    }
}

/// Uniform draw in the open interval (0, 1).
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample covariance with its leave-one-out jackknife standard error.
pub fn jackknife_covariance(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (mean(x), mean(y));
    let products: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let suv = pairwise_sum(&products);
    let cov = suv / (n - 1.0);
    let leave_out: Vec<f64> = products
        .iter()
        .map(|p| (suv - p * n / (n - 1.0)) / (n - 2.0))
        .collect();
    let m = mean(&leave_out);
    let dev: Vec<f64> = leave_out.iter().map(|t| (t - m) * (t - m)).collect();
    (cov, ((n - 1.0) / n * pairwise_sum(&dev)).sqrt())
}

/// Reduces per-trajectory integrals (in trajectory order) to the chemical
/// diffusion matrix at J₀.
pub fn reduce_telegraph(
    params: &ModelParams,
    telegraph: &Telegraph,
    samples: &[[f64; 2]],
    horizon: f64,
) -> Result<McResult> {
    let derived = params.derived()?;
    let j0 = derived.photon_flux_j0;
    let scale = params.sample.density * derived.beam_area * params.laser.measurement_time * j0 * j0
        / telegraph.effective_time(horizon);
    let cols: [Vec<f64>; 2] = core::array::from_fn(|k| samples.iter().map(|s| s[k]).collect());
    let mut covariance = Mat2::zeros();
    let mut standard_error = Mat2::zeros();
    for k in 0..2 {
        for l in k..2 {
            let (c, se) = jackknife_covariance(&cols[k], &cols[l]);
            covariance[(k, l)] = c * scale;
            covariance[(l, k)] = c * scale;
            standard_error[(k, l)] = se * scale;
            standard_error[(l, k)] = se * scale;
        }
    }
    let analytic = adiabatic::chemical_coefficient(params)?
        * (params.sample.density * derived.beam_area * params.laser.measurement_time * j0 * j0);
    let reference = max_abs(&analytic);
    let worst = max_abs(&standard_error);
    if reference > 0.0 && worst > 0.1 * reference {
        return Err(Error::InsufficientStatistics {
            standard_error: worst,
            analytic: reference,
        });
    }
    Ok(McResult {
        covariance,
        standard_error,
        analytic,
        trajectories: samples.len(),
    })
}

pub fn check_telegraph_inputs(params: &ModelParams, mc: &McConfig) -> Result<Telegraph> {
    params.validate()?;
    if !adiabatic::within_gate(params) {
        return Err(Error::InvalidParam {
            field: "rate_A",
            reason: "telegraph simulation needs r_A + r_B <= gamma/10",
        });
    }
    mc.validate(params.reaction_time())?;
    Telegraph::new(params)
}

/// Sequential telegraph Monte Carlo. Parallel callers can evaluate
/// [`Telegraph::trajectory`] for each index and pass the ordered results to
/// [`reduce_telegraph`]; the output is identical.
pub fn telegraph_mc_diffusion(params: &ModelParams, mc: &McConfig) -> Result<McResult> {
    let telegraph = check_telegraph_inputs(params, mc)?;
    let samples: Vec<[f64; 2]> = (0..mc.n_trajectories as u64)
        .map(|i| telegraph.trajectory(mc.seed, i, mc.horizon))
        .collect();
    reduce_telegraph(params, &telegraph, &samples, mc.horizon)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub error: f64,
}

fn stencil<F: FnMut(f64) -> Result<f64>>(f: &mut F, x: f64, h: f64) -> Result<f64> {
    let (m2, m1, p1, p2) = (f(x - 2.0 * h)?, f(x - h)?, f(x + h)?, f(x + 2.0 * h)?);
    Ok((m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h))
}

/// Five-point central derivative. Steps halve from 1% of |x|; each pair is
/// Richardson-combined and the step whose successive estimates agree best
/// wins. The error estimate must stay below `rel_tol` times
/// max(|f′|, |f(x)/x|).
pub fn fd_pipeline_derivative<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    x: f64,
    rel_tol: f64,
) -> Result<Derivative> {
    let mut h = 1e-2 * if x != 0.0 { x.abs() } else { 1.0 };
    let mut prev_d = stencil(&mut f, x, h)?;
    let mut prev_r: Option<f64> = None;
    let mut best = Derivative {
        value: prev_d,
        error: f64::INFINITY,
    };
    for _ in 0..12 {
        h *= 0.5;
        let d = stencil(&mut f, x, h)?;
        let r = d + (d - prev_d) / 15.0;
        let error = match prev_r {
            Some(p) => (r - p).abs(),
            None => (d - prev_d).abs() / 15.0,
        };
        if error < best.error {
            best = Derivative { value: r, error };
        }
        prev_d = d;
        prev_r = Some(r);
    }
    // Flat functions are judged against the scale |f(x)/x| instead.
    let fx = f(x)?;
    let scale = best
        .value
        .abs()
        .max(if x != 0.0 { (fx / x).abs() } else { fx.abs() });
    if !(best.error <= rel_tol * scale) {
        return Err(Error::StencilUnstable { error: best.error });
    }
    Ok(best)
}

/// Covariance input of the transport: shot noise of the local-oscillator-
/// matched probe, n_p0 per detector.
pub fn vacuum_covariance(n_p0: f64) -> Mat2 {
    Mat2::identity() * n_p0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::mhz_to_angular;
    use crate::propagation::{propagate_mean, z_optimal};
    use core::f64::consts::{E, PI};

    fn problem() -> CovarianceProblem {
        CovarianceProblem {
            sigma0: Mat2::new(3.0, 0.5, 0.5, 2.0),
            j0: 1e21,
            density: 1e17,
            s_plus: 2e-17,
        }
    }

    #[test]
    fn integrates_smooth_functions() {
        let r = integrate(|x| Ok(Mat2::identity() * x.sin()), 0.0, PI, 1e-12).unwrap();
        assert!((r.value[(0, 0)] - 2.0).abs() < 1e-12);
        assert_eq!(r.value[(0, 1)], 0.0);
    }

    #[test]
    fn divergent_integral_is_reported() {
        let r = integrate(|x| Ok(Mat2::identity() / x), 0.0, 1.0, 1e-12);
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
    }

    #[test]
    fn covariance_without_diffusion_is_attenuated_input() {
        let p = problem();
        let z = 0.7;
        let q = quadrature_covariance(&p, |_| Ok(Mat2::zeros()), z, 1e-10).unwrap();
        let want = p.sigma0 * (-2.0 * p.density * p.s_plus * z).exp();
        assert!((q.value - want).abs().max() < 1e-15 * want.abs().max());
    }

    #[test]
    fn constant_diffusion_has_closed_form() {
        let p = problem();
        let d = Mat2::new(4e14, -1e14, -1e14, 9e14);
        let k = p.density * p.s_plus;
        for z in [0.0, 0.05, 0.5, 3.0] {
            let q = quadrature_covariance(&p, |_| Ok(d), z, 1e-12).unwrap();
            let a = (-2.0 * k * z).exp();
            let want = p.sigma0 * a + d * ((1.0 - a) / (2.0 * k));
            assert!(
                (q.value - want).abs().max() <= 1e-10 * want.abs().max(),
                "z = {z}"
            );
        }
    }

    #[test]
    fn telegraph_without_switching_back_is_silent() {
        let mut p = ModelParams::reference();
        p.molecule.rate_b = 0.0;
        let mc = McConfig::for_reaction_time(p.reaction_time(), 2000, 3);
        let r = telegraph_mc_diffusion(&p, &mc).unwrap();
        assert_eq!(r.analytic, Mat2::zeros());
        assert!(r.covariance.abs().max() <= 3.0 * r.standard_error.abs().max());
    }

    #[test]
    fn telegraph_reproduces_chemical_term() {
        let p = ModelParams::reference();
        let mc = McConfig::for_reaction_time(p.reaction_time(), 10_000, 7);
        let r = telegraph_mc_diffusion(&p, &mc).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                let dev = (r.covariance[(k, l)] - r.analytic[(k, l)]).abs();
                assert!(dev <= 3.0 * r.standard_error[(k, l)], "entry ({k}, {l})");
            }
        }
    }

    #[test]
    fn horizon_doubling_is_neutral() {
        let p = ModelParams::reference();
        let t_r = p.reaction_time();
        let short = McConfig::for_reaction_time(t_r, 10_000, 11);
        let long = McConfig {
            horizon: 2.0 * short.horizon,
            ..short
        };
        let a = telegraph_mc_diffusion(&p, &short).unwrap();
        let b = telegraph_mc_diffusion(&p, &long).unwrap();
        let dev = (a.covariance[(0, 0)] - b.covariance[(0, 0)]).abs();
        let se = a.standard_error[(0, 0)].hypot(b.standard_error[(0, 0)]);
        assert!(dev <= 3.0 * se);
    }

    #[test]
    fn telegraph_is_reproducible() {
        let p = ModelParams::reference();
        let mc = McConfig::for_reaction_time(p.reaction_time(), 1000, 42);
        assert_eq!(
            telegraph_mc_diffusion(&p, &mc).unwrap(),
            telegraph_mc_diffusion(&p, &mc).unwrap()
        );
        let other = McConfig { seed: 43, ..mc };
        assert_ne!(
            telegraph_mc_diffusion(&p, &mc).unwrap().covariance,
            telegraph_mc_diffusion(&p, &other).unwrap().covariance
        );
    }

    #[test]
    fn telegraph_input_validation() {
        let p = ModelParams::reference();
        let t_r = p.reaction_time();
        let field = |mc: McConfig| match mc.validate(t_r) {
            Err(Error::InvalidParam { field, .. }) => field,
            other => panic!("unexpected {other:?}"),
        };
        let ok = McConfig::for_reaction_time(t_r, 1000, 0);
        assert!(ok.validate(t_r).is_ok());
        assert_eq!(
            field(McConfig {
                n_trajectories: 999,
                ..ok
            }),
            "n_trajectories"
        );
        assert_eq!(
            field(McConfig {
                dt: 0.02 * t_r,
                ..ok
            }),
            "dt"
        );
        assert_eq!(
            field(McConfig {
                horizon: 5.0 * t_r,
                ..ok
            }),
            "horizon"
        );
        let fast = p.with_rate(mhz_to_angular(1.0));
        assert!(matches!(
            telegraph_mc_diffusion(
                &fast,
                &McConfig::for_reaction_time(fast.reaction_time(), 1000, 0)
            ),
            Err(Error::InvalidParam {
                field: "rate_A",
                ..
            })
        ));
    }

    #[test]
    fn too_few_samples_for_the_signal() {
        let p = ModelParams::reference();
        let t = Telegraph::new(&p).unwrap();
        let samples: Vec<[f64; 2]> = (0..4)
            .map(|i| t.trajectory(0, i, 10.0 * p.reaction_time()))
            .collect();
        assert!(matches!(
            reduce_telegraph(&p, &t, &samples, 10.0 * p.reaction_time()),
            Err(Error::InsufficientStatistics { .. })
        ));
    }

    #[test]
    fn jackknife_matches_brute_force() {
        let x = [1.0, 2.5, -0.3, 4.0, 3.3, 0.7, -1.2];
        let y = [0.4, 1.1, 0.2, 2.9, 1.0, -0.5, 0.0];
        let n = x.len();
        let cov = |xs: &[f64], ys: &[f64]| {
            let m = xs.len() as f64;
            let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
            xs.iter()
                .zip(ys)
                .map(|(a, b)| (a - mx) * (b - my))
                .sum::<f64>()
                / (m - 1.0)
        };
        let loo: Vec<f64> = (0..n)
            .map(|i| {
                let xs: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| x[j]).collect();
                let ys: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| y[j]).collect();
                cov(&xs, &ys)
            })
            .collect();
        let mean = loo.iter().sum::<f64>() / n as f64;
        let se = ((n as f64 - 1.0) / n as f64
            * loo.iter().map(|t| (t - mean).powi(2)).sum::<f64>())
        .sqrt();
        let (c, s) = jackknife_covariance(&x, &y);
        assert!((c - cov(&x, &y)).abs() < 1e-14);
        assert!((s - se).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_is_a_sum() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn finite_difference_examples() {
        let d = fd_pipeline_derivative(|r| Ok(r * r), 3.0, 1e-9).unwrap();
        assert!((d.value - 6.0).abs() < 1e-9);
        let d = fd_pipeline_derivative(|_| Ok(4.2), 3.0, 1e-9).unwrap();
        assert!(d.value.abs() < 1e-12);
    }

    #[test]
    fn photon_number_derivative_at_fixed_thickness() {
        let p = ModelParams::reference();
        let n_p0 = p.derived().unwrap().n_p0;
        let (rho, sp, sm) = (p.sample.density, 3.7e-17, 2.9e-16);
        let z = z_optimal(rho, sp).unwrap();
        let d = fd_pipeline_derivative(|r| Ok(propagate_mean(n_p0, r, sp, sm, z).0), rho, 1e-8)
            .unwrap();
        let want = -n_p0 / (E * rho);
        assert!((d.value - want).abs() <= 1e-6 * want.abs());
    }

    #[test]
    fn noisy_function_is_unstable() {
        let mut state = 1u64;
        let noisy = |x: f64| {
            state = state
                .wrapping_mul(6_364_136_223_846_793_005)
                .wrapping_add(1);
            Ok(x + 1e-6 * (state >> 11) as f64 / 9_007_199_254_740_992.0)
        };
        assert!(matches!(
            fd_pipeline_derivative(noisy, 1.0, 1e-9),
            Err(Error::StencilUnstable { .. })
        ));
    }

    #[test]
    fn vacuum_input() {
        assert_eq!(vacuum_covariance(5.0), Mat2::identity() * 5.0);
    }
}
