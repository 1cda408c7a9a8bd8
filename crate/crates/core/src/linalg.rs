//! Dense 16×16 complex helpers: Kronecker products, the matrix exponential
//! and a bordered solver for the stationary state and Drazin inverse.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};

pub type Mat4 = SMatrix<Complex64, 4, 4>;
pub type Super = SMatrix<Complex64, 16, 16>;
pub type Vec16 = SVector<Complex64, 16>;

/// Diagonal positions of the row-major vectorization of a 4×4 matrix.
pub const TRACE_INDICES: [usize; 4] = [0, 5, 10, 15];

pub fn kron(a: &Mat4, b: &Mat4) -> Super {
    let mut out = Super::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let aij = a[(i, j)];
            if aij.is_zero() {
                continue;
            }
            for k in 0..4 {
                for l in 0..4 {
                    out[(4 * i + k, 4 * j + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn trace(v: &Vec16) -> Complex64 {
    TRACE_INDICES.iter().map(|&i| v[i]).sum()
}

pub fn vectorize(m: &Mat4) -> Vec16 {
    Vec16::from_fn(|k, _| m[(k / 4, k % 4)])
}

pub fn unvectorize(v: &Vec16) -> Mat4 {
    Mat4::from_fn(|i, j| v[4 * i + j])
}

fn one_norm(m: &Super) -> f64 {
    (0..16)
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

/// exp(m) by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(m: &Super) -> Result<Super> {
    let norm = one_norm(m);
    if !norm.is_finite() {
        return Err(Error::PropagationOverflow { norm });
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    if squarings > 1000 {
        return Err(Error::PropagationOverflow { norm });
    }
    let a = m * Complex64::new(0.5.powi(squarings), 0.0);
    let b = |k: usize| Complex64::new(PADE13[k], 0.0);
    let id = Super::identity();
    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let u_inner =
        a6 * (a6 * b(13) + a4 * b(11) + a2 * b(9)) + a6 * b(7) + a4 * b(5) + a2 * b(3) + id * b(1);
    let u = a * u_inner;
    let v =
        a6 * (a6 * b(12) + a4 * b(10) + a2 * b(8)) + a6 * b(6) + a4 * b(4) + a2 * b(2) + id * b(0);
    let mut r = (v - u)
        .full_piv_lu()
        .solve(&(v + u))
        .ok_or(Error::PropagationOverflow { norm })?;
    for _ in 0..squarings {
        r = r * r;
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::PropagationOverflow { norm });
    }
    Ok(r)
}

/// Solver for a trace-preserving generator L₀ bordered with the trace
/// functional: the first population row is replaced by `tr`, which removes
/// the null space without losing information.
pub struct BorderedSolver {
    lu: nalgebra::linalg::FullPivLU<Complex64, nalgebra::Const<16>, nalgebra::Const<16>>,
    stationary: Vec16,
}

impl BorderedSolver {
    pub fn new(l0: &Super) -> Result<Self> {
        let scale = one_norm(l0).max(1.0);
        let mut m = *l0;
        for j in 0..16 {
            m[(0, j)] = Complex64::zero();
        }
        for &i in &TRACE_INDICES {
            m[(0, i)] = Complex64::new(scale, 0.0);
        }
        let lu = m.full_piv_lu();
        let mut rhs = Vec16::zeros();
        rhs[0] = Complex64::new(scale, 0.0);
        let stationary = lu.solve(&rhs).ok_or(Error::SingularGenerator)?;
        if stationary
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::SingularGenerator);
        }
        Ok(BorderedSolver { lu, stationary })
    }

    /// The unit-trace null vector of L₀.
    pub fn stationary(&self) -> &Vec16 {
        &self.stationary
    }

    /// Solves L₀x = Qy with tr x = 0, where Q = 1 − |ρ₀⟩⟨tr|.
    pub fn drazin(&self, y: &Vec16) -> Vec16 {
        let mut rhs = y - self.stationary * trace(y);
        rhs[0] = Complex64::zero();
        self.lu.solve(&rhs).unwrap_or_else(Vec16::zeros)
    }
}
