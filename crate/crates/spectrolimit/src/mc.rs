//! Telegraph Monte Carlo on the worker pool.

use rayon::prelude::*;
use serde::Serialize;
use spectrolimit_core::oracles::{check_telegraph_inputs, reduce_telegraph, McConfig, McResult};
use spectrolimit_core::params::ModelParams;

use crate::error::CliError;

/// Trajectories run in parallel; each draws from its own (seed, index)
/// stream and the reduction runs in index order, so the result matches
/// the sequential oracle bit for bit.
pub fn telegraph_parallel(
    pool: &rayon::ThreadPool,
    params: &ModelParams,
    mc: &McConfig,
) -> Result<McResult, CliError> {
    let telegraph = check_telegraph_inputs(params, mc)?;
    let samples: Vec<[f64; 2]> = pool.install(|| {
        (0..mc.n_trajectories as u64)
            .into_par_iter()
            .map(|i| telegraph.trajectory(mc.seed, i, mc.horizon))
            .collect()
    });
    Ok(reduce_telegraph(params, &telegraph, &samples, mc.horizon)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRecord {
    pub trajectories: usize,
    pub seed: u64,
    pub chemical_diffusion: [[f64; 2]; 2],
    pub standard_error: [[f64; 2]; 2],
    pub analytic: [[f64; 2]; 2],
}

impl McRecord {
    pub fn new(result: &McResult, seed: u64) -> Self {
        let grid =
            |m: &spectrolimit_core::fcs::Mat2| [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]];
        McRecord {
            trajectories: result.trajectories,
            seed,
            chemical_diffusion: grid(&result.covariance),
            standard_error: grid(&result.standard_error),
            analytic: grid(&result.analytic),
        }
    }
}
