//! Parameter grids and deterministic parallel sweeps.

use std::str::FromStr;

use rayon::prelude::*;
use spectrolimit_core::estimation::RegimeThresholds;
use spectrolimit_core::params::{mhz_to_angular, ModelParams};
use spectrolimit_core::pipeline::{evaluate_with, Route};

use crate::error::CliError;
use crate::record::Row;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Detuning of state A, MHz.
    Detuning,
    /// r_A = r_B, MHz.
    Rate,
    RateA,
    RateB,
    /// m⁻³
    Density,
}

impl FromStr for SweepParam {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "detuning" => SweepParam::Detuning,
            "rate" => SweepParam::Rate,
            "rate_A" | "rate_a" => SweepParam::RateA,
            "rate_B" | "rate_b" => SweepParam::RateB,
            "density" => SweepParam::Density,
            _ => return Err(CliError::Sweep(format!("unknown sweep parameter `{s}`"))),
        })
    }
}

impl SweepParam {
    pub fn apply(self, params: &mut ModelParams, value: f64) {
        let m = &mut params.molecule;
        match self {
            SweepParam::Detuning => m.state_a.detuning = mhz_to_angular(value),
            SweepParam::Rate => {
                m.rate_a = mhz_to_angular(value);
                m.rate_b = mhz_to_angular(value);
            }
            SweepParam::RateA => m.rate_a = mhz_to_angular(value),
            SweepParam::RateB => m.rate_b = mhz_to_angular(value),
            SweepParam::Density => params.sample.density = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub scale: Scale,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Grid {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.count < 2 {
            return Err(CliError::Sweep("grid count must be >= 2".into()));
        }
        if !(self.min < self.max) {
            return Err(CliError::Sweep("grid needs min < max".into()));
        }
        if self.scale == Scale::Log && !(self.min > 0.0) {
            return Err(CliError::Sweep("log grid needs min > 0".into()));
        }
        Ok(())
    }

    /// Endpoints are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    return self.max;
                }
                let t = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * t,
                    Scale::Log => {
                        let (a, b) = (self.min.log10(), self.max.log10());
                        10f64.powf(a + (b - a) * t)
                    }
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub param: SweepParam,
    pub grid: Grid,
}

impl FromStr for Axis {
    type Err = CliError;

    /// `param:scale:min:max:count`, e.g. `rate:log:1e-6:1e2:33`.
    fn from_str(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 5 {
            return Err(CliError::Sweep(format!(
                "axis `{s}` is not param:scale:min:max:count"
            )));
        }
        let number = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| CliError::Sweep(format!("`{t}` is not a number")))
        };
        let scale = match parts[1] {
            "lin" | "linear" => Scale::Linear,
            "log" => Scale::Log,
            other => return Err(CliError::Sweep(format!("unknown grid scale `{other}`"))),
        };
        let axis = Axis {
            param: parts[0].parse()?,
            grid: Grid {
                scale,
                min: number(parts[2])?,
                max: number(parts[3])?,
                count: parts[4]
                    .parse()
                    .map_err(|_| CliError::Sweep(format!("`{}` is not a count", parts[4])))?,
            },
        };
        axis.grid.validate()?;
        Ok(axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteChoice {
    Full,
    Adiabatic,
    Both,
}

impl RouteChoice {
    pub fn routes(self) -> &'static [Route] {
        match self {
            RouteChoice::Full => &[Route::FullFcs],
            RouteChoice::Adiabatic => &[Route::Adiabatic],
            RouteChoice::Both => &[Route::FullFcs, Route::Adiabatic],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
}

impl SweepSpec {
    pub fn one(axis1: Axis) -> Self {
        SweepSpec { axis1, axis2: None }
    }

    /// Grid points in row order: axis 1 outer, axis 2 inner.
    pub fn points(&self, base: &ModelParams) -> Vec<ModelParams> {
        let mut out = Vec::new();
        for v1 in self.axis1.grid.values() {
            let mut p = *base;
            self.axis1.param.apply(&mut p, v1);
            match &self.axis2 {
                None => out.push(p),
                Some(a2) => {
                    for v2 in a2.grid.values() {
                        let mut q = p;
                        a2.param.apply(&mut q, v2);
                        out.push(q);
                    }
                }
            }
        }
        out
    }
}

pub fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::Sweep("--workers must be >= 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| CliError::Sweep(format!("worker pool: {e}")))
}

/// One row per grid point, in grid order whatever the scheduling.
pub fn run_sweep(
    pool: &rayon::ThreadPool,
    base: &ModelParams,
    spec: &SweepSpec,
    route: Route,
    thresholds: &RegimeThresholds,
) -> Vec<Row> {
    let points = spec.points(base);
    pool.install(|| {
        points
            .par_iter()
            .map(|p| Row::from_outcome(p, &evaluate_with(p, route, thresholds)))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let a: Axis = "rate:log:1e-6:1e2:9".parse().unwrap();
        assert_eq!(a.param, SweepParam::Rate);
        let v = a.grid.values();
        assert_eq!(v.len(), 9);
        assert_eq!(v[0], 1e-6);
        assert_eq!(v[8], 1e2);
        assert!((v[2] - 1e-4).abs() < 1e-16);
        assert!("rate:log:0:1:3".parse::<Axis>().is_err());
        assert!("rate:lin:1:1:3".parse::<Axis>().is_err());
        assert!("rate:lin:0:1:1".parse::<Axis>().is_err());
        assert!("speed:lin:0:1:3".parse::<Axis>().is_err());
        assert!("rate:lin:0:1".parse::<Axis>().is_err());
    }

    #[test]
    fn two_axis_grid_order() {
        let spec = SweepSpec {
            axis1: "detuning:lin:-10:10:2".parse().unwrap(),
            axis2: Some("density:lin:1e16:2e16:3".parse().unwrap()),
        };
        let pts = spec.points(&ModelParams::reference());
        assert_eq!(pts.len(), 6);
        assert_eq!(
            pts[0].molecule.state_a.detuning,
            pts[2].molecule.state_a.detuning
        );
        assert_eq!(pts[1].sample.density, 1.5e16);
        assert!(pts[3].molecule.state_a.detuning > 0.0);
    }
}
