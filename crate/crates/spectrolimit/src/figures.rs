//! Preset sweeps and gnuplot scripts for the three figures.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use spectrolimit_core::estimation::RegimeThresholds;
use spectrolimit_core::params::{mhz_to_angular, ModelParams};
use spectrolimit_core::pipeline::Route;

use crate::error::CliError;
use crate::record::{write_csv, Row};
use crate::sweep::{run_sweep, Axis, Grid, Scale, SweepParam, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig1c,
    Fig2,
    Fig3,
}

pub const FIG3_DETUNINGS_MHZ: [f64; 3] = [20.0, 40.0, 100.0];

fn rate_axis() -> Axis {
    Axis {
        param: SweepParam::Rate,
        grid: Grid {
            scale: Scale::Log,
            min: 1e-6,
            max: 1e2,
            count: 33,
        },
    }
}

fn detuning_axis() -> Axis {
    Axis {
        param: SweepParam::Detuning,
        grid: Grid {
            scale: Scale::Linear,
            min: -100.0,
            max: 100.0,
            count: 201,
        },
    }
}

/// Sweeps behind each figure, keyed by output stem.
pub fn presets(figure: Figure) -> Vec<(&'static str, SweepSpec)> {
    match figure {
        Figure::Fig1c => vec![("fig1c", SweepSpec::one(rate_axis()))],
        Figure::Fig2 => {
            let single = SweepSpec::one(detuning_axis());
            let by_rate = SweepSpec {
                axis1: detuning_axis(),
                axis2: Some(Axis {
                    param: SweepParam::Rate,
                    grid: Grid {
                        scale: Scale::Log,
                        min: 1e-4,
                        max: 1e-2,
                        count: 3,
                    },
                }),
            };
            vec![
                ("fig2a_cross_section_plus", single.clone()),
                ("fig2b_cross_section_minus", single.clone()),
                ("fig2c_variance_plus", by_rate.clone()),
                ("fig2d_variance_minus", by_rate),
                ("fig2e_sensitivity", single),
            ]
        }
        // Repeated for each of FIG3_DETUNINGS_MHZ.
        Figure::Fig3 => vec![("fig3", SweepSpec::one(rate_axis()))],
    }
}

/// The rate sweep at three unevenly spaced detunings, which a grid cannot express.
fn fig3_rows(pool: &rayon::ThreadPool, base: &ModelParams, t: &RegimeThresholds) -> Vec<Row> {
    let mut rows = Vec::new();
    for eps in FIG3_DETUNINGS_MHZ {
        let mut p = *base;
        p.molecule.state_a.detuning = mhz_to_angular(eps);
        rows.extend(run_sweep(
            pool,
            &p,
            &SweepSpec::one(rate_axis()),
            Route::FullFcs,
            t,
        ));
    }
    rows
}

const HEADER: &str = "set datafile separator ','\nset key top left\n";

fn script(stem: &str) -> String {
    let body = match stem {
        "fig1c" => "set logscale xy\nset xlabel 'r (MHz)'\nset ylabel 'relative sensitivity'\n\
             plot 'fig1c.csv' every ::1 using 2:9 with lines title 'full', \\\n\
             '' every ::1 using 2:10 with points pt 5 title 'intensity', \\\n\
             '' every ::1 using 2:11 with points pt 9 title 'phase', \\\n\
             '' every ::1 using 2:12 with points pt 7 title 'PSN'\n"
            .to_string(),
        "fig2a_cross_section_plus" => xy(stem, 5, "S_+ (m^2)"),
        "fig2b_cross_section_minus" => xy(stem, 6, "S_- (m^2)"),
        "fig2c_variance_plus" => by_rate(stem, 7, "Sigma_+^2 / sigma_PSN^2"),
        "fig2d_variance_minus" => by_rate(stem, 8, "Sigma_-^2 / sigma_PSN^2"),
        "fig2e_sensitivity" => format!(
            "set logscale y\nset xlabel 'detuning (MHz)'\nset ylabel 'relative sensitivity'\n\
             plot '{stem}.csv' every ::1 using 1:9 with lines title 'full', \\\n\
             '' every ::1 using 1:10 with points pt 5 title 'intensity', \\\n\
             '' every ::1 using 1:11 with points pt 9 title 'phase', \\\n\
             '' every ::1 using 1:12 with points pt 7 title 'PSN'\n"
        ),
        "fig3" => {
            let mut s =
                String::from("set logscale xy\nset xlabel 'r (MHz)'\nset multiplot layout 1,3\n");
            for (col, name) in [(9, "full"), (10, "intensity"), (11, "phase")] {
                s.push_str(&format!("set title '{name}'\nplot "));
                let curves: Vec<String> = FIG3_DETUNINGS_MHZ
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        let file = if i == 0 { "'fig3.csv'" } else { "''" };
                        format!(
                            "{file} every ::1 using 2:(abs($1-{e})<1e-9?${col}:1/0) with lines lc {i} title '{e} MHz', \\\n  \
                             '' every ::1 using 2:(abs($1-{e})<1e-9?$12:1/0) with points lc {i} pt 7 notitle"
                        )
                    })
                    .collect();
                s.push_str(&curves.join(", \\\n  "));
                s.push('\n');
            }
            s.push_str("unset multiplot\n");
            s
        }
        _ => unreachable!("no script for {stem}"),
    };
    format!("{HEADER}{body}")
}

fn xy(stem: &str, col: usize, ylabel: &str) -> String {
    format!(
        "set xlabel 'detuning (MHz)'\nset ylabel '{ylabel}'\n\
         plot '{stem}.csv' every ::1 using 1:{col} with lines notitle\n"
    )
}

fn by_rate(stem: &str, col: usize, ylabel: &str) -> String {
    let curves: Vec<String> = ["1e-4", "1e-3", "1e-2"]
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let file = if i == 0 { format!("'{stem}.csv'") } else { "''".into() };
            format!(
                "{file} every ::1 using 1:(abs($2/{r}-1)<1e-6?${col}:1/0) with lines title 'r = {r} MHz'"
            )
        })
        .collect();
    format!(
        "set logscale y\nset xlabel 'detuning (MHz)'\nset ylabel '{ylabel}'\nplot {}\n",
        curves.join(", \\\n  ")
    )
}

/// Writes `<stem>.csv` and `<stem>.gp` for every panel of `figure` and
/// returns the paths written.
pub fn emit_figure_pack(
    figure: Figure,
    out_dir: &Path,
    pool: &rayon::ThreadPool,
    base: &ModelParams,
    thresholds: &RegimeThresholds,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut single_cache: Option<Vec<Row>> = None;
    let mut by_rate_cache: Option<Vec<Row>> = None;
    for (stem, spec) in presets(figure) {
        let rows = match figure {
            Figure::Fig3 => fig3_rows(pool, base, thresholds),
            _ => {
                let cache = if spec.axis2.is_some() {
                    &mut by_rate_cache
                } else {
                    &mut single_cache
                };
                cache
                    .get_or_insert_with(|| run_sweep(pool, base, &spec, Route::FullFcs, thresholds))
                    .clone()
            }
        };
        let csv_path = out_dir.join(format!("{stem}.csv"));
        write_csv(BufWriter::new(File::create(&csv_path)?), &rows)?;
        let gp_path = out_dir.join(format!("{stem}.gp"));
        fs::write(&gp_path, script(stem))?;
        written.push(csv_path);
        written.push(gp_path);
    }
    Ok(written)
}
