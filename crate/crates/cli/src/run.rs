//! Sweep execution. Points run on a worker pool; rows reach the sink in
//! sweep order as soon as every earlier point is done.

use std::collections::BTreeMap;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use cbs_core::atom::saturation;
use cbs_core::bistatic::{assemble_with, spectral_density, BistaticOptions};
use cbs_core::dipole::{ensemble_samples, predicted_ratio, saturation_response, ClassicalParams};
use cbs_core::mc::{mc_breakdown, mc_spectral_point, McBreakdown, McOptions};
use cbs_core::slab::{solve_intensity, IntensityProfile, SlabGrid};
use cbs_core::stats::with_workers;
use cbs_core::{Channel, Detuning, McEstimate, MediumParams};
use rayon::prelude::*;

use crate::config::{Axis, Mode, RunConfig};
use crate::table::{Cell, ResultRow, Table};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("sweep point {point} ({axis} = {value}): {source}")]
    Point {
        point: usize,
        axis: &'static str,
        value: f64,
        #[source]
        source: cbs_core::Error,
    },
    #[error(transparent)]
    Setup(#[from] cbs_core::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

/// Saturation times squared thickness above which the first-order
/// expansion is unreliable.
pub const VALIDITY_BOUND: f64 = 0.1;

/// Sweep points where `s b²` exceeds [`VALIDITY_BOUND`].
pub fn validity_warnings(cfg: &RunConfig) -> Vec<String> {
    (0..cfg.values.len())
        .filter_map(|k| {
            let b = cfg.param(Axis::B, k);
            let s = saturation(Detuning(cfg.param(Axis::Delta, k)), cfg.param(Axis::S0, k));
            let sb2 = s * b * b;
            (sb2 > VALIDITY_BOUND).then(|| {
                format!(
                    "point {k}: s*b^2 = {sb2:.3} exceeds {VALIDITY_BOUND}; the first-order result is outside its validity range"
                )
            })
        })
        .collect()
}

/// Column names of the table produced by `cfg`.
pub fn columns(cfg: &RunConfig) -> Vec<String> {
    let mut cols: Vec<String> = ["point", "channel", "b", "delta", "delta_p", "s0"].iter().map(|s| s.to_string()).collect();
    match cfg.mode {
        Mode::Scalar | Mode::Vectorial => {
            cols.push("s".into());
            cols.extend(BREAKDOWN_FIELDS.iter().map(|s| s.to_string()));
            cols.push("eta_s".into());
            if cfg.mode == Mode::Vectorial {
                cols.extend(BREAKDOWN_FIELDS.iter().map(|s| format!("{s}_err")));
                cols.push("eta_s_err".into());
            }
        }
        Mode::Spectrum => {
            cols.extend(["ladder", "crossed", "eta"].iter().map(|s| s.to_string()));
            if cfg.channel != Channel::Scalar {
                cols.extend(["ladder_err", "crossed_err", "eta_err"].iter().map(|s| s.to_string()));
            }
        }
        Mode::Classical => {
            cols.extend(
                [
                    "atoms",
                    "realizations",
                    "klf",
                    "background",
                    "background_err",
                    "crossed",
                    "crossed_err",
                    "gamma_l",
                    "gamma_l_err",
                    "gamma_c",
                    "gamma_c_err",
                    "ratio",
                    "ratio_err",
                    "predicted_ratio",
                    "predicted_ratio_reciprocal_only",
                    "sigmas_from_prediction",
                    "sigmas_from_reciprocal_only",
                ]
                .iter()
                .map(|s| s.to_string()),
            );
        }
    }
    cols
}

/// Columns drawn in the plot.
pub fn plot_columns(cfg: &RunConfig) -> Vec<&'static str> {
    match cfg.mode {
        Mode::Scalar | Mode::Vectorial => vec!["gamma_l_el", "gamma_c_el", "gamma_l_in", "gamma_c_in", "eta_slope"],
        Mode::Spectrum => vec!["eta"],
        Mode::Classical => vec!["ratio", "predicted_ratio", "predicted_ratio_reciprocal_only"],
    }
}

const BREAKDOWN_FIELDS: [&str; 17] = [
    "l_el_1",
    "c_el_1",
    "s_el_1",
    "l_el_2_scatt",
    "c_el_2_scatt",
    "l_in_2",
    "c_in_2",
    "l_el_2_prop",
    "c_el_2_prop",
    "gamma_l",
    "gamma_c",
    "gamma_l_el",
    "gamma_c_el",
    "gamma_l_in",
    "gamma_c_in",
    "eta_linear",
    "eta_slope",
];

/// Shared state computed once before the sweep.
enum Prepared {
    None,
    Profile(IntensityProfile),
}

fn prepare(cfg: &RunConfig) -> Result<Prepared, cbs_core::Error> {
    if cfg.mode == Mode::Spectrum && cfg.channel == Channel::Scalar {
        let grid = SlabGrid::uniform(cfg.b, cfg.nodes)?;
        let d = Detuning(cfg.delta);
        return Ok(Prepared::Profile(solve_intensity(&grid, d, d)?));
    }
    Ok(Prepared::None)
}

fn mc_options(cfg: &RunConfig, point: usize) -> McOptions {
    McOptions::new(cfg.samples, cfg.seed.unwrap_or(0)).substream(1 << 20 | point as u64)
}

fn mc_errors(m: &McBreakdown) -> Vec<f64> {
    let zero = McEstimate::exact(0.0);
    let (lin, cin) = m.inelastic.unwrap_or((zero, zero));
    let bd = m.to_breakdown();
    let e = bd.mc_errors.unwrap_or_default();
    vec![
        e.l_el_1,
        e.c_el_1,
        m.linear.single.std_error,
        e.l_el_2_scatt,
        e.c_el_2_scatt,
        e.l_in_2,
        e.c_in_2,
        e.l_el_2_prop,
        e.c_el_2_prop,
        e.gamma_l,
        e.gamma_c,
        m.gamma_l_el().std_error,
        m.gamma_c_el().std_error,
        lin.ratio(&m.linear.ladder).std_error,
        cin.ratio(&m.linear.crossed).std_error,
        m.linear.enhancement.std_error,
        e.eta_slope,
    ]
}

fn evaluate(cfg: &RunConfig, prep: &Prepared, point: usize) -> Result<ResultRow, cbs_core::Error> {
    let b = cfg.param(Axis::B, point);
    let delta = cfg.param(Axis::Delta, point);
    let delta_p = cfg.param(Axis::DeltaP, point);
    let s0 = cfg.param(Axis::S0, point);
    let mut row: ResultRow = vec![point.into(), cfg.channel.name().into(), b.into(), delta.into(), delta_p.into(), s0.into()];
    match cfg.mode {
        Mode::Scalar | Mode::Vectorial => {
            let params = MediumParams::new(delta, b, s0, cfg.channel)?.with_klf(cfg.klf)?;
            let s = params.s();
            let (bd, errs) = if cfg.mode == Mode::Scalar {
                let opts = BistaticOptions { nodes: cfg.nodes, include_inelastic: cfg.inelastic, ..Default::default() };
                (assemble_with(&params, &opts)?, None)
            } else {
                let m = mc_breakdown(&params, cfg.inelastic, &mc_options(cfg, point))?;
                (m.to_breakdown(), Some(mc_errors(&m)))
            };
            row.push(s.into());
            row.extend(bd.fields().into_iter().map(|(_, v)| Cell::Real(v)));
            row.push(bd.eta(s).into());
            if let Some(errs) = errs {
                let lin = errs[15];
                let slope = errs[16];
                row.extend(errs.into_iter().map(Cell::Real));
                row.push(lin.hypot(s * slope).into());
            }
        }
        Mode::Spectrum => {
            if let Prepared::Profile(i) = prep {
                let d = spectral_density(i, Detuning(delta), Detuning(delta_p))?;
                row.extend([d.ladder, d.crossed, 1.0 + d.crossed / d.ladder].map(Cell::Real));
            } else {
                let params = MediumParams::new(delta, b, s0, cfg.channel)?.with_klf(cfg.klf)?;
                let p = mc_spectral_point(&params, delta_p, &mc_options(cfg, point))?;
                row.extend([p.ladder.mean, p.crossed.mean, p.eta.mean].map(Cell::Real));
                row.extend([p.ladder.std_error, p.crossed.std_error, p.eta.std_error].map(Cell::Real));
            }
        }
        Mode::Classical => {
            let params = ClassicalParams { n_atoms: cfg.atoms, b, saturations: vec![0.0, 0.5 * s0, s0], ..Default::default() };
            let samples = ensemble_samples(&params, cfg.realizations, mc_options(cfg, point).seed)?;
            let r = saturation_response(&samples)?;
            let pred = predicted_ratio(b)?;
            row.extend([cfg.atoms, cfg.realizations].map(Cell::from));
            row.push(params.mean_free_path().into());
            for e in [r.background, r.crossed, r.gamma_l, r.gamma_c, r.ratio] {
                row.extend([e.mean, e.std_error].map(Cell::Real));
            }
            row.extend([pred.full, pred.reciprocal_only, r.ratio.sigmas_from(pred.full), r.ratio.sigmas_from(pred.reciprocal_only)].map(Cell::Real));
        }
    }
    Ok(row)
}

/// Runs every sweep point and passes finished rows to `sink` in sweep order,
/// with the wall time of each point.
pub fn run_with<F>(cfg: &RunConfig, workers: Option<usize>, mut sink: F) -> Result<Table, RunError>
where
    F: FnMut(&ResultRow, Duration) -> std::io::Result<()>,
{
    let prep = prepare(cfg)?;
    let n = cfg.values.len();
    let (tx, rx) = mpsc::channel::<(usize, Result<ResultRow, cbs_core::Error>, Duration)>();
    let prep_ref = &prep;
    std::thread::scope(|scope| {
        scope.spawn(move || {
            with_workers(workers, || {
                (0..n).into_par_iter().for_each_with(tx, |tx, k| {
                    let start = Instant::now();
                    let row = evaluate(cfg, prep_ref, k);
                    let _ = tx.send((k, row, start.elapsed()));
                });
            })
        });
        let mut pending = BTreeMap::new();
        let mut table = Table { columns: columns(cfg), rows: Vec::with_capacity(n) };
        let mut first_error: Option<RunError> = None;
        for (k, row, dt) in rx {
            pending.insert(k, (row, dt));
            while let Some((row, dt)) = pending.remove(&table.rows.len()) {
                let point = table.rows.len();
                match row {
                    Ok(row) if first_error.is_none() => {
                        if let Err(e) = sink(&row, dt) {
                            first_error = Some(e.into());
                        }
                        table.rows.push(row);
                    }
                    Ok(row) => table.rows.push(row),
                    Err(source) => {
                        first_error.get_or_insert(RunError::Point { point, axis: cfg.axis.key(), value: cfg.values[point], source });
                        table.rows.push(Vec::new());
                    }
                }
            }
        }
        match first_error {
            Some(e) => Err(e),
            None => Ok(table),
        }
    })
}

/// Runs the sweep and returns its rows.
pub fn run_figure(cfg: &RunConfig) -> Result<Vec<ResultRow>, RunError> {
    Ok(run_with(cfg, None, |_, _| Ok(()))?.rows)
}
