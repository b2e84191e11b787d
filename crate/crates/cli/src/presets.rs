//! Built-in sweeps for the published figures.

use cbs_core::Channel;

use crate::config::{Axis, Mode, RunConfig};

/// One table of a preset and the columns to plot from it.
#[derive(Clone, Debug, PartialEq)]
pub struct Job {
    pub config: RunConfig,
    pub plot: Vec<&'static str>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub jobs: Vec<Job>,
}

pub const NAMES: [&str; 5] = ["fig9", "fig10", "fig11", "fig12", "fig13"];

pub const DEFAULT_SEED: u64 = 20_050_101;

fn range(start: f64, step: f64, end: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|k| start + step * k as f64).collect()
}

fn base(label: String, mode: Mode, channel: Channel, axis: Axis, values: Vec<f64>) -> RunConfig {
    RunConfig { label, mode, channel, axis, values, seed: Some(DEFAULT_SEED), ..RunConfig::default() }
}

fn gamma_pair(prefix: &str, axis: Axis, values: Vec<f64>, fixed: impl Fn(&mut RunConfig), samples: u64, plot: Vec<&'static str>) -> Vec<Job> {
    let mut scalar = base(format!("{prefix}_scalar"), Mode::Scalar, Channel::Scalar, axis, values.clone());
    let mut hpar = base(format!("{prefix}_hpar"), Mode::Vectorial, Channel::HParallelH, axis, values);
    fixed(&mut scalar);
    fixed(&mut hpar);
    hpar.samples = samples;
    vec![Job { config: scalar, plot: plot.clone() }, Job { config: hpar, plot }]
}

fn spectrum(prefix: &str, delta: f64) -> Vec<Job> {
    let mut jobs = Vec::new();
    for b in [0.5, 1.0, 2.0] {
        let tag = format!("b{}", b.to_string().replace('.', "p"));
        let mut scalar = base(format!("{prefix}_scalar_{tag}"), Mode::Spectrum, Channel::Scalar, Axis::DeltaP, range(-4.0, 0.05, 4.0));
        let mut hpar = base(format!("{prefix}_hpar_{tag}"), Mode::Spectrum, Channel::HParallelH, Axis::DeltaP, range(-4.0, 0.25, 4.0));
        for c in [&mut scalar, &mut hpar] {
            c.b = b;
            c.delta = delta;
        }
        hpar.samples = 500_000;
        jobs.push(Job { config: scalar, plot: vec!["eta"] });
        jobs.push(Job { config: hpar, plot: vec!["eta"] });
    }
    jobs
}

const GAMMAS: [&str; 4] = ["gamma_l_el", "gamma_c_el", "gamma_l_in", "gamma_c_in"];

fn detuning_sweep(prefix: &str, plot: Vec<&'static str>) -> Vec<Job> {
    gamma_pair(prefix, Axis::Delta, range(0.0, 0.25, 3.0), |c| c.b = 0.5, 2_000_000, plot)
}

fn thickness_sweep(prefix: &str, plot: Vec<&'static str>) -> Vec<Job> {
    let bs = vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0];
    gamma_pair(prefix, Axis::B, bs, |c| c.delta = 0.0, 1_000_000, plot)
}

pub fn preset(name: &str) -> Option<Preset> {
    let p = match name {
        "fig9" => Preset {
            name: "fig9",
            description: "normalized nonlinear components against detuning at b = 0.5",
            jobs: detuning_sweep("fig9", GAMMAS.to_vec()),
        },
        "fig10" => Preset {
            name: "fig10",
            description: "normalized nonlinear components against optical thickness at zero detuning",
            jobs: thickness_sweep("fig10", GAMMAS.to_vec()),
        },
        "fig11" => {
            let mut jobs = detuning_sweep("fig11_delta", vec!["eta_slope"]);
            jobs.extend(thickness_sweep("fig11_b", vec!["eta_slope"]));
            Preset { name: "fig11", description: "slope of the enhancement factor against detuning and thickness", jobs }
        }
        "fig12" => Preset {
            name: "fig12",
            description: "enhancement factor against final frequency, zero detuning, b = 0.5, 1, 2",
            jobs: spectrum("fig12", 0.0),
        },
        "fig13" => Preset {
            name: "fig13",
            description: "enhancement factor against final frequency, unit detuning, b = 0.5, 1, 2",
            jobs: spectrum("fig13", 1.0),
        },
        _ => return None,
    };
    Some(p)
}
