//! Run configuration: `key = value` lines, `#` comments, comma-separated
//! lists. A list may also be written as a range `start:step:end`.

use std::fmt;
use std::path::PathBuf;

use cbs_core::Channel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Quadrature of the scalar slab equations.
    Scalar,
    /// Monte Carlo with polarization.
    Vectorial,
    /// Coupled-dipole simulation.
    Classical,
    /// Enhancement factor resolved in final frequency.
    Spectrum,
}

impl Mode {
    pub const ALL: [&'static str; 4] = ["scalar", "vectorial", "classical", "spectrum"];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Scalar => "scalar",
            Mode::Vectorial => "vectorial",
            Mode::Classical => "classical",
            Mode::Spectrum => "spectrum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "scalar" => Some(Mode::Scalar),
            "vectorial" => Some(Mode::Vectorial),
            "classical" => Some(Mode::Classical),
            "spectrum" => Some(Mode::Spectrum),
            _ => None,
        }
    }

    pub fn is_stochastic(self, channel: Channel) -> bool {
        match self {
            Mode::Scalar => false,
            Mode::Vectorial | Mode::Classical => true,
            Mode::Spectrum => channel != Channel::Scalar,
        }
    }
}

/// Parameter that can be swept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    B,
    Delta,
    DeltaP,
    S0,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::B, Axis::Delta, Axis::DeltaP, Axis::S0];

    pub fn key(self) -> &'static str {
        match self {
            Axis::B => "b",
            Axis::Delta => "delta",
            Axis::DeltaP => "delta_p",
            Axis::S0 => "s0",
        }
    }

    fn from_key(key: &str) -> Option<Self> {
        Axis::ALL.into_iter().find(|a| a.key() == key)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub label: String,
    pub mode: Mode,
    pub channel: Channel,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub b: f64,
    pub delta: f64,
    pub delta_p: f64,
    pub s0: f64,
    pub klf: f64,
    pub samples: u64,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub inelastic: bool,
    pub nodes: usize,
    pub realizations: usize,
    pub atoms: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            label: "run".into(),
            mode: Mode::Scalar,
            channel: Channel::Scalar,
            axis: Axis::B,
            values: vec![0.5],
            b: 0.5,
            delta: 0.0,
            delta_p: 0.5,
            s0: 0.01,
            klf: 1.0e3,
            samples: 100_000,
            seed: None,
            out: None,
            inelastic: true,
            nodes: cbs_core::slab::DEFAULT_NODES,
            realizations: 1000,
            atoms: 500,
        }
    }
}

impl RunConfig {
    /// Value of `axis` at a sweep point, or its fixed value.
    pub fn param(&self, axis: Axis, point: usize) -> f64 {
        if axis == self.axis {
            return self.values[point];
        }
        match axis {
            Axis::B => self.b,
            Axis::Delta => self.delta,
            Axis::DeltaP => self.delta_p,
            Axis::S0 => self.s0,
        }
    }

    /// Checks that hold after command-line overrides.
    pub fn check(&self) -> Result<(), ConfigErrors> {
        let mut errs = Vec::new();
        if self.mode.is_stochastic(self.channel) && self.seed.is_none() {
            errs.push(ConfigError::new(0, format!("mode `{}` is stochastic and needs a seed", self.mode.name())));
        }
        if self.samples == 0 {
            errs.push(ConfigError::new(0, "samples must be positive"));
        }
        if errs.is_empty() { Ok(()) } else { Err(ConfigErrors(errs)) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line number, 0 when the error concerns the whole file.
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        ConfigError { line, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

/// Every problem found in a configuration.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

const KEYS: [&str; 16] = [
    "mode", "label", "channel", "sweep", "b", "delta", "delta_p", "s0", "klf", "samples", "seed", "out", "inelastic",
    "nodes", "realizations", "atoms",
];

fn parse_list(value: &str) -> Result<Vec<f64>, String> {
    let value = value.trim();
    if value.is_empty() {
        return Err("empty list".into());
    }
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("range `{value}` must be start:step:end"));
        }
        let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
        let nums = nums.map_err(|_| format!("range `{value}` has a non-numeric bound"))?;
        let (start, step, end) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0 && step.is_finite() && start.is_finite() && end.is_finite() && end >= start) {
            return Err(format!("range `{value}` needs a positive step and end >= start"));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..n).map(|k| start + step * k as f64).collect());
    }
    value
        .split(',')
        .map(|v| {
            let v = v.trim();
            match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(format!("`{v}` is not a finite number")),
            }
        })
        .collect()
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("`{value}` is not a boolean")),
    }
}

fn parse_int<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value.parse::<T>().map_err(|_| format!("`{value}` is not a non-negative integer"))
}

/// Parses a configuration, reporting every error with its line number.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    parse_config_as(text, None)
}

/// Like [`parse_config`], with `mode` supplied by the caller when the text
/// does not set it. A conflicting `mode` line is an error.
pub fn parse_config_as(text: &str, mode: Option<Mode>) -> Result<RunConfig, ConfigErrors> {
    let mut cfg = RunConfig::default();
    let mut errs = Vec::new();
    let mut seen: Vec<(&str, usize)> = Vec::new();
    let mut lists: Vec<(Axis, Vec<f64>, usize)> = Vec::new();
    let mut sweep: Option<(Axis, usize)> = None;
    let mut mode_seen = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errs.push(ConfigError::new(line, format!("expected `key = value`, got `{content}`")));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            errs.push(ConfigError::new(line, format!("unknown key `{key}` (allowed: {})", KEYS.join(", "))));
            continue;
        };
        if let Some((_, first)) = seen.iter().find(|(k, _)| *k == known) {
            errs.push(ConfigError::new(line, format!("duplicate key `{key}` (first set on line {first})")));
            continue;
        }
        seen.push((known, line));
        mode_seen |= known == "mode";
        let result: Result<(), String> = match known {
            "mode" => match Mode::parse(value) {
                Some(m) if mode.is_some_and(|d| d != m) => {
                    Err(format!("`{value}` conflicts with the mode `{}` given on the command line", mode.map_or("", Mode::name)))
                }
                Some(m) => {
                    cfg.mode = m;
                    Ok(())
                }
                None => Err(format!("invalid value `{value}` for `mode` (allowed: {})", Mode::ALL.join(", "))),
            },
            "label" => {
                let ok = !value.is_empty() && value.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
                if ok {
                    cfg.label = value.to_string();
                    Ok(())
                } else {
                    Err(format!("label `{value}` may only contain letters, digits, `_` and `-`"))
                }
            }
            "channel" => value
                .parse::<Channel>()
                .map(|c| cfg.channel = c)
                .map_err(|_| format!("invalid value `{value}` for `channel` (allowed: scalar, hpar)")),
            "sweep" => match Axis::from_key(value) {
                Some(a) => {
                    sweep = Some((a, line));
                    Ok(())
                }
                None => Err(format!("invalid value `{value}` for `sweep` (allowed: b, delta, delta_p, s0)")),
            },
            "b" | "delta" | "delta_p" | "s0" => parse_list(value).map(|v| {
                let axis = Axis::from_key(known).unwrap_or(Axis::B);
                lists.push((axis, v, line));
            }),
            "klf" => parse_list(value).and_then(|v| match v.as_slice() {
                [x] if *x > 1.0 => {
                    cfg.klf = *x;
                    Ok(())
                }
                _ => Err("`klf` must be a single number above 1".into()),
            }),
            "samples" => parse_int::<u64>(value).map(|v| cfg.samples = v),
            "seed" => parse_int::<u64>(value).map(|v| cfg.seed = Some(v)),
            "out" => {
                cfg.out = Some(PathBuf::from(value));
                Ok(())
            }
            "inelastic" => parse_bool(value).map(|v| cfg.inelastic = v),
            "nodes" => parse_int::<usize>(value).and_then(|v| {
                if v >= 8 {
                    cfg.nodes = v;
                    Ok(())
                } else {
                    Err("`nodes` must be at least 8".into())
                }
            }),
            "realizations" => parse_int::<usize>(value).map(|v| cfg.realizations = v),
            "atoms" => parse_int::<usize>(value).map(|v| cfg.atoms = v),
            _ => Ok(()),
        };
        if let Err(msg) = result {
            errs.push(ConfigError::new(line, format!("`{key}`: {msg}")));
        }
    }

    if !mode_seen {
        if let Some(m) = mode {
            cfg.mode = m;
            mode_seen = true;
        }
    }
    if !mode_seen {
        errs.push(ConfigError::new(0, "missing required key `mode`"));
    }

    let multi: Vec<&(Axis, Vec<f64>, usize)> = lists.iter().filter(|(_, v, _)| v.len() > 1).collect();
    let axis = match sweep {
        Some((a, _)) => Some(a),
        None if multi.len() == 1 => Some(multi[0].0),
        None if multi.len() > 1 => {
            for (a, _, line) in &multi[1..] {
                errs.push(ConfigError::new(
                    *line,
                    format!("`{}` has several values but `{}` is already swept; set `sweep`", a.key(), multi[0].0.key()),
                ));
            }
            None
        }
        None if cfg.mode == Mode::Spectrum => Some(Axis::DeltaP),
        None => lists.first().map(|l| l.0).or(Some(Axis::B)),
    };
    if let Some(axis) = axis {
        cfg.axis = axis;
        for (a, v, line) in &lists {
            if *a == axis {
                cfg.values = v.clone();
            } else if v.len() > 1 {
                errs.push(ConfigError::new(*line, format!("only the swept parameter `{}` may have several values", axis.key())));
            } else {
                match a {
                    Axis::B => cfg.b = v[0],
                    Axis::Delta => cfg.delta = v[0],
                    Axis::DeltaP => cfg.delta_p = v[0],
                    Axis::S0 => cfg.s0 = v[0],
                }
            }
        }
        if !lists.iter().any(|(a, _, _)| *a == axis) {
            cfg.values = vec![cfg.param(axis, 0)];
            if cfg.mode == Mode::Spectrum && axis == Axis::DeltaP {
                errs.push(ConfigError::new(0, "mode `spectrum` needs a `delta_p` list"));
            }
        }
        if cfg.mode == Mode::Spectrum && axis != Axis::DeltaP {
            errs.push(ConfigError::new(sweep.map_or(0, |s| s.1), "mode `spectrum` sweeps `delta_p`"));
        }
        if cfg.mode != Mode::Spectrum && axis == Axis::DeltaP {
            errs.push(ConfigError::new(sweep.map_or(0, |s| s.1), "`delta_p` can only be swept in mode `spectrum`"));
        }
    }

    let (bs, s0s) = (cfg.values_of(Axis::B), cfg.values_of(Axis::S0));
    if bs.iter().any(|b| *b <= 0.0) {
        errs.push(ConfigError::new(line_of(&seen, "b"), "optical thickness must be positive"));
    }
    if s0s.iter().any(|s| *s < 0.0) {
        errs.push(ConfigError::new(line_of(&seen, "s0"), "saturation must be non-negative"));
    }
    if cfg.mode == Mode::Classical && cfg.channel != Channel::Scalar {
        errs.push(ConfigError::new(line_of(&seen, "channel"), "mode `classical` is scalar only"));
    }
    if cfg.mode == Mode::Scalar && cfg.channel != Channel::Scalar {
        errs.push(ConfigError::new(line_of(&seen, "channel"), "mode `scalar` needs channel = scalar; use mode `vectorial`"));
    }
    if cfg.mode == Mode::Vectorial && !seen.iter().any(|(k, _)| *k == "channel") {
        cfg.channel = Channel::HParallelH;
    }

    if errs.is_empty() { Ok(cfg) } else { Err(ConfigErrors(errs)) }
}

fn line_of(seen: &[(&str, usize)], key: &str) -> usize {
    seen.iter().find(|(k, _)| *k == key).map_or(0, |(_, l)| *l)
}

impl RunConfig {
    fn values_of(&self, axis: Axis) -> Vec<f64> {
        if axis == self.axis {
            self.values.clone()
        } else {
            vec![self.param(axis, 0)]
        }
    }

    /// Canonical text form, used for hashing and as the preset source.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        s.push_str(&format!("mode = {}\n", self.mode.name()));
        s.push_str(&format!("label = {}\n", self.label));
        s.push_str(&format!("channel = {}\n", self.channel.name()));
        s.push_str(&format!("sweep = {}\n", self.axis.key()));
        for axis in Axis::ALL {
            s.push_str(&format!("{} = {}\n", axis.key(), list(&self.values_of(axis))));
        }
        s.push_str(&format!("klf = {:?}\n", self.klf));
        s.push_str(&format!("samples = {}\n", self.samples));
        if let Some(seed) = self.seed {
            s.push_str(&format!("seed = {seed}\n"));
        }
        s.push_str(&format!("inelastic = {}\n", self.inelastic));
        s.push_str(&format!("nodes = {}\n", self.nodes));
        s.push_str(&format!("realizations = {}\n", self.realizations));
        s.push_str(&format!("atoms = {}\n", self.atoms));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = parse_config("mode = scalar\nb = 0.5\ndelta = 0").unwrap();
        assert_eq!(c.mode, Mode::Scalar);
        assert_eq!(c.axis, Axis::B);
        assert_eq!(c.values, vec![0.5]);
        assert_eq!(c.delta, 0.0);
    }

    #[test]
    fn bad_mode_names_key_and_choices() {
        let e = parse_config("mode = bogus").unwrap_err();
        assert_eq!(e.0.len(), 1);
        assert_eq!(e.0[0].line, 1);
        assert!(e.0[0].message.contains("mode"));
        assert!(e.0[0].message.contains("scalar, vectorial, classical, spectrum"));
    }

    #[test]
    fn empty_sweep_list() {
        let e = parse_config("mode = scalar\nb =").unwrap_err();
        assert!(e.0.iter().any(|x| x.line == 2 && x.message.contains("empty list")));
    }

    #[test]
    fn reports_all_errors() {
        let e = parse_config("mode = scalar\nfoo = 1\nb = x\nnodes = 2\n").unwrap_err();
        let lines: Vec<usize> = e.0.iter().map(|x| x.line).collect();
        assert_eq!(lines, vec![2, 3, 4]);
        assert!(e.0[0].message.contains("unknown key `foo`"));
    }

    #[test]
    fn missing_mode() {
        let e = parse_config("b = 1").unwrap_err();
        assert!(e.0.iter().any(|x| x.message.contains("missing required key `mode`")));
    }

    #[test]
    fn ranges_and_comments() {
        let c = parse_config("# sweep\nmode = scalar # quadrature\ndelta = 0:0.5:2\nb = 0.5").unwrap();
        assert_eq!(c.axis, Axis::Delta);
        assert_eq!(c.values, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(c.b, 0.5);
    }

    #[test]
    fn two_lists_need_sweep() {
        assert!(parse_config("mode = scalar\nb = 1, 2\ndelta = 0, 1").is_err());
    }

    #[test]
    fn text_form_round_trips() {
        let c = parse_config("mode = vectorial\nb = 0.25, 0.5\ndelta = 1\nseed = 3\nsamples = 1000").unwrap();
        assert_eq!(c.channel, Channel::HParallelH);
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn stochastic_modes_need_seed() {
        let c = parse_config("mode = vectorial\nb = 0.5").unwrap();
        assert!(c.check().is_err());
        let c = parse_config("mode = scalar\nb = 0.5").unwrap();
        assert!(c.check().is_ok());
    }
}
