//! Scalar bistatic coefficients in exact backscattering: linear ladder and
//! crossed terms, their first-order corrections in the saturation parameter,
//! and the enhancement factor.
//!
//! All nonlinear components are per unit saturation parameter `s`.

use rayon::prelude::*;

use crate::atom::{inelastic_spectrum, saturation, Channel, Detuning, MediumParams};
use crate::error::{Error, ParamError, SolveError};
use crate::quad::gauss_legendre_on;
use crate::slab::{solve_cross, solve_intensity, CrossField, IntensityProfile, SlabGrid};

/// Every component of the backscattered signal, per unit `s` where nonlinear.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BistaticBreakdown {
    pub l_el_1: f64,
    pub c_el_1: f64,
    pub s_el_1: f64,
    pub l_el_2_scatt: f64,
    pub c_el_2_scatt: f64,
    pub l_in_2: f64,
    pub c_in_2: f64,
    pub l_el_2_prop: f64,
    pub c_el_2_prop: f64,
    pub gamma_l: f64,
    pub gamma_c: f64,
    pub eta_linear: f64,
    pub eta_slope: f64,
    pub mc_errors: Option<BreakdownErrors>,
}

/// Standard errors of Monte-Carlo generated components.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BreakdownErrors {
    pub l_el_1: f64,
    pub c_el_1: f64,
    pub l_el_2_scatt: f64,
    pub c_el_2_scatt: f64,
    pub l_in_2: f64,
    pub c_in_2: f64,
    pub l_el_2_prop: f64,
    pub c_el_2_prop: f64,
    pub gamma_l: f64,
    pub gamma_c: f64,
    pub eta_slope: f64,
}

impl BistaticBreakdown {
    /// Fills the normalized slopes from the raw components.
    pub fn finish(mut self) -> Self {
        self.gamma_l = (self.l_el_2_scatt + self.l_el_2_prop + self.l_in_2) / self.l_el_1;
        self.gamma_c = (self.c_el_2_scatt + self.c_el_2_prop + self.c_in_2) / self.c_el_1;
        self.eta_linear = 1.0 + self.c_el_1 / self.l_el_1;
        self.eta_slope = (self.eta_linear - 1.0) * (self.gamma_c - self.gamma_l);
        self
    }

    pub fn gamma_l_el(&self) -> f64 {
        (self.l_el_2_scatt + self.l_el_2_prop) / self.l_el_1
    }

    pub fn gamma_c_el(&self) -> f64 {
        (self.c_el_2_scatt + self.c_el_2_prop) / self.c_el_1
    }

    pub fn gamma_l_in(&self) -> f64 {
        self.l_in_2 / self.l_el_1
    }

    pub fn gamma_c_in(&self) -> f64 {
        self.c_in_2 / self.c_el_1
    }

    /// First-order enhancement factor at saturation `s`.
    pub fn eta(&self, s: f64) -> f64 {
        self.eta_linear + self.eta_slope * s
    }

    /// Named numeric fields in a fixed order, used for tabular output.
    pub fn fields(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("l_el_1", self.l_el_1),
            ("c_el_1", self.c_el_1),
            ("s_el_1", self.s_el_1),
            ("l_el_2_scatt", self.l_el_2_scatt),
            ("c_el_2_scatt", self.c_el_2_scatt),
            ("l_in_2", self.l_in_2),
            ("c_in_2", self.c_in_2),
            ("l_el_2_prop", self.l_el_2_prop),
            ("c_el_2_prop", self.c_el_2_prop),
            ("gamma_l", self.gamma_l),
            ("gamma_c", self.gamma_c),
            ("gamma_l_el", self.gamma_l_el()),
            ("gamma_c_el", self.gamma_c_el()),
            ("gamma_l_in", self.gamma_l_in()),
            ("gamma_c_in", self.gamma_c_in()),
            ("eta_linear", self.eta_linear),
            ("eta_slope", self.eta_slope),
        ]
    }
}

fn ballistic(z: f64) -> f64 {
    (-z).exp()
}

pub fn single_scattering(b: f64) -> f64 {
    0.5 * (1.0 - (-2.0 * b).exp())
}

/// `∫ I(z) e^{-z} dz`, with the ballistic part integrated in closed form.
pub fn linear_ladder(i: &IntensityProfile) -> f64 {
    let (c, s) = linear_crossed(i);
    c + s
}

/// Crossed linear term and the single-scattering contribution it excludes.
pub fn linear_crossed(i: &IntensityProfile) -> (f64, f64) {
    let c = i.grid.integrate(|k, z| (i.values[k] - ballistic(z)) * ballistic(z));
    (c, single_scattering(i.grid.b()))
}

/// Ladder weight of a nonlinear scattering event where the local intensity
/// is `i` and its coherent part is `e`.
pub fn ladder_scatt_weight(i: f64, e: f64) -> f64 {
    (2.0 * i * i - e * e) * i
}

/// Crossed counterpart of [`ladder_scatt_weight`], without the factor 4.
pub fn crossed_scatt_weight(i: f64, e: f64) -> f64 {
    i * i * i - 2.0 * i * e * e + e * e * e
}

pub fn nl_ladder_elastic_scatt(i: &IntensityProfile) -> f64 {
    -2.0 * i.grid.integrate(|k, z| ladder_scatt_weight(i.values[k], ballistic(z)))
}

pub fn nl_crossed_elastic_scatt(i: &IntensityProfile) -> f64 {
    -8.0 * i.grid.integrate(|k, z| crossed_scatt_weight(i.values[k], ballistic(z)))
}

pub fn nl_ladder_prop(i: &IntensityProfile) -> f64 {
    let ib = i.at_back();
    i.grid.integrate(|k, z| {
        let v = i.values[k];
        let e = ballistic(z);
        v * (2.0 * v * v - 2.0 * ib * ib + e * e - e)
    })
}

pub fn nl_crossed_prop(i: &IntensityProfile) -> f64 {
    let b = i.grid.b();
    let e2b = (-2.0 * b).exp();
    let tail = 0.5 - 1.5 * e2b + (-3.0 * b).exp();
    2.0 * nl_ladder_prop(i) - 3.0 * i.grid.integrate(|k, z| i.values[k] * (ballistic(z) - e2b)) + tail
}

/// Crossed propagation term keeping only the diagrams where the reversed
/// photon does not take part in the nonlinear event: the ladder term
/// without its singly scattered probe.
pub fn nl_crossed_prop_reciprocal(i: &IntensityProfile) -> f64 {
    let e2b = (-2.0 * i.grid.b()).exp();
    let single = i.grid.integrate(|k, z| {
        let e = ballistic(z);
        (4.0 * i.values[k] - e) * 0.5 * (e * e - e2b)
    });
    nl_ladder_prop(i) - single
}

/// Ladder density at a single final detuning: `∫ (2 I² - e^{-2z}) I'(z) dz`.
pub fn ladder_density(i: &IntensityProfile, ip: &IntensityProfile) -> f64 {
    i.grid.integrate(|k, z| {
        let v = i.values[k];
        let e = ballistic(z);
        (2.0 * v * v - e * e) * ip.values[k]
    })
}

/// Crossed density at a single final detuning.
pub fn crossed_density(i: &IntensityProfile, g: &CrossField, mfp_p: f64) -> f64 {
    let a = g.attenuation;
    4.0 * i.grid.integrate(|k, z| {
        let v = i.values[k];
        let e = ballistic(z);
        let gk = g.values[k];
        let coh = (-a * z).exp();
        v * gk.norm_sqr() - e * (coh * gk.conj()).re - (v - e) * e * (-z / mfp_p).exp()
    })
}

/// Quadrature over final detunings for integrals weighted by the inelastic
/// spectrum. Gauss-Legendre panels cover `[δ-8, δ+8]`, split at the two
/// spectral peaks, and two mapped panels cover the tails.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralRule {
    pub nodes: Vec<f64>,
    /// Quadrature weights including the spectral density.
    pub weights: Vec<f64>,
}

pub const SPECTRAL_NODES_PER_REGION: usize = 129;
pub const SPECTRAL_TAIL_NODES: usize = 24;
pub const SPECTRAL_HALF_WIDTH: f64 = 8.0;

impl SpectralRule {
    pub fn new(delta: Detuning, per_region: usize, tail: usize) -> Self {
        let d = delta.0;
        let (lo, hi) = (d - SPECTRAL_HALF_WIDTH, d + SPECTRAL_HALF_WIDTH);
        let mut cuts = vec![lo];
        for p in [0.0f64.min(2.0 * d), 0.0f64.max(2.0 * d)] {
            if p > lo && p < hi && cuts.last().is_none_or(|&c| p - c > 1e-12) {
                cuts.push(p);
            }
        }
        cuts.push(hi);
        let mut pts = Vec::new();
        for w in cuts.windows(2) {
            pts.extend(gauss_legendre_on(per_region, w[0], w[1]));
        }
        if tail > 0 {
            // x = δ ± H/t with t in (0, 1]; dx = H/t² dt
            for (t, wt) in gauss_legendre_on(tail, 0.0, 1.0) {
                let jac = SPECTRAL_HALF_WIDTH / (t * t);
                pts.push((d + SPECTRAL_HALF_WIDTH / t, wt * jac));
                pts.push((d - SPECTRAL_HALF_WIDTH / t, wt * jac));
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let nodes: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let weights = pts.iter().map(|&(x, w)| w * inelastic_spectrum(delta, Detuning(x))).collect();
        SpectralRule { nodes, weights }
    }

    pub fn default_for(delta: Detuning) -> Self {
        Self::new(delta, SPECTRAL_NODES_PER_REGION, SPECTRAL_TAIL_NODES)
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Options for [`assemble_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct BistaticOptions {
    pub nodes: usize,
    /// Grid used for the per-frequency solves of the inelastic terms.
    pub spectral_grid_nodes: usize,
    pub per_region: usize,
    pub tail: usize,
    pub include_inelastic: bool,
}

impl Default for BistaticOptions {
    fn default() -> Self {
        BistaticOptions {
            nodes: crate::slab::DEFAULT_NODES,
            spectral_grid_nodes: 256,
            per_region: SPECTRAL_NODES_PER_REGION,
            tail: SPECTRAL_TAIL_NODES,
            include_inelastic: true,
        }
    }
}

/// Per-frequency ladder and crossed densities of the inelastic component.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDensity {
    pub delta_p: f64,
    pub ladder: f64,
    pub crossed: f64,
}

pub fn spectral_density(i: &IntensityProfile, delta: Detuning, delta_p: Detuning) -> Result<SpectralDensity, SolveError> {
    let grid = &i.grid;
    let ip = solve_intensity(grid, delta_p, delta)?;
    let g = solve_cross(grid, delta, delta_p)?;
    Ok(SpectralDensity {
        delta_p: delta_p.0,
        ladder: ladder_density(i, &ip),
        crossed: crossed_density(i, &g, ip.mfp),
    })
}

/// Inelastic ladder and crossed components integrated over the spectrum.
pub fn inelastic_components(i: &IntensityProfile, delta: Detuning, rule: &SpectralRule) -> Result<(f64, f64), SolveError> {
    let dens: Result<Vec<SpectralDensity>, SolveError> =
        rule.nodes.par_iter().map(|&x| spectral_density(i, delta, Detuning(x))).collect();
    let dens = dens?;
    let mut l = 0.0;
    let mut c = 0.0;
    for (d, w) in dens.iter().zip(&rule.weights) {
        l += w * d.ladder;
        c += w * d.crossed;
    }
    Ok((l, c))
}

pub fn nl_ladder_inelastic(i: &IntensityProfile, delta: Detuning, rule: &SpectralRule) -> Result<f64, SolveError> {
    Ok(inelastic_components(i, delta, rule)?.0)
}

pub fn nl_crossed_inelastic(i: &IntensityProfile, delta: Detuning, rule: &SpectralRule) -> Result<f64, SolveError> {
    Ok(inelastic_components(i, delta, rule)?.1)
}

/// Elastic part of the breakdown from a solved intensity profile.
pub fn elastic_breakdown(i: &IntensityProfile) -> BistaticBreakdown {
    let (c1, s1) = linear_crossed(i);
    BistaticBreakdown {
        l_el_1: c1 + s1,
        c_el_1: c1,
        s_el_1: s1,
        l_el_2_scatt: nl_ladder_elastic_scatt(i),
        c_el_2_scatt: nl_crossed_elastic_scatt(i),
        l_el_2_prop: nl_ladder_prop(i),
        c_el_2_prop: nl_crossed_prop(i),
        ..Default::default()
    }
}

/// Full scalar breakdown for the given medium.
pub fn assemble(params: &MediumParams) -> Result<BistaticBreakdown, Error> {
    assemble_with(params, &BistaticOptions::default())
}

pub fn assemble_with(params: &MediumParams, opts: &BistaticOptions) -> Result<BistaticBreakdown, Error> {
    params.validate()?;
    if params.channel != Channel::Scalar {
        return Err(ParamError::Invalid("quadrature breakdown is scalar only; use the Monte-Carlo estimators".into()).into());
    }
    let grid = SlabGrid::uniform(params.b, opts.nodes)?;
    let i = solve_intensity(&grid, params.detuning, params.detuning)?;
    let mut out = elastic_breakdown(&i);
    if opts.include_inelastic {
        let coarse = SlabGrid::uniform(params.b, opts.spectral_grid_nodes)?;
        let ic = solve_intensity(&coarse, params.detuning, params.detuning)?;
        let rule = SpectralRule::new(params.detuning, opts.per_region, opts.tail);
        let (l, c) = inelastic_components(&ic, params.detuning, &rule)?;
        out.l_in_2 = l;
        out.c_in_2 = c;
    }
    Ok(out.finish())
}

/// Enhancement factor resolved in final frequency, inelastic light only.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpectralCurve {
    pub delta_p: Vec<f64>,
    pub ladder: Vec<f64>,
    pub crossed: Vec<f64>,
    pub eta: Vec<f64>,
    /// Standard errors of `eta` when produced by Monte Carlo.
    pub eta_error: Option<Vec<f64>>,
}

impl SpectralCurve {
    pub fn from_densities(dens: &[SpectralDensity]) -> Self {
        let mut curve = SpectralCurve::default();
        for d in dens {
            if d.ladder > 0.0 {
                curve.delta_p.push(d.delta_p);
                curve.ladder.push(d.ladder);
                curve.crossed.push(d.crossed);
                curve.eta.push(1.0 + d.crossed / d.ladder);
            }
        }
        curve
    }

    pub fn max_eta(&self) -> Option<(f64, f64)> {
        self.delta_p
            .iter()
            .zip(&self.eta)
            .map(|(&x, &e)| (x, e))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Scalar spectral enhancement on the given final detunings. Nodes equal to
/// the laser detuning are skipped: the elastic peak sits there.
pub fn spectral_enhancement(params: &MediumParams, delta_p: &[f64], nodes: usize) -> Result<SpectralCurve, Error> {
    params.validate()?;
    let grid = SlabGrid::uniform(params.b, nodes)?;
    let i = solve_intensity(&grid, params.detuning, params.detuning)?;
    let dens: Result<Vec<SpectralDensity>, SolveError> = delta_p
        .par_iter()
        .filter(|&&x| x != params.detuning.0)
        .map(|&x| spectral_density(&i, params.detuning, Detuning(x)))
        .collect();
    Ok(SpectralCurve::from_densities(&dens?))
}

/// Scalar first-order enhancement factor.
pub fn enhancement_factor(params: &MediumParams) -> Result<f64, Error> {
    let bd = assemble(params)?;
    Ok(bd.eta(saturation(params.detuning, params.s0)))
}

