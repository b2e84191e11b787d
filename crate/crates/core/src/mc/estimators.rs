//! Monte-Carlo estimators of the backscattered components with polarization.
//!
//! Every estimator draws independent samples through [`run_samples`], so the
//! result only depends on the seed and the sample count.

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::path::{adjoint_walk, conj, event_cap, sample_path_into, tensor_sums, PhotonPath, WalkKernel, WalkTerm};
use super::pol::{
    pi_crossed_sum, pi_ladder_sum, pi_prop_crossed_sum, pi_prop_ladder_sum, PolTensor, PolVector, PolarizationSetup,
};
use crate::atom::{complex_attenuation, mean_free_path_ratio, scattering_amplitude, Detuning, MediumParams, SpectrumSampler};
use crate::bistatic::{BistaticBreakdown, BreakdownErrors};
use crate::error::Error;
use crate::stats::{run_samples, Accumulator, McEstimate};

/// Sample count and seed of a Monte-Carlo run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McOptions {
    pub n_samples: u64,
    pub seed: u64,
}

impl McOptions {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        McOptions { n_samples, seed }
    }

    /// Options for a sub-run, with a seed decorrelated from the parent.
    pub fn substream(&self, tag: u64) -> Self {
        let mut z = self.seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        McOptions { n_samples: self.n_samples, seed: z ^ (z >> 31) }
    }
}

/// Linear ladder and crossed terms with the statistics of the scattering order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearEstimate {
    pub ladder: McEstimate,
    pub crossed: McEstimate,
    pub single: McEstimate,
    pub enhancement: McEstimate,
    /// Mean scattering order, weighted by the ladder signal.
    pub mean_order: McEstimate,
    /// Mean squared scattering order, weighted by the ladder signal.
    pub mean_order_sq: McEstimate,
}

/// Depth of the first scattering event of a photon entering at normal
/// incidence, restricted to the slab, and the probability of that event.
fn entry_depth(rng: &mut ChaCha8Rng, b: f64) -> (f64, f64) {
    let p = -(-b).exp_m1();
    let z = -(-rng.random::<f64>() * p).ln_1p();
    (z.min(b), p)
}

fn z_axis() -> Vector3<f64> {
    Vector3::z()
}

pub fn mc_linear(params: &MediumParams, opts: &McOptions) -> Result<LinearEstimate, Error> {
    params.validate()?;
    let b = params.b;
    let setup = PolarizationSetup::for_channel(params.channel);
    let acc = run_samples(opts.n_samples, opts.seed, 5, |rng, out| {
        let mut path = PhotonPath::default();
        linear_sample(rng, &mut path, b, &setup, out);
    });
    let ladder = acc.estimate(0);
    Ok(LinearEstimate {
        ladder,
        crossed: acc.estimate(1),
        single: acc.estimate(4),
        enhancement: {
            let r = acc.ratio(1, 0);
            McEstimate { mean: 1.0 + r.mean, ..r }
        },
        mean_order: acc.ratio(2, 0),
        mean_order_sq: acc.ratio(3, 0),
    })
}

fn linear_sample(rng: &mut ChaCha8Rng, path: &mut PhotonPath, b: f64, setup: &PolarizationSetup, out: &mut [f64]) {
    let (z1, p) = entry_depth(rng, b);
    sample_path_into(rng, path, Vector3::new(0.0, 0.0, z1), b, 1.0, event_cap(b));
    let mut x = setup.laser;
    let mut y = conj(&setup.detector);
    let mut weight = p * setup.vertex;
    let mut z = z1;
    for n in 1..=path.len() + 1 {
        if n > 1 {
            let d = &path.directions[n - 2];
            x = setup.project(&x, d);
            y = setup.project(&y, d);
            weight *= setup.vertex;
            z = path.vertices[n - 2].z;
        }
        let amp = super::pol::dotc(&x, &setup.detector);
        let rev = setup.laser.dot(&y);
        let w = weight * (-z).exp();
        let lad = w * amp.norm_sqr();
        out[0] += lad;
        if n > 1 {
            out[1] += w * (amp * rev.conj()).re;
        } else {
            out[4] += lad;
        }
        let nf = n as f64;
        out[2] += nf * lad;
        out[3] += nf * nf * lad;
    }
}

/// Frequency of the scattered photon at the nonlinear event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FinalFrequency {
    /// Drawn from the two-photon inelastic spectrum.
    Inelastic,
    /// Elastic nonlinear scattering, weight `-2` at the laser frequency.
    Elastic,
    /// Fixed final detuning, giving spectral densities.
    Fixed(f64),
}

/// Walk kernel of the amplitude pair at (`delta`, `delta_p`).
pub fn cross_kernel(delta: Detuning, delta_p: Detuning) -> WalkKernel {
    if delta_p == delta {
        return WalkKernel::intensity(1.0);
    }
    let c = (1.0 + 4.0 * delta.0 * delta.0) * scattering_amplitude(delta) * scattering_amplitude(delta_p).conj();
    WalkKernel { coupling: c, attenuation: complex_attenuation(delta, delta_p) }
}

trait Scale {
    fn scale(self, k: f64) -> Self;
}

impl Scale for PolTensor {
    fn scale(self, k: f64) -> Self {
        self.map(|c| c * k)
    }
}

struct Scratch {
    path: PhotonPath,
    terms: Vec<WalkTerm>,
}

impl Scratch {
    fn new() -> Self {
        Scratch { path: PhotonPath::default(), terms: Vec::new() }
    }
}

fn sum_all(p: (PolTensor, PolTensor)) -> PolTensor {
    p.0 + p.1
}

/// Ladder and crossed nonlinear scattering weights for a nonlinear event at
/// depth `z` with final detuning `delta_p`, before the depth and spectral
/// weights.
#[allow(clippy::too_many_arguments)]
fn scattering_weights(
    rng: &mut ChaCha8Rng,
    s: &mut Scratch,
    z: f64,
    b: f64,
    delta: Detuning,
    delta_p: Detuning,
    setup: &PolarizationSetup,
) -> (f64, f64) {
    let (el, ed) = (setup.laser, setup.detector);
    let herm = |t: &WalkTerm| conj(&t.first);
    let first = |t: &WalkTerm| t.first;
    let second = |t: &WalkTerm| t.second;

    adjoint_walk(rng, &mut s.path, z, b, WalkKernel::intensity(1.0), setup, el, el, &mut s.terms);
    let (u0, ur) = tensor_sums(&s.terms, first, herm);
    let u = u0 + ur;

    adjoint_walk(rng, &mut s.path, z, b, WalkKernel::intensity(1.0), setup, el, el, &mut s.terms);
    let (v0, vr) = tensor_sums(&s.terms, first, herm);
    let v = v0 + vr;

    let mfp_p = mean_free_path_ratio(delta, delta_p);
    adjoint_walk(rng, &mut s.path, z, b, WalkKernel::intensity(mfp_p), setup, ed, ed, &mut s.terms);
    let w = sum_all(tensor_sums(&s.terms, herm, first));

    let ladder = 2.0 * pi_ladder_sum(&u, &v, &w).re - pi_ladder_sum(&u0, &v0, &w).re;

    let kernel = cross_kernel(delta, delta_p);
    adjoint_walk(rng, &mut s.path, z, b, kernel, setup, el, ed, &mut s.terms);
    let (c0, cr) = tensor_sums(&s.terms, first, second);
    adjoint_walk(rng, &mut s.path, z, b, kernel.conj(), setup, ed, el, &mut s.terms);
    let (d0, dr) = tensor_sums(&s.terms, herm, |t| conj(&t.second));
    let (c, d) = (c0 + cr, d0 + dr);

    let crossed = 4.0 * pi_crossed_sum(&u, &c, &d) - 4.0 * pi_crossed_sum(&u, &c0, &d0)
        - 2.0 * pi_crossed_sum(&u0, &c0, &dr)
        - 2.0 * pi_crossed_sum(&u0, &cr, &d0);
    (setup.vertex * ladder, setup.vertex * crossed.re)
}

/// Ladder and crossed nonlinear scattering components per unit saturation.
/// For [`FinalFrequency::Fixed`] the results are spectral densities.
pub fn mc_scattering(params: &MediumParams, freq: FinalFrequency, opts: &McOptions) -> Result<(McEstimate, McEstimate), Error> {
    let acc = scattering_accumulator(params, freq, opts)?;
    Ok((acc.estimate(0), acc.estimate(1)))
}

fn scattering_accumulator(params: &MediumParams, freq: FinalFrequency, opts: &McOptions) -> Result<Accumulator, Error> {
    params.validate()?;
    let b = params.b;
    let delta = params.detuning;
    let setup = PolarizationSetup::for_channel(params.channel);
    let sampler = matches!(freq, FinalFrequency::Inelastic).then(|| SpectrumSampler::new(delta));
    Ok(run_samples(opts.n_samples, opts.seed, 2, |rng, out| {
        let mut s = Scratch::new();
        let z = b * rng.random::<f64>();
        let (delta_p, factor) = match freq {
            FinalFrequency::Inelastic => {
                let u = rng.random::<f64>();
                (sampler.as_ref().map_or(delta, |sp| sp.sample(u)), 1.0)
            }
            FinalFrequency::Elastic => (delta, -2.0),
            FinalFrequency::Fixed(x) => (Detuning(x), 1.0),
        };
        let (l, c) = scattering_weights(rng, &mut s, z, b, delta, delta_p, &setup);
        out[0] = b * factor * l;
        out[1] = b * factor * c;
    }))
}

pub fn mc_inelastic_ladder(params: &MediumParams, opts: &McOptions) -> Result<McEstimate, Error> {
    Ok(mc_scattering(params, FinalFrequency::Inelastic, opts)?.0)
}

pub fn mc_inelastic_crossed(params: &MediumParams, opts: &McOptions) -> Result<McEstimate, Error> {
    Ok(mc_scattering(params, FinalFrequency::Inelastic, opts)?.1)
}

/// Densities and enhancement at one final detuning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPoint {
    pub delta_p: f64,
    pub ladder: McEstimate,
    pub crossed: McEstimate,
    pub eta: McEstimate,
}

pub fn mc_spectral_point(params: &MediumParams, delta_p: f64, opts: &McOptions) -> Result<SpectralPoint, Error> {
    let acc = scattering_accumulator(params, FinalFrequency::Fixed(delta_p), opts)?;
    let r = acc.ratio(1, 0);
    Ok(SpectralPoint {
        delta_p,
        ladder: acc.estimate(0),
        crossed: acc.estimate(1),
        eta: McEstimate { mean: 1.0 + r.mean, ..r },
    })
}

/// Pump tensors at one point of the probe path.
struct Pump {
    /// `Σ e e^†` of the pump, coherent part and scattered part.
    ladder: (PolTensor, PolTensor),
    /// `Σ e* ẽ^†` of the pump and its reversed partner.
    crossed: (PolTensor, PolTensor),
}

fn pump_at(rng: &mut ChaCha8Rng, s: &mut Scratch, z: f64, b: f64, setup: &PolarizationSetup) -> Pump {
    adjoint_walk(rng, &mut s.path, z, b, WalkKernel::intensity(1.0), setup, setup.laser, setup.detector, &mut s.terms);
    Pump {
        ladder: tensor_sums(&s.terms, |t| t.first, |t| conj(&t.first)),
        crossed: tensor_sums(&s.terms, |t| conj(&t.first), |t| conj(&t.second)),
    }
}

fn prop_sample(rng: &mut ChaCha8Rng, s: &mut Scratch, probe: &mut PhotonPath, b: f64, setup: &PolarizationSetup, out: &mut [f64]) {
    let (z1, p_entry) = entry_depth(rng, b);
    sample_path_into(rng, probe, Vector3::new(0.0, 0.0, z1), b, 1.0, event_cap(b));
    let n_max = probe.len() + 1;
    let depth = |k: usize| if k == 0 { z1 } else { probe.vertices[k - 1].z };
    let zaxis = z_axis();
    // segment l joins vertex l to vertex l+1 (1-based); segment 0 is the entry
    let seg_dir = |l: usize| if l == 0 { zaxis } else { probe.directions[l - 1] };
    let seg_len = |l: usize| if l == 0 { z1 } else { probe.steps[l - 1] };

    let mut carried = Vec::with_capacity(n_max);
    let mut e = setup.laser;
    carried.push(e);
    for l in 1..n_max {
        e = setup.project(&e, &seg_dir(l));
        carried.push(e);
    }

    let mut pumps = Vec::with_capacity(n_max);
    for l in 0..n_max {
        let t = rng.random::<f64>();
        let zp = if l == 0 { t * z1 } else { depth(l - 1) + t * (depth(l) - depth(l - 1)) };
        pumps.push(pump_at(rng, s, zp, b, setup));
    }

    let mut back = vec![PolVector::zeros(); n_max + 1];
    let mut back_rev = vec![PolVector::zeros(); n_max + 1];
    let mut probe_w = p_entry;
    for n in 1..=n_max {
        probe_w *= setup.vertex;
        let zn = depth(n - 1);
        let weight = probe_w * (-zn).exp();
        back[n] = setup.detector;
        back_rev[n] = setup.laser;
        for l in (0..n).rev() {
            back[l] = setup.project(&back[l + 1], &seg_dir(l));
            back_rev[l] = setup.project(&back_rev[l + 1], &seg_dir(l));
        }
        let zp = rng.random::<f64>() * zn;
        let exit_pump = pump_at(rng, s, zp, b, setup);
        let mut lad = 0.0;
        let mut crs = 0.0;
        for l in 0..=n {
            let (e1, len, pump) = if l == n {
                (setup.project(&carried[n - 1], &zaxis), zn, &exit_pump)
            } else {
                (carried[l], seg_len(l), &pumps[l])
            };
            let (v0, vr) = pump.ladder;
            let v_eff = if l == 0 { v0 + vr.scale(2.0) } else { (v0 + vr).scale(2.0) };
            let pl = pi_prop_ladder_sum(&e1, &v_eff, &back[l]).re * len;
            lad += pl;
            if n > 1 {
                crs += pl;
            }
            let (c0, cr) = pump.crossed;
            let c_eff = if l == 0 {
                cr.scale(if n > 1 { 4.0 } else { 2.0 })
            } else if l < n {
                (c0 + cr).scale(2.0)
            } else {
                continue;
            };
            crs += pi_prop_crossed_sum(&e1, &c_eff, &back[l], &back_rev[l]).re * len;
        }
        out[0] += weight * lad;
        out[1] += weight * crs;
    }
}

/// Ladder and crossed nonlinear propagation components per unit saturation.
pub fn mc_prop(params: &MediumParams, opts: &McOptions) -> Result<(McEstimate, McEstimate), Error> {
    params.validate()?;
    let b = params.b;
    let setup = PolarizationSetup::for_channel(params.channel);
    let acc = run_samples(opts.n_samples, opts.seed, 2, |rng, out| {
        let mut s = Scratch::new();
        let mut probe = PhotonPath::default();
        prop_sample(rng, &mut s, &mut probe, b, &setup, out);
    });
    Ok((acc.estimate(0), acc.estimate(1)))
}

pub fn mc_prop_ladder(params: &MediumParams, opts: &McOptions) -> Result<McEstimate, Error> {
    Ok(mc_prop(params, opts)?.0)
}

pub fn mc_prop_crossed(params: &MediumParams, opts: &McOptions) -> Result<McEstimate, Error> {
    Ok(mc_prop(params, opts)?.1)
}

/// Every component estimated by Monte Carlo, with independent sub-runs.
#[derive(Clone, Debug, PartialEq)]
pub struct McBreakdown {
    pub linear: LinearEstimate,
    pub scatt: (McEstimate, McEstimate),
    pub prop: (McEstimate, McEstimate),
    pub inelastic: Option<(McEstimate, McEstimate)>,
}

impl McBreakdown {
    pub fn gamma_l_el(&self) -> McEstimate {
        self.scatt.0.add(&self.prop.0).ratio(&self.linear.ladder)
    }

    pub fn gamma_c_el(&self) -> McEstimate {
        self.scatt.1.add(&self.prop.1).ratio(&self.linear.crossed)
    }

    pub fn gamma_l(&self) -> McEstimate {
        let mut num = self.scatt.0.add(&self.prop.0);
        if let Some((l, _)) = &self.inelastic {
            num = num.add(l);
        }
        num.ratio(&self.linear.ladder)
    }

    pub fn gamma_c(&self) -> McEstimate {
        let mut num = self.scatt.1.add(&self.prop.1);
        if let Some((_, c)) = &self.inelastic {
            num = num.add(c);
        }
        num.ratio(&self.linear.crossed)
    }

    /// Same layout as the quadrature breakdown, with standard errors.
    pub fn to_breakdown(&self) -> BistaticBreakdown {
        let (lin, cin) = self.inelastic.unwrap_or((McEstimate::exact(0.0), McEstimate::exact(0.0)));
        let bd = BistaticBreakdown {
            l_el_1: self.linear.ladder.mean,
            c_el_1: self.linear.crossed.mean,
            s_el_1: self.linear.single.mean,
            l_el_2_scatt: self.scatt.0.mean,
            c_el_2_scatt: self.scatt.1.mean,
            l_in_2: lin.mean,
            c_in_2: cin.mean,
            l_el_2_prop: self.prop.0.mean,
            c_el_2_prop: self.prop.1.mean,
            ..Default::default()
        }
        .finish();
        let (gl, gc) = (self.gamma_l(), self.gamma_c());
        let ratio = self.linear.crossed.ratio(&self.linear.ladder);
        let diff = gc.mean - gl.mean;
        let slope_err = ((ratio.std_error * diff).powi(2) + (ratio.mean * gc.std_error).powi(2) + (ratio.mean * gl.std_error).powi(2)).sqrt();
        BistaticBreakdown {
            mc_errors: Some(BreakdownErrors {
                l_el_1: self.linear.ladder.std_error,
                c_el_1: self.linear.crossed.std_error,
                l_el_2_scatt: self.scatt.0.std_error,
                c_el_2_scatt: self.scatt.1.std_error,
                l_in_2: lin.std_error,
                c_in_2: cin.std_error,
                l_el_2_prop: self.prop.0.std_error,
                c_el_2_prop: self.prop.1.std_error,
                gamma_l: gl.std_error,
                gamma_c: gc.std_error,
                eta_slope: slope_err,
            }),
            ..bd
        }
    }
}

/// Runs every estimator with `opts.n_samples` samples each.
pub fn mc_breakdown(params: &MediumParams, include_inelastic: bool, opts: &McOptions) -> Result<McBreakdown, Error> {
    let linear = mc_linear(params, &opts.substream(1))?;
    let scatt = mc_scattering(params, FinalFrequency::Elastic, &opts.substream(2))?;
    let prop = mc_prop(params, &opts.substream(3))?;
    let inelastic = if include_inelastic {
        Some(mc_scattering(params, FinalFrequency::Inelastic, &opts.substream(4))?)
    } else {
        None
    };
    Ok(McBreakdown { linear, scatt, prop, inelastic })
}

/// Scattering-order statistics of the linear ladder signal for each
/// thickness, and the fitted power-law exponents of `⟨N⟩` and `⟨N²⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathStatistics {
    pub thickness: Vec<f64>,
    pub mean_order: Vec<McEstimate>,
    pub mean_order_sq: Vec<McEstimate>,
    pub exponent_mean: f64,
    pub exponent_mean_sq: f64,
}

pub fn path_statistics(thickness: &[f64], params: &MediumParams, opts: &McOptions) -> Result<PathStatistics, Error> {
    let mut mean_order = Vec::new();
    let mut mean_order_sq = Vec::new();
    for (k, &b) in thickness.iter().enumerate() {
        let p = MediumParams { b, ..*params };
        let est = mc_linear(&p, &opts.substream(100 + k as u64))?;
        mean_order.push(est.mean_order);
        mean_order_sq.push(est.mean_order_sq);
    }
    let fit = |ys: &[McEstimate]| {
        let pts: Vec<(f64, f64)> = thickness.iter().zip(ys).map(|(&b, y)| (b.ln(), y.mean.ln())).collect();
        log_log_slope(&pts)
    };
    Ok(PathStatistics {
        thickness: thickness.to_vec(),
        exponent_mean: fit(&mean_order),
        exponent_mean_sq: fit(&mean_order_sq),
        mean_order,
        mean_order_sq,
    })
}

/// Least-squares slope of `(x, y)` pairs.
pub fn log_log_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
