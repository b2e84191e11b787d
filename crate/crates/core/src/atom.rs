//! Single-atom optics: scattering amplitude, cross section, mean free path
//! scaling and the two-photon inelastic spectrum.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::ParamError;

pub type ComplexAmplitude = Complex64;

/// Detuning from the atomic resonance in units of the linewidth.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct Detuning(pub f64);

impl Detuning {
    pub const RESONANT: Detuning = Detuning(0.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for Detuning {
    fn from(v: f64) -> Self {
        Detuning(v)
    }
}

impl fmt::Display for Detuning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Polarization channel of the backscattering measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Scalar waves, every polarization factor replaced by one.
    Scalar,
    /// Circular polarization, helicity-preserving detection.
    HParallelH,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Scalar => "scalar",
            Channel::HParallelH => "hpar",
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scalar" => Ok(Channel::Scalar),
            "hpar" | "h||h" | "hparallelh" | "helicity" => Ok(Channel::HParallelH),
            other => Err(ParamError::Invalid(format!(
                "unknown channel `{other}` (expected scalar or hpar)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MediumParams {
    pub detuning: Detuning,
    /// Optical thickness in linear mean free paths at the laser frequency.
    pub b: f64,
    /// On-resonance saturation parameter.
    pub s0: f64,
    pub channel: Channel,
    /// k times the mean free path. Only used to warn about dense media.
    pub klf: f64,
}

impl MediumParams {
    pub fn new(detuning: f64, b: f64, s0: f64, channel: Channel) -> Result<Self, ParamError> {
        let p = MediumParams {
            detuning: Detuning(detuning),
            b,
            s0,
            channel,
            klf: 1.0e3,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_klf(mut self, klf: f64) -> Result<Self, ParamError> {
        self.klf = klf;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !self.detuning.0.is_finite() {
            return Err(ParamError::Detuning(self.detuning.0));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(ParamError::Thickness(self.b));
        }
        if !(self.s0.is_finite() && self.s0 >= 0.0) {
            return Err(ParamError::Saturation(self.s0));
        }
        if !(self.klf > 1.0) {
            return Err(ParamError::Klf(self.klf));
        }
        Ok(())
    }

    /// Saturation parameter at the laser detuning.
    pub fn s(&self) -> f64 {
        saturation(self.detuning, self.s0)
    }
}

/// `1/(1 - 2iδ)`, the scattering amplitude in units of its resonant value.
pub fn scattering_amplitude(delta: Detuning) -> ComplexAmplitude {
    Complex64::new(1.0, -2.0 * delta.0).inv()
}

pub fn cross_section(delta: Detuning) -> f64 {
    1.0 / (1.0 + 4.0 * delta.0 * delta.0)
}

/// Mean free path at `to` divided by the mean free path at `from`.
pub fn mean_free_path_ratio(from: Detuning, to: Detuning) -> f64 {
    (1.0 + 4.0 * to.0 * to.0) / (1.0 + 4.0 * from.0 * from.0)
}

/// Complex attenuation rate of the two-frequency field correlation in units
/// of the inverse mean free path at `delta`.
pub fn complex_attenuation(delta: Detuning, delta_p: Detuning) -> ComplexAmplitude {
    if delta_p == delta {
        return Complex64::new(1.0, 0.0);
    }
    let q = 1.0 / mean_free_path_ratio(delta, delta_p);
    Complex64::new(0.5 * (1.0 + q), delta.0 - delta_p.0 * q)
}

pub fn saturation(delta: Detuning, s0: f64) -> f64 {
    s0 * cross_section(delta)
}

/// Two-photon inelastic spectrum `P(δ')` of a single atom driven at `δ`,
/// normalized to unit area in `δ'`.
pub fn inelastic_spectrum(delta: Detuning, delta_p: Detuning) -> f64 {
    let x = delta_p.0 - delta.0;
    // symmetric form around δ: |1/(δ+x+i/2) + 1/(δ-x+i/2)|²
    let a = Complex64::new(delta.0 + x, 0.5).inv();
    let b = Complex64::new(delta.0 - x, 0.5).inv();
    (a + b).norm_sqr() / (4.0 * PI)
}

/// Closed-form cumulative distribution of [`inelastic_spectrum`].
pub fn spectrum_cdf(delta: Detuning, delta_p: Detuning) -> f64 {
    let d = delta.0;
    let x = delta_p.0;
    let y = 2.0 * d - x;
    let q = x * x + 0.25;
    let cross = if d == 0.0 {
        2.0 * x / q
    } else {
        -(4.0 * d * (d - x) / q).ln_1p() / (2.0 * d)
    };
    let v = 0.5 + (2.0 * (2.0 * x).atan() - 2.0 * (2.0 * y).atan() + cross) / (4.0 * PI);
    v.clamp(0.0, 1.0)
}

const SAMPLER_NODES: usize = 4096;
const SAMPLER_HALF_WIDTH: f64 = 25.0;

/// Inverse-CDF sampler for the inelastic spectrum at a fixed laser detuning.
///
/// The CDF is tabulated on a uniform grid and inverted by monotone cubic
/// Hermite interpolation. Quantiles outside the table fall back to bisection
/// on the closed-form CDF.
#[derive(Clone, Debug)]
pub struct SpectrumSampler {
    delta: Detuning,
    x: Vec<f64>,
    cdf: Vec<f64>,
    slope: Vec<f64>,
}

impl SpectrumSampler {
    pub fn new(delta: Detuning) -> Self {
        let lo = delta.0 - SAMPLER_HALF_WIDTH;
        let h = 2.0 * SAMPLER_HALF_WIDTH / (SAMPLER_NODES - 1) as f64;
        let x: Vec<f64> = (0..SAMPLER_NODES).map(|i| lo + h * i as f64).collect();
        let cdf: Vec<f64> = x.iter().map(|&v| spectrum_cdf(delta, Detuning(v))).collect();
        // dx/dF at the nodes, limited so the interpolant stays monotone
        let mut slope: Vec<f64> = x
            .iter()
            .map(|&v| 1.0 / inelastic_spectrum(delta, Detuning(v)))
            .collect();
        for i in 0..SAMPLER_NODES - 1 {
            let df = cdf[i + 1] - cdf[i];
            if df <= 0.0 {
                slope[i] = 0.0;
                slope[i + 1] = 0.0;
                continue;
            }
            let secant = h / df;
            let a = slope[i] / secant;
            let b = slope[i + 1] / secant;
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                slope[i] = t * a * secant;
                slope[i + 1] = t * b * secant;
            }
        }
        SpectrumSampler { delta, x, cdf, slope }
    }

    pub fn delta(&self) -> Detuning {
        self.delta
    }

    /// Maps a uniform variate `u ∈ [0, 1)` to a detuning distributed as the
    /// inelastic spectrum.
    pub fn sample(&self, u: f64) -> Detuning {
        let n = self.x.len();
        if u <= self.cdf[0] || u >= self.cdf[n - 1] {
            return Detuning(self.bisect_tail(u));
        }
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, n - 1) - 1;
        let (f0, f1) = (self.cdf[i], self.cdf[i + 1]);
        let df = f1 - f0;
        if df <= 0.0 {
            return Detuning(self.x[i]);
        }
        let t = (u - f0) / df;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let mut x = h00 * self.x[i] + h10 * df * self.slope[i] + h01 * self.x[i + 1] + h11 * df * self.slope[i + 1];
        // polish on the exact CDF, staying inside the bracketing cell
        for _ in 0..2 {
            let p = inelastic_spectrum(self.delta, Detuning(x));
            let step = (spectrum_cdf(self.delta, Detuning(x)) - u) / p;
            let next = x - step;
            if !(next >= self.x[i] && next <= self.x[i + 1]) {
                break;
            }
            x = next;
        }
        Detuning(x)
    }

    fn bisect_tail(&self, u: f64) -> f64 {
        let n = self.x.len();
        let (mut lo, mut hi) = if u <= self.cdf[0] {
            let mut lo = self.x[0] - SAMPLER_HALF_WIDTH;
            while spectrum_cdf(self.delta, Detuning(lo)) > u && lo > -1.0e12 {
                lo = self.delta.0 + 2.0 * (lo - self.delta.0);
            }
            (lo, self.x[0])
        } else {
            let mut hi = self.x[n - 1] + SAMPLER_HALF_WIDTH;
            while spectrum_cdf(self.delta, Detuning(hi)) < u && hi < 1.0e12 {
                hi = self.delta.0 + 2.0 * (hi - self.delta.0);
            }
            (self.x[n - 1], hi)
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if spectrum_cdf(self.delta, Detuning(mid)) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Convenience wrapper building a sampler per call. Prefer reusing a
/// [`SpectrumSampler`] inside loops.
pub fn spectrum_sample(delta: Detuning, u: f64) -> Detuning {
    SpectrumSampler::new(delta).sample(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn amplitude_values() {
        assert_eq!(scattering_amplitude(Detuning(0.0)), Complex64::new(1.0, 0.0));
        let a = scattering_amplitude(Detuning(0.5));
        assert_relative_eq!(a.re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(a.im, 0.5, epsilon = 1e-15);
        assert_relative_eq!(a.norm_sqr(), 0.5, epsilon = 1e-15);
        let a = scattering_amplitude(Detuning(1.0));
        assert_relative_eq!(a.re, 0.2, epsilon = 1e-15);
        assert_relative_eq!(a.im, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn cross_section_and_ratios() {
        assert_eq!(cross_section(Detuning(0.0)), 1.0);
        assert_eq!(cross_section(Detuning(0.5)), 0.5);
        assert_relative_eq!(cross_section(Detuning(1.5)), 0.1, epsilon = 1e-15);
        assert_eq!(mean_free_path_ratio(Detuning(0.0), Detuning(0.0)), 1.0);
        assert_eq!(mean_free_path_ratio(Detuning(0.0), Detuning(0.5)), 2.0);
        assert_relative_eq!(mean_free_path_ratio(Detuning(1.0), Detuning(0.0)), 0.2);
    }

    #[test]
    fn attenuation_values() {
        assert_eq!(complex_attenuation(Detuning(0.0), Detuning(0.0)), Complex64::new(1.0, 0.0));
        let a = complex_attenuation(Detuning(0.0), Detuning(0.5));
        assert_relative_eq!(a.re, 0.75, epsilon = 1e-15);
        assert_relative_eq!(a.im, -0.25, epsilon = 1e-15);
        assert_eq!(complex_attenuation(Detuning(2.3), Detuning(2.3)), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn saturation_values() {
        assert_eq!(saturation(Detuning(0.0), 0.01), 0.01);
        assert_relative_eq!(saturation(Detuning(0.5), 0.01), 0.005);
        assert_eq!(saturation(Detuning(0.7), 0.0), 0.0);
    }

    #[test]
    fn spectrum_peak_and_symmetry() {
        assert_relative_eq!(inelastic_spectrum(Detuning(0.0), Detuning(0.0)), 4.0 / PI, epsilon = 1e-14);
        let d = Detuning(1.0);
        assert_eq!(inelastic_spectrum(d, Detuning(0.0)), inelastic_spectrum(d, Detuning(2.0)));
        for x in [0.1, 0.7, 3.3] {
            assert_eq!(inelastic_spectrum(d, Detuning(1.0 + x)), inelastic_spectrum(d, Detuning(1.0 - x)));
        }
    }

    #[test]
    fn cdf_matches_quadrature() {
        for d in [0.0, 1e-9, 0.3, 1.0, 2.5] {
            let delta = Detuning(d);
            let lo = d - 40.0;
            let n = 400_000;
            let h = 80.0 / n as f64;
            let mut acc = spectrum_cdf(delta, Detuning(lo));
            for i in 0..n {
                let x0 = lo + h * i as f64;
                // Simpson on each cell
                let f = |x: f64| inelastic_spectrum(delta, Detuning(x));
                acc += h / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h));
                if i % 50_000 == 49_999 {
                    let c = spectrum_cdf(delta, Detuning(x0 + h));
                    assert!((acc - c).abs() < 1e-10, "d={d} x={} acc={acc} cdf={c}", x0 + h);
                }
            }
        }
    }

    #[test]
    fn sampler_medians() {
        assert!(SpectrumSampler::new(Detuning(0.0)).sample(0.5).0.abs() < 1e-9);
        assert!((SpectrumSampler::new(Detuning(1.0)).sample(0.5).0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sampler_inverts_cdf() {
        let s = SpectrumSampler::new(Detuning(0.8));
        for k in 1..2000 {
            let u = k as f64 / 2000.0;
            let x = s.sample(u);
            assert!((spectrum_cdf(Detuning(0.8), x) - u).abs() < 1e-9, "u={u}");
        }
        for u in [1e-9, 1e-6, 1.0 - 1e-6, 1.0 - 1e-9] {
            let x = s.sample(u);
            assert!((spectrum_cdf(Detuning(0.8), x) - u).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn params_validation() {
        assert!(MediumParams::new(0.0, 0.5, 0.01, Channel::Scalar).is_ok());
        assert_eq!(
            MediumParams::new(0.0, 0.0, 0.01, Channel::Scalar),
            Err(ParamError::Thickness(0.0))
        );
        assert!(MediumParams::new(0.0, 1.0, -1.0, Channel::Scalar).is_err());
        assert!(MediumParams::new(0.0, 1.0, 0.0, Channel::Scalar).unwrap().with_klf(0.5).is_err());
    }
}
