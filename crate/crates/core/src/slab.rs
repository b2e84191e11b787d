//! Radiative transfer in a slab: the diffuse intensity and the two-frequency
//! field correlation, reduced to one dimension along the slab normal.
//!
//! Integral operators with the logarithmically singular kernel
//! `E1(a|z - z'|)` are discretized by product integration against the
//! piecewise-linear interpolant of the unknown on a uniform grid.

use num_complex::Complex64;

use crate::atom::{complex_attenuation, mean_free_path_ratio, scattering_amplitude, ComplexAmplitude, Detuning};
use crate::error::SolveError;
use crate::expint::e1_complex;

pub const DEFAULT_NODES: usize = 512;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SlabGrid {
    b: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SlabGrid {
    /// Uniform grid with `n >= 2` nodes and trapezoid weights.
    pub fn uniform(b: f64, n: usize) -> Result<Self, SolveError> {
        if !(b.is_finite() && b > 0.0) {
            return Err(SolveError::Grid(format!("thickness must be positive, got {b}")));
        }
        if n < 2 {
            return Err(SolveError::Grid(format!("need at least two nodes, got {n}")));
        }
        let h = b / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| h * i as f64).collect();
        nodes[n - 1] = b;
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        Ok(SlabGrid { b, nodes, weights })
    }

    pub fn with_default_nodes(b: f64) -> Result<Self, SolveError> {
        Self::uniform(b, DEFAULT_NODES)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.b / (self.nodes.len() - 1) as f64
    }

    /// Trapezoid rule for nodal values.
    pub fn integrate(&self, f: impl Fn(usize, f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).enumerate().map(|(i, (&z, &w))| w * f(i, z)).sum()
    }

    pub fn integrate_complex(&self, f: impl Fn(usize, f64) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).enumerate().map(|(i, (&z, &w))| f(i, z) * w).sum()
    }

    fn locate(&self, z: f64) -> (usize, f64) {
        let n = self.nodes.len();
        let h = self.spacing();
        let t = (z / h).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        (i, t - i as f64)
    }
}

/// Diffuse plus ballistic intensity in units of the incident intensity.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityProfile {
    pub grid: SlabGrid,
    pub values: Vec<f64>,
    /// Mean free path of this frequency in units of the reference one.
    pub mfp: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl IntensityProfile {
    pub fn at(&self, z: f64) -> f64 {
        let (i, t) = self.grid.locate(z);
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    pub fn ballistic(&self, z: f64) -> f64 {
        (-z / self.mfp).exp()
    }

    pub fn at_back(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Two-frequency correlation of the field inside the slab.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossField {
    pub grid: SlabGrid,
    pub values: Vec<ComplexAmplitude>,
    /// Complex attenuation rate of the coherent source term.
    pub attenuation: ComplexAmplitude,
    pub iterations: usize,
    pub residual: f64,
}

impl CrossField {
    pub fn at(&self, z: f64) -> ComplexAmplitude {
        let (i, t) = self.grid.locate(z);
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: ComplexAmplitude,
    /// Set at zero separation, where the kernel has a logarithmic singularity.
    pub singular: bool,
}

/// `prefactor * E1(a |dz|)`, the transverse integral of the product of two
/// propagators between planes separated by `dz`.
pub fn slab_kernel(dz: f64, a: ComplexAmplitude, prefactor: ComplexAmplitude) -> KernelValue {
    let dz = dz.abs();
    if dz == 0.0 {
        return KernelValue { value: Complex64::new(f64::INFINITY, 0.0), singular: true };
    }
    KernelValue { value: prefactor * e1_complex(a * dz), singular: false }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Start from the source term (default) or from zero.
    pub start_from_source: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, start_from_source: true }
    }
}

/// `(1 - e^{-u})/u`
fn phi1(u: Complex64) -> Complex64 {
    if u.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..30 {
            term *= -u / k as f64;
            sum += term;
        }
        sum
    } else {
        (1.0 - (-u).exp()) / u
    }
}

/// `(1 - (1 + u) e^{-u})/u^2`
fn phi2(u: Complex64) -> Complex64 {
    if u.norm() < 0.5 {
        // sum_{k>=2} (-1)^k (k-1)/k! u^(k-2)
        let mut fact = 2.0;
        let mut pow = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.5, 0.0);
        for k in 3..30 {
            fact *= k as f64;
            pow *= -u;
            sum += pow * ((k - 1) as f64 / fact);
        }
        sum
    } else {
        (1.0 - (1.0 + u) * (-u).exp()) / (u * u)
    }
}

/// Antiderivatives of `E1(a t)` and `t E1(a t)` from 0 to `x`.
fn moments(a: Complex64, x: f64) -> (Complex64, Complex64) {
    if x == 0.0 {
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let u = a * x;
    let e = e1_complex(u);
    (x * (e + phi1(u)), 0.5 * x * x * (e + phi2(u)))
}

/// Dense product-integration matrix of `prefactor * E1(a|z - z'|)` on a
/// uniform grid.
pub fn kernel_matrix(grid: &SlabGrid, a: ComplexAmplitude, prefactor: ComplexAmplitude) -> Vec<Complex64> {
    let n = grid.len();
    let h = grid.spacing();
    let mut f = Vec::with_capacity(n);
    for p in 0..n {
        f.push(moments(a, h * p as f64));
    }
    // near[p], far[p]: weights of the near and far end of an interval whose
    // near end is p intervals away from the collocation node
    let mut near = vec![Complex64::new(0.0, 0.0); n - 1];
    let mut far = vec![Complex64::new(0.0, 0.0); n - 1];
    for p in 0..n - 1 {
        let d0 = f[p + 1].0 - f[p].0;
        let d1 = f[p + 1].1 - f[p].1;
        let fw = (d1 - d0 * (h * p as f64)) / h;
        far[p] = fw * prefactor;
        near[p] = (d0 - fw) * prefactor;
    }
    let mut w = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let d = j.abs_diff(i);
            let mut v = Complex64::new(0.0, 0.0);
            if d > 0 {
                v += far[d - 1];
            }
            if (j > i && j + 1 < n) || (j < i && j >= 1) {
                v += near[d];
            } else if j == i {
                let sides = usize::from(i > 0) + usize::from(i + 1 < n);
                v += near[0] * sides as f64;
            }
            w[i * n + j] = v;
        }
    }
    w
}

fn iterate(
    w: &[Complex64],
    source: &[Complex64],
    opts: &SolveOptions,
) -> Result<(Vec<Complex64>, usize, f64), SolveError> {
    let n = source.len();
    let mut x: Vec<Complex64> =
        if opts.start_from_source { source.to_vec() } else { vec![Complex64::new(0.0, 0.0); n] };
    let mut next = vec![Complex64::new(0.0, 0.0); n];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        residual = 0.0;
        for i in 0..n {
            let row = &w[i * n..(i + 1) * n];
            let mut acc = source[i];
            for (wij, xj) in row.iter().zip(&x) {
                acc += wij * xj;
            }
            residual = residual.max((acc - x[i]).norm());
            next[i] = acc;
        }
        std::mem::swap(&mut x, &mut next);
        if !residual.is_finite() {
            return Err(SolveError::Diverged { iteration: it, residual });
        }
        if residual < opts.tol {
            return Ok((x, it, residual));
        }
    }
    Err(SolveError::NotConverged { iterations: opts.max_iter, residual })
}

/// Intensity at detuning `delta`, with lengths measured in mean free paths
/// at `delta_ref`.
pub fn solve_intensity(grid: &SlabGrid, delta: Detuning, delta_ref: Detuning) -> Result<IntensityProfile, SolveError> {
    solve_intensity_with(grid, delta, delta_ref, &SolveOptions::default())
}

pub fn solve_intensity_with(
    grid: &SlabGrid,
    delta: Detuning,
    delta_ref: Detuning,
    opts: &SolveOptions,
) -> Result<IntensityProfile, SolveError> {
    let mfp = mean_free_path_ratio(delta_ref, delta);
    let a = Complex64::new(1.0 / mfp, 0.0);
    let w = kernel_matrix(grid, a, Complex64::new(0.5 / mfp, 0.0));
    let source: Vec<Complex64> = grid.nodes().iter().map(|&z| Complex64::new((-z / mfp).exp(), 0.0)).collect();
    let (x, iterations, residual) = iterate(&w, &source, opts)?;
    Ok(IntensityProfile {
        grid: grid.clone(),
        values: x.iter().map(|v| v.re).collect(),
        mfp,
        iterations,
        residual,
    })
}

/// Kernel prefactor of the two-frequency transport equation.
pub fn cross_prefactor(delta: Detuning, delta_p: Detuning) -> ComplexAmplitude {
    let d2 = 1.0 + 4.0 * delta.0 * delta.0;
    scattering_amplitude(delta) * scattering_amplitude(delta_p).conj() * (0.5 * d2)
}

/// Correlation `g(z)` between the fields at `delta` and `delta_p`, lengths in
/// mean free paths at `delta`.
pub fn solve_cross(grid: &SlabGrid, delta: Detuning, delta_p: Detuning) -> Result<CrossField, SolveError> {
    solve_cross_with(grid, delta, delta_p, &SolveOptions::default())
}

pub fn solve_cross_with(
    grid: &SlabGrid,
    delta: Detuning,
    delta_p: Detuning,
    opts: &SolveOptions,
) -> Result<CrossField, SolveError> {
    let a = complex_attenuation(delta, delta_p);
    let w = kernel_matrix(grid, a, cross_prefactor(delta, delta_p));
    let source: Vec<Complex64> = grid.nodes().iter().map(|&z| (-a * z).exp()).collect();
    let (values, iterations, residual) = iterate(&w, &source, opts)?;
    Ok(CrossField { grid: grid.clone(), values, attenuation: a, iterations, residual })
}
