//! Random photon paths in the slab and the walk sums built on them.

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::Rng;

use super::pol::{random_direction, PolTensor, PolVector, PolarizationSetup};

/// Sequence of scattering events of one photon. Positions are in units of
/// the mean free path at the laser frequency.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhotonPath {
    pub origin: Vector3<f64>,
    /// Scattering events inside the slab, in order.
    pub vertices: Vec<Vector3<f64>>,
    /// `steps[k]` is the distance travelled to reach `vertices[k]`.
    pub steps: Vec<f64>,
    /// `directions[k]` is the unit direction of the step to `vertices[k]`.
    pub directions: Vec<Vector3<f64>>,
    /// Direction of the final step that leaves the slab.
    pub exit_direction: Option<Vector3<f64>>,
    /// Set when the event cap was reached before the photon left.
    pub truncated: bool,
}

impl PhotonPath {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn clear(&mut self, origin: Vector3<f64>) {
        self.origin = origin;
        self.vertices.clear();
        self.steps.clear();
        self.directions.clear();
        self.exit_direction = None;
        self.truncated = false;
    }

    /// Polarization after each scattering event, starting from `eps` at the
    /// origin and projecting on the plane transverse to each outgoing step.
    /// Entry `k` is the polarization carried by the step to `vertices[k]`.
    pub fn polarizations(&self, setup: &PolarizationSetup, eps: PolVector) -> Vec<PolVector> {
        let mut out = Vec::with_capacity(self.len());
        let mut e = eps;
        for d in &self.directions {
            e = setup.project(&e, d);
            out.push(e);
        }
        out
    }
}

/// Event cap per photon for a slab of thickness `b`.
pub fn event_cap(b: f64) -> usize {
    (40.0 * b).ceil().max(200.0) as usize
}

/// Samples a path from `origin` with exponential steps of mean `mean_step`
/// and isotropic directions, stopping when the photon leaves `0 ≤ z ≤ b`.
pub fn sample_path<R: Rng + ?Sized>(rng: &mut R, origin: Vector3<f64>, b: f64, mean_step: f64, cap: usize) -> PhotonPath {
    let mut path = PhotonPath::default();
    sample_path_into(rng, &mut path, origin, b, mean_step, cap);
    path
}

pub fn sample_path_into<R: Rng + ?Sized>(
    rng: &mut R,
    path: &mut PhotonPath,
    origin: Vector3<f64>,
    b: f64,
    mean_step: f64,
    cap: usize,
) {
    path.clear(origin);
    let mut pos = origin;
    loop {
        if path.len() >= cap {
            path.truncated = true;
            return;
        }
        let dir = random_direction(rng.random(), rng.random());
        let r = -mean_step * (1.0 - rng.random::<f64>()).ln();
        let next = pos + dir * r;
        if next.z < 0.0 || next.z > b {
            path.exit_direction = Some(dir);
            return;
        }
        path.vertices.push(next);
        path.steps.push(r);
        path.directions.push(dir);
        pos = next;
    }
}

/// Two-frequency propagation parameters of a walk: the kernel prefactor
/// `coupling` and the complex attenuation rate, both per mean free path at
/// the laser frequency. Steps are drawn with rate `Re attenuation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkKernel {
    pub coupling: Complex64,
    pub attenuation: Complex64,
}

impl WalkKernel {
    /// Plain intensity transport with mean free path `mfp`.
    pub fn intensity(mfp: f64) -> Self {
        WalkKernel { coupling: Complex64::new(1.0 / mfp, 0.0), attenuation: Complex64::new(1.0 / mfp, 0.0) }
    }

    pub fn conj(self) -> Self {
        WalkKernel { coupling: self.coupling.conj(), attenuation: self.attenuation.conj() }
    }

    pub fn mean_step(&self) -> f64 {
        1.0 / self.attenuation.re
    }

    /// Per-step weight relative to the sampling density.
    pub fn step_weight(&self, r: f64) -> Complex64 {
        self.coupling / self.attenuation.re * Complex64::from_polar(1.0, -self.attenuation.im * r)
    }

    /// Attenuation of the coherent beam down to depth `z`.
    pub fn ballistic(&self, z: f64) -> Complex64 {
        (-self.attenuation * z).exp()
    }
}

/// One truncation of an adjoint walk: the weight of the path that ends with
/// `order` scattering events before reaching the start point, and the
/// polarizations transported along it from the two boundary modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkTerm {
    pub order: usize,
    pub weight: Complex64,
    pub first: PolVector,
    pub second: PolVector,
}

/// Walks back from depth `z0` towards the surface and lists every
/// truncation. `first` and `second` are the polarizations of the two
/// boundary modes at the surface.
#[allow(clippy::too_many_arguments)]
pub fn adjoint_walk<R: Rng + ?Sized>(
    rng: &mut R,
    path: &mut PhotonPath,
    z0: f64,
    b: f64,
    kernel: WalkKernel,
    setup: &PolarizationSetup,
    first: PolVector,
    second: PolVector,
    out: &mut Vec<WalkTerm>,
) {
    out.clear();
    out.push(WalkTerm { order: 0, weight: kernel.ballistic(z0), first, second });
    sample_path_into(rng, path, Vector3::new(0.0, 0.0, z0), b, kernel.mean_step(), event_cap(b));
    let mut w = Complex64::new(1.0, 0.0);
    let (mut e1, mut e2) = (first, second);
    // transport from the surface mode to the start point is the product of
    // projections in walk order, applied to the mode vector last-first
    let mut chain = nalgebra::Matrix3::<f64>::identity();
    for (k, (v, d)) in path.vertices.iter().zip(&path.directions).enumerate() {
        w *= kernel.step_weight(path.steps[k]) * setup.vertex;
        if setup.vectorial {
            chain *= nalgebra::Matrix3::identity() - d * d.transpose();
            e1 = apply(&chain, &first);
            e2 = apply(&chain, &second);
        }
        out.push(WalkTerm { order: k + 1, weight: w * kernel.ballistic(v.z), first: e1, second: e2 });
    }
}

fn apply(m: &nalgebra::Matrix3<f64>, e: &PolVector) -> PolVector {
    PolVector::new(
        e.x * m[(0, 0)] + e.y * m[(0, 1)] + e.z * m[(0, 2)],
        e.x * m[(1, 0)] + e.y * m[(1, 1)] + e.z * m[(1, 2)],
        e.x * m[(2, 0)] + e.y * m[(2, 1)] + e.z * m[(2, 2)],
    )
}

/// Sums `Σ w x y^T` over walk terms, split into the coherent (order 0) part
/// and the rest. `fx` and `fy` map the term polarizations to `x` and `y`.
pub fn tensor_sums(
    terms: &[WalkTerm],
    fx: impl Fn(&WalkTerm) -> PolVector,
    fy: impl Fn(&WalkTerm) -> PolVector,
) -> (PolTensor, PolTensor) {
    let mut head = PolTensor::zeros();
    let mut rest = PolTensor::zeros();
    for t in terms {
        let m = (fx(t) * fy(t).transpose()) * t.weight;
        if t.order == 0 {
            head += m;
        } else {
            rest += m;
        }
    }
    (head, rest)
}

pub fn conj(e: &PolVector) -> PolVector {
    e.map(|c| c.conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_step_matches_exponential_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut sum = 0.0;
        let mut n = 0usize;
        for _ in 0..20_000 {
            let p = sample_path(&mut rng, Vector3::new(0.0, 0.0, 1e6), 2e6, 1.7, 5);
            sum += p.steps.iter().sum::<f64>();
            n += p.steps.len();
        }
        let mean = sum / n as f64;
        assert!((mean - 1.7).abs() < 0.03, "{mean}");
    }

    #[test]
    fn vertices_follow_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = sample_path(&mut rng, Vector3::new(0.0, 0.0, 1.0), 3.0, 1.0, 50);
        let mut pos = p.origin;
        for k in 0..p.len() {
            pos += p.directions[k] * p.steps[k];
            assert!((pos - p.vertices[k]).norm() < 1e-12);
            assert!(pos.z >= 0.0 && pos.z <= 3.0);
        }
        assert!(p.exit_direction.is_some() || p.truncated);
    }

    #[test]
    fn adjoint_walk_estimates_intensity() {
        use crate::slab::{solve_intensity, SlabGrid};
        use crate::Detuning;
        let b = 0.8;
        let z0 = 0.3;
        let grid = SlabGrid::uniform(b, 257).unwrap();
        let want = solve_intensity(&grid, Detuning(0.0), Detuning(0.0)).unwrap().at(z0);
        let setup = PolarizationSetup::for_channel(crate::Channel::Scalar);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut path = PhotonPath::default();
        let mut terms = Vec::new();
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            adjoint_walk(&mut rng, &mut path, z0, b, WalkKernel::intensity(1.0), &setup, setup.laser, setup.laser, &mut terms);
            let v: f64 = terms.iter().map(|t| t.weight.re).sum();
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - want).abs() < 4.0 * se, "mc {mean} ± {se}, quadrature {want}");
    }
}
