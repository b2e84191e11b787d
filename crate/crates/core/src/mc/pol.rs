//! Polarization weights of the linear and two-photon scattering vertices.
//!
//! Dot products are bilinear, `a·b = Σ a_i b_i`; conjugation is explicit.
//! The `*_sum` variants take sums of outer products over independent photon
//! histories, which keeps the nonlinear estimators linear in the number of
//! path truncations instead of cubic.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::atom::Channel;

pub type PolVector = Vector3<Complex64>;
pub type PolTensor = Matrix3<Complex64>;

pub(crate) fn dotc(a: &PolVector, b: &PolVector) -> Complex64 {
    a.x * b.x.conj() + a.y * b.y.conj() + a.z * b.z.conj()
}

/// Removes the component of `eps` along the unit vector `dir`.
pub fn project(eps: &PolVector, dir: &Vector3<f64>) -> PolVector {
    let c = eps.x * dir.x + eps.y * dir.y + eps.z * dir.z;
    PolVector::new(eps.x - c * dir.x, eps.y - c * dir.y, eps.z - c * dir.z)
}

pub fn pi_ladder(e1: &PolVector, e2: &PolVector, e3: &PolVector) -> f64 {
    let n1 = e1.norm_squared();
    let n2 = e2.norm_squared();
    let t = dotc(e1, e2) * dotc(e2, e3) * dotc(e3, e1);
    0.25 * (n1 * dotc(e2, e3).norm_sqr() + n2 * dotc(e1, e3).norm_sqr() + 2.0 * t.re)
}

/// Interference weight of two-photon scattering with photons 2 and 3
/// reversed. The tilded vectors belong to the reversed amplitude.
pub fn pi_crossed(e1: &PolVector, e2: &PolVector, t3: &PolVector, e3: &PolVector, t2: &PolVector) -> Complex64 {
    let n1 = e1.norm_squared();
    0.25 * (n1 * dotc(e2, e3) * dotc(t2, t3)
        + dotc(e2, e3) * dotc(e1, t3) * dotc(t2, e1)
        + dotc(e1, e3) * dotc(e2, t3) * dotc(t2, e1)
        + dotc(e1, e3) * dotc(e2, e1) * dotc(t2, t3))
}

pub fn pi_prop_ladder(e1: &PolVector, e2: &PolVector, e3: &PolVector) -> Complex64 {
    0.5 * (dotc(e1, e2) * dotc(e2, e3) * dotc(e3, e1) + dotc(e1, e3) * e2.norm_squared() * dotc(e3, e1))
}

pub fn pi_prop_crossed(e1: &PolVector, e2: &PolVector, e3: &PolVector, t2: &PolVector, t3: &PolVector) -> Complex64 {
    0.5 * (dotc(e1, e2) * dotc(t3, t2) * dotc(e3, e1) + dotc(e1, t2) * dotc(t3, e2) * dotc(e3, e1))
}

fn hadamard_sum(a: &PolTensor, b: &PolTensor) -> Complex64 {
    a.component_mul(b).sum()
}

/// Outer product `x y^T`.
pub fn outer(x: &PolVector, y: &PolVector) -> PolTensor {
    x * y.transpose()
}

/// Ladder weight from `u = Σ e1 e1^†`, `v = Σ e2 e2^†`, `w = Σ e3* e3^T`.
pub fn pi_ladder_sum(u: &PolTensor, v: &PolTensor, w: &PolTensor) -> Complex64 {
    let t1 = u.trace() * hadamard_sum(v, w);
    let t2 = v.trace() * hadamard_sum(u, w);
    let t3 = hadamard_sum(u, &(v.transpose() * w));
    0.25 * (t1 + t2 + 2.0 * t3.re)
}

/// Crossed weight from `u = Σ e1 e1^†`, `v = Σ e2 t2^T`, `w = Σ e3* t3^†`.
/// Equals the sum of [`pi_crossed`] over the histories.
pub fn pi_crossed_sum(u: &PolTensor, v: &PolTensor, w: &PolTensor) -> Complex64 {
    let t1 = u.trace() * hadamard_sum(v, w);
    let t2 = hadamard_sum(v, &(w * u));
    let t3 = hadamard_sum(u, &(w * v));
    let t4 = hadamard_sum(u, &(w * v.transpose()));
    0.25 * (t1 + t2 + t3 + t4)
}

/// Propagation ladder weight with the pump summed into `v = Σ e2 e2^†`.
pub fn pi_prop_ladder_sum(e1: &PolVector, v: &PolTensor, e3: &PolVector) -> Complex64 {
    let e3c = e3.map(|c| c.conj());
    let first = (e3c.transpose() * v * e1)[(0, 0)];
    0.5 * dotc(e3, e1) * (first + dotc(e1, e3) * v.trace())
}

/// Propagation crossed weight with the pump summed into `v = Σ e2* t2^†`.
pub fn pi_prop_crossed_sum(e1: &PolVector, v: &PolTensor, e3: &PolVector, t3: &PolVector) -> Complex64 {
    let a = (e1.transpose() * v * t3)[(0, 0)];
    let b = (t3.transpose() * v * e1)[(0, 0)];
    0.5 * dotc(e3, e1) * (a + b)
}

/// Laser and detector polarizations plus the per-vertex normalization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizationSetup {
    pub laser: PolVector,
    pub detector: PolVector,
    /// Weight of each linear scattering vertex, `3/2` for dipole scattering.
    pub vertex: f64,
    pub vectorial: bool,
}

impl PolarizationSetup {
    pub fn for_channel(channel: Channel) -> Self {
        match channel {
            Channel::Scalar => {
                let e = PolVector::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                PolarizationSetup { laser: e, detector: e, vertex: 1.0, vectorial: false }
            }
            Channel::HParallelH => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                let laser = PolVector::new(Complex64::new(r, 0.0), Complex64::new(0.0, r), Complex64::new(0.0, 0.0));
                let detector = laser.map(|c| c.conj());
                PolarizationSetup { laser, detector, vertex: 1.5, vectorial: true }
            }
        }
    }

    pub fn project(&self, eps: &PolVector, dir: &Vector3<f64>) -> PolVector {
        if self.vectorial {
            project(eps, dir)
        } else {
            *eps
        }
    }
}

/// Unit complex vector uniformly distributed over the polarizations
/// transverse to `dir`.
pub fn random_polarization(dir: &Vector3<f64>, u: [f64; 3]) -> PolVector {
    let helper = if dir.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let a = dir.cross(&helper).normalize();
    let b = dir.cross(&a);
    // uniform on the complex unit sphere of the transverse plane
    let theta = (u[0].sqrt()).asin();
    let (p1, p2) = (2.0 * std::f64::consts::PI * u[1], 2.0 * std::f64::consts::PI * u[2]);
    let ca = Complex64::from_polar(theta.cos(), p1);
    let cb = Complex64::from_polar(theta.sin(), p2);
    a.map(|x| ca * x) + b.map(|x| cb * x)
}

pub fn random_direction(u0: f64, u1: f64) -> Vector3<f64> {
    let c = 2.0 * u0 - 1.0;
    let s = (1.0 - c * c).max(0.0).sqrt();
    let phi = 2.0 * std::f64::consts::PI * u1;
    Vector3::new(s * phi.cos(), s * phi.sin(), c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_vec(rng: &mut ChaCha8Rng) -> PolVector {
        PolVector::new(
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
        )
    }

    #[test]
    fn projection_examples() {
        let x = PolVector::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert_eq!(project(&x, &Vector3::z()), x);
        assert!(project(&x, &Vector3::x()).norm() < 1e-15);
        let e = PolVector::new(c(0.3, 0.1), c(-0.2, 0.4), c(0.5, -0.7));
        let d = Vector3::new(1.0, 2.0, -2.0) / 3.0;
        let p = project(&e, &d);
        assert!((project(&p, &d) - p).norm() < 1e-15);
        assert!((p.x * d.x + p.y * d.y + p.z * d.z).norm() < 1e-15);
    }

    #[test]
    fn real_unit_vectors_give_unit_weights() {
        let e = PolVector::new(c(0.6, 0.0), c(0.8, 0.0), c(0.0, 0.0));
        assert!((pi_ladder(&e, &e, &e) - 1.0).abs() < 1e-15);
        assert!((pi_crossed(&e, &e, &e, &e, &e) - 1.0).norm() < 1e-15);
        assert!((pi_prop_ladder(&e, &e, &e) - 1.0).norm() < 1e-15);
        assert!((pi_prop_crossed(&e, &e, &e, &e, &e) - 1.0).norm() < 1e-15);
        let z = PolVector::new(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert!(pi_ladder(&e, &e, &z).abs() < 1e-15);
    }

    #[test]
    fn tensor_forms_match_pointwise_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e1: Vec<PolVector> = (0..3).map(|_| rand_vec(&mut rng)).collect();
        let e2: Vec<PolVector> = (0..2).map(|_| rand_vec(&mut rng)).collect();
        let t2: Vec<PolVector> = (0..2).map(|_| rand_vec(&mut rng)).collect();
        let e3: Vec<PolVector> = (0..4).map(|_| rand_vec(&mut rng)).collect();
        let t3: Vec<PolVector> = (0..4).map(|_| rand_vec(&mut rng)).collect();
        let conj = |v: &PolVector| v.map(|x| x.conj());
        let u: PolTensor = e1.iter().map(|a| outer(a, &conj(a))).sum();
        let v_l: PolTensor = e2.iter().map(|a| outer(a, &conj(a))).sum();
        let w_l: PolTensor = e3.iter().map(|a| outer(&conj(a), a)).sum();
        let mut want = 0.0;
        for a in &e1 {
            for b in &e2 {
                for d in &e3 {
                    want += pi_ladder(a, b, d);
                }
            }
        }
        assert!((pi_ladder_sum(&u, &v_l, &w_l) - want).norm() < 1e-12);

        let v_c: PolTensor = e2.iter().zip(&t2).map(|(a, b)| outer(a, b)).sum();
        let w_c: PolTensor = e3.iter().zip(&t3).map(|(a, b)| outer(&conj(a), &conj(b))).sum();
        let mut want = Complex64::new(0.0, 0.0);
        for a in &e1 {
            for (b, tb) in e2.iter().zip(&t2) {
                for (d, td) in e3.iter().zip(&t3) {
                    want += pi_crossed(a, b, td, d, tb);
                }
            }
        }
        assert!((pi_crossed_sum(&u, &v_c, &w_c) - want).norm() < 1e-12);

        let (a, d, td) = (e1[0], e3[0], t3[0]);
        let want: Complex64 = e2.iter().map(|b| pi_prop_ladder(&a, b, &d)).sum();
        assert!((pi_prop_ladder_sum(&a, &v_l, &d) - want).norm() < 1e-12);
        let vp: PolTensor = e2.iter().zip(&t2).map(|(b, tb)| outer(&conj(b), &conj(tb))).sum();
        let want: Complex64 = e2.iter().zip(&t2).map(|(b, tb)| pi_prop_crossed(&a, b, &d, tb, &td)).sum();
        assert!((pi_prop_crossed_sum(&a, &vp, &d, &td) - want).norm() < 1e-12);
    }
}
