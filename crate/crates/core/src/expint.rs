//! Exponential integral `E1` for real and complex arguments with positive real part.

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_RADIUS: f64 = 2.0;

/// `E1(x)` for real `x > 0`.
pub fn e1(x: f64) -> f64 {
    if x <= 0.0 {
        return if x == 0.0 { f64::INFINITY } else { f64::NAN };
    }
    if x <= SERIES_RADIUS {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -x / kf;
            let add = term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // modified Lentz on the even continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// `E1(z)` for complex `z` with `Re z > 0`, or on the positive real axis.
pub fn e1_complex(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re > 0.0 {
        return Complex64::new(e1(z.re), 0.0);
    }
    if z.norm() <= SERIES_RADIUS {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for k in 1..200 {
            let kf = k as f64;
            term *= -z / kf;
            let add = term / kf;
            sum += add;
            if add.norm() < 1e-17 * sum.norm().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - z.ln() - sum
    } else {
        let one = Complex64::new(1.0, 0.0);
        let mut b = z + 1.0;
        let mut c = Complex64::new(1e300, 0.0);
        let mut d = one / b;
        let mut h = d;
        for i in 1..2000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = one / (d * an + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).norm() < 1e-16 {
                break;
            }
        }
        h * (-z).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_reference_values() {
        // values from an independent high-precision evaluation
        let cases = [
            (0.01, 4.037_929_576_538_114),
            (0.5, 0.559_773_594_776_160_8),
            (1.0, 0.219_383_934_395_520_3),
            (2.0, 0.048_900_510_708_061_12),
            (2.5, 0.024_914_917_870_269_74),
            (10.0, 4.156_968_929_685_324e-6),
        ];
        for (x, want) in cases {
            let got = e1(x);
            assert!(((got - want) / want).abs() < 1e-13, "x={x} got={got} want={want}");
        }
    }

    #[test]
    fn complex_reference_values() {
        let cases = [
            (Complex64::new(0.0, 1.0), Complex64::new(-0.337_403_922_900_968_1, -0.624_713_256_427_713_6)),
            (Complex64::new(1.0, 1.0), Complex64::new(0.000_281_624_451_981_418_3, -0.179_324_535_039_358_94)),
            (Complex64::new(3.0, -2.0), Complex64::new(-0.009_095_920_874_794_729, 0.006_900_179_262_212_492)),
            (Complex64::new(0.3, 5.0), Complex64::new(0.139_959_344_747_200_54, -0.007_591_694_074_147_398)),
        ];
        for (z, want) in cases {
            let got = e1_complex(z);
            assert!((got - want).norm() < 1e-12 * want.norm().max(1e-3), "z={z} got={got} want={want}");
        }
    }

    #[test]
    fn series_and_fraction_agree_at_switch() {
        for arg in [0.0_f64, 0.4, 1.0, 1.5] {
            let zi = Complex64::from_polar(1.999_999, arg);
            let zo = Complex64::from_polar(2.000_001, arg);
            assert!((e1_complex(zi) - e1_complex(zo)).norm() < 1e-5);
        }
    }
}
