use cbs_core::atom::{complex_attenuation, mean_free_path_ratio, spectrum_cdf};
use cbs_core::expint::{e1, e1_complex};
use cbs_core::slab::{solve_intensity, SlabGrid};
use cbs_core::Detuning;
use num_complex::Complex64;
use proptest::prelude::*;

// scipy.special.exp1
const E1_REAL: [(f64, f64); 7] = [
    (1e-3, 6.331539364136149),
    (0.3, 0.9056766516758468),
    (1.0, 0.2193839343955205),
    (2.0, 0.048900510708061125),
    (2.5, 0.024914917870269736),
    (7.0, 0.00011548173161033822),
    (30.0, 3.021552010688813e-15),
];

// mpmath.e1 at 50 digits
const E1_COMPLEX: [((f64, f64), (f64, f64)); 5] = [
    ((0.5, 0.5), (0.2578664571379838, -0.3966904354558152)),
    ((1.0, -2.0), (-0.1267842855915597, 0.03508158292818701)),
    ((3.0, 4.0), (0.0008639539589795851, 0.008786208377197442)),
    ((0.1, 1.5), (-0.4073114693214373, -0.23956183055762503)),
    ((5.0, -0.5), (0.0009526812427619163, 0.0006331142276385865)),
];

#[test]
fn e1_matches_reference_values() {
    for (x, want) in E1_REAL {
        assert!((e1(x) / want - 1.0).abs() < 1e-13, "E1({x}) = {}", e1(x));
    }
    for ((re, im), (wr, wi)) in E1_COMPLEX {
        let got = e1_complex(Complex64::new(re, im));
        let want = Complex64::new(wr, wi);
        assert!((got - want).norm() < 1e-13 * want.norm(), "E1({re}+{im}i) = {got}");
    }
}

fn e2(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (-x).exp() - x * e1(x)
    }
}

/// Light scattered out of the slab, on either face, from the collision density.
fn escaping_flux(b: f64, nodes: usize) -> f64 {
    let grid = SlabGrid::uniform(b, nodes).unwrap();
    let i = solve_intensity(&grid, Detuning(0.0), Detuning(0.0)).unwrap();
    grid.integrate(|k, z| i.values[k] * 0.5 * (e2(z) + e2(b - z)))
}

#[test]
fn scattered_flux_balances_ballistic_loss() {
    for b in [0.25, 1.0, 4.0] {
        let out = escaping_flux(b, 512);
        assert!((out - (1.0 - (-b).exp())).abs() < 2e-3, "b = {b}: {out}");
    }
}

#[test]
fn detuned_intensity_is_the_laser_profile_on_a_stretched_slab() {
    let delta = 0.8;
    let b = 0.6;
    let scale = mean_free_path_ratio(Detuning(0.0), Detuning(delta));
    let detuned = solve_intensity(&SlabGrid::uniform(b, 256).unwrap(), Detuning(delta), Detuning(0.0)).unwrap();
    let on_line = solve_intensity(&SlabGrid::uniform(b / scale, 256).unwrap(), Detuning(0.0), Detuning(0.0)).unwrap();
    for z in [0.0, 0.2, 0.45, 0.6] {
        assert!((detuned.at(z) - on_line.at(z / scale)).abs() < 1e-9, "z = {z}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn mean_free_path_ratios_compose(a in -4.0f64..4.0, b in -4.0f64..4.0, c in -4.0f64..4.0) {
        let (a, b, c) = (Detuning(a), Detuning(b), Detuning(c));
        let direct = mean_free_path_ratio(a, c);
        prop_assert!((mean_free_path_ratio(a, b) * mean_free_path_ratio(b, c) / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cross_field_decays_into_the_slab(d in -3.0f64..3.0, dp in -3.0f64..3.0) {
        prop_assert!(complex_attenuation(Detuning(d), Detuning(dp)).re > 0.0);
    }

    #[test]
    fn spectrum_cdf_is_monotone(d in -3.0f64..3.0, x in -10.0f64..10.0, step in 1e-3f64..2.0) {
        let lo = spectrum_cdf(Detuning(d), Detuning(x));
        let hi = spectrum_cdf(Detuning(d), Detuning(x + step));
        prop_assert!(lo >= 0.0 && hi <= 1.0 + 1e-12 && hi >= lo - 1e-12);
    }
}
