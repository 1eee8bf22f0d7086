use std::f64::consts::PI;

use hmm_spde::spectral::{
    basis_rescale, build_truncated_system, burgers_tensor, tensor_by_quadrature, BurgersNonlinearity, ModelSpec, NoiseSpectrum,
    SineBasis,
};
use proptest::prelude::*;

/// Hand-derived entries of `(1/2) d_x(sin(kx) sin(lx))` projected on `sin(mx)`, divided by
/// `||sin(mx)||^2 = pi/2`: product-to-sum gives `(k+l)/4` at `m = k+l` and `-|k-l|/4` at `m = |k-l|`.
fn plain_entry(k: usize, l: usize, m: usize) -> f64 {
    let mut v = 0.0;
    if k + l == m {
        v += (k + l) as f64 / 4.0;
    }
    if k.abs_diff(l) == m {
        v -= k.abs_diff(l) as f64 / 4.0;
    }
    v
}

#[test]
fn quadrature_matches_closed_form_through_mode_8() {
    for normalized in [false, true] {
        let q = tensor_by_quadrature(&SineBasis { normalized }, &BurgersNonlinearity, 7, 64).unwrap();
        let scale = if normalized { 1.0 / (2.0 * PI).sqrt() / 0.5 } else { 1.0 };
        for k in 1..=8 {
            for l in 1..=8 {
                for m in 1..=8 {
                    let expect = plain_entry(k, l, m) * scale;
                    let got = q.get(k, l, m);
                    assert!((got - expect).abs() < 1e-10, "normalized={normalized} B[{k},{l},{m}] = {got}, expected {expect}");
                }
            }
        }
    }
}

#[test]
fn analytic_tensor_matches_closed_form() {
    let t = burgers_tensor(7, false).unwrap();
    for k in 1..=8 {
        for l in 1..=8 {
            for m in 1..=8 {
                assert!((t.get(k, l, m) - plain_entry(k, l, m)).abs() < 1e-15);
            }
        }
    }
}

fn state(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, m + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn partials_match_finite_differences(u in state(3)) {
        let model = ModelSpec::burgers_default(4, 0.0).unwrap();
        let sys = build_truncated_system(&model, 3).unwrap();
        let (x, y) = (&u[..1], &u[1..]);
        let dx = sys.da0_dx(x, y);
        let dy = sys.da0_dy(x, y);
        let step = 1e-5;
        for r in 0..4 {
            let mut plus = u.clone();
            let mut minus = u.clone();
            plus[r] += step;
            minus[r] -= step;
            let fd = (sys.a0(&plus[..1], &plus[1..])[0] - sys.a0(&minus[..1], &minus[1..])[0]) / (2.0 * step);
            let exact = if r == 0 { dx[0][0] } else { dy[0][r - 1] };
            prop_assert!((fd - exact).abs() < 1e-8, "partial {} fd {} exact {}", r, fd, exact);
        }
        for (i, f) in sys.fast_forms().iter().enumerate() {
            for r in 0..4 {
                let mut plus = u.clone();
                let mut minus = u.clone();
                plus[r] += step;
                minus[r] -= step;
                let fd = (f.eval(&plus) - f.eval(&minus)) / (2.0 * step);
                prop_assert!((fd - f.partial(&u, r)).abs() < 1e-8, "fast form {} partial {}", i, r);
            }
        }
    }

    #[test]
    fn tensor_is_symmetric(k in 1usize..9, l in 1usize..9, m in 1usize..9) {
        let t = burgers_tensor(7, true).unwrap();
        prop_assert_eq!(t.get(k, l, m), t.get(l, k, m));
    }

    #[test]
    fn rescale_round_trips(c in prop::collection::vec(0.1..10.0f64, 6)) {
        let t = burgers_tensor(5, false).unwrap();
        let noise = NoiseSpectrum::new(vec![0.0, 1.0, 0.5, 2.0, 1.0, 3.0], 1).unwrap();
        let (t2, n2) = basis_rescale(&t, &noise, &c).unwrap();
        let inv: Vec<f64> = c.iter().map(|v| 1.0 / v).collect();
        let (t3, n3) = basis_rescale(&t2, &n2, &inv).unwrap();
        for (k, l, m, v) in t.iter() {
            prop_assert!((t3.get(k, l, m) - v).abs() < 1e-12 * v.abs().max(1.0));
        }
        prop_assert_eq!(t3.nnz(), t.nnz());
        for (a, b) in n3.amplitudes().iter().zip(noise.amplitudes()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_forms_are_even(u in state(2), s in -3.0..3.0f64) {
        let model = ModelSpec::burgers_default(3, 0.0).unwrap();
        let sys = build_truncated_system(&model, 2).unwrap();
        let scaled: Vec<f64> = u.iter().map(|v| s * v).collect();
        let f = &sys.slow_forms()[0];
        prop_assert!((f.eval(&scaled) - s * s * f.eval(&u)).abs() < 1e-12 * (1.0 + f.eval(&u).abs() * s * s));
    }
}
