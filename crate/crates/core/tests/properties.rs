mod common;

use num_complex::Complex64;
use proptest::prelude::*;

use zakpol::ambiguity::{cross_ambiguity_fast, twisted_convolve, TorusSurface};
use zakpol::channel::{draw_polar_response, BernoulliSupport};
use zakpol::estimation::{detect_peaks, entropy_weight, fuse_estimates, DetectorConfig};
use zakpol::harness::roc_from_scores;
use zakpol::waveform::{pulsone, spread_carrier};
use zakpol::{ComplexFrame, DDSurface, GdaftParams, SupportBox, ZakParams};

fn frame(values: Vec<(f64, f64)>) -> ComplexFrame {
    ComplexFrame::new(values.into_iter().map(|(re, im)| Complex64::new(re, im)).collect(), 1.0)
}

fn frames(len: std::ops::Range<usize>) -> impl Strategy<Value = (ComplexFrame, ComplexFrame)> {
    len.prop_flat_map(|l| {
        let v = prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), l);
        (v.clone(), v).prop_map(|(a, b)| (frame(a), frame(b)))
    })
}

fn surface() -> impl Strategy<Value = DDSurface> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 7 * 9)
        .prop_map(|v| DDSurface::from_fn(7, 9, |k, l| {
            let (re, im) = v[k * 9 + (l + 4) as usize];
            Complex64::new(re, im)
        }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cauchy_schwarz((y, x) in frames(1..24)) {
        let bound = y.energy().sqrt() * x.energy().sqrt();
        let delays: Vec<usize> = (0..y.len()).collect();
        for row in cross_ambiguity_fast(&y, &x, &delays).unwrap() {
            for v in row {
                prop_assert!(v.norm() <= bound * (1.0 + 1e-12) + 1e-15);
            }
        }
    }

    #[test]
    fn fast_matches_oracle((y, x) in frames(1..24)) {
        let delays: Vec<usize> = (0..y.len()).collect();
        let fast = cross_ambiguity_fast(&y, &x, &delays).unwrap();
        for (k, row) in fast.iter().enumerate() {
            for (l, v) in row.iter().enumerate() {
                let o = common::ambiguity_point(&y.samples, &x.samples, k as i64, l as i64);
                prop_assert!((v - o).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn twisted_deltas(k1 in 0i64..15, l1 in 0i64..15, k2 in 0i64..15, l2 in 0i64..15) {
        let one = Complex64::new(1.0, 0.0);
        let out = twisted_convolve(&TorusSurface::delta(15, k1, l1, one), &TorusSurface::delta(15, k2, l2, one)).unwrap();
        let expect = TorusSurface::delta(15, k1 + k2, l1 + l2, common::cis((l1 * k2) as i128, 15));
        prop_assert!(out.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn spread_carrier_is_flat(a in 1i64..35, b in 1i64..35, c in 1i64..35, k0 in 0usize..5, l0 in 0usize..7) {
        let p = ZakParams::new(5, 7, 0.5, 2.0).unwrap();
        prop_assume!(GdaftParams::new(a, b, c, 35).is_ok() && GdaftParams { a, b, c }.is_unbiased(7));
        let x = spread_carrier(&p, &GdaftParams { a, b, c }, k0, l0).unwrap();
        for v in &x.samples {
            prop_assert!((v.norm() - 1.0 / 35f64.sqrt()).abs() < 1e-12);
        }
        let unbiased = cross_ambiguity_fast(&x, &pulsone(&p, 0, 0).unwrap(), &(0..35).collect::<Vec<_>>()).unwrap();
        for row in unbiased {
            for v in row {
                prop_assert!((v.norm() * 35f64.sqrt() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn entropy_weight_scale_invariant(s in surface(), mag in 1e-3..1e3f64, ph in 0.0..std::f64::consts::TAU) {
        let w = entropy_weight(&s);
        let mut t = s.clone();
        t.scale(Complex64::from_polar(mag, ph));
        prop_assert!((0.0..=1.0).contains(&w));
        prop_assert!((entropy_weight(&t) - w).abs() < 1e-12);
    }

    #[test]
    fn peaks_scale_invariant(s in surface(), mag in 1e-3..1e3f64, ph in 0.0..std::f64::consts::TAU, step in 1i64..3) {
        let det = DetectorConfig { roi: SupportBox::new(0, 2, -2, 2).unwrap(), guards: (1, 1), pfa: 0.5 };
        let mut t = s.clone();
        t.scale(Complex64::from_polar(mag, ph));
        let a: Vec<(i64, i64)> = detect_peaks(&s, &det, step).unwrap().iter().map(|p| (p.k, p.l)).collect();
        let b: Vec<(i64, i64)> = detect_peaks(&t, &det, step).unwrap().iter().map(|p| (p.k, p.l)).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn fusion_permutation_and_single(
        peaks in prop::array::uniform4(prop::option::of((-8i64..8, -5i64..5))),
        weights in prop::array::uniform4(0.0..1.0f64),
        perm in Just([0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let a = fuse_estimates(peaks, weights);
        let b = fuse_estimates(perm.map(|i| peaks[i]), perm.map(|i| weights[i]));
        prop_assert_eq!(a.detected, b.detected);
        if a.detected {
            prop_assert!((a.delay_bin.unwrap() - b.delay_bin.unwrap()).abs() < 1e-9);
            prop_assert!((a.doppler_bin.unwrap() - b.doppler_bin.unwrap()).abs() < 1e-9);
        }
        for i in 0..4 {
            let mut w = [0.0; 4];
            w[i] = 0.5;
            let one = fuse_estimates(peaks, w);
            match peaks[i] {
                Some((k, l)) => {
                    prop_assert_eq!(one.delay_bin, Some(k as f64));
                    prop_assert_eq!(one.doppler_bin, Some(l as f64));
                }
                None => prop_assert!(!one.detected),
            }
        }
    }

    #[test]
    fn roc_is_monotone(pos in prop::collection::vec(0.0..1.0f64, 1..40), neg in prop::collection::vec(0.0..1.0f64, 1..40)) {
        let c = roc_from_scores(&pos, &neg).unwrap();
        prop_assert!((0.0..=1.0).contains(&c.auc));
        prop_assert!(c.points.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
        let swapped = roc_from_scores(&neg, &pos).unwrap();
        prop_assert!((c.auc + swapped.auc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn drawn_responses_are_reciprocal(seed in any::<u64>(), zero_one in any::<bool>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let support = if zero_one { BernoulliSupport::ZeroOne } else { BernoulliSupport::Symmetric };
        let h = draw_polar_response(&mut rng, support);
        prop_assert_eq!(h[0][1], h[1][0]);
    }
}
