use super::*;
use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian(x: &[f64]) -> f64 {
    (-x.iter().map(|v| v * v).sum::<f64>() / 2.0).exp()
}

fn random_field(spec: &GridSpec, seed: u64) -> SampledField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = ArrayD::from_shape_fn(spec.shape(), |_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    SampledField::from_values(spec.clone(), values).unwrap()
}

fn rel_diff(a: &SampledField, b: &SampledField) -> f64 {
    let diff = a.sub(b).unwrap();
    lp_norm(&diff, 2.0).unwrap() / lp_norm(b, 2.0).unwrap()
}

#[test]
fn grid_geometry() {
    let spec = GridSpec::new(vec![4.0, 2.0], vec![8, 16]).unwrap();
    assert_eq!(spec.len(), 128);
    assert_relative_eq!(spec.spacing(0), 1.0);
    assert_relative_eq!(spec.spacing(1), 0.25);
    assert_relative_eq!(spec.coordinate(0, 0), -4.0);
    assert_relative_eq!(spec.coordinate(0, 7), 3.0);
    assert_relative_eq!(spec.frequency_spacing(0), PI / 4.0);
    assert_relative_eq!(spec.frequency(0, 0), -PI);
    assert_relative_eq!(spec.frequency(0, 4), 0.0);
    assert_relative_eq!(spec.nyquist(1), 4.0 * PI);
    assert_relative_eq!(spec.frequency(1, 0), -spec.nyquist(1));
}

#[test]
fn grid_validation() {
    assert!(GridSpec::new(vec![1.0], vec![7]).is_err());
    assert!(GridSpec::new(vec![0.0], vec![8]).is_err());
    assert!(GridSpec::new(vec![1.0; 4], vec![8; 4]).is_err());
    assert!(GridSpec::new(vec![1.0, 1.0], vec![8]).is_err());
    assert!(GridSpec::new(vec![], vec![]).is_err());
}

#[test]
fn grid_header_schema() {
    let spec = GridSpec::new(vec![1.5, 2.0], vec![4, 8]).unwrap();
    let json = serde_json::to_string(&spec).unwrap();
    assert_eq!(json, r#"{"d":2,"half_width":[1.5,2.0],"samples":[4,8]}"#);
    let back: GridSpec = serde_json::from_str(&json).unwrap();
    assert_eq!(back, spec);
    assert!(
        serde_json::from_str::<GridSpec>(r#"{"d":3,"half_width":[1.0],"samples":[4]}"#).is_err()
    );
    assert!(
        serde_json::from_str::<GridSpec>(r#"{"d":1,"half_width":[1.0],"samples":[5]}"#).is_err()
    );
}

#[test]
fn sample_examples() {
    let spec = GridSpec::isotropic(2, 3.0, 8).unwrap();
    let ones = sample(|_| 1.0, &spec).unwrap();
    assert!(ones.values().iter().all(|v| *v == Complex64::new(1.0, 0.0)));

    let spec = GridSpec::isotropic(1, 5.0, 64).unwrap();
    let g = sample(gaussian, &spec).unwrap();
    let vals: Vec<f64> = g.values().iter().map(|v| v.re).collect();
    // x_m = -L + m h is symmetric about index N/2 (x = 0)
    for m in 1..32 {
        assert_relative_eq!(vals[32 - m], vals[32 + m], epsilon = 1e-15);
    }
    let argmax = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    assert_eq!(argmax, 32);
    assert!(vals.iter().all(|v| *v > 0.0));
}

#[test]
fn sample_rejects_non_finite() {
    let spec = GridSpec::isotropic(1, 1.0, 4).unwrap();
    match sample(|x| 1.0 / x[0], &spec) {
        Err(Error::NonFiniteSample { point, .. }) => assert_eq!(point, vec![0.0]),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn gaussian_is_its_own_transform() {
    let spec = GridSpec::isotropic(1, 12.0, 256).unwrap();
    let g = sample(gaussian, &spec).unwrap().forward();
    for (i, c) in g.coefficients().iter().enumerate() {
        let lam = spec.frequency(0, i);
        assert!(
            (c - Complex64::new((-lam * lam / 2.0).exp(), 0.0)).norm() < 1e-8,
            "λ = {lam}"
        );
    }

    let spec = GridSpec::isotropic(2, 11.0, 64).unwrap();
    let g = sample(gaussian, &spec).unwrap().forward();
    for (idx, c) in g.coefficients().indexed_iter() {
        let l0 = spec.frequency(0, idx[0]);
        let l1 = spec.frequency(1, idx[1]);
        let expected = (-(l0 * l0 + l1 * l1) / 2.0).exp();
        assert!((c - Complex64::new(expected, 0.0)).norm() < 1e-8);
    }
}

#[test]
fn gaussian_l2_norm() {
    let spec = GridSpec::isotropic(1, 10.0, 512).unwrap();
    let g = sample(gaussian, &spec).unwrap();
    assert!((lp_norm(&g, 2.0).unwrap() - PI.powf(0.25)).abs() < 1e-8);
    // ‖e^{-x²/2}‖_∞ = 1
    assert_relative_eq!(lp_norm(&g, f64::INFINITY).unwrap(), 1.0);
}

#[test]
fn indicator_volume_norm() {
    for d in 1..=3 {
        let spec = GridSpec::isotropic(d, 1.0, 8).unwrap();
        let one = sample(|_| 1.0, &spec).unwrap();
        let expected = (d as f64).exp2().powf(1.0 / 1.5);
        assert_relative_eq!(lp_norm(&one, 1.5).unwrap(), expected, max_relative = 1e-14);
    }
}

#[test]
fn sinc_l2_norm_and_spectrum() {
    // √(2/π) sin x / x has ‖·‖_2 = √2 and unit-box spectrum
    let sinc0 = |x: &[f64]| {
        let t = x[0];
        let s = if t.abs() < 1e-8 { 1.0 } else { t.sin() / t };
        (2.0 / PI).sqrt() * s
    };
    let spec = GridSpec::isotropic(1, 200.0, 1 << 14).unwrap();
    let f = sample(sinc0, &spec).unwrap();
    let norm = lp_norm(&f, 2.0).unwrap();
    assert!(
        (norm - 2f64.sqrt()).abs() / 2f64.sqrt() < 0.02,
        "norm {norm}"
    );

    let spectrum = f.forward();
    for (i, c) in spectrum.coefficients().iter().enumerate() {
        let lam = spec.frequency(0, i).abs();
        if lam < 0.9 {
            assert!(
                (c.re - 1.0).abs() < 0.05 && c.im.abs() < 0.05,
                "λ = {lam}: {c}"
            );
        } else if lam > 1.1 {
            assert!(c.norm() < 0.05, "λ = {lam}: {c}");
        }
    }
}

#[test]
fn lp_norm_rejects_small_exponents() {
    let spec = GridSpec::isotropic(1, 1.0, 4).unwrap();
    let f = SampledField::zeros(spec);
    assert!(matches!(
        lp_norm(&f, 1.0),
        Err(Error::InvalidExponent { .. })
    ));
    assert!(lp_norm(&f, 0.5).is_err());
    assert!(lp_norm(&f, f64::NAN).is_err());
    assert_eq!(lp_norm(&f, 3.0).unwrap(), 0.0);
}

#[test]
fn transform_direction_checks() {
    let spec = GridSpec::isotropic(1, 1.0, 8).unwrap();
    let f = Field::Sampled(SampledField::zeros(spec));
    assert!(transform(&f, Direction::Inverse).is_err());
    let spectral = transform(&f, Direction::Forward).unwrap();
    assert!(matches!(spectral, Field::Spectral(_)));
    assert!(transform(&spectral, Direction::Forward).is_err());
}

#[test]
fn tail_estimate_behaviour() {
    let spec = GridSpec::isotropic(1, 12.0, 256).unwrap();
    let g = sample(gaussian, &spec).unwrap();
    let t = tail_estimate(&g, 2.0).unwrap();
    assert!(t.norm_error < 1e-20);

    // 1/x tail: ∫_L^∞ x^{-2} = 1/L on each side
    let spec = GridSpec::isotropic(1, 100.0, 4096).unwrap();
    let f = sample(|x| 1.0 / (1.0 + x[0].abs()), &spec).unwrap();
    let t = tail_estimate(&f, 2.0).unwrap();
    let exact_tail = 2.0 / 101.0;
    assert!((t.mass - exact_tail).abs() / exact_tail < 0.05, "{t:?}");
    assert_eq!(tail_estimate(&f, f64::INFINITY).unwrap().norm_error, 0.0);
}

#[test]
fn field_file_round_trip() {
    let spec = GridSpec::new(vec![2.0, 3.0], vec![4, 6]).unwrap();
    let f = random_field(&spec, 3);
    let mut buf = Vec::new();
    write_field(&mut buf, &f).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(
        text.starts_with("{\"d\":2,\"half_width\":[2.0,3.0],\"samples\":[4,6]}\nindex,re,im\n0,")
    );
    assert!(!text.contains('\r'));
    let back = read_field(buf.as_slice()).unwrap();
    assert_eq!(back, f);
}

#[test]
fn field_file_errors() {
    let bad_header = "{\"d\":1,\"half_width\":[1.0],\"samples\":[2]}\nidx,re,im\n";
    assert!(matches!(
        read_field(bad_header.as_bytes()),
        Err(Error::Format(_))
    ));
    let missing = "{\"d\":1,\"half_width\":[1.0],\"samples\":[2]}\nindex,re,im\n0,1,0\n";
    assert!(matches!(
        read_field(missing.as_bytes()),
        Err(Error::Format(_))
    ));
    let out_of_range =
        "{\"d\":1,\"half_width\":[1.0],\"samples\":[2]}\nindex,re,im\n0,1,0\n5,1,0\n";
    assert!(matches!(
        read_field(out_of_range.as_bytes()),
        Err(Error::Format(_))
    ));
}

fn small_spec() -> impl Strategy<Value = GridSpec> {
    (1usize..=3, 0.5f64..20.0, 1u32..=4).prop_map(|(d, l, e)| {
        let n = match d {
            1 => 8usize << e,
            2 => 2usize << e,
            _ => 2usize << e.min(2),
        };
        GridSpec::isotropic(d, l, n).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_is_identity(spec in small_spec(), seed in any::<u64>()) {
        let f = random_field(&spec, seed);
        let back = f.forward().inverse();
        prop_assert!(rel_diff(&back, &f) < 1e-10);
    }

    #[test]
    fn parseval(spec in small_spec(), seed in any::<u64>()) {
        let f = random_field(&spec, seed);
        let n2 = lp_norm(&f, 2.0).unwrap().powi(2);
        let e = f.forward().energy();
        prop_assert!((n2 - e).abs() / n2 < 1e-10);
    }

    #[test]
    fn transform_is_linear(spec in small_spec(), seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let f = random_field(&spec, seed);
        let g = random_field(&spec, seed.wrapping_add(1));
        let combo = f.scale(alpha).add(&g.scale(beta)).unwrap().forward();
        let (tf, tg) = (f.forward(), g.forward());
        let scale = tf.coefficients().iter().chain(tg.coefficients().iter()).fold(0.0f64, |m, c| m.max(c.norm()));
        for ((c, a), b) in combo.coefficients().iter().zip(tf.coefficients()).zip(tg.coefficients()) {
            prop_assert!((c - (a * alpha + b * beta)).norm() <= 1e-12 * scale * 8.0);
        }
    }

    #[test]
    fn lp_norm_is_a_norm(spec in small_spec(), seed in any::<u64>(), c in -5.0f64..5.0, p in prop_oneof![1.01f64..8.0, Just(f64::INFINITY)]) {
        let f = random_field(&spec, seed);
        let g = random_field(&spec, seed ^ 0x5555);
        let nf = lp_norm(&f, p).unwrap();
        let ng = lp_norm(&g, p).unwrap();
        prop_assert!((lp_norm(&f.scale(c), p).unwrap() - c.abs() * nf).abs() <= 1e-12 * nf.max(1.0) * (1.0 + c.abs()));
        prop_assert!(lp_norm(&f.add(&g).unwrap(), p).unwrap() <= (nf + ng) * (1.0 + 1e-12));
    }
}
