use eitsim::fits::{
    bootstrap_uncertainty, eval_model, fit_curve, fit_uncertainty, linear_least_squares,
    ModelShape,
};
use eitsim::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn truth(shape: ModelShape) -> (Vec<f64>, Vec<f64>) {
    match shape {
        ModelShape::LorentzianDip => (
            vec![1.0, 0.4, 120.0, 1500.0],
            (0..81).map(|k| -6000.0 + 150.0 * k as f64).collect(),
        ),
        ModelShape::Cusp => (
            vec![0.8, 1.0 / 7.2e-6, 5e3],
            (0..101).map(|k| -1e6 + 2e4 * k as f64).collect(),
        ),
        ModelShape::Linear => (
            vec![2.1e3, 33.3e3],
            (0..12).map(|k| 1.5 + 2.1 * k as f64).collect(),
        ),
        ModelShape::Saturation => (
            vec![0.7, 4.0],
            (0..15).map(|k| 0.5 + 1.8 * k as f64).collect(),
        ),
        ModelShape::ExpDecay => (
            vec![1.0, 95e-6],
            (0..12).map(|k| 20e-6 * k as f64).collect(),
        ),
    }
}

fn sample(shape: ModelShape, p: &[f64], x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| eval_model(shape, p, v).unwrap()).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn noiseless_recovery_from_auto_init() {
    for shape in ModelShape::ALL {
        let (p, x) = truth(shape);
        let y = sample(shape, &p, &x);
        let fit = fit_curve(shape, &x, &y, None).unwrap();
        for (got, want) in fit.params.iter().zip(&p) {
            assert!(rel(*got, *want) < 1e-6, "{shape:?}: {got} vs {want}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noiseless_recovery_from_perturbed_init(
        shape_idx in 0usize..5,
        factors in prop::collection::vec(0.5f64..1.5, 4),
    ) {
        let shape = ModelShape::ALL[shape_idx];
        let (p, x) = truth(shape);
        let y = sample(shape, &p, &x);
        let init: Vec<f64> = p.iter().zip(&factors).map(|(v, f)| v * f).collect();
        let fit = fit_curve(shape, &x, &y, Some(&init)).unwrap();
        for (got, want) in fit.params.iter().zip(&p) {
            prop_assert!(rel(*got, *want) < 1e-6, "{:?}: {} vs {}", shape, got, want);
        }
        prop_assert!(fit.cost_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(fit.sigmas.iter().all(|s| *s >= 0.0));
    }

    #[test]
    fn linear_agrees_with_closed_form(
        slope in -1e3f64..1e3,
        intercept in -1e3f64..1e3,
        noise in prop::collection::vec(-1.0f64..1.0, 20),
    ) {
        let x: Vec<f64> = (0..20).map(|k| k as f64 * 0.7 - 3.0).collect();
        let y: Vec<f64> = x.iter().zip(&noise).map(|(v, n)| slope * v + intercept + n).collect();
        let (m, b) = linear_least_squares(&x, &y);
        let fit = fit_curve(ModelShape::Linear, &x, &y, None).unwrap();
        prop_assert!((fit.params[0] - m).abs() <= 1e-12 * m.abs().max(1.0));
        prop_assert!((fit.params[1] - b).abs() <= 1e-12 * b.abs().max(1.0));
    }
}

#[test]
fn linear_intercept_from_synthetic_linewidths() {
    let x: Vec<f64> = (0..8).map(|k| 1.5 + 3.3 * k as f64).collect();
    let y: Vec<f64> = x.iter().map(|i| 33.3e3 + 95.0 * i).collect();
    let fit = fit_curve(ModelShape::Linear, &x, &y, None).unwrap();
    assert!(rel(fit.param("intercept").unwrap(), 33.3e3) < 1e-6);
}

#[test]
fn noisy_cusp_recovers_transit_time() {
    let w = 1.0 / 7.2e-6;
    let x: Vec<f64> = (0..201).map(|k| -1e6 + 1e4 * k as f64).collect();
    let noise = Normal::new(0.0, 0.01).unwrap();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = x
            .iter()
            .map(|v| (-(v.abs()) / w).exp() + noise.sample(&mut rng))
            .collect();
        let fit = fit_curve(ModelShape::Cusp, &x, &y, None).unwrap();
        let t_tt = 1.0 / fit.param("width").unwrap();
        assert!(rel(t_tt, 7.2e-6) < 0.03, "seed {seed}: {t_tt}");
    }
}

#[test]
fn noisy_decay_recovers_lifetime() {
    // 5% multiplicative noise, 12 samples over two lifetimes
    let tau = 95e-6;
    let x: Vec<f64> = (0..12).map(|k| 2.0 * tau * k as f64 / 11.0).collect();
    let noise = Normal::new(0.0, 0.05).unwrap();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = x
            .iter()
            .map(|t| (-t / tau).exp() * (1.0 + noise.sample(&mut rng)))
            .collect();
        let fit = fit_curve(ModelShape::ExpDecay, &x, &y, None).unwrap();
        assert!(rel(fit.param("tau").unwrap(), tau) < 0.10, "seed {seed}");
    }
}

fn noisy_line(seed: u64, amplitude: f64, x: &[f64]) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, amplitude).unwrap();
    x.iter().map(|v| 3.0 * v + 1.0 + noise.sample(&mut rng)).collect()
}

#[test]
fn sigma_scales_with_noise_amplitude() {
    let x: Vec<f64> = (0..30).map(|k| k as f64 * 0.1).collect();
    let mean_sigma = |amp: f64| -> f64 {
        (0..100)
            .map(|seed| {
                let y = noisy_line(seed, amp, &x);
                fit_curve(ModelShape::Linear, &x, &y, None).unwrap().sigmas[0]
            })
            .sum::<f64>()
            / 100.0
    };
    let ratio = mean_sigma(0.2) / mean_sigma(0.1);
    assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn duplicated_data_shrinks_sigma() {
    let x: Vec<f64> = (0..30).map(|k| k as f64 * 0.1).collect();
    let y = noisy_line(7, 0.1, &x);
    let single = fit_curve(ModelShape::Linear, &x, &y, None).unwrap();
    let x2: Vec<f64> = x.iter().chain(&x).copied().collect();
    let y2: Vec<f64> = y.iter().chain(&y).copied().collect();
    let double = fit_curve(ModelShape::Linear, &x2, &y2, None).unwrap();
    for k in 0..2 {
        let r = double.sigmas[k] / single.sigmas[k];
        assert!((r - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.03, "ratio {r}");
    }
}

#[test]
fn noiseless_sigma_is_negligible() {
    for shape in ModelShape::ALL {
        let (p, x) = truth(shape);
        let y = sample(shape, &p, &x);
        let fit = fit_curve(shape, &x, &y, None).unwrap();
        for (s, v) in fit_uncertainty(&fit, &x, &y).iter().zip(&p) {
            assert!(*s <= 1e-8 * v.abs(), "{shape:?}: σ {s} for {v}");
        }
    }
}

#[test]
fn bootstrap_agrees_with_curvature() {
    let x: Vec<f64> = (0..40).map(|k| k as f64 * 0.1).collect();
    let y = noisy_line(11, 0.1, &x);
    let fit = fit_curve(ModelShape::Linear, &x, &y, None).unwrap();
    let boot = bootstrap_uncertainty(&fit, &x, &y, 400, 3).unwrap();
    for (k, (b, s)) in boot.iter().zip(&fit.sigmas).enumerate() {
        let r = b / s;
        assert!((0.7..1.3).contains(&r), "param {k}: ratio {r}");
    }
    assert_eq!(boot, bootstrap_uncertainty(&fit, &x, &y, 400, 3).unwrap());
}

#[test]
fn degenerate_lorentzian_names_parameter() {
    // a flat line carries no information on width or center
    let x: Vec<f64> = (0..20).map(|k| k as f64).collect();
    let y = vec![1.0; 20];
    match fit_curve(ModelShape::LorentzianDip, &x, &y, Some(&[1.0, 0.0, 10.0, 2.0])) {
        Err(Error::SingularFit { param }) => {
            assert!(["center", "fwhm"].contains(&param), "{param}")
        }
        other => panic!("{other:?}"),
    }
}
