use std::sync::Arc;

use proptest::prelude::*;
use sdred::objectives::L1Norm;
use sdred::priors::{
    density_ratio_to_epsilon, map_denoiser_1d, perturb_prior, proximal_prior, verify_theorem3_1d,
    GaussianMapDenoiser, LogConcaveDensity1D, PerturbationMode, Prior,
};
use sdred::Tensor;

fn reals(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

fn mode() -> impl Strategy<Value = PerturbationMode> {
    prop_oneof![Just(PerturbationMode::FixedDirection), Just(PerturbationMode::InputHashed)]
}

proptest! {
    #[test]
    fn perturbation_has_exact_size(x in reals(10), eps in 0.0f64..1.0, sigma in 0.1f64..5.0, m in mode()) {
        let base: Arc<dyn Prior> = Arc::new(proximal_prior(Arc::new(L1Norm::new(0.3).unwrap())));
        let dhat = perturb_prior(base.clone(), eps, m).unwrap();
        let x = Tensor::vector(x);
        let gap = dhat.apply(&x, sigma).unwrap().distance(&base.apply(&x, sigma).unwrap()).unwrap();
        prop_assert!((gap - sigma * eps).abs() <= 1e-12 * (1.0 + sigma * eps));
    }

    #[test]
    fn gaussian_denoiser_lipschitz(
        a in reals(8), b in reals(8), mean in reals(8),
        var in prop::collection::vec(0.01f64..4.0, 8), sigma in 0.1f64..3.0,
    ) {
        let d = GaussianMapDenoiser::new(Tensor::vector(mean), Tensor::vector(var)).unwrap();
        let (a, b) = (Tensor::vector(a), Tensor::vector(b));
        let lhs = d.apply(&a, sigma).unwrap().distance(&d.apply(&b, sigma).unwrap()).unwrap();
        prop_assert!(d.lipschitz(sigma) < 1.0);
        prop_assert!(lhs <= d.lipschitz(sigma) * a.distance(&b).unwrap() + 1e-12);
    }

    #[test]
    fn scalar_map_denoiser_is_monotone(z1 in -4.0f64..4.0, z2 in -4.0f64..4.0, sigma in 0.3f64..2.0, delta in 0.0f64..1.5) {
        let d = LogConcaveDensity1D::with_nodes(move |x: f64| x * x + delta * x.cos(), -10.0, 10.0, 1025).unwrap();
        let (lo, hi) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
        let (a, b) = (map_denoiser_1d(&d, sigma, lo).unwrap(), map_denoiser_1d(&d, sigma, hi).unwrap());
        prop_assert!(a <= b + 1e-10);
        // Firmly nonexpansive in 1-D: 0 <= D(z2) - D(z1) <= z2 - z1.
        prop_assert!(b - a <= hi - lo + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn density_ratio_bound_holds(delta in 0.0f64..0.01, sigma in 0.3f64..2.5) {
        let h = LogConcaveDensity1D::with_nodes(|x| x * x, -8.0, 8.0, 2049).unwrap();
        let hhat = LogConcaveDensity1D::with_nodes(move |x: f64| x * x + delta * x.sin(), -8.0, 8.0, 2049).unwrap();
        let grid: Vec<f64> = (0..41).map(|i| -4.0 + 0.2 * i as f64).collect();
        let report = verify_theorem3_1d(&h, &hhat, sigma, &grid).unwrap();
        prop_assert!(report.pass, "{report:?}");
        prop_assert!(report.epsilon == density_ratio_to_epsilon(report.log_gap).unwrap());
    }
}
