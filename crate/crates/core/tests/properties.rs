use approx::assert_relative_eq;
use proptest::prelude::*;
use stable_superprocess::kernel::{
    density, density_derivative, density_derivative_with, semigroup_at, KernelMethod, MultiIndex, StableParams,
};
use stable_superprocess::measures::{
    fourier_transform, moment_functional, theorem_prediction, FiniteMeasure, Tabulation, Tail, TestFunction,
};

fn params(alpha: f64, dim: usize) -> StableParams {
    StableParams::new(alpha, dim).unwrap()
}

fn alpha_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(1.5), Just(2.0), 0.6..2.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn density_scaling(alpha in alpha_strategy(), t in 0.2..5.0f64, x in -4.0..4.0f64, order in 0u32..3) {
        let p = params(alpha, 1);
        let k = MultiIndex::new(vec![order]);
        let direct = density_derivative(&p, &k, t, &[x]).unwrap();
        let rescaled = t.powf(-(1.0 + order as f64) / alpha)
            * density_derivative(&p, &k, 1.0, &[x * t.powf(-1.0 / alpha)]).unwrap();
        prop_assert!((direct - rescaled).abs() <= 1e-7 * direct.abs().max(1e-3));
    }

    #[test]
    fn prediction_is_linear_in_winf(winf in 0.0..5.0f64, scale in -3.0..3.0f64, t in 1.0..50.0f64, order in 0u32..5) {
        let p = params(1.5, 1);
        let f = TestFunction::standard_gaussian(1);
        let base = theorem_prediction(&f, &p, t, order, winf).unwrap();
        let scaled = theorem_prediction(&f, &p, t, order, scale * winf).unwrap();
        prop_assert!((scaled - scale * base).abs() <= 1e-12 * base.abs().max(1e-300) * (1.0 + scale.abs()));
    }

    #[test]
    fn odd_orders_add_nothing(alpha in alpha_strategy(), t in 1.0..50.0f64, even in 0u32..3, center in -1.0..1.0f64) {
        let p = params(alpha, 1);
        let f = TestFunction::gaussian(vec![center], 1.3, 0.7).unwrap();
        let order = 2 * even;
        let at_even = theorem_prediction(&f, &p, t, order, 1.0).unwrap();
        let at_odd = theorem_prediction(&f, &p, t, order + 1, 1.0).unwrap();
        prop_assert_eq!(at_even, at_odd);
    }
}

/// Central difference of `∂^k p_t` along `axis`.
fn central_difference(p: &StableParams, k: &MultiIndex, t: f64, x: &[f64], axis: usize) -> f64 {
    let h = 1e-3;
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    plus[axis] += h;
    minus[axis] -= h;
    (density_derivative(p, k, t, &plus).unwrap() - density_derivative(p, k, t, &minus).unwrap()) / (2.0 * h)
}

#[test]
fn derivatives_match_finite_differences() {
    for alpha in [1.0, 1.5, 2.0] {
        for dim in [1, 2] {
            let p = params(alpha, dim);
            let x: Vec<f64> = [0.7, -0.4][..dim].to_vec();
            for axis in 0..dim {
                for base in [vec![0u32; dim], {
                    let mut k = vec![0u32; dim];
                    k[axis] = 1;
                    k
                }] {
                    let mut raised = base.clone();
                    raised[axis] += 1;
                    let exact = density_derivative(&p, &MultiIndex::new(raised), 1.0, &x).unwrap();
                    let approx = central_difference(&p, &MultiIndex::new(base), 1.0, &x, axis);
                    assert!(
                        (exact - approx).abs() <= 1e-4 * exact.abs().max(1e-2),
                        "alpha {alpha} dim {dim} axis {axis}: {exact} vs {approx}"
                    );
                }
            }
        }
    }
}

#[test]
fn semigroup_property() {
    for alpha in [1.0, 1.5, 2.0] {
        let p = params(alpha, 1);
        let snapshot = TestFunction::snapshot(p, 0.5).unwrap();
        for x in [0.0, 0.8, -2.5] {
            // T_s p_{0.5} = p_{s+0.5}, and T_{s+r} = T_s T_r through snapshots
            let composed = semigroup_at(&p, &snapshot, 1.2, &[x]).unwrap().value;
            let inverted = density_derivative_with(&p, &MultiIndex::zero(1), 1.7, &[x], KernelMethod::Quadrature)
                .unwrap()
                .value;
            assert_relative_eq!(composed, inverted, max_relative = 1e-8);
        }
    }
}

#[test]
fn semigroup_preserves_mass_and_positivity() {
    let p = params(1.5, 1);
    let f = TestFunction::standard_gaussian(1);
    let h = 0.05;
    let values: Vec<f64> = (-2000..=2000)
        .map(|i| semigroup_at(&p, &f, 0.8, &[i as f64 * h]).unwrap().value)
        .collect();
    assert!(values.iter().all(|&v| v > 0.0));
    let mass: f64 = values.iter().sum::<f64>() * h;
    // tail beyond |x| = 100 carries ~ c/100^1.5 of the mass
    assert!((mass - std::f64::consts::PI.sqrt()).abs() < 2e-3, "{mass}");
}

#[test]
fn moment_functionals_match_quadrature() {
    let f = TestFunction::gaussian(vec![0.3], 1.7, 1.2).unwrap();
    let h = 1e-3;
    for order in 0..5u32 {
        let k = MultiIndex::new(vec![order]);
        let factorial: f64 = (1..=order).map(f64::from).product();
        let quadrature: f64 = (-10_000..=10_000)
            .map(|i| {
                let y = i as f64 * h;
                f.eval(&[y]) * y.powi(order as i32)
            })
            .sum::<f64>()
            * h
            / factorial;
        let analytic = moment_functional(&f, &k).unwrap();
        assert!(
            (analytic - quadrature).abs() <= 1e-6 * analytic.abs().max(1e-3),
            "order {order}"
        );
    }
}

#[test]
fn tabulated_gaussian_transform_matches_analytic() {
    let f = TestFunction::standard_gaussian(1);
    let h = 0.01;
    let n = 1601;
    let origin = -8.0;
    let values: Vec<f64> = (0..n).map(|i| f.eval(&[origin + i as f64 * h])).collect();
    let table =
        TestFunction::Tabulated(Tabulation::new(vec![origin], vec![h], vec![n], values, Tail::CompactSupport).unwrap());
    for theta in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let analytic = fourier_transform(&f, &[theta]).unwrap();
        let discrete = fourier_transform(&table, &[theta]).unwrap();
        assert!((analytic - discrete).norm() < 1e-9, "theta {theta}");
    }
    let zero = MultiIndex::new(vec![2]);
    assert!((moment_functional(&table, &zero).unwrap() - moment_functional(&f, &zero).unwrap()).abs() < 1e-9);
}

#[test]
fn density_integrates_to_one() {
    let p = params(2.0, 2);
    let h = 0.1;
    let mass: f64 = (-120..=120)
        .flat_map(|i| (-120..=120).map(move |j| (i, j)))
        .map(|(i, j)| density(&p, 1.0, &[i as f64 * h, j as f64 * h]).unwrap())
        .sum::<f64>()
        * h
        * h;
    assert_relative_eq!(mass, 1.0, max_relative = 1e-9);
    let m = FiniteMeasure::parse("0 0 : 0.5; 1 -1 : 0.25", 2).unwrap();
    assert_relative_eq!(m.total_mass(), 0.75);
}
