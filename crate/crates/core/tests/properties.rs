use mfc_core::hamiltonian::hamiltonian_pointwise;
use mfc_core::measures::{assignment, assignment_cost, lift, moment, pushforward, wasserstein};
use mfc_core::space_ops::{assemble_generator, build_delay_space, build_vintage_space};
use mfc_core::{EmpiricalMeasure, GeneratorBundle, Metric, Model, Vector, VintageParams};
use proptest::prelude::*;

fn delay() -> GeneratorBundle {
    assemble_generator(build_delay_space(1.0, 6).unwrap(), 0.0).unwrap()
}

fn vintage() -> GeneratorBundle {
    assemble_generator(build_vintage_space(2.0, 7).unwrap(), 0.3).unwrap()
}

fn bundles() -> impl Strategy<Value = GeneratorBundle> {
    prop_oneof![Just(delay()), Just(vintage())]
}

fn atoms(n: usize, dim: usize) -> impl Strategy<Value = Vec<Vector>> {
    prop::collection::vec(prop::collection::vec(-2.0..2.0f64, dim), n)
        .prop_map(|v| v.into_iter().map(Vector::from_vec).collect())
}

fn measure(n: usize, dim: usize) -> impl Strategy<Value = EmpiricalMeasure> {
    atoms(n, dim).prop_map(|a| EmpiricalMeasure::new(a).unwrap())
}

fn metric() -> impl Strategy<Value = Metric> {
    prop_oneof![Just(Metric::Strong), Just(Metric::Dual)]
}

fn all_perms(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_perms(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assignment_matches_enumeration(n in 1usize..6, vals in prop::collection::vec(0.0..10.0f64, 36)) {
        let cost = mfc_core::Matrix::from_fn(n, n, |i, j| vals[i * 6 + j]);
        let perm = assignment(&cost);
        let best = all_perms(n)
            .iter()
            .map(|p| assignment_cost(&cost, p))
            .fold(f64::INFINITY, f64::min);
        prop_assert!((assignment_cost(&cost, &perm) - best).abs() <= 1e-12 * (1.0 + best));
    }

    #[test]
    fn wasserstein_triangle(
        b in bundles(),
        (mu, nu, rho) in (1usize..5).prop_flat_map(|n| (measure(n, 7), measure(n, 7), measure(n, 7))),
        r in prop_oneof![Just(1.0), Just(1.5), Just(2.0)],
        m in metric(),
    ) {
        let ab = wasserstein(&b, &mu, &nu, r, m).unwrap();
        let bc = wasserstein(&b, &nu, &rho, r, m).unwrap();
        let ac = wasserstein(&b, &mu, &rho, r, m).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12 * (1.0 + ab + bc));
        prop_assert!((ab - wasserstein(&b, &nu, &mu, r, m).unwrap()).abs() <= 1e-12 * (1.0 + ab));
        prop_assert_eq!(wasserstein(&b, &mu, &mu, r, m).unwrap(), 0.0);
    }

    #[test]
    fn distance_to_origin_is_moment(b in bundles(), mu in (1usize..6).prop_flat_map(|n| measure(n, 7)), m in metric()) {
        let zero = EmpiricalMeasure::dirac(Vector::zeros(7)).replicate(mu.len());
        for r in [1.0, 2.0] {
            let w = wasserstein(&b, &mu, &zero, r, m).unwrap();
            let mo = moment(&b, &mu, r, m).unwrap();
            prop_assert!((w - mo).abs() <= 1e-12 * (1.0 + mo));
        }
    }

    #[test]
    fn dual_metric_is_weaker(b in bundles(), (mu, nu) in (1usize..5).prop_flat_map(|n| (measure(n, 7), measure(n, 7)))) {
        let k = b.a_inv_norm();
        let strong = wasserstein(&b, &mu, &nu, 2.0, Metric::Strong).unwrap();
        let dual = wasserstein(&b, &mu, &nu, 2.0, Metric::Dual).unwrap();
        prop_assert!(dual <= k * strong * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn dual_norm_of_generator_image(b in bundles(), x in prop::collection::vec(-2.0..2.0f64, 7)) {
        let x = Vector::from_vec(x);
        let ax = &b.a * &x;
        let lhs = b.dual_norm(&ax).unwrap();
        let rhs = b.norm(&x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs));
    }

    #[test]
    fn lift_pushforward_round_trip(a in (1usize..6).prop_flat_map(|n| atoms(n, 7))) {
        let x = lift(&a).unwrap();
        let back = pushforward(&x);
        prop_assert_eq!(back.atoms(), a.as_slice());
        let mean = EmpiricalMeasure::new(a).unwrap().mean();
        prop_assert!((x.expectation() - mean).amax() <= 1e-13);
    }

    #[test]
    fn hamiltonian_is_concave_in_costate(
        seed in any::<[u8; 3]>(),
        vintage_model in any::<bool>(),
        t in 0.0..1.0f64,
    ) {
        let model = if vintage_model {
            Model::Vintage(VintageParams { grid_m: 6, ..VintageParams::default() })
        } else {
            Model::Advertising(mfc_core::AdvertisingParams { grid_m: 6, ..Default::default() })
        };
        let (sys, cost, _) = model.build().unwrap();
        let dim = sys.dim();
        let f = |k: usize, s: u8| ((k as f64 + 1.0) * (s as f64 + 1.0) * 0.37).sin();
        let x = Vector::from_fn(dim, |k, _| f(k, seed[0]));
        let p1 = Vector::from_fn(dim, |k, _| 2.0 * f(k + 3, seed[1]));
        let p2 = Vector::from_fn(dim, |k, _| 2.0 * f(k + 5, seed[2]));
        let pm = &p1 * t + &p2 * (1.0 - t);
        let h = |p: &Vector| hamiltonian_pointwise(&x, &x, p, &sys, &cost).unwrap().0;
        let chord = t * h(&p1) + (1.0 - t) * h(&p2);
        prop_assert!(h(&pm) >= chord - 1e-9 * (1.0 + chord.abs()));
    }
}
