use dirint::measure::{
    integrate_change_of_variables, marginal_onto_t, pushforward, pushforward_volume_derivative,
    DensityFn,
};
use dirint::rng;
use dirint::testing::random_map;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn change_of_variables(seed in any::<u64>(), n_s in 1usize..40, n_t in 1usize..40) {
        let mut r = rng::keyed(seed, 1, 0);
        let psi = random_map(&mut r, n_s, n_t, false);
        let f = DensityFn::new((0..n_t).map(|_| r.random_range(-5.0..5.0)).collect());
        let (lhs, rhs) =
            integrate_change_of_variables(&f, &psi, psi.source(), psi.target()).unwrap();
        let scale: f64 = (0..n_s).map(|s| psi.source().weight(s) * f.get(psi.image(s)).abs()).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn pushforward_mass_is_preserved(seed in any::<u64>(), n_s in 1usize..30, n_t in 1usize..30) {
        let mut r = rng::keyed(seed, 2, 0);
        let psi = random_map(&mut r, n_s, n_t, false);
        let pushed = pushforward(&psi, psi.source()).unwrap();
        prop_assert!((pushed.total_mass() - psi.source().total_mass()).abs() < 1e-12 * psi.source().total_mass());
        let jac = pushforward_volume_derivative(&psi, psi.source(), psi.target()).unwrap();
        for t in 0..n_t {
            let id = psi.target().id(t);
            let mass = pushed.index_of(id).map_or(0.0, |i| pushed.weight(i));
            prop_assert!((jac.get(t) * psi.target().weight(t) - mass).abs() < 1e-12 * mass.max(1.0));
        }
        let rel = dirint::measure::graph_relation(&psi, psi.source()).unwrap();
        prop_assert_eq!(marginal_onto_t(&rel), pushed);
    }
}
