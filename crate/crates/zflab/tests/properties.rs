//! Property-based checks of the algebraic identities.

use proptest::prelude::*;
use zflab::combinatorics::{contraction_count, enumerate_contractions, s_sigma, Permutation};
use zflab::config::Config;
use zflab::formfactors::{t_m, t_m_pairings, t_m_real};
use zflab::scattering::ScatteringFunction;
use zflab::C;

fn perm(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n).collect::<Vec<usize>>()).prop_shuffle().prop_map(|v| Permutation::new(v).unwrap())
}

fn perm_pair() -> impl Strategy<Value = (Permutation, Permutation)> {
    (1usize..=6).prop_flat_map(|n| (perm(n), perm(n)))
}

fn s_any() -> impl Strategy<Value = ScatteringFunction> {
    prop_oneof![
        Just(ScatteringFunction::free()),
        Just(ScatteringFunction::ising()),
        (0.05f64..2.0).prop_map(|a| ScatteringFunction::exponential(a).unwrap()),
        (0.05f64..2.0).prop_map(|a| ScatteringFunction::signed_exponential(a).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sign_is_multiplicative((p, q) in perm_pair()) {
        prop_assert_eq!(p.compose(&q).sign(), p.sign() * q.sign());
        prop_assert_eq!(p.compose(&p.inverse()), Permutation::identity(p.len()));
        prop_assert_eq!(p.sign() == 1, p.inversions().len() % 2 == 0);
    }

    #[test]
    fn composition_law((p, q) in perm_pair(), s in s_any(), seed in any::<u64>()) {
        let n = p.len();
        let theta: Vec<C> = (0..n).map(|i| C::new(((seed >> (i * 8)) & 0xff) as f64 / 64.0 - 2.0, 0.0)).collect();
        let lhs = s_sigma(&s, &p.compose(&q), &theta).unwrap();
        let rhs = s_sigma(&s, &p, &theta).unwrap() * s_sigma(&s, &q, &p.apply(&theta)).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn scattering_relations(s in s_any(), x in -4.0f64..4.0, y in -1.0f64..1.0) {
        let z = C::new(x, y);
        let v = s.eval(z).unwrap();
        // unitarity/hermiticity and crossing
        prop_assert!((v * s.eval(-z).unwrap() - 1.0).norm() < 1e-12);
        prop_assert!((s.eval(C::new(x, 0.0)).unwrap().norm() - 1.0).abs() < 1e-12);
        let crossed = s.eval(C::new(0.0, std::f64::consts::PI) - z).unwrap();
        prop_assert!((crossed - v).norm() < 1e-10 * v.norm().max(1.0));
    }

    #[test]
    fn contraction_count_formula(m in 0usize..5, n in 0usize..5) {
        let all = enumerate_contractions(m, n);
        prop_assert_eq!(all.len() as u128, contraction_count(m, n));
        prop_assert_eq!(contraction_count(m, n), contraction_count(n, m));
    }

    #[test]
    fn t_m_is_antisymmetric_and_bounded(theta in prop::collection::vec(-6.0f64..6.0, 2..8), i in 0usize..8, j in 0usize..8) {
        let m = theta.len();
        let (i, j) = (i % m, j % m);
        prop_assume!(i != j);
        let mut swapped = theta.clone();
        swapped.swap(i, j);
        let a = t_m_real(&theta);
        prop_assert!((a + t_m_real(&swapped)).abs() < 1e-12);
        prop_assert!(a.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn pfaffian_matches_pairings(re in prop::collection::vec(-2.0f64..2.0, 1..7), im in prop::collection::vec(-0.5f64..0.5, 7)) {
        let z: Vec<C> = re.iter().zip(&im).map(|(&a, &b)| C::new(a, b)).collect();
        let fast = t_m(&z).unwrap();
        let slow = t_m_pairings(&z);
        prop_assert!((fast - slow).norm() < 1e-10 * slow.norm().max(1.0));
    }

    #[test]
    fn config_accepts_what_it_echoes(seed in any::<u64>(), pts in 2usize..40, nmax in 0usize..=6) {
        let mut c = Config::default();
        c.set("run.seed", &seed.to_string()).unwrap();
        c.set("grid.points", &pts.to_string()).unwrap();
        c.set("fock.nmax", &nmax.to_string()).unwrap();
        prop_assert!(c.validate().is_ok());
        let echo = c.echo();
        prop_assert_eq!(&echo["seed"], &seed.to_string());
        prop_assert_eq!(&echo["grid_points"], &pts.to_string());
    }
}
