use agsplab::chebyshev::{chebyshev_t, chebyshev_t_product, chebyshev_t_recurrence};
use agsplab::combinatorics::{constrained_product_max, constrained_tuple_count, halving_factors, per_layer_count};
use agsplab::linalg::{random_state, CVec};
use agsplab::mps::to_mps;
use agsplab::params::{q_condition_lhs, solve_q};
use agsplab::rng::substream;
use agsplab::schmidt::{best_rank_r_overlap, entropy_of, schmidt_decompose, truncate, Cut};
use approx::assert_relative_eq;
use num_bigint::BigUint;
use proptest::prelude::*;

fn state(n: usize, d: usize, seed: u64) -> CVec {
    random_state(d.pow(n as u32), &mut substream(seed, "properties"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schmidt_values_are_a_normalized_descending_spectrum(n in 2usize..7, seed in any::<u64>(), pos in 1usize..6) {
        let pos = 1 + pos % (n - 1);
        let psi = state(n, 2, seed);
        let dec = schmidt_decompose(&psi, Cut::new(n, 2, pos).unwrap()).unwrap();
        let mass: f64 = dec.values.iter().map(|v| v * v).sum();
        prop_assert!((mass - 1.0).abs() < 1e-10);
        prop_assert!(dec.values.windows(2).all(|w| w[0] >= w[1] - 1e-14));
        prop_assert!(dec.entropy >= -1e-12);
        prop_assert!(dec.entropy <= (dec.values.len() as f64).log2() + 1e-10);
        prop_assert!((entropy_of(&dec.values) - dec.entropy).abs() < 1e-12);
    }

    #[test]
    fn truncation_overlap_matches_kept_mass(seed in any::<u64>(), r in 1usize..8) {
        let psi = state(6, 2, seed);
        let cut = Cut::new(6, 2, 3).unwrap();
        let dec = schmidt_decompose(&psi, cut).unwrap();
        let (t, norm) = truncate(&psi, cut, r).unwrap();
        let overlap = psi.dotc(&t).norm() / norm;
        prop_assert!((overlap - best_rank_r_overlap(&dec, r)).abs() < 1e-10);
        prop_assert!((1.0 - norm * norm - dec.tail_mass(r)).abs() < 1e-10);
    }

    #[test]
    fn mps_error_is_the_discarded_mass_at_one_cut(seed in any::<u64>(), k in 1usize..4) {
        let psi = state(4, 2, seed);
        let mps = to_mps(&psi, 4, 2, k).unwrap();
        let approx = mps.contract();
        prop_assert!(mps.bond_dims.iter().all(|&b| b <= k));
        let err = (&psi - &approx).norm_squared();
        prop_assert!(err <= 2.0 * mps.discarded_total() + 1e-10);
        if k >= 4 {
            prop_assert!(err < 1e-20);
        }
    }

    #[test]
    fn chebyshev_forms_agree(n in 0usize..40, x in -1.5f64..1.5) {
        let a = chebyshev_t(n, x);
        let b = chebyshev_t_recurrence(n, x);
        let scale = a.abs().max(1.0);
        prop_assert!((a - b).abs() <= 1e-9 * scale);
        if n > 0 {
            prop_assert!((chebyshev_t_product(n, x) - a).abs() <= 1e-8 * scale);
        }
        if x.abs() <= 1.0 {
            prop_assert!(a.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn halving_product_matches_its_factors(j in 2u64..100_000) {
        let f = halving_factors(j);
        prop_assert_eq!(f.last().copied(), Some(2));
        let product: BigUint = f.iter().map(|&x| BigUint::from(x)).product();
        prop_assert_eq!(per_layer_count(j), product * BigUint::from(4 * (j + 1)));
    }

    #[test]
    fn constrained_maximum_beats_balanced_split(ell in 1usize..5, budget in 0u32..12) {
        let (max, arg) = constrained_product_max(ell, budget).unwrap();
        prop_assert_eq!(arg.len(), ell);
        prop_assert!(arg.iter().sum::<u32>() <= budget);
        let prod: u64 = arg.iter().map(|&a| a as u64 + 1).product();
        prop_assert_eq!(prod, max);
        let base = (budget as u64 / ell as u64) + 1;
        prop_assert!(max >= base.pow(ell as u32));
        prop_assert!(constrained_tuple_count(ell, budget) >= 1);
    }

    #[test]
    fn solve_q_is_minimal(x in 0.5f64..2048.0) {
        let q = solve_q(x).unwrap();
        let target = -(80f64.log2());
        prop_assert!(q_condition_lhs(x, q) <= target);
        prop_assert!(q == 1 || q_condition_lhs(x, q - 1) > target);
    }
}

#[test]
fn haar_states_have_near_maximal_entropy() {
    let mut total = 0.0;
    for seed in 0..50 {
        let psi = state(8, 2, seed);
        total += schmidt_decompose(&psi, Cut::new(8, 2, 4).unwrap()).unwrap().entropy;
    }
    // Page's value for a 16 × 16 split is about 3.28 bits.
    assert_relative_eq!(total / 50.0, 3.28, epsilon = 0.1);
}
