//! Hyperbolic-cross counts against exhaustive enumeration, and rank
//! bounds against measured ranks of synthetic coefficient tensors whose
//! support is exactly the cross.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treetensor::rates::{dyadic_dim, dyadic_level, hc_rank_envelope};
use treetensor::{hc_alpha_rank_bound, hc_cardinality, numerical_rank, FullTensor};

/// Counts admissible index tuples directly, one mode at a time.
fn enumerate(d: usize, level: usize) -> u128 {
    fn go(modes_left: usize, budget: usize) -> u128 {
        if modes_left == 0 {
            return 1;
        }
        let mut total = 0u128;
        for i in 0..dyadic_dim(budget) {
            total += go(modes_left - 1, budget - dyadic_level(i));
        }
        total
    }
    go(d, level)
}

#[test]
fn closed_form_counts_match_exhaustive_enumeration() {
    for d in 1..=5 {
        for level in 0..=10 {
            assert_eq!(
                hc_cardinality(d, level).unwrap(),
                enumerate(d, level),
                "d {d} level {level}"
            );
        }
    }
}

/// Random coefficients supported exactly on the level-`level` cross.
fn cross_tensor(d: usize, level: usize, seed: u64) -> FullTensor {
    let n = dyadic_dim(level);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FullTensor::from_fn(vec![n; d], |idx| {
        let total: usize = idx.iter().map(|&i| dyadic_level(i)).sum();
        if total <= level {
            rng.gen_range(0.2..1.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 }
        } else {
            0.0
        }
    })
    .unwrap()
}

/// Nonempty mode subsets containing mode 1; each stands for the pair
/// (subset, complement), whose unfoldings share their rank.
fn half_subsets(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0..(1usize << (d - 1)) {
        let mut alpha = vec![1usize];
        for m in 0..d - 1 {
            if mask & (1 << m) != 0 {
                alpha.push(m + 2);
            }
        }
        if alpha.len() < d {
            out.push(alpha);
        }
    }
    out
}

#[test]
fn rank_bounds_dominate_measured_unfolding_ranks() {
    for (d, level, seed) in [(3usize, 4usize, 1u64), (4, 3, 2)] {
        let t = cross_tensor(d, level, seed);
        for alpha in half_subsets(d) {
            let complement: Vec<usize> =
                (1..=d).filter(|m| !alpha.contains(m)).collect();
            let sigma = t.matricize(&alpha).unwrap().singular_values().unwrap();
            let measured = numerical_rank(&sigma) as u128;
            let direct = hc_alpha_rank_bound(d, level, &alpha).unwrap();
            let via_complement = hc_alpha_rank_bound(d, level, &complement).unwrap();
            assert!(
                measured <= direct && measured <= via_complement,
                "d {d} level {level} alpha {alpha:?}: rank {measured} vs bounds {direct}/{via_complement}"
            );
        }
    }
}

#[test]
fn rank_bound_growth_stays_inside_the_envelope() {
    for level in 4..=16 {
        let bound = hc_alpha_rank_bound(4, level, &[1, 2]).unwrap() as f64;
        let envelope = hc_rank_envelope(2, level);
        let ratio = bound / envelope;
        assert!(
            (0.25..=4.0).contains(&ratio),
            "level {level}: bound {bound} vs envelope {envelope} (ratio {ratio})"
        );
    }
}
