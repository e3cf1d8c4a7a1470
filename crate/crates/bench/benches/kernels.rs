use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treetensor::{
    encode_network, hc_cardinality, project_to_tree, rank_schedule, registry_spec, width_profile,
    BasisKind, DimensionTree, FullTensor, RankAssignment,
};

fn random_tensor(shape: Vec<usize>, seed: u64) -> FullTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FullTensor::random_normal(shape, &mut rng).unwrap()
}

fn unfolding_svd(c: &mut Criterion) {
    for n in [6usize, 8] {
        let t = random_tensor(vec![n; 4], 7);
        c.bench_function(&format!("unfolding_svd d=4 n={n}"), |b| {
            b.iter(|| {
                let m = black_box(&t).matricize(&[1, 2]).unwrap();
                m.singular_values().unwrap()
            })
        });
    }
}

fn tree_projection(c: &mut Criterion) {
    let t = random_tensor(vec![6; 4], 13);
    let tree = DimensionTree::balanced_binary(4).unwrap();
    let ranks = RankAssignment::uniform(&tree, 3).unwrap();
    c.bench_function("project_to_tree d=4 n=6 r=3", |b| {
        b.iter(|| project_to_tree(black_box(&t), &tree, &ranks, None).unwrap())
    });
    c.bench_function("width_profile d=4 n=6", |b| {
        b.iter(|| width_profile(black_box(&t), &tree).unwrap())
    });
}

fn composition_encoding(c: &mut Criterion) {
    let spec = registry_spec("mean-balanced-d4-s1").unwrap();
    let uniform = RankAssignment::uniform(spec.tree(), 8).unwrap();
    c.bench_function("encode_network mean d=4 r=8", |b| {
        b.iter(|| encode_network(black_box(&spec), &uniform, BasisKind::PiecewiseConstant).unwrap())
    });

    let scheduled = rank_schedule(&spec, 0.1, 1.0).unwrap();
    c.bench_function("encode_network mean d=4 scheduled eps=0.1", |b| {
        b.iter(|| {
            encode_network(black_box(&spec), &scheduled, BasisKind::PiecewiseConstant).unwrap()
        })
    });

    let net = encode_network(&spec, &uniform, BasisKind::PiecewiseConstant).unwrap();
    c.bench_function("network_to_full_tensor d=4 r=8", |b| {
        b.iter(|| black_box(&net).to_full_tensor().unwrap())
    });
}

/// Brute-force hyperbolic cross count: sum over level tuples with
/// |l|_1 <= budget of the per-mode dyadic block sizes.
fn enumerate_hc(modes_left: usize, budget: usize) -> u128 {
    if modes_left == 0 {
        return 1;
    }
    let mut total = 0u128;
    for l in 0..=budget {
        total += (1u128 << l) * enumerate_hc(modes_left - 1, budget - l);
    }
    total
}

fn hyperbolic_cross_counts(c: &mut Criterion) {
    c.bench_function("hc_cardinality closed form d=4 L=10", |b| {
        b.iter(|| hc_cardinality(black_box(4), black_box(10)).unwrap())
    });
    c.bench_function("hc_cardinality enumeration d=4 L=10", |b| {
        b.iter(|| enumerate_hc(black_box(4), black_box(10)))
    });
}

criterion_group!(
    kernels,
    unfolding_svd,
    tree_projection,
    composition_encoding,
    hyperbolic_cross_counts
);
criterion_main!(kernels);
