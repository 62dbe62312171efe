//! End-to-end benchmarks over the bundled corpus: grounding, certification
//! of the reference invariants, and full IC3 runs on a small Voting
//! instance in each boost mode.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use qinv_core::certify::check_inductive;
use qinv_core::frontend::{bundled, corpus, parse_assertions};
use qinv_core::grounder::{instantiate, SizeAssignment};
use qinv_core::ic3::{prove, BoostMode, Ic3Config, Outcome};

fn bench_grounding(c: &mut Criterion) {
    let paxos = bundled("paxos").unwrap();
    let sizes = SizeAssignment::new(&[("value", 2), ("acceptor", 3), ("ballot", 4)]);
    c.bench_function("ground_paxos_2_3_3_4", |b| {
        b.iter(|| instantiate(&paxos, &sizes).unwrap())
    });
}

fn bench_certify(c: &mut Criterion) {
    let voting = bundled("voting").unwrap();
    let sizes = SizeAssignment::new(&[("value", 2), ("acceptor", 3), ("ballot", 4)]);
    let inst = instantiate(&voting, &sizes).unwrap();
    let assertions = parse_assertions(corpus::VOTING_HUMAN_INV, &voting).unwrap();
    c.bench_function("certify_voting_human_2_3_3_4", |b| {
        b.iter(|| {
            assert!(check_inductive(&inst, &inst.safety.clone(), &assertions)
                .unwrap()
                .passed())
        })
    });
}

fn bench_prove_small_voting(c: &mut Criterion) {
    let voting = bundled("voting").unwrap();
    let sizes = SizeAssignment::new(&[("value", 2), ("acceptor", 2), ("ballot", 3)]);
    let inst = instantiate(&voting, &sizes).unwrap();
    let mut group = c.benchmark_group("prove_voting_2_2_2_3");
    group.sample_size(10);
    for (label, boost) in [
        ("ground", BoostMode::None),
        ("symmetry", BoostMode::Symmetry),
        ("full", BoostMode::Full),
    ] {
        group.bench_function(label, |b| {
            b.iter_batched(
                || Ic3Config {
                    boost,
                    ..Ic3Config::default()
                },
                |cfg| {
                    let outcome = prove(&inst, &inst.safety.clone(), &cfg).unwrap();
                    assert!(matches!(outcome, Outcome::Proof(_)));
                },
                BatchSize::PerIteration,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, bench_grounding, bench_certify, bench_prove_small_voting);
criterion_main!(benches);
