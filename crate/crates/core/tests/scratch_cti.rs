use qinv_core::frontend::bundled;
use qinv_core::grounder::{instantiate, SizeAssignment};
use qinv_core::ic3::{prove, Ic3Config, Outcome};
use std::time::Instant;

#[test]
fn dump_voting_proof_assertions() {
    let p = bundled("voting").unwrap();
    let inst = instantiate(
        &p,
        &SizeAssignment::new(&[("value", 2), ("acceptor", 3), ("ballot", 4)]),
    )
    .unwrap();
    let t = Instant::now();
    let outcome = prove(&inst, &inst.safety.clone(), &Ic3Config::default()).unwrap();
    let proof = match outcome {
        Outcome::Proof(p) => p,
        other => panic!("expected proof, got {other:?}"),
    };
    println!(
        "proved in {:?}; depth {}, {} queries, {} clauses",
        t.elapsed(),
        proof.stats.depth,
        proof.stats.queries,
        proof.stats.clauses_learned
    );
    for a in &proof.assertions {
        let text = a.formula.to_string();
        println!(
            "== {} quantified={} clauses={} len={}",
            a.name,
            a.quantified,
            a.clauses.len(),
            text.len()
        );
        if text.len() < 1200 {
            println!("   {text}");
        } else {
            println!("   {}...", &text[..1200]);
        }
    }
}
