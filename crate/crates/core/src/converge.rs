//! Finite-convergence loop: prove at the current instance sizes, decide
//! whether the inferred invariant has saturated, and grow sorts until it
//! has. Saturation combines a syntactic gate — after inlining definitions,
//! the invariant must quantify over strictly fewer ordered-sort elements
//! than the sort holds, else it may be describing a size-specific artifact —
//! with a semantic gate that re-certifies the invariant with every sort
//! grown by one. Symmetric sorts are exempt from the syntactic count: their
//! quantified assertions are accepted only under the expansion-equivalence
//! contract, which is size-generic by symmetry.

use thiserror::Error;

use crate::certify::{check_inductive, minimize, CertError};
use crate::grounder::{g_and, instantiate, GroundError, SizeAssignment};
use crate::ic3::{prove, Ic3Config, Outcome, Stats, Trace};
use crate::ir::{Formula, NamedFormula, Protocol, Role};
use crate::smt::SmtError;

#[derive(Debug, Error)]
pub enum ConvergeError {
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Cert(#[from] CertError),
}

type Result<T> = std::result::Result<T, ConvergeError>;

#[derive(Debug, Clone)]
pub struct ConvergeConfig {
    pub ic3: Ic3Config,
    /// Total prove attempts (base plus growth steps).
    pub max_iterations: usize,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig {
            ic3: Ic3Config::default(),
            max_iterations: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Saturation {
    Ok,
    /// The named sort must grow before the invariant can be trusted.
    Grow(String),
}

/// Maximum number of quantified variables of each sort that are in scope
/// simultaneously anywhere in the formula, with definition applications
/// inlined.
fn scoped_counts(p: &Protocol, f: &Formula, out: &mut std::collections::HashMap<String, usize>) {
    fn merge_max(
        a: &mut std::collections::HashMap<String, usize>,
        b: std::collections::HashMap<String, usize>,
    ) {
        for (k, v) in b {
            let e = a.entry(k).or_insert(0);
            *e = (*e).max(v);
        }
    }
    let mut local = std::collections::HashMap::new();
    match f {
        Formula::True | Formula::False | Formula::Eq(_, _) | Formula::Cmp(_, _, _)
        | Formula::Member(_, _) => {}
        Formula::App(name, _) => {
            if let Some(sym) = p.symbols.iter().find(|s| s.name == *name) {
                if sym.role == Role::Definition {
                    if let Some(def) = &sym.def {
                        scoped_counts(p, &def.body, &mut local);
                    }
                }
            }
        }
        Formula::Not(g) => scoped_counts(p, g, &mut local),
        Formula::And(fs) | Formula::Or(fs) => {
            for g in fs {
                let mut inner = std::collections::HashMap::new();
                scoped_counts(p, g, &mut inner);
                merge_max(&mut local, inner);
            }
        }
        Formula::Implies(a, b) | Formula::Iff(a, b) => {
            scoped_counts(p, a, &mut local);
            let mut inner = std::collections::HashMap::new();
            scoped_counts(p, b, &mut inner);
            merge_max(&mut local, inner);
        }
        Formula::Forall(vs, body) | Formula::Exists(vs, body) => {
            scoped_counts(p, body, &mut local);
            for (_, sort) in vs {
                *local.entry(sort.clone()).or_insert(0) += 1;
            }
        }
    }
    merge_max(out, local);
}

/// Syntactic saturation gate over the ordered sorts.
pub fn saturation_check(
    p: &Protocol,
    assertions: &[NamedFormula],
    sizes: &SizeAssignment,
) -> Saturation {
    let mut offending: Vec<(usize, String)> = Vec::new();
    for sort in &p.sorts {
        if !sort.is_ordered() {
            continue;
        }
        let size = match sizes.0.get(&sort.name) {
            Some(&n) => n,
            None => continue,
        };
        let worst = assertions
            .iter()
            .map(|a| {
                let mut counts = std::collections::HashMap::new();
                scoped_counts(p, &a.formula, &mut counts);
                counts.get(&sort.name).copied().unwrap_or(0)
            })
            .max()
            .unwrap_or(0);
        if worst >= size {
            offending.push((size, sort.name.clone()));
        }
    }
    match offending.into_iter().min_by_key(|(n, _)| *n) {
        Some((_, name)) => Saturation::Grow(name),
        None => Saturation::Ok,
    }
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub sizes: SizeAssignment,
    pub proved: bool,
    pub stats: Option<Stats>,
    /// Saturation verdict after a proof, rendered as text for reporting.
    pub saturation: Option<String>,
    pub gate_passed: Option<bool>,
}

#[derive(Debug)]
pub enum ConvergeOutcome {
    /// Final invariant conjuncts (strengthening plus learned assertions),
    /// certified at the final sizes and at final sizes + 1.
    Converged { assertions: Vec<NamedFormula> },
    Counterexample(Trace),
    Inconclusive(String),
}

#[derive(Debug)]
pub struct ConvergenceReport {
    pub protocol: String,
    pub base: SizeAssignment,
    pub final_sizes: SizeAssignment,
    pub iterations: Vec<IterationRecord>,
    pub outcome: ConvergeOutcome,
    pub queries: u64,
}

impl ConvergenceReport {
    /// Table notation: `sort = base ↦ final` for grown sorts, `sort = n`
    /// otherwise.
    pub fn growth_summary(&self) -> String {
        self.base
            .0
            .iter()
            .map(|(name, &b)| {
                let f = self.final_sizes.0[name];
                if f == b {
                    format!("{name} = {b}")
                } else {
                    format!("{name} = {b} \u{21a6} {f}")
                }
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn grown(sizes: &SizeAssignment, sort: Option<&str>) -> SizeAssignment {
    let mut out = sizes.clone();
    for (name, n) in out.0.iter_mut() {
        if sort.is_none() || sort == Some(name.as_str()) {
            *n += 1;
        }
    }
    out
}

/// Runs the convergence loop: prove, saturation-check, grow, repeat; the
/// final invariant is re-certified with every sort incremented before the
/// report claims convergence.
pub fn converge(
    p: &Protocol,
    base: &SizeAssignment,
    strengthening: &[NamedFormula],
    cfg: &ConvergeConfig,
) -> Result<ConvergenceReport> {
    let mut sizes = base.clone();
    let mut iterations = Vec::new();
    let mut queries = 0u64;
    for _ in 0..cfg.max_iterations {
        let inst = instantiate(p, &sizes)?;
        let mut property_parts = vec![inst.safety.clone()];
        for a in strengthening {
            property_parts.push(inst.expand(&a.formula)?);
        }
        let property = g_and(property_parts);
        match prove(&inst, &property, &cfg.ic3)? {
            Outcome::Trace(t) => {
                queries += t.stats.queries;
                iterations.push(IterationRecord {
                    sizes: sizes.clone(),
                    proved: false,
                    stats: Some(t.stats.clone()),
                    saturation: None,
                    gate_passed: None,
                });
                return Ok(ConvergenceReport {
                    protocol: p.name.clone(),
                    base: base.clone(),
                    final_sizes: sizes,
                    iterations,
                    outcome: ConvergeOutcome::Counterexample(t),
                    queries,
                });
            }
            Outcome::Inconclusive(msg, stats) => {
                queries += stats.queries;
                iterations.push(IterationRecord {
                    sizes: sizes.clone(),
                    proved: false,
                    stats: Some(stats),
                    saturation: None,
                    gate_passed: None,
                });
                return Ok(ConvergenceReport {
                    protocol: p.name.clone(),
                    base: base.clone(),
                    final_sizes: sizes,
                    iterations,
                    outcome: ConvergeOutcome::Inconclusive(msg),
                    queries,
                });
            }
            Outcome::Proof(proof) => {
                queries += proof.stats.queries;
                let mut assertions: Vec<NamedFormula> = strengthening.to_vec();
                for (i, a) in proof.assertions.iter().enumerate() {
                    assertions.push(NamedFormula {
                        name: format!("{}!L{}", p.name, i + 1),
                        formula: a.formula.clone(),
                    });
                }
                // drop redundant conjuncts before judging saturation; the
                // learned set often carries clauses subsumed by the rest
                assertions = minimize(&inst, &property, &assertions)?;
                match saturation_check(p, &assertions, &sizes) {
                    Saturation::Grow(sort) => {
                        iterations.push(IterationRecord {
                            sizes: sizes.clone(),
                            proved: true,
                            stats: Some(proof.stats.clone()),
                            saturation: Some(format!("grow {sort}")),
                            gate_passed: None,
                        });
                        sizes = grown(&sizes, Some(&sort));
                        continue;
                    }
                    Saturation::Ok => {
                        // semantic gate: the invariant must still certify
                        // with every sort grown by one
                        let plus = grown(&sizes, None);
                        let inst_plus = instantiate(p, &plus)?;
                        let safety_plus = inst_plus.safety.clone();
                        // an invariant that cannot even be expanded at the
                        // larger sizes (e.g. it names instance-specific
                        // constants) fails the gate rather than the run
                        let gate = match check_inductive(&inst_plus, &safety_plus, &assertions) {
                            Ok(outcome) => outcome.passed(),
                            Err(CertError::BadAssertion(_, _)) => false,
                            Err(e) => return Err(e.into()),
                        };
                        iterations.push(IterationRecord {
                            sizes: sizes.clone(),
                            proved: true,
                            stats: Some(proof.stats.clone()),
                            saturation: Some("ok".into()),
                            gate_passed: Some(gate),
                        });
                        if gate {
                            return Ok(ConvergenceReport {
                                protocol: p.name.clone(),
                                base: base.clone(),
                                final_sizes: sizes,
                                iterations,
                                outcome: ConvergeOutcome::Converged { assertions },
                                queries,
                            });
                        }
                        // the syntactic gate missed something: grow
                        // everything one step and try again
                        sizes = grown(&sizes, None);
                    }
                }
            }
        }
    }
    Ok(ConvergenceReport {
        protocol: p.name.clone(),
        base: base.clone(),
        final_sizes: sizes,
        iterations,
        outcome: ConvergeOutcome::Inconclusive("iteration budget exhausted".into()),
        queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::semantically_equal;
    use crate::frontend::{bundled, corpus, parse_assertions, parse_protocol};

    fn voting_sizes() -> SizeAssignment {
        SizeAssignment::new(&[("value", 2), ("acceptor", 3), ("ballot", 4)])
    }

    #[test]
    fn voting_human_assertions_pass_saturation_at_base_size() {
        let p = bundled("voting").unwrap();
        let a = parse_assertions(corpus::VOTING_HUMAN_INV, &p).unwrap();
        assert_eq!(
            saturation_check(&p, &a, &voting_sizes()),
            Saturation::Ok
        );
        // empty assertion set is trivially saturated
        assert_eq!(saturation_check(&p, &[], &voting_sizes()), Saturation::Ok);
    }

    #[test]
    fn inlined_definition_quantifiers_are_counted() {
        let p = bundled("voting").unwrap();
        let a = parse_assertions(corpus::VOTING_HUMAN_INV, &p).unwrap();
        // A1 mentions one ballot variable; inlining isSafeAt adds two more
        let mut counts = std::collections::HashMap::new();
        scoped_counts(&p, &a[0].formula, &mut counts);
        assert_eq!(counts.get("ballot"), Some(&3));
        // 3 < 4 passes, but a ballot domain of 3 would be too small
        assert_eq!(
            saturation_check(
                &p,
                &a,
                &SizeAssignment::new(&[("value", 2), ("acceptor", 3), ("ballot", 3)])
            ),
            Saturation::Grow("ballot".into())
        );
    }

    #[test]
    fn four_ballot_variables_force_growth_at_size_four() {
        let p = bundled("voting").unwrap();
        let text = "(invariants voting
          (assertion X
            (forall ((B1 ballot) (B2 ballot) (B3 ballot) (B4 ballot))
              (=> (and (< B1 B2) (< B2 B3) (< B3 B4)) (< B1 B4)))))";
        let a = parse_assertions(text, &p).unwrap();
        assert_eq!(
            saturation_check(&p, &a, &voting_sizes()),
            Saturation::Grow("ballot".into())
        );
    }

    #[test]
    fn voting_converges_at_base_sizes_with_no_growth() {
        let p = bundled("voting").unwrap();
        let base = voting_sizes();
        let report = converge(&p, &base, &[], &ConvergeConfig::default()).unwrap();
        let assertions = match &report.outcome {
            ConvergeOutcome::Converged { assertions } => assertions.clone(),
            other => panic!("expected convergence, got {other:?}"),
        };
        assert_eq!(report.final_sizes.0, base.0, "no sort should grow");
        assert_eq!(report.iterations.len(), 1);
        assert_eq!(report.iterations[0].gate_passed, Some(true));
        assert!(report.growth_summary().contains("ballot = 4"));

        // inferred invariant is semantically the human one at this size
        let inst = instantiate(&p, &base).unwrap();
        let human = parse_assertions(corpus::VOTING_HUMAN_INV, &p).unwrap();
        assert!(semantically_equal(&inst, &inst.safety.clone(), &assertions, &human).unwrap());
    }

    #[test]
    fn counterexample_stops_the_loop() {
        let p = parse_protocol(corpus::VOTING_NOAXIOM).unwrap();
        let base = SizeAssignment::new(&[("value", 2), ("acceptor", 2), ("ballot", 3)]);
        let report = converge(&p, &base, &[], &ConvergeConfig::default()).unwrap();
        assert!(matches!(
            report.outcome,
            ConvergeOutcome::Counterexample(_)
        ));
        assert_eq!(report.iterations.len(), 1);
        assert!(!report.iterations[0].proved);
    }
}
