//! Independent certification of invariants and counterexamples: inductiveness
//! checking at a finite size, greedy minimization to a subsumption-free
//! assertion set, and step-by-step trace validation. Every check builds its
//! own solver session from the grounded instance — nothing is shared with
//! the inference engine, so a bug there cannot certify itself.

use thiserror::Error;

use crate::grounder::{g_and, FiniteInstance, GroundError, State, G};
use crate::ic3::Trace;
use crate::ir::NamedFormula;
use crate::smt::{GroundSmt, Sat, Smt, SmtError, TRANS_ACT};

#[derive(Debug, Error)]
pub enum CertError {
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error("assertion {0} does not expand over this instance: {1}")]
    BadAssertion(String, GroundError),
}

type Result<T> = std::result::Result<T, CertError>;

/// Why an invariant is not inductive.
#[derive(Debug, Clone)]
pub enum Witness {
    /// An initial state violating the invariant.
    Init(State),
    /// A state satisfying the invariant with a successor that does not.
    Consecution {
        pre: State,
        post: State,
        action: (String, Vec<String>),
    },
    /// An invariant state violating the property (impossible when the
    /// property is a conjunct, emitted for completeness).
    Safety(State),
}

#[derive(Debug, Clone)]
pub enum CertOutcome {
    Pass,
    Fail(Witness),
}

impl CertOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, CertOutcome::Pass)
    }
}

fn expand_all(inst: &FiniteInstance, assertions: &[NamedFormula]) -> Result<Vec<G>> {
    assertions
        .iter()
        .map(|a| {
            inst.expand(&a.formula)
                .map_err(|e| CertError::BadAssertion(a.name.clone(), e))
        })
        .collect()
}

/// Checks that `property ∧ ⋀assertions` is an inductive invariant of the
/// instance: it holds initially, is closed under every transition, and
/// implies the property.
pub fn check_inductive(
    inst: &FiniteInstance,
    property: &G,
    assertions: &[NamedFormula],
) -> Result<CertOutcome> {
    let mut conjuncts = vec![property.clone()];
    conjuncts.extend(expand_all(inst, assertions)?);
    let inv = g_and(conjuncts);

    let mut gs = GroundSmt::new(inst, Smt::in_process(), true)?;
    let inv_cur = gs.g_text(&inv);
    let inv_next = gs.g_text_next(&inv);
    let init = gs.g_text(&inst.init);
    let prop = gs.g_text(property);

    // (1) Init ⇒ inv
    gs.smt.push()?;
    gs.smt.send(&format!("(assert {init})"))?;
    gs.smt.send(&format!("(assert (not {inv_cur}))"))?;
    if gs.smt.check_sat_assuming(&[])? == Sat::Sat {
        let s = gs.model_state(false)?;
        gs.smt.pop()?;
        return Ok(CertOutcome::Fail(Witness::Init(s)));
    }
    gs.smt.pop()?;

    // (2) inv ∧ N̂ ⇒ inv′
    gs.smt.push()?;
    gs.smt.send(&format!("(assert {inv_cur})"))?;
    gs.smt.send(&format!("(assert (not {inv_next}))"))?;
    if gs.smt.check_sat_assuming(&[TRANS_ACT.to_string()])? == Sat::Sat {
        let pre = gs.model_state(false)?;
        let post = gs.model_state(true)?;
        let action = gs.fired_action()?;
        gs.smt.pop()?;
        return Ok(CertOutcome::Fail(Witness::Consecution { pre, post, action }));
    }
    gs.smt.pop()?;

    // (3) inv ⇒ property (trivial when property is a conjunct)
    gs.smt.push()?;
    gs.smt.send(&format!("(assert {inv_cur})"))?;
    gs.smt.send(&format!("(assert (not {prop}))"))?;
    if gs.smt.check_sat_assuming(&[])? == Sat::Sat {
        let s = gs.model_state(false)?;
        gs.smt.pop()?;
        return Ok(CertOutcome::Fail(Witness::Safety(s)));
    }
    gs.smt.pop()?;

    Ok(CertOutcome::Pass)
}

/// Greedily removes assertions in reverse insertion order: an assertion is
/// dropped when the remaining set under the property still implies it, so
/// the conjunction — and with it inductiveness — is unchanged. The input
/// must already certify together with the property. The result is
/// deterministic and idempotent.
///
/// A single solver session carries the whole pass: each assertion is
/// guarded by an indicator for its positive and its negated form, and
/// every trial is one `check-sat` under the matching assumptions.
pub fn minimize(
    inst: &FiniteInstance,
    property: &G,
    assertions: &[NamedFormula],
) -> Result<Vec<NamedFormula>> {
    let grounds: Vec<G> = expand_all(inst, assertions)?;
    let mut gs = GroundSmt::new(inst, Smt::in_process(), false)?;
    gs.assert_g(property)?;
    for (i, g) in grounds.iter().enumerate() {
        let text = gs.g_text(g);
        gs.smt.send(&format!("(declare-const min.k{i} Bool)"))?;
        gs.smt.send(&format!("(assert (=> min.k{i} {text}))"))?;
        gs.smt.send(&format!("(declare-const min.d{i} Bool)"))?;
        gs.smt
            .send(&format!("(assert (=> min.d{i} (not {text})))"))?;
    }
    let mut alive: Vec<bool> = vec![true; assertions.len()];
    for i in (0..assertions.len()).rev() {
        let mut assumptions: Vec<String> = alive
            .iter()
            .enumerate()
            .filter(|&(j, &a)| a && j != i)
            .map(|(j, _)| format!("min.k{j}"))
            .collect();
        assumptions.push(format!("min.d{i}"));
        if gs.smt.check_sat_assuming(&assumptions)? == Sat::Unsat {
            alive[i] = false;
        }
    }
    Ok(assertions
        .iter()
        .zip(&alive)
        .filter(|&(_, &a)| a)
        .map(|(x, _)| x.clone())
        .collect())
}

/// Are two assertion sets equivalent ground formulas on this instance
/// (under the property)?
pub fn semantically_equal(
    inst: &FiniteInstance,
    property: &G,
    left: &[NamedFormula],
    right: &[NamedFormula],
) -> Result<bool> {
    let lg = g_and(expand_all(inst, left)?);
    let rg = g_and(expand_all(inst, right)?);
    let mut gs = GroundSmt::new(inst, Smt::in_process(), false)?;
    gs.assert_g(property)?;
    let l = gs.g_text(&lg);
    let r = gs.g_text(&rg);
    gs.smt.send(&format!("(assert (not (= {l} {r})))"))?;
    Ok(gs.smt.check_sat_assuming(&[])? == Sat::Unsat)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceCheck {
    Valid,
    /// First failing step and what went wrong there.
    Invalid(usize, String),
}

/// Validates a counterexample trace: the first state satisfies Init, each
/// step satisfies its labeled action disjunct, and the last state violates
/// the property.
pub fn check_trace(inst: &FiniteInstance, trace: &Trace, property: &G) -> TraceCheck {
    if trace.states.is_empty() {
        return TraceCheck::Invalid(0, "empty trace has no violating state".into());
    }
    if trace.actions.len() + 1 != trace.states.len() {
        return TraceCheck::Invalid(0, "action count does not match state count".into());
    }
    if !inst.eval(&inst.init, &trace.states[0]) {
        return TraceCheck::Invalid(0, "first state does not satisfy Init".into());
    }
    for (i, (action, args)) in trace.actions.iter().enumerate() {
        let d = match inst
            .disjuncts
            .iter()
            .find(|d| d.action == *action && d.args == *args)
        {
            Some(d) => d,
            None => {
                return TraceCheck::Invalid(
                    i,
                    format!("no action instance {action}({})", args.join(", ")),
                )
            }
        };
        let cur = &trace.states[i];
        let defs = inst.compute_defs(cur);
        let next = &trace.states[i + 1];
        let ndefs = inst.compute_defs(next);
        if !inst.eval_with(&d.formula, cur, &defs, Some((next, &ndefs))) {
            return TraceCheck::Invalid(
                i,
                format!("step does not satisfy {action}({})", args.join(", ")),
            );
        }
    }
    let last = trace.states.last().unwrap();
    if inst.eval(property, last) {
        return TraceCheck::Invalid(
            trace.states.len() - 1,
            "last state satisfies the property".into(),
        );
    }
    TraceCheck::Valid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{bundled, corpus, parse_assertions, parse_protocol};
    use crate::grounder::{instantiate, SizeAssignment};
    use crate::ic3::{prove, Ic3Config, Outcome};
    use crate::ir::Formula;

    fn voting_inst() -> FiniteInstance {
        instantiate(
            &bundled("voting").unwrap(),
            &SizeAssignment::new(&[("value", 2), ("acceptor", 3), ("ballot", 4)]),
        )
        .unwrap()
    }

    fn human(inst: &FiniteInstance, text: &str) -> Vec<NamedFormula> {
        parse_assertions(text, &inst.protocol).unwrap()
    }

    #[test]
    fn voting_human_invariants_certify() {
        let inst = voting_inst();
        let a = human(&inst, corpus::VOTING_HUMAN_INV);
        assert_eq!(a.len(), 2);
        let r = check_inductive(&inst, &inst.safety.clone(), &a).unwrap();
        assert!(r.passed(), "expected pass, got {r:?}");
    }

    #[test]
    fn dropping_a1_fails_consecution_with_real_witness() {
        let inst = voting_inst();
        let mut a = human(&inst, corpus::VOTING_HUMAN_INV);
        a.remove(0);
        let safety = inst.safety.clone();
        match check_inductive(&inst, &safety, &a).unwrap() {
            CertOutcome::Fail(Witness::Consecution { pre, post, action }) => {
                // the witness is a genuine transition of the instance
                let d = inst
                    .disjuncts
                    .iter()
                    .find(|d| d.action == action.0 && d.args == action.1)
                    .expect("fired action exists");
                let defs = inst.compute_defs(&pre);
                let ndefs = inst.compute_defs(&post);
                assert!(inst.eval_with(&d.formula, &pre, &defs, Some((&post, &ndefs))));
                // and the invariant really breaks across it
                let inv = g_and(
                    std::iter::once(safety.clone())
                        .chain(a.iter().map(|f| inst.expand(&f.formula).unwrap()))
                        .collect(),
                );
                assert!(inst.eval(&inv, &pre));
                assert!(!inst.eval(&inv, &post));
            }
            other => panic!("expected consecution failure, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_assertion_is_caught() {
        let inst = voting_inst();
        let mut a = human(&inst, corpus::VOTING_HUMAN_INV);
        // negate the body of A1
        a[0].formula = Formula::not(a[0].formula.clone());
        let r = check_inductive(&inst, &inst.safety.clone(), &a).unwrap();
        assert!(!r.passed(), "corrupted invariant must not certify");
    }

    #[test]
    fn minimize_is_idempotent_and_drops_duplicates() {
        let inst = voting_inst();
        let a = human(&inst, corpus::VOTING_HUMAN_INV);
        let safety = inst.safety.clone();
        let min = minimize(&inst, &safety, &a).unwrap();
        let again = minimize(&inst, &safety, &min).unwrap();
        assert_eq!(
            min.iter().map(|f| &f.name).collect::<Vec<_>>(),
            again.iter().map(|f| &f.name).collect::<Vec<_>>()
        );
        // a duplicated assertion loses exactly one copy
        let mut dup = a.clone();
        dup.push(a[0].clone());
        let min_dup = minimize(&inst, &safety, &dup).unwrap();
        assert_eq!(min_dup.len(), min.len());
    }

    #[test]
    fn simple_paxos_human_invariants_certify() {
        let inst = instantiate(
            &bundled("simple_paxos").unwrap(),
            &SizeAssignment::new(&[("value", 2), ("acceptor", 3), ("ballot", 4)]),
        )
        .unwrap();
        let a = human(&inst, corpus::SIMPLE_PAXOS_HUMAN_INV);
        assert_eq!(a.len(), 6);
        let r = check_inductive(&inst, &inst.safety.clone(), &a).unwrap();
        assert!(r.passed(), "expected pass, got {r:?}");
    }

    #[test]
    fn engine_trace_is_valid_and_mutations_are_caught() {
        let p = parse_protocol(corpus::VOTING_NOAXIOM).unwrap();
        let inst = instantiate(
            &p,
            &SizeAssignment::new(&[("value", 2), ("acceptor", 2), ("ballot", 3)]),
        )
        .unwrap();
        let safety = inst.safety.clone();
        let trace = match prove(&inst, &safety, &Ic3Config::default()).unwrap() {
            Outcome::Trace(t) => t,
            other => panic!("expected trace, got {other:?}"),
        };
        assert_eq!(check_trace(&inst, &trace, &safety), TraceCheck::Valid);

        // flip one bit mid-way
        let mut bad = trace.clone();
        let mid = bad.states.len() / 2;
        bad.states[mid].bools[0] = !bad.states[mid].bools[0];
        assert!(matches!(
            check_trace(&inst, &bad, &safety),
            TraceCheck::Invalid(_, _)
        ));

        // empty trace
        let empty = Trace {
            states: vec![],
            actions: vec![],
            stats: Default::default(),
        };
        assert!(matches!(
            check_trace(&inst, &empty, &safety),
            TraceCheck::Invalid(0, _)
        ));
    }
}
