//! Hierarchical strengthening down a refinement chain: assertions proved at
//! an abstract level are rewritten through a refinement mapping and conjoined
//! to the next level's property, so each level only has to discover what is
//! genuinely new at its abstraction. When a low-level symbol carries extra
//! arguments, each rewritten occurrence closes over them with fresh
//! universally quantified variables appended to the assertion's prefix.

use std::collections::HashSet;

use thiserror::Error;

use crate::converge::{converge, ConvergeConfig, ConvergeError, ConvergeOutcome, ConvergenceReport};
use crate::frontend::{
    parse_mapping, parse_protocol, FrontendError, HierarchyConfig, RefinementMapping, SymbolMap,
};
use crate::grounder::SizeAssignment;
use crate::ir::{Formula, NamedFormula, Protocol, Role, Term};

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("assertion {assertion}: symbol {symbol} has no mapping to {low}")]
    Unmapped {
        assertion: String,
        symbol: String,
        low: String,
    },
    #[error("mappings {first} and {second} do not connect: {symbol} maps into nothing")]
    BrokenComposition {
        first: String,
        second: String,
        symbol: String,
    },
    #[error("hierarchy file {0} is not available")]
    MissingFile(String),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Converge(#[from] ConvergeError),
}

type Result<T> = std::result::Result<T, HierarchyError>;

fn collect_names(f: &Formula, out: &mut HashSet<String>) {
    fn term(t: &Term, out: &mut HashSet<String>) {
        match t {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| term(a, out)),
        }
    }
    match f {
        Formula::True | Formula::False => {}
        Formula::Eq(a, b) | Formula::Member(a, b) => {
            term(a, out);
            term(b, out);
        }
        Formula::Cmp(_, a, b) => {
            term(a, out);
            term(b, out);
        }
        Formula::App(_, args) => args.iter().for_each(|a| term(a, out)),
        Formula::Not(g) => collect_names(g, out),
        Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| collect_names(g, out)),
        Formula::Implies(a, b) | Formula::Iff(a, b) => {
            collect_names(a, out);
            collect_names(b, out);
        }
        Formula::Forall(vs, b) | Formula::Exists(vs, b) => {
            for (v, _) in vs {
                out.insert(v.clone());
            }
            collect_names(b, out);
        }
    }
}

struct Rewriter<'a> {
    assertion: &'a str,
    mapping: &'a RefinementMapping,
    high: &'a Protocol,
    used: HashSet<String>,
    fresh: Vec<(String, String)>,
}

impl<'a> Rewriter<'a> {
    fn fresh_var(&mut self, base: &str, sort: &str) -> String {
        let mut name = base.to_string();
        let mut k = 1usize;
        while self.used.contains(&name) {
            k += 1;
            name = format!("{base}{k}");
        }
        self.used.insert(name.clone());
        self.fresh.push((name.clone(), sort.to_string()));
        name
    }

    fn map_symbol(&mut self, name: &str) -> Result<Option<&'a SymbolMap>> {
        match self.high.symbols.iter().find(|s| s.name == name) {
            Some(sym) if sym.role == Role::State || sym.role == Role::Definition => {
                match self.mapping.map_for(name) {
                    Some(sm) => Ok(Some(sm)),
                    None => Err(HierarchyError::Unmapped {
                        assertion: self.assertion.to_string(),
                        symbol: name.to_string(),
                        low: self.mapping.low.clone(),
                    }),
                }
            }
            _ => Ok(None),
        }
    }

    fn extend_args(&mut self, sm: &SymbolMap, args: Vec<Term>) -> Vec<Term> {
        let mut out = args;
        let extra: Vec<(String, String)> = sm.extra_args.clone();
        for (base, sort) in extra {
            let v = self.fresh_var(&base, &sort);
            out.push(Term::Var(v));
        }
        out
    }

    fn term(&mut self, t: &Term) -> Result<Term> {
        Ok(match t {
            Term::Var(_) | Term::Const(_) => t.clone(),
            Term::App(name, args) => {
                let args = args
                    .iter()
                    .map(|a| self.term(a))
                    .collect::<Result<Vec<_>>>()?;
                match self.map_symbol(name)? {
                    Some(sm) => {
                        let low = sm.low.clone();
                        let args = self.extend_args(&sm.clone(), args);
                        Term::App(low, args)
                    }
                    None => Term::App(name.clone(), args),
                }
            }
        })
    }

    fn formula(&mut self, f: &Formula) -> Result<Formula> {
        Ok(match f {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Eq(a, b) => Formula::Eq(self.term(a)?, self.term(b)?),
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, self.term(a)?, self.term(b)?),
            Formula::Member(a, b) => Formula::Member(self.term(a)?, self.term(b)?),
            Formula::App(name, args) => {
                let args = args
                    .iter()
                    .map(|a| self.term(a))
                    .collect::<Result<Vec<_>>>()?;
                match self.map_symbol(name)? {
                    Some(sm) => {
                        let low = sm.low.clone();
                        let args = self.extend_args(&sm.clone(), args);
                        Formula::App(low, args)
                    }
                    None => Formula::App(name.clone(), args),
                }
            }
            Formula::Not(g) => Formula::not(self.formula(g)?),
            Formula::And(fs) => Formula::And(
                fs.iter()
                    .map(|g| self.formula(g))
                    .collect::<Result<Vec<_>>>()?,
            ),
            Formula::Or(fs) => Formula::Or(
                fs.iter()
                    .map(|g| self.formula(g))
                    .collect::<Result<Vec<_>>>()?,
            ),
            Formula::Implies(a, b) => Formula::implies(self.formula(a)?, self.formula(b)?),
            Formula::Iff(a, b) => {
                Formula::Iff(Box::new(self.formula(a)?), Box::new(self.formula(b)?))
            }
            Formula::Forall(vs, b) => Formula::Forall(vs.clone(), Box::new(self.formula(b)?)),
            Formula::Exists(vs, b) => Formula::Exists(vs.clone(), Box::new(self.formula(b)?)),
        })
    }
}

/// Rewrites a high-level assertion into the low-level vocabulary. Extra
/// argument positions on low-level symbols are filled, per occurrence, with
/// fresh universally quantified variables named after the mapping's declared
/// argument names; the fresh variables are appended to the top-level prefix.
pub fn apply_mapping(
    a: &NamedFormula,
    m: &RefinementMapping,
    high: &Protocol,
) -> Result<NamedFormula> {
    let mut used = HashSet::new();
    collect_names(&a.formula, &mut used);
    let mut rw = Rewriter {
        assertion: &a.name,
        mapping: m,
        high,
        used,
        fresh: Vec::new(),
    };
    let body = rw.formula(&a.formula)?;
    let formula = if rw.fresh.is_empty() {
        body
    } else {
        match body {
            Formula::Forall(mut vs, inner) => {
                vs.extend(rw.fresh.clone());
                Formula::Forall(vs, inner)
            }
            other => Formula::Forall(rw.fresh.clone(), Box::new(other)),
        }
    };
    Ok(NamedFormula {
        name: a.name.clone(),
        formula,
    })
}

/// Composes two adjacent mappings into a single high-to-low mapping; extra
/// arguments accumulate in application order.
pub fn compose(m1: &RefinementMapping, m2: &RefinementMapping) -> Result<RefinementMapping> {
    let mut maps = Vec::new();
    for sm1 in &m1.maps {
        let sm2 = m2
            .map_for(&sm1.low)
            .ok_or_else(|| HierarchyError::BrokenComposition {
                first: format!("{}->{}", m1.high, m1.low),
                second: format!("{}->{}", m2.high, m2.low),
                symbol: sm1.low.clone(),
            })?;
        let mut extra_args = sm1.extra_args.clone();
        extra_args.extend(sm2.extra_args.clone());
        maps.push(SymbolMap {
            high: sm1.high.clone(),
            low: sm2.low.clone(),
            extra_args,
        });
    }
    Ok(RefinementMapping {
        high: m1.high.clone(),
        low: m2.low.clone(),
        maps,
    })
}

/// One level of the chain: prove Safety strengthened with the inherited
/// assertions, discovering whatever else the level needs.
pub fn prove_level(
    level: &Protocol,
    inherited: &[NamedFormula],
    sizes: &SizeAssignment,
    cfg: &ConvergeConfig,
) -> Result<ConvergenceReport> {
    Ok(converge(level, sizes, inherited, cfg)?)
}

#[derive(Debug)]
pub struct LevelResult {
    pub level: String,
    pub report: ConvergenceReport,
    /// Full strengthening set at this level (inherited plus learned);
    /// the level invariant is Safety conjoined with these.
    pub invariant: Vec<NamedFormula>,
}

#[derive(Debug)]
pub struct HierarchyRun {
    pub name: String,
    pub levels: Vec<LevelResult>,
    pub completed: bool,
    /// Present when the chain stopped early (counterexample or inconclusive).
    pub stopped: Option<String>,
}

/// Runs the chain top-down (most abstract level first). Each level inherits
/// the previous level's entire strengthening set rewritten through the
/// connecting mapping, which transitively carries every higher level's
/// assertions. All protocols and mappings are parsed and validated before
/// any solving starts; a counterexample or inconclusive level aborts the
/// chain but preserves the completed prefix.
pub fn run_hierarchy(
    cfg: &HierarchyConfig,
    resolve: &dyn Fn(&str) -> Option<String>,
    sizes: &SizeAssignment,
    ccfg: &ConvergeConfig,
) -> Result<HierarchyRun> {
    let mut protocols: Vec<Protocol> = Vec::new();
    let mut mappings: Vec<Option<RefinementMapping>> = Vec::new();
    for (i, level) in cfg.levels.iter().enumerate() {
        let text = resolve(&level.protocol_file)
            .ok_or_else(|| HierarchyError::MissingFile(level.protocol_file.clone()))?;
        let p = parse_protocol(&text)?;
        match &level.from {
            None => mappings.push(None),
            Some((_, map_file)) => {
                let mtext = resolve(map_file)
                    .ok_or_else(|| HierarchyError::MissingFile(map_file.clone()))?;
                let m = parse_mapping(&mtext, &protocols[i - 1], &p)?;
                mappings.push(Some(m));
            }
        }
        protocols.push(p);
    }

    let mut levels: Vec<LevelResult> = Vec::new();
    let mut carried: Vec<NamedFormula> = Vec::new();
    for (i, p) in protocols.iter().enumerate() {
        let inherited = match &mappings[i] {
            None => Vec::new(),
            Some(m) => carried
                .iter()
                .map(|a| apply_mapping(a, m, &protocols[i - 1]))
                .collect::<Result<Vec<_>>>()?,
        };
        let report = prove_level(p, &inherited, sizes, ccfg)?;
        match &report.outcome {
            ConvergeOutcome::Converged { assertions } => {
                carried = assertions.clone();
                levels.push(LevelResult {
                    level: cfg.levels[i].name.clone(),
                    report,
                    invariant: carried.clone(),
                });
            }
            ConvergeOutcome::Counterexample(_) => {
                let msg = format!("level {} found a counterexample", cfg.levels[i].name);
                levels.push(LevelResult {
                    level: cfg.levels[i].name.clone(),
                    report,
                    invariant: Vec::new(),
                });
                return Ok(HierarchyRun {
                    name: cfg.name.clone(),
                    levels,
                    completed: false,
                    stopped: Some(msg),
                });
            }
            ConvergeOutcome::Inconclusive(why) => {
                let msg = format!("level {} inconclusive: {why}", cfg.levels[i].name);
                levels.push(LevelResult {
                    level: cfg.levels[i].name.clone(),
                    report,
                    invariant: Vec::new(),
                });
                return Ok(HierarchyRun {
                    name: cfg.name.clone(),
                    levels,
                    completed: false,
                    stopped: Some(msg),
                });
            }
        }
    }
    Ok(HierarchyRun {
        name: cfg.name.clone(),
        levels,
        completed: true,
        stopped: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::semantically_equal;
    use crate::frontend::{bundled, corpus, parse_assertions, parse_hierarchy};
    use crate::grounder::instantiate;

    #[test]
    fn votes_to_msg2b_mapping_produces_the_simple_paxos_assertion() {
        let voting = bundled("voting").unwrap();
        let simple = bundled("simple_paxos").unwrap();
        let m = parse_mapping(corpus::VOTING_TO_SIMPLE_PAXOS_MAP, &voting, &simple).unwrap();
        let high = parse_assertions(corpus::VOTING_HUMAN_INV, &voting).unwrap();
        let low = parse_assertions(corpus::SIMPLE_PAXOS_HUMAN_INV, &simple).unwrap();
        // votes has no extra arguments, so A1 and A2 map onto the shipped
        // simple_paxos assertions verbatim
        for name in ["A1", "A2"] {
            let h = high.iter().find(|a| a.name == name).unwrap();
            let l = low.iter().find(|a| a.name == name).unwrap();
            let mapped = apply_mapping(h, &m, &voting).unwrap();
            assert_eq!(mapped.formula, l.formula, "mapping of {name}");
        }
    }

    #[test]
    fn extra_arguments_become_fresh_universals() {
        let simple = bundled("simple_paxos").unwrap();
        let implicit = bundled("implicit_paxos").unwrap();
        let m =
            parse_mapping(corpus::SIMPLE_PAXOS_TO_IMPLICIT_PAXOS_MAP, &simple, &implicit).unwrap();
        let high = parse_assertions(corpus::SIMPLE_PAXOS_HUMAN_INV, &simple).unwrap();
        let a6 = high.iter().find(|a| a.name == "A6").unwrap();
        let mapped = apply_mapping(a6, &m, &simple).unwrap();
        match &mapped.formula {
            Formula::Forall(vs, body) => {
                assert_eq!(
                    vs.iter().map(|(v, _)| v.as_str()).collect::<Vec<_>>(),
                    vec!["A", "B", "Bmax", "Vmax"]
                );
                match body.as_ref() {
                    Formula::Implies(lhs, _) => {
                        assert_eq!(
                            **lhs,
                            Formula::App(
                                "msg1b".into(),
                                vec![
                                    Term::Var("A".into()),
                                    Term::Var("B".into()),
                                    Term::Var("Bmax".into()),
                                    Term::Var("Vmax".into())
                                ]
                            )
                        );
                    }
                    other => panic!("unexpected body {other:?}"),
                }
            }
            other => panic!("expected a forall, got {other:?}"),
        }
        // the result is well-sorted over the low level
        let inst = instantiate(
            &implicit,
            &SizeAssignment::new(&[("value", 2), ("acceptor", 3), ("ballot", 4)]),
        )
        .unwrap();
        inst.expand(&mapped.formula).unwrap();
    }

    #[test]
    fn identity_mapping_is_the_identity() {
        let voting = bundled("voting").unwrap();
        let text = "(mapping (high voting) (low voting)
          (map votes votes) (map maxBal maxBal) (map chosenAt chosenAt)
          (map chosen chosen) (map showsSafeAt showsSafeAt) (map isSafeAt isSafeAt))";
        let m = parse_mapping(text, &voting, &voting).unwrap();
        for a in parse_assertions(corpus::VOTING_HUMAN_INV, &voting).unwrap() {
            let mapped = apply_mapping(&a, &m, &voting).unwrap();
            assert_eq!(mapped.formula, a.formula);
        }
    }

    #[test]
    fn unmapped_symbol_is_an_error() {
        let voting = bundled("voting").unwrap();
        let simple = bundled("simple_paxos").unwrap();
        // parse_mapping rejects partial maps outright, so a hole can only be
        // introduced by hand
        let full =
            parse_mapping(corpus::VOTING_TO_SIMPLE_PAXOS_MAP, &voting, &simple).unwrap();
        let mut m = full.clone();
        m.maps.retain(|sm| sm.high != "votes");
        let a = &parse_assertions(corpus::VOTING_HUMAN_INV, &voting).unwrap()[0];
        match apply_mapping(a, &m, &voting) {
            Err(HierarchyError::Unmapped { symbol, .. }) => assert_eq!(symbol, "votes"),
            other => panic!("expected an unmapped-symbol error, got {other:?}"),
        }
    }

    #[test]
    fn composition_equals_sequential_application_on_the_corpus() {
        let voting = bundled("voting").unwrap();
        let simple = bundled("simple_paxos").unwrap();
        let implicit = bundled("implicit_paxos").unwrap();
        let vs = parse_mapping(corpus::VOTING_TO_SIMPLE_PAXOS_MAP, &voting, &simple).unwrap();
        let si =
            parse_mapping(corpus::SIMPLE_PAXOS_TO_IMPLICIT_PAXOS_MAP, &simple, &implicit).unwrap();
        let vi = compose(&vs, &si).unwrap();
        assert_eq!(vi.high, "voting");
        assert_eq!(vi.low, "implicit_paxos");
        for a in parse_assertions(corpus::VOTING_HUMAN_INV, &voting).unwrap() {
            let sequential =
                apply_mapping(&apply_mapping(&a, &vs, &voting).unwrap(), &si, &simple).unwrap();
            let composed = apply_mapping(&a, &vi, &voting).unwrap();
            assert_eq!(sequential.formula, composed.formula, "assertion {}", a.name);
        }
    }

    #[test]
    fn single_level_chain_matches_direct_convergence() {
        let cfg = parse_hierarchy("(hierarchy just_voting (level voting voting.ptp))").unwrap();
        let sizes = SizeAssignment::new(&[("value", 2), ("acceptor", 3), ("ballot", 4)]);
        let run = run_hierarchy(&cfg, &|f| corpus::file_text(f).map(str::to_string), &sizes, &ConvergeConfig::default())
            .unwrap();
        assert!(run.completed);
        assert_eq!(run.levels.len(), 1);

        let voting = bundled("voting").unwrap();
        let direct = converge(&voting, &sizes, &[], &ConvergeConfig::default()).unwrap();
        let direct_assertions = match direct.outcome {
            ConvergeOutcome::Converged { assertions } => assertions,
            other => panic!("direct convergence failed: {other:?}"),
        };
        let inst = instantiate(&voting, &sizes).unwrap();
        assert!(semantically_equal(
            &inst,
            &inst.safety.clone(),
            &run.levels[0].invariant,
            &direct_assertions
        )
        .unwrap());
    }

    #[test]
    fn broken_chain_fails_before_solving() {
        let cfg = parse_hierarchy(
            "(hierarchy broken
               (level voting voting.ptp)
               (level simple_paxos simple_paxos.ptp (from voting missing.map)))",
        )
        .unwrap();
        let sizes = SizeAssignment::new(&[("value", 2), ("acceptor", 3), ("ballot", 4)]);
        match run_hierarchy(&cfg, &|f| corpus::file_text(f).map(str::to_string), &sizes, &ConvergeConfig::default()) {
            Err(HierarchyError::MissingFile(f)) => assert_eq!(f, "missing.map"),
            other => panic!("expected a missing-file error, got {other:?}"),
        }
    }
}
