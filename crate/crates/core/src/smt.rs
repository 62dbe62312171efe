//! SMT-LIB2 client and ground-instance encoding.
//!
//! `Smt` speaks the textual protocol either to the bundled in-process engine
//! (the default) or to a solver child process. `GroundSmt` encodes a
//! `FiniteInstance` into a session: enum datatypes, current- and next-state
//! variables, auxiliary definition atoms constrained in both frames, and the
//! transition relation as labeled action disjuncts.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use thiserror::Error;

use qinv_solver::{Engine, Reader, Sexp};

use crate::grounder::{Atom, FiniteInstance, G, GLit, State};

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("solver i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver protocol error: {0}")]
    Protocol(String),
}

type Result<T> = std::result::Result<T, SmtError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sat {
    Sat,
    Unsat,
    Unknown,
}

enum Backend {
    InProcess(Box<Engine>),
    Child {
        child: Child,
        stdin: ChildStdin,
        stdout: BufReader<ChildStdout>,
        parse: Reader,
    },
}

pub struct Smt {
    backend: Backend,
    /// Number of satisfiability checks issued.
    pub checks: u64,
    /// When set, every command sent is recorded here.
    pub transcript: Option<Vec<String>>,
}

impl Smt {
    pub fn in_process() -> Self {
        Smt {
            backend: Backend::InProcess(Box::new(Engine::new())),
            checks: 0,
            transcript: None,
        }
    }

    pub fn child(path: &Path) -> Result<Self> {
        let mut child = Command::new(path)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().unwrap();
        let stdout = BufReader::new(child.stdout.take().unwrap());
        Ok(Smt {
            backend: Backend::Child {
                child,
                stdin,
                stdout,
                parse: Reader::new(),
            },
            checks: 0,
            transcript: None,
        })
    }

    /// Sends a command that produces no answer.
    pub fn send(&mut self, cmd: &str) -> Result<()> {
        if let Some(t) = &mut self.transcript {
            t.push(cmd.to_string());
        }
        match &mut self.backend {
            Backend::InProcess(engine) => {
                for form in parse_all(cmd)? {
                    if let Some(resp) = engine.handle(&form) {
                        if resp.starts_with("(error") {
                            return Err(SmtError::Protocol(resp));
                        }
                    }
                }
                Ok(())
            }
            Backend::Child { stdin, .. } => {
                writeln!(stdin, "{cmd}")?;
                stdin.flush()?;
                Ok(())
            }
        }
    }

    /// Sends a command and reads one answer form.
    pub fn query(&mut self, cmd: &str) -> Result<Sexp> {
        if let Some(t) = &mut self.transcript {
            t.push(cmd.to_string());
        }
        match &mut self.backend {
            Backend::InProcess(engine) => {
                let mut last = None;
                for form in parse_all(cmd)? {
                    if let Some(resp) = engine.handle(&form) {
                        last = Some(resp);
                    }
                }
                let resp =
                    last.ok_or_else(|| SmtError::Protocol(format!("no answer to {cmd}")))?;
                if resp.starts_with("(error") {
                    return Err(SmtError::Protocol(resp));
                }
                parse_one(&resp)
            }
            Backend::Child {
                stdin,
                stdout,
                parse,
                ..
            } => {
                writeln!(stdin, "{cmd}")?;
                stdin.flush()?;
                loop {
                    if let Some(form) = parse
                        .next_form()
                        .map_err(SmtError::Protocol)?
                    {
                        if form.atom().map(|a| a.starts_with("(error")) == Some(true) {
                            return Err(SmtError::Protocol(form.to_string()));
                        }
                        return Ok(form);
                    }
                    let mut line = String::new();
                    if stdout.read_line(&mut line)? == 0 {
                        return Err(SmtError::Protocol("solver closed its output".into()));
                    }
                    parse.push_str(&line);
                }
            }
        }
    }

    pub fn check_sat_assuming(&mut self, assumptions: &[String]) -> Result<Sat> {
        self.checks += 1;
        let cmd = if assumptions.is_empty() {
            "(check-sat)".to_string()
        } else {
            format!("(check-sat-assuming ({}))", assumptions.join(" "))
        };
        let ans = self.query(&cmd)?;
        match ans.atom() {
            Some("sat") => Ok(Sat::Sat),
            Some("unsat") => Ok(Sat::Unsat),
            Some("unknown") => Ok(Sat::Unknown),
            _ => Err(SmtError::Protocol(format!("bad check-sat answer: {ans}"))),
        }
    }

    /// After an unsat `check_sat_assuming`: the failed subset of assumptions,
    /// rendered exactly as they were passed.
    pub fn unsat_assumptions(&mut self) -> Result<Vec<String>> {
        let ans = self.query("(get-unsat-assumptions)")?;
        match ans {
            Sexp::List(items) => Ok(items.iter().map(|s| s.to_string()).collect()),
            other => Err(SmtError::Protocol(format!(
                "bad get-unsat-assumptions answer: {other}"
            ))),
        }
    }

    /// After sat: the values of the given terms, in order.
    pub fn values(&mut self, terms: &[String]) -> Result<Vec<String>> {
        if terms.is_empty() {
            return Ok(Vec::new());
        }
        let ans = self.query(&format!("(get-value ({}))", terms.join(" ")))?;
        let items = match ans {
            Sexp::List(items) => items,
            other => {
                return Err(SmtError::Protocol(format!("bad get-value answer: {other}")))
            }
        };
        if items.len() != terms.len() {
            return Err(SmtError::Protocol("get-value arity mismatch".into()));
        }
        items
            .iter()
            .map(|pair| match pair {
                Sexp::List(kv) if kv.len() == 2 => Ok(kv[1].to_string()),
                other => Err(SmtError::Protocol(format!("bad get-value pair: {other}"))),
            })
            .collect()
    }

    pub fn push(&mut self) -> Result<()> {
        self.send("(push 1)")
    }

    pub fn pop(&mut self) -> Result<()> {
        self.send("(pop 1)")
    }
}

impl Drop for Smt {
    fn drop(&mut self) {
        if let Backend::Child { stdin, child, .. } = &mut self.backend {
            let _ = writeln!(stdin, "(exit)");
            let _ = stdin.flush();
            let _ = child.wait();
        }
    }
}

fn parse_all(text: &str) -> Result<Vec<Sexp>> {
    let mut reader = Reader::new();
    reader.push_str(text);
    let mut out = Vec::new();
    while let Some(f) = reader.next_form().map_err(SmtError::Protocol)? {
        out.push(f);
    }
    Ok(out)
}

fn parse_one(text: &str) -> Result<Sexp> {
    let mut forms = parse_all(text)?;
    if forms.len() == 1 {
        Ok(forms.pop().unwrap())
    } else {
        Err(SmtError::Protocol(format!("expected one form: {text}")))
    }
}

/// Encoding of a finite instance into an `Smt` session.
pub struct GroundSmt<'a> {
    pub inst: &'a FiniteInstance,
    pub smt: Smt,
    /// Selector names, one per transition disjunct (`fire.<action>.<args>`).
    pub selectors: Vec<String>,
    pub has_transition: bool,
}

impl<'a> GroundSmt<'a> {
    /// Declares all state variables (and, if `with_transition`, the
    /// next-state copies, disjunct selectors, and the transition relation)
    /// and asserts the definition biconditionals for every declared frame.
    pub fn new(inst: &'a FiniteInstance, smt: Smt, with_transition: bool) -> Result<Self> {
        Self::build(inst, smt, with_transition, true)
    }

    /// Declares current-state atoms only and leaves definition atoms
    /// unconstrained — for propositional equivalence checks.
    pub fn free_atoms(inst: &'a FiniteInstance, smt: Smt) -> Result<Self> {
        Self::build(inst, smt, false, false)
    }

    fn build(
        inst: &'a FiniteInstance,
        mut smt: Smt,
        with_transition: bool,
        constrain_defs: bool,
    ) -> Result<Self> {
        // enum datatypes for sorts used by state functions
        let mut declared = vec![false; inst.sorts.len()];
        for v in &inst.enum_vars {
            if !declared[v.sort] {
                declared[v.sort] = true;
                let t = &inst.sorts[v.sort];
                let ctors: Vec<String> = t.consts.iter().map(|c| format!("({c})")).collect();
                smt.send(&format!(
                    "(declare-datatype {} ({}))",
                    t.name,
                    ctors.join(" ")
                ))?;
            }
        }
        for prefix in frame_prefixes(with_transition) {
            for i in 0..inst.bool_atoms.len() {
                smt.send(&format!(
                    "(declare-const {} Bool)",
                    atom_name(inst, Atom::Bool(i as u32), prefix)
                ))?;
            }
            for i in 0..inst.def_atoms.len() {
                smt.send(&format!(
                    "(declare-const {} Bool)",
                    atom_name(inst, Atom::Def(i as u32), prefix)
                ))?;
            }
            for (vi, v) in inst.enum_vars.iter().enumerate() {
                smt.send(&format!(
                    "(declare-const {}{} {})",
                    prefix,
                    inst.enum_var_name(vi as u32),
                    inst.sorts[v.sort].name
                ))?;
            }
            // definition atoms are constrained, not free, in every frame
            if constrain_defs {
                for (di, body) in &inst.def_constraints {
                    let head = atom_name(inst, Atom::Def(*di), prefix);
                    let b = g_smt_at(inst, body, prefix);
                    smt.send(&format!("(assert (= {head} {b}))"))?;
                }
            }
        }

        let mut selectors = Vec::new();
        if with_transition {
            for d in &inst.disjuncts {
                let name = format!("fire.{}.{}", d.action, d.args.join("."));
                smt.send(&format!("(declare-const {name} Bool)"))?;
                smt.send(&format!(
                    "(assert (= {name} {}))",
                    g_smt(inst, &d.formula)
                ))?;
                selectors.push(name);
            }
            // the transition step itself is activated by assumption, so the
            // same session also serves single-state queries
            smt.send(&format!("(declare-const {TRANS_ACT} Bool)"))?;
            smt.send(&format!(
                "(assert (or (not {TRANS_ACT}) {}))",
                selectors.join(" ")
            ))?;
        }

        Ok(GroundSmt {
            inst,
            smt,
            selectors,
            has_transition: with_transition,
        })
    }

    pub fn assert_g(&mut self, g: &G) -> Result<()> {
        let text = g_smt(self.inst, g);
        self.smt.send(&format!("(assert {text})"))
    }

    pub fn g_text(&self, g: &G) -> String {
        g_smt(self.inst, g)
    }

    /// Renders a formula over the next-state copies of the variables.
    pub fn g_text_next(&self, g: &G) -> String {
        g_smt_at(self.inst, g, NEXT)
    }

    pub fn lit_text(&self, l: GLit, primed: bool) -> String {
        lit_smt(self.inst, l, if primed { NEXT } else { "" })
    }

    /// Reads the current-state model as a complete assignment.
    pub fn model_state(&mut self, primed: bool) -> Result<State> {
        let prefix = if primed { NEXT } else { "" };
        let inst = self.inst;
        let mut terms: Vec<String> = (0..inst.bool_atoms.len())
            .map(|i| atom_name(inst, Atom::Bool(i as u32), prefix))
            .collect();
        terms.extend((0..inst.enum_vars.len()).map(|i| {
            format!("{}{}", prefix, inst.enum_var_name(i as u32))
        }));
        let vals = self.smt.values(&terms)?;
        let nb = inst.bool_atoms.len();
        let bools = vals[..nb].iter().map(|v| v == "true").collect();
        let enums = vals[nb..]
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let sort = &inst.sorts[inst.enum_vars[i].sort];
                sort.consts
                    .iter()
                    .position(|c| c == v)
                    .ok_or_else(|| SmtError::Protocol(format!("bad enum value {v}")))
            })
            .collect::<Result<_>>()?;
        Ok(State { bools, enums })
    }

    /// After sat: which transition disjunct fired (action name and arguments).
    pub fn fired_action(&mut self) -> Result<(String, Vec<String>)> {
        let vals = self.smt.values(&self.selectors.clone())?;
        for (i, v) in vals.iter().enumerate() {
            if v == "true" {
                let d = &self.inst.disjuncts[i];
                return Ok((d.action.clone(), d.args.clone()));
            }
        }
        Err(SmtError::Protocol("no transition disjunct fired".into()))
    }
}

pub const NEXT: &str = "next.";

/// Assumption literal that activates the transition-relation disjunction.
pub const TRANS_ACT: &str = "trans";

fn frame_prefixes(with_next: bool) -> &'static [&'static str] {
    if with_next {
        &["", NEXT]
    } else {
        &[""]
    }
}

fn atom_name(inst: &FiniteInstance, atom: Atom, prefix: &str) -> String {
    format!("{prefix}{}", inst.atom_name(atom))
}

fn lit_smt(inst: &FiniteInstance, l: GLit, prefix: &str) -> String {
    let pos = match l.atom {
        Atom::Bool(_) | Atom::Def(_) => atom_name(inst, l.atom, prefix),
        Atom::EnumEq { var, val } => {
            let info = &inst.enum_vars[var as usize];
            format!(
                "(= {}{} {})",
                prefix,
                inst.enum_var_name(var),
                inst.sorts[info.sort].consts[val as usize]
            )
        }
    };
    if l.pos {
        pos
    } else {
        format!("(not {pos})")
    }
}

/// Renders a ground formula; next-state literals get the `next.` prefix.
pub fn g_smt(inst: &FiniteInstance, g: &G) -> String {
    g_smt_at(inst, g, "")
}

fn g_smt_at(inst: &FiniteInstance, g: &G, prefix: &str) -> String {
    match g {
        G::True => "true".into(),
        G::False => "false".into(),
        G::Lit(l) => lit_smt(inst, *l, prefix),
        G::Next(l) => lit_smt(inst, *l, NEXT),
        G::Not(inner) => format!("(not {})", g_smt_at(inst, inner, prefix)),
        G::And(parts) => {
            let items: Vec<String> = parts.iter().map(|p| g_smt_at(inst, p, prefix)).collect();
            format!("(and {})", items.join(" "))
        }
        G::Or(parts) => {
            let items: Vec<String> = parts.iter().map(|p| g_smt_at(inst, p, prefix)).collect();
            format!("(or {})", items.join(" "))
        }
        G::Iff(a, b) => format!(
            "(= {} {})",
            g_smt_at(inst, a, prefix),
            g_smt_at(inst, b, prefix)
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::bundled;
    use crate::grounder::{instantiate, tuples, SizeAssignment};
    use rand::prelude::*;

    fn voting_instance() -> FiniteInstance {
        let p = bundled("voting").unwrap();
        instantiate(
            &p,
            &SizeAssignment::new(&[("value", 2), ("acceptor", 3), ("ballot", 4)]),
        )
        .unwrap()
    }

    #[test]
    fn init_is_satisfiable_and_implies_safety() {
        let inst = voting_instance();
        let mut gs = GroundSmt::new(&inst, Smt::in_process(), false).unwrap();
        gs.smt.push().unwrap();
        let init = gs.g_text(&inst.init);
        gs.smt.send(&format!("(assert {init})")).unwrap();
        assert_eq!(gs.smt.check_sat_assuming(&[]).unwrap(), Sat::Sat);
        let safety = gs.g_text(&inst.safety);
        gs.smt.send(&format!("(assert (not {safety}))")).unwrap();
        assert_eq!(gs.smt.check_sat_assuming(&[]).unwrap(), Sat::Unsat);
        gs.smt.pop().unwrap();
    }

    #[test]
    fn no_votes_can_be_cast_from_init() {
        // at init maxBal = bmin everywhere, so isSafeAt fails and only
        // IncreaseMaxBal is enabled: no successor has a vote recorded
        let inst = voting_instance();
        let mut gs = GroundSmt::new(&inst, Smt::in_process(), true).unwrap();
        gs.smt.send("(assert trans)").unwrap();
        let init = gs.g_text(&inst.init);
        gs.smt.send(&format!("(assert {init})")).unwrap();
        assert_eq!(gs.smt.check_sat_assuming(&[]).unwrap(), Sat::Sat);
        let votes = inst
            .protocol
            .symbols
            .iter()
            .position(|s| s.name == "votes")
            .unwrap();
        let some_vote: Vec<String> = (0..inst.bool_atoms.len())
            .filter(|&i| inst.bool_atoms[i].symbol == votes)
            .map(|i| format!("next.{}", inst.atom_name(Atom::Bool(i as u32))))
            .collect();
        gs.smt
            .send(&format!("(assert (or {}))", some_vote.join(" ")))
            .unwrap();
        assert_eq!(gs.smt.check_sat_assuming(&[]).unwrap(), Sat::Unsat);
    }

    #[test]
    fn increase_max_bal_fires_from_init() {
        let inst = voting_instance();
        let mut gs = GroundSmt::new(&inst, Smt::in_process(), true).unwrap();
        gs.smt.send("(assert trans)").unwrap();
        let init = gs.g_text(&inst.init);
        gs.smt.send(&format!("(assert {init})")).unwrap();
        assert_eq!(gs.smt.check_sat_assuming(&[]).unwrap(), Sat::Sat);
        let (action, _args) = gs.fired_action().unwrap();
        assert_eq!(action, "IncreaseMaxBal");
        let next = gs.model_state(true).unwrap();
        assert!(next.bools.iter().all(|&b| !b), "no votes appear");
        assert!(next.enums.iter().any(|&e| e != 0), "some maxBal moved");
    }

    #[test]
    fn solver_definition_atoms_match_direct_evaluation() {
        // random states: the solver's forced definition-atom values must
        // agree with the grounder's sequential evaluation
        let inst = voting_instance();
        let mut gs = GroundSmt::new(&inst, Smt::in_process(), false).unwrap();
        let mut rng = StdRng::seed_from_u64(0x5eed);
        for _ in 0..40 {
            let s = State {
                bools: (0..inst.bool_atoms.len()).map(|_| rng.gen()).collect(),
                enums: (0..inst.enum_vars.len())
                    .map(|i| {
                        rng.gen_range(0..inst.sorts[inst.enum_vars[i].sort].consts.len())
                    })
                    .collect(),
            };
            gs.smt.push().unwrap();
            for (i, &b) in s.bools.iter().enumerate() {
                let n = inst.atom_name(Atom::Bool(i as u32));
                let lit = if b { n } else { format!("(not {n})") };
                gs.smt.send(&format!("(assert {lit})")).unwrap();
            }
            for (i, &e) in s.enums.iter().enumerate() {
                let sort = &inst.sorts[inst.enum_vars[i].sort];
                gs.smt
                    .send(&format!(
                        "(assert (= {} {}))",
                        inst.enum_var_name(i as u32),
                        sort.consts[e]
                    ))
                    .unwrap();
            }
            assert_eq!(gs.smt.check_sat_assuming(&[]).unwrap(), Sat::Sat);
            let expected = inst.compute_defs(&s);
            let names: Vec<String> = (0..inst.def_atoms.len())
                .map(|i| inst.atom_name(Atom::Def(i as u32)))
                .collect();
            let got = gs.smt.values(&names).unwrap();
            for (i, v) in got.iter().enumerate() {
                assert_eq!(v == "true", expected[i], "{}", names[i]);
            }
            gs.smt.pop().unwrap();
        }
    }

    #[test]
    fn transition_enabledness_matches_direct_evaluation() {
        // tiny instance, every state × disjunct: the solver finds a
        // successor exactly when the guard evaluates true
        let p = bundled("voting").unwrap();
        let inst = instantiate(
            &p,
            &SizeAssignment::new(&[("value", 1), ("acceptor", 1), ("ballot", 2)]),
        )
        .unwrap();
        let mut gs = GroundSmt::new(&inst, Smt::in_process(), true).unwrap();
        gs.smt.send("(assert trans)").unwrap();
        let enum_domains: Vec<usize> = inst
            .enum_vars
            .iter()
            .map(|v| inst.sorts[v.sort].consts.len())
            .collect();
        let nbools = inst.bool_atoms.len();
        for bbits in 0..(1usize << nbools) {
            for et in tuples(&enum_domains) {
                let s = State {
                    bools: (0..nbools).map(|i| bbits >> i & 1 == 1).collect(),
                    enums: et,
                };
                let defs = inst.compute_defs(&s);
                for (di, d) in inst.disjuncts.iter().enumerate() {
                    gs.smt.push().unwrap();
                    for (i, &b) in s.bools.iter().enumerate() {
                        let n = inst.atom_name(Atom::Bool(i as u32));
                        let lit = if b { n } else { format!("(not {n})") };
                        gs.smt.send(&format!("(assert {lit})")).unwrap();
                    }
                    for (i, &e) in s.enums.iter().enumerate() {
                        let sort = &inst.sorts[inst.enum_vars[i].sort];
                        gs.smt
                            .send(&format!(
                                "(assert (= {} {}))",
                                inst.enum_var_name(i as u32),
                                sort.consts[e]
                            ))
                            .unwrap();
                    }
                    gs.smt
                        .send(&format!("(assert {})", gs.selectors[di].clone()))
                        .unwrap();
                    let sat = gs.smt.check_sat_assuming(&[]).unwrap();
                    let enabled = inst.eval_with(&d.guard, &s, &defs, None);
                    assert_eq!(sat == Sat::Sat, enabled, "{} {:?}", d.action, d.args);
                    gs.smt.pop().unwrap();
                }
            }
        }
    }

    #[test]
    fn child_process_transport_answers_queries() {
        // the solver binary lives next to the test target directory; skip
        // quietly if it has not been built yet
        let mut path = std::env::current_exe().unwrap();
        path.pop(); // deps/
        path.pop(); // debug/
        path.push("qinv-smt");
        if !path.exists() {
            let ok = std::process::Command::new("cargo")
                .args(["build", "-p", "qinv-solver", "--bin", "qinv-smt"])
                .status()
                .map(|s| s.success())
                .unwrap_or(false);
            if !ok || !path.exists() {
                return;
            }
        }
        let mut smt = Smt::child(&path).unwrap();
        smt.send("(declare-const x Bool)").unwrap();
        smt.send("(assert x)").unwrap();
        assert_eq!(smt.check_sat_assuming(&[]).unwrap(), Sat::Sat);
        assert_eq!(smt.values(&["x".into()]).unwrap(), ["true"]);
        smt.send("(assert (not x))").unwrap();
        assert_eq!(smt.check_sat_assuming(&[]).unwrap(), Sat::Unsat);
    }

    #[test]
    fn unsat_assumptions_are_returned_verbatim() {
        let inst = voting_instance();
        let mut gs = GroundSmt::new(&inst, Smt::in_process(), false).unwrap();
        let a = inst.atom_name(Atom::Bool(0));
        let b = inst.atom_name(Atom::Bool(1));
        gs.smt
            .send(&format!("(assert (or (not {a}) (not {b})))"))
            .unwrap();
        let assumptions = vec![a.clone(), b.clone()];
        assert_eq!(
            gs.smt.check_sat_assuming(&assumptions).unwrap(),
            Sat::Unsat
        );
        let failed = gs.smt.unsat_assumptions().unwrap();
        assert!(!failed.is_empty());
        assert!(failed.iter().all(|f| assumptions.contains(f)));
    }
}
