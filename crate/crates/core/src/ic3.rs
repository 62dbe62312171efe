//! Incremental induction (IC3/PDR) over a finite instance: delta-encoded
//! frames, proof obligations, unsat-core clause generalization, pluggable
//! clause boosting (symmetry first, then range), forward propagation, and
//! convergence to an inductive invariant or a replayable counterexample.
//!
//! Frames live in one persistent solver session. Each frame delta has an
//! activation constant; a clause belongs to frame `i` when any delta `j ≥ i`
//! asserts it, so queries select a frame by assuming the activation
//! constants of all deltas at or above it. Clauses only move forward, so
//! nothing is ever retracted.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use crate::grounder::{Atom, Clause, Cube, FiniteInstance, GLit, State, G};
use crate::ir::Formula;
use crate::range::{boost_range, Verdict};
use crate::smt::{GroundSmt, Sat, Smt, SmtError, TRANS_ACT};
use crate::symmetry::{self, lift_clause, Group, Lifted};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoostMode {
    /// Plain ground IC3.
    None,
    /// Symmetry orbits only.
    Symmetry,
    /// Symmetry orbits, then range boosting per ordered sort.
    Full,
}

#[derive(Debug, Clone)]
pub struct Ic3Config {
    pub boost: BoostMode,
    /// Try dropping individual cube literals after the unsat-core shrink.
    pub literal_drop: bool,
    pub max_frames: usize,
    pub max_obligations: u64,
    pub wall_budget: Duration,
}

impl Default for Ic3Config {
    fn default() -> Self {
        Ic3Config {
            boost: BoostMode::Full,
            literal_drop: true,
            max_frames: 200,
            max_obligations: 2_000_000,
            wall_budget: Duration::from_secs(3 * 3600),
        }
    }
}

/// A learned clause together with its boosted generalization: the quantified
/// form (when the expansion contract held) and the full ground expansion.
#[derive(Debug, Clone)]
pub struct LearnedGroup {
    pub rep: Clause,
    pub lifted: Option<Lifted>,
    pub clauses: Vec<Clause>,
}

/// One invariant conjunct of a finished proof.
#[derive(Debug, Clone)]
pub struct Assertion {
    pub name: String,
    /// Closed formula; for unboosted clauses this is the ground conjunction
    /// spelled with constants.
    pub formula: Formula,
    pub quantified: bool,
    pub clauses: Vec<Clause>,
}

#[derive(Debug, Clone, Default)]
pub struct Stats {
    pub queries: u64,
    pub clauses_learned: u64,
    pub obligations: u64,
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct Proof {
    pub assertions: Vec<Assertion>,
    pub closing_frame: usize,
    /// Final delta-encoded frames (index 0 unused), for auditing.
    pub frames: Vec<Vec<LearnedGroup>>,
    pub stats: Stats,
}

/// Counterexample: states from an initial state to a property violation,
/// with the action instance taken at each step.
#[derive(Debug, Clone)]
pub struct Trace {
    pub states: Vec<State>,
    pub actions: Vec<(String, Vec<String>)>,
    pub stats: Stats,
}

#[derive(Debug)]
pub enum Outcome {
    Proof(Proof),
    Trace(Trace),
    Inconclusive(String, Stats),
}

/// Replays a trace against the instance: initial state satisfies Init,
/// every step satisfies its labeled action disjunct, and the final state
/// violates the property.
pub fn replay(inst: &FiniteInstance, trace: &Trace, property: &G) -> bool {
    if trace.states.is_empty() || trace.actions.len() + 1 != trace.states.len() {
        return false;
    }
    if !inst.eval(&inst.init, &trace.states[0]) {
        return false;
    }
    for (i, (action, args)) in trace.actions.iter().enumerate() {
        let d = match inst
            .disjuncts
            .iter()
            .find(|d| d.action == *action && d.args == *args)
        {
            Some(d) => d,
            None => return false,
        };
        let cur = &trace.states[i];
        let defs = inst.compute_defs(cur);
        let next = &trace.states[i + 1];
        let ndefs = inst.compute_defs(next);
        if !inst.eval_with(&d.formula, cur, &defs, Some((next, &ndefs))) {
            return false;
        }
    }
    let last = trace.states.last().unwrap();
    !inst.eval(property, last)
}

const INIT_ACT: &str = "frame.init";
const PROP_ACT: &str = "prop.cur";
const NEG_PROP_CUR: &str = "negprop.cur";
const NEG_PROP_NEXT: &str = "negprop.next";

struct TraceNode {
    state: State,
    /// Action taken from this state, and the node it leads to.
    step: Option<((String, Vec<String>), usize)>,
}

pub struct Ic3<'a> {
    inst: &'a FiniteInstance,
    cfg: Ic3Config,
    gs: GroundSmt<'a>,
    group: Group,
    /// Delta-encoded frames; index 0 is unused (F_0 = Init).
    frames: Vec<Vec<LearnedGroup>>,
    nodes: Vec<TraceNode>,
    next_act: u64,
    stats: Stats,
    started: Instant,
}

type SResult<T> = std::result::Result<T, SmtError>;

impl<'a> Ic3<'a> {
    pub fn new(inst: &'a FiniteInstance, property: G, cfg: Ic3Config) -> SResult<Self> {
        let mut gs = GroundSmt::new(inst, Smt::in_process(), true)?;
        // guarded context formulas: Init, property, and their negations
        let init = gs.g_text(&inst.init);
        let p_cur = gs.g_text(&property);
        let p_next = gs.g_text_next(&property);
        gs.smt.send(&format!("(declare-const {INIT_ACT} Bool)"))?;
        gs.smt.send(&format!("(assert (or (not {INIT_ACT}) {init}))"))?;
        gs.smt.send(&format!("(declare-const {PROP_ACT} Bool)"))?;
        gs.smt.send(&format!("(assert (or (not {PROP_ACT}) {p_cur}))"))?;
        gs.smt.send(&format!("(declare-const {NEG_PROP_CUR} Bool)"))?;
        gs.smt
            .send(&format!("(assert (or (not {NEG_PROP_CUR}) (not {p_cur})))"))?;
        gs.smt.send(&format!("(declare-const {NEG_PROP_NEXT} Bool)"))?;
        gs.smt
            .send(&format!("(assert (or (not {NEG_PROP_NEXT}) (not {p_next})))"))?;
        let group = symmetry::group(inst);
        Ok(Ic3 {
            inst,
            cfg,
            gs,
            group,
            frames: vec![Vec::new()],
            nodes: Vec::new(),
            next_act: 0,
            stats: Stats::default(),
            started: Instant::now(),
        })
    }

    fn out_of_budget(&self) -> Option<String> {
        if self.started.elapsed() > self.cfg.wall_budget {
            return Some("wall-clock budget exhausted".into());
        }
        if self.stats.obligations > self.cfg.max_obligations {
            return Some("obligation budget exhausted".into());
        }
        if self.frames.len() > self.cfg.max_frames {
            return Some("frame budget exhausted".into());
        }
        None
    }

    fn frame_act(i: usize) -> String {
        format!("frame.{i}")
    }

    /// Assumptions selecting frame `i` as the current-state constraint.
    fn frame_assumptions(&self, i: usize) -> Vec<String> {
        if i == 0 {
            return vec![INIT_ACT.to_string()];
        }
        let mut out = vec![PROP_ACT.to_string()];
        for j in i..self.frames.len() {
            out.push(Self::frame_act(j));
        }
        out
    }

    fn declare_frame(&mut self) -> SResult<()> {
        let i = self.frames.len();
        self.frames.push(Vec::new());
        self.gs
            .smt
            .send(&format!("(declare-const {} Bool)", Self::frame_act(i)))
    }

    fn assert_clause_at(&mut self, c: &Clause, frame: usize) -> SResult<()> {
        let lits: Vec<String> = c.0.iter().map(|&l| self.gs.lit_text(l, false)).collect();
        self.gs.smt.send(&format!(
            "(assert (or (not {}) {}))",
            Self::frame_act(frame),
            lits.join(" ")
        ))
    }

    /// The cube of a total state (booleans, enum values, definition atoms).
    fn state_cube(&self, s: &State) -> Cube {
        let defs = self.inst.compute_defs(s);
        let mut lits = Vec::new();
        for (i, &b) in s.bools.iter().enumerate() {
            lits.push(GLit::new(Atom::Bool(i as u32), b));
        }
        for (i, &d) in defs.iter().enumerate() {
            lits.push(GLit::new(Atom::Def(i as u32), d));
        }
        for (v, &val) in s.enums.iter().enumerate() {
            lits.push(GLit::new(
                Atom::EnumEq {
                    var: v as u32,
                    val: val as u32,
                },
                true,
            ));
        }
        Cube::new(lits)
    }

    fn check(&mut self, assumptions: &[String]) -> SResult<Sat> {
        let r = self.gs.smt.check_sat_assuming(assumptions)?;
        self.stats.queries = self.gs.smt.checks;
        Ok(r)
    }

    /// Is there a state in F_k with a successor violating the property?
    fn bad_successor(
        &mut self,
        k: usize,
    ) -> SResult<Option<(State, State, (String, Vec<String>))>> {
        let mut assumptions = self.frame_assumptions(k);
        assumptions.push(TRANS_ACT.to_string());
        assumptions.push(NEG_PROP_NEXT.to_string());
        match self.check(&assumptions)? {
            Sat::Sat => {
                let cur = self.gs.model_state(false)?;
                let next = self.gs.model_state(true)?;
                let action = self.gs.fired_action()?;
                Ok(Some((cur, next, action)))
            }
            _ => Ok(None),
        }
    }

    /// The 1-step query: F_{i-1} ∧ ¬cube ∧ N̂ ∧ cube′. On sat, the
    /// predecessor state and fired action; on unsat, the core sub-cube.
    fn one_step(
        &mut self,
        i: usize,
        cube: &[GLit],
        relative: bool,
    ) -> SResult<std::result::Result<Vec<GLit>, (State, (String, Vec<String>))>> {
        let mut assumptions = self.frame_assumptions(i - 1);
        assumptions.push(TRANS_ACT.to_string());
        if relative && !cube.is_empty() {
            let act = format!("blk.{}", self.next_act);
            self.next_act += 1;
            self.gs.smt.send(&format!("(declare-const {act} Bool)"))?;
            let lits: Vec<String> = cube
                .iter()
                .map(|l| self.gs.lit_text(l.negated(), false))
                .collect();
            self.gs
                .smt
                .send(&format!("(assert (or (not {act}) {}))", lits.join(" ")))?;
            assumptions.push(act);
        }
        let cube_texts: Vec<String> = cube.iter().map(|&l| self.gs.lit_text(l, true)).collect();
        assumptions.extend(cube_texts.iter().cloned());
        match self.check(&assumptions)? {
            Sat::Sat => {
                let pred = self.gs.model_state(false)?;
                let action = self.gs.fired_action()?;
                Ok(Err((pred, action)))
            }
            Sat::Unsat => {
                let failed = self.gs.smt.unsat_assumptions()?;
                let core: Vec<GLit> = cube
                    .iter()
                    .zip(&cube_texts)
                    .filter(|(_, t)| failed.contains(t))
                    .map(|(&l, _)| l)
                    .collect();
                Ok(Ok(core))
            }
            Sat::Unknown => Err(SmtError::Protocol("unknown from 1-step query".into())),
        }
    }

    /// Does the cube contain an initial state?
    fn intersects_init(&mut self, cube: &[GLit]) -> SResult<bool> {
        let mut assumptions = vec![INIT_ACT.to_string()];
        assumptions.extend(cube.iter().map(|&l| self.gs.lit_text(l, false)));
        Ok(self.check(&assumptions)? == Sat::Sat)
    }

    /// Shrinks an unreachable cube: unsat core, then init-exclusion repair,
    /// then one deterministic literal-drop pass.
    fn generalize(
        &mut self,
        i: usize,
        full: &Cube,
        core: Vec<GLit>,
    ) -> SResult<Vec<GLit>> {
        let mut cand = core;
        cand.sort();
        // repair: the blocking clause must not exclude any initial state
        while self.intersects_init(&cand)? {
            let model = self.gs.model_state(false)?;
            let defs = self.inst.compute_defs(&model);
            let fixed = full.0.iter().find(|l| {
                !cand.contains(l) && {
                    // literal false in the offending initial model
                    let v = match l.atom {
                        Atom::Bool(b) => model.bools[b as usize],
                        Atom::Def(d) => defs[d as usize],
                        Atom::EnumEq { var, val } => model.enums[var as usize] == val as usize,
                    };
                    v != l.pos
                }
            });
            match fixed {
                Some(&l) => {
                    cand.push(l);
                    cand.sort();
                }
                None => {
                    // cannot separate: fall back to the full cube
                    return Ok(full.0.clone());
                }
            }
        }
        if !self.cfg.literal_drop {
            return Ok(cand);
        }
        let mut idx = 0;
        while idx < cand.len() && cand.len() > 1 {
            let mut trial = cand.clone();
            trial.remove(idx);
            let ok = !self.intersects_init(&trial)?
                && matches!(self.one_step(i, &trial, true)?, Ok(_));
            if ok {
                cand = trial;
            } else {
                idx += 1;
            }
        }
        Ok(cand)
    }

    /// All ground clauses currently in frame `i` (delta union).
    fn frame_clauses(&self, i: usize) -> Vec<Clause> {
        let mut out = Vec::new();
        for delta in self.frames.iter().skip(i) {
            for g in delta {
                out.extend(g.clauses.iter().cloned());
            }
        }
        out
    }

    /// Learns the clause blocking `cube` at frame `i`, boosts it, and
    /// inserts the resulting group (subsumption-reduced).
    fn learn(&mut self, i: usize, cube: Vec<GLit>) -> SResult<()> {
        let rep = Cube::new(cube).negation();
        let group = match self.cfg.boost {
            BoostMode::None => LearnedGroup {
                rep: rep.clone(),
                lifted: None,
                clauses: vec![rep],
            },
            BoostMode::Symmetry | BoostMode::Full => {
                let inferred = symmetry::infer_quantified(self.inst, &self.group, &rep)?;
                if self.cfg.boost == BoostMode::Symmetry {
                    LearnedGroup {
                        rep,
                        lifted: inferred.lifted.clone(),
                        clauses: inferred.orbit,
                    }
                } else {
                    // range boost each symmetry-boosted representative;
                    // safety of a variant = Init containment + 1-step query
                    let inst = self.inst;
                    let mut probe = |set: &[Clause]| -> SResult<Verdict> {
                        for c in set {
                            let neg: Vec<GLit> = c.0.iter().map(|l| l.negated()).collect();
                            if self.intersects_init(&neg)? {
                                return Ok(Verdict::Unsafe);
                            }
                            if matches!(self.one_step(i, &neg, false)?, Err(_)) {
                                return Ok(Verdict::Unsafe);
                            }
                        }
                        Ok(Verdict::Safe)
                    };
                    // boost_range takes an infallible closure; stash errors
                    let mut failure = None;
                    let boosted = boost_range(inst, &inferred, &rep, |set| {
                        match probe(set) {
                            Ok(v) => v,
                            Err(e) => {
                                failure = Some(e);
                                Verdict::Unknown
                            }
                        }
                    })?;
                    if let Some(e) = failure {
                        return Err(e);
                    }
                    LearnedGroup {
                        rep,
                        lifted: boosted.lifted,
                        clauses: boosted.clauses,
                    }
                }
            }
        };
        self.insert_group(i, group)
    }

    fn insert_group(&mut self, i: usize, mut group: LearnedGroup) -> SResult<()> {
        let existing = self.frame_clauses(i);
        group
            .clauses
            .retain(|c| !existing.iter().any(|e| e.subsumes(c)));
        if group.clauses.is_empty() {
            return Ok(());
        }
        for c in group.clauses.clone() {
            self.assert_clause_at(&c, i)?;
        }
        self.stats.clauses_learned += group.clauses.len() as u64;
        self.frames[i].push(group);
        Ok(())
    }

    fn build_trace(&self, start: usize) -> Trace {
        let mut states = Vec::new();
        let mut actions = Vec::new();
        let mut at = Some(start);
        while let Some(n) = at {
            let node = &self.nodes[n];
            states.push(node.state.clone());
            match &node.step {
                Some((a, child)) => {
                    actions.push(a.clone());
                    at = Some(*child);
                }
                None => at = None,
            }
        }
        Trace {
            states,
            actions,
            stats: self.stats.clone(),
        }
    }

    /// Discharges all obligations at the current depth; `Err(trace)` on a
    /// counterexample.
    fn block_all(
        &mut self,
        mut queue: VecDeque<(usize, Cube, usize)>,
        depth: usize,
    ) -> SResult<std::result::Result<(), Outcome>> {
        while !queue.is_empty() {
            // lowest frame first, FIFO within a frame
            let idx = queue
                .iter()
                .enumerate()
                .min_by_key(|(i, (f, _, _))| (*f, *i))
                .map(|(i, _)| i)
                .unwrap();
            let (frame, cube, node) = queue.remove(idx).unwrap();
            self.stats.obligations += 1;
            if let Some(msg) = self.out_of_budget() {
                return Ok(Err(Outcome::Inconclusive(msg, self.stats.clone())));
            }
            match self.one_step(frame, &cube.0, true)? {
                Ok(core) => {
                    let shrunk = self.generalize(frame, &cube, core)?;
                    self.learn(frame, shrunk)?;
                    if frame < depth {
                        // re-enqueue forward: the state must stay blocked
                        queue.push_back((frame + 1, cube, node));
                    }
                }
                Err((pred, action)) => {
                    let pnode = self.nodes.len();
                    self.nodes.push(TraceNode {
                        state: pred.clone(),
                        step: Some((action, node)),
                    });
                    if self.inst.eval(&self.inst.init, &pred) {
                        return Ok(Err(Outcome::Trace(self.build_trace(pnode))));
                    }
                    debug_assert!(frame >= 1);
                    let pcube = self.state_cube(&pred);
                    // block the predecessor first, then retry this cube
                    queue.push_back((frame - 1, pcube, pnode));
                    queue.push_back((frame, cube, node));
                }
            }
        }
        Ok(Ok(()))
    }

    /// Moves clauses forward; returns the closing frame when a delta empties.
    fn propagate(&mut self, depth: usize) -> SResult<Option<usize>> {
        for i in 1..=depth {
            let groups: Vec<LearnedGroup> = self.frames[i].clone();
            let mut kept = Vec::new();
            for group in groups {
                let mut all_inductive = true;
                for c in &group.clauses {
                    let neg: Vec<GLit> = c.0.iter().map(|l| l.negated()).collect();
                    if matches!(self.one_step(i + 1, &neg, false)?, Err(_)) {
                        all_inductive = false;
                        break;
                    }
                }
                if all_inductive {
                    for c in group.clauses.clone() {
                        self.assert_clause_at(&c, i + 1)?;
                    }
                    self.frames[i + 1].push(group);
                } else {
                    kept.push(group);
                }
            }
            self.frames[i] = kept;
            if self.frames[i].is_empty() {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    fn extract(&self, closing: usize) -> Proof {
        let mut assertions = Vec::new();
        let mut n = 0;
        for delta in self.frames.iter().skip(closing + 1) {
            for group in delta {
                n += 1;
                let (formula, quantified) = match &group.lifted {
                    Some(l) => (l.to_formula(), true),
                    None => {
                        let parts: Vec<Formula> = group
                            .clauses
                            .iter()
                            .map(|c| lift_clause(self.inst, c, &Default::default()))
                            .collect();
                        let f = match parts.len() {
                            1 => parts.into_iter().next().unwrap(),
                            _ => Formula::And(parts),
                        };
                        (f, false)
                    }
                };
                assertions.push(Assertion {
                    name: format!("L{n}"),
                    formula,
                    quantified,
                    clauses: group.clauses.clone(),
                });
            }
        }
        Proof {
            assertions,
            closing_frame: closing,
            frames: self.frames.clone(),
            stats: self.stats.clone(),
        }
    }

    pub fn run(&mut self) -> SResult<Outcome> {
        // level 0: Init ∧ ¬P
        if self.check(&[INIT_ACT.to_string(), NEG_PROP_CUR.to_string()])? == Sat::Sat {
            let s = self.gs.model_state(false)?;
            return Ok(Outcome::Trace(Trace {
                states: vec![s],
                actions: vec![],
                stats: self.stats.clone(),
            }));
        }
        self.declare_frame()?; // frame 1
        let mut depth = 1;
        loop {
            if let Some(msg) = self.out_of_budget() {
                return Ok(Outcome::Inconclusive(msg, self.stats.clone()));
            }
            // strengthen F_depth until no bad successor remains
            while let Some((cur, next, action)) = self.bad_successor(depth)? {
                let term = self.nodes.len();
                self.nodes.push(TraceNode {
                    state: next,
                    step: None,
                });
                let start = self.nodes.len();
                self.nodes.push(TraceNode {
                    state: cur.clone(),
                    step: Some((action, term)),
                });
                if self.inst.eval(&self.inst.init, &cur) {
                    return Ok(Outcome::Trace(self.build_trace(start)));
                }
                let cube = self.state_cube(&cur);
                let mut queue = VecDeque::new();
                queue.push_back((depth, cube, start));
                match self.block_all(queue, depth)? {
                    Ok(()) => {}
                    Err(outcome) => return Ok(outcome),
                }
            }
            // push phase
            self.declare_frame()?;
            if let Some(closing) = self.propagate(depth)? {
                self.stats.depth = depth;
                return Ok(Outcome::Proof(self.extract(closing)));
            }
            depth += 1;
            self.stats.depth = depth;
        }
    }
}

/// Proves the property (a ground formula over the instance) by incremental
/// induction.
pub fn prove(inst: &FiniteInstance, property: &G, cfg: &Ic3Config) -> SResult<Outcome> {
    let mut engine = Ic3::new(inst, property.clone(), cfg.clone())?;
    engine.run()
}

/// Post-hoc frame audit: F_0 = Init; every clause of F_{i+1} passes the
/// 1-step unreachability query against F_i; every frame implies the
/// property. Rebuilds a fresh solver session.
pub fn audit_frames(
    inst: &FiniteInstance,
    property: &G,
    frames: &[Vec<LearnedGroup>],
) -> SResult<bool> {
    let mut gs = GroundSmt::new(inst, Smt::in_process(), true)?;
    let init = gs.g_text(&inst.init);
    let p_cur = gs.g_text(property);
    gs.smt.send(&format!("(declare-const {INIT_ACT} Bool)"))?;
    gs.smt.send(&format!("(assert (or (not {INIT_ACT}) {init}))"))?;
    gs.smt.send(&format!("(declare-const {PROP_ACT} Bool)"))?;
    gs.smt.send(&format!("(assert (or (not {PROP_ACT}) {p_cur}))"))?;
    for i in 1..frames.len() {
        gs.smt
            .send(&format!("(declare-const frame.{i} Bool)"))?;
    }
    for (i, delta) in frames.iter().enumerate().skip(1) {
        for group in delta {
            for c in &group.clauses {
                let lits: Vec<String> =
                    c.0.iter().map(|&l| gs.lit_text(l, false)).collect();
                gs.smt.send(&format!(
                    "(assert (or (not frame.{i}) {}))",
                    lits.join(" ")
                ))?;
            }
        }
    }
    let frame_assumptions = |i: usize| -> Vec<String> {
        if i == 0 {
            vec![INIT_ACT.to_string()]
        } else {
            let mut v = vec![PROP_ACT.to_string()];
            for j in i..frames.len() {
                v.push(format!("frame.{j}"));
            }
            v
        }
    };
    for i in 0..frames.len() - 1 {
        // every clause of F_{i+1} is 1-step unreachable from F_i
        let mut targets = Vec::new();
        for delta in frames.iter().skip(i + 1) {
            for group in delta {
                targets.extend(group.clauses.iter().cloned());
            }
        }
        for c in targets {
            let mut assumptions = frame_assumptions(i);
            assumptions.push(TRANS_ACT.to_string());
            for l in &c.0 {
                assumptions.push(gs.lit_text(l.negated(), true));
            }
            if gs.smt.check_sat_assuming(&assumptions)? != Sat::Unsat {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{bundled, corpus, parse_protocol};
    use crate::grounder::{instantiate, tuples, SizeAssignment};
    use std::collections::{HashSet, VecDeque};

    fn small_voting() -> FiniteInstance {
        instantiate(
            &bundled("voting").unwrap(),
            &SizeAssignment::new(&[("value", 2), ("acceptor", 2), ("ballot", 3)]),
        )
        .unwrap()
    }

    /// Explicit-state breadth-first search for a property violation.
    fn bfs_violation(inst: &FiniteInstance, property: &G) -> Option<usize> {
        let enum_domains: Vec<usize> = inst
            .enum_vars
            .iter()
            .map(|v| inst.sorts[v.sort].consts.len())
            .collect();
        let nbools = inst.bool_atoms.len();
        assert!(nbools <= 20, "instance too large for BFS");
        let mut start = Vec::new();
        for bbits in 0..(1usize << nbools) {
            for et in tuples(&enum_domains) {
                let s = State {
                    bools: (0..nbools).map(|i| bbits >> i & 1 == 1).collect(),
                    enums: et,
                };
                if inst.eval(&inst.init, &s) {
                    start.push(s);
                }
            }
        }
        let mut seen: HashSet<State> = start.iter().cloned().collect();
        let mut queue: VecDeque<(State, usize)> =
            start.into_iter().map(|s| (s, 0)).collect();
        while let Some((s, d)) = queue.pop_front() {
            if !inst.eval(property, &s) {
                return Some(d);
            }
            for disj in &inst.disjuncts {
                if let Some(n) = inst.apply_action(&s, disj) {
                    if seen.insert(n.clone()) {
                        queue.push_back((n, d + 1));
                    }
                }
            }
        }
        None
    }

    /// The proof invariant (property ∧ learned clauses) holds on all
    /// reachable states and is inductive (checked by enumeration).
    fn check_proof_by_enumeration(inst: &FiniteInstance, property: &G, proof: &Proof) {
        let holds = |s: &State| -> bool {
            let defs = inst.compute_defs(s);
            inst.eval_with(property, s, &defs, None)
                && proof.assertions.iter().all(|a| {
                    a.clauses
                        .iter()
                        .all(|c| inst.eval_with(&inst.clause_g(c), s, &defs, None))
                })
        };
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
                if inst.eval(&inst.init, &s) {
                    assert!(holds(&s), "invariant fails on an initial state");
                }
                if holds(&s) {
                    for disj in &inst.disjuncts {
                        if let Some(n) = inst.apply_action(&s, disj) {
                            assert!(
                                holds(&n),
                                "invariant not inductive via {} {:?}",
                                disj.action,
                                disj.args
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn trivial_property_proves_immediately() {
        let inst = small_voting();
        let outcome = prove(&inst, &G::True, &Ic3Config::default()).unwrap();
        match outcome {
            Outcome::Proof(p) => assert!(p.assertions.is_empty()),
            other => panic!("expected proof, got {other:?}"),
        }
    }

    #[test]
    fn voting_safety_is_proved_and_inductive() {
        let inst = small_voting();
        let safety = inst.safety.clone();
        let outcome = prove(&inst, &safety, &Ic3Config::default()).unwrap();
        match outcome {
            Outcome::Proof(p) => {
                assert!(!p.frames.is_empty());
                check_proof_by_enumeration(&inst, &safety, &p);
                assert!(audit_frames(&inst, &safety, &p.frames).unwrap());
            }
            other => panic!("expected proof, got {other:?}"),
        }
    }

    #[test]
    fn ground_mode_agrees_with_boosted_mode() {
        let inst = small_voting();
        let safety = inst.safety.clone();
        for boost in [BoostMode::None, BoostMode::Symmetry, BoostMode::Full] {
            let cfg = Ic3Config {
                boost,
                ..Default::default()
            };
            let outcome = prove(&inst, &safety, &cfg).unwrap();
            assert!(
                matches!(outcome, Outcome::Proof(_)),
                "boost mode {boost:?} failed to prove"
            );
        }
    }

    #[test]
    fn missing_quorum_axiom_yields_replayable_trace() {
        let p = parse_protocol(corpus::VOTING_NOAXIOM).unwrap();
        let inst = instantiate(
            &p,
            &SizeAssignment::new(&[("value", 2), ("acceptor", 2), ("ballot", 3)]),
        )
        .unwrap();
        let safety = inst.safety.clone();
        // BFS confirms a genuine violation exists
        assert!(bfs_violation(&inst, &safety).is_some());
        let outcome = prove(&inst, &safety, &Ic3Config::default()).unwrap();
        match outcome {
            Outcome::Trace(t) => {
                assert!(replay(&inst, &t, &safety), "trace must replay");
                assert!(t.states.len() >= 2);
            }
            other => panic!("expected trace, got {other:?}"),
        }
    }

    #[test]
    fn bfs_and_ic3_agree_on_small_instances() {
        // voting is safe; voting without the quorum axiom is not
        let safe = small_voting();
        assert!(bfs_violation(&safe, &safe.safety.clone()).is_none());

        let p = parse_protocol(corpus::VOTING_NOAXIOM).unwrap();
        let unsafe_inst = instantiate(
            &p,
            &SizeAssignment::new(&[("value", 2), ("acceptor", 2), ("ballot", 3)]),
        )
        .unwrap();
        assert!(bfs_violation(&unsafe_inst, &unsafe_inst.safety.clone()).is_some());
    }

    #[test]
    fn zero_budget_is_inconclusive_not_silent() {
        let inst = small_voting();
        let cfg = Ic3Config {
            wall_budget: Duration::from_secs(0),
            ..Default::default()
        };
        let outcome = prove(&inst, &inst.safety.clone(), &cfg).unwrap();
        assert!(matches!(outcome, Outcome::Inconclusive(_, _)));
    }

    #[test]
    fn duplicate_boosted_clause_is_suppressed() {
        let inst = small_voting();
        let safety = inst.safety.clone();
        let mut engine = Ic3::new(&inst, safety, Ic3Config::default()).unwrap();
        engine.declare_frame().unwrap();
        let c = Clause::new(vec![GLit::new(Atom::Bool(0), false)]);
        let group = LearnedGroup {
            rep: c.clone(),
            lifted: None,
            clauses: vec![c.clone()],
        };
        engine.insert_group(1, group.clone()).unwrap();
        let before = engine.frame_clauses(1).len();
        engine.insert_group(1, group).unwrap();
        assert_eq!(engine.frame_clauses(1).len(), before);
    }

    #[test]
    fn human_invariants_are_inductive_by_enumeration() {
        // oracle for certification: Safety ∧ A1 ∧ A2 from the published
        // invariant file is closed under Init and every transition
        let inst = small_voting();
        let human = crate::frontend::parse_assertions(
            corpus::VOTING_HUMAN_INV,
            &inst.protocol,
        )
        .unwrap();
        assert_eq!(human.len(), 2);
        let mut conjuncts = vec![inst.safety.clone()];
        for a in &human {
            conjuncts.push(inst.expand(&a.formula).unwrap());
        }
        let inv = crate::grounder::g_and(conjuncts);
        let holds = |s: &State| inst.eval(&inv, s);
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
                if inst.eval(&inst.init, &s) {
                    assert!(holds(&s), "human invariant fails on an initial state");
                }
                if holds(&s) {
                    for disj in &inst.disjuncts {
                        if let Some(n) = inst.apply_action(&s, disj) {
                            assert!(holds(&n), "human invariant not inductive");
                        }
                    }
                }
            }
        }
    }
}
