//! Symmetry boosting: orbits of learned clauses under the product of
//! symmetric groups acting on constants (with the induced action on
//! dependent-subset constants), and inference of a quantified assertion
//! logically equivalent to the orbit at the instance size.
//!
//! The inference rule is a per-sort ladder — universal variables with
//! pairwise-distinctness guards, then one trailing existential when the
//! clause touches every constant of a sort — and every candidate is gated
//! by a solver-checked expansion-equivalence contract. When no candidate
//! passes, the explicit ground orbit is kept.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::grounder::{Atom, Clause, FiniteInstance, GLit, G};
use crate::ir::{CmpOp, Formula, Role, Term, Type};
use crate::smt::{GroundSmt, Sat, Smt, SmtError};

/// One symmetry of the instance: a permutation of each sort's constant
/// table (identity on ordered sorts; induced on subset sorts).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupElem {
    /// `maps[sort][i]` = image constant index.
    pub maps: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct Group {
    pub elems: Vec<GroupElem>,
}

impl Group {
    pub fn order(&self) -> usize {
        self.elems.len()
    }
}

/// All permutations of `0..n`.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    fn heap(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, cur, out);
            if k % 2 == 0 {
                cur.swap(i, k - 1);
            } else {
                cur.swap(0, k - 1);
            }
        }
    }
    heap(n, &mut cur, &mut out);
    out.sort();
    out.dedup();
    out
}

/// The induced permutation on a subset sort's constant table, if the table
/// is closed under the base permutation.
pub fn induced(inst: &FiniteInstance, sort: usize, base_perm: &[usize]) -> Option<Vec<usize>> {
    let t = &inst.sorts[sort];
    let mut map = Vec::with_capacity(t.consts.len());
    for bitmap in &t.members {
        let mut image = vec![false; bitmap.len()];
        for (i, &m) in bitmap.iter().enumerate() {
            if m {
                image[base_perm[i]] = true;
            }
        }
        map.push(t.members.iter().position(|b| *b == image)?);
    }
    Some(map)
}

/// The instance's symmetry group: the product over symmetric sorts of all
/// constant permutations that fix pinned (rigid-named) constants and under
/// which every dependent-subset table is closed.
pub fn group(inst: &FiniteInstance) -> Group {
    let pinned = pinned_consts(inst);
    // per-sort candidate permutations
    let mut per_sort: Vec<Vec<Vec<usize>>> = Vec::new();
    for (si, t) in inst.sorts.iter().enumerate() {
        let n = t.consts.len();
        if t.ordered || t.base.is_some() {
            per_sort.push(vec![(0..n).collect()]); // placeholder; subsets filled below
            continue;
        }
        let fixed = pinned.get(&si).cloned().unwrap_or_default();
        let perms = permutations(n)
            .into_iter()
            .filter(|p| fixed.iter().all(|&c| p[c] == c))
            .collect();
        per_sort.push(perms);
    }
    // cartesian product over the symmetric sorts
    let mut elems = vec![GroupElem {
        maps: vec![Vec::new(); inst.sorts.len()],
    }];
    for (si, options) in per_sort.iter().enumerate() {
        let mut next = Vec::with_capacity(elems.len() * options.len());
        for e in &elems {
            for p in options {
                let mut e2 = e.clone();
                e2.maps[si] = p.clone();
                next.push(e2);
            }
        }
        elems = next;
    }
    // fill in induced subset maps; drop elements the table is not closed under
    let mut out = Vec::new();
    'elem: for mut e in elems {
        for (si, t) in inst.sorts.iter().enumerate() {
            if let Some(base) = t.base {
                match induced(inst, si, &e.maps[base]) {
                    Some(m) => e.maps[si] = m,
                    None => continue 'elem,
                }
            }
        }
        out.push(e);
    }
    Group { elems: out }
}

/// Constants that are the value of a 0-ary rigid symbol; the group fixes
/// them and quantifier inference never binds them.
pub fn pinned_consts(inst: &FiniteInstance) -> BTreeMap<usize, BTreeSet<usize>> {
    let mut out: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for sym in &inst.protocol.symbols {
        if sym.role == Role::Rigid && sym.args.is_empty() {
            if let Type::Sort(_) = sym.result {
                if let Some((si, ci)) = inst.const_lookup(&sym.name) {
                    out.entry(si).or_default().insert(ci);
                }
            }
        }
    }
    out
}

pub fn apply_atom(inst: &FiniteInstance, e: &GroupElem, atom: Atom) -> Atom {
    let map_args = |symbol: usize, args: &[usize]| -> Vec<usize> {
        let sym = &inst.protocol.symbols[symbol];
        sym.args
            .iter()
            .zip(args)
            .map(|(s, &ci)| {
                let si = inst.sort_idx(s).unwrap();
                let m = &e.maps[si];
                if m.is_empty() {
                    ci
                } else {
                    m[ci]
                }
            })
            .collect()
    };
    match atom {
        Atom::Bool(i) => {
            let info = &inst.bool_atoms[i as usize];
            Atom::Bool(
                inst.bool_atom(info.symbol, &map_args(info.symbol, &info.args))
                    .unwrap(),
            )
        }
        Atom::Def(i) => {
            let info = &inst.def_atoms[i as usize];
            Atom::Def(
                inst.def_atom(info.symbol, &map_args(info.symbol, &info.args))
                    .unwrap(),
            )
        }
        Atom::EnumEq { var, val } => {
            let info = &inst.enum_vars[var as usize];
            let m = &e.maps[info.sort];
            let new_val = if m.is_empty() {
                val
            } else {
                m[val as usize] as u32
            };
            Atom::EnumEq {
                var: inst
                    .enum_var(info.symbol, &map_args(info.symbol, &info.args))
                    .unwrap(),
                val: new_val,
            }
        }
    }
}

pub fn apply_clause(inst: &FiniteInstance, e: &GroupElem, c: &Clause) -> Clause {
    Clause::new(
        c.0.iter()
            .map(|l| GLit::new(apply_atom(inst, e, l.atom), l.pos))
            .collect(),
    )
}

/// The clause's orbit under the group — query-free, sorted, deduplicated.
pub fn orbit(inst: &FiniteInstance, g: &Group, c: &Clause) -> Vec<Clause> {
    let mut out: Vec<Clause> = g.elems.iter().map(|e| apply_clause(inst, e, c)).collect();
    out.sort();
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quant {
    Forall,
    Exists,
}

/// A clause lifted to quantified variables: a ∀*∃* prefix, guard atoms
/// (distinctness, pinned-constant exclusion, order constraints), and a
/// disjunctive matrix.
#[derive(Debug, Clone)]
pub struct Lifted {
    pub foralls: Vec<(String, String)>,
    pub exists: Vec<(String, String)>,
    /// Guards over universal variables (antecedent of an implication).
    pub guards: Vec<Formula>,
    /// Guards over existential variables (conjoined under the ∃).
    pub exists_guards: Vec<Formula>,
    pub matrix: Formula,
}

impl Lifted {
    pub fn to_formula(&self) -> Formula {
        let mut body = self.matrix.clone();
        if !self.exists_guards.is_empty() {
            let mut parts = self.exists_guards.clone();
            parts.push(body);
            body = Formula::And(parts);
        }
        if !self.exists.is_empty() {
            body = Formula::Exists(self.exists.clone(), Box::new(body));
        }
        if !self.guards.is_empty() {
            body = Formula::implies(Formula::And(self.guards.clone()), body);
        }
        if !self.foralls.is_empty() {
            body = Formula::Forall(self.foralls.clone(), Box::new(body));
        }
        body
    }
}

/// Result of quantifier inference for one learned clause.
#[derive(Debug, Clone)]
pub struct Inferred {
    /// The accepted quantified form, if any candidate passed the
    /// expansion-equivalence contract.
    pub lifted: Option<Lifted>,
    /// The ground orbit the assertion stands for.
    pub orbit: Vec<Clause>,
}

impl Inferred {
    pub fn formula(&self) -> Option<Formula> {
        self.lifted.as_ref().map(|l| l.to_formula())
    }
}

/// Substitution from (sort, constant) to a variable term.
type Subs = HashMap<(usize, usize), String>;

/// Names of pinned constants by their rigid symbol (e.g. index 0 of the
/// value sort prints as `none`), so lifted assertions stay meaningful
/// across instance sizes.
pub fn pinned_names(inst: &FiniteInstance) -> HashMap<(usize, usize), String> {
    let mut out = HashMap::new();
    for sym in &inst.protocol.symbols {
        if sym.role == Role::Rigid && sym.args.is_empty() {
            if let Type::Sort(_) = sym.result {
                if let Some(key) = inst.const_lookup(&sym.name) {
                    out.insert(key, sym.name.clone());
                }
            }
        }
    }
    out
}

/// Lifts a single literal to a formula, replacing mapped constants by
/// variables and leaving the rest as named constants.
fn lift_lit(inst: &FiniteInstance, l: GLit, subs: &Subs) -> Formula {
    let pinned = pinned_names(inst);
    let term = |sort: usize, ci: usize| -> Term {
        match subs.get(&(sort, ci)) {
            Some(v) => Term::Var(v.clone()),
            None => match pinned.get(&(sort, ci)) {
                Some(name) => Term::Const(name.clone()),
                None => Term::Const(inst.sorts[sort].consts[ci].clone()),
            },
        }
    };
    let args_of = |symbol: usize, args: &[usize]| -> Vec<Term> {
        let sym = &inst.protocol.symbols[symbol];
        sym.args
            .iter()
            .zip(args)
            .map(|(s, &ci)| term(inst.sort_idx(s).unwrap(), ci))
            .collect()
    };
    let pos = match l.atom {
        Atom::Bool(i) => {
            let info = &inst.bool_atoms[i as usize];
            let name = inst.protocol.symbols[info.symbol].name.clone();
            Formula::App(name, args_of(info.symbol, &info.args))
        }
        Atom::Def(i) => {
            let info = &inst.def_atoms[i as usize];
            let name = inst.protocol.symbols[info.symbol].name.clone();
            Formula::App(name, args_of(info.symbol, &info.args))
        }
        Atom::EnumEq { var, val } => {
            let info = &inst.enum_vars[var as usize];
            let name = inst.protocol.symbols[info.symbol].name.clone();
            let lhs = Term::App(name, args_of(info.symbol, &info.args));
            Formula::Eq(lhs, term(info.sort, val as usize))
        }
    };
    if l.pos {
        pos
    } else {
        Formula::not(pos)
    }
}

/// Lifts a clause body (disjunction of literals) under a substitution.
pub fn lift_clause(inst: &FiniteInstance, c: &Clause, subs: &Subs) -> Formula {
    let lits: Vec<Formula> = c.0.iter().map(|&l| lift_lit(inst, l, subs)).collect();
    match lits.len() {
        1 => lits.into_iter().next().unwrap(),
        _ => Formula::Or(lits),
    }
}

/// Constants of each non-ordered sort mentioned anywhere in the clause.
pub fn clause_consts(inst: &FiniteInstance, c: &Clause) -> BTreeMap<usize, BTreeSet<usize>> {
    let mut out: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    fn add_args(
        inst: &FiniteInstance,
        out: &mut BTreeMap<usize, BTreeSet<usize>>,
        symbol: usize,
        args: &[usize],
    ) {
        let sym = &inst.protocol.symbols[symbol];
        for (s, &ci) in sym.args.iter().zip(args) {
            let si = inst.sort_idx(s).unwrap();
            out.entry(si).or_default().insert(ci);
        }
    }
    for l in &c.0 {
        match l.atom {
            Atom::Bool(i) => {
                let info = inst.bool_atoms[i as usize].clone();
                add_args(inst, &mut out, info.symbol, &info.args);
            }
            Atom::Def(i) => {
                let info = inst.def_atoms[i as usize].clone();
                add_args(inst, &mut out, info.symbol, &info.args);
            }
            Atom::EnumEq { var, val } => {
                let info = inst.enum_vars[var as usize].clone();
                add_args(inst, &mut out, info.symbol, &info.args);
                out.entry(info.sort).or_default().insert(val as usize);
            }
        }
    }
    out
}

/// Solver check: does the formula's expansion at this instance equal the
/// conjunction of the given clauses, treating every atom (including
/// definition atoms) as free?
pub fn expansion_equivalent(
    inst: &FiniteInstance,
    f: &Formula,
    clauses: &[Clause],
) -> Result<bool, SmtError> {
    let expanded = inst
        .expand(f)
        .map_err(|e| SmtError::Protocol(e.to_string()))?;
    let mut gs = GroundSmt::free_atoms(inst, Smt::in_process())?;
    let lhs = gs.g_text(&expanded);
    let rhs_parts: Vec<String> = clauses
        .iter()
        .map(|c| gs.g_text(&inst.clause_g(c)))
        .collect();
    let rhs = match rhs_parts.len() {
        0 => "true".to_string(),
        1 => rhs_parts.into_iter().next().unwrap(),
        _ => format!("(and {})", rhs_parts.join(" ")),
    };
    gs.smt.send(&format!("(assert (not (= {lhs} {rhs})))"))?;
    Ok(gs.smt.check_sat_assuming(&[])? == Sat::Unsat)
}

/// Fresh variable name for a sort: upper-cased sort prefix plus index.
pub fn sort_var(inst: &FiniteInstance, sort: usize, i: usize) -> String {
    format!(
        "{}{}",
        inst.protocol.sorts[sort].prefix.to_uppercase(),
        i + 1
    )
}

/// Per-sort quantification choice in the inference ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SortPlan {
    AllForall,
    ForallExistsLast,
}

/// Infers a quantified assertion equivalent to the clause's orbit, per the
/// per-sort ladder; `None` in `lifted` means the ground orbit is kept.
pub fn infer_quantified(
    inst: &FiniteInstance,
    g: &Group,
    c: &Clause,
) -> Result<Inferred, SmtError> {
    let orb = orbit(inst, g, c);
    let pinned = pinned_consts(inst);
    let mentioned = clause_consts(inst, c);

    // sorts eligible for quantification, with their quantifiable constants
    let mut sort_consts: Vec<(usize, Vec<usize>)> = Vec::new();
    for (&si, consts) in &mentioned {
        if inst.sorts[si].ordered {
            continue; // ordered constants belong to range boosting
        }
        let fixed = pinned.get(&si).cloned().unwrap_or_default();
        let quantifiable: Vec<usize> = consts.iter().copied().filter(|c| !fixed.contains(c)).collect();
        if !quantifiable.is_empty() {
            sort_consts.push((si, quantifiable));
        }
    }

    // candidate plans per sort, in ladder order
    let plans: Vec<Vec<SortPlan>> = sort_consts
        .iter()
        .map(|(si, qc)| {
            let fixed = pinned.get(si).map(|s| s.len()).unwrap_or(0);
            let n_eff = inst.sorts[*si].consts.len() - fixed;
            if qc.len() < n_eff {
                vec![SortPlan::AllForall]
            } else {
                vec![SortPlan::AllForall, SortPlan::ForallExistsLast]
            }
        })
        .collect();

    // base-sort/subset-sort variable pairs are correlated by membership;
    // a guard-free lift is preferred, a membership-faithful one tried next
    let has_member_pairs = sort_consts.iter().any(|(si, _)| {
        sort_consts
            .iter()
            .any(|(sj, _)| inst.sorts[*sj].base == Some(*si))
    });
    for combo in plan_product(&plans) {
        for member_guards in [false, true] {
            if member_guards && !has_member_pairs {
                continue;
            }
            let lifted =
                build_lifted(inst, c, &sort_consts, &combo, &pinned, member_guards);
            if expansion_equivalent(inst, &lifted.to_formula(), &orb)? {
                return Ok(Inferred {
                    lifted: Some(lifted),
                    orbit: orb,
                });
            }
        }
    }
    Ok(Inferred {
        lifted: None,
        orbit: orb,
    })
}

fn plan_product(plans: &[Vec<SortPlan>]) -> Vec<Vec<SortPlan>> {
    let mut out = vec![Vec::new()];
    for options in plans {
        let mut next = Vec::new();
        for combo in &out {
            for &p in options {
                let mut c2 = combo.clone();
                c2.push(p);
                next.push(c2);
            }
        }
        out = next;
    }
    out
}

fn build_lifted(
    inst: &FiniteInstance,
    c: &Clause,
    sort_consts: &[(usize, Vec<usize>)],
    combo: &[SortPlan],
    pinned: &BTreeMap<usize, BTreeSet<usize>>,
    member_guards: bool,
) -> Lifted {
    let mut subs: Subs = HashMap::new();
    let mut foralls = Vec::new();
    let mut exists = Vec::new();
    let mut guards = Vec::new();
    let mut exists_guards = Vec::new();
    let mut existential_vars: BTreeSet<String> = BTreeSet::new();

    for ((si, consts), &plan) in sort_consts.iter().zip(combo) {
        let sort_name = inst.sorts[*si].name.clone();
        let vars: Vec<String> = (0..consts.len()).map(|i| sort_var(inst, *si, i)).collect();
        for (v, &ci) in vars.iter().zip(consts) {
            subs.insert((*si, ci), v.clone());
        }
        let split = match plan {
            SortPlan::AllForall => vars.len(),
            SortPlan::ForallExistsLast => vars.len() - 1,
        };
        for v in &vars[..split] {
            foralls.push((v.clone(), sort_name.clone()));
        }
        for v in &vars[split..] {
            exists.push((v.clone(), sort_name.clone()));
            existential_vars.insert(v.clone());
        }
        // pairwise distinctness among this sort's universal variables
        for i in 0..split {
            for j in (i + 1)..split {
                guards.push(Formula::not(Formula::Eq(
                    Term::Var(vars[i].clone()),
                    Term::Var(vars[j].clone()),
                )));
            }
        }
        // exclude pinned constants from every quantified position
        if let Some(fixed) = pinned.get(si) {
            let names = pinned_names(inst);
            for &pc in fixed {
                let pc_name = names
                    .get(&(*si, pc))
                    .cloned()
                    .unwrap_or_else(|| inst.sorts[*si].consts[pc].clone());
                let pc_term = Term::Const(pc_name);
                for (k, v) in vars.iter().enumerate() {
                    let ne = Formula::not(Formula::Eq(Term::Var(v.clone()), pc_term.clone()));
                    if k < split {
                        guards.push(ne);
                    } else {
                        exists_guards.push(ne);
                    }
                }
            }
        }
    }

    if member_guards {
        // constrain each base-sort/subset-sort variable pair to the
        // membership polarity of the constants it replaces
        for ((si, base_consts), (sj, sub_consts)) in sort_consts
            .iter()
            .flat_map(|a| sort_consts.iter().map(move |b| (a, b)))
        {
            if inst.sorts[*sj].base != Some(*si) {
                continue;
            }
            for &bc in base_consts {
                for &qc in sub_consts {
                    let v = subs[&(*si, bc)].clone();
                    let w = subs[&(*sj, qc)].clone();
                    let mem = Formula::Member(Term::Var(v.clone()), Term::Var(w.clone()));
                    let guard = if inst.sorts[*sj].members[qc][bc] {
                        mem
                    } else {
                        Formula::not(mem)
                    };
                    if existential_vars.contains(&v) || existential_vars.contains(&w) {
                        exists_guards.push(guard);
                    } else {
                        guards.push(guard);
                    }
                }
            }
        }
    }

    Lifted {
        foralls,
        exists,
        guards,
        exists_guards,
        matrix: lift_clause(inst, c, &subs),
    }
}

/// Order guard helper shared with range boosting: `a < b` over terms.
pub fn lt(a: Term, b: Term) -> Formula {
    Formula::Cmp(CmpOp::Lt, a, b)
}

/// Expands a set of clauses to a single ground conjunction.
pub fn clauses_g(inst: &FiniteInstance, clauses: &[Clause]) -> G {
    crate::grounder::g_and(clauses.iter().map(|c| inst.clause_g(c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::bundled;
    use crate::grounder::{instantiate, SizeAssignment};
    use rand::prelude::*;

    fn voting() -> FiniteInstance {
        instantiate(
            &bundled("voting").unwrap(),
            &SizeAssignment::new(&[("value", 2), ("acceptor", 3), ("ballot", 4)]),
        )
        .unwrap()
    }

    fn bool_lit(inst: &FiniteInstance, sym: &str, args: &[usize], pos: bool) -> GLit {
        let yi = inst
            .protocol
            .symbols
            .iter()
            .position(|s| s.name == sym)
            .unwrap();
        GLit::new(Atom::Bool(inst.bool_atom(yi, args).unwrap()), pos)
    }

    #[test]
    fn group_order_is_product_of_factorials() {
        let inst = voting();
        // value: 2! = 2, acceptor: 3! = 6, ballot and quorum contribute 1
        assert_eq!(group(&inst).order(), 12);
    }

    #[test]
    fn induced_action_on_quorums() {
        let inst = voting();
        let q = inst.sort_idx("quorum").unwrap();
        // π = (a1 a2): q12 ↦ q12, q13 ↦ q23, q23 ↦ q13
        let m = induced(&inst, q, &[1, 0, 2]).unwrap();
        assert_eq!(m, vec![0, 2, 1]);
        // identity stays identity
        assert_eq!(induced(&inst, q, &[0, 1, 2]).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn induced_declines_when_table_not_closed() {
        let text = crate::frontend::corpus::VOTING.replace(
            "(subsets-of acceptor majority)",
            "(subsets-of acceptor (explicit (1 2)))",
        );
        let p = crate::frontend::parse_protocol(&text).unwrap();
        let inst = instantiate(
            &p,
            &SizeAssignment::new(&[("value", 2), ("acceptor", 3), ("ballot", 4)]),
        )
        .unwrap();
        let q = inst.sort_idx("quorum").unwrap();
        // π = (a1 a3) maps {a1,a2} to {a3,a2}, absent from the table
        assert!(induced(&inst, q, &[2, 1, 0]).is_none());
        // the group keeps only the permutations the table is closed under
        let g = group(&inst);
        assert!(g.order() < 12);
        assert!(g.order() >= 2); // identity and the value swap at least
    }

    #[test]
    fn orbit_of_single_acceptor_atom() {
        let inst = voting();
        // votes(a1, b1, v1): acceptor orbit 3 × value orbit 2 = 6
        let c = Clause::new(vec![bool_lit(&inst, "votes", &[0, 1, 0], true)]);
        let orb = orbit(&inst, &group(&inst), &c);
        assert_eq!(orb.len(), 6);
        assert!(orb.contains(&c));
    }

    #[test]
    fn asymmetric_two_acceptor_clause_has_ordered_orbit() {
        let inst = voting();
        // votes(a1,b1,v1) ∨ ¬votes(a2,b1,v1): asymmetric in a1/a2
        // → 3·2 = 6 acceptor images, × 2 value images
        let c = Clause::new(vec![
            bool_lit(&inst, "votes", &[0, 1, 0], true),
            bool_lit(&inst, "votes", &[1, 1, 0], false),
        ]);
        let orb = orbit(&inst, &group(&inst), &c);
        assert_eq!(orb.len(), 12);
    }

    #[test]
    fn infer_universal_for_partial_coverage() {
        let inst = voting();
        let g = group(&inst);
        let c = Clause::new(vec![bool_lit(&inst, "votes", &[0, 1, 0], false)]);
        let inf = infer_quantified(&inst, &g, &c).unwrap();
        let lifted = inf.lifted.expect("universal form accepted");
        assert!(lifted.exists.is_empty());
        // one acceptor var and one value var, quantified universally
        assert_eq!(lifted.foralls.len(), 2);
        assert!(expansion_equivalent(&inst, &lifted.to_formula(), &inf.orbit).unwrap());
    }

    #[test]
    fn infer_distinct_pair_over_full_value_sort() {
        let inst = voting();
        let g = group(&inst);
        // ¬votes(a1,b1,v1) ∨ ¬votes(a1,b1,v2): touches all 2 values
        let c = Clause::new(vec![
            bool_lit(&inst, "votes", &[0, 1, 0], false),
            bool_lit(&inst, "votes", &[0, 1, 1], false),
        ]);
        let inf = infer_quantified(&inst, &g, &c).unwrap();
        let lifted = inf.lifted.expect("accepted");
        // distinctness guard present for the value pair
        assert!(!lifted.guards.is_empty());
        let f = lifted.to_formula();
        let text = f.to_string();
        assert!(text.contains("forall"), "{text}");
    }

    #[test]
    fn quorum_constants_lift_to_quorum_variables() {
        let inst = voting();
        let g = group(&inst);
        let yi = inst
            .protocol
            .symbols
            .iter()
            .position(|s| s.name == "showsSafeAt")
            .unwrap();
        // ¬showsSafeAt(q12, b1, v1)
        let c = Clause::new(vec![GLit::new(
            Atom::Def(inst.def_atom(yi, &[0, 1, 0]).unwrap()),
            false,
        )]);
        let inf = infer_quantified(&inst, &g, &c).unwrap();
        let lifted = inf.lifted.expect("accepted");
        assert!(lifted
            .foralls
            .iter()
            .any(|(_, s)| s == "quorum"));
        assert_eq!(inf.orbit.len(), 6); // 3 quorums × 2 values
    }

    #[test]
    fn pinned_constants_are_not_quantified() {
        let inst = instantiate(
            &bundled("paxos").unwrap(),
            &SizeAssignment::new(&[("value", 2), ("acceptor", 3), ("ballot", 4)]),
        )
        .unwrap();
        let g = group(&inst);
        // value group must fix v1 (= none): only identity remains on value
        assert_eq!(g.order(), 6);
        let c = Clause::new(vec![bool_lit(&inst, "msg2a", &[1, 1], false)]); // ¬msg2a(b1, v2)
        let inf = infer_quantified(&inst, &g, &c).unwrap();
        let lifted = inf.lifted.expect("accepted");
        // v2 is the only non-pinned value: ∀V: V ≠ none → ¬msg2a(b1, V)
        let text = lifted.to_formula().to_string();
        assert!(text.contains("none"), "{text}");
        assert!(expansion_equivalent(&inst, &lifted.to_formula(), &inf.orbit).unwrap());
    }

    #[test]
    fn orbit_properties_on_random_clauses() {
        let inst = voting();
        let g = group(&inst);
        let mut rng = StdRng::seed_from_u64(42);
        let n_atoms = inst.bool_atoms.len() + inst.def_atoms.len();
        for _ in 0..200 {
            let len = rng.gen_range(1..=4);
            let lits: Vec<GLit> = (0..len)
                .map(|_| {
                    let k = rng.gen_range(0..n_atoms + inst.enum_vars.len());
                    let atom = if k < inst.bool_atoms.len() {
                        Atom::Bool(k as u32)
                    } else if k < n_atoms {
                        Atom::Def((k - inst.bool_atoms.len()) as u32)
                    } else {
                        let var = (k - n_atoms) as u32;
                        let dom = inst.sorts[inst.enum_vars[var as usize].sort].consts.len();
                        Atom::EnumEq {
                            var,
                            val: rng.gen_range(0..dom) as u32,
                        }
                    };
                    GLit::new(atom, rng.gen())
                })
                .collect();
            let c = Clause::new(lits);
            let orb = orbit(&inst, &g, &c);
            // closure: applying any element to any orbit member stays inside
            for e in &g.elems {
                for m in &orb {
                    assert!(orb.contains(&apply_clause(&inst, e, m)));
                }
            }
            // orbit-stabilizer: size divides group order
            assert_eq!(g.order() % orb.len(), 0);
        }
    }
}
