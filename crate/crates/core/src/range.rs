//! Range boosting over totally-ordered sorts: enumerate the
//! ordering-compliant variants of a learned clause (strictly increasing
//! tuples over the sort's constants), test each against the frame with a
//! 1-step query, and synthesize a universally quantified assertion whose
//! antecedent is a range constraint characterizing exactly the safe subset.

use std::collections::HashMap;

use crate::grounder::{Atom, Clause, FiniteInstance, GLit};
use crate::ir::{CmpOp, Formula, Term};
use crate::smt::SmtError;
use crate::symmetry::{clause_consts, expansion_equivalent, sort_var, Inferred, Lifted};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Safe,
    Unsafe,
    Unknown,
}

/// The ordering-compliant variants of a clause set for one ordered sort.
#[derive(Debug, Clone)]
pub struct VariantSet {
    pub sort: usize,
    /// Sorted constant indices of the sort in the base clause.
    pub base_tuple: Vec<usize>,
    pub k: usize,
    /// One strictly increasing tuple per variant.
    pub tuples: Vec<Vec<usize>>,
    /// The clause set each variant stands for.
    pub sets: Vec<Vec<Clause>>,
    pub verdicts: Vec<Verdict>,
}

/// Strictly increasing k-tuples over `0..n`, lexicographic.
pub fn increasing_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Remaps a clause's constants of one sort positionally (`from[i] ↦ to[i]`).
fn remap_clause(
    inst: &FiniteInstance,
    c: &Clause,
    sort: usize,
    from: &[usize],
    to: &[usize],
) -> Clause {
    let map: HashMap<usize, usize> = from.iter().copied().zip(to.iter().copied()).collect();
    let remap_args = |symbol: usize, args: &[usize]| -> Vec<usize> {
        let sym = &inst.protocol.symbols[symbol];
        sym.args
            .iter()
            .zip(args)
            .map(|(s, &ci)| {
                if inst.sort_idx(s) == Some(sort) {
                    map.get(&ci).copied().unwrap_or(ci)
                } else {
                    ci
                }
            })
            .collect()
    };
    Clause::new(
        c.0.iter()
            .map(|l| {
                let atom = match l.atom {
                    Atom::Bool(i) => {
                        let info = &inst.bool_atoms[i as usize];
                        Atom::Bool(
                            inst.bool_atom(info.symbol, &remap_args(info.symbol, &info.args))
                                .unwrap(),
                        )
                    }
                    Atom::Def(i) => {
                        let info = &inst.def_atoms[i as usize];
                        Atom::Def(
                            inst.def_atom(info.symbol, &remap_args(info.symbol, &info.args))
                                .unwrap(),
                        )
                    }
                    Atom::EnumEq { var, val } => {
                        let info = &inst.enum_vars[var as usize];
                        let new_val = if info.sort == sort {
                            map.get(&(val as usize)).copied().unwrap_or(val as usize) as u32
                        } else {
                            val
                        };
                        Atom::EnumEq {
                            var: inst
                                .enum_var(info.symbol, &remap_args(info.symbol, &info.args))
                                .unwrap(),
                            val: new_val,
                        }
                    }
                };
                GLit::new(atom, l.pos)
            })
            .collect(),
    )
}

/// Builds the variant set for `sort`: one clause set per strictly
/// increasing tuple, by positionally replacing the representative's sorted
/// constants of that sort throughout the clause set.
pub fn ordered_variants(
    inst: &FiniteInstance,
    clauses: &[Clause],
    rep: &Clause,
    sort: usize,
) -> VariantSet {
    let base_tuple: Vec<usize> = clause_consts(inst, rep)
        .get(&sort)
        .map(|s| s.iter().copied().collect())
        .unwrap_or_default();
    let k = base_tuple.len();
    let n = inst.sorts[sort].consts.len();
    let tuples = increasing_tuples(n, k);
    let sets: Vec<Vec<Clause>> = tuples
        .iter()
        .map(|t| {
            let mut set: Vec<Clause> = clauses
                .iter()
                .map(|c| remap_clause(inst, c, sort, &base_tuple, t))
                .collect();
            set.sort();
            set.dedup();
            set
        })
        .collect();
    let verdicts = tuples
        .iter()
        .map(|t| {
            if *t == base_tuple {
                Verdict::Safe // just learned: safe by construction
            } else {
                Verdict::Unknown
            }
        })
        .collect();
    VariantSet {
        sort,
        base_tuple,
        k,
        tuples,
        sets,
        verdicts,
    }
}

/// Resolves the unknown verdicts with the caller's 1-step query.
pub fn mark_safe<F>(vs: &mut VariantSet, mut is_safe: F)
where
    F: FnMut(&[Clause]) -> Verdict,
{
    for (i, v) in vs.verdicts.iter_mut().enumerate() {
        if *v == Verdict::Unknown {
            *v = is_safe(&vs.sets[i]);
        }
    }
}

/// One atom of the range-constraint family over tuple positions: a
/// comparison against the sort's boundary constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RangeAtom {
    /// min < X_i  (position is strictly above the bottom constant)
    MinLt(usize),
    /// X_i ≤ min  (position is pinned to the bottom constant)
    LeMin(usize),
    /// X_i < max
    LtMax(usize),
    /// max ≤ X_i  (position is pinned to the top constant)
    MaxLe(usize),
}

impl RangeAtom {
    pub fn eval(&self, tuple: &[usize], n: usize) -> bool {
        match *self {
            RangeAtom::MinLt(i) => tuple[i] > 0,
            RangeAtom::LeMin(i) => tuple[i] == 0,
            RangeAtom::LtMax(i) => tuple[i] < n - 1,
            RangeAtom::MaxLe(i) => tuple[i] == n - 1,
        }
    }

    pub fn to_formula(&self, vars: &[String], min_name: &str, max_name: &str) -> Formula {
        let var = |i: usize| Term::Var(vars[i].clone());
        match *self {
            RangeAtom::MinLt(i) => {
                Formula::Cmp(CmpOp::Lt, Term::Const(min_name.into()), var(i))
            }
            RangeAtom::LeMin(i) => {
                Formula::Cmp(CmpOp::Le, var(i), Term::Const(min_name.into()))
            }
            RangeAtom::LtMax(i) => {
                Formula::Cmp(CmpOp::Lt, var(i), Term::Const(max_name.into()))
            }
            RangeAtom::MaxLe(i) => {
                Formula::Cmp(CmpOp::Le, Term::Const(max_name.into()), var(i))
            }
        }
    }
}

/// Finds the shortest conjunction over the range-atom family that is true
/// on exactly the safe tuples among all strictly increasing k-tuples;
/// `None` when no such conjunction exists. Deterministic: shortest first,
/// ties broken by lexicographic atom order.
pub fn synthesize_antecedent(
    safe: &[Vec<usize>],
    n: usize,
    k: usize,
) -> Option<Vec<RangeAtom>> {
    let all = increasing_tuples(n, k);
    let mut family = Vec::new();
    for i in 0..k {
        family.push(RangeAtom::MinLt(i));
        family.push(RangeAtom::LeMin(i));
        family.push(RangeAtom::LtMax(i));
        family.push(RangeAtom::MaxLe(i));
    }
    family.sort();
    let matches = |conj: &[RangeAtom]| {
        all.iter().all(|t| {
            let sat = conj.iter().all(|a| a.eval(t, n));
            sat == safe.contains(t)
        })
    };
    for size in 0..=family.len() {
        for combo in subsets_of_size(&family, size) {
            if matches(&combo) {
                return Some(combo);
            }
        }
    }
    None
}

fn subsets_of_size(items: &[RangeAtom], size: usize) -> Vec<Vec<RangeAtom>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(
        items: &[RangeAtom],
        start: usize,
        size: usize,
        cur: &mut Vec<RangeAtom>,
        out: &mut Vec<Vec<RangeAtom>>,
    ) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, i + 1, size, cur, out);
            cur.pop();
        }
    }
    rec(items, 0, size, &mut cur, &mut out);
    out
}

/// The result of boosting: a quantified assertion when the expansion
/// contract holds, always with the ground clause set it stands for.
#[derive(Debug, Clone)]
pub struct Boosted {
    pub lifted: Option<Lifted>,
    pub clauses: Vec<Clause>,
}

impl Boosted {
    pub fn formula(&self) -> Option<Formula> {
        self.lifted.as_ref().map(|l| l.to_formula())
    }
}

/// Renames constants to variables inside a lifted matrix.
fn subst_consts(f: &Formula, map: &HashMap<String, String>) -> Formula {
    let term = |t: &Term| -> Term {
        match t {
            Term::Const(c) => match map.get(c) {
                Some(v) => Term::Var(v.clone()),
                None => t.clone(),
            },
            Term::App(n, args) => Term::App(
                n.clone(),
                args.iter()
                    .map(|a| match a {
                        Term::Const(c) => match map.get(c) {
                            Some(v) => Term::Var(v.clone()),
                            None => a.clone(),
                        },
                        other => other.clone(),
                    })
                    .collect(),
            ),
            other => other.clone(),
        }
    };
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Not(g) => Formula::not(subst_consts(g, map)),
        Formula::And(fs) => Formula::And(fs.iter().map(|g| subst_consts(g, map)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| subst_consts(g, map)).collect()),
        Formula::Implies(a, b) => {
            Formula::implies(subst_consts(a, map), subst_consts(b, map))
        }
        Formula::Iff(a, b) => Formula::iff(subst_consts(a, map), subst_consts(b, map)),
        Formula::Eq(a, b) => Formula::Eq(term(a), term(b)),
        Formula::Cmp(op, a, b) => Formula::Cmp(*op, term(a), term(b)),
        Formula::Member(a, b) => Formula::Member(term(a), term(b)),
        Formula::App(n, args) => Formula::App(n.clone(), args.iter().map(term).collect()),
        Formula::Forall(vs, b) => Formula::Forall(vs.clone(), Box::new(subst_consts(b, map))),
        Formula::Exists(vs, b) => Formula::Exists(vs.clone(), Box::new(subst_consts(b, map))),
    }
}

/// Boosts a symmetry-inferred assertion over every ordered sort it
/// mentions, sequentially and independently per sort. `is_safe` runs the
/// caller's 1-step unreachability query on a candidate clause set.
pub fn boost_range<F>(
    inst: &FiniteInstance,
    inferred: &Inferred,
    rep: &Clause,
    mut is_safe: F,
) -> Result<Boosted, SmtError>
where
    F: FnMut(&[Clause]) -> Verdict,
{
    let mut lifted = inferred.lifted.clone();
    let mut clauses = inferred.orbit.clone();
    let mut rep = rep.clone();

    let ordered_sorts: Vec<usize> = (0..inst.sorts.len())
        .filter(|&si| inst.sorts[si].ordered)
        .collect();
    for sort in ordered_sorts {
        let mut vs = ordered_variants(inst, &clauses, &rep, sort);
        if vs.k == 0 {
            continue; // identity boost
        }
        mark_safe(&mut vs, &mut is_safe);
        let safe_tuples: Vec<Vec<usize>> = vs
            .tuples
            .iter()
            .zip(&vs.verdicts)
            .filter(|(_, &v)| v == Verdict::Safe)
            .map(|(t, _)| t.clone())
            .collect();
        let mut safe_sets: Vec<Clause> = vs
            .tuples
            .iter()
            .zip(&vs.verdicts)
            .filter(|(_, &v)| v == Verdict::Safe)
            .flat_map(|(t, _)| {
                vs.sets[vs.tuples.iter().position(|x| x == t).unwrap()].clone()
            })
            .collect();
        safe_sets.sort();
        safe_sets.dedup();

        let n = inst.sorts[sort].consts.len();
        let synthesized = lifted
            .as_ref()
            .and_then(|_| synthesize_antecedent(&safe_tuples, n, vs.k));
        let accepted = match (&lifted, synthesized) {
            (Some(base), Some(atoms)) => {
                let vars: Vec<String> =
                    (0..vs.k).map(|i| sort_var(inst, sort, i)).collect();
                let sort_name = inst.sorts[sort].name.clone();
                let min_name = inst.sorts[sort].consts[0].clone();
                let max_name = inst.sorts[sort].consts[n - 1].clone();
                let rename: HashMap<String, String> = vs
                    .base_tuple
                    .iter()
                    .zip(&vars)
                    .map(|(&ci, v)| (inst.sorts[sort].consts[ci].clone(), v.clone()))
                    .collect();
                let mut guards = base.guards.clone();
                // increasing chain over the range variables…
                for w in vars.windows(2) {
                    guards.push(Formula::Cmp(
                        CmpOp::Lt,
                        Term::Var(w[0].clone()),
                        Term::Var(w[1].clone()),
                    ));
                }
                // …plus the synthesized boundary constraints
                for a in &atoms {
                    guards.push(a.to_formula(&vars, &min_name, &max_name));
                }
                let candidate = Lifted {
                    foralls: base
                        .foralls
                        .iter()
                        .cloned()
                        .chain(vars.iter().map(|v| (v.clone(), sort_name.clone())))
                        .collect(),
                    exists: base.exists.clone(),
                    guards: guards
                        .into_iter()
                        .map(|g| subst_consts(&g, &rename))
                        .collect(),
                    exists_guards: base
                        .exists_guards
                        .iter()
                        .map(|g| subst_consts(g, &rename))
                        .collect(),
                    matrix: subst_consts(&base.matrix, &rename),
                };
                if expansion_equivalent(inst, &candidate.to_formula(), &safe_sets)? {
                    Some(candidate)
                } else {
                    None
                }
            }
            _ => None,
        };
        // only adopt the boosted form when the quantified candidate was
        // accepted; a failed synthesis must not discard the symmetric lift
        // (the lifted form and the clause set describe each other)
        if let Some(candidate) = accepted {
            lifted = Some(candidate);
            clauses = safe_sets;
            // keep the representative aligned with the current clause set
            rep = remap_clause(inst, &rep, sort, &vs.base_tuple, &vs.base_tuple);
        }
    }
    Ok(Boosted { lifted, clauses })
}
