//! Incremental SMT engine for quantifier-free formulas over booleans and
//! finite enumeration sorts, compiled to CNF over a CDCL SAT core.
//!
//! Supports the SMT-LIB2 command subset needed for ground protocol queries:
//! declarations, assertions, push/pop (via activation literals),
//! check-sat-assuming with unsat-assumption extraction, and model queries.

use std::collections::HashMap;

use batsat::{lbool, BasicSolver, Lit, SolverInterface};

use crate::sexp::Sexp;

enum ConstDecl {
    Bool(Lit),
    Enum { sort: String, onehot: Vec<Lit> },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
}

pub struct Engine {
    sat: BasicSolver,
    sorts: HashMap<String, Vec<String>>,
    value_sort: HashMap<String, (String, usize)>,
    consts: HashMap<String, ConstDecl>,
    /// Activation literal per push level (level 0 unguarded).
    levels: Vec<Lit>,
    status: Option<Status>,
    /// User assumptions of the last check, with their surface syntax.
    last_assumptions: Vec<(Sexp, Lit)>,
    failed_assumptions: Vec<Sexp>,
    true_lit: Option<Lit>,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new()
    }
}

impl Engine {
    pub fn new() -> Self {
        Engine {
            sat: BasicSolver::default(),
            sorts: HashMap::new(),
            value_sort: HashMap::new(),
            consts: HashMap::new(),
            levels: Vec::new(),
            status: None,
            last_assumptions: Vec::new(),
            failed_assumptions: Vec::new(),
            true_lit: None,
        }
    }

    fn fresh_lit(&mut self) -> Lit {
        Lit::new(self.sat.new_var_default(), true)
    }

    fn lit_true(&mut self) -> Lit {
        if let Some(l) = self.true_lit {
            return l;
        }
        let l = self.fresh_lit();
        self.sat.add_clause_reuse(&mut vec![l]);
        self.true_lit = Some(l);
        l
    }

    /// Handles one command; returns the response text, if the command produces one.
    pub fn handle(&mut self, form: &Sexp) -> Option<String> {
        match self.dispatch(form) {
            Ok(resp) => resp,
            Err(msg) => Some(format!("(error \"{msg}\")")),
        }
    }

    fn dispatch(&mut self, form: &Sexp) -> Result<Option<String>, String> {
        let items = form.list().ok_or("expected command list")?;
        let head = items
            .first()
            .and_then(|s| s.atom())
            .ok_or("expected command name")?;
        match head {
            "set-logic" | "set-option" | "set-info" => Ok(None),
            "echo" => {
                let arg = items.get(1).and_then(|s| s.atom()).unwrap_or("");
                Ok(Some(arg.trim_matches('"').to_string()))
            }
            "declare-sort" => Err("uninterpreted sorts unsupported".into()),
            "declare-datatype" => {
                let name = items
                    .get(1)
                    .and_then(|s| s.atom())
                    .ok_or("datatype name")?
                    .to_string();
                let ctors = items.get(2).and_then(|s| s.list()).ok_or("constructors")?;
                self.declare_enum(name, ctors)?;
                Ok(None)
            }
            "declare-datatypes" => {
                // ((S 0)) (((v1) (v2)))
                let names = items.get(1).and_then(|s| s.list()).ok_or("sort decls")?;
                let defs = items.get(2).and_then(|s| s.list()).ok_or("datatype defs")?;
                if names.len() != defs.len() {
                    return Err("arity mismatch in declare-datatypes".into());
                }
                for (n, d) in names.iter().zip(defs.iter()) {
                    let name = n
                        .list()
                        .and_then(|l| l.first())
                        .and_then(|s| s.atom())
                        .ok_or("sort decl")?
                        .to_string();
                    let ctors = d.list().ok_or("constructor list")?;
                    self.declare_enum(name, ctors)?;
                }
                Ok(None)
            }
            "declare-const" => {
                let name = items
                    .get(1)
                    .and_then(|s| s.atom())
                    .ok_or("const name")?
                    .to_string();
                let sort = items.get(2).and_then(|s| s.atom()).ok_or("const sort")?;
                self.declare_const(name, sort)?;
                Ok(None)
            }
            "declare-fun" => {
                let name = items
                    .get(1)
                    .and_then(|s| s.atom())
                    .ok_or("fun name")?
                    .to_string();
                let args = items.get(2).and_then(|s| s.list()).ok_or("fun args")?;
                if !args.is_empty() {
                    return Err("only 0-ary functions supported".into());
                }
                let sort = items.get(3).and_then(|s| s.atom()).ok_or("fun sort")?;
                self.declare_const(name, sort)?;
                Ok(None)
            }
            "assert" => {
                let expr = items.get(1).ok_or("assert body")?;
                self.assert_expr(expr)?;
                Ok(None)
            }
            "push" => {
                let n = items
                    .get(1)
                    .and_then(|s| s.atom())
                    .map(|s| s.parse::<usize>().map_err(|_| "bad push count"))
                    .unwrap_or(Ok(1))?;
                for _ in 0..n {
                    let act = self.fresh_lit();
                    self.levels.push(act);
                }
                Ok(None)
            }
            "pop" => {
                let n = items
                    .get(1)
                    .and_then(|s| s.atom())
                    .map(|s| s.parse::<usize>().map_err(|_| "bad pop count"))
                    .unwrap_or(Ok(1))?;
                for _ in 0..n {
                    let act = self.levels.pop().ok_or("pop below level 0")?;
                    self.sat.add_clause_reuse(&mut vec![!act]);
                }
                Ok(None)
            }
            "check-sat" => Ok(Some(self.check(&[])?)),
            "check-sat-assuming" => {
                let lits = items.get(1).and_then(|s| s.list()).ok_or("assumptions")?;
                Ok(Some(self.check(lits)?))
            }
            "get-value" => {
                let terms = items.get(1).and_then(|s| s.list()).ok_or("terms")?;
                self.get_value(terms).map(Some)
            }
            "get-model" => {
                let names: Vec<Sexp> = self.consts.keys().map(|n| Sexp::Atom(n.clone())).collect();
                self.get_value(&names).map(Some)
            }
            "get-unsat-assumptions" | "get-unsat-core" => {
                if self.status != Some(Status::Unsat) {
                    return Err("no unsat result available".into());
                }
                let parts: Vec<String> =
                    self.failed_assumptions.iter().map(|s| s.to_string()).collect();
                Ok(Some(format!("({})", parts.join(" "))))
            }
            "reset" => {
                *self = Engine::new();
                Ok(None)
            }
            "exit" => Ok(None),
            other => Err(format!("unsupported command {other}")),
        }
    }

    fn declare_enum(&mut self, name: String, ctors: &[Sexp]) -> Result<(), String> {
        if self.sorts.contains_key(&name) {
            return Err(format!("sort {name} redeclared"));
        }
        let mut values = Vec::new();
        for c in ctors {
            let v = match c {
                Sexp::Atom(a) => a.clone(),
                Sexp::List(l) => l
                    .first()
                    .and_then(|s| s.atom())
                    .ok_or("constructor")?
                    .to_string(),
            };
            self.value_sort
                .insert(v.clone(), (name.clone(), values.len()));
            values.push(v);
        }
        if values.is_empty() {
            return Err(format!("empty datatype {name}"));
        }
        self.sorts.insert(name, values);
        Ok(())
    }

    fn declare_const(&mut self, name: String, sort: &str) -> Result<(), String> {
        if self.consts.contains_key(&name) {
            return Err(format!("constant {name} redeclared"));
        }
        let decl = if sort == "Bool" {
            ConstDecl::Bool(self.fresh_lit())
        } else {
            let n = self
                .sorts
                .get(sort)
                .ok_or_else(|| format!("unknown sort {sort}"))?
                .len();
            let onehot: Vec<Lit> = (0..n).map(|_| self.fresh_lit()).collect();
            // exactly-one encoding
            self.sat.add_clause_reuse(&mut onehot.clone());
            for i in 0..n {
                for j in (i + 1)..n {
                    self.sat.add_clause_reuse(&mut vec![!onehot[i], !onehot[j]]);
                }
            }
            ConstDecl::Enum {
                sort: sort.to_string(),
                onehot,
            }
        };
        self.consts.insert(name, decl);
        Ok(())
    }

    fn assert_expr(&mut self, expr: &Sexp) -> Result<(), String> {
        self.status = None;
        let guard = self.levels.last().copied();
        self.assert_under(expr, guard)
    }

    fn assert_under(&mut self, expr: &Sexp, guard: Option<Lit>) -> Result<(), String> {
        // split conjunctions and flatten clauses to avoid needless aux vars
        if let Sexp::List(items) = expr {
            if items.first().and_then(|s| s.atom()) == Some("and") {
                for e in &items[1..] {
                    self.assert_under(e, guard)?;
                }
                return Ok(());
            }
        }
        let root = self.compile(expr)?;
        let mut clause = match guard {
            Some(g) => vec![!g, root],
            None => vec![root],
        };
        self.sat.add_clause_reuse(&mut clause);
        Ok(())
    }

    /// Tseitin-compiles a formula to a literal; definitional clauses are
    /// asserted unguarded (they are equivalences, sound at every level).
    fn compile(&mut self, expr: &Sexp) -> Result<Lit, String> {
        match expr {
            Sexp::Atom(a) => match a.as_str() {
                "true" => Ok(self.lit_true()),
                "false" => Ok(!self.lit_true()),
                name => match self.consts.get(name) {
                    Some(ConstDecl::Bool(l)) => Ok(*l),
                    Some(ConstDecl::Enum { .. }) => {
                        Err(format!("enum constant {name} used as boolean"))
                    }
                    None => Err(format!("unknown constant {name}")),
                },
            },
            Sexp::List(items) => {
                let head = items
                    .first()
                    .and_then(|s| s.atom())
                    .ok_or("expected operator")?;
                match head {
                    "not" => Ok(!self.compile(&items[1])?),
                    "and" => {
                        let lits = items[1..]
                            .iter()
                            .map(|e| self.compile(e))
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(self.mk_and(lits))
                    }
                    "or" => {
                        let lits = items[1..]
                            .iter()
                            .map(|e| self.compile(e))
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(self.mk_or(lits))
                    }
                    "=>" => {
                        // right-associative
                        let lits = items[1..]
                            .iter()
                            .map(|e| self.compile(e))
                            .collect::<Result<Vec<_>, _>>()?;
                        let mut acc = *lits.last().ok_or("empty =>")?;
                        for &l in lits[..lits.len() - 1].iter().rev() {
                            acc = self.mk_or(vec![!l, acc]);
                        }
                        Ok(acc)
                    }
                    "=" => self.compile_eq(&items[1], &items[2]),
                    "distinct" => Ok(!self.compile_eq(&items[1], &items[2])?),
                    "ite" => {
                        let c = self.compile(&items[1])?;
                        let t = self.compile(&items[2])?;
                        let e = self.compile(&items[3])?;
                        let a = self.mk_and(vec![c, t]);
                        let b = self.mk_and(vec![!c, e]);
                        Ok(self.mk_or(vec![a, b]))
                    }
                    other => Err(format!("unsupported operator {other}")),
                }
            }
        }
    }

    fn compile_eq(&mut self, a: &Sexp, b: &Sexp) -> Result<Lit, String> {
        let kind_a = self.term_kind(a);
        let kind_b = self.term_kind(b);
        match (kind_a, kind_b) {
            (TermKind::EnumConst(_), _) | (_, TermKind::EnumConst(_)) => {
                let (ea, eb) = (self.enum_onehot(a)?, self.enum_onehot(b)?);
                if ea.len() != eb.len() {
                    return Err("sort mismatch in =".into());
                }
                let disj = ea
                    .iter()
                    .zip(eb.iter())
                    .map(|(&x, &y)| self.mk_and(vec![x, y]))
                    .collect();
                Ok(self.mk_or(disj))
            }
            _ => {
                let (x, y) = (self.compile(a)?, self.compile(b)?);
                let both = self.mk_and(vec![x, y]);
                let neither = self.mk_and(vec![!x, !y]);
                Ok(self.mk_or(vec![both, neither]))
            }
        }
    }

    fn term_kind(&self, t: &Sexp) -> TermKind {
        if let Sexp::Atom(a) = t {
            if let Some(ConstDecl::Enum { sort, .. }) = self.consts.get(a) {
                return TermKind::EnumConst(sort.clone());
            }
            if let Some((sort, _)) = self.value_sort.get(a) {
                return TermKind::EnumConst(sort.clone());
            }
        }
        TermKind::Boolean
    }

    /// One-hot view of an enum term: a declared enum constant, or an enum value.
    fn enum_onehot(&mut self, t: &Sexp) -> Result<Vec<Lit>, String> {
        let name = t.atom().ok_or("expected enum term")?;
        if let Some(ConstDecl::Enum { onehot, .. }) = self.consts.get(name) {
            return Ok(onehot.clone());
        }
        if let Some((sort, idx)) = self.value_sort.get(name).cloned() {
            let n = self.sorts[&sort].len();
            let tl = self.lit_true();
            return Ok((0..n).map(|i| if i == idx { tl } else { !tl }).collect());
        }
        Err(format!("unknown enum term {name}"))
    }

    fn mk_and(&mut self, lits: Vec<Lit>) -> Lit {
        match lits.len() {
            0 => self.lit_true(),
            1 => lits[0],
            _ => {
                let v = self.fresh_lit();
                let mut long = vec![v];
                for &l in &lits {
                    self.sat.add_clause_reuse(&mut vec![!v, l]);
                    long.push(!l);
                }
                self.sat.add_clause_reuse(&mut long);
                v
            }
        }
    }

    fn mk_or(&mut self, lits: Vec<Lit>) -> Lit {
        let negs: Vec<Lit> = lits.into_iter().map(|l| !l).collect();
        !self.mk_and(negs)
    }

    fn parse_assumption(&mut self, s: &Sexp) -> Result<Lit, String> {
        match s {
            Sexp::Atom(_) => self.compile(s),
            Sexp::List(items) => {
                let head = items.first().and_then(|x| x.atom()).unwrap_or("");
                match head {
                    "not" => Ok(!self.parse_assumption(&items[1])?),
                    "=" => self.compile_eq(&items[1], &items[2]),
                    _ => Err(format!("unsupported assumption {s}")),
                }
            }
        }
    }

    fn check(&mut self, raw_assumptions: &[Sexp]) -> Result<String, String> {
        self.last_assumptions.clear();
        self.failed_assumptions.clear();
        for s in raw_assumptions {
            let l = self.parse_assumption(s)?;
            self.last_assumptions.push((s.clone(), l));
        }
        let mut assumps: Vec<Lit> = self.last_assumptions.iter().map(|(_, l)| *l).collect();
        assumps.extend(self.levels.iter().copied());
        let res = self.sat.solve_limited(&assumps);
        if res == lbool::TRUE {
            self.status = Some(Status::Sat);
            Ok("sat".into())
        } else if res == lbool::FALSE {
            self.status = Some(Status::Unsat);
            // batsat exposes the final conflict as negations of the
            // responsible assumptions
            self.failed_assumptions = self
                .last_assumptions
                .iter()
                .filter(|(_, l)| self.sat.unsat_core_contains_lit(!*l))
                .map(|(s, _)| s.clone())
                .collect();
            Ok("unsat".into())
        } else {
            self.status = Some(Status::Unknown);
            Ok("unknown".into())
        }
    }

    fn get_value(&mut self, terms: &[Sexp]) -> Result<String, String> {
        if self.status != Some(Status::Sat) {
            return Err("no model available".into());
        }
        let mut out = String::from("(");
        for (i, t) in terms.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let name = t.atom().ok_or("expected constant name")?;
            let val = match self.consts.get(name) {
                Some(ConstDecl::Bool(l)) => {
                    if self.sat.value_lit(*l) == lbool::TRUE {
                        "true".to_string()
                    } else {
                        "false".to_string()
                    }
                }
                Some(ConstDecl::Enum { sort, onehot }) => {
                    let values = &self.sorts[sort];
                    let mut found = values[0].clone();
                    for (k, &l) in onehot.iter().enumerate() {
                        if self.sat.value_lit(l) == lbool::TRUE {
                            found = values[k].clone();
                            break;
                        }
                    }
                    found
                }
                None => return Err(format!("unknown constant {name}")),
            };
            out.push_str(&format!("({name} {val})"));
        }
        out.push(')');
        Ok(out)
    }
}

enum TermKind {
    Boolean,
    EnumConst(#[allow(dead_code)] String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexp::Reader;

    fn run(engine: &mut Engine, script: &str) -> Vec<String> {
        let mut r = Reader::new();
        r.push_str(script);
        let mut out = Vec::new();
        while let Some(form) = r.next_form().unwrap() {
            if let Some(resp) = engine.handle(&form) {
                out.push(resp);
            }
        }
        out
    }

    #[test]
    fn basic_sat_unsat() {
        let mut e = Engine::new();
        let out = run(
            &mut e,
            "(declare-const p Bool)(declare-const q Bool)\
             (assert (or p q))(check-sat)\
             (assert (not p))(assert (not q))(check-sat)",
        );
        assert_eq!(out, vec!["sat", "unsat"]);
    }

    #[test]
    fn push_pop_scopes() {
        let mut e = Engine::new();
        let out = run(
            &mut e,
            "(declare-const p Bool)(assert p)\
             (push 1)(assert (not p))(check-sat)(pop 1)(check-sat)",
        );
        assert_eq!(out, vec!["unsat", "sat"]);
    }

    #[test]
    fn enum_equality_and_model() {
        let mut e = Engine::new();
        let out = run(
            &mut e,
            "(declare-datatype ballot ((bmin) (b1) (b2)))\
             (declare-const x ballot)(declare-const y ballot)\
             (assert (= x b1))(assert (= x y))(check-sat)(get-value (x y))",
        );
        assert_eq!(out[0], "sat");
        assert_eq!(out[1], "((x b1) (y b1))");
        let out = run(&mut e, "(assert (not (= y b1)))(check-sat)");
        assert_eq!(out, vec!["unsat"]);
    }

    #[test]
    fn unsat_assumptions_are_a_core() {
        let mut e = Engine::new();
        let out = run(
            &mut e,
            "(declare-const p Bool)(declare-const q Bool)(declare-const r Bool)\
             (assert (=> p (not q)))\
             (check-sat-assuming (p q r))(get-unsat-assumptions)",
        );
        assert_eq!(out[0], "unsat");
        let core = &out[1];
        assert!(core.contains('p') && core.contains('q'));
        assert!(!core.contains('r'));
    }

    #[test]
    fn assuming_enum_equalities() {
        let mut e = Engine::new();
        let out = run(
            &mut e,
            "(declare-datatype v ((v1) (v2)))(declare-const x v)\
             (check-sat-assuming ((= x v1) (not (= x v1))))",
        );
        assert_eq!(out, vec!["unsat"]);
    }
}
