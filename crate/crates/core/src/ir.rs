//! Sorted first-order representation of protocols: sorts, symbols, formulas,
//! actions, and the structural checks every downstream pass relies on.
//!
//! Three sort kinds exist: symmetric (interchangeable constants), ordered
//! (totally ordered constants with a designated minimum, e.g. the `-1`
//! ballot), and dependent-subset (e.g. quorums of acceptors, enumerated at
//! instantiation time). Set membership is the built-in rigid atom
//! `member(x, q)` rather than a set-valued term, which keeps everything
//! first-order and finitely groundable.

use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubsetPolicy {
    /// All subsets of size ceil((n+1)/2) of the base sort.
    Majority,
    /// An explicit list of subsets, each a list of base-sort constant indices
    /// (0-based positions into the base sort's constant table).
    Explicit(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SortKind {
    Symmetric,
    Ordered {
        /// Name of the designated minimum constant (e.g. `bmin` for the
        /// paper's `-1` ballot).
        min_const: String,
    },
    SubsetOf {
        base: String,
        policy: SubsetPolicy,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sort {
    pub name: String,
    pub kind: SortKind,
    /// Prefix used to generate constant names at instantiation (a1, a2, …).
    pub prefix: String,
}

impl Sort {
    pub fn is_ordered(&self) -> bool {
        matches!(self.kind, SortKind::Ordered { .. })
    }

    pub fn is_subset(&self) -> bool {
        matches!(self.kind, SortKind::SubsetOf { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    State,
    Definition,
    Rigid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Type {
    Bool,
    Sort(String),
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bool => write!(f, "bool"),
            Type::Sort(s) => write!(f, "{s}"),
        }
    }
}

/// Defining formula or term of a definition symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Def {
    pub params: Vec<(String, String)>,
    pub body: Formula,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    pub name: String,
    pub args: Vec<String>,
    pub result: Type,
    pub role: Role,
    /// Present exactly for `Role::Definition` symbols (boolean-valued).
    pub def: Option<Def>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) => true,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    False,
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Eq(Term, Term),
    Cmp(CmpOp, Term, Term),
    /// member(element, subset) over a dependent-subset sort.
    Member(Term, Term),
    /// Application of a boolean-valued symbol (state, definition, or rigid).
    App(String, Vec<Term>),
    Forall(Vec<(String, String)>, Box<Formula>),
    Exists(Vec<(String, String)>, Box<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn is_ground(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.free_vars_into(&mut Vec::new(), &mut out);
        out
    }

    fn free_vars_into(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let term = |t: &Term, bound: &Vec<String>, out: &mut Vec<String>| {
            collect_term_vars(t, bound, out);
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Not(f) => f.free_vars_into(bound, out),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.free_vars_into(bound, out);
                }
            }
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.free_vars_into(bound, out);
                b.free_vars_into(bound, out);
            }
            Formula::Eq(a, b) | Formula::Cmp(_, a, b) | Formula::Member(a, b) => {
                term(a, bound, out);
                term(b, bound, out);
            }
            Formula::App(_, args) => {
                for a in args {
                    term(a, bound, out);
                }
            }
            Formula::Forall(vars, body) | Formula::Exists(vars, body) => {
                let n = bound.len();
                bound.extend(vars.iter().map(|(v, _)| v.clone()));
                body.free_vars_into(bound, out);
                bound.truncate(n);
            }
        }
    }
}

fn collect_term_vars(t: &Term, bound: &[String], out: &mut Vec<String>) {
    match t {
        Term::Var(v) => {
            if !bound.iter().any(|b| b == v) && !out.iter().any(|o| o == v) {
                out.push(v.clone());
            }
        }
        Term::Const(_) => {}
        Term::App(_, args) => {
            for a in args {
                collect_term_vars(a, bound, out);
            }
        }
    }
}

/// How one state symbol changes in an action.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateKind {
    Unchanged,
    /// Pointwise redefinition: for all `params`, the symbol's next value at
    /// that argument tuple (EXCEPT-style semantics: typical bodies keep the
    /// old value outside the touched points).
    Pointwise {
        params: Vec<(String, String)>,
        body: UpdateBody,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum UpdateBody {
    /// Next truth value of a boolean state symbol.
    Bool(Formula),
    /// Next value of a sort-valued state symbol, as a guarded case list:
    /// first case whose condition holds supplies the value; the final case
    /// should be a catch-all (condition `true`).
    Cases(Vec<(Formula, Term)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub symbol: String,
    pub kind: UpdateKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub name: String,
    pub params: Vec<(String, String)>,
    pub guard: Formula,
    pub updates: Vec<Update>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedFormula {
    pub name: String,
    pub formula: Formula,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub name: String,
    pub sorts: Vec<Sort>,
    pub symbols: Vec<Symbol>,
    pub axioms: Vec<Formula>,
    pub actions: Vec<Action>,
    pub init: Formula,
    pub safety: Formula,
}

impl Protocol {
    pub fn sort(&self, name: &str) -> Option<&Sort> {
        self.sorts.iter().find(|s| s.name == name)
    }

    pub fn symbol(&self, name: &str) -> Option<&Symbol> {
        self.symbols.iter().find(|s| s.name == name)
    }

    pub fn state_symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.iter().filter(|s| s.role == Role::State)
    }

    pub fn definitions(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.iter().filter(|s| s.role == Role::Definition)
    }
}

// ---------------------------------------------------------------------------
// substitution

/// Capture-avoiding substitution of variables by terms.
pub fn substitute(f: &Formula, binding: &HashMap<String, Term>) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Not(g) => Formula::not(substitute(g, binding)),
        Formula::And(fs) => Formula::And(fs.iter().map(|g| substitute(g, binding)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| substitute(g, binding)).collect()),
        Formula::Implies(a, b) => Formula::implies(substitute(a, binding), substitute(b, binding)),
        Formula::Iff(a, b) => Formula::iff(substitute(a, binding), substitute(b, binding)),
        Formula::Eq(a, b) => Formula::Eq(subst_term(a, binding), subst_term(b, binding)),
        Formula::Cmp(op, a, b) => Formula::Cmp(*op, subst_term(a, binding), subst_term(b, binding)),
        Formula::Member(a, b) => Formula::Member(subst_term(a, binding), subst_term(b, binding)),
        Formula::App(name, args) => Formula::App(
            name.clone(),
            args.iter().map(|t| subst_term(t, binding)).collect(),
        ),
        Formula::Forall(vars, body) | Formula::Exists(vars, body) => {
            // shield bound variables; rename on capture
            let mut inner: HashMap<String, Term> = binding
                .iter()
                .filter(|(k, _)| !vars.iter().any(|(v, _)| v == *k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            let mut new_vars = vars.clone();
            for (v, _) in new_vars.iter_mut() {
                let captured = inner.values().any(|t| term_mentions_var(t, v));
                if captured {
                    let fresh = fresh_name(v, &inner, body);
                    inner.insert(v.clone(), Term::Var(fresh.clone()));
                    *v = fresh;
                }
            }
            let new_body = substitute(body, &inner);
            match f {
                Formula::Forall(..) => Formula::Forall(new_vars, Box::new(new_body)),
                _ => Formula::Exists(new_vars, Box::new(new_body)),
            }
        }
    }
}

pub fn subst_term(t: &Term, binding: &HashMap<String, Term>) -> Term {
    match t {
        Term::Var(v) => binding.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::Const(_) => t.clone(),
        Term::App(name, args) => Term::App(
            name.clone(),
            args.iter().map(|a| subst_term(a, binding)).collect(),
        ),
    }
}

fn term_mentions_var(t: &Term, v: &str) -> bool {
    match t {
        Term::Var(x) => x == v,
        Term::Const(_) => false,
        Term::App(_, args) => args.iter().any(|a| term_mentions_var(a, v)),
    }
}

fn fresh_name(base: &str, binding: &HashMap<String, Term>, body: &Formula) -> String {
    let used = body.free_vars();
    let mut i = 1;
    loop {
        let cand = format!("{base}_{i}");
        let clash = binding.values().any(|t| term_mentions_var(t, &cand))
            || used.iter().any(|u| *u == cand);
        if !clash {
            return cand;
        }
        i += 1;
    }
}

// ---------------------------------------------------------------------------
// constant footprint

/// Distinct constants from `domain` occurring in a ground formula. For an
/// ordered domain the result follows domain order; otherwise first-occurrence
/// order.
pub fn constants_of(f: &Formula, domain: &[String], ordered: bool) -> Vec<String> {
    let mut seen = Vec::new();
    collect_formula_consts(f, domain, &mut seen);
    if ordered {
        seen.sort_by_key(|c| domain.iter().position(|d| d == c));
    }
    seen
}

fn collect_formula_consts(f: &Formula, domain: &[String], out: &mut Vec<String>) {
    let term = |t: &Term, out: &mut Vec<String>| collect_term_consts(t, domain, out);
    match f {
        Formula::True | Formula::False => {}
        Formula::Not(g) => collect_formula_consts(g, domain, out),
        Formula::And(fs) | Formula::Or(fs) => {
            for g in fs {
                collect_formula_consts(g, domain, out);
            }
        }
        Formula::Implies(a, b) | Formula::Iff(a, b) => {
            collect_formula_consts(a, domain, out);
            collect_formula_consts(b, domain, out);
        }
        Formula::Eq(a, b) | Formula::Cmp(_, a, b) | Formula::Member(a, b) => {
            term(a, out);
            term(b, out);
        }
        Formula::App(_, args) => {
            for a in args {
                term(a, out);
            }
        }
        Formula::Forall(_, body) | Formula::Exists(_, body) => {
            collect_formula_consts(body, domain, out);
        }
    }
}

fn collect_term_consts(t: &Term, domain: &[String], out: &mut Vec<String>) {
    match t {
        Term::Var(_) => {}
        Term::Const(c) => {
            if domain.iter().any(|d| d == c) && !out.iter().any(|o| o == c) {
                out.push(c.clone());
            }
        }
        Term::App(_, args) => {
            for a in args {
                collect_term_consts(a, domain, out);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// validation

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub context: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.context, self.message)
    }
}

struct Checker<'a> {
    p: &'a Protocol,
    diags: Vec<Diagnostic>,
    context: String,
    /// Additional constant → sort bindings (instance constants such as the
    /// generated ballot names, available when checking learned invariants).
    extra_consts: &'a HashMap<String, String>,
}

impl<'a> Checker<'a> {
    fn err(&mut self, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            context: self.context.clone(),
            message: message.into(),
        });
    }

    /// Infers the sort of a term, or None on error (already reported).
    fn term_sort(&mut self, t: &Term, env: &HashMap<String, String>) -> Option<String> {
        match t {
            Term::Var(v) => match env.get(v) {
                Some(s) => Some(s.clone()),
                None => {
                    self.err(format!("unbound variable {v}"));
                    None
                }
            },
            Term::Const(c) => {
                if let Some(s) = self.extra_consts.get(c) {
                    return Some(s.clone());
                }
                // rigid 0-ary symbols and ordered minimum constants
                if let Some(sym) = self.p.symbol(c) {
                    if !sym.args.is_empty() {
                        self.err(format!("symbol {c} used without arguments"));
                        return None;
                    }
                    return match &sym.result {
                        Type::Sort(s) => Some(s.clone()),
                        Type::Bool => {
                            self.err(format!("boolean symbol {c} used as term"));
                            None
                        }
                    };
                }
                for s in &self.p.sorts {
                    if let SortKind::Ordered { min_const } = &s.kind {
                        if min_const == c {
                            return Some(s.name.clone());
                        }
                    }
                }
                self.err(format!("unknown constant {c}"));
                None
            }
            Term::App(name, args) => {
                let sym = match self.p.symbol(name) {
                    Some(s) => s.clone(),
                    None => {
                        self.err(format!("unknown symbol {name}"));
                        return None;
                    }
                };
                self.check_args(&sym, args, env);
                match &sym.result {
                    Type::Sort(s) => Some(s.clone()),
                    Type::Bool => {
                        self.err(format!("boolean symbol {name} used as term"));
                        None
                    }
                }
            }
        }
    }

    fn check_args(&mut self, sym: &Symbol, args: &[Term], env: &HashMap<String, String>) {
        if sym.args.len() != args.len() {
            self.err(format!(
                "{} expects {} arguments, got {}",
                sym.name,
                sym.args.len(),
                args.len()
            ));
            return;
        }
        for (expected, arg) in sym.args.iter().zip(args) {
            if let Some(actual) = self.term_sort(arg, env) {
                if &actual != expected {
                    self.err(format!(
                        "argument of {} has sort {actual}, expected {expected}",
                        sym.name
                    ));
                }
            }
        }
    }

    fn check_formula(&mut self, f: &Formula, env: &HashMap<String, String>) {
        match f {
            Formula::True | Formula::False => {}
            Formula::Not(g) => self.check_formula(g, env),
            Formula::And(fs) | Formula::Or(fs) => {
                for g in fs {
                    self.check_formula(g, env);
                }
            }
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                self.check_formula(a, env);
                self.check_formula(b, env);
            }
            Formula::Eq(a, b) => {
                let (sa, sb) = (self.term_sort(a, env), self.term_sort(b, env));
                if let (Some(sa), Some(sb)) = (sa, sb) {
                    if sa != sb {
                        self.err(format!("equality between sorts {sa} and {sb}"));
                    }
                }
            }
            Formula::Cmp(op, a, b) => {
                let (sa, sb) = (self.term_sort(a, env), self.term_sort(b, env));
                if let (Some(sa), Some(sb)) = (sa, sb) {
                    if sa != sb {
                        self.err(format!("{} between sorts {sa} and {sb}", op.as_str()));
                    } else if !self.p.sort(&sa).is_some_and(Sort::is_ordered) {
                        self.err(format!("{} over non-ordered sort {sa}", op.as_str()));
                    }
                }
            }
            Formula::Member(a, b) => {
                let (sa, sb) = (self.term_sort(a, env), self.term_sort(b, env));
                if let (Some(sa), Some(sb)) = (sa, sb) {
                    match self.p.sort(&sb).map(|s| &s.kind) {
                        Some(SortKind::SubsetOf { base, .. }) if *base == sa => {}
                        _ => self.err(format!(
                            "member over ({sa}, {sb}) needs a subset sort of {sa}"
                        )),
                    }
                }
            }
            Formula::App(name, args) => {
                let sym = match self.p.symbol(name) {
                    Some(s) => s.clone(),
                    None => {
                        self.err(format!("unknown symbol {name}"));
                        return;
                    }
                };
                if sym.result != Type::Bool {
                    self.err(format!("{name} is not boolean-valued"));
                }
                self.check_args(&sym, args, env);
            }
            Formula::Forall(vars, body) | Formula::Exists(vars, body) => {
                let mut inner = env.clone();
                for (v, s) in vars {
                    if self.p.sort(s).is_none() {
                        self.err(format!("unknown sort {s} for variable {v}"));
                    }
                    inner.insert(v.clone(), s.clone());
                }
                self.check_formula(body, &inner);
                // every quantified variable must occur in its scope
                let free = body.free_vars();
                for (v, _) in vars {
                    if !free.iter().any(|x| x == v) {
                        self.err(format!("quantified variable {v} unused in scope"));
                    }
                }
            }
        }
    }
}

/// Structural and sort checks; an empty result means the protocol is
/// accepted by every downstream pass.
pub fn validate(p: &Protocol) -> Vec<Diagnostic> {
    let no_extra = HashMap::new();
    let mut ck = Checker {
        p,
        diags: Vec::new(),
        context: String::new(),
        extra_consts: &no_extra,
    };

    for s in &p.sorts {
        ck.context = format!("sort {}", s.name);
        match &s.kind {
            SortKind::SubsetOf { base, .. } => match p.sort(base) {
                Some(b) if b.kind == SortKind::Symmetric => {}
                Some(_) => ck.err(format!("base sort {base} is not symmetric")),
                None => ck.err(format!("unknown base sort {base}")),
            },
            SortKind::Ordered { min_const } => {
                if min_const.is_empty() {
                    ck.err("ordered sort needs a minimum constant");
                }
            }
            SortKind::Symmetric => {}
        }
    }

    for sym in &p.symbols {
        ck.context = format!("symbol {}", sym.name);
        for a in &sym.args {
            if p.sort(a).is_none() {
                ck.err(format!("unknown argument sort {a}"));
            }
        }
        if let Type::Sort(s) = &sym.result {
            if p.sort(s).is_none() {
                ck.err(format!("unknown result sort {s}"));
            }
        }
        match (sym.role, &sym.def) {
            (Role::Definition, Some(d)) => {
                if d.params.len() != sym.args.len()
                    || d.params.iter().zip(&sym.args).any(|((_, s), a)| s != a)
                {
                    ck.err("definition parameters do not match signature");
                }
                if sym.result != Type::Bool {
                    ck.err("definitions must be boolean-valued");
                }
                let env: HashMap<String, String> = d.params.iter().cloned().collect();
                ck.check_formula(&d.body, &env);
                for v in d.body.free_vars() {
                    if !env.contains_key(&v) {
                        ck.err(format!("definition body has unbound variable {v}"));
                    }
                }
            }
            (Role::Definition, None) => ck.err("definition symbol without a body"),
            (_, Some(_)) => ck.err("non-definition symbol carries a body"),
            _ => {}
        }
    }

    ck.context = "init".into();
    ck.check_formula(&p.init, &HashMap::new());
    if !p.init.is_ground() {
        ck.err("init is not a closed formula");
    }
    ck.context = "safety".into();
    ck.check_formula(&p.safety, &HashMap::new());
    if !p.safety.is_ground() {
        ck.err("safety is not a closed formula");
    }
    for (i, ax) in p.axioms.iter().enumerate() {
        ck.context = format!("axiom {i}");
        ck.check_formula(ax, &HashMap::new());
    }

    for act in &p.actions {
        ck.context = format!("action {}", act.name);
        let env: HashMap<String, String> = act.params.iter().cloned().collect();
        for (_, s) in &act.params {
            if p.sort(s).is_none() {
                ck.err(format!("unknown parameter sort {s}"));
            }
        }
        ck.check_formula(&act.guard, &env);
        let mut seen: Vec<&str> = Vec::new();
        for upd in &act.updates {
            if seen.contains(&upd.symbol.as_str()) {
                ck.err(format!("state symbol {} updated twice", upd.symbol));
            }
            seen.push(&upd.symbol);
            let sym = match p.symbol(&upd.symbol) {
                Some(s) if s.role == Role::State => s.clone(),
                Some(_) => {
                    ck.err(format!("{} is not a state symbol", upd.symbol));
                    continue;
                }
                None => {
                    ck.err(format!("unknown state symbol {}", upd.symbol));
                    continue;
                }
            };
            if let UpdateKind::Pointwise { params, body } = &upd.kind {
                if params.len() != sym.args.len()
                    || params.iter().zip(&sym.args).any(|((_, s), a)| s != a)
                {
                    ck.err(format!("update of {} has wrong parameters", sym.name));
                }
                let mut inner = env.clone();
                inner.extend(params.iter().cloned());
                match (body, &sym.result) {
                    (UpdateBody::Bool(f), Type::Bool) => ck.check_formula(f, &inner),
                    (UpdateBody::Cases(cases), Type::Sort(rs)) => {
                        for (cond, val) in cases {
                            ck.check_formula(cond, &inner);
                            if let Some(vs) = ck.term_sort(val, &inner) {
                                if vs != *rs {
                                    ck.err(format!(
                                        "update value of {} has sort {vs}, expected {rs}",
                                        sym.name
                                    ));
                                }
                            }
                        }
                        if !matches!(cases.last(), Some((Formula::True, _))) {
                            ck.err(format!("update of {} lacks a catch-all case", sym.name));
                        }
                    }
                    _ => ck.err(format!("update body of {} has wrong kind", sym.name)),
                }
            }
        }
        for sym in p.state_symbols() {
            if !seen.contains(&sym.name.as_str()) {
                ck.err(format!("state symbol {} missing from updates", sym.name));
            }
        }
    }

    ck.diags
}

/// Checks one closed formula against a protocol, allowing the given extra
/// constants (e.g. instance constants of an ordered sort).
pub fn check_closed_formula(
    p: &Protocol,
    f: &Formula,
    context: &str,
    extra_consts: &HashMap<String, String>,
) -> Vec<Diagnostic> {
    let mut ck = Checker {
        p,
        diags: Vec::new(),
        context: context.to_string(),
        extra_consts,
    };
    ck.check_formula(f, &HashMap::new());
    if !f.is_ground() {
        ck.err("formula is not closed");
    }
    ck.diags
}

// ---------------------------------------------------------------------------
// printing (s-expression surface syntax)

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
            Term::App(name, args) => {
                write!(f, "({name}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn fmt_binders(f: &mut fmt::Formatter<'_>, vars: &[(String, String)]) -> fmt::Result {
    write!(f, "(")?;
    for (i, (v, s)) in vars.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "({v} {s})")?;
    }
    write!(f, ")")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(fs) => {
                write!(f, "(and")?;
                for g in fs {
                    write!(f, " {g}")?;
                }
                write!(f, ")")
            }
            Formula::Or(fs) => {
                write!(f, "(or")?;
                for g in fs {
                    write!(f, " {g}")?;
                }
                write!(f, ")")
            }
            Formula::Implies(a, b) => write!(f, "(=> {a} {b})"),
            Formula::Iff(a, b) => write!(f, "(iff {a} {b})"),
            Formula::Eq(a, b) => write!(f, "(= {a} {b})"),
            Formula::Cmp(op, a, b) => write!(f, "({} {a} {b})", op.as_str()),
            Formula::Member(a, b) => write!(f, "(member {a} {b})"),
            Formula::App(name, args) => {
                if args.is_empty() {
                    write!(f, "{name}")
                } else {
                    write!(f, "({name}")?;
                    for a in args {
                        write!(f, " {a}")?;
                    }
                    write!(f, ")")
                }
            }
            Formula::Forall(vars, body) => {
                write!(f, "(forall ")?;
                fmt_binders(f, vars)?;
                write!(f, " {body})")
            }
            Formula::Exists(vars, body) => {
                write!(f, "(exists ")?;
                fmt_binders(f, vars)?;
                write!(f, " {body})")
            }
        }
    }
}
