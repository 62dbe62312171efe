//! Finite instantiation: fixes a protocol at concrete sort sizes, enumerates
//! dependent-subset sorts, expands quantifiers and definitions, and builds
//! the ground transition relation as labeled action disjuncts.
//!
//! Ground state is a vector of boolean atoms (one per boolean state symbol
//! and argument tuple) plus enumerated variables (one per sort-valued state
//! symbol and argument tuple). Definitions become auxiliary boolean atoms
//! constrained by biconditionals in both frames, never inlined, so learned
//! clauses can mention them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::ir::{
    Formula, Protocol, Role, SortKind, SubsetPolicy, Term, Type, UpdateBody, UpdateKind,
};

#[derive(Debug, Error)]
pub enum GroundError {
    #[error("sort {0} has no assigned size")]
    MissingSize(String),
    #[error("sort {0}: {1}")]
    BadSize(String, String),
    #[error("axiom does not hold on this instance: {0}")]
    AxiomViolated(String),
    #[error("axiom does not fold to a constant (must only constrain rigid symbols)")]
    AxiomNotRigid,
    #[error("{0}")]
    Expand(String),
}

type Result<T> = std::result::Result<T, GroundError>;

/// Sizes for symmetric and ordered sorts; dependent-subset sizes are derived.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SizeAssignment(pub BTreeMap<String, usize>);

impl SizeAssignment {
    pub fn new(pairs: &[(&str, usize)]) -> Self {
        SizeAssignment(
            pairs
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        )
    }
}

/// A ground atom: boolean state bit, auxiliary definition bit, or an
/// equation `var = value` over an enumerated state variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Bool(u32),
    Def(u32),
    EnumEq { var: u32, val: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GLit {
    pub atom: Atom,
    pub pos: bool,
}

impl GLit {
    pub fn new(atom: Atom, pos: bool) -> Self {
        GLit { atom, pos }
    }

    pub fn negated(self) -> Self {
        GLit {
            atom: self.atom,
            pos: !self.pos,
        }
    }
}

/// Ground clause: a disjunction of literals, kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause(pub Vec<GLit>);

impl Clause {
    pub fn new(mut lits: Vec<GLit>) -> Self {
        lits.sort();
        lits.dedup();
        Clause(lits)
    }

    pub fn subsumes(&self, other: &Clause) -> bool {
        // both sorted: subset test
        let mut it = other.0.iter();
        self.0
            .iter()
            .all(|l| it.by_ref().any(|o| o == l))
    }
}

/// Ground cube: a conjunction of literals (e.g. a blocked bad state).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube(pub Vec<GLit>);

impl Cube {
    pub fn new(mut lits: Vec<GLit>) -> Self {
        lits.sort();
        lits.dedup();
        Cube(lits)
    }

    /// The clause blocking this cube.
    pub fn negation(&self) -> Clause {
        Clause::new(self.0.iter().map(|l| l.negated()).collect())
    }
}

/// Ground formula over current-state (`Lit`) and next-state (`Next`) atoms.
#[derive(Debug, Clone, PartialEq)]
pub enum G {
    True,
    False,
    Lit(GLit),
    Next(GLit),
    Not(Box<G>),
    And(Vec<G>),
    Or(Vec<G>),
    Iff(Box<G>, Box<G>),
}

pub fn g_and(parts: Vec<G>) -> G {
    let mut out = Vec::new();
    for p in parts {
        match p {
            G::True => {}
            G::False => return G::False,
            G::And(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => G::True,
        1 => out.pop().unwrap(),
        _ => G::And(out),
    }
}

pub fn g_or(parts: Vec<G>) -> G {
    let mut out = Vec::new();
    for p in parts {
        match p {
            G::False => {}
            G::True => return G::True,
            G::Or(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => G::False,
        1 => out.pop().unwrap(),
        _ => G::Or(out),
    }
}

pub fn g_not(g: G) -> G {
    match g {
        G::True => G::False,
        G::False => G::True,
        G::Not(inner) => *inner,
        G::Lit(l) => G::Lit(l.negated()),
        G::Next(l) => G::Next(l.negated()),
        other => G::Not(Box::new(other)),
    }
}

pub fn g_iff(a: G, b: G) -> G {
    match (a, b) {
        (G::True, x) | (x, G::True) => x,
        (G::False, x) | (x, G::False) => g_not(x),
        (a, b) => G::Iff(Box::new(a), Box::new(b)),
    }
}

#[derive(Debug, Clone)]
pub struct SortTable {
    pub name: String,
    pub consts: Vec<String>,
    pub ordered: bool,
    /// For subset sorts: index of the base sort and per-constant membership
    /// bitmaps over the base sort's constants.
    pub base: Option<usize>,
    pub members: Vec<Vec<bool>>,
}

/// A ground atom's provenance: which symbol at which argument tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomInfo {
    pub symbol: usize,
    pub args: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumVarInfo {
    pub symbol: usize,
    pub args: Vec<usize>,
    /// Result sort index (domain of the variable).
    pub sort: usize,
}

/// One labeled disjunct of the ground transition relation.
#[derive(Debug, Clone)]
pub struct ActionDisjunct {
    pub action: String,
    pub args: Vec<String>,
    pub guard: G,
    pub formula: G,
}

/// Complete assignment to the ground state variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub bools: Vec<bool>,
    pub enums: Vec<usize>,
}

#[derive(Debug)]
pub struct FiniteInstance {
    pub protocol: Protocol,
    pub sizes: SizeAssignment,
    pub sorts: Vec<SortTable>,
    pub bool_atoms: Vec<AtomInfo>,
    pub enum_vars: Vec<EnumVarInfo>,
    pub def_atoms: Vec<AtomInfo>,
    bool_index: HashMap<(usize, Vec<usize>), u32>,
    enum_index: HashMap<(usize, Vec<usize>), u32>,
    def_index: HashMap<(usize, Vec<usize>), u32>,
    const_index: HashMap<String, (usize, usize)>,
    /// 0-ary rigid sort-valued symbols pinned to a constant.
    rigid_values: HashMap<String, (usize, usize)>,
    pub init: G,
    pub safety: G,
    /// Definition-atom biconditional bodies, in evaluation order.
    pub def_constraints: Vec<(u32, G)>,
    pub disjuncts: Vec<ActionDisjunct>,
    /// Per action: (name, parameter tuples, tuples kept after folding).
    pub action_tuple_counts: Vec<(String, usize, usize)>,
    /// Disjunct count when every action ranges over the full existential
    /// signature of Next (the union of all action parameter sorts).
    pub next_signature_tuples: usize,
}

#[derive(Debug, Clone, Copy)]
enum Resolved {
    Const(usize, usize),
    Enum(u32),
}

pub fn instantiate(p: &Protocol, sz: &SizeAssignment) -> Result<FiniteInstance> {
    // constant tables
    let mut sorts = Vec::new();
    for s in &p.sorts {
        match &s.kind {
            SortKind::Symmetric => {
                let n = *sz
                    .0
                    .get(&s.name)
                    .ok_or_else(|| GroundError::MissingSize(s.name.clone()))?;
                if n == 0 {
                    return Err(GroundError::BadSize(s.name.clone(), "size 0".into()));
                }
                let consts = (1..=n).map(|i| format!("{}{i}", s.prefix)).collect();
                sorts.push(SortTable {
                    name: s.name.clone(),
                    consts,
                    ordered: false,
                    base: None,
                    members: Vec::new(),
                });
            }
            SortKind::Ordered { min_const } => {
                let n = *sz
                    .0
                    .get(&s.name)
                    .ok_or_else(|| GroundError::MissingSize(s.name.clone()))?;
                if n < 2 {
                    return Err(GroundError::BadSize(
                        s.name.clone(),
                        "ordered sorts need size ≥ 2".into(),
                    ));
                }
                let mut consts = vec![min_const.clone()];
                for i in 1..=(n - 2) {
                    consts.push(format!("{}{i}", s.prefix));
                }
                consts.push(format!("{}max", s.prefix));
                sorts.push(SortTable {
                    name: s.name.clone(),
                    consts,
                    ordered: true,
                    base: None,
                    members: Vec::new(),
                });
            }
            SortKind::SubsetOf { base, policy } => {
                let base_idx = p
                    .sorts
                    .iter()
                    .position(|b| b.name == *base)
                    .expect("validated base sort");
                let n = *sz
                    .0
                    .get(base)
                    .ok_or_else(|| GroundError::MissingSize(base.clone()))?;
                let subsets: Vec<Vec<usize>> = match policy {
                    SubsetPolicy::Majority => {
                        if n == 0 {
                            return Err(GroundError::BadSize(
                                s.name.clone(),
                                "majority of an empty sort".into(),
                            ));
                        }
                        combinations(n, (n + 1).div_ceil(2))
                    }
                    SubsetPolicy::Explicit(list) => {
                        for sub in list {
                            if sub.iter().any(|&i| i >= n) {
                                return Err(GroundError::BadSize(
                                    s.name.clone(),
                                    "explicit subset index out of range".into(),
                                ));
                            }
                        }
                        list.clone()
                    }
                };
                let mut consts = Vec::new();
                let mut members = Vec::new();
                for sub in &subsets {
                    let digits: Vec<String> = sub.iter().map(|i| (i + 1).to_string()).collect();
                    let sep = if n > 9 { "_" } else { "" };
                    consts.push(format!("{}{}", s.prefix, digits.join(sep)));
                    let mut bitmap = vec![false; n];
                    for &i in sub {
                        bitmap[i] = true;
                    }
                    members.push(bitmap);
                }
                sorts.push(SortTable {
                    name: s.name.clone(),
                    consts,
                    ordered: false,
                    base: Some(base_idx),
                    members,
                });
            }
        }
    }

    let mut const_index = HashMap::new();
    for (si, t) in sorts.iter().enumerate() {
        for (ci, c) in t.consts.iter().enumerate() {
            const_index.insert(c.clone(), (si, ci));
        }
    }

    // rigid 0-ary sort-valued symbols are pinned to the first constant of
    // their sort; the symmetric group then acts on the remaining constants
    let mut rigid_values = HashMap::new();
    for sym in &p.symbols {
        if sym.role == Role::Rigid && sym.args.is_empty() {
            if let Type::Sort(rs) = &sym.result {
                let si = p.sorts.iter().position(|s| s.name == *rs).unwrap();
                rigid_values.insert(sym.name.clone(), (si, 0));
            }
        }
    }

    // atom tables
    let mut bool_atoms = Vec::new();
    let mut enum_vars = Vec::new();
    let mut def_atoms = Vec::new();
    let mut bool_index = HashMap::new();
    let mut enum_index = HashMap::new();
    let mut def_index = HashMap::new();
    for (yi, sym) in p.symbols.iter().enumerate() {
        if sym.role == Role::Rigid {
            continue;
        }
        let arg_sorts: Vec<usize> = sym
            .args
            .iter()
            .map(|a| p.sorts.iter().position(|s| s.name == *a).unwrap())
            .collect();
        for tuple in tuples(&arg_sorts.iter().map(|&si| sorts[si].consts.len()).collect::<Vec<_>>())
        {
            match (&sym.result, sym.role) {
                (Type::Bool, Role::State) => {
                    bool_index.insert((yi, tuple.clone()), bool_atoms.len() as u32);
                    bool_atoms.push(AtomInfo {
                        symbol: yi,
                        args: tuple,
                    });
                }
                (Type::Bool, Role::Definition) => {
                    def_index.insert((yi, tuple.clone()), def_atoms.len() as u32);
                    def_atoms.push(AtomInfo {
                        symbol: yi,
                        args: tuple,
                    });
                }
                (Type::Sort(rs), Role::State) => {
                    let rsi = p.sorts.iter().position(|s| s.name == *rs).unwrap();
                    enum_index.insert((yi, tuple.clone()), enum_vars.len() as u32);
                    enum_vars.push(EnumVarInfo {
                        symbol: yi,
                        args: tuple,
                        sort: rsi,
                    });
                }
                _ => {}
            }
        }
    }

    let mut inst = FiniteInstance {
        protocol: p.clone(),
        sizes: sz.clone(),
        sorts,
        bool_atoms,
        enum_vars,
        def_atoms,
        bool_index,
        enum_index,
        def_index,
        const_index,
        rigid_values,
        init: G::True,
        safety: G::True,
        def_constraints: Vec::new(),
        disjuncts: Vec::new(),
        action_tuple_counts: Vec::new(),
        next_signature_tuples: 0,
    };

    // axioms must fold to true (they constrain only rigid structure)
    for ax in &p.axioms {
        match inst.expand(ax)? {
            G::True => {}
            G::False => return Err(GroundError::AxiomViolated(ax.to_string())),
            _ => return Err(GroundError::AxiomNotRigid),
        }
    }

    inst.init = inst.expand(&p.init)?;
    inst.safety = inst.expand(&p.safety)?;

    // definition biconditional bodies, in declaration (= evaluation) order
    let mut constraints = Vec::new();
    for (di, info) in inst.def_atoms.iter().enumerate() {
        let sym = &p.symbols[info.symbol];
        let def = sym.def.as_ref().expect("definition body");
        let mut env = HashMap::new();
        for ((v, s), &ci) in def.params.iter().zip(&info.args) {
            let si = p.sorts.iter().position(|x| x.name == *s).unwrap();
            env.insert(v.clone(), (si, ci));
        }
        constraints.push((di as u32, inst.expand_env(&def.body, &env)?));
    }
    inst.def_constraints = constraints;

    inst.ground_transition()?;
    Ok(inst)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
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

/// All index tuples over the given domain sizes, lexicographic.
pub fn tuples(domain_sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &n in domain_sizes {
        let mut next = Vec::with_capacity(out.len() * n);
        for t in &out {
            for i in 0..n {
                let mut t2 = t.clone();
                t2.push(i);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

impl FiniteInstance {
    pub fn sort_idx(&self, name: &str) -> Option<usize> {
        self.sorts.iter().position(|s| s.name == name)
    }

    pub fn const_lookup(&self, name: &str) -> Option<(usize, usize)> {
        self.const_index
            .get(name)
            .or_else(|| self.rigid_values.get(name))
            .copied()
    }

    pub fn bool_atom(&self, symbol: usize, args: &[usize]) -> Option<u32> {
        self.bool_index.get(&(symbol, args.to_vec())).copied()
    }

    pub fn def_atom(&self, symbol: usize, args: &[usize]) -> Option<u32> {
        self.def_index.get(&(symbol, args.to_vec())).copied()
    }

    pub fn enum_var(&self, symbol: usize, args: &[usize]) -> Option<u32> {
        self.enum_index.get(&(symbol, args.to_vec())).copied()
    }

    /// (boolean state bits, enum-encoded bits, total).
    pub fn state_bits(&self) -> (usize, usize, usize) {
        let bools = self.bool_atoms.len();
        let enum_bits: usize = self
            .enum_vars
            .iter()
            .map(|v| {
                let n = self.sorts[v.sort].consts.len();
                usize::BITS as usize - (n - 1).leading_zeros() as usize
            })
            .sum();
        (bools, enum_bits, bools + enum_bits)
    }

    pub fn atom_name(&self, atom: Atom) -> String {
        match atom {
            Atom::Bool(i) => self.info_name(&self.bool_atoms[i as usize]),
            Atom::Def(i) => self.info_name(&self.def_atoms[i as usize]),
            Atom::EnumEq { var, val } => {
                let info = &self.enum_vars[var as usize];
                format!(
                    "{}={}",
                    self.enum_var_name(var),
                    self.sorts[info.sort].consts[val as usize]
                )
            }
        }
    }

    pub fn enum_var_name(&self, var: u32) -> String {
        let info = &self.enum_vars[var as usize];
        let sym = &self.protocol.symbols[info.symbol];
        let arg_names: Vec<&str> = sym
            .args
            .iter()
            .zip(&info.args)
            .map(|(s, &ci)| {
                let si = self.sort_idx(s).unwrap();
                self.sorts[si].consts[ci].as_str()
            })
            .collect();
        if arg_names.is_empty() {
            sym.name.clone()
        } else {
            format!("{}.{}", sym.name, arg_names.join("."))
        }
    }

    fn info_name(&self, info: &AtomInfo) -> String {
        let sym = &self.protocol.symbols[info.symbol];
        let arg_names: Vec<&str> = sym
            .args
            .iter()
            .zip(&info.args)
            .map(|(s, &ci)| {
                let si = self.sort_idx(s).unwrap();
                self.sorts[si].consts[ci].as_str()
            })
            .collect();
        if arg_names.is_empty() {
            sym.name.clone()
        } else {
            format!("{}.{}", sym.name, arg_names.join("."))
        }
    }

    /// Renders a literal like `votes.a1.b2.v1` or `~maxBal.a1=b2`.
    pub fn lit_name(&self, l: GLit) -> String {
        let n = self.atom_name(l.atom);
        if l.pos {
            n
        } else {
            format!("~{n}")
        }
    }

    // -- expansion ---------------------------------------------------------

    /// Expands a closed formula to ground form.
    pub fn expand(&self, f: &Formula) -> Result<G> {
        self.expand_env(f, &HashMap::new())
    }

    pub fn expand_env(&self, f: &Formula, env: &HashMap<String, (usize, usize)>) -> Result<G> {
        match f {
            Formula::True => Ok(G::True),
            Formula::False => Ok(G::False),
            Formula::Not(g) => Ok(g_not(self.expand_env(g, env)?)),
            Formula::And(fs) => Ok(g_and(
                fs.iter()
                    .map(|g| self.expand_env(g, env))
                    .collect::<Result<_>>()?,
            )),
            Formula::Or(fs) => Ok(g_or(
                fs.iter()
                    .map(|g| self.expand_env(g, env))
                    .collect::<Result<_>>()?,
            )),
            Formula::Implies(a, b) => Ok(g_or(vec![
                g_not(self.expand_env(a, env)?),
                self.expand_env(b, env)?,
            ])),
            Formula::Iff(a, b) => Ok(g_iff(self.expand_env(a, env)?, self.expand_env(b, env)?)),
            Formula::Eq(a, b) => {
                let ra = self.resolve(a, env)?;
                let rb = self.resolve(b, env)?;
                Ok(self.eq_g(ra, rb))
            }
            Formula::Cmp(op, a, b) => {
                let ra = self.resolve(a, env)?;
                let rb = self.resolve(b, env)?;
                let test = |x: usize, y: usize| match op {
                    crate::ir::CmpOp::Lt => x < y,
                    crate::ir::CmpOp::Le => x <= y,
                    crate::ir::CmpOp::Gt => x > y,
                    crate::ir::CmpOp::Ge => x >= y,
                };
                Ok(match (ra, rb) {
                    (Resolved::Const(_, i), Resolved::Const(_, j)) => {
                        if test(i, j) {
                            G::True
                        } else {
                            G::False
                        }
                    }
                    (Resolved::Enum(v), Resolved::Const(_, j)) => {
                        let n = self.enum_domain(v);
                        g_or((0..n)
                            .filter(|&i| test(i, j))
                            .map(|i| self.enum_eq(v, i))
                            .collect())
                    }
                    (Resolved::Const(_, i), Resolved::Enum(v)) => {
                        let n = self.enum_domain(v);
                        g_or((0..n)
                            .filter(|&j| test(i, j))
                            .map(|j| self.enum_eq(v, j))
                            .collect())
                    }
                    (Resolved::Enum(v1), Resolved::Enum(v2)) => {
                        let (n1, n2) = (self.enum_domain(v1), self.enum_domain(v2));
                        let mut parts = Vec::new();
                        for i in 0..n1 {
                            for j in 0..n2 {
                                if test(i, j) {
                                    parts.push(g_and(vec![
                                        self.enum_eq(v1, i),
                                        self.enum_eq(v2, j),
                                    ]));
                                }
                            }
                        }
                        g_or(parts)
                    }
                })
            }
            Formula::Member(e, q) => {
                let re = self.resolve(e, env)?;
                let rq = self.resolve(q, env)?;
                match (re, rq) {
                    (Resolved::Const(_, ei), Resolved::Const(qs, qi)) => {
                        let t = &self.sorts[qs];
                        if t.members[qi][ei] {
                            Ok(G::True)
                        } else {
                            Ok(G::False)
                        }
                    }
                    _ => Err(GroundError::Expand(
                        "member over non-constant terms".into(),
                    )),
                }
            }
            Formula::App(name, args) => {
                let yi = self
                    .protocol
                    .symbols
                    .iter()
                    .position(|s| s.name == *name)
                    .ok_or_else(|| GroundError::Expand(format!("unknown symbol {name}")))?;
                let resolved: Vec<Resolved> = args
                    .iter()
                    .map(|t| self.resolve(t, env))
                    .collect::<Result<_>>()?;
                self.app_g(yi, &resolved, &mut Vec::new(), 0)
            }
            Formula::Forall(vars, body) | Formula::Exists(vars, body) => {
                let domain_sizes: Vec<usize> = vars
                    .iter()
                    .map(|(_, s)| {
                        let si = self.sort_idx(s).unwrap();
                        self.sorts[si].consts.len()
                    })
                    .collect();
                let sort_idxs: Vec<usize> =
                    vars.iter().map(|(_, s)| self.sort_idx(s).unwrap()).collect();
                let mut parts = Vec::new();
                for t in tuples(&domain_sizes) {
                    let mut inner = env.clone();
                    for (((v, _), si), ci) in vars.iter().zip(&sort_idxs).zip(&t) {
                        inner.insert(v.clone(), (*si, *ci));
                    }
                    parts.push(self.expand_env(body, &inner)?);
                }
                Ok(match f {
                    Formula::Forall(..) => g_and(parts),
                    _ => g_or(parts),
                })
            }
        }
    }

    fn enum_domain(&self, v: u32) -> usize {
        self.sorts[self.enum_vars[v as usize].sort].consts.len()
    }

    fn enum_eq(&self, var: u32, val: usize) -> G {
        G::Lit(GLit::new(
            Atom::EnumEq {
                var,
                val: val as u32,
            },
            true,
        ))
    }

    fn eq_g(&self, a: Resolved, b: Resolved) -> G {
        match (a, b) {
            (Resolved::Const(_, i), Resolved::Const(_, j)) => {
                if i == j {
                    G::True
                } else {
                    G::False
                }
            }
            (Resolved::Enum(v), Resolved::Const(_, i))
            | (Resolved::Const(_, i), Resolved::Enum(v)) => self.enum_eq(v, i),
            (Resolved::Enum(v1), Resolved::Enum(v2)) => {
                let n = self.enum_domain(v1).min(self.enum_domain(v2));
                g_or((0..n)
                    .map(|i| g_and(vec![self.enum_eq(v1, i), self.enum_eq(v2, i)]))
                    .collect())
            }
        }
    }

    /// Builds the atom for `symbol(args…)`, case-splitting over any argument
    /// that resolved to an enumerated variable.
    fn app_g(
        &self,
        symbol: usize,
        args: &[Resolved],
        fixed: &mut Vec<usize>,
        pos: usize,
    ) -> Result<G> {
        if pos == args.len() {
            let sym = &self.protocol.symbols[symbol];
            let atom = match sym.role {
                Role::Definition => Atom::Def(self.def_atom(symbol, fixed).ok_or_else(|| {
                    GroundError::Expand(format!("no definition atom for {}", sym.name))
                })?),
                Role::State => Atom::Bool(self.bool_atom(symbol, fixed).ok_or_else(|| {
                    GroundError::Expand(format!("no state atom for {}", sym.name))
                })?),
                Role::Rigid => {
                    return Err(GroundError::Expand(format!(
                        "boolean rigid symbol {} has no ground atom",
                        sym.name
                    )))
                }
            };
            return Ok(G::Lit(GLit::new(atom, true)));
        }
        match args[pos] {
            Resolved::Const(_, i) => {
                fixed.push(i);
                let g = self.app_g(symbol, args, fixed, pos + 1)?;
                fixed.pop();
                Ok(g)
            }
            Resolved::Enum(v) => {
                let n = self.enum_domain(v);
                let mut parts = Vec::new();
                for i in 0..n {
                    fixed.push(i);
                    let inner = self.app_g(symbol, args, fixed, pos + 1)?;
                    fixed.pop();
                    parts.push(g_and(vec![self.enum_eq(v, i), inner]));
                }
                Ok(g_or(parts))
            }
        }
    }

    fn resolve(&self, t: &Term, env: &HashMap<String, (usize, usize)>) -> Result<Resolved> {
        match t {
            Term::Var(v) => env
                .get(v)
                .map(|&(s, i)| Resolved::Const(s, i))
                .ok_or_else(|| GroundError::Expand(format!("unbound variable {v}"))),
            Term::Const(c) => self
                .const_lookup(c)
                .map(|(s, i)| Resolved::Const(s, i))
                .ok_or_else(|| GroundError::Expand(format!("unknown constant {c}"))),
            Term::App(name, args) => {
                let yi = self
                    .protocol
                    .symbols
                    .iter()
                    .position(|s| s.name == *name)
                    .ok_or_else(|| GroundError::Expand(format!("unknown symbol {name}")))?;
                if args.is_empty() {
                    if let Some(&(s, i)) = self.rigid_values.get(name) {
                        return Ok(Resolved::Const(s, i));
                    }
                }
                let mut fixed = Vec::new();
                for a in args {
                    match self.resolve(a, env)? {
                        Resolved::Const(_, i) => fixed.push(i),
                        Resolved::Enum(_) => {
                            return Err(GroundError::Expand(format!(
                                "nested function application in argument of {name}"
                            )))
                        }
                    }
                }
                self.enum_var(yi, &fixed)
                    .map(Resolved::Enum)
                    .ok_or_else(|| GroundError::Expand(format!("no variable for {name} tuple")))
            }
        }
    }

    // -- transition relation ------------------------------------------------

    fn ground_transition(&mut self) -> Result<()> {
        let p = self.protocol.clone();
        // the existential signature of Next: union of parameter sorts over
        // all actions, with the per-sort multiplicity of the widest action
        let mut next_sig: BTreeMap<usize, usize> = BTreeMap::new();
        for act in &p.actions {
            let mut per: BTreeMap<usize, usize> = BTreeMap::new();
            for (_, s) in &act.params {
                *per.entry(self.sort_idx(s).unwrap()).or_default() += 1;
            }
            for (si, m) in per {
                let e = next_sig.entry(si).or_default();
                *e = (*e).max(m);
            }
        }
        let sig_product: usize = next_sig
            .iter()
            .map(|(&si, &m)| self.sorts[si].consts.len().pow(m as u32))
            .product();
        self.next_signature_tuples = p.actions.len() * sig_product;

        let mut disjuncts = Vec::new();
        let mut counts = Vec::new();
        for act in &p.actions {
            let sort_idxs: Vec<usize> = act
                .params
                .iter()
                .map(|(_, s)| self.sort_idx(s).unwrap())
                .collect();
            let domain: Vec<usize> = sort_idxs
                .iter()
                .map(|&si| self.sorts[si].consts.len())
                .collect();
            let all = tuples(&domain);
            let total = all.len();
            let mut kept = 0;
            for t in all {
                let mut env = HashMap::new();
                for (((v, _), si), ci) in act.params.iter().zip(&sort_idxs).zip(&t) {
                    env.insert(v.clone(), (*si, *ci));
                }
                let guard = self.expand_env(&act.guard, &env)?;
                if guard == G::False {
                    continue;
                }
                kept += 1;
                let mut parts = vec![guard.clone()];
                for upd in &act.updates {
                    parts.push(self.ground_update(upd, &env)?);
                }
                disjuncts.push(ActionDisjunct {
                    action: act.name.clone(),
                    args: t
                        .iter()
                        .zip(&sort_idxs)
                        .map(|(&ci, &si)| self.sorts[si].consts[ci].clone())
                        .collect(),
                    guard,
                    formula: g_and(parts),
                });
            }
            counts.push((act.name.clone(), total, kept));
        }
        self.disjuncts = disjuncts;
        self.action_tuple_counts = counts;
        Ok(())
    }

    fn ground_update(
        &self,
        upd: &crate::ir::Update,
        env: &HashMap<String, (usize, usize)>,
    ) -> Result<G> {
        let yi = self
            .protocol
            .symbols
            .iter()
            .position(|s| s.name == upd.symbol)
            .unwrap();
        let sym = self.protocol.symbols[yi].clone();
        let arg_sorts: Vec<usize> = sym
            .args
            .iter()
            .map(|a| self.sort_idx(a).unwrap())
            .collect();
        let domain: Vec<usize> = arg_sorts
            .iter()
            .map(|&si| self.sorts[si].consts.len())
            .collect();
        let mut parts = Vec::new();
        for t in tuples(&domain) {
            match &upd.kind {
                UpdateKind::Unchanged => match &sym.result {
                    Type::Bool => {
                        let a = Atom::Bool(self.bool_atom(yi, &t).unwrap());
                        parts.push(g_iff(
                            G::Next(GLit::new(a, true)),
                            G::Lit(GLit::new(a, true)),
                        ));
                    }
                    Type::Sort(_) => {
                        let v = self.enum_var(yi, &t).unwrap();
                        parts.push(self.enum_unchanged(v));
                    }
                },
                UpdateKind::Pointwise { params, body } => {
                    let mut inner = env.clone();
                    for (((pv, _), si), ci) in params.iter().zip(&arg_sorts).zip(&t) {
                        inner.insert(pv.clone(), (*si, *ci));
                    }
                    match body {
                        UpdateBody::Bool(f) => {
                            let a = Atom::Bool(self.bool_atom(yi, &t).unwrap());
                            parts.push(g_iff(
                                G::Next(GLit::new(a, true)),
                                self.expand_env(f, &inner)?,
                            ));
                        }
                        UpdateBody::Cases(cases) => {
                            let v = self.enum_var(yi, &t).unwrap();
                            let mut prior_neg = Vec::new();
                            let mut constraint = Vec::new();
                            for (cond, val) in cases {
                                let c = self.expand_env(cond, &inner)?;
                                let fires = g_and(
                                    prior_neg
                                        .iter()
                                        .cloned()
                                        .chain(std::iter::once(c.clone()))
                                        .collect(),
                                );
                                let target = self.resolve(val, &inner)?;
                                constraint.push(g_or(vec![
                                    g_not(fires),
                                    self.next_eq(v, target),
                                ]));
                                prior_neg.push(g_not(c));
                            }
                            parts.push(g_and(constraint));
                        }
                    }
                }
            }
        }
        Ok(g_and(parts))
    }

    fn enum_unchanged(&self, v: u32) -> G {
        let n = self.enum_domain(v);
        g_and(
            (0..n)
                .map(|i| {
                    let a = Atom::EnumEq {
                        var: v,
                        val: i as u32,
                    };
                    g_iff(G::Next(GLit::new(a, true)), G::Lit(GLit::new(a, true)))
                })
                .collect(),
        )
    }

    fn next_eq(&self, v: u32, target: Resolved) -> G {
        match target {
            Resolved::Const(_, i) => G::Next(GLit::new(
                Atom::EnumEq {
                    var: v,
                    val: i as u32,
                },
                true,
            )),
            Resolved::Enum(v2) => {
                let n = self.enum_domain(v).min(self.enum_domain(v2));
                g_or((0..n)
                    .map(|i| {
                        g_and(vec![
                            G::Next(GLit::new(
                                Atom::EnumEq {
                                    var: v,
                                    val: i as u32,
                                },
                                true,
                            )),
                            self.enum_eq(v2, i),
                        ])
                    })
                    .collect())
            }
        }
    }

    // -- evaluation ----------------------------------------------------------

    /// Computes all auxiliary definition atoms from a state, in declaration
    /// order (definitions may reference earlier definitions).
    pub fn compute_defs(&self, s: &State) -> Vec<bool> {
        let mut defs = vec![false; self.def_atoms.len()];
        for (di, body) in &self.def_constraints {
            defs[*di as usize] = self.eval_with(body, s, &defs, None);
        }
        defs
    }

    /// Evaluates a ground formula on a state (with precomputed definition
    /// atoms) and optionally a successor state for next-state literals.
    pub fn eval_with(
        &self,
        g: &G,
        cur: &State,
        cur_defs: &[bool],
        next: Option<(&State, &[bool])>,
    ) -> bool {
        match g {
            G::True => true,
            G::False => false,
            G::Lit(l) => self.eval_lit(*l, cur, cur_defs),
            G::Next(l) => {
                let (ns, nd) = next.expect("next-state literal without successor");
                self.eval_lit(*l, ns, nd)
            }
            G::Not(inner) => !self.eval_with(inner, cur, cur_defs, next),
            G::And(parts) => parts.iter().all(|p| self.eval_with(p, cur, cur_defs, next)),
            G::Or(parts) => parts.iter().any(|p| self.eval_with(p, cur, cur_defs, next)),
            G::Iff(a, b) => {
                self.eval_with(a, cur, cur_defs, next) == self.eval_with(b, cur, cur_defs, next)
            }
        }
    }

    fn eval_lit(&self, l: GLit, s: &State, defs: &[bool]) -> bool {
        let v = match l.atom {
            Atom::Bool(i) => s.bools[i as usize],
            Atom::Def(i) => defs[i as usize],
            Atom::EnumEq { var, val } => s.enums[var as usize] == val as usize,
        };
        v == l.pos
    }

    /// Evaluates a closed formula with defs computed on the fly.
    pub fn eval(&self, g: &G, s: &State) -> bool {
        let defs = self.compute_defs(s);
        self.eval_with(g, s, &defs, None)
    }

    /// Applies an action disjunct's update semantics to a state; `None`
    /// when the guard is false. Updates are deterministic per disjunct.
    pub fn apply_action(&self, s: &State, d: &ActionDisjunct) -> Option<State> {
        let defs = self.compute_defs(s);
        if !self.eval_with(&d.guard, s, &defs, None) {
            return None;
        }
        let p = &self.protocol;
        let act = p.actions.iter().find(|a| a.name == d.action).unwrap();
        let mut env = HashMap::new();
        for ((pv, ps), cname) in act.params.iter().zip(&d.args) {
            let si = self.sort_idx(ps).unwrap();
            let ci = self.sorts[si].consts.iter().position(|c| c == cname).unwrap();
            env.insert(pv.clone(), (si, ci));
        }
        let mut next = s.clone();
        for upd in &act.updates {
            let yi = p.symbols.iter().position(|x| x.name == upd.symbol).unwrap();
            let UpdateKind::Pointwise { params, body } = &upd.kind else {
                continue;
            };
            let arg_sorts: Vec<usize> = p.symbols[yi]
                .args
                .iter()
                .map(|a| self.sort_idx(a).unwrap())
                .collect();
            let domain: Vec<usize> = arg_sorts
                .iter()
                .map(|&si| self.sorts[si].consts.len())
                .collect();
            for t in tuples(&domain) {
                let mut inner = env.clone();
                for (((pv, _), si), ci) in params.iter().zip(&arg_sorts).zip(&t) {
                    inner.insert(pv.clone(), (*si, *ci));
                }
                match body {
                    UpdateBody::Bool(f) => {
                        let g = self.expand_env(f, &inner).expect("update body grounds");
                        let idx = self.bool_atom(yi, &t).unwrap();
                        next.bools[idx as usize] = self.eval_with(&g, s, &defs, None);
                    }
                    UpdateBody::Cases(cases) => {
                        let v = self.enum_var(yi, &t).unwrap();
                        for (cond, val) in cases {
                            let c = self.expand_env(cond, &inner).expect("case grounds");
                            if self.eval_with(&c, s, &defs, None) {
                                next.enums[v as usize] = match self
                                    .resolve(val, &inner)
                                    .expect("case value grounds")
                                {
                                    Resolved::Const(_, i) => i,
                                    Resolved::Enum(v2) => s.enums[v2 as usize],
                                };
                                break;
                            }
                        }
                    }
                }
            }
        }
        Some(next)
    }

    /// A clause as a ground formula over current-state atoms.
    pub fn clause_g(&self, c: &Clause) -> G {
        g_or(c.0.iter().map(|&l| G::Lit(l)).collect())
    }

    /// A cube as a ground formula over current-state atoms.
    pub fn cube_g(&self, c: &Cube) -> G {
        g_and(c.0.iter().map(|&l| G::Lit(l)).collect())
    }

    pub fn initial_states_hint(&self) -> State {
        State {
            bools: vec![false; self.bool_atoms.len()],
            enums: vec![0; self.enum_vars.len()],
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Bool(i) => write!(f, "b{i}"),
            Atom::Def(i) => write!(f, "d{i}"),
            Atom::EnumEq { var, val } => write!(f, "e{var}={val}"),
        }
    }
}
