//! Parsers for the protocol description language and its companion file
//! formats (`.ptp` protocols, `.inv` assertion files, `.map` refinement
//! mappings, `.hchy` hierarchy configs), plus the bundled corpus.
//!
//! All formats are UTF-8 s-expressions; `;` starts a comment running to end
//! of line.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::ir::{
    self, Action, CmpOp, Def, Formula, NamedFormula, Protocol, Role, Sort, SortKind, SubsetPolicy,
    Symbol, Term, Type, Update, UpdateBody, UpdateKind,
};

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("{line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("invalid input:\n{0}")]
    Invalid(String),
}

impl FrontendError {
    fn at(s: &PSexp, message: impl Into<String>) -> Self {
        FrontendError::Parse {
            line: s.line,
            col: s.col,
            message: message.into(),
        }
    }

    fn diags(diags: Vec<ir::Diagnostic>) -> Self {
        FrontendError::Invalid(
            diags
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("\n"),
        )
    }
}

type Result<T> = std::result::Result<T, FrontendError>;

// ---------------------------------------------------------------------------
// position-tracked s-expressions

#[derive(Debug, Clone)]
struct PSexp {
    kind: PKind,
    line: usize,
    col: usize,
}

#[derive(Debug, Clone)]
enum PKind {
    Atom(String),
    List(Vec<PSexp>),
}

impl PSexp {
    fn atom(&self) -> Option<&str> {
        match &self.kind {
            PKind::Atom(a) => Some(a),
            PKind::List(_) => None,
        }
    }

    fn list(&self) -> Result<&[PSexp]> {
        match &self.kind {
            PKind::List(items) => Ok(items),
            PKind::Atom(a) => Err(FrontendError::at(self, format!("expected list, got {a}"))),
        }
    }

    fn expect_atom(&self) -> Result<&str> {
        self.atom()
            .ok_or_else(|| FrontendError::at(self, "expected a name"))
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn parse_all(&mut self) -> Result<Vec<PSexp>> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            if self.chars.peek().is_none() {
                return Ok(out);
            }
            out.push(self.parse_one()?);
        }
    }

    fn parse_one(&mut self) -> Result<PSexp> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        match self.chars.peek() {
            None => Err(FrontendError::Parse {
                line,
                col,
                message: "unexpected end of input".into(),
            }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        Some(')') => {
                            self.bump();
                            return Ok(PSexp {
                                kind: PKind::List(items),
                                line,
                                col,
                            });
                        }
                        None => {
                            return Err(FrontendError::Parse {
                                line,
                                col,
                                message: "unclosed '('".into(),
                            })
                        }
                        _ => items.push(self.parse_one()?),
                    }
                }
            }
            Some(')') => Err(FrontendError::Parse {
                line,
                col,
                message: "unexpected ')'".into(),
            }),
            Some(_) => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(PSexp {
                    kind: PKind::Atom(s),
                    line,
                    col,
                })
            }
        }
    }
}

fn parse_single_form(text: &str, expected_head: &str) -> Result<PSexp> {
    let forms = Lexer::new(text).parse_all()?;
    match forms.len() {
        1 => {
            let f = forms.into_iter().next().unwrap();
            let head = f
                .list()?
                .first()
                .and_then(|h| h.atom())
                .unwrap_or_default()
                .to_string();
            if head != expected_head {
                return Err(FrontendError::at(
                    &f,
                    format!("expected ({expected_head} …), got ({head} …)"),
                ));
            }
            Ok(f)
        }
        0 => Err(FrontendError::Parse {
            line: 1,
            col: 1,
            message: format!("expected one ({expected_head} …) form"),
        }),
        _ => Err(FrontendError::at(
            &forms[1],
            "expected a single toplevel form",
        )),
    }
}

// ---------------------------------------------------------------------------
// formula and term parsing

struct FormulaParser<'a> {
    /// symbol name → (is boolean, arity) for application resolution
    symbols: &'a HashMap<String, usize>,
    /// constants valid as bare terms (ordered minimums, rigid 0-ary symbols)
    consts: &'a HashMap<String, ()>,
}

impl<'a> FormulaParser<'a> {
    fn formula(&self, s: &PSexp, env: &[String]) -> Result<Formula> {
        if let Some(a) = s.atom() {
            return match a {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                name if self.symbols.get(name) == Some(&0) => {
                    Ok(Formula::App(name.to_string(), vec![]))
                }
                _ => Err(FrontendError::at(s, format!("unknown proposition {a}"))),
            };
        }
        let items = s.list()?;
        let head = items
            .first()
            .ok_or_else(|| FrontendError::at(s, "empty formula"))?
            .expect_atom()?;
        let rest = &items[1..];
        match head {
            "and" => Ok(Formula::And(
                rest.iter()
                    .map(|x| self.formula(x, env))
                    .collect::<Result<_>>()?,
            )),
            "or" => Ok(Formula::Or(
                rest.iter()
                    .map(|x| self.formula(x, env))
                    .collect::<Result<_>>()?,
            )),
            "not" => {
                self.expect_arity(s, rest, 1)?;
                Ok(Formula::not(self.formula(&rest[0], env)?))
            }
            "=>" => {
                self.expect_arity(s, rest, 2)?;
                Ok(Formula::implies(
                    self.formula(&rest[0], env)?,
                    self.formula(&rest[1], env)?,
                ))
            }
            "iff" => {
                self.expect_arity(s, rest, 2)?;
                Ok(Formula::iff(
                    self.formula(&rest[0], env)?,
                    self.formula(&rest[1], env)?,
                ))
            }
            "=" => {
                self.expect_arity(s, rest, 2)?;
                Ok(Formula::Eq(
                    self.term(&rest[0], env)?,
                    self.term(&rest[1], env)?,
                ))
            }
            "<" | "<=" | ">" | ">=" => {
                self.expect_arity(s, rest, 2)?;
                let op = match head {
                    "<" => CmpOp::Lt,
                    "<=" => CmpOp::Le,
                    ">" => CmpOp::Gt,
                    _ => CmpOp::Ge,
                };
                Ok(Formula::Cmp(
                    op,
                    self.term(&rest[0], env)?,
                    self.term(&rest[1], env)?,
                ))
            }
            "member" => {
                self.expect_arity(s, rest, 2)?;
                Ok(Formula::Member(
                    self.term(&rest[0], env)?,
                    self.term(&rest[1], env)?,
                ))
            }
            "forall" | "exists" => {
                self.expect_arity(s, rest, 2)?;
                let vars = parse_binders(&rest[0])?;
                let mut inner = env.to_vec();
                inner.extend(vars.iter().map(|(v, _)| v.clone()));
                let body = Box::new(self.formula(&rest[1], &inner)?);
                Ok(if head == "forall" {
                    Formula::Forall(vars, body)
                } else {
                    Formula::Exists(vars, body)
                })
            }
            name if self.symbols.contains_key(name) => Ok(Formula::App(
                name.to_string(),
                rest.iter()
                    .map(|x| self.term(x, env))
                    .collect::<Result<_>>()?,
            )),
            other => Err(FrontendError::at(s, format!("unknown operator {other}"))),
        }
    }

    fn term(&self, s: &PSexp, env: &[String]) -> Result<Term> {
        match &s.kind {
            PKind::Atom(a) => {
                if env.iter().any(|v| v == a) {
                    Ok(Term::Var(a.clone()))
                } else if self.consts.contains_key(a) || self.symbols.get(a) == Some(&0) {
                    Ok(Term::Const(a.clone()))
                } else {
                    // leave resolution to the sort checker: unknown names in
                    // term position may be instance constants
                    Ok(Term::Const(a.clone()))
                }
            }
            PKind::List(items) => {
                let head = items
                    .first()
                    .ok_or_else(|| FrontendError::at(s, "empty term"))?
                    .expect_atom()?;
                let args = items[1..]
                    .iter()
                    .map(|x| self.term(x, env))
                    .collect::<Result<_>>()?;
                Ok(Term::App(head.to_string(), args))
            }
        }
    }

    fn expect_arity(&self, s: &PSexp, rest: &[PSexp], n: usize) -> Result<()> {
        if rest.len() != n {
            return Err(FrontendError::at(s, format!("expected {n} operands")));
        }
        Ok(())
    }
}

fn parse_binders(s: &PSexp) -> Result<Vec<(String, String)>> {
    s.list()?
        .iter()
        .map(|b| {
            let pair = b.list()?;
            if pair.len() != 2 {
                return Err(FrontendError::at(b, "expected (name sort)"));
            }
            Ok((
                pair[0].expect_atom()?.to_string(),
                pair[1].expect_atom()?.to_string(),
            ))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// protocol files

pub fn parse_protocol(text: &str) -> Result<Protocol> {
    let form = parse_single_form(text, "protocol")?;
    let items = form.list()?;
    if items.len() < 2 {
        return Err(FrontendError::at(&form, "protocol needs a name"));
    }
    let name = items[1].expect_atom()?.to_string();

    // first pass: sorts and symbol signatures, so bodies can reference any
    // symbol regardless of declaration order
    let mut sorts = Vec::new();
    let mut symbols: Vec<Symbol> = Vec::new();
    for item in &items[2..] {
        let parts = item.list()?;
        let head = parts
            .first()
            .ok_or_else(|| FrontendError::at(item, "empty clause"))?
            .expect_atom()?;
        match head {
            "sort" => sorts.push(parse_sort(item, parts)?),
            "relation" => {
                let sym_name = parts
                    .get(1)
                    .ok_or_else(|| FrontendError::at(item, "relation needs a name"))?
                    .expect_atom()?
                    .to_string();
                let args = parse_sort_list(
                    parts
                        .get(2)
                        .ok_or_else(|| FrontendError::at(item, "relation needs arguments"))?,
                )?;
                let role = parse_role(parts.get(3))?;
                symbols.push(Symbol {
                    name: sym_name,
                    args,
                    result: Type::Bool,
                    role,
                    def: None,
                });
            }
            "function" => {
                let sym_name = parts
                    .get(1)
                    .ok_or_else(|| FrontendError::at(item, "function needs a name"))?
                    .expect_atom()?
                    .to_string();
                let args = parse_sort_list(
                    parts
                        .get(2)
                        .ok_or_else(|| FrontendError::at(item, "function needs arguments"))?,
                )?;
                let result = parts
                    .get(3)
                    .ok_or_else(|| FrontendError::at(item, "function needs a result sort"))?
                    .expect_atom()?
                    .to_string();
                let role = parse_role(parts.get(4))?;
                symbols.push(Symbol {
                    name: sym_name,
                    args,
                    result: Type::Sort(result),
                    role,
                    def: None,
                });
            }
            "definition" => {
                let sym_name = parts
                    .get(1)
                    .ok_or_else(|| FrontendError::at(item, "definition needs a name"))?
                    .expect_atom()?
                    .to_string();
                let params = parse_binders(
                    parts
                        .get(2)
                        .ok_or_else(|| FrontendError::at(item, "definition needs parameters"))?,
                )?;
                symbols.push(Symbol {
                    name: sym_name,
                    args: params.iter().map(|(_, s)| s.clone()).collect(),
                    result: Type::Bool,
                    role: Role::Definition,
                    def: Some(Def {
                        params,
                        body: Formula::True, // filled in the second pass
                    }),
                });
            }
            "axiom" | "action" | "init" | "safety" => {}
            other => return Err(FrontendError::at(item, format!("unknown clause {other}"))),
        }
    }

    let symbol_arity: HashMap<String, usize> = symbols
        .iter()
        .filter(|s| s.result == Type::Bool)
        .map(|s| (s.name.clone(), s.args.len()))
        .collect();
    let mut consts: HashMap<String, ()> = HashMap::new();
    for s in &sorts {
        if let SortKind::Ordered { min_const } = &s.kind {
            consts.insert(min_const.clone(), ());
        }
    }
    for s in &symbols {
        if s.args.is_empty() && matches!(s.result, Type::Sort(_)) {
            consts.insert(s.name.clone(), ());
        }
    }
    let fp = FormulaParser {
        symbols: &symbol_arity,
        consts: &consts,
    };

    // second pass: bodies
    let mut axioms = Vec::new();
    let mut actions = Vec::new();
    let mut init = None;
    let mut safety = None;
    for item in &items[2..] {
        let parts = item.list()?;
        let head = parts[0].expect_atom()?;
        match head {
            "definition" => {
                let sym_name = parts[1].expect_atom()?;
                let body_form = parts
                    .get(3)
                    .ok_or_else(|| FrontendError::at(item, "definition needs a body"))?;
                let sym = symbols.iter_mut().find(|s| s.name == sym_name).unwrap();
                let params: Vec<String> = sym
                    .def
                    .as_ref()
                    .unwrap()
                    .params
                    .iter()
                    .map(|(v, _)| v.clone())
                    .collect();
                sym.def.as_mut().unwrap().body = fp.formula(body_form, &params)?;
            }
            "axiom" => {
                let body = parts
                    .get(1)
                    .ok_or_else(|| FrontendError::at(item, "axiom needs a body"))?;
                axioms.push(fp.formula(body, &[])?);
            }
            "action" => actions.push(parse_action(item, parts, &fp)?),
            "init" => {
                let body = parts
                    .get(1)
                    .ok_or_else(|| FrontendError::at(item, "init needs a body"))?;
                init = Some(fp.formula(body, &[])?);
            }
            "safety" => {
                let body = parts
                    .get(1)
                    .ok_or_else(|| FrontendError::at(item, "safety needs a body"))?;
                safety = Some(fp.formula(body, &[])?);
            }
            _ => {}
        }
    }

    let p = Protocol {
        name,
        sorts,
        symbols,
        axioms,
        actions,
        init: init.ok_or_else(|| FrontendError::at(&form, "missing (init …)"))?,
        safety: safety.ok_or_else(|| FrontendError::at(&form, "missing (safety …)"))?,
    };
    let diags = ir::validate(&p);
    if !diags.is_empty() {
        return Err(FrontendError::diags(diags));
    }
    Ok(p)
}

fn parse_role(part: Option<&PSexp>) -> Result<Role> {
    match part {
        None => Ok(Role::State),
        Some(p) => match p.expect_atom()? {
            "rigid" => Ok(Role::Rigid),
            "state" => Ok(Role::State),
            other => Err(FrontendError::at(p, format!("unknown role {other}"))),
        },
    }
}

fn parse_sort_list(s: &PSexp) -> Result<Vec<String>> {
    s.list()?
        .iter()
        .map(|x| Ok(x.expect_atom()?.to_string()))
        .collect()
}

fn parse_sort(item: &PSexp, parts: &[PSexp]) -> Result<Sort> {
    let name = parts
        .get(1)
        .ok_or_else(|| FrontendError::at(item, "sort needs a name"))?
        .expect_atom()?
        .to_string();
    let kind_part = parts
        .get(2)
        .ok_or_else(|| FrontendError::at(item, "sort needs a kind"))?;
    let mut prefix = name.chars().take(1).collect::<String>();
    let kind = match kind_part.atom() {
        Some("symmetric") => {
            for extra in &parts[3..] {
                let kv = extra.list()?;
                match kv.first().and_then(|k| k.atom()) {
                    Some("prefix") => prefix = kv[1].expect_atom()?.to_string(),
                    _ => return Err(FrontendError::at(extra, "unknown sort attribute")),
                }
            }
            SortKind::Symmetric
        }
        Some("ordered") => {
            let mut min_const = String::new();
            for extra in &parts[3..] {
                let kv = extra.list()?;
                match kv.first().and_then(|k| k.atom()) {
                    Some("min") => min_const = kv[1].expect_atom()?.to_string(),
                    Some("prefix") => prefix = kv[1].expect_atom()?.to_string(),
                    _ => return Err(FrontendError::at(extra, "unknown sort attribute")),
                }
            }
            if min_const.is_empty() {
                return Err(FrontendError::at(item, "ordered sort needs (min name)"));
            }
            SortKind::Ordered { min_const }
        }
        _ => {
            let kv = kind_part.list()?;
            match kv.first().and_then(|k| k.atom()) {
                Some("subsets-of") => {
                    let base = kv
                        .get(1)
                        .ok_or_else(|| FrontendError::at(kind_part, "subsets-of needs a base"))?
                        .expect_atom()?
                        .to_string();
                    let policy = match kv.get(2) {
                        Some(p) if p.atom() == Some("majority") => SubsetPolicy::Majority,
                        Some(p) => {
                            let pl = p.list()?;
                            if pl.first().and_then(|k| k.atom()) != Some("explicit") {
                                return Err(FrontendError::at(p, "expected majority or explicit"));
                            }
                            let mut subsets = Vec::new();
                            for sub in &pl[1..] {
                                let idxs = sub
                                    .list()?
                                    .iter()
                                    .map(|i| {
                                        i.expect_atom()?
                                            .parse::<usize>()
                                            .map_err(|_| {
                                                FrontendError::at(i, "expected a 1-based index")
                                            })?
                                            .checked_sub(1)
                                            .ok_or_else(|| {
                                                FrontendError::at(i, "indices are 1-based")
                                            })
                                    })
                                    .collect::<Result<Vec<_>>>()?;
                                subsets.push(idxs);
                            }
                            SubsetPolicy::Explicit(subsets)
                        }
                        None => SubsetPolicy::Majority,
                    };
                    SortKind::SubsetOf { base, policy }
                }
                _ => return Err(FrontendError::at(kind_part, "unknown sort kind")),
            }
        }
    };
    Ok(Sort { name, kind, prefix })
}

fn parse_action(item: &PSexp, parts: &[PSexp], fp: &FormulaParser<'_>) -> Result<Action> {
    let name = parts
        .get(1)
        .ok_or_else(|| FrontendError::at(item, "action needs a name"))?
        .expect_atom()?
        .to_string();
    let params = parse_binders(
        parts
            .get(2)
            .ok_or_else(|| FrontendError::at(item, "action needs parameters"))?,
    )?;
    let env: Vec<String> = params.iter().map(|(v, _)| v.clone()).collect();
    let mut guard = Formula::True;
    let mut updates = Vec::new();
    for clause in &parts[3..] {
        let c = clause.list()?;
        match c.first().and_then(|h| h.atom()) {
            Some("guard") => {
                let body = c
                    .get(1)
                    .ok_or_else(|| FrontendError::at(clause, "guard needs a body"))?;
                guard = fp.formula(body, &env)?;
            }
            Some("unchanged") => {
                updates.push(Update {
                    symbol: c
                        .get(1)
                        .ok_or_else(|| FrontendError::at(clause, "unchanged needs a symbol"))?
                        .expect_atom()?
                        .to_string(),
                    kind: UpdateKind::Unchanged,
                });
            }
            Some("update") => {
                let symbol = c
                    .get(1)
                    .ok_or_else(|| FrontendError::at(clause, "update needs a symbol"))?
                    .expect_atom()?
                    .to_string();
                let uparams = parse_binders(
                    c.get(2)
                        .ok_or_else(|| FrontendError::at(clause, "update needs parameters"))?,
                )?;
                let body_form = c
                    .get(3)
                    .ok_or_else(|| FrontendError::at(clause, "update needs a body"))?;
                let mut inner = env.clone();
                inner.extend(uparams.iter().map(|(v, _)| v.clone()));
                let body = parse_update_body(body_form, fp, &inner)?;
                updates.push(Update {
                    symbol,
                    kind: UpdateKind::Pointwise {
                        params: uparams,
                        body,
                    },
                });
            }
            _ => return Err(FrontendError::at(clause, "unknown action clause")),
        }
    }
    Ok(Action {
        name,
        params,
        guard,
        updates,
    })
}

fn parse_update_body(s: &PSexp, fp: &FormulaParser<'_>, env: &[String]) -> Result<UpdateBody> {
    if let Ok(items) = s.list() {
        if items.first().and_then(|h| h.atom()) == Some("cases") {
            let mut cases = Vec::new();
            for c in &items[1..] {
                let pair = c.list()?;
                if pair.len() != 2 {
                    return Err(FrontendError::at(c, "expected (condition value)"));
                }
                let cond = if pair[0].atom() == Some("else") {
                    Formula::True
                } else {
                    fp.formula(&pair[0], env)?
                };
                cases.push((cond, fp.term(&pair[1], env)?));
            }
            return Ok(UpdateBody::Cases(cases));
        }
    }
    Ok(UpdateBody::Bool(fp.formula(s, env)?))
}

// ---------------------------------------------------------------------------
// assertion files

pub fn parse_assertions(text: &str, p: &Protocol) -> Result<Vec<NamedFormula>> {
    parse_assertions_with_consts(text, p, &HashMap::new())
}

/// Like [`parse_assertions`], but allowing extra constants (e.g. instance
/// constants such as generated ballot names in learned invariants).
pub fn parse_assertions_with_consts(
    text: &str,
    p: &Protocol,
    extra_consts: &HashMap<String, String>,
) -> Result<Vec<NamedFormula>> {
    let trimmed: String = text
        .lines()
        .map(|l| l.split(';').next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join("\n");
    if trimmed.trim().is_empty() {
        return Ok(Vec::new());
    }
    let form = parse_single_form(text, "invariants")?;
    let items = form.list()?;
    let symbol_arity: HashMap<String, usize> = p
        .symbols
        .iter()
        .filter(|s| s.result == Type::Bool)
        .map(|s| (s.name.clone(), s.args.len()))
        .collect();
    let consts = HashMap::new();
    let fp = FormulaParser {
        symbols: &symbol_arity,
        consts: &consts,
    };
    let mut out = Vec::new();
    for item in items.iter().skip(2) {
        let parts = item.list()?;
        if parts.first().and_then(|h| h.atom()) != Some("assertion") {
            return Err(FrontendError::at(item, "expected (assertion name body)"));
        }
        let name = parts
            .get(1)
            .ok_or_else(|| FrontendError::at(item, "assertion needs a name"))?
            .expect_atom()?
            .to_string();
        let body = parts
            .get(2)
            .ok_or_else(|| FrontendError::at(item, "assertion needs a body"))?;
        let formula = fp.formula(body, &[])?;
        let diags = ir::check_closed_formula(p, &formula, &format!("assertion {name}"), extra_consts);
        if !diags.is_empty() {
            return Err(FrontendError::diags(diags));
        }
        out.push(NamedFormula { name, formula });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// refinement mappings

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolMap {
    pub high: String,
    pub low: String,
    /// Trailing arguments present on the low-level symbol but not the
    /// high-level one; mapped assertions close over them universally.
    pub extra_args: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementMapping {
    pub high: String,
    pub low: String,
    pub maps: Vec<SymbolMap>,
}

impl RefinementMapping {
    pub fn map_for(&self, high_symbol: &str) -> Option<&SymbolMap> {
        self.maps.iter().find(|m| m.high == high_symbol)
    }
}

pub fn parse_mapping(text: &str, high: &Protocol, low: &Protocol) -> Result<RefinementMapping> {
    let form = parse_single_form(text, "mapping")?;
    let items = form.list()?;
    let mut high_name = String::new();
    let mut low_name = String::new();
    let mut maps = Vec::new();
    for item in &items[1..] {
        let parts = item.list()?;
        match parts.first().and_then(|h| h.atom()) {
            Some("high") => high_name = parts[1].expect_atom()?.to_string(),
            Some("low") => low_name = parts[1].expect_atom()?.to_string(),
            Some("map") => {
                let h = parts
                    .get(1)
                    .ok_or_else(|| FrontendError::at(item, "map needs two symbols"))?
                    .expect_atom()?
                    .to_string();
                let l = parts
                    .get(2)
                    .ok_or_else(|| FrontendError::at(item, "map needs two symbols"))?
                    .expect_atom()?
                    .to_string();
                let mut extra_args = Vec::new();
                if let Some(extra) = parts.get(3) {
                    let e = extra.list()?;
                    if e.first().and_then(|h| h.atom()) != Some("extra-args") {
                        return Err(FrontendError::at(extra, "expected (extra-args …)"));
                    }
                    for b in &e[1..] {
                        let pair = b.list()?;
                        extra_args.push((
                            pair[0].expect_atom()?.to_string(),
                            pair[1].expect_atom()?.to_string(),
                        ));
                    }
                }
                maps.push(SymbolMap {
                    high: h,
                    low: l,
                    extra_args,
                });
            }
            _ => return Err(FrontendError::at(item, "unknown mapping clause")),
        }
    }
    let mapping = RefinementMapping {
        high: high_name,
        low: low_name,
        maps,
    };
    validate_mapping(&mapping, high, low).map_err(FrontendError::Invalid)?;
    Ok(mapping)
}

fn validate_mapping(
    m: &RefinementMapping,
    high: &Protocol,
    low: &Protocol,
) -> std::result::Result<(), String> {
    if m.high != high.name || m.low != low.name {
        return Err(format!(
            "mapping is for {} → {}, expected {} → {}",
            m.high, m.low, high.name, low.name
        ));
    }
    for sym in high.symbols.iter().filter(|s| s.role != Role::Rigid) {
        let sm = m
            .map_for(&sym.name)
            .ok_or_else(|| format!("high-level symbol {} is unmapped", sym.name))?;
        let lsym = low
            .symbol(&sm.low)
            .ok_or_else(|| format!("unknown low-level symbol {}", sm.low))?;
        let mut expected_args = sym.args.clone();
        expected_args.extend(sm.extra_args.iter().map(|(_, s)| s.clone()));
        if lsym.args != expected_args {
            return Err(format!(
                "signature mismatch mapping {} to {}: ({}) vs ({})",
                sym.name,
                lsym.name,
                expected_args.join(" "),
                lsym.args.join(" ")
            ));
        }
        if (sym.result == Type::Bool) != (lsym.result == Type::Bool) {
            return Err(format!(
                "result kind mismatch mapping {} to {}",
                sym.name, lsym.name
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// hierarchy configs

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyLevel {
    pub name: String,
    pub protocol_file: String,
    /// Predecessor level name and mapping file, absent for the root level.
    pub from: Option<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyConfig {
    pub name: String,
    pub levels: Vec<HierarchyLevel>,
}

pub fn parse_hierarchy(text: &str) -> Result<HierarchyConfig> {
    let form = parse_single_form(text, "hierarchy")?;
    let items = form.list()?;
    let name = items
        .get(1)
        .ok_or_else(|| FrontendError::at(&form, "hierarchy needs a name"))?
        .expect_atom()?
        .to_string();
    let mut levels = Vec::new();
    for item in &items[2..] {
        let parts = item.list()?;
        if parts.first().and_then(|h| h.atom()) != Some("level") {
            return Err(FrontendError::at(item, "expected (level …)"));
        }
        let lname = parts
            .get(1)
            .ok_or_else(|| FrontendError::at(item, "level needs a name"))?
            .expect_atom()?
            .to_string();
        let file = parts
            .get(2)
            .ok_or_else(|| FrontendError::at(item, "level needs a protocol file"))?
            .expect_atom()?
            .to_string();
        let from = match parts.get(3) {
            None => None,
            Some(f) => {
                let fl = f.list()?;
                if fl.first().and_then(|h| h.atom()) != Some("from") {
                    return Err(FrontendError::at(f, "expected (from level mapping-file)"));
                }
                Some((
                    fl[1].expect_atom()?.to_string(),
                    fl[2].expect_atom()?.to_string(),
                ))
            }
        };
        levels.push(HierarchyLevel {
            name: lname,
            protocol_file: file,
            from,
        });
    }
    for (i, l) in levels.iter().enumerate() {
        match (&l.from, i) {
            (None, 0) => {}
            (Some((prev, _)), i) if i > 0 && levels[i - 1].name == *prev => {}
            _ => {
                return Err(FrontendError::Invalid(format!(
                    "level {} must chain from its predecessor",
                    l.name
                )))
            }
        }
    }
    Ok(HierarchyConfig { name, levels })
}

// ---------------------------------------------------------------------------
// pretty printing

/// Canonical s-expression rendering; `parse_protocol ∘ pretty_print` is the
/// identity, and printing a freshly parsed corpus file reproduces its token
/// stream.
pub fn pretty_print(p: &Protocol) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(protocol {}", p.name);
    for s in &p.sorts {
        match &s.kind {
            SortKind::Symmetric => {
                let _ = writeln!(out, "  (sort {} symmetric (prefix {}))", s.name, s.prefix);
            }
            SortKind::Ordered { min_const } => {
                let _ = writeln!(
                    out,
                    "  (sort {} ordered (min {}) (prefix {}))",
                    s.name, min_const, s.prefix
                );
            }
            SortKind::SubsetOf { base, policy } => match policy {
                SubsetPolicy::Majority => {
                    let _ = writeln!(out, "  (sort {} (subsets-of {} majority))", s.name, base);
                }
                SubsetPolicy::Explicit(subsets) => {
                    let rendered: Vec<String> = subsets
                        .iter()
                        .map(|sub| {
                            let idxs: Vec<String> =
                                sub.iter().map(|i| (i + 1).to_string()).collect();
                            format!("({})", idxs.join(" "))
                        })
                        .collect();
                    let _ = writeln!(
                        out,
                        "  (sort {} (subsets-of {} (explicit {})))",
                        s.name,
                        base,
                        rendered.join(" ")
                    );
                }
            },
        }
    }
    for sym in &p.symbols {
        match (&sym.result, sym.role) {
            (Type::Bool, Role::State) => {
                let _ = writeln!(out, "  (relation {} ({}))", sym.name, sym.args.join(" "));
            }
            (Type::Bool, Role::Definition) => {
                let d = sym.def.as_ref().expect("definition body");
                let _ = writeln!(
                    out,
                    "  (definition {} {} {})",
                    sym.name,
                    binders(&d.params),
                    d.body
                );
            }
            (Type::Sort(rs), role) => {
                let suffix = if role == Role::Rigid { " rigid" } else { "" };
                let _ = writeln!(
                    out,
                    "  (function {} ({}) {rs}{suffix})",
                    sym.name,
                    sym.args.join(" ")
                );
            }
            (Type::Bool, Role::Rigid) => {
                let _ = writeln!(
                    out,
                    "  (relation {} ({}) rigid)",
                    sym.name,
                    sym.args.join(" ")
                );
            }
        }
    }
    for ax in &p.axioms {
        let _ = writeln!(out, "  (axiom {ax})");
    }
    for act in &p.actions {
        let _ = writeln!(out, "  (action {} {}", act.name, binders(&act.params));
        let _ = writeln!(out, "    (guard {})", act.guard);
        for u in &act.updates {
            match &u.kind {
                UpdateKind::Unchanged => {
                    let _ = writeln!(out, "    (unchanged {})", u.symbol);
                }
                UpdateKind::Pointwise { params, body } => match body {
                    UpdateBody::Bool(f) => {
                        let _ = writeln!(out, "    (update {} {} {f})", u.symbol, binders(params));
                    }
                    UpdateBody::Cases(cases) => {
                        let rendered: Vec<String> = cases
                            .iter()
                            .map(|(c, v)| {
                                if *c == Formula::True {
                                    format!("(else {v})")
                                } else {
                                    format!("({c} {v})")
                                }
                            })
                            .collect();
                        let _ = writeln!(
                            out,
                            "    (update {} {} (cases {}))",
                            u.symbol,
                            binders(params),
                            rendered.join(" ")
                        );
                    }
                },
            }
        }
        let _ = writeln!(out, "  )");
    }
    let _ = writeln!(out, "  (init {})", p.init);
    let _ = writeln!(out, "  (safety {}))", p.safety);
    out
}

fn binders(vars: &[(String, String)]) -> String {
    let parts: Vec<String> = vars.iter().map(|(v, s)| format!("({v} {s})")).collect();
    format!("({})", parts.join(" "))
}

// ---------------------------------------------------------------------------
// bundled corpus

pub mod corpus {
    pub const VOTING: &str = include_str!("../../../corpus/voting.ptp");
    pub const VOTING_NOAXIOM: &str = include_str!("../../../corpus/voting_noaxiom.ptp");
    pub const SIMPLE_PAXOS: &str = include_str!("../../../corpus/simple_paxos.ptp");
    pub const IMPLICIT_PAXOS: &str = include_str!("../../../corpus/implicit_paxos.ptp");
    pub const PAXOS: &str = include_str!("../../../corpus/paxos.ptp");

    pub const VOTING_HUMAN_INV: &str = include_str!("../../../corpus/voting_human.inv");
    pub const SIMPLE_PAXOS_HUMAN_INV: &str =
        include_str!("../../../corpus/simple_paxos_human.inv");
    pub const IMPLICIT_PAXOS_HUMAN_INV: &str =
        include_str!("../../../corpus/implicit_paxos_human.inv");
    pub const PAXOS_HUMAN_INV: &str = include_str!("../../../corpus/paxos_human.inv");

    pub const VOTING_TO_SIMPLE_PAXOS_MAP: &str =
        include_str!("../../../corpus/voting_to_simple_paxos.map");
    pub const SIMPLE_PAXOS_TO_IMPLICIT_PAXOS_MAP: &str =
        include_str!("../../../corpus/simple_paxos_to_implicit_paxos.map");
    pub const IMPLICIT_PAXOS_TO_PAXOS_MAP: &str =
        include_str!("../../../corpus/implicit_paxos_to_paxos.map");

    pub const PAXOS4_HCHY: &str = include_str!("../../../corpus/paxos4.hchy");

    /// Protocol source by corpus name.
    pub fn protocol_text(name: &str) -> Option<&'static str> {
        match name {
            "voting" => Some(VOTING),
            "voting_noaxiom" => Some(VOTING_NOAXIOM),
            "simple_paxos" => Some(SIMPLE_PAXOS),
            "implicit_paxos" => Some(IMPLICIT_PAXOS),
            "paxos" => Some(PAXOS),
            _ => None,
        }
    }

    /// Mapping file content by file name (as referenced from `.hchy` files).
    pub fn file_text(name: &str) -> Option<&'static str> {
        match name {
            "voting.ptp" => Some(VOTING),
            "voting_noaxiom.ptp" => Some(VOTING_NOAXIOM),
            "simple_paxos.ptp" => Some(SIMPLE_PAXOS),
            "implicit_paxos.ptp" => Some(IMPLICIT_PAXOS),
            "paxos.ptp" => Some(PAXOS),
            "voting_to_simple_paxos.map" => Some(VOTING_TO_SIMPLE_PAXOS_MAP),
            "simple_paxos_to_implicit_paxos.map" => Some(SIMPLE_PAXOS_TO_IMPLICIT_PAXOS_MAP),
            "implicit_paxos_to_paxos.map" => Some(IMPLICIT_PAXOS_TO_PAXOS_MAP),
            "voting_human.inv" => Some(VOTING_HUMAN_INV),
            "simple_paxos_human.inv" => Some(SIMPLE_PAXOS_HUMAN_INV),
            "implicit_paxos_human.inv" => Some(IMPLICIT_PAXOS_HUMAN_INV),
            "paxos_human.inv" => Some(PAXOS_HUMAN_INV),
            "paxos4.hchy" => Some(PAXOS4_HCHY),
            _ => None,
        }
    }
}

/// Loads a bundled corpus protocol by name.
pub fn bundled(name: &str) -> Result<Protocol> {
    let text = corpus::protocol_text(name)
        .ok_or_else(|| FrontendError::Invalid(format!("unknown bundled protocol {name}")))?;
    parse_protocol(text)
}
