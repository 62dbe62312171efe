//! Counterexample trace format (.trc): a single s-expression holding the
//! protocol name and an alternating sequence of full state assignments and
//! the action instances between them:
//!
//! ```text
//! (trace voting
//!   (state (votes.a1.b1.v1 false) ... (maxBal.a1 bmin) ...)
//!   (action VoteFor a1 b1 v1)
//!   (state ...))
//! ```
//!
//! Boolean atoms carry `true`/`false`; function atoms carry the constant
//! name of their value. Comments start with `;`.

use anyhow::{anyhow, bail, Result};

use qinv_core::grounder::{Atom, FiniteInstance, State};
use qinv_core::ic3::{Stats, Trace};

pub fn render(inst: &FiniteInstance, trace: &Trace) -> String {
    let mut out = format!("(trace {}\n", inst.protocol.name);
    for (i, s) in trace.states.iter().enumerate() {
        if i > 0 {
            let (name, args) = &trace.actions[i - 1];
            out.push_str(&format!("  (action {name} {})\n", args.join(" ")));
        }
        out.push_str("  (state");
        for (b, v) in s.bools.iter().enumerate() {
            out.push_str(&format!(
                " ({} {v})",
                inst.atom_name(Atom::Bool(b as u32))
            ));
        }
        for (e, &val) in s.enums.iter().enumerate() {
            let info = &inst.enum_vars[e];
            out.push_str(&format!(
                " ({} {})",
                inst.enum_var_name(e as u32),
                inst.sorts[info.sort].consts[val]
            ));
        }
        out.push_str(")\n");
    }
    out.push_str(")\n");
    out
}

enum Sx {
    Atom(String),
    List(Vec<Sx>),
}

fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut comment = false;
    for c in text.chars() {
        if comment {
            if c == '\n' {
                comment = false;
            }
            continue;
        }
        match c {
            ';' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                comment = true;
            }
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

fn parse_sx(tokens: &[String], pos: &mut usize) -> Result<Sx> {
    match tokens.get(*pos) {
        None => bail!("unexpected end of trace file"),
        Some(t) if t == "(" => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => bail!("unclosed list in trace file"),
                    Some(t) if t == ")" => {
                        *pos += 1;
                        return Ok(Sx::List(items));
                    }
                    _ => items.push(parse_sx(tokens, pos)?),
                }
            }
        }
        Some(t) if t == ")" => bail!("unexpected ) in trace file"),
        Some(t) => {
            *pos += 1;
            Ok(Sx::Atom(t.clone()))
        }
    }
}

fn atom(sx: &Sx) -> Result<&str> {
    match sx {
        Sx::Atom(s) => Ok(s),
        Sx::List(_) => bail!("expected an atom, found a list"),
    }
}

pub fn parse(inst: &FiniteInstance, text: &str) -> Result<Trace> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let form = parse_sx(&tokens, &mut pos)?;
    let items = match &form {
        Sx::List(items) => items,
        Sx::Atom(_) => bail!("trace file must be a single (trace ...) form"),
    };
    if items.is_empty() || atom(&items[0])? != "trace" {
        bail!("trace file must start with (trace <protocol> ...)");
    }
    let name = atom(items.get(1).ok_or_else(|| anyhow!("missing protocol name"))?)?;
    if name != inst.protocol.name {
        bail!(
            "trace is for protocol {name}, expected {}",
            inst.protocol.name
        );
    }

    // atom-name lookup tables for this instance
    let mut bool_by_name = std::collections::HashMap::new();
    for b in 0..inst.bool_atoms.len() {
        bool_by_name.insert(inst.atom_name(Atom::Bool(b as u32)), b);
    }
    let mut enum_by_name = std::collections::HashMap::new();
    for e in 0..inst.enum_vars.len() {
        enum_by_name.insert(inst.enum_var_name(e as u32), e);
    }

    let mut states = Vec::new();
    let mut actions = Vec::new();
    for item in &items[2..] {
        let parts = match item {
            Sx::List(parts) if !parts.is_empty() => parts,
            _ => bail!("trace entries must be (state ...) or (action ...)"),
        };
        match atom(&parts[0])? {
            "action" => {
                let name = atom(
                    parts
                        .get(1)
                        .ok_or_else(|| anyhow!("action entry missing a name"))?,
                )?
                .to_string();
                let args = parts[2..]
                    .iter()
                    .map(|a| atom(a).map(str::to_string))
                    .collect::<Result<Vec<_>>>()?;
                actions.push((name, args));
            }
            "state" => {
                let mut s = State {
                    bools: vec![false; inst.bool_atoms.len()],
                    enums: vec![0; inst.enum_vars.len()],
                };
                for assign in &parts[1..] {
                    let pair = match assign {
                        Sx::List(pair) if pair.len() == 2 => pair,
                        _ => bail!("state assignments must be (atom value) pairs"),
                    };
                    let key = atom(&pair[0])?;
                    let val = atom(&pair[1])?;
                    if let Some(&b) = bool_by_name.get(key) {
                        s.bools[b] = match val {
                            "true" => true,
                            "false" => false,
                            other => bail!("atom {key} has non-boolean value {other}"),
                        };
                    } else if let Some(&e) = enum_by_name.get(key) {
                        let info = &inst.enum_vars[e];
                        let idx = inst.sorts[info.sort]
                            .consts
                            .iter()
                            .position(|c| c == val)
                            .ok_or_else(|| anyhow!("{val} is not a {} constant", inst.sorts[info.sort].name))?;
                        s.enums[e] = idx;
                    } else {
                        bail!("unknown state atom {key}");
                    }
                }
                states.push(s);
            }
            other => bail!("unknown trace entry ({other} ...)"),
        }
    }
    if !states.is_empty() && actions.len() != states.len() - 1 {
        bail!(
            "trace has {} states but {} actions; expected one action between consecutive states",
            states.len(),
            actions.len()
        );
    }
    Ok(Trace {
        states,
        actions,
        stats: Stats::default(),
    })
}
