//! Minimal s-expression reader for SMT-LIB2 command streams.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s) => Some(s),
            Sexp::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items) => Some(items),
            Sexp::Atom(_) => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(s) => write!(f, "{s}"),
            Sexp::List(items) => {
                write!(f, "(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{it}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Incremental reader: feed text, pop complete toplevel forms.
#[derive(Default)]
pub struct Reader {
    buf: String,
}

impl Reader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_str(&mut self, text: &str) {
        self.buf.push_str(text);
    }

    /// Pops the next complete toplevel form, if one is buffered.
    pub fn next_form(&mut self) -> Result<Option<Sexp>, String> {
        let bytes = self.buf.as_bytes();
        let mut i = 0;
        // skip whitespace and comments
        loop {
            while i < bytes.len() && (bytes[i] as char).is_whitespace() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b';' {
                let comment_start = i;
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                if i >= bytes.len() {
                    // comment may continue in the next chunk
                    self.buf.drain(..comment_start);
                    return Ok(None);
                }
            } else {
                break;
            }
        }
        if i >= bytes.len() {
            self.buf.clear();
            return Ok(None);
        }
        let start = i;
        match parse_at(bytes, i) {
            ParseOutcome::Done(sexp, end) => {
                self.buf.drain(..end);
                let _ = start;
                Ok(Some(sexp))
            }
            ParseOutcome::Incomplete => {
                self.buf.drain(..start);
                Ok(None)
            }
            ParseOutcome::Error(msg) => Err(msg),
        }
    }
}

enum ParseOutcome {
    Done(Sexp, usize),
    Incomplete,
    Error(String),
}

fn parse_at(bytes: &[u8], mut i: usize) -> ParseOutcome {
    // skip whitespace / comments
    loop {
        while i < bytes.len() && (bytes[i] as char).is_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b';' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else {
            break;
        }
    }
    if i >= bytes.len() {
        return ParseOutcome::Incomplete;
    }
    match bytes[i] {
        b'(' => {
            let mut items = Vec::new();
            i += 1;
            loop {
                // skip whitespace / comments
                loop {
                    while i < bytes.len() && (bytes[i] as char).is_whitespace() {
                        i += 1;
                    }
                    if i < bytes.len() && bytes[i] == b';' {
                        while i < bytes.len() && bytes[i] != b'\n' {
                            i += 1;
                        }
                    } else {
                        break;
                    }
                }
                if i >= bytes.len() {
                    return ParseOutcome::Incomplete;
                }
                if bytes[i] == b')' {
                    return ParseOutcome::Done(Sexp::List(items), i + 1);
                }
                match parse_at(bytes, i) {
                    ParseOutcome::Done(s, j) => {
                        items.push(s);
                        i = j;
                    }
                    other => return other,
                }
            }
        }
        b')' => ParseOutcome::Error("unexpected ')'".into()),
        b'"' => {
            let mut j = i + 1;
            let mut s = String::from("\"");
            while j < bytes.len() {
                if bytes[j] == b'"' {
                    // SMT-LIB escapes a quote by doubling it
                    if j + 1 < bytes.len() && bytes[j + 1] == b'"' {
                        s.push('"');
                        j += 2;
                        continue;
                    }
                    s.push('"');
                    return ParseOutcome::Done(Sexp::Atom(s), j + 1);
                }
                s.push(bytes[j] as char);
                j += 1;
            }
            ParseOutcome::Incomplete
        }
        _ => {
            let start = i;
            while i < bytes.len()
                && !(bytes[i] as char).is_whitespace()
                && bytes[i] != b'('
                && bytes[i] != b')'
                && bytes[i] != b';'
            {
                i += 1;
            }
            ParseOutcome::Done(
                Sexp::Atom(String::from_utf8_lossy(&bytes[start..i]).into_owned()),
                i,
            )
        }
    }
}
