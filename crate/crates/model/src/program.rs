//! Textual op-program format: one statement per line,
//! `result = OP(arg1, arg2, attr=value)`, comments starting with `#`.
//! Programs are SSA: every variable is assigned once and used after its
//! definition. The parser type-checks arguments (key, ciphertext, decoded
//! output) so later stages never see malformed dataflow.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::recipes::HintId;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Key,
    Cipher,
    /// Decoded output of DEC; cannot feed further ops.
    Plain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpKind {
    Keygen,
    Enc,
    Dec,
    Fadd,
    AddCp,
    MultCp,
    Fmul,
    Frot { steps: i64 },
    Fbot,
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::Keygen => "KEYGEN",
            OpKind::Enc => "ENC",
            OpKind::Dec => "DEC",
            OpKind::Fadd => "FADD",
            OpKind::AddCp => "ADDCP",
            OpKind::MultCp => "MULTCP",
            OpKind::Fmul => "FMUL",
            OpKind::Frot { .. } => "FROT",
            OpKind::Fbot => "FBOT",
        }
    }

    /// The persistent hint this op consumes, if any. Bootstrap hints are
    /// one-shot and not worth grouping for reuse.
    pub fn reusable_hint(&self) -> Option<HintId> {
        match self {
            OpKind::Fmul => Some(HintId::Relin),
            OpKind::Frot { steps } => Some(HintId::Rotation(*steps)),
            _ => None,
        }
    }

    fn arg_kinds(&self) -> &'static [VarKind] {
        match self {
            OpKind::Keygen => &[],
            OpKind::Enc => &[VarKind::Key],
            OpKind::Dec => &[VarKind::Cipher, VarKind::Key],
            OpKind::Fadd | OpKind::Fmul => &[VarKind::Cipher, VarKind::Cipher],
            OpKind::AddCp | OpKind::MultCp | OpKind::Fbot => &[VarKind::Cipher],
            OpKind::Frot { .. } => &[VarKind::Cipher],
        }
    }

    fn result_kind(&self) -> VarKind {
        match self {
            OpKind::Keygen => VarKind::Key,
            OpKind::Dec => VarKind::Plain,
            _ => VarKind::Cipher,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Statement {
    pub line: usize,
    pub result: String,
    pub op: OpKind,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct OpProgram {
    pub statements: Vec<Statement>,
}

impl OpProgram {
    /// Op-name histogram, for trace headers and sanity checks.
    pub fn histogram(&self) -> BTreeMap<&'static str, u64> {
        let mut h = BTreeMap::new();
        for s in &self.statements {
            *h.entry(s.op.name()).or_insert(0) += 1;
        }
        h
    }

    /// Distinct rotation step values, sorted; key generation prepares one
    /// rotation hint per entry.
    pub fn rotation_steps(&self) -> Vec<i64> {
        let set: BTreeSet<i64> = self
            .statements
            .iter()
            .filter_map(|s| match s.op {
                OpKind::Frot { steps } => Some(steps),
                _ => None,
            })
            .collect();
        set.into_iter().collect()
    }
}

struct LineParser<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: format!("column {}: {}", self.pos + 1, msg.into()),
        }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn eat(&mut self, ch: char) -> Result<(), Error> {
        self.skip_ws();
        if self.rest().starts_with(ch) {
            self.pos += ch.len_utf8();
            Ok(())
        } else {
            Err(self.err(format!("expected '{ch}'")))
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn ident(&mut self) -> Result<&'a str, Error> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest
            .char_indices()
            .find(|(i, c)| {
                !(c.is_ascii_alphanumeric() || *c == '_' || (*i > 0 && *c == '.'))
            })
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        if end == 0 || rest.as_bytes()[0].is_ascii_digit() {
            return Err(self.err("expected identifier"));
        }
        let out = &rest[..end];
        self.pos += end;
        Ok(out)
    }

    fn integer(&mut self) -> Result<i64, Error> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest
            .char_indices()
            .find(|(i, c)| !(c.is_ascii_digit() || (*i == 0 && *c == '-')))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        let token = &rest[..end];
        let value = token
            .parse::<i64>()
            .map_err(|_| self.err("expected integer"))?;
        self.pos += end;
        Ok(value)
    }
}

/// Parses and validates a program. Errors carry the 1-based line and column.
pub fn parse_program(text: &str) -> Result<OpProgram, Error> {
    let mut program = OpProgram::default();
    let mut vars: HashMap<String, VarKind> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let mut p = LineParser { text: body, pos: 0, line: line_no };
        let result = p.ident()?.to_string();
        p.eat('=')?;
        let op_name = p.ident()?.to_string();
        p.eat('(')?;
        let mut args: Vec<String> = Vec::new();
        let mut attrs: Vec<(String, i64)> = Vec::new();
        if p.peek() != Some(')') {
            loop {
                let name = p.ident()?.to_string();
                if p.peek() == Some('=') {
                    p.eat('=')?;
                    let value = p.integer()?;
                    if attrs.iter().any(|(n, _)| *n == name) {
                        return Err(p.err(format!("duplicate attribute '{name}'")));
                    }
                    attrs.push((name, value));
                } else {
                    if !attrs.is_empty() {
                        return Err(p.err("positional argument after attribute"));
                    }
                    args.push(name);
                }
                match p.peek() {
                    Some(',') => p.eat(',')?,
                    Some(')') => break,
                    _ => return Err(p.err("expected ',' or ')'")),
                }
            }
        }
        p.eat(')')?;
        p.skip_ws();
        if !p.rest().is_empty() {
            return Err(p.err("trailing input after statement"));
        }

        let mut take_attr = |key: &str| -> Option<i64> {
            let pos = attrs.iter().position(|(n, _)| n == key)?;
            Some(attrs.remove(pos).1)
        };
        let op = match op_name.as_str() {
            "KEYGEN" => OpKind::Keygen,
            "ENC" => OpKind::Enc,
            "DEC" => OpKind::Dec,
            "FADD" => OpKind::Fadd,
            "ADDCP" => OpKind::AddCp,
            "MULTCP" => OpKind::MultCp,
            "FMUL" => OpKind::Fmul,
            "FROT" => {
                let steps = take_attr("steps").ok_or_else(|| {
                    Error::Parse { line: line_no, msg: "FROT requires steps=<int>".into() }
                })?;
                OpKind::Frot { steps }
            }
            "FBOT" => OpKind::Fbot,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unknown op '{other}'"),
                })
            }
        };
        if let Some((name, _)) = attrs.first() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("unknown attribute '{name}' for {}", op.name()),
            });
        }

        let expected = op.arg_kinds();
        if args.len() != expected.len() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!(
                    "{} takes {} argument(s), got {}",
                    op.name(),
                    expected.len(),
                    args.len()
                ),
            });
        }
        for (arg, &kind) in args.iter().zip(expected) {
            match vars.get(arg) {
                None => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("use of undefined variable '{arg}'"),
                    })
                }
                Some(&have) if have != kind => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("variable '{arg}' has the wrong kind for {}", op.name()),
                    })
                }
                _ => {}
            }
        }
        if vars.contains_key(&result) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("variable '{result}' assigned twice"),
            });
        }
        vars.insert(result.clone(), op.result_kind());
        program.statements.push(Statement { line: line_no, result, op, args });
    }
    Ok(program)
}

/// Dependency-preserving stable reorder that brings statements consuming
/// the same hint next to each other, so a streamed hint is loaded once per
/// group instead of once per use. Pure dataflow makes any topological order
/// semantically equivalent.
pub fn reorder_for_hint_reuse(program: &OpProgram) -> OpProgram {
    let n = program.statements.len();
    let def_index: HashMap<&str, usize> = program
        .statements
        .iter()
        .enumerate()
        .map(|(i, s)| (s.result.as_str(), i))
        .collect();
    let deps: Vec<Vec<usize>> = program
        .statements
        .iter()
        .map(|s| s.args.iter().filter_map(|a| def_index.get(a.as_str()).copied()).collect())
        .collect();

    let mut emitted = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut last_hint: Option<HintId> = None;
    while order.len() < n {
        let ready = |i: usize| -> bool {
            !emitted[i] && deps[i].iter().all(|&d| emitted[d])
        };
        let mut pick = None;
        if let Some(h) = last_hint {
            pick = (0..n).find(|&i| {
                ready(i) && program.statements[i].op.reusable_hint() == Some(h)
            });
        }
        let pick = match pick {
            Some(i) => i,
            None => (0..n).find(|&i| ready(i)).expect("acyclic SSA program"),
        };
        emitted[pick] = true;
        last_hint = program.statements[pick].op.reusable_hint();
        order.push(pick);
    }
    OpProgram {
        statements: order.into_iter().map(|i| program.statements[i].clone()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
# two ciphertexts, one product
sk = KEYGEN()
x = ENC(sk)
y = ENC(sk)
s = FADD(x, y)   # slotwise sum
r = FROT(s, steps=3)
m = FMUL(r, x)
out = DEC(m, sk)
";

    #[test]
    fn parses_program_and_histogram() {
        let p = parse_program(SMALL).unwrap();
        assert_eq!(p.statements.len(), 7);
        let h = p.histogram();
        assert_eq!(h["ENC"], 2);
        assert_eq!(h["FROT"], 1);
        assert_eq!(p.rotation_steps(), vec![3]);
        assert_eq!(p.statements[4].op, OpKind::Frot { steps: 3 });
        assert!(parse_program("").unwrap().statements.is_empty());
    }

    #[test]
    fn rejects_malformed_programs() {
        let cases = [
            ("x = NOPE()", "unknown op"),
            ("x = FADD(a, b)", "undefined"),
            ("sk = KEYGEN()\nsk = KEYGEN()", "assigned twice"),
            ("sk = KEYGEN()\nx = ENC(sk)\ny = FROT(x)", "steps"),
            ("sk = KEYGEN()\nx = ENC(sk)\ny = FROT(x, steps=1, steps=2)", "duplicate"),
            ("sk = KEYGEN()\nx = ENC(sk, sk)", "argument"),
            ("sk = KEYGEN()\nx = FADD(sk, sk)", "wrong kind"),
            ("sk = KEYGEN()\nx = ENC(sk) junk", "trailing"),
            ("x == KEYGEN()", "expected"),
            ("sk = KEYGEN()\nx = ENC(sk)\nd = DEC(x, sk)\nz = FADD(d, d)", "wrong kind"),
        ];
        for (text, needle) in cases {
            let err = parse_program(text).unwrap_err().to_string();
            assert!(err.contains(needle), "{text}: {err}");
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_program("sk = KEYGEN()\n\nx = NOPE()").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn reorder_groups_same_hint_ops() {
        let text = "\
sk = KEYGEN()
x = ENC(sk)
y = ENC(sk)
a = FROT(x, steps=1)
b = FADD(x, y)
c = FROT(y, steps=1)
";
        let p = parse_program(text).unwrap();
        let r = reorder_for_hint_reuse(&p);
        let names: Vec<&str> = r.statements.iter().map(|s| s.result.as_str()).collect();
        assert_eq!(names, vec!["sk", "x", "y", "a", "c", "b"]);
    }

    #[test]
    fn reorder_respects_dependencies_and_is_stable_without_hints() {
        let text = "\
sk = KEYGEN()
x = ENC(sk)
a = FROT(x, steps=1)
b = FROT(a, steps=2)
c = FROT(b, steps=1)
";
        let p = parse_program(text).unwrap();
        let r = reorder_for_hint_reuse(&p);
        let names: Vec<&str> = r.statements.iter().map(|s| s.result.as_str()).collect();
        // The chain cannot be reordered even though a and c share a hint.
        assert_eq!(names, vec!["sk", "x", "a", "b", "c"]);

        let no_hints = "\
sk = KEYGEN()
x = ENC(sk)
y = ENC(sk)
z = FADD(x, y)
";
        let p = parse_program(no_hints).unwrap();
        let r = reorder_for_hint_reuse(&p);
        let names: Vec<&str> = r.statements.iter().map(|s| s.result.as_str()).collect();
        assert_eq!(names, vec!["sk", "x", "y", "z"]);
    }
}
