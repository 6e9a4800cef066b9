//! ISCAS-style BENCH reader and writer.
//!
//! ```text
//! # comment
//! INPUT(a)
//! OUTPUT(f)
//! f = NAND(a, b)
//! m = MUX(sel, in0, in1)
//! ```
//!
//! Signals may be referenced before their defining line; gates are
//! reordered topologically (file order is kept wherever it already is).

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{GateKind, Netlist, NetlistBuilder, NetlistError, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown gate type `{0}`")]
    UnknownGate(String),
    #[error("undefined signal `{0}`")]
    UndefinedSignal(String),
    #[error("signal `{0}` defined more than once")]
    Redefined(String),
    #[error("combinational cycle through `{0}`")]
    Cycle(String),
    #[error("{kind} expects {expected} fanins, got {got}")]
    Arity {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

struct GateDef<'a> {
    line: usize,
    name: &'a str,
    kind: GateKind,
    args: Vec<&'a str>,
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && !s
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | '=' | '#'))
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

/// Splits `KEYWORD(args)` into keyword and the raw argument text.
fn split_call(s: &str, line: usize) -> Result<(&str, &str), ParseError> {
    let open = s
        .find('(')
        .ok_or_else(|| err(line, ParseErrorKind::Syntax(format!("expected `(` in `{s}`"))))?;
    let rest = s[open + 1..].trim_end();
    let inner = rest
        .strip_suffix(')')
        .ok_or_else(|| err(line, ParseErrorKind::Syntax(format!("expected `)` at end of `{s}`"))))?;
    Ok((s[..open].trim(), inner))
}

pub fn parse_bench(text: &str) -> Result<Netlist, ParseError> {
    let mut inputs: Vec<(usize, &str)> = Vec::new();
    let mut outputs: Vec<(usize, &str)> = Vec::new();
    let mut gates: Vec<GateDef<'_>> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(eq) = content.find('=') {
            let name = content[..eq].trim();
            if !is_ident(name) {
                return Err(err(line, ParseErrorKind::Syntax(format!("bad signal name `{name}`"))));
            }
            let (kw, args) = split_call(content[eq + 1..].trim(), line)?;
            let kind = GateKind::from_bench_name(kw)
                .ok_or_else(|| err(line, ParseErrorKind::UnknownGate(kw.to_string())))?;
            let args: Vec<&str> = if args.trim().is_empty() {
                Vec::new()
            } else {
                args.split(',').map(str::trim).collect()
            };
            if let Some(bad) = args.iter().find(|a| !is_ident(a)) {
                return Err(err(line, ParseErrorKind::Syntax(format!("bad fanin `{bad}`"))));
            }
            if args.len() != kind.arity() {
                return Err(err(
                    line,
                    ParseErrorKind::Arity {
                        kind,
                        expected: kind.arity(),
                        got: args.len(),
                    },
                ));
            }
            gates.push(GateDef { line, name, kind, args });
        } else {
            let (kw, arg) = split_call(content, line)?;
            let arg = arg.trim();
            if !is_ident(arg) {
                return Err(err(line, ParseErrorKind::Syntax(format!("bad signal name `{arg}`"))));
            }
            match kw.to_ascii_uppercase().as_str() {
                "INPUT" => inputs.push((line, arg)),
                "OUTPUT" => outputs.push((line, arg)),
                _ => {
                    return Err(err(
                        line,
                        ParseErrorKind::Syntax(format!("expected INPUT, OUTPUT or assignment, found `{kw}`")),
                    ))
                }
            }
        }
    }

    let mut b = NetlistBuilder::new();
    for &(line, name) in &inputs {
        b.add_input(name).map_err(|e| match e {
            NetlistError::DuplicateName(n) => err(line, ParseErrorKind::Redefined(n)),
            other => err(line, other.into()),
        })?;
    }

    let mut def: HashMap<&str, usize> = HashMap::with_capacity(gates.len());
    for (gi, g) in gates.iter().enumerate() {
        if b.contains_name(g.name) || def.insert(g.name, gi).is_some() {
            return Err(err(g.line, ParseErrorKind::Redefined(g.name.to_string())));
        }
    }
    for g in &gates {
        for a in &g.args {
            if !def.contains_key(a) && !b.contains_name(a) {
                return Err(err(g.line, ParseErrorKind::UndefinedSignal(a.to_string())));
            }
        }
    }

    // Iterative DFS post-order, visiting definitions in file order.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; gates.len()];
    let mut order = Vec::with_capacity(gates.len());
    for root in 0..gates.len() {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Active;
        while let Some(&mut (gi, ref mut next)) = stack.last_mut() {
            if let Some(arg) = gates[gi].args.get(*next) {
                *next += 1;
                if let Some(&child) = def.get(arg) {
                    match mark[child] {
                        Mark::New => {
                            mark[child] = Mark::Active;
                            stack.push((child, 0));
                        }
                        Mark::Active => {
                            return Err(err(gates[child].line, ParseErrorKind::Cycle(arg.to_string())));
                        }
                        Mark::Done => {}
                    }
                }
            } else {
                mark[gi] = Mark::Done;
                order.push(gi);
                stack.pop();
            }
        }
    }

    for gi in order {
        let g = &gates[gi];
        let fanins: Vec<NodeId> = g.args.iter().map(|a| b.id_of(a).expect("fanins placed first")).collect();
        b.add_gate(g.kind, &fanins, g.name)
            .map_err(|e| err(g.line, e.into()))?;
    }

    for &(line, name) in &outputs {
        let id = b
            .id_of(name)
            .ok_or_else(|| err(line, ParseErrorKind::UndefinedSignal(name.to_string())))?;
        b.add_output(id).map_err(|e| err(line, e.into()))?;
    }
    Ok(b.build())
}

/// Serializes in node order: inputs, outputs, then one gate per line.
pub fn write_bench(n: &Netlist) -> String {
    let mut s = String::new();
    for name in n.input_names() {
        let _ = writeln!(s, "INPUT({name})");
    }
    for name in n.output_names() {
        let _ = writeln!(s, "OUTPUT({name})");
    }
    for id in n.gate_ids() {
        let node = n.node(id);
        let kind = node.gate().expect("gate ids hold gates");
        let _ = write!(s, "{} = {}(", n.name(id), kind.bench_name());
        for (i, f) in node.fanins().iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            s.push_str(n.name(*f));
        }
        s.push_str(")\n");
    }
    s
}
