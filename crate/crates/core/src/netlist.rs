//! The `.nls` line-oriented netlist format.
//!
//! ```text
//! # comment
//! input a
//! input b
//! const zero = 0
//! gate g = MAJ3(a, b, zero)
//! gate h = TABLE[0110](a, g)
//! output h
//! ```
//!
//! One statement per line. Gate names are `MAJ3`, `MIN3`, `NOT`, `AND`,
//! `OR`, `NAND`, `NOR`, `XOR2` or `TABLE[bits]`, where `bits` has `2^k`
//! characters for `k` arguments (first argument most significant).
//! Identifiers may be referenced before they are declared; cycles are then
//! rejected when the finished circuit is validated. LF and CRLF line endings
//! are accepted, LF is emitted.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::circuit::{Circuit, Node, NodeId, NodeKind, TruthTable};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: syntax error: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("line {line}, column {column}: undefined identifier `{name}`")]
    Undefined { line: usize, column: usize, name: String },

    #[error("line {line}, column {column}: duplicate identifier `{name}`")]
    Duplicate { line: usize, column: usize, name: String },

    #[error("line {line}, column {column}: truth table has {found} rows, {arity} arguments need {expected}")]
    TableLength { line: usize, column: usize, arity: usize, expected: usize, found: usize },

    #[error("line {line}, column {column}: {gate} takes {expected} arguments, got {found}")]
    Arity { line: usize, column: usize, gate: String, expected: usize, found: usize },

    #[error("netlist declares no outputs")]
    NoOutputs,
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn column(&self) -> usize {
        self.text[..self.pos].chars().count() + 1
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ' ' || c == '\t' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.text.len()
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line, column: self.column(), message: message.into() }
    }

    fn ident(&mut self, what: &str) -> std::result::Result<(String, usize), ParseError> {
        self.skip_ws();
        let column = self.column();
        let rest = &self.text[self.pos..];
        let mut len = 0;
        for (i, c) in rest.char_indices() {
            let ok = c == '_' || c.is_ascii_alphabetic() || (i > 0 && c.is_ascii_digit());
            if !ok {
                break;
            }
            len = i + c.len_utf8();
        }
        if len == 0 {
            return Err(self.error(format!("expected {what}")));
        }
        self.pos += len;
        Ok((rest[..len].to_string(), column))
    }

    fn expect(&mut self, ch: char) -> std::result::Result<(), ParseError> {
        self.skip_ws();
        if self.peek() == Some(ch) {
            self.pos += ch.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected `{ch}`")))
        }
    }

    fn eat(&mut self, ch: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(ch) {
            self.pos += ch.len_utf8();
            true
        } else {
            false
        }
    }

    fn finish(&mut self) -> std::result::Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing text"))
        }
    }
}

struct PendingGate {
    node: usize,
    args: Vec<(String, usize)>,
    line: usize,
}

fn named_table(name: &str) -> Option<TruthTable> {
    Some(match name {
        "MAJ3" => TruthTable::maj3(),
        "MIN3" => TruthTable::min3(),
        "NOT" => TruthTable::not(),
        "AND" => TruthTable::and(),
        "OR" => TruthTable::or(),
        "NAND" => TruthTable::nand(),
        "NOR" => TruthTable::nor(),
        "XOR2" => TruthTable::xor2(),
        _ => return None,
    })
}

/// Parses netlist text into a validated circuit.
pub fn parse(text: &str) -> Result<Circuit> {
    let mut nodes: Vec<Node> = Vec::new();
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut pending: Vec<PendingGate> = Vec::new();
    let mut outputs: Vec<(String, usize, usize)> = Vec::new();

    let declare = |names: &mut HashMap<String, usize>,
                       nodes: &mut Vec<Node>,
                       name: String,
                       line: usize,
                       column: usize,
                       node: Node|
     -> std::result::Result<usize, ParseError> {
        if names.contains_key(&name) {
            return Err(ParseError::Duplicate { line, column, name });
        }
        nodes.push(node);
        names.insert(name, nodes.len() - 1);
        Ok(nodes.len() - 1)
    };

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let mut cur = Cursor { text: line, pos: 0, line: line_no };
        if cur.at_end() {
            continue;
        }
        let (keyword, kw_col) = cur.ident("statement keyword")?;
        match keyword.as_str() {
            "input" => {
                let (name, col) = cur.ident("identifier")?;
                cur.finish()?;
                declare(&mut names, &mut nodes, name.clone(), line_no, col, Node::input(name))?;
            }
            "const" => {
                let (name, col) = cur.ident("identifier")?;
                cur.expect('=')?;
                cur.skip_ws();
                let value = match cur.peek() {
                    Some('0') => false,
                    Some('1') => true,
                    _ => return Err(cur.error("expected 0 or 1").into()),
                };
                cur.pos += 1;
                cur.finish()?;
                declare(&mut names, &mut nodes, name, line_no, col, Node::constant(value))?;
            }
            "gate" => {
                let (name, col) = cur.ident("identifier")?;
                cur.expect('=')?;
                let (gname, gcol) = cur.ident("gate name")?;
                let table_bits = if gname == "TABLE" {
                    cur.expect('[')?;
                    cur.skip_ws();
                    let start = cur.pos;
                    while matches!(cur.peek(), Some('0' | '1')) {
                        cur.pos += 1;
                    }
                    let bits = line[start..cur.pos].to_string();
                    cur.expect(']')?;
                    Some(bits)
                } else {
                    None
                };
                cur.expect('(')?;
                let mut args = Vec::new();
                if !cur.eat(')') {
                    loop {
                        args.push(cur.ident("argument identifier")?);
                        if cur.eat(')') {
                            break;
                        }
                        cur.expect(',')?;
                    }
                }
                cur.finish()?;
                let table = match table_bits {
                    Some(bits) => {
                        let k = args.len();
                        if k == 0 || k > TruthTable::MAX_FAN_IN || bits.len() != 1 << k {
                            return Err(ParseError::TableLength {
                                line: line_no,
                                column: gcol,
                                arity: k,
                                expected: if k <= TruthTable::MAX_FAN_IN { 1 << k } else { 0 },
                                found: bits.len(),
                            }
                            .into());
                        }
                        TruthTable::from_bits(&bits).expect("length checked")
                    }
                    None => {
                        let table = named_table(&gname).ok_or_else(|| ParseError::Syntax {
                            line: line_no,
                            column: gcol,
                            message: format!("unknown gate `{gname}`"),
                        })?;
                        if table.fan_in() != args.len() {
                            return Err(ParseError::Arity {
                                line: line_no,
                                column: gcol,
                                gate: gname,
                                expected: table.fan_in(),
                                found: args.len(),
                            }
                            .into());
                        }
                        table
                    }
                };
                let node = declare(&mut names, &mut nodes, name, line_no, col, Node::gate(table, Vec::new()))?;
                pending.push(PendingGate { node, args, line: line_no });
            }
            "output" => {
                let (name, col) = cur.ident("identifier")?;
                cur.finish()?;
                outputs.push((name, line_no, col));
            }
            other => {
                return Err(ParseError::Syntax {
                    line: line_no,
                    column: kw_col,
                    message: format!("unknown statement `{other}`"),
                }
                .into())
            }
        }
    }

    for gate in pending {
        let mut wires = Vec::with_capacity(gate.args.len());
        for (name, column) in gate.args {
            let id = names
                .get(&name)
                .ok_or(ParseError::Undefined { line: gate.line, column, name: name.clone() })?;
            wires.push(NodeId(*id));
        }
        nodes[gate.node].inputs = wires;
    }
    if outputs.is_empty() {
        return Err(ParseError::NoOutputs.into());
    }
    let outputs = outputs
        .into_iter()
        .map(|(name, line, column)| {
            names
                .get(&name)
                .map(|&i| NodeId(i))
                .ok_or(ParseError::Undefined { line, column, name })
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let circuit = Circuit::new(nodes, outputs);
    circuit.validate().into_result()?;
    Ok(circuit)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c == '_' || c.is_ascii_alphabetic())
        && chars.all(|c| c == '_' || c.is_ascii_alphanumeric())
}

fn gate_expr(table: &TruthTable) -> String {
    let named = [
        ("MAJ3", TruthTable::maj3()),
        ("MIN3", TruthTable::min3()),
        ("NOT", TruthTable::not()),
        ("AND", TruthTable::and()),
        ("OR", TruthTable::or()),
        ("NAND", TruthTable::nand()),
        ("NOR", TruthTable::nor()),
        ("XOR2", TruthTable::xor2()),
    ];
    named
        .iter()
        .find(|(_, t)| t == table)
        .map(|(n, _)| n.to_string())
        .unwrap_or_else(|| format!("TABLE[{}]", table.to_bits()))
}

/// Canonical text for a valid circuit, statements in topological order.
///
/// Inputs keep their labels; constants and gates are named `c<id>` and
/// `g<id>` after their node index. Lines are joined with LF and the text
/// carries no trailing newline.
pub fn serialize(circuit: &Circuit) -> Result<String> {
    let order = circuit.topological_order()?;
    let mut used: HashSet<String> = HashSet::new();
    let mut names = vec![String::new(); circuit.len()];
    // Input labels first, so that generated names steer around them.
    for id in circuit.input_ids() {
        if let NodeKind::Input(label) = &circuit.nodes()[id.0].kind {
            let mut name = if is_identifier(label) {
                label.clone()
            } else {
                let cleaned: String = label
                    .chars()
                    .map(|c| if c == '_' || c.is_ascii_alphanumeric() { c } else { '_' })
                    .collect();
                format!("_{cleaned}")
            };
            while used.contains(&name) {
                name.push('_');
            }
            used.insert(name.clone());
            names[id.0] = name;
        }
    }
    for id in circuit.ids() {
        let node = &circuit.nodes()[id.0];
        let mut name = match node.kind {
            NodeKind::Input(_) => continue,
            NodeKind::Constant(_) => format!("c{}", id.0),
            NodeKind::Gate(_) => format!("g{}", id.0),
        };
        while used.contains(&name) {
            name.push('_');
        }
        used.insert(name.clone());
        names[id.0] = name;
    }

    let mut lines = Vec::with_capacity(circuit.len() + circuit.outputs().len());
    for id in order {
        let node = &circuit.nodes()[id.0];
        lines.push(match &node.kind {
            NodeKind::Input(_) => format!("input {}", names[id.0]),
            NodeKind::Constant(v) => format!("const {} = {}", names[id.0], *v as u8),
            NodeKind::Gate(t) => {
                let args: Vec<&str> = node.inputs.iter().map(|w| names[w.0].as_str()).collect();
                format!("gate {} = {}({})", names[id.0], gate_expr(t), args.join(","))
            }
        });
    }
    for o in circuit.outputs() {
        lines.push(format!("output {}", names[o.0]));
    }
    Ok(lines.join("\n"))
}
