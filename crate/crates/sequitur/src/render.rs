//! Grammar serialization: a line-oriented text format, a JSON document, a
//! bracketed expansion view, and DOT export, plus the parser for the text
//! and JSON formats.
//!
//! Rule labels in output are renumbered densely in creation order at
//! emission time (internal ids may have gaps where rules were deleted), so
//! identical grammars always serialize identically. Every emitter ends its
//! output with a single trailing newline and leaves the grammar unmodified.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::grammar::{Grammar, RuleId, SymbolValue, TokenId};
use crate::tokenize::{TokenMode, TokenTable};

/// Errors from parsing a grammar document.
#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: reference to undefined rule R{label}")]
    UndefinedRule { line: usize, column: usize, label: u64 },
    #[error("malformed JSON grammar: {0}")]
    Json(String),
}

/// Which optional blocks [`emit_json`] includes.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct JsonBlocks {
    pub counters: bool,
    pub tokens: bool,
}

/// Dense output label for every live rule, in creation order; the start
/// rule is always label 0.
pub fn dense_labels(g: &Grammar) -> HashMap<RuleId, u64> {
    g.rule_ids()
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id, i as u64))
        .collect()
}

// ---- token escaping ---------------------------------------------------------

/// Escapes token bytes into printable ASCII using `\n \t \r \\ \" \xNN`.
pub fn escape_token(bytes: &[u8]) -> String {
    let mut out = String::new();
    for &b in bytes {
        match b {
            b'\\' => out.push_str("\\\\"),
            b'"' => out.push_str("\\\""),
            b'\n' => out.push_str("\\n"),
            b'\t' => out.push_str("\\t"),
            b'\r' => out.push_str("\\r"),
            0x20..=0x7e => out.push(b as char),
            _ => out.push_str(&format!("\\x{b:02x}")),
        }
    }
    out
}

/// Reverses [`escape_token`].
pub fn unescape_token(text: &str) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            let mut buf = [0u8; 4];
            out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            continue;
        }
        match chars.next() {
            Some('\\') => out.push(b'\\'),
            Some('"') => out.push(b'"'),
            Some('n') => out.push(b'\n'),
            Some('t') => out.push(b'\t'),
            Some('r') => out.push(b'\r'),
            Some('x') => {
                let hi = chars.next().ok_or("truncated \\x escape")?;
                let lo = chars.next().ok_or("truncated \\x escape")?;
                let byte = u8::from_str_radix(&format!("{hi}{lo}"), 16)
                    .map_err(|_| format!("bad hex escape \\x{hi}{lo}"))?;
                out.push(byte);
            }
            Some(other) => return Err(format!("unknown escape \\{other}")),
            None => return Err("trailing backslash".to_string()),
        }
    }
    Ok(out)
}

/// A terminal renders bare only when unambiguous: printable, non-blank
/// ASCII that cannot be mistaken for a rule label, an arrow, or a comment.
fn needs_quoting(bytes: &[u8]) -> bool {
    if bytes.is_empty() || bytes == b"->" || bytes[0] == b'#' {
        return true;
    }
    if bytes.iter().any(|&b| !(0x21..=0x7e).contains(&b) || b == b'"' || b == b'\\') {
        return true;
    }
    looks_like_label(bytes)
}

fn looks_like_label(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == b'R' && bytes[1..].iter().all(u8::is_ascii_digit)
}

fn render_terminal(bytes: &[u8]) -> String {
    if needs_quoting(bytes) {
        format!("\"{}\"", escape_token(bytes))
    } else {
        String::from_utf8(bytes.to_vec()).expect("bare terminals are printable ASCII")
    }
}

// ---- text format ------------------------------------------------------------

/// One rule per line: `R0 -> ...` for the start rule, then each auxiliary
/// rule in creation order. Items are space-separated; non-terminals render
/// as `Rk`, terminals via the token table.
pub fn emit_text(g: &Grammar, table: &TokenTable) -> String {
    let labels = dense_labels(g);
    let mut out = String::new();
    for id in g.rule_ids() {
        out.push_str(&format!("R{}", labels[&id]));
        out.push_str(" ->");
        for v in g.rhs_values(id).expect("live rule") {
            out.push(' ');
            match v {
                SymbolValue::Terminal(t) => {
                    let bytes = table.bytes(t).expect("token id present in table");
                    out.push_str(&render_terminal(bytes));
                }
                SymbolValue::NonTerminal(r) => {
                    out.push_str(&format!("R{}", labels[&r]));
                }
            }
        }
        out.push('\n');
    }
    out
}

/// The `a1..a5 / n / o / r / depth` block as a single machine-readable line.
pub fn counters_line(g: &Grammar) -> String {
    let s = analysis::stats(g);
    let c = s.counters;
    format!(
        "a1={} a2={} a3={} a4={} a5={} n={} o={} r={} depth={}",
        c.symbols_appended,
        c.digrams_indexed,
        c.rules_reused,
        c.rules_created,
        c.rules_deleted,
        s.input_len,
        s.size,
        s.rule_count,
        s.depth
    )
}

enum TextItem {
    Terminal(Vec<u8>),
    Reference(u64),
}

/// Parses the text format back into a grammar skeleton and token table.
///
/// Reference counts are recomputed from the nodes and the digram index is
/// rebuilt by scanning. The parser does not enforce the grammar
/// constraints: hand-written documents may violate them, which
/// [`analysis::verify_constraints`] will report.
pub fn parse_text(text: &str) -> Result<(Grammar, TokenTable), ParseError> {
    let mut mode = TokenMode::Byte;
    // (line number, label, items, column of each item)
    let mut defs: Vec<(usize, u64, Vec<(usize, TextItem)>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim_start();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            // the one meaningful comment: "# tokens: <mode>"
            if let Some(rest) = trimmed.trim_start_matches('#').trim().strip_prefix("tokens:") {
                if let Some(m) = TokenMode::parse(rest.trim()) {
                    mode = m;
                }
            }
            continue;
        }
        defs.push(parse_rule_line(raw, line)?);
    }

    let mut g = Grammar::new();
    let mut table = TokenTable::new(mode);
    let mut by_label: HashMap<u64, RuleId> = HashMap::new();
    by_label.insert(0, g.start());
    let mut seen_start = false;
    for (line, label, _) in &defs {
        if *label == 0 {
            if seen_start {
                return Err(ParseError::Syntax {
                    line: *line,
                    column: 1,
                    message: "duplicate definition of R0".into(),
                });
            }
            seen_start = true;
            continue;
        }
        if by_label.contains_key(label) {
            return Err(ParseError::Syntax {
                line: *line,
                column: 1,
                message: format!("duplicate definition of R{label}"),
            });
        }
        by_label.insert(*label, g.add_rule());
    }
    if !seen_start {
        return Err(ParseError::Syntax {
            line: text.lines().count().max(1),
            column: 1,
            message: "missing start rule R0".into(),
        });
    }

    for (line, label, items) in defs {
        let id = by_label[&label];
        let mut at = g.guard_of(id).expect("rule was created");
        for (column, item) in items {
            let value = match item {
                TextItem::Terminal(bytes) => SymbolValue::Terminal(table.intern(&bytes)),
                TextItem::Reference(l) => match by_label.get(&l) {
                    Some(&r) => SymbolValue::NonTerminal(r),
                    None => return Err(ParseError::UndefinedRule { line, column, label: l }),
                },
            };
            at = g.insert_after(at, value);
        }
    }
    g.rebuild_digram_index();
    Ok((g, table))
}

fn parse_rule_line(raw: &str, line: usize) -> Result<(usize, u64, Vec<(usize, TextItem)>), ParseError> {
    let bytes = raw.as_bytes();
    let syntax = |column: usize, message: &str| ParseError::Syntax {
        line,
        column,
        message: message.to_string(),
    };
    let mut pos = 0usize;
    while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
        pos += 1;
    }
    let head_start = pos;
    while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
        pos += 1;
    }
    let head = &raw[head_start..pos];
    if !looks_like_label(head.as_bytes()) {
        return Err(syntax(head_start + 1, "expected rule head like R0"));
    }
    let label: u64 = head[1..]
        .parse()
        .map_err(|_| syntax(head_start + 2, "rule label out of range"))?;
    while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
        pos += 1;
    }
    if !raw[pos..].starts_with("->") {
        return Err(syntax(pos + 1, "expected '->' after rule head"));
    }
    pos += 2;

    let mut items = Vec::new();
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            break;
        }
        let column = pos + 1;
        if bytes[pos] == b'"' {
            let start = pos + 1;
            let mut end = start;
            // find the closing quote, skipping escaped characters
            loop {
                if end >= bytes.len() {
                    return Err(syntax(column, "unterminated quoted terminal"));
                }
                match bytes[end] {
                    b'"' => break,
                    b'\\' => end += 2,
                    _ => end += 1,
                }
            }
            let token = unescape_token(&raw[start..end])
                .map_err(|m| syntax(column, &m))?;
            items.push((column, TextItem::Terminal(token)));
            pos = end + 1;
        } else {
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let word = &raw[start..pos];
            if looks_like_label(word.as_bytes()) {
                let label: u64 = word[1..]
                    .parse()
                    .map_err(|_| syntax(column + 1, "rule label out of range"))?;
                items.push((column, TextItem::Reference(label)));
            } else {
                items.push((column, TextItem::Terminal(word.as_bytes().to_vec())));
            }
        }
    }
    Ok((line, label, items))
}

// ---- JSON format ------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct GrammarDoc {
    rules: Vec<RuleDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counters: Option<CountersDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tokens: Option<TokensDoc>,
}

#[derive(Serialize, Deserialize)]
struct RuleDoc {
    id: u64,
    rhs: Vec<RhsItemDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RhsItemDoc {
    Terminal { t: String },
    Reference { r: u64 },
}

#[derive(Serialize, Deserialize)]
struct CountersDoc {
    a1: u64,
    a2: u64,
    a3: u64,
    a4: u64,
    a5: u64,
    n: u64,
    o: u64,
    r: u64,
    depth: u64,
}

#[derive(Serialize, Deserialize)]
struct TokensDoc {
    mode: String,
    entries: Vec<String>,
}

/// Single-document JSON emission: a `rules` array in creation order with
/// items `{"t": ...}` (escaped token) or `{"r": k}` (rule label), plus
/// optional `counters` and `tokens` blocks.
pub fn emit_json(g: &Grammar, table: &TokenTable, include: JsonBlocks) -> String {
    let labels = dense_labels(g);
    let rules = g
        .rule_ids()
        .into_iter()
        .map(|id| RuleDoc {
            id: labels[&id],
            rhs: g
                .rhs_values(id)
                .expect("live rule")
                .into_iter()
                .map(|v| match v {
                    SymbolValue::Terminal(t) => RhsItemDoc::Terminal {
                        t: escape_token(table.bytes(t).expect("token id present in table")),
                    },
                    SymbolValue::NonTerminal(r) => RhsItemDoc::Reference { r: labels[&r] },
                })
                .collect(),
        })
        .collect();
    let stats = analysis::stats(g);
    let doc = GrammarDoc {
        rules,
        counters: include.counters.then(|| CountersDoc {
            a1: stats.counters.symbols_appended,
            a2: stats.counters.digrams_indexed,
            a3: stats.counters.rules_reused,
            a4: stats.counters.rules_created,
            a5: stats.counters.rules_deleted,
            n: stats.input_len,
            o: stats.size as u64,
            r: stats.rule_count as u64,
            depth: stats.depth as u64,
        }),
        tokens: include.tokens.then(|| TokensDoc {
            mode: table.mode().name().to_string(),
            entries: table.entries().map(escape_token).collect(),
        }),
    };
    let mut out = serde_json::to_string(&doc).expect("document serializes");
    out.push('\n');
    out
}

/// Parses the JSON format back into a grammar skeleton and token table.
pub fn parse_json(text: &str) -> Result<(Grammar, TokenTable), ParseError> {
    let doc: GrammarDoc =
        serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))?;
    let mode = match &doc.tokens {
        Some(t) => TokenMode::parse(&t.mode)
            .ok_or_else(|| ParseError::Json(format!("unknown token mode {:?}", t.mode)))?,
        None => TokenMode::Byte,
    };
    let mut table = TokenTable::new(mode);
    if let Some(tokens) = &doc.tokens {
        for entry in &tokens.entries {
            let bytes =
                unescape_token(entry).map_err(|m| ParseError::Json(format!("bad token entry: {m}")))?;
            table.intern(&bytes);
        }
    }
    let mut g = Grammar::new();
    let mut by_label: HashMap<u64, RuleId> = HashMap::new();
    by_label.insert(0, g.start());
    let mut seen_start = false;
    for rule in &doc.rules {
        if rule.id == 0 {
            if seen_start {
                return Err(ParseError::Json("duplicate rule id 0".into()));
            }
            seen_start = true;
        } else if by_label.insert(rule.id, RuleId(0)).is_some() {
            return Err(ParseError::Json(format!("duplicate rule id {}", rule.id)));
        }
    }
    if !seen_start {
        return Err(ParseError::Json("missing start rule (id 0)".into()));
    }
    for rule in &doc.rules {
        if rule.id != 0 {
            by_label.insert(rule.id, g.add_rule());
        }
    }
    for rule in &doc.rules {
        let id = by_label[&rule.id];
        let mut at = g.guard_of(id).expect("rule was created");
        for item in &rule.rhs {
            let value = match item {
                RhsItemDoc::Terminal { t } => {
                    let bytes = unescape_token(t)
                        .map_err(|m| ParseError::Json(format!("bad terminal: {m}")))?;
                    SymbolValue::Terminal(table.intern(&bytes))
                }
                RhsItemDoc::Reference { r } => match by_label.get(r) {
                    Some(&target) => SymbolValue::NonTerminal(target),
                    None => {
                        return Err(ParseError::Json(format!("reference to undefined rule {r}")))
                    }
                },
            };
            at = g.insert_after(at, value);
        }
    }
    g.rebuild_digram_index();
    Ok((g, table))
}

/// Auto-detecting parse: a document whose first non-blank byte is `{` is
/// JSON, anything else is the text format.
pub fn parse_document(text: &str) -> Result<(Grammar, TokenTable), ParseError> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_text(text)
    }
}

// ---- bracket view -----------------------------------------------------------

/// Expansion with rule boundaries shown as nested brackets; spaces become
/// bullets so word boundaries stay visible. `max_depth` stops bracketing
/// below that nesting level (the start rule is level 1) while still
/// expanding the text.
pub fn emit_bracket(g: &Grammar, table: &TokenTable, max_depth: Option<usize>) -> String {
    let mut out = String::new();
    bracket_rule(g, table, g.start(), 1, max_depth, &mut out);
    out.push('\n');
    out
}

fn bracket_rule(
    g: &Grammar,
    table: &TokenTable,
    rule: RuleId,
    level: usize,
    max_depth: Option<usize>,
    out: &mut String,
) {
    let bracketed = max_depth.map_or(true, |limit| level <= limit.max(1));
    if bracketed {
        out.push('[');
    }
    for v in g.rhs_values(rule).expect("live rule") {
        match v {
            SymbolValue::Terminal(t) => push_bullet_text(table, t, out),
            SymbolValue::NonTerminal(r) => bracket_rule(g, table, r, level + 1, max_depth, out),
        }
    }
    if bracketed {
        out.push(']');
    }
}

fn push_bullet_text(table: &TokenTable, t: TokenId, out: &mut String) {
    let bytes = table.bytes(t).expect("token id present in table");
    for part in String::from_utf8_lossy(bytes).chars() {
        out.push(if part == ' ' { '•' } else { part });
    }
}

// ---- DOT export -------------------------------------------------------------

/// Directed graph over rules: one node per rule labeled with its rhs, one
/// edge per non-terminal occurrence (multi-edges preserved).
pub fn emit_dot(g: &Grammar, table: &TokenTable) -> String {
    let labels = dense_labels(g);
    let text = emit_text(g, table);
    let mut out = String::from("digraph grammar {\n");
    for (id, line) in g.rule_ids().into_iter().zip(text.lines()) {
        let escaped = line.replace('\\', "\\\\").replace('"', "\\\"");
        out.push_str(&format!("  r{} [label=\"{}\"];\n", labels[&id], escaped));
    }
    for id in g.rule_ids() {
        for v in g.rhs_values(id).expect("live rule") {
            if let SymbolValue::NonTerminal(r) = v {
                out.push_str(&format!("  r{} -> r{};\n", labels[&id], labels[&r]));
            }
        }
    }
    out.push_str("}\n");
    out
}
