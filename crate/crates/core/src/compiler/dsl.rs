//! Textual theory language.
//!
//! ```text
//! % comment to end of line
//! option conversion off.
//! fact CO(acme).
//! r1c: CO(X) =>p SpatialScope(X, zone).
//! x1: [P]SpatialScope(X, street) ->p SpatialScope(X, zone).
//! r1c > r2c.
//! ```
//!
//! Arrows are `->` (strict), `=>` (defeasible) and `~>` (defeater); an
//! `o` or `p` suffix makes the rule an obligation or permission rule. The
//! head may instead carry an `[O]`/`[P]` prefix. `~` negates a literal.
//! Identifiers starting with an uppercase letter are variables in argument
//! position; anything else (or a double-quoted string) is a constant.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::dl::{Atom, Literal, ModalLiteral, Modality, Rule, RuleKind, Term, Theory};

use super::CompileError;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Str(String),
    Arrow(RuleKind, Option<Modality>),
    Prefix(Modality),
    Colon,
    Comma,
    Dot,
    LParen,
    RParen,
    Tilde,
    Gt,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Arrow(k, m) => {
                let a = match k {
                    RuleKind::Strict => "->",
                    RuleKind::Defeasible => "=>",
                    RuleKind::Defeater => "~>",
                };
                let s = match m {
                    Some(Modality::Obl) => "o",
                    Some(Modality::Perm) => "p",
                    _ => "",
                };
                format!("`{a}{s}`")
            }
            Tok::Prefix(Modality::Obl) => "`[O]`".into(),
            Tok::Prefix(_) => "`[P]`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Gt => "`>`".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn syntax(pos: Pos, message: impl Into<String>) -> CompileError {
    CompileError::Syntax {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<(Vec<(Tok, Pos)>, Pos), CompileError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let peek = chars.get(i + 1).copied();
        let tok = match (c, peek) {
            ('-' | '=' | '~', Some('>')) => {
                let kind = match c {
                    '-' => RuleKind::Strict,
                    '=' => RuleKind::Defeasible,
                    _ => RuleKind::Defeater,
                };
                bump!();
                bump!();
                // `=>p X` carries a mode suffix; `=>p(X)` or `=>pq` is a head.
                let mode = match chars.get(i).copied() {
                    Some(m @ ('o' | 'p'))
                        if !chars
                            .get(i + 1)
                            .is_some_and(|&n| is_ident_char(n) || n == '(') =>
                    {
                        bump!();
                        Some(if m == 'o' {
                            Modality::Obl
                        } else {
                            Modality::Perm
                        })
                    }
                    _ => None,
                };
                out.push((Tok::Arrow(kind, mode), pos));
                continue;
            }
            ('[', _) => {
                let m = match (peek, chars.get(i + 2)) {
                    (Some('O'), Some(']')) => Modality::Obl,
                    (Some('P'), Some(']')) => Modality::Perm,
                    _ => return Err(syntax(pos, "expected `[O]` or `[P]`")),
                };
                bump!();
                bump!();
                bump!();
                out.push((Tok::Prefix(m), pos));
                continue;
            }
            ('"', _) => {
                bump!();
                let mut s = String::new();
                loop {
                    match chars.get(i).copied() {
                        None => return Err(syntax(pos, "unterminated string")),
                        Some('"') => {
                            bump!();
                            break;
                        }
                        Some('\\') => {
                            bump!();
                            match chars.get(i).copied() {
                                Some(e @ ('"' | '\\')) => {
                                    s.push(e);
                                    bump!();
                                }
                                _ => {
                                    return Err(syntax(Pos { line, col }, "invalid escape"));
                                }
                            }
                        }
                        Some(other) => {
                            s.push(other);
                            bump!();
                        }
                    }
                }
                out.push((Tok::Str(s), pos));
                continue;
            }
            (c, _) if is_ident_char(c) => {
                let mut s = String::new();
                while i < chars.len() && is_ident_char(chars[i]) {
                    s.push(chars[i]);
                    bump!();
                }
                out.push((Tok::Ident(s), pos));
                continue;
            }
            (':', _) => Tok::Colon,
            (',', _) => Tok::Comma,
            ('.', _) => Tok::Dot,
            ('(', _) => Tok::LParen,
            (')', _) => Tok::RParen,
            ('~', _) => Tok::Tilde,
            ('>', _) => Tok::Gt,
            (other, _) => return Err(syntax(pos, format!("unexpected character `{other}`"))),
        };
        bump!();
        out.push((tok, pos));
    }
    Ok((out, Pos { line, col }))
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
}

impl Parser {
    fn new(text: &str) -> Result<Self, CompileError> {
        let (toks, end) = lex(text)?;
        Ok(Self { toks, at: 0, end })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn unexpected(&self, expected: &str) -> CompileError {
        let found = match self.peek() {
            Some(t) => t.describe(),
            None => "end of input".into(),
        };
        syntax(self.pos(), format!("expected {expected}, found {found}"))
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), CompileError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, CompileError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.at += 1;
                Ok(s)
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    fn term(&mut self) -> Result<Term, CompileError> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let t = Term::Const(s.clone());
                self.at += 1;
                Ok(t)
            }
            Some(Tok::Ident(s)) => {
                let t = if s.starts_with(|c: char| c.is_ascii_uppercase()) {
                    Term::Var(s.clone())
                } else {
                    Term::Const(s.clone())
                };
                self.at += 1;
                Ok(t)
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    /// `[O]`/`[P]` prefix, optional `~`, predicate, optional argument list.
    fn literal(&mut self) -> Result<(Option<Modality>, Literal), CompileError> {
        let modality = match self.peek() {
            Some(Tok::Prefix(m)) => {
                let m = *m;
                self.at += 1;
                Some(m)
            }
            _ => None,
        };
        let negated = if self.peek() == Some(&Tok::Tilde) {
            self.at += 1;
            true
        } else {
            false
        };
        let predicate = self.ident("a predicate")?;
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.at += 1;
            if self.peek() != Some(&Tok::RParen) {
                args.push(self.term()?);
                while self.peek() == Some(&Tok::Comma) {
                    self.at += 1;
                    args.push(self.term()?);
                }
            }
            self.expect(Tok::RParen, "`)` or `,`")?;
        }
        let atom = Atom::new(predicate, args);
        let literal = if negated {
            Literal::neg(atom)
        } else {
            Literal::pos(atom)
        };
        Ok((modality, literal))
    }

    fn modal_literal(&mut self) -> Result<ModalLiteral, CompileError> {
        let (m, l) = self.literal()?;
        Ok(ModalLiteral::new(m.unwrap_or(Modality::Fact), l))
    }

    /// Parses `label: body ARROW head.` with the label already consumed.
    fn rule_after_label(&mut self, label: String) -> Result<Rule, CompileError> {
        self.expect(Tok::Colon, "`:`")?;
        let mut body = Vec::new();
        if !matches!(self.peek(), Some(Tok::Arrow(..))) {
            body.push(self.modal_literal()?);
            while self.peek() == Some(&Tok::Comma) {
                self.at += 1;
                body.push(self.modal_literal()?);
            }
        }
        let (kind, suffix) = match self.peek() {
            Some(Tok::Arrow(k, m)) => (*k, *m),
            _ => return Err(self.unexpected("`,` or a rule arrow")),
        };
        self.at += 1;
        let head_pos = self.pos();
        let (prefix, literal) = self.literal()?;
        let mode = match (suffix, prefix) {
            (Some(a), Some(b)) if a != b => {
                return Err(syntax(head_pos, "head modality disagrees with the arrow"))
            }
            (Some(m), _) | (None, Some(m)) => m,
            (None, None) => Modality::Fact,
        };
        self.expect(Tok::Dot, "`.`")?;
        Ok(Rule::new(
            label,
            kind,
            body,
            ModalLiteral::new(mode, literal),
        ))
    }
}

/// Parses a single rule such as `r1: CO(X) =>p SpatialScope(X, zone).`
pub fn parse_rule(text: &str) -> Result<Rule, CompileError> {
    let mut p = Parser::new(text)?;
    let label = p.ident("a rule label")?;
    let rule = p.rule_after_label(label)?;
    if !p.at_end() {
        return Err(p.unexpected("end of input"));
    }
    Ok(rule)
}

/// Parses a single literal such as `[P]SpatialScope(acme, street)`.
pub fn parse_literal(text: &str) -> Result<ModalLiteral, CompileError> {
    let mut p = Parser::new(text)?;
    let lit = p.modal_literal()?;
    if !p.at_end() {
        return Err(p.unexpected("end of input"));
    }
    Ok(lit)
}

/// Parses a whole theory and validates it.
pub fn parse_theory(text: &str) -> Result<Theory, CompileError> {
    let mut p = Parser::new(text)?;
    let mut theory = Theory::new();
    let mut seen: HashMap<String, Pos> = HashMap::new();
    while !p.at_end() {
        let pos = p.pos();
        let first = p.ident("`fact`, `option`, a rule label or a superiority pair")?;
        match (first.as_str(), p.peek()) {
            (_, Some(Tok::Colon)) => {
                if seen.contains_key(&first) {
                    return Err(CompileError::DuplicateLabel {
                        label: first,
                        line: pos.line,
                        col: pos.col,
                    });
                }
                seen.insert(first.clone(), pos);
                let rule = p.rule_after_label(first)?;
                theory.rules.push(rule);
            }
            (_, Some(Tok::Gt)) => {
                p.at += 1;
                let loser = p.ident("a rule label")?;
                p.expect(Tok::Dot, "`.`")?;
                theory.superiority.insert((first, loser));
            }
            ("fact", _) => {
                let fact = p.modal_literal()?;
                p.expect(Tok::Dot, "`.`")?;
                theory.facts.insert(fact);
            }
            ("option", _) => {
                let key_pos = p.pos();
                let key = p.ident("an option name")?;
                if key != "conversion" {
                    return Err(syntax(key_pos, format!("unknown option `{key}`")));
                }
                let val_pos = p.pos();
                theory.modal_conversion = match p.ident("`on` or `off`")?.as_str() {
                    "on" => true,
                    "off" => false,
                    other => {
                        return Err(syntax(
                            val_pos,
                            format!("expected `on` or `off`, found `{other}`"),
                        ))
                    }
                };
                p.expect(Tok::Dot, "`.`")?;
            }
            _ => return Err(p.unexpected("`:` or `>`")),
        }
    }
    theory.validate()?;
    Ok(theory)
}

/// Canonical text form: options, facts (sorted), rules (in order),
/// superiority (sorted). [`parse_theory`] reads it back unchanged.
pub fn theory_to_text(t: &Theory) -> String {
    let mut out = String::new();
    if !t.modal_conversion {
        out.push_str("option conversion off.\n");
    }
    for f in &t.facts {
        let _ = writeln!(out, "fact {f}.");
    }
    for r in &t.rules {
        let _ = writeln!(out, "{r}");
    }
    for (w, l) in &t.superiority {
        let _ = writeln!(out, "{w} > {l}.");
    }
    out
}
