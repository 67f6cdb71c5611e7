//! The plain-text machine format.
//!
//! A file opens with five header lines — `inputs:`, `outputs:`,
//! `registers:`, `states:`, `initial:` — followed by one transition per
//! line:
//!
//! ```text
//! inputs: select(i1: enum{tea, coffee}), coin(i2: int), vend()
//! outputs: Pay(t: int), Display(t: int), Serve(b: enum{tea, coffee})
//! registers: r1: enum{tea, coffee}, r2: int
//! states: s0, s1
//! initial: s0
//!
//! s0 -- select(i1) / Pay(0) {r1 := i1, r2 := 0} --> s1
//! s1 -- coin(i2) / Display(r2 + i2) {r2 := r2 + i2} --> s1
//! s1 -- vend() [r2 < 100] / omega --> s1
//! s1 -- vend() [r2 >= 100] / Serve(r1) --> s0
//! ```
//!
//! An omitted guard means true; `/ omega` marks a silent transition; `#`
//! starts a comment. `initial:` may carry starting register values, e.g.
//! `initial: s0 {ra := 0}`. In expressions a bare name refers to the firing
//! input's parameter when one of that name exists, otherwise to a register;
//! `last(name)` always reads the register even when a parameter shadows it.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::abstraction::Interface;
use crate::efsm::{
    ConcreteInput, ConcreteOutput, Efsm, EventSignature, OutputSpec, Transition,
};
use crate::expr::{CmpOp, Expr};
use crate::value::{Domain, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: expected {expected}, found {found}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(i64),
    Arrow,
    Dashes,
    Assign,
    Colon,
    Comma,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Slash,
    Plus,
    Minus,
    Star,
    Bang,
    AndAnd,
    OrOr,
    Cmp(CmpOp),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Arrow => write!(f, "`-->`"),
            Tok::Dashes => write!(f, "`--`"),
            Tok::Assign => write!(f, "`:=`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::AndAnd => write!(f, "`&&`"),
            Tok::OrOr => write!(f, "`||`"),
            Tok::Cmp(op) => write!(f, "`{}`", op.symbol()),
        }
    }
}

fn lex_line(line_no: usize, text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two = if i + 1 < bytes.len() {
            &text[i..i + 2]
        } else {
            ""
        };
        let three = if i + 2 < bytes.len() {
            &text[i..i + 3]
        } else {
            ""
        };
        if three == "-->" {
            toks.push((col, Tok::Arrow));
            i += 3;
            continue;
        }
        let double = match two {
            "--" => Some(Tok::Dashes),
            ":=" => Some(Tok::Assign),
            "==" => Some(Tok::Cmp(CmpOp::Eq)),
            "!=" => Some(Tok::Cmp(CmpOp::Ne)),
            "<=" => Some(Tok::Cmp(CmpOp::Le)),
            ">=" => Some(Tok::Cmp(CmpOp::Ge)),
            "&&" => Some(Tok::AndAnd),
            "||" => Some(Tok::OrOr),
            _ => None,
        };
        if let Some(t) = double {
            toks.push((col, t));
            i += 2;
            continue;
        }
        let single = match c {
            ':' => Some(Tok::Colon),
            ',' => Some(Tok::Comma),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '/' => Some(Tok::Slash),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '!' => Some(Tok::Bang),
            '<' => Some(Tok::Cmp(CmpOp::Lt)),
            '>' => Some(Tok::Cmp(CmpOp::Gt)),
            _ => None,
        };
        if let Some(t) = single {
            toks.push((col, t));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
            }
            let n: i64 = text[start..i].parse().map_err(|_| ParseError {
                line: line_no,
                col,
                expected: "an integer that fits 64 bits".into(),
                found: format!("`{}`", &text[start..i]),
            })?;
            toks.push((col, Tok::Num(n)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() {
                let ch = bytes[i] as char;
                if ch.is_ascii_alphanumeric() || ch == '_' {
                    i += 1;
                } else {
                    break;
                }
            }
            toks.push((col, Tok::Ident(text[start..i].to_string())));
            continue;
        }
        return Err(ParseError {
            line: line_no,
            col,
            expected: "a token".into(),
            found: format!("`{c}`"),
        });
    }
    Ok(toks)
}

struct Cursor {
    line: usize,
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end_col: usize,
}

impl Cursor {
    fn new(line: usize, text: &str) -> Result<Cursor, ParseError> {
        let toks = lex_line(line, text)?;
        Ok(Cursor {
            line,
            toks,
            pos: 0,
            end_col: text.len() + 1,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> ParseError {
        match self.toks.get(self.pos) {
            Some((col, t)) => ParseError {
                line: self.line,
                col: *col,
                expected: expected.into(),
                found: t.to_string(),
            },
            None => ParseError {
                line: self.line,
                col: self.end_col,
                expected: expected.into(),
                found: "end of line".into(),
            },
        }
    }

    fn eat(&mut self, tok: &Tok, expected: &str) -> Result<(), ParseError> {
        if self.peek() == Some(tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(expected))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                if let Some(Tok::Ident(s)) = self.next() {
                    Ok(s)
                } else {
                    unreachable!()
                }
            }
            _ => Err(self.err(expected)),
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_done(&self) -> Result<(), ParseError> {
        if self.done() {
            Ok(())
        } else {
            Err(self.err("end of line"))
        }
    }
}

fn content_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let body = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            if body.trim().is_empty() {
                None
            } else {
                Some((i + 1, body))
            }
        })
        .collect()
}

fn header_cursor<'a>(
    lines: &mut impl Iterator<Item = &'a (usize, &'a str)>,
    keyword: &str,
    eof_line: usize,
) -> Result<Cursor, ParseError> {
    let (no, text) = lines.next().ok_or_else(|| ParseError {
        line: eof_line,
        col: 1,
        expected: format!("`{keyword}:` header"),
        found: "end of file".into(),
    })?;
    let mut cur = Cursor::new(*no, text)?;
    let word = cur.ident(&format!("`{keyword}:` header"))?;
    if word != keyword {
        return Err(ParseError {
            line: *no,
            col: 1,
            expected: format!("`{keyword}:` header"),
            found: format!("`{word}`"),
        });
    }
    cur.eat(&Tok::Colon, "`:`")?;
    Ok(cur)
}

fn parse_domain(cur: &mut Cursor) -> Result<Domain, ParseError> {
    let name = cur.ident("a type (`int` or `enum{...}`)")?;
    match name.as_str() {
        "int" => Ok(Domain::Int),
        "enum" => {
            cur.eat(&Tok::LBrace, "`{`")?;
            let mut syms = vec![cur.ident("an enum literal")?];
            while cur.peek() == Some(&Tok::Comma) {
                cur.next();
                syms.push(cur.ident("an enum literal")?);
            }
            cur.eat(&Tok::RBrace, "`}`")?;
            Ok(Domain::Enum(syms))
        }
        other => Err(ParseError {
            line: cur.line,
            col: 1,
            expected: "a type (`int` or `enum{...}`)".into(),
            found: format!("`{other}`"),
        }),
    }
}

fn parse_event_list(cur: &mut Cursor) -> Result<Vec<EventSignature>, ParseError> {
    let mut sigs = Vec::new();
    loop {
        let name = cur.ident("an event name")?;
        if name == "omega" || name == "last" {
            return Err(ParseError {
                line: cur.line,
                col: 1,
                expected: "an event name (`omega` and `last` are reserved)".into(),
                found: format!("`{name}`"),
            });
        }
        cur.eat(&Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if cur.peek() != Some(&Tok::RParen) {
            loop {
                let pname = cur.ident("a parameter name")?;
                cur.eat(&Tok::Colon, "`:`")?;
                let dom = parse_domain(cur)?;
                params.push((pname, dom));
                if cur.peek() == Some(&Tok::Comma) {
                    cur.next();
                } else {
                    break;
                }
            }
        }
        cur.eat(&Tok::RParen, "`)`")?;
        sigs.push(EventSignature { name, params });
        if cur.peek() == Some(&Tok::Comma) {
            cur.next();
        } else {
            break;
        }
    }
    cur.expect_done()?;
    Ok(sigs)
}

fn parse_register_list(cur: &mut Cursor) -> Result<Vec<(String, Domain)>, ParseError> {
    let mut regs = Vec::new();
    if cur.done() {
        return Ok(regs);
    }
    loop {
        let name = cur.ident("a register name")?;
        cur.eat(&Tok::Colon, "`:`")?;
        let dom = parse_domain(cur)?;
        regs.push((name, dom));
        if cur.peek() == Some(&Tok::Comma) {
            cur.next();
        } else {
            break;
        }
    }
    cur.expect_done()?;
    Ok(regs)
}

fn parse_name_list(cur: &mut Cursor) -> Result<Vec<String>, ParseError> {
    let mut names = vec![cur.ident("a state name")?];
    while cur.peek() == Some(&Tok::Comma) {
        cur.next();
        names.push(cur.ident("a state name")?);
    }
    cur.expect_done()?;
    Ok(names)
}

fn parse_literal(cur: &mut Cursor) -> Result<Value, ParseError> {
    match cur.peek() {
        Some(Tok::Num(_)) => {
            if let Some(Tok::Num(n)) = cur.next() {
                Ok(Value::Int(n))
            } else {
                unreachable!()
            }
        }
        Some(Tok::Minus) => {
            cur.next();
            match cur.next() {
                Some(Tok::Num(n)) => Ok(Value::Int(-n)),
                _ => Err(cur.err("an integer")),
            }
        }
        Some(Tok::Ident(_)) => {
            if let Some(Tok::Ident(s)) = cur.next() {
                Ok(Value::sym(&s))
            } else {
                unreachable!()
            }
        }
        _ => Err(cur.err("a literal value")),
    }
}

fn parse_initial(
    cur: &mut Cursor,
) -> Result<(String, std::collections::BTreeMap<String, Value>), ParseError> {
    let state = cur.ident("the initial state name")?;
    let mut values = std::collections::BTreeMap::new();
    if cur.peek() == Some(&Tok::LBrace) {
        cur.next();
        loop {
            let reg = cur.ident("a register name")?;
            cur.eat(&Tok::Assign, "`:=`")?;
            let v = parse_literal(cur)?;
            values.insert(reg, v);
            if cur.peek() == Some(&Tok::Comma) {
                cur.next();
            } else {
                break;
            }
        }
        cur.eat(&Tok::RBrace, "`}`")?;
    }
    cur.expect_done()?;
    Ok((state, values))
}

struct ExprCtx {
    registers: BTreeSet<String>,
    enums: BTreeSet<String>,
}

impl ExprCtx {
    fn of(inputs: &[EventSignature], outputs: &[EventSignature], regs: &[(String, Domain)]) -> ExprCtx {
        let mut registers: BTreeSet<String> = regs.iter().map(|(n, _)| n.clone()).collect();
        let mut enums = BTreeSet::new();
        let mut note = |dom: &Domain| {
            if let Domain::Enum(syms) = dom {
                enums.extend(syms.iter().cloned());
            }
        };
        for sig in inputs.iter().chain(outputs) {
            for (p, dom) in &sig.params {
                registers.insert(p.clone());
                note(dom);
            }
        }
        for (_, dom) in regs {
            note(dom);
        }
        ExprCtx { registers, enums }
    }

    fn resolve(&self, name: &str, own_params: &[String]) -> Option<Expr> {
        if own_params.iter().any(|p| p == name) {
            Some(Expr::param(name))
        } else if self.registers.contains(name) {
            Some(Expr::reg(name))
        } else if self.enums.contains(name) {
            Some(Expr::Sym(name.to_string()))
        } else {
            None
        }
    }
}

fn parse_expr(cur: &mut Cursor, ctx: &ExprCtx, own: &[String]) -> Result<Expr, ParseError> {
    parse_or(cur, ctx, own)
}

fn parse_or(cur: &mut Cursor, ctx: &ExprCtx, own: &[String]) -> Result<Expr, ParseError> {
    let mut a = parse_and(cur, ctx, own)?;
    while cur.peek() == Some(&Tok::OrOr) {
        cur.next();
        let b = parse_and(cur, ctx, own)?;
        a = Expr::Or(Box::new(a), Box::new(b));
    }
    Ok(a)
}

fn parse_and(cur: &mut Cursor, ctx: &ExprCtx, own: &[String]) -> Result<Expr, ParseError> {
    let mut a = parse_not(cur, ctx, own)?;
    while cur.peek() == Some(&Tok::AndAnd) {
        cur.next();
        let b = parse_not(cur, ctx, own)?;
        a = Expr::And(Box::new(a), Box::new(b));
    }
    Ok(a)
}

fn parse_not(cur: &mut Cursor, ctx: &ExprCtx, own: &[String]) -> Result<Expr, ParseError> {
    if cur.peek() == Some(&Tok::Bang) {
        cur.next();
        let e = parse_not(cur, ctx, own)?;
        Ok(Expr::Not(Box::new(e)))
    } else {
        parse_cmp(cur, ctx, own)
    }
}

fn parse_cmp(cur: &mut Cursor, ctx: &ExprCtx, own: &[String]) -> Result<Expr, ParseError> {
    let a = parse_sum(cur, ctx, own)?;
    if let Some(Tok::Cmp(op)) = cur.peek().cloned() {
        cur.next();
        let b = parse_sum(cur, ctx, own)?;
        Ok(Expr::cmp(op, a, b))
    } else {
        Ok(a)
    }
}

fn parse_sum(cur: &mut Cursor, ctx: &ExprCtx, own: &[String]) -> Result<Expr, ParseError> {
    let mut a = parse_prod(cur, ctx, own)?;
    loop {
        match cur.peek() {
            Some(Tok::Plus) => {
                cur.next();
                let b = parse_prod(cur, ctx, own)?;
                a = Expr::add(a, b);
            }
            Some(Tok::Minus) => {
                cur.next();
                let b = parse_prod(cur, ctx, own)?;
                a = Expr::sub(a, b);
            }
            _ => return Ok(a),
        }
    }
}

fn parse_prod(cur: &mut Cursor, ctx: &ExprCtx, own: &[String]) -> Result<Expr, ParseError> {
    let mut a = parse_unary(cur, ctx, own)?;
    while cur.peek() == Some(&Tok::Star) {
        cur.next();
        let b = parse_unary(cur, ctx, own)?;
        a = Expr::mul(a, b);
    }
    Ok(a)
}

fn parse_unary(cur: &mut Cursor, ctx: &ExprCtx, own: &[String]) -> Result<Expr, ParseError> {
    if cur.peek() == Some(&Tok::Minus) {
        cur.next();
        if let Some(Tok::Num(_)) = cur.peek() {
            if let Some(Tok::Num(n)) = cur.next() {
                return Ok(Expr::Int(-n));
            }
            unreachable!()
        }
        let e = parse_unary(cur, ctx, own)?;
        return Ok(Expr::sub(Expr::Int(0), e));
    }
    parse_atom(cur, ctx, own)
}

fn parse_atom(cur: &mut Cursor, ctx: &ExprCtx, own: &[String]) -> Result<Expr, ParseError> {
    match cur.peek().cloned() {
        Some(Tok::Num(n)) => {
            cur.next();
            Ok(Expr::Int(n))
        }
        Some(Tok::LParen) => {
            cur.next();
            let e = parse_expr(cur, ctx, own)?;
            cur.eat(&Tok::RParen, "`)`")?;
            Ok(e)
        }
        Some(Tok::Ident(name)) => {
            if name == "true" || name == "false" {
                cur.next();
                return Ok(Expr::Bool(name == "true"));
            }
            if name == "last" {
                cur.next();
                cur.eat(&Tok::LParen, "`(`")?;
                let reg = cur.ident("a register name")?;
                cur.eat(&Tok::RParen, "`)`")?;
                if ctx.registers.contains(&reg) {
                    return Ok(Expr::reg(&reg));
                }
                return Err(ParseError {
                    line: cur.line,
                    col: 1,
                    expected: "a register name inside `last(...)`".into(),
                    found: format!("`{reg}`"),
                });
            }
            match ctx.resolve(&name, own) {
                Some(e) => {
                    cur.next();
                    Ok(e)
                }
                None => Err(cur.err("a parameter, register or enum literal")),
            }
        }
        _ => Err(cur.err("an expression")),
    }
}

fn parse_transition(
    cur: &mut Cursor,
    inputs: &[EventSignature],
    outputs: &[EventSignature],
    ctx: &ExprCtx,
) -> Result<Transition, ParseError> {
    let source = cur.ident("a source state")?;
    cur.eat(&Tok::Dashes, "`--`")?;
    let input = cur.ident("an input event name")?;
    let sig = inputs
        .iter()
        .find(|s| s.name == input)
        .ok_or_else(|| ParseError {
            line: cur.line,
            col: 1,
            expected: "a declared input event".into(),
            found: format!("`{input}`"),
        })?;
    cur.eat(&Tok::LParen, "`(`")?;
    let mut listed = Vec::new();
    if cur.peek() != Some(&Tok::RParen) {
        listed.push(cur.ident("a parameter name")?);
        while cur.peek() == Some(&Tok::Comma) {
            cur.next();
            listed.push(cur.ident("a parameter name")?);
        }
    }
    cur.eat(&Tok::RParen, "`)`")?;
    let declared: Vec<String> = sig.param_names().map(|s| s.to_string()).collect();
    if listed != declared {
        return Err(ParseError {
            line: cur.line,
            col: 1,
            expected: format!("the parameter list ({})", declared.join(", ")),
            found: format!("({})", listed.join(", ")),
        });
    }
    let own = declared;
    let guard = if cur.peek() == Some(&Tok::LBracket) {
        cur.next();
        let g = parse_expr(cur, ctx, &own)?;
        cur.eat(&Tok::RBracket, "`]`")?;
        Some(g)
    } else {
        None
    };
    cur.eat(&Tok::Slash, "`/`")?;
    let output = match cur.peek().cloned() {
        Some(Tok::Ident(name)) if name == "omega" => {
            cur.next();
            OutputSpec::Silent
        }
        Some(Tok::Ident(name)) => {
            cur.next();
            if !outputs.iter().any(|s| s.name == name) {
                return Err(ParseError {
                    line: cur.line,
                    col: 1,
                    expected: "a declared output event or `omega`".into(),
                    found: format!("`{name}`"),
                });
            }
            cur.eat(&Tok::LParen, "`(`")?;
            let mut args = Vec::new();
            if cur.peek() != Some(&Tok::RParen) {
                args.push(parse_expr(cur, ctx, &own)?);
                while cur.peek() == Some(&Tok::Comma) {
                    cur.next();
                    args.push(parse_expr(cur, ctx, &own)?);
                }
            }
            cur.eat(&Tok::RParen, "`)`")?;
            OutputSpec::Event { name, args }
        }
        _ => return Err(cur.err("an output event or `omega`")),
    };
    let mut updates = Vec::new();
    if cur.peek() == Some(&Tok::LBrace) {
        cur.next();
        loop {
            let reg = cur.ident("a register name")?;
            cur.eat(&Tok::Assign, "`:=`")?;
            let e = parse_expr(cur, ctx, &own)?;
            updates.push((reg, e));
            if cur.peek() == Some(&Tok::Comma) {
                cur.next();
            } else {
                break;
            }
        }
        cur.eat(&Tok::RBrace, "`}`")?;
    }
    cur.eat(&Tok::Arrow, "`-->`")?;
    let target = cur.ident("a target state")?;
    cur.expect_done()?;
    Ok(Transition {
        source,
        input: input.clone(),
        guard,
        output,
        updates,
        target,
    })
}

pub fn parse_efsm(text: &str) -> Result<Efsm, ParseError> {
    let lines = content_lines(text);
    let eof_line = text.lines().count() + 1;
    let mut it = lines.iter();
    let mut cur = header_cursor(&mut it, "inputs", eof_line)?;
    let inputs = parse_event_list(&mut cur)?;
    let mut cur = header_cursor(&mut it, "outputs", eof_line)?;
    let outputs = parse_event_list(&mut cur)?;
    let mut cur = header_cursor(&mut it, "registers", eof_line)?;
    let registers = parse_register_list(&mut cur)?;
    let mut cur = header_cursor(&mut it, "states", eof_line)?;
    let states = parse_name_list(&mut cur)?;
    let mut cur = header_cursor(&mut it, "initial", eof_line)?;
    let (initial_state, initial_registers) = parse_initial(&mut cur)?;

    let ctx = ExprCtx::of(&inputs, &outputs, &registers);
    let mut transitions = Vec::new();
    for (no, text) in it {
        let mut cur = Cursor::new(*no, text)?;
        transitions.push(parse_transition(&mut cur, &inputs, &outputs, &ctx)?);
    }
    if transitions.is_empty() {
        return Err(ParseError {
            line: eof_line,
            col: 1,
            expected: "at least one transition".into(),
            found: "end of file".into(),
        });
    }
    Ok(Efsm {
        inputs,
        outputs,
        registers,
        states,
        initial_state,
        initial_registers,
        transitions,
    })
}

fn signature_text(sig: &EventSignature) -> String {
    let params: Vec<String> = sig
        .params
        .iter()
        .map(|(n, d)| format!("{n}: {d}"))
        .collect();
    format!("{}({})", sig.name, params.join(", "))
}

pub fn serialize_efsm(m: &Efsm) -> String {
    let mut out = String::new();
    let event_list = |sigs: &[EventSignature]| {
        sigs.iter()
            .map(signature_text)
            .collect::<Vec<_>>()
            .join(", ")
    };
    out.push_str(&format!("inputs: {}\n", event_list(&m.inputs)));
    out.push_str(&format!("outputs: {}\n", event_list(&m.outputs)));
    if m.registers.is_empty() {
        out.push_str("registers:\n");
    } else {
        let regs: Vec<String> = m
            .registers
            .iter()
            .map(|(n, d)| format!("{n}: {d}"))
            .collect();
        out.push_str(&format!("registers: {}\n", regs.join(", ")));
    }
    out.push_str(&format!("states: {}\n", m.states.join(", ")));
    if m.initial_registers.is_empty() {
        out.push_str(&format!("initial: {}\n", m.initial_state));
    } else {
        // Keep register declaration order for readability.
        let mut inits: Vec<String> = Vec::new();
        for (name, _) in &m.registers {
            if let Some(v) = m.initial_registers.get(name) {
                inits.push(format!("{name} := {v}"));
            }
        }
        for (name, v) in &m.initial_registers {
            if !m.registers.iter().any(|(n, _)| n == name) {
                inits.push(format!("{name} := {v}"));
            }
        }
        out.push_str(&format!(
            "initial: {} {{{}}}\n",
            m.initial_state,
            inits.join(", ")
        ));
    }
    out.push('\n');
    for t in &m.transitions {
        out.push_str(&transition_text(m, t));
        out.push('\n');
    }
    out
}

fn transition_text(m: &Efsm, t: &Transition) -> String {
    let own: Vec<String> = m
        .input_signature(&t.input)
        .map(|sig| sig.param_names().map(|s| s.to_string()).collect())
        .unwrap_or_default();
    let shadowed = |name: &str| own.iter().any(|p| p == name);
    let mut s = format!("{} -- {}({})", t.source, t.input, own.join(", "));
    if let Some(g) = &t.guard {
        s.push_str(&format!(" [{}]", g.render(&shadowed)));
    }
    match &t.output {
        OutputSpec::Silent => s.push_str(" / omega"),
        OutputSpec::Event { name, args } => {
            let rendered: Vec<String> = args.iter().map(|e| e.render(&shadowed)).collect();
            s.push_str(&format!(" / {}({})", name, rendered.join(", ")));
        }
    }
    if !t.updates.is_empty() {
        let ups: Vec<String> = t
            .updates
            .iter()
            .map(|(r, e)| format!("{r} := {}", e.render(&shadowed)))
            .collect();
        s.push_str(&format!(" {{{}}}", ups.join(", ")));
    }
    s.push_str(&format!(" --> {}", t.target));
    s
}

/// Parse a concrete input like `coin(100)`, `select(coffee)` or `vend()`
/// (the parentheses are optional for parameterless events) and check it
/// against the interface.
pub fn parse_concrete_input(text: &str, iface: &Interface) -> Result<ConcreteInput, ParseError> {
    let mut cur = Cursor::new(1, text)?;
    let (name, args) = parse_call(&mut cur)?;
    cur.expect_done()?;
    let sig = iface.input_signature(&name).ok_or_else(|| ParseError {
        line: 1,
        col: 1,
        expected: "a declared input event".into(),
        found: format!("`{name}`"),
    })?;
    check_args(&name, sig, &args)?;
    Ok(ConcreteInput { name, args })
}

/// Parse a concrete output: `omega`, `OMEGA`, or an event like `Pay(0)`.
pub fn parse_concrete_output(text: &str, iface: &Interface) -> Result<ConcreteOutput, ParseError> {
    let trimmed = text.trim();
    if trimmed == "omega" {
        return Ok(ConcreteOutput::Silent);
    }
    if trimmed == "OMEGA" {
        return Ok(ConcreteOutput::Refused);
    }
    let mut cur = Cursor::new(1, text)?;
    let (name, args) = parse_call(&mut cur)?;
    cur.expect_done()?;
    let sig = iface.output_signature(&name).ok_or_else(|| ParseError {
        line: 1,
        col: 1,
        expected: "a declared output event".into(),
        found: format!("`{name}`"),
    })?;
    check_args(&name, sig, &args)?;
    Ok(ConcreteOutput::Event { name, args })
}

fn parse_call(cur: &mut Cursor) -> Result<(String, Vec<Value>), ParseError> {
    let name = cur.ident("an event name")?;
    let mut args = Vec::new();
    if cur.peek() == Some(&Tok::LParen) {
        cur.next();
        if cur.peek() != Some(&Tok::RParen) {
            args.push(parse_literal(cur)?);
            while cur.peek() == Some(&Tok::Comma) {
                cur.next();
                args.push(parse_literal(cur)?);
            }
        }
        cur.eat(&Tok::RParen, "`)`")?;
    }
    Ok((name, args))
}

fn check_args(name: &str, sig: &EventSignature, args: &[Value]) -> Result<(), ParseError> {
    if sig.params.len() != args.len() {
        return Err(ParseError {
            line: 1,
            col: 1,
            expected: format!("{} argument(s) for `{name}`", sig.params.len()),
            found: format!("{}", args.len()),
        });
    }
    for ((pname, dom), v) in sig.params.iter().zip(args) {
        if !dom.admits(v) {
            return Err(ParseError {
                line: 1,
                col: 1,
                expected: format!("a value in {dom} for `{pname}`"),
                found: format!("`{v}`"),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{blowup_machine, vending_machine};

    const VENDING: &str = "\
inputs: select(i1: enum{tea, coffee}), coin(i2: int), vend()
outputs: Pay(t: int), Display(t: int), Serve(b: enum{tea, coffee})
registers: r1: enum{tea, coffee}, r2: int
states: s0, s1
initial: s0

# the four transitions of the dispenser
s0 -- select(i1) / Pay(0) {r1 := i1, r2 := 0} --> s1
s1 -- coin(i2) / Display(r2 + i2) {r2 := r2 + i2} --> s1
s1 -- vend() [r2 < 100] / omega --> s1
s1 -- vend() [r2 >= 100] / Serve(r1) --> s0
";

    #[test]
    fn parses_the_dispenser() {
        let m = parse_efsm(VENDING).unwrap();
        assert_eq!(m.states.len(), 2);
        assert_eq!(m.transitions.len(), 4);
        assert_eq!(m, vending_machine());
    }

    #[test]
    fn serialization_round_trips() {
        let m = parse_efsm(VENDING).unwrap();
        let text = serialize_efsm(&m);
        let again = parse_efsm(&text).unwrap();
        assert_eq!(m, again);
        // Canonical form is a fixed point.
        assert_eq!(text, serialize_efsm(&again));
    }

    #[test]
    fn round_trips_initial_register_values_and_two_register_guards() {
        let m = blowup_machine();
        let text = serialize_efsm(&m);
        let again = parse_efsm(&text).unwrap();
        assert_eq!(m, again);
        assert!(text.contains("initial: s0 {ra := 0, rb := 0}"));
        assert!(text.contains("[ra >= rb]"));
    }

    #[test]
    fn last_escape_survives_a_round_trip() {
        let text = "\
inputs: bump(n: int)
outputs: Out(v: int)
registers: n: int
states: s
initial: s {n := 0}

s -- bump(n) / Out(last(n) + n) {n := last(n) + n} --> s
";
        let m = parse_efsm(text).unwrap();
        let t = &m.transitions[0];
        if let OutputSpec::Event { args, .. } = &t.output {
            assert_eq!(args[0], Expr::add(Expr::reg("n"), Expr::param("n")));
        } else {
            panic!("expected an event output");
        }
        let round = serialize_efsm(&m);
        assert!(round.contains("Out(last(n) + n)"));
        assert_eq!(parse_efsm(&round).unwrap(), m);
    }

    #[test]
    fn missing_transitions_is_an_error() {
        let headers: String = VENDING.lines().take(5).collect::<Vec<_>>().join("\n");
        let err = parse_efsm(&headers).unwrap_err();
        assert_eq!(err.expected, "at least one transition");
    }

    #[test]
    fn errors_carry_line_and_column() {
        let bad = VENDING.replace("s1 -- vend() [r2 < 100] / omega --> s1",
                                  "s1 -- vend() [r2 < 100] / omega --> ");
        let err = parse_efsm(&bad).unwrap_err();
        assert_eq!(err.line, 10);
        assert_eq!(err.expected, "a target state");
        assert_eq!(err.found, "end of line");

        let bad2 = VENDING.replace("outputs:", "outpts:");
        let err2 = parse_efsm(&bad2).unwrap_err();
        assert_eq!(err2.line, 2);
        assert_eq!(err2.expected, "`outputs:` header");
    }

    #[test]
    fn unknown_identifier_in_an_expression_is_an_error() {
        let bad = VENDING.replace("Serve(r1)", "Serve(r9)");
        let err = parse_efsm(&bad).unwrap_err();
        assert!(err.expected.contains("parameter, register or enum literal"));
        assert_eq!(err.found, "`r9`");
    }

    #[test]
    fn concrete_events_parse_against_the_interface() {
        let iface = crate::abstraction::Interface::of(&vending_machine());
        assert_eq!(
            parse_concrete_input("coin(100)", &iface).unwrap(),
            ConcreteInput::new("coin", vec![Value::Int(100)])
        );
        assert_eq!(
            parse_concrete_input("select(coffee)", &iface).unwrap(),
            ConcreteInput::new("select", vec![Value::sym("coffee")])
        );
        assert_eq!(
            parse_concrete_input("vend", &iface).unwrap(),
            ConcreteInput::plain("vend")
        );
        assert_eq!(
            parse_concrete_input("vend()", &iface).unwrap(),
            ConcreteInput::plain("vend")
        );
        assert!(parse_concrete_input("coin(tea)", &iface).is_err());
        assert!(parse_concrete_input("coin()", &iface).is_err());
        assert_eq!(
            parse_concrete_output("omega", &iface).unwrap(),
            ConcreteOutput::Silent
        );
        assert_eq!(
            parse_concrete_output("OMEGA", &iface).unwrap(),
            ConcreteOutput::Refused
        );
        assert_eq!(
            parse_concrete_output("Pay(0)", &iface).unwrap(),
            ConcreteOutput::event("Pay", vec![Value::Int(0)])
        );
        assert_eq!(
            parse_concrete_output("Serve(tea)", &iface).unwrap(),
            ConcreteOutput::event("Serve", vec![Value::sym("tea")])
        );
    }

    #[test]
    fn negative_arguments_parse_as_negative_literals() {
        let iface = crate::abstraction::Interface::of(&blowup_machine());
        assert_eq!(
            parse_concrete_input("a(-5)", &iface).unwrap(),
            ConcreteInput::new("a", vec![Value::Int(-5)])
        );
    }
}
