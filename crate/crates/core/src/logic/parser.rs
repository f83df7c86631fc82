//! Text syntax for formulas.
//!
//! ```text
//! formula := const | 'true' | 'false' | var '=' var | REL '(' vars ')'
//!          | CONN '(' formula,* ')' | 'affine' '(' consts ')' '(' formula,* ')'
//!          | AGG ['(' const ')'] '(' formula,+ ':' var+ ':' formula,+ ')'
//!          | 'exists' var+ '(' formula ')' | 'forall' var+ '(' formula ')'
//!          | 'closed' '{' item (';' item)* '}' | MACRO '(' vars ')' | '(' formula ')'
//! item    := 'exists' var,+ | ['!'] REL '(' vars ')' | var
//! program := ('let' NAME '(' vars ')' '=' formula ';')* formula
//! ```

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_rational::BigRational;

use super::formula::{Formula, TypeAtom, Var};
use super::registry::{Aggregation, Connective};
use super::signature::{Signature, Sym};
use crate::error::{Error, Result};
use crate::scalar::parse_ratio;
use crate::types::ClosureType;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Punct(char),
    Neq,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const KEYWORDS: &[&str] = &["exists", "forall", "closed", "let", "true", "false"];

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let start = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let s: String = chars[i..].iter().take_while(|c| c.is_ascii_alphanumeric() || **c == '_').collect();
            Tok::Ident(s)
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let mut j = i;
            let digits = |j: &mut usize| {
                while *j < chars.len() && chars[*j].is_ascii_digit() {
                    *j += 1;
                }
            };
            digits(&mut j);
            if j < chars.len() && chars[j] == '.' {
                j += 1;
                digits(&mut j);
            }
            if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                let mut k = j + 1;
                if k < chars.len() && (chars[k] == '-' || chars[k] == '+') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    j = k;
                    digits(&mut j);
                }
            }
            if j + 1 < chars.len() && chars[j] == '/' && chars[j + 1].is_ascii_digit() {
                j += 1;
                digits(&mut j);
            }
            Tok::Num(chars[i..j].iter().collect())
        } else if c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit() || *d == '.') {
            let rest: String = chars[i + 1..].iter().collect();
            let inner = lex(&rest)?;
            match inner.first() {
                Some(Token { tok: Tok::Num(s), .. }) => Tok::Num(format!("-{}", s)),
                _ => return Err(perr(line, col, "expected a number after `-`")),
            }
        } else if c == '!' && chars.get(i + 1) == Some(&'=') {
            Tok::Neq
        } else if "(){}[],:;=!".contains(c) {
            Tok::Punct(c)
        } else {
            return Err(perr(line, col, &format!("unexpected character `{}`", c)));
        };
        let len = match &tok {
            Tok::Ident(s) | Tok::Num(s) => s.chars().count(),
            Tok::Neq => 2,
            Tok::Punct(_) => 1,
        };
        i += len;
        col += len;
        out.push(Token { tok, line: start.0, col: start.1 });
    }
    Ok(out)
}

fn perr(line: usize, col: usize, msg: &str) -> Error {
    Error::Parse { line, col, msg: msg.to_string() }
}

#[derive(Clone, Debug)]
struct Macro {
    params: Vec<Var>,
    body: Formula,
}

/// Formula parser bound to a signature, with optional named macros.
#[derive(Clone, Debug)]
pub struct Parser {
    sig: Arc<Signature>,
    macros: HashMap<String, Macro>,
}

impl Parser {
    pub fn new(sig: Arc<Signature>) -> Parser {
        Parser { sig, macros: HashMap::new() }
    }

    /// Defines `name(params) := body`; later uses are expanded inline.
    pub fn define(&mut self, name: &str, params: &[&str], body: &str) -> Result<()> {
        let body = self.parse(body)?;
        self.macros.insert(name.to_string(), Macro { params: params.iter().map(|p| p.to_string()).collect(), body });
        Ok(())
    }

    /// Parses a program: `let` definitions followed by one formula.
    pub fn parse(&mut self, text: &str) -> Result<Formula> {
        let toks = lex(text)?;
        let mut st = State { toks, pos: 0, sig: self.sig.clone(), macros: &mut self.macros, bound: Vec::new() };
        while st.peek_ident() == Some("let") {
            st.pos += 1;
            let name = st.ident()?;
            let params = st.var_list_parens()?;
            st.expect('=')?;
            let body = st.formula()?;
            st.expect(';')?;
            st.macros.insert(name, Macro { params, body });
        }
        let f = st.formula()?;
        if st.pos < st.toks.len() {
            return Err(st.err("unexpected trailing input"));
        }
        Ok(f)
    }
}

pub fn parse(text: &str, sig: &Signature) -> Result<Formula> {
    Parser::new(Arc::new(sig.clone())).parse(text)
}

struct State<'m> {
    toks: Vec<Token>,
    pos: usize,
    sig: Arc<Signature>,
    macros: &'m mut HashMap<String, Macro>,
    bound: Vec<Var>,
}

impl State<'_> {
    fn err(&self, msg: &str) -> Error {
        match self.toks.get(self.pos).or(self.toks.last()) {
            Some(t) => perr(t.line, t.col, msg),
            None => perr(1, 1, msg),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn peek_ident(&self) -> Option<&str> {
        match self.peek() {
            Some(Tok::Ident(s)) => Some(s),
            _ => None,
        }
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Punct(c))
    }

    fn eat(&mut self, c: char) -> bool {
        if self.is_punct(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c)))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected a name")),
        }
    }

    fn var(&mut self) -> Result<Var> {
        let v = self.ident()?;
        if KEYWORDS.contains(&v.as_str()) {
            self.pos -= 1;
            return Err(self.err(&format!("`{}` is reserved", v)));
        }
        Ok(v)
    }

    fn number(&mut self) -> Result<BigRational> {
        match self.peek() {
            Some(Tok::Num(s)) => {
                let q = parse_ratio(s).ok_or_else(|| self.err("malformed number"))?;
                self.pos += 1;
                Ok(q)
            }
            _ => Err(self.err("expected a number")),
        }
    }

    fn var_list_parens(&mut self) -> Result<Vec<Var>> {
        self.expect('(')?;
        let mut vars = Vec::new();
        if !self.eat(')') {
            loop {
                vars.push(self.var()?);
                if self.eat(')') {
                    break;
                }
                self.expect(',')?;
            }
        }
        Ok(vars)
    }

    fn formula_list(&mut self) -> Result<Vec<Formula>> {
        let mut out = vec![self.formula()?];
        while self.eat(',') {
            out.push(self.formula()?);
        }
        Ok(out)
    }

    fn number_list_parens(&mut self) -> Result<Vec<BigRational>> {
        let close = if self.eat('(') {
            ')'
        } else {
            self.expect('[')?;
            ']'
        };
        let mut out = vec![self.number()?];
        while self.eat(',') {
            out.push(self.number()?);
        }
        self.expect(close)?;
        Ok(out)
    }

    fn formula(&mut self) -> Result<Formula> {
        match self.peek().cloned() {
            Some(Tok::Num(_)) => Ok(Formula::Const(self.number()?)),
            Some(Tok::Punct('(')) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(')')?;
                Ok(f)
            }
            Some(Tok::Ident(name)) => self.named(name),
            _ => Err(self.err("expected a formula")),
        }
    }

    fn named(&mut self, name: String) -> Result<Formula> {
        match name.as_str() {
            "true" => {
                self.pos += 1;
                return Ok(Formula::top());
            }
            "false" => {
                self.pos += 1;
                return Ok(Formula::bottom());
            }
            "exists" | "forall" => {
                self.pos += 1;
                let func = if name == "exists" { Aggregation::Max } else { Aggregation::Min };
                let mut vars = vec![self.var()?];
                while self.eat(',') || matches!(self.peek(), Some(Tok::Ident(_))) {
                    vars.push(self.var()?);
                }
                self.bind(&vars)?;
                self.expect('(')?;
                let body = self.formula()?;
                self.expect(')')?;
                self.unbind(vars.len());
                return Ok(Formula::agg(func, vec![body], vars, vec![Formula::top()]));
            }
            "closed" => {
                self.pos += 1;
                return self.closed();
            }
            _ => {}
        }
        if self.peek_at(1) == Some(&Tok::Punct('=')) {
            let a = self.var()?;
            self.pos += 1;
            let b = self.var()?;
            return Ok(Formula::Eq(a, b));
        }
        if self.peek_at(1) != Some(&Tok::Punct('(')) && self.peek_at(1) != Some(&Tok::Punct('[')) {
            return Err(self.err(&format!("unexpected name `{}`", name)));
        }
        self.pos += 1;
        if let Some(m) = self.macros.get(&name).cloned() {
            let args = self.var_list_parens()?;
            if args.len() != m.params.len() {
                return Err(Error::ArityMismatch { name, expected: m.params.len(), got: args.len() });
            }
            let map: Vec<(Var, Var)> = m.params.iter().cloned().zip(args).collect();
            return Ok(m.body.rename(&map));
        }
        if let Some(c) = Connective::by_name(&name) {
            return self.connective(c);
        }
        if name == "affine" {
            let ps = self.number_list_parens()?;
            let (bias, weights) = ps.split_last().unwrap();
            let c = Connective::AffineClamp { weights: weights.to_vec(), bias: bias.clone() };
            return self.connective(c);
        }
        if let Some(mut func) = Aggregation::by_name(&name) {
            if matches!(func, Aggregation::LengthPow(_)) && self.is_param_list() {
                let ps = self.number_list_parens()?;
                if ps.len() != 1 {
                    return Err(Error::ArityMismatch { name, expected: 1, got: ps.len() });
                }
                func = Aggregation::LengthPow(ps[0].clone());
            }
            return self.aggregate(func);
        }
        if let Some(sym) = self.sig.sym(&name) {
            let args = self.var_list_parens()?;
            let expected = self.sig.sym_arity(sym);
            if args.len() != expected {
                return Err(Error::ArityMismatch { name, expected, got: args.len() });
            }
            return Ok(Formula::Atom { sym, name, args });
        }
        Err(Error::UnknownSymbol(name))
    }

    /// `(number)(` or `[...]` directly after a parametric name.
    fn is_param_list(&self) -> bool {
        match (self.peek(), self.peek_at(1), self.peek_at(2), self.peek_at(3)) {
            (Some(Tok::Punct('[')), ..) => true,
            (Some(Tok::Punct('(')), Some(Tok::Num(_)), Some(Tok::Punct(')')), Some(Tok::Punct('('))) => true,
            _ => false,
        }
    }

    fn connective(&mut self, c: Connective) -> Result<Formula> {
        self.expect('(')?;
        let args = if self.is_punct(')') { Vec::new() } else { self.formula_list()? };
        self.expect(')')?;
        let ok = match c.arity() {
            Some(k) => args.len() == k,
            None => !args.is_empty(),
        };
        if !ok {
            return Err(Error::ArityMismatch { name: c.name().to_string(), expected: c.arity().unwrap_or(1), got: args.len() });
        }
        Ok(Formula::Conn(c, args))
    }

    fn bind(&mut self, vars: &[Var]) -> Result<()> {
        for (i, v) in vars.iter().enumerate() {
            if self.bound.contains(v) || vars[..i].contains(v) {
                return Err(Error::RebindingBoundVar(v.clone()));
            }
        }
        self.bound.extend(vars.iter().cloned());
        Ok(())
    }

    fn unbind(&mut self, k: usize) {
        self.bound.truncate(self.bound.len() - k);
    }

    fn aggregate(&mut self, func: Aggregation) -> Result<Formula> {
        self.expect('(')?;
        // bound variables appear after the body; find them first so that
        // rebinding checks apply to nested aggregations
        let save = self.pos;
        let mut depth = 0usize;
        let mut colon = None;
        for (k, t) in self.toks[save..].iter().enumerate() {
            match t.tok {
                Tok::Punct('(') | Tok::Punct('{') | Tok::Punct('[') => depth += 1,
                Tok::Punct(')') | Tok::Punct('}') | Tok::Punct(']') => {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                }
                Tok::Punct(':') if depth == 0 => {
                    colon = Some(save + k);
                    break;
                }
                _ => {}
            }
        }
        let colon = colon.ok_or_else(|| self.err("expected `:` in aggregation"))?;
        self.pos = colon + 1;
        let mut bound = Vec::new();
        while !self.is_punct(':') {
            bound.push(self.var()?);
            self.eat(',');
        }
        if bound.is_empty() {
            return Err(self.err("aggregation binds no variables"));
        }
        let after = self.pos;
        self.bind(&bound)?;
        self.pos = save;
        let body = self.formula_list()?;
        if self.pos != colon {
            return Err(self.err("expected `:`"));
        }
        self.pos = after + 1;
        let cond = self.formula_list()?;
        self.unbind(bound.len());
        self.expect(')')?;
        if body.len() != cond.len() || body.len() != func.slots() {
            return Err(Error::ArityMismatch {
                name: func.name().to_string(),
                expected: func.slots(),
                got: body.len().max(cond.len()),
            });
        }
        Ok(Formula::agg(func, body, bound, cond))
    }

    fn closed(&mut self) -> Result<Formula> {
        self.expect('{')?;
        let mut free: Vec<Var> = Vec::new();
        let mut exist: Vec<Var> = Vec::new();
        let mut edges: Vec<(Var, Var, bool)> = Vec::new();
        let mut rels: Vec<(usize, Vec<Var>, bool)> = Vec::new();
        let note = |v: &Var, free: &mut Vec<Var>, exist: &[Var]| {
            if !exist.contains(v) && !free.contains(v) {
                free.push(v.clone());
            }
        };
        while !self.eat('}') {
            if self.peek_ident() == Some("exists") {
                self.pos += 1;
                loop {
                    let v = self.var()?;
                    if free.contains(&v) || exist.contains(&v) {
                        return Err(self.err(&format!("`{}` declared after use", v)));
                    }
                    exist.push(v);
                    if !self.eat(',') {
                        break;
                    }
                }
            } else if self.peek() == Some(&Tok::Neq) {
                return Err(self.err("expected a literal"));
            } else if matches!(self.peek(), Some(Tok::Ident(_))) && self.peek_at(1) != Some(&Tok::Punct('(')) {
                let v = self.var()?;
                note(&v, &mut free, &exist);
            } else {
                let pos = !self.eat('!');
                let name = self.ident()?;
                let args = self.var_list_parens()?;
                for a in &args {
                    note(a, &mut free, &exist);
                }
                match self.sig.sym(&name) {
                    Some(Sym::Edge) if args.len() == 2 => edges.push((args[0].clone(), args[1].clone(), pos)),
                    Some(Sym::Rel(r)) if args.len() == self.sig.arity(r) => rels.push((r, args, pos)),
                    Some(s) => {
                        return Err(Error::ArityMismatch { name, expected: self.sig.sym_arity(s), got: args.len() })
                    }
                    None => return Err(Error::UnknownSymbol(name)),
                }
            }
            if !self.eat(';') && !self.is_punct('}') {
                return Err(self.err("expected `;` or `}`"));
            }
        }
        let names: Vec<Var> = free.iter().chain(&exist).cloned().collect();
        let idx = |v: &Var| names.iter().position(|n| n == v).unwrap();
        let mut parent = vec![None; names.len()];
        for (a, b, _) in edges.iter().filter(|e| e.2) {
            if parent[idx(b)].is_some_and(|p| p != idx(a)) {
                return Err(self.err(&format!("`{}` has two parents", b)));
            }
            parent[idx(b)] = Some(idx(a));
        }
        for (a, b, _) in edges.iter().filter(|e| !e.2) {
            if parent[idx(b)] == Some(idx(a)) {
                return Err(self.err(&format!("contradictory literals on E({}, {})", a, b)));
            }
        }
        if names.is_empty() {
            return Err(self.err("empty closure type"));
        }
        let mut lits = BTreeMap::new();
        for (r, args, pos) in rels {
            let key = (r, args.iter().map(idx).collect());
            if lits.insert(key, pos) == Some(!pos) {
                return Err(self.err("contradictory literals"));
            }
        }
        let (ty, map) = ClosureType::new(free.len(), parent, lits).map_err(|e| self.err(&e.to_string()))?;
        let mut ordered = vec![String::new(); names.len()];
        for (old, n) in names.into_iter().enumerate() {
            ordered[map[old]] = n;
        }
        Ok(Formula::Type(Box::new(TypeAtom { ty, names: ordered, sig: self.sig.clone() })))
    }
}
