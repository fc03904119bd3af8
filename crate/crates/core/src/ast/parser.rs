//! Recursive-descent parser for a single Java method declaration.
//!
//! Output follows srcML conventions: expressions are flat sequences of
//! names, operators, literals and calls inside an `expr`; dotted names are a
//! `name` holding `name`/`operator` children; parentheses and casts appear as
//! `(` and `)` operators; `if` uses `condition`/`then`/`else` children.

use super::lexer::{lex, Tok, Token};
use super::{AstError, AstNode, CHAR_LITERAL, STRING_LITERAL};

const RESERVED: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "false",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "null",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "true",
    "try",
    "void",
    "volatile",
    "while",
];

const PRIMITIVES: &[&str] = &[
    "boolean", "byte", "char", "double", "float", "int", "long", "short", "void",
];

const MODIFIERS: &[&str] = &[
    "abstract",
    "default",
    "final",
    "native",
    "private",
    "protected",
    "public",
    "static",
    "strictfp",
    "synchronized",
    "transient",
    "volatile",
];

const BINARY_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", "||", "&&", "|", "^", "&", "==",
    "!=", "<", "<=", "<<", "+", "-", "*", "/", "%", "?", ":",
];

const PREFIX_OPS: &[&str] = &["!", "~", "-", "+", "++", "--"];

fn leaf(label: &str, word: &str) -> AstNode {
    AstNode::word_leaf(label, word)
}

fn bare(label: &str) -> AstNode {
    AstNode::leaf(label, None)
}

fn node(label: &str, children: Vec<AstNode>) -> AstNode {
    AstNode::node(label, children)
}

/// A dotted/indexed name collapses to a plain leaf when it has one part.
fn name_of(mut parts: Vec<AstNode>) -> AstNode {
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        node("name", parts)
    }
}

/// Parses one method (or constructor) declaration into `unit(function ...)`.
///
/// Unsupported constructs (lambdas, anonymous classes, `switch`, generic
/// methods, method references, try-with-resources, local classes) are
/// reported as [`AstError::Parse`] with the byte offset where they start.
pub fn parse_method(source: &str) -> Result<AstNode, AstError> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
    };
    let f = p.method()?;
    if p.peek() != &Tok::Eof {
        return Err(p.err("unexpected input after the method body"));
    }
    Ok(node("unit", vec![f]))
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn err(&self, message: impl Into<String>) -> AstError {
        AstError::Parse {
            offset: self.toks[self.pos].offset,
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn is(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_at(&self, n: usize, p: &str) -> bool {
        matches!(self.peek_at(n), Tok::Punct(q) if *q == p)
    }

    fn eat(&mut self, p: &str) -> bool {
        let hit = self.is(p);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect(&mut self, p: &str) -> Result<(), AstError> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{p}`")))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.is_kw(kw);
        if hit {
            self.bump();
        }
        hit
    }

    fn word(&self) -> Option<&str> {
        match self.peek() {
            Tok::Ident(s) => Some(s),
            _ => None,
        }
    }

    /// A non-reserved identifier.
    fn ident(&mut self) -> Result<String, AstError> {
        match self.peek() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.err("expected an identifier")),
        }
    }

    fn at_ident(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if !RESERVED.contains(&s.as_str()))
    }

    /// The operator spelled by adjacent `>`/`=` tokens at the cursor
    /// (`>`, `>=`, `>>`, `>>=`, `>>>`, `>>>=`) and how many tokens it spans.
    fn gt_operator(&self) -> Option<(&'static str, usize)> {
        if !self.is(">") {
            return None;
        }
        let adjacent = |n: usize| {
            let (a, b) = (
                &self.toks[self.pos + n - 1],
                &self.toks[(self.pos + n).min(self.toks.len() - 1)],
            );
            b.offset == a.offset + 1
        };
        let mut gts = 1;
        while gts < 3 && self.is_at(gts, ">") && adjacent(gts) {
            gts += 1;
        }
        let assign = self.is_at(gts, "=") && adjacent(gts);
        let op = match (gts, assign) {
            (1, false) => ">",
            (1, true) => ">=",
            (2, false) => ">>",
            (2, true) => ">>=",
            (3, false) => ">>>",
            (3, true) => ">>>=",
            _ => unreachable!(),
        };
        Some((op, gts + assign as usize))
    }

    fn unsupported(&self, what: &str) -> AstError {
        self.err(format!("{what} is not supported"))
    }

    // ---- declarations ----

    fn method(&mut self) -> Result<AstNode, AstError> {
        let mut parts = self.modifiers()?;
        if self.is("<") {
            return Err(self.unsupported("a generic method"));
        }
        let is_ctor = self.at_ident() && self.is_at(1, "(");
        if !is_ctor {
            parts.push(node("type", vec![self.type_name()?]));
        }
        parts.push(leaf("name", &self.ident()?));
        parts.push(self.parameter_list()?);
        if self.is("[") {
            return Err(self.unsupported("array dimensions after the parameter list"));
        }
        if self.eat_kw("throws") {
            let mut args = Vec::new();
            loop {
                let t = self.type_name()?;
                args.push(node("argument", vec![node("expr", vec![t])]));
                if !self.eat(",") {
                    break;
                }
            }
            parts.push(node("throws", args));
        }
        if self.eat(";") {
            return Ok(node("function_decl", parts));
        }
        if !self.is("{") {
            return Err(self.err("expected a method body"));
        }
        parts.push(self.block()?);
        Ok(node(
            if is_ctor { "constructor" } else { "function" },
            parts,
        ))
    }

    /// Annotations and modifier keywords, in source order.
    fn modifiers(&mut self) -> Result<Vec<AstNode>, AstError> {
        let mut out = Vec::new();
        loop {
            if self.is("@") {
                if self.is_at(1, "interface") {
                    return Err(self.unsupported("an annotation type"));
                }
                out.push(self.annotation()?);
            } else if let Some(w) = self.word().filter(|w| MODIFIERS.contains(w)) {
                out.push(leaf("specifier", w));
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }

    fn annotation(&mut self) -> Result<AstNode, AstError> {
        self.expect("@")?;
        let mut parts = vec![leaf("name", &self.ident()?)];
        while self.is(".") {
            self.bump();
            parts.push(leaf("operator", "."));
            parts.push(leaf("name", &self.ident()?));
        }
        let mut children = vec![name_of(parts)];
        if self.is("(") {
            children.push(self.argument_list()?);
        }
        Ok(node("annotation", children))
    }

    /// A type reference: qualified name, generic arguments, array dimensions.
    fn type_name(&mut self) -> Result<AstNode, AstError> {
        let first = match self.word() {
            Some(w) if PRIMITIVES.contains(&w) || !RESERVED.contains(&w) => w.to_string(),
            _ => return Err(self.err("expected a type")),
        };
        self.bump();
        let mut parts = vec![leaf("name", &first)];
        if self.is("<") {
            parts.push(self.type_arguments()?);
        }
        while self.is(".") && matches!(self.peek_at(1), Tok::Ident(_)) {
            self.bump();
            parts.push(leaf("operator", "."));
            parts.push(leaf("name", &self.ident()?));
            if self.is("<") {
                parts.push(self.type_arguments()?);
            }
        }
        while self.is("[") && self.is_at(1, "]") {
            self.bump();
            self.bump();
            parts.push(bare("index"));
        }
        Ok(name_of(parts))
    }

    fn type_arguments(&mut self) -> Result<AstNode, AstError> {
        self.expect("<")?;
        let mut args = Vec::new();
        if self.is(">") {
            self.bump();
            return Ok(bare("argument_list"));
        }
        loop {
            if self.eat("?") {
                let mut a = vec![leaf("name", "?")];
                for bound in ["extends", "super"] {
                    if self.eat_kw(bound) {
                        a.push(node(bound, vec![self.type_name()?]));
                    }
                }
                args.push(node("argument", a));
            } else {
                args.push(node("argument", vec![self.type_name()?]));
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect(">")?;
        Ok(node("argument_list", args))
    }

    fn parameter_list(&mut self) -> Result<AstNode, AstError> {
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.eat(")") {
            loop {
                params.push(node("parameter", vec![self.parameter_decl()?]));
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(")")?;
        }
        Ok(node("parameter_list", params))
    }

    /// `[annotations] [final] Type [...] name [dims]` as a `decl`.
    fn parameter_decl(&mut self) -> Result<AstNode, AstError> {
        let (mut decl, mut ty) = self.decl_prefix()?;
        ty.push(self.type_name()?);
        if self.eat("...") {
            ty.push(leaf("modifier", "..."));
        }
        decl.push(node("type", ty));
        decl.push(self.declarator_name()?);
        Ok(node("decl", decl))
    }

    /// Annotations go on the `decl`; `final` goes inside its `type`.
    fn decl_prefix(&mut self) -> Result<(Vec<AstNode>, Vec<AstNode>), AstError> {
        let (mut decl, mut ty) = (Vec::new(), Vec::new());
        loop {
            if self.is("@") {
                decl.push(self.annotation()?);
            } else if self.eat_kw("final") {
                ty.push(leaf("specifier", "final"));
            } else {
                return Ok((decl, ty));
            }
        }
    }

    fn declarator_name(&mut self) -> Result<AstNode, AstError> {
        let mut parts = vec![leaf("name", &self.ident()?)];
        while self.is("[") && self.is_at(1, "]") {
            self.bump();
            self.bump();
            parts.push(bare("index"));
        }
        Ok(name_of(parts))
    }

    // ---- statements ----

    fn block(&mut self) -> Result<AstNode, AstError> {
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.is("}") {
            if self.peek() == &Tok::Eof {
                return Err(self.err("unterminated block"));
            }
            stmts.push(self.statement()?);
        }
        self.bump();
        Ok(node("block", stmts))
    }

    fn statement(&mut self) -> Result<AstNode, AstError> {
        if self.is("{") {
            return self.block();
        }
        if self.eat(";") {
            return Ok(bare("empty_stmt"));
        }
        if self.is("@") || self.is_kw("final") {
            return self.local_decl();
        }
        if self.at_ident() && self.is_at(1, ":") {
            return Err(self.unsupported("a labeled statement"));
        }
        let kw = self.word().unwrap_or("").to_string();
        match kw.as_str() {
            "return" => {
                self.bump();
                let mut c = Vec::new();
                if !self.is(";") {
                    c.push(self.expr()?);
                }
                self.expect(";")?;
                Ok(node("return", c))
            }
            "if" => self.if_stmt(),
            "while" => {
                self.bump();
                let cond = self.paren_condition()?;
                let body = self.statement()?;
                Ok(node("while", vec![cond, body]))
            }
            "do" => {
                self.bump();
                let body = self.statement()?;
                if !self.eat_kw("while") {
                    return Err(self.err("expected `while`"));
                }
                let cond = self.paren_condition()?;
                self.expect(";")?;
                Ok(node("do", vec![body, cond]))
            }
            "for" => self.for_stmt(),
            "try" => self.try_stmt(),
            "throw" => {
                self.bump();
                let e = self.expr()?;
                self.expect(";")?;
                Ok(node("throw", vec![e]))
            }
            "break" | "continue" => {
                self.bump();
                let mut c = Vec::new();
                if self.at_ident() {
                    c.push(leaf("name", &self.ident()?));
                }
                self.expect(";")?;
                Ok(node(&kw, c))
            }
            "switch" | "synchronized" | "assert" | "class" | "interface" | "enum" | "case"
            | "default" => Err(self.unsupported(&format!("`{kw}`"))),
            _ => {
                if self.looks_like_decl() {
                    self.local_decl()
                } else {
                    let e = self.expr()?;
                    self.expect(";")?;
                    Ok(node("expr_stmt", vec![e]))
                }
            }
        }
    }

    fn paren_condition(&mut self) -> Result<AstNode, AstError> {
        self.expect("(")?;
        let e = self.expr()?;
        self.expect(")")?;
        Ok(node("condition", vec![e]))
    }

    fn if_stmt(&mut self) -> Result<AstNode, AstError> {
        self.bump();
        let cond = self.paren_condition()?;
        let then = node("then", vec![self.statement()?]);
        let mut c = vec![cond, then];
        if self.eat_kw("else") {
            let s = if self.is_kw("if") {
                self.if_stmt()?
            } else {
                self.statement()?
            };
            c.push(node("else", vec![s]));
        }
        Ok(node("if", c))
    }

    /// Speculatively checks for `Type name` followed by a declarator tail.
    fn looks_like_decl(&mut self) -> bool {
        let save = self.pos;
        let ok = self.type_name().is_ok()
            && self.at_ident()
            && matches!(self.peek_at(1), Tok::Punct("=" | ";" | "," | "[" | ":"));
        self.pos = save;
        ok
    }

    /// `Type a = x, b;` as `decl_stmt(decl, decl)`. Later declarators get an empty `type`.
    fn declarators(&mut self) -> Result<Vec<AstNode>, AstError> {
        let (mut decl, mut ty) = self.decl_prefix()?;
        ty.push(self.type_name()?);
        decl.push(node("type", ty));
        let mut decls = Vec::new();
        loop {
            decl.push(self.declarator_name()?);
            if self.eat("=") {
                decl.push(node("init", vec![self.expr()?]));
            }
            decls.push(node("decl", std::mem::take(&mut decl)));
            if !self.eat(",") {
                return Ok(decls);
            }
            decl.push(bare("type"));
        }
    }

    fn local_decl(&mut self) -> Result<AstNode, AstError> {
        let decls = self.declarators()?;
        self.expect(";")?;
        Ok(node("decl_stmt", decls))
    }

    fn for_stmt(&mut self) -> Result<AstNode, AstError> {
        self.bump();
        self.expect("(")?;
        let has_decl = self.is("@") || self.is_kw("final") || self.looks_like_decl();
        if has_decl {
            let save = self.pos;
            let (mut decl, mut ty) = self.decl_prefix()?;
            ty.push(self.type_name()?);
            let name = self.declarator_name()?;
            if self.eat(":") {
                decl.push(node("type", ty));
                decl.push(name);
                decl.push(node("range", vec![self.expr()?]));
                self.expect(")")?;
                let body = self.statement()?;
                return Ok(node(
                    "for",
                    vec![node("init", vec![node("decl", decl)]), body],
                ));
            }
            self.pos = save;
        }
        let init = if has_decl {
            node("init", self.declarators()?)
        } else {
            node("init", self.expr_list(";")?)
        };
        self.expect(";")?;
        let cond = if self.is(";") {
            vec![]
        } else {
            vec![self.expr()?]
        };
        self.expect(";")?;
        let incr = self.expr_list(")")?;
        self.expect(")")?;
        let body = self.statement()?;
        Ok(node(
            "for",
            vec![init, node("condition", cond), node("incr", incr), body],
        ))
    }

    fn expr_list(&mut self, end: &str) -> Result<Vec<AstNode>, AstError> {
        let mut out = Vec::new();
        if self.is(end) {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if !self.eat(",") {
                return Ok(out);
            }
        }
    }

    fn try_stmt(&mut self) -> Result<AstNode, AstError> {
        self.bump();
        if self.is("(") {
            return Err(self.unsupported("try-with-resources"));
        }
        let mut c = vec![self.block()?];
        while self.eat_kw("catch") {
            self.expect("(")?;
            let (mut decl, mut ty) = self.decl_prefix()?;
            ty.push(self.type_name()?);
            while self.eat("|") {
                ty.push(leaf("operator", "|"));
                ty.push(self.type_name()?);
            }
            decl.push(node("type", ty));
            decl.push(leaf("name", &self.ident()?));
            self.expect(")")?;
            let params = node(
                "parameter_list",
                vec![node("parameter", vec![node("decl", decl)])],
            );
            c.push(node("catch", vec![params, self.block()?]));
        }
        if self.eat_kw("finally") {
            c.push(node("finally", vec![self.block()?]));
        }
        if c.len() == 1 {
            return Err(self.err("expected `catch` or `finally`"));
        }
        Ok(node("try", c))
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<AstNode, AstError> {
        let mut items = Vec::new();
        self.expr_items(&mut items)?;
        Ok(node("expr", items))
    }

    fn expr_items(&mut self, out: &mut Vec<AstNode>) -> Result<(), AstError> {
        self.operand(out)?;
        loop {
            match self.peek() {
                Tok::Punct("->") => return Err(self.unsupported("a lambda expression")),
                Tok::Punct("::") => return Err(self.unsupported("a method reference")),
                Tok::Punct(">") => {
                    let (op, n) = self.gt_operator().unwrap();
                    out.push(leaf("operator", op));
                    for _ in 0..n {
                        self.bump();
                    }
                    self.operand(out)?;
                }
                Tok::Punct(p) if BINARY_OPS.contains(p) => {
                    out.push(leaf("operator", p));
                    self.bump();
                    self.operand(out)?;
                }
                Tok::Ident(s) if s == "instanceof" => {
                    self.bump();
                    out.push(leaf("operator", "instanceof"));
                    out.push(self.type_name()?);
                    if self.at_ident() {
                        return Err(self.unsupported("an instanceof pattern"));
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn operand(&mut self, out: &mut Vec<AstNode>) -> Result<(), AstError> {
        while let Tok::Punct(p) = self.peek() {
            if !PREFIX_OPS.contains(p) {
                break;
            }
            out.push(leaf("operator", p));
            self.bump();
        }
        self.primary(out)?;
        while let Tok::Punct(p @ ("++" | "--")) = self.peek() {
            out.push(leaf("operator", p));
            self.bump();
        }
        Ok(())
    }

    fn starts_operand(&self) -> bool {
        match self.peek() {
            Tok::Number(_) | Tok::Str | Tok::Char => true,
            Tok::Ident(s) => {
                !RESERVED.contains(&s.as_str())
                    || ["this", "super", "new", "true", "false", "null"].contains(&s.as_str())
            }
            Tok::Punct(p) => ["(", "!", "~"].contains(p),
            Tok::Eof => false,
        }
    }

    fn primary(&mut self, out: &mut Vec<AstNode>) -> Result<(), AstError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                out.push(leaf("literal", &n));
            }
            Tok::Str => {
                self.bump();
                out.push(leaf("literal", STRING_LITERAL));
            }
            Tok::Char => {
                self.bump();
                out.push(leaf("literal", CHAR_LITERAL));
            }
            Tok::Ident(s) if s == "true" || s == "false" || s == "null" => {
                self.bump();
                out.push(leaf("literal", &s));
            }
            Tok::Ident(s) if s == "new" => {
                self.bump();
                out.push(leaf("operator", "new"));
                self.creator(out)?;
            }
            Tok::Ident(s) if s == "switch" => return Err(self.unsupported("a switch expression")),
            Tok::Ident(_) => {
                if self.is_at(1, "->") {
                    return Err(self.unsupported("a lambda expression"));
                }
                self.name_chain(out)?;
            }
            Tok::Punct("(") => {
                if self.paren_is_lambda() {
                    return Err(self.unsupported("a lambda expression"));
                }
                self.bump();
                out.push(leaf("operator", "("));
                let start = out.len();
                self.expr_items(out)?;
                self.expect(")")?;
                let inner = &out[start..];
                let cast_like = inner.len() == 1 && inner[0].label() == "name";
                let primitive =
                    inner.len() == 1 && inner[0].word().is_some_and(|w| PRIMITIVES.contains(&w));
                out.push(leaf("operator", ")"));
                if cast_like
                    && (self.starts_operand() || (primitive && (self.is("-") || self.is("+"))))
                {
                    self.operand(out)?;
                    return Ok(());
                }
            }
            Tok::Punct("{") => {
                out.push(self.array_initializer()?);
                return Ok(());
            }
            _ => return Err(self.err("expected an expression")),
        }
        self.selectors(out)
    }

    /// True when the parenthesis at the cursor opens a lambda parameter list.
    fn paren_is_lambda(&self) -> bool {
        let mut depth = 0usize;
        for (i, t) in self.toks[self.pos..].iter().enumerate() {
            match t.tok {
                Tok::Punct("(") => depth += 1,
                Tok::Punct(")") => {
                    depth -= 1;
                    if depth == 0 {
                        return self.is_at(i + 1, "->");
                    }
                }
                Tok::Eof => return false,
                _ => {}
            }
        }
        false
    }

    fn array_initializer(&mut self) -> Result<AstNode, AstError> {
        self.expect("{")?;
        let mut items = Vec::new();
        while !self.is("}") {
            items.push(self.expr()?);
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        Ok(node("block", items))
    }

    /// `new T(args)`, `new T[n]...`, `new T[]{...}`.
    fn creator(&mut self, out: &mut Vec<AstNode>) -> Result<(), AstError> {
        let mut parts = vec![leaf("name", &self.creator_word()?)];
        if self.is("<") {
            parts.push(self.type_arguments()?);
        }
        while self.is(".") {
            self.bump();
            parts.push(leaf("operator", "."));
            parts.push(leaf("name", &self.ident()?));
            if self.is("<") {
                parts.push(self.type_arguments()?);
            }
        }
        if self.is("(") {
            let args = self.argument_list()?;
            if self.is("{") {
                return Err(self.unsupported("an anonymous class"));
            }
            out.push(node("call", vec![name_of(parts), args]));
            return Ok(());
        }
        if !self.is("[") {
            return Err(self.err("expected `(` or `[` after `new`"));
        }
        while self.eat("[") {
            if self.eat("]") {
                parts.push(bare("index"));
            } else {
                let e = self.expr()?;
                self.expect("]")?;
                parts.push(node("index", vec![e]));
            }
        }
        out.push(node("name", parts));
        if self.is("{") {
            out.push(self.array_initializer()?);
        }
        Ok(())
    }

    fn creator_word(&mut self) -> Result<String, AstError> {
        match self.word() {
            Some(w) if PRIMITIVES.contains(&w) => {
                let w = w.to_string();
                self.bump();
                Ok(w)
            }
            _ => self.ident(),
        }
    }

    /// `a.b.c`, `a.b(x)`, `a[i]`, `this.x`, `int.class`, `String[].class`.
    fn name_chain(&mut self, out: &mut Vec<AstNode>) -> Result<(), AstError> {
        let first = match self.word() {
            Some(w)
                if !RESERVED.contains(&w)
                    || PRIMITIVES.contains(&w)
                    || w == "this"
                    || w == "super" =>
            {
                w.to_string()
            }
            _ => return Err(self.err("expected an expression")),
        };
        self.bump();
        let mut parts = vec![leaf("name", &first)];
        while self.is(".") {
            match self.peek_at(1) {
                Tok::Punct("<") => {
                    return Err(self.unsupported("explicit generic method arguments"))
                }
                Tok::Ident(s) if s == "new" => {
                    return Err(self.unsupported("qualified instance creation"))
                }
                Tok::Ident(s)
                    if !RESERVED.contains(&s.as_str())
                        || ["this", "class", "super"].contains(&s.as_str()) =>
                {
                    let s = s.clone();
                    self.bump();
                    self.bump();
                    parts.push(leaf("operator", "."));
                    parts.push(leaf("name", &s));
                }
                _ => break,
            }
        }
        if self.is("(") {
            let args = self.argument_list()?;
            out.push(node("call", vec![name_of(parts), args]));
            return Ok(());
        }
        while self.is("[") {
            self.bump();
            if self.eat("]") {
                parts.push(bare("index"));
            } else {
                let e = self.expr()?;
                self.expect("]")?;
                parts.push(node("index", vec![e]));
            }
        }
        // `String[].class`
        if self.is(".") && matches!(self.peek_at(1), Tok::Ident(s) if s == "class") {
            self.bump();
            self.bump();
            parts.push(leaf("operator", "."));
            parts.push(leaf("name", "class"));
        }
        out.push(name_of(parts));
        Ok(())
    }

    /// Member access and indexing after a call or parenthesized expression.
    fn selectors(&mut self, out: &mut Vec<AstNode>) -> Result<(), AstError> {
        loop {
            if self.is(".") {
                match self.peek_at(1) {
                    Tok::Punct("<") => {
                        return Err(self.unsupported("explicit generic method arguments"))
                    }
                    Tok::Ident(s) if s == "new" => {
                        return Err(self.unsupported("qualified instance creation"))
                    }
                    _ => {}
                }
                self.bump();
                out.push(leaf("operator", "."));
                self.name_chain(out)?;
            } else if self.is("[") {
                self.bump();
                let e = self.expr()?;
                self.expect("]")?;
                out.push(node("index", vec![e]));
            } else if self.is("::") {
                return Err(self.unsupported("a method reference"));
            } else {
                return Ok(());
            }
        }
    }

    fn argument_list(&mut self) -> Result<AstNode, AstError> {
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.eat(")") {
            loop {
                args.push(node("argument", vec![self.expr()?]));
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(")")?;
        }
        Ok(node("argument_list", args))
    }
}
