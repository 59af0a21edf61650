//! Recursive-descent parser for the Java subset the analyses need.
//!
//! Method bodies are flattened into a statement list. Control structure is
//! kept only as the chain of enclosing [`Region`]s on each statement, which is
//! enough for def-use reasoning without a CFG.

use std::collections::BTreeSet;

use super::lexer::{tokenize, TokKind, Token};
use super::model::*;
use crate::diag::Diagnostic;

#[derive(Debug)]
pub struct ParsedFile {
    pub classes: Vec<ClassDecl>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone)]
struct PErr {
    line: u32,
    message: String,
}

type PResult<T> = Result<T, PErr>;

const PRIMITIVES: &[&str] = &[
    "boolean", "byte", "char", "short", "int", "long", "float", "double", "void",
];

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "final",
    "abstract",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
    "default",
    "sealed",
];

const ASSIGN_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=",
];

#[derive(Debug, Default)]
struct Modifiers {
    annotations: Vec<String>,
    visibility: Option<Visibility>,
    is_static: bool,
    is_abstract: bool,
    /// Token index of the first non-annotation modifier, if any.
    first_keyword: Option<usize>,
}

/// Member whose body is parsed once all fields of the class are known.
struct PendingMethod {
    decl: MethodDecl,
    body: Option<(usize, usize)>,
}

pub fn parse_file(file: &str, src: &str) -> ParsedFile {
    let toks = match tokenize(src) {
        Ok(t) => t,
        Err(e) => {
            return ParsedFile {
                classes: Vec::new(),
                diagnostics: vec![Diagnostic::new(file, e.line, e.message)],
            }
        }
    };
    let mut p = Parser {
        toks,
        pos: 0,
        src,
        file,
        diags: Vec::new(),
        package: String::new(),
        imports: Vec::new(),
    };
    let classes = p.compilation_unit();
    ParsedFile {
        classes,
        diagnostics: p.diags,
    }
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    src: &'a str,
    file: &'a str,
    diags: Vec<Diagnostic>,
    package: String,
    imports: Vec<String>,
}

impl<'a> Parser<'a> {
    // ---- token helpers ----

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&Token> {
        self.toks.get(self.pos + off)
    }

    fn at(&self, s: &str) -> bool {
        self.peek().is_some_and(|t| t.is(s))
    }

    fn at_off(&self, off: usize, s: &str) -> bool {
        self.peek_at(off).is_some_and(|t| t.is(s))
    }

    fn at_ident(&self) -> bool {
        self.peek().is_some_and(|t| t.kind == TokKind::Ident)
    }

    fn line(&self) -> u32 {
        self.peek().or_else(|| self.toks.last()).map(|t| t.line).unwrap_or(1)
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(PErr {
            line: self.line(),
            message: message.into(),
        })
    }

    fn bump(&mut self) -> PResult<Token> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => self.err("unexpected end of file"),
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.at(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> PResult<()> {
        if self.eat(s) {
            Ok(())
        } else {
            let found = self.peek().map(|t| t.text.clone()).unwrap_or_else(|| "EOF".into());
            self.err(format!("expected `{}`, found `{}`", s, found))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        if self.at_ident() {
            Ok(self.bump()?.text)
        } else {
            let found = self.peek().map(|t| t.text.clone()).unwrap_or_else(|| "EOF".into());
            self.err(format!("expected identifier, found `{}`", found))
        }
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        match (self.toks.get(a), self.toks.get(b)) {
            (Some(x), Some(y)) => x.end == y.start,
            _ => false,
        }
    }

    fn text_between(&self, from: usize, to_inclusive: usize) -> String {
        let start = self.toks[from].start;
        let end = self.toks[to_inclusive].end;
        collapse_ws(&self.src[start..end])
    }

    /// Skips a balanced `open ... close` group starting at the current token.
    fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<()> {
        self.expect(open)?;
        let mut depth = 1;
        while depth > 0 {
            let t = self.bump()?;
            if t.is(open) {
                depth += 1;
            } else if t.is(close) {
                depth -= 1;
            }
        }
        Ok(())
    }

    /// Index of the token closing the group opened at `open_idx`.
    fn matching(&self, open_idx: usize) -> Option<usize> {
        let open = self.toks[open_idx].text.as_str();
        let close = match open {
            "(" => ")",
            "{" => "}",
            "[" => "]",
            _ => return None,
        };
        let mut depth = 0;
        for (i, t) in self.toks.iter().enumerate().skip(open_idx) {
            if t.is(open) {
                depth += 1;
            } else if t.is(close) {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
        }
        None
    }

    fn skip_type_args(&mut self) -> PResult<()> {
        self.expect("<")?;
        let mut depth = 1;
        while depth > 0 {
            let t = self.bump()?;
            if t.is("<") {
                depth += 1;
            } else if t.is(">") {
                depth -= 1;
            } else if t.is(";") || t.is("{") || t.is("}") || t.is("=") {
                return self.err("malformed type arguments");
            }
        }
        Ok(())
    }

    /// Collects type parameter names from `<T, U extends X>`.
    fn type_params(&mut self) -> PResult<Vec<String>> {
        let mut names = Vec::new();
        self.expect("<")?;
        let mut depth = 1;
        let mut expect_name = true;
        while depth > 0 {
            let t = self.bump()?;
            if t.is("<") {
                depth += 1;
            } else if t.is(">") {
                depth -= 1;
            } else if depth == 1 && t.is(",") {
                expect_name = true;
            } else if depth == 1 && expect_name && t.kind == TokKind::Ident {
                names.push(t.text.clone());
                expect_name = false;
            } else if t.is("@") {
                self.ident()?;
            }
        }
        Ok(names)
    }

    fn skip_annotation(&mut self) -> PResult<String> {
        self.expect("@")?;
        let mut name = self.ident()?;
        while self.at(".") && self.peek_at(1).is_some_and(|t| t.kind == TokKind::Ident) {
            self.pos += 1;
            name = self.ident()?;
        }
        if self.at("(") {
            self.skip_balanced("(", ")")?;
        }
        Ok(name)
    }

    fn modifiers(&mut self) -> PResult<Modifiers> {
        let mut m = Modifiers::default();
        loop {
            if self.at("@") && !self.at_off(1, "interface") {
                m.annotations.push(self.skip_annotation()?);
                continue;
            }
            let Some(t) = self.peek() else { break };
            if t.kind != TokKind::Ident {
                break;
            }
            let text = t.text.clone();
            if text == "non" && self.at_off(1, "-") && self.at_off(2, "sealed") {
                m.first_keyword.get_or_insert(self.pos);
                self.pos += 3;
                continue;
            }
            if !MODIFIERS.contains(&text.as_str()) {
                break;
            }
            // `default` inside a switch is a label, never reached here.
            m.first_keyword.get_or_insert(self.pos);
            self.pos += 1;
            match text.as_str() {
                "public" => m.visibility = Some(Visibility::Public),
                "protected" => m.visibility = Some(Visibility::Protected),
                "private" => m.visibility = Some(Visibility::Private),
                "static" => m.is_static = true,
                "abstract" => m.is_abstract = true,
                _ => {}
            }
        }
        Ok(m)
    }

    /// Parses a type and returns its erased spelling (`List<String>[]` -> `List[]`).
    fn parse_type(&mut self) -> PResult<String> {
        while self.at("@") {
            self.skip_annotation()?;
        }
        if !self.at_ident() {
            return self.err("expected type");
        }
        let mut name = self.ident()?;
        if self.at("<") {
            self.skip_type_args()?;
        }
        while self.at(".") && self.peek_at(1).is_some_and(|t| t.kind == TokKind::Ident) {
            // stop before `.class` / `.this` / `.new`
            let next = self.peek_at(1).unwrap().text.as_str();
            if matches!(next, "class" | "this" | "new" | "super") {
                break;
            }
            self.pos += 1;
            name.push('.');
            name.push_str(&self.ident()?);
            if self.at("<") {
                self.skip_type_args()?;
            }
        }
        while self.at("[") && self.at_off(1, "]") {
            self.pos += 2;
            name.push_str("[]");
        }
        Ok(name)
    }

    // ---- compilation unit ----

    fn compilation_unit(&mut self) -> Vec<ClassDecl> {
        let mut classes = Vec::new();
        // package annotations
        while self.at("@") && !self.at_off(1, "interface") {
            let save = self.pos;
            if self.skip_annotation().is_err() {
                self.pos = save + 1;
            }
            if !self.at("@") && !self.at("package") {
                self.pos = save;
                break;
            }
        }
        if self.eat("package") {
            match self.qualified_name() {
                Ok(n) => self.package = n,
                Err(e) => self.diag(e),
            }
            self.eat(";");
        }
        while self.at("import") {
            self.pos += 1;
            let is_static = self.eat("static");
            let mut name = String::new();
            while let Some(t) = self.peek() {
                if t.is(";") {
                    break;
                }
                name.push_str(&t.text);
                self.pos += 1;
            }
            self.eat(";");
            if !is_static {
                self.imports.push(name);
            }
        }
        while self.pos < self.toks.len() {
            if self.eat(";") {
                continue;
            }
            let start = self.pos;
            let result = self.modifiers().and_then(|mods| self.type_decl(mods, None, start));
            match result {
                Ok(mut decls) => classes.append(&mut decls),
                Err(e) => {
                    self.diag(e);
                    self.recover_top_level(start);
                }
            }
        }
        classes
    }

    fn recover_top_level(&mut self, start: usize) {
        self.pos = start.max(self.pos);
        // skip to the end of the next balanced brace group
        while let Some(t) = self.peek() {
            if t.is("{") {
                let idx = self.pos;
                match self.matching(idx) {
                    Some(end) => self.pos = end + 1,
                    None => self.pos = self.toks.len(),
                }
                return;
            }
            self.pos += 1;
        }
    }

    fn qualified_name(&mut self) -> PResult<String> {
        let mut n = self.ident()?;
        while self.at(".") && self.peek_at(1).is_some_and(|t| t.kind == TokKind::Ident) {
            self.pos += 1;
            n.push('.');
            n.push_str(&self.ident()?);
        }
        Ok(n)
    }

    fn diag(&mut self, e: PErr) {
        self.diags.push(Diagnostic::new(self.file, e.line, e.message));
    }

    fn type_decl(&mut self, mods: Modifiers, outer: Option<(&str, TypeKind)>, start: usize) -> PResult<Vec<ClassDecl>> {
        let kind = if self.eat("class") {
            TypeKind::Class
        } else if self.eat("interface") {
            TypeKind::Interface
        } else if self.eat("enum") {
            TypeKind::Enum
        } else if self.at("@") && self.at_off(1, "interface") {
            self.pos += 2;
            TypeKind::Interface
        } else if self.at("record") && self.peek_at(1).is_some_and(|t| t.kind == TokKind::Ident) {
            self.pos += 1;
            TypeKind::Record
        } else {
            return self.err("expected type declaration");
        };
        let line = self.line();
        let simple = self.ident()?;
        let name = match outer {
            Some((o, _)) => format!("{}.{}", o, simple),
            None => simple.clone(),
        };
        if self.at("<") {
            self.type_params()?;
        }
        let mut fields = Vec::new();
        if kind == TypeKind::Record {
            let params = self.formal_params()?;
            for p in params {
                fields.push(FieldDecl {
                    name: p.name,
                    ty: p.ty,
                    is_static: false,
                    line,
                });
            }
        }
        let mut supertypes = Vec::new();
        loop {
            if self.eat("extends") || self.eat("implements") {
                loop {
                    let t = self.parse_type()?;
                    if !supertypes.contains(&t) {
                        supertypes.push(t);
                    }
                    if !self.eat(",") {
                        break;
                    }
                }
            } else if self.eat("permits") {
                loop {
                    self.parse_type()?;
                    if !self.eat(",") {
                        break;
                    }
                }
            } else {
                break;
            }
        }
        let open = self.pos;
        let close = match self.at("{").then(|| self.matching(open)).flatten() {
            Some(c) => c,
            None => return self.err("expected class body"),
        };
        let source_start = mods.first_keyword.unwrap_or(start).min(self.toks.len() - 1);
        let source = self.src[self.toks[source_start].start..self.toks[close].end].to_string();
        self.pos += 1;

        let mut nested = Vec::new();
        let mut pending = Vec::new();
        if kind == TypeKind::Enum {
            fields.extend(self.enum_constants(&simple)?);
        }
        while self.pos < close {
            let member_start = self.pos;
            if let Err(e) = self.member(&name, kind, &mut fields, &mut pending, &mut nested) {
                self.diag(e);
                self.recover_member(member_start, close);
            }
        }
        self.pos = close + 1;

        let field_names: BTreeSet<String> = fields.iter().map(|f| f.name.clone()).collect();
        let fqn = if self.package.is_empty() {
            name.clone()
        } else {
            format!("{}.{}", self.package, name)
        };
        let mut methods: Vec<MethodDecl> = Vec::new();
        for pm in pending {
            let mut decl = pm.decl;
            decl.owner = fqn.clone();
            if let Some((b0, b1)) = pm.body {
                let saved = self.pos;
                let (body, locals) = self.method_body(&decl, &field_names, b0, b1);
                self.pos = saved;
                decl.body = body;
                decl.locals = locals;
            }
            if methods.iter().any(|m| m.signature() == decl.signature()) {
                self.diags.push(Diagnostic::new(
                    self.file,
                    decl.line,
                    format!("duplicate method {} ignored", decl.signature()),
                ));
                continue;
            }
            methods.push(decl);
        }
        let class = ClassDecl {
            fqn,
            package: self.package.clone(),
            name,
            kind,
            is_abstract: mods.is_abstract || kind == TypeKind::Interface,
            file: self.file.to_string(),
            line,
            imports: self.imports.clone(),
            annotations: mods.annotations,
            supertypes,
            fields,
            methods,
            source,
        };
        let mut out = vec![class];
        out.append(&mut nested);
        Ok(out)
    }

    fn recover_member(&mut self, start: usize, close: usize) {
        self.pos = start;
        while self.pos < close {
            let t = &self.toks[self.pos];
            if t.is(";") {
                self.pos += 1;
                return;
            }
            if t.is("{") {
                match self.matching(self.pos) {
                    Some(end) if end < close => {
                        self.pos = end + 1;
                        return;
                    }
                    _ => {
                        self.pos = close;
                        return;
                    }
                }
            }
            self.pos += 1;
        }
    }

    fn enum_constants(&mut self, enum_name: &str) -> PResult<Vec<FieldDecl>> {
        let mut out = Vec::new();
        loop {
            while self.at("@") {
                self.skip_annotation()?;
            }
            if self.eat(";") || self.at("}") {
                break;
            }
            let line = self.line();
            let name = self.ident()?;
            if self.at("(") {
                self.skip_balanced("(", ")")?;
            }
            if self.at("{") {
                self.skip_balanced("{", "}")?;
            }
            out.push(FieldDecl {
                name,
                ty: enum_name.rsplit('.').next().unwrap_or(enum_name).to_string(),
                is_static: true,
                line,
            });
            if self.eat(",") {
                continue;
            }
            self.eat(";");
            break;
        }
        Ok(out)
    }

    fn member(
        &mut self,
        class_name: &str,
        class_kind: TypeKind,
        fields: &mut Vec<FieldDecl>,
        pending: &mut Vec<PendingMethod>,
        nested: &mut Vec<ClassDecl>,
    ) -> PResult<()> {
        if self.eat(";") {
            return Ok(());
        }
        if self.at("{") {
            return self.skip_balanced("{", "}");
        }
        if self.at("static") && self.at_off(1, "{") {
            self.pos += 1;
            return self.skip_balanced("{", "}");
        }
        let start = self.pos;
        let mods = self.modifiers()?;
        if self.at("class")
            || self.at("interface")
            || self.at("enum")
            || (self.at("@") && self.at_off(1, "interface"))
            || (self.at("record") && self.peek_at(2).is_some_and(|t| t.is("(") || t.is("<")))
        {
            let mut decls = self.type_decl(mods, Some((class_name, class_kind)), start)?;
            nested.append(&mut decls);
            return Ok(());
        }
        let header_start = mods.first_keyword.unwrap_or(self.pos);
        let type_params = if self.at("<") { self.type_params()? } else { Vec::new() };
        let simple = class_name.rsplit('.').next().unwrap_or(class_name);
        let line = self.line();
        let default_visibility = if class_kind == TypeKind::Interface {
            Visibility::Public
        } else {
            Visibility::Package
        };
        let visibility = mods.visibility.unwrap_or(default_visibility);

        // constructor (records may declare a compact one without parentheses)
        if self.at(simple) && (self.at_off(1, "(") || (class_kind == TypeKind::Record && self.at_off(1, "{"))) {
            self.pos += 1;
            let params = if self.at("(") {
                self.formal_params()?
            } else {
                Vec::new()
            };
            let header_end = self.pos - 1;
            self.skip_throws()?;
            let body = self.body_range()?;
            pending.push(PendingMethod {
                decl: MethodDecl {
                    owner: String::new(),
                    name: CONSTRUCTOR_NAME.to_string(),
                    type_params,
                    params,
                    return_type: "void".to_string(),
                    visibility,
                    is_static: false,
                    is_abstract: false,
                    annotations: mods.annotations,
                    line,
                    header: self.text_between(header_start, header_end),
                    locals: Vec::new(),
                    body: Vec::new(),
                },
                body,
            });
            return Ok(());
        }

        let ty = self.parse_type()?;
        let name_line = self.line();
        let name = self.ident()?;
        if self.at("(") {
            let params = self.formal_params()?;
            let header_end = self.pos - 1;
            while self.at("[") && self.at_off(1, "]") {
                self.pos += 2;
            }
            self.skip_throws()?;
            if self.eat("default") {
                // annotation element default value
                while !self.at(";") {
                    self.bump()?;
                }
            }
            let body = self.body_range()?;
            let is_abstract = body.is_none();
            pending.push(PendingMethod {
                decl: MethodDecl {
                    owner: String::new(),
                    name,
                    type_params,
                    params,
                    return_type: ty,
                    visibility,
                    is_static: mods.is_static,
                    is_abstract,
                    annotations: mods.annotations,
                    line: name_line,
                    header: self.text_between(header_start, header_end),
                    locals: Vec::new(),
                    body: Vec::new(),
                },
                body,
            });
            return Ok(());
        }

        // field declarators
        let is_static = mods.is_static || class_kind == TypeKind::Interface;
        let mut fname = name;
        let mut fline = name_line;
        loop {
            let mut fty = ty.clone();
            while self.at("[") && self.at_off(1, "]") {
                self.pos += 2;
                fty.push_str("[]");
            }
            fields.push(FieldDecl {
                name: fname,
                ty: fty,
                is_static,
                line: fline,
            });
            if self.eat("=") {
                self.skip_initializer()?;
            }
            if self.eat(",") {
                fline = self.line();
                fname = self.ident()?;
                continue;
            }
            self.expect(";")?;
            break;
        }
        Ok(())
    }

    /// Skips a field initializer up to the next top-level `,` or `;`.
    fn skip_initializer(&mut self) -> PResult<()> {
        let mut depth = 0i32;
        loop {
            let Some(t) = self.peek() else {
                return self.err("unterminated field initializer");
            };
            if depth == 0 && (t.is(",") || t.is(";")) {
                // commas inside generic arguments are not separators
                return Ok(());
            }
            if t.is("(") || t.is("{") || t.is("[") {
                depth += 1;
            } else if t.is(")") || t.is("}") || t.is("]") {
                depth -= 1;
                if depth < 0 {
                    return self.err("unbalanced field initializer");
                }
            } else if t.is("<") && depth == 0 {
                // `new HashMap<K, V>()`: skip the type arguments as a unit
                let save = self.pos;
                if self.skip_type_args().is_ok() {
                    continue;
                }
                self.pos = save;
            }
            self.pos += 1;
        }
    }

    fn skip_throws(&mut self) -> PResult<()> {
        if self.eat("throws") {
            loop {
                self.parse_type()?;
                if !self.eat(",") {
                    break;
                }
            }
        }
        Ok(())
    }

    /// Returns the `{`/`}` token indices of a body, or `None` for `;`.
    fn body_range(&mut self) -> PResult<Option<(usize, usize)>> {
        if self.eat(";") {
            return Ok(None);
        }
        if !self.at("{") {
            return self.err("expected method body");
        }
        let open = self.pos;
        match self.matching(open) {
            Some(close) => {
                self.pos = close + 1;
                Ok(Some((open, close)))
            }
            None => self.err("unterminated method body"),
        }
    }

    fn formal_params(&mut self) -> PResult<Vec<Param>> {
        self.expect("(")?;
        let mut params: Vec<Param> = Vec::new();
        if self.eat(")") {
            return Ok(params);
        }
        loop {
            self.modifiers()?;
            let mut ty = self.parse_type()?;
            if self.eat("...") {
                ty.push_str("[]");
            }
            if self.at("this") {
                // receiver parameter
                self.pos += 1;
            } else {
                let name = self.ident()?;
                while self.at("[") && self.at_off(1, "]") {
                    self.pos += 2;
                    ty.push_str("[]");
                }
                if params.iter().any(|p| p.name == name) {
                    return self.err(format!("duplicate parameter `{}`", name));
                }
                params.push(Param { name, ty });
            }
            if self.eat(",") {
                continue;
            }
            self.expect(")")?;
            break;
        }
        Ok(params)
    }

    // ---- method bodies ----

    fn method_body(
        &mut self,
        decl: &MethodDecl,
        fields: &BTreeSet<String>,
        open: usize,
        close: usize,
    ) -> (Vec<Statement>, Vec<Param>) {
        let mut scope: BTreeSet<String> = fields.clone();
        scope.extend(decl.params.iter().map(|p| p.name.clone()));
        let mut ctx = BodyCtx {
            scope,
            locals: Vec::new(),
            stmts: Vec::new(),
            regions: Vec::new(),
            next_group: 0,
            end: close,
        };
        self.pos = open + 1;
        while self.pos < close {
            let before = self.pos;
            if let Err(e) = self.statement(&mut ctx) {
                self.diag(e.clone());
                self.recover_statement(&mut ctx, before, close, e.line);
            }
            if self.pos == before {
                self.pos += 1;
            }
        }
        (ctx.stmts, ctx.locals)
    }

    /// Skips to the end of the broken statement and records it as opaque.
    fn recover_statement(&mut self, ctx: &mut BodyCtx, start: usize, limit: usize, line: u32) {
        self.pos = start;
        let mut depth = 0i32;
        let mut last = start;
        while self.pos < limit {
            let t = &self.toks[self.pos];
            if t.is("(") || t.is("{") || t.is("[") {
                depth += 1;
            } else if t.is(")") || t.is("}") || t.is("]") {
                if depth == 0 {
                    break;
                }
                depth -= 1;
                if depth == 0 && t.is("}") {
                    last = self.pos;
                    self.pos += 1;
                    break;
                }
            } else if t.is(";") && depth == 0 {
                last = self.pos;
                self.pos += 1;
                break;
            }
            last = self.pos;
            self.pos += 1;
        }
        if self.pos == start {
            self.pos = start + 1;
            last = start;
        }
        let vars = self.textual_vars(start, last + 1, &ctx.scope);
        let text = self.text_between(start, last.min(self.toks.len() - 1));
        ctx.stmts.push(Statement {
            kind: StmtKind::Other,
            lhs: None,
            rhs: Expr::Opaque {
                text: text.clone(),
                vars,
            },
            line,
            text,
            scope: ctx.regions.clone(),
        });
    }

    fn textual_vars(&self, from: usize, to: usize, scope: &BTreeSet<String>) -> Vec<String> {
        let mut out = BTreeSet::new();
        for i in from..to.min(self.toks.len()) {
            let t = &self.toks[i];
            if t.kind != TokKind::Ident || !scope.contains(&t.text) {
                continue;
            }
            if i > 0 && self.toks[i - 1].is(".") {
                continue;
            }
            if self.toks.get(i + 1).is_some_and(|n| n.is("(")) {
                continue;
            }
            out.insert(t.text.clone());
        }
        out.into_iter().collect()
    }

    fn push_stmt(&self, ctx: &mut BodyCtx, kind: StmtKind, lhs: Option<String>, rhs: Expr, first: usize, last: usize) {
        ctx.stmts.push(Statement {
            kind,
            lhs,
            rhs,
            line: self.toks[first].line,
            text: self.text_between(first, last),
            scope: ctx.regions.clone(),
        });
    }

    fn with_region<T>(
        &mut self,
        ctx: &mut BodyCtx,
        region: Region,
        f: impl FnOnce(&mut Self, &mut BodyCtx) -> PResult<T>,
    ) -> PResult<T> {
        ctx.regions.push(region);
        let r = f(self, ctx);
        ctx.regions.pop();
        r
    }

    fn block(&mut self, ctx: &mut BodyCtx) -> PResult<()> {
        self.expect("{")?;
        let Some(close) = self.matching(self.pos - 1) else {
            return self.err("unterminated block");
        };
        while self.pos < close {
            let before = self.pos;
            if let Err(e) = self.statement(ctx) {
                self.diag(e.clone());
                self.recover_statement(ctx, before, close, e.line);
            }
            if self.pos == before {
                self.pos += 1;
            }
        }
        self.pos = close + 1;
        Ok(())
    }

    /// Parses a statement in its own region; a block body keeps its statements in that region.
    fn sub_statement(&mut self, ctx: &mut BodyCtx) -> PResult<()> {
        if self.at("{") {
            self.block(ctx)
        } else {
            self.statement(ctx)
        }
    }

    fn statement(&mut self, ctx: &mut BodyCtx) -> PResult<()> {
        let first = self.pos;
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of body");
        };
        if tok.is(";") {
            self.pos += 1;
            return Ok(());
        }
        if tok.is("{") {
            return self.block(ctx);
        }
        if tok.kind == TokKind::Ident && self.at_off(1, ":") && !is_keyword(&tok.text) {
            self.pos += 2;
            return self.statement(ctx);
        }
        match tok.text.as_str() {
            "if" if tok.kind == TokKind::Ident => {
                self.pos += 1;
                let cond = self.paren_expr(ctx)?;
                self.push_stmt(ctx, StmtKind::Other, None, cond, first, self.pos - 1);
                let group = ctx.new_group();
                self.with_region(
                    ctx,
                    Region {
                        kind: RegionKind::Branch,
                        group,
                        arm: 0,
                        arms: 2,
                    },
                    |p, c| p.sub_statement(c),
                )?;
                if self.eat("else") {
                    self.with_region(
                        ctx,
                        Region {
                            kind: RegionKind::Branch,
                            group,
                            arm: 1,
                            arms: 2,
                        },
                        |p, c| p.sub_statement(c),
                    )?;
                }
                Ok(())
            }
            "while" if tok.kind == TokKind::Ident => {
                self.pos += 1;
                let cond = self.paren_expr(ctx)?;
                self.push_stmt(ctx, StmtKind::Other, None, cond, first, self.pos - 1);
                let group = ctx.new_group();
                self.with_region(
                    ctx,
                    Region {
                        kind: RegionKind::Loop,
                        group,
                        arm: 0,
                        arms: 1,
                    },
                    |p, c| p.sub_statement(c),
                )
            }
            "do" if tok.kind == TokKind::Ident => {
                self.pos += 1;
                // body runs at least once: no region
                self.sub_statement(ctx)?;
                self.expect("while")?;
                let cstart = self.pos - 1;
                let cond = self.paren_expr(ctx)?;
                self.push_stmt(ctx, StmtKind::Other, None, cond, cstart, self.pos - 1);
                self.expect(";")
            }
            "for" if tok.kind == TokKind::Ident => self.for_statement(ctx),
            "try" if tok.kind == TokKind::Ident => self.try_statement(ctx),
            "switch" if tok.kind == TokKind::Ident => self.switch_statement(ctx),
            "synchronized" if tok.kind == TokKind::Ident && self.at_off(1, "(") => {
                self.pos += 1;
                let e = self.paren_expr(ctx)?;
                self.push_stmt(ctx, StmtKind::Other, None, e, first, self.pos - 1);
                self.block(ctx)
            }
            "return" if tok.kind == TokKind::Ident => {
                self.pos += 1;
                if self.eat(";") {
                    return Ok(());
                }
                let e = self.expr(ctx)?;
                self.expect(";")?;
                self.push_stmt(ctx, StmtKind::Return, None, e, first, self.pos - 1);
                Ok(())
            }
            "throw" | "assert" if tok.kind == TokKind::Ident => {
                self.pos += 1;
                let mut e = self.expr(ctx)?;
                if self.eat(":") {
                    let msg = self.expr(ctx)?;
                    e = Expr::BinaryOp {
                        op: "assert".into(),
                        operands: vec![e, msg],
                    };
                }
                self.expect(";")?;
                self.push_stmt(ctx, StmtKind::Other, None, e, first, self.pos - 1);
                Ok(())
            }
            "yield"
                if tok.kind == TokKind::Ident
                    && !self
                        .peek_at(1)
                        .is_some_and(|t| t.is("=") || t.is("(") || t.is(".") || t.is("[")) =>
            {
                self.pos += 1;
                let e = self.expr(ctx)?;
                self.expect(";")?;
                self.push_stmt(ctx, StmtKind::Other, None, e, first, self.pos - 1);
                Ok(())
            }
            "break" | "continue" if tok.kind == TokKind::Ident => {
                self.pos += 1;
                if self.at_ident() {
                    self.pos += 1;
                }
                self.expect(";")
            }
            "class" | "interface" | "enum" if tok.kind == TokKind::Ident => self.skip_local_type(),
            "record"
                if tok.kind == TokKind::Ident
                    && self.peek_at(1).is_some_and(|t| t.kind == TokKind::Ident)
                    && self.peek_at(2).is_some_and(|t| t.is("(") || t.is("<")) =>
            {
                self.skip_local_type()
            }
            _ => {
                if tok.is("final") || tok.is("@") || tok.is("abstract") || tok.is("static") {
                    let save = self.pos;
                    self.modifiers()?;
                    if self.at("class") || self.at("interface") || self.at("enum") || self.at("record") {
                        return self.skip_local_type();
                    }
                    let decl_first = save;
                    return self.local_var_decl(ctx, decl_first, true);
                }
                if self.looks_like_local_decl() {
                    return self.local_var_decl(ctx, first, true);
                }
                self.expression_statement(ctx, first)
            }
        }
    }

    fn skip_local_type(&mut self) -> PResult<()> {
        while !self.at("{") {
            self.bump()?;
        }
        self.skip_balanced("{", "}")
    }

    fn looks_like_local_decl(&mut self) -> bool {
        let save = self.pos;
        let ok = self.parse_type().is_ok()
            && self.at_ident()
            && !self.peek().is_some_and(|t| is_keyword(&t.text) && t.text != "var")
            && self
                .peek_at(1)
                .is_some_and(|t| t.is("=") || t.is(";") || t.is(",") || t.is("[") || t.is(":"));
        self.pos = save;
        ok
    }

    /// Parses `Type a = e, b;` and records one declaration per initialized variable.
    fn local_var_decl(&mut self, ctx: &mut BodyCtx, first: usize, need_semi: bool) -> PResult<()> {
        let ty = self.parse_type()?;
        let pushed_from = ctx.stmts.len();
        let mut declarators = 0;
        loop {
            declarators += 1;
            let dfirst = self.pos;
            let name = self.ident()?;
            let mut vty = ty.clone();
            while self.at("[") && self.at_off(1, "]") {
                self.pos += 2;
                vty.push_str("[]");
            }
            ctx.declare(&name, &vty);
            if self.eat("=") {
                let init = if self.at("{") {
                    self.array_initializer(ctx, &vty)?
                } else {
                    self.expr(ctx)?
                };
                let from = if declarators == 1 { first } else { dfirst };
                self.push_stmt(ctx, StmtKind::Declaration, Some(name), init, from, self.pos - 1);
            }
            if self.eat(",") {
                continue;
            }
            break;
        }
        if need_semi {
            self.expect(";")?;
            if declarators == 1 && ctx.stmts.len() > pushed_from {
                let text = self.text_between(first, self.pos - 1);
                ctx.stmts.last_mut().unwrap().text = text;
            }
        }
        Ok(())
    }

    fn array_initializer(&mut self, ctx: &mut BodyCtx, ty: &str) -> PResult<Expr> {
        let line = self.line();
        self.expect("{")?;
        let mut args = Vec::new();
        while !self.at("}") {
            if self.at("{") {
                args.push(self.array_initializer(ctx, ty.trim_end_matches("[]"))?);
            } else {
                args.push(self.expr(ctx)?);
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        Ok(Expr::New {
            ty: ty.to_string(),
            args,
            line,
        })
    }

    fn expression_statement(&mut self, ctx: &mut BodyCtx, first: usize) -> PResult<()> {
        let e = self.expr(ctx)?;
        self.expect(";")?;
        let last = self.pos - 1;
        self.record_expr_stmt(ctx, e, first, last);
        Ok(())
    }

    fn record_expr_stmt(&self, ctx: &mut BodyCtx, e: Expr, first: usize, last: usize) {
        match e {
            Expr::BinaryOp { op, mut operands } if ASSIGN_OPS.contains(&op.as_str()) => {
                let value = operands.pop().unwrap();
                let target = operands.pop().unwrap();
                match assign_target(&target) {
                    Some(lhs) => {
                        let rhs = if op == "=" {
                            value
                        } else {
                            Expr::BinaryOp {
                                op: op.trim_end_matches('=').to_string(),
                                operands: vec![Expr::var(lhs.clone()), value],
                            }
                        };
                        self.push_stmt(ctx, StmtKind::Assignment, Some(lhs), rhs, first, last);
                    }
                    None => {
                        let rhs = Expr::BinaryOp {
                            op,
                            operands: vec![target, value],
                        };
                        self.push_stmt(ctx, StmtKind::Other, None, rhs, first, last);
                    }
                }
            }
            Expr::BinaryOp { op, operands }
                if (op == "++" || op == "--" || op == "x++" || op == "x--")
                    && operands.len() == 1
                    && assign_target(&operands[0]).is_some() =>
            {
                let lhs = assign_target(&operands[0]).unwrap();
                let rhs = Expr::BinaryOp { op, operands };
                self.push_stmt(ctx, StmtKind::Assignment, Some(lhs), rhs, first, last);
            }
            e @ (Expr::Call(_) | Expr::New { .. }) => self.push_stmt(ctx, StmtKind::Invocation, None, e, first, last),
            e => self.push_stmt(ctx, StmtKind::Other, None, e, first, last),
        }
    }

    fn for_statement(&mut self, ctx: &mut BodyCtx) -> PResult<()> {
        let first = self.pos;
        self.pos += 1;
        self.expect("(")?;
        let Some(close) = self.matching(self.pos - 1) else {
            return self.err("unterminated for header");
        };
        // for-each?
        let save = self.pos;
        let mut foreach = None;
        if self.modifiers().is_ok() {
            let decl_start = self.pos;
            if let Ok(ty) = self.parse_type() {
                if self.at_ident() && self.at_off(1, ":") {
                    let name = self.ident()?;
                    self.pos += 1;
                    let e = self.expr(ctx)?;
                    foreach = Some((ty, name, e, decl_start));
                }
            }
        }
        let group = ctx.new_group();
        let loop_region = Region {
            kind: RegionKind::Loop,
            group,
            arm: 0,
            arms: 1,
        };
        if let Some((ty, name, e, _)) = foreach {
            self.expect(")")?;
            ctx.declare(&name, &ty);
            let header_last = self.pos - 1;
            return self.with_region(ctx, loop_region, |p, c| {
                p.push_stmt(c, StmtKind::Declaration, Some(name), e, first, header_last);
                p.sub_statement(c)
            });
        }
        self.pos = save;
        // init
        if !self.at(";") {
            if self.looks_like_local_decl() || self.at("final") {
                self.modifiers()?;
                let s = self.pos;
                self.local_var_decl(ctx, s, false)?;
            } else {
                loop {
                    let s = self.pos;
                    let e = self.expr(ctx)?;
                    self.record_expr_stmt(ctx, e, s, self.pos - 1);
                    if !self.eat(",") {
                        break;
                    }
                }
            }
        }
        self.expect(";")?;
        if !self.at(";") {
            let s = self.pos;
            let cond = self.expr(ctx)?;
            self.push_stmt(ctx, StmtKind::Other, None, cond, s, self.pos - 1);
        }
        self.expect(";")?;
        let mut updates = Vec::new();
        while self.pos < close {
            let s = self.pos;
            let e = self.expr(ctx)?;
            updates.push((e, s, self.pos - 1));
            if !self.eat(",") {
                break;
            }
        }
        self.expect(")")?;
        self.with_region(ctx, loop_region, |p, c| {
            p.sub_statement(c)?;
            for (e, s, l) in updates {
                p.record_expr_stmt(c, e, s, l);
            }
            Ok(())
        })
    }

    fn try_statement(&mut self, ctx: &mut BodyCtx) -> PResult<()> {
        self.pos += 1;
        if self.eat("(") {
            loop {
                if self.eat(")") {
                    break;
                }
                let s = self.pos;
                self.modifiers()?;
                if self.looks_like_local_decl() {
                    self.local_var_decl(ctx, s, false)?;
                } else {
                    let e = self.expr(ctx)?;
                    self.push_stmt(ctx, StmtKind::Other, None, e, s, self.pos - 1);
                }
                if !self.eat(";") {
                    self.expect(")")?;
                    break;
                }
            }
        }
        let group = ctx.new_group();
        let start = ctx.stmts.len();
        self.with_region(
            ctx,
            Region {
                kind: RegionKind::TryBody,
                group,
                arm: 0,
                arms: 0,
            },
            |p, c| p.block(c),
        )?;
        let mut arm = 0;
        while self.at("catch") {
            let first = self.pos;
            self.pos += 1;
            self.expect("(")?;
            self.modifiers()?;
            let mut types = vec![self.parse_type()?];
            while self.eat("|") {
                types.push(self.parse_type()?);
            }
            let name = self.ident()?;
            self.expect(")")?;
            let header_last = self.pos - 1;
            ctx.declare(&name, &types[0]);
            let line = self.toks[first].line;
            let region = Region {
                kind: RegionKind::Catch,
                group,
                arm,
                arms: 0,
            };
            arm += 1;
            self.with_region(ctx, region, |p, c| {
                let rhs = Expr::New {
                    ty: types[0].clone(),
                    args: Vec::new(),
                    line,
                };
                p.push_stmt(c, StmtKind::Declaration, Some(name), rhs, first, header_last);
                p.block(c)
            })?;
        }
        ctx.set_arms(start, group, arm);
        if self.eat("finally") {
            self.block(ctx)?;
        }
        Ok(())
    }

    fn switch_statement(&mut self, ctx: &mut BodyCtx) -> PResult<()> {
        let first = self.pos;
        self.pos += 1;
        let sel = self.paren_expr(ctx)?;
        self.push_stmt(ctx, StmtKind::Other, None, sel, first, self.pos - 1);
        self.expect("{")?;
        let Some(close) = self.matching(self.pos - 1) else {
            return self.err("unterminated switch");
        };
        let group = ctx.new_group();
        let start = ctx.stmts.len();
        let mut arm = 0u32;
        let mut has_default = false;
        while self.pos < close {
            if self.at("case") || self.at("default") {
                has_default |= self.at("default") && (self.at_off(1, ":") || self.at_off(1, "->"));
                // labels up to `:` or `->`
                let mut depth = 0;
                loop {
                    let t = self.bump()?;
                    if t.is("(") {
                        depth += 1;
                    } else if t.is(")") {
                        depth -= 1;
                    } else if depth == 0 && (t.is(":") || t.is("->")) {
                        let arrow = t.is("->");
                        let region = Region {
                            kind: RegionKind::Branch,
                            group,
                            arm,
                            arms: 0,
                        };
                        arm += 1;
                        if arrow {
                            self.with_region(ctx, region, |p, c| if p.at("{") { p.block(c) } else { p.statement(c) })?;
                        } else {
                            self.with_region(ctx, region, |p, c| {
                                while p.pos < close && !p.at("case") && !p.at("default") {
                                    let before = p.pos;
                                    if let Err(e) = p.statement(c) {
                                        p.diag(e.clone());
                                        p.recover_statement(c, before, close, e.line);
                                    }
                                    if p.pos == before {
                                        p.pos += 1;
                                    }
                                }
                                Ok(())
                            })?;
                        }
                        break;
                    }
                }
            } else {
                let before = self.pos;
                if let Err(e) = self.statement(ctx) {
                    self.diag(e.clone());
                    self.recover_statement(ctx, before, close, e.line);
                }
                if self.pos == before {
                    self.pos += 1;
                }
            }
        }
        // a missing `default` leaves an implicit empty arm
        ctx.set_arms(start, group, arm + u32::from(!has_default));
        self.pos = close + 1;
        Ok(())
    }

    fn paren_expr(&mut self, ctx: &mut BodyCtx) -> PResult<Expr> {
        self.expect("(")?;
        let e = self.expr(ctx)?;
        self.expect(")")?;
        Ok(e)
    }

    // ---- expressions ----

    fn expr(&mut self, ctx: &mut BodyCtx) -> PResult<Expr> {
        let lhs = self.ternary(ctx)?;
        if let Some((op, n)) = self.assign_op() {
            self.pos += n;
            let rhs = self.expr(ctx)?;
            return Ok(Expr::BinaryOp {
                op,
                operands: vec![lhs, rhs],
            });
        }
        Ok(lhs)
    }

    fn assign_op(&self) -> Option<(String, usize)> {
        let t = self.peek()?;
        if t.kind != TokKind::Punct {
            return None;
        }
        if t.is(">") {
            if self.at_off(1, ">=") && self.adjacent(self.pos, self.pos + 1) {
                return Some((">>=".into(), 2));
            }
            if self.at_off(1, ">") && self.at_off(2, ">=") && self.adjacent(self.pos, self.pos + 1) {
                return Some((">>>=".into(), 3));
            }
            return None;
        }
        if ASSIGN_OPS.contains(&t.text.as_str()) {
            return Some((t.text.clone(), 1));
        }
        None
    }

    fn ternary(&mut self, ctx: &mut BodyCtx) -> PResult<Expr> {
        let cond = self.binary(ctx, 1)?;
        if self.eat("?") {
            let a = self.ternary_branch(ctx)?;
            self.expect(":")?;
            let b = self.ternary_branch(ctx)?;
            return Ok(Expr::BinaryOp {
                op: "?:".into(),
                operands: vec![cond, a, b],
            });
        }
        Ok(cond)
    }

    fn ternary_branch(&mut self, ctx: &mut BodyCtx) -> PResult<Expr> {
        if self.is_lambda_start() {
            return self.lambda(ctx);
        }
        self.ternary(ctx)
    }

    fn binary_op(&self) -> Option<(String, usize, u8)> {
        let t = self.peek()?;
        if t.kind == TokKind::Ident {
            return (t.text == "instanceof").then(|| ("instanceof".to_string(), 1, 7));
        }
        if t.kind != TokKind::Punct {
            return None;
        }
        if t.is(">") {
            let two = self.at_off(1, ">") && self.adjacent(self.pos, self.pos + 1);
            if two {
                let three = self.at_off(2, ">") && self.adjacent(self.pos + 1, self.pos + 2);
                if three {
                    if self.at_off(3, ">=") || self.at_off(3, "=") {
                        return None;
                    }
                    return Some((">>>".into(), 3, 8));
                }
                if self.at_off(2, ">=") || (self.at_off(2, "=") && self.adjacent(self.pos + 1, self.pos + 2)) {
                    return None;
                }
                return Some((">>".into(), 2, 8));
            }
            if self.at_off(1, ">=") && self.adjacent(self.pos, self.pos + 1) {
                return None;
            }
            return Some((">".into(), 1, 7));
        }
        let prec = match t.text.as_str() {
            "||" => 1,
            "&&" => 2,
            "|" => 3,
            "^" => 4,
            "&" => 5,
            "==" | "!=" => 6,
            "<" | "<=" | ">=" => 7,
            "<<" => 8,
            "+" | "-" => 9,
            "*" | "/" | "%" => 10,
            _ => return None,
        };
        Some((t.text.clone(), 1, prec))
    }

    fn binary(&mut self, ctx: &mut BodyCtx, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary(ctx)?;
        while let Some((op, n, prec)) = self.binary_op() {
            if prec < min_prec {
                break;
            }
            self.pos += n;
            if op == "instanceof" {
                self.eat("final");
                let ty = self.parse_type()?;
                if self.at_ident() && !self.peek().is_some_and(|t| is_keyword(&t.text)) {
                    let binding = self.ident()?;
                    ctx.declare(&binding, &ty);
                }
                lhs = Expr::BinaryOp {
                    op,
                    operands: vec![lhs],
                };
                continue;
            }
            let rhs = self.binary(ctx, prec + 1)?;
            lhs = match lhs {
                // flatten chains of the same operator (string concatenation)
                Expr::BinaryOp { op: lop, mut operands } if lop == op && operands.len() >= 2 => {
                    operands.push(rhs);
                    Expr::BinaryOp { op, operands }
                }
                other => Expr::BinaryOp {
                    op,
                    operands: vec![other, rhs],
                },
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self, ctx: &mut BodyCtx) -> PResult<Expr> {
        if let Some(t) = self.peek() {
            if t.kind == TokKind::Punct && matches!(t.text.as_str(), "!" | "~" | "-" | "+" | "++" | "--") {
                let op = t.text.clone();
                self.pos += 1;
                let e = self.unary(ctx)?;
                return Ok(Expr::BinaryOp { op, operands: vec![e] });
            }
        }
        if self.at("(") {
            if let Some(cast_ty) = self.try_cast_type() {
                let operand = self.unary(ctx)?;
                return Ok(Expr::Cast {
                    ty: cast_ty,
                    operand: Box::new(operand),
                });
            }
        }
        self.postfix(ctx)
    }

    /// Recognizes `(Type)` followed by a cast operand; consumes it on success.
    fn try_cast_type(&mut self) -> Option<String> {
        let save = self.pos;
        self.pos += 1;
        let ty = match self.parse_type() {
            Ok(t) => t,
            Err(_) => {
                self.pos = save;
                return None;
            }
        };
        while self.eat("&") {
            if self.parse_type().is_err() {
                self.pos = save;
                return None;
            }
        }
        if !self.eat(")") {
            self.pos = save;
            return None;
        }
        let base = ty.trim_end_matches("[]");
        let primitive = PRIMITIVES.contains(&base) && base != "void";
        let next_ok = match self.peek() {
            None => false,
            Some(t) => match t.kind {
                TokKind::Ident => !matches!(t.text.as_str(), "instanceof"),
                TokKind::Str | TokKind::TextBlock | TokKind::Char | TokKind::Number => true,
                TokKind::Punct => {
                    t.is("(")
                        || t.is("!")
                        || t.is("~")
                        || (primitive && (t.is("-") || t.is("+") || t.is("++") || t.is("--")))
                }
            },
        };
        let looks_like_type = primitive
            || ty.contains('.')
            || ty.ends_with("[]")
            || base.chars().next().is_some_and(|c| c.is_ascii_uppercase());
        if next_ok && looks_like_type {
            Some(ty)
        } else {
            self.pos = save;
            None
        }
    }

    fn is_lambda_start(&self) -> bool {
        if self.at_ident() && self.at_off(1, "->") {
            return true;
        }
        if self.at("(") {
            if let Some(close) = self.matching(self.pos) {
                return self.toks.get(close + 1).is_some_and(|t| t.is("->"));
            }
        }
        false
    }

    /// Lambdas are kept opaque; operands are recovered textually from their tokens.
    fn lambda(&mut self, ctx: &mut BodyCtx) -> PResult<Expr> {
        let start = self.pos;
        if self.at("(") {
            self.skip_balanced("(", ")")?;
        } else {
            self.pos += 1;
        }
        self.expect("->")?;
        if self.at("{") {
            self.skip_balanced("{", "}")?;
        } else {
            let saved_len = ctx.stmts.len();
            let _ = self.expr(ctx)?;
            ctx.stmts.truncate(saved_len);
        }
        let end = self.pos;
        Ok(Expr::Opaque {
            text: self.text_between(start, end - 1),
            vars: self.textual_vars(start, end, &ctx.scope),
        })
    }

    fn args(&mut self, ctx: &mut BodyCtx) -> PResult<Vec<Expr>> {
        self.expect("(")?;
        let mut out = Vec::new();
        if self.eat(")") {
            return Ok(out);
        }
        loop {
            if self.is_lambda_start() {
                out.push(self.lambda(ctx)?);
            } else {
                out.push(self.expr(ctx)?);
            }
            if self.eat(",") {
                continue;
            }
            self.expect(")")?;
            break;
        }
        Ok(out)
    }

    fn literal(&mut self) -> PResult<Option<Expr>> {
        let Some(t) = self.peek().cloned() else {
            return Ok(None);
        };
        let lit = match t.kind {
            TokKind::Str | TokKind::TextBlock => LiteralKind::String,
            TokKind::Char => LiteralKind::Char,
            TokKind::Number => {
                let lower = t.text.to_ascii_lowercase();
                let hex = lower.starts_with("0x");
                if lower.ends_with('l') {
                    LiteralKind::Long
                } else if !hex && lower.ends_with('f') {
                    LiteralKind::Float
                } else if !hex && (lower.contains('.') || lower.contains('e') || lower.ends_with('d')) {
                    LiteralKind::Double
                } else {
                    LiteralKind::Int
                }
            }
            TokKind::Ident => match t.text.as_str() {
                "true" | "false" => LiteralKind::Bool,
                "null" => LiteralKind::Null,
                _ => return Ok(None),
            },
            TokKind::Punct => return Ok(None),
        };
        self.pos += 1;
        Ok(Some(Expr::Literal { lit, text: t.text }))
    }

    fn postfix(&mut self, ctx: &mut BodyCtx) -> PResult<Expr> {
        let mut base = self.primary(ctx)?;
        loop {
            if self.at(".") {
                self.pos += 1;
                if self.at("<") {
                    self.skip_type_args()?;
                }
                if self.eat("class") {
                    let ty = match &base {
                        Base::Name(segs) => segs.join("."),
                        Base::Expr(e) => e.render(),
                        _ => return self.err("unexpected `.class`"),
                    };
                    base = Base::Expr(Expr::Literal {
                        lit: LiteralKind::Class,
                        text: format!("{}.class", ty),
                    });
                    continue;
                }
                if self.eat("this") {
                    base = Base::This;
                    continue;
                }
                if self.at("new") {
                    // qualified inner class creation
                    let e = self.creator(ctx)?;
                    base = Base::Expr(e);
                    continue;
                }
                let line = self.line();
                let name = self.ident()?;
                if self.at("(") {
                    let args = self.args(ctx)?;
                    let receiver = self.finish_receiver(base, ctx);
                    base = Base::Expr(Expr::Call(Call {
                        receiver,
                        name,
                        args,
                        line,
                    }));
                    continue;
                }
                base = match base {
                    Base::Name(mut segs) => {
                        segs.push(name);
                        Base::Name(segs)
                    }
                    other => {
                        let receiver = self.finish_receiver(other, ctx);
                        Base::Expr(Expr::FieldAccess { receiver, field: name })
                    }
                };
                continue;
            }
            if self.at("[") {
                if self.at_off(1, "]") {
                    // `Type[].class`
                    let mut ty = match &base {
                        Base::Name(segs) => segs.join("."),
                        _ => return self.err("unexpected `[]`"),
                    };
                    while self.at("[") && self.at_off(1, "]") {
                        self.pos += 2;
                        ty.push_str("[]");
                    }
                    self.expect(".")?;
                    self.expect("class")?;
                    base = Base::Expr(Expr::Literal {
                        lit: LiteralKind::Class,
                        text: format!("{}.class", ty),
                    });
                    continue;
                }
                self.pos += 1;
                let idx = self.expr(ctx)?;
                self.expect("]")?;
                let arr = self.finish_expr(base, ctx);
                base = Base::Expr(Expr::BinaryOp {
                    op: "[]".into(),
                    operands: vec![arr, idx],
                });
                continue;
            }
            if self.at("++") || self.at("--") {
                let op = format!("x{}", self.bump()?.text);
                let e = self.finish_expr(base, ctx);
                base = Base::Expr(Expr::BinaryOp { op, operands: vec![e] });
                continue;
            }
            if self.at("::") {
                let start = self.pos;
                self.pos += 1;
                if !self.eat("new") {
                    self.ident()?;
                }
                let e = self.finish_expr(base, ctx);
                let mut vars: Vec<String> = e.operand_vars().into_iter().collect();
                vars.retain(|v| ctx.scope.contains(v));
                base = Base::Expr(Expr::Opaque {
                    text: format!("{}{}", e.render(), self.text_between(start, self.pos - 1)),
                    vars,
                });
                continue;
            }
            break;
        }
        Ok(self.finish_expr(base, ctx))
    }

    fn primary(&mut self, ctx: &mut BodyCtx) -> PResult<Base> {
        if let Some(lit) = self.literal()? {
            return Ok(Base::Expr(lit));
        }
        if self.is_lambda_start() {
            return Ok(Base::Expr(self.lambda(ctx)?));
        }
        let Some(t) = self.peek().cloned() else {
            return self.err("expected expression");
        };
        if t.is("(") {
            self.pos += 1;
            let e = self.expr(ctx)?;
            self.expect(")")?;
            return Ok(Base::Expr(e));
        }
        if t.is("{") {
            return Ok(Base::Expr(self.array_initializer(ctx, "Object[]")?));
        }
        if t.kind != TokKind::Ident {
            return self.err(format!("unexpected `{}` in expression", t.text));
        }
        match t.text.as_str() {
            "this" => {
                self.pos += 1;
                if self.at("(") {
                    let args = self.args(ctx)?;
                    return Ok(Base::Expr(Expr::Call(Call {
                        receiver: Receiver::This,
                        name: CONSTRUCTOR_NAME.into(),
                        args,
                        line: t.line,
                    })));
                }
                Ok(Base::This)
            }
            "super" => {
                self.pos += 1;
                if self.at("(") {
                    let args = self.args(ctx)?;
                    return Ok(Base::Expr(Expr::Call(Call {
                        receiver: Receiver::Super,
                        name: CONSTRUCTOR_NAME.into(),
                        args,
                        line: t.line,
                    })));
                }
                Ok(Base::Super)
            }
            "new" => Ok(Base::Expr(self.creator(ctx)?)),
            "switch" => {
                let start = self.pos;
                self.pos += 1;
                self.skip_balanced("(", ")")?;
                self.skip_balanced("{", "}")?;
                Ok(Base::Expr(Expr::Opaque {
                    text: self.text_between(start, self.pos - 1),
                    vars: self.textual_vars(start, self.pos, &ctx.scope),
                }))
            }
            p if PRIMITIVES.contains(&p) => {
                let mut ty = p.to_string();
                self.pos += 1;
                while self.at("[") && self.at_off(1, "]") {
                    self.pos += 2;
                    ty.push_str("[]");
                }
                self.expect(".")?;
                self.expect("class")?;
                Ok(Base::Expr(Expr::Literal {
                    lit: LiteralKind::Class,
                    text: format!("{}.class", ty),
                }))
            }
            _ => {
                self.pos += 1;
                if self.at("(") {
                    let args = self.args(ctx)?;
                    return Ok(Base::Expr(Expr::Call(Call {
                        receiver: Receiver::Implicit,
                        name: t.text,
                        args,
                        line: t.line,
                    })));
                }
                Ok(Base::Name(vec![t.text]))
            }
        }
    }

    fn creator(&mut self, ctx: &mut BodyCtx) -> PResult<Expr> {
        let line = self.line();
        self.expect("new")?;
        while self.at("@") {
            self.skip_annotation()?;
        }
        let mut ty = self.ident()?;
        if self.at("<") {
            self.skip_type_args()?;
        }
        while self.at(".") {
            self.pos += 1;
            ty.push('.');
            ty.push_str(&self.ident()?);
            if self.at("<") {
                self.skip_type_args()?;
            }
        }
        if self.at("[") {
            let mut args = Vec::new();
            while self.eat("[") {
                ty.push_str("[]");
                if !self.eat("]") {
                    args.push(self.expr(ctx)?);
                    self.expect("]")?;
                }
            }
            if self.at("{") {
                let init = self.array_initializer(ctx, &ty)?;
                return Ok(init);
            }
            return Ok(Expr::New { ty, args, line });
        }
        let args = self.args(ctx)?;
        if self.at("{") {
            // anonymous class body
            self.skip_balanced("{", "}")?;
        }
        Ok(Expr::New { ty, args, line })
    }

    fn finish_receiver(&self, base: Base, ctx: &BodyCtx) -> Receiver {
        match base {
            Base::This => Receiver::This,
            Base::Super => Receiver::Super,
            Base::Expr(e) => Receiver::Expr { expr: Box::new(e) },
            Base::Name(segs) => {
                if ctx.scope.contains(&segs[0]) {
                    return Receiver::Expr {
                        expr: Box::new(field_chain(Expr::var(segs[0].clone()), &segs[1..])),
                    };
                }
                match segs.iter().position(|s| starts_upper(s)) {
                    Some(i) => {
                        let ty = segs[..=i].join(".");
                        if i + 1 == segs.len() {
                            Receiver::Type { name: ty }
                        } else {
                            let head = Expr::FieldAccess {
                                receiver: Receiver::Type { name: ty },
                                field: segs[i + 1].clone(),
                            };
                            Receiver::Expr {
                                expr: Box::new(field_chain(head, &segs[i + 2..])),
                            }
                        }
                    }
                    None => Receiver::Expr {
                        expr: Box::new(field_chain(Expr::var(segs[0].clone()), &segs[1..])),
                    },
                }
            }
        }
    }

    fn finish_expr(&self, base: Base, ctx: &BodyCtx) -> Expr {
        match base {
            Base::Expr(e) => e,
            Base::This => Expr::Literal {
                lit: LiteralKind::This,
                text: "this".into(),
            },
            Base::Super => Expr::Literal {
                lit: LiteralKind::This,
                text: "super".into(),
            },
            Base::Name(segs) => {
                if segs.len() == 1 || ctx.scope.contains(&segs[0]) {
                    return field_chain(Expr::var(segs[0].clone()), &segs[1..]);
                }
                match segs.iter().position(|s| starts_upper(s)) {
                    Some(i) if i + 1 < segs.len() => {
                        let head = Expr::FieldAccess {
                            receiver: Receiver::Type {
                                name: segs[..=i].join("."),
                            },
                            field: segs[i + 1].clone(),
                        };
                        field_chain(head, &segs[i + 2..])
                    }
                    _ => field_chain(Expr::var(segs[0].clone()), &segs[1..]),
                }
            }
        }
    }
}

enum Base {
    Expr(Expr),
    This,
    Super,
    /// Dotted identifiers not yet known to be a variable, type, or package.
    Name(Vec<String>),
}

struct BodyCtx {
    scope: BTreeSet<String>,
    locals: Vec<Param>,
    stmts: Vec<Statement>,
    regions: Vec<Region>,
    next_group: u32,
    #[allow(dead_code)]
    end: usize,
}

impl BodyCtx {
    fn new_group(&mut self) -> u32 {
        let g = self.next_group;
        self.next_group += 1;
        g
    }

    fn set_arms(&mut self, from: usize, group: u32, arms: u32) {
        for st in &mut self.stmts[from..] {
            for r in &mut st.scope {
                if r.group == group {
                    r.arms = arms;
                }
            }
        }
    }

    fn declare(&mut self, name: &str, ty: &str) {
        self.scope.insert(name.to_string());
        if !self.locals.iter().any(|l| l.name == name) {
            self.locals.push(Param {
                name: name.to_string(),
                ty: ty.to_string(),
            });
        }
    }
}

fn field_chain(mut e: Expr, rest: &[String]) -> Expr {
    for f in rest {
        e = Expr::FieldAccess {
            receiver: Receiver::Expr { expr: Box::new(e) },
            field: f.clone(),
        };
    }
    e
}

fn assign_target(e: &Expr) -> Option<String> {
    match e {
        Expr::VarRef { name } => Some(name.clone()),
        Expr::FieldAccess {
            receiver: Receiver::This,
            field,
        } => Some(field.clone()),
        _ => None,
    }
}

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "abstract"
            | "assert"
            | "boolean"
            | "break"
            | "byte"
            | "case"
            | "catch"
            | "char"
            | "class"
            | "const"
            | "continue"
            | "default"
            | "do"
            | "double"
            | "else"
            | "enum"
            | "extends"
            | "final"
            | "finally"
            | "float"
            | "for"
            | "goto"
            | "if"
            | "implements"
            | "import"
            | "instanceof"
            | "int"
            | "interface"
            | "long"
            | "native"
            | "new"
            | "package"
            | "private"
            | "protected"
            | "public"
            | "return"
            | "short"
            | "static"
            | "strictfp"
            | "super"
            | "switch"
            | "synchronized"
            | "this"
            | "throw"
            | "throws"
            | "transient"
            | "try"
            | "void"
            | "volatile"
            | "while"
            | "true"
            | "false"
            | "null"
            | "var"
    )
}

pub(crate) fn collapse_ws(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_ws = false;
    for c in s.chars() {
        if c.is_whitespace() {
            in_ws = true;
        } else {
            if in_ws && !out.is_empty() {
                out.push(' ');
            }
            in_ws = false;
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> ParsedFile {
        parse_file("T.java", src)
    }

    fn body(src: &str) -> Vec<Statement> {
        let f = parse(&format!(
            "class T {{ String f; void m(String p, int n) {{\n{}\n}} }}",
            src
        ));
        assert!(f.diagnostics.is_empty(), "{:?}", f.diagnostics);
        f.classes[0].methods[0].body.clone()
    }

    #[test]
    fn class_members_and_header() {
        let f = parse(
            "package a.b;\nimport java.util.List;\n@Deprecated\npublic class X extends Y implements Z<String> {\n  private static final int K = 1, J;\n  @Override public static <T> T conv(String xml, Class<T> clazz) throws Exception { return null; }\n  X(int a) { this(a, 2); }\n  abstract void n(String... xs);\n}\n",
        );
        assert!(f.diagnostics.is_empty(), "{:?}", f.diagnostics);
        let c = &f.classes[0];
        assert_eq!(c.fqn, "a.b.X");
        assert_eq!(c.annotations, ["Deprecated"]);
        assert_eq!(c.supertypes, ["Y", "Z"]);
        assert_eq!(c.fields.len(), 2);
        let m = &c.methods[0];
        assert_eq!(m.signature(), "a.b.X#conv(String,Class)");
        assert_eq!(m.header, "public static <T> T conv(String xml, Class<T> clazz)");
        assert_eq!(m.annotations, ["Override"]);
        assert_eq!(m.line, 6);
        assert_eq!(c.methods[1].signature(), "a.b.X#<init>(int)");
        assert_eq!(c.methods[2].signature(), "a.b.X#n(String[])");
        assert!(c.methods[2].is_abstract);
    }

    #[test]
    fn statement_kinds() {
        let b = body("String s = p.trim();\ns = s + \"x\";\nfoo(s, n);\nf = (String) s;\nreturn;");
        let kinds: Vec<StmtKind> = b.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            [
                StmtKind::Declaration,
                StmtKind::Assignment,
                StmtKind::Invocation,
                StmtKind::Assignment
            ]
        );
        assert_eq!(b[0].text, "String s = p.trim();");
        assert_eq!(b[1].rhs.kind(), ExprKind::BinaryOp);
        assert_eq!(b[3].rhs.kind(), ExprKind::Cast);
        assert_eq!(b[3].lhs.as_deref(), Some("f"));
        assert_eq!(b[2].line, 4);
    }

    #[test]
    fn names_resolve_by_scope() {
        let b = body("String a = XStream.fromXML(p);\nString b = f.trim();\nint c = java.lang.Math.abs(n);");
        let call = b[0].rhs.as_call().unwrap();
        assert_eq!(call.receiver, Receiver::Type { name: "XStream".into() });
        assert_eq!(b[1].rhs.as_call().unwrap().receiver_var(), Some("f"));
        let c = b[2].rhs.as_call().unwrap();
        assert_eq!(
            c.receiver,
            Receiver::Type {
                name: "java.lang.Math".into()
            }
        );
    }

    #[test]
    fn regions_track_control_flow() {
        let b = body(
            "String v;\nif (n > 0) { v = p; } else { v = \"x\"; }\nwhile (n < 3) v = v + p;\ntry { v = p.trim(); } catch (Exception e) { v = null; }\nuse(v);",
        );
        let scopes: Vec<Vec<RegionKind>> = b.iter().map(|s| s.scope.iter().map(|r| r.kind).collect()).collect();
        assert_eq!(
            scopes,
            vec![
                vec![],
                vec![RegionKind::Branch],
                vec![RegionKind::Branch],
                vec![],
                vec![RegionKind::Loop],
                vec![RegionKind::TryBody],
                vec![RegionKind::Catch],
                vec![RegionKind::Catch],
                vec![],
            ]
        );
        assert_ne!(b[1].scope[0].arm, b[2].scope[0].arm);
        assert_eq!(b[1].scope[0].group, b[2].scope[0].group);
    }

    #[test]
    fn shifts_and_generics_coexist() {
        let b = body("java.util.Map<String, java.util.List<Integer>> m = null;\nint x = n >> 2;\nint y = n >>> 1;\nn >>= 1;\nboolean z = n >= 1;");
        assert_eq!(b.len(), 5);
        assert!(matches!(&b[1].rhs, Expr::BinaryOp { op, .. } if op == ">>"));
        assert!(matches!(&b[2].rhs, Expr::BinaryOp { op, .. } if op == ">>>"));
        assert_eq!(b[3].kind, StmtKind::Assignment);
        assert!(matches!(&b[4].rhs, Expr::BinaryOp { op, .. } if op == ">="));
    }

    #[test]
    fn lambdas_degrade_to_opaque() {
        let b = body("Runnable r = () -> use(p);\nlist.forEach(x -> use(x, f));");
        assert_eq!(b[0].rhs.kind(), ExprKind::Opaque);
        assert_eq!(b[0].uses(), BTreeSet::from(["p".to_string()]));
        assert_eq!(b[1].calls().len(), 1);
    }

    #[test]
    fn broken_statement_recovers() {
        let f = parse("class T { void m(String p) {\nint x = ;\nuse(p);\n} }");
        assert_eq!(f.diagnostics.len(), 1);
        assert_eq!(f.diagnostics[0].line, 2);
        let b = &f.classes[0].methods[0].body;
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].rhs.kind(), ExprKind::Opaque);
        assert_eq!(b[1].kind, StmtKind::Invocation);
    }

    #[test]
    fn foreach_and_catch_bind_variables() {
        let b = body("for (String s : items) { use(s); }");
        assert_eq!(b[0].kind, StmtKind::Declaration);
        assert_eq!(b[0].lhs.as_deref(), Some("s"));
        assert_eq!(b[0].rhs, Expr::var("items"));
        assert_eq!(b[1].scope[0].kind, RegionKind::Loop);
    }

    #[test]
    fn nested_and_enum_types() {
        let f = parse("package p; class O { static class I { void m() {} } enum E { A, B; void x() {} } }");
        let names: Vec<&str> = f.classes.iter().map(|c| c.fqn.as_str()).collect();
        assert_eq!(names, ["p.O", "p.O.I", "p.O.E"]);
        assert_eq!(f.classes[2].fields.len(), 2);
    }
}
