//! Recursive-descent parser for MiniJ units (`.minij`) and test files
//! (`.mjtest`). The accepted grammar is documented in `docs/grammar.md`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::ast::*;
use super::token::{unescape_char, unescape_string, Span, Token, TokenKind, TokenStream};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct SyntaxError {
    pub span: Span,
    pub found: String,
    pub expected: Vec<String>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: unexpected {}", self.span, self.found)?;
        match self.expected.as_slice() {
            [] => Ok(()),
            [one] => write!(f, ", expected {one}"),
            many => write!(f, ", expected one of {}", many.join(", ")),
        }
    }
}

type PResult<T> = Result<T, SyntaxError>;

const PRIMITIVE_TYPES: &[&str] = &["int", "boolean", "char", "string", "void"];

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    eof: Span,
    allow_assert: bool,
    /// `Some(true)` inside a void method, `Some(false)` inside a non-void
    /// method, `None` where `return` is not allowed.
    returns_void: Option<bool>,
}

/// Parses a lexed compilation unit.
pub fn parse(stream: &TokenStream) -> Result<Program, SyntaxError> {
    let source: Arc<str> = stream.to_source().into();
    let mut p = Parser::new(&stream.tokens, &source);
    let mut classes = Vec::new();
    loop {
        classes.push(p.class_decl()?);
        if p.at_end() {
            break;
        }
    }
    Ok(Program {
        source,
        tokens: stream.tokens.clone().into(),
        classes,
    })
}

/// Parses a lexed `.mjtest` file: one or more `test NAME { ... }` blocks.
pub fn parse_tests(stream: &TokenStream) -> Result<Vec<TestCase>, SyntaxError> {
    let source = stream.to_source();
    let mut p = Parser::new(&stream.tokens, &source);
    p.allow_assert = true;
    let mut tests = Vec::new();
    while !p.at_end() {
        tests.push(p.test_case()?);
    }
    Ok(tests)
}

/// Parses a standalone expression (used for assertion formulas).
pub fn parse_expression(stream: &TokenStream) -> Result<Expr, SyntaxError> {
    let source = stream.to_source();
    let mut p = Parser::new(&stream.tokens, &source);
    let e = p.expr()?;
    if !p.at_end() {
        return Err(p.unexpected(&["end of input"]));
    }
    Ok(e)
}

impl<'t> Parser<'t> {
    fn new(tokens: &'t [Token], source: &str) -> Self {
        let end = source.len();
        let (line, col) = source.lines().enumerate().fold((1u32, 1u32), |_, (i, l)| {
            (i as u32 + 1, l.chars().count() as u32 + 1)
        });
        Parser {
            tokens,
            pos: 0,
            eof: Span::new(end, end, line, col),
            allow_assert: false,
            returns_void: None,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + n)
    }

    fn cur_span(&self) -> Span {
        self.peek().map(|t| t.span).unwrap_or(self.eof)
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos - 1].span
    }

    fn unexpected(&self, expected: &[&str]) -> SyntaxError {
        let found = match self.peek() {
            Some(t) => format!("`{}`", t.lexeme),
            None => "end of input".to_string(),
        };
        SyntaxError {
            span: self.cur_span(),
            found,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn check_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn check_op(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(p))
    }

    fn check_keyword(&self, k: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(k))
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.check_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.check_punct(p) {
            self.pos += 1;
            Ok(self.prev_span())
        } else {
            Err(self.unexpected(&[&format!("`{p}`")]))
        }
    }

    fn expect_keyword(&mut self, k: &str) -> PResult<Span> {
        if self.check_keyword(k) {
            self.pos += 1;
            Ok(self.prev_span())
        } else {
            Err(self.unexpected(&[&format!("`{k}`")]))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok(Ident {
                    name: t.lexeme.clone(),
                    span: t.span,
                })
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        let start = self.expect_keyword("class")?;
        let name = self.ident()?;
        self.expect_punct("{")?;
        let mut members = Vec::new();
        while !self.check_punct("}") {
            if self.at_end() {
                return Err(self.unexpected(&["`}`", "member"]));
            }
            members.push(self.member()?);
        }
        let end = self.expect_punct("}")?;
        Ok(ClassDecl {
            name,
            members,
            span: start.to(end),
        })
    }

    fn at_type_start(&self) -> bool {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Keyword => PRIMITIVE_TYPES.contains(&t.lexeme.as_str()),
            Some(t) => t.kind == TokenKind::Identifier,
            None => false,
        }
    }

    fn type_name(&mut self) -> PResult<TypeName> {
        let t = match self.peek() {
            Some(t) if self.at_type_start() => t,
            _ => return Err(self.unexpected(&["type"])),
        };
        self.pos += 1;
        let base = match t.lexeme.as_str() {
            "int" if t.kind == TokenKind::Keyword => BaseTypeName::Int,
            "boolean" if t.kind == TokenKind::Keyword => BaseTypeName::Boolean,
            "char" if t.kind == TokenKind::Keyword => BaseTypeName::Char,
            "string" if t.kind == TokenKind::Keyword => BaseTypeName::String,
            "void" if t.kind == TokenKind::Keyword => BaseTypeName::Void,
            _ => BaseTypeName::Class(Ident {
                name: t.lexeme.clone(),
                span: t.span,
            }),
        };
        let mut span = t.span;
        let mut dims = 0;
        while self.check_punct("[") && self.peek_at(1).is_some_and(|t| t.is_punct("]")) {
            self.pos += 2;
            dims += 1;
            span = span.to(self.prev_span());
        }
        Ok(TypeName { base, dims, span })
    }

    fn member(&mut self) -> PResult<Member> {
        let first_token = self.pos;
        let ty = self.type_name()?;
        let name = self.ident()?;
        if self.check_punct("(") {
            self.pos += 1;
            let mut params = Vec::new();
            if !self.check_punct(")") {
                loop {
                    let pty = self.type_name()?;
                    let pname = self.ident()?;
                    params.push(Param {
                        span: pty.span.to(pname.span),
                        ty: pty,
                        name: pname,
                    });
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct(")")?;
            let is_void = ty.base == BaseTypeName::Void && ty.dims == 0;
            self.returns_void = Some(is_void);
            let body = self.block()?;
            self.returns_void = None;
            Ok(Member::Method(MethodDecl {
                span: ty.span.to(body.span),
                ret: ty,
                name,
                params,
                body,
                token_range: (first_token, self.pos),
                num_locals: 0,
            }))
        } else {
            let init = if self.check_op("=") {
                self.pos += 1;
                Some(self.expr()?)
            } else {
                None
            };
            let end = self.expect_punct(";")?;
            Ok(Member::Field(FieldDecl {
                span: ty.span.to(end),
                ty,
                name,
                init,
            }))
        }
    }

    fn test_case(&mut self) -> PResult<TestCase> {
        let start = match self.peek() {
            Some(t) if t.is(TokenKind::Identifier, "test") => {
                self.pos += 1;
                t.span
            }
            _ => return Err(self.unexpected(&["`test`"])),
        };
        let name = self.ident()?;
        let body = self.block()?;
        match body.stmts.last() {
            Some(Stmt {
                kind: StmtKind::Assert(_),
                ..
            }) => {}
            _ => {
                return Err(SyntaxError {
                    span: body.span,
                    found: "test body".to_string(),
                    expected: vec!["final `assert` statement".to_string()],
                })
            }
        }
        Ok(TestCase {
            name: name.name,
            span: start.to(body.span),
            body,
            num_locals: 0,
        })
    }

    fn block(&mut self) -> PResult<Block> {
        let start = self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.check_punct("}") {
            if self.at_end() {
                return Err(self.unexpected(&["`}`", "statement"]));
            }
            stmts.push(self.stmt()?);
        }
        let end = self.expect_punct("}")?;
        Ok(Block {
            stmts,
            span: start.to(end),
        })
    }

    fn at_var_decl(&self) -> bool {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Keyword => {
                PRIMITIVE_TYPES.contains(&t.lexeme.as_str()) && t.lexeme != "void"
            }
            Some(t) if t.kind == TokenKind::Identifier => match self.peek_at(1) {
                Some(n) if n.kind == TokenKind::Identifier => true,
                Some(n) if n.is_punct("[") => self.peek_at(2).is_some_and(|t| t.is_punct("]")),
                _ => false,
            },
            _ => false,
        }
    }

    fn var_decl_no_semi(&mut self) -> PResult<Stmt> {
        let ty = self.type_name()?;
        let name = self.ident()?;
        let init = if self.check_op("=") {
            self.pos += 1;
            Some(self.expr()?)
        } else {
            None
        };
        let end = init.as_ref().map(|e| e.span).unwrap_or(name.span);
        Ok(Stmt {
            span: ty.span.to(end),
            kind: StmtKind::VarDecl {
                ty,
                name,
                init,
                slot: None,
            },
        })
    }

    fn expr_stmt_expr(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let e = self.expr()?;
        let ok = match &e.kind {
            ExprKind::Assign { .. }
            | ExprKind::Call { .. }
            | ExprKind::StaticCall { .. }
            | ExprKind::NewObject { .. } => true,
            ExprKind::Prefix { op, .. } | ExprKind::Postfix { op, .. } => {
                matches!(op, UnaryOp::Inc | UnaryOp::Dec)
            }
            _ => false,
        };
        if ok {
            Ok(e)
        } else {
            Err(SyntaxError {
                span: self.tokens[start].span.to(e.span),
                found: "expression".to_string(),
                expected: vec!["statement".to_string()],
            })
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.cur_span();
        if self.check_punct("{") {
            let b = self.block()?;
            return Ok(Stmt {
                span: b.span,
                kind: StmtKind::Block(b),
            });
        }
        if self.check_keyword("if") {
            self.pos += 1;
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then = Box::new(self.stmt()?);
            let els = if self.check_keyword("else") {
                self.pos += 1;
                Some(Box::new(self.stmt()?))
            } else {
                None
            };
            let end = els.as_ref().map(|e| e.span).unwrap_or(then.span);
            return Ok(Stmt {
                span: start.to(end),
                kind: StmtKind::If { cond, then, els },
            });
        }
        if self.check_keyword("while") {
            self.pos += 1;
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let body = Box::new(self.stmt()?);
            return Ok(Stmt {
                span: start.to(body.span),
                kind: StmtKind::While { cond, body },
            });
        }
        if self.check_keyword("for") {
            self.pos += 1;
            self.expect_punct("(")?;
            let init = if self.check_punct(";") {
                None
            } else if self.at_var_decl() {
                Some(Box::new(self.var_decl_no_semi()?))
            } else {
                let e = self.expr_stmt_expr()?;
                Some(Box::new(Stmt {
                    span: e.span,
                    kind: StmtKind::Expr(e),
                }))
            };
            self.expect_punct(";")?;
            let cond = if self.check_punct(";") {
                None
            } else {
                Some(self.expr()?)
            };
            self.expect_punct(";")?;
            let mut update = Vec::new();
            if !self.check_punct(")") {
                loop {
                    update.push(self.expr_stmt_expr()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct(")")?;
            let body = Box::new(self.stmt()?);
            return Ok(Stmt {
                span: start.to(body.span),
                kind: StmtKind::For {
                    init,
                    cond,
                    update,
                    body,
                },
            });
        }
        if self.check_keyword("return") {
            let Some(void) = self.returns_void else {
                return Err(self.unexpected(&["statement"]));
            };
            self.pos += 1;
            let value = if void { None } else { Some(self.expr()?) };
            let end = self.expect_punct(";")?;
            return Ok(Stmt {
                span: start.to(end),
                kind: StmtKind::Return(value),
            });
        }
        if self.check_keyword("assert") && self.allow_assert {
            self.pos += 1;
            let e = self.expr()?;
            let end = self.expect_punct(";")?;
            return Ok(Stmt {
                span: start.to(end),
                kind: StmtKind::Assert(e),
            });
        }
        if self.at_var_decl() {
            let mut s = self.var_decl_no_semi()?;
            let end = self.expect_punct(";")?;
            s.span = s.span.to(end);
            return Ok(s);
        }
        let e = self.expr_stmt_expr()?;
        let end = self.expect_punct(";")?;
        Ok(Stmt {
            span: start.to(end),
            kind: StmtKind::Expr(e),
        })
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.binary(0)?;
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Operator {
                if let Some(op) = AssignOp::from_symbol(&t.lexeme) {
                    self.pos += 1;
                    let value = self.expr()?;
                    let span = lhs.span.to(value.span);
                    return Ok(Expr::new(
                        ExprKind::Assign {
                            op,
                            op_span: t.span,
                            target: Box::new(lhs),
                            value: Box::new(value),
                        },
                        span,
                    ));
                }
            }
        }
        Ok(lhs)
    }

    fn binary(&mut self, level: usize) -> PResult<Expr> {
        const LEVELS: &[&[BinaryOp]] = &[
            &[BinaryOp::Or],
            &[BinaryOp::And],
            &[BinaryOp::Eq, BinaryOp::Ne],
            &[BinaryOp::Lt, BinaryOp::Le, BinaryOp::Gt, BinaryOp::Ge],
            &[BinaryOp::Add, BinaryOp::Sub],
            &[BinaryOp::Mul, BinaryOp::Div, BinaryOp::Rem],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        while let Some(t) = self.peek() {
            if t.kind != TokenKind::Operator {
                break;
            }
            let Some(op) = BinaryOp::from_symbol(&t.lexeme) else {
                break;
            };
            if !LEVELS[level].contains(&op) {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(level + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    op_span: t.span,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if let Some(t) = self.peek() {
            let op = match (t.kind, t.lexeme.as_str()) {
                (TokenKind::Operator, "!") => Some(UnaryOp::Not),
                (TokenKind::Operator, "-") => Some(UnaryOp::Neg),
                (TokenKind::Operator, "++") => Some(UnaryOp::Inc),
                (TokenKind::Operator, "--") => Some(UnaryOp::Dec),
                _ => None,
            };
            if let Some(op) = op {
                self.pos += 1;
                let operand = self.unary()?;
                let span = t.span.to(operand.span);
                return Ok(Expr::new(
                    ExprKind::Prefix {
                        op,
                        op_span: t.span,
                        operand: Box::new(operand),
                    },
                    span,
                ));
            }
            // cast: `(` primitive-type `)` unary
            if t.is_punct("(")
                && self.peek_at(1).is_some_and(|k| {
                    k.kind == TokenKind::Keyword
                        && ["int", "char", "boolean", "string"].contains(&k.lexeme.as_str())
                })
                && self.peek_at(2).is_some_and(|c| c.is_punct(")"))
            {
                self.pos += 1;
                let ty = self.type_name()?;
                self.expect_punct(")")?;
                let expr = self.unary()?;
                let span = t.span.to(expr.span);
                return Ok(Expr::new(
                    ExprKind::Cast {
                        ty,
                        expr: Box::new(expr),
                    },
                    span,
                ));
            }
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.check_punct(".") {
                self.pos += 1;
                let name = self.ident()?;
                if self.check_punct("(") {
                    let (args, end) = self.args()?;
                    let span = e.span.to(end);
                    e = Expr::new(
                        ExprKind::Call {
                            receiver: Some(Box::new(e)),
                            method: name,
                            args,
                            target: None,
                        },
                        span,
                    );
                } else {
                    let span = e.span.to(name.span);
                    e = Expr::new(
                        ExprKind::FieldAccess {
                            object: Box::new(e),
                            field: name,
                            slot: FieldSlot::Unresolved,
                        },
                        span,
                    );
                }
            } else if self.check_punct("[") {
                self.pos += 1;
                let index = self.expr()?;
                let end = self.expect_punct("]")?;
                let span = e.span.to(end);
                e = Expr::new(
                    ExprKind::ArrayRead {
                        array: Box::new(e),
                        index: Box::new(index),
                    },
                    span,
                );
            } else {
                break;
            }
        }
        if let Some(t) = self.peek() {
            let op = match (t.kind, t.lexeme.as_str()) {
                (TokenKind::Operator, "++") => Some(UnaryOp::Inc),
                (TokenKind::Operator, "--") => Some(UnaryOp::Dec),
                _ => None,
            };
            if let Some(op) = op {
                self.pos += 1;
                let span = e.span.to(t.span);
                e = Expr::new(
                    ExprKind::Postfix {
                        op,
                        op_span: t.span,
                        operand: Box::new(e),
                    },
                    span,
                );
            }
        }
        Ok(e)
    }

    fn args(&mut self) -> PResult<(Vec<Expr>, Span)> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.check_punct(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        let end = self.expect_punct(")")?;
        Ok((args, end))
    }

    fn primary(&mut self) -> PResult<Expr> {
        const EXPECTED: &[&str] = &["expression"];
        let Some(t) = self.peek() else {
            return Err(self.unexpected(EXPECTED));
        };
        let literal = |value: Literal| {
            Expr::new(
                ExprKind::Literal {
                    value,
                    lexeme: t.lexeme.clone(),
                },
                t.span,
            )
        };
        match t.kind {
            TokenKind::IntLiteral => {
                self.pos += 1;
                Ok(literal(Literal::Int(t.lexeme.clone())))
            }
            TokenKind::BoolLiteral => {
                self.pos += 1;
                Ok(literal(Literal::Bool(t.lexeme == "true")))
            }
            TokenKind::CharLiteral => {
                self.pos += 1;
                let c = unescape_char(&t.lexeme).ok_or_else(|| SyntaxError {
                    span: t.span,
                    found: format!("`{}`", t.lexeme),
                    expected: vec!["character literal".to_string()],
                })?;
                Ok(literal(Literal::Char(c)))
            }
            TokenKind::StringLiteral => {
                self.pos += 1;
                Ok(literal(Literal::Str(unescape_string(&t.lexeme))))
            }
            TokenKind::Keyword if t.lexeme == "null" => {
                self.pos += 1;
                Ok(literal(Literal::Null))
            }
            TokenKind::Keyword if t.lexeme == "this" => {
                self.pos += 1;
                Ok(Expr::new(ExprKind::This, t.span))
            }
            TokenKind::Keyword if t.lexeme == "new" => {
                self.pos += 1;
                self.new_expr(t.span)
            }
            TokenKind::Punctuation if t.lexeme == "(" => {
                self.pos += 1;
                let inner = self.expr()?;
                let end = self.expect_punct(")")?;
                Ok(Expr::new(ExprKind::Paren(Box::new(inner)), t.span.to(end)))
            }
            TokenKind::Identifier => {
                let name = self.ident()?;
                let is_class_ref = name.name.starts_with(|c: char| c.is_ascii_uppercase())
                    && self.check_punct(".")
                    && self
                        .peek_at(1)
                        .is_some_and(|t| t.kind == TokenKind::Identifier)
                    && self.peek_at(2).is_some_and(|t| t.is_punct("("));
                if is_class_ref {
                    self.pos += 1;
                    let method = self.ident()?;
                    let (args, end) = self.args()?;
                    Ok(Expr::new(
                        ExprKind::StaticCall {
                            class: name.clone(),
                            method,
                            args,
                            function: None,
                        },
                        name.span.to(end),
                    ))
                } else if self.check_punct("(") {
                    let (args, end) = self.args()?;
                    Ok(Expr::new(
                        ExprKind::Call {
                            receiver: None,
                            method: name.clone(),
                            args,
                            target: None,
                        },
                        name.span.to(end),
                    ))
                } else {
                    Ok(Expr::new(
                        ExprKind::Var {
                            name: name.clone(),
                            binding: Binding::Unresolved,
                        },
                        name.span,
                    ))
                }
            }
            _ => Err(self.unexpected(EXPECTED)),
        }
    }

    fn new_expr(&mut self, start: Span) -> PResult<Expr> {
        if !self.at_type_start() || self.check_keyword("void") {
            return Err(self.unexpected(&["type"]));
        }
        // element type without dims
        let t = self.peek().unwrap();
        if t.kind == TokenKind::Identifier && self.peek_at(1).is_some_and(|n| n.is_punct("(")) {
            let class = self.ident()?;
            self.expect_punct("(")?;
            let end = self.expect_punct(")")?;
            return Ok(Expr::new(
                ExprKind::NewObject {
                    class,
                    class_idx: None,
                },
                start.to(end),
            ));
        }
        self.pos += 1;
        let base = match (t.kind, t.lexeme.as_str()) {
            (TokenKind::Keyword, "int") => BaseTypeName::Int,
            (TokenKind::Keyword, "boolean") => BaseTypeName::Boolean,
            (TokenKind::Keyword, "char") => BaseTypeName::Char,
            (TokenKind::Keyword, "string") => BaseTypeName::String,
            _ => BaseTypeName::Class(Ident {
                name: t.lexeme.clone(),
                span: t.span,
            }),
        };
        let elem = TypeName {
            base,
            dims: 0,
            span: t.span,
        };
        self.expect_punct("[")?;
        let len = self.expr()?;
        let mut end = self.expect_punct("]")?;
        let mut extra_dims = 0;
        while self.check_punct("[") && self.peek_at(1).is_some_and(|t| t.is_punct("]")) {
            self.pos += 2;
            end = self.prev_span();
            extra_dims += 1;
        }
        Ok(Expr::new(
            ExprKind::NewArray {
                elem,
                len: Box::new(len),
                extra_dims,
            },
            start.to(end),
        ))
    }
}
