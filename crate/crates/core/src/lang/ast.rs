//! Syntax tree for MiniJ compilation units and test files.
//!
//! Name-resolution slots (`Binding`, `FieldSlot`, `MethodRef`, local slots)
//! and `Expr::ty` are empty after parsing and filled in by the type checker.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::token::{Span, Token};
use super::types::MiniJType;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

/// Compilation unit.
#[derive(Debug, Clone)]
pub struct Program {
    pub source: Arc<str>,
    pub tokens: Arc<[Token]>,
    pub classes: Vec<ClassDecl>,
}

#[derive(Debug, Clone)]
pub struct ClassDecl {
    pub name: Ident,
    pub members: Vec<Member>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum Member {
    Field(FieldDecl),
    Method(MethodDecl),
}

#[derive(Debug, Clone)]
pub struct FieldDecl {
    pub ty: TypeName,
    pub name: Ident,
    pub init: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct MethodDecl {
    pub ret: TypeName,
    pub name: Ident,
    pub params: Vec<Param>,
    pub body: Block,
    pub span: Span,
    /// Index of the first token of the method in `Program::tokens`, and one
    /// past its last token.
    pub token_range: (usize, usize),
    /// Number of local slots (parameters included), set by the checker.
    pub num_locals: u32,
}

#[derive(Debug, Clone)]
pub struct Param {
    pub ty: TypeName,
    pub name: Ident,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseTypeName {
    Int,
    Boolean,
    Char,
    String,
    Void,
    Class(Ident),
}

/// A type as written in source, e.g. `int[][]` or `Node`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeName {
    pub base: BaseTypeName,
    pub dims: usize,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum StmtKind {
    VarDecl {
        ty: TypeName,
        name: Ident,
        init: Option<Expr>,
        slot: Option<u32>,
    },
    Expr(Expr),
    If {
        cond: Expr,
        then: Box<Stmt>,
        els: Option<Box<Stmt>>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        update: Vec<Expr>,
        body: Box<Stmt>,
    },
    Return(Option<Expr>),
    Block(Block),
    /// Only legal inside test bodies.
    Assert(Expr),
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    pub ty: Option<MiniJType>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinaryOp> {
        Some(match s {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "%" => BinaryOp::Rem,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "&&" => BinaryOp::And,
            "||" => BinaryOp::Or,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
    Inc,
    Dec,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Not => "!",
            UnaryOp::Neg => "-",
            UnaryOp::Inc => "++",
            UnaryOp::Dec => "--",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Assign,
    Add,
    Sub,
    Mul,
    Div,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<AssignOp> {
        Some(match s {
            "=" => AssignOp::Assign,
            "+=" => AssignOp::Add,
            "-=" => AssignOp::Sub,
            "*=" => AssignOp::Mul,
            "/=" => AssignOp::Div,
            _ => return None,
        })
    }

    /// The arithmetic operator a compound assignment applies.
    pub fn binary(self) -> Option<BinaryOp> {
        match self {
            AssignOp::Assign => None,
            AssignOp::Add => Some(BinaryOp::Add),
            AssignOp::Sub => Some(BinaryOp::Sub),
            AssignOp::Mul => Some(BinaryOp::Mul),
            AssignOp::Div => Some(BinaryOp::Div),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Int(String),
    Bool(bool),
    Char(char),
    Str(String),
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    Unresolved,
    Local(u32),
    Field(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSlot {
    Unresolved,
    Field(u32),
    ArrayLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MethodRef {
    pub class: u32,
    pub method: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MathFn {
    Abs,
    Min,
    Max,
    Random,
}

impl MathFn {
    pub fn from_name(name: &str) -> Option<MathFn> {
        Some(match name {
            "abs" => MathFn::Abs,
            "min" => MathFn::Min,
            "max" => MathFn::Max,
            "random" => MathFn::Random,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            MathFn::Abs => 1,
            MathFn::Min | MathFn::Max => 2,
            MathFn::Random => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Literal {
        value: Literal,
        lexeme: String,
    },
    Var {
        name: Ident,
        binding: Binding,
    },
    This,
    Paren(Box<Expr>),
    FieldAccess {
        object: Box<Expr>,
        field: Ident,
        slot: FieldSlot,
    },
    ArrayRead {
        array: Box<Expr>,
        index: Box<Expr>,
    },
    /// Assignment to a variable, field or array element. An array element
    /// target makes this an array write.
    Assign {
        target: Box<Expr>,
        op: AssignOp,
        op_span: Span,
        value: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        op_span: Span,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Prefix {
        op: UnaryOp,
        op_span: Span,
        operand: Box<Expr>,
    },
    Postfix {
        op: UnaryOp,
        op_span: Span,
        operand: Box<Expr>,
    },
    Call {
        receiver: Option<Box<Expr>>,
        method: Ident,
        args: Vec<Expr>,
        target: Option<MethodRef>,
    },
    StaticCall {
        class: Ident,
        method: Ident,
        args: Vec<Expr>,
        function: Option<MathFn>,
    },
    Cast {
        ty: TypeName,
        expr: Box<Expr>,
    },
    NewArray {
        elem: TypeName,
        len: Box<Expr>,
        extra_dims: usize,
    },
    NewObject {
        class: Ident,
        class_idx: Option<u32>,
    },
}

/// Coarse node classification, one entry per syntactic category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    ClassDecl,
    FieldDecl,
    MethodDecl,
    Param,
    Block,
    If,
    While,
    For,
    Return,
    ExprStmt,
    VarDecl,
    Assert,
    Assign,
    Binary,
    UnaryPrefix,
    UnaryPostfix,
    Literal,
    VarRef,
    This,
    Paren,
    FieldAccess,
    ArrayRead,
    ArrayWrite,
    MethodCall,
    StaticCall,
    Cast,
    NewArray,
    NewObject,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr {
            kind,
            span,
            ty: None,
        }
    }

    pub fn node_kind(&self) -> NodeKind {
        match &self.kind {
            ExprKind::Literal { .. } => NodeKind::Literal,
            ExprKind::Var { .. } => NodeKind::VarRef,
            ExprKind::This => NodeKind::This,
            ExprKind::Paren(_) => NodeKind::Paren,
            ExprKind::FieldAccess { .. } => NodeKind::FieldAccess,
            ExprKind::ArrayRead { .. } => NodeKind::ArrayRead,
            ExprKind::Assign { target, .. } => match target.kind {
                ExprKind::ArrayRead { .. } => NodeKind::ArrayWrite,
                _ => NodeKind::Assign,
            },
            ExprKind::Binary { .. } => NodeKind::Binary,
            ExprKind::Prefix { .. } => NodeKind::UnaryPrefix,
            ExprKind::Postfix { .. } => NodeKind::UnaryPostfix,
            ExprKind::Call { .. } => NodeKind::MethodCall,
            ExprKind::StaticCall { .. } => NodeKind::StaticCall,
            ExprKind::Cast { .. } => NodeKind::Cast,
            ExprKind::NewArray { .. } => NodeKind::NewArray,
            ExprKind::NewObject { .. } => NodeKind::NewObject,
        }
    }

    /// Direct subexpressions in source order.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Literal { .. }
            | ExprKind::Var { .. }
            | ExprKind::This
            | ExprKind::NewObject { .. } => vec![],
            ExprKind::Paren(e) | ExprKind::Cast { expr: e, .. } => vec![e],
            ExprKind::FieldAccess { object, .. } => vec![object],
            ExprKind::ArrayRead { array, index } => vec![array, index],
            ExprKind::Assign { target, value, .. } => vec![target, value],
            ExprKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            ExprKind::Prefix { operand, .. } | ExprKind::Postfix { operand, .. } => vec![operand],
            ExprKind::Call { receiver, args, .. } => {
                receiver.iter().map(|r| &**r).chain(args.iter()).collect()
            }
            ExprKind::StaticCall { args, .. } => args.iter().collect(),
            ExprKind::NewArray { len, .. } => vec![len],
        }
    }

    /// Strips redundant parentheses.
    pub fn unparen(&self) -> &Expr {
        match &self.kind {
            ExprKind::Paren(inner) => inner.unparen(),
            _ => self,
        }
    }
}

impl Stmt {
    pub fn node_kind(&self) -> NodeKind {
        match &self.kind {
            StmtKind::VarDecl { .. } => NodeKind::VarDecl,
            StmtKind::Expr(_) => NodeKind::ExprStmt,
            StmtKind::If { .. } => NodeKind::If,
            StmtKind::While { .. } => NodeKind::While,
            StmtKind::For { .. } => NodeKind::For,
            StmtKind::Return(_) => NodeKind::Return,
            StmtKind::Block(_) => NodeKind::Block,
            StmtKind::Assert(_) => NodeKind::Assert,
        }
    }
}

impl Program {
    pub fn class(&self, name: &str) -> Option<(usize, &ClassDecl)> {
        self.classes
            .iter()
            .enumerate()
            .find(|(_, c)| c.name.name == name)
    }

    /// All methods in declaration order, with their class.
    pub fn methods(&self) -> impl Iterator<Item = (&ClassDecl, &MethodDecl)> {
        self.classes
            .iter()
            .flat_map(|c| c.methods().map(move |m| (c, m)))
    }

    pub fn method_by_ref(&self, r: MethodRef) -> &MethodDecl {
        self.classes[r.class as usize]
            .methods()
            .nth(r.method as usize)
            .expect("method reference out of range")
    }

    /// Looks up `Class.method`.
    pub fn find_method(&self, class: &str, method: &str) -> Option<MethodRef> {
        let (ci, c) = self.class(class)?;
        let mi = c.methods().position(|m| m.name.name == method)?;
        Some(MethodRef {
            class: ci as u32,
            method: mi as u32,
        })
    }
}

impl ClassDecl {
    pub fn fields(&self) -> impl Iterator<Item = &FieldDecl> {
        self.members.iter().filter_map(|m| match m {
            Member::Field(f) => Some(f),
            Member::Method(_) => None,
        })
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodDecl> {
        self.members.iter().filter_map(|m| match m {
            Member::Method(m) => Some(m),
            Member::Field(_) => None,
        })
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields().position(|f| f.name.name == name)
    }
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.base {
            BaseTypeName::Int => f.write_str("int")?,
            BaseTypeName::Boolean => f.write_str("boolean")?,
            BaseTypeName::Char => f.write_str("char")?,
            BaseTypeName::String => f.write_str("string")?,
            BaseTypeName::Void => f.write_str("void")?,
            BaseTypeName::Class(id) => f.write_str(&id.name)?,
        }
        for _ in 0..self.dims {
            f.write_str("[]")?;
        }
        Ok(())
    }
}

/// A test case from a `.mjtest` file.
#[derive(Debug, Clone)]
pub struct TestCase {
    pub name: String,
    pub body: Block,
    pub span: Span,
    /// Local slots used by the body, set by the checker.
    pub num_locals: u32,
}

/// Pre-order visitor over expressions, used by masking and coverage code.
pub fn walk_stmt<'a>(stmt: &'a Stmt, f: &mut dyn FnMut(&'a Expr)) {
    match &stmt.kind {
        StmtKind::VarDecl { init, .. } => {
            if let Some(e) = init {
                walk_expr(e, f);
            }
        }
        StmtKind::Expr(e) | StmtKind::Assert(e) => walk_expr(e, f),
        StmtKind::If { cond, then, els } => {
            walk_expr(cond, f);
            walk_stmt(then, f);
            if let Some(e) = els {
                walk_stmt(e, f);
            }
        }
        StmtKind::While { cond, body } => {
            walk_expr(cond, f);
            walk_stmt(body, f);
        }
        StmtKind::For {
            init,
            cond,
            update,
            body,
        } => {
            if let Some(i) = init {
                walk_stmt(i, f);
            }
            if let Some(c) = cond {
                walk_expr(c, f);
            }
            for u in update {
                walk_expr(u, f);
            }
            walk_stmt(body, f);
        }
        StmtKind::Return(e) => {
            if let Some(e) = e {
                walk_expr(e, f);
            }
        }
        StmtKind::Block(b) => walk_block(b, f),
    }
}

pub fn walk_block<'a>(block: &'a Block, f: &mut dyn FnMut(&'a Expr)) {
    for s in &block.stmts {
        walk_stmt(s, f);
    }
}

pub fn walk_expr<'a>(expr: &'a Expr, f: &mut dyn FnMut(&'a Expr)) {
    f(expr);
    for c in expr.children() {
        walk_expr(c, f);
    }
}
