//! Static checking: name resolution, typing, and definite return.
//!
//! A program that passes `type_check` is what the mutation pipeline calls
//! "compilable".

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::ast::*;
use super::token::Span;
use super::types::MiniJType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TypeErrorKind {
    UnknownIdentifier,
    UnknownType,
    UnknownMethod,
    UnknownField,
    ArityMismatch,
    OperandMismatch,
    NonBooleanCondition,
    BadIndexType,
    NotAnLvalue,
    Duplicate,
    MissingReturn,
    LiteralOutOfRange,
    InvalidVoid,
    NoThis,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub span: Span,
    pub message: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

/// A program whose expressions all carry resolved types and bindings.
///
/// Immutable after construction; share it across threads behind an `Arc`.
#[derive(Debug, Clone)]
pub struct CheckedProgram {
    program: Program,
}

impl CheckedProgram {
    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn source(&self) -> &str {
        &self.program.source
    }
}

impl std::ops::Deref for CheckedProgram {
    type Target = Program;

    fn deref(&self) -> &Program {
        &self.program
    }
}

#[derive(Debug, Clone)]
struct MethodSig {
    index: u32,
    params: Vec<MiniJType>,
    ret: MiniJType,
}

#[derive(Debug, Clone, Default)]
struct ClassSig {
    index: u32,
    fields: HashMap<String, (u32, MiniJType)>,
    methods: HashMap<String, MethodSig>,
}

/// Signatures of all classes, collected before any body is checked so that
/// declaration order never matters.
#[derive(Debug, Clone, Default)]
pub(crate) struct ClassTable {
    classes: HashMap<String, ClassSig>,
}

fn resolve_type_name(
    classes: &HashMap<String, ClassSig>,
    t: &TypeName,
) -> Result<MiniJType, TypeError> {
    let mut ty = match &t.base {
        BaseTypeName::Int => MiniJType::Int,
        BaseTypeName::Boolean => MiniJType::Boolean,
        BaseTypeName::Char => MiniJType::Char,
        BaseTypeName::String => MiniJType::String,
        BaseTypeName::Void => MiniJType::Void,
        BaseTypeName::Class(id) => {
            if !classes.contains_key(&id.name) {
                return Err(TypeError {
                    kind: TypeErrorKind::UnknownType,
                    span: id.span,
                    message: format!("unknown type `{}`", id.name),
                });
            }
            MiniJType::Class(id.name.clone())
        }
    };
    if t.dims > 0 && ty == MiniJType::Void {
        return Err(TypeError {
            kind: TypeErrorKind::InvalidVoid,
            span: t.span,
            message: "array of void".to_string(),
        });
    }
    for _ in 0..t.dims {
        ty = MiniJType::array_of(ty);
    }
    Ok(ty)
}

impl ClassTable {
    fn build(program: &Program, errors: &mut Vec<TypeError>) -> ClassTable {
        let mut classes: HashMap<String, ClassSig> = HashMap::new();
        for (ci, c) in program.classes.iter().enumerate() {
            if c.name.name == "Math" || classes.contains_key(&c.name.name) {
                errors.push(TypeError {
                    kind: TypeErrorKind::Duplicate,
                    span: c.name.span,
                    message: format!("class `{}` is already defined", c.name.name),
                });
                continue;
            }
            classes.insert(
                c.name.name.clone(),
                ClassSig {
                    index: ci as u32,
                    ..Default::default()
                },
            );
        }
        for (ci, c) in program.classes.iter().enumerate() {
            let mut sig = ClassSig {
                index: ci as u32,
                ..Default::default()
            };
            for (fi, f) in c.fields().enumerate() {
                let ty = match resolve_type_name(&classes, &f.ty) {
                    Ok(MiniJType::Void) => {
                        errors.push(TypeError {
                            kind: TypeErrorKind::InvalidVoid,
                            span: f.ty.span,
                            message: "field of type void".to_string(),
                        });
                        continue;
                    }
                    Ok(t) => t,
                    Err(e) => {
                        errors.push(e);
                        continue;
                    }
                };
                if sig.fields.contains_key(&f.name.name) {
                    errors.push(TypeError {
                        kind: TypeErrorKind::Duplicate,
                        span: f.name.span,
                        message: format!("field `{}` is already defined", f.name.name),
                    });
                }
                sig.fields.insert(f.name.name.clone(), (fi as u32, ty));
            }
            for (mi, m) in c.methods().enumerate() {
                let ret = resolve_type_name(&classes, &m.ret).unwrap_or_else(|e| {
                    errors.push(e);
                    MiniJType::Void
                });
                let mut params = Vec::new();
                for p in &m.params {
                    match resolve_type_name(&classes, &p.ty) {
                        Ok(MiniJType::Void) => {
                            errors.push(TypeError {
                                kind: TypeErrorKind::InvalidVoid,
                                span: p.ty.span,
                                message: "parameter of type void".to_string(),
                            });
                            params.push(MiniJType::Int);
                        }
                        Ok(t) => params.push(t),
                        Err(e) => {
                            errors.push(e);
                            params.push(MiniJType::Int);
                        }
                    }
                }
                if sig.methods.contains_key(&m.name.name) {
                    errors.push(TypeError {
                        kind: TypeErrorKind::Duplicate,
                        span: m.name.span,
                        message: format!("method `{}` is already defined", m.name.name),
                    });
                }
                sig.methods.insert(
                    m.name.name.clone(),
                    MethodSig {
                        index: mi as u32,
                        params,
                        ret,
                    },
                );
            }
            if classes
                .get(&c.name.name)
                .is_some_and(|s| s.index == ci as u32)
            {
                classes.insert(c.name.name.clone(), sig);
            }
        }
        ClassTable { classes }
    }

    pub(crate) fn field(&self, class: &str, field: &str) -> Option<(u32, &MiniJType)> {
        self.classes
            .get(class)?
            .fields
            .get(field)
            .map(|(i, t)| (*i, t))
    }

    pub(crate) fn class_index(&self, class: &str) -> Option<u32> {
        self.classes.get(class).map(|c| c.index)
    }

    pub(crate) fn resolve(&self, t: &TypeName) -> Result<MiniJType, TypeError> {
        resolve_type_name(&self.classes, t)
    }
}

struct Scope {
    vars: Vec<HashMap<String, (u32, MiniJType)>>,
    next_slot: u32,
    max_slot: u32,
}

impl Scope {
    fn new() -> Self {
        Scope {
            vars: vec![HashMap::new()],
            next_slot: 0,
            max_slot: 0,
        }
    }

    fn lookup(&self, name: &str) -> Option<(u32, MiniJType)> {
        self.vars.iter().rev().find_map(|s| s.get(name).cloned())
    }

    fn push(&mut self) {
        self.vars.push(HashMap::new());
    }

    fn pop(&mut self) {
        let frame = self.vars.pop().expect("scope underflow");
        self.next_slot -= frame.len() as u32;
    }

    fn declare(&mut self, name: &str, ty: MiniJType) -> Option<u32> {
        if self.lookup(name).is_some() {
            return None;
        }
        let slot = self.next_slot;
        self.next_slot += 1;
        self.max_slot = self.max_slot.max(self.next_slot);
        self.vars
            .last_mut()
            .unwrap()
            .insert(name.to_string(), (slot, ty));
        Some(slot)
    }
}

struct Checker<'a> {
    table: &'a ClassTable,
    class: Option<&'a str>,
    scope: Scope,
    errors: Vec<TypeError>,
    return_type: Option<MiniJType>,
}

fn lit_ty(l: &Literal) -> MiniJType {
    match l {
        Literal::Int(_) => MiniJType::Int,
        Literal::Bool(_) => MiniJType::Boolean,
        Literal::Char(_) => MiniJType::Char,
        Literal::Str(_) => MiniJType::String,
        Literal::Null => MiniJType::Null,
    }
}

impl<'a> Checker<'a> {
    fn err(&mut self, kind: TypeErrorKind, span: Span, message: impl Into<String>) {
        self.errors.push(TypeError {
            kind,
            span,
            message: message.into(),
        });
    }

    fn resolve(&mut self, t: &TypeName) -> Option<MiniJType> {
        match self.table.resolve(t) {
            Ok(ty) => Some(ty),
            Err(e) => {
                self.errors.push(e);
                None
            }
        }
    }

    fn expect_accepts(&mut self, want: &MiniJType, got: &MiniJType, span: Span) {
        if !want.accepts(got) {
            self.err(
                TypeErrorKind::OperandMismatch,
                span,
                format!("expected `{want}`, found `{got}`"),
            );
        }
    }

    fn condition(&mut self, e: &mut Expr) {
        if let Some(t) = self.expr(e) {
            if t != MiniJType::Boolean {
                self.err(
                    TypeErrorKind::NonBooleanCondition,
                    e.span,
                    format!("condition must be boolean, found `{t}`"),
                );
            }
        }
    }

    fn block(&mut self, b: &mut Block) {
        self.scope.push();
        for s in &mut b.stmts {
            self.stmt(s);
        }
        self.scope.pop();
    }

    fn stmt(&mut self, s: &mut Stmt) {
        match &mut s.kind {
            StmtKind::VarDecl {
                ty,
                name,
                init,
                slot,
            } => {
                let declared = self.resolve(ty);
                if declared == Some(MiniJType::Void) {
                    self.err(TypeErrorKind::InvalidVoid, ty.span, "variable of type void");
                }
                if let Some(e) = init {
                    if let (Some(t), Some(d)) = (self.expr(e), declared.as_ref()) {
                        self.expect_accepts(d, &t, e.span);
                    }
                }
                match self
                    .scope
                    .declare(&name.name, declared.unwrap_or(MiniJType::Int))
                {
                    Some(n) => *slot = Some(n),
                    None => self.err(
                        TypeErrorKind::Duplicate,
                        name.span,
                        format!("variable `{}` is already defined", name.name),
                    ),
                }
            }
            StmtKind::Expr(e) => {
                self.expr(e);
            }
            StmtKind::Assert(e) => self.condition(e),
            StmtKind::If { cond, then, els } => {
                self.condition(cond);
                self.scoped_stmt(then);
                if let Some(e) = els {
                    self.scoped_stmt(e);
                }
            }
            StmtKind::While { cond, body } => {
                self.condition(cond);
                self.scoped_stmt(body);
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                self.scope.push();
                if let Some(i) = init {
                    self.stmt(i);
                }
                if let Some(c) = cond {
                    self.condition(c);
                }
                for u in update {
                    self.expr(u);
                }
                self.scoped_stmt(body);
                self.scope.pop();
            }
            StmtKind::Return(value) => {
                // the parser guarantees value presence matches voidness
                if let Some(e) = value {
                    let got = self.expr(e);
                    let want = self.return_type.clone();
                    if let (Some(got), Some(want)) = (got, want) {
                        self.expect_accepts(&want, &got, e.span);
                    }
                }
            }
            StmtKind::Block(b) => self.block(b),
        }
    }

    fn scoped_stmt(&mut self, s: &mut Stmt) {
        self.scope.push();
        self.stmt(s);
        self.scope.pop();
    }

    fn is_lvalue(e: &Expr) -> bool {
        matches!(
            e.kind,
            ExprKind::Var { .. }
                | ExprKind::ArrayRead { .. }
                | ExprKind::FieldAccess {
                    slot: FieldSlot::Field(_),
                    ..
                }
        )
    }

    fn expr(&mut self, e: &mut Expr) -> Option<MiniJType> {
        let ty = self.expr_inner(e);
        e.ty = ty.clone();
        ty
    }

    fn call_args(
        &mut self,
        span: Span,
        name: &str,
        params: &[MiniJType],
        args: &mut [Expr],
    ) -> bool {
        let arg_tys: Vec<_> = args.iter_mut().map(|a| self.expr(a)).collect();
        if params.len() != args.len() {
            self.err(
                TypeErrorKind::ArityMismatch,
                span,
                format!(
                    "`{name}` takes {} argument(s) but {} were supplied",
                    params.len(),
                    args.len()
                ),
            );
            return false;
        }
        for ((p, a), arg) in params.iter().zip(arg_tys).zip(args.iter()) {
            if let Some(a) = a {
                self.expect_accepts(p, &a, arg.span);
            }
        }
        true
    }

    fn expr_inner(&mut self, e: &mut Expr) -> Option<MiniJType> {
        let span = e.span;
        match &mut e.kind {
            ExprKind::Literal { value, lexeme } => {
                if let Literal::Int(text) = value {
                    if text.parse::<i32>().is_err() {
                        self.err(
                            TypeErrorKind::LiteralOutOfRange,
                            span,
                            format!("integer literal `{lexeme}` is out of range"),
                        );
                        return None;
                    }
                }
                Some(lit_ty(value))
            }
            ExprKind::Var { name, binding } => {
                if let Some((slot, ty)) = self.scope.lookup(&name.name) {
                    *binding = Binding::Local(slot);
                    return Some(ty);
                }
                if let Some(class) = self.class {
                    if let Some((idx, ty)) = self.table.field(class, &name.name) {
                        *binding = Binding::Field(idx);
                        return Some(ty.clone());
                    }
                }
                self.err(
                    TypeErrorKind::UnknownIdentifier,
                    name.span,
                    format!("cannot find `{}` in this scope", name.name),
                );
                None
            }
            ExprKind::This => match self.class {
                Some(c) => Some(MiniJType::Class(c.to_string())),
                None => {
                    self.err(TypeErrorKind::NoThis, span, "`this` outside of a class");
                    None
                }
            },
            ExprKind::Paren(inner) => self.expr(inner),
            ExprKind::FieldAccess {
                object,
                field,
                slot,
            } => {
                let obj = self.expr(object)?;
                match &obj {
                    MiniJType::Class(c) => match self.table.field(c, &field.name) {
                        Some((idx, ty)) => {
                            *slot = FieldSlot::Field(idx);
                            Some(ty.clone())
                        }
                        None => {
                            self.err(
                                TypeErrorKind::UnknownField,
                                field.span,
                                format!("no field `{}` on `{c}`", field.name),
                            );
                            None
                        }
                    },
                    MiniJType::Array(_) if field.name == "length" => {
                        *slot = FieldSlot::ArrayLength;
                        Some(MiniJType::Int)
                    }
                    other => {
                        self.err(
                            TypeErrorKind::UnknownField,
                            field.span,
                            format!("no field `{}` on `{other}`", field.name),
                        );
                        None
                    }
                }
            }
            ExprKind::ArrayRead { array, index } => {
                let arr = self.expr(array);
                let idx = self.expr(index);
                if let Some(i) = idx {
                    if !i.is_numeric() {
                        self.err(
                            TypeErrorKind::BadIndexType,
                            index.span,
                            format!("array index must be int, found `{i}`"),
                        );
                    }
                }
                match arr? {
                    MiniJType::Array(elem) => Some(*elem),
                    other => {
                        self.err(
                            TypeErrorKind::OperandMismatch,
                            array.span,
                            format!("cannot index into `{other}`"),
                        );
                        None
                    }
                }
            }
            ExprKind::Assign {
                target, op, value, ..
            } => {
                let t = self.expr(target);
                let v = self.expr(value);
                if !Self::is_lvalue(target) {
                    self.err(
                        TypeErrorKind::NotAnLvalue,
                        target.span,
                        "left-hand side is not assignable",
                    );
                    return None;
                }
                let (t, v) = (t?, v?);
                match op {
                    AssignOp::Assign => self.expect_accepts(&t, &v, value.span),
                    AssignOp::Add if t == MiniJType::String => {
                        if !matches!(
                            v,
                            MiniJType::String
                                | MiniJType::Int
                                | MiniJType::Char
                                | MiniJType::Boolean
                        ) {
                            self.err(
                                TypeErrorKind::OperandMismatch,
                                value.span,
                                format!("cannot append `{v}` to a string"),
                            );
                        }
                    }
                    _ => {
                        if !t.is_numeric() || !v.is_numeric() {
                            self.err(
                                TypeErrorKind::OperandMismatch,
                                span,
                                format!(
                                    "`{}` needs numeric operands, found `{t}` and `{v}`",
                                    op.symbol()
                                ),
                            );
                        }
                    }
                }
                Some(t)
            }
            ExprKind::Binary {
                op,
                lhs,
                rhs,
                op_span,
            } => {
                let l = self.expr(lhs);
                let r = self.expr(rhs);
                let (l, r) = (l?, r?);
                let op = *op;
                let mismatch = |me: &mut Self| {
                    me.err(
                        TypeErrorKind::OperandMismatch,
                        *op_span,
                        format!("`{}` cannot be applied to `{l}` and `{r}`", op.symbol()),
                    );
                    None
                };
                match op {
                    BinaryOp::Add if l == MiniJType::String || r == MiniJType::String => {
                        let ok = |t: &MiniJType| {
                            matches!(
                                t,
                                MiniJType::String
                                    | MiniJType::Int
                                    | MiniJType::Char
                                    | MiniJType::Boolean
                            )
                        };
                        if ok(&l) && ok(&r) {
                            Some(MiniJType::String)
                        } else {
                            mismatch(self)
                        }
                    }
                    BinaryOp::Add
                    | BinaryOp::Sub
                    | BinaryOp::Mul
                    | BinaryOp::Div
                    | BinaryOp::Rem => {
                        if l.is_numeric() && r.is_numeric() {
                            Some(MiniJType::Int)
                        } else {
                            mismatch(self)
                        }
                    }
                    BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
                        if l.is_numeric() && r.is_numeric() {
                            Some(MiniJType::Boolean)
                        } else {
                            mismatch(self)
                        }
                    }
                    BinaryOp::Eq | BinaryOp::Ne => {
                        let ok = (l.is_numeric() && r.is_numeric())
                            || (l == MiniJType::Boolean && r == MiniJType::Boolean)
                            || (l.is_reference()
                                && r.is_reference()
                                && (l == r || l == MiniJType::Null || r == MiniJType::Null));
                        if ok {
                            Some(MiniJType::Boolean)
                        } else {
                            mismatch(self)
                        }
                    }
                    BinaryOp::And | BinaryOp::Or => {
                        if l == MiniJType::Boolean && r == MiniJType::Boolean {
                            Some(MiniJType::Boolean)
                        } else {
                            mismatch(self)
                        }
                    }
                }
            }
            ExprKind::Prefix {
                op,
                operand,
                op_span,
            }
            | ExprKind::Postfix {
                op,
                operand,
                op_span,
            } => {
                let t = self.expr(operand)?;
                match op {
                    UnaryOp::Not if t == MiniJType::Boolean => Some(MiniJType::Boolean),
                    UnaryOp::Neg if t.is_numeric() => Some(MiniJType::Int),
                    UnaryOp::Inc | UnaryOp::Dec if t.is_numeric() => {
                        if Self::is_lvalue(operand) {
                            Some(t)
                        } else {
                            self.err(
                                TypeErrorKind::NotAnLvalue,
                                operand.span,
                                format!("`{}` needs a variable", op.symbol()),
                            );
                            None
                        }
                    }
                    _ => {
                        self.err(
                            TypeErrorKind::OperandMismatch,
                            *op_span,
                            format!("`{}` cannot be applied to `{t}`", op.symbol()),
                        );
                        None
                    }
                }
            }
            ExprKind::Call {
                receiver,
                method,
                args,
                target,
            } => {
                let class = match receiver {
                    Some(r) => match self.expr(r) {
                        Some(MiniJType::Class(c)) => Some(c),
                        Some(other) => {
                            self.err(
                                TypeErrorKind::UnknownMethod,
                                method.span,
                                format!("no method `{}` on `{other}`", method.name),
                            );
                            None
                        }
                        None => None,
                    },
                    None => match self.class {
                        Some(c) => Some(c.to_string()),
                        None => {
                            self.err(
                                TypeErrorKind::UnknownMethod,
                                method.span,
                                format!("cannot find method `{}`", method.name),
                            );
                            None
                        }
                    },
                };
                let Some(class) = class else {
                    for a in args.iter_mut() {
                        self.expr(a);
                    }
                    return None;
                };
                let table = self.table;
                let csig = &table.classes[&class];
                let Some(sig) = csig.methods.get(&method.name) else {
                    for a in args.iter_mut() {
                        self.expr(a);
                    }
                    self.err(
                        TypeErrorKind::UnknownMethod,
                        method.span,
                        format!("no method `{}` on `{class}`", method.name),
                    );
                    return None;
                };
                if self.call_args(span, &method.name, &sig.params, args) {
                    *target = Some(MethodRef {
                        class: csig.index,
                        method: sig.index,
                    });
                }
                Some(sig.ret.clone())
            }
            ExprKind::StaticCall {
                class,
                method,
                args,
                function,
            } => {
                if class.name != "Math" {
                    for a in args.iter_mut() {
                        self.expr(a);
                    }
                    self.err(
                        TypeErrorKind::UnknownType,
                        class.span,
                        format!("unknown class `{}`", class.name),
                    );
                    return None;
                }
                let Some(f) = MathFn::from_name(&method.name) else {
                    for a in args.iter_mut() {
                        self.expr(a);
                    }
                    self.err(
                        TypeErrorKind::UnknownMethod,
                        method.span,
                        format!("no method `{}` on `Math`", method.name),
                    );
                    return None;
                };
                let params = vec![MiniJType::Int; f.arity()];
                if self.call_args(span, &method.name, &params, args) {
                    *function = Some(f);
                }
                Some(MiniJType::Int)
            }
            ExprKind::Cast { ty, expr } => {
                let to = self.resolve(ty);
                let from = self.expr(expr)?;
                let to = to?;
                let ok = match &to {
                    MiniJType::Int | MiniJType::Char => from.is_numeric(),
                    other => *other == from,
                };
                if ok {
                    Some(to)
                } else {
                    self.err(
                        TypeErrorKind::OperandMismatch,
                        span,
                        format!("cannot cast `{from}` to `{to}`"),
                    );
                    None
                }
            }
            ExprKind::NewArray {
                elem,
                len,
                extra_dims,
            } => {
                let elem_ty = self.resolve(elem);
                if let Some(l) = self.expr(len) {
                    if !l.is_numeric() {
                        self.err(
                            TypeErrorKind::BadIndexType,
                            len.span,
                            format!("array length must be int, found `{l}`"),
                        );
                    }
                }
                let mut ty = elem_ty?;
                if ty == MiniJType::Void {
                    self.err(TypeErrorKind::InvalidVoid, elem.span, "array of void");
                    return None;
                }
                for _ in 0..*extra_dims {
                    ty = MiniJType::array_of(ty);
                }
                Some(MiniJType::array_of(ty))
            }
            ExprKind::NewObject { class, class_idx } => match self.table.class_index(&class.name) {
                Some(i) => {
                    *class_idx = Some(i);
                    Some(MiniJType::Class(class.name.clone()))
                }
                None => {
                    self.err(
                        TypeErrorKind::UnknownType,
                        class.span,
                        format!("unknown class `{}`", class.name),
                    );
                    None
                }
            },
        }
    }
}

/// Whether control can fall off the end of `s`.
fn can_complete(s: &Stmt) -> bool {
    fn is_true(e: &Expr) -> bool {
        matches!(
            e.unparen().kind,
            ExprKind::Literal {
                value: Literal::Bool(true),
                ..
            }
        )
    }
    match &s.kind {
        StmtKind::Return(_) => false,
        StmtKind::Block(b) => b.stmts.iter().all(can_complete),
        StmtKind::If {
            then, els: Some(e), ..
        } => can_complete(then) || can_complete(e),
        StmtKind::While { cond, .. } => !is_true(cond),
        StmtKind::For { cond, .. } => cond.as_ref().is_some_and(|c| !is_true(c)),
        _ => true,
    }
}

fn sort_errors(errors: &mut [TypeError]) {
    errors.sort_by(|a, b| {
        (a.span.start, a.span.end, &a.message).cmp(&(b.span.start, b.span.end, &b.message))
    });
}

/// Type-checks a parsed program, annotating every expression.
pub fn type_check(mut program: Program) -> Result<CheckedProgram, Vec<TypeError>> {
    let mut errors = Vec::new();
    let table = ClassTable::build(&program, &mut errors);

    for class in &mut program.classes {
        let class_name = class.name.name.clone();
        for member in &mut class.members {
            let mut checker = Checker {
                table: &table,
                class: Some(&class_name),
                scope: Scope::new(),
                errors: Vec::new(),
                return_type: None,
            };
            match member {
                Member::Field(f) => {
                    if let Some(init) = &mut f.init {
                        let declared = table.resolve(&f.ty).ok();
                        if let (Some(t), Some(d)) = (checker.expr(init), declared) {
                            checker.expect_accepts(&d, &t, init.span);
                        }
                    }
                }
                Member::Method(m) => {
                    checker.return_type = table.resolve(&m.ret).ok();
                    for p in &m.params {
                        let ty = table.resolve(&p.ty).unwrap_or(MiniJType::Int);
                        if checker.scope.declare(&p.name.name, ty).is_none() {
                            checker.err(
                                TypeErrorKind::Duplicate,
                                p.name.span,
                                format!("parameter `{}` is already defined", p.name.name),
                            );
                        }
                    }
                    checker.block(&mut m.body);
                    let non_void = !(m.ret.base == BaseTypeName::Void && m.ret.dims == 0);
                    if non_void && m.body.stmts.iter().all(can_complete) {
                        checker.err(
                            TypeErrorKind::MissingReturn,
                            m.name.span,
                            format!(
                                "method `{}` may finish without returning a value",
                                m.name.name
                            ),
                        );
                    }
                    m.num_locals = checker.scope.max_slot;
                }
            }
            errors.extend(checker.errors);
        }
    }

    if errors.is_empty() {
        Ok(CheckedProgram { program })
    } else {
        sort_errors(&mut errors);
        Err(errors)
    }
}

/// Checks test bodies against a checked program. Tests see no `this`; they
/// reach the program through `new` and method calls.
pub fn check_tests(
    program: &CheckedProgram,
    tests: &[TestCase],
) -> Result<Vec<TestCase>, Vec<TypeError>> {
    let mut errors = Vec::new();
    let table = ClassTable::build(&program.program, &mut errors);
    let mut out = Vec::with_capacity(tests.len());
    for t in tests {
        let mut t = t.clone();
        let mut checker = Checker {
            table: &table,
            class: None,
            scope: Scope::new(),
            errors: Vec::new(),
            return_type: None,
        };
        checker.block(&mut t.body);
        t.num_locals = checker.scope.max_slot;
        errors.extend(checker.errors);
        out.push(t);
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        sort_errors(&mut errors);
        Err(errors)
    }
}

/// Crate-internal access to the class table of a checked program.
pub(crate) fn class_table(program: &CheckedProgram) -> ClassTable {
    let mut errors = Vec::new();
    ClassTable::build(&program.program, &mut errors)
}
