//! Method postconditions and the mutation-based assertion filter.
//!
//! An `.mjassert` file holds one `Class.method :: formula` per line. A
//! formula is a MiniJ expression over the parameters, the fields of
//! `this`, `res` (the return value), `old(e)` (the value of `e` on entry)
//! and `abs(e)`. `==` compares objects and arrays structurally.

mod eval;

use std::fmt;

use thiserror::Error;

use crate::lang::ast::{BinaryOp, Binding, Expr, ExprKind, Literal, MethodRef, UnaryOp};
use crate::lang::check::class_table;
use crate::lang::{lex, parse_expression, CheckedProgram, MiniJType};

pub use eval::{
    evaluate_assertion, filter_assertions, AssertionStatus, AssertionVerdict, Evaluation,
    FilterReport, RejectedAssertion, Violation, ViolationKind,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct AssertionError {
    pub line: usize,
    pub message: String,
}

/// Formula after name resolution. `Old(i)` refers to the i-th entry
/// snapshot of the owning assertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Formula {
    Int(i32),
    Bool(bool),
    Char(u16),
    Str(String),
    Null,
    Res,
    This,
    Param(usize),
    Field(Box<Formula>, u32),
    Length(Box<Formula>),
    Index(Box<Formula>, Box<Formula>),
    Old(usize),
    Abs(Box<Formula>),
    Binary(BinaryOp, Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Neg(Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssertionSpec {
    /// 1-based line in the source file.
    pub line: usize,
    pub subject_name: String,
    pub formula_text: String,
    pub subject: MethodRef,
    pub(crate) formula: Formula,
    pub(crate) olds: Vec<Formula>,
}

impl fmt::Display for AssertionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :: {}", self.subject_name, self.formula_text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Inside `old(..)`: no `res`, no nested `old`.
    Entry,
    Exit,
}

struct Typer<'a> {
    program: &'a CheckedProgram,
    class: String,
    params: Vec<(String, MiniJType)>,
    ret: MiniJType,
    olds: Vec<Formula>,
}

type Typed = Result<(Formula, MiniJType), String>;

impl<'a> Typer<'a> {
    fn field_of(&self, class: &str, name: &str) -> Option<(u32, MiniJType)> {
        class_table(self.program)
            .field(class, name)
            .map(|(i, t)| (i, t.clone()))
    }

    fn expr(&mut self, e: &Expr, phase: Phase) -> Typed {
        use MiniJType as T;
        match &e.kind {
            ExprKind::Literal { value, .. } => Ok(match value {
                Literal::Int(s) => (
                    Formula::Int(
                        s.parse()
                            .map_err(|_| format!("integer literal {s} out of range"))?,
                    ),
                    T::Int,
                ),
                Literal::Bool(b) => (Formula::Bool(*b), T::Boolean),
                Literal::Char(c) => (Formula::Char(*c as u32 as u16), T::Char),
                Literal::Str(s) => (Formula::Str(s.clone()), T::String),
                Literal::Null => (Formula::Null, T::Null),
            }),
            ExprKind::Var { name, binding } => {
                debug_assert_eq!(*binding, Binding::Unresolved);
                let n = name.name.as_str();
                if let Some(i) = self.params.iter().position(|(p, _)| p == n) {
                    return Ok((Formula::Param(i), self.params[i].1.clone()));
                }
                if n == "res" {
                    if phase == Phase::Entry {
                        return Err("`res` is not available inside old()".to_string());
                    }
                    if self.ret == T::Void {
                        return Err("`res` used on a void method".to_string());
                    }
                    return Ok((Formula::Res, self.ret.clone()));
                }
                match self.field_of(&self.class, n) {
                    Some((i, t)) => Ok((Formula::Field(Box::new(Formula::This), i), t)),
                    None => Err(format!("unknown name `{n}`")),
                }
            }
            ExprKind::This => Ok((Formula::This, T::Class(self.class.clone()))),
            ExprKind::Paren(inner) => self.expr(inner, phase),
            ExprKind::FieldAccess { object, field, .. } => {
                let (f, t) = self.expr(object, phase)?;
                match &t {
                    T::Array(_) if field.name == "length" => {
                        Ok((Formula::Length(Box::new(f)), T::Int))
                    }
                    T::Class(c) => match self.field_of(c, &field.name) {
                        Some((i, ft)) => Ok((Formula::Field(Box::new(f), i), ft)),
                        None => Err(format!("class `{c}` has no field `{}`", field.name)),
                    },
                    _ => Err(format!("no field `{}` on {t}", field.name)),
                }
            }
            ExprKind::ArrayRead { array, index } => {
                let (a, at) = self.expr(array, phase)?;
                let (i, it) = self.expr(index, phase)?;
                if !it.is_numeric() {
                    return Err(format!("array index of type {it}"));
                }
                match at {
                    T::Array(elem) => Ok((Formula::Index(Box::new(a), Box::new(i)), *elem)),
                    other => Err(format!("indexing a value of type {other}")),
                }
            }
            ExprKind::Call {
                receiver: None,
                method,
                args,
                ..
            } if args.len() == 1 && (method.name == "old" || method.name == "abs") => {
                if method.name == "old" {
                    if phase == Phase::Entry {
                        return Err("nested old()".to_string());
                    }
                    let (f, t) = self.expr(&args[0], Phase::Entry)?;
                    self.olds.push(f);
                    Ok((Formula::Old(self.olds.len() - 1), t))
                } else {
                    let (f, t) = self.expr(&args[0], phase)?;
                    if !t.is_numeric() {
                        return Err(format!("abs() of {t}"));
                    }
                    Ok((Formula::Abs(Box::new(f)), T::Int))
                }
            }
            ExprKind::Binary { op, lhs, rhs, .. } => {
                let (l, lt) = self.expr(lhs, phase)?;
                let (r, rt) = self.expr(rhs, phase)?;
                let bin = |t| {
                    Ok((
                        Formula::Binary(*op, Box::new(l.clone()), Box::new(r.clone())),
                        t,
                    ))
                };
                use BinaryOp::*;
                match op {
                    Add | Sub | Mul | Div | Rem if lt.is_numeric() && rt.is_numeric() => {
                        bin(T::Int)
                    }
                    Lt | Le | Gt | Ge if lt.is_numeric() && rt.is_numeric() => bin(T::Boolean),
                    And | Or if lt == T::Boolean && rt == T::Boolean => bin(T::Boolean),
                    Eq | Ne if lt.accepts(&rt) || rt.accepts(&lt) => bin(T::Boolean),
                    _ => Err(format!("operator {} on {lt} and {rt}", op.symbol())),
                }
            }
            ExprKind::Prefix { op, operand, .. } => {
                let (f, t) = self.expr(operand, phase)?;
                match op {
                    UnaryOp::Not if t == T::Boolean => Ok((Formula::Not(Box::new(f)), T::Boolean)),
                    UnaryOp::Neg if t.is_numeric() => Ok((Formula::Neg(Box::new(f)), T::Int)),
                    _ => Err(format!("operator {} on {t}", op.symbol())),
                }
            }
            _ => Err("expression form not allowed in assertions".to_string()),
        }
    }
}

/// Resolves `subject` (`Class.method`) and types `formula` against it.
pub fn compile_assertion(
    program: &CheckedProgram,
    subject: &str,
    formula: &str,
    line: usize,
) -> Result<AssertionSpec, AssertionError> {
    let err = |message: String| AssertionError { line, message };
    let (class, method) = subject
        .trim()
        .split_once('.')
        .ok_or_else(|| err(format!("subject `{subject}` is not Class.method")))?;
    let mref = program
        .find_method(class, method)
        .ok_or_else(|| err(format!("unknown method `{subject}`")))?;
    let decl = program.method_by_ref(mref);
    let table = class_table(program);
    let params = decl
        .params
        .iter()
        .map(|p| {
            table
                .resolve(&p.ty)
                .map(|t| (p.name.name.clone(), t))
                .map_err(|e| err(e.message))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ret = table.resolve(&decl.ret).map_err(|e| err(e.message))?;
    let tokens = lex(formula).map_err(|e| err(format!("lexical error at {}", e[0].span())))?;
    let expr = parse_expression(&tokens).map_err(|e| err(e.to_string()))?;
    let mut typer = Typer {
        program,
        class: class.to_string(),
        params,
        ret,
        olds: Vec::new(),
    };
    let (f, t) = typer.expr(&expr, Phase::Exit).map_err(err)?;
    if t != MiniJType::Boolean {
        return Err(err(format!("formula has type {t}, expected boolean")));
    }
    Ok(AssertionSpec {
        line,
        subject_name: format!("{class}.{method}"),
        formula_text: formula.trim().to_string(),
        subject: mref,
        formula: f,
        olds: typer.olds,
    })
}

/// Parses an `.mjassert` file. Blank lines and `//` comments are skipped.
pub fn parse_assertions(
    program: &CheckedProgram,
    text: &str,
) -> Result<Vec<AssertionSpec>, AssertionError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let (subject, formula) = line.split_once("::").ok_or_else(|| AssertionError {
            line: i + 1,
            message: "expected `Class.method :: formula`".to_string(),
        })?;
        out.push(compile_assertion(program, subject, formula, i + 1)?);
    }
    Ok(out)
}
