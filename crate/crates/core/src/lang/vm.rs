//! Step-budgeted execution of checked MiniJ programs.
//!
//! Method bodies are lowered to a small stack code and run with
//! heap-allocated frames, so runaway recursion ends in `BudgetExhausted`
//! (or `StackOverflow` at the configured depth) instead of exhausting the
//! host stack. One step is one executed instruction.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::check::{check_tests, class_table, CheckedProgram, ClassTable, TypeError};
use super::types::MiniJType;

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecConfig {
    /// Maximum number of instructions a single test run may execute.
    pub budget: u64,
    pub max_call_depth: usize,
    /// Seed of the `Math.random` generator.
    pub random_seed: u64,
    /// Verify every produced value against its static type.
    pub check_types: bool,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            budget: DEFAULT_BUDGET,
            max_call_depth: 1_000_000,
            random_seed: 0,
            check_types: false,
        }
    }
}

impl ExecConfig {
    pub fn with_budget(budget: u64) -> Self {
        ExecConfig {
            budget,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuntimeErrorKind {
    DivisionByZero,
    NullDereference,
    IndexOutOfBounds,
    NegativeArraySize,
    StackOverflow,
    MissingReturn,
    /// A value disagreed with its static type (only with `check_types`).
    TypeMismatch,
    /// The test does not type-check against the program under test.
    TestDoesNotCompile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    RuntimeError(RuntimeErrorKind),
    BudgetExhausted,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("pass"),
            Verdict::Fail => f.write_str("fail"),
            Verdict::RuntimeError(k) => write!(f, "runtime error ({k:?})"),
            Verdict::BudgetExhausted => f.write_str("budget exhausted"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecOutcome {
    pub verdict: Verdict,
    pub steps: u64,
}

#[derive(Debug, Clone)]
pub enum Value {
    Int(i32),
    Bool(bool),
    Char(u16),
    Str(Rc<str>),
    Null,
    Object(Rc<RefCell<Object>>),
    Array(Rc<RefCell<ArrayObj>>),
}

#[derive(Debug, Clone)]
pub struct Object {
    pub class: u32,
    pub fields: Vec<Value>,
}

#[derive(Debug, Clone)]
pub struct ArrayObj {
    pub elem: Rc<MiniJType>,
    pub items: Vec<Value>,
}

impl Value {
    pub fn as_int(&self) -> Option<i32> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Char(c) => Some(*c as i32),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn default_for(ty: &MiniJType) -> Value {
        match ty {
            MiniJType::Int => Value::Int(0),
            MiniJType::Boolean => Value::Bool(false),
            MiniJType::Char => Value::Char(0),
            _ => Value::Null,
        }
    }

    /// Java-style `==`: numeric by value, strings by content, references by
    /// identity.
    pub fn shallow_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Null, Value::Null) => true,
            (Value::Object(a), Value::Object(b)) => Rc::ptr_eq(a, b),
            (Value::Array(a), Value::Array(b)) => Rc::ptr_eq(a, b),
            (a, b) => match (a.as_int(), b.as_int()) {
                (Some(x), Some(y)) => x == y,
                _ => false,
            },
        }
    }

    fn to_display_string(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Char(c) => char::from_u32(*c as u32).unwrap_or('\u{FFFD}').to_string(),
            Value::Str(s) => s.to_string(),
            Value::Null => "null".to_string(),
            Value::Object(_) => "<object>".to_string(),
            Value::Array(_) => "<array>".to_string(),
        }
    }

    /// Copies the whole reachable object graph, preserving sharing and
    /// cycles.
    pub fn deep_clone(&self) -> Value {
        fn go(v: &Value, seen: &mut HashMap<usize, Value>) -> Value {
            match v {
                Value::Object(o) => {
                    let key = Rc::as_ptr(o) as *const () as usize;
                    if let Some(c) = seen.get(&key) {
                        return c.clone();
                    }
                    let copy = Rc::new(RefCell::new(Object {
                        class: o.borrow().class,
                        fields: Vec::new(),
                    }));
                    seen.insert(key, Value::Object(copy.clone()));
                    let fields: Vec<Value> =
                        o.borrow().fields.iter().map(|f| go(f, seen)).collect();
                    copy.borrow_mut().fields = fields;
                    Value::Object(copy)
                }
                Value::Array(a) => {
                    let key = Rc::as_ptr(a) as *const () as usize;
                    if let Some(c) = seen.get(&key) {
                        return c.clone();
                    }
                    let copy = Rc::new(RefCell::new(ArrayObj {
                        elem: a.borrow().elem.clone(),
                        items: Vec::new(),
                    }));
                    seen.insert(key, Value::Array(copy.clone()));
                    let items: Vec<Value> = a.borrow().items.iter().map(|f| go(f, seen)).collect();
                    copy.borrow_mut().items = items;
                    Value::Array(copy)
                }
                other => other.clone(),
            }
        }
        go(self, &mut HashMap::new())
    }

    /// Element-wise structural equality over object graphs. Cycles are
    /// handled coinductively: a pair already under comparison counts as
    /// equal.
    pub fn structural_eq(&self, other: &Value) -> bool {
        fn go(a: &Value, b: &Value, assumed: &mut HashSet<(usize, usize)>) -> bool {
            match (a, b) {
                (Value::Object(x), Value::Object(y)) => {
                    let key = (
                        Rc::as_ptr(x) as *const () as usize,
                        Rc::as_ptr(y) as *const () as usize,
                    );
                    if !assumed.insert(key) {
                        return true;
                    }
                    let (x, y) = (x.borrow(), y.borrow());
                    x.class == y.class
                        && x.fields.len() == y.fields.len()
                        && x.fields
                            .iter()
                            .zip(&y.fields)
                            .all(|(p, q)| go(p, q, assumed))
                }
                (Value::Array(x), Value::Array(y)) => {
                    let key = (
                        Rc::as_ptr(x) as *const () as usize,
                        Rc::as_ptr(y) as *const () as usize,
                    );
                    if !assumed.insert(key) {
                        return true;
                    }
                    let (x, y) = (x.borrow(), y.borrow());
                    x.items.len() == y.items.len()
                        && x.items.iter().zip(&y.items).all(|(p, q)| go(p, q, assumed))
                }
                (a, b) => a.shallow_eq(b),
            }
        }
        go(self, other, &mut HashSet::new())
    }

    /// Hash of the reachable state, independent of addresses. Used to show
    /// that observers leave program state untouched.
    pub fn state_hash(&self) -> u64 {
        fn go(
            v: &Value,
            ids: &mut HashMap<usize, usize>,
            h: &mut std::collections::hash_map::DefaultHasher,
        ) {
            match v {
                Value::Int(i) => (0u8, *i).hash(h),
                Value::Bool(b) => (1u8, *b).hash(h),
                Value::Char(c) => (2u8, *c).hash(h),
                Value::Str(s) => (3u8, &**s).hash(h),
                Value::Null => 4u8.hash(h),
                Value::Object(o) => {
                    let key = Rc::as_ptr(o) as *const () as usize;
                    let next = ids.len();
                    match ids.get(&key) {
                        Some(id) => (5u8, *id).hash(h),
                        None => {
                            ids.insert(key, next);
                            (6u8, o.borrow().class).hash(h);
                            for f in &o.borrow().fields {
                                go(f, ids, h);
                            }
                        }
                    }
                }
                Value::Array(a) => {
                    let key = Rc::as_ptr(a) as *const () as usize;
                    let next = ids.len();
                    match ids.get(&key) {
                        Some(id) => (7u8, *id).hash(h),
                        None => {
                            ids.insert(key, next);
                            (8u8, a.borrow().items.len()).hash(h);
                            for f in &a.borrow().items {
                                go(f, ids, h);
                            }
                        }
                    }
                }
            }
        }
        let mut h = std::collections::hash_map::DefaultHasher::new();
        go(self, &mut HashMap::new(), &mut h);
        h.finish()
    }
}

/// Hooks into method entry and exit, used to check assertions at run time.
pub trait ExecObserver {
    fn observes(&self, method: MethodRef) -> bool;
    fn on_enter(&mut self, method: MethodRef, this: &Value, args: &[Value]);
    /// `result` is `None` for void methods. Only called on normal returns.
    fn on_exit(&mut self, method: MethodRef, result: Option<&Value>);
}

#[derive(Debug, Clone)]
enum Op {
    Int(i32),
    Bool(bool),
    Char(u16),
    Str(u32),
    Null,
    Load(u32),
    /// Stores the top of stack, leaving it in place.
    Store(u32),
    This,
    GetField(u32),
    /// `[obj val] -> [val]`
    PutField(u32),
    ArrayLen,
    ArrayGet,
    /// `[arr idx val] -> [val]`
    ArraySet,
    Dup,
    Dup2,
    /// `[a b] -> [b a b]`
    DupX1,
    /// `[a b c] -> [c a b c]`
    DupX2,
    Pop,
    Arith(BinaryOp),
    Cmp(BinaryOp),
    Eq,
    Ne,
    Concat,
    Neg,
    Not,
    ToChar,
    ToInt,
    Jump(usize),
    JumpIfFalse(usize),
    NewObject(u32),
    NewArray(u32),
    Call(MethodRef, u32),
    Math(MathFn),
    Return,
    ReturnVoid,
    Assert,
    MissingReturn,
    End,
    CheckType(u32),
}

#[derive(Debug, Clone)]
struct Code {
    ops: Vec<Op>,
    num_locals: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CodeId {
    Method(MethodRef),
    Init(u32),
    Test(usize),
}

/// A checked program and its tests, lowered and ready to run.
pub struct Executable {
    methods: Vec<Vec<Code>>,
    inits: Vec<Option<Code>>,
    field_defaults: Vec<Vec<Value>>,
    tests: Vec<Code>,
    test_names: Vec<String>,
    class_names: Vec<String>,
    strings: Vec<Rc<str>>,
    types: Vec<Rc<MiniJType>>,
}

struct Compiler<'a> {
    table: &'a ClassTable,
    program: &'a CheckedProgram,
    strings: &'a mut Vec<Rc<str>>,
    string_ids: &'a mut HashMap<String, u32>,
    types: &'a mut Vec<Rc<MiniJType>>,
    check: bool,
    ops: Vec<Op>,
    return_ty: Option<MiniJType>,
}

fn ty_of(e: &Expr) -> &MiniJType {
    e.ty.as_ref().expect("expression not type-checked")
}

impl<'a> Compiler<'a> {
    fn type_id(&mut self, t: &MiniJType) -> u32 {
        if let Some(i) = self.types.iter().position(|x| **x == *t) {
            return i as u32;
        }
        self.types.push(Rc::new(t.clone()));
        (self.types.len() - 1) as u32
    }

    fn string_id(&mut self, s: &str) -> u32 {
        if let Some(i) = self.string_ids.get(s) {
            return *i;
        }
        let id = self.strings.len() as u32;
        self.strings.push(s.into());
        self.string_ids.insert(s.to_string(), id);
        id
    }

    fn emit(&mut self, op: Op) -> usize {
        self.ops.push(op);
        self.ops.len() - 1
    }

    fn here(&self) -> usize {
        self.ops.len()
    }

    fn patch(&mut self, at: usize, target: usize) {
        match &mut self.ops[at] {
            Op::Jump(t) | Op::JumpIfFalse(t) => *t = target,
            _ => unreachable!("patching a non-jump"),
        }
    }

    fn coerce(&mut self, want: &MiniJType, got: &MiniJType) {
        if *want == MiniJType::Int && *got == MiniJType::Char {
            self.emit(Op::ToInt);
        }
    }

    fn default_value(&mut self, ty: &MiniJType) {
        match ty {
            MiniJType::Int => self.emit(Op::Int(0)),
            MiniJType::Boolean => self.emit(Op::Bool(false)),
            MiniJType::Char => self.emit(Op::Char(0)),
            _ => self.emit(Op::Null),
        };
    }

    fn block(&mut self, b: &Block) {
        for s in &b.stmts {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::VarDecl { init, slot, ty, .. } => {
                let declared = self.table.resolve(ty).expect("checked type");
                match init {
                    Some(e) => {
                        self.expr(e);
                        self.coerce(&declared, ty_of(e));
                    }
                    None => self.default_value(&declared),
                }
                self.emit(Op::Store(slot.expect("checked slot")));
                self.emit(Op::Pop);
            }
            StmtKind::Expr(e) => {
                self.expr(e);
                if *ty_of(e) != MiniJType::Void {
                    self.emit(Op::Pop);
                }
            }
            StmtKind::Assert(e) => {
                self.expr(e);
                self.emit(Op::Assert);
            }
            StmtKind::If { cond, then, els } => {
                self.expr(cond);
                let jf = self.emit(Op::JumpIfFalse(0));
                self.stmt(then);
                match els {
                    Some(e) => {
                        let j = self.emit(Op::Jump(0));
                        let here = self.here();
                        self.patch(jf, here);
                        self.stmt(e);
                        let here = self.here();
                        self.patch(j, here);
                    }
                    None => {
                        let here = self.here();
                        self.patch(jf, here);
                    }
                }
            }
            StmtKind::While { cond, body } => {
                let top = self.here();
                self.expr(cond);
                let jf = self.emit(Op::JumpIfFalse(0));
                self.stmt(body);
                self.emit(Op::Jump(top));
                let here = self.here();
                self.patch(jf, here);
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                if let Some(i) = init {
                    self.stmt(i);
                }
                let top = self.here();
                let jf = cond.as_ref().map(|c| {
                    self.expr(c);
                    self.emit(Op::JumpIfFalse(0))
                });
                self.stmt(body);
                for u in update {
                    self.expr(u);
                    if *ty_of(u) != MiniJType::Void {
                        self.emit(Op::Pop);
                    }
                }
                self.emit(Op::Jump(top));
                if let Some(jf) = jf {
                    let here = self.here();
                    self.patch(jf, here);
                }
            }
            StmtKind::Return(value) => match value {
                Some(e) => {
                    self.expr(e);
                    let want = self.return_ty.clone().expect("return type");
                    self.coerce(&want, ty_of(e));
                    self.emit(Op::Return);
                }
                None => {
                    self.emit(Op::ReturnVoid);
                }
            },
            StmtKind::Block(b) => self.block(b),
        }
    }

    /// Arithmetic step of a compound assignment or increment on a location
    /// of type `target`.
    fn update_op(&mut self, target: &MiniJType, op: BinaryOp) {
        if *target == MiniJType::String {
            self.emit(Op::Concat);
        } else {
            self.emit(Op::Arith(op));
            if *target == MiniJType::Char {
                self.emit(Op::ToChar);
            }
        }
    }

    /// Pushes the parts of an lvalue that precede the value: nothing for a
    /// local, the object for a field, array and index for an element.
    fn lvalue_prefix(&mut self, target: &Expr) {
        match &target.unparen().kind {
            ExprKind::Var {
                binding: Binding::Local(_),
                ..
            } => {}
            ExprKind::Var {
                binding: Binding::Field(_),
                ..
            } => {
                self.emit(Op::This);
            }
            ExprKind::FieldAccess { object, .. } => self.expr(object),
            ExprKind::ArrayRead { array, index } => {
                self.expr(array);
                self.expr(index);
            }
            _ => unreachable!("checked lvalue"),
        }
    }

    fn lvalue_width(target: &Expr) -> usize {
        match &target.unparen().kind {
            ExprKind::Var {
                binding: Binding::Local(_),
                ..
            } => 0,
            ExprKind::ArrayRead { .. } => 2,
            _ => 1,
        }
    }

    /// With the lvalue prefix on the stack, pushes the current value while
    /// keeping the prefix.
    fn lvalue_load(&mut self, target: &Expr) {
        match &target.unparen().kind {
            ExprKind::Var {
                binding: Binding::Local(slot),
                ..
            } => {
                self.emit(Op::Load(*slot));
            }
            ExprKind::Var {
                binding: Binding::Field(idx),
                ..
            }
            | ExprKind::FieldAccess {
                slot: FieldSlot::Field(idx),
                ..
            } => {
                self.emit(Op::Dup);
                self.emit(Op::GetField(*idx));
            }
            ExprKind::ArrayRead { .. } => {
                self.emit(Op::Dup2);
                self.emit(Op::ArrayGet);
            }
            _ => unreachable!("checked lvalue"),
        }
    }

    /// Consumes the prefix and the new value, leaving the new value.
    fn lvalue_store(&mut self, target: &Expr) {
        match &target.unparen().kind {
            ExprKind::Var {
                binding: Binding::Local(slot),
                ..
            } => {
                self.emit(Op::Store(*slot));
            }
            ExprKind::Var {
                binding: Binding::Field(idx),
                ..
            }
            | ExprKind::FieldAccess {
                slot: FieldSlot::Field(idx),
                ..
            } => {
                self.emit(Op::PutField(*idx));
            }
            ExprKind::ArrayRead { .. } => {
                self.emit(Op::ArraySet);
            }
            _ => unreachable!("checked lvalue"),
        }
    }

    fn expr(&mut self, e: &Expr) {
        self.expr_inner(e);
        if self.check {
            let ty = ty_of(e).clone();
            if ty != MiniJType::Void {
                let id = self.type_id(&ty);
                self.emit(Op::CheckType(id));
            }
        }
    }

    fn incdec(&mut self, operand: &Expr, op: UnaryOp, postfix: bool) {
        let ty = ty_of(operand).clone();
        let arith = if op == UnaryOp::Inc {
            BinaryOp::Add
        } else {
            BinaryOp::Sub
        };
        self.lvalue_prefix(operand);
        self.lvalue_load(operand);
        if postfix {
            match Self::lvalue_width(operand) {
                0 => self.emit(Op::Dup),
                1 => self.emit(Op::DupX1),
                _ => self.emit(Op::DupX2),
            };
        }
        self.emit(Op::Int(1));
        self.update_op(&ty, arith);
        self.lvalue_store(operand);
        if postfix {
            self.emit(Op::Pop);
        }
    }

    fn expr_inner(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Literal { value, .. } => {
                match value {
                    Literal::Int(s) => self.emit(Op::Int(s.parse().expect("checked literal"))),
                    Literal::Bool(b) => self.emit(Op::Bool(*b)),
                    Literal::Char(c) => self.emit(Op::Char(*c as u32 as u16)),
                    Literal::Str(s) => {
                        let id = self.string_id(s);
                        self.emit(Op::Str(id))
                    }
                    Literal::Null => self.emit(Op::Null),
                };
            }
            ExprKind::Var { binding, .. } => {
                match binding {
                    Binding::Local(slot) => self.emit(Op::Load(*slot)),
                    Binding::Field(idx) => {
                        self.emit(Op::This);
                        self.emit(Op::GetField(*idx))
                    }
                    Binding::Unresolved => unreachable!("unresolved variable"),
                };
            }
            ExprKind::This => {
                self.emit(Op::This);
            }
            ExprKind::Paren(inner) => self.expr(inner),
            ExprKind::FieldAccess { object, slot, .. } => {
                self.expr(object);
                match slot {
                    FieldSlot::Field(idx) => self.emit(Op::GetField(*idx)),
                    FieldSlot::ArrayLength => self.emit(Op::ArrayLen),
                    FieldSlot::Unresolved => unreachable!("unresolved field"),
                };
            }
            ExprKind::ArrayRead { array, index } => {
                self.expr(array);
                self.expr(index);
                self.emit(Op::ArrayGet);
            }
            ExprKind::Assign {
                target, op, value, ..
            } => {
                let tty = ty_of(target).clone();
                self.lvalue_prefix(target);
                match op.binary() {
                    None => {
                        self.expr(value);
                        self.coerce(&tty, ty_of(value));
                    }
                    Some(bop) => {
                        self.lvalue_load(target);
                        self.expr(value);
                        self.update_op(&tty, bop);
                    }
                }
                self.lvalue_store(target);
            }
            ExprKind::Binary { op, lhs, rhs, .. } => match op {
                BinaryOp::And => {
                    self.expr(lhs);
                    let jf = self.emit(Op::JumpIfFalse(0));
                    self.expr(rhs);
                    let j = self.emit(Op::Jump(0));
                    let here = self.here();
                    self.patch(jf, here);
                    self.emit(Op::Bool(false));
                    let here = self.here();
                    self.patch(j, here);
                }
                BinaryOp::Or => {
                    self.expr(lhs);
                    let jf = self.emit(Op::JumpIfFalse(0));
                    self.emit(Op::Bool(true));
                    let j = self.emit(Op::Jump(0));
                    let here = self.here();
                    self.patch(jf, here);
                    self.expr(rhs);
                    let here = self.here();
                    self.patch(j, here);
                }
                _ => {
                    self.expr(lhs);
                    self.expr(rhs);
                    match op {
                        BinaryOp::Add if *ty_of(e) == MiniJType::String => self.emit(Op::Concat),
                        BinaryOp::Add
                        | BinaryOp::Sub
                        | BinaryOp::Mul
                        | BinaryOp::Div
                        | BinaryOp::Rem => self.emit(Op::Arith(*op)),
                        BinaryOp::Eq => self.emit(Op::Eq),
                        BinaryOp::Ne => self.emit(Op::Ne),
                        _ => self.emit(Op::Cmp(*op)),
                    };
                }
            },
            ExprKind::Prefix { op, operand, .. } => match op {
                UnaryOp::Not => {
                    self.expr(operand);
                    self.emit(Op::Not);
                }
                UnaryOp::Neg => {
                    self.expr(operand);
                    self.emit(Op::Neg);
                }
                UnaryOp::Inc | UnaryOp::Dec => self.incdec(operand, *op, false),
            },
            ExprKind::Postfix { op, operand, .. } => self.incdec(operand, *op, true),
            ExprKind::Call {
                receiver,
                args,
                target,
                ..
            } => {
                let target = target.expect("resolved call");
                match receiver {
                    Some(r) => self.expr(r),
                    None => {
                        self.emit(Op::This);
                    }
                }
                let decl = self.program.method_by_ref(target);
                let params: Vec<MiniJType> = decl
                    .params
                    .iter()
                    .map(|p| self.table.resolve(&p.ty).expect("checked param"))
                    .collect();
                for (a, p) in args.iter().zip(&params) {
                    self.expr(a);
                    self.coerce(p, ty_of(a));
                }
                self.emit(Op::Call(target, args.len() as u32));
            }
            ExprKind::StaticCall { args, function, .. } => {
                for a in args {
                    self.expr(a);
                }
                self.emit(Op::Math(function.expect("resolved static call")));
            }
            ExprKind::Cast { expr, .. } => {
                self.expr(expr);
                match ty_of(e) {
                    MiniJType::Int => {
                        self.emit(Op::ToInt);
                    }
                    MiniJType::Char => {
                        self.emit(Op::ToChar);
                    }
                    _ => {}
                }
            }
            ExprKind::NewArray { len, .. } => {
                self.expr(len);
                let id = self.type_id(&ty_of(e).clone());
                self.emit(Op::NewArray(id));
            }
            ExprKind::NewObject { class_idx, .. } => {
                self.emit(Op::NewObject(class_idx.expect("resolved class")));
            }
        }
    }
}

impl Executable {
    /// Lowers `program` and checks and lowers `tests` against it.
    pub fn new(
        program: &CheckedProgram,
        tests: &[TestCase],
        check_types: bool,
    ) -> Result<Executable, Vec<TypeError>> {
        let checked_tests = check_tests(program, tests)?;
        let table = class_table(program);
        let mut strings = Vec::new();
        let mut string_ids = HashMap::new();
        let mut types = Vec::new();
        let mut methods = Vec::new();
        let mut inits = Vec::new();
        let mut field_defaults = Vec::new();

        macro_rules! compiler {
            ($ret:expr) => {
                Compiler {
                    table: &table,
                    program,
                    strings: &mut strings,
                    string_ids: &mut string_ids,
                    types: &mut types,
                    check: check_types,
                    ops: Vec::new(),
                    return_ty: $ret,
                }
            };
        }

        for class in &program.classes {
            let mut codes = Vec::new();
            for m in class.methods() {
                let ret = table.resolve(&m.ret).expect("checked return type");
                let void = ret == MiniJType::Void;
                let mut c = compiler!(Some(ret));
                c.block(&m.body);
                c.emit(if void {
                    Op::ReturnVoid
                } else {
                    Op::MissingReturn
                });
                codes.push(Code {
                    ops: c.ops,
                    num_locals: m.num_locals,
                });
            }
            methods.push(codes);

            let mut defaults = Vec::new();
            let mut c = compiler!(None);
            let mut has_init = false;
            for (i, f) in class.fields().enumerate() {
                let ty = table.resolve(&f.ty).expect("checked field type");
                defaults.push(Value::default_for(&ty));
                if let Some(init) = &f.init {
                    has_init = true;
                    c.emit(Op::This);
                    c.expr(init);
                    c.coerce(&ty, ty_of(init));
                    c.emit(Op::PutField(i as u32));
                    c.emit(Op::Pop);
                }
            }
            c.emit(Op::ReturnVoid);
            inits.push(has_init.then_some(Code {
                ops: c.ops,
                num_locals: 0,
            }));
            field_defaults.push(defaults);
        }

        let mut test_codes = Vec::new();
        for t in &checked_tests {
            let mut c = compiler!(None);
            c.block(&t.body);
            c.emit(Op::End);
            test_codes.push(Code {
                ops: c.ops,
                num_locals: t.num_locals,
            });
        }

        Ok(Executable {
            methods,
            inits,
            field_defaults,
            tests: test_codes,
            test_names: checked_tests.into_iter().map(|t| t.name).collect(),
            class_names: program
                .classes
                .iter()
                .map(|c| c.name.name.clone())
                .collect(),
            strings,
            types,
        })
    }

    pub fn test_count(&self) -> usize {
        self.tests.len()
    }

    pub fn test_name(&self, i: usize) -> &str {
        &self.test_names[i]
    }

    fn code(&self, id: CodeId) -> &Code {
        match id {
            CodeId::Method(r) => &self.methods[r.class as usize][r.method as usize],
            CodeId::Init(c) => self.inits[c as usize]
                .as_ref()
                .expect("class has initializer"),
            CodeId::Test(i) => &self.tests[i],
        }
    }

    /// Runs test `index`. Never panics on program behavior: every failure
    /// mode is encoded in the returned verdict.
    pub fn run(
        &self,
        index: usize,
        config: &ExecConfig,
        observer: Option<&mut dyn ExecObserver>,
    ) -> ExecOutcome {
        let mut m = Machine {
            exe: self,
            config,
            observer,
            frames: Vec::new(),
            stack: Vec::new(),
            locals: Vec::new(),
            steps: 0,
            rng: (config.random_seed ^ 0x5DEE_CE66D) & ((1 << 48) - 1),
        };
        let verdict = m.run(index);
        ExecOutcome {
            verdict,
            steps: m.steps,
        }
    }
}

struct Frame {
    code: CodeId,
    pc: usize,
    locals_base: usize,
    this: Value,
    observed: bool,
}

struct Machine<'a, 'o> {
    exe: &'a Executable,
    config: &'a ExecConfig,
    observer: Option<&'o mut dyn ExecObserver>,
    frames: Vec<Frame>,
    stack: Vec<Value>,
    locals: Vec<Value>,
    steps: u64,
    rng: u64,
}

type Step = Result<(), Verdict>;

fn rt(kind: RuntimeErrorKind) -> Verdict {
    Verdict::RuntimeError(kind)
}

impl<'a, 'o> Machine<'a, 'o> {
    fn pop(&mut self) -> Value {
        self.stack.pop().expect("operand stack underflow")
    }

    fn pop_int(&mut self) -> i32 {
        self.pop().as_int().expect("int operand")
    }

    fn pop_bool(&mut self) -> bool {
        self.pop().as_bool().expect("boolean operand")
    }

    fn push_frame(&mut self, code: CodeId, this: Value, args: Vec<Value>) -> Step {
        if self.frames.len() >= self.config.max_call_depth {
            return Err(rt(RuntimeErrorKind::StackOverflow));
        }
        let observed = match (code, self.observer.as_deref_mut()) {
            (CodeId::Method(r), Some(obs)) if obs.observes(r) => {
                obs.on_enter(r, &this, &args);
                true
            }
            _ => false,
        };
        let base = self.locals.len();
        let n = self.exe.code(code).num_locals as usize;
        self.locals.extend(args);
        self.locals
            .resize(base + n.max(self.locals.len() - base), Value::Null);
        self.frames.push(Frame {
            code,
            pc: 0,
            locals_base: base,
            this,
            observed,
        });
        Ok(())
    }

    fn pop_frame(&mut self, result: Option<Value>) {
        let f = self.frames.pop().expect("frame underflow");
        if f.observed {
            if let (CodeId::Method(r), Some(obs)) = (f.code, self.observer.as_deref_mut()) {
                obs.on_exit(r, result.as_ref());
            }
        }
        self.locals.truncate(f.locals_base);
        if let Some(v) = result {
            self.stack.push(v);
        }
    }

    fn check_value(&self, v: &Value, ty: &MiniJType) -> bool {
        match (ty, v) {
            (MiniJType::Int, Value::Int(_)) => true,
            (MiniJType::Char, Value::Char(_)) => true,
            (MiniJType::Boolean, Value::Bool(_)) => true,
            (
                MiniJType::String | MiniJType::Class(_) | MiniJType::Array(_) | MiniJType::Null,
                Value::Null,
            ) => true,
            (MiniJType::String, Value::Str(_)) => true,
            (MiniJType::Class(c), Value::Object(o)) => self
                .exe_class_name(o.borrow().class)
                .is_some_and(|n| n == c),
            (MiniJType::Array(elem), Value::Array(a)) => *a.borrow().elem == **elem,
            _ => false,
        }
    }

    fn exe_class_name(&self, class: u32) -> Option<&str> {
        self.exe.class_names.get(class as usize).map(|s| s.as_str())
    }

    fn run(&mut self, test: usize) -> Verdict {
        if let Err(v) = self.push_frame(CodeId::Test(test), Value::Null, Vec::new()) {
            return v;
        }
        loop {
            if self.steps >= self.config.budget {
                self.steps = self.config.budget;
                return Verdict::BudgetExhausted;
            }
            self.steps += 1;
            match self.step() {
                Ok(()) => {}
                Err(v) => return v,
            }
        }
    }

    fn step(&mut self) -> Step {
        let frame = self.frames.last_mut().expect("no frame");
        let code = self.exe.code(frame.code);
        let op = &code.ops[frame.pc];
        frame.pc += 1;
        match op {
            Op::Int(i) => self.stack.push(Value::Int(*i)),
            Op::Bool(b) => self.stack.push(Value::Bool(*b)),
            Op::Char(c) => self.stack.push(Value::Char(*c)),
            Op::Str(id) => self
                .stack
                .push(Value::Str(self.exe.strings[*id as usize].clone())),
            Op::Null => self.stack.push(Value::Null),
            Op::Load(slot) => {
                let v = self.locals[frame.locals_base + *slot as usize].clone();
                self.stack.push(v);
            }
            Op::Store(slot) => {
                let v = self.stack.last().expect("store operand").clone();
                let base = frame.locals_base;
                self.locals[base + *slot as usize] = v;
            }
            Op::This => {
                let this = frame.this.clone();
                self.stack.push(this);
            }
            Op::GetField(idx) => {
                let v = match self.pop() {
                    Value::Object(o) => o.borrow().fields[*idx as usize].clone(),
                    _ => return Err(rt(RuntimeErrorKind::NullDereference)),
                };
                self.stack.push(v);
            }
            Op::PutField(idx) => {
                let v = self.pop();
                match self.pop() {
                    Value::Object(o) => o.borrow_mut().fields[*idx as usize] = v.clone(),
                    _ => return Err(rt(RuntimeErrorKind::NullDereference)),
                }
                self.stack.push(v);
            }
            Op::ArrayLen => {
                let n = match self.pop() {
                    Value::Array(a) => a.borrow().items.len() as i32,
                    _ => return Err(rt(RuntimeErrorKind::NullDereference)),
                };
                self.stack.push(Value::Int(n));
            }
            Op::ArrayGet => {
                let idx = self.pop_int();
                let v = match self.pop() {
                    Value::Array(a) => {
                        let a = a.borrow();
                        if idx < 0 || idx as usize >= a.items.len() {
                            return Err(rt(RuntimeErrorKind::IndexOutOfBounds));
                        }
                        a.items[idx as usize].clone()
                    }
                    _ => return Err(rt(RuntimeErrorKind::NullDereference)),
                };
                self.stack.push(v);
            }
            Op::ArraySet => {
                let v = self.pop();
                let idx = self.pop_int();
                match self.pop() {
                    Value::Array(a) => {
                        let mut a = a.borrow_mut();
                        if idx < 0 || idx as usize >= a.items.len() {
                            return Err(rt(RuntimeErrorKind::IndexOutOfBounds));
                        }
                        a.items[idx as usize] = v.clone();
                    }
                    _ => return Err(rt(RuntimeErrorKind::NullDereference)),
                }
                self.stack.push(v);
            }
            Op::Dup => {
                let v = self.stack.last().expect("dup operand").clone();
                self.stack.push(v);
            }
            Op::Dup2 => {
                let n = self.stack.len();
                let (a, b) = (self.stack[n - 2].clone(), self.stack[n - 1].clone());
                self.stack.push(a);
                self.stack.push(b);
            }
            Op::DupX1 => {
                let n = self.stack.len();
                let top = self.stack[n - 1].clone();
                self.stack.insert(n - 2, top);
            }
            Op::DupX2 => {
                let n = self.stack.len();
                let top = self.stack[n - 1].clone();
                self.stack.insert(n - 3, top);
            }
            Op::Pop => {
                self.pop();
            }
            Op::Arith(op) => {
                let r = self.pop_int();
                let l = self.pop_int();
                let v = match op {
                    BinaryOp::Add => l.wrapping_add(r),
                    BinaryOp::Sub => l.wrapping_sub(r),
                    BinaryOp::Mul => l.wrapping_mul(r),
                    BinaryOp::Div | BinaryOp::Rem if r == 0 => {
                        return Err(rt(RuntimeErrorKind::DivisionByZero))
                    }
                    BinaryOp::Div => l.wrapping_div(r),
                    BinaryOp::Rem => l.wrapping_rem(r),
                    _ => unreachable!("non-arithmetic operator"),
                };
                self.stack.push(Value::Int(v));
            }
            Op::Cmp(op) => {
                let r = self.pop_int();
                let l = self.pop_int();
                let v = match op {
                    BinaryOp::Lt => l < r,
                    BinaryOp::Le => l <= r,
                    BinaryOp::Gt => l > r,
                    BinaryOp::Ge => l >= r,
                    _ => unreachable!("non-comparison operator"),
                };
                self.stack.push(Value::Bool(v));
            }
            Op::Eq | Op::Ne => {
                let r = self.pop();
                let l = self.pop();
                let eq = l.shallow_eq(&r);
                self.stack
                    .push(Value::Bool(if matches!(op, Op::Eq) { eq } else { !eq }));
            }
            Op::Concat => {
                let r = self.pop();
                let l = self.pop();
                let s = l.to_display_string() + &r.to_display_string();
                self.stack.push(Value::Str(s.into()));
            }
            Op::Neg => {
                let v = self.pop_int();
                self.stack.push(Value::Int(v.wrapping_neg()));
            }
            Op::Not => {
                let v = self.pop_bool();
                self.stack.push(Value::Bool(!v));
            }
            Op::ToChar => {
                let v = self.pop_int();
                self.stack.push(Value::Char(v as u16));
            }
            Op::ToInt => {
                let v = self.pop_int();
                self.stack.push(Value::Int(v));
            }
            Op::Jump(t) => frame.pc = *t,
            Op::JumpIfFalse(t) => {
                let t = *t;
                if !self.pop_bool() {
                    self.frames.last_mut().unwrap().pc = t;
                }
            }
            Op::NewObject(class) => {
                let obj = Value::Object(Rc::new(RefCell::new(Object {
                    class: *class,
                    fields: self.exe.field_defaults[*class as usize].clone(),
                })));
                self.stack.push(obj.clone());
                if self.exe.inits[*class as usize].is_some() {
                    self.push_frame(CodeId::Init(*class), obj, Vec::new())?;
                }
            }
            Op::NewArray(ty) => {
                let len = self.pop_int();
                if len < 0 {
                    return Err(rt(RuntimeErrorKind::NegativeArraySize));
                }
                let elem = match &*self.exe.types[*ty as usize] {
                    MiniJType::Array(e) => Rc::new((**e).clone()),
                    _ => unreachable!("array type"),
                };
                let items = vec![Value::default_for(&elem); len as usize];
                self.stack.push(Value::Array(Rc::new(RefCell::new(ArrayObj {
                    elem,
                    items,
                }))));
            }
            Op::Call(target, argc) => {
                let (target, argc) = (*target, *argc as usize);
                let args = self.stack.split_off(self.stack.len() - argc);
                let recv = self.pop();
                if matches!(recv, Value::Null) {
                    return Err(rt(RuntimeErrorKind::NullDereference));
                }
                self.push_frame(CodeId::Method(target), recv, args)?;
            }
            Op::Math(f) => {
                let v = match f {
                    MathFn::Abs => self.pop_int().wrapping_abs(),
                    MathFn::Min => {
                        let b = self.pop_int();
                        let a = self.pop_int();
                        a.min(b)
                    }
                    MathFn::Max => {
                        let b = self.pop_int();
                        let a = self.pop_int();
                        a.max(b)
                    }
                    MathFn::Random => {
                        self.rng = (self.rng.wrapping_mul(0x5DEE_CE66D).wrapping_add(0xB))
                            & ((1 << 48) - 1);
                        (self.rng >> 17) as i32
                    }
                };
                self.stack.push(Value::Int(v));
            }
            Op::Return => {
                let v = self.pop();
                self.pop_frame(Some(v));
            }
            Op::ReturnVoid => self.pop_frame(None),
            Op::Assert => {
                if !self.pop_bool() {
                    return Err(Verdict::Fail);
                }
            }
            Op::MissingReturn => return Err(rt(RuntimeErrorKind::MissingReturn)),
            Op::End => return Err(Verdict::Pass),
            Op::CheckType(ty) => {
                let ty = self.exe.types[*ty as usize].clone();
                let v = self.stack.last().expect("checked value");
                if !self.check_value(v, &ty) {
                    return Err(rt(RuntimeErrorKind::TypeMismatch));
                }
            }
        }
        Ok(())
    }
}

/// Type-checks `test` against `program` and runs it. Never aborts: a test
/// that does not compile against the program yields
/// `RuntimeError(TestDoesNotCompile)`.
pub fn run_test(program: &CheckedProgram, test: &TestCase, config: &ExecConfig) -> ExecOutcome {
    match Executable::new(program, std::slice::from_ref(test), config.check_types) {
        Ok(exe) => exe.run(0, config, None),
        Err(_) => ExecOutcome {
            verdict: Verdict::RuntimeError(RuntimeErrorKind::TestDoesNotCompile),
            steps: 0,
        },
    }
}
