//! Canonical source printer. Output re-lexes to the same token sequence
//! (kind and lexeme) as the source the AST was parsed from; comments and
//! original layout are not preserved.

use std::fmt::Write;

use super::ast::*;

pub fn pretty_print(program: &Program) -> String {
    let mut p = Printer::default();
    for (i, c) in program.classes.iter().enumerate() {
        if i > 0 {
            p.out.push('\n');
        }
        p.class(c);
    }
    p.out
}

pub fn pretty_print_tests(tests: &[TestCase]) -> String {
    let mut p = Printer::default();
    for t in tests {
        let _ = write!(p.out, "test {} ", t.name);
        p.block(&t.body);
        p.out.push('\n');
    }
    p.out
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut p = Printer::default();
    p.expr(e);
    p.out
}

#[derive(Default)]
struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn line_start(&mut self) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
    }

    fn class(&mut self, c: &ClassDecl) {
        let _ = writeln!(self.out, "class {} {{", c.name.name);
        self.indent += 1;
        for m in &c.members {
            self.line_start();
            match m {
                Member::Field(f) => {
                    let _ = write!(self.out, "{} {}", f.ty, f.name.name);
                    if let Some(init) = &f.init {
                        self.out.push_str(" = ");
                        self.expr(init);
                    }
                    self.out.push_str(";\n");
                }
                Member::Method(m) => {
                    let _ = write!(self.out, "{} {}(", m.ret, m.name.name);
                    for (i, p) in m.params.iter().enumerate() {
                        if i > 0 {
                            self.out.push_str(", ");
                        }
                        let _ = write!(self.out, "{} {}", p.ty, p.name.name);
                    }
                    self.out.push_str(") ");
                    self.block(&m.body);
                    self.out.push('\n');
                }
            }
        }
        self.indent -= 1;
        self.out.push_str("}\n");
    }

    fn block(&mut self, b: &Block) {
        self.out.push_str("{\n");
        self.indent += 1;
        for s in &b.stmts {
            self.line_start();
            self.stmt(s);
            self.out.push('\n');
        }
        self.indent -= 1;
        self.line_start();
        self.out.push('}');
    }

    fn var_decl(&mut self, ty: &TypeName, name: &Ident, init: &Option<Expr>) {
        let _ = write!(self.out, "{} {}", ty, name.name);
        if let Some(e) = init {
            self.out.push_str(" = ");
            self.expr(e);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::VarDecl { ty, name, init, .. } => {
                self.var_decl(ty, name, init);
                self.out.push(';');
            }
            StmtKind::Expr(e) => {
                self.expr(e);
                self.out.push(';');
            }
            StmtKind::Assert(e) => {
                self.out.push_str("assert ");
                self.expr(e);
                self.out.push(';');
            }
            StmtKind::If { cond, then, els } => {
                self.out.push_str("if (");
                self.expr(cond);
                self.out.push_str(") ");
                self.stmt(then);
                if let Some(e) = els {
                    self.out.push_str(" else ");
                    self.stmt(e);
                }
            }
            StmtKind::While { cond, body } => {
                self.out.push_str("while (");
                self.expr(cond);
                self.out.push_str(") ");
                self.stmt(body);
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                self.out.push_str("for (");
                if let Some(i) = init {
                    match &i.kind {
                        StmtKind::VarDecl { ty, name, init, .. } => self.var_decl(ty, name, init),
                        StmtKind::Expr(e) => self.expr(e),
                        _ => unreachable!("for-init is a declaration or expression"),
                    }
                }
                self.out.push_str("; ");
                if let Some(c) = cond {
                    self.expr(c);
                }
                self.out.push_str("; ");
                for (i, u) in update.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.expr(u);
                }
                self.out.push_str(") ");
                self.stmt(body);
            }
            StmtKind::Return(e) => {
                self.out.push_str("return");
                if let Some(e) = e {
                    self.out.push(' ');
                    self.expr(e);
                }
                self.out.push(';');
            }
            StmtKind::Block(b) => self.block(b),
        }
    }

    fn args(&mut self, args: &[Expr]) {
        self.out.push('(');
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.expr(a);
        }
        self.out.push(')');
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Literal { lexeme, .. } => self.out.push_str(lexeme),
            ExprKind::Var { name, .. } => self.out.push_str(&name.name),
            ExprKind::This => self.out.push_str("this"),
            ExprKind::Paren(inner) => {
                self.out.push('(');
                self.expr(inner);
                self.out.push(')');
            }
            ExprKind::FieldAccess { object, field, .. } => {
                self.expr(object);
                self.out.push('.');
                self.out.push_str(&field.name);
            }
            ExprKind::ArrayRead { array, index } => {
                self.expr(array);
                self.out.push('[');
                self.expr(index);
                self.out.push(']');
            }
            ExprKind::Assign {
                target, op, value, ..
            } => {
                self.expr(target);
                let _ = write!(self.out, " {} ", op.symbol());
                self.expr(value);
            }
            ExprKind::Binary { op, lhs, rhs, .. } => {
                self.expr(lhs);
                let _ = write!(self.out, " {} ", op.symbol());
                self.expr(rhs);
            }
            ExprKind::Prefix { op, operand, .. } => {
                self.out.push_str(op.symbol());
                // keep `- -x` from re-lexing as `--x`
                if matches!(&operand.kind, ExprKind::Prefix { op: inner, .. }
                    if matches!((op, inner), (UnaryOp::Neg, UnaryOp::Neg | UnaryOp::Dec)
                        | (UnaryOp::Inc, _) | (UnaryOp::Dec, _)))
                {
                    self.out.push(' ');
                }
                self.expr(operand);
            }
            ExprKind::Postfix { op, operand, .. } => {
                self.expr(operand);
                self.out.push_str(op.symbol());
            }
            ExprKind::Call {
                receiver,
                method,
                args,
                ..
            } => {
                if let Some(r) = receiver {
                    self.expr(r);
                    self.out.push('.');
                }
                self.out.push_str(&method.name);
                self.args(args);
            }
            ExprKind::StaticCall {
                class,
                method,
                args,
                ..
            } => {
                let _ = write!(self.out, "{}.{}", class.name, method.name);
                self.args(args);
            }
            ExprKind::Cast { ty, expr } => {
                let _ = write!(self.out, "({ty}) ");
                self.expr(expr);
            }
            ExprKind::NewArray {
                elem,
                len,
                extra_dims,
            } => {
                let _ = write!(self.out, "new {elem}[");
                self.expr(len);
                self.out.push(']');
                for _ in 0..*extra_dims {
                    self.out.push_str("[]");
                }
            }
            ExprKind::NewObject { class, .. } => {
                let _ = write!(self.out, "new {}()", class.name);
            }
        }
    }
}
