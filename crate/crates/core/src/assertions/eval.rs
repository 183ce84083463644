use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AssertionSpec, Formula};
use crate::analysis::MutantProgram;
use crate::lang::ast::{BinaryOp, MethodRef};
use crate::lang::vm::ExecObserver;
use crate::lang::{
    CheckedProgram, ExecConfig, Executable, RuntimeErrorKind, TestCase, TypeError, Value,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// The formula evaluated to false.
    False,
    /// Evaluating the formula raised a runtime error.
    EvaluationError(RuntimeErrorKind),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub test: String,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub holds: bool,
    pub counterexample: Option<Violation>,
}

type Eval = Result<Value, RuntimeErrorKind>;

struct Env<'v> {
    this: &'v Value,
    args: &'v [Value],
    res: Option<&'v Value>,
    olds: &'v [Eval],
}

fn int(v: &Value) -> i32 {
    v.as_int().expect("typed numeric operand")
}

fn eval(f: &Formula, env: &Env<'_>) -> Eval {
    use RuntimeErrorKind as E;
    Ok(match f {
        Formula::Int(i) => Value::Int(*i),
        Formula::Bool(b) => Value::Bool(*b),
        Formula::Char(c) => Value::Char(*c),
        Formula::Str(s) => Value::Str(s.as_str().into()),
        Formula::Null => Value::Null,
        Formula::Res => env.res.expect("res checked at compile time").clone(),
        Formula::This => env.this.clone(),
        Formula::Param(i) => env.args[*i].clone(),
        Formula::Field(obj, idx) => match eval(obj, env)? {
            Value::Object(o) => o.borrow().fields[*idx as usize].clone(),
            _ => return Err(E::NullDereference),
        },
        Formula::Length(arr) => match eval(arr, env)? {
            Value::Array(a) => Value::Int(a.borrow().items.len() as i32),
            _ => return Err(E::NullDereference),
        },
        Formula::Index(arr, idx) => {
            let a = eval(arr, env)?;
            let i = int(&eval(idx, env)?);
            match a {
                Value::Array(a) => {
                    let a = a.borrow();
                    if i < 0 || i as usize >= a.items.len() {
                        return Err(E::IndexOutOfBounds);
                    }
                    a.items[i as usize].clone()
                }
                _ => return Err(E::NullDereference),
            }
        }
        Formula::Old(i) => env.olds[*i].clone()?,
        Formula::Abs(e) => Value::Int(int(&eval(e, env)?).wrapping_abs()),
        Formula::Not(e) => Value::Bool(!eval(e, env)?.as_bool().expect("typed boolean")),
        Formula::Neg(e) => Value::Int(int(&eval(e, env)?).wrapping_neg()),
        Formula::Binary(op, l, r) => {
            use BinaryOp::*;
            match op {
                And => {
                    let lv = eval(l, env)?.as_bool().expect("typed boolean");
                    Value::Bool(lv && eval(r, env)?.as_bool().expect("typed boolean"))
                }
                Or => {
                    let lv = eval(l, env)?.as_bool().expect("typed boolean");
                    Value::Bool(lv || eval(r, env)?.as_bool().expect("typed boolean"))
                }
                Eq | Ne => {
                    let eq = eval(l, env)?.structural_eq(&eval(r, env)?);
                    Value::Bool(if *op == Eq { eq } else { !eq })
                }
                _ => {
                    let a = int(&eval(l, env)?);
                    let b = int(&eval(r, env)?);
                    match op {
                        Add => Value::Int(a.wrapping_add(b)),
                        Sub => Value::Int(a.wrapping_sub(b)),
                        Mul => Value::Int(a.wrapping_mul(b)),
                        Div | Rem if b == 0 => return Err(E::DivisionByZero),
                        Div => Value::Int(a.wrapping_div(b)),
                        Rem => Value::Int(a.wrapping_rem(b)),
                        Lt => Value::Bool(a < b),
                        Le => Value::Bool(a <= b),
                        Gt => Value::Bool(a > b),
                        Ge => Value::Bool(a >= b),
                        And | Or | Eq | Ne => unreachable!(),
                    }
                }
            }
        }
    })
}

struct Activation {
    this: Value,
    args: Vec<Value>,
    olds: Vec<Eval>,
}

/// Checks one assertion at every exit of its subject method. Recursive
/// activations each keep their own entry snapshot.
struct Monitor<'a> {
    spec: &'a AssertionSpec,
    stack: Vec<Activation>,
    violation: Option<ViolationKind>,
    /// Reachable-state hashes around each formula evaluation, for tests.
    #[cfg(test)]
    purity: Vec<(u64, u64)>,
}

impl<'a> Monitor<'a> {
    fn new(spec: &'a AssertionSpec) -> Self {
        Monitor {
            spec,
            stack: Vec::new(),
            violation: None,
            #[cfg(test)]
            purity: Vec::new(),
        }
    }
}

#[cfg(test)]
fn state_hash(act: &Activation, res: Option<&Value>) -> u64 {
    let mut all = vec![act.this.clone()];
    all.extend(act.args.iter().cloned());
    all.extend(res.cloned());
    let arr = Value::Array(std::rc::Rc::new(std::cell::RefCell::new(
        crate::lang::vm::ArrayObj {
            elem: std::rc::Rc::new(crate::lang::MiniJType::Null),
            items: all,
        },
    )));
    arr.state_hash()
}

impl ExecObserver for Monitor<'_> {
    fn observes(&self, method: MethodRef) -> bool {
        method == self.spec.subject
    }

    fn on_enter(&mut self, _method: MethodRef, this: &Value, args: &[Value]) {
        let mut act = Activation {
            this: this.clone(),
            args: args.to_vec(),
            olds: Vec::new(),
        };
        let olds = {
            let env = Env {
                this: &act.this,
                args: &act.args,
                res: None,
                olds: &[],
            };
            self.spec
                .olds
                .iter()
                .map(|f| eval(f, &env).map(|v| v.deep_clone()))
                .collect()
        };
        act.olds = olds;
        self.stack.push(act);
    }

    fn on_exit(&mut self, _method: MethodRef, result: Option<&Value>) {
        let act = self.stack.pop().expect("exit without entry");
        if self.violation.is_some() {
            return;
        }
        #[cfg(test)]
        let before = state_hash(&act, result);
        let env = Env {
            this: &act.this,
            args: &act.args,
            res: result,
            olds: &act.olds,
        };
        let outcome = eval(&self.spec.formula, &env);
        #[cfg(test)]
        self.purity.push((before, state_hash(&act, result)));
        self.violation = match outcome {
            Ok(Value::Bool(true)) => None,
            Ok(_) => Some(ViolationKind::False),
            Err(k) => Some(ViolationKind::EvaluationError(k)),
        };
    }
}

/// Several monitors sharing one execution.
struct Monitors<'a>(Vec<Monitor<'a>>);

impl ExecObserver for Monitors<'_> {
    fn observes(&self, method: MethodRef) -> bool {
        self.0.iter().any(|m| m.observes(method))
    }

    fn on_enter(&mut self, method: MethodRef, this: &Value, args: &[Value]) {
        for m in self.0.iter_mut().filter(|m| m.spec.subject == method) {
            m.on_enter(method, this, args);
        }
    }

    fn on_exit(&mut self, method: MethodRef, result: Option<&Value>) {
        for m in self.0.iter_mut().filter(|m| m.spec.subject == method) {
            m.on_exit(method, result);
        }
    }
}

/// The first violation of each spec over the tests of `exe`. Each test
/// runs once for all specs not yet violated.
fn first_violations(
    specs: &[&AssertionSpec],
    exe: &Executable,
    config: &ExecConfig,
) -> Vec<Option<Violation>> {
    let mut out: Vec<Option<Violation>> = vec![None; specs.len()];
    for t in 0..exe.test_count() {
        let open: Vec<usize> = (0..specs.len()).filter(|&i| out[i].is_none()).collect();
        if open.is_empty() {
            break;
        }
        let mut mons = Monitors(open.iter().map(|&i| Monitor::new(specs[i])).collect());
        exe.run(t, config, Some(&mut mons));
        for (&i, m) in open.iter().zip(mons.0) {
            out[i] = m.violation.map(|kind| Violation {
                test: exe.test_name(t).to_string(),
                kind,
            });
        }
    }
    out
}

fn first_violation(
    spec: &AssertionSpec,
    exe: &Executable,
    config: &ExecConfig,
) -> Option<Violation> {
    first_violations(&[spec], exe, config).pop().flatten()
}

/// Runs every test, checking `spec` at each exit of its subject.
pub fn evaluate_assertion(
    spec: &AssertionSpec,
    program: &CheckedProgram,
    tests: &[TestCase],
    config: &ExecConfig,
) -> Result<Evaluation, Vec<TypeError>> {
    let exe = Executable::new(program, tests, config.check_types)?;
    let cx = first_violation(spec, &exe, config);
    Ok(Evaluation {
        holds: cx.is_none(),
        counterexample: cx,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssertionStatus {
    Kept,
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionVerdict {
    pub assertion: String,
    pub line: usize,
    pub status: AssertionStatus,
    pub mutants_evaluated: usize,
    pub mutants_killed: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedAssertion {
    pub assertion: String,
    pub line: usize,
    pub counterexample: Violation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub verdicts: Vec<AssertionVerdict>,
    /// Assertions violated on the original program, never filtered.
    pub rejected: Vec<RejectedAssertion>,
}

/// Keeps the assertions that some mutant violates.
pub fn filter_assertions(
    specs: &[AssertionSpec],
    program: &CheckedProgram,
    mutants: &[MutantProgram],
    tests: &[TestCase],
    config: &ExecConfig,
) -> Result<FilterReport, Vec<TypeError>> {
    let original = Executable::new(program, tests, config.check_types)?;
    let mut valid = Vec::new();
    let mut rejected = Vec::new();
    let all: Vec<&AssertionSpec> = specs.iter().collect();
    for (spec, cx) in specs.iter().zip(first_violations(&all, &original, config)) {
        match cx {
            None => valid.push(spec),
            Some(cx) => rejected.push(RejectedAssertion {
                assertion: spec.to_string(),
                line: spec.line,
                counterexample: cx,
            }),
        }
    }

    // per mutant, which valid assertions it violates
    let hits: Vec<Vec<bool>> = mutants
        .par_iter()
        .map(|m| {
            let exe = match Executable::new(&m.program, tests, config.check_types) {
                Ok(exe) => exe,
                Err(_) => return vec![false; valid.len()],
            };
            first_violations(&valid, &exe, config)
                .into_iter()
                .map(|v| v.is_some())
                .collect()
        })
        .collect();

    let verdicts = valid
        .iter()
        .enumerate()
        .map(|(a, spec)| {
            let killed: Vec<u32> = mutants
                .iter()
                .zip(&hits)
                .filter(|(_, h)| h[a])
                .map(|(m, _)| m.id)
                .collect();
            AssertionVerdict {
                assertion: spec.to_string(),
                line: spec.line,
                status: if killed.is_empty() {
                    AssertionStatus::Discarded
                } else {
                    AssertionStatus::Kept
                },
                mutants_evaluated: mutants.len(),
                mutants_killed: killed,
            }
        })
        .collect();
    Ok(FilterReport { verdicts, rejected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertions::compile_assertion;
    use crate::lang::{compile_source, parse_test_file};

    const LIST: &str = "class Box { int[] items; int size; \
        void push(int x) { items[size] = x; size++; } \
        int pick(int i) { return items[i]; } \
        int fact(int n) { if (n <= 1) return 1; return n * fact(n - 1); } }";

    const TESTS: &str = "test t { Box b = new Box(); b.items = new int[4]; b.push(3); b.push(4); \
        assert b.pick(1) == 4 && b.fact(4) == 24; }";

    fn holds(subject: &str, formula: &str) -> Evaluation {
        let p = compile_source(LIST).unwrap();
        let tests = parse_test_file(TESTS).unwrap();
        let spec = compile_assertion(&p, subject, formula, 1).unwrap();
        evaluate_assertion(&spec, &p, &tests, &ExecConfig::default()).unwrap()
    }

    #[test]
    fn tautology_holds() {
        assert!(holds("Box.pick", "res == res").holds);
    }

    #[test]
    fn old_is_an_entry_snapshot() {
        assert!(holds("Box.push", "size == old(size) + 1").holds);
        assert!(!holds("Box.push", "items == old(items)").holds);
        assert!(holds("Box.pick", "items == old(items)").holds);
    }

    #[test]
    fn recursive_activations_have_own_frames() {
        assert!(holds("Box.fact", "res >= n && n == old(n)").holds);
    }

    #[test]
    fn evaluation_errors_are_violations() {
        let e = holds("Box.pick", "items[i + 10] == 0");
        assert_eq!(
            e.counterexample.unwrap().kind,
            ViolationKind::EvaluationError(RuntimeErrorKind::IndexOutOfBounds)
        );
    }

    #[test]
    fn evaluation_leaves_state_untouched() {
        let p = compile_source(LIST).unwrap();
        let tests = parse_test_file(TESTS).unwrap();
        let exe = Executable::new(&p, &tests, false).unwrap();
        let spec = compile_assertion(&p, "Box.push", "items == old(items) || size > 0", 1).unwrap();
        let mut mon = Monitor::new(&spec);
        exe.run(0, &ExecConfig::default(), Some(&mut mon));
        assert_eq!(mon.purity.len(), 2);
        assert!(mon.purity.iter().all(|(a, b)| a == b));
    }
}
