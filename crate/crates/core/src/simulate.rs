//! Cost-effectiveness simulation of a tester working through mutants.
//!
//! A session repeatedly picks a live mutant at random. If some pool test
//! kills it, one killing test joins the suite and every mutant it kills is
//! removed; otherwise the mutant is judged equivalent and removed. Each
//! pick costs one unit of effort.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::KillMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Any killing test, uniformly.
    #[default]
    Uniform,
    /// A killing test that removes the most live mutants, uniformly among
    /// ties.
    MaxAdditionalKills,
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Policy::Uniform),
            "max-additional-kills" => Ok(Policy::MaxAdditionalKills),
            _ => Err(format!(
                "unknown policy `{s}`; expected uniform or max-additional-kills"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub repetitions: usize,
    pub seed: u64,
    pub effort_cap: Option<usize>,
    pub policy: Policy,
}

impl SimulationConfig {
    pub fn new(seed: u64) -> Self {
        SimulationConfig {
            repetitions: 100,
            seed,
            effort_cap: None,
            policy: Policy::Uniform,
        }
    }
}

/// The kill relation restricted to active tests, by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    /// Killing tests per mutant.
    pub killers: Vec<Vec<usize>>,
    /// Killed mutants per test.
    pub kills: Vec<Vec<usize>>,
    /// Whether each test reveals the real fault.
    pub triggers: Vec<bool>,
}

impl Problem {
    pub fn new(killers: Vec<Vec<usize>>, tests: usize, triggers: Vec<bool>) -> Problem {
        assert_eq!(triggers.len(), tests, "one trigger flag per test");
        let mut kills = vec![Vec::new(); tests];
        for (m, ks) in killers.iter().enumerate() {
            for &t in ks {
                kills[t].push(m);
            }
        }
        Problem {
            killers,
            kills,
            triggers,
        }
    }

    /// Uses the active tests of `matrix`; `triggers` is indexed like
    /// `matrix.tests`.
    pub fn from_matrix(matrix: &KillMatrix, triggers: &[bool]) -> (Problem, Vec<usize>) {
        let active = matrix.active_tests();
        let pos = |t: usize| active.iter().position(|&a| a == t).expect("active test");
        let killers = (0..matrix.mutants.len())
            .map(|m| matrix.killers(m).into_iter().map(pos).collect())
            .collect();
        let trig = active.iter().map(|&t| triggers[t]).collect();
        (Problem::new(killers, active.len(), trig), active)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    TestSelected(usize),
    JudgedEquivalent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub mutant: usize,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub session: usize,
    pub events: Vec<Event>,
    /// Selected tests, in selection order.
    pub suite: Vec<usize>,
    pub effort: usize,
    pub tests_selected: usize,
    pub judged_equivalent: usize,
    pub fault_detected: bool,
    /// Effort at which the first fault-revealing test was selected.
    pub first_detection: Option<usize>,
}

fn pick<R: Rng>(rng: &mut R, n: usize) -> usize {
    rng.gen_range(0..n)
}

pub fn run_session<R: Rng>(
    problem: &Problem,
    rng: &mut R,
    policy: Policy,
    effort_cap: Option<usize>,
    session: usize,
) -> SessionTrace {
    let mut live: Vec<usize> = (0..problem.killers.len()).collect();
    let mut alive = vec![true; problem.killers.len()];
    let mut trace = SessionTrace {
        session,
        events: Vec::new(),
        suite: Vec::new(),
        effort: 0,
        tests_selected: 0,
        judged_equivalent: 0,
        fault_detected: false,
        first_detection: None,
    };
    while !live.is_empty() && effort_cap.is_none_or(|cap| trace.effort < cap) {
        let m = live[pick(rng, live.len())];
        trace.effort += 1;
        let killers = &problem.killers[m];
        if killers.is_empty() {
            alive[m] = false;
            trace.judged_equivalent += 1;
            trace.events.push(Event {
                mutant: m,
                action: Action::JudgedEquivalent,
            });
        } else {
            let t = match policy {
                Policy::Uniform => killers[pick(rng, killers.len())],
                Policy::MaxAdditionalKills => {
                    let gain = |t: usize| problem.kills[t].iter().filter(|&&k| alive[k]).count();
                    let best = killers.iter().map(|&t| gain(t)).max().unwrap_or(0);
                    let tied: Vec<usize> = killers
                        .iter()
                        .copied()
                        .filter(|&t| gain(t) == best)
                        .collect();
                    tied[pick(rng, tied.len())]
                }
            };
            for &k in &problem.kills[t] {
                alive[k] = false;
            }
            trace.tests_selected += 1;
            trace.suite.push(t);
            if problem.triggers[t] && trace.first_detection.is_none() {
                trace.first_detection = Some(trace.effort);
            }
            trace.events.push(Event {
                mutant: m,
                action: Action::TestSelected(t),
            });
        }
        live.retain(|&k| alive[k]);
    }
    trace.fault_detected = trace.first_detection.is_some();
    trace
}

/// RNG of session `index`: the seed picks the key, the index the stream.
pub fn session_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub effort: usize,
    pub effectiveness: f64,
    /// Effort as a percentage of the largest effort observed.
    pub normalized_effort: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub seed: u64,
    pub repetitions: usize,
    pub policy: Policy,
    pub curve: Vec<CurvePoint>,
    pub sessions: Vec<SessionTrace>,
}

impl SimulationResult {
    pub fn mean_effort(&self) -> f64 {
        self.sessions.iter().map(|s| s.effort as f64).sum::<f64>() / self.sessions.len() as f64
    }

    pub fn detection_rate(&self) -> f64 {
        self.sessions.iter().filter(|s| s.fault_detected).count() as f64
            / self.sessions.len() as f64
    }

    pub fn curve_csv(&self) -> String {
        let mut out = String::from("effort,effectiveness,normalized_effort\n");
        for p in &self.curve {
            let _ = writeln!(
                out,
                "{},{},{}",
                p.effort, p.effectiveness, p.normalized_effort
            );
        }
        out
    }
}

/// Effectiveness at each effort `1..=max`: the fraction of sessions whose
/// suite revealed the fault within that effort.
pub fn effectiveness_curve(sessions: &[SessionTrace]) -> Vec<CurvePoint> {
    let max = sessions.iter().map(|s| s.effort).max().unwrap_or(0);
    (1..=max)
        .map(|x| {
            let hit = sessions
                .iter()
                .filter(|s| s.first_detection.is_some_and(|d| d <= x))
                .count();
            CurvePoint {
                effort: x,
                effectiveness: hit as f64 / sessions.len() as f64,
                normalized_effort: 100.0 * x as f64 / max as f64,
            }
        })
        .collect()
}

pub fn run_simulation(problem: &Problem, config: &SimulationConfig) -> SimulationResult {
    assert!(config.repetitions >= 1, "at least one repetition");
    let sessions: Vec<SessionTrace> = (0..config.repetitions)
        .into_par_iter()
        .map(|i| {
            let mut rng = session_rng(config.seed, i);
            run_session(problem, &mut rng, config.policy, config.effort_cap, i)
        })
        .collect();
    SimulationResult {
        seed: config.seed,
        repetitions: config.repetitions,
        policy: config.policy,
        curve: effectiveness_curve(&sessions),
        sessions,
    }
}
