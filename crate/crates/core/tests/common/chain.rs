//! Exact session statistics by enumerating the session Markov chain.

use std::collections::HashMap;

use mutamask::simulate::{run_simulation, Policy, Problem, SimulationConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome distribution from a live set: (effort, effort of first
/// detection) -> probability.
type Dist = HashMap<(usize, Option<usize>), f64>;

pub struct Chain<'a> {
    killers: &'a [Vec<usize>],
    kills: Vec<u32>,
    triggers: &'a [bool],
    policy: Policy,
    memo: HashMap<u32, Dist>,
}

impl<'a> Chain<'a> {
    pub fn new(
        killers: &'a [Vec<usize>],
        tests: usize,
        triggers: &'a [bool],
        policy: Policy,
    ) -> Self {
        let mut kills = vec![0u32; tests];
        for (m, ks) in killers.iter().enumerate() {
            for &t in ks {
                kills[t] |= 1 << m;
            }
        }
        Chain {
            killers,
            kills,
            triggers,
            policy,
            memo: HashMap::new(),
        }
    }

    fn choices(&self, m: usize, live: u32) -> Vec<usize> {
        let ks = &self.killers[m];
        match self.policy {
            Policy::Uniform => ks.clone(),
            Policy::MaxAdditionalKills => {
                let best = ks
                    .iter()
                    .map(|&t| (self.kills[t] & live).count_ones())
                    .max()
                    .unwrap();
                ks.iter()
                    .copied()
                    .filter(|&t| (self.kills[t] & live).count_ones() == best)
                    .collect()
            }
        }
    }

    pub fn dist(&mut self, live: u32) -> Dist {
        if live == 0 {
            return HashMap::from([((0, None), 1.0)]);
        }
        if let Some(d) = self.memo.get(&live) {
            return d.clone();
        }
        let members: Vec<usize> = (0..32).filter(|&m| live & (1 << m) != 0).collect();
        let mut out = Dist::new();
        for &m in &members {
            let p_m = 1.0 / members.len() as f64;
            let branches: Vec<(u32, bool, f64)> = if self.killers[m].is_empty() {
                vec![(live & !(1 << m), false, p_m)]
            } else {
                let ts = self.choices(m, live);
                ts.iter()
                    .map(|&t| {
                        (
                            live & !self.kills[t],
                            self.triggers[t],
                            p_m / ts.len() as f64,
                        )
                    })
                    .collect()
            };
            for (next, hit, p) in branches {
                for ((e, first), q) in self.dist(next) {
                    let first = if hit { Some(1) } else { first.map(|f| f + 1) };
                    *out.entry((e + 1, first)).or_default() += p * q;
                }
            }
        }
        self.memo.insert(live, out.clone());
        out
    }
}

pub struct Exact {
    pub mean_effort: f64,
    pub effort: HashMap<usize, f64>,
    pub detection: f64,
    /// P(first detection <= x) for x = 1..
    pub curve: Vec<f64>,
}

pub fn exact(p: &Problem, policy: Policy) -> Exact {
    let mut chain = Chain::new(&p.killers, p.kills.len(), &p.triggers, policy);
    let all = if p.killers.is_empty() {
        0
    } else {
        (1u32 << p.killers.len()) - 1
    };
    let dist = chain.dist(all);
    let mut effort = HashMap::new();
    let mut mean = 0.0;
    let mut detection = 0.0;
    for (&(e, first), &q) in &dist {
        *effort.entry(e).or_default() += q;
        mean += e as f64 * q;
        if first.is_some() {
            detection += q;
        }
    }
    let max = dist.keys().map(|k| k.0).max().unwrap_or(0);
    let curve = (1..=max)
        .map(|x| {
            dist.iter()
                .filter(|(k, _)| k.1.is_some_and(|f| f <= x))
                .map(|(_, q)| q)
                .sum()
        })
        .collect();
    Exact {
        mean_effort: mean,
        effort,
        detection,
        curve,
    }
}

/// Runs 10,000 sessions and compares them with the exact chain: mean
/// effort within 1% relative, impossible or certain efforts exactly, other
/// probabilities within 0.02.
pub fn compare(p: &Problem, policy: Policy, seed: u64) -> Result<(), String> {
    let config = SimulationConfig {
        repetitions: 10_000,
        seed,
        effort_cap: None,
        policy,
    };
    let r = run_simulation(p, &config);
    let ex = exact(p, policy);
    for s in &r.sessions {
        if s.effort != s.tests_selected + s.judged_equivalent {
            return Err(format!("{p:?}: effort identity broken in {s:?}"));
        }
    }

    let mean = r.mean_effort();
    if (mean - ex.mean_effort).abs() > 0.01 * ex.mean_effort {
        return Err(format!(
            "{p:?} {policy:?}: mean effort {mean} vs exact {}",
            ex.mean_effort
        ));
    }
    let n = r.sessions.len() as f64;
    for e in 0..=p.killers.len() {
        let seen = r.sessions.iter().filter(|s| s.effort == e).count() as f64 / n;
        let want = ex.effort.get(&e).copied().unwrap_or(0.0);
        let ok = if want == 0.0 || want == 1.0 {
            seen == want
        } else {
            (seen - want).abs() < 0.02
        };
        if !ok {
            return Err(format!("{p:?}: P(effort={e}) {seen} vs {want}"));
        }
    }
    if (r.detection_rate() - ex.detection).abs() >= 0.02 {
        return Err(format!(
            "{p:?}: detection {} vs {}",
            r.detection_rate(),
            ex.detection
        ));
    }
    for (x, want) in ex.curve.iter().enumerate() {
        let got = r.curve[x].effectiveness;
        if (got - want).abs() >= 0.02 {
            return Err(format!("{p:?}: curve at {} {got} vs {want}", x + 1));
        }
    }
    Ok(())
}

/// Random projects with at most 6 mutants and 4 tests.
pub fn random_problems(seed: u64, n: usize) -> Vec<(Problem, Policy)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|case| {
            let mutants = rng.gen_range(1..=6);
            let tests = rng.gen_range(1..=4);
            let killers = (0..mutants)
                .map(|_| (0..tests).filter(|_| rng.gen_bool(0.4)).collect())
                .collect();
            let triggers = (0..tests).map(|_| rng.gen_bool(0.3)).collect();
            let policy = if case % 2 == 0 {
                Policy::Uniform
            } else {
                Policy::MaxAdditionalKills
            };
            (Problem::new(killers, tests, triggers), policy)
        })
        .collect()
}
