//! Genetic search over arithmetic expressions, the last rung of the
//! function-fitting ladder. Everything before it is deterministic
//! enumeration; this is deterministic too, but only because the RNG is
//! seeded — two runs with the same seed, cases and terminals return the
//! same expression.
//!
//! The genome is an `Expr` built from the provided terminals, integer
//! constants drawn from the samples, and `+`, `-`, `*`. Fitness is
//! lexicographic: first the number of cases matched exactly, then the
//! smaller tree. Evaluation errors (overflow, unassigned registers) simply
//! count as mismatches.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand::{Rng, SeedableRng};

use crate::expr::Expr;
use crate::value::Value;

/// One fitting case: an environment and the value the expression must
/// produce in it.
#[derive(Debug, Clone)]
pub struct Case {
    pub regs: BTreeMap<String, Value>,
    pub params: BTreeMap<String, Value>,
    pub target: Value,
}

pub struct GpRun {
    pub population: usize,
    pub generations: usize,
    pub max_depth: usize,
    pub tournament: usize,
    pub crossover: f64,
    pub mutation: f64,
}

impl Default for GpRun {
    fn default() -> GpRun {
        GpRun {
            population: 200,
            generations: 200,
            max_depth: 5,
            tournament: 4,
            crossover: 0.8,
            mutation: 0.15,
        }
    }
}

pub fn size(e: &Expr) -> usize {
    match e {
        Expr::Int(_) | Expr::Sym(_) | Expr::Bool(_) | Expr::Reg(_) | Expr::Param(_) => 1,
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Cmp(_, a, b) => {
            1 + size(a) + size(b)
        }
        Expr::And(a, b) | Expr::Or(a, b) => 1 + size(a) + size(b),
        Expr::Not(a) => 1 + size(a),
    }
}

fn matched(e: &Expr, cases: &[Case]) -> usize {
    cases
        .iter()
        .filter(|c| e.eval_value(&c.regs, &c.params).is_ok_and(|v| v == c.target))
        .count()
}

fn random_tree(rng: &mut ChaCha8Rng, depth: usize, terminals: &[Expr], consts: &[i64]) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(1.0 / 3.0);
    if leaf {
        // Half terminals, half constants (when both exist).
        if !terminals.is_empty() && (consts.is_empty() || rng.gen_bool(0.5)) {
            terminals[rng.gen_range(0..terminals.len())].clone()
        } else {
            Expr::Int(consts[rng.gen_range(0..consts.len())])
        }
    } else {
        let a = random_tree(rng, depth - 1, terminals, consts);
        let b = random_tree(rng, depth - 1, terminals, consts);
        match rng.gen_range(0..3) {
            0 => Expr::add(a, b),
            1 => Expr::sub(a, b),
            _ => Expr::mul(a, b),
        }
    }
}

/// Collect mutable-position count (preorder).
fn node_count(e: &Expr) -> usize {
    size(e)
}

fn subtree(e: &Expr, index: usize) -> &Expr {
    fn walk<'a>(e: &'a Expr, index: usize, seen: &mut usize) -> Option<&'a Expr> {
        if *seen == index {
            return Some(e);
        }
        *seen += 1;
        match e {
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                walk(a, index, seen).or_else(|| walk(b, index, seen))
            }
            _ => None,
        }
    }
    walk(e, index, &mut 0).unwrap_or(e)
}

fn replace(e: &Expr, index: usize, with: &Expr) -> Expr {
    fn walk(e: &Expr, index: usize, with: &Expr, seen: &mut usize) -> Expr {
        if *seen == index {
            *seen += 1;
            return with.clone();
        }
        *seen += 1;
        match e {
            Expr::Add(a, b) => Expr::add(walk(a, index, with, seen), walk(b, index, with, seen)),
            Expr::Sub(a, b) => Expr::sub(walk(a, index, with, seen), walk(b, index, with, seen)),
            Expr::Mul(a, b) => Expr::mul(walk(a, index, with, seen), walk(b, index, with, seen)),
            other => other.clone(),
        }
    }
    walk(e, index, with, &mut 0)
}

/// Search for an expression matching every case. Returns the best
/// individual found and whether it is exact.
pub fn evolve(
    cases: &[Case],
    terminals: &[Expr],
    consts: &[i64],
    seed: u64,
    run: &GpRun,
) -> (Expr, bool) {
    let consts = if consts.is_empty() { vec![0, 1] } else { consts.to_vec() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pop: Vec<Expr> = (0..run.population)
        .map(|_| random_tree(&mut rng, run.max_depth.min(2), terminals, &consts))
        .collect();
    let fitness = |e: &Expr| (matched(e, cases), usize::MAX - size(e));
    let mut best = pop[0].clone();
    let mut best_fit = fitness(&best);
    for _ in 0..run.generations {
        for e in &pop {
            let f = fitness(e);
            if f > best_fit {
                best_fit = f;
                best = e.clone();
            }
        }
        if best_fit.0 == cases.len() {
            return (best, true);
        }
        let mut next = Vec::with_capacity(run.population);
        while next.len() < run.population {
            let pick = |rng: &mut ChaCha8Rng, pop: &[Expr]| -> Expr {
                let mut winner = pop[rng.gen_range(0..pop.len())].clone();
                let mut wf = fitness(&winner);
                for _ in 1..run.tournament {
                    let other = &pop[rng.gen_range(0..pop.len())];
                    let of = fitness(other);
                    if of > wf {
                        winner = other.clone();
                        wf = of;
                    }
                }
                winner
            };
            let roll: f64 = rng.gen();
            let child = if roll < run.crossover {
                let a = pick(&mut rng, &pop);
                let b = pick(&mut rng, &pop);
                let ia = rng.gen_range(0..node_count(&a));
                let ib = rng.gen_range(0..node_count(&b));
                replace(&a, ia, subtree(&b, ib))
            } else if roll < run.crossover + run.mutation {
                let a = pick(&mut rng, &pop);
                let ia = rng.gen_range(0..node_count(&a));
                let fresh = random_tree(&mut rng, 2, terminals, &consts);
                replace(&a, ia, &fresh)
            } else {
                pick(&mut rng, &pop)
            };
            next.push(child);
        }
        pop = next;
    }
    for e in &pop {
        let f = fitness(e);
        if f > best_fit {
            best_fit = f;
            best = e.clone();
        }
    }
    let exact = best_fit.0 == cases.len();
    (best, exact)
}
