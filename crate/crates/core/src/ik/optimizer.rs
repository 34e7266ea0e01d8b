//! Box-constrained limited-memory quasi-Newton descent.
//!
//! Gradients come from central finite differences, shortened to one side at
//! the joint limits so that no probe leaves the box. Each iteration builds an
//! L-BFGS direction over the free variables (those not pinned against a bound
//! by the gradient), projects the trial point onto the box and backtracks
//! until the Armijo condition holds. Every iterate is feasible and the
//! objective never increases.

use std::collections::VecDeque;

/// Why the descent stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Objective dropped below the tolerance.
    Tolerance,
    /// Improvement per iteration fell below [`STALL_IMPROVEMENT`] or no
    /// descent step could be found.
    Stalled,
    MaxIterations,
}

pub const STALL_IMPROVEMENT: f64 = 1e-12;

const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Infinity-norm length of a steepest-descent trial step.
const STEEPEST_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub fd_step: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub termination: Termination,
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gradient<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
    h: f64,
    probe: &mut [f64],
    g: &mut [f64],
) {
    probe.copy_from_slice(x);
    for i in 0..x.len() {
        let hi = (x[i] + h).min(upper[i]);
        let lo = (x[i] - h).max(lower[i]);
        if hi <= lo {
            g[i] = 0.0;
            continue;
        }
        probe[i] = hi;
        let f_hi = f(probe);
        probe[i] = lo;
        let f_lo = f(probe);
        probe[i] = x[i];
        g[i] = (f_hi - f_lo) / (hi - lo);
    }
}

fn two_loop(g: &[f64], memory: &VecDeque<Pair>, d: &mut [f64]) {
    let mut q = g.to_vec();
    let mut alpha = vec![0.0; memory.len()];
    for (k, pair) in memory.iter().enumerate().rev() {
        alpha[k] = pair.rho * dot(&pair.s, &q);
        for (qi, yi) in q.iter_mut().zip(&pair.y) {
            *qi -= alpha[k] * yi;
        }
    }
    let gamma = memory.back().map(|p| dot(&p.s, &p.y) / dot(&p.y, &p.y)).unwrap_or(1.0);
    for qi in q.iter_mut() {
        *qi *= gamma;
    }
    for (k, pair) in memory.iter().enumerate() {
        let beta = pair.rho * dot(&pair.y, &q);
        for (qi, si) in q.iter_mut().zip(&pair.s) {
            *qi += (alpha[k] - beta) * si;
        }
    }
    for (di, qi) in d.iter_mut().zip(q) {
        *di = -qi;
    }
}

pub(crate) fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    settings: Settings,
) -> Outcome {
    let n = x0.len();
    let mut x: Vec<f64> = x0
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
        .collect();
    let mut fx = f(&x);
    if fx < settings.tolerance {
        return Outcome {
            x,
            value: fx,
            iterations: 0,
            termination: Termination::Tolerance,
        };
    }

    let mut probe = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut g_free = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut memory: VecDeque<Pair> = VecDeque::with_capacity(MEMORY);
    gradient(&mut f, &x, lower, upper, settings.fd_step, &mut probe, &mut g);

    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;
    while iterations < settings.max_iterations {
        let mut free = vec![true; n];
        for i in 0..n {
            let pinned = (x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0);
            free[i] = !pinned;
            g_free[i] = if pinned { 0.0 } else { g[i] };
        }
        let g_inf = g_free.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if g_inf == 0.0 {
            termination = Termination::Stalled;
            break;
        }

        let mut accepted = None;
        // First try the quasi-Newton direction, then fall back to steepest
        // descent with the memory cleared.
        for attempt in 0..2 {
            let steepest = attempt == 1 || memory.is_empty();
            if steepest {
                memory.clear();
                for i in 0..n {
                    d[i] = -g_free[i] * (STEEPEST_STEP / g_inf);
                }
            } else {
                two_loop(&g_free, &memory, &mut d);
                for i in 0..n {
                    if !free[i] {
                        d[i] = 0.0;
                    }
                }
                if dot(&d, &g_free) >= 0.0 {
                    continue;
                }
            }

            let mut t = 1.0;
            for _ in 0..MAX_BACKTRACKS {
                let mut moved = false;
                for i in 0..n {
                    trial[i] = (x[i] + t * d[i]).clamp(lower[i], upper[i]);
                    moved |= trial[i] != x[i];
                }
                if !moved {
                    break;
                }
                let f_trial = f(&trial);
                let decrease: f64 = (0..n).map(|i| g[i] * (trial[i] - x[i])).sum();
                if f_trial <= fx + ARMIJO * decrease && f_trial < fx {
                    accepted = Some(f_trial);
                    break;
                }
                t *= 0.5;
            }
            if accepted.is_some() || steepest {
                break;
            }
        }

        let Some(f_trial) = accepted else {
            termination = Termination::Stalled;
            break;
        };

        iterations += 1;
        gradient(&mut f, &trial, lower, upper, settings.fd_step, &mut probe, &mut g_new);
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if memory.len() == MEMORY {
                memory.pop_front();
            }
            memory.push_back(Pair { s, y, rho: 1.0 / sy });
        }

        let improvement = fx - f_trial;
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_trial;

        if fx < settings.tolerance {
            termination = Termination::Tolerance;
            break;
        }
        if improvement < STALL_IMPROVEMENT {
            termination = Termination::Stalled;
            break;
        }
    }

    Outcome {
        x,
        value: fx,
        iterations,
        termination,
    }
}
