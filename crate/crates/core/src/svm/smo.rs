//! Sequential minimal optimization for the C-SVC dual
//!
//! ```text
//! maximize   W(a) = sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! subject to 0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! Working pairs are chosen first-order: the maximal KKT violator `i` from
//! the "up" set paired with the partner `j` from the "low" set that
//! maximizes `|E_i - E_j|`. When that pair cannot move (numerical stall),
//! the remaining violating partners are tried in a seeded random order.
//! Iteration stops once the maximal violation gap is within `kkt_tol`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kernel::{rbf_unchecked, KernelRows};

/// Curvature used when the pair direction is flat or numerically negative.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub gamma: f64,
    pub kkt_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Record the dual objective after every accepted pair update.
    pub record_trace: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final `max_up - min_low` violation gap.
    pub gap: f64,
    pub trace: Vec<f64>,
}

impl Solution {
    /// Decision value of training point `t` under this solution.
    pub fn decision(&self, x: &[Vec<f64>], y: &[f64], gamma: f64, t: usize) -> f64 {
        self.alpha
            .iter()
            .zip(y)
            .zip(x)
            .filter(|((a, _), _)| **a > 0.0)
            .map(|((a, yy), xi)| a * yy * rbf_unchecked(xi, &x[t], gamma))
            .sum::<f64>()
            + self.bias
    }
}

/// `W(a)` computed directly from the kernel.
pub fn dual_objective(x: &[Vec<f64>], y: &[f64], alpha: &[f64], gamma: f64) -> f64 {
    let n = x.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alpha[j] != 0.0 {
                quad += alpha[i] * alpha[j] * y[i] * y[j] * rbf_unchecked(&x[i], &x[j], gamma);
            }
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

struct State<'a> {
    y: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    /// Gradient of the minimization form `1/2 a'Qa - e'a`.
    grad: Vec<f64>,
}

impl State<'_> {
    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] < self.c
        } else {
            self.alpha[t] > 0.0
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.c
        }
    }

    /// `-y_t * grad_t`; KKT holds when every up value is at most every low
    /// value (within tolerance).
    fn violation(&self, t: usize) -> f64 {
        -self.y[t] * self.grad[t]
    }

    /// Maximal violating pair and the current gap.
    fn select(&self) -> Option<(usize, usize, f64)> {
        let n = self.alpha.len();
        let mut up: Option<(usize, f64)> = None;
        let mut low: Option<(usize, f64)> = None;
        for t in 0..n {
            let v = self.violation(t);
            if self.in_up(t) && up.is_none_or(|(_, best)| v > best) {
                up = Some((t, v));
            }
            if self.in_low(t) && low.is_none_or(|(_, best)| v < best) {
                low = Some((t, v));
            }
        }
        let ((i, m), (j, big_m)) = (up?, low?);
        Some((i, j, m - big_m))
    }

    fn objective(&self) -> f64 {
        0.5 * self
            .alpha
            .iter()
            .zip(&self.grad)
            .map(|(a, g)| a * (1.0 - g))
            .sum::<f64>()
    }

    /// Analytic two-variable step. Returns the multiplier changes, or `None`
    /// when the pair cannot move.
    fn step(&mut self, i: usize, j: usize, kernel: &mut KernelRows) -> Option<(f64, f64)> {
        if i == j {
            return None;
        }
        let (yi, yj) = (self.y[i], self.y[j]);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let k_ij = kernel.row(i)[j];
        let mut quad = kernel.diagonal(i) + kernel.diagonal(j) - 2.0 * k_ij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let c = self.c;
        let (mut ai, mut aj);
        if yi != yj {
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = old_i - old_j;
            ai = old_i + delta;
            aj = old_j + delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = old_i + old_j;
            ai = old_i - delta;
            aj = old_j + delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        let (di, dj) = (ai - old_i, aj - old_j);
        if di == 0.0 && dj == 0.0 {
            return None;
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let row_i = kernel.row(i);
        let row_j = kernel.row(j);
        for t in 0..self.alpha.len() {
            let yt = self.y[t];
            self.grad[t] += yt * (yi * row_i[t] * di + yj * row_j[t] * dj);
        }
        Some((di, dj))
    }

    fn bias(&self, gap_up: f64, gap_low: f64) -> f64 {
        let mut sum = 0.0;
        let mut free = 0usize;
        for t in 0..self.alpha.len() {
            if self.alpha[t] > 0.0 && self.alpha[t] < self.c {
                sum += self.violation(t);
                free += 1;
            }
        }
        if free > 0 {
            sum / free as f64
        } else {
            0.5 * (gap_up + gap_low)
        }
    }
}

/// Solves the dual for points `x` with labels `y` in {-1, +1}. Both classes
/// must be present.
pub fn solve(x: &[Vec<f64>], y: &[f64], params: &SmoParams) -> Solution {
    let n = x.len();
    let mut kernel = KernelRows::new(x, params.gamma);
    let mut state = State {
        y,
        c: params.c,
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;

    while iterations < params.max_iter {
        let Some((i, j, current_gap)) = state.select() else {
            converged = true;
            gap = 0.0;
            break;
        };
        gap = current_gap;
        if gap <= params.kkt_tol {
            converged = true;
            break;
        }
        let mut moved = state.step(i, j, &mut kernel).is_some();
        if !moved {
            // stalled: try the other violating partners of i in random order
            let vi = state.violation(i);
            let mut partners: Vec<usize> = (0..n)
                .filter(|&t| t != i && state.in_low(t) && state.violation(t) < vi)
                .collect();
            partners.shuffle(&mut rng);
            for t in partners {
                if state.step(i, t, &mut kernel).is_some() {
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            break;
        }
        iterations += 1;
        if params.record_trace {
            trace.push(state.objective());
        }
    }

    let (up, low) = extreme_violations(&state);
    Solution {
        bias: state.bias(up, low),
        objective: state.objective(),
        iterations,
        converged,
        gap,
        trace,
        alpha: state.alpha,
    }
}

fn extreme_violations(state: &State) -> (f64, f64) {
    let n = state.alpha.len();
    let up = (0..n)
        .filter(|&t| state.in_up(t))
        .map(|t| state.violation(t))
        .fold(f64::NEG_INFINITY, f64::max);
    let low = (0..n)
        .filter(|&t| state.in_low(t))
        .map(|t| state.violation(t))
        .fold(f64::INFINITY, f64::min);
    match (up.is_finite(), low.is_finite()) {
        (true, true) => (up, low),
        (true, false) => (up, up),
        (false, true) => (low, low),
        (false, false) => (0.0, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(c: f64, gamma: f64) -> SmoParams {
        SmoParams {
            c,
            gamma,
            kkt_tol: 1e-3,
            max_iter: 100_000,
            seed: 7,
            record_trace: true,
        }
    }

    #[test]
    fn separable_pair() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let y = vec![1.0, -1.0];
        let s = solve(&x, &y, &params(10.0, 0.5));
        assert!(s.converged);
        assert!(s.decision(&x, &y, 0.5, 0) > 0.0);
        assert!(s.decision(&x, &y, 0.5, 1) < 0.0);
        // two points: a = 2 / (2 - 2k) with k = exp(-1), below C
        let k = (-1.0f64).exp();
        let expected = 1.0 / (1.0 - k);
        assert!((s.alpha[0] - expected).abs() < 1e-9, "{:?}", s.alpha);
        assert_eq!(s.alpha[0], s.alpha[1]);
    }

    #[test]
    fn objective_matches_direct_computation() {
        let x: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64).cos()])
            .collect();
        let y: Vec<f64> = (0..12)
            .map(|i| if i % 3 == 0 { 1.0 } else { -1.0 })
            .collect();
        let s = solve(&x, &y, &params(2.0, 1.0));
        let direct = dual_objective(&x, &y, &s.alpha, 1.0);
        assert!((s.objective - direct).abs() < 1e-9);
        let balance: f64 = s.alpha.iter().zip(&y).map(|(a, yy)| a * yy).sum();
        assert!(balance.abs() < 1e-9);
        assert!(s.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn duplicate_point_with_conflicting_labels() {
        let x = vec![vec![0.0], vec![0.0], vec![1.0], vec![2.0]];
        let y = vec![1.0, -1.0, 1.0, -1.0];
        let s = solve(&x, &y, &params(0.1, 1.0));
        assert!(s.converged);
        assert!(s.alpha.iter().all(|&a| (0.0..=0.1).contains(&a)));
    }
}
