//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;

use paidposter::semantics::ContentWordList;

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, z)| (x - z) * (x - z)).sum();
    (-gamma * d2).exp()
}

fn q_matrix(x: &[Vec<f64>], y: &[f64], gamma: f64) -> Vec<Vec<f64>> {
    (0..x.len())
        .map(|i| {
            (0..x.len())
                .map(|j| y[i] * y[j] * rbf(&x[i], &x[j], gamma))
                .collect()
        })
        .collect()
}

pub fn dual_objective(x: &[Vec<f64>], y: &[f64], alpha: &[f64], gamma: f64) -> f64 {
    let q = q_matrix(x, y, gamma);
    let mut quad = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            quad += alpha[i] * alpha[j] * q[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        for r in col + 1..n {
            let f = a[r][col] / pivot_row[col];
            for (v, p) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                *v -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Exact optimum of the C-SVC dual for a handful of points.
///
/// Every point is either at 0, at C, or free. For each of the `3^n`
/// assignments the free multipliers and the equality multiplier are fixed by
/// the stationarity conditions of the face; the best feasible face wins.
pub fn qp_oracle(x: &[Vec<f64>], y: &[f64], c: f64, gamma: f64) -> (Vec<f64>, f64) {
    let n = x.len();
    assert!(n <= 10, "brute force only");
    let q = q_matrix(x, y, gamma);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut k = code;
        for s in state.iter_mut() {
            *s = (k % 3) as u8;
            k /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state
            .iter()
            .map(|&s| if s == 1 { c } else { 0.0 })
            .collect();
        if !free.is_empty() {
            // unknowns: alpha_f for f in free, then b
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut rhs = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (col, &j) in free.iter().enumerate() {
                    a[r][col] = q[i][j];
                }
                a[r][m] = y[i];
                let fixed: f64 = (0..n).filter(|&j| state[j] == 1).map(|j| q[i][j] * c).sum();
                rhs[r] = 1.0 - fixed;
            }
            for (col, &j) in free.iter().enumerate() {
                a[m][col] = y[j];
            }
            rhs[m] = -(0..n)
                .filter(|&j| state[j] == 1)
                .map(|j| y[j] * c)
                .sum::<f64>();
            let Some(sol) = solve_linear(a, rhs) else {
                continue;
            };
            if free
                .iter()
                .enumerate()
                .any(|(r, _)| !(sol[r] > 0.0 && sol[r] < c))
            {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let balance: f64 = alpha.iter().zip(y).map(|(a, yy)| a * yy).sum();
        if balance.abs() > 1e-9 * c.max(1.0) {
            continue;
        }
        let w = dual_objective(x, y, &alpha, gamma);
        if best.as_ref().is_none_or(|(_, bw)| w > *bw) {
            best = Some((alpha, w));
        }
    }
    best.expect("alpha = 0 is always feasible")
}

/// Maximal KKT violation `max_up(-y g) - min_low(-y g)` of a dual point.
pub fn kkt_gap(x: &[Vec<f64>], y: &[f64], alpha: &[f64], c: f64, gamma: f64) -> f64 {
    let q = q_matrix(x, y, gamma);
    let n = x.len();
    let g: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| q[i][j] * alpha[j]).sum::<f64>() - 1.0)
        .collect();
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for i in 0..n {
        let v = -y[i] * g[i];
        let in_up = if y[i] > 0.0 {
            alpha[i] < c
        } else {
            alpha[i] > 0.0
        };
        let in_low = if y[i] > 0.0 {
            alpha[i] > 0.0
        } else {
            alpha[i] < c
        };
        if in_up {
            up = up.max(v);
        }
        if in_low {
            low = low.min(v);
        }
    }
    if up.is_finite() && low.is_finite() {
        (up - low).max(0.0)
    } else {
        0.0
    }
}

/// Common-word ratio over the shorter list, counting each shared word as
/// often as it occurs in both lists.
pub fn naive_ratio(a: &[String], b: &[String]) -> f64 {
    let shorter = a.len().min(b.len());
    if shorter == 0 {
        return 0.0;
    }
    let mut left: HashMap<&str, usize> = HashMap::new();
    for w in a {
        *left.entry(w).or_default() += 1;
    }
    let mut common = 0;
    for w in b {
        if let Some(k) = left.get_mut(w.as_str()) {
            if *k > 0 {
                *k -= 1;
                common += 1;
            }
        }
    }
    common as f64 / shorter as f64
}

/// All unordered pairs with ratio at or above `threshold`.
pub fn naive_pair_count(lists: &[ContentWordList], threshold: f64) -> u64 {
    let mut count = 0;
    for i in 0..lists.len() {
        for j in i + 1..lists.len() {
            if naive_ratio(&lists[i].words, &lists[j].words) >= threshold {
                count += 1;
            }
        }
    }
    count
}
