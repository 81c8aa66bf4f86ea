use std::collections::{HashMap, VecDeque};
use std::rc::Rc;

use crate::error::{Error, Result};

/// `exp(-gamma * ||x - z||^2)`.
pub fn rbf(x: &[f64], z: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: z.len(),
        });
    }
    Ok(rbf_unchecked(x, z, gamma))
}

#[inline]
pub(crate) fn rbf_unchecked(x: &[f64], z: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

const CACHE_BYTES: usize = 256 << 20;

/// Kernel matrix rows computed on demand, oldest rows evicted first.
pub(crate) struct KernelRows<'a> {
    points: &'a [Vec<f64>],
    gamma: f64,
    rows: HashMap<usize, Rc<[f64]>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    pub fn new(points: &'a [Vec<f64>], gamma: f64) -> Self {
        let row_bytes = points.len().max(1) * std::mem::size_of::<f64>();
        KernelRows {
            points,
            gamma,
            rows: HashMap::new(),
            order: VecDeque::new(),
            capacity: (CACHE_BYTES / row_bytes).max(2),
        }
    }

    pub fn row(&mut self, i: usize) -> Rc<[f64]> {
        if let Some(row) = self.rows.get(&i) {
            return Rc::clone(row);
        }
        let xi = &self.points[i];
        let row: Rc<[f64]> = self
            .points
            .iter()
            .map(|xj| rbf_unchecked(xi, xj, self.gamma))
            .collect();
        if self.order.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.rows.remove(&old);
            }
        }
        self.order.push_back(i);
        self.rows.insert(i, Rc::clone(&row));
        row
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        rbf_unchecked(&self.points[i], &self.points[i], self.gamma)
    }
}
