use serde::{Deserialize, Serialize};

/// Per-feature min/max observed on training data; maps that range to [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingParams {
    /// Panics on an empty slice; callers validate non-empty training data.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dims = rows[0].len();
        let mut min = vec![f64::INFINITY; dims];
        let mut max = vec![f64::NEG_INFINITY; dims];
        for row in rows {
            for (d, &v) in row.iter().enumerate() {
                min[d] = min[d].min(v);
                max[d] = max[d].max(v);
            }
        }
        ScalingParams { min, max }
    }

    pub fn dims(&self) -> usize {
        self.min.len()
    }

    /// Linear map; values outside the training range land outside [0, 1].
    /// Constant features map to 0.
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_range_to_unit_interval() {
        let rows = vec![
            vec![0.0, 10.0, 3.0],
            vec![1.0, 30.0, 3.0],
            vec![0.5, 20.0, 3.0],
        ];
        let s = ScalingParams::fit(&rows);
        assert_eq!(s.min, vec![0.0, 10.0, 3.0]);
        assert_eq!(s.max, vec![1.0, 30.0, 3.0]);
        assert_eq!(s.transform(&rows[0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(s.transform(&rows[1]), vec![1.0, 1.0, 0.0]);
        assert_eq!(s.transform(&rows[2]), vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn out_of_range_is_not_clamped() {
        let s = ScalingParams::fit(&[vec![0.0], vec![10.0]]);
        assert_eq!(s.transform(&[20.0]), vec![2.0]);
        assert_eq!(s.transform(&[-5.0]), vec![-0.5]);
    }
}
