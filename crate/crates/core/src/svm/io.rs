//! Model file: a JSON document with every float written to 17 significant
//! digits so that a reload reproduces identical decision values.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use super::{ScalingParams, SvmModel};
use crate::error::{Error, Result};
use crate::features::FeatureMask;

pub const FORMAT_VERSION: u32 = 1;

struct Exact(f64);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw =
            RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

fn exact(v: &[f64]) -> Vec<Exact> {
    v.iter().copied().map(Exact).collect()
}

#[derive(Serialize)]
struct ScalingOut {
    min: Vec<Exact>,
    max: Vec<Exact>,
}

#[derive(Serialize)]
struct ModelOut<'a> {
    format_version: u32,
    feature_mask: &'a FeatureMask,
    gamma: Exact,
    c: Exact,
    scaling: ScalingOut,
    support_vectors: Vec<Vec<Exact>>,
    dual_coefs: Vec<Exact>,
    bias: Exact,
    converged: bool,
    iterations: usize,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelIn {
    #[allow(dead_code)]
    format_version: u32,
    feature_mask: FeatureMask,
    gamma: f64,
    c: f64,
    scaling: ScalingParams,
    support_vectors: Vec<Vec<f64>>,
    dual_coefs: Vec<f64>,
    bias: f64,
    converged: bool,
    iterations: usize,
}

pub fn to_string(model: &SvmModel) -> String {
    let out = ModelOut {
        format_version: FORMAT_VERSION,
        feature_mask: &model.feature_mask,
        gamma: Exact(model.gamma),
        c: Exact(model.c),
        scaling: ScalingOut {
            min: exact(&model.scaling.min),
            max: exact(&model.scaling.max),
        },
        support_vectors: model.support_vectors.iter().map(|sv| exact(sv)).collect(),
        dual_coefs: exact(&model.dual_coefs),
        bias: Exact(model.bias),
        converged: model.converged,
        iterations: model.iterations,
    };
    let mut text = serde_json::to_string_pretty(&out).expect("finite model serializes");
    text.push('\n');
    text
}

pub fn from_str(text: &str) -> Result<SvmModel> {
    let probe: VersionProbe =
        serde_json::from_str(text).map_err(|e| Error::Model(format!("unreadable: {e}")))?;
    if probe.format_version != FORMAT_VERSION {
        return Err(Error::ModelVersion {
            found: probe.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let m: ModelIn = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
    let dims = m.feature_mask.len();
    if m.scaling.min.len() != dims || m.scaling.max.len() != dims {
        return Err(Error::Model(
            "scaling arrays do not match the feature mask".into(),
        ));
    }
    if m.support_vectors.is_empty() || m.support_vectors.len() != m.dual_coefs.len() {
        return Err(Error::Model(
            "support vector and coefficient counts differ".into(),
        ));
    }
    if m.support_vectors.iter().any(|sv| sv.len() != dims) {
        return Err(Error::Model(
            "support vector width does not match the feature mask".into(),
        ));
    }
    Ok(SvmModel {
        support_vectors: m.support_vectors,
        dual_coefs: m.dual_coefs,
        bias: m.bias,
        gamma: m.gamma,
        c: m.c,
        scaling: m.scaling,
        feature_mask: m.feature_mask,
        converged: m.converged,
        iterations: m.iterations,
    })
}

pub fn save(model: &SvmModel, path: &Path) -> Result<()> {
    fs::write(path, to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<SvmModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> SvmModel {
        SvmModel {
            support_vectors: vec![vec![0.1, 1.0 / 3.0], vec![0.7, 2.0_f64.sqrt()]],
            dual_coefs: vec![0.123_456_789_012_345_67, -0.123_456_789_012_345_67],
            bias: -1e-17,
            gamma: 0.5,
            c: 1.0,
            scaling: ScalingParams {
                min: vec![0.0, 5.5],
                max: vec![1.0, 86400.0],
            },
            feature_mask: FeatureMask::ablation(2).unwrap(),
            converged: true,
            iterations: 12,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let text = to_string(&m);
        assert!(text.contains("\"format_version\": 1"));
        assert!(text.contains("3.3333333333333331e-1"));
        assert_eq!(from_str(&text).unwrap(), m);
    }

    #[test]
    fn unknown_version_is_rejected() {
        let text = to_string(&model()).replace("\"format_version\": 1", "\"format_version\": 99");
        assert!(matches!(
            from_str(&text),
            Err(Error::ModelVersion {
                found: 99,
                expected: 1
            })
        ));
    }

    #[test]
    fn corrupt_files_are_rejected() {
        assert!(matches!(from_str("{not json"), Err(Error::Model(_))));
        let text = to_string(&model()).replace("\"bias\"", "\"bias_\"");
        assert!(matches!(from_str(&text), Err(Error::Model(_))));
        let mut m = model();
        m.dual_coefs.pop();
        assert!(matches!(from_str(&to_string(&m)), Err(Error::Model(_))));
    }
}
