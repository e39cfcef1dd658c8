//! Versioned JSON model files.
//!
//! Floats go through serde_json's shortest round-trip formatting, so a
//! loaded model is bit-identical to the saved one.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::ParamSet;
use crate::corpus_io::FeatureConfig;
use crate::encoder::{ModelDims, ModelParams};
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const FORMAT: &str = "tlstm-model";
pub const VERSION: u32 = 1;

/// A trained parser together with the featurization it expects.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel {
    pub params: ModelParams,
    pub features: FeatureConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    version: u32,
    features: usize,
    hidden: usize,
    layers: usize,
    feature_config: FeatureConfig,
    tensors: Vec<TensorRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

pub fn save_model(path: impl AsRef<Path>, model: &SavedModel) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_model(&mut out, model)?;
    out.flush()?;
    Ok(())
}

pub fn write_model<W: Write>(out: &mut W, model: &SavedModel) -> Result<()> {
    model.params.validate()?;
    if model.features.width() != model.params.dims.features {
        return Err(Error::Config(format!(
            "feature configuration yields width {}, model expects {}",
            model.features.width(),
            model.params.dims.features
        )));
    }
    let dims = model.params.dims;
    let doc = Document {
        format: FORMAT.into(),
        version: VERSION,
        features: dims.features,
        hidden: dims.hidden,
        layers: dims.layers,
        feature_config: model.features.clone(),
        tensors: model
            .params
            .to_param_set()
            .iter()
            .map(|(name, t)| TensorRecord {
                name: name.to_string(),
                shape: t.shape().to_vec(),
                values: t.data().to_vec(),
            })
            .collect(),
    };
    serde_json::to_writer(&mut *out, &doc).map_err(|e| Error::Io(e.into()))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    parse_model(BufReader::new(File::open(path)?), &path.display().to_string())
}

pub fn parse_model<R: Read>(reader: R, origin: &str) -> Result<SavedModel> {
    let doc: Document =
        serde_json::from_reader(reader).map_err(|e| Error::parse(origin, e.to_string()))?;
    if doc.format != FORMAT {
        return Err(Error::parse(origin, format!("not a model file (format {:?})", doc.format)));
    }
    if doc.version != VERSION {
        return Err(Error::parse(origin, format!("unsupported model version {}", doc.version)));
    }
    let dims = ModelDims {
        features: doc.features,
        hidden: doc.hidden,
        layers: doc.layers,
    };
    check_sizes(&dims, &doc.tensors).map_err(|d| Error::data(origin, d))?;
    let mut set = ParamSet::new();
    for t in doc.tensors {
        let tensor = DenseTensor::new(t.shape, t.values)
            .map_err(|e| Error::data(origin, format!("tensor {}: {e}", t.name)))?;
        set.push(t.name, tensor);
    }
    let params = ModelParams::from_param_set(dims, &set).map_err(|e| Error::data(origin, e.to_string()))?;
    if doc.feature_config.width() != dims.features {
        return Err(Error::data(
            origin,
            format!(
                "feature configuration yields width {}, model expects {}",
                doc.feature_config.width(),
                dims.features
            ),
        ));
    }
    Ok(SavedModel {
        params,
        features: doc.feature_config,
    })
}

/// Cheap consistency checks before any allocation sized by `dims`.
fn check_sizes(dims: &ModelDims, tensors: &[TensorRecord]) -> std::result::Result<(), String> {
    let expected = dims
        .layers
        .checked_mul(32)
        .and_then(|n| n.checked_add(2))
        .ok_or("layer count overflows")?;
    if tensors.len() != expected {
        return Err(format!("{} tensors for {} layers, expected {expected}", tensors.len(), dims.layers));
    }
    let h = dims.hidden;
    let first_cols = dims
        .features
        .checked_mul(2)
        .and_then(|n| n.checked_add(1 + h))
        .ok_or("feature width overflows")?;
    if tensors[0].shape != [h, first_cols] {
        return Err(format!("first tensor has shape {:?}, expected [{h}, {first_cols}]", tensors[0].shape));
    }
    let out = &tensors[expected - 2];
    if h.checked_mul(4).map(|n| out.shape != [n]).unwrap_or(true) {
        return Err(format!("output weights have shape {:?}", out.shape));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::init_model;

    fn sample() -> SavedModel {
        let dims = ModelDims {
            features: 3,
            hidden: 2,
            layers: 2,
        };
        SavedModel {
            params: init_model(dims, 7).unwrap(),
            features: FeatureConfig {
                embedding_width: 1,
                pos_vocab: vec!["A".into(), "B".into()],
                use_pos: true,
            },
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample();
        let mut buf = Vec::new();
        write_model(&mut buf, &m).unwrap();
        let back = parse_model(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, m);
        for (a, b) in back.params.to_param_set().iter().zip(m.params.to_param_set().iter()) {
            for (x, y) in a.1.data().iter().zip(b.1.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn rejects_wrong_format_and_layout() {
        assert!(parse_model("{}".as_bytes(), "m").is_err());
        assert!(parse_model("not json".as_bytes(), "m").is_err());
        let mut buf = Vec::new();
        write_model(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let bumped = text.replace("\"version\":1", "\"version\":9");
        assert!(parse_model(bumped.as_bytes(), "m").is_err());
        let relayered = text.replace("\"layers\":2", "\"layers\":1");
        assert!(parse_model(relayered.as_bytes(), "m").is_err());
        let huge = text.replace("\"hidden\":2", "\"hidden\":1000000000000");
        assert!(parse_model(huge.as_bytes(), "m").is_err());
    }
}
