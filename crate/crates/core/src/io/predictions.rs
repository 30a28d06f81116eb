//! JSON prediction files: per scenario and target, up to six coordinates with
//! confidences per horizon.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridgeom::Vec2;
use crate::metrics::{Horizon, Prediction, PredictionSet};
use crate::sampler::SampleSet;

/// Hard cap on stored predictions per horizon (the competition limit).
pub const FILE_PREDICTION_LIMIT: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
    pub confidence_raw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionEntry {
    /// Index of the scenario in the evaluated scenario set.
    pub scenario: usize,
    pub target_id: i64,
    pub horizons: BTreeMap<Horizon, Vec<PredictionRecord>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionFile {
    pub predictions: Vec<PredictionEntry>,
}

impl PredictionEntry {
    pub fn from_samples(
        scenario: usize,
        target_id: i64,
        samples: &BTreeMap<Horizon, SampleSet>,
    ) -> Result<Self> {
        let mut horizons = BTreeMap::new();
        for (&h, set) in samples {
            if set.len() > FILE_PREDICTION_LIMIT {
                return Err(Error::PredictionFormat(format!(
                    "{} samples exceed the {FILE_PREDICTION_LIMIT}-prediction file limit",
                    set.len()
                )));
            }
            let records = set
                .coordinates
                .iter()
                .zip(&set.confidences)
                .zip(&set.confidences_raw)
                .map(|((&pos, &confidence), &confidence_raw)| PredictionRecord {
                    x: pos.x,
                    y: pos.y,
                    confidence,
                    confidence_raw,
                })
                .collect();
            horizons.insert(h, records);
        }
        Ok(Self {
            scenario,
            target_id,
            horizons,
        })
    }

    pub fn to_prediction_set(&self) -> Result<PredictionSet> {
        let mut set = PredictionSet::new(self.target_id);
        for (&h, records) in &self.horizons {
            for r in records {
                set.push(
                    h,
                    Prediction {
                        pos: Vec2::new(r.x, r.y),
                        confidence: r.confidence,
                        confidence_raw: r.confidence_raw,
                    },
                )?;
            }
        }
        Ok(set)
    }

    fn validate(&self, index: usize) -> Result<()> {
        for (h, records) in &self.horizons {
            if records.len() > FILE_PREDICTION_LIMIT {
                return Err(Error::PredictionFormat(format!(
                    "predictions[{index}] horizon {h}: {} entries exceed the limit of {FILE_PREDICTION_LIMIT}",
                    records.len()
                )));
            }
            for r in records {
                let finite = r.x.is_finite()
                    && r.y.is_finite()
                    && r.confidence.is_finite()
                    && r.confidence_raw.is_finite();
                if !finite || r.confidence < 0.0 || r.confidence_raw < 0.0 {
                    return Err(Error::PredictionFormat(format!(
                        "predictions[{index}] horizon {h}: invalid record {r:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl PredictionFile {
    pub fn validate(&self) -> Result<()> {
        for (i, entry) in self.predictions.iter().enumerate() {
            entry.validate(i)?;
        }
        Ok(())
    }

    /// Entries keyed by `(scenario, target_id)`.
    pub fn by_target(&self) -> BTreeMap<(usize, i64), &PredictionEntry> {
        self.predictions
            .iter()
            .map(|e| ((e.scenario, e.target_id), e))
            .collect()
    }
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<PredictionFile> {
    let file = File::open(path)?;
    let parsed: PredictionFile = serde_json::from_reader(BufReader::new(file))?;
    parsed.validate()?;
    Ok(parsed)
}

pub fn save_predictions(path: impl AsRef<Path>, predictions: &PredictionFile) -> Result<()> {
    predictions.validate()?;
    let mut writer = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut writer, predictions)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}
