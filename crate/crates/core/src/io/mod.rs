//! File formats and ingestion: scenario JSON, HGRD binary rasters, prediction
//! JSON, and synthetic scenario generation.
//!
//! Writers are deterministic; identical inputs produce byte-identical files.
//! Loaders validate fully before returning, so no partially constructed data
//! ever escapes.

pub mod hgrd;
pub mod predictions;
pub mod synth;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result, ValidationError, ValidationErrorKind};
use crate::scenario::Scenario;

pub use hgrd::{read_heatmap, read_hgrd, write_hgrd};
pub use predictions::{load_predictions, save_predictions, PredictionEntry, PredictionFile};
pub use synth::{generate_synthetic, MotionMix};

/// Load and validate a single scenario object.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = read_text(path)?;
    let scenario: Scenario = serde_json::from_str(&text).map_err(malformed)?;
    scenario.validate()?;
    Ok(scenario)
}

/// Load a scenario set: either a JSON array of scenarios or a single scenario
/// object. Every scenario is validated; array errors are prefixed with the
/// scenario index.
pub fn load_scenarios(path: impl AsRef<Path>) -> Result<Vec<Scenario>> {
    let text = read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(malformed)?;
    let scenarios: Vec<Scenario> = if value.is_array() {
        serde_json::from_value(value).map_err(malformed)?
    } else {
        vec![serde_json::from_value(value).map_err(malformed)?]
    };
    for (i, scenario) in scenarios.iter().enumerate() {
        scenario.validate().map_err(|e| {
            Error::Validation(ValidationError::new(format!("/{i}{}", e.pointer), e.kind))
        })?;
    }
    Ok(scenarios)
}

/// Write a scenario set as a JSON array.
pub fn save_scenarios(path: impl AsRef<Path>, scenarios: &[Scenario]) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut writer, scenarios)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let mut text = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut text)?;
    Ok(text)
}

fn malformed(err: serde_json::Error) -> Error {
    Error::Validation(ValidationError::new(
        "",
        ValidationErrorKind::MalformedJson(err.to_string()),
    ))
}
