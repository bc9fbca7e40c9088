//! Instance files, fractional-solution inputs and report output.

use std::fs;
use std::path::Path;

use interdesign::{Instance, ObjectiveKind};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA: u32 = 1;

/// On-disk instance: `d`, `k`, row-major vectors and optional extras.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema: u32,
    pub d: usize,
    pub k: usize,
    pub vectors: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_prime: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        Self {
            schema: SCHEMA,
            d: inst.d(),
            k: inst.k(),
            vectors: inst.vectors().to_vec(),
            x: None,
            objective: None,
            l_prime: None,
            l: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: InstanceFile = serde_json::from_str(text)
            .map_err(|e| CliError::parse(format!("malformed instance: {e}")))?;
        if file.schema != SCHEMA {
            return Err(CliError::parse(format!(
                "unsupported instance schema {}, expected {SCHEMA}",
                file.schema
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    #[cfg(test)]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn instance(&self) -> Result<Instance, CliError> {
        Ok(Instance::new(self.d, self.k, self.vectors.clone())?)
    }

    /// The objective stored in the file, if any.
    pub fn objective_kind(&self) -> Result<Option<ObjectiveKind>, CliError> {
        self.objective
            .as_deref()
            .map(|name| objective_from_parts(name, self.l_prime, self.l))
            .transpose()
    }
}

/// Builds an objective from a name (`D`, `A`, `E`, `ratio` or `ratio(l',l)`)
/// and optional orders.
pub fn objective_from_parts(
    name: &str,
    l_prime: Option<usize>,
    l: Option<usize>,
) -> Result<ObjectiveKind, CliError> {
    if name.eq_ignore_ascii_case("ratio") {
        return match (l_prime, l) {
            (Some(l_prime), Some(l)) => Ok(ObjectiveKind::Ratio { l_prime, l }),
            _ => Err(CliError::parse("ratio objective needs both l' and l")),
        };
    }
    Ok(name.parse()?)
}

/// SHA-256 of the canonical (compact, fixed field order) JSON of `d`, `k`
/// and the vectors.
pub fn instance_digest(inst: &Instance) -> String {
    let canonical =
        serde_json::to_string(&InstanceFile::from_instance(inst)).expect("instance serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Reads fractional weights from a bare array, an object with `x`, or a
/// report with a `fractional.x` block.
pub fn load_x(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::parse(format!("malformed weights file: {e}")))?;
    let array = match &value {
        Value::Array(_) => &value,
        Value::Object(map) => map
            .get("x")
            .or_else(|| map.get("fractional").and_then(|f| f.get("x")))
            .ok_or_else(|| CliError::parse("weights file has no `x` array"))?,
        _ => {
            return Err(CliError::parse(
                "weights file must hold an array or an object",
            ))
        }
    };
    serde_json::from_value(array.clone())
        .map_err(|e| CliError::parse(format!("malformed weights: {e}")))
}

pub fn write_output(path: Option<&Path>, json: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, format!("{json}\n"))
            .map_err(|e| CliError::other(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}
