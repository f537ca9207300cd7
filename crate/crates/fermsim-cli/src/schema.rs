//! The JSON Schemas shipped in `schemas/`, compiled into the binary.

use std::path::Path;
use std::sync::OnceLock;

use jsonschema::Validator;
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    State,
    Circuit,
    KrausMap,
    VerifyReport,
    CompileReport,
    EncodingTable,
    ExtractionCircuits,
    EntanglementReport,
}

impl Schema {
    pub const ALL: [Schema; 8] = [
        Schema::State,
        Schema::Circuit,
        Schema::KrausMap,
        Schema::VerifyReport,
        Schema::CompileReport,
        Schema::EncodingTable,
        Schema::ExtractionCircuits,
        Schema::EntanglementReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Schema::State => "state",
            Schema::Circuit => "circuit",
            Schema::KrausMap => "kraus-map",
            Schema::VerifyReport => "verify-report",
            Schema::CompileReport => "compile-report",
            Schema::EncodingTable => "encoding-table",
            Schema::ExtractionCircuits => "extraction-circuits",
            Schema::EntanglementReport => "entanglement-report",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            Schema::State => include_str!("../../../schemas/state.schema.json"),
            Schema::Circuit => include_str!("../../../schemas/circuit.schema.json"),
            Schema::KrausMap => include_str!("../../../schemas/kraus-map.schema.json"),
            Schema::VerifyReport => include_str!("../../../schemas/verify-report.schema.json"),
            Schema::CompileReport => include_str!("../../../schemas/compile-report.schema.json"),
            Schema::EncodingTable => include_str!("../../../schemas/encoding-table.schema.json"),
            Schema::ExtractionCircuits => include_str!("../../../schemas/extraction-circuits.schema.json"),
            Schema::EntanglementReport => include_str!("../../../schemas/entanglement-report.schema.json"),
        }
    }

    fn validator(self) -> &'static Validator {
        static CACHE: [OnceLock<Validator>; 8] = [const { OnceLock::new() }; 8];
        CACHE[self as usize].get_or_init(|| {
            let schema: Value = serde_json::from_str(self.source()).expect("bundled schema is valid JSON");
            jsonschema::validator_for(&schema).expect("bundled schema compiles")
        })
    }

    /// Every violation as `path: message`, empty when the instance conforms.
    pub fn violations(self, instance: &Value) -> Vec<String> {
        self.validator()
            .iter_errors(instance)
            .map(|e| {
                let path = e.instance_path().to_string();
                format!("{}: {e}", if path.is_empty() { "/" } else { &path })
            })
            .collect()
    }
}

/// Reads `path`, validates it against `schema` and deserialises it.
pub fn load<T: DeserializeOwned>(path: &Path, schema: Schema) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let value: Value = serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.into(), source })?;
    let errors = schema.violations(&value);
    if !errors.is_empty() {
        return Err(CliError::Schema { path: path.into(), schema: schema.name(), errors: errors.join("\n") });
    }
    serde_json::from_value(value).map_err(|source| CliError::Json { path: path.into(), source })
}
