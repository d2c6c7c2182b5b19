//! Text formats: complexes, field exports and run configuration.

mod config;
mod export;
mod format;

use sha2::{Digest, Sha256};

pub use config::{ConfigError, RunConfig, CONFIG_ENV};
pub use export::{read_field_csv, write_field_csv, write_mesh, FieldCsv, Header, MeshExport, CSV_COLUMNS};
pub use format::{
    parse_complex, parse_file, serialize_complex, serialize_file, ComplexFile, FieldSpec, ParseError, WeightSpec,
};

/// Lowercase hex SHA-256 of a string.
pub fn hash_hex(s: &str) -> String {
    Sha256::digest(s.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}
