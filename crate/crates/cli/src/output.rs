use std::io::Write;
use std::path::{Path, PathBuf};

use classcpd::ingest::{
    encode_and_normalize, load_table, EncodedTable, LoadOptions, NormalizeOptions,
};
use serde::Serialize;

use crate::args::InputArgs;
use crate::error::CliError;

/// Version of the result document layout.
pub const SCHEMA_VERSION: u32 = 1;

pub fn delimiter_byte(c: char) -> Result<u8, CliError> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| CliError::usage(format!("delimiter '{c}' is not a single ASCII character")))
}

pub fn load_features(input: &InputArgs) -> Result<EncodedTable, CliError> {
    let options = LoadOptions {
        delimiter: delimiter_byte(input.delimiter)?,
        label: input.label.clone(),
        ..LoadOptions::default()
    };
    let table = load_table(&input.input, &options)?;
    let normalize = NormalizeOptions {
        normalize: !input.no_normalize,
        estimator: input.estimator(),
    };
    Ok(encode_and_normalize(&table, normalize)?)
}

/// Writes `bytes` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Write {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

pub fn emit_json<T: Serialize>(path: Option<&Path>, doc: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(doc)?;
    bytes.push(b'\n');
    emit(path, &bytes)
}

pub fn emit_csv<T: Serialize>(path: Option<&Path>, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Encode(e.to_string()))?;
    emit(path, &bytes)
}
