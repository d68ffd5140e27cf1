use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tzsolve_core::toeplitz::{pairs_to_complex, ToeplitzJson, ToeplitzOperator};
use tzsolve_core::C64;

use crate::error::{CliError, CliResult};

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

pub fn read_matrix(path: &Path) -> CliResult<ToeplitzOperator> {
    let json: ToeplitzJson = parse(path, &read(path)?)?;
    Ok(ToeplitzOperator::try_from(json)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RhsJson {
    Bare(Vec<[f64; 2]>),
    Wrapped { b: Vec<[f64; 2]> },
}

pub fn read_rhs(path: &Path) -> CliResult<Vec<C64>> {
    let pairs = match parse::<RhsJson>(path, &read(path)?)? {
        RhsJson::Bare(b) | RhsJson::Wrapped { b } => b,
    };
    Ok(pairs_to_complex(&pairs))
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(format!("stdout: {e}")))
        }
    }
}

pub fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(e.to_string()))?;
    text.push('\n');
    emit(path, &text)
}
