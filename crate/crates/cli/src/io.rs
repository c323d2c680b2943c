//! Set and ordering files, JSON encoding rules and atomic output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use graham_core::{Error, PrimeModulus, Residue};
use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Largest integer a JSON number may carry without loss in a double.
pub const JSON_SAFE_MAX: u64 = 1 << 53;

/// A parsed input file: the modulus and the listed elements in file order.
#[derive(Debug, Clone)]
pub struct SetFile {
    pub modulus: PrimeModulus,
    pub elements: Vec<Residue>,
}

impl SetFile {
    pub fn values(&self) -> Vec<u64> {
        self.elements.iter().map(|r| r.value()).collect()
    }
}

pub fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads `{"p": .., "elements": [..]}` or plain text (p on the first line,
/// then one element per line). Elements are reduced mod p; duplicates after
/// reduction, and 0 unless `allow_zero`, are rejected.
pub fn parse_set_file(path: &Path, allow_zero: bool) -> CliResult<SetFile> {
    let bytes = read_file(path)?;
    parse_set_bytes(path, &bytes, &["elements"], allow_zero)
}

/// Same formats as [`parse_set_file`], with the JSON list under `"ordering"`
/// (or `"elements"`). Order is preserved.
pub fn parse_ordering_file(path: &Path, allow_zero: bool) -> CliResult<SetFile> {
    let bytes = read_file(path)?;
    parse_set_bytes(path, &bytes, &["ordering", "elements"], allow_zero)
}

pub fn parse_set_bytes(
    path: &Path,
    bytes: &[u8],
    keys: &[&str],
    allow_zero: bool,
) -> CliResult<SetFile> {
    let err = |msg: String| CliError::Parse {
        path: path.to_path_buf(),
        msg,
    };
    let text = std::str::from_utf8(bytes).map_err(|e| err(e.to_string()))?;
    let (p, raw) = if text.trim_start().starts_with('{') {
        parse_json_set(text, keys).map_err(err)?
    } else {
        parse_text_set(text).map_err(err)?
    };
    let p = u64::try_from(p).map_err(|_| Error::NotPrime(0))?;
    let modulus = PrimeModulus::new(p)?;
    let mut seen = std::collections::HashSet::with_capacity(raw.len());
    let mut elements = Vec::with_capacity(raw.len());
    for x in raw {
        let r = modulus.residue(x);
        if r.is_zero() && !allow_zero {
            return Err(Error::ZeroElement.into());
        }
        if !seen.insert(r.value()) {
            return Err(Error::DuplicateElement(r.value()).into());
        }
        elements.push(r);
    }
    Ok(SetFile { modulus, elements })
}

fn json_int(v: &Value) -> Option<i128> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(i128::from)
            .or_else(|| n.as_u64().map(i128::from)),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn parse_json_set(text: &str, keys: &[&str]) -> Result<(i128, Vec<i128>), String> {
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let p = value
        .get("p")
        .and_then(json_int)
        .ok_or("missing integer field \"p\"")?;
    let list = keys
        .iter()
        .find_map(|k| value.get(*k))
        .and_then(Value::as_array)
        .ok_or_else(|| format!("missing array field \"{}\"", keys[0]))?;
    let elements = list
        .iter()
        .map(|v| json_int(v).ok_or_else(|| format!("{v} is not an integer")))
        .collect::<Result<_, _>>()?;
    Ok((p, elements))
}

fn parse_text_set(text: &str) -> Result<(i128, Vec<i128>), String> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let parse = |s: &str| s.parse::<i128>().map_err(|_| format!("{s:?} is not an integer"));
    let p = parse(tokens.next().ok_or("empty file")?)?;
    let elements = tokens.map(parse).collect::<Result<_, _>>()?;
    Ok((p, elements))
}

/// Integers up to 2^53 as JSON numbers, larger ones as decimal strings.
pub fn json_u64(v: u64) -> Value {
    if v <= JSON_SAFE_MAX {
        Value::from(v)
    } else {
        Value::String(v.to_string())
    }
}

pub fn json_biguint(v: &BigUint) -> Value {
    match v.to_u64() {
        Some(x) => json_u64(x),
        None => Value::String(v.to_string()),
    }
}

pub fn json_bigint(v: &BigInt) -> Value {
    match v.to_i64() {
        Some(x) if x.unsigned_abs() <= JSON_SAFE_MAX => Value::from(x),
        _ => Value::String(v.to_string()),
    }
}

pub fn json_rational(v: &num_rational::BigRational) -> Value {
    let mut map = Map::new();
    map.insert("num".into(), json_bigint(v.numer()));
    map.insert("den".into(), json_bigint(v.denom()));
    Value::Object(map)
}

/// Rewrites every unsigned JSON number above 2^53 as a string.
pub fn safe_integers(value: Value) -> Value {
    match value {
        Value::Number(n) => match n.as_u64() {
            Some(x) => json_u64(x),
            None => match n.as_i64() {
                Some(x) if x.unsigned_abs() > JSON_SAFE_MAX => Value::String(x.to_string()),
                _ => Value::Number(n),
            },
        },
        Value::Array(items) => Value::Array(items.into_iter().map(safe_integers).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, safe_integers(v))).collect())
        }
        other => other,
    }
}

pub fn to_json<T: serde::Serialize>(v: &T) -> Value {
    safe_integers(serde_json::to_value(v).expect("plain data serializes"))
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes(value: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("plain data serializes");
    out.push(b'\n');
    out
}

/// Where a command writes its payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutTarget {
    Stdout,
    File(PathBuf),
}

impl OutTarget {
    pub fn parse(s: &str) -> Self {
        if s == "-" {
            OutTarget::Stdout
        } else {
            OutTarget::File(PathBuf::from(s))
        }
    }

    /// `<out>.run.json` for file outputs.
    pub fn record_path(&self) -> Option<PathBuf> {
        match self {
            OutTarget::Stdout => None,
            OutTarget::File(path) => {
                let mut name = path.as_os_str().to_owned();
                name.push(".run.json");
                Some(PathBuf::from(name))
            }
        }
    }

    pub fn write(&self, bytes: &[u8]) -> CliResult<()> {
        match self {
            OutTarget::Stdout => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)
                    .and_then(|_| out.flush())
                    .map_err(|e| CliError::io("<stdout>", e))
            }
            OutTarget::File(path) => write_atomic(path, bytes),
        }
    }
}

/// Writes to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("--out {} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = dir.join(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}
