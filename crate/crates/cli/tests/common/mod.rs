#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_causal-compress")).args(args).output().expect("spawn binary")
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn json(path: &Path) -> Value {
    serde_json::from_str(&read(path)).unwrap()
}

pub fn schema(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas").join(name);
    json(&path)
}

/// Checks `v` against the JSON Schema keywords the shipped schemas use.
/// Returns the first violation as a JSON-pointer-ish location.
pub fn validate(schema: &Value, v: &Value) -> Result<(), String> {
    check(schema, schema, v, "$")
}

fn check(root: &Value, s: &Value, v: &Value, at: &str) -> Result<(), String> {
    if let Some(r) = s.get("$ref").and_then(Value::as_str) {
        let name = r.strip_prefix("#/$defs/").ok_or_else(|| format!("unsupported $ref {r}"))?;
        return check(root, &root["$defs"][name], v, at);
    }
    if let Some(options) = s.get("oneOf").and_then(Value::as_array) {
        let ok = options.iter().filter(|o| check(root, o, v, at).is_ok()).count();
        if ok != 1 {
            return Err(format!("{at}: matches {ok} oneOf branches"));
        }
    }
    if let Some(options) = s.get("enum").and_then(Value::as_array) {
        if !options.contains(v) {
            return Err(format!("{at}: {v} not in enum"));
        }
    }
    if let Some(t) = s.get("type").and_then(Value::as_str) {
        let ok = match t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            "null" => v.is_null(),
            "boolean" => v.is_boolean(),
            _ => return Err(format!("unsupported type {t}")),
        };
        if !ok {
            return Err(format!("{at}: {v} is not {t}"));
        }
    }
    if let Some(x) = v.as_f64() {
        if let Some(m) = s.get("minimum").and_then(Value::as_f64) {
            if x < m {
                return Err(format!("{at}: {x} < minimum {m}"));
            }
        }
        if let Some(m) = s.get("exclusiveMinimum").and_then(Value::as_f64) {
            if x <= m {
                return Err(format!("{at}: {x} <= exclusive minimum {m}"));
            }
        }
    }
    if let Some(obj) = v.as_object() {
        for key in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            let key = key.as_str().unwrap();
            if !obj.contains_key(key) {
                return Err(format!("{at}: missing {key}"));
            }
        }
        let props = s.get("properties").and_then(Value::as_object);
        for (k, item) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(sub) => check(root, sub, item, &format!("{at}.{k}"))?,
                None if s.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{at}: unexpected property {k}"))
                }
                None => {}
            }
        }
    }
    if let Some(arr) = v.as_array() {
        let len = arr.len() as u64;
        if s.get("minItems").and_then(Value::as_u64).is_some_and(|m| len < m) {
            return Err(format!("{at}: too few items"));
        }
        if s.get("maxItems").and_then(Value::as_u64).is_some_and(|m| len > m) {
            return Err(format!("{at}: too many items"));
        }
        let prefix = s.get("prefixItems").and_then(Value::as_array);
        for (k, item) in arr.iter().enumerate() {
            let sub = prefix.and_then(|p| p.get(k)).or_else(|| s.get("items"));
            if let Some(sub) = sub {
                check(root, sub, item, &format!("{at}[{k}]"))?;
            }
        }
    }
    Ok(())
}

/// Writes a panel CSV by hand: header `x1..xn,y1..yn`.
pub fn write_panel(path: &Path, n: usize, rows: &[Vec<f64>]) {
    let mut s: Vec<String> = (1..=n).map(|t| format!("x{t}")).chain((1..=n).map(|t| format!("y{t}"))).collect();
    let mut text = s.join(",");
    text.push('\n');
    for r in rows {
        s = r.iter().map(|v| v.to_string()).collect();
        text.push_str(&s.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

/// Distinct coordinates a solution-path CSV ever moved.
pub fn path_coordinates(path: &Path) -> Vec<usize> {
    let mut v: Vec<usize> = read(path)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}
