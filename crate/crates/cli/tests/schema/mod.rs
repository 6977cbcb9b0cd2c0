//! Minimal JSON Schema checker covering the keywords used by the shipped
//! schema: type, const, enum, required, properties, additionalProperties,
//! items, oneOf and local `$ref`.

use serde_json::Value;

pub fn load() -> Value {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/fbmlab-output.v1.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn validate(root: &Value, doc: &Value) -> Result<(), String> {
    check(root, root, doc, "$")
}

pub fn validate_def(root: &Value, name: &str, doc: &Value) -> Result<(), String> {
    check(root, &root["$defs"][name], doc, "$")
}

fn type_matches(name: &str, v: &Value) -> bool {
    match name {
        "null" => v.is_null(),
        "boolean" => v.is_boolean(),
        "string" => v.is_string(),
        "number" => v.is_number(),
        "integer" => v.is_i64() || v.is_u64(),
        "array" => v.is_array(),
        "object" => v.is_object(),
        other => panic!("unknown type {other}"),
    }
}

fn check(root: &Value, schema: &Value, v: &Value, at: &str) -> Result<(), String> {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.strip_prefix("#/$defs/").unwrap_or_else(|| panic!("unsupported $ref {r}"));
        let target = root["$defs"].get(name).unwrap_or_else(|| panic!("dangling $ref {r}"));
        return check(root, target, v, at);
    }
    if let Some(t) = schema.get("type") {
        let ok = match t {
            Value::String(s) => type_matches(s, v),
            Value::Array(ts) => ts.iter().any(|s| type_matches(s.as_str().unwrap(), v)),
            _ => panic!("bad type keyword"),
        };
        if !ok {
            return Err(format!("{at}: expected type {t}, got {v}"));
        }
    }
    if let Some(c) = schema.get("const") {
        if c != v {
            return Err(format!("{at}: expected {c}, got {v}"));
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(v) {
            return Err(format!("{at}: {v} not in enum"));
        }
    }
    if let Some(branches) = schema.get("oneOf").and_then(Value::as_array) {
        let matched = branches.iter().filter(|b| check(root, b, v, at).is_ok()).count();
        if matched != 1 {
            return Err(format!("{at}: {matched} oneOf branches match"));
        }
    }
    if let Some(obj) = v.as_object() {
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            let key = key.as_str().unwrap();
            if !obj.contains_key(key) {
                return Err(format!("{at}: missing {key}"));
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (key, value) in obj {
            match props.and_then(|p| p.get(key)) {
                Some(sub) => check(root, sub, value, &format!("{at}.{key}"))?,
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{at}: unexpected key {key}"));
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), v.as_array()) {
        for (i, item) in arr.iter().enumerate() {
            check(root, items, item, &format!("{at}[{i}]"))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rejects_wrong_version_and_extra_keys() {
        let root = load();
        let doc = json!({"schema_version": "fbmlab-output/0", "kind": "mc_estimate", "data": {}});
        assert!(validate(&root, &doc).is_err());
        let params = json!({"hurst": 0.5, "mu": 0.0, "horizon": 1.0, "sigma": 1.0});
        assert!(validate_def(&root, "params", &params).is_err());
        let params = json!({"hurst": 0.5, "mu": 0.0, "horizon": 1});
        assert!(validate_def(&root, "params", &params).is_ok());
    }
}
