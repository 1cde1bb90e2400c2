//! Placeholder substitution over every string of a JSON tree, so typed
//! recipes can carry `{param}` anywhere a string is allowed.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use cq_circuit::template::{placeholders, render};

/// Calls `f` on every string in the tree, object keys excluded.
pub fn visit_strings(value: &Value, f: &mut impl FnMut(&str)) {
    match value {
        Value::String(s) => f(s),
        Value::Array(items) => items.iter().for_each(|v| visit_strings(v, f)),
        Value::Object(map) => map.values().for_each(|v| visit_strings(v, f)),
        _ => {}
    }
}

pub fn render_json(value: &Value, lookup: &impl Fn(&str) -> Option<String>) -> Result<Value, String> {
    Ok(match value {
        Value::String(s) => Value::String(render(s, lookup)?),
        Value::Array(items) => Value::Array(items.iter().map(|v| render_json(v, lookup)).collect::<Result<_, _>>()?),
        Value::Object(map) => Value::Object(
            map.iter().map(|(k, v)| Ok((k.clone(), render_json(v, lookup)?))).collect::<Result<_, String>>()?,
        ),
        other => other.clone(),
    })
}

/// Round-trips `item` through JSON with every string rendered.
pub fn render_typed<T: Serialize + DeserializeOwned>(item: &T, lookup: &impl Fn(&str) -> Option<String>) -> Result<T, String> {
    let value = serde_json::to_value(item).map_err(|e| e.to_string())?;
    serde_json::from_value(render_json(&value, lookup)?).map_err(|e| e.to_string())
}

/// Placeholder names used anywhere in `item`.
pub fn typed_placeholders<T: Serialize>(item: &T) -> Result<Vec<String>, String> {
    let value = serde_json::to_value(item).map_err(|e| e.to_string())?;
    let mut names = Vec::new();
    let mut error = None;
    visit_strings(&value, &mut |s| match placeholders(s) {
        Ok(found) => names.extend(found),
        Err(e) => error = Some(e),
    });
    match error {
        Some(e) => Err(e),
        None => Ok(names),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_nested_strings_only() {
        let v = serde_json::json!({"a": "{x}", "b": [1, "R{x}"], "{x}": true});
        let out = render_json(&v, &|n| (n == "x").then(|| "7".to_string())).unwrap();
        assert_eq!(out, serde_json::json!({"a": "7", "b": [1, "R7"], "{x}": true}));
    }
}
