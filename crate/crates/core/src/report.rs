//! Deterministic JSON output: keys in sorted order, floats with 17
//! significant digits, two-space indentation.

use serde::Serialize;
use serde_json::Value;

/// Serializes `value` canonically. Non-finite floats become `null`.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String, serde_json::Error> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(v: &Value, level: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => out.push_str(&u.to_string()),
            (None, Some(i)) => out.push_str(&i.to_string()),
            _ => out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(level + 1, out);
                write_value(item, level + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(level, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                indent(level + 1, out);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*k], level + 1, out);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(level, out);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn keys_sorted_and_floats_fixed() {
        let mut m = HashMap::new();
        m.insert("zeta", 0.1);
        m.insert("alpha", 2.0);
        m.insert("mid", f64::NAN);
        let s = to_canonical_json(&m).unwrap();
        assert_eq!(
            s,
            "{\n  \"alpha\": 2.0000000000000000e0,\n  \"mid\": null,\n  \"zeta\": 1.0000000000000001e-1\n}\n"
        );
        let back: HashMap<String, Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back["zeta"], Some(0.1));
    }

    #[test]
    fn integers_stay_integers() {
        assert_eq!(to_canonical_json(&vec![1u32, 2]).unwrap(), "[\n  1,\n  2\n]\n");
    }
}
