use hyperdelta::Complex64;
use serde_json::{Map, Number, Value};

/// A real number at 17 significant digits; non-finite values become null.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format!("{x:.16e}");
    serde_json::from_str::<Number>(&text).map(Value::Number).unwrap_or(Value::Null)
}

pub fn cnum(z: Complex64) -> Value {
    obj([("re", num(z.re)), ("im", num(z.im))])
}

pub fn obj<const N: usize>(fields: [(&str, Value); N]) -> Value {
    let mut m = Map::new();
    for (k, v) in fields {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}

pub fn text(s: impl Into<String>) -> Value {
    Value::String(s.into())
}

pub fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}
