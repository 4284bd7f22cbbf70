//! Deterministic JSON output: floats printed with 17 significant digits
//! so values round-trip bit-exactly and identical runs produce
//! byte-identical bytes.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;

struct SigFigs;

impl Formatter for SigFigs {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

/// Serialize a JSON value compactly with the 17-digit float convention,
/// newline-terminated.
pub fn to_string(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigs);
    value.serialize(&mut ser).expect("in-memory serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("serializer emits utf-8")
}

/// A float formatted the same way CSV cells are: 17 significant digits.
pub fn float_cell(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON number or null for non-finite input.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(x)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    } else {
        Value::Null
    }
}

/// JSON array of floats.
pub fn vec_f64(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// JSON array-of-arrays for a dense matrix given as rows.
pub fn matrix(rows: &[Vec<f64>]) -> Value {
    Value::Array(rows.iter().map(|r| vec_f64(r)).collect())
}
