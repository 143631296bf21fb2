//! Result records and their json / csv / plain renderings.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::value::RawValue;
use serde_json::Value;

use crate::settings::Format;

/// `x` with 17 significant digits, as a JSON number token.
pub fn number17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_owned()
    }
}

#[derive(Debug, Clone)]
pub struct Record {
    pub quantity: String,
    pub params: BTreeMap<String, Value>,
    pub value: f64,
    pub tail_bound: f64,
    pub blocks_used: usize,
    pub runtime_ms: f64,
    /// Extra named values (alternative pathways, diagnostics).
    pub details: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    quantity: &'a str,
    params: &'a BTreeMap<String, Value>,
    value: Box<RawValue>,
    tail_bound: Box<RawValue>,
    blocks_used: usize,
    runtime_ms: f64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    details: BTreeMap<&'a str, Box<RawValue>>,
}

fn raw(x: f64) -> Box<RawValue> {
    RawValue::from_string(number17(x)).expect("valid number token")
}

impl Record {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let rec = JsonRecord {
                    quantity: &self.quantity,
                    params: &self.params,
                    value: raw(self.value),
                    tail_bound: raw(self.tail_bound),
                    blocks_used: self.blocks_used,
                    runtime_ms: (self.runtime_ms * 1e3).round() / 1e3,
                    details: self.details.iter().map(|(k, v)| (k.as_str(), raw(*v))).collect(),
                };
                serde_json::to_string_pretty(&rec).expect("serializable record")
            }
            Format::Csv => {
                let params = self
                    .params
                    .iter()
                    .map(|(k, v)| format!("{k}={}", plain_value(v)))
                    .collect::<Vec<_>>()
                    .join(";");
                let mut header = "quantity,params,value,tail_bound,blocks_used,runtime_ms".to_owned();
                let mut row = format!(
                    "{},{},{},{},{},{:.3}",
                    self.quantity,
                    params,
                    number17(self.value),
                    number17(self.tail_bound),
                    self.blocks_used,
                    self.runtime_ms
                );
                for (k, v) in &self.details {
                    header.push(',');
                    header.push_str(k);
                    row.push(',');
                    row.push_str(&number17(*v));
                }
                format!("{header}\n{row}")
            }
            Format::Plain => {
                let mut s = format!(
                    "{} = {}\n  tail bound {:.3e}, {} blocks, {:.1} ms",
                    self.quantity,
                    number17(self.value),
                    self.tail_bound,
                    self.blocks_used,
                    self.runtime_ms
                );
                for (k, v) in &self.params {
                    s.push_str(&format!("\n  {k}: {}", plain_value(v)));
                }
                for (k, v) in &self.details {
                    s.push_str(&format!("\n  {k} = {}", number17(*v)));
                }
                s
            }
        }
    }
}

fn plain_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
