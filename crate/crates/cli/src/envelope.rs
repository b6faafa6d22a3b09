//! The output envelope shared by every subcommand.

use std::collections::BTreeMap;

use serde_json::{Map, Number, Value};

/// A result value with its unit. Dimensionless quantities use `"1"`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub value: Value,
    pub unit: &'static str,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub equations: Vec<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub notes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub results: BTreeMap<String, Quantity>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

/// JSON number for finite values, a string for `±inf` and `nan`.
pub fn number(x: f64) -> Value {
    Number::from_f64(x).map_or_else(|| Value::String(x.to_string()), Value::Number)
}

pub fn numbers(xs: impl IntoIterator<Item = f64>) -> Value {
    Value::Array(xs.into_iter().map(number).collect())
}

impl Envelope {
    pub fn new(command: &str) -> Self {
        Envelope {
            command: command.to_owned(),
            inputs: BTreeMap::new(),
            results: BTreeMap::new(),
            warnings: Vec::new(),
            provenance: Provenance::default(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.to_owned(), value.into());
        self
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>, unit: &'static str) -> &mut Self {
        self.results.insert(
            key.to_owned(),
            Quantity {
                value: value.into(),
                unit,
            },
        );
        self
    }

    pub fn real(&mut self, key: &str, value: f64, unit: &'static str) -> &mut Self {
        self.result(key, number(value), unit)
    }

    pub fn to_value(&self) -> Value {
        let mut results = Map::new();
        for (k, q) in &self.results {
            let mut entry = Map::new();
            entry.insert("unit".into(), Value::String(q.unit.into()));
            entry.insert("value".into(), q.value.clone());
            results.insert(k.clone(), Value::Object(entry));
        }
        let mut provenance = Map::new();
        provenance.insert(
            "equations".into(),
            self.provenance
                .equations
                .iter()
                .cloned()
                .map(Value::String)
                .collect(),
        );
        provenance.insert(
            "notes".into(),
            Value::Object(
                self.provenance
                    .notes
                    .iter()
                    .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                    .collect(),
            ),
        );
        provenance.insert(
            "tolerances".into(),
            Value::Object(
                self.provenance
                    .tolerances
                    .iter()
                    .map(|(k, v)| (k.clone(), number(*v)))
                    .collect(),
            ),
        );
        provenance.insert(
            "version".into(),
            Value::String(env!("CARGO_PKG_VERSION").into()),
        );

        let mut root = Map::new();
        root.insert("command".into(), Value::String(self.command.clone()));
        root.insert(
            "inputs".into(),
            Value::Object(self.inputs.clone().into_iter().collect()),
        );
        root.insert("provenance".into(), Value::Object(provenance));
        root.insert("results".into(), Value::Object(results));
        root.insert(
            "warnings".into(),
            self.warnings.iter().cloned().map(Value::String).collect(),
        );
        sort_keys(Value::Object(root))
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn to_json(&self) -> String {
        render_json(&self.to_value())
    }

    /// A header of `name [unit]` columns and one data row, columns sorted
    /// by result name.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let header: Vec<String> = self
            .results
            .iter()
            .map(|(k, q)| format!("{k} [{}]", q.unit))
            .collect();
        let row: Vec<String> = self.results.values().map(|q| csv_cell(&q.value)).collect();
        w.write_record(&header).expect("in-memory write");
        w.write_record(&row).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

/// Serializes with two-space indentation, sorted keys and LF endings.
pub fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(&sort_keys(v.clone())).expect("JSON values serialize");
    s.push('\n');
    s
}

fn sort_keys(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let sorted: BTreeMap<String, Value> =
                m.into_iter().map(|(k, v)| (k, sort_keys(v))).collect();
            Value::Object(sorted.into_iter().collect())
        }
        Value::Array(a) => Value::Array(a.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

fn csv_scalar(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:.16e}"),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Null => String::new(),
        Value::Array(a) => a.iter().map(csv_scalar).collect::<Vec<_>>().join(":"),
        Value::Object(_) => v.to_string(),
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Array(a) => a.iter().map(csv_scalar).collect::<Vec<_>>().join(";"),
        other => csv_scalar(other),
    }
}
