//! Reports with a fixed key order, rendered either as canonical JSON or as an
//! aligned two-column table.

use prophet_core::json::{real, CanonWriter};

#[derive(Debug, Clone)]
pub enum Field {
    Int(u64),
    Real(f64),
    Str(String),
    Bool(bool),
    Null,
    Reals(Vec<f64>),
    /// Pre-rendered JSON values, one per array entry.
    Raw(Vec<String>),
    Obj(Report),
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    fields: Vec<(String, Field)>,
}

fn num(x: f64) -> String {
    if x.is_finite() {
        // fold −0 into 0
        real(x + 0.0)
    } else {
        "null".into()
    }
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, f: Field) -> &mut Self {
        self.fields.push((key.to_string(), f));
        self
    }

    pub fn int(&mut self, key: &str, v: usize) -> &mut Self {
        self.push(key, Field::Int(v as u64))
    }

    pub fn real(&mut self, key: &str, v: f64) -> &mut Self {
        self.push(key, Field::Real(v))
    }

    pub fn opt_real(&mut self, key: &str, v: Option<f64>) -> &mut Self {
        self.push(key, v.map_or(Field::Null, Field::Real))
    }

    pub fn str(&mut self, key: &str, v: impl Into<String>) -> &mut Self {
        self.push(key, Field::Str(v.into()))
    }

    pub fn obj(&mut self, key: &str, r: Report) -> &mut Self {
        self.push(key, Field::Obj(r))
    }

    pub fn to_json(&self) -> String {
        let mut w = CanonWriter::new();
        self.write(&mut w);
        w.finish()
    }

    fn write(&self, w: &mut CanonWriter) {
        w.open_object();
        for (k, f) in &self.fields {
            w.key(k);
            match f {
                Field::Int(v) => w.raw(&v.to_string()),
                Field::Real(v) => w.raw(&num(*v)),
                Field::Str(s) => w.string(s),
                Field::Bool(b) => w.raw(if *b { "true" } else { "false" }),
                Field::Null => w.raw("null"),
                Field::Reals(v) => w.raw(&format!("[{}]", v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", "))),
                Field::Raw(items) => {
                    w.open_array();
                    for it in items {
                        w.item_inline(it);
                    }
                    w.close_array();
                }
                Field::Obj(r) => r.write(w),
            }
        }
        w.close_object();
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        self.table_into(&mut out, "");
        out
    }

    fn table_into(&self, out: &mut String, prefix: &str) {
        for (k, f) in &self.fields {
            let name = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            let value = match f {
                Field::Int(v) => v.to_string(),
                Field::Real(v) => format!("{:.6}", v + 0.0),
                Field::Str(s) => s.clone(),
                Field::Bool(b) => b.to_string(),
                Field::Null => "-".into(),
                Field::Reals(v) => v.iter().map(|x| format!("{:.6}", x + 0.0)).collect::<Vec<_>>().join(" "),
                Field::Raw(items) => items.join(" "),
                Field::Obj(r) => {
                    r.table_into(out, &name);
                    continue;
                }
            };
            out.push_str(&format!("{name:<32} {value}\n"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_keeps_insertion_order() {
        let mut inner = Report::new();
        inner.real("mean", 1.5).push("gap", Field::Null);
        let mut r = Report::new();
        r.str("digest", "ab").int("seed", 7).obj("policy", inner).push("x", Field::Reals(vec![0.5, f64::NAN]));
        let doc: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(doc["policy"]["mean"], 1.5);
        assert!(doc["x"][1].is_null());
        let keys: Vec<&str> = doc.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        // serde_json sorts keys, so compare positions in the text instead
        let text = r.to_json();
        assert!(text.find("digest").unwrap() < text.find("seed").unwrap());
        assert!(text.find("seed").unwrap() < text.find("policy").unwrap());
        assert_eq!(keys.len(), 4);
    }

    #[test]
    fn table_flattens_nested_keys() {
        let mut inner = Report::new();
        inner.real("mean", 2.0);
        let mut r = Report::new();
        r.obj("policy", inner);
        assert!(r.to_table().starts_with("policy.mean"));
    }
}
