//! XOS instance files: the scalar schema with `items` and `clauses` in place
//! of `values`. Matroid members, edge endpoints and interval owners are item ids.

use serde::Deserialize;
use serde_json::Value;

use super::{XosInstance, XosValuation};
use crate::error::{Error, Result};
use crate::instance::{arrival_time, parse_conflicts, parse_matroid, real_list, write_conflicts, write_matroid, RawConflicts};
use crate::json::CanonWriter;
use crate::scalar::Scalar;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawXos {
    #[serde(rename = "T")]
    t: usize,
    items: Vec<Vec<usize>>,
    probs: Vec<Vec<f64>>,
    /// `clauses[t][k]` is the list of additive clauses of outcome `k`.
    clauses: Vec<Vec<Vec<Vec<f64>>>>,
    matroid: Value,
    #[serde(default)]
    conflicts: RawConflicts,
    #[serde(default)]
    metadata: String,
}

pub fn parse_xos<S: Scalar>(text: &str) -> Result<XosInstance<S>> {
    let raw: RawXos = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    for (what, len) in [("items", raw.items.len()), ("probs", raw.probs.len()), ("clauses", raw.clauses.len())] {
        if len != raw.t {
            return Err(Error::Schema(format!("T = {} but {what} has {len} rows", raw.t)));
        }
    }
    let mut items = Vec::with_capacity(raw.t);
    for list in &raw.items {
        let mut z = Vec::with_capacity(list.len());
        for &i in list {
            z.push(i.checked_sub(1).ok_or_else(|| Error::Schema("item ids must be 1-based, got 0".into()))?);
        }
        items.push(z);
    }
    let mut dists = Vec::with_capacity(raw.t);
    for (t, (ps, cs)) in raw.probs.iter().zip(&raw.clauses).enumerate() {
        if ps.len() != cs.len() {
            return Err(Error::Schema(format!(
                "agent {}: {} probabilities but {} clause tables",
                t + 1,
                ps.len(),
                cs.len()
            )));
        }
        let mut d = Vec::with_capacity(ps.len());
        for (&p, table) in ps.iter().zip(cs) {
            let clauses = table.iter().map(|c| c.iter().map(|&w| S::of(w)).collect()).collect();
            d.push((S::of(p), XosValuation::new(clauses, items[t].len())?));
        }
        dists.push(d);
    }
    let n: usize = items.iter().map(Vec::len).sum();
    let mut owner = vec![0; n];
    for (t, list) in items.iter().enumerate() {
        for &i in list {
            if i < n {
                owner[i] = t;
            }
        }
    }
    let matroid = parse_matroid(&raw.matroid)?;
    let conflicts = parse_conflicts(raw.conflicts, n, |i| arrival_time::<S>(owner[i]))?;
    XosInstance::new(items, dists, matroid, conflicts, raw.metadata)
}

/// Canonical document with sorted keys and 1-based ids.
pub fn serialize_xos<S: Scalar>(x: &XosInstance<S>) -> String {
    let mut w = CanonWriter::new();
    w.open_object();
    w.key("T");
    w.raw(&x.agents().to_string());
    w.key("clauses");
    w.open_array();
    for t in 0..x.agents() {
        let tables: Vec<String> = x
            .outcomes(t)
            .iter()
            .map(|(_, v)| {
                let cs: Vec<String> = v.clauses().iter().map(|c| real_list(c)).collect();
                format!("[{}]", cs.join(", "))
            })
            .collect();
        w.item_inline(&format!("[{}]", tables.join(", ")));
    }
    w.close_array();
    w.key("conflicts");
    write_conflicts(&mut w, x.conflicts(), "item");
    w.key("items");
    w.open_array();
    for t in 0..x.agents() {
        let ids: Vec<String> = x.items(t).iter().map(|i| (i + 1).to_string()).collect();
        w.item_inline(&format!("[{}]", ids.join(", ")));
    }
    w.close_array();
    w.key("matroid");
    write_matroid(&mut w, x.matroid());
    w.key("metadata");
    w.string(x.metadata());
    w.key("probs");
    w.open_array();
    for t in 0..x.agents() {
        let ps: Vec<S> = x.outcomes(t).iter().map(|(p, _)| *p).collect();
        w.item_inline(&real_list(&ps));
    }
    w.close_array();
    w.close_object();
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
        "T": 2,
        "items": [[1, 2], [3]],
        "probs": [[0.5, 0.5], [1]],
        "clauses": [[[[3, 0], [0, 2]], [[1, 1]]], [[[4]]]],
        "matroid": {"kind": "uniform", "rank": 2},
        "conflicts": {"edges": [[1, 3]], "intervals": [{"item": 2, "resource": 1, "end": 2.5}]}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let x: XosInstance<f64> = parse_xos(DOC).unwrap();
        assert_eq!(x.item_count(), 3);
        assert_eq!(x.owner(2), 1);
        assert_eq!(x.outcomes(0)[0].1.value(0b11), 3.0);
        let text = serialize_xos(&x);
        assert!(text.contains("\"item\": 2"));
        let back: XosInstance<f64> = parse_xos(&text).unwrap();
        assert_eq!(back, x);
        assert_eq!(serialize_xos(&back), text);
    }

    #[test]
    fn interval_ends_use_owner_arrival() {
        // item 3 belongs to agent 2, which arrives at time 2
        let early = DOC.replace(r#""item": 2, "resource": 1, "end": 2.5"#, r#""item": 3, "resource": 1, "end": 1.5"#);
        assert!(matches!(parse_xos::<f64>(&early), Err(Error::Invariant(_))));
    }

    #[test]
    fn shape_errors() {
        let bad = DOC.replace(r#""probs": [[0.5, 0.5], [1]]"#, r#""probs": [[1], [1]]"#);
        assert!(matches!(parse_xos::<f64>(&bad), Err(Error::Schema(_))));
        let neg = DOC.replace("[[4]]", "[[-4]]");
        assert!(matches!(parse_xos::<f64>(&neg), Err(Error::Invariant(_))));
    }
}
