//! Instance file schema (JSON, 1-based indices) and its canonical writer.

use serde::Deserialize;
use serde_json::Value;

use super::{CappedSet, ConflictSpec, Instance, IntervalRequest, MatroidSpec, ValuationTable};
use crate::error::{Error, Result};
use crate::json::{real, CanonWriter};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Accept negative support values.
    pub allow_negative: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    #[serde(rename = "T")]
    t: usize,
    values: Vec<f64>,
    probs: Vec<Vec<f64>>,
    matroid: Value,
    #[serde(default)]
    conflicts: RawConflicts,
    #[serde(default)]
    metadata: String,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawConflicts {
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub intervals: Vec<RawInterval>,
    #[serde(default)]
    pub resources: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawInterval {
    #[serde(alias = "item")]
    pub agent: usize,
    pub resource: usize,
    pub end: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCapped {
    members: Vec<usize>,
    capacity: usize,
}

pub fn parse_instance<S: Scalar>(text: &str) -> Result<Instance<S>> {
    parse_instance_with(text, ParseOptions::default())
}

pub fn parse_instance_with<S: Scalar>(text: &str, opts: ParseOptions) -> Result<Instance<S>> {
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    if raw.probs.len() != raw.t {
        return Err(Error::Schema(format!("T = {} but probs has {} rows", raw.t, raw.probs.len())));
    }
    let support = raw.values.iter().map(|&v| S::of(v)).collect();
    let probs = raw.probs.iter().map(|r| r.iter().map(|&p| S::of(p)).collect()).collect();
    let valuations = ValuationTable::new(support, probs, opts.allow_negative)?;
    let matroid = parse_matroid(&raw.matroid)?;
    let conflicts = parse_conflicts(raw.conflicts, raw.t, super::arrival_time::<S>)?;
    Instance::new(valuations, matroid, conflicts, raw.metadata)
}

pub(crate) fn parse_conflicts<S: Scalar>(
    raw: RawConflicts,
    n: usize,
    arrival: impl Fn(usize) -> S,
) -> Result<ConflictSpec<S>> {
    let mut edges = Vec::with_capacity(raw.edges.len());
    for [a, b] in raw.edges {
        edges.push((zero_based(a, "edge endpoint")?, zero_based(b, "edge endpoint")?));
    }
    let mut intervals = Vec::with_capacity(raw.intervals.len());
    for r in raw.intervals {
        intervals.push(IntervalRequest {
            agent: zero_based(r.agent, "interval agent")?,
            resource: zero_based(r.resource, "interval resource")?,
            end: S::of(r.end),
        });
    }
    ConflictSpec::with_arrivals(edges, intervals, raw.resources, n, arrival)
}

fn zero_based(i: usize, what: &str) -> Result<usize> {
    i.checked_sub(1).ok_or_else(|| Error::Schema(format!("{what} must be 1-based, got 0")))
}

pub(crate) fn parse_matroid(v: &Value) -> Result<MatroidSpec> {
    let obj = v.as_object().ok_or_else(|| Error::Schema("matroid must be an object".into()))?;
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Schema("matroid.kind missing or not a string".into()))?;
    let field = |name: &str| -> Result<&Value> {
        obj.get(name).ok_or_else(|| Error::Schema(format!("matroid.{name} missing for kind {kind}")))
    };
    let allowed: &[&str] = match kind {
        "free" => &["kind"],
        "uniform" => &["kind", "rank"],
        "partition" => &["kind", "blocks"],
        "laminar" => &["kind", "sets"],
        "explicit" => &["kind", "maximal"],
        other => return Err(Error::UnsupportedMatroid(format!("unknown kind {other:?}"))),
    };
    if let Some(extra) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Schema(format!("unexpected matroid field {extra:?} for kind {kind}")));
    }
    let capped = |name: &str| -> Result<Vec<CappedSet>> {
        let raw: Vec<RawCapped> =
            serde_json::from_value(field(name)?.clone()).map_err(|e| Error::Schema(e.to_string()))?;
        raw.into_iter()
            .map(|r| {
                let members = r.members.into_iter().map(|m| zero_based(m, "matroid member")).collect::<Result<_>>()?;
                Ok(CappedSet::new(members, r.capacity))
            })
            .collect()
    };
    Ok(match kind {
        "free" => MatroidSpec::Free,
        "uniform" => {
            let rank = field("rank")?
                .as_u64()
                .ok_or_else(|| Error::Schema("matroid.rank must be a non-negative integer".into()))?;
            MatroidSpec::Uniform { rank: rank as usize }
        }
        "partition" => MatroidSpec::Partition { blocks: capped("blocks")? },
        "laminar" => MatroidSpec::Laminar { sets: capped("sets")? },
        _ => {
            let raw: Vec<Vec<usize>> =
                serde_json::from_value(field("maximal")?.clone()).map_err(|e| Error::Schema(e.to_string()))?;
            let maximal = raw
                .into_iter()
                .map(|s| s.into_iter().map(|m| zero_based(m, "matroid member")).collect::<Result<_>>())
                .collect::<Result<_>>()?;
            MatroidSpec::Explicit { maximal }
        }
    })
}

/// Canonical document: sorted keys, 1-based indices, reals with 17 significant digits.
pub fn serialize_instance<S: Scalar>(inst: &Instance<S>) -> String {
    let mut w = CanonWriter::new();
    w.open_object();
    w.key("T");
    w.raw(&inst.agents().to_string());
    w.key("conflicts");
    write_conflicts(&mut w, inst.conflicts(), "agent");
    w.key("matroid");
    write_matroid(&mut w, inst.matroid());
    w.key("metadata");
    w.string(inst.metadata());
    w.key("probs");
    w.open_array();
    for t in 0..inst.agents() {
        w.item_inline(&real_list(inst.valuations().row(t)));
    }
    w.close_array();
    w.key("values");
    w.raw(&real_list(inst.valuations().support()));
    w.close_object();
    w.finish()
}

pub(crate) fn write_conflicts<S: Scalar>(w: &mut CanonWriter, c: &ConflictSpec<S>, owner_key: &str) {
    w.open_object();
    w.key("edges");
    if c.edges().is_empty() {
        w.raw("[]");
    } else {
        w.open_array();
        for &(a, b) in c.edges() {
            w.item_inline(&format!("[{}, {}]", a + 1, b + 1));
        }
        w.close_array();
    }
    w.key("intervals");
    if c.intervals().is_empty() {
        w.raw("[]");
    } else {
        w.open_array();
        for r in c.intervals() {
            // keys in sorted order for either owner key ("agent" or "item")
            let item = if owner_key < "end" {
                format!(
                    "{{\"{owner_key}\": {}, \"end\": {}, \"resource\": {}}}",
                    r.agent + 1,
                    real(r.end.as_f64()),
                    r.resource + 1
                )
            } else {
                format!(
                    "{{\"end\": {}, \"{owner_key}\": {}, \"resource\": {}}}",
                    real(r.end.as_f64()),
                    r.agent + 1,
                    r.resource + 1
                )
            };
            w.item_inline(&item);
        }
        w.close_array();
    }
    w.key("resources");
    w.raw(&c.resources().to_string());
    w.close_object();
}

pub(crate) fn write_matroid(w: &mut CanonWriter, m: &MatroidSpec) {
    let capped = |sets: &[CappedSet]| -> String {
        let parts: Vec<String> = sets
            .iter()
            .map(|s| format!("{{\"capacity\": {}, \"members\": {}}}", s.capacity, index_list(&s.members)))
            .collect();
        format!("[{}]", parts.join(", "))
    };
    let body = match m {
        MatroidSpec::Free => "{\"kind\": \"free\"}".to_string(),
        MatroidSpec::Uniform { rank } => format!("{{\"kind\": \"uniform\", \"rank\": {rank}}}"),
        MatroidSpec::Partition { blocks } => {
            format!("{{\"blocks\": {}, \"kind\": \"partition\"}}", capped(blocks))
        }
        MatroidSpec::Laminar { sets } => format!("{{\"kind\": \"laminar\", \"sets\": {}}}", capped(sets)),
        MatroidSpec::Explicit { maximal } => {
            let parts: Vec<String> = maximal.iter().map(|s| index_list(s)).collect();
            format!("{{\"kind\": \"explicit\", \"maximal\": [{}]}}", parts.join(", "))
        }
    };
    w.raw(&body);
}

fn index_list(v: &[usize]) -> String {
    let parts: Vec<String> = v.iter().map(|x| (x + 1).to_string()).collect();
    format!("[{}]", parts.join(", "))
}

pub(crate) fn real_list<S: Scalar>(v: &[S]) -> String {
    let parts: Vec<String> = v.iter().map(|x| real(x.as_f64())).collect();
    format!("[{}]", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_example1, gen_interval_instance, gen_random, MatroidKind};

    const MINIMAL: &str = r#"{"T": 1, "values": [1], "probs": [[1]], "matroid": {"kind": "free"}}"#;

    #[test]
    fn minimal_document() {
        let inst: Instance<f64> = parse_instance(MINIMAL).unwrap();
        assert_eq!(inst.agents(), 1);
        assert!(inst.conflicts().is_empty());
    }

    #[test]
    fn bad_row_sum_is_reported() {
        let doc = r#"{"T": 1, "values": [1, 2], "probs": [[0.5, 0.4]], "matroid": {"kind": "free"}}"#;
        let err = parse_instance::<f64>(doc).unwrap_err();
        assert!(matches!(err, Error::Invariant(ref m) if m.contains("row sum 0.9")), "{err}");
    }

    #[test]
    fn schema_errors() {
        let missing = r#"{"T": 1, "values": [1], "matroid": {"kind": "free"}}"#;
        assert!(matches!(parse_instance::<f64>(missing), Err(Error::Schema(_))));
        let wrong_t = r#"{"T": 2, "values": [1], "probs": [[1]], "matroid": {"kind": "free"}}"#;
        assert!(matches!(parse_instance::<f64>(wrong_t), Err(Error::Schema(_))));
        let kind = r#"{"T": 1, "values": [1], "probs": [[1]], "matroid": {"kind": "graphic"}}"#;
        assert!(matches!(parse_instance::<f64>(kind), Err(Error::UnsupportedMatroid(_))));
        let zero = r#"{"T": 2, "values": [1], "probs": [[1],[1]], "matroid": {"kind": "free"},
                       "conflicts": {"edges": [[0, 1]]}}"#;
        assert!(matches!(parse_instance::<f64>(zero), Err(Error::Schema(_))));
        let early = r#"{"T": 2, "values": [1], "probs": [[1],[1]], "matroid": {"kind": "free"},
                        "conflicts": {"intervals": [{"agent": 2, "resource": 1, "end": 1.5}]}}"#;
        assert!(matches!(parse_instance::<f64>(early), Err(Error::Invariant(_))));
    }

    #[test]
    fn example1_round_trips() {
        let inst = gen_example1::<f64>(5, 2.5, 0.01).unwrap();
        let text = serialize_instance(&inst);
        let back: Instance<f64> = parse_instance(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(serialize_instance(&back), text);
    }

    #[test]
    fn explicit_sets_emitted_lexicographically() {
        let doc = r#"{"T": 3, "values": [1], "probs": [[1],[1],[1]],
                      "matroid": {"kind": "explicit", "maximal": [[2,3],[1,3]]}}"#;
        let inst: Instance<f64> = parse_instance(doc).unwrap();
        let text = serialize_instance(&inst);
        assert!(text.contains("\"maximal\": [[1, 3], [2, 3]]"), "{text}");
    }

    #[test]
    fn f32_round_trip() {
        let inst = gen_interval_instance::<f32>(6, 2, 2, 3, 11).unwrap();
        let back: Instance<f32> = parse_instance(&serialize_instance(&inst)).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn generated_instances_round_trip_byte_identical() {
        for seed in 0..40 {
            let kind = MatroidKind::ALL[seed as usize % 5];
            let inst = gen_random::<f64>(1 + seed as usize % 7, 1 + seed as usize % 3, kind, 0.4, seed).unwrap();
            let text = serialize_instance(&inst);
            let back: Instance<f64> = parse_instance(&text).unwrap();
            assert_eq!(back, inst, "seed {seed}");
            assert_eq!(serialize_instance(&back), text);
        }
    }
}
