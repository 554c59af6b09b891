//! Seeded fuzz corpora shared by the verifier, the CLI and the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::instance::{
    gen_interval_instance, random_intervals, random_matroid, random_valuations, ConflictSpec, Instance, MatroidKind,
    MatroidSpec, ValuationTable,
};
use crate::matroid::MatroidOracle;
use crate::scalar::Scalar;
use crate::xos::{gen_random_xos, XosGenParams, XosInstance};

/// How a corpus instance's conflicts are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictMode {
    Explicit,
    Interval,
    Mixed,
}

impl ConflictMode {
    pub const ALL: [ConflictMode; 3] = [ConflictMode::Explicit, ConflictMode::Interval, ConflictMode::Mixed];
}

fn sub_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64 + 1);
    rng
}

fn random_edges<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// The `i`-th scalar fuzz instance: `T ∈ 2..=6`, `K ∈ 1..=3`; matroid kind
/// cycles with `i mod 5` and conflict mode with `i mod 3`.
pub fn scalar_fuzz_instance<S: Scalar>(seed: u64, i: usize) -> Result<Instance<S>> {
    let mut rng = sub_rng(seed, i);
    let t = rng.random_range(2..=6);
    let k = rng.random_range(1..=3);
    let kind = MatroidKind::ALL[i % 5];
    let mode = ConflictMode::ALL[i % 3];
    let valuations: ValuationTable<S> = random_valuations(&mut rng, t, k)?;
    let matroid = random_matroid(&mut rng, kind, t)?;
    let edges = if mode == ConflictMode::Interval { Vec::new() } else { random_edges(&mut rng, t, 0.3) };
    let (resources, intervals) = if mode == ConflictMode::Explicit {
        (0, Vec::new())
    } else {
        let j = rng.random_range(1..=3);
        let d = rng.random_range(1..=j);
        (j, random_intervals(&mut rng, t, j, d))
    };
    let conflicts = ConflictSpec::new(edges, intervals, resources, t)?;
    Instance::new(valuations, matroid, conflicts, format!("fuzz seed={seed} index={} kind={kind:?} mode={mode:?}", i + 1))
}

pub fn scalar_fuzz_corpus<S: Scalar>(seed: u64, count: usize) -> Result<Vec<Instance<S>>> {
    (0..count).map(|i| scalar_fuzz_instance(seed, i)).collect()
}

/// Interval-only instances with `T ∈ 2..=15` and `d = 1 + i mod 3`; returns `(instance, d)`.
pub fn interval_corpus<S: Scalar>(seed: u64, count: usize) -> Result<Vec<(Instance<S>, usize)>> {
    (0..count)
        .map(|i| {
            let mut rng = sub_rng(seed, i);
            let t = rng.random_range(2..=15);
            let d = 1 + i % 3;
            let j = rng.random_range(d..=d + 2);
            Ok((gen_interval_instance(t, j, d, 1, rng.random())?, d))
        })
        .collect()
}

/// The `i`-th XOS fuzz instance: `T ∈ 2..=4`, `|N_t| ≤ 3`, `K ∈ 1..=3`;
/// interval requests on odd indices.
pub fn xos_fuzz_instance<S: Scalar>(seed: u64, i: usize) -> Result<XosInstance<S>> {
    let mut rng = sub_rng(seed, i);
    let intervals = i % 2 == 1;
    let params = XosGenParams {
        agents: rng.random_range(2..=4),
        max_items: rng.random_range(1..=3),
        k: rng.random_range(1..=3),
        max_clauses: rng.random_range(1..=3),
        kind: MatroidKind::ALL[i % 5],
        edge_prob: if intervals { 0.15 } else { 0.3 },
        resources: if intervals { 2 } else { 0 },
        d: if intervals { rng.random_range(1..=2) } else { 0 },
        seed: rng.random(),
    };
    gen_random_xos(&params)
}

pub fn xos_fuzz_corpus<S: Scalar>(seed: u64, count: usize) -> Result<Vec<XosInstance<S>>> {
    (0..count).map(|i| xos_fuzz_instance(seed, i)).collect()
}

/// A matroid and a point of its polytope. Even indices take a random convex
/// combination of bases, odd ones shrink it toward the origin.
pub fn mixture_pair(seed: u64, i: usize) -> Result<(MatroidOracle, Vec<f64>)> {
    let mut rng = sub_rng(seed, i);
    let n = rng.random_range(2..=8);
    let spec = random_matroid(&mut rng, MatroidKind::ALL[i % 5], n)?;
    let m = MatroidOracle::new(&spec, n)?;
    let atoms = rng.random_range(1..=4);
    let mut x = vec![0.0; n];
    let mut total = 0.0;
    let mut weights = Vec::with_capacity(atoms);
    for _ in 0..atoms {
        weights.push(0.05 + rng.random::<f64>());
        total += weights.last().copied().unwrap_or(0.0);
    }
    let scale = if i % 2 == 0 { 1.0 } else { 0.3 + 0.7 * rng.random::<f64>() };
    for w in weights {
        let mut order: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let mut tr = m.tracker();
        for e in order {
            if tr.try_add(e) {
                x[e] += scale * w / total;
            }
        }
    }
    for v in &mut x {
        *v = v.min(1.0);
    }
    Ok((m, x))
}

/// Instances whose singleton embedding must reproduce the scalar decisions
/// exactly: even indices are deterministic (`K = 1` per agent) with any matroid
/// and random edges; odd indices have up to three outcomes, a free matroid, and
/// only edges whose later endpoint has no later neighbor. Values lie in `(0.1, 10)`.
pub fn singleton_corpus(seed: u64, count: usize) -> Result<Vec<Instance<f64>>> {
    (0..count)
        .map(|i| {
            let mut rng = sub_rng(seed, i);
            let t = rng.random_range(2..=6);
            let value = |rng: &mut ChaCha8Rng| 0.1 + 9.9 * rng.random::<f64>();
            let (support, probs, matroid, edges) = if i % 2 == 0 {
                let support: Vec<f64> = (0..t).map(|_| value(&mut rng)).collect();
                let probs = (0..t).map(|a| (0..t).map(|k| if k == a { 1.0 } else { 0.0 }).collect()).collect();
                let matroid = random_matroid(&mut rng, MatroidKind::ALL[(i / 2) % 5], t)?;
                (support, probs, matroid, random_edges(&mut rng, t, 0.35))
            } else {
                let k = rng.random_range(1..=3);
                let support: Vec<f64> = (0..k).map(|_| value(&mut rng)).collect();
                let probs = (0..t)
                    .map(|_| {
                        let w: Vec<f64> = (0..k).map(|_| 0.05 + rng.random::<f64>()).collect();
                        let s: f64 = w.iter().sum();
                        w.into_iter().map(|x| x / s).collect()
                    })
                    .collect();
                // a sink set of late agents with no edges among themselves
                let split = rng.random_range(1..t);
                let mut edges = Vec::new();
                for a in 0..split {
                    for b in split..t {
                        if rng.random_bool(0.4) {
                            edges.push((a, b));
                        }
                    }
                }
                (support, probs, MatroidSpec::Free, edges)
            };
            let vt = ValuationTable::new(support, probs, false)?;
            Instance::new(vt, matroid, ConflictSpec::new(edges, vec![], 0, t)?, format!("singleton seed={seed} index={}", i + 1))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::{decompose, verify_mixture};

    #[test]
    fn corpora_are_reproducible_and_cover_the_kinds() {
        let a: Vec<Instance<f64>> = scalar_fuzz_corpus(7, 15).unwrap();
        let b: Vec<Instance<f64>> = scalar_fuzz_corpus(7, 15).unwrap();
        assert_eq!(a, b);
        let kinds: std::collections::BTreeSet<&str> = a.iter().map(|i| i.matroid().kind_name()).collect();
        assert_eq!(kinds.len(), 5);
        assert!(a.iter().all(|i| (2..=6).contains(&i.agents()) && i.valuations().k() <= 3));
    }

    #[test]
    fn interval_corpus_respects_d() {
        for (inst, d) in interval_corpus::<f64>(3, 30).unwrap() {
            assert!(inst.conflicts().edges().is_empty());
            assert!(inst.d() <= d);
        }
    }

    #[test]
    fn mixture_pairs_are_decomposable() {
        for i in 0..40 {
            let (m, x) = mixture_pair(5, i).unwrap();
            let mix = decompose(&m, &x).unwrap();
            assert!(verify_mixture(&m, &mix, &x).ok(), "pair {i}");
        }
    }

    #[test]
    fn singleton_corpus_shape() {
        for (i, inst) in singleton_corpus(1, 6).unwrap().iter().enumerate() {
            if i % 2 == 1 {
                assert_eq!(inst.matroid(), &MatroidSpec::Free);
            }
        }
    }
}
