//! Batched Monte Carlo driver whose output does not depend on the thread count.
//!
//! Batch `b` always draws from the ChaCha stream `(seed, b)` and batch
//! statistics are merged in batch order, so only `(samples, seed)` matter.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const BATCH: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub samples: usize,
    pub mean: f64,
    /// Sample standard deviation of one draw.
    pub std: f64,
    /// `3·std/√samples`.
    pub radius: f64,
}

impl Estimate {
    pub fn upper(&self) -> f64 {
        self.mean + self.radius
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.radius
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.count == 0 {
            return;
        }
        let n = (self.count + o.count) as f64;
        let d = o.mean - self.mean;
        self.mean += d * o.count as f64 / n;
        self.m2 += o.m2 + d * d * self.count as f64 * o.count as f64 / n;
        self.count += o.count;
    }
}

/// The rng for batch `b`.
pub fn batch_rng(seed: u64, b: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    rng
}

/// Runs `draw` `samples` times. Each worker gets its own state from `init`.
pub fn estimate<W, I, D>(samples: usize, seed: u64, threads: usize, init: I, draw: D) -> Result<Estimate>
where
    I: Fn() -> W + Sync,
    D: Fn(&mut W, &mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if samples == 0 {
        return Err(Error::Param("samples must be at least 1".into()));
    }
    let batches = samples.div_ceil(BATCH);
    let workers = threads.clamp(1, batches);
    let run_batch = |state: &mut W, b: usize| -> Result<Moments> {
        let mut rng = batch_rng(seed, b);
        let size = BATCH.min(samples - b * BATCH);
        let mut m = Moments::default();
        for _ in 0..size {
            m.push(draw(state, &mut rng)?);
        }
        Ok(m)
    };
    let mut results: Vec<Option<Result<Moments>>> = (0..batches).map(|_| None).collect();
    if workers == 1 {
        let mut state = init();
        for (b, slot) in results.iter_mut().enumerate() {
            *slot = Some(run_batch(&mut state, b));
        }
    } else {
        let per_worker: Vec<Vec<(usize, Result<Moments>)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let init = &init;
                    let run_batch = &run_batch;
                    scope.spawn(move || {
                        let mut state = init();
                        (w..batches).step_by(workers).map(|b| (b, run_batch(&mut state, b))).collect()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("simulation worker panicked")).collect()
        });
        for (b, r) in per_worker.into_iter().flatten() {
            results[b] = Some(r);
        }
    }
    let mut total = Moments::default();
    for r in results {
        total.merge(&r.expect("every batch ran")?);
    }
    let std = if total.count > 1 { (total.m2 / (total.count - 1) as f64).max(0.0).sqrt() } else { 0.0 };
    Ok(Estimate { samples, mean: total.mean, std, radius: 3.0 * std / (samples as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn thread_count_does_not_change_the_result() {
        let draw = |_: &mut (), r: &mut ChaCha8Rng| Ok(r.random::<f64>());
        let a = estimate(12_345, 7, 1, || (), draw).unwrap();
        for threads in [2, 3, 8] {
            let b = estimate(12_345, 7, threads, || (), draw).unwrap();
            assert_eq!(a.mean.to_bits(), b.mean.to_bits());
            assert_eq!(a.std.to_bits(), b.std.to_bits());
        }
        assert!((a.mean - 0.5).abs() < 3.0 * a.radius);
        assert!((a.std - (1.0f64 / 12.0).sqrt()).abs() < 0.01);
    }

    #[test]
    fn constant_draws_have_zero_spread() {
        let e = estimate(2500, 1, 4, || (), |_, _| Ok(3.5)).unwrap();
        assert_eq!((e.mean, e.std, e.radius), (3.5, 0.0, 0.0));
        assert!(estimate(0, 1, 1, || (), |_, _| Ok(0.0)).is_err());
    }

    #[test]
    fn errors_propagate() {
        let r = estimate(10, 1, 2, || (), |_, _| Err(Error::Param("boom".into())));
        assert!(r.is_err());
    }
}
