//! The `verify` suites: the scalar fuzz corpus, the separation instance and
//! the XOS corpus.

use clap::{Args, ValueEnum};
use prophet_core::corpus::{scalar_fuzz_corpus, xos_fuzz_corpus};
use prophet_core::instance::gen_example1;
use prophet_core::oracle::{verify_all, verify_xos, Check};
use prophet_core::policy::{simulate, simulate_baseline, BaselineEvaluator, BaselineMode};
use prophet_core::{solve_exante, InstanceF64, PricePlan};

use crate::report::{Field, Report};
use crate::{default_threads, Failure};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Fuzz,
    Example1,
    Xos,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Corpus size; 100 for fuzz, 50 for xos.
    #[arg(long)]
    count: Option<usize>,
    /// Monte Carlo draws per instance; 20000 for fuzz, 10000 for xos, 100000 for example1.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = default_threads())]
    threads: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Default)]
struct Tally {
    passed: usize,
    applicable: usize,
    skipped: usize,
    smallest: f64,
    failures: Vec<String>,
}

/// Aggregates checks by name, keeping the first-seen order.
#[derive(Default)]
struct Table {
    rows: Vec<(&'static str, Tally)>,
}

impl Table {
    fn add(&mut self, instance: usize, c: &Check) {
        let i = match self.rows.iter().position(|(n, _)| *n == c.name) {
            Some(i) => i,
            None => {
                self.rows.push((c.name, Tally { smallest: f64::INFINITY, ..Default::default() }));
                self.rows.len() - 1
            }
        };
        let t = &mut self.rows[i].1;
        match c.pass {
            None => t.skipped += 1,
            Some(ok) => {
                t.applicable += 1;
                t.smallest = t.smallest.min(c.margin());
                if ok {
                    t.passed += 1;
                } else {
                    let note = if c.note.is_empty() { String::new() } else { format!(" ({})", c.note) };
                    t.failures.push(format!("instance {instance}: lhs {} rhs {} margin {:.3e}{note}", c.lhs, c.rhs, c.margin));
                }
            }
        }
    }

    fn ok(&self) -> bool {
        self.rows.iter().all(|(_, t)| t.passed == t.applicable)
    }

    fn report(&self, suite: &str, a: &VerifyArgs, instances: usize, samples: usize) -> Report {
        let mut r = Report::new();
        r.str("suite", suite)
            .int("seed", a.seed as usize)
            .int("instances", instances)
            .int("samples", samples)
            .int("threads", a.threads);
        let mut checks = Report::new();
        for (name, t) in &self.rows {
            let mut c = Report::new();
            c.int("passed", t.passed).int("applicable", t.applicable).int("skipped", t.skipped);
            c.opt_real("smallest_margin", t.smallest.is_finite().then_some(t.smallest));
            c.push("failures", Field::Raw(t.failures.iter().map(|f| serde_json::to_string(f).expect("string")).collect()));
            checks.obj(name, c);
        }
        r.obj("checks", checks);
        r.push("passed", Field::Bool(self.ok()));
        r
    }

    fn print(&self, suite: &str, a: &VerifyArgs, instances: usize, samples: usize) {
        println!("suite {suite}, seed {}, {instances} instances, {samples} samples each", a.seed);
        println!("{:<22} {:>9} {:>8} {:>16}", "check", "passed", "skipped", "smallest margin");
        for (name, t) in &self.rows {
            let margin = if t.smallest.is_finite() { format!("{:.3e}", t.smallest) } else { "-".into() };
            println!("{name:<22} {:>9} {:>8} {margin:>16}", format!("{}/{}", t.passed, t.applicable), t.skipped);
        }
        for (name, t) in &self.rows {
            for f in &t.failures {
                println!("FAIL {name} {f}");
            }
        }
        println!("{}", if self.ok() { "PASS" } else { "FAIL" });
    }
}

fn finish(table: Table, suite: &str, a: &VerifyArgs, instances: usize, samples: usize) -> Result<(), Failure> {
    if a.json {
        print!("{}", table.report(suite, a, instances, samples).to_json());
    } else {
        table.print(suite, a, instances, samples);
    }
    if table.ok() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn example1(a: &VerifyArgs, samples: usize) -> Result<Table, Failure> {
    let (t, c, eps, gamma) = (100, 2.5, 1e-4, 0.5);
    let inst: InstanceF64 = gen_example1(t, c, eps)?;
    let ev = BaselineEvaluator::new(&inst, BaselineMode::Exact)?;
    let opt = ev.residual(&prophet_core::AgentSet::new());
    let plan = PricePlan::new(&inst, &solve_exante(&inst)?)?;
    let policy = simulate(&plan, inst.valuations(), samples, a.seed, a.threads)?;
    let base = simulate_baseline(&ev, inst.valuations(), gamma, samples, a.seed, a.threads)?;
    let mut table = Table::default();
    table.add(1, &Check::at_most("baseline-ratio", base.lower() / opt, 0.05, 0.0));
    let r = policy.upper() / opt;
    table.add(1, &Check::new("policy-ratio", r, 0.95, r - 0.95));
    Ok(table)
}

pub fn run(a: VerifyArgs) -> Result<(), Failure> {
    match a.suite {
        Suite::Fuzz => {
            let (count, samples) = (a.count.unwrap_or(100), a.samples.unwrap_or(20_000));
            let mut table = Table::default();
            for (i, inst) in scalar_fuzz_corpus::<f64>(a.seed, count)?.iter().enumerate() {
                for c in &verify_all(inst, samples, a.seed, a.threads)?.checks {
                    table.add(i + 1, c);
                }
            }
            finish(table, "fuzz", &a, count, samples)
        }
        Suite::Xos => {
            let (count, samples) = (a.count.unwrap_or(50), a.samples.unwrap_or(10_000));
            let mut table = Table::default();
            for (i, x) in xos_fuzz_corpus::<f64>(a.seed, count)?.iter().enumerate() {
                for c in &verify_xos(x, samples, a.seed, a.threads)?.checks {
                    table.add(i + 1, c);
                }
            }
            finish(table, "xos", &a, count, samples)
        }
        Suite::Example1 => {
            let samples = a.samples.unwrap_or(100_000);
            let table = example1(&a, samples)?;
            finish(table, "example1", &a, 1, samples)
        }
    }
}
