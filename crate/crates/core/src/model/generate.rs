//! Seeded random instance generation.
//!
//! The generator is deterministic: one seed, one instance, on every platform
//! and in every run. It draws from a counter-based stream cipher RNG and
//! samples fields in a fixed order, so generated corpora are reproducible
//! byte for byte.

use super::{Instance, Job, ModelError, Task, Time};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Parameters of one random instance. All ranges are inclusive.
#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub jobs: (usize, usize),
    pub map_tasks: (usize, usize),
    pub reduce_tasks: (usize, usize),
    pub map_procs: usize,
    pub reduce_procs: usize,
    pub proc_time: (Time, Time),
    /// `Some` adds a shuffle volume matrix to every job (zero volumes are
    /// allowed and meaningful); `None` generates a plain map/reduce
    /// instance.
    pub shuffle_time: Option<(Time, Time)>,
    /// Adds one input processor per reduce processor; requires shuffles.
    pub input_procs: bool,
    pub weight: (u64, u64),
}

impl GeneratorConfig {
    fn check(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::InvalidConfig(msg));
        let range_ok = |lo: usize, hi: usize| lo >= 1 && lo <= hi;
        if !range_ok(self.jobs.0, self.jobs.1) {
            return fail(format!("job count range {:?} is degenerate", self.jobs));
        }
        if !range_ok(self.map_tasks.0, self.map_tasks.1)
            || !range_ok(self.reduce_tasks.0, self.reduce_tasks.1)
        {
            return fail("task count ranges need 1 <= lo <= hi".into());
        }
        if self.map_procs < 1 || self.reduce_procs < 1 {
            return fail("each pool needs at least one processor".into());
        }
        if self.proc_time.0 < 1 || self.proc_time.0 > self.proc_time.1 {
            return fail(format!(
                "processing time range {:?} needs 1 <= lo <= hi",
                self.proc_time
            ));
        }
        if let Some((lo, hi)) = self.shuffle_time {
            if lo < 0 || lo > hi {
                return fail(format!("shuffle volume range {:?} needs 0 <= lo <= hi", (lo, hi)));
            }
        }
        if self.input_procs && self.shuffle_time.is_none() {
            return fail("input processors make no sense without shuffle volumes".into());
        }
        if self.weight.0 < 1 || self.weight.0 > self.weight.1 {
            return fail(format!("weight range {:?} needs 1 <= lo <= hi", self.weight));
        }
        Ok(())
    }
}

/// Draws one instance from the configuration, deterministically in
/// `cfg.seed`.
pub fn generate_instance(cfg: &GeneratorConfig) -> Result<Instance, ModelError> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let n_jobs = rng.gen_range(cfg.jobs.0..=cfg.jobs.1);
    let mut jobs = Vec::with_capacity(n_jobs);
    for id in 1..=n_jobs as u64 {
        let weight = BigRational::from_integer(BigInt::from(
            rng.gen_range(cfg.weight.0..=cfg.weight.1),
        ));
        let n_map = rng.gen_range(cfg.map_tasks.0..=cfg.map_tasks.1);
        let n_reduce = rng.gen_range(cfg.reduce_tasks.0..=cfg.reduce_tasks.1);
        let draw_tasks = |count: usize, procs: usize, rng: &mut ChaCha8Rng| -> Vec<Task> {
            (0..count)
                .map(|_| Task {
                    times: (0..procs)
                        .map(|_| rng.gen_range(cfg.proc_time.0..=cfg.proc_time.1))
                        .collect(),
                })
                .collect()
        };
        let map_tasks = draw_tasks(n_map, cfg.map_procs, &mut rng);
        let reduce_tasks = draw_tasks(n_reduce, cfg.reduce_procs, &mut rng);
        let shuffle = cfg.shuffle_time.map(|(lo, hi)| {
            (0..n_map)
                .map(|_| (0..n_reduce).map(|_| rng.gen_range(lo..=hi)).collect())
                .collect()
        });
        jobs.push(Job { id, weight, map_tasks, reduce_tasks, shuffle });
    }

    let name = |prefix: &str, n: usize| (1..=n).map(|i| format!("{prefix}{i}")).collect();
    Instance::new(
        jobs,
        name("m", cfg.map_procs),
        name("r", cfg.reduce_procs),
        cfg.input_procs.then(|| name("s", cfg.reduce_procs)),
    )
}
