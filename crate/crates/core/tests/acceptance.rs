//! The acceptance gate: every guarantee the library makes, exercised end to
//! end on seeded corpora. Each check prints one `ACCEPT nn ...: PASS/FAIL`
//! line (visible with `cargo test --test acceptance -- --nocapture`) and the
//! owning test fails on any violation.

use mrfs::lp::simplex::Relation;
use mrfs::lp::{build_lp, solve_lp, LpModel};
use mrfs::merge::solve_mr;
use mrfs::model::{
    generate_instance, validate_phase_schedule, validate_schedule, GeneratorConfig,
    ValidationMode,
};
use mrfs::oracle::{
    brute_force_mr, brute_force_msr, brute_force_phase, brute_force_shuffle_reduce, OracleConfig,
    OracleError, ShuffleModel,
};
use mrfs::rounding::{round_class, task_scheduling_detailed};
use mrfs::shuffle::{check_block_normal_form, fold_shuffle, solve_msr_same, solve_msr_separate};
use mrfs::{Instance, Phase, Time};
use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Slack for comparisons that mix exact schedule objectives with float LP
/// values; the solvers certify with a tighter one.
const TOL: f64 = 1e-7;

fn scale() -> Rational64 {
    Rational64::new(3, 2)
}

fn growth() -> Rational64 {
    Rational64::new(1, 2)
}

fn within(value: f64, limit: f64) -> bool {
    value <= limit * (1.0 + TOL) + TOL
}

fn ratio_of(actual: &BigRational, optimum: &BigRational) -> f64 {
    (actual / optimum).to_f64().expect("ratio fits in f64")
}

/// Prints one verdict line and echoes the first few violations.
fn verdict(number: u32, what: &str, failures: &[String], detail: String) -> bool {
    let ok = failures.is_empty();
    println!("ACCEPT {number:02} {what}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    for f in failures.iter().take(5) {
        println!("  violation: {f}");
    }
    ok
}

/// The full-size corpus: up to 10 jobs with up to 4 tasks per phase on
/// 4-processor pools (plus 4 input processors for the shuffle variants).
fn corpus_config(seed: u64, shuffled: bool) -> GeneratorConfig {
    GeneratorConfig {
        seed,
        jobs: (1, 10),
        map_tasks: (1, 4),
        reduce_tasks: (1, 4),
        map_procs: 4,
        reduce_procs: 4,
        proc_time: (1, 10),
        shuffle_time: if shuffled { Some((0, 6)) } else { None },
        input_procs: shuffled,
        weight: (1, 5),
    }
}

/// The oracle-sized corpus: up to 3 jobs with up to 2 tasks per phase on
/// 2-processor pools.
fn tiny_config(seed: u64, shuffled: bool) -> GeneratorConfig {
    GeneratorConfig {
        seed,
        jobs: (1, 3),
        map_tasks: (1, 2),
        reduce_tasks: (1, 2),
        map_procs: 2,
        reduce_procs: 2,
        proc_time: (1, 8),
        shuffle_time: if shuffled { Some((0, 4)) } else { None },
        input_procs: shuffled,
        weight: (1, 5),
    }
}

// ---------------------------------------------------------------------------
// Exact search-size prediction, used to keep the oracle suites to instances
// the exhaustive search actually finishes. The oracle builds configurations
// by inserting items one at a time into every position of every allowed
// processor, so the leaf count factorizes and can be computed up front.

/// Ways to insert `n` pool-free items into `p` sequences: the k-th item
/// (0-based) sees `k + p` positions.
fn orderings(n: usize, p: usize) -> f64 {
    (0..n).map(|k| (k + p) as f64).product()
}

fn task_counts(inst: &Instance) -> (usize, usize) {
    let maps = inst.jobs.iter().map(|j| j.map_tasks.len()).sum();
    let reduces = inst.jobs.iter().map(|j| j.reduce_tasks.len()).sum();
    (maps, reduces)
}

fn plain_leaf_count(inst: &Instance) -> f64 {
    let (maps, reduces) = task_counts(inst);
    orderings(maps, inst.map_procs.len()) * orderings(reduces, inst.reduce_procs.len())
}

/// Positive transfers feeding each reduce task, in (job, index) order.
fn transfers_per_reduce(inst: &Instance) -> Vec<usize> {
    let mut counts = Vec::new();
    for job in &inst.jobs {
        let volumes = job.shuffle.as_ref().expect("shuffle instances carry volumes");
        for r in 0..job.reduce_tasks.len() {
            counts.push(volumes.iter().filter(|row| row[r] > 0).count());
        }
    }
    counts
}

/// Exact leaf count of the transfer-aware search without the map factor
/// (the stage problem). A transfer follows its reduce task's processor (or
/// the input processor paired with it), so the count sums over every way of
/// splitting the reduce tasks between the two reduce processors; each
/// side's insertion product depends only on how many reduce tasks and
/// transfers land there.
fn stage_leaf_count(inst: &Instance, model: ShuffleModel) -> f64 {
    assert_eq!(inst.reduce_procs.len(), 2, "the oracle corpus keeps two reduce processors");
    let transfers = transfers_per_reduce(inst);
    let n_r = transfers.len();
    assert!(n_r < 20, "subset enumeration expects a handful of reduce tasks");
    let factorial = |n: usize| -> f64 { (1..=n).map(|i| i as f64).product() };
    // Inserting s transfers into a sequence already holding r reduce tasks.
    let grow = |r: usize, s: usize| -> f64 { (1..=s).map(|i| (r + i) as f64).product() };
    let mut total = 0.0;
    for mask in 0u32..(1 << n_r) {
        let (mut r0, mut s0, mut r1, mut s1) = (0usize, 0usize, 0usize, 0usize);
        for (i, &s) in transfers.iter().enumerate() {
            if mask >> i & 1 == 0 {
                r0 += 1;
                s0 += s;
            } else {
                r1 += 1;
                s1 += s;
            }
        }
        let transfer_ways = match model {
            ShuffleModel::Same => grow(r0, s0) * grow(r1, s1),
            ShuffleModel::Separate => factorial(s0) * factorial(s1),
        };
        total += factorial(r0) * factorial(r1) * transfer_ways;
    }
    total
}

fn msr_leaf_count(inst: &Instance, model: ShuffleModel) -> f64 {
    let (maps, _) = task_counts(inst);
    stage_leaf_count(inst, model) * orderings(maps, inst.map_procs.len())
}

// ---------------------------------------------------------------------------
// Checks 01-04 and 06 share one pass over the full-size corpora: schedule
// feasibility, the 13.5x single-phase bound, the 27x/54x merged bounds, the
// 27/54 split-transfer accounting, and transfer-block normal form.

#[test]
fn corpus_certificates() {
    let started = std::time::Instant::now();
    let (a, d) = (scale(), growth());

    let mut feasibility: Vec<String> = Vec::new();
    let mut phase_bound: Vec<String> = Vec::new();
    let mut merged_bounds: Vec<String> = Vec::new();
    let mut separate_bounds: Vec<String> = Vec::new();
    let mut normal_form: Vec<String> = Vec::new();
    let mut merged_schedules = 0usize;
    let mut phase_runs = 0usize;

    for seed in 0..1000u64 {
        // Plain two-phase instances.
        let inst =
            generate_instance(&corpus_config(seed, false)).expect("corpus configuration is valid");
        for phase in [Phase::Map, Phase::Reduce] {
            let out = task_scheduling_detailed(&inst, phase, a, d)
                .unwrap_or_else(|e| panic!("phase rounding failed on seed {seed}: {e}"));
            phase_runs += 1;
            let report = validate_phase_schedule(&inst, phase, &out.schedule);
            if !report.is_valid() {
                feasibility.push(format!(
                    "seed {seed} {} phase: {}",
                    phase.name(),
                    report.violations[0]
                ));
            }
            let objective = inst
                .weighted_completion(&out.schedule.job_completion)
                .to_f64()
                .expect("objective fits in f64");
            if !within(objective, 13.5 * out.lp_objective) {
                phase_bound.push(format!(
                    "seed {seed} {} phase: objective {objective} exceeds 13.5 x lp {}",
                    phase.name(),
                    out.lp_objective
                ));
            }
        }
        let (sched, report) =
            solve_mr(&inst, a, d).unwrap_or_else(|e| panic!("plain solver failed on seed {seed}: {e}"));
        merged_schedules += 1;
        let check = validate_schedule(&inst, &sched, ValidationMode::Mr);
        if !check.is_valid() {
            feasibility.push(format!("seed {seed} mr: {}", check.violations[0]));
        }
        let (obj, lm, lr) = (report.objective_value, report.lp_map, report.lp_reduce);
        if !within(obj, 27.0 * (lm + lr)) || !within(obj, 54.0 * lm.max(lr)) {
            merged_bounds.push(format!(
                "seed {seed} mr: objective {obj} breaks 27x(lp {lm} + lp {lr})"
            ));
        }

        // Shuffle instances, both transfer placements.
        let inst =
            generate_instance(&corpus_config(seed, true)).expect("corpus configuration is valid");
        let folded = fold_shuffle(&inst).expect("the shuffle corpus carries volumes");
        for (target, phase, label) in
            [(&inst, Phase::Map, "map"), (&folded, Phase::Reduce, "folded reduce")]
        {
            let out = task_scheduling_detailed(target, phase, a, d)
                .unwrap_or_else(|e| panic!("phase rounding failed on seed {seed}: {e}"));
            phase_runs += 1;
            let report = validate_phase_schedule(target, phase, &out.schedule);
            if !report.is_valid() {
                feasibility.push(format!("seed {seed} {label}: {}", report.violations[0]));
            }
            let objective = target
                .weighted_completion(&out.schedule.job_completion)
                .to_f64()
                .expect("objective fits in f64");
            if !within(objective, 13.5 * out.lp_objective) {
                phase_bound.push(format!(
                    "seed {seed} {label}: objective {objective} exceeds 13.5 x lp {}",
                    out.lp_objective
                ));
            }
        }

        let (sched, report) = solve_msr_same(&inst, a, d)
            .unwrap_or_else(|e| panic!("one-processor transfer solver failed on seed {seed}: {e}"));
        merged_schedules += 1;
        let check = validate_schedule(&inst, &sched, ValidationMode::MsrSame);
        if !check.is_valid() {
            feasibility.push(format!("seed {seed} msr-same: {}", check.violations[0]));
        }
        if let Err(why) = check_block_normal_form(&inst, &sched) {
            normal_form.push(format!("seed {seed}: {why}"));
        }
        let (obj, lm, lr) = (report.objective_value, report.lp_map, report.lp_reduce);
        if !within(obj, 27.0 * (lm + lr)) || !within(obj, 54.0 * lm.max(lr)) {
            merged_bounds.push(format!(
                "seed {seed} msr-same: objective {obj} breaks 27x(lp {lm} + lp {lr})"
            ));
        }

        let (sched, report) = solve_msr_separate(&inst, a, d)
            .unwrap_or_else(|e| panic!("split-transfer solver failed on seed {seed}: {e}"));
        merged_schedules += 1;
        let check = validate_schedule(&inst, &sched, ValidationMode::MsrSeparate);
        if !check.is_valid() {
            feasibility.push(format!("seed {seed} msr-separate: {}", check.violations[0]));
        }
        let (obj, lm, lr) = (report.objective_value, report.lp_map, report.lp_reduce);
        if !within(obj, 27.0 * lm + 54.0 * lr) || !within(obj, 81.0 * lm.max(lr)) {
            separate_bounds.push(format!(
                "seed {seed} msr-separate: objective {obj} breaks 27x lp {lm} + 54x lp {lr}"
            ));
        }
    }

    let elapsed = started.elapsed();
    let ok1 = verdict(
        1,
        "every solver schedule validates",
        &feasibility,
        format!("{merged_schedules} merged schedules across 3 variants in {elapsed:.1?}"),
    );
    let ok2 = verdict(
        2,
        "single-phase rounding stays within 13.5x its lp bound",
        &phase_bound,
        format!("{phase_runs} phase runs"),
    );
    let ok3 = verdict(
        3,
        "merged objectives stay within 27x the lp sum and 54x the lp max",
        &merged_bounds,
        "mr and msr-same, 1000 instances each".into(),
    );
    let ok4 = verdict(
        4,
        "split-transfer objectives stay within 27/54 accounting and 81x the lp max",
        &separate_bounds,
        "msr-separate, 1000 instances".into(),
    );
    let ok6 = verdict(
        6,
        "every one-processor transfer block sits flush against its reduce task",
        &normal_form,
        "msr-same, 1000 instances".into(),
    );
    assert!(
        ok1 && ok2 && ok3 && ok4 && ok6,
        "corpus certificate violations; see the ACCEPT lines above"
    );
}

// ---------------------------------------------------------------------------
// Check 05: measured approximation ratios against the exhaustive optimum on
// instances small enough to solve exactly.

#[test]
fn oracle_ratio_suite() {
    let started = std::time::Instant::now();
    let (a, d) = (scale(), growth());
    let cfg = OracleConfig { max_leaves: 10_000_000 };
    let budget = cfg.max_leaves as f64;
    let mut failures: Vec<String> = Vec::new();

    // Plain two-phase instances.
    let mut mr_max = 0.0f64;
    let (mut collected, mut seed, mut mr_skipped) = (0usize, 0u64, 0usize);
    while collected < 200 {
        let inst =
            generate_instance(&tiny_config(seed, false)).expect("tiny configuration is valid");
        let s = seed;
        seed += 1;
        if plain_leaf_count(&inst) > budget {
            mr_skipped += 1;
            continue;
        }
        let optimum = match brute_force_mr(&inst, &cfg) {
            Ok(r) => r,
            Err(OracleError::CapHit { .. }) => {
                mr_skipped += 1;
                continue;
            }
            Err(e) => panic!("oracle refused seed {s}: {e}"),
        };
        let (sched, _) = solve_mr(&inst, a, d)
            .unwrap_or_else(|e| panic!("plain solver failed on seed {s}: {e}"));
        if sched.objective < optimum.objective {
            failures.push(format!("mr seed {s}: solver objective beat the exhaustive optimum"));
        }
        let ratio = ratio_of(&sched.objective, &optimum.objective);
        if ratio > 54.0 + TOL {
            failures.push(format!("mr seed {s}: ratio {ratio} exceeds 54"));
        }
        mr_max = mr_max.max(ratio);
        collected += 1;
    }

    // Shuffle instances; both transfer placements measured on the same draws.
    let (mut same_max, mut sep_max) = (0.0f64, 0.0f64);
    let (mut collected, mut seed, mut msr_skipped) = (0usize, 0u64, 0usize);
    while collected < 200 {
        let inst =
            generate_instance(&tiny_config(seed, true)).expect("tiny configuration is valid");
        let s = seed;
        seed += 1;
        if msr_leaf_count(&inst, ShuffleModel::Same) > budget
            || msr_leaf_count(&inst, ShuffleModel::Separate) > budget
        {
            msr_skipped += 1;
            continue;
        }
        let same_opt = match brute_force_msr(&inst, ShuffleModel::Same, &cfg) {
            Ok(r) => r,
            Err(OracleError::CapHit { .. }) => {
                msr_skipped += 1;
                continue;
            }
            Err(e) => panic!("oracle refused seed {s}: {e}"),
        };
        let sep_opt = match brute_force_msr(&inst, ShuffleModel::Separate, &cfg) {
            Ok(r) => r,
            Err(OracleError::CapHit { .. }) => {
                msr_skipped += 1;
                continue;
            }
            Err(e) => panic!("oracle refused seed {s}: {e}"),
        };
        let (same_sched, _) = solve_msr_same(&inst, a, d)
            .unwrap_or_else(|e| panic!("one-processor transfer solver failed on seed {s}: {e}"));
        let (sep_sched, _) = solve_msr_separate(&inst, a, d)
            .unwrap_or_else(|e| panic!("split-transfer solver failed on seed {s}: {e}"));
        if same_sched.objective < same_opt.objective {
            failures.push(format!("msr-same seed {s}: solver objective beat the optimum"));
        }
        if sep_sched.objective < sep_opt.objective {
            failures.push(format!("msr-separate seed {s}: solver objective beat the optimum"));
        }
        let same_ratio = ratio_of(&same_sched.objective, &same_opt.objective);
        if same_ratio > 54.0 + TOL {
            failures.push(format!("msr-same seed {s}: ratio {same_ratio} exceeds 54"));
        }
        let sep_ratio = ratio_of(&sep_sched.objective, &sep_opt.objective);
        if sep_ratio > 81.0 + TOL {
            failures.push(format!("msr-separate seed {s}: ratio {sep_ratio} exceeds 81"));
        }
        same_max = same_max.max(same_ratio);
        sep_max = sep_max.max(sep_ratio);
        collected += 1;
    }

    let ok = verdict(
        5,
        "measured ratios stay within 54x (54x, 81x) of the exact optimum",
        &failures,
        format!(
            "200 plain + 200 shuffle instances in {:.1?}; empirical max ratios: mr {mr_max:.3}, \
             msr-same {same_max:.3}, msr-separate {sep_max:.3}; skipped {mr_skipped}+{msr_skipped} \
             oversized draws",
            started.elapsed()
        ),
    );
    assert!(ok, "ratio violations; see the ACCEPT 05 line above");
}

// ---------------------------------------------------------------------------
// Check 07: on the stage problem (map outputs ready at time zero), forcing
// transfers onto their reduce task's processor costs at most a factor two
// against dedicated transfer processors.

#[test]
fn transfer_model_gap() {
    let cfg = OracleConfig { max_leaves: 10_000_000 };
    let budget = cfg.max_leaves as f64;
    let two = BigRational::from_integer(BigInt::from(2));
    let mut failures: Vec<String> = Vec::new();
    let (mut collected, mut seed, mut skipped) = (0usize, 0u64, 0usize);
    while collected < 50 {
        let inst =
            generate_instance(&tiny_config(seed, true)).expect("tiny configuration is valid");
        let s = seed;
        seed += 1;
        if stage_leaf_count(&inst, ShuffleModel::Same) > budget
            || stage_leaf_count(&inst, ShuffleModel::Separate) > budget
        {
            skipped += 1;
            continue;
        }
        let same = match brute_force_shuffle_reduce(&inst, ShuffleModel::Same, &cfg) {
            Ok(r) => r,
            Err(OracleError::CapHit { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => panic!("stage oracle refused seed {s}: {e}"),
        };
        let sep = match brute_force_shuffle_reduce(&inst, ShuffleModel::Separate, &cfg) {
            Ok(r) => r,
            Err(OracleError::CapHit { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => panic!("stage oracle refused seed {s}: {e}"),
        };
        if sep.objective > same.objective {
            failures.push(format!(
                "seed {s}: dedicated transfer processors worsened the optimum"
            ));
        }
        if same.objective > &sep.objective * &two {
            failures.push(format!(
                "seed {s}: one-processor optimum exceeds twice the split-transfer optimum"
            ));
        }
        collected += 1;
    }
    let ok = verdict(
        7,
        "one-processor transfer optimum stays within twice the split optimum",
        &failures,
        format!("50 stage instances, both models solved exactly; skipped {skipped} oversized draws"),
    );
    assert!(ok, "transfer model gap violations; see the ACCEPT 07 line above");
}

// ---------------------------------------------------------------------------
// Check 08: rounding a fractional assignment never overloads a processor by
// more than one supported task. Shares are multiples of 1/64, so every load
// comparison below is exact integer arithmetic in 64ths.

#[test]
fn matching_rounding_loads() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut failures: Vec<String> = Vec::new();
    for trial in 0..1000u32 {
        let n_procs = rng.gen_range(2..=5usize);
        let n_tasks = rng.gen_range(1..=10usize);
        let sizes: Vec<Vec<Time>> = (0..n_tasks)
            .map(|_| (0..n_procs).map(|_| rng.gen_range(1..=20)).collect())
            .collect();

        // 64 share grains per task over a small random support.
        let mut grains = vec![vec![0i64; n_procs]; n_tasks];
        for row in grains.iter_mut() {
            let width = rng.gen_range(1..=n_procs.min(3));
            let support = rand::seq::index::sample(&mut rng, n_procs, width).into_vec();
            for _ in 0..64 {
                row[support[rng.gen_range(0..width)]] += 1;
            }
        }
        let tasks: Vec<(usize, Vec<(usize, f64)>)> = grains
            .iter()
            .enumerate()
            .map(|(t, row)| {
                let shares = row
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| c > 0)
                    .map(|(p, &c)| (p, c as f64 / 64.0))
                    .collect();
                (t, shares)
            })
            .collect();

        let assigned = round_class(&tasks, &|t, p| sizes[t][p], n_procs)
            .unwrap_or_else(|e| panic!("rounding failed on trial {trial}: {e}"));

        if assigned.len() != n_tasks {
            failures.push(format!("trial {trial}: {} of {n_tasks} tasks assigned", assigned.len()));
            continue;
        }
        for (i, &(t, p)) in assigned.iter().enumerate() {
            if t != tasks[i].0 {
                failures.push(format!("trial {trial}: task order changed"));
            }
            if grains[t][p] == 0 {
                failures.push(format!(
                    "trial {trial}: task {t} landed on processor {p} outside its support"
                ));
            }
        }

        // Per processor: 64 x integral load <= fractional grains + 64 x the
        // largest supported size there.
        for p in 0..n_procs {
            let frac: i64 = (0..n_tasks).map(|t| sizes[t][p] * grains[t][p]).sum();
            let integral: i64 =
                assigned.iter().filter(|&&(_, ap)| ap == p).map(|&(t, _)| 64 * sizes[t][p]).sum();
            let biggest: i64 =
                (0..n_tasks).filter(|&t| grains[t][p] > 0).map(|t| sizes[t][p]).max().unwrap_or(0);
            if integral > frac + 64 * biggest {
                failures.push(format!(
                    "trial {trial} processor {p}: integral load {integral} exceeds fractional \
                     {frac} + supported size {biggest} (in 64ths)"
                ));
            }
        }
    }
    let ok = verdict(
        8,
        "rounded loads stay within fractional load plus one supported task",
        &failures,
        "1000 fractional perfect matchings".into(),
    );
    assert!(ok, "rounding load violations; see the ACCEPT 08 line above");
}

// ---------------------------------------------------------------------------
// Check 09: the LP really relaxes the phase problem. Its optimum never
// exceeds the exhaustive optimum, and encoding any feasible integral
// schedule into the LP's variables satisfies every row in exact arithmetic.

#[test]
fn lp_soundness() {
    let d = growth();
    let cfg = OracleConfig { max_leaves: 10_000_000 };
    let mut failures: Vec<String> = Vec::new();
    for seed in 0..200u64 {
        let inst =
            generate_instance(&tiny_config(seed, false)).expect("tiny configuration is valid");
        for phase in [Phase::Map, Phase::Reduce] {
            let model = build_lp(&inst, phase, d)
                .unwrap_or_else(|e| panic!("lp build failed on seed {seed}: {e}"));
            let sol = solve_lp(&model)
                .unwrap_or_else(|e| panic!("lp solve failed on seed {seed}: {e}"));
            let optimum = brute_force_phase(&inst, phase, &cfg)
                .unwrap_or_else(|e| panic!("phase oracle refused seed {seed}: {e}"));
            let opt = optimum.objective.to_f64().expect("optimum fits in f64");
            if !within(sol.objective, opt) {
                failures.push(format!(
                    "seed {seed} {} phase: lp {} exceeds the exact optimum {opt}",
                    phase.name(),
                    sol.objective
                ));
            }
            encode_and_check_rows(&inst, &model, &optimum.schedule, seed, &mut failures);
        }
    }
    let ok = verdict(
        9,
        "lp lower-bounds the exact optimum and admits every integral schedule",
        &failures,
        "200 instances, both phases, rows checked in exact arithmetic".into(),
    );
    assert!(ok, "lp soundness violations; see the ACCEPT 09 line above");
}

/// Sets the LP variables to the indicator encoding of an integral phase
/// schedule (unit mass at each task's processor and completion interval,
/// completion columns at the exact completion times) and checks every row.
fn encode_and_check_rows(
    inst: &Instance,
    model: &LpModel,
    sched: &mrfs::model::PhaseSchedule,
    seed: u64,
    failures: &mut Vec<String>,
) {
    let rational = |t: Time| BigRational::from_integer(BigInt::from(t));
    let pool = inst.pool(model.phase);
    let mut x = vec![BigRational::zero(); model.n_cols()];
    for (ti, key) in model.tasks.iter().enumerate() {
        let completion = sched.task_completion[&(key.job, key.index)];
        let placement = sched
            .placements
            .iter()
            .find(|p| p.item.task_key() == Some(*key))
            .expect("every task is placed");
        let proc = pool
            .iter()
            .position(|name| *name == placement.processor)
            .expect("placements stay on the phase pool");
        let level = model.grid.interval_for(completion);
        let col = model
            .col_mass(ti, proc, level)
            .expect("a feasible completion always has its mass column");
        x[col] = BigRational::from_integer(BigInt::from(1));
        x[model.col_task_completion(ti)] = rational(completion);
    }
    for (jp, &job) in model.job_ids.iter().enumerate() {
        x[model.col_job_completion(jp)] = rational(sched.job_completion[&job]);
    }

    for ri in 0..model.rows.len() {
        let (entries, rel, rhs) = model.exact_row(ri);
        let mut lhs = BigRational::zero();
        for (c, w) in &entries {
            lhs += w * &x[*c];
        }
        let holds = match rel {
            Relation::Ge => lhs >= rhs,
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
        };
        if !holds {
            failures.push(format!(
                "seed {seed} {} phase, {:?}: integral encoding violates the row ({} vs {})",
                model.phase.name(),
                model.rows[ri],
                lhs,
                rhs
            ));
        }
    }
}
