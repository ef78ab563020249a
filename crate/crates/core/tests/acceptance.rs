//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use phasecache::engine::BlockTrace;
use phasecache::injection::InjectionSchedule;
use phasecache::sim::{compare_fixed_vs_adaptive, drive, run, SimConfig};
use phasecache::trace::{trace_to_string, TraceFormat};
use phasecache::vector::oracle::{complement_basis, qp_projection_oracle};
use phasecache::vector::{project_motion_neutral_exact, project_motion_neutral_stabilized, SemanticVector};
use phasecache::verify::{case_inputs, case_seed};
use phasecache::window::{schedule_table, PromptSchedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

const DIMS: [usize; 4] = [2, 3, 8, 32];
const CASES: usize = 1000;
const SEED: u64 = 0;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn all_cases() -> impl Iterator<Item = (usize, u64, SemanticVector, SemanticVector)> {
    DIMS.into_iter().flat_map(|dim| {
        (0..CASES).map(move |i| {
            let seed = case_seed(SEED, dim, i);
            let (d, m) = case_inputs(seed, dim);
            (dim, seed, d, m)
        })
    })
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (dim, seed, d, m) in all_cases() {
        let exact = project_motion_neutral_exact(&d, &m).map_err(|e| e.to_string())?;
        let oracle = qp_projection_oracle(&d, &m).map_err(|e| e.to_string())?;
        let rel = exact.sub(&oracle).norm() / oracle.norm().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        ensure(rel <= 1e-6, || format!("dim {dim} seed {seed}: relative error {rel:e}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("worst relative error {worst:.2e}, {elapsed:.2?}"))
}

fn orthogonality_and_optimality() -> Outcome {
    let mut worst_orth: f64 = 0.0;
    for (dim, seed, d, m) in all_cases() {
        let p = project_motion_neutral_exact(&d, &m).map_err(|e| e.to_string())?;
        let bound = 1e-9 * d.norm() * m.norm();
        let orth = p.dot(&m).abs();
        worst_orth = worst_orth.max(orth / bound.max(f64::MIN_POSITIVE));
        ensure(orth <= bound, || format!("dim {dim} seed {seed}: |<p, m>| = {orth:e}"))?;

        let basis = complement_basis(&m).map_err(|e| e.to_string())?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed.rotate_left(17) ^ 0x0A11_CE55);
        let best_dist = p.sub(&d).norm();
        let best_resp = p.dot(&d);
        for k in 0..100 {
            let mut x = vec![0.0; dim];
            for h in &basis {
                let c: f64 = rng.sample(StandardNormal);
                for (xi, hi) in x.iter_mut().zip(h.as_slice()) {
                    *xi += c * hi;
                }
            }
            let mut x = SemanticVector::new(x).map_err(|e| e.to_string())?;
            if k % 4 == 3 {
                x = p.add(&x.scaled(1e-4));
            }
            let dist = x.sub(&d).norm();
            ensure(dist >= best_dist - 1e-9, || format!("dim {dim} seed {seed}: closer feasible point {dist} < {best_dist}"))?;
            if x.norm() <= p.norm() {
                let resp = x.dot(&d);
                ensure(resp <= best_resp + 1e-9, || format!("dim {dim} seed {seed}: response {resp} > {best_resp}"))?;
            }
        }
    }
    Ok(format!("worst orthogonality / bound {worst_orth:.2e}"))
}

fn stabilized_residual() -> Outcome {
    let mut worst: f64 = 0.0;
    for (dim, seed, d, m) in all_cases() {
        let exact = project_motion_neutral_exact(&d, &m).map_err(|e| e.to_string())?;
        let m_sq = m.norm_sq();
        let dm = d.dot(&m);
        let mut last_gap = f64::INFINITY;
        for eps in [1.0, 1e-3, 1e-6] {
            let s = project_motion_neutral_stabilized(&d, &m, eps).map_err(|e| e.to_string())?;
            let err = (s.dot(&m) - eps / (m_sq + eps) * dm).abs();
            worst = worst.max(err);
            ensure(err <= 1e-9, || format!("dim {dim} seed {seed} eps {eps}: residual off by {err:e}"))?;
            let gap = s.sub(&exact).norm();
            ensure(gap <= last_gap, || format!("dim {dim} seed {seed}: gap grew to {gap:e} at eps {eps}"))?;
            last_gap = gap;
        }
    }
    Ok(format!("worst residual error {worst:.2e}"))
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/window_schedule_default.csv")
}

fn window_golden_table() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_phasecache"))
        .arg("schedule")
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(out.status.success(), || format!("schedule exited with {}", out.status))?;
    let golden = std::fs::read(golden_path()).map_err(|e| e.to_string())?;
    if out.stdout != golden {
        let got = String::from_utf8_lossy(&out.stdout);
        let want = String::from_utf8_lossy(&golden);
        let line = got.lines().zip(want.lines()).position(|(a, b)| a != b);
        return Err(format!("output differs from golden table (first differing line {line:?})"));
    }
    let sim = SimConfig::default();
    let rows = schedule_table(&sim.schedule, &sim.engine.window).map_err(|e| e.to_string())?;
    for start_frame in [0, 40, 80, 120, 160, 200] {
        let w = rows[start_frame].window;
        ensure(w == 12, || format!("window {w} at segment start {start_frame}"))?;
    }
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("{} rows identical, {elapsed:.2?}", rows.len()))
}

fn constant_memory() -> Outcome {
    let mut sim = SimConfig::default();
    let b = sim.engine.frames_per_block;
    let total = 500 * b;
    let mut rng = ChaCha20Rng::seed_from_u64(0x5EED_0500);
    let mut boundaries = Vec::new();
    let mut block = 0usize;
    loop {
        block += rng.random_range(2..40usize);
        if block >= 500 {
            break;
        }
        boundaries.push(block * b + rng.random_range(0..b));
    }
    boundaries.retain(|&f| f > 0 && f < total);
    boundaries.dedup();
    sim.schedule = PromptSchedule::new(boundaries.clone(), total).map_err(|e| e.to_string())?;
    sim.seed = 77;
    let cap = sim.engine.sink_frames + sim.engine.window.w_max;
    let mut blocks = 0;
    let mut violation = None;
    drive(&sim, sim.engine.clone(), |engine, _, trace| {
        blocks += 1;
        let cfg = engine.config();
        for l in 0..cfg.layers {
            for h in 0..cfg.heads {
                let n = engine.head(l, h).stored_frames();
                if n > cap && violation.is_none() {
                    violation = Some(format!("block {}: head ({l},{h}) stores {n} > {cap}", trace.block_index));
                }
            }
        }
    })
    .map_err(|e| e.to_string())?;
    if let Some(v) = violation {
        return Err(v);
    }
    ensure(blocks == 500, || format!("ran {blocks} blocks"))?;
    Ok(format!("500 blocks, {} switches, cap {cap}", boundaries.len()))
}

/// Replays the per-head token accounting from the per-frame window column
/// alone: sink fills first, the local ring keeps at most `w_max` frames, a
/// bridge contributes two entries until it is pruned, each finished segment
/// leaves one anchor up to the FIFO limit.
fn oracle_mean_budget(sim: &SimConfig, fixed: bool) -> f64 {
    let e = &sim.engine;
    let window_col: Vec<usize> = if fixed {
        vec![e.window.w_max; sim.schedule.total_frames()]
    } else {
        std::fs::read_to_string(golden_path())
            .expect("golden table")
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect()
    };
    let seg_of = |t: usize| sim.schedule.boundaries().iter().filter(|&&b| b <= t).count();
    // Blocks until the decayed bridge falls under the prune tolerance.
    let bridge_life = match e.bridge_schedule {
        InjectionSchedule::Decayed => (e.bridge_prune_tol.ln() / e.bridge_lambda.ln()).ceil() as usize,
        InjectionSchedule::Constant => usize::MAX,
        InjectionSchedule::OneShot => 1,
    };
    let total = sim.schedule.total_frames();
    let b = e.frames_per_block;
    let (mut appended, mut sum, mut blocks) = (0usize, 0usize, 0usize);
    let mut last_switch: Option<usize> = None;
    let mut segment = 0;
    let mut t = 0;
    while t < total {
        let seg = seg_of(t);
        if seg != segment {
            segment = seg;
            last_switch = Some(blocks);
        }
        let sink = appended.min(e.sink_frames);
        let ring = appended.saturating_sub(e.sink_frames).min(e.window.w_max);
        let local = window_col[t].min(ring);
        let bridge = match last_switch {
            Some(s) if blocks - s < bridge_life => 2,
            _ => 0,
        };
        let anchors = segment.min(e.anchors.max_anchors);
        sum += e.tokens_per_frame * (sink + local) + bridge + anchors;
        appended += b.min(total - t);
        blocks += 1;
        t += b;
    }
    sum as f64 / blocks as f64
}

fn budget_savings() -> Outcome {
    let sim = SimConfig::default();
    let report = compare_fixed_vs_adaptive(&sim).map_err(|e| e.to_string())?;
    let adaptive = oracle_mean_budget(&sim, false);
    let fixed = oracle_mean_budget(&sim, true);
    let expected = 1.0 - adaptive / fixed;
    ensure((report.savings_ratio - expected).abs() <= 1e-9, || {
        format!("savings {} vs oracle {expected}", report.savings_ratio)
    })?;
    ensure(report.savings_ratio > 0.0, || format!("savings {} not positive", report.savings_ratio))?;

    let rows = schedule_table(&sim.schedule, &sim.engine.window).map_err(|e| e.to_string())?;
    let tau = sim.engine.window.tau_post;
    for seg in 1..sim.schedule.segment_count() - 1 {
        let mean = |pred: &dyn Fn(usize) -> bool| {
            let w: Vec<f64> = rows
                .iter()
                .filter(|r| r.segment_index == seg && pred(r.age))
                .map(|r| r.window as f64)
                .collect();
            (w.iter().sum::<f64>() / w.len() as f64, w.len())
        };
        let (early, n_early) = mean(&|a| (a as f64) < tau / 3.0);
        let (late, n_late) = mean(&|a| (a as f64) > 2.0 * tau);
        ensure(n_early > 0 && n_late > 0, || format!("segment {seg}: empty age band"))?;
        ensure(early > late, || format!("segment {seg}: early mean {early} <= late mean {late}"))?;
    }
    Ok(format!(
        "savings {:.6} (adaptive {:.4} vs fixed {:.4})",
        report.savings_ratio, report.adaptive_mean_budget, report.fixed_mean_budget
    ))
}

fn traces_for(mode: InjectionSchedule) -> Result<Vec<BlockTrace>, String> {
    let mut sim = SimConfig::default();
    sim.engine.bridge_schedule = mode;
    run(&sim).map(|r| r.traces).map_err(|e| e.to_string())
}

/// Stream-derived fields; the bridge entry count is removed from the budget.
fn stream_columns(t: &BlockTrace) -> (usize, usize, usize, usize, Option<usize>, usize, usize, bool, usize) {
    let bridge_entries = if t.bridge_norm > 0.0 { 2 } else { 0 };
    (
        t.block_index,
        t.first_frame,
        t.segment_index,
        t.age,
        t.distance,
        t.window,
        t.read_budget - bridge_entries,
        t.switch_flag,
        t.anchors_count,
    )
}

fn injection_schedules() -> Outcome {
    let one = traces_for(InjectionSchedule::OneShot)?;
    let con = traces_for(InjectionSchedule::Constant)?;
    let dec = traces_for(InjectionSchedule::Decayed)?;
    let norms = |t: &[BlockTrace]| t.iter().map(|r| r.bridge_norm).collect::<Vec<_>>();
    ensure(norms(&one) != norms(&con), || "one_shot and constant bridge_norm identical".into())?;
    ensure(norms(&one) != norms(&dec), || "one_shot and decayed bridge_norm identical".into())?;
    ensure(norms(&con) != norms(&dec), || "constant and decayed bridge_norm identical".into())?;
    for (name, other) in [("one_shot", &one), ("decayed", &dec)] {
        for (a, b) in con.iter().zip(other.iter()) {
            ensure(stream_columns(a) == stream_columns(b), || {
                format!("{name}: block {} differs outside bridge columns", a.block_index)
            })?;
        }
    }

    let mut checked = 0;
    for i in 1..dec.len() {
        let (prev, cur) = (&dec[i - 1], &dec[i]);
        if cur.switch_flag || prev.segment_index == 0 {
            continue;
        }
        let ratio = cur.bridge_norm / prev.bridge_norm;
        ensure((ratio - 0.85).abs() <= 1e-9, || format!("decayed ratio {ratio} at block {i}"))?;
        ensure(con[i].bridge_norm == con[i - 1].bridge_norm, || format!("constant changed at block {i}"))?;
        ensure(one[i].bridge_norm == 0.0, || format!("one_shot nonzero at block {i}"))?;
        checked += 1;
    }
    for t in one.iter().filter(|t| t.switch_flag) {
        ensure(t.bridge_norm > 0.0, || format!("one_shot empty at switch block {}", t.block_index))?;
    }
    Ok(format!("{checked} post-switch block pairs checked"))
}

fn zero_switch_noop() -> Outcome {
    let mut sim = SimConfig::default();
    sim.signature_separation = 0.0;
    let mut budgets = Vec::new();
    let mut bridge_counts = Vec::new();
    let mut problem: Option<String> = None;
    let mut injections = 0;
    drive(&sim, sim.engine.clone(), |engine, read_set, trace| {
        budgets.push(read_set.heads.iter().map(|h| h.budget).collect::<Vec<_>>());
        bridge_counts.push(read_set.heads.iter().map(|h| h.bridge.len()).collect::<Vec<_>>());
        if !trace.switch_flag || problem.is_some() {
            return;
        }
        injections += 1;
        let rec = engine.last_injection().expect("injection record");
        for (i, (g, s)) in rec.gates.iter().zip(&rec.summaries).enumerate() {
            if g.g_recent != 0.0 || g.g_sink != 0.0 {
                problem = Some(format!("block {}: head {i} gates {g:?}", trace.block_index));
                return;
            }
            let bridge = &read_set.heads[i].bridge;
            if bridge.len() != 2 || bridge[0] != s.sink || bridge[1] != s.recent {
                problem = Some(format!("block {}: head {i} bridge differs from summaries", trace.block_index));
                return;
            }
        }
    })
    .map_err(|e| e.to_string())?;
    if let Some(p) = problem {
        return Err(p);
    }
    ensure(injections == sim.schedule.boundaries().len(), || format!("{injections} injections"))?;

    let mut reference_cfg = sim.engine.clone();
    reference_cfg.injection_enabled = false;
    let mut reference = Vec::new();
    drive(&sim, reference_cfg, |_, read_set, _| {
        reference.push(read_set.heads.iter().map(|h| h.budget).collect::<Vec<_>>());
    })
    .map_err(|e| e.to_string())?;
    ensure(reference.len() == budgets.len(), || "block counts differ".into())?;
    for (block, ((with, without), counts)) in budgets.iter().zip(&reference).zip(&bridge_counts).enumerate() {
        for ((a, b), c) in with.iter().zip(without).zip(counts) {
            ensure(*a == b + c, || format!("block {block}: budget {a} != {b} + {c}"))?;
        }
    }
    Ok(format!("{injections} switches, {} blocks", budgets.len()))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for format in ["csv", "json"] {
        let mut files = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("trace{run}.{format}"));
            let status = Command::new(env!("CARGO_BIN_EXE_phasecache"))
                .args(["simulate", "--seed", "11", "--format", format, "--out"])
                .arg(&path)
                .output()
                .map_err(|e| e.to_string())?
                .status;
            ensure(status.success(), || format!("simulate exited with {status}"))?;
            files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        ensure(!files[0].is_empty() && files[0] == files[1], || format!("{format} traces differ"))?;
    }
    let mut sim = SimConfig::default();
    sim.seed = 11;
    let a = run(&sim).map_err(|e| e.to_string())?;
    let b = run(&sim).map_err(|e| e.to_string())?;
    for f in [TraceFormat::Csv, TraceFormat::Json] {
        let (x, y) = (trace_to_string(&a.traces, f), trace_to_string(&b.traces, f));
        ensure(x.map_err(|e| e.to_string())? == y.map_err(|e| e.to_string())?, || "in-process traces differ".into())?;
    }
    Ok("csv and json byte-identical".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle_equivalence", oracle_equivalence),
        ("orthogonality_and_optimality", orthogonality_and_optimality),
        ("stabilized_residual", stabilized_residual),
        ("window_golden_table", window_golden_table),
        ("constant_memory", constant_memory),
        ("budget_savings", budget_savings),
        ("injection_schedules", injection_schedules),
        ("zero_switch_noop", zero_switch_noop),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
