//! End-to-end acceptance suite. Every criterion prints one PASS/FAIL line;
//! the process exits non-zero when any criterion fails.
//!
//! All engine runs keep per-iteration verification switched on, so any
//! conservation, topology, traffic or replication violation aborts the run
//! and fails the criterion that owns it as well as criterion 8.

use std::process::ExitCode;
use std::time::Instant;

use exdyna::allocator::{adjust_topology, AdjustParams};
use exdyna::baselines::topk_select;
use exdyna::metrics::{mean, pearson, scaled_error_series};
use exdyna::partition::build_topology;
use exdyna::runner::{write_csv, RunConfig, RunError, RunOutput, SparsifierName, Workload};
use exdyna::selector::select_indices;
use exdyna::{DenseSgd64, Engine64, KOrder, LedgerRow, PartialK, Sparsifier, SparsifierConfig, TaskSpec};
use exdyna::workloads::TaskKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    lines: Vec<(usize, bool, String)>,
    /// Outcome of every engine run, for the invariant criterion.
    runs: Vec<(String, Result<(), String>)>,
    csvs: Vec<(String, Vec<u8>)>,
}

impl Report {
    fn record(&mut self, id: usize, pass: bool, detail: String) {
        println!("criterion {id:>2}: {} {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((id, pass, detail));
    }

    /// Runs `cfg`, checks the ledger identities on every row and keeps the
    /// CSV bytes for the determinism check.
    fn run(&mut self, label: &str, cfg: &RunConfig) -> Result<RunOutput, RunError> {
        assert!(cfg.verify);
        let started = Instant::now();
        let out = cfg.execute();
        let outcome = match &out {
            Ok(o) => check_rows(cfg, &o.rows),
            Err(e) => Err(e.to_string()),
        };
        eprintln!("  [{label}] {:.1}s", started.elapsed().as_secs_f64());
        self.runs.push((label.to_string(), outcome));
        if let Ok(o) = &out {
            let mut buf = Vec::new();
            write_csv(&o.rows, &mut buf).expect("in-memory write");
            self.csvs.push((label.to_string(), buf));
        }
        out
    }
}

/// Independent recomputation of the traffic identities from the per-rank
/// counts of each row.
fn check_rows(cfg: &RunConfig, rows: &[LedgerRow]) -> Result<(), String> {
    let n = cfg.workers as u64;
    let cltk = cfg.sparsifier == SparsifierName::CltK;
    let exclusive = matches!(
        cfg.sparsifier,
        SparsifierName::ExDyna | SparsifierName::ExDynaStatic | SparsifierName::CltK
    );
    for r in rows {
        let total: u64 = r.k_rank.iter().sum();
        let m = r.k_rank.iter().copied().max().unwrap_or(0);
        if r.k_prime as u64 + r.duplicates != total {
            return Err(format!("t={}: k' + duplicates != sum k_i", r.t));
        }
        if exclusive && r.duplicates != 0 {
            return Err(format!("t={}: {} duplicates", r.t, r.duplicates));
        }
        if cltk {
            continue;
        }
        if r.m_t as u64 != m {
            return Err(format!("t={}: m_t = {} but max k_i = {m}", r.t, r.m_t));
        }
        let c: u64 = n * r.k_rank.iter().map(|&k| m - k).sum::<u64>();
        if r.c_t != c {
            return Err(format!("t={}: C_t = {} but recomputed {c}", r.t, r.c_t));
        }
        let f = if total == 0 { 1.0 } else { (n * m) as f64 / total as f64 };
        if r.f_t != f {
            return Err(format!("t={}: f_t = {} but recomputed {f}", r.t, r.f_t));
        }
    }
    Ok(())
}

fn stream_config(sparsifier: SparsifierName) -> RunConfig {
    RunConfig {
        sparsifier,
        workers: 8,
        gradients: 1_000_000,
        density: 0.001,
        iters: 1000,
        seed: 7,
        ..Default::default()
    }
}

fn criteria_1_to_3(rep: &mut Report) {
    let d = 0.001;
    let exdyna = rep.run("exdyna n_g=1e6", &stream_config(SparsifierName::ExDyna));
    let cltk = rep.run("cltk n_g=1e6", &stream_config(SparsifierName::CltK));
    let topk = rep.run("topk n_g=1e6", &stream_config(SparsifierName::TopK));

    match (&exdyna, &cltk, &topk) {
        (Ok(e), Ok(c), Ok(t)) => {
            let dup_e = e.rows.iter().filter(|r| r.duplicates != 0).count();
            let dup_c = c.rows.iter().filter(|r| r.duplicates != 0).count();
            let k = 1000;
            let in_range =
                t.rows.iter().filter(|r| r.k_prime > k && r.k_prime <= 8 * k).count() as f64
                    / t.rows.len() as f64;
            rep.record(
                1,
                dup_e == 0 && dup_c == 0 && in_range >= 0.95,
                format!(
                    "iterations with duplicates: exdyna {dup_e}, cltk {dup_c}; topk k < k' <= 8k on {:.1}% (need >= 95%), mean k'/k {:.2}",
                    100.0 * in_range,
                    mean(&t.rows.iter().map(|r| r.k_prime as f64 / k as f64).collect::<Vec<_>>())
                ),
            );
        }
        _ => rep.record(1, false, "a run failed; see criterion 8".into()),
    }

    let Ok(e) = &exdyna else {
        rep.record(2, false, "exdyna run failed; see criterion 8".into());
        rep.record(3, false, "exdyna run failed; see criterion 8".into());
        return;
    };
    let tail: Vec<f64> = e.rows[100..].iter().map(|r| r.density).collect();
    let tail_mean = mean(&tail);
    let beta = e.config.beta;
    let in_band = tail.iter().filter(|&&x| x >= d / beta && x <= beta * d).count() as f64
        / tail.len() as f64;
    let mean_ok = (0.75 * d..=1.25 * d).contains(&tail_mean);
    rep.record(
        2,
        mean_ok && in_band >= 0.9,
        format!(
            "mean d'/d over t in [100,1000) = {:.3} (need [0.75, 1.25]: {}); in [d/2, 2d] on {:.1}% (need >= 90%: {})",
            tail_mean / d,
            if mean_ok { "ok" } else { "no" },
            100.0 * in_band,
            if in_band >= 0.9 { "ok" } else { "no" },
        ),
    );

    let converged = e.rows.last().expect("rows").delta;
    let fixed = 0.5 * converged;
    let mut ht = stream_config(SparsifierName::HardThreshold);
    ht.fixed_delta = Some(fixed);
    let plain = rep.run("hardthreshold n_g=1e6", &ht);
    let step_at = 500;
    ht.decay_step_at = Some(step_at);
    ht.decay_step_factor = 0.1;
    let stepped = rep.run("hardthreshold decay step n_g=1e6", &ht);
    match (plain, stepped) {
        (Ok(p), Ok(s)) => {
            let m = p.stats().mean_density;
            let dens: Vec<f64> = s.rows.iter().map(|r| r.density).collect();
            let pre = mean(&dens[step_at - 100..step_at]);
            let post = mean(&dens[step_at..step_at + 100]);
            rep.record(
                3,
                m > 2.0 * d && post < pre,
                format!(
                    "fixed delta {fixed:.3} (half of exdyna's final {converged:.3}): mean d'/d = {:.2} (need > 2); with a x0.1 step at t={step_at}: d'/d {:.2} before vs {:.2} after",
                    m / d,
                    pre / d,
                    post / d
                ),
            );
        }
        _ => rep.record(3, false, "a run failed; see criterion 8".into()),
    }
}

fn criterion_4(rep: &mut Report) {
    let mut lines = Vec::new();
    let mut ok = true;
    for seed in 1..=3 {
        let base = RunConfig {
            workers: 8,
            gradients: 1 << 18,
            density: 0.01,
            iters: 1000,
            seed,
            ..Default::default()
        };
        let dynamic = rep.run(&format!("exdyna 4:1 skew seed {seed}"), &base);
        let frozen = rep.run(
            &format!("exdyna static 4:1 skew seed {seed}"),
            &RunConfig { static_partitions: true, ..base },
        );
        match (dynamic, frozen) {
            (Ok(a), Ok(b)) => {
                let (fa, fb) = (a.stats().mean_f, b.stats().mean_f);
                ok &= fa < fb && fa <= 1.5 && fb > 1.5;
                lines.push(format!("seed {seed}: dynamic {fa:.3} vs static {fb:.3}"));
            }
            _ => {
                ok = false;
                lines.push(format!("seed {seed}: run failed"));
            }
        }
    }
    rep.record(4, ok, format!("mean f_t (need dynamic < static, dynamic <= 1.5 < static): {}", lines.join("; ")));
}

fn decaying_config() -> RunConfig {
    RunConfig {
        workers: 8,
        gradients: 1 << 17,
        density: 0.01,
        iters: 2000,
        decay: 0.999,
        seed: 5,
        ..Default::default()
    }
}

fn criterion_5(rep: &mut Report) {
    let Ok(out) = rep.run("exdyna decaying stream", &decaying_config()) else {
        rep.record(5, false, "run failed; see criterion 8".into());
        return;
    };
    let delta: Vec<f64> = out.rows.iter().map(|r| r.delta).collect();
    let err: Vec<f64> = out.rows.iter().map(|r| r.global_err).collect();
    let r = scaled_error_series(&delta, &err).ok().and_then(|s| pearson(&delta, &s));
    rep.record(
        5,
        r.is_some_and(|r| r > 0.8),
        format!(
            "pearson(delta, scaled global error) over 2000 iterations = {} (need > 0.8)",
            r.map_or_else(|| "undefined".to_string(), |r| format!("{r:.4}"))
        ),
    );
}

fn criterion_6(rep: &mut Report) {
    let cfg = RunConfig {
        workers: 4,
        gradients: 10_000,
        density: 0.01,
        iters: 5000,
        workload: Workload::Logistic,
        seed: 3,
        ..Default::default()
    };
    let sparse = rep.run("exdyna logistic", &cfg);
    let (vcfg, source) = cfg.prepare().expect("valid config");
    let exdyna::runner::Source::Task(task) = source else { unreachable!() };
    let mut dense = DenseSgd64::new(vcfg, vec![0.0; cfg.gradients]);
    let dense_loss = dense.run(&task, cfg.iters).expect("dense run").last().copied().flatten();
    let logistic = match (sparse.map(|o| o.stats().final_loss), dense_loss) {
        (Ok(Some(s)), Some(dl)) => {
            let rel = (s - dl).abs() / dl;
            (rel <= 0.05, format!("logistic final loss {s:.6} vs dense {dl:.6} (rel {rel:.2e}, need <= 5%)"))
        }
        _ => (false, "logistic run failed".to_string()),
    };

    let (exact, detail) = quadratic_density_one();
    rep.record(6, logistic.0 && exact, format!("{}; {detail}", logistic.1));
}

/// Density 1 with a threshold below every magnitude: every entry is selected
/// every iteration, so the sparsified run must reproduce dense SGD bit for
/// bit.
fn quadratic_density_one() -> (bool, String) {
    let (n, n_g, iters) = (4, 10_000, 300);
    let task = TaskSpec { kind: TaskKind::Quadratic { condition: 100.0, noise: 0.1 }, dimension: n_g, seed: 11 }
        .build()
        .expect("task");
    let cfg = SparsifierConfig {
        n,
        n_g,
        n_b: 64 * n,
        density: 1.0,
        delta_0: Some(f64::MIN_POSITIVE),
        eta: 0.5,
        ..Default::default()
    }
    .validate()
    .expect("config");
    let x0 = vec![0.0; n_g];
    let mut sparse = Engine64::new(cfg.clone(), Sparsifier::ExDyna { dynamic: true }, x0.clone()).expect("engine");
    let mut dense = DenseSgd64::new(cfg, x0);
    for t in 0..iters {
        if let Err(e) = sparse.step(&task) {
            return (false, format!("quadratic d=1 run failed at t={t}: {e}"));
        }
        dense.step(&task).expect("dense");
        let same = sparse.model().iter().zip(dense.model()).all(|(a, b)| a.to_bits() == b.to_bits());
        let empty = sparse.workers().iter().all(|w| w.e.iter().all(|&v| v == 0.0));
        if !same || !empty {
            return (false, format!("quadratic d=1 diverges from dense SGD at t={t}"));
        }
    }
    (true, format!("quadratic d=1 bit-identical to dense SGD for {iters} iterations"))
}

fn criterion_7(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    for case in 0..100 {
        let len = 10_000;
        let acc: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let k = rng.random_range(1..len);
        let mut mags: Vec<f64> = acc.iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(mags[k - 1] > mags[k], "case {case}: tie at the k-th magnitude");
        let delta = 0.5 * (mags[k - 1] + mags[k]);
        if select_indices(&acc, 0..len, delta) != topk_select(&acc, k).expect("k in range") {
            mismatches += 1;
        }
    }
    rep.record(7, mismatches == 0, format!("threshold selection equals top-k on {}/100 random vectors", 100 - mismatches));
}

fn criterion_8(rep: &mut Report) {
    let failed: Vec<String> = rep
        .runs
        .iter()
        .filter_map(|(label, r)| r.as_ref().err().map(|e| format!("{label}: {e}")))
        .collect();
    rep.record(
        8,
        failed.is_empty(),
        if failed.is_empty() {
            format!("all invariants held at every iteration of {} verified runs", rep.runs.len())
        } else {
            failed.join("; ")
        },
    );
}

fn criterion_9(rep: &mut Report) {
    let base = RunConfig {
        workers: 8,
        gradients: 1 << 18,
        density: 0.01,
        iters: 1000,
        seed: 1,
        ..Default::default()
    };
    let mut ok = true;
    let mut checked = Vec::new();
    for (label, cfg) in [("exdyna 4:1 skew seed 1", base), ("exdyna decaying stream", decaying_config())] {
        let again = cfg.execute();
        let first = rep.csvs.iter().find(|(l, _)| l == label).map(|(_, b)| b.clone());
        let same = match (again, first) {
            (Ok(o), Some(first)) => {
                let mut buf = Vec::new();
                write_csv(&o.rows, &mut buf).expect("in-memory write");
                buf == first
            }
            _ => false,
        };
        ok &= same;
        checked.push(format!("{label}: {}", if same { "identical" } else { "differs" }));
    }
    rep.record(9, ok, format!("repeated runs produce byte-identical CSV ({})", checked.join(", ")));
}

fn criterion_10(rep: &mut Report) {
    let n = 8;
    let params = AdjustParams { alpha: 1.25, blk_move: 1, min_blk: 2 };
    let k_part = PartialK::new(vec![300, 10, 300, 10, 300, 10, 300, 10], KOrder::Partition);
    let time = |n_g: usize| {
        let topo = build_topology(n_g, 64 * n, n, 2).expect("topology");
        let reps = 200_000;
        let started = Instant::now();
        let mut moved = 0;
        for _ in 0..reps {
            moved += std::hint::black_box(adjust_topology(std::hint::black_box(&topo), &k_part, params)).moved;
        }
        assert!(moved > 0);
        started.elapsed().as_secs_f64() / reps as f64
    };
    time(1_000_000);
    let mut small = f64::INFINITY;
    let mut large = f64::INFINITY;
    for _ in 0..5 {
        small = small.min(time(1_000_000));
        large = large.min(time(10_000_000));
    }
    let ratio = large.max(small) / large.min(small);
    rep.record(
        10,
        ratio < 2.0,
        format!(
            "adjust_topology {:.0} ns at n_g=1e6 vs {:.0} ns at n_g=1e7 (ratio {ratio:.2}, need < 2)",
            small * 1e9,
            large * 1e9
        ),
    );
}

fn main() -> ExitCode {
    let mut rep = Report { lines: Vec::new(), runs: Vec::new(), csvs: Vec::new() };
    let started = Instant::now();
    criterion_7(&mut rep);
    criterion_10(&mut rep);
    criterion_6(&mut rep);
    criterion_5(&mut rep);
    criterion_4(&mut rep);
    criterion_9(&mut rep);
    criteria_1_to_3(&mut rep);
    criterion_8(&mut rep);

    rep.lines.sort_by_key(|l| l.0);
    println!("\nacceptance summary ({:.0}s)", started.elapsed().as_secs_f64());
    for (id, pass, _) in &rep.lines {
        println!("  criterion {id:>2}: {}", if *pass { "PASS" } else { "FAIL" });
    }
    if rep.lines.iter().all(|l| l.1) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
