//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 4 and 5 train the baseline for 500k images per trial and take
//! about an hour on one core; `PSVRT_ACCEPT_QUICK=1` skips them. Criterion 6
//! only runs with `PSVRT_EXTENDED=1`.

mod common;

use std::time::Instant;

use psvrt::arch::{self, all_names};
use psvrt::generator::{generate_batch, recompute_labels, render, Task};
use psvrt::probe::{count_arrangements, evaluate_probe};
use psvrt::rng::stream_rng;
use psvrt::trainer::{alc, curves_csv, run_condition, train_trial, CurvePoint, LearningCurve, TrainConfig};
use psvrt::{ConditionSummary, ImageParams, Network, SdLabel, Tensor4};
use rand::Rng;

use common::*;

struct Outcome {
    pass: Option<bool>,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass: Some(pass), detail }
    }
}

fn gradient_fidelity() -> Outcome {
    const SEEDS: u64 = 20;
    let mut lines = Vec::new();
    let mut ok = true;
    let kinds: [(&str, &dyn Fn(u64) -> LayerCheck); 6] = [
        ("conv", &|s| check_conv(s, 50, 20)),
        ("pool", &|s| check_pool(s, 50)),
        ("relu", &|s| check_relu(s, 50)),
        ("dense", &|s| check_dense(s, 50, 20)),
        ("softmax-xent", &|s| check_softmax(s, 25)),
        ("baseline n=30", &|s| check_baseline(s, 50)),
    ];
    for (name, check) in kinds {
        let (mut checked, mut skipped, mut worst) = (0, 0, 0.0f64);
        for seed in 0..SEEDS {
            let c = check(1000 + seed);
            checked += c.checked;
            skipped += c.skipped;
            worst = worst.max(c.worst);
        }
        ok &= checked >= 1000 && worst < 1e-4;
        let kinks = if skipped > 0 { format!(" ({skipped} kink-crossing probes replaced)") } else { String::new() };
        lines.push(format!("{name}: {checked} coords, max rel err {worst:.2e}{kinks}"));
    }
    Outcome::new(ok, lines.join("; "))
}

fn generator_soundness() -> Outcome {
    const BATCHES: u64 = 84;
    let mut total = 0usize;
    let mut failures = Vec::new();
    for m in [3, 4, 5] {
        for n in [30, 60] {
            for k in [2, 3] {
                for task in [Task::Sd, Task::Sr] {
                    let params = ImageParams::new(m, n, k, 11).unwrap();
                    for b in 0..BATCHES {
                        let batch = generate_batch(&mut stream_rng(m as u64 * 1000 + n as u64 * 10 + k as u64, b), &params, task, 50).unwrap();
                        let positives = batch.iter().filter(|s| s.class(task) == 1).count();
                        if positives != 25 {
                            failures.push(format!("m{m} n{n} k{k} {task} batch {b}: {positives}/50 positive"));
                        }
                        for s in &batch {
                            total += 1;
                            if recompute_labels(s).unwrap() != (s.sd_label, s.sr_label) {
                                failures.push(format!("m{m} n{n} k{k}: label mismatch"));
                            }
                            for i in 0..k {
                                for j in i + 1..k {
                                    let (p, q) = (s.placements[i], s.placements[j]);
                                    if p.row.abs_diff(q.row) < m && p.col.abs_diff(q.col) < m {
                                        failures.push(format!("m{m} n{n} k{k}: overlapping placements"));
                                    }
                                    if s.sd_label == SdLabel::Different && s.items[i] == s.items[j] {
                                        failures.push(format!("m{m} n{n} k{k}: identical pair in Different"));
                                    }
                                }
                            }
                            if render(&s.items, &s.placements, n).unwrap() != s.image {
                                failures.push(format!("m{m} n{n} k{k}: image disagrees with items"));
                            }
                        }
                    }
                }
            }
        }
    }
    let detail = format!("{total} samples, {} violations{}", failures.len(), failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default());
    Outcome::new(total >= 100_000 && failures.is_empty(), detail)
}

fn alc_oracle() -> Outcome {
    let mut rng = stream_rng(77, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let len = rng.random_range(1..200);
        let evals: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        let curve = LearningCurve::from_points(
            evals.iter().enumerate().map(|(i, &e)| CurvePoint { images_seen: (i as u64 + 1) * 10_000, train_acc: 0.5, eval_acc: e }).collect(),
        )
        .unwrap();
        // Reverse-order Kahan sum as the independent mean.
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for &e in evals.iter().rev() {
            let y = e - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        worst = worst.max((alc(&curve).unwrap() - sum / len as f64).abs());
    }
    let flat = LearningCurve::from_points(
        (1..=50).map(|i| CurvePoint { images_seen: i * 10_000, train_acc: 0.5, eval_acc: 0.5 }).collect(),
    )
    .unwrap();
    let chance = alc(&flat).unwrap();
    Outcome::new(worst <= 1e-12 && chance == 0.5, format!("max |alc - oracle| {worst:.1e} over 1000 curves; flat-0.5 curve -> {chance}"))
}

fn describe(s: &ConditionSummary) -> String {
    let trials: Vec<String> = s
        .results
        .iter()
        .map(|r| format!("t{} alc {:.3} final {:.3}{}", r.trial, r.alc, r.final_accuracy, if r.learned { "" } else { " (not learned)" }))
        .collect();
    format!("mean ALC {}; {}", s.mean_alc.map_or("-".into(), |a| format!("{a:.4}")), trials.join(", "))
}

fn plain_mean_alc(s: &ConditionSummary) -> f64 {
    s.results.iter().map(|r| r.alc).sum::<f64>() / s.results.len() as f64
}

fn desk_condition(task: Task, n: usize, budget: u64) -> ConditionSummary {
    let params = ImageParams::new(4, n, 2, 0).unwrap();
    let config = TrainConfig { trials: 3, image_budget: budget, ..TrainConfig::default() };
    run_condition(&arch::psvrt_baseline(n), &params, task, &config, &|_, _| {}).unwrap()
}

fn sr_learnability(sr: &ConditionSummary) -> Outcome {
    let ok = sr.results.iter().all(|r| r.learned && r.final_accuracy >= 0.95);
    Outcome::new(ok, describe(sr))
}

fn dichotomy(sr: &ConditionSummary, sd: &ConditionSummary) -> Outcome {
    // ALC over all trials, so non-learned trials pull the mean down.
    let (a_sr, a_sd) = (plain_mean_alc(sr), plain_mean_alc(sd));
    let ok = a_sd < a_sr - 0.05 || sd.non_learned >= 1;
    Outcome::new(ok, format!("SR all-trial ALC {a_sr:.4}, SD all-trial ALC {a_sd:.4}, SD non-learned {}/3; SD {}", sd.non_learned, describe(sd)))
}

fn straining_trend() -> Outcome {
    if std::env::var_os("PSVRT_EXTENDED").is_none() {
        return Outcome { pass: None, detail: "skipped; set PSVRT_EXTENDED=1 (18 trials x 1M images)".into() };
    }
    let ns = [30, 60, 90];
    let sd: Vec<ConditionSummary> = ns.iter().map(|&n| desk_condition(Task::Sd, n, 1_000_000)).collect();
    let sr: Vec<ConditionSummary> = ns.iter().map(|&n| desk_condition(Task::Sr, n, 1_000_000)).collect();
    let sd_alc: Vec<f64> = sd.iter().map(plain_mean_alc).collect();
    let sd_nl: Vec<usize> = sd.iter().map(|s| s.non_learned).collect();
    let sr_alc: Vec<f64> = sr.iter().map(plain_mean_alc).collect();
    let sd_falls = sd_alc.windows(2).all(|w| w[1] <= w[0]);
    let nl_rises = sd_nl.windows(2).all(|w| w[1] >= w[0]);
    let sr_spread = sr_alc.iter().cloned().fold(f64::MIN, f64::max) - sr_alc.iter().cloned().fold(f64::MAX, f64::min);
    Outcome::new(
        (sd_falls || nl_rises) && sr_spread < 0.05,
        format!("SD ALC {sd_alc:.3?}, SD non-learned {sd_nl:?}, SR ALC {sr_alc:.3?} (spread {sr_spread:.3})"),
    )
}

fn brute_arrangements(n: usize, m: usize, k: usize) -> u128 {
    let span = n - m;
    let cells: Vec<(usize, usize)> = (0..=span).flat_map(|r| (0..=span).map(move |c| (r, c))).collect();
    let clash = |a: (usize, usize), b: (usize, usize)| a.0.abs_diff(b.0) < m && a.1.abs_diff(b.1) < m;
    let mut total = 0u128;
    for i in 0..cells.len() {
        if k == 1 {
            total += 1;
            continue;
        }
        for j in i + 1..cells.len() {
            if clash(cells[i], cells[j]) {
                continue;
            }
            if k == 2 {
                total += 1;
                continue;
            }
            total += (j + 1..cells.len()).filter(|&l| !clash(cells[i], cells[l]) && !clash(cells[j], cells[l])).count() as u128;
        }
    }
    total
}

fn probe_oracle() -> Outcome {
    let params = ImageParams::new(4, 60, 2, 0).unwrap();
    let stats = evaluate_probe(&params, 10_000, 100, 100).unwrap();
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for n in 1..=12 {
        for m in 1..=3.min(n) {
            for k in 1..=3 {
                compared += 1;
                let (fast, slow) = (count_arrangements(n, m, k).unwrap(), brute_arrangements(n, m, k));
                if fast != slow {
                    mismatches.push(format!("n{n} m{m} k{k}: {fast} vs {slow}"));
                }
            }
        }
    }
    let ok = stats.recall() == 1.0 && stats.accuracy() >= 0.999 && mismatches.is_empty();
    Outcome::new(
        ok,
        format!(
            "recall {:.4}, accuracy {:.4} over {} samples ({} false positives; literal pair scan fired on {}/{} Different); counts {}/{} match enumeration",
            stats.recall(),
            stats.accuracy(),
            stats.samples,
            stats.false_positive,
            stats.pair_scan_false_positive,
            stats.pair_scan_checked,
            compared - mismatches.len(),
            compared
        ),
    )
}

fn architecture_conformance() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    for name in all_names() {
        for n in [30, 180] {
            checked += 1;
            let spec = arch::by_name(&name, n).unwrap();
            let (convs, dense) = described_convs(&name);
            let want = expected_shapes(n, &convs, dense);
            let got: Vec<([usize; 3], [usize; 3], usize)> =
                spec.shapes().unwrap().iter().map(|s| (s.input, s.output, s.params)).collect();
            if got != want {
                failures.push(format!("{name} n={n}: shapes differ"));
                continue;
            }
            let total: usize = want.iter().map(|w| w.2).sum();
            if arch::param_count(&spec).unwrap() != total {
                failures.push(format!("{name} n={n}: param count"));
            }
            let mut net = Network::<f32>::new(&spec, &mut stream_rng(5, 0)).unwrap();
            if net.param_count() != total {
                failures.push(format!("{name} n={n}: network holds {} params, expected {total}", net.param_count()));
            }
            let mut rng = stream_rng(6, 0);
            let x = Tensor4::from_vec([1, 1, n, n], (0..n * n).map(|_| f32::from(rng.random::<bool>())).collect()).unwrap();
            let logits = net.forward(&x).unwrap().clone();
            if logits.dims() != [1, 2, 1, 1] {
                failures.push(format!("{name} n={n}: logits {:?}", logits.dims()));
            }
            let grad = Tensor4::from_vec([1, 2, 1, 1], vec![0.5, -0.5]).unwrap();
            net.backward(&grad).unwrap();
            if net.grads().iter().any(|g| g.iter().any(|v| !v.is_finite())) {
                failures.push(format!("{name} n={n}: non-finite gradient"));
            }
        }
    }
    Outcome::new(failures.is_empty(), format!("{checked} networks checked; {}", if failures.is_empty() { "all match".into() } else { failures.join(", ") }))
}

fn reproducibility() -> Outcome {
    let params = ImageParams::new(4, 30, 2, 3).unwrap();
    let config = TrainConfig { image_budget: 5_000, eval_interval: 20, eval_set_size: 200, trials: 2, ..TrainConfig::default() };
    let spec = arch::psvrt_baseline(30);
    let mut ok = true;
    for trial in 0..2 {
        let a = train_trial(&spec, &params, Task::Sd, &config, trial).unwrap();
        let b = train_trial(&spec, &params, Task::Sd, &config, trial).unwrap();
        ok &= curves_csv("c", &[a]) == curves_csv("c", &[b]);
    }
    let serial = run_condition(&spec, &params, Task::Sr, &config, &|_, _| {}).unwrap();
    let parallel = run_condition(&spec, &params, Task::Sr, &TrainConfig { workers: 2, ..config.clone() }, &|_, _| {}).unwrap();
    let same_summary = serde_json::to_string(&serial).unwrap() == serde_json::to_string(&parallel).unwrap();
    Outcome::new(ok && same_summary, format!("repeated trials bit-identical: {ok}; 1 vs 2 workers identical summaries: {same_summary}"))
}

fn main() {
    let mut failed = false;
    let mut report = |id: u32, name: &str, run: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = run();
        let verdict = match o.pass {
            Some(true) => "PASS",
            Some(false) => {
                failed = true;
                "FAIL"
            }
            None => "SKIP",
        };
        println!("criterion {id} [{name}]: {verdict} ({:.1}s) {}", start.elapsed().as_secs_f64(), o.detail);
    };
    report(1, "gradient fidelity", &gradient_fidelity);
    report(2, "generator soundness", &generator_soundness);
    report(3, "ALC oracle", &alc_oracle);
    report(7, "probe oracle", &probe_oracle);
    report(8, "architecture conformance", &architecture_conformance);
    report(9, "reproducibility", &reproducibility);

    if std::env::var_os("PSVRT_ACCEPT_QUICK").is_some() {
        for (id, name) in [(4, "SR learnability, desk scale"), (5, "SD/SR dichotomy, desk scale")] {
            println!("criterion {id} [{name}]: SKIP (PSVRT_ACCEPT_QUICK is set)");
        }
        report(6, "straining trend, extended", &straining_trend);
        std::process::exit(i32::from(failed));
    }
    let start = Instant::now();
    let sr = desk_condition(Task::Sr, 60, 500_000);
    let sd = desk_condition(Task::Sd, 60, 500_000);
    println!("(criteria 4-5 training took {:.0}s)", start.elapsed().as_secs_f64());
    report(4, "SR learnability, desk scale", &|| sr_learnability(&sr));
    report(5, "SD/SR dichotomy, desk scale", &|| dichotomy(&sr, &sd));
    report(6, "straining trend, extended", &straining_trend);

    if failed {
        std::process::exit(1);
    }
}
