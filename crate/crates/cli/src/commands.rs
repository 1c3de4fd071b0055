use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use psvrt::dataset::{write_dataset, write_pbm};
use psvrt::generator::generate_batch;
use psvrt::probe::{count_arrangements, evaluate_probe, straining_report};
use psvrt::rng::{derive_seed, stream_rng};
use psvrt::trainer::{
    condition_key, run_condition, run_grid, sweep_report, write_atomic, ConditionSummary, CurvePoint, GridPlan,
    RunStore, Sweep, TrialSeeds,
};
use psvrt::{arch, SdLabel, SrLabel, Task};

use crate::args::{Command, GenArgs, GridArgs, ProbeArgs, ReportArgs, TrainArgs};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::CliError;

const GEN_BATCH: usize = 100;

pub struct Ctx {
    pub out: PathBuf,
    pub quiet: bool,
}

impl Ctx {
    fn dir(&self, explicit: &Option<PathBuf>, default_name: String) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.out.join(default_name))
    }

    fn progress(&self, msg: impl FnOnce() -> String) {
        if !self.quiet {
            eprintln!("{}", msg());
        }
    }
}

pub fn run(ctx: &Ctx, command: &Command) -> Result<(), CliError> {
    match command {
        Command::Gen(a) => gen(ctx, a, command),
        Command::Train(a) => train(ctx, a, command),
        Command::Grid(a) => grid(ctx, a, command),
        Command::Probe(a) => probe(ctx, a, command),
        Command::Report(a) => report(a, command),
        Command::Replay(a) => {
            let manifest = RunManifest::read(&a.manifest)?;
            let replayed = with_run_dir(manifest.command, a.run_dir.clone())?;
            ctx.progress(|| format!("replaying {} into {}", a.manifest.display(), a.run_dir.display()));
            run(ctx, &replayed)
        }
    }
}

fn with_run_dir(mut command: Command, dir: PathBuf) -> Result<Command, CliError> {
    match &mut command {
        Command::Gen(a) => a.run_dir = Some(dir),
        Command::Train(a) => a.run_dir = Some(dir),
        Command::Grid(a) => a.run_dir = Some(dir),
        Command::Probe(a) => a.run_dir = Some(dir),
        Command::Report(a) => a.run_dir = dir,
        Command::Replay(_) => return Err(CliError::Usage("a manifest cannot record a replay".into())),
    }
    Ok(command)
}

/// Records the resolved command so the manifest alone reproduces the run.
fn resolved(command: &Command, dir: &Path) -> Command {
    with_run_dir(command.clone(), dir.to_path_buf()).unwrap_or_else(|_| command.clone())
}

fn gen(ctx: &Ctx, a: &GenArgs, command: &Command) -> Result<(), CliError> {
    let params = a.image.params()?;
    if a.count % 2 != 0 {
        return Err(CliError::Usage(format!("--count must be even for a balanced dataset, got {}", a.count)));
    }
    if a.export_pbm > a.count {
        return Err(CliError::Usage(format!("--export-pbm {} exceeds --count {}", a.export_pbm, a.count)));
    }
    let dir = ctx.dir(&a.run_dir, format!("gen_{}_{}", a.task, a.image.tag()));
    fs::create_dir_all(&dir)?;
    let mut outputs = vec!["dataset.psvr".to_string()];
    if a.export_pbm > 0 {
        outputs.push("pbm/".into());
    }
    RunManifest::new(resolved(command, &dir), None, a.image.seed, &dir, outputs).write(&dir.join(MANIFEST_FILE))?;

    let seed = derive_seed(a.image.seed, "gen", 0);
    let mut samples = Vec::with_capacity(a.count);
    let mut b = 0;
    while samples.len() < a.count {
        let size = GEN_BATCH.min(a.count - samples.len());
        samples.extend(generate_batch(&mut stream_rng(seed, b), &params, a.task, size)?);
        b += 1;
    }
    let path = dir.join("dataset.psvr");
    let tmp = path.with_extension("partial");
    write_dataset(BufWriter::new(fs::File::create(&tmp)?), &params, &samples)?;
    fs::rename(&tmp, &path)?;
    if a.export_pbm > 0 {
        let pbm = dir.join("pbm");
        fs::create_dir_all(&pbm)?;
        for (i, s) in samples.iter().take(a.export_pbm).enumerate() {
            write_pbm(BufWriter::new(fs::File::create(pbm.join(format!("{i:06}.pbm")))?), &s.image)?;
        }
    }
    let positive = samples
        .iter()
        .filter(|s| match a.task {
            Task::Sd => s.sd_label == SdLabel::Same,
            Task::Sr => s.sr_label == SrLabel::Vertical,
        })
        .count();
    println!(
        "wrote {} samples ({} positive, {} negative) to {}",
        samples.len(),
        positive,
        samples.len() - positive,
        path.display()
    );
    Ok(())
}

fn observer(ctx: &Ctx, key: String) -> impl Fn(usize, &CurvePoint) + Sync + '_ {
    move |trial, p| {
        ctx.progress(|| {
            format!("{key} trial {trial}: {} images, train {:.3}, eval {:.3}", p.images_seen, p.train_acc, p.eval_acc)
        })
    }
}

fn print_summary(s: &ConditionSummary) {
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    println!(
        "{}: {}/{} learned, ALC mean {} min {} max {}",
        s.key,
        s.learned,
        s.trials,
        fmt(s.mean_alc),
        fmt(s.min_alc),
        fmt(s.max_alc)
    );
    for r in &s.results {
        let fault = r.fault.as_deref().map(|f| format!(" fault: {f}")).unwrap_or_default();
        println!(
            "  trial {}: alc {:.4} final {:.4} learned {} ({:.1}s){fault}",
            r.trial,
            r.alc,
            r.final_accuracy,
            r.learned,
            r.wall_time.as_secs_f64()
        );
    }
}

fn train(ctx: &Ctx, a: &TrainArgs, command: &Command) -> Result<(), CliError> {
    let params = a.image.params()?;
    let spec = arch::by_name(&a.arch, params.n())?;
    spec.shapes()?;
    let config = a.training.config(a.trials, a.image.seed);
    config.validate()?;
    let key = condition_key(&a.arch, a.task, &params);
    let dir = ctx.dir(&a.run_dir, format!("train_{}_{}_{}", a.arch, a.task, a.image.tag()));
    let store = RunStore::create(&dir)?;
    let outputs = vec![format!("curves/{key}.csv"), format!("summaries/{key}.json")];
    let mut manifest = RunManifest::new(resolved(command, &dir), Some(config.clone()), a.image.seed, &dir, outputs);
    manifest.trial_seeds = (0..a.trials).map(|t| TrialSeeds::new(&config, &params, t)).collect();
    manifest.write(&dir.join(MANIFEST_FILE))?;

    if let Some(done) = store.load_summary(&key)? {
        if !a.training.resume {
            return Err(CliError::Usage(format!(
                "{key} is already complete in {}; pass --resume to keep it",
                dir.display()
            )));
        }
        print_summary(&done);
        return Ok(());
    }
    let summary = run_condition(&spec, &params, a.task, &config, &observer(ctx, key))?;
    store.save(&summary)?;
    print_summary(&summary);
    Ok(())
}

fn grid(ctx: &Ctx, a: &GridArgs, command: &Command) -> Result<(), CliError> {
    let sweeps = a.sweeps();
    let models = a.models()?;
    let config = a.training.config(a.trials, a.seed);
    config.validate()?;
    let name: String = sweeps.iter().map(|s| s.name()).collect();
    let dir = ctx.dir(&a.run_dir, format!("grid_{name}_s{}", a.seed));
    let store = RunStore::create(&dir)?;
    let outputs = vec!["curves/".into(), "summaries/".into(), "report/".into()];
    RunManifest::new(resolved(command, &dir), Some(config.clone()), a.seed, &dir, outputs)
        .write(&dir.join(MANIFEST_FILE))?;

    let plan = GridPlan { sweeps: sweeps.clone(), models, resume: a.training.resume };
    let summaries = run_grid(&plan, &config, &store, &|key, trial, p| {
        ctx.progress(|| {
            format!("{key} trial {trial}: {} images, train {:.3}, eval {:.3}", p.images_seen, p.train_acc, p.eval_acc)
        })
    })
    .map_err(|e| match e {
        psvrt::Error::InvalidConfig(msg) => CliError::Usage(msg),
        other => other.into(),
    })?;
    for s in &summaries {
        print_summary(s);
    }
    write_reports(&store, &sweeps)?;
    Ok(())
}

fn probe(ctx: &Ctx, a: &ProbeArgs, command: &Command) -> Result<(), CliError> {
    let params = a.image.params()?;
    let batch = (1..=GEN_BATCH / 2)
        .rev()
        .map(|h| 2 * h)
        .find(|b| a.count % b == 0)
        .filter(|_| a.count > 0 && a.count % 2 == 0)
        .ok_or_else(|| CliError::Usage(format!("--count must be even and positive, got {}", a.count)))?;
    let dir = ctx.dir(&a.run_dir, format!("probe_{}", a.image.tag()));
    fs::create_dir_all(dir.join("report"))?;
    let outputs = vec!["report/probe.csv".into(), "report/probe.json".into()];
    RunManifest::new(resolved(command, &dir), None, a.image.seed, &dir, outputs).write(&dir.join(MANIFEST_FILE))?;

    let stats = evaluate_probe(&params, a.count, batch, a.pair_scan)?;
    let arrangements = count_arrangements(params.n(), params.m(), params.k())?;
    let csv = format!(
        "m,n,k,samples,same,recall,accuracy,false_positive_rate,pair_scan_checked,pair_scan_false_positive_rate,arrangements\n\
         {},{},{},{},{},{},{},{},{},{},{}\n",
        params.m(),
        params.n(),
        params.k(),
        stats.samples,
        stats.same,
        stats.recall(),
        stats.accuracy(),
        stats.false_positive_rate(),
        stats.pair_scan_checked,
        stats.pair_scan_false_positive_rate(),
        arrangements
    );
    write_atomic(&dir.join("report/probe.csv"), csv.as_bytes())?;
    let mut json = serde_json::to_vec_pretty(&stats).map_err(psvrt::Error::from)?;
    json.push(b'\n');
    write_atomic(&dir.join("report/probe.json"), &json)?;
    println!(
        "probe m={} n={} k={}: recall {:.4}, accuracy {:.4}, false positives {}/{}; literal pair scan fired on {}/{} Different images",
        params.m(),
        params.n(),
        params.k(),
        stats.recall(),
        stats.accuracy(),
        stats.false_positive,
        stats.samples - stats.same,
        stats.pair_scan_false_positive,
        stats.pair_scan_checked
    );
    Ok(())
}

fn write_reports(store: &RunStore, sweeps: &[Sweep]) -> Result<(), CliError> {
    let summaries = store.load_summaries()?;
    if summaries.is_empty() {
        eprintln!("warning: no summaries in {}; writing empty tables", store.summaries_dir().display());
    }
    for &sweep in sweeps {
        let (rows, csv) = sweep_report(&summaries, sweep);
        let path = store.report_dir().join(format!("sweep_{}.csv", sweep.name()));
        write_atomic(&path, csv.as_bytes())?;
        let straining = straining_report(&summaries, sweep)?;
        write_atomic(&store.report_dir().join(format!("straining_{}.csv", sweep.name())), straining.to_csv().as_bytes())?;
        println!("{}: {} rows", path.display(), rows.len());
        for (model, task, v) in &straining.missing {
            eprintln!("warning: {} sweep has no {model} {task} condition at {}={v}", sweep.name(), sweep.name());
        }
        for (model, task, t) in &straining.trends {
            println!("  {model} {task}: ALC {t:?} over {}", sweep.name());
        }
    }
    Ok(())
}

fn report(a: &ReportArgs, command: &Command) -> Result<(), CliError> {
    let store = RunStore::open(&a.run_dir)
        .map_err(|e| CliError::Usage(format!("{} is not a run directory: {e}", a.run_dir.display())))?;
    let sweeps = if a.sweeps.is_empty() { Sweep::ALL.to_vec() } else { a.sweeps.clone() };
    let outputs = sweeps.iter().map(|s| format!("report/sweep_{}.csv", s.name())).collect();
    RunManifest::new(command.clone(), None, 0, &a.run_dir, outputs).write(&store.report_dir().join(MANIFEST_FILE))?;
    write_reports(&store, &sweeps)
}
