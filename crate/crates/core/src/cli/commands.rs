use super::output::{num, summary_table, vector, Table};
use super::specs::{parse_vector, FrictionSpec, PartitionSpec, Truth};
use super::{
    Cli, EstimateArgs, FrictionArgs, Preset, RecordArgs, SamplerCheckArgs, Sub, VarredArgs,
};
use coarse::diagnostics::{hit_and_run_vs_exact_1d, mean_and_se};
use coarse::estimator::{estimate_mean, EstimatorConfig, ScheduleConstants};
use coarse::friction::{
    estimate_friction, generate_friction_data, ols, uniform_covariates, FrictionConfig,
    FrictionFunction,
};
use coarse::geometry::{ConvexSet, Partition};
use coarse::identifiability::{assess, Structural};
use coarse::rng::SeededRng;
use coarse::sampling::{sample_truncated_1d, SamplerPolicy};
use coarse::stream::{read_cells, write_cells, CoarseStream};
use coarse::varred::{variance_ratio, ScalarFamily};
use rayon::prelude::*;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Duration;

type Failure = String;

pub struct Common {
    seeds: Vec<u64>,
    freeze_clock: bool,
    policy: SamplerPolicy,
    out: PathBuf,
}

impl Common {
    fn wall_ms(&self, t: Duration) -> String {
        if self.freeze_clock {
            "0".into()
        } else {
            format!("{:.3}", t.as_secs_f64() * 1e3)
        }
    }
}

pub enum Job {
    Estimate(Common, EstimateJob),
    Friction(Common, FrictionJob),
    Identify(Common, IdentifyJob),
    Varred(Common, VarredJob),
    SamplerCheck(Common, SamplerCheckArgs),
    Record(Common, RecordJob),
}

pub struct EstimateJob {
    d: usize,
    partition: Option<Partition>,
    replay: Option<Vec<ConvexSet>>,
    truth: Option<Truth>,
    config: EstimatorConfig,
}

pub struct FrictionJob {
    d: usize,
    n: usize,
    friction: FrictionFunction,
    truth: Truth,
    c_bound: Option<f64>,
    config: FrictionConfig,
}

pub struct IdentifyJob {
    partition: Partition,
    truth: Truth,
    n_cells: usize,
}

pub struct VarredJob {
    families: Vec<ScalarFamily>,
    n: usize,
    cut: Option<f64>,
    interval: Option<(f64, f64)>,
}

pub struct RecordJob {
    partition: Partition,
    truth: Truth,
    n: usize,
}

/// Outputs of a finished run, written only once everything succeeded.
pub struct Outcome {
    files: Vec<(PathBuf, Output)>,
    line: String,
}

enum Output {
    Csv(Table),
    Cells(Vec<ConvexSet>),
}

impl Outcome {
    pub fn write(self, dir: &Path) -> Result<String, Failure> {
        std::fs::create_dir_all(dir)
            .map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        for (name, out) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
            }
            let res = match out {
                Output::Csv(t) => t.write(&path).map_err(|e| e.to_string()),
                Output::Cells(c) => File::create(&path)
                    .map_err(|e| e.to_string())
                    .and_then(|f| {
                        write_cells(std::io::BufWriter::new(f), c).map_err(|e| e.to_string())
                    }),
            };
            res.map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        }
        Ok(self.line)
    }
}

fn common(cli: &Cli, out: &Path) -> Result<Common, Failure> {
    let g = &cli.global;
    if g.repeats == 0 {
        return Err("--repeats must be at least 1".into());
    }
    if g.threads == Some(0) {
        return Err("--threads must be at least 1".into());
    }
    let defaults = SamplerPolicy::default();
    let policy = SamplerPolicy {
        hnr_burn_in: g.hnr_burn_in,
        hnr_thinning: g.hnr_thinning.unwrap_or(defaults.hnr_thinning),
        rejection_min_acceptance: g
            .min_acceptance
            .unwrap_or(defaults.rejection_min_acceptance),
        ..defaults
    };
    policy.validate().map_err(|e| e.to_string())?;
    if out.file_stem().is_none() {
        return Err(format!("--out '{}' has no file name", out.display()));
    }
    Ok(Common {
        seeds: (0..g.repeats as u64)
            .map(|k| g.seed.wrapping_add(k))
            .collect(),
        freeze_clock: g.freeze_clock,
        policy,
        out: out.to_path_buf(),
    })
}

/// Dimension agreed on by the flag, the partition and the truth.
fn resolve_dim(flag: Option<usize>, sources: &[(&str, Option<usize>)]) -> Result<usize, Failure> {
    let mut d = flag;
    for (what, v) in sources {
        match (d, v) {
            (Some(a), Some(b)) if a != *b => {
                return Err(format!("{what} has dimension {b}, expected {a}"))
            }
            (None, Some(b)) => d = Some(*b),
            _ => {}
        }
    }
    match d {
        Some(0) => Err("dimension must be positive".into()),
        Some(d) => Ok(d),
        None => Err("cannot infer the dimension; pass --d".into()),
    }
}

fn truth(args: &super::TruthArgs, ball: bool) -> Result<Option<Truth>, Failure> {
    Truth::resolve(
        args.mu_star.as_deref(),
        args.mu_star_file.as_deref(),
        args.mu_star_random,
        ball,
    )
}

fn partition_and_truth(
    spec: &str,
    d: Option<usize>,
    t: &super::TruthArgs,
) -> Result<(Partition, Truth, usize), Failure> {
    let spec: PartitionSpec = spec.parse()?;
    let truth = truth(t, false)?
        .ok_or("give the true mean with --mu-star, --mu-star-file or --mu-star-random")?;
    let d = resolve_dim(
        d,
        &[
            ("partition", spec.intrinsic_dim()?),
            ("true mean", truth.dim()),
        ],
    )?;
    Ok((spec.build(d)?, truth, d))
}

pub fn prepare(cli: &Cli) -> Result<Job, Failure> {
    Ok(match &cli.command {
        Sub::Estimate(a) => Job::Estimate(common(cli, &a.out)?, prepare_estimate(a)?),
        Sub::Friction(a) => Job::Friction(common(cli, &a.out)?, prepare_friction(a)?),
        Sub::Identify(a) => {
            let (partition, truth, _) = partition_and_truth(&a.partition, a.d, &a.truth)?;
            if a.n_cells < 10 {
                return Err("--n-cells must be at least 10".into());
            }
            Job::Identify(
                common(cli, &a.out)?,
                IdentifyJob {
                    partition,
                    truth,
                    n_cells: a.n_cells,
                },
            )
        }
        Sub::Varred(a) => Job::Varred(common(cli, &a.out)?, prepare_varred(a)?),
        Sub::SamplerCheck(a) => {
            if a.n < 2 || a.hnr_samples < 2 || a.bins < 2 {
                return Err(
                    "sampler-check needs --n, --hnr-samples and --bins of at least 2".into(),
                );
            }
            Job::SamplerCheck(common(cli, &a.out)?, a.clone())
        }
        Sub::Record(a) => Job::Record(common(cli, &a.out)?, prepare_record(cli, a)?),
    })
}

fn prepare_estimate(a: &EstimateArgs) -> Result<EstimateJob, Failure> {
    let truth = truth(&a.truth, false)?;
    let spec: Option<PartitionSpec> = a.partition.as_deref().map(str::parse).transpose()?;
    let center = a.center.as_deref().map(parse_vector).transpose()?;
    let mut sources = vec![("true mean", truth.as_ref().and_then(Truth::dim))];
    if let Some(s) = &spec {
        sources.push(("partition", s.intrinsic_dim()?));
    }
    sources.push(("center", center.as_ref().map(Vec::len)));
    let d = resolve_dim(a.d, &sources)?;
    let (partition, replay) = match (&spec, &a.replay) {
        (Some(s), None) => {
            if truth.is_none() {
                return Err("simulated data needs a true mean (--mu-star, --mu-star-file or --mu-star-random)".into());
            }
            (Some(s.build(d)?), None)
        }
        (None, Some(path)) => {
            let f = File::open(path).map_err(|e| format!("cannot open {}: {e}", path.display()))?;
            let cells =
                read_cells(BufReader::new(f)).map_err(|e| format!("{}: {e}", path.display()))?;
            if let Some(c) = cells.iter().find(|c| c.dim() != d) {
                return Err(format!(
                    "{}: cell of dimension {} in a {d}-dimensional run",
                    path.display(),
                    c.dim()
                ));
            }
            (None, Some(cells))
        }
        _ => return Err("give exactly one of --partition and --replay".into()),
    };
    let mut config = EstimatorConfig::new(a.eps, a.delta, a.alpha, a.warm_radius);
    config.center = center;
    config.budget = a.budget_n;
    config.boost_repeats = a.boost_repeats;
    config.two_stage = !a.single_stage;
    config.constants = match a.schedule {
        Preset::Practical => ScheduleConstants::practical(),
        Preset::WorstCase => ScheduleConstants::worst_case(),
    };
    if let Some(s) = a.safety {
        config.constants.safety = s;
    }
    if let Some(m) = a.max_samples {
        config.max_samples = m;
    }
    config.validate(d).map_err(|e| e.to_string())?;
    Ok(EstimateJob {
        d,
        partition,
        replay,
        truth,
        config,
    })
}

fn prepare_friction(a: &FrictionArgs) -> Result<FrictionJob, Failure> {
    let friction = a.friction.parse::<FrictionSpec>()?.build()?;
    let truth = match (&a.w_star_file, a.w_star_random) {
        (Some(f), None) => Truth::resolve(None, Some(f), None, true)?.expect("file given"),
        (None, Some(c)) => Truth::resolve(None, None, Some(c), true)?.expect("radius given"),
        (None, None) => Truth::Ball(1.0),
        _ => return Err("give at most one of --w-star-file and --w-star-random".into()),
    };
    let d = resolve_dim(Some(a.d), &[("w*", truth.dim())])?;
    if a.n < 2 {
        return Err("--n must be at least 2".into());
    }
    if let Some(c) = a.c_bound {
        if !(c > 0.0 && c.is_finite()) {
            return Err(format!("--c-bound must be positive, got {c}"));
        }
    }
    let mut config = FrictionConfig::new(a.eps, a.alpha);
    config.boost_splits = a.boost_splits;
    if let Some(s) = a.safety {
        config.constants.safety = s;
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(FrictionJob {
        d,
        n: a.n,
        friction,
        truth,
        c_bound: a.c_bound,
        config,
    })
}

fn prepare_varred(a: &VarredArgs) -> Result<VarredJob, Failure> {
    let families = a
        .families
        .split(',')
        .map(|s| ScalarFamily::by_name(s.trim()).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    if a.n < 2 {
        return Err("--n must be at least 2".into());
    }
    let interval = match &a.interval {
        Some(s) => match parse_vector(s)?.as_slice() {
            [lo, hi] if lo < hi => Some((*lo, *hi)),
            _ => return Err(format!("--interval '{s}' must be lo,hi with lo < hi")),
        },
        None => None,
    };
    if a.cut.is_some_and(|c| !c.is_finite()) {
        return Err("--cut must be finite".into());
    }
    Ok(VarredJob {
        families,
        n: a.n,
        cut: a.cut,
        interval,
    })
}

fn prepare_record(cli: &Cli, a: &RecordArgs) -> Result<RecordJob, Failure> {
    if cli.global.repeats != 1 {
        return Err("record writes one file; --repeats must be 1".into());
    }
    let (partition, truth, _) = partition_and_truth(&a.partition, a.d, &a.truth)?;
    Ok(RecordJob {
        partition,
        truth,
        n: a.n,
    })
}

pub fn execute(job: Job) -> Result<Outcome, Failure> {
    match job {
        Job::Estimate(c, j) => run_estimate(&c, &j),
        Job::Friction(c, j) => run_friction(&c, &j),
        Job::Identify(c, j) => run_identify(&c, &j),
        Job::Varred(c, j) => run_varred(&c, &j),
        Job::SamplerCheck(c, a) => run_sampler_check(&c, &a),
        Job::Record(c, j) => run_record(&c, &j),
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn rep_name(out: &Path, k: usize) -> PathBuf {
    let stem = out.file_stem().expect("checked").to_string_lossy();
    out.with_file_name(format!("{stem}_rep{k}.csv"))
}

fn summary_name(out: &Path) -> PathBuf {
    let stem = out.file_stem().expect("checked").to_string_lossy();
    out.with_file_name(format!("{stem}_summary.csv"))
}

/// Runs `f` for every repeat seed in parallel, keeping repeat order.
fn per_repeat<T: Send>(
    c: &Common,
    f: impl Fn(u64) -> coarse::Result<T> + Sync,
) -> Result<Vec<T>, Failure> {
    c.seeds
        .par_iter()
        .map(|&s| f(s).map_err(|e| format!("seed {s}: {e}")))
        .collect()
}

fn finish(
    c: &Common,
    tables: Vec<Table>,
    metrics: Vec<(String, Vec<f64>)>,
    line: String,
) -> Outcome {
    let mut files: Vec<(PathBuf, Output)> = tables
        .into_iter()
        .enumerate()
        .map(|(k, t)| (rep_name(&c.out, k), Output::Csv(t)))
        .collect();
    let summary = summary_table(&metrics);
    let median_line: Vec<String> = summary
        .rows
        .iter()
        .map(|r| format!("{}={}", r[0], r[2]))
        .collect();
    files.push((summary_name(&c.out), Output::Csv(summary)));
    Outcome {
        files,
        line: format!("{line} median {}", median_line.join(" ")),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn run_estimate(c: &Common, j: &EstimateJob) -> Result<Outcome, Failure> {
    let runs = per_repeat(c, |seed| {
        let root = SeededRng::new(seed);
        let mu = j.truth.as_ref().map(|t| t.draw(j.d, &mut root.fork(2)));
        let mut stream = match (&j.partition, &j.replay) {
            (Some(p), _) => CoarseStream::synthetic(
                p.clone(),
                mu.clone().expect("checked"),
                root.fork(0).seed(),
            )?,
            (None, Some(cells)) => CoarseStream::replay(j.d, cells.clone())?,
            (None, None) => unreachable!("checked in prepare"),
        };
        let report = estimate_mean(&mut stream, &j.config, &root.fork(1))?;
        Ok((seed, mu, report))
    })?;
    let header = [
        "seed",
        "n_samples",
        "err_l2",
        "wall_ms",
        "stage",
        "target_eps",
        "ball_radius",
        "r",
        "tau",
        "steps",
        "last_steps",
        "gamma0",
        "c0",
        "stage_samples",
        "confident",
        "mu_hat",
        "mu_star",
    ];
    let mut tables = Vec::new();
    let (mut errs, mut ns, mut walls) = (Vec::new(), Vec::new(), Vec::new());
    let mut successes = 0;
    for (seed, mu, rep) in &runs {
        for w in &rep.warnings {
            eprintln!("warning: seed {seed}: {w}");
        }
        let err = mu.as_ref().map(|m| dist(&rep.mu_hat, m));
        successes += usize::from(err.is_some_and(|e| e <= j.config.eps));
        let wall = c.wall_ms(rep.wall_time);
        let mut t = Table::new(&header);
        for (si, s) in rep.stages.iter().enumerate() {
            t.push(vec![
                seed.to_string(),
                rep.samples_consumed.to_string(),
                opt(err),
                wall.clone(),
                (si + 1).to_string(),
                num(s.target_eps),
                num(s.radius),
                num(rep.r),
                s.schedule.tau.to_string(),
                s.schedule.steps.to_string(),
                s.schedule.last_steps.to_string(),
                num(s.schedule.gamma0),
                num(s.schedule.c0),
                s.samples.to_string(),
                s.confident.to_string(),
                vector(&rep.mu_hat),
                mu.as_deref().map(vector).unwrap_or_default(),
            ]);
        }
        tables.push(t);
        errs.push(err.unwrap_or(f64::NAN));
        ns.push(rep.samples_consumed as f64);
        walls.push(wall.parse().unwrap_or(f64::NAN));
    }
    let line = format!(
        "estimate: {} repeats, {successes} within eps = {};",
        runs.len(),
        j.config.eps
    );
    let metrics = vec![
        ("err_l2".into(), errs),
        ("n_samples".into(), ns),
        ("wall_ms".into(), walls),
    ];
    Ok(finish(c, tables, metrics, line))
}

fn run_friction(c: &Common, j: &FrictionJob) -> Result<Outcome, Failure> {
    let runs = per_repeat(c, |seed| {
        let root = SeededRng::new(seed);
        let mut data_rng = root.fork(0);
        let w_star = j.truth.draw(j.d, &mut data_rng);
        let c_bound = j.c_bound.unwrap_or_else(|| match j.truth {
            Truth::Ball(r) | Truth::Sphere(r) if r > 0.0 => r,
            _ => {
                let n = w_star.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n > 0.0 {
                    n
                } else {
                    1.0
                }
            }
        });
        let x = uniform_covariates(j.n, j.d, &mut data_rng);
        let data = generate_friction_data(&w_star, x, j.friction.clone(), c_bound, &mut data_rng)?;
        let report = estimate_friction(&data.instance, &j.config, &root.fork(1))?;
        let baseline = match j.friction {
            FrictionFunction::Identity => Some(dist(
                &ols(data.instance.covariates(), data.instance.z(), j.d)?,
                &w_star,
            )),
            _ => None,
        };
        Ok((seed, w_star, report, baseline))
    })?;
    let header = [
        "seed",
        "n",
        "err_l2",
        "ols_baseline_err",
        "wall_ms",
        "d",
        "samples_consumed",
        "tau",
        "steps",
        "last_steps",
        "r",
        "b",
        "w_hat",
        "w_star",
    ];
    let mut tables = Vec::new();
    let (mut errs, mut base) = (Vec::new(), Vec::new());
    let mut successes = 0;
    for (seed, w_star, rep, baseline) in &runs {
        for w in &rep.warnings {
            eprintln!("warning: seed {seed}: {w}");
        }
        let err = dist(&rep.w_hat, w_star);
        successes += usize::from(err <= j.config.eps);
        let mut t = Table::new(&header);
        t.push(vec![
            seed.to_string(),
            j.n.to_string(),
            num(err),
            opt(*baseline),
            c.wall_ms(rep.wall_time),
            j.d.to_string(),
            rep.samples_consumed.to_string(),
            rep.schedule.tau.to_string(),
            rep.schedule.steps.to_string(),
            rep.schedule.last_steps.to_string(),
            num(rep.r),
            num(rep.b),
            vector(&rep.w_hat),
            vector(w_star),
        ]);
        tables.push(t);
        errs.push(err);
        base.push(baseline.unwrap_or(f64::NAN));
    }
    let mut metrics = vec![("err_l2".to_string(), errs)];
    if matches!(j.friction, FrictionFunction::Identity) {
        metrics.push(("ols_baseline_err".into(), base));
    }
    let line = format!(
        "friction: {} repeats, {successes} within eps = {};",
        runs.len(),
        j.config.eps
    );
    Ok(finish(c, tables, metrics, line))
}

fn structural_label(s: &Structural) -> (&'static str, String) {
    match s {
        Structural::Identifiable => ("identifiable", String::new()),
        Structural::NonIdentifiable(v) => ("non-identifiable", vector(v)),
        Structural::Inconclusive => ("inconclusive", String::new()),
    }
}

fn run_identify(c: &Common, j: &IdentifyJob) -> Result<Outcome, Failure> {
    let d = j.partition.dim();
    let runs = per_repeat(c, |seed| {
        let root = SeededRng::new(seed);
        let mu = j.truth.draw(d, &mut root.fork(2));
        let v = assess(&j.partition, &mu, j.n_cells, &mut root.fork(1), &c.policy)?;
        Ok((seed, v))
    })?;
    let header = [
        "seed",
        "structural",
        "slab_direction",
        "cells_inspected",
        "distinct_cells",
        "direction",
        "curvature",
        "se",
        "flat",
    ];
    let mut tables = Vec::new();
    let mut metrics: Vec<(String, Vec<f64>)> = Vec::new();
    let mut labels = Vec::new();
    for (seed, v) in &runs {
        let (label, dir) = structural_label(&v.structural);
        labels.push(label);
        let mut t = Table::new(&header);
        for (i, s) in v.flatness_scores.iter().enumerate() {
            t.push(vec![
                seed.to_string(),
                label.into(),
                dir.clone(),
                v.cells_inspected.to_string(),
                v.distinct_cells.to_string(),
                vector(&s.direction),
                num(s.curvature.estimate),
                num(s.curvature.se),
                s.is_flat().to_string(),
            ]);
            match metrics.get_mut(i) {
                Some((_, vals)) => vals.push(s.curvature.estimate),
                None => metrics.push((format!("curvature_{i}"), vec![s.curvature.estimate])),
            }
        }
        tables.push(t);
    }
    let line = format!(
        "identify: {} repeats, verdicts {};",
        runs.len(),
        labels.join(",")
    );
    Ok(finish(c, tables, metrics, line))
}

/// Half-line and interval truncations for a family.
fn truncations(f: &ScalarFamily, j: &VarredJob) -> [(&'static str, f64, f64); 2] {
    let (m, v) = f.moments();
    let cut = j.cut.unwrap_or(m);
    let (lo, hi) = j.interval.unwrap_or((m - v.sqrt(), m + v.sqrt()));
    [("half-line", cut, f64::INFINITY), ("interval", lo, hi)]
}

fn params_note(f: &ScalarFamily) -> &'static str {
    match f {
        ScalarFamily::Beta { .. } | ScalarFamily::Quartic { .. } => "implementation default",
        _ => "standard",
    }
}

fn run_varred(c: &Common, j: &VarredJob) -> Result<Outcome, Failure> {
    let cases: Vec<(ScalarFamily, &'static str, f64, f64)> = j
        .families
        .iter()
        .flat_map(|f| truncations(f, j).map(|(k, lo, hi)| (*f, k, lo, hi)))
        .collect();
    let runs = per_repeat(c, |seed| {
        let root = SeededRng::new(seed);
        cases
            .par_iter()
            .enumerate()
            .map(|(i, (f, _, lo, hi))| variance_ratio(f, *lo, *hi, j.n, &mut root.fork(i as u64)))
            .collect::<coarse::Result<Vec<_>>>()
            .map(|v| (seed, v))
    })?;
    let header = [
        "seed",
        "family",
        "params",
        "params_note",
        "truncation",
        "lo",
        "hi",
        "var_orig",
        "var_trunc",
        "r",
        "se",
    ];
    let mut tables = Vec::new();
    let mut metrics: Vec<(String, Vec<f64>)> = cases
        .iter()
        .map(|(f, k, _, _)| (format!("r_{}_{k}", f.name()), Vec::new()))
        .collect();
    for (seed, ratios) in &runs {
        let mut t = Table::new(&header);
        for (i, ((f, k, lo, hi), v)) in cases.iter().zip(ratios).enumerate() {
            t.push(vec![
                seed.to_string(),
                f.name().into(),
                f.to_string(),
                params_note(f).into(),
                (*k).into(),
                num(*lo),
                num(*hi),
                num(v.var_orig),
                num(v.var_trunc),
                num(v.r),
                num(v.se),
            ]);
            metrics[i].1.push(v.r);
        }
        tables.push(t);
    }
    let line = format!("varred: {} repeats, {} cases;", runs.len(), cases.len());
    Ok(finish(c, tables, metrics, line))
}

/// Mean of 𝒩(0, 1) on [0, ∞), `√(2/π)`.
const HALF_NORMAL_MEAN: f64 = 0.797_884_560_802_865_4;

fn run_sampler_check(c: &Common, a: &SamplerCheckArgs) -> Result<Outcome, Failure> {
    let runs = per_repeat(c, |seed| {
        let root = SeededRng::new(seed);
        let mut rng = root.fork(0);
        let xs: Vec<f64> = (0..a.n)
            .map(|_| sample_truncated_1d(0.0, 0.0, f64::INFINITY, &mut rng))
            .collect::<coarse::Result<_>>()?;
        let (mean, _) = mean_and_se(&xs);
        let chi = hit_and_run_vs_exact_1d(
            0.0,
            0.0,
            2.0,
            a.hnr_samples,
            a.bins,
            &c.policy,
            &mut root.fork(1),
        )?;
        Ok((seed, mean, chi))
    })?;
    let header = [
        "seed",
        "check",
        "n",
        "value",
        "reference",
        "tolerance",
        "pass",
    ];
    let mut tables = Vec::new();
    let (mut means, mut ps) = (Vec::new(), Vec::new());
    let mut passed = 0;
    for (seed, mean, chi) in &runs {
        let mut t = Table::new(&header);
        let ok_mean = (mean - HALF_NORMAL_MEAN).abs() <= 0.005;
        let ok_chi = chi.p_value > 0.01;
        passed += usize::from(ok_mean && ok_chi);
        t.push(vec![
            seed.to_string(),
            "half_line_mean".into(),
            a.n.to_string(),
            num(*mean),
            num(HALF_NORMAL_MEAN),
            "0.005".into(),
            ok_mean.to_string(),
        ]);
        t.push(vec![
            seed.to_string(),
            "hit_and_run_chi_square_p".into(),
            a.hnr_samples.to_string(),
            num(chi.p_value),
            "0.01".into(),
            String::new(),
            ok_chi.to_string(),
        ]);
        tables.push(t);
        means.push(*mean);
        ps.push(chi.p_value);
    }
    let line = format!("sampler-check: {passed} of {} repeats passed;", runs.len());
    let metrics = vec![
        ("half_line_mean".into(), means),
        ("chi_square_p".into(), ps),
    ];
    Ok(finish(c, tables, metrics, line))
}

fn run_record(c: &Common, j: &RecordJob) -> Result<Outcome, Failure> {
    let seed = c.seeds[0];
    let root = SeededRng::new(seed);
    let d = j.partition.dim();
    let mu = j.truth.draw(d, &mut root.fork(2));
    let cells = CoarseStream::synthetic(j.partition.clone(), mu, root.fork(0).seed())
        .and_then(|mut s| s.collect_cells(j.n))
        .map_err(|e| e.to_string())?;
    Ok(Outcome {
        files: vec![(c.out.clone(), Output::Cells(cells))],
        line: format!("record: {} cells written to {}", j.n, c.out.display()),
    })
}
