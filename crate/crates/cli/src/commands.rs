//! Command bodies. Each returns its exit code and output so the binary
//! stays a thin wrapper and the commands can be tested in-process.

use std::fmt::Write;
use std::path::Path;
use std::time::Instant;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use packpair_core::metrics::{heatmap_keypoint_error, mse_loss, ned_loss, HeatmapStack, LossWeights};
use packpair_core::model::{catalog, catalog_index, CATALOG_LEN};
use packpair_core::planner::plan_packing;
use packpair_core::simulator::{random_scene, run_plan};
use packpair_core::*;
use std::result::Result;

use crate::report::{render_plan, sig6, BatchReport, RunReport};
use crate::scenario;

pub const EXIT_OK: i32 = 0;
pub const EXIT_TASK_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNPLANNABLE: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CmdOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CmdOutput {
    fn ok(stdout: String) -> Self {
        Self { code: EXIT_OK, stdout, stderr: String::new() }
    }

    fn fail(code: i32, stderr: String) -> Self {
        Self { code, stdout: String::new(), stderr }
    }
}

fn load(path: &Path) -> Result<scenario::Scenario, CmdOutput> {
    scenario::load(path).map_err(|e| CmdOutput::fail(EXIT_INPUT, format!("{}: {e}\n", path.display())))
}

fn unplannable(e: Error) -> CmdOutput {
    CmdOutput::fail(EXIT_UNPLANNABLE, format!("unplannable: {e}\n"))
}

pub fn plan(path: &Path, mode: Option<Mode>) -> CmdOutput {
    let s = match load(path) {
        Ok(s) => s,
        Err(o) => return o,
    };
    match plan_packing(&s.scene, mode.unwrap_or(s.mode)) {
        Ok(p) => CmdOutput::ok(render_plan(&p)),
        Err(e) => unplannable(e),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimulateOptions {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub trace: bool,
    pub replan: bool,
}

pub fn simulate(path: &Path, opts: SimulateOptions) -> CmdOutput {
    let mut s = match load(path) {
        Ok(s) => s,
        Err(o) => return o,
    };
    if let Some(seed) = opts.seed {
        s.failure.seed = seed;
    }
    let started = Instant::now();
    let plan = match plan_packing(&s.scene, opts.mode.unwrap_or(s.mode)) {
        Ok(p) => p,
        Err(e) => return unplannable(e),
    };
    let trace = run_plan(&s.scene, &plan, &s.failure, opts.replan);
    let report = RunReport::new(&plan, &trace, started.elapsed());
    info!("simulated in {:.3} ms", report.wall_time.as_secs_f64() * 1e3);
    for step in &trace.steps {
        debug!("step {} pre [{}] post [{}]", step.index, step.pre, step.post);
    }
    let mut out = String::new();
    if opts.trace {
        out.push_str(&trace.to_string());
    }
    out.push_str(&report.render());
    if trace.succeeded() {
        return CmdOutput { code: EXIT_OK, stdout: out, stderr: String::new() };
    }
    if let Some(step) = trace.first_failure() {
        let shoe = step.action.shoe().map_or("-".to_string(), |id| id.to_string());
        let _ = writeln!(
            out,
            "failed_step={} action={} shoe={} outcome={}",
            step.index,
            step.action.kind(),
            shoe,
            step.outcome
        );
    }
    if let (false, Some(h)) = (opts.trace, &trace.halted) {
        let _ = writeln!(out, "halted: {h}");
    }
    CmdOutput { code: EXIT_TASK_FAILURE, stdout: out, stderr: String::new() }
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub count: usize,
    pub seed: u64,
    pub mode: Mode,
    pub replan: bool,
    pub shoe: Option<String>,
    pub combination: Option<PairCombination>,
    /// Failure probabilities; each scenario gets its own seed.
    pub failure: FailureModel,
}

/// Draws catalog entry, combination and scene seed for every job up front,
/// so results do not depend on how the pool schedules them.
fn batch_jobs(opts: &BatchOptions) -> Result<Vec<(usize, PairCombination, u64)>, String> {
    let shoe = match &opts.shoe {
        None => None,
        Some(name) => Some(catalog_index(name).ok_or_else(|| format!("unknown catalog shoe '{name}'"))?),
    };
    let cat = catalog();
    if let (Some(i), Some(c)) = (shoe, opts.combination) {
        if c.has_bottom() && !cat[i].shoe.has_bottom_state {
            return Err(format!("shoe '{}' has no bottom state, combination {c} is excluded", cat[i].shoe.name));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut jobs = Vec::with_capacity(opts.count);
    while jobs.len() < opts.count {
        let i = shoe.unwrap_or_else(|| rng.random_range(0..CATALOG_LEN));
        let c = opts.combination.unwrap_or_else(|| PairCombination::ALL[rng.random_range(0..7)]);
        if c.has_bottom() && !cat[i].shoe.has_bottom_state {
            debug!("resampling: {} excludes {c}", cat[i].shoe.name);
            continue;
        }
        jobs.push((i, c, rng.random::<u64>()));
    }
    Ok(jobs)
}

pub fn batch(opts: &BatchOptions) -> CmdOutput {
    if opts.count == 0 {
        return CmdOutput::fail(EXIT_INPUT, "--count must be at least 1\n".into());
    }
    if let Err(e) = opts.failure.validate() {
        return CmdOutput::fail(EXIT_INPUT, format!("{e}\n"));
    }
    let jobs = match batch_jobs(opts) {
        Ok(j) => j,
        Err(e) => return CmdOutput::fail(EXIT_INPUT, format!("{e}\n")),
    };
    let started = Instant::now();
    let results: Vec<Option<RunReport>> = jobs
        .par_iter()
        .map(|&(i, c, seed)| {
            let t = Instant::now();
            let scene = random_scene(i, c, seed).ok()?;
            let plan = plan_packing(&scene, opts.mode).ok()?;
            let f = FailureModel { seed, ..opts.failure };
            let trace = run_plan(&scene, &plan, &f, opts.replan);
            Some(RunReport::new(&plan, &trace, t.elapsed()))
        })
        .collect();
    let mut report = BatchReport::default();
    for r in &results {
        match r {
            Some(r) => report.add(r),
            None => report.add_unplannable(),
        }
    }
    info!(
        "batch of {} in {:.3} s wall, {:.3} s summed over scenarios",
        opts.count,
        started.elapsed().as_secs_f64(),
        report.wall_time.as_secs_f64()
    );
    CmdOutput::ok(report.render(opts.mode, opts.seed))
}

fn read_stack(path: &Path) -> Result<HeatmapStack, CmdOutput> {
    match HeatmapStack::read(path) {
        Ok(Ok(s)) => Ok(s),
        Ok(Err(e)) => Err(CmdOutput::fail(EXIT_INPUT, format!("{}: {e}\n", path.display()))),
        Err(e) => Err(CmdOutput::fail(EXIT_INPUT, format!("{}: {e}\n", path.display()))),
    }
}

pub fn eval_keypoints(truth: &Path, pred: &Path, alpha: f64) -> CmdOutput {
    let w = match LossWeights::new(alpha) {
        Ok(w) => w,
        Err(e) => return CmdOutput::fail(EXIT_INPUT, format!("--alpha: {e}\n")),
    };
    let (t, p) = match (read_stack(truth), read_stack(pred)) {
        (Ok(t), Ok(p)) => (t, p),
        (Err(o), _) | (_, Err(o)) => return o,
    };
    let values = mse_loss(&t, &p).and_then(|mse| Ok((mse, ned_loss(&t, &p)?)));
    let (mse, ned) = match values {
        Ok(v) => v,
        Err(e) => return CmdOutput::fail(EXIT_INPUT, format!("{e}\n")),
    };
    let all = packpair_core::metrics::combine(mse, ned, w);
    let kp = if t.channels() == 5 {
        match heatmap_keypoint_error(&t, &p) {
            Ok(v) => sig6(v),
            Err(e) => return CmdOutput::fail(EXIT_INPUT, format!("{e}\n")),
        }
    } else {
        "n/a".to_string()
    };
    CmdOutput::ok(format!(
        "L_mse={}\nL_ned={}\nL_all={}\nalpha={}\nkeypoint_error={}\n",
        sig6(mse),
        sig6(ned),
        sig6(all),
        sig6(alpha),
        kp
    ))
}
