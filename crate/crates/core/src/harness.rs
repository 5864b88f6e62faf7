//! Experiment orchestration: scenarios in, CSV tables out.
//!
//! Trial `i` of a scenario draws its seed from `(base_seed, scenario name,
//! i)` only, so every sizing rule sees the same layout and the same travel
//! noise; only the spare count differs between methods.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{config, Error, Result};
use crate::geometry::{
    build_routes, generate_sites, partition_sites, Route, SiteLayout, TravelNoise,
};
use crate::rng::{derive_key, Fnv64};
use crate::scenario::{
    check_feasibility, derive_mission, DerivedMission, Feasibility, ScenarioConfig,
};
use crate::simengine::{run_trial, EventRecord, RunOptions, TrialInput, TrialResult};
use crate::sizing::{self, size_fleet, FleetPlan, OccupancyTrace, SizingRule};
use crate::stats::{aggregate_summaries, AggregateStats, TrialSummary, DEFAULT_QUANTILE};

pub const SUMMARY_COLUMNS: [&str; 12] = [
    "scenario",
    "method",
    "m",
    "r",
    "k",
    "n_trials",
    "success_rate",
    "wilson_lb",
    "mean_handovers",
    "burst_concentration",
    "p90_concurrent",
    "p90_window_demand",
];

pub const TRIAL_COLUMNS: [&str; 16] = [
    "scenario",
    "method",
    "trial",
    "seed",
    "layout_hash",
    "k",
    "success",
    "handovers",
    "requests",
    "exhaustions",
    "exhaustions_in_top_decile",
    "sites_scanned",
    "duration",
    "max_window_demand",
    "min_battery",
    "concurrency_hist",
];

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub cfg: ScenarioConfig,
    pub mission: DerivedMission,
}

impl Scenario {
    pub fn new(name: impl Into<String>, cfg: ScenarioConfig) -> Result<Self> {
        let mission = derive_mission(&cfg)?;
        let scenario = Self {
            name: name.into(),
            cfg,
            mission,
        };
        scenario.check_area_feasible()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg = ScenarioConfig::from_toml_file(path)?;
        let name = cfg.name.clone().unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into())
        });
        Self::new(name, cfg)
    }

    /// Sites can land anywhere in the area, and the farthest point of a
    /// rectangle from the base is a corner, so checking corners covers every
    /// possible layout.
    pub fn check_area_feasible(&self) -> Result<()> {
        match check_feasibility(&self.cfg, &self.cfg.corners())? {
            Feasibility::Feasible => Ok(()),
            Feasibility::Infeasible { offending } => {
                let corners = self.cfg.corners();
                Err(Error::Infeasible {
                    offending: offending
                        .into_iter()
                        .map(|i| format!("area corner ({}, {})", corners[i].x, corners[i].y))
                        .collect(),
                })
            }
        }
    }

    pub fn generation_centers(&self) -> usize {
        self.cfg
            .cluster_centers
            .unwrap_or_else(|| (self.mission.m as usize).max(2))
    }

    pub fn config_hash(&self) -> u64 {
        let mut h = Fnv64::default();
        h.write(self.cfg.to_toml_string().as_bytes());
        h.finish()
    }

    pub fn with_wind_cv(&self, cv: f64) -> Result<Self> {
        let cfg = ScenarioConfig {
            wind_cv: cv,
            ..self.cfg.clone()
        };
        cfg.validate()?;
        Ok(Self {
            name: self.name.clone(),
            cfg,
            mission: self.mission,
        })
    }
}

pub fn trial_seed(base_seed: u64, scenario: &str, trial: u64) -> u64 {
    let mut h = Fnv64::default();
    h.write(scenario.as_bytes());
    derive_key(base_seed, &[h.finish(), trial])
}

/// Layout, routes, and noise for one trial; shared by every method.
#[derive(Debug, Clone)]
pub struct PreparedTrial {
    pub seed: u64,
    pub layout: SiteLayout,
    pub routes: Vec<Route>,
    pub noise: TravelNoise,
    pub layout_hash: u64,
}

impl PreparedTrial {
    pub fn input<'a>(&'a self, scenario: &'a Scenario) -> TrialInput<'a> {
        TrialInput {
            cfg: &scenario.cfg,
            mission: scenario.mission,
            layout: &self.layout,
            routes: &self.routes,
            noise: self.noise,
            seed: self.seed,
        }
    }
}

pub fn prepare_trial(scenario: &Scenario, seed: u64) -> Result<PreparedTrial> {
    let m = scenario.mission.m as usize;
    let raw = generate_sites(&scenario.cfg, scenario.generation_centers(), seed)?;
    let layout = partition_sites(&raw, m, seed)?;
    if let Feasibility::Infeasible { offending } = check_feasibility(&scenario.cfg, &layout.sites)?
    {
        return Err(Error::Infeasible {
            offending: offending.iter().map(|i| format!("site {i}")).collect(),
        });
    }
    let routes = build_routes(&layout, m, scenario.cfg.base_position)?;
    let noise = TravelNoise::draw(&scenario.cfg, seed);
    let mut h = Fnv64::default();
    layout.fingerprint(&mut h);
    for r in &routes {
        for &s in &r.ordered_sites {
            h.write_u64(s as u64);
        }
    }
    noise.fingerprint(&mut h);
    Ok(PreparedTrial {
        seed,
        layout,
        routes,
        noise,
        layout_hash: h.finish(),
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub scenario_files: Vec<PathBuf>,
    pub methods: Vec<SizingRule>,
    pub n_trials: u64,
    pub base_seed: u64,
    pub cv_sweep: Option<Vec<f64>>,
    pub epsilon: f64,
    pub output_dir: PathBuf,
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    pub dump_sites: bool,
    pub event_log: bool,
}

impl ExperimentSpec {
    pub fn new(scenario_files: Vec<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenario_files,
            methods: SizingRule::ALL.to_vec(),
            n_trials: 1000,
            base_seed: 0,
            cv_sweep: None,
            epsilon: sizing::DEFAULT_EPSILON,
            output_dir: output_dir.into(),
            jobs: None,
            dump_sites: false,
            event_log: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(config("n_trials must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(config("at least one sizing method is required"));
        }
        if self.scenario_files.is_empty() {
            return Err(config("at least one scenario file is required"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(config(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.jobs == Some(0) {
            return Err(config("jobs must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub scenario: String,
    pub method: SizingRule,
    pub trial: u64,
    pub seed: u64,
    pub layout_hash: u64,
    pub k: u32,
    pub requests: usize,
    pub sites_scanned: usize,
    pub duration: f64,
    pub min_battery: f64,
    pub summary: TrialSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: SizingRule,
    pub plan: FleetPlan,
    pub stats: AggregateStats,
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub trials: Vec<TrialRow>,
    pub summaries: Vec<SummaryRow>,
}

impl RunReport {
    pub fn summary(&self, scenario: &str, method: SizingRule) -> Option<&SummaryRow> {
        self.summaries
            .iter()
            .find(|s| s.scenario == scenario && s.method == method)
    }
}

/// Output of one (trial, method) simulation, kept only as long as needed.
struct Outcome {
    row: TrialRow,
    events: Option<Vec<EventRecord>>,
}

fn simulate_trial(
    scenario: &Scenario,
    plans: &[FleetPlan],
    seed: u64,
    trial: u64,
    opts: &RunOptions,
) -> Result<(PreparedTrial, Vec<Outcome>)> {
    let prepared = prepare_trial(scenario, seed)?;
    let input = prepared.input(scenario);
    let mut outcomes = Vec::with_capacity(plans.len());
    for plan in plans {
        let result: TrialResult = run_trial(&input, plan, opts)?;
        outcomes.push(Outcome {
            row: TrialRow {
                scenario: scenario.name.clone(),
                method: plan.rule,
                trial,
                seed,
                layout_hash: prepared.layout_hash,
                k: plan.k,
                requests: result.request_times.len(),
                sites_scanned: result.sites_scanned,
                duration: result.duration,
                min_battery: result.min_battery,
                summary: TrialSummary::from_result(&result),
            },
            events: result.events,
        });
    }
    Ok((prepared, outcomes))
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    builder
        .build()
        .map_err(|e| Error::Invariant(format!("cannot start worker pool: {e}")))
}

/// Side artefacts for trial 0 of each scenario.
#[derive(Debug, Default)]
struct Artefacts {
    sites: Vec<(String, SiteLayout)>,
    events: Vec<(String, SizingRule, Vec<EventRecord>)>,
}

fn run_scenarios(
    scenarios: &[Scenario],
    spec: &ExperimentSpec,
    pool: &rayon::ThreadPool,
) -> Result<(RunReport, Artefacts)> {
    let opts = RunOptions {
        event_log: false,
        audit: true,
    };
    let mut report = RunReport::default();
    let mut artefacts = Artefacts::default();
    for scenario in scenarios {
        let plans = spec
            .methods
            .iter()
            .map(|&rule| size_fleet(rule, scenario.mission.m, scenario.mission.r, spec.epsilon))
            .collect::<Result<Vec<_>>>()?;

        let per_trial: Vec<Vec<Outcome>> = pool.install(|| {
            (0..spec.n_trials)
                .into_par_iter()
                .map(|i| {
                    let seed = trial_seed(spec.base_seed, &scenario.name, i);
                    let trial_opts = RunOptions {
                        event_log: spec.event_log && i == 0,
                        ..opts
                    };
                    simulate_trial(scenario, &plans, seed, i, &trial_opts).map(|(_, o)| o)
                })
                .collect::<Result<Vec<_>>>()
        })?;

        if spec.dump_sites {
            let prepared = prepare_trial(scenario, trial_seed(spec.base_seed, &scenario.name, 0))?;
            artefacts
                .sites
                .push((scenario.name.clone(), prepared.layout));
        }

        let mut by_method: Vec<Vec<TrialRow>> = vec![Vec::new(); plans.len()];
        for outcomes in per_trial {
            for (j, outcome) in outcomes.into_iter().enumerate() {
                if let Some(events) = outcome.events {
                    artefacts
                        .events
                        .push((scenario.name.clone(), plans[j].rule, events));
                }
                by_method[j].push(outcome.row);
            }
        }
        for (plan, rows) in plans.iter().zip(by_method) {
            let summaries: Vec<TrialSummary> = rows.iter().map(|r| r.summary.clone()).collect();
            report.summaries.push(SummaryRow {
                scenario: scenario.name.clone(),
                method: plan.rule,
                plan: *plan,
                stats: aggregate_summaries(&summaries, DEFAULT_QUANTILE)?,
            });
            report.trials.extend(rows);
        }
    }
    Ok((report, artefacts))
}

pub fn load_scenarios(files: &[PathBuf]) -> Result<Vec<Scenario>> {
    files.iter().map(|p| Scenario::load(p)).collect()
}

/// Runs the experiment without touching the filesystem beyond reading
/// scenario files.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunReport> {
    spec.validate()?;
    let scenarios = load_scenarios(&spec.scenario_files)?;
    let pool = thread_pool(spec.jobs)?;
    Ok(run_scenarios(&scenarios, spec, &pool)?.0)
}

/// Same as [`run_experiment`] but for scenarios already in memory.
pub fn run_scenarios_in_memory(scenarios: &[Scenario], spec: &ExperimentSpec) -> Result<RunReport> {
    if spec.n_trials == 0 || spec.methods.is_empty() {
        return Err(config("need at least one trial and one method"));
    }
    let pool = thread_pool(spec.jobs)?;
    Ok(run_scenarios(scenarios, spec, &pool)?.0)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn hist_string(hist: &[(u32, u64)]) -> String {
    let mut s = String::new();
    for (i, (c, n)) in hist.iter().enumerate() {
        if i > 0 {
            s.push(';');
        }
        let _ = write!(s, "{c}:{n}");
    }
    s
}

fn parse_hist(s: &str) -> Result<Vec<(u32, u64)>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|pair| {
            let (c, n) = pair
                .split_once(':')
                .ok_or_else(|| config(format!("bad histogram entry `{pair}`")))?;
            Ok((
                c.parse()
                    .map_err(|_| config(format!("bad occupancy `{c}`")))?,
                n.parse().map_err(|_| config(format!("bad count `{n}`")))?,
            ))
        })
        .collect()
}

pub fn write_summary_csv(path: &Path, summaries: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for s in summaries {
        w.write_record([
            s.scenario.clone(),
            s.method.to_string(),
            s.plan.m.to_string(),
            s.plan.r.to_string(),
            s.plan.k.to_string(),
            s.stats.n_trials.to_string(),
            s.stats.success_rate.to_string(),
            s.stats.wilson_lb.to_string(),
            fmt_opt(s.stats.mean_handovers),
            fmt_opt(s.stats.burst_concentration),
            s.stats.p90_concurrent_recovery.to_string(),
            s.stats.p90_window_demand.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trials_csv(path: &Path, rows: &[TrialRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRIAL_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.method.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            format!("{:016x}", r.layout_hash),
            r.k.to_string(),
            u8::from(r.summary.success).to_string(),
            r.summary.handovers.to_string(),
            r.requests.to_string(),
            r.summary.exhaustions.to_string(),
            r.summary.exhaustions_in_top_decile.to_string(),
            r.sites_scanned.to_string(),
            r.duration.to_string(),
            r.summary.max_window_demand.to_string(),
            r.min_battery.to_string(),
            hist_string(&r.summary.concurrency_histogram),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rebuilds per-(scenario, method) statistics from a per-trial CSV, in
/// first-appearance order.
pub fn stats_from_trials_csv(path: &Path) -> Result<Vec<(String, SizingRule, AggregateStats)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut groups: Vec<(String, SizingRule, Vec<TrialSummary>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<u64> {
            field(i).parse().map_err(|_| {
                config(format!(
                    "column {} is not a number: `{}`",
                    TRIAL_COLUMNS[i],
                    field(i)
                ))
            })
        };
        let scenario = field(0).to_string();
        let method: SizingRule = field(1).parse()?;
        let summary = TrialSummary {
            success: num(6)? == 1,
            handovers: num(7)? as u32,
            exhaustions: num(9)? as usize,
            exhaustions_in_top_decile: num(10)? as usize,
            max_window_demand: num(13)? as usize,
            concurrency_histogram: parse_hist(field(15))?,
        };
        match groups.iter_mut().find(|g| g.0 == scenario && g.1 == method) {
            Some(g) => g.2.push(summary),
            None => groups.push((scenario, method, vec![summary])),
        }
    }
    groups
        .into_iter()
        .map(|(s, m, rows)| Ok((s, m, aggregate_summaries(&rows, DEFAULT_QUANTILE)?)))
        .collect()
}

fn write_sites_csv(path: &Path, layout: &SiteLayout) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["site_id", "x", "y", "uav"])?;
    for (i, p) in layout.sites.iter().enumerate() {
        w.write_record([
            i.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            layout.cluster_assignment[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_events_csv(path: &Path, events: &[EventRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time", "event_type", "uav_id", "detail"])?;
    for e in events {
        w.write_record([
            e.time.to_string(),
            e.event_type.to_string(),
            e.uav_id.to_string(),
            e.detail.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ManifestScenario<'a> {
    name: &'a str,
    config_hash: String,
    m: u32,
    r: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    base_seed: u64,
    n_trials: u64,
    epsilon: f64,
    methods: Vec<String>,
    cv_sweep: Option<&'a [f64]>,
    scenarios: Vec<ManifestScenario<'a>>,
}

fn write_manifest(
    dir: &Path,
    command: &str,
    spec: &ExperimentSpec,
    scenarios: &[Scenario],
) -> Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        base_seed: spec.base_seed,
        n_trials: spec.n_trials,
        epsilon: spec.epsilon,
        methods: spec.methods.iter().map(|m| m.to_string()).collect(),
        cv_sweep: spec.cv_sweep.as_deref(),
        scenarios: scenarios
            .iter()
            .map(|s| ManifestScenario {
                name: &s.name,
                config_hash: format!("{:016x}", s.config_hash()),
                m: s.mission.m,
                r: s.mission.r,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

/// Runs every scenario and method and writes `summary.csv`, `trials.csv`,
/// and `manifest.json` into the output directory.
pub fn cmd_run(spec: &ExperimentSpec) -> Result<RunReport> {
    spec.validate()?;
    let scenarios = load_scenarios(&spec.scenario_files)?;
    let pool = thread_pool(spec.jobs)?;
    let (report, artefacts) = run_scenarios(&scenarios, spec, &pool)?;
    let dir = &spec.output_dir;
    fs::create_dir_all(dir)?;
    write_summary_csv(&dir.join("summary.csv"), &report.summaries)?;
    write_trials_csv(&dir.join("trials.csv"), &report.trials)?;
    for (name, layout) in &artefacts.sites {
        write_sites_csv(&dir.join(format!("sites_{name}_trial0.csv")), layout)?;
    }
    for (name, rule, events) in &artefacts.events {
        write_events_csv(
            &dir.join(format!("events_{name}_{rule}_trial0.csv")),
            events,
        )?;
    }
    write_manifest(dir, "run", spec, &scenarios)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub cv: f64,
    pub method: SizingRule,
    pub success_rate: f64,
    pub wilson_lb: f64,
}

pub fn sweep_scenario(
    scenario: &Scenario,
    spec: &ExperimentSpec,
    cvs: &[f64],
) -> Result<Vec<SweepRow>> {
    if cvs.is_empty() {
        return Err(config("CV sweep needs at least one value"));
    }
    if let Some(bad) = cvs.iter().find(|&&c| !(c >= 0.0) || !c.is_finite()) {
        return Err(config(format!("CV values must be non-negative, got {bad}")));
    }
    let pool = thread_pool(spec.jobs)?;
    let mut rows = Vec::new();
    for &cv in cvs {
        let varied = scenario.with_wind_cv(cv)?;
        let (report, _) = run_scenarios(std::slice::from_ref(&varied), spec, &pool)?;
        rows.extend(report.summaries.into_iter().map(|s| SweepRow {
            cv,
            method: s.method,
            success_rate: s.stats.success_rate,
            wilson_lb: s.stats.wilson_lb,
        }));
    }
    Ok(rows)
}

/// Repeats the run once per wind CV and writes `sweep.csv` (cv, method,
/// success_rate, wilson_lb). Exactly one scenario file is expected.
pub fn cmd_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let cvs = spec
        .cv_sweep
        .as_deref()
        .ok_or_else(|| config("sweep needs a CV list"))?;
    if spec.scenario_files.len() != 1 {
        return Err(config("sweep takes exactly one scenario file"));
    }
    let scenarios = load_scenarios(&spec.scenario_files)?;
    let rows = sweep_scenario(&scenarios[0], spec, cvs)?;
    fs::create_dir_all(&spec.output_dir)?;
    let mut w = csv::Writer::from_path(spec.output_dir.join("sweep.csv"))?;
    w.write_record(["cv", "method", "success_rate", "wilson_lb"])?;
    for r in &rows {
        w.write_record([
            r.cv.to_string(),
            r.method.to_string(),
            r.success_rate.to_string(),
            r.wilson_lb.to_string(),
        ])?;
    }
    w.flush()?;
    write_manifest(&spec.output_dir, "sweep", spec, &scenarios)?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub epsilon: f64,
    pub h: f64,
    pub reference: f64,
}

pub fn cmd_reference(epsilons: &[f64], h_values: &[f64]) -> Result<Vec<ReferenceRow>> {
    let mut rows = Vec::with_capacity(epsilons.len() * h_values.len());
    for &epsilon in epsilons {
        for &h in h_values {
            rows.push(ReferenceRow {
                epsilon,
                h,
                reference: sizing::compounding_reference(epsilon, h)?,
            });
        }
    }
    Ok(rows)
}

pub fn write_reference_csv<W: std::io::Write>(out: W, rows: &[ReferenceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epsilon", "h", "reference"])?;
    for r in rows {
        w.write_record([
            r.epsilon.to_string(),
            r.h.to_string(),
            r.reference.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_size(m: u32, r: f64, epsilon: f64) -> Result<Vec<FleetPlan>> {
    SizingRule::ALL
        .iter()
        .map(|&rule| size_fleet(rule, m, r, epsilon))
        .collect()
}

pub fn format_size_table(plans: &[FleetPlan]) -> String {
    let mut s = String::from("rule        k\n");
    for p in plans {
        let _ = writeln!(s, "{:<11} {}", p.rule.as_str(), p.k);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    WorstCase,
    Staggered,
}

impl std::str::FromStr for OracleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "worst_case" | "aligned" => Ok(OracleMode::WorstCase),
            "staggered" => Ok(OracleMode::Staggered),
            other => Err(config(format!(
                "unknown oracle mode `{other}` (worst_case | staggered)"
            ))),
        }
    }
}

pub fn cmd_oracle(m: u32, r: f64, k: u32, mode: OracleMode, waves: u32) -> Result<OccupancyTrace> {
    match mode {
        OracleMode::WorstCase => sizing::worst_case_oracle(m, r, k, waves),
        OracleMode::Staggered => sizing::staggered_oracle(m, r, k, waves),
    }
}

pub fn format_oracle(trace: &OccupancyTrace) -> String {
    let mut s = String::from("time      requests  in_recovery  flight_ready\n");
    for i in 0..trace.times.len() {
        let mark = if trace.exhausted_index == Some(i) {
            "  <- exhausted"
        } else {
            ""
        };
        let _ = writeln!(
            s,
            "{:<9.4} {:>8} {:>12} {:>13}{mark}",
            trace.times[i], trace.requests[i], trace.in_recovery[i], trace.flight_ready[i]
        );
    }
    match trace.exhausted_at {
        Some(t) => {
            let _ = writeln!(s, "verdict: exhausted at t = {t} (sortie lengths)");
        }
        None => s.push_str("verdict: no exhaustion\n"),
    }
    s
}
