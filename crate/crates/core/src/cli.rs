//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{check_scenario, default_directions, response_in_region, DualCheck, MixedAction};
use crate::scenarios::{build_scenario, Scenario, ScenarioOverrides, StrategyConfig, SCENARIO_NAMES};
use crate::simulate::{
    monte_carlo, run_many, write_json_atomic, write_trace_csv, MonteCarloReport, MonteCarloSettings,
    RunOptions, SCHEMA_VERSION,
};
use crate::strategies::{check_waypoint_conditions, AdversaryModel, Player1, WaypointReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

const DEFAULT_OUTPUT_DIR: &str = "out";

/// The scenario: a built-in by name (with overrides) or an inline definition.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub overrides: ScenarioOverrides,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub definition: Option<Box<Scenario>>,
}

/// A strategy of the scenario by name, or an inline one.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<StrategyConfig>,
    /// Replaces `κ` of a σ* strategy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Replaces `T₀` of a waypoint strategy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_duration: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversarySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<AdversaryModel>,
}

/// An experiment, as read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub horizon: u64,
    pub runs: u64,
    pub base_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Stride of stored averages; defaults by horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_stride: Option<u64>,
    pub grid_resolution: usize,
    /// Worker threads; defaults to the number of cores.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parallel: Option<usize>,
    pub scenario: ScenarioSection,
    pub strategy: StrategySection,
    pub adversary: AdversarySection,
    pub montecarlo: MonteCarloSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            horizon: 10_000,
            runs: 1,
            base_seed: 0,
            output_dir: None,
            trace_stride: None,
            grid_resolution: 200,
            parallel: None,
            scenario: ScenarioSection::default(),
            strategy: StrategySection::default(),
            adversary: AdversarySection::default(),
            montecarlo: MonteCarloSettings::default(),
        }
    }
}

/// Everything a command needs, resolved from a config.
pub struct Experiment {
    pub scenario: Scenario,
    pub strategy_name: String,
    pub strategy: StrategyConfig,
    pub adversary_name: String,
    pub adversary: AdversaryModel,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.runs < 1 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.grid_resolution < 2 {
            return Err(Error::Config("grid_resolution must be at least 2".into()));
        }
        if self.trace_stride == Some(0) {
            return Err(Error::Config("trace_stride must be at least 1".into()));
        }
        if self.parallel == Some(0) {
            return Err(Error::Config("parallel must be at least 1".into()));
        }
        let s = &self.scenario;
        if s.name.is_some() == s.definition.is_some() {
            return Err(Error::Config(
                "[scenario] needs exactly one of `name` and `definition`".into(),
            ));
        }
        if self.strategy.name.is_some() && self.strategy.config.is_some() {
            return Err(Error::Config(
                "[strategy] takes `name` or `config`, not both".into(),
            ));
        }
        if self.adversary.name.is_some() && self.adversary.model.is_some() {
            return Err(Error::Config(
                "[adversary] takes `name` or `model`, not both".into(),
            ));
        }
        let q = self.montecarlo.quantile;
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Config("montecarlo.quantile must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Builds the scenario and picks the strategy and adversary.
    pub fn resolve(&self) -> Result<Experiment> {
        let scenario = match (&self.scenario.name, &self.scenario.definition) {
            (Some(name), None) => build_scenario(name, &self.scenario.overrides)?,
            (None, Some(def)) => {
                def.validate()?;
                (**def).clone()
            }
            _ => return Err(Error::Config("[scenario] needs exactly one of `name` and `definition`".into())),
        };
        let (strategy_name, mut strategy) = match (&self.strategy.name, &self.strategy.config) {
            (_, Some(c)) => ("inline".to_string(), c.clone()),
            (Some(n), None) => (n.clone(), lookup_strategy(&scenario, n)?),
            (None, None) => {
                let n = default_strategy_name(&scenario);
                (n.clone(), lookup_strategy(&scenario, &n)?)
            }
        };
        match &mut strategy {
            StrategyConfig::SigmaStar { kappa, .. } if self.strategy.kappa.is_some() => {
                *kappa = self.strategy.kappa;
            }
            StrategyConfig::Waypoint {
                initial_duration, ..
            } if self.strategy.initial_duration.is_some() => {
                *initial_duration = self.strategy.initial_duration;
            }
            _ if self.strategy.kappa.is_some() || self.strategy.initial_duration.is_some() => {
                return Err(Error::Config(format!(
                    "strategy `{strategy_name}` takes neither `kappa` nor `initial_duration`"
                )));
            }
            _ => {}
        }
        let (adversary_name, adversary) = match (&self.adversary.name, &self.adversary.model) {
            (_, Some(m)) => ("inline".to_string(), m.clone()),
            (name, None) => {
                let n = name.clone().unwrap_or_else(|| "uniform".into());
                let m = scenario.adversary(&n)?.clone();
                (n, m)
            }
        };
        adversary.validate(&scenario.game)?;
        // fail on a bad strategy before any run starts
        strategy.build(&scenario)?;
        Ok(Experiment {
            scenario,
            strategy_name,
            strategy,
            adversary_name,
            adversary,
        })
    }
}

fn lookup_strategy(scenario: &Scenario, name: &str) -> Result<StrategyConfig> {
    scenario.strategies.get(name).cloned().ok_or_else(|| {
        Error::Config(format!(
            "scenario `{}` has no strategy `{name}` (has: {})",
            scenario.name,
            scenario.strategies.keys().cloned().collect::<Vec<_>>().join(", ")
        ))
    })
}

fn default_strategy_name(scenario: &Scenario) -> String {
    ["sigma_star", "waypoint", "block", "blackwell"]
        .into_iter()
        .find(|n| scenario.strategies.contains_key(*n))
        .map(str::to_string)
        .or_else(|| scenario.strategies.keys().next().cloned())
        .unwrap_or_else(|| "blackwell".into())
}

#[derive(Parser, Debug)]
#[command(name = "approach", version, about = "Approachability with constraints: checks and simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the safe-action and approachability conditions.
    Check(CommonArgs),
    /// Simulate runs and write one CSV trace per run.
    Run(CommonArgs),
    /// Aggregate many runs into a report.
    Montecarlo(CommonArgs),
    /// List the built-in scenarios.
    Scenarios,
}

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in scenario; replaces the config's scenario.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub adversary: Option<String>,
    /// Base seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<u64>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    pub parallel: Option<usize>,
}

impl CommonArgs {
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = &self.scenario {
            config.scenario.name = Some(s.clone());
            config.scenario.definition = None;
        }
        if let Some(s) = &self.strategy {
            config.strategy.name = Some(s.clone());
            config.strategy.config = None;
        }
        if let Some(a) = &self.adversary {
            config.adversary.name = Some(a.clone());
            config.adversary.model = None;
        }
        if let Some(v) = self.seed {
            config.base_seed = v;
        }
        if let Some(v) = self.runs {
            config.runs = v;
        }
        if let Some(v) = self.horizon {
            config.horizon = v;
        }
        if let Some(v) = &self.out {
            config.output_dir = Some(v.clone());
        }
        if let Some(v) = self.parallel {
            config.parallel = Some(v);
        }
        if config.scenario.name.is_none() && config.scenario.definition.is_none() {
            return Err(Error::Config("no scenario: pass --scenario or --config".into()));
        }
        config.validate()?;
        Ok(config)
    }
}

/// Six significant digits.
fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        format!("{:.*}", (5 - mag).max(0) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Result of `check`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub schema_version: u32,
    pub scenario: String,
    pub safe_actions: Vec<String>,
    /// Safety gap of the lowest-index safe action.
    pub delta: f64,
    /// `R1(s) ⊆ D` for that action.
    pub response_in_region: bool,
    pub c1_holds: bool,
    pub c1_approximate: bool,
    pub dual: DualCheck,
    pub c2_holds: bool,
    pub waypoint: Option<WaypointReport>,
    pub passes: bool,
}

pub fn check(config: &ExperimentConfig) -> Result<CheckReport> {
    let exp = config.resolve()?;
    let s = &exp.scenario;
    let sc = check_scenario(&s.game, &s.target, &s.region, default_directions(s.game.dim()), 1e-9)?;
    let response_in_region = match sc.safe_actions.first() {
        Some(&a) => {
            response_in_region(&s.game, &s.region, &MixedAction::pure(s.game.num_rows(), a)?)?
        }
        None => false,
    };
    let waypoint = match &exp.strategy {
        StrategyConfig::Waypoint { plan, .. } => match plan.as_ref().or(s.plan.as_ref()) {
            Some(p) => Some(check_waypoint_conditions(
                p,
                &s.game,
                &s.region,
                &s.oracle(config.grid_resolution)?,
            )?),
            None => None,
        },
        _ => None,
    };
    let passes = sc.c1_holds && sc.c2_holds && waypoint.as_ref().is_none_or(|w| w.all_pass());
    Ok(CheckReport {
        schema_version: SCHEMA_VERSION,
        scenario: s.name.clone(),
        safe_actions: sc
            .safe_actions
            .iter()
            .map(|&i| s.game.row_actions()[i].clone())
            .collect(),
        delta: sc.safe_gap,
        response_in_region,
        c1_holds: sc.c1_holds,
        c1_approximate: true,
        dual: sc.dual,
        c2_holds: sc.c2_holds,
        waypoint,
        passes,
    })
}

fn print_check(r: &CheckReport) {
    let yn = |b: bool| if b { "yes" } else { "no" };
    println!("scenario            {}", r.scenario);
    println!(
        "safe actions        {}",
        if r.safe_actions.is_empty() {
            "none".to_string()
        } else {
            r.safe_actions.join(", ")
        }
    );
    println!("delta               {}", sig(r.delta));
    println!("R1(s) inside D      {}", yn(r.response_in_region));
    println!(
        "C1 (approximate)    {}  (worst violation {} over {} directions)",
        yn(r.c1_holds),
        sig(r.dual.worst_violation),
        r.dual.directions_checked
    );
    println!("C2                  {}", yn(r.c2_holds));
    if let Some(w) = &r.waypoint {
        println!("final target approachable  {}", w.final_target_approachable.map_or("n/a", yn));
        for t in &w.transitions {
            let opt = |b: Option<bool>| b.map_or("n/a", yn);
            println!(
                "  l={}  separated {}  disconnected {}  hull in D {}",
                t.ell,
                opt(t.separated),
                opt(t.disconnected),
                opt(t.hull_in_region)
            );
        }
    }
    println!("all checks pass     {}", yn(r.passes));
}

/// What `run` writes next to the traces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub scenario: String,
    pub strategy: String,
    pub adversary: String,
    pub seeds: Vec<u64>,
    pub files: Vec<String>,
}

fn output_dir(config: &ExperimentConfig) -> Result<PathBuf> {
    let dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn factories(
    exp: &Experiment,
) -> (
    impl Fn(u64) -> Result<Player1> + Sync + '_,
    impl Fn(u64) -> Result<AdversaryModel> + Sync + '_,
) {
    (
        move |_| exp.strategy.build(&exp.scenario),
        move |_| Ok(exp.adversary.clone()),
    )
}

/// Writes `run_<seed>.csv` for every run and `manifest.json`.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    let exp = config.resolve()?;
    let dir = output_dir(config)?;
    let s = &exp.scenario;
    let (strategy, adversary) = factories(&exp);
    let writer = Mutex::new(());
    let options = RunOptions {
        stride: config.trace_stride,
    };
    let files = with_pool(config.parallel, || {
        run_many(
            &s.game,
            strategy,
            adversary,
            config.horizon,
            config.runs,
            config.base_seed,
            &s.region,
            &s.target,
            &options,
            |trace| -> Result<String> {
                let name = format!("run_{}.csv", trace.seed);
                let _guard = writer.lock().unwrap_or_else(|e| e.into_inner());
                write_trace_csv(&trace, &s.game, &dir.join(&name))?;
                Ok(name)
            },
        )
    })??
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        scenario: s.name.clone(),
        strategy: exp.strategy_name.clone(),
        adversary: exp.adversary_name.clone(),
        seeds: (0..config.runs).map(|k| config.base_seed.wrapping_add(k)).collect(),
        files,
    };
    write_json_atomic(&manifest, &dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Report plus the names it was produced with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloOutput {
    pub scenario: String,
    pub strategy: String,
    pub adversary: String,
    /// Player 2 is one fixed model per experiment, not every strategy.
    pub adversary_note: String,
    #[serde(flatten)]
    pub report: MonteCarloReport,
}

pub fn montecarlo(config: &ExperimentConfig) -> Result<MonteCarloOutput> {
    let exp = config.resolve()?;
    let dir = output_dir(config)?;
    let s = &exp.scenario;
    let (strategy, adversary) = factories(&exp);
    let report = with_pool(config.parallel, || {
        monte_carlo(
            &s.game,
            strategy,
            adversary,
            config.horizon,
            config.runs,
            config.base_seed,
            &s.region,
            &s.target,
            &config.montecarlo,
        )
    })??;
    let out = MonteCarloOutput {
        scenario: s.name.clone(),
        strategy: exp.strategy_name.clone(),
        adversary: exp.adversary_name.clone(),
        adversary_note: "results hold against this adversary model only".into(),
        report,
    };
    write_json_atomic(&out, &dir.join("report.json"))?;
    Ok(out)
}

fn print_report(out: &MonteCarloOutput) {
    let r = &out.report;
    println!("scenario {}  strategy {}  adversary {}", out.scenario, out.strategy, out.adversary);
    println!("runs {}  horizon {}  base seed {}", r.runs, r.horizon, r.base_seed);
    println!("stay-in-D rate      {}", sig(r.stay_in_region_rate));
    match &r.rate_fit {
        Some(f) => println!(
            "rate fit            slope {}  intercept {}  r2 {}",
            sig(f.slope),
            sig(f.intercept),
            sig(f.r2)
        ),
        None => println!("rate fit            n/a ({})", r.rate_fit_note.as_deref().unwrap_or("")),
    }
    if let Some(d) = &r.final_distance {
        println!("final d(g, A)       mean {}  p95 {}  max {}", sig(d.mean), sig(d.p95), sig(d.max));
    }
    if let Some(sf) = &r.safe_frequency {
        println!("safe count          t  mean f/sqrt(t)  p95  doubling p95");
        for c in &sf.checkpoints {
            let dbl = sf
                .doubling
                .iter()
                .find(|d| d.stage == c.stage)
                .map_or("n/a".to_string(), |d| sig(d.p95));
            println!("  {:>8}  {}  {}  {}", c.stage, sig(c.mean), sig(c.p95), dbl);
        }
    }
    println!("epsilon attainment");
    for e in &r.epsilon_attainment {
        println!(
            "  eps {:<8} stage {}",
            sig(e.epsilon),
            e.stage.map_or("not reached".to_string(), |t| t.to_string())
        );
    }
    if r.diagnostics.certificates > 0 {
        println!(
            "certificates {}  violations {}",
            r.diagnostics.certificates, r.diagnostics.certificate_violations
        );
    }
}

fn list_scenarios() -> Result<()> {
    for name in SCENARIO_NAMES {
        let s = build_scenario(name, &ScenarioOverrides::default())?;
        println!("{name}");
        println!("  expectation  {:?}", s.expectation);
        println!("  strategies   {}", s.strategies.keys().cloned().collect::<Vec<_>>().join(", "));
        println!("  adversaries  {}", s.adversaries.keys().cloned().collect::<Vec<_>>().join(", "));
    }
    Ok(())
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Scenarios => {
            list_scenarios()?;
            Ok(EXIT_OK)
        }
        Command::Check(args) => {
            let config = args.to_config()?;
            let report = check(&config)?;
            print_check(&report);
            if config.output_dir.is_some() {
                write_json_atomic(&report, &output_dir(&config)?.join("check.json"))?;
            }
            Ok(if report.passes { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Run(args) => {
            let config = args.to_config()?;
            let m = run(&config)?;
            println!("wrote {} traces and manifest.json", m.files.len());
            Ok(EXIT_OK)
        }
        Command::Montecarlo(args) => {
            let config = args.to_config()?;
            let out = montecarlo(&config)?;
            print_report(&out);
            Ok(EXIT_OK)
        }
    }
}

/// Runs the CLI and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(0.25), "0.250000");
        assert_eq!(sig(123.456789), "123.457");
        assert_eq!(sig(1.5e-7), "1.50000e-7");
        assert_eq!(sig(0.0), "0");
    }

    #[test]
    fn config_round_trip() {
        let mut c = ExperimentConfig::default();
        c.scenario.name = Some("waypoint_ladder".into());
        c.scenario.overrides.alpha = Some(0.3);
        c.strategy.initial_duration = Some(100);
        c.output_dir = Some(PathBuf::from("x/y"));
        let text = c.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected_with_location() {
        let err = ExperimentConfig::from_toml("horizon = 5\nbogus = 1\n[scenario]\nname = \"convex_demo\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("bogus"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            "horizon = 0\n[scenario]\nname = \"convex_demo\"",
            "runs = 0\n[scenario]\nname = \"convex_demo\"",
            "grid_resolution = 1\n[scenario]\nname = \"convex_demo\"",
            "horizon = 5",
        ] {
            assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
        }
    }
}
