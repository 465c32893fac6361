use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use noisy_lattice::boson::{run_boson_population, BosonPlan, BosonProductState, BosonRunConfig};
use noisy_lattice::error::{ConfigError, SimError};
use noisy_lattice::experiments::entanglement::{entanglement_scan, FermionModel};
use noisy_lattice::experiments::gates::{
    gate_demo, gate_demo_table, GateDemoConfig, GateTarget, DEFAULT_ALPHA_CAP,
};
use noisy_lattice::experiments::validate::{validate, OCCUPATION_TOL, TV_TOL};
use noisy_lattice::experiments::wigner_scan::{
    peak_table, peak_time_scaling, wigner_scan, wigner_table,
};
use noisy_lattice::experiments::{num, sha256_hex, OutputFile, RunManifest, Table};
use noisy_lattice::fermion::sampler::{
    initial_gaussian, run_population, FermionPlan, PopulationConfig,
};
use noisy_lattice::model::{load_config, plan_run, ModelSpec, ParticleKind, RunConfig};
use noisy_lattice::oracle::{evolve_exact, initial_dense, ModelOperators};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

const DEFAULT_EPSILON: f64 = 0.1;
const DEFAULT_TRAJECTORIES: usize = 10_000;

static START: OnceLock<Instant> = OnceLock::new();

#[derive(Parser, Debug)]
#[command(
    name = "noisy-lattice",
    version,
    about = "Samplers, exact oracle and counterexample scans for noisy lattice models"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Model configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Evolution time (overrides run.time)
    #[arg(long, global = true)]
    time: Option<f64>,
    #[arg(long, global = true)]
    trajectories: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Total error tolerance for the planners
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Output directory for CSV files and the manifest
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Config override `dotted.key=value`, repeatable
    #[arg(long = "override", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print derived constants, threshold report and (T, d)
    Plan,
    /// Compare the sampler with the exact oracle
    Validate,
    /// Run the fermionic trajectory sampler
    SampleFermion,
    /// Run the bosonic trajectory sampler
    SampleBoson,
    /// Exact dense evolution
    Oracle {
        /// Boson truncation (highest level); defaults to run.truncation
        #[arg(long)]
        truncation: Option<usize>,
    },
    /// Wigner negativity of a Kerr-dephased coherent state
    Wigner(WignerArgs),
    /// Entanglement of the fermionic loss/gain models
    FermionEntanglement(EntanglementArgs),
    /// Qubit gate protocols under a capped drive
    GateDemo(GateArgs),
}

#[derive(Args, Debug)]
struct WignerArgs {
    #[arg(long, default_value_t = 0.05)]
    u: f64,
    #[arg(long, default_value_t = 5.0)]
    alpha: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    times: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,2")]
    kappa_over_u: Vec<f64>,
    /// Phase-space grid spacing
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Instead of a (kappa, t) scan, locate t* for each of these U (t = s/U, s on a grid)
    #[arg(long, value_delimiter = ',')]
    scan_u: Vec<f64>,
    #[arg(long, default_value_t = 3.0)]
    s_max: f64,
    #[arg(long, default_value_t = 0.1)]
    s_step: f64,
}

#[derive(Args, Debug)]
struct EntanglementArgs {
    /// two-mode | four-mode
    #[arg(long, default_value = "two-mode")]
    model: String,
    #[arg(long, default_value_t = 1.0)]
    j: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,3,5,7,10,14,20")]
    kappas: Vec<f64>,
    /// Time step in units of 1/kappa
    #[arg(long, default_value_t = 0.005)]
    s_step: f64,
    #[arg(long, default_value_t = 800)]
    steps: usize,
}

#[derive(Args, Debug)]
struct GateArgs {
    /// S | T | sqrtX | entangling
    #[arg(long, default_value = "sqrtX")]
    gate: String,
    #[arg(long, default_value_t = 0.1)]
    u: f64,
    /// Loss rate
    #[arg(long, default_value_t = 0.01)]
    kappa: f64,
    /// Gain rate
    #[arg(long, default_value_t = 0.002)]
    kappa2: f64,
    /// Drive caps P
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
    p: Vec<f64>,
    /// Highest Fock level; picked from the displacement when omitted
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ALPHA_CAP)]
    alpha_cap: f64,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
    Validation,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let config = e.chain().any(|c| {
            c.downcast_ref::<ConfigError>().is_some()
                || matches!(c.downcast_ref::<SimError>(), Some(SimError::Config(_)))
        });
        if config {
            Failure::Config(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        anyhow::Error::from(e).into()
    }
}

struct Loaded {
    spec: ModelSpec,
    run: RunConfig,
    digest: String,
}

fn load(common: &Common) -> std::result::Result<Loaded, Failure> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config(anyhow!("this command needs --config")))?;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Config)?;
    let (spec, run) = load_config(&text, &common.overrides)
        .with_context(|| format!("in {}", path.display()))
        .map_err(Failure::Config)?;
    Ok(Loaded {
        spec,
        run,
        digest: sha256_hex(text.as_bytes()),
    })
}

/// Output directory plus the manifest being assembled.
struct Outputs {
    dir: PathBuf,
    manifest: RunManifest,
    start: Instant,
}

impl Outputs {
    fn new(common: &Common, command: &str) -> Result<Self> {
        let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir,
            manifest: RunManifest::new(command, std::env::args().skip(1).collect()),
            start: *START.get_or_init(Instant::now),
        })
    }

    fn table(&mut self, name: &str, table: &Table) -> Result<()> {
        let path = self.dir.join(name);
        let sha256 = table.write(&path)?;
        self.manifest.outputs.push(OutputFile {
            path: name.to_string(),
            sha256,
        });
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.manifest.wall_time_s = self.start.elapsed().as_secs_f64();
        self.manifest.write(&self.dir.join("manifest.json"))?;
        Ok(())
    }
}

fn time_of(common: &Common, run: &RunConfig) -> std::result::Result<f64, Failure> {
    common
        .time
        .or(run.time)
        .ok_or_else(|| Failure::Config(anyhow!("no evolution time (pass --time or set run.time)")))
}

fn require_kind(spec: &ModelSpec, kind: ParticleKind) -> std::result::Result<(), Failure> {
    if spec.kind != kind {
        return Err(Failure::Config(anyhow!(
            "configuration describes {:?} particles, command needs {:?}",
            spec.kind,
            kind
        )));
    }
    Ok(())
}

fn cmd_plan(common: &Common) -> std::result::Result<(), Failure> {
    let l = load(common)?;
    let t = time_of(common, &l.run)?;
    let eps = common.epsilon.or(l.run.epsilon).unwrap_or(DEFAULT_EPSILON);
    let plan = plan_run(&l.spec, t, eps, &l.run)?;
    let mut report = serde_json::to_value(&plan).map_err(anyhow::Error::from)?;
    let violations: Vec<String> = plan
        .thresholds
        .iter()
        .filter(|r| !r.ok)
        .map(|r| r.detail.clone())
        .collect();
    report["violations"] = serde_json::json!(violations);
    let text = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
    println!("{text}");
    if common.out.is_some() {
        let mut out = Outputs::new(common, "plan")?;
        let path = out.dir.join("plan.json");
        std::fs::write(&path, format!("{text}\n")).map_err(anyhow::Error::from)?;
        out.manifest.outputs.push(OutputFile {
            path: "plan.json".into(),
            sha256: sha256_hex(format!("{text}\n").as_bytes()),
        });
        out.manifest.config_digest = Some(l.digest);
        out.finish()?;
    }
    Ok(())
}

fn cmd_validate(common: &Common) -> std::result::Result<(), Failure> {
    let l = load(common)?;
    let t = time_of(common, &l.run)?;
    let n = common
        .trajectories
        .or(l.run.trajectories)
        .unwrap_or(DEFAULT_TRAJECTORIES);
    let seed = common.seed.or(l.run.seed).unwrap_or(0);
    let eps = common.epsilon.or(l.run.epsilon).unwrap_or(DEFAULT_EPSILON);
    let report = validate(&l.spec, &l.run, t, n, seed, eps)?;
    let mut out = Outputs::new(common, "validate")?;
    let table = report.table();
    out.table("validation.csv", &table)?;
    out.manifest.config_digest = Some(l.digest);
    out.manifest.seed = Some(seed);
    out.manifest
        .tolerances
        .insert("occupation".into(), OCCUPATION_TOL);
    out.manifest.tolerances.insert("fock_tv".into(), TV_TOL);
    out.manifest.passed = Some(report.passed());
    out.finish()?;
    for r in &report.rows {
        println!(
            "{:<16} diff {:>10.3e}  tol {:<5} {}",
            r.observable,
            r.diff,
            r.tolerance,
            if r.passed() { "PASS" } else { "FAIL" }
        );
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Validation)
    }
}

fn occupation_table(values: &[(f64, f64)]) -> Table {
    let mut t = Table::new(&["mode", "n[-]", "stderr[-]"]);
    for (v, (n, s)) in values.iter().enumerate() {
        t.push(vec![(v + 1).to_string(), num(*n), num(*s)]);
    }
    t
}

fn sample_header(m: usize, weighted: bool) -> Vec<String> {
    let mut h = vec!["sample".to_string()];
    h.extend((1..=m).map(|v| format!("n_{v}[-]")));
    if weighted {
        h.push("weight[-]".into());
    }
    h
}

fn cmd_sample(common: &Common, kind: ParticleKind) -> std::result::Result<(), Failure> {
    let l = load(common)?;
    require_kind(&l.spec, kind)?;
    let t = time_of(common, &l.run)?;
    let n = common
        .trajectories
        .or(l.run.trajectories)
        .unwrap_or(DEFAULT_TRAJECTORIES);
    let seed = common.seed.or(l.run.seed).unwrap_or(0);
    let eps = common.epsilon.or(l.run.epsilon).unwrap_or(DEFAULT_EPSILON);
    let plan = plan_run(&l.spec, t, eps, &l.run)?;
    if !plan.thresholds_ok() {
        log::warn!("threshold conditions fail; the sampler will refuse negative branch weights");
    }
    let steps = plan
        .trotter_steps
        .ok_or_else(|| Failure::Runtime(anyhow!("no Trotter step count (set run.trotter_steps)")))?
        as usize;
    let m = l.spec.num_modes();
    let mut out = Outputs::new(
        common,
        if kind == ParticleKind::Fermion {
            "sample-fermion"
        } else {
            "sample-boson"
        },
    )?;
    match kind {
        ParticleKind::Fermion => {
            let fplan = FermionPlan::<f64>::new(&l.spec, t, steps)?;
            let mut cfg = PopulationConfig::new(n, seed);
            if let Some(r) = l.run.resample_every {
                cfg.resample_every = r;
            }
            let pop = run_population(&fplan, &initial_gaussian::<f64>(&l.spec)?, &cfg)?;
            let occ = (0..m)
                .map(|v| pop.occupation(v).map(|e| (e.value, e.stderr)))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            out.table("occupations.csv", &occupation_table(&occ))?;
            let header = sample_header(m, false);
            let mut samples = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
            for (i, s) in pop.sample_fock(n, seed)?.iter().enumerate() {
                let mut row = vec![i.to_string()];
                row.extend(s.iter().map(|k| k.to_string()));
                samples.push(row);
            }
            out.table("samples.csv", &samples)?;
        }
        ParticleKind::Boson => {
            let d = plan
                .truncation
                .ok_or_else(|| Failure::Runtime(anyhow!("no truncation (set run.truncation)")))?;
            let bplan = BosonPlan::<f64>::new(&l.spec, t, steps, d)?;
            let pop = run_boson_population(
                &bplan,
                &BosonProductState::initial(&l.spec, d),
                &BosonRunConfig::new(n, seed),
            )?;
            let occ = (0..m)
                .map(|v| pop.occupation(v).map(|e| (e.value, e.stderr)))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            out.table("occupations.csv", &occupation_table(&occ))?;
            let w = pop.weights()?;
            let total: f64 = w.iter().sum();
            let header = sample_header(m, true);
            let mut samples = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
            for (i, (tr, wi)) in pop.trajectories.iter().zip(&w).enumerate() {
                let mut row = vec![i.to_string()];
                row.extend(tr.sample.iter().map(|k| k.to_string()));
                row.push(num(wi / total));
                samples.push(row);
            }
            out.table("samples.csv", &samples)?;
        }
    }
    out.manifest.config_digest = Some(l.digest);
    out.manifest.seed = Some(seed);
    out.finish()?;
    Ok(())
}

fn cmd_oracle(common: &Common, truncation: Option<usize>) -> std::result::Result<(), Failure> {
    let l = load(common)?;
    let t = time_of(common, &l.run)?;
    let d = match l.spec.kind {
        ParticleKind::Fermion => None,
        ParticleKind::Boson => Some(truncation.or(l.run.truncation).ok_or_else(|| {
            Failure::Config(anyhow!("boson oracle needs --truncation or run.truncation"))
        })?),
    };
    let ops = ModelOperators::<f64>::new(&l.spec, d);
    let mut state = initial_dense::<f64>(&l.spec, d);
    state.rho = evolve_exact(&l.spec, &ops, &state.rho, 0.0, t);
    let mut out = Outputs::new(common, "oracle")?;
    let occ: Vec<(f64, f64)> = state.occupations().into_iter().map(|n| (n, 0.0)).collect();
    out.table("occupations.csv", &occupation_table(&occ))?;
    let m = l.spec.num_modes();
    let mut header = vec!["index".to_string()];
    header.extend((1..=m).map(|v| format!("n_{v}[-]")));
    header.push("probability[-]".into());
    let mut fock = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (b, p) in state.fock_distribution().into_iter().enumerate() {
        let mut row = vec![b.to_string()];
        row.extend(state.occupations_of(b).iter().map(|k| k.to_string()));
        row.push(num(p));
        fock.push(row);
    }
    out.table("fock.csv", &fock)?;
    out.manifest.config_digest = Some(l.digest);
    out.finish()?;
    Ok(())
}

fn cmd_wigner(common: &Common, a: &WignerArgs) -> std::result::Result<(), Failure> {
    let mut out = Outputs::new(common, "wigner")?;
    if a.scan_u.is_empty() {
        let points = wigner_scan(a.u, a.alpha, &a.times, &a.kappa_over_u, a.step)?;
        for p in &points {
            println!(
                "kappa/U {:<6} t {:<6} W_min {:.4e}  -W_min/W_max {:.4e}",
                p.kappa_over_u,
                p.t,
                p.w_min,
                p.relative_negativity()
            );
        }
        out.table("wigner.csv", &wigner_table(&points))?;
    } else {
        let k = *a
            .kappa_over_u
            .first()
            .ok_or_else(|| Failure::Config(anyhow!("--kappa-over-u is empty")))?;
        let count = (a.s_max / a.s_step).round() as usize;
        let s_grid: Vec<f64> = (1..=count).map(|i| i as f64 * a.s_step).collect();
        let (peaks, slope) = peak_time_scaling(&a.scan_u, k, a.alpha, &s_grid, a.step)?;
        let series: Vec<_> = peaks
            .iter()
            .flat_map(|p| p.series.iter().copied())
            .collect();
        out.table("wigner.csv", &wigner_table(&series))?;
        out.table("peaks.csv", &peak_table(&peaks))?;
        println!("log-log slope of t* against U: {slope:.4}");
    }
    out.finish()?;
    Ok(())
}

fn cmd_entanglement(common: &Common, a: &EntanglementArgs) -> std::result::Result<(), Failure> {
    let model: FermionModel = a
        .model
        .parse()
        .map_err(|e: SimError| Failure::Config(e.into()))?;
    let scan = entanglement_scan(model, a.j, &a.kappas, a.s_step, a.steps);
    let mut out = Outputs::new(common, "fermion-entanglement")?;
    out.table("entanglement.csv", &scan.table())?;
    out.table("peaks.csv", &scan.peak_table())?;
    out.finish()?;
    for (k, t, v) in &scan.peaks {
        println!("kappa {k:<6} t* {t:.5e}  signal {v:.4e}");
    }
    println!("log-log slope of t* against kappa: {:.4}", scan.slope);
    Ok(())
}

fn cmd_gate(common: &Common, a: &GateArgs) -> std::result::Result<(), Failure> {
    let target: GateTarget = a
        .gate
        .parse()
        .map_err(|e: SimError| Failure::Config(e.into()))?;
    let cfg = GateDemoConfig {
        target,
        u: a.u,
        kappa1: a.kappa,
        kappa2: a.kappa2,
        alpha_cap: a.alpha_cap,
        truncation: a.d,
    };
    let rows = gate_demo(&cfg, &a.p)?;
    let mut out = Outputs::new(common, "gate-demo")?;
    out.table("gates.csv", &gate_demo_table(target, &rows))?;
    out.manifest.seed = common.seed;
    out.finish()?;
    for r in &rows {
        println!(
            "P {:<6} infidelity {:.4e}  bound {:.4e}  time {:.4}",
            r.p,
            r.infidelity(),
            r.bound,
            r.total_time
        );
    }
    Ok(())
}

fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    let c = &cli.common;
    match &cli.command {
        Command::Plan => cmd_plan(c),
        Command::Validate => cmd_validate(c),
        Command::SampleFermion => cmd_sample(c, ParticleKind::Fermion),
        Command::SampleBoson => cmd_sample(c, ParticleKind::Boson),
        Command::Oracle { truncation } => cmd_oracle(c, *truncation),
        Command::Wigner(a) => cmd_wigner(c, a),
        Command::FermionEntanglement(a) => cmd_entanglement(c, a),
        Command::GateDemo(a) => cmd_gate(c, a),
    }
}

fn main() -> ExitCode {
    START.get_or_init(Instant::now);
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => {
            eprintln!("validation failed");
            ExitCode::from(3)
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
