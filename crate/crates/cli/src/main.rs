//! `edgeq`: closed-form evaluation, simulation, validation sweeps and
//! capacity planning for edge versus cloud deployments.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 the simulated
//! system is unstable.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use edgeq_core::analytic::{
    delta_t_bound_ggk, delta_t_bound_mmk_using, effective_service_rate, empirical_rule_capacities, erlang_c_probability,
    excess_wait_sinusoidal, fluid_backlog, gg1_two_phase_wait, mm1_two_phase_wait, mmk_exact_conditional_wait, mmk_exact_wait,
    mmk_qed_wait, response_lag, CloudSpec, CloudWaitForm, DtrpSpec, NetworkSpec, QueueSpec, SinusoidProfile, VariabilitySpec,
};
use edgeq_core::capacity::{
    cloud_capacity_equivalent, dtrp_response_time, edge_overprovision_factor, edge_size_sweep, generate_synthetic_trace,
    load_vm_trace, simulate_packing, trace_summary, DtrpMode, Policy, SiteAssign, SyntheticTraceSpec, Topology,
};
use edgeq_core::desim::{aggregate, replicate_runs, Horizon, ModelKind};
use edgeq_core::harness::{report_file_stem, run_scenario, write_report, OutputFormat, Scenario};
use edgeq_core::workload::SeededStream;
use edgeq_core::Error;

use config::ConfigFile;
use report::Report;

#[derive(Parser)]
#[command(name = "edgeq", version, about = "Edge vs cloud latency and capacity models")]
struct Cli {
    /// Print results as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a closed-form model.
    #[command(subcommand)]
    Analytic(AnalyticCmd),
    /// Simulate the model described by a config file.
    Simulate(SimulateArgs),
    /// Run a scenario sweep comparing analytic and simulated values.
    Validate(ValidateArgs),
    /// Capacity equivalence and VM packing.
    #[command(subcommand)]
    Capacity(CapacityCmd),
    /// Print the canonical form of a config file.
    Config { path: PathBuf },
}

#[derive(Args)]
struct EdgeArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    mu1: f64,
    #[arg(long)]
    mu2: f64,
    #[arg(long, default_value_t = 0.0)]
    r: f64,
}

impl EdgeArgs {
    fn spec(&self) -> edgeq_core::Result<QueueSpec> {
        QueueSpec::new(self.lambda, self.mu1, self.mu2, self.r)
    }

    fn echo(&self, rep: &mut Report) {
        rep.num("lambda", self.lambda);
        rep.num("mu1", self.mu1);
        rep.num("mu2", self.mu2);
        rep.num("r", self.r);
    }
}

#[derive(Args)]
struct FrequencyArgs {
    /// Modulation frequency, rad/s.
    #[arg(long, conflicts_with = "period", required_unless_present = "period")]
    gamma: Option<f64>,
    /// Modulation period, s.
    #[arg(long)]
    period: Option<f64>,
}

impl FrequencyArgs {
    fn gamma(&self) -> f64 {
        self.gamma
            .unwrap_or_else(|| std::f64::consts::TAU / self.period.expect("clap requires one"))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DeltaMode {
    Mmk,
    Ggk,
}

#[derive(Clone, Copy, ValueEnum)]
enum WaitForm {
    Qed,
    ErlangC,
}

#[derive(Subcommand)]
enum AnalyticCmd {
    /// Mean wait at an edge site with migration.
    Wait(EdgeArgs),
    /// Mean wait at a GI/G/1 edge site with migration.
    Gg1 {
        #[command(flatten)]
        edge: EdgeArgs,
        #[arg(long, default_value_t = 1.0)]
        ca2: f64,
        #[arg(long, default_value_t = 1.0)]
        cs2: f64,
    },
    /// M/M/k cloud waits.
    Cloud {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        rho: f64,
    },
    /// Network-delay threshold above which the edge responds faster.
    Deltat {
        #[arg(long, value_enum, default_value = "mmk")]
        mode: DeltaMode,
        #[command(flatten)]
        edge: EdgeArgs,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        mu_cloud: f64,
        #[arg(long)]
        rho_cloud: f64,
        /// Cloud wait subtracted in `mmk` mode.
        #[arg(long, value_enum, default_value = "qed")]
        form: WaitForm,
        #[arg(long, default_value_t = 1.0)]
        ca2: f64,
        #[arg(long, default_value_t = 1.0)]
        cs2: f64,
        #[arg(long, default_value_t = 1.0)]
        cloud_ca2: f64,
        #[arg(long, default_value_t = 1.0)]
        cloud_cs2: f64,
        /// With `--t-cloud`, also report which side wins, s.
        #[arg(long, requires = "t_cloud")]
        t_edge: Option<f64>,
        #[arg(long, requires = "t_edge")]
        t_cloud: Option<f64>,
    },
    /// Edge over-provisioning factor `1 + 1/q`.
    Factor {
        #[arg(long)]
        q: f64,
    },
    /// Excess wait caused by sinusoidal arrivals.
    Excess {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        amplitude: f64,
        #[arg(long)]
        mu_eff: f64,
        #[command(flatten)]
        freq: FrequencyArgs,
    },
    /// Fluid rush-hour window, backlog and wait.
    Rush {
        #[arg(long)]
        lambda_bar: f64,
        #[arg(long)]
        amplitude: f64,
        #[arg(long)]
        mu1: f64,
        #[arg(long)]
        mu2: f64,
        #[arg(long, default_value_t = 0.0)]
        r: f64,
        #[command(flatten)]
        freq: FrequencyArgs,
    },
    /// Lag of the offered load behind the arrival rate.
    Lag {
        #[arg(long)]
        mu_eff: f64,
        #[command(flatten)]
        freq: FrequencyArgs,
    },
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    #[arg(long, env = "EDGEQ_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    deterministic_names: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario file, or a bundled scenario: table1, fig4, fig8.
    scenario: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    deterministic_names: bool,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, env = "EDGEQ_SEED")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum CapacityCmd {
    /// Cloud capacity equivalent to an edge site.
    Equivalent {
        #[arg(long)]
        c_edge: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 0.5)]
        rho_edge: f64,
        /// Use `--rho-edge` for the cloud as well.
        #[arg(long, conflicts_with = "rho_cloud")]
        rho_equal: bool,
        #[arg(long, required_unless_present = "rho_equal")]
        rho_cloud: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
    },
    /// Peak capacities from the two-sigma rule.
    Rule {
        /// Mean demand per site.
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        k: u32,
    },
    /// Repairman-model response time, up to a constant.
    Dtrp {
        #[arg(long)]
        capacity: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        area: f64,
        #[arg(long)]
        velocity: f64,
        #[arg(long, default_value_t = 1.0)]
        gos: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value = "edge", value_parser = parse_enum::<DtrpMode>)]
        mode: DtrpMode,
    },
    /// Pack a VM trace onto a topology.
    Pack {
        #[arg(long)]
        trace: PathBuf,
        /// `edge:k=4,cores=96[,servers=1]` or `cloud:servers=10,cores=64`.
        #[arg(long, value_parser = parse_topology)]
        topology: Topology,
        #[arg(long, default_value = "first_fit", value_parser = parse_enum::<Policy>)]
        policy: Policy,
        #[arg(long, default_value = "uniform", value_parser = parse_enum::<SiteAssign>)]
        site_assign: SiteAssign,
        #[arg(long, env = "EDGEQ_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Equivalence and edge-size sweep from the `[capacity]` config section.
    Plan {
        config: PathBuf,
        #[arg(long, env = "EDGEQ_SEED")]
        seed: Option<u64>,
    },
}

fn parse_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

fn parse_topology(s: &str) -> Result<Topology, String> {
    let (mode, rest) = s.split_once(':').ok_or("expected MODE:key=value,...")?;
    let (mut k, mut servers, mut cores) = (None, None, None);
    for kv in rest.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = kv.split_once('=').ok_or_else(|| format!("expected key=value, got {kv:?}"))?;
        let v: u32 = value
            .parse()
            .map_err(|_| format!("{key}: not a positive integer: {value:?}"))?;
        match key {
            "k" => k = Some(v),
            "servers" => servers = Some(v),
            "cores" => cores = Some(v),
            _ => return Err(format!("unknown topology key {key:?}")),
        }
    }
    let cores = cores.ok_or("cores is required")?;
    let topo = match mode {
        "edge" => Topology::edge(k.ok_or("edge needs k")?, servers.unwrap_or(1), cores),
        "cloud" if k.is_none() || k == Some(1) => Topology::cloud(servers.ok_or("cloud needs servers")?, cores),
        "cloud" => return Err("a cloud is one site; omit k".into()),
        _ => return Err(format!("mode must be edge or cloud, got {mode:?}")),
    };
    topo.validate().map_err(|e| e.to_string())?;
    Ok(topo)
}

struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Self { code: 2, err }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Self {
            code: 2,
            err: err.into(),
        }
    }
}

fn unstable(err: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 3,
        err: err.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Analytic(cmd) => analytic(cmd, cli.json),
        Cmd::Simulate(args) => simulate(args, cli.json),
        Cmd::Validate(args) => validate(args, cli.json),
        Cmd::Capacity(cmd) => capacity(cmd, cli.json),
        Cmd::Config { path } => ConfigFile::load(&path)
            .and_then(|c| c.canonical())
            .map(|text| print!("{text}"))
            .map_err(Failure::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn analytic(cmd: AnalyticCmd, json: bool) -> CmdResult {
    let mut rep = Report::default();
    match cmd {
        AnalyticCmd::Wait(edge) => {
            edge.echo(&mut rep);
            let w = mm1_two_phase_wait(&edge.spec()?)?;
            rep.num("source_wait", w.source);
            rep.num("destination_wait", w.destination);
            rep.num("wait", w.total());
        }
        AnalyticCmd::Gg1 { edge, ca2, cs2 } => {
            edge.echo(&mut rep);
            rep.num("ca2", ca2);
            rep.num("cs2", cs2);
            rep.num("wait", gg1_two_phase_wait(&edge.spec()?, &VariabilitySpec::new(ca2, cs2)?)?);
        }
        AnalyticCmd::Cloud { k, mu, rho } => {
            let cloud = CloudSpec::new(k, mu, rho)?;
            rep.num("k", f64::from(k));
            rep.num("mu", mu);
            rep.num("rho", rho);
            rep.num("qed_wait", mmk_qed_wait(&cloud)?);
            rep.num("erlang_c", erlang_c_probability(k, rho * f64::from(k))?);
            rep.num("exact_wait", mmk_exact_wait(&cloud)?);
            rep.num("exact_conditional_wait", mmk_exact_conditional_wait(&cloud)?);
        }
        AnalyticCmd::Deltat {
            mode,
            edge,
            k,
            mu_cloud,
            rho_cloud,
            form,
            ca2,
            cs2,
            cloud_ca2,
            cloud_cs2,
            t_edge,
            t_cloud,
        } => {
            edge.echo(&mut rep);
            rep.num("k", f64::from(k));
            rep.num("mu_cloud", mu_cloud);
            rep.num("rho_cloud", rho_cloud);
            let spec = edge.spec()?;
            let cloud = CloudSpec::new(k, mu_cloud, rho_cloud)?;
            let bound = match mode {
                DeltaMode::Mmk => {
                    let form = match form {
                        WaitForm::Qed => CloudWaitForm::QedConditional,
                        WaitForm::ErlangC => CloudWaitForm::ErlangC,
                    };
                    rep.text("mode", "mmk");
                    delta_t_bound_mmk_using(&spec, &cloud, form)?
                }
                DeltaMode::Ggk => {
                    rep.text("mode", "ggk");
                    rep.num("ca2", ca2);
                    rep.num("cs2", cs2);
                    rep.num("cloud_ca2", cloud_ca2);
                    rep.num("cloud_cs2", cloud_cs2);
                    delta_t_bound_ggk(
                        &spec,
                        &VariabilitySpec::new(ca2, cs2)?,
                        &cloud,
                        &VariabilitySpec::new(cloud_ca2, cloud_cs2)?,
                    )?
                }
            };
            rep.num("delta_t_bound", bound);
            if let (Some(te), Some(tc)) = (t_edge, t_cloud) {
                let net = NetworkSpec::new(te, tc)?;
                rep.num("delta_t", net.delta_t());
                rep.flag("edge_wins", net.edge_wins(bound));
            }
        }
        AnalyticCmd::Factor { q } => {
            rep.num("q", q);
            rep.num("factor", edge_overprovision_factor(q)?);
        }
        AnalyticCmd::Excess {
            rho,
            amplitude,
            mu_eff,
            freq,
        } => {
            let gamma = freq.gamma();
            rep.num("rho", rho);
            rep.num("amplitude", amplitude);
            rep.num("gamma", gamma);
            rep.num("mu_eff", mu_eff);
            rep.num("excess_wait", excess_wait_sinusoidal(rho, amplitude, gamma, mu_eff)?);
        }
        AnalyticCmd::Rush {
            lambda_bar,
            amplitude,
            mu1,
            mu2,
            r,
            freq,
        } => {
            let gamma = freq.gamma();
            let profile = SinusoidProfile::new(lambda_bar, amplitude, gamma)?;
            let mu_eff = effective_service_rate(mu1, mu2, r)?;
            for (k, v) in [
                ("lambda_bar", lambda_bar),
                ("amplitude", amplitude),
                ("mu1", mu1),
                ("mu2", mu2),
                ("r", r),
                ("gamma", gamma),
                ("mu_eff", mu_eff),
            ] {
                rep.num(k, v);
            }
            match fluid_backlog(&profile, mu_eff) {
                Ok(rh) => {
                    rep.num("theta", rh.window.theta);
                    rep.num("t1", rh.window.t1);
                    rep.num("t2", rh.window.t2);
                    rep.num("net_input", rh.net_input);
                    rep.num("backlog", rh.backlog);
                    rep.num("rush_wait", rh.backlog / mu_eff);
                }
                Err(Error::NoOverload { .. }) => rep.num("rush_wait", 0.0),
                Err(e) => return Err(e.into()),
            }
        }
        AnalyticCmd::Lag { mu_eff, freq } => {
            let gamma = freq.gamma();
            rep.num("gamma", gamma);
            rep.num("mu_eff", mu_eff);
            rep.num("lag", response_lag(gamma, mu_eff)?);
        }
    }
    rep.print(json);
    Ok(())
}

fn simulate(args: SimulateArgs, json: bool) -> CmdResult {
    let file = ConfigFile::load(&args.config)?;
    let mut cfg = file.sim_config()?;
    let seed = args.seed.or(file.simulation.seed).unwrap_or(0);
    let reps = args.reps.unwrap_or(file.simulation.replications);
    if reps == 0 {
        return Err(anyhow!("replications must be >= 1").into());
    }
    if file.is_stationary() && (cfg.model == ModelKind::MmkCloud || matches!(cfg.horizon, Horizon::Requests(_))) {
        if let Err(e @ Error::UnstableQueue { .. }) = cfg.check_stability() {
            return Err(unstable(anyhow!(e).context("the queue would grow without bound")));
        }
    }
    let out_dir = args.out.unwrap_or_else(|| file.output.dir.clone());
    if let Some(log) = &cfg.event_log {
        if log.is_relative() {
            cfg.event_log = Some(out_dir.join(log));
        }
    }
    std::fs::create_dir_all(&out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let runs = replicate_runs(&cfg, reps, SeededStream::new(seed, 0))?;
    if file.is_stationary() {
        let cap = file.simulation.max_in_system;
        if let Some(m) = runs.iter().map(|r| r.metrics.in_system_at_end).max().filter(|&m| m > cap) {
            return Err(unstable(anyhow!(
                "{m} requests still in system at the horizon, above max_in_system = {cap}"
            )));
        }
    }
    let agg = aggregate(&runs);

    let mut rep = Report::default();
    rep.text("model", &format!("{:?}", file.model.kind).to_lowercase());
    rep.num("seed", seed as f64);
    rep.num("replications", reps as f64);
    for (name, s) in [
        ("mean_wait", agg.mean_wait),
        ("mean_wait_source", agg.mean_wait_source),
        ("mean_wait_destination", agg.mean_wait_destination),
        ("mean_response", agg.mean_response),
        ("p95_response", agg.p95_response),
        ("utilization", agg.utilization),
        ("little_l", agg.little_l),
        ("migrated_fraction", agg.migrated_fraction),
    ] {
        rep.num(name, s.mean);
        if let Some(w) = s.ci_width() {
            rep.num(&format!("{name}_ci"), w / 2.0);
        }
    }
    if let Some(w) = agg.time_series.as_ref().and_then(|t| t.rush_window) {
        rep.num("rush_window_wait", w.mean_wait);
    }

    let stem = report_file_stem(&file.name(), args.deterministic_names || file.output.deterministic_names);
    for format in &file.output.formats {
        match format {
            OutputFormat::Json => {
                let path = out_dir.join(format!("{stem}.json"));
                let doc = serde_json::json!({
                    "config": file,
                    "seed": seed,
                    "replications": reps,
                    "metrics": agg,
                });
                let text = serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)?;
                write_text(&path, &(text + "\n"))?;
                rep.text("output", &path.display().to_string());
            }
            OutputFormat::Csv => {
                let path = out_dir.join(format!("{stem}.csv"));
                report::write_metrics_csv(&path, &agg.runs)?;
                rep.text("output", &path.display().to_string());
                if let Some(ts) = &agg.time_series {
                    let path = out_dir.join(format!("{stem}_timeseries.csv"));
                    report::write_series_csv(&path, ts)?;
                    rep.text("output", &path.display().to_string());
                }
            }
        }
    }
    rep.print(json);
    Ok(())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

const BUNDLED: [(&str, &str); 3] = [
    ("table1", include_str!("../scenarios/table1.scenario")),
    ("fig4", include_str!("../scenarios/fig4.scenario")),
    ("fig8", include_str!("../scenarios/fig8.scenario")),
];

fn load_scenario(name: &str) -> anyhow::Result<Scenario> {
    let path = Path::new(name);
    let text = if path.exists() {
        std::fs::read_to_string(path).with_context(|| format!("cannot read {name}"))?
    } else if let Some((_, text)) = BUNDLED.iter().find(|(n, _)| *n == name) {
        (*text).to_string()
    } else {
        bail!("no scenario file {name:?} and no bundled scenario of that name (table1, fig4, fig8)");
    };
    toml::from_str(&text).with_context(|| format!("invalid scenario {name}"))
}

fn validate(args: ValidateArgs, json: bool) -> CmdResult {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(r) = args.reps {
        scenario.replications = r;
    }
    if let Some(s) = args.seed {
        scenario.seed = s;
    }
    let report = run_scenario(&scenario)?;
    let formats = if scenario.outputs.is_empty() {
        vec![OutputFormat::Csv, OutputFormat::Json]
    } else {
        scenario.outputs.clone()
    };
    let paths = write_report(&report, &args.out, &formats, args.deterministic_names)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?);
    } else {
        report::print_rows(&scenario, &report.rows);
        for p in paths {
            println!("output = {}", p.display());
        }
    }
    Ok(())
}

fn capacity(cmd: CapacityCmd, json: bool) -> CmdResult {
    let mut rep = Report::default();
    match cmd {
        CapacityCmd::Equivalent {
            c_edge,
            q,
            rho_edge,
            rho_equal,
            rho_cloud,
            tau,
        } => {
            let rho_cloud = if rho_equal {
                rho_edge
            } else {
                rho_cloud.expect("clap requires one")
            };
            rep.num("c_edge", c_edge);
            rep.num("q", q);
            rep.num("rho_edge", rho_edge);
            rep.num("rho_cloud", rho_cloud);
            rep.num("tau", tau);
            rep.num("c_cloud", cloud_capacity_equivalent(c_edge, rho_edge, tau, q, rho_cloud)?);
        }
        CapacityCmd::Rule { lambda, k } => {
            let (e, c) = empirical_rule_capacities(lambda, k)?;
            rep.num("lambda", lambda);
            rep.num("k", f64::from(k));
            rep.num("c_edge", e);
            rep.num("c_cloud", c);
        }
        CapacityCmd::Dtrp {
            capacity,
            rho,
            tau,
            q,
            area,
            velocity,
            gos,
            lambda,
            mode,
        } => {
            let spec = DtrpSpec {
                capacity,
                rho,
                tau,
                q,
                area,
                velocity,
                gos,
            };
            for (k, v) in [
                ("capacity", capacity),
                ("rho", rho),
                ("tau", tau),
                ("q", q),
                ("area", area),
                ("velocity", velocity),
                ("gos", gos),
                ("lambda", lambda),
            ] {
                rep.num(k, v);
            }
            rep.num("response_time", dtrp_response_time(&spec, lambda, mode)?);
        }
        CapacityCmd::Pack {
            trace,
            topology,
            policy,
            site_assign,
            seed,
        } => {
            let vms = load_vm_trace(&trace)?;
            let summary = trace_summary(&vms).expect("loader rejects empty traces");
            let packed = simulate_packing(&vms, &topology, policy, site_assign, SeededStream::new(seed, 0))?;
            if json {
                let doc = serde_json::json!({ "trace": summary, "report": packed });
                println!("{}", serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)?);
                return Ok(());
            }
            rep.num("vms", summary.count as f64);
            rep.num("mean_cores", summary.mean_cores);
            rep.num("min_cores", f64::from(summary.min_cores));
            rep.num("max_cores", f64::from(summary.max_cores));
            rep.num("total_servers", f64::from(topology.total_servers()));
            rep.num("peak_servers_used", f64::from(packed.peak_servers_used));
            rep.num("peak_cores_used", packed.peak_cores_used as f64);
            rep.num("rejected_or_queued", packed.rejected_or_queued as f64);
            rep.num("queued_count", packed.queued_count as f64);
            rep.num("mean_placement_delay", packed.mean_placement_delay);
            rep.num("normalized_delay", packed.normalized_delay);
        }
        CapacityCmd::Plan { config, seed } => {
            let file = ConfigFile::load(&config)?;
            let cap = file
                .capacity
                .as_ref()
                .ok_or_else(|| anyhow!("{} has no [capacity] section", config.display()))?;
            let seed = seed.or(file.simulation.seed).unwrap_or(0);
            rep.num("q", cap.q);
            rep.num("factor", edge_overprovision_factor(cap.q)?);
            if let Some(c_edge) = cap.c_edge {
                let rho_edge = cap.rho_edge.unwrap_or(0.5);
                let rho_cloud = cap.rho_cloud.unwrap_or(rho_edge);
                rep.num("c_edge", c_edge);
                rep.num(
                    "c_cloud",
                    cloud_capacity_equivalent(c_edge, rho_edge, cap.tau, cap.q, rho_cloud)?,
                );
            }
            if !cap.edge_cores.is_empty() {
                let need = |v: Option<u32>, name: &str| v.ok_or_else(|| anyhow!("capacity: {name} is required for a sweep"));
                let cloud = Topology::cloud(
                    need(cap.cloud_servers, "cloud_servers")?,
                    need(cap.cloud_cores, "cloud_cores")?,
                );
                let edge = Topology::edge(need(cap.k_sites, "k_sites")?, 1, cloud.cores_per_server);
                let vms = match &cap.trace {
                    Some(p) => load_vm_trace(p)?,
                    None => {
                        let spec = SyntheticTraceSpec::for_utilization(
                            cap.synthetic_count.unwrap_or(100_000),
                            cap.synthetic_rho.unwrap_or(0.9),
                            cloud.total_cores() as f64,
                            1.0,
                        );
                        generate_synthetic_trace(&spec, SeededStream::new(seed, 0))?
                    }
                };
                let sweep = edge_size_sweep(
                    &vms,
                    &cloud,
                    &edge,
                    &cap.edge_cores,
                    cap.policy,
                    SiteAssign::Uniform,
                    SeededStream::new(seed, 1),
                    cap.tolerance,
                )?;
                rep.num(
                    "model_size",
                    f64::from(cloud.cores_per_server) * edge_overprovision_factor(cap.q)?,
                );
                rep.num("cloud_normalized_delay", sweep.cloud.normalized_delay);
                for row in &sweep.rows {
                    rep.num(
                        &format!("relative_error_{}", row.cores_per_server),
                        row.report.relative_error_vs_cloud.unwrap_or(f64::NAN),
                    );
                }
                match sweep.equivalence_size {
                    Some(s) => rep.num("equivalence_size", f64::from(s)),
                    None => rep.text("equivalence_size", "none"),
                }
            }
        }
    }
    rep.print(json);
    Ok(())
}
