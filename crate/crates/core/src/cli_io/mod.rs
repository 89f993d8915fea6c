//! Command-line runs: configuration, run directories and record sinks.
//!
//! A run directory holds `config.resolved` (the full TOML config with the code
//! version), `observables.jsonl` (schema `observables.v1`: one record per
//! emitted state with `replica, step, n_loops, n, s, n_psi, energy{...},
//! acceptance{...}`), `verdicts.jsonl` (schema `verdicts.v1`: one record per
//! check with `status` pass, fail or info) and optional `snapshot.v1` files.
//! Every artifact depends only on the config, the seed and the code version.

pub mod config;
pub mod snapshot;

pub use config::{Resolved, RunConfig};
pub use snapshot::{SnapshotFile, SnapshotHeader, SNAPSHOT_FORMAT};

use crate::configuration::{Configuration, Restriction};
use crate::error::{Error, Result};
use crate::gibbs_kernels::{chain_for, estimate_z, sample_gn, AcceptanceRates, Chain, KernelKind};
use crate::interaction::{hamiltonian, EnergyBreakdown};
use crate::loop_measures::{measure_mass, sample_dirichlet, sample_free, LoopMeasureSpec};
use crate::loop_paths::Domain;
use crate::rng::stream;
use crate::stats::{autocorrelation_factor, batch_means};
use crate::verification as ver;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const OBSERVABLES_SCHEMA: &str = "observables.v1";
pub const VERDICTS_SCHEMA: &str = "verdicts.v1";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STATISTICAL: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "loopsoup", version, about = "Interacting Brownian loop soup sampler")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides `seeds.master`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Replica count (overrides `seeds.replicas`).
    #[arg(long, global = true)]
    pub replicas: Option<u32>,
    /// Config override `section.key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Dir,
    Free,
    Exc,
}

impl From<KernelArg> for KernelKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Dir => KernelKind::Dirichlet,
            KernelArg::Free => KernelKind::Free,
            KernelArg::Exc => KernelKind::Excursion,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    FreeGas,
    Consistency,
    Fkg,
    Tails,
    Tempered,
    ExpMoment,
    KernelEquiv,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Poisson loop soup with the μ-weighted intensity.
    SampleFree,
    /// Poisson loop soup of loops contained in the box.
    SampleDirichlet,
    /// Metropolis–Hastings run of a Gibbs kernel.
    Mcmc {
        #[arg(long, value_enum)]
        kernel: KernelArg,
    },
    /// Partition function by direct Monte Carlo.
    EstimateZ {
        #[arg(long, value_enum)]
        kind: Option<KernelArg>,
    },
    /// Upper estimate of the single-loop decay rate.
    EstimateCphi,
    /// Single-loop weights over `verify.decay_js` with a fitted rate.
    DecayFit,
    /// Statistical test suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Periodized finite-volume sample.
    GnSample,
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::SampleFree => "sample-free".into(),
            Command::SampleDirichlet => "sample-dirichlet".into(),
            Command::Mcmc { kernel } => format!("mcmc-{}", KernelKind::from(*kernel).label()),
            Command::EstimateZ { .. } => "estimate-z".into(),
            Command::EstimateCphi => "estimate-cphi".into(),
            Command::DecayFit => "decay-fit".into(),
            Command::Verify { suite } => format!("verify-{}", suite.to_possible_value().expect("named").get_name()),
            Command::GnSample => "gn-sample".into(),
        }
    }
}

/// One line of `observables.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableRecord {
    pub schema: &'static str,
    pub code_version: &'static str,
    pub replica: u32,
    pub step: u64,
    pub n_loops: usize,
    pub n: usize,
    pub s: f64,
    pub n_psi: f64,
    pub energy: EnergyBreakdown,
    pub acceptance: AcceptanceRates,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl Status {
    fn from_bool(b: bool) -> Self {
        if b {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// One line of `verdicts.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub schema: &'static str,
    pub code_version: &'static str,
    pub command: String,
    pub replica: u32,
    pub name: String,
    pub status: Status,
    pub details: serde_json::Value,
}

#[derive(Default)]
struct ReplicaOut {
    observables: Vec<ObservableRecord>,
    verdicts: Vec<(String, Status, serde_json::Value)>,
    snapshot: Option<SnapshotFile>,
}

impl ReplicaOut {
    fn verdict(&mut self, name: &str, status: Status, details: impl Serialize) {
        self.verdicts.push((name.into(), status, serde_json::to_value(details).expect("serializable details")));
    }
}

/// Outcome of a CLI run.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub verdicts: Vec<Verdict>,
    pub exit_code: i32,
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Domain(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    match run(&cli) {
        Ok(out) => {
            for v in &out.verdicts {
                if v.status != Status::Info {
                    println!("[{}] {} (replica {})", if v.status == Status::Pass { "PASS" } else { "FAIL" }, v.name, v.replica);
                }
            }
            println!("run directory: {}", out.dir.display());
            out.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Load and resolve the configuration named by `common`.
pub fn load_config(common: &Common) -> Result<RunConfig> {
    let base = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut cfg = base.with_overrides(&common.sets)?;
    if let Some(s) = common.seed {
        cfg.seeds.master = s;
    }
    if let Some(o) = &common.out {
        cfg.output.dir = o.display().to_string();
    }
    if let Some(r) = common.replicas {
        cfg.seeds.replicas = r;
    }
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<RunOutcome> {
    let cfg = load_config(&cli.common)?;
    let res = cfg.resolve()?;
    let boundary = match &cfg.domain.boundary {
        Some(p) => {
            let f = fs::File::open(p).map_err(|e| Error::Config { path: "domain.boundary".into(), msg: e.to_string() })?;
            let snap = SnapshotFile::read(std::io::BufReader::new(f))?;
            if snap.header.dim != res.params.dim || snap.header.steps_per_beta != cfg.grid.m {
                return Err(Error::Config { path: "domain.boundary".into(), msg: "snapshot grid does not match the model".into() });
            }
            snap.config
        }
        None => Configuration::empty(),
    };
    let dir = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.resolved"), cfg.to_resolved_toml())?;
    let name = cli.command.name();
    let outs: Vec<ReplicaOut> = (0..cfg.seeds.replicas).into_par_iter().map(|r| run_replica(&cli.command, &cfg, &res, &boundary, r)).collect::<Result<_>>()?;
    write_outputs(&dir, &name, &cfg, &outs)
}

fn write_outputs(dir: &Path, name: &str, cfg: &RunConfig, outs: &[ReplicaOut]) -> Result<RunOutcome> {
    let mut obs = BufWriter::new(fs::File::create(dir.join("observables.jsonl"))?);
    let mut ver_w = BufWriter::new(fs::File::create(dir.join("verdicts.jsonl"))?);
    let mut verdicts = Vec::new();
    let resolved = cfg.to_echo_toml();
    for (w, schema) in [(&mut obs, OBSERVABLES_SCHEMA), (&mut ver_w, VERDICTS_SCHEMA)] {
        let head = json!({ "schema": schema, "header": true, "code_version": env!("CARGO_PKG_VERSION"), "command": name, "config": resolved });
        serde_json::to_writer(&mut *w, &head).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    for (r, out) in outs.iter().enumerate() {
        for rec in &out.observables {
            serde_json::to_writer(&mut obs, rec).map_err(|e| Error::Format(e.to_string()))?;
            obs.write_all(b"\n")?;
        }
        for (vname, status, details) in &out.verdicts {
            let v = Verdict {
                schema: VERDICTS_SCHEMA,
                code_version: env!("CARGO_PKG_VERSION"),
                command: name.to_string(),
                replica: r as u32,
                name: vname.clone(),
                status: *status,
                details: details.clone(),
            };
            serde_json::to_writer(&mut ver_w, &v).map_err(|e| Error::Format(e.to_string()))?;
            ver_w.write_all(b"\n")?;
            verdicts.push(v);
        }
        if let (Some(snap), true) = (&out.snapshot, cfg.output.snapshots) {
            let len = snap.encoded_len() as u64;
            if len <= cfg.output.snapshot_max_bytes {
                let f = fs::File::create(dir.join(format!("replica-{r:03}.snapshot.v1")))?;
                snap.write(BufWriter::new(f))?;
            } else {
                log::warn!("snapshot of replica {r} is {len} bytes, above the cap; skipped");
            }
        }
    }
    obs.flush()?;
    ver_w.flush()?;
    let failed = verdicts.iter().any(|v| v.status == Status::Fail);
    Ok(RunOutcome { dir: dir.to_path_buf(), verdicts, exit_code: if failed { EXIT_STATISTICAL } else { EXIT_PASS } })
}

fn record(replica: u32, step: u64, conf: &Configuration, spec: &LoopMeasureSpec, psi: crate::configuration::Psi, acceptance: AcceptanceRates) -> Result<ObservableRecord> {
    let dom = spec.domain();
    let energy = hamiltonian(conf, dom, &spec.params().potential, spec.grid(), Restriction::StartedIn)?;
    Ok(ObservableRecord {
        schema: OBSERVABLES_SCHEMA,
        code_version: env!("CARGO_PKG_VERSION"),
        replica,
        step,
        n_loops: conf.len(),
        n: conf.n_in(dom),
        s: conf.s_in(dom),
        n_psi: conf.n_psi(dom, psi) + 0.0,
        energy,
        acceptance,
    })
}

fn snapshot_of(conf: Configuration, res: &Resolved) -> SnapshotFile {
    SnapshotFile::new(conf, res.params.dim, res.params.beta, res.spec.grid().steps_per_beta()).with_run_config(res.resolved_toml.clone())
}

fn run_replica(cmd: &Command, cfg: &RunConfig, res: &Resolved, boundary: &Configuration, r: u32) -> Result<ReplicaOut> {
    let seed = cfg.seeds.master;
    let mut rng = stream(seed, r, &cmd.name());
    let spec = &res.spec;
    let v = &cfg.verify;
    let m = cfg.grid.m;
    let mut out = ReplicaOut::default();
    match cmd {
        Command::SampleFree | Command::SampleDirichlet => {
            let conf = if matches!(cmd, Command::SampleFree) { sample_free(spec, &mut rng) } else { sample_dirichlet(spec, &mut rng) };
            out.observables.push(record(r, 0, &conf, spec, res.mcmc.psi, AcceptanceRates::default())?);
            out.verdict("tail_certified", Status::Info, json!({ "certified": spec.tail_certified(), "bound": spec.mass_tail_bound(), "mass": measure_mass(spec) }));
            out.snapshot = Some(snapshot_of(conf, res));
        }
        Command::Mcmc { kernel } => {
            let kind = KernelKind::from(*kernel);
            let mut chain = chain_for(kind, spec, boundary, res.mcmc, rng)?;
            let psi = res.mcmc.psi;
            let mut recs = Vec::new();
            let rep = chain.run(|c, o| {
                recs.push(ObservableRecord {
                    schema: OBSERVABLES_SCHEMA,
        code_version: env!("CARGO_PKG_VERSION"),
                    replica: r,
                    step: o.step,
                    n_loops: o.n_loops,
                    n: o.n,
                    s: o.s,
                    n_psi: o.n_psi + 0.0,
                    energy: o.energy,
                    acceptance: o.acceptance,
                });
                let _ = (c, psi);
                Ok(())
            })?;
            chain.verify_cache()?;
            out.observables = recs;
            out.verdict(
                "run_summary",
                Status::Info,
                json!({
                    "kernel": kind.label(),
                    "retained": rep.retained,
                    "burn_in": rep.burn_in,
                    "thinning": rep.thinning,
                    "acceptance": rep.acceptance,
                    "mean_n": batch_means(&rep.traces.n, 20),
                    "tau_n": autocorrelation_factor(&rep.traces.n, 20),
                }),
            );
            out.verdict("energy_cache", Status::Pass, json!({ "cached": chain.energy().total }));
            out.snapshot = Some(snapshot_of(chain.configuration(), res));
        }
        Command::EstimateZ { kind } => {
            let kind = match kind {
                Some(k) => KernelKind::from(*k),
                None => match v.kind.as_str() {
                    "free" => KernelKind::Free,
                    "exc" => KernelKind::Excursion,
                    _ => KernelKind::Dirichlet,
                },
            };
            let z = estimate_z(spec, boundary, v.samples, kind, res.mcmc.rejection_cap, &mut rng)?;
            out.verdict("z_estimate", Status::Info, json!({ "kind": kind.label(), "value": z.value, "se": z.se }));
            if boundary.is_empty() {
                let lower = (-measure_mass(&spec.with_mu(0.0)?)).exp();
                out.verdict("z_empty_bound", Status::from_bool(z.value + v.z * z.se >= lower), json!({ "value": z.value, "se": z.se, "lower": lower }));
            }
        }
        Command::EstimateCphi => {
            let c = ver::estimate_cphi_bound(&res.params, m, v.samples, &mut rng)?;
            let stable = res.params.check_mu_against(c.value);
            out.verdict("cphi_bound", Status::Info, json!({ "value": c.value, "se": c.se, "beta_mu_below_bound": stable }));
        }
        Command::DecayFit => {
            let fit = ver::decay_fit(&res.params, m, &v.decay_js, v.samples, &mut rng)?;
            let c = ver::estimate_cphi_bound(&res.params, m, v.samples, &mut rng)?;
            out.verdict("decay_fit", Status::Info, &fit);
            let se = (fit.rate.se.powi(2) + c.se.powi(2)).sqrt();
            let ok = fit.rate.value + v.z * se >= c.value;
            out.verdict("rate_vs_cphi_bound", Status::from_bool(ok), json!({ "rate": fit.rate, "bound": c }));
        }
        Command::GnSample => {
            let g = sample_gn(cfg.gn.n, spec, cfg.gn.window, res.mcmc, &mut rng)?;
            let side = (cfg.gn.n * (2 * cfg.gn.window + 1)) as f64;
            let shift: Vec<f64> = g.shift.iter().map(|&x| x as f64).collect();
            let obs_dom = Domain::centered_cube(res.params.dim, side)?.translated(&shift);
            let obs_spec = spec.with_domain(obs_dom)?;
            out.observables.push(record(r, res.mcmc.steps, &g.config, &obs_spec, res.mcmc.psi, AcceptanceRates::default())?);
            let per_tile: Vec<usize> = g.tiles.iter().map(|(_, c)| c.particles()).collect();
            out.verdict("gn_sample", Status::Info, json!({ "shift": g.shift, "tile_particles": per_tile }));
            out.snapshot = Some(snapshot_of(g.config, res));
        }
        Command::Verify { suite } => verify_suite(*suite, cfg, res, r, &mut out)?,
    }
    Ok(out)
}

fn verify_suite(suite: Suite, cfg: &RunConfig, res: &Resolved, r: u32, out: &mut ReplicaOut) -> Result<()> {
    let seed = cfg.seeds.master;
    let tag = |t: &str| format!("verify-{t}");
    let spec = &res.spec;
    let v = &cfg.verify;
    let m = cfg.grid.m;
    let (z, alpha) = (v.z, v.alpha);
    match suite {
        Suite::FreeGas => {
            if !res.params.potential.is_zero() {
                return Err(Error::Config { path: "model.potential.family".into(), msg: "the free-gas suite needs family = none".into() });
            }
            let rep = ver::free_gas_test(spec, res.mcmc, z, alpha, stream(seed, r, &tag("free-gas-chain")))?;
            out.verdict("free_kernel_mean", Status::from_bool(rep.mean_passes), &rep);
            out.verdict("free_kernel_histogram", Status::from_bool(rep.histogram_passes), rep.histogram);
            // Dirichlet kernel against the exact Dirichlet Poisson sampler.
            let mut chain = Chain::dirichlet(spec, &Configuration::empty(), res.mcmc, stream(seed, r, &tag("free-gas-dir")))?;
            let mut a = ver::Ensemble::default();
            chain.run(|c, _| {
                let o = ver::window_observables(&c.configuration(), spec, spec.domain())?;
                a.n.push(o.0);
                a.s.push(o.1);
                a.h.push(o.2);
                Ok(())
            })?;
            let mut rng = stream(seed, r, &tag("free-gas-ref"));
            let mut b = ver::Ensemble::default();
            for _ in 0..a.len().max(v.samples) {
                let o = ver::window_observables(&sample_dirichlet(spec, &mut rng), spec, spec.domain())?;
                b.n.push(o.0);
                b.s.push(o.1);
                b.h.push(o.2);
            }
            let tau = autocorrelation_factor(&a.n, 20);
            let rep = ver::compare_ensembles(KernelKind::Dirichlet, &a, &b, tau, alpha);
            out.verdict("dirichlet_kernel_vs_sampler", Status::from_bool(rep.passes), &rep);
        }
        Suite::Consistency => {
            for inner in [KernelKind::Dirichlet, KernelKind::Excursion] {
                let rep = ver::consistency_test(spec, &res.window, res.mcmc, inner, v.inner_steps, alpha, stream(seed, r, &tag(&format!("consistency-{}", inner.label()))))?;
                out.verdict(&format!("consistency_{}", inner.label()), Status::from_bool(rep.passes), &rep);
            }
        }
        Suite::Fkg => {
            let mut ph_rng = stream(seed, r, &tag("fkg-ph"));
            let dom = spec.domain().clone();
            let rep = ver::fkg_test(spec, res.mcmc, v.samples, z, |c| c.n_in(&dom) as f64, stream(seed, r, &tag("fkg-n")), &mut ph_rng)?;
            out.verdict("fkg_n", Status::from_bool(rep.passes), &rep);
            let rep = ver::fkg_test(spec, res.mcmc, v.samples, z, |c| c.count_long(&dom, 2) as f64, stream(seed, r, &tag("fkg-long")), &mut ph_rng)?;
            out.verdict("fkg_long_loops", Status::from_bool(rep.passes), &rep);
        }
        Suite::Tails => {
            let mut rng = stream(seed, r, &tag("tails"));
            for &j in &v.tail_js {
                let rep = ver::diameter_tail_test(j, &res.params, m, v.samples, v.tail_points, z, &mut rng)?;
                out.verdict(&format!("diameter_tail_j{j}"), Status::from_bool(rep.passes), &rep);
            }
        }
        Suite::Tempered => {
            let t = &cfg.tempered;
            let mut rng = stream(seed, r, &tag("tempered-calibration"));
            let ts = ver::calibrate_tempered(spec, t.alpha, t.eps, t.n_max, t.calibration_samples, &mut rng)?;
            out.verdict("tempered_calibration", Status::Info, ts);
            for n in 1..=t.n_max {
                let sp = spec.with_domain(Domain::centered_cube(res.params.dim, n as f64)?)?;
                let mut chain = Chain::dirichlet(&sp, &Configuration::empty(), res.mcmc, stream(seed, r, &tag(&format!("tempered-{n}"))))?;
                let spec_n = ver::TemperedSpec { n_max: n, ..ts };
                let (mut total, mut members) = (0usize, 0usize);
                chain.run(|c, _| {
                    total += 1;
                    members += ver::tempered_membership(&c.configuration(), &spec_n).member as usize;
                    Ok(())
                })?;
                let freq = members as f64 / total.max(1) as f64;
                out.verdict(&format!("tempered_n{n}"), Status::from_bool(freq >= 1.0 - t.eps), json!({ "samples": total, "members": members, "frequency": freq, "required": 1.0 - t.eps }));
            }
        }
        Suite::ExpMoment => {
            let mut chain = Chain::dirichlet(spec, &Configuration::empty(), res.mcmc, stream(seed, r, &tag("exp-moment-chain")))?;
            let rep = chain.run(|_, _| Ok(()))?;
            let mut rng = stream(seed, r, &tag("exp-moment-weights"));
            let intensity = ver::ph_intensity_moment(spec, v.c, (v.samples / 10).max(50), &mut rng)?;
            let rep = ver::exp_moment_test(&rep.traces.n, v.c, intensity, z)?;
            out.verdict("exp_moment", Status::from_bool(rep.passes), &rep);
        }
        Suite::KernelEquiv => {
            let dom = spec.domain();
            let lo: Vec<f64> = dom.lower().iter().map(|x| x - 1.0).collect();
            let hi: Vec<f64> = dom.upper().iter().map(|x| x + 1.0).collect();
            let big = spec.with_domain(Domain::new(lo, hi)?)?;
            let mut rng = stream(seed, r, &tag("kernel-equiv-boundary"));
            let boundary = sample_free(&big, &mut rng);
            let rep = ver::kernel_equivalence_test(spec, &boundary, res.mcmc, alpha, stream(seed, r, &tag("kernel-equiv")))?;
            out.verdict("dirichlet_vs_excursion", Status::from_bool(rep.passes), &rep);
        }
    }
    Ok(())
}
