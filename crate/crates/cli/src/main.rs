use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use qswitch::causal_sdp::{is_causally_separable, random_robustness, Separability};
use qswitch::hardware::{compile_unitary, write_recipe_csv};
use qswitch::matstack::HermitianOperator;
use qswitch::processes::{
    dephase_control, switch_process, white_noise_process, ProcessMatrix, PureState, UnitaryGate,
};
use qswitch::simulator::{figure4_rows, run_experiment, write_figure4_csv, NoiseModel};
use qswitch::witness::{
    corrected_separable_bound_with, optimize_witness_report, BoundSettings, CausalWitness,
};

const EXIT_NONSEPARABLE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_SOLVER: u8 = 3;

const DEFAULT_GATES: &str = "IXYZPQ";
const DEFAULT_OUT: &str = "out";
const DEFAULT_TOL: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(name = "qswitch", version, about = "Causal witnesses for the quantum switch")]
struct Cli {
    /// JSON file with run parameters; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print a machine-readable JSON summary on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize a measurable witness for the ideal switch.
    Witness {
        #[command(flatten)]
        gates: GateArgs,
    },
    /// Decide causal separability of a process matrix file.
    Check {
        process: PathBuf,
        /// Decomposition residual accepted as separable.
        #[arg(long)]
        tol: Option<f64>,
        /// Also compute the random robustness.
        #[arg(long)]
        robustness: bool,
        #[command(flatten)]
        gates: GateArgs,
    },
    /// Simulate the experiment for a witness file.
    Simulate {
        witness: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Override the separable bound stored in the witness file.
        #[arg(long, allow_negative_numbers = true)]
        bound: Option<f64>,
    },
    /// Separable bound corrected for prism misalignment.
    Bound {
        witness: PathBuf,
        /// Maximum prism angle error in degrees.
        #[arg(long)]
        uncertainty: Option<f64>,
        /// Monte-Carlo interior samples.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a process matrix as JSON.
    Process {
        #[arg(value_enum)]
        kind: ProcessKind,
        /// Coherence of the control qubit.
        #[arg(long)]
        visibility: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct GateArgs {
    /// Gate set, e.g. `IXYZPQ` or `I,X,Z`.
    #[arg(long)]
    gates: Option<String>,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    #[arg(long)]
    visibility: Option<f64>,
    /// Prism angle jitter in degrees.
    #[arg(long)]
    jitter: Option<f64>,
    /// Photons per measurement setting.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Expectation values only, no photon counting.
    #[arg(long)]
    analytic: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum ProcessKind {
    /// Control in |+⟩.
    Switch,
    /// Control in |0⟩.
    AThenB,
    /// Control in |1⟩.
    BThenA,
    White,
}

/// Resolved parameters of a run; also the format accepted by `--config`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gates: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    visibility: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    jitter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    analytic: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    uncertainty: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    process: Option<ProcessKind>,
}

impl RunConfig {
    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    fn noise(&self) -> NoiseModel {
        let d = NoiseModel::default();
        NoiseModel {
            visibility: self.visibility.unwrap_or(d.visibility),
            angle_jitter_deg: self.jitter.unwrap_or(d.angle_jitter_deg),
            shots_per_setting: self.shots.unwrap_or(d.shots_per_setting),
            rng_seed: self.seed.unwrap_or(d.rng_seed),
            analytic: self.analytic.unwrap_or(d.analytic),
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    fn gate_set(&self) -> &str {
        self.gates.as_deref().unwrap_or(DEFAULT_GATES)
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

/// Merges flags over the config file and fills defaults for the chosen command.
fn resolve(cli: &Cli) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut cfg = RunConfig {
        out: pick(cli.out.clone(), file.out.clone()).or_else(|| Some(PathBuf::from(DEFAULT_OUT))),
        ..RunConfig::default()
    };
    match &cli.command {
        Command::Witness { gates } => {
            cfg.command = Some("witness".into());
            cfg.gates = Some(pick(gates.gates.clone(), file.gates).unwrap_or_else(|| DEFAULT_GATES.into()));
        }
        Command::Check {
            process,
            tol,
            robustness: _,
            gates,
        } => {
            cfg.command = Some("check".into());
            cfg.input = Some(process.clone());
            cfg.tol = Some(pick(*tol, file.tol).unwrap_or(DEFAULT_TOL));
            cfg.gates = Some(pick(gates.gates.clone(), file.gates).unwrap_or_else(|| DEFAULT_GATES.into()));
        }
        Command::Simulate { witness, noise, bound } => {
            cfg.command = Some("simulate".into());
            cfg.input = Some(witness.clone());
            let merged = RunConfig {
                visibility: pick(noise.visibility, file.visibility),
                jitter: pick(noise.jitter, file.jitter),
                shots: pick(noise.shots, file.shots),
                seed: pick(noise.seed, file.seed),
                analytic: if noise.analytic { Some(true) } else { file.analytic },
                ..RunConfig::default()
            }
            .noise();
            cfg.visibility = Some(merged.visibility);
            cfg.jitter = Some(merged.angle_jitter_deg);
            cfg.shots = Some(merged.shots_per_setting);
            cfg.seed = Some(merged.rng_seed);
            cfg.analytic = Some(merged.analytic);
            cfg.bound = pick(*bound, file.bound);
        }
        Command::Bound {
            witness,
            uncertainty,
            samples,
            seed,
        } => {
            let d = BoundSettings::default();
            cfg.command = Some("bound".into());
            cfg.input = Some(witness.clone());
            cfg.uncertainty = Some(pick(*uncertainty, file.uncertainty).unwrap_or(1.0));
            cfg.samples = Some(pick(*samples, file.samples).unwrap_or(d.mc_samples));
            cfg.seed = Some(pick(*seed, file.seed).unwrap_or(d.seed));
        }
        Command::Process { kind, visibility } => {
            cfg.command = Some("process".into());
            cfg.process = Some(*kind);
            cfg.visibility = Some(pick(*visibility, file.visibility).unwrap_or(1.0));
        }
    }
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = format!("{}_config.json", cfg.command.as_deref().unwrap_or("run"));
    write_json(&dir.join(name), cfg)?;
    Ok(dir)
}

fn read_witness(path: &Path) -> Result<CausalWitness> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    CausalWitness::from_json(&text).with_context(|| format!("parsing witness {}", path.display()))
}

fn read_process(path: &Path) -> Result<ProcessMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let op: HermitianOperator =
        serde_json::from_str(&text).with_context(|| format!("parsing process {}", path.display()))?;
    ProcessMatrix::new(op).with_context(|| format!("validating process {}", path.display()))
}

fn ideal_switch() -> Result<ProcessMatrix> {
    Ok(switch_process(&PureState::zero(), &PureState::plus())?)
}

fn cmd_witness(cfg: &RunConfig, json_out: bool) -> Result<u8> {
    let gates = UnitaryGate::parse_set(cfg.gate_set())?;
    let dir = prepare_out(cfg)?;
    let report = optimize_witness_report(&ideal_switch()?, &gates)?;
    fs::write(dir.join("witness.json"), report.witness.to_json()? + "\n")?;
    let recipes = gates.iter().map(compile_unitary).collect::<qswitch::Result<Vec<_>>>()?;
    write_recipe_csv(&recipes, create(&dir.join("recipes.csv"))?)?;

    let summary = json!({
        "pairs": report.witness.pair_count(),
        "optimum": report.raw_optimum,
        "value": report.value,
        "repair_shift": report.repair_shift,
        "sparsified": report.sparsified,
        "diagnostics": report.diagnostics,
    });
    write_json(&dir.join("witness_summary.json"), &summary)?;
    if json_out {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!("pairs: {}", report.witness.pair_count());
        println!("optimum: {:.6}", report.raw_optimum);
        println!("witness value on ideal switch: {:.6}", report.value);
        println!("wrote {}", dir.join("witness.json").display());
    }
    Ok(0)
}

fn cmd_check(cfg: &RunConfig, robustness: bool, json_out: bool) -> Result<u8> {
    let input = cfg.input.as_ref().context("missing process file")?;
    let w = read_process(input)?;
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let dir = prepare_out(cfg)?;
    let verdict = is_causally_separable(&w, tol)?;

    let mut summary = match &verdict {
        Separability::Separable(d) => json!({
            "separable": true,
            "q": d.q,
            "residual": d.residual,
        }),
        Separability::Nonseparable(c) => {
            let gates = UnitaryGate::parse_set(cfg.gate_set())?;
            let measurable = match optimize_witness_report(&w, &gates) {
                Ok(r) => Some((r.value, r.witness.pair_count())),
                Err(qswitch::Error::NoWitnessPossible { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            json!({
                "separable": false,
                "certificate_value": c.value,
                "cone_minima": c.cone_minima,
                "measurable_witness_value": measurable.map(|m| m.0),
                "measurable_witness_pairs": measurable.map(|m| m.1),
                "diagnostics": c.diagnostics,
            })
        }
    };
    if robustness {
        let r = random_robustness(&w)?;
        summary["robustness"] = json!(r.r_star);
    }
    write_json(&dir.join("check.json"), &summary)?;

    if json_out {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        match &verdict {
            Separability::Separable(d) => {
                println!("separable: q = {:.6} (residual {:.2e})", d.q, d.residual)
            }
            Separability::Nonseparable(c) => {
                println!("nonseparable: certificate value {:.6}", c.value);
                match summary["measurable_witness_value"].as_f64() {
                    Some(v) => println!(
                        "measurable witness value {:.6} over {} pairs",
                        v, summary["measurable_witness_pairs"]
                    ),
                    None => println!("no measurable witness over gate set {}", cfg.gate_set()),
                }
            }
        }
        if let Some(r) = summary.get("robustness") {
            println!("random robustness: {:.6}", r.as_f64().unwrap_or(f64::NAN));
        }
    }
    Ok(if verdict.is_separable() { 0 } else { EXIT_NONSEPARABLE })
}

fn cmd_simulate(cfg: &RunConfig, json_out: bool) -> Result<u8> {
    let input = cfg.input.as_ref().context("missing witness file")?;
    let mut witness = read_witness(input)?;
    if let Some(b) = cfg.bound {
        witness = witness.with_separable_bound(b);
    }
    let noise = cfg.noise();
    noise.validate()?;
    let dir = prepare_out(cfg)?;
    let result = run_experiment(&witness, &noise)?;
    let rows = figure4_rows(&witness, &result);
    write_figure4_csv(&rows, create(&dir.join("figure4.csv"))?)?;
    result.stokes_table().write_csv(create(&dir.join("stokes.csv"))?)?;
    let summary = result.summary();
    write_json(&dir.join("summary.json"), &summary)?;

    if json_out {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!("<S> = {:.6} ± {:.6}", summary.witness_value, summary.std_error);
        match summary.sigma_from_bound {
            Some(s) => println!("{:.2} σ below separable bound {}", s, summary.separable_bound),
            None if summary.witness_value < summary.separable_bound => {
                println!("below separable bound {} (no shot noise)", summary.separable_bound)
            }
            None => println!("not below separable bound {}", summary.separable_bound),
        }
    }
    Ok(0)
}

fn cmd_bound(cfg: &RunConfig, json_out: bool) -> Result<u8> {
    let input = cfg.input.as_ref().context("missing witness file")?;
    let witness = read_witness(input)?;
    let uncertainty = cfg.uncertainty.unwrap_or(1.0);
    let settings = BoundSettings {
        mc_samples: cfg.samples.unwrap_or(BoundSettings::default().mc_samples),
        seed: cfg.seed.unwrap_or(0),
    };
    let dir = prepare_out(cfg)?;
    let report = corrected_separable_bound_with(&witness, uncertainty, &settings)?;
    let summary = json!({
        "uncertainty_deg": uncertainty,
        "bound": report.bound,
        "probes": report.probes,
        "worst_errors": report.worst_errors,
    });
    write_json(&dir.join("bound.json"), &summary)?;
    if json_out {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!("corrected separable bound at {uncertainty}°: {:.6}", report.bound);
    }
    Ok(0)
}

fn cmd_process(cfg: &RunConfig, json_out: bool) -> Result<u8> {
    let kind = cfg.process.context("missing process kind")?;
    let visibility = cfg.visibility.unwrap_or(1.0);
    let target = PureState::zero();
    let w = match kind {
        ProcessKind::Switch => switch_process(&target, &PureState::plus())?,
        ProcessKind::AThenB => switch_process(&target, &PureState::zero())?,
        ProcessKind::BThenA => switch_process(&target, &PureState::one())?,
        ProcessKind::White => white_noise_process(),
    };
    let w = dephase_control(&w, visibility)?;
    let dir = prepare_out(cfg)?;
    let name = serde_json::to_value(kind)?;
    let path = dir.join(format!("{}.json", name.as_str().unwrap_or("process")));
    write_json(&path, w.operator())?;
    if json_out {
        println!("{}", json!({ "path": path }));
    } else {
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use qswitch::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::SolverFailure(_) | E::NoConvergence { .. } | E::Inconclusive { .. } | E::NoWitnessPossible { .. } => {
                    EXIT_SOLVER
                }
                _ => EXIT_USAGE,
            };
        }
    }
    EXIT_USAGE
}

fn run(cli: &Cli) -> Result<u8> {
    let cfg = resolve(cli)?;
    match &cli.command {
        Command::Witness { .. } => cmd_witness(&cfg, cli.json),
        Command::Check { robustness, .. } => cmd_check(&cfg, *robustness, cli.json),
        Command::Simulate { .. } => cmd_simulate(&cfg, cli.json),
        Command::Bound { .. } => cmd_bound(&cfg, cli.json),
        Command::Process { .. } => cmd_process(&cfg, cli.json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            match e.chain().find_map(|c| c.downcast_ref::<qswitch::Error>()) {
                Some(qswitch::Error::NoWitnessPossible { optimum }) => {
                    eprintln!("error: no witness possible for gate set (optimum {optimum:.3e})")
                }
                _ => eprintln!("error: {e:#}"),
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
