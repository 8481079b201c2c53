//! Command line front end: argument parsing, dispatch and output formatting.

pub mod manifest;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use ssc_core::circuit::{Extraction, Program};
use ssc_core::code::{build, validate_code, Geometry, PauliKind, Role, SubsystemCode};
use ssc_core::decoder::Decoder;
use ssc_core::error::Error;
use ssc_core::fit::fit_threshold;
use ssc_core::hamiltonian::{
    decoupling_search_with, deformation_gap_bound, spectrum, verify_ground_energy_numeric, CellQubit, DecouplingCircuit,
};
use ssc_core::lattice::{build_2d, build_3d, enumerate_faults, DefectSet, VirtualLattice};
use ssc_core::montecarlo::{self, crossing_counts, from_csv, to_csv, wilson_interval, RunConfig, SizeSetup, TPolicy};
use ssc_core::noise::NoiseVariant;
use ssc_core::schedule::{check_correct, find_schedule, Reflection};

use crate::manifest::{manifest_path, now_unix, sha256_hex, OutputDigest, RunManifest};

pub const SEED_ENV: &str = "SSC_SEED";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        let (kind, msg) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Config(m) => ("config", m),
            CliError::Runtime(m) => ("runtime", m),
        };
        json!({ "error": kind, "message": msg, "exit_code": self.exit_code() }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::UnsupportedSize(..)
            | Error::Unsupported(_)
            | Error::TooLarge(_)
            | Error::OddDefects(_)
            | Error::IndexOutOfRange { .. }
            | Error::DimensionMismatch { .. } => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Parser, Debug)]
#[command(
    name = "ssc",
    version,
    about = "Subsystem surface code simulator, decoder and analysis tools"
)]
pub struct Cli {
    /// Worker threads; defaults to available parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a code and print its layout, operators and validation report.
    BuildCode(BuildCodeArgs),
    /// Search for a correct CNOT schedule.
    FindSchedule(FindScheduleArgs),
    /// List every single fault of a syndrome window with its defects.
    EnumerateFaults(EnumerateArgs),
    /// Write the virtual lattice as CSV.
    DumpLattice(DumpLatticeArgs),
    /// Match defects on a dumped lattice.
    Decode(DecodeArgs),
    /// Failure count at a single (L, p) point.
    RunTrials(RunTrialsArgs),
    /// Failure rates over a grid of sizes and error rates.
    ThresholdScan(ScanArgs),
    /// Finite-size scaling fit of a results CSV.
    FitThreshold(FitArgs),
    /// Exact spectrum of the triangle-operator Hamiltonian.
    HamiltonianSpectrum(SpectrumArgs),
    /// Search for the circuit that decouples the gauge qubits.
    DecoupleSearch(DecoupleArgs),
}

#[derive(Args, Debug)]
pub struct BuildCodeArgs {
    #[arg(long = "L")]
    pub l: usize,
    #[arg(long, default_value = "toric")]
    pub geometry: String,
    /// Output format; only `json` is supported.
    #[arg(long, default_value = "json")]
    pub dump: String,
}

#[derive(Args, Debug)]
pub struct FindScheduleArgs {
    /// Print the round table instead of JSON.
    #[arg(long)]
    pub dump: bool,
}

#[derive(Args, Debug)]
pub struct EnumerateArgs {
    #[arg(long = "L")]
    pub l: usize,
    #[arg(long = "T")]
    pub t: usize,
    #[arg(long, default_value = "circuit")]
    pub noise: String,
    #[arg(long, default_value = "X")]
    pub sector: String,
}

#[derive(Args, Debug)]
pub struct DumpLatticeArgs {
    #[arg(long = "L")]
    pub l: usize,
    /// Syndrome rounds; ignored for code capacity.
    #[arg(long = "T")]
    pub t: Option<usize>,
    #[arg(long, default_value = "toric")]
    pub geometry: String,
    #[arg(long, default_value = "circuit")]
    pub noise: String,
    #[arg(long, default_value = "X")]
    pub sector: String,
    /// Error rate used for priors and weights.
    #[arg(long, default_value_t = 0.005)]
    pub p: f64,
    #[arg(long, default_value = "csv")]
    pub format: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    /// Lattice CSV written by `dump-lattice`.
    #[arg(long)]
    pub lattice: PathBuf,
    /// Defect node ids, separated by commas, spaces or newlines.
    #[arg(long)]
    pub defects: PathBuf,
    /// Sector of the correction operator.
    #[arg(long, default_value = "X")]
    pub sector: String,
}

#[derive(Args, Debug)]
pub struct RunTrialsArgs {
    #[arg(long, default_value = "toric")]
    pub geometry: String,
    #[arg(long, default_value = "code-capacity")]
    pub noise: String,
    #[arg(long = "L")]
    pub l: usize,
    /// Syndrome rounds; defaults to L.
    #[arg(long = "T")]
    pub t: Option<usize>,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "X")]
    pub sector: String,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long, default_value = "toric")]
    pub geometry: String,
    #[arg(long, default_value = "code-capacity")]
    pub noise: String,
    /// Comma separated sizes.
    #[arg(long = "L", default_value = "")]
    pub ls: String,
    /// Syndrome rounds; defaults to T = L.
    #[arg(long = "T")]
    pub t: Option<usize>,
    /// `start:stop:step` or a comma separated list.
    #[arg(long, default_value = "")]
    pub p: String,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "X")]
    pub sector: String,
    #[arg(long, default_value = "results.csv")]
    pub out: PathBuf,
    /// Rerun the configuration recorded in a manifest; other run flags are ignored.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Suppress per-point progress lines on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    pub results: PathBuf,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long = "L")]
    pub l: usize,
    /// Number of lowest levels to list.
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    /// Also compute the ground energy by power iteration (L = 2 only).
    #[arg(long)]
    pub numeric: bool,
}

#[derive(Args, Debug)]
pub struct DecoupleArgs {
    #[arg(long = "L", default_value_t = 4)]
    pub l: usize,
    /// Print the circuit and operator table as text.
    #[arg(long)]
    pub dump: bool,
    /// Restrict the decoupled qubit to one role: vertex, h-edge or v-edge.
    #[arg(long)]
    pub ancilla: Option<String>,
}

/// Parses arguments and runs the command; returns the text for stdout.
pub fn dispatch<I, T>(argv: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Ok(e.to_string()),
        _ => Err(CliError::Usage(e.to_string())),
    });
    match cli {
        Ok(cli) => run_cli(cli),
        Err(text) => text,
    }
}

pub fn run_cli(cli: Cli) -> Result<String, CliError> {
    let jobs = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::BuildCode(a) => build_code(a),
        Command::FindSchedule(a) => find_schedule_cmd(a),
        Command::EnumerateFaults(a) => enumerate(a),
        Command::DumpLattice(a) => dump_lattice(a),
        Command::Decode(a) => decode(a),
        Command::RunTrials(a) => run_trials(a),
        Command::ThresholdScan(a) => threshold_scan(a, jobs),
        Command::FitThreshold(a) => fit(a),
        Command::HamiltonianSpectrum(a) => hamiltonian(a),
        Command::DecoupleSearch(a) => decouple(a),
    })
}

fn parse_geometry(s: &str) -> Result<Geometry, CliError> {
    Ok(s.parse::<Geometry>()?)
}

fn parse_noise(s: &str) -> Result<NoiseVariant, CliError> {
    Ok(s.parse::<NoiseVariant>()?)
}

fn parse_sector(s: &str) -> Result<PauliKind, CliError> {
    match s {
        "X" | "x" => Ok(PauliKind::X),
        "Z" | "z" => Ok(PauliKind::Z),
        _ => Err(CliError::Config(format!("unknown sector '{s}' (expected X or Z)"))),
    }
}

fn parse_role(s: &str) -> Result<Role, CliError> {
    match s {
        "vertex" => Ok(Role::Vertex),
        "h-edge" => Ok(Role::HEdge),
        "v-edge" => Ok(Role::VEdge),
        _ => Err(CliError::Config(format!(
            "unknown role '{s}' (expected vertex, h-edge or v-edge)"
        ))),
    }
}

/// Comma separated sizes; empty input gives an empty list.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| CliError::Config(format!("bad size '{t}'"))))
        .collect()
}

/// `start:stop:step` (inclusive) or a comma separated list of rates.
pub fn parse_rates(s: &str) -> Result<Vec<f64>, CliError> {
    let num = |t: &str| -> Result<f64, CliError> {
        t.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("bad error rate '{t}'")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || b < a {
            return Err(CliError::Config(format!("bad range '{s}'")));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        // rounding to 12 digits keeps 0.05 + k*0.005 from printing as 0.0650000001
        return Ok((0..=n).map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12).collect());
    }
    if parts.len() != 1 {
        return Err(CliError::Config(format!("bad range '{s}'")));
    }
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(num).collect()
}

/// Seed from `SSC_SEED` if set, else the flag value.
fn effective_seed(flag: u64) -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Runtime(e.to_string()))
}

fn ops_text(ops: &[ssc_core::pauli::PauliOperator]) -> Vec<String> {
    ops.iter().map(|o| o.to_string()).collect()
}

fn build_code(a: BuildCodeArgs) -> Result<String, CliError> {
    if a.dump != "json" {
        return Err(CliError::Config(format!("unsupported dump format '{}'", a.dump)));
    }
    let code = build(a.l, parse_geometry(&a.geometry)?)?;
    let report = validate_code(&code)?;
    let g = &code.groups;
    let boundary = |v: &[ssc_core::code::BoundaryStabilizer]| -> Vec<String> {
        v.iter().map(|b| format!("{}: {}", b.edge, b.op)).collect()
    };
    let triangles: Vec<_> = code
        .triangles
        .iter()
        .map(|t| json!({ "plaquette": t.plaquette, "kind": t.kind.to_string(), "qubits": t.qubits, "op": code.triangle_op(t).to_string() }))
        .collect();
    to_json(&json!({
        "L": code.l(),
        "geometry": code.geometry(),
        "n": report.n,
        "k": report.k,
        "s": report.s,
        "g": report.g,
        "valid": report.passed(),
        "sites": code.layout.sites.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        "triangles": triangles,
        "stabilizers_x": ops_text(&g.stabilizers_x),
        "stabilizers_z": ops_text(&g.stabilizers_z),
        "boundary_x": boundary(&g.boundary_x),
        "boundary_z": boundary(&g.boundary_z),
        "gauge_x": ops_text(&g.gauge_x),
        "gauge_z": ops_text(&g.gauge_z),
        "logical_x": ops_text(&g.logical_x),
        "logical_z": ops_text(&g.logical_z),
        "validation": report,
    }))
}

fn find_schedule_cmd(a: FindScheduleArgs) -> Result<String, CliError> {
    let s = find_schedule()?;
    if a.dump {
        return Ok(s.round_table());
    }
    to_json(&json!({
        "correct": check_correct(&s),
        "consecutive_pairs": s.has_consecutive_pairs(),
        "horizontal_exchange_symmetric": s.is_exchange_symmetric(Reflection::Horizontal),
        "local": s.local,
        "table": s.round_table(),
    }))
}

fn program_for(code: &SubsystemCode, noise: NoiseVariant) -> Result<Program, CliError> {
    let extraction = match noise {
        NoiseVariant::CircuitBased => Extraction::Circuit(find_schedule()?),
        NoiseVariant::DirectParity => Extraction::DirectParity,
        NoiseVariant::CodeCapacity => {
            return Err(CliError::Config("code capacity has no syndrome circuit".into()));
        }
    };
    Ok(Program::new(code, extraction)?)
}

fn enumerate(a: EnumerateArgs) -> Result<String, CliError> {
    let code = build(a.l, Geometry::Toric)?;
    let program = program_for(&code, parse_noise(&a.noise)?)?;
    let (effects, _) = enumerate_faults(&program, a.t, parse_sector(&a.sector)?)?;
    let mut out = String::from("fault_id,kind,round,op,pauli,weight,defect_a,defect_b,residual\n");
    let join = |v: &[usize]| v.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ");
    for (id, fe) in effects.iter().enumerate() {
        let defect = |i: usize| fe.defects.get(i).map_or(String::new(), |d| d.to_string());
        let _ = writeln!(
            out,
            "{id},{:?},{},{},{},{},{},{},{}",
            fe.fault.kind,
            fe.fault.round,
            fe.fault.op,
            fe.fault.pauli,
            fe.weight,
            defect(0),
            defect(1),
            join(&fe.residual)
        );
    }
    Ok(out)
}

fn lattice_for(
    code: &SubsystemCode,
    noise: NoiseVariant,
    t: usize,
    sector: PauliKind,
) -> Result<VirtualLattice, CliError> {
    match noise {
        NoiseVariant::CodeCapacity => Ok(build_2d(code, sector)?),
        _ => {
            let program = program_for(code, noise)?;
            Ok(build_3d(code, &program, t, sector)?.0)
        }
    }
}

fn dump_lattice(a: DumpLatticeArgs) -> Result<String, CliError> {
    if a.format != "csv" {
        return Err(CliError::Config(format!("unsupported format '{}'", a.format)));
    }
    let code = build(a.l, parse_geometry(&a.geometry)?)?;
    let lat = lattice_for(
        &code,
        parse_noise(&a.noise)?,
        a.t.unwrap_or(a.l),
        parse_sector(&a.sector)?,
    )?;
    let text = lat.with_rate(a.p).to_csv();
    match a.out {
        Some(path) => {
            fs::write(&path, &text).map_err(|e| io_err(&path, e))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn parse_nodes(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| CliError::Config(format!("bad defect id '{t}'"))))
        .collect()
}

fn decode(a: DecodeArgs) -> Result<String, CliError> {
    let sector = parse_sector(&a.sector)?;
    let lat_text = fs::read_to_string(&a.lattice).map_err(|e| io_err(&a.lattice, e))?;
    let mut nodes = parse_nodes(&fs::read_to_string(&a.defects).map_err(|e| io_err(&a.defects, e))?)?;
    nodes.sort_unstable();
    nodes.dedup();
    // sizes are not stored in the dump; take the largest ids it mentions
    let (mut n_nodes, mut n_qubits) = (0, 0);
    for line in lat_text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            continue;
        }
        for c in &cols[..2] {
            if let Ok(v) = c.trim().parse::<usize>() {
                n_nodes = n_nodes.max(v + 1);
            }
        }
        for q in cols[4].split_whitespace().filter_map(|q| q.parse::<usize>().ok()) {
            n_qubits = n_qubits.max(q + 1);
        }
    }
    let lat = VirtualLattice::from_csv(&lat_text, sector, n_nodes, 1)?;
    let decoder = Decoder::new(&lat, n_qubits)?;
    let defects = DefectSet {
        n_checks: n_nodes,
        layers: 1,
        nodes,
    };
    let corr = decoder.decode(&defects)?;
    let mut out = String::from("node_a,node_b\n");
    for (x, y) in &corr.pairs {
        let _ = writeln!(out, "{x},{}", y.map_or("B".to_string(), |y| y.to_string()));
    }
    let support: Vec<String> = corr.operator.support().into_iter().map(|q| q.to_string()).collect();
    let _ = writeln!(out, "\ncorrection_qubits\n{}", support.join(" "));
    Ok(out)
}

fn run_trials(a: RunTrialsArgs) -> Result<String, CliError> {
    let noise = parse_noise(&a.noise)?;
    let config = RunConfig {
        geometry: parse_geometry(&a.geometry)?,
        noise,
        ls: vec![a.l],
        ps: vec![a.p],
        t_policy: a.t.map_or(TPolicy::EqualL, TPolicy::Fixed),
        trials: a.trials,
        seed: effective_seed(a.seed)?,
        sector: parse_sector(&a.sector)?,
    };
    config.validate()?;
    let t = config.rounds(a.l);
    let setup = SizeSetup::new(config.geometry, a.l, noise, t, config.sector)?;
    let failures = setup.run_point(a.p, 0, a.trials, config.seed)?;
    let (ci_low, ci_high) = wilson_interval(failures, a.trials);
    to_json(&json!({
        "geometry": config.geometry,
        "noise": noise,
        "L": a.l,
        "T": t,
        "p": a.p,
        "trials": a.trials,
        "seed": config.seed,
        "failures": failures,
        "rate": failures as f64 / a.trials as f64,
        "ci_low": ci_low,
        "ci_high": ci_high,
    }))
}

/// Runs a scan and writes `out` plus its manifest. Returns the manifest.
pub fn scan_to_file(config: &RunConfig, out: &Path, jobs: usize, quiet: bool) -> Result<RunManifest, CliError> {
    config.validate()?;
    let started = now_unix();
    let points = montecarlo::run(config, |r| {
        if !quiet {
            eprintln!(
                "L={} T={} p={} failures={}/{} rate={:.5}",
                r.l, r.t, r.p, r.failures, r.trials, r.rate
            );
        }
    })?;
    let csv = to_csv(&points);
    fs::write(out, &csv).map_err(|e| io_err(out, e))?;
    let manifest = RunManifest {
        command: "threshold-scan".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        seed: config.seed,
        jobs,
        started_unix: started,
        finished_unix: now_unix(),
        outputs: vec![OutputDigest {
            path: out.display().to_string(),
            sha256: sha256_hex(csv.as_bytes()),
        }],
    };
    manifest.write(&manifest_path(out))?;
    Ok(manifest)
}

fn threshold_scan(a: ScanArgs, jobs: usize) -> Result<String, CliError> {
    let config = match &a.manifest {
        Some(path) => RunManifest::read(path)?.config,
        None => RunConfig {
            geometry: parse_geometry(&a.geometry)?,
            noise: parse_noise(&a.noise)?,
            ls: parse_sizes(&a.ls)?,
            ps: parse_rates(&a.p)?,
            t_policy: a.t.map_or(TPolicy::EqualL, TPolicy::Fixed),
            trials: a.trials,
            seed: effective_seed(a.seed)?,
            sector: parse_sector(&a.sector)?,
        },
    };
    let manifest = scan_to_file(&config, &a.out, jobs, a.quiet)?;
    to_json(&manifest)
}

fn fit(a: FitArgs) -> Result<String, CliError> {
    let text = fs::read_to_string(&a.results).map_err(|e| io_err(&a.results, e))?;
    let points = from_csv(&text)?;
    let result = fit_threshold(&points)?;
    let crossings: Vec<_> = crossing_counts(&points)
        .into_iter()
        .map(|(a, b, n)| json!({ "L_small": a, "L_large": b, "sign_changes": n }))
        .collect();
    to_json(&json!({
        "p_th": result.p_th,
        "p_th_err": result.p_th_err,
        "nu": result.nu,
        "nu_err": result.nu_err,
        "a": result.a,
        "b": result.b,
        "c": result.c,
        "chi2": result.chi2,
        "dof": result.dof,
        "residuals": result.residuals,
        "crossings": crossings,
    }))
}

fn hamiltonian(a: SpectrumArgs) -> Result<String, CliError> {
    let s = spectrum(a.l, a.levels)?;
    let numeric = if a.numeric {
        Some(verify_ground_energy_numeric(a.l)?)
    } else {
        None
    };
    to_json(&json!({
        "L": s.l,
        "e0": s.e0,
        "ground_degeneracy": s.ground_degeneracy.to_string(),
        "delta_g": s.delta_g,
        "delta_s": s.delta_s,
        "gap": s.gap,
        "trivial_sector_gap": s.trivial_sector_gap,
        "deformation_gap_bound": deformation_gap_bound(s.gap),
        "dimension": s.dimension.to_string(),
        "n_levels": s.n_levels,
        "levels": s.levels.iter().map(|l| json!({
            "energy": l.energy,
            "exact": format!("{} + {}*sqrt(2)", l.a, l.b),
            "degeneracy": l.degeneracy.to_string(),
        })).collect::<Vec<_>>(),
        "e0_numeric": numeric,
    }))
}

fn cell_text(c: &CellQubit) -> String {
    let role = match c.role {
        Role::Vertex => "u",
        Role::HEdge => "h",
        Role::VEdge => "v",
    };
    format!("{role}({:+},{:+})", c.dr, c.dc)
}

/// Circuit layers and the conjugated-operator table as plain text.
pub fn decoupling_text(c: &DecouplingCircuit) -> String {
    let mut out = format!(
        "L={} candidates_tried={} ancilla_role={:?}\n",
        c.l, c.candidates_tried, c.ancilla_role
    );
    for (i, g) in c.rounds.iter().enumerate() {
        let _ = writeln!(
            out,
            "round {i}: CNOT {} -> {}",
            cell_text(&g.control),
            cell_text(&g.target)
        );
    }
    let _ = writeln!(
        out,
        "\n{:<10} {:>4} | {:<28} | {:<28} | w",
        "operator", "p", "before", "after"
    );
    for row in &c.table {
        let _ = writeln!(
            out,
            "{:<10} {:>4} | {:<28} | {:<28} | {}",
            row.name, row.plaquette, row.before, row.after, row.weight_after
        );
    }
    out
}

fn decouple(a: DecoupleArgs) -> Result<String, CliError> {
    let role = a.ancilla.as_deref().map(parse_role).transpose()?;
    let c = decoupling_search_with(a.l, role)?;
    if a.dump {
        return Ok(decoupling_text(&c));
    }
    to_json(&c)
}
