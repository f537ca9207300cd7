//! Command-line definition and dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fermsim::bk::{self, BkEncoding};
use fermsim::channels::partial_trace;
use fermsim::circuit::{Circuit, CircuitJson};
use fermsim::compiler::{self, CompileReport};
use fermsim::entanglement::{
    self as ent, ConcurrenceReport, EofReport, MonogamyReport, SectorSeparability, SeparabilityWitness,
};
use fermsim::json::DensityMatrixJson;
use fermsim::linalg::{eigh, CMat};
use fermsim::superselection::{is_valid_fqt_state, split_sectors, StateValidity};
use fermsim::DEFAULT_TOL;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::report::VerifyReport;
use crate::schema::{self, Schema};
use crate::suites::{self, Suite, SuiteConfig};

#[derive(Debug, Parser)]
#[command(name = "fermsim", version, about = "Fermionic mode simulation, verification and compilation")]
pub struct Cli {
    /// Worker threads; 0 uses every core. Reports do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an invariant suite and print a JSON report.
    Verify(VerifyArgs),
    /// Entanglement measures of a state file.
    Entanglement(EntanglementArgs),
    /// Compile a mode circuit to a qubit circuit.
    Compile(CompileArgs),
    /// Bravyi-Kitaev index sets, extraction circuits and gate-count benchmark.
    Encode(EncodeArgs),
    /// Partial trace of a state file onto a set of modes.
    Trace(TraceArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Largest mode count exercised by the suite.
    #[arg(long)]
    pub n: Option<usize>,
    /// Largest register size for the bk suite.
    #[arg(long)]
    pub m: Option<usize>,
    /// Replace each residual check's tolerance.
    #[arg(long, value_parser = positive)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Cf,
    #[value(alias = "ef")]
    Eof,
    Separability,
    Monogamy,
    All,
}

#[derive(Debug, Args)]
pub struct EntanglementArgs {
    #[arg(long = "in", visible_alias = "state")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Measure::All)]
    pub measure: Measure,
    #[arg(long, value_parser = positive, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Compiled qubit circuit; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Gate counts and the equivalence check.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncodeMode {
    Table,
    Circuit,
    Benchmark,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = EncodeMode::Table)]
    pub mode: EncodeMode,
    /// Only this mode's extraction circuit.
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// 1-based modes to keep, ascending, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub keep: Vec<usize>,
    #[arg(long, value_parser = positive, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("tolerance must be positive, got {s}"))
    }
}

/// Whether every check of the command passed.
pub type Passed = bool;

pub fn run(cli: Cli) -> Result<Passed> {
    match cli.command {
        Command::Verify(a) => verify(a),
        Command::Entanglement(a) => entanglement(a),
        Command::Compile(a) => compile(a),
        Command::Encode(a) => encode(a),
        Command::Trace(a) => trace(a),
    }
}

fn write(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialise");
    s.push('\n');
    s
}

fn verify(a: VerifyArgs) -> Result<Passed> {
    let cfg = SuiteConfig { n: a.n, m: a.m, tol: a.tol, seed: a.seed };
    let report = VerifyReport::new(a.seed, a.tol, suites::run(a.suite, &cfg)?);
    for s in &report.suites {
        let failed: Vec<&str> = s.failures().map(|c| c.name.as_str()).collect();
        if failed.is_empty() {
            eprintln!("{}: {} checks passed", s.suite, s.checks.len());
        } else {
            eprintln!("{}: {} of {} checks failed: {}", s.suite, failed.len(), s.checks.len(), failed.join(", "));
        }
    }
    write(a.out.as_deref(), &to_json(&report))?;
    Ok(report.passed)
}

/// Loads a state file and checks it is a valid superselected state.
fn load_state(path: &Path, tol: f64) -> Result<(usize, CMat, StateValidity)> {
    let state: DensityMatrixJson = schema::load(path, Schema::State)?;
    let rho = state.to_matrix().map_err(|e| CliError::Invalid { path: path.into(), reason: e.to_string() })?;
    let v = is_valid_fqt_state(&rho, state.n, tol)?;
    if !v.valid {
        return Err(CliError::Invalid {
            path: path.into(),
            reason: format!(
                "not a valid fermionic state: hermitian residual {:e}, min eigenvalue {:e}, trace {}, parity commutator {:e}",
                v.hermitian_residual, v.min_eigenvalue, v.trace, v.parity_commutator
            ),
        });
    }
    Ok((state.n, rho, v))
}

#[derive(Debug, Serialize)]
struct Sectors {
    p0: f64,
    p1: f64,
    off_block_residual: f64,
}

#[derive(Debug, Serialize)]
struct Separability {
    separable: bool,
    witness: SeparabilityWitness,
    #[serde(skip_serializing_if = "Option::is_none")]
    xx_correlator: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bipartite: Option<SectorSeparability>,
}

#[derive(Debug, Serialize)]
struct EntanglementReport {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    measure: Measure,
    n: usize,
    tolerance: f64,
    validity: StateValidity,
    sectors: Sectors,
    #[serde(skip_serializing_if = "Option::is_none")]
    concurrence: Option<ConcurrenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eof_lower: Option<EofReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    separability: Option<Separability>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monogamy: Option<MonogamyReport>,
}

fn entanglement(a: EntanglementArgs) -> Result<Passed> {
    let (n, rho, validity) = load_state(&a.input, a.tol)?;
    let usage = |what: &str, need: usize| {
        CliError::Usage(format!("measure {what} needs a {need}-mode state, {} has {n} modes", a.input.display()))
    };
    let want = |m: Measure| a.measure == m || a.measure == Measure::All;
    let two_mode = n == 2;
    match a.measure {
        Measure::Cf | Measure::Eof if !two_mode => return Err(usage("cf/eof", 2)),
        Measure::Monogamy if n != 3 => return Err(usage("monogamy", 3)),
        _ => {}
    }
    let ps = split_sectors(&rho, n, a.tol)?;
    let concurrence = (two_mode && want(Measure::Cf)).then(|| ent::fermionic_concurrence(&rho, a.tol)).transpose()?;
    let eof_lower = (two_mode && want(Measure::Eof)).then(|| ent::fermionic_eof_lower(&rho, a.tol)).transpose()?;
    let separability = if want(Measure::Separability) {
        let witness = ent::full_separability_test(&rho, n, a.tol)?;
        Some(Separability {
            separable: witness.separable,
            witness,
            xx_correlator: two_mode.then(|| ent::pauli_correlator(&rho, "XX")).transpose()?,
            bipartite: two_mode.then(|| ent::bipartite_sector_separability(&rho, a.tol)).transpose()?,
        })
    } else {
        None
    };
    // Monogamy takes a pure state; `all` skips it for mixed inputs.
    let purity = fermsim::linalg::trace_product(&rho, &rho).re;
    let pure = (purity - 1.0).abs() <= a.tol.max(1e-9);
    let monogamy = if n == 3 && (a.measure == Measure::Monogamy || (a.measure == Measure::All && pure)) {
        if !pure {
            return Err(CliError::Invalid {
                path: a.input.clone(),
                reason: format!("monogamy needs a pure state, purity is {purity}"),
            });
        }
        let (_, vecs) = eigh(&rho);
        Some(ent::monogamy_witness(&vecs.column(vecs.ncols() - 1).into_owned(), a.tol)?)
    } else {
        None
    };
    let report = EntanglementReport {
        tool: "fermsim",
        version: env!("CARGO_PKG_VERSION"),
        command: "entanglement",
        measure: a.measure,
        n,
        tolerance: a.tol,
        validity,
        sectors: Sectors { p0: ps.p0, p1: ps.p1, off_block_residual: ps.off_block_residual },
        concurrence,
        eof_lower,
        separability,
        monogamy,
    };
    write(a.out.as_deref(), &to_json(&report))?;
    Ok(true)
}

#[derive(Debug, Serialize)]
struct CompileOutput {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    #[serde(flatten)]
    report: CompileReport,
}

fn compile(a: CompileArgs) -> Result<Passed> {
    let json: CircuitJson = schema::load(&a.input, Schema::Circuit)?;
    let circuit =
        Circuit::from_json(&json).map_err(|e| CliError::Invalid { path: a.input.clone(), reason: e.to_string() })?;
    let (out, report) = compiler::compile_circuit(&circuit)?;
    let passed = report.passed;
    if !passed {
        eprintln!("compiled circuit deviates from the input by {:?}", report.equivalence_residual);
    }
    write(a.out.as_deref(), &to_json(&out.to_json()))?;
    if let Some(path) = &a.report {
        let wrapped = CompileOutput { tool: "fermsim", version: env!("CARGO_PKG_VERSION"), command: "compile", report };
        write(Some(path), &to_json(&wrapped))?;
    }
    Ok(passed)
}

#[derive(Debug, Serialize)]
struct ExtractionEntry {
    j: usize,
    stage_counts: [usize; 3],
    total: usize,
    circuit: CircuitJson,
}

#[derive(Debug, Serialize)]
struct ExtractionCircuits {
    m: usize,
    t: usize,
    circuits: Vec<ExtractionEntry>,
}

fn encode(a: EncodeArgs) -> Result<Passed> {
    let enc = BkEncoding::new(a.m)?;
    if let Some(j) = a.j {
        if j >= a.m {
            return Err(CliError::Usage(format!("--j {j} is out of range for --m {}", a.m)));
        }
    }
    let text = match a.mode {
        EncodeMode::Table => to_json(&bk::encoding_table(a.m)?),
        EncodeMode::Circuit => {
            let js: Vec<usize> = a.j.map_or_else(|| (0..a.m).collect(), |j| vec![j]);
            let circuits = js
                .into_iter()
                .map(|j| {
                    let ext = enc.extraction_circuit(j)?;
                    Ok(ExtractionEntry {
                        j,
                        stage_counts: ext.counts(),
                        total: ext.total(),
                        circuit: ext.to_circuit(a.m + 1)?.to_json(),
                    })
                })
                .collect::<fermsim::Result<_>>()?;
            to_json(&ExtractionCircuits { m: a.m, t: enc.label_bits(), circuits })
        }
        EncodeMode::Benchmark => {
            let ms: Vec<usize> = (1..=a.m).collect();
            bk::benchmark_csv(&bk::benchmark(&ms)?)
        }
    };
    write(a.out.as_deref(), &text)?;
    Ok(true)
}

fn trace(a: TraceArgs) -> Result<Passed> {
    let (n, rho, _) = load_state(&a.input, a.tol)?;
    let reduced = partial_trace(&rho, &a.keep, n)?;
    write(a.out.as_deref(), &to_json(&DensityMatrixJson::from_matrix(a.keep.len(), &reduced)))?;
    Ok(true)
}
