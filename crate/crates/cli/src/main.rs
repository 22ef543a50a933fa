use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use snqi_core::measures::{snqi_verdict, SweepRecord};
use snqi_core::report::{self, Figure, FigureData, Suite};
use snqi_core::sphere::{
    QuadratureSettings, DEFAULT_MC_SAMPLES, DEFAULT_PHI_NODES, DEFAULT_SEED, DEFAULT_THETA_NODES,
};
use snqi_core::SnqiError;

#[derive(Parser, Debug)]
#[command(
    name = "snqi",
    version,
    about = "Information ordering of spin-direction carriers with and without copies"
)]
struct Cli {
    /// Polar Gauss-Legendre nodes.
    #[arg(long, global = true, default_value_t = DEFAULT_THETA_NODES)]
    theta_nodes: usize,
    /// Azimuthal nodes.
    #[arg(long, global = true, default_value_t = DEFAULT_PHI_NODES)]
    phi_nodes: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_MC_SAMPLES)]
    mc_samples: usize,
    /// Seed for every sampled check.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Averaged fidelities of both carriers with and without a copy.
    Table {
        #[arg(long)]
        delta: f64,
    },
    /// Closed-form fidelities and information quantities over a δ grid.
    Sweep {
        #[arg(long, default_value_t = 0.0)]
        min: f64,
        #[arg(long, default_value_t = 1.0)]
        max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run a verification suite; exits 1 if any check fails.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
    },
    /// Figure data as CSV, or JSON when the path ends in `.json`.
    Figure {
        #[arg(long, value_enum)]
        which: FigureArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Choi spectrum of Λ_δ.
    Choi {
        #[arg(long)]
        delta: f64,
    },
    /// Write the tetrahedral two-copy measurement to a JSON file.
    Povm {
        #[arg(long)]
        dump: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Morphisms,
    Povm,
    Measures,
    Classical,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Morphisms => Suite::Morphisms,
            SuiteArg::Povm => Suite::Povm,
            SuiteArg::Measures => Suite::Measures,
            SuiteArg::Classical => Suite::Classical,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FigureArg {
    Fig3,
    Fig5,
    Fig6,
}

impl From<FigureArg> for Figure {
    fn from(f: FigureArg) -> Self {
        match f {
            FigureArg::Fig3 => Figure::Fig3,
            FigureArg::Fig5 => Figure::Fig5,
            FigureArg::Fig6 => Figure::Fig6,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    settings: &'a QuadratureSettings,
    payload: T,
}

fn envelope_json<T: Serialize>(
    settings: &QuadratureSettings,
    payload: T,
) -> anyhow::Result<String> {
    let env = Envelope {
        version: env!("CARGO_PKG_VERSION"),
        settings,
        payload,
    };
    Ok(serde_json::to_string_pretty(&env)? + "\n")
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    let mut f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    f.write_all(contents.as_bytes())
        .with_context(|| format!("cannot write {}", path.display()))
}

/// 17 significant digits, enough to round-trip any f64.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn sweep_row(r: &SweepRecord) -> Vec<String> {
    let mut row: Vec<String> = r.values().iter().map(|&v| fmt_f64(v)).collect();
    row.push(r.snqi.to_string());
    row
}

fn write_figure(
    path: &Path,
    data: &FigureData,
    settings: &QuadratureSettings,
) -> anyhow::Result<()> {
    if path.extension().is_some_and(|e| e == "json") {
        return write_file(path, &envelope_json(settings, data)?);
    }
    let floats = |v: &[f64]| v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>();
    match data {
        FigureData::Fig3(points) => write_csv(
            path,
            &[
                "delta",
                "mi_single_rho",
                "mi_single_tau",
                "mi_double_rho",
                "mi_double_tau",
            ],
            points.iter().map(|p| {
                floats(&[
                    p.delta,
                    p.mi_single_rho,
                    p.mi_single_tau,
                    p.mi_double_rho,
                    p.mi_double_tau,
                ])
            }),
        ),
        FigureData::Fig5(points) => write_csv(
            path,
            &["r", "mi"],
            points.iter().map(|p| floats(&[p.r, p.mi])),
        ),
        FigureData::Fig6(points) => write_csv(
            path,
            &["alpha", "gamma", "mi"],
            points.iter().map(|p| floats(&[p.alpha, p.gamma, p.mi])),
        ),
    }
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let usage = matches!(
            e.downcast_ref::<SnqiError>(),
            Some(SnqiError::OutOfRange { .. } | SnqiError::Degenerate(_))
        );
        if usage {
            Failure::Usage(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

impl From<SnqiError> for Failure {
    fn from(e: SnqiError) -> Self {
        anyhow::Error::from(e).into()
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let settings = QuadratureSettings {
        theta_nodes: cli.theta_nodes,
        phi_nodes: cli.phi_nodes,
        mc_samples: cli.mc_samples,
        seed: cli.seed,
    };
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Table { delta } => {
            let v = snqi_verdict(delta)?;
            eprintln!("delta = {delta}");
            eprintln!(
                "{:<10} {:>22} {:>22}",
                "carrier", "without copies", "with a single copy"
            );
            eprintln!(
                "{:<10} {:>22.17} {:>22.17}",
                "rho", v.f_single_rho, v.f_double_rho
            );
            eprintln!(
                "{:<10} {:>22.17} {:>22.17} (l.b.)",
                "tau", v.f_single_tau, v.f_double_tau_lb
            );
            eprintln!("l.b. stands for lower bound");
            stdout.write_all(envelope_json(&settings, &v)?.as_bytes())?;
            Ok(true)
        }
        Command::Sweep {
            min,
            max,
            steps,
            out,
            format,
        } => {
            let rows = report::sweep(min, max, steps)?;
            match format {
                Format::Csv => write_csv(&out, &SweepRecord::HEADER, rows.iter().map(sweep_row))?,
                Format::Json => write_file(&out, &envelope_json(&settings, &rows)?)?,
            }
            Ok(true)
        }
        Command::Verify { suite } => {
            let r = report::verify(suite.into(), cli.seed, &settings)?;
            for c in r.failures() {
                eprintln!(
                    "FAIL {}: residual {} > tolerance {}",
                    c.name, c.residual, c.tolerance
                );
            }
            stdout.write_all(envelope_json(&settings, &r)?.as_bytes())?;
            Ok(r.passed())
        }
        Command::Figure { which, out } => {
            let data = report::figure_data(which.into())?;
            write_figure(&out, &data, &settings)?;
            Ok(true)
        }
        Command::Choi { delta } => {
            let d = report::choi_dump(delta)?;
            stdout.write_all(envelope_json(&settings, &d)?.as_bytes())?;
            Ok(true)
        }
        Command::Povm { dump } => {
            let d = report::tetra_povm_dump()?;
            write_file(&dump, &envelope_json(&settings, &d)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
