use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use casimir_cli::output::Format;
use casimir_cli::{
    cmd_energy, cmd_fourier, cmd_oracle_check, cmd_sweep, cmd_torque_curve, CliError,
    CommandOutput, RunConfig,
};
use clap::{Args, Parser, Subcommand};

/// Casimir free energy and torque between two cholesteric liquid-crystal slabs.
#[derive(Debug, Parser)]
#[command(name = "cholesteric-torque", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Free energy per area at one misalignment angle.
    Energy {
        #[command(flatten)]
        common: Common,
        /// Misalignment angle in rad; accepts `pi`, `pi/3`, `2pi/3`.
        #[arg(long, default_value = "0", value_parser = parse_angle, allow_hyphen_values = true)]
        phi: f64,
        /// Also evaluate with doubled n_eta and n_krho and report the change.
        #[arg(long)]
        check_quadrature: bool,
    },
    /// Energy and torque on the uniform φ grid.
    TorqueCurve {
        #[command(flatten)]
        common: Common,
    },
    /// Fourier coefficients of the torque.
    Fourier {
        #[command(flatten)]
        common: Common,
    },
    /// Fourier spectra over thickness, pairing and separation.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Staircase model against discrete layer stacks.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Layers per pitch, e.g. `100,300,1000,3000`.
        #[arg(long, value_delimiter = ',')]
        resolutions: Option<Vec<usize>>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Replaces the configured separations (μm, comma separated).
    #[arg(long, value_delimiter = ',')]
    separation_um: Option<Vec<f64>>,
    #[arg(long)]
    phi_points: Option<usize>,
    /// Highest Fourier order.
    #[arg(long)]
    orders: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (
            n.trim(),
            d.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad angle '{s}': {e}"))?,
        ),
        None => (t.as_str(), 1.0),
    };
    let coeff = match num.strip_suffix("pi").map(|c| c.trim_end_matches('*')) {
        Some("") => 1.0,
        Some("-") => -1.0,
        Some(c) => c
            .parse::<f64>()
            .map_err(|e| format!("bad angle '{s}': {e}"))?,
        None => {
            return Err(format!(
                "bad angle '{s}': expected a number or a multiple of pi"
            ))
        }
    };
    Ok(coeff * std::f64::consts::PI / den)
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut run = RunConfig::load(&common.config)?;
    if let Some(a) = &common.separation_um {
        run.separations_um = a.clone();
    }
    if let Some(n) = common.phi_points {
        run.phi_points = n;
    }
    if let Some(m) = common.orders {
        run.fourier_orders = m;
    }
    let base = common.config.parent().unwrap_or(Path::new("."));
    run.resolve(base)
}

fn emit(output: &CommandOutput, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, &output.text).map_err(|source| CliError::Output {
            path: p.to_owned(),
            source,
        }),
        None => std::io::stdout()
            .write_all(output.text.as_bytes())
            .map_err(|source| CliError::Output {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::Energy { common, .. }
        | Command::TorqueCurve { common }
        | Command::Fourier { common }
        | Command::Sweep { common }
        | Command::OracleCheck { common, .. } => common,
    };
    if let Some(n) = common.threads {
        // Only fails when a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let mut config = load(common)?;
    let pick = |default: Format| common.format.or(config.output.format).unwrap_or(default);
    let output = match &cli.command {
        Command::Energy {
            phi,
            check_quadrature,
            ..
        } => cmd_energy(&config, *phi, *check_quadrature, pick(Format::Json))?,
        Command::TorqueCurve { .. } => cmd_torque_curve(&config, pick(Format::Csv))?,
        Command::Fourier { .. } => cmd_fourier(&config, pick(Format::Csv))?,
        Command::Sweep { .. } => cmd_sweep(&config, pick(Format::Csv))?,
        Command::OracleCheck { resolutions, .. } => {
            let format = pick(Format::Json);
            if let Some(r) = resolutions {
                config.oracle.resolutions = r.clone();
                config.validate()?;
            }
            cmd_oracle_check(&config, format)?
        }
    };
    let path = common.out.clone().or_else(|| config.output.path.clone());
    emit(&output, path.as_deref())?;
    match output.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::parse_angle;
    use std::f64::consts::PI;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("pi/3").unwrap(), PI / 3.0);
        assert_eq!(parse_angle("2pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_angle("-pi").unwrap(), -PI);
        assert!(parse_angle("tau").is_err());
    }
}
