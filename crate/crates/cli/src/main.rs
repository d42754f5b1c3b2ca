use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use fracsub_cli::{read_params, run_scenario, CliError, Command, Params, Scenario};

#[derive(Parser)]
#[command(name = "fracsub", version, about = "Fractional Cauchy problems, subordinators and their Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Stable density g_beta(t), or hitting-time density q(t,s) with --s.
    Density(Flags),
    /// Draws of E_t (default) or D_1 (--kind stable).
    Sample(Flags),
    /// Subordinated solution from a unit Gaussian.
    Solve(Flags),
    /// Marginals of X(|Y_t|) and X(E_t).
    Simulate(Flags),
    /// Rescaled continuous-time random walk positions.
    Ctrw(Flags),
    /// Acceptance checks.
    Verify {
        #[command(subcommand)]
        check: VerifyCmd,
    },
    /// Quadrature solution against the Mittag-Leffler solution.
    Compare(Flags),
    /// Scenario from a JSON document with a "command" field.
    Run(Flags),
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Refinement study of both residuals for beta = 1/n.
    Pde(Flags),
    /// Refinement study of the Caputo residual.
    Fractional(Flags),
    /// Fourier-Laplace identity at one (psi, s).
    Transform(Flags),
    /// Half-line solution with zero initial trace.
    Nonuniqueness(Flags),
    /// Two-sample KS test of X(|Y_t|) against X(E_t).
    Marginals(Flags),
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

#[derive(Args, Clone, Default)]
struct Flags {
    /// JSON parameter document; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "t")]
    t: Option<f64>,
    #[arg(long)]
    n: Option<u32>,
    /// Real part of the symbol value.
    #[arg(long, allow_hyphen_values = true)]
    psi: Option<f64>,
    #[arg(long = "psi-im", allow_hyphen_values = true)]
    psi_im: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    /// Isotropic stable index of the outer process (2 = Brownian).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long = "grid-M")]
    grid_m: Option<usize>,
    #[arg(long = "grid-L")]
    grid_l: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// CTRW time scale c.
    #[arg(long)]
    scale: Option<f64>,
    /// plus-minus-one or normal.
    #[arg(long, value_parser = parse_enum::<fracsub::montecarlo::JumpLaw>)]
    jumps: Option<fracsub::montecarlo::JumpLaw>,
    /// subordination or mittag-leffler.
    #[arg(long, value_parser = parse_enum::<fracsub::verify::SolutionMethod>)]
    method: Option<fracsub::verify::SolutionMethod>,
    /// hitting or stable.
    #[arg(long, value_parser = parse_enum::<fracsub_cli::SampleKind>)]
    kind: Option<fracsub_cli::SampleKind>,
}

impl Flags {
    fn params(&self) -> Params {
        Params {
            beta: self.beta,
            t: self.t,
            n: self.n,
            psi: self.psi,
            psi_im: self.psi_im,
            s: self.s,
            alpha: self.alpha,
            dim: self.dim,
            grid_m: self.grid_m,
            grid_l: self.grid_l,
            tau: self.tau,
            samples: self.samples,
            seed: self.seed,
            threads: self.threads,
            out_dir: self.out_dir.clone(),
            tolerance: self.tolerance,
            scale: self.scale,
            jumps: self.jumps,
            method: self.method,
            kind: self.kind,
        }
    }
}

fn scenario(command: Option<Command>, flags: &Flags) -> Result<Scenario, CliError> {
    match command {
        Some(command) => {
            let base = match &flags.config {
                Some(path) => read_params(path)?,
                None => Params::default(),
            };
            Ok(Scenario {
                command,
                params: base.overridden_by(flags.params()),
            })
        }
        None => {
            let path = flags
                .config
                .as_ref()
                .ok_or_else(|| CliError::Usage("`run` needs --config".into()))?;
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            let mut s = Scenario::from_json(&text)?;
            s.params = s.params.overridden_by(flags.params());
            Ok(s)
        }
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let (command, flags) = match cli.command {
        Cmd::Density(f) => (Some(Command::Density), f),
        Cmd::Sample(f) => (Some(Command::Sample), f),
        Cmd::Solve(f) => (Some(Command::Solve), f),
        Cmd::Simulate(f) => (Some(Command::Simulate), f),
        Cmd::Ctrw(f) => (Some(Command::Ctrw), f),
        Cmd::Compare(f) => (Some(Command::Compare), f),
        Cmd::Run(f) => (None, f),
        Cmd::Verify { check } => match check {
            VerifyCmd::Pde(f) => (Some(Command::VerifyPde), f),
            VerifyCmd::Fractional(f) => (Some(Command::VerifyFractional), f),
            VerifyCmd::Transform(f) => (Some(Command::VerifyTransform), f),
            VerifyCmd::Nonuniqueness(f) => (Some(Command::VerifyNonuniqueness), f),
            VerifyCmd::Marginals(f) => (Some(Command::VerifyMarginals), f),
        },
    };
    let scenario = scenario(command, &flags)?;
    if let Some(threads) = scenario.params.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure threads: {e}")))?;
    }
    let outcome = run_scenario(&scenario)?;
    for line in &outcome.lines {
        println!("{line}");
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
