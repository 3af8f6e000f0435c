use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use atomroute::cli;
use atomroute::config::{ConfigError, ExperimentConfig, FieldInput, Grid, InitialInput, Mode, PairInput};
use atomroute::verify;
use atomroute::Error;

#[derive(Parser)]
#[command(name = "atomroute", version, about = "Bosonic routing in a four-well star potential")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output stem; .csv, .dat and .json are appended.
    #[arg(short, long, default_value = "out")]
    output: PathBuf,
    #[arg(long, default_value_t = 0.51, allow_negative_numbers = true)]
    u: f64,
    #[arg(long, default_value_t = 1.56, allow_negative_numbers = true)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    j: f64,
    #[arg(long, default_value_t = 401)]
    samples: usize,
    /// Report absolute occupations instead of fractions.
    #[arg(long)]
    absolute: bool,
}

#[derive(Args, Clone)]
struct FieldArgs {
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    /// Well the field is aimed at.
    #[arg(long)]
    target: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum of the reduced model against U.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 16)]
        particles: u32,
        #[arg(long, num_args = 3, value_names = ["LO", "HI", "N"], allow_negative_numbers = true)]
        u_grid: Option<Vec<f64>>,
    },
    /// Populations from a Fock state or a coherent pair.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
        /// Occupations n1 n2 n3 n4.
        #[arg(long, num_args = 4, conflicts_with = "pair")]
        occupations: Option<Vec<u32>>,
        /// Coherent pair `q n1` on wells 1 and 2.
        #[arg(long, num_args = 2, value_names = ["Q", "N1"])]
        pair: Option<Vec<f64>>,
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Return fidelity against the gradient.
    FidelityScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 4, default_values_t = [14, 2, 0, 0])]
        occupations: Vec<u32>,
        #[arg(long, num_args = 3, value_names = ["LO", "HI", "N"], allow_negative_numbers = true)]
        sigma_grid: Option<Vec<f64>>,
    },
    /// One source, two drains.
    Demux {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(short)]
        k: usize,
        #[arg(long, num_args = 4)]
        occupations: Option<Vec<u32>>,
    },
    /// Two sources, one drain.
    Mux {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(short)]
        k: usize,
        #[arg(long, num_args = 4)]
        occupations: Option<Vec<u32>>,
    },
    /// Splitter with a tunable imbalance.
    AmpDemux {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(short)]
        k: usize,
        #[arg(short, conflicts_with = "q_grid")]
        q: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        q_grid: Option<Vec<f64>>,
        #[arg(long, num_args = 4)]
        occupations: Option<Vec<u32>>,
    },
    /// Two-stage multiplexer readout.
    AmpMux {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(short)]
        k: usize,
        #[arg(short)]
        q: f64,
        #[arg(long, num_args = 4)]
        occupations: Option<Vec<u32>>,
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Hubbard parameters from the optical-lattice settings.
    Lattice {
        #[command(flatten)]
        common: Common,
        /// Lattice settings as JSON or TOML; defaults to the reference lattice.
        #[arg(long)]
        lattice: Option<PathBuf>,
    },
    /// Run the acceptance checks.
    Verify {
        /// Restrict to these criteria.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
        /// Print the checks as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run an experiment file (JSON or TOML).
    Run {
        config: PathBuf,
        /// Override the output stem.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Schema(ConfigError),
    Run(Error),
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Schema(_) | Failure::Usage(_) => 2,
            Failure::Run(Error::InvalidArgument(_)) => 2,
            Failure::Run(Error::Numerical(_) | Error::SingularParameter(_) | Error::Consistency(_)) => 3,
            Failure::Run(_) => 1,
        }
    }

    fn record(&self) -> serde_json::Value {
        match self {
            Failure::Schema(e) => json!({"error": "schema", "field": e.field, "message": e.message}),
            Failure::Usage(m) => json!({"error": "usage", "message": m}),
            Failure::Run(e) => {
                let kind = match e {
                    Error::InvalidArgument(_) => "invalid-argument",
                    Error::SingularParameter(_) => "singular-parameter",
                    Error::Numerical(_) => "numerical",
                    Error::Consistency(_) => "consistency",
                    Error::InsufficientData(_) => "insufficient-data",
                    Error::Io(_) => "io",
                };
                json!({"error": kind, "message": e.to_string()})
            }
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn base(mode: Mode, c: &Common) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::template(mode, c.output.clone());
    cfg.params.u = c.u;
    cfg.params.sigma = c.sigma;
    cfg.params.j = c.j;
    cfg.samples = c.samples;
    cfg.fractional = !c.absolute;
    cfg
}

fn field(f: &FieldArgs, mode_default: FieldInput) -> Option<FieldInput> {
    if f.nu.is_none() && f.target.is_none() {
        return None;
    }
    Some(FieldInput { nu: f.nu.unwrap_or(mode_default.nu), target: f.target.unwrap_or(mode_default.target) })
}

fn occupations(v: &Option<Vec<u32>>) -> Option<InitialInput> {
    v.as_ref().map(|o| InitialInput::Occupations([o[0], o[1], o[2], o[3]]))
}

fn grid(v: &Option<Vec<f64>>) -> Result<Option<Grid>, Failure> {
    match v {
        None => Ok(None),
        Some(g) if g[2] >= 1.0 && g[2].fract() == 0.0 => Ok(Some(Grid { lo: g[0], hi: g[1], n: g[2] as usize })),
        Some(_) => Err(Failure::Usage("grid size must be a positive integer".into())),
    }
}

fn build(cmd: &Command) -> Result<ExperimentConfig, Failure> {
    let cfg = match cmd {
        Command::Spectrum { common, particles, u_grid } => {
            let mut cfg = base(Mode::Spectrum, common);
            cfg.particles = Some(*particles);
            cfg.u_grid = grid(u_grid)?;
            cfg
        }
        Command::Evolve { common, field: f, occupations: o, pair, t_max } => {
            let mut cfg = base(Mode::Evolve, common);
            cfg.field = field(f, FieldInput::default());
            cfg.initial_state = match (o, pair) {
                (Some(_), _) => occupations(o),
                (None, Some(p)) => {
                    if p[1] < 0.0 || p[1].fract() != 0.0 {
                        return Err(Failure::Usage("pair particle number must be a whole number".into()));
                    }
                    Some(InitialInput::CoherentPair(PairInput {
                        q: p[0],
                        n1: p[1] as u32,
                        sites: (1, 2),
                        spectator: Vec::new(),
                    }))
                }
                (None, None) => return Err(Failure::Usage("give --occupations or --pair".into())),
            };
            cfg.t_max = *t_max;
            cfg
        }
        Command::FidelityScan { common, occupations: o, sigma_grid } => {
            let mut cfg = base(Mode::FidelityScan, common);
            cfg.initial_state = occupations(&Some(o.clone()));
            cfg.sigma_grid = grid(sigma_grid)?;
            cfg
        }
        Command::Demux { common, field: f, k, occupations: o } => {
            let mut cfg = base(Mode::Demux, common);
            cfg.field = field(f, FieldInput::default());
            cfg.k = Some(*k);
            cfg.initial_state = occupations(o);
            cfg
        }
        Command::Mux { common, field: f, k, occupations: o } => {
            let mut cfg = base(Mode::Mux, common);
            cfg.field = field(f, FieldInput::default());
            cfg.k = Some(*k);
            cfg.initial_state = occupations(o);
            cfg
        }
        Command::AmpDemux { common, field: f, k, q, q_grid, occupations: o } => {
            let mut cfg = base(Mode::AmpDemux, common);
            cfg.field = field(f, FieldInput::default());
            cfg.k = Some(*k);
            cfg.q = *q;
            cfg.q_grid = q_grid.clone();
            cfg.initial_state = occupations(o);
            cfg
        }
        Command::AmpMux { common, field: f, k, q, occupations: o, t_max } => {
            let mut cfg = base(Mode::AmpMux, common);
            cfg.field = field(f, FieldInput { nu: atomroute::config::MUX_FIELD_NU, target: 3 });
            cfg.k = Some(*k);
            cfg.q = Some(*q);
            cfg.initial_state = occupations(o);
            cfg.t_max = *t_max;
            cfg
        }
        Command::Lattice { common, lattice } => {
            let mut cfg = base(Mode::Lattice, common);
            if let Some(path) = lattice {
                let text =
                    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                let parsed = if path.extension().is_some_and(|e| e == "json") {
                    serde_json::from_str(&text).map_err(|e| e.to_string())
                } else {
                    toml::from_str(&text).map_err(|e| e.to_string())
                };
                cfg.lattice =
                    Some(parsed.map_err(|m| Failure::Schema(ConfigError { field: "lattice".into(), message: m }))?);
            }
            cfg
        }
        Command::Run { config, output } => {
            let cfg = ExperimentConfig::load(config).map_err(Failure::Schema)?;
            match output {
                Some(o) => cfg.with_output(o.clone()),
                None => cfg,
            }
        }
        Command::Verify { .. } => unreachable!("handled separately"),
    };
    cfg.validate().map_err(Failure::Schema)?;
    Ok(cfg)
}

fn run_verify(criteria: &[u8], as_json: bool) -> Result<bool, Failure> {
    if let Some(bad) = criteria.iter().find(|c| !(1..=11).contains(*c)) {
        return Err(Failure::Usage(format!("no criterion {bad}")));
    }
    let checks = verify::run(criteria)?;
    if as_json {
        println!("{}", serde_json::to_string_pretty(&checks).expect("checks serialize"));
    } else {
        for c in &checks {
            println!("{}", c.line());
        }
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn configure_threads() {
    if let Some(n) = std::env::var("ATOMROUTE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a pool can only be installed once; a second attempt is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match &cli.command {
        Command::Verify { criteria, json } => run_verify(criteria, *json).map(|ok| if ok { 0 } else { 1 }),
        cmd => build(cmd).and_then(|cfg| {
            let out = cli::execute(&cfg)?;
            println!("{}", serde_json::to_string(&out).expect("outcome serializes"));
            Ok(0)
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", f.record());
            ExitCode::from(f.code())
        }
    }
}
