use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tradeshock::data::{generate_fixture, load_world, write_world, FixtureSpec, WorldDataset};
use tradeshock::employment::employment_delta;
use tradeshock::equilibrium::{
    diff_states, solve_baseline, solve_scenario, ModelParams, SolverConfig,
};
use tradeshock::error::{Error, Result};
use tradeshock::income::IncomeGroups;
use tradeshock::reference;
use tradeshock::report::{compare_reports, write_reports, RunMeta};
use tradeshock::scenario::{builtin_scenario, load_baseline_duties, resolve, ScenarioFile};

#[derive(Parser)]
#[command(
    name = "tradeshock",
    about = "Tariff-shock simulation on multiregional input-output tables",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverFlags {
    /// Armington substitution elasticity (> 1)
    #[arg(long)]
    sigma: Option<f64>,
    /// Final-demand price elasticity (<= 0)
    #[arg(long)]
    epsilon: Option<f64>,
    /// Fixed-point damping factor in (0, 1]
    #[arg(long)]
    damping: Option<f64>,
    /// Convergence tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a world directory against the schema and balance invariants
    Validate {
        #[arg(long)]
        world: PathBuf,
    },
    /// Generate a balanced synthetic world fixture
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        countries: usize,
        #[arg(long, default_value_t = 2)]
        sectors: usize,
        /// Fraction of intermediate cells forced to zero, in [0, 1)
        #[arg(long, default_value_t = 0.0)]
        sparsity: f64,
        /// Import intensity of sourcing, in [0, 1]
        #[arg(long, default_value_t = 0.5)]
        openness: f64,
    },
    /// Solve the no-shock equilibrium and report the baseline levels
    Baseline {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Run one or more tariff scenarios and emit the report table suite
    Run {
        #[arg(long)]
        world: PathBuf,
        /// Scenario TOML path, or the name of a shipped scenario
        #[arg(long, required = true)]
        scenario: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        /// Rows in the most-affected-countries/sectors tables
        #[arg(long, default_value_t = 15)]
        top_k: usize,
        /// Omit the generation timestamp for byte-reproducible output
        #[arg(long)]
        no_timestamp: bool,
        /// country,group CSV for income-group aggregation
        #[arg(long)]
        groups: Option<PathBuf>,
        /// origin,destination,commodity,duty CSV of pre-shock tariffs
        #[arg(long)]
        baseline_duties: Option<PathBuf>,
    },
    /// Merge completed run directories into a side-by-side table
    Compare {
        /// Two or more report directories produced by `run`
        dirs: Vec<PathBuf>,
    },
}

fn solver_config(flags: &SolverFlags, overrides: &tradeshock::scenario::Overrides) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::default();
    // scenario-file overrides take precedence over command-line flags
    cfg.damping = overrides.damping.or(flags.damping).unwrap_or(cfg.damping);
    cfg.tolerance = overrides.tolerance.or(flags.tol).unwrap_or(cfg.tolerance);
    cfg.max_iterations = overrides
        .max_iterations
        .or(flags.max_iter)
        .unwrap_or(cfg.max_iterations);
    cfg.validate()?;
    Ok(cfg)
}

fn model_params(
    world: &WorldDataset,
    flags: &SolverFlags,
    overrides: &tradeshock::scenario::Overrides,
) -> ModelParams {
    let defaults = ModelParams::defaults(world.dims.n_sectors());
    let sigma = overrides.sigma.or(flags.sigma).unwrap_or(defaults.sigma[0]);
    let epsilon = overrides
        .epsilon
        .or(flags.epsilon)
        .unwrap_or(defaults.epsilon[0]);
    ModelParams::uniform(world.dims.n_sectors(), sigma, epsilon)
}

fn load_groups(world: &WorldDataset, path: &Option<PathBuf>) -> Result<IncomeGroups> {
    match path {
        Some(p) => IncomeGroups::from_csv_path(&world.dims, p),
        // default: shipped classification when it covers this world,
        // otherwise each country is its own group
        None => Ok(reference::icio_income_groups(&world.dims)
            .unwrap_or_else(|_| IncomeGroups::identity(&world.dims))),
    }
}

fn load_scenario(name_or_path: &str) -> Result<ScenarioFile> {
    let path = PathBuf::from(name_or_path);
    if path.exists() {
        return ScenarioFile::parse_path(&path);
    }
    builtin_scenario(name_or_path).ok_or_else(|| {
        Error::Scenario(format!(
            "{name_or_path:?} is neither a scenario file nor a shipped scenario name"
        ))
    })
}

fn cmd_validate(world_dir: &PathBuf) -> Result<()> {
    let world = load_world(world_dir)?;
    println!(
        "ok: {} countries x {} sectors, hash {}",
        world.dims.n_countries(),
        world.dims.n_sectors(),
        world.world_hash()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    world_dir: &PathBuf,
    scenarios: &[String],
    out: &PathBuf,
    flags: &SolverFlags,
    top_k: usize,
    no_timestamp: bool,
    groups_path: &Option<PathBuf>,
    duties_path: &Option<PathBuf>,
) -> Result<bool> {
    let world = load_world(world_dir)?;
    let groups = load_groups(&world, groups_path)?;
    let duties = duties_path
        .as_ref()
        .map(|p| load_baseline_duties(p, &world.dims))
        .transpose()?;
    let base = solve_baseline(&world)?;
    let mut all_converged = true;

    for name in scenarios {
        let file = load_scenario(name)?;
        let resolved = resolve(&file, &world.dims, Some(&groups), duties.as_ref())?;
        for warning in &resolved.warnings {
            eprintln!("warning [{}]: {warning}", resolved.name);
        }
        let params = model_params(&world, flags, &resolved.overrides);
        let cfg = solver_config(flags, &resolved.overrides)?;
        let shocked = solve_scenario(&world, &params, &resolved.wedge, &cfg)?;
        if !shocked.converged {
            eprintln!(
                "warning [{}]: stopped after {} iterations with residual {:.3e} above tolerance",
                resolved.name,
                shocked.iterations,
                shocked.residuals.max()
            );
            all_converged = false;
        }
        let deltas = diff_states(&base, &shocked)?;
        let employment =
            employment_delta(&world.satellite, &world.dims, &groups, &base.x, &shocked.x)?;
        let meta = RunMeta {
            scenario: resolved.name.clone(),
            world_hash: world.world_hash(),
            sigma: params.sigma[0],
            epsilon: params.epsilon[0],
            damping: cfg.damping,
            tolerance: cfg.tolerance,
            iterations: shocked.iterations,
            converged: shocked.converged,
            top_k,
            timestamp: (!no_timestamp).then(|| {
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            }),
        };
        let dir = out.join(&resolved.name);
        write_reports(&dir, &meta, &world.dims, &groups, &employment, &deltas)?;
        println!(
            "{}: {} iterations, converged={}, reports in {}",
            resolved.name,
            shocked.iterations,
            shocked.converged,
            dir.display()
        );
    }
    Ok(all_converged)
}

fn cmd_baseline(world_dir: &PathBuf, out: &PathBuf, flags: &SolverFlags) -> Result<()> {
    let world = load_world(world_dir)?;
    let cfg = solver_config(flags, &Default::default())?;
    let _ = cfg; // baseline needs no iteration parameters; kept for flag validation
    let state = solve_baseline(&world)?;
    std::fs::create_dir_all(out)?;
    let mut text = String::from("country,sector,gross_output,final_demand,exports,employment\n");
    let employment = world.satellite.levels(&state.x)?;
    for c in 0..world.dims.n_countries() {
        for s in 0..world.dims.n_sectors() {
            let i = c * world.dims.n_sectors() + s;
            text.push_str(&format!(
                "{},{},{},{},{},{}\n",
                world.dims.country_codes()[c],
                world.dims.sector_codes()[s],
                state.x[i],
                state.fd.values()[i],
                state.flows.exports_by_cell[i],
                employment[i],
            ));
        }
    }
    let path = out.join("baseline.csv");
    std::fs::write(&path, text)?;
    println!("baseline written to {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Validate { world } => cmd_validate(&world).map(|()| true),
        Command::Fixture {
            out,
            seed,
            countries,
            sectors,
            sparsity,
            openness,
        } => {
            let world = generate_fixture(&FixtureSpec {
                seed,
                n_countries: countries,
                n_sectors: sectors,
                sparsity,
                trade_openness: openness,
            })?;
            write_world(&world, &out)?;
            println!(
                "fixture written to {} (hash {})",
                out.display(),
                world.world_hash()
            );
            Ok(true)
        }
        Command::Baseline { world, out, solver } => {
            cmd_baseline(&world, &out, &solver).map(|()| true)
        }
        Command::Run {
            world,
            scenario,
            out,
            solver,
            top_k,
            no_timestamp,
            groups,
            baseline_duties,
        } => cmd_run(
            &world,
            &scenario,
            &out,
            &solver,
            top_k,
            no_timestamp,
            &groups,
            &baseline_duties,
        ),
        Command::Compare { dirs } => {
            let table = compare_reports(&dirs)?;
            print!("{table}");
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        // reports were written but at least one scenario failed to converge
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
