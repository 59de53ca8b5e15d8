//! Command-line harness: `rtrw run`, `rtrw calibrate`, `rtrw list-recipes`.

pub mod calibration;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rtrw_core::verify::{list_recipes, Calibrator, RecipeConfig, RunContext, ScalingReport};

use crate::calibration::DiskCalibrator;
use crate::config::{template, ConfigFile};

/// Exit status when every criterion passes.
pub const EXIT_PASS: i32 = 0;
/// Exit status for configuration and runtime errors.
pub const EXIT_ERROR: i32 = 1;
/// Exit status when a criterion fails.
pub const EXIT_FAIL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rtrw", version, about = "Scaling experiments for randomly trapped random walks")]
pub struct Cli {
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; overrides [run].workers.
    #[arg(long, global = true, env = "RTRW_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory; overrides [run].out.
    #[arg(long, global = true, env = "RTRW_OUT")]
    pub out: Option<PathBuf>,
    /// Replace existing result files.
    #[arg(long, global = true)]
    pub overwrite: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the recipe of a config file and write its report.
    Run { config: PathBuf },
    /// Estimate the ℓ*(n) table a config's recipe would use.
    Calibrate { config: PathBuf },
    /// Print the recipe catalog with every default.
    ListRecipes {
        /// One JSON object per recipe instead of TOML templates.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Output(#[from] output::OutputError),
    #[error(transparent)]
    Verify(#[from] rtrw_core::verify::VerifyError),
    #[error("no master seed: set `seed` in {0} or pass --seed")]
    MissingSeed(PathBuf),
    #[error("the worker count must be positive")]
    Workers,
    #[error("cannot start the worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Settings after merging flags, environment and config file.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub overwrite: bool,
    pub cache: PathBuf,
    pub experiment: RecipeConfig,
}

impl Resolved {
    pub fn new(cli: &Cli, path: &Path) -> Result<Self, CliError> {
        let file = ConfigFile::load(path)?;
        let seed = cli
            .seed
            .or(file.seed)
            .ok_or_else(|| CliError::MissingSeed(path.to_path_buf()))?;
        let workers = cli.workers.or(file.run.workers);
        if workers == Some(0) {
            return Err(CliError::Workers);
        }
        let out = cli
            .out
            .clone()
            .or(file.run.out)
            .unwrap_or_else(|| Path::new("results").join(file.experiment.name()));
        let cache = file
            .run
            .calibration_cache
            .unwrap_or_else(|| out.join("calibration-cache"));
        Ok(Self {
            seed,
            workers,
            out,
            overwrite: cli.overwrite || file.run.overwrite,
            cache,
            experiment: file.experiment,
        })
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(w) = self.workers {
            builder = builder.num_threads(w);
        }
        Ok(builder.build()?)
    }

    pub fn calibrator(&self) -> DiskCalibrator {
        DiskCalibrator::new(self.seed, &self.cache)
    }

    /// Runs the recipe without touching the output directory.
    pub fn run_report(&self) -> Result<ScalingReport, CliError> {
        let calibrator = self.calibrator();
        let ctx = RunContext::new(self.seed, &calibrator);
        Ok(self.pool()?.install(|| self.experiment.run(&ctx))?)
    }
}

fn run(cli: &Cli, path: &Path) -> Result<i32, CliError> {
    let resolved = Resolved::new(cli, path)?;
    // Fail before computing if the results would be refused.
    if !resolved.overwrite {
        output::ensure_absent(&resolved.out, &output::RESULT_FILES)?;
    }
    eprintln!(
        "running {} (seed {}) into {}",
        resolved.experiment.name(),
        resolved.seed,
        resolved.out.display()
    );
    let report = resolved.run_report()?;
    output::write_report(&resolved.out, &report, resolved.overwrite)?;
    print!("{}", report.summary_text());
    Ok(if report.passed() { EXIT_PASS } else { EXIT_FAIL })
}

fn calibrate(cli: &Cli, path: &Path) -> Result<i32, CliError> {
    let resolved = Resolved::new(cli, path)?;
    let target = resolved.out.join(output::CALIBRATION_FILE);
    output::prepare(&resolved.out, &[output::CALIBRATION_FILE], resolved.overwrite)?;
    let (ns, replicas) = resolved.experiment.calibration_plan();
    let calibrator = resolved.calibrator();
    let rows = resolved
        .pool()?
        .install(|| calibrator.calibrate(resolved.experiment.skeleton(), &ns, replicas))?;
    output::write_calibration(&target, &rows)?;
    print!("{}", output::calibration_table(&rows));
    eprintln!("wrote {}", target.display());
    Ok(EXIT_PASS)
}

fn list(json: bool) {
    for (i, info) in list_recipes().into_iter().enumerate() {
        if json {
            println!("{}", serde_json::to_string(&info).expect("catalog serializes"));
            continue;
        }
        if i > 0 {
            println!();
        }
        println!("# {}: {} ({})", info.name, info.summary, info.runtime);
        let config = RecipeConfig::default_for(info.name).expect("catalog names are known");
        print!("{}", template(&config));
    }
}

/// Runs one command and returns the process exit status.
pub fn execute(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Run { config } => run(cli, config),
        Command::Calibrate { config } => calibrate(cli, config),
        Command::ListRecipes { json } => {
            list(*json);
            Ok(EXIT_PASS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_ERROR
    })
}
