//! Command-line front end: each subcommand reproduces one family of
//! simulation outputs as CSV/JSON files in the `--out` directory, plus a
//! `manifest.json` recording how they were made.
//!
//! Units follow the library convention: energies in t*, times in 1/t*.
//! Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 internal
//! invariant violation (including outputs that could not be written).

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qdmft::analysis::{self, FrequencyGrid};
use qdmft::dmft::{self, DmftConfig};
use qdmft::interferometry::{self, GreenMethod, TimeGrid};
use qdmft::siam::SiamParams;
use qdmft::{acceptance, trotter};

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "qdmft",
    version,
    about = "Two-site DMFT on an emulated five-qubit register.\n\
             Energies are in units of t*, times in 1/t*."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trotter fidelity over time for both gate dialects, one CSV per
    /// step count
    Fidelity(FidelityArgs),
    /// Retarded Green-function time series with an exact overlay column
    Green(GreenArgs),
    /// Self-consistent spectral function and self-energy per U value
    Spectral(SpectralArgs),
    /// Quasiparticle weight Z(U) across the Mott transition
    SweepZ(SweepZArgs),
    /// Acceptance suite; exits 0 iff every criterion passes
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// On-site repulsion U in t*
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    u: f64,
    /// Impurity-bath coupling V in t*
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    v: f64,
    /// Chemical potential in t*; defaults to U/2 (particle-hole symmetric)
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Bath level in t*
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    eps_c: f64,
    /// Hopping scale t* setting all units
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    t_star: f64,
}

impl ModelArgs {
    fn mu(&self) -> f64 {
        self.mu.unwrap_or(self.u / 2.0)
    }

    fn params(&self) -> Result<SiamParams, Failure> {
        SiamParams::with_t_star(self.u, self.mu(), self.eps_c, self.v, self.t_star)
            .map_err(usage)
    }

    fn json(&self) -> serde_json::Value {
        serde_json::json!({
            "u": self.u,
            "v": self.v,
            "mu": self.mu(),
            "eps_c": self.eps_c,
            "t_star": self.t_star,
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Xy,
    Cz,
    Exact,
}

impl MethodArg {
    fn green(self) -> GreenMethod {
        match self {
            MethodArg::Xy => GreenMethod::Xy,
            MethodArg::Cz => GreenMethod::Cz,
            MethodArg::Exact => GreenMethod::Exact,
        }
    }

    fn name(self) -> &'static str {
        self.green().as_str()
    }
}

#[derive(Args)]
struct FidelityArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Trotter step counts at tau-max; one output file per value
    #[arg(long, value_delimiter = ',', default_values_t = vec![6, 12, 18, 24])]
    trotter_steps: Vec<usize>,
    /// Largest evolution time in 1/t*; 0 emits the single tau = 0 row
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    tau_max: f64,
    /// Number of grid intervals between 0 and tau-max
    #[arg(long, default_value_t = 24)]
    n_points: usize,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GreenArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Propagation backend for the measured series
    #[arg(long, value_enum, default_value_t = MethodArg::Xy)]
    method: MethodArg,
    /// Trotter steps at tau-max; intermediate times scale proportionally
    #[arg(long, default_value_t = 24)]
    trotter_steps: usize,
    /// Largest evolution time in 1/t*
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    tau_max: f64,
    /// Number of grid intervals between 0 and tau-max
    #[arg(long, default_value_t = 24)]
    n_points: usize,
    /// Per-expectation measurement shots; omit for noiseless expectations
    #[arg(long)]
    shots: Option<u64>,
    /// Shot-noise seed; ignored without --shots
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SpectralArgs {
    /// On-site repulsion values U in t*, one curve per value
    #[arg(long, value_delimiter = ',', default_values_t = vec![5.0, 8.0], allow_negative_numbers = true)]
    u: Vec<f64>,
    /// Propagation backend for the self-consistency loop
    #[arg(long, value_enum, default_value_t = MethodArg::Xy)]
    method: MethodArg,
    /// Trotter steps at tau-max inside the loop
    #[arg(long, default_value_t = 24)]
    trotter_steps: usize,
    /// Broadening of the self-energy grid in t*
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    eta: f64,
    /// Hopping scale t* setting all units
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    t_star: f64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepZArgs {
    /// On-site repulsion grid in t*, swept in the order given
    #[arg(long, value_delimiter = ',', default_values_t = default_sweep_grid(), allow_negative_numbers = true)]
    u: Vec<f64>,
    /// Trotterized backend swept alongside the always-emitted exact
    /// reference; 'exact' sweeps the reference only
    #[arg(long, value_enum, default_value_t = MethodArg::Xy)]
    method: MethodArg,
    /// Trotter step counts for the trotterized backend, one file per value
    #[arg(long, value_delimiter = ',', default_values_t = vec![24, 48])]
    trotter_steps: Vec<usize>,
    /// Hopping scale t* setting all units
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    t_star: f64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelftestArgs {
    /// Comma-separated criterion indices to run instead of the full suite
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<usize>>,
}

fn default_sweep_grid() -> Vec<f64> {
    let mut grid = vec![0.1];
    grid.extend((1..=16).map(|k| k as f64 * 0.5));
    grid
}

enum Failure {
    Usage(String),
    Numerical(qdmft::Error),
    Internal(String),
}

impl From<qdmft::Error> for Failure {
    fn from(e: qdmft::Error) -> Failure {
        Failure::Numerical(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Internal(e.to_string())
    }
}

/// Marks a library rejection of flag-derived values as a usage error.
fn usage(e: qdmft::Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Fidelity(args) => cmd_fidelity(args),
        Command::Green(args) => cmd_green(args),
        Command::Spectral(args) => cmd_spectral(args),
        Command::SweepZ(args) => cmd_sweep_z(args),
        Command::Selftest(args) => return cmd_selftest(&args),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e}");
            2
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            3
        }
    }
}

/// Output directory plus the running list of files written into it, in
/// emission order, for the closing manifest.
struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<OutDir, Failure> {
        fs::create_dir_all(dir)?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<(), Failure> {
        fs::write(self.dir.join(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish(
        self,
        command: &'static str,
        parameters: serde_json::Value,
        seed: Option<u64>,
        started: Instant,
    ) -> Result<(), Failure> {
        RunManifest::new(command, parameters, seed, self.files, started)
            .write(&self.dir)?;
        Ok(())
    }
}

fn cmd_fidelity(args: FidelityArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let params = args.model.params()?;
    if args.trotter_steps.is_empty() || args.trotter_steps.contains(&0) {
        return Err(Failure::Usage(
            "--trotter-steps needs one or more positive values".into(),
        ));
    }
    if !args.tau_max.is_finite() || args.tau_max < 0.0 {
        return Err(Failure::Usage(format!(
            "tau_max = {} must be nonnegative",
            args.tau_max
        )));
    }
    let grid = if args.tau_max == 0.0 {
        None
    } else {
        Some(TimeGrid::new(args.tau_max, args.n_points).map_err(usage)?)
    };

    let mut out = OutDir::create(&args.out)?;
    for &n in &args.trotter_steps {
        let mut csv = String::from("tau,fidelity_xy,fidelity_cz\n");
        match grid {
            // Zero evolution time: every backend is the identity.
            None => csv.push_str("0,1,1\n"),
            Some(grid) => {
                let xy = interferometry::fidelity_series(
                    &params,
                    &grid,
                    trotter::Method::Xy,
                    n,
                )?;
                let cz = interferometry::fidelity_series(
                    &params,
                    &grid,
                    trotter::Method::Cz,
                    n,
                )?;
                for k in 0..=grid.n_points {
                    csv.push_str(&format!("{},{},{}\n", grid.tau(k), xy[k], cz[k]));
                }
            }
        }
        out.write(&format!("fidelity_n{n}.csv"), &csv)?;
    }

    let mut parameters = args.model.json();
    parameters["trotter_steps"] = serde_json::json!(args.trotter_steps);
    parameters["tau_max"] = serde_json::json!(args.tau_max);
    parameters["n_points"] = serde_json::json!(args.n_points);
    out.finish("fidelity", parameters, None, started)
}

fn cmd_green(args: GreenArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let params = args.model.params()?;
    let grid = TimeGrid::new(args.tau_max, args.n_points).map_err(usage)?;
    if args.trotter_steps == 0 {
        return Err(Failure::Usage("--trotter-steps must be at least 1".into()));
    }
    if args.shots == Some(0) {
        return Err(Failure::Usage("--shots must be at least 1".into()));
    }

    let series = match args.shots {
        Some(shots) => interferometry::measure_green_series_sampled(
            &params,
            &grid,
            args.method.green(),
            args.trotter_steps,
            shots,
            args.seed,
        )?,
        None => interferometry::measure_green_series(
            &params,
            &grid,
            args.method.green(),
            args.trotter_steps,
        )?,
    };
    // The overlay stays noiseless: it is the reference the measured
    // series is judged against.
    let exact = interferometry::measure_green_series(
        &params,
        &grid,
        GreenMethod::Exact,
        args.trotter_steps,
    )?;

    let mut csv = String::from("tau,re_igr,im_igr,re_igr_exact,im_igr_exact\n");
    for (k, tau) in series.times.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            tau,
            series.values[k].re,
            series.values[k].im,
            exact.values[k].re,
            exact.values[k].im,
        ));
    }

    let mut out = OutDir::create(&args.out)?;
    out.write("green.csv", &csv)?;
    out.write("green.json", &series.to_json())?;

    let mut parameters = args.model.json();
    parameters["method"] = serde_json::json!(args.method.name());
    parameters["trotter_steps"] = serde_json::json!(args.trotter_steps);
    parameters["tau_max"] = serde_json::json!(args.tau_max);
    parameters["n_points"] = serde_json::json!(args.n_points);
    parameters["shots"] = serde_json::json!(args.shots);
    out.finish("green", parameters, args.shots.map(|_| args.seed), started)
}

fn cmd_spectral(args: SpectralArgs) -> Result<(), Failure> {
    let started = Instant::now();
    if args.u.is_empty() {
        return Err(Failure::Usage("--u needs at least one value".into()));
    }
    if args.trotter_steps == 0 {
        return Err(Failure::Usage("--trotter-steps must be at least 1".into()));
    }
    // Catch bad flag values before the loop spends time on them.
    for &u in &args.u {
        SiamParams::with_t_star(u, u / 2.0, 0.0, args.t_star, args.t_star)
            .map_err(usage)?;
    }
    let sigma_grid = FrequencyGrid::uniform(
        -8.0 * args.t_star,
        8.0 * args.t_star,
        1601,
        args.eta,
    )
    .map_err(usage)?;
    let curve_grid = FrequencyGrid::midpoint_curve(args.t_star);

    let mut out = OutDir::create(&args.out)?;
    for &u in &args.u {
        let config = DmftConfig::half_filled(
            u,
            args.t_star,
            args.method.green(),
            args.trotter_steps,
        );
        let result = dmft::run(&config)?;
        let converged = SiamParams::with_t_star(
            u,
            u / 2.0,
            result.epsilon_c_final,
            result.v_final,
            args.t_star,
        )?;
        let label = format!("{u}");

        // A(omega) on the eta = 0 midpoint grid, where the semicircle
        // evaluation needs no broadening.
        let se_curve =
            analysis::dyson_self_energy(&result.final_fit, &converged, &curve_grid)?;
        let a = analysis::spectral_function(&se_curve, &converged);
        out.write(
            &format!("spectral_u{label}.csv"),
            &analysis::spectral_csv(&curve_grid.omegas, &a),
        )?;

        let se = analysis::dyson_self_energy(&result.final_fit, &converged, &sigma_grid)?;
        out.write(&format!("sigma_u{label}.csv"), &se.to_csv())?;
        out.write(&format!("loop_u{label}.json"), &result.to_json())?;
    }

    let parameters = serde_json::json!({
        "u": args.u,
        "method": args.method.name(),
        "trotter_steps": args.trotter_steps,
        "eta": args.eta,
        "t_star": args.t_star,
    });
    out.finish("spectral", parameters, None, started)
}

fn cmd_sweep_z(args: SweepZArgs) -> Result<(), Failure> {
    let started = Instant::now();
    if args.u.is_empty() {
        return Err(Failure::Usage("--u needs at least one value".into()));
    }
    for &u in &args.u {
        SiamParams::with_t_star(u, u / 2.0, 0.0, args.t_star, args.t_star)
            .map_err(usage)?;
    }
    let trotterized = args.method != MethodArg::Exact;
    if trotterized && (args.trotter_steps.is_empty() || args.trotter_steps.contains(&0)) {
        return Err(Failure::Usage(
            "--trotter-steps needs one or more positive values".into(),
        ));
    }

    let mut out = OutDir::create(&args.out)?;
    let template = |method: GreenMethod, n_steps: usize| {
        DmftConfig::half_filled(1.0, args.t_star, method, n_steps)
    };
    let points = dmft::sweep_z(&template(GreenMethod::Exact, 24), &args.u);
    out.write("sweep_exact.csv", &dmft::sweep_csv(&points))?;
    if trotterized {
        for &n in &args.trotter_steps {
            let points = dmft::sweep_z(&template(args.method.green(), n), &args.u);
            out.write(
                &format!("sweep_{}_n{n}.csv", args.method.name()),
                &dmft::sweep_csv(&points),
            )?;
        }
    }

    let parameters = serde_json::json!({
        "u": args.u,
        "method": args.method.name(),
        "trotter_steps": args.trotter_steps,
        "t_star": args.t_star,
    });
    out.finish("sweep-z", parameters, None, started)
}

fn cmd_selftest(args: &SelftestArgs) -> i32 {
    let indices: Vec<usize> = match &args.only {
        Some(list) => list.clone(),
        None => (1..=acceptance::N_CRITERIA).collect(),
    };
    if indices.is_empty()
        || indices.iter().any(|&i| i == 0 || i > acceptance::N_CRITERIA)
    {
        eprintln!(
            "error: --only takes criterion indices in 1..={}",
            acceptance::N_CRITERIA
        );
        return 1;
    }

    let mut all_passed = true;
    for &index in &indices {
        match std::panic::catch_unwind(|| acceptance::criterion(index)) {
            Ok(report) => {
                println!("{}", report.line());
                all_passed &= report.passed;
            }
            Err(_) => {
                println!("criterion {index:02} ABORT: invariant violation, see stderr");
                return 3;
            }
        }
    }
    if all_passed {
        println!("selftest: {} of {} criteria passed", indices.len(), indices.len());
        0
    } else {
        println!("selftest: FAILED");
        2
    }
}
