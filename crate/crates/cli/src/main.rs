use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use wl1_core::experiment::{self, BlockAssignment, SweepConfig};
use wl1_core::format::{round10, sig10};
use wl1_core::{
    alpha_of_rho, optimal_weights, threshold_solve, DensityProfile, Error, ProfileFile, Weight,
    WeightProfile,
};

#[derive(Parser)]
#[command(
    name = "wl1",
    version,
    about = "Recovery thresholds for weighted l1 compressed sensing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic threshold of a density profile, as JSON.
    Threshold {
        /// Profile file: {"blocks": [{"rho": .., "fraction": .., "weight": ..}]}
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, value_enum, default_value_t = WeightChoice::Uniform)]
        weights: WeightChoice,
    },
    /// Single-density threshold curve, as CSV.
    Curve {
        #[arg(long, default_value_t = 0.0)]
        rho_min: f64,
        #[arg(long, default_value_t = 1.0)]
        rho_max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
    },
    /// Two-block thresholds over mean density and weight asymmetry, as CSV.
    ///
    /// Blocks have densities rho_bar + b delta_rho and weights 1 - b delta_w
    /// for b = +1, -1.
    TwoBlockSweep {
        #[arg(long)]
        rho_bar_min: f64,
        #[arg(long)]
        rho_bar_max: f64,
        #[arg(long, default_value_t = 51)]
        rho_bar_steps: usize,
        #[arg(long)]
        delta_rho: f64,
        /// Comma-separated weight asymmetries.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        delta_w: Vec<f64>,
    },
    /// Monte Carlo recovery thresholds, written as CSV.
    Mc {
        /// Comma-separated system sizes.
        #[arg(long = "n", value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long)]
        trials: usize,
        /// Profile file; any weights in it are ignored.
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, value_enum)]
        weighting: Weighting,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Quadratic fit in 1/n of a Monte Carlo CSV, as JSON.
    Extrapolate {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightChoice {
    Uniform,
    Optimal,
    /// Weights given in the profile file.
    FromFile,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weighting {
    Uniform,
    Optimal,
}

enum Failure {
    Input(String),
    Numeric(String),
    Abort(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Domain(_)
            | Error::InvalidProfile(_)
            | Error::LengthMismatch { .. }
            | Error::Dimension(_)
            | Error::Parse(_) => Failure::Input(msg),
            Error::NoSignChange { .. }
            | Error::NoRoot(_)
            | Error::Lp(_)
            | Error::SingularBasis
            | Error::SingularFit(_) => Failure::Numeric(msg),
            Error::Trial(_) | Error::TooManyFailures { .. } => Failure::Abort(msg),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Threshold { profile, weights } => cmd_threshold(&profile, weights),
        Command::Curve {
            rho_min,
            rho_max,
            steps,
        } => cmd_curve(rho_min, rho_max, steps),
        Command::TwoBlockSweep {
            rho_bar_min,
            rho_bar_max,
            rho_bar_steps,
            delta_rho,
            delta_w,
        } => cmd_two_block_sweep(rho_bar_min, rho_bar_max, rho_bar_steps, delta_rho, &delta_w),
        Command::Mc {
            sizes,
            trials,
            profile,
            weighting,
            seed,
            out,
        } => cmd_mc(sizes, trials, &profile, weighting, seed, &out),
        Command::Extrapolate { input } => cmd_extrapolate(&input),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Input(m) => (2, m),
                Failure::Numeric(m) => (3, m),
                Failure::Abort(m) => (4, m),
            };
            eprintln!("wl1: {msg}");
            ExitCode::from(code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_profile(path: &Path) -> Result<ProfileFile, Failure> {
    Ok(ProfileFile::parse(&read(path)?)?)
}

fn weight_json(w: &Weight) -> Value {
    match w {
        Weight::Finite(v) => json!(round10(*v)),
        Weight::Excluded => Value::Null,
    }
}

fn cmd_threshold(path: &Path, choice: WeightChoice) -> CmdResult {
    let file = load_profile(path)?;
    let profile = file.density_profile()?;
    let weights = match choice {
        WeightChoice::Uniform => WeightProfile::uniform(profile.len()),
        WeightChoice::Optimal => optimal_weights(&profile)?.0,
        WeightChoice::FromFile => file
            .weight_profile()?
            .ok_or_else(|| Failure::Input("profile file carries no weights".into()))?,
    };
    let r = threshold_solve(&profile, &weights)?;
    let out = json!({
        "alpha_c": round10(r.alpha_c),
        "q_hat": r.q_hat.map(round10),
        "stable": r.stable,
        "weights_used": weights.weights().iter().map(weight_json).collect::<Vec<_>>(),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("json values serialize")
    );
    Ok(())
}

fn grid(lo: f64, hi: f64, steps: usize) -> impl Iterator<Item = f64> {
    let h = (hi - lo) / (steps - 1) as f64;
    (0..steps).map(move |k| {
        if k + 1 == steps {
            hi
        } else {
            lo + k as f64 * h
        }
    })
}

fn cmd_curve(rho_min: f64, rho_max: f64, steps: usize) -> CmdResult {
    if !(0.0 <= rho_min && rho_min < rho_max && rho_max <= 1.0) {
        return Err(Failure::Input(format!(
            "need 0 <= rho_min < rho_max <= 1, got [{rho_min}, {rho_max}]"
        )));
    }
    if steps < 2 {
        return Err(Failure::Input("steps must be at least 2".into()));
    }
    let mut out = String::from("rho,alpha_unweighted,alpha_optimal\n");
    for rho in grid(rho_min, rho_max, steps) {
        let unweighted =
            threshold_solve(&DensityProfile::single(rho)?, &WeightProfile::uniform(1))?;
        let optimal = alpha_of_rho(rho)?;
        let _ = writeln!(
            out,
            "{},{},{}",
            sig10(rho),
            sig10(unweighted.alpha_c),
            sig10(optimal)
        );
    }
    print!("{out}");
    Ok(())
}

fn cmd_two_block_sweep(
    rho_bar_min: f64,
    rho_bar_max: f64,
    steps: usize,
    delta_rho: f64,
    delta_w: &[f64],
) -> CmdResult {
    if rho_bar_min.is_nan()
        || rho_bar_max.is_nan()
        || rho_bar_min > rho_bar_max
        || steps == 0
        || (steps == 1 && rho_bar_min != rho_bar_max)
    {
        return Err(Failure::Input("invalid rho_bar range".into()));
    }
    let rho_bars: Vec<f64> = if steps == 1 {
        vec![rho_bar_min]
    } else {
        grid(rho_bar_min, rho_bar_max, steps).collect()
    };
    for &rb in &rho_bars {
        for rho in [rb + delta_rho, rb - delta_rho] {
            if !(0.0..=1.0).contains(&rho) {
                return Err(Failure::Input(format!(
                    "rho_bar = {rb} with delta_rho = {delta_rho} puts a block density at {rho}, outside [0, 1]"
                )));
            }
        }
    }
    let mut out = String::from("rho_bar,delta_w,alpha_c\n");
    for &rb in &rho_bars {
        let profile = DensityProfile::two_block(rb, delta_rho)?;
        for &dw in delta_w {
            let r = threshold_solve(&profile, &WeightProfile::two_block(dw)?)?;
            let _ = writeln!(out, "{},{},{}", sig10(rb), sig10(dw), sig10(r.alpha_c));
        }
    }
    print!("{out}");
    Ok(())
}

fn cmd_mc(
    sizes: Vec<usize>,
    trials: usize,
    profile_path: &Path,
    weighting: Weighting,
    seed: u64,
    out: &Path,
) -> CmdResult {
    let profile = load_profile(profile_path)?.density_profile()?;
    if trials == 0 {
        return Err(Failure::Input("trials must be at least 1".into()));
    }
    let config = SweepConfig {
        sizes: sizes.clone(),
        trials,
        profile,
        assignment: BlockAssignment::Contiguous,
        weighted: matches!(weighting, Weighting::Optimal),
        base_seed: seed,
    };
    let mut points = Vec::with_capacity(sizes.len());
    for &n in &sizes {
        let p = experiment::sweep_size(&config, n)?;
        println!(
            "n={} trials={} failed={} mean_alpha={} stderr={}",
            p.n,
            p.trials,
            p.failed,
            sig10(p.mean_alpha),
            sig10(p.stderr)
        );
        points.push(p);
    }
    std::fs::write(out, experiment::write_sweep_csv(&points))
        .map_err(|e| Failure::Input(format!("{}: {e}", out.display())))?;
    Ok(())
}

fn cmd_extrapolate(path: &Path) -> CmdResult {
    let points = experiment::read_sweep_csv(&read(path)?)?;
    let fit = experiment::extrapolate_sweep(&points)?;
    println!("{}", fit.to_json());
    Ok(())
}
