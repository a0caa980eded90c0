use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use bmcarpet::{
    alpha_of_t, alpha_range, approx_square, birkhoff, classify_square, coarse_spectrum,
    covering_sum_demo, hausdorff_dimension, legendre_point, spectrum_curve, symbolic_local_dim,
    v_k, verify_convergence, z_k, BallRunConfig, CarpetSpec, CoarseMode, EmpiricalError,
    SpectrumError, SymbolicPrefix,
};
use clap::{Args, Parser, Subcommand};

/// Multifractal spectra of Bernoulli measures on Bedford-McMullen carpets.
#[derive(Parser)]
#[command(name = "bmcarpet", version, about)]
struct Cli {
    /// Reserved for data-parallel library calls; never changes output bytes.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArg {
    /// Carpet spec file (TOML: m, n, digits = [[row, col], ...], probs).
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Args)]
struct OutputArg {
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print carpet parameters and spectrum endpoints.
    Info {
        #[command(flatten)]
        spec: SpecArg,
    },
    /// CSV of (t, alpha, f, beta) over a uniform t-grid.
    Curve {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = -20.0)]
        t_min: f64,
        #[arg(long, default_value_t = 20.0)]
        t_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Evaluate the spectrum at one alpha: prints f(alpha) and t*.
    F {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        alpha: f64,
    },
    /// Geometry, measure and diagnostics of one approximate square.
    Square {
        #[command(flatten)]
        spec: SpecArg,
        /// Digit prefix as semicolon-separated row,col pairs, e.g. 0,0;1,1.
        #[arg(long)]
        prefix: String,
        #[arg(long)]
        k: usize,
        /// Tilt parameter for A_k and the Y/G classification.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Target exponent for the Y/G classification; defaults to alpha(t).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
    /// CSV coarse spectrum: per-alpha square counts and ln(count)/(k ln m).
    Coarse {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        /// Number of alpha grid points spanning [alpha_min, alpha_max].
        #[arg(long, default_value_t = 61)]
        alpha_points: usize,
        /// Sample this many square indices instead of exact enumeration.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArg,
    },
    /// CSV convergence report: sampled local dimensions vs alpha(t).
    Verify {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 5000)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also regress exact ball measures for this many samples (0 = skip).
        #[arg(long, default_value_t = 0)]
        ball_samples: usize,
        #[command(flatten)]
        out: OutputArg,
    },
    /// CSV covering sums S_k over the good squares G(alpha, eps, k).
    Cover {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Exponent target; defaults to alpha(t).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        /// Slack exponent; must exceed eps * (alpha |t| + 2). Defaults to
        /// that bound plus 0.05.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 8)]
        k_min: usize,
        #[arg(long, default_value_t = 16)]
        k_max: usize,
        #[command(flatten)]
        out: OutputArg,
    },
}

enum CliError {
    Input(String),
    Numeric(String),
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        match e {
            SpectrumError::NoConvergence { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<EmpiricalError> for CliError {
    fn from(e: EmpiricalError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn load_spec(arg: &SpecArg) -> Result<(CarpetSpec, String), CliError> {
    let text = fs::read_to_string(&arg.spec)
        .map_err(|e| CliError::Input(format!("spec {}: {e}", arg.spec.display())))?;
    let spec = CarpetSpec::from_toml_str(&text).map_err(|e| {
        let flat = e.split_whitespace().collect::<Vec<_>>().join(" ");
        CliError::Input(format!("spec {}: {flat}", arg.spec.display()))
    })?;
    Ok((spec, arg.spec.display().to_string()))
}

fn emit(out: &OutputArg, body: String) -> Result<(), CliError> {
    match &out.output {
        Some(path) => fs::write(path, body)
            .map_err(|e| CliError::Input(format!("output {}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn header(spec: &CarpetSpec, path: &str, cmd: &str, params: &[(&str, String)]) -> String {
    let mut s = format!("# bmcarpet {cmd}\n# spec = {path}\n# fingerprint = {}\n", spec.fingerprint());
    for (k, v) in params {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Info { spec } => {
            let (c, _) = load_spec(&spec)?;
            let range = alpha_range(&c);
            println!("m = {}", c.m());
            println!("n = {}", c.n());
            println!("sigma = {}", c.sigma());
            println!("digits = {}", c.digit_count());
            println!(
                "q = [{}]",
                c.row_probs()
                    .iter()
                    .map(|q| q.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            println!(
                "N = [{}]",
                c.row_counts()
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            println!("hausdorff_dim = {}", hausdorff_dimension(&c));
            println!("alpha_min = {}", range.alpha_min);
            println!("alpha_max = {}", range.alpha_max);
            println!("f_at_alpha_min = {}", range.f_at_min);
            println!("f_at_alpha_max = {}", range.f_at_max);
            println!("fingerprint = {}", c.fingerprint());
            Ok(())
        }
        Command::Curve {
            spec,
            t_min,
            t_max,
            points,
            out,
        } => {
            let (c, path) = load_spec(&spec)?;
            if points < 2 || !(t_min < t_max) {
                return Err(CliError::Input(format!(
                    "need points >= 2 and t-min < t-max, got points={points}, t-min={t_min}, t-max={t_max}"
                )));
            }
            let grid: Vec<f64> = (0..points)
                .map(|i| t_min + (t_max - t_min) * i as f64 / (points - 1) as f64)
                .collect();
            let curve = spectrum_curve(&c, &grid)?;
            let mut body = header(
                &c,
                &path,
                "curve",
                &[
                    ("t-min", t_min.to_string()),
                    ("t-max", t_max.to_string()),
                    ("points", points.to_string()),
                ],
            );
            body.push_str("t,alpha,f,beta\n");
            for s in &curve.samples {
                body.push_str(&format!("{},{},{},{}\n", s.t, s.alpha, s.f, s.beta));
            }
            emit(&out, body)
        }
        Command::F { spec, alpha } => {
            let (c, _) = load_spec(&spec)?;
            let point = legendre_point(&c, alpha)?;
            println!("alpha = {alpha}");
            println!("f = {}", point.f);
            println!("t_star = {}", point.t_star);
            Ok(())
        }
        Command::Square {
            spec,
            prefix,
            k,
            t,
            alpha,
            eps,
        } => {
            let (c, _) = load_spec(&spec)?;
            let prefix = SymbolicPrefix::parse(&c, &prefix).map_err(CliError::Input)?;
            let sq = approx_square(&c, &prefix, k).map_err(|e| CliError::Input(e.to_string()))?;
            let alpha = alpha.unwrap_or_else(|| alpha_of_t(&c, t));
            println!("k = {}", sq.k);
            println!("l = {}", sq.l);
            println!("x0 = {}", sq.x0);
            println!("y0 = {}", sq.y0);
            println!("width = {}", sq.width);
            println!("height = {}", sq.height);
            println!("measure = {}", sq.measure);
            println!(
                "symbolic_dim = {}",
                symbolic_local_dim(&c, &prefix, k).map_err(|e| CliError::Input(e.to_string()))?
            );
            match birkhoff(&c, &prefix, t, k) {
                Ok(b) => println!("a_k = {}", b.a_k),
                Err(e) => println!("a_k = unavailable ({e})"),
            }
            match v_k(&c, &prefix, k) {
                Some(v) => println!("v_k = {v}"),
                None => println!("v_k = none (no witness within prefix)"),
            }
            match z_k(&c, &prefix, k) {
                Some(z) => println!("z_k = {z}"),
                None => println!("z_k = none (no witness within prefix)"),
            }
            match classify_square(&c, &sq, alpha, eps, t) {
                Ok(class) => {
                    println!("alpha_target = {alpha}");
                    println!("eps = {eps}");
                    println!("in_y = {}", class.in_y);
                    println!("in_g = {}", class.in_g);
                }
                Err(e) => println!("class = unavailable ({e})"),
            }
            Ok(())
        }
        Command::Coarse {
            spec,
            k,
            eps,
            alpha_points,
            samples,
            seed,
            out,
        } => {
            let (c, path) = load_spec(&spec)?;
            if alpha_points < 2 {
                return Err(CliError::Input(format!(
                    "need alpha-points >= 2, got {alpha_points}"
                )));
            }
            let range = alpha_range(&c);
            let grid: Vec<f64> = (0..alpha_points)
                .map(|i| {
                    range.alpha_min
                        + (range.alpha_max - range.alpha_min) * i as f64
                            / (alpha_points - 1) as f64
                })
                .collect();
            let mode = match samples {
                Some(samples) => CoarseMode::Sampled { samples, seed },
                None => CoarseMode::Exact,
            };
            let report = coarse_spectrum(&c, k, eps, &grid, mode)?;
            let mut body = header(
                &c,
                &path,
                "coarse",
                &[
                    ("k", k.to_string()),
                    ("eps", eps.to_string()),
                    ("alpha-points", alpha_points.to_string()),
                    (
                        "mode",
                        match samples {
                            Some(s) => format!("sampled samples={s} seed={seed}"),
                            None => "exact".into(),
                        },
                    ),
                    ("total-squares", report.total_squares.to_string()),
                ],
            );
            body.push_str("alpha,count,f_hat\n");
            for ((a, count), f_hat) in grid.iter().zip(&report.counts).zip(&report.f_hat) {
                let f_hat = f_hat.map(|f| f.to_string()).unwrap_or_default();
                body.push_str(&format!("{a},{count},{f_hat}\n"));
            }
            emit(&out, body)
        }
        Command::Verify {
            spec,
            t,
            samples,
            k,
            seed,
            ball_samples,
            out,
        } => {
            let (c, path) = load_spec(&spec)?;
            let ball = (ball_samples > 0).then(|| BallRunConfig {
                samples: ball_samples,
                ..BallRunConfig::default()
            });
            let report = verify_convergence(&c, t, samples, k, seed, ball)?;
            let mut params = vec![
                ("t", t.to_string()),
                ("samples", samples.to_string()),
                ("k", k.to_string()),
                ("seed", seed.to_string()),
                ("ball-samples", ball_samples.to_string()),
                ("alpha-target", report.alpha_target.to_string()),
                ("mean-symbolic", report.mean_symbolic.to_string()),
                (
                    "mean-abs-err-symbolic",
                    report.mean_abs_err_symbolic.to_string(),
                ),
            ];
            if ball_samples > 0 {
                params.push(("ball-tolerance", report.ball_tolerance.to_string()));
                params.push(("frac-ball-within", report.frac_ball_within.to_string()));
            }
            let mut body = header(&c, &path, "verify", &params);
            body.push_str("sample,symbolic_dim,ball_slope\n");
            for (i, d) in report.symbolic_dims.iter().enumerate() {
                let slope = report
                    .ball_slopes
                    .get(i)
                    .map(|s| s.to_string())
                    .unwrap_or_default();
                body.push_str(&format!("{i},{d},{slope}\n"));
            }
            emit(&out, body)
        }
        Command::Cover {
            spec,
            t,
            alpha,
            eps,
            delta,
            k_min,
            k_max,
            out,
        } => {
            let (c, path) = load_spec(&spec)?;
            if k_min > k_max {
                return Err(CliError::Input(format!(
                    "need k-min <= k-max, got {k_min} > {k_max}"
                )));
            }
            let alpha = alpha.unwrap_or_else(|| alpha_of_t(&c, t));
            let delta = delta.unwrap_or_else(|| eps * (alpha * t.abs() + 2.0) + 0.05);
            let report = covering_sum_demo(&c, t, alpha, eps, delta, k_min, k_max)?;
            let mut body = header(
                &c,
                &path,
                "cover",
                &[
                    ("t", t.to_string()),
                    ("alpha", alpha.to_string()),
                    ("eps", eps.to_string()),
                    ("delta", delta.to_string()),
                    ("exponent", report.exponent.to_string()),
                    ("k-min", k_min.to_string()),
                    ("k-max", k_max.to_string()),
                ],
            );
            body.push_str("k,squares_in_g,sum,ratio\n");
            for (i, level) in report.levels.iter().enumerate() {
                let ratio = if i == 0 {
                    String::new()
                } else {
                    report
                        .ratios
                        .get(i - 1)
                        .map(|r| r.to_string())
                        .unwrap_or_default()
                };
                body.push_str(&format!(
                    "{},{},{},{ratio}\n",
                    level.k, level.squares_in_g, level.sum
                ));
            }
            emit(&out, body)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
