use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use outer_radii::gaussian::{expected_max_chi, ChiMaxQuery};
use outer_radii::harness::{
    self, csv_bytes, default_grid, lemma_checks, normalizer, sweep_rows, gaussian_polytope_report,
    write_output, SweepConfig, SweepRow, DEFAULT_FLAGS, DEFAULT_MOMENT_SAMPLES,
    DEFAULT_SEED,
};
use outer_radii::moments::moment;
use outer_radii::radii::mean_outer_radius;
use outer_radii::{make_body, BodyKind, Error, StreamKey};

#[derive(Parser)]
#[command(name = "outer-radii", version, about = "Mean outer radii of random polytopes")]
struct Cli {
    /// Worker threads (defaults to all cores; output does not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate R̃_k(K_N) for one random polytope.
    Estimate(EstimateArgs),
    /// Run a sweep grid and write CSV.
    Sweep(GridArgs),
    /// Gaussian oracle table; with --n also Monte Carlo Gaussian polytopes.
    Gaussian(GaussianArgs),
    /// Run the check suite; exits with status 2 if any check fails.
    Check(GridArgs),
    /// Plot one CSV column against another as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    body: String,
    #[arg(long)]
    n: usize,
    #[arg(long = "N")]
    count: usize,
    #[arg(long)]
    k: usize,
    #[arg(long = "M", default_value_t = DEFAULT_FLAGS)]
    flags: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Also estimate I_q(K) from N points.
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Args)]
struct GridArgs {
    /// JSON sweep configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    body: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "N", value_delimiter = ',')]
    counts: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long = "M")]
    flags: Option<usize>,
    #[arg(long = "R")]
    replicas: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GaussianArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,50")]
    k: Vec<usize>,
    #[arg(long = "N", value_delimiter = ',', default_value = "1,10,100,1000")]
    counts: Vec<usize>,
    /// Ambient dimension for Monte Carlo Gaussian polytopes.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "R", default_value_t = 256)]
    replicas: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "k")]
    x: String,
    #[arg(long, default_value = "ratio")]
    y: String,
    #[arg(long)]
    out: PathBuf,
}

enum Outcome {
    Done,
    ChecksFailed,
}

impl GridArgs {
    /// Configs selected by the flags: the file, a single body, or the
    /// default grid when neither is given.
    fn configs(&self) -> Result<Vec<SweepConfig>, Error> {
        let mut configs = match (&self.config, &self.body) {
            (Some(path), _) => vec![SweepConfig::from_path(path)?],
            (None, Some(body)) => {
                let kind: BodyKind = body.parse()?;
                let n = self
                    .n
                    .ok_or_else(|| Error::Config("--n is required with --body".into()))?;
                let counts = self.counts.clone().unwrap_or_else(|| vec![n]);
                let ks = self.k.clone().unwrap_or_else(|| vec![1, n]);
                vec![SweepConfig::new(kind, n, counts, ks)]
            }
            (None, None) => default_grid(),
        };
        for config in &mut configs {
            if self.config.is_some() {
                if let Some(body) = &self.body {
                    config.body = body.clone();
                }
                if let Some(n) = self.n {
                    config.n = n;
                }
                if let Some(counts) = &self.counts {
                    config.n_list = counts.clone();
                }
                if let Some(k) = &self.k {
                    config.k_list = k.clone();
                }
            }
            if let Some(flags) = self.flags {
                config.flags = flags;
            }
            if let Some(replicas) = self.replicas {
                config.replicas = replicas;
            }
            if let Some(seed) = self.seed {
                config.seed = seed;
            }
            config.validate()?;
        }
        Ok(configs)
    }
}

fn estimate(args: &EstimateArgs) -> Result<Outcome, Error> {
    let kind: BodyKind = args.body.parse()?;
    let body = make_body::<f64>(kind, args.n)?;
    let key = StreamKey::new(args.seed);
    let cloud = body.sample(args.count, &key.derive(0))?;
    let r = mean_outer_radius(&cloud, args.k, args.flags, &key.derive(1))?;
    let norm = normalizer(args.k, args.count, body.isotropic_constant());
    println!("body      {kind}");
    println!("n N k     {} {} {}", args.n, args.count, args.k);
    println!("estimate  {:.10} ± {:.3e}", r.value, r.stderr);
    println!("L_K       {:.10}", body.isotropic_constant());
    println!("ratio     {:.6}", r.value / norm);
    if let Some(q) = args.q {
        let m = moment(&body, q, args.count.max(DEFAULT_MOMENT_SAMPLES), &key.derive(2))?;
        println!("I_q(K)    {:.10} ± {:.3e} (q = {q})", m.value, m.stderr);
    }
    Ok(Outcome::Done)
}

fn sweep(args: &GridArgs) -> Result<Outcome, Error> {
    let configs = args.configs()?;
    let mut rows: Vec<SweepRow> = Vec::new();
    for config in &configs {
        rows.extend(sweep_rows(config)?);
    }
    let bytes = csv_bytes(&rows)?;
    let out = args.out.clone().or_else(|| {
        (configs.len() == 1).then(|| configs[0].output.clone()).flatten()
    });
    match out {
        Some(path) => {
            write_output(&path, &bytes)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    Ok(Outcome::Done)
}

fn gaussian(args: &GaussianArgs) -> Result<Outcome, Error> {
    match args.n {
        None => {
            println!("{:>4} {:>8} {:>14} {:>10} {:>8}", "k", "N", "E max |G|", "normalizer", "ratio");
            for &k in &args.k {
                for &count in &args.counts {
                    let value = expected_max_chi(&ChiMaxQuery::<f64>::new(k, count))?;
                    let norm = normalizer(k, count, 1.0);
                    println!("{k:>4} {count:>8} {value:>14.10} {norm:>10.6} {:>8.4}", value / norm);
                }
            }
            Ok(Outcome::Done)
        }
        Some(n) => {
            let rows = gaussian_polytope_report(n, &args.k, &args.counts, args.replicas, &StreamKey::new(args.seed))?;
            println!(
                "{:>4} {:>8} {:>14} {:>10} {:>14} {:>10} verdict",
                "k", "N", "Monte Carlo", "stderr", "oracle", "normalizer"
            );
            for r in &rows {
                println!(
                    "{:>4} {:>8} {:>14.8} {:>10.2e} {:>14.8} {:>10.6} {}",
                    r.k,
                    r.count,
                    r.estimate.value,
                    r.estimate.stderr,
                    r.oracle,
                    r.normalizer,
                    if r.agrees { "pass" } else { "FAIL" }
                );
            }
            Ok(if rows.iter().all(|r| r.agrees) {
                Outcome::Done
            } else {
                Outcome::ChecksFailed
            })
        }
    }
}

fn check(args: &GridArgs) -> Result<Outcome, Error> {
    let mut ok = true;
    for config in args.configs()? {
        println!("# {} n = {}", config.body, config.n);
        let report = lemma_checks(&config)?;
        print!("{report}");
        ok &= report.passed();
    }
    Ok(if ok { Outcome::Done } else { Outcome::ChecksFailed })
}

fn plot(args: &PlotArgs) -> Result<Outcome, Error> {
    let series = harness::emit_plot(&args.input, &args.x, &args.y, &args.out)?;
    eprintln!("wrote {} series to {}", series.len(), args.out.display());
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Sweep(a) => sweep(a),
        Command::Gaussian(a) => gaussian(a),
        Command::Check(a) => check(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
