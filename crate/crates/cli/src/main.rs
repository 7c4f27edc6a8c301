//! `genfunc`: embed distributions as ε-nets, classify their growth, and run
//! the Fourier and wavefront checks from the command line.
//!
//! Exit codes: 0 pass, 2 fail, 3 unclassifiable, 4 error.

mod commands;
mod config;
mod plots;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use genfunc::microlocal::Scan;
use genfunc::scales::FamilyName;

use commands::{CliError, Ctx, EmbedKind, Input, NamedSpec, Status};
use config::{LadderRange, Precision, RunConfig};

#[derive(Parser)]
#[command(name = "genfunc", version, about = "Generalized functions as sampled ε-nets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand that runs a pipeline.
#[derive(Args, Clone, Debug)]
struct Common {
    /// JSON run configuration (see `init`); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for reports and nets.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "GENFUNC_JOBS")]
    jobs: Option<usize>,
    /// Also write gnuplot scripts.
    #[arg(long)]
    emit_plots: bool,
    /// Ladder index window `START,END` (half-open) for every fit.
    #[arg(long, value_parser = parse_window)]
    fit_window: Option<(usize, usize)>,
    /// Spatial dimension (1 or 2); selects that dimension's defaults when no config is given.
    #[arg(long)]
    dim: Option<usize>,
    /// Samples per axis.
    #[arg(long)]
    n: Option<usize>,
    /// Symmetric box half-width.
    #[arg(long)]
    half_width: Option<f64>,
    /// Ladder as `K_MIN,K_MAX` for ε = 2^-K_MIN .. 2^-K_MAX.
    #[arg(long, value_parser = parse_window)]
    ladder: Option<(usize, usize)>,
    /// Sample precision.
    #[arg(long, value_parser = ["f32", "f64"])]
    precision: Option<String>,
}

#[derive(Args, Clone, Debug)]
struct SpecArgs {
    /// Catalog name (delta, delta1, delta2, heaviside, gaussian, bump, ...).
    #[arg(long)]
    spec: Option<String>,
    /// JSON file with a distribution description.
    #[arg(long, conflicts_with = "spec")]
    spec_file: Option<PathBuf>,
    /// Existing net directory instead of a distribution.
    #[arg(long, conflicts_with_all = ["spec", "spec_file"])]
    net: Option<PathBuf>,
    /// Embedding applied to the distribution.
    #[arg(long, value_enum)]
    embedding: Option<EmbedKind>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a configuration file with every default filled in.
    Init {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Destination file.
        #[arg(long, default_value = "config.json")]
        path: PathBuf,
    },
    /// Check the three regularity axioms of a scale family.
    Scales {
        #[arg(long)]
        family: String,
        #[command(flatten)]
        common: Common,
    },
    /// Embed a distribution and write the net.
    Embed {
        #[command(flatten)]
        spec: SpecArgs,
        /// Follow with `classify`.
        #[arg(long, value_parser = ["classify"])]
        then: Option<String>,
        #[arg(long)]
        family: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Classify the space-side growth profile on the compact set `k`.
    Classify {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        family: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Transform a net; round-trip, Plancherel and lemma-bound checks.
    Fourier {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Check that the transform swaps the two-index signatures.
    Exchange {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Classify `κ·u` on both sides and compare.
    Global {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        family: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate the wavefront and singular support.
    Wavefront {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        family: Option<String>,
        /// Transform every center instead of only those near the singular support.
        #[arg(long)]
        full_scan: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Summarize the reports in a directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected START,END")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => genfunc::io::read_json(path)?,
        None => RunConfig::defaults(common.dim.unwrap_or(1)),
    };
    if let Some(d) = common.dim {
        if d != cfg.dim {
            return Err(CliError::Usage(format!("--dim {d} contradicts the config's dim {}", cfg.dim)));
        }
    }
    if let Some(out) = &common.out {
        cfg.out = out.display().to_string();
    }
    if let Some(w) = common.fit_window {
        cfg.fit_window = Some(w);
        cfg.microlocal.fit_window = Some(w);
    }
    if let Some(n) = common.n {
        cfg.n = n;
    }
    if let Some(h) = common.half_width {
        cfg.lo = vec![-h; cfg.dim];
        cfg.hi = vec![h; cfg.dim];
    }
    if let Some((a, b)) = common.ladder {
        cfg.ladder = LadderRange { k_min: a as u32, k_max: b as u32 };
    }
    if let Some(p) = &common.precision {
        cfg.precision = if p == "f32" { Precision::F32 } else { Precision::F64 };
    }
    Ok(cfg)
}

fn setup(common: &Common, family: Option<&str>) -> Result<Ctx, CliError> {
    let mut cfg = load_config(common)?;
    if let Some(f) = family {
        cfg.family = f.to_string();
    }
    if let Some(j) = common.jobs {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    Ctx::new(cfg, common.emit_plots)
}

fn input(spec: &SpecArgs, default: EmbedKind) -> Result<Input, CliError> {
    if let Some(dir) = &spec.net {
        return Ok(Input::Net(dir.clone()));
    }
    let named = NamedSpec::resolve(spec.spec.as_deref(), spec.spec_file.as_deref())?;
    Ok(Input::Spec(named, spec.embedding.unwrap_or(default)))
}

fn family(ctx: &Ctx) -> Result<FamilyName, CliError> {
    Ok(ctx.cfg.family_name()?)
}

/// Runs a generic command at the configured precision.
macro_rules! at_precision {
    ($ctx:expr, $f:ident ( $($arg:expr),* )) => {
        match $ctx.cfg.precision {
            Precision::F64 => commands::$f::<f64>($($arg),*),
            Precision::F32 => commands::$f::<f32>($($arg),*),
        }
    };
}

fn run(cli: Cli) -> Result<Status, CliError> {
    match cli.command {
        Command::Init { dim, path } => {
            let cfg = RunConfig::defaults(dim);
            cfg.validate()?;
            genfunc::io::save_json(&path, &cfg)?;
            println!("wrote {}", path.display());
            Ok(Status::Pass)
        }
        Command::Scales { family: f, common } => {
            let ctx = setup(&common, Some(&f))?;
            commands::scales_cmd(&ctx, family(&ctx)?)
        }
        Command::Embed { spec, then, family: f, common } => {
            let ctx = setup(&common, f.as_deref())?;
            if spec.net.is_some() {
                return Err(CliError::Usage("embed takes --spec or --spec-file".into()));
            }
            let named = NamedSpec::resolve(spec.spec.as_deref(), spec.spec_file.as_deref())?;
            let kind = spec.embedding.unwrap_or(EmbedKind::Iota);
            let then = if then.is_some() { Some(family(&ctx)?) } else { None };
            at_precision!(ctx, embed_cmd(&ctx, &named, kind, then))
        }
        Command::Classify { spec, family: f, common } => {
            let ctx = setup(&common, f.as_deref())?;
            let input = input(&spec, EmbedKind::Iota)?;
            at_precision!(ctx, classify_cmd(&ctx, &input, family(&ctx)?))
        }
        Command::Fourier { spec, common } => {
            let ctx = setup(&common, None)?;
            let input = input(&spec, EmbedKind::IotaS)?;
            at_precision!(ctx, fourier_cmd(&ctx, &input))
        }
        Command::Exchange { spec, common } => {
            let ctx = setup(&common, None)?;
            let input = input(&spec, EmbedKind::IotaS)?;
            at_precision!(ctx, exchange_cmd(&ctx, &input))
        }
        Command::Global { spec, family: f, common } => {
            let ctx = setup(&common, f.as_deref())?;
            let input = input(&spec, EmbedKind::Iota)?;
            at_precision!(ctx, global_cmd(&ctx, &input, family(&ctx)?))
        }
        Command::Wavefront { spec, family: f, full_scan, common } => {
            let ctx = setup(&common, f.as_deref())?;
            let input = input(&spec, EmbedKind::Iota)?;
            let scan = if full_scan { Scan::Full } else { Scan::Prescreen };
            at_precision!(ctx, wavefront_cmd(&ctx, &input, family(&ctx)?, scan))
        }
        Command::Report { dir } => commands::report_cmd(&dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors; argument errors share code 4.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(4)
        }
    }
}
