//! Subcommand implementations. Each writes its reports under the output
//! directory and returns a [`Status`].

use std::path::{Path, PathBuf};

use genfunc::embed::{self, DistributionSpec, EmbeddingResult};
use genfunc::fourier;
use genfunc::grid::{profile_space, EpsilonNet, GrowthProfile, Side};
use genfunc::io;
use genfunc::microlocal::{self, Decision, Scan};
use genfunc::mollifier::Mollifier;
use genfunc::scales::{self, Classification, FamilyName, RegularScaleFamily, SearchBounds};
use genfunc::Real;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, RunConfig};
use crate::plots;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error(transparent)]
    Embed(#[from] embed::EmbedError),
    #[error(transparent)]
    Fourier(#[from] fourier::FourierError),
    #[error(transparent)]
    Microlocal(#[from] microlocal::MicrolocalError),
    #[error(transparent)]
    Scale(#[from] scales::ScaleError),
    #[error(transparent)]
    Mollifier(#[from] genfunc::mollifier::MollifierError),
    #[error(transparent)]
    Grid(#[from] genfunc::grid::GridError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Unclassifiable,
}

impl Status {
    pub fn of(pass: bool) -> Self {
        if pass {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Self::Pass => 0,
            Self::Fail => 2,
            Self::Unclassifiable => 3,
        }
    }
}

/// Common wrapper of every JSON report.
#[derive(Serialize)]
struct Report<'a, B: Serialize> {
    command: &'a str,
    status: Status,
    config: &'a RunConfig,
    mollifier_digest: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    spec: Option<&'a DistributionSpec>,
    result: B,
}

/// Which embedding turns a catalog entry into a net.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedKind {
    Sigma,
    SigmaS,
    Iota,
    IotaS,
    IotaSprime,
}

impl EmbedKind {
    fn tag(self) -> &'static str {
        match self {
            Self::Sigma => "sigma",
            Self::SigmaS => "sigma_s",
            Self::Iota => "iota",
            Self::IotaS => "iota_s",
            Self::IotaSprime => "iota_sprime",
        }
    }
}

/// A catalog entry with the name used for file stems.
#[derive(Clone, Debug)]
pub struct NamedSpec {
    pub name: String,
    pub spec: DistributionSpec,
}

impl NamedSpec {
    pub fn resolve(name: Option<&str>, file: Option<&Path>) -> Result<Self, CliError> {
        match (name, file) {
            (Some(n), None) => DistributionSpec::named(n)
                .map(|spec| Self { name: slug(n), spec })
                .ok_or_else(|| CliError::Usage(format!("unknown distribution '{n}'"))),
            (None, Some(path)) => {
                let spec: DistributionSpec = io::read_json(path)?;
                let name = path.file_stem().map_or("spec".into(), |s| slug(&s.to_string_lossy()));
                Ok(Self { name, spec })
            }
            _ => Err(CliError::Usage("give exactly one of --spec and --spec-file".into())),
        }
    }
}

/// Where a command's input net comes from.
pub enum Input {
    Spec(NamedSpec, EmbedKind),
    Net(PathBuf),
}

pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub emit_plots: bool,
    pub mollifier: Mollifier,
}

impl Ctx {
    pub fn new(cfg: RunConfig, emit_plots: bool) -> Result<Self, CliError> {
        cfg.validate()?;
        let mollifier = Mollifier::build(cfg.mollifier_params())?;
        Ok(Self { out: PathBuf::from(&cfg.out), cfg, emit_plots, mollifier })
    }

    fn write_report<B: Serialize>(&self, file: &str, command: &str, status: Status, spec: Option<&DistributionSpec>, result: B) -> Result<(), CliError> {
        let digest = self.mollifier.digest();
        let report = Report { command, status, config: &self.cfg, mollifier_digest: &digest, spec, result };
        io::save_json(&self.out.join(file), &report)?;
        Ok(())
    }

    fn write_plot(&self, file: &str, script: impl FnOnce() -> String) -> Result<(), CliError> {
        if self.emit_plots {
            io::save_text(&self.out.join(file), &script())?;
        }
        Ok(())
    }

    fn embed<T: Real>(&self, s: &NamedSpec, kind: EmbedKind) -> Result<EmbeddingResult<T>, CliError> {
        if s.spec.dim() != self.cfg.dim {
            return Err(CliError::Usage(format!("'{}' is {}-dimensional, the config is {}-dimensional", s.name, s.spec.dim(), self.cfg.dim)));
        }
        let (grid, ladder, m) = (self.cfg.grid()?, self.cfg.ladder()?, &self.mollifier);
        Ok(match kind {
            EmbedKind::Sigma => embed::embed_sigma(&s.spec, &ladder, &grid)?,
            EmbedKind::SigmaS => embed::embed_sigma_s(&s.spec, &ladder, &grid)?,
            EmbedKind::Iota => embed::embed_iota(&s.spec, m, &ladder, &grid)?,
            EmbedKind::IotaS => embed::embed_iota_s(&s.spec, m, &ladder, &grid)?,
            EmbedKind::IotaSprime => embed::embed_iota_sprime(&s.spec, m, &ladder, &grid)?,
        })
    }

    fn load<T: Real>(&self, input: &Input) -> Result<(EpsilonNet<T>, Option<DistributionSpec>, String), CliError> {
        match input {
            Input::Spec(s, kind) => Ok((self.embed(s, *kind)?.net, Some(s.spec.clone()), format!("{}-{}", s.name, kind.tag()))),
            Input::Net(dir) => {
                let net = io::read_net(dir)?;
                let source = io::read_embedding::<T>(dir).ok().and_then(|(_, r)| r.source);
                let stem = dir.file_name().map_or("net".into(), |s| s.to_string_lossy().into_owned());
                Ok((net, source, stem))
            }
        }
    }
}

/// Lowercase alphanumerics with `-` for every other run of characters.
fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

fn require_space<T: Real>(net: &EpsilonNet<T>) -> Result<(), CliError> {
    if net.side != Side::Space {
        return Err(CliError::Usage("this command needs a space-side net".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct AxiomSummary {
    family: FamilyName,
    passed: bool,
    reports: Vec<scales::AxiomReport>,
}

pub fn scales_cmd(ctx: &Ctx, family: FamilyName) -> Result<Status, CliError> {
    let fam = RegularScaleFamily::with_defaults(family);
    let bounds = SearchBounds { b_max: ctx.cfg.tolerances.b_max, ..SearchBounds::default() };
    let reports = scales::check_all_axioms(&fam, bounds)?;
    let passed = reports.iter().all(|r| r.passed);
    for r in &reports {
        match &r.violation {
            None => println!("{:?}: {}", r.axiom, if r.passed { "pass" } else { "fail" }),
            Some(v) => println!(
                "{:?}: fail, {:.4} > {:.4} at indices {:?}",
                r.axiom, v.inequality.lhs, v.inequality.rhs, v.inequality.indices
            ),
        }
    }
    let status = Status::of(passed);
    let file = format!("scales_{}.json", slug(&family.label()));
    ctx.write_report(&file, "scales", status, None, AxiomSummary { family, passed, reports })?;
    Ok(status)
}

#[derive(Serialize)]
struct EmbedSummary<'a> {
    embedding: &'a str,
    net_dir: String,
    ladder: Vec<f64>,
    frame_sups: Vec<f64>,
}

pub fn embed_cmd<T: Real>(ctx: &Ctx, s: &NamedSpec, kind: EmbedKind, then_classify: Option<FamilyName>) -> Result<Status, CliError> {
    let result = ctx.embed::<T>(s, kind)?;
    let record = io::write_mollifier(&ctx.mollifier, &ctx.out.join("mollifier"))?;
    let stem = format!("{}-{}", s.name, kind.tag());
    let dir = ctx.out.join("nets").join(&stem);
    io::write_embedding(&result, Some(record.digest), &dir)?;
    let summary = EmbedSummary {
        embedding: kind.tag(),
        net_dir: dir.display().to_string(),
        ladder: result.net.ladder.0.clone(),
        frame_sups: result.net.frames.iter().map(|f| f.sup()).collect(),
    };
    println!("wrote {}", dir.display());
    ctx.write_report(&format!("embed_{stem}.json"), "embed", Status::Pass, Some(&s.spec), summary)?;
    match then_classify {
        Some(family) => classify_net(ctx, &result.net, family, Some(&s.spec), &stem),
        None => Ok(Status::Pass),
    }
}

#[derive(Serialize)]
struct ClassifySummary<'a> {
    family: FamilyName,
    profile: &'a GrowthProfile,
    classification: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unclassifiable: Option<String>,
    /// `max_l (N̂(l) − l)` over the clamped exponents.
    b_hat: Option<f64>,
    decision: Decision,
}

fn classify_net<T: Real>(ctx: &Ctx, net: &EpsilonNet<T>, family: FamilyName, spec: Option<&DistributionSpec>, stem: &str) -> Result<Status, CliError> {
    require_space(net)?;
    let cfg = &ctx.cfg;
    let profile = profile_space(net, &cfg.k_box(), cfg.l_max, &cfg.fit())?;
    let classified = scales::classify_profile(&profile, cfg.membership(), &cfg.tolerances.a_grid);
    let decision = microlocal::decide(&profile, family, cfg.membership(), &cfg.tolerances.a_grid);
    let (classification, unclassifiable) = match classified {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let b_hat = classification
        .as_ref()
        .map(|c| c.exponents.iter().enumerate().map(|(l, e)| e - l as f64).fold(f64::NEG_INFINITY, f64::max));
    let status = if unclassifiable.is_some() { Status::Unclassifiable } else { Status::of(decision.in_family) };
    match (&classification, b_hat) {
        (Some(c), Some(b)) => println!("class {} (b̂ = {b:.3}); in {}: {}", c.family.label(), family.label(), decision.in_family),
        _ => println!("unclassifiable: {}", unclassifiable.as_deref().unwrap_or("")),
    }
    io::save_text(&ctx.out.join(format!("classify_{stem}.csv")), &profile.to_csv())?;
    ctx.write_plot(&format!("classify_{stem}.gp"), || plots::profile_script(stem, "derivative order l", &[("space profile", &profile)]))?;
    let summary = ClassifySummary { family, profile: &profile, classification, unclassifiable, b_hat, decision };
    ctx.write_report(&format!("classify_{stem}.json"), "classify", status, spec, summary)?;
    Ok(status)
}

pub fn classify_cmd<T: Real>(ctx: &Ctx, input: &Input, family: FamilyName) -> Result<Status, CliError> {
    let (net, spec, stem) = ctx.load::<T>(input)?;
    classify_net(ctx, &net, family, spec.as_ref(), &stem)
}

/// Round-trip and Plancherel defects at or below this count as exact.
pub const TRANSFORM_TOL: f64 = 1e-9;

#[derive(Serialize)]
struct FourierSummary {
    transform_dir: String,
    round_trip_defect: f64,
    plancherel_defect: f64,
    tolerance: f64,
    lemma: fourier::LemmaReport,
}

pub fn fourier_cmd<T: Real>(ctx: &Ctx, input: &Input) -> Result<Status, CliError> {
    let (net, spec, stem) = ctx.load::<T>(input)?;
    require_space(&net)?;
    let cfg = &ctx.cfg;
    let ft = fourier::ft_net(&net)?;
    let dir = ctx.out.join("nets").join(format!("{stem}-ft"));
    io::write_net(&ft, &dir)?;
    let round_trip_defect = fourier::round_trip_defect(&net)?;
    let plancherel_defect = net.frames.iter().map(fourier::plancherel_defect).fold(0.0, f64::max);
    let lemma = fourier::check_lemma_bound(&net, cfg.two_index.q_max, cfg.two_index.l_max, cfg.tolerances.tol, &cfg.fit())?;
    let pass = round_trip_defect <= TRANSFORM_TOL && plancherel_defect <= TRANSFORM_TOL;
    println!("round trip {round_trip_defect:.3e}, Plancherel {plancherel_defect:.3e}, lemma spread {:.3e} (uniform bound: {})", lemma.max_spread, lemma.uniform_bound);
    let summary = FourierSummary { transform_dir: dir.display().to_string(), round_trip_defect, plancherel_defect, tolerance: TRANSFORM_TOL, lemma };
    let status = Status::of(pass);
    ctx.write_report(&format!("fourier_{stem}.json"), "fourier", status, spec.as_ref(), summary)?;
    Ok(status)
}

pub fn exchange_cmd<T: Real>(ctx: &Ctx, input: &Input) -> Result<Status, CliError> {
    let (net, spec, stem) = ctx.load::<T>(input)?;
    let cfg = &ctx.cfg;
    let r = fourier::check_exchange(&net, cfg.two_index.q_max, cfg.two_index.l_max, cfg.tolerances.tol, &cfg.fit())?;
    println!("input {:?} -> transform {:?}; pass: {}", r.input_signature, r.output_signature, r.pass);
    let status = Status::of(r.pass);
    ctx.write_plot(&format!("exchange_{stem}.gp"), || {
        let (i0, o0) = (r.input.slice(genfunc::grid::ProfileAxis::WeightQ, 0), r.output.slice(genfunc::grid::ProfileAxis::WeightQ, 0));
        plots::profile_script(&stem, "derivative order l (q = 0)", &[("input", &i0), ("transform", &o0)])
    })?;
    ctx.write_report(&format!("exchange_{stem}.json"), "exchange", status, spec.as_ref(), &r)?;
    Ok(status)
}

#[derive(Serialize)]
struct GlobalSummary<'a> {
    family: FamilyName,
    space_in_family: bool,
    fourier_in_family: bool,
    report: &'a fourier::GlobalReport,
}

pub fn global_cmd<T: Real>(ctx: &Ctx, input: &Input, family: FamilyName) -> Result<Status, CliError> {
    let (net, spec, stem) = ctx.load::<T>(input)?;
    require_space(&net)?;
    let cfg = &ctx.cfg;
    let g = cfg.global;
    let kappa = embed::cutoff::<T>(&net.grid, &vec![0.0; cfg.dim], g.kappa_inner, g.kappa_outer);
    let u = net.multiply_by(&kappa)?;
    let r = match fourier::classify_global(&u, &kappa, &cfg.k_box(), g.q_max, g.l_max, cfg.membership(), &cfg.tolerances.a_grid, &cfg.fit()) {
        Ok(r) => r,
        Err(fourier::FourierError::Scale(e @ scales::ScaleError::Unclassifiable(_))) => {
            println!("unclassifiable: {e}");
            ctx.write_report(&format!("global_{stem}.json"), "global", Status::Unclassifiable, spec.as_ref(), e.to_string())?;
            return Ok(Status::Unclassifiable);
        }
        Err(e) => return Err(e.into()),
    };
    let fam = RegularScaleFamily::with_defaults(family);
    let space_in_family = fam.accepts_values(&r.space.exponents, cfg.membership());
    let fourier_in_family = fam.accepts_values(&r.fourier.exponents, cfg.membership());
    let pass = r.agree && space_in_family && fourier_in_family;
    println!("space {}, Fourier {}; both in {}: {}", r.space.family.label(), r.fourier.family.label(), family.label(), space_in_family && fourier_in_family);
    ctx.write_plot(&format!("global_{stem}.gp"), || {
        plots::profile_script(&stem, "order (l on the space side, q on the Fourier side)", &[("space", &r.space_profile), ("Fourier", &r.fourier_profile)])
    })?;
    let status = Status::of(pass);
    ctx.write_report(&format!("global_{stem}.json"), "global", status, spec.as_ref(), GlobalSummary { family, space_in_family, fourier_in_family, report: &r })?;
    Ok(status)
}

#[derive(Serialize)]
struct WavefrontSummary<'a> {
    projection_holds: bool,
    flagged: Vec<(Vec<f64>, String)>,
    singular_support: Vec<Vec<f64>>,
    report: &'a microlocal::WavefrontReport,
}

pub fn wavefront_cmd<T: Real>(ctx: &Ctx, input: &Input, family: FamilyName, scan: Scan) -> Result<Status, CliError> {
    let (net, spec, stem) = ctx.load::<T>(input)?;
    require_space(&net)?;
    let cfg = &ctx.cfg;
    let report = microlocal::wavefront(&net, &cfg.cones(), &cfg.cutoffs(), &cfg.decision_params(family), scan)?;
    let projection_holds = microlocal::check_projection(&report);
    let flagged = report.flagged();
    for (x, cone) in &flagged {
        println!("flagged {x:?} {cone}");
    }
    let singular_support: Vec<Vec<f64>> = report.singsupp_estimate.iter().map(|i| report.cutoffs.centers[*i].clone()).collect();
    println!("singular support {singular_support:?}; projection holds: {projection_holds}");
    io::save_text(&ctx.out.join(format!("wavefront_{stem}.csv")), &report.to_csv())?;
    ctx.write_plot(&format!("wavefront_{stem}.gp"), || plots::wavefront_script(&report))?;
    let status = Status::of(projection_holds);
    let summary = WavefrontSummary { projection_holds, flagged, singular_support, report: &report };
    ctx.write_report(&format!("wavefront_{stem}.json"), "wavefront", status, spec.as_ref(), summary)?;
    Ok(status)
}

#[derive(Debug, Deserialize)]
struct StatusOnly {
    command: String,
    status: Status,
}

#[derive(Debug, Serialize)]
pub struct SummaryRow {
    pub file: String,
    pub command: String,
    pub status: Status,
}

/// Collects the status of every report in `dir` into `summary.json`.
/// Fails if any report failed; unclassifiable if any was and none failed.
pub fn report_cmd(dir: &Path) -> Result<Status, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != "summary.json"))
        .collect();
    files.sort();
    let mut rows = Vec::new();
    for path in files {
        if let Ok(r) = io::read_json::<StatusOnly>(&path) {
            let file = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            println!("{:<16} {:<15} {file}", r.command, format!("{:?}", r.status).to_lowercase());
            rows.push(SummaryRow { file, command: r.command, status: r.status });
        }
    }
    if rows.is_empty() {
        return Err(CliError::Usage(format!("no reports in {}", dir.display())));
    }
    let status = if rows.iter().any(|r| r.status == Status::Fail) {
        Status::Fail
    } else if rows.iter().any(|r| r.status == Status::Unclassifiable) {
        Status::Unclassifiable
    } else {
        Status::Pass
    };
    #[derive(Serialize)]
    struct Summary {
        status: Status,
        reports: Vec<SummaryRow>,
    }
    io::save_json(&dir.join("summary.json"), &Summary { status, reports: rows })?;
    Ok(status)
}
