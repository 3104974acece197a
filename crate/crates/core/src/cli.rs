//! Command-line front end. Each subcommand builds a [`Table`] from a
//! [`RunConfig`]; tables are written as CSV or JSON. Sweep points run on the
//! rayon pool and are emitted in sweep order.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::channels::ProtocolParams;
use crate::config::{Axis, Format, RunConfig, Scenario};
use crate::error::{invalid, Error, Result};
use crate::fading::{excess_loss_pdf, CodePolicy, FadingChannel, FadingConfig};
use crate::finite_size::{composable_from_state, FiniteSizeParams};
use crate::gkp::{concat_variance, lower_bound_variance, optimize_squeezing, residual_variance, Ancilla};
use crate::mc::{mc_pe_coverage, mc_protocol_mutual_info, mc_residual_variance, RngStream};
use crate::scenario::{evaluate_rate, max_secure_distance, Compensation, LinkSpec};
use crate::security::{conditioned_state, mutual_information, rate_from_state, AliceLink};

/// Output schema version, carried by every CSV row and JSON document.
pub const SCHEMA_VERSION: &str = "1";
/// Default Monte Carlo budget of `validate`.
pub const DEFAULT_SAMPLES: u64 = 1_000_000;

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gkp-mdi", version, about = "Key rates for CV-MDI-QKD with GKP-corrected links")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Monte Carlo seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo budget per check.
    #[arg(long, global = true, value_name = "N")]
    pub samples: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, value_name = "K")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Residual GKP noise versus L_A or layer count.
    Residual,
    /// Key rates on a sweep, or the max secure distance with a [search] section.
    Rate,
    /// Fading density, mean residual noise and averaged rate.
    Fading,
    /// Monte Carlo oracle checks.
    Validate,
}

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Null,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v}"),
            Cell::Num(_) | Cell::Null => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) | Cell::Null => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

/// Output table; every row has one cell per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(command: &'static str, columns: &[&'static str]) -> Self {
        Self { command, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::InvalidInput(format!("writing CSV: {e}"));
        let header = std::iter::once("schema_version").chain(self.columns.iter().copied());
        out.write_record(header).map_err(io)?;
        for row in &self.rows {
            let cells = std::iter::once(SCHEMA_VERSION.to_owned()).chain(row.iter().map(Cell::csv));
            out.write_record(cells).map_err(io)?;
        }
        out.flush().map_err(|e| Error::InvalidInput(format!("writing CSV: {e}")))
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect::<Map<_, _>>(),
                )
            })
            .collect();
        json!({ "schema_version": SCHEMA_VERSION, "command": self.command, "columns": self.columns, "rows": rows })
    }

    pub fn write(&self, format: Format, mut w: impl Write) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => {
                let text = serde_json::to_string_pretty(&self.to_json()).expect("JSON values serialize");
                writeln!(w, "{text}").map_err(|e| Error::InvalidInput(format!("writing JSON: {e}")))
            }
        }
    }
}

fn compensation_name(c: Compensation) -> &'static str {
    match c {
        Compensation::None => "none",
        Compensation::Preamp => "preamp",
        Compensation::Gkp => "gkp",
        Compensation::QtGkp => "qt_gkp",
    }
}

fn ancilla_db(a: Ancilla) -> Cell {
    match a {
        Ancilla::Ideal => Cell::Null,
        Ancilla::Finite { squeezing_db } => Cell::Num(squeezing_db),
    }
}

fn layer_count(v: f64) -> Result<u32> {
    if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as u32)
    } else {
        invalid(format!("layer count must be a positive integer, got {v}"))
    }
}

fn sweep_values(cfg: &RunConfig, allowed: &[Axis]) -> Result<Option<(Axis, Vec<f64>)>> {
    let Some(s) = &cfg.sweep else { return Ok(None) };
    if !allowed.contains(&s.axis) {
        return invalid(format!("sweep axis {} is not supported by this command", s.axis.name()));
    }
    Ok(Some((s.axis, s.points()?)))
}

const RESIDUAL_COLUMNS: &[&str] = &[
    "alice_distance_km",
    "layers_count",
    "sigma2_snu",
    "sigma_r2_snu",
    "sigma_be2_snu",
    "sigma_lb2_snu",
    "r_opt_np",
    "compensation",
    "gkp_squeezing_db",
    "tmsv_squeezing_db",
    "attenuation_db_per_km",
    "thermal_noise_photon_mean",
];

/// Residual noise table: per point, the per-layer channel variance, the
/// concatenated residual `C·σ_r²`, the uncoded link variance, `C` times the
/// single-layer lower bound, and the optimal TMS squeezing.
pub fn cmd_residual(cfg: &RunConfig) -> Result<Table> {
    cfg.validate()?;
    let base = cfg.protocol.params()?;
    let link = cfg.code.link()?;
    if !matches!(link.compensation, Compensation::Gkp | Compensation::QtGkp) {
        return invalid("residual needs compensation = \"gkp\" or \"qt_gkp\"");
    }
    let points = match sweep_values(cfg, &[Axis::AliceDistance, Axis::Layers])? {
        Some((axis, v)) => v.into_iter().map(|x| (axis, x)).collect(),
        None => vec![(Axis::AliceDistance, base.l_a)],
    };
    let rows = points
        .par_iter()
        .map(|&(axis, x)| {
            let (mut p, mut l) = (base, link);
            match axis {
                Axis::Layers => l.layers = layer_count(x)?,
                _ => p = p.with_l_a(x)?,
            }
            let seg = l.segment_variance(&p)?;
            let uncoded = LinkSpec { layers: 1, ..l }.segment_variance(&p)?;
            let (r, v) = optimize_squeezing(seg, l.ancilla)?;
            Ok(vec![
                p.l_a.into(),
                Cell::Int(l.layers as u64),
                seg.into(),
                concat_variance(v, l.layers).into(),
                uncoded.into(),
                concat_variance(lower_bound_variance(seg)?, l.layers).into(),
                r.into(),
                compensation_name(l.compensation).into(),
                ancilla_db(l.ancilla),
                if l.compensation == Compensation::QtGkp { l.tmsv_squeezing_db.into() } else { Cell::Null },
                p.alpha0.into(),
                p.n_bar.into(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table { rows, ..Table::new("residual", RESIDUAL_COLUMNS) })
}

const RATE_ECHO: &[&str] = &[
    "alice_distance_km",
    "bob_distance_km",
    "total_pulse_count",
    "pe_signals_count",
    "layers_count",
    "compensation",
    "gkp_squeezing_db",
    "tmsv_squeezing_db",
    "modulation_variance_snu",
    "reconciliation_efficiency_ratio",
    "attenuation_db_per_km",
    "thermal_noise_photon_mean",
    "rate_kind",
];

const RATE_VALUES: &[&str] =
    &["sigma_r2_snu", "rate_bits_per_use", "mutual_info_bits", "holevo_bits", "v1_snu", "v2_snu", "v3_snu"];

const SEARCH_VALUES: &[&str] = &["search_axis", "search_limit_km", "max_distance_km"];

fn rate_echo(p: &ProtocolParams, link: &LinkSpec, fs: Option<&FiniteSizeParams>, search: Option<Axis>) -> Vec<Cell> {
    vec![
        if search == Some(Axis::AliceDistance) { Cell::Null } else { p.l_a.into() },
        if search == Some(Axis::BobDistance) { Cell::Null } else { p.l_b.into() },
        fs.map(|f| f.n).into(),
        fs.map(|f| f.m_pe).into(),
        Cell::Int(link.layers as u64),
        compensation_name(link.compensation).into(),
        if matches!(link.compensation, Compensation::Gkp | Compensation::QtGkp) {
            ancilla_db(link.ancilla)
        } else {
            Cell::Null
        },
        if link.compensation == Compensation::QtGkp { link.tmsv_squeezing_db.into() } else { Cell::Null },
        p.sigma2_a.into(),
        p.beta0.into(),
        p.alpha0.into(),
        p.n_bar.into(),
        if fs.is_some() { "composable" } else { "asymptotic" }.into(),
    ]
}

/// Key-rate table. With a `[search]` section, each sweep point reports the
/// max secure distance along the search axis instead of a rate.
pub fn cmd_rate(cfg: &RunConfig) -> Result<Table> {
    cfg.validate()?;
    if cfg.scenario == Scenario::FreeSpace {
        return invalid("free_space rates come from the fading subcommand");
    }
    let base = cfg.protocol.params()?;
    let link = cfg.code.link()?;
    let fs = cfg.finite_size()?;
    let points: Vec<Option<(Axis, f64)>> =
        match sweep_values(cfg, &[Axis::AliceDistance, Axis::BobDistance, Axis::Layers, Axis::TotalPulse])? {
            Some((axis, v)) => v.into_iter().map(|x| Some((axis, x))).collect(),
            None => vec![None],
        };
    let setup = |pt: Option<(Axis, f64)>| -> Result<(ProtocolParams, LinkSpec, Option<FiniteSizeParams>)> {
        let (mut p, mut l, mut f) = (base, link, fs);
        match pt {
            Some((Axis::AliceDistance, x)) => p = p.with_l_a(x)?,
            Some((Axis::BobDistance, x)) => p = p.with_l_b(x)?,
            Some((Axis::Layers, x)) => l.layers = layer_count(x)?,
            Some((Axis::TotalPulse, x)) => {
                let f0 = f.expect("validated");
                let fs = FiniteSizeParams { n: x, m_pe: x * f0.m_pe / f0.n, ..f0 };
                fs.validate()?;
                f = Some(fs);
            }
            None => {}
        }
        Ok((p, l, f))
    };
    let search = cfg.search.clone();
    let columns: Vec<&'static str> =
        RATE_ECHO.iter().chain(if search.is_some() { SEARCH_VALUES } else { RATE_VALUES }).copied().collect();
    let rows = points
        .par_iter()
        .map(|&pt| {
            let (p, l, f) = setup(pt)?;
            let mut row = rate_echo(&p, &l, f.as_ref(), search.as_ref().map(|s| s.along));
            match &search {
                Some(s) => {
                    let along = s.along;
                    let rate = |d: f64| {
                        let q = if along == Axis::AliceDistance { p.with_l_a(d)? } else { p.with_l_b(d)? };
                        evaluate_rate(&q, &l, f.as_ref()).map(|r| r.rate)
                    };
                    let max = max_secure_distance(rate, 0.0, s.limit)?;
                    row.extend([along.name().into(), s.limit.into(), max.into()]);
                }
                None => {
                    let r = evaluate_rate(&p, &l, f.as_ref())?;
                    let rep = r.report;
                    row.extend([
                        r.sigma_r2.into(),
                        r.rate.into(),
                        rep.mutual_info.into(),
                        rep.holevo.into(),
                        rep.v1.into(),
                        rep.v2.into(),
                        rep.v3.into(),
                    ]);
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table { command: "rate", columns, rows })
}

const FADING_COLUMNS: &[&str] = &[
    "record",
    "excess_loss_db",
    "pdf_per_db",
    "transmittance_ratio",
    "sigma_r2_snu",
    "mean_sigma_r2_snu",
    "mean_transmittance_ratio",
    "bob_distance_km",
    "xi_per_snu",
    "rate_bits_per_use",
    "mutual_info_bits",
    "holevo_bits",
    "rate_kind",
    "tau0_ratio",
    "gamma0_ratio",
    "r0_m",
    "sigma_bw2_m2",
    "aperture_radius_m",
    "gkp_squeezing_db",
    "fixed_squeezing_np",
];

const DEFAULT_PDF_POINTS: usize = 3000;

/// Probability levels `u = e^{−y}` for density samples: `y` geometric over
/// `[1e-6, 1]` for the first half of the points and uniform over `[1, 20]`
/// for the rest. The omitted mass is about 1e-6, and the trapezoid rule over
/// the resulting losses is accurate to better than 1e-4.
fn pdf_levels(points: usize) -> Vec<f64> {
    let half = points / 2;
    let mut y: Vec<f64> = (0..half).map(|i| 10f64.powf(-6.0 + 6.0 * i as f64 / half as f64)).collect();
    let rest = points - half;
    y.extend((0..rest).map(|i| 1.0 + 19.0 * i as f64 / (rest - 1) as f64));
    y.into_iter().map(|y| (-y).exp()).collect()
}

/// Fading table: `pdf` rows sample the density of the excess loss below `τ₀`
/// with the transmittance and residual noise at each loss, one `summary` row
/// holds the means, and `rate` rows hold the averaged rate per Bob distance.
pub fn cmd_fading(cfg: &RunConfig) -> Result<Table> {
    cfg.validate()?;
    let Some(section) = cfg.fading.as_ref().filter(|_| cfg.scenario == Scenario::FreeSpace) else {
        return invalid("fading needs scenario = \"free_space\" and a [fading] section");
    };
    let fading = section.config()?;
    let link = cfg.code.link()?;
    if link.compensation != Compensation::Gkp || link.layers != 1 {
        return invalid("fading supports single-layer gkp compensation only");
    }
    let base = cfg.protocol.params()?;
    let fs = cfg.finite_size()?;
    let policy = cfg.code.policy();
    let channel = FadingChannel::new(fading, base.n_bar, link.ancilla, policy)?;
    let bob = match sweep_values(cfg, &[Axis::BobDistance])? {
        Some((_, v)) => v,
        None => vec![base.l_b],
    };
    let points = section.pdf_points.unwrap_or(DEFAULT_PDF_POINTS);
    if points < 10 {
        return invalid("pdf_points must be at least 10");
    }

    let echo = fading_echo(&fading, link.ancilla, policy);
    let width = FADING_COLUMNS.len();
    let row = |record: &str, cells: &[(usize, Cell)]| {
        let mut r = vec![Cell::Null; width];
        r[0] = record.into();
        for (i, c) in cells {
            r[*i] = c.clone();
        }
        r[width - echo.len()..].clone_from_slice(&echo);
        r
    };
    let mut rows = Vec::new();
    if !fading.is_point_mass() {
        for u in pdf_levels(points) {
            let loss = fading.excess_loss_quantile_db(u);
            let t = fading.quantile(u);
            rows.push(row(
                "pdf",
                &[
                    (1, loss.into()),
                    (2, excess_loss_pdf(loss, &fading).into()),
                    (3, t.into()),
                    (4, channel.residual_at(t).into()),
                ],
            ));
        }
    }
    rows.push(row("summary", &[(5, channel.mean_residual()?.into()), (6, channel.mean_transmittance()?.into())]));
    let rate_rows = bob
        .par_iter()
        .map(|&lb| {
            let p = base.with_l_b(lb)?;
            let xi = channel.xi(&p)?;
            let state = channel.conditioned_state(&p)?;
            let (rate, rep, kind) = match &fs {
                Some(f) => {
                    let c = composable_from_state(&state, p.beta0, f)?;
                    (c.rate, c.worst_case, "composable")
                }
                None => {
                    let r = rate_from_state(&state, p.beta0)?;
                    (r.rate, r, "asymptotic")
                }
            };
            Ok(row(
                "rate",
                &[
                    (7, lb.into()),
                    (8, xi.into()),
                    (9, rate.into()),
                    (10, rep.mutual_info.into()),
                    (11, rep.holevo.into()),
                    (12, kind.into()),
                ],
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.extend(rate_rows);
    Ok(Table { rows, ..Table::new("fading", FADING_COLUMNS) })
}

fn fading_echo(f: &FadingConfig, ancilla: Ancilla, policy: CodePolicy) -> Vec<Cell> {
    vec![
        f.tau0.into(),
        f.gamma0.into(),
        f.r0.into(),
        f.sigma_bw2.into(),
        f.a_r.into(),
        ancilla_db(ancilla),
        match policy {
            CodePolicy::Dynamic => Cell::Null,
            CodePolicy::Fixed(r) => r.into(),
        },
    ]
}

const VALIDATE_COLUMNS: &[&str] = &[
    "check",
    "parameters",
    "value_unit",
    "analytic_value",
    "estimate_value",
    "stderr_value",
    "z_score",
    "samples_count",
    "seed",
    "pass",
];

/// Monte Carlo checks at fixed points: residual variance, mutual
/// information, and worst-case coverage. Each check draws from its own
/// stream; `budget` samples per check, `budget/1000` coverage rounds.
/// A zero budget gives an empty report.
pub fn cmd_validate(seed: u64, budget: u64) -> Result<Table> {
    let mut t = Table::new("validate", VALIDATE_COLUMNS);
    if budget == 0 {
        return Ok(t);
    }
    let mut stream = 0u32;
    let mut next = || {
        stream += 1;
        RngStream::new(seed, stream)
    };
    let mut push = |check: &str, params: String, analytic: f64, estimate: f64, stderr: f64, n: u64, pass: bool| {
        let z = if stderr > 0.0 { (estimate - analytic) / stderr } else { 0.0 };
        let unit = match check {
            "residual_variance" => "snu",
            "mutual_information" => "bits",
            _ => "ratio",
        };
        t.rows.push(vec![
            check.into(),
            Cell::Text(params),
            unit.into(),
            analytic.into(),
            estimate.into(),
            stderr.into(),
            z.into(),
            Cell::Int(n),
            Cell::Int(seed),
            Cell::Bool(pass),
        ]);
    };

    let d20 = Ancilla::finite(20.0);
    for (s2, r, anc) in [(0.13, None, d20), (0.05, Some(0.3), Ancilla::Ideal), (0.25, Some(1.2), Ancilla::Ideal)] {
        let r = match r {
            Some(r) => r,
            None => optimize_squeezing(s2, anc)?.0,
        };
        let analytic = residual_variance(r, s2, anc)?;
        let est = mc_residual_variance(r, s2, anc, budget, next())?.pooled;
        let label = match anc {
            Ancilla::Ideal => "ideal".to_owned(),
            Ancilla::Finite { squeezing_db } => format!("{squeezing_db} dB"),
        };
        push(
            "residual_variance",
            format!("sigma2={s2} r={r:.6} ancilla={label}"),
            analytic,
            est.variance,
            est.stderr,
            budget,
            est.agrees(analytic, 3.0),
        );
    }

    let gkp_sr = |l_a: f64| LinkSpec::gkp(d20, 1).residual(&ProtocolParams::fiber(l_a, 0.0)?).map(|v| v.unwrap_or(0.0));
    for (l_a, l_b) in [(1.0, 5.0), (0.0, 20.0)] {
        let p = ProtocolParams::fiber(l_a, l_b)?;
        let sr = if l_a > 0.0 { gkp_sr(l_a)? } else { 0.0 };
        let analytic = mutual_information(&conditioned_state(&p, AliceLink::corrected(sr))?)?;
        let est = mc_protocol_mutual_info(&p, sr, budget, next())?;
        push(
            "mutual_information",
            format!("L_A={l_a} L_B={l_b} sigma_r2={sr:.6}"),
            analytic,
            est.estimate,
            est.stderr,
            budget,
            (est.estimate - analytic).abs() <= 3.0 * est.stderr,
        );
    }

    let trials = budget / 1000;
    if trials > 0 {
        let (m_pe, eps) = (100_000u64, 1e-2);
        let p = ProtocolParams::fiber(1.0, 5.0)?;
        let state = conditioned_state(&p, AliceLink::corrected(gkp_sr(1.0)?))?;
        let cov = mc_pe_coverage(state.cm(), m_pe, eps, trials, next())?;
        let sigma = cov.binomial_sigma(eps);
        push(
            "pe_coverage",
            format!("m_pe={m_pe} eps_pe={eps} L_A=1 L_B=5"),
            eps,
            cov.fraction(),
            sigma,
            trials,
            cov.fraction() <= eps + 3.0 * sigma,
        );
    }
    Ok(t)
}

/// Whether every `pass` cell of a validate report is true.
pub fn all_pass(t: &Table) -> bool {
    let Some(i) = t.column("pass") else { return true };
    t.rows.iter().all(|r| r[i] == Cell::Bool(true))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| Error::InvalidInput(format!("reading {}: {e}", p.display())))?;
            RunConfig::from_toml(&text)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) => EXIT_CONFIG,
        _ => EXIT_VALIDATION,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let cfg = load_config(cli.config.as_deref())?;
    let format = cli.format.or(cfg.output.format).unwrap_or_default();
    let output = cli.output.clone().or_else(|| cfg.output.path.clone());
    let jobs = cli.jobs.unwrap_or(0);
    if cli.jobs == Some(0) {
        return invalid("--jobs must be at least 1");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let table = pool.install(|| match cli.command {
        Command::Residual => cmd_residual(&cfg),
        Command::Rate => cmd_rate(&cfg),
        Command::Fading => cmd_fading(&cfg),
        Command::Validate => cmd_validate(cli.seed, cli.samples.unwrap_or(DEFAULT_SAMPLES)),
    })?;
    match &output {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| Error::InvalidInput(format!("creating {}: {e}", path.display())))?;
            table.write(format, std::io::BufWriter::new(file))?;
        }
        None => table.write(format, std::io::stdout().lock())?,
    }
    if cli.command == Command::Validate && !all_pass(&table) {
        eprintln!("validation failed");
        return Ok(EXIT_VALIDATION);
    }
    Ok(EXIT_SUCCESS)
}

/// Parses `args` (program name first) and runs them.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_SUCCESS };
            let _ = e.print();
            code
        }
    }
}
