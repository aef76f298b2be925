use bisimplex::action::{lattice_sector_sums, Gamma, Rep};
use bisimplex::geometry::dihedral_angles_3d;
use bisimplex::lattice::{Lattice, LatticeConfig};
use bisimplex::onshell::{builtin_suite, certify, CertifyConfig, CertifyReport};
use bisimplex::pathint::{
    n_degenerate_mc, suppression_curve, suppression_slope, AreaKind, DegenerateConfig, McOptions, SLOPE_RANGE,
};
use bisimplex::selftest::run_selftest;
use bisimplex::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bisimplex", version, about = "Connection form of the Regge action: verification suites and amplitude curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Barbero-Immirzi parameter (nonzero).
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Pairwise product of the spatial axes.
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Monte-Carlo samples.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout if absent).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, value_enum)]
    rep: Option<RepArg>,
    /// Replaces the default tolerances.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// JSON file with defaults for the flags above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Lattice counts, triangle multiplicities and 3-d dihedral angles.
    LatticeInfo,
    /// Certify the stationary connections of the built-in simplex suite.
    OnshellVerify {
        /// Force the axis signs, e.g. "-1,1,1,1".
        #[arg(long, allow_hyphen_values = true)]
        force_signs: Option<String>,
    },
    /// Single-triangle amplitude over a grid of areas, with fitted slopes.
    SuppressionCurve {
        #[arg(long, value_enum, default_value = "spacelike")]
        kind: KindArg,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Monte-Carlo estimate of the degenerate 4-simplex amplitude.
    DegenerateN {
        /// Scale of the area vectors.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Perpendicular closure violation as a fraction of |v_4|.
        #[arg(long, default_value_t = 0.0)]
        violation: f64,
        #[arg(long, default_value_t = 4)]
        chi_grid: usize,
    },
    /// Run the invariant suite.
    Selftest {
        /// Same as --format json.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RepArg {
    Su2,
    So3,
}

impl From<RepArg> for Rep {
    fn from(r: RepArg) -> Rep {
        match r {
            RepArg::Su2 => Rep::Su2,
            RepArg::So3 => Rep::So3,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Spacelike,
    Timelike,
}

/// JSON config file; flags override its values.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    gamma: Option<f64>,
    lambda: Option<f64>,
    samples: Option<u64>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    format: Option<Format>,
    rep: Option<RepArg>,
    tolerance: Option<f64>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(_) | Error::Config(_) | Error::InvalidAxis(_) => Failure::input(e.to_string()),
            _ => Failure::numeric(e.to_string()),
        }
    }
}

/// Run configuration after merging the config file and the flags.
struct RunConfig {
    gamma: f64,
    lambda: f64,
    samples: u64,
    seed: u64,
    output: Option<PathBuf>,
    format: Option<Format>,
    rep: Rep,
    tolerance: Option<f64>,
}

fn resolve(c: &CommonArgs) -> Result<RunConfig, Failure> {
    let file = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::input(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| Failure::input(format!("invalid config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let r = RunConfig {
        gamma: c.gamma.or(file.gamma).unwrap_or(1.0),
        lambda: c.lambda.or(file.lambda).unwrap_or(-1.0 / 3.0),
        samples: c.samples.or(file.samples).unwrap_or(1_000_000),
        seed: c.seed.or(file.seed).unwrap_or(1),
        output: c.output.clone().or(file.output),
        format: c.format.or(file.format),
        rep: c.rep.or(file.rep).map(Rep::from).unwrap_or(Rep::Su2),
        tolerance: c.tolerance.or(file.tolerance),
    };
    if r.gamma == 0.0 || r.gamma.is_nan() {
        return Err(Failure::input("gamma must be nonzero"));
    }
    if !(r.lambda > -0.5 && r.lambda < 1.0) {
        return Err(Failure::input(format!("lambda = {} must lie in (-1/2, 1)", r.lambda)));
    }
    if r.samples == 0 {
        return Err(Failure::input("samples must be positive"));
    }
    if let Some(t) = r.tolerance {
        if !(t >= 0.0) {
            return Err(Failure::input("tolerance must be non-negative"));
        }
    }
    Ok(r)
}

/// 17 significant digits.
fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

fn to_json(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default() + "\n"
}

fn lattice_info(r: &RunConfig, fmt: Format) -> Result<(String, bool), Failure> {
    let cfg = LatticeConfig { lambda: r.lambda, ..LatticeConfig::default() };
    let table = dihedral_angles_3d(r.lambda)?;
    table.validate_sector()?;
    let lat = Lattice::build(&cfg)?;
    let kinds = match lattice_sector_sums(&lat) {
        Ok(sectors) => {
            let (mut real, mut half_pi, mut i_eta) = (0, 0, 0);
            for s in &sectors {
                real += s.real;
                half_pi += s.half_pi;
                i_eta += s.i_eta;
            }
            json!({ "real": real, "half_pi_plus_i_eta": half_pi, "i_eta": i_eta })
        }
        Err(Error::SectorViolation(m)) => json!({ "unresolved": m }),
        Err(e) => return Err(e.into()),
    };
    let mults: BTreeMap<String, usize> =
        lat.multiplicity_table().into_iter().map(|(m, n)| (m.to_string(), n)).collect();
    let out = match fmt {
        Format::Json => to_json(&json!({
            "lambda": r.lambda,
            "simplices": lat.simplices.len(),
            "triangles": lat.n_triangles(),
            "multiplicity_table": mults,
            "reference_multiplicities": lat.reference_multiplicities(),
            "angle_kinds_4d": kinds,
            "dihedral_3d": table,
        })),
        Format::Csv => {
            let mut s = String::from("key,value\n");
            s += &format!("lambda,{}\nsimplices,{}\ntriangles,{}\n", f17(r.lambda), lat.simplices.len(), lat.n_triangles());
            for (m, n) in &mults {
                s += &format!("multiplicity_{m},{n}\n");
            }
            for (k, v) in [
                ("a2_43_1", table.a2_43_1),
                ("a1_42_3", table.a1_42_3),
                ("a4_31_2", table.a4_31_2),
                ("a4_23_1", table.a4_23_1),
                ("a4_12_3", table.a4_12_3),
                ("a4_23_1_closed", table.a4_23_1_closed),
                ("min_angle", table.min_angle),
            ] {
                s += &format!("{k},{}\n", f17(v));
            }
            s
        }
    };
    Ok((out, true))
}

fn parse_signs(text: &str) -> Result<[f64; 4], Failure> {
    let v: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::input(format!("invalid signs {text:?}: {e}")))?;
    if v.len() != 4 || v.iter().any(|&x| x != 1.0 && x != -1.0) {
        return Err(Failure::input(format!("signs must be four entries of +-1, got {text:?}")));
    }
    Ok([v[0], v[1], v[2], v[3]])
}

fn onshell_verify(r: &RunConfig, fmt: Format, force: Option<&str>) -> Result<(String, bool), Failure> {
    let mut cfg = CertifyConfig { gamma: r.gamma, ..CertifyConfig::default() };
    if let Some(t) = r.tolerance {
        cfg.gap_tol = t;
        cfg.residual_tol = t;
    }
    cfg.forced_signs = force.map(parse_signs).transpose()?;
    let reports: Vec<CertifyReport> = builtin_suite()?
        .iter()
        .map(|(id, s)| certify(id, s, r.rep, &cfg))
        .collect::<Result<_, _>>()?;
    let ok = reports.iter().all(|x| x.certified);
    let out = match fmt {
        Format::Json => to_json(&json!({ "rep": r.rep.name(), "all_certified": ok, "reports": reports })),
        Format::Csv => {
            let mut s = String::from("simplex_id,rep,gap,residual,gauge_residual,iterations,certified\n");
            for x in &reports {
                s += &format!(
                    "{},{},{},{},{},{},{}\n",
                    x.simplex_id,
                    x.rep.name(),
                    f17(x.gap),
                    f17(x.residual),
                    f17(x.gauge_residual),
                    x.iterations,
                    x.certified
                );
            }
            s
        }
    };
    Ok((out, ok))
}

fn curve(r: &RunConfig, fmt: Format, kind: KindArg, points: usize) -> Result<(String, bool), Failure> {
    if points < 2 {
        return Err(Failure::input("points must be at least 2"));
    }
    let gamma = Gamma::new(r.gamma)?;
    let kind = match kind {
        KindArg::Spacelike => AreaKind::Spacelike,
        KindArg::Timelike => AreaKind::Timelike,
    };
    let rows = suppression_curve(r.rep, kind, gamma, SLOPE_RANGE, points)?;
    let mut slopes = BTreeMap::new();
    for rep in [Rep::Su2, Rep::So3] {
        slopes.insert(
            rep.name(),
            json!({
                "spacelike": suppression_slope(rep, AreaKind::Spacelike, gamma, SLOPE_RANGE)?,
                "timelike": suppression_slope(rep, AreaKind::Timelike, gamma, SLOPE_RANGE)?,
            }),
        );
    }
    let summary = json!({
        "rep": r.rep.name(),
        "kind": kind,
        "gamma": r.gamma,
        "abs_v_range": [SLOPE_RANGE.0, SLOPE_RANGE.1],
        "slopes": slopes,
    });
    let out = match fmt {
        Format::Csv => {
            let mut s = String::from("v2,re_n0,im_n0,closed_re,closed_im,rel_err\n");
            for x in &rows {
                s += &format!(
                    "{},{},{},{},{},{}\n",
                    f17(x.v2),
                    f17(x.n0.re),
                    f17(x.n0.im),
                    f17(x.closed.re),
                    f17(x.closed.im),
                    f17(x.rel_err)
                );
            }
            s + "# " + &serde_json::to_string(&summary).unwrap_or_default() + "\n"
        }
        Format::Json => to_json(&json!({ "rows": rows, "summary": summary })),
    };
    Ok((out, true))
}

fn degenerate(r: &RunConfig, fmt: Format, scale: f64, violation: f64, chi_grid: usize) -> Result<(String, bool), Failure> {
    if !(scale > 0.0) || !violation.is_finite() {
        return Err(Failure::input("scale must be positive and violation finite"));
    }
    let gamma = Gamma::new(r.gamma)?;
    let cfg = if violation == 0.0 {
        DegenerateConfig::cube(scale)
    } else {
        DegenerateConfig::closure_violated(scale, violation)
    };
    let opts = McOptions { samples: r.samples, seed: r.seed, chi_grid, rel_tol: Some(r.tolerance.unwrap_or(0.05)) };
    let e = n_degenerate_mc(&cfg, gamma, &opts)?;
    if let Some(w) = &e.warning {
        eprintln!("warning: {w}");
    }
    let out = match fmt {
        Format::Json => {
            let mut v = json!({
                "mean_re": e.mean.re,
                "mean_im": e.mean.im,
                "stderr": e.stderr,
                "n": e.n_samples,
                "seed": e.seed,
            });
            if let Some(w) = e.warning {
                v["warning"] = json!(w);
            }
            to_json(&v)
        }
        Format::Csv => format!(
            "mean_re,mean_im,stderr,n,seed\n{},{},{},{},{}\n",
            f17(e.mean.re),
            f17(e.mean.im),
            f17(e.stderr),
            e.n_samples,
            e.seed
        ),
    };
    Ok((out, true))
}

fn selftest(r: &RunConfig, json_out: bool) -> Result<(String, bool), Failure> {
    let results = run_selftest(r.tolerance);
    let ok = results.iter().all(|c| c.passed);
    let out = if json_out {
        to_json(&json!({ "passed": ok, "checks": results }))
    } else {
        let mut s = String::new();
        for c in &results {
            let status = if c.passed { "PASS" } else { "FAIL" };
            s += &format!("{status} {} value={:e} tolerance={:e}", c.name, c.value, c.tolerance);
            if let Some(e) = &c.error {
                s += &format!(" error={e}");
            }
            s += "\n";
        }
        s
    };
    Ok((out, ok))
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let r = resolve(&cli.common)?;
    let (out, ok) = match &cli.command {
        Command::LatticeInfo => lattice_info(&r, r.format.unwrap_or(Format::Json))?,
        Command::OnshellVerify { force_signs } => {
            onshell_verify(&r, r.format.unwrap_or(Format::Json), force_signs.as_deref())?
        }
        Command::SuppressionCurve { kind, points } => curve(&r, r.format.unwrap_or(Format::Csv), *kind, *points)?,
        Command::DegenerateN { scale, violation, chi_grid } => {
            degenerate(&r, r.format.unwrap_or(Format::Json), *scale, *violation, *chi_grid)?
        }
        Command::Selftest { json } => selftest(&r, *json || r.format == Some(Format::Json))?,
    };
    match &r.output {
        Some(path) => std::fs::write(path, out)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
