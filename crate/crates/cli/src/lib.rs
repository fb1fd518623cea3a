//! Configs, dispatch and error mapping behind the `inflate-lab` binary.

use std::path::PathBuf;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use inflate_lab::constructions::{
    glue_patches, inflate_on_set, InflateParams, InflatedMap, Patch, PatchSet, PatchSpec,
};
use inflate_lab::error::Error;
use inflate_lab::linalg::Vector;
use inflate_lab::linear_map::{
    euclidean_inflation, inflating_pair_probe, inflation_search, verify_certificate, InflationCertificate, LinearMap,
    SearchBudget, VERIFY_TOL,
};
use inflate_lab::map::{FieldSpec, VectorMap};
use inflate_lab::maximal_volume::{max_volume, MvOptions};
use inflate_lab::measure::{
    calibrate, estimate_lipschitz, negative_csv, positive_csv, run_negative_experiment, run_positive_experiment,
    sup_distance, NegativeConfig, PositiveConfig,
};
use inflate_lab::norm::Norm;
use inflate_lab::region::{BoxRegion, Region};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckInflation,
    ProbePair,
    Mv,
    Inflate,
    Glue,
    ExperimentPositive,
    ExperimentNegative,
    Calibrate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckInflation => "check-inflation",
            Command::ProbePair => "probe-pair",
            Command::Mv => "mv",
            Command::Inflate => "inflate",
            Command::Glue => "glue",
            Command::ExperimentPositive => "experiment-positive",
            Command::ExperimentNegative => "experiment-negative",
            Command::Calibrate => "calibrate",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn empty_params() -> Value {
    json!({})
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default = "empty_params")]
    pub params: Value,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A config file; `command` may be left to the subcommand.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default = "empty_params")]
    pub params: Value,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("invalid config at `{pointer}`: {message}")]
    Schema { pointer: String, message: String },
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> Value {
        let kind = match self {
            CliError::Schema { .. } => "schema",
            CliError::Precondition(_) => "precondition",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        };
        let mut obj = json!({"error": {"kind": kind, "message": self.to_string(), "exit_code": self.exit_code()}});
        if let CliError::Schema { pointer, .. } = self {
            obj["error"]["pointer"] = json!(pointer);
        }
        obj
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Precondition(e.to_string())
        }
    }
}

/// Deserialize with the failing field reported as a dotted path.
pub fn parse_at<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let pointer = match (prefix.is_empty(), inner.as_str()) {
            (true, _) => inner.clone(),
            (false, ".") => prefix.to_string(),
            (false, _) => format!("{prefix}.{inner}"),
        };
        CliError::Schema {
            pointer,
            message: e.into_inner().to_string(),
        }
    })
}

/// Parse config text, reporting syntax errors with their line and column.
pub fn parse_config_text(text: &str) -> Result<ConfigFile, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Schema {
        pointer: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    parse_at(value, "")
}

/// Rendered report.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub json: Value,
    pub csv: Option<String>,
}

impl Output {
    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(&self.json).expect("reports serialize") + "\n"),
            Format::Csv => self
                .csv
                .clone()
                .ok_or_else(|| CliError::Precondition("this command has no CSV output".into())),
        }
    }
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateSpec {
    preimages: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckInflationParams {
    map: LinearMap,
    #[serde(default = "default_lambda")]
    lambda: f64,
    /// Verify this certificate instead of constructing one.
    #[serde(default)]
    certificate: Option<CertificateSpec>,
    #[serde(default)]
    budget: SearchBudget,
}

fn default_samples() -> usize {
    100
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeParams {
    a: Norm,
    b: Norm,
    lambda: f64,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default)]
    budget: SearchBudget,
}

fn default_restarts() -> usize {
    MvOptions::default().restarts
}

fn default_steps() -> usize {
    MvOptions::default().steps
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MvParams {
    u: Vec<f64>,
    a: Norm,
    b: Norm,
    #[serde(default = "default_restarts")]
    restarts: usize,
    #[serde(default = "default_steps")]
    steps: usize,
    #[serde(default = "default_true")]
    allow_analytic: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InflateCliParams {
    field: FieldSpec,
    region: Region,
    #[serde(default)]
    a: Option<Norm>,
    #[serde(default)]
    b: Option<Norm>,
    #[serde(default = "default_lambda")]
    lambda: f64,
    eps: f64,
    eta: f64,
    #[serde(default)]
    sigma: Option<f64>,
    #[serde(default)]
    budget: SearchBudget,
    #[serde(default)]
    max_depth: Option<usize>,
    #[serde(default)]
    sup_samples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum PatchSetSpec {
    Box(BoxRegion),
    Points(Vec<Vec<f64>>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchParams {
    set: PatchSetSpec,
    rho: f64,
    map: FieldSpec,
}

fn default_glue_samples() -> usize {
    10_000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GlueParams {
    base: FieldSpec,
    /// Where the result is sampled.
    region: Region,
    #[serde(default)]
    a: Option<Norm>,
    #[serde(default)]
    b: Option<Norm>,
    /// Lipschitz constant shared by the base and patch maps.
    lip: f64,
    delta: f64,
    patches: Vec<PatchParams>,
    #[serde(default = "default_glue_samples")]
    samples: usize,
}

fn default_box_sizes() -> Vec<f64> {
    vec![2e-2, 1e-2]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrateParams {
    #[serde(default = "default_box_sizes")]
    box_sizes: Vec<f64>,
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

fn euclid(n: usize) -> Result<Norm, CliError> {
    Ok(Norm::euclidean(n)?)
}

fn check_inflation(p: CheckInflationParams, seed: u64) -> Result<Output, CliError> {
    let map = p.map;
    let (method, cert) = if let Some(c) = p.certificate {
        let cert = InflationCertificate {
            preimages: c.preimages,
            eigenvalues: c.eigenvalues,
            lambda: p.lambda,
            verified: false,
            worst_sign_norm: f64::NAN,
            min_sign_vol: f64::NAN,
        };
        ("given", cert)
    } else if map.domain_norm().is_euclidean() && map.codomain_norm().is_euclidean() && p.lambda <= 1.0 {
        ("euclidean", euclidean_inflation(&map)?)
    } else {
        match inflation_search(&map, p.lambda, p.budget, seed)? {
            Some(c) => ("search", c),
            None => {
                return Err(CliError::Numerical(format!(
                    "no {}-inflation found within {} restarts × {} steps",
                    p.lambda, p.budget.restarts, p.budget.steps
                )))
            }
        }
    };
    let mut check = cert.clone();
    check.lambda = p.lambda;
    let verification = verify_certificate(&map, &check, VERIFY_TOL)?;
    if !verification.verified {
        return Err(CliError::Numerical(format!(
            "certificate does not verify: {}",
            verification.reason.clone().unwrap_or_default()
        )));
    }
    Ok(Output {
        json: json!({"method": method, "certificate": cert, "verification": verification}),
        csv: None,
    })
}

fn inflate(p: InflateCliParams, seed: u64) -> Result<Output, CliError> {
    let n = p.region.dim();
    let f: Arc<dyn VectorMap> = Arc::from(p.field.build(n)?);
    let a = match p.a {
        Some(a) => a,
        None => euclid(n)?,
    };
    let b = match p.b {
        Some(b) => b,
        None => euclid(f.codomain_dim())?,
    };
    let mut params = InflateParams::new(p.lambda, p.eps, p.eta);
    params.sigma = p.sigma;
    params.budget = p.budget;
    if let Some(d) = p.max_depth {
        params.max_depth = d;
    }
    if let Some(s) = p.sup_samples {
        params.sup_samples = s;
    }
    let out = inflate_on_set(f, &p.region, &a, &b, &params, seed)?;
    let csv = match &out.map {
        InflatedMap::Single(g) => Some(g.cells_csv()?),
        _ => None,
    };
    Ok(Output {
        json: to_value(&out.report),
        csv,
    })
}

fn glue(p: GlueParams, seed: u64) -> Result<Output, CliError> {
    let n = p.region.dim();
    let base: Arc<dyn VectorMap> = Arc::from(p.base.build(n)?);
    let a = match p.a {
        Some(a) => a,
        None => euclid(n)?,
    };
    let b = match p.b {
        Some(b) => b,
        None => euclid(base.codomain_dim())?,
    };
    let patches = p
        .patches
        .iter()
        .map(|q| -> Result<Patch, CliError> {
            let set = match &q.set {
                PatchSetSpec::Box(bx) => PatchSet::Box(bx.clone()),
                PatchSetSpec::Points(ps) => PatchSet::Points(ps.iter().map(|x| Vector::from_column_slice(x)).collect()),
            };
            Ok(Patch {
                set,
                rho: q.rho,
                map: Arc::from(q.map.build(n)?),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let spec = PatchSpec {
        base: base.clone(),
        patches,
        delta: p.delta,
        domain_norm: a.clone(),
        codomain_norm: b.clone(),
    };
    let g = glue_patches(spec, p.lip, seed)?;
    let lip = estimate_lipschitz(&g, &p.region, &a, &b, p.samples, seed)?;
    let dist = sup_distance(base.as_ref(), &g, &p.region, &b, p.samples, seed);
    Ok(Output {
        json: json!({
            "patches": g.patches().len(),
            "lipschitz_bound": g.lipschitz_bound(),
            "sampled_lipschitz": lip,
            "sup_distance": dist,
            "delta": p.delta,
            "within_delta": dist < p.delta,
        }),
        csv: None,
    })
}

/// Execute a config; `seed` and output settings are taken from it.
pub fn run(config: &ExperimentConfig) -> Result<Output, CliError> {
    let seed = config.seed;
    let params = config.params.clone();
    match config.command {
        Command::CheckInflation => check_inflation(parse_at(params, "params")?, seed),
        Command::ProbePair => {
            let p: ProbeParams = parse_at(params, "params")?;
            let r = inflating_pair_probe(&p.a, &p.b, p.lambda, p.samples, p.budget, seed)?;
            Ok(Output {
                json: to_value(&r),
                csv: None,
            })
        }
        Command::Mv => {
            let p: MvParams = parse_at(params, "params")?;
            let opts = MvOptions {
                restarts: p.restarts,
                steps: p.steps,
                allow_analytic: p.allow_analytic,
            };
            let r = max_volume(&Vector::from_column_slice(&p.u), &p.a, &p.b, opts, seed)?;
            Ok(Output {
                json: to_value(&r),
                csv: None,
            })
        }
        Command::Inflate => inflate(parse_at(params, "params")?, seed),
        Command::Glue => glue(parse_at(params, "params")?, seed),
        Command::ExperimentPositive => {
            let c: PositiveConfig = parse_at(params, "params")?;
            let r = run_positive_experiment(&c, seed)?;
            Ok(Output {
                csv: Some(positive_csv(&r)),
                json: to_value(&r),
            })
        }
        Command::ExperimentNegative => {
            let c: NegativeConfig = parse_at(params, "params")?;
            let r = run_negative_experiment(&c, seed)?;
            Ok(Output {
                csv: Some(negative_csv(&r)),
                json: to_value(&r),
            })
        }
        Command::Calibrate => {
            let p: CalibrateParams = parse_at(params, "params")?;
            let r = calibrate(&p.box_sizes, seed)?;
            let mut csv = String::from("name,n,m,box_size,exact,estimate,ratio\n");
            for c in &r.cases {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    c.name, c.n, c.m, c.box_size, c.exact, c.estimate, c.ratio
                ));
            }
            Ok(Output {
                json: to_value(&r),
                csv: Some(csv),
            })
        }
    }
}

/// Wrap a report with the command and seed that produced it.
pub fn envelope(config: &ExperimentConfig, output: Output) -> Output {
    Output {
        json: json!({"command": config.command.name(), "seed": config.seed, "report": output.json}),
        csv: output.csv,
    }
}
