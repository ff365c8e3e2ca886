//! Command-line front end: the framework file format, subcommands and
//! exporters.
//!
//! Exit codes: 0 success, 2 unreadable or invalid input file, 3 unsupported
//! computation, 4 bad argument.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ap::{check_ap_rigidity, Witness};
use crate::error::Error;
use crate::flex::{
    chi_flex_basis, evaluate_chi_vector, translation_space, verify_flex, ChiSymmetricVector, WindowedField,
};
use crate::gain::{
    joint_spectral_points, rum_membership, rum_spectrum_finite, rum_spectrum_scan, AffineIsometry, GainEdge,
    GainFramework, Representation, ScanOptions, TraceRow, SCAN_TOL,
};
use crate::geometry::{build_covering, derive_phi, CylinderBlock, NormSpec, Placement};
use crate::group::{AbelianGroup, Character, GroupElement};
use crate::linalg::{CMatrix, CVector};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    BadArgument(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Unsupported(_) => 3,
            CliError::BadArgument(_) => 4,
        }
    }

    fn at(path: &str, err: impl std::fmt::Display) -> Self {
        let path = if path.is_empty() || path == "." { "$" } else { path };
        CliError::Parse(format!("{path}: {err}"))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Unsupported(_) => CliError::Unsupported(e.to_string()),
            Error::Usage(_) => CliError::BadArgument(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// A complex entry: either a bare real number or `[re, im]`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Real(f64),
    Complex([f64; 2]),
}

impl Number {
    fn value(self) -> Complex64 {
        match self {
            Number::Real(x) => Complex64::new(x, 0.0),
            Number::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub free_rank: usize,
    #[serde(default)]
    pub torsion: Vec<u32>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub linear: Vec<Vec<Number>>,
    #[serde(default)]
    pub translation: Option<Vec<Number>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationSpec {
    pub generators: Vec<GeneratorSpec>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    #[serde(default)]
    pub free: Vec<i64>,
    #[serde(default)]
    pub torsion: Vec<i64>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockSpec {
    Head,
    Tail,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub id: String,
    pub source: String,
    pub range: String,
    pub gain: ElementSpec,
    #[serde(default)]
    pub phi: Option<Vec<Vec<Number>>>,
    #[serde(default)]
    pub derive: bool,
    #[serde(default)]
    pub block: Option<BlockSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NormFileSpec {
    Euclidean,
    Lq { q: f64 },
    Cylindrical { split: usize },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameworkFile {
    #[serde(default)]
    pub description: Option<String>,
    pub group: GroupSpec,
    pub representation: RepresentationSpec,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub placement: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub norm: Option<NormFileSpec>,
    #[serde(default)]
    pub dy: Option<usize>,
}

/// A validated framework file.
#[derive(Clone, Debug)]
pub struct LoadedFramework {
    pub framework: GainFramework,
    pub placement: Option<Placement>,
    pub norm: Option<NormSpec>,
    /// Cylinder block designation per edge.
    pub blocks: Vec<Option<CylinderBlock>>,
}

fn matrix_from(rows: &[Vec<Number>], path: &str) -> CliResult<CMatrix> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(CliError::at(&format!("{path}[{i}]"), format!("expected {ncols} entries")));
    }
    Ok(CMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j].value()))
}

pub fn parse_framework(text: &str) -> CliResult<LoadedFramework> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: FrameworkFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::at(&path, e.into_inner())
    })?;
    build_framework(&file)
}

pub fn load_framework(path: &Path) -> CliResult<LoadedFramework> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_framework(&text).map_err(|e| match e {
        CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn build_framework(file: &FrameworkFile) -> CliResult<LoadedFramework> {
    let group = AbelianGroup::new(file.group.free_rank, file.group.torsion.clone()).map_err(|e| CliError::at("group", e))?;

    let mut generators = Vec::new();
    for (i, g) in file.representation.generators.iter().enumerate() {
        let path = format!("representation.generators[{i}]");
        let linear = matrix_from(&g.linear, &format!("{path}.linear"))?;
        let translation = match &g.translation {
            Some(t) => CVector::from_iterator(t.len(), t.iter().map(|x| x.value())),
            None => CVector::zeros(linear.nrows()),
        };
        generators.push(AffineIsometry::new(linear, translation).map_err(|e| CliError::at(&path, e))?);
    }
    let tau = Representation::new(group.clone(), generators).map_err(|e| CliError::at("representation", e))?;

    let placement = match &file.placement {
        Some(seeds) => {
            if seeds.len() != file.vertices.len() {
                return Err(CliError::at(
                    "placement",
                    format!("{} seed points for {} vertices", seeds.len(), file.vertices.len()),
                ));
            }
            if let Some(i) = seeds.iter().position(|p| p.len() != tau.dim()) {
                return Err(CliError::at(&format!("placement[{i}]"), format!("expected {} coordinates", tau.dim())));
            }
            Some(Placement::new(seeds.clone()))
        }
        None => None,
    };
    let norm = match &file.norm {
        Some(spec) => {
            let n = match *spec {
                NormFileSpec::Euclidean => NormSpec::Euclidean,
                NormFileSpec::Lq { q } => NormSpec::Lq(q),
                NormFileSpec::Cylindrical { split } => NormSpec::Cylindrical { split },
            };
            n.validate(tau.dim()).map_err(|e| CliError::at("norm", e))?;
            Some(n)
        }
        None => None,
    };

    let vertex = |name: &str, path: String| {
        file.vertices
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| CliError::at(&path, format!("unknown vertex {name:?}")))
    };
    let mut edges = Vec::new();
    let mut blocks = Vec::new();
    for (i, e) in file.edges.iter().enumerate() {
        let path = format!("edges[{i}]");
        let source = vertex(&e.source, format!("{path}.source"))?;
        let range = vertex(&e.range, format!("{path}.range"))?;
        let gain = group
            .element(&e.gain.free, &e.gain.torsion)
            .map_err(|err| CliError::at(&format!("{path}.gain"), err))?;
        let block = e.block.map(|b| match b {
            BlockSpec::Head => CylinderBlock::Head,
            BlockSpec::Tail => CylinderBlock::Tail,
        });
        blocks.push(block);
        let phi = match (&e.phi, e.derive) {
            (Some(_), true) => return Err(CliError::at(&path, "give either phi or derive, not both")),
            (Some(rows), false) => matrix_from(rows, &format!("{path}.phi"))?,
            (None, true) => {
                let (Some(p), Some(n)) = (&placement, &norm) else {
                    return Err(CliError::at(&format!("{path}.derive"), "derived constraints need placement and norm"));
                };
                derive_phi(&tau, p, n, source, range, &gain, block).map_err(|err| CliError::at(&path, err))?
            }
            (None, false) => return Err(CliError::at(&path, "missing phi (or derive: true)")),
        };
        edges.push(GainEdge {
            id: e.id.clone(),
            source,
            range,
            gain,
            phi,
        });
    }
    let dy = file.dy.or_else(|| edges.first().map(|e| e.phi.nrows())).unwrap_or(1);
    let framework = GainFramework::new(file.vertices.clone(), edges, tau, dy).map_err(|e| CliError::at("edges", e))?;
    Ok(LoadedFramework {
        framework,
        placement,
        norm,
        blocks,
    })
}

pub fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn vector_json(v: &CVector) -> Value {
    Value::Array(v.iter().map(|&z| complex_json(z)).collect())
}

/// Row-major nested arrays.
pub fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect()))
            .collect(),
    )
}

fn character_json(chi: &Character) -> Value {
    json!({"angles": chi.angles, "torsion_indices": chi.torsion_indices})
}

fn element_json(g: &GroupElement) -> Value {
    json!({"free": g.free, "torsion": g.torsion})
}

/// `{radius, block_dim, values: [{gamma, value}]}` in window order.
pub fn field_json(f: &WindowedField) -> Value {
    let values: Vec<Value> = f
        .iter()
        .map(|(g, v)| json!({"gamma": element_json(&g), "value": vector_json(v)}))
        .collect();
    json!({"radius": f.window().radius(), "block_dim": f.block_dim(), "values": values})
}

#[derive(Debug, Deserialize)]
struct FieldEntry {
    gamma: ElementSpec,
    value: Vec<Number>,
}

#[derive(Debug, Deserialize)]
struct FieldFile {
    radius: usize,
    #[allow(dead_code)]
    #[serde(default)]
    block_dim: Option<usize>,
    values: Vec<FieldEntry>,
}

fn field_from_value(fw: &GainFramework, value: &Value, path: &str) -> CliResult<WindowedField> {
    let file: FieldFile = serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        CliError::at(&format!("{path}.{inner}"), e.into_inner())
    })?;
    let group = fw.group();
    let window = group.window(file.radius);
    let block = fw.vertices().len() * fw.dx();
    let mut values: Vec<Option<CVector>> = vec![None; window.len()];
    for (i, entry) in file.values.iter().enumerate() {
        let at = format!("{path}.values[{i}]");
        let g = group
            .element(&entry.gamma.free, &entry.gamma.torsion)
            .map_err(|e| CliError::at(&format!("{at}.gamma"), e))?;
        let idx = window
            .index_of(&g)
            .ok_or_else(|| CliError::at(&format!("{at}.gamma"), format!("{g} lies outside the window")))?;
        if entry.value.len() != block {
            return Err(CliError::at(&format!("{at}.value"), format!("expected {block} entries")));
        }
        values[idx] = Some(CVector::from_iterator(block, entry.value.iter().map(|x| x.value())));
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| CliError::at(path, format!("no value at {}", window.element_at(i)))))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(WindowedField::new(window, block, values)?)
}

#[derive(Debug, Parser)]
#[command(name = "rum", version, about = "Rigid unit mode spectra of gain frameworks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// RUM spectrum: exact for finite groups, scanned otherwise.
    Spectrum {
        file: PathBuf,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
        #[arg(long, default_value_t = SCAN_TOL)]
        tol: f64,
        /// Write the scan trace as CSV to this path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Joint spectral points of the linear parts of the representation.
    JointPoints { file: PathBuf },
    /// Basis of chi-symmetric flexes at one character.
    Flex {
        file: PathBuf,
        /// Character as JSON, e.g. '{"angles":[3.14159],"torsion_indices":[0]}'.
        #[arg(long)]
        character: String,
        #[arg(long, default_value_t = 2)]
        window: usize,
        #[arg(long, default_value_t = SCAN_TOL)]
        tol: f64,
    },
    /// Constant translational flexes.
    Translations {
        file: PathBuf,
        #[arg(long, default_value_t = 2)]
        window: usize,
    },
    /// Check exported flexes against the framework.
    Verify {
        file: PathBuf,
        #[arg(long)]
        flex: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Finite piece of the covering framework.
    Cover {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        window: usize,
    },
    /// Almost-periodic rigidity certificate.
    ApRigidity {
        file: PathBuf,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
        #[arg(long, default_value_t = SCAN_TOL)]
        tol: f64,
    },
}

fn parse_character(group: &AbelianGroup, text: &str) -> CliResult<Character> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Spec {
        #[serde(default)]
        angles: Vec<f64>,
        #[serde(default)]
        torsion_indices: Vec<i64>,
    }
    let spec: Spec =
        serde_json::from_str(text).map_err(|e| CliError::BadArgument(format!("--character: {e}")))?;
    if let Some((j, n)) = spec
        .torsion_indices
        .iter()
        .zip(group.torsion())
        .find(|(&j, &n)| j < 0 || j >= n as i64)
    {
        return Err(CliError::BadArgument(format!(
            "--character: torsion index {j} is not in 0..{n}"
        )));
    }
    group
        .character(&spec.angles, &spec.torsion_indices)
        .map_err(|e| CliError::BadArgument(format!("--character: {e}")))
}

fn trace_csv(trace: &[TraceRow], free_rank: usize, torsion_rank: usize) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..free_rank).map(|i| format!("angle{i}")).collect();
    header.extend((0..torsion_rank).map(|i| format!("torsion{i}")));
    header.push("sigma_min".into());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&header).map_err(io)?;
    for row in trace {
        let mut rec: Vec<String> = row.angles.iter().map(|a| a.to_string()).collect();
        rec.extend(row.torsion.iter().map(|t| t.to_string()));
        rec.push(row.sigma_min.to_string());
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn flex_entries(fw: &GainFramework, basis: &[ChiSymmetricVector], radius: usize) -> CliResult<Vec<Value>> {
    let window = fw.group().window(radius);
    basis
        .iter()
        .map(|z| {
            let f = evaluate_chi_vector(fw, z, &window)?;
            let check = verify_flex(fw, &f, None)?;
            Ok(json!({
                "character": character_json(&z.character),
                "amplitude": vector_json(&z.amplitude),
                "check": check,
                "field": field_json(&f),
            }))
        })
        .collect()
}

enum Output {
    Json(Value),
    Text(String),
}

fn spectrum(fw: &GainFramework, samples: usize, tol: f64, out: Option<&Path>, format: Format) -> CliResult<Output> {
    let group = fw.group();
    let (points, saturated, samples_used, trace) = if group.is_finite() {
        let points = rum_spectrum_finite(fw, tol)?;
        let mut trace = Vec::new();
        for chi in group.finite_characters()? {
            let m = rum_membership(fw, &chi, tol)?;
            trace.push(TraceRow {
                angles: Vec::new(),
                torsion: chi.torsion_indices.clone(),
                sigma_min: m.sigma_min,
                flagged: m.is_member,
            });
        }
        (points, Vec::new(), None, trace)
    } else {
        let scan = rum_spectrum_scan(fw, &ScanOptions {
            samples_per_circle: samples,
            tol,
        })?;
        (scan.points, scan.saturated, Some(scan.samples_per_circle), scan.trace)
    };
    let csv = trace_csv(&trace, group.free_rank(), group.torsion().len())?;
    if let Some(path) = out {
        std::fs::write(path, &csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    if format == Format::Csv {
        return Ok(Output::Text(csv));
    }
    Ok(Output::Json(json!({
        "spectrum": points,
        "saturated": saturated,
        "samples_per_circle": samples_used,
    })))
}

fn joint_points(fw: &GainFramework) -> CliResult<Value> {
    let points = joint_spectral_points(fw.tau())?;
    Ok(Value::Array(
        points
            .iter()
            .map(|p| {
                json!({
                    "character": character_json(&p.character),
                    "eigenvalues": p.lambda.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
                    "eigenvectors": matrix_json(&p.eigenspace.transpose()),
                })
            })
            .collect(),
    ))
}

fn verify(fw: &GainFramework, path: &Path, tol: Option<f64>) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let fields: Vec<(String, &Value)> = match value.get("flexes").and_then(Value::as_array) {
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(i, entry)| {
                let at = format!("flexes[{i}].field");
                entry
                    .get("field")
                    .map(|f| (at.clone(), f))
                    .ok_or_else(|| CliError::at(&at, "missing field"))
            })
            .collect::<CliResult<_>>()?,
        None => vec![("$".to_string(), &value)],
    };
    let mut checks = Vec::new();
    for (at, v) in fields {
        let f = field_from_value(fw, v, &at).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?;
        checks.push(verify_flex(fw, &f, tol)?);
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(json!({"checks": checks, "pass": pass}))
}

fn witness_json(w: &Witness) -> Value {
    match w {
        Witness::Character { character, kernel_dim } => json!({
            "kind": "spectrum_point",
            "character": character_json(character),
            "kernel_dim": kernel_dim,
        }),
        Witness::SaturatedTorus { torsion_indices } => json!({
            "kind": "saturated_torus",
            "torsion_indices": torsion_indices,
        }),
        Witness::NonTranslationalFlex { character, amplitude } => json!({
            "kind": "non_translational_flex",
            "character": character_json(character),
            "amplitude": vector_json(amplitude),
        }),
    }
}

pub fn execute(command: &Command) -> CliResult<String> {
    let out = match command {
        Command::Spectrum {
            file,
            samples,
            tol,
            out,
            format,
        } => {
            let fw = load_framework(file)?.framework;
            spectrum(&fw, *samples, *tol, out.as_deref(), *format)?
        }
        Command::JointPoints { file } => Output::Json(joint_points(&load_framework(file)?.framework)?),
        Command::Flex {
            file,
            character,
            window,
            tol,
        } => {
            let fw = load_framework(file)?.framework;
            let chi = parse_character(fw.group(), character)?;
            let basis = chi_flex_basis(&fw, &chi, *tol)?;
            Output::Json(json!({
                "character": character_json(&chi),
                "kernel_dim": basis.len(),
                "flexes": flex_entries(&fw, &basis, *window)?,
            }))
        }
        Command::Translations { file, window } => {
            let fw = load_framework(file)?.framework;
            let basis = translation_space(&fw)?;
            Output::Json(json!({"dim": basis.len(), "flexes": flex_entries(&fw, &basis, *window)?}))
        }
        Command::Verify { file, flex, tol } => Output::Json(verify(&load_framework(file)?.framework, flex, *tol)?),
        Command::Cover { file, window } => {
            let loaded = load_framework(file)?;
            let cover = build_covering(&loaded.framework, loaded.placement.as_ref(), *window)?;
            Output::Json(cover.export_json())
        }
        Command::ApRigidity { file, samples, tol } => {
            let fw = load_framework(file)?.framework;
            let cert = check_ap_rigidity(&fw, &ScanOptions {
                samples_per_circle: *samples,
                tol: *tol,
            })?;
            Output::Json(json!({
                "ap_rigid": cert.ap_rigid,
                "spectrum": cert.spectrum,
                "saturated": cert.saturated,
                "joint_points": cert.joint_points.iter().map(character_json).collect::<Vec<_>>(),
                "witnesses": cert.witnesses.iter().map(witness_json).collect::<Vec<_>>(),
            }))
        }
    };
    Ok(match out {
        Output::Json(v) => {
            let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
            s.push('\n');
            s
        }
        Output::Text(s) => s,
    })
}

/// Parse arguments, run, print, and return the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = write!(stderr, "{}", e.render());
            if code == 0 {
                let _ = write!(stdout, "{}", e.render());
            }
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(text) => {
            let _ = stdout.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FRIEZE: &str = r#"{
        "group": {"free_rank": 1, "torsion": [2]},
        "representation": {"generators": [
            {"linear": [[1, 0], [0, 1]], "translation": [1, 0]},
            {"linear": [[1, 0], [0, -1]]}
        ]},
        "vertices": ["v"],
        "edges": [
            {"id": "e1", "source": "v", "range": "v", "gain": {"free": [1], "torsion": [0]}, "derive": true},
            {"id": "e2", "source": "v", "range": "v", "gain": {"free": [1], "torsion": [1]}, "derive": true}
        ],
        "placement": [[0, -1]],
        "norm": {"kind": "lq", "q": 2}
    }"#;

    #[test]
    fn derived_rows_match_catalog() {
        let loaded = parse_framework(FRIEZE).unwrap();
        let fw = crate::catalog::frieze(2.0, false);
        for (a, b) in loaded.framework.edges().iter().zip(fw.edges()) {
            assert!((&a.phi - &b.phi).norm() < 1e-12);
        }
    }

    #[test]
    fn errors_carry_paths() {
        let bad = FRIEZE.replace(r#""torsion": [1]}, "derive""#, r#""torsion": "x"}, "derive""#);
        match parse_framework(&bad) {
            Err(CliError::Parse(m)) => assert!(m.starts_with("edges[1].gain.torsion"), "{m}"),
            other => panic!("{other:?}"),
        }
        let bad = FRIEZE.replace(r#""norm": {"kind": "lq", "q": 2}"#, r#""dy": 1"#);
        match parse_framework(&bad) {
            Err(CliError::Parse(m)) => assert!(m.starts_with("edges[0].derive"), "{m}"),
            other => panic!("{other:?}"),
        }
        let bad = FRIEZE.replace(r#""range": "v", "gain": {"free": [1], "torsion": [0]}"#, r#""range": "w", "gain": {"free": [1], "torsion": [0]}"#);
        match parse_framework(&bad) {
            Err(CliError::Parse(m)) => assert!(m.starts_with("edges[0].range"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_character_is_argument_error() {
        let g = AbelianGroup::new(1, vec![2]).unwrap();
        assert!(parse_character(&g, r#"{"angles":[0.5],"torsion_indices":[1]}"#).is_ok());
        for bad in [r#"{"angles":[0.5],"torsion_indices":[2]}"#, r#"{"angles":[]}"#, "nope"] {
            assert_eq!(parse_character(&g, bad).unwrap_err().exit_code(), 4);
        }
    }

    #[test]
    fn clap_errors_exit_4() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["rum", "spectrum"], &mut out, &mut err), 4);
        assert_eq!(run(["rum", "--help"], &mut out, &mut err), 0);
    }
}
