//! Parameter sweeps: expand a hyperparameter grid into runs, execute them in
//! parallel, and merge the per-run traces into one CSV plus a summary.
//!
//! Parameter paths are `rates.<transition>` or `marking.<place>`. Runs are
//! the Cartesian product of axis values (first axis slowest) times
//! replicates (fastest). Run `k` in that order gets seed
//! `derive_seed(base_seed, k)`.
//!
//! Output directory layout: `<run id>.csv` per run and `manifest.csv` with
//! header `run_id,status,seed,<axis paths...>,file`. Merging adds
//! `merged.csv` (`run_id,<axis paths...>,time,<places...>`) and
//! `summary.csv` (`run_id,place,final,min,max,mean`).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::formats::{
    parse_andl, parse_sbml, read_trace_csv, write_trace_csv, FormatError, NetDocument,
};
use crate::rng::derive_seed;
use crate::sim::{simulate_ssa, SimConfig, SimError};

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const MERGED_FILE: &str = "merged.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("cannot resolve parameter path `{0}`")]
    UnknownPath(String),
    #[error("duplicate axis `{0}`")]
    DuplicateAxis(String),
    #[error("invalid value {value} for `{path}`: {reason}")]
    InvalidValue {
        path: String,
        value: f64,
        reason: String,
    },
    #[error("invalid sweep spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no manifest in {0}")]
    NoManifest(PathBuf),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("trace for run `{0}` is missing")]
    MissingTrace(String),
    #[error("run `{run}`: {source}")]
    Trace {
        run: String,
        #[source]
        source: FormatError,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("thread pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, SweepError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SweepError + '_ {
    move |source| SweepError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ParamPath {
    Rate(String),
    Marking(String),
}

impl ParamPath {
    pub fn parse(path: &str) -> Result<Self> {
        match path.split_once('.') {
            Some(("rates", id)) if !id.is_empty() => Ok(ParamPath::Rate(id.to_string())),
            Some(("marking", id)) if !id.is_empty() => Ok(ParamPath::Marking(id.to_string())),
            _ => Err(SweepError::UnknownPath(path.to_string())),
        }
    }

    fn check(&self, doc: &NetDocument, value: f64) -> Result<()> {
        let invalid = |reason: &str| SweepError::InvalidValue {
            path: self.to_string(),
            value,
            reason: reason.into(),
        };
        match self {
            ParamPath::Rate(t) => {
                doc.net()
                    .transition_idx(t)
                    .map_err(|_| SweepError::UnknownPath(self.to_string()))?;
                if !(value > 0.0 && value.is_finite()) {
                    return Err(invalid("rates must be positive and finite"));
                }
            }
            ParamPath::Marking(p) => {
                doc.net()
                    .place_idx(p)
                    .map_err(|_| SweepError::UnknownPath(self.to_string()))?;
                if !(value >= 0.0 && value.fract() == 0.0 && value < 2f64.powi(63)) {
                    return Err(invalid("token counts must be non-negative integers"));
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, doc: &mut NetDocument, value: f64) -> Result<()> {
        self.check(doc, value)?;
        match self {
            ParamPath::Rate(t) => doc.set_rate(t, value)?,
            ParamPath::Marking(p) => doc.set_tokens(p, value as u64)?,
        }
        Ok(())
    }
}

impl std::fmt::Display for ParamPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamPath::Rate(t) => write!(f, "rates.{t}"),
            ParamPath::Marking(p) => write!(f, "marking.{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub path: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub base: NetDocument,
    pub axes: Vec<Axis>,
    pub replicates: usize,
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(SweepError::Spec("replicates must be at least 1".into()));
        }
        let mut seen = HashSet::new();
        for axis in &self.axes {
            if !seen.insert(axis.path.as_str()) {
                return Err(SweepError::DuplicateAxis(axis.path.clone()));
            }
            if axis.values.is_empty() {
                return Err(SweepError::Spec(format!(
                    "axis `{}` has no values",
                    axis.path
                )));
            }
            let path = ParamPath::parse(&axis.path)?;
            for &v in &axis.values {
                path.check(&self.base, v)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Pending,
    Ok,
    Truncated,
    Failed(String),
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Pending => "pending",
            RunStatus::Ok => "ok",
            RunStatus::Truncated => "truncated",
            RunStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: String,
    /// `(path, value)` per axis, in axis order.
    pub assignment: Vec<(String, f64)>,
    pub seed: u64,
    pub file: String,
    pub status: RunStatus,
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).to_string().len()
}

/// Expands the spec into one record per (axis values, replicate).
///
/// Run ids are `run_<i1>_<i2>..._rep<r>` with each index zero-padded to the
/// width of its axis, so lexicographic order equals expansion order.
pub fn expand_sweep(spec: &SweepSpec) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let sizes: Vec<usize> = spec.axes.iter().map(|a| a.values.len()).collect();
    let combos: usize = sizes.iter().product();
    let mut records = Vec::with_capacity(combos * spec.replicates);
    let mut idx = vec![0usize; sizes.len()];
    for _ in 0..combos {
        for rep in 0..spec.replicates {
            let mut run_id = String::from("run");
            for (k, &i) in idx.iter().enumerate() {
                let _ = write!(run_id, "_{:0w$}", i, w = digits(sizes[k]));
            }
            let _ = write!(run_id, "_rep{:0w$}", rep, w = digits(spec.replicates));
            let k = records.len() as u64;
            records.push(RunRecord {
                file: format!("{run_id}.csv"),
                run_id,
                assignment: spec
                    .axes
                    .iter()
                    .zip(&idx)
                    .map(|(a, &i)| (a.path.clone(), a.values[i]))
                    .collect(),
                seed: derive_seed(spec.base_seed, k),
                status: RunStatus::Pending,
            });
        }
        // odometer, last axis fastest
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(records)
}

fn run_one(
    base: &NetDocument,
    record: &RunRecord,
    cfg: &SimConfig,
    out_dir: &Path,
) -> Result<RunStatus> {
    let mut doc = base.clone();
    for (path, value) in &record.assignment {
        ParamPath::parse(path)?.apply(&mut doc, *value)?;
    }
    let cfg = SimConfig {
        seed: record.seed,
        ..*cfg
    };
    let result = simulate_ssa(&doc, &cfg)?;
    let path = out_dir.join(&record.file);
    fs::write(&path, write_trace_csv(&result.trace)).map_err(io_err(&path))?;
    Ok(if result.truncated {
        RunStatus::Truncated
    } else {
        RunStatus::Ok
    })
}

/// Runs every record (at most `parallelism` at a time), writes one trace per
/// run and then the manifest. A failing run is recorded as `failed` without
/// stopping the batch.
pub fn run_sweep(
    spec: &SweepSpec,
    records: &[RunRecord],
    cfg: &SimConfig,
    out_dir: &Path,
    parallelism: usize,
) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let done: Vec<RunRecord> = pool.install(|| {
        use rayon::prelude::*;
        records
            .par_iter()
            .map(|r| {
                let status = run_one(&spec.base, r, cfg, out_dir)
                    .unwrap_or_else(|e| RunStatus::Failed(e.to_string()));
                RunRecord {
                    status,
                    ..r.clone()
                }
            })
            .collect()
    });
    let manifest = out_dir.join(MANIFEST_FILE);
    fs::write(&manifest, manifest_csv(spec, &done)).map_err(io_err(&manifest))?;
    Ok(done)
}

pub fn manifest_csv(spec: &SweepSpec, records: &[RunRecord]) -> String {
    let mut out = String::from("run_id,status,seed");
    for axis in &spec.axes {
        let _ = write!(out, ",{}", axis.path);
    }
    out.push_str(",file\n");
    for r in records {
        let _ = write!(out, "{},{},{}", r.run_id, r.status.as_str(), r.seed);
        for (_, v) in &r.assignment {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{}", r.file);
    }
    out
}

struct ManifestRow {
    run_id: String,
    status: String,
    params: Vec<String>,
    file: String,
}

fn read_manifest(dir: &Path) -> Result<(Vec<String>, Vec<ManifestRow>)> {
    let path = dir.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(SweepError::NoManifest(dir.to_path_buf()));
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut lines = text.lines().filter(|l| !l.is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| SweepError::Manifest("empty manifest".into()))?
        .split(',')
        .collect();
    let n = header.len();
    if n < 4 || header[..3] != ["run_id", "status", "seed"] || header[n - 1] != "file" {
        return Err(SweepError::Manifest(
            "header must be `run_id,status,seed,<axes...>,file`".into(),
        ));
    }
    let params: Vec<String> = header[3..n - 1].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n {
            return Err(SweepError::Manifest(format!("malformed row `{line}`")));
        }
        rows.push(ManifestRow {
            run_id: fields[0].to_string(),
            status: fields[1].to_string(),
            params: fields[3..n - 1].iter().map(|s| s.to_string()).collect(),
            file: fields[n - 1].to_string(),
        });
    }
    rows.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    Ok((params, rows))
}

/// Merges the traces listed in the directory's manifest. Runs with status
/// `failed` are skipped. Returns `(merged csv, summary csv)`.
pub fn merge_csv(out_dir: &Path) -> Result<(String, String)> {
    let (params, rows) = read_manifest(out_dir)?;
    let mut places: Option<Vec<String>> = None;
    let mut merged = String::new();
    let mut summary = String::from("run_id,place,final,min,max,mean\n");
    for row in rows.iter().filter(|r| r.status != "failed") {
        let path = out_dir.join(&row.file);
        let text =
            fs::read_to_string(&path).map_err(|_| SweepError::MissingTrace(row.run_id.clone()))?;
        let trace = read_trace_csv(&text).map_err(|source| SweepError::Trace {
            run: row.run_id.clone(),
            source,
        })?;
        match &places {
            None => {
                merged.push_str("run_id");
                for p in &params {
                    let _ = write!(merged, ",{p}");
                }
                merged.push_str(",time");
                for p in &trace.places {
                    let _ = write!(merged, ",{p}");
                }
                merged.push('\n');
                places = Some(trace.places.clone());
            }
            Some(expected) if *expected != trace.places => {
                return Err(SweepError::Manifest(format!(
                    "run `{}` has different place columns",
                    row.run_id
                )));
            }
            Some(_) => {}
        }
        let prefix = std::iter::once(row.run_id.as_str())
            .chain(row.params.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(",");
        for (t, values) in trace.times.iter().zip(&trace.rows) {
            let _ = write!(merged, "{prefix},{t}");
            for v in values {
                let _ = write!(merged, ",{v}");
            }
            merged.push('\n');
        }
        if trace.is_empty() {
            continue;
        }
        for (k, place) in trace.places.iter().enumerate() {
            let column = trace.rows.iter().map(|r| r[k]);
            let min = column.clone().min().unwrap();
            let max = column.clone().max().unwrap();
            let mean = column.map(|v| v as f64).sum::<f64>() / trace.len() as f64;
            let last = trace.rows[trace.len() - 1][k];
            let _ = writeln!(summary, "{},{place},{last},{min},{max},{mean}", row.run_id);
        }
    }
    if places.is_none() {
        merged.push_str("run_id");
        for p in &params {
            let _ = write!(merged, ",{p}");
        }
        merged.push_str(",time\n");
    }
    Ok((merged, summary))
}

/// Runs [`merge_csv`] and writes `merged.csv` and `summary.csv` into the
/// directory. Returns their paths.
pub fn write_merge(out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let (merged, summary) = merge_csv(out_dir)?;
    let mp = out_dir.join(MERGED_FILE);
    let sp = out_dir.join(SUMMARY_FILE);
    fs::write(&mp, merged).map_err(io_err(&mp))?;
    fs::write(&sp, summary).map_err(io_err(&sp))?;
    Ok((mp, sp))
}

/// Default output directory name for a sweep: `<name>_<UTC timestamp>`,
/// e.g. `sir_demo_20240131T154500Z`.
pub fn auto_dir_name(name: &str, at: chrono::DateTime<chrono::Utc>) -> String {
    format!("{name}_{}", at.format("%Y%m%dT%H%M%SZ"))
}

/// Loads a model from `.andl` or `.xml`/`.sbml` by extension.
pub fn load_document(path: &Path) -> Result<NetDocument> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("andl") => Ok(parse_andl(&text)?),
        Some("xml") | Some("sbml") => Ok(parse_sbml(&text)?.document),
        _ => Err(SweepError::Spec(format!(
            "{}: model files must end in .andl, .xml or .sbml",
            path.display()
        ))),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepToml {
    name: String,
    model: PathBuf,
    #[serde(default = "one")]
    replicates: usize,
    #[serde(default)]
    base_seed: u64,
    t_end: f64,
    record_dt: f64,
    max_events: Option<u64>,
    #[serde(default)]
    axis: Vec<AxisToml>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisToml {
    path: String,
    values: Vec<f64>,
}

fn one() -> usize {
    1
}

/// A parsed sweep file: the spec plus the simulation settings shared by all
/// runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFile {
    pub spec: SweepSpec,
    pub sim: SimConfig,
}

/// Parses a sweep file. `model` is resolved relative to `base_dir`.
///
/// ```toml
/// name = "sir_demo"
/// model = "sir.andl"
/// replicates = 2
/// base_seed = 42
/// t_end = 50.0
/// record_dt = 1.0
///
/// [[axis]]
/// path = "rates.infect_p0"
/// values = [0.1, 0.2]
/// ```
pub fn parse_sweep_file(text: &str, base_dir: &Path) -> Result<SweepFile> {
    let raw: SweepToml = toml::from_str(text).map_err(|e| SweepError::Spec(e.to_string()))?;
    let base = load_document(&base_dir.join(&raw.model))?;
    let mut sim = SimConfig::new(raw.t_end, raw.record_dt, raw.base_seed);
    if let Some(m) = raw.max_events {
        sim = sim.with_max_events(m);
    }
    sim.validate()?;
    let spec = SweepSpec {
        name: raw.name,
        base,
        axes: raw
            .axis
            .into_iter()
            .map(|a| Axis {
                path: a.path,
                values: a.values,
            })
            .collect(),
        replicates: raw.replicates,
        base_seed: raw.base_seed,
    };
    spec.validate()?;
    Ok(SweepFile { spec, sim })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Marking;
    use crate::spatial::Adjacency;
    use crate::templates::{assemble_sir, SirParams};

    fn doc() -> NetDocument {
        let adj = Adjacency::new(["p0"], []).unwrap();
        let (net, rates) = assemble_sir(&adj, &SirParams::new(0.1, 0.05, 0.01)).unwrap();
        NetDocument::new("sir", net, Marking::from_vec(vec![20, 1, 0]), &rates).unwrap()
    }

    fn spec(axes: Vec<Axis>, replicates: usize) -> SweepSpec {
        SweepSpec {
            name: "demo".into(),
            base: doc(),
            axes,
            replicates,
            base_seed: 11,
        }
    }

    fn axis(path: &str, values: &[f64]) -> Axis {
        Axis {
            path: path.into(),
            values: values.to_vec(),
        }
    }

    #[test]
    fn cartesian_count_and_order() {
        let s = spec(
            vec![
                axis("rates.infect_p0", &[0.1, 0.2, 0.3]),
                axis("marking.I_p0", &[1.0, 2.0, 3.0, 4.0]),
            ],
            2,
        );
        let records = expand_sweep(&s).unwrap();
        assert_eq!(records.len(), 24);
        assert_eq!(records[0].run_id, "run_0_0_rep0");
        assert_eq!(records[1].run_id, "run_0_0_rep1");
        assert_eq!(records[2].run_id, "run_0_1_rep0");
        assert_eq!(records[23].run_id, "run_2_3_rep1");
        assert_eq!(
            records[2].assignment,
            vec![
                ("rates.infect_p0".to_string(), 0.1),
                ("marking.I_p0".to_string(), 2.0)
            ]
        );
        let mut ids: Vec<_> = records.iter().map(|r| r.run_id.clone()).collect();
        ids.sort();
        assert_eq!(
            ids,
            records.iter().map(|r| r.run_id.clone()).collect::<Vec<_>>()
        );
        assert_eq!(records[5].seed, derive_seed(11, 5));
        assert_eq!(expand_sweep(&s).unwrap(), records);
    }

    #[test]
    fn no_axes() {
        let records = expand_sweep(&spec(vec![], 5)).unwrap();
        assert_eq!(records.len(), 5);
        assert!(records.iter().all(|r| r.assignment.is_empty()));
        assert_eq!(records[4].run_id, "run_rep4");
    }

    #[test]
    fn padded_ids_sort() {
        let values: Vec<f64> = (1..=12).map(f64::from).collect();
        let records = expand_sweep(&spec(vec![axis("marking.S_p0", &values)], 1)).unwrap();
        assert_eq!(records[0].run_id, "run_00_rep0");
        assert_eq!(records[11].run_id, "run_11_rep0");
    }

    #[test]
    fn path_errors() {
        assert!(matches!(
            expand_sweep(&spec(vec![axis("rates.nope", &[1.0])], 1)),
            Err(SweepError::UnknownPath(_))
        ));
        assert!(matches!(
            expand_sweep(&spec(vec![axis("speed.x", &[1.0])], 1)),
            Err(SweepError::UnknownPath(_))
        ));
        assert!(matches!(
            expand_sweep(&spec(vec![axis("marking.S_p0", &[1.5])], 1)),
            Err(SweepError::InvalidValue { .. })
        ));
        assert!(matches!(
            expand_sweep(&spec(vec![axis("rates.infect_p0", &[0.0])], 1)),
            Err(SweepError::InvalidValue { .. })
        ));
        assert!(matches!(
            expand_sweep(&spec(
                vec![
                    axis("rates.infect_p0", &[1.0]),
                    axis("rates.infect_p0", &[2.0])
                ],
                1
            )),
            Err(SweepError::DuplicateAxis(_))
        ));
        assert!(matches!(
            expand_sweep(&spec(vec![], 0)),
            Err(SweepError::Spec(_))
        ));
    }

    #[test]
    fn run_and_merge() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(vec![axis("rates.infect_p0", &[0.1, 0.2])], 1);
        let records = expand_sweep(&s).unwrap();
        let cfg = SimConfig::new(2.0, 1.0, 0);
        let done = run_sweep(&s, &records, &cfg, dir.path(), 2).unwrap();
        assert!(done.iter().all(|r| r.status == RunStatus::Ok));
        let manifest = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(manifest.starts_with("run_id,status,seed,rates.infect_p0,file\n"));
        let (merged, summary) = merge_csv(dir.path()).unwrap();
        let lines: Vec<&str> = merged.lines().collect();
        assert_eq!(lines[0], "run_id,rates.infect_p0,time,S_p0,I_p0,R_p0");
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert!(lines[1].starts_with("run_0_rep0,0.1,0,20,1,0"));
        assert!(lines[4].starts_with("run_1_rep0,0.2,0,"));
        assert_eq!(summary.lines().count(), 1 + 2 * 3);
    }

    #[test]
    fn summary_statistics() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join(MANIFEST_FILE),
            "run_id,status,seed,file\nrun_rep0,ok,1,a.csv\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("a.csv"),
            "time,A,B\n0,100,0\n1,100,50\n2,100,100\n",
        )
        .unwrap();
        let (_, summary) = merge_csv(dir.path()).unwrap();
        assert_eq!(
            summary,
            "run_id,place,final,min,max,mean\nrun_rep0,A,100,100,100,100\nrun_rep0,B,100,0,100,50\n"
        );
    }

    #[test]
    fn merge_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            merge_csv(dir.path()),
            Err(SweepError::NoManifest(_))
        ));
        fs::write(
            dir.path().join(MANIFEST_FILE),
            "run_id,status,seed,file\nrun_rep0,ok,1,gone.csv\n",
        )
        .unwrap();
        match merge_csv(dir.path()) {
            Err(SweepError::MissingTrace(id)) => assert_eq!(id, "run_rep0"),
            other => panic!("expected missing trace, got {other:?}"),
        }
    }

    #[test]
    fn auto_dir() {
        use chrono::TimeZone;
        let at = chrono::Utc
            .with_ymd_and_hms(2024, 1, 31, 15, 45, 0)
            .unwrap();
        assert_eq!(auto_dir_name("demo", at), "demo_20240131T154500Z");
    }

    #[test]
    fn sweep_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("m.andl"), crate::formats::emit_andl(&doc())).unwrap();
        let text = r#"
name = "demo"
model = "m.andl"
replicates = 3
base_seed = 5
t_end = 10.0
record_dt = 0.5

[[axis]]
path = "rates.recover_p0"
values = [0.1, 0.2]
"#;
        let f = parse_sweep_file(text, dir.path()).unwrap();
        assert_eq!(f.spec.base, doc());
        assert_eq!(f.spec.replicates, 3);
        assert_eq!(f.sim.record_dt, 0.5);
        assert_eq!(expand_sweep(&f.spec).unwrap().len(), 6);
        assert!(parse_sweep_file("name = 1", dir.path()).is_err());
    }
}
