//! CSV and JSON serialization, written atomically.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::classify::ClassificationTable;
use super::sweep::{CellSummary, RunRecord};
use crate::error::{Error, Result};
use crate::losses::{Dataset, LossComponent, LossKind};
use crate::surrogate::ScanRow;
use crate::vector::ParameterVector;

/// Bumped whenever the run CSV columns change.
pub const RUN_SCHEMA_VERSION: u32 = 1;

pub const RUN_COLUMNS: [&str; 15] = [
    "problem",
    "d",
    "n",
    "kappa",
    "epsilon",
    "noise_sigma",
    "variant",
    "k",
    "order_index",
    "seed",
    "distance",
    "converged",
    "steps",
    "wall_ms",
    "loss_evals",
];

pub const SCAN_COLUMNS: [&str; 5] = [
    "t",
    "value",
    "directional_derivative",
    "signature",
    "clean_first",
];

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn to_csv<T: Serialize>(rows: &[T], header: Option<&[&str]>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(header.is_none())
        .from_writer(Vec::new());
    if let Some(h) = header {
        w.write_record(h)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Run records as CSV. The first line is a `#` comment carrying the schema
/// version and, when given, a generation timestamp.
pub fn runs_to_csv(records: &[RunRecord], generated_unix: Option<u64>) -> Result<Vec<u8>> {
    let mut out = format!("# mklsgd runs schema={RUN_SCHEMA_VERSION}").into_bytes();
    if let Some(t) = generated_unix {
        out.extend(format!(" generated_unix={t}").bytes());
    }
    out.push(b'\n');
    out.extend(to_csv(records, Some(&RUN_COLUMNS))?);
    Ok(out)
}

/// Parses run records written by [`runs_to_csv`].
pub fn runs_from_csv(bytes: &[u8]) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(bytes);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != RUN_COLUMNS {
        return Err(Error::invalid(format!("unexpected run columns {header:?}")));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn summaries_to_csv(summaries: &[CellSummary]) -> Result<Vec<u8>> {
    to_csv(summaries, None)
}

pub fn scan_to_csv(rows: &[ScanRow]) -> Result<Vec<u8>> {
    to_csv(rows, Some(&SCAN_COLUMNS))
}

pub fn classification_to_csv(table: &ClassificationTable) -> Result<Vec<u8>> {
    to_csv(&table.records, None)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn kind_name(kind: &LossKind) -> &'static str {
    match kind {
        LossKind::ScalarQuadratic { .. } => "scalar-quadratic",
        LossKind::VectorQuadratic { .. } => "vector-quadratic",
        LossKind::LinearRegression { .. } => "linear-regression",
        LossKind::MulticlassLogistic { .. } => "multiclass-logistic",
    }
}

/// Flat CSV form of a dataset.
///
/// ```text
/// meta,<kind>,<n>,<d>,<classes>,<target_is_numerical>
/// target,<w*_1>,...,<w*_d>
/// c,<outlier 0|1>,<params...>
/// ```
///
/// Component parameters are `curvature,center...` for quadratics,
/// `response,features...` for regression and `label,features...` for
/// logistic components. All components must share one kind.
pub fn dataset_to_csv(dataset: &Dataset) -> Result<Vec<u8>> {
    let first = &dataset.components()[0].kind;
    let kind = kind_name(first);
    if dataset
        .components()
        .iter()
        .any(|c| kind_name(&c.kind) != kind)
    {
        return Err(Error::invalid(
            "dataset files need components of a single kind",
        ));
    }
    let classes = match first {
        LossKind::MulticlassLogistic { classes, .. } => *classes,
        _ => 0,
    };
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(Vec::new());
    w.write_record([
        "meta".to_string(),
        kind.to_string(),
        dataset.n().to_string(),
        dataset.dim().to_string(),
        classes.to_string(),
        u8::from(dataset.target_is_numerical).to_string(),
    ])?;
    let mut target = vec!["target".to_string()];
    target.extend(dataset.target().as_slice().iter().map(|x| x.to_string()));
    w.write_record(&target)?;
    for c in dataset.components() {
        let mut row = vec!["c".to_string(), u8::from(c.outlier).to_string()];
        let (head, rest): (String, &[f64]) = match &c.kind {
            LossKind::ScalarQuadratic { curvature, center } => {
                (curvature.to_string(), std::slice::from_ref(center))
            }
            LossKind::VectorQuadratic { curvature, center } => (curvature.to_string(), center),
            LossKind::LinearRegression { features, response } => (response.to_string(), features),
            LossKind::MulticlassLogistic {
                features, label, ..
            } => (label.to_string(), features),
        };
        row.push(head);
        row.extend(rest.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn parse<T: std::str::FromStr>(field: &str, line: u64) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("dataset line {line}: cannot parse {field:?}")))
}

/// Inverse of [`dataset_to_csv`].
pub fn dataset_from_csv(bytes: &[u8]) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut records = rdr.records();
    let mut next = |what: &str| -> Result<(csv::StringRecord, u64)> {
        let r = records
            .next()
            .ok_or_else(|| Error::invalid(format!("dataset file ends before {what}")))??;
        let line = r.position().map_or(0, |p| p.line());
        Ok((r, line))
    };
    let (meta, line) = next("meta row")?;
    if meta.len() != 6 || &meta[0] != "meta" {
        return Err(Error::invalid(format!(
            "dataset line {line}: expected meta,<kind>,<n>,<d>,<classes>,<numerical>"
        )));
    }
    let kind = meta[1].to_string();
    let n: usize = parse(&meta[2], line)?;
    let d: usize = parse(&meta[3], line)?;
    let classes: usize = parse(&meta[4], line)?;
    let numerical: u8 = parse(&meta[5], line)?;

    let (t, line) = next("target row")?;
    if &t[0] != "target" || t.len() != d + 1 {
        return Err(Error::invalid(format!(
            "dataset line {line}: expected target row with {d} values"
        )));
    }
    let target = t
        .iter()
        .skip(1)
        .map(|f| parse(f, line))
        .collect::<Result<Vec<f64>>>()?;

    let mut comps = Vec::with_capacity(n);
    for _ in 0..n {
        let (r, line) = next("component rows")?;
        if r.len() < 3 || &r[0] != "c" {
            return Err(Error::invalid(format!(
                "dataset line {line}: expected component row"
            )));
        }
        let outlier = parse::<u8>(&r[1], line)? == 1;
        let rest = r
            .iter()
            .skip(3)
            .map(|f| parse(f, line))
            .collect::<Result<Vec<f64>>>()?;
        let c = match kind.as_str() {
            "scalar-quadratic" if rest.len() == 1 => {
                LossComponent::scalar_quadratic(parse(&r[2], line)?, rest[0], outlier)
            }
            "vector-quadratic" => {
                LossComponent::vector_quadratic(parse(&r[2], line)?, rest, outlier)
            }
            "linear-regression" => {
                LossComponent::linear_regression(rest, parse(&r[2], line)?, outlier)
            }
            "multiclass-logistic" => {
                LossComponent::multiclass_logistic(rest, parse(&r[2], line)?, classes, outlier)
            }
            _ => {
                return Err(Error::invalid(format!(
                    "dataset line {line}: bad component for kind {kind:?}"
                )))
            }
        }
        .map_err(|e| Error::invalid(format!("dataset line {line}: {e}")))?;
        comps.push(c);
    }
    let mut ds = Dataset::new(comps, ParameterVector::new(target)?)?;
    ds.target_is_numerical = numerical == 1;
    Ok(ds)
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    atomic_write(path, &dataset_to_csv(dataset)?)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    dataset_from_csv(&std::fs::read(path)?)
}
