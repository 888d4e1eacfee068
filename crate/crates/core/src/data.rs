//! Point sets, lattice datasets, and CSV interchange.
//!
//! Matrix CSV: `n` rows of `n` comma-separated values, `inf` for infinity,
//! no header. Points CSV: one point per row, with an optional first line
//! `# dim=<d>`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result, ValidationError};
use crate::semiring::{DissimMatrix, Matrix};
use crate::value::ExtValue;

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(ValidationError::PointDimension {
                    index: i,
                    expected: dim,
                    found: p.len(),
                }
                .into());
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(ValidationError::NonFiniteCoordinate { index: i }.into());
            }
        }
        Ok(PointSet { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}

/// Layout of a lattice dataset: a `grid_rows × grid_cols` arrangement of
/// rectangular clusters, each `cluster_rows × cluster_cols` points.
///
/// Adjacent points inside a cluster are `spacing` apart. Between
/// neighbouring clusters, `gap` units of empty space are added, so their
/// closest points are `spacing + gap` apart along that axis. With
/// `gap = 0` the clusters fuse into one uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub cluster_rows: usize,
    pub cluster_cols: usize,
    pub spacing: f64,
    pub gap: f64,
}

impl LatticeConfig {
    pub fn new(grid: (usize, usize), cluster: (usize, usize), spacing: f64, gap: f64) -> Self {
        LatticeConfig {
            grid_rows: grid.0,
            grid_cols: grid.1,
            cluster_rows: cluster.0,
            cluster_cols: cluster.1,
            spacing,
            gap,
        }
    }

    pub fn point_count(&self) -> usize {
        self.grid_rows * self.grid_cols * self.cluster_rows * self.cluster_cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_rows == 0 || self.grid_cols == 0 || self.cluster_rows == 0 || self.cluster_cols == 0 {
            return Err(Error::InvalidArgument(
                "lattice grid and cluster dimensions must be positive".into(),
            ));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::InvalidArgument("spacing must be positive".into()));
        }
        if !(self.gap.is_finite() && self.gap >= 0.0) {
            return Err(Error::InvalidArgument("gap must be nonnegative".into()));
        }
        Ok(())
    }
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig::new((2, 2), (3, 3), 1.0, 3.0)
    }
}

/// Deterministic lattice points, cluster by cluster in row-major order,
/// then row-major within each cluster. Coordinates are `(x, y)` with the
/// first cluster's first point at the origin.
pub fn lattice_generate(c: &LatticeConfig) -> Result<PointSet> {
    c.validate()?;
    let stride_x = c.cluster_cols as f64 * c.spacing + c.gap;
    let stride_y = c.cluster_rows as f64 * c.spacing + c.gap;
    let mut points = Vec::with_capacity(c.point_count());
    for gr in 0..c.grid_rows {
        for gc in 0..c.grid_cols {
            let ox = gc as f64 * stride_x;
            let oy = gr as f64 * stride_y;
            for pr in 0..c.cluster_rows {
                for pc in 0..c.cluster_cols {
                    points.push(vec![
                        ox + pc as f64 * c.spacing,
                        oy + pr as f64 * c.spacing,
                    ]);
                }
            }
        }
    }
    PointSet::new(2, points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Manhattan,
    Euclidean,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let pairs = a.iter().zip(b);
        match self {
            Metric::Manhattan => pairs.map(|(x, y)| (x - y).abs()).sum(),
            Metric::Euclidean => pairs.map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        }
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "manhattan" => Ok(Metric::Manhattan),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(format!("unknown metric {other:?} (expected manhattan or euclidean)")),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Manhattan => "manhattan",
            Metric::Euclidean => "euclidean",
        })
    }
}

/// Pairwise distance matrix. Coincident points violate definiteness.
pub fn pairwise_matrix(p: &PointSet, metric: Metric) -> Result<DissimMatrix> {
    let n = p.len();
    if n == 0 {
        return Err(ValidationError::Empty.into());
    }
    let pts = p.points();
    let mut m = Matrix::filled(n, n, ExtValue::ZERO);
    for i in 0..n {
        for j in i + 1..n {
            let d = metric.distance(&pts[i], &pts[j]);
            let v = ExtValue::finite(d).ok_or(ValidationError::NotANumber { row: i, col: j })?;
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    Ok(DissimMatrix::new(m)?)
}

const EXAMPLE1: [[u32; 8]; 8] = [
    [0, 4, 4, 10, 10, 16, 16, 16],
    [4, 0, 4, 10, 10, 16, 16, 16],
    [4, 4, 0, 10, 10, 16, 16, 16],
    [10, 10, 10, 0, 6, 16, 16, 16],
    [10, 10, 10, 6, 0, 16, 16, 16],
    [16, 16, 16, 16, 16, 0, 4, 4],
    [16, 16, 16, 16, 16, 4, 0, 4],
    [16, 16, 16, 16, 16, 4, 4, 0],
];

/// The eight-point ultrametric with clusters `{x1,x2,x3}`, `{x4,x5}`,
/// `{x6,x7,x8}` at radius 6.
pub fn example1_matrix() -> DissimMatrix {
    let rows = EXAMPLE1
        .iter()
        .map(|r| r.iter().map(|&v| ExtValue::from(v)).collect())
        .collect();
    DissimMatrix::from_rows(rows).expect("fixture is a valid dissimilarity")
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Malformed(format!("line {line}: {e}"))
}

/// Parses matrix CSV text and validates it as a dissimilarity matrix.
pub fn parse_matrix_csv(text: &str) -> Result<DissimMatrix> {
    let mut rows: Vec<Vec<ExtValue>> = Vec::new();
    for record in csv_reader(text).records() {
        let record = record.map_err(csv_error)?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        let mut row = Vec::with_capacity(record.len());
        for (j, tok) in record.iter().enumerate() {
            match tok.parse::<ExtValue>() {
                Ok(v) => row.push(v),
                Err(_) => {
                    // Tell negatives apart from garbage.
                    if tok.parse::<f64>().is_ok_and(|x| x < 0.0) {
                        return Err(ValidationError::Negative { row: rows.len(), col: j }.into());
                    }
                    return Err(Error::Parse {
                        line,
                        field: j + 1,
                        token: tok.to_string(),
                    });
                }
            }
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(ValidationError::Ragged {
                    row: rows.len(),
                    expected: first.len(),
                    found: row.len(),
                }
                .into());
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ValidationError::Empty.into());
    }
    DissimMatrix::from_rows(rows)
}

pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<DissimMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text)
}

pub fn matrix_csv_string(m: &DissimMatrix) -> String {
    let mut out = String::new();
    let n = m.order();
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&m.get(i, j).to_string());
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv<W: Write>(m: &DissimMatrix, mut w: W) -> std::io::Result<()> {
    w.write_all(matrix_csv_string(m).as_bytes())
}

pub fn save_matrix_csv(m: &DissimMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_csv_string(m)).map_err(|e| Error::io(path, e))
}

/// Parses points CSV text. A `# dim=<d>` first line pins the dimension;
/// otherwise the first row sets it.
pub fn parse_points_csv(text: &str) -> Result<PointSet> {
    let mut declared: Option<usize> = None;
    let mut body = text;
    if let Some(first) = text.lines().next() {
        let t = first.trim();
        if let Some(rest) = t.strip_prefix('#') {
            let rest = rest.trim();
            let d = rest
                .strip_prefix("dim=")
                .and_then(|d| d.trim().parse::<usize>().ok())
                .ok_or_else(|| Error::Malformed(format!("bad header line {t:?}")))?;
            declared = Some(d);
            let rest = &text[first.len()..];
            body = rest
                .strip_prefix("\r\n")
                .or_else(|| rest.strip_prefix('\n'))
                .unwrap_or(rest);
        }
    }
    let line_offset = usize::from(declared.is_some());
    let mut points = Vec::new();
    for record in csv_reader(body).records() {
        let record = record.map_err(csv_error)?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let line = record.position().map_or(0, |p| p.line() as usize) + line_offset;
        let mut p = Vec::with_capacity(record.len());
        for (j, tok) in record.iter().enumerate() {
            let x: f64 = tok.parse().map_err(|_| Error::Parse {
                line,
                field: j + 1,
                token: tok.to_string(),
            })?;
            p.push(x);
        }
        points.push(p);
    }
    let dim = match (declared, points.first()) {
        (Some(d), _) => d,
        (None, Some(p)) => p.len(),
        (None, None) => return Err(ValidationError::Empty.into()),
    };
    PointSet::new(dim, points)
}

pub fn load_points_csv(path: impl AsRef<Path>) -> Result<PointSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_points_csv(&text)
}

pub fn points_csv_string(p: &PointSet) -> String {
    let mut out = format!("# dim={}\n", p.dim());
    for point in p.points() {
        let row: Vec<String> = point.iter().map(|x| format!("{x}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn save_points_csv(p: &PointSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, points_csv_string(p)).map_err(|e| Error::io(path, e))
}
