//! Region geometry, patch grids and patch adjacency.
//!
//! A region is read from GeoJSON, covered by an axis-aligned grid, and every
//! cell whose center falls inside the region becomes a patch `p_{row}_{col}`.
//! Adjacency between patches comes either from a lattice neighborhood or from
//! a user CSV (0/1 matrix or `source,target` edge list).

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpatialError {
    #[error("invalid JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("unsupported geometry type `{0}`")]
    UnsupportedGeometry(String),
    #[error("malformed GeoJSON: {0}")]
    Format(String),
    #[error("cell size must be positive and finite, got {0}")]
    InvalidCellSize(f64),
    #[error("region bounding box is degenerate")]
    DegenerateRegion,
    #[error("no grid cell center lies inside the region")]
    EmptyGrid,
    #[error("adjacency CSV line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("adjacency matrix is not square: {0}")]
    Shape(String),
    #[error("adjacency matrix is asymmetric at ({0}, {1})")]
    Asymmetric(String, String),
    #[error("unknown patch id `{0}`")]
    UnknownId(String),
    #[error("invalid patch id `{0}` (expected [A-Za-z0-9_]+)")]
    InvalidId(String),
}

pub type Result<T> = std::result::Result<T, SpatialError>;

pub type Point = (f64, f64);

/// Patch ids are embedded into place names (`S_<id>`), so they are limited to
/// ASCII alphanumerics and underscores.
pub fn is_patch_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionPolygon {
    pub exterior: Vec<Point>,
    pub holes: Vec<Vec<Point>>,
}

impl RegionPolygon {
    pub fn new(exterior: Vec<Point>, holes: Vec<Vec<Point>>) -> Result<Self> {
        for ring in std::iter::once(&exterior).chain(&holes) {
            check_ring(ring)?;
        }
        Ok(RegionPolygon { exterior, holes })
    }

    pub fn rings(&self) -> impl Iterator<Item = &[Point]> {
        std::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    /// Exterior area minus hole areas.
    pub fn area(&self) -> f64 {
        ring_area(&self.exterior) - self.holes.iter().map(|h| ring_area(h)).sum::<f64>()
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &self.exterior {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        (lo, hi)
    }
}

fn check_ring(ring: &[Point]) -> Result<()> {
    if ring.len() < 4 {
        return Err(SpatialError::Format(format!(
            "ring has {} vertices, at least 4 required",
            ring.len()
        )));
    }
    if ring.first() != ring.last() {
        return Err(SpatialError::Format("ring is not closed".into()));
    }
    if ring.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(SpatialError::Format("non-finite coordinate".into()));
    }
    Ok(())
}

/// Unsigned shoelace area of a closed ring.
pub fn ring_area(ring: &[Point]) -> f64 {
    ring.windows(2)
        .map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1)
        .sum::<f64>()
        .abs()
        / 2.0
}

/// Reads the first Polygon/MultiPolygon of a GeoJSON Feature,
/// FeatureCollection or bare geometry. For a MultiPolygon the component with
/// the largest area is returned.
pub fn load_region(text: &str) -> Result<RegionPolygon> {
    let root: Value = serde_json::from_str(text).map_err(|e| SpatialError::Json {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let geometry = first_geometry(&root)?;
    let kind = geometry
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| SpatialError::Format("geometry without `type`".into()))?;
    let coords = || {
        geometry
            .get("coordinates")
            .ok_or_else(|| SpatialError::Format("geometry without `coordinates`".into()))
    };
    match kind {
        "Polygon" => polygon_from_json(coords()?),
        "MultiPolygon" => {
            let parts = coords()?.as_array().ok_or_else(|| {
                SpatialError::Format("MultiPolygon coordinates must be an array".into())
            })?;
            let mut best: Option<RegionPolygon> = None;
            for part in parts {
                let poly = polygon_from_json(part)?;
                if best.as_ref().is_none_or(|b| poly.area() > b.area()) {
                    best = Some(poly);
                }
            }
            best.ok_or_else(|| SpatialError::Format("empty MultiPolygon".into()))
        }
        other => Err(SpatialError::UnsupportedGeometry(other.to_string())),
    }
}

fn first_geometry(root: &Value) -> Result<&Value> {
    match root.get("type").and_then(Value::as_str) {
        Some("FeatureCollection") => {
            let feature = root
                .get("features")
                .and_then(Value::as_array)
                .and_then(|f| f.first())
                .ok_or_else(|| SpatialError::Format("FeatureCollection has no features".into()))?;
            first_geometry(feature)
        }
        Some("Feature") => match root.get("geometry") {
            Some(g) if !g.is_null() => Ok(g),
            _ => Err(SpatialError::Format("Feature has no geometry".into())),
        },
        Some(_) => Ok(root),
        None => Err(SpatialError::Format("object without `type`".into())),
    }
}

fn polygon_from_json(value: &Value) -> Result<RegionPolygon> {
    let rings = value.as_array().ok_or_else(|| {
        SpatialError::Format("Polygon coordinates must be an array of rings".into())
    })?;
    let mut parsed = Vec::with_capacity(rings.len());
    for ring in rings {
        let verts = ring
            .as_array()
            .ok_or_else(|| SpatialError::Format("ring must be an array of positions".into()))?;
        let mut pts = Vec::with_capacity(verts.len());
        for v in verts {
            let xy = v.as_array().filter(|a| a.len() >= 2).ok_or_else(|| {
                SpatialError::Format("position must have at least two numbers".into())
            })?;
            match (xy[0].as_f64(), xy[1].as_f64()) {
                (Some(x), Some(y)) => pts.push((x, y)),
                _ => return Err(SpatialError::Format("position must be numeric".into())),
            }
        }
        parsed.push(pts);
    }
    let mut it = parsed.into_iter();
    let exterior = it
        .next()
        .ok_or_else(|| SpatialError::Format("Polygon has no rings".into()))?;
    RegionPolygon::new(exterior, it.collect())
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let before: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (before + column.saturating_sub(1)).min(text.len())
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    let scale = (b.0 - a.0).abs().max((b.1 - a.1).abs()).max(1.0);
    cross.abs() <= 1e-12 * scale * scale
        && p.0 >= a.0.min(b.0)
        && p.0 <= a.0.max(b.0)
        && p.1 >= a.1.min(b.1)
        && p.1 <= a.1.max(b.1)
}

/// Even-odd ray casting over all rings; points on any edge count as inside.
pub fn point_in_polygon(pt: Point, poly: &RegionPolygon) -> bool {
    let mut inside = false;
    for ring in poly.rings() {
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            if on_segment(pt, a, b) {
                return true;
            }
            if (a.1 > pt.1) != (b.1 > pt.1) {
                let x = a.0 + (pt.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
                if pt.0 < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub id: String,
    pub row: usize,
    pub col: usize,
    pub center: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    pub patches: Vec<Patch>,
    pub cell_size: f64,
    pub origin: Point,
    pub rows: usize,
    pub cols: usize,
}

pub fn patch_id(row: usize, col: usize) -> String {
    format!("p_{row}_{col}")
}

impl PatchGrid {
    /// A full `rows x cols` grid with unit cells at the origin.
    pub fn full(rows: usize, cols: usize) -> Self {
        let mut patches = Vec::with_capacity(rows * cols);
        for row in 0..rows {
            for col in 0..cols {
                patches.push(Patch {
                    id: patch_id(row, col),
                    row,
                    col,
                    center: (col as f64 + 0.5, row as f64 + 0.5),
                });
            }
        }
        PatchGrid {
            patches,
            cell_size: 1.0,
            origin: (0.0, 0.0),
            rows,
            cols,
        }
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Index of the kept cell containing `pt`, if any. Cells are half-open
    /// except along the grid's far edges.
    pub fn locate(&self, pt: Point) -> Option<usize> {
        self.locator()(pt)
    }

    /// Like [`locate`](Self::locate) but builds the cell index once.
    pub fn locator(&self) -> impl Fn(Point) -> Option<usize> + '_ {
        let lookup = self.cell_lookup();
        move |pt: Point| {
            let fx = (pt.0 - self.origin.0) / self.cell_size;
            let fy = (pt.1 - self.origin.1) / self.cell_size;
            let cell = |f: f64, n: usize| -> Option<usize> {
                if !(f >= 0.0 && f <= n as f64) {
                    return None;
                }
                Some((f.floor() as usize).min(n - 1))
            };
            let (col, row) = (cell(fx, self.cols)?, cell(fy, self.rows)?);
            lookup.get(&(row, col)).copied()
        }
    }

    fn cell_lookup(&self) -> HashMap<(usize, usize), usize> {
        self.patches
            .iter()
            .enumerate()
            .map(|(i, p)| ((p.row, p.col), i))
            .collect()
    }

    /// `patch_id,row,col,cx,cy` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("patch_id,row,col,cx,cy\n");
        for p in &self.patches {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.id, p.row, p.col, p.center.0, p.center.1
            );
        }
        out
    }
}

/// Covers the region's bounding box with square cells and keeps those whose
/// center lies inside the region, in row-major order.
pub fn grid_from_region(poly: &RegionPolygon, cell_size: f64) -> Result<PatchGrid> {
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(SpatialError::InvalidCellSize(cell_size));
    }
    let (lo, hi) = poly.bbox();
    let (w, h) = (hi.0 - lo.0, hi.1 - lo.1);
    if !(w > 0.0 && h > 0.0) {
        return Err(SpatialError::DegenerateRegion);
    }
    let count = |extent: f64| ((extent / cell_size) - 1e-9).ceil().max(1.0) as usize;
    let (rows, cols) = (count(h), count(w));
    let mut patches = Vec::new();
    for row in 0..rows {
        for col in 0..cols {
            let center = (
                lo.0 + (col as f64 + 0.5) * cell_size,
                lo.1 + (row as f64 + 0.5) * cell_size,
            );
            if point_in_polygon(center, poly) {
                patches.push(Patch {
                    id: patch_id(row, col),
                    row,
                    col,
                    center,
                });
            }
        }
    }
    if patches.is_empty() {
        return Err(SpatialError::EmptyGrid);
    }
    Ok(PatchGrid {
        patches,
        cell_size,
        origin: lo,
        rows,
        cols,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Neighborhood {
    /// 8-connected.
    Moore,
    /// 4-connected.
    VonNeumann,
}

impl Neighborhood {
    pub fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Neighborhood::Moore => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
            Neighborhood::VonNeumann => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
        }
    }
}

impl std::str::FromStr for Neighborhood {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "moore" => Ok(Neighborhood::Moore),
            "vonneumann" => Ok(Neighborhood::VonNeumann),
            _ => Err(format!(
                "unknown neighborhood `{s}` (expected moore or vonneumann)"
            )),
        }
    }
}

/// Lattice adjacency between kept patches.
pub fn neighbors(grid: &PatchGrid, mode: Neighborhood) -> Adjacency {
    let lookup = grid.cell_lookup();
    let mut pairs = Vec::new();
    for p in &grid.patches {
        for &(dr, dc) in mode.offsets() {
            let (r, c) = (p.row as isize + dr, p.col as isize + dc);
            if r < 0 || c < 0 {
                continue;
            }
            if let Some(&j) = lookup.get(&(r as usize, c as usize)) {
                let q = &grid.patches[j];
                if p.id < q.id {
                    pairs.push((p.id.as_str(), q.id.as_str()));
                }
            }
        }
    }
    Adjacency::new(grid.patches.iter().map(|p| p.id.as_str()), pairs)
        .expect("grid ids are valid and edges reference grid patches")
}

/// Undirected, irreflexive patch adjacency. Nodes are kept sorted ascending;
/// edges are stored as index pairs `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Adjacency {
    nodes: Vec<String>,
    edges: BTreeSet<(usize, usize)>,
}

impl Adjacency {
    /// Self-loops are dropped; duplicate nodes and edges collapse.
    pub fn new<'a, N, E>(nodes: N, edges: E) -> Result<Self>
    where
        N: IntoIterator<Item = &'a str>,
        E: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut ids: Vec<String> = Vec::new();
        for n in nodes {
            if !is_patch_id(n) {
                return Err(SpatialError::InvalidId(n.to_string()));
            }
            ids.push(n.to_string());
        }
        ids.sort();
        ids.dedup();
        let index: HashMap<&str, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            let i = *index
                .get(a)
                .ok_or_else(|| SpatialError::UnknownId(a.to_string()))?;
            let j = *index
                .get(b)
                .ok_or_else(|| SpatialError::UnknownId(b.to_string()))?;
            if i != j {
                set.insert((i.min(j), i.max(j)));
            }
        }
        Ok(Adjacency {
            nodes: ids,
            edges: set,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` node indices with `i < j`, sorted.
    pub fn edge_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.edges
            .iter()
            .map(|&(i, j)| (self.nodes[i].as_str(), self.nodes[j].as_str()))
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(id)).ok()
    }

    pub fn contains_edge(&self, a: &str, b: &str) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.edges.contains(&(i.min(j), i.max(j))),
            _ => false,
        }
    }

    pub fn degree(&self, id: &str) -> usize {
        match self.index_of(id) {
            Some(i) => self
                .edges
                .iter()
                .filter(|&&(a, b)| a == i || b == i)
                .count(),
            None => 0,
        }
    }

    /// Neighbor lists indexed by node index.
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut lists = vec![Vec::new(); self.nodes.len()];
        for &(i, j) in &self.edges {
            lists[i].push(j);
            lists[j].push(i);
        }
        lists
    }
}

fn csv_rows(text: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| SpatialError::Csv {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

/// Parses either a square 0/1 matrix with id header row and column, or an
/// edge list headed `source,target`. In the edge-list form a row with an
/// empty target (or a self-pair) declares an isolated node.
pub fn load_adjacency_csv(text: &str) -> Result<Adjacency> {
    let rows = csv_rows(text)?;
    let Some((_, header)) = rows.first() else {
        return Err(SpatialError::Csv {
            line: 1,
            message: "empty input".into(),
        });
    };
    if header.len() == 2 && header[0] == "source" && header[1] == "target" {
        load_edge_list(&rows[1..])
    } else {
        load_matrix(header, &rows[1..])
    }
}

fn load_edge_list(rows: &[(usize, Vec<String>)]) -> Result<Adjacency> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (line, fields) in rows {
        if fields.len() != 2 || fields[0].is_empty() {
            return Err(SpatialError::Csv {
                line: *line,
                message: "expected `source,target`".into(),
            });
        }
        for id in fields.iter().filter(|f| !f.is_empty()) {
            if !is_patch_id(id) {
                return Err(SpatialError::InvalidId(id.clone()));
            }
            nodes.push(id.as_str());
        }
        if !fields[1].is_empty() {
            edges.push((fields[0].as_str(), fields[1].as_str()));
        }
    }
    Adjacency::new(nodes, edges)
}

fn load_matrix(header: &[String], rows: &[(usize, Vec<String>)]) -> Result<Adjacency> {
    let ids = &header[1..];
    let n = ids.len();
    if rows.len() != n {
        return Err(SpatialError::Shape(format!(
            "{n} columns but {} rows",
            rows.len()
        )));
    }
    let mut bits = vec![vec![false; n]; n];
    for (r, (line, fields)) in rows.iter().enumerate() {
        if fields.len() != n + 1 {
            return Err(SpatialError::Shape(format!(
                "line {line} has {} entries, expected {}",
                fields.len().saturating_sub(1),
                n
            )));
        }
        if fields[0] != ids[r] {
            return Err(SpatialError::Csv {
                line: *line,
                message: format!(
                    "row label `{}` does not match column `{}`",
                    fields[0], ids[r]
                ),
            });
        }
        for (c, v) in fields[1..].iter().enumerate() {
            bits[r][c] = match v.as_str() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(SpatialError::Csv {
                        line: *line,
                        message: format!("matrix entry `{other}` is not 0 or 1"),
                    })
                }
            };
        }
    }
    let mut edges = Vec::new();
    for r in 0..n {
        for c in r + 1..n {
            if bits[r][c] != bits[c][r] {
                return Err(SpatialError::Asymmetric(ids[r].clone(), ids[c].clone()));
            }
            if bits[r][c] {
                edges.push((ids[r].as_str(), ids[c].as_str()));
            }
        }
    }
    let unique: BTreeSet<&String> = ids.iter().collect();
    if unique.len() != n {
        return Err(SpatialError::Shape("duplicate ids in header".into()));
    }
    Adjacency::new(ids.iter().map(String::as_str), edges)
}

/// Matrix form with ids ascending and a zero diagonal.
pub fn write_adjacency_csv(adj: &Adjacency) -> String {
    let n = adj.len();
    let mut out = String::with_capacity((n + 1) * (2 * n + 8));
    out.push_str("id");
    for id in &adj.nodes {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    let lists = adj.neighbor_lists();
    let mut row = vec![b'0'; n];
    for (i, id) in adj.nodes.iter().enumerate() {
        row.fill(b'0');
        for &j in &lists[i] {
            row[j] = b'1';
        }
        out.push_str(id);
        for &b in &row {
            out.push(',');
            out.push(b as char);
        }
        out.push('\n');
    }
    out
}

/// Edge-list form `source,target`, one line per undirected edge; isolated
/// nodes are listed with an empty target.
pub fn write_edge_list_csv(adj: &Adjacency) -> String {
    let mut out = String::from("source,target\n");
    let lists = adj.neighbor_lists();
    for (i, id) in adj.nodes.iter().enumerate() {
        if lists[i].is_empty() {
            let _ = writeln!(out, "{id},");
        }
    }
    for (a, b) in adj.edges() {
        let _ = writeln!(out, "{a},{b}");
    }
    out
}
