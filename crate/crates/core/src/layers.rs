//! Information layers bound to patches, and per-patch rates derived from them.

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::spatial::{PatchGrid, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayerError {
    #[error("layer CSV line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("layer `{0}` mixes point-keyed and id-keyed records")]
    MixedLayer(String),
    #[error("duplicate layer name `{0}`")]
    DuplicateLayer(String),
    #[error("layer `{layer}` references unknown patch `{patch}`")]
    UnknownPatch { layer: String, patch: String },
    #[error("layer `{0}` is point-keyed and needs a patch grid")]
    NeedsGrid(String),
    #[error("unknown layer `{0}`")]
    UnknownLayer(String),
    #[error("invalid rate rule `{rule}`: {message}")]
    InvalidRule { rule: String, message: String },
}

pub type Result<T> = std::result::Result<T, LayerError>;

#[derive(Debug, Clone, PartialEq)]
pub enum LayerRecords {
    Points(Vec<(Point, f64)>),
    Ids(Vec<(String, f64)>),
}

impl LayerRecords {
    pub fn len(&self) -> usize {
        match self {
            LayerRecords::Points(r) => r.len(),
            LayerRecords::Ids(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfoLayer {
    pub name: String,
    /// Value for patches the layer does not cover.
    pub default: f64,
    pub records: LayerRecords,
}

impl InfoLayer {
    pub fn points(name: impl Into<String>, records: Vec<(Point, f64)>) -> Self {
        InfoLayer {
            name: name.into(),
            default: 0.0,
            records: LayerRecords::Points(records),
        }
    }

    pub fn ids(name: impl Into<String>, records: Vec<(String, f64)>) -> Self {
        InfoLayer {
            name: name.into(),
            default: 0.0,
            records: LayerRecords::Ids(records),
        }
    }

    pub fn with_default(mut self, default: f64) -> Self {
        self.default = default;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Mean,
    Sum,
    Max,
}

impl Aggregate {
    fn combine(self, values: &[f64]) -> f64 {
        match self {
            Aggregate::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregate::Sum => values.iter().sum(),
            Aggregate::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl std::str::FromStr for Aggregate {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mean" => Ok(Aggregate::Mean),
            "sum" => Ok(Aggregate::Sum),
            "max" => Ok(Aggregate::Max),
            _ => Err(format!(
                "unknown aggregate `{s}` (expected mean, sum or max)"
            )),
        }
    }
}

/// Layer values for every patch. Patches a layer does not cover hold the
/// layer's default.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatchAttributes {
    pub values: BTreeMap<String, BTreeMap<String, f64>>,
    pub defaults: BTreeMap<String, f64>,
}

impl PatchAttributes {
    pub fn get(&self, patch: &str, layer: &str) -> Option<f64> {
        self.values
            .get(patch)
            .and_then(|m| m.get(layer))
            .or_else(|| self.defaults.get(layer))
            .copied()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BindOutcome {
    pub attributes: PatchAttributes,
    /// Point records outside every kept cell, per layer.
    pub dropped: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

/// Binds layers to the patches of a grid.
pub fn bind_layers(
    grid: &PatchGrid,
    layers: &[InfoLayer],
    aggregate: Aggregate,
) -> Result<BindOutcome> {
    let ids: Vec<&str> = grid.patches.iter().map(|p| p.id.as_str()).collect();
    bind(&ids, Some(grid), layers, aggregate)
}

/// Binds id-keyed layers to an explicit set of patch ids (e.g. the nodes of a
/// user adjacency). Point-keyed layers are rejected.
pub fn bind_layers_to_ids(
    ids: &[String],
    layers: &[InfoLayer],
    aggregate: Aggregate,
) -> Result<BindOutcome> {
    let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
    bind(&ids, None, layers, aggregate)
}

fn bind(
    ids: &[&str],
    grid: Option<&PatchGrid>,
    layers: &[InfoLayer],
    aggregate: Aggregate,
) -> Result<BindOutcome> {
    let mut names = HashSet::new();
    for layer in layers {
        if !names.insert(layer.name.as_str()) {
            return Err(LayerError::DuplicateLayer(layer.name.clone()));
        }
    }
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let locate = grid.map(|g| g.locator());
    let mut out = BindOutcome::default();
    let mut per_patch: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); ids.len()];

    for layer in layers {
        if layer.records.is_empty() {
            out.warnings.push(format!(
                "layer `{}` has no records and was omitted",
                layer.name
            ));
            continue;
        }
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
        match &layer.records {
            LayerRecords::Points(records) => {
                let locate = locate
                    .as_ref()
                    .ok_or_else(|| LayerError::NeedsGrid(layer.name.clone()))?;
                let mut dropped = 0;
                for &(pt, v) in records {
                    match locate(pt) {
                        Some(i) => buckets[i].push(v),
                        None => dropped += 1,
                    }
                }
                if dropped > 0 {
                    out.warnings.push(format!(
                        "layer `{}`: {dropped} point(s) outside the grid were dropped",
                        layer.name
                    ));
                }
                out.dropped.insert(layer.name.clone(), dropped);
            }
            LayerRecords::Ids(records) => {
                for (id, v) in records {
                    let i = *index
                        .get(id.as_str())
                        .ok_or_else(|| LayerError::UnknownPatch {
                            layer: layer.name.clone(),
                            patch: id.clone(),
                        })?;
                    buckets[i].push(*v);
                }
            }
        }
        for (i, bucket) in buckets.iter().enumerate() {
            let value = if bucket.is_empty() {
                layer.default
            } else {
                aggregate.combine(bucket)
            };
            per_patch[i].insert(layer.name.clone(), value);
        }
        out.attributes
            .defaults
            .insert(layer.name.clone(), layer.default);
    }
    out.attributes.values = ids.iter().map(|id| id.to_string()).zip(per_patch).collect();
    Ok(out)
}

/// Parses layer CSV: `layer,x,y,value` (point-keyed) or
/// `layer,patch_id,value` (id-keyed). A row with `*` in place of the
/// location sets that layer's default. Layers keep first-appearance order.
pub fn parse_layers_csv(text: &str) -> Result<Vec<InfoLayer>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| LayerError::Csv {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let point_keyed = match header
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["layer", "x", "y", "value"] => true,
        ["layer", "patch_id", "value"] => false,
        _ => {
            return Err(LayerError::Csv {
                line: 1,
                message: "expected header `layer,x,y,value` or `layer,patch_id,value`".into(),
            })
        }
    };
    let mut order: Vec<String> = Vec::new();
    let mut layers: HashMap<String, InfoLayer> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| LayerError::Csv {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| LayerError::Csv {
                    line,
                    message: format!("`{s}` is not a finite number"),
                })
        };
        let name = record[0].to_string();
        if name.is_empty() {
            return Err(LayerError::Csv {
                line,
                message: "empty layer name".into(),
            });
        }
        let layer = layers.entry(name.clone()).or_insert_with(|| {
            order.push(name.clone());
            if point_keyed {
                InfoLayer::points(name.clone(), Vec::new())
            } else {
                InfoLayer::ids(name.clone(), Vec::new())
            }
        });
        let value = num(&record[record.len() - 1])?;
        match &mut layer.records {
            LayerRecords::Points(r) => {
                if &record[1] == "*" && &record[2] == "*" {
                    layer.default = value;
                } else {
                    r.push(((num(&record[1])?, num(&record[2])?), value));
                }
            }
            LayerRecords::Ids(r) => {
                if &record[1] == "*" {
                    layer.default = value;
                } else {
                    r.push((record[1].to_string(), value));
                }
            }
        }
    }
    Ok(order
        .into_iter()
        .map(|n| layers.remove(&n).unwrap())
        .collect())
}

/// `rate = slope * layer + intercept`, clamped to `[min, max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRule {
    pub rate: String,
    pub layer: String,
    pub slope: f64,
    pub intercept: f64,
    pub min: f64,
    pub max: f64,
}

impl RateRule {
    pub fn validate(&self) -> Result<()> {
        let bad = |message: &str| LayerError::InvalidRule {
            rule: self.to_string(),
            message: message.into(),
        };
        if ![self.slope, self.intercept, self.min, self.max]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(bad("coefficients must be finite"));
        }
        if self.min > self.max {
            return Err(bad("min exceeds max"));
        }
        if self.min <= 0.0 {
            return Err(bad("clamp bounds must be positive"));
        }
        Ok(())
    }

    pub fn apply(&self, x: f64) -> f64 {
        (self.slope * x + self.intercept).clamp(self.min, self.max)
    }
}

impl std::fmt::Display for RateRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}:{}:{}",
            self.rate, self.layer, self.slope, self.intercept, self.min, self.max
        )
    }
}

impl std::str::FromStr for RateRule {
    type Err = LayerError;

    /// `rate:layer:slope:intercept:min:max`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let bad = |message: String| LayerError::InvalidRule {
            rule: s.to_string(),
            message,
        };
        if parts.len() != 6 {
            return Err(bad("expected rate:layer:slope:intercept:min:max".into()));
        }
        let mut nums = [0.0; 4];
        for (slot, text) in nums.iter_mut().zip(&parts[2..]) {
            *slot = text
                .parse()
                .map_err(|_| bad(format!("`{text}` is not a number")))?;
        }
        let rule = RateRule {
            rate: parts[0].to_string(),
            layer: parts[1].to_string(),
            slope: nums[0],
            intercept: nums[1],
            min: nums[2],
            max: nums[3],
        };
        rule.validate()?;
        Ok(rule)
    }
}

pub type PatchRates = BTreeMap<String, BTreeMap<String, f64>>;

/// Applies each rule to every patch in `attrs`.
pub fn derive_rates(attrs: &PatchAttributes, rules: &[RateRule]) -> Result<PatchRates> {
    for rule in rules {
        rule.validate()?;
        if !attrs.defaults.contains_key(&rule.layer) {
            return Err(LayerError::UnknownLayer(rule.layer.clone()));
        }
    }
    let mut out = PatchRates::new();
    for patch in attrs.values.keys() {
        let rates = out.entry(patch.clone()).or_default();
        for rule in rules {
            let x = attrs.get(patch, &rule.layer).unwrap_or(0.0);
            rates.insert(rule.rate.clone(), rule.apply(x));
        }
    }
    Ok(out)
}
