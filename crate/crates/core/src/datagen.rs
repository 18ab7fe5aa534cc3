//! Instance distributions and the deterministic randomness streams.
//!
//! Every random quantity is a pure function of a 64-bit seed, an instance
//! index `i` and a slot `t` (see [`rng_uniform`]). Distinct uses draw from
//! distinct streams obtained with [`derive_seed`], so an instance and its seed
//! vector are fixed bit for bit by `(seed, configuration, i)`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClusteringInstance, Metric};
use crate::seeding::SeedVector;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 step: add the golden-ratio increment, then finalize.
#[inline]
pub fn mix64(x: u64) -> u64 {
    let mut x = x.wrapping_add(GAMMA);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// 64 random bits at counter `(seed, i, t)`: `mix64(mix64(mix64(seed) ^ i) ^ t)`.
#[inline]
pub fn rng_bits(seed: u64, i: u64, t: u64) -> u64 {
    mix64(mix64(mix64(seed) ^ i) ^ t)
}

/// Uniform double in `[0, 1)` with 53-bit resolution at counter `(seed, i, t)`.
#[inline]
pub fn rng_uniform(seed: u64, i: u64, t: u64) -> f64 {
    (rng_bits(seed, i, t) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stream identifiers passed to [`derive_seed`].
pub mod stream {
    pub const SEED_VECTOR: u64 = 1;
    pub const COMPONENTS: u64 = 2;
    pub const POINTS: u64 = 3;
    pub const LABELS: u64 = 4;
    pub const ROWS: u64 = 5;
}

/// Seed of an independent stream for `domain`.
pub fn derive_seed(seed: u64, domain: u64) -> u64 {
    mix64(mix64(domain) ^ seed)
}

/// The seed vector `Z` of sample `i`: `z_t = rng_uniform(derive_seed(seed, SEED_VECTOR), i, t)`.
pub fn seed_vector(seed: u64, i: u64, k: usize) -> SeedVector {
    let s = derive_seed(seed, stream::SEED_VECTOR);
    SeedVector::new((0..k as u64).map(|t| rng_uniform(s, i, t)).collect())
        .expect("uniform draws lie in [0, 1)")
}

/// First `count` entries of a Fisher-Yates shuffle of `0..population`, using
/// slots `base..base + count` of stream `(seed, i)`.
fn choose_without_replacement(seed: u64, i: u64, base: u64, population: usize, count: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..population).collect();
    for t in 0..count {
        let u = rng_uniform(seed, i, base + t as u64);
        let j = t + ((u * (population - t) as f64) as usize).min(population - t - 1);
        pool.swap(t, j);
    }
    pool.truncate(count);
    pool
}

/// Standard normal pair from two uniforms (Box-Muller).
fn box_muller(u1: f64, u2: f64) -> (f64, f64) {
    let r = (-2.0 * (1.0 - u1).ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Layout of the Gaussian mixture: `side x side` unit-variance components at
/// multiples of `stride`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub side: usize,
    pub stride: f64,
    pub variance: f64,
}

impl Default for GridGeometry {
    fn default() -> Self {
        Self {
            side: 3,
            stride: 5.0,
            variance: 1.0,
        }
    }
}

impl GridGeometry {
    pub fn components(&self) -> usize {
        self.side * self.side
    }

    /// Mean of component `g`, numbered row by row.
    pub fn component_mean(&self, g: usize) -> [f64; 2] {
        [
            self.stride * (g % self.side) as f64,
            self.stride * (g / self.side) as f64,
        ]
    }
}

/// Gaussian-grid distribution: `k` of the grid components, `N` points each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianGrid {
    pub k: usize,
    pub points_per_label: usize,
    pub geometry: GridGeometry,
}

impl GaussianGrid {
    pub fn new(k: usize, points_per_label: usize) -> Result<Self> {
        let grid = Self {
            k,
            points_per_label,
            geometry: GridGeometry::default(),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if g.side == 0 || !(g.stride.is_finite() && g.variance.is_finite() && g.variance >= 0.0) {
            return Err(Error::InvalidParameter("invalid grid geometry".into()));
        }
        if self.k == 0 || self.k > g.components() {
            return Err(Error::InvalidParameter(format!(
                "k = {} outside 1..={} grid components",
                self.k,
                g.components()
            )));
        }
        if self.points_per_label == 0 {
            return Err(Error::InvalidParameter("N must be positive".into()));
        }
        Ok(())
    }
}

/// Instance `i` of the Gaussian-grid distribution.
///
/// Components are chosen without replacement; point `j` of the component at
/// position `c` uses slots `2 * ((c << 32) | j)` and the next one of the point
/// stream, so instances with the same `(seed, i)` are nested across `N`.
pub fn gaussian_grid_instance(grid: &GaussianGrid, seed: u64, i: u64) -> Result<ClusteringInstance> {
    grid.validate()?;
    let geometry = grid.geometry;
    let chosen = choose_without_replacement(
        derive_seed(seed, stream::COMPONENTS),
        i,
        0,
        geometry.components(),
        grid.k,
    );
    let points_seed = derive_seed(seed, stream::POINTS);
    let sd = geometry.variance.sqrt();
    let n = grid.k * grid.points_per_label;
    let mut coords = Vec::with_capacity(2 * n);
    let mut target = Vec::with_capacity(n);
    for (c, &g) in chosen.iter().enumerate() {
        let [mx, my] = geometry.component_mean(g);
        for j in 0..grid.points_per_label {
            let slot = (((c as u64) << 32) | j as u64) << 1;
            let (a, b) = box_muller(
                rng_uniform(points_seed, i, slot),
                rng_uniform(points_seed, i, slot + 1),
            );
            coords.push(mx + sd * a);
            coords.push(my + sd * b);
            target.push(c);
        }
    }
    ClusteringInstance::from_flat(coords, 2, grid.k, target)
}

/// Feature vectors with categorical labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    features: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, features: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidInstance("dataset has no rows".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::InvalidInstance(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = features[0].len();
        if dim == 0 {
            return Err(Error::InvalidInstance("dataset has no feature columns".into()));
        }
        if let Some(row) = features.iter().position(|f| f.len() != dim) {
            return Err(Error::InvalidInstance(format!(
                "row {row} has dimension {}, expected {dim}",
                features[row].len()
            )));
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Distinct labels in order of first appearance.
    pub fn label_set(&self) -> Vec<&str> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for l in &self.labels {
            if seen.insert(l.as_str(), ()).is_none() {
                out.push(l.as_str());
            }
        }
        out
    }

    /// Row indices carrying `label`, in file order.
    pub fn rows_for(&self, label: &str) -> Vec<usize> {
        (0..self.len()).filter(|&r| self.labels[r] == label).collect()
    }
}

fn parse_error(path: &Path, line: u64, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        message,
    }
}

/// Reads a labeled CSV with header `f0,...,f{d-1},label`.
pub fn load_labeled_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(parse_error(path, 1, "missing header".into())),
    };
    let columns = header.len();
    if columns < 2 {
        return Err(parse_error(path, 1, "expected at least one feature and a label column".into()));
    }
    for (c, name) in header.iter().enumerate() {
        let expected = if c + 1 == columns {
            "label".to_string()
        } else {
            format!("f{c}")
        };
        if name.trim() != expected {
            return Err(parse_error(
                path,
                1,
                format!("unknown header column {name:?}, expected {expected:?}"),
            ));
        }
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != columns {
            return Err(parse_error(
                path,
                line,
                format!("expected {columns} fields, found {}", record.len()),
            ));
        }
        let mut row = Vec::with_capacity(columns - 1);
        for (c, cell) in record.iter().take(columns - 1).enumerate() {
            match cell.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => row.push(x),
                _ => {
                    return Err(parse_error(path, line, format!("column f{c}: non-numeric value {cell:?}")))
                }
            }
        }
        features.push(row);
        labels.push(record[columns - 1].trim().to_string());
    }
    if features.is_empty() {
        return Err(parse_error(path, 2, "no data rows".into()));
    }
    let name = path
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    LabeledDataset::new(name, features, labels)
}

/// Writes a dataset in the format read by [`load_labeled_csv`]. Values use
/// the shortest representation that parses back to the same double.
pub fn write_labeled_csv(path: impl AsRef<Path>, dataset: &LabeledDataset) -> Result<()> {
    let rows = dataset
        .features
        .iter()
        .zip(&dataset.labels)
        .map(|(f, l)| (f.as_slice(), l.as_str()));
    write_rows(path.as_ref(), dataset.dim(), rows)
}

fn write_rows<'a>(path: &Path, dim: usize, rows: impl Iterator<Item = (&'a [f64], &'a str)>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header: Vec<String> = (0..dim).map(|c| format!("f{c}")).collect();
    header.push("label".into());
    writer.write_record(&header)?;
    for (features, label) in rows {
        let mut record: Vec<String> = features.iter().map(|x| x.to_string()).collect();
        record.push(label.to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Instance `i` of the label-subset distribution over `dataset`.
///
/// Chooses `k` labels and then `N` rows of each, all without replacement;
/// target index `c` is the position of the label among the chosen ones.
pub fn label_subset_instance(
    dataset: &LabeledDataset,
    k: usize,
    points_per_label: usize,
    seed: u64,
    i: u64,
) -> Result<ClusteringInstance> {
    if k == 0 || points_per_label == 0 {
        return Err(Error::InvalidParameter("k and N must be positive".into()));
    }
    let labels = dataset.label_set();
    if labels.len() < k {
        return Err(Error::InsufficientData(format!(
            "dataset has {} labels, k = {k}",
            labels.len()
        )));
    }
    let chosen = choose_without_replacement(derive_seed(seed, stream::LABELS), i, 0, labels.len(), k);
    let rows_seed = derive_seed(seed, stream::ROWS);
    let mut coords = Vec::with_capacity(k * points_per_label * dataset.dim());
    let mut target = Vec::with_capacity(k * points_per_label);
    for (c, &l) in chosen.iter().enumerate() {
        let rows = dataset.rows_for(labels[l]);
        if rows.len() < points_per_label {
            return Err(Error::InsufficientData(format!(
                "label {:?} has {} rows, N = {points_per_label}",
                labels[l],
                rows.len()
            )));
        }
        let picks = choose_without_replacement(rows_seed, i, (c as u64) << 32, rows.len(), points_per_label);
        for p in picks {
            coords.extend_from_slice(&dataset.features[rows[p]]);
            target.push(c);
        }
    }
    ClusteringInstance::from_flat(coords, dataset.dim(), k, target)
}

/// Serializable description of an instance distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistributionConfig {
    GaussianGrid {
        k: usize,
        #[serde(rename = "N")]
        points_per_label: usize,
        geometry: GridGeometry,
    },
    LabelSubset {
        k: usize,
        #[serde(rename = "N")]
        points_per_label: usize,
        dataset: PathBuf,
    },
}

/// A ready-to-sample instance distribution.
#[derive(Debug, Clone)]
pub enum Distribution {
    GaussianGrid(GaussianGrid),
    LabelSubset {
        dataset: Arc<LabeledDataset>,
        k: usize,
        points_per_label: usize,
    },
}

impl Distribution {
    /// Builds the distribution, loading the dataset file if needed.
    pub fn from_config(config: &DistributionConfig) -> Result<Self> {
        match config {
            DistributionConfig::GaussianGrid {
                k,
                points_per_label,
                geometry,
            } => {
                let grid = GaussianGrid {
                    k: *k,
                    points_per_label: *points_per_label,
                    geometry: *geometry,
                };
                grid.validate()?;
                Ok(Self::GaussianGrid(grid))
            }
            DistributionConfig::LabelSubset {
                k,
                points_per_label,
                dataset,
            } => Ok(Self::LabelSubset {
                dataset: Arc::new(load_labeled_csv(dataset)?),
                k: *k,
                points_per_label: *points_per_label,
            }),
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Self::GaussianGrid(g) => g.k,
            Self::LabelSubset { k, .. } => *k,
        }
    }

    pub fn points_per_label(&self) -> usize {
        match self {
            Self::GaussianGrid(g) => g.points_per_label,
            Self::LabelSubset { points_per_label, .. } => *points_per_label,
        }
    }

    /// Same distribution with `N` points per label.
    pub fn with_points_per_label(&self, points_per_label: usize) -> Self {
        match self {
            Self::GaussianGrid(g) => Self::GaussianGrid(GaussianGrid {
                points_per_label,
                ..*g
            }),
            Self::LabelSubset { dataset, k, .. } => Self::LabelSubset {
                dataset: Arc::clone(dataset),
                k: *k,
                points_per_label,
            },
        }
    }

    /// Instance `i` under `seed`.
    pub fn instance(&self, seed: u64, i: u64) -> Result<ClusteringInstance> {
        match self {
            Self::GaussianGrid(g) => gaussian_grid_instance(g, seed, i),
            Self::LabelSubset {
                dataset,
                k,
                points_per_label,
            } => label_subset_instance(dataset, *k, *points_per_label, seed, i),
        }
    }
}

/// Sidecar metadata stored next to an instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub k: usize,
    pub metric: Metric,
    pub seed: Option<u64>,
    pub i: Option<u64>,
}

/// Path of the JSON sidecar of an instance file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes an instance as a labeled CSV (label = target index) plus sidecar.
pub fn write_instance(path: impl AsRef<Path>, instance: &ClusteringInstance, seed: Option<u64>, i: Option<u64>) -> Result<()> {
    let path = path.as_ref();
    let labels: Vec<String> = instance.target().iter().map(|t| t.to_string()).collect();
    write_rows(
        path,
        instance.dim(),
        (0..instance.n()).map(|v| (instance.point(v), labels[v].as_str())),
    )?;
    let meta = InstanceMeta {
        k: instance.k(),
        metric: instance.metric(),
        seed,
        i,
    };
    let mut out = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(&mut out, &meta)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Reads an instance file. `k` comes from the sidecar when present and is
/// otherwise one more than the largest label.
pub fn load_instance(path: impl AsRef<Path>) -> Result<(ClusteringInstance, Option<InstanceMeta>)> {
    let path = path.as_ref();
    let dataset = load_labeled_csv(path)?;
    let mut target = Vec::with_capacity(dataset.len());
    for (row, label) in dataset.labels().iter().enumerate() {
        let t = label.parse::<usize>().map_err(|_| {
            parse_error(path, row as u64 + 2, format!("label {label:?} is not a target index"))
        })?;
        target.push(t);
    }
    let sidecar = sidecar_path(path);
    let meta: Option<InstanceMeta> = if sidecar.exists() {
        Some(serde_json::from_reader(File::open(&sidecar)?)?)
    } else {
        None
    };
    let k = meta
        .as_ref()
        .map_or_else(|| target.iter().max().map_or(0, |m| m + 1), |m| m.k);
    let coords = dataset.features().iter().flatten().copied().collect();
    let instance = ClusteringInstance::from_flat(coords, dataset.dim(), k, target)?;
    Ok((instance, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rng_is_deterministic_and_in_range() {
        assert_eq!(rng_uniform(7, 3, 11), rng_uniform(7, 3, 11));
        assert_ne!(rng_uniform(7, 3, 11), rng_uniform(7, 3, 12));
        assert_ne!(rng_uniform(7, 3, 11), rng_uniform(8, 3, 11));
        for t in 0..10_000 {
            let u = rng_uniform(1, 2, t);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn grid_means() {
        let g = GridGeometry::default();
        let mut means: Vec<[f64; 2]> = (0..9).map(|c| g.component_mean(c)).collect();
        means.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected = Vec::new();
        for x in [0.0, 5.0, 10.0] {
            for y in [0.0, 5.0, 10.0] {
                expected.push([x, y]);
            }
        }
        assert_eq!(means, expected);
    }

    #[test]
    fn gaussian_grid_contract() {
        let grid = GaussianGrid::new(9, 5).unwrap();
        let inst = gaussian_grid_instance(&grid, 42, 0).unwrap();
        assert_eq!(inst.n(), 45);
        let mut labels = inst.target().to_vec();
        labels.dedup();
        assert_eq!(labels, (0..9).collect::<Vec<_>>());
        assert!(GaussianGrid::new(10, 5).is_err());
    }

    #[test]
    fn gaussian_grid_is_nested_across_n() {
        let small = gaussian_grid_instance(&GaussianGrid::new(4, 10).unwrap(), 5, 2).unwrap();
        let large = gaussian_grid_instance(&GaussianGrid::new(4, 30).unwrap(), 5, 2).unwrap();
        for c in 0..4 {
            for j in 0..10 {
                assert_eq!(small.point(c * 10 + j), large.point(c * 30 + j));
            }
        }
    }

    #[test]
    fn forced_label_subset_is_whole_dataset() {
        let features: Vec<Vec<f64>> = (0..6).map(|x| vec![x as f64]).collect();
        let labels = ["a", "b", "a", "b", "a", "b"].map(String::from).to_vec();
        let ds = LabeledDataset::new("toy", features, labels).unwrap();
        let inst = label_subset_instance(&ds, 2, 3, 9, 0).unwrap();
        let mut xs: Vec<f64> = (0..6).map(|v| inst.point(v)[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        for v in 0..6 {
            let x = inst.point(v)[0] as usize;
            let mut same = (0..6).filter(|&u| inst.target()[u] == inst.target()[v]);
            assert!(same.all(|u| (inst.point(u)[0] as usize) % 2 == x % 2));
        }
        assert!(matches!(
            label_subset_instance(&ds, 2, 4, 9, 0),
            Err(Error::InsufficientData(_))
        ));
        assert!(label_subset_instance(&ds, 3, 1, 9, 0).is_err());
    }

    #[test]
    fn seed_vectors_are_deterministic() {
        assert_eq!(seed_vector(3, 4, 5), seed_vector(3, 4, 5));
        assert_ne!(seed_vector(3, 4, 5), seed_vector(3, 5, 5));
    }
}
