//! Labelled datasets: Gaussian mixtures, the two-cluster pitfall
//! construction, coordinate rotations and CSV ingestion.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::seed;

/// A labelled set of equal-length real vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub dim: usize,
    pub n_classes: usize,
    pub name: String,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyDataset);
        }
        check_dim("dataset labels", features.len(), labels.len())?;
        let dim = features[0].len();
        if dim == 0 {
            return Err(Error::invalid("samples must have at least one feature"));
        }
        for x in &features {
            check_dim("dataset sample", dim, x.len())?;
        }
        if let Some(&label) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(Error::LabelOutOfRange { label, n_classes });
        }
        Ok(Self {
            features,
            labels,
            dim,
            n_classes,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Row-major `n × dim` copy of the features.
    pub fn to_matrix(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.len(), self.dim));
        for (mut row, x) in m.rows_mut().into_iter().zip(&self.features) {
            row.assign(&ndarray::ArrayView1::from(x.as_slice()));
        }
        m
    }

    /// Same labels and metadata, new feature vectors.
    pub fn with_features(&self, features: Vec<Vec<f64>>) -> Result<Self> {
        check_dim("replacement features", self.len(), features.len())?;
        Self::new(self.name.clone(), features, self.labels.clone(), self.n_classes)
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.name.clone(),
            indices.iter().map(|&i| self.features[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.n_classes,
        )
    }

    /// Concatenation of two datasets with matching shape.
    pub fn concat(&self, other: &Dataset) -> Result<Self> {
        check_dim("concatenated dimension", self.dim, other.dim)?;
        let mut features = self.features.clone();
        features.extend(other.features.iter().cloned());
        let mut labels = self.labels.clone();
        labels.extend(&other.labels);
        Self::new(
            self.name.clone(),
            features,
            labels,
            self.n_classes.max(other.n_classes),
        )
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Per-coordinate mean.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut m = vec![0.0; self.dim];
        for x in &self.features {
            for (a, b) in m.iter_mut().zip(x) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// Mean over coordinates of the per-coordinate (population) standard deviation.
    pub fn mean_coordinate_std(&self) -> f64 {
        let mean = self.mean();
        let n = self.len() as f64;
        let mut var = vec![0.0; self.dim];
        for x in &self.features {
            for ((v, xi), mi) in var.iter_mut().zip(x).zip(&mean) {
                *v += (xi - mi) * (xi - mi);
            }
        }
        var.iter().map(|v| (v / n).sqrt()).sum::<f64>() / self.dim as f64
    }
}

/// Isotropic Gaussian mixture with one component per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmSpec {
    pub means: Vec<Vec<f64>>,
    /// Per-coordinate variance σ² shared by all components.
    pub cov_scale: f64,
    pub weights: Vec<f64>,
    pub samples_per_class: usize,
}

impl GmmSpec {
    /// Two classes with means `±(1, …, 1)` in `dim` dimensions.
    pub fn symmetric(dim: usize, cov_scale: f64, samples_per_class: usize) -> Self {
        Self {
            means: vec![vec![1.0; dim], vec![-1.0; dim]],
            cov_scale,
            weights: vec![0.5, 0.5],
            samples_per_class,
        }
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.means.is_empty() {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        let d = self.dim();
        if d == 0 {
            return Err(Error::invalid("mixture means must be non-empty"));
        }
        for m in &self.means {
            check_dim("mixture mean", d, m.len())?;
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::non_finite("mixture mean"));
            }
        }
        if !(self.cov_scale > 0.0 && self.cov_scale.is_finite()) {
            return Err(Error::invalid(format!(
                "cov_scale must be positive, got {}",
                self.cov_scale
            )));
        }
        check_dim("mixture weights", self.means.len(), self.weights.len())?;
        if self.weights.iter().any(|&w| w.is_nan() || w < 0.0) {
            return Err(Error::invalid("mixture weights must be non-negative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        if self.samples_per_class == 0 {
            return Err(Error::invalid("samples_per_class must be positive"));
        }
        Ok(())
    }
}

/// Draws `samples_per_class` points `μ_k + σ z` for every class, class-major.
pub fn make_gmm(spec: &GmmSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let sigma = spec.cov_scale.sqrt();
    let mut rng = seed::rng_for(seed, "gmm", 0);
    let mut features = Vec::with_capacity(spec.means.len() * spec.samples_per_class);
    let mut labels = Vec::with_capacity(features.capacity());
    for (k, mean) in spec.means.iter().enumerate() {
        for _ in 0..spec.samples_per_class {
            features.push(
                mean.iter()
                    .map(|m| m + sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            );
            labels.push(k);
        }
    }
    Dataset::new(
        format!("gmm-{}d", spec.dim()),
        features,
        labels,
        spec.means.len(),
    )
}

/// Two isotropic clusters: class 0 at the origin, class 1 at `dx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitfallSpec {
    pub dx: Vec<f64>,
    /// Indistinguishability threshold; coordinates of `dx` below it are irrelevant.
    pub eps: f64,
    pub cluster_std: f64,
    pub samples_per_class: usize,
}

impl PitfallSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dx.is_empty() || self.dx.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dx must be a non-empty finite vector"));
        }
        if self.dx.iter().all(|&v| v == 0.0) {
            return Err(Error::invalid("dx must be non-zero"));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::invalid(format!("eps must be positive, got {}", self.eps)));
        }
        if self.cluster_std.is_nan() || self.cluster_std < 0.0 {
            return Err(Error::invalid("cluster_std must be non-negative"));
        }
        if self.samples_per_class == 0 {
            return Err(Error::invalid("samples_per_class must be positive"));
        }
        Ok(())
    }

    /// Coordinates whose separation exceeds `eps`.
    pub fn relevant_coordinates(&self) -> Vec<usize> {
        (0..self.dx.len())
            .filter(|&i| self.dx[i].abs() > self.eps)
            .collect()
    }
}

pub fn make_pitfall(spec: &PitfallSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = seed::rng_for(seed, "pitfall", 0);
    let d = spec.dx.len();
    let origin = vec![0.0; d];
    let mut features = Vec::with_capacity(2 * spec.samples_per_class);
    let mut labels = Vec::with_capacity(2 * spec.samples_per_class);
    for (class, center) in [&origin, &spec.dx].into_iter().enumerate() {
        for _ in 0..spec.samples_per_class {
            features.push(
                center
                    .iter()
                    .map(|c| c + spec.cluster_std * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            );
            labels.push(class);
        }
    }
    Dataset::new(format!("pitfall-{d}d"), features, labels, 2)
}

/// Uniformly distributed rotation (orthogonal, determinant +1).
pub fn random_rotation(dim: usize, seed: u64) -> Result<Array2<f64>> {
    if dim == 0 {
        return Err(Error::invalid("rotation dimension must be positive"));
    }
    let mut rng = seed::rng_for(seed, "rotation", 0);
    let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Haar measure needs the sign of diag(R) folded into Q.
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    Ok(Array2::from_shape_fn((dim, dim), |(i, j)| q[(i, j)]))
}

pub fn apply_matrix(m: &Array2<f64>, x: &[f64]) -> Result<Vec<f64>> {
    check_dim("matrix-vector product", m.ncols(), x.len())?;
    Ok(m.dot(&ndarray::ArrayView1::from(x)).to_vec())
}

/// Maps every sample `x ↦ R x`; labels are unchanged.
pub fn rotate_dataset(dataset: &Dataset, rotation: &Array2<f64>) -> Result<Dataset> {
    if rotation.nrows() != rotation.ncols() {
        return Err(Error::invalid("rotation must be square"));
    }
    check_dim("rotation", dataset.dim, rotation.ncols())?;
    let features = dataset
        .features
        .iter()
        .map(|x| apply_matrix(rotation, x))
        .collect::<Result<Vec<_>>>()?;
    dataset.with_features(features)
}

/// Column statistics used to standardize a CSV import.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvImport {
    pub dataset: Dataset,
    pub columns: Vec<ColumnStats>,
    /// Label strings in class-index order.
    pub classes: Vec<String>,
}

const VARIANCE_FLOOR: f64 = 1e-12;

/// Reads a headered CSV, maps labels to `0..c` in order of first appearance and
/// standardizes each feature column to zero mean and unit variance.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    feature_columns: &[&str],
) -> Result<CsvImport> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Csv {
            path: path.to_path_buf(),
            message: format!("missing column `{name}`"),
        })
    };
    let label_idx = find(label_column)?;
    let feature_idx = feature_columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;
    if feature_idx.is_empty() {
        return Err(Error::invalid("at least one feature column is required"));
    }

    let mut class_of: HashMap<String, usize> = HashMap::new();
    let mut classes = Vec::new();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        // Header is line 1; data rows start at line 2.
        let row = row_no + 2;
        let raw_label = record.get(label_idx).unwrap_or("").trim().to_string();
        let next = classes.len();
        let label = *class_of.entry(raw_label.clone()).or_insert_with(|| {
            classes.push(raw_label);
            next
        });
        let x = feature_idx
            .iter()
            .zip(feature_columns)
            .map(|(&i, name)| {
                let cell = record.get(i).unwrap_or("").trim();
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::CsvCell {
                        path: path.to_path_buf(),
                        row,
                        column: (*name).to_string(),
                        value: cell.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        features.push(x);
        labels.push(label);
    }
    if features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if classes.len() < 2 {
        return Err(Error::invalid(format!(
            "{}: label column `{label_column}` has a single class",
            path.display()
        )));
    }

    let n = features.len() as f64;
    let mut columns = Vec::with_capacity(feature_idx.len());
    for (j, name) in feature_columns.iter().enumerate() {
        let mean = features.iter().map(|x| x[j]).sum::<f64>() / n;
        let var = features.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / n;
        let std = var.max(VARIANCE_FLOOR).sqrt();
        for x in features.iter_mut() {
            x[j] = (x[j] - mean) / std;
        }
        columns.push(ColumnStats {
            name: (*name).to_string(),
            mean,
            std,
        });
    }
    // A constant column divided by the floored std is exactly 0 already, but
    // rounding in the mean can leave tiny residues; pin them.
    for (j, c) in columns.iter().enumerate() {
        if c.std <= VARIANCE_FLOOR.sqrt() {
            features.iter_mut().for_each(|x| x[j] = 0.0);
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    let n_classes = classes.len();
    Ok(CsvImport {
        dataset: Dataset::new(name, features, labels, n_classes)?,
        columns,
        classes,
    })
}

/// Stratified, seeded train/test split. Both halves keep the original sample order.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = dataset.len();
    if n < 2 {
        return Err(Error::invalid("need at least two samples to split"));
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.n_classes];
    for (i, &y) in dataset.labels.iter().enumerate() {
        by_class[y].push(i);
    }
    // Largest-remainder allocation of the test quota across classes.
    let quotas: Vec<f64> = by_class
        .iter()
        .map(|idx| idx.len() as f64 * n_test as f64 / n as f64)
        .collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut remaining = n_test - take.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &k in order.iter().cycle().take(4 * order.len()) {
        if remaining == 0 {
            break;
        }
        if take[k] < by_class[k].len() {
            take[k] += 1;
            remaining -= 1;
        }
    }

    let mut rng = seed::rng_for(seed, "split", 0);
    let mut is_test = vec![false; n];
    for (members, &k) in by_class.iter_mut().zip(&take) {
        rand::seq::SliceRandom::shuffle(members.as_mut_slice(), &mut rng);
        for &i in members.iter().take(k) {
            is_test[i] = true;
        }
    }
    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_test[i]);
    Ok((dataset.subset(&train_idx)?, dataset.subset(&test_idx)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn gmm_class_means_concentrate() {
        let spec = GmmSpec::symmetric(64, 0.3, 500);
        let data = make_gmm(&spec, 0).unwrap();
        assert_eq!(data.class_counts(), vec![500, 500]);
        let bound = 3.0 * 0.3f64.sqrt() / 500f64.sqrt();
        for (k, mu) in spec.means.iter().enumerate() {
            let members: Vec<_> = data
                .features
                .iter()
                .zip(&data.labels)
                .filter(|(_, &y)| y == k)
                .map(|(x, _)| x)
                .collect();
            for j in 0..64 {
                let m = members.iter().map(|x| x[j]).sum::<f64>() / members.len() as f64;
                assert!((m - mu[j]).abs() < bound, "class {k} coord {j}: {m}");
            }
        }
    }

    #[test]
    fn gmm_degenerate_variance_hits_means() {
        let mut spec = GmmSpec::symmetric(5, 1e-12, 10);
        spec.means[1] = vec![3.0; 5];
        let data = make_gmm(&spec, 3).unwrap();
        for (x, &y) in data.features.iter().zip(&data.labels) {
            for (a, b) in x.iter().zip(&spec.means[y]) {
                assert!((a - b).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn gmm_is_seeded() {
        let spec = GmmSpec::symmetric(8, 0.3, 20);
        assert_eq!(make_gmm(&spec, 11).unwrap(), make_gmm(&spec, 11).unwrap());
        assert_ne!(make_gmm(&spec, 11).unwrap(), make_gmm(&spec, 12).unwrap());
    }

    #[test]
    fn gmm_rejects_bad_weights() {
        let mut spec = GmmSpec::symmetric(4, 0.3, 5);
        spec.weights = vec![0.6, 0.6];
        assert!(make_gmm(&spec, 0).is_err());
        spec.weights = vec![0.5, 0.5];
        spec.cov_scale = 0.0;
        assert!(make_gmm(&spec, 0).is_err());
    }

    #[test]
    fn pitfall_two_point_construction() {
        let spec = PitfallSpec {
            dx: vec![1.0, 2.0, 0.01],
            eps: 0.05,
            cluster_std: 0.0,
            samples_per_class: 1,
        };
        let data = make_pitfall(&spec, 0).unwrap();
        assert_eq!(data.features, vec![vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 0.01]]);
        assert_eq!(data.labels, vec![0, 1]);
        assert_eq!(spec.relevant_coordinates(), vec![0, 1]);
    }

    #[test]
    fn pitfall_last_coordinate_only() {
        let spec = PitfallSpec {
            dx: vec![0.0, 0.0, 0.0, 1.0],
            eps: 0.1,
            cluster_std: 0.0,
            samples_per_class: 3,
        };
        let data = make_pitfall(&spec, 0).unwrap();
        for (x, &y) in data.features.iter().zip(&data.labels) {
            assert_eq!(&x[..3], &[0.0, 0.0, 0.0]);
            assert_eq!(x[3], y as f64);
        }
    }

    #[test]
    fn pitfall_cluster_means() {
        let spec = PitfallSpec {
            dx: vec![1.0, 2.0, 0.01],
            eps: 0.05,
            cluster_std: 0.05,
            samples_per_class: 100,
        };
        let data = make_pitfall(&spec, 5).unwrap();
        for (class, center) in [vec![0.0; 3], spec.dx.clone()].iter().enumerate() {
            for j in 0..3 {
                let vals: Vec<f64> = data
                    .features
                    .iter()
                    .zip(&data.labels)
                    .filter(|(_, &y)| y == class)
                    .map(|(x, _)| x[j])
                    .collect();
                let m = vals.iter().sum::<f64>() / vals.len() as f64;
                assert!((m - center[j]).abs() < 0.02);
            }
        }
    }

    #[test]
    fn pitfall_rejects_invalid() {
        let mut spec = PitfallSpec {
            dx: vec![0.0, 0.0],
            eps: 0.1,
            cluster_std: 0.0,
            samples_per_class: 1,
        };
        assert!(make_pitfall(&spec, 0).is_err());
        spec.dx = vec![1.0, 0.0];
        spec.eps = 0.0;
        assert!(make_pitfall(&spec, 0).is_err());
    }

    #[test]
    fn rotation_one_dimensional_is_identity() {
        let r = random_rotation(1, 9).unwrap();
        assert_eq!(r[(0, 0)], 1.0);
        assert!(random_rotation(0, 9).is_err());
    }

    #[test]
    fn rotation_is_orthogonal_with_unit_determinant() {
        for dim in [2, 3, 8, 20] {
            let r = random_rotation(dim, 42).unwrap();
            let rtr = r.t().dot(&r);
            let dev: f64 = rtr
                .indexed_iter()
                .map(|((i, j), v)| (v - if i == j { 1.0 } else { 0.0 }).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(dev < 1e-10, "dim {dim}: {dev}");
            let m = DMatrix::from_fn(dim, dim, |i, j| r[(i, j)]);
            assert!((m.determinant() - 1.0).abs() < 1e-10);
        }
        assert_eq!(random_rotation(5, 1).unwrap(), random_rotation(5, 1).unwrap());
    }

    #[test]
    fn rotation_preserves_norms_and_distances() {
        let data = make_gmm(&GmmSpec::symmetric(6, 0.3, 10), 1).unwrap();
        let r = random_rotation(6, 2).unwrap();
        let rotated = rotate_dataset(&data, &r).unwrap();
        assert_eq!(rotated.labels, data.labels);
        let dist = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
        };
        for i in 0..data.len() {
            let origin = vec![0.0; 6];
            assert!(
                (dist(&data.features[i], &origin) - dist(&rotated.features[i], &origin)).abs()
                    < 1e-10
            );
            for j in 0..i {
                let a = dist(&data.features[i], &data.features[j]);
                let b = dist(&rotated.features[i], &rotated.features[j]);
                assert!((a - b).abs() < 1e-10);
            }
        }
        let back = rotate_dataset(&rotated, &r.t().to_owned()).unwrap();
        for (a, b) in back.features.iter().zip(&data.features) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-10);
            }
        }
        let eye = Array2::eye(6);
        assert_eq!(rotate_dataset(&data, &eye).unwrap(), data);
        assert!(rotate_dataset(&data, &Array2::eye(5)).is_err());
    }

    #[test]
    fn csv_two_rows() {
        let f = write_csv("a,b,label\n1.0,2.0,cat\n3.0,5.0,dog\n");
        let imp = load_csv(f.path(), "label", &["a", "b"]).unwrap();
        assert_eq!(imp.dataset.len(), 2);
        assert_eq!(imp.dataset.n_classes, 2);
        assert_eq!(imp.dataset.labels, vec![0, 1]);
        assert_eq!(imp.classes, vec!["cat", "dog"]);
        assert_eq!(imp.dataset.features[0], vec![-1.0, -1.0]);
        assert_eq!(imp.columns[0].mean, 2.0);
    }

    #[test]
    fn csv_constant_column_standardizes_to_zero() {
        let f = write_csv("a,b,label\n7,1,x\n7,2,y\n7,3,x\n");
        let imp = load_csv(f.path(), "label", &["a", "b"]).unwrap();
        assert!(imp.dataset.features.iter().all(|x| x[0] == 0.0));
    }

    #[test]
    fn csv_malformed_cell_names_row_and_column() {
        let f = write_csv("a,b,label\n1,2,x\n3,oops,y\n");
        let err = load_csv(f.path(), "label", &["a", "b"]).unwrap_err();
        match &err {
            Error::CsvCell { row, column, .. } => {
                assert_eq!(*row, 3);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected error {other}"),
        }
        let msg = err.to_string();
        assert!(msg.contains("row 3") && msg.contains("`b`"), "{msg}");
    }

    #[test]
    fn csv_errors() {
        let f = write_csv("a,label\n1,x\n2,x\n");
        assert!(load_csv(f.path(), "label", &["a"]).is_err());
        assert!(load_csv(f.path(), "nope", &["a"]).is_err());
        assert!(load_csv(f.path(), "label", &["zzz"]).is_err());
        assert!(matches!(
            load_csv("/definitely/not/here.csv", "label", &["a"]),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let data = make_gmm(&GmmSpec::symmetric(3, 0.3, 50), 0).unwrap();
        let (tr, te) = split(&data, 0.2, 4).unwrap();
        assert_eq!((tr.len(), te.len()), (80, 20));
        assert_eq!(te.class_counts(), vec![10, 10]);
        let (tr2, te2) = split(&data, 0.2, 4).unwrap();
        assert_eq!((tr, te), (tr2, te2));
    }

    #[test]
    fn split_two_samples() {
        let data = Dataset::new("p", vec![vec![0.0], vec![1.0]], vec![0, 1], 2).unwrap();
        let (tr, te) = split(&data, 0.5, 0).unwrap();
        assert_eq!((tr.len(), te.len()), (1, 1));
        assert!(split(&data, 0.0, 0).is_err());
        assert!(split(&data, 1.0, 0).is_err());
    }

    #[test]
    fn split_partitions_samples() {
        let data = make_gmm(&GmmSpec::symmetric(2, 0.3, 17), 8).unwrap();
        let (tr, te) = split(&data, 0.3, 1).unwrap();
        let mut all: Vec<Vec<f64>> = tr.features.iter().chain(&te.features).cloned().collect();
        let mut orig = data.features.clone();
        let key = |a: &Vec<f64>, b: &Vec<f64>| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1]));
        all.sort_by(key);
        orig.sort_by(key);
        assert_eq!(all, orig);
    }
}
