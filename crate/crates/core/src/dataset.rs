//! Classification data: MNIST IDX files, synthetic Gaussian blobs and seeded
//! mini-batch iteration.
//!
//! IDX layout: a big-endian `u32` magic (`0x0000 | type | rank`), `rank`
//! big-endian `u32` dimension sizes, then the payload. Only the unsigned byte
//! type (`0x08`) is supported, which is what MNIST uses.

use std::borrow::Cow;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::RngSeed;
use crate::objectives::Batch;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
pub const MNIST_CLASSES: usize = 10;
pub const DEFAULT_BATCH_SIZE: usize = 128;

const GZIP_PREFIX: [u8; 2] = [0x1f, 0x8b];

/// Row-major matrix of features in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    feature_dim: usize,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, feature_dim: usize, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if feature_dim == 0 || num_classes == 0 {
            return Err(Error::Domain("dataset needs a nonzero feature dimension and class count".into()));
        }
        if features.len() != labels.len() * feature_dim {
            return Err(Error::DimensionMismatch { expected: labels.len() * feature_dim, found: features.len() });
        }
        if let Some(bad) = features.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain(format!("feature {bad} outside [0, 1]")));
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::LabelOutOfRange { index, label, num_classes });
        }
        Ok(Dataset { features, feature_dim, labels, num_classes })
    }

    pub fn from_parts(images: FeatureMatrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if images.rows != labels.len() {
            return Err(Error::DimensionMismatch { expected: images.rows, found: labels.len() });
        }
        Dataset::new(images.data, images.cols, labels, num_classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    /// Copies the given rows into a [`Batch`].
    pub fn batch(&self, indices: &[usize]) -> Batch {
        let mut features = Vec::with_capacity(indices.len() * self.feature_dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Batch { features, feature_dim: self.feature_dim, labels: indices.iter().map(|&i| self.labels[i]).collect() }
    }

    pub fn full_batch(&self) -> Batch {
        Batch { features: self.features.clone(), feature_dim: self.feature_dim, labels: self.labels.clone() }
    }

    /// First `n` rows (all of them if `n >= len`).
    pub fn truncated(mut self, n: usize) -> Self {
        if n < self.len() {
            self.labels.truncate(n);
            self.features.truncate(n * self.feature_dim);
        }
        self
    }

    /// IDX image and label files for this dataset. Features are quantized to
    /// `round(255 x)`; `shape` gives the per-image dimensions.
    pub fn to_idx(&self, shape: &[usize]) -> Result<(Vec<u8>, Vec<u8>)> {
        if shape.iter().product::<usize>() != self.feature_dim {
            return Err(Error::DimensionMismatch { expected: self.feature_dim, found: shape.iter().product() });
        }
        let labels: Vec<u8> = self
            .labels
            .iter()
            .map(|&l| u8::try_from(l).map_err(|_| Error::Domain(format!("label {l} does not fit in a byte"))))
            .collect::<Result<_>>()?;
        let pixels: Vec<u8> = self.features.iter().map(|x| (x * 255.0).round() as u8).collect();
        let mut dims = vec![self.len()];
        dims.extend_from_slice(shape);
        Ok((encode_idx(&dims, &pixels)?, encode_idx(&[labels.len()], &labels)?))
    }
}

/// Writes an unsigned-byte IDX container.
pub fn encode_idx(dims: &[usize], payload: &[u8]) -> Result<Vec<u8>> {
    if dims.is_empty() || dims.len() > 255 {
        return Err(Error::Domain(format!("IDX rank must be in 1..=255, got {}", dims.len())));
    }
    if dims.iter().product::<usize>() != payload.len() {
        return Err(Error::DimensionMismatch { expected: dims.iter().product(), found: payload.len() });
    }
    let mut out = Vec::with_capacity(4 + 4 * dims.len() + payload.len());
    out.extend_from_slice(&[0, 0, 0x08, dims.len() as u8]);
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| Error::Domain(format!("IDX dimension {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_be_bytes());
    }
    out.extend_from_slice(payload);
    Ok(out)
}

pub fn encode_idx_images(images: &FeatureMatrix, shape: &[usize]) -> Result<Vec<u8>> {
    if shape.iter().product::<usize>() != images.cols {
        return Err(Error::DimensionMismatch { expected: images.cols, found: shape.iter().product() });
    }
    let mut dims = vec![images.rows];
    dims.extend_from_slice(shape);
    let pixels: Vec<u8> = images.data.iter().map(|x| (x.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    encode_idx(&dims, &pixels)
}

pub fn encode_idx_labels(labels: &[u8]) -> Result<Vec<u8>> {
    encode_idx(&[labels.len()], labels)
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Parse { offset, message: "truncated header".into() })
}

/// Header check shared by both parsers; returns the dimensions and the
/// payload slice.
fn parse_idx(bytes: &[u8], magic: u32, rank: usize) -> Result<(Vec<usize>, &[u8])> {
    let found = read_u32(bytes, 0)?;
    if found != magic {
        return Err(Error::Parse {
            offset: 0,
            message: format!("expected magic {magic} ({magic:#010x}), found {found} ({found:#010x})"),
        });
    }
    let mut dims = Vec::with_capacity(rank);
    let mut total: usize = 1;
    for i in 0..rank {
        let offset = 4 + 4 * i;
        let d = read_u32(bytes, offset)? as usize;
        total = total
            .checked_mul(d)
            .ok_or_else(|| Error::Parse { offset, message: "dimension product overflows".into() })?;
        dims.push(d);
    }
    let start = 4 + 4 * rank;
    let payload = &bytes[start..];
    if payload.len() < total {
        return Err(Error::Parse {
            offset: bytes.len(),
            message: format!("truncated payload: expected {total} bytes, found {}", payload.len()),
        });
    }
    if payload.len() > total {
        return Err(Error::Parse { offset: start + total, message: "trailing bytes after payload".into() });
    }
    Ok((dims, payload))
}

/// Parses an IDX image file (magic 2051) into one row per image, pixels
/// scaled by `1/255`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<FeatureMatrix> {
    let bytes = maybe_gunzip(bytes)?;
    let (dims, payload) = parse_idx(&bytes, IDX_IMAGES_MAGIC, 3)?;
    Ok(FeatureMatrix { rows: dims[0], cols: dims[1] * dims[2], data: payload.iter().map(|&b| b as f64 / 255.0).collect() })
}

/// Parses an IDX label file (magic 2049). With `num_classes` set, every label
/// must be below it.
pub fn parse_idx_labels(bytes: &[u8], num_classes: Option<usize>) -> Result<Vec<usize>> {
    let bytes = maybe_gunzip(bytes)?;
    let (_, payload) = parse_idx(&bytes, IDX_LABELS_MAGIC, 1)?;
    let labels: Vec<usize> = payload.iter().map(|&b| b as usize).collect();
    if let Some(num_classes) = num_classes {
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::LabelOutOfRange { index, label, num_classes });
        }
    }
    Ok(labels)
}

/// Inflates gzip input, passes anything else through.
pub fn maybe_gunzip(bytes: &[u8]) -> Result<Cow<'_, [u8]>> {
    if bytes.starts_with(&GZIP_PREFIX) {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(bytes).read_to_end(&mut out)?;
        Ok(Cow::Owned(out))
    } else {
        Ok(Cow::Borrowed(bytes))
    }
}

/// Loads an MNIST image/label file pair, optionally keeping only the first
/// `limit` samples.
pub fn load_mnist(images: &Path, labels: &Path, limit: Option<usize>) -> Result<Dataset> {
    let images = parse_idx_images(&std::fs::read(images)?)?;
    let labels = parse_idx_labels(&std::fs::read(labels)?, Some(MNIST_CLASSES))?;
    let ds = Dataset::from_parts(images, labels, MNIST_CLASSES)?;
    Ok(match limit {
        Some(n) => ds.truncated(n),
        None => ds,
    })
}

/// Gaussian clusters around class centers drawn uniformly from
/// `[0.2, 0.8]^feature_dim`, clamped to `[0, 1]`. Rows cycle through the
/// classes so every prefix is close to balanced.
pub fn synthetic_blobs(
    num_classes: usize,
    samples_per_class: usize,
    feature_dim: usize,
    spread: f64,
    seed: RngSeed,
) -> Result<Dataset> {
    if num_classes == 0 || samples_per_class == 0 || feature_dim == 0 {
        return Err(Error::Config("synthetic blobs need nonzero class, sample and feature counts".into()));
    }
    if !(spread >= 0.0) || !spread.is_finite() {
        return Err(Error::Config(format!("blob spread must be finite and >= 0, got {spread}")));
    }
    let mut rng = seed.rng();
    let centers: Vec<Vec<f64>> =
        (0..num_classes).map(|_| (0..feature_dim).map(|_| rng.gen_range(0.2..0.8)).collect()).collect();
    let n = num_classes * samples_per_class;
    let mut features = Vec::with_capacity(n * feature_dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % num_classes;
        for &mu in &centers[c] {
            let z: f64 = rng.sample(StandardNormal);
            features.push((mu + spread * z).clamp(0.0, 1.0));
        }
        labels.push(c);
    }
    Dataset::new(features, feature_dim, labels, num_classes)
}

/// Endless stream of mini-batches. Each epoch visits a fresh permutation
/// drawn from `seed.derive(epoch)`; the last batch of an epoch may be short.
#[derive(Clone, Debug)]
pub struct BatchIterator<'a> {
    dataset: &'a Dataset,
    batch_size: usize,
    seed: RngSeed,
    epoch: u64,
    order: Vec<usize>,
    position: usize,
}

impl<'a> BatchIterator<'a> {
    pub fn new(dataset: &'a Dataset, batch_size: usize, seed: RngSeed) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if dataset.is_empty() {
            return Err(Error::Domain("cannot batch an empty dataset".into()));
        }
        let mut it = BatchIterator { dataset, batch_size, seed, epoch: 0, order: Vec::new(), position: 0 };
        it.reshuffle();
        Ok(it)
    }

    fn reshuffle(&mut self) {
        self.order = (0..self.dataset.len()).collect();
        self.order.shuffle(&mut self.seed.derive(self.epoch).rng());
        self.position = 0;
    }

    /// Epoch the next batch belongs to.
    pub fn epoch(&self) -> u64 {
        self.epoch + u64::from(self.position >= self.order.len())
    }

    /// Row indices of the next batch.
    pub fn next_indices(&mut self) -> Vec<usize> {
        if self.position >= self.order.len() {
            self.epoch += 1;
            self.reshuffle();
        }
        let end = (self.position + self.batch_size).min(self.order.len());
        let idx = self.order[self.position..end].to_vec();
        self.position = end;
        idx
    }
}

impl Iterator for BatchIterator<'_> {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        let idx = self.next_indices();
        Some(self.dataset.batch(&idx))
    }
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;
    use crate::objectives::{MlpObjective, MlpSpec, Objective};

    fn images_fixture() -> Vec<u8> {
        let mut b = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        b.extend_from_slice(&[0, 51, 102, 255, 255, 0, 1, 2]);
        b
    }

    #[test]
    fn hand_built_image_file() {
        let bytes = images_fixture();
        assert_eq!(bytes.len(), 24);
        let m = parse_idx_images(&bytes).unwrap();
        assert_eq!((m.rows, m.cols), (2, 4));
        assert_eq!(m.data[0], 0.0);
        assert_eq!(m.data[1], 0.2);
        assert_eq!(m.data[3], 1.0);
        assert_eq!(m.data[4], 1.0);
        assert_eq!(m.data[7], 2.0 / 255.0);
    }

    #[test]
    fn hand_built_label_file() {
        let bytes = [0, 0, 8, 1, 0, 0, 0, 4, 3, 1, 4, 1];
        assert_eq!(parse_idx_labels(&bytes, Some(10)).unwrap(), vec![3, 1, 4, 1]);
        assert!(parse_idx_labels(&[0, 0, 8, 1, 0, 0, 0, 0], Some(10)).unwrap().is_empty());
    }

    #[test]
    fn label_out_of_range() {
        let bytes = [0, 0, 8, 1, 0, 0, 0, 2, 3, 12];
        match parse_idx_labels(&bytes, Some(10)) {
            Err(Error::LabelOutOfRange { index: 1, label: 12, num_classes: 10 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(parse_idx_labels(&bytes, None).unwrap(), vec![3, 12]);
    }

    #[test]
    fn wrong_magic_names_expected_value() {
        let bytes = [0, 0, 8, 1, 0, 0, 0, 1, 7];
        let err = parse_idx_images(&bytes).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("2051"), "{text}");
        assert!(matches!(err, Error::Parse { offset: 0, .. }));
    }

    #[test]
    fn truncated_inputs_report_offsets() {
        let mut bytes = images_fixture();
        bytes.pop();
        assert!(matches!(parse_idx_images(&bytes), Err(Error::Parse { offset: 23, .. })));
        assert!(matches!(parse_idx_images(&bytes[..10]), Err(Error::Parse { offset: 8, .. })));
        assert!(matches!(parse_idx_images(&[0, 0]), Err(Error::Parse { offset: 0, .. })));
        let huge = [0, 0, 8, 3, 255, 255, 255, 255, 255, 255, 255, 255, 255, 255, 255, 255];
        assert!(parse_idx_images(&huge).is_err());
    }

    #[test]
    fn gzip_input_is_detected() {
        let raw = images_fixture();
        let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(&raw).unwrap();
        let gz = enc.finish().unwrap();
        assert_eq!(&gz[..2], &[0x1f, 0x8b]);
        assert_eq!(parse_idx_images(&gz).unwrap(), parse_idx_images(&raw).unwrap());
    }

    #[test]
    fn idx_round_trip() {
        let ds = synthetic_blobs(3, 4, 6, 0.1, RngSeed(2)).unwrap();
        let (img, lab) = ds.to_idx(&[2, 3]).unwrap();
        let back = Dataset::from_parts(parse_idx_images(&img).unwrap(), parse_idx_labels(&lab, Some(3)).unwrap(), 3)
            .unwrap();
        assert_eq!(back.labels(), ds.labels());
        for (a, b) in back.features().iter().zip(ds.features()) {
            assert_eq!(*a, (b * 255.0).round() / 255.0);
        }
        // quantized data survives a second trip exactly
        let (img2, lab2) = back.to_idx(&[2, 3]).unwrap();
        assert_eq!((img2, lab2), (img, lab));
    }

    #[test]
    fn blobs_shape_and_determinism() {
        let a = synthetic_blobs(10, 100, 784, 0.1, RngSeed(1)).unwrap();
        assert_eq!(a.len(), 1000);
        assert_eq!(a.feature_dim(), 784);
        let b = synthetic_blobs(10, 100, 784, 0.1, RngSeed(1)).unwrap();
        assert!(a.features().iter().zip(b.features()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(a.labels(), b.labels());
        assert!(a.features().iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn point_clusters_are_linearly_separable() {
        // with zero spread every sample sits on its center; a linear
        // classifier w = c1 - c0 thresholded at the midpoint separates them
        let ds = synthetic_blobs(2, 20, 5, 0.0, RngSeed(9)).unwrap();
        let c0 = ds.row(0).to_vec();
        let c1 = ds.row(1).to_vec();
        let w: Vec<f64> = c1.iter().zip(&c0).map(|(a, b)| a - b).collect();
        let mid: Vec<f64> = c1.iter().zip(&c0).map(|(a, b)| 0.5 * (a + b)).collect();
        let spec = MlpSpec::new(vec![5, 2]).unwrap();
        // logits: class 1 gets w.(x - mid), class 0 gets 0
        let bias = -w.iter().zip(&mid).map(|(a, b)| a * b).sum::<f64>();
        let mut theta = vec![0.0; 5];
        theta.extend(&w);
        theta.extend([0.0, bias]);
        let batch = ds.full_batch();
        let f = MlpObjective::new(&spec, &batch).unwrap();
        assert_eq!(f.dim(), theta.len());
        assert_eq!(f.accuracy(&theta), 1.0);
    }

    #[test]
    fn epoch_covers_every_index_once() {
        let ds = synthetic_blobs(3, 7, 2, 0.1, RngSeed(0)).unwrap();
        let mut it = BatchIterator::new(&ds, 4, RngSeed(5)).unwrap();
        for epoch in 0..3 {
            let mut seen = Vec::new();
            let mut sizes = Vec::new();
            while seen.len() < ds.len() {
                assert_eq!(it.epoch(), epoch);
                let idx = it.next_indices();
                sizes.push(idx.len());
                seen.extend(idx);
            }
            assert_eq!(sizes, vec![4, 4, 4, 4, 4, 1]);
            seen.sort_unstable();
            assert_eq!(seen, (0..ds.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn batch_stream_is_seeded() {
        let ds = synthetic_blobs(2, 10, 3, 0.1, RngSeed(0)).unwrap();
        let a: Vec<Batch> = BatchIterator::new(&ds, 3, RngSeed(1)).unwrap().take(12).collect();
        let b: Vec<Batch> = BatchIterator::new(&ds, 3, RngSeed(1)).unwrap().take(12).collect();
        let c: Vec<Batch> = BatchIterator::new(&ds, 3, RngSeed(2)).unwrap().take(12).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![0.5, 1.5], 2, vec![0], 2).is_err());
        assert!(Dataset::new(vec![0.5, 0.5], 2, vec![2], 2).is_err());
        assert!(Dataset::new(vec![0.5], 2, vec![0], 2).is_err());
        assert!(synthetic_blobs(0, 1, 1, 0.1, RngSeed(0)).is_err());
    }
}
