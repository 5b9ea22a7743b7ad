//! Planar points, rectangular regions, seeded point processes and the
//! squared-distance kernel shared by every clusterer.

use std::io::{Read, Write};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::config("point must have at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("point coordinates must be finite"));
        }
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// Axis-aligned box with strictly positive volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Region {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::config("region corners must share a non-zero dimension"));
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if !lo.is_finite() || !hi.is_finite() || hi <= lo {
                return Err(Error::config(format!(
                    "region upper corner must exceed lower corner componentwise (got {lo} .. {hi})"
                )));
            }
        }
        Ok(Region { lower, upper })
    }

    /// `[0, width] x [0, height]`.
    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        Region::new(vec![0.0, 0.0], vec![width, height])
    }

    pub fn unit_square() -> Self {
        Region::rectangle(1.0, 1.0).expect("unit square is valid")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| hi - lo).product()
    }

    /// Squared length of the diagonal.
    pub fn diameter_sq(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| (hi - lo).powi(2)).sum()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    fn validate(&self) -> Result<()> {
        Region::new(self.lower.clone(), self.upper.clone()).map(|_| ())
    }
}

/// An ordered collection of points sharing one dimension, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn empty(dim: usize) -> Self {
        PointSet { dim, coords: Vec::new() }
    }

    /// Build from a flat row-major buffer.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("point dimension must be at least 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::config(format!(
                "flat buffer of length {} is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("point coordinates must be finite"));
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            coords.extend_from_slice(r);
        }
        PointSet::from_flat(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.iter().map(|p| Point(p.to_vec())).collect()
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: p.len() });
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    /// Shift every point by `v`.
    pub fn translated(&self, v: &[f64]) -> PointSet {
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(v).map(|(a, b)| a + b))
            .collect();
        PointSet { dim: self.dim, coords }
    }

    /// Arithmetic mean of all points.
    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for p in self.iter() {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi;
            }
        }
        let n = self.len().max(1) as f64;
        c.iter_mut().for_each(|v| *v /= n);
        c
    }

    /// True when no two points coincide exactly.
    pub fn all_distinct(&self) -> bool {
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                if self.point(i) == self.point(j) {
                    return false;
                }
            }
        }
        true
    }

    /// Write as CSV with header `idx,x,y`. Only planar sets are representable.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        if self.dim != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.dim });
        }
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["idx", "x", "y"])?;
        for (i, p) in self.iter().enumerate() {
            wtr.write_record([i.to_string(), p[0].to_string(), p[1].to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["idx", "x", "y"] {
            return Err(Error::config("point CSV must have header idx,x,y"));
        }
        let mut coords = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let idx: usize = parse_field(&rec, 0)?;
            if idx != row {
                return Err(Error::config(format!("point CSV row {row} has idx {idx}")));
            }
            coords.push(parse_field(&rec, 1)?);
            coords.push(parse_field(&rec, 2)?);
        }
        PointSet::from_flat(2, coords)
    }
}

pub(crate) fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::config(format!("malformed CSV field {i} in record {rec:?}")))
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix buffer has wrong length");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared Euclidean distances: entry `(i, l)` is `|x_i - m_l|^2`.
pub fn pairwise_sq_dist(x: &PointSet, m: &PointSet) -> Result<Matrix> {
    if x.dim() != m.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: m.dim() });
    }
    let mut out = Matrix::zeros(x.len(), m.len());
    for (i, xi) in x.iter().enumerate() {
        let row = out.row_mut(i);
        for (l, ml) in m.iter().enumerate() {
            row[l] = sq_dist(xi, ml);
        }
    }
    Ok(out)
}

/// A deterministic random stream keyed by `(seed, tag)`.
///
/// ChaCha is counter-based; the tag selects an independent stream so that
/// generators used by different operations never share output.
pub fn stream(seed: u64, tag: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(tag.as_bytes()));
    rng
}

/// A 64-bit seed derived from `(seed, tag)`, for handing to another generator.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    stream(seed, tag).next_u64()
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn uniform_in<R: Rng>(rng: &mut R, region: &Region, out: &mut Vec<f64>) {
    for (lo, hi) in region.lower.iter().zip(&region.upper) {
        out.push(rng.random_range(*lo..*hi));
    }
}

/// Binomial point process: `n` i.i.d. uniform points in `region`.
pub fn sample_bpp(region: &Region, n: usize, seed: u64) -> Result<PointSet> {
    region.validate()?;
    let mut rng = stream(seed, "geometry/bpp");
    let mut coords = Vec::with_capacity(n * region.dim());
    for _ in 0..n {
        uniform_in(&mut rng, region, &mut coords);
    }
    Ok(PointSet { dim: region.dim(), coords })
}

/// Output of the hotspot generator with its bookkeeping.
#[derive(Debug, Clone)]
pub struct ClusteredSample {
    pub points: PointSet,
    pub hotspots: PointSet,
    /// Hotspot index of each point.
    pub membership: Vec<usize>,
}

impl ClusteredSample {
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.hotspots.len()];
        for &h in &self.membership {
            c[h] += 1;
        }
        c
    }
}

/// Hotspot mixture: uniform hotspot centers, isotropic Gaussian scatter,
/// offsets redrawn until the point falls inside the region.
pub fn sample_clustered(
    region: &Region,
    n: usize,
    hotspots: usize,
    spread: f64,
    seed: u64,
) -> Result<PointSet> {
    Ok(sample_clustered_labeled(region, n, hotspots, spread, seed)?.points)
}

pub fn sample_clustered_labeled(
    region: &Region,
    n: usize,
    hotspots: usize,
    spread: f64,
    seed: u64,
) -> Result<ClusteredSample> {
    region.validate()?;
    if hotspots == 0 {
        return Err(Error::config("clustered sampler needs at least one hotspot"));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::config("hotspot spread must be positive and finite"));
    }
    let mut rng = stream(seed, "geometry/clustered");
    let d = region.dim();
    let mut centers = Vec::with_capacity(hotspots * d);
    for _ in 0..hotspots {
        uniform_in(&mut rng, region, &mut centers);
    }
    let normal = Normal::new(0.0, spread).expect("spread validated");
    let mut coords = Vec::with_capacity(n * d);
    let mut membership = Vec::with_capacity(n);
    let mut candidate = vec![0.0; d];
    for _ in 0..n {
        let h = rng.random_range(0..hotspots);
        let c = &centers[h * d..(h + 1) * d];
        loop {
            for (k, v) in candidate.iter_mut().enumerate() {
                *v = c[k] + normal.sample(&mut rng);
            }
            if region.contains(&candidate) {
                break;
            }
        }
        coords.extend_from_slice(&candidate);
        membership.push(h);
    }
    Ok(ClusteredSample {
        points: PointSet { dim: d, coords },
        hotspots: PointSet { dim: d, coords: centers },
        membership,
    })
}
