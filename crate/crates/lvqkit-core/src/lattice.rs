//! Lattice geometry: generator matrices, exact nearest-point solvers, a
//! brute-force oracle, and Monte Carlo estimation of the normalized second
//! moment of Voronoi cells.
//!
//! Three families are supported. `IntegerZ` is the scaled integer lattice.
//! `HexagonalA2` is the two-dimensional hexagonal lattice. `Diamond` is the
//! union of the integer lattice and its copy shifted by half the stride in
//! every dimension; points carry a one-bit coset flag telling which copy they
//! came from. The diamond family is defined operationally by that two-coset
//! union (the quantizer, sideband, and second-moment estimator all work on
//! it); `generator_matrix` returns the bidiagonal single-lattice matrix for
//! reference, which generates the same point set only in two dimensions.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::rng;

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Hexagonal basis rows at unit stride.
const A2_BASIS: [[f64; 2]; 2] = [[1.0, 0.0], [0.5, SQRT3 / 2.0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    IntegerZ,
    HexagonalA2,
    Diamond,
}

impl LatticeKind {
    pub fn name(&self) -> &'static str {
        match self {
            LatticeKind::IntegerZ => "z",
            LatticeKind::HexagonalA2 => "a2",
            LatticeKind::Diamond => "diamond",
        }
    }
}

/// A lattice family, its dimension, and the global stride scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    kind: LatticeKind,
    dimension: usize,
    stride: f64,
}

impl LatticeSpec {
    pub fn new(kind: LatticeKind, dimension: usize, stride: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("lattice dimension must be >= 1".into()));
        }
        if kind == LatticeKind::HexagonalA2 && dimension != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: dimension });
        }
        if !(stride > 0.0) || !stride.is_finite() {
            return Err(Error::InvalidParameter("stride must be positive and finite".into()));
        }
        Ok(LatticeSpec { kind, dimension, stride })
    }

    pub fn integer_z(dimension: usize, stride: f64) -> Result<Self> {
        Self::new(LatticeKind::IntegerZ, dimension, stride)
    }

    pub fn hexagonal_a2(stride: f64) -> Result<Self> {
        Self::new(LatticeKind::HexagonalA2, 2, stride)
    }

    pub fn diamond(dimension: usize, stride: f64) -> Result<Self> {
        Self::new(LatticeKind::Diamond, dimension, stride)
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn stride(&self) -> f64 {
        self.stride
    }

    pub fn with_stride(&self, stride: f64) -> Result<Self> {
        Self::new(self.kind, self.dimension, stride)
    }

    /// Volume of one Voronoi cell. For the diamond union this is half the
    /// integer-lattice cell, since the shifted coset doubles point density.
    pub fn cell_volume(&self) -> f64 {
        let cube = math::powf(self.stride, self.dimension as f64);
        match self.kind {
            LatticeKind::IntegerZ => cube,
            LatticeKind::HexagonalA2 => cube * (SQRT3 / 2.0),
            LatticeKind::Diamond => cube / 2.0,
        }
    }
}

/// A concrete lattice point, with the coset it belongs to. The flag is
/// meaningful only for the diamond family; it is false elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub coords: Vec<f64>,
    pub coset_flag: bool,
}

/// Monte Carlo estimate of the normalized second moment G.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMomentEstimate {
    pub g_value: f64,
    pub std_error: f64,
    pub sample_count: u64,
}

/// Returns the stride-scaled generator matrix as rows of basis vectors.
pub fn generator_matrix(spec: &LatticeSpec) -> Vec<Vec<f64>> {
    let n = spec.dimension();
    let s = spec.stride();
    let mut rows = vec![vec![0.0; n]; n];
    match spec.kind() {
        LatticeKind::IntegerZ => {
            for (i, row) in rows.iter_mut().enumerate() {
                row[i] = s;
            }
        }
        LatticeKind::HexagonalA2 => {
            for (i, row) in rows.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = A2_BASIS[i][j] * s;
                }
            }
        }
        LatticeKind::Diamond => {
            // First row is a unit step; each later row i steps half forward in
            // coordinate i-1 and half back in coordinate i.
            rows[0][0] = s;
            for i in 1..n {
                rows[i][i - 1] = 0.5 * s;
                rows[i][i] = -0.5 * s;
            }
        }
    }
    rows
}

#[inline]
fn check_dim(spec: &LatticeSpec, z: &[f64]) -> Result<()> {
    if z.len() != spec.dimension() {
        return Err(Error::DimensionMismatch { expected: spec.dimension(), got: z.len() });
    }
    Ok(())
}

/// Best coefficient pair for the unit-stride hexagonal lattice: Babai
/// rounding plus a 3x3 neighborhood search, which is exact for this basis.
pub(crate) fn nearest_a2_coeffs(u0: f64, u1: f64) -> (i64, i64) {
    // Coefficients from the inverse basis: c = z * U^-1.
    let c0 = u0 - u1 / SQRT3;
    let c1 = u1 * 2.0 / SQRT3;
    let r0 = math::round(c0) as i64;
    let r1 = math::round(c1) as i64;
    let mut best = (i64::MAX, i64::MAX);
    let mut best_d2 = f64::INFINITY;
    for d0 in -1..=1i64 {
        for d1 in -1..=1i64 {
            let k0 = r0 + d0;
            let k1 = r1 + d1;
            let x = k0 as f64 + 0.5 * k1 as f64;
            let y = k1 as f64 * (SQRT3 / 2.0);
            let d2 = (u0 - x) * (u0 - x) + (u1 - y) * (u1 - y);
            if d2 < best_d2 {
                best_d2 = d2;
                best = (k0, k1);
            }
        }
    }
    best
}

#[inline]
pub(crate) fn a2_coords(k0: i64, k1: i64) -> (f64, f64) {
    (k0 as f64 + 0.5 * k1 as f64, k1 as f64 * (SQRT3 / 2.0))
}

/// Returns the lattice point whose Voronoi cell contains `z`.
///
/// The diamond family is decomposed into two scalar roundings, one per coset,
/// followed by a nearest-of-two selection; exact ties go to the base coset so
/// encoder and decoder can never disagree.
pub fn nearest_point(spec: &LatticeSpec, z: &[f64]) -> Result<LatticePoint> {
    check_dim(spec, z)?;
    let s = spec.stride();
    let n = spec.dimension();
    match spec.kind() {
        LatticeKind::IntegerZ => {
            let coords = z.iter().map(|&v| math::round(v / s) * s).collect();
            Ok(LatticePoint { coords, coset_flag: false })
        }
        LatticeKind::HexagonalA2 => {
            let (k0, k1) = nearest_a2_coeffs(z[0] / s, z[1] / s);
            let (x, y) = a2_coords(k0, k1);
            Ok(LatticePoint { coords: vec![x * s, y * s], coset_flag: false })
        }
        LatticeKind::Diamond => {
            let mut base = Vec::with_capacity(n);
            let mut shifted = Vec::with_capacity(n);
            let mut d_base = 0.0;
            let mut d_shift = 0.0;
            for &v in z {
                let u = v / s;
                let b = math::round(u);
                let h = math::round(u - 0.5) + 0.5;
                d_base += (u - b) * (u - b);
                d_shift += (u - h) * (u - h);
                base.push(b * s);
                shifted.push(h * s);
            }
            if d_shift < d_base {
                Ok(LatticePoint { coords: shifted, coset_flag: true })
            } else {
                Ok(LatticePoint { coords: base, coset_flag: false })
            }
        }
    }
}

fn box_search(
    candidates: &[Vec<(f64, i64)>],
    suffix_min: &[f64],
    dim: usize,
    partial: f64,
    current: &mut [i64],
    best_d2: &mut f64,
    best: &mut [i64],
) {
    if dim == candidates.len() {
        if partial < *best_d2 {
            *best_d2 = partial;
            best.copy_from_slice(current);
        }
        return;
    }
    for &(contrib, k) in &candidates[dim] {
        // Candidates are sorted, so once one fails the bound the rest do.
        if partial + contrib + suffix_min[dim + 1] >= *best_d2 {
            break;
        }
        current[dim] = k;
        box_search(candidates, suffix_min, dim + 1, partial + contrib, current, best_d2, best);
    }
}

/// Exhaustive search over all coefficient vectors within `radius` of the
/// rounded coefficients, exact for any input within `radius - 1` cells of the
/// lattice. Serves as the independent oracle for `nearest_point`.
pub fn nearest_point_bruteforce(
    spec: &LatticeSpec,
    z: &[f64],
    radius: u32,
) -> Result<LatticePoint> {
    check_dim(spec, z)?;
    if radius < 2 {
        return Err(Error::InvalidParameter("brute-force radius must be >= 2".into()));
    }
    let n = spec.dimension();
    let bits = n as f64 * math::log2(2.0 * radius as f64 + 1.0);
    if bits > 40.0 {
        return Err(Error::SearchSpaceTooLarge { dims: n, radius });
    }
    let s = spec.stride();
    let u: Vec<f64> = z.iter().map(|&v| v / s).collect();
    match spec.kind() {
        LatticeKind::IntegerZ => {
            let (d2, coords) = enumerate_shifted_box(&u, radius, 0.0);
            let _ = d2;
            Ok(LatticePoint { coords: coords.iter().map(|&v| v * s).collect(), coset_flag: false })
        }
        LatticeKind::Diamond => {
            let (d_base, base) = enumerate_shifted_box(&u, radius, 0.0);
            let (d_shift, shifted) = enumerate_shifted_box(&u, radius, 0.5);
            if d_shift < d_base {
                Ok(LatticePoint {
                    coords: shifted.iter().map(|&v| v * s).collect(),
                    coset_flag: true,
                })
            } else {
                Ok(LatticePoint { coords: base.iter().map(|&v| v * s).collect(), coset_flag: false })
            }
        }
        LatticeKind::HexagonalA2 => {
            let c0 = u[0] - u[1] / SQRT3;
            let c1 = u[1] * 2.0 / SQRT3;
            let r0 = math::round(c0) as i64;
            let r1 = math::round(c1) as i64;
            let r = radius as i64;
            let mut best_d2 = f64::INFINITY;
            let mut best = (0.0, 0.0);
            for k0 in (r0 - r)..=(r0 + r) {
                for k1 in (r1 - r)..=(r1 + r) {
                    let (x, y) = a2_coords(k0, k1);
                    let d2 = (u[0] - x) * (u[0] - x) + (u[1] - y) * (u[1] - y);
                    if d2 < best_d2 {
                        best_d2 = d2;
                        best = (x, y);
                    }
                }
            }
            Ok(LatticePoint { coords: vec![best.0 * s, best.1 * s], coset_flag: false })
        }
    }
}

/// Exact minimum over the box of integer vectors (plus a per-coordinate
/// shift) around the rounded center. Candidates are visited nearest-first per
/// dimension with partial-sum pruning, so the search stays exhaustive in the
/// sense that no candidate that could beat the incumbent is skipped.
fn enumerate_shifted_box(u: &[f64], radius: u32, shift: f64) -> (f64, Vec<f64>) {
    let n = u.len();
    let r = radius as i64;
    let mut candidates = Vec::with_capacity(n);
    for &ui in u {
        let center = math::round(ui - shift) as i64;
        let mut dim_cands: Vec<(f64, i64)> = ((center - r)..=(center + r))
            .map(|k| {
                let coord = k as f64 + shift;
                ((ui - coord) * (ui - coord), k)
            })
            .collect();
        dim_cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        candidates.push(dim_cands);
    }
    let mut suffix_min = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix_min[i] = suffix_min[i + 1] + candidates[i][0].0;
    }
    let mut current = vec![0i64; n];
    let mut best = vec![0i64; n];
    let mut best_d2 = f64::INFINITY;
    box_search(&candidates, &suffix_min, 0, 0.0, &mut current, &mut best_d2, &mut best);
    let coords = best.iter().map(|&k| k as f64 + shift).collect();
    (best_d2, coords)
}

/// Streaming mean/variance accumulator (Welford). Chunks produced with
/// deterministic sub-seeds can be merged in a fixed order to parallelize the
/// Monte Carlo estimate without changing its value.
#[derive(Debug, Clone, Copy, Default)]
pub struct MomentAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(a: Self, b: Self) -> Self {
        if a.count == 0 {
            return b;
        }
        if b.count == 0 {
            return a;
        }
        let count = a.count + b.count;
        let delta = b.mean - a.mean;
        let mean = a.mean + delta * (b.count as f64 / count as f64);
        let m2 = a.m2 + b.m2 + delta * delta * (a.count as f64 * b.count as f64 / count as f64);
        MomentAccumulator { count, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count > 0 {
            math::sqrt(self.variance() / self.count as f64)
        } else {
            0.0
        }
    }
}

/// One worker's share of the second-moment estimate: `samples` points drawn
/// from the seeded stream, each contributing its normalized squared
/// quantization error.
pub fn second_moment_chunk(
    spec: &LatticeSpec,
    samples: u64,
    seed: u64,
) -> Result<MomentAccumulator> {
    let n = spec.dimension();
    let s = spec.stride();
    let volume = spec.cell_volume();
    let norm = 1.0 / (n as f64 * math::powf(volume, 2.0 / n as f64));
    let mut rng = rng::seeded(seed);
    let mut acc = MomentAccumulator::new();
    let mut z = vec![0.0; n];
    for _ in 0..samples {
        // Coefficients uniform in [0,1)^n mapped through the basis cover an
        // integer number of Voronoi cells exactly, so the estimate is
        // unbiased with no boundary effects.
        match spec.kind() {
            LatticeKind::IntegerZ | LatticeKind::Diamond => {
                for zi in z.iter_mut() {
                    *zi = rng::unit_f64(&mut rng) * s;
                }
            }
            LatticeKind::HexagonalA2 => {
                let c0 = rng::unit_f64(&mut rng);
                let c1 = rng::unit_f64(&mut rng);
                z[0] = (c0 * A2_BASIS[0][0] + c1 * A2_BASIS[1][0]) * s;
                z[1] = (c0 * A2_BASIS[0][1] + c1 * A2_BASIS[1][1]) * s;
            }
        }
        let q = nearest_point(spec, &z)?;
        let mut e2 = 0.0;
        for (zi, qi) in z.iter().zip(q.coords.iter()) {
            e2 += (zi - qi) * (zi - qi);
        }
        acc.push(e2 * norm);
    }
    Ok(acc)
}

/// Monte Carlo estimate of the normalized second moment G of the lattice's
/// Voronoi cell. Deterministic given the seed.
pub fn estimate_second_moment(
    spec: &LatticeSpec,
    samples: u64,
    seed: u64,
) -> Result<SecondMomentEstimate> {
    if samples < 10_000 {
        return Err(Error::InvalidParameter("second-moment estimate needs >= 10^4 samples".into()));
    }
    let acc = second_moment_chunk(spec, samples, seed)?;
    Ok(SecondMomentEstimate {
        g_value: acc.mean(),
        std_error: acc.std_error(),
        sample_count: acc.count(),
    })
}

/// Deterministic sub-seed for worker `index` under a master seed.
pub fn derive_subseed(seed: u64, index: u64) -> u64 {
    // SplitMix64 step keeps sub-streams well separated.
    let mut x = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Squared Euclidean distance between coordinate slices.
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut d2 = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        d2 += (x - y) * (x - y);
    }
    d2
}
