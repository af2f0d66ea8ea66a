//! Hard and soft quantization of feature maps.
//!
//! The map layout is channel-interleaved: element `(row, col, ch)` lives at
//! `(row * w + col) * c + ch`, so each spatial location is one contiguous
//! c-vector. The diamond quantizer rounds that whole vector against both
//! cosets and keeps the nearer, storing a single selection bit per location.
//! Distances for the selection are computed against the reconstructed values
//! in the input's own scale, which makes "lattice reconstruction is never
//! worse than scalar" an exact statement rather than an approximate one.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{self, LatticeKind, LatticeSpec};
use crate::math;
use crate::rng;

/// Real-valued h x w x c tensor. All entries are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    h: usize,
    w: usize,
    c: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(h: usize, w: usize, c: usize, data: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 || c == 0 {
            return Err(Error::InvalidParameter("feature map dims must be positive".into()));
        }
        if data.len() != h * w * c {
            return Err(Error::ShapeMismatch(alloc::format!(
                "expected {} elements for {}x{}x{}, got {}",
                h * w * c,
                h,
                w,
                c,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(FeatureMap { h, w, c, data })
    }

    pub fn zeros(h: usize, w: usize, c: usize) -> Result<Self> {
        Self::new(h, w, c, vec![0.0; h * w * c])
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    pub fn locations(&self) -> usize {
        self.h * self.w
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// The c-vector at flat location index `loc` (= row * w + col).
    pub fn location(&self, loc: usize) -> &[f64] {
        &self.data[loc * self.c..(loc + 1) * self.c]
    }

    pub(crate) fn from_parts_unchecked(h: usize, w: usize, c: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), h * w * c);
        FeatureMap { h, w, c, data }
    }
}

/// Quantized counterpart of a feature map: per-element integer indices plus
/// one codebook-selection bit per spatial location.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedMap {
    h: usize,
    w: usize,
    c: usize,
    indices: Vec<i32>,
    coset_flags: Vec<bool>,
    spec: LatticeSpec,
}

impl QuantizedMap {
    pub fn new(
        h: usize,
        w: usize,
        c: usize,
        indices: Vec<i32>,
        coset_flags: Vec<bool>,
        spec: LatticeSpec,
    ) -> Result<Self> {
        if indices.len() != h * w * c {
            return Err(Error::ShapeMismatch("index tensor size".into()));
        }
        if coset_flags.len() != h * w {
            return Err(Error::ShapeMismatch("coset flag count".into()));
        }
        if spec.kind() != LatticeKind::Diamond && coset_flags.iter().any(|&f| f) {
            return Err(Error::CosetFlagOnScalar);
        }
        if c % spec.dimension() != 0 {
            return Err(Error::ChannelGrouping { channels: c, dim: spec.dimension() });
        }
        Ok(QuantizedMap { h, w, c, indices, coset_flags, spec })
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    pub fn indices(&self) -> &[i32] {
        &self.indices
    }

    pub fn coset_flags(&self) -> &[bool] {
        &self.coset_flags
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }
}

/// Softness of the relaxed quantizer; zero means equal weights, large values
/// approach the hard argmin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftQuantConfig {
    pub sigma: f64,
}

impl SoftQuantConfig {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter("sigma must be finite and >= 0".into()));
        }
        Ok(SoftQuantConfig { sigma })
    }
}

#[inline]
fn round_index(v: f64) -> Result<i32> {
    let r = math::round(v);
    if r.abs() > i32::MAX as f64 {
        return Err(Error::InvalidParameter("quantization index overflows i32".into()));
    }
    Ok(r as i32)
}

fn check_stride(stride: f64) -> Result<()> {
    if !(stride > 0.0) || !stride.is_finite() {
        return Err(Error::InvalidParameter("stride must be positive and finite".into()));
    }
    Ok(())
}

/// Elementwise rounding to the integer lattice at the given stride.
pub fn quantize_scalar(y: &FeatureMap, stride: f64) -> Result<QuantizedMap> {
    check_stride(stride)?;
    let mut indices = Vec::with_capacity(y.data.len());
    for &v in &y.data {
        indices.push(round_index(v / stride)?);
    }
    QuantizedMap::new(
        y.h,
        y.w,
        y.c,
        indices,
        vec![false; y.h * y.w],
        LatticeSpec::integer_z(y.c, stride)?,
    )
}

/// Lattice quantization of each spatial location's channel vector.
///
/// For the diamond family the whole c-vector is rounded against the base and
/// half-shifted cosets and the nearer reconstruction wins; every element at
/// the location shares that one selection bit. Ties go to the base coset.
/// With an integer-lattice spec this degenerates to `quantize_scalar`, and
/// the hexagonal spec quantizes channel pairs to exact nearest points with
/// coefficients stored as indices.
pub fn quantize_lvq(y: &FeatureMap, spec: &LatticeSpec) -> Result<QuantizedMap> {
    let n = spec.dimension();
    if y.c % n != 0 {
        return Err(Error::ChannelGrouping { channels: y.c, dim: n });
    }
    let stride = spec.stride();
    let mut indices = Vec::with_capacity(y.data.len());
    let mut flags = Vec::with_capacity(y.h * y.w);
    match spec.kind() {
        LatticeKind::IntegerZ => {
            for &v in &y.data {
                indices.push(round_index(v / stride)?);
            }
            flags.resize(y.h * y.w, false);
        }
        LatticeKind::HexagonalA2 => {
            for loc in 0..y.locations() {
                let v = y.location(loc);
                for pair in v.chunks_exact(2) {
                    let (k0, k1) = lattice::nearest_a2_coeffs(pair[0] / stride, pair[1] / stride);
                    if k0.abs() > i32::MAX as i64 || k1.abs() > i32::MAX as i64 {
                        return Err(Error::InvalidParameter(
                            "quantization index overflows i32".into(),
                        ));
                    }
                    indices.push(k0 as i32);
                    indices.push(k1 as i32);
                }
                flags.push(false);
            }
        }
        LatticeKind::Diamond => {
            let mut base = vec![0i32; y.c];
            let mut shifted = vec![0i32; y.c];
            for loc in 0..y.locations() {
                let v = y.location(loc);
                let mut d_base = 0.0;
                let mut d_shift = 0.0;
                for (i, &vi) in v.iter().enumerate() {
                    let u = vi / stride;
                    let kb = round_index(u)?;
                    let ks = round_index(u - 0.5)?;
                    let rb = kb as f64 * stride;
                    let rs = (ks as f64 + 0.5) * stride;
                    d_base += (vi - rb) * (vi - rb);
                    d_shift += (vi - rs) * (vi - rs);
                    base[i] = kb;
                    shifted[i] = ks;
                }
                if d_shift < d_base {
                    indices.extend_from_slice(&shifted);
                    flags.push(true);
                } else {
                    indices.extend_from_slice(&base);
                    flags.push(false);
                }
            }
        }
    }
    QuantizedMap::new(y.h, y.w, y.c, indices, flags, *spec)
}

/// Reconstructs the lattice points named by a quantized map.
pub fn dequantize(q: &QuantizedMap) -> Result<FeatureMap> {
    let stride = q.spec.stride();
    let mut data = Vec::with_capacity(q.indices.len());
    match q.spec.kind() {
        LatticeKind::IntegerZ => {
            for &k in &q.indices {
                data.push(k as f64 * stride);
            }
        }
        LatticeKind::HexagonalA2 => {
            for pair in q.indices.chunks_exact(2) {
                let (x, y) = lattice::a2_coords(pair[0] as i64, pair[1] as i64);
                data.push(x * stride);
                data.push(y * stride);
            }
        }
        LatticeKind::Diamond => {
            for loc in 0..q.h * q.w {
                let shift = if q.coset_flags[loc] { 0.5 } else { 0.0 };
                for &k in &q.indices[loc * q.c..(loc + 1) * q.c] {
                    data.push((k as f64 + shift) * stride);
                }
            }
        }
    }
    Ok(FeatureMap::from_parts_unchecked(q.h, q.w, q.c, data))
}

/// Diamond candidates for one location vector: reconstructed base and
/// shifted roundings plus the Euclidean distances to each.
fn diamond_candidates(v: &[f64], stride: f64) -> Result<(Vec<f64>, Vec<f64>, f64, f64)> {
    let mut base = Vec::with_capacity(v.len());
    let mut shifted = Vec::with_capacity(v.len());
    let mut d_base = 0.0;
    let mut d_shift = 0.0;
    for &vi in v {
        let u = vi / stride;
        let rb = round_index(u)? as f64 * stride;
        let rs = (round_index(u - 0.5)? as f64 + 0.5) * stride;
        d_base += (vi - rb) * (vi - rb);
        d_shift += (vi - rs) * (vi - rs);
        base.push(rb);
        shifted.push(rs);
    }
    Ok((base, shifted, math::sqrt(d_base), math::sqrt(d_shift)))
}

#[inline]
fn soft_weights(sigma: f64, d_base: f64, d_shift: f64) -> (f64, f64) {
    // Softmax of (-sigma * d); shifted for stability at large sigma.
    let la = -sigma * d_base;
    let lb = -sigma * d_shift;
    let m = la.max(lb);
    let wa = math::exp(la - m);
    let wb = math::exp(lb - m);
    (wa / (wa + wb), wb / (wa + wb))
}

/// Softmax-relaxed diamond quantization: each location returns the convex
/// combination of the two coset roundings weighted by softmax of the negated
/// scaled distances. Continuous in the input away from rounding boundaries.
pub fn quantize_soft(y: &FeatureMap, spec: &LatticeSpec, cfg: &SoftQuantConfig) -> Result<FeatureMap> {
    if spec.kind() != LatticeKind::Diamond {
        return Err(Error::InvalidParameter(
            "soft relaxation is defined for the two-codebook diamond scheme".into(),
        ));
    }
    if y.c % spec.dimension() != 0 {
        return Err(Error::ChannelGrouping { channels: y.c, dim: spec.dimension() });
    }
    SoftQuantConfig::new(cfg.sigma)?;
    let stride = spec.stride();
    let mut data = Vec::with_capacity(y.data.len());
    for loc in 0..y.locations() {
        let v = y.location(loc);
        let (base, shifted, d_base, d_shift) = diamond_candidates(v, stride)?;
        let (wa, wb) = soft_weights(cfg.sigma, d_base, d_shift);
        for i in 0..v.len() {
            data.push(wa * base[i] + wb * shifted[i]);
        }
    }
    Ok(FeatureMap::from_parts_unchecked(y.h, y.w, y.c, data))
}

/// Analytic Jacobian of the soft quantizer for a single location vector,
/// treating the two coset roundings as locally constant so gradients flow
/// only through the softmax weights. Row-major c x c matrix.
pub fn soft_jacobian(v: &[f64], spec: &LatticeSpec, cfg: &SoftQuantConfig) -> Result<Vec<f64>> {
    if spec.kind() != LatticeKind::Diamond {
        return Err(Error::InvalidParameter(
            "soft relaxation is defined for the two-codebook diamond scheme".into(),
        ));
    }
    SoftQuantConfig::new(cfg.sigma)?;
    let stride = spec.stride();
    let (base, shifted, d_base, d_shift) = diamond_candidates(v, stride)?;
    let c = v.len();
    if cfg.sigma == 0.0 {
        return Ok(vec![0.0; c * c]);
    }
    if d_base == 0.0 || d_shift == 0.0 {
        return Err(Error::InvalidParameter(
            "jacobian undefined on a codebook point (zero distance)".into(),
        ));
    }
    let (wa, wb) = soft_weights(cfg.sigma, d_base, d_shift);
    let scale = -cfg.sigma * wa * wb;
    let mut jac = vec![0.0; c * c];
    for i in 0..c {
        let di = base[i] - shifted[i];
        for j in 0..c {
            let grad_diff = (v[j] - base[j]) / d_base - (v[j] - shifted[j]) / d_shift;
            jac[i * c + j] = scale * di * grad_diff;
        }
    }
    Ok(jac)
}

/// Training-time quantization proxy: adds i.i.d. uniform noise on the open
/// interval (-stride/2, stride/2). Deterministic given the seed.
pub fn noise_proxy(y: &FeatureMap, stride: f64, seed: u64) -> Result<FeatureMap> {
    check_stride(stride)?;
    let mut rng = rng::seeded(seed);
    let data = y
        .data
        .iter()
        .map(|&v| v + rng::open_centered(&mut rng, stride / 2.0))
        .collect();
    Ok(FeatureMap::from_parts_unchecked(y.h, y.w, y.c, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_core::RngCore;

    fn map1(values: &[f64]) -> FeatureMap {
        FeatureMap::new(1, 1, values.len(), values.to_vec()).unwrap()
    }

    fn random_map(rng: &mut impl RngCore, h: usize, w: usize, c: usize, scale: f64) -> FeatureMap {
        let data = (0..h * w * c)
            .map(|_| (rng::unit_f64(rng) - 0.5) * 2.0 * scale)
            .collect();
        FeatureMap::new(h, w, c, data).unwrap()
    }

    #[test]
    fn scalar_rounding_examples() {
        let q = quantize_scalar(&map1(&[0.4, -1.6]), 1.0).unwrap();
        assert_eq!(q.indices(), &[0, -2]);
        assert!(q.coset_flags().iter().all(|&f| !f));

        // Halves round away from zero.
        let q = quantize_scalar(&map1(&[0.5]), 1.0).unwrap();
        assert_eq!(q.indices(), &[1]);
        let q = quantize_scalar(&map1(&[-0.5]), 1.0).unwrap();
        assert_eq!(q.indices(), &[-1]);

        let q = quantize_scalar(&map1(&[3.0]), 0.5).unwrap();
        assert_eq!(q.indices(), &[6]);

        assert!(quantize_scalar(&map1(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn nonfinite_input_rejected_at_construction() {
        assert!(matches!(FeatureMap::new(1, 1, 1, vec![f64::NAN]), Err(Error::NonFinite)));
        assert!(matches!(FeatureMap::new(1, 1, 1, vec![f64::INFINITY]), Err(Error::NonFinite)));
    }

    #[test]
    fn lvq_selects_nearer_coset() {
        let spec = LatticeSpec::diamond(2, 1.0).unwrap();
        let q = quantize_lvq(&map1(&[0.3, 0.3]), &spec).unwrap();
        assert_eq!(q.coset_flags(), &[true]);
        let recon = dequantize(&q).unwrap();
        assert_eq!(recon.data(), &[0.5, 0.5]);
    }

    #[test]
    fn lvq_is_idempotent_on_lattice_points() {
        let spec = LatticeSpec::diamond(2, 1.0).unwrap();
        let q = quantize_lvq(&map1(&[1.5, -0.5]), &spec).unwrap();
        assert_eq!(q.coset_flags(), &[true]);
        let recon = dequantize(&q).unwrap();
        assert_eq!(recon.data(), &[1.5, -0.5]);
    }

    #[test]
    fn lvq_tie_goes_to_base_coset() {
        let spec = LatticeSpec::diamond(2, 1.0).unwrap();
        // Both squared distances are exactly 0.125.
        let q = quantize_lvq(&map1(&[0.25, 0.25]), &spec).unwrap();
        assert_eq!(q.coset_flags(), &[false]);
        assert_eq!(dequantize(&q).unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn lvq_channel_grouping_must_divide() {
        let spec = LatticeSpec::diamond(2, 1.0).unwrap();
        let y = FeatureMap::zeros(1, 1, 3).unwrap();
        assert!(matches!(
            quantize_lvq(&y, &spec),
            Err(Error::ChannelGrouping { channels: 3, dim: 2 })
        ));
    }

    #[test]
    fn lvq_integer_spec_reproduces_scalar() {
        let mut rng = rng::seeded(5);
        for _ in 0..50 {
            let y = random_map(&mut rng, 3, 4, 6, 4.0);
            let spec = LatticeSpec::integer_z(6, 0.7).unwrap();
            let a = quantize_lvq(&y, &spec).unwrap();
            let b = quantize_scalar(&y, 0.7).unwrap();
            assert_eq!(a.indices(), b.indices());
            assert_eq!(a.coset_flags(), b.coset_flags());
        }
    }

    #[test]
    fn dequantize_examples() {
        let d2 = LatticeSpec::diamond(2, 1.0).unwrap();
        let q = QuantizedMap::new(1, 1, 2, vec![0, 0], vec![true], d2).unwrap();
        assert_eq!(dequantize(&q).unwrap().data(), &[0.5, 0.5]);

        let q = QuantizedMap::new(1, 1, 2, vec![2, -1], vec![false], d2).unwrap();
        assert_eq!(dequantize(&q).unwrap().data(), &[2.0, -1.0]);

        let d2w = LatticeSpec::diamond(2, 2.0).unwrap();
        let q = QuantizedMap::new(1, 1, 2, vec![1, 1], vec![true], d2w).unwrap();
        assert_eq!(dequantize(&q).unwrap().data(), &[3.0, 3.0]);
    }

    #[test]
    fn flags_rejected_on_scalar_spec() {
        let z = LatticeSpec::integer_z(2, 1.0).unwrap();
        assert!(matches!(
            QuantizedMap::new(1, 1, 2, vec![0, 0], vec![true], z),
            Err(Error::CosetFlagOnScalar)
        ));
    }

    #[test]
    fn round_trip_is_exact() {
        let mut rng = rng::seeded(99);
        for &stride in &[1.0, 0.1, 0.3, 2.5] {
            let spec = LatticeSpec::diamond(4, stride).unwrap();
            for _ in 0..100 {
                let y = random_map(&mut rng, 2, 3, 4, 5.0 * stride);
                let q = quantize_lvq(&y, &spec).unwrap();
                let recon = dequantize(&q).unwrap();
                let q2 = quantize_lvq(&recon, &spec).unwrap();
                assert_eq!(q, q2, "stride {stride}");
                assert_eq!(dequantize(&q2).unwrap(), recon);
            }
        }
    }

    #[test]
    fn a2_round_trip_is_exact() {
        let mut rng = rng::seeded(100);
        for &stride in &[1.0, 0.3] {
            let spec = LatticeSpec::hexagonal_a2(stride).unwrap();
            for _ in 0..100 {
                let y = random_map(&mut rng, 2, 2, 4, 4.0 * stride);
                let q = quantize_lvq(&y, &spec).unwrap();
                let recon = dequantize(&q).unwrap();
                let q2 = quantize_lvq(&recon, &spec).unwrap();
                assert_eq!(q, q2);
            }
        }
    }

    #[test]
    fn lvq_never_worse_than_scalar_pointwise() {
        let mut rng = rng::seeded(17);
        let spec = LatticeSpec::diamond(4, 0.7).unwrap();
        for _ in 0..50 {
            let y = random_map(&mut rng, 3, 3, 8, 3.0);
            let lvq = dequantize(&quantize_lvq(&y, &spec).unwrap()).unwrap();
            let scalar = dequantize(&quantize_scalar(&y, 0.7).unwrap()).unwrap();
            for loc in 0..y.locations() {
                let dl = lattice::squared_distance(y.location(loc), lvq.location(loc));
                let ds = lattice::squared_distance(y.location(loc), scalar.location(loc));
                assert!(dl <= ds, "location {loc}: lvq {dl} vs scalar {ds}");
            }
        }
    }

    #[test]
    fn flag_granularity_is_per_location() {
        let mut rng = rng::seeded(21);
        for c in [2usize, 4, 8, 16] {
            let y = random_map(&mut rng, 5, 7, c, 2.0);
            let spec = LatticeSpec::diamond(2, 1.0).unwrap();
            let q = quantize_lvq(&y, &spec).unwrap();
            assert_eq!(q.coset_flags().len(), 35);
        }
    }

    #[test]
    fn soft_examples() {
        let spec = LatticeSpec::diamond(2, 1.0).unwrap();
        let y = map1(&[0.3, 0.3]);

        // sigma = 0: exact midpoint of the two candidates (0,0) and (0.5,0.5).
        let soft = quantize_soft(&y, &spec, &SoftQuantConfig::new(0.0).unwrap()).unwrap();
        assert_eq!(soft.data(), &[0.25, 0.25]);

        // Large sigma: matches the hard quantizer.
        let soft = quantize_soft(&y, &spec, &SoftQuantConfig::new(1e6).unwrap()).unwrap();
        assert!((soft.data()[0] - 0.5).abs() < 1e-6);
        assert!((soft.data()[1] - 0.5).abs() < 1e-6);

        // Equidistant input: midpoint at any sigma.
        let tie = map1(&[0.25, 0.25]);
        for &sigma in &[0.0, 1.0, 50.0] {
            let soft = quantize_soft(&tie, &spec, &SoftQuantConfig::new(sigma).unwrap()).unwrap();
            assert_eq!(soft.data(), &[0.25, 0.25], "sigma {sigma}");
        }
    }

    #[test]
    fn soft_converges_monotonically_to_hard() {
        let spec = LatticeSpec::diamond(2, 1.0).unwrap();
        let y = map1(&[0.31, 0.17]);
        let hard = dequantize(&quantize_lvq(&y, &spec).unwrap()).unwrap();
        let mut prev = f64::INFINITY;
        for &sigma in &[0.0, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0, 1e4, 1e6] {
            let soft = quantize_soft(&y, &spec, &SoftQuantConfig::new(sigma).unwrap()).unwrap();
            let gap = lattice::squared_distance(soft.data(), hard.data());
            assert!(gap <= prev + 1e-15, "sigma {sigma}: {gap} > {prev}");
            prev = gap;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn soft_requires_diamond() {
        let z = LatticeSpec::integer_z(2, 1.0).unwrap();
        let y = map1(&[0.3, 0.3]);
        assert!(quantize_soft(&y, &z, &SoftQuantConfig::new(1.0).unwrap()).is_err());
        assert!(SoftQuantConfig::new(-1.0).is_err());
        assert!(SoftQuantConfig::new(f64::NAN).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let spec = LatticeSpec::diamond(3, 1.0).unwrap();
        let cfg = SoftQuantConfig::new(5.0).unwrap();
        let v = [0.31, -0.12, 0.81];
        let jac = soft_jacobian(&v, &spec, &cfg).unwrap();
        let step = 1e-5;
        let c = v.len();
        let mut max_rel = 0.0f64;
        let mut norm_an = 0.0;
        let mut norm_diff = 0.0;
        for j in 0..c {
            let mut plus = v;
            let mut minus = v;
            plus[j] += step;
            minus[j] -= step;
            let fp = quantize_soft(&map1(&plus), &spec, &cfg).unwrap();
            let fm = quantize_soft(&map1(&minus), &spec, &cfg).unwrap();
            for i in 0..c {
                let fd = (fp.data()[i] - fm.data()[i]) / (2.0 * step);
                let an = jac[i * c + j];
                norm_an += an * an;
                norm_diff += (fd - an) * (fd - an);
            }
        }
        max_rel = max_rel.max((norm_diff / norm_an.max(1e-30)).sqrt());
        assert!(max_rel < 1e-4, "relative jacobian error {max_rel}");
    }

    #[test]
    fn jacobian_zero_at_sigma_zero() {
        let spec = LatticeSpec::diamond(2, 1.0).unwrap();
        let jac = soft_jacobian(&[0.3, 0.1], &spec, &SoftQuantConfig::new(0.0).unwrap()).unwrap();
        assert!(jac.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_proxy_support_and_mean() {
        let y = FeatureMap::zeros(10, 10, 10).unwrap();
        let noisy = noise_proxy(&y, 1.0, 3).unwrap();
        assert!(noisy.data().iter().all(|&v| v > -0.5 && v < 0.5));
        let mean: f64 = noisy.data().iter().sum::<f64>() / noisy.data().len() as f64;
        // Standard error of the mean of U(-1/2,1/2) over 1000 draws.
        let sem = (1.0f64 / 12.0 / 1000.0).sqrt();
        assert!(mean.abs() < 3.0 * sem, "mean {mean}");

        let wide = noise_proxy(&y, 2.0, 3).unwrap();
        assert!(wide.data().iter().all(|&v| v > -1.0 && v < 1.0));

        // Deterministic given the seed.
        assert_eq!(noise_proxy(&y, 1.0, 3).unwrap(), noisy);
    }
}
