//! A-law companding and the spatially adaptive parameter field.
//!
//! Each spatial location carries two parameters: a normalization scale that
//! maps its channel values into the unit domain of the A-law curve, and the
//! A-law knee parameter picked from a fixed candidate set. The deterministic
//! `estimate_field` stands in for a learned predictor behind the same
//! interface: the rest of the pipeline only sees a `CompandingField`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::quant::FeatureMap;

/// Candidate A-law knee parameters for the field estimator. The telephony
/// value 87.6 anchors the top of the set.
pub const A_CANDIDATES: [f64; 7] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 87.6];

/// Floor applied to normalization scales so constant regions stay invertible.
pub const NORM_SCALE_FLOOR: f64 = 1e-6;

/// Per-location companding parameters for an h x w latent grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CompandingField {
    h: usize,
    w: usize,
    a_values: Vec<f64>,
    norm_scale: Vec<f64>,
}

impl CompandingField {
    pub fn new(h: usize, w: usize, a_values: Vec<f64>, norm_scale: Vec<f64>) -> Result<Self> {
        if a_values.len() != h * w || norm_scale.len() != h * w {
            return Err(Error::ShapeMismatch("companding field size".into()));
        }
        if a_values.iter().any(|&a| !(a >= 1.0) || !a.is_finite()) {
            return Err(Error::InvalidParameter("A-law parameters must be finite and >= 1".into()));
        }
        if norm_scale.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter(
                "normalization scales must be finite and positive".into(),
            ));
        }
        Ok(CompandingField { h, w, a_values, norm_scale })
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a_values
    }

    pub fn norm_scale(&self) -> &[f64] {
        &self.norm_scale
    }
}

fn check_a(a: f64) -> Result<()> {
    if !(a >= 1.0) || !a.is_finite() {
        return Err(Error::InvalidParameter("A-law parameter must be finite and >= 1".into()));
    }
    Ok(())
}

/// A-law compression of `x` in [-1, 1]: linear below the knee at 1/A,
/// logarithmic above it. Odd, strictly increasing, and C1 at the knee.
pub fn alaw_forward(x: f64, a: f64) -> Result<f64> {
    check_a(a)?;
    let mag = x.abs();
    if mag > 1.0 {
        return Err(Error::Domain(alloc::format!("A-law input {x} outside [-1, 1]")));
    }
    let denom = 1.0 + math::ln(a);
    let out = if mag < 1.0 / a {
        a * mag / denom
    } else {
        (1.0 + math::ln(a * mag)) / denom
    };
    Ok(if x < 0.0 { -out } else { out })
}

/// Inverse of `alaw_forward` on [-1, 1].
pub fn alaw_inverse(y: f64, a: f64) -> Result<f64> {
    check_a(a)?;
    let mag = y.abs();
    if mag > 1.0 {
        return Err(Error::Domain(alloc::format!("A-law code {y} outside [-1, 1]")));
    }
    let t = 1.0 + math::ln(a);
    let out = if mag < 1.0 / t {
        mag * t / a
    } else {
        math::exp(mag * t - 1.0) / a
    };
    Ok(if y < 0.0 { -out } else { out })
}

/// Deterministic stand-in for a learned parameter predictor.
///
/// The normalization scale at each location is the largest channel magnitude
/// over a window x window spatial neighborhood (clamped at the map edge and
/// floored for constant regions). The knee parameter is the candidate that
/// minimizes squared reconstruction error of the location's normalized values
/// under scalar rounding at the given stride; ties keep the smallest A.
pub fn estimate_field(y: &FeatureMap, window: usize, stride: f64) -> Result<CompandingField> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidParameter("window must be odd and >= 1".into()));
    }
    if !(stride > 0.0) || !stride.is_finite() {
        return Err(Error::InvalidParameter("stride must be positive and finite".into()));
    }
    let (h, w) = (y.h(), y.w());
    let half = window / 2;
    let mut a_values = Vec::with_capacity(h * w);
    let mut norm_scale = Vec::with_capacity(h * w);
    let mut window_values: Vec<f64> = Vec::new();
    for row in 0..h {
        for col in 0..w {
            window_values.clear();
            let r0 = row.saturating_sub(half);
            let r1 = (row + half).min(h - 1);
            let c0 = col.saturating_sub(half);
            let c1 = (col + half).min(w - 1);
            let mut peak = 0.0f64;
            for rr in r0..=r1 {
                for cc in c0..=c1 {
                    let v = y.location(rr * w + cc);
                    for &x in v {
                        peak = peak.max(x.abs());
                        window_values.push(x);
                    }
                }
            }
            let scale = peak.max(NORM_SCALE_FLOOR);
            let mut best_a = A_CANDIDATES[0];
            let mut best_err = f64::INFINITY;
            for &a in &A_CANDIDATES {
                let mut err = 0.0;
                for &x in &window_values {
                    let unit = (x / scale).clamp(-1.0, 1.0);
                    let companded = alaw_forward(unit, a)?;
                    let rounded = math::round(companded / stride) * stride;
                    let recon = alaw_inverse(rounded.clamp(-1.0, 1.0), a)?;
                    err += (unit - recon) * (unit - recon);
                }
                if err < best_err {
                    best_err = err;
                    best_a = a;
                }
            }
            a_values.push(best_a);
            norm_scale.push(scale);
        }
    }
    CompandingField::new(h, w, a_values, norm_scale)
}

fn check_shapes(y: &FeatureMap, field: &CompandingField) -> Result<()> {
    if y.h() != field.h || y.w() != field.w {
        return Err(Error::ShapeMismatch(alloc::format!(
            "map is {}x{}, field is {}x{}",
            y.h(),
            y.w(),
            field.h,
            field.w
        )));
    }
    Ok(())
}

/// Applies each location's companding curve to all of its channel values.
/// Inputs beyond the normalization scale are clamped into the unit domain.
pub fn compand_map(y: &FeatureMap, field: &CompandingField) -> Result<FeatureMap> {
    check_shapes(y, field)?;
    let mut data = Vec::with_capacity(y.data().len());
    for loc in 0..y.locations() {
        let a = field.a_values[loc];
        let scale = field.norm_scale[loc];
        for &v in y.location(loc) {
            let unit = (v / scale).clamp(-1.0, 1.0);
            data.push(alaw_forward(unit, a)?);
        }
    }
    FeatureMap::new(y.h(), y.w(), y.channels(), data)
}

/// Counts values a companding pass would clamp, for saturation reporting.
pub fn saturation_count(y: &FeatureMap, field: &CompandingField) -> Result<u64> {
    check_shapes(y, field)?;
    let mut clamped = 0;
    for loc in 0..y.locations() {
        let scale = field.norm_scale[loc];
        for &v in y.location(loc) {
            if v.abs() > scale {
                clamped += 1;
            }
        }
    }
    Ok(clamped)
}

/// Inverse companding: mirrors `compand_map`, clamping quantized codes back
/// into the unit domain before expanding and rescaling.
pub fn inverse_compand_map(y: &FeatureMap, field: &CompandingField) -> Result<FeatureMap> {
    check_shapes(y, field)?;
    let mut data = Vec::with_capacity(y.data().len());
    for loc in 0..y.locations() {
        let a = field.a_values[loc];
        let scale = field.norm_scale[loc];
        for &v in y.location(loc) {
            data.push(alaw_inverse(v.clamp(-1.0, 1.0), a)? * scale);
        }
    }
    FeatureMap::new(y.h(), y.w(), y.channels(), data)
}
