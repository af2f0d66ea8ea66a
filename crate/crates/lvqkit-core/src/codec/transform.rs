//! Fixed analysis/synthesis transforms and spatial grouping of feature maps.
//!
//! Pixels are centered to (p - 128) / 128 so features live in [-1, 1]. The
//! block transform is the orthonormal 8x8 DCT applied per channel plane; one
//! block becomes one latent location with 64 coefficients per image channel,
//! laid out frequency-major within each channel's slice.

use alloc::vec;
use alloc::vec::Vec;

use super::image::ImageBuffer;
use crate::error::{Error, Result};
use crate::math;
use crate::quant::FeatureMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Identity,
    BlockDct8,
}

impl TransformKind {
    pub fn name(&self) -> &'static str {
        match self {
            TransformKind::Identity => "identity",
            TransformKind::BlockDct8 => "dct8",
        }
    }
}

/// Synthesized image together with the number of samples that had to be
/// clipped into the 8-bit range.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub image: ImageBuffer,
    pub clipped: u64,
}

#[inline]
fn center(p: u8) -> f64 {
    (p as f64 - 128.0) / 128.0
}

/// Latent dimensions before spatial grouping.
pub(crate) fn latent_dims(
    transform: TransformKind,
    h: usize,
    w: usize,
    channels: usize,
) -> Result<(usize, usize, usize)> {
    match transform {
        TransformKind::Identity => Ok((h, w, channels)),
        TransformKind::BlockDct8 => {
            if h % 8 != 0 || w % 8 != 0 {
                return Err(Error::InvalidParameter(alloc::format!(
                    "image dims {h}x{w} must be divisible by 8 for the block transform"
                )));
            }
            Ok((h / 8, w / 8, 64 * channels))
        }
    }
}

fn dct_basis() -> [[f64; 8]; 8] {
    let mut m = [[0.0; 8]; 8];
    let pi = core::f64::consts::PI;
    for (k, row) in m.iter_mut().enumerate() {
        let scale = if k == 0 { math::sqrt(1.0 / 8.0) } else { 0.5 };
        for (i, v) in row.iter_mut().enumerate() {
            *v = scale * math::cos(pi * (2 * i + 1) as f64 * k as f64 / 16.0);
        }
    }
    m
}

/// Maps an image to its feature representation.
pub fn analyze(img: &ImageBuffer, transform: TransformKind) -> Result<FeatureMap> {
    let (h, w, c) = latent_dims(transform, img.h(), img.w(), img.channels())?;
    match transform {
        TransformKind::Identity => {
            let data = img.pixels().iter().map(|&p| center(p)).collect();
            FeatureMap::new(h, w, c, data)
        }
        TransformKind::BlockDct8 => {
            let basis = dct_basis();
            let channels = img.channels();
            let mut data = vec![0.0; h * w * c];
            let mut block = [[0.0f64; 8]; 8];
            let mut tmp = [[0.0f64; 8]; 8];
            for by in 0..h {
                for bx in 0..w {
                    for ch in 0..channels {
                        for (r, row) in block.iter_mut().enumerate() {
                            for (cc, v) in row.iter_mut().enumerate() {
                                *v = center(img.get(by * 8 + r, bx * 8 + cc, ch));
                            }
                        }
                        // Coefficients = C * block * C^T.
                        for u in 0..8 {
                            for j in 0..8 {
                                let mut acc = 0.0;
                                for i in 0..8 {
                                    acc += basis[u][i] * block[i][j];
                                }
                                tmp[u][j] = acc;
                            }
                        }
                        let base = (by * w + bx) * c + ch * 64;
                        for u in 0..8 {
                            for v in 0..8 {
                                let mut acc = 0.0;
                                for j in 0..8 {
                                    acc += tmp[u][j] * basis[v][j];
                                }
                                data[base + u * 8 + v] = acc;
                            }
                        }
                    }
                }
            }
            FeatureMap::new(h, w, c, data)
        }
    }
}

/// Inverse of `analyze` up to clipping into [0, 255].
pub fn synthesize(y: &FeatureMap, transform: TransformKind) -> Result<Synthesis> {
    let mut clipped = 0u64;
    match transform {
        TransformKind::Identity => {
            let mut pixels = Vec::with_capacity(y.data().len());
            for &v in y.data() {
                let p = math::round(v * 128.0 + 128.0);
                if !(0.0..=255.0).contains(&p) {
                    clipped += 1;
                }
                pixels.push(p.clamp(0.0, 255.0) as u8);
            }
            let image = ImageBuffer::new(y.h(), y.w(), y.channels(), pixels)?;
            Ok(Synthesis { image, clipped })
        }
        TransformKind::BlockDct8 => {
            if y.channels() % 64 != 0 {
                return Err(Error::ShapeMismatch(
                    "block-transform maps need 64 coefficients per image channel".into(),
                ));
            }
            let channels = y.channels() / 64;
            let (height, width) = (y.h() * 8, y.w() * 8);
            let basis = dct_basis();
            let mut pixels = vec![0u8; height * width * channels];
            let mut tmp = [[0.0f64; 8]; 8];
            for by in 0..y.h() {
                for bx in 0..y.w() {
                    let loc = y.location(by * y.w() + bx);
                    for ch in 0..channels {
                        let coeffs = &loc[ch * 64..(ch + 1) * 64];
                        // Samples = C^T * coeffs * C.
                        for i in 0..8 {
                            for v in 0..8 {
                                let mut acc = 0.0;
                                for u in 0..8 {
                                    acc += basis[u][i] * coeffs[u * 8 + v];
                                }
                                tmp[i][v] = acc;
                            }
                        }
                        for i in 0..8 {
                            for j in 0..8 {
                                let mut acc = 0.0;
                                for v in 0..8 {
                                    acc += tmp[i][v] * basis[v][j];
                                }
                                let p = math::round(acc * 128.0 + 128.0);
                                if !(0.0..=255.0).contains(&p) {
                                    clipped += 1;
                                }
                                pixels[((by * 8 + i) * width + bx * 8 + j) * channels + ch] =
                                    p.clamp(0.0, 255.0) as u8;
                            }
                        }
                    }
                }
            }
            let image = ImageBuffer::new(height, width, channels, pixels)?;
            Ok(Synthesis { image, clipped })
        }
    }
}

/// Folds g x g spatial neighborhoods into single locations with g^2 times the
/// channels, so flags and companding parameters can be shared across a wider
/// footprint. `ungroup_spatial` is its exact inverse.
pub fn group_spatial(y: &FeatureMap, g: usize) -> Result<FeatureMap> {
    if g == 0 {
        return Err(Error::InvalidParameter("grouping factor must be >= 1".into()));
    }
    if g == 1 {
        return Ok(y.clone());
    }
    if y.h() % g != 0 || y.w() % g != 0 {
        return Err(Error::InvalidParameter(alloc::format!(
            "latent dims {}x{} not divisible by grouping factor {g}",
            y.h(),
            y.w()
        )));
    }
    let (h, w, c) = (y.h() / g, y.w() / g, y.channels() * g * g);
    let c0 = y.channels();
    let mut data = vec![0.0; h * w * c];
    for gy in 0..h {
        for gx in 0..w {
            let base = (gy * w + gx) * c;
            for dy in 0..g {
                for dx in 0..g {
                    let src = y.location((gy * g + dy) * y.w() + gx * g + dx);
                    let offset = base + (dy * g + dx) * c0;
                    data[offset..offset + c0].copy_from_slice(src);
                }
            }
        }
    }
    FeatureMap::new(h, w, c, data)
}

pub fn ungroup_spatial(y: &FeatureMap, g: usize, c0: usize) -> Result<FeatureMap> {
    if g == 0 {
        return Err(Error::InvalidParameter("grouping factor must be >= 1".into()));
    }
    if g == 1 {
        return Ok(y.clone());
    }
    if y.channels() != c0 * g * g {
        return Err(Error::ShapeMismatch(alloc::format!(
            "grouped map has {} channels, expected {} * {g}^2",
            y.channels(),
            c0
        )));
    }
    let (h, w) = (y.h() * g, y.w() * g);
    let mut data = vec![0.0; h * w * c0];
    for gy in 0..y.h() {
        for gx in 0..y.w() {
            let loc = y.location(gy * y.w() + gx);
            for dy in 0..g {
                for dx in 0..g {
                    let dst = ((gy * g + dy) * w + gx * g + dx) * c0;
                    let src = (dy * g + dx) * c0;
                    data[dst..dst + c0].copy_from_slice(&loc[src..src + c0]);
                }
            }
        }
    }
    FeatureMap::new(h, w, c0, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_image(seed: u64, h: usize, w: usize, channels: usize) -> ImageBuffer {
        let mut r = rng::seeded(seed);
        let pixels = (0..h * w * channels)
            .map(|_| (rng::unit_f64(&mut r) * 256.0) as u8)
            .collect();
        ImageBuffer::new(h, w, channels, pixels).unwrap()
    }

    #[test]
    fn constant_image_has_zero_coefficients() {
        let img = ImageBuffer::new(16, 16, 1, alloc::vec![128; 256]).unwrap();
        let y = analyze(&img, TransformKind::BlockDct8).unwrap();
        assert!(y.data().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_map_synthesizes_to_constant_128() {
        let y = FeatureMap::zeros(2, 3, 64).unwrap();
        let s = synthesize(&y, TransformKind::BlockDct8).unwrap();
        assert!(s.image.pixels().iter().all(|&p| p == 128));
        assert_eq!(s.clipped, 0);
    }

    #[test]
    fn identity_features_are_centered_pixels() {
        let img = ImageBuffer::new(2, 2, 1, alloc::vec![0, 128, 255, 64]).unwrap();
        let y = analyze(&img, TransformKind::Identity).unwrap();
        assert_eq!(y.data(), &[-1.0, 0.0, 127.0 / 128.0, -0.5]);
        let s = synthesize(&y, TransformKind::Identity).unwrap();
        assert_eq!(s.image, img);
        assert_eq!(s.clipped, 0);
    }

    #[test]
    fn dct_round_trip_within_one_lsb() {
        for channels in [1usize, 3] {
            let img = random_image(9 + channels as u64, 24, 16, channels);
            let y = analyze(&img, TransformKind::BlockDct8).unwrap();
            let s = synthesize(&y, TransformKind::BlockDct8).unwrap();
            assert_eq!(s.clipped, 0);
            for (a, b) in img.pixels().iter().zip(s.image.pixels().iter()) {
                assert!((*a as i16 - *b as i16).abs() <= 1, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn random_coefficients_round_trip_through_synthesis() {
        let mut r = rng::seeded(77);
        let data: Vec<f64> =
            (0..2 * 2 * 64).map(|_| (rng::unit_f64(&mut r) - 0.5) * 0.2).collect();
        let y = FeatureMap::new(2, 2, 64, data).unwrap();
        let s = synthesize(&y, TransformKind::BlockDct8).unwrap();
        let y2 = analyze(&s.image, TransformKind::BlockDct8).unwrap();
        let s2 = synthesize(&y2, TransformKind::BlockDct8).unwrap();
        for (a, b) in s.image.pixels().iter().zip(s2.image.pixels().iter()) {
            assert!((*a as i16 - *b as i16).abs() <= 1);
        }
    }

    #[test]
    fn out_of_range_synthesis_reports_clipping() {
        let y = FeatureMap::new(1, 1, 1, alloc::vec![2.0]).unwrap();
        let s = synthesize(&y, TransformKind::Identity).unwrap();
        assert_eq!(s.image.pixels(), &[255]);
        assert_eq!(s.clipped, 1);
    }

    #[test]
    fn dims_must_divide_for_block_transform() {
        let img = random_image(3, 12, 16, 1);
        assert!(analyze(&img, TransformKind::BlockDct8).is_err());
    }

    #[test]
    fn grouping_round_trips() {
        let mut r = rng::seeded(78);
        let data: Vec<f64> = (0..8 * 12 * 3).map(|_| rng::unit_f64(&mut r)).collect();
        let y = FeatureMap::new(8, 12, 3, data).unwrap();
        for g in [1usize, 2, 4] {
            let grouped = group_spatial(&y, g).unwrap();
            assert_eq!(grouped.h(), 8 / g);
            assert_eq!(grouped.channels(), 3 * g * g);
            let back = ungroup_spatial(&grouped, g, 3).unwrap();
            assert_eq!(back, y);
        }
        assert!(group_spatial(&y, 3).is_err());
    }
}
