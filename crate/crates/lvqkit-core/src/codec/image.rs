//! 8-bit image buffers and pixel-domain distortion.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Interleaved 8-bit image, grayscale (1 channel) or RGB (3 channels).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    h: usize,
    w: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(h: usize, w: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(Error::InvalidParameter("image dims must be positive".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParameter("images must have 1 or 3 channels".into()));
        }
        if pixels.len() != h * w * channels {
            return Err(Error::ShapeMismatch(alloc::format!(
                "expected {} pixels for {}x{}x{}, got {}",
                h * w * channels,
                h,
                w,
                channels,
                pixels.len()
            )));
        }
        Ok(ImageBuffer { h, w, channels, pixels })
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> u8 {
        self.pixels[(row * self.w + col) * self.channels + ch]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distortion {
    pub mse: f64,
    pub psnr: f64,
}

/// Mean squared error over all samples and the corresponding PSNR for 8-bit
/// sources. Identical images report infinite PSNR.
pub fn distortion(a: &ImageBuffer, b: &ImageBuffer) -> Result<Distortion> {
    if a.h != b.h || a.w != b.w || a.channels != b.channels {
        return Err(Error::ShapeMismatch("distortion operands differ in shape".into()));
    }
    let mut sum = 0.0;
    for (&x, &y) in a.pixels.iter().zip(b.pixels.iter()) {
        let d = x as f64 - y as f64;
        sum += d * d;
    }
    let mse = sum / a.pixels.len() as f64;
    let psnr = if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * math::log10(255.0 * 255.0 / mse)
    };
    Ok(Distortion { mse, psnr })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distortion_examples() {
        let a = ImageBuffer::new(2, 2, 1, alloc::vec![10, 20, 30, 40]).unwrap();
        let d = distortion(&a, &a).unwrap();
        assert_eq!(d.mse, 0.0);
        assert!(d.psnr.is_infinite());

        let b = ImageBuffer::new(2, 2, 1, alloc::vec![11, 21, 31, 41]).unwrap();
        let d = distortion(&a, &b).unwrap();
        assert_eq!(d.mse, 1.0);
        assert!((d.psnr - 48.130_803_608_679_31).abs() < 1e-9);

        let black = ImageBuffer::new(1, 2, 1, alloc::vec![0, 255]).unwrap();
        let white = ImageBuffer::new(1, 2, 1, alloc::vec![255, 0]).unwrap();
        let d = distortion(&black, &white).unwrap();
        assert_eq!(d.mse, 255.0 * 255.0);
    }

    #[test]
    fn shape_checks() {
        let a = ImageBuffer::new(2, 2, 1, alloc::vec![0; 4]).unwrap();
        let b = ImageBuffer::new(2, 2, 3, alloc::vec![0; 12]).unwrap();
        assert!(distortion(&a, &b).is_err());
        assert!(ImageBuffer::new(2, 2, 2, alloc::vec![0; 8]).is_err());
        assert!(ImageBuffer::new(2, 2, 1, alloc::vec![0; 5]).is_err());
    }
}
