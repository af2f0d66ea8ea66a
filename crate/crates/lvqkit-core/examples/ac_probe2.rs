//! Decomposes the matched-rate companding delta into normalization and
//! knee-choice contributions, using entropy-based rate instead of the full
//! container.

use lvqkit_core::codec::{analyze, group_spatial, CodecConfig, CompandingMode, ImageBuffer, TransformKind};
use lvqkit_core::compand::{self, CompandingField};
use lvqkit_core::entropy::empirical_rate;
use lvqkit_core::lattice::LatticeSpec;
use lvqkit_core::quant::{self, FeatureMap};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn laplacian(rng: &mut ChaCha8Rng) -> f64 {
    let u = unit(rng) - 0.5;
    let mag = -(1.0 - 2.0 * u.abs()).max(1e-12).ln();
    if u < 0.0 {
        -mag
    } else {
        mag
    }
}

fn two_level_image(seed: u64, size: usize, rho: f64, base: f64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tiles = size / 16;
    let busy: Vec<bool> = (0..tiles * tiles).map(|_| unit(&mut rng) < 0.5).collect();
    let mut pixels = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let t = (y / 16) * tiles + x / 16;
            let scale = if busy[t] { base * rho } else { base };
            let v = 128.0 + 127.0 * scale * laplacian(&mut rng);
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    ImageBuffer::new(size, size, 1, pixels).unwrap()
}

/// (bits-per-pixel, latent-domain mse) for one stride under a field choice.
fn measure(
    y: &FeatureMap,
    stride: f64,
    field: Option<&CompandingField>,
    pixels: usize,
) -> (f64, f64) {
    let spec = LatticeSpec::diamond(4, stride).unwrap();
    let (working, rate_field) = match field {
        None => (y.clone(), None),
        Some(f) => (compand::compand_map(y, f).unwrap(), Some(f)),
    };
    let q = quant::quantize_lvq(&working, &spec).unwrap();
    let recon = quant::dequantize(&q).unwrap();
    let recon = match field {
        None => recon,
        Some(f) => compand::inverse_compand_map(&recon, f).unwrap(),
    };
    let mse: f64 = y
        .data()
        .iter()
        .zip(recon.data().iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / y.data().len() as f64;
    (empirical_rate(&q, pixels, rate_field), mse)
}

/// Distortion at target rate by log-linear interpolation of a (R, D) curve.
fn d_at(curve: &[(f64, f64)], rate: f64) -> Option<f64> {
    let mut pts = curve.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in pts.windows(2) {
        let (r0, d0) = pair[0];
        let (r1, d1) = pair[1];
        if r0 <= rate && rate <= r1 && r1 > r0 {
            let t = (rate - r0) / (r1 - r0);
            return Some((d0.ln() * (1.0 - t) + d1.ln() * t).exp());
        }
    }
    None
}

fn main() {
    let size = 64usize;
    let g = 16usize;
    let strides = [0.02, 0.03, 0.05, 0.08, 0.12, 0.2, 0.3, 0.5];
    let cfg = CodecConfig {
        transform: TransformKind::Identity,
        lattice: LatticeSpec::diamond(4, 0.1).unwrap(),
        companding: CompandingMode::Off,
        window: 1,
        lambda: 0.0,
        downsample: g,
    };
    for rho in [2.0, 3.5, 8.0] {
        let mut sums = [0.0f64; 3];
        let mut counts = [0usize; 3];
        for seed in 0..8 {
            let img = two_level_image(500 + seed, size, rho, 0.05);
            let y0 = analyze(&img, &cfg).unwrap();
            let y = group_spatial(&y0, g).unwrap();
            let pixels = size * size;

            let off: Vec<(f64, f64)> =
                strides.iter().map(|&s| measure(&y, s, None, pixels)).collect();

            // Normalization only: per-location max-abs, A = 1.
            let norm: Vec<f64> = (0..y.locations())
                .map(|loc| {
                    y.location(loc).iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-6)
                })
                .collect();
            let a1 = CompandingField::new(y.h(), y.w(), vec![1.0; y.locations()], norm.clone())
                .unwrap();
            let a1_curve: Vec<(f64, f64)> =
                strides.iter().map(|&s| measure(&y, s, Some(&a1), pixels)).collect();

            // Full greedy estimator at each stride.
            let greedy_curve: Vec<(f64, f64)> = strides
                .iter()
                .map(|&s| {
                    let f = compand::estimate_field(&y, 1, s).unwrap();
                    measure(&y, s, Some(&f), pixels)
                })
                .collect();

            // Global normalization sanity: one shared scale, A = 1.
            let gmax = norm.iter().fold(0.0f64, |m, &v| m.max(v));
            let global =
                CompandingField::new(y.h(), y.w(), vec![1.0; y.locations()], vec![gmax; y.locations()])
                    .unwrap();
            let global_curve: Vec<(f64, f64)> =
                strides.iter().map(|&s| measure(&y, s, Some(&global), pixels)).collect();

            for (i, curve) in [&a1_curve, &greedy_curve, &global_curve].iter().enumerate() {
                // Compare at every off-curve rate that both curves cover.
                for &(r, d_off) in &off {
                    if let Some(d) = d_at(curve, r) {
                        sums[i] += 10.0 * (d_off / d).log10();
                        counts[i] += 1;
                    }
                }
            }
        }
        println!(
            "rho={rho}: A1-norm {:+.2} dB ({} pts), greedy {:+.2} dB ({} pts), global-norm {:+.2} dB ({} pts)",
            sums[0] / counts[0].max(1) as f64,
            counts[0],
            sums[1] / counts[1].max(1) as f64,
            counts[1],
            sums[2] / counts[2].max(1) as f64,
            counts[2],
        );
    }
}
