//! Scratch probe: where does adaptive companding help at matched rate?

use lvqkit_core::codec::{
    decode_image, distortion, encode_image, find_stride_for_bpp, CodecConfig, CompandingMode,
    ImageBuffer, TransformKind,
};
use lvqkit_core::lattice::LatticeSpec;
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

/// Patchwork of quiet/busy 16x16 tiles with scale ratio `rho`.
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

fn smooth_loguniform_image(seed: u64, size: usize) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = 4usize;
    let grid: Vec<f64> = (0..(cells + 1) * (cells + 1))
        .map(|_| (0.03f64.ln() + unit(&mut rng) * (0.5f64 / 0.03).ln()).exp())
        .collect();
    let cell = size / cells;
    let mut pixels = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let gy = (y / cell).min(cells - 1);
            let gx = (x / cell).min(cells - 1);
            let fy = (y % cell) as f64 / cell as f64;
            let fx = (x % cell) as f64 / cell as f64;
            let idx = |r: usize, c: usize| grid[r * (cells + 1) + c];
            let scale = idx(gy, gx) * (1.0 - fy) * (1.0 - fx)
                + idx(gy, gx + 1) * (1.0 - fy) * fx
                + idx(gy + 1, gx) * fy * (1.0 - fx)
                + idx(gy + 1, gx + 1) * fy * fx;
            let v = 128.0 + 127.0 * scale * laplacian(&mut rng);
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    ImageBuffer::new(size, size, 1, pixels).unwrap()
}

fn main() {
    let size = 64usize;
    for (name, images) in [
        (
            "two-level rho=2",
            (0..6).map(|s| two_level_image(100 + s, size, 2.0, 0.1)).collect::<Vec<_>>(),
        ),
        (
            "two-level rho=3.5",
            (0..6).map(|s| two_level_image(200 + s, size, 3.5, 0.06)).collect(),
        ),
        (
            "two-level rho=8",
            (0..6).map(|s| two_level_image(300 + s, size, 8.0, 0.03)).collect(),
        ),
        ("smooth log-uniform", (0..6).map(|s| smooth_loguniform_image(400 + s, size)).collect()),
    ] {
        for g in [8usize, 16] {
            for stride in [0.03f64, 0.08, 0.2, 0.4] {
                let mut wins = 0;
                let mut losses = 0;
                let mut delta_db = 0.0;
                let mut matched = 0;
                for img in &images {
                    let off = CodecConfig {
                        transform: TransformKind::Identity,
                        lattice: LatticeSpec::diamond(4, stride).unwrap(),
                        companding: CompandingMode::Off,
                        window: 1,
                        lambda: 0.0,
                        downsample: g,
                    };
                    let (bits, _) = encode_image(img, &off).unwrap();
                    let stats_bpp = bits.bytes().len() as f64 * 8.0 / (size * size) as f64;
                    let off_mse = distortion(img, &decode_image(&bits).unwrap()).unwrap().mse;
                    let ac = CodecConfig { companding: CompandingMode::Adaptive, ..off };
                    match find_stride_for_bpp(img, &ac, stats_bpp, 0.01) {
                        Ok(found) => {
                            matched += 1;
                            if found.mse <= off_mse {
                                wins += 1;
                            } else {
                                losses += 1;
                            }
                            delta_db += 10.0 * (off_mse / found.mse).log10();
                        }
                        Err(_) => {}
                    }
                }
                if matched > 0 {
                    println!(
                        "{name:>20} g={g:>2} stride={stride:<5} bpp-matched {matched}/6  AC wins {wins} losses {losses}  mean gain {:+.2} dB",
                        delta_db / matched as f64
                    );
                }
            }
        }
    }
}
