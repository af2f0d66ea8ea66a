//! Matched-rate adaptive-companding check on amplitude-modulated uniform
//! noise, using the real container.

use lvqkit_core::codec::{
    analyze, decode_image, distortion, encode_image, find_stride_for_bpp, group_spatial,
    CodecConfig, CompandingMode, ImageBuffer, TransformKind,
};
use lvqkit_core::compand::estimate_field;
use lvqkit_core::lattice::LatticeSpec;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform noise whose amplitude is constant on 16x16 tiles, log-uniform
/// across tiles over [lo, hi].
fn flat_texture_image(seed: u64, size: usize, lo: f64, hi: f64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tiles = size / 16;
    let amp: Vec<f64> = (0..tiles * tiles)
        .map(|_| (lo.ln() + unit(&mut rng) * (hi / lo).ln()).exp())
        .collect();
    let mut pixels = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let a = amp[(y / 16) * tiles + x / 16];
            let v = 128.0 + 127.0 * a * (2.0 * unit(&mut rng) - 1.0);
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    ImageBuffer::new(size, size, 1, pixels).unwrap()
}

fn main() {
    let size = 128usize;
    for (lo, hi) in [(0.08f64, 0.5f64), (0.1, 0.6), (0.06, 0.45)] {
        for g in [16usize] {
            for stride in [0.1f64, 0.14, 0.18, 0.25, 0.35] {
                let mut wins = 0;
                let mut losses = 0;
                let mut gain_db = 0.0;
                let mut matched = 0;
                for seed in 0..20 {
                    let img = flat_texture_image(900 + seed, size, lo, hi);
                    let off = CodecConfig {
                        transform: TransformKind::Identity,
                        lattice: LatticeSpec::diamond(4, stride).unwrap(),
                        companding: CompandingMode::Off,
                        window: 1,
                        lambda: 0.0,
                        downsample: g,
                    };
                    let (bits, stats) = encode_image(&img, &off).unwrap();
                    let off_mse = distortion(&img, &decode_image(&bits).unwrap()).unwrap().mse;
                    let ac = CodecConfig { companding: CompandingMode::Adaptive, ..off };
                    if let Ok(found) = find_stride_for_bpp(&img, &ac, stats.bpp, 0.01) {
                        matched += 1;
                        if found.mse <= off_mse {
                            wins += 1;
                        } else {
                            losses += 1;
                        }
                        gain_db += 10.0 * (off_mse / found.mse).log10();
                    }
                }
                if matched > 0 {
                    println!(
                        "amp [{lo},{hi}] g={g:>2} stride={stride:<5} matched {matched}/20 wins {wins} losses {losses} mean {:+.2} dB",
                        gain_db / matched as f64
                    );
                }
            }
        }
    }

    // What does the greedy knee search pick on bounded textures?
    let img = flat_texture_image(950, 64, 0.05, 0.4);
    let cfg = CodecConfig {
        transform: TransformKind::Identity,
        lattice: LatticeSpec::diamond(4, 0.1).unwrap(),
        companding: CompandingMode::Off,
        window: 1,
        lambda: 0.0,
        downsample: 16,
    };
    let y = group_spatial(&analyze(&img, &cfg).unwrap(), 16).unwrap();
    for stride in [0.05, 0.1, 0.2] {
        let field = estimate_field(&y, 1, stride).unwrap();
        let mut hist = std::collections::BTreeMap::new();
        for &a in field.a_values() {
            *hist.entry(format!("{a}")).or_insert(0) += 1;
        }
        println!("stride {stride}: knee histogram {hist:?}");
    }
}
