//! Adaptive entropy coding and rate accounting for quantized maps: a range
//! coder over order-0 adaptive models, empirical entropy estimation for the
//! rate term, and the cost of the codebook-selection sideband.

pub mod bitio;
pub mod model;
pub mod range;

use alloc::vec::Vec;

use crate::compand::CompandingField;
use crate::error::{Error, Result};
use crate::lattice::LatticeKind;
use crate::math;
use crate::quant::QuantizedMap;

pub use model::SymbolModel;
pub use range::{RangeDecoder, RangeEncoder};

/// Per-location cost of the transmitted companding parameters: a 3-bit knee
/// index plus a 16-bit log-scale code.
pub const FIELD_BITS_PER_LOCATION: u64 = 19;

/// A coded byte sequence with its exact length in bits. Pad bits in the last
/// partial byte are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Bitstream {
    bytes: Vec<u8>,
    bit_length: u64,
}

impl Bitstream {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        let bit_length = bytes.len() as u64 * 8;
        Bitstream { bytes, bit_length }
    }

    pub fn with_bit_length(bytes: Vec<u8>, bit_length: u64) -> Result<Self> {
        if bit_length > bytes.len() as u64 * 8 {
            return Err(Error::InvalidParameter("bit length exceeds the byte buffer".into()));
        }
        if bit_length < bytes.len() as u64 * 8 {
            if bytes.len() as u64 * 8 - bit_length >= 8 {
                return Err(Error::InvalidParameter("more than one byte of padding".into()));
            }
            let pad = (8 - (bit_length % 8) as u32) % 8;
            let last = *bytes.last().expect("nonempty when padded");
            if last & ((1u8 << pad) - 1) != 0 {
                return Err(Error::InvalidParameter("pad bits must be zero".into()));
            }
        }
        Ok(Bitstream { bytes, bit_length })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn bit_length(&self) -> u64 {
        self.bit_length
    }
}

/// Range-encodes a symbol sequence under an adaptive model. The model adapts
/// after each symbol, so decoding must start from an identically initialized
/// model.
pub fn encode_symbols(symbols: &[u32], model: &mut SymbolModel) -> Result<Bitstream> {
    let mut enc = RangeEncoder::new();
    for &s in symbols {
        if s >= model.alphabet_size() {
            return Err(Error::SymbolOutOfRange { symbol: s, alphabet: model.alphabet_size() });
        }
        let (lo, freq) = model.interval(s);
        enc.encode(lo, freq, model.total());
        model.update(s);
    }
    Ok(Bitstream::from_bytes(enc.finish()))
}

/// Inverse of `encode_symbols` for a known symbol count.
pub fn decode_symbols(bs: &Bitstream, count: usize, model: &mut SymbolModel) -> Result<Vec<u32>> {
    let mut dec = RangeDecoder::new(bs.bytes())?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let target = dec.decode_target(model.total());
        let (symbol, lo, freq) = model.locate(target);
        dec.decode_update(lo, freq, model.total())?;
        model.update(symbol);
        out.push(symbol);
    }
    Ok(out)
}

/// Shannon entropy in bits of a histogram, i.e. the ideal static code length
/// for the counted sequence.
pub fn entropy_bits(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total_f = total as f64;
    let mut bits = 0.0;
    for &c in counts {
        if c > 0 {
            bits += c as f64 * math::log2(total_f / c as f64);
        }
    }
    bits
}

/// Raw cost in bits per pixel of one selection flag per latent location,
/// when the latent grid downsamples the image by `downsample` in each
/// dimension: (h/d)(w/d) / (h*w) = 1/d^2.
pub fn sideband_cost(h: usize, w: usize, downsample: usize) -> Result<f64> {
    if downsample == 0 {
        return Err(Error::InvalidParameter("downsample must be >= 1".into()));
    }
    if h % downsample != 0 || w % downsample != 0 {
        return Err(Error::InvalidParameter(alloc::format!(
            "dimensions {h}x{w} not divisible by downsample {downsample}"
        )));
    }
    Ok(((h / downsample) * (w / downsample)) as f64 / (h * w) as f64)
}

/// Estimated rate of a quantized map in bits per source pixel: per-channel
/// index entropy, plus the flag sideband (its empirical entropy, capped at
/// one raw bit per location, plus the one-byte mode marker), plus the
/// transmitted companding parameters when present. Framing and header bytes
/// are not included.
pub fn empirical_rate(
    q: &QuantizedMap,
    pixel_count: usize,
    field: Option<&CompandingField>,
) -> f64 {
    let locations = q.h() * q.w();
    let c = q.channels();
    let mut bits = 0.0;
    for ch in 0..c {
        let values: Vec<i64> = (0..locations).map(|loc| q.indices()[loc * c + ch] as i64).collect();
        let lo = values.iter().copied().min().unwrap_or(0);
        let hi = values.iter().copied().max().unwrap_or(0);
        let mut counts = alloc::vec![0u64; (hi - lo + 1) as usize];
        for v in values {
            counts[(v - lo) as usize] += 1;
        }
        bits += entropy_bits(&counts);
    }
    if q.spec().kind() == LatticeKind::Diamond {
        let ones = q.coset_flags().iter().filter(|&&f| f).count() as u64;
        let flag_entropy = entropy_bits(&[ones, locations as u64 - ones]);
        bits += flag_entropy.min(locations as f64) + 8.0;
    }
    if field.is_some() {
        bits += (FIELD_BITS_PER_LOCATION * locations as u64) as f64;
    }
    bits / pixel_count as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use crate::rng;

    fn coded_bits(symbols: &[u32], alphabet: u32) -> u64 {
        let mut model = SymbolModel::new(alphabet).unwrap();
        let bs = encode_symbols(symbols, &mut model).unwrap();
        bs.bit_length()
    }

    #[test]
    fn uniform_symbols_cost_close_to_log_alphabet() {
        let mut rng = rng::seeded(61);
        let symbols: Vec<u32> =
            (0..10_000).map(|_| (rng::unit_f64(&mut rng) * 256.0) as u32).collect();
        let bits = coded_bits(&symbols, 256);
        let per_symbol = bits as f64 / symbols.len() as f64;
        assert!(per_symbol >= 7.9, "uniform source coded at {per_symbol} bits/symbol");
        assert!(per_symbol <= 8.3, "uniform source coded at {per_symbol} bits/symbol");
    }

    #[test]
    fn constant_symbols_cost_almost_nothing() {
        let symbols = alloc::vec![37u32; 10_000];
        let bits = coded_bits(&symbols, 256);
        let per_symbol = bits as f64 / symbols.len() as f64;
        assert!(per_symbol <= 0.05, "constant source coded at {per_symbol} bits/symbol");
    }

    #[test]
    fn empty_sequence_round_trips() {
        let mut model = SymbolModel::new(16).unwrap();
        let bs = encode_symbols(&[], &mut model).unwrap();
        assert!(bs.bytes().len() <= 5);
        let mut model = SymbolModel::new(16).unwrap();
        let decoded = decode_symbols(&bs, 0, &mut model).unwrap();
        assert!(decoded.is_empty());
    }

    #[test]
    fn lossless_across_alphabets() {
        let mut rng = rng::seeded(62);
        for &alphabet in &[2u32, 17, 256, 1024] {
            for _ in 0..40 {
                let len = (rng::unit_f64(&mut rng) * 400.0) as usize;
                let symbols: Vec<u32> = (0..len)
                    .map(|_| (rng::unit_f64(&mut rng) * alphabet as f64) as u32)
                    .collect();
                let mut enc_model = SymbolModel::new(alphabet).unwrap();
                let bs = encode_symbols(&symbols, &mut enc_model).unwrap();
                let mut dec_model = SymbolModel::new(alphabet).unwrap();
                let decoded = decode_symbols(&bs, symbols.len(), &mut dec_model).unwrap();
                assert_eq!(decoded, symbols, "alphabet {alphabet}");
                assert_eq!(enc_model, dec_model);
            }
        }
    }

    #[test]
    fn symbol_out_of_range_is_rejected() {
        let mut model = SymbolModel::new(4).unwrap();
        assert!(matches!(
            encode_symbols(&[1, 2, 4], &mut model),
            Err(Error::SymbolOutOfRange { symbol: 4, alphabet: 4 })
        ));
    }

    #[test]
    fn coded_length_tracks_empirical_entropy() {
        let mut rng = rng::seeded(63);
        // Skewed geometric-ish source over 64 symbols.
        let symbols: Vec<u32> = (0..100_000)
            .map(|_| {
                let mut s = 0u32;
                while s < 63 && rng::unit_f64(&mut rng) < 0.6 {
                    s += 1;
                }
                s
            })
            .collect();
        let mut counts = [0u64; 64];
        for &s in &symbols {
            counts[s as usize] += 1;
        }
        let ideal = entropy_bits(&counts);
        let coded = coded_bits(&symbols, 64) as f64;
        assert!(coded <= 1.03 * ideal + 128.0, "coded {coded} vs ideal {ideal}");
        assert!(coded >= ideal - 64.0, "coded {coded} suspiciously below ideal {ideal}");
    }

    #[test]
    fn streams_are_bit_identical_across_runs() {
        let mut rng = rng::seeded(64);
        let symbols: Vec<u32> =
            (0..5_000).map(|_| (rng::unit_f64(&mut rng) * 100.0) as u32).collect();
        let mut m1 = SymbolModel::new(100).unwrap();
        let mut m2 = SymbolModel::new(100).unwrap();
        let a = encode_symbols(&symbols, &mut m1).unwrap();
        let b = encode_symbols(&symbols, &mut m2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sideband_cost_formula() {
        assert_eq!(sideband_cost(256, 256, 16).unwrap(), 0.003_906_25);
        assert_eq!(sideband_cost(64, 64, 1).unwrap(), 1.0);
        assert_eq!(sideband_cost(512, 768, 16).unwrap(), 0.003_906_25);
        assert!(sideband_cost(100, 100, 16).is_err());
        assert!(sideband_cost(16, 16, 0).is_err());
    }

    #[test]
    fn empirical_rate_degenerate_and_uniform() {
        let spec = LatticeSpec::diamond(4, 1.0).unwrap();
        let zeros = crate::quant::QuantizedMap::new(
            8,
            8,
            4,
            alloc::vec![0; 8 * 8 * 4],
            alloc::vec![false; 64],
            spec,
        )
        .unwrap();
        // Zero-entropy payload: only the sideband mode marker remains.
        let rate = empirical_rate(&zeros, 64 * 64, None);
        assert!((rate - 8.0 / 4096.0).abs() < 1e-12, "rate {rate}");

        // Indices uniform over 16 values cost ~4 bits per element.
        let mut rng = rng::seeded(65);
        let n = 64usize;
        let indices: Vec<i32> =
            (0..n * n).map(|_| (rng::unit_f64(&mut rng) * 16.0) as i32).collect();
        let q = crate::quant::QuantizedMap::new(
            n,
            n,
            1,
            indices,
            alloc::vec![false; n * n],
            LatticeSpec::integer_z(1, 1.0).unwrap(),
        )
        .unwrap();
        let rate = empirical_rate(&q, n * n, None);
        assert!((rate - 4.0).abs() < 0.05, "rate {rate}");
    }

    #[test]
    fn bitstream_padding_invariants() {
        assert!(Bitstream::with_bit_length(alloc::vec![0b1010_0000], 3).is_ok());
        assert!(Bitstream::with_bit_length(alloc::vec![0b1010_1000], 3).is_err());
        assert!(Bitstream::with_bit_length(alloc::vec![0xFF], 9).is_err());
    }
}
