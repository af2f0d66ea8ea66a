//! Serialized container for coded images.
//!
//! Layout, all multi-byte integers little-endian:
//!
//! ```text
//! magic "LVQ1" | version u8 | transform u8 | lattice u8 | n u8 | stride f32
//! | H u32 | W u32 | channels u8 | companding u8 | window u8
//! | field-section  length u32 + payload
//! | flag-section   length u32 + payload
//! | index-section  length u32 + payload
//! | CRC32 over everything above
//! ```
//!
//! Field payload: per latent location, a 3-bit knee index into the candidate
//! table plus a 16-bit log-domain scale code, bit-packed MSB-first. Flag
//! payload: one mode byte (0 = raw bit-packed, 1 = range-coded with an
//! adaptive binary model; the encoder keeps whichever is smaller) followed by
//! the data. Index payload: the spatial grouping factor (u8), the grouped
//! channel count (u16), per-channel index windows as i16 pairs, then the
//! range-coded indices, channel-major, with out-of-window values sent as an
//! escape symbol plus 32 raw bits.

use alloc::vec;
use alloc::vec::Vec;

use super::transform::TransformKind;
use crate::compand::{CompandingField, A_CANDIDATES};
use crate::entropy::bitio::{BitReader, BitWriter};
use crate::entropy::{RangeDecoder, RangeEncoder, SymbolModel};
use crate::error::{Error, Result};
use crate::lattice::LatticeKind;
use crate::math;
use crate::quant::QuantizedMap;

pub const MAGIC: [u8; 4] = *b"LVQ1";
pub const VERSION: u8 = 1;

/// Fixed header size in bytes, before the section framing.
pub const HEADER_BYTES: usize = 23;

const fn build_crc_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = i as u32;
        let mut k = 0;
        while k < 8 {
            c = if c & 1 != 0 { 0xEDB8_8320 ^ (c >> 1) } else { c >> 1 };
            k += 1;
        }
        table[i] = c;
        i += 1;
    }
    table
}

const CRC_TABLE: [u32; 256] = build_crc_table();

pub fn crc32(bytes: &[u8]) -> u32 {
    let mut c = 0xFFFF_FFFFu32;
    for &b in bytes {
        c = CRC_TABLE[((c ^ b as u32) & 0xFF) as usize] ^ (c >> 8);
    }
    c ^ 0xFFFF_FFFF
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub transform: TransformKind,
    pub lattice_kind: LatticeKind,
    pub dimension: u8,
    pub stride: f32,
    pub height: u32,
    pub width: u32,
    pub channels: u8,
    pub companding: bool,
    pub window: u8,
}

pub fn write_header(out: &mut Vec<u8>, h: &Header) {
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(match h.transform {
        TransformKind::Identity => 0,
        TransformKind::BlockDct8 => 1,
    });
    out.push(match h.lattice_kind {
        LatticeKind::IntegerZ => 0,
        LatticeKind::HexagonalA2 => 1,
        LatticeKind::Diamond => 2,
    });
    out.push(h.dimension);
    out.extend_from_slice(&h.stride.to_le_bytes());
    out.extend_from_slice(&h.height.to_le_bytes());
    out.extend_from_slice(&h.width.to_le_bytes());
    out.push(h.channels);
    out.push(if h.companding { 1 } else { 0 });
    out.push(h.window);
}

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::TruncatedStream)?;
        if end > self.buf.len() {
            return Err(Error::TruncatedStream);
        }
        let slice = &self.buf[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    pub fn read_u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn read_u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    pub fn read_i16(&mut self) -> Result<i16> {
        let b = self.take(2)?;
        Ok(i16::from_le_bytes([b[0], b[1]]))
    }

    pub fn read_u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn read_f32(&mut self) -> Result<f32> {
        let b = self.take(4)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub(crate) fn parse_header(r: &mut ByteReader<'_>) -> Result<Header> {
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.read_u8()?;
    if version != VERSION {
        return Err(Error::Format(alloc::format!("unsupported version {version}")));
    }
    let transform = match r.read_u8()? {
        0 => TransformKind::Identity,
        1 => TransformKind::BlockDct8,
        t => return Err(Error::Format(alloc::format!("unknown transform code {t}"))),
    };
    let lattice_kind = match r.read_u8()? {
        0 => LatticeKind::IntegerZ,
        1 => LatticeKind::HexagonalA2,
        2 => LatticeKind::Diamond,
        k => return Err(Error::Format(alloc::format!("unknown lattice code {k}"))),
    };
    let dimension = r.read_u8()?;
    let stride = r.read_f32()?;
    if !(stride > 0.0) || !stride.is_finite() {
        return Err(Error::Format("stride must be positive and finite".into()));
    }
    let height = r.read_u32()?;
    let width = r.read_u32()?;
    let channels = r.read_u8()?;
    let companding = match r.read_u8()? {
        0 => false,
        1 => true,
        c => return Err(Error::Format(alloc::format!("unknown companding code {c}"))),
    };
    let window = r.read_u8()?;
    Ok(Header {
        transform,
        lattice_kind,
        dimension,
        stride,
        height,
        width,
        channels,
        companding,
        window,
    })
}

// Companding-field transport: knee parameters travel as indices into the
// candidate table, scales as 16-bit codes on a fixed log2 grid. The encoder
// quantizes its field through this round trip before use so both sides
// compand with identical parameters.

const SCALE_LOG_MIN: f64 = -20.0;
const SCALE_LOG_MAX: f64 = 20.0;

pub fn encode_scale(scale: f64) -> u16 {
    let l = math::log2(scale).clamp(SCALE_LOG_MIN, SCALE_LOG_MAX);
    math::round((l - SCALE_LOG_MIN) / (SCALE_LOG_MAX - SCALE_LOG_MIN) * 65535.0) as u16
}

pub fn decode_scale(code: u16) -> f64 {
    math::exp2(code as f64 / 65535.0 * (SCALE_LOG_MAX - SCALE_LOG_MIN) + SCALE_LOG_MIN)
}

/// Snaps a field onto the values the transport can represent.
pub fn canonicalize_field(field: &CompandingField) -> CompandingField {
    let a_values: Vec<f64> = field
        .a_values()
        .iter()
        .map(|&a| {
            let mut best = A_CANDIDATES[0];
            for &cand in &A_CANDIDATES {
                if (a - cand).abs() < (a - best).abs() {
                    best = cand;
                }
            }
            best
        })
        .collect();
    let norm_scale: Vec<f64> =
        field.norm_scale().iter().map(|&s| decode_scale(encode_scale(s))).collect();
    CompandingField::new(field.h(), field.w(), a_values, norm_scale)
        .expect("canonical values satisfy field invariants")
}

pub fn encode_field(field: &CompandingField) -> Result<Vec<u8>> {
    let mut w = BitWriter::new();
    for (&a, &s) in field.a_values().iter().zip(field.norm_scale().iter()) {
        let index = A_CANDIDATES
            .iter()
            .position(|&cand| cand == a)
            .ok_or_else(|| Error::InvalidParameter("knee parameter not in candidate set".into()))?;
        w.write_bits(index as u64, 3);
        w.write_bits(encode_scale(s) as u64, 16);
    }
    Ok(w.finish())
}

pub fn decode_field(bytes: &[u8], h: usize, w: usize) -> Result<CompandingField> {
    let mut r = BitReader::new(bytes);
    let mut a_values = Vec::with_capacity(h * w);
    let mut norm_scale = Vec::with_capacity(h * w);
    for _ in 0..h * w {
        let index = r.read_bits(3)? as usize;
        if index >= A_CANDIDATES.len() {
            return Err(Error::Format(alloc::format!("knee index {index} out of range")));
        }
        a_values.push(A_CANDIDATES[index]);
        norm_scale.push(decode_scale(r.read_bits(16)? as u16));
    }
    CompandingField::new(h, w, a_values, norm_scale)
}

const FLAG_MODE_RAW: u8 = 0;
const FLAG_MODE_CODED: u8 = 1;

/// Sideband serialization: raw packing guarantees one bit per location, the
/// adaptive binary coding usually beats it on skewed flags; the smaller wins.
pub fn encode_flags(flags: &[bool]) -> Vec<u8> {
    let mut raw = BitWriter::new();
    for &f in flags {
        raw.write_bit(f);
    }
    let raw = raw.finish();

    let mut model = SymbolModel::binary();
    let mut enc = RangeEncoder::new();
    for &f in flags {
        let (lo, freq) = model.interval(f as u32);
        enc.encode(lo, freq, model.total());
        model.update(f as u32);
    }
    let coded = enc.finish();

    let mut out = Vec::with_capacity(1 + raw.len().min(coded.len()));
    if coded.len() < raw.len() {
        out.push(FLAG_MODE_CODED);
        out.extend_from_slice(&coded);
    } else {
        out.push(FLAG_MODE_RAW);
        out.extend_from_slice(&raw);
    }
    out
}

pub fn decode_flags(bytes: &[u8], count: usize) -> Result<Vec<bool>> {
    let (&mode, data) = bytes.split_first().ok_or(Error::TruncatedStream)?;
    match mode {
        FLAG_MODE_RAW => {
            let mut r = BitReader::new(data);
            (0..count).map(|_| r.read_bit()).collect()
        }
        FLAG_MODE_CODED => {
            let mut model = SymbolModel::binary();
            let mut dec = RangeDecoder::new(data)?;
            let mut flags = Vec::with_capacity(count);
            for _ in 0..count {
                let target = dec.decode_target(model.total());
                let (sym, lo, freq) = model.locate(target);
                dec.decode_update(lo, freq, model.total())?;
                model.update(sym);
                flags.push(sym == 1);
            }
            Ok(flags)
        }
        m => Err(Error::Format(alloc::format!("unknown flag mode {m}"))),
    }
}

/// Per-channel transport window: indices inside code as plain symbols,
/// anything outside escapes to 32 raw bits.
fn channel_window(q: &QuantizedMap, ch: usize) -> (i16, i16) {
    let c = q.channels();
    let mut lo = i32::MAX;
    let mut hi = i32::MIN;
    for loc in 0..q.h() * q.w() {
        let v = q.indices()[loc * c + ch];
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo.clamp(-32768, 32767) as i16, hi.clamp(-32768, 32767) as i16)
}

pub(crate) struct IndexSectionStats {
    pub escapes: u64,
    pub coded_bits: u64,
    pub overhead_bits: u64,
}

pub(crate) fn encode_index_section(
    q: &QuantizedMap,
    downsample: usize,
) -> Result<(Vec<u8>, IndexSectionStats)> {
    if downsample == 0 || downsample > u8::MAX as usize {
        return Err(Error::InvalidParameter("grouping factor must fit in a byte".into()));
    }
    let c = q.channels();
    if c > u16::MAX as usize {
        return Err(Error::InvalidParameter("too many channels for the container".into()));
    }
    let locations = q.h() * q.w();
    let mut out = Vec::new();
    out.push(downsample as u8);
    out.extend_from_slice(&(c as u16).to_le_bytes());
    let mut windows = Vec::with_capacity(c);
    for ch in 0..c {
        let (lo, hi) = channel_window(q, ch);
        out.extend_from_slice(&lo.to_le_bytes());
        out.extend_from_slice(&hi.to_le_bytes());
        windows.push((lo, hi));
    }
    let overhead_bits = out.len() as u64 * 8;

    let mut enc = RangeEncoder::new();
    let mut escapes = 0u64;
    for (ch, &(lo, hi)) in windows.iter().enumerate() {
        let span = (hi as i32 - lo as i32) as u32 + 1;
        let escape = span;
        let mut model = SymbolModel::new(span + 1)?;
        for loc in 0..locations {
            let v = q.indices()[loc * c + ch];
            let sym = if v >= lo as i32 && v <= hi as i32 {
                (v - lo as i32) as u32
            } else {
                escapes += 1;
                escape
            };
            let (start, freq) = model.interval(sym);
            enc.encode(start, freq, model.total());
            model.update(sym);
            if sym == escape {
                enc.encode_direct_bits(v as u32, 32);
            }
        }
    }
    let coded = enc.finish();
    let coded_bits = coded.len() as u64 * 8;
    out.extend_from_slice(&coded);
    Ok((out, IndexSectionStats { escapes, coded_bits, overhead_bits }))
}

pub(crate) struct IndexSection {
    pub downsample: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub indices: Vec<i32>,
}

/// Decodes the index section given the pre-grouping latent geometry.
pub(crate) fn decode_index_section(
    bytes: &[u8],
    latent_h: usize,
    latent_w: usize,
    latent_c: usize,
) -> Result<IndexSection> {
    let mut r = ByteReader::new(bytes);
    let g = r.read_u8()? as usize;
    if g == 0 {
        return Err(Error::Format("grouping factor must be >= 1".into()));
    }
    if latent_h % g != 0 || latent_w % g != 0 {
        return Err(Error::Format(alloc::format!(
            "latent dims {latent_h}x{latent_w} not divisible by grouping factor {g}"
        )));
    }
    let (h, w) = (latent_h / g, latent_w / g);
    let c = r.read_u16()? as usize;
    if c != latent_c * g * g {
        return Err(Error::Format(alloc::format!(
            "channel count {c} does not match {latent_c} * {g}^2"
        )));
    }
    let mut windows = Vec::with_capacity(c);
    for _ in 0..c {
        let lo = r.read_i16()?;
        let hi = r.read_i16()?;
        if lo > hi {
            return Err(Error::Format("empty index window".into()));
        }
        windows.push((lo, hi));
    }
    let mut indices = vec![0i32; h * w * c];
    let mut dec = RangeDecoder::new(r.take(r.remaining())?)?;
    for (ch, &(lo, hi)) in windows.iter().enumerate() {
        let span = (hi as i32 - lo as i32) as u32 + 1;
        let escape = span;
        let mut model = SymbolModel::new(span + 1)?;
        for loc in 0..h * w {
            let target = dec.decode_target(model.total());
            let (sym, start, freq) = model.locate(target);
            dec.decode_update(start, freq, model.total())?;
            model.update(sym);
            let v = if sym == escape {
                dec.decode_direct_bits(32)? as i32
            } else {
                lo as i32 + sym as i32
            };
            indices[loc * c + ch] = v;
        }
    }
    Ok(IndexSection { downsample: g, h, w, c, indices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use crate::rng;

    #[test]
    fn crc_known_vectors() {
        assert_eq!(crc32(b""), 0);
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
    }

    #[test]
    fn header_round_trip() {
        let h = Header {
            transform: TransformKind::BlockDct8,
            lattice_kind: LatticeKind::Diamond,
            dimension: 4,
            stride: 0.125,
            height: 384,
            width: 512,
            channels: 3,
            companding: true,
            window: 3,
        };
        let mut bytes = Vec::new();
        write_header(&mut bytes, &h);
        assert_eq!(bytes.len(), HEADER_BYTES);
        let mut r = ByteReader::new(&bytes);
        assert_eq!(parse_header(&mut r).unwrap(), h);

        bytes[0] = b'X';
        let mut r = ByteReader::new(&bytes);
        assert!(matches!(parse_header(&mut r), Err(Error::Format(_))));
    }

    #[test]
    fn scale_codes_cover_the_working_range() {
        for &s in &[1e-6, 1e-3, 0.5, 1.0, 7.7, 1e3, 1e6] {
            let code = encode_scale(s);
            let rt = decode_scale(code);
            assert!((rt / s - 1.0).abs() < 5e-4, "{s} -> {rt}");
            // Idempotent through a second trip.
            assert_eq!(encode_scale(rt), code);
        }
    }

    #[test]
    fn field_round_trip() {
        let mut r = rng::seeded(81);
        let (h, w) = (5, 7);
        let a: Vec<f64> =
            (0..h * w).map(|i| A_CANDIDATES[i % A_CANDIDATES.len()]).collect();
        let s: Vec<f64> = (0..h * w).map(|_| rng::unit_f64(&mut r) * 4.0 + 1e-3).collect();
        let field = canonicalize_field(&CompandingField::new(h, w, a, s).unwrap());
        let bytes = encode_field(&field).unwrap();
        assert_eq!(bytes.len(), (19 * h * w).div_ceil(8));
        let back = decode_field(&bytes, h, w).unwrap();
        assert_eq!(back, field);
    }

    #[test]
    fn flags_round_trip_and_stay_within_a_bit_per_location() {
        let mut r = rng::seeded(82);
        for skew in [0.02, 0.5, 0.93] {
            let flags: Vec<bool> = (0..4000).map(|_| rng::unit_f64(&mut r) < skew).collect();
            let bytes = encode_flags(&flags);
            assert!(bytes.len() as u64 * 8 <= flags.len() as u64 + 16, "skew {skew}");
            if skew != 0.5 {
                assert!((bytes.len() as u64 - 1) * 8 < flags.len() as u64, "skew {skew} not compressed");
            }
            assert_eq!(decode_flags(&bytes, flags.len()).unwrap(), flags);
        }
    }

    #[test]
    fn index_section_round_trip_with_escapes() {
        let mut r = rng::seeded(83);
        let (h, w, c) = (6, 5, 4);
        let mut indices: Vec<i32> =
            (0..h * w * c).map(|_| ((rng::unit_f64(&mut r) - 0.5) * 40.0) as i32).collect();
        // Outliers beyond the 16-bit window must survive via escapes.
        indices[3] = 1_000_000;
        indices[40] = -2_000_000;
        let spec = LatticeSpec::diamond(4, 1.0).unwrap();
        let q = QuantizedMap::new(h, w, c, indices.clone(), vec![false; h * w], spec).unwrap();
        let (bytes, stats) = encode_index_section(&q, 2).unwrap();
        assert_eq!(stats.escapes, 2);
        let section = decode_index_section(&bytes, h * 2, w * 2, 1).unwrap();
        assert_eq!(section.downsample, 2);
        assert_eq!(section.indices, indices);
        assert_eq!((section.h, section.w, section.c), (h, w, c));
    }
}
