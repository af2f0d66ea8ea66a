//! 32-bit range coder with byte-wise renormalization and carry propagation.
//!
//! The encoder keeps a 33-bit low register; a pending run of 0xFF bytes is
//! held back until the carry is known and then flushed in one go. Streams
//! start with a zero byte from the initial cache, which the decoder folds
//! into its five-byte priming read. Frequency totals must stay below 2^24 so
//! the per-symbol division never collapses the range.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const TOP: u32 = 1 << 24;

/// Largest frequency total the coder accepts.
pub const MAX_TOTAL: u32 = TOP;

pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder { low: 0, range: u32::MAX, cache: 0, cache_size: 1, out: Vec::new() }
    }

    /// Narrows the range to the interval [start, start + freq) out of total.
    pub fn encode(&mut self, start: u32, freq: u32, total: u32) {
        debug_assert!(freq > 0);
        debug_assert!(start.checked_add(freq).is_some_and(|end| end <= total));
        debug_assert!(total <= MAX_TOTAL);
        let r = self.range / total;
        self.low += r as u64 * start as u64;
        self.range = r * freq;
        while self.range < TOP {
            self.shift_low();
            self.range <<= 8;
        }
    }

    /// Encodes one bit at fixed probability 1/2, bypassing any model.
    pub fn encode_direct_bit(&mut self, bit: bool) {
        self.range >>= 1;
        if bit {
            self.low += self.range as u64;
        }
        while self.range < TOP {
            self.shift_low();
            self.range <<= 8;
        }
    }

    /// Encodes `n` raw bits, most significant first.
    pub fn encode_direct_bits(&mut self, value: u32, n: u32) {
        for i in (0..n).rev() {
            self.encode_direct_bit((value >> i) & 1 == 1);
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low > 0xFFFF_FFFF {
            let carry = (self.low >> 32) as u8;
            self.out.push(self.cache.wrapping_add(carry));
            for _ in 1..self.cache_size {
                self.out.push(0xFFu8.wrapping_add(carry));
            }
            self.cache = (self.low >> 24) as u8;
            self.cache_size = 0;
        }
        self.cache_size += 1;
        self.low = (self.low << 8) & 0xFFFF_FFFF;
    }

    /// Flushes the remaining state; the returned bytes fully determine the
    /// encoded sequence.
    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

pub struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(buf: &'a [u8]) -> Result<Self> {
        let mut dec = RangeDecoder { code: 0, range: u32::MAX, buf, pos: 0 };
        // The first byte is the encoder's initial zero cache.
        for _ in 0..5 {
            dec.code = (dec.code << 8) | dec.next_byte()? as u32;
        }
        Ok(dec)
    }

    fn next_byte(&mut self) -> Result<u8> {
        let b = *self.buf.get(self.pos).ok_or(Error::TruncatedStream)?;
        self.pos += 1;
        Ok(b)
    }

    /// Cumulative-frequency target of the next symbol under `total`.
    pub fn decode_target(&self, total: u32) -> u32 {
        let r = self.range / total;
        (self.code / r).min(total - 1)
    }

    /// Consumes the symbol whose interval is [start, start + freq).
    pub fn decode_update(&mut self, start: u32, freq: u32, total: u32) -> Result<()> {
        let r = self.range / total;
        self.code = self.code.wrapping_sub(r * start);
        self.range = r * freq;
        while self.range < TOP {
            self.code = (self.code << 8) | self.next_byte()? as u32;
            self.range <<= 8;
        }
        Ok(())
    }

    pub fn decode_direct_bit(&mut self) -> Result<bool> {
        self.range >>= 1;
        let bit = self.code >= self.range;
        if bit {
            self.code -= self.range;
        }
        while self.range < TOP {
            self.code = (self.code << 8) | self.next_byte()? as u32;
            self.range <<= 8;
        }
        Ok(bit)
    }

    pub fn decode_direct_bits(&mut self, n: u32) -> Result<u32> {
        let mut value = 0;
        for _ in 0..n {
            value = (value << 1) | self.decode_direct_bit()? as u32;
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_bits_round_trip() {
        let mut enc = RangeEncoder::new();
        let values = [0u32, 1, 0xDEAD_BEEF, u32::MAX, 12345];
        for &v in &values {
            enc.encode_direct_bits(v, 32);
        }
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes).unwrap();
        for &v in &values {
            assert_eq!(dec.decode_direct_bits(32).unwrap(), v);
        }
    }

    #[test]
    fn carry_propagation_survives_adversarial_intervals() {
        // Repeatedly encoding the top sliver of the range forces long 0xFF
        // runs and eventual carries.
        let mut enc = RangeEncoder::new();
        for _ in 0..10_000 {
            enc.encode(254, 2, 256);
        }
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes).unwrap();
        for _ in 0..10_000 {
            let t = dec.decode_target(256);
            assert!((254..256).contains(&t));
            dec.decode_update(254, 2, 256).unwrap();
        }
    }

    #[test]
    fn truncated_stream_is_an_error() {
        assert!(matches!(RangeDecoder::new(&[0, 1]), Err(Error::TruncatedStream)));
        let mut enc = RangeEncoder::new();
        for i in 0..1000u32 {
            enc.encode(i % 256, 1, 256);
        }
        let bytes = enc.finish();
        let cut = &bytes[..bytes.len() / 2];
        let mut dec = RangeDecoder::new(cut).unwrap();
        let mut failed = false;
        for _ in 0..1000 {
            let t = dec.decode_target(256);
            if dec.decode_update(t, 1, 256).is_err() {
                failed = true;
                break;
            }
        }
        assert!(failed, "truncated stream decoded to completion");
    }
}
