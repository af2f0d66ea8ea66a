//! End-to-end toy codec: fixed transform, optional adaptive companding,
//! lattice quantization, entropy-coded container, reconstruction, and
//! rate-distortion evaluation.

pub mod format;
mod image;
mod transform;

use alloc::vec;
use alloc::vec::Vec;

use crate::compand;
use crate::entropy::Bitstream;
use crate::error::{Error, Result};
use crate::lattice::{LatticeKind, LatticeSpec};
use crate::quant::{self, FeatureMap};

pub use image::{distortion, Distortion, ImageBuffer};
pub use transform::{group_spatial, ungroup_spatial, Synthesis, TransformKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompandingMode {
    Off,
    Adaptive,
}

impl CompandingMode {
    pub fn name(&self) -> &'static str {
        match self {
            CompandingMode::Off => "off",
            CompandingMode::Adaptive => "adaptive",
        }
    }
}

/// Full configuration of one codec run. `downsample` groups that many latent
/// positions per side into a single location, widening the footprint shared
/// by one selection flag and one companding parameter pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodecConfig {
    pub transform: TransformKind,
    pub lattice: LatticeSpec,
    pub companding: CompandingMode,
    pub window: usize,
    pub lambda: f64,
    pub downsample: usize,
}

impl CodecConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite and >= 0".into()));
        }
        if self.downsample == 0 || self.downsample > u8::MAX as usize {
            return Err(Error::InvalidParameter("downsample must be in 1..=255".into()));
        }
        if self.window == 0 || self.window % 2 == 0 || self.window > u8::MAX as usize {
            return Err(Error::InvalidParameter("window must be odd and in 1..=255".into()));
        }
        if self.lattice.dimension() > u8::MAX as usize {
            return Err(Error::InvalidParameter("lattice dimension must fit in a byte".into()));
        }
        Ok(())
    }

    pub fn with_stride(&self, stride: f64) -> Result<CodecConfig> {
        Ok(CodecConfig { lattice: self.lattice.with_stride(stride)?, ..*self })
    }
}

/// Where the coded bits went, for rate accounting and overhead reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeStats {
    pub total_bits: u64,
    /// Fixed header, section length words, and the checksum.
    pub header_bits: u64,
    pub field_bits: u64,
    /// One raw bit per latent location (diamond only).
    pub flag_bits_raw: u64,
    /// Actual flag section payload, mode byte included.
    pub flag_bits_coded: u64,
    /// Whole index section payload.
    pub index_bits: u64,
    /// Subheader and per-channel window table within the index section.
    pub index_overhead_bits: u64,
    /// Range-coded index bytes only.
    pub index_coded_bits: u64,
    pub bpp: f64,
    /// Samples clamped into the companding unit domain.
    pub saturated: u64,
    /// Indices sent verbatim because they fell outside their window.
    pub escapes: u64,
}

/// One measured point of a rate-distortion sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdPoint {
    pub stride: f64,
    pub bpp: f64,
    /// Pixel-domain mean squared error.
    pub distortion: f64,
    pub psnr: f64,
    pub lambda: f64,
    /// bpp + lambda * distortion.
    pub objective: f64,
}

/// Maps an image into its feature representation under the configured
/// transform.
pub fn analyze(img: &ImageBuffer, cfg: &CodecConfig) -> Result<FeatureMap> {
    transform::analyze(img, cfg.transform)
}

/// Inverse of `analyze` up to clipping into the 8-bit range.
pub fn synthesize(y: &FeatureMap, cfg: &CodecConfig) -> Result<Synthesis> {
    transform::synthesize(y, cfg.transform)
}

/// Encodes an image into a self-describing bitstream.
///
/// The working stride is the configured stride narrowed to f32, since that is
/// what the header carries and the decoder will use.
pub fn encode_image(img: &ImageBuffer, cfg: &CodecConfig) -> Result<(Bitstream, EncodeStats)> {
    cfg.validate()?;
    let stride = cfg.lattice.stride() as f32;
    let spec = cfg.lattice.with_stride(stride as f64)?;

    let y0 = transform::analyze(img, cfg.transform)?;
    let y = transform::group_spatial(&y0, cfg.downsample)?;

    let (working, field, saturated) = match cfg.companding {
        CompandingMode::Off => (y, None, 0),
        CompandingMode::Adaptive => {
            let raw = compand::estimate_field(&y, cfg.window, stride as f64)?;
            let field = format::canonicalize_field(&raw);
            let saturated = compand::saturation_count(&y, &field)?;
            (compand::compand_map(&y, &field)?, Some(field), saturated)
        }
    };

    let q = quant::quantize_lvq(&working, &spec)?;

    let field_payload = match &field {
        Some(f) => format::encode_field(f)?,
        None => Vec::new(),
    };
    let flag_payload = if spec.kind() == LatticeKind::Diamond {
        format::encode_flags(q.coset_flags())
    } else {
        Vec::new()
    };
    let (index_payload, index_stats) = format::encode_index_section(&q, cfg.downsample)?;

    let header = format::Header {
        transform: cfg.transform,
        lattice_kind: spec.kind(),
        dimension: spec.dimension() as u8,
        stride,
        height: img.h() as u32,
        width: img.w() as u32,
        channels: img.channels() as u8,
        companding: field.is_some(),
        window: cfg.window as u8,
    };
    let mut bytes = Vec::new();
    format::write_header(&mut bytes, &header);
    for payload in [&field_payload, &flag_payload, &index_payload] {
        bytes.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        bytes.extend_from_slice(payload);
    }
    let crc = format::crc32(&bytes);
    bytes.extend_from_slice(&crc.to_le_bytes());

    let locations = (q.h() * q.w()) as u64;
    let total_bits = bytes.len() as u64 * 8;
    let stats = EncodeStats {
        total_bits,
        header_bits: (format::HEADER_BYTES as u64 + 12 + 4) * 8,
        field_bits: field_payload.len() as u64 * 8,
        flag_bits_raw: if spec.kind() == LatticeKind::Diamond { locations } else { 0 },
        flag_bits_coded: flag_payload.len() as u64 * 8,
        index_bits: index_payload.len() as u64 * 8,
        index_overhead_bits: index_stats.overhead_bits,
        index_coded_bits: index_stats.coded_bits,
        bpp: total_bits as f64 / (img.h() * img.w()) as f64,
        saturated,
        escapes: index_stats.escapes,
    };
    Ok((Bitstream::from_bytes(bytes), stats))
}

/// Decodes a bitstream produced by `encode_image`. Fails with a structured
/// error on bad magic, version, framing, or checksum; never reads past the
/// declared sections.
pub fn decode_image(bs: &Bitstream) -> Result<ImageBuffer> {
    let bytes = bs.bytes();
    if bytes.len() < format::HEADER_BYTES + 12 + 4 {
        return Err(Error::TruncatedStream);
    }
    if bytes[..4] != format::MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes([crc_bytes[0], crc_bytes[1], crc_bytes[2], crc_bytes[3]]);
    let computed = format::crc32(body);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }

    let mut r = format::ByteReader::new(body);
    let header = format::parse_header(&mut r)?;
    let field_len = r.read_u32()? as usize;
    let field_bytes = r.take(field_len)?;
    let flag_len = r.read_u32()? as usize;
    let flag_bytes = r.take(flag_len)?;
    let index_len = r.read_u32()? as usize;
    let index_bytes = r.take(index_len)?;
    if r.remaining() != 0 {
        return Err(Error::Format("trailing bytes after the index section".into()));
    }

    let (latent_h, latent_w, latent_c) = transform::latent_dims(
        header.transform,
        header.height as usize,
        header.width as usize,
        header.channels as usize,
    )?;
    let section = format::decode_index_section(index_bytes, latent_h, latent_w, latent_c)?;

    let spec =
        LatticeSpec::new(header.lattice_kind, header.dimension as usize, header.stride as f64)?;
    let flags = if header.lattice_kind == LatticeKind::Diamond {
        format::decode_flags(flag_bytes, section.h * section.w)?
    } else {
        if flag_len != 0 {
            return Err(Error::Format("unexpected flag section for a single-codebook stream".into()));
        }
        vec![false; section.h * section.w]
    };
    let q = quant::QuantizedMap::new(
        section.h,
        section.w,
        section.c,
        section.indices,
        flags,
        spec,
    )?;
    let latent = quant::dequantize(&q)?;

    let latent = if header.companding {
        let field = format::decode_field(field_bytes, section.h, section.w)?;
        compand::inverse_compand_map(&latent, &field)?
    } else {
        if field_len != 0 {
            return Err(Error::Format("unexpected field section without companding".into()));
        }
        latent
    };

    let ungrouped = transform::ungroup_spatial(&latent, section.downsample, latent_c)?;
    let synth = transform::synthesize(&ungrouped, header.transform)?;
    if synth.image.h() != header.height as usize || synth.image.w() != header.width as usize {
        return Err(Error::Format("reconstructed geometry disagrees with the header".into()));
    }
    Ok(synth.image)
}

/// Runs the codec across a stride grid, measuring true coded rate and pixel
/// distortion, and evaluates the objective for each lambda. Points come back
/// sorted by bpp.
pub fn rd_sweep(
    img: &ImageBuffer,
    cfg: &CodecConfig,
    strides: &[f64],
    lambdas: &[f64],
) -> Result<Vec<RdPoint>> {
    if strides.is_empty() {
        return Err(Error::InvalidParameter("stride list must be nonempty".into()));
    }
    if lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(Error::InvalidParameter("lambdas must be finite and >= 0".into()));
    }
    let mut points = Vec::with_capacity(strides.len() * lambdas.len());
    for &stride in strides {
        let run = cfg.with_stride(stride).map_err(|e| e.context(alloc::format!("stride {stride}")))?;
        let (bits, stats) =
            encode_image(img, &run).map_err(|e| e.context(alloc::format!("stride {stride}")))?;
        let recon =
            decode_image(&bits).map_err(|e| e.context(alloc::format!("stride {stride}")))?;
        let d = distortion(img, &recon)?;
        for &lambda in lambdas {
            points.push(RdPoint {
                stride,
                bpp: stats.bpp,
                distortion: d.mse,
                psnr: d.psnr,
                lambda,
                objective: stats.bpp + lambda * d.mse,
            });
        }
    }
    points.sort_by(|a, b| a.bpp.total_cmp(&b.bpp).then(a.lambda.total_cmp(&b.lambda)));
    Ok(points)
}

/// Outcome of a matched-rate stride search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrideSearch {
    pub stride: f64,
    pub bpp: f64,
    pub mse: f64,
    pub psnr: f64,
    pub encodes: u32,
}

/// Bisects the stride (in log space) until the coded rate lands within
/// `rel_tol` of `target_bpp`. Coded rate decreases in stride, so a bracket is
/// grown by doubling/halving first.
pub fn find_stride_for_bpp(
    img: &ImageBuffer,
    cfg: &CodecConfig,
    target_bpp: f64,
    rel_tol: f64,
) -> Result<StrideSearch> {
    if !(target_bpp > 0.0) || !(rel_tol > 0.0) {
        return Err(Error::InvalidParameter("target bpp and tolerance must be positive".into()));
    }
    let mut encodes = 0u32;
    let eval = |stride: f64| -> Result<StrideSearch> {
        let run = cfg.with_stride(stride)?;
        let (bits, stats) = encode_image(img, &run)?;
        let recon = decode_image(&bits)?;
        let d = distortion(img, &recon)?;
        Ok(StrideSearch { stride, bpp: stats.bpp, mse: d.mse, psnr: d.psnr, encodes: 0 })
    };
    let within = |bpp: f64| (bpp - target_bpp).abs() <= rel_tol * target_bpp;

    encodes += 1;
    let start = eval(cfg.lattice.stride())?;
    let mut best = start;
    if within(start.bpp) {
        return Ok(StrideSearch { encodes, ..start });
    }
    // lo: stride whose rate is above target; hi: stride whose rate is below.
    let (mut lo, mut hi);
    if start.bpp > target_bpp {
        lo = start;
        let mut s = start.stride;
        loop {
            s *= 2.0;
            encodes += 1;
            let e = eval(s)?;
            if (e.bpp - target_bpp).abs() < (best.bpp - target_bpp).abs() {
                best = e;
            }
            if e.bpp <= target_bpp {
                hi = e;
                break;
            }
            if encodes > 80 {
                return Err(Error::InvalidParameter(
                    "target bpp unreachable from below".into(),
                )
                .context("matched-rate stride search"));
            }
        }
    } else {
        hi = start;
        let mut s = start.stride;
        loop {
            s /= 2.0;
            encodes += 1;
            let e = eval(s)?;
            if (e.bpp - target_bpp).abs() < (best.bpp - target_bpp).abs() {
                best = e;
            }
            if e.bpp >= target_bpp {
                lo = e;
                break;
            }
            if encodes > 80 {
                return Err(Error::InvalidParameter(
                    "target bpp unreachable from above".into(),
                )
                .context("matched-rate stride search"));
            }
        }
    }
    if within(best.bpp) {
        return Ok(StrideSearch { encodes, ..best });
    }
    for _ in 0..64 {
        let mid = libm::sqrt(lo.stride * hi.stride);
        if mid <= hi.stride.min(lo.stride) * (1.0 + 1e-12) && mid >= hi.stride.min(lo.stride) {
            break;
        }
        encodes += 1;
        let e = eval(mid)?;
        if (e.bpp - target_bpp).abs() < (best.bpp - target_bpp).abs() {
            best = e;
        }
        if within(best.bpp) {
            return Ok(StrideSearch { encodes, ..best });
        }
        if e.bpp > target_bpp {
            lo = e;
        } else {
            hi = e;
        }
    }
    if within(best.bpp) {
        Ok(StrideSearch { encodes, ..best })
    } else {
        Err(Error::InvalidParameter(alloc::format!(
            "no stride reaches {target_bpp:.4} bpp within {:.2}% (closest {:.4})",
            rel_tol * 100.0,
            best.bpp
        ))
        .context("matched-rate stride search"))
    }
}
