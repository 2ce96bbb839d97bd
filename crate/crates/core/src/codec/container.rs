//! `GDC1` byte layout.
//!
//! ```text
//! "GDC1"  u16 version  u64 n  u16 d
//! d × { u8 kind, u8 precision, u8 scale_exponent, i64 offset }
//! u16 l_c  ⌈l_c/8⌉-byte bitmap of base bits  u64 n_b
//! bases      n_b × l_b bits
//! counts     n_b × l_bc bits (count − 1)
//! ids        n × l_id bits
//! deviations n × l_d bits
//! u32 CRC-32 of all preceding bytes
//! ```
//!
//! Integers are little-endian. Bit sections are MSB-first within bytes and
//! zero-padded to a byte boundary. Base bitmap bit `g` is bit `7 - g % 8` of
//! byte `g / 8`.

use std::io::{Read, Write};

use super::{stride, CompressedDataset};
use crate::bits::{BitReader, BitSet, BitWriter};
use crate::error::{GdError, Result};
use crate::ingest::{ChunkLayout, ColumnKind, ColumnSpec, PreprocessPlan};

pub const MAGIC: [u8; 4] = *b"GDC1";
pub const FORMAT_VERSION: u16 = 1;

const COLUMN_BYTES: usize = 11;

/// Measured sizes of one serialization, in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SerializeReport {
    pub header_bits: u64,
    pub bases_bits: u64,
    pub counts_bits: u64,
    pub ids_bits: u64,
    pub deviations_bits: u64,
    pub padding_bits: u64,
    pub checksum_bits: u64,
    pub total_bytes: usize,
}

impl SerializeReport {
    /// Bits written to the four data sections, excluding padding.
    pub fn payload_bits(&self) -> u64 {
        self.bases_bits + self.counts_bits + self.ids_bits + self.deviations_bits
    }

    /// Header, padding and checksum bits.
    pub fn s_params(&self) -> u64 {
        self.header_bits + self.padding_bits + self.checksum_bits
    }
}

fn header_len(d: usize, l_c: usize) -> usize {
    4 + 2 + 8 + 2 + d * COLUMN_BYTES + 2 + l_c.div_ceil(8) + 8
}

fn section_bytes(records: usize, bits: u64) -> usize {
    (records as u64 * bits).div_ceil(8) as usize
}

pub(super) fn container_len(cd: &CompressedDataset) -> usize {
    header_len(cd.layout.d(), cd.l_c())
        + section_bytes(cd.n_b(), cd.l_b() as u64)
        + section_bytes(cd.n_b(), u64::from(cd.l_bc()))
        + section_bytes(cd.n, u64::from(cd.l_id()))
        + section_bytes(cd.n, cd.l_d() as u64)
        + 4
}

fn encode_header(cd: &CompressedDataset) -> Result<Vec<u8>> {
    let d = u16::try_from(cd.layout.d()).map_err(|_| GdError::InvalidParameter("too many columns".into()))?;
    let l_c = u16::try_from(cd.l_c()).map_err(|_| GdError::InvalidParameter("chunk longer than 65535 bits".into()))?;
    let mut out = Vec::with_capacity(header_len(cd.layout.d(), cd.l_c()));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(cd.n as u64).to_le_bytes());
    out.extend_from_slice(&d.to_le_bytes());
    for spec in &cd.plan.columns {
        out.push(spec.kind.code());
        out.push(spec.precision);
        out.push(spec.scale_exponent);
        out.extend_from_slice(&spec.offset.to_le_bytes());
    }
    out.extend_from_slice(&l_c.to_le_bytes());
    let mut bitmap = vec![0u8; cd.l_c().div_ceil(8)];
    for g in cd.base_bits.iter() {
        bitmap[g / 8] |= 0x80 >> (g % 8);
    }
    out.extend_from_slice(&bitmap);
    out.extend_from_slice(&(cd.n_b() as u64).to_le_bytes());
    Ok(out)
}

/// Encodes the container into memory.
pub fn to_bytes(cd: &CompressedDataset) -> Result<(Vec<u8>, SerializeReport)> {
    let mut out = encode_header(cd)?;
    let header_bits = out.len() as u64 * 8;
    let (l_b, l_d) = (cd.l_b(), cd.l_d());
    let (l_bc, l_id) = (cd.l_bc(), cd.l_id());
    let mut padding_bits = 0;
    let mut section = |out: &mut Vec<u8>, fill: &dyn Fn(&mut BitWriter)| -> u64 {
        let mut w = BitWriter::new();
        fill(&mut w);
        let bits = w.bit_len();
        let bytes = w.finish();
        padding_bits += bytes.len() as u64 * 8 - bits;
        out.extend_from_slice(&bytes);
        bits
    };
    let bases_bits = section(&mut out, &|w| {
        for j in 0..cd.n_b() {
            w.write_words(cd.base_words(j), l_b);
        }
    });
    let counts_bits = section(&mut out, &|w| {
        for &c in &cd.counts {
            w.write(c - 1, l_bc);
        }
    });
    let ids_bits = section(&mut out, &|w| {
        for &id in &cd.ids {
            w.write(u64::from(id), l_id);
        }
    });
    let deviations_bits = section(&mut out, &|w| {
        for r in 0..cd.n {
            w.write_words(cd.deviation_words(r), l_d);
        }
    });
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    debug_assert_eq!(out.len(), container_len(cd));
    let report = SerializeReport {
        header_bits,
        bases_bits,
        counts_bits,
        ids_bits,
        deviations_bits,
        padding_bits,
        checksum_bits: 32,
        total_bytes: out.len(),
    };
    Ok((out, report))
}

/// Writes the container to `sink`.
pub fn serialize<W: Write>(cd: &CompressedDataset, mut sink: W) -> Result<SerializeReport> {
    let (bytes, report) = to_bytes(cd)?;
    sink.write_all(&bytes)?;
    sink.flush()?;
    Ok(report)
}

pub fn deserialize<R: Read>(mut source: R) -> Result<CompressedDataset> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len().saturating_sub(self.pos);
        if len > available {
            return Err(GdError::Truncated {
                offset: self.pos,
                needed: len,
                available,
            });
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.array()?))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<CompressedDataset> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic: [u8; 4] = cur.array()?;
    if magic != MAGIC {
        return Err(GdError::BadMagic(magic));
    }
    let version = cur.u16()?;
    if version != FORMAT_VERSION {
        return Err(GdError::Version(version));
    }
    let n = usize::try_from(cur.u64()?).map_err(|_| GdError::Corrupt("sample count overflows".into()))?;
    let d = usize::from(cur.u16()?);
    let mut columns = Vec::with_capacity(d);
    for index in 0..d {
        let code = cur.u8()?;
        let kind =
            ColumnKind::from_code(code).ok_or_else(|| GdError::Corrupt(format!("unknown column kind {code}")))?;
        columns.push(ColumnSpec {
            index,
            kind,
            precision: cur.u8()?,
            scale_exponent: cur.u8()?,
            offset: cur.i64()?,
        });
    }
    let plan = PreprocessPlan { columns };
    plan.validate().map_err(|e| GdError::Corrupt(e.to_string()))?;
    let layout = ChunkLayout::from_plan(&plan).map_err(|e| GdError::Corrupt(e.to_string()))?;
    let l_c = usize::from(cur.u16()?);
    if l_c != layout.l_c() {
        return Err(GdError::Corrupt(format!(
            "declared chunk length {l_c}, columns sum to {}",
            layout.l_c()
        )));
    }
    let bitmap = cur.take(l_c.div_ceil(8))?;
    let mut base_bits = BitSet::new(l_c);
    for (i, &byte) in bitmap.iter().enumerate() {
        for k in 0..8 {
            if byte & (0x80 >> k) != 0 {
                let g = i * 8 + k;
                if g >= l_c {
                    return Err(GdError::Corrupt("base bitmap sets padding bits".into()));
                }
                base_bits.insert(g);
            }
        }
    }
    let n_b = usize::try_from(cur.u64()?).map_err(|_| GdError::Corrupt("base count overflows".into()))?;
    if n == 0 || n_b == 0 || n_b > n || n > u32::MAX as usize {
        return Err(GdError::Corrupt(format!("{n_b} bases for {n} samples")));
    }

    let l_b = base_bits.count();
    let l_d = l_c - l_b;
    let l_bc = crate::bits::ceil_log2(n as u64);
    let l_id = crate::bits::ceil_log2(n_b as u64);
    let expected = header_len(d, l_c)
        + section_bytes(n_b, l_b as u64)
        + section_bytes(n_b, u64::from(l_bc))
        + section_bytes(n, u64::from(l_id))
        + section_bytes(n, l_d as u64)
        + 4;
    if bytes.len() < expected {
        return Err(GdError::Truncated {
            offset: bytes.len(),
            needed: expected - bytes.len(),
            available: 0,
        });
    }
    if bytes.len() > expected {
        return Err(GdError::Corrupt(format!("{} trailing bytes", bytes.len() - expected)));
    }
    let stored = u32::from_le_bytes(bytes[expected - 4..].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(&bytes[..expected - 4]);
    if stored != computed {
        return Err(GdError::Checksum { stored, computed });
    }

    let (kb, kd) = (stride(l_b), stride(l_d));
    let mut bases = vec![0u64; n_b * kb];
    let mut reader = BitReader::new(cur.take(section_bytes(n_b, l_b as u64))?);
    for j in 0..n_b {
        reader.read_words(&mut bases[j * kb..(j + 1) * kb], l_b)?;
    }
    let mut reader = BitReader::new(cur.take(section_bytes(n_b, u64::from(l_bc)))?);
    let counts = (0..n_b)
        .map(|_| reader.read(l_bc).map(|c| c + 1))
        .collect::<Result<Vec<_>>>()?;
    let mut reader = BitReader::new(cur.take(section_bytes(n, u64::from(l_id)))?);
    let ids = (0..n)
        .map(|_| reader.read(l_id).map(|v| v as u32))
        .collect::<Result<Vec<_>>>()?;
    let mut deviations = vec![0u64; n * kd];
    let mut reader = BitReader::new(cur.take(section_bytes(n, l_d as u64))?);
    for r in 0..n {
        reader.read_words(&mut deviations[r * kd..(r + 1) * kd], l_d)?;
    }

    let cd = CompressedDataset {
        plan,
        layout,
        base_bits,
        n,
        bases,
        counts,
        ids,
        deviations,
    };
    cd.validate()?;
    Ok(cd)
}

#[cfg(test)]
mod tests {
    use super::super::tests::fixture;
    use super::*;
    use crate::codec::compress;
    use crate::configurator::GdConfig;

    fn fixture_container() -> CompressedDataset {
        let (m, layout, plan) = fixture();
        let bits = BitSet::from_indices(8, [0, 1, 2, 7]).unwrap();
        compress(&m, &layout, &plan, &GdConfig::new(bits, Default::default())).unwrap()
    }

    #[test]
    fn fixture_payload_is_63_bits() {
        let cd = fixture_container();
        let (bytes, report) = to_bytes(&cd).unwrap();
        assert_eq!(report.bases_bits, 12);
        assert_eq!(report.counts_bits, 9);
        assert_eq!(report.ids_bits, 14);
        assert_eq!(report.deviations_bits, 28);
        assert_eq!(report.payload_bits(), 63);
        assert_eq!(report.total_bytes, bytes.len());
        assert_eq!(report.s_params() + report.payload_bits(), bytes.len() as u64 * 8);
        assert_eq!(cd.s_params(), report.s_params());
        assert_eq!(from_bytes(&bytes).unwrap(), cd);
    }

    #[test]
    fn header_layout() {
        let cd = fixture_container();
        let (bytes, _) = to_bytes(&cd).unwrap();
        assert_eq!(&bytes[..4], b"GDC1");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..14], &7u64.to_le_bytes());
        assert_eq!(&bytes[14..16], &[1, 0]);
        assert_eq!(&bytes[16..27], &[0, 8, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[27..29], &[8, 0]);
        assert_eq!(bytes[29], 0b1110_0001);
        assert_eq!(&bytes[30..38], &3u64.to_le_bytes());
        // bases 1010 1100 1110, padded
        assert_eq!(&bytes[38..40], &[0b1010_1100, 0b1110_0000]);
    }

    #[test]
    fn corruption_is_detected() {
        let cd = fixture_container();
        let (bytes, _) = to_bytes(&cd).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(from_bytes(&bad), Err(GdError::BadMagic(_))));

        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(from_bytes(&bad), Err(GdError::Version(2))));

        assert!(matches!(
            from_bytes(&bytes[..bytes.len() - 3]),
            Err(GdError::Truncated { .. })
        ));
        assert!(matches!(from_bytes(&bytes[..10]), Err(GdError::Truncated { .. })));

        let mut bad = bytes.clone();
        let last_payload = bytes.len() - 5;
        bad[last_payload] ^= 0x80;
        assert!(matches!(from_bytes(&bad), Err(GdError::Checksum { .. })));

        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(from_bytes(&long), Err(GdError::Corrupt(_))));
    }

    #[test]
    fn invariant_violations_on_load() {
        let cd = fixture_container();
        let (bytes, _) = to_bytes(&cd).unwrap();
        // Swap the first two bases so they are no longer ascending, then fix the CRC.
        let mut bad = bytes.clone();
        bad[38] = 0b1100_1010;
        let n = bad.len();
        let crc = crc32fast::hash(&bad[..n - 4]);
        bad[n - 4..].copy_from_slice(&crc.to_le_bytes());
        assert!(matches!(from_bytes(&bad), Err(GdError::Corrupt(_))));
    }
}
