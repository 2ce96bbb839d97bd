//! Bit-level containers: index sets over chunk positions, MSB-first word
//! packing, and byte-stream bit writers/readers for the container.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GdError, Result};

/// Set of global bit indices within an `len`-bit chunk.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "BitSetRepr", try_from = "BitSetRepr")]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct BitSetRepr {
    len: usize,
    bits: Vec<usize>,
}

impl From<BitSet> for BitSetRepr {
    fn from(set: BitSet) -> Self {
        BitSetRepr {
            len: set.len,
            bits: set.iter().collect(),
        }
    }
}

impl TryFrom<BitSetRepr> for BitSet {
    type Error = GdError;

    fn try_from(repr: BitSetRepr) -> Result<Self> {
        BitSet::from_indices(repr.len, repr.bits)
    }
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut set = BitSet::new(len);
        for i in 0..len {
            set.insert(i);
        }
        set
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut set = BitSet::new(len);
        for i in indices {
            if i >= len {
                return Err(GdError::BitOutOfRange { bit: i, l_c: len });
            }
            set.insert(i);
        }
        Ok(set)
    }

    /// Size of the index universe (`l_c`).
    pub fn universe(&self) -> usize {
        self.len
    }

    /// Returns `true` if the bit was newly inserted.
    pub fn insert(&mut self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} outside {}-bit universe", self.len);
        let (w, m) = (i / 64, 1u64 << (i % 64));
        let fresh = self.words[w] & m == 0;
        self.words[w] |= m;
        fresh
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.len == other.len && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Ascending iteration over members.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + tz)
            })
        })
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Writes the low `len` bits of `value` into `words` starting at bit `pos`,
/// most significant bit first. Target bits must be zero.
pub fn put_bits(words: &mut [u64], pos: usize, value: u64, len: u32) {
    if len == 0 {
        return;
    }
    debug_assert!(len <= 64);
    let value = if len == 64 { value } else { value & ((1u64 << len) - 1) };
    let word = pos / 64;
    let used = (pos % 64) as u32;
    let room = 64 - used;
    if len <= room {
        words[word] |= value << (room - len);
    } else {
        let spill = len - room;
        words[word] |= value >> spill;
        words[word + 1] |= value << (64 - spill);
    }
}

/// Reads `len` bits starting at `pos`, MSB first.
pub fn get_bits(words: &[u64], pos: usize, len: u32) -> u64 {
    if len == 0 {
        return 0;
    }
    debug_assert!(len <= 64);
    let word = pos / 64;
    let used = (pos % 64) as u32;
    let room = 64 - used;
    let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
    if len <= room {
        (words[word] >> (room - len)) & mask
    } else {
        let spill = len - room;
        let hi = words[word] & ((1u64 << room) - 1);
        ((hi << spill) | (words[word + 1] >> (64 - spill))) & mask
    }
}

/// A fixed-length bit string, MSB first. Ordering of equal-length patterns is
/// numeric.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitPattern {
    len: usize,
    words: Vec<u64>,
}

impl BitPattern {
    pub fn from_words(len: usize, words: &[u64]) -> Self {
        BitPattern {
            len,
            words: words[..len.div_ceil(64)].to_vec(),
        }
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, &b) in bits.iter().enumerate() {
            put_bits(&mut words, i, u64::from(b), 1);
        }
        BitPattern { len: bits.len(), words }
    }

    /// Parses a string of '0'/'1' characters.
    pub fn parse(text: &str) -> Option<Self> {
        let bits: Option<Vec<bool>> = text
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        bits.map(BitPattern::from_bits)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        get_bits(&self.words, i, 1) == 1
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Display for BitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitPattern({self})")
    }
}

/// MSB-first bit writer over a byte buffer.
#[derive(Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    pending: u32,
    written: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, value: u64, len: u32) {
        debug_assert!(len <= 64);
        if len > 32 {
            self.write_small(value >> 32, len - 32);
            self.write_small(value & 0xffff_ffff, 32);
        } else {
            self.write_small(value, len);
        }
    }

    fn write_small(&mut self, value: u64, len: u32) {
        if len == 0 {
            return;
        }
        let value = value & ((1u64 << len) - 1);
        self.acc = (self.acc << len) | value;
        self.pending += len;
        self.written += u64::from(len);
        while self.pending >= 8 {
            self.pending -= 8;
            self.bytes.push((self.acc >> self.pending) as u8);
        }
        self.acc &= (1u64 << self.pending) - 1;
    }

    /// Writes the first `len` bits of an MSB-first word buffer.
    pub fn write_words(&mut self, words: &[u64], len: usize) {
        let mut pos = 0;
        while pos < len {
            let take = (len - pos).min(64) as u32;
            self.write(get_bits(words, pos, take), take);
            pos += take as usize;
        }
    }

    /// Data bits written so far, excluding padding.
    pub fn bit_len(&self) -> u64 {
        self.written
    }

    /// Zero-pads to a byte boundary and returns the bytes.
    pub fn finish(mut self) -> Vec<u8> {
        if self.pending > 0 {
            self.bytes.push((self.acc << (8 - self.pending)) as u8);
        }
        self.bytes
    }
}

/// MSB-first bit reader over a byte slice.
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    pub fn read(&mut self, len: u32) -> Result<u64> {
        debug_assert!(len <= 64);
        let end = self.pos + u64::from(len);
        if end > self.bytes.len() as u64 * 8 {
            return Err(GdError::Corrupt("bit section shorter than declared".into()));
        }
        let mut out = 0u64;
        let mut remaining = len;
        while remaining > 0 {
            let byte = self.bytes[(self.pos / 8) as usize];
            let offset = (self.pos % 8) as u32;
            let avail = 8 - offset;
            let take = avail.min(remaining);
            let chunk = (u64::from(byte) >> (avail - take)) & ((1u64 << take) - 1);
            out = (out << take) | chunk;
            remaining -= take;
            self.pos += u64::from(take);
        }
        Ok(out)
    }

    pub fn read_words(&mut self, dst: &mut [u64], len: usize) -> Result<()> {
        let mut pos = 0;
        while pos < len {
            let take = (len - pos).min(64) as u32;
            let v = self.read(take)?;
            put_bits(dst, pos, v, take);
            pos += take as usize;
        }
        Ok(())
    }

    pub fn position(&self) -> u64 {
        self.pos
    }
}

/// `⌈log2 x⌉`, with `ceil_log2(0) = ceil_log2(1) = 0`.
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(7), 3);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
    }

    #[test]
    fn bitset_iterates_ascending() {
        let set = BitSet::from_indices(130, [129, 0, 64, 7]).unwrap();
        assert_eq!(set.iter().collect::<Vec<_>>(), vec![0, 7, 64, 129]);
        assert_eq!(set.count(), 4);
        assert!(BitSet::from_indices(8, [8]).is_err());
    }

    #[test]
    fn pattern_display_and_order() {
        let a = BitPattern::parse("1010").unwrap();
        let b = BitPattern::parse("1100").unwrap();
        assert_eq!(a.to_string(), "1010");
        assert!(a < b);
    }

    #[test]
    fn writer_pads_msb_first() {
        let mut w = BitWriter::new();
        w.write(0b101, 3);
        assert_eq!(w.bit_len(), 3);
        assert_eq!(w.finish(), vec![0b1010_0000]);
    }

    proptest! {
        #[test]
        fn word_packing_round_trips(fields in prop::collection::vec((any::<u64>(), 0u32..=64), 0..20)) {
            let total: usize = fields.iter().map(|&(_, l)| l as usize).sum();
            let mut words = vec![0u64; total.div_ceil(64).max(1)];
            let mut writer = BitWriter::new();
            let mut pos = 0;
            for &(v, l) in &fields {
                put_bits(&mut words, pos, v, l);
                writer.write(v, l);
                pos += l as usize;
            }
            prop_assert_eq!(writer.bit_len() as usize, total);
            let bytes = writer.finish();
            let mut reader = BitReader::new(&bytes);
            let mut pos = 0;
            for &(v, l) in &fields {
                let mask = if l == 64 { u64::MAX } else { (1u64 << l) - 1 };
                prop_assert_eq!(get_bits(&words, pos, l), v & mask);
                prop_assert_eq!(reader.read(l).unwrap(), v & mask);
                pos += l as usize;
            }
        }
    }
}
