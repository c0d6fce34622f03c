use crate::error::{Error, Result};

/// Ordered bit sequence with an exact length. Bits are packed MSB-first into
/// bytes; the final partial byte is zero-filled, so equal streams compare
/// equal byte-for-byte.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitStream {
    bytes: Vec<u8>,
    len: usize,
}

impl BitStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    /// Reconstruct a stream from packed bytes and an exact bit count.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Config(format!(
                "bit length {} does not match {} packed bytes",
                len,
                bytes.len()
            )));
        }
        let mut s = Self {
            bytes: bytes.to_vec(),
            len,
        };
        s.clear_tail();
        Ok(s)
    }

    /// Every byte becomes eight bits, MSB first.
    pub fn from_whole_bytes(bytes: &[u8]) -> Self {
        Self {
            bytes: bytes.to_vec(),
            len: bytes.len() * 8,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        let byte = self.len / 8;
        if byte == self.bytes.len() {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[byte] |= 1 << (7 - (self.len % 8));
        }
        self.len += 1;
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        if index >= self.len {
            return None;
        }
        Some(self.bytes[index / 8] >> (7 - (index % 8)) & 1 == 1)
    }

    /// Append `width` low bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u8) {
        for i in (0..width).rev() {
            self.push(value >> i & 1 == 1);
        }
    }

    /// Read `width` bits starting at `start` as an MSB-first integer.
    pub fn read_bits(&self, start: usize, width: u8) -> u64 {
        let mut v = 0u64;
        for i in 0..width as usize {
            v = v << 1 | self.get(start + i).map(u64::from).unwrap_or(0);
        }
        v
    }

    pub fn extend(&mut self, other: &BitStream) {
        for i in 0..other.len {
            self.push(other.get(i).unwrap());
        }
    }

    /// Append zero bits until the length is a multiple of `align`.
    pub fn pad_to_multiple(&mut self, align: usize) {
        while !self.len.is_multiple_of(align) {
            self.push(false);
        }
    }

    /// Zero-padded copy of exactly `bits` length. Errors if already longer.
    pub fn padded_to(&self, bits: usize) -> Result<Self> {
        if self.len > bits {
            return Err(Error::Config(format!(
                "cannot pad {} bits down to {}",
                self.len, bits
            )));
        }
        let mut out = self.clone();
        while out.len < bits {
            out.push(false);
        }
        Ok(out)
    }

    /// Packed bytes; trailing slack in the final byte is zero.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i).unwrap())
    }

    fn clear_tail(&mut self) {
        let slack = self.len % 8;
        if slack != 0 {
            if let Some(last) = self.bytes.last_mut() {
                *last &= 0xFFu8 << (8 - slack);
            }
        }
    }
}

impl std::fmt::Debug for BitStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitStream[{}]", self.len)?;
        let shown = self.len.min(64);
        write!(f, " ")?;
        for i in 0..shown {
            write!(f, "{}", u8::from(self.get(i).unwrap()))?;
        }
        if shown < self.len {
            write!(f, "…")?;
        }
        Ok(())
    }
}

impl FromIterator<bool> for BitStream {
    fn from_iter<T: IntoIterator<Item = bool>>(iter: T) -> Self {
        let mut s = BitStream::new();
        for b in iter {
            s.push(b);
        }
        s
    }
}

/// Parse a literal like "10111001" in tests and debugging helpers.
pub fn bits_from_str(s: &str) -> BitStream {
    s.chars()
        .filter(|c| *c == '0' || *c == '1')
        .map(|c| c == '1')
        .collect()
}
