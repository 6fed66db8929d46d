//! Fixed-length bit strings used for files, inputs, intermediate values and
//! shuffle payloads.
//!
//! Bits are stored most-significant-first in bytes. The backing buffer always
//! starts at bit 0 of its first byte and the unused tail of the last byte is
//! kept zero, so `as_bytes` is the canonical byte form of the string.

use std::fmt;

use bitvec::prelude::*;
use rand::RngCore;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Bits(BitVec<u8, Msb0>);

impl Bits {
    pub fn new() -> Self {
        Self(BitVec::new())
    }

    pub fn zeros(len: usize) -> Self {
        Self(BitVec::repeat(false, len))
    }

    /// Takes the first `len` bits of `bytes`, zero-extending if `bytes` is short.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Self {
        let mut bv = BitVec::<u8, Msb0>::from_slice(bytes);
        bv.resize(len, false);
        Self::normalized(bv)
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R, len: usize) -> Self {
        let mut buf = vec![0u8; len.div_ceil(8)];
        rng.fill_bytes(&mut buf);
        Self::from_bytes(&buf, len)
    }

    fn normalized(mut bv: BitVec<u8, Msb0>) -> Self {
        bv.force_align();
        bv.set_uninitialized(false);
        Self(bv)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_raw_slice()
    }

    /// Byte form zero-padded (or truncated) to exactly `nbytes` bytes.
    pub fn to_padded_bytes(&self, nbytes: usize) -> Vec<u8> {
        let mut out = self.as_bytes().to_vec();
        out.resize(nbytes, 0);
        out
    }

    pub fn get(&self, index: usize) -> bool {
        self.0[index]
    }

    pub fn flip(&mut self, index: usize) {
        let bit = self.0[index];
        self.0.set(index, !bit);
    }

    /// Copy of `len` bits starting at `start`. Bits past the end read as zero.
    pub fn slice(&self, start: usize, len: usize) -> Bits {
        let end = (start + len).min(self.len());
        let mut bv = if start < end {
            self.0[start..end].to_bitvec()
        } else {
            BitVec::new()
        };
        bv.resize(len, false);
        Self::normalized(bv)
    }

    pub fn extend(&mut self, other: &Bits) {
        self.0.extend_from_bitslice(&other.0);
    }

    pub fn concat<'a, I: IntoIterator<Item = &'a Bits>>(parts: I) -> Bits {
        let mut out = Bits::new();
        for p in parts {
            out.extend(p);
        }
        out
    }

    /// Copy zero-extended (or truncated) to `len` bits.
    pub fn resized(&self, len: usize) -> Bits {
        let mut bv = self.0.clone();
        bv.resize(len, false);
        Self::normalized(bv)
    }

    /// XOR `other` into `self`; the shorter operand is treated as zero-padded.
    pub fn xor_assign(&mut self, other: &Bits) {
        if other.len() > self.len() {
            self.0.resize(other.len(), false);
        }
        let dst = self.0.as_raw_mut_slice();
        for (d, s) in dst.iter_mut().zip(other.as_bytes()) {
            *d ^= *s;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.0.count_ones()
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({}:", self.len())?;
        for b in self.as_bytes().iter().take(16) {
            write!(f, "{b:02x}")?;
        }
        if self.as_bytes().len() > 16 {
            write!(f, "..")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tail_bits_stay_zero() {
        let b = Bits::from_bytes(&[0xff, 0xff], 11);
        assert_eq!(b.as_bytes(), &[0xff, 0xe0]);
        let s = b.slice(3, 6);
        assert_eq!(s.as_bytes(), &[0xfc]);
    }

    #[test]
    fn slice_past_end_is_zero_filled() {
        let b = Bits::from_bytes(&[0b1010_0000], 3);
        let s = b.slice(1, 4);
        assert_eq!(s.len(), 4);
        assert_eq!(s.as_bytes(), &[0b0100_0000]);
    }

    #[test]
    fn xor_extends_to_longer_operand() {
        let mut a = Bits::from_bytes(&[0xf0], 4);
        a.xor_assign(&Bits::from_bytes(&[0xff, 0x80], 9));
        assert_eq!(a.len(), 9);
        assert_eq!(a.as_bytes(), &[0x0f, 0x80]);
    }

    proptest! {
        #[test]
        fn split_then_concat_is_identity(bytes in proptest::collection::vec(any::<u8>(), 0..40), cut in 0usize..320) {
            let len = bytes.len() * 8;
            let b = Bits::from_bytes(&bytes, len);
            let cut = cut.min(len);
            let joined = Bits::concat([&b.slice(0, cut), &b.slice(cut, len - cut)]);
            prop_assert_eq!(joined, b);
        }

        #[test]
        fn xor_is_an_involution(a in proptest::collection::vec(any::<u8>(), 1..20), b in proptest::collection::vec(any::<u8>(), 1..20)) {
            let x = Bits::from_bytes(&a, a.len() * 8 - 3);
            let y = Bits::from_bytes(&b, b.len() * 8 - 1);
            let mut z = x.clone();
            z.xor_assign(&y);
            z.xor_assign(&y);
            prop_assert_eq!(z.slice(0, x.len()), x.clone());
            prop_assert_eq!(z.slice(x.len(), z.len() - x.len()).count_ones(), 0);
        }
    }
}
