//! Binary extension fields GF(2^m) backed by log/antilog tables.

use std::fmt;
use std::sync::OnceLock;

use super::GaloisError;

/// Primitive polynomials indexed by `m`, including the leading `x^m` bit.
///
/// `m = 3` uses `x^3 + x + 1` so that the primitive element `w` satisfies
/// `w^3 = w + 1`.
const PRIMITIVE_POLYS: [u32; 17] = [
    0, 0, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11D, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443,
    0x8003, 0x1100B,
];

pub const MIN_EXPONENT: u8 = 2;
pub const MAX_EXPONENT: u8 = 16;

struct Tables {
    // exp is doubled so that exp[log a + log b] never needs a reduction.
    exp: Vec<u16>,
    log: Vec<u16>,
}

static TABLES: [OnceLock<Tables>; 17] = [const { OnceLock::new() }; 17];

fn build_tables(m: u8) -> Tables {
    let order = 1usize << m;
    let poly = PRIMITIVE_POLYS[m as usize];
    let mut exp = vec![0u16; 2 * (order - 1)];
    let mut log = vec![0u16; order];
    let mut x: u32 = 1;
    for (i, slot) in exp.iter_mut().take(order - 1).enumerate() {
        *slot = x as u16;
        assert!(
            i == 0 || x != 1,
            "polynomial {poly:#x} is not primitive for m={m}"
        );
        log[x as usize] = i as u16;
        x <<= 1;
        if x & (1 << m) != 0 {
            x ^= poly;
        }
    }
    assert_eq!(x, 1, "polynomial {poly:#x} is not primitive for m={m}");
    for i in order - 1..2 * (order - 1) {
        exp[i] = exp[i - (order - 1)];
    }
    Tables { exp, log }
}

/// A handle on GF(2^m). Cheap to copy; tables are built once per `m`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Field {
    m: u8,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{})", self.m)
    }
}

impl Field {
    pub fn new(m: u8) -> Result<Self, GaloisError> {
        if !(MIN_EXPONENT..=MAX_EXPONENT).contains(&m) {
            return Err(GaloisError::UnsupportedField(m));
        }
        Ok(Field { m })
    }

    /// GF(8) with `w^3 = w + 1`.
    pub fn gf8() -> Self {
        Field { m: 3 }
    }

    pub fn exponent(&self) -> u8 {
        self.m
    }

    pub fn order(&self) -> usize {
        1 << self.m
    }

    pub fn primitive_poly(&self) -> u32 {
        PRIMITIVE_POLYS[self.m as usize]
    }

    /// Bytes per symbol in the canonical little-endian encoding.
    pub fn symbol_bytes(&self) -> usize {
        (self.m as usize).div_ceil(8)
    }

    fn tables(&self) -> &'static Tables {
        TABLES[self.m as usize].get_or_init(|| build_tables(self.m))
    }

    pub fn elem(&self, value: u16) -> Result<FieldElement, GaloisError> {
        if (value as usize) >= self.order() {
            return Err(GaloisError::ValueOutOfRange {
                value,
                m: self.m,
            });
        }
        Ok(FieldElement { value, field: *self })
    }

    // Caller guarantees `value < order`.
    pub(crate) fn raw_elem(&self, value: u16) -> FieldElement {
        debug_assert!((value as usize) < self.order());
        FieldElement { value, field: *self }
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { value: 0, field: *self }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { value: 1, field: *self }
    }

    /// The primitive element `w` (the polynomial `x`).
    pub fn primitive(&self) -> FieldElement {
        FieldElement { value: 2, field: *self }
    }

    /// `w^e` for any exponent, reduced modulo the multiplicative order.
    pub fn pow_primitive(&self, e: usize) -> FieldElement {
        let value = self.tables().exp[e % (self.order() - 1)];
        FieldElement { value, field: *self }
    }

    #[inline]
    pub(crate) fn mul_raw(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        let t = self.tables();
        t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize]
    }

    #[inline]
    pub(crate) fn inv_raw(&self, a: u16) -> Option<u16> {
        if a == 0 {
            return None;
        }
        let t = self.tables();
        let n = self.order() - 1;
        Some(t.exp[(n - t.log[a as usize] as usize) % n])
    }

    pub(crate) fn dot_raw(&self, a: &[u16], b: &[u16]) -> u16 {
        a.iter()
            .zip(b)
            .fold(0, |acc, (&x, &y)| acc ^ self.mul_raw(x, y))
    }
}

/// An element of GF(2^m), stored as its polynomial-basis bit vector.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u16,
    field: Field,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}@{:?}", self.value, self.field)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl FieldElement {
    pub fn value(&self) -> u16 {
        self.value
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &FieldElement) -> Result<(), GaloisError> {
        if self.field != other.field {
            return Err(GaloisError::FieldMismatch {
                left: self.field.m,
                right: other.field.m,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement, GaloisError> {
        self.same_field(other)?;
        Ok(FieldElement {
            value: self.value ^ other.value,
            field: self.field,
        })
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement, GaloisError> {
        self.same_field(other)?;
        Ok(FieldElement {
            value: self.field.mul_raw(self.value, other.value),
            field: self.field,
        })
    }

    pub fn inv(&self) -> Result<FieldElement, GaloisError> {
        let value = self
            .field
            .inv_raw(self.value)
            .ok_or(GaloisError::DivisionByZero)?;
        Ok(FieldElement {
            value,
            field: self.field,
        })
    }

    pub fn pow(&self, mut e: u64) -> FieldElement {
        let mut base = self.value;
        let mut acc = 1u16;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.field.mul_raw(acc, base);
            }
            base = self.field.mul_raw(base, base);
            e >>= 1;
        }
        FieldElement {
            value: acc,
            field: self.field,
        }
    }
}

/// Product of two elements of the same field.
pub fn gf_mul(a: FieldElement, b: FieldElement) -> Result<FieldElement, GaloisError> {
    a.mul(&b)
}

/// Multiplicative inverse; zero has none.
pub fn gf_inv(a: FieldElement) -> Result<FieldElement, GaloisError> {
    a.inv()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Carry-less multiply then reduce, without tables.
    fn slow_mul(m: u8, a: u16, b: u16) -> u16 {
        let poly = PRIMITIVE_POLYS[m as usize];
        let mut acc: u32 = 0;
        for i in 0..m {
            if b >> i & 1 == 1 {
                acc ^= (a as u32) << i;
            }
        }
        for bit in (m..2 * m).rev() {
            if acc >> bit & 1 == 1 {
                acc ^= poly << (bit - m);
            }
        }
        acc as u16
    }

    #[test]
    fn every_table_polynomial_is_primitive() {
        for m in MIN_EXPONENT..=MAX_EXPONENT {
            let f = Field::new(m).unwrap();
            // Building the tables asserts the generator has full order.
            assert_eq!(f.pow_primitive(f.order() - 1), f.one());
        }
    }

    #[test]
    fn example_field_relation() {
        let f = Field::gf8();
        let w = f.primitive();
        let w2 = w.pow(2);
        // w * w^2 = w^3 = w + 1 -> 0b011
        assert_eq!(gf_mul(w, w2).unwrap().value(), 0b011);
        let w3 = w.pow(3);
        let w5 = w.pow(5);
        assert_eq!(gf_mul(w3, w5).unwrap(), w);
    }

    #[test]
    fn table_mul_matches_carryless_reduction() {
        for m in 2..=5u8 {
            let f = Field::new(m).unwrap();
            for a in 0..f.order() as u16 {
                for b in 0..f.order() as u16 {
                    assert_eq!(f.mul_raw(a, b), slow_mul(m, a, b), "m={m} a={a} b={b}");
                }
            }
        }
        let f = Field::new(16).unwrap();
        for (a, b) in [(0x1234u16, 0xfedcu16), (0xffff, 0xffff), (3, 0x8000)] {
            assert_eq!(f.mul_raw(a, b), slow_mul(16, a, b));
        }
    }

    #[test]
    fn inverses() {
        let f = Field::gf8();
        assert_eq!(gf_inv(f.one()).unwrap(), f.one());
        // brute-force search for the inverse of w
        let w = f.primitive();
        let found = (1..8u16)
            .map(|v| f.elem(v).unwrap())
            .find(|b| w.mul(b).unwrap() == f.one())
            .unwrap();
        assert_eq!(found, w.pow(6));
        assert_eq!(gf_inv(w).unwrap(), found);
        assert_eq!(gf_inv(f.zero()), Err(GaloisError::DivisionByZero));
    }

    #[test]
    fn mixed_fields_rejected() {
        let a = Field::gf8().one();
        let b = Field::new(4).unwrap().one();
        assert!(matches!(gf_mul(a, b), Err(GaloisError::FieldMismatch { .. })));
    }

    #[test]
    fn out_of_range_values_rejected() {
        assert!(Field::gf8().elem(8).is_err());
        assert!(Field::new(1).is_err());
        assert!(Field::new(17).is_err());
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for m in 2..=4u8 {
            let f = Field::new(m).unwrap();
            let q = f.order() as u16;
            for a in 0..q {
                for b in 0..q {
                    assert_eq!(f.mul_raw(a, b), f.mul_raw(b, a));
                    for c in 0..q {
                        assert_eq!(
                            f.mul_raw(f.mul_raw(a, b), c),
                            f.mul_raw(a, f.mul_raw(b, c))
                        );
                        assert_eq!(
                            f.mul_raw(a, b ^ c),
                            f.mul_raw(a, b) ^ f.mul_raw(a, c)
                        );
                    }
                }
            }
        }
    }
}
