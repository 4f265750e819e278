//! Arithmetic in the negacyclic ring `R_q = Z_q[X]/(X^N + 1)`.
//!
//! Coefficients are stored canonically in `[0, q)`. The centered view maps a
//! coefficient `c` to `c` when `c <= floor(q/2)` and to `c - q` otherwise, so
//! centered representatives lie in `(-floor(q/2) - 1, floor(q/2)]` for odd `q`
//! and `(-q/2, q/2]` for even `q`.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Operands at or below this support size take the sparse multiplication path.
const SPARSE_SUPPORT_MAX: usize = 16;

/// A coefficient modulus, always at least 2.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Modulus(BigUint);

impl Modulus {
    pub fn new(value: BigUint) -> Result<Self> {
        if value < BigUint::from(2u32) {
            return Err(Error::InvalidParameter(format!(
                "modulus must be at least 2, got {value}"
            )));
        }
        Ok(Modulus(value))
    }

    pub fn from_u64(value: u64) -> Result<Self> {
        Self::new(BigUint::from(value))
    }

    /// The modulus `2^bits`.
    pub fn pow2(bits: u32) -> Self {
        Modulus(BigUint::one() << bits)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Bit length of the modulus value.
    pub fn bits(&self) -> u64 {
        self.0.bits()
    }

    /// Bytes needed to store one canonical coefficient on the wire.
    pub fn byte_width(&self) -> usize {
        usize::try_from((self.bits() + 7) / 8).expect("modulus width fits usize")
    }

    /// `floor(q/2)`, the largest canonical residue the centered view keeps.
    pub fn half(&self) -> BigUint {
        &self.0 >> 1
    }

    /// Centered representative of a canonical residue.
    pub fn centered(&self, c: &BigUint) -> BigInt {
        if *c <= self.half() {
            BigInt::from(c.clone())
        } else {
            BigInt::from(c.clone()) - BigInt::from(self.0.clone())
        }
    }

    /// Canonical residue of an arbitrary signed integer.
    pub fn reduce_signed(&self, v: &BigInt) -> BigUint {
        v.mod_floor(&BigInt::from(self.0.clone()))
            .to_biguint()
            .expect("mod_floor result is non-negative")
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An element of `R_q` with canonical coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct RingElement {
    coeffs: Vec<BigUint>,
    modulus: Modulus,
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingElement(n={}, q={}, [", self.n(), self.modulus)?;
        for (i, c) in self.coeffs.iter().take(8).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        if self.n() > 8 {
            write!(f, ", ...")?;
        }
        write!(f, "])")
    }
}

impl RingElement {
    fn new_unchecked(coeffs: Vec<BigUint>, modulus: Modulus) -> Self {
        debug_assert!(coeffs.len().is_power_of_two());
        RingElement { coeffs, modulus }
    }

    /// The zero element of dimension `n`.
    pub fn zero(n: usize, modulus: &Modulus) -> Self {
        assert!(n.is_power_of_two(), "ring dimension must be a power of two");
        RingElement::new_unchecked(vec![BigUint::zero(); n], modulus.clone())
    }

    /// The constant polynomial `v` reduced into `[0, q)`.
    pub fn constant(v: &BigInt, n: usize, modulus: &Modulus) -> Self {
        let mut e = RingElement::zero(n, modulus);
        e.coeffs[0] = modulus.reduce_signed(v);
        e
    }

    /// The monomial `c * X^degree` with `degree < n`.
    pub fn monomial(c: &BigInt, degree: usize, n: usize, modulus: &Modulus) -> Self {
        assert!(degree < n, "monomial degree must be below the dimension");
        let mut e = RingElement::zero(n, modulus);
        e.coeffs[degree] = modulus.reduce_signed(c);
        e
    }

    /// Builds an element from canonical coefficients, rejecting any `>= q`.
    pub fn from_canonical(coeffs: Vec<BigUint>, modulus: &Modulus) -> Result<Self> {
        if !coeffs.len().is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "ring dimension {} is not a power of two",
                coeffs.len()
            )));
        }
        if let Some(c) = coeffs.iter().find(|c| *c >= modulus.value()) {
            return Err(Error::InvalidParameter(format!(
                "coefficient {c} is not canonical modulo {modulus}"
            )));
        }
        Ok(RingElement::new_unchecked(coeffs, modulus.clone()))
    }

    /// Builds an element from signed coefficients, reducing each mod `q`.
    /// Shorter slices are zero-padded up to `n`.
    pub fn from_signed(coeffs: &[BigInt], n: usize, modulus: &Modulus) -> Self {
        assert!(n.is_power_of_two(), "ring dimension must be a power of two");
        assert!(coeffs.len() <= n, "too many coefficients for dimension");
        let mut out = vec![BigUint::zero(); n];
        for (o, c) in out.iter_mut().zip(coeffs) {
            *o = modulus.reduce_signed(c);
        }
        RingElement::new_unchecked(out, modulus.clone())
    }

    /// Convenience constructor over machine integers.
    pub fn from_i64s(coeffs: &[i64], n: usize, modulus: &Modulus) -> Self {
        let signed: Vec<BigInt> = coeffs.iter().map(|&c| BigInt::from(c)).collect();
        RingElement::from_signed(&signed, n, modulus)
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn coeff(&self, i: usize) -> &BigUint {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    /// Replaces coefficient `i`, keeping the canonical invariant.
    pub fn set_coeff(&mut self, i: usize, c: BigUint) -> Result<()> {
        if &c >= self.modulus.value() {
            return Err(Error::InvalidParameter(format!(
                "coefficient {c} is not canonical modulo {}",
                self.modulus
            )));
        }
        self.coeffs[i] = c;
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Number of non-zero coefficients.
    pub fn support(&self) -> usize {
        self.coeffs.iter().filter(|c| !c.is_zero()).count()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch(self.n(), other.n()));
        }
        if self.modulus != other.modulus {
            return Err(Error::modulus_mismatch(&self.modulus, &other.modulus));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let q = self.modulus.value();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| {
                let mut s = a + b;
                if &s >= q {
                    s -= q;
                }
                s
            })
            .collect();
        Ok(RingElement::new_unchecked(coeffs, self.modulus.clone()))
    }

    pub fn neg(&self) -> Self {
        let q = self.modulus.value();
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| if c.is_zero() { BigUint::zero() } else { q - c })
            .collect();
        RingElement::new_unchecked(coeffs, self.modulus.clone())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let q = self.modulus.value();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| if a >= b { a - b } else { q - (b - a) })
            .collect();
        Ok(RingElement::new_unchecked(coeffs, self.modulus.clone()))
    }

    /// Negacyclic product. Dispatches to a sparse scan when one operand has
    /// small support and to Kronecker-substitution packing otherwise; both
    /// paths are checked against [`RingElement::mul_schoolbook`] in tests.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let sa = self.support();
        let sb = other.support();
        let coeffs = if sa.min(sb) <= SPARSE_SUPPORT_MAX {
            if sa <= sb {
                mul_sparse(&self.coeffs, &other.coeffs, &self.modulus)
            } else {
                mul_sparse(&other.coeffs, &self.coeffs, &self.modulus)
            }
        } else {
            mul_kronecker(&self.coeffs, &other.coeffs, &self.modulus)
        };
        Ok(RingElement::new_unchecked(coeffs, self.modulus.clone()))
    }

    /// Reference negacyclic product: the plain O(N^2) double loop with exact
    /// integer accumulation and a single final reduction.
    pub fn mul_schoolbook(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let n = self.n();
        let mut acc = vec![BigInt::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let prod = BigInt::from(a * b);
                let k = i + j;
                if k >= n {
                    acc[k - n] -= prod;
                } else {
                    acc[k] += prod;
                }
            }
        }
        let coeffs = acc.iter().map(|v| self.modulus.reduce_signed(v)).collect();
        Ok(RingElement::new_unchecked(coeffs, self.modulus.clone()))
    }

    /// Product of a constant `c` with `a`; identical to [`RingElement::mul`].
    pub fn scalar_mul(&self, a: &Self) -> Result<Self> {
        self.mul(a)
    }

    /// Multiplies every coefficient by the integer `k` modulo `q`.
    pub fn mul_uint(&self, k: &BigUint) -> Self {
        let q = self.modulus.value();
        let coeffs = self.coeffs.iter().map(|c| (c * k) % q).collect();
        RingElement::new_unchecked(coeffs, self.modulus.clone())
    }

    /// Centered representatives of all coefficients.
    pub fn centered(&self) -> Vec<BigInt> {
        let half = self.modulus.half();
        let q = BigInt::from(self.modulus.value().clone());
        self.coeffs
            .iter()
            .map(|c| {
                if *c <= half {
                    BigInt::from(c.clone())
                } else {
                    BigInt::from(c.clone()) - &q
                }
            })
            .collect()
    }

    /// Largest centered coefficient magnitude.
    pub fn inf_norm(&self) -> BigUint {
        self.centered()
            .into_iter()
            .map(|v| v.abs().to_biguint().expect("abs is non-negative"))
            .max()
            .unwrap_or_else(BigUint::zero)
    }

    /// Rounds `(p/q) * v` per coefficient over centered representatives, with
    /// ties toward plus infinity. Requires the target modulus to divide `q`.
    pub fn round_scale(&self, target: &Modulus) -> Result<Self> {
        let (k, rem) = self.modulus.value().div_rem(target.value());
        if !rem.is_zero() {
            return Err(Error::IndivisibleModulus(
                target.to_string(),
                self.modulus.to_string(),
            ));
        }
        let k = BigInt::from(k);
        let two_k = &k << 1;
        let coeffs = self
            .centered()
            .into_iter()
            .map(|v| {
                let rounded = ((v << 1usize) + &k).div_floor(&two_k);
                target.reduce_signed(&rounded)
            })
            .collect();
        Ok(RingElement::new_unchecked(coeffs, target.clone()))
    }

    /// Centered lift followed by canonical reduction into the target modulus.
    pub fn reduce_to(&self, target: &Modulus) -> Self {
        let coeffs = self
            .centered()
            .into_iter()
            .map(|v| target.reduce_signed(&v))
            .collect();
        RingElement::new_unchecked(coeffs, target.clone())
    }
}

/// A length-two vector over the ring: key vectors, key shares, PRF outputs,
/// and memory-share lanes all have this shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingPair(pub RingElement, pub RingElement);

impl RingPair {
    pub fn zero(n: usize, modulus: &Modulus) -> Self {
        RingPair(RingElement::zero(n, modulus), RingElement::zero(n, modulus))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(RingPair(self.0.add(&other.0)?, self.1.add(&other.1)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(RingPair(self.0.sub(&other.0)?, self.1.sub(&other.1)?))
    }

    /// Multiplies both components by the same ring element.
    pub fn mul_element(&self, c: &RingElement) -> Result<Self> {
        Ok(RingPair(c.mul(&self.0)?, c.mul(&self.1)?))
    }
}

fn ceil_log2(n: u64) -> u32 {
    debug_assert!(n >= 1);
    64 - (n - 1).leading_zeros()
}

/// Negacyclic product where `sparse` has few non-zero coefficients: walks the
/// support of `sparse` against all of `dense`.
fn mul_sparse(sparse: &[BigUint], dense: &[BigUint], modulus: &Modulus) -> Vec<BigUint> {
    let n = sparse.len();
    let mut acc = vec![BigInt::zero(); n];
    for (i, c) in sparse.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        for (j, d) in dense.iter().enumerate() {
            if d.is_zero() {
                continue;
            }
            let prod = BigInt::from(c * d);
            let k = i + j;
            if k >= n {
                acc[k - n] -= prod;
            } else {
                acc[k] += prod;
            }
        }
    }
    acc.iter().map(|v| modulus.reduce_signed(v)).collect()
}

/// Negacyclic product via Kronecker substitution: packs both operands into
/// single large integers with non-overlapping coefficient slots, multiplies
/// once, then folds the 2N-slot linear convolution back with `X^N = -1`.
fn mul_kronecker(a: &[BigUint], b: &[BigUint], modulus: &Modulus) -> Vec<BigUint> {
    let n = a.len();
    let q = modulus.value();
    let coeff_bits = (q - 1u32).bits();
    // Every slot of the linear convolution is a sum of at most N coefficient
    // products, so it fits in 2*coeff_bits + ceil(lg N) bits; one spare bit
    // and byte alignment keep the slot extraction a plain byte slice.
    let slot_bits = 2 * coeff_bits + u64::from(ceil_log2(n as u64)) + 1;
    let slot_bytes = usize::try_from((slot_bits + 7) / 8).expect("slot width fits usize");

    let pack = |coeffs: &[BigUint]| -> BigUint {
        let mut buf = vec![0u8; n * slot_bytes];
        for (i, c) in coeffs.iter().enumerate() {
            let bytes = c.to_bytes_le();
            buf[i * slot_bytes..i * slot_bytes + bytes.len()].copy_from_slice(&bytes);
        }
        BigUint::from_bytes_le(&buf)
    };

    let prod = pack(a) * pack(b);
    let prod_bytes = prod.to_bytes_le();
    let window = |k: usize| -> BigUint {
        let lo = k * slot_bytes;
        if lo >= prod_bytes.len() {
            return BigUint::zero();
        }
        let hi = (lo + slot_bytes).min(prod_bytes.len());
        BigUint::from_bytes_le(&prod_bytes[lo..hi])
    };

    (0..n)
        .map(|k| {
            let lo = window(k) % q;
            let hi = window(k + n) % q;
            if lo >= hi {
                lo - hi
            } else {
                q - (hi - lo)
            }
        })
        .collect()
}
