//! Seeded randomness, the secret and noise samplers, and the PRF that
//! re-randomizes memory shares.
//!
//! All distributions are driven by ChaCha20 streams, so every consumer is
//! reproducible from a 32-byte seed. Uniform residues are drawn with 64 bits
//! of headroom beyond the modulus width before reduction, which keeps the
//! statistical bias below `2^-64`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ring::{Modulus, RingElement};

/// Seeded source for every random choice in the library.
pub struct RngHandle {
    rng: ChaCha20Rng,
}

impl RngHandle {
    pub fn from_seed(seed: [u8; 32]) -> Self {
        RngHandle {
            rng: ChaCha20Rng::from_seed(seed),
        }
    }

    /// Fresh handle from operating-system entropy.
    pub fn from_entropy() -> Self {
        RngHandle {
            rng: ChaCha20Rng::from_entropy(),
        }
    }

    /// Splits off an independent child stream.
    pub fn fork(&mut self) -> Self {
        let mut seed = [0u8; 32];
        self.rng.fill_bytes(&mut seed);
        RngHandle::from_seed(seed)
    }

    pub fn fill_bytes(&mut self, buf: &mut [u8]) {
        self.rng.fill_bytes(buf);
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw from `[0, n)` by rejection; exact for every `n >= 1`.
    pub fn below_u64(&mut self, n: u64) -> u64 {
        uniform_below_u64(&mut self.rng, n)
    }

    /// Uniform residue in `[0, q)` with bias below `2^-64`.
    pub fn below(&mut self, q: &BigUint) -> BigUint {
        uniform_below(&mut self.rng, q)
    }
}

fn uniform_below_u64(rng: &mut ChaCha20Rng, n: u64) -> u64 {
    debug_assert!(n >= 1);
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % n;
        }
    }
}

fn uniform_below(rng: &mut ChaCha20Rng, q: &BigUint) -> BigUint {
    let nbytes = usize::try_from((q.bits() + 64 + 7) / 8).expect("modulus width fits usize");
    let mut buf = vec![0u8; nbytes];
    rng.fill_bytes(&mut buf);
    BigUint::from_bytes_le(&buf) % q
}

/// Uniform element of `R_q`.
pub fn sample_uniform_ring(n: usize, modulus: &Modulus, rng: &mut RngHandle) -> RingElement {
    let coeffs = (0..n).map(|_| rng.below(modulus.value())).collect();
    RingElement::from_canonical(coeffs, modulus).expect("residues below the modulus")
}

/// Sparse ternary secret: exactly `h_sk` non-zero coefficients, each `+-1`,
/// on a support chosen uniformly among all `h_sk`-subsets.
pub fn sample_sk(
    n: usize,
    h_sk: usize,
    modulus: &Modulus,
    rng: &mut RngHandle,
) -> Result<RingElement> {
    if h_sk == 0 || h_sk > n {
        return Err(Error::InvalidParameter(format!(
            "secret weight {h_sk} out of range for dimension {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut element = RingElement::zero(n, modulus);
    let minus_one = modulus.value() - 1u32;
    for i in 0..h_sk {
        let j = i + rng.below_u64((n - i) as u64) as usize;
        idx.swap(i, j);
        let coeff = if rng.next_u64() & 1 == 0 {
            BigUint::from(1u32)
        } else {
            minus_one.clone()
        };
        element.set_coeff(idx[i], coeff).expect("canonical value");
    }
    Ok(element)
}

/// Rounded Gaussian noise with standard deviation `sigma`, hard-bounded at
/// `8 * sigma` by construction of the sampling table.
pub fn sample_err(
    n: usize,
    sigma: f64,
    modulus: &Modulus,
    rng: &mut RngHandle,
) -> Result<RingElement> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise parameter must be positive, got {sigma}"
        )));
    }
    let table = gauss_table(sigma);
    let mut element = RingElement::zero(n, modulus);
    for i in 0..n {
        let v = table.draw(&mut rng.rng);
        if v != 0 {
            let coeff = modulus.reduce_signed(&v.into());
            element.set_coeff(i, coeff).expect("canonical value");
        }
    }
    Ok(element)
}

/// Key for the share re-randomization PRF.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrfKey(pub [u8; 16]);

impl PrfKey {
    pub fn random(rng: &mut RngHandle) -> Self {
        let mut k = [0u8; 16];
        rng.fill_bytes(&mut k);
        PrfKey(k)
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }
}

/// Expands `PRF(key, id)` into a pair of elements of `R_q`.
///
/// The instantiation is a ChaCha20 keystream keyed per `(key, id)` through a
/// SHA-256 domain-separated derivation; each coefficient reduces 64 surplus
/// bits so the output is within `2^-64` of uniform.
pub fn prf_expand(
    key: &PrfKey,
    id: u64,
    n: usize,
    modulus: &Modulus,
) -> (RingElement, RingElement) {
    let mut hasher = Sha256::new();
    hasher.update(b"2svhss:prf:v1");
    hasher.update(key.as_bytes());
    hasher.update(id.to_le_bytes());
    let seed: [u8; 32] = hasher.finalize().into();
    let mut stream = ChaCha20Rng::from_seed(seed);
    let q = modulus.value();
    let mut draw = || {
        let coeffs = (0..n).map(|_| uniform_below(&mut stream, q)).collect();
        RingElement::from_canonical(coeffs, modulus).expect("residues below the modulus")
    };
    let first = draw();
    let second = draw();
    (first, second)
}

/// Inverse-CDF table for the rounded, truncated Gaussian. Thresholds are
/// 63-bit integers, so sampling is pure integer comparison.
struct GaussTable {
    max_dev: i64,
    /// Exclusive cumulative upper bounds for all buckets but the last.
    cum: Vec<u64>,
}

impl GaussTable {
    fn draw(&self, rng: &mut ChaCha20Rng) -> i64 {
        let x = rng.next_u64() >> 1;
        let idx = self.cum.partition_point(|&c| c <= x);
        idx as i64 - self.max_dev
    }
}

fn gauss_table(sigma: f64) -> Arc<GaussTable> {
    static TABLES: OnceLock<Mutex<HashMap<u64, Arc<GaussTable>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = tables.lock().expect("sampler table lock");
    guard
        .entry(sigma.to_bits())
        .or_insert_with(|| Arc::new(build_gauss_table(sigma)))
        .clone()
}

fn build_gauss_table(sigma: f64) -> GaussTable {
    let max_dev = (8.0 * sigma).floor() as i64;
    let masses: Vec<f64> = (-max_dev..=max_dev)
        .map(|v| gauss_mass(v as f64 - 0.5, v as f64 + 0.5, sigma))
        .collect();
    let total: f64 = masses.iter().sum();
    let target = 1u128 << 63;
    let mut weights: Vec<u128> = masses
        .iter()
        .map(|m| ((m / total) * target as f64) as u128)
        .collect();
    // Pin the weights to sum exactly to 2^63; the center bucket is the
    // largest by orders of magnitude and absorbs the float rounding slack.
    let center = max_dev as usize;
    let sum: u128 = weights.iter().sum();
    if sum <= target {
        weights[center] += target - sum;
    } else {
        weights[center] -= sum - target;
    }
    let mut cum = Vec::with_capacity(weights.len().saturating_sub(1));
    let mut acc = 0u128;
    for w in &weights[..weights.len() - 1] {
        acc += w;
        cum.push(u64::try_from(acc).expect("cumulative weight below 2^63"));
    }
    GaussTable { max_dev, cum }
}

/// Composite Simpson integral of the Gaussian density kernel over `[a, b]`.
fn gauss_mass(a: f64, b: f64, sigma: f64) -> f64 {
    const PANELS: usize = 64;
    let h = (b - a) / PANELS as f64;
    let f = |t: f64| portable_exp(-t * t / (2.0 * sigma * sigma));
    let mut s = f(a) + f(b);
    for i in 1..PANELS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// `exp` built from IEEE-defined operations only (+, -, *, /, round), so the
/// sampler table is bit-identical on every conforming platform.
fn portable_exp(x: f64) -> f64 {
    const LN2: f64 = 0.693_147_180_559_945_3;
    // Saturate outside the representable range before scaling: exp(-746)
    // underflows even the subnormals and exp(710) overflows f64.
    if x < -746.0 {
        return 0.0;
    }
    if x > 710.0 {
        return f64::INFINITY;
    }
    let k = (x / LN2).round();
    let r = x - k * LN2;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for i in 1..30 {
        term = term * r / (i as f64);
        sum += term;
    }
    let mut scale = 1.0f64;
    let mut k = k as i64;
    while k > 0 {
        scale *= 2.0;
        k -= 1;
    }
    while k < 0 {
        scale *= 0.5;
        k += 1;
    }
    sum * scale
}
