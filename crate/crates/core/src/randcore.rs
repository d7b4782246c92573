//! Uniform random bits, uniform integers and exact Bernoulli draws.
//!
//! Every sampler in the crate consumes randomness only through [`BitSource`].
//! A source is single-owner: give each thread its own.

use rand::rngs::OsRng;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rug::integer::Order;
use rug::Integer;

use crate::error::{Error, Result};
use crate::numeric::Rational;

/// A metered stream of independent unbiased bits.
pub trait BitSource {
    fn next_bit(&mut self) -> bool;

    /// Total number of bits drawn so far.
    fn bits_consumed(&self) -> u64;

    /// `k` bits as a nonnegative integer below `2^k`.
    fn next_bits(&mut self, k: u32) -> Integer {
        let mut v = Integer::new();
        for i in 0..k {
            if self.next_bit() {
                v.set_bit(i, true);
            }
        }
        v
    }
}

/// Bit source over any `RngCore`, drawing whole words and metering exactly.
pub struct BufferedBits<R> {
    rng: R,
    buf: u64,
    avail: u32,
    consumed: u64,
}

impl<R: RngCore> BufferedBits<R> {
    pub fn new(rng: R) -> Self {
        BufferedBits {
            rng,
            buf: 0,
            avail: 0,
            consumed: 0,
        }
    }

    fn take(&mut self, r: u32) -> u64 {
        debug_assert!(r > 0 && r < 64);
        if self.avail < r {
            let fresh = self.rng.next_u64();
            let have = self.avail;
            let need = r - have;
            let low = self.buf & ((1u64 << have) - 1);
            let out = low | ((fresh & ((1u64 << need) - 1)) << have);
            self.buf = fresh >> need;
            self.avail = 64 - need;
            return out;
        }
        let out = self.buf & ((1u64 << r) - 1);
        self.buf >>= r;
        self.avail -= r;
        out
    }
}

impl<R: RngCore> BitSource for BufferedBits<R> {
    fn next_bit(&mut self) -> bool {
        self.consumed += 1;
        self.take(1) == 1
    }

    fn bits_consumed(&self) -> u64 {
        self.consumed
    }

    fn next_bits(&mut self, k: u32) -> Integer {
        self.consumed += u64::from(k);
        let mut words = Vec::with_capacity(k as usize / 64 + 1);
        for _ in 0..k / 64 {
            words.push(self.rng.next_u64());
        }
        if !k.is_multiple_of(64) {
            words.push(self.take(k % 64));
        }
        Integer::from_digits(&words, Order::Lsf)
    }
}

/// OS entropy read in blocks to amortize system calls.
pub struct OsBlockRng {
    block: [u64; 64],
    idx: usize,
}

impl Default for OsBlockRng {
    fn default() -> Self {
        OsBlockRng {
            block: [0; 64],
            idx: 64,
        }
    }
}

impl RngCore for OsBlockRng {
    fn next_u32(&mut self) -> u32 {
        self.next_u64() as u32
    }

    fn next_u64(&mut self) -> u64 {
        if self.idx == self.block.len() {
            let mut bytes = [0u8; 512];
            OsRng.fill_bytes(&mut bytes);
            for (w, c) in self.block.iter_mut().zip(bytes.chunks_exact(8)) {
                *w = u64::from_le_bytes(c.try_into().expect("8-byte chunk"));
            }
            self.idx = 0;
        }
        self.idx += 1;
        self.block[self.idx - 1]
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for c in dest.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            c.copy_from_slice(&w[..c.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// Production source backed by the operating system CSPRNG.
pub type OsBitSource = BufferedBits<OsBlockRng>;

pub fn os_source() -> OsBitSource {
    BufferedBits::new(OsBlockRng::default())
}

/// Deterministic ChaCha20 stream. FOR TESTS ONLY: anyone who knows the seed
/// can reproduce every draw.
pub type SeededBitSource = BufferedBits<ChaCha20Rng>;

pub fn seeded_source(seed: u64) -> SeededBitSource {
    BufferedBits::new(ChaCha20Rng::seed_from_u64(seed))
}

/// Uniform draw from `{0, ..., n-1}` by rejection on `bitlen(n-1)` bits.
pub fn uniform_below<S: BitSource + ?Sized>(src: &mut S, n: &Integer) -> Result<Integer> {
    if *n < 1 {
        return Err(Error::Domain(format!(
            "uniform_below needs n >= 1, got {n}"
        )));
    }
    Ok(uniform_below_unchecked(src, n))
}

pub(crate) fn uniform_below_unchecked<S: BitSource + ?Sized>(src: &mut S, n: &Integer) -> Integer {
    let k = Integer::from(n - 1u32).significant_bits();
    loop {
        let v = src.next_bits(k);
        if v < *n {
            return v;
        }
    }
}

/// Returns true with probability exactly `num/den`, for `0 <= num <= den`, `den >= 1`.
pub(crate) fn bernoulli_ratio<S: BitSource + ?Sized>(
    src: &mut S,
    num: &Integer,
    den: &Integer,
) -> bool {
    if *num == *den {
        return true;
    }
    if *num == 0 {
        return false;
    }
    uniform_below_unchecked(src, den) < *num
}

/// Returns true with probability exactly `p`.
pub fn bernoulli_rational<S: BitSource + ?Sized>(src: &mut S, p: &Rational) -> Result<bool> {
    if p.is_negative() || *p > Rational::one() {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(bernoulli_ratio(src, p.numer(), p.denom()))
}


#[cfg(test)]
mod tests {
    use super::testing::enumerate;
    use super::*;

    fn band(p: f64, n: f64) -> f64 {
        3.0 * (p * (1.0 - p) / n).sqrt()
    }

    #[test]
    fn singleton_and_domain() {
        let mut src = seeded_source(1);
        for _ in 0..100 {
            assert_eq!(uniform_below(&mut src, &Integer::from(1)).unwrap(), 0);
        }
        assert_eq!(src.bits_consumed(), 0);
        assert!(uniform_below(&mut src, &Integer::from(0)).is_err());
        assert!(bernoulli_rational(&mut src, &"3/2".parse().unwrap()).is_err());
        assert!(bernoulli_rational(&mut src, &"-1/2".parse().unwrap()).is_err());
    }

    #[test]
    fn uniform_exact_on_bit_tree() {
        // rejection depth 3 on bitlen(n-1) bits per round
        for n in 1u32..=8 {
            let k = Integer::from(n - 1).significant_bits() as usize;
            let depth = (3 * k).max(1);
            let dist = enumerate(depth, |s| uniform_below(s, &Integer::from(n)).unwrap());
            assert_eq!(dist.len(), n as usize);
            let masses: Vec<&Integer> = dist.values().collect();
            for m in &masses {
                assert_eq!(*m, masses[0], "n={n}");
            }
            // mass lost to unfinished strings is the same for every outcome,
            // so conditional probabilities are exactly 1/n
        }
    }

    #[test]
    fn bernoulli_exact_on_bit_tree() {
        for (p, depth) in [("0", 4), ("1/4", 2), ("1/3", 6), ("1/2", 1), ("1", 4)] {
            let p: Rational = p.parse().unwrap();
            let dist = enumerate(depth, |s| bernoulli_rational(s, &p).unwrap());
            let one = dist.get(&true).cloned().unwrap_or_default();
            let total: Integer = dist.values().sum();
            // P(true | finished) must equal p exactly
            assert_eq!(
                Integer::from(&one * p.denom()),
                Integer::from(&total * p.numer()),
                "p={p}"
            );
        }
    }

    #[test]
    fn uniform_frequencies() {
        let mut src = seeded_source(11);
        let n = 1_000_000;
        let mut ones = 0u32;
        let mut cells = [0u32; 6];
        for _ in 0..n {
            ones += uniform_below(&mut src, &Integer::from(2))
                .unwrap()
                .to_u32()
                .unwrap();
            cells[uniform_below(&mut src, &Integer::from(6))
                .unwrap()
                .to_usize()
                .unwrap()] += 1;
        }
        let f = f64::from(ones) / n as f64;
        assert!((f - 0.5).abs() < band(0.5, n as f64));
        let e = n as f64 / 6.0;
        let chi2: f64 = cells.iter().map(|&c| (f64::from(c) - e).powi(2) / e).sum();
        // 99.9% point of chi-squared with 5 degrees of freedom
        assert!(chi2 < 20.515, "chi2={chi2}");
    }

    #[test]
    fn bernoulli_frequencies() {
        let mut src = seeded_source(12);
        let n = 1_000_000;
        let third: Rational = "1/3".parse().unwrap();
        let two_thirds: Rational = "2/3".parse().unwrap();
        let (mut a, mut b) = (0u32, 0u32);
        for _ in 0..n {
            a += bernoulli_rational(&mut src, &third).unwrap() as u32;
            b += bernoulli_rational(&mut src, &two_thirds).unwrap() as u32;
        }
        let fa = f64::from(a) / n as f64;
        let fb = f64::from(b) / n as f64;
        assert!((fa - 1.0 / 3.0).abs() < band(1.0 / 3.0, n as f64));
        assert!((fa + fb - 1.0).abs() < 2.0 * band(1.0 / 3.0, n as f64));
        assert!(!bernoulli_rational(&mut src, &Rational::zero()).unwrap());
        assert!(bernoulli_rational(&mut src, &Rational::one()).unwrap());
    }

    #[test]
    fn expected_bits_within_twice_bitlen() {
        let mut src = seeded_source(3);
        let n = Integer::from(1025); // worst case for rejection
        let draws = 20_000u64;
        for _ in 0..draws {
            uniform_below(&mut src, &n).unwrap();
        }
        let per = src.bits_consumed() as f64 / draws as f64;
        // rounds are geometric with success 1025/2048
        let p = 1025.0 / 2048.0;
        let expected = 11.0 / p;
        assert!(expected <= 2.0 * 11.0);
        let sd = 11.0 * ((1.0 - p) / (p * p) / draws as f64).sqrt();
        assert!((per - expected).abs() < 4.0 * sd, "{per}");
    }

    #[test]
    fn word_and_bit_paths_agree_on_metering() {
        let mut src = seeded_source(5);
        src.next_bits(130);
        src.next_bit();
        src.next_bits(7);
        assert_eq!(src.bits_consumed(), 138);
        let mut os = os_source();
        let v = os.next_bits(200);
        assert!(v.significant_bits() <= 200);
    }
}
