//! Truncated Witt coefficient rings: Galois rings GR(p^m, r) = W(F_{p^r}) / p^m,
//! realized as (Z/p^m)[x] / f(x) for a fixed monic f reducing to a primitive
//! polynomial over F_p.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported residue degree.
pub const MAX_DEGREE: usize = 8;

/// Bound on p^m so that products of two residues fit comfortably in u64.
const MAX_MODULUS: u64 = 1 << 31;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// An element of a Galois ring, stored as its coefficient vector in the power
/// basis 1, x, ..., x^{r-1}. Only the first `r` slots are meaningful.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default, PartialOrd, Ord)]
pub struct RingElement {
    c: [u64; MAX_DEGREE],
}

impl RingElement {
    pub fn coeffs(&self, r: usize) -> &[u64] {
        &self.c[..r]
    }

    /// Constant coefficient; the whole element when r = 1.
    pub fn constant(&self) -> u64 {
        self.c[0]
    }
}

/// The ring GR(p^m, r).
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct CoeffRing {
    p: u64,
    m: u32,
    r: usize,
    pm: u64,
    /// Low coefficients c_0, ..., c_{r-1} of the monic modulus
    /// x^r + c_{r-1} x^{r-1} + ... + c_0, as integers in [0, p).
    modulus: Vec<u64>,
}

/// Construct GR(p^m, r). Rejects p = 2, composite p and m = 0.
pub fn ring_make(p: u64, m: u32, r: usize) -> Result<CoeffRing> {
    CoeffRing::new(p, m, r)
}

impl CoeffRing {
    pub fn new(p: u64, m: u32, r: usize) -> Result<Self> {
        if p == 2 {
            return Err(Error::InvalidRing("p = 2 is not supported".into()));
        }
        if !is_prime(p) {
            return Err(Error::InvalidRing(format!("{p} is not prime")));
        }
        if m == 0 {
            return Err(Error::InvalidRing("precision m must be at least 1".into()));
        }
        if r == 0 || r > MAX_DEGREE {
            return Err(Error::InvalidRing(format!("residue degree must lie in 1..={MAX_DEGREE}")));
        }
        let pm =
            p.checked_pow(m).filter(|&v| v <= MAX_MODULUS).ok_or_else(|| Error::InvalidRing(format!("{p}^{m} exceeds 2^31")))?;
        let modulus = primitive_modulus(p, r);
        Ok(CoeffRing { p, m, r, pm, modulus })
    }

    /// Same ring with a caller-chosen modulus (low coefficients). The reduction
    /// mod p must be irreducible.
    pub fn with_modulus(p: u64, m: u32, modulus: &[u64]) -> Result<Self> {
        let mut ring = CoeffRing::new(p, m, modulus.len())?;
        let low: Vec<u64> = modulus.iter().map(|&c| c % p).collect();
        if !is_irreducible_mod_p(p, &low) {
            return Err(Error::InvalidRing("modulus is reducible mod p".into()));
        }
        ring.modulus = modulus.iter().map(|&c| c % ring.pm).collect();
        Ok(ring)
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn precision(&self) -> u32 {
        self.m
    }
    pub fn degree(&self) -> usize {
        self.r
    }
    /// p^m.
    pub fn modulus_value(&self) -> u64 {
        self.pm
    }
    pub fn modulus_coeffs(&self) -> &[u64] {
        &self.modulus
    }
    /// Number of elements, p^{m r}, when it fits in u128.
    pub fn order(&self) -> u128 {
        (self.pm as u128).pow(self.r as u32)
    }
    /// Size of the residue field, p^r.
    pub fn residue_size(&self) -> u64 {
        self.p.pow(self.r as u32)
    }
    /// |R^×| = p^{(m-1) r} (p^r - 1).
    pub fn unit_count(&self) -> u128 {
        let pr = self.residue_size() as u128;
        pr.pow(self.m - 1) * (pr - 1)
    }

    /// The ring at lower precision m' <= m with the same modulus.
    pub fn reduced(&self, m2: u32) -> Result<CoeffRing> {
        if m2 == 0 || m2 > self.m {
            return Err(Error::Domain(format!("cannot reduce precision {} to {m2}", self.m)));
        }
        let pm = self.p.pow(m2);
        Ok(CoeffRing { p: self.p, m: m2, r: self.r, pm, modulus: self.modulus.iter().map(|&c| c % pm).collect() })
    }

    /// The ring at higher precision with the same integer modulus.
    pub fn raised(&self, m2: u32) -> Result<CoeffRing> {
        let mut ring = CoeffRing::new(self.p, m2, self.r)?;
        ring.modulus = self.modulus.clone();
        Ok(ring)
    }

    /// The residue field F_{p^r} = R / p.
    pub fn residue_field(&self) -> CoeffRing {
        self.reduced(1).expect("precision is at least 1")
    }

    pub fn zero(&self) -> RingElement {
        RingElement::default()
    }

    pub fn one(&self) -> RingElement {
        self.from_int(1)
    }

    pub fn from_int(&self, n: i64) -> RingElement {
        let mut e = RingElement::default();
        e.c[0] = n.rem_euclid(self.pm as i64) as u64;
        e
    }

    pub fn from_u64(&self, n: u64) -> RingElement {
        let mut e = RingElement::default();
        e.c[0] = n % self.pm;
        e
    }

    /// Element from its power-basis coefficients (reduced mod p^m).
    pub fn elem(&self, coeffs: &[i64]) -> Result<RingElement> {
        if coeffs.len() > self.r {
            return Err(Error::Domain(format!("{} coefficients given for degree {}", coeffs.len(), self.r)));
        }
        let mut e = RingElement::default();
        for (i, &c) in coeffs.iter().enumerate() {
            e.c[i] = c.rem_euclid(self.pm as i64) as u64;
        }
        Ok(e)
    }

    /// The class of x in the power basis (the chosen generator).
    pub fn generator(&self) -> RingElement {
        if self.r == 1 {
            // x = -c_0 when the modulus is linear.
            return self.neg(&self.from_u64(self.modulus[0]));
        }
        let mut e = RingElement::default();
        e.c[1] = 1;
        e
    }

    pub fn is_zero(&self, a: &RingElement) -> bool {
        a.c[..self.r].iter().all(|&c| c == 0)
    }

    pub fn is_one(&self, a: &RingElement) -> bool {
        *a == self.one()
    }

    pub fn add(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let mut e = RingElement::default();
        for i in 0..self.r {
            let s = a.c[i] + b.c[i];
            e.c[i] = if s >= self.pm { s - self.pm } else { s };
        }
        e
    }

    pub fn sub(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let mut e = RingElement::default();
        for i in 0..self.r {
            e.c[i] = if a.c[i] >= b.c[i] { a.c[i] - b.c[i] } else { a.c[i] + self.pm - b.c[i] };
        }
        e
    }

    pub fn neg(&self, a: &RingElement) -> RingElement {
        self.sub(&self.zero(), a)
    }

    pub fn mul(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let pm = self.pm;
        if self.r == 1 {
            let mut e = RingElement::default();
            e.c[0] = a.c[0] * b.c[0] % pm;
            return e;
        }
        let r = self.r;
        let mut prod = [0u64; 2 * MAX_DEGREE];
        for i in 0..r {
            if a.c[i] == 0 {
                continue;
            }
            for j in 0..r {
                prod[i + j] = (prod[i + j] + a.c[i] * b.c[j]) % pm;
            }
        }
        // x^r = -sum c_k x^k
        for d in (r..2 * r - 1).rev() {
            let top = prod[d];
            if top == 0 {
                continue;
            }
            prod[d] = 0;
            for k in 0..r {
                let sub = top * self.modulus[k] % pm;
                let idx = d - r + k;
                prod[idx] = (prod[idx] + pm - sub) % pm;
            }
        }
        let mut e = RingElement::default();
        e.c[..r].copy_from_slice(&prod[..r]);
        e
    }

    pub fn scale(&self, a: &RingElement, n: i64) -> RingElement {
        self.mul(a, &self.from_int(n))
    }

    pub fn pow(&self, a: &RingElement, mut e: u128) -> RingElement {
        let mut base = *a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// p-adic valuation in {0, ..., m}; v(0) = m.
    pub fn valuation(&self, a: &RingElement) -> u32 {
        let mut v = self.m;
        for &c in &a.c[..self.r] {
            if c == 0 {
                continue;
            }
            let mut k = 0u32;
            let mut c = c;
            while c % self.p == 0 {
                c /= self.p;
                k += 1;
            }
            v = v.min(k);
        }
        v
    }

    pub fn is_unit(&self, a: &RingElement) -> bool {
        self.valuation(a) == 0
    }

    /// Inverse of a unit: invert mod p via the residue-field exponent, then
    /// Newton-lift x <- x (2 - a x).
    pub fn inv(&self, a: &RingElement) -> Result<RingElement> {
        if !self.is_unit(a) {
            return Err(Error::NotUnit);
        }
        let q = self.residue_size() as u128;
        let mut x = self.pow(a, q - 2);
        let two = self.from_int(2);
        let mut prec = 1u32;
        while prec < self.m {
            let ax = self.mul(a, &x);
            x = self.mul(&x, &self.sub(&two, &ax));
            prec *= 2;
        }
        debug_assert!(self.is_one(&self.mul(a, &x)));
        Ok(x)
    }

    pub fn div(&self, a: &RingElement, b: &RingElement) -> Result<RingElement> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    /// Exact division by p^k for an element of valuation at least k. The result
    /// is defined modulo p^{m-k}; the representative has coefficients below
    /// p^{m-k}.
    pub fn div_p_pow(&self, a: &RingElement, k: u32) -> Result<RingElement> {
        if self.valuation(a) < k {
            return Err(Error::NotUnit);
        }
        let d = self.p.pow(k);
        let mut e = RingElement::default();
        for i in 0..self.r {
            e.c[i] = a.c[i] / d;
        }
        Ok(e)
    }

    /// Multiply by p^k.
    pub fn mul_p_pow(&self, a: &RingElement, k: u32) -> RingElement {
        if k >= self.m {
            return self.zero();
        }
        let d = self.p.pow(k);
        let mut e = RingElement::default();
        for i in 0..self.r {
            e.c[i] = a.c[i] * d % self.pm;
        }
        e
    }

    /// Map into a ring of the same (p, r, modulus) at precision m' <= m.
    pub fn reduce_into(&self, a: &RingElement, target: &CoeffRing) -> RingElement {
        debug_assert!(target.p == self.p && target.r == self.r && target.m <= self.m);
        let mut e = RingElement::default();
        for i in 0..self.r {
            e.c[i] = a.c[i] % target.pm;
        }
        e
    }

    /// Canonical (coefficient-wise) lift from a lower precision ring.
    pub fn lift_from(&self, a: &RingElement, source: &CoeffRing) -> RingElement {
        debug_assert!(source.p == self.p && source.r == self.r && source.m <= self.m);
        let mut e = RingElement::default();
        e.c[..self.r].copy_from_slice(&a.c[..self.r]);
        e
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> RingElement {
        let mut e = RingElement::default();
        for i in 0..self.r {
            e.c[i] = rng.gen_range(0..self.pm);
        }
        e
    }

    pub fn random_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> RingElement {
        loop {
            let e = self.random(rng);
            if self.is_unit(&e) {
                return e;
            }
        }
    }

    /// All elements (only for small rings).
    pub fn elements(&self) -> Vec<RingElement> {
        let total = self.order();
        assert!(total <= 1 << 24, "ring too large to enumerate");
        let mut out = Vec::with_capacity(total as usize);
        for mut k in 0..total as u64 {
            let mut e = RingElement::default();
            for i in 0..self.r {
                e.c[i] = k % self.pm;
                k /= self.pm;
            }
            out.push(e);
        }
        out
    }

    /// Canonical integer index of an element (inverse of `elements` order).
    pub fn index_of(&self, a: &RingElement) -> u128 {
        let mut k: u128 = 0;
        for i in (0..self.r).rev() {
            k = k * self.pm as u128 + a.c[i] as u128;
        }
        k
    }

    /// Integer representative in (-p^m/2, p^m/2] of an element of Z/p^m.
    pub fn signed_constant(&self, a: &RingElement) -> i64 {
        let c = a.c[0] as i64;
        let pm = self.pm as i64;
        if c > pm / 2 {
            c - pm
        } else {
            c
        }
    }

    /// Textual form `GR(p^m,r):[c_0,...,c_{r-1}]`.
    pub fn format(&self, a: &RingElement) -> String {
        let cs: Vec<String> = a.c[..self.r].iter().map(|c| c.to_string()).collect();
        format!("{}:[{}]", self.header(), cs.join(","))
    }

    pub fn header(&self) -> String {
        format!("GR({}^{},{})", self.p, self.m, self.r)
    }

    /// Parse `GR(p^m,r):[...]`, checking the header against this ring.
    pub fn parse(&self, s: &str) -> Result<RingElement> {
        let (head, body) = s.split_once(':').ok_or_else(|| Error::Parse(format!("missing ':' in {s:?}")))?;
        if head.trim() != self.header() {
            return Err(Error::Parse(format!("header {head:?} does not match {}", self.header())));
        }
        let body = body.trim();
        let inner = body
            .strip_prefix('[')
            .and_then(|b| b.strip_suffix(']'))
            .ok_or_else(|| Error::Parse(format!("bad coefficient list {body:?}")))?;
        let coeffs: std::result::Result<Vec<i64>, _> = inner.split(',').map(|t| t.trim().parse::<i64>()).collect();
        let coeffs = coeffs.map_err(|e| Error::Parse(e.to_string()))?;
        if coeffs.len() != self.r {
            return Err(Error::Parse(format!("expected {} coefficients", self.r)));
        }
        self.elem(&coeffs)
    }

    /// Parse the ring header `GR(p^m,r)` on its own.
    pub fn parse_header(s: &str) -> Result<CoeffRing> {
        let inner = s
            .trim()
            .strip_prefix("GR(")
            .and_then(|b| b.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("bad ring header {s:?}")))?;
        let (pm, r) = inner.split_once(',').ok_or_else(|| Error::Parse(format!("bad ring header {s:?}")))?;
        let (p, m) = pm.split_once('^').ok_or_else(|| Error::Parse(format!("bad ring header {s:?}")))?;
        let p = p.trim().parse().map_err(|_| Error::Parse(format!("bad p in {s:?}")))?;
        let m = m.trim().parse().map_err(|_| Error::Parse(format!("bad m in {s:?}")))?;
        let r = r.trim().parse().map_err(|_| Error::Parse(format!("bad r in {s:?}")))?;
        CoeffRing::new(p, m, r)
    }
}

impl fmt::Display for CoeffRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.header())
    }
}

/// Square root of q = 1 (mod p) congruent to 1 mod p, by Newton iteration
/// s <- (s + q/s) / 2 starting from s = 1. The brief only needs m = 2, but the
/// iteration converges at any precision.
pub fn sqrt_one_mod_p(ring: &CoeffRing, q: &RingElement) -> Result<RingElement> {
    let one = ring.one();
    if ring.valuation(&ring.sub(q, &one)) < 1 {
        return Err(Error::Domain("q is not congruent to 1 mod p".into()));
    }
    let half = ring.inv(&ring.from_int(2))?;
    let mut s = one;
    for _ in 0..ring.precision() {
        let t = ring.add(&s, &ring.div(q, &s)?);
        s = ring.mul(&t, &half);
    }
    debug_assert_eq!(ring.mul(&s, &s), *q);
    Ok(s)
}

/// First monic polynomial of degree r over F_p, in the order of the integer
/// c_0 + c_1 p + ... + c_{r-1} p^{r-1}, whose root x generates F_{p^r}^×.
fn primitive_modulus(p: u64, r: usize) -> Vec<u64> {
    let q = p.pow(r as u32);
    let n = q - 1;
    let factors = prime_factors(n);
    for k in 0..q {
        let mut low = vec![0u64; r];
        let mut t = k;
        for c in low.iter_mut() {
            *c = t % p;
            t /= p;
        }
        if low[0] == 0 {
            continue;
        }
        let field = CoeffRing { p, m: 1, r, pm: p, modulus: low.clone() };
        let x = field.generator();
        if !field.is_one(&field.pow(&x, n as u128)) {
            continue;
        }
        if factors.iter().all(|&l| !field.is_one(&field.pow(&x, (n / l) as u128))) {
            return low;
        }
    }
    unreachable!("a primitive polynomial always exists")
}

/// Irreducibility over F_p via x^{p^r} = x and gcd(x^{p^{r/l}} - x, f) = 1.
fn is_irreducible_mod_p(p: u64, low: &[u64]) -> bool {
    let r = low.len();
    if r == 1 {
        return true;
    }
    let field = CoeffRing { p, m: 1, r, pm: p, modulus: low.to_vec() };
    let x = field.generator();
    let frob = |e: &RingElement, k: u32| field.pow(e, (p as u128).pow(k));
    if frob(&x, r as u32) != x {
        return false;
    }
    for l in prime_factors(r as u64) {
        let k = r as u32 / l as u32;
        let diff = field.sub(&frob(&x, k), &x);
        // diff must be a unit in F_p[x]/f for the gcd to be trivial
        if !poly_coprime(p, &diff.c[..r], low) {
            return false;
        }
    }
    true
}

fn poly_coprime(p: u64, a: &[u64], f_low: &[u64]) -> bool {
    let r = f_low.len();
    let mut f: Vec<u64> = f_low.to_vec();
    f.push(1);
    let mut g: Vec<u64> = a.to_vec();
    let trim = |v: &mut Vec<u64>| {
        while v.last() == Some(&0) {
            v.pop();
        }
    };
    trim(&mut g);
    let inv = |x: u64| -> u64 {
        let mut acc = 1u64;
        let mut b = x % p;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % p;
            }
            b = b * b % p;
            e >>= 1;
        }
        acc
    };
    let _ = r;
    while !g.is_empty() {
        // f <- f mod g
        while f.len() >= g.len() && !f.is_empty() {
            let lead = f[f.len() - 1] * inv(g[g.len() - 1]) % p;
            let shift = f.len() - g.len();
            for (i, &gc) in g.iter().enumerate() {
                f[shift + i] = (f[shift + i] + p - lead * gc % p) % p;
            }
            trim(&mut f);
        }
        std::mem::swap(&mut f, &mut g);
    }
    f.len() == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_parameters() {
        assert!(ring_make(2, 1, 1).is_err());
        assert!(ring_make(9, 1, 1).is_err());
        assert!(ring_make(5, 0, 1).is_err());
    }

    #[test]
    fn prime_field_and_z25() {
        let f5 = ring_make(5, 1, 1).unwrap();
        assert_eq!(f5.order(), 5);
        assert_eq!(f5.elements().len(), 5);
        let z25 = ring_make(5, 2, 1).unwrap();
        assert_eq!(z25.order(), 25);
    }

    #[test]
    fn gr_7_3_2_reduction_fibres() {
        let big = ring_make(7, 3, 2).unwrap();
        assert_eq!(big.order(), 7u128.pow(6));
        let small = big.reduced(2).unwrap();
        let mut counts = std::collections::HashMap::new();
        for e in big.elements() {
            *counts.entry(big.reduce_into(&e, &small)).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len() as u128, small.order());
        assert!(counts.values().all(|&c| c == 49));
    }

    #[test]
    fn sqrt_examples() {
        let z25 = ring_make(5, 2, 1).unwrap();
        assert_eq!(sqrt_one_mod_p(&z25, &z25.one()).unwrap(), z25.one());
        assert_eq!(sqrt_one_mod_p(&z25, &z25.from_int(6)).unwrap(), z25.from_int(16));
        assert!(sqrt_one_mod_p(&z25, &z25.from_int(2)).is_err());
        let z49 = ring_make(7, 2, 1).unwrap();
        let s = sqrt_one_mod_p(&z49, &z49.from_int(8)).unwrap();
        // exhaustive oracle over residues = 1 mod 7
        let hits: Vec<u64> = (0..49u64).filter(|k| k % 7 == 1 && k * k % 49 == 8).collect();
        assert_eq!(hits, vec![s.constant()]);
    }

    #[test]
    fn unit_count_matches_enumeration() {
        for &(p, m, r) in &[(3u64, 2u32, 2usize), (5, 2, 1), (3, 3, 1), (5, 1, 2)] {
            let ring = match ring_make(p, m, r) {
                Ok(x) => x,
                Err(_) => continue,
            };
            let n = ring.elements().iter().filter(|e| ring.is_unit(e)).count() as u128;
            assert_eq!(n, ring.unit_count());
        }
    }

    #[test]
    fn inverse_and_serialization() {
        let ring = ring_make(7, 3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = ring.random_unit(&mut rng);
            let b = ring.inv(&a).unwrap();
            assert!(ring.is_one(&ring.mul(&a, &b)));
            let s = ring.format(&a);
            assert_eq!(ring.parse(&s).unwrap(), a);
        }
        let z25 = ring_make(5, 2, 1).unwrap();
        assert_eq!(z25.format(&z25.from_int(16)), "GR(5^2,1):[16]");
        assert!(z25.inv(&z25.from_int(5)).is_err());
    }

    #[test]
    fn generator_is_primitive() {
        let f49 = ring_make(7, 1, 2).unwrap();
        let x = f49.generator();
        let mut seen = std::collections::HashSet::new();
        let mut acc = f49.one();
        for _ in 0..48 {
            acc = f49.mul(&acc, &x);
            seen.insert(acc);
        }
        assert_eq!(seen.len(), 48);
    }

    #[test]
    fn valuation_bounds() {
        let ring = ring_make(5, 3, 1).unwrap();
        assert_eq!(ring.valuation(&ring.zero()), 3);
        assert_eq!(ring.valuation(&ring.from_int(25)), 2);
        assert_eq!(ring.valuation(&ring.from_int(7)), 0);
    }
}
