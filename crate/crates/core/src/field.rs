//! Finite fields behind a small trait so that the dense linear algebra can run
//! over F_p (fast path) or over F_{p^r} realized as GR(p, r).

use std::fmt::Debug;
use std::hash::Hash;

use rand::Rng;

use crate::coeffring::{CoeffRing, RingElement};

pub trait Field: Clone + Debug + Send + Sync {
    type Elem: Copy + PartialEq + Eq + Hash + Debug + Send + Sync + Ord;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn sub(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn mul(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    /// Inverse of a nonzero element.
    fn inv(&self, a: Self::Elem) -> Self::Elem;
    fn from_int(&self, n: i64) -> Self::Elem;
    fn characteristic(&self) -> u64;
    /// Number of elements.
    fn size(&self) -> u64;
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;
    /// Element with index k in a fixed enumeration, 0 <= k < size.
    fn nth(&self, k: u64) -> Self::Elem;

    fn neg(&self, a: Self::Elem) -> Self::Elem {
        self.sub(self.zero(), a)
    }
    fn is_zero(&self, a: Self::Elem) -> bool {
        a == self.zero()
    }
    fn pow(&self, a: Self::Elem, mut e: u64) -> Self::Elem {
        let mut base = a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }
    fn div(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem {
        self.mul(a, self.inv(b))
    }
    /// Degree over the prime field.
    fn degree(&self) -> usize {
        let mut d = 0;
        let mut s = 1u64;
        while s < self.size() {
            s *= self.characteristic();
            d += 1;
        }
        d
    }
}

/// The prime field F_p with elements stored as u64 in [0, p).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Self {
        assert!(crate::coeffring::is_prime(p), "{p} is not prime");
        PrimeField { p }
    }
    pub fn p(&self) -> u64 {
        self.p
    }
}

impl Field for PrimeField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }
    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }
    fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.p
    }
    fn inv(&self, a: u64) -> u64 {
        assert!(a != 0, "inverse of zero");
        self.pow(a, self.p - 2)
    }
    fn from_int(&self, n: i64) -> u64 {
        n.rem_euclid(self.p as i64) as u64
    }
    fn characteristic(&self) -> u64 {
        self.p
    }
    fn size(&self) -> u64 {
        self.p
    }
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.p)
    }
    fn nth(&self, k: u64) -> u64 {
        k % self.p
    }
}

/// F_{p^r} as the residue ring GR(p, r).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GaloisField {
    ring: CoeffRing,
}

impl GaloisField {
    pub fn new(p: u64, r: usize) -> crate::error::Result<Self> {
        Ok(GaloisField { ring: CoeffRing::new(p, 1, r)? })
    }
    pub fn from_ring(ring: &CoeffRing) -> Self {
        GaloisField { ring: ring.residue_field() }
    }
    pub fn ring(&self) -> &CoeffRing {
        &self.ring
    }
}

impl Field for GaloisField {
    type Elem = RingElement;

    fn zero(&self) -> RingElement {
        self.ring.zero()
    }
    fn one(&self) -> RingElement {
        self.ring.one()
    }
    fn add(&self, a: RingElement, b: RingElement) -> RingElement {
        self.ring.add(&a, &b)
    }
    fn sub(&self, a: RingElement, b: RingElement) -> RingElement {
        self.ring.sub(&a, &b)
    }
    fn mul(&self, a: RingElement, b: RingElement) -> RingElement {
        self.ring.mul(&a, &b)
    }
    fn inv(&self, a: RingElement) -> RingElement {
        self.ring.inv(&a).expect("inverse of zero")
    }
    fn from_int(&self, n: i64) -> RingElement {
        self.ring.from_int(n)
    }
    fn characteristic(&self) -> u64 {
        self.ring.p()
    }
    fn size(&self) -> u64 {
        self.ring.residue_size()
    }
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> RingElement {
        self.ring.random(rng)
    }
    fn nth(&self, k: u64) -> RingElement {
        let p = self.ring.p() as i64;
        let mut t = k as i64;
        let mut coeffs = Vec::with_capacity(self.ring.degree());
        for _ in 0..self.ring.degree() {
            coeffs.push(t % p);
            t /= p;
        }
        self.ring.elem(&coeffs).expect("degree matches")
    }
    fn degree(&self) -> usize {
        self.ring.degree()
    }
}
