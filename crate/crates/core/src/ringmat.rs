//! Dense matrices and vectors over a coefficient ring GR(p^m, r).

use rand::Rng;

use crate::coeffring::{CoeffRing, RingElement};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub type RMat = Matrix<RingElement>;

pub fn zeros(ring: &CoeffRing, rows: usize, cols: usize) -> RMat {
    Matrix::filled(rows, cols, ring.zero())
}

pub fn identity(ring: &CoeffRing, n: usize) -> RMat {
    let mut m = zeros(ring, n, n);
    for i in 0..n {
        m.set(i, i, ring.one());
    }
    m
}

pub fn from_int(ring: &CoeffRing, rows: &[Vec<i64>]) -> RMat {
    let cols = rows.first().map_or(0, |r| r.len());
    let data: Vec<Vec<RingElement>> = rows.iter().map(|r| r.iter().map(|&x| ring.from_int(x)).collect()).collect();
    Matrix::from_rows(&data, cols)
}

pub fn random(ring: &CoeffRing, rows: usize, cols: usize, rng: &mut (impl Rng + ?Sized)) -> RMat {
    let data = (0..rows * cols).map(|_| ring.random(rng)).collect();
    Matrix::from_flat(rows, cols, data)
}

pub fn mul(ring: &CoeffRing, a: &RMat, b: &RMat) -> RMat {
    assert_eq!(a.ncols(), b.nrows(), "dimension mismatch");
    let mut c = zeros(ring, a.nrows(), b.ncols());
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            let x = a.get(i, k);
            if ring.is_zero(&x) {
                continue;
            }
            let brow = b.row(k);
            let crow = c.row_mut(i);
            for (cj, bj) in crow.iter_mut().zip(brow) {
                if !ring.is_zero(bj) {
                    *cj = ring.add(cj, &ring.mul(&x, bj));
                }
            }
        }
    }
    c
}

pub fn add(ring: &CoeffRing, a: &RMat, b: &RMat) -> RMat {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| ring.add(x, y)).collect();
    Matrix::from_flat(a.nrows(), a.ncols(), data)
}

pub fn sub(ring: &CoeffRing, a: &RMat, b: &RMat) -> RMat {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| ring.sub(x, y)).collect();
    Matrix::from_flat(a.nrows(), a.ncols(), data)
}

pub fn scale(ring: &CoeffRing, a: &RMat, s: &RingElement) -> RMat {
    let data = a.data().iter().map(|x| ring.mul(x, s)).collect();
    Matrix::from_flat(a.nrows(), a.ncols(), data)
}

/// Multiply every entry by p^k.
pub fn scale_p_pow(ring: &CoeffRing, a: &RMat, k: u32) -> RMat {
    let data = a.data().iter().map(|x| ring.mul_p_pow(x, k)).collect();
    Matrix::from_flat(a.nrows(), a.ncols(), data)
}

pub fn commutator(ring: &CoeffRing, a: &RMat, b: &RMat) -> RMat {
    sub(ring, &mul(ring, a, b), &mul(ring, b, a))
}

pub fn pow(ring: &CoeffRing, a: &RMat, mut e: u64) -> RMat {
    let mut base = a.clone();
    let mut acc = identity(ring, a.nrows());
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(ring, &acc, &base);
        }
        base = mul(ring, &base, &base);
        e >>= 1;
    }
    acc
}

pub fn mul_vec(ring: &CoeffRing, a: &RMat, v: &[RingElement]) -> Vec<RingElement> {
    (0..a.nrows()).map(|i| a.row(i).iter().zip(v).fold(ring.zero(), |acc, (x, y)| ring.add(&acc, &ring.mul(x, y)))).collect()
}

pub fn is_identity(ring: &CoeffRing, a: &RMat) -> bool {
    a.nrows() == a.ncols()
        && (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| a.get(i, j) == if i == j { ring.one() } else { ring.zero() }))
}

pub fn is_zero(ring: &CoeffRing, a: &RMat) -> bool {
    a.data().iter().all(|x| ring.is_zero(x))
}

/// Minimum valuation over all entries (m for the zero matrix).
pub fn valuation(ring: &CoeffRing, a: &RMat) -> u32 {
    a.data().iter().map(|x| ring.valuation(x)).min().unwrap_or(ring.precision())
}

/// Inverse over a local ring by Gauss-Jordan with unit pivots.
pub fn inverse(ring: &CoeffRing, a: &RMat) -> Result<RMat> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Precondition("inverse of a non-square matrix".into()));
    }
    let mut m = a.clone();
    let mut inv = identity(ring, n);
    for c in 0..n {
        let piv = (c..n).find(|&r| ring.is_unit(&m.get(r, c))).ok_or(Error::NotUnit)?;
        if piv != c {
            for j in 0..n {
                let (x, y) = (m.get(c, j), m.get(piv, j));
                m.set(c, j, y);
                m.set(piv, j, x);
                let (x, y) = (inv.get(c, j), inv.get(piv, j));
                inv.set(c, j, y);
                inv.set(piv, j, x);
            }
        }
        let s = ring.inv(&m.get(c, c))?;
        for j in 0..n {
            m.set(c, j, ring.mul(&m.get(c, j), &s));
            inv.set(c, j, ring.mul(&inv.get(c, j), &s));
        }
        for r in 0..n {
            if r == c {
                continue;
            }
            let f = m.get(r, c);
            if ring.is_zero(&f) {
                continue;
            }
            for j in 0..n {
                m.set(r, j, ring.sub(&m.get(r, j), &ring.mul(&f, &m.get(c, j))));
                inv.set(r, j, ring.sub(&inv.get(r, j), &ring.mul(&f, &inv.get(c, j))));
            }
        }
    }
    Ok(inv)
}

/// Entrywise map into a lower-precision ring with the same (p, r).
pub fn reduce(ring: &CoeffRing, a: &RMat, target: &CoeffRing) -> RMat {
    let data = a.data().iter().map(|x| ring.reduce_into(x, target)).collect();
    Matrix::from_flat(a.nrows(), a.ncols(), data)
}

/// Canonical entrywise lift from a lower-precision ring.
pub fn lift(ring: &CoeffRing, a: &RMat, source: &CoeffRing) -> RMat {
    let data = a.data().iter().map(|x| ring.lift_from(x, source)).collect();
    Matrix::from_flat(a.nrows(), a.ncols(), data)
}

/// Exact entrywise division by p^k (entries must have valuation >= k); the
/// result is read in `target`, a ring of precision m - k.
pub fn div_p_pow(ring: &CoeffRing, a: &RMat, k: u32, target: &CoeffRing) -> Result<RMat> {
    let data = a.data().iter().map(|x| ring.div_p_pow(x, k).map(|y| ring.reduce_into(&y, target))).collect::<Result<Vec<_>>>()?;
    Ok(Matrix::from_flat(a.nrows(), a.ncols(), data))
}

/// Rows serialized with the ring's element format.
pub fn format_rows(ring: &CoeffRing, a: &RMat) -> Vec<Vec<String>> {
    (0..a.nrows()).map(|i| a.row(i).iter().map(|x| ring.format(x)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inverse_round_trip() {
        let ring = CoeffRing::new(7, 3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut found = 0;
        for _ in 0..20 {
            let a = random(&ring, 4, 4, &mut rng);
            if let Ok(b) = inverse(&ring, &a) {
                assert!(is_identity(&ring, &mul(&ring, &a, &b)));
                assert!(is_identity(&ring, &mul(&ring, &b, &a)));
                found += 1;
            }
        }
        assert!(found > 10);
        let sing = from_int(&ring, &[vec![7, 0], vec![0, 1]]);
        assert!(inverse(&ring, &sing).is_err());
    }

    #[test]
    fn reduction_is_multiplicative() {
        let ring = CoeffRing::new(5, 4, 1).unwrap();
        let low = ring.reduced(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random(&ring, 3, 3, &mut rng);
        let b = random(&ring, 3, 3, &mut rng);
        let lhs = reduce(&ring, &mul(&ring, &a, &b), &low);
        let rhs = mul(&low, &reduce(&ring, &a, &low), &reduce(&ring, &b, &low));
        assert_eq!(lhs, rhs);
    }
}
