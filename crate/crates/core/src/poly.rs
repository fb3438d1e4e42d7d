//! Univariate polynomials over a finite field: arithmetic, characteristic
//! polynomials of matrices, and factorization (squarefree, distinct-degree,
//! Cantor-Zassenhaus).

use rand::Rng;

use crate::field::Field;
use crate::linalg::{self, FMat};

/// Coefficients from the constant term up; no trailing zeros.
pub type Poly<E> = Vec<E>;

pub fn trim<F: Field>(f: &F, mut a: Poly<F::Elem>) -> Poly<F::Elem> {
    while a.last().is_some_and(|c| f.is_zero(*c)) {
        a.pop();
    }
    a
}

/// Degree, with the zero polynomial reported as None.
pub fn degree<E>(a: &[E]) -> Option<usize> {
    a.len().checked_sub(1)
}

pub fn monomial<F: Field>(f: &F, k: usize) -> Poly<F::Elem> {
    let mut v = vec![f.zero(); k + 1];
    v[k] = f.one();
    v
}

pub fn add<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Poly<F::Elem> {
    let n = a.len().max(b.len());
    let out = (0..n)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(f.zero());
            let y = b.get(i).copied().unwrap_or(f.zero());
            f.add(x, y)
        })
        .collect();
    trim(f, out)
}

pub fn sub<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Poly<F::Elem> {
    let nb: Vec<F::Elem> = b.iter().map(|&c| f.neg(c)).collect();
    add(f, a, &nb)
}

pub fn scale<F: Field>(f: &F, a: &[F::Elem], s: F::Elem) -> Poly<F::Elem> {
    trim(f, a.iter().map(|&c| f.mul(c, s)).collect())
}

pub fn mul<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Poly<F::Elem> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![f.zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if f.is_zero(x) {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = f.add(out[i + j], f.mul(x, y));
        }
    }
    trim(f, out)
}

/// Quotient and remainder; panics on division by zero.
pub fn divrem<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> (Poly<F::Elem>, Poly<F::Elem>) {
    let b = trim(f, b.to_vec());
    assert!(!b.is_empty(), "polynomial division by zero");
    let mut r = trim(f, a.to_vec());
    if r.len() < b.len() {
        return (vec![], r);
    }
    let lead_inv = f.inv(*b.last().unwrap());
    let mut q = vec![f.zero(); r.len() - b.len() + 1];
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let c = f.mul(*r.last().unwrap(), lead_inv);
        q[shift] = c;
        for (i, &y) in b.iter().enumerate() {
            r[shift + i] = f.sub(r[shift + i], f.mul(c, y));
        }
        r = trim(f, r);
    }
    (trim(f, q), r)
}

pub fn rem<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Poly<F::Elem> {
    divrem(f, a, b).1
}

pub fn monic<F: Field>(f: &F, a: &[F::Elem]) -> Poly<F::Elem> {
    match a.last() {
        None => vec![],
        Some(&l) => scale(f, a, f.inv(l)),
    }
}

/// Monic gcd.
pub fn gcd<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Poly<F::Elem> {
    let mut x = trim(f, a.to_vec());
    let mut y = trim(f, b.to_vec());
    while !y.is_empty() {
        let r = rem(f, &x, &y);
        x = y;
        y = r;
    }
    monic(f, &x)
}

pub fn derivative<F: Field>(f: &F, a: &[F::Elem]) -> Poly<F::Elem> {
    trim(f, a.iter().enumerate().skip(1).map(|(i, &c)| f.mul(f.from_int(i as i64), c)).collect())
}

pub fn mulmod<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem], m: &[F::Elem]) -> Poly<F::Elem> {
    rem(f, &mul(f, a, b), m)
}

pub fn powmod<F: Field>(f: &F, a: &[F::Elem], mut e: u64, m: &[F::Elem]) -> Poly<F::Elem> {
    let mut base = rem(f, a, m);
    let mut acc = rem(f, &[f.one()], m);
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(f, &acc, &base, m);
        }
        base = mulmod(f, &base, &base, m);
        e >>= 1;
    }
    acc
}

pub fn eval<F: Field>(f: &F, a: &[F::Elem], x: F::Elem) -> F::Elem {
    a.iter().rev().fold(f.zero(), |acc, &c| f.add(f.mul(acc, x), c))
}

/// p-th root of a coefficient in F_q: a^(q/p).
fn pth_root<F: Field>(f: &F, a: F::Elem) -> F::Elem {
    f.pow(a, f.size() / f.characteristic())
}

/// Squarefree decomposition: pairs (squarefree factor, multiplicity).
pub fn squarefree<F: Field>(f: &F, a: &[F::Elem]) -> Vec<(Poly<F::Elem>, usize)> {
    let a = monic(f, a);
    if degree(&a).unwrap_or(0) == 0 {
        return vec![];
    }
    let p = f.characteristic() as usize;
    let mut out = Vec::new();
    let d = derivative(f, &a);
    if d.is_empty() {
        // a = b(x^p)
        let b: Vec<F::Elem> = a.iter().step_by(p).map(|&c| pth_root(f, c)).collect();
        for (g, m) in squarefree(f, &b) {
            out.push((g, m * p));
        }
        return out;
    }
    let mut c = gcd(f, &a, &d);
    let mut w = divrem(f, &a, &c).0;
    let mut i = 1;
    while degree(&w).unwrap_or(0) > 0 {
        let y = gcd(f, &w, &c);
        let z = divrem(f, &w, &y).0;
        if degree(&z).unwrap_or(0) > 0 {
            out.push((monic(f, &z), i));
        }
        i += 1;
        w = y;
        c = divrem(f, &c, &w).0;
    }
    if degree(&c).unwrap_or(0) > 0 {
        let b: Vec<F::Elem> = c.iter().step_by(p).map(|&x| pth_root(f, x)).collect();
        for (g, m) in squarefree(f, &b) {
            out.push((g, m * p));
        }
    }
    out
}

/// Distinct-degree factorization of a monic squarefree polynomial.
pub fn distinct_degree<F: Field>(f: &F, a: &[F::Elem]) -> Vec<(Poly<F::Elem>, usize)> {
    let q = f.size();
    let x = monomial(f, 1);
    let mut rest = monic(f, a);
    let mut h = rem(f, &x, &rest);
    let mut out = Vec::new();
    let mut d = 0;
    while degree(&rest).unwrap_or(0) >= 2 * (d + 1) {
        d += 1;
        h = powmod(f, &h, q, &rest);
        let g = gcd(f, &rest, &sub(f, &h, &x));
        if degree(&g).unwrap_or(0) > 0 {
            rest = divrem(f, &rest, &g).0;
            h = rem(f, &h, &rest);
            out.push((g, d));
        }
    }
    if degree(&rest).unwrap_or(0) > 0 {
        let dd = degree(&rest).unwrap();
        out.push((rest, dd));
    }
    out
}

/// a^((q^d - 1)/2) mod m, via the norm a^(1 + q + ... + q^(d-1)).
fn half_power<F: Field>(f: &F, a: &[F::Elem], d: usize, m: &[F::Elem]) -> Poly<F::Elem> {
    let q = f.size();
    let mut conj = rem(f, a, m);
    let mut norm = conj.clone();
    for _ in 1..d {
        conj = powmod(f, &conj, q, m);
        norm = mulmod(f, &norm, &conj, m);
    }
    powmod(f, &norm, (q - 1) / 2, m)
}

/// a + a^2 + a^4 + ... + a^(2^(dr - 1)) mod m over F_{2^r} (the trace map).
fn trace_map<F: Field>(f: &F, a: &[F::Elem], d: usize, m: &[F::Elem]) -> Poly<F::Elem> {
    let total = d * f.degree();
    let mut t = rem(f, a, m);
    let mut acc = t.clone();
    for _ in 1..total {
        t = mulmod(f, &t, &t, m);
        acc = add(f, &acc, &t);
    }
    acc
}

/// Equal-degree factorization of a monic squarefree product of degree-d irreducibles.
pub fn equal_degree<F: Field, R: Rng + ?Sized>(f: &F, a: &[F::Elem], d: usize, rng: &mut R) -> Vec<Poly<F::Elem>> {
    let n = degree(a).unwrap_or(0);
    if n == d {
        return vec![monic(f, a)];
    }
    loop {
        let r: Vec<F::Elem> = (0..n).map(|_| f.random(rng)).collect();
        let r = trim(f, r);
        if degree(&r).unwrap_or(0) == 0 {
            continue;
        }
        let b = if f.characteristic() == 2 { trace_map(f, &r, d, a) } else { sub(f, &half_power(f, &r, d, a), &[f.one()]) };
        let g = gcd(f, a, &b);
        let dg = degree(&g).unwrap_or(0);
        if dg > 0 && dg < n {
            let h = divrem(f, a, &g).0;
            let mut out = equal_degree(f, &g, d, rng);
            out.extend(equal_degree(f, &monic(f, &h), d, rng));
            return out;
        }
    }
}

/// Monic irreducible factors with multiplicities, sorted by degree.
pub fn factor<F: Field, R: Rng + ?Sized>(f: &F, a: &[F::Elem], rng: &mut R) -> Vec<(Poly<F::Elem>, usize)> {
    let mut out = Vec::new();
    for (s, mult) in squarefree(f, a) {
        for (g, d) in distinct_degree(f, &s) {
            for h in equal_degree(f, &g, d, rng) {
                out.push((h, mult));
            }
        }
    }
    out.sort_by(|x, y| x.0.len().cmp(&y.0.len()).then_with(|| x.0.cmp(&y.0)));
    out
}

/// Roots in the field (from the linear factors).
pub fn roots<F: Field, R: Rng + ?Sized>(f: &F, a: &[F::Elem], rng: &mut R) -> Vec<F::Elem> {
    factor(f, a, rng).into_iter().filter(|(g, _)| g.len() == 2).map(|(g, _)| f.neg(g[0])).collect()
}

/// Characteristic polynomial det(x I - A) via an upper Hessenberg form.
pub fn charpoly<F: Field>(f: &F, a: &FMat<F>) -> Poly<F::Elem> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut h = a.clone();
    // similarity reduction to Hessenberg form
    for k in 0..n.saturating_sub(2) {
        let Some(piv) = (k + 1..n).find(|&i| !f.is_zero(h.get(i, k))) else { continue };
        if piv != k + 1 {
            for j in 0..n {
                let (x, y) = (h.get(piv, j), h.get(k + 1, j));
                h.set(piv, j, y);
                h.set(k + 1, j, x);
            }
            for i in 0..n {
                let (x, y) = (h.get(i, piv), h.get(i, k + 1));
                h.set(i, piv, y);
                h.set(i, k + 1, x);
            }
        }
        let inv = f.inv(h.get(k + 1, k));
        for i in k + 2..n {
            let c = f.mul(h.get(i, k), inv);
            if f.is_zero(c) {
                continue;
            }
            // row_i -= c row_{k+1}; col_{k+1} += c col_i
            for j in 0..n {
                h.set(i, j, f.sub(h.get(i, j), f.mul(c, h.get(k + 1, j))));
            }
            for r in 0..n {
                h.set(r, k + 1, f.add(h.get(r, k + 1), f.mul(c, h.get(r, i))));
            }
        }
    }
    // p_k = charpoly of the leading k x k block
    let mut ps: Vec<Poly<F::Elem>> = vec![vec![f.one()]];
    for k in 0..n {
        let x_minus = vec![f.neg(h.get(k, k)), f.one()];
        let mut pk = mul(f, &x_minus, &ps[k]);
        let mut prod = f.one();
        for i in (0..k).rev() {
            prod = f.mul(prod, h.get(i + 1, i));
            let c = f.mul(prod, h.get(i, k));
            if !f.is_zero(c) {
                pk = sub(f, &pk, &scale(f, &ps[i], c));
            }
        }
        ps.push(pk);
    }
    ps.pop().unwrap()
}

/// f(A) by Horner.
pub fn eval_matrix<F: Field>(f: &F, a: &[F::Elem], m: &FMat<F>) -> FMat<F> {
    let n = m.nrows();
    let mut acc = linalg::zeros(f, n, n);
    for &c in a.iter().rev() {
        acc = linalg::mat_mul(f, &acc, m);
        for i in 0..n {
            acc.set(i, i, f.add(acc.get(i, i), c));
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{GaloisField, PrimeField};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn factor_reassembles() {
        let f = PrimeField::new(7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a: Vec<u64> = (0..9).map(|_| f.random(&mut rng)).chain([1]).collect();
            let fs = factor(&f, &a, &mut rng);
            let mut prod = vec![f.one()];
            for (g, m) in &fs {
                for _ in 0..*m {
                    prod = mul(&f, &prod, g);
                }
            }
            assert_eq!(prod, monic(&f, &a));
        }
    }

    #[test]
    fn repeated_and_pth_power_factors() {
        let f = PrimeField::new(5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // (x^5 - 1) = (x - 1)^5 and (x^2 + 2)^2 (x + 3)
        let a = sub(&f, &monomial(&f, 5), &[f.one()]);
        let fs = factor(&f, &a, &mut rng);
        assert_eq!(fs, vec![(vec![f.from_int(-1), 1], 5)]);
        let b = mul(&f, &mul(&f, &[2, 0, 1], &[2, 0, 1]), &[3, 1]);
        let fs = factor(&f, &b, &mut rng);
        assert_eq!(fs, vec![(vec![3, 1], 1), (vec![2, 0, 1], 2)]);
    }

    #[test]
    fn charpoly_matches_cayley_hamilton() {
        let g = GaloisField::new(5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = linalg::random_matrix(&g, 6, 6, &mut rng);
        let cp = charpoly(&g, &a);
        assert_eq!(cp.len(), 7);
        assert!(eval_matrix(&g, &cp, &a).data().iter().all(|x| g.is_zero(*x)));
        assert_eq!(eval(&g, &cp, g.zero()), {
            let d = linalg::determinant(&g, &a);
            g.mul(d, g.from_int(1)) // (-1)^6 det
        });
    }

    #[test]
    fn characteristic_two() {
        let f = PrimeField::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // x^4 + x = x (x + 1)(x^2 + x + 1)
        let a = vec![0, 1, 0, 0, 1];
        let fs = factor(&f, &a, &mut rng);
        assert_eq!(fs.len(), 3);
    }
}
