//! The adjoint Chevalley group over a coefficient ring: Lie algebra vectors in
//! the Chevalley basis, root and torus elements, truncated exponentials, the
//! trace form, principal SL2 triples and a few conjugation identities.

use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::coeffring::{sqrt_one_mod_p, CoeffRing, RingElement};
use crate::error::{Error, Result};
use crate::field::{Field, PrimeField};
use crate::linalg::{self, Matrix};
use crate::ringmat::{self, RMat};
use crate::rootdata::{phi_alpha, rational_closure, ChevalleyBasis, LeviBound, RootDatum};

/// Coordinates in the Chevalley basis (positive roots, h_i, negative roots).
pub type LieElement = Vec<RingElement>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Provenance {
    Identity,
    Root(usize),
    Torus,
    Exp,
    Product,
    Inverse,
    Reduction,
    Other,
}

/// An element of the adjoint group, stored as its matrix on the Chevalley
/// basis (column j is the image of basis vector j).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupElement {
    pub mat: RMat,
    pub tag: Provenance,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sl2Triple {
    pub e: LieElement,
    pub h: LieElement,
    pub f: LieElement,
    /// h = sum_i coeffs[i] h_i
    pub h_coeffs: Vec<i64>,
}

/// Structure over a fixed coefficient ring. Cheap to clone.
#[derive(Clone, Debug)]
pub struct Chevalley {
    datum: Arc<RootDatum>,
    basis: Arc<ChevalleyBasis>,
    ring: CoeffRing,
    /// divided powers ad(X_beta)^k / k! over Z, for each root, k >= 1
    divided: Arc<Vec<Vec<Vec<Vec<i64>>>>>,
    /// invariant integral form on the Chevalley basis
    form: Arc<Vec<Vec<i64>>>,
}

impl Chevalley {
    pub fn new(datum: RootDatum, basis: ChevalleyBasis, ring: CoeffRing) -> Result<Self> {
        if ring.p() < 5 {
            return Err(Error::Precondition(format!("p = {} must be at least 5", ring.p())));
        }
        let divided = (0..datum.num_roots()).map(|b| divided_powers(&basis, basis.root_index(b))).collect::<Result<Vec<_>>>()?;
        let form = integral_form(&datum, &basis);
        Ok(Chevalley { datum: Arc::new(datum), basis: Arc::new(basis), ring, divided: Arc::new(divided), form: Arc::new(form) })
    }

    /// Same datum over another coefficient ring.
    pub fn with_ring(&self, ring: CoeffRing) -> Self {
        Chevalley { ring, ..self.clone() }
    }

    pub fn datum(&self) -> &RootDatum {
        &self.datum
    }
    pub fn basis(&self) -> &ChevalleyBasis {
        &self.basis
    }
    pub fn ring(&self) -> &CoeffRing {
        &self.ring
    }
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }
    pub fn p(&self) -> u64 {
        self.ring.p()
    }
    pub fn precision(&self) -> u32 {
        self.ring.precision()
    }

    // ----- Lie algebra -----

    pub fn zero(&self) -> LieElement {
        vec![self.ring.zero(); self.dim()]
    }
    pub fn basis_vec(&self, i: usize) -> LieElement {
        let mut v = self.zero();
        v[i] = self.ring.one();
        v
    }
    /// x X_beta
    pub fn root_vec(&self, beta: usize, x: &RingElement) -> LieElement {
        let mut v = self.zero();
        v[self.basis.root_index(beta)] = *x;
        v
    }
    pub fn from_ints(&self, c: &[i64]) -> LieElement {
        c.iter().map(|&x| self.ring.from_int(x)).collect()
    }
    pub fn add(&self, x: &LieElement, y: &LieElement) -> LieElement {
        x.iter().zip(y).map(|(a, b)| self.ring.add(a, b)).collect()
    }
    pub fn sub(&self, x: &LieElement, y: &LieElement) -> LieElement {
        x.iter().zip(y).map(|(a, b)| self.ring.sub(a, b)).collect()
    }
    pub fn scale(&self, x: &LieElement, s: &RingElement) -> LieElement {
        x.iter().map(|a| self.ring.mul(a, s)).collect()
    }
    pub fn scale_p_pow(&self, x: &LieElement, k: u32) -> LieElement {
        x.iter().map(|a| self.ring.mul_p_pow(a, k)).collect()
    }
    pub fn is_zero(&self, x: &LieElement) -> bool {
        x.iter().all(|a| self.ring.is_zero(a))
    }
    pub fn random_lie(&self, rng: &mut (impl Rng + ?Sized)) -> LieElement {
        (0..self.dim()).map(|_| self.ring.random(rng)).collect()
    }
    pub fn reduce_lie(&self, x: &LieElement, target: &CoeffRing) -> LieElement {
        x.iter().map(|a| self.ring.reduce_into(a, target)).collect()
    }
    pub fn lift_lie(&self, x: &LieElement, source: &CoeffRing) -> LieElement {
        x.iter().map(|a| self.ring.lift_from(a, source)).collect()
    }

    pub fn bracket(&self, x: &LieElement, y: &LieElement) -> LieElement {
        let r = &self.ring;
        let mut out = self.zero();
        for (a, xa) in x.iter().enumerate() {
            if r.is_zero(xa) {
                continue;
            }
            for (b, yb) in y.iter().enumerate() {
                if r.is_zero(yb) {
                    continue;
                }
                let xy = r.mul(xa, yb);
                for &(c, k) in self.basis.bracket_basis(a, b) {
                    out[c] = r.add(&out[c], &r.scale(&xy, k));
                }
            }
        }
        out
    }

    /// Matrix of ad(x): column b is [x, e_b].
    pub fn ad(&self, x: &LieElement) -> RMat {
        let r = &self.ring;
        let dim = self.dim();
        let mut m = ringmat::zeros(r, dim, dim);
        for (a, xa) in x.iter().enumerate() {
            if r.is_zero(xa) {
                continue;
            }
            for b in 0..dim {
                for &(c, k) in self.basis.bracket_basis(a, b) {
                    let v = r.add(&m.get(c, b), &r.scale(xa, k));
                    m.set(c, b, v);
                }
            }
        }
        m
    }

    /// The invariant form on integer coordinates: B(X_a, X_{-a}) = L / (a, a)
    /// with L the largest squared root length of the factor; on the Cartan
    /// part B(h_i, h_j) = (L/2) (alpha_i^vee, alpha_j^vee).
    pub fn form_int(&self) -> &[Vec<i64>] {
        &self.form
    }

    pub fn trace_form(&self, x: &LieElement, y: &LieElement) -> RingElement {
        let r = &self.ring;
        let mut s = r.zero();
        for (a, xa) in x.iter().enumerate() {
            if r.is_zero(xa) {
                continue;
            }
            for (b, yb) in y.iter().enumerate() {
                let k = self.form[a][b];
                if k != 0 && !r.is_zero(yb) {
                    s = r.add(&s, &r.scale(&r.mul(xa, yb), k));
                }
            }
        }
        s
    }

    /// Gram matrix of the trace form over the ring.
    pub fn form_matrix(&self) -> RMat {
        ringmat::from_int(&self.ring, &self.form)
    }

    // ----- group -----

    pub fn identity(&self) -> GroupElement {
        GroupElement { mat: ringmat::identity(&self.ring, self.dim()), tag: Provenance::Identity }
    }
    pub fn mul(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        GroupElement { mat: ringmat::mul(&self.ring, &g.mat, &h.mat), tag: Provenance::Product }
    }
    pub fn inv(&self, g: &GroupElement) -> Result<GroupElement> {
        Ok(GroupElement { mat: ringmat::inverse(&self.ring, &g.mat)?, tag: Provenance::Inverse })
    }
    /// g h g^{-1}
    pub fn conj(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        Ok(self.mul(&self.mul(g, h), &self.inv(g)?))
    }
    pub fn pow(&self, g: &GroupElement, e: u64) -> GroupElement {
        GroupElement { mat: ringmat::pow(&self.ring, &g.mat, e), tag: Provenance::Product }
    }
    pub fn apply(&self, g: &GroupElement, x: &LieElement) -> LieElement {
        ringmat::mul_vec(&self.ring, &g.mat, x)
    }
    pub fn reduce_group(&self, g: &GroupElement, target: &CoeffRing) -> GroupElement {
        GroupElement { mat: ringmat::reduce(&self.ring, &g.mat, target), tag: Provenance::Reduction }
    }
    pub fn is_identity(&self, g: &GroupElement) -> bool {
        ringmat::is_identity(&self.ring, &g.mat)
    }

    /// u_beta(x) = exp(ad(x X_beta)) through integral divided powers.
    pub fn u_alpha(&self, beta: usize, x: &RingElement) -> GroupElement {
        let r = &self.ring;
        let mut mat = ringmat::identity(r, self.dim());
        let mut xk = r.one();
        for dp in &self.divided[beta] {
            xk = r.mul(&xk, x);
            for (i, row) in dp.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if v != 0 {
                        let e = r.add(&mat.get(i, j), &r.scale(&xk, v));
                        mat.set(i, j, e);
                    }
                }
            }
        }
        GroupElement { mat, tag: Provenance::Root(beta) }
    }

    /// beta(t) for the torus element with the given values on simple roots.
    pub fn root_value(&self, values: &[RingElement], beta: usize) -> Result<RingElement> {
        let r = &self.ring;
        let mut acc = r.one();
        for (k, &c) in self.datum.root(beta).iter().enumerate() {
            let v = if c >= 0 { r.pow(&values[k], c as u128) } else { r.pow(&r.inv(&values[k])?, (-c) as u128) };
            acc = r.mul(&acc, &v);
        }
        Ok(acc)
    }

    /// Torus element of the adjoint torus with prescribed simple-root values.
    pub fn torus_elt(&self, values: &[RingElement]) -> Result<GroupElement> {
        if values.len() != self.datum.rank() {
            return Err(Error::Precondition("one value per simple root".into()));
        }
        if values.iter().any(|v| !self.ring.is_unit(v)) {
            return Err(Error::NotUnit);
        }
        let mut mat = ringmat::identity(&self.ring, self.dim());
        for beta in 0..self.datum.num_roots() {
            let i = self.basis.root_index(beta);
            mat.set(i, i, self.root_value(values, beta)?);
        }
        Ok(GroupElement { mat, tag: Provenance::Torus })
    }

    /// Simple-root values of beta^vee(u).
    pub fn coroot_values(&self, beta: usize, u: &RingElement) -> Result<Vec<RingElement>> {
        let r = &self.ring;
        (0..self.datum.rank())
            .map(|k| {
                let a = self.datum.pairing(self.datum.simple(k), beta);
                Ok(if a >= 0 { r.pow(u, a as u128) } else { r.pow(&r.inv(u)?, (-a) as u128) })
            })
            .collect()
    }

    /// Simple-root values of exp(p b) for b in the Cartan with integer-lift
    /// coordinates over the h_i.
    pub fn exp_torus_values(&self, b: &[RingElement]) -> Result<Vec<RingElement>> {
        (0..self.datum.rank())
            .map(|k| {
                let a = self.cartan_pairing(self.datum.simple(k), b);
                exp_p_times(&self.ring, &a)
            })
            .collect()
    }

    /// beta(b) for b = sum b_k h_k.
    pub fn cartan_pairing(&self, beta: usize, b: &[RingElement]) -> RingElement {
        let r = &self.ring;
        b.iter().enumerate().fold(r.zero(), |acc, (k, bk)| r.add(&acc, &r.scale(bk, self.datum.pairing_simple(beta, k))))
    }

    /// exp(ad x) for ad-nilpotent x; every factorial used must be a unit.
    pub fn exp_nilpotent(&self, x: &LieElement) -> Result<GroupElement> {
        let r = &self.ring;
        let ad = self.ad(x);
        let mut mat = ringmat::identity(r, self.dim());
        let mut term = ringmat::identity(r, self.dim());
        for k in 1..=self.dim() as i64 + 1 {
            term = ringmat::mul(r, &term, &ad);
            if ringmat::is_zero(r, &term) {
                return Ok(GroupElement { mat, tag: Provenance::Exp });
            }
            let kinv =
                r.inv(&r.from_int(k)).map_err(|_| Error::Precondition(format!("exp needs {k}! invertible mod p = {}", r.p())))?;
            term = ringmat::scale(r, &term, &kinv);
            mat = ringmat::add(r, &mat, &term);
        }
        Err(Error::Precondition("ad(x) is not nilpotent".into()))
    }

    /// exp(ad X) for X with all coordinates divisible by p. Factorials that
    /// are not units are handled by working at raised precision.
    pub fn exp_hat(&self, x: &LieElement) -> Result<GroupElement> {
        let r = &self.ring;
        if x.iter().any(|c| r.valuation(c) == 0) {
            return Err(Error::Domain("exp_hat needs every coordinate divisible by p".into()));
        }
        let m = r.precision();
        let p = r.p();
        // terms ad(X)^k / k! with k - v_p(k!) < m can be nonzero
        let mut kmax = 0u32;
        let mut extra = 0u32;
        for k in 1..=4 * m + 4 {
            let v = vp_factorial(k as u64, p);
            if k - v < m {
                kmax = k;
                extra = extra.max(v);
            }
        }
        let high = if extra > 0 { r.raised(m + extra)? } else { r.clone() };
        let hc = self.with_ring(high.clone());
        let xl = hc.lift_lie(x, r);
        let ad = hc.ad(&xl);
        let mut mat = ringmat::identity(&high, self.dim());
        let mut power = ringmat::identity(&high, self.dim());
        let mut unit = high.one();
        for k in 1..=kmax as u64 {
            power = ringmat::mul(&high, &power, &ad);
            let mut kk = k;
            while kk % p == 0 {
                kk /= p;
            }
            unit = high.mul(&unit, &high.from_u64(kk));
            let v = vp_factorial(k, p);
            let scaled = ringmat::scale(&high, &power, &high.inv(&unit)?);
            let term = if v == 0 { scaled } else { ringmat::div_p_pow(&high, &scaled, v, &high)? };
            mat = ringmat::add(&high, &mat, &term);
        }
        let mat = ringmat::reduce(&high, &mat, r);
        Ok(GroupElement { mat, tag: Provenance::Exp })
    }

    /// Checks g[X, Y] = [gX, gY] on the given pairs.
    pub fn preserves_bracket(&self, g: &GroupElement, pairs: &[(LieElement, LieElement)]) -> bool {
        pairs.iter().all(|(x, y)| self.apply(g, &self.bracket(x, y)) == self.bracket(&self.apply(g, x), &self.apply(g, y)))
    }

    pub fn preserves_form(&self, g: &GroupElement, pairs: &[(LieElement, LieElement)]) -> bool {
        pairs.iter().all(|(x, y)| self.trace_form(&self.apply(g, x), &self.apply(g, y)) == self.trace_form(x, y))
    }

    /// e = sum X_{alpha_i}, h = 2 rho^vee, f = sum c_i X_{-alpha_i}.
    pub fn principal_sl2(&self) -> Result<Sl2Triple> {
        let d = &self.datum;
        let cox = d.types().iter().map(|t| cox_of(d, t.rank)).max().unwrap_or(0);
        let cox = cox.max(d.coxeter_number());
        if (self.p() as i64) <= cox {
            return Err(Error::Precondition(format!("principal SL2 needs p > Coxeter number {cox}, got p = {}", self.p())));
        }
        let n = d.rank();
        // solve sum_i c_i A[i][j] = 2 over Q; c is integral for 2 rho^vee
        let coeffs = solve_integral_row(d.cartan(), 2)?;
        let mut e = vec![0i64; self.dim()];
        let mut h = vec![0i64; self.dim()];
        let mut f = vec![0i64; self.dim()];
        for i in 0..n {
            let s = d.simple(i);
            e[self.basis.root_index(s)] = 1;
            f[self.basis.root_index(d.neg(s))] = coeffs[i];
            h[self.basis.h_index(i)] = coeffs[i];
        }
        let t = Sl2Triple { e: self.from_ints(&e), h: self.from_ints(&h), f: self.from_ints(&f), h_coeffs: coeffs };
        if !self.is_sl2_triple(&t) {
            return Err(Error::Verification("principal sl2 relations".into()));
        }
        Ok(t)
    }

    pub fn is_sl2_triple(&self, t: &Sl2Triple) -> bool {
        let two = self.ring.from_int(2);
        let m2 = self.ring.from_int(-2);
        self.bracket(&t.h, &t.e) == self.scale(&t.e, &two)
            && self.bracket(&t.h, &t.f) == self.scale(&t.f, &m2)
            && self.bracket(&t.e, &t.f) == t.h
    }

    /// Images of the two unipotent generators of SL2(F_p) under the principal
    /// homomorphism: exp(ad e) and exp(ad f).
    pub fn principal_generators(&self, t: &Sl2Triple) -> Result<Vec<GroupElement>> {
        Ok(vec![self.exp_nilpotent(&t.e)?, self.exp_nilpotent(&t.f)?])
    }

    /// Torus element t_b = exp(p b) alpha^vee(q^{1/2}) with alpha(t_b) = q and
    /// beta(t_b) != 1 mod p^2 for all beta bracketing nontrivially with alpha.
    pub fn trivial_frobenius_search(
        &self,
        q: &RingElement,
        alpha: usize,
        rng: &mut (impl Rng + ?Sized),
        budget: usize,
    ) -> Result<FrobeniusChoice> {
        let r = &self.ring;
        let p = r.p();
        if r.precision() < 2 {
            return Err(Error::Precondition("need precision at least 2".into()));
        }
        if r.valuation(&r.sub(q, &r.one())) != 1 {
            return Err(Error::Domain("need q = 1 mod p and q != 1 mod p^2".into()));
        }
        if alpha >= self.datum.num_roots() {
            return Err(Error::NotARoot(format!("index {alpha}")));
        }
        let s = sqrt_one_mod_p(r, q)?;
        let phi = phi_alpha(&self.datum, &self.basis, alpha)?;
        let n = self.datum.rank();
        let coeff: Vec<i64> = (0..n).map(|k| self.datum.pairing_simple(alpha, k)).collect();
        let k0 = (0..n)
            .find(|&k| coeff[k].rem_euclid(p as i64) != 0)
            .ok_or_else(|| Error::Precondition("alpha vanishes mod p on the Cartan".into()))?;
        let free: Vec<usize> = (0..n).filter(|&k| k != k0).collect();
        let inv0 = r.inv(&r.from_int(coeff[k0]))?;
        let build = |vals: &[u64]| -> Vec<RingElement> {
            let mut b = vec![r.zero(); n];
            let mut acc = r.zero();
            for (idx, &k) in free.iter().enumerate() {
                b[k] = r.from_u64(vals[idx]);
                acc = r.add(&acc, &r.scale(&b[k], coeff[k]));
            }
            b[k0] = r.neg(&r.mul(&acc, &inv0));
            b
        };
        let low = r.reduced(2)?;
        let try_b = |b: &[RingElement]| -> Result<Option<Vec<RingElement>>> {
            let mut values = self.exp_torus_values(b)?;
            let sv = self.coroot_values(alpha, &s)?;
            for (v, w) in values.iter_mut().zip(&sv) {
                *v = r.mul(v, w);
            }
            for &beta in &phi {
                let val = self.root_value(&values, beta)?;
                if low.is_one(&r.reduce_into(&val, &low)) {
                    return Ok(None);
                }
            }
            Ok(Some(values))
        };
        let f = free.len() as u32;
        let space = (p as u128).checked_pow(f).unwrap_or(u128::MAX);
        let mut tried = 0usize;
        if space <= budget as u128 {
            let start = rng.gen_range(0..space.max(1));
            for off in 0..space {
                let mut k = (start + off) % space.max(1);
                let vals: Vec<u64> = (0..f)
                    .map(|_| {
                        let v = (k % p as u128) as u64;
                        k /= p as u128;
                        v
                    })
                    .collect();
                let b = build(&vals);
                tried += 1;
                if let Some(values) = try_b(&b)? {
                    return self.frobenius_choice(b, s, values);
                }
            }
        } else {
            while tried < budget {
                let vals: Vec<u64> = (0..f).map(|_| rng.gen_range(0..p)).collect();
                let b = build(&vals);
                tried += 1;
                if let Some(values) = try_b(&b)? {
                    return self.frobenius_choice(b, s, values);
                }
            }
        }
        Err(Error::Exhausted(format!("no b in ker(alpha) avoids the hyperplanes after {tried} candidates (p = {p})")))
    }

    fn frobenius_choice(&self, b: Vec<RingElement>, s: RingElement, values: Vec<RingElement>) -> Result<FrobeniusChoice> {
        let element = self.torus_elt(&values)?;
        Ok(FrobeniusChoice { b, sqrt_q: s, values, element })
    }
}

/// Output of the trivial-prime Frobenius search.
#[derive(Clone, Debug)]
pub struct FrobeniusChoice {
    /// Cartan coordinates of b over the h_i (alpha(b) = 0 exactly)
    pub b: Vec<RingElement>,
    pub sqrt_q: RingElement,
    /// simple-root values of t_b
    pub values: Vec<RingElement>,
    pub element: GroupElement,
}

fn cox_of(d: &RootDatum, _rank: usize) -> i64 {
    d.coxeter_number()
}

/// v_p(k!)
pub fn vp_factorial(k: u64, p: u64) -> u32 {
    let mut v = 0;
    let mut q = p;
    while q <= k {
        v += (k / q) as u32;
        q = q.saturating_mul(p);
    }
    v
}

/// exp(p x) in Z/p^m (x any ring element); requires the factorials used to be units.
pub fn exp_p_times(ring: &CoeffRing, x: &RingElement) -> Result<RingElement> {
    let px = ring.mul_p_pow(x, 1);
    let mut acc = ring.one();
    let mut term = ring.one();
    for k in 1..ring.precision() as i64 {
        term = ring.mul(&term, &px);
        let kinv = ring.inv(&ring.from_int(k)).map_err(|_| Error::Precondition(format!("exp needs {k}! invertible")))?;
        term = ring.mul(&term, &kinv);
        acc = ring.add(&acc, &term);
    }
    Ok(acc)
}

/// Integer matrices ad(e_a)^k / k! for k >= 1 until they vanish.
fn divided_powers(basis: &ChevalleyBasis, a: usize) -> Result<Vec<Vec<Vec<i64>>>> {
    let ad = basis.ad_basis_int(a);
    let dim = basis.dim();
    let mut out = Vec::new();
    let mut power = ad.clone();
    let mut k = 1i64;
    loop {
        if power.iter().all(|r| r.iter().all(|&x| x == 0)) {
            return Ok(out);
        }
        // power holds ad^k / (k-1)!
        let mut dp = power.clone();
        for row in dp.iter_mut() {
            for x in row.iter_mut() {
                if *x % k != 0 {
                    return Err(Error::Verification("divided power is not integral".into()));
                }
                *x /= k;
            }
        }
        out.push(dp.clone());
        // next: ad^{k+1} / k! = ad * dp
        let mut next = vec![vec![0i64; dim]; dim];
        for i in 0..dim {
            for l in 0..dim {
                let x = ad[i][l];
                if x == 0 {
                    continue;
                }
                for j in 0..dim {
                    next[i][j] += x * dp[l][j];
                }
            }
        }
        power = next;
        k += 1;
        if k > 8 {
            return Err(Error::Verification("root element not nilpotent".into()));
        }
    }
}

fn integral_form(d: &RootDatum, b: &ChevalleyBasis) -> Vec<Vec<i64>> {
    let dim = b.dim();
    let mut g = vec![vec![0i64; dim]; dim];
    let long = |beta: usize| -> i64 {
        let f = d.factor_of(beta);
        (0..d.num_roots()).filter(|&j| d.factor_of(j) == f).map(|j| d.norm(j)).max().unwrap()
    };
    for beta in 0..d.num_roots() {
        let l = long(beta);
        g[b.root_index(beta)][b.root_index(d.neg(beta))] = l / d.norm(beta);
    }
    for i in 0..d.rank() {
        let si = d.simple(i);
        for j in 0..d.rank() {
            let sj = d.simple(j);
            if d.factor_of(si) != d.factor_of(sj) {
                continue;
            }
            let l = long(si);
            // (L/2)(a_i^vee, a_j^vee) = (L/2) 4 (a_i, a_j) / (|a_i|^2 |a_j|^2)
            let num = l * 2 * d.inner(si, sj);
            let den = d.norm(si) * d.norm(sj);
            g[b.h_index(i)][b.h_index(j)] = num / den;
        }
    }
    g
}

/// Integral solution c of sum_i c_i A[i][j] = rhs for all j (Cramer over Q).
fn solve_integral_row(a: &[Vec<i64>], rhs: i64) -> Result<Vec<i64>> {
    let n = a.len();
    // Gaussian elimination over rationals with i128 fractions
    let mut m: Vec<Vec<(i128, i128)>> = (0..n)
        .map(|j| {
            let mut row: Vec<(i128, i128)> = (0..n).map(|i| (a[i][j] as i128, 1)).collect();
            row.push((rhs as i128, 1));
            row
        })
        .collect();
    fn norm((a, b): (i128, i128)) -> (i128, i128) {
        let g = gcd128(a.abs(), b.abs()).max(1);
        let s = if b < 0 { -1 } else { 1 };
        (s * a / g, s * b / g)
    }
    fn gcd128(a: i128, b: i128) -> i128 {
        if b == 0 {
            a
        } else {
            gcd128(b, a % b)
        }
    }
    for c in 0..n {
        let piv = (c..n).find(|&r| m[r][c].0 != 0).ok_or_else(|| Error::Verification("singular Cartan".into()))?;
        m.swap(c, piv);
        let (pn, pd) = m[c][c];
        for j in c..=n {
            let (x, y) = m[c][j];
            m[c][j] = norm((x * pd, y * pn));
        }
        for r in 0..n {
            if r != c && m[r][c].0 != 0 {
                let (fa, fb) = m[r][c];
                for j in c..=n {
                    let (x, y) = m[r][j];
                    let (u, v) = m[c][j];
                    m[r][j] = norm((x * fb * v - fa * u * y, y * fb * v));
                }
            }
        }
    }
    (0..n)
        .map(|i| {
            let (x, y) = m[i][n];
            if x % y != 0 {
                Err(Error::Verification("2 rho^vee not integral".into()))
            } else {
                Ok((x / y) as i64)
            }
        })
        .collect()
}

/// (1 + p^{m-2}X)(1 + pA + p^2 B)(1 - p^{m-2}X + p^{2m-4}X^2) against
/// (1 + p^{m-1}[X, A])(1 + pA + p^2 B) in End over Z/p^m.
pub fn matrix_identity_check(ring: &CoeffRing, x: &RMat, a: &RMat, b: &RMat) -> Result<bool> {
    let m = ring.precision();
    if m < 3 {
        return Err(Error::Precondition("matrix identity needs m >= 3".into()));
    }
    let n = x.nrows();
    let id = ringmat::identity(ring, n);
    let left1 = ringmat::add(ring, &id, &ringmat::scale_p_pow(ring, x, m - 2));
    let mid = ringmat::add(ring, &ringmat::add(ring, &id, &ringmat::scale_p_pow(ring, a, 1)), &ringmat::scale_p_pow(ring, b, 2));
    let x2 = ringmat::mul(ring, x, x);
    let right1 = ringmat::add(
        ring,
        &ringmat::sub(ring, &id, &ringmat::scale_p_pow(ring, x, m - 2)),
        &ringmat::scale_p_pow(ring, &x2, 2 * m - 4),
    );
    let lhs = ringmat::mul(ring, &ringmat::mul(ring, &left1, &mid), &right1);
    let comm = ringmat::commutator(ring, x, a);
    let rhs = ringmat::mul(ring, &ringmat::add(ring, &id, &ringmat::scale_p_pow(ring, &comm, m - 1)), &mid);
    Ok(lhs == rhs)
}

/// (1 + p^{n-1}X + p^n Y)^p = 1 + p^n X mod p^{n+1} on random N x N matrices.
pub fn image_growth_check(p: u64, n: u32, size: usize, samples: usize, rng: &mut (impl Rng + ?Sized)) -> Result<bool> {
    if n < 2 || p < 5 {
        return Err(Error::Precondition("image growth needs n >= 2 and p >= 5".into()));
    }
    let ring = CoeffRing::new(p, n + 1, 1)?;
    let id = ringmat::identity(&ring, size);
    for _ in 0..samples {
        let x = ringmat::random(&ring, size, size, rng);
        let y = ringmat::random(&ring, size, size, rng);
        let g = ringmat::add(
            &ring,
            &ringmat::add(&ring, &id, &ringmat::scale_p_pow(&ring, &x, n - 1)),
            &ringmat::scale_p_pow(&ring, &y, n),
        );
        let lhs = ringmat::pow(&ring, &g, p);
        let rhs = ringmat::add(&ring, &id, &ringmat::scale_p_pow(&ring, &x, n));
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of the Levi certificate for one datum.
#[derive(Clone, Debug, Serialize)]
pub struct LeviCertificate {
    pub samples: usize,
    pub passed: usize,
    /// largest k with n = n'^k needed
    pub max_power: u32,
    pub field_size: u64,
}

/// For random torus elements s over the field, find n = n'^k dividing n_G
/// such that the centralizer of s^n is the Levi of its vanishing roots: the
/// vanishing set is rationally closed, the Weyl stabilizer is generated by its
/// reflections, and the fixed algebra of Ad(s^n) is the Cartan plus those root
/// spaces.
pub fn levi_certificate<F: Field>(
    d: &RootDatum,
    lb: &LeviBound,
    field: &F,
    samples: usize,
    rng: &mut (impl Rng + ?Sized),
) -> Result<LeviCertificate> {
    let n = d.rank();
    let q1 = field.size() - 1;
    // Weyl group on X coordinates
    let refl = |beta: usize| -> Vec<i64> {
        let mut m = vec![0i64; n * n];
        for j in 0..n {
            for i in 0..n {
                m[i * n + j] = (i == j) as i64 - d.char_coords(beta)[i] * d.cochar_coords(beta)[j];
            }
        }
        m
    };
    let gens: Vec<Vec<i64>> = d.simple_roots().iter().map(|&s| refl(s)).collect();
    let weyl = generate_group(&gens, n, 1_000_000)?;
    let value = |vals: &[F::Elem], coords: &[i64]| -> F::Elem {
        coords.iter().zip(vals).fold(field.one(), |acc, (&c, &v)| {
            let e = c.rem_euclid(q1 as i64) as u64;
            field.mul(acc, field.pow(v, e))
        })
    };
    let mut passed = 0;
    let mut max_power = 0;
    for _ in 0..samples {
        let s: Vec<F::Elem> = (0..n)
            .map(|_| loop {
                let v = field.random(rng);
                if !field.is_zero(v) {
                    break v;
                }
            })
            .collect();
        let mut ok = false;
        for k in 0..=lb.exponent.min(64) as u32 {
            // s^{n'^k}
            let e = pow_mod(lb.n_prime as u64, k as u64, q1);
            let t: Vec<F::Elem> = s.iter().map(|&v| field.pow(v, e)).collect();
            let vanish: Vec<usize> = (0..d.num_roots()).filter(|&b| value(&t, d.char_coords(b)) == field.one()).collect();
            let closed = rational_closure(d, &vanish);
            if closed != vanish {
                continue;
            }
            let stab: HashSet<Vec<i64>> = weyl
                .iter()
                .filter(|w| {
                    (0..n).all(|kx| {
                        let col: Vec<i64> = (0..n).map(|i| w[i * n + kx]).collect();
                        let mut e = vec![0; n];
                        e[kx] = 1;
                        value(&t, &col) == value(&t, &e)
                    })
                })
                .cloned()
                .collect();
            let sub_gens: Vec<Vec<i64>> = vanish.iter().map(|&b| refl(b)).collect();
            let sub: HashSet<Vec<i64>> = generate_group(&sub_gens, n, 1_000_000)?.into_iter().collect();
            if stab != sub {
                continue;
            }
            // fixed algebra of the diagonal Ad(t)
            let dim = d.dim();
            let basis = ChevalleyIndex { n_pos: d.num_positive(), rank: n };
            let mut adm: Matrix<F::Elem> = linalg::zeros(field, dim, dim);
            for i in 0..dim {
                let v = match basis.root(i) {
                    Some(b) => value(&t, d.char_coords(b)),
                    None => field.one(),
                };
                adm.set(i, i, field.sub(v, field.one()));
            }
            let fixed = linalg::nullspace(field, &adm);
            let mut expect: Matrix<F::Elem> = linalg::zeros(field, 0, dim);
            for i in 0..dim {
                let keep = match basis.root(i) {
                    Some(b) => vanish.contains(&b),
                    None => true,
                };
                if keep {
                    let mut row = vec![field.zero(); dim];
                    row[i] = field.one();
                    expect.push_row(&row);
                }
            }
            if linalg::same_span(field, &fixed, &expect) {
                ok = true;
                max_power = max_power.max(k);
                break;
            }
        }
        if ok {
            passed += 1;
        }
    }
    Ok(LeviCertificate { samples, passed, max_power, field_size: field.size() })
}

struct ChevalleyIndex {
    n_pos: usize,
    rank: usize,
}

impl ChevalleyIndex {
    fn root(&self, i: usize) -> Option<usize> {
        if i < self.n_pos {
            Some(i)
        } else if i < self.n_pos + self.rank {
            None
        } else {
            Some(i - self.rank)
        }
    }
}

fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut base = b % m;
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * base as u128 % m as u128) as u64;
        }
        base = (base as u128 * base as u128 % m as u128) as u64;
        e >>= 1;
    }
    acc
}

fn generate_group(gens: &[Vec<i64>], n: usize, limit: usize) -> Result<Vec<Vec<i64>>> {
    let mut id = vec![0i64; n * n];
    for i in 0..n {
        id[i * n + i] = 1;
    }
    let mut seen: HashSet<Vec<i64>> = HashSet::from([id.clone()]);
    let mut out = vec![id.clone()];
    let mut frontier = vec![id];
    while let Some(w) = frontier.pop() {
        for g in gens {
            let mut prod = vec![0i64; n * n];
            for i in 0..n {
                for k in 0..n {
                    let x = g[i * n + k];
                    if x != 0 {
                        for j in 0..n {
                            prod[i * n + j] += x * w[k * n + j];
                        }
                    }
                }
            }
            if seen.insert(prod.clone()) {
                if out.len() >= limit {
                    return Err(Error::Unsupported("group too large".into()));
                }
                out.push(prod.clone());
                frontier.push(prod);
            }
        }
    }
    Ok(out)
}

/// Residue-field view: F_{p^r} with elements shared with the m = 1 ring.
pub fn residue_field(ring: &CoeffRing) -> crate::field::GaloisField {
    crate::field::GaloisField::from_ring(ring)
}

/// Prime field of the ring's characteristic.
pub fn prime_field(ring: &CoeffRing) -> PrimeField {
    PrimeField::new(ring.p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootdata::{root_datum_str, Isogeny};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chev(t: &str, p: u64, m: u32) -> Chevalley {
        let (d, b) = root_datum_str(t, Isogeny::Adjoint).unwrap();
        Chevalley::new(d, b, CoeffRing::new(p, m, 1).unwrap()).unwrap()
    }

    #[test]
    fn u_alpha_sl2_matrix() {
        let c = chev("A1", 7, 2);
        let r = c.ring().clone();
        let x = r.from_int(3);
        let g = c.u_alpha(0, &x);
        // basis (X_a, h, X_-a): ad(X_a): h -> -2 X_a, X_-a -> h
        let want = ringmat::from_int(&r, &[vec![1, -2 * 3, -9], vec![0, 1, 3], vec![0, 0, 1]]);
        assert_eq!(g.mat, want);
        assert!(c.is_identity(&c.u_alpha(0, &r.zero())));
    }

    #[test]
    fn u_alpha_is_additive_and_torus_equivariant() {
        let c = chev("G2", 7, 3);
        let r = c.ring().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let vals: Vec<RingElement> = (0..2).map(|_| r.random_unit(&mut rng)).collect();
        let t = c.torus_elt(&vals).unwrap();
        for beta in 0..c.datum().num_roots() {
            let x = r.random(&mut rng);
            let y = r.random(&mut rng);
            let lhs = c.mul(&c.u_alpha(beta, &x), &c.u_alpha(beta, &y));
            assert_eq!(lhs.mat, c.u_alpha(beta, &r.add(&x, &y)).mat);
            let conj = c.conj(&t, &c.u_alpha(beta, &x)).unwrap();
            let bx = r.mul(&c.root_value(&vals, beta).unwrap(), &x);
            assert_eq!(conj.mat, c.u_alpha(beta, &bx).mat);
        }
    }

    #[test]
    fn group_elements_preserve_bracket_and_form() {
        for t in ["A2", "B2", "G2"] {
            let c = chev(t, 11, 2);
            let r = c.ring().clone();
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let mut g = c.identity();
            for _ in 0..4 {
                let beta = rng.gen_range(0..c.datum().num_roots());
                g = c.mul(&g, &c.u_alpha(beta, &r.random(&mut rng)));
            }
            let pairs: Vec<_> = (0..5).map(|_| (c.random_lie(&mut rng), c.random_lie(&mut rng))).collect();
            assert!(c.preserves_bracket(&g, &pairs), "{t}");
            assert!(c.preserves_form(&g, &pairs), "{t}");
        }
    }

    #[test]
    fn exp_hat_series() {
        let c = chev("A2", 5, 3);
        let r = c.ring().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = c.scale_p_pow(&c.random_lie(&mut rng), 1);
        let ad = c.ad(&x);
        let id = ringmat::identity(&r, c.dim());
        let half = r.inv(&r.from_int(2)).unwrap();
        let want = ringmat::add(&r, &ringmat::add(&r, &id, &ad), &ringmat::scale(&r, &ringmat::mul(&r, &ad, &ad), &half));
        assert_eq!(c.exp_hat(&x).unwrap().mat, want);
        assert!(c.is_identity(&c.exp_hat(&c.zero()).unwrap()));
        assert!(c.exp_hat(&c.basis_vec(0)).is_err());
        // exp_hat at m = p + 1 uses raised precision
        let c6 = chev("A1", 5, 6);
        let x6 = c6.scale_p_pow(&c6.random_lie(&mut rng), 1);
        let g = c6.exp_hat(&x6).unwrap();
        let gi = c6.exp_hat(&x6.iter().map(|v| c6.ring().neg(v)).collect()).unwrap();
        assert!(c6.is_identity(&c6.mul(&g, &gi)));
    }

    #[test]
    fn matrix_identity_small_case() {
        let ring = CoeffRing::new(5, 3, 1).unwrap();
        let x = ringmat::from_int(&ring, &[vec![0, 1], vec![0, 0]]);
        let a = ringmat::from_int(&ring, &[vec![0, 0], vec![1, 0]]);
        let b = ringmat::zeros(&ring, 2, 2);
        assert!(matrix_identity_check(&ring, &x, &a, &b).unwrap());
        let z = ringmat::zeros(&ring, 2, 2);
        assert!(matrix_identity_check(&ring, &z, &a, &b).unwrap());
        assert!(matrix_identity_check(&CoeffRing::new(5, 2, 1).unwrap(), &z, &z, &z).is_err());
    }

    #[test]
    fn principal_sl2_eigenvalues() {
        let c = chev("A2", 7, 1);
        let t = c.principal_sl2().unwrap();
        assert!(c.is_sl2_triple(&t));
        assert_eq!(t.h_coeffs, vec![2, 2]);
        let c = chev("G2", 11, 1);
        let t = c.principal_sl2().unwrap();
        // ad(h) on X_beta is 2 ht(beta)
        let d = c.datum();
        let top = (0..d.num_roots()).map(|b| 2 * d.height(b)).max().unwrap();
        assert_eq!(top, 10);
        let hb = c.bracket(&t.h, &c.basis_vec(c.basis().root_index(d.num_positive() - 1)));
        assert_eq!(hb[c.basis().root_index(d.num_positive() - 1)], c.ring().from_int(10));
        assert!(chev("G2", 5, 1).principal_sl2().is_err());
    }

    #[test]
    fn frobenius_search_a1_a2() {
        let c = chev("A1", 7, 2);
        let r = c.ring().clone();
        let q = r.from_int(8);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let fc = c.trivial_frobenius_search(&q, 0, &mut rng, 100).unwrap();
        assert_eq!(c.root_value(&fc.values, 0).unwrap(), q);
        let c = chev("A2", 13, 2);
        let r = c.ring().clone();
        let q = r.from_int(14);
        let a = c.datum().simple(0);
        let fc = c.trivial_frobenius_search(&q, a, &mut rng, 1000).unwrap();
        assert_eq!(c.root_value(&fc.values, a).unwrap(), q);
        for beta in phi_alpha(c.datum(), c.basis(), a).unwrap() {
            assert!(!r.is_one(&c.root_value(&fc.values, beta).unwrap()));
        }
        assert!(c.trivial_frobenius_search(&r.from_int(1), a, &mut rng, 10).is_err());
    }

    #[test]
    fn image_growth_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(image_growth_check(5, 2, 2, 20, &mut rng).unwrap());
        assert!(image_growth_check(7, 3, 3, 10, &mut rng).unwrap());
    }

    #[test]
    fn levi_certificate_a1() {
        let (d, _) = root_datum_str("A1", Isogeny::Adjoint).unwrap();
        let lb = crate::rootdata::levi_bound(&d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cert = levi_certificate(&d, &lb, &PrimeField::new(31), 50, &mut rng).unwrap();
        assert_eq!(cert.passed, 50);
    }
}
