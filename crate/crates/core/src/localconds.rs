//! Local deformation conditions at trivial primes (tame model generated by a
//! Frobenius lift and a tame inertia generator) and ordinary conditions at p
//! for the trivial residual representation.
//!
//! Cocycles with trivial residual action are homomorphisms, so a class is the
//! tuple of its values on the generators. For the tame model it is stored as
//! the row vector (phi(sigma) | phi(tau)) over the residue field; dual classes
//! use the dual basis of the Chevalley basis.

use rand::Rng;
use serde::Serialize;

use crate::chevgroup::{Chevalley, GroupElement, LieElement};
use crate::coeffring::{sqrt_one_mod_p, CoeffRing, RingElement};
use crate::error::{Error, Result};
use crate::field::{Field, GaloisField};
use crate::linalg::{self, FMat};
use crate::rootdata::phi_alpha;

pub type Elem = RingElement;
pub type Space = FMat<GaloisField>;

/// Tame quotient of a local Galois group at a trivial prime, with the group
/// and coefficient ring carried by `ch`.
#[derive(Clone, Debug)]
pub struct TameLocalModel {
    pub ch: Chevalley,
    pub q: u64,
    /// tau is normalized against a fixed p-th root of unity; recorded only
    pub zeta_normalized: bool,
    field: GaloisField,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalLift {
    pub sigma: GroupElement,
    pub tau: GroupElement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Variant {
    Plain,
    Unr2,
    Ram2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExtraKind {
    Unr,
    Ram,
}

/// The spaces attached to (alpha, variant) at a trivial prime.
#[derive(Clone, Debug)]
pub struct ConditionSpaces {
    pub alpha: usize,
    pub kind: ExtraKind,
    pub tan: Space,
    pub extra: Space,
    /// roots indexing the rows of `extra`
    pub extra_roots: Vec<usize>,
    pub l: Space,
    pub l_perp: Space,
    /// explicit description of the annihilator of the unramified L^alpha
    pub perp_description: Space,
    pub perp_matches_description: bool,
}

impl ConditionSpaces {
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.tan.nrows(), self.extra.nrows(), self.l.nrows(), self.l_perp.nrows())
    }
}

/// Normal-form coordinates of a lift: rho(sigma) = t * prod u_gamma(y_gamma)
/// with each gamma centralizing X_alpha, and rho(tau) = u_alpha(x).
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub alpha: usize,
    pub torus: Vec<Elem>,
    pub cent: Vec<(usize, Elem)>,
    pub x: Elem,
}

impl TameLocalModel {
    pub fn new(ch: Chevalley, q: u64) -> Result<Self> {
        let p = ch.p();
        if q % p != 1 || q % (p * p) == 1 {
            return Err(Error::Domain(format!("q = {q} must be 1 mod p and not 1 mod p^2 (p = {p})")));
        }
        let field = GaloisField::from_ring(ch.ring());
        Ok(TameLocalModel { ch, q, zeta_normalized: true, field })
    }

    pub fn field(&self) -> &GaloisField {
        &self.field
    }
    pub fn ring(&self) -> &CoeffRing {
        self.ch.ring()
    }
    pub fn dim(&self) -> usize {
        self.ch.dim()
    }
    pub fn q_elem(&self) -> Elem {
        self.ring().from_u64(self.q)
    }

    /// Same model at another precision.
    pub fn at_precision(&self, m: u32) -> Result<Self> {
        let ring = CoeffRing::new(self.ch.p(), m, self.ring().degree())?;
        TameLocalModel::new(self.ch.with_ring(ring), self.q)
    }

    fn residue(&self, x: &Elem) -> Elem {
        self.ring().reduce_into(x, self.field.ring())
    }

    pub fn residue_lie(&self, x: &LieElement) -> Vec<Elem> {
        x.iter().map(|c| self.residue(c)).collect()
    }

    /// sigma tau sigma^{-1} = tau^q exactly.
    pub fn check_relation(&self, rho: &LocalLift) -> Result<bool> {
        let ch = &self.ch;
        let lhs = ch.conj(&rho.sigma, &rho.tau)?;
        Ok(lhs.mat == ch.pow(&rho.tau, self.q).mat)
    }

    pub fn lift_from_normal_form(&self, nf: &NormalForm) -> Result<LocalLift> {
        let ch = &self.ch;
        let mut sigma = ch.torus_elt(&nf.torus)?;
        for (g, y) in &nf.cent {
            sigma = ch.mul(&sigma, &ch.u_alpha(*g, y));
        }
        Ok(LocalLift { sigma, tau: ch.u_alpha(nf.alpha, &nf.x) })
    }

    /// Coefficient x with `g = u_alpha(x)`, if `g` is a root element for alpha.
    pub fn root_coordinate(&self, g: &GroupElement, alpha: usize) -> Option<Elem> {
        let ch = &self.ch;
        let d = ch.datum();
        let r = ch.ring();
        let k = (0..d.rank()).find(|&k| r.is_unit(&r.from_int(d.pairing_simple(alpha, k))))?;
        let entry = g.mat.get(ch.basis().root_index(alpha), ch.basis().h_index(k));
        let c = r.from_int(-d.pairing_simple(alpha, k));
        let x = r.div(&entry, &c).ok()?;
        if ch.u_alpha(alpha, &x).mat == g.mat {
            Some(x)
        } else {
            None
        }
    }

    /// Whether `g` is a torus element of the fixed frame (diagonal, trivial on
    /// the Cartan, multiplicative root values); returns simple-root values.
    pub fn torus_values(&self, g: &GroupElement) -> Option<Vec<Elem>> {
        let ch = &self.ch;
        let d = ch.datum();
        let values: Vec<Elem> = (0..d.rank())
            .map(|i| {
                let s = ch.basis().root_index(d.simple(i));
                g.mat.get(s, s)
            })
            .collect();
        if !values.iter().all(|v| ch.ring().is_unit(v)) {
            return None;
        }
        let t = ch.torus_elt(&values).ok()?;
        (t.mat == g.mat).then_some(values)
    }

    /// Normal-form membership in the fixed torus frame.
    pub fn membership(&self, rho: &LocalLift, alpha: usize, variant: Variant) -> Result<bool> {
        if !self.check_relation(rho)? {
            return Err(Error::InvalidLift("sigma tau sigma^-1 != tau^q".into()));
        }
        let ch = &self.ch;
        let r = ch.ring();
        let res = self.field.ring();
        // lift of the trivial representation
        let trivial = |g: &GroupElement| crate::ringmat::is_identity(res, &crate::ringmat::reduce(r, &g.mat, res));
        if !trivial(&rho.sigma) || !trivial(&rho.tau) {
            return Ok(false);
        }
        let xa = ch.basis_vec(ch.basis().root_index(alpha));
        if ch.apply(&rho.sigma, &xa) != ch.scale(&xa, &self.q_elem()) {
            return Ok(false);
        }
        let Some(x) = self.root_coordinate(&rho.tau, alpha) else { return Ok(false) };
        if variant == Variant::Plain {
            return Ok(true);
        }
        let low = r.reduced(2)?;
        let m2 = self.ch.with_ring(low.clone());
        let model2 =
            TameLocalModel { ch: m2.clone(), q: self.q, zeta_normalized: self.zeta_normalized, field: self.field.clone() };
        let sigma2 = ch.reduce_group(&rho.sigma, &low);
        let Some(values) = model2.torus_values(&sigma2) else { return Ok(false) };
        for beta in phi_alpha(ch.datum(), ch.basis(), alpha)? {
            if low.is_one(&m2.root_value(&values, beta)?) {
                return Ok(false);
            }
        }
        let x2 = r.reduce_into(&x, &low);
        Ok(match variant {
            Variant::Unr2 => low.is_zero(&x2),
            Variant::Ram2 => low.valuation(&x2) == 1,
            Variant::Plain => unreachable!(),
        })
    }

    // ----- condition spaces over the residue field -----

    fn f(&self) -> &GaloisField {
        &self.field
    }

    fn unit_vec(&self, len: usize, i: usize) -> Vec<Elem> {
        let mut v = vec![self.f().zero(); len];
        v[i] = self.f().one();
        v
    }

    fn cocycle(&self, sigma: &[Elem], tau: &[Elem]) -> Vec<Elem> {
        let mut v = sigma.to_vec();
        v.extend_from_slice(tau);
        v
    }

    /// ker(alpha) on the Cartan, as Lie vectors over the residue field.
    pub fn cartan_kernel(&self, alpha: usize) -> Space {
        let f = self.f();
        let d = self.ch.datum();
        let n = d.rank();
        let row: Vec<Elem> = (0..n).map(|k| f.from_int(d.pairing_simple(alpha, k))).collect();
        let ker = linalg::nullspace(f, &FMat::<GaloisField>::from_rows(&[row], n));
        let dim = self.dim();
        let mut out = linalg::zeros(f, 0, dim);
        for i in 0..ker.nrows() {
            let mut v = vec![f.zero(); dim];
            for k in 0..n {
                v[self.ch.basis().h_index(k)] = ker.get(i, k);
            }
            out.push_row(&v);
        }
        out
    }

    /// Cent_g(g_alpha) over the residue field, from the bracket.
    pub fn centralizer(&self, alpha: usize) -> Space {
        let f = self.f();
        let xa = self.ch.basis_vec(self.ch.basis().root_index(alpha));
        let ad = self.ch.ad(&xa);
        let res: Vec<Vec<Elem>> = (0..ad.nrows()).map(|i| ad.row(i).iter().map(|c| self.residue(c)).collect()).collect();
        linalg::nullspace(f, &FMat::<GaloisField>::from_rows(&res, self.dim()))
    }

    pub fn tangent_space(&self, alpha: usize) -> Space {
        let f = self.f();
        let dim = self.dim();
        let sig = linalg::span_sum(f, &self.cartan_kernel(alpha), &self.centralizer(alpha));
        let zero = vec![f.zero(); dim];
        let mut out = linalg::zeros(f, 0, 2 * dim);
        for i in 0..sig.nrows() {
            out.push_row(&self.cocycle(sig.row(i), &zero));
        }
        out.push_row(&self.cocycle(&zero, &self.unit_vec(dim, self.ch.basis().root_index(alpha))));
        out
    }

    /// Extra cocycles: unramified c_beta(sigma) = X_beta, or, for the ramified
    /// variant with rho2(tau) = u_alpha(p y), c_beta(tau) = y / u_beta [X_beta, X_alpha]
    /// where u_beta = (1 - beta(rho2(sigma))) / p.
    pub fn extra_cocycles(&self, alpha: usize, kind: ExtraKind, rho2: Option<&LocalLift>) -> Result<(Space, Vec<usize>)> {
        let f = self.f();
        let ch = &self.ch;
        let dim = self.dim();
        let phi = phi_alpha(ch.datum(), ch.basis(), alpha)?;
        let zero = vec![f.zero(); dim];
        let mut out = linalg::zeros(f, 0, 2 * dim);
        let ram = match kind {
            ExtraKind::Unr => None,
            ExtraKind::Ram => {
                let rho = rho2.ok_or_else(|| Error::Precondition("ramified extra cocycles need rho2".into()))?;
                Some(self.ram_data(rho, alpha)?)
            }
        };
        for &beta in &phi {
            let sigma = self.unit_vec(dim, ch.basis().root_index(beta));
            let tau = match &ram {
                None => zero.clone(),
                Some((y, values, ring2)) => {
                    let kappa = self.ram_coefficient(beta, y, values, ring2)?;
                    let br = ch.bracket(&ch.basis_vec(ch.basis().root_index(beta)), &ch.basis_vec(ch.basis().root_index(alpha)));
                    self.residue_lie(&br).iter().map(|c| f.mul(*c, kappa)).collect()
                }
            };
            out.push_row(&self.cocycle(&sigma, &tau));
        }
        Ok((out, phi))
    }

    /// (y mod p, simple-root values of rho2(sigma), ring mod p^2) for a ram2 lift.
    fn ram_data(&self, rho: &LocalLift, alpha: usize) -> Result<(Elem, Vec<Elem>, CoeffRing)> {
        let r = self.ring();
        let low = r.reduced(2)?;
        let m2 =
            TameLocalModel { ch: self.ch.with_ring(low.clone()), q: self.q, zeta_normalized: true, field: self.field.clone() };
        let s2 = self.ch.reduce_group(&rho.sigma, &low);
        let t2 = self.ch.reduce_group(&rho.tau, &low);
        let values = m2.torus_values(&s2).ok_or_else(|| Error::Precondition("rho2(sigma) is not a torus element".into()))?;
        let x = m2.root_coordinate(&t2, alpha).ok_or_else(|| Error::Precondition("rho2(tau) is not in U_alpha".into()))?;
        if low.valuation(&x) != 1 {
            return Err(Error::Precondition("rho2(tau) = u_alpha(p y) needs y a unit".into()));
        }
        let y = low.div_p_pow(&x, 1)?;
        let y = low.reduce_into(&y, self.field.ring());
        Ok((y, values, low))
    }

    fn ram_coefficient(&self, beta: usize, y: &Elem, values: &[Elem], ring2: &CoeffRing) -> Result<Elem> {
        let f = self.f();
        let ch2 = self.ch.with_ring(ring2.clone());
        let bv = ch2.root_value(values, beta)?;
        let diff = ring2.sub(&ring2.one(), &bv);
        if ring2.valuation(&diff) != 1 {
            return Err(Error::DegenerateDenominator(beta));
        }
        let unit = ring2.reduce_into(&ring2.div_p_pow(&diff, 1)?, self.field.ring());
        Ok(f.mul(*y, f.inv(unit)))
    }

    /// Gram matrix of the local pairing between (phi(sigma)|phi(tau)) and
    /// (psi(sigma)|psi(tau)): <phi(tau), psi(sigma)> - <phi(sigma), psi(tau)>,
    /// with <,> the dual-basis pairing of W and W*.
    pub fn pairing_gram(&self) -> Space {
        tame_pairing_gram(self.f(), self.dim())
    }

    pub fn condition_spaces(&self, alpha: usize, kind: ExtraKind, rho2: Option<&LocalLift>) -> Result<ConditionSpaces> {
        let f = self.f();
        let dim = self.dim();
        let tan = self.tangent_space(alpha);
        let (extra, extra_roots) = self.extra_cocycles(alpha, kind, rho2)?;
        let l = linalg::span_sum(f, &tan, &extra);
        if l.nrows() != dim {
            return Err(Error::Verification(format!("dim L^alpha = {} != dim g = {dim}", l.nrows())));
        }
        let l_perp = perp_space(f, &l, &self.pairing_gram());
        if l_perp.nrows() != dim {
            return Err(Error::Verification(format!("dim L^perp = {} != dim g", l_perp.nrows())));
        }
        let desc = self.perp_description(alpha);
        let matches = linalg::same_span(f, &l_perp, &desc);
        if kind == ExtraKind::Unr && !matches {
            return Err(Error::Verification("annihilator of L^alpha differs from its explicit description".into()));
        }
        Ok(ConditionSpaces {
            alpha,
            kind,
            tan,
            extra,
            extra_roots,
            l,
            l_perp,
            perp_description: desc,
            perp_matches_description: matches,
        })
    }

    /// psi(sigma) kills g_alpha and psi(tau) kills ker(alpha|t) and every root space.
    pub fn perp_description(&self, alpha: usize) -> Space {
        let f = self.f();
        let dim = self.dim();
        let d = self.ch.datum();
        let zero = vec![f.zero(); dim];
        let ia = self.ch.basis().root_index(alpha);
        let mut out = linalg::zeros(f, 0, 2 * dim);
        for i in (0..dim).filter(|&i| i != ia) {
            out.push_row(&self.cocycle(&self.unit_vec(dim, i), &zero));
        }
        let mut tau = zero.clone();
        for k in 0..d.rank() {
            tau[self.ch.basis().h_index(k)] = f.from_int(d.pairing_simple(alpha, k));
        }
        // the form alpha on t, written in the dual basis
        out.push_row(&self.cocycle(&zero, &tau));
        out
    }

    /// Unramified classes of H^1(W) or H^1(W*).
    pub fn unramified(&self) -> Space {
        let f = self.f();
        let dim = self.dim();
        let zero = vec![f.zero(); dim];
        let mut out = linalg::zeros(f, 0, 2 * dim);
        for i in 0..dim {
            out.push_row(&self.cocycle(&self.unit_vec(dim, i), &zero));
        }
        out
    }

    /// Conjugator g with g rho g^{-1} = exp(p^{m-1} c_beta) rho for the basis
    /// extra cocycle at beta, verified exactly mod p^m.
    pub fn stability_check(&self, rho: &LocalLift, alpha: usize, beta: usize, kind: ExtraKind) -> Result<(GroupElement, bool)> {
        let ch = &self.ch;
        let r = ch.ring();
        let m = r.precision();
        if m < 3 {
            return Err(Error::Precondition("stability needs m >= 3".into()));
        }
        let variant = match kind {
            ExtraKind::Unr => Variant::Unr2,
            ExtraKind::Ram => Variant::Ram2,
        };
        if !self.membership(rho, alpha, variant)? {
            return Err(Error::Precondition("lift is not in the matching variant set".into()));
        }
        let low = r.reduced(2)?;
        let m2 = TameLocalModel { ch: ch.with_ring(low.clone()), q: self.q, zeta_normalized: true, field: self.field.clone() };
        let values = m2.torus_values(&ch.reduce_group(&rho.sigma, &low)).expect("checked by membership");
        let bv = m2.ch.root_value(&values, beta)?;
        let diff = low.sub(&low.one(), &bv);
        if low.valuation(&diff) != 1 {
            return Err(Error::DegenerateDenominator(beta));
        }
        // z = p / (1 - beta(rho2(sigma))) read mod p, lifted
        let unit = low.div_p_pow(&diff, 1)?;
        let z_res = self.field.inv(low.reduce_into(&unit, self.field.ring()));
        let z = r.lift_from(&z_res, self.field.ring());
        let g = ch.u_alpha(beta, &r.mul_p_pow(&z, m - 2));
        // the cocycle values, lifted to the ring
        let c_sigma = ch.basis_vec(ch.basis().root_index(beta));
        let c_tau = match kind {
            ExtraKind::Unr => ch.zero(),
            ExtraKind::Ram => {
                let (y, values, ring2) = self.ram_data(rho, alpha)?;
                let kappa = self.ram_coefficient(beta, &y, &values, &ring2)?;
                let br = ch.bracket(&c_sigma, &ch.basis_vec(ch.basis().root_index(alpha)));
                ch.scale(&br, &r.lift_from(&kappa, self.field.ring()))
            }
        };
        let ok = self.translate_matches(rho, &g, &c_sigma, &c_tau)?;
        Ok((g, ok))
    }

    /// g rho g^{-1} == exp(p^{m-1} c) rho on both generators.
    pub fn translate_matches(&self, rho: &LocalLift, g: &GroupElement, c_sigma: &LieElement, c_tau: &LieElement) -> Result<bool> {
        let ch = &self.ch;
        let m = ch.precision();
        let es = ch.exp_hat(&ch.scale_p_pow(c_sigma, m - 1))?;
        let et = ch.exp_hat(&ch.scale_p_pow(c_tau, m - 1))?;
        let lhs_s = ch.conj(g, &rho.sigma)?;
        let lhs_t = ch.conj(g, &rho.tau)?;
        Ok(lhs_s.mat == ch.mul(&es, &rho.sigma).mat && lhs_t.mat == ch.mul(&et, &rho.tau).mat)
    }

    // ----- sampling and smoothness -----

    /// Roots gamma with [X_gamma, X_alpha] = 0.
    pub fn centralizing_roots(&self, alpha: usize) -> Vec<usize> {
        let d = self.ch.datum();
        (0..d.num_roots()).filter(|&g| g != d.neg(alpha) && d.sum(g, alpha).is_none()).collect()
    }

    /// Random member of the variant set in normal form. For Unr2 and Ram2 the
    /// mod p^2 torus part comes from `frob`.
    pub fn sample_normal_form(
        &self,
        alpha: usize,
        variant: Variant,
        frob: Option<&[Elem]>,
        rng: &mut (impl Rng + ?Sized),
    ) -> Result<NormalForm> {
        let ch = &self.ch;
        let r = ch.ring();
        let m = r.precision();
        let n = ch.datum().rank();
        let depth = match variant {
            Variant::Plain => 1,
            _ => 2,
        };
        let mut torus: Vec<Elem> = match (variant, frob) {
            (Variant::Plain, _) => (0..n).map(|_| r.add(&r.one(), &r.mul_p_pow(&r.random(rng), 1))).collect(),
            (_, Some(v)) => v.iter().map(|x| r.add(x, &r.mul_p_pow(&r.random(rng), 2))).collect(),
            (_, None) => return Err(Error::Precondition("variant needs a mod p^2 torus value".into())),
        };
        self.fix_alpha_value(&mut torus, alpha)?;
        let cent: Vec<(usize, Elem)> =
            self.centralizing_roots(alpha).into_iter().map(|g| (g, r.mul_p_pow(&r.random(rng), depth))).collect();
        let x = match variant {
            Variant::Plain => r.mul_p_pow(&r.random(rng), 1),
            Variant::Unr2 => r.mul_p_pow(&r.random(rng), 2),
            Variant::Ram2 => {
                let y = r.random_unit(rng);
                let base = r.mul_p_pow(&y, 1);
                if m > 2 {
                    r.add(&base, &r.mul_p_pow(&r.random(rng), 2))
                } else {
                    base
                }
            }
        };
        Ok(NormalForm { alpha, torus, cent, x })
    }

    /// Multiply by alpha^vee(u) so that alpha(t) = q exactly.
    pub fn fix_alpha_value(&self, torus: &mut [Elem], alpha: usize) -> Result<()> {
        let ch = &self.ch;
        let r = ch.ring();
        let a = ch.root_value(torus, alpha)?;
        let ratio = r.div(&self.q_elem(), &a)?;
        let u = sqrt_one_mod_p(r, &ratio)?;
        let cv = ch.coroot_values(alpha, &u)?;
        for (t, c) in torus.iter_mut().zip(&cv) {
            *t = r.mul(t, c);
        }
        debug_assert_eq!(ch.root_value(torus, alpha)?, self.q_elem());
        Ok(())
    }

    /// Lift normal-form coordinates to precision m + 1 via canonical lifts,
    /// then restore alpha(t) = q.
    pub fn lift_normal_form(&self, nf: &NormalForm, up: &TameLocalModel) -> Result<NormalForm> {
        let r = self.ring();
        let ur = up.ring();
        let mut torus: Vec<Elem> = nf.torus.iter().map(|t| ur.lift_from(t, r)).collect();
        up.fix_alpha_value(&mut torus, nf.alpha)?;
        Ok(NormalForm {
            alpha: nf.alpha,
            torus,
            cent: nf.cent.iter().map(|(g, y)| (*g, ur.lift_from(y, r))).collect(),
            x: ur.lift_from(&nf.x, r),
        })
    }

    /// Torus values of a Frobenius lift mod p^2 fixing the root alpha, lifted
    /// to the model's precision.
    pub fn frobenius_values(&self, alpha: usize, rng: &mut (impl Rng + ?Sized)) -> Result<Vec<Elem>> {
        let m2 = self.at_precision(2)?;
        let fv = m2.ch.trivial_frobenius_search(&m2.q_elem(), alpha, rng, 10_000)?;
        Ok(fv.values.iter().map(|x| self.ring().lift_from(x, m2.ring())).collect())
    }
}

/// Annihilator of L under the local pairing with the given Gram matrix.
pub fn perp_space(f: &GaloisField, l: &Space, gram: &Space) -> Space {
    linalg::annihilator(f, l, gram)
}

/// Block Gram matrix of the tame pairing for a module of dimension d.
pub fn tame_pairing_gram(f: &GaloisField, d: usize) -> Space {
    let mut g = linalg::zeros(f, 2 * d, 2 * d);
    for i in 0..d {
        // phi(tau) . psi(sigma)
        g.set(d + i, i, f.one());
        // - phi(sigma) . psi(tau)
        g.set(i, d + i, f.neg(f.one()));
    }
    g
}

/// <phi(tau), psi(sigma)> - <phi(sigma), psi(tau)> for the dual-basis pairing.
pub fn duality_pairing(f: &GaloisField, phi: &[Elem], psi: &[Elem]) -> Result<Elem> {
    if phi.len() != psi.len() || phi.len() % 2 != 0 {
        return Err(Error::Precondition("cocycles must be (sigma | tau) of equal length".into()));
    }
    let d = phi.len() / 2;
    let a = linalg::dot(f, &phi[d..], &psi[..d]);
    let b = linalg::dot(f, &phi[..d], &psi[d..]);
    Ok(f.sub(a, b))
}

/// Result of a smoothness probe.
#[derive(Clone, Debug, Serialize)]
pub struct SmoothnessReport {
    pub variant: Variant,
    pub samples: usize,
    pub lifted: usize,
}

/// Sample members mod p^m, lift each to p^{m+1} by lifting its normal-form
/// coordinates, and check relation, reduction and membership of the lift.
pub fn smoothness_probe(
    model: &TameLocalModel,
    alpha: usize,
    variant: Variant,
    samples: usize,
    rng: &mut (impl Rng + ?Sized),
) -> Result<SmoothnessReport> {
    let m = model.ring().precision();
    let up = model.at_precision(m + 1)?;
    let frob = match variant {
        Variant::Plain => None,
        _ => {
            let m2 = model.at_precision(2)?;
            let q2 = m2.q_elem();
            Some(m2.ch.trivial_frobenius_search(&q2, alpha, rng, 10_000)?.values)
        }
    };
    let mut lifted = 0;
    for _ in 0..samples {
        let frob_m = frob.as_ref().map(|v| {
            let r2 = CoeffRing::new(model.ch.p(), 2, model.ring().degree()).unwrap();
            v.iter().map(|x| model.ring().lift_from(x, &r2)).collect::<Vec<_>>()
        });
        let nf = model.sample_normal_form(alpha, variant, frob_m.as_deref(), rng)?;
        let rho = model.lift_from_normal_form(&nf)?;
        if !model.membership(&rho, alpha, variant)? {
            return Err(Error::Verification("sampled lift is not a member".into()));
        }
        let nf_up = model.lift_normal_form(&nf, &up)?;
        let rho_up = up.lift_from_normal_form(&nf_up)?;
        let back = LocalLift {
            sigma: up.ch.reduce_group(&rho_up.sigma, model.ring()),
            tau: up.ch.reduce_group(&rho_up.tau, model.ring()),
        };
        if back.sigma.mat != rho.sigma.mat || back.tau.mat != rho.tau.mat {
            return Err(Error::Verification("lift does not reduce to the sample".into()));
        }
        if !up.membership(&rho_up, alpha, variant)? {
            return Err(Error::Verification(format!("unliftable sample at precision {m}")));
        }
        lifted += 1;
    }
    Ok(SmoothnessReport { variant, samples, lifted })
}

// ----- fixed multiplier -----

/// In the model g' = g_mu + a with a the last `a_dim` coordinates of each
/// generator block, restrict to cocycles valued in g_mu.
pub fn fixed_multiplier_restrict(f: &GaloisField, space: &Space, total_dim: usize, a_dim: usize, blocks: usize) -> Result<Space> {
    if space.ncols() != blocks * total_dim || a_dim > total_dim {
        return Err(Error::Precondition("split data inconsistent with the space".into()));
    }
    if a_dim == 0 {
        return Ok(space.clone());
    }
    let mut eqs = linalg::zeros(f, 0, space.ncols());
    for b in 0..blocks {
        for k in total_dim - a_dim..total_dim {
            let mut row = vec![f.zero(); space.ncols()];
            row[b * total_dim + k] = f.one();
            eqs.push_row(&row);
        }
    }
    let target = linalg::nullspace(f, &eqs);
    Ok(linalg::intersect(f, space, &target))
}

/// L^alpha for g + a (a central of dimension a_dim): L plus the central
/// directions of Cent(g_alpha) in the sigma slot.
pub fn augment_with_center(f: &GaloisField, space: &Space, dim: usize, a_dim: usize) -> Space {
    let total = dim + a_dim;
    let mut out = linalg::zeros(f, 0, 2 * total);
    for i in 0..space.nrows() {
        let row = space.row(i);
        let mut v = vec![f.zero(); 2 * total];
        v[..dim].copy_from_slice(&row[..dim]);
        v[total..total + dim].copy_from_slice(&row[dim..]);
        out.push_row(&v);
    }
    for k in 0..a_dim {
        let mut v = vec![f.zero(); 2 * total];
        v[dim + k] = f.one();
        out.push_row(&v);
    }
    out
}

// ----- ordinary condition at p -----

/// Ordinary model at a place above p with [F_v : Q_p] = f: a free group on
/// sigma (unramified direction) and tau_1..tau_f (inertia directions), so
/// H^1 for the trivial residual action is g^{f+1}.
#[derive(Clone, Debug)]
pub struct OrdinaryModel {
    pub ch: Chevalley,
    pub f_degree: usize,
    field: GaloisField,
}

#[derive(Clone, Debug)]
pub struct OrdinarySpaces {
    pub tan: Space,
    pub extra: Space,
    pub l: Space,
}

impl OrdinaryModel {
    pub fn new(ch: Chevalley, f_degree: usize) -> Result<Self> {
        if f_degree == 0 {
            return Err(Error::Precondition("[F_v : Q_p] must be positive".into()));
        }
        let field = GaloisField::from_ring(ch.ring());
        Ok(OrdinaryModel { ch, f_degree, field })
    }
    pub fn field(&self) -> &GaloisField {
        &self.field
    }
    pub fn generators(&self) -> usize {
        self.f_degree + 1
    }
    pub fn h1_dim(&self) -> usize {
        self.generators() * self.ch.dim()
    }

    /// Tangent space for trivial residual representation: sigma into the
    /// Borel b, inertia generators into its nilradical n.
    pub fn tangent(&self) -> Space {
        let f = &self.field;
        let dim = self.ch.dim();
        let d = self.ch.datum();
        let b = self.ch.basis();
        let gens = self.generators();
        let mut out = linalg::zeros(f, 0, gens * dim);
        let borel: Vec<usize> = (0..dim).filter(|&i| b.basis_root(i).is_none_or(|r| d.is_positive(r))).collect();
        let nil: Vec<usize> = (0..dim).filter(|&i| b.basis_root(i).is_some_and(|r| d.is_positive(r))).collect();
        for &i in &borel {
            let mut v = vec![f.zero(); gens * dim];
            v[i] = f.one();
            out.push_row(&v);
        }
        for gi in 1..gens {
            for &i in &nil {
                let mut v = vec![f.zero(); gens * dim];
                v[gi * dim + i] = f.one();
                out.push_row(&v);
            }
        }
        out
    }

    /// Extra cocycles c_beta(g) = (1 - beta(chi(g))) / p X_beta for beta < 0,
    /// with chi given as simple-root values mod p^2 per generator.
    pub fn extra(&self, chi: &[Vec<Elem>]) -> Result<(Space, Vec<usize>)> {
        let f = &self.field;
        let dim = self.ch.dim();
        let gens = self.generators();
        if chi.len() != gens {
            return Err(Error::Precondition("one torus value per generator".into()));
        }
        let low = self.ch.ring().reduced(2)?;
        let c2 = self.ch.with_ring(low.clone());
        let d = self.ch.datum();
        let mut bad = Vec::new();
        let mut out = linalg::zeros(f, 0, gens * dim);
        let mut roots = Vec::new();
        for beta in (0..d.num_roots()).filter(|&r| !d.is_positive(r)) {
            let mut v = vec![f.zero(); gens * dim];
            let mut nontrivial = false;
            for (gi, vals) in chi.iter().enumerate() {
                let bv = c2.root_value(vals, beta)?;
                let diff = low.sub(&low.one(), &bv);
                if low.valuation(&diff) == 0 {
                    return Err(Error::Precondition("chi must be trivial mod p".into()));
                }
                let c = low.reduce_into(&low.div_p_pow(&diff, 1)?, f.ring());
                nontrivial |= !f.is_zero(c);
                v[gi * dim + self.ch.basis().root_index(beta)] = c;
            }
            if !nontrivial {
                bad.push(beta);
            }
            out.push_row(&v);
            roots.push(beta);
        }
        if !bad.is_empty() {
            return Err(Error::Precondition(format!("beta(chi) = 1 mod p^2 for negative roots {bad:?}")));
        }
        Ok((out, roots))
    }

    pub fn spaces(&self, chi: &[Vec<Elem>]) -> Result<OrdinarySpaces> {
        let f = &self.field;
        let tan = self.tangent();
        let (extra, _) = self.extra(chi)?;
        let l = linalg::span_sum(f, &tan, &extra);
        let d = self.ch.datum();
        let nd = d.num_positive();
        let bd = d.rank() + nd;
        if tan.nrows() != bd + self.f_degree * nd {
            return Err(Error::Verification("dim Tan != dim b + f dim n".into()));
        }
        if l.nrows() != self.ch.dim() + self.f_degree * nd {
            return Err(Error::Verification("dim L != dim g + f dim n".into()));
        }
        Ok(OrdinarySpaces { tan, extra, l })
    }

    /// c_beta(xy) - c_beta(x) - c_beta(y) = 0 mod p for torus values x, y mod p^2.
    pub fn extra_is_homomorphism(&self, x: &[Elem], y: &[Elem]) -> Result<bool> {
        let low = self.ch.ring().reduced(2)?;
        let c2 = self.ch.with_ring(low.clone());
        let d = self.ch.datum();
        let xy: Vec<Elem> = x.iter().zip(y).map(|(a, b)| low.mul(a, b)).collect();
        for beta in (0..d.num_roots()).filter(|&r| !d.is_positive(r)) {
            let c = |v: &[Elem]| -> Result<Elem> {
                let bv = c2.root_value(v, beta)?;
                low.div_p_pow(&low.sub(&low.one(), &bv), 1)
            };
            let s = low.sub(&low.sub(&c(&xy)?, &c(x)?), &c(y)?);
            if !self.field.is_zero(low.reduce_into(&s, self.field.ring())) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Membership of a lift (one group element per generator) in the frame:
    /// every value preserves b, and mod p^2 equals the torus element chi.
    pub fn membership(&self, rho: &[GroupElement], chi: &[Vec<Elem>]) -> Result<bool> {
        let ch = &self.ch;
        let d = ch.datum();
        let b = ch.basis();
        let dim = ch.dim();
        let r = ch.ring();
        let low = r.reduced(2)?;
        let c2 = ch.with_ring(low.clone());
        for (g, vals) in rho.iter().zip(chi) {
            // B-valued: no component from b into negative root spaces
            for col in 0..dim {
                let in_b = b.basis_root(col).is_none_or(|x| d.is_positive(x));
                if !in_b {
                    continue;
                }
                for row in 0..dim {
                    let neg = b.basis_root(row).is_some_and(|x| !d.is_positive(x));
                    if neg && !r.is_zero(&g.mat.get(row, col)) {
                        return Ok(false);
                    }
                }
            }
            let t2 = c2.torus_elt(vals)?;
            if ch.reduce_group(g, &low).mat != t2.mat {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// u_beta(p^{m-2}) conjugation reproduces exp(p^{m-1} c_beta) rho on every generator.
    pub fn stability_check(&self, rho: &[GroupElement], chi: &[Vec<Elem>], beta: usize) -> Result<(GroupElement, bool)> {
        let ch = &self.ch;
        let r = ch.ring();
        let m = r.precision();
        if m < 3 {
            return Err(Error::Precondition("stability needs m >= 3".into()));
        }
        if !self.membership(rho, chi)? {
            return Err(Error::Precondition("lift is not in the ordinary set".into()));
        }
        let low = r.reduced(2)?;
        let c2 = ch.with_ring(low.clone());
        let g = ch.u_alpha(beta, &r.mul_p_pow(&r.one(), m - 2));
        let mut ok = true;
        for (rg, vals) in rho.iter().zip(chi) {
            let bv = c2.root_value(vals, beta)?;
            let c = low.div_p_pow(&low.sub(&low.one(), &bv), 1)?;
            let c = r.lift_from(&low.reduce_into(&c, self.field.ring()), self.field.ring());
            let x = ch.root_vec(beta, &r.mul_p_pow(&c, m - 1));
            let e = ch.exp_hat(&x)?;
            ok &= ch.conj(&g, rg)?.mat == ch.mul(&e, rg).mat;
        }
        Ok((g, ok))
    }

    /// Random torus character mod p^2, trivial mod p, with every negative root
    /// nontrivial mod p^2, and a member of the ordinary set above it: the
    /// character lifted to full precision times unipotents in the upper
    /// nilradical that vanish mod p^2.
    pub fn sample_member(&self, rng: &mut (impl Rng + ?Sized)) -> Result<(Vec<Vec<Elem>>, Vec<GroupElement>)> {
        let ch = &self.ch;
        let r = ch.ring();
        let low = r.reduced(2)?;
        let rank = ch.datum().rank();
        let chi = loop {
            let chi: Vec<Vec<Elem>> = (0..self.generators())
                .map(|_| (0..rank).map(|_| low.add(&low.one(), &low.mul_p_pow(&low.random(rng), 1))).collect())
                .collect();
            if self.extra(&chi).is_ok() {
                break chi;
            }
        };
        let d = ch.datum();
        let rho = chi
            .iter()
            .map(|v| {
                let lifted: Vec<_> = v.iter().map(|x| r.lift_from(x, &low)).collect();
                let mut g = ch.torus_elt(&lifted)?;
                for b in (0..d.num_roots()).filter(|&b| d.is_positive(b)) {
                    g = ch.mul(&g, &ch.u_alpha(b, &r.mul_p_pow(&r.random(rng), 2)));
                }
                Ok(g)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((chi, rho))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootdata::{root_datum_str, Isogeny};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(t: &str, p: u64, m: u32, q: u64) -> TameLocalModel {
        let (d, b) = root_datum_str(t, Isogeny::Adjoint).unwrap();
        let ch = Chevalley::new(d, b, CoeffRing::new(p, m, 1).unwrap()).unwrap();
        TameLocalModel::new(ch, q).unwrap()
    }

    #[test]
    fn a1_dimensions() {
        let md = model("A1", 5, 1, 11);
        let s = md.condition_spaces(0, ExtraKind::Unr, None).unwrap();
        assert_eq!(s.dims(), (2, 1, 3, 3));
        assert!(s.perp_matches_description);
    }

    #[test]
    fn a2_dimensions() {
        let md = model("A2", 7, 1, 29);
        for alpha in 0..6 {
            let s = md.condition_spaces(alpha, ExtraKind::Unr, None).unwrap();
            assert_eq!(s.l.nrows(), 8);
            assert_eq!(s.extra.nrows(), 3);
        }
    }

    #[test]
    fn pairing_rules() {
        let md = model("A1", 5, 1, 11);
        let f = md.field().clone();
        let w = vec![f.from_int(1), f.from_int(2), f.from_int(3)];
        let ws = vec![f.from_int(4), f.from_int(0), f.from_int(1)];
        let z = vec![f.zero(); 3];
        let phi = [w.clone(), z.clone()].concat();
        let psi = [z.clone(), ws.clone()].concat();
        let expect = f.neg(linalg::dot(&f, &w, &ws));
        assert_eq!(duality_pairing(&f, &phi, &psi).unwrap(), expect);
        let both = [ws.clone(), z.clone()].concat();
        assert_eq!(duality_pairing(&f, &phi, &both).unwrap(), f.zero());
        let gram = md.pairing_gram();
        assert_eq!(linalg::rank(&f, &gram), 6);
        let unr = md.unramified();
        assert!(linalg::same_span(&f, &perp_space(&f, &unr, &gram), &unr));
    }

    #[test]
    fn membership_and_stability() {
        let md = model("A2", 7, 3, 29);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let alpha = md.ch.datum().simple(0);
        let m2 = md.at_precision(2).unwrap();
        let fv = m2.ch.trivial_frobenius_search(&m2.q_elem(), alpha, &mut rng, 1000).unwrap();
        let r2 = m2.ring().clone();
        let lift_v: Vec<Elem> = fv.values.iter().map(|x| md.ring().lift_from(x, &r2)).collect();
        for variant in [Variant::Unr2, Variant::Ram2] {
            let nf = md.sample_normal_form(alpha, variant, Some(&lift_v), &mut rng).unwrap();
            let rho = md.lift_from_normal_form(&nf).unwrap();
            assert!(md.membership(&rho, alpha, variant).unwrap());
            assert!(md.membership(&rho, alpha, Variant::Plain).unwrap());
            let kind = if variant == Variant::Unr2 { ExtraKind::Unr } else { ExtraKind::Ram };
            for beta in phi_alpha(md.ch.datum(), md.ch.basis(), alpha).unwrap() {
                let (_, ok) = md.stability_check(&rho, alpha, beta, kind).unwrap();
                assert!(ok, "{variant:?} beta {beta}");
            }
            let s = md.condition_spaces(alpha, kind, Some(&rho)).unwrap();
            assert_eq!(s.l.nrows(), 8);
            assert_eq!(s.l_perp.nrows(), 8);
        }
        // identity sigma with nontrivial tau breaks the tame relation
        let other = md.ch.datum().simple(1);
        let bad = LocalLift { sigma: md.ch.identity(), tau: md.ch.u_alpha(other, &md.ring().from_int(7)) };
        assert!(matches!(md.membership(&bad, alpha, Variant::Plain), Err(Error::InvalidLift(_))));
    }

    #[test]
    fn smoothness_a1() {
        let md = model("A1", 5, 2, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for v in [Variant::Plain, Variant::Unr2, Variant::Ram2] {
            let rep = smoothness_probe(&md, 0, v, 20, &mut rng).unwrap();
            assert_eq!(rep.lifted, 20);
        }
    }

    #[test]
    fn ordinary_a1() {
        let (d, b) = root_datum_str("A1", Isogeny::Adjoint).unwrap();
        let ch = Chevalley::new(d, b, CoeffRing::new(5, 3, 1).unwrap()).unwrap();
        let om = OrdinaryModel::new(ch.clone(), 1).unwrap();
        let r2 = ch.ring().reduced(2).unwrap();
        let chi = vec![vec![r2.from_int(6)], vec![r2.from_int(11)]];
        let s = om.spaces(&chi).unwrap();
        assert_eq!(s.tan.nrows(), 3);
        assert_eq!(s.l.nrows(), 4);
        assert!(om.extra_is_homomorphism(&chi[0], &chi[1]).unwrap());
        let r = ch.ring().clone();
        let rho: Vec<GroupElement> = chi
            .iter()
            .map(|v| {
                let vv: Vec<Elem> = v.iter().map(|x| r.lift_from(x, &r2)).collect();
                ch.mul(&ch.torus_elt(&vv).unwrap(), &ch.u_alpha(0, &r.from_int(25)))
            })
            .collect();
        assert!(om.membership(&rho, &chi).unwrap());
        let (_, ok) = om.stability_check(&rho, &chi, 1).unwrap();
        assert!(ok);
    }

    #[test]
    fn fixed_multiplier_augmented_a1() {
        let md = model("A1", 5, 1, 11);
        let f = md.field().clone();
        let s = md.condition_spaces(0, ExtraKind::Unr, None).unwrap();
        let aug = augment_with_center(&f, &s.l, 3, 1);
        assert_eq!(aug.nrows(), 4);
        let res = fixed_multiplier_restrict(&f, &aug, 4, 1, 2).unwrap();
        assert_eq!(res.nrows(), 3);
        let same = fixed_multiplier_restrict(&f, &s.l, 3, 0, 2).unwrap();
        assert_eq!(same, s.l);
    }
}
