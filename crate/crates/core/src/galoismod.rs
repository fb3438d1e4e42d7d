//! Modules over finite groups given by matrix generators and a presentation:
//! MeatAxe decomposition with Norton irreducibility proofs, homomorphism
//! spaces, presentation cohomology in degrees 0 and 1, abelianization, and
//! character tables with exact cyclotomic inner products.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use crate::coeffring::RingElement;
use crate::error::{Error, Result};
use crate::field::{Field, GaloisField};
use crate::intlattice::quotient_structure;
use crate::linalg::{self, FMat};
use crate::poly;

pub type Elem = RingElement;
pub type Mat = FMat<GaloisField>;

// ----- presentations -----

/// A word is a sequence of letters +(i+1) (generator i) or -(i+1) (its inverse).
pub type Word = Vec<i32>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupPresentation {
    pub ngens: usize,
    pub relations: Vec<Word>,
}

impl GroupPresentation {
    pub fn new(ngens: usize, relations: Vec<Word>) -> Result<Self> {
        for w in &relations {
            if w.iter().any(|&l| l == 0 || l.unsigned_abs() as usize > ngens) {
                return Err(Error::Parse(format!("letter out of range in relation {w:?}")));
            }
        }
        Ok(GroupPresentation { ngens, relations })
    }

    pub fn free(ngens: usize) -> Self {
        GroupPresentation { ngens, relations: vec![] }
    }

    /// Relations in the letters a, b, c, ... with A = a^-1, powers `x^n`,
    /// and parentheses, separated by commas: "a^2, b^4, (ab)^5, (ab^2)^5".
    pub fn parse(ngens: usize, text: &str) -> Result<Self> {
        let rels =
            text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_word(ngens, s)).collect::<Result<Vec<_>>>()?;
        GroupPresentation::new(ngens, rels)
    }

    /// Exponent sums of each relation.
    pub fn exponent_matrix(&self) -> Vec<Vec<i64>> {
        self.relations
            .iter()
            .map(|w| {
                let mut row = vec![0i64; self.ngens];
                for &l in w {
                    row[l.unsigned_abs() as usize - 1] += l.signum() as i64;
                }
                row
            })
            .collect()
    }
}

pub fn inverse_word(w: &[i32]) -> Word {
    w.iter().rev().map(|&l| -l).collect()
}

pub fn parse_word(ngens: usize, s: &str) -> Result<Word> {
    let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut pos = 0;
    let w = parse_seq(ngens, &chars, &mut pos)?;
    if pos != chars.len() {
        return Err(Error::Parse(format!("unexpected '{}' in word {s}", chars[pos])));
    }
    Ok(w)
}

fn parse_seq(ngens: usize, c: &[char], pos: &mut usize) -> Result<Word> {
    let mut out = Vec::new();
    while *pos < c.len() && c[*pos] != ')' {
        let mut atom = if c[*pos] == '(' {
            *pos += 1;
            let inner = parse_seq(ngens, c, pos)?;
            if *pos >= c.len() || c[*pos] != ')' {
                return Err(Error::Parse("unbalanced parenthesis".into()));
            }
            *pos += 1;
            inner
        } else if c[*pos].is_ascii_alphabetic() {
            let ch = c[*pos];
            let idx = (ch.to_ascii_lowercase() as u8 - b'a') as usize;
            if idx >= ngens {
                return Err(Error::Parse(format!("generator '{ch}' out of range")));
            }
            *pos += 1;
            let l = idx as i32 + 1;
            vec![if ch.is_ascii_uppercase() { -l } else { l }]
        } else {
            return Err(Error::Parse(format!("unexpected '{}'", c[*pos])));
        };
        if *pos < c.len() && c[*pos] == '^' {
            *pos += 1;
            let start = *pos;
            if *pos < c.len() && c[*pos] == '-' {
                *pos += 1;
            }
            while *pos < c.len() && c[*pos].is_ascii_digit() {
                *pos += 1;
            }
            let e: i64 = c[start..*pos].iter().collect::<String>().parse().map_err(|_| Error::Parse("bad exponent".into()))?;
            let base = if e < 0 { inverse_word(&atom) } else { atom };
            atom = base.iter().copied().cycle().take(base.len() * e.unsigned_abs() as usize).collect();
        }
        out.extend(atom);
    }
    Ok(out)
}

/// Invariant factors of the abelianization: torsion (> 1) and free rank.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AbelianInvariants {
    pub torsion: Vec<i64>,
    pub free_rank: usize,
}

impl AbelianInvariants {
    /// Torsion factors followed by a 0 for each free summand.
    pub fn invariants(&self) -> Vec<i64> {
        let mut v = self.torsion.clone();
        v.extend(std::iter::repeat_n(0, self.free_rank));
        v
    }
    pub fn is_trivial(&self) -> bool {
        self.torsion.is_empty() && self.free_rank == 0
    }
    /// Whether the group has a cyclic quotient of order n.
    pub fn has_cyclic_quotient(&self, n: i64) -> bool {
        n == 1 || self.free_rank > 0 || self.torsion.iter().any(|&t| t % n == 0)
    }
}

pub fn abelianization(pres: &GroupPresentation) -> AbelianInvariants {
    let (torsion, free_rank) = quotient_structure(&pres.exponent_matrix(), pres.ngens);
    AbelianInvariants { torsion, free_rank }
}

// ----- modules -----

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixModule {
    field: GaloisField,
    dim: usize,
    gens: Vec<Mat>,
    invs: Vec<Mat>,
}

impl MatrixModule {
    /// Generators act on column vectors.
    pub fn new(field: GaloisField, dim: usize, gens: Vec<Mat>) -> Result<Self> {
        let mut invs = Vec::with_capacity(gens.len());
        for (i, g) in gens.iter().enumerate() {
            if g.nrows() != dim || g.ncols() != dim {
                return Err(Error::Precondition(format!("generator {i} is not {dim} x {dim}")));
            }
            invs.push(linalg::inverse(&field, g).ok_or_else(|| Error::Precondition(format!("generator {i} is singular")))?);
        }
        Ok(MatrixModule { field, dim, gens, invs })
    }

    pub fn trivial(field: GaloisField, ngens: usize, dim: usize) -> Self {
        let id = linalg::identity(&field, dim);
        MatrixModule { dim, gens: vec![id.clone(); ngens], invs: vec![id; ngens], field }
    }

    pub fn field(&self) -> &GaloisField {
        &self.field
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn ngens(&self) -> usize {
        self.gens.len()
    }
    pub fn gen(&self, i: usize) -> &Mat {
        &self.gens[i]
    }
    pub fn gens(&self) -> &[Mat] {
        &self.gens
    }

    pub fn eval_word(&self, w: &[i32]) -> Mat {
        let f = &self.field;
        let mut acc = linalg::identity(f, self.dim);
        for &l in w {
            let i = l.unsigned_abs() as usize - 1;
            let g = if l > 0 { &self.gens[i] } else { &self.invs[i] };
            acc = linalg::mat_mul(f, &acc, g);
        }
        acc
    }

    pub fn check_relations(&self, pres: &GroupPresentation) -> Result<()> {
        if pres.ngens != self.ngens() {
            return Err(Error::Precondition("generator counts differ".into()));
        }
        let id = linalg::identity(&self.field, self.dim);
        for (k, w) in pres.relations.iter().enumerate() {
            if self.eval_word(w) != id {
                return Err(Error::Verification(format!("relation {k} fails on the module")));
            }
        }
        Ok(())
    }

    /// Transposed generators: a module for the opposite group, used by Norton's test.
    pub fn transpose(&self) -> Self {
        MatrixModule {
            field: self.field.clone(),
            dim: self.dim,
            gens: self.gens.iter().map(|g| g.transpose()).collect(),
            invs: self.invs.iter().map(|g| g.transpose()).collect(),
        }
    }

    /// Contragredient module: g acts by the inverse transpose.
    pub fn dual(&self) -> Self {
        MatrixModule {
            field: self.field.clone(),
            dim: self.dim,
            gens: self.invs.iter().map(|g| g.transpose()).collect(),
            invs: self.gens.iter().map(|g| g.transpose()).collect(),
        }
    }

    /// Tensor with the one-dimensional character sending generator i to chars[i].
    pub fn twist(&self, chars: &[Elem]) -> Result<Self> {
        let f = &self.field;
        if chars.len() != self.ngens() {
            return Err(Error::Precondition("one character value per generator".into()));
        }
        let gens = self.gens.iter().zip(chars).map(|(g, &c)| linalg::mat_scale(f, g, c)).collect();
        MatrixModule::new(f.clone(), self.dim, gens)
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        let f = &self.field;
        if self.ngens() != other.ngens() {
            return Err(Error::Precondition("generator counts differ".into()));
        }
        let n = self.dim + other.dim;
        let gens = self
            .gens
            .iter()
            .zip(&other.gens)
            .map(|(a, b)| {
                let mut m = linalg::zeros(f, n, n);
                for i in 0..a.nrows() {
                    for j in 0..a.ncols() {
                        m.set(i, j, a.get(i, j));
                    }
                }
                for i in 0..b.nrows() {
                    for j in 0..b.ncols() {
                        m.set(self.dim + i, self.dim + j, b.get(i, j));
                    }
                }
                m
            })
            .collect();
        MatrixModule::new(f.clone(), n, gens)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let f = &self.field;
        if self.ngens() != other.ngens() {
            return Err(Error::Precondition("generator counts differ".into()));
        }
        let (n1, n2) = (self.dim, other.dim);
        let gens = self
            .gens
            .iter()
            .zip(&other.gens)
            .map(|(a, b)| {
                let mut m = linalg::zeros(f, n1 * n2, n1 * n2);
                for i in 0..n1 {
                    for j in 0..n1 {
                        let x = a.get(i, j);
                        if f.is_zero(x) {
                            continue;
                        }
                        for k in 0..n2 {
                            for l in 0..n2 {
                                m.set(i * n2 + k, j * n2 + l, f.mul(x, b.get(k, l)));
                            }
                        }
                    }
                }
                m
            })
            .collect();
        MatrixModule::new(f.clone(), n1 * n2, gens)
    }

    /// Whether the row span of `basis` is stable under every generator.
    pub fn is_invariant(&self, basis: &Mat) -> bool {
        let f = &self.field;
        (0..basis.nrows()).all(|i| self.gens.iter().all(|g| linalg::in_span(f, basis, &linalg::mul_vec(f, g, basis.row(i)))))
    }

    /// Action on the submodule spanned by the rows of `basis`.
    pub fn submodule(&self, basis: &Mat) -> Result<Self> {
        let f = &self.field;
        let k = basis.nrows();
        let gens = self
            .gens
            .iter()
            .map(|g| {
                let mut m = linalg::zeros(f, k, k);
                for j in 0..k {
                    let img = linalg::mul_vec(f, g, basis.row(j));
                    let c = linalg::coordinates(f, basis, &img)
                        .ok_or_else(|| Error::Verification("subspace is not invariant".into()))?;
                    for (i, ci) in c.into_iter().enumerate() {
                        m.set(i, j, ci);
                    }
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        MatrixModule::new(f.clone(), k, gens)
    }

    /// Action on the quotient by the submodule spanned by `basis`.
    pub fn quotient(&self, basis: &Mat) -> Result<Self> {
        let f = &self.field;
        let comp = linalg::complement(f, basis);
        let full = basis.vstack(&comp);
        let k = basis.nrows();
        let qd = comp.nrows();
        let gens = self
            .gens
            .iter()
            .map(|g| {
                let mut m = linalg::zeros(f, qd, qd);
                for j in 0..qd {
                    let img = linalg::mul_vec(f, g, comp.row(j));
                    let c = linalg::coordinates(f, &full, &img).expect("full basis");
                    for i in 0..qd {
                        m.set(i, j, c[k + i]);
                    }
                }
                m
            })
            .collect();
        MatrixModule::new(f.clone(), qd, gens)
    }

    /// Common fixed space of the generators.
    pub fn fixed_space(&self) -> Mat {
        let f = &self.field;
        let id = linalg::identity(f, self.dim);
        let mut eqs = linalg::zeros(f, 0, self.dim);
        for g in &self.gens {
            let d = linalg::mat_sub(f, g, &id);
            eqs = eqs.vstack(&d);
        }
        linalg::nullspace(f, &eqs)
    }

    pub fn is_trivial_action(&self) -> bool {
        let id = linalg::identity(&self.field, self.dim);
        self.gens.iter().all(|g| *g == id)
    }
}

/// Incremental semi-echelon basis: fast membership and insertion.
#[derive(Clone, Debug)]
pub struct Echelon {
    field: GaloisField,
    rows: Vec<Vec<Elem>>,
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn new(field: GaloisField) -> Self {
        Echelon { field, rows: vec![], pivots: vec![] }
    }
    pub fn len(&self) -> usize {
        self.rows.len()
    }
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
    pub fn reduce(&self, v: &[Elem]) -> Vec<Elem> {
        let f = &self.field;
        let mut v = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let c = v[p];
            if !f.is_zero(c) {
                for (x, &y) in v.iter_mut().zip(row) {
                    *x = f.sub(*x, f.mul(c, y));
                }
            }
        }
        v
    }
    /// Adds v if it is new; returns whether it was.
    pub fn insert(&mut self, v: &[Elem]) -> bool {
        let f = self.field.clone();
        let r = self.reduce(v);
        let Some(p) = r.iter().position(|x| !f.is_zero(*x)) else { return false };
        let inv = f.inv(r[p]);
        self.rows.push(r.iter().map(|&x| f.mul(x, inv)).collect());
        self.pivots.push(p);
        true
    }
    pub fn contains(&self, v: &[Elem]) -> bool {
        self.reduce(v).iter().all(|x| self.field.is_zero(*x))
    }
    pub fn to_matrix(&self, ncols: usize) -> Mat {
        Mat::from_rows(&self.rows, ncols)
    }
}

/// Smallest submodule containing the seeds, as a row basis.
pub fn spin(module: &MatrixModule, seeds: &[Vec<Elem>]) -> Mat {
    let f = module.field();
    let mut ech = Echelon::new(f.clone());
    let mut queue: Vec<Vec<Elem>> = Vec::new();
    for s in seeds {
        if ech.insert(s) {
            queue.push(s.clone());
        }
    }
    let mut i = 0;
    while i < queue.len() && ech.len() < module.dim() {
        let v = queue[i].clone();
        for g in module.gens() {
            let w = linalg::mul_vec(f, g, &v);
            if ech.insert(&w) {
                queue.push(w);
            }
        }
        i += 1;
    }
    ech.to_matrix(module.dim())
}

/// Spin of a single vector, recording each new basis vector as
/// (parent index, generator) so that images under a homomorphism can be replayed.
struct CyclicSpin {
    vectors: Vec<Vec<Elem>>,
    recipe: Vec<Option<(usize, usize)>>,
}

fn cyclic_spin(module: &MatrixModule, v: &[Elem]) -> CyclicSpin {
    let f = module.field();
    let mut ech = Echelon::new(f.clone());
    let mut vectors = Vec::new();
    let mut recipe = Vec::new();
    if ech.insert(v) {
        vectors.push(v.to_vec());
        recipe.push(None);
    }
    let mut i = 0;
    while i < vectors.len() {
        for (k, g) in module.gens().iter().enumerate() {
            let w = linalg::mul_vec(f, g, &vectors[i]);
            if ech.insert(&w) {
                vectors.push(w);
                recipe.push(Some((i, k)));
            }
        }
        i += 1;
    }
    CyclicSpin { vectors, recipe }
}

/// Hom_G(S, M) for S generated by `gen_vec`, each homomorphism as a
/// dim M x dim S matrix (column j is the image of basis vector j of S).
pub fn hom_space(s: &MatrixModule, gen_vec: &[Elem], m: &MatrixModule) -> Result<Vec<Mat>> {
    let f = s.field();
    if s.ngens() != m.ngens() {
        return Err(Error::Precondition("generator counts differ".into()));
    }
    let sp = cyclic_spin(s, gen_vec);
    let ns = s.dim();
    if sp.vectors.len() != ns {
        return Err(Error::Precondition("vector does not generate the source module".into()));
    }
    let nm = m.dim();
    let u = Mat::from_rows(&sp.vectors, ns).transpose();
    let u_inv = linalg::inverse(f, &u).expect("spun basis is a basis");
    // word matrices in M replaying the spin
    let mut words: Vec<Mat> = Vec::with_capacity(ns);
    for r in &sp.recipe {
        words.push(match r {
            None => linalg::identity(f, nm),
            Some((parent, k)) => linalg::mat_mul(f, m.gen(*k), &words[*parent]),
        });
    }
    let defined: BTreeSet<(usize, usize)> = sp.recipe.iter().flatten().copied().collect();
    let mut eqs = linalg::zeros(f, 0, nm);
    for i in 0..ns {
        for k in 0..s.ngens() {
            if defined.contains(&(i, k)) {
                continue;
            }
            let img = linalg::mul_vec(f, s.gen(k), &sp.vectors[i]);
            let c = linalg::mul_vec(f, &u_inv, &img);
            let mut lhs = linalg::mat_mul(f, m.gen(k), &words[i]);
            for (j, &cj) in c.iter().enumerate() {
                if !f.is_zero(cj) {
                    lhs = linalg::mat_sub(f, &lhs, &linalg::mat_scale(f, &words[j], cj));
                }
            }
            eqs = eqs.vstack(&lhs);
        }
    }
    let sol = if eqs.nrows() == 0 { linalg::identity(f, nm) } else { linalg::nullspace(f, &eqs) };
    let mut homs = Vec::with_capacity(sol.nrows());
    for r in 0..sol.nrows() {
        let w = sol.row(r);
        let mut img = linalg::zeros(f, nm, ns);
        for (i, wi) in words.iter().enumerate() {
            let col = linalg::mul_vec(f, wi, w);
            for (a, x) in col.into_iter().enumerate() {
                img.set(a, i, x);
            }
        }
        homs.push(linalg::mat_mul(f, &img, &u_inv));
    }
    Ok(homs)
}

/// Whether two irreducible modules are isomorphic.
pub fn irreducibles_isomorphic(a: &Irreducible, b: &Irreducible) -> Result<bool> {
    if a.module.dim() != b.module.dim() {
        return Ok(false);
    }
    Ok(!hom_space(&a.module, &a.generator, &b.module)?.is_empty())
}

/// An irreducible module with a generating vector and its endomorphism data.
#[derive(Clone, Debug)]
pub struct Irreducible {
    pub module: MatrixModule,
    pub generator: Vec<Elem>,
    pub endo_degree: usize,
    pub endo_is_field: bool,
}

enum SplitOutcome {
    Irreducible(Vec<Elem>),
    Split(Mat),
}

const MEATAXE_TRIES: usize = 400;
const MAX_FACTOR_DEGREE: usize = 12;

fn random_algebra_element(m: &MatrixModule, pool: &mut Vec<Mat>, rng: &mut (impl Rng + ?Sized)) -> Mat {
    let f = m.field();
    if pool.len() < 2 {
        return pool[0].clone();
    }
    let a = rng.gen_range(0..pool.len());
    let b = rng.gen_range(0..pool.len());
    let prod = linalg::mat_mul(f, &pool[a], &pool[b]);
    if pool.len() < 12 {
        pool.push(prod);
    } else {
        let i = rng.gen_range(m.ngens()..pool.len());
        pool[i] = prod;
    }
    let mut theta = linalg::zeros(f, m.dim(), m.dim());
    for p in pool.iter() {
        theta = linalg::mat_add(f, &theta, &linalg::mat_scale(f, p, f.random(rng)));
    }
    theta
}

/// One MeatAxe step: a proper submodule, or a Norton proof of irreducibility.
fn meataxe_split(m: &MatrixModule, rng: &mut (impl Rng + ?Sized)) -> Result<SplitOutcome> {
    let f = m.field().clone();
    let n = m.dim();
    if n == 0 {
        return Err(Error::Precondition("zero module".into()));
    }
    if n == 1 {
        return Ok(SplitOutcome::Irreducible(vec![f.one()]));
    }
    if m.ngens() == 0 {
        let mut e = vec![f.zero(); n];
        e[0] = f.one();
        return Ok(SplitOutcome::Split(Mat::from_rows(&[e], n)));
    }
    let mt = m.transpose();
    let mut pool: Vec<Mat> = m.gens().to_vec();
    let mut inconclusive = 0;
    for _ in 0..MEATAXE_TRIES {
        let theta = random_algebra_element(m, &mut pool, rng);
        let cp = poly::charpoly(&f, &theta);
        let factors = poly::factor(&f, &cp, rng);
        for (fac, _) in factors.iter().filter(|(g, _)| g.len() - 1 <= MAX_FACTOR_DEGREE).take(2) {
            let nmat = poly::eval_matrix(&f, fac, &theta);
            let ker = linalg::nullspace(&f, &nmat);
            let v = ker.row(0).to_vec();
            let sub = spin(m, std::slice::from_ref(&v));
            if sub.nrows() < n {
                return Ok(SplitOutcome::Split(sub));
            }
            let kert = linalg::nullspace(&f, &nmat.transpose());
            let w = kert.row(0).to_vec();
            let subt = spin(&mt, &[w]);
            if subt.nrows() < n {
                return Ok(SplitOutcome::Split(linalg::nullspace(&f, &subt)));
            }
            if ker.nrows() == fac.len() - 1 {
                return Ok(SplitOutcome::Irreducible(v));
            }
            inconclusive += 1;
            if inconclusive == 4 {
                // both spins fill the module but the kernel is too big:
                // possibly irreducible with a larger endomorphism field
                if let Some(out) = extension_split(m, &v, rng)? {
                    return Ok(out);
                }
            }
        }
    }
    Err(Error::Exhausted(format!("MeatAxe: no proof after {MEATAXE_TRIES} random elements (dim {n})")))
}

/// Endomorphism ring of a cyclic module from its generating vector.
fn endomorphisms(m: &MatrixModule, v: &[Elem]) -> Result<Vec<Mat>> {
    hom_space(m, v, m)
}

fn ring_is_field(f: &GaloisField, basis: &[Mat], rng: &mut (impl Rng + ?Sized)) -> bool {
    for a in basis {
        for b in basis {
            if linalg::mat_mul(f, a, b) != linalg::mat_mul(f, b, a) {
                return false;
            }
        }
    }
    let n = basis[0].nrows();
    let size = (f.size() as u128).saturating_pow(basis.len() as u32);
    if size <= 4096 {
        // exhaustive: every nonzero combination is invertible
        for k in 1..size as u64 {
            let mut x = linalg::zeros(f, n, n);
            let mut t = k;
            for b in basis {
                let c = f.nth(t % f.size());
                t /= f.size();
                x = linalg::mat_add(f, &x, &linalg::mat_scale(f, b, c));
            }
            if linalg::rank(f, &x) < n {
                return false;
            }
        }
        return true;
    }
    (0..32).all(|_| {
        let mut x = linalg::zeros(f, n, n);
        for b in basis {
            x = linalg::mat_add(f, &x, &linalg::mat_scale(f, b, f.random(rng)));
        }
        x.data().iter().all(|c| f.is_zero(*c)) || linalg::rank(f, &x) == n
    })
}

/// For a cyclic module whose endomorphism ring is a field E of degree e > 1
/// over a prime base field, rewrite it as an E-module and run the MeatAxe there.
fn extension_split(m: &MatrixModule, v: &[Elem], rng: &mut (impl Rng + ?Sized)) -> Result<Option<SplitOutcome>> {
    let f = m.field().clone();
    let n = m.dim();
    let ends = endomorphisms(m, v)?;
    let e = ends.len();
    if e <= 1 || n % e != 0 || !ring_is_field(&f, &ends, rng) {
        return Ok(None);
    }
    if f.degree() != 1 || e > crate::coeffring::MAX_DEGREE {
        return Err(Error::Unsupported(format!("endomorphism field of degree {e} over F_{}", f.size())));
    }
    // a generator phi of E and its minimal polynomial
    let (phi, mu) = loop {
        let mut x = linalg::zeros(&f, n, n);
        for b in &ends {
            x = linalg::mat_add(&f, &x, &linalg::mat_scale(&f, b, f.random(rng)));
        }
        let cp = poly::charpoly(&f, &x);
        let fs = poly::factor(&f, &cp, rng);
        if fs.len() == 1 && fs[0].0.len() - 1 == e {
            break (x, fs[0].0.clone());
        }
    };
    let big = GaloisField::new(f.characteristic(), e)?;
    let mu_big: Vec<Elem> = mu.iter().map(|c| big.from_int(c.constant() as i64)).collect();
    let lambda = poly::roots(&big, &mu_big, rng)[0];
    // E-basis b_1..b_k of M
    let k = n / e;
    let mut ech = Echelon::new(f.clone());
    let mut fbasis: Vec<Vec<Elem>> = Vec::new();
    let mut ebasis: Vec<Vec<Elem>> = Vec::new();
    let mut cand = 0;
    while ebasis.len() < k {
        let mut b = vec![f.zero(); n];
        b[cand % n] = f.one();
        if cand >= n {
            b = (0..n).map(|_| f.random(rng)).collect();
        }
        cand += 1;
        let orbit: Vec<Vec<Elem>> = (0..e)
            .scan(b.clone(), |cur, _| {
                let out = cur.clone();
                *cur = linalg::mul_vec(&f, &phi, cur);
                Some(out)
            })
            .collect();
        let mut trial = ech.clone();
        if orbit.iter().all(|x| trial.insert(x)) {
            ech = trial;
            fbasis.extend(orbit);
            ebasis.push(b);
        }
    }
    let bmat = Mat::from_rows(&fbasis, n).transpose();
    let binv = linalg::inverse(&f, &bmat).expect("E-basis spans");
    let lpow: Vec<Elem> = (0..e).map(|a| big.pow(lambda, a as u64)).collect();
    let embed = |c: &[Elem]| -> Vec<Elem> {
        (0..k)
            .map(|i| {
                (0..e).fold(big.zero(), |acc, a| big.add(acc, big.mul(big.from_int(c[i * e + a].constant() as i64), lpow[a])))
            })
            .collect()
    };
    let mut egens = Vec::new();
    for g in m.gens() {
        let mut mat = linalg::zeros(&big, k, k);
        for (j, b) in ebasis.iter().enumerate() {
            let c = linalg::mul_vec(&f, &binv, &linalg::mul_vec(&f, g, b));
            for (i, x) in embed(&c).into_iter().enumerate() {
                mat.set(i, j, x);
            }
        }
        egens.push(mat);
    }
    let em = MatrixModule::new(big.clone(), k, egens)?;
    match meataxe_split(&em, rng)? {
        SplitOutcome::Irreducible(_) => Ok(Some(SplitOutcome::Irreducible(v.to_vec()))),
        SplitOutcome::Split(sub) => {
            // coordinates of E elements in the basis 1, lambda, ..., lambda^(e-1)
            let lmat = Mat::from_rows(&lpow.iter().map(|x| big_coeffs(&big, x, &f)).collect::<Vec<_>>(), e);
            let linv = linalg::inverse(&f, &lmat.transpose()).expect("power basis");
            let mut rows = Vec::new();
            for r in 0..sub.nrows() {
                for a in 0..e {
                    let x: Vec<Elem> = sub.row(r).iter().map(|&c| big.mul(c, lpow[a])).collect();
                    let mut fv = vec![f.zero(); n];
                    for (i, xi) in x.iter().enumerate() {
                        let y = linalg::mul_vec(&f, &linv, &big_coeffs(&big, xi, &f));
                        // x_i = sum_a y_a lambda^a maps to sum_a y_a phi^a b_i
                        for (aa, ya) in y.iter().enumerate() {
                            for (t, fvt) in fv.iter_mut().enumerate() {
                                *fvt = f.add(*fvt, f.mul(*ya, fbasis[i * e + aa][t]));
                            }
                        }
                    }
                    rows.push(fv);
                }
            }
            let s = linalg::row_basis(&f, &Mat::from_rows(&rows, n));
            if !m.is_invariant(&s) {
                return Err(Error::Verification("descended subspace is not invariant".into()));
            }
            Ok(Some(SplitOutcome::Split(s)))
        }
    }
}

/// Coordinates of an element of F_{p^e} over F_p.
fn big_coeffs(big: &GaloisField, x: &Elem, f: &GaloisField) -> Vec<Elem> {
    x.coeffs(big.degree()).iter().map(|&c| f.from_int(c as i64)).collect()
}

/// Composition factors from repeated MeatAxe splitting.
pub fn composition_factors(m: &MatrixModule, rng: &mut (impl Rng + ?Sized)) -> Result<Vec<Irreducible>> {
    let mut out = Vec::new();
    let mut stack = vec![m.clone()];
    while let Some(x) = stack.pop() {
        if x.dim() == 0 {
            continue;
        }
        match meataxe_split(&x, rng)? {
            SplitOutcome::Irreducible(v) => {
                let ends = endomorphisms(&x, &v)?;
                let is_field = ring_is_field(x.field(), &ends, rng);
                out.push(Irreducible { endo_degree: ends.len(), endo_is_field: is_field, module: x, generator: v });
            }
            SplitOutcome::Split(s) => {
                stack.push(x.quotient(&s)?);
                stack.push(x.submodule(&s)?);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Constituent {
    pub irreducible: Irreducible,
    pub dim: usize,
    /// multiplicity as a composition factor
    pub multiplicity: usize,
    /// multiplicity in the socle
    pub socle_multiplicity: usize,
    pub is_trivial: bool,
    /// indices into `Decomposition::summands` of the copies of this factor
    pub summand_indices: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub constituents: Vec<Constituent>,
    pub semisimple: bool,
    pub multiplicity_free: bool,
    pub contains_trivial: bool,
    /// rows of each summand in a direct-sum decomposition (semisimple case)
    pub summands: Vec<Mat>,
    /// concatenated summands form a basis and each is invariant
    pub reassembly_verified: bool,
}

impl Decomposition {
    /// (dim, multiplicity) of each constituent, sorted.
    pub fn signature(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = self.constituents.iter().map(|c| (c.dim, c.multiplicity)).collect();
        v.sort();
        v
    }
    /// Multiplicity-free after merging constituents into the given groups
    /// (indices into `constituents`); ungrouped constituents stand alone.
    pub fn multiplicity_free_grouped(&self, groups: &[Vec<usize>]) -> bool {
        let mut seen = vec![false; self.constituents.len()];
        for g in groups {
            let total: usize = g.iter().map(|&i| self.constituents[i].multiplicity).sum();
            if total > 1 {
                return false;
            }
            for &i in g {
                seen[i] = true;
            }
        }
        self.constituents.iter().zip(&seen).all(|(c, &s)| s || c.multiplicity <= 1)
    }
}

/// Full isotypic decomposition, or composition factors with the
/// semisimple flag cleared.
pub fn decompose(m: &MatrixModule, rng: &mut (impl Rng + ?Sized)) -> Result<Decomposition> {
    let f = m.field().clone();
    let factors = composition_factors(m, rng)?;
    let mut classes: Vec<(Irreducible, usize)> = Vec::new();
    'outer: for x in factors {
        for (rep, count) in classes.iter_mut() {
            if irreducibles_isomorphic(rep, &x)? {
                *count += 1;
                continue 'outer;
            }
        }
        classes.push((x, 1));
    }
    let mut constituents = Vec::new();
    let mut socle_dim = 0;
    let mut summands = Vec::new();
    for (irr, mult) in classes {
        let homs = hom_space(&irr.module, &irr.generator, m)?;
        let d = irr.module.dim();
        let mut iso = Echelon::new(f.clone());
        let mut copies = 0;
        let mut indices = Vec::new();
        for h in &homs {
            let img = h.transpose();
            let mut trial = iso.clone();
            if (0..img.nrows()).all(|r| trial.insert(img.row(r))) {
                iso = trial;
                copies += 1;
                indices.push(summands.len());
                summands.push(linalg::row_basis(&f, &img));
            }
        }
        socle_dim += copies * d;
        let is_trivial = d == 1 && irr.module.is_trivial_action();
        constituents.push(Constituent {
            dim: d,
            multiplicity: mult,
            socle_multiplicity: copies,
            is_trivial,
            irreducible: irr,
            summand_indices: indices,
        });
    }
    let semisimple = socle_dim == m.dim();
    let mut verified = false;
    if semisimple {
        let all = summands.iter().fold(linalg::zeros(&f, 0, m.dim()), |acc, s| acc.vstack(s));
        verified = linalg::rank(&f, &all) == m.dim() && summands.iter().all(|s| m.is_invariant(s));
        if !verified {
            return Err(Error::Verification("summands do not reassemble the module".into()));
        }
    } else {
        summands.clear();
        for c in constituents.iter_mut() {
            c.summand_indices.clear();
        }
    }
    constituents.sort_by_key(|c| (c.dim, c.multiplicity));
    Ok(Decomposition {
        multiplicity_free: constituents.iter().all(|c| c.multiplicity == 1),
        contains_trivial: constituents.iter().any(|c| c.is_trivial),
        constituents,
        semisimple,
        summands,
        reassembly_verified: verified,
    })
}

/// Whether M and N share a composition factor.
pub fn common_subquotient(a: &MatrixModule, b: &MatrixModule, rng: &mut (impl Rng + ?Sized)) -> Result<bool> {
    let fa = composition_factors(a, rng)?;
    let fb = composition_factors(b, rng)?;
    for x in &fa {
        for y in &fb {
            if irreducibles_isomorphic(x, y)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

// ----- cohomology -----

#[derive(Clone, Debug)]
pub struct Cohomology {
    pub degree: usize,
    pub dim: usize,
    /// H^0: fixed vectors; H^1: cocycles as concatenated generator values
    pub basis: Mat,
}

/// Linear map c -> c(w) on cocycle values (c(x_1) | ... | c(x_k)).
pub fn fox_matrix(module: &MatrixModule, w: &[i32]) -> Mat {
    let f = module.field();
    let n = module.dim();
    let k = module.ngens();
    let mut blocks = vec![linalg::zeros(f, n, n); k];
    let mut prefix = linalg::identity(f, n);
    for &l in w {
        let i = l.unsigned_abs() as usize - 1;
        if l > 0 {
            blocks[i] = linalg::mat_add(f, &blocks[i], &prefix);
            prefix = linalg::mat_mul(f, &prefix, module.gen(i));
        } else {
            let gi = module.eval_word(&[l]);
            prefix = linalg::mat_mul(f, &prefix, &gi);
            blocks[i] = linalg::mat_sub(f, &blocks[i], &prefix);
        }
    }
    blocks.into_iter().fold(linalg::zeros(f, n, 0), |acc, b| acc.hstack(&b))
}

/// Value of a cocycle (concatenated generator values) on a word.
pub fn evaluate_cocycle(module: &MatrixModule, cocycle: &[Elem], w: &[i32]) -> Vec<Elem> {
    linalg::mul_vec(module.field(), &fox_matrix(module, w), cocycle)
}

pub fn cohomology(pres: &GroupPresentation, module: &MatrixModule, degree: usize) -> Result<Cohomology> {
    module.check_relations(pres)?;
    let f = module.field();
    let n = module.dim();
    match degree {
        0 => {
            let fixed = module.fixed_space();
            Ok(Cohomology { degree, dim: fixed.nrows(), basis: fixed })
        }
        1 => {
            let k = module.ngens();
            let mut eqs = linalg::zeros(f, 0, n * k);
            for w in &pres.relations {
                eqs = eqs.vstack(&fox_matrix(module, w));
            }
            let z1 = if eqs.nrows() == 0 { linalg::identity(f, n * k) } else { linalg::nullspace(f, &eqs) };
            let id = linalg::identity(f, n);
            let mut b1 = linalg::zeros(f, 0, n * k);
            for j in 0..n {
                let mut row = Vec::with_capacity(n * k);
                for g in module.gens() {
                    let d = linalg::mat_sub(f, g, &id);
                    row.extend((0..n).map(|i| d.get(i, j)));
                }
                b1.push_row(&row);
            }
            let b1 = linalg::row_basis(f, &b1);
            if !(0..b1.nrows()).all(|r| linalg::in_span(f, &z1, b1.row(r))) {
                return Err(Error::Verification("coboundaries are not cocycles".into()));
            }
            let mut ech = Echelon::new(f.clone());
            for r in 0..b1.nrows() {
                ech.insert(b1.row(r));
            }
            let mut basis = linalg::zeros(f, 0, n * k);
            for r in 0..z1.nrows() {
                if ech.insert(z1.row(r)) {
                    basis.push_row(z1.row(r));
                }
            }
            Ok(Cohomology { degree, dim: basis.nrows(), basis })
        }
        d => Err(Error::Unsupported(format!("H^{d} of an abstract presentation"))),
    }
}

// ----- cyclotomic integers and character tables -----

/// Z[zeta_N] with elements in the power basis 1, x, ..., x^(phi(N)-1)
/// modulo the N-th cyclotomic polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cyclotomic {
    pub n: usize,
    phi: Vec<i64>,
}

pub type Cyclo = Vec<i64>;

fn int_poly_divexact(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let mut q = vec![0i64; r.len() - db];
    for i in (0..q.len()).rev() {
        let c = r[i + db] / b[db];
        q[i] = c;
        for (j, &bj) in b.iter().enumerate() {
            r[i + j] -= c * bj;
        }
    }
    debug_assert!(r.iter().all(|&x| x == 0));
    q
}

pub fn cyclotomic_polynomial(n: usize) -> Vec<i64> {
    let mut p = vec![0i64; n + 1];
    p[0] = -1;
    p[n] = 1;
    for d in 1..n {
        if n % d == 0 {
            p = int_poly_divexact(&p, &cyclotomic_polynomial(d));
        }
    }
    p
}

impl Cyclotomic {
    pub fn new(n: usize) -> Self {
        Cyclotomic { n, phi: cyclotomic_polynomial(n.max(1)) }
    }
    pub fn rank(&self) -> usize {
        self.phi.len() - 1
    }
    fn reduce(&self, mut a: Vec<i64>) -> Cyclo {
        let d = self.rank();
        for i in (d..a.len()).rev() {
            let c = a[i];
            if c != 0 {
                for (j, &pj) in self.phi.iter().enumerate() {
                    a[i - d + j] -= c * pj;
                }
            }
        }
        a.resize(d, 0);
        a
    }
    pub fn from_int(&self, c: i64) -> Cyclo {
        self.reduce(vec![c])
    }
    /// zeta_N^k.
    pub fn zeta_pow(&self, k: usize) -> Cyclo {
        let mut v = vec![0i64; k % self.n + 1];
        v[k % self.n] = 1;
        self.reduce(v)
    }
    pub fn add(&self, a: &[i64], b: &[i64]) -> Cyclo {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }
    pub fn sub(&self, a: &[i64], b: &[i64]) -> Cyclo {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }
    pub fn scale(&self, a: &[i64], s: i64) -> Cyclo {
        a.iter().map(|x| x * s).collect()
    }
    pub fn mul(&self, a: &[i64], b: &[i64]) -> Cyclo {
        let mut out = vec![0i64; a.len() + b.len()];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        self.reduce(out)
    }
    /// Complex conjugate: x -> x^(N-1).
    pub fn conj(&self, a: &[i64]) -> Cyclo {
        let mut out = vec![0i64; self.n + 1];
        for (k, &c) in a.iter().enumerate() {
            out[(self.n - k) % self.n] += c;
        }
        self.reduce(out)
    }
    pub fn as_integer(&self, a: &[i64]) -> Option<i64> {
        a.iter().skip(1).all(|&c| c == 0).then(|| a.first().copied().unwrap_or(0))
    }
    pub fn to_complex(&self, a: &[i64]) -> (f64, f64) {
        let t = 2.0 * std::f64::consts::PI / self.n as f64;
        a.iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (k, &c)| (re + c as f64 * (t * k as f64).cos(), im + c as f64 * (t * k as f64).sin()))
    }
    /// Image under zeta_N -> z in a finite field.
    pub fn to_field(&self, a: &[i64], f: &GaloisField, z: Elem) -> Elem {
        a.iter().rev().fold(f.zero(), |acc, &c| f.add(f.mul(acc, z), f.from_int(c)))
    }

    /// Parse a value such as "5+5*z5+6*z5^2" or "-z7-z7^6"; z_n needs n | N.
    pub fn parse(&self, s: &str) -> Result<Cyclo> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty character value".into()));
        }
        let mut acc = self.from_int(0);
        let mut terms = Vec::new();
        let mut start = 0;
        for (i, ch) in s.char_indices() {
            if (ch == '+' || ch == '-') && i > 0 && !s[..i].ends_with('^') {
                terms.push(&s[start..i]);
                start = i;
            }
        }
        terms.push(&s[start..]);
        for t in terms {
            let (sign, body) = match t.strip_prefix('-') {
                Some(b) => (-1, b),
                None => (1, t.strip_prefix('+').unwrap_or(t)),
            };
            let (coef, atom) = match body.split_once('*') {
                Some((c, a)) => (c.parse::<i64>().map_err(|_| Error::Parse(format!("bad coefficient in {s}")))?, a),
                None => (1, body),
            };
            let val = if let Some(z) = atom.strip_prefix('z') {
                let (ord, pow) = match z.split_once('^') {
                    Some((o, p)) => (o, p.parse::<usize>().map_err(|_| Error::Parse(format!("bad power in {s}")))?),
                    None => (z, 1),
                };
                let ord: usize = ord.parse().map_err(|_| Error::Parse(format!("bad root order in {s}")))?;
                if ord == 0 || self.n % ord != 0 {
                    return Err(Error::Data(format!("z{ord} does not lie in Q(zeta_{})", self.n)));
                }
                self.zeta_pow(pow * (self.n / ord))
            } else {
                self.from_int(atom.parse::<i64>().map_err(|_| Error::Parse(format!("bad token '{atom}' in {s}")))?)
            };
            acc = self.add(&acc, &self.scale(&val, sign * coef));
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub name: String,
    pub order: u64,
    pub class_orders: Vec<u64>,
    pub class_sizes: Vec<u64>,
    pub class_names: Vec<String>,
    pub cyclo: Cyclotomic,
    pub chars: Vec<Vec<Cyclo>>,
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(|l| l.split('#').next().unwrap().trim()).filter(|l| !l.is_empty())
}

fn class_names(orders: &[u64]) -> Vec<String> {
    let mut seen: std::collections::HashMap<u64, u8> = Default::default();
    orders
        .iter()
        .map(|&o| {
            let c = seen.entry(o).or_insert(0);
            let name = format!("{o}{}", (b'A' + *c) as char);
            *c += 1;
            name
        })
        .collect()
}

impl CharacterTable {
    /// Line 1 `GROUP ORDER NCLASSES`, line 2 class orders, line 3 class sizes,
    /// then one character per line. Values live in Q(zeta_e), e the exponent.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = data_lines(text);
        let head: Vec<&str> = lines.next().ok_or_else(|| Error::Parse("empty table".into()))?.split_whitespace().collect();
        if head.len() != 3 {
            return Err(Error::Parse("header must be GROUP ORDER NCLASSES".into()));
        }
        let name = head[0].to_string();
        let order: u64 = head[1].parse().map_err(|_| Error::Parse("bad group order".into()))?;
        let k: usize = head[2].parse().map_err(|_| Error::Parse("bad class count".into()))?;
        let ints = |l: Option<&str>, what: &str| -> Result<Vec<u64>> {
            let v: Vec<u64> = l
                .ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad {what} entry '{t}'"))))
                .collect::<Result<_>>()?;
            if v.len() != k {
                return Err(Error::Parse(format!("{what}: expected {k} entries, got {}", v.len())));
            }
            Ok(v)
        };
        let class_orders = ints(lines.next(), "class orders")?;
        let class_sizes = ints(lines.next(), "class sizes")?;
        let exponent = class_orders.iter().fold(1u64, |a, &b| crate::rootdata::lcm(a as i64, b as i64) as u64);
        let cyclo = Cyclotomic::new(exponent as usize);
        let mut chars = Vec::new();
        for l in lines {
            let vals: Vec<Cyclo> = l.split_whitespace().map(|t| cyclo.parse(t)).collect::<Result<_>>()?;
            if vals.len() != k {
                return Err(Error::Parse(format!("character {} has {} values", chars.len() + 1, vals.len())));
            }
            chars.push(vals);
        }
        let table =
            CharacterTable { name, order, class_names: class_names(&class_orders), class_orders, class_sizes, cyclo, chars };
        table.check()?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        CharacterTable::parse(&text)
    }

    pub fn num_classes(&self) -> usize {
        self.class_sizes.len()
    }

    pub fn degrees(&self) -> Vec<i64> {
        self.chars.iter().map(|c| self.cyclo.as_integer(&c[0]).unwrap_or(0)).collect()
    }

    /// Raw sum  Σ size * a * conj(b)  over classes.
    fn pairing_sum(&self, a: &[Cyclo], b: &[Cyclo]) -> Cyclo {
        let z = &self.cyclo;
        let mut acc = z.from_int(0);
        for ((x, y), &s) in a.iter().zip(b).zip(&self.class_sizes) {
            acc = z.add(&acc, &z.scale(&z.mul(x, &z.conj(y)), s as i64));
        }
        acc
    }

    /// Exact inner product; errors when it is not a rational integer.
    pub fn inner(&self, a: &[Cyclo], b: &[Cyclo]) -> Result<i64> {
        let s = self.pairing_sum(a, b);
        let v = self.cyclo.as_integer(&s).ok_or_else(|| Error::Data(format!("{}: inner product is irrational", self.name)))?;
        if v % self.order as i64 != 0 {
            return Err(Error::Data(format!("{}: inner product {v}/{} is not integral", self.name, self.order)));
        }
        Ok(v / self.order as i64)
    }

    /// Class sizes sum to |G|, degrees squared sum to |G|, row orthogonality.
    pub fn check(&self) -> Result<()> {
        let k = self.num_classes();
        if self.class_sizes.iter().sum::<u64>() != self.order {
            return Err(Error::Data(format!("{}: class sizes do not sum to the order", self.name)));
        }
        if self.chars.len() != k {
            return Err(Error::Data(format!("{}: {} characters for {k} classes", self.name, self.chars.len())));
        }
        let degs = self.degrees();
        if degs.iter().map(|d| d * d).sum::<i64>() != self.order as i64 {
            return Err(Error::Data(format!("{}: sum of squared degrees != |G|", self.name)));
        }
        for i in 0..k {
            for j in 0..=i {
                let v = self.inner(&self.chars[i], &self.chars[j])?;
                if v != (i == j) as i64 {
                    return Err(Error::Data(format!("{}: <chi{}, chi{}> = {v}", self.name, i + 1, j + 1)));
                }
            }
        }
        Ok(())
    }

    /// Multiplicity of each irreducible in a class function.
    pub fn brauer_restrict(&self, cf: &[Cyclo]) -> Result<Vec<i64>> {
        if cf.len() != self.num_classes() {
            return Err(Error::Data("class function has the wrong number of values".into()));
        }
        let m: Vec<i64> = self.chars.iter().map(|c| self.inner(cf, c)).collect::<Result<_>>()?;
        if m.iter().any(|&x| x < 0) {
            return Err(Error::Data(format!("{}: negative multiplicity {m:?}", self.name)));
        }
        Ok(m)
    }

    pub fn character_of_sum(&self, mult: &[i64]) -> Vec<Cyclo> {
        let z = &self.cyclo;
        (0..self.num_classes())
            .map(|c| self.chars.iter().zip(mult).fold(z.from_int(0), |acc, (ch, &m)| z.add(&acc, &z.scale(&ch[c], m))))
            .collect()
    }

    pub fn regular_character(&self) -> Vec<Cyclo> {
        (0..self.num_classes()).map(|c| self.cyclo.from_int(if c == 0 { self.order as i64 } else { 0 })).collect()
    }

    pub fn classes_of_order(&self, o: u64) -> Vec<usize> {
        (0..self.num_classes()).filter(|&c| self.class_orders[c] == o).collect()
    }

    /// Values reduced into F_q via a fixed element of order e (needs e | q - 1);
    /// for p not dividing |G| these are the Brauer character values.
    pub fn values_in(&self, f: &GaloisField) -> Result<Vec<Vec<Elem>>> {
        let z = root_of_unity(f, self.cyclo.n as u64)?;
        Ok(self.chars.iter().map(|c| c.iter().map(|v| self.cyclo.to_field(v, f, z)).collect()).collect())
    }
}

/// First element (in the field's enumeration order) of exact multiplicative order n.
pub fn root_of_unity(f: &GaloisField, n: u64) -> Result<Elem> {
    let q = f.size();
    if (q - 1) % n != 0 {
        return Err(Error::Domain(format!("{n} does not divide {q} - 1")));
    }
    let primes: Vec<u64> = (2..=n).filter(|&d| n % d == 0 && crate::coeffring::is_prime(d)).collect();
    for k in 1..q {
        let x = f.pow(f.nth(k), (q - 1) / n);
        if primes.iter().all(|&l| !f.is_zero(f.sub(f.pow(x, n / l), f.one()))) {
            return Ok(x);
        }
    }
    Err(Error::Exhausted("no root of unity found".into()))
}

/// Labeled class functions for a group, in the table's cyclotomic field:
/// a `GROUP name` line then `LABEL v1 v2 ...` lines.
#[derive(Clone, Debug)]
pub struct ClassFunctions {
    pub group: String,
    pub functions: Vec<(String, Vec<Cyclo>)>,
}

impl ClassFunctions {
    pub fn parse(text: &str, table: &CharacterTable) -> Result<Self> {
        let mut lines = data_lines(text);
        let head = lines.next().ok_or_else(|| Error::Parse("empty class function file".into()))?;
        let group = head
            .strip_prefix("GROUP")
            .map(|s| s.trim().to_string())
            .ok_or_else(|| Error::Parse("first line must be GROUP <name>".into()))?;
        if group != table.name {
            return Err(Error::Data(format!("class functions for {group}, table is {}", table.name)));
        }
        let mut functions = Vec::new();
        for l in lines {
            let mut toks = l.split_whitespace();
            let label = toks.next().unwrap().to_string();
            let vals: Vec<Cyclo> = toks.map(|t| table.cyclo.parse(t)).collect::<Result<_>>()?;
            if vals.len() != table.num_classes() {
                return Err(Error::Data(format!("{label}: {} values for {} classes", vals.len(), table.num_classes())));
            }
            functions.push((label, vals));
        }
        Ok(ClassFunctions { group, functions })
    }

    pub fn load(path: &Path, table: &CharacterTable) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        ClassFunctions::parse(&text, table)
    }

    pub fn get(&self, label: &str) -> Result<&[Cyclo]> {
        self.functions
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::Data(format!("no class function {label} for {}", self.group)))
    }
}

// ----- splitting of finite extensions -----

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Splitting {
    Splits,
    DoesNotSplit,
    /// the group is too large for an exhaustive complement search
    Undetermined,
}

/// All elements of the matrix group generated by `gens`, or None past `limit`.
pub fn enumerate_group(f: &GaloisField, gens: &[Mat], limit: usize) -> Option<Vec<Mat>> {
    let n = gens.first().map_or(0, |g| g.nrows());
    let id = linalg::identity(f, n);
    let mut seen: std::collections::HashSet<Mat> = std::collections::HashSet::new();
    seen.insert(id.clone());
    let mut out = vec![id];
    let mut i = 0;
    while i < out.len() {
        for g in gens {
            let x = linalg::mat_mul(f, &out[i], g);
            if seen.insert(x.clone()) {
                if out.len() >= limit {
                    return None;
                }
                out.push(x);
            }
        }
        i += 1;
    }
    Some(out)
}

/// Whether 1 -> N -> G -> G/N -> 1 splits, for G generated by `gens` and N
/// the elements satisfying `in_normal`, by backtracking complement search.
pub fn extension_splits(f: &GaloisField, gens: &[Mat], in_normal: impl Fn(&Mat) -> bool, limit: usize) -> Result<Splitting> {
    let Some(group) = enumerate_group(f, gens, limit) else { return Ok(Splitting::Undetermined) };
    let normal: Vec<usize> = (0..group.len()).filter(|&i| in_normal(&group[i])).collect();
    if normal.is_empty() || group.len() % normal.len() != 0 {
        return Err(Error::Precondition("normal subset is not a subgroup".into()));
    }
    let index = group.len() / normal.len();
    let pos: std::collections::HashMap<&Mat, usize> = group.iter().enumerate().map(|(i, g)| (g, i)).collect();
    // coset label of each element: index of the smallest element of gN
    let mut coset = vec![usize::MAX; group.len()];
    for i in 0..group.len() {
        if coset[i] == usize::MAX {
            for &k in &normal {
                coset[pos[&linalg::mat_mul(f, &group[i], &group[k])]] = i;
            }
        }
    }
    let closure = |h: &[usize], g: usize| -> Option<Vec<usize>> {
        let mut elems: Vec<usize> = h.to_vec();
        let mut have: BTreeSet<usize> = h.iter().copied().collect();
        let mut cosets: BTreeSet<usize> = h.iter().map(|&x| coset[x]).collect();
        let mut gensub = vec![g];
        gensub.extend(h.iter().copied());
        if have.insert(g) {
            if !cosets.insert(coset[g]) {
                return None;
            }
            elems.push(g);
        }
        let mut i = 0;
        while i < elems.len() {
            for &t in &gensub {
                let x = pos[&linalg::mat_mul(f, &group[elems[i]], &group[t])];
                if have.insert(x) {
                    if !cosets.insert(coset[x]) {
                        return None;
                    }
                    elems.push(x);
                }
            }
            i += 1;
        }
        Some(elems)
    };
    fn search(
        h: Vec<usize>,
        index: usize,
        group_len: usize,
        coset: &[usize],
        closure: &dyn Fn(&[usize], usize) -> Option<Vec<usize>>,
    ) -> bool {
        if h.len() == index {
            return true;
        }
        let covered: BTreeSet<usize> = h.iter().map(|&x| coset[x]).collect();
        let target = (0..group_len).map(|i| coset[i]).find(|c| !covered.contains(c)).expect("uncovered coset");
        (0..group_len)
            .filter(|&g| coset[g] == target)
            .any(|g| closure(&h, g).is_some_and(|h2| search(h2, index, group_len, coset, closure)))
    }
    let identity = pos[&linalg::identity(f, group[0].nrows())];
    Ok(if search(vec![identity], index, group.len(), &coset, &closure) { Splitting::Splits } else { Splitting::DoesNotSplit })
}

// ----- permutation and small matrix groups used by examples -----

/// Permutation matrix of `perm` (i -> perm[i]) over a field.
pub fn permutation_matrix(f: &GaloisField, perm: &[usize]) -> Mat {
    let n = perm.len();
    let mut m = linalg::zeros(f, n, n);
    for (i, &j) in perm.iter().enumerate() {
        m.set(j, i, f.one());
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn int_rows(f: &GaloisField, rows: &[Vec<i64>]) -> Mat {
        let data: Vec<Vec<Elem>> = rows.iter().map(|r| r.iter().map(|&x| f.from_int(x)).collect()).collect();
        Mat::from_rows(&data, rows[0].len())
    }

    fn gf(p: u64) -> GaloisField {
        GaloisField::new(p, 1).unwrap()
    }

    fn a6_perm(p: u64) -> (GroupPresentation, MatrixModule) {
        let f = gf(p);
        let pres = GroupPresentation::parse(2, "a^2, b^4, (ab)^5, (ab^2)^5").unwrap();
        let a = permutation_matrix(&f, &[1, 0, 3, 2, 4, 5]);
        let b = permutation_matrix(&f, &[1, 2, 4, 5, 0, 3]);
        (pres, MatrixModule::new(f, 6, vec![a, b]).unwrap())
    }

    #[test]
    fn word_parser() {
        assert_eq!(parse_word(2, "(ab)^2").unwrap(), vec![1, 2, 1, 2]);
        assert_eq!(parse_word(2, "aB^2").unwrap(), vec![1, -2, -2]);
        assert_eq!(parse_word(2, "(ab)^-1").unwrap(), vec![-2, -1]);
        assert!(parse_word(1, "b").is_err());
        assert!(parse_word(2, "(ab").is_err());
    }

    #[test]
    fn abelianizations() {
        assert_eq!(abelianization(&GroupPresentation::free(2)).invariants(), vec![0, 0]);
        let (a6, _) = a6_perm(7);
        assert!(abelianization(&a6).is_trivial());
        let cyc = GroupPresentation::parse(1, "a^6").unwrap();
        let ab = abelianization(&cyc);
        assert_eq!(ab.invariants(), vec![6]);
        assert!(ab.has_cyclic_quotient(3) && !ab.has_cyclic_quotient(4));
    }

    #[test]
    fn a6_permutation_module() {
        let (pres, m) = a6_perm(7);
        m.check_relations(&pres).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = decompose(&m, &mut rng).unwrap();
        assert_eq!(d.signature(), vec![(1, 1), (5, 1)]);
        assert!(d.semisimple && d.contains_trivial && d.multiplicity_free && d.reassembly_verified);
        assert_eq!(cohomology(&pres, &m, 1).unwrap().dim, 0);
        assert_eq!(cohomology(&pres, &m, 0).unwrap().dim, 1);
        assert!(matches!(cohomology(&pres, &m, 2), Err(Error::Unsupported(_))));
    }

    #[test]
    fn permutation_module_mod_three_is_not_semisimple() {
        // p = 3 divides 6; the permutation module is uniserial 1/4/1
        let (_, m) = a6_perm(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = decompose(&m, &mut rng).unwrap();
        assert!(!d.semisimple);
        assert_eq!(d.signature(), vec![(1, 2), (4, 1)]);
    }

    #[test]
    fn trivial_group_and_cyclic_cohomology() {
        let f = gf(5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = decompose(&MatrixModule::trivial(f.clone(), 0, 2), &mut rng).unwrap();
        assert_eq!(d.signature(), vec![(1, 2)]);
        let zp = GroupPresentation::parse(1, "a^5").unwrap();
        let triv = MatrixModule::trivial(f, 1, 1);
        let h1 = cohomology(&zp, &triv, 1).unwrap();
        assert_eq!(h1.dim, 1);
        for r in &zp.relations {
            assert!(evaluate_cocycle(&triv, h1.basis.row(0), r).iter().all(|x| x.constant() == 0));
        }
    }

    #[test]
    fn non_absolutely_irreducible() {
        // Z/4 acting on F_3^2 = F_9 by a square root of -1: irreducible, End = F_9
        let f = gf(3);
        let c = int_rows(&f, &[vec![0, 2], vec![1, 0]]);
        let m = MatrixModule::new(f, 2, vec![c]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = decompose(&m, &mut rng).unwrap();
        assert_eq!(d.signature(), vec![(2, 1)]);
        assert_eq!(d.constituents[0].irreducible.endo_degree, 2);
        assert!(d.constituents[0].irreducible.endo_is_field);
    }

    #[test]
    fn twists_have_no_common_factor() {
        let f = gf(7);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = int_rows(&f, &[vec![2, 0], vec![0, 4]]);
        let m = MatrixModule::new(f.clone(), 2, vec![g]).unwrap();
        let tw = m.twist(&[f.from_int(3)]).unwrap();
        assert!(common_subquotient(&m, &m, &mut rng).unwrap());
        assert!(!common_subquotient(&m, &tw, &mut rng).unwrap());
    }

    #[test]
    fn cyclotomic_basics() {
        assert_eq!(cyclotomic_polynomial(6), vec![1, -1, 1]);
        let z = Cyclotomic::new(5);
        let b5 = z.parse("z5+z5^4").unwrap();
        // b5^2 + b5 - 1 = 0
        let e = z.sub(&z.add(&z.mul(&b5, &b5), &b5), &z.from_int(1));
        assert_eq!(z.as_integer(&e), Some(0));
        assert_eq!(z.conj(&b5), b5);
        assert!(z.parse("z7").is_err());
    }

    #[test]
    fn a6_table_checks() {
        let t = CharacterTable::parse(include_str!("../../../data/atlas/A6.txt")).unwrap();
        assert_eq!(t.degrees(), vec![1, 5, 5, 8, 8, 9, 10]);
        assert_eq!(t.brauer_restrict(&t.regular_character()).unwrap(), t.degrees());
        let e4: Vec<i64> = (0..7).map(|i| (i == 3) as i64).collect();
        assert_eq!(t.brauer_restrict(&t.chars[3]).unwrap(), e4);
        let mut bad = t.chars[3].clone();
        bad[1] = t.cyclo.from_int(1);
        assert!(matches!(t.brauer_restrict(&bad), Err(Error::Data(_))));
    }

    /// s: z -> -1/z and t: z -> z + 1 on the projective line over F_13 (index 13 is infinity).
    fn psl2_13_perm(p: u64) -> (GroupPresentation, MatrixModule) {
        let f = gf(p);
        let inf = 13;
        let s: Vec<usize> = (0..14)
            .map(|z| match z {
                0 => inf,
                13 => 0,
                z => (13 - (1..13).find(|w| (w * z) % 13 == 1).unwrap()) % 13,
            })
            .collect();
        let t: Vec<usize> = (0..14).map(|z| if z == inf { inf } else { (z + 1) % 13 }).collect();
        let pres = GroupPresentation::parse(2, "a^2, (ab)^3, b^13, (ab^4ab^7)^2").unwrap();
        let m = MatrixModule::new(f.clone(), 14, vec![permutation_matrix(&f, &s), permutation_matrix(&f, &t)]).unwrap();
        (pres, m)
    }

    #[test]
    fn psl2_13_presentation_and_table() {
        let (pres, m) = psl2_13_perm(5);
        m.check_relations(&pres).unwrap();
        assert!(abelianization(&pres).is_trivial());
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = decompose(&m, &mut rng).unwrap();
        assert_eq!(d.signature(), vec![(1, 1), (13, 1)]);
        let t = CharacterTable::parse(include_str!("../../../data/atlas/L2_13.txt")).unwrap();
        assert_eq!(t.degrees(), vec![1, 7, 7, 12, 12, 12, 13, 14, 14]);
        // the permutation character is 1 + the Steinberg character
        let perm: Vec<Cyclo> = [14, 2, 2, 2, 0, 0, 0, 1, 1].iter().map(|&x| t.cyclo.from_int(x)).collect();
        assert_eq!(t.brauer_restrict(&perm).unwrap(), vec![1, 0, 0, 0, 0, 0, 1, 0, 0]);
    }

    /// GL2(F_p) acting on sl2 by conjugation, basis (e, h, f).
    fn gl2_adjoint(p: u64) -> (MatrixModule, Vec<Elem>) {
        let f = gf(p);
        let g = root_of_unity(&f, p - 1).unwrap();
        let gi = f.inv(g);
        let (o, z) = (f.one(), f.zero());
        let m1 = f.neg(o);
        let two = f.from_int(2);
        // u = [[1,1],[0,1]]: e -> e, h -> h - 2e, f -> f + h - e
        let u = Mat::from_rows(&[vec![o, f.neg(two), m1], vec![z, o, o], vec![z, z, o]], 3);
        // d = diag(g, 1): e -> g e, h -> h, f -> g^-1 f
        let d = Mat::from_rows(&[vec![g, z, z], vec![z, o, z], vec![z, z, gi]], 3);
        // w = [[0,1],[1,0]]: e <-> f, h -> -h
        let w = Mat::from_rows(&[vec![z, z, o], vec![z, m1, z], vec![o, z, z]], 3);
        let det = vec![o, g, m1];
        (MatrixModule::new(f, 3, vec![u, d, w]).unwrap(), det)
    }

    #[test]
    fn sl2_adjoint_irreducible_and_twist() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [5u64, 7, 11] {
            let (m, _) = gl2_adjoint(p);
            let d = decompose(&m, &mut rng).unwrap();
            assert_eq!(d.signature(), vec![(3, 1)]);
            assert_eq!(d.constituents[0].irreducible.endo_degree, 1);
            assert!(!d.contains_trivial);
        }
        let (m, det) = gl2_adjoint(7);
        let tw = m.twist(&det).unwrap();
        assert!(!common_subquotient(&m, &tw, &mut rng).unwrap());
        assert!(common_subquotient(&tw, &tw, &mut rng).unwrap());
    }

    #[test]
    fn complement_search() {
        let f = gf(5);
        let id = linalg::identity(&f, 2);
        let minus = linalg::mat_scale(&f, &id, f.neg(f.one()));
        let is_pm = |x: &Mat| *x == id || *x == minus;
        // Z/4 = <i> over {+-1}: no complement
        let i4 = int_rows(&f, &[vec![0, 4], vec![1, 0]]);
        assert_eq!(extension_splits(&f, &[i4], is_pm, 100).unwrap(), Splitting::DoesNotSplit);
        // Z/2 x Z/2 = <diag(1,-1), -1> over {+-1}: splits
        let r = int_rows(&f, &[vec![1, 0], vec![0, 4]]);
        assert_eq!(extension_splits(&f, &[r, minus.clone()], is_pm, 100).unwrap(), Splitting::Splits);
        let big = int_rows(&f, &[vec![1, 1], vec![0, 1]]);
        let w = int_rows(&f, &[vec![0, 4], vec![1, 0]]);
        assert_eq!(extension_splits(&f, &[big, w], is_pm, 10).unwrap(), Splitting::Undetermined);
    }
}
