//! Root data, Chevalley bases with signed structure constants, Weyl groups and
//! the root-combinatorial invariants consumed elsewhere (the sets of roots
//! bracketing nontrivially with a root, exponents, Levi exponent bound).

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intlattice::{hermite_rows, smith_diagonal, torsion_exponent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CartanType {
    pub family: Family,
    pub rank: usize,
}

impl CartanType {
    pub fn new(family: Family, rank: usize) -> Result<Self> {
        let ok = match family {
            Family::A => rank >= 1,
            Family::B => rank >= 2,
            Family::C => rank >= 2,
            Family::D => rank >= 3,
            Family::E => (6..=8).contains(&rank),
            Family::F => rank == 4,
            Family::G => rank == 2,
        };
        if !ok || rank > 8 {
            return Err(Error::Unsupported(format!("type {family:?}{rank}")));
        }
        Ok(CartanType { family, rank })
    }

    /// Cartan matrix with entry (i, j) = <alpha_j, alpha_i^vee>, Bourbaki labels.
    pub fn cartan_matrix(&self) -> Vec<Vec<i64>> {
        let n = self.rank;
        let mut a = vec![vec![0i64; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 2;
        }
        let mut link = |i: usize, j: usize| {
            a[i][j] = -1;
            a[j][i] = -1;
        };
        match self.family {
            Family::A => (0..n - 1).for_each(|i| link(i, i + 1)),
            Family::B | Family::C => (0..n - 1).for_each(|i| link(i, i + 1)),
            Family::D => {
                (0..n - 2).for_each(|i| link(i, i + 1));
                link(n - 3, n - 1);
            }
            Family::E => {
                link(0, 2);
                link(2, 3);
                link(3, 4);
                link(1, 3);
                (4..n - 1).for_each(|i| link(i, i + 1));
            }
            Family::F => (0..3).for_each(|i| link(i, i + 1)),
            Family::G => link(0, 1),
        }
        match self.family {
            // alpha_n short
            Family::B => a[n - 1][n - 2] = -2,
            // alpha_n long
            Family::C => a[n - 2][n - 1] = -2,
            // alpha_3, alpha_4 short
            Family::F => a[2][1] = -2,
            // alpha_1 short, alpha_2 long
            Family::G => a[0][1] = -3,
            _ => {}
        }
        a
    }
}

impl fmt::Display for CartanType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{}", self.family, self.rank)
    }
}

impl FromStr for CartanType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        let fam = match chars.next().map(|c| c.to_ascii_uppercase()) {
            Some('A') => Family::A,
            Some('B') => Family::B,
            Some('C') => Family::C,
            Some('D') => Family::D,
            Some('E') => Family::E,
            Some('F') => Family::F,
            Some('G') => Family::G,
            _ => return Err(Error::Parse(format!("unknown Cartan type {s:?}"))),
        };
        let rank: usize = chars.as_str().parse().map_err(|_| Error::Parse(format!("bad rank in {s:?}")))?;
        CartanType::new(fam, rank)
    }
}

/// Parse `A2`, `G2`, or a product such as `A1xA2`.
pub fn parse_cartan_types(s: &str) -> Result<Vec<CartanType>> {
    s.split(['x', '*', '+']).map(|t| t.parse()).collect::<Result<Vec<_>>>()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Isogeny {
    Adjoint,
    SimplyConnected,
}

impl FromStr for Isogeny {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adjoint" | "ad" => Ok(Isogeny::Adjoint),
            "simply-connected" | "sc" | "simplyconnected" => Ok(Isogeny::SimplyConnected),
            _ => Err(Error::Parse(format!("unknown isogeny {s:?}"))),
        }
    }
}

impl fmt::Display for Isogeny {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Isogeny::Adjoint => write!(f, "adjoint"),
            Isogeny::SimplyConnected => write!(f, "simply-connected"),
        }
    }
}

/// A split semisimple root datum. Roots are indexed with the positive roots
/// first (in a fixed height order) followed by their negatives in the same
/// order, so root `i + N` is `-root(i)` for `i < N`.
#[derive(Clone, Debug)]
pub struct RootDatum {
    types: Vec<CartanType>,
    isogeny: Isogeny,
    rank: usize,
    cartan: Vec<Vec<i64>>,
    /// (alpha_i, alpha_i) = 2 sym[i]
    sym: Vec<i64>,
    /// coordinates in the simple roots
    roots: Vec<Vec<i64>>,
    /// coordinates in the simple coroots
    coroots: Vec<Vec<i64>>,
    /// roots in the basis of the character lattice X
    char_coords: Vec<Vec<i64>>,
    /// coroots in the dual basis of the cocharacter lattice Y
    cochar_coords: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
    n_pos: usize,
}

impl RootDatum {
    pub fn new(types: &[CartanType], isogeny: Isogeny) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::Unsupported("empty Cartan type".into()));
        }
        let rank: usize = types.iter().map(|t| t.rank).sum();
        if rank > 8 {
            return Err(Error::Unsupported(format!("rank {rank} > 8")));
        }
        let mut cartan = vec![vec![0i64; rank]; rank];
        let mut off = 0;
        for t in types {
            let a = t.cartan_matrix();
            for i in 0..t.rank {
                for j in 0..t.rank {
                    cartan[off + i][off + j] = a[i][j];
                }
            }
            off += t.rank;
        }
        let sym = symmetrizer(&cartan);
        let pos = positive_roots(&cartan);
        let n_pos = pos.len();
        let mut roots = pos.clone();
        roots.extend(pos.iter().map(|r| r.iter().map(|x| -x).collect::<Vec<_>>()));
        let mut index = HashMap::new();
        for (i, r) in roots.iter().enumerate() {
            index.insert(r.clone(), i);
        }
        let mut datum = RootDatum {
            types: types.to_vec(),
            isogeny,
            rank,
            cartan,
            sym,
            roots,
            coroots: vec![],
            char_coords: vec![],
            cochar_coords: vec![],
            index,
            n_pos,
        };
        datum.coroots = (0..datum.roots.len()).map(|i| datum.coroot_of(i)).collect();
        datum.char_coords = (0..datum.roots.len())
            .map(|i| match isogeny {
                Isogeny::Adjoint => datum.roots[i].clone(),
                Isogeny::SimplyConnected => (0..rank).map(|k| datum.pair_simple_coroot(&datum.roots[i], k)).collect(),
            })
            .collect();
        datum.cochar_coords = (0..datum.roots.len())
            .map(|i| match isogeny {
                Isogeny::Adjoint => {
                    (0..rank).map(|j| (0..rank).map(|k| datum.coroots[i][k] * datum.cartan[k][j]).sum()).collect()
                }
                Isogeny::SimplyConnected => datum.coroots[i].clone(),
            })
            .collect();
        datum.check_axioms()?;
        Ok(datum)
    }

    fn coroot_of(&self, i: usize) -> Vec<i64> {
        let n = self.norm(i);
        self.roots[i]
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let v = c * 2 * self.sym[k];
                debug_assert_eq!(v % n, 0);
                v / n
            })
            .collect()
    }

    fn pair_simple_coroot(&self, root: &[i64], k: usize) -> i64 {
        (0..self.rank).map(|j| root[j] * self.cartan[k][j]).sum()
    }

    fn check_axioms(&self) -> Result<()> {
        for i in 0..self.roots.len() {
            if self.pairing(i, i) != 2 {
                return Err(Error::Verification(format!("<a, a^vee> != 2 for root {i}")));
            }
            let x: i64 = self.char_coords[i].iter().zip(&self.cochar_coords[i]).map(|(a, b)| a * b).sum();
            if x != 2 {
                return Err(Error::Verification("lattice pairing of root and coroot".into()));
            }
            for j in 0..self.roots.len() {
                if self.index.get(&self.reflect(i, &self.roots[j])).is_none() {
                    return Err(Error::Verification("reflection does not permute roots".into()));
                }
            }
        }
        Ok(())
    }

    pub fn types(&self) -> &[CartanType] {
        &self.types
    }
    pub fn isogeny(&self) -> Isogeny {
        self.isogeny
    }
    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn cartan(&self) -> &[Vec<i64>] {
        &self.cartan
    }
    pub fn num_roots(&self) -> usize {
        self.roots.len()
    }
    pub fn num_positive(&self) -> usize {
        self.n_pos
    }
    /// dim of the Lie algebra: rank + |roots|.
    pub fn dim(&self) -> usize {
        self.rank + self.roots.len()
    }
    pub fn type_label(&self) -> String {
        self.types.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("x")
    }
    pub fn root(&self, i: usize) -> &[i64] {
        &self.roots[i]
    }
    pub fn roots(&self) -> &[Vec<i64>] {
        &self.roots
    }
    pub fn coroot(&self, i: usize) -> &[i64] {
        &self.coroots[i]
    }
    pub fn char_coords(&self, i: usize) -> &[i64] {
        &self.char_coords[i]
    }
    pub fn cochar_coords(&self, i: usize) -> &[i64] {
        &self.cochar_coords[i]
    }
    pub fn is_positive(&self, i: usize) -> bool {
        i < self.n_pos
    }
    pub fn neg(&self, i: usize) -> usize {
        if i < self.n_pos {
            i + self.n_pos
        } else {
            i - self.n_pos
        }
    }
    /// Index of the i-th simple root.
    pub fn simple(&self, i: usize) -> usize {
        let mut e = vec![0; self.rank];
        e[i] = 1;
        self.index[&e]
    }
    pub fn simple_roots(&self) -> Vec<usize> {
        (0..self.rank).map(|i| self.simple(i)).collect()
    }
    pub fn find(&self, coords: &[i64]) -> Option<usize> {
        self.index.get(coords).copied()
    }
    pub fn height(&self, i: usize) -> i64 {
        self.roots[i].iter().sum()
    }
    /// Index of root(i) + root(j) when it is a root.
    pub fn sum(&self, i: usize, j: usize) -> Option<usize> {
        let v: Vec<i64> = self.roots[i].iter().zip(&self.roots[j]).map(|(a, b)| a + b).collect();
        self.find(&v)
    }
    /// <root(i), root(j)^vee>.
    pub fn pairing(&self, i: usize, j: usize) -> i64 {
        (0..self.rank)
            .map(|k| self.roots[i].iter().enumerate().map(|(l, &c)| c * self.cartan[k][l]).sum::<i64>() * self.coroots[j][k])
            .sum()
    }
    /// <root(i), alpha_k^vee> for the simple coroot k.
    pub fn pairing_simple(&self, i: usize, k: usize) -> i64 {
        self.pair_simple_coroot(&self.roots[i], k)
    }
    /// Invariant form normalized so the short roots of each simple factor have
    /// squared length 2.
    pub fn inner(&self, i: usize, j: usize) -> i64 {
        self.inner_vec(&self.roots[i], &self.roots[j])
    }
    pub fn inner_vec(&self, a: &[i64], b: &[i64]) -> i64 {
        let mut s = 0;
        for k in 0..self.rank {
            for l in 0..self.rank {
                s += a[k] * b[l] * self.sym[k] * self.cartan[k][l];
            }
        }
        s
    }
    pub fn norm(&self, i: usize) -> i64 {
        self.inner(i, i)
    }
    /// Whether root(i) is long within its simple factor.
    pub fn is_long(&self, i: usize) -> bool {
        let factor = self.factor_of(i);
        let max = (0..self.num_roots()).filter(|&j| self.factor_of(j) == factor).map(|j| self.norm(j)).max().unwrap_or(0);
        self.norm(i) == max
    }
    /// Index of the simple factor containing root(i).
    pub fn factor_of(&self, i: usize) -> usize {
        let mut off = 0;
        for (f, t) in self.types.iter().enumerate() {
            if self.roots[i][off..off + t.rank].iter().any(|&c| c != 0) {
                return f;
            }
            off += t.rank;
        }
        unreachable!("a root lies in some simple factor")
    }
    pub fn sym(&self) -> &[i64] {
        &self.sym
    }

    /// s_{root(i)}(v) for v in simple-root coordinates.
    pub fn reflect(&self, i: usize, v: &[i64]) -> Vec<i64> {
        let c: i64 = (0..self.rank).map(|k| self.pair_simple_coroot(v, k) * self.coroots[i][k]).sum();
        v.iter().zip(&self.roots[i]).map(|(a, b)| a - c * b).collect()
    }

    /// Matrix (acting on simple-root coordinate columns) of the reflection in root(i).
    pub fn reflection_matrix(&self, i: usize) -> Vec<i64> {
        let n = self.rank;
        let mut m = vec![0i64; n * n];
        for j in 0..n {
            let mut e = vec![0; n];
            e[j] = 1;
            let img = self.reflect(i, &e);
            for k in 0..n {
                m[k * n + j] = img[k];
            }
        }
        m
    }

    /// Exponents from the dual of the height partition.
    pub fn exponents(&self) -> Vec<i64> {
        let maxh = (0..self.n_pos).map(|i| self.height(i)).max().unwrap_or(0);
        let count = |h: i64| (0..self.n_pos).filter(|&i| self.height(i) == h).count() as i64;
        let mut out = Vec::new();
        for h in 1..=maxh {
            let m = count(h) - count(h + 1);
            for _ in 0..m {
                out.push(h);
            }
        }
        out
    }

    /// Coxeter number (largest over simple factors).
    pub fn coxeter_number(&self) -> i64 {
        (0..self.n_pos).map(|i| self.height(i)).max().unwrap_or(0) + 1
    }

    /// |W| = prod (m_i + 1).
    pub fn weyl_order(&self) -> u64 {
        self.exponents().iter().map(|&m| (m + 1) as u64).product()
    }

    /// Order of the fundamental group X_sc / X_ad = det of the Cartan matrix.
    pub fn fundamental_group_order(&self) -> i64 {
        smith_diagonal(&self.cartan).iter().product()
    }

    /// All Weyl group elements as matrices on simple-root coordinates.
    pub fn weyl_group(&self, limit: usize) -> Result<Vec<Vec<i64>>> {
        let n = self.rank;
        let gens: Vec<Vec<i64>> = self.simple_roots().iter().map(|&s| self.reflection_matrix(s)).collect();
        let mut id = vec![0i64; n * n];
        for i in 0..n {
            id[i * n + i] = 1;
        }
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        let mut out = vec![id.clone()];
        seen.insert(id.clone());
        let mut queue = VecDeque::from([id]);
        while let Some(w) = queue.pop_front() {
            for g in &gens {
                let prod = int_mat_mul(g, &w, n);
                if seen.insert(prod.clone()) {
                    if out.len() >= limit {
                        return Err(Error::Unsupported(format!("Weyl group larger than {limit}")));
                    }
                    out.push(prod.clone());
                    queue.push_back(prod);
                }
            }
        }
        Ok(out)
    }

    /// Apply a Weyl matrix to root(i), returning the image root index.
    pub fn weyl_apply(&self, w: &[i64], i: usize) -> usize {
        let n = self.rank;
        let v: Vec<i64> = (0..n).map(|k| (0..n).map(|j| w[k * n + j] * self.roots[i][j]).sum()).collect();
        self.index[&v]
    }

    /// Text form for the root-datum cache.
    pub fn to_cache_text(&self, basis: &ChevalleyBasis) -> String {
        let mut s = format!("{} {} {}\n", self.type_label(), self.rank, self.isogeny);
        for i in 0..self.num_roots() {
            let r: Vec<String> = self.char_coords[i].iter().map(|x| x.to_string()).collect();
            let c: Vec<String> = self.cochar_coords[i].iter().map(|x| x.to_string()).collect();
            s.push_str(&format!("{} | {}\n", r.join(" "), c.join(" ")));
        }
        for i in 0..self.num_roots() {
            for j in 0..self.num_roots() {
                let n = basis.n(i, j);
                if n != 0 {
                    s.push_str(&format!("{i} {j} {n}\n"));
                }
            }
        }
        s
    }
}

fn int_mat_mul(a: &[i64], b: &[i64], n: usize) -> Vec<i64> {
    let mut c = vec![0i64; n * n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i * n + k];
            if x == 0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += x * b[k * n + j];
            }
        }
    }
    c
}

/// d_i with d_i A_ij = d_j A_ji, minimal positive per connected component.
fn symmetrizer(a: &[Vec<i64>]) -> Vec<i64> {
    let n = a.len();
    // work with rationals num/den via a common scale
    let mut d: Vec<Option<(i64, i64)>> = vec![None; n];
    for start in 0..n {
        if d[start].is_some() {
            continue;
        }
        d[start] = Some((1, 1));
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if i != j && a[i][j] != 0 && d[j].is_none() {
                    let (ni, di) = d[i].unwrap();
                    // d_j = d_i A_ij / A_ji
                    let (nj, dj) = (ni * a[i][j], di * a[j][i]);
                    let g = gcd(nj.abs(), dj.abs());
                    let sgn = if dj < 0 { -1 } else { 1 };
                    d[j] = Some((sgn * nj / g, sgn * dj / g));
                    comp.push(j);
                    queue.push_back(j);
                }
            }
        }
        // scale the component to integers with minimum 1
        let l = comp.iter().fold(1, |acc, &i| lcm(acc, d[i].unwrap().1));
        let vals: Vec<i64> = comp.iter().map(|&i| d[i].unwrap().0 * l / d[i].unwrap().1).collect();
        let g = vals.iter().fold(0, |acc, &v| gcd(acc, v));
        for (k, &i) in comp.iter().enumerate() {
            d[i] = Some((vals[k] / g, 1));
        }
    }
    d.into_iter().map(|x| x.unwrap().0).collect()
}

pub fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: i64, b: i64) -> i64 {
    if a == 0 || b == 0 {
        0
    } else {
        (a / gcd(a, b) * b).abs()
    }
}

/// Positive roots in simple-root coordinates, sorted by height and then by
/// reversed lexicographic order of coordinates (so alpha_1 precedes alpha_2).
fn positive_roots(a: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    let pair = |v: &[i64], k: usize| -> i64 { (0..n).map(|j| v[j] * a[k][j]).sum() };
    let mut all: Vec<Vec<i64>> = Vec::new();
    let mut set: HashSet<Vec<i64>> = HashSet::new();
    let mut layer: Vec<Vec<i64>> = (0..n)
        .map(|i| {
            let mut e = vec![0; n];
            e[i] = 1;
            e
        })
        .collect();
    for v in &layer {
        set.insert(v.clone());
    }
    while !layer.is_empty() {
        all.extend(layer.iter().cloned());
        let mut next = Vec::new();
        for v in &layer {
            for k in 0..n {
                // alpha_k string through v: p = how far down we can go
                let mut p = 0;
                let mut w = v.clone();
                loop {
                    w[k] -= 1;
                    if set.contains(&w) {
                        p += 1;
                    } else {
                        break;
                    }
                }
                let q = p - pair(v, k);
                if q > 0 {
                    let mut u = v.clone();
                    u[k] += 1;
                    if set.insert(u.clone()) {
                        next.push(u);
                    }
                }
            }
        }
        layer = next;
    }
    all.sort_by(|x, y| {
        let hx: i64 = x.iter().sum();
        let hy: i64 = y.iter().sum();
        hx.cmp(&hy).then_with(|| y.cmp(x))
    });
    all
}

/// Chevalley basis: X_beta for each root, h_i for each simple coroot. Basis
/// order is positive roots, then h_1..h_n, then negative roots.
#[derive(Clone, Debug)]
pub struct ChevalleyBasis {
    n_pos: usize,
    rank: usize,
    /// structure constants N[i][j] for root indices (0 if i + j is not a root)
    consts: Vec<Vec<i64>>,
    /// bracket of basis vectors as sparse integer combinations
    table: Vec<Vec<Vec<(usize, i64)>>>,
}

impl ChevalleyBasis {
    pub fn new(d: &RootDatum) -> Result<Self> {
        let consts = structure_constants(d)?;
        let n_pos = d.num_positive();
        let rank = d.rank();
        let dim = d.dim();
        let mut cb = ChevalleyBasis { n_pos, rank, consts, table: vec![] };
        let mut table = vec![vec![Vec::new(); dim]; dim];
        for (a, row) in table.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                *cell = cb.compute_bracket(d, a, b);
            }
        }
        cb.table = table;
        Ok(cb)
    }

    fn compute_bracket(&self, d: &RootDatum, a: usize, b: usize) -> Vec<(usize, i64)> {
        match (self.basis_root(a), self.basis_root(b)) {
            (Some(x), Some(y)) => {
                if x == d.neg(y) {
                    (0..self.rank).filter(|&k| d.coroot(x)[k] != 0).map(|k| (self.h_index(k), d.coroot(x)[k])).collect()
                } else if let Some(z) = d.sum(x, y) {
                    vec![(self.root_index(z), self.consts[x][y])]
                } else {
                    vec![]
                }
            }
            (None, Some(y)) => {
                let k = a - self.n_pos;
                let c = d.pairing_simple(y, k);
                if c == 0 {
                    vec![]
                } else {
                    vec![(b, c)]
                }
            }
            (Some(x), None) => {
                let k = b - self.n_pos;
                let c = d.pairing_simple(x, k);
                if c == 0 {
                    vec![]
                } else {
                    vec![(a, -c)]
                }
            }
            (None, None) => vec![],
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.n_pos + self.rank
    }
    pub fn rank(&self) -> usize {
        self.rank
    }
    /// Basis index of X_root(i).
    pub fn root_index(&self, i: usize) -> usize {
        if i < self.n_pos {
            i
        } else {
            i + self.rank
        }
    }
    /// Basis index of h_k.
    pub fn h_index(&self, k: usize) -> usize {
        self.n_pos + k
    }
    /// Root index of a basis vector, or None for Cartan elements.
    pub fn basis_root(&self, b: usize) -> Option<usize> {
        if b < self.n_pos {
            Some(b)
        } else if b < self.n_pos + self.rank {
            None
        } else {
            Some(b - self.rank)
        }
    }
    /// N_{root(i), root(j)}.
    pub fn n(&self, i: usize, j: usize) -> i64 {
        self.consts[i][j]
    }
    /// [e_a, e_b] for basis vectors.
    pub fn bracket_basis(&self, a: usize, b: usize) -> &[(usize, i64)] {
        &self.table[a][b]
    }

    /// Bracket of integer vectors in the Chevalley basis.
    pub fn bracket_int(&self, x: &[i64], y: &[i64]) -> Vec<i64> {
        let mut out = vec![0i64; self.dim()];
        for (a, &xa) in x.iter().enumerate() {
            if xa == 0 {
                continue;
            }
            for (b, &yb) in y.iter().enumerate() {
                if yb == 0 {
                    continue;
                }
                for &(c, k) in &self.table[a][b] {
                    out[c] += xa * yb * k;
                }
            }
        }
        out
    }

    /// Matrix of ad(e_a) on the integer basis: column b holds [e_a, e_b].
    pub fn ad_basis_int(&self, a: usize) -> Vec<Vec<i64>> {
        let dim = self.dim();
        let mut m = vec![vec![0i64; dim]; dim];
        for b in 0..dim {
            for &(c, k) in &self.table[a][b] {
                m[c][b] += k;
            }
        }
        m
    }

    /// Exhaustive Jacobi identity over Z on basis triples.
    pub fn jacobi_exhaustive(&self) -> bool {
        let dim = self.dim();
        (0..dim).all(|a| (0..dim).all(|b| (0..dim).all(|c| self.jacobi_triple(a, b, c))))
    }

    pub fn jacobi_triple(&self, a: usize, b: usize, c: usize) -> bool {
        let dim = self.dim();
        let e = |i: usize| {
            let mut v = vec![0i64; dim];
            v[i] = 1;
            v
        };
        let (x, y, z) = (e(a), e(b), e(c));
        let t1 = self.bracket_int(&self.bracket_int(&x, &y), &z);
        let t2 = self.bracket_int(&self.bracket_int(&y, &z), &x);
        let t3 = self.bracket_int(&self.bracket_int(&z, &x), &y);
        t1.iter().zip(&t2).zip(&t3).all(|((a, b), c)| a + b + c == 0)
    }
}

/// String bound p_{a,b}: largest p with root(b) - p root(a) a root.
pub fn string_bottom(d: &RootDatum, a: usize, b: usize) -> i64 {
    let mut p = 0;
    let mut v: Vec<i64> = d.root(b).to_vec();
    loop {
        for (x, y) in v.iter_mut().zip(d.root(a)) {
            *x -= y;
        }
        if d.find(&v).is_some() {
            p += 1;
        } else {
            return p;
        }
    }
}

/// Signed structure constants by the extraspecial-pair algorithm.
fn structure_constants(d: &RootDatum) -> Result<Vec<Vec<i64>>> {
    let nr = d.num_roots();
    let np = d.num_positive();
    let mut pos: HashMap<(usize, usize), i64> = HashMap::new();

    // lookup for any pair, using values already fixed on positive pairs
    fn lookup(d: &RootDatum, pos: &HashMap<(usize, usize), i64>, x: usize, y: usize) -> Result<i64> {
        let np = d.num_positive();
        if d.sum(x, y).is_none() {
            return Ok(0);
        }
        match (x < np, y < np) {
            (true, true) => {
                pos.get(&(x, y)).copied().ok_or_else(|| Error::Verification(format!("constant N({x},{y}) not yet fixed")))
            }
            (false, false) => Ok(-lookup(d, pos, d.neg(x), d.neg(y))?),
            (false, true) => Ok(-lookup(d, pos, y, x)?),
            (true, false) => {
                let yp = d.neg(y);
                let z: Vec<i64> = d.root(x).iter().zip(d.root(yp)).map(|(a, b)| a - b).collect();
                let zi = d.find(&z).expect("x + y is a root");
                if zi < np {
                    // N_{x,-y'} = -(z,z)/(x,x) N_{y',z}
                    let num = -d.norm(zi) * lookup(d, pos, yp, zi)?;
                    exact_div(num, d.norm(x))
                } else {
                    // w = y' - x; N_{x,-y'} = (w,w)/(y',y') N_{w,x}
                    let wi = d.neg(zi);
                    let num = d.norm(wi) * lookup(d, pos, wi, x)?;
                    exact_div(num, d.norm(yp))
                }
            }
        }
    }

    for xi in 0..np {
        if d.height(xi) == 1 {
            continue;
        }
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for a in 0..np {
            for b in a + 1..np {
                if d.sum(a, b) == Some(xi) {
                    pairs.push((a, b));
                }
            }
        }
        let (a, b) = pairs[0];
        let nab = string_bottom(d, a, b) + 1;
        pos.insert((a, b), nab);
        pos.insert((b, a), -nab);
        for &(g, dl) in &pairs[1..] {
            let ng = d.neg(g);
            let nd = d.neg(dl);
            let mut num = 0i64;
            // common denominator 12 covers squared lengths 2, 4, 6
            let l = 12;
            if let Some(bg) = d.sum(b, ng) {
                num += lookup(d, &pos, b, ng)? * lookup(d, &pos, a, nd)? * (l / d.norm(bg));
            }
            if let Some(ag) = d.sum(a, ng) {
                num += -lookup(d, &pos, a, ng)? * lookup(d, &pos, b, nd)? * (l / d.norm(ag));
            }
            let val = exact_div(d.norm(xi) * num, l * nab)?;
            pos.insert((g, dl), val);
            pos.insert((dl, g), -val);
        }
    }
    let mut consts = vec![vec![0i64; nr]; nr];
    for (x, row) in consts.iter_mut().enumerate() {
        for (y, cell) in row.iter_mut().enumerate() {
            *cell = lookup(d, &pos, x, y)?;
        }
    }
    // N = +-(p + 1)
    for x in 0..nr {
        for y in 0..nr {
            if d.sum(x, y).is_some() && consts[x][y].abs() != string_bottom(d, x, y) + 1 {
                return Err(Error::Verification(format!("|N({x},{y})| != p + 1")));
            }
        }
    }
    Ok(consts)
}

fn exact_div(num: i64, den: i64) -> Result<i64> {
    if den == 0 || num % den != 0 {
        return Err(Error::Verification(format!("inexact division {num}/{den}")));
    }
    Ok(num / den)
}

/// Build the root datum and its Chevalley basis.
pub fn root_datum(types: &[CartanType], isogeny: Isogeny) -> Result<(RootDatum, ChevalleyBasis)> {
    let d = RootDatum::new(types, isogeny)?;
    let b = ChevalleyBasis::new(&d)?;
    Ok((d, b))
}

/// Convenience: parse a type string such as `G2` or `A1xA1`.
pub fn root_datum_str(s: &str, isogeny: Isogeny) -> Result<(RootDatum, ChevalleyBasis)> {
    root_datum(&parse_cartan_types(s)?, isogeny)
}

/// Roots beta with [X_alpha, X_beta] != 0, read off the structure constants.
pub fn phi_alpha(d: &RootDatum, basis: &ChevalleyBasis, alpha: usize) -> Result<Vec<usize>> {
    if alpha >= d.num_roots() {
        return Err(Error::NotARoot(format!("index {alpha}")));
    }
    Ok((0..d.num_roots()).filter(|&b| b == d.neg(alpha) || basis.n(alpha, b) != 0).collect())
}

/// Smith normal form diagonal of an integer matrix.
pub fn lattice_torsion(m: &[Vec<i64>]) -> Vec<i64> {
    smith_diagonal(m)
}

/// Result of the Levi exponent bound.
#[derive(Clone, Debug, Serialize)]
pub struct LeviBound {
    /// lcm of torsion exponents over enumerated pairs
    pub n_prime: i64,
    /// |W| + |roots|
    pub exponent: u64,
    /// n_prime ^ exponent, decimal
    pub n_g: String,
    pub closed_subsystems: usize,
    pub reflection_subsystems: usize,
    pub lattice_pairs: usize,
    /// torsion exponents seen, with multiplicity of distinct lattice pairs
    pub torsion_histogram: Vec<(i64, usize)>,
}

impl LeviBound {
    pub fn n_g_big(&self) -> BigUint {
        BigUint::from(self.n_prime as u64).pow(self.exponent as u32)
    }
}

fn mask_closure_additive(d: &RootDatum, mut mask: u64) -> u64 {
    loop {
        let mut added = 0u64;
        let members: Vec<usize> = (0..d.num_roots()).filter(|&i| mask >> i & 1 == 1).collect();
        for &x in &members {
            for &y in &members {
                if let Some(z) = d.sum(x, y) {
                    if mask >> z & 1 == 0 {
                        added |= 1 << z;
                    }
                }
            }
        }
        if added == 0 {
            return mask;
        }
        mask |= added;
    }
}

fn mask_closure_reflection(d: &RootDatum, mut mask: u64) -> u64 {
    loop {
        let mut added = 0u64;
        let members: Vec<usize> = (0..d.num_roots()).filter(|&i| mask >> i & 1 == 1).collect();
        for &x in &members {
            for &y in &members {
                let z = d.find(&d.reflect(x, d.root(y))).expect("reflection of a root");
                if mask >> z & 1 == 0 {
                    added |= 1 << z;
                }
            }
        }
        if added == 0 {
            return mask;
        }
        mask |= added;
    }
}

fn enumerate_subsystems(d: &RootDatum, closure: impl Fn(u64) -> u64) -> Vec<u64> {
    let mut seen: HashSet<u64> = HashSet::new();
    seen.insert(0);
    let mut queue = VecDeque::from([0u64]);
    while let Some(s) = queue.pop_front() {
        for b in 0..d.num_positive() {
            if s >> b & 1 == 1 {
                continue;
            }
            let t = closure(s | 1 << b | 1 << d.neg(b));
            if seen.insert(t) {
                queue.push_back(t);
            }
        }
    }
    let mut v: Vec<u64> = seen.into_iter().collect();
    v.sort_unstable();
    v
}

/// Additively closed symmetric subsystems (rank <= 4 only).
pub fn closed_subsystems(d: &RootDatum) -> Vec<u64> {
    enumerate_subsystems(d, |m| mask_closure_additive(d, m))
}

/// Reflection-closed subsets, each determining the reflection subgroup it
/// generates (rank <= 4 only).
pub fn reflection_subsystems(d: &RootDatum) -> Vec<u64> {
    enumerate_subsystems(d, |m| mask_closure_reflection(d, m))
}

/// n_G = (n'_G)^{|W| + |roots|} with n'_G the lcm of the torsion exponents of
/// X / (Z Psi + sum_{w in W'} (w - 1) X) over closed subsystems Psi and
/// reflection subgroups W'.
pub fn levi_bound(d: &RootDatum) -> Result<LeviBound> {
    if d.rank() > 4 || d.num_roots() > 64 {
        return Err(Error::Unsupported(format!("levi_bound enumeration needs rank <= 4, got {}", d.rank())));
    }
    let n = d.rank();
    let closed = closed_subsystems(d);
    let refl = reflection_subsystems(d);
    let members = |mask: u64| (0..d.num_roots()).filter(move |&i| mask >> i & 1 == 1);

    let mut psi_lattices: HashSet<Vec<Vec<i64>>> = HashSet::new();
    for &m in &closed {
        let gens: Vec<Vec<i64>> = members(m).map(|i| d.char_coords(i).to_vec()).collect();
        psi_lattices.insert(hermite_rows(&gens));
    }
    // (s_beta - 1) X = <X, beta^vee> beta = c_beta Z beta
    let mut w_lattices: HashSet<Vec<Vec<i64>>> = HashSet::new();
    for &m in &refl {
        let gens: Vec<Vec<i64>> = members(m)
            .map(|i| {
                let c = d.cochar_coords(i).iter().fold(0, |acc, &x| gcd(acc, x));
                d.char_coords(i).iter().map(|x| x * c).collect()
            })
            .collect();
        w_lattices.insert(hermite_rows(&gens));
    }
    let mut n_prime = 1i64;
    let mut hist: HashMap<i64, usize> = HashMap::new();
    let mut count = 0;
    for a in &psi_lattices {
        for b in &w_lattices {
            let mut gens = a.clone();
            gens.extend(b.iter().cloned());
            let t = torsion_exponent(&gens, n);
            n_prime = lcm(n_prime, t);
            *hist.entry(t).or_insert(0) += 1;
            count += 1;
        }
    }
    let exponent = d.weyl_order() + d.num_roots() as u64;
    let n_g = BigUint::from(n_prime as u64).pow(exponent as u32).to_string();
    let mut torsion_histogram: Vec<(i64, usize)> = hist.into_iter().collect();
    torsion_histogram.sort_unstable();
    Ok(LeviBound {
        n_prime,
        exponent,
        n_g,
        closed_subsystems: closed.len(),
        reflection_subsystems: refl.len(),
        lattice_pairs: count,
        torsion_histogram,
    })
}

/// Roots in the Q-span of the given roots (the Levi subsystem they generate
/// if it equals the input).
pub fn rational_closure(d: &RootDatum, roots: &[usize]) -> Vec<usize> {
    if roots.is_empty() {
        return vec![];
    }
    let basis: Vec<Vec<i64>> = roots.iter().map(|&i| d.root(i).to_vec()).collect();
    let r = rational_rank(&basis);
    (0..d.num_roots())
        .filter(|&i| {
            let mut b = basis.clone();
            b.push(d.root(i).to_vec());
            rational_rank(&b) == r
        })
        .collect()
}

fn rational_rank(rows: &[Vec<i64>]) -> usize {
    smith_diagonal(rows).iter().filter(|&&x| x != 0).count()
}

/// Parse the cache text back into (types label, rank, isogeny, roots, coroots,
/// constant triples).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CachedDatum {
    pub label: String,
    pub rank: usize,
    pub isogeny: Isogeny,
    pub roots: Vec<Vec<i64>>,
    pub coroots: Vec<Vec<i64>>,
    pub constants: Vec<(usize, usize, i64)>,
}

pub fn parse_cache_text(s: &str) -> Result<CachedDatum> {
    let mut lines = s.lines();
    let head = lines.next().ok_or_else(|| Error::Parse("empty cache".into()))?;
    let parts: Vec<&str> = head.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("bad header {head:?}")));
    }
    let rank: usize = parts[1].parse().map_err(|_| Error::Parse("bad rank".into()))?;
    let isogeny: Isogeny = parts[2].parse()?;
    let mut roots = Vec::new();
    let mut coroots = Vec::new();
    let mut constants = Vec::new();
    for line in lines {
        if let Some((r, c)) = line.split_once('|') {
            let parse = |t: &str| -> Result<Vec<i64>> {
                t.split_whitespace().map(|x| x.parse::<i64>().map_err(|_| Error::Parse(format!("bad integer {x:?}")))).collect()
            };
            roots.push(parse(r)?);
            coroots.push(parse(c)?);
        } else {
            let v: Vec<&str> = line.split_whitespace().collect();
            if v.len() != 3 {
                return Err(Error::Parse(format!("bad constant line {line:?}")));
            }
            let e = |x: &str| Error::Parse(format!("bad integer {x:?}"));
            constants.push((
                v[0].parse().map_err(|_| e(v[0]))?,
                v[1].parse().map_err(|_| e(v[1]))?,
                v[2].parse().map_err(|_| e(v[2]))?,
            ));
        }
    }
    Ok(CachedDatum { label: parts[0].to_string(), rank, isogeny, roots, coroots, constants })
}

/// Load a datum from the cache directory, writing the cache file on a miss.
/// The constants in the file are compared against a fresh computation.
pub fn root_datum_cached(dir: &std::path::Path, types: &[CartanType], isogeny: Isogeny) -> Result<(RootDatum, ChevalleyBasis)> {
    let (d, b) = root_datum(types, isogeny)?;
    let text = d.to_cache_text(&b);
    let path = dir.join(format!("{}_{}.txt", d.type_label(), isogeny));
    if path.exists() {
        let stored = std::fs::read_to_string(&path)?;
        if stored != text {
            return Err(Error::Data(format!("cache file {} differs from regeneration", path.display())));
        }
    } else {
        std::fs::create_dir_all(dir)?;
        std::fs::write(&path, &text)?;
    }
    Ok((d, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn datum(s: &str) -> (RootDatum, ChevalleyBasis) {
        root_datum_str(s, Isogeny::Adjoint).unwrap()
    }

    #[test]
    fn dimensions_of_required_types() {
        let table = [("A1", 3, 1), ("A2", 8, 3), ("B2", 10, 4), ("G2", 14, 6), ("F4", 52, 24), ("E6", 78, 36), ("D4", 28, 12)];
        for (s, dim, npos) in table {
            let (d, _) = datum(s);
            assert_eq!(d.dim(), dim, "{s}");
            assert_eq!(d.num_positive(), npos, "{s}");
            assert_eq!((d.dim() - d.rank()) / 2, d.num_positive());
        }
    }

    #[test]
    fn exponents_and_weyl_orders() {
        assert_eq!(datum("G2").0.exponents(), vec![1, 5]);
        assert_eq!(datum("G2").0.weyl_order(), 12);
        assert_eq!(datum("F4").0.exponents(), vec![1, 5, 7, 11]);
        assert_eq!(datum("D4").0.exponents(), vec![1, 3, 3, 5]);
        for s in ["A1", "A2", "A3", "B2", "G2", "B3", "C3"] {
            let d = datum(s).0;
            assert_eq!(d.weyl_group(100_000).unwrap().len() as u64, d.weyl_order(), "{s}");
        }
    }

    #[test]
    fn jacobi_exhaustive_small_ranks() {
        for s in ["A1", "A2", "B2", "G2", "A3", "B3", "C3", "A1xA1"] {
            let (_, b) = datum(s);
            assert!(b.jacobi_exhaustive(), "{s}");
        }
    }

    #[test]
    fn phi_alpha_examples() {
        let (d, b) = datum("A1");
        assert_eq!(phi_alpha(&d, &b, 0).unwrap(), vec![1]);
        let (d, b) = datum("A2");
        let a = d.simple(0);
        let phi = phi_alpha(&d, &b, a).unwrap();
        assert_eq!(phi.len(), 3);
        assert!(phi.contains(&d.neg(a)));
        // brute force via the bracket of basis vectors
        for beta in 0..d.num_roots() {
            let nonzero = !b.bracket_basis(b.root_index(a), b.root_index(beta)).is_empty();
            assert_eq!(phi.contains(&beta), nonzero);
        }
        assert!(phi_alpha(&d, &b, 99).is_err());
    }

    #[test]
    fn lattice_torsion_examples() {
        assert_eq!(lattice_torsion(&[vec![1, 0], vec![0, 1]]), vec![1, 1]);
        assert_eq!(lattice_torsion(&[vec![2, 0], vec![0, 4]]), vec![2, 4]);
        assert_eq!(lattice_torsion(&[vec![2, 1], vec![0, 3]]), vec![1, 6]);
    }

    #[test]
    fn levi_bound_a1() {
        let (d, _) = datum("A1");
        let lb = levi_bound(&d).unwrap();
        assert_eq!(lb.n_prime, 2);
        assert_eq!(lb.exponent, 4);
        assert_eq!(lb.n_g, "16");
    }

    #[test]
    fn full_subsystem_torsion_divides_fundamental_group() {
        for (s, iso) in [("A2", Isogeny::SimplyConnected), ("B2", Isogeny::SimplyConnected), ("A2", Isogeny::Adjoint)] {
            let (d, _) = root_datum_str(s, iso).unwrap();
            let gens: Vec<Vec<i64>> = (0..d.num_roots()).map(|i| d.char_coords(i).to_vec()).collect();
            let t = torsion_exponent(&gens, d.rank());
            assert_eq!(d.fundamental_group_order() % t, 0);
        }
    }

    #[test]
    fn cache_round_trip() {
        let (d, b) = datum("B2");
        let text = d.to_cache_text(&b);
        let parsed = parse_cache_text(&text).unwrap();
        assert_eq!(parsed.rank, 2);
        assert_eq!(parsed.roots.len(), 8);
        for (i, j, n) in parsed.constants {
            assert_eq!(b.n(i, j), n);
        }
    }
}
