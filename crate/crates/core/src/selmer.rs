//! Synthetic global engine: a finite model of the global cohomology with its
//! restriction to local H^1, Selmer systems and their balance, the Cartan and
//! auxiliary prime searches, the doubling solver, and a level-by-level lifting
//! driver that re-checks every local condition exactly.
//!
//! The global image of H^1(W) is a subspace A of V = (+)_v V_v and the global
//! image of H^1(W*) is A* = Ann(A) in V*. A (+) A* is then maximal isotropic
//! in V (+) V* for the summed local pairing, and dim A is fixed by the
//! Euler characteristic ledger.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chevgroup::{Chevalley, GroupElement, LieElement};
use crate::coeffring::{is_prime, CoeffRing, RingElement};
use crate::error::{Error, Result};
use crate::field::{Field, GaloisField};
use crate::galoismod::{Decomposition, GroupPresentation, MatrixModule};
use crate::linalg::{self, FMat};
use crate::localconds::{self, ExtraKind, LocalLift, NormalForm, OrdinaryModel, TameLocalModel, Variant};
use crate::rootdata::{phi_alpha, root_datum_str, Isogeny};

pub type Elem = RingElement;
pub type Space = FMat<GaloisField>;

/// Default cap on conditioned draws.
pub const DEFAULT_CAP: u64 = 100_000;
const SHARDS: u64 = 8;

// ----- places and the global model -----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaceKind {
    RamifiedInput,
    PAdicLedger,
    TrivialPrime,
}

/// Mod p^2 data of the residual lift at a place, used by the lifting driver.
#[derive(Clone, Debug)]
pub enum PlaceLift {
    /// rho_2(sigma) is the torus element with these simple-root values mod p^2
    /// and rho_2(tau) = 1; the condition is the unramified L^alpha.
    Trivial { alpha: usize, torus2: Vec<Elem> },
    /// simple-root values mod p^2 of the torus character, one list per generator
    Ordinary { chi: Vec<Vec<Elem>> },
}

#[derive(Clone, Debug)]
pub struct Place {
    pub name: String,
    pub kind: PlaceKind,
    pub h1_dim: usize,
    /// local H^0 of W and of W*
    pub h0: usize,
    pub h0_dual: usize,
    /// Gram matrix of the pairing V_v x V_v* (rows: classes of W)
    pub gram: Space,
    pub q: Option<u64>,
    pub tame: Option<TameLocalModel>,
    pub ordinary: Option<OrdinaryModel>,
    pub lift: Option<PlaceLift>,
}

impl Place {
    /// Trivial prime for a module of dimension `dim` with trivial action:
    /// H^1 = (sigma | tau) values, tame pairing.
    pub fn trivial(name: &str, f: &GaloisField, dim: usize, q: u64, tame: Option<TameLocalModel>) -> Self {
        Place {
            name: name.into(),
            kind: PlaceKind::TrivialPrime,
            h1_dim: 2 * dim,
            h0: dim,
            h0_dual: dim,
            gram: localconds::tame_pairing_gram(f, dim),
            q: Some(q),
            tame,
            ordinary: None,
            lift: None,
        }
    }

    /// Place known only through its ledger dimensions; the pairing is the
    /// coordinate pairing.
    pub fn ledger(name: &str, kind: PlaceKind, f: &GaloisField, h1_dim: usize, h0: usize, h0_dual: usize) -> Self {
        Place {
            name: name.into(),
            kind,
            h1_dim,
            h0,
            h0_dual,
            gram: linalg::identity(f, h1_dim),
            q: None,
            tame: None,
            ordinary: None,
            lift: None,
        }
    }

    /// Ordinary place above p in the free-group model: H^1 = g^{f+1},
    /// H^0 = g, and no invariants of the dual in the model.
    pub fn ordinary(name: &str, model: OrdinaryModel) -> Self {
        let f = model.field().clone();
        let mut p = Place::ledger(name, PlaceKind::PAdicLedger, &f, model.h1_dim(), model.ch.dim(), 0);
        p.ordinary = Some(model);
        p
    }
}

/// Finite group acting on W and W*, where the model records one.
#[derive(Clone, Debug)]
pub struct GlobalStructure {
    pub presentation: GroupPresentation,
    pub module: MatrixModule,
    pub dual_module: MatrixModule,
}

#[derive(Clone, Debug)]
pub struct SyntheticGlobalModel {
    pub field: GaloisField,
    /// dimension of the coefficient module W
    pub dim: usize,
    pub places: Vec<Place>,
    pub global_h0: usize,
    pub global_h0_dual: usize,
    pub archimedean_h0: usize,
    /// rows: basis of the global image A in V
    pub global: Space,
    /// rows: basis of the dual global image A* in V*
    pub dual: Space,
    pub structure: Option<GlobalStructure>,
}

/// Input of `build_synthetic_model`.
#[derive(Clone, Debug)]
pub struct ModelBuild {
    pub places: Vec<Place>,
    pub global_h0: usize,
    pub global_h0_dual: usize,
    pub archimedean_h0: usize,
    /// classes that must lie in A (rows in V)
    pub prescribed: Vec<Vec<Elem>>,
    /// classes that must lie in A* (rows in V*)
    pub prescribed_dual: Vec<Vec<Elem>>,
    pub structure: Option<GlobalStructure>,
}

impl SyntheticGlobalModel {
    pub fn total_dim(&self) -> usize {
        self.places.iter().map(|p| p.h1_dim).sum()
    }

    pub fn offset(&self, v: usize) -> usize {
        self.places[..v].iter().map(|p| p.h1_dim).sum()
    }

    /// Component at place v of a vector in V or V*.
    pub fn restrict<'a>(&self, x: &'a [Elem], v: usize) -> &'a [Elem] {
        let o = self.offset(v);
        &x[o..o + self.places[v].h1_dim]
    }

    /// Block-diagonal Gram matrix of the summed local pairing.
    pub fn gram(&self) -> Space {
        block_gram(&self.field, &self.places)
    }

    /// Summed local pairing of x in V with y in V*.
    pub fn pairing(&self, x: &[Elem], y: &[Elem]) -> Elem {
        let f = &self.field;
        let mut s = f.zero();
        for (v, p) in self.places.iter().enumerate() {
            let gy = linalg::mul_vec(f, &p.gram, self.restrict(y, v));
            s = f.add(s, linalg::dot(f, self.restrict(x, v), &gy));
        }
        s
    }

    /// dim A from the ledger: sum (h1_v - h0_v) - h0_arch + h0 - h0*.
    pub fn expected_global_dim(&self) -> Result<usize> {
        expected_dim(&self.places, self.global_h0, self.global_h0_dual, self.archimedean_h0)
    }

    /// A (+) A* is isotropic of half the total dimension of V (+) V*.
    pub fn poitou_tate_check(&self) -> Result<()> {
        let f = &self.field;
        let total = self.total_dim();
        let expect = self.expected_global_dim()?;
        if self.global.nrows() != expect || linalg::rank(f, &self.global) != expect {
            return Err(Error::Model(format!("dim A = {} but the ledger gives {expect}", self.global.nrows())));
        }
        if self.global.nrows() + self.dual.nrows() != total || linalg::rank(f, &self.dual) != self.dual.nrows() {
            return Err(Error::Model("dim A + dim A* differs from dim V".into()));
        }
        let g = self.gram();
        let cross = linalg::mat_mul(f, &linalg::mat_mul(f, &self.global, &g), &self.dual.transpose());
        if !cross.data().iter().all(|x| f.is_zero(*x)) {
            return Err(Error::Model("global images are not orthogonal".into()));
        }
        Ok(())
    }

    /// Coordinates of a global class in the basis of A.
    pub fn global_coordinates(&self, x: &[Elem]) -> Option<Vec<Elem>> {
        linalg::coordinates(&self.field, &self.global, x)
    }
    pub fn dual_coordinates(&self, y: &[Elem]) -> Option<Vec<Elem>> {
        linalg::coordinates(&self.field, &self.dual, y)
    }

    /// Adjoin a trivial prime. Old global classes restrict to it unramified
    /// with sigma-values `r` (one row per basis row of A); old dual classes
    /// likewise by `r_dual`. Each new global class has tau-value y and
    /// sigma-value K y at the new prime, and its old components are fixed by
    /// orthogonality to the old dual classes.
    pub fn add_trivial_prime(&mut self, place: Place, r: &Space, r_dual: &Space, k: &Space) -> Result<()> {
        let f = self.field.clone();
        let d = self.dim;
        if place.kind != PlaceKind::TrivialPrime || place.h1_dim != 2 * d {
            return Err(Error::Precondition("new place must be a trivial prime for W".into()));
        }
        if r.nrows() != self.global.nrows() || r.ncols() != d || r_dual.nrows() != self.dual.nrows() || r_dual.ncols() != d {
            return Err(Error::Precondition("restriction data does not match the global images".into()));
        }
        if k.nrows() != d || k.ncols() != d {
            return Err(Error::Precondition("K must be square of size dim W".into()));
        }
        let total = self.total_dim();
        let zero_d = vec![f.zero(); d];
        let mut new_global = linalg::zeros(&f, 0, total + 2 * d);
        for i in 0..self.global.nrows() {
            new_global.push_row(&[self.global.row(i), r.row(i), &zero_d].concat());
        }
        let comp = linalg::complement(&f, &self.global);
        // n[i][j] = <comp_j, dual_i>
        let g = self.gram();
        let n = linalg::mat_mul(&f, &linalg::mat_mul(&f, &self.dual, &g.transpose()), &comp.transpose());
        for j in 0..d {
            let mut y = zero_d.clone();
            y[j] = f.one();
            let ky = linalg::mul_vec(&f, k, &y);
            let w = [ky, y].concat();
            let rhs: Vec<Elem> = (0..self.dual.nrows())
                .map(|i| {
                    let rd = [r_dual.row(i), &zero_d].concat();
                    f.neg(linalg::dot(&f, &w, &linalg::mul_vec(&f, &place.gram, &rd)))
                })
                .collect();
            let c = linalg::solve(&f, &n, &rhs).ok_or_else(|| Error::Model("pairing between V/A and A* is degenerate".into()))?;
            let s = linalg::vec_mul(&f, &c, &comp);
            new_global.push_row(&[s, w].concat());
        }
        self.places.push(place);
        self.global = new_global;
        let new_dual = linalg::annihilator(&f, &self.global, &self.gram());
        for i in 0..self.dual.nrows() {
            let lifted = [self.dual.row(i), r_dual.row(i), &zero_d].concat();
            if !linalg::in_span(&f, &new_dual, &lifted) {
                return Err(Error::Model("old dual classes do not extend to the new prime".into()));
            }
        }
        self.dual = new_dual;
        self.poitou_tate_check()
    }
}

fn block_gram(f: &GaloisField, places: &[Place]) -> Space {
    let total: usize = places.iter().map(|p| p.h1_dim).sum();
    let mut g = linalg::zeros(f, total, total);
    let mut o = 0;
    for p in places {
        for i in 0..p.h1_dim {
            for j in 0..p.h1_dim {
                g.set(o + i, o + j, p.gram.get(i, j));
            }
        }
        o += p.h1_dim;
    }
    g
}

fn expected_dim(places: &[Place], h0: usize, h0_dual: usize, arch: usize) -> Result<usize> {
    let mut s: i64 = places.iter().map(|p| p.h1_dim as i64 - p.h0 as i64).sum();
    s += h0 as i64 - h0_dual as i64 - arch as i64;
    let total: i64 = places.iter().map(|p| p.h1_dim as i64).sum();
    if s < 0 || s > total {
        return Err(Error::Infeasible(format!("ledger gives dim A = {s} outside [0, {total}]")));
    }
    Ok(s as usize)
}

/// Global image containing the prescribed classes, orthogonal to the
/// prescribed dual classes, of the ledger dimension; A* = Ann(A).
pub fn build_synthetic_model(
    field: &GaloisField,
    dim: usize,
    spec: ModelBuild,
    rng: &mut (impl Rng + ?Sized),
) -> Result<SyntheticGlobalModel> {
    let f = field.clone();
    for p in &spec.places {
        if p.gram.nrows() != p.h1_dim || p.gram.ncols() != p.h1_dim {
            return Err(Error::Precondition(format!("place {}: Gram matrix has the wrong size", p.name)));
        }
        if linalg::rank(&f, &p.gram) != p.h1_dim {
            return Err(Error::Precondition(format!("place {}: local pairing is not perfect", p.name)));
        }
        if p.kind == PlaceKind::TrivialPrime && p.h1_dim != 2 * dim {
            return Err(Error::Precondition(format!("place {}: trivial prime needs H^1 of dimension 2 dim W", p.name)));
        }
        if p.h0 > p.h1_dim || p.h0_dual > p.h1_dim {
            return Err(Error::Precondition(format!("place {}: H^0 exceeds H^1", p.name)));
        }
    }
    if let Some(s) = &spec.structure {
        if s.module.dim() != dim || s.dual_module.dim() != dim {
            return Err(Error::Precondition("module structure has the wrong dimension".into()));
        }
        if s.module.check_relations(&s.presentation).is_err() || s.dual_module.check_relations(&s.presentation).is_err() {
            return Err(Error::Precondition("module does not satisfy the group relations".into()));
        }
    }
    let total: usize = spec.places.iter().map(|p| p.h1_dim).sum();
    let target = expected_dim(&spec.places, spec.global_h0, spec.global_h0_dual, spec.archimedean_h0)?;
    for v in spec.prescribed.iter().chain(&spec.prescribed_dual) {
        if v.len() != total {
            return Err(Error::Precondition("prescribed class has the wrong length".into()));
        }
    }
    let g = block_gram(&f, &spec.places);
    let pres = linalg::row_basis(&f, &Space::from_rows(&spec.prescribed, total));
    let pres_dual = linalg::row_basis(&f, &Space::from_rows(&spec.prescribed_dual, total));
    let cross = linalg::mat_mul(&f, &linalg::mat_mul(&f, &pres, &g), &pres_dual.transpose());
    if !cross.data().iter().all(|x| f.is_zero(*x)) {
        return Err(Error::Infeasible("prescribed classes pair nontrivially with prescribed dual classes".into()));
    }
    if pres.nrows() > target || pres_dual.nrows() > total - target {
        return Err(Error::Infeasible(format!(
            "{} global and {} dual prescribed classes do not fit dims {target} and {}",
            pres.nrows(),
            pres_dual.nrows(),
            total - target
        )));
    }
    // vectors x with <x, q> = 0 for every prescribed dual class q
    let room = if pres_dual.nrows() == 0 {
        linalg::identity(&f, total)
    } else {
        linalg::nullspace(&f, &linalg::mat_mul(&f, &pres_dual, &g.transpose()))
    };
    let mut global = pres;
    let mut guard = 0;
    while global.nrows() < target {
        let c: Vec<Elem> = (0..room.nrows()).map(|_| f.random(rng)).collect();
        let v = linalg::vec_mul(&f, &c, &room);
        if !linalg::in_span(&f, &global, &v) {
            global.push_row(&v);
        }
        guard += 1;
        if guard > 100 * (target + 1) {
            return Err(Error::Infeasible("isotropic completion did not reach the ledger dimension".into()));
        }
    }
    let dual = linalg::annihilator(&f, &global, &g);
    let model = SyntheticGlobalModel {
        field: f,
        dim,
        places: spec.places,
        global_h0: spec.global_h0,
        global_h0_dual: spec.global_h0_dual,
        archimedean_h0: spec.archimedean_h0,
        global,
        dual,
        structure: spec.structure,
    };
    model.poitou_tate_check()?;
    Ok(model)
}

// ----- Selmer systems -----

#[derive(Clone, Debug)]
pub struct SelmerSystem {
    /// L_v as rows in V_v
    pub conditions: Vec<Space>,
    /// L_v^perp as rows in V_v*
    pub perps: Vec<Space>,
}

impl SelmerSystem {
    pub fn new(model: &SyntheticGlobalModel, conditions: Vec<Space>) -> Result<Self> {
        if conditions.len() != model.places.len() {
            return Err(Error::Precondition("one condition per place".into()));
        }
        let mut sys = SelmerSystem { conditions: vec![], perps: vec![] };
        for (p, l) in model.places.iter().zip(conditions) {
            sys.push_for(&model.field, p, l)?;
        }
        Ok(sys)
    }

    /// Conditions checked against declared dimensions (a ledger).
    pub fn with_declared(model: &SyntheticGlobalModel, conditions: Vec<Space>, declared: &[usize]) -> Result<Self> {
        if declared.len() != conditions.len() {
            return Err(Error::Precondition("one declared dimension per place".into()));
        }
        for ((p, l), &d) in model.places.iter().zip(&conditions).zip(declared) {
            if l.nrows() != d {
                return Err(Error::Model(format!("ledger mismatch at {}: dim L = {} but {d} declared", p.name, l.nrows())));
            }
        }
        SelmerSystem::new(model, conditions)
    }

    pub fn full(model: &SyntheticGlobalModel) -> Result<Self> {
        let c = model.places.iter().map(|p| linalg::identity(&model.field, p.h1_dim)).collect();
        SelmerSystem::new(model, c)
    }

    pub fn zero(model: &SyntheticGlobalModel) -> Result<Self> {
        let c = model.places.iter().map(|p| linalg::zeros(&model.field, 0, p.h1_dim)).collect();
        SelmerSystem::new(model, c)
    }

    /// Condition for the most recently added place.
    pub fn push(&mut self, model: &SyntheticGlobalModel, l: Space) -> Result<()> {
        let v = self.conditions.len();
        let p = model.places.get(v).ok_or_else(|| Error::Precondition("no place for the new condition".into()))?;
        self.push_for(&model.field, p, l)
    }

    fn push_for(&mut self, f: &GaloisField, p: &Place, l: Space) -> Result<()> {
        if l.ncols() != p.h1_dim {
            return Err(Error::Precondition(format!("condition at {} has the wrong width", p.name)));
        }
        let l = linalg::row_basis(f, &l);
        let perp = localconds::perp_space(f, &l, &p.gram);
        if perp.nrows() + l.nrows() != p.h1_dim {
            return Err(Error::Model(format!("annihilator at {} has the wrong dimension", p.name)));
        }
        if p.kind == PlaceKind::TrivialPrime {
            for a in l.row_vecs() {
                for b in perp.row_vecs() {
                    if !f.is_zero(localconds::duality_pairing(f, &a, &b)?) {
                        return Err(Error::Verification(format!("L^perp at {} is not orthogonal to L", p.name)));
                    }
                }
            }
        }
        self.conditions.push(l);
        self.perps.push(perp);
        Ok(())
    }

    fn embedded(model: &SyntheticGlobalModel, spaces: &[Space]) -> Space {
        let f = &model.field;
        let total = model.total_dim();
        let mut out = linalg::zeros(f, 0, total);
        for (v, s) in spaces.iter().enumerate() {
            let o = model.offset(v);
            for row in s.row_vecs() {
                let mut x = vec![f.zero(); total];
                x[o..o + row.len()].copy_from_slice(&row);
                out.push_row(&x);
            }
        }
        out
    }

    pub fn sum_conditions(&self, model: &SyntheticGlobalModel) -> Space {
        Self::embedded(model, &self.conditions)
    }
    pub fn sum_perps(&self, model: &SyntheticGlobalModel) -> Space {
        Self::embedded(model, &self.perps)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BalanceReport {
    pub selmer_dim: usize,
    pub dual_selmer_dim: usize,
    /// h1_L - h1_{L^perp}
    pub difference: i64,
    /// dim L_v - h0_v per place
    pub local_terms: Vec<i64>,
    pub archimedean_h0: usize,
    pub global_h0: usize,
    pub global_h0_dual: usize,
    /// sum of local terms - h0_arch + h0 - h0*
    pub ledger: i64,
    pub balanced: bool,
}

#[derive(Clone, Debug)]
pub struct SelmerResult {
    pub selmer: Space,
    pub dual: Space,
    pub report: BalanceReport,
}

pub fn selmer_compute(model: &SyntheticGlobalModel, system: &SelmerSystem) -> Result<SelmerResult> {
    let f = &model.field;
    if system.conditions.len() != model.places.len() {
        return Err(Error::Precondition("system and model have different places".into()));
    }
    let selmer = linalg::intersect(f, &model.global, &system.sum_conditions(model));
    let dual = linalg::intersect(f, &model.dual, &system.sum_perps(model));
    let local_terms: Vec<i64> =
        model.places.iter().zip(&system.conditions).map(|(p, l)| l.nrows() as i64 - p.h0 as i64).collect();
    let ledger =
        local_terms.iter().sum::<i64>() - model.archimedean_h0 as i64 + model.global_h0 as i64 - model.global_h0_dual as i64;
    let difference = selmer.nrows() as i64 - dual.nrows() as i64;
    if difference != ledger {
        return Err(Error::Model(format!("h1_L - h1_Lperp = {difference} but the ledger gives {ledger}")));
    }
    let report = BalanceReport {
        selmer_dim: selmer.nrows(),
        dual_selmer_dim: dual.nrows(),
        difference,
        local_terms,
        archimedean_h0: model.archimedean_h0,
        global_h0: model.global_h0,
        global_h0_dual: model.global_h0_dual,
        ledger,
        balanced: difference == 0,
    };
    Ok(SelmerResult { selmer, dual, report })
}

// ----- Chebotarev sampler -----

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrobeniusClass {
    pub label: String,
    pub size: u64,
}

#[derive(Clone, Debug)]
pub struct Draw {
    pub class: usize,
    pub coords: Vec<Elem>,
}

/// Frobenius draws from a finite quotient: a conjugacy class with probability
/// proportional to its size, plus independent uniform field coordinates for
/// the linearly disjoint factors.
#[derive(Clone, Debug)]
pub struct ChebotarevSampler {
    field: GaloisField,
    classes: Vec<FrobeniusClass>,
    cumulative: Vec<u64>,
    coords: usize,
    seed: u64,
    rng: ChaCha8Rng,
    counts: Vec<u64>,
    draws: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChiSquare {
    pub draws: u64,
    pub statistic: f64,
    pub dof: usize,
    pub critical_99: f64,
    /// largest |observed - expected| in standard deviations
    pub max_sigma: f64,
    pub pass: bool,
}

impl ChebotarevSampler {
    pub fn new(field: &GaloisField, classes: Vec<FrobeniusClass>, coords: usize, seed: u64) -> Result<Self> {
        if classes.is_empty() || classes.iter().any(|c| c.size == 0) {
            return Err(Error::Precondition("classes must be nonempty with positive sizes".into()));
        }
        let mut cumulative = Vec::with_capacity(classes.len());
        let mut acc = 0u64;
        for c in &classes {
            acc += c.size;
            cumulative.push(acc);
        }
        let n = classes.len();
        Ok(ChebotarevSampler {
            field: field.clone(),
            classes,
            cumulative,
            coords,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            counts: vec![0; n],
            draws: 0,
        })
    }

    /// Only field coordinates (a single trivial class).
    pub fn vectors(field: &GaloisField, coords: usize, seed: u64) -> Self {
        Self::new(field, vec![FrobeniusClass { label: "1A".into(), size: 1 }], coords, seed).expect("one class")
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn draws(&self) -> u64 {
        self.draws
    }
    pub fn classes(&self) -> &[FrobeniusClass] {
        &self.classes
    }
    pub fn group_order(&self) -> u64 {
        *self.cumulative.last().expect("nonempty")
    }

    pub fn draw(&mut self) -> Draw {
        let x = self.rng.gen_range(0..self.group_order());
        let class = self.cumulative.partition_point(|&c| c <= x);
        let coords = (0..self.coords).map(|_| self.field.random(&mut self.rng)).collect();
        self.counts[class] += 1;
        self.draws += 1;
        Draw { class, coords }
    }

    /// Empirical class frequencies so far.
    pub fn frequencies(&self) -> Vec<(String, u64)> {
        self.classes.iter().zip(&self.counts).map(|(c, &n)| (c.label.clone(), n)).collect()
    }

    fn exhausted(&self, what: &str, cap: u64) -> Error {
        Error::Exhausted(format!("{what}: no draw in {cap} (seed {}); class frequencies {:?}", self.seed, self.frequencies()))
    }

    /// First draw satisfying `pred`, with the number of draws used.
    pub fn draw_where(&mut self, cap: u64, what: &str, mut pred: impl FnMut(&Draw) -> bool) -> Result<(Draw, u64)> {
        for i in 1..=cap {
            let d = self.draw();
            if pred(&d) {
                return Ok((d, i));
            }
        }
        Err(self.exhausted(what, cap))
    }

    /// Size of the finite sample space.
    pub fn space_size(&self) -> Option<u64> {
        let mut n = self.classes.len() as u64;
        for _ in 0..self.coords {
            n = n.checked_mul(self.field.size())?;
        }
        Some(n)
    }

    /// First point of the sample space (classes, then coordinates in the
    /// field enumeration) satisfying `pred`; complete for small spaces.
    pub fn exhaustive_first(&self, limit: u64, mut pred: impl FnMut(&Draw) -> bool) -> Result<Option<(Draw, u64)>> {
        let n = self
            .space_size()
            .filter(|&n| n <= limit)
            .ok_or_else(|| Error::Unsupported(format!("sample space larger than {limit}; use seeded draws")))?;
        let q = self.field.size();
        for idx in 0..n {
            let mut t = idx;
            let mut coords = Vec::with_capacity(self.coords);
            for _ in 0..self.coords {
                coords.push(self.field.nth(t % q));
                t /= q;
            }
            let d = Draw { class: t as usize, coords };
            if pred(&d) {
                return Ok(Some((d, idx + 1)));
            }
        }
        Ok(None)
    }

    /// Chi-square test of the class distribution over `n` fresh draws at 99%.
    pub fn chi_square(&mut self, n: u64) -> ChiSquare {
        let mut counts = vec![0u64; self.classes.len()];
        for _ in 0..n {
            counts[self.draw().class] += 1;
        }
        let total = self.group_order() as f64;
        let mut stat = 0.0;
        let mut max_sigma: f64 = 0.0;
        for (c, &o) in self.classes.iter().zip(&counts) {
            let pr = c.size as f64 / total;
            let e = n as f64 * pr;
            stat += (o as f64 - e).powi(2) / e;
            let sd = (n as f64 * pr * (1.0 - pr)).sqrt();
            if sd > 0.0 {
                max_sigma = max_sigma.max((o as f64 - e).abs() / sd);
            }
        }
        let dof = self.classes.len() - 1;
        let critical = chi_square_quantile_99(dof);
        ChiSquare { draws: n, statistic: stat, dof, critical_99: critical, max_sigma, pass: stat <= critical && max_sigma <= 5.0 }
    }
}

/// Wilson-Hilferty approximation of the 0.99 quantile of chi-square.
fn chi_square_quantile_99(dof: usize) -> f64 {
    if dof == 0 {
        return 0.0;
    }
    let k = dof as f64;
    let z = 2.326_347_874_040_841;
    let a = 2.0 / (9.0 * k);
    k * (1.0 - a + z * a.sqrt()).powi(3)
}

// ----- the equivariant map eta -----

/// Endomorphism of W acting by c_i on the isotypic piece W_i for i in the
/// chosen set and by zero on every other piece. Acts on column vectors.
#[derive(Clone, Debug)]
pub struct EtaMap {
    pub field: GaloisField,
    pub matrix: Space,
    /// (constituent index, scalar)
    pub scalars: Vec<(usize, Elem)>,
    /// constituents sent to zero
    pub killed: Vec<usize>,
}

impl EtaMap {
    pub fn is_zero(&self) -> bool {
        self.matrix.data().iter().all(|x| self.field.is_zero(*x))
    }
    pub fn apply(&self, v: &[Elem]) -> Vec<Elem> {
        linalg::mul_vec(&self.field, &self.matrix, v)
    }
    /// c times the identity.
    pub fn scalar(field: &GaloisField, dim: usize, c: Elem) -> Self {
        EtaMap {
            field: field.clone(),
            matrix: linalg::mat_scale(field, &linalg::identity(field, dim), c),
            scalars: vec![],
            killed: vec![],
        }
    }
    /// Arbitrary matrix, without an equivariance claim.
    pub fn from_matrix(field: &GaloisField, matrix: Space) -> Self {
        EtaMap { field: field.clone(), matrix, scalars: vec![], killed: vec![] }
    }
}

pub fn eta_build(module: &MatrixModule, dec: &Decomposition, scalars: &[(usize, Elem)]) -> Result<EtaMap> {
    let f = module.field().clone();
    let n = module.dim();
    let chosen: Vec<usize> = scalars.iter().map(|s| s.0).collect();
    let killed: Vec<usize> = (0..dec.constituents.len()).filter(|i| !chosen.contains(i)).collect();
    if scalars.is_empty() {
        return Ok(EtaMap { field: f.clone(), matrix: linalg::zeros(&f, n, n), scalars: vec![], killed });
    }
    if !dec.semisimple {
        return Err(Error::Precondition("isotypic projectors need a semisimple module".into()));
    }
    for &(i, _) in scalars {
        let c = dec.constituents.get(i).ok_or_else(|| Error::Precondition(format!("no constituent {i}")))?;
        if c.multiplicity != 1 {
            return Err(Error::Precondition(format!("constituent {i} has multiplicity {} > 1", c.multiplicity)));
        }
        if c.irreducible.endo_degree != 1 {
            return Err(Error::Precondition(format!(
                "constituent {i} has endomorphism field of degree {}",
                c.irreducible.endo_degree
            )));
        }
    }
    let basis = dec.summands.iter().fold(linalg::zeros(&f, 0, n), |acc, s| acc.vstack(s));
    let bt = basis.transpose();
    let bt_inv = linalg::inverse(&f, &bt).ok_or_else(|| Error::Verification("summands do not form a basis".into()))?;
    let mut diag = linalg::zeros(&f, n, n);
    let mut starts = Vec::new();
    let mut o = 0;
    for s in &dec.summands {
        starts.push(o);
        o += s.nrows();
    }
    for &(i, c) in scalars {
        for &k in &dec.constituents[i].summand_indices {
            for j in 0..dec.summands[k].nrows() {
                diag.set(starts[k] + j, starts[k] + j, c);
            }
        }
    }
    let matrix = linalg::mat_mul(&f, &linalg::mat_mul(&f, &bt, &diag), &bt_inv);
    for g in module.gens() {
        if linalg::mat_mul(&f, &matrix, g) != linalg::mat_mul(&f, g, &matrix) {
            return Err(Error::Verification("eta is not equivariant".into()));
        }
    }
    for (ci, c) in dec.constituents.iter().enumerate() {
        let scale = scalars.iter().find(|s| s.0 == ci).map(|s| s.1).unwrap_or(f.zero());
        for &k in &c.summand_indices {
            for v in dec.summands[k].row_vecs() {
                if linalg::mul_vec(&f, &matrix, &v) != linalg::vec_scale(&f, &v, scale) {
                    return Err(Error::Verification(format!("eta does not act by its scalar on constituent {ci}")));
                }
            }
        }
    }
    Ok(EtaMap { field: f, matrix, scalars: scalars.to_vec(), killed })
}

// ----- searches -----

/// Product of root elements u_beta(x) over the residue field.
pub type RootWord = Vec<(usize, Elem)>;

fn residue_chevalley(ch: &Chevalley) -> Result<Chevalley> {
    Ok(ch.with_ring(ch.ring().reduced(1)?))
}

fn word_element(ch1: &Chevalley, word: &RootWord) -> GroupElement {
    word.iter().fold(ch1.identity(), |acc, (b, x)| ch1.mul(&acc, &ch1.u_alpha(*b, x)))
}

fn random_word(ch1: &Chevalley, f: &GaloisField, rng: &mut impl Rng) -> RootWord {
    let d = ch1.datum();
    let len = 2 * d.rank() + 2;
    (0..len)
        .map(|_| {
            let b = rng.gen_range(0..d.num_roots());
            let mut x = f.random(rng);
            while f.is_zero(x) {
                x = f.random(rng);
            }
            (b, x)
        })
        .collect()
}

/// beta(h) for h in the Cartan, from the h-coordinates of a Lie vector.
fn root_on_cartan(ch: &Chevalley, f: &GaloisField, h: &[Elem], beta: usize) -> Elem {
    let d = ch.datum();
    let b = ch.basis();
    (0..d.rank()).fold(f.zero(), |s, k| f.add(s, f.mul(h[b.h_index(k)], f.from_int(d.pairing_simple(beta, k)))))
}

fn random_cartan(ch: &Chevalley, f: &GaloisField, rng: &mut impl Rng) -> Vec<Elem> {
    let mut h = vec![f.zero(); ch.dim()];
    for k in 0..ch.datum().rank() {
        h[ch.basis().h_index(k)] = f.random(rng);
    }
    h
}

fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ shard.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Run `attempt` over seed shards in parallel; the hit of the lowest shard
/// wins, so the outcome does not depend on scheduling.
fn sharded<T: Send>(
    seed: u64,
    budget: usize,
    attempt: impl Fn(&mut ChaCha8Rng, u64, usize) -> Option<T> + Sync,
) -> Option<(u64, usize, T)> {
    let per = budget.div_ceil(SHARDS as usize).max(1);
    let results: Vec<Option<(u64, usize, T)>> = (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let mut rng = shard_rng(seed, s);
            (0..per).find_map(|i| attempt(&mut rng, s, i).map(|t| (s, i + 1, t)))
        })
        .collect();
    results.into_iter().flatten().next()
}

#[derive(Clone, Debug)]
pub struct LarsenWitness {
    pub conjugator: RootWord,
    pub adjoint: Space,
    pub cartan_element: Vec<Elem>,
    /// x = Ad(g) h in the conjugate Cartan
    pub x: Vec<Elem>,
    /// B(x, eta x)
    pub value: Elem,
    pub shard: u64,
    pub tries: usize,
}

/// Conjugate Cartan t_g and x in it with B(x, eta x) != 0.
pub fn larsen_search(eta: &EtaMap, ch: &Chevalley, seed: u64, budget: usize) -> Result<LarsenWitness> {
    let f = eta.field.clone();
    if eta.matrix.nrows() != ch.dim() {
        return Err(Error::Precondition("eta does not act on the Lie algebra".into()));
    }
    if eta.is_zero() {
        return Err(Error::Precondition("eta = 0 has no Cartan witness".into()));
    }
    let ch1 = residue_chevalley(ch)?;
    let form = crate::ringmat::reduce(ch.ring(), &ch.form_matrix(), ch1.ring());
    let hit = sharded(seed, budget, |rng, shard, i| {
        let word = if shard == 0 && i == 0 { vec![] } else { random_word(&ch1, &f, rng) };
        let adj = word_element(&ch1, &word).mat;
        let h = random_cartan(&ch1, &f, rng);
        let x = linalg::mul_vec(&f, &adj, &h);
        let ex = eta.apply(&x);
        let value = linalg::dot(&f, &x, &linalg::mul_vec(&f, &form, &ex));
        (!f.is_zero(value)).then(|| LarsenWitness {
            conjugator: word,
            adjoint: adj,
            cartan_element: h,
            x,
            value,
            shard: 0,
            tries: 0,
        })
    });
    let (shard, tries, mut w) =
        hit.ok_or_else(|| Error::Exhausted(format!("no Cartan witness in {budget} tries (seed {seed})")))?;
    // independent recheck
    let ex = eta.apply(&w.x);
    if f.is_zero(linalg::dot(&f, &w.x, &linalg::mul_vec(&f, &form, &ex))) {
        return Err(Error::Verification("witness fails on recheck".into()));
    }
    w.shard = shard;
    w.tries = tries;
    Ok(w)
}

#[derive(Clone, Debug)]
pub struct SplitcaseRequest<'a> {
    /// global class in V (in the span of A)
    pub phi: &'a [Elem],
    /// dual global class in V* (in the span of A*)
    pub psi: &'a [Elem],
    /// when present, the Frobenius is conditioned on phi(sigma_q) = eta(t)
    pub eta: Option<&'a EtaMap>,
    pub seed: u64,
    pub budget: usize,
}

#[derive(Clone, Debug)]
pub struct SplitcaseWitness {
    pub conjugator: RootWord,
    pub alpha: usize,
    /// t in the standard Cartan with alpha(t) = c
    pub cartan_element: Vec<Elem>,
    pub c: Elem,
    pub q: u64,
    pub q_is_prime: bool,
    /// simple-root values of rho_2(sigma_q) mod p^2 in the standard frame
    pub torus2: Vec<Elem>,
    /// sigma-values at q of the basis of A, standard frame
    pub restriction: Space,
    /// sigma-values at q of the basis of A*, standard frame
    pub dual_restriction: Space,
    /// the sampled class: values of phi and psi at sigma_q, standard frame
    pub phi_value: Vec<Elem>,
    pub psi_value: Vec<Elem>,
    pub checks: [bool; 3],
    pub shard: u64,
    pub tries: usize,
    pub seed: u64,
}

fn combine(f: &GaloisField, coords: &[Elem], rows: &Space) -> Vec<Elem> {
    linalg::vec_mul(f, coords, rows)
}

fn first_nonzero(f: &GaloisField, v: &[Elem]) -> Option<usize> {
    v.iter().position(|x| !f.is_zero(*x))
}

/// Search for an auxiliary trivial prime q, a frame g, a root alpha and
/// t with alpha(t) = (q - 1)/p such that phi(sigma_q) leaves the unramified
/// part of L^alpha and psi(sigma_q) pairs nontrivially with g_alpha.
pub fn splitcase_search(model: &SyntheticGlobalModel, ch: &Chevalley, req: &SplitcaseRequest) -> Result<SplitcaseWitness> {
    let f = model.field.clone();
    let dim = model.dim;
    if ch.dim() != dim {
        return Err(Error::Precondition("model module is not the Lie algebra of the group".into()));
    }
    if f.degree() != 1 {
        return Err(Error::Unsupported("auxiliary primes need a prime residue field".into()));
    }
    let p = ch.p();
    if linalg::is_zero_vec(&f, req.phi) || linalg::is_zero_vec(&f, req.psi) {
        return Err(Error::Precondition("phi and psi must be nonzero".into()));
    }
    let phi_c = model.global_coordinates(req.phi).ok_or_else(|| Error::Precondition("phi is not a global class".into()))?;
    let psi_c = model.dual_coordinates(req.psi).ok_or_else(|| Error::Precondition("psi is not a dual global class".into()))?;
    if let Some(e) = req.eta {
        if e.matrix.nrows() != dim {
            return Err(Error::Precondition("eta has the wrong size".into()));
        }
    }
    let ch1 = residue_chevalley(ch)?;
    let d = ch1.datum().clone();
    let b = ch1.basis().clone();
    let na = model.global.nrows();
    let nd = model.dual.nrows();
    let pivot = first_nonzero(&f, &phi_c).expect("phi nonzero");
    let hit = sharded(req.seed, req.budget, |rng, shard, _| {
        let word = random_word(&ch1, &f, rng);
        let g = word_element(&ch1, &word);
        let adj = g.mat.clone();
        let adj_inv = ch1.inv(&g).ok()?.mat;
        let alpha = rng.gen_range(0..d.num_roots());
        let c = f.from_int(rng.gen_range(1..p as i64));
        // t with alpha(t) = c, shifted along the coroot of alpha
        let mut h = random_cartan(&ch1, &f, rng);
        let xa = ch1.basis_vec(b.root_index(alpha));
        let xm = ch1.basis_vec(b.root_index(d.neg(alpha)));
        let coroot = ch1.bracket(&xa, &xm);
        let two = root_on_cartan(&ch1, &f, &coroot, alpha);
        let shift = f.div(f.sub(c, root_on_cartan(&ch1, &f, &h, alpha)), two);
        h = linalg::vec_add(&f, &h, &linalg::vec_scale(&f, &coroot, shift));
        let phis = phi_alpha(&d, &b, alpha).ok()?;
        if phis.iter().any(|&be| f.is_zero(root_on_cartan(&ch1, &f, &h, be))) {
            return None;
        }
        let mut sampler = ChebotarevSampler::vectors(&f, (na + nd) * dim, rng.gen());
        let draw = sampler.draw();
        let mut r = Space::from_flat(na, dim, draw.coords[..na * dim].to_vec());
        let rd = Space::from_flat(nd, dim, draw.coords[na * dim..].to_vec());
        if let Some(e) = req.eta {
            // condition phi(sigma_q) = eta(Ad(g) t)
            let target = e.apply(&linalg::mul_vec(&f, &adj, &h));
            let mut rest = target.clone();
            for i in (0..na).filter(|&i| i != pivot) {
                rest = linalg::vec_sub(&f, &rest, &linalg::vec_scale(&f, r.row(i), phi_c[i]));
            }
            let row = linalg::vec_scale(&f, &rest, f.inv(phi_c[pivot]));
            r.row_mut(pivot).copy_from_slice(&row);
        }
        let phi_q = combine(&f, &phi_c, &r);
        let psi_q = combine(&f, &psi_c, &rd);
        let back = linalg::mul_vec(&f, &adj_inv, &phi_q);
        let check2 = !f.is_zero(root_on_cartan(&ch1, &f, &back, alpha));
        let xa_g = linalg::mul_vec(&f, &adj, &xa);
        let check3 = !f.is_zero(linalg::dot(&f, &psi_q, &xa_g));
        if !(check2 && check3) {
            return None;
        }
        let mut rs = linalg::zeros(&f, 0, dim);
        for i in 0..na {
            rs.push_row(&linalg::mul_vec(&f, &adj_inv, r.row(i)));
        }
        let mut rds = linalg::zeros(&f, 0, dim);
        for j in 0..nd {
            rds.push_row(&linalg::vec_mul(&f, rd.row(j), &adj));
        }
        let _ = shard;
        Some((word, alpha, h, c, rs, rds))
    });
    let (shard, tries, (word, alpha, h, c, rs, rds)) =
        hit.ok_or_else(|| Error::Exhausted(format!("no auxiliary prime witness in {} draws (seed {})", req.budget, req.seed)))?;
    let cval = f.ring().signed_constant(&c).rem_euclid(p as i64) as u64;
    let (q, q_is_prime) = pick_q(p, cval);
    let ring2 = CoeffRing::new(p, 2, 1)?;
    let torus2: Vec<Elem> = (0..d.rank())
        .map(|i| {
            let v = root_on_cartan(&ch1, &f, &h, d.simple(i));
            ring2.add(&ring2.one(), &ring2.mul_p_pow(&ring2.lift_from(&v, f.ring()), 1))
        })
        .collect();
    let w = SplitcaseWitness {
        phi_value: combine(&f, &phi_c, &rs),
        psi_value: combine(&f, &psi_c, &rds),
        conjugator: word,
        alpha,
        cartan_element: h,
        c,
        q,
        q_is_prime,
        torus2,
        restriction: rs,
        dual_restriction: rds,
        checks: [false; 3],
        shard,
        tries,
        seed: req.seed,
    };
    let checks = verify_splitcase(ch, &w, req.eta)?;
    if !checks.iter().all(|&x| x) {
        return Err(Error::Verification(format!("witness fails on recheck: {checks:?}")));
    }
    Ok(SplitcaseWitness { checks, ..w })
}

fn pick_q(p: u64, c: u64) -> (u64, bool) {
    let base = 1 + c * p;
    for k in 0..100_000u64 {
        let q = base + k * p * p;
        if is_prime(q) {
            return (q, true);
        }
    }
    (base, false)
}

/// The three conditions on a witness, in the standard frame.
pub fn verify_splitcase(ch: &Chevalley, w: &SplitcaseWitness, eta: Option<&EtaMap>) -> Result<[bool; 3]> {
    let ch1 = residue_chevalley(ch)?;
    let f = GaloisField::from_ring(ch1.ring());
    let d = ch1.datum();
    let b = ch1.basis();
    let p = ch.p();
    let ring2 = CoeffRing::new(p, 2, 1)?;
    let c2 = ch.with_ring(ring2.clone());
    // (1) torus-valued mod p^2, alpha value q, other values not 1 on Phi^alpha
    let mut one = w.q % p == 1 && w.q % (p * p) != 1;
    one &= c2.root_value(&w.torus2, w.alpha)? == ring2.from_u64(w.q);
    for be in phi_alpha(d, b, w.alpha)? {
        one &= !ring2.is_one(&c2.root_value(&w.torus2, be)?);
        one &= !f.is_zero(root_on_cartan(&ch1, &f, &w.cartan_element, be));
    }
    one &= root_on_cartan(&ch1, &f, &w.cartan_element, w.alpha) == w.c;
    // (2) the Cartan part of phi(sigma_q) is not killed by alpha
    let mut two = !f.is_zero(root_on_cartan(&ch1, &f, &w.phi_value, w.alpha));
    if let Some(e) = eta {
        let g = word_element(&ch1, &w.conjugator);
        let adj_inv = ch1.inv(&g)?.mat;
        let expect = linalg::mul_vec(&f, &adj_inv, &e.apply(&linalg::mul_vec(&f, &g.mat, &w.cartan_element)));
        two &= expect == w.phi_value;
    }
    // (3) psi(sigma_q) pairs nontrivially with X_alpha
    let three = !f.is_zero(w.psi_value[b.root_index(w.alpha)]);
    Ok([one, two, three])
}

/// Adjoin the witness prime with its unramified L^alpha.
pub fn install_splitcase(
    model: &mut SyntheticGlobalModel,
    system: &mut SelmerSystem,
    ch: &Chevalley,
    w: &SplitcaseWitness,
    rng: &mut (impl Rng + ?Sized),
) -> Result<()> {
    let f = model.field.clone();
    let tame = TameLocalModel::new(ch.clone(), w.q)?;
    let spaces = tame.condition_spaces(w.alpha, ExtraKind::Unr, None)?;
    let name = format!("q{}", w.q);
    let mut place = Place::trivial(&name, &f, model.dim, w.q, Some(tame));
    place.lift = Some(PlaceLift::Trivial { alpha: w.alpha, torus2: w.torus2.clone() });
    let k = linalg::random_matrix(&f, model.dim, model.dim, rng);
    model.add_trivial_prime(place, &w.restriction, &w.dual_restriction, &k)?;
    system.push(model, spaces.l)
}

#[derive(Clone, Debug, Serialize)]
pub struct AnnihilationStep {
    pub before: (usize, usize),
    pub after: (usize, usize),
    pub q: u64,
    pub alpha: usize,
    pub tries: usize,
    pub seed: u64,
}

/// Add auxiliary primes until the dual Selmer group vanishes; each step must
/// keep the balance and strictly shrink the dual side.
pub fn annihilation_loop(
    model: &mut SyntheticGlobalModel,
    system: &mut SelmerSystem,
    ch: &Chevalley,
    eta: Option<&EtaMap>,
    seed: u64,
    budget: usize,
) -> Result<Vec<AnnihilationStep>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut res = selmer_compute(model, system)?;
    if !res.report.balanced {
        return Err(Error::Precondition(format!("start is not balanced: difference {}", res.report.difference)));
    }
    let mut steps = Vec::new();
    while res.dual.nrows() > 0 {
        let before = (res.selmer.nrows(), res.dual.nrows());
        let step_seed = seed.wrapping_add(1 + steps.len() as u64);
        let phi = res.selmer.row(0).to_vec();
        let psi = res.dual.row(0).to_vec();
        let req = SplitcaseRequest { phi: &phi, psi: &psi, eta, seed: step_seed, budget };
        let w = splitcase_search(model, ch, &req)?;
        install_splitcase(model, system, ch, &w, &mut rng)?;
        res = selmer_compute(model, system)?;
        let after = (res.selmer.nrows(), res.dual.nrows());
        if after.1 >= before.1 {
            return Err(Error::Verification(format!("dual Selmer did not shrink: {before:?} -> {after:?}")));
        }
        if before.0 as i64 - after.0 as i64 != before.1 as i64 - after.1 as i64 {
            return Err(Error::Model(format!("unbalanced step {before:?} -> {after:?}")));
        }
        steps.push(AnnihilationStep { before, after, q: w.q, alpha: w.alpha, tries: w.tries, seed: step_seed });
    }
    Ok(steps)
}

// ----- doubling -----

#[derive(Clone, Debug)]
pub struct DoublingOptions {
    pub cap: u64,
    /// enumerate the finite sample space instead of drawing
    pub exhaustive: bool,
    pub seed: u64,
    /// prescribed Frobenius sums at the first and second families; zero when None
    pub targets: Option<(Vec<Vec<Elem>>, Vec<Vec<Elem>>)>,
}

impl Default for DoublingOptions {
    fn default() -> Self {
        DoublingOptions { cap: DEFAULT_CAP, exhaustive: false, seed: 0, targets: None }
    }
}

#[derive(Clone, Debug)]
pub struct AuxPrime {
    /// sigma-values of the basis of A* at the prime
    pub dual_values: Space,
    /// sigma-values of the basis of A at the prime
    pub values: Space,
    /// tau-direction of the new class
    pub z: Vec<Elem>,
    /// restriction to the places of the model of the new class
    pub restriction: Vec<Elem>,
    pub draws: u64,
}

#[derive(Clone, Debug)]
pub struct DoublingResult {
    pub first: Vec<AuxPrime>,
    pub second: Vec<AuxPrime>,
    /// coordinates of h_old in the basis of A
    pub old_coordinates: Vec<Elem>,
    /// h restricted to the places of the model; equals z_T
    pub restriction: Vec<Elem>,
    /// sums over n of h^(v'_n)(sigma_{v_m}), one per m
    pub sums_first: Vec<Vec<Elem>>,
    /// sums over n of h^(v_n)(sigma_{v'_m}), one per m
    pub sums_second: Vec<Vec<Elem>>,
    /// sigma- and tau-values of h at v_1.., v'_1..
    pub aux_sigma: Vec<Vec<Elem>>,
    pub aux_tau: Vec<Vec<Elem>>,
    pub draws: u64,
    pub verified: bool,
}

/// Find auxiliary prime pairs and a class h = h_old - sum h^(v_n) + 2 sum h^(v'_n)
/// whose restriction to the model's places equals z_T.
pub fn doubling_solve(model: &SyntheticGlobalModel, z_t: &[Elem], opts: &DoublingOptions) -> Result<DoublingResult> {
    let f = model.field.clone();
    let dim = model.dim;
    let total = model.total_dim();
    if f.characteristic() == 2 {
        return Err(Error::Precondition("doubling needs 2 invertible".into()));
    }
    if z_t.len() != total {
        return Err(Error::Precondition("target has the wrong length".into()));
    }
    let na = model.global.nrows();
    let nd = model.dual.nrows();
    let comp = linalg::complement(&f, &model.global);
    let full = model.global.vstack(&comp);
    let coords =
        linalg::coordinates(&f, &full, z_t).ok_or_else(|| Error::Model("global image and complement do not span V".into()))?;
    let y = &coords[na..];
    let deficient: Vec<usize> = (0..y.len()).filter(|&i| !f.is_zero(y[i])).collect();
    let n = deficient.len();
    let mut draws = 0u64;
    let mut first = Vec::new();
    let mut second = Vec::new();
    let seed_base = opts.seed;
    for (slot, &i) in deficient.iter().enumerate() {
        // functional a* -> <y_i Y_i, a*> that the new class must realize
        let target_dir = linalg::vec_scale(&f, comp.row(i), y[i]);
        let functional: Vec<Elem> = (0..nd).map(|j| model.pairing(&target_dir, model.dual.row(j))).collect();
        let mut sampler = ChebotarevSampler::vectors(&f, (nd + na) * dim, seed_base.wrapping_add(slot as u64 * 2 + 1));
        let solve_z = |dr: &Draw| -> Option<Vec<Elem>> {
            // -sum_k rd[j][k] z_k = functional[j]
            let rd = Space::from_flat(nd, dim, dr.coords[..nd * dim].to_vec());
            let neg: Vec<Elem> = functional.iter().map(|x| f.neg(*x)).collect();
            linalg::solve(&f, &rd, &neg).filter(|z| !linalg::is_zero_vec(&f, z))
        };
        let (draw, used) = if opts.exhaustive {
            sampler
                .exhaustive_first(10_000_000, |d| solve_z(d).is_some())?
                .ok_or_else(|| Error::Infeasible("no point of the sample space realizes the cokernel direction".into()))?
        } else {
            sampler.draw_where(opts.cap, "auxiliary prime for a cokernel direction", |d| solve_z(d).is_some())?
        };
        draws += used;
        let z = solve_z(&draw).expect("checked");
        let rd = Space::from_flat(nd, dim, draw.coords[..nd * dim].to_vec());
        let rv = Space::from_flat(na, dim, draw.coords[nd * dim..].to_vec());
        let restriction = aux_restriction(model, &comp, &rd, &z)?;
        if restriction != target_dir {
            return Err(Error::Verification("new class does not realize its cokernel direction".into()));
        }
        first.push(AuxPrime {
            dual_values: rd.clone(),
            values: rv.clone(),
            z: z.clone(),
            restriction: restriction.clone(),
            draws: used,
        });
        // v' has the same Frobenius on the fields cut out by A*, and an
        // independent one on those cut out by A
        let mut sampler2 = ChebotarevSampler::vectors(&f, na * dim, seed_base.wrapping_add(slot as u64 * 2 + 2));
        let d2 = sampler2.draw();
        draws += 1;
        let rv2 = Space::from_flat(na, dim, d2.coords);
        let restriction2 = aux_restriction(model, &comp, &rd, &z)?;
        second.push(AuxPrime { dual_values: rd, values: rv2, z, restriction: restriction2, draws: 1 });
    }
    // Frobenius values of the new classes at the other auxiliary primes,
    // conditioned on the prescribed sums
    let zero = vec![vec![f.zero(); dim]; n];
    let (t1, t2) = opts.targets.clone().unwrap_or((zero.clone(), zero));
    if t1.len() != n || t2.len() != n {
        return Err(Error::Precondition(format!("targets must have one entry per pair ({n})")));
    }
    // cross[a][b]: h^(second a)(sigma_{first b}); cross2[a][b]: h^(first a)(sigma_{second b})
    let mut cross = vec![vec![vec![f.zero(); dim]; n]; n];
    let mut cross2 = vec![vec![vec![f.zero(); dim]; n]; n];
    for m in 0..n {
        for (which, target) in [(0usize, &t1[m]), (1usize, &t2[m])] {
            let mut sampler = ChebotarevSampler::vectors(&f, n * dim, seed_base.wrapping_add(1000 + 2 * m as u64 + which as u64));
            let sum_of = |d: &Draw| -> Vec<Elem> {
                (0..n).fold(vec![f.zero(); dim], |acc, a| linalg::vec_add(&f, &acc, &d.coords[a * dim..(a + 1) * dim]))
            };
            let (d, used) = if opts.exhaustive {
                sampler
                    .exhaustive_first(10_000_000, |d| &sum_of(d) == target)?
                    .ok_or_else(|| Error::Infeasible("prescribed Frobenius sum is not attained".into()))?
            } else {
                sampler.draw_where(opts.cap, "prescribed Frobenius sum", |d| &sum_of(d) == target)?
            };
            draws += used;
            for a in 0..n {
                let v = d.coords[a * dim..(a + 1) * dim].to_vec();
                if which == 0 {
                    cross[a][m] = v;
                } else {
                    cross2[a][m] = v;
                }
            }
        }
    }
    // h_old absorbs the part of z_T inside A
    let mut aux_sum = vec![f.zero(); total];
    for a in &first {
        aux_sum = linalg::vec_add(&f, &aux_sum, &a.restriction);
    }
    let old = linalg::vec_sub(&f, z_t, &aux_sum);
    let old_coordinates =
        model.global_coordinates(&old).ok_or_else(|| Error::Verification("h_old is not a global class".into()))?;
    let two = f.from_int(2);
    let mut restriction = linalg::vec_mul(&f, &old_coordinates, &model.global);
    for (a, b) in first.iter().zip(&second) {
        restriction = linalg::vec_sub(&f, &restriction, &a.restriction);
        restriction = linalg::vec_add(&f, &restriction, &linalg::vec_scale(&f, &b.restriction, two));
    }
    let verified = restriction.as_slice() == z_t;
    if !verified {
        return Err(Error::Verification("h does not restrict to z_T".into()));
    }
    let sums_first: Vec<Vec<Elem>> =
        (0..n).map(|m| (0..n).fold(vec![f.zero(); dim], |acc, a| linalg::vec_add(&f, &acc, &cross[a][m]))).collect();
    let sums_second: Vec<Vec<Elem>> =
        (0..n).map(|m| (0..n).fold(vec![f.zero(); dim], |acc, a| linalg::vec_add(&f, &acc, &cross2[a][m]))).collect();
    if sums_first != t1 || sums_second != t2 {
        return Err(Error::Verification("Frobenius sums differ from their targets".into()));
    }
    // local values of h at the auxiliary primes
    let mut aux_sigma = Vec::new();
    let mut aux_tau = Vec::new();
    for m in 0..n {
        let s = linalg::vec_mul(&f, &old_coordinates, &first[m].values);
        let s = linalg::vec_add(&f, &s, &linalg::vec_scale(&f, &sums_first[m], two));
        aux_sigma.push(s);
        aux_tau.push(linalg::vec_scale(&f, &first[m].z, f.neg(f.one())));
    }
    for m in 0..n {
        let mut s = linalg::vec_mul(&f, &old_coordinates, &second[m].values);
        s = linalg::vec_sub(&f, &s, &sums_second[m]);
        aux_sigma.push(s);
        aux_tau.push(linalg::vec_scale(&f, &second[m].z, two));
    }
    Ok(DoublingResult {
        first,
        second,
        old_coordinates,
        restriction,
        sums_first,
        sums_second,
        aux_sigma,
        aux_tau,
        draws,
        verified,
    })
}

/// The component s in the complement of A with
/// <s, a*_j> = -<(., z), (r*(a*_j), 0)>_v = -z . r*(a*_j) for every j.
fn aux_restriction(model: &SyntheticGlobalModel, comp: &Space, rd: &Space, z: &[Elem]) -> Result<Vec<Elem>> {
    let f = &model.field;
    let g = model.gram();
    let n = linalg::mat_mul(f, &linalg::mat_mul(f, &model.dual, &g.transpose()), &comp.transpose());
    let rhs: Vec<Elem> = (0..rd.nrows()).map(|j| f.neg(linalg::dot(f, z, rd.row(j)))).collect();
    let c = linalg::solve(f, &n, &rhs).ok_or_else(|| Error::Model("pairing between V/A and A* is degenerate".into()))?;
    Ok(linalg::vec_mul(f, &c, comp))
}

// ----- lifting driver -----

#[derive(Clone, Debug, Serialize)]
pub struct PlaceLevel {
    pub place: String,
    pub noise_nonzero: bool,
    /// extra directions removed by conjugation
    pub conjugations: usize,
    pub relation: bool,
    pub membership: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub level: u32,
    pub places: Vec<PlaceLevel>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftingReport {
    pub seed: u64,
    pub levels: Vec<LevelReport>,
}

struct TrivialState {
    model: TameLocalModel,
    alpha: usize,
    nf: NormalForm,
    torus2: Vec<Elem>,
    tan: Space,
    extra: Space,
    extra_roots: Vec<usize>,
}

struct OrdinaryState {
    model: OrdinaryModel,
    chi: Vec<Vec<Elem>>,
    torus: Vec<Vec<Elem>>,
    /// per generator, coefficients of the positive root elements
    unip: Vec<Vec<Elem>>,
    tan: Space,
    extra: Space,
    extra_roots: Vec<usize>,
}

enum State {
    Trivial(Box<TrivialState>),
    Ordinary(Box<OrdinaryState>),
    Free,
}

fn positive_roots(ch: &Chevalley) -> Vec<usize> {
    let d = ch.datum();
    (0..d.num_roots()).filter(|&r| d.is_positive(r)).collect()
}

fn ordinary_element(ch: &Chevalley, torus: &[Elem], unip: &[Elem]) -> Result<GroupElement> {
    let mut g = ch.torus_elt(torus)?;
    for (b, y) in positive_roots(ch).into_iter().zip(unip) {
        g = ch.mul(&g, &ch.u_alpha(b, y));
    }
    Ok(g)
}

fn lift_lie(ring: &CoeffRing, f: &GaloisField, v: &[Elem]) -> LieElement {
    v.iter().map(|x| ring.lift_from(x, f.ring())).collect()
}

/// Correct a lift level by level from mod p^2 to mod p^M. At each level the
/// canonical lift is perturbed by a random local class z_v at every place; the
/// global class X with X_v + z_v in L_v is solved for through the Selmer
/// isomorphism, the correction exp(p^m (X_v + z_v)) is applied, and the
/// stability conjugators bring each local lift back to normal form, where
/// membership is checked exactly.
pub fn lifting_driver(model: &SyntheticGlobalModel, system: &SelmerSystem, max_m: u32, seed: u64) -> Result<LiftingReport> {
    let f = model.field.clone();
    if max_m < 3 {
        return Err(Error::Precondition("the driver produces levels 3..M, so M >= 3".into()));
    }
    let mut states = Vec::new();
    for (p, l) in model.places.iter().zip(&system.conditions) {
        states.push(setup_state(&f, p, l)?);
    }
    let res = selmer_compute(model, system)?;
    if res.selmer.nrows() != 0 || res.dual.nrows() != 0 {
        return Err(Error::Precondition(format!(
            "Selmer and dual Selmer must vanish, got ({}, {})",
            res.selmer.nrows(),
            res.dual.nrows()
        )));
    }
    // equations: <X_v + z_v, n> = 0 for n spanning the right kernel of L_v
    let mut eq_rows: Vec<(usize, Vec<Elem>)> = Vec::new();
    for (v, l) in system.conditions.iter().enumerate() {
        let kernel = if l.nrows() == 0 { linalg::identity(&f, model.places[v].h1_dim) } else { linalg::nullspace(&f, l) };
        for nrow in kernel.row_vecs() {
            eq_rows.push((v, nrow));
        }
    }
    let mut coeff = linalg::zeros(&f, 0, model.global.nrows());
    for (v, nrow) in &eq_rows {
        let row: Vec<Elem> =
            (0..model.global.nrows()).map(|i| linalg::dot(&f, model.restrict(model.global.row(i), *v), nrow)).collect();
        coeff.push_row(&row);
    }
    if coeff.nrows() != coeff.ncols() || linalg::rank(&f, &coeff) != coeff.ncols() {
        return Err(Error::Model("global image does not map isomorphically onto V / L".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut levels = Vec::new();
    for m in 2..max_m {
        let noise: Vec<Vec<Elem>> = model.places.iter().map(|p| (0..p.h1_dim).map(|_| f.random(&mut rng)).collect()).collect();
        let rhs: Vec<Elem> = eq_rows.iter().map(|(v, nrow)| f.neg(linalg::dot(&f, &noise[*v], nrow))).collect();
        let x = linalg::solve(&f, &coeff, &rhs).ok_or_else(|| Error::Model("no global correction".into()))?;
        let xg = linalg::vec_mul(&f, &x, &model.global);
        let mut places = Vec::new();
        for (v, st) in states.iter_mut().enumerate() {
            let c = linalg::vec_add(&f, model.restrict(&xg, v), &noise[v]);
            if !linalg::in_span(&f, &system.conditions[v], &c) {
                return Err(Error::Verification(format!("correction leaves L at {}", model.places[v].name)));
            }
            let name = model.places[v].name.clone();
            let nz = !linalg::is_zero_vec(&f, &noise[v]);
            let pl = match st {
                State::Trivial(s) => step_trivial(&f, s, &c, m, &name)?,
                State::Ordinary(s) => step_ordinary(&f, s, &c, m, &name)?,
                State::Free => {
                    PlaceLevel { place: name.clone(), noise_nonzero: nz, conjugations: 0, relation: true, membership: true }
                }
            };
            places.push(PlaceLevel { noise_nonzero: nz, ..pl });
        }
        levels.push(LevelReport { level: m + 1, places });
    }
    Ok(LiftingReport { seed, levels })
}

fn setup_state(f: &GaloisField, p: &Place, l: &Space) -> Result<State> {
    match (&p.lift, &p.tame, &p.ordinary) {
        (Some(PlaceLift::Trivial { alpha, torus2 }), Some(tame), _) => {
            let alpha = *alpha;
            let sp = tame.condition_spaces(alpha, ExtraKind::Unr, None)?;
            if l.nrows() != sp.l.nrows() {
                return Err(Error::Model(format!(
                    "ledger mismatch at {}: dim L = {} but {} expected",
                    p.name,
                    l.nrows(),
                    sp.l.nrows()
                )));
            }
            if !linalg::same_span(f, l, &sp.l) {
                return Err(Error::Model(format!("condition at {} is not L^alpha", p.name)));
            }
            let m2 = tame.at_precision(2)?;
            let mut torus = torus2.clone();
            m2.fix_alpha_value(&mut torus, alpha)?;
            if torus != *torus2 {
                return Err(Error::Precondition(format!("alpha(rho_2(sigma)) != q mod p^2 at {}", p.name)));
            }
            let cent = m2.centralizing_roots(alpha).into_iter().map(|g| (g, m2.ring().zero())).collect();
            let nf = NormalForm { alpha, torus, cent, x: m2.ring().zero() };
            let rho = m2.lift_from_normal_form(&nf)?;
            if !m2.membership(&rho, alpha, Variant::Unr2)? {
                return Err(Error::Precondition(format!("rho_2 is not in the unramified set at {}", p.name)));
            }
            Ok(State::Trivial(Box::new(TrivialState {
                model: m2,
                alpha,
                nf,
                torus2: torus2.clone(),
                tan: sp.tan,
                extra: sp.extra,
                extra_roots: sp.extra_roots,
            })))
        }
        (Some(PlaceLift::Ordinary { chi }), _, Some(om)) => {
            let sp = om.spaces(chi)?;
            let (_, roots) = om.extra(chi)?;
            if l.nrows() != sp.l.nrows() {
                return Err(Error::Model(format!(
                    "ledger mismatch at {}: dim L = {} but {} expected",
                    p.name,
                    l.nrows(),
                    sp.l.nrows()
                )));
            }
            if !linalg::same_span(f, l, &sp.l) {
                return Err(Error::Model(format!("condition at {} is not the ordinary L", p.name)));
            }
            let p_ = om.ch.p();
            let ring2 = CoeffRing::new(p_, 2, om.ch.ring().degree())?;
            let m2 = OrdinaryModel::new(om.ch.with_ring(ring2.clone()), om.f_degree)?;
            let npos = om.ch.datum().num_positive();
            let unip = vec![vec![ring2.zero(); npos]; om.generators()];
            let rho: Vec<GroupElement> =
                chi.iter().zip(&unip).map(|(t, u)| ordinary_element(&m2.ch, t, u)).collect::<Result<_>>()?;
            if !m2.membership(&rho, chi)? {
                return Err(Error::Precondition(format!("rho_2 is not ordinary at {}", p.name)));
            }
            Ok(State::Ordinary(Box::new(OrdinaryState {
                model: m2,
                chi: chi.clone(),
                torus: chi.clone(),
                unip,
                tan: sp.tan,
                extra: sp.extra,
                extra_roots: roots,
            })))
        }
        _ => {
            if l.nrows() != p.h1_dim {
                return Err(Error::Precondition(format!("place {} has no local model and a proper condition", p.name)));
            }
            Ok(State::Free)
        }
    }
}

/// Split c into tangent coefficients and extra coefficients.
fn split_condition(f: &GaloisField, tan: &Space, extra: &Space, c: &[Elem]) -> Result<(Vec<Elem>, Vec<Elem>)> {
    let basis = tan.vstack(extra);
    let co = linalg::coordinates(f, &basis, c).ok_or_else(|| Error::Verification("class is not in L".into()))?;
    Ok((co[..tan.nrows()].to_vec(), co[tan.nrows()..].to_vec()))
}

fn step_trivial(f: &GaloisField, s: &mut TrivialState, c: &[Elem], m: u32, name: &str) -> Result<PlaceLevel> {
    let up = s.model.at_precision(m + 1)?;
    let ch = up.ch.clone();
    let r = ch.ring().clone();
    let d = ch.dim();
    let b = ch.basis().clone();
    let dat = ch.datum().clone();
    let rho_m = s.model.lift_from_normal_form(&s.nf)?;
    let nf_up = s.model.lift_normal_form(&s.nf, &up)?;
    let good = up.lift_from_normal_form(&nf_up)?;
    let es = ch.exp_hat(&ch.scale_p_pow(&lift_lie(&r, f, &c[..d]), m))?;
    let et = ch.exp_hat(&ch.scale_p_pow(&lift_lie(&r, f, &c[d..]), m))?;
    let new = LocalLift { sigma: ch.mul(&es, &good.sigma), tau: ch.mul(&et, &good.tau) };
    let relation = up.check_relation(&new)?;
    if !relation {
        return Err(Error::Verification(format!("tame relation fails at place {name}, level {}", m + 1)));
    }
    let low = s.model.ring();
    if ch.reduce_group(&new.sigma, low).mat != rho_m.sigma.mat || ch.reduce_group(&new.tau, low).mat != rho_m.tau.mat {
        return Err(Error::Verification(format!("corrected lift does not reduce at place {name}")));
    }
    let (tc, xc) = split_condition(f, &s.tan, &s.extra, c)?;
    // conjugator removing the extra directions
    let ring2 = CoeffRing::new(ch.p(), 2, r.degree())?;
    let c2 = ch.with_ring(ring2.clone());
    let mut g = ch.identity();
    let mut conjugations = 0;
    for (j, &sj) in xc.iter().enumerate() {
        if f.is_zero(sj) {
            continue;
        }
        let beta = s.extra_roots[j];
        let row = s.extra.row(j);
        let lam = row[b.root_index(beta)];
        if row.iter().enumerate().any(|(k, x)| k != b.root_index(beta) && !f.is_zero(*x)) {
            return Err(Error::Unsupported("extra class is not a single sigma root vector".into()));
        }
        let bv = c2.root_value(&s.torus2, beta)?;
        let diff = ring2.sub(&ring2.one(), &bv);
        let unit = ring2.div_p_pow(&diff, 1)?;
        let z = f.inv(ring2.reduce_into(&unit, f.ring()));
        let coef = r.lift_from(&f.mul(f.mul(sj, lam), z), f.ring());
        g = ch.mul(&g, &ch.u_alpha(beta, &r.mul_p_pow(&coef, m - 1)));
        conjugations += 1;
    }
    let gi = ch.inv(&g)?;
    let check = LocalLift { sigma: ch.conj(&gi, &new.sigma)?, tau: ch.conj(&gi, &new.tau)? };
    // normal form of the conjugated lift from the tangent coefficients
    let t = linalg::vec_mul(f, &tc, &s.tan);
    let cent_roots: Vec<usize> = nf_up.cent.iter().map(|x| x.0).collect();
    let mut nf = nf_up.clone();
    for i in 0..dat.rank() {
        let a = root_on_cartan(&ch, f, &t[..d], dat.simple(i));
        let factor = r.add(&r.one(), &r.mul_p_pow(&r.lift_from(&a, f.ring()), m));
        nf.torus[i] = r.mul(&nf.torus[i], &factor);
    }
    for k in 0..d {
        let Some(root) = b.basis_root(k) else { continue };
        if f.is_zero(t[k]) {
            continue;
        }
        let pos = cent_roots
            .iter()
            .position(|&g| g == root)
            .ok_or_else(|| Error::Verification(format!("tangent sigma-part outside the centralizer at {name}")))?;
        let y = &nf.cent[pos].1;
        nf.cent[pos].1 = r.add(y, &r.mul_p_pow(&r.lift_from(&t[k], f.ring()), m));
    }
    for k in 0..d {
        if f.is_zero(t[d + k]) {
            continue;
        }
        if k != b.root_index(s.alpha) {
            return Err(Error::Verification(format!("tangent tau-part outside g_alpha at {name}")));
        }
        nf.x = r.add(&nf.x, &r.mul_p_pow(&r.lift_from(&t[d + k], f.ring()), m));
    }
    let rebuilt = up.lift_from_normal_form(&nf)?;
    if rebuilt.sigma.mat != check.sigma.mat || rebuilt.tau.mat != check.tau.mat {
        return Err(Error::Verification(format!("conjugated lift is not in normal form at place {name}, level {}", m + 1)));
    }
    let membership = up.membership(&check, s.alpha, Variant::Unr2)?;
    if !membership {
        return Err(Error::Verification(format!("membership fails at place {name}, level {}", m + 1)));
    }
    s.model = up;
    s.nf = nf;
    Ok(PlaceLevel { place: name.into(), noise_nonzero: false, conjugations, relation, membership })
}

fn step_ordinary(f: &GaloisField, s: &mut OrdinaryState, c: &[Elem], m: u32, name: &str) -> Result<PlaceLevel> {
    let old_ch = s.model.ch.clone();
    let ring = CoeffRing::new(old_ch.p(), m + 1, old_ch.ring().degree())?;
    let up = OrdinaryModel::new(old_ch.with_ring(ring.clone()), s.model.f_degree)?;
    let ch = up.ch.clone();
    let r = ring;
    let d = ch.dim();
    let b = ch.basis().clone();
    let dat = ch.datum().clone();
    let gens = up.generators();
    let old_r = old_ch.ring().clone();
    let torus: Vec<Vec<Elem>> = s.torus.iter().map(|t| t.iter().map(|x| r.lift_from(x, &old_r)).collect()).collect();
    let unip: Vec<Vec<Elem>> = s.unip.iter().map(|t| t.iter().map(|x| r.lift_from(x, &old_r)).collect()).collect();
    let mut new = Vec::with_capacity(gens);
    for i in 0..gens {
        let good = ordinary_element(&ch, &torus[i], &unip[i])?;
        let e = ch.exp_hat(&ch.scale_p_pow(&lift_lie(&r, f, &c[i * d..(i + 1) * d]), m))?;
        let g = ch.mul(&e, &good);
        let prev = ordinary_element(&old_ch, &s.torus[i], &s.unip[i])?;
        if ch.reduce_group(&g, &old_r).mat != prev.mat {
            return Err(Error::Verification(format!("corrected lift does not reduce at place {name}")));
        }
        new.push(g);
    }
    let (tc, xc) = split_condition(f, &s.tan, &s.extra, c)?;
    let mut g = ch.identity();
    let mut conjugations = 0;
    for (j, &sj) in xc.iter().enumerate() {
        if f.is_zero(sj) {
            continue;
        }
        let beta = s.extra_roots[j];
        g = ch.mul(&g, &ch.u_alpha(beta, &r.mul_p_pow(&r.lift_from(&sj, f.ring()), m - 1)));
        conjugations += 1;
    }
    let gi = ch.inv(&g)?;
    let check: Vec<GroupElement> = new.iter().map(|x| ch.conj(&gi, x)).collect::<Result<_>>()?;
    let t = linalg::vec_mul(f, &tc, &s.tan);
    let pos = positive_roots(&ch);
    let mut torus2 = torus.clone();
    let mut unip2 = unip.clone();
    for i in 0..gens {
        let block = &t[i * d..(i + 1) * d];
        for k in 0..dat.rank() {
            let a = root_on_cartan(&ch, f, block, dat.simple(k));
            let factor = r.add(&r.one(), &r.mul_p_pow(&r.lift_from(&a, f.ring()), m));
            torus2[i][k] = r.mul(&torus2[i][k], &factor);
        }
        for (k, x) in block.iter().enumerate() {
            let Some(root) = b.basis_root(k) else { continue };
            if f.is_zero(*x) {
                continue;
            }
            let j = pos
                .iter()
                .position(|&q| q == root)
                .ok_or_else(|| Error::Verification(format!("tangent part outside the Borel at {name}")))?;
            unip2[i][j] = r.add(&unip2[i][j], &r.mul_p_pow(&r.lift_from(x, f.ring()), m));
        }
    }
    for i in 0..gens {
        if ordinary_element(&ch, &torus2[i], &unip2[i])?.mat != check[i].mat {
            return Err(Error::Verification(format!("conjugated lift is not in normal form at place {name}, level {}", m + 1)));
        }
    }
    let membership = up.membership(&check, &s.chi)?;
    if !membership {
        return Err(Error::Verification(format!("membership fails at place {name}, level {}", m + 1)));
    }
    s.model = up;
    s.torus = torus2;
    s.unip = unip2;
    Ok(PlaceLevel { place: name.into(), noise_nonzero: false, conjugations, relation: true, membership })
}

// ----- model files -----

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ConditionSpec {
    Full,
    Zero,
    /// (e_i | 0)
    Unramified,
    /// unramified L^alpha at a trivial prime
    Tame,
    /// ordinary condition at p
    Ordinary,
    /// first `dim` coordinates (ledger places)
    Ledger {
        dim: usize,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlaceSpec {
    pub name: String,
    pub kind: PlaceKind,
    #[serde(default)]
    pub q: Option<u64>,
    #[serde(default)]
    pub alpha: Option<usize>,
    /// simple-root values of rho_2(sigma) mod p^2
    #[serde(default)]
    pub torus2: Option<Vec<i64>>,
    #[serde(default)]
    pub f_degree: Option<usize>,
    /// simple-root values mod p^2 of the ordinary character, per generator
    #[serde(default)]
    pub chi: Option<Vec<Vec<i64>>>,
    #[serde(default)]
    pub h1_dim: Option<usize>,
    #[serde(default)]
    pub h0: Option<usize>,
    #[serde(default)]
    pub h0_dual: Option<usize>,
    pub condition: ConditionSpec,
}

fn default_precision() -> u32 {
    3
}

/// JSON model description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub p: u64,
    /// group type; the module is then its adjoint Lie algebra
    #[serde(default)]
    pub cartan_type: Option<String>,
    /// dimension of a module with trivial action (no group)
    #[serde(default)]
    pub module_dim: Option<usize>,
    #[serde(default = "default_precision")]
    pub precision: u32,
    pub seed: u64,
    #[serde(default)]
    pub global_h0: usize,
    #[serde(default)]
    pub global_h0_dual: usize,
    #[serde(default)]
    pub archimedean_h0: usize,
    pub places: Vec<PlaceSpec>,
    /// random global classes prescribed inside the conditions
    #[serde(default)]
    pub selmer_classes: usize,
    /// random dual classes prescribed inside the annihilators
    #[serde(default)]
    pub dual_selmer_classes: usize,
}

#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub model: SyntheticGlobalModel,
    pub system: SelmerSystem,
    pub chevalley: Option<Chevalley>,
}

/// The first `count` primes q = 1 mod p with q != 1 mod p^2.
pub fn trivial_primes(p: u64, count: usize) -> Vec<u64> {
    (1..).map(|k| 1 + k * p).filter(|&q| q % (p * p) != 1 && is_prime(q)).take(count).collect()
}

impl ModelSpec {
    /// Balanced odd model for the adjoint module of `cartan_type`: trivial
    /// primes carrying L^alpha for a simple root, a p-adic ledger place, and a
    /// real place with invariants of dimension |Phi^+|. It starts at
    /// (classes, classes).
    pub fn balanced(cartan_type: &str, p: u64, primes: usize, classes: usize, seed: u64) -> Result<Self> {
        let (d, _) = root_datum_str(cartan_type, Isogeny::Adjoint)?;
        let dim = d.dim();
        let npos = d.num_positive();
        let mut places: Vec<PlaceSpec> = trivial_primes(p, primes)
            .into_iter()
            .map(|q| PlaceSpec {
                name: format!("q{q}"),
                kind: PlaceKind::TrivialPrime,
                q: Some(q),
                alpha: Some(d.simple(0)),
                torus2: None,
                f_degree: None,
                chi: None,
                h1_dim: None,
                h0: None,
                h0_dual: None,
                condition: ConditionSpec::Tame,
            })
            .collect();
        places.push(PlaceSpec {
            name: "p".into(),
            kind: PlaceKind::PAdicLedger,
            q: None,
            alpha: None,
            torus2: None,
            f_degree: None,
            chi: None,
            h1_dim: Some(2 * dim),
            h0: Some(dim),
            h0_dual: Some(0),
            condition: ConditionSpec::Ledger { dim: dim + npos },
        });
        Ok(ModelSpec {
            name: format!("balanced-{cartan_type}-p{p}"),
            p,
            cartan_type: Some(cartan_type.into()),
            module_dim: None,
            precision: 3,
            seed,
            global_h0: 0,
            global_h0_dual: 0,
            archimedean_h0: npos,
            places,
            selmer_classes: classes,
            dual_selmer_classes: classes,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model spec: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn build(&self) -> Result<BuiltModel> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let ring = CoeffRing::new(self.p, self.precision.max(2), 1)?;
        let field = GaloisField::from_ring(&ring.reduced(1)?);
        let ch = match &self.cartan_type {
            Some(t) => {
                let (d, b) = root_datum_str(t, Isogeny::Adjoint)?;
                Some(Chevalley::new(d, b, ring.clone())?)
            }
            None => None,
        };
        let dim = match (&ch, self.module_dim) {
            (Some(c), _) => c.dim(),
            (None, Some(n)) => n,
            (None, None) => return Err(Error::Parse("model needs cartan_type or module_dim".into())),
        };
        let ring2 = ring.reduced(2)?;
        let mut places = Vec::new();
        let mut conditions = Vec::new();
        for ps in &self.places {
            let (place, cond) = self.build_place(ps, &field, dim, ch.as_ref(), &ring2)?;
            places.push(place);
            conditions.push(cond);
        }
        let total: usize = places.iter().map(|p| p.h1_dim).sum();
        let embed = |rows: Vec<Space>| -> Space {
            let mut out = linalg::zeros(&field, 0, total);
            let mut o = 0;
            for (s, p) in rows.iter().zip(&places) {
                for row in s.row_vecs() {
                    let mut x = vec![field.zero(); total];
                    x[o..o + row.len()].copy_from_slice(&row);
                    out.push_row(&x);
                }
                o += p.h1_dim;
            }
            out
        };
        let lsum = embed(conditions.clone());
        let perps: Vec<Space> = places.iter().zip(&conditions).map(|(p, l)| localconds::perp_space(&field, l, &p.gram)).collect();
        let psum = embed(perps);
        let draw_in = |space: &Space, k: usize, rng: &mut ChaCha8Rng| -> Result<Vec<Vec<Elem>>> {
            if k > space.nrows() {
                return Err(Error::Infeasible(format!("{k} prescribed classes in a space of dimension {}", space.nrows())));
            }
            let mut out = linalg::zeros(&field, 0, total);
            let mut guard = 0;
            while out.nrows() < k {
                let c: Vec<Elem> = (0..space.nrows()).map(|_| field.random(rng)).collect();
                let v = linalg::vec_mul(&field, &c, space);
                if !linalg::in_span(&field, &out, &v) {
                    out.push_row(&v);
                }
                guard += 1;
                if guard > 1000 {
                    return Err(Error::Infeasible("could not draw independent prescribed classes".into()));
                }
            }
            Ok(out.row_vecs())
        };
        let prescribed = draw_in(&lsum, self.selmer_classes, &mut rng)?;
        let prescribed_dual = draw_in(&psum, self.dual_selmer_classes, &mut rng)?;
        let build = ModelBuild {
            places,
            global_h0: self.global_h0,
            global_h0_dual: self.global_h0_dual,
            archimedean_h0: self.archimedean_h0,
            prescribed,
            prescribed_dual,
            structure: None,
        };
        let model = build_synthetic_model(&field, dim, build, &mut rng)?;
        let system = SelmerSystem::new(&model, conditions)?;
        Ok(BuiltModel { model, system, chevalley: ch })
    }

    fn build_place(
        &self,
        ps: &PlaceSpec,
        f: &GaloisField,
        dim: usize,
        ch: Option<&Chevalley>,
        ring2: &CoeffRing,
    ) -> Result<(Place, Space)> {
        let need = |what: &str| Error::Parse(format!("place {}: missing {what}", ps.name));
        let mut place = match ps.kind {
            PlaceKind::TrivialPrime => {
                let q = ps.q.ok_or_else(|| need("q"))?;
                let tame = match ch {
                    Some(c) => Some(TameLocalModel::new(c.clone(), q)?),
                    None => None,
                };
                Place::trivial(&ps.name, f, dim, q, tame)
            }
            PlaceKind::PAdicLedger if ps.condition == ConditionSpec::Ordinary => {
                let c = ch.ok_or_else(|| need("cartan_type for an ordinary place"))?;
                let om = OrdinaryModel::new(c.clone(), ps.f_degree.unwrap_or(1))?;
                Place::ordinary(&ps.name, om)
            }
            kind => Place::ledger(
                &ps.name,
                kind,
                f,
                ps.h1_dim.ok_or_else(|| need("h1_dim"))?,
                ps.h0.ok_or_else(|| need("h0"))?,
                ps.h0_dual.unwrap_or(0),
            ),
        };
        if let Some(h) = ps.h0 {
            place.h0 = h;
        }
        if let Some(h) = ps.h0_dual {
            place.h0_dual = h;
        }
        let n = place.h1_dim;
        let cond = match &ps.condition {
            ConditionSpec::Full => linalg::identity(f, n),
            ConditionSpec::Zero => linalg::zeros(f, 0, n),
            ConditionSpec::Unramified => {
                if place.kind != PlaceKind::TrivialPrime {
                    return Err(Error::Parse(format!("place {}: unramified condition needs a trivial prime", ps.name)));
                }
                let mut u = linalg::zeros(f, 0, n);
                for i in 0..dim {
                    let mut v = vec![f.zero(); n];
                    v[i] = f.one();
                    u.push_row(&v);
                }
                u
            }
            ConditionSpec::Tame => {
                let tame = place.tame.as_ref().ok_or_else(|| need("a group for the tame condition"))?;
                let alpha = ps.alpha.ok_or_else(|| need("alpha"))?;
                if let Some(t) = &ps.torus2 {
                    let torus2: Vec<Elem> = t.iter().map(|&x| ring2.from_int(x)).collect();
                    place.lift = Some(PlaceLift::Trivial { alpha, torus2 });
                }
                tame.condition_spaces(alpha, ExtraKind::Unr, None)?.l
            }
            ConditionSpec::Ordinary => {
                let om = place.ordinary.as_ref().ok_or_else(|| need("an ordinary model"))?;
                let chi_int = ps.chi.as_ref().ok_or_else(|| need("chi"))?;
                let chi: Vec<Vec<Elem>> = chi_int.iter().map(|v| v.iter().map(|&x| ring2.from_int(x)).collect()).collect();
                let l = om.spaces(&chi)?.l;
                place.lift = Some(PlaceLift::Ordinary { chi });
                l
            }
            ConditionSpec::Ledger { dim: k } => {
                if *k > n {
                    return Err(Error::Parse(format!("place {}: ledger dimension exceeds H^1", ps.name)));
                }
                let mut u = linalg::zeros(f, 0, n);
                for i in 0..*k {
                    let mut v = vec![f.zero(); n];
                    v[i] = f.one();
                    u.push_row(&v);
                }
                u
            }
        };
        Ok((place, cond))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galoismod::decompose;
    use crate::oddness::principal_sl2_module;

    fn fp(p: u64) -> GaloisField {
        GaloisField::new(p, 1).unwrap()
    }

    fn chev(t: &str, p: u64, m: u32) -> Chevalley {
        let (d, b) = root_datum_str(t, Isogeny::Adjoint).unwrap();
        Chevalley::new(d, b, CoeffRing::new(p, m, 1).unwrap()).unwrap()
    }

    fn plain(places: Vec<Place>, h0: usize, h0d: usize, arch: usize) -> ModelBuild {
        ModelBuild {
            places,
            global_h0: h0,
            global_h0_dual: h0d,
            archimedean_h0: arch,
            prescribed: vec![],
            prescribed_dual: vec![],
            structure: None,
        }
    }

    /// A1 over p = 13 with one trivial prime, one p-adic ledger place and a
    /// real place; starts at (k, k).
    fn a1_spec(p: u64, q: u64, k: usize, seed: u64) -> ModelSpec {
        let text = format!(
            r#"{{"name": "a1", "p": {p}, "cartan_type": "A1", "seed": {seed}, "archimedean_h0": 1,
            "selmer_classes": {k}, "dual_selmer_classes": {k},
            "places": [
              {{"name": "q", "kind": "trivial-prime", "q": {q}, "alpha": 0, "condition": {{"type": "tame"}}}},
              {{"name": "p", "kind": "p-adic-ledger", "h1_dim": 6, "h0": 3, "condition": {{"type": "ledger", "dim": 4}}}}
            ]}}"#
        );
        ModelSpec::parse(&text).unwrap()
    }

    fn toy_a1(seed: u64) -> ModelSpec {
        let text = format!(
            r#"{{"name": "toy-a1", "p": 5, "cartan_type": "A1", "precision": 3, "seed": {seed}, "archimedean_h0": 1,
            "selmer_classes": 1, "dual_selmer_classes": 1,
            "places": [
              {{"name": "p", "kind": "p-adic-ledger", "f_degree": 1, "chi": [[6], [11]], "condition": {{"type": "ordinary"}}}}
            ]}}"#
        );
        ModelSpec::parse(&text).unwrap()
    }

    #[test]
    fn one_trivial_prime_gives_a_line() {
        let f = fp(5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = build_synthetic_model(&f, 1, plain(vec![Place::trivial("q", &f, 1, 11, None)], 1, 1, 0), &mut rng).unwrap();
        assert_eq!(m.global.nrows(), 1);
        assert_eq!(m.dual.nrows(), 1);
        m.poitou_tate_check().unwrap();
    }

    #[test]
    fn two_a1_primes_give_six() {
        let f = fp(13);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let places = vec![Place::trivial("q1", &f, 3, 53, None), Place::trivial("q2", &f, 3, 79, None)];
        let m = build_synthetic_model(&f, 3, plain(places, 0, 0, 0), &mut rng).unwrap();
        assert_eq!(m.global.nrows(), 6);
        assert_eq!(m.dual.nrows(), 6);
    }

    #[test]
    fn pairing_prescriptions_are_infeasible() {
        let f = fp(5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut b = plain(vec![Place::trivial("q", &f, 1, 11, None)], 1, 1, 0);
        // <(1,0), (0,1)> = -1 under the tame pairing
        b.prescribed = vec![vec![f.one(), f.zero()]];
        b.prescribed_dual = vec![vec![f.zero(), f.one()]];
        assert!(matches!(build_synthetic_model(&f, 1, b, &mut rng), Err(Error::Infeasible(_))));
    }

    #[test]
    fn full_and_zero_conditions_collapse() {
        let built = a1_spec(13, 53, 0, 4).build().unwrap();
        let m = &built.model;
        let full = selmer_compute(m, &SelmerSystem::full(m).unwrap()).unwrap();
        assert_eq!(full.selmer.nrows(), m.global.nrows());
        assert_eq!(full.dual.nrows(), 0);
        let zero = selmer_compute(m, &SelmerSystem::zero(m).unwrap()).unwrap();
        assert_eq!(zero.selmer.nrows(), 0);
        assert_eq!(zero.dual.nrows(), m.dual.nrows());
    }

    #[test]
    fn odd_ledger_is_balanced() {
        for k in 0..3 {
            let built = a1_spec(13, 53, k, 5 + k as u64).build().unwrap();
            let r = selmer_compute(&built.model, &built.system).unwrap();
            assert!(r.report.balanced);
            assert_eq!((r.report.selmer_dim, r.report.dual_selmer_dim), (k, k));
        }
    }

    #[test]
    fn declared_dimension_mismatch_is_a_model_error() {
        let built = a1_spec(13, 53, 0, 6).build().unwrap();
        let err = SelmerSystem::with_declared(&built.model, built.system.conditions.clone(), &[3, 5]).unwrap_err();
        assert!(matches!(err, Error::Model(_)));
    }

    #[test]
    fn sampler_matches_class_sizes() {
        let f = fp(5);
        let sizes = [1, 45, 40, 40, 90, 72, 72];
        let classes = sizes.iter().enumerate().map(|(i, &s)| FrobeniusClass { label: format!("c{i}"), size: s }).collect();
        let mut s = ChebotarevSampler::new(&f, classes, 0, 11).unwrap();
        let chi = s.chi_square(20_000);
        assert!(chi.pass, "{chi:?}");
        assert_eq!(chi.dof, 6);
    }

    #[test]
    fn eta_variants() {
        let ch = chev("A1", 7, 1);
        let module = principal_sl2_module(&ch).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dec = decompose(&module, &mut rng).unwrap();
        let f = module.field().clone();
        let zero = eta_build(&module, &dec, &[]).unwrap();
        assert!(zero.is_zero());
        let id = eta_build(&module, &dec, &[(0, f.one())]).unwrap();
        assert_eq!(id.matrix, linalg::identity(&f, 3));
    }

    #[test]
    fn eta_on_g2_projects_to_the_small_piece() {
        let ch = chev("G2", 13, 1);
        let module = principal_sl2_module(&ch).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dec = decompose(&module, &mut rng).unwrap();
        assert_eq!(dec.constituents[0].dim, 3);
        let f = module.field().clone();
        let eta = eta_build(&module, &dec, &[(0, f.from_int(2))]).unwrap();
        // 2 P with P an idempotent of rank 3
        let half = linalg::mat_scale(&f, &eta.matrix, f.inv(f.from_int(2)));
        assert_eq!(linalg::mat_mul(&f, &half, &half), half);
        assert_eq!(linalg::rank(&f, &half), 3);
    }

    #[test]
    fn larsen_identity_and_projection() {
        let ch = chev("A1", 7, 2);
        let f = fp(7);
        let w = larsen_search(&EtaMap::scalar(&f, 3, f.one()), &ch, 1, 64).unwrap();
        assert!(!f.is_zero(w.value));
        // eta kills the Cartan: a nontrivial conjugate is needed
        let mut m = linalg::identity(&f, 3);
        let h = ch.basis().h_index(0);
        m.set(h, h, f.zero());
        let w = larsen_search(&EtaMap::from_matrix(&f, m), &ch, 2, 256).unwrap();
        assert!(!w.conjugator.is_empty());
        let zero = EtaMap::from_matrix(&f, linalg::zeros(&f, 3, 3));
        assert!(matches!(larsen_search(&zero, &ch, 3, 10), Err(Error::Precondition(_))));
    }

    #[test]
    fn splitcase_within_budget() {
        let built = a1_spec(13, 53, 1, 9).build().unwrap();
        let ch = built.chevalley.clone().unwrap();
        let r = selmer_compute(&built.model, &built.system).unwrap();
        let req = SplitcaseRequest { phi: r.selmer.row(0), psi: r.dual.row(0), eta: None, seed: 10, budget: 100 };
        let w = splitcase_search(&built.model, &ch, &req).unwrap();
        assert_eq!(w.checks, [true; 3]);
        assert!(w.q_is_prime);
        let c = built.model.field.ring().signed_constant(&w.c).rem_euclid(13) as u64;
        assert_eq!(w.q % 169, 1 + 13 * c);
        let zero = vec![built.model.field.zero(); built.model.total_dim()];
        let bad = SplitcaseRequest { psi: &zero, ..req };
        assert!(matches!(splitcase_search(&built.model, &ch, &bad), Err(Error::Precondition(_))));
    }

    #[test]
    fn splitcase_with_eta_condition() {
        let built = a1_spec(13, 53, 1, 12).build().unwrap();
        let ch = built.chevalley.clone().unwrap();
        let f = built.model.field.clone();
        let r = selmer_compute(&built.model, &built.system).unwrap();
        let eta = EtaMap::scalar(&f, 3, f.one());
        let req = SplitcaseRequest { phi: r.selmer.row(0), psi: r.dual.row(0), eta: Some(&eta), seed: 13, budget: 400 };
        let w = splitcase_search(&built.model, &ch, &req).unwrap();
        assert_eq!(w.checks, [true; 3]);
    }

    #[test]
    fn annihilation_reaches_zero() {
        for k in 0..3 {
            let mut built = a1_spec(13, 53, k, 20 + k as u64).build().unwrap();
            let ch = built.chevalley.clone().unwrap();
            let steps = annihilation_loop(&mut built.model, &mut built.system, &ch, None, 30, 400).unwrap();
            assert_eq!(steps.len(), k);
            let r = selmer_compute(&built.model, &built.system).unwrap();
            assert_eq!((r.selmer.nrows(), r.dual.nrows()), (0, 0));
            for s in &steps {
                assert_eq!(s.after.1 + 1, s.before.1);
            }
        }
    }

    #[test]
    fn doubling_exhaustive_on_fp_toy() {
        let f = fp(5);
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let m = build_synthetic_model(&f, 1, plain(vec![Place::trivial("q", &f, 1, 11, None)], 1, 1, 0), &mut rng).unwrap();
        for target in [[1, 0], [0, 1], [2, 3], [0, 0]] {
            let z: Vec<Elem> = target.iter().map(|&x| f.from_int(x)).collect();
            let opts = DoublingOptions { exhaustive: true, ..Default::default() };
            let r = doubling_solve(&m, &z, &opts).unwrap();
            assert!(r.verified);
            assert_eq!(r.restriction, z);
        }
    }

    #[test]
    fn doubling_a1_rank_one_cokernel() {
        let built = a1_spec(13, 53, 0, 41).build().unwrap();
        let m = &built.model;
        let f = m.field.clone();
        let comp = linalg::complement(&f, &m.global);
        let z = linalg::vec_add(&f, m.global.row(0), comp.row(0));
        let r = doubling_solve(m, &z, &DoublingOptions { seed: 3, ..Default::default() }).unwrap();
        assert_eq!(r.first.len(), 1);
        assert_eq!(r.restriction, z);
        // a global class needs no auxiliary primes
        let r = doubling_solve(m, m.global.row(1), &DoublingOptions::default()).unwrap();
        assert!(r.first.is_empty());
    }

    fn killed_toy(seed: u64) -> BuiltModel {
        let mut built = toy_a1(seed).build().unwrap();
        let ch = built.chevalley.clone().unwrap();
        let r = selmer_compute(&built.model, &built.system).unwrap();
        assert_eq!((r.selmer.nrows(), r.dual.nrows()), (1, 1));
        annihilation_loop(&mut built.model, &mut built.system, &ch, None, seed, 400).unwrap();
        built
    }

    #[test]
    fn lifting_to_three_and_five() {
        let built = killed_toy(50);
        let r = lifting_driver(&built.model, &built.system, 3, 1).unwrap();
        assert_eq!(r.levels.len(), 1);
        let r = lifting_driver(&built.model, &built.system, 5, 2).unwrap();
        assert_eq!(r.levels.iter().map(|l| l.level).collect::<Vec<_>>(), vec![3, 4, 5]);
        assert!(r.levels.iter().all(|l| l.places.iter().all(|p| p.membership && p.relation)));
        assert!(r.levels.iter().flat_map(|l| &l.places).any(|p| p.conjugations > 0));
        assert!(built.model.places.len() >= 2);
    }

    #[test]
    fn sabotaged_condition_is_caught() {
        let built = killed_toy(51);
        let f = built.model.field.clone();
        let mut system = built.system.clone();
        let v = system.conditions.len() - 1;
        let n = system.conditions[v].nrows();
        let w = built.model.places[v].h1_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        system.conditions[v] = linalg::random_matrix(&f, n, w, &mut rng);
        assert!(matches!(lifting_driver(&built.model, &system, 4, 1), Err(Error::Model(_))));
    }
}
