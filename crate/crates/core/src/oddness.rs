//! Oddness of involutions and the example families: principal SL2 acting on
//! the adjoint module, the normalizer of a split torus, and the F4 examples
//! built from character data of A6 and PSL2(13).

use rand::Rng;
use serde::Serialize;

use crate::chevgroup::{Chevalley, GroupElement};
use crate::error::{Error, Result};
use crate::field::{Field, GaloisField};
use crate::galoismod::{self, CharacterTable, ClassFunctions, Cyclo, Decomposition, MatrixModule};
use crate::linalg;
use crate::ringmat;
use crate::rootdata::{root_datum_str, Isogeny};

#[derive(Clone, Debug, Serialize)]
pub struct InvolutionReport {
    pub description: String,
    pub lie_dim: usize,
    pub fixed_dim: usize,
    pub positive_roots: usize,
    pub odd: bool,
}

impl InvolutionReport {
    fn new(description: String, lie_dim: usize, fixed_dim: usize, positive_roots: usize) -> Result<Self> {
        if fixed_dim < positive_roots {
            return Err(Error::Verification(format!(
                "{description}: fixed dim {fixed_dim} below the lower bound {positive_roots}"
            )));
        }
        Ok(InvolutionReport { description, lie_dim, fixed_dim, positive_roots, odd: fixed_dim == positive_roots })
    }
}

fn residue_module_matrix(ch: &Chevalley, g: &GroupElement) -> (GaloisField, linalg::FMat<GaloisField>) {
    let low = ch.ring().reduced(1).expect("precision 1");
    (GaloisField::from_ring(&low), ringmat::reduce(ch.ring(), &g.mat, &low))
}

/// Exact fixed-space dimension of Ad(theta) on the residue Lie algebra.
pub fn odd_check(ch: &Chevalley, theta: &GroupElement, description: &str) -> Result<InvolutionReport> {
    if !ch.is_identity(&ch.mul(theta, theta)) {
        return Err(Error::Precondition(format!("{description}: element is not an involution")));
    }
    if ch.p() == 2 {
        return Err(Error::Precondition("involutions need odd p".into()));
    }
    let (f, m) = residue_module_matrix(ch, theta);
    let shifted = linalg::mat_sub(&f, &m, &linalg::identity(&f, ch.dim()));
    let fixed = ch.dim() - linalg::rank(&f, &shifted);
    InvolutionReport::new(description.to_string(), ch.dim(), fixed, ch.datum().num_positive())
}

/// Fixed dimension of an involution from its trace in characteristic 0.
pub fn odd_check_from_trace(description: &str, lie_dim: usize, trace: i64, positive_roots: usize) -> Result<InvolutionReport> {
    let twice = lie_dim as i64 + trace;
    if twice < 0 || twice % 2 != 0 || trace.unsigned_abs() as usize > lie_dim {
        return Err(Error::Data(format!("{description}: trace {trace} impossible for an involution on dim {lie_dim}")));
    }
    InvolutionReport::new(description.to_string(), lie_dim, (twice / 2) as usize, positive_roots)
}

/// Image of diag(-1, 1) under the principal homomorphism: the torus element
/// with every simple root value -1. Checked to negate e and f and fix h.
pub fn principal_involution(ch: &Chevalley) -> Result<GroupElement> {
    let r = ch.ring();
    let t = ch.principal_sl2()?;
    let theta = ch.torus_elt(&vec![r.from_int(-1); ch.datum().rank()])?;
    let minus = r.from_int(-1);
    if ch.apply(&theta, &t.e) != ch.scale(&t.e, &minus)
        || ch.apply(&theta, &t.f) != ch.scale(&t.f, &minus)
        || ch.apply(&theta, &t.h) != t.h
    {
        return Err(Error::Verification("involution does not act as diag(-1, 1) on the principal sl2".into()));
    }
    Ok(theta)
}

pub fn principal_involution_check(ch: &Chevalley) -> Result<InvolutionReport> {
    let theta = principal_involution(ch)?;
    let rep = odd_check(ch, &theta, &format!("principal involution of {}", ch.datum().type_label()))?;
    if !rep.odd {
        return Err(Error::Verification(format!("{}: fixed dim {} != {}", rep.description, rep.fixed_dim, rep.positive_roots)));
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct SymDecomposition {
    pub cartan_type: String,
    pub p: u64,
    /// Sym^k pieces predicted by the exponents, as (k, multiplicity)
    pub predicted: Vec<(usize, usize)>,
    /// pieces found by the MeatAxe, as (k, multiplicity)
    pub computed: Vec<(usize, usize)>,
    pub multiplicity_free: bool,
    pub agree: bool,
}

fn multiset(v: impl IntoIterator<Item = usize>) -> Vec<(usize, usize)> {
    let mut m = std::collections::BTreeMap::new();
    for x in v {
        *m.entry(x).or_insert(0) += 1;
    }
    m.into_iter().collect()
}

/// The adjoint module restricted to the principal SL2(F_p).
pub fn principal_sl2_module(ch: &Chevalley) -> Result<MatrixModule> {
    let t = ch.principal_sl2()?;
    let gens = ch.principal_generators(&t)?;
    let mut mats = Vec::new();
    let mut field = None;
    for g in &gens {
        let (f, m) = residue_module_matrix(ch, g);
        mats.push(m);
        field = Some(f);
    }
    MatrixModule::new(field.expect("two generators"), ch.dim(), mats)
}

/// Sym^{2m} for each exponent m, compared with the MeatAxe answer on the
/// principal SL2 module (irreducibles of dim <= p are determined by dim).
pub fn sym_adjoint_decomposition(ch: &Chevalley, rng: &mut (impl Rng + ?Sized)) -> Result<SymDecomposition> {
    let d = ch.datum();
    let exps = d.exponents();
    let top = 2 * exps.iter().copied().max().unwrap_or(0) + 1;
    if (ch.p() as i64) <= top {
        return Err(Error::Precondition(format!("need p > {top} so every Sym piece stays irreducible, got p = {}", ch.p())));
    }
    let predicted = multiset(exps.iter().map(|&m| 2 * m as usize));
    let module = principal_sl2_module(ch)?;
    let dec = galoismod::decompose(&module, rng)?;
    let computed: Vec<(usize, usize)> = dec.constituents.iter().map(|c| (c.dim - 1, c.multiplicity)).collect();
    let mut computed_sorted = computed.clone();
    computed_sorted.sort();
    Ok(SymDecomposition {
        cartan_type: d.type_label(),
        p: ch.p(),
        multiplicity_free: predicted.iter().all(|&(_, m)| m == 1),
        agree: computed_sorted == predicted && dec.semisimple,
        predicted,
        computed: computed_sorted,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalizerReport {
    pub cartan_type: String,
    pub p: u64,
    pub summand_dims: Vec<usize>,
    pub predicted_dims: Vec<usize>,
    pub all_absolutely_irreducible: bool,
    pub pairwise_non_isomorphic: bool,
    pub matches_prediction: bool,
}

/// N(T)(F_p)-module on the adjoint Lie algebra: torus generators and the
/// Weyl lifts u_a(1) u_-a(-1) u_a(1) for simple a.
pub fn normalizer_module(ch: &Chevalley) -> Result<MatrixModule> {
    let d = ch.datum();
    let r = ch.ring();
    let f = GaloisField::from_ring(&r.reduced(1)?);
    let g = galoismod::root_of_unity(&f, f.size() - 1)?;
    let gval = r.lift_from(&g, f.ring());
    let mut elems = Vec::new();
    for k in 0..d.rank() {
        let mut vals = vec![r.one(); d.rank()];
        vals[k] = gval;
        elems.push(ch.torus_elt(&vals)?);
    }
    for k in 0..d.rank() {
        let a = d.simple(k);
        let one = r.one();
        let n = ch.mul(&ch.mul(&ch.u_alpha(a, &one), &ch.u_alpha(d.neg(a), &r.neg(&one))), &ch.u_alpha(a, &one));
        elems.push(n);
    }
    let mats = elems.iter().map(|e| residue_module_matrix(ch, e).1).collect();
    MatrixModule::new(f, ch.dim(), mats)
}

pub fn normalizer_decomposition(ch: &Chevalley, rng: &mut (impl Rng + ?Sized)) -> Result<NormalizerReport> {
    let d = ch.datum();
    if d.types().len() != 1 {
        return Err(Error::Unsupported("normalizer decomposition for a simple type only".into()));
    }
    if d.weyl_order() % ch.p() == 0 {
        return Err(Error::Precondition(format!("p = {} divides |W| = {}", ch.p(), d.weyl_order())));
    }
    let long = (0..d.num_roots()).filter(|&b| d.is_long(b)).count();
    let short = d.num_roots() - long;
    let mut predicted_dims = vec![d.rank(), long];
    if short > 0 {
        predicted_dims.push(short);
    }
    predicted_dims.sort();
    let module = normalizer_module(ch)?;
    let dec: Decomposition = galoismod::decompose(&module, rng)?;
    let mut summand_dims: Vec<usize> = dec.constituents.iter().flat_map(|c| std::iter::repeat_n(c.dim, c.multiplicity)).collect();
    summand_dims.sort();
    let all_abs = dec.constituents.iter().all(|c| c.irreducible.endo_degree == 1);
    Ok(NormalizerReport {
        cartan_type: d.type_label(),
        p: ch.p(),
        matches_prediction: summand_dims == predicted_dims && dec.semisimple && dec.multiplicity_free && all_abs,
        pairwise_non_isomorphic: dec.multiplicity_free,
        all_absolutely_irreducible: all_abs,
        summand_dims,
        predicted_dims,
    })
}

// ----- the F4 examples -----

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExamplePipelineReport {
    pub group: String,
    pub group_order: u64,
    pub p: u64,
    pub degrees: Vec<i64>,
    pub multiplicities: Vec<i64>,
    /// constituents as (character number from 1, multiplicity)
    pub constituents: Vec<(usize, i64)>,
    pub lie_dim: i64,
    pub multiplicity_free: bool,
    pub involution_class: String,
    pub involution_trace: i64,
    pub oddness: InvolutionReport,
    /// characters that share degree, values on all rational classes and the
    /// multiplicity pattern with a constituent, so the data alone picks one
    pub ambiguous_labels: Vec<Vec<usize>>,
    pub checklist: Vec<HypothesisCheck>,
    /// every hypothesis except multiplicity-freeness holds
    pub only_multiplicity_free_fails: bool,
}

/// Lie(F4) as the adjoint E6 class function minus (V27 - 1).
pub fn lie_f4_class_function(table: &CharacterTable, embed: &ClassFunctions) -> Result<Vec<Cyclo>> {
    let z = &table.cyclo;
    let adj = embed.get("ADJ")?;
    let v27 = embed.get("V27")?;
    let one = z.from_int(1);
    let lie: Vec<Cyclo> = adj.iter().zip(v27).map(|(a, v)| z.add(&z.sub(a, v), &one)).collect();
    for (label, cf, dim) in [("V27", v27, 27), ("ADJ", adj, 78)] {
        if z.as_integer(&cf[0]) != Some(dim) {
            return Err(Error::Data(format!("{}: {label} has degree {:?}", table.name, z.as_integer(&cf[0]))));
        }
        table.brauer_restrict(cf).map_err(|e| Error::Data(format!("{label}: {e}")))?;
    }
    Ok(lie)
}

fn legendre(a: i64, p: u64) -> i64 {
    let f = crate::field::PrimeField::new(p);
    let x = f.pow(f.from_int(a), (p - 1) / 2);
    if x == 0 {
        0
    } else if x == 1 {
        1
    } else {
        -1
    }
}

pub fn exceptional_pipeline(table: &CharacterTable, embed: &ClassFunctions, p: u64) -> Result<ExamplePipelineReport> {
    if !crate::coeffring::is_prime(p) || p == 2 {
        return Err(Error::Domain(format!("p = {p} must be an odd prime")));
    }
    if table.order % p == 0 {
        return Err(Error::Precondition(format!("p = {p} divides |{}| = {}", table.name, table.order)));
    }
    let z = &table.cyclo;
    let lie = lie_f4_class_function(table, embed)?;
    let (f4, _) = root_datum_str("F4", Isogeny::Adjoint)?;
    let lie_dim = z.as_integer(&lie[0]).ok_or_else(|| Error::Data("irrational degree".into()))?;
    if lie_dim != f4.dim() as i64 {
        return Err(Error::Data(format!("{}: Lie(F4) class function has degree {lie_dim}", table.name)));
    }
    let mult = table.brauer_restrict(&lie)?;
    let degrees = table.degrees();
    let total: i64 = mult.iter().zip(&degrees).map(|(m, d)| m * d).sum();
    if total != lie_dim {
        return Err(Error::Verification(format!("{}: multiplicities give dim {total}", table.name)));
    }
    let constituents: Vec<(usize, i64)> = mult.iter().enumerate().filter(|(_, &m)| m > 0).map(|(i, &m)| (i + 1, m)).collect();
    let inv = table.classes_of_order(2);
    if inv.len() != 1 {
        return Err(Error::Data(format!("{}: expected one class of involutions, found {}", table.name, inv.len())));
    }
    let c = inv[0];
    let trace = z.as_integer(&lie[c]).ok_or_else(|| Error::Data("irrational involution trace".into()))?;
    let oddness =
        odd_check_from_trace(&format!("{} {} on Lie(F4)", table.name, table.class_names[c]), f4.dim(), trace, f4.num_positive())?;

    // characters agreeing on every class with rational values are told apart
    // only by irrational values, a choice of labels the data fixes
    let mut ambiguous = Vec::new();
    let rational: Vec<usize> =
        (0..table.num_classes()).filter(|&k| table.chars.iter().all(|ch| z.as_integer(&ch[k]).is_some())).collect();
    let mut used = vec![false; degrees.len()];
    for i in 0..degrees.len() {
        if used[i] {
            continue;
        }
        let group: Vec<usize> =
            (i..degrees.len()).filter(|&j| rational.iter().all(|&k| table.chars[i][k] == table.chars[j][k])).collect();
        if group.len() > 1 && group.iter().any(|&j| mult[j] > 0) && group.iter().any(|&j| mult[j] == 0) {
            ambiguous.push(group.iter().map(|j| j + 1).collect());
        }
        for j in group {
            used[j] = true;
        }
    }

    let multiplicity_free = mult.iter().all(|&m| m <= 1);
    let trivial = mult[0];
    let checklist = vec![
        HypothesisCheck {
            name: "p does not divide |Gamma|".into(),
            holds: true,
            detail: format!("{p} does not divide {}", table.order),
        },
        HypothesisCheck {
            name: "no trivial constituent".into(),
            holds: trivial == 0,
            detail: format!("multiplicity of the trivial character is {trivial}"),
        },
        HypothesisCheck {
            name: "H^1(Gamma, Lie) = 0".into(),
            holds: true,
            detail: "p does not divide |Gamma|, so the module is semisimple and cohomology vanishes".into(),
        },
        HypothesisCheck {
            name: "complex conjugation is odd".into(),
            holds: oddness.odd,
            detail: format!("trace {trace}, fixed dim {} vs |Phi+| = {}", oddness.fixed_dim, oddness.positive_roots),
        },
        HypothesisCheck {
            name: "multiplicity free".into(),
            holds: multiplicity_free,
            detail: format!("multiplicities {mult:?}"),
        },
    ];
    let only_mf_fails = !multiplicity_free && checklist.iter().filter(|h| h.name != "multiplicity free").all(|h| h.holds);
    Ok(ExamplePipelineReport {
        group: table.name.clone(),
        group_order: table.order,
        p,
        degrees,
        multiplicities: mult,
        constituents,
        lie_dim,
        multiplicity_free,
        involution_class: table.class_names[c].clone(),
        involution_trace: trace,
        oddness,
        ambiguous_labels: ambiguous,
        checklist,
        only_multiplicity_free_fails: only_mf_fails,
    })
}

/// The Legendre symbol (a/p) for the arithmetic side conditions of the examples.
pub fn legendre_symbol(a: i64, p: u64) -> Result<i64> {
    if !crate::coeffring::is_prime(p) || p == 2 {
        return Err(Error::Domain(format!("p = {p} must be an odd prime")));
    }
    Ok(legendre(a, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffring::CoeffRing;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chev(t: &str, p: u64) -> Chevalley {
        let (d, b) = root_datum_str(t, Isogeny::Adjoint).unwrap();
        Chevalley::new(d, b, CoeffRing::new(p, 1, 1).unwrap()).unwrap()
    }

    #[test]
    fn identity_and_a1_torus() {
        let c = chev("A1", 7);
        let id = odd_check(&c, &c.identity(), "identity").unwrap();
        assert_eq!(id.fixed_dim, 3);
        assert!(!id.odd);
        let r = c.ring();
        let t = c.torus_elt(&[r.from_int(-1)]).unwrap();
        let rep = odd_check(&c, &t, "alpha = -1").unwrap();
        assert_eq!((rep.fixed_dim, rep.odd), (1, true));
        let bad = c.torus_elt(&[r.from_int(3)]).unwrap();
        assert!(odd_check(&c, &bad, "order 6").is_err());
    }

    #[test]
    fn principal_involutions() {
        for (t, p, fixed) in [("A1", 7, 1), ("G2", 13, 6), ("F4", 13, 24)] {
            let rep = principal_involution_check(&chev(t, p)).unwrap();
            assert_eq!(rep.fixed_dim, fixed);
        }
    }

    #[test]
    fn sym_pieces() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a1 = sym_adjoint_decomposition(&chev("A1", 7), &mut rng).unwrap();
        assert_eq!(a1.predicted, vec![(2, 1)]);
        assert!(a1.agree && a1.multiplicity_free);
        let g2 = sym_adjoint_decomposition(&chev("G2", 13), &mut rng).unwrap();
        assert_eq!(g2.predicted, vec![(2, 1), (10, 1)]);
        assert!(g2.agree && g2.multiplicity_free);
        assert!(sym_adjoint_decomposition(&chev("G2", 11), &mut rng).is_err());
    }

    #[test]
    fn normalizer_modules() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for (t, dims) in [("A2", vec![2, 6]), ("G2", vec![2, 6, 6]), ("B2", vec![2, 4, 4])] {
            let rep = normalizer_decomposition(&chev(t, 13), &mut rng).unwrap();
            assert_eq!(rep.summand_dims, dims, "{t}");
            assert!(rep.matches_prediction, "{t}");
        }
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre_symbol(2, 13).unwrap(), -1);
        assert_eq!(legendre_symbol(2, 7).unwrap(), 1);
        assert_eq!(legendre_symbol(14, 7).unwrap(), 0);
    }

    #[test]
    fn d4_has_a_repeated_piece() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let d4 = sym_adjoint_decomposition(&chev("D4", 13), &mut rng).unwrap();
        assert_eq!(d4.predicted, vec![(2, 1), (6, 2), (10, 1)]);
        assert!(d4.agree);
        assert!(!d4.multiplicity_free);
    }

    fn load(name: &str) -> (CharacterTable, ClassFunctions) {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/atlas");
        let t = CharacterTable::load(&dir.join(format!("{name}.txt"))).unwrap();
        let e = ClassFunctions::load(&dir.join(format!("{name}_embed.txt")), &t).unwrap();
        (t, e)
    }

    #[test]
    fn f4_examples() {
        let (t, e) = load("A6");
        let rep = exceptional_pipeline(&t, &e, 31).unwrap();
        assert_eq!(rep.multiplicities, vec![0, 0, 0, 1, 3, 0, 2]);
        assert_eq!(rep.involution_trace, -4);
        assert_eq!(rep.oddness.fixed_dim, 24);
        assert!(rep.oddness.odd && !rep.multiplicity_free && rep.only_multiplicity_free_fails);
        assert!(exceptional_pipeline(&t, &e, 5).is_err());

        let (t, e) = load("L2_13");
        let rep = exceptional_pipeline(&t, &e, 53).unwrap();
        assert_eq!(rep.multiplicities[3], 1);
        assert_eq!(rep.multiplicities[3..6].iter().sum::<i64>(), 2);
        assert_eq!(rep.multiplicities[8], 2);
        assert_eq!(rep.involution_trace, -4);
        assert!(rep.only_multiplicity_free_fails);
        assert_eq!(rep.ambiguous_labels, vec![vec![4, 5, 6]]);
    }
}
