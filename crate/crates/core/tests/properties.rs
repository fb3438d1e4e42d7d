use chevlift::chevgroup::Chevalley;
use chevlift::coeffring::{sqrt_one_mod_p, CoeffRing};
use chevlift::field::{Field, GaloisField};
use chevlift::galoismod::{
    cohomology, composition_factors, decompose, evaluate_cocycle, irreducibles_isomorphic, permutation_matrix, CharacterTable,
    GroupPresentation, MatrixModule,
};
use chevlift::linalg::{self, FMat};
use chevlift::oddness::odd_check;
use chevlift::rootdata::{phi_alpha, root_datum_str, Isogeny};
use chevlift::selmer::{doubling_solve, selmer_compute, splitcase_search, DoublingOptions, ModelSpec, SplitcaseRequest};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Mat = FMat<GaloisField>;

fn chev(t: &str, p: u64, m: u32) -> Chevalley {
    let (d, b) = root_datum_str(t, Isogeny::Adjoint).unwrap();
    Chevalley::new(d, b, CoeffRing::new(p, m, 1).unwrap()).unwrap()
}

fn random_group_element(ch: &Chevalley, rng: &mut ChaCha8Rng) -> chevlift::chevgroup::GroupElement {
    let n = ch.datum().num_roots();
    (0..6).fold(ch.identity(), |g, _| {
        let b = rng.gen_range(0..n);
        ch.mul(&g, &ch.u_alpha(b, &ch.ring().random(rng)))
    })
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn reduction_is_multiplicative(seed in any::<u64>(), pi in 0usize..3, m in 2u32..6, r in 1usize..4, k in 1u32..5) {
        let p = [5u64, 7, 13][pi];
        let ring = CoeffRing::new(p, m, r).unwrap();
        let low = ring.reduced(k.min(m)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = ring.random(&mut rng);
        let y = ring.random(&mut rng);
        let lhs = ring.reduce_into(&ring.mul(&x, &y), &low);
        let rhs = low.mul(&ring.reduce_into(&x, &low), &ring.reduce_into(&y, &low));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn square_root_of_one_mod_p_units(seed in any::<u64>(), pi in 0usize..3, m in 2u32..6) {
        let p = [5u64, 7, 13][pi];
        let ring = CoeffRing::new(p, m, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = ring.add(&ring.one(), &ring.mul_p_pow(&ring.random(&mut rng), 1));
        let s = sqrt_one_mod_p(&ring, &q).unwrap();
        prop_assert_eq!(ring.mul(&s, &s), q);
        prop_assert!(ring.valuation(&ring.sub(&s, &ring.one())) >= 1);
    }

    #[test]
    fn trace_form_is_invariant(seed in any::<u64>(), ti in 0usize..4) {
        let t = ["A1", "A2", "B2", "G2"][ti];
        let ch = chev(t, 7, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_group_element(&ch, &mut rng);
        let x = ch.random_lie(&mut rng);
        let y = ch.random_lie(&mut rng);
        prop_assert_eq!(ch.trace_form(&ch.apply(&g, &x), &ch.apply(&g, &y)), ch.trace_form(&x, &y));
        prop_assert_eq!(ch.apply(&g, &ch.bracket(&x, &y)), ch.bracket(&ch.apply(&g, &x), &ch.apply(&g, &y)));
    }

    #[test]
    fn root_elements_are_additive(seed in any::<u64>(), ti in 0usize..4) {
        let t = ["A1", "A2", "B2", "G2"][ti];
        let ch = chev(t, 13, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = rng.gen_range(0..ch.datum().num_roots());
        let r = ch.ring();
        let x = r.random(&mut rng);
        let y = r.random(&mut rng);
        prop_assert_eq!(ch.mul(&ch.u_alpha(b, &x), &ch.u_alpha(b, &y)).mat, ch.u_alpha(b, &r.add(&x, &y)).mat);
    }

    #[test]
    fn involutions_fix_at_least_the_flag_dimension(signs in proptest::collection::vec(any::<bool>(), 4), ti in 0usize..5) {
        let t = ["A1", "A2", "B2", "G2", "A3"][ti];
        let ch = chev(t, 7, 1);
        let r = ch.ring();
        let rank = ch.datum().rank();
        let vals: Vec<_> = signs[..rank].iter().map(|&s| r.from_int(if s { -1 } else { 1 })).collect();
        let theta = ch.torus_elt(&vals).unwrap();
        let rep = odd_check(&ch, &theta, "sign torus").unwrap();
        prop_assert!(rep.fixed_dim >= rep.positive_roots);
        prop_assert_eq!(rep.odd, rep.fixed_dim == rep.positive_roots);
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn decomposition_reassembles_after_base_change(seed in any::<u64>()) {
        let f = GaloisField::new(7, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = permutation_matrix(&f, &[1, 0, 3, 2, 4, 5]);
        let b = permutation_matrix(&f, &[1, 2, 4, 5, 0, 3]);
        let c = loop {
            let c = linalg::random_matrix(&f, 6, 6, &mut rng);
            if let Some(ci) = linalg::inverse(&f, &c) {
                break (c, ci);
            }
        };
        let conj = |g: &Mat| linalg::mat_mul(&f, &linalg::mat_mul(&f, &c.0, g), &c.1);
        let m = MatrixModule::new(f.clone(), 6, vec![conj(&a), conj(&b)]).unwrap();
        let d = decompose(&m, &mut rng).unwrap();
        prop_assert!(d.reassembly_verified && d.semisimple);
        prop_assert_eq!(d.signature(), vec![(1, 1), (5, 1)]);
    }

    #[test]
    fn isomorphism_of_factors_is_an_equivalence(seed in any::<u64>()) {
        let f = GaloisField::new(5, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = permutation_matrix(&f, &[1, 2, 0]);
        let base = MatrixModule::new(f.clone(), 3, vec![g]).unwrap();
        let m = base.direct_sum(&base).unwrap();
        let factors = composition_factors(&m, &mut rng).unwrap();
        for x in &factors {
            prop_assert!(irreducibles_isomorphic(x, x).unwrap());
            for y in &factors {
                prop_assert_eq!(irreducibles_isomorphic(x, y).unwrap(), irreducibles_isomorphic(y, x).unwrap());
            }
        }
    }

    #[test]
    fn first_cohomology_cocycles_satisfy_relations(seed in any::<u64>(), n in 1usize..5) {
        let f = GaloisField::new(5, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // unipotent Jordan block conjugated by a random invertible matrix: order 5
        let mut j = linalg::identity(&f, n);
        for i in 0..n.saturating_sub(1) {
            j.set(i, i + 1, f.one());
        }
        let (c, ci) = loop {
            let c = linalg::random_matrix(&f, n, n, &mut rng);
            if let Some(ci) = linalg::inverse(&f, &c) {
                break (c, ci);
            }
        };
        let g = linalg::mat_mul(&f, &linalg::mat_mul(&f, &c, &j), &ci);
        let pres = GroupPresentation::parse(1, "a^5").unwrap();
        let m = MatrixModule::new(f.clone(), n, vec![g]).unwrap();
        let h1 = cohomology(&pres, &m, 1).unwrap();
        prop_assert_eq!(h1.dim, 1);
        for row in h1.basis.row_vecs() {
            for rel in &pres.relations {
                prop_assert!(linalg::is_zero_vec(&f, &evaluate_cocycle(&m, &row, rel)));
            }
        }
    }

    #[test]
    fn brauer_restriction_is_additive(m1 in proptest::collection::vec(0i64..4, 7), m2 in proptest::collection::vec(0i64..4, 7)) {
        let t = CharacterTable::parse(include_str!("../../../data/atlas/A6.txt")).unwrap();
        let sum: Vec<i64> = m1.iter().zip(&m2).map(|(a, b)| a + b).collect();
        let got = t.brauer_restrict(&t.character_of_sum(&sum)).unwrap();
        let a = t.brauer_restrict(&t.character_of_sum(&m1)).unwrap();
        let b = t.brauer_restrict(&t.character_of_sum(&m2)).unwrap();
        let added: Vec<i64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        prop_assert_eq!(&got, &sum);
        prop_assert_eq!(got, added);
    }

    #[test]
    fn extra_roots_are_the_nonzero_brackets(ti in 0usize..4, seed in any::<u64>()) {
        let t = ["A1", "A2", "B2", "G2"][ti];
        let ch = chev(t, 13, 1);
        let d = ch.datum();
        let alpha = ChaCha8Rng::seed_from_u64(seed).gen_range(0..d.num_roots());
        let set = phi_alpha(d, ch.basis(), alpha).unwrap();
        let xa = ch.basis_vec(ch.basis().root_index(alpha));
        for beta in 0..d.num_roots() {
            let br = ch.bracket(&xa, &ch.basis_vec(ch.basis().root_index(beta)));
            let nonzero = !ch.is_zero(&br) || beta == d.neg(alpha);
            prop_assert_eq!(set.contains(&beta), nonzero, "beta {}", beta);
        }
        prop_assert_eq!(2 * d.num_positive(), d.dim() - d.rank());
    }
}

proptest! {
    #![proptest_config(config(10))]

    #[test]
    fn global_images_are_maximal_isotropic(seed in any::<u64>(), ti in 0usize..2, primes in 1usize..3, k in 0usize..3) {
        let (t, p) = [("A1", 13u64), ("A2", 7)][ti];
        let built = ModelSpec::balanced(t, p, primes, k, seed).unwrap().build().unwrap();
        built.model.poitou_tate_check().unwrap();
        let f = &built.model.field;
        let g = built.model.gram();
        let cross = linalg::mat_mul(f, &linalg::mat_mul(f, &built.model.global, &g), &built.model.dual.transpose());
        prop_assert!(cross.data().iter().all(|x| f.is_zero(*x)));
        prop_assert_eq!(built.model.global.nrows() + built.model.dual.nrows(), built.model.total_dim());
    }

    #[test]
    fn auxiliary_prime_steps_keep_the_balance(seed in any::<u64>(), ti in 0usize..2) {
        let (t, p) = [("A1", 13u64), ("A2", 7)][ti];
        let mut built = ModelSpec::balanced(t, p, 1, 1, seed).unwrap().build().unwrap();
        let ch = built.chevalley.clone().unwrap();
        let before = selmer_compute(&built.model, &built.system).unwrap();
        let req = SplitcaseRequest { phi: before.selmer.row(0), psi: before.dual.row(0), eta: None, seed, budget: 2000 };
        let w = splitcase_search(&built.model, &ch, &req).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        chevlift::selmer::install_splitcase(&mut built.model, &mut built.system, &ch, &w, &mut rng).unwrap();
        let after = selmer_compute(&built.model, &built.system).unwrap();
        prop_assert!(after.report.balanced);
        prop_assert_eq!((after.selmer.nrows() + 1, after.dual.nrows() + 1), (before.selmer.nrows(), before.dual.nrows()));
    }

    #[test]
    fn doubling_hits_the_target_exactly(seed in any::<u64>()) {
        let built = ModelSpec::balanced("A1", 13, 1, 0, seed).unwrap().build().unwrap();
        let f = built.model.field.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<_> = (0..built.model.total_dim()).map(|_| f.random(&mut rng)).collect();
        let r = doubling_solve(&built.model, &z, &DoublingOptions { seed, ..Default::default() }).unwrap();
        prop_assert!(r.verified);
        prop_assert_eq!(r.restriction, z);
    }
}
