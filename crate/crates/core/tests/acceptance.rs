//! Acceptance run: one PASS/FAIL line per criterion.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use chevlift::chevgroup::{image_growth_check, levi_certificate, matrix_identity_check, Chevalley};
use chevlift::coeffring::CoeffRing;
use chevlift::error::Result;
use chevlift::field::{Field, GaloisField, PrimeField};
use chevlift::galoismod::{CharacterTable, ClassFunctions};
use chevlift::linalg;
use chevlift::localconds::{
    augment_with_center, fixed_multiplier_restrict, smoothness_probe, ExtraKind, OrdinaryModel, TameLocalModel, Variant,
};
use chevlift::oddness::{exceptional_pipeline, sym_adjoint_decomposition};
use chevlift::ringmat;
use chevlift::rootdata::{levi_bound, phi_alpha, root_datum_str, Isogeny};
use chevlift::selmer::{
    annihilation_loop, build_synthetic_model, doubling_solve, lifting_driver, selmer_compute, trivial_primes, DoublingOptions,
    ModelBuild, ModelSpec, Place,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LOW_RANK: [&str; 4] = ["A1", "A2", "B2", "G2"];
const GRID_PRIMES: [u64; 3] = [5, 7, 13];

fn chev(t: &str, p: u64, m: u32) -> Result<Chevalley> {
    let (d, b) = root_datum_str(t, Isogeny::Adjoint)?;
    Chevalley::new(d, b, CoeffRing::new(p, m, 1)?)
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

/// Tame models at the first trivial prime for p.
fn tame(t: &str, p: u64, m: u32) -> Result<TameLocalModel> {
    TameLocalModel::new(chev(t, p, m)?, trivial_primes(p, 1)[0])
}

fn matrix_identity() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut total = 0;
    let mut bad = 0;
    for p in GRID_PRIMES {
        for m in 3..=5 {
            let ring = CoeffRing::new(p, m, 1)?;
            for n in 1..=8 {
                for _ in 0..1000 {
                    let x = ringmat::random(&ring, n, n, &mut rng);
                    let a = ringmat::random(&ring, n, n, &mut rng);
                    let b = ringmat::random(&ring, n, n, &mut rng);
                    total += 1;
                    if !matrix_identity_check(&ring, &x, &a, &b)? {
                        bad += 1;
                    }
                }
            }
        }
    }
    outcome(bad == 0, format!("{} of {total} instances exact", total - bad))
}

fn stability() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut checks, mut bad) = (0, 0);
    for t in LOW_RANK {
        for p in GRID_PRIMES {
            for m in 3..=4 {
                let md = tame(t, p, m)?;
                let d = md.ch.datum().clone();
                for alpha in 0..d.num_roots() {
                    let frob = md.frobenius_values(alpha, &mut rng)?;
                    for (variant, kind) in [(Variant::Unr2, ExtraKind::Unr), (Variant::Ram2, ExtraKind::Ram)] {
                        let nf = md.sample_normal_form(alpha, variant, Some(&frob), &mut rng)?;
                        let rho = md.lift_from_normal_form(&nf)?;
                        for beta in phi_alpha(&d, md.ch.basis(), alpha)? {
                            checks += 1;
                            if !md.stability_check(&rho, alpha, beta, kind)?.1 {
                                bad += 1;
                            }
                        }
                    }
                }
                // ordinary frame, f = 1
                let om = OrdinaryModel::new(md.ch.clone(), 1)?;
                let (chi, rho) = om.sample_member(&mut rng)?;
                for beta in (0..d.num_roots()).filter(|&b| !d.is_positive(b)) {
                    checks += 1;
                    if !om.stability_check(&rho, &chi, beta)?.1 {
                        bad += 1;
                    }
                }
            }
        }
    }
    outcome(bad == 0, format!("{} of {checks} conjugators exact", checks - bad))
}

fn dimensions() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut checks, mut bad) = (0, 0);
    for t in LOW_RANK {
        for p in GRID_PRIMES {
            for m in 3..=4 {
                let md = tame(t, p, m)?;
                let f = md.field().clone();
                let dim = md.dim();
                for alpha in 0..md.ch.datum().num_roots() {
                    let frob = md.frobenius_values(alpha, &mut rng)?;
                    let nf = md.sample_normal_form(alpha, Variant::Ram2, Some(&frob), &mut rng)?;
                    let rho = md.lift_from_normal_form(&nf)?;
                    for (kind, rho2) in [(ExtraKind::Unr, None), (ExtraKind::Ram, Some(&rho))] {
                        let s = md.condition_spaces(alpha, kind, rho2)?;
                        checks += 1;
                        bad += (s.l.nrows() != dim) as usize;
                        // g' = g_mu + a with a central of dimension 1 or 2
                        for a_dim in 1..=2 {
                            let aug = augment_with_center(&f, &s.l, dim, a_dim);
                            let res = fixed_multiplier_restrict(&f, &aug, dim + a_dim, a_dim, 2)?;
                            checks += 1;
                            bad += (res.nrows() != dim) as usize;
                        }
                    }
                }
                let d = md.ch.datum();
                let (nb, nn) = (d.rank() + d.num_positive(), d.num_positive());
                for fd in 1..=3 {
                    let om = OrdinaryModel::new(md.ch.clone(), fd)?;
                    let (chi, _) = om.sample_member(&mut rng)?;
                    let s = om.spaces(&chi)?;
                    checks += 2;
                    bad += (s.tan.nrows() != nb + fd * nn) as usize;
                    bad += (s.l.nrows() != dim + fd * nn) as usize;
                }
            }
        }
    }
    outcome(bad == 0, format!("{} of {checks} dimension equalities", checks - bad))
}

fn duality() -> Result<Outcome> {
    let (mut checks, mut bad) = (0, 0);
    for t in LOW_RANK {
        for p in GRID_PRIMES {
            for m in 3..=4 {
                let md = tame(t, p, m)?;
                let f = md.field().clone();
                checks += 1;
                bad += (linalg::rank(&f, &md.pairing_gram()) != 2 * md.dim()) as usize;
                for alpha in 0..md.ch.datum().num_roots() {
                    let s = md.condition_spaces(alpha, ExtraKind::Unr, None)?;
                    checks += 1;
                    bad += (!(s.perp_matches_description && linalg::same_span(&f, &s.l_perp, &s.perp_description))) as usize;
                }
            }
        }
    }
    outcome(bad == 0, format!("{} of {checks} perfectness and annihilator checks", checks - bad))
}

fn f4_examples() -> Result<Outcome> {
    let dir = data_dir().join("atlas");
    let load = |name: &str| -> Result<(CharacterTable, ClassFunctions)> {
        let t = CharacterTable::load(&dir.join(format!("{name}.txt")))?;
        let e = ClassFunctions::load(&dir.join(format!("{name}_embed.txt")), &t)?;
        Ok((t, e))
    };
    let (t, e) = load("A6")?;
    let a6 = exceptional_pipeline(&t, &e, 31)?;
    let (t, e) = load("L2_13")?;
    let l2 = exceptional_pipeline(&t, &e, 53)?;
    let mults = (a6.multiplicities[3], a6.multiplicities[4], a6.multiplicities[6]);
    let pass = a6.involution_trace == -4
        && a6.oddness.fixed_dim == 24
        && a6.oddness.positive_roots == 24
        && mults == (1, 3, 2)
        && !a6.multiplicity_free
        && l2.involution_trace == -4
        && !l2.multiplicity_free
        && l2.multiplicities.contains(&2);
    outcome(
        pass,
        format!(
            "A6 trace {} fixed {} mults {:?}; PSL2(13) mults {:?}",
            a6.involution_trace, a6.oddness.fixed_dim, mults, l2.multiplicities
        ),
    )
}

fn principal_sl2() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut notes = Vec::new();
    let mut pass = true;
    for t in ["A1", "A2", "A3", "B2", "G2", "D4"] {
        for p in [13u64, 17] {
            let rep = sym_adjoint_decomposition(&chev(t, p, 1)?, &mut rng)?;
            pass &= rep.agree;
            if t == "D4" {
                pass &= !rep.multiplicity_free;
            }
            if p == 13 {
                notes.push(format!("{t}:{}", if rep.multiplicity_free { "mf" } else { "not-mf" }));
            }
        }
    }
    outcome(pass, notes.join(" "))
}

fn smoothness() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut total, mut lifted) = (0, 0);
    for t in ["A1", "A2"] {
        for p in [5u64, 7] {
            for m in 2..=3 {
                let md = tame(t, p, m)?;
                let alpha = md.ch.datum().simple(0);
                for v in [Variant::Plain, Variant::Unr2, Variant::Ram2] {
                    let rep = smoothness_probe(&md, alpha, v, 100, &mut rng)?;
                    total += rep.samples;
                    lifted += rep.lifted;
                }
            }
        }
    }
    outcome(lifted == total, format!("{lifted} of {total} sampled lifts extend"))
}

fn selmer_engine() -> Result<Outcome> {
    // random balanced models
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut models = 0;
    let mut steps = 0;
    let mut max_local = 0;
    for i in 0..24u64 {
        let (t, p) = if i % 2 == 0 { ("A1", 13) } else { ("A2", 7) };
        let primes = 1 + (i as usize / 2) % 2;
        let classes = rng.gen_range(0..3);
        let mut built = ModelSpec::balanced(t, p, primes, classes, 100 + i)?.build()?;
        max_local = max_local.max(built.model.places.iter().map(|p| p.h1_dim).max().unwrap_or(0));
        let ch = built.chevalley.clone().expect("typed model");
        let trace = annihilation_loop(&mut built.model, &mut built.system, &ch, None, 200 + i, 2000)?;
        let end = selmer_compute(&built.model, &built.system)?;
        if (end.selmer.nrows(), end.dual.nrows()) != (0, 0) {
            return outcome(false, format!("model {i} ends at ({}, {})", end.selmer.nrows(), end.dual.nrows()));
        }
        for s in &trace {
            if s.after.1 >= s.before.1 || s.before.0 - s.after.0 != s.before.1 - s.after.1 {
                return outcome(false, format!("model {i}: step {:?} -> {:?}", s.before, s.after));
            }
        }
        steps += trace.len();
        models += 1;
    }
    // exhaustive doubling on toy models
    let mut targets = 0;
    let f = GaloisField::new(5, 1)?;
    let toys: Vec<(usize, usize)> = vec![(1, 1), (1, 2), (2, 1)];
    for (dim, primes) in toys {
        let places = trivial_primes(5, primes).into_iter().map(|q| Place::trivial(&format!("q{q}"), &f, dim, q, None)).collect();
        let build = ModelBuild {
            places,
            global_h0: dim,
            global_h0_dual: dim,
            archimedean_h0: 0,
            prescribed: vec![],
            prescribed_dual: vec![],
            structure: None,
        };
        let model = build_synthetic_model(&f, dim, build, &mut rng)?;
        let total = model.total_dim();
        for _ in 0..8 {
            let z: Vec<_> = (0..total).map(|_| f.random(&mut rng)).collect();
            let opts = DoublingOptions { exhaustive: true, seed: rng.gen(), ..Default::default() };
            let r = doubling_solve(&model, &z, &opts)?;
            if !r.verified || r.restriction != z {
                return outcome(false, "doubling missed its target");
            }
            targets += 1;
        }
    }
    // end-to-end lifting on the A1 model
    let mut built = ModelSpec::load(&data_dir().join("models/toy_a1.json"))?.build()?;
    let ch = built.chevalley.clone().expect("typed model");
    annihilation_loop(&mut built.model, &mut built.system, &ch, None, 9, 2000)?;
    let lift = lifting_driver(&built.model, &built.system, 5, 10)?;
    let exact = lift.levels.len() == 3 && lift.levels.iter().all(|l| l.places.iter().all(|p| p.membership && p.relation));
    outcome(
        exact && models >= 20 && max_local <= 16,
        format!(
            "{models} models killed in {steps} steps (local dims <= {max_local}); {targets} doubling targets exact; lift to p^5 over {} places",
            built.model.places.len()
        ),
    )
}

fn image_growth() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut pass = true;
    for p in [5u64, 7] {
        for n in 2..=4 {
            pass &= image_growth_check(p, n, 4, 500, &mut rng)?;
        }
    }
    outcome(pass, "3000 instances over p in {5,7}, n in {2,3,4}")
}

fn levi() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut notes = Vec::new();
    let mut pass = true;
    for t in ["A1", "A2", "B2"] {
        let (d, _) = root_datum_str(t, Isogeny::Adjoint)?;
        let lb = levi_bound(&d)?;
        let a = levi_certificate(&d, &lb, &PrimeField::new(31), 200, &mut rng)?;
        let b = levi_certificate(&d, &lb, &GaloisField::new(11, 2)?, 200, &mut rng)?;
        pass &= a.passed == a.samples && b.passed == b.samples;
        notes.push(format!("{t}: n' = {}", lb.n_prime));
    }
    outcome(pass, notes.join(", "))
}

fn main() {
    let criteria: Vec<(&str, Duration, fn() -> Result<Outcome>)> = vec![
        ("matrix identity", Duration::from_secs(10), matrix_identity),
        ("stability conjugators", Duration::from_secs(60), stability),
        ("dimension formulas", Duration::from_secs(600), dimensions),
        ("local duality", Duration::from_secs(600), duality),
        ("F4 examples", Duration::from_secs(5), f4_examples),
        ("principal SL2 decompositions", Duration::from_secs(120), principal_sl2),
        ("smoothness probes", Duration::from_secs(600), smoothness),
        ("synthetic Selmer engine", Duration::from_secs(600), selmer_engine),
        ("image growth", Duration::from_secs(600), image_growth),
        ("Levi bound", Duration::from_secs(600), levi),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let res = run();
        let took = start.elapsed();
        let (pass, detail) = match res {
            Ok(o) => (o.pass && took <= limit, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !pass as usize;
        println!(
            "{} {:>2} {name}: {detail} [{:.2}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
