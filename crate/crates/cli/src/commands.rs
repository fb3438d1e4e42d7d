//! Subcommand bodies. Each returns its assertions and a JSON result payload.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use chevlift::chevgroup::{levi_certificate, matrix_identity_check, Chevalley};
use chevlift::coeffring::CoeffRing;
use chevlift::error::{Error, Result};
use chevlift::field::{Field, GaloisField};
use chevlift::galoismod::{
    cohomology, decompose, evaluate_cocycle, permutation_matrix, CharacterTable, ClassFunctions, GroupPresentation, MatrixModule,
};
use chevlift::linalg;
use chevlift::localconds::{augment_with_center, fixed_multiplier_restrict, ExtraKind, OrdinaryModel, TameLocalModel, Variant};
use chevlift::oddness::{
    exceptional_pipeline, normalizer_decomposition, odd_check, principal_involution, principal_sl2_module,
    sym_adjoint_decomposition,
};
use chevlift::ringmat;
use chevlift::rootdata::{levi_bound, phi_alpha, root_datum_str, Isogeny};
use chevlift::selmer::{
    annihilation_loop, doubling_solve, lifting_driver, selmer_compute, trivial_primes, BuiltModel, DoublingOptions, ModelSpec,
};

use crate::config::RunConfig;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Assertion {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Assertion { name: name.into(), pass, detail: detail.into() }
    }
}

pub struct Outcome {
    pub assertions: Vec<Assertion>,
    pub results: Value,
}

/// Independent stream for job `index` of a batch.
fn job_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn chev(t: &str, p: u64, m: u32) -> Result<Chevalley> {
    let (d, b) = root_datum_str(t, Isogeny::Adjoint)?;
    Chevalley::new(d, b, CoeffRing::new(p, m, 1)?)
}

fn grid<'a>(cfg: &'a RunConfig) -> Vec<(&'a str, u64, u32)> {
    let mut out = Vec::new();
    for t in &cfg.types {
        for &p in &cfg.primes {
            for &m in &cfg.precisions {
                out.push((t.as_str(), p, m));
            }
        }
    }
    out
}

fn type_primes(cfg: &RunConfig) -> Vec<(&str, u64)> {
    cfg.types.iter().flat_map(|t| cfg.primes.iter().map(move |&p| (t.as_str(), p))).collect()
}

fn require_types(cfg: &RunConfig) -> Result<()> {
    if cfg.types.is_empty() {
        return Err(Error::Parse("at least one Cartan type is required (--types)".into()));
    }
    Ok(())
}

/// Tame model at the given trivial prime, or the first one for p.
fn tame(cfg: &RunConfig, t: &str, p: u64, m: u32) -> Result<TameLocalModel> {
    let q = cfg.q.unwrap_or_else(|| trivial_primes(p, 1)[0]);
    TameLocalModel::new(chev(t, p, m)?, q)
}

fn roots_of(cfg: &RunConfig, n: usize) -> Result<Vec<usize>> {
    match cfg.alpha {
        Some(a) if a >= n => Err(Error::Parse(format!("alpha = {a} but there are only {n} roots"))),
        Some(a) => Ok(vec![a]),
        None => Ok((0..n).collect()),
    }
}

pub fn matrix_identity(cfg: &RunConfig) -> Result<Outcome> {
    let jobs: Vec<(u64, u32)> = cfg.primes.iter().flat_map(|&p| cfg.precisions.iter().map(move |&m| (p, m))).collect();
    let rows = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(p, m))| {
            let ring = CoeffRing::new(p, m, 1)?;
            let mut rng = job_rng(cfg.seed, i);
            let mut exact = Vec::new();
            for n in 1..=cfg.size {
                let mut ok = 0;
                for _ in 0..cfg.samples {
                    let x = ringmat::random(&ring, n, n, &mut rng);
                    let a = ringmat::random(&ring, n, n, &mut rng);
                    let b = ringmat::random(&ring, n, n, &mut rng);
                    ok += matrix_identity_check(&ring, &x, &a, &b)? as usize;
                }
                exact.push(ok);
            }
            Ok((p, m, exact))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut assertions = Vec::new();
    let mut results = Vec::new();
    for (p, m, exact) in rows {
        let total = cfg.samples * cfg.size;
        let ok: usize = exact.iter().sum();
        assertions.push(Assertion::new(format!("matrix identity p={p} m={m}"), ok == total, format!("{ok} of {total} exact")));
        results.push(json!({ "p": p, "m": m, "exact_by_size": exact, "samples_per_size": cfg.samples }));
    }
    Ok(Outcome { assertions, results: Value::Array(results) })
}

pub fn stability(cfg: &RunConfig) -> Result<Outcome> {
    require_types(cfg)?;
    let points = grid(cfg);
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, &(t, p, m))| {
            let mut rng = job_rng(cfg.seed, i);
            let md = tame(cfg, t, p, m)?;
            let d = md.ch.datum().clone();
            let (mut checks, mut good) = (0usize, 0usize);
            for alpha in roots_of(cfg, d.num_roots())? {
                let frob = md.frobenius_values(alpha, &mut rng)?;
                for (variant, kind) in [(Variant::Unr2, ExtraKind::Unr), (Variant::Ram2, ExtraKind::Ram)] {
                    let nf = md.sample_normal_form(alpha, variant, Some(&frob), &mut rng)?;
                    let rho = md.lift_from_normal_form(&nf)?;
                    for beta in phi_alpha(&d, md.ch.basis(), alpha)? {
                        checks += 1;
                        good += md.stability_check(&rho, alpha, beta, kind)?.1 as usize;
                    }
                }
            }
            let (mut ord_checks, mut ord_good) = (0usize, 0usize);
            for f in 1..=cfg.f_degree {
                let om = OrdinaryModel::new(md.ch.clone(), f)?;
                let (chi, rho) = om.sample_member(&mut rng)?;
                for beta in (0..d.num_roots()).filter(|&b| !d.is_positive(b)) {
                    ord_checks += 1;
                    ord_good += om.stability_check(&rho, &chi, beta)?.1 as usize;
                }
            }
            Ok((t, p, m, checks, good, ord_checks, ord_good))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut assertions = Vec::new();
    let mut results = Vec::new();
    for (t, p, m, checks, good, oc, og) in rows {
        assertions.push(Assertion::new(
            format!("tame stability {t} p={p} m={m}"),
            good == checks,
            format!("{good} of {checks} exact"),
        ));
        assertions.push(Assertion::new(format!("ordinary stability {t} p={p} m={m}"), og == oc, format!("{og} of {oc} exact")));
        results.push(json!({ "type": t, "p": p, "m": m, "tame": [good, checks], "ordinary": [og, oc] }));
    }
    Ok(Outcome { assertions, results: Value::Array(results) })
}

pub fn duality(cfg: &RunConfig) -> Result<Outcome> {
    require_types(cfg)?;
    let rows = grid(cfg)
        .par_iter()
        .map(|&(t, p, m)| {
            let md = tame(cfg, t, p, m)?;
            let f = md.field().clone();
            let rank = linalg::rank(&f, &md.pairing_gram());
            let mut matches = 0;
            let roots = roots_of(cfg, md.ch.datum().num_roots())?;
            for &alpha in &roots {
                let s = md.condition_spaces(alpha, ExtraKind::Unr, None)?;
                matches += (s.perp_matches_description && linalg::same_span(&f, &s.l_perp, &s.perp_description)) as usize;
            }
            Ok((t, p, m, md.dim(), rank, matches, roots.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut assertions = Vec::new();
    let mut results = Vec::new();
    for (t, p, m, dim, rank, matches, roots) in rows {
        assertions.push(Assertion::new(
            format!("perfect pairing {t} p={p} m={m}"),
            rank == 2 * dim,
            format!("Gram rank {rank}, 2 dim = {}", 2 * dim),
        ));
        assertions.push(Assertion::new(
            format!("annihilator {t} p={p} m={m}"),
            matches == roots,
            format!("{matches} of {roots} roots match the explicit description"),
        ));
        results.push(
            json!({ "type": t, "p": p, "m": m, "gram_rank": rank, "dim": dim, "annihilator_matches": matches, "roots": roots }),
        );
    }
    Ok(Outcome { assertions, results: Value::Array(results) })
}

pub fn spaces(cfg: &RunConfig) -> Result<Outcome> {
    require_types(cfg)?;
    let points = grid(cfg);
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, &(t, p, m))| {
            let mut rng = job_rng(cfg.seed, i);
            let md = tame(cfg, t, p, m)?;
            let f = md.field().clone();
            let dim = md.dim();
            let mut assertions = Vec::new();
            let mut per_root = Vec::new();
            for alpha in roots_of(cfg, md.ch.datum().num_roots())? {
                let frob = md.frobenius_values(alpha, &mut rng)?;
                let nf = md.sample_normal_form(alpha, Variant::Ram2, Some(&frob), &mut rng)?;
                let rho = md.lift_from_normal_form(&nf)?;
                let unr = md.condition_spaces(alpha, ExtraKind::Unr, None)?;
                let ram = md.condition_spaces(alpha, ExtraKind::Ram, Some(&rho))?;
                let mut fixed = Vec::new();
                for a_dim in 1..=2 {
                    let aug = augment_with_center(&f, &ram.l, dim, a_dim);
                    fixed.push(fixed_multiplier_restrict(&f, &aug, dim + a_dim, a_dim, 2)?.nrows());
                }
                let ok = unr.l.nrows() == dim && ram.l.nrows() == dim && fixed.iter().all(|&n| n == dim);
                assertions.push(Assertion::new(
                    format!("tame dimensions {t} p={p} m={m} root={alpha}"),
                    ok,
                    format!(
                        "unramified {}, ramified {}, fixed multiplier {:?}, expected {dim}",
                        unr.l.nrows(),
                        ram.l.nrows(),
                        fixed
                    ),
                ));
                per_root.push(
                    json!({ "alpha": alpha, "unramified": unr.l.nrows(), "ramified": ram.l.nrows(), "fixed_multiplier": fixed }),
                );
            }
            let d = md.ch.datum();
            let (nb, nn) = (d.rank() + d.num_positive(), d.num_positive());
            let mut ordinary = Vec::new();
            for fd in 1..=cfg.f_degree {
                let om = OrdinaryModel::new(md.ch.clone(), fd)?;
                let (chi, _) = om.sample_member(&mut rng)?;
                let s = om.spaces(&chi)?;
                let (tan, l) = (s.tan.nrows(), s.l.nrows());
                assertions.push(Assertion::new(
                    format!("ordinary dimensions {t} p={p} m={m} f={fd}"),
                    tan == nb + fd * nn && l == dim + fd * nn,
                    format!("tangent {tan} (expected {}), condition {l} (expected {})", nb + fd * nn, dim + fd * nn),
                ));
                ordinary.push(json!({ "f": fd, "tangent": tan, "condition": l }));
            }
            let res = json!({ "type": t, "p": p, "m": m, "dim": dim, "tame": per_root, "ordinary": ordinary });
            Ok((assertions, res))
        })
        .collect::<Result<Vec<_>>>()?;
    let (assertions, results): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(Outcome { assertions: assertions.into_iter().flatten().collect(), results: Value::Array(results) })
}

pub fn decompose_adjoint(cfg: &RunConfig) -> Result<Outcome> {
    require_types(cfg)?;
    let jobs = type_primes(cfg);
    let rows = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(t, p))| {
            let mut rng = job_rng(cfg.seed, i);
            let ch = chev(t, p, 1)?;
            let module = principal_sl2_module(&ch)?;
            let dec = decompose(&module, &mut rng)?;
            let sig = dec.signature();
            let total: usize = sig.iter().map(|(d, k)| d * k).sum();
            let ok = total == ch.dim() && (!dec.semisimple || dec.reassembly_verified);
            let a = Assertion::new(
                format!("adjoint over principal SL2 {t} p={p}"),
                ok,
                format!("constituents {sig:?} sum to {total} of {}", ch.dim()),
            );
            let res = json!({
                "type": t, "p": p, "signature": sig, "semisimple": dec.semisimple,
                "multiplicity_free": dec.multiplicity_free, "contains_trivial": dec.contains_trivial,
                "reassembly_verified": dec.reassembly_verified,
            });
            Ok((a, res))
        })
        .collect::<Result<Vec<_>>>()?;
    let (assertions, results): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(Outcome { assertions, results: Value::Array(results) })
}

/// Permutation generators and presentation of the chosen finite group.
fn group_data(cfg: &RunConfig) -> Result<(String, Vec<Vec<usize>>, GroupPresentation)> {
    match cfg.group.as_str() {
        "a6" | "A6" => Ok((
            "A6".into(),
            vec![vec![1, 0, 3, 2, 4, 5], vec![1, 2, 4, 5, 0, 3]],
            GroupPresentation::parse(2, "a^2, b^4, (ab)^5, (ab^2)^5")?,
        )),
        "cyclic" => {
            let n = cfg.size;
            if n < 1 {
                return Err(Error::Parse("cyclic group order must be positive".into()));
            }
            let cycle = (0..n).map(|i| (i + 1) % n).collect();
            Ok((format!("C{n}"), vec![cycle], GroupPresentation::parse(1, &format!("a^{n}"))?))
        }
        g => Err(Error::Parse(format!("unknown group {g:?}; expected a6 or cyclic"))),
    }
}

pub fn group_cohomology(cfg: &RunConfig) -> Result<Outcome> {
    let (name, perms, pres) = group_data(cfg)?;
    if cfg.degree > 1 {
        return Err(Error::Parse(format!("degree {} is not available; use 0 or 1", cfg.degree)));
    }
    let cyclic_order = if name.starts_with('C') { Some(cfg.size as u64) } else { None };
    let mut assertions = Vec::new();
    let mut results = Vec::new();
    for &p in &cfg.primes {
        let f = GaloisField::new(p, 1)?;
        let mats = perms.iter().map(|q| permutation_matrix(&f, q)).collect();
        let perm = MatrixModule::new(f.clone(), perms[0].len(), mats)?;
        let trivial = MatrixModule::trivial(f.clone(), perms.len(), 1);
        // the permutation module is induced from a point stabilizer, so its
        // cohomology is that of the stabilizer with trivial coefficients
        let (perm_expected, trivial_expected) = match (cfg.degree, cyclic_order) {
            (0, _) => (1, 1),
            (_, Some(n)) => (0, (n % p == 0) as usize),
            (_, None) => (0, 0),
        };
        for (label, module, expected) in [("permutation", &perm, perm_expected), ("trivial", &trivial, trivial_expected)] {
            let h = cohomology(&pres, module, cfg.degree)?;
            let cocycles_ok = cfg.degree == 0
                || h.basis
                    .row_vecs()
                    .iter()
                    .all(|c| pres.relations.iter().all(|w| evaluate_cocycle(module, c, w).into_iter().all(|x| f.is_zero(x))));
            assertions.push(Assertion::new(
                format!("H^{} of {name} on the {label} module over F_{p}", cfg.degree),
                h.dim == expected && cocycles_ok,
                format!(
                    "dimension {} (expected {expected}), cocycle relations {}",
                    h.dim,
                    if cocycles_ok { "hold" } else { "fail" }
                ),
            ));
            results.push(json!({ "group": name, "p": p, "module": label, "degree": cfg.degree, "dim": h.dim }));
        }
    }
    Ok(Outcome { assertions, results: Value::Array(results) })
}

/// The principal involution is odd exactly when -1 lies in the Weyl group,
/// that is when every exponent is odd; the fixed space is never smaller than
/// the flag variety.
pub fn oddness(cfg: &RunConfig) -> Result<Outcome> {
    require_types(cfg)?;
    let rows = type_primes(cfg)
        .par_iter()
        .map(|&(t, p)| {
            let ch = chev(t, p, 1)?;
            let theta = principal_involution(&ch)?;
            let rep = odd_check(&ch, &theta, &format!("principal involution of {t}"))?;
            let exponents = ch.datum().exponents();
            let predicted = exponents.iter().all(|e| e % 2 == 1);
            let a = Assertion::new(
                format!("principal involution {t} p={p}"),
                rep.odd == predicted && rep.fixed_dim >= rep.positive_roots,
                format!(
                    "fixed {} of {}, positive roots {}, odd {}, exponents {exponents:?}",
                    rep.fixed_dim, rep.lie_dim, rep.positive_roots, rep.odd
                ),
            );
            Ok((a, json!({ "type": t, "p": p, "predicted_odd": predicted, "report": rep })))
        })
        .collect::<Result<Vec<_>>>()?;
    let (assertions, results): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(Outcome { assertions, results: Value::Array(results) })
}

fn load_example(cfg: &RunConfig, name: &str) -> Result<(CharacterTable, ClassFunctions)> {
    let t = CharacterTable::load(&cfg.tables.join(format!("{name}.txt")))?;
    let e = ClassFunctions::load(&cfg.tables.join(format!("{name}_embed.txt")), &t)?;
    Ok((t, e))
}

pub fn examples_f4(cfg: &RunConfig) -> Result<Outcome> {
    let groups = [("A6", load_example(cfg, "A6")?), ("L2_13", load_example(cfg, "L2_13")?)];
    let mut assertions = Vec::new();
    let mut results = Vec::new();
    for &p in &cfg.primes {
        for (name, (table, embed)) in &groups {
            let rep = match exceptional_pipeline(table, embed, p) {
                Ok(r) => r,
                Err(Error::Precondition(why)) => {
                    results.push(json!({ "group": name, "p": p, "skipped": why }));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let trace_ok = rep.involution_trace == -4 && rep.oddness.fixed_dim == 24 && rep.oddness.positive_roots == 24;
            assertions.push(Assertion::new(
                format!("{name} involution on Lie(F4) p={p}"),
                trace_ok && rep.oddness.odd,
                format!(
                    "trace {}, fixed {}, flag dimension {}",
                    rep.involution_trace, rep.oddness.fixed_dim, rep.oddness.positive_roots
                ),
            ));
            let mf = !rep.multiplicity_free;
            if *name == "A6" {
                let m = &rep.multiplicities;
                let at = |i: usize| m.get(i).copied().unwrap_or(0);
                let mults = (at(3), at(4), at(6));
                assertions.push(Assertion::new(
                    format!("A6 multiplicities p={p}"),
                    mults == (1, 3, 2) && mf,
                    format!("(chi4, chi5, chi7) = {mults:?}, multiplicity free {}", rep.multiplicity_free),
                ));
            } else {
                assertions.push(Assertion::new(
                    format!("{name} repeated constituent p={p}"),
                    rep.multiplicities.contains(&2) && mf,
                    format!("multiplicities {:?}", rep.multiplicities),
                ));
            }
            results.push(json!({ "group": name, "p": p, "report": rep }));
        }
    }
    if assertions.is_empty() {
        assertions.push(Assertion::new("F4 examples", false, "every group order is divisible by the chosen primes"));
    }
    Ok(Outcome { assertions, results: Value::Array(results) })
}

pub fn examples_sl2(cfg: &RunConfig) -> Result<Outcome> {
    require_types(cfg)?;
    let jobs = type_primes(cfg);
    let rows = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(t, p))| {
            let rep = sym_adjoint_decomposition(&chev(t, p, 1)?, &mut job_rng(cfg.seed, i))?;
            let a = Assertion::new(
                format!("principal SL2 prediction {t} p={p}"),
                rep.agree,
                format!("computed {:?}, multiplicity free {}", rep.computed, rep.multiplicity_free),
            );
            Ok((a, serde_json::to_value(&rep).map_err(|e| Error::Data(e.to_string()))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (assertions, results): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(Outcome { assertions, results: Value::Array(results) })
}

pub fn examples_ntorus(cfg: &RunConfig) -> Result<Outcome> {
    require_types(cfg)?;
    let jobs = type_primes(cfg);
    let rows = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(t, p))| {
            let rep = normalizer_decomposition(&chev(t, p, 1)?, &mut job_rng(cfg.seed, i))?;
            let a = Assertion::new(
                format!("torus normalizer summands {t} p={p}"),
                rep.matches_prediction,
                format!("summands {:?}, predicted {:?}", rep.summand_dims, rep.predicted_dims),
            );
            Ok((a, serde_json::to_value(&rep).map_err(|e| Error::Data(e.to_string()))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (assertions, results): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(Outcome { assertions, results: Value::Array(results) })
}

pub fn levi(cfg: &RunConfig) -> Result<Outcome> {
    require_types(cfg)?;
    let mut assertions = Vec::new();
    let mut results = Vec::new();
    for (i, t) in cfg.types.iter().enumerate() {
        let (d, _) = root_datum_str(t, Isogeny::Adjoint)?;
        let lb = levi_bound(&d)?;
        let mut certs = Vec::new();
        for (j, &p) in cfg.primes.iter().enumerate() {
            let field = GaloisField::new(p, 1)?;
            let mut rng = job_rng(cfg.seed, i * cfg.primes.len() + j);
            let c = levi_certificate(&d, &lb, &field, cfg.samples, &mut rng)?;
            assertions.push(Assertion::new(
                format!("Levi certificate {t} p={p}"),
                c.passed == c.samples,
                format!("{} of {} torus elements, largest power {}", c.passed, c.samples, c.max_power),
            ));
            certs.push(json!({ "p": p, "samples": c.samples, "passed": c.passed, "max_power": c.max_power }));
        }
        results.push(json!({ "type": t, "bound": lb, "certificates": certs }));
    }
    Ok(Outcome { assertions, results: Value::Array(results) })
}

fn load_model(cfg: &RunConfig) -> Result<BuiltModel> {
    let path = cfg.model.as_ref().ok_or_else(|| Error::Parse("--model is required".into()))?;
    ModelSpec::load(path)?.build()
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Data(e.to_string()))
}

pub fn selmer_balance(cfg: &RunConfig) -> Result<Outcome> {
    let built = load_model(cfg)?;
    let res = selmer_compute(&built.model, &built.system)?;
    let r = &res.report;
    let a = Assertion::new(
        "Selmer balance",
        r.balanced,
        format!("Selmer {}, dual {}, difference {}", r.selmer_dim, r.dual_selmer_dim, r.difference),
    );
    Ok(Outcome { assertions: vec![a], results: to_value(r)? })
}

pub fn selmer_kill(cfg: &RunConfig) -> Result<Outcome> {
    let mut built = load_model(cfg)?;
    let ch = built.chevalley.clone().ok_or_else(|| Error::Parse("the model has no Cartan type; kill needs one".into()))?;
    let start = selmer_compute(&built.model, &built.system)?.report;
    let steps = annihilation_loop(&mut built.model, &mut built.system, &ch, None, cfg.seed, cfg.budget)?;
    let end = selmer_compute(&built.model, &built.system)?.report;
    let mut assertions = Vec::new();
    for (i, s) in steps.iter().enumerate() {
        let ok = s.after.1 < s.before.1 && s.before.0 - s.after.0 == s.before.1 - s.after.1;
        assertions.push(Assertion::new(format!("step {} at q={}", i + 1, s.q), ok, format!("{:?} -> {:?}", s.before, s.after)));
    }
    assertions.push(Assertion::new(
        "dual Selmer killed",
        end.dual_selmer_dim == 0 && end.balanced,
        format!(
            "({}, {}) -> ({}, {}) in {} steps",
            start.selmer_dim,
            start.dual_selmer_dim,
            end.selmer_dim,
            end.dual_selmer_dim,
            steps.len()
        ),
    ));
    Ok(Outcome { assertions, results: json!({ "start": start, "steps": steps, "end": end }) })
}

pub fn selmer_doubling(cfg: &RunConfig) -> Result<Outcome> {
    let built = load_model(cfg)?;
    let model = &built.model;
    let f = model.field.clone();
    let mut assertions = Vec::new();
    let mut results = Vec::new();
    for i in 0..cfg.samples.max(1) {
        let mut rng = job_rng(cfg.seed, i);
        let z: Vec<_> = (0..model.total_dim()).map(|_| f.random(&mut rng)).collect();
        let opts = DoublingOptions { exhaustive: cfg.exhaustive, seed: cfg.seed.wrapping_add(i as u64), ..Default::default() };
        let r = doubling_solve(model, &z, &opts)?;
        let hit = r.verified && r.restriction == z;
        assertions.push(Assertion::new(
            format!("doubling target {}", i + 1),
            hit,
            format!("{} prime pairs, {} draws", r.first.len(), r.draws),
        ));
        results.push(json!({ "target": i + 1, "pairs": r.first.len(), "draws": r.draws, "verified": r.verified, "hit": hit }));
    }
    Ok(Outcome { assertions, results: Value::Array(results) })
}

pub fn selmer_lift(cfg: &RunConfig) -> Result<Outcome> {
    let mut built = load_model(cfg)?;
    let steps = match built.chevalley.clone() {
        Some(ch) => annihilation_loop(&mut built.model, &mut built.system, &ch, None, cfg.seed, cfg.budget)?,
        None => Vec::new(),
    };
    let lift = lifting_driver(&built.model, &built.system, cfg.max_precision, cfg.seed)?;
    let mut assertions = Vec::new();
    for level in &lift.levels {
        let ok = level.places.iter().all(|p| p.membership && p.relation);
        let good = level.places.iter().filter(|p| p.membership && p.relation).count();
        assertions.push(Assertion::new(
            format!("lift to level {}", level.level),
            ok,
            format!("{good} of {} places in their local condition", level.places.len()),
        ));
    }
    let expected = cfg.max_precision.saturating_sub(2) as usize;
    assertions.push(Assertion::new(
        "all levels produced",
        lift.levels.len() == expected,
        format!("{} of {expected} levels", lift.levels.len()),
    ));
    Ok(Outcome { assertions, results: json!({ "auxiliary_steps": steps, "lift": lift }) })
}
