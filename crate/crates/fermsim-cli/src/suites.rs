//! The invariant suites behind `fermsim verify`.
//!
//! Every suite splits its work into independent tasks. Tasks run on the
//! current rayon pool, each with its own ChaCha stream derived from the seed,
//! so the report does not depend on the number of worker threads.

use std::fmt;

use clap::ValueEnum;
use fermsim::bk::{self, BkEncoding};
use fermsim::channels::{self, KrausMap};
use fermsim::circuit::{Gate, GateKind};
use fermsim::entanglement::locc::{locc_translate, LoccRound, Partition};
use fermsim::entanglement::{self as ent, eof_from_concurrence};
use fermsim::fock::{self, FieldOp, FieldPolynomial};
use fermsim::jordan_wigner as jw;
use fermsim::linalg::{c, cr, eye, hermitian_fn, kron_all, max_abs_diff, pauli, trace_product, CMat};
use fermsim::random::{self, Rng};
use fermsim::superselection::{self as ss, pinch};
use fermsim::{compiler, FermError};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{CliError, Result};
use crate::report::{Check, Relation, SuiteReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Car,
    Jwt,
    Channels,
    Dimensions,
    Universal,
    Bk,
    Entanglement,
    Locc,
    All,
}

impl Suite {
    pub const EACH: [Suite; 8] = [
        Suite::Car,
        Suite::Jwt,
        Suite::Channels,
        Suite::Dimensions,
        Suite::Universal,
        Suite::Bk,
        Suite::Entanglement,
        Suite::Locc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Car => "car",
            Suite::Jwt => "jwt",
            Suite::Channels => "channels",
            Suite::Dimensions => "dimensions",
            Suite::Universal => "universal",
            Suite::Bk => "bk",
            Suite::Entanglement => "entanglement",
            Suite::Locc => "locc",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters shared by every suite. `None` selects the suite default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub tol: Option<f64>,
    pub seed: u64,
}

impl SuiteConfig {
    pub fn new(seed: u64) -> Self {
        Self { n: None, m: None, tol: None, seed }
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn n_in(&self, suite: Suite, default: usize, max: usize) -> Result<usize> {
        bounded("--n", suite, self.n.unwrap_or(default), 1, max)
    }

    fn rng(&self, suite: Suite, task: usize) -> Rng {
        let mut r = random::rng(self.seed);
        r.set_stream(((suite as u64) << 32) | task as u64);
        r
    }
}

fn bounded(flag: &str, suite: Suite, v: usize, lo: usize, hi: usize) -> Result<usize> {
    if (lo..=hi).contains(&v) {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{flag} {v} is outside {lo}..={hi} for the {suite} suite")))
    }
}

/// Runs one suite, or every suite in order for [`Suite::All`].
pub fn run(suite: Suite, cfg: &SuiteConfig) -> Result<Vec<SuiteReport>> {
    match suite {
        Suite::All => Suite::EACH.iter().map(|&s| run_one(s, cfg)).collect(),
        s => Ok(vec![run_one(s, cfg)?]),
    }
}

fn run_one(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport> {
    match suite {
        Suite::Car => car(cfg),
        Suite::Jwt => jwt(cfg),
        Suite::Channels => channels_suite(cfg),
        Suite::Dimensions => dimensions(cfg),
        Suite::Universal => universal(cfg),
        Suite::Bk => bk_suite(cfg),
        Suite::Entanglement => entanglement(cfg),
        Suite::Locc => locc(cfg),
        Suite::All => unreachable!("expanded by run"),
    }
}

/// Maps `f` over `items` on the rayon pool, keeping input order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(usize, &T) -> R + Sync) -> Vec<R> {
    items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Flattens task results; a library error becomes a failing check.
fn gather(parts: Vec<(String, fermsim::Result<Vec<Check>>)>) -> Vec<Check> {
    parts
        .into_iter()
        .flat_map(|(name, r)| match r {
            Ok(checks) => checks,
            Err(e) => vec![Check::flag(name, false, format!("error: {e}"))],
        })
        .collect()
}

fn ceil_log2(k: usize) -> usize {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    }
}

fn keep_label(keep: &[usize]) -> String {
    keep.iter().map(usize::to_string).collect::<Vec<_>>().join("_")
}

// ---------------------------------------------------------------- car

pub const CAR_TOL: f64 = 1e-12;

fn car(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let n = cfg.n_in(Suite::Car, 8, fock::MAX_MODES)?;
    let tol = cfg.tol(CAR_TOL);
    let mut tasks: Vec<(usize, bool)> = (1..=n).map(|k| (k, false)).collect();
    tasks.extend((1..=n.min(6)).map(|k| (k, true)));
    let parts = par_map(&tasks, |_, &(k, dense)| {
        let rep = if dense { fock::verify_car_dense(k) } else { fock::verify_car(k) };
        let name = format!("car.{}.n{k}", if dense { "dense" } else { "sparse" });
        let checks = rep.map(|r| {
            vec![Check::residual(&name, r.max_residual, tol)
                .with_detail(format!("{} anticommutators", r.relations_checked))]
        });
        (name, checks)
    });
    Ok(SuiteReport::new("car", json!({ "n": n }), gather(parts)))
}

// ---------------------------------------------------------------- jwt

pub const JWT_TOL: f64 = 1e-12;

fn random_polynomial(rng: &mut Rng, n: usize) -> FieldPolynomial {
    let mut p = FieldPolynomial::new();
    for _ in 0..1 + random::index(rng, 3) {
        let coeff = c(2.0 * random::uniform(rng) - 1.0, 2.0 * random::uniform(rng) - 1.0);
        let ops = (0..random::index(rng, 4))
            .map(|_| {
                let mode = 1 + random::index(rng, n);
                if random::index(rng, 2) == 0 {
                    FieldOp::a(mode)
                } else {
                    FieldOp::adag(mode)
                }
            })
            .collect();
        p.push(coeff, ops);
    }
    p
}

fn jwt_homomorphism(cfg: &SuiteConfig, task: usize, n: usize) -> fermsim::Result<[f64; 4]> {
    let mut rng = cfg.rng(Suite::Jwt, task);
    let (mut product, mut adjoint, mut trivial, mut car) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..8 {
        let mut pi: Vec<usize> = (1..=n).collect();
        pi.shuffle(&mut rng);
        let p = random_polynomial(&mut rng, n);
        let q = random_polynomial(&mut rng, n);
        let jp = jw::jwt_polynomial(&p, &pi, n)?;
        let jq = jw::jwt_polynomial(&q, &pi, n)?;
        let jpq = jw::jwt_polynomial(&p.mul(&q), &pi, n)?;
        let mp = jp.to_matrix()?;
        product = product
            .max(jpq.max_coeff_diff(&jp.mul(&jq)))
            .max(max_abs_diff(&jpq.to_matrix()?, &(&mp * jq.to_matrix()?)));
        adjoint = adjoint.max(max_abs_diff(&jw::jwt_polynomial(&p.adjoint(), &pi, n)?.to_matrix()?, &mp.adjoint()));
        let direct = jw::jwt_polynomial(&p, &jw::trivial_ordering(n), n)?.to_matrix()?;
        trivial = trivial.max(max_abs_diff(&direct, &fock::evaluate_polynomial(&p, n)?));
        let images: Vec<CMat> =
            (1..=n).map(|i| jw::jwt_annihilator(i, &pi, n)?.to_matrix()).collect::<fermsim::Result<_>>()?;
        let d = 1 << n;
        for (i, a) in images.iter().enumerate() {
            for (j, b) in images.iter().enumerate() {
                car = car.max(fermsim::linalg::max_abs(&(a * b + b * a)));
                let want = if i == j { eye(d) } else { CMat::zeros(d, d) };
                car = car.max(max_abs_diff(&(a * b.adjoint() + b.adjoint() * a), &want));
            }
        }
    }
    Ok([product, adjoint, trivial, car])
}

fn jwt(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let n = cfg.n_in(Suite::Jwt, 6, 8)?;
    let tol = cfg.tol(JWT_TOL);
    let sizes: Vec<usize> = (1..=n).collect();
    let parts = par_map(&sizes, |task, &k| {
        let name = format!("jwt.n{k}");
        let checks = (|| {
            let id = jw::pauli_from_fields_identities(k)?;
            let [product, adjoint, trivial, car] = jwt_homomorphism(cfg, task, k)?;
            Ok(vec![
                Check::residual(format!("jwt.sigma_x.n{k}"), id.x_residual, tol),
                Check::residual(format!("jwt.sigma_y.n{k}"), id.y_residual, tol),
                Check::residual(format!("jwt.sigma_z.n{k}"), id.z_residual, tol),
                Check::residual(format!("jwt.parity.n{k}"), id.parity_residual, tol),
                Check::residual(format!("jwt.product.n{k}"), product, tol),
                Check::residual(format!("jwt.adjoint.n{k}"), adjoint, tol),
                Check::residual(format!("jwt.trivial_ordering.n{k}"), trivial, tol),
                Check::residual(format!("jwt.car_images.n{k}"), car, tol),
            ])
        })();
        (name, checks)
    });
    Ok(SuiteReport::new("jwt", json!({ "n": n, "polynomial_pairs_per_n": 8 }), gather(parts)))
}

// ---------------------------------------------------------------- channels

pub const CHANNEL_TOL: f64 = 1e-10;
pub const MARGINAL_SAMPLES: usize = 200;

fn keep_sets(n: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n)).map(|m| (1..=n).filter(|&k| m & (1 << (k - 1)) != 0).collect()).collect()
}

/// Embeds a map on `n` system modes into `n + anc` modes, ancillas before or after.
fn lift(k: &CMat, n: usize, anc: usize, ancillas_first: bool) -> fermsim::Result<CMat> {
    let modes: Vec<usize> = if ancillas_first { (anc + 1..=anc + n).collect() } else { (1..=n).collect() };
    fock::embed_local_operator(k, &modes, n + anc)
}

fn pairing(m: &KrausMap, rho: &CMat, a: &CMat, anc: usize, first: bool) -> fermsim::Result<f64> {
    let mut out = CMat::zeros(rho.nrows(), rho.ncols());
    for k in &m.kraus {
        let big = lift(&k.op, m.n_in, anc, first)?;
        out += &big * rho * big.adjoint() * cr(k.sign as f64);
    }
    Ok(trace_product(a, &out).re)
}

/// Random channel whose Kraus operators each have definite parity.
fn random_canonical_channel(rng: &mut Rng, n: usize, evens: usize, odds: usize) -> fermsim::Result<KrausMap> {
    let d = 1 << n;
    let mut ops = Vec::new();
    for (count, parity) in [(evens, 0), (odds, 1)] {
        for _ in 0..count {
            let (e, o) = channels::split_even_odd(&random::ginibre(rng, d, d), n, n)?;
            ops.push(if parity == 0 { e } else { o });
        }
    }
    let s = ops.iter().fold(CMat::zeros(d, d), |acc, k| acc + k.adjoint() * k);
    let inv_sqrt = hermitian_fn(&s, |x| 1.0 / x.sqrt());
    KrausMap::from_ops(n, ops.into_iter().map(|k| k * &inv_sqrt).collect())
}

fn channels_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let n = cfg.n_in(Suite::Channels, 4, 4)?;
    let tol = cfg.tol(CHANNEL_TOL);

    let marginal_tasks: Vec<(usize, Vec<usize>)> =
        (1..=n).flat_map(|k| keep_sets(k).into_iter().map(move |keep| (k, keep))).collect();
    let marginals = par_map(&marginal_tasks, |task, (k, keep)| {
        let name = format!("channels.marginal.n{k}.keep{}", keep_label(keep));
        let checks = (|| {
            let mut rng = cfg.rng(Suite::Channels, task);
            let (mut worst, mut invalid) = (0.0f64, 0usize);
            for _ in 0..MARGINAL_SAMPLES {
                let rho = random::fqt_state(&mut rng, *k);
                let pt = channels::partial_trace(&rho, keep, *k)?;
                worst = worst.max(max_abs_diff(&pt, &channels::marginal_oracle(&rho, keep, *k)?));
                invalid += usize::from(!ss::is_valid_fqt_state(&pt, keep.len(), tol)?.valid);
            }
            Ok(vec![Check::residual(&name, worst, tol)
                .with_detail(format!("{MARGINAL_SAMPLES} states, {invalid} invalid marginals"))
                .require(invalid == 0)])
        })();
        (name, checks)
    });

    // Raw and canonical Kraus maps paired with superselected states and effects on up to two ancillas.
    let canon_tasks: Vec<(usize, usize, bool)> =
        (1..=2.min(n)).flat_map(|s| (0..=2).flat_map(move |a| [(s, a, false), (s, a, true)])).collect();
    let offset = marginal_tasks.len();
    let canonical = par_map(&canon_tasks, |task, &(sys, anc, first)| {
        let place = if first { "before" } else { "after" };
        let name = format!("channels.canonical.n{sys}.anc{anc}.{place}");
        let checks = (|| {
            let mut rng = cfg.rng(Suite::Channels, offset + task);
            let d = 1 << sys;
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let raw = KrausMap::from_ops(sys, (0..2).map(|_| random::ginibre(&mut rng, d, d) * cr(0.5)).collect())?;
                let canon = channels::canonicalize(&raw)?;
                let rho = random::fqt_state(&mut rng, sys + anc);
                let a = random::fqt_effect(&mut rng, sys + anc);
                worst =
                    worst.max((pairing(&raw, &rho, &a, anc, first)? - pairing(&canon, &rho, &a, anc, first)?).abs());
            }
            Ok(vec![Check::residual(&name, worst, tol).with_detail("10 random maps, state/effect pairs")])
        })();
        (name, checks)
    });

    let mut checks = gather(marginals);
    checks.extend(gather(canonical));
    checks.push(counterexample_gap());

    let offset = offset + canon_tasks.len();
    let trials: Vec<usize> = (0..20).collect();
    let dilations = par_map(&trials, |task, &trial| {
        let name = format!("channels.dilation.{trial}");
        let checks = (|| {
            let mut rng = cfg.rng(Suite::Channels, offset + task);
            let sys = 1 + trial % 2;
            let evens = 1 + random::index(&mut rng, 3);
            let odds = random::index(&mut rng, 3);
            let map = random_canonical_channel(&mut rng, sys, evens, odds)?;
            let dil = channels::dilate(&map, tol)?;
            let want = ceil_log2(evens).max(ceil_log2(odds)) + 1;
            let mut worst = dil.isometry_residual();
            for _ in 0..5 {
                let rho = random::fqt_state(&mut rng, sys);
                worst = worst.max(max_abs_diff(&dil.apply(&rho)?, &map.apply(&rho)?));
            }
            Ok(vec![
                Check::exact(format!("{name}.ancillas"), dil.ancillas as i128, want as i128)
                    .with_detail(format!("n={sys}, {evens} even and {odds} odd Kraus operators")),
                Check::residual(format!("{name}.equality"), worst, tol),
            ])
        })();
        (name, checks)
    });
    checks.extend(gather(dilations));
    Ok(SuiteReport::new(
        "channels",
        json!({ "n": n, "states_per_keep_set": MARGINAL_SAMPLES, "max_ancillas": 2, "dilations": 20 }),
        checks,
    ))
}

/// `I + σ⁻` and its canonical form differ on |+⟩, which superselection forbids.
fn counterexample_gap() -> Check {
    let name = "channels.canonical.counterexample_gap";
    let r = (|| {
        let raw = KrausMap::from_ops(1, vec![eye(2) + pauli::lower()])?;
        let canon = channels::canonicalize(&raw)?;
        let plus = CMat::from_element(2, 2, cr(0.5));
        Ok::<_, FermError>(max_abs_diff(&raw.apply(&plus)?, &canon.apply(&plus)?))
    })();
    match r {
        Ok(gap) => Check::above(name, gap, 0.1).with_detail("non-superselected state |+>"),
        Err(e) => Check::flag(name, false, format!("error: {e}")),
    }
}

// ---------------------------------------------------------------- dimensions

fn dimensions(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let n = cfg.n_in(Suite::Dimensions, 5, 30)?;
    let mut parts: Vec<(String, fermsim::Result<Vec<Check>>)> = Vec::new();
    for k in 1..=n {
        let name = format!("dimensions.d.n{k}");
        let r = ss::fqt_dimension(k).map(|d| {
            vec![
                Check::exact(&name, d.d_states as i128, 1i128 << (2 * k - 1)),
                Check::exact(format!("dimensions.v.n{k}"), (d.d_states + d.v) as i128, 1i128 << (2 * k)),
            ]
        });
        parts.push((name, r));
    }
    let ranks: Vec<usize> = (1..=n.min(3)).collect();
    parts.extend(par_map(&ranks, |task, &k| {
        let name = format!("dimensions.rank.n{k}");
        let seed = cfg.seed ^ ((task as u64 + 1) << 40);
        let r = ss::fqt_state_space_rank(k, 3 << (2 * k), seed).and_then(|rank| {
            Ok(vec![Check::exact(&name, rank as i128, ss::fqt_dimension(k)?.d_states as i128)
                .with_detail(format!("rank {rank} of {} random states", 3 << (2 * k)))])
        });
        (name, r)
    }));
    for a in 1..=n {
        for b in 1..=n {
            let name = format!("dimensions.minimal.n{a}.m{b}");
            let r = ss::check_minimal_superselection(a, b)
                .map(|s| vec![Check::exact(&name, s.v_composite, s.lower_bound).require(s.saturated)]);
            parts.push((name, r));
        }
    }
    for k in 1..=n.max(10) {
        let name = format!("dimensions.bilocal.n{k}");
        let r = ss::bilocal_effect_count(k).map(|v| vec![Check::exact(&name, v as i128, 1i128 << (2 * k - 1))]);
        parts.push((name, r));
    }
    for modes in [[1, 1, 1, 1], [1, 1, 2, 2], [1, 2, 3, 4]] {
        let name = format!("dimensions.jellyfish.fqt.{}", keep_label(&modes));
        let r = ss::fqt_jellyfish_inputs(modes)
            .and_then(|(s, p)| ss::jellyfish_dimension_check(s, p))
            .map(|j| vec![Check::exact(&name, j.iterated, j.classes).require(j.holds)]);
        parts.push((name, r));
    }
    // Locally tomographic instance: every pair dimension is the plain product.
    let local = ss::PairDims { ab: 6, ac: 10, ad: 14, bc: 15, bd: 21, cd: 35 };
    let name = "dimensions.jellyfish.local.2_3_5_7".to_string();
    let r = ss::jellyfish_dimension_check([2, 3, 5, 7], local)
        .map(|j| vec![Check::exact(&name, j.iterated, j.classes).require(j.holds && j.iterated == 210)]);
    parts.push((name, r));
    Ok(SuiteReport::new("dimensions", json!({ "n": n, "bilocal_up_to": n.max(10) }), gather(parts)))
}

// ---------------------------------------------------------------- universal

pub const UNIVERSAL_TOL: f64 = 1e-10;

fn universal(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let n = cfg.n_in(Suite::Universal, 6, 8)?;
    let n = bounded("--n", Suite::Universal, n, 2, 8)?;
    let tol = cfg.tol(UNIVERSAL_TOL);
    let mut checks = match compiler::universal_identities(cfg.seed) {
        Ok(ids) => ids
            .into_iter()
            .map(|i| Check::residual(format!("universal.identity.{}", i.name), i.residual, tol))
            .collect(),
        Err(e) => vec![Check::flag("universal.identity", false, format!("error: {e}"))],
    };

    let pairs: Vec<(usize, usize, usize)> =
        (2..=n).flat_map(|k| (0..k).flat_map(move |j| (j + 1..k).map(move |l| (k, j, l)))).collect();
    let routed = par_map(&pairs, |task, &(k, a, b)| {
        let name = format!("universal.routing.n{k}.{a}_{b}");
        let checks = (|| {
            let mut rng = cfg.rng(Suite::Universal, task);
            let gates = [
                Gate::custom(random::even_unitary(&mut rng, 2), vec![a, b])?,
                Gate::custom(random::unitary(&mut rng, 4), vec![a, b])?,
                Gate::two(GateKind::GHat, a, b),
            ];
            let mut worst = 0.0f64;
            let mut nearest = true;
            for g in &gates {
                let r = compiler::route_nearest_neighbor(g, k)?;
                nearest &= r.gates().iter().all(|h| h.wires.len() < 2 || h.wires[1] == h.wires[0] + 1);
                worst = worst.max(max_abs_diff(&r.unitary()?, &compiler::jw_image(g, k)?));
            }
            Ok(vec![Check::residual(&name, worst, tol).require(nearest)])
        })();
        (name, checks)
    });
    checks.extend(gather(routed));

    // Every named gate on every placement of a five-mode register.
    let n_named = 5;
    let named: Vec<(GateKind, Vec<usize>)> = GateKind::ALL
        .into_iter()
        .filter(|k| !matches!(k, GateKind::Custom | GateKind::Cnot))
        .flat_map(|kind| {
            let arity = kind.arity().unwrap_or(1);
            (0..=n_named - arity).map(move |s| (kind, (s..s + arity).collect()))
        })
        .collect();
    let compiled = par_map(&named, |_, (kind, wires)| {
        let name = format!("universal.compile.{kind}.{}", keep_label(wires));
        let checks = (|| {
            let g = Gate::new(*kind, wires.clone())?;
            let out = compiler::compile_fqt_gate(&g, n_named)?;
            let r = max_abs_diff(&out.unitary()?, &compiler::jw_image(&g, n_named)?);
            Ok(vec![Check::residual(&name, r, tol).require(!out.counts().contains_key("custom"))])
        })();
        (name, checks)
    });
    checks.extend(gather(compiled));
    Ok(SuiteReport::new("universal", json!({ "n": n, "named_gate_register": n_named }), checks))
}

// ---------------------------------------------------------------- bk

pub const BK_TOL: f64 = 1e-10;
const KL_SAMPLES: usize = 500;

fn random_bits(rng: &mut Rng, m: usize) -> Vec<u8> {
    (0..m).map(|_| random::index(rng, 2) as u8).collect()
}

fn xor_over(x: &[u8], idx: &[usize]) -> u8 {
    idx.iter().fold(0, |a, &i| a ^ x[i])
}

/// Exhaustive encode/decode roundtrip, with encode compared against the
/// prefix-order definition of the encoding.
fn bk_roundtrip(m: usize) -> fermsim::Result<Check> {
    let enc = BkEncoding::new(m)?;
    let t = enc.label_bits();
    let mut below = vec![Vec::new(); m];
    for (j, row) in below.iter_mut().enumerate() {
        for k in 0..m {
            if bk::preceq(k, j, t)? {
                row.push(k);
            }
        }
    }
    let mut mismatches = 0i128;
    for idx in 0..(1usize << m) {
        let s: Vec<u8> = (0..m).map(|b| (idx >> (m - 1 - b) & 1) as u8).collect();
        let x = enc.encode(&s)?;
        let want: Vec<u8> = below.iter().map(|r| xor_over(&s, r)).collect();
        mismatches += i128::from(x != want || enc.decode(&x)? != s);
    }
    Ok(Check::exact(format!("bk.roundtrip.m{m}"), mismatches, 0).with_detail(format!("{} strings", 1usize << m)))
}

fn bk_reconstruction(cfg: &SuiteConfig, task: usize, m: usize) -> fermsim::Result<Vec<Check>> {
    let mut rng = cfg.rng(Suite::Bk, task);
    let enc = BkEncoding::new(m)?;
    let t = enc.label_bits();
    let k: Vec<Vec<usize>> = (0..m).map(|j| enc.set_k(j)).collect::<fermsim::Result<_>>()?;
    let l: Vec<Vec<usize>> = (0..m).map(|j| enc.set_l(j)).collect::<fermsim::Result<_>>()?;
    let mut failures = 0i128;
    for _ in 0..KL_SAMPLES {
        let s = random_bits(&mut rng, m);
        let x = enc.encode(&s)?;
        let mut prefix = 0;
        for j in 0..m {
            failures += i128::from(s[j] != x[j] ^ xor_over(&x, &k[j]));
            failures += i128::from(prefix != xor_over(&x, &l[j]));
            prefix ^= s[j];
        }
    }
    let widest = k.iter().chain(&l).map(Vec::len).max().unwrap_or(0);
    Ok(vec![
        Check::exact(format!("bk.reconstruction.m{m}"), failures, 0)
            .with_detail(format!("{KL_SAMPLES} random strings, K and L at every j")),
        Check {
            name: format!("bk.set_size.m{m}"),
            value: widest as f64,
            relation: Relation::AtMost,
            bound: t as f64,
            passed: widest <= t,
            detail: Some(format!("largest K(j) or L(j) against {t} label bits")),
        },
    ])
}

fn bk_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let m = bounded("--m", Suite::Bk, cfg.m.unwrap_or(64), 1, bk::MAX_BK_MODES)?;
    let tol = cfg.tol(BK_TOL);

    let small: Vec<usize> = (1..=m.min(12)).collect();
    let mut checks = gather(par_map(&small, |_, &k| (format!("bk.roundtrip.m{k}"), bk_roundtrip(k).map(|c| vec![c]))));

    let mut sizes: Vec<usize> = [16, 17, 31, 32, 48, 64].into_iter().filter(|&k| k <= m).collect();
    if !sizes.contains(&m) {
        sizes.push(m);
    }
    checks.extend(gather(par_map(&sizes, |task, &k| {
        (format!("bk.reconstruction.m{k}"), bk_reconstruction(cfg, task, k))
    })));

    let m_ext = m.min(8);
    let js: Vec<usize> = (0..m_ext).collect();
    checks.extend(gather(par_map(&js, |_, &j| {
        let name = format!("bk.extraction.m{m_ext}.j{j}");
        let r = BkEncoding::new(m_ext).and_then(|enc| {
            let ext = enc.extraction_circuit(j)?;
            let [a, b, cc] = ext.counts();
            Ok(vec![Check::residual(&name, bk::verify_extraction(&enc, j)?, tol)
                .with_detail(format!("stages {a}+{b}+{cc} gates, all basis states"))])
        });
        (name, r)
    })));

    let bench_ms: Vec<usize> = (4..=m).collect();
    let rows = if bench_ms.is_empty() { Ok(Vec::new()) } else { bk::benchmark(&bench_ms) };
    let mut data = None;
    match rows {
        Ok(rows) => {
            for r in &rows {
                let bound = 3 * (ceil_log2(r.m) + 1);
                checks.push(Check {
                    name: format!("bk.gate_bound.m{}", r.m),
                    value: r.max_gates_bk as f64,
                    relation: Relation::AtMost,
                    bound: bound as f64,
                    passed: r.max_gates_bk <= bound && r.max_gates_jwt == r.m + 1,
                    detail: Some(format!("jwt path {} gates", r.max_gates_jwt)),
                });
            }
            data = Some(json!({ "benchmark": rows }));
        }
        Err(e) => checks.push(Check::flag("bk.gate_bound", false, format!("error: {e}"))),
    }

    let sim: Vec<usize> = [2, 4, 6, 8].into_iter().filter(|&k| k <= m).collect();
    let offset = sizes.len();
    checks.extend(gather(par_map(&sim, |task, &k| {
        let name = format!("bk.simulation.m{k}");
        let r = (|| {
            let mut rng = cfg.rng(Suite::Bk, offset + task);
            let mut worst = 0.0f64;
            let mut cases = 0;
            for j in 0..k {
                for g in
                    [pauli::x(), fermsim::linalg::diag(&[cr(1.0), c((0.3 + j as f64).cos(), (0.3 + j as f64).sin())])]
                {
                    let (dev, leak) = bk::verify_mode_gate_simulation(&g, &[j], k)?;
                    worst = worst.max(dev).max(leak);
                    cases += 1;
                }
            }
            for _ in 0..3 {
                let a = random::index(&mut rng, k);
                let b = (a + 1 + random::index(&mut rng, k - 1)) % k;
                let (dev, leak) = bk::verify_mode_gate_simulation(&random::unitary(&mut rng, 4), &[a, b], k)?;
                worst = worst.max(dev).max(leak);
                cases += 1;
            }
            Ok(vec![Check::residual(&name, worst, tol).with_detail(format!("{cases} mode gates"))])
        })();
        (name, r)
    })));

    let mut report = SuiteReport::new("bk", json!({ "m": m, "kl_samples": KL_SAMPLES }), checks);
    report.data = data;
    Ok(report)
}

// ---------------------------------------------------------------- entanglement

pub const ENTANGLEMENT_TOL: f64 = 1e-10;
const EOF_SAMPLES: usize = 500;

fn entanglement(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let tol = cfg.tol(ENTANGLEMENT_TOL);
    let mut parts = Vec::new();
    let phi = ent::phi_mixed();
    parts.push((
        "entanglement.phi".to_string(),
        (|| {
            let cf = ent::fermionic_concurrence(&phi, tol)?;
            let ef = ent::fermionic_eof_lower(&phi, tol)?;
            let sep = ent::full_separability_test(&phi, 2, tol)?;
            let xx = ent::pauli_correlator(&phi, "XX")?;
            Ok(vec![
                Check::residual("entanglement.phi.concurrence", (cf.value - 1.0).abs(), tol)
                    .with_detail(format!("C_F = {}", cf.value)),
                Check::residual("entanglement.phi.eof_lower", (ef.lower_bound - 1.0).abs(), tol)
                    .with_detail(format!("E_F lower bound = {}", ef.lower_bound)),
                Check::flag(
                    "entanglement.phi.not_separable",
                    !sep.separable,
                    format!("max off-diagonal {}", sep.max_off_diagonal),
                ),
                Check::residual("entanglement.phi.xx_witness", (xx - 1.0).abs(), tol)
                    .with_detail(format!("Tr[Phi XX] = {xx}")),
            ])
        })(),
    ));
    parts.push((
        "entanglement.monogamy".to_string(),
        ent::monogamy_witness(&ent::phi_prime(), tol).map(|w| {
            vec![
                Check::residual("entanglement.monogamy.c_ab", (w.c_ab - 1.0).abs(), tol),
                Check::residual("entanglement.monogamy.c_ac", (w.c_ac - 1.0).abs(), tol),
                Check::residual("entanglement.monogamy.sum_of_squares", (w.sum_of_squares - 2.0).abs(), tol)
                    .require(w.violated)
                    .with_detail(format!("({}, {}, {})", w.c_ab, w.c_ac, w.sum_of_squares)),
            ]
        }),
    ));

    let chunks: Vec<usize> = (0..10).collect();
    let gaps = par_map(&chunks, |task, _| -> fermsim::Result<(f64, f64)> {
        let mut rng = cfg.rng(Suite::Entanglement, task);
        let mut gap = f64::INFINITY;
        for _ in 0..EOF_SAMPLES / chunks.len() {
            let rho = random::fqt_state(&mut rng, 2);
            let cf = ent::fermionic_concurrence(&rho, tol)?.value;
            gap = gap.min(ent::fermionic_eof_lower(&rho, tol)?.lower_bound - eof_from_concurrence(cf));
        }
        // Plain qubits obey the CKW bound.
        let mut ckw = 0.0f64;
        for _ in 0..5 {
            ckw = ckw.max(ent::qubit_monogamy(&random::pure_state(&mut rng, 8), tol)?.sum_of_squares);
        }
        Ok((gap, ckw))
    });
    let folded = gaps.into_iter().try_fold((f64::INFINITY, 0.0f64), |(g, k), r| r.map(|(a, b)| (g.min(a), k.max(b))));
    parts.push((
        "entanglement.random".to_string(),
        folded.map(|(gap, ckw)| {
            vec![
                Check::above("entanglement.eof_dominates_concurrence_bound", gap, -tol)
                    .with_detail(format!("min of E_F lower bound - E(C_F) over {EOF_SAMPLES} random states")),
                Check {
                    name: "entanglement.qubit_ckw".into(),
                    value: ckw,
                    relation: Relation::AtMost,
                    bound: 1.0 + tol,
                    passed: ckw <= 1.0 + tol,
                    detail: Some("max C_AB^2 + C_AC^2 over 50 random 3-qubit states".into()),
                },
            ]
        }),
    ));
    Ok(SuiteReport::new("entanglement", json!({ "random_states": EOF_SAMPLES }), gather(parts)))
}

// ---------------------------------------------------------------- locc

pub const LOCC_TOL: f64 = 1e-10;

fn local(op: &CMat, p: &Partition, party: usize) -> fermsim::Result<CMat> {
    fock::embed_local_operator(op, &p.modes(party), p.n())
}

fn random_instrument(rng: &mut Rng, p: &Partition, party: usize, outcomes: usize) -> fermsim::Result<KrausMap> {
    let d = 1 << p.size(party);
    let ops: Vec<CMat> = (0..outcomes).map(|_| random::ginibre(rng, d, d)).collect();
    let s = ops.iter().fold(CMat::zeros(d, d), |acc, k| acc + k.adjoint() * k);
    let inv = hermitian_fn(&s, |x| 1.0 / x.sqrt());
    KrausMap::from_ops(p.n(), ops.iter().map(|k| local(&(k * &inv), p, party)).collect::<fermsim::Result<_>>()?)
}

/// Reference fermionic run, pinched to the canonical even/odd form after every round.
fn run_fermionic(protocol: &[LoccRound], rho: &CMat, n: usize) -> CMat {
    let mut branches = vec![(0usize, rho.clone())];
    for round in protocol {
        let mut next = Vec::new();
        for (prev, sigma) in &branches {
            let m = if round.instrument.len() == 1 { &round.instrument[0] } else { &round.instrument[*prev] };
            for (j, k) in m.kraus.iter().enumerate() {
                next.push((j, pinch(&(&k.op * sigma * k.op.adjoint()), n)));
            }
        }
        branches = next;
    }
    branches.into_iter().fold(CMat::zeros(rho.nrows(), rho.ncols()), |acc, (_, s)| acc + s)
}

fn locc_protocol(cfg: &SuiteConfig, task: usize, sizes: &[usize], tol: f64) -> fermsim::Result<Vec<Check>> {
    let mut rng = cfg.rng(Suite::Locc, task);
    let p = Partition::new(sizes.to_vec())?;
    let rounds = 1 + random::index(&mut rng, 3);
    let mut protocol = Vec::new();
    let mut prev_outcomes = 1;
    for _ in 0..rounds {
        let party = random::index(&mut rng, p.parties());
        let outcomes = 1 + random::index(&mut rng, 2);
        let instrument = (0..prev_outcomes)
            .map(|_| random_instrument(&mut rng, &p, party, outcomes))
            .collect::<fermsim::Result<_>>()?;
        protocol.push(LoccRound { party, instrument });
        prev_outcomes = outcomes;
    }
    let (t, q) = locc_translate(&protocol, &p, tol)?;

    // Apply the translated qubit rounds to a random state and compare with the direct run.
    let n = p.n();
    let rho = random::fqt_state(&mut rng, n);
    let fermionic = run_fermionic(&protocol, &rho, n);
    let mut branches = vec![(0usize, rho.clone())];
    for round in &q {
        let before = p.offset(round.party);
        let after = n - before - p.size(round.party);
        let mut next = Vec::new();
        for (prev, sigma) in &branches {
            let branch = if round.branches.len() == 1 { &round.branches[0] } else { &round.branches[*prev] };
            for k in branch {
                let zs =
                    if k.parity == 1 { kron_all(std::iter::repeat_n(&pauli::z(), before)) } else { eye(1 << before) };
                let full = kron_all([zs, k.local.clone(), eye(1 << after)].iter());
                next.push((k.outcome, &full * sigma * full.adjoint()));
            }
        }
        branches = next;
    }
    let qubit = branches.into_iter().fold(CMat::zeros(rho.nrows(), rho.ncols()), |acc, (_, s)| acc + s);
    let label = format!("locc.{}.{task}", keep_label(sizes));
    let one_bit = t.rounds.iter().all(|r| r.parity_bits_sent == 1);
    Ok(vec![
        Check::residual(format!("{label}.channel"), t.channel_residual.max(max_abs_diff(&fermionic, &qubit)), tol),
        Check::exact(format!("{label}.parity_bits"), t.total_parity_bits as i128, rounds as i128)
            .require(one_bit)
            .with_detail(format!("one parity bit in each of {rounds} round(s)")),
    ])
}

fn locc(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let n = cfg.n_in(Suite::Locc, 4, 4)?;
    let n = bounded("--n", Suite::Locc, n, 2, 4)?;
    let tol = cfg.tol(LOCC_TOL);
    let layouts: [&[usize]; 7] = [&[1, 1], &[1, 2], &[2, 1], &[1, 1, 1], &[2, 2], &[1, 1, 2], &[1, 1, 1, 1]];
    let tasks: Vec<Vec<usize>> = layouts
        .iter()
        .filter(|l| l.iter().sum::<usize>() <= n)
        .flat_map(|l| std::iter::repeat_n(l.to_vec(), 4))
        .collect();
    let parts = par_map(&tasks, |task, sizes| {
        (format!("locc.{}.{task}", keep_label(sizes)), locc_protocol(cfg, task, sizes, tol))
    });
    Ok(SuiteReport::new("locc", json!({ "n": n, "protocols_per_layout": 4 }), gather(parts)))
}
