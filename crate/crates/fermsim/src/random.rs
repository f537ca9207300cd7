//! Seeded random generators for states, effects, unitaries and operators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{c, cr, max_eigenvalue, trace, CMat, CVec, C64};
use crate::superselection::{pinch, sector_indices};

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut Rng) -> f64 {
    use rand::RngExt;
    rng.random::<f64>()
}

pub fn index(rng: &mut Rng, upper: usize) -> usize {
    use rand::RngExt;
    rng.random_range(0..upper)
}

pub fn complex_gaussian(rng: &mut Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im)
}

pub fn ginibre(rng: &mut Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-random unitary via QR with phase fix.
pub fn unitary(rng: &mut Rng, d: usize) -> CMat {
    let qr = ginibre(rng, d, d).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMat::from_diagonal(&CVec::from_iterator(
        d,
        (0..d).map(|i| {
            let z = r[(i, i)];
            if z.norm() > 0.0 {
                z / z.norm()
            } else {
                cr(1.0)
            }
        }),
    ));
    q * phases
}

pub fn density(rng: &mut Rng, d: usize, rank: usize) -> CMat {
    let g = ginibre(rng, d, rank.max(1));
    let rho = &g * g.adjoint();
    let t = trace(&rho);
    rho / t
}

pub fn pure_state(rng: &mut Rng, d: usize) -> CVec {
    let v = CVec::from_fn(d, |_, _| complex_gaussian(rng));
    let nrm = v.norm();
    v / cr(nrm)
}

/// Random superselected state on `n` modes: a random density matrix with its
/// parity-coherences removed.
pub fn fqt_state(rng: &mut Rng, n: usize) -> CMat {
    let d = 1usize << n;
    let rank = 1 + index(rng, d);
    pinch(&density(rng, d, rank), n)
}

/// Random pure state supported on a single parity sector (0 even, 1 odd).
pub fn fqt_pure_state(rng: &mut Rng, n: usize, parity: u8) -> CVec {
    let (even, odd) = sector_indices(n);
    let idx = if parity == 0 { even } else { odd };
    let mut v = CVec::zeros(1 << n);
    for &i in idx.iter() {
        v[i] = complex_gaussian(rng);
    }
    let nrm = v.norm();
    v / cr(nrm)
}

/// Unitary that is block-diagonal in the parity sectors.
pub fn even_unitary(rng: &mut Rng, n: usize) -> CMat {
    let d = 1usize << n;
    let (even, odd) = sector_indices(n);
    let mut u = CMat::zeros(d, d);
    for idx in [&even, &odd] {
        let b = unitary(rng, idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (bb, &j) in idx.iter().enumerate() {
                u[(i, j)] = b[(a, bb)];
            }
        }
    }
    u
}

/// Random valid effect: block-diagonal with spectrum in `[0, 1]`.
pub fn fqt_effect(rng: &mut Rng, n: usize) -> CMat {
    let d = 1usize << n;
    let u = even_unitary(rng, n);
    let spectrum = CMat::from_diagonal(&CVec::from_iterator(d, (0..d).map(|_| cr(uniform(rng)))));
    let a = &u * spectrum * u.adjoint();
    (&a + a.adjoint()) * cr(0.5)
}

/// Random operator with definite parity (0: even, 1: odd).
pub fn parity_operator(rng: &mut Rng, n: usize, parity: u8) -> CMat {
    let d = 1usize << n;
    let mut g = ginibre(rng, d, d);
    for i in 0..d {
        for j in 0..d {
            let pi = (i.count_ones() % 2) as u8;
            let pj = (j.count_ones() % 2) as u8;
            if (pi ^ pj) != parity {
                g[(i, j)] = cr(0.0);
            }
        }
    }
    g
}

/// Random effect with operator norm scaled to `scale`.
pub fn scaled_psd(rng: &mut Rng, d: usize, scale: f64) -> CMat {
    let g = ginibre(rng, d, d);
    let a = &g * g.adjoint();
    let m = max_eigenvalue(&a);
    a * cr(scale / m)
}
