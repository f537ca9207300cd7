//! Parity superselection: sector decomposition, validity of states and
//! effects, and the state-space dimension counting of fermionic systems.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{FermError, Result};
use crate::fock::{check_n, parity_operator, MAX_MODES};
use crate::linalg::{
    commutator, cr, eigvalsh, ensure_square, hermitian_residual, hermitian_to_real_vec, max_abs, real_rank, trace, CMat,
};

type Sectors = (Vec<usize>, Vec<usize>);

fn sector_cache() -> &'static Vec<Sectors> {
    static CACHE: OnceLock<Vec<Sectors>> = OnceLock::new();
    CACHE.get_or_init(|| {
        (0..=MAX_MODES)
            .map(|n| {
                let d = 1usize << n;
                let even = (0..d).filter(|i| i.count_ones() % 2 == 0).collect();
                let odd = (0..d).filter(|i| i.count_ones() % 2 == 1).collect();
                (even, odd)
            })
            .collect()
    })
}

/// Basis indices of the even and odd sectors, each ascending.
pub fn sector_indices(n: usize) -> (&'static [usize], &'static [usize]) {
    let (e, o) = &sector_cache()[n.min(MAX_MODES)];
    (e, o)
}

/// Permutation listing even indices first, then odd.
pub fn sector_permutation(n: usize) -> Vec<usize> {
    let (e, o) = sector_indices(n);
    e.iter().chain(o.iter()).copied().collect()
}

#[inline]
fn same_parity(i: usize, j: usize) -> bool {
    (i ^ j).count_ones().is_multiple_of(2)
}

/// Removes every matrix element between different parity sectors.
pub fn pinch(rho: &CMat, _n: usize) -> CMat {
    CMat::from_fn(rho.nrows(), rho.ncols(), |i, j| if same_parity(i, j) { rho[(i, j)] } else { cr(0.0) })
}

/// Largest parity-coherence magnitude.
pub fn off_block_residual(rho: &CMat) -> f64 {
    let mut m = 0.0f64;
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            if !same_parity(i, j) {
                m = m.max(rho[(i, j)].norm());
            }
        }
    }
    m
}

pub fn extract_block(m: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

/// Places a sector block back into the full space, zero elsewhere.
pub fn embed_block(block: &CMat, idx: &[usize], d: usize) -> CMat {
    let mut out = CMat::zeros(d, d);
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            out[(i, j)] = block[(a, b)];
        }
    }
    out
}

/// Sector decomposition `rho = p0 rho0 (+) p1 rho1`.
#[derive(Debug, Clone)]
pub struct ParityState {
    pub n: usize,
    pub rho: CMat,
    /// Unnormalised sector blocks.
    pub block0: CMat,
    pub block1: CMat,
    pub p0: f64,
    pub p1: f64,
    /// Normalised sector blocks (zero when the weight vanishes).
    pub rho0: CMat,
    pub rho1: CMat,
    pub off_block_residual: f64,
}

impl ParityState {
    /// Normalised sector state embedded in the full space.
    pub fn embedded(&self, parity: u8) -> CMat {
        let (e, o) = sector_indices(self.n);
        let d = 1usize << self.n;
        if parity == 0 {
            embed_block(&self.rho0, e, d)
        } else {
            embed_block(&self.rho1, o, d)
        }
    }
}

pub fn split_sectors(rho: &CMat, n: usize, tol: f64) -> Result<ParityState> {
    check_n(n)?;
    ensure_square(rho, 1 << n)?;
    let h = hermitian_residual(rho);
    if h > tol {
        return Err(FermError::NotHermitian(h));
    }
    let (e, o) = sector_indices(n);
    let block0 = extract_block(rho, e);
    let block1 = extract_block(rho, o);
    let p0 = trace(&block0).re;
    let p1 = trace(&block1).re;
    let norm = |b: &CMat, p: f64| if p.abs() > tol { b / cr(p) } else { CMat::zeros(b.nrows(), b.ncols()) };
    Ok(ParityState {
        n,
        rho: rho.clone(),
        rho0: norm(&block0, p0),
        rho1: norm(&block1, p1),
        block0,
        block1,
        p0,
        p1,
        off_block_residual: off_block_residual(rho),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateValidity {
    pub valid: bool,
    pub hermitian_residual: f64,
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub parity_commutator: f64,
}

/// `rho >= 0`, `Tr rho <= 1` and `[rho, P] = 0`, each up to `tol`.
pub fn is_valid_fqt_state(rho: &CMat, n: usize, tol: f64) -> Result<StateValidity> {
    check_n(n)?;
    ensure_square(rho, 1 << n)?;
    let herm = hermitian_residual(rho);
    let min_eig = eigvalsh(rho).first().copied().unwrap_or(0.0);
    let tr = trace(rho).re;
    let comm = max_abs(&commutator(rho, &parity_operator(n)?));
    Ok(StateValidity {
        valid: herm <= tol && min_eig >= -tol && tr <= 1.0 + tol && comm < tol,
        hermitian_residual: herm,
        min_eigenvalue: min_eig,
        trace: tr,
        parity_commutator: comm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectValidity {
    pub valid: bool,
    pub hermitian_residual: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub parity_commutator: f64,
}

/// `0 <= a <= I` and `[a, P] = 0`, each up to `tol`.
pub fn is_valid_fqt_effect(a: &CMat, n: usize, tol: f64) -> Result<EffectValidity> {
    check_n(n)?;
    ensure_square(a, 1 << n)?;
    let herm = hermitian_residual(a);
    let ev = eigvalsh(a);
    let (lo, hi) = (ev.first().copied().unwrap_or(0.0), ev.last().copied().unwrap_or(0.0));
    let comm = max_abs(&commutator(a, &parity_operator(n)?));
    Ok(EffectValidity {
        valid: herm <= tol && lo >= -tol && hi <= 1.0 + tol && comm < tol,
        hermitian_residual: herm,
        min_eigenvalue: lo,
        max_eigenvalue: hi,
        parity_commutator: comm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FqtDimension {
    pub n: usize,
    /// Dimension of the real span of states.
    pub d_states: u128,
    /// Missing dimensions relative to the qubit theory, `4^n - D`.
    pub v: u128,
    /// Hilbert-space dimension.
    pub d: u128,
}

/// `D = V = 2^(2n-1)`, `d = 2^n`.
pub fn fqt_dimension(n: usize) -> Result<FqtDimension> {
    if n == 0 {
        return Err(FermError::ModeCount { n, max: 63 });
    }
    if n > 63 {
        return Err(FermError::Overflow("fqt_dimension"));
    }
    let big = 1u128 << (2 * n - 1);
    Ok(FqtDimension { n, d_states: big, v: big, d: 1u128 << n })
}

/// Rank of the real span of `samples` random valid states together with the
/// sector matrix units (n <= 4).
pub fn fqt_state_space_rank(n: usize, samples: usize, seed: u64) -> Result<usize> {
    check_n(n)?;
    if n > 4 {
        return Err(FermError::ModeCount { n, max: 4 });
    }
    let mut rng = crate::random::rng(seed);
    let rows: Vec<Vec<f64>> =
        (0..samples).map(|_| hermitian_to_real_vec(&crate::random::fqt_state(&mut rng, n))).collect();
    Ok(real_rank(&rows, 1e-9))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintBounds {
    pub lower: i128,
    pub upper: i128,
}

/// Bounds on the number of missing dimensions `V_AB` of a composite system.
pub fn constraint_bounds(da: i128, va: i128, db: i128, vb: i128, dab: i128) -> Result<ConstraintBounds> {
    for (name, v) in [("D_A", da), ("V_A", va), ("D_B", db), ("V_B", vb), ("D_AB", dab)] {
        if v < 0 {
            return Err(FermError::NegativeInput(format!("{name} = {v}")));
        }
    }
    let ovf = || FermError::Overflow("constraint_bounds");
    let davb = da.checked_mul(vb).ok_or_else(ovf)?;
    let dbva = db.checked_mul(va).ok_or_else(ovf)?;
    let vavb = va.checked_mul(vb).ok_or_else(ovf)?;
    let dadb = da.checked_mul(db).ok_or_else(ovf)?;
    Ok(ConstraintBounds { lower: davb + dbva - 2 * vavb, upper: davb + dbva - vavb + dab - dadb })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimalSuperselection {
    pub n: usize,
    pub m: usize,
    pub v_composite: i128,
    pub lower_bound: i128,
    pub saturated: bool,
}

/// Checks that the fermionic theory saturates the lower bound relative to qubits.
pub fn check_minimal_superselection(n: usize, m: usize) -> Result<MinimalSuperselection> {
    if n == 0 || m == 0 {
        return Err(FermError::ModeCount { n: n.min(m), max: 31 });
    }
    if n + m > 31 {
        return Err(FermError::Overflow("check_minimal_superselection"));
    }
    let qubit_d = |k: usize| 1i128 << (2 * k);
    let v = |k: usize| qubit_d(k) - (1i128 << (2 * k - 1));
    let b = constraint_bounds(qubit_d(n), v(n), qubit_d(m), v(m), qubit_d(n + m))?;
    let v_nm = v(n + m);
    Ok(MinimalSuperselection { n, m, v_composite: v_nm, lower_bound: b.lower, saturated: v_nm == b.lower })
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// `sum_k C(n, 2k) 2^(n-2k) 4^k`, the number of bilocal product effects.
pub fn bilocal_effect_count(n: usize) -> Result<u128> {
    if n == 0 {
        return Err(FermError::ModeCount { n, max: 63 });
    }
    if n > 63 {
        return Err(FermError::Overflow("bilocal_effect_count"));
    }
    let n = n as u128;
    let mut total = 0u128;
    for k in 0..=(n / 2) {
        let term = binomial(n, 2 * k)
            .checked_mul(1u128 << (n - 2 * k))
            .and_then(|t| t.checked_mul(1u128 << (2 * k)))
            .ok_or(FermError::Overflow("bilocal_effect_count"))?;
        total = total.checked_add(term).ok_or(FermError::Overflow("bilocal_effect_count"))?;
    }
    Ok(total)
}

/// Pairwise composite dimensions `D_XY` for four systems A, B, C, D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDims {
    pub ab: i128,
    pub ac: i128,
    pub ad: i128,
    pub bc: i128,
    pub bd: i128,
    pub cd: i128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JellyfishReport {
    /// Four-party dimension from iterating the bilocal tripartite formula.
    pub iterated: i128,
    /// Right-hand side of the pairing-class identity.
    pub classes: i128,
    pub holds: bool,
}

/// Tripartite dimension under maximal bilocal tomography.
pub fn maxbil_tripartite(da: i128, db: i128, dc: i128, dab: i128, dac: i128, dbc: i128) -> i128 {
    da * db * dc + da * (dbc - db * dc) + db * (dac - da * dc) + dc * (dab - da * db)
}

pub fn jellyfish_dimension_check(single: [i128; 4], pairs: PairDims) -> Result<JellyfishReport> {
    let [a, b, c, d] = single;
    for (name, v) in [("D_A", a), ("D_B", b), ("D_C", c), ("D_D", d)] {
        if v <= 0 {
            return Err(FermError::NegativeInput(format!("{name} = {v}")));
        }
    }
    let checks = [
        ("AB", pairs.ab, a * b),
        ("AC", pairs.ac, a * c),
        ("AD", pairs.ad, a * d),
        ("BC", pairs.bc, b * c),
        ("BD", pairs.bd, b * d),
        ("CD", pairs.cd, c * d),
    ];
    for (name, dxy, prod) in checks {
        if dxy < prod {
            return Err(FermError::InconsistentDimensions(format!("D_{name} = {dxy} < {prod}")));
        }
    }
    // Treat (AB) as a single system and iterate the tripartite formula.
    let dab = pairs.ab;
    let dabc = maxbil_tripartite(a, b, c, pairs.ab, pairs.ac, pairs.bc);
    let dabd = maxbil_tripartite(a, b, d, pairs.ab, pairs.ad, pairs.bd);
    let iterated = maxbil_tripartite(dab, c, d, dabc, dabd, pairs.cd);
    let classes = pairs.ad * b * c + a * pairs.bc * d + pairs.ac * b * d + a * pairs.bd * c + pairs.ab * pairs.cd
        - 4 * a * b * c * d;
    Ok(JellyfishReport { iterated, classes, holds: iterated == classes })
}

/// Jellyfish inputs for four fermionic subsystems with the given mode counts.
pub fn fqt_jellyfish_inputs(modes: [usize; 4]) -> Result<([i128; 4], PairDims)> {
    let dim = |k: usize| -> Result<i128> { Ok(fqt_dimension(k)?.d_states as i128) };
    let [a, b, c, d] = modes;
    Ok((
        [dim(a)?, dim(b)?, dim(c)?, dim(d)?],
        PairDims {
            ab: dim(a + b)?,
            ac: dim(a + c)?,
            ad: dim(a + d)?,
            bc: dim(b + c)?,
            bd: dim(b + d)?,
            cd: dim(c + d)?,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_order() {
        assert_eq!(sector_permutation(2), vec![0, 3, 1, 2]);
    }

    #[test]
    fn dimension_values() {
        let d = fqt_dimension(1).unwrap();
        assert_eq!((d.d_states, d.v, d.d), (2, 2, 2));
        assert_eq!(fqt_dimension(3).unwrap().d_states, 32);
    }

    #[test]
    fn rebit_example() {
        let b = constraint_bounds(4, 1, 4, 1, 16).unwrap();
        assert_eq!(b.lower, 6);
        assert!(constraint_bounds(-1, 0, 0, 0, 0).is_err());
    }

    #[test]
    fn jellyfish_four_single_modes() {
        let (s, p) = fqt_jellyfish_inputs([1, 1, 1, 1]).unwrap();
        let r = jellyfish_dimension_check(s, p).unwrap();
        assert_eq!(r.iterated, 128);
        assert!(r.holds);
    }

    #[test]
    fn jellyfish_local_tomography() {
        let p = PairDims { ab: 9, ac: 12, ad: 15, bc: 12, bd: 15, cd: 20 };
        let r = jellyfish_dimension_check([3, 3, 4, 5], p).unwrap();
        assert_eq!(r.iterated, 3 * 3 * 4 * 5);
        assert!(r.holds);
    }

    #[test]
    fn jellyfish_rejects_small_pair() {
        let p = PairDims { ab: 3, ac: 4, ad: 4, bc: 4, bd: 4, cd: 4 };
        assert!(jellyfish_dimension_check([2, 2, 2, 2], p).is_err());
    }
}
