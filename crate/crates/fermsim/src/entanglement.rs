//! Entanglement of two and three local fermionic modes.
//!
//! The two-qubit concurrence uses Wootters' closed form. Fermionic measures
//! average the two-qubit quantity over the parity sectors, each sector state
//! evaluated as a 4x4 matrix with zeros outside its sector.

pub mod locc;

use serde::{Deserialize, Serialize};

use crate::channels::partial_trace;
use crate::error::{FermError, Result};
use crate::linalg::{
    c, cr, eigvalsh, ensure_square, hermitian_residual, kron, max_abs, partial_transpose, pauli, qubit_partial_trace,
    trace, trace_product, CMat, CVec,
};
use crate::superselection::{embed_block, is_valid_fqt_state, sector_indices, split_sectors};

/// Coefficients below this magnitude count as zero in [`mes_membership`].
pub const MES_FLOOR: f64 = 1e-9;

fn check_two_qubit(rho: &CMat, tol: f64) -> Result<CMat> {
    ensure_square(rho, 4)?;
    let h = hermitian_residual(rho);
    if h > tol {
        return Err(FermError::NotHermitian(h));
    }
    let min = eigvalsh(rho)[0];
    if min < -tol {
        return Err(FermError::NotPositive(min));
    }
    let t = trace(rho).re;
    if t <= tol {
        return Err(FermError::InvalidState("zero trace".into()));
    }
    Ok(rho / cr(t))
}

/// `(Y x Y) rho* (Y x Y)`
pub fn spin_flip(rho: &CMat) -> CMat {
    let yy = kron(&pauli::y(), &pauli::y());
    &yy * rho.conjugate() * &yy
}

/// Eigenvalues below this (after normalisation) are treated as exact zeros by
/// [`wootters_concurrence`]; their square roots would otherwise leak ~1e-8 noise.
pub const WOOTTERS_FLOOR: f64 = 1e-14;

/// Wootters concurrence `max(0, l1 - l2 - l3 - l4)` of a two-qubit state (normalised first).
///
/// The `l_i` are computed as singular values of `tau_ij = v_i^T (Y x Y) v_j` over the
/// subnormalised eigenvectors `v_i` of `rho`, which avoids square roots of
/// round-off sized eigenvalues.
pub fn wootters_concurrence(rho: &CMat, tol: f64) -> Result<f64> {
    let rho = check_two_qubit(rho, tol)?;
    let (vals, vecs) = crate::linalg::eigh(&rho);
    let yy = kron(&pauli::y(), &pauli::y());
    let support: Vec<CVec> =
        (0..4).filter(|&i| vals[i] > WOOTTERS_FLOOR).map(|i| vecs.column(i) * cr(vals[i].sqrt())).collect();
    let k = support.len();
    let tau = CMat::from_fn(k, k, |i, j| (support[i].transpose() * &yy * &support[j])[(0, 0)]);
    let mut l: Vec<f64> = tau.singular_values().iter().copied().collect();
    l.resize(4, 0.0);
    l.sort_by(|a, b| b.total_cmp(a));
    Ok((l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0))
}

/// `|<psi| Y x Y |psi*>| = 2 |a00 a11 - a01 a10|`
pub fn pure_concurrence(psi: &CVec) -> f64 {
    let nrm = psi.norm_squared();
    (2.0 * (psi[0] * psi[3] - psi[1] * psi[2]).norm() / nrm).min(1.0)
}

pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// `h((1 + sqrt(1 - x^2)) / 2)`
pub fn eof_from_concurrence(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    binary_entropy((1.0 + (1.0 - x * x).max(0.0).sqrt()) / 2.0)
}

pub fn entanglement_of_formation_2q(rho: &CMat, tol: f64) -> Result<f64> {
    Ok(eof_from_concurrence(wootters_concurrence(rho, tol)?))
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &CMat) -> f64 {
    eigvalsh(rho).into_iter().map(|v| if v > 1e-15 { -v * v.log2() } else { 0.0 }).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceReport {
    pub value: f64,
    pub p0: f64,
    pub c0: f64,
    pub p1: f64,
    pub c1: f64,
}

fn checked_sectors(rho: &CMat, tol: f64) -> Result<crate::superselection::ParityState> {
    let v = is_valid_fqt_state(rho, 2, tol)?;
    if !v.valid {
        return Err(FermError::InvalidState(format!(
            "min eigenvalue {:e}, trace {}, parity commutator {:e}",
            v.min_eigenvalue, v.trace, v.parity_commutator
        )));
    }
    if (v.trace - 1.0).abs() > tol.max(1e-9) {
        return Err(FermError::InvalidState(format!("trace {} is not 1", v.trace)));
    }
    split_sectors(rho, 2, tol)
}

fn sector_value(ps: &crate::superselection::ParityState, f: impl Fn(&CMat) -> Result<f64>) -> Result<[(f64, f64); 2]> {
    let (e, o) = sector_indices(2);
    let mut out = [(0.0, 0.0); 2];
    for (k, (p, block, idx)) in [(ps.p0, &ps.rho0, e), (ps.p1, &ps.rho1, o)].into_iter().enumerate() {
        out[k] = (p, if p > 1e-12 { f(&embed_block(block, idx, 4))? } else { 0.0 });
    }
    Ok(out)
}

/// `C_F = p0 C(rho0) + p1 C(rho1)`
pub fn fermionic_concurrence(rho: &CMat, tol: f64) -> Result<ConcurrenceReport> {
    let ps = checked_sectors(rho, tol)?;
    let [(p0, c0), (p1, c1)] = sector_value(&ps, |r| wootters_concurrence(r, tol))?;
    Ok(ConcurrenceReport { value: p0 * c0 + p1 * c1, p0, c0, p1, c1 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EofReport {
    /// Lower bound on the fermionic entanglement of formation.
    pub lower_bound: f64,
    pub p0: f64,
    pub e0: f64,
    pub p1: f64,
    pub e1: f64,
    /// Set when `C_F = 1`, where the bound equals the operational quantity.
    pub equals_operational: bool,
}

/// `p0 E(rho0) + p1 E(rho1)`
pub fn fermionic_eof_lower(rho: &CMat, tol: f64) -> Result<EofReport> {
    let ps = checked_sectors(rho, tol)?;
    let [(p0, e0), (p1, e1)] = sector_value(&ps, |r| entanglement_of_formation_2q(r, tol))?;
    let cf = fermionic_concurrence(rho, tol)?.value;
    Ok(EofReport { lower_bound: p0 * e0 + p1 * e1, p0, e0, p1, e1, equals_operational: (cf - 1.0).abs() < 1e-9 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityWitness {
    pub separable: bool,
    pub max_off_diagonal: f64,
    pub row: Option<String>,
    pub col: Option<String>,
}

/// Separability with respect to the partition into single modes: diagonal in the Fock basis.
pub fn full_separability_test(rho: &CMat, n: usize, tol: f64) -> Result<SeparabilityWitness> {
    let v = is_valid_fqt_state(rho, n, tol)?;
    if !v.valid {
        return Err(FermError::InvalidState("input is not a valid state".into()));
    }
    let (mut best, mut at) = (0.0f64, None);
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            if i != j && rho[(i, j)].norm() > best {
                best = rho[(i, j)].norm();
                at = Some((i, j));
            }
        }
    }
    let label = |k: usize| crate::fock::Occupation::from_index(k, n).to_string();
    let separable = best <= tol;
    Ok(SeparabilityWitness {
        separable,
        max_off_diagonal: best,
        row: if separable { None } else { at.map(|p| label(p.0)) },
        col: if separable { None } else { at.map(|p| label(p.1)) },
    })
}

/// `Tr[rho P]` for a Pauli word such as `"XX"`.
pub fn pauli_correlator(rho: &CMat, word: &str) -> Result<f64> {
    let ops: Vec<CMat> = word
        .chars()
        .map(|ch| match ch {
            'I' => Ok(pauli::i2()),
            'X' => Ok(pauli::x()),
            'Y' => Ok(pauli::y()),
            'Z' => Ok(pauli::z()),
            other => Err(FermError::InvalidPauli(format!("letter {other:?}"))),
        })
        .collect::<Result<_>>()?;
    let p = crate::linalg::kron_all(ops.iter());
    ensure_square(rho, p.nrows())?;
    Ok(trace_product(rho, &p).re)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSeparability {
    pub separable: bool,
    pub local_parity_commutators: [f64; 2],
    pub sector_min_partial_transpose: [f64; 2],
}

/// Two-mode separability: commutes with each local parity and every sector block is PPT.
pub fn bipartite_sector_separability(rho: &CMat, tol: f64) -> Result<SectorSeparability> {
    let ps = checked_sectors(rho, tol)?;
    let z1 = kron(&pauli::z(), &pauli::i2());
    let z2 = kron(&pauli::i2(), &pauli::z());
    let comm = [max_abs(&crate::linalg::commutator(rho, &z1)), max_abs(&crate::linalg::commutator(rho, &z2))];
    let [(_, m0), (_, m1)] = sector_value(&ps, |r| Ok(eigvalsh(&partial_transpose(r, 2, &[1]))[0]))?;
    Ok(SectorSeparability {
        separable: comm[0] < tol && comm[1] < tol && m0 >= -tol && m1 >= -tol,
        local_parity_commutators: comm,
        sector_min_partial_transpose: [m0, m1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MesClass {
    #[serde(rename = "MES_0")]
    Mes0,
    #[serde(rename = "MES_1")]
    Mes1,
    #[serde(rename = "neither")]
    Neither,
}

/// Membership of a normalised two-mode pure state in `MES_0` (`a|00> + b|11>`) or `MES_1` (`a|01> + b|10>`).
pub fn mes_membership(psi: &CVec, tol: f64) -> Result<MesClass> {
    if psi.len() != 4 {
        return Err(FermError::DimensionMismatch { expected: 4, got: psi.len() });
    }
    if (psi.norm() - 1.0).abs() > tol.max(1e-9) {
        return Err(FermError::InvalidState(format!("norm {}", psi.norm())));
    }
    let nz = |k: usize| psi[k].norm() > MES_FLOOR;
    let even = nz(0) || nz(3);
    let odd = nz(1) || nz(2);
    if even && odd {
        return Err(FermError::InvalidState("pure state mixes parity sectors".into()));
    }
    Ok(if nz(0) && nz(3) {
        MesClass::Mes0
    } else if nz(1) && nz(2) {
        MesClass::Mes1
    } else {
        MesClass::Neither
    })
}

/// As [`mes_membership`] for a density matrix, which must be pure.
pub fn mes_membership_density(rho: &CMat, tol: f64) -> Result<MesClass> {
    ensure_square(rho, 4)?;
    let purity = trace_product(rho, rho).re;
    if (purity - 1.0).abs() > tol.max(1e-9) {
        return Err(FermError::MixedInput(purity));
    }
    let (_, vecs) = crate::linalg::eigh(rho);
    let v = vecs.column(3).into_owned();
    mes_membership(&v, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonogamyReport {
    pub c_ab: f64,
    pub c_ac: f64,
    pub sum_of_squares: f64,
    pub violated: bool,
}

/// Fermionic concurrences of the `AB` and `AC` marginals of a three-mode pure state.
pub fn monogamy_witness(psi: &CVec, tol: f64) -> Result<MonogamyReport> {
    if psi.len() != 8 {
        return Err(FermError::DimensionMismatch { expected: 8, got: psi.len() });
    }
    if (psi.norm() - 1.0).abs() > tol.max(1e-9) {
        return Err(FermError::InvalidState(format!("norm {}", psi.norm())));
    }
    let rho = psi * psi.adjoint();
    let v = is_valid_fqt_state(&rho, 3, tol)?;
    if !v.valid {
        return Err(FermError::InvalidState("pure state mixes parity sectors".into()));
    }
    let c_ab = fermionic_concurrence(&partial_trace(&rho, &[1, 2], 3)?, tol)?.value;
    let c_ac = fermionic_concurrence(&partial_trace(&rho, &[1, 3], 3)?, tol)?.value;
    let s = c_ab * c_ab + c_ac * c_ac;
    Ok(MonogamyReport { c_ab, c_ac, sum_of_squares: s, violated: s > 1.0 + tol })
}

/// Same quantities for three qubits through the ordinary partial trace and Wootters' formula.
pub fn qubit_monogamy(psi: &CVec, tol: f64) -> Result<MonogamyReport> {
    if psi.len() != 8 {
        return Err(FermError::DimensionMismatch { expected: 8, got: psi.len() });
    }
    let rho = psi * psi.adjoint() / cr(psi.norm_squared());
    let c_ab = wootters_concurrence(&qubit_partial_trace(&rho, 3, &[0, 1]), tol)?;
    let c_ac = wootters_concurrence(&qubit_partial_trace(&rho, 3, &[0, 2]), tol)?;
    let s = c_ab * c_ab + c_ac * c_ac;
    Ok(MonogamyReport { c_ab, c_ac, sum_of_squares: s, violated: s > 1.0 + tol })
}

/// `(|000> + |110> + |011> + |101>) / 2`
pub fn phi_prime() -> CVec {
    let mut v = CVec::zeros(8);
    for idx in [0b000, 0b110, 0b011, 0b101] {
        v[idx] = cr(0.5);
    }
    v
}

/// `(I x I + X x X) / 4`, an equal mixture of the two sector Bell states.
pub fn phi_mixed() -> CMat {
    (crate::linalg::eye(4) + kron(&pauli::x(), &pauli::x())) * cr(0.25)
}

/// Average concurrence of a random decomposition `rho = sum_i p_i |psi_i><psi_i|`
/// with `k` elements, obtained by mixing the eigen-decomposition with a random isometry.
pub fn sampled_decomposition_concurrence(rho: &CMat, k: usize, rng: &mut crate::random::Rng) -> f64 {
    sampled_decomposition_average(rho, k, rng, pure_concurrence)
}

pub fn sampled_decomposition_eof(rho: &CMat, k: usize, rng: &mut crate::random::Rng) -> f64 {
    sampled_decomposition_average(rho, k, rng, |v| eof_from_concurrence(pure_concurrence(v)))
}

fn sampled_decomposition_average(rho: &CMat, k: usize, rng: &mut crate::random::Rng, f: impl Fn(&CVec) -> f64) -> f64 {
    let (vals, vecs) = crate::linalg::eigh(rho);
    let support: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 1e-14).collect();
    let r = support.len();
    let k = k.max(r);
    let u = crate::random::unitary(rng, k);
    let mut total = 0.0;
    for i in 0..k {
        let mut v = CVec::zeros(rho.nrows());
        for (j, &s) in support.iter().enumerate() {
            v += vecs.column(s) * (u[(i, j)] * vals[s].sqrt());
        }
        let p = v.norm_squared();
        if p > 1e-15 {
            total += p * f(&v);
        }
    }
    total
}

/// `cos t |00> + sin t |11>`
pub fn mes0_state(theta: f64) -> CVec {
    CVec::from_vec(vec![cr(theta.cos()), cr(0.0), cr(0.0), cr(theta.sin())])
}

/// `(|00> + |11>) / sqrt 2` and `(|01> + |10>) / sqrt 2` as density matrices.
pub fn sector_bell(parity: u8) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = if parity == 0 {
        CVec::from_vec(vec![cr(s), cr(0.0), cr(0.0), cr(s)])
    } else {
        CVec::from_vec(vec![cr(0.0), cr(s), cr(s), cr(0.0)])
    };
    &v * v.adjoint()
}

/// Local phase `diag(1, e^{i t})` on one of two modes.
pub fn local_phase(mode: usize, t: f64) -> CMat {
    let ph = crate::linalg::diag(&[cr(1.0), c(t.cos(), t.sin())]);
    if mode == 1 {
        kron(&ph, &pauli::i2())
    } else {
        kron(&pauli::i2(), &ph)
    }
}
