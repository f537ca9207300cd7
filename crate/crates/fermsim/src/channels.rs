//! Kraus maps on fermionic modes: parity canonical form, the fermionic
//! partial trace and the ancilla dilation of channels.

use serde::{Deserialize, Serialize};

use crate::error::{FermError, Result};
use crate::fock::{
    check_n, embed_local_operator, evaluate_polynomial, expansion_sign, parity_unitary, FieldOp, FieldPolynomial,
};
use crate::json::MatrixJson;
use crate::linalg::{bits_of, c, cr, eye, kron, max_abs, max_abs_diff, real_rank, trace_product, CMat};
use crate::superselection::{pinch, sector_indices};

/// Parts below this magnitude are dropped by [`canonicalize`].
pub const CANONICAL_DROP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausOp {
    pub sign: i8,
    pub op: CMat,
}

/// Signed Kraus decomposition `rho -> sum_i s_i K_i rho K_i^+`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausMap {
    pub n_in: usize,
    pub n_out: usize,
    pub kraus: Vec<KrausOp>,
}

impl KrausMap {
    pub fn new(n_in: usize, n_out: usize, kraus: Vec<KrausOp>) -> Result<Self> {
        check_n(n_in)?;
        check_n(n_out)?;
        if kraus.is_empty() {
            return Err(FermError::InvalidKraus("no Kraus operators".into()));
        }
        for k in &kraus {
            if k.sign != 1 && k.sign != -1 {
                return Err(FermError::InvalidKraus(format!("sign {} is not +-1", k.sign)));
            }
            if k.op.nrows() != 1 << n_out || k.op.ncols() != 1 << n_in {
                return Err(FermError::DimensionMismatch {
                    expected: 1 << n_out,
                    got: if k.op.nrows() != 1 << n_out { k.op.nrows() } else { k.op.ncols() },
                });
            }
        }
        Ok(Self { n_in, n_out, kraus })
    }

    /// All signs `+1`.
    pub fn from_ops(n: usize, ops: Vec<CMat>) -> Result<Self> {
        Self::new(n, n, ops.into_iter().map(|op| KrausOp { sign: 1, op }).collect())
    }

    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        crate::linalg::ensure_square(rho, 1 << self.n_in)?;
        let d = 1usize << self.n_out;
        let mut out = CMat::zeros(d, d);
        for k in &self.kraus {
            out += (&k.op * rho * k.op.adjoint()) * cr(k.sign as f64);
        }
        Ok(out)
    }

    /// `max |sum_i s_i K_i^+ K_i - I|`
    pub fn trace_preservation_residual(&self) -> f64 {
        let d = 1usize << self.n_in;
        let mut s = CMat::zeros(d, d);
        for k in &self.kraus {
            s += (k.op.adjoint() * &k.op) * cr(k.sign as f64);
        }
        max_abs_diff(&s, &eye(d))
    }

    /// Sequential composition: `self` first, then `next`.
    pub fn then(&self, next: &KrausMap) -> Result<KrausMap> {
        if next.n_in != self.n_out {
            return Err(FermError::DimensionMismatch { expected: self.n_out, got: next.n_in });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for a in &self.kraus {
            for b in &next.kraus {
                kraus.push(KrausOp { sign: a.sign * b.sign, op: &b.op * &a.op });
            }
        }
        KrausMap::new(self.n_in, next.n_out, kraus)
    }

    pub fn to_json(&self) -> KrausMapJson {
        KrausMapJson {
            n_in: self.n_in,
            n_out: self.n_out,
            kraus: self
                .kraus
                .iter()
                .map(|k| KrausOpJson { sign: k.sign, op: MatrixJson::from_matrix(&k.op) })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausOpJson {
    pub sign: i8,
    pub op: MatrixJson,
}

/// `{"n_in", "n_out", "kraus": [{"sign", "op"}]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausMapJson {
    pub n_in: usize,
    pub n_out: usize,
    pub kraus: Vec<KrausOpJson>,
}

impl KrausMapJson {
    pub fn to_map(&self) -> Result<KrausMap> {
        KrausMap::new(
            self.n_in,
            self.n_out,
            self.kraus.iter().map(|k| Ok(KrausOp { sign: k.sign, op: k.op.to_matrix()? })).collect::<Result<_>>()?,
        )
    }
}

/// Even and odd parts `E = (K + P K P) / 2`, `O = (K - P K P) / 2` with `P` the signed parity.
pub fn split_even_odd(k: &CMat, n_in: usize, n_out: usize) -> Result<(CMat, CMat)> {
    let p_in = parity_unitary(n_in)?;
    let p_out = parity_unitary(n_out)?;
    crate::linalg::ensure_square(&p_out, k.nrows())?;
    if k.ncols() != p_in.nrows() {
        return Err(FermError::DimensionMismatch { expected: p_in.nrows(), got: k.ncols() });
    }
    let conj = &p_out * k * &p_in;
    Ok(((k + &conj) * cr(0.5), (k - &conj) * cr(0.5)))
}

/// Replaces each Kraus operator by its even and odd parts, keeping signs.
pub fn canonicalize(m: &KrausMap) -> Result<KrausMap> {
    let mut kraus = Vec::new();
    for k in &m.kraus {
        let (e, o) = split_even_odd(&k.op, m.n_in, m.n_out)?;
        for part in [e, o] {
            if max_abs(&part) > CANONICAL_DROP {
                kraus.push(KrausOp { sign: k.sign, op: part });
            }
        }
    }
    if kraus.is_empty() {
        return Err(FermError::InvalidKraus("all Kraus operators vanish".into()));
    }
    KrausMap::new(m.n_in, m.n_out, kraus)
}

/// Parity of a Kraus operator: `Some(0)` even, `Some(1)` odd, `None` mixed.
pub fn kraus_parity(k: &CMat, n_in: usize, n_out: usize, tol: f64) -> Result<Option<u8>> {
    let (e, o) = split_even_odd(k, n_in, n_out)?;
    Ok(match (max_abs(&e) > tol, max_abs(&o) > tol) {
        (true, false) => Some(0),
        (false, true) => Some(1),
        (false, false) => Some(0),
        (true, true) => None,
    })
}

/// Largest superselected part of the cross terms `E rho O^+ + O rho E^+` over a
/// spanning set of valid input states. These are the terms the canonical form
/// discards; a vanishing residual means no even effect can detect them.
pub fn cross_residual(m: &KrausMap) -> Result<f64> {
    let n = m.n_in;
    let mut worst = 0.0f64;
    let splits: Vec<(i8, CMat, CMat)> = m
        .kraus
        .iter()
        .map(|k| split_even_odd(&k.op, m.n_in, m.n_out).map(|(e, o)| (k.sign, e, o)))
        .collect::<Result<_>>()?;
    for basis in sector_basis(n) {
        let mut x = CMat::zeros(1 << m.n_out, 1 << m.n_out);
        for (s, e, o) in &splits {
            x += (e * &basis * o.adjoint() + o * &basis * e.adjoint()) * cr(*s as f64);
        }
        worst = worst.max(max_abs(&pinch(&x, m.n_out)));
    }
    Ok(worst)
}

/// Hermitian sector-wise matrix units: a basis of the superselected Hermitian operators.
pub fn sector_basis(n: usize) -> Vec<CMat> {
    let d = 1usize << n;
    let (e, o) = sector_indices(n);
    let mut out = Vec::new();
    for idx in [e, o] {
        for (a, &x) in idx.iter().enumerate() {
            for &y in &idx[a..] {
                if x == y {
                    let mut m = CMat::zeros(d, d);
                    m[(x, x)] = cr(1.0);
                    out.push(m);
                } else {
                    let mut re = CMat::zeros(d, d);
                    re[(x, y)] = cr(1.0);
                    re[(y, x)] = cr(1.0);
                    out.push(re);
                    let mut im = CMat::zeros(d, d);
                    im[(x, y)] = c(0.0, 1.0);
                    im[(y, x)] = c(0.0, -1.0);
                    out.push(im);
                }
            }
        }
    }
    out
}

fn check_keep(keep: &[usize], n: usize) -> Result<()> {
    check_n(n)?;
    if keep.is_empty() {
        return Err(FermError::InvalidModeSet("empty keep-set".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FermError::InvalidModeSet(format!("{keep:?} is not strictly increasing")));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k == 0 || k > n) {
        return Err(FermError::ModeOutOfRange { index: bad, n });
    }
    Ok(())
}

/// Exponent `f(s,t) = sum_{k traced} (s_k xor t_k) sum_{i kept, i<k} (s_i xor t_i)` counting
/// the transpositions needed to move traced factors to the left of kept ones.
pub fn field_exchange_exponent(s: &[u8], t: &[u8], keep: &[usize]) -> u32 {
    let kept = |m: usize| keep.contains(&m);
    let mut f = 0u32;
    for k in 1..=s.len() {
        if kept(k) {
            continue;
        }
        let diff_k = (s[k - 1] ^ t[k - 1]) as u32;
        if diff_k == 0 {
            continue;
        }
        f += (1..k).filter(|&i| kept(i)).map(|i| (s[i - 1] ^ t[i - 1]) as u32).sum::<u32>();
    }
    f
}

/// Fermionic partial trace keeping the listed (1-based, increasing) modes.
///
/// The state is expanded in ordered field monomials, traced factors are moved
/// past kept ones, and only terms diagonal on the traced modes survive.
pub fn partial_trace(rho: &CMat, keep: &[usize], n: usize) -> Result<CMat> {
    check_keep(keep, n)?;
    crate::linalg::ensure_square(rho, 1 << n)?;
    let m = keep.len();
    let traced: Vec<usize> = (1..=n).filter(|k| !keep.contains(k)).collect();
    let d = 1usize << n;
    let mut sigma = CMat::zeros(1 << m, 1 << m);
    for si in 0..d {
        let s = bits_of(si, n);
        for ti in 0..d {
            let v = rho[(si, ti)];
            if v == cr(0.0) {
                continue;
            }
            let t = bits_of(ti, n);
            if traced.iter().any(|&k| s[k - 1] != t[k - 1]) {
                continue;
            }
            let coeff = v * expansion_sign(&s, &t);
            let reorder = if field_exchange_exponent(&s, &t, keep).is_multiple_of(2) { 1.0 } else { -1.0 };
            let sk: Vec<u8> = keep.iter().map(|&k| s[k - 1]).collect();
            let tk: Vec<u8> = keep.iter().map(|&k| t[k - 1]).collect();
            let row = crate::linalg::index_of(&sk);
            let col = crate::linalg::index_of(&tk);
            sigma[(row, col)] += coeff * reorder * expansion_sign(&sk, &tk);
        }
    }
    Ok(sigma)
}

/// Independent marginal: solves `Tr[sigma a] = Tr[rho (a x I)]` over a basis of
/// superselected effects on the kept modes, each embedded through its field expansion.
pub fn marginal_oracle(rho: &CMat, keep: &[usize], n: usize) -> Result<CMat> {
    check_keep(keep, n)?;
    crate::linalg::ensure_square(rho, 1 << n)?;
    let m = keep.len();
    let basis = sector_basis(m);
    let k = basis.len();
    let b: Vec<f64> =
        basis.iter().map(|a| Ok(trace_product(rho, &embed_local_operator(a, keep, n)?).re)).collect::<Result<_>>()?;
    let gram: Vec<Vec<f64>> = basis.iter().map(|a| basis.iter().map(|bj| trace_product(bj, a).re).collect()).collect();
    let rank = real_rank(&gram, 1e-12);
    if rank < k {
        return Err(FermError::Underdetermined { rank, needed: k });
    }
    let g = nalgebra::DMatrix::from_fn(k, k, |i, j| gram[i][j]);
    let rhs = nalgebra::DVector::from_column_slice(&b);
    let coeffs = g.lu().solve(&rhs).ok_or(FermError::Underdetermined { rank, needed: k })?;
    let mut sigma = CMat::zeros(1 << m, 1 << m);
    for (cj, bj) in coeffs.iter().zip(&basis) {
        sigma += bj * cr(*cj);
    }
    Ok(sigma)
}

/// `ceil(log2 k)`, with an empty class contributing 0.
fn ceil_log2(k: usize) -> usize {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    }
}

/// Number of ancilla modes used by [`dilate`] for the given class sizes.
pub fn dilation_ancillas(n_even: usize, n_odd: usize) -> usize {
    ceil_log2(n_even).max(ceil_log2(n_odd)) + 1
}

/// Ancilla dilation `T = sum_i E_i E~_i + sum_i O_i O~_i` of a canonical channel.
#[derive(Debug, Clone)]
pub struct Dilation {
    pub n: usize,
    pub ancillas: usize,
    pub even_labels: Vec<String>,
    pub odd_labels: Vec<String>,
    /// Operator on `n + ancillas` modes, system modes first.
    pub t: CMat,
}

impl Dilation {
    /// Appends the ancilla vacuum, applies `T` and traces the ancillas out.
    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        crate::linalg::ensure_square(rho, 1 << self.n)?;
        let mut vac = CMat::zeros(1 << self.ancillas, 1 << self.ancillas);
        vac[(0, 0)] = cr(1.0);
        let big = &self.t * kron(rho, &vac) * self.t.adjoint();
        let keep: Vec<usize> = (1..=self.n).collect();
        partial_trace(&big, &keep, self.n + self.ancillas)
    }

    /// `max |V^+ V - I|` for `V = T (I x |vac>)`.
    pub fn isometry_residual(&self) -> f64 {
        let d = 1usize << self.n;
        let da = 1usize << self.ancillas;
        let v = CMat::from_fn(self.t.nrows(), d, |r, col| self.t[(r, col * da)]);
        max_abs_diff(&(v.adjoint() * v), &eye(d))
    }
}

pub fn dilate(m: &KrausMap, tol: f64) -> Result<Dilation> {
    if m.n_in != m.n_out {
        return Err(FermError::InvalidKraus("dilation needs n_in == n_out".into()));
    }
    if m.kraus.iter().any(|k| k.sign != 1) {
        return Err(FermError::InvalidKraus("dilation needs all signs +1".into()));
    }
    let n = m.n_in;
    let mut evens = Vec::new();
    let mut odds = Vec::new();
    for k in &m.kraus {
        match kraus_parity(&k.op, n, n, tol)? {
            Some(0) => evens.push(k.op.clone()),
            Some(_) => odds.push(k.op.clone()),
            None => return Err(FermError::InvalidKraus("Kraus operator mixes parities; canonicalize first".into())),
        }
    }
    let ancillas = dilation_ancillas(evens.len(), odds.len());
    let total = n + ancillas;
    check_n(total)?;
    let (even_strings, odd_strings) = sector_indices(ancillas);
    let creators = |idx: usize| -> FieldPolynomial {
        let bits = bits_of(idx, ancillas);
        let ops: Vec<FieldOp> = (0..ancillas).filter(|&a| bits[a] == 1).map(|a| FieldOp::adag(n + 1 + a)).collect();
        FieldPolynomial::monomial(cr(1.0), ops)
    };
    let da = 1usize << total;
    let mut t = CMat::zeros(da, da);
    let mut even_labels = Vec::new();
    let mut odd_labels = Vec::new();
    for (ops, strings, labels) in [(&evens, even_strings, &mut even_labels), (&odds, odd_strings, &mut odd_labels)] {
        for (k, &anc) in ops.iter().zip(strings.iter()) {
            // System modes precede the ancillas, so the field embedding of K is K x I.
            let sys = kron(k, &eye(1 << ancillas));
            t += sys * evaluate_polynomial(&creators(anc), total)?;
            labels.push(bits_of(anc, ancillas).iter().map(|b| b.to_string()).collect());
        }
    }
    Ok(Dilation { n, ancillas, even_labels, odd_labels, t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;

    #[test]
    fn ancilla_counts() {
        assert_eq!(dilation_ancillas(2, 0), 2);
        assert_eq!(dilation_ancillas(1, 1), 1);
        assert_eq!(dilation_ancillas(1, 0), 1);
        assert_eq!(dilation_ancillas(3, 1), 3);
    }

    #[test]
    fn split_identity_plus_annihilator() {
        let k = eye(2) + pauli::lower();
        let (e, o) = split_even_odd(&k, 1, 1).unwrap();
        assert!(max_abs_diff(&e, &eye(2)) < 1e-15);
        assert!(max_abs_diff(&o, &pauli::lower()) < 1e-15);
    }

    #[test]
    fn exchange_exponent_zero_on_diagonal_traced() {
        let s = [1, 0, 1];
        let t = [0, 0, 0];
        assert_eq!(field_exchange_exponent(&s, &t, &[1, 3]), 0);
        assert_eq!(field_exchange_exponent(&[1, 1, 0], &[0, 0, 0], &[1]), 1);
    }

    #[test]
    fn keep_set_validation() {
        let rho = eye(4) * cr(0.25);
        assert!(partial_trace(&rho, &[2, 1], 2).is_err());
        assert!(partial_trace(&rho, &[3], 2).is_err());
        assert!(partial_trace(&rho, &[], 2).is_err());
    }

    #[test]
    fn sector_basis_size() {
        assert_eq!(sector_basis(2).len(), 8);
        assert_eq!(sector_basis(3).len(), 32);
    }
}
