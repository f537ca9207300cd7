//! Field operators on `n` local fermionic modes.
//!
//! The annihilator of mode `i` is `Z x ... x Z x s- x I x ... x I` with `i-1`
//! leading `Z` factors and `s- = |0><1|`. Fock vectors are built by applying
//! creators to the vacuum in increasing mode order, which makes every Fock
//! vector a computational basis vector with sign `+1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FermError, Result};
use crate::linalg::{cr, eye, kron_all, pauli, CMat, CVec, C64};
use crate::sparse::SparseOperator;

pub const MAX_MODES: usize = 12;
pub const DENSE_MAX_MODES: usize = 10;

pub fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_MODES {
        return Err(FermError::ModeCount { n, max: MAX_MODES });
    }
    Ok(())
}

fn check_dense_n(n: usize) -> Result<()> {
    if n == 0 || n > DENSE_MAX_MODES {
        return Err(FermError::ModeCount { n, max: DENSE_MAX_MODES });
    }
    Ok(())
}

pub fn check_mode(i: usize, n: usize) -> Result<()> {
    if i == 0 || i > n {
        return Err(FermError::ModeOutOfRange { index: i, n });
    }
    Ok(())
}

/// A single creation or annihilation operator on a 1-based mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldOp {
    pub mode: usize,
    pub dagger: bool,
}

impl FieldOp {
    pub fn a(mode: usize) -> Self {
        Self { mode, dagger: false }
    }
    pub fn adag(mode: usize) -> Self {
        Self { mode, dagger: true }
    }
    pub fn adjoint(self) -> Self {
        Self { mode: self.mode, dagger: !self.dagger }
    }
}

/// Occupation string `s_1 ... s_n`, serialised as a string of `0`/`1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occupation(Vec<u8>);

impl Occupation {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(FermError::InvalidOccupation(format!("entry {b}")));
        }
        Ok(Self(bits))
    }

    pub fn from_index(idx: usize, n: usize) -> Self {
        Self(crate::linalg::bits_of(idx, n))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index(&self) -> usize {
        crate::linalg::index_of(&self.0)
    }

    pub fn parity(&self) -> u8 {
        parity_of(&self.0)
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for Occupation {
    type Err = FermError;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(FermError::InvalidOccupation(format!("character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Self)
    }
}

impl Serialize for Occupation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Occupation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `sum(s) mod 2`; 0 is the even sector.
pub fn parity_of(s: &[u8]) -> u8 {
    s.iter().fold(0, |p, &b| p ^ (b & 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldTerm {
    #[serde(with = "crate::json::complex_pair")]
    pub coeff: C64,
    pub monomial: Vec<FieldOp>,
}

/// Complex linear combination of ordered products of field operators.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldPolynomial {
    pub terms: Vec<FieldTerm>,
}

impl FieldPolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::monomial(cr(1.0), vec![])
    }

    pub fn monomial(coeff: C64, ops: Vec<FieldOp>) -> Self {
        Self { terms: vec![FieldTerm { coeff, monomial: ops }] }
    }

    pub fn number(i: usize) -> Self {
        Self::monomial(cr(1.0), vec![FieldOp::adag(i), FieldOp::a(i)])
    }

    pub fn push(&mut self, coeff: C64, ops: Vec<FieldOp>) {
        self.terms.push(FieldTerm { coeff, monomial: ops });
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut t = self.terms.clone();
        t.extend(other.terms.iter().cloned());
        Self { terms: t }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            terms: self.terms.iter().map(|t| FieldTerm { coeff: t.coeff * s, monomial: t.monomial.clone() }).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::new();
        for a in &self.terms {
            for b in &other.terms {
                let mut m = a.monomial.clone();
                m.extend_from_slice(&b.monomial);
                out.push(a.coeff * b.coeff, m);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| FieldTerm {
                    coeff: t.coeff.conj(),
                    monomial: t.monomial.iter().rev().map(|o| o.adjoint()).collect(),
                })
                .collect(),
        }
    }

    pub fn max_mode(&self) -> usize {
        self.terms.iter().flat_map(|t| t.monomial.iter().map(|o| o.mode)).max().unwrap_or(0)
    }

    /// True when every monomial has an even number of field operators.
    pub fn is_even(&self) -> bool {
        self.terms.iter().all(|t| t.monomial.len() % 2 == 0)
    }

    fn check_modes(&self, n: usize) -> Result<()> {
        for t in &self.terms {
            for o in &t.monomial {
                check_mode(o.mode, n)?;
            }
        }
        Ok(())
    }
}

/// Action of one field operator on basis state `idx`: `(sign, new_idx)` or `None` if it vanishes.
#[inline]
pub fn apply_field_op(op: FieldOp, idx: usize, n: usize) -> Option<(f64, usize)> {
    let bit = n - op.mode;
    let occupied = (idx >> bit) & 1 == 1;
    if occupied == op.dagger {
        return None;
    }
    let before = (idx >> (bit + 1)).count_ones();
    let sign = if before.is_multiple_of(2) { 1.0 } else { -1.0 };
    Some((sign, idx ^ (1 << bit)))
}

/// Action of an ordered product (rightmost factor first) on basis state `idx`.
pub fn apply_monomial(ops: &[FieldOp], idx: usize, n: usize) -> Option<(f64, usize)> {
    let mut sign = 1.0;
    let mut cur = idx;
    for &op in ops.iter().rev() {
        let (s, next) = apply_field_op(op, cur, n)?;
        sign *= s;
        cur = next;
    }
    Some((sign, cur))
}

/// Dense annihilator built as the literal Kronecker product.
pub fn annihilator(i: usize, n: usize) -> Result<CMat> {
    check_dense_n(n)?;
    check_mode(i, n)?;
    let mut factors = vec![pauli::z(); i - 1];
    factors.push(pauli::lower());
    factors.extend(std::iter::repeat_n(pauli::i2(), n - i));
    Ok(kron_all(factors.iter()))
}

pub fn creator(i: usize, n: usize) -> Result<CMat> {
    Ok(annihilator(i, n)?.adjoint())
}

pub fn annihilator_sparse(i: usize, n: usize) -> Result<SparseOperator> {
    check_n(n)?;
    check_mode(i, n)?;
    Ok(op_sparse(FieldOp::a(i), n))
}

pub fn creator_sparse(i: usize, n: usize) -> Result<SparseOperator> {
    check_n(n)?;
    check_mode(i, n)?;
    Ok(op_sparse(FieldOp::adag(i), n))
}

fn op_sparse(op: FieldOp, n: usize) -> SparseOperator {
    let d = 1usize << n;
    SparseOperator::from_triplets(d, (0..d).filter_map(|c| apply_field_op(op, c, n).map(|(s, r)| (r, c, cr(s)))))
}

/// `(a_1^+)^{s_1} ... (a_n^+)^{s_n} |vac>`
pub fn fock_vector(s: &Occupation) -> Result<CVec> {
    let order: Vec<usize> = (1..=s.len()).collect();
    fock_vector_ordered(s, &order)
}

/// Fock vector with the creators multiplied in the given mode order (leftmost first).
pub fn fock_vector_ordered(s: &Occupation, order: &[usize]) -> Result<CVec> {
    let n = s.len();
    check_n(n)?;
    check_order(order, n)?;
    let ops: Vec<FieldOp> = order.iter().filter(|&&m| s.bits()[m - 1] == 1).map(|&m| FieldOp::adag(m)).collect();
    let mut v = CVec::zeros(1 << n);
    let (sign, idx) = apply_monomial(&ops, 0, n).expect("distinct creators on vacuum never vanish");
    v[idx] = cr(sign);
    Ok(v)
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(FermError::InvalidPermutation(format!("length {} for {n} modes", order.len())));
    }
    for &m in order {
        if m == 0 || m > n || seen[m - 1] {
            return Err(FermError::InvalidPermutation(format!("{order:?}")));
        }
        seen[m - 1] = true;
    }
    Ok(())
}

/// `prod_i a_i a_i^+`, the projector on the vacuum.
pub fn vacuum_projector(n: usize) -> Result<CMat> {
    check_dense_n(n)?;
    let ops: Vec<FieldOp> = (1..=n).flat_map(|i| [FieldOp::a(i), FieldOp::adag(i)]).collect();
    evaluate_polynomial(&FieldPolynomial::monomial(cr(1.0), ops), n)
}

/// Diagonal of `prod_i (a_i a_i^+ - a_i^+ a_i)`.
fn parity_sign_diag(n: usize) -> Vec<f64> {
    (0..(1usize << n))
        .map(|idx| {
            (1..=n).fold(1.0, |acc, i| {
                let empty = apply_monomial(&[FieldOp::a(i), FieldOp::adag(i)], idx, n);
                let full = apply_monomial(&[FieldOp::adag(i), FieldOp::a(i)], idx, n);
                let v = empty.map_or(0.0, |(s, _)| s) - full.map_or(0.0, |(s, _)| s);
                acc * v
            })
        })
        .collect()
}

/// Parity projector `(I + prod_i (a_i a_i^+ - a_i^+ a_i)) / 2`; eigenvalue 1 on even strings.
pub fn parity_operator(n: usize) -> Result<CMat> {
    check_dense_n(n)?;
    let d = parity_sign_diag(n);
    Ok(CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&v| cr(0.5 * (1.0 + v))))))
}

/// Signed parity `prod_i (a_i a_i^+ - a_i^+ a_i)` (equal to `Z x ... x Z`).
pub fn parity_unitary(n: usize) -> Result<CMat> {
    check_dense_n(n)?;
    let d = parity_sign_diag(n);
    Ok(CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&v| cr(v)))))
}

/// Dense matrix of a field polynomial on `n` modes.
pub fn evaluate_polynomial(p: &FieldPolynomial, n: usize) -> Result<CMat> {
    check_dense_n(n)?;
    p.check_modes(n)?;
    let d = 1usize << n;
    let mut m = CMat::zeros(d, d);
    for t in &p.terms {
        for col in 0..d {
            if let Some((s, row)) = apply_monomial(&t.monomial, col, n) {
                m[(row, col)] += t.coeff * s;
            }
        }
    }
    Ok(m)
}

pub fn evaluate_polynomial_sparse(p: &FieldPolynomial, n: usize) -> Result<SparseOperator> {
    check_n(n)?;
    p.check_modes(n)?;
    let d = 1usize << n;
    Ok(SparseOperator::from_triplets(
        d,
        p.terms.iter().flat_map(|t| {
            (0..d).filter_map(move |col| apply_monomial(&t.monomial, col, n).map(|(s, row)| (row, col, t.coeff * s)))
        }),
    ))
}

/// Sign relating `|s><t|` to the ordered product `prod_i (a_i^+)^{s_i} a_i a_i^+ a_i^{t_i}`:
/// the product equals `(-1)^g |s><t|` with `g = sum_k (s_k xor t_k) sum_{i<k} t_i`.
pub fn expansion_sign(s: &[u8], t: &[u8]) -> f64 {
    let mut prefix_t = 0u32;
    let mut g = 0u32;
    for (&sk, &tk) in s.iter().zip(t) {
        g += ((sk ^ tk) as u32) * prefix_t;
        prefix_t += tk as u32;
    }
    if g.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// The monomial `prod_i (a_{m_i}^+)^{s_i} a_{m_i} a_{m_i}^+ a_{m_i}^{t_i}` over the listed modes.
pub fn matrix_unit_monomial(s: &[u8], t: &[u8], modes: &[usize]) -> Vec<FieldOp> {
    let mut ops = Vec::with_capacity(4 * modes.len());
    for ((&si, &ti), &m) in s.iter().zip(t).zip(modes) {
        if si == 1 {
            ops.push(FieldOp::adag(m));
        }
        ops.push(FieldOp::a(m));
        ops.push(FieldOp::adag(m));
        if ti == 1 {
            ops.push(FieldOp::a(m));
        }
    }
    ops
}

/// Field-polynomial form of a local operator given as a matrix on the listed
/// modes (local basis ordered as `modes`).
pub fn local_operator_polynomial(op: &CMat, modes: &[usize]) -> Result<FieldPolynomial> {
    let k = modes.len();
    crate::linalg::ensure_square(op, 1 << k)?;
    let mut sorted = modes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != k || sorted.first() == Some(&0) {
        return Err(FermError::InvalidModeSet(format!("{modes:?}")));
    }
    let mut p = FieldPolynomial::new();
    for x in 0..(1usize << k) {
        for y in 0..(1usize << k) {
            let v = op[(x, y)];
            if v == cr(0.0) {
                continue;
            }
            let (xb, yb) = (crate::linalg::bits_of(x, k), crate::linalg::bits_of(y, k));
            p.push(v * expansion_sign(&xb, &yb), matrix_unit_monomial(&xb, &yb, modes));
        }
    }
    Ok(p)
}

/// Operator on `n` modes obtained by reading a local matrix as a field polynomial
/// in the listed modes.
pub fn embed_local_operator(op: &CMat, modes: &[usize], n: usize) -> Result<CMat> {
    evaluate_polynomial(&local_operator_polynomial(op, modes)?, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarReport {
    pub n: usize,
    pub representation: String,
    pub max_mixed_residual: f64,
    pub max_same_residual: f64,
    pub max_residual: f64,
    pub relations_checked: usize,
}

/// Checks `{a_i, a_j^+} = delta_ij I` and `{a_i, a_j} = 0` for all pairs, using sparse arithmetic.
pub fn verify_car(n: usize) -> Result<CarReport> {
    check_n(n)?;
    let a: Vec<SparseOperator> = (1..=n).map(|i| annihilator_sparse(i, n)).collect::<Result<_>>()?;
    let ad: Vec<SparseOperator> = a.iter().map(SparseOperator::adjoint).collect();
    let id = SparseOperator::identity(1 << n);
    let zero = SparseOperator::zeros(1 << n);
    let (mut mixed, mut same, mut count) = (0.0f64, 0.0f64, 0usize);
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { &id } else { &zero };
            mixed = mixed.max(a[i].anticommutator(&ad[j]).max_abs_diff(expected));
            same = same.max(a[i].anticommutator(&a[j]).max_abs());
            count += 2;
        }
    }
    Ok(CarReport {
        n,
        representation: "sparse".into(),
        max_mixed_residual: mixed,
        max_same_residual: same,
        max_residual: mixed.max(same),
        relations_checked: count,
    })
}

/// Dense variant of [`verify_car`] (n <= 10), multiplying the Kronecker-product matrices.
pub fn verify_car_dense(n: usize) -> Result<CarReport> {
    check_dense_n(n)?;
    let a: Vec<CMat> = (1..=n).map(|i| annihilator(i, n)).collect::<Result<_>>()?;
    let ad: Vec<CMat> = a.iter().map(|m| m.adjoint()).collect();
    let id = eye(1 << n);
    let (mut mixed, mut same, mut count) = (0.0f64, 0.0f64, 0usize);
    for i in 0..n {
        for j in 0..n {
            let ac = crate::linalg::anticommutator(&a[i], &ad[j]);
            let r = if i == j { crate::linalg::max_abs_diff(&ac, &id) } else { crate::linalg::max_abs(&ac) };
            mixed = mixed.max(r);
            same = same.max(crate::linalg::max_abs(&crate::linalg::anticommutator(&a[i], &a[j])));
            count += 2;
        }
    }
    Ok(CarReport {
        n,
        representation: "dense".into(),
        max_mixed_residual: mixed,
        max_same_residual: same,
        max_residual: mixed.max(same),
        relations_checked: count,
    })
}
