//! Symbolic Jordan-Wigner images of field polynomials.
//!
//! Pauli strings use the letters `I X Y Z + -` with `+ = |1><0|` and
//! `- = |0><1|`. Products are normalised into the per-site basis `{I, Z, +, -}`,
//! which makes the canonical form unique. The image of `a_i` under ordering `pi`
//! has `Z` on positions `pi(1) .. pi(i-1)` and `-` on position `pi(i)`.
//!
//! Sign convention: with `Z = diag(1, -1)` in the occupation basis,
//! `Z_i = J(a_i a_i^+ - a_i^+ a_i)`, so the number-difference `a^+ a - a a^+` maps to `-Z`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FermError, Result};
use crate::fock::{check_mode, check_n, FieldOp, FieldPolynomial, DENSE_MAX_MODES};
use crate::linalg::{c, cr, max_abs_diff, pauli, CMat, C64};
use crate::sparse::SparseOperator;

/// Coefficients below this magnitude are dropped from canonical forms.
pub const PAULI_DROP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
    Plus,
    Minus,
}

impl PauliLetter {
    pub fn to_char(self) -> char {
        match self {
            Self::I => 'I',
            Self::X => 'X',
            Self::Y => 'Y',
            Self::Z => 'Z',
            Self::Plus => '+',
            Self::Minus => '-',
        }
    }

    pub fn from_char(ch: char) -> Result<Self> {
        Ok(match ch {
            'I' => Self::I,
            'X' => Self::X,
            'Y' => Self::Y,
            'Z' => Self::Z,
            '+' => Self::Plus,
            '-' | '\u{2212}' => Self::Minus,
            other => return Err(FermError::InvalidPauli(format!("letter {other:?}"))),
        })
    }

    pub fn matrix(self) -> CMat {
        match self {
            Self::I => pauli::i2(),
            Self::X => pauli::x(),
            Self::Y => pauli::y(),
            Self::Z => pauli::z(),
            Self::Plus => pauli::raise(),
            Self::Minus => pauli::lower(),
        }
    }

    /// Action on occupation bit `b`: `(amplitude, new bit)` or `None`.
    #[inline]
    pub fn apply(self, b: u8) -> Option<(C64, u8)> {
        match (self, b) {
            (Self::I, _) => Some((cr(1.0), b)),
            (Self::Z, 0) => Some((cr(1.0), 0)),
            (Self::Z, _) => Some((cr(-1.0), 1)),
            (Self::X, _) => Some((cr(1.0), 1 - b)),
            (Self::Y, 0) => Some((c(0.0, 1.0), 1)),
            (Self::Y, _) => Some((c(0.0, -1.0), 0)),
            (Self::Plus, 0) => Some((cr(1.0), 1)),
            (Self::Minus, 1) => Some((cr(1.0), 0)),
            _ => None,
        }
    }
}

type M2 = [[C64; 2]; 2];

fn letter_array(l: PauliLetter) -> M2 {
    let (o, z, i) = (cr(1.0), cr(0.0), c(0.0, 1.0));
    match l {
        PauliLetter::I => [[o, z], [z, o]],
        PauliLetter::X => [[z, o], [o, z]],
        PauliLetter::Y => [[z, -i], [i, z]],
        PauliLetter::Z => [[o, z], [z, -o]],
        PauliLetter::Plus => [[z, z], [o, z]],
        PauliLetter::Minus => [[z, o], [z, z]],
    }
}

/// Expansion of a 2x2 matrix in the basis `{I, Z, +, -}`.
fn decompose_2x2(m: &M2) -> Vec<(C64, PauliLetter)> {
    let parts = [
        ((m[0][0] + m[1][1]) * 0.5, PauliLetter::I),
        ((m[0][0] - m[1][1]) * 0.5, PauliLetter::Z),
        (m[1][0], PauliLetter::Plus),
        (m[0][1], PauliLetter::Minus),
    ];
    parts.into_iter().filter(|(v, _)| v.norm() > 0.0).collect()
}

fn letter_product(a: PauliLetter, b: PauliLetter) -> Vec<(C64, PauliLetter)> {
    let (x, y) = (letter_array(a), letter_array(b));
    let mut m = [[cr(0.0); 2]; 2];
    for r in 0..2 {
        for col in 0..2 {
            m[r][col] = x[r][0] * y[0][col] + x[r][1] * y[1][col];
        }
    }
    decompose_2x2(&m)
}

/// Canonical sum of Pauli strings on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliPolynomial {
    pub n: usize,
    terms: BTreeMap<Vec<PauliLetter>, C64>,
}

impl PauliPolynomial {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut p = Self::zero(n);
        p.terms.insert(vec![PauliLetter::I; n], cr(1.0));
        p
    }

    /// Single string, normalised into the canonical basis.
    pub fn from_string(coeff: C64, letters: &[PauliLetter]) -> Self {
        let n = letters.len();
        let mut acc: Vec<(C64, Vec<PauliLetter>)> = vec![(coeff, Vec::with_capacity(n))];
        for &l in letters {
            let parts = decompose_2x2(&letter_array(l));
            acc = acc
                .into_iter()
                .flat_map(|(cf, s)| {
                    parts.iter().map(move |&(v, nl)| {
                        let mut s2 = s.clone();
                        s2.push(nl);
                        (cf * v, s2)
                    })
                })
                .collect();
        }
        let mut p = Self::zero(n);
        for (cf, s) in acc {
            p.add_term(s, cf);
        }
        p.prune();
        p
    }

    pub fn parse_string(coeff: C64, s: &str) -> Result<Self> {
        let letters: Vec<PauliLetter> = s.chars().map(PauliLetter::from_char).collect::<Result<_>>()?;
        Ok(Self::from_string(coeff, &letters))
    }

    fn add_term(&mut self, s: Vec<PauliLetter>, v: C64) {
        *self.terms.entry(s).or_insert(cr(0.0)) += v;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, v| v.norm() > PAULI_DROP);
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<PauliLetter>, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (s, v) in &other.terms {
            p.add_term(s.clone(), *v);
        }
        p.prune();
        p
    }

    pub fn scale(&self, f: C64) -> Self {
        let mut p = self.clone();
        for v in p.terms.values_mut() {
            *v *= f;
        }
        p.prune();
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = Self::zero(self.n);
        for (a, va) in &self.terms {
            for (b, vb) in &other.terms {
                let mut acc: Vec<(C64, Vec<PauliLetter>)> = vec![(*va * *vb, Vec::with_capacity(self.n))];
                for (&la, &lb) in a.iter().zip(b) {
                    let parts = letter_product(la, lb);
                    acc = acc
                        .into_iter()
                        .flat_map(|(cf, s)| {
                            parts.iter().map(move |&(v, nl)| {
                                let mut s2 = s.clone();
                                s2.push(nl);
                                (cf * v, s2)
                            })
                        })
                        .collect();
                    if acc.is_empty() {
                        break;
                    }
                }
                for (cf, s) in acc {
                    out.add_term(s, cf);
                }
            }
        }
        out.prune();
        out
    }

    /// Largest coefficient of `self - other`.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        self.add(&other.scale(cr(-1.0))).terms.values().fold(0.0, |m, v| m.max(v.norm()))
    }

    fn apply_string(s: &[PauliLetter], idx: usize, n: usize) -> Option<(C64, usize)> {
        let mut amp = cr(1.0);
        let mut out = 0usize;
        for (k, &l) in s.iter().enumerate() {
            let b = ((idx >> (n - 1 - k)) & 1) as u8;
            let (a, nb) = l.apply(b)?;
            amp *= a;
            out |= (nb as usize) << (n - 1 - k);
        }
        Some((amp, out))
    }

    /// Dense matrix (n <= 10).
    pub fn to_matrix(&self) -> Result<CMat> {
        if self.n == 0 || self.n > DENSE_MAX_MODES {
            return Err(FermError::ModeCount { n: self.n, max: DENSE_MAX_MODES });
        }
        let d = 1usize << self.n;
        let mut m = CMat::zeros(d, d);
        for (s, v) in &self.terms {
            for col in 0..d {
                if let Some((a, row)) = Self::apply_string(s, col, self.n) {
                    m[(row, col)] += *v * a;
                }
            }
        }
        Ok(m)
    }

    pub fn to_sparse(&self) -> Result<SparseOperator> {
        check_n(self.n)?;
        let d = 1usize << self.n;
        Ok(SparseOperator::from_triplets(
            d,
            self.terms.iter().flat_map(|(s, v)| {
                (0..d).filter_map(move |col| Self::apply_string(s, col, self.n).map(|(a, row)| (row, col, *v * a)))
            }),
        ))
    }

    pub fn to_json(&self) -> PauliPolynomialJson {
        PauliPolynomialJson {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(s, v)| PauliTermJson { coeff: *v, letters: s.iter().map(|l| l.to_char()).collect() })
                .collect(),
        }
    }
}

impl fmt::Display for PauliPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (s, v)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let letters: String = s.iter().map(|l| l.to_char()).collect();
            write!(f, "({:.6}{:+.6}i) {letters}", v.re, v.im)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTermJson {
    #[serde(with = "crate::json::complex_pair")]
    pub coeff: C64,
    pub letters: String,
}

/// `{"n", "terms": [{"coeff": [re, im], "letters": "..."}]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliPolynomialJson {
    pub n: usize,
    pub terms: Vec<PauliTermJson>,
}

impl PauliPolynomialJson {
    pub fn to_polynomial(&self) -> Result<PauliPolynomial> {
        let mut p = PauliPolynomial::zero(self.n);
        for t in &self.terms {
            if t.letters.chars().count() != self.n {
                return Err(FermError::InvalidPauli(format!("'{}' has wrong length", t.letters)));
            }
            p = p.add(&PauliPolynomial::parse_string(t.coeff, &t.letters)?);
        }
        Ok(p)
    }
}

/// Identity ordering `(1, 2, ..., n)`.
pub fn trivial_ordering(n: usize) -> Vec<usize> {
    (1..=n).collect()
}

fn check_ordering(pi: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if pi.len() != n {
        return Err(FermError::InvalidPermutation(format!("length {} for {n} modes", pi.len())));
    }
    for &p in pi {
        if p == 0 || p > n || seen[p - 1] {
            return Err(FermError::InvalidPermutation(format!("{pi:?}")));
        }
        seen[p - 1] = true;
    }
    Ok(())
}

/// Image of `a_i` under ordering `pi` (1-based positions).
pub fn jwt_annihilator(i: usize, pi: &[usize], n: usize) -> Result<PauliPolynomial> {
    check_n(n)?;
    check_mode(i, n)?;
    check_ordering(pi, n)?;
    let mut letters = vec![PauliLetter::I; n];
    for &p in &pi[..i - 1] {
        letters[p - 1] = PauliLetter::Z;
    }
    letters[pi[i - 1] - 1] = PauliLetter::Minus;
    Ok(PauliPolynomial::from_string(cr(1.0), &letters))
}

pub fn jwt_field_op(op: FieldOp, pi: &[usize], n: usize) -> Result<PauliPolynomial> {
    check_n(n)?;
    check_mode(op.mode, n)?;
    check_ordering(pi, n)?;
    let mut letters = vec![PauliLetter::I; n];
    for &p in &pi[..op.mode - 1] {
        letters[p - 1] = PauliLetter::Z;
    }
    letters[pi[op.mode - 1] - 1] = if op.dagger { PauliLetter::Plus } else { PauliLetter::Minus };
    Ok(PauliPolynomial::from_string(cr(1.0), &letters))
}

/// Image of a field polynomial; homomorphic in products and sums.
pub fn jwt_polynomial(p: &FieldPolynomial, pi: &[usize], n: usize) -> Result<PauliPolynomial> {
    check_n(n)?;
    check_ordering(pi, n)?;
    let mut out = PauliPolynomial::zero(n);
    for t in &p.terms {
        let mut prod = PauliPolynomial::identity(n).scale(t.coeff);
        for &op in &t.monomial {
            prod = prod.mul(&jwt_field_op(op, pi, n)?);
        }
        out = out.add(&prod);
    }
    Ok(out)
}

/// Qubit permutation `Q` with `Q (A_1 x ... x A_n) Q^+` placing `A_k` on position `pi(k)`.
pub fn qubit_permutation(pi: &[usize], n: usize) -> Result<CMat> {
    check_ordering(pi, n)?;
    Ok(crate::linalg::permutation_operator(n, |b| {
        let mut out = vec![0u8; n];
        for (k, &p) in pi.iter().enumerate() {
            out[p - 1] = b[k];
        }
        out
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliIdentityReport {
    pub n: usize,
    /// `X_i = Z_1..Z_{i-1} J(a_i + a_i^+)`
    pub x_residual: f64,
    /// `Y_i = -i Z_1..Z_{i-1} J(a_i - a_i^+)`
    pub y_residual: f64,
    /// `Z_i = J(a_i a_i^+ - a_i^+ a_i)`
    pub z_residual: f64,
    /// `Z_i + J(a_i^+ a_i - a_i a_i^+)`, zero when the number difference maps to `-Z`.
    pub z_number_difference_residual: f64,
    /// Image of the signed parity against `Z x ... x Z`.
    pub parity_residual: f64,
    pub max_residual: f64,
}

/// Recovers the single-qubit Paulis from field operators, symbolically and as matrices.
pub fn pauli_from_fields_identities(n: usize) -> Result<PauliIdentityReport> {
    check_n(n)?;
    let pi = trivial_ordering(n);
    let dense = n <= DENSE_MAX_MODES;
    let residual = |a: &PauliPolynomial, b: &PauliPolynomial| -> Result<f64> {
        let sym = a.max_coeff_diff(b);
        let num = if dense {
            max_abs_diff(&a.to_matrix()?, &b.to_matrix()?)
        } else {
            a.to_sparse()?.max_abs_diff(&b.to_sparse()?)
        };
        Ok(sym.max(num))
    };
    let single = |i: usize, l: PauliLetter| {
        let mut s = vec![PauliLetter::I; n];
        s[i - 1] = l;
        PauliPolynomial::from_string(cr(1.0), &s)
    };
    let zstring = |i: usize| {
        let mut s = vec![PauliLetter::I; n];
        for item in s.iter_mut().take(i - 1) {
            *item = PauliLetter::Z;
        }
        PauliPolynomial::from_string(cr(1.0), &s)
    };
    let (mut rx, mut ry, mut rz, mut rzn) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 1..=n {
        let a = FieldPolynomial::monomial(cr(1.0), vec![FieldOp::a(i)]);
        let ad = FieldPolynomial::monomial(cr(1.0), vec![FieldOp::adag(i)]);
        let jx = zstring(i).mul(&jwt_polynomial(&a.add(&ad), &pi, n)?);
        rx = rx.max(residual(&single(i, PauliLetter::X), &jx)?);
        let jy = zstring(i).mul(&jwt_polynomial(&a.add(&ad.scale(cr(-1.0))), &pi, n)?).scale(c(0.0, -1.0));
        ry = ry.max(residual(&single(i, PauliLetter::Y), &jy)?);
        let empty = a.mul(&ad);
        let full = ad.mul(&a);
        let jz = jwt_polynomial(&empty.add(&full.scale(cr(-1.0))), &pi, n)?;
        rz = rz.max(residual(&single(i, PauliLetter::Z), &jz)?);
        let jzn = jwt_polynomial(&full.add(&empty.scale(cr(-1.0))), &pi, n)?;
        rzn = rzn.max(residual(&single(i, PauliLetter::Z).scale(cr(-1.0)), &jzn)?);
    }
    // Multiplying the images factor by factor keeps every intermediate at one term.
    let mut signed = PauliPolynomial::identity(n);
    for i in 1..=n {
        let f = FieldPolynomial::monomial(cr(1.0), vec![FieldOp::a(i), FieldOp::adag(i)])
            .add(&FieldPolynomial::monomial(cr(-1.0), vec![FieldOp::adag(i), FieldOp::a(i)]));
        signed = signed.mul(&jwt_polynomial(&f, &pi, n)?);
    }
    let rp = residual(&signed, &PauliPolynomial::from_string(cr(1.0), &vec![PauliLetter::Z; n]))?;
    Ok(PauliIdentityReport {
        n,
        x_residual: rx,
        y_residual: ry,
        z_residual: rz,
        z_number_difference_residual: rzn,
        parity_residual: rp,
        max_residual: rx.max(ry).max(rz).max(rzn).max(rp),
    })
}
