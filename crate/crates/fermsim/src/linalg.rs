//! Dense complex linear algebra helpers shared by every subsystem.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{FermError, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn zeros(d: usize) -> CMat {
    CMat::zeros(d, d)
}

pub fn eye(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn from_rows(rows: &[&[C64]]) -> CMat {
    let r = rows.len();
    let cols = rows.first().map_or(0, |x| x.len());
    CMat::from_fn(r, cols, |i, j| rows[i][j])
}

pub fn from_real(rows: &[&[f64]]) -> CMat {
    let r = rows.len();
    let cols = rows.first().map_or(0, |x| x.len());
    CMat::from_fn(r, cols, |i, j| cr(rows[i][j]))
}

pub fn diag(entries: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(entries))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_all<'a, I: IntoIterator<Item = &'a CMat>>(ms: I) -> CMat {
    let mut acc = eye(1);
    for m in ms {
        acc = acc.kronecker(m);
    }
    acc
}

pub mod pauli {
    use super::*;

    pub fn i2() -> CMat {
        eye(2)
    }
    pub fn x() -> CMat {
        from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
    }
    pub fn y() -> CMat {
        from_rows(&[&[cr(0.0), c(0.0, -1.0)], &[c(0.0, 1.0), cr(0.0)]])
    }
    pub fn z() -> CMat {
        from_real(&[&[1.0, 0.0], &[0.0, -1.0]])
    }
    /// `|0><1|`: lowers the occupation of one mode.
    pub fn lower() -> CMat {
        from_real(&[&[0.0, 1.0], &[0.0, 0.0]])
    }
    /// `|1><0|`
    pub fn raise() -> CMat {
        from_real(&[&[0.0, 0.0], &[1.0, 0.0]])
    }
    pub fn hadamard() -> CMat {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        from_real(&[&[s, s], &[s, -s]])
    }
}

/// Largest entry modulus.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn vec_max_abs_diff(a: &CVec, b: &CVec) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn hermitian_residual(a: &CMat) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

pub fn unitary_residual(u: &CMat) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &eye(u.nrows()))
}

pub fn ensure_square(a: &CMat, dim: usize) -> Result<()> {
    if a.nrows() != dim || a.ncols() != dim {
        return Err(FermError::DimensionMismatch {
            expected: dim,
            got: if a.nrows() != dim { a.nrows() } else { a.ncols() },
        });
    }
    Ok(())
}

pub fn ensure_unitary(u: &CMat, tol: f64) -> Result<()> {
    let r = unitary_residual(u);
    if r > tol {
        return Err(FermError::NotUnitary(r));
    }
    Ok(())
}

pub fn trace(a: &CMat) -> C64 {
    a.diagonal().iter().sum()
}

/// `Tr[a b]` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut s = cr(0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let h = (a + a.adjoint()) * cr(0.5);
    let se = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..se.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let vals = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(a.nrows(), idx.len(), |r, k| se.eigenvectors[(r, idx[k])]);
    (vals, vecs)
}

pub fn eigvalsh(a: &CMat) -> Vec<f64> {
    eigh(a).0
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    eigvalsh(a).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(a: &CMat) -> f64 {
    eigvalsh(a).last().copied().unwrap_or(0.0)
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_fn(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(a);
    let d = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&v| cr(f(v)))));
    &vecs * d * vecs.adjoint()
}

/// Square root of a positive semidefinite matrix; tiny negative eigenvalues are clipped.
pub fn sqrt_psd(a: &CMat) -> CMat {
    hermitian_fn(a, |v| v.max(0.0).sqrt())
}

/// `exp(i t H)` for Hermitian `H`.
pub fn expi_hermitian(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = eigh(h);
    let d = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&v| C64::from_polar(1.0, t * v))));
    &vecs * d * vecs.adjoint()
}

/// General matrix exponential.
pub fn expm(a: &CMat) -> CMat {
    a.clone().exp()
}

/// Bits of `idx` over `n` positions, most significant first.
pub fn bits_of(idx: usize, n: usize) -> Vec<u8> {
    (0..n).map(|k| ((idx >> (n - 1 - k)) & 1) as u8).collect()
}

pub fn index_of(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

/// Standard (qubit) partial trace keeping the listed 0-based qubits, in the listed order.
pub fn qubit_partial_trace(rho: &CMat, n: usize, keep: &[usize]) -> CMat {
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let dk = 1 << keep.len();
    let mut out = zeros(dk);
    let compose = |kb: usize, tb: usize| -> usize {
        let mut bits = vec![0u8; n];
        for (p, &q) in keep.iter().enumerate() {
            bits[q] = ((kb >> (keep.len() - 1 - p)) & 1) as u8;
        }
        for (p, &q) in traced.iter().enumerate() {
            bits[q] = ((tb >> (traced.len() - 1 - p)) & 1) as u8;
        }
        index_of(&bits)
    };
    for a in 0..dk {
        for b in 0..dk {
            let mut s = cr(0.0);
            for t in 0..(1usize << traced.len()) {
                s += rho[(compose(a, t), compose(b, t))];
            }
            out[(a, b)] = s;
        }
    }
    out
}

/// Partial transpose of the qubits in `transposed` (0-based).
pub fn partial_transpose(rho: &CMat, n: usize, transposed: &[usize]) -> CMat {
    let d = 1 << n;
    let mut mask = 0usize;
    for &q in transposed {
        mask |= 1 << (n - 1 - q);
    }
    CMat::from_fn(d, d, |i, j| {
        let ii = (i & !mask) | (j & mask);
        let jj = (j & !mask) | (i & mask);
        rho[(ii, jj)]
    })
}

/// Operator acting on a subset of qubits (given in local order), identity elsewhere.
pub fn embed_qubit_operator(op: &CMat, wires: &[usize], n: usize) -> CMat {
    let k = wires.len();
    let d = 1usize << n;
    let mut out = zeros(d);
    for col in 0..d {
        let bits = bits_of(col, n);
        let local_in = wires.iter().fold(0usize, |a, &w| (a << 1) | bits[w] as usize);
        for local_out in 0..(1usize << k) {
            let amp = op[(local_out, local_in)];
            if amp == cr(0.0) {
                continue;
            }
            let mut nb = bits.clone();
            for (t, &w) in wires.iter().enumerate() {
                nb[w] = ((local_out >> (k - 1 - t)) & 1) as u8;
            }
            out[(index_of(&nb), col)] += amp;
        }
    }
    out
}

/// Permutation matrix sending basis state `|b>` to `|f(b)>`.
pub fn permutation_operator(n: usize, f: impl Fn(&[u8]) -> Vec<u8>) -> CMat {
    let d = 1usize << n;
    let mut out = zeros(d);
    for col in 0..d {
        let b = bits_of(col, n);
        out[(index_of(&f(&b)), col)] = cr(1.0);
    }
    out
}

/// Rank of a real matrix by Gaussian elimination with partial pivoting.
pub fn real_rank(rows: &[Vec<f64>], tol: f64) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..ncols {
        if rank == m.len() {
            break;
        }
        let (piv, val) =
            (rank..m.len())
                .map(|r| (r, m[r][col].abs()))
                .fold((rank, 0.0), |best, x| if x.1 > best.1 { x } else { best });
        if val <= tol {
            continue;
        }
        m.swap(rank, piv);
        let p = m[rank].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank {
                let f = row[col] / p[col];
                if f != 0.0 {
                    for (x, y) in row.iter_mut().zip(p.iter()) {
                        *x -= f * y;
                    }
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Real-vectorisation of a Hermitian matrix (real parts then imaginary parts).
pub fn hermitian_to_real_vec(a: &CMat) -> Vec<f64> {
    a.iter().map(|z| z.re).chain(a.iter().map(|z| z.im)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_order_is_big_endian() {
        let k = kron(&pauli::x(), &pauli::i2());
        // |00> -> |10>
        assert_eq!(k[(2, 0)], cr(1.0));
    }

    #[test]
    fn eigh_sorted() {
        let v = eigvalsh(&pauli::z());
        assert_eq!(v, vec![-1.0, 1.0]);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = from_real(&[&[0.25, 0.0], &[0.0, 0.75]]);
        let b = from_real(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let r = qubit_partial_trace(&kron(&a, &b), 2, &[1]);
        assert!(max_abs_diff(&r, &b) < 1e-14);
        let r = qubit_partial_trace(&kron(&a, &b), 2, &[0]);
        assert!(max_abs_diff(&r, &a) < 1e-14);
    }

    #[test]
    fn embed_matches_kron() {
        let op = kron(&pauli::x(), &pauli::z());
        let e = embed_qubit_operator(&op, &[0, 1], 3);
        assert!(max_abs_diff(&e, &kron(&op, &eye(2))) < 1e-15);
        let e = embed_qubit_operator(&pauli::y(), &[2], 3);
        assert!(max_abs_diff(&e, &kron(&eye(4), &pauli::y())) < 1e-15);
    }

    #[test]
    fn rank_basic() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![0.0, 1.0]];
        assert_eq!(real_rank(&rows, 1e-12), 2);
    }
}
