//! Logarithmic-overhead fermion-to-qubit encoding.
//!
//! Mode labels are T-bit strings, T = max(1, ⌈log₂ M⌉). The register stores
//! x_j = ⊕_{i∈S(j)} s_i with S(j) = {k : k ⪯ j}, which makes extracting any
//! occupation (with its fermionic sign) cost O(T) controlled gates.

use serde::{Deserialize, Serialize};

use crate::circuit::{cnot_matrix, Circuit, Gate, GateKind, WireType, SIM_MAX_WIRES};
use crate::error::{FermError, Result};
use crate::fock::{embed_local_operator, Occupation};
use crate::linalg::{cr, max_abs_diff, vec_max_abs_diff, CMat, CVec};

/// Largest register handled by the u128 bit-row representation.
pub const MAX_BK_MODES: usize = 128;

pub fn label_bits(m: usize) -> usize {
    if m <= 2 {
        1
    } else {
        (usize::BITS - (m - 1).leading_zeros()) as usize
    }
}

/// α ⪯ β: for some l₀ < T, α and β agree on bits l ≥ l₀ and β has ones below l₀.
pub fn preceq(alpha: usize, beta: usize, t: usize) -> Result<bool> {
    if t == 0 || t >= usize::BITS as usize {
        return Err(FermError::InvalidOccupation(format!("label length {t}")));
    }
    if let Some(&v) = [alpha, beta].iter().find(|&&v| v >> t != 0) {
        return Err(FermError::StringLength { expected: t, got: (usize::BITS - v.leading_zeros()) as usize });
    }
    Ok((0..t).any(|l0| {
        let low = (1usize << l0) - 1;
        alpha >> l0 == beta >> l0 && beta & low == low
    }))
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 || m > MAX_BK_MODES {
        return Err(FermError::ModeCount { n: m, max: MAX_BK_MODES });
    }
    Ok(())
}

fn check_j(j: usize, m: usize) -> Result<()> {
    if j >= m {
        return Err(FermError::ModeOutOfRange { index: j, n: m });
    }
    Ok(())
}

/// The encoding of an M-mode register: index sets and GF(2) matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BkEncoding {
    m: usize,
    t: usize,
    /// encode[j] has bit i set iff i ∈ S(j).
    encode: Vec<u128>,
    /// decode[j] has bit i set iff s_j depends on x_i.
    decode: Vec<u128>,
}

fn bit(row: u128, i: usize) -> bool {
    row >> i & 1 == 1
}

fn members(row: u128) -> Vec<usize> {
    (0..128).filter(|&i| bit(row, i)).collect()
}

impl BkEncoding {
    pub fn new(m: usize) -> Result<Self> {
        check_m(m)?;
        let t = label_bits(m);
        let mut encode = vec![0u128; m];
        for (j, row) in encode.iter_mut().enumerate() {
            for k in 0..m {
                if preceq(k, j, t)? {
                    *row |= 1 << k;
                }
            }
        }
        let decode =
            gf2_inverse(&encode).ok_or_else(|| FermError::InvalidState("encoding matrix is singular".into()))?;
        Ok(Self { m, t, encode, decode })
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn label_bits(&self) -> usize {
        self.t
    }

    pub fn set_s(&self, j: usize) -> Result<Vec<usize>> {
        check_j(j, self.m)?;
        Ok(members(self.encode[j]))
    }

    /// K(j): s_j = x_j ⊕ ⊕_{i∈K(j)} x_i.
    pub fn set_k(&self, j: usize) -> Result<Vec<usize>> {
        check_j(j, self.m)?;
        debug_assert!(bit(self.decode[j], j));
        Ok(members(self.decode[j] & !(1u128 << j)))
    }

    /// L(j): ⊕_{i<j} s_i = ⊕_{i∈L(j)} x_i.
    pub fn set_l(&self, j: usize) -> Result<Vec<usize>> {
        check_j(j, self.m)?;
        Ok(members(self.decode[..j].iter().fold(0, |a, r| a ^ r)))
    }

    /// Update set {i < M : j ⪯ i}: the register bits that contain s_j.
    pub fn set_update(&self, j: usize) -> Result<Vec<usize>> {
        check_j(j, self.m)?;
        Ok((0..self.m).filter(|&i| bit(self.encode[i], j)).collect())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.m {
            return Err(FermError::DimensionMismatch { expected: self.m, got: len });
        }
        Ok(())
    }

    pub fn encode(&self, s: &[u8]) -> Result<Vec<u8>> {
        self.check_len(s.len())?;
        Ok(apply_gf2(&self.encode, s))
    }

    pub fn decode(&self, x: &[u8]) -> Result<Vec<u8>> {
        self.check_len(x.len())?;
        Ok(apply_gf2(&self.decode, x))
    }

    /// Basis permutation |s⟩ ↦ |x(s)⟩ as a matrix (M ≤ 12).
    pub fn encoding_matrix(&self) -> Result<CMat> {
        if self.m > crate::fock::MAX_MODES {
            return Err(FermError::ModeCount { n: self.m, max: crate::fock::MAX_MODES });
        }
        let d = 1usize << self.m;
        let mut e = CMat::zeros(d, d);
        for idx in 0..d {
            let s = Occupation::from_index(idx, self.m);
            let x = self.encode(s.bits())?;
            e[(Occupation::new(x)?.index(), idx)] = cr(1.0);
        }
        Ok(e)
    }

    /// Extraction of mode j into an ancilla on wire `anc`, register bit i on wire `offset + i`.
    pub fn extraction(&self, j: usize, anc: usize, offset: usize) -> Result<ExtractionCircuit> {
        check_j(j, self.m)?;
        let mut a: Vec<Gate> = self.set_k(j)?.into_iter().map(|i| Gate::two(GateKind::Cnot, offset + i, anc)).collect();
        a.push(Gate::two(GateKind::Cnot, offset + j, anc));
        let b = self.set_update(j)?.into_iter().map(|i| Gate::two(GateKind::Cnot, anc, offset + i)).collect();
        let c = self.set_l(j)?.into_iter().map(|i| Gate::two(GateKind::LambdaZ, anc, offset + i)).collect();
        Ok(ExtractionCircuit { mode: j, stage_a: a, stage_b: b, stage_c: c })
    }

    /// Extraction of mode j with the ancilla on wire 0 and the register on wires 1..=M.
    pub fn extraction_circuit(&self, j: usize) -> Result<ExtractionCircuit> {
        self.extraction(j, 0, 1)
    }
}

fn apply_gf2(rows: &[u128], v: &[u8]) -> Vec<u8> {
    rows.iter().map(|r| v.iter().enumerate().filter(|&(i, &b)| b & 1 == 1 && bit(*r, i)).count() as u8 & 1).collect()
}

/// Inverse of a square GF(2) matrix stored as bit rows.
fn gf2_inverse(rows: &[u128]) -> Option<Vec<u128>> {
    let n = rows.len();
    let mut a = rows.to_vec();
    let mut inv: Vec<u128> = (0..n).map(|i| 1u128 << i).collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| bit(a[r], col))?;
        a.swap(col, piv);
        inv.swap(col, piv);
        for r in 0..n {
            if r != col && bit(a[r], col) {
                a[r] ^= a[col];
                inv[r] ^= inv[col];
            }
        }
    }
    Some(inv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionCircuit {
    pub mode: usize,
    /// CNOTs from K(j) ∪ {j} into the ancilla.
    pub stage_a: Vec<Gate>,
    /// CNOTs from the ancilla onto every register bit containing s_j.
    pub stage_b: Vec<Gate>,
    /// CZs between the ancilla and L(j): the fermionic sign.
    pub stage_c: Vec<Gate>,
}

impl ExtractionCircuit {
    pub fn counts(&self) -> [usize; 3] {
        [self.stage_a.len(), self.stage_b.len(), self.stage_c.len()]
    }

    pub fn total(&self) -> usize {
        self.stage_a.len() + self.stage_b.len() + self.stage_c.len()
    }

    pub fn gates(&self) -> impl DoubleEndedIterator<Item = &Gate> {
        self.stage_a.iter().chain(&self.stage_b).chain(&self.stage_c)
    }

    pub fn to_circuit(&self, n_wires: usize) -> Result<Circuit> {
        Circuit::from_gates(WireType::Qubit, n_wires, self.gates().cloned().collect())
    }
}

/// JW-register extraction of mode j: copy, clear, then one CZ per earlier mode.
pub fn jw_extraction(j: usize, m: usize) -> Result<Vec<Gate>> {
    check_m(m)?;
    check_j(j, m)?;
    let mut g = vec![Gate::two(GateKind::Cnot, 1 + j, 0), Gate::two(GateKind::Cnot, 0, 1 + j)];
    g.extend((0..j).map(|i| Gate::two(GateKind::LambdaZ, 0, 1 + i)));
    Ok(g)
}

/// Reference for the extraction map on a basis state: returns (sign, s_j, x′).
pub fn extraction_reference(enc: &BkEncoding, j: usize, x: &[u8]) -> Result<(f64, u8, Vec<u8>)> {
    let mut s = enc.decode(x)?;
    let sj = s[j];
    let prefix = s[..j].iter().fold(0, |a, b| a ^ b);
    s[j] = 0;
    let sign = if sj & prefix == 1 { -1.0 } else { 1.0 };
    Ok((sign, sj, enc.encode(&s)?))
}

/// Qubit circuit simulating a 1- or 2-mode gate (modes 0-based) on an M-mode
/// encoded register. Ancillas occupy wires 0..k, register bit i wire k + i.
pub fn simulate_mode_gate_on_qubits(g: &CMat, modes: &[usize], m: usize) -> Result<Circuit> {
    let k = modes.len();
    if !(1..=2).contains(&k) {
        return Err(FermError::InvalidModeSet(format!("expected 1 or 2 modes, got {k}")));
    }
    if k == 2 && modes[0] == modes[1] {
        return Err(FermError::InvalidModeSet("repeated mode".into()));
    }
    if g.nrows() != 1 << k || g.ncols() != 1 << k {
        return Err(FermError::DimensionMismatch { expected: 1 << k, got: g.nrows() });
    }
    crate::linalg::ensure_unitary(g, 1e-10)?;
    if m + k > SIM_MAX_WIRES {
        return Err(FermError::ModeCount { n: m, max: SIM_MAX_WIRES - k });
    }
    let enc = BkEncoding::new(m)?;
    let mut c = Circuit::new(WireType::Qubit, m + k)?;
    let ext: Vec<ExtractionCircuit> =
        modes.iter().enumerate().map(|(q, &j)| enc.extraction(j, q, k)).collect::<Result<_>>()?;
    for e in &ext {
        for gate in e.gates() {
            c.push(gate.clone())?;
        }
    }
    c.push(Gate::custom(g.clone(), (0..k).collect())?)?;
    for e in ext.iter().rev() {
        for gate in e.gates().rev() {
            c.push(gate.clone())?;
        }
    }
    Ok(c)
}

/// Max deviation between the simulated circuit restricted to clean ancillas
/// and E·G·E† for the fermionic gate G. Also returns the leakage out of the
/// clean-ancilla subspace.
pub fn verify_mode_gate_simulation(g: &CMat, modes: &[usize], m: usize) -> Result<(f64, f64)> {
    let circuit = simulate_mode_gate_on_qubits(g, modes, m)?;
    let k = modes.len();
    let enc = BkEncoding::new(m)?;
    let e = enc.encoding_matrix()?;
    let one_based: Vec<usize> = modes.iter().map(|j| j + 1).collect();
    let target = &e * embed_local_operator(g, &one_based, m)? * e.transpose();
    let d = 1usize << m;
    let cols: Vec<CVec> = (0..d)
        .map(|x| {
            let mut v = CVec::zeros(d << k);
            v[x] = cr(1.0);
            v
        })
        .collect();
    let outs = circuit.apply_columns(&cols)?;
    let mut dev: f64 = 0.0;
    let mut leak: f64 = 0.0;
    for (x, out) in outs.iter().enumerate() {
        let col = target.column(x).into_owned();
        dev = dev.max(vec_max_abs_diff(&out.rows(0, d).into_owned(), &col));
        leak = leak.max(out.rows(d, out.len() - d).iter().fold(0.0, |a, z| a.max(z.norm())));
    }
    Ok((dev, leak))
}

/// Map a qubit circuit on N wires to a mode circuit on 2N modes, qubit j
/// carried by the pair (2j, 2j+1) in the doubled states |s_j, s_j⟩.
pub fn qubit_to_fermion_embed(c: &Circuit) -> Result<Circuit> {
    if c.wire_type() != WireType::Qubit {
        return Err(FermError::InvalidCircuit("expected a qubit circuit".into()));
    }
    let n = c.n_wires();
    let mut out = Circuit::new(WireType::Mode, 2 * n)?;
    let cx = cnot_matrix();
    let i2 = CMat::identity(2, 2);
    for g in c.gates() {
        let k = g.wires.len();
        let mut modes = Vec::with_capacity(2 * k);
        for &w in &g.wires {
            modes.extend([2 * w, 2 * w + 1]);
        }
        let lifted = match k {
            1 => &cx * crate::linalg::kron(&g.matrix(), &i2) * &cx,
            2 => {
                let w = crate::linalg::kron(&cx, &cx);
                let inner = crate::linalg::embed_qubit_operator(&g.matrix(), &[0, 2], 4);
                &w * inner * &w
            }
            _ => return Err(FermError::UnsupportedGate(format!("{k}-qubit gate cannot be embedded"))),
        };
        out.push(Gate::custom(lifted, modes)?)?;
    }
    out.add_global_phase(c.global_phase());
    Ok(out)
}

/// max ‖U_modes·V − V·U_qubits‖ over computational inputs.
pub fn verify_qubit_embedding(c: &Circuit) -> Result<f64> {
    let modes = qubit_to_fermion_embed(c)?;
    let n = c.n_wires();
    let double = |idx: usize| {
        (0..n).fold(0usize, |a, j| {
            let b = idx >> (n - 1 - j) & 1;
            (a << 2) | (b << 1) | b
        })
    };
    let u = c.unitary()?;
    let mut dev: f64 = 0.0;
    for idx in 0..(1usize << n) {
        let mut v = CVec::zeros(1 << (2 * n));
        v[double(idx)] = cr(1.0);
        let got = modes.apply(&v)?;
        let mut want = CVec::zeros(1 << (2 * n));
        for r in 0..(1usize << n) {
            want[double(r)] = u[(r, idx)];
        }
        dev = dev.max(vec_max_abs_diff(&got, &want));
    }
    Ok(dev)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TableRow {
    pub j: usize,
    pub label: String,
    pub s: Vec<usize>,
    pub k: Vec<usize>,
    pub l: Vec<usize>,
    pub update: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct EncodingTable {
    pub m: usize,
    pub t: usize,
    pub rows: Vec<TableRow>,
}

pub fn encoding_table(m: usize) -> Result<EncodingTable> {
    let enc = BkEncoding::new(m)?;
    let t = enc.label_bits();
    let rows = (0..m)
        .map(|j| {
            Ok(TableRow {
                j,
                label: format!("{j:0t$b}"),
                s: enc.set_s(j)?,
                k: enc.set_k(j)?,
                l: enc.set_l(j)?,
                update: enc.set_update(j)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EncodingTable { m, t, rows })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct BenchmarkRow {
    pub m: usize,
    pub max_gates_bk: usize,
    pub max_gates_jwt: usize,
}

pub fn benchmark(ms: &[usize]) -> Result<Vec<BenchmarkRow>> {
    ms.iter()
        .map(|&m| {
            let enc = BkEncoding::new(m)?;
            let mut bk = 0;
            for j in 0..m {
                bk = bk.max(enc.extraction_circuit(j)?.total());
            }
            let jw = (0..m).map(|j| jw_extraction(j, m).map(|g| g.len())).try_fold(0, |a, n| n.map(|n| a.max(n)))?;
            Ok(BenchmarkRow { m, max_gates_bk: bk, max_gates_jwt: jw })
        })
        .collect()
}

pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut s = String::from("M,max_gates_bk,max_gates_jwt\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.m, r.max_gates_bk, r.max_gates_jwt));
    }
    s
}

/// Checks the circuit of `extraction_circuit(j)` against `extraction_reference`
/// on every basis state; returns the max amplitude deviation.
pub fn verify_extraction(enc: &BkEncoding, j: usize) -> Result<f64> {
    let m = enc.modes();
    if m + 1 > SIM_MAX_WIRES {
        return Err(FermError::ModeCount { n: m, max: SIM_MAX_WIRES - 1 });
    }
    let circuit = enc.extraction_circuit(j)?.to_circuit(m + 1)?;
    let d = 1usize << m;
    let mut dev: f64 = 0.0;
    for xi in 0..d {
        let x = Occupation::from_index(xi, m);
        let (sign, sj, xp) = extraction_reference(enc, j, x.bits())?;
        let mut v = CVec::zeros(2 * d);
        v[xi] = cr(1.0);
        let got = circuit.apply(&v)?;
        let mut want = CVec::zeros(2 * d);
        want[(sj as usize) * d + Occupation::new(xp)?.index()] = cr(sign);
        dev = dev.max(vec_max_abs_diff(&got, &want));
    }
    Ok(dev)
}

/// ‖U_circuit − I‖ helper for the identity-gate case.
pub fn identity_residual(c: &Circuit) -> Result<f64> {
    let u = c.unitary()?;
    Ok(max_abs_diff(&u, &CMat::identity(u.nrows(), u.ncols())))
}
