//! Parity-preserving gate set, parity-preserving extension of qubit gates,
//! fermionic swap routing and compilation of mode circuits to qubit circuits.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::circuit::{
    cz_matrix, fswap_matrix, g_hat_matrix, h_hat_matrix, qswap_matrix, t_matrix, Circuit, Gate, GateKind, WireType,
};
use crate::error::{FermError, Result};
use crate::fock::{check_mode, embed_local_operator, evaluate_polynomial, FieldOp, FieldPolynomial, DENSE_MAX_MODES};
use crate::linalg::{
    c, cr, diag, ensure_square, ensure_unitary, expi_hermitian, expm, eye, kron, max_abs, max_abs_diff, pauli,
    permutation_operator, CMat, C64,
};
use crate::random;
use crate::superselection::{extract_block, sector_indices};

/// Tolerance compiled circuits are checked against.
pub const COMPILE_TOL: f64 = 1e-8;
const ANGLE_EPS: f64 = 1e-12;

/// V_m: |s₁…s_m⟩ ↦ |s₁⊕…⊕s_m, s₂…s_m⟩. An involution.
pub fn v_operator(m: usize) -> CMat {
    permutation_operator(m, |s| {
        let mut t = s.to_vec();
        t[0] = s.iter().fold(0, |a, b| a ^ b);
        t
    })
}

/// Z⊗…⊗Z on m qubits.
pub fn qubit_parity(m: usize) -> CMat {
    let d = 1usize << m;
    CMat::from_fn(d, d, |i, j| {
        if i != j {
            cr(0.0)
        } else if i.count_ones() % 2 == 0 {
            cr(1.0)
        } else {
            cr(-1.0)
        }
    })
}

/// Ĝ = V_m (I ⊗ G) V_m for a unitary G on m−1 qubits.
pub fn parity_preserving_extension(g: &CMat) -> Result<CMat> {
    let d = g.nrows();
    if d == 0 || !d.is_power_of_two() {
        return Err(FermError::DimensionMismatch { expected: d.next_power_of_two().max(1), got: d });
    }
    ensure_square(g, d)?;
    ensure_unitary(g, 1e-10)?;
    let m = d.trailing_zeros() as usize + 1;
    let v = v_operator(m);
    Ok(&v * kron(&eye(2), g) * &v)
}

/// Λ(A) with the control on the first wire.
pub fn controlled(a: &CMat) -> CMat {
    let d = a.nrows();
    let mut out = eye(2 * d);
    out.view_mut((d, d), (d, d)).copy_from(a);
    out
}

/// Field polynomial of fswap(j, j+1) (1-based modes).
pub fn fswap_polynomial(j: usize) -> FieldPolynomial {
    let k = j + 1;
    let mut p = FieldPolynomial::identity();
    p.push(cr(-1.0), vec![FieldOp::adag(j), FieldOp::a(j)]);
    p.push(cr(-1.0), vec![FieldOp::adag(k), FieldOp::a(k)]);
    p.push(cr(1.0), vec![FieldOp::adag(k), FieldOp::a(j)]);
    p.push(cr(1.0), vec![FieldOp::adag(j), FieldOp::a(k)]);
    p
}

/// fswap(j, j+1) on n modes, 1 ≤ j < n.
pub fn fswap(j: usize, n: usize) -> Result<CMat> {
    check_mode(j, n)?;
    check_mode(j + 1, n)?;
    evaluate_polynomial(&fswap_polynomial(j), n)
}

/// Swap defect D(j, j+1) on n qubits: phase (−1)^{s_j s_{j+1}}.
pub fn swap_defect(j: usize, n: usize) -> Result<CMat> {
    check_mode(j, n)?;
    check_mode(j + 1, n)?;
    Ok(crate::linalg::embed_qubit_operator(&cz_matrix(), &[j - 1, j], n))
}

pub fn universal_set(wire_type: WireType) -> Vec<Gate> {
    let mut v = vec![Gate::lambda_phase(0), Gate::two(GateKind::LambdaZ, 0, 1)];
    match wire_type {
        WireType::Qubit => v.push(Gate::two(GateKind::HHat, 0, 1)),
        WireType::Mode => {
            v.push(Gate::two(GateKind::GHat, 0, 1));
            v.push(Gate::x(0));
        }
    }
    v
}

/// Z: |s₁…s_m, s_{m+1}⟩ ↦ |s₁⊕…⊕s_m, s₂…s_m, s₂⊕…⊕s_{m+1}⟩ on m+1 qubits.
pub fn z_operator(m: usize) -> Result<CMat> {
    if m == 0 || m + 1 > DENSE_MAX_MODES {
        return Err(FermError::ModeCount { n: m, max: DENSE_MAX_MODES - 1 });
    }
    Ok(permutation_operator(m + 1, |s| {
        let mid = s[1..m].iter().fold(0, |a, b| a ^ b);
        let mut t = s.to_vec();
        t[0] ^= mid;
        t[m] ^= mid;
        t
    }))
}

/// Λ(σ̂ˣ)(j, 0, m) for j = m−1 … 1 on m+1 qubit wires.
pub fn synthesize_z(m: usize) -> Result<Circuit> {
    let mut c = Circuit::new(WireType::Qubit, m + 1)?;
    for j in (1..m).rev() {
        c.push(Gate::new(GateKind::LambdaXHat, vec![j, 0, m])?)?;
    }
    Ok(c)
}

/// Λ(σ̂ˣ) with control `ctrl` flipping `a` and `b`, as Ĥ(a,b) Λ(σᶻ)(ctrl,b) Ĥ(a,b).
pub fn expand_lambda_x_hat(ctrl: usize, a: usize, b: usize) -> [Gate; 3] {
    [Gate::two(GateKind::HHat, a, b), Gate::two(GateKind::LambdaZ, ctrl, b), Gate::two(GateKind::HHat, a, b)]
}

/// Sector blocks (W₀, W₁) of an operator on m qubits, indices ascending in each sector.
pub fn parity_blocks(u: &CMat, m: usize) -> Result<(CMat, CMat, f64)> {
    ensure_square(u, 1 << m)?;
    let (e, o) = sector_indices(m);
    let p = qubit_parity(m);
    let off = max_abs(&(u - &p * u * &p)) / 2.0;
    Ok((extract_block(u, e), extract_block(u, o), off))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, residual: f64) -> Self {
        Self { name: name.into(), residual }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KCorrectorReport {
    pub m: usize,
    pub residual: f64,
    /// ‖W₀ − I‖ for K = V_m Λ(H) V_m.
    pub w0_identity_residual: f64,
    /// ‖W₁ − H‖ with W₁ read in the basis labelled by s₂…s_m.
    pub w1_equals_h_residual: f64,
    pub off_block_residual: f64,
}

/// Checks Z⁻¹P⁻¹ Λ(Ĥ) P Z = K ⊗ I with K = V_m Λ(H) V_m, for H on m−1 qubits.
pub fn k_corrector_identity(m: usize, h: &CMat) -> Result<KCorrectorReport> {
    if !(2..=5).contains(&m) {
        return Err(FermError::ModeCount { n: m, max: 5 });
    }
    ensure_square(h, 1 << (m - 1))?;
    ensure_unitary(h, 1e-10)?;
    let z = z_operator(m)?;
    let p = permutation_operator(m + 1, |s| {
        let mut t = vec![s[0], s[m]];
        t.extend_from_slice(&s[1..m]);
        t
    });
    let lhs = z.adjoint() * p.adjoint() * controlled(&parity_preserving_extension(h)?) * &p * &z;
    let v = v_operator(m);
    let k = &v * controlled(h) * &v;
    let rhs = kron(&k, &eye(2));

    let (_, o) = sector_indices(m);
    let (w0, _, off) = parity_blocks(&k, m)?;
    // odd sector in the V-basis: V|s⟩ = |1, s₂…s_m⟩
    let half = 1usize << (m - 1);
    let w1 = CMat::from_fn(half, half, |a, b| {
        let row = o.iter().find(|&&i| i & (half - 1) == a).copied().unwrap_or(0);
        let col = o.iter().find(|&&i| i & (half - 1) == b).copied().unwrap_or(0);
        k[(row, col)]
    });
    Ok(KCorrectorReport {
        m,
        residual: max_abs_diff(&lhs, &rhs),
        w0_identity_residual: max_abs_diff(&w0, &eye(w0.nrows())),
        w1_equals_h_residual: max_abs_diff(&w1, h),
        off_block_residual: off,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HHatBlocks {
    /// Block on (|00⟩, |11⟩).
    pub w0: [[f64; 2]; 2],
    /// Block on (|01⟩, |10⟩).
    pub w1: [[f64; 2]; 2],
    pub w0_equals_hadamard: bool,
    /// W₁ is the Hadamard in the (|10⟩, |01⟩) ordering.
    pub w1_equals_hadamard_reordered: bool,
}

pub fn h_hat_blocks() -> HHatBlocks {
    let h = h_hat_matrix();
    let re = |i: usize, j: usize| h[(i, j)].re;
    let w0 = [[re(0, 0), re(0, 3)], [re(3, 0), re(3, 3)]];
    let w1 = [[re(1, 1), re(1, 2)], [re(2, 1), re(2, 2)]];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let close = |w: [[f64; 2]; 2], t: [[f64; 2]; 2]| (0..2).all(|i| (0..2).all(|j| (w[i][j] - t[i][j]).abs() < 1e-12));
    HHatBlocks {
        w0,
        w1,
        w0_equals_hadamard: close(w0, [[s, s], [s, -s]]),
        w1_equals_hadamard_reordered: close([[w1[1][1], w1[1][0]], [w1[0][1], w1[0][0]]], [[s, s], [s, -s]]),
    }
}

/// Every matrix identity of the universal-set construction, with its residual.
pub fn universal_identities(seed: u64) -> Result<Vec<IdentityCheck>> {
    let mut out = Vec::new();
    let n1 = |i| FieldPolynomial::number(i);

    let h1 = evaluate_polynomial(&n1(1), 1)?;
    out.push(IdentityCheck::new(
        "lambda_phase_exponential",
        max_abs_diff(&expi_hermitian(&h1, FRAC_PI_4), &t_matrix()),
    ));

    let nn = evaluate_polynomial(&n1(1).mul(&n1(2)), 2)?;
    out.push(IdentityCheck::new("lambda_z_exponential", max_abs_diff(&expi_hermitian(&nn, PI), &cz_matrix())));

    let lm = diag(&[cr(1.0), c(0.0, -1.0)]);
    let left = kron(&eye(2), &lm);
    out.push(IdentityCheck::new("h_hat_from_g_hat", max_abs_diff(&(&left * g_hat_matrix() * &left), &h_hat_matrix())));

    // (φ₁ − φ₁†)(φ₂ + φ₂†)
    let mut a = FieldPolynomial::new();
    a.push(cr(1.0), vec![FieldOp::a(1), FieldOp::a(2)]);
    a.push(cr(1.0), vec![FieldOp::a(1), FieldOp::adag(2)]);
    a.push(cr(-1.0), vec![FieldOp::adag(1), FieldOp::a(2)]);
    a.push(cr(-1.0), vec![FieldOp::adag(1), FieldOp::adag(2)]);
    let g_exp = expm(&(evaluate_polynomial(&a, 2)? * c(0.0, -FRAC_PI_4)));
    out.push(IdentityCheck::new("g_hat_exponential", max_abs_diff(&g_exp, &g_hat_matrix())));

    let mut hop = FieldPolynomial::new();
    hop.push(cr(1.0), vec![FieldOp::adag(1), FieldOp::a(2)]);
    hop.push(cr(1.0), vec![FieldOp::adag(2), FieldOp::a(1)]);
    let mut pair = FieldPolynomial::new();
    pair.push(cr(1.0), vec![FieldOp::a(2), FieldOp::a(1)]);
    pair.push(cr(1.0), vec![FieldOp::adag(1), FieldOp::adag(2)]);
    let split = expi_hermitian(&evaluate_polynomial(&hop, 2)?, FRAC_PI_4)
        * expi_hermitian(&evaluate_polynomial(&pair, 2)?, FRAC_PI_4);
    out.push(IdentityCheck::new("g_hat_split_exponential", max_abs_diff(&g_exp, &split)));

    out.push(IdentityCheck::new(
        "h_hat_is_extension_of_hadamard",
        max_abs_diff(&h_hat_definition(), &parity_preserving_extension(&pauli::hadamard())?),
    ));

    let fs = fswap(1, 2)?;
    out.push(IdentityCheck::new("fswap_equals_qswap_d", max_abs_diff(&fs, &(qswap_matrix() * swap_defect(1, 2)?))));
    out.push(IdentityCheck::new("fswap_matrix", max_abs_diff(&fs, &fswap_matrix())));
    let f1 = crate::fock::annihilator(1, 2)?;
    let f2 = crate::fock::annihilator(2, 2)?;
    out.push(IdentityCheck::new("fswap_exchanges_fields", max_abs_diff(&(&fs * f1 * fs.adjoint()), &f2)));
    out.push(IdentityCheck::new("d_equals_lambda_z", max_abs_diff(&swap_defect(1, 2)?, &cz_matrix())));

    for m in 2..=4 {
        let v = v_operator(m);
        let sx = kron(&pauli::x(), &eye(1 << (m - 1)));
        out.push(IdentityCheck::new(format!("v_commutes_sigma_x_m{m}"), max_abs_diff(&(&v * &sx * &v), &sx)));
    }

    let mut rng = random::rng(seed);
    for m in 2..=4 {
        let g1 = random::unitary(&mut rng, 1 << (m - 1));
        let g2 = random::unitary(&mut rng, 1 << (m - 1));
        let e1 = parity_preserving_extension(&g1)?;
        let e2 = parity_preserving_extension(&g2)?;
        let e12 = parity_preserving_extension(&(&g1 * &g2))?;
        out.push(IdentityCheck::new(format!("extension_homomorphism_m{m}"), max_abs_diff(&(&e1 * &e2), &e12)));
        let p = qubit_parity(m);
        out.push(IdentityCheck::new(
            format!("extension_preserves_parity_m{m}"),
            max_abs_diff(&(&p * &e1), &(&e1 * &p)),
        ));
        let even = random::even_unitary(&mut rng, m - 1);
        out.push(IdentityCheck::new(
            format!("extension_of_even_gate_m{m}"),
            max_abs_diff(&parity_preserving_extension(&even)?, &kron(&eye(2), &even)),
        ));
    }

    for (name, x) in [("sigma_x", pauli::x()), ("hadamard", pauli::hadamard())] {
        let lhs = parity_preserving_extension(&controlled(&x))?;
        let s = crate::linalg::embed_qubit_operator(&qswap_matrix(), &[0, 1], 3);
        let rhs = &s * controlled(&parity_preserving_extension(&x)?) * &s;
        out.push(IdentityCheck::new(format!("swap_with_parity_{name}"), max_abs_diff(&lhs, &rhs)));
    }

    let lxh = crate::circuit::lambda_x_hat_matrix();
    let mut expanded = Circuit::new(WireType::Qubit, 3)?;
    for g in expand_lambda_x_hat(0, 1, 2) {
        expanded.push(g)?;
    }
    out.push(IdentityCheck::new("lambda_x_hat_expansion", max_abs_diff(&expanded.unitary()?, &lxh)));

    for m in 1..=4 {
        let z = z_operator(m)?;
        out.push(IdentityCheck::new(format!("z_synthesis_m{m}"), max_abs_diff(&synthesize_z(m)?.unitary()?, &z)));
        out.push(IdentityCheck::new(format!("z_involution_m{m}"), max_abs_diff(&(&z * &z), &eye(z.nrows()))));
    }

    for m in 2..=4 {
        let h = if m == 2 { pauli::hadamard() } else { random::unitary(&mut rng, 1 << (m - 1)) };
        let r = k_corrector_identity(m, &h)?;
        out.push(IdentityCheck::new(format!("k_corrector_m{m}"), r.residual));
        out.push(IdentityCheck::new(format!("k_corrector_w0_identity_m{m}"), r.w0_identity_residual));
        out.push(IdentityCheck::new(format!("k_corrector_w1_block_m{m}"), r.w1_equals_h_residual));
    }
    Ok(out)
}

/// Ĥ|a,b⟩ = 2^{−1/2} Σ_c (−1)^{bc} |a⊕b⊕c, c⟩, written out term by term.
pub fn h_hat_definition() -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = CMat::zeros(4, 4);
    for a in 0..2usize {
        for b in 0..2usize {
            for cc in 0..2usize {
                let sign = if b * cc == 1 { -1.0 } else { 1.0 };
                m[((a ^ b ^ cc) * 2 + cc, a * 2 + b)] += cr(sign * s);
            }
        }
    }
    m
}

/// Mode circuit realising a 2-mode gate on (j, k), j < k, with nearest-neighbour gates only.
pub fn route_nearest_neighbor(gate: &Gate, n: usize) -> Result<Circuit> {
    if gate.wires.len() != 2 {
        return Err(FermError::InvalidCircuit("routing needs a two-mode gate".into()));
    }
    let (j, k) = (gate.wires[0], gate.wires[1]);
    if j >= k {
        return Err(FermError::InvalidModeSet(format!("routing expects ascending modes, got ({j}, {k})")));
    }
    let mut c = Circuit::new(WireType::Mode, n)?;
    if k >= n {
        return Err(FermError::ModeOutOfRange { index: k, n });
    }
    for w in (j + 1..k).rev() {
        c.push(Gate::two(GateKind::Fswap, w, w + 1))?;
    }
    c.push(Gate { kind: gate.kind, wires: vec![j, j + 1], payload: gate.payload.clone() })?;
    for w in j + 1..k {
        c.push(Gate::two(GateKind::Fswap, w, w + 1))?;
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parity {
    Even,
    Odd,
}

fn classify(m: &CMat, k: usize) -> Result<Parity> {
    let p = qubit_parity(k);
    let conj = &p * m * &p;
    let even = max_abs_diff(&conj, m);
    let odd = max_abs(&(&conj + m));
    if even < 1e-9 {
        Ok(Parity::Even)
    } else if odd < 1e-9 {
        Ok(Parity::Odd)
    } else {
        Err(FermError::ParityMixing(even.min(odd)))
    }
}

/// W = e^{iφ} Rz(a) Rx(θ) Rz(b).
#[derive(Debug, Clone, Copy)]
struct Zxz {
    phase: f64,
    a: f64,
    theta: f64,
    b: f64,
}

fn zxz(w: &CMat) -> Zxz {
    let det = w[(0, 0)] * w[(1, 1)] - w[(0, 1)] * w[(1, 0)];
    let phase = det.arg() / 2.0;
    let v = w * C64::from_polar(1.0, -phase);
    let (cs, sn) = (v[(0, 0)].norm(), v[(1, 0)].norm());
    let theta = 2.0 * sn.atan2(cs);
    let sum = if cs > 1e-12 { -2.0 * v[(0, 0)].arg() } else { 0.0 };
    let diff = if sn > 1e-12 { 2.0 * (v[(1, 0)].arg() + PI / 2.0) } else { 0.0 };
    Zxz { phase, a: (sum + diff) / 2.0, theta, b: (sum - diff) / 2.0 }
}

struct Emitter {
    out: Circuit,
}

impl Emitter {
    fn push(&mut self, g: Gate) -> Result<()> {
        self.out.push(g)
    }

    fn phase(&mut self, w: usize, theta: f64) -> Result<()> {
        let t = theta.rem_euclid(2.0 * PI);
        let k = (t / FRAC_PI_4).round();
        if (t - k * FRAC_PI_4).abs() < ANGLE_EPS {
            for _ in 0..(k as usize % 8) {
                self.push(Gate::lambda_phase(w))?;
            }
            Ok(())
        } else {
            self.push(Gate::custom(diag(&[cr(1.0), C64::from_polar(1.0, t)]), vec![w])?)
        }
    }

    fn controlled_phase(&mut self, a: usize, b: usize, theta: f64) -> Result<()> {
        let t = theta.rem_euclid(2.0 * PI);
        if t < ANGLE_EPS || 2.0 * PI - t < ANGLE_EPS {
            Ok(())
        } else if (t - PI).abs() < ANGLE_EPS {
            self.push(Gate::two(GateKind::LambdaZ, a, b))
        } else {
            let d = diag(&[cr(1.0), cr(1.0), cr(1.0), C64::from_polar(1.0, t)]);
            self.push(Gate::custom(d, vec![a, b])?)
        }
    }

    /// diag(d00, d01, d10, d11) on wires (a, b).
    fn diagonal(&mut self, d: [C64; 4], a: usize, b: usize) -> Result<()> {
        let [d00, d01, d10, d11] = d;
        self.out.add_global_phase(d00.arg());
        self.phase(a, (d10 / d00).arg())?;
        self.phase(b, (d01 / d00).arg())?;
        self.controlled_phase(a, b, (d11 * d00 / (d01 * d10)).arg())
    }

    /// Ĥ (I ⊗ Rz(γ)) Ĥ, the extension of Rx(γ).
    fn extended_rx(&mut self, gamma: f64, a: usize, b: usize) -> Result<()> {
        if gamma.rem_euclid(4.0 * PI).abs() < ANGLE_EPS {
            return Ok(());
        }
        self.push(Gate::two(GateKind::HHat, a, b))?;
        self.out.add_global_phase(-gamma / 2.0);
        self.phase(b, gamma)?;
        self.push(Gate::two(GateKind::HHat, a, b))
    }

    fn one_mode_even(&mut self, m: &CMat, w: usize) -> Result<()> {
        self.out.add_global_phase(m[(0, 0)].arg());
        self.phase(w, (m[(1, 1)] / m[(0, 0)]).arg())
    }

    /// Parity-preserving 4×4 unitary on adjacent wires through its sector blocks.
    fn two_mode_even(&mut self, u: &CMat, a: usize, b: usize) -> Result<()> {
        let block = |i: [usize; 2]| CMat::from_fn(2, 2, |r, s| u[(i[r], i[s])]);
        let e0 = zxz(&block([0, 3]));
        let e1 = zxz(&block([2, 1]));
        let alpha = (e0.theta + e1.theta) / 2.0;
        let beta = (e0.theta - e1.theta) / 2.0;
        let rz = |t: f64| [C64::from_polar(1.0, -t / 2.0), C64::from_polar(1.0, t / 2.0)];
        // sector diagonals → [d00, d01, d10, d11]
        let pack = |s0: [C64; 2], s1: [C64; 2]| [s0[0], s1[1], s1[0], s0[1]];

        self.diagonal(pack(rz(e0.b), rz(e1.b - PI)), a, b)?;
        self.extended_rx(beta, a, b)?;
        self.diagonal(pack([cr(1.0), cr(1.0)], rz(PI)), a, b)?;
        self.extended_rx(alpha, a, b)?;
        let p0 = C64::from_polar(1.0, e0.phase);
        let p1 = C64::from_polar(1.0, e1.phase);
        let l0 = rz(e0.a);
        let l1 = rz(e1.a);
        self.diagonal(pack([p0 * l0[0], p0 * l0[1]], [p1 * l1[0], p1 * l1[1]]), a, b)
    }

    fn fswap_adjacent(&mut self, w: usize) -> Result<()> {
        self.push(Gate::two(GateKind::LambdaZ, w, w + 1))?;
        self.push(Gate::two(GateKind::Qswap, w, w + 1))
    }

    /// Even gate on ascending adjacent wires; `kind` enables the exact named rules.
    fn even_local(&mut self, kind: Option<GateKind>, m: &CMat, wires: &[usize]) -> Result<()> {
        match (kind, wires) {
            (Some(GateKind::LambdaPhase), &[w]) => self.push(Gate::lambda_phase(w)),
            (_, &[w]) => self.one_mode_even(m, w),
            (Some(GateKind::LambdaZ | GateKind::D), &[a, b]) => self.push(Gate::two(GateKind::LambdaZ, a, b)),
            (Some(GateKind::HHat), &[a, b]) => self.push(Gate::two(GateKind::HHat, a, b)),
            (Some(GateKind::Qswap), &[a, b]) => self.push(Gate::two(GateKind::Qswap, a, b)),
            (Some(GateKind::Fswap), &[a, _]) => self.fswap_adjacent(a),
            (Some(GateKind::GHat), &[a, b]) => {
                self.phase(b, PI / 2.0)?;
                self.push(Gate::two(GateKind::HHat, a, b))?;
                self.phase(b, PI / 2.0)
            }
            (_, &[a, b]) => self.two_mode_even(m, a, b),
            (Some(GateKind::LambdaXHat), &[c0, a, b]) => {
                for g in expand_lambda_x_hat(c0, a, b) {
                    self.push(g)?;
                }
                Ok(())
            }
            _ => Err(FermError::UnsupportedGate(format!("even gate on {} modes has no synthesis rule", wires.len()))),
        }
    }
}

/// Compile one mode gate into a qubit circuit over the universal set (plus
/// continuous phase gates where the angles require them) on `n` wires.
pub fn compile_fqt_gate(g: &Gate, n: usize) -> Result<Circuit> {
    let mut em = Emitter { out: Circuit::new(WireType::Qubit, n)? };
    if let Some(&w) = g.wires.iter().find(|&&w| w >= n) {
        return Err(FermError::ModeOutOfRange { index: w, n });
    }
    let mut m = g.matrix();
    ensure_unitary(&m, 1e-8)?;
    let mut wires = g.wires.clone();
    let mut kind = (g.kind != GateKind::Custom).then_some(g.kind);
    let k = wires.len();

    if k == 2 && wires[0] > wires[1] {
        let f = fswap_matrix();
        m = &f * m * &f;
        wires.swap(0, 1);
        kind = None;
    }
    if k >= 3 && !(wires.windows(2).all(|p| p[1] == p[0] + 1)) {
        return Err(FermError::UnsupportedGate(format!("{}-mode gates need ascending adjacent modes", k)));
    }

    let parity = classify(&m, k)?;
    if parity == Parity::Odd {
        let x0 = kron(&pauli::x(), &eye(1 << (k - 1)));
        m = x0 * m;
        kind = None;
    }
    let identity = max_abs_diff(&m, &eye(m.nrows())) < 1e-14;
    if !identity {
        if k == 2 && wires[1] > wires[0] + 1 {
            let (j, l) = (wires[0], wires[1]);
            for w in (j + 1..l).rev() {
                em.fswap_adjacent(w)?;
            }
            em.even_local(kind, &m, &[j, j + 1])?;
            for w in j + 1..l {
                em.fswap_adjacent(w)?;
            }
        } else {
            em.even_local(kind, &m, &wires)?;
        }
    }
    if parity == Parity::Odd {
        for w in 0..wires[0] {
            em.phase(w, PI)?;
        }
        em.push(Gate::x(wires[0]))?;
    }
    Ok(em.out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompileReport {
    pub n_wires: usize,
    pub input_gates: usize,
    pub output_gates: usize,
    pub counts: BTreeMap<String, usize>,
    /// Continuous phase gates outside the discrete universal set.
    pub continuous_phase_gates: usize,
    pub equivalence_residual: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compile a mode circuit gate by gate; checks the result against the mode
/// circuit's unitary when the register is small enough for dense matrices.
pub fn compile_circuit(c: &Circuit) -> Result<(Circuit, CompileReport)> {
    if c.wire_type() != WireType::Mode {
        return Err(FermError::InvalidCircuit("compilation expects a mode circuit".into()));
    }
    let n = c.n_wires();
    let mut out = Circuit::new(WireType::Qubit, n)?;
    for g in c.gates() {
        out.extend(&compile_fqt_gate(g, n)?)?;
    }
    out.add_global_phase(c.global_phase());
    let residual = if n <= DENSE_MAX_MODES { Some(max_abs_diff(&out.unitary()?, &c.unitary()?)) } else { None };
    let counts = out.counts();
    let report = CompileReport {
        n_wires: n,
        input_gates: c.len(),
        output_gates: out.len(),
        continuous_phase_gates: counts.get("custom").copied().unwrap_or(0),
        counts,
        equivalence_residual: residual,
        tolerance: COMPILE_TOL,
        passed: residual.is_none_or(|r| r < COMPILE_TOL),
    };
    Ok((out, report))
}

/// The Jordan–Wigner image of a mode gate on n modes.
pub fn jw_image(g: &Gate, n: usize) -> Result<CMat> {
    let modes: Vec<usize> = g.wires.iter().map(|w| w + 1).collect();
    embed_local_operator(&g.matrix(), &modes, n)
}
