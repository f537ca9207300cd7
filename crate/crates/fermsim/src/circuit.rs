//! Gate lists over qubit or mode wires, with JSON I/O and statevector simulation.
//!
//! Wires are 0-based. On mode wires a gate's local matrix is read in the Fock
//! basis of the listed modes (in the listed order) and lifted to the full
//! register through the field-operator expansion; on qubit wires it is an
//! ordinary tensor-factor embedding.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FermError, Result};
use crate::fock::{evaluate_polynomial_sparse, local_operator_polynomial, MAX_MODES};
use crate::json::MatrixJson;
use crate::linalg::{c, cr, diag, eye, from_real, pauli, unitary_residual, CMat, CVec, C64};
use crate::sparse::SparseOperator;

/// Largest qubit register a circuit may address.
pub const MAX_WIRES: usize = 256;
/// Largest register the statevector simulator accepts.
pub const SIM_MAX_WIRES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireType {
    Qubit,
    Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    /// diag(1, e^{iπ/4})
    LambdaPhase,
    /// diag(1, 1, 1, -1)
    LambdaZ,
    HHat,
    GHat,
    Fswap,
    Qswap,
    /// Swap defect, same matrix as `LambdaZ`.
    D,
    X,
    /// Controlled parity-preserving flip: first wire controls, the other two flip together.
    LambdaXHat,
    Cnot,
    Custom,
}

impl GateKind {
    pub const ALL: [GateKind; 11] = [
        GateKind::LambdaPhase,
        GateKind::LambdaZ,
        GateKind::HHat,
        GateKind::GHat,
        GateKind::Fswap,
        GateKind::Qswap,
        GateKind::D,
        GateKind::X,
        GateKind::LambdaXHat,
        GateKind::Cnot,
        GateKind::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::LambdaPhase => "lambda_phase",
            GateKind::LambdaZ => "lambda_z",
            GateKind::HHat => "h_hat",
            GateKind::GHat => "g_hat",
            GateKind::Fswap => "fswap",
            GateKind::Qswap => "qswap",
            GateKind::D => "d",
            GateKind::X => "x",
            GateKind::LambdaXHat => "lambda_x_hat",
            GateKind::Cnot => "cnot",
            GateKind::Custom => "custom",
        }
    }

    /// Number of wires, `None` for custom gates.
    pub fn arity(self) -> Option<usize> {
        match self {
            GateKind::LambdaPhase | GateKind::X => Some(1),
            GateKind::LambdaXHat => Some(3),
            GateKind::Custom => None,
            _ => Some(2),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = FermError;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| FermError::UnsupportedGate(s.to_string()))
    }
}

/// Ĝ-style extension of a one-qubit gate: |a,b⟩ ↦ Σ_c g[c,b] |a⊕b⊕c, c⟩.
pub(crate) fn extend_one_qubit(g: &CMat) -> CMat {
    let mut out = CMat::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            for cc in 0..2 {
                out[((a ^ b ^ cc) * 2 + cc, a * 2 + b)] += g[(cc, b)];
            }
        }
    }
    out
}

pub fn t_matrix() -> CMat {
    diag(&[cr(1.0), C64::from_polar(1.0, FRAC_PI_4)])
}

pub fn cz_matrix() -> CMat {
    diag(&[cr(1.0), cr(1.0), cr(1.0), cr(-1.0)])
}

pub fn h_hat_matrix() -> CMat {
    extend_one_qubit(&pauli::hadamard())
}

/// Ĝ is the extension of (1/√2)[[1, i], [i, 1]].
pub fn g_hat_matrix() -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMat::from_row_slice(2, 2, &[cr(s), c(0.0, s), c(0.0, s), cr(s)]);
    extend_one_qubit(&g)
}

pub fn fswap_matrix() -> CMat {
    from_real(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.0, -1.0]])
}

pub fn qswap_matrix() -> CMat {
    from_real(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0]])
}

pub fn cnot_matrix() -> CMat {
    from_real(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 1.0, 0.0]])
}

/// Control on local wire 0, X⊗X on local wires 1 and 2.
pub fn lambda_x_hat_matrix() -> CMat {
    let mut m = CMat::zeros(8, 8);
    for i in 0..8 {
        let j = if i & 4 != 0 { i ^ 3 } else { i };
        m[(j, i)] = cr(1.0);
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub wires: Vec<usize>,
    pub payload: Option<CMat>,
}

impl Gate {
    pub fn new(kind: GateKind, wires: Vec<usize>) -> Result<Self> {
        if kind == GateKind::Custom {
            return Err(FermError::InvalidCircuit("custom gates need a payload".into()));
        }
        let g = Self { kind, wires, payload: None };
        g.check_shape()?;
        Ok(g)
    }

    pub fn custom(matrix: CMat, wires: Vec<usize>) -> Result<Self> {
        let g = Self { kind: GateKind::Custom, wires, payload: Some(matrix) };
        g.check_shape()?;
        Ok(g)
    }

    pub fn lambda_phase(w: usize) -> Self {
        Self { kind: GateKind::LambdaPhase, wires: vec![w], payload: None }
    }

    pub fn x(w: usize) -> Self {
        Self { kind: GateKind::X, wires: vec![w], payload: None }
    }

    pub fn two(kind: GateKind, a: usize, b: usize) -> Self {
        debug_assert_eq!(kind.arity(), Some(2));
        Self { kind, wires: vec![a, b], payload: None }
    }

    fn check_shape(&self) -> Result<()> {
        let k = self.wires.len();
        if k == 0 {
            return Err(FermError::InvalidCircuit(format!("{} gate without wires", self.kind)));
        }
        for (i, w) in self.wires.iter().enumerate() {
            if self.wires[..i].contains(w) {
                return Err(FermError::InvalidCircuit(format!("{} gate repeats wire {w}", self.kind)));
            }
        }
        match (self.kind.arity(), &self.payload) {
            (Some(a), None) if a == k => Ok(()),
            (Some(a), None) => Err(FermError::InvalidCircuit(format!("{} gate takes {a} wires, got {k}", self.kind))),
            (Some(_), Some(_)) => Err(FermError::InvalidCircuit(format!("{} gate takes no payload", self.kind))),
            (None, Some(m)) => {
                if k > 8 || m.nrows() != 1 << k || m.ncols() != 1 << k {
                    return Err(FermError::DimensionMismatch { expected: 1 << k.min(8), got: m.nrows() });
                }
                let r = unitary_residual(m);
                if r > 1e-8 {
                    return Err(FermError::NotUnitary(r));
                }
                Ok(())
            }
            (None, None) => Err(FermError::InvalidCircuit("custom gate without payload".into())),
        }
    }

    /// Local matrix in the basis of `wires`, first wire most significant.
    pub fn matrix(&self) -> CMat {
        match self.kind {
            GateKind::LambdaPhase => t_matrix(),
            GateKind::LambdaZ | GateKind::D => cz_matrix(),
            GateKind::HHat => h_hat_matrix(),
            GateKind::GHat => g_hat_matrix(),
            GateKind::Fswap => fswap_matrix(),
            GateKind::Qswap => qswap_matrix(),
            GateKind::X => pauli::x(),
            GateKind::LambdaXHat => lambda_x_hat_matrix(),
            GateKind::Cnot => cnot_matrix(),
            GateKind::Custom => self.payload.clone().expect("custom gate payload checked on construction"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateJson {
    pub kind: String,
    pub wires: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<MatrixJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitJson {
    pub wire_type: WireType,
    pub n_wires: usize,
    pub gates: Vec<GateJson>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub global_phase: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    wire_type: WireType,
    n_wires: usize,
    gates: Vec<Gate>,
    /// Scalar e^{i·global_phase} multiplying the gate product.
    global_phase: f64,
}

impl Circuit {
    pub fn new(wire_type: WireType, n_wires: usize) -> Result<Self> {
        let max = match wire_type {
            WireType::Qubit => MAX_WIRES,
            WireType::Mode => MAX_MODES,
        };
        if n_wires == 0 || n_wires > max {
            return Err(FermError::ModeCount { n: n_wires, max });
        }
        Ok(Self { wire_type, n_wires, gates: Vec::new(), global_phase: 0.0 })
    }

    pub fn from_gates(wire_type: WireType, n_wires: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(wire_type, n_wires)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn wire_type(&self) -> WireType {
        self.wire_type
    }

    pub fn n_wires(&self) -> usize {
        self.n_wires
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn global_phase(&self) -> f64 {
        self.global_phase
    }

    pub fn add_global_phase(&mut self, phi: f64) {
        self.global_phase = (self.global_phase + phi).rem_euclid(2.0 * std::f64::consts::PI);
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        g.check_shape()?;
        if let Some(&w) = g.wires.iter().find(|&&w| w >= self.n_wires) {
            return Err(FermError::ModeOutOfRange { index: w, n: self.n_wires });
        }
        self.gates.push(g);
        Ok(())
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.wire_type != self.wire_type {
            return Err(FermError::InvalidCircuit("cannot join qubit and mode circuits".into()));
        }
        for g in &other.gates {
            self.push(g.clone())?;
        }
        self.add_global_phase(other.global_phase);
        Ok(())
    }

    pub fn counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for g in &self.gates {
            *m.entry(g.kind.name().to_string()).or_insert(0) += 1;
        }
        m
    }

    pub fn to_json(&self) -> CircuitJson {
        CircuitJson {
            wire_type: self.wire_type,
            n_wires: self.n_wires,
            gates: self
                .gates
                .iter()
                .map(|g| GateJson {
                    kind: g.kind.name().to_string(),
                    wires: g.wires.clone(),
                    payload: g.payload.as_ref().map(MatrixJson::from_matrix),
                })
                .collect(),
            global_phase: self.global_phase,
        }
    }

    pub fn from_json(j: &CircuitJson) -> Result<Self> {
        let mut c = Self::new(j.wire_type, j.n_wires)?;
        for gj in &j.gates {
            let kind: GateKind = gj.kind.parse()?;
            let payload = gj.payload.as_ref().map(MatrixJson::to_matrix).transpose()?;
            c.push(Gate { kind, wires: gj.wires.clone(), payload })?;
        }
        c.global_phase = j.global_phase;
        Ok(c)
    }

    fn actions(&self) -> Result<Vec<Action>> {
        self.gates
            .iter()
            .map(|g| match self.wire_type {
                WireType::Qubit => Ok(Action::Local(g.matrix(), g.wires.clone())),
                WireType::Mode => {
                    let modes: Vec<usize> = g.wires.iter().map(|w| w + 1).collect();
                    let poly = local_operator_polynomial(&g.matrix(), &modes)?;
                    Ok(Action::Sparse(evaluate_polynomial_sparse(&poly, self.n_wires)?))
                }
            })
            .collect()
    }

    fn run(&self, actions: &[Action], v: &CVec) -> CVec {
        let mut state = v.clone();
        for a in actions {
            match a {
                Action::Local(m, wires) => apply_local(&mut state, m, wires, self.n_wires),
                Action::Sparse(s) => state = s.apply(&state),
            }
        }
        state * C64::from_polar(1.0, self.global_phase)
    }

    /// Apply the circuit to a state vector of dimension 2^n_wires.
    pub fn apply(&self, v: &CVec) -> Result<CVec> {
        self.check_dim(v.len())?;
        Ok(self.run(&self.actions()?, v))
    }

    /// Apply the circuit to each given column.
    pub fn apply_columns(&self, columns: &[CVec]) -> Result<Vec<CVec>> {
        let actions = self.actions()?;
        columns
            .iter()
            .map(|v| {
                self.check_dim(v.len())?;
                Ok(self.run(&actions, v))
            })
            .collect()
    }

    /// Full unitary; restricted to registers of at most 12 wires.
    pub fn unitary(&self) -> Result<CMat> {
        if self.n_wires > MAX_MODES {
            return Err(FermError::ModeCount { n: self.n_wires, max: MAX_MODES });
        }
        let d = 1usize << self.n_wires;
        let actions = self.actions()?;
        let mut u = CMat::zeros(d, d);
        for col in 0..d {
            let mut e = CVec::zeros(d);
            e[col] = cr(1.0);
            u.set_column(col, &self.run(&actions, &e));
        }
        Ok(u)
    }

    /// The inverse circuit (gates reversed and adjointed).
    pub fn inverse(&self) -> Self {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| {
                let m = g.matrix();
                if (&m * &m - eye(m.nrows())).iter().all(|z| z.norm() < 1e-14) {
                    g.clone()
                } else {
                    Gate { kind: GateKind::Custom, wires: g.wires.clone(), payload: Some(m.adjoint()) }
                }
            })
            .collect();
        Self {
            wire_type: self.wire_type,
            n_wires: self.n_wires,
            gates,
            global_phase: (-self.global_phase).rem_euclid(2.0 * std::f64::consts::PI),
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if self.n_wires > SIM_MAX_WIRES {
            return Err(FermError::ModeCount { n: self.n_wires, max: SIM_MAX_WIRES });
        }
        let d = 1usize << self.n_wires;
        if len != d {
            return Err(FermError::DimensionMismatch { expected: d, got: len });
        }
        Ok(())
    }
}

enum Action {
    Local(CMat, Vec<usize>),
    Sparse(SparseOperator),
}

/// Apply a k-wire operator in place on an n-qubit state (wire 0 most significant).
pub fn apply_local(state: &mut CVec, op: &CMat, wires: &[usize], n: usize) {
    let k = wires.len();
    let dk = 1usize << k;
    let bits: Vec<usize> = wires.iter().map(|&w| 1usize << (n - 1 - w)).collect();
    let mask: usize = bits.iter().sum();
    let offsets: Vec<usize> =
        (0..dk).map(|l| (0..k).filter(|&t| l >> (k - 1 - t) & 1 == 1).map(|t| bits[t]).sum()).collect();
    let mut buf = vec![cr(0.0); dk];
    for base in 0..state.len() {
        if base & mask != 0 {
            continue;
        }
        for (l, off) in offsets.iter().enumerate() {
            buf[l] = state[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let mut acc = cr(0.0);
            for (l, b) in buf.iter().enumerate() {
                acc += op[(r, l)] * b;
            }
            state[base | off] = acc;
        }
    }
}
