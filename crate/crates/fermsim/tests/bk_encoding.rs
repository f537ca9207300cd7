use std::collections::HashMap;

use fermsim::bk::*;
use fermsim::circuit::{cnot_matrix, Circuit, Gate, GateKind, WireType};
use fermsim::linalg::{c, cr, eye, kron_all, max_abs_diff, pauli, CMat, CVec};
use fermsim::random;
use proptest::prelude::*;

/// α ⪯ β straight from the bit-string definition.
fn preceq_oracle(alpha: usize, beta: usize, t: usize) -> bool {
    let a: Vec<u8> = (0..t).map(|l| (alpha >> l & 1) as u8).collect();
    let b: Vec<u8> = (0..t).map(|l| (beta >> l & 1) as u8).collect();
    (0..t).any(|l0| (l0..t).all(|l| a[l] == b[l]) && (0..l0).all(|l| b[l] == 1))
}

fn ceil_log2(m: usize) -> usize {
    (m as f64).log2().ceil() as usize
}

fn encode_oracle(s: &[u8], t: usize) -> Vec<u8> {
    let m = s.len();
    (0..m).map(|j| (0..m).filter(|&k| preceq_oracle(k, j, t)).fold(0, |a, k| a ^ s[k])).collect()
}

fn random_bits(rng: &mut random::Rng, m: usize) -> Vec<u8> {
    (0..m).map(|_| random::index(rng, 2) as u8).collect()
}

fn xor_over(x: &[u8], idx: &[usize]) -> u8 {
    idx.iter().fold(0, |a, &i| a ^ x[i])
}

fn bits_of(idx: usize, m: usize) -> Vec<u8> {
    (0..m).map(|t| (idx >> (m - 1 - t) & 1) as u8).collect()
}

fn index_of(bits: &[u8]) -> usize {
    bits.iter().fold(0, |a, &b| 2 * a + b as usize)
}

#[test]
fn preceq_is_a_partial_order() {
    for t in 1..=6 {
        let n = 1usize << t;
        let rel: Vec<Vec<bool>> = (0..n).map(|a| (0..n).map(|b| preceq(a, b, t).unwrap()).collect()).collect();
        for a in 0..n {
            assert!(rel[a][a]);
            let above = (0..n).filter(|&b| rel[a][b]).count();
            assert!(above <= t, "t={t} a={a}: {above}");
            for b in 0..n {
                assert_eq!(rel[a][b], preceq_oracle(a, b, t));
                if rel[a][b] {
                    assert!(a <= b);
                    if a != b {
                        assert!(!rel[b][a]);
                    }
                    assert!((0..n).all(|c| !rel[b][c] || rel[a][c]), "transitivity at {a} {b}");
                }
            }
        }
    }
}

#[test]
fn preceq_examples() {
    assert!(preceq(0b011, 0b111, 3).unwrap() == preceq_oracle(0b011, 0b111, 3));
    assert!(preceq(0b011, 0b011, 3).unwrap());
    assert!(preceq(0b101, 0b101, 3).unwrap());
    assert!(preceq(0b010, 0b011, 3).unwrap());
    assert!(!preceq(0b001, 0b010, 3).unwrap());
    assert!(preceq(0, 1, 0).is_err());
    assert!(preceq(8, 1, 3).is_err());
}

#[test]
fn label_lengths() {
    assert_eq!(label_bits(1), 1);
    assert_eq!(label_bits(2), 1);
    assert_eq!(label_bits(3), 2);
    assert_eq!(label_bits(4), 2);
    assert_eq!(label_bits(5), 3);
    for m in 2..=128 {
        assert_eq!(label_bits(m), ceil_log2(m));
    }
    assert!(BkEncoding::new(0).is_err());
    assert!(BkEncoding::new(MAX_BK_MODES + 1).is_err());
    let one = BkEncoding::new(1).unwrap();
    assert_eq!(one.encode(&[1]).unwrap(), vec![1]);
}

#[test]
fn index_sets_match_definition() {
    for m in [1, 2, 3, 5, 8, 13, 16, 33, 64] {
        let enc = BkEncoding::new(m).unwrap();
        let t = enc.label_bits();
        let mut occurrences = vec![0usize; m];
        for j in 0..m {
            let s: Vec<usize> = (0..m).filter(|&k| preceq_oracle(k, j, t)).collect();
            assert_eq!(enc.set_s(j).unwrap(), s);
            assert!(s.contains(&j));
            for &i in &s {
                occurrences[i] += 1;
            }
            let up: Vec<usize> = (0..m).filter(|&i| preceq_oracle(j, i, t)).collect();
            assert_eq!(enc.set_update(j).unwrap(), up);
            assert!(enc.set_k(j).unwrap().len() <= t);
            assert!(enc.set_l(j).unwrap().len() <= t);
        }
        assert!(occurrences.iter().all(|&k| k <= t));
        assert!(enc.set_s(m).is_err());
    }
    let enc = BkEncoding::new(8).unwrap();
    assert_eq!(enc.set_s(0).unwrap(), vec![0]);
    assert_eq!(enc.set_s(7).unwrap(), vec![4, 5, 6, 7]);
    assert_eq!(enc.set_s(5).unwrap(), vec![4, 5]);
    assert!(enc.set_k(0).unwrap().is_empty());
    assert!(enc.set_l(0).unwrap().is_empty());
}

/// Binary-indexed-tree view: x_j covers the block of modes ending at j whose
/// length is 2^r, r the number of trailing ones of j capped at T − 1. Then
/// s_j is x_j minus the child blocks, and the prefix parity walks down the blocks.
#[test]
fn fenwick_oracles_for_k_and_l() {
    for m in [4, 8, 16, 32, 64] {
        let enc = BkEncoding::new(m).unwrap();
        let t = enc.label_bits();
        let span = |j: usize| (j.trailing_ones() as usize).min(t - 1);
        let start = |j: usize| j & !((1usize << span(j)) - 1);
        for j in 0..m {
            assert_eq!(enc.set_s(j).unwrap(), (start(j)..=j).collect::<Vec<_>>());
            let mut kids: Vec<usize> = (0..span(j)).map(|r| j - (1 << r)).collect();
            kids.sort();
            assert_eq!(enc.set_k(j).unwrap(), kids);
            let mut l = Vec::new();
            let mut end = j;
            while end > 0 {
                l.push(end - 1);
                end = start(end - 1);
            }
            l.sort();
            assert_eq!(enc.set_l(j).unwrap(), l);
        }
    }
}

#[test]
fn roundtrip_is_exhaustive_up_to_twelve_modes() {
    for m in 1..=12 {
        let enc = BkEncoding::new(m).unwrap();
        let t = enc.label_bits();
        for idx in 0..(1usize << m) {
            let s = bits_of(idx, m);
            let x = enc.encode(&s).unwrap();
            if m <= 8 {
                assert_eq!(x, encode_oracle(&s, t));
            }
            assert_eq!(enc.decode(&x).unwrap(), s);
        }
    }
}

#[test]
fn encode_examples() {
    let enc = BkEncoding::new(4).unwrap();
    assert_eq!(enc.encode(&[0; 4]).unwrap(), vec![0; 4]);
    let x = enc.encode(&[1, 0, 0, 0]).unwrap();
    let ones: Vec<usize> = (0..4).filter(|&j| x[j] == 1).collect();
    let holders: Vec<usize> = (0..4).filter(|&j| enc.set_s(j).unwrap().contains(&0)).collect();
    assert_eq!(ones, holders);
    assert!(ones.len() <= 2);
    assert!(enc.encode(&[0; 3]).is_err());
    assert!(enc.decode(&[0; 5]).is_err());
}

#[test]
fn reconstruction_identities_up_to_sixty_four_modes() {
    let mut rng = random::rng(2024);
    for m in [16, 17, 31, 32, 48, 64] {
        let enc = BkEncoding::new(m).unwrap();
        let t = enc.label_bits();
        let k: Vec<Vec<usize>> = (0..m).map(|j| enc.set_k(j).unwrap()).collect();
        let l: Vec<Vec<usize>> = (0..m).map(|j| enc.set_l(j).unwrap()).collect();
        for _ in 0..500 {
            let s = random_bits(&mut rng, m);
            let x = enc.encode(&s).unwrap();
            assert_eq!(x, encode_oracle(&s, t));
            assert_eq!(enc.decode(&x).unwrap(), s);
            let mut prefix = 0;
            for j in 0..m {
                assert_eq!(s[j], x[j] ^ xor_over(&x, &k[j]), "M={m} j={j}");
                assert_eq!(prefix, xor_over(&x, &l[j]), "M={m} j={j}");
                prefix ^= s[j];
            }
        }
        // GF(2) linearity
        let a = random_bits(&mut rng, m);
        let b = random_bits(&mut rng, m);
        let sum: Vec<u8> = a.iter().zip(&b).map(|(p, q)| p ^ q).collect();
        let ex: Vec<u8> = enc.encode(&a).unwrap().iter().zip(enc.encode(&b).unwrap()).map(|(p, q)| p ^ q).collect();
        assert_eq!(enc.encode(&sum).unwrap(), ex);
    }
}

#[test]
fn extraction_is_exact_on_every_basis_state() {
    let m = 8;
    let enc = BkEncoding::new(m).unwrap();
    let t = enc.label_bits();
    // inverse of the oracle encoder by table lookup
    let table: HashMap<Vec<u8>, Vec<u8>> =
        (0..1usize << m).map(|i| bits_of(i, m)).map(|s| (encode_oracle(&s, t), s)).collect();
    for j in 0..m {
        let ext = enc.extraction_circuit(j).unwrap();
        let [a, b, cc] = ext.counts();
        assert_eq!(a, enc.set_k(j).unwrap().len() + 1);
        assert_eq!(b, enc.set_update(j).unwrap().len());
        assert_eq!(cc, enc.set_l(j).unwrap().len());
        assert!(a <= t + 1 && b <= t + 1 && cc <= t + 1);
        let circuit = ext.to_circuit(m + 1).unwrap();
        let cols: Vec<CVec> = (0..1usize << m)
            .map(|xi| {
                let mut v = CVec::zeros(2 << m);
                v[xi] = cr(1.0);
                v
            })
            .collect();
        let outs = circuit.apply_columns(&cols).unwrap();
        for (xi, out) in outs.iter().enumerate() {
            let x = bits_of(xi, m);
            let mut s = table[&x].clone();
            let sj = s[j];
            let before = s[..j].iter().fold(0, |acc, v| acc ^ v);
            s[j] = 0;
            let sign = if sj & before == 1 { -1.0 } else { 1.0 };
            let target = ((sj as usize) << m) | index_of(&encode_oracle(&s, t));
            let mut want = CVec::zeros(2 << m);
            want[target] = cr(sign);
            assert!((out - want).norm() < 1e-12, "j={j} x={x:?}");
        }
        assert!(verify_extraction(&enc, j).unwrap() < 1e-12);
    }
    let e2 = BkEncoding::new(2).unwrap().extraction_circuit(0).unwrap();
    assert_eq!(e2.counts()[0], 1);
    assert!(e2.stage_c.is_empty());
}

#[test]
fn gate_counts_grow_logarithmically() {
    let ms: Vec<usize> = (4..=64).collect();
    let rows = benchmark(&ms).unwrap();
    for r in &rows {
        let bound = 3 * (ceil_log2(r.m) + 1);
        assert!(r.max_gates_bk <= bound, "M={}: {} > {bound}", r.m, r.max_gates_bk);
        assert_eq!(r.max_gates_jwt, r.m + 1);
    }
    // every j at every M, not only the maximum
    for m in [4, 8, 16, 32, 64] {
        let enc = BkEncoding::new(m).unwrap();
        for j in 0..m {
            assert!(enc.extraction_circuit(j).unwrap().total() <= 3 * (ceil_log2(m) + 1));
            assert_eq!(jw_extraction(j, m).unwrap().len(), j + 2);
        }
    }
    let at = |m: usize| rows.iter().find(|r| r.m == m).unwrap();
    assert!(at(64).max_gates_bk < at(64).max_gates_jwt / 3);
    let csv = benchmark_csv(&rows[..2]);
    assert!(csv.starts_with("M,max_gates_bk,max_gates_jwt\n4,"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn jw_extraction_is_correct() {
    let m = 5;
    for j in 0..m {
        let c = Circuit::from_gates(WireType::Qubit, m + 1, jw_extraction(j, m).unwrap()).unwrap();
        for si in 0..(1usize << m) {
            let s = bits_of(si, m);
            let mut v = CVec::zeros(2 << m);
            v[si] = cr(1.0);
            let out = c.apply(&v).unwrap();
            let mut t = s.clone();
            t[j] = 0;
            let sign = if s[j] & s[..j].iter().fold(0, |a, b| a ^ b) == 1 { -1.0 } else { 1.0 };
            let mut want = CVec::zeros(2 << m);
            want[((s[j] as usize) << m) | index_of(&t)] = cr(sign);
            assert!((out - want).norm() < 1e-12);
        }
    }
}

/// A signed occupation string, the action of one field operator on a Fock basis state.
type Ket = Option<(f64, Vec<u8>)>;

fn act(i: usize, create: bool, ket: Ket) -> Ket {
    let (sign, mut s) = ket?;
    if s[i] == u8::from(create) {
        return None;
    }
    s[i] ^= 1;
    let string = if s[..i].iter().fold(0, |a, b| a ^ b) == 1 { -1.0 } else { 1.0 };
    Some((sign * string, s))
}

/// Columns of the mode operator acting as `u` on the listed modes, built from
/// |s⟩⟨t| = C(s)·P·C(t)† with creators in list order and P the local vacuum projector.
fn mode_operator(u: &CMat, modes: &[usize], m: usize) -> CMat {
    let k = modes.len();
    let d = 1usize << m;
    let mut out = CMat::zeros(d, d);
    for x in 0..d {
        for t in 0..(1usize << k) {
            // C(t)† annihilates in reverse list order
            let mut ket: Ket = Some((1.0, bits_of(x, m)));
            for (q, &mode) in modes.iter().enumerate() {
                if t >> (k - 1 - q) & 1 == 1 {
                    ket = act(mode, false, ket);
                }
            }
            let Some((sign, empty)) = ket else { continue };
            if modes.iter().any(|&w| empty[w] == 1) {
                continue;
            }
            for s in 0..(1usize << k) {
                let mut ket: Ket = Some((sign, empty.clone()));
                for q in (0..k).rev() {
                    if s >> (k - 1 - q) & 1 == 1 {
                        ket = act(modes[q], true, ket);
                    }
                }
                let (sg, bits) = ket.expect("creating into emptied modes");
                out[(index_of(&bits), x)] += u[(s, t)] * sg;
            }
        }
    }
    out
}

fn encoding_oracle(m: usize) -> Vec<usize> {
    let t = label_bits(m);
    (0..1usize << m).map(|i| index_of(&encode_oracle(&bits_of(i, m), t))).collect()
}

/// Simulated circuit on clean-ancilla inputs vs E·G·E†, plus the leakage out of clean ancillas.
fn simulation_residual(g: &CMat, modes: &[usize], m: usize, perm: &[usize]) -> (f64, f64) {
    let c = simulate_mode_gate_on_qubits(g, modes, m).unwrap();
    let target = mode_operator(g, modes, m);
    let d = 1usize << m;
    let mut want = CMat::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            want[(perm[a], perm[b])] = target[(a, b)];
        }
    }
    let cols: Vec<CVec> = (0..d)
        .map(|x| {
            let mut v = CVec::zeros(d << modes.len());
            v[x] = cr(1.0);
            v
        })
        .collect();
    let outs = c.apply_columns(&cols).unwrap();
    let mut dev = 0.0f64;
    let mut leak = 0.0f64;
    for (x, out) in outs.iter().enumerate() {
        for (r, z) in out.iter().enumerate() {
            if r < d {
                dev = dev.max((z - want[(r, x)]).norm());
            } else {
                leak = leak.max(z.norm());
            }
        }
    }
    (dev, leak)
}

#[test]
fn mode_operator_oracle_matches_kronecker_fields() {
    let m = 3;
    let field = |i: usize| {
        let f: Vec<CMat> = (0..m)
            .map(|k| {
                if k < i {
                    pauli::z()
                } else if k == i {
                    pauli::lower()
                } else {
                    eye(2)
                }
            })
            .collect();
        kron_all(f.iter())
    };
    let x = mode_operator(&pauli::x(), &[1], m);
    assert!(max_abs_diff(&x, &(field(1) + field(1).adjoint())) < 1e-15);
    let hop =
        fermsim::linalg::from_real(&[&[0.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 0.0, 0.0], &[0.0; 4]]);
    // |01⟩⟨10| on (2, 0) is φ₀†φ₂
    let op = mode_operator(&hop, &[2, 0], m);
    assert!(max_abs_diff(&op, &(field(0).adjoint() * field(2))) < 1e-15);
}

#[test]
fn mode_gates_simulate_on_encoded_registers() {
    let mut rng = random::rng(77);
    for m in [2, 4, 6, 8] {
        let perm = encoding_oracle(m);
        let e = BkEncoding::new(m).unwrap().encoding_matrix().unwrap();
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(e[(p, i)], cr(1.0));
        }
        for j in 0..m {
            // parity-changing flip
            let (dev, leak) = simulation_residual(&pauli::x(), &[j], m, &perm);
            assert!(dev < 1e-10 && leak < 1e-10, "X M={m} j={j}: {dev} {leak}");
            // number phase
            let theta = 0.3 + j as f64;
            let phase = fermsim::linalg::diag(&[cr(1.0), c(theta.cos(), theta.sin())]);
            let (dev, leak) = simulation_residual(&phase, &[j], m, &perm);
            assert!(dev < 1e-10 && leak < 1e-10, "phase M={m} j={j}");
        }
        // random two-mode gates, either order, any parity structure
        for _ in 0..3 {
            let a = random::index(&mut rng, m);
            let b = (a + 1 + random::index(&mut rng, m - 1)) % m;
            let u = random::unitary(&mut rng, 4);
            let (dev, leak) = simulation_residual(&u, &[a, b], m, &perm);
            assert!(dev < 1e-10 && leak < 1e-10, "M={m} ({a},{b}): {dev} {leak}");
            let (dev, leak) = verify_mode_gate_simulation(&u, &[a, b], m).unwrap();
            assert!(dev < 1e-10 && leak < 1e-10);
        }
    }
}

#[test]
fn identity_gate_simulates_to_identity() {
    for m in [1, 3, 8] {
        let c = simulate_mode_gate_on_qubits(&eye(2), &[m - 1], m).unwrap();
        assert!(identity_residual(&c).unwrap() < 1e-12);
        let c = simulate_mode_gate_on_qubits(&eye(4), &[0, m.max(2) - 1], m.max(2)).unwrap();
        assert!(identity_residual(&c).unwrap() < 1e-12);
    }
    assert!(simulate_mode_gate_on_qubits(&eye(2), &[0, 0], 3).is_err());
    assert!(simulate_mode_gate_on_qubits(&CMat::from_element(2, 2, cr(1.0)), &[0], 3).is_err());
    assert!(simulate_mode_gate_on_qubits(&eye(8), &[0, 1, 2], 3).is_err());
}

/// Doubling isometry |s⟩ ↦ |s₀ s₀ … s_{N−1} s_{N−1}⟩ as a matrix.
fn doubling(n: usize) -> CMat {
    let mut v = CMat::zeros(1 << (2 * n), 1 << n);
    for i in 0..(1usize << n) {
        let s = bits_of(i, n);
        let doubled: Vec<u8> = s.iter().flat_map(|&b| [b, b]).collect();
        v[(index_of(&doubled), i)] = cr(1.0);
    }
    v
}

fn check_embedding(c: &Circuit) {
    let modes = qubit_to_fermion_embed(c).unwrap();
    assert_eq!(modes.wire_type(), WireType::Mode);
    assert_eq!(modes.n_wires(), 2 * c.n_wires());
    for (g, h) in c.gates().iter().zip(modes.gates()) {
        let want: Vec<usize> = g.wires.iter().flat_map(|&w| [2 * w, 2 * w + 1]).collect();
        assert_eq!(h.wires, want);
        let m = h.matrix();
        let p = kron_all(std::iter::repeat_n(&pauli::z(), h.wires.len()));
        assert!(max_abs_diff(&(&p * &m), &(&m * &p)) < 1e-12);
    }
    let v = doubling(c.n_wires());
    let got = v.adjoint() * modes.unitary().unwrap() * &v;
    assert!(max_abs_diff(&got, &c.unitary().unwrap()) < 1e-10);
    // the image never leaves the doubled subspace
    let u = modes.unitary().unwrap();
    assert!(max_abs_diff(&(&u * &v), &(&v * &got)) < 1e-10);
    assert!(verify_qubit_embedding(c).unwrap() < 1e-10);
}

#[test]
fn qubit_circuits_embed_into_modes() {
    check_embedding(&Circuit::from_gates(WireType::Qubit, 2, vec![Gate::x(1)]).unwrap());
    check_embedding(&Circuit::from_gates(WireType::Qubit, 2, vec![Gate::two(GateKind::Cnot, 0, 1)]).unwrap());
    check_embedding(&Circuit::new(WireType::Qubit, 2).unwrap());
    let x = qubit_to_fermion_embed(&Circuit::from_gates(WireType::Qubit, 1, vec![Gate::x(0)]).unwrap()).unwrap();
    assert_eq!(x.gates()[0].matrix(), cnot_matrix() * fermsim::linalg::kron(&pauli::x(), &eye(2)) * cnot_matrix());

    let mut rng = random::rng(5);
    let mut c = Circuit::new(WireType::Qubit, 3).unwrap();
    for _ in 0..6 {
        let a = random::index(&mut rng, 3);
        let b = (a + 1 + random::index(&mut rng, 2)) % 3;
        if random::index(&mut rng, 2) == 0 {
            c.push(Gate::custom(random::unitary(&mut rng, 2), vec![a]).unwrap()).unwrap();
        } else {
            c.push(Gate::custom(random::unitary(&mut rng, 4), vec![a, b]).unwrap()).unwrap();
        }
    }
    check_embedding(&c);

    let three =
        Circuit::from_gates(WireType::Qubit, 3, vec![Gate::new(GateKind::LambdaXHat, vec![0, 1, 2]).unwrap()]).unwrap();
    assert!(qubit_to_fermion_embed(&three).is_err());
    assert!(qubit_to_fermion_embed(&Circuit::new(WireType::Mode, 2).unwrap()).is_err());
}

#[test]
fn encoding_table_json() {
    let t = encoding_table(8).unwrap();
    assert_eq!(t.t, 3);
    assert_eq!(t.rows.len(), 8);
    assert_eq!(t.rows[5].label, "101");
    let s = serde_json::to_string(&t).unwrap();
    let back: EncodingTable = serde_json::from_str(&s).unwrap();
    assert_eq!(back, t);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encode_decode_are_inverse(m in 1usize..=128, seed in any::<u64>()) {
        let enc = BkEncoding::new(m).unwrap();
        let mut rng = random::rng(seed);
        let s = random_bits(&mut rng, m);
        let x = enc.encode(&s).unwrap();
        prop_assert_eq!(enc.decode(&x).unwrap(), s.clone());
        prop_assert_eq!(enc.encode(&enc.decode(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn preceq_implies_numeric_order(t in 1usize..=10, a in any::<u16>(), b in any::<u16>()) {
        let mask = (1usize << t) - 1;
        let (a, b) = (a as usize & mask, b as usize & mask);
        let r = preceq(a, b, t).unwrap();
        prop_assert_eq!(r, preceq_oracle(a, b, t));
        if r {
            prop_assert!(a <= b);
        }
    }
}
