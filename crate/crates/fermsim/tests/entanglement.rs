use fermsim::channels::partial_trace;
use fermsim::entanglement::*;
use fermsim::linalg::{c, cr, diag, eye, kron, max_abs_diff, pauli, CMat, CVec};
use fermsim::random;
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn ket(amps: &[(usize, C)], d: usize) -> CVec {
    let mut v = CVec::zeros(d);
    for &(i, a) in amps {
        v[i] = a;
    }
    v
}

type C = fermsim::C64;

fn proj(v: &CVec) -> CMat {
    v * v.adjoint()
}

fn bell0() -> CVec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ket(&[(0, cr(s)), (3, cr(s))], 4)
}

/// Wootters' value from the eigenvalues of the non-Hermitian product `rho * rho~`.
fn concurrence_oracle(rho: &CMat) -> f64 {
    let yy = kron(&pauli::y(), &pauli::y());
    let tilde = &yy * rho.conjugate() * &yy;
    let r = rho * tilde;
    let ev = r.schur().eigenvalues().expect("complex Schur form");
    let mut l: Vec<f64> = ev.iter().map(|z| z.re.max(0.0).sqrt()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

/// Closed form for superselected two-mode states: every sector block is an
/// X state, so `p_k C(rho_k)` is twice the sector coherence.
fn fermionic_concurrence_oracle(rho: &CMat) -> f64 {
    2.0 * (rho[(0, 3)].norm() + rho[(1, 2)].norm())
}

fn fermionic_eof_oracle(rho: &CMat) -> f64 {
    let mut total = 0.0;
    for (a, b) in [(0, 3), (1, 2)] {
        let p = rho[(a, a)].re + rho[(b, b)].re;
        if p > 1e-14 {
            total += p * eof_from_concurrence(2.0 * rho[(a, b)].norm() / p);
        }
    }
    total
}

#[test]
fn wootters_examples() {
    assert!((wootters_concurrence(&proj(&bell0()), TOL).unwrap() - 1.0).abs() < 1e-12);
    assert!(wootters_concurrence(&diag(&[cr(1.0), cr(0.0), cr(0.0), cr(0.0)]), TOL).unwrap().abs() < 1e-12);
    let mixed = proj(&bell0()) * cr(0.5) + diag(&[cr(0.5), cr(0.0), cr(0.0), cr(0.0)]);
    let value = wootters_concurrence(&mixed, TOL).unwrap();
    assert!((value - concurrence_oracle(&mixed)).abs() < 1e-10);
    assert!((value - 0.5).abs() < 1e-10);
    let mut rng = random::rng(31);
    for _ in 0..50 {
        let sampled = sampled_decomposition_concurrence(&mixed, 2, &mut rng);
        assert!(sampled >= value - 1e-10);
    }
    assert!(wootters_concurrence(&diag(&[cr(1.5), cr(-0.5), cr(0.0), cr(0.0)]), TOL).is_err());
}

#[test]
fn wootters_matches_oracles_on_random_states() {
    let mut rng = random::rng(8);
    for _ in 0..200 {
        // The product-eigenvalue oracle takes square roots of every eigenvalue,
        // so it is only accurate at full rank.
        let rho = random::density(&mut rng, 4, 4);
        let v = wootters_concurrence(&rho, TOL).unwrap();
        assert!((v - concurrence_oracle(&rho)).abs() < 1e-8, "{v} vs {}", concurrence_oracle(&rho));
        let psi = random::pure_state(&mut rng, 4);
        let v = wootters_concurrence(&proj(&psi), TOL).unwrap();
        assert!((v - pure_concurrence(&psi)).abs() < 1e-12);
    }
}

#[test]
fn eof_examples() {
    assert!((entanglement_of_formation_2q(&proj(&bell0()), TOL).unwrap() - 1.0).abs() < 1e-10);
    assert!(entanglement_of_formation_2q(&diag(&[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]), TOL).unwrap().abs() < 1e-10);
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    assert!((eof_from_concurrence(0.5) - h((1.0 + 0.75f64.sqrt()) / 2.0)).abs() < 1e-15);

    // Werner state with concurrence 0.5: every sampled decomposition lies above the formula.
    let w = 2.0 / 3.0;
    let werner = proj(&bell0()) * cr(w) + eye(4) * cr((1.0 - w) / 4.0);
    let cval = wootters_concurrence(&werner, TOL).unwrap();
    assert!((cval - 0.5).abs() < 1e-10);
    let e = entanglement_of_formation_2q(&werner, TOL).unwrap();
    let mut rng = random::rng(12);
    for _ in 0..50 {
        assert!(sampled_decomposition_eof(&werner, 6, &mut rng) >= e - 1e-10);
    }
}

#[test]
fn fermionic_concurrence_examples() {
    let r = fermionic_concurrence(&phi_mixed(), TOL).unwrap();
    assert!((r.value - 1.0).abs() < TOL);
    assert!((r.p0 - 0.5).abs() < TOL && (r.c0 - 1.0).abs() < TOL && (r.c1 - 1.0).abs() < TOL);
    assert!(fermionic_concurrence(&diag(&[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]), TOL).unwrap().value.abs() < TOL);
    for k in 0..12 {
        let t = 0.13 * k as f64;
        let r = fermionic_concurrence(&proj(&mes0_state(t)), TOL).unwrap();
        assert!((r.value - (2.0 * t).sin().abs()).abs() < 1e-10);
    }
    let bad = proj(&ket(&[(0, cr(0.6)), (1, cr(0.8))], 4));
    assert!(fermionic_concurrence(&bad, TOL).is_err());
}

#[test]
fn fermionic_eof_examples() {
    let r = fermionic_eof_lower(&phi_mixed(), TOL).unwrap();
    assert!((r.lower_bound - 1.0).abs() < TOL);
    assert!(r.equals_operational);
    let prod = diag(&[cr(0.0), cr(0.0), cr(1.0), cr(0.0)]);
    let r = fermionic_eof_lower(&prod, TOL).unwrap();
    assert!(r.lower_bound.abs() < TOL && !r.equals_operational);
    for k in 1..10 {
        let t = 0.15 * k as f64;
        let rho = proj(&mes0_state(t));
        let reduced = partial_trace(&rho, &[1], 2).unwrap();
        let want = binary_entropy(t.cos().powi(2));
        assert!((von_neumann_entropy(&reduced) - want).abs() < 1e-10);
        assert!((fermionic_eof_lower(&rho, TOL).unwrap().lower_bound - want).abs() < 1e-10);
    }
}

#[test]
fn separability_examples() {
    let mixture = diag(&[cr(0.1), cr(0.2), cr(0.3), cr(0.4)]);
    assert!(full_separability_test(&mixture, 2, TOL).unwrap().separable);
    let w = full_separability_test(&phi_mixed(), 2, TOL).unwrap();
    assert!(!w.separable);
    assert!((w.max_off_diagonal - 0.25).abs() < 1e-15);
    let pair = (w.row.clone().unwrap(), w.col.clone().unwrap());
    assert!(matches!((pair.0.as_str(), pair.1.as_str()), ("00", "11") | ("11", "00") | ("01", "10") | ("10", "01")));
    assert!((phi_mixed()[(0, 3)] - cr(0.25)).norm() < 1e-15);
    assert!((pauli_correlator(&phi_mixed(), "XX").unwrap() - 1.0).abs() < 1e-15);
    assert!(!full_separability_test(&proj(&mes0_state(0.4)), 2, TOL).unwrap().separable);
    let three = kron(&mixture, &diag(&[cr(0.5), cr(0.5)]));
    assert!(full_separability_test(&three, 3, TOL).unwrap().separable);
}

#[test]
fn sector_separability_examples() {
    assert!(bipartite_sector_separability(&diag(&[cr(0.25); 4]), TOL).unwrap().separable);
    assert!(!bipartite_sector_separability(&phi_mixed(), TOL).unwrap().separable);
    let classical = diag(&[cr(0.5), cr(0.0), cr(0.0), cr(0.5)]);
    assert!(bipartite_sector_separability(&classical, TOL).unwrap().separable);
}

#[test]
fn mes_examples() {
    assert_eq!(mes_membership(&bell0(), TOL).unwrap(), MesClass::Mes0);
    assert_eq!(mes_membership(&ket(&[(1, cr(1.0))], 4), TOL).unwrap(), MesClass::Neither);
    assert_eq!(mes_membership(&ket(&[(1, cr(0.6)), (2, cr(0.8))], 4), TOL).unwrap(), MesClass::Mes1);
    // local phases keep the class
    assert_eq!(mes_membership(&ket(&[(0, cr(0.6)), (3, c(0.0, 0.8))], 4), TOL).unwrap(), MesClass::Mes0);
    assert!(mes_membership(&ket(&[(0, cr(0.6)), (1, cr(0.8))], 4), TOL).is_err());
    assert!(mes_membership_density(&phi_mixed(), TOL).is_err());
    assert_eq!(mes_membership_density(&proj(&bell0()), TOL).unwrap(), MesClass::Mes0);
}

#[test]
fn monogamy_examples() {
    let r = monogamy_witness(&phi_prime(), TOL).unwrap();
    assert!((r.c_ab - 1.0).abs() < TOL && (r.c_ac - 1.0).abs() < TOL);
    assert!((r.sum_of_squares - 2.0).abs() < TOL && r.violated);

    let r = monogamy_witness(&ket(&[(0, cr(1.0))], 8), TOL).unwrap();
    assert_eq!((r.c_ab, r.c_ac, r.sum_of_squares), (0.0, 0.0, 0.0));

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = monogamy_witness(&ket(&[(0b000, cr(s)), (0b110, cr(s))], 8), TOL).unwrap();
    assert!((r.c_ab - 1.0).abs() < TOL && r.c_ac.abs() < TOL);
    assert!((r.sum_of_squares - 1.0).abs() < TOL && !r.violated);
}

#[test]
fn ckw_holds_for_qubits() {
    let mut rng = random::rng(4);
    for _ in 0..200 {
        let psi = random::pure_state(&mut rng, 8);
        let r = qubit_monogamy(&psi, TOL).unwrap();
        assert!(r.sum_of_squares <= 1.0 + 1e-9, "{r:?}");
    }
    // the qubit reading of the same vector respects the bound
    let r = qubit_monogamy(&phi_prime(), TOL).unwrap();
    assert!(!r.violated);
}

#[test]
fn eof_bound_on_random_states() {
    let mut rng = random::rng(500);
    for _ in 0..500 {
        let rho = random::fqt_state(&mut rng, 2);
        let cf = fermionic_concurrence(&rho, TOL).unwrap().value;
        let ef = fermionic_eof_lower(&rho, TOL).unwrap().lower_bound;
        assert!((0.0..=1.0 + 1e-12).contains(&cf));
        assert!(ef >= eof_from_concurrence(cf) - 1e-12);
        assert!((cf - fermionic_concurrence_oracle(&rho)).abs() < 1e-8);
        assert!((ef - fermionic_eof_oracle(&rho)).abs() < 1e-8);
    }
}

#[test]
fn zero_concurrence_iff_sector_separable() {
    let mut rng = random::rng(66);
    let mut seen = [0usize; 2];
    for k in 0..200 {
        let mut rho = random::fqt_state(&mut rng, 2);
        if k % 2 == 0 {
            // drop the sector coherences for half of the samples
            for (a, b) in [(0, 3), (3, 0), (1, 2), (2, 1)] {
                rho[(a, b)] = cr(0.0);
            }
        }
        let cf = fermionic_concurrence(&rho, TOL).unwrap().value;
        let sep = bipartite_sector_separability(&rho, TOL).unwrap().separable;
        assert_eq!(cf < 1e-9, sep, "cf {cf}");
        seen[sep as usize] += 1;
    }
    assert!(seen[0] > 0 && seen[1] > 0);
}

#[test]
fn concurrence_invariant_under_local_operations() {
    let mut rng = random::rng(21);
    let flip1 = kron(&pauli::x(), &pauli::i2());
    let flip2 = kron(&pauli::z(), &pauli::x());
    for _ in 0..50 {
        let rho = random::fqt_state(&mut rng, 2);
        let base = fermionic_concurrence(&rho, TOL).unwrap().value;
        let t = random::uniform(&mut rng) * 6.0;
        for u in [local_phase(1, t), local_phase(2, -t), flip1.clone(), flip2.clone()] {
            let moved = &u * &rho * u.adjoint();
            assert!((fermionic_concurrence(&moved, TOL).unwrap().value - base).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pure_sector_states_eof_matches_formula(seed in any::<u64>(), parity in 0u8..2) {
        let mut rng = random::rng(seed);
        let psi = random::fqt_pure_state(&mut rng, 2, parity);
        let rho = proj(&psi);
        let cf = fermionic_concurrence(&rho, TOL).unwrap().value;
        prop_assert!((cf - pure_concurrence(&psi)).abs() < 1e-9);
        let ef = fermionic_eof_lower(&rho, TOL).unwrap().lower_bound;
        prop_assert!((ef - eof_from_concurrence(cf)).abs() < 1e-9);
        let reduced = partial_trace(&rho, &[1], 2).unwrap();
        prop_assert!((ef - von_neumann_entropy(&reduced)).abs() < 1e-9);
    }

    #[test]
    fn sampled_decompositions_bound_concurrence(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let rho = random::density(&mut rng, 4, 2);
        let cval = wootters_concurrence(&rho, TOL).unwrap();
        prop_assert!(sampled_decomposition_concurrence(&rho, 3, &mut rng) >= cval - 1e-9);
        prop_assert!(max_abs_diff(&spin_flip(&spin_flip(&rho)), &rho) < 1e-12);
    }
}
