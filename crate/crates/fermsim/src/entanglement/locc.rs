//! Translation of fermionic LOCC protocols into qubit LOCC protocols.
//!
//! Parties own contiguous blocks of modes, listed in mode order. A local odd
//! Kraus operator of a party carries a `Z` string over every mode of the
//! parties before it, so each round is refined into an even/odd test whose
//! one-bit outcome tells those parties whether to apply the `Z` correction.

use serde::{Deserialize, Serialize};

use crate::channels::KrausMap;
use crate::error::{FermError, Result};
use crate::linalg::{cr, eye, kron, kron_all, max_abs_diff, pauli, qubit_partial_trace, CMat};
use crate::superselection::pinch;

/// Contiguous mode blocks, one per party, in mode order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    sizes: Vec<usize>,
}

impl Partition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(FermError::InvalidPartition(format!("{sizes:?}")));
        }
        crate::fock::check_n(sizes.iter().sum())?;
        Ok(Self { sizes })
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn parties(&self) -> usize {
        self.sizes.len()
    }

    /// Number of modes before the party's block.
    pub fn offset(&self, party: usize) -> usize {
        self.sizes[..party].iter().sum()
    }

    /// 1-based modes of the party.
    pub fn modes(&self, party: usize) -> Vec<usize> {
        let o = self.offset(party);
        (o + 1..=o + self.sizes[party]).collect()
    }

    pub fn size(&self, party: usize) -> usize {
        self.sizes[party]
    }
}

/// One round: `instrument[k]` is applied when the previous round's outcome was
/// `k`; a single entry is applied unconditionally. Outcomes are Kraus indices.
#[derive(Debug, Clone)]
pub struct LoccRound {
    pub party: usize,
    pub instrument: Vec<KrausMap>,
}

#[derive(Debug, Clone)]
pub struct QubitKraus {
    pub outcome: usize,
    pub parity: u8,
    /// Operator on the party's own wires.
    pub local: CMat,
    /// 1-based wires receiving a `Z` correction.
    pub correction: Vec<usize>,
    /// Full operator `Z..Z x local x I..I` (or `I x local x I` for even outcomes).
    pub full: CMat,
}

#[derive(Debug, Clone)]
pub struct QubitRound {
    pub party: usize,
    /// Branch `k` holds the refined Kraus operators of `instrument[k]`.
    pub branches: Vec<Vec<QubitKraus>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTranscript {
    pub party: usize,
    pub even_outcomes: usize,
    pub odd_outcomes: usize,
    pub parity_bits_sent: usize,
    pub correction_modes: Vec<usize>,
    pub recipients: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoccTranscript {
    pub rounds: Vec<RoundTranscript>,
    pub total_parity_bits: usize,
    /// Parity bits needed to inform every other party in one round chain.
    pub chain_parity_bits: usize,
    pub channel_residual: f64,
}

fn split_local(k: &CMat, partition: &Partition, party: usize, tol: f64) -> Result<[(u8, CMat); 2]> {
    let n = partition.n();
    let before = partition.offset(party);
    let m = partition.size(party);
    let after = n - before - m;
    let block_parity =
        kron_all([eye(1 << before), kron_all(std::iter::repeat_n(&pauli::z(), m)), eye(1 << after)].iter());
    let conj = &block_parity * k * &block_parity;
    let even = (k + &conj) * cr(0.5);
    let odd = (k - &conj) * cr(0.5);
    let zb = kron_all([kron_all(std::iter::repeat_n(&pauli::z(), before)), eye(1 << (m + after))].iter());
    let odd_stripped = &zb * &odd;
    let wires: Vec<usize> = (before..before + m).collect();
    let rest = (1usize << (n - m)) as f64;
    let mut out = [(0u8, CMat::zeros(1, 1)), (1u8, CMat::zeros(1, 1))];
    for (slot, part) in [even, odd_stripped].into_iter().enumerate() {
        let local = qubit_partial_trace(&part, n, &wires) / cr(rest);
        let rebuilt = kron_all([eye(1 << before), local.clone(), eye(1 << after)].iter());
        let r = max_abs_diff(&rebuilt, &part);
        if r > tol {
            return Err(FermError::NonLocal(format!(
                "Kraus operator of party {party} leaves its field subalgebra (residual {r:e})"
            )));
        }
        out[slot].1 = local;
    }
    Ok(out)
}

fn run_branches(
    rho: &CMat,
    rounds: usize,
    ops_for: impl Fn(usize, usize) -> Vec<(usize, Vec<CMat>)>,
    pinch_each: Option<usize>,
) -> CMat {
    let mut branches: Vec<(usize, CMat)> = vec![(0, rho.clone())];
    for r in 0..rounds {
        let mut next = Vec::new();
        for (prev, sigma) in &branches {
            for (outcome, ops) in ops_for(r, *prev) {
                let mut out = CMat::zeros(sigma.nrows(), sigma.ncols());
                for k in &ops {
                    out += k * sigma * k.adjoint();
                }
                if let Some(n) = pinch_each {
                    out = pinch(&out, n);
                }
                next.push((outcome, out));
            }
        }
        branches = next;
    }
    branches.into_iter().fold(CMat::zeros(rho.nrows(), rho.ncols()), |acc, (_, s)| acc + s)
}

fn pick<T>(v: &[T], prev: usize) -> Result<&T> {
    if v.len() == 1 {
        Ok(&v[0])
    } else {
        v.get(prev).ok_or_else(|| FermError::InvalidKraus(format!("no branch for outcome {prev}")))
    }
}

/// Refines every round into even/odd tests and checks the composed qubit
/// protocol against the composed fermionic one on a spanning set of valid states.
pub fn locc_translate(
    protocol: &[LoccRound],
    partition: &Partition,
    tol: f64,
) -> Result<(LoccTranscript, Vec<QubitRound>)> {
    let n = partition.n();
    for (r, round) in protocol.iter().enumerate().skip(1) {
        let prev_outcomes = protocol[r - 1].instrument.iter().map(|m| m.kraus.len()).max().unwrap_or(0);
        if round.instrument.len() > 1 && round.instrument.len() < prev_outcomes {
            return Err(FermError::InvalidKraus(format!("round {r} lacks branches for all outcomes")));
        }
    }
    let mut qrounds = Vec::new();
    let mut transcript = Vec::new();
    for round in protocol {
        if round.party >= partition.parties() {
            return Err(FermError::InvalidPartition(format!("party {} does not exist", round.party)));
        }
        if round.instrument.is_empty() {
            return Err(FermError::InvalidKraus("round without an instrument".into()));
        }
        let before = partition.offset(round.party);
        let after = n - before - partition.size(round.party);
        let correction: Vec<usize> = (1..=before).collect();
        let (mut ev, mut od) = (0, 0);
        let mut branches = Vec::new();
        for map in &round.instrument {
            if map.n_in != n || map.n_out != n {
                return Err(FermError::DimensionMismatch { expected: n, got: map.n_in });
            }
            if map.kraus.iter().any(|k| k.sign != 1) {
                return Err(FermError::InvalidKraus("LOCC rounds need positive signs".into()));
            }
            let mut refined = Vec::new();
            for (outcome, k) in map.kraus.iter().enumerate() {
                for (parity, local) in split_local(&k.op, partition, round.party, tol)? {
                    if crate::linalg::max_abs(&local) <= crate::channels::CANONICAL_DROP {
                        continue;
                    }
                    let left =
                        if parity == 0 { eye(1 << before) } else { kron_all(std::iter::repeat_n(&pauli::z(), before)) };
                    let full = kron(&kron(&left, &local), &eye(1 << after));
                    if parity == 0 {
                        ev += 1;
                    } else {
                        od += 1;
                    }
                    refined.push(QubitKraus {
                        outcome,
                        parity,
                        local,
                        correction: if parity == 1 { correction.clone() } else { vec![] },
                        full,
                    });
                }
            }
            branches.push(refined);
        }
        transcript.push(RoundTranscript {
            party: round.party,
            even_outcomes: ev,
            odd_outcomes: od,
            parity_bits_sent: 1,
            correction_modes: if od > 0 { correction.clone() } else { vec![] },
            recipients: (0..round.party).collect(),
        });
        qrounds.push(QubitRound { party: round.party, branches });
    }

    let mut residual = 0.0f64;
    for basis in crate::channels::sector_basis(n) {
        let fermionic = run_branches(
            &basis,
            protocol.len(),
            |r, prev| {
                let map = pick(&protocol[r].instrument, prev).expect("branching validated on entry");
                map.kraus.iter().enumerate().map(|(j, k)| (j, vec![k.op.clone()])).collect()
            },
            Some(n),
        );
        let qubit = run_branches(
            &basis,
            qrounds.len(),
            |r, prev| {
                let branch = pick(&qrounds[r].branches, prev).expect("branching validated on entry");
                let outcomes = branch.iter().map(|q| q.outcome).max().map_or(0, |m| m + 1);
                (0..outcomes)
                    .map(|o| (o, branch.iter().filter(|q| q.outcome == o).map(|q| q.full.clone()).collect()))
                    .collect()
            },
            None,
        );
        residual = residual.max(max_abs_diff(&fermionic, &qubit));
    }
    let rounds = transcript.len();
    Ok((
        LoccTranscript {
            rounds: transcript,
            total_parity_bits: rounds,
            chain_parity_bits: partition.parties().saturating_sub(1),
            channel_residual: residual,
        },
        qrounds,
    ))
}
