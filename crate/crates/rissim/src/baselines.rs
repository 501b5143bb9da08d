//! Comparison scheduling schemes: greedy-by-lowest-average, uniform random,
//! and random phase-shift selection.
//!
//! All baselines go through the same environment step path as the learned
//! policy, so the channel-count, presence and quantization constraints are
//! enforced identically. Since every catalog action carries exactly C set
//! bits, schedules covering fewer vehicles are padded with empty positions,
//! which the environment treats as wasted channels.

use crate::beamforming::{BeamformingError, PhaseShiftMatrix};
use crate::env::PresentVehicle;
use rand::Rng;
use std::str::FromStr;

/// The four schemes compared by the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// Learned scheduling + coordinate-descent phases.
    ProposedDrlBcd,
    /// Lowest running average first + coordinate-descent phases.
    GreedyBcd,
    /// Uniform random schedule + coordinate-descent phases.
    RandomBcd,
    /// Learned scheduling + random phases.
    DrlRandomPhase,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::ProposedDrlBcd,
        PolicyKind::GreedyBcd,
        PolicyKind::RandomBcd,
        PolicyKind::DrlRandomPhase,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::ProposedDrlBcd => "proposed",
            PolicyKind::GreedyBcd => "gs-bcd",
            PolicyKind::RandomBcd => "rs-bcd",
            PolicyKind::DrlRandomPhase => "drl-rps",
        }
    }

    /// Whether the scheme needs trained policy parameters.
    pub fn needs_training(&self) -> bool {
        matches!(self, PolicyKind::ProposedDrlBcd | PolicyKind::DrlRandomPhase)
    }

    /// Whether the RIS phases are optimized (vs drawn at random).
    pub fn uses_bcd(&self) -> bool {
        !matches!(self, PolicyKind::DrlRandomPhase)
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proposed" => Ok(PolicyKind::ProposedDrlBcd),
            "gs-bcd" => Ok(PolicyKind::GreedyBcd),
            "rs-bcd" => Ok(PolicyKind::RandomBcd),
            "drl-rps" => Ok(PolicyKind::DrlRandomPhase),
            other => Err(format!(
                "unknown policy '{other}', expected proposed|gs-bcd|rs-bcd|drl-rps"
            )),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Pads a set of selected positions up to exactly `c` bits using the
/// lowest-index unselected positions, preferring empty ones so the padding
/// stays a no-op.
fn pad_to_exactly_c(selected: &mut Vec<usize>, occupied: &[bool], eta: usize, c: usize) {
    let mut chosen = vec![false; eta];
    for &p in selected.iter() {
        chosen[p] = true;
    }
    // Empty positions first; in the impossible case that everything is both
    // occupied and unselected, fall back to any free index.
    for pos in 0..eta {
        if selected.len() >= c {
            break;
        }
        if !chosen[pos] && !occupied[pos] {
            chosen[pos] = true;
            selected.push(pos);
        }
    }
    for pos in 0..eta {
        if selected.len() >= c {
            break;
        }
        if !chosen[pos] {
            chosen[pos] = true;
            selected.push(pos);
        }
    }
}

fn positions_to_vector(positions: &[usize], eta: usize) -> Vec<bool> {
    let mut v = vec![false; eta];
    for &p in positions {
        v[p] = true;
    }
    v
}

/// Greedy schedule: the min(C, present) vehicles with the smallest running
/// averages, ties broken by earliest arrival then id. Returns a binary
/// eta-vector with exactly C ones.
pub fn greedy_schedule(present: &[PresentVehicle], eta: usize, c: usize) -> Vec<bool> {
    let mut ranked: Vec<&PresentVehicle> = present.iter().collect();
    ranked.sort_by(|a, b| {
        a.z_running
            .partial_cmp(&b.z_running)
            .expect("rates are finite")
            .then(a.arrival_slot.cmp(&b.arrival_slot))
            .then(a.id.cmp(&b.id))
    });
    let mut selected: Vec<usize> = ranked.iter().take(c).map(|v| v.position).collect();
    let mut occupied = vec![false; eta];
    for v in present {
        occupied[v.position] = true;
    }
    pad_to_exactly_c(&mut selected, &occupied, eta, c);
    positions_to_vector(&selected, eta)
}

/// Uniform random schedule over the present vehicles: a uniform C-subset
/// when more than C are present, everyone otherwise. Returns a binary
/// eta-vector with exactly C ones.
pub fn random_schedule<R: Rng>(
    present: &[PresentVehicle],
    eta: usize,
    c: usize,
    rng: &mut R,
) -> Vec<bool> {
    let mut pool: Vec<usize> = present.iter().map(|v| v.position).collect();
    let take = pool.len().min(c);
    // Partial Fisher-Yates: the first `take` entries are a uniform subset.
    for i in 0..take {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    let mut selected: Vec<usize> = pool[..take].to_vec();
    let mut occupied = vec![false; eta];
    for v in present {
        occupied[v.position] = true;
    }
    pad_to_exactly_c(&mut selected, &occupied, eta, c);
    positions_to_vector(&selected, eta)
}

/// Independent uniform phase indices in [0, Q).
pub fn random_phases<R: Rng>(
    m_elems: usize,
    q_levels: usize,
    rng: &mut R,
) -> Result<PhaseShiftMatrix, BeamformingError> {
    let indices = (0..m_elems)
        .map(|_| rng.random_range(0..q_levels))
        .collect();
    PhaseShiftMatrix::new(indices, q_levels)
}
