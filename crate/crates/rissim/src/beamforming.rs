//! Discrete phase-shift selection for the RIS.
//!
//! Per time slot the surface maximizes the immediate sum rate of the
//! scheduled vehicles over the Q^M grid of quantized phase vectors. The
//! workhorse is block coordinate descent: elements are swept in index order
//! and each one is set to the best of its Q values with all others fixed.
//! Per-vehicle partial sums are cached so a candidate evaluation touches a
//! single exponential term, keeping a sweep at O(M * Q * |schedule|).
//! An exhaustive search over the full grid serves as the validation oracle
//! on small instances.

use crate::channel::{self, CascadedChannel, ChannelError, RfConfig};
use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BeamformingError {
    #[error("q_levels must be a power of two >= 1, got {0}")]
    InvalidQuantization(usize),
    #[error("phase index {index} out of range for {q_levels} levels")]
    IndexOutOfRange { index: usize, q_levels: usize },
    #[error("channel count mismatch: expected {expected} elements, got {got}")]
    ElementMismatch { expected: usize, got: usize },
    #[error("exhaustive search space of {bits} bits exceeds the {limit}-bit guard")]
    SearchSpaceTooLarge { bits: u32, limit: u32 },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// M discrete phase indices, each selecting one of Q = 2^b grid angles
/// {0, 2*pi/Q, ..., 2*pi*(Q-1)/Q}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseShiftMatrix {
    indices: Vec<usize>,
    q_levels: usize,
}

impl PhaseShiftMatrix {
    pub fn new(indices: Vec<usize>, q_levels: usize) -> Result<Self, BeamformingError> {
        if !q_levels.is_power_of_two() {
            return Err(BeamformingError::InvalidQuantization(q_levels));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= q_levels) {
            return Err(BeamformingError::IndexOutOfRange {
                index: bad,
                q_levels,
            });
        }
        Ok(Self { indices, q_levels })
    }

    /// All-zero phases (index 0 everywhere).
    pub fn zeros(m_elems: usize, q_levels: usize) -> Result<Self, BeamformingError> {
        Self::new(vec![0; m_elems], q_levels)
    }

    /// Quantizes continuous phases (radians) to the nearest grid point with
    /// circular wraparound.
    pub fn from_continuous(phases: &[f64], q_levels: usize) -> Result<Self, BeamformingError> {
        if !q_levels.is_power_of_two() {
            return Err(BeamformingError::InvalidQuantization(q_levels));
        }
        let step = TAU / q_levels as f64;
        let indices = phases
            .iter()
            .map(|&p| {
                let wrapped = channel::wrap_to_tau(p);
                (wrapped / step).round() as usize % q_levels
            })
            .collect();
        Ok(Self { indices, q_levels })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn q_levels(&self) -> usize {
        self.q_levels
    }

    pub fn m_elems(&self) -> usize {
        self.indices.len()
    }

    /// Phase angles in radians.
    pub fn phases(&self) -> Vec<f64> {
        let step = TAU / self.q_levels as f64;
        self.indices.iter().map(|&i| i as f64 * step).collect()
    }
}

/// Stopping rule for the coordinate sweeps. The argmax tie-break is fixed at
/// the lowest phase index for determinism.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BcdConfig {
    /// Relative objective improvement between consecutive full sweeps below
    /// which the search stops.
    pub rel_tolerance: f64,
    /// Hard cap on full sweeps.
    pub max_sweeps: usize,
}

impl Default for BcdConfig {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-6,
            max_sweeps: 20,
        }
    }
}

/// Result of a coordinate-descent run.
#[derive(Debug, Clone)]
pub struct BcdOutcome {
    pub theta: PhaseShiftMatrix,
    /// Sum rate of the scheduled vehicles at the returned phases, bps/Hz.
    pub objective: f64,
    /// Full sweeps executed.
    pub sweeps: usize,
    /// Objective after each full sweep.
    pub sweep_objectives: Vec<f64>,
}

/// Immediate sum rate of the scheduled vehicles under `theta`, bps/Hz.
/// An empty schedule is defined as 0.
pub fn scheduled_sum_rate(
    theta: &PhaseShiftMatrix,
    channels: &[CascadedChannel],
    cfg: &RfConfig,
) -> Result<f64, BeamformingError> {
    let phases = theta.phases();
    let mut total = 0.0;
    for ch in channels {
        if ch.m_elems() != theta.m_elems() {
            return Err(BeamformingError::ElementMismatch {
                expected: theta.m_elems(),
                got: ch.m_elems(),
            });
        }
        let c = channel::cascaded_coefficient(ch, &phases)?;
        total += channel::spectral_efficiency(channel::snr(c, cfg));
    }
    Ok(total)
}

fn sum_rate_from_partials(partials: &[Complex64], cfg: &RfConfig) -> f64 {
    let scale = cfg.tx_power_w / cfg.noise_power_w;
    partials
        .iter()
        .map(|s| (1.0 + scale * s.norm_sqr()).log2())
        .sum()
}

/// Block coordinate descent over the discrete phase grid.
///
/// Elements are swept in index order; each update enumerates the Q
/// candidates for one element against cached per-vehicle partial sums and
/// keeps the best, breaking ties toward the lowest index. The objective is
/// non-decreasing across accepted updates because the current value is
/// always among the candidates.
pub fn bcd_optimize(
    channels: &[CascadedChannel],
    cfg: &RfConfig,
    m_elems: usize,
    q_levels: usize,
    bcd: &BcdConfig,
) -> Result<BcdOutcome, BeamformingError> {
    let theta = PhaseShiftMatrix::zeros(m_elems, q_levels)?;
    for ch in channels {
        if ch.m_elems() != m_elems {
            return Err(BeamformingError::ElementMismatch {
                expected: m_elems,
                got: ch.m_elems(),
            });
        }
    }
    if channels.is_empty() || m_elems == 0 {
        return Ok(BcdOutcome {
            theta,
            objective: 0.0,
            sweeps: 0,
            sweep_objectives: Vec::new(),
        });
    }

    let phasors: Vec<Complex64> = (0..q_levels)
        .map(|q| Complex64::from_polar(1.0, TAU * q as f64 / q_levels as f64))
        .collect();
    // base[v][m] = conj(h_iv[m]) * h_ir[m]
    let base: Vec<Vec<Complex64>> = channels.iter().map(|ch| ch.element_products()).collect();
    let n_veh = channels.len();
    let mut indices = vec![0usize; m_elems];

    let recompute_partials = |indices: &[usize]| -> Vec<Complex64> {
        (0..n_veh)
            .map(|v| {
                indices
                    .iter()
                    .enumerate()
                    .map(|(m, &q)| base[v][m] * phasors[q])
                    .sum()
            })
            .collect()
    };

    let mut partials = recompute_partials(&indices);
    let mut objective = sum_rate_from_partials(&partials, cfg);
    let mut sweep_objectives = Vec::new();
    let mut sweeps = 0;
    let mut candidate = vec![Complex64::new(0.0, 0.0); n_veh];

    for _ in 0..bcd.max_sweeps {
        let before = objective;
        for m in 0..m_elems {
            let cur = indices[m];
            let mut best_q = 0usize;
            let mut best_obj = f64::NEG_INFINITY;
            let mut best_partials: Option<Vec<Complex64>> = None;
            for (q, &phasor) in phasors.iter().enumerate() {
                let delta = phasor - phasors[cur];
                for v in 0..n_veh {
                    candidate[v] = partials[v] + base[v][m] * delta;
                }
                let obj = sum_rate_from_partials(&candidate, cfg);
                // Strictly-greater keeps the lowest index on ties.
                if obj > best_obj {
                    best_obj = obj;
                    best_q = q;
                    best_partials = Some(candidate.clone());
                }
            }
            debug_assert!(
                best_obj >= objective - 1e-9 * (1.0 + objective.abs()),
                "block update decreased the objective: {objective} -> {best_obj}"
            );
            indices[m] = best_q;
            partials = best_partials.expect("q_levels >= 1 guarantees a candidate");
            objective = best_obj;
        }
        // Fresh summation once per sweep to cancel incremental drift.
        partials = recompute_partials(&indices);
        objective = sum_rate_from_partials(&partials, cfg);
        sweeps += 1;
        sweep_objectives.push(objective);
        let improvement = objective - before;
        if improvement < bcd.rel_tolerance * before.abs().max(1e-12) {
            break;
        }
    }

    Ok(BcdOutcome {
        theta: PhaseShiftMatrix::new(indices, q_levels)?,
        objective,
        sweeps,
        sweep_objectives,
    })
}

/// Bit budget above which the exhaustive search refuses to run.
pub const EXHAUSTIVE_BIT_LIMIT: u32 = 20;

/// Global maximizer of the scheduled sum rate over all Q^M phase matrices,
/// ties broken toward the lexicographically smallest index vector. Guarded
/// to M * b <= 20 bits.
pub fn exhaustive_optimize(
    channels: &[CascadedChannel],
    cfg: &RfConfig,
    m_elems: usize,
    q_levels: usize,
) -> Result<(PhaseShiftMatrix, f64), BeamformingError> {
    if !q_levels.is_power_of_two() {
        return Err(BeamformingError::InvalidQuantization(q_levels));
    }
    let bits = m_elems as u32 * q_levels.trailing_zeros();
    if bits > EXHAUSTIVE_BIT_LIMIT {
        return Err(BeamformingError::SearchSpaceTooLarge {
            bits,
            limit: EXHAUSTIVE_BIT_LIMIT,
        });
    }
    for ch in channels {
        if ch.m_elems() != m_elems {
            return Err(BeamformingError::ElementMismatch {
                expected: m_elems,
                got: ch.m_elems(),
            });
        }
    }
    if channels.is_empty() || m_elems == 0 {
        return Ok((PhaseShiftMatrix::zeros(m_elems, q_levels)?, 0.0));
    }

    let phasors: Vec<Complex64> = (0..q_levels)
        .map(|q| Complex64::from_polar(1.0, TAU * q as f64 / q_levels as f64))
        .collect();
    let base: Vec<Vec<Complex64>> = channels.iter().map(|ch| ch.element_products()).collect();

    let mut indices = vec![0usize; m_elems];
    let mut best_indices = indices.clone();
    let mut best_obj = f64::NEG_INFINITY;
    loop {
        let partials: Vec<Complex64> = base
            .iter()
            .map(|row| {
                indices
                    .iter()
                    .enumerate()
                    .map(|(m, &q)| row[m] * phasors[q])
                    .sum()
            })
            .collect();
        let obj = sum_rate_from_partials(&partials, cfg);
        if obj > best_obj {
            best_obj = obj;
            best_indices.copy_from_slice(&indices);
        }
        // Odometer with the last element fastest: visits index vectors in
        // lexicographic order, so strictly-greater keeps the smallest winner.
        let mut pos = m_elems;
        loop {
            if pos == 0 {
                return Ok((PhaseShiftMatrix::new(best_indices, q_levels)?, best_obj));
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < q_levels {
                break;
            }
            indices[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{optimal_continuous_phases, Position3D};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(
        rng: &mut ChaCha8Rng,
        m: usize,
        n_veh: usize,
        cfg: &RfConfig,
    ) -> Vec<CascadedChannel> {
        let ris = Position3D::new(10.0, 20.0, 10.0);
        let rsu = Position3D::new(0.0, 40.0, 10.0);
        (0..n_veh)
            .map(|_| {
                let x: f64 = rng.random_range(0.0..100.0);
                CascadedChannel::new(cfg, ris, rsu, Position3D::new(x, 20.0, 1.0), m).unwrap()
            })
            .collect()
    }

    #[test]
    fn quantize_grid_and_wraparound() {
        let q = PhaseShiftMatrix::from_continuous(&[0.0], 4).unwrap();
        assert_eq!(q.indices(), &[0]);
        let q = PhaseShiftMatrix::from_continuous(&[std::f64::consts::PI], 4).unwrap();
        assert_eq!(q.indices(), &[2]);
        let q = PhaseShiftMatrix::from_continuous(&[TAU - 1e-9], 4).unwrap();
        assert_eq!(q.indices(), &[0]);
        // Q = 1 collapses everything onto index 0.
        let q = PhaseShiftMatrix::from_continuous(&[1.0, 4.0], 1).unwrap();
        assert_eq!(q.indices(), &[0, 0]);
        assert!(PhaseShiftMatrix::from_continuous(&[0.0], 3).is_err());
        assert!(PhaseShiftMatrix::new(vec![4], 4).is_err());
    }

    #[test]
    fn empty_schedule_sum_rate_is_zero() {
        let cfg = RfConfig::default();
        let theta = PhaseShiftMatrix::zeros(8, 4).unwrap();
        assert_eq!(scheduled_sum_rate(&theta, &[], &cfg).unwrap(), 0.0);
        let out = bcd_optimize(&[], &cfg, 8, 4, &BcdConfig::default()).unwrap();
        assert_eq!(out.objective, 0.0);
        assert_eq!(out.sweeps, 0);
        assert_eq!(out.theta.indices(), &[0; 8]);
    }

    #[test]
    fn two_identical_channels_double_the_rate() {
        let cfg = RfConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let chans = random_instance(&mut rng, 6, 1, &cfg);
        let both = vec![chans[0].clone(), chans[0].clone()];
        let theta = PhaseShiftMatrix::from_continuous(
            &optimal_continuous_phases(&chans[0], cfg.element_phase_factor),
            8,
        )
        .unwrap();
        let one = scheduled_sum_rate(&theta, &chans, &cfg).unwrap();
        let two = scheduled_sum_rate(&theta, &both, &cfg).unwrap();
        assert_relative_eq!(two, 2.0 * one, max_relative = 1e-12);
    }

    #[test]
    fn bcd_single_element_matches_exhaustive() {
        let cfg = RfConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let chans = random_instance(&mut rng, 1, 1, &cfg);
            let bcd = bcd_optimize(&chans, &cfg, 1, 2, &BcdConfig::default()).unwrap();
            let (theta, obj) = exhaustive_optimize(&chans, &cfg, 1, 2).unwrap();
            assert_eq!(bcd.theta.indices(), theta.indices());
            assert_relative_eq!(bcd.objective, obj, max_relative = 1e-12);
        }
    }

    #[test]
    fn bcd_with_fine_grid_nears_continuous_closed_form() {
        let cfg = RfConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let chans = random_instance(&mut rng, 12, 1, &cfg);
            let out = bcd_optimize(&chans, &cfg, 12, 64, &BcdConfig::default()).unwrap();
            let pf = chans[0].amplitude_prefactor(&cfg) * 12.0;
            let continuous =
                channel::spectral_efficiency(cfg.tx_power_w * pf * pf / cfg.noise_power_w);
            assert!(
                out.objective >= 0.99 * continuous,
                "bcd {} vs continuous {}",
                out.objective,
                continuous
            );
            assert!(out.objective <= continuous * (1.0 + 1e-9));
        }
    }

    #[test]
    fn bcd_close_to_exhaustive_on_small_instances() {
        let cfg = RfConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..30 {
            let n_veh = 1 + (i % 2);
            let chans = random_instance(&mut rng, 3, n_veh, &cfg);
            let out = bcd_optimize(&chans, &cfg, 3, 4, &BcdConfig::default()).unwrap();
            let (_, best) = exhaustive_optimize(&chans, &cfg, 3, 4).unwrap();
            assert!(
                out.objective >= 0.95 * best,
                "bcd {} below 95% of optimum {}",
                out.objective,
                best
            );
            assert!(out.objective <= best * (1.0 + 1e-9));
        }
    }

    #[test]
    fn exhaustive_never_below_single_vehicle_greedy() {
        // Two vehicles with conflicting alignments: the joint optimum is at
        // least as good as each vehicle's share under its own best phases.
        let cfg = RfConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let chans = random_instance(&mut rng, 2, 2, &cfg);
        let (_, joint) = exhaustive_optimize(&chans, &cfg, 2, 2).unwrap();
        for ch in &chans {
            let (_, solo) = exhaustive_optimize(std::slice::from_ref(ch), &cfg, 2, 2).unwrap();
            // The joint schedule still carries both vehicles.
            assert!(joint >= solo * (1.0 - 1e-12));
        }
    }

    #[test]
    fn exhaustive_guard_refuses_large_spaces() {
        let cfg = RfConfig::default();
        assert!(matches!(
            exhaustive_optimize(&[], &cfg, 11, 4),
            Err(BeamformingError::SearchSpaceTooLarge { bits: 22, limit: 20 })
        ));
    }

    #[test]
    fn bcd_deterministic_and_feasible() {
        let cfg = RfConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let chans = random_instance(&mut rng, 16, 3, &cfg);
        let a = bcd_optimize(&chans, &cfg, 16, 8, &BcdConfig::default()).unwrap();
        let b = bcd_optimize(&chans, &cfg, 16, 8, &BcdConfig::default()).unwrap();
        assert_eq!(a.theta.indices(), b.theta.indices());
        assert_eq!(a.objective, b.objective);
        assert!(a.theta.indices().iter().all(|&i| i < 8));
        // Sweep objectives are non-decreasing.
        for w in a.sweep_objectives.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
    }

    #[test]
    fn single_user_quantization_bound() {
        // Quantizing the aligned phases keeps each element within pi/Q, so
        // the magnitude retains at least cos(pi/Q) of the continuous optimum
        // and BCD can only do better.
        let cfg = RfConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &q in &[2usize, 4, 8] {
            let chans = random_instance(&mut rng, 10, 1, &cfg);
            let out = bcd_optimize(&chans, &cfg, 10, q, &BcdConfig::default()).unwrap();
            let pf = chans[0].amplitude_prefactor(&cfg) * 10.0;
            let cos = (std::f64::consts::PI / q as f64).cos();
            let floor = channel::spectral_efficiency(
                cfg.tx_power_w * (cos * pf).powi(2) / cfg.noise_power_w,
            );
            assert!(
                out.objective >= floor * (1.0 - 1e-12),
                "objective {} below quantization floor {}",
                out.objective,
                floor
            );
        }
    }
}
