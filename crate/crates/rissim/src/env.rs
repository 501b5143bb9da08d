//! The scheduling MDP.
//!
//! Each slot the agent picks one binary vector from the catalog of
//! eta-choose-C subsets; set bits on occupied positions become the served
//! set (bits on empty padding positions waste the channel), the RIS phases
//! are tuned for the served set, rates accrue, traffic advances, and the
//! three-case departure reward is emitted. Position slots are stable for a
//! vehicle's whole residence and are reassigned lowest-free on arrival, so
//! the state vector has a fixed width of 1 + 3*eta.

use crate::baselines;
use crate::beamforming::{self, BcdConfig, BeamformingError, PhaseShiftMatrix};
use crate::channel::{self, ChannelError, Position3D, RfConfig};
use crate::mobility::{MobilityEngine, MobilityError, TraceRow, TrafficConfig, Vehicle};
use crate::parallel::derive_seed;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("action index {index} out of range for catalog of {catalog} actions")]
    InvalidAction { index: usize, catalog: usize },
    #[error("episode horizon already reached")]
    EpisodeFinished,
    #[error("more vehicles than state positions: {0}")]
    TooManyVehicles(String),
    #[error("invalid environment configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Beamforming(#[from] BeamformingError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
}

/// Sign convention for the undercut-departure reward. The update rule sets
/// f to the new minimum either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PenaltyMode {
    /// r = -(f - z_v) <= 0 when a departure undercuts the minimum.
    Negated,
    /// r = f - z_v >= 0, the literal rule.
    Literal,
}

/// How the phase-shift matrix is produced each slot.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseControl {
    /// Coordinate descent on the scheduled vehicles' channels.
    Bcd(BcdConfig),
    /// Uniform random indices each slot (no optimization).
    Random,
}

/// All parameters one environment instance needs.
#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub rf: RfConfig,
    /// RIS element count M.
    pub ris_elements: usize,
    /// Phase quantization levels Q = 2^b.
    pub q_levels: usize,
    /// RSU channel count C.
    pub channels: usize,
    /// State width cap on concurrent vehicles.
    pub eta: usize,
    /// Episode length in slots.
    pub horizon: usize,
    pub penalty_mode: PenaltyMode,
    pub phase_control: PhaseControl,
    pub rsu: Position3D,
    pub ris: Position3D,
    pub traffic: TrafficConfig,
    /// Arrival trace replacing the Poisson source when present.
    pub trace: Option<Vec<TraceRow>>,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let mut problems = Vec::new();
        if let Err(e) = self.rf.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.traffic.validate() {
            problems.push(e.to_string());
        }
        if self.ris_elements == 0 {
            problems.push("ris_elements must be >= 1".into());
        }
        if !self.q_levels.is_power_of_two() {
            problems.push("q_levels must be a power of two".into());
        }
        if self.channels == 0 {
            problems.push("channels must be >= 1".into());
        }
        if self.eta < self.channels {
            problems.push("eta must be >= channels".into());
        }
        if self.eta > 24 {
            problems.push("eta must be <= 24".into());
        }
        if self.horizon == 0 {
            problems.push("horizon must be >= 1".into());
        }
        if self.traffic.max_concurrent != self.eta {
            problems.push("traffic.max_concurrent must equal eta".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(EnvError::InvalidConfig(problems.join("; ")))
        }
    }
}

/// All binary eta-vectors with exactly C ones, in ascending lexicographic
/// order (element 0 most significant). The catalog size is eta-choose-C.
#[derive(Debug, Clone)]
pub struct ActionCatalog {
    masks: Vec<u64>,
    index_of: HashMap<u64, usize>,
    eta: usize,
    c: usize,
}

impl ActionCatalog {
    pub fn enumerate(eta: usize, c: usize) -> Result<Self, EnvError> {
        if c == 0 || c > eta {
            return Err(EnvError::InvalidConfig(format!(
                "need 1 <= C <= eta, got C={c}, eta={eta}"
            )));
        }
        if eta > 24 {
            return Err(EnvError::InvalidConfig("eta must be <= 24".into()));
        }
        let mut masks = Vec::new();
        for raw in 0u64..(1u64 << eta) {
            if raw.count_ones() as usize == c {
                masks.push(raw);
            }
        }
        let index_of = masks
            .iter()
            .enumerate()
            .map(|(i, &m)| (m, i))
            .collect();
        Ok(Self {
            masks,
            index_of,
            eta,
            c,
        })
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    /// Position indices selected by action `index`.
    pub fn positions(&self, index: usize) -> Vec<usize> {
        let mask = self.masks[index];
        (0..self.eta)
            .filter(|&i| mask >> (self.eta - 1 - i) & 1 == 1)
            .collect()
    }

    /// The action as a binary vector.
    pub fn vector(&self, index: usize) -> Vec<bool> {
        let mask = self.masks[index];
        (0..self.eta)
            .map(|i| mask >> (self.eta - 1 - i) & 1 == 1)
            .collect()
    }

    /// Looks up the index of a binary vector with exactly C ones.
    pub fn index_of_vector(&self, vector: &[bool]) -> Option<usize> {
        if vector.len() != self.eta {
            return None;
        }
        let mut mask = 0u64;
        for (i, &bit) in vector.iter().enumerate() {
            if bit {
                mask |= 1 << (self.eta - 1 - i);
            }
        }
        self.index_of.get(&mask).copied()
    }
}

/// A vehicle that departed during the step, with its final average rate.
#[derive(Debug, Clone)]
pub struct Departure {
    pub vehicle_id: u64,
    pub z_final: f64,
    pub residence: usize,
}

/// Everything one transition produces.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub slot: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// (vehicle id, instantaneous rate) for every vehicle present during the
    /// slot; unscheduled vehicles carry 0.
    pub rates: Vec<(u64, f64)>,
    /// Vehicles actually served (selected occupied positions).
    pub served: Vec<u64>,
    pub departures: Vec<Departure>,
    pub theta: PhaseShiftMatrix,
}

/// One row of the episode log CSV.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EpisodeLogRow {
    pub slot: usize,
    pub vehicle_id: u64,
    pub x: f64,
    pub speed: f64,
    pub scheduled_flag: u8,
    pub rate_bpshz: f64,
    pub z_running: f64,
    pub reward: f64,
    pub f: f64,
}

/// Writes episode log rows with the fixed header
/// `slot,vehicle_id,x,speed,scheduled_flag,rate_bpshz,z_running,reward,f`.
pub fn write_episode_log<W: std::io::Write>(
    writer: W,
    rows: &[EpisodeLogRow],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Applies the three-case departure reward to `departures` (processed in
/// vehicle-id order, rewards summed) and returns
/// (step reward, new minimum, minimum-initialized flag).
pub fn step_reward(
    departures: &[(u64, f64)],
    f_before: f64,
    first_seen: bool,
    mode: PenaltyMode,
) -> (f64, f64, bool) {
    let mut order: Vec<&(u64, f64)> = departures.iter().collect();
    order.sort_by_key(|(id, _)| *id);
    let mut reward = 0.0;
    let mut f = f_before;
    let mut seen = first_seen;
    for &&(_, z) in &order {
        if !seen {
            reward += z;
            f = z;
            seen = true;
        } else if z < f {
            reward += match mode {
                PenaltyMode::Negated => -(f - z),
                PenaltyMode::Literal => f - z,
            };
            f = z;
        }
        // z >= f contributes nothing and leaves the minimum unchanged.
    }
    (reward, f, seen)
}

/// Discounted return sum_n gamma^(n-1) * r_n.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    let mut acc = 0.0;
    let mut weight = 1.0;
    for &r in rewards {
        acc += weight * r;
        weight *= gamma;
    }
    acc
}

/// Packs (f, then per position: speed, running average, x) with zero padding
/// for empty positions. Length is 1 + 3*eta; all features in SI/linear units.
pub fn encode_state(f: f64, slots: &[Option<&Vehicle>]) -> Vec<f64> {
    let mut state = Vec::with_capacity(1 + 3 * slots.len());
    state.push(f);
    for slot in slots {
        match slot {
            Some(v) => {
                state.push(v.current_speed);
                state.push(v.z_running());
                state.push(v.x);
            }
            None => {
                state.push(0.0);
                state.push(0.0);
                state.push(0.0);
            }
        }
    }
    state
}

/// Summary of one occupied position, for schedulers that need the roster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresentVehicle {
    pub position: usize,
    pub id: u64,
    pub x: f64,
    pub speed: f64,
    pub z_running: f64,
    pub arrival_slot: usize,
}

/// Minimal surface the PPO loop needs from an environment.
pub trait Environment {
    fn observe(&self) -> Vec<f64>;
    fn num_actions(&self) -> usize;
    fn step_action(&mut self, action: usize) -> Result<(f64, bool), EnvError>;
    fn is_done(&self) -> bool;
    /// Episode quality metric once finished, if the environment defines one.
    fn metric_min_avg_bitrate(&self) -> Option<f64>;
}

/// The RIS-assisted RSU scheduling environment.
#[derive(Debug, Clone)]
pub struct RisEnv {
    cfg: EnvConfig,
    catalog: ActionCatalog,
    mobility: MobilityEngine,
    /// Stable position assignment: index -> vehicle id.
    slot_positions: Vec<Option<u64>>,
    f_min: f64,
    first_departure_seen: bool,
    slot: usize,
    rng: ChaCha8Rng,
    logging: bool,
    log: Vec<EpisodeLogRow>,
}

impl RisEnv {
    pub fn new(cfg: EnvConfig, seed: u64) -> Result<Self, EnvError> {
        cfg.validate()?;
        let catalog = ActionCatalog::enumerate(cfg.eta, cfg.channels)?;
        let mobility_seed = derive_seed(seed, 1, 0);
        let phase_seed = derive_seed(seed, 2, 0);
        let mobility = match &cfg.trace {
            Some(rows) => {
                MobilityEngine::with_trace(cfg.traffic.clone(), rows.clone(), mobility_seed)?
            }
            None => MobilityEngine::new(cfg.traffic.clone(), mobility_seed)?,
        };
        let slot_positions = vec![None; cfg.eta];
        let mut env = Self {
            cfg,
            catalog,
            mobility,
            slot_positions,
            f_min: 0.0,
            first_departure_seen: false,
            slot: 0,
            rng: ChaCha8Rng::seed_from_u64(phase_seed),
            logging: false,
            log: Vec::new(),
        };
        let admitted = env.mobility.spawn_arrivals();
        env.assign_positions(&admitted)?;
        Ok(env)
    }

    /// Enables collection of per-slot log rows.
    pub fn enable_logging(&mut self) {
        self.logging = true;
    }

    pub fn take_log(&mut self) -> Vec<EpisodeLogRow> {
        std::mem::take(&mut self.log)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn catalog(&self) -> &ActionCatalog {
        &self.catalog
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn done(&self) -> bool {
        self.slot >= self.cfg.horizon
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    /// Current state vector of length 1 + 3*eta.
    pub fn state(&self) -> Vec<f64> {
        let slots: Vec<Option<&Vehicle>> = self
            .slot_positions
            .iter()
            .map(|p| p.map(|id| self.vehicle_by_id(id).expect("positions track active ids")))
            .collect();
        encode_state(self.f_min, &slots)
    }

    /// Occupied positions with scheduler-facing summaries, position order.
    pub fn present(&self) -> Vec<PresentVehicle> {
        self.slot_positions
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                p.map(|id| {
                    let v = self.vehicle_by_id(id).expect("positions track active ids");
                    PresentVehicle {
                        position: i,
                        id,
                        x: v.x,
                        speed: v.current_speed,
                        z_running: v.z_running(),
                        arrival_slot: v.arrival_slot,
                    }
                })
            })
            .collect()
    }

    /// Final average rates of departed vehicles, in id order.
    pub fn departed_z(&self) -> Vec<f64> {
        let mut v: Vec<(u64, f64)> = self
            .mobility
            .departed()
            .iter()
            .map(|d| (d.id, d.z_running()))
            .collect();
        v.sort_by_key(|(id, _)| *id);
        v.into_iter().map(|(_, z)| z).collect()
    }

    /// Running averages of vehicles still on the road (censored at horizon),
    /// in id order.
    pub fn censored_z(&self) -> Vec<f64> {
        let mut v: Vec<(u64, f64)> = self
            .mobility
            .active()
            .iter()
            .map(|d| (d.id, d.z_running()))
            .collect();
        v.sort_by_key(|(id, _)| *id);
        v.into_iter().map(|(_, z)| z).collect()
    }

    /// Minimum final average rate over departed vehicles, if any departed.
    pub fn min_avg_bitrate(&self) -> Option<f64> {
        self.departed_z()
            .into_iter()
            .min_by(|a, b| a.partial_cmp(b).expect("rates are finite"))
    }

    fn vehicle_by_id(&self, id: u64) -> Option<&Vehicle> {
        self.mobility.active().iter().find(|v| v.id == id)
    }

    fn assign_positions(&mut self, admitted: &[u64]) -> Result<(), EnvError> {
        for &id in admitted {
            match self.slot_positions.iter().position(|p| p.is_none()) {
                Some(free) => self.slot_positions[free] = Some(id),
                None => {
                    return Err(EnvError::TooManyVehicles(format!(
                        "no free position for vehicle {id}"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Advances the MDP one slot.
    pub fn step(&mut self, action_index: usize) -> Result<StepOutcome, EnvError> {
        if self.done() {
            return Err(EnvError::EpisodeFinished);
        }
        if action_index >= self.catalog.len() {
            return Err(EnvError::InvalidAction {
                index: action_index,
                catalog: self.catalog.len(),
            });
        }
        let slot = self.slot;

        // Served set: selected positions that are actually occupied.
        let selected = self.catalog.positions(action_index);
        let served: Vec<u64> = selected
            .iter()
            .filter_map(|&pos| self.slot_positions[pos])
            .collect();
        debug_assert!(served.len() <= self.cfg.channels);

        // Tune phases for the served set at current positions.
        let channels: Vec<_> = served
            .iter()
            .map(|&id| {
                let v = self.vehicle_by_id(id).expect("served ids are active");
                channel::CascadedChannel::new(
                    &self.cfg.rf,
                    self.cfg.ris,
                    self.cfg.rsu,
                    Position3D::new(v.x, v.y, v.z),
                    self.cfg.ris_elements,
                )
            })
            .collect::<Result<_, _>>()?;
        let theta = match &self.cfg.phase_control {
            PhaseControl::Bcd(bcd) => {
                beamforming::bcd_optimize(
                    &channels,
                    &self.cfg.rf,
                    self.cfg.ris_elements,
                    self.cfg.q_levels,
                    bcd,
                )?
                .theta
            }
            PhaseControl::Random => baselines::random_phases(
                self.cfg.ris_elements,
                self.cfg.q_levels,
                &mut self.rng,
            )?,
        };

        // Accrue instantaneous rates.
        let phases = theta.phases();
        let mut rate_of: HashMap<u64, f64> = HashMap::new();
        for (id, ch) in served.iter().zip(channels.iter()) {
            let coeff = channel::cascaded_coefficient(ch, &phases)?;
            let rate = channel::spectral_efficiency(channel::snr(coeff, &self.cfg.rf));
            rate_of.insert(*id, rate);
        }
        let mut snapshot: Vec<(u64, f64, f64, bool, f64)> = Vec::new(); // id, x, speed, scheduled, rate
        {
            let present_ids: Vec<u64> = self.slot_positions.iter().flatten().copied().collect();
            for id in present_ids {
                let rate = rate_of.get(&id).copied().unwrap_or(0.0);
                let v = self
                    .mobility
                    .active_mut()
                    .iter_mut()
                    .find(|v| v.id == id)
                    .expect("present ids are active");
                if rate_of.contains_key(&id) {
                    v.served_bits += rate;
                }
                snapshot.push((id, v.x, v.current_speed, rate_of.contains_key(&id), rate));
            }
        }
        let rates: Vec<(u64, f64)> = snapshot.iter().map(|&(id, _, _, _, r)| (id, r)).collect();

        // Advance traffic and free departed positions.
        let departed = self.mobility.advance_all();
        for d in &departed {
            if let Some(pos) = self
                .slot_positions
                .iter()
                .position(|p| *p == Some(d.id))
            {
                self.slot_positions[pos] = None;
            }
        }
        let departures: Vec<Departure> = departed
            .iter()
            .map(|v| Departure {
                vehicle_id: v.id,
                z_final: v.z_running(),
                residence: v.residence().expect("departed vehicles have a slot"),
            })
            .collect();

        // Reward and minimum update.
        let dep_pairs: Vec<(u64, f64)> = departures
            .iter()
            .map(|d| (d.vehicle_id, d.z_final))
            .collect();
        let (reward, f_after, seen) = step_reward(
            &dep_pairs,
            self.f_min,
            self.first_departure_seen,
            self.cfg.penalty_mode,
        );
        debug_assert!(
            !self.first_departure_seen || f_after <= self.f_min,
            "minimum must be non-increasing once initialized"
        );
        self.f_min = f_after;
        self.first_departure_seen = seen;

        // Next slot: admit arrivals into the lowest free positions.
        self.mobility.next_slot();
        let admitted = self.mobility.spawn_arrivals();
        self.assign_positions(&admitted)?;
        self.slot += 1;
        let next_state = self.state();

        if self.logging {
            for &(id, x, speed, scheduled, rate) in &snapshot {
                let z_running = self
                    .vehicle_by_id(id)
                    .map(|v| v.z_running())
                    .or_else(|| {
                        departed
                            .iter()
                            .find(|d| d.id == id)
                            .map(|d| d.z_running())
                    })
                    .expect("vehicle is active or departed this slot");
                self.log.push(EpisodeLogRow {
                    slot,
                    vehicle_id: id,
                    x,
                    speed,
                    scheduled_flag: scheduled as u8,
                    rate_bpshz: rate,
                    z_running,
                    reward,
                    f: self.f_min,
                });
            }
        }

        Ok(StepOutcome {
            slot,
            reward,
            next_state,
            rates,
            served,
            departures,
            theta,
        })
    }
}

impl Environment for RisEnv {
    fn observe(&self) -> Vec<f64> {
        self.state()
    }

    fn num_actions(&self) -> usize {
        self.catalog.len()
    }

    fn step_action(&mut self, action: usize) -> Result<(f64, bool), EnvError> {
        let out = self.step(action)?;
        Ok((out.reward, self.done()))
    }

    fn is_done(&self) -> bool {
        self.done()
    }

    fn metric_min_avg_bitrate(&self) -> Option<f64> {
        self.min_avg_bitrate()
    }
}
