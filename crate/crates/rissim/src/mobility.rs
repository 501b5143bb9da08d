//! Synthetic traffic along a 1-D road segment through the dark zone.
//!
//! Arrivals follow a Poisson process (or an imported trace), each vehicle
//! drawing a constant speed from one of two classes. Vehicles enter at
//! x = 0, advance by speed * slot_duration each slot, and depart once they
//! cross the far end. Admissions beyond the concurrency cap are deferred to
//! later slots, never dropped, so the fixed-width scheduler state always
//! suffices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use std::collections::VecDeque;
use std::io::Read;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MobilityError {
    #[error("invalid traffic configuration: {0}")]
    InvalidConfig(String),
    #[error("vehicle {0} has not departed")]
    NotDeparted(u64),
    #[error("trace parse error: {0}")]
    Trace(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One vehicle transiting the dark zone.
#[derive(Debug, Clone)]
pub struct Vehicle {
    pub id: u64,
    /// Longitudinal position, meters; non-decreasing over slots.
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Base speed drawn at admission, m/s.
    pub speed: f64,
    /// Speed used in the most recent slot (equals `speed` unless jitter is on).
    pub current_speed: f64,
    /// Slot at which the vehicle entered the road.
    pub arrival_slot: usize,
    /// Slot index at which the vehicle was gone (first slot it is absent).
    pub departure_slot: Option<usize>,
    /// Accumulated scheduled spectral efficiency, bps/Hz * slots.
    pub served_bits: f64,
    /// Slots spent on the road so far.
    pub slots_present: usize,
}

impl Vehicle {
    /// Running average bit rate: served bits over slots present (0 before
    /// the first slot completes).
    pub fn z_running(&self) -> f64 {
        if self.slots_present == 0 {
            0.0
        } else {
            self.served_bits / self.slots_present as f64
        }
    }

    pub fn has_departed(&self) -> bool {
        self.departure_slot.is_some()
    }

    /// Residence time in slots, departure minus arrival.
    pub fn residence(&self) -> Result<usize, MobilityError> {
        match self.departure_slot {
            Some(d) => Ok(d - self.arrival_slot),
            None => Err(MobilityError::NotDeparted(self.id)),
        }
    }
}

const KPH_TO_MPS: f64 = 1.0 / 3.6;

/// Traffic generation parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrafficConfig {
    /// Dark-zone length, meters.
    pub road_length: f64,
    /// Poisson arrival rate, vehicles per second.
    pub arrival_rate: f64,
    /// Slot duration, seconds.
    pub slot_duration: f64,
    /// Class maximum speeds, m/s; classes are picked uniformly.
    pub class_max_speeds: Vec<f64>,
    /// Speeds are drawn uniformly in [lo, hi] * class max.
    pub speed_fraction: (f64, f64),
    /// Concurrency cap; admissions beyond it are deferred.
    pub max_concurrent: usize,
    /// Lane coordinates.
    pub lane_y: f64,
    pub lane_z: f64,
    /// Optional per-slot speed jitter of +-5%.
    pub speed_jitter: bool,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            road_length: 100.0,
            arrival_rate: 0.2,
            slot_duration: 1.0,
            class_max_speeds: vec![30.0 * KPH_TO_MPS, 50.0 * KPH_TO_MPS],
            speed_fraction: (0.7, 1.0),
            max_concurrent: 12,
            lane_y: 20.0,
            lane_z: 1.0,
            speed_jitter: false,
        }
    }
}

impl TrafficConfig {
    pub fn validate(&self) -> Result<(), MobilityError> {
        let mut problems = Vec::new();
        if !(self.road_length > 0.0) {
            problems.push("road_length must be > 0".to_string());
        }
        if !(self.arrival_rate >= 0.0) {
            problems.push("arrival_rate must be >= 0".to_string());
        }
        if !(self.slot_duration > 0.0) {
            problems.push("slot_duration must be > 0".to_string());
        }
        if self.class_max_speeds.is_empty()
            || self.class_max_speeds.iter().any(|&s| !(s > 0.0))
        {
            problems.push("class_max_speeds must be non-empty and positive".to_string());
        }
        let (lo, hi) = self.speed_fraction;
        if !(lo > 0.0 && hi >= lo) {
            problems.push("speed_fraction must satisfy 0 < lo <= hi".to_string());
        }
        if self.max_concurrent == 0 {
            problems.push("max_concurrent must be >= 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(MobilityError::InvalidConfig(problems.join("; ")))
        }
    }
}

/// One row of an imported arrival trace.
#[derive(Debug, Clone, PartialEq, serde::Deserialize, serde::Serialize)]
pub struct TraceRow {
    pub vehicle_id: u64,
    pub arrival_slot: usize,
    pub speed_mps: f64,
}

/// Parses an arrival trace from CSV with the exact header
/// `vehicle_id,arrival_slot,speed_mps`.
pub fn parse_trace_csv<R: Read>(reader: R) -> Result<Vec<TraceRow>, MobilityError> {
    let mut rdr = csv::Reader::from_reader(reader);
    {
        let headers = rdr.headers().map_err(|e| MobilityError::Trace(e.to_string()))?;
        let expected = ["vehicle_id", "arrival_slot", "speed_mps"];
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(MobilityError::Trace(format!(
                "expected header {expected:?}, got {got:?}"
            )));
        }
    }
    let mut rows: Vec<TraceRow> = Vec::new();
    for rec in rdr.deserialize() {
        let row: TraceRow = rec.map_err(|e| MobilityError::Trace(e.to_string()))?;
        if !(row.speed_mps > 0.0) {
            return Err(MobilityError::Trace(format!(
                "vehicle {} has non-positive speed",
                row.vehicle_id
            )));
        }
        rows.push(row);
    }
    rows.sort_by_key(|r| (r.arrival_slot, r.vehicle_id));
    Ok(rows)
}

pub fn load_trace_csv(path: &Path) -> Result<Vec<TraceRow>, MobilityError> {
    let file = std::fs::File::open(path)?;
    parse_trace_csv(file)
}

#[derive(Debug, Clone)]
enum ArrivalSource {
    Poisson,
    Trace { rows: Vec<TraceRow>, cursor: usize },
}

/// Per-episode traffic engine. Owns its RNG stream, so identical seeds give
/// identical arrival, speed and position traces.
#[derive(Debug, Clone)]
pub struct MobilityEngine {
    cfg: TrafficConfig,
    rng: ChaCha8Rng,
    source: ArrivalSource,
    next_id: u64,
    slot: usize,
    pending: VecDeque<Vehicle>,
    active: Vec<Vehicle>,
    departed: Vec<Vehicle>,
}

impl MobilityEngine {
    pub fn new(cfg: TrafficConfig, seed: u64) -> Result<Self, MobilityError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            source: ArrivalSource::Poisson,
            next_id: 0,
            slot: 0,
            pending: VecDeque::new(),
            active: Vec::new(),
            departed: Vec::new(),
        })
    }

    /// Drives arrivals from an imported trace instead of the Poisson source.
    /// Speeds and identities come from the rows; deferral still applies.
    pub fn with_trace(
        cfg: TrafficConfig,
        rows: Vec<TraceRow>,
        seed: u64,
    ) -> Result<Self, MobilityError> {
        cfg.validate()?;
        let mut sorted = rows;
        sorted.sort_by_key(|r| (r.arrival_slot, r.vehicle_id));
        Ok(Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            source: ArrivalSource::Trace {
                rows: sorted,
                cursor: 0,
            },
            next_id: 0,
            slot: 0,
            pending: VecDeque::new(),
            active: Vec::new(),
            departed: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrafficConfig {
        &self.cfg
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn active(&self) -> &[Vehicle] {
        &self.active
    }

    pub fn active_mut(&mut self) -> &mut [Vehicle] {
        &mut self.active
    }

    pub fn departed(&self) -> &[Vehicle] {
        &self.departed
    }

    fn draw_vehicle(&mut self) -> Vehicle {
        let class = self.rng.random_range(0..self.cfg.class_max_speeds.len());
        let max = self.cfg.class_max_speeds[class];
        let (lo, hi) = self.cfg.speed_fraction;
        let speed = max * self.rng.random_range(lo..=hi);
        let id = self.next_id;
        self.next_id += 1;
        Vehicle {
            id,
            x: 0.0,
            y: self.cfg.lane_y,
            z: self.cfg.lane_z,
            speed,
            current_speed: speed,
            arrival_slot: 0, // stamped at admission
            departure_slot: None,
            served_bits: 0.0,
            slots_present: 0,
        }
    }

    /// Generates this slot's arrivals and admits queued vehicles up to the
    /// concurrency cap. Returns the ids admitted. Deferred vehicles stay
    /// queued and are admitted in later slots in FIFO order.
    pub fn spawn_arrivals(&mut self) -> Vec<u64> {
        match &mut self.source {
            ArrivalSource::Poisson => {
                let lambda = self.cfg.arrival_rate * self.cfg.slot_duration;
                let count = if lambda > 0.0 {
                    Poisson::new(lambda).expect("lambda > 0").sample(&mut self.rng) as usize
                } else {
                    0
                };
                for _ in 0..count {
                    let v = self.draw_vehicle();
                    self.pending.push_back(v);
                }
            }
            ArrivalSource::Trace { rows, cursor } => {
                let slot = self.slot;
                let mut staged = Vec::new();
                while *cursor < rows.len() && rows[*cursor].arrival_slot <= slot {
                    staged.push(rows[*cursor].clone());
                    *cursor += 1;
                }
                for row in staged {
                    self.pending.push_back(Vehicle {
                        id: row.vehicle_id,
                        x: 0.0,
                        y: self.cfg.lane_y,
                        z: self.cfg.lane_z,
                        speed: row.speed_mps,
                        current_speed: row.speed_mps,
                        arrival_slot: 0,
                        departure_slot: None,
                        served_bits: 0.0,
                        slots_present: 0,
                    });
                }
            }
        }
        let mut admitted = Vec::new();
        while self.active.len() < self.cfg.max_concurrent {
            match self.pending.pop_front() {
                Some(mut v) => {
                    v.arrival_slot = self.slot;
                    admitted.push(v.id);
                    self.active.push(v);
                }
                None => break,
            }
        }
        admitted
    }

    /// Moves every active vehicle one slot forward and collects departures.
    /// A vehicle that crosses the road end this slot records the next slot
    /// as its departure slot, so residence = departure - arrival counts the
    /// slots it was actually present.
    pub fn advance_all(&mut self) -> Vec<Vehicle> {
        let slot = self.slot;
        if self.cfg.speed_jitter {
            // Jitter drawn in id order for reproducibility.
            let mut order: Vec<usize> = (0..self.active.len()).collect();
            order.sort_by_key(|&i| self.active[i].id);
            for i in order {
                let jitter = self.rng.random_range(0.95..=1.05);
                self.active[i].current_speed = self.active[i].speed * jitter;
            }
        }
        let mut departures = Vec::new();
        let road_length = self.cfg.road_length;
        let tau = self.cfg.slot_duration;
        let mut i = 0;
        while i < self.active.len() {
            {
                let v = &mut self.active[i];
                v.x += v.current_speed * tau;
                v.slots_present += 1;
            }
            if self.active[i].x > road_length {
                let mut v = self.active.remove(i);
                v.departure_slot = Some(slot + 1);
                departures.push(v.clone());
                self.departed.push(v);
            } else {
                i += 1;
            }
        }
        departures.sort_by_key(|v| v.id);
        departures
    }

    /// Advances the slot counter; call once per simulated slot after
    /// `advance_all`.
    pub fn next_slot(&mut self) {
        self.slot += 1;
    }

    /// Residence time of a departed vehicle.
    pub fn residence(vehicle: &Vehicle) -> Result<usize, MobilityError> {
        vehicle.residence()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_never_spawns() {
        let cfg = TrafficConfig {
            arrival_rate: 0.0,
            ..TrafficConfig::default()
        };
        let mut eng = MobilityEngine::new(cfg, 1).unwrap();
        for _ in 0..50 {
            assert!(eng.spawn_arrivals().is_empty());
            eng.advance_all();
            eng.next_slot();
        }
    }

    #[test]
    fn poisson_mean_arrivals_matches_rate() {
        // rate 0.2/s, tau = 1 s, 100 slots -> mean 20 arrivals per episode.
        let mut total = 0usize;
        let episodes = 300;
        for seed in 0..episodes {
            let mut eng = MobilityEngine::new(
                TrafficConfig {
                    max_concurrent: 1000,
                    ..TrafficConfig::default()
                },
                seed,
            )
            .unwrap();
            for _ in 0..100 {
                total += eng.spawn_arrivals().len();
                eng.advance_all();
                eng.next_slot();
            }
        }
        let mean = total as f64 / episodes as f64;
        // sigma of the episode mean is sqrt(20/episodes) ~ 0.26.
        assert!(
            (mean - 20.0).abs() < 1.0,
            "mean arrivals {mean} too far from 20"
        );
    }

    #[test]
    fn advance_and_residence_accounting() {
        let cfg = TrafficConfig::default();
        let mut v = Vehicle {
            id: 0,
            x: 95.0,
            y: cfg.lane_y,
            z: cfg.lane_z,
            speed: 10.0,
            current_speed: 10.0,
            arrival_slot: 3,
            departure_slot: None,
            served_bits: 0.0,
            slots_present: 8,
        };
        v.x += v.speed * cfg.slot_duration;
        assert!(v.x > cfg.road_length, "boundary crossing departs this step");
        assert!(v.residence().is_err());
        v.departure_slot = Some(12);
        assert_eq!(v.residence().unwrap(), 9);
    }

    #[test]
    fn deferred_arrivals_are_never_dropped() {
        // Cap of 1 with a burst trace: everyone is eventually admitted.
        let rows = vec![
            TraceRow { vehicle_id: 10, arrival_slot: 0, speed_mps: 60.0 },
            TraceRow { vehicle_id: 11, arrival_slot: 0, speed_mps: 60.0 },
            TraceRow { vehicle_id: 12, arrival_slot: 0, speed_mps: 60.0 },
        ];
        let cfg = TrafficConfig {
            max_concurrent: 1,
            ..TrafficConfig::default()
        };
        let mut eng = MobilityEngine::with_trace(cfg, rows, 0).unwrap();
        let mut admitted_slots = Vec::new();
        for _ in 0..10 {
            for id in eng.spawn_arrivals() {
                admitted_slots.push((id, eng.slot()));
            }
            eng.advance_all();
            eng.next_slot();
        }
        // 60 m/s crosses 100 m in 2 slots, freeing the single place.
        assert_eq!(admitted_slots, vec![(10, 0), (11, 2), (12, 4)]);
        assert_eq!(eng.departed().len(), 3);
    }

    #[test]
    fn concurrency_cap_holds_every_slot() {
        let cfg = TrafficConfig {
            arrival_rate: 2.0,
            max_concurrent: 4,
            ..TrafficConfig::default()
        };
        let mut eng = MobilityEngine::new(cfg, 7).unwrap();
        for _ in 0..200 {
            eng.spawn_arrivals();
            assert!(eng.active().len() <= 4);
            eng.advance_all();
            eng.next_slot();
        }
    }

    #[test]
    fn seeded_traces_are_identical() {
        let run = |seed: u64| {
            let mut eng = MobilityEngine::new(TrafficConfig::default(), seed).unwrap();
            let mut trace = Vec::new();
            for _ in 0..120 {
                eng.spawn_arrivals();
                for v in eng.active() {
                    trace.push((v.id, v.x.to_bits(), v.speed.to_bits()));
                }
                eng.advance_all();
                eng.next_slot();
            }
            trace
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn every_vehicle_departs_eventually() {
        let mut eng = MobilityEngine::new(TrafficConfig::default(), 5).unwrap();
        let mut spawned = 0;
        for _ in 0..100 {
            spawned += eng.spawn_arrivals().len();
            eng.advance_all();
            eng.next_slot();
        }
        // Drain without new arrivals: slowest class needs < 18 more slots.
        let cfg_zero = eng.cfg.arrival_rate;
        assert!(cfg_zero > 0.0);
        eng.cfg.arrival_rate = 0.0;
        for _ in 0..40 {
            eng.spawn_arrivals();
            eng.advance_all();
            eng.next_slot();
        }
        assert_eq!(eng.active().len(), 0);
        assert_eq!(eng.departed().len(), spawned);
        for v in eng.departed() {
            let h = v.residence().unwrap();
            assert!(h >= 1);
            assert_eq!(h, v.slots_present);
        }
    }

    #[test]
    fn trace_csv_round_trip() {
        let csv_text = "vehicle_id,arrival_slot,speed_mps\n3,0,8.5\n4,2,12.0\n";
        let rows = parse_trace_csv(csv_text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].vehicle_id, 3);
        assert_eq!(rows[1].arrival_slot, 2);
        let bad = "vehicle_id,slot,speed\n1,2,3\n";
        assert!(parse_trace_csv(bad.as_bytes()).is_err());
    }
}
