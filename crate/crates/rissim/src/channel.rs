//! Geometry and cascaded-channel model for the RSU -> RIS -> vehicle link.
//!
//! The RSU is single-antenna; the RIS is a uniform linear array of `M`
//! passive elements with half-wavelength spacing by default
//! (`element_phase_factor` = 2*pi*d/lambda = pi). Both hops are pure-LoS
//! Rician with power-law path loss, so every channel vector factors into a
//! real amplitude times a unit-modulus array response. All math is carried
//! in linear units; dB/dBm conversion happens once at config construction.

use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

/// Errors from geometry and channel evaluation.
#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("distance must be strictly positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate geometry: zero denominator in angle computation")]
    DegenerateGeometry,
    #[error("invalid radio configuration: {0}")]
    InvalidConfig(String),
}

/// Converts a dBm power level to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a dB gain to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// A point in 3-D space, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }
}

/// Radio constants, stored in linear units.
///
/// The reference gain is configured in dB even though the experiment tables
/// quote it with a power unit: a path gain at the 1 m reference distance is
/// dimensionless, so "10 dBm" is read as 10 dB -> linear 10.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RfConfig {
    /// RSU transmit power, watts.
    pub tx_power_w: f64,
    /// Thermal noise power, watts.
    pub noise_power_w: f64,
    /// Rician K-factor, linear.
    pub rician_k: f64,
    /// Average path-loss power gain at the 1 m reference distance, linear.
    pub ref_gain: f64,
    /// Path-loss exponent.
    pub pathloss_exp: f64,
    /// Per-element phase factor beta = 2*pi*d/lambda, radians.
    pub element_phase_factor: f64,
}

impl RfConfig {
    /// Builds a config from dB/dBm quantities, validating invariants.
    pub fn from_db_units(
        tx_power_dbm: f64,
        noise_power_dbm: f64,
        rician_k_db: f64,
        ref_gain_db: f64,
        pathloss_exp: f64,
        element_phase_factor: f64,
    ) -> Result<Self, ChannelError> {
        let cfg = Self {
            tx_power_w: dbm_to_watts(tx_power_dbm),
            noise_power_w: dbm_to_watts(noise_power_dbm),
            rician_k: db_to_linear(rician_k_db),
            ref_gain: db_to_linear(ref_gain_db),
            pathloss_exp,
            element_phase_factor,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let mut problems = Vec::new();
        if !(self.tx_power_w > 0.0) {
            problems.push("tx_power_w must be > 0");
        }
        if !(self.noise_power_w > 0.0) {
            problems.push("noise_power_w must be > 0");
        }
        if !(self.rician_k >= 0.0) {
            problems.push("rician_k must be >= 0");
        }
        if !(self.ref_gain > 0.0) {
            problems.push("ref_gain must be > 0");
        }
        if !(self.pathloss_exp >= 1.0) {
            problems.push("pathloss_exp must be >= 1");
        }
        if !(self.element_phase_factor > 0.0 && self.element_phase_factor <= TAU) {
            problems.push("element_phase_factor must be in (0, 2*pi]");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ChannelError::InvalidConfig(problems.join("; ")))
        }
    }

    /// Fraction of channel power carried by the LoS component, K/(1+K).
    pub fn los_power_fraction(&self) -> f64 {
        self.rician_k / (1.0 + self.rician_k)
    }
}

impl Default for RfConfig {
    /// Defaults match the bundled experiment configuration: 20 dBm transmit
    /// power, -110 dBm noise, 10 dB Rician K, 10 dB reference gain, path-loss
    /// exponent 4, half-wavelength element spacing.
    fn default() -> Self {
        Self::from_db_units(20.0, -110.0, 10.0, 10.0, 4.0, std::f64::consts::PI)
            .expect("default radio configuration is valid")
    }
}

/// Straight-line distance between two points.
pub fn euclidean_distance(a: Position3D, b: Position3D) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Cosine of the angle of arrival along the array axis: (x_dst - x_src) / dist.
pub fn aoa_cosine(x_src: f64, x_dst: f64, dist: f64) -> Result<f64, ChannelError> {
    if !(dist > 0.0) {
        return Err(ChannelError::NonPositiveDistance(dist));
    }
    Ok((x_dst - x_src) / dist)
}

/// LoS array response of an M-element ULA: element m (0-based) is
/// exp(-j * beta * m * phi). Entries are unit-modulus and element 0 is 1.
pub fn los_array_response(phi: f64, m_elems: usize, beta: f64) -> Vec<Complex64> {
    (0..m_elems)
        .map(|m| Complex64::from_polar(1.0, -beta * m as f64 * phi))
        .collect()
}

/// Pure-LoS Rician channel vector: sqrt(rho * d^-alpha) * sqrt(K/(1+K)) * a(phi).
pub fn channel_vector(
    dist: f64,
    phi: f64,
    cfg: &RfConfig,
    m_elems: usize,
) -> Result<Vec<Complex64>, ChannelError> {
    if !(dist > 0.0) {
        return Err(ChannelError::NonPositiveDistance(dist));
    }
    let amplitude =
        (cfg.ref_gain * dist.powf(-cfg.pathloss_exp)).sqrt() * cfg.los_power_fraction().sqrt();
    Ok(los_array_response(phi, m_elems, cfg.element_phase_factor)
        .into_iter()
        .map(|e| e * amplitude)
        .collect())
}

/// Both hops of the reflected link for one vehicle at one slot.
#[derive(Debug, Clone)]
pub struct CascadedChannel {
    /// RSU -> RIS channel vector.
    pub h_ir: Vec<Complex64>,
    /// RIS -> vehicle channel vector.
    pub h_iv: Vec<Complex64>,
    /// RSU -> RIS distance, meters.
    pub d_ir: f64,
    /// RIS -> vehicle distance, meters.
    pub d_iv: f64,
    /// AoA cosine of the RSU seen from the RIS.
    pub phi_ir: f64,
    /// AoA cosine of the vehicle seen from the RIS.
    pub phi_iv: f64,
}

impl CascadedChannel {
    /// Builds both hops from node positions.
    pub fn new(
        cfg: &RfConfig,
        ris: Position3D,
        rsu: Position3D,
        vehicle: Position3D,
        m_elems: usize,
    ) -> Result<Self, ChannelError> {
        let d_ir = euclidean_distance(ris, rsu);
        let d_iv = euclidean_distance(ris, vehicle);
        let phi_ir = aoa_cosine(rsu.x, ris.x, d_ir)?;
        let phi_iv = aoa_cosine(vehicle.x, ris.x, d_iv)?;
        let h_ir = channel_vector(d_ir, phi_ir, cfg, m_elems)?;
        let h_iv = channel_vector(d_iv, phi_iv, cfg, m_elems)?;
        Ok(Self {
            h_ir,
            h_iv,
            d_ir,
            d_iv,
            phi_ir,
            phi_iv,
        })
    }

    pub fn m_elems(&self) -> usize {
        self.h_ir.len()
    }

    /// Real amplitude of the cascade: rho * K/(1+K) / (d_iv^(a/2) * d_ir^(a/2)).
    /// With perfectly aligned phases the coefficient magnitude is this times M.
    pub fn amplitude_prefactor(&self, cfg: &RfConfig) -> f64 {
        cfg.ref_gain * cfg.los_power_fraction()
            / (self.d_iv.powf(cfg.pathloss_exp / 2.0) * self.d_ir.powf(cfg.pathloss_exp / 2.0))
    }

    /// Per-element product conj(h_iv[m]) * h_ir[m]; the cascaded coefficient
    /// is the phase-weighted sum of these terms.
    pub fn element_products(&self) -> Vec<Complex64> {
        self.h_iv
            .iter()
            .zip(self.h_ir.iter())
            .map(|(iv, ir)| iv.conj() * ir)
            .collect()
    }
}

/// Composite channel coefficient for a phase-shift vector (radians):
/// sum_m conj(h_iv[m]) * e^{j theta_m} * h_ir[m], which expands to
/// prefactor * sum_m exp(j*(theta_m + beta*m*phi_iv - beta*m*phi_ir)).
pub fn cascaded_coefficient(
    ch: &CascadedChannel,
    phases: &[f64],
) -> Result<Complex64, ChannelError> {
    if phases.len() != ch.m_elems() {
        return Err(ChannelError::LengthMismatch(phases.len(), ch.m_elems()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for ((iv, ir), &theta) in ch.h_iv.iter().zip(ch.h_ir.iter()).zip(phases.iter()) {
        acc += iv.conj() * Complex64::from_polar(1.0, theta) * ir;
    }
    Ok(acc)
}

/// Linear SNR of the composite link: P * |coefficient|^2 / sigma^2.
pub fn snr(cascaded: Complex64, cfg: &RfConfig) -> f64 {
    cfg.tx_power_w * cascaded.norm_sqr() / cfg.noise_power_w
}

/// Shannon spectral efficiency, bps/Hz.
pub fn spectral_efficiency(snr: f64) -> f64 {
    (1.0 + snr).log2()
}

/// Continuous phases that cancel the per-element exponents of the cascade,
/// making the coefficient real positive with magnitude prefactor * M:
/// theta_m = beta * m * (phi_ir - phi_iv), wrapped to [0, 2*pi).
pub fn optimal_continuous_phases(ch: &CascadedChannel, beta: f64) -> Vec<f64> {
    (0..ch.m_elems())
        .map(|m| wrap_to_tau(beta * m as f64 * (ch.phi_ir - ch.phi_iv)))
        .collect()
}

/// Wraps an angle into [0, 2*pi).
pub fn wrap_to_tau(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r == TAU {
        0.0
    } else {
        r
    }
}

/// Phase deviation at element `elem_index` (1-based) caused by a longitudinal
/// positioning error `delta` on the vehicle coordinate:
/// beta * (m-1) * (u/sqrt(u^2+Y) - (u - delta)/sqrt((u - delta)^2+Y))
/// with u = x_i - x_v and Y the squared transverse offset.
pub fn positioning_phase_deviation(
    elem_index: usize,
    delta: f64,
    x_i: f64,
    x_v: f64,
    transverse_sq: f64,
    beta: f64,
) -> Result<f64, ChannelError> {
    if transverse_sq < 0.0 {
        return Err(ChannelError::InvalidConfig(
            "transverse offset squared must be >= 0".into(),
        ));
    }
    let u_true = x_i - x_v;
    let u_est = x_i - (x_v + delta);
    let den_true = (u_true * u_true + transverse_sq).sqrt();
    let den_est = (u_est * u_est + transverse_sq).sqrt();
    if den_true == 0.0 || den_est == 0.0 {
        return Err(ChannelError::DegenerateGeometry);
    }
    let m = elem_index.saturating_sub(1) as f64;
    Ok(beta * m * (u_true / den_true - u_est / den_est))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table_positions() -> (Position3D, Position3D, Position3D) {
        let ris = Position3D::new(10.0, 20.0, 10.0);
        let rsu = Position3D::new(0.0, 40.0, 10.0);
        let veh = Position3D::new(20.0, 20.0, 1.0);
        (ris, rsu, veh)
    }

    #[test]
    fn distance_matches_direct_evaluation() {
        let (ris, rsu, veh) = table_positions();
        assert_relative_eq!(
            euclidean_distance(ris, rsu),
            500f64.sqrt(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            euclidean_distance(ris, veh),
            181f64.sqrt(),
            max_relative = 1e-15
        );
        assert_eq!(euclidean_distance(ris, ris), 0.0);
        // symmetry
        assert_eq!(euclidean_distance(rsu, ris), euclidean_distance(ris, rsu));
    }

    #[test]
    fn aoa_cosine_sign_convention() {
        let d = 500f64.sqrt();
        let phi = aoa_cosine(0.0, 10.0, d).unwrap();
        assert_relative_eq!(phi, 10.0 / d, max_relative = 1e-15);
        assert_abs_diff_eq!(phi, 0.4472135954999579, epsilon = 1e-12);
        assert_eq!(aoa_cosine(5.0, 5.0, 3.0).unwrap(), 0.0);
        assert_relative_eq!(aoa_cosine(2.0, 7.0, 5.0).unwrap(), 1.0);
        assert_relative_eq!(aoa_cosine(7.0, 2.0, 5.0).unwrap(), -1.0);
        assert!(matches!(
            aoa_cosine(0.0, 1.0, 0.0),
            Err(ChannelError::NonPositiveDistance(_))
        ));
    }

    #[test]
    fn array_response_basics() {
        assert_eq!(los_array_response(0.3, 1, 2.0), vec![Complex64::new(1.0, 0.0)]);
        for e in los_array_response(0.0, 8, std::f64::consts::PI) {
            assert_abs_diff_eq!(e.re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(e.im, 0.0, epsilon = 1e-15);
        }
        // e^{-j*pi*0.5} = -j
        let r = los_array_response(0.5, 2, std::f64::consts::PI);
        assert_abs_diff_eq!(r[1].re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1].im, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn channel_vector_table_magnitude() {
        // rho = 10 dB -> 10, K = 10 dB -> 10, alpha = 4, d = sqrt(500)
        let cfg = RfConfig::default();
        let d = 500f64.sqrt();
        let h = channel_vector(d, 0.4472, &cfg, 4).unwrap();
        let expected = (10.0 * d.powf(-4.0) * (10.0 / 11.0)).sqrt();
        for e in &h {
            assert_relative_eq!(e.norm(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn channel_vector_power_law() {
        let cfg = RfConfig::default();
        let h1 = channel_vector(10.0, 0.0, &cfg, 1).unwrap();
        let h2 = channel_vector(20.0, 0.0, &cfg, 1).unwrap();
        // alpha = 4: doubling the distance scales the amplitude by 1/4.
        assert_relative_eq!(h2[0].norm() * 4.0, h1[0].norm(), max_relative = 1e-12);
        assert!(matches!(
            channel_vector(0.0, 0.0, &cfg, 1),
            Err(ChannelError::NonPositiveDistance(_))
        ));
    }

    #[test]
    fn cascade_aligned_phases_hit_closed_form() {
        let cfg = RfConfig::default();
        let (ris, rsu, veh) = table_positions();
        for m in [1usize, 3, 17, 64] {
            let ch = CascadedChannel::new(&cfg, ris, rsu, veh, m).unwrap();
            let phases = optimal_continuous_phases(&ch, cfg.element_phase_factor);
            let c = cascaded_coefficient(&ch, &phases).unwrap();
            let expected = ch.amplitude_prefactor(&cfg) * m as f64;
            assert_relative_eq!(c.norm(), expected, max_relative = 1e-9);
            // The aligned coefficient is real positive.
            assert!(c.re > 0.0);
            assert_abs_diff_eq!(c.im / c.norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn cascade_matches_scalar_expansion() {
        // Same sum evaluated from (d, phi) scalars instead of the vectors.
        let cfg = RfConfig::default();
        let (ris, rsu, veh) = table_positions();
        let m = 9;
        let ch = CascadedChannel::new(&cfg, ris, rsu, veh, m).unwrap();
        let beta = cfg.element_phase_factor;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let phases: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * TAU).collect();
        let mut expected = Complex64::new(0.0, 0.0);
        let pf = ch.amplitude_prefactor(&cfg);
        for (i, &theta) in phases.iter().enumerate() {
            let arg = theta + beta * i as f64 * ch.phi_iv - beta * i as f64 * ch.phi_ir;
            expected += Complex64::from_polar(pf, arg);
        }
        let got = cascaded_coefficient(&ch, &phases).unwrap();
        assert_relative_eq!(got.re, expected.re, max_relative = 1e-9);
        assert_relative_eq!(got.im, expected.im, max_relative = 1e-9);
    }

    #[test]
    fn cascade_equal_angles_all_zero_phases() {
        // phi_iv == phi_ir: zero phases line every term up.
        let cfg = RfConfig::default();
        let ris = Position3D::new(10.0, 20.0, 10.0);
        let rsu = Position3D::new(0.0, 20.0, 6.0);
        let veh = Position3D::new(0.0, 20.0, 14.0);
        let m = 12;
        let ch = CascadedChannel::new(&cfg, ris, rsu, veh, m).unwrap();
        assert_relative_eq!(ch.phi_iv, ch.phi_ir, max_relative = 1e-15);
        let c = cascaded_coefficient(&ch, &vec![0.0; m]).unwrap();
        assert_relative_eq!(
            c.norm(),
            ch.amplitude_prefactor(&cfg) * m as f64,
            max_relative = 1e-12
        );
        for p in optimal_continuous_phases(&ch, cfg.element_phase_factor) {
            assert!(p.abs() < 1e-12 || (TAU - p).abs() < 1e-9, "phase {p} not 0 mod tau");
        }
    }

    #[test]
    fn cascade_length_mismatch_rejected() {
        let cfg = RfConfig::default();
        let (ris, rsu, veh) = table_positions();
        let ch = CascadedChannel::new(&cfg, ris, rsu, veh, 4).unwrap();
        assert!(matches!(
            cascaded_coefficient(&ch, &[0.0; 3]),
            Err(ChannelError::LengthMismatch(3, 4))
        ));
    }

    #[test]
    fn snr_and_spectral_efficiency() {
        let cfg = RfConfig::default();
        assert_eq!(snr(Complex64::new(0.0, 0.0), &cfg), 0.0);
        // P = 0.1 W, |c|^2 = 1e-9, sigma^2 = 1e-14 -> 1e4
        assert_relative_eq!(cfg.tx_power_w, 0.1, max_relative = 1e-12);
        assert_relative_eq!(cfg.noise_power_w, 1e-14, max_relative = 1e-12);
        let c = Complex64::new(1e-9f64.sqrt(), 0.0);
        assert_relative_eq!(snr(c, &cfg), 1e4, max_relative = 1e-9);
        // unit SNR construction
        let unit = Complex64::new((cfg.noise_power_w / cfg.tx_power_w).sqrt(), 0.0);
        assert_relative_eq!(snr(unit, &cfg), 1.0, max_relative = 1e-12);

        assert_eq!(spectral_efficiency(0.0), 0.0);
        assert_relative_eq!(spectral_efficiency(1.0), 1.0);
        assert_relative_eq!(spectral_efficiency(3.0), 2.0);
    }

    #[test]
    fn snr_decreases_with_each_distance_under_aligned_phases() {
        let cfg = RfConfig::default();
        let rsu = Position3D::new(0.0, 40.0, 10.0);
        let mut last = f64::INFINITY;
        for x_v in [15.0, 25.0, 45.0, 75.0] {
            let ris = Position3D::new(10.0, 20.0, 10.0);
            let veh = Position3D::new(x_v, 20.0, 1.0);
            let ch = CascadedChannel::new(&cfg, ris, rsu, veh, 16).unwrap();
            let phases = optimal_continuous_phases(&ch, cfg.element_phase_factor);
            let s = snr(cascaded_coefficient(&ch, &phases).unwrap(), &cfg);
            assert!(s < last, "snr should drop as the vehicle recedes");
            last = s;
        }
    }

    #[test]
    fn positioning_deviation_cases() {
        let beta = std::f64::consts::PI;
        // No error, or first element: deviation is identically zero.
        assert_eq!(
            positioning_phase_deviation(7, 0.0, 10.0, 30.0, 81.0, beta).unwrap(),
            0.0
        );
        assert_eq!(
            positioning_phase_deviation(1, 0.7, 10.0, 30.0, 81.0, beta).unwrap(),
            0.0
        );
        // Odd in delta at leading order: the quadratic term leaves a
        // relative asymmetry of order delta.
        let plus = positioning_phase_deviation(10, 1e-4, 10.0, 30.0, 81.0, beta).unwrap();
        let minus = positioning_phase_deviation(10, -1e-4, 10.0, 30.0, 81.0, beta).unwrap();
        assert!(((plus + minus) / plus).abs() < 1e-3);
        // Deviation magnitude shrinks as the vehicle recedes from the RIS.
        let mut last = f64::INFINITY;
        for x_v in [20.0, 30.0, 40.0, 50.0] {
            let d = positioning_phase_deviation(10, 0.5, 10.0, x_v, 81.0, beta)
                .unwrap()
                .abs();
            assert!(d < last, "deviation should shrink with separation");
            last = d;
        }
        assert!(matches!(
            positioning_phase_deviation(3, 0.0, 5.0, 5.0, 0.0, beta),
            Err(ChannelError::DegenerateGeometry)
        ));
    }

    #[test]
    fn db_conversions() {
        assert_relative_eq!(dbm_to_watts(20.0), 0.1, max_relative = 1e-12);
        assert_relative_eq!(dbm_to_watts(-110.0), 1e-14, max_relative = 1e-12);
        assert_relative_eq!(db_to_linear(10.0), 10.0, max_relative = 1e-12);
        assert_relative_eq!(db_to_linear(0.0), 1.0, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn array_response_unit_modulus(phi in -1.0f64..=1.0, m in 1usize..40, beta in 0.1f64..TAU) {
            let resp = los_array_response(phi, m, beta);
            prop_assert_eq!(resp[0], Complex64::new(1.0, 0.0));
            for e in resp {
                prop_assert!((e.norm() - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn cascade_triangle_inequality(
            seed in 0u64..1000,
            m in 1usize..24,
            x_v in 11.0f64..100.0,
        ) {
            let cfg = RfConfig::default();
            let ris = Position3D::new(10.0, 20.0, 10.0);
            let rsu = Position3D::new(0.0, 40.0, 10.0);
            let veh = Position3D::new(x_v, 20.0, 1.0);
            let ch = CascadedChannel::new(&cfg, ris, rsu, veh, m).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phases: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * TAU).collect();
            let c = cascaded_coefficient(&ch, &phases).unwrap();
            let bound = ch.amplitude_prefactor(&cfg) * m as f64;
            prop_assert!(c.norm() <= bound * (1.0 + 1e-12));
        }
    }
}
