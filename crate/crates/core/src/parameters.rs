//! Physical constants of the fibre and pulse, and the dimensionless scales
//! the propagation equation is written in.
//!
//! Time is measured in units of the pulse width `t0`, distance in units of
//! the dispersion length `z0 = t0^2 / |beta2|`, and the field is normalised
//! so that `∫|phi|^2 dtau = N / nbar`. A fundamental soliton `sech(tau)`
//! therefore carries `2 nbar` photons and energy `Es = 2 nbar hbar omega0`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;

const PS: f64 = 1e-12;
const KM: f64 = 1e3;
const PJ: f64 = 1e-12;

/// Fibre constants in laboratory units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FibreParams {
    /// |beta2| in ps^2/km.
    pub beta2: f64,
    /// Sign of the group-velocity dispersion; solitons need `true`.
    pub anomalous: bool,
    /// beta3 in ps^3/km.
    pub beta3: f64,
    /// Nonlinear parameter in 1/(km W).
    pub gamma: f64,
    /// Carrier wavelength in m.
    pub wavelength: f64,
    /// Effective modal area in m^2.
    pub effective_area: f64,
    /// Group velocity in m/s.
    pub group_velocity: f64,
    /// Lumped linear loss applied at detection.
    pub loss_fraction: f64,
    /// Fringe visibility of the recombined Sagnac pulses.
    pub spectral_overlap: f64,
    /// Magnitude of the GAWBS index fluctuations.
    pub gawbs_magnitude: f64,
}

impl FibreParams {
    /// NKT Photonics NL-PM-750 at 810 nm.
    ///
    /// `spectral_overlap` is set to 1 here; the measured visibility has to be
    /// supplied separately.
    pub fn nl_pm_750() -> Self {
        Self {
            beta2: 12.2,
            anomalous: true,
            beta3: 0.0,
            gamma: 91.4,
            wavelength: 810e-9,
            effective_area: 2.0e-12,
            group_velocity: SPEED_OF_LIGHT / 1.45,
            loss_fraction: 0.13,
            spectral_overlap: 1.0,
            gawbs_magnitude: 3.2e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("beta2", self.beta2)?;
        positive("gamma", self.gamma)?;
        positive("wavelength", self.wavelength)?;
        positive("effective_area", self.effective_area)?;
        positive("group_velocity", self.group_velocity)?;
        if !self.beta3.is_finite() {
            return Err(invalid("beta3", "must be finite"));
        }
        unit_interval("loss_fraction", self.loss_fraction)?;
        unit_interval("spectral_overlap", self.spectral_overlap)?;
        if !(self.gawbs_magnitude >= 0.0 && self.gawbs_magnitude.is_finite()) {
            return Err(invalid("gawbs_magnitude", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    Sech,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    /// Pulse width in ps.
    pub t0: f64,
    /// Energy summed over both Sagnac arms, in pJ.
    pub total_energy: f64,
    pub shape: PulseShape,
}

impl PulseParams {
    pub fn sech(t0: f64, total_energy: f64) -> Self {
        Self {
            t0,
            total_energy,
            shape: PulseShape::Sech,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("t0", self.t0)?;
        if !(self.total_energy >= 0.0 && self.total_energy.is_finite()) {
            return Err(invalid("total_energy", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Dimensionless scales derived from [`FibreParams`] and [`PulseParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    /// Dispersion length in m.
    pub z0: f64,
    /// Half the photon number of a fundamental soliton.
    pub nbar: f64,
    /// Fundamental soliton energy in pJ.
    pub es: f64,
    /// Relative third-order dispersion beta3 / (|beta2| t0).
    pub b3: f64,
    /// Self-steepening coefficient 1 / (omega0 t0).
    pub s: f64,
    /// Carrier angular frequency in rad/s.
    pub omega0: f64,
    /// Pulse width in s.
    pub t0: f64,
}

impl Scales {
    /// Fibre length in metres to dimensionless propagation distance.
    pub fn length_to_z(&self, metres: f64) -> f64 {
        metres / self.z0
    }

    pub fn z_to_length(&self, z: f64) -> f64 {
        z * self.z0
    }

    /// beta3 in ps^3/km that corresponds to a given relative strength `b3`.
    pub fn beta3_for(&self, b3: f64, fibre: &FibreParams) -> f64 {
        b3 * fibre.beta2 * self.t0 / PS
    }
}

pub fn derive_scales(fibre: &FibreParams, pulse: &PulseParams) -> Result<Scales> {
    fibre.validate()?;
    pulse.validate()?;

    let beta2 = fibre.beta2 * PS * PS / KM;
    let beta3 = fibre.beta3 * PS * PS * PS / KM;
    let gamma = fibre.gamma / KM;
    let t0 = pulse.t0 * PS;
    let omega0 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / fibre.wavelength;

    let z0 = t0 * t0 / beta2;
    let nbar = beta2 / (HBAR * omega0 * gamma * t0);
    let es = 2.0 * nbar * HBAR * omega0 / PJ;

    Ok(Scales {
        z0,
        nbar,
        es,
        b3: beta3 / (beta2 * t0),
        s: 1.0 / (omega0 * t0),
        omega0,
        t0,
    })
}

/// Input amplitude of one arm, `A` in `A sech(tau)`, for a total (two-arm)
/// energy in pJ. Each arm carries half the energy.
pub fn arm_amplitude(total_energy: f64, scales: &Scales) -> Result<f64> {
    if !(total_energy >= 0.0 && total_energy.is_finite()) {
        return Err(invalid("total_energy", "must be finite and >= 0"));
    }
    Ok((0.5 * total_energy / scales.es).sqrt())
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive, got {v}")))
    }
}

fn unit_interval(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(name, format!("must lie in [0, 1], got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn nl_pm_750() -> Scales {
        derive_scales(&FibreParams::nl_pm_750(), &PulseParams::sech(0.068, 0.0)).unwrap()
    }

    #[test]
    fn dispersion_length_matches_fibre_data() {
        assert!((nl_pm_750().z0 - 0.38).abs() < 0.005);
    }

    #[test]
    fn soliton_photon_number_and_energy() {
        let sc = nl_pm_750();
        assert!((sc.nbar / 8.0e6 - 1.0).abs() < 0.01, "nbar = {}", sc.nbar);
        assert!((sc.es - 3.92).abs() < 0.01, "Es = {}", sc.es);
    }

    #[test]
    fn self_steepening_coefficient() {
        // omega0 = 2 pi c / 810 nm = 2.3255e15 rad/s; 1/(omega0 * 68 fs)
        let omega0 = 2.0 * std::f64::consts::PI * 299_792_458.0 / 810e-9;
        let s = 1.0 / (omega0 * 0.068e-12);
        assert_relative_eq!(nl_pm_750().s, s, max_relative = 1e-12);
        assert!((nl_pm_750().s - 6.32e-3).abs() < 0.01e-3);
    }

    #[test]
    fn zero_beta3_gives_zero_b3() {
        assert_eq!(nl_pm_750().b3, 0.0);
    }

    #[test]
    fn b3_round_trip_through_beta3() {
        let mut fibre = FibreParams::nl_pm_750();
        let sc = nl_pm_750();
        fibre.beta3 = sc.beta3_for(0.3, &fibre);
        let sc2 = derive_scales(&fibre, &PulseParams::sech(0.068, 0.0)).unwrap();
        assert_relative_eq!(sc2.b3, 0.3, max_relative = 1e-12);
    }

    #[test]
    fn rejects_nonpositive_inputs() {
        let pulse = PulseParams::sech(0.068, 1.0);
        for f in [
            |p: &mut FibreParams| p.beta2 = 0.0,
            |p: &mut FibreParams| p.gamma = -1.0,
            |p: &mut FibreParams| p.wavelength = 0.0,
        ] {
            let mut fibre = FibreParams::nl_pm_750();
            f(&mut fibre);
            assert!(derive_scales(&fibre, &pulse).is_err());
        }
        assert!(derive_scales(&FibreParams::nl_pm_750(), &PulseParams::sech(0.0, 1.0)).is_err());
        let mut fibre = FibreParams::nl_pm_750();
        fibre.loss_fraction = 1.5;
        assert!(derive_scales(&fibre, &pulse).is_err());
    }

    #[test]
    fn arm_amplitude_examples() {
        let mut sc = nl_pm_750();
        sc.es = 3.92;
        assert_relative_eq!(arm_amplitude(7.84, &sc).unwrap(), 1.0, max_relative = 1e-12);
        assert_eq!(arm_amplitude(0.0, &sc).unwrap(), 0.0);
        assert!((arm_amplitude(14.6, &sc).unwrap() - 1.365).abs() < 5e-4);
        assert!(arm_amplitude(-1.0, &sc).is_err());
    }

    #[test]
    fn doubling_t0_rescales() {
        let fibre = FibreParams::nl_pm_750();
        let a = derive_scales(&fibre, &PulseParams::sech(0.068, 0.0)).unwrap();
        let b = derive_scales(&fibre, &PulseParams::sech(0.136, 0.0)).unwrap();
        assert_relative_eq!(b.z0, 4.0 * a.z0, max_relative = 1e-14);
        assert_relative_eq!(b.nbar, 0.5 * a.nbar, max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn energy_round_trip(e in 0.0f64..200.0) {
            let sc = nl_pm_750();
            let a = arm_amplitude(e, &sc).unwrap();
            prop_assert!((a * a * sc.es * 2.0 - e).abs() <= 1e-12 * e.max(1.0));
        }
    }
}
