//! Nonlinear response function (instantaneous Kerr plus delayed Raman) in
//! spectral form, and the spectral density of the Raman phase noise that
//! accompanies the Raman gain.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::parameters::{Scales, BOLTZMANN, HBAR, SPEED_OF_LIGHT};

/// One damped oscillator `amplitude * exp(-damping t) sin(center t)` of a
/// multi-line Raman response. All quantities in pulse-width units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamanLine {
    pub center: f64,
    pub damping: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RamanKind {
    Instantaneous,
    /// `h_R(t) ∝ exp(-t/tau2) sin(t/tau1)`, times in pulse-width units.
    SingleOscillator { tau1: f64, tau2: f64 },
    MultiLorentzian { lines: Vec<RamanLine> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamanModel {
    pub kind: RamanKind,
    /// Fraction of the nonlinearity carried by the delayed response.
    pub raman_fraction: f64,
    /// Phonon bath temperature in K.
    pub temperature: f64,
}

/// Silica line table: (position cm^-1, relative intensity, Lorentzian FWHM cm^-1).
const SILICA_LINES: [(f64, f64, f64); 13] = [
    (56.25, 1.00, 17.37),
    (100.00, 11.40, 38.81),
    (231.25, 36.67, 58.33),
    (362.50, 67.67, 54.17),
    (463.00, 74.00, 45.11),
    (497.00, 4.50, 8.17),
    (611.50, 6.80, 13.83),
    (691.67, 4.60, 51.67),
    (793.67, 4.20, 19.83),
    (835.50, 4.50, 21.43),
    (930.00, 2.70, 50.00),
    (1080.00, 3.10, 30.33),
    (1215.00, 3.00, 53.33),
];

impl RamanModel {
    pub fn instantaneous() -> Self {
        Self {
            kind: RamanKind::Instantaneous,
            raman_fraction: 0.0,
            temperature: 300.0,
        }
    }

    /// Single damped oscillator with tau1 = 12.2 fs, tau2 = 32 fs and
    /// f = 0.18, for a pulse width `t0_ps`.
    pub fn silica(t0_ps: f64) -> Self {
        let t0_fs = t0_ps * 1e3;
        Self {
            kind: RamanKind::SingleOscillator {
                tau1: 12.2 / t0_fs,
                tau2: 32.0 / t0_fs,
            },
            raman_fraction: 0.18,
            temperature: 300.0,
        }
    }

    /// Thirteen-line Lorentzian fit to the silica Raman spectrum.
    pub fn silica_multi_lorentzian(t0_ps: f64) -> Self {
        let t0 = t0_ps * 1e-12;
        // wavenumber in cm^-1 to angular frequency in rad/s
        let k = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * 100.0;
        let lines = SILICA_LINES
            .iter()
            .map(|&(pos, amp, fwhm)| RamanLine {
                center: pos * k * t0,
                damping: 0.5 * fwhm * k * t0,
                amplitude: amp,
            })
            .collect();
        Self {
            kind: RamanKind::MultiLorentzian { lines },
            raman_fraction: 0.18,
            temperature: 300.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.raman_fraction) {
            return Err(invalid(
                "raman_fraction",
                format!("must lie in [0, 1], got {}", self.raman_fraction),
            ));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(invalid("temperature", "must be finite and >= 0"));
        }
        match &self.kind {
            RamanKind::Instantaneous => {}
            RamanKind::SingleOscillator { tau1, tau2 } => {
                if !(*tau1 > 0.0 && *tau2 > 0.0) {
                    return Err(invalid("tau1/tau2", "oscillator times must be positive"));
                }
            }
            RamanKind::MultiLorentzian { lines } => {
                if lines.is_empty() {
                    return Err(invalid("lines", "multi-Lorentzian model needs at least one line"));
                }
                for l in lines {
                    if !(l.center > 0.0 && l.damping > 0.0 && l.amplitude >= 0.0) {
                        return Err(invalid("lines", format!("bad line {l:?}")));
                    }
                }
                if lines.iter().all(|l| l.amplitude == 0.0) {
                    return Err(invalid("lines", "all amplitudes are zero"));
                }
            }
        }
        Ok(())
    }

    fn is_instantaneous(&self) -> bool {
        matches!(self.kind, RamanKind::Instantaneous) || self.raman_fraction == 0.0
    }

    /// Normalised delayed response `∫ h_R(t) e^{i Omega t} dt`, equal to 1 at
    /// `Omega = 0`.
    pub fn delayed_spectrum(&self, omega: f64) -> Complex64 {
        let iw = Complex64::new(0.0, omega);
        match &self.kind {
            RamanKind::Instantaneous => Complex64::new(1.0, 0.0),
            RamanKind::SingleOscillator { tau1, tau2 } => {
                let a = 1.0 / tau2;
                let b = 1.0 / tau1;
                let p = a - iw;
                (a * a + b * b) / (p * p + b * b)
            }
            RamanKind::MultiLorentzian { lines } => {
                let mut num = Complex64::new(0.0, 0.0);
                let mut norm = 0.0;
                for l in lines {
                    let p = l.damping - iw;
                    num += l.amplitude * l.center / (p * p + l.center * l.center);
                    norm += l.amplitude * l.center
                        / (l.damping * l.damping + l.center * l.center);
                }
                num / norm
            }
        }
    }

    /// Delayed response in the time domain (pulse-width units).
    pub fn delayed_response(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match &self.kind {
            RamanKind::Instantaneous => 0.0,
            RamanKind::SingleOscillator { tau1, tau2 } => {
                (tau1 * tau1 + tau2 * tau2) / (tau1 * tau2 * tau2) * (-t / tau2).exp()
                    * (t / tau1).sin()
            }
            RamanKind::MultiLorentzian { lines } => {
                let norm: f64 = lines
                    .iter()
                    .map(|l| l.amplitude * l.center / (l.damping * l.damping + l.center * l.center))
                    .sum();
                lines
                    .iter()
                    .map(|l| l.amplitude * (-l.damping * t).exp() * (l.center * t).sin())
                    .sum::<f64>()
                    / norm
            }
        }
    }
}

/// `h~(Omega_k) = (1 - f) + f h~_R(Omega_k)` on the grid.
pub fn response_spectrum(grid: &Grid, model: &RamanModel) -> Result<Vec<Complex64>> {
    model.validate()?;
    if model.is_instantaneous() {
        return Ok(vec![Complex64::new(1.0, 0.0); grid.n_points()]);
    }
    let f = model.raman_fraction;
    Ok(grid
        .omega()
        .iter()
        .map(|&w| {
            if w == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                (1.0 - f) + f * model.delayed_spectrum(w)
            }
        })
        .collect())
}

/// Bose occupation of a phonon at dimensionless detuning `omega`.
pub fn thermal_occupation(omega: f64, temperature: f64, scales: &Scales) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega.abs() / (scales.t0 * BOLTZMANN * temperature);
    1.0 / x.exp_m1()
}

/// Spectral density of the real Raman phase noise, per grid frequency.
///
/// `⟨Γ(tau, z) Γ(tau', z')⟩ = δ(z - z') ∫ dΩ/2π S(Ω) e^{-iΩ(tau - tau')}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RamanNoiseSpec {
    pub spectral_density: Vec<f64>,
}

impl RamanNoiseSpec {
    pub fn is_zero(&self) -> bool {
        self.spectral_density.iter().all(|&s| s == 0.0)
    }
}

/// `S(Ω) = |Im h~(Ω)| (n_th(|Ω|) + 1/2) * 2/nbar`.
///
/// The factor `2/nbar` follows from requiring that the phase noise restores
/// the field commutator `[phi, phi†] = δ/nbar` against the dissipative part
/// of the Raman coupling.
pub fn raman_noise_spec(grid: &Grid, model: &RamanModel, scales: &Scales) -> Result<RamanNoiseSpec> {
    let h = response_spectrum(grid, model)?;
    let f_scale = 2.0 / scales.nbar;
    let spectral_density = grid
        .omega()
        .iter()
        .zip(&h)
        .map(|(&w, hk)| {
            if w == 0.0 || hk.im == 0.0 {
                0.0
            } else {
                hk.im.abs() * (thermal_occupation(w, model.temperature, scales) + 0.5) * f_scale
            }
        })
        .collect();
    Ok(RamanNoiseSpec { spectral_density })
}

/// Writes `omega Re(h) Im(h) S` rows for inspection.
pub fn dump_response<W: Write>(
    mut out: W,
    grid: &Grid,
    h: &[Complex64],
    noise: &RamanNoiseSpec,
) -> std::io::Result<()> {
    writeln!(out, "# omega re_h im_h s_gamma")?;
    let mut idx: Vec<usize> = (0..grid.n_points()).collect();
    idx.sort_by(|&a, &b| grid.omega()[a].total_cmp(&grid.omega()[b]));
    for k in idx {
        writeln!(
            out,
            "{:.10e} {:.10e} {:.10e} {:.10e}",
            grid.omega()[k],
            h[k].re,
            h[k].im,
            noise.spectral_density[k]
        )?;
    }
    Ok(())
}
