//! Uniform time grid, its conjugate frequency grid, and the spectral
//! transforms every other module uses.
//!
//! Fourier convention (used everywhere in the crate):
//!
//! ```text
//! forward:  F_k = sum_j f_j exp(+i Omega_k tau_j)
//! backward: f_j = (1/N) sum_k F_k exp(-i Omega_k tau_j)
//! ```
//!
//! so that `d/dtau <-> -i Omega`. A spectral component with `Omega > 0` sits
//! on the blue side of the carrier.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};

#[derive(Clone)]
pub struct Grid {
    n_points: usize,
    t_window: f64,
    dt: f64,
    tau: Vec<f64>,
    omega: Vec<f64>,
    // rustfft's "inverse" is the unnormalised e^{+i} sum, i.e. our forward.
    fwd: Arc<dyn Fft<f64>>,
    bwd: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_points", &self.n_points)
            .field("t_window", &self.t_window)
            .field("dt", &self.dt)
            .finish()
    }
}

pub fn make_grid(n_points: usize, t_window: f64) -> Result<Grid> {
    if n_points < 64 || !n_points.is_power_of_two() {
        return Err(invalid(
            "n_points",
            format!("must be a power of two >= 64, got {n_points}"),
        ));
    }
    if !(t_window > 0.0 && t_window.is_finite()) {
        return Err(invalid("t_window", format!("must be positive, got {t_window}")));
    }
    let dt = 2.0 * t_window / n_points as f64;
    let tau = (0..n_points).map(|j| -t_window + j as f64 * dt).collect();
    let d_omega = 2.0 * PI / (n_points as f64 * dt);
    let omega = (0..n_points)
        .map(|k| {
            let signed = if k < n_points / 2 {
                k as isize
            } else {
                k as isize - n_points as isize
            };
            signed as f64 * d_omega
        })
        .collect();

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_inverse(n_points);
    let bwd = planner.plan_fft_forward(n_points);
    let scratch_len = fwd
        .get_inplace_scratch_len()
        .max(bwd.get_inplace_scratch_len());

    Ok(Grid {
        n_points,
        t_window,
        dt,
        tau,
        omega,
        fwd,
        bwd,
        scratch_len,
    })
}

impl Grid {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn t_window(&self) -> f64 {
        self.t_window
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Window length `N dt`.
    pub fn period(&self) -> f64 {
        self.n_points as f64 * self.dt
    }

    pub fn d_omega(&self) -> f64 {
        2.0 * PI / self.period()
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    /// Angular frequencies in standard DFT order (0, positive, negative).
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            scratch: vec![Complex64::new(0.0, 0.0); self.scratch_len],
        }
    }

    pub fn forward(&self, data: &mut [Complex64], ws: &mut Workspace) {
        self.fwd.process_with_scratch(data, &mut ws.scratch);
    }

    pub fn backward(&self, data: &mut [Complex64], ws: &mut Workspace) {
        self.bwd.process_with_scratch(data, &mut ws.scratch);
        let norm = 1.0 / self.n_points as f64;
        data.iter_mut().for_each(|v| *v *= norm);
    }

    /// `∫|f|^2 dtau` by the rectangle rule.
    pub fn energy(&self, field: &[Complex64]) -> f64 {
        field.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dt
    }

    /// Spectral derivative `d/dtau` in place.
    pub fn derivative(&self, data: &mut [Complex64], ws: &mut Workspace) {
        self.forward(data, ws);
        for (v, &w) in data.iter_mut().zip(&self.omega) {
            *v *= Complex64::new(0.0, -w);
        }
        self.backward(data, ws);
    }
}

/// Per-trajectory FFT scratch space. Not shared between threads.
#[derive(Debug, Clone)]
pub struct Workspace {
    scratch: Vec<Complex64>,
}

/// Linear (dispersive) part of the propagation equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispersion {
    pub anomalous: bool,
    pub b3: f64,
}

impl Dispersion {
    pub fn anomalous(b3: f64) -> Self {
        Self {
            anomalous: true,
            b3,
        }
    }
}

/// Exact spectral propagator of the dispersive terms over `dz`:
/// `exp(i dz (-Omega^2/2 + B3 Omega^3/6))` for anomalous dispersion.
pub fn linear_multiplier(grid: &Grid, dispersion: &Dispersion, dz: f64) -> Vec<Complex64> {
    let sign = if dispersion.anomalous { 1.0 } else { -1.0 };
    grid.omega
        .iter()
        .map(|&w| {
            let phase = dz * (-sign * 0.5 * w * w + dispersion.b3 * w * w * w / 6.0);
            Complex64::from_polar(1.0, phase)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn spacing_examples() {
        let g = make_grid(4096, 20.0).unwrap();
        assert_relative_eq!(g.dt(), 40.0 / 4096.0);
        let max = g.omega().iter().fold(0.0f64, |m, w| m.max(w.abs()));
        assert_relative_eq!(max, PI / g.dt(), max_relative = 1e-12);
        assert!((max - 321.7).abs() < 0.05);
        assert_eq!(make_grid(64, 1.0).unwrap().dt(), 0.03125);
    }

    #[test]
    fn conjugacy() {
        let g = make_grid(256, 7.0).unwrap();
        assert_relative_eq!(g.dt() * g.d_omega(), 2.0 * PI / 256.0, max_relative = 1e-14);
        assert_relative_eq!(g.omega()[1] - g.omega()[0], g.d_omega(), max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(make_grid(100, 1.0).is_err());
        assert!(make_grid(32, 1.0).is_err());
        assert!(make_grid(128, 0.0).is_err());
        assert!(make_grid(128, -1.0).is_err());
    }

    #[test]
    fn multiplier_examples() {
        let g = make_grid(64, 1.0).unwrap();
        let m = linear_multiplier(&g, &Dispersion::anomalous(0.7), 0.3);
        assert_eq!(m[0], Complex64::new(1.0, 0.0));

        // B3 = 0, dz = 0.1, Omega = 2 -> exp(-0.2 i)
        // window half-width pi gives dOmega = 1
        let g = make_grid(64, PI).unwrap();
        let k = g.omega().iter().position(|&w| (w - 2.0).abs() < 1e-9);
        let k = k.expect("grid constructed to contain Omega = 2");
        let m = linear_multiplier(&g, &Dispersion::anomalous(0.0), 0.1);
        let want = Complex64::from_polar(1.0, -0.2);
        assert!((m[k] - want).norm() < 1e-15);
    }

    #[test]
    fn derivative_sign_convention() {
        // d/dtau exp(-tau^2) = -2 tau exp(-tau^2)
        let g = make_grid(512, 12.0).unwrap();
        let mut ws = g.workspace();
        let mut f: Vec<Complex64> = g.tau().iter().map(|t| Complex64::from((-t * t).exp())).collect();
        g.derivative(&mut f, &mut ws);
        for (v, t) in f.iter().zip(g.tau()) {
            assert!((v.re + 2.0 * t * (-t * t).exp()).abs() < 1e-10);
            assert!(v.im.abs() < 1e-10);
        }
    }

    #[test]
    fn gaussian_dispersion_matches_closed_form() {
        let g = make_grid(1024, 20.0).unwrap();
        let mut ws = g.workspace();
        let mut f: Vec<Complex64> = g
            .tau()
            .iter()
            .map(|t| Complex64::from((-0.5 * t * t).exp()))
            .collect();
        let m = linear_multiplier(&g, &Dispersion::anomalous(0.0), 1.0);
        g.forward(&mut f, &mut ws);
        f.iter_mut().zip(&m).for_each(|(v, m)| *v *= m);
        g.backward(&mut f, &mut ws);

        let q = Complex64::new(1.0, 1.0);
        let mut err: f64 = 0.0;
        for (v, &t) in f.iter().zip(g.tau()) {
            let exact = (-(t * t) / (2.0 * q)).exp() / q.sqrt();
            err = err.max((v - exact).norm());
        }
        assert!(err < 1e-10, "max error {err}");
        // rms width sqrt(2) times the initial one
        let w2 = f
            .iter()
            .zip(g.tau())
            .map(|(v, t)| v.norm_sqr() * t * t)
            .sum::<f64>()
            / f.iter().map(|v| v.norm_sqr()).sum::<f64>();
        assert_relative_eq!(w2, 1.0, max_relative = 1e-8);
    }

    proptest! {
        #[test]
        fn multiplier_is_unitary(b3 in -10.0f64..10.0, dz in 1e-6f64..5.0, normal in any::<bool>()) {
            let g = make_grid(128, 10.0).unwrap();
            let d = Dispersion { anomalous: !normal, b3 };
            for m in linear_multiplier(&g, &d, dz) {
                prop_assert!((m.norm() - 1.0).abs() < 1e-14);
            }
        }

        #[test]
        fn transform_round_trip_and_parseval(seed in any::<u64>()) {
            let g = make_grid(256, 5.0).unwrap();
            let mut ws = g.workspace();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let orig: Vec<Complex64> = (0..256)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let mut f = orig.clone();
            g.forward(&mut f, &mut ws);
            let spectral: f64 = f.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.dt() / 256.0;
            prop_assert!((spectral - g.energy(&orig)).abs() < 1e-12 * g.energy(&orig));
            g.backward(&mut f, &mut ws);
            let scale = orig.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (a, b) in f.iter().zip(&orig) {
                prop_assert!((a - b).norm() < 1e-12 * scale);
            }
        }
    }
}
