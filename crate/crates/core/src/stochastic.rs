//! Randomness for the Wigner trajectories.
//!
//! Every draw comes from a ChaCha8 stream whose 256-bit key is the
//! [`NoiseKey`] itself, so a draw depends only on *what* it is for and never
//! on the order in which workers happen to ask for it.
//!
//! Spectral noise is drawn mode by mode in order of increasing |k|. Two grids
//! with the same window but different point counts therefore share the
//! draws of their common low-frequency modes, which keeps resolution
//! comparisons paired.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::grid::{Grid, Workspace};
use crate::response::RamanNoiseSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Vacuum,
    Raman,
    Gawbs,
    /// Bridge draws splitting Raman increments at a refinement level (>= 1).
    RamanBridge(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoiseKey {
    pub master_seed: u64,
    pub trajectory: u64,
    pub arm: Arm,
    pub step: u64,
    pub channel: Channel,
}

impl NoiseKey {
    pub fn rng(&self) -> ChaCha8Rng {
        let arm = match self.arm {
            Arm::A => 0u64,
            Arm::B => 1,
        };
        let channel = match self.channel {
            Channel::Vacuum => 0u64,
            Channel::Raman => 1,
            Channel::Gawbs => 2,
            Channel::RamanBridge(level) => 2 + level as u64,
        };
        let words = [
            self.master_seed,
            self.trajectory,
            (channel << 8) | arm,
            self.step,
        ];
        let mut seed = [0u8; 32];
        for (chunk, w) in seed.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// DFT indices ordered 0, 1, -1, 2, -2, ..., ending with the Nyquist bin.
fn ordered_modes(n: usize) -> impl Iterator<Item = usize> {
    std::iter::once(0)
        .chain((1..n / 2).flat_map(move |k| [k, n - k]))
        .chain(std::iter::once(n / 2))
}

/// Initial Wigner vacuum fluctuation: half a photon per mode, i.e.
/// `⟨|δφ_j|^2⟩ = 1 / (2 nbar dt)` independently per time bin.
pub fn init_vacuum(grid: &Grid, nbar: f64, key: NoiseKey, ws: &mut Workspace) -> Vec<Complex64> {
    let n = grid.n_points();
    let mut rng = key.rng();
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    // mode amplitude a_k with ⟨|a_k|^2⟩ = 1/2, field = Σ a_k e^{-iΩτ} / sqrt(nbar T)
    let scale = n as f64 / (nbar * grid.period()).sqrt() * 0.5;
    for k in ordered_modes(n) {
        spec[k] = Complex64::new(normal(&mut rng), normal(&mut rng)) * scale;
    }
    grid.backward(&mut spec, ws);
    spec
}

/// Per-bin amplitude `sqrt(S_k / dt)` used by [`raman_noise_spectrum`].
pub fn raman_noise_amplitude(grid: &Grid, spec: &RamanNoiseSpec) -> Vec<f64> {
    spec.spectral_density
        .iter()
        .map(|s| (s / grid.dt()).sqrt())
        .collect()
}

/// Unit normals in spectral draw order: DC, then (re, im) for k = 1..n/2,
/// then Nyquist.
fn spectral_normals(n: usize, key: NoiseKey) -> Vec<f64> {
    let mut rng = key.rng();
    (0..n).map(|_| normal(&mut rng)).collect()
}

/// Forward transform of one step's Raman noise, written into `out`.
///
/// The time-domain field `Γ_j` it represents is real, stationary, with
/// `⟨|Γ~_k|^2⟩ = N S_k / (dt dz)` so that the phase `Γ dz` accumulates
/// white in z.
///
/// With `levels > 0` the step is one of `2^levels` equal pieces of a noise
/// cell keyed by `key.step >> levels`, and the pieces are obtained by
/// Brownian-bridge splitting. Halving the step while adding a level thus
/// refines the same noise path instead of drawing a new one.
pub fn raman_noise_spectrum(amplitude: &[f64], dz: f64, key: NoiseKey, levels: u32, out: &mut [Complex64]) {
    let n = out.len();
    let step = key.step;
    let mut x = spectral_normals(
        n,
        NoiseKey {
            step: step >> levels,
            ..key
        },
    );
    for level in 1..=levels {
        let cell = step >> (levels - level);
        let z = spectral_normals(
            n,
            NoiseKey {
                step: cell >> 1,
                channel: Channel::RamanBridge(level as u8),
                ..key
            },
        );
        let sign = if cell & 1 == 0 { 1.0 } else { -1.0 };
        for (a, b) in x.iter_mut().zip(&z) {
            *a = (*a + sign * b) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }

    let root_n = (n as f64).sqrt();
    let inv_dz = 1.0 / dz.sqrt();
    out[0] = Complex64::new(amplitude[0] * inv_dz * root_n * x[0], 0.0);
    let half = root_n * std::f64::consts::FRAC_1_SQRT_2 * inv_dz;
    for k in 1..n / 2 {
        let w = Complex64::new(x[2 * k - 1], x[2 * k]) * (amplitude[k] * half);
        out[k] = w;
        out[n - k] = w.conj();
    }
    out[n / 2] = Complex64::new(amplitude[n / 2] * inv_dz * root_n * x[n - 1], 0.0);
}

/// One step's real Raman noise field `Γ_j`.
pub fn sample_raman_noise(
    grid: &Grid,
    spec: &RamanNoiseSpec,
    dz: f64,
    key: NoiseKey,
    ws: &mut Workspace,
) -> Vec<f64> {
    let amp = raman_noise_amplitude(grid, spec);
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.n_points()];
    raman_noise_spectrum(&amp, dz, key, 0, &mut buf);
    grid.backward(&mut buf, ws);
    buf.into_iter().map(|v| v.re).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GawbsCorrelation {
    /// Independent fluctuation in every slice of fibre.
    WhiteInZ,
    /// One frozen fluctuation per trajectory and arm.
    PerFibreConstant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterArm {
    Independent,
    Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GawbsModel {
    pub magnitude: f64,
    pub correlation: GawbsCorrelation,
    pub inter_arm: InterArm,
}

impl GawbsModel {
    pub fn white(magnitude: f64) -> Self {
        Self {
            magnitude,
            correlation: GawbsCorrelation::WhiteInZ,
            inter_arm: InterArm::Independent,
        }
    }

    /// Key for the η draw of one step, folding in the correlation options.
    pub fn key(&self, master_seed: u64, trajectory: u64, arm: Arm, step: u64) -> NoiseKey {
        NoiseKey {
            master_seed,
            trajectory,
            arm: match self.inter_arm {
                InterArm::Independent => arm,
                InterArm::Common => Arm::A,
            },
            step: match self.correlation {
                GawbsCorrelation::WhiteInZ => step,
                GawbsCorrelation::PerFibreConstant => 0,
            },
            channel: Channel::Gawbs,
        }
    }
}

/// The index fluctuation η for one step. White in z it has variance `1/dz`
/// so the phase `G η dz` diffuses with variance `G^2 L`; frozen per fibre it
/// has unit variance.
pub fn sample_gawbs(model: &GawbsModel, dz: f64, key: NoiseKey) -> f64 {
    let xi = normal(&mut key.rng());
    match model.correlation {
        GawbsCorrelation::WhiteInZ => xi / dz.sqrt(),
        GawbsCorrelation::PerFibreConstant => xi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn key(trajectory: u64, channel: Channel) -> NoiseKey {
        NoiseKey {
            master_seed: 7,
            trajectory,
            arm: Arm::A,
            step: 0,
            channel,
        }
    }

    #[test]
    fn mode_order_covers_every_bin_once() {
        for n in [64usize, 128, 1024] {
            let mut seen = vec![false; n];
            for k in ordered_modes(n) {
                assert!(!seen[k]);
                seen[k] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn vacuum_is_deterministic() {
        let g = make_grid(128, 10.0).unwrap();
        let mut ws = g.workspace();
        let a = init_vacuum(&g, 1e3, key(3, Channel::Vacuum), &mut ws);
        let b = init_vacuum(&g, 1e3, key(3, Channel::Vacuum), &mut ws);
        assert_eq!(a, b);
        let c = init_vacuum(&g, 1e3, key(4, Channel::Vacuum), &mut ws);
        assert_ne!(a, c);
    }

    #[test]
    fn vacuum_moments() {
        let g = make_grid(64, 4.0).unwrap();
        let mut ws = g.workspace();
        let nbar = 50.0;
        let draws = 40_000;
        let n = g.n_points();
        let mut mean = vec![Complex64::new(0.0, 0.0); n];
        let mut photons = Vec::with_capacity(draws);
        for t in 0..draws as u64 {
            let f = init_vacuum(&g, nbar, key(t, Channel::Vacuum), &mut ws);
            for (m, v) in mean.iter_mut().zip(&f) {
                *m += v;
            }
            photons.push(f.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.dt() * nbar);
        }
        // per-bin standard error of the real part: sqrt(1/(4 nbar dt draws))
        let se = (1.0 / (4.0 * nbar * g.dt() * draws as f64)).sqrt();
        for m in &mean {
            let m = m / draws as f64;
            assert!(m.re.abs() < 4.0 * se && m.im.abs() < 4.0 * se, "{m} vs se {se}");
        }
        // half a photon per mode; the count is a sum of n exponentials of
        // mean 1/2 so its spread is sqrt(n)/2
        let avg = photons.iter().sum::<f64>() / draws as f64;
        let se = (n as f64).sqrt() / 2.0 / (draws as f64).sqrt();
        assert!((avg - n as f64 / 2.0).abs() < 3.0 * se, "{avg}");
    }

    #[test]
    fn vacuum_shares_low_modes_across_resolutions() {
        let coarse = make_grid(128, 10.0).unwrap();
        let fine = make_grid(256, 10.0).unwrap();
        let k = key(1, Channel::Vacuum);
        let mut a = init_vacuum(&coarse, 10.0, k, &mut coarse.workspace());
        let mut b = init_vacuum(&fine, 10.0, k, &mut fine.workspace());
        coarse.forward(&mut a, &mut coarse.workspace());
        fine.forward(&mut b, &mut fine.workspace());
        // same physical mode amplitude: F_k dt agrees
        for m in 1..60usize {
            let x = a[m] * coarse.dt();
            let y = b[m] * fine.dt();
            assert!((x - y).norm() < 1e-12 * x.norm().max(1e-300));
            let x = a[128 - m] * coarse.dt();
            let y = b[256 - m] * fine.dt();
            assert!((x - y).norm() < 1e-12 * x.norm().max(1e-300));
        }
    }

    #[test]
    fn zero_density_gives_zero_noise() {
        let g = make_grid(64, 4.0).unwrap();
        let spec = RamanNoiseSpec {
            spectral_density: vec![0.0; 64],
        };
        let gamma = sample_raman_noise(&g, &spec, 0.1, key(0, Channel::Raman), &mut g.workspace());
        assert!(gamma.iter().all(|&v| v == 0.0));
    }

    fn shaped_spec(g: &Grid) -> RamanNoiseSpec {
        RamanNoiseSpec {
            spectral_density: g
                .omega()
                .iter()
                .map(|&w| if w == 0.0 { 0.0 } else { w.abs() * (-0.5 * w * w).exp() })
                .collect(),
        }
    }

    #[test]
    fn raman_noise_periodogram_matches_density() {
        let g = make_grid(64, 8.0).unwrap();
        let mut ws = g.workspace();
        let spec = shaped_spec(&g);
        let dz = 0.01;
        let draws = 40_000;
        let mut power = vec![0.0; 64];
        for t in 0..draws {
            let gamma = sample_raman_noise(&g, &spec, dz, key(t, Channel::Raman), &mut ws);
            assert!(gamma.iter().all(|v| v.is_finite()));
            let mut buf: Vec<Complex64> = gamma.iter().map(|&v| Complex64::from(v)).collect();
            g.forward(&mut buf, &mut ws);
            for (p, v) in power.iter_mut().zip(&buf) {
                *p += v.norm_sqr();
            }
        }
        // periodogram estimate of S: |Γ~_k|^2 dt dz / N
        let max = spec.spectral_density.iter().cloned().fold(0.0, f64::max);
        let mut sq = 0.0;
        let mut count = 0;
        for k in 0..64 {
            let s = spec.spectral_density[k];
            if s > 0.1 * max {
                let est = power[k] / draws as f64 * g.dt() * dz / 64.0;
                sq += ((est - s) / s).powi(2);
                count += 1;
            }
        }
        let rms = (sq / count as f64).sqrt();
        assert!(rms < 0.05, "rms relative deviation {rms}");
    }

    #[test]
    fn raman_noise_is_white_in_z() {
        let g = make_grid(64, 8.0).unwrap();
        let mut ws = g.workspace();
        let spec = shaped_spec(&g);
        let dz = 0.05;
        let trajectories = 10_000u64;
        let steps = [10u64, 20];
        let mut var = [0.0; 2];
        for (i, &n_steps) in steps.iter().enumerate() {
            let mut acc = 0.0;
            for t in 0..trajectories {
                let mut phase = 0.0;
                for s in 0..n_steps {
                    let key = NoiseKey {
                        master_seed: 11,
                        trajectory: t,
                        arm: Arm::B,
                        step: s,
                        channel: Channel::Raman,
                    };
                    phase += sample_raman_noise(&g, &spec, dz, key, &mut ws)[32] * dz;
                }
                acc += phase * phase;
            }
            var[i] = acc / trajectories as f64;
        }
        // predicted one-point variance per unit z: ∫ S dΩ / 2π
        let slope = spec.spectral_density.iter().sum::<f64>() / g.period();
        for (i, &n) in steps.iter().enumerate() {
            let want = slope * n as f64 * dz;
            assert!((var[i] / want - 1.0).abs() < 0.05, "{} vs {}", var[i], want);
        }
    }

    #[test]
    fn gawbs_white_variance_grows_linearly() {
        let model = GawbsModel::white(0.5);
        let dz = 0.1;
        let trajectories = 10_000u64;
        let mut var = [0.0; 2];
        for (i, steps) in [20u64, 40].into_iter().enumerate() {
            let mut acc = 0.0;
            for t in 0..trajectories {
                let phase: f64 = (0..steps)
                    .map(|s| model.magnitude * sample_gawbs(&model, dz, model.key(3, t, Arm::A, s)) * dz)
                    .sum();
                acc += phase * phase;
            }
            var[i] = acc / trajectories as f64;
        }
        assert!((var[1] / var[0] - 2.0).abs() < 0.1, "ratio {}", var[1] / var[0]);
        assert!((var[0] / (0.25 * 2.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn gawbs_correlation_options() {
        let mut model = GawbsModel::white(1.0);
        model.inter_arm = InterArm::Common;
        for s in 0..5 {
            let a = sample_gawbs(&model, 0.1, model.key(1, 2, Arm::A, s));
            let b = sample_gawbs(&model, 0.1, model.key(1, 2, Arm::B, s));
            assert_eq!(a, b);
        }
        let model = GawbsModel {
            correlation: GawbsCorrelation::PerFibreConstant,
            ..GawbsModel::white(1.0)
        };
        let first = sample_gawbs(&model, 0.1, model.key(1, 2, Arm::A, 0));
        for s in 1..5 {
            assert_eq!(sample_gawbs(&model, 0.1, model.key(1, 2, Arm::A, s)), first);
        }
        let indep = GawbsModel::white(1.0);
        assert_ne!(
            sample_gawbs(&indep, 0.1, indep.key(1, 2, Arm::A, 0)),
            sample_gawbs(&indep, 0.1, indep.key(1, 2, Arm::B, 0))
        );
    }

    #[test]
    fn distinct_keys_are_uncorrelated() {
        let n = 20_000;
        let pairs = [
            (key(0, Channel::Raman), key(1, Channel::Raman)),
            (key(0, Channel::Raman), key(0, Channel::Gawbs)),
            (
                key(0, Channel::Vacuum),
                NoiseKey {
                    arm: Arm::B,
                    ..key(0, Channel::Vacuum)
                },
            ),
            (
                key(0, Channel::Vacuum),
                NoiseKey {
                    master_seed: 10,
                    ..key(0, Channel::Vacuum)
                },
            ),
        ];
        for (a, b) in pairs {
            let mut ra = a.rng();
            let mut rb = b.rng();
            let c: f64 = (0..n).map(|_| normal(&mut ra) * normal(&mut rb)).sum::<f64>() / n as f64;
            assert!(c.abs() < 4.0 / (n as f64).sqrt(), "correlation {c}");
        }
    }

    #[test]
    fn bridge_refinement_sums_to_the_coarse_increment() {
        let n = 64;
        let amp: Vec<f64> = (0..n).map(|k| 0.3 + 0.01 * k as f64).collect();
        let dz = 0.02;
        let mut coarse = vec![Complex64::new(0.0, 0.0); n];
        let mut fine = vec![Complex64::new(0.0, 0.0); n];
        for cell in 0..5u64 {
            raman_noise_spectrum(&amp, dz, NoiseKey { step: cell, ..key(2, Channel::Raman) }, 0, &mut coarse);
            let mut sum = vec![Complex64::new(0.0, 0.0); n];
            for child in 0..4u64 {
                let k = NoiseKey {
                    step: 4 * cell + child,
                    ..key(2, Channel::Raman)
                };
                raman_noise_spectrum(&amp, dz / 4.0, k, 2, &mut fine);
                sum.iter_mut().zip(&fine).for_each(|(s, f)| *s += f * (dz / 4.0));
            }
            for (s, c) in sum.iter().zip(&coarse) {
                assert!((s - c * dz).norm() < 1e-12 * (1.0 + c.norm()));
            }
        }
    }

    #[test]
    fn bridge_children_have_the_right_variance() {
        let n = 16;
        let amp = vec![1.0; n];
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let draws = 20_000u64;
        let mut acc = 0.0;
        for t in 0..draws {
            raman_noise_spectrum(&amp, 0.5, NoiseKey { step: 3, ..key(t, Channel::Raman) }, 3, &mut out);
            acc += out[2].norm_sqr();
        }
        // ⟨|Γ~_k|^2⟩ = N amp^2 / dz
        let expected = n as f64 / 0.5;
        let mean = acc / draws as f64;
        assert!((mean / expected - 1.0).abs() < 0.04, "{mean} vs {expected}");
    }

}
