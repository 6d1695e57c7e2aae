//! Sagnac recombination, Stokes samples and the dark-plane squeezing metric.
//!
//! Arm A becomes the x polarisation and arm B, after a π/2 phase shift, the
//! y polarisation, so the mean state is circular (`S3 ≈ S0`) and the
//! fluctuations of interest live in the S1–S2 plane.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::propagator::TrajectoryField;

const DB_PER_NEPER: f64 = 10.0 / std::f64::consts::LN_10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesSample {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

/// `(φx, φy) = (A, e^{iπ/2} B)`.
pub fn combine_sagnac(
    arm_a: &TrajectoryField,
    arm_b: &TrajectoryField,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if arm_a.values.len() != arm_b.values.len() {
        return Err(Error::GridMismatch(arm_a.values.len(), arm_b.values.len()));
    }
    let y = arm_b
        .values
        .iter()
        .map(|v| v * Complex64::i())
        .collect();
    Ok((arm_a.values.clone(), y))
}

/// Stokes sample of one Wigner realisation, `N_ij = nbar Σ conj(φi) φj dt`.
pub fn stokes_sample(phi_x: &[Complex64], phi_y: &[Complex64], nbar: f64, grid: &Grid) -> StokesSample {
    let scale = nbar * grid.dt();
    let mut nxx = 0.0;
    let mut nyy = 0.0;
    let mut nxy = Complex64::new(0.0, 0.0);
    for (x, y) in phi_x.iter().zip(phi_y) {
        nxx += x.norm_sqr();
        nyy += y.norm_sqr();
        nxy += x.conj() * y;
    }
    let (nxx, nyy, nxy) = (nxx * scale, nyy * scale, nxy * scale);
    StokesSample {
        s0: nxx + nyy,
        s1: nxx - nyy,
        s2: 2.0 * nxy.re,
        s3: 2.0 * nxy.im,
    }
}

/// Photon-number moments of a pair of arm fields, before recombination.
///
/// Keeping the GAWBS phase separate lets one ensemble be analysed both with
/// and without GAWBS: the phase is uniform in time, so removing it is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMoments {
    pub n_a: f64,
    pub n_b: f64,
    /// `nbar Σ conj(A) B dt`
    pub cross: Complex64,
    /// GAWBS phase of arm A minus that of arm B.
    pub gawbs_phase: f64,
}

impl PairMoments {
    pub fn from_arms(a: &TrajectoryField, b: &TrajectoryField, nbar: f64, grid: &Grid) -> Result<Self> {
        if a.values.len() != b.values.len() || a.values.len() != grid.n_points() {
            return Err(Error::GridMismatch(a.values.len(), b.values.len()));
        }
        let scale = nbar * grid.dt();
        let mut n_a = 0.0;
        let mut n_b = 0.0;
        let mut cross = Complex64::new(0.0, 0.0);
        for (x, y) in a.values.iter().zip(&b.values) {
            n_a += x.norm_sqr();
            n_b += y.norm_sqr();
            cross += x.conj() * y;
        }
        Ok(Self {
            n_a: n_a * scale,
            n_b: n_b * scale,
            cross: cross * scale,
            gawbs_phase: a.gawbs_phase - b.gawbs_phase,
        })
    }

    pub fn stokes(&self, include_gawbs: bool) -> StokesSample {
        let cross = if include_gawbs {
            self.cross
        } else {
            self.cross * Complex64::from_polar(1.0, self.gawbs_phase)
        };
        // N_xy = i * cross for φy = i B
        StokesSample {
            s0: self.n_a + self.n_b,
            s1: self.n_a - self.n_b,
            s2: -2.0 * cross.im,
            s3: 2.0 * cross.re,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StokesEnsemble {
    pub samples: Vec<StokesSample>,
}

/// Means and the S1–S2 covariance of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DarkPlaneStats {
    pub count: usize,
    pub mean: [f64; 4],
    /// `[[C11, C12], [C12, C22]]`, unbiased.
    pub covariance: [[f64; 2]; 2],
}

impl StokesEnsemble {
    pub fn new(samples: Vec<StokesSample>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Concatenation; statistics are computed in sample order, so merging in
    /// a fixed order keeps results bit-reproducible.
    pub fn merge(mut self, other: StokesEnsemble) -> Self {
        self.samples.extend(other.samples);
        self
    }

    pub fn stats(&self) -> Result<DarkPlaneStats> {
        let n = self.samples.len();
        if n < 2 {
            return Err(Error::EnsembleTooSmall(n));
        }
        let mut mean = [0.0; 4];
        for s in &self.samples {
            mean[0] += s.s0;
            mean[1] += s.s1;
            mean[2] += s.s2;
            mean[3] += s.s3;
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let (mut c11, mut c12, mut c22) = (0.0, 0.0, 0.0);
        for s in &self.samples {
            let d1 = s.s1 - mean[1];
            let d2 = s.s2 - mean[2];
            c11 += d1 * d1;
            c12 += d1 * d2;
            c22 += d2 * d2;
        }
        let norm = 1.0 / (n - 1) as f64;
        Ok(DarkPlaneStats {
            count: n,
            mean,
            covariance: [[c11 * norm, c12 * norm], [c12 * norm, c22 * norm]],
        })
    }
}

/// Variance of `cos θ S1 + sin θ S2` from a covariance matrix.
pub fn rotated_variance(cov: &[[f64; 2]; 2], theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    c * c * cov[0][0] + s * s * cov[1][1] + 2.0 * s * c * cov[0][1]
}

/// How the dark-plane variance is normalised to shot noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Normalisation {
    /// `|⟨S3⟩|`, the coherent-state variance.
    MeanS3,
    /// `|⟨S3⟩|` times the metric a coherent calibration run returned.
    Calibrated { shot_noise_ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingResult {
    pub m_min: f64,
    pub m_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub m_min_db: f64,
    pub m_max_db: f64,
    pub sem_db: f64,
    /// Set when the ensemble had no spread at all.
    pub degenerate: bool,
}

pub fn to_db(m: f64) -> f64 {
    10.0 * m.log10()
}

fn wrap_angle(theta: f64) -> f64 {
    theta.rem_euclid(std::f64::consts::PI)
}

/// Relative standard error of the sample variance along `dir`, with the
/// kurtosis estimated from the samples.
fn relative_variance_error(samples: &[StokesSample], mean: &[f64; 4], dir: (f64, f64)) -> f64 {
    let n = samples.len() as f64;
    let (mut m2, mut m4) = (0.0, 0.0);
    for s in samples {
        let x = dir.0 * (s.s1 - mean[1]) + dir.1 * (s.s2 - mean[2]);
        let x2 = x * x;
        m2 += x2;
        m4 += x2 * x2;
    }
    let var = m2 / (n - 1.0);
    let m4 = m4 / n;
    if var == 0.0 {
        return 0.0;
    }
    let var_of_var = ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0);
    var_of_var.sqrt() / var
}

/// Minimum and maximum of the squeezing metric over all dark-plane angles.
pub fn dark_plane_extrema(ensemble: &StokesEnsemble, norm: Normalisation) -> Result<SqueezingResult> {
    let stats = ensemble.stats()?;
    let s3 = stats.mean[3].abs();
    if !(s3 > 0.0) {
        return Err(Error::VanishingS3);
    }
    let denom = match norm {
        Normalisation::MeanS3 => s3,
        Normalisation::Calibrated { shot_noise_ratio } => s3 * shot_noise_ratio,
    };
    let [[a, b], [_, c]] = stats.covariance;
    let half_trace = 0.5 * (a + c);
    let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let lambda_max = half_trace + radius;
    let lambda_min = (half_trace - radius).max(0.0);
    let theta_max = wrap_angle(0.5 * b.atan2(0.5 * (a - c)) * 1.0);
    let theta_max = if radius == 0.0 { 0.0 } else { theta_max };
    let theta_min = wrap_angle(theta_max + std::f64::consts::FRAC_PI_2);

    if lambda_max == 0.0 {
        return Ok(SqueezingResult {
            m_min: 0.0,
            m_max: 0.0,
            theta_min,
            theta_max,
            m_min_db: f64::NEG_INFINITY,
            m_max_db: f64::NEG_INFINITY,
            sem_db: 0.0,
            degenerate: true,
        });
    }

    let dir_min = (theta_min.cos(), theta_min.sin());
    let dir_max = (theta_max.cos(), theta_max.sin());
    let rel = relative_variance_error(&ensemble.samples, &stats.mean, dir_min)
        .max(relative_variance_error(&ensemble.samples, &stats.mean, dir_max));

    let m_min = lambda_min / denom;
    let m_max = lambda_max / denom;
    Ok(SqueezingResult {
        m_min,
        m_max,
        theta_min,
        theta_max,
        m_min_db: to_db(m_min),
        m_max_db: to_db(m_max),
        sem_db: DB_PER_NEPER * rel,
        degenerate: lambda_min == 0.0,
    })
}

/// Beam-splitter loss: `M -> (1 - ε) M + ε`.
pub fn apply_loss(m: f64, loss: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&loss) {
        return Err(invalid("loss_fraction", format!("must lie in [0, 1], got {loss}")));
    }
    if !(m >= 0.0) {
        return Err(invalid("metric", format!("must be >= 0, got {m}")));
    }
    Ok((1.0 - loss) * m + loss)
}

/// Imperfect overlap of the recombined pulses acts as a loss `1 - V`.
pub fn apply_overlap(m: f64, visibility: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(invalid(
            "spectral_overlap",
            format!("must lie in [0, 1], got {visibility}"),
        ));
    }
    apply_loss(m, 1.0 - visibility)
}

impl SqueezingResult {
    /// The same result seen through an additional loss.
    pub fn with_loss(&self, loss: f64) -> Result<Self> {
        if self.degenerate && self.m_max == 0.0 {
            return Ok(*self);
        }
        let m_min = apply_loss(self.m_min, loss)?;
        let m_max = apply_loss(self.m_max, loss)?;
        // relative error shrinks by the fraction of M that still fluctuates
        let shrink = if m_min > 0.0 {
            (1.0 - loss) * self.m_min / m_min
        } else {
            1.0
        };
        Ok(Self {
            m_min,
            m_max,
            m_min_db: to_db(m_min),
            m_max_db: to_db(m_max),
            sem_db: self.sem_db * shrink,
            ..*self
        })
    }

    pub fn with_overlap(&self, visibility: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(invalid(
                "spectral_overlap",
                format!("must lie in [0, 1], got {visibility}"),
            ));
        }
        self.with_loss(1.0 - visibility)
    }

    pub fn is_squeezed(&self) -> bool {
        self.m_min < 1.0
    }
}
