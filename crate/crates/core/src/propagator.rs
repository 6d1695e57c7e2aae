//! Symmetric split-step integration of one stochastic trajectory.
//!
//! A step of length `dz` is `L(dz/2) N(dz) L(dz/2)` where `L` is the exact
//! spectral dispersion propagator and `N` the nonlinear block. Within `N`
//! the Kerr/Raman response, the Raman noise `Γ` and the GAWBS term `Gη` all
//! act as a pure phase at fixed `|φ|^2` and are applied exactly. When
//! self-steepening is on, `N` becomes `P(dz/2) S(dz) P(dz/2)` with `S` an
//! RK4 update of `-s ∂(|φ|^2 φ)/∂τ`.
//!
//! Consecutive half steps of `L` are fused, so a run costs one dispersion
//! multiply per step.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{linear_multiplier, Dispersion, Grid, Workspace};
use crate::parameters::PulseShape;
use crate::response::RamanNoiseSpec;
use crate::stochastic::{
    init_vacuum, raman_noise_amplitude, raman_noise_spectrum, sample_gawbs, Arm, Channel,
    GawbsModel, NoiseKey,
};

/// Largest allowed `s max|φ|^2 dz / dτ` for the explicit steepening update.
pub const STEEPENING_CFL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Toggles {
    /// Kerr and Raman response (and with it the Raman noise).
    pub nonlinear: bool,
    pub raman_noise: bool,
    pub gawbs: bool,
    pub third_order: bool,
    pub self_steepening: bool,
}

impl Toggles {
    /// Raman noise on; GAWBS, third-order dispersion and steepening off.
    pub fn pure() -> Self {
        Self {
            nonlinear: true,
            raman_noise: true,
            gawbs: false,
            third_order: false,
            self_steepening: false,
        }
    }

    /// Dispersion only, the coherent-state calibration setting.
    pub fn linear_only() -> Self {
        Self {
            nonlinear: false,
            raman_noise: false,
            gawbs: false,
            third_order: false,
            self_steepening: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub dz: f64,
    pub toggles: Toggles,
    pub b3: f64,
    pub s: f64,
    /// Raman noise is drawn per cell of `dz * 2^noise_levels` and split
    /// down to the step, so halving `dz` and adding a level keeps the same
    /// noise path.
    #[serde(default)]
    pub noise_levels: u32,
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dz > 0.0 && self.dz.is_finite()) {
            return Err(invalid("dz", format!("must be positive, got {}", self.dz)));
        }
        if !self.b3.is_finite() || !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(invalid("b3/s", "must be finite, s >= 0"));
        }
        if self.noise_levels > 32 {
            return Err(invalid("noise_levels", "at most 32"));
        }
        Ok(())
    }

    fn effective_b3(&self) -> f64 {
        if self.toggles.third_order {
            self.b3
        } else {
            0.0
        }
    }
}

/// One stochastic realisation of the envelope on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryField {
    pub values: Vec<Complex64>,
    pub z: f64,
    /// Integrated GAWBS phase `Σ G η dz`. The GAWBS term is uniform in τ,
    /// so it commutes with every other operator and can be divided out.
    pub gawbs_phase: f64,
    /// Number of nonlinear blocks applied so far (noise key index).
    pub steps: u64,
}

impl TrajectoryField {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self {
            values,
            z: 0.0,
            gawbs_phase: 0.0,
            steps: 0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite {
                step: self.steps,
                z: self.z,
                max_abs: self.max_abs(),
            })
        }
    }
}

/// Mean-field input pulse `A sech(τ)`, or a Gaussian of the same energy.
pub fn input_pulse(grid: &Grid, amplitude: f64, shape: PulseShape) -> Vec<Complex64> {
    grid.tau()
        .iter()
        .map(|&t| {
            let v = match shape {
                PulseShape::Sech => amplitude / t.cosh(),
                PulseShape::Gaussian => {
                    amplitude * (2.0 / std::f64::consts::PI.sqrt()).sqrt() * (-0.5 * t * t).exp()
                }
            };
            Complex64::new(v, 0.0)
        })
        .collect()
}

/// Where a trajectory's noise comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSource {
    pub master_seed: u64,
    pub trajectory: u64,
    pub arm: Arm,
}

impl NoiseSource {
    fn key(&self, step: u64, channel: Channel) -> NoiseKey {
        NoiseKey {
            master_seed: self.master_seed,
            trajectory: self.trajectory,
            arm: self.arm,
            step,
            channel,
        }
    }
}

/// Shared, read-only description of the equation being integrated.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Grid,
    cfg: StepConfig,
    dispersion: Dispersion,
    response: Vec<Complex64>,
    instantaneous: bool,
    noise_amplitude: Vec<f64>,
    noisy: bool,
    gawbs: GawbsModel,
    half_step: Vec<Complex64>,
    full_step: Vec<Complex64>,
}

impl Propagator {
    pub fn new(
        grid: Grid,
        cfg: StepConfig,
        anomalous: bool,
        response: Vec<Complex64>,
        noise: &RamanNoiseSpec,
        gawbs: GawbsModel,
    ) -> Result<Self> {
        cfg.validate()?;
        if response.len() != grid.n_points() {
            return Err(Error::GridMismatch(response.len(), grid.n_points()));
        }
        if noise.spectral_density.len() != grid.n_points() {
            return Err(Error::GridMismatch(noise.spectral_density.len(), grid.n_points()));
        }
        let dispersion = Dispersion {
            anomalous,
            b3: cfg.effective_b3(),
        };
        let instantaneous = response.iter().all(|h| *h == Complex64::new(1.0, 0.0));
        let noise_amplitude = if cfg.toggles.raman_noise && cfg.toggles.nonlinear {
            raman_noise_amplitude(&grid, noise)
        } else {
            vec![0.0; grid.n_points()]
        };
        let noisy = noise_amplitude.iter().any(|&a| a != 0.0);
        let half_step = linear_multiplier(&grid, &dispersion, 0.5 * cfg.dz);
        let full_step = linear_multiplier(&grid, &dispersion, cfg.dz);
        Ok(Self {
            grid,
            cfg,
            dispersion,
            response,
            instantaneous,
            noise_amplitude,
            noisy,
            gawbs,
            half_step,
            full_step,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> &StepConfig {
        &self.cfg
    }

    fn raman_noise_on(&self) -> bool {
        self.noisy
    }

    fn gawbs_on(&self) -> bool {
        self.cfg.toggles.gawbs
    }

    /// Mean field plus Wigner vacuum noise for one arm.
    pub fn initial_field(
        &self,
        amplitude: f64,
        shape: PulseShape,
        nbar: f64,
        source: NoiseSource,
        ws: &mut Workspace,
    ) -> TrajectoryField {
        let mut values = input_pulse(&self.grid, amplitude, shape);
        let vacuum = init_vacuum(&self.grid, nbar, source.key(0, Channel::Vacuum), ws);
        values.iter_mut().zip(vacuum).for_each(|(v, d)| *v += d);
        TrajectoryField::new(values)
    }

    pub fn stepper(&self, source: NoiseSource) -> Stepper<'_> {
        let n = self.grid.n_points();
        Stepper {
            prop: self,
            source,
            ws: self.grid.workspace(),
            buf: vec![Complex64::new(0.0, 0.0); n],
            noise: vec![Complex64::new(0.0, 0.0); n],
            k1: vec![Complex64::new(0.0, 0.0); n],
            tmp: vec![Complex64::new(0.0, 0.0); n],
        }
    }
}

/// Per-trajectory integrator state: FFT scratch and work buffers.
pub struct Stepper<'a> {
    prop: &'a Propagator,
    source: NoiseSource,
    ws: Workspace,
    buf: Vec<Complex64>,
    noise: Vec<Complex64>,
    k1: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Stepper<'_> {
    /// Exact dispersive propagation over `h`.
    pub fn linear(&mut self, field: &mut TrajectoryField, h: f64) {
        if h == 0.0 {
            return;
        }
        let p = self.prop;
        let owned;
        let mult: &[Complex64] = if h == p.cfg.dz {
            &p.full_step
        } else if h == 0.5 * p.cfg.dz {
            &p.half_step
        } else {
            owned = linear_multiplier(&p.grid, &p.dispersion, h);
            &owned
        };
        p.grid.forward(&mut field.values, &mut self.ws);
        field.values.iter_mut().zip(mult).for_each(|(v, m)| *v *= m);
        p.grid.backward(&mut field.values, &mut self.ws);
    }

    /// `K(τ) = ∫h(τ-τ')|φ(τ')|^2 dτ' + Γ(τ)` into `self.buf` (real parts).
    fn response_potential(&mut self, values: &[Complex64], with_noise: bool) {
        let p = self.prop;
        for (b, v) in self.buf.iter_mut().zip(values) {
            *b = Complex64::new(v.norm_sqr(), 0.0);
        }
        if p.instantaneous && !with_noise {
            return;
        }
        p.grid.forward(&mut self.buf, &mut self.ws);
        if !p.instantaneous {
            self.buf.iter_mut().zip(&p.response).for_each(|(b, h)| *b *= h);
        }
        if with_noise {
            self.buf.iter_mut().zip(&self.noise).for_each(|(b, g)| *b += g);
        }
        p.grid.backward(&mut self.buf, &mut self.ws);
    }

    /// `φ <- φ exp(i h (K + Gη))` with the potential in `self.buf`.
    fn apply_phase(&self, values: &mut [Complex64], h: f64, uniform: f64) {
        for (v, k) in values.iter_mut().zip(&self.buf) {
            *v *= Complex64::from_polar(1.0, h * (k.re + uniform));
        }
    }

    fn phase_only(&self, values: &mut [Complex64], h: f64, uniform: f64) {
        for v in values.iter_mut() {
            *v *= Complex64::from_polar(1.0, h * uniform);
        }
    }

    /// `-s ∂(|φ|^2 φ)/∂τ` of `input` into `out`.
    fn steepening_rhs(&mut self, input: &[Complex64], out: &mut Vec<Complex64>) {
        let p = self.prop;
        out.clear();
        out.extend(input.iter().map(|v| v * v.norm_sqr()));
        p.grid.derivative(out, &mut self.ws);
        let s = p.cfg.s;
        out.iter_mut().for_each(|v| *v *= -s);
    }

    fn steepening(&mut self, field: &mut TrajectoryField, h: f64) -> Result<()> {
        let p = self.prop;
        let peak = field.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        let courant = p.cfg.s * peak * h / p.grid.dt();
        if courant > STEEPENING_CFL {
            return Err(Error::SteepeningCfl {
                z: field.z,
                courant,
                limit: STEEPENING_CFL,
            });
        }
        // classic RK4; the explicit scheme is stable for this advective term
        // well beyond the Courant limit above
        let y0 = field.values.clone();
        let mut acc = y0.clone();
        let mut k = std::mem::take(&mut self.k1);
        let mut stage = std::mem::take(&mut self.tmp);
        let weights = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];
        let offsets = [0.5, 0.5, 1.0];
        stage.clear();
        stage.extend_from_slice(&y0);
        for i in 0..4 {
            self.steepening_rhs(&stage, &mut k);
            for (a, kv) in acc.iter_mut().zip(&k) {
                *a += kv * (h * weights[i]);
            }
            if i < 3 {
                for ((st, y), kv) in stage.iter_mut().zip(&y0).zip(&k) {
                    *st = y + kv * (h * offsets[i]);
                }
            }
        }
        self.k1 = k;
        self.tmp = stage;
        field.values = acc;
        Ok(())
    }

    /// Nonlinear block of one step, drawing this step's noise.
    pub fn nonlinear_step(&mut self, field: &mut TrajectoryField, h: f64) -> Result<()> {
        let p = self.prop;
        let step = field.steps;
        let toggles = p.cfg.toggles;

        let uniform = if p.gawbs_on() {
            let key = p
                .gawbs
                .key(self.source.master_seed, self.source.trajectory, self.source.arm, step);
            p.gawbs.magnitude * sample_gawbs(&p.gawbs, h, key)
        } else {
            0.0
        };
        field.gawbs_phase += h * uniform;

        let with_noise = toggles.nonlinear && p.raman_noise_on();
        if with_noise {
            raman_noise_spectrum(
                &p.noise_amplitude,
                h,
                self.source.key(step, Channel::Raman),
                p.cfg.noise_levels,
                &mut self.noise,
            );
        }

        let steepen = toggles.nonlinear && toggles.self_steepening && p.cfg.s != 0.0;
        if !toggles.nonlinear {
            if uniform != 0.0 {
                self.phase_only(&mut field.values, h, uniform);
            }
        } else if !steepen {
            self.response_potential(&field.values, with_noise);
            self.apply_phase(&mut field.values, h, uniform);
        } else {
            self.response_potential(&field.values, with_noise);
            self.apply_phase(&mut field.values, 0.5 * h, uniform);
            self.steepening(field, h)?;
            self.response_potential(&field.values, with_noise);
            self.apply_phase(&mut field.values, 0.5 * h, uniform);
        }
        field.steps += 1;
        field.z += h;
        field.check_finite()
    }

    /// One unfused symmetric step.
    pub fn strang_step(&mut self, field: &mut TrajectoryField, h: f64) -> Result<()> {
        if !(h > 0.0) {
            return Err(invalid("dz", "step must be positive"));
        }
        self.linear(field, 0.5 * h);
        self.nonlinear_step(field, h)?;
        self.linear(field, 0.5 * h);
        Ok(())
    }

    /// Integrates to `z_end` with fused half steps; the last step is
    /// shortened so the field lands on `z_end` exactly.
    pub fn advance_to(&mut self, field: &mut TrajectoryField, z_end: f64) -> Result<()> {
        let span = z_end - field.z;
        if span < 0.0 {
            return Err(invalid("z_end", "cannot propagate backwards"));
        }
        if span == 0.0 {
            return Ok(());
        }
        let dz = self.prop.cfg.dz;
        let n = ((span / dz) * (1.0 - 1e-12)).ceil().max(1.0) as u64;
        let last = span - (n - 1) as f64 * dz;
        let start = field.z;
        let size = |i: u64| if i + 1 == n { last } else { dz };

        self.linear(field, 0.5 * size(0));
        for i in 0..n {
            let h = size(i);
            self.nonlinear_step(field, h)?;
            let next = if i + 1 < n { 0.5 * size(i + 1) } else { 0.0 };
            self.linear(field, 0.5 * h + next);
        }
        field.z = start + span;
        field.check_finite()
    }
}

/// Integrates a field from its current position over `length` (in units of
/// the dispersion length).
pub fn propagate(
    prop: &Propagator,
    field: &mut TrajectoryField,
    length: f64,
    source: NoiseSource,
) -> Result<()> {
    if !(length >= 0.0) {
        return Err(invalid("length", "must be >= 0"));
    }
    let z_end = field.z + length;
    prop.stepper(source).advance_to(field, z_end)
}

const SNAPSHOT_MAGIC: [u8; 4] = *b"PCFS";

/// Binary snapshot: magic, point count (u32), z (f64), step count (u64),
/// GAWBS phase (f64), then `n` complex doubles, all little-endian.
pub fn write_snapshot<W: Write>(mut out: W, field: &TrajectoryField) -> std::io::Result<()> {
    out.write_all(&SNAPSHOT_MAGIC)?;
    out.write_all(&(field.values.len() as u32).to_le_bytes())?;
    out.write_all(&field.z.to_le_bytes())?;
    out.write_all(&field.steps.to_le_bytes())?;
    out.write_all(&field.gawbs_phase.to_le_bytes())?;
    for v in &field.values {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut input: R) -> std::io::Result<TrajectoryField> {
    let mut header = [0u8; 32];
    input.read_exact(&mut header)?;
    if header[..4] != SNAPSHOT_MAGIC {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "bad snapshot magic",
        ));
    }
    let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let z = f64::from_le_bytes(header[8..16].try_into().unwrap());
    let steps = u64::from_le_bytes(header[16..24].try_into().unwrap());
    let gawbs_phase = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let mut values = Vec::with_capacity(n);
    let mut word = [0u8; 8];
    for _ in 0..n {
        input.read_exact(&mut word)?;
        let re = f64::from_le_bytes(word);
        input.read_exact(&mut word)?;
        values.push(Complex64::new(re, f64::from_le_bytes(word)));
    }
    Ok(TrajectoryField {
        values,
        z,
        gawbs_phase,
        steps,
    })
}
