//! Ensemble runs and the studies built on them.
//!
//! A *point* is one input energy: `paths` trajectories, each propagating
//! both Sagnac arms and recording pair moments at a list of fibre lengths.
//! Loss, spectral overlap and GAWBS are all applied at analysis time, so a
//! single ensemble yields every layer of an energy sweep and every length
//! of a length scan.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{make_grid, Grid};
use crate::measurement::{dark_plane_extrema, Normalisation, PairMoments, SqueezingResult, StokesEnsemble};
use crate::parameters::{arm_amplitude, derive_scales, FibreParams, PulseParams, PulseShape, Scales};
use crate::propagator::{NoiseSource, Propagator, StepConfig, Toggles, TrajectoryField};
use crate::response::{raman_noise_spec, response_spectrum, RamanModel};
use crate::stochastic::{Arm, GawbsModel};

/// Everything a simulation point depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub fibre: FibreParams,
    /// Pulse width in ps.
    pub t0: f64,
    pub shape: PulseShape,
    pub n_points: usize,
    pub t_window: f64,
    pub dz: f64,
    pub toggles: Toggles,
    /// Relative third-order dispersion used when `toggles.third_order`.
    pub b3: f64,
    /// Self-steepening coefficient; `None` takes `1/(omega0 t0)`.
    pub s: Option<f64>,
    pub raman: RamanModel,
    pub gawbs: GawbsModel,
    pub normalisation: Normalisation,
    pub seed: u64,
    pub workers: usize,
    /// See [`StepConfig::noise_levels`].
    #[serde(default)]
    pub noise_levels: u32,
}

impl Setup {
    /// NL-PM-750 at 810 nm with 68 fs pulses, Raman noise on, everything
    /// else off.
    pub fn nl_pm_750_defaults() -> Self {
        let fibre = FibreParams::nl_pm_750();
        Self {
            gawbs: GawbsModel::white(fibre.gawbs_magnitude),
            fibre,
            t0: 0.068,
            shape: PulseShape::Sech,
            n_points: 4096,
            t_window: 20.0,
            dz: 1e-3,
            toggles: Toggles::pure(),
            b3: 0.0,
            s: None,
            raman: RamanModel::silica(0.068),
            normalisation: Normalisation::MeanS3,
            seed: 1,
            workers: 1,
            noise_levels: 0,
        }
    }

    pub fn scales(&self) -> Result<Scales> {
        derive_scales(&self.fibre, &PulseParams::sech(self.t0, 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        self.scales()?;
        self.raman.validate()?;
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        if !(self.gawbs.magnitude >= 0.0) {
            return Err(invalid("gawbs_magnitude", "must be >= 0"));
        }
        self.step_config(&self.scales()?).validate()
    }

    fn step_config(&self, scales: &Scales) -> StepConfig {
        StepConfig {
            dz: self.dz,
            toggles: self.toggles,
            b3: self.b3,
            s: self.s.unwrap_or(scales.s),
            noise_levels: self.noise_levels,
        }
    }
}

/// What is applied to an ensemble at analysis time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Lumped linear loss, if any.
    pub loss: Option<f64>,
    /// Spectral overlap (visibility), if any.
    pub overlap: Option<f64>,
    /// Keep the GAWBS phase (requires a propagation with GAWBS on).
    pub gawbs: bool,
}

impl Layer {
    pub const PURE: Layer = Layer {
        loss: None,
        overlap: None,
        gawbs: false,
    };

    /// The four layered curves of an energy sweep: pure, +loss, +overlap,
    /// +GAWBS.
    pub fn fig1_presets(loss: f64, overlap: f64) -> [Layer; 4] {
        [
            Layer::PURE,
            Layer {
                loss: Some(loss),
                ..Layer::PURE
            },
            Layer {
                loss: Some(loss),
                overlap: Some(overlap),
                gawbs: false,
            },
            Layer {
                loss: Some(loss),
                overlap: Some(overlap),
                gawbs: true,
            },
        ]
    }

    pub fn apply(&self, raw: &SqueezingResult) -> Result<SqueezingResult> {
        let mut r = *raw;
        if let Some(eps) = self.loss {
            r = r.with_loss(eps)?;
        }
        if let Some(v) = self.overlap {
            r = r.with_overlap(v)?;
        }
        Ok(r)
    }
}

/// Per-record description of which effects were in play.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordToggles {
    pub loss: f64,
    pub overlap: f64,
    pub gawbs: f64,
    pub raman_noise: bool,
    pub b3: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// pJ, both arms.
    pub total_energy: f64,
    /// m.
    pub fibre_length: f64,
    pub toggles: RecordToggles,
    pub paths: usize,
    pub result: std::result::Result<SqueezingResult, String>,
    /// Seconds spent on the ensemble this record was taken from.
    pub wall_time: f64,
}

impl RunRecord {
    pub fn squeezing(&self) -> Option<&SqueezingResult> {
        self.result.as_ref().ok()
    }
}

/// Raw outcome of one ensemble: pair moments per length per trajectory.
#[derive(Debug, Clone)]
pub struct PointEnsemble {
    pub total_energy: f64,
    /// m.
    pub lengths: Vec<f64>,
    /// `moments[length][trajectory]`
    pub moments: Vec<Vec<PairMoments>>,
    pub wall_time: f64,
}

impl PointEnsemble {
    pub fn stokes(&self, length_index: usize, include_gawbs: bool) -> StokesEnsemble {
        StokesEnsemble::new(
            self.moments[length_index]
                .iter()
                .map(|m| m.stokes(include_gawbs))
                .collect(),
        )
    }

    pub fn paths(&self) -> usize {
        self.moments.first().map_or(0, |m| m.len())
    }
}

/// A [`Setup`] with its derived grids, spectra and worker pool.
pub struct Simulation {
    setup: Setup,
    scales: Scales,
    propagator: Propagator,
    pool: rayon::ThreadPool,
    progress: Option<Box<dyn Fn(&str) + Send + Sync>>,
}

impl std::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulation").field("setup", &self.setup).finish()
    }
}

/// Mixes a point index into the master seed so sweep points draw
/// independent noise while paired studies stay paired.
fn point_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Simulation {
    pub fn new(setup: Setup) -> Result<Self> {
        setup.validate()?;
        let scales = setup.scales()?;
        let grid = make_grid(setup.n_points, setup.t_window)?;
        let response = response_spectrum(&grid, &setup.raman)?;
        let noise = raman_noise_spec(&grid, &setup.raman, &scales)?;
        let mut toggles = setup.toggles;
        if setup.gawbs.magnitude == 0.0 {
            toggles.gawbs = false;
        }
        let cfg = StepConfig {
            toggles,
            ..setup.step_config(&scales)
        };
        let propagator = Propagator::new(grid, cfg, setup.fibre.anomalous, response, &noise, setup.gawbs)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(setup.workers)
            .build()
            .map_err(|e| invalid("workers", e.to_string()))?;
        Ok(Self {
            setup,
            scales,
            propagator,
            pool,
            progress: None,
        })
    }

    pub fn with_progress(mut self, f: impl Fn(&str) + Send + Sync + 'static) -> Self {
        self.progress = Some(Box::new(f));
        self
    }

    fn report(&self, msg: &str) {
        if let Some(p) = &self.progress {
            p(msg);
        }
    }

    pub fn setup(&self) -> &Setup {
        &self.setup
    }

    pub fn scales(&self) -> &Scales {
        &self.scales
    }

    pub fn grid(&self) -> &Grid {
        self.propagator.grid()
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn record_toggles(&self, layer: &Layer) -> RecordToggles {
        let cfg = self.propagator.config();
        RecordToggles {
            loss: layer.loss.unwrap_or(0.0),
            overlap: layer.overlap.unwrap_or(1.0),
            gawbs: if layer.gawbs && cfg.toggles.gawbs {
                self.setup.gawbs.magnitude
            } else {
                0.0
            },
            raman_noise: cfg.toggles.raman_noise,
            b3: if cfg.toggles.third_order { cfg.b3 } else { 0.0 },
            s: if cfg.toggles.self_steepening { cfg.s } else { 0.0 },
        }
    }

    /// Runs one trajectory (both arms) and returns pair moments at each
    /// dimensionless length in `z_targets` (ascending).
    pub fn run_trajectory(
        &self,
        amplitude: f64,
        z_targets: &[f64],
        seed: u64,
        trajectory: u64,
    ) -> Result<Vec<PairMoments>> {
        let prop = &self.propagator;
        let grid = prop.grid();
        let nbar = self.scales.nbar;
        let mut snapshots = Vec::with_capacity(z_targets.len());

        let source = |arm| NoiseSource {
            master_seed: seed,
            trajectory,
            arm,
        };
        let run_arm = |arm, visit: &mut dyn FnMut(&TrajectoryField) -> Result<()>| -> Result<()> {
            let mut stepper = prop.stepper(source(arm));
            let mut ws = grid.workspace();
            let mut field = prop.initial_field(amplitude, self.setup.shape, nbar, source(arm), &mut ws);
            for &z in z_targets {
                stepper.advance_to(&mut field, z)?;
                visit(&field)?;
            }
            Ok(())
        };

        run_arm(Arm::A, &mut |f| {
            snapshots.push(f.clone());
            Ok(())
        })?;
        let mut out = Vec::with_capacity(z_targets.len());
        let mut idx = 0;
        run_arm(Arm::B, &mut |f| {
            out.push(PairMoments::from_arms(&snapshots[idx], f, nbar, grid)?);
            idx += 1;
            Ok(())
        })?;
        Ok(out)
    }

    /// One ensemble at a total energy (pJ), sampled at each fibre length (m).
    pub fn simulate_point(
        &self,
        total_energy: f64,
        lengths: &[f64],
        paths: usize,
        seed: u64,
    ) -> Result<PointEnsemble> {
        if paths < 2 {
            return Err(Error::EnsembleTooSmall(paths));
        }
        if lengths.is_empty() || lengths.iter().any(|l| !(*l >= 0.0)) {
            return Err(invalid("lengths", "need at least one length, all >= 0"));
        }
        if lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("lengths", "must be strictly increasing"));
        }
        let amplitude = arm_amplitude(total_energy, &self.scales)?;
        let z_targets: Vec<f64> = lengths.iter().map(|&l| self.scales.length_to_z(l)).collect();
        let start = Instant::now();
        let per_traj: Vec<Vec<PairMoments>> = self.pool.install(|| {
            (0..paths as u64)
                .into_par_iter()
                .map(|t| {
                    self.run_trajectory(amplitude, &z_targets, seed, t)
                        .map_err(|e| Error::Trajectory {
                            trajectory: t,
                            source: Box::new(e),
                        })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let moments = (0..lengths.len())
            .map(|k| per_traj.iter().map(|t| t[k]).collect())
            .collect();
        Ok(PointEnsemble {
            total_energy,
            lengths: lengths.to_vec(),
            moments,
            wall_time: start.elapsed().as_secs_f64(),
        })
    }

    /// Squeezing of a stored ensemble at one length under one layer.
    pub fn analyse(&self, point: &PointEnsemble, length_index: usize, layer: &Layer) -> Result<SqueezingResult> {
        if layer.gawbs && !self.propagator.config().toggles.gawbs && self.setup.gawbs.magnitude > 0.0 {
            return Err(invalid("gawbs", "layer keeps GAWBS but the propagation ran without it"));
        }
        let raw = dark_plane_extrema(&point.stokes(length_index, layer.gawbs), self.setup.normalisation)?;
        layer.apply(&raw)
    }

    fn records_for(&self, point: &PointEnsemble, length_index: usize, layers: &[Layer]) -> Vec<RunRecord> {
        layers
            .iter()
            .map(|layer| RunRecord {
                total_energy: point.total_energy,
                fibre_length: point.lengths[length_index],
                toggles: self.record_toggles(layer),
                paths: point.paths(),
                result: self.analyse(point, length_index, layer).map_err(|e| e.to_string()),
                wall_time: point.wall_time,
            })
            .collect()
    }

    /// Squeezing versus energy at a fixed length (m). Returns one record per
    /// energy per layer, energies outermost. A failed point is recorded as
    /// such and the sweep carries on.
    pub fn sweep_energy(&self, energies: &[f64], length: f64, layers: &[Layer], paths: usize) -> Result<Vec<RunRecord>> {
        if energies.is_empty() || energies.iter().any(|e| !(*e >= 0.0)) {
            return Err(invalid("energies", "need at least one energy, all >= 0"));
        }
        if layers.is_empty() {
            return Err(invalid("layers", "need at least one layer"));
        }
        let mut out = Vec::with_capacity(energies.len() * layers.len());
        for (i, &e) in energies.iter().enumerate() {
            let seed = point_seed(self.setup.seed, i as u64);
            match self.simulate_point(e, &[length], paths, seed) {
                Ok(point) => {
                    let recs = self.records_for(&point, 0, layers);
                    if let Some(r) = recs.first().and_then(|r| r.squeezing()) {
                        self.report(&format!(
                            "E = {e:.3} pJ, L = {length} m: {:.3} dB ({:.1} s)",
                            r.m_min_db, point.wall_time
                        ));
                    }
                    out.extend(recs);
                }
                Err(err) => {
                    self.report(&format!("E = {e:.3} pJ failed: {err}"));
                    for layer in layers {
                        out.push(RunRecord {
                            total_energy: e,
                            fibre_length: length,
                            toggles: self.record_toggles(layer),
                            paths,
                            result: Err(err.to_string()),
                            wall_time: 0.0,
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Best fibre length (m) for one energy, from snapshots of a single
    /// ensemble taken at every candidate length.
    pub fn optimize_length(&self, total_energy: f64, lengths: &[f64], layer: &Layer, paths: usize) -> Result<LengthOptimum> {
        let point = self.simulate_point(total_energy, lengths, paths, point_seed(self.setup.seed, 0))?;
        let results = (0..lengths.len())
            .map(|k| self.analyse(&point, k, layer))
            .collect::<Result<Vec<_>>>()?;
        let opt = LengthOptimum::from_results(lengths.to_vec(), results)?;
        self.report(&format!(
            "E = {total_energy:.3} pJ: best {:.3} dB at {:.2} m ({:.1} s)",
            opt.best().m_min_db,
            opt.best_length(),
            point.wall_time
        ));
        Ok(opt)
    }

    /// Several analysis layers of one length scan.
    pub fn optimize_length_layers(
        &self,
        total_energy: f64,
        lengths: &[f64],
        layers: &[Layer],
        paths: usize,
    ) -> Result<Vec<LengthOptimum>> {
        let point = self.simulate_point(total_energy, lengths, paths, point_seed(self.setup.seed, 0))?;
        layers
            .iter()
            .map(|layer| {
                let results = (0..lengths.len())
                    .map(|k| self.analyse(&point, k, layer))
                    .collect::<Result<Vec<_>>>()?;
                LengthOptimum::from_results(lengths.to_vec(), results)
            })
            .collect()
    }

    fn variant(&self, f: impl FnOnce(&mut Setup)) -> Result<Simulation> {
        let mut setup = self.setup.clone();
        f(&mut setup);
        Simulation::new(setup)
    }

    /// Energy sweeps for each B3, paired with the same seeds.
    pub fn study_b3(&self, b3_values: &[f64], energies: &[f64], length: f64, paths: usize) -> Result<B3Study> {
        if b3_values.iter().any(|b| !(*b >= 0.0)) {
            return Err(invalid("b3_values", "must be >= 0"));
        }
        let mut columns = Vec::with_capacity(b3_values.len());
        for &b3 in b3_values {
            let sim = self.variant(|s| {
                s.b3 = b3;
                s.toggles.third_order = true;
            })?;
            let recs = sim.sweep_energy(energies, length, &[Layer::PURE], paths)?;
            columns.push((b3, recs));
        }
        Ok(B3Study::new(energies.to_vec(), columns))
    }

    /// Largest squeezing change from self-steepening over an energy sweep,
    /// with identical noise draws in both runs. `s` defaults to
    /// `1/(omega0 t0)`.
    pub fn study_self_steepening(&self, energies: &[f64], length: f64, s: Option<f64>, paths: usize) -> Result<SteepeningStudy> {
        let off = self.variant(|st| st.toggles.self_steepening = false)?;
        let on = self.variant(|st| {
            st.toggles.self_steepening = true;
            st.s = s.or(st.s);
        })?;
        let a = off.sweep_energy(energies, length, &[Layer::PURE], paths)?;
        let b = on.sweep_energy(energies, length, &[Layer::PURE], paths)?;
        SteepeningStudy::new(on.propagator.config().s, a, b)
    }

    /// Re-runs a point with half the step and with twice the points (same
    /// window) and compares the squeezing.
    pub fn convergence_check(&self, total_energy: f64, length: f64, paths: usize) -> Result<ConvergenceReport> {
        let seed = point_seed(self.setup.seed, 0);
        let base = self.simulate_point(total_energy, &[length], paths, seed)?;
        let base = self.analyse(&base, 0, &Layer::PURE)?;
        let fine_dz = self.variant(|s| {
            s.dz *= 0.5;
            s.noise_levels += 1;
        })?;
        let p = fine_dz.simulate_point(total_energy, &[length], paths, seed)?;
        let half_dz = fine_dz.analyse(&p, 0, &Layer::PURE)?;
        let fine_grid = self.variant(|s| s.n_points *= 2)?;
        let p = fine_grid.simulate_point(total_energy, &[length], paths, seed)?;
        let double_grid = fine_grid.analyse(&p, 0, &Layer::PURE)?;
        Ok(ConvergenceReport::new(base, half_dz, double_grid))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthOptimum {
    pub lengths: Vec<f64>,
    pub results: Vec<SqueezingResult>,
    pub best_index: usize,
    /// Lengths, contiguous around the optimum, whose `M_min` is within 5%
    /// (linear) of the optimum.
    pub band: (f64, f64),
    /// False when the optimum sits on the longest length scanned.
    pub interior: bool,
}

impl LengthOptimum {
    pub fn from_results(lengths: Vec<f64>, results: Vec<SqueezingResult>) -> Result<Self> {
        if lengths.is_empty() || lengths.len() != results.len() {
            return Err(invalid("lengths", "one result per length required"));
        }
        let best_index = (0..results.len())
            .min_by(|&a, &b| results[a].m_min.total_cmp(&results[b].m_min))
            .unwrap();
        let limit = results[best_index].m_min * 1.05;
        let within = |k: usize| results[k].m_min <= limit;
        let mut lo = best_index;
        while lo > 0 && within(lo - 1) {
            lo -= 1;
        }
        let mut hi = best_index;
        while hi + 1 < results.len() && within(hi + 1) {
            hi += 1;
        }
        let interior = best_index + 1 < lengths.len() || lengths.len() == 1;
        Ok(Self {
            band: (lengths[lo], lengths[hi]),
            interior,
            best_index,
            lengths,
            results,
        })
    }

    pub fn best(&self) -> &SqueezingResult {
        &self.results[self.best_index]
    }

    pub fn best_length(&self) -> f64 {
        self.lengths[self.best_index]
    }
}

/// 60 lengths up to 30 m, 40 of them at or below 10 m.
pub fn default_length_grid() -> Vec<f64> {
    (1..=40)
        .map(|i| 0.25 * i as f64)
        .chain((11..=30).map(|i| i as f64))
        .collect()
}

/// 20 total energies from 3 to 35 pJ.
pub fn default_energy_grid() -> Vec<f64> {
    (0..20).map(|i| 3.0 + 32.0 * i as f64 / 19.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct B3Study {
    pub energies: Vec<f64>,
    pub columns: Vec<(f64, Vec<RunRecord>)>,
    /// Per B3: largest |ΔdB| against the B3 = 0 column (if present).
    pub max_abs_delta_db: Vec<(f64, f64)>,
    /// Per B3: whether |ΔdB| at the highest energy exceeds that at the
    /// lowest.
    pub grows_with_energy: Vec<(f64, bool)>,
}

impl B3Study {
    fn new(energies: Vec<f64>, columns: Vec<(f64, Vec<RunRecord>)>) -> Self {
        let reference = columns.iter().find(|(b, _)| *b == 0.0).map(|(_, r)| r.clone());
        let mut max_abs_delta_db = Vec::new();
        let mut grows_with_energy = Vec::new();
        if let Some(reference) = reference {
            for (b3, recs) in &columns {
                let deltas: Vec<f64> = recs
                    .iter()
                    .zip(&reference)
                    .map(|(r, q)| match (r.squeezing(), q.squeezing()) {
                        (Some(r), Some(q)) => (r.m_min_db - q.m_min_db).abs(),
                        _ => f64::NAN,
                    })
                    .collect();
                let max = deltas.iter().cloned().filter(|d| d.is_finite()).fold(0.0, f64::max);
                max_abs_delta_db.push((*b3, max));
                let grows = match (deltas.first(), deltas.last()) {
                    (Some(a), Some(b)) => b > a,
                    _ => false,
                };
                grows_with_energy.push((*b3, grows));
            }
        }
        Self {
            energies,
            columns,
            max_abs_delta_db,
            grows_with_energy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteepeningStudy {
    pub s: f64,
    pub without: Vec<RunRecord>,
    pub with: Vec<RunRecord>,
    pub deltas_db: Vec<f64>,
    pub max_abs_delta_db: f64,
}

impl SteepeningStudy {
    fn new(s: f64, without: Vec<RunRecord>, with: Vec<RunRecord>) -> Result<Self> {
        let deltas_db = without
            .iter()
            .zip(&with)
            .map(|(a, b)| match (a.squeezing(), b.squeezing()) {
                (Some(a), Some(b)) => Ok(b.m_min_db - a.m_min_db),
                _ => Err(invalid("self_steepening", "a sweep point failed")),
            })
            .collect::<Result<Vec<_>>>()?;
        let max_abs_delta_db = deltas_db.iter().fold(0.0, |m: f64, d| m.max(d.abs()));
        Ok(Self {
            s,
            without,
            with,
            deltas_db,
            max_abs_delta_db,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub base: SqueezingResult,
    pub half_dz: SqueezingResult,
    pub double_grid: SqueezingResult,
    pub delta_dz_db: f64,
    pub delta_grid_db: f64,
    pub passed: bool,
}

impl ConvergenceReport {
    pub fn new(base: SqueezingResult, half_dz: SqueezingResult, double_grid: SqueezingResult) -> Self {
        let delta_dz_db = (half_dz.m_min_db - base.m_min_db).abs();
        let delta_grid_db = (double_grid.m_min_db - base.m_min_db).abs();
        let tol = base.sem_db;
        Self {
            base,
            half_dz,
            double_grid,
            delta_dz_db,
            delta_grid_db,
            passed: delta_dz_db < tol && delta_grid_db < tol,
        }
    }

    pub fn summary(&self) -> String {
        let status = if self.passed { "PASSED" } else { "FAILED" };
        format!(
            "{status}: dz/2 delta {:.4} dB, 2N delta {:.4} dB, tolerance {:.4} dB",
            self.delta_dz_db, self.delta_grid_db, self.base.sem_db
        )
    }
}
