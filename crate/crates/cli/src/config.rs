//! `key = value` run configuration with `[section]` headers and `#`
//! comments.
//!
//! Every key is consumed exactly once while building a [`RunConfig`]; any
//! key left over afterwards is a typo and rejected together with its line
//! number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use pcfsqueeze::experiments::{default_energy_grid, default_length_grid};
use pcfsqueeze::{
    derive_scales, FibreParams, GawbsCorrelation, GawbsModel, InterArm, Layer, Normalisation, PulseParams,
    PulseShape, RamanKind, RamanModel, Setup, Study, Toggles,
};

pub const PRESET_NAMES: &[&str] = &["nl-pm-750-810nm"];

/// A configuration problem, located by key and (when known) line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// Raw parsed file: `section.key -> value`.
#[derive(Debug, Clone, Default)]
pub struct Document {
    entries: BTreeMap<String, Entry>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(content, Some(line), "unterminated section header"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(err(name, Some(line), format!("unknown section (expected one of {})", SECTIONS.join(", "))));
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| err(content, Some(line), "expected `key = value`"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(err("", Some(line), "empty key"));
            }
            let key = if section.is_empty() {
                k.to_string()
            } else {
                format!("{section}.{k}")
            };
            let entry = Entry {
                value: v.trim().to_string(),
                line,
            };
            if let Some(prev) = entries.insert(key.clone(), entry) {
                return Err(err(&key, Some(line), format!("duplicate key (first set on line {})", prev.line)));
            }
        }
        Ok(Self { entries })
    }

    fn set_default(&mut self, key: &str, value: &str) {
        self.entries.entry(key.to_string()).or_insert(Entry {
            value: value.to_string(),
            line: 0,
        });
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }
}

const SECTIONS: &[&str] = &["fibre", "pulse", "grid", "physics", "raman", "gawbs", "run", "study", "output"];

/// Keys that must be present (directly or through a preset).
pub const REQUIRED: &[&str] = &[
    "fibre.beta2",
    "fibre.gamma",
    "fibre.wavelength_nm",
    "pulse.t0",
    "run.study",
    "run.paths",
];

/// Values the `nl-pm-750-810nm` preset supplies.
fn preset_entries(name: &str) -> Option<Vec<(&'static str, &'static str)>> {
    match name {
        "nl-pm-750-810nm" => Some(vec![
            ("fibre.beta2", "12.2"),
            ("fibre.anomalous", "true"),
            ("fibre.beta3", "0"),
            ("fibre.gamma", "91.4"),
            ("fibre.wavelength_nm", "810"),
            ("fibre.effective_area_um2", "2.0"),
            ("fibre.loss", "0.13"),
            ("fibre.gawbs", "3.2e-4"),
            ("pulse.t0", "0.068"),
            ("pulse.shape", "sech"),
        ]),
        _ => None,
    }
}

/// A fully validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub setup: Setup,
    pub study: Study,
    pub paths: usize,
    pub out_dir: Option<PathBuf>,
    pub timings: bool,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err(&path.display().to_string(), None, e.to_string()))?;
    parse_config(&text, overrides)
}

struct Reader {
    doc: Document,
}

impl Reader {
    fn raw(&mut self, key: &str) -> Option<(String, Option<usize>)> {
        self.doc
            .take(key)
            .map(|e| (e.value, if e.line == 0 { None } else { Some(e.line) }))
    }

    fn parsed<T>(&mut self, key: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<(T, Option<usize>)>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => f(&v)
                .map(|x| Some((x, line)))
                .ok_or_else(|| err(key, line, format!("expected {what}, got `{v}`"))),
        }
    }

    fn f64_in(&mut self, key: &str, default: f64, ok: impl Fn(f64) -> bool, range: &str) -> Result<f64, ConfigError> {
        match self.parsed(key, "a number", |v| v.parse::<f64>().ok())? {
            None => Ok(default),
            Some((x, _)) if ok(x) && x.is_finite() => Ok(x),
            Some((x, line)) => Err(err(key, line, format!("{x} is out of range ({range})"))),
        }
    }

    fn positive(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.f64_in(key, default, |x| x > 0.0, "must be > 0")
    }

    fn non_negative(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.f64_in(key, default, |x| x >= 0.0, "must be >= 0")
    }

    fn fraction(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.f64_in(key, default, |x| (0.0..=1.0).contains(&x), "must lie in [0, 1]")
    }

    fn int(&mut self, key: &str, default: i64, min: i64) -> Result<i64, ConfigError> {
        match self.parsed(key, "an integer", |v| v.parse::<i64>().ok())? {
            None => Ok(default),
            Some((x, _)) if x >= min => Ok(x),
            Some((x, line)) => Err(err(key, line, format!("{x} is out of range (must be >= {min})"))),
        }
    }

    fn flag(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        Ok(self
            .parsed(key, "true or false", |v| match v {
                "true" | "yes" | "on" | "1" => Some(true),
                "false" | "no" | "off" | "0" => Some(false),
                _ => None,
            })?
            .map_or(default, |(b, _)| b))
    }

    fn choice(&mut self, key: &str, default: &str, options: &[&str]) -> Result<String, ConfigError> {
        match self.raw(key) {
            None => Ok(default.to_string()),
            Some((v, _)) if options.contains(&v.as_str()) => Ok(v),
            Some((v, line)) => Err(err(key, line, format!("`{v}` is not one of {}", options.join(", ")))),
        }
    }

    fn list(&mut self, key: &str, min: f64) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.parsed(key, "a list `a, b, c` or a range `start:stop:count`", parse_list)? {
            None => Ok(None),
            Some((v, line)) => {
                if v.is_empty() {
                    return Err(err(key, line, "list is empty"));
                }
                if let Some(bad) = v.iter().find(|x| !(**x >= min) || !x.is_finite()) {
                    return Err(err(key, line, format!("{bad} is out of range (must be >= {min})")));
                }
                Ok(Some(v))
            }
        }
    }

    fn leftover(&self) -> Result<(), ConfigError> {
        match self.doc.entries.iter().min_by_key(|(_, e)| e.line) {
            None => Ok(()),
            Some((k, e)) => Err(err(k, Some(e.line), "unknown key")),
        }
    }
}

fn parse_list(v: &str) -> Option<Vec<f64>> {
    if v.contains(':') {
        let parts: Vec<&str> = v.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return None;
        }
        let a: f64 = parts[0].parse().ok()?;
        let b: f64 = parts[1].parse().ok()?;
        let n: usize = parts[2].parse().ok()?;
        return match n {
            0 => None,
            1 => Some(vec![a]),
            _ => Some((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
        };
    }
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().ok())
        .collect()
}

pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut doc = Document::parse(text)?;
    let preset = match (&overrides.preset, doc.take("preset")) {
        (Some(p), _) => Some((p.clone(), None)),
        (None, Some(e)) => Some((e.value, Some(e.line))),
        (None, None) => None,
    };
    if let Some((name, line)) = preset {
        let entries = preset_entries(&name)
            .ok_or_else(|| err("preset", line, format!("unknown preset `{name}` (known: {})", PRESET_NAMES.join(", "))))?;
        for (k, v) in entries {
            doc.set_default(k, v);
        }
    }
    if let Some(p) = overrides.paths {
        doc.entries.insert("run.paths".into(), Entry { value: p.to_string(), line: 0 });
    }

    let missing: Vec<&str> = REQUIRED.iter().copied().filter(|k| !doc.entries.contains_key(*k)).collect();
    if !missing.is_empty() {
        return Err(err(
            &missing.join(", "),
            None,
            format!(
                "missing required key{} (a preset such as `{}` supplies the fibre and pulse ones)",
                if missing.len() > 1 { "s" } else { "" },
                PRESET_NAMES[0]
            ),
        ));
    }

    let mut r = Reader { doc };

    // physics toggles first: they decide which other keys are required
    let toggles = Toggles {
        nonlinear: r.flag("physics.nonlinear", true)?,
        raman_noise: r.flag("physics.raman_noise", true)?,
        gawbs: r.flag("physics.gawbs", false)?,
        third_order: r.flag("physics.third_order", false)?,
        self_steepening: r.flag("physics.self_steepening", false)?,
    };
    let use_loss = r.flag("physics.loss", false)?;
    let use_overlap = r.flag("physics.overlap", false)?;

    let require = |r: &Reader, key: &str, because: &str| -> Result<(), ConfigError> {
        if r.doc.entries.contains_key(key) {
            Ok(())
        } else {
            Err(err(key, None, format!("required when {because} is on")))
        }
    };
    if use_loss {
        require(&r, "fibre.loss", "physics.loss")?;
    }
    if use_overlap {
        require(&r, "fibre.overlap", "physics.overlap")?;
    }
    if toggles.gawbs {
        require(&r, "fibre.gawbs", "physics.gawbs")?;
    }

    let fibre = FibreParams {
        beta2: r.positive("fibre.beta2", 0.0)?,
        anomalous: r.flag("fibre.anomalous", true)?,
        beta3: r.f64_in("fibre.beta3", 0.0, |_| true, "finite")?,
        gamma: r.positive("fibre.gamma", 0.0)?,
        wavelength: r.positive("fibre.wavelength_nm", 0.0)? * 1e-9,
        effective_area: r.positive("fibre.effective_area_um2", 2.0)? * 1e-12,
        group_velocity: r.positive("fibre.group_velocity", pcfsqueeze::parameters::SPEED_OF_LIGHT / 1.45)?,
        loss_fraction: r.fraction("fibre.loss", 0.0)?,
        spectral_overlap: r.fraction("fibre.overlap", 1.0)?,
        gawbs_magnitude: r.non_negative("fibre.gawbs", 0.0)?,
    };
    let t0 = r.positive("pulse.t0", 0.0)?;
    let shape = match r.choice("pulse.shape", "sech", &["sech", "gaussian"])?.as_str() {
        "gaussian" => PulseShape::Gaussian,
        _ => PulseShape::Sech,
    };
    let scales = derive_scales(&fibre, &PulseParams::sech(t0, 0.0)).map_err(|e| err("fibre", None, e.to_string()))?;

    let n_points = r.int("grid.points", 4096, 64)? as usize;
    if !n_points.is_power_of_two() {
        return Err(err("grid.points", None, format!("{n_points} is not a power of two")));
    }
    let t_window = r.positive("grid.window", 20.0)?;
    let dz = r.positive("grid.dz", 1e-3)?;
    let noise_levels = r.int("grid.noise_levels", 0, 0)? as u32;

    let b3 = match r.parsed("physics.b3", "a number", |v| v.parse::<f64>().ok())? {
        Some((x, _)) => x,
        None => scales.b3,
    };
    let s = r.parsed("physics.s", "a number", |v| v.parse::<f64>().ok())?;
    if let Some((x, line)) = s {
        if !(x >= 0.0) {
            return Err(err("physics.s", line, format!("{x} is out of range (must be >= 0)")));
        }
    }

    let raman_kind = r.choice(
        "raman.model",
        "single_oscillator",
        &["single_oscillator", "multi_lorentzian", "instantaneous"],
    )?;
    let mut raman = match raman_kind.as_str() {
        "multi_lorentzian" => RamanModel::silica_multi_lorentzian(t0),
        "instantaneous" => RamanModel::instantaneous(),
        _ => RamanModel::silica(t0),
    };
    if let RamanKind::SingleOscillator { tau1, tau2 } = &mut raman.kind {
        *tau1 = r.positive("raman.tau1_fs", 12.2)? * 1e-3 / t0;
        *tau2 = r.positive("raman.tau2_fs", 32.0)? * 1e-3 / t0;
    }
    if raman_kind != "instantaneous" {
        raman.raman_fraction = r.fraction("raman.fraction", raman.raman_fraction)?;
    }
    raman.temperature = r.non_negative("raman.temperature", raman.temperature)?;

    let gawbs = GawbsModel {
        magnitude: fibre.gawbs_magnitude,
        correlation: match r.choice("gawbs.correlation", "white_in_z", &["white_in_z", "per_fibre_constant"])?.as_str() {
            "per_fibre_constant" => GawbsCorrelation::PerFibreConstant,
            _ => GawbsCorrelation::WhiteInZ,
        },
        inter_arm: match r.choice("gawbs.inter_arm", "independent", &["independent", "common"])?.as_str() {
            "common" => InterArm::Common,
            _ => InterArm::Independent,
        },
    };

    let study_kind = r.choice(
        "run.study",
        "energy_sweep",
        &["energy_sweep", "length_scan", "b3", "self_steepening", "convergence"],
    )?;
    let paths = r.int("run.paths", 0, 2)? as usize;
    let seed = match overrides.seed {
        Some(s) => {
            r.raw("run.seed");
            s
        }
        None => r.int("run.seed", 1, 0)? as u64,
    };
    let workers = match overrides.workers {
        Some(w) => {
            r.raw("run.workers");
            w
        }
        None => r.int("run.workers", 1, 1)? as usize,
    };
    if workers == 0 {
        return Err(err("workers", None, "must be at least 1"));
    }
    let normalisation = match r.choice("run.normalisation", "mean_s3", &["mean_s3", "calibrated"])?.as_str() {
        "calibrated" => Normalisation::Calibrated {
            shot_noise_ratio: r.positive("run.shot_noise_ratio", 1.0)?,
        },
        _ => Normalisation::MeanS3,
    };

    let relevant: &[&str] = match study_kind.as_str() {
        "energy_sweep" => &["study.energies", "study.length", "study.layers"],
        "length_scan" => &["study.energy", "study.lengths", "study.layers"],
        "b3" => &["study.b3_values", "study.energies", "study.length"],
        "self_steepening" => &["study.energies", "study.length"],
        _ => &["study.energy", "study.length"],
    };
    if let Some((k, e)) = r
        .doc
        .entries
        .iter()
        .filter(|(k, _)| k.starts_with("study.") && !relevant.contains(&k.as_str()))
        .min_by_key(|(_, e)| e.line)
    {
        return Err(err(k, Some(e.line), format!("not used by study `{study_kind}`")));
    }
    let layers = {
        let mode = r.choice("study.layers", "cumulative", &["cumulative", "final"])?;
        let mut all = vec![Layer::PURE];
        let mut cur = Layer::PURE;
        if use_loss {
            cur.loss = Some(fibre.loss_fraction);
            all.push(cur);
        }
        if use_overlap {
            cur.overlap = Some(fibre.spectral_overlap);
            all.push(cur);
        }
        if toggles.gawbs {
            cur.gawbs = true;
            all.push(cur);
        }
        if mode == "final" {
            vec![cur]
        } else {
            all
        }
    };
    let length = r.non_negative("study.length", 1.0)?;
    let energies = r.list("study.energies", 0.0)?;
    let lengths = r.list("study.lengths", 0.0)?;
    let energy = r.non_negative("study.energy", 2.0 * scales.es)?;
    let b3_values = r.list("study.b3_values", 0.0)?;

    let study = match study_kind.as_str() {
        "length_scan" => {
            let lengths = lengths.unwrap_or_else(default_length_grid);
            if lengths.windows(2).any(|w| w[1] <= w[0]) {
                return Err(err("study.lengths", None, "must be strictly increasing"));
            }
            Study::LengthScan { energy, lengths, layers }
        }
        "b3" => Study::B3 {
            b3_values: b3_values.unwrap_or_else(|| vec![0.0, 0.3, 0.5, 1.0, 3.0, 6.0]),
            energies: energies.unwrap_or_else(default_energy_grid),
            length,
        },
        "self_steepening" => Study::SelfSteepening {
            energies: energies.unwrap_or_else(default_energy_grid),
            length,
        },
        "convergence" => Study::Convergence { energy, length },
        _ => Study::EnergySweep {
            energies: energies.unwrap_or_else(default_energy_grid),
            length,
            layers,
        },
    };

    let out_dir = match &overrides.out {
        Some(p) => {
            r.raw("output.dir");
            Some(p.clone())
        }
        None => r.raw("output.dir").map(|(v, _)| PathBuf::from(v)),
    };
    let timings = r.flag("output.timings", true)?;

    r.leftover()?;

    let setup = Setup {
        fibre,
        t0,
        shape,
        n_points,
        t_window,
        dz,
        toggles,
        b3,
        s: s.map(|(x, _)| x),
        raman,
        gawbs,
        normalisation,
        seed,
        workers,
        noise_levels,
    };
    setup.validate().map_err(|e| err("config", None, e.to_string()))?;
    Ok(RunConfig {
        setup,
        study,
        paths,
        out_dir,
        timings,
    })
}

/// The resolved configuration as `key = value` lines.
pub fn describe(cfg: &RunConfig) -> String {
    let s = &cfg.setup;
    let scales = s.scales().expect("validated");
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        out.push_str(&format!("{k} = {v}\n"));
    };
    line("fibre.beta2_ps2_per_km", s.fibre.beta2.to_string());
    line("fibre.anomalous", s.fibre.anomalous.to_string());
    line("fibre.beta3_ps3_per_km", s.fibre.beta3.to_string());
    line("fibre.gamma_per_w_km", s.fibre.gamma.to_string());
    line("fibre.wavelength_nm", format!("{:.3}", s.fibre.wavelength * 1e9));
    line("fibre.loss", s.fibre.loss_fraction.to_string());
    line("fibre.overlap", s.fibre.spectral_overlap.to_string());
    line("fibre.gawbs", s.fibre.gawbs_magnitude.to_string());
    line("pulse.t0_ps", s.t0.to_string());
    line("pulse.shape", format!("{:?}", s.shape).to_lowercase());
    line("grid.points", s.n_points.to_string());
    line("grid.window", s.t_window.to_string());
    line("grid.dz", s.dz.to_string());
    line("grid.noise_levels", s.noise_levels.to_string());
    line("physics.toggles", format!("{:?}", s.toggles));
    line("physics.b3", s.b3.to_string());
    line("physics.s", s.s.unwrap_or(scales.s).to_string());
    line("raman", format!("{:?}", s.raman));
    line("gawbs", format!("{:?}", s.gawbs));
    line("run.paths", cfg.paths.to_string());
    line("run.seed", s.seed.to_string());
    line("run.workers", s.workers.to_string());
    line("run.normalisation", format!("{:?}", s.normalisation));
    line("study", format!("{:?}", cfg.study));
    line(
        "output.dir",
        cfg.out_dir.as_ref().map_or("(default)".into(), |p| p.display().to_string()),
    );
    line("output.timings", cfg.timings.to_string());
    line("derived.z0_m", format!("{:.6}", scales.z0));
    line("derived.nbar", format!("{:.4e}", scales.nbar));
    line("derived.soliton_energy_pj", format!("{:.4}", scales.es));
    line("derived.s", format!("{:.4e}", scales.s));
    out
}
