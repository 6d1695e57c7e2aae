//! Study descriptions and their on-disk outputs: CSV tables, a JSON run
//! manifest, and gnuplot-ready data with a matching script.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::experiments::{ConvergenceReport, Layer, LengthOptimum, RunRecord, Setup, Simulation};

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: &str = "energy_pJ,length_m,loss,overlap,gawbs,raman_noise,b3,s,M_min_dB,M_max_dB,theta_min_rad,sem_dB,paths,wall_s";

/// Which study a run performs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Study {
    EnergySweep {
        energies: Vec<f64>,
        length: f64,
        layers: Vec<Layer>,
    },
    LengthScan {
        energy: f64,
        lengths: Vec<f64>,
        layers: Vec<Layer>,
    },
    B3 {
        b3_values: Vec<f64>,
        energies: Vec<f64>,
        length: f64,
    },
    SelfSteepening {
        energies: Vec<f64>,
        length: f64,
    },
    Convergence {
        energy: f64,
        length: f64,
    },
}

impl Study {
    pub fn name(&self) -> &'static str {
        match self {
            Study::EnergySweep { .. } => "energy_sweep",
            Study::LengthScan { .. } => "length_scan",
            Study::B3 { .. } => "b3",
            Study::SelfSteepening { .. } => "self_steepening",
            Study::Convergence { .. } => "convergence",
        }
    }
}

/// Everything a study produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOutput {
    pub records: Vec<RunRecord>,
    /// Human-readable result lines.
    pub summary: Vec<String>,
    pub optima: Vec<LengthOptimum>,
    pub convergence: Option<ConvergenceReport>,
}

impl StudyOutput {
    fn from_records(records: Vec<RunRecord>) -> Self {
        Self {
            records,
            summary: Vec::new(),
            optima: Vec::new(),
            convergence: None,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(|r| r.result.is_err())
    }
}

fn best_line(label: &str, records: &[&RunRecord]) -> Option<String> {
    let best = records
        .iter()
        .filter_map(|r| r.squeezing().map(|s| (r, s)))
        .min_by(|a, b| a.1.m_min.total_cmp(&b.1.m_min))?;
    Some(format!(
        "{label}: best {:.3} dB (sem {:.3}) at {:.3} pJ, {:.3} m",
        best.1.m_min_db, best.1.sem_db, best.0.total_energy, best.0.fibre_length
    ))
}

pub fn run_study(sim: &Simulation, study: &Study, paths: usize) -> Result<StudyOutput> {
    match study {
        Study::EnergySweep {
            energies,
            length,
            layers,
        } => {
            let recs = sim.sweep_energy(energies, *length, layers, paths)?;
            let mut out = StudyOutput::from_records(recs);
            for (i, layer) in layers.iter().enumerate() {
                let sel: Vec<&RunRecord> = out.records.iter().skip(i).step_by(layers.len()).collect();
                if let Some(line) = best_line(&layer_label(layer), &sel) {
                    out.summary.push(line);
                }
            }
            Ok(out)
        }
        Study::LengthScan {
            energy,
            lengths,
            layers,
        } => {
            let point = sim.simulate_point(*energy, lengths, paths, sim.setup().seed)?;
            let mut records = Vec::new();
            let mut optima = Vec::new();
            let mut summary = Vec::new();
            for layer in layers {
                let results = (0..lengths.len())
                    .map(|k| sim.analyse(&point, k, layer))
                    .collect::<Result<Vec<_>>>()?;
                let opt = LengthOptimum::from_results(lengths.clone(), results)?;
                summary.push(format!(
                    "{}: best {:.3} dB (sem {:.3}) at {:.2} m, 5% band {:.2}-{:.2} m{}",
                    layer_label(layer),
                    opt.best().m_min_db,
                    opt.best().sem_db,
                    opt.best_length(),
                    opt.band.0,
                    opt.band.1,
                    if opt.interior { "" } else { " (optimum at longest length scanned)" }
                ));
                for (k, r) in opt.results.iter().enumerate() {
                    records.push(RunRecord {
                        total_energy: *energy,
                        fibre_length: lengths[k],
                        toggles: sim.record_toggles(layer),
                        paths,
                        result: Ok(*r),
                        wall_time: point.wall_time,
                    });
                }
                optima.push(opt);
            }
            Ok(StudyOutput {
                records,
                summary,
                optima,
                convergence: None,
            })
        }
        Study::B3 {
            b3_values,
            energies,
            length,
        } => {
            let st = sim.study_b3(b3_values, energies, *length, paths)?;
            let mut out = StudyOutput::from_records(st.columns.iter().flat_map(|(_, r)| r.clone()).collect());
            for ((b3, d), (_, grows)) in st.max_abs_delta_db.iter().zip(&st.grows_with_energy) {
                out.summary.push(format!(
                    "B3 = {b3}: max |dB change| {d:.3}, {} with energy",
                    if *grows { "grows" } else { "does not grow" }
                ));
            }
            Ok(out)
        }
        Study::SelfSteepening { energies, length } => {
            let st = sim.study_self_steepening(energies, *length, None, paths)?;
            let mut records = st.without.clone();
            records.extend(st.with.iter().cloned());
            let mut out = StudyOutput::from_records(records);
            out.summary
                .push(format!("s = {:.3e}: max |dB change| {:.4}", st.s, st.max_abs_delta_db));
            Ok(out)
        }
        Study::Convergence { energy, length } => {
            let rep = sim.convergence_check(*energy, *length, paths)?;
            let setup = sim.setup();
            let toggles = sim.record_toggles(&Layer::PURE);
            let rec = |r, wall| RunRecord {
                total_energy: *energy,
                fibre_length: *length,
                toggles,
                paths,
                result: Ok(r),
                wall_time: wall,
            };
            let mut out = StudyOutput::from_records(vec![
                rec(rep.base, 0.0),
                rec(rep.half_dz, 0.0),
                rec(rep.double_grid, 0.0),
            ]);
            out.summary.push(format!(
                "dz = {}, n = {}: {}",
                setup.dz,
                setup.n_points,
                rep.summary()
            ));
            out.convergence = Some(rep);
            Ok(out)
        }
    }
}

pub fn layer_label(layer: &Layer) -> String {
    let mut parts = vec!["pure".to_string()];
    if let Some(l) = layer.loss {
        parts.push(format!("loss {l}"));
    }
    if let Some(v) = layer.overlap {
        parts.push(format!("overlap {v}"));
    }
    if layer.gawbs {
        parts.push("GAWBS".into());
    }
    if parts.len() > 1 {
        parts.remove(0);
    }
    parts.join(" + ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvOptions {
    /// Write measured wall times. Off makes files byte-reproducible.
    pub timings: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { timings: true }
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn csv_line(r: &RunRecord, opts: CsvOptions) -> String {
    let t = &r.toggles;
    let (mmin, mmax, theta, sem) = match &r.result {
        Ok(s) => (s.m_min_db, s.m_max_db, s.theta_min, s.sem_db),
        Err(_) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        num(r.total_energy),
        num(r.fibre_length),
        num(t.loss),
        num(t.overlap),
        num(t.gawbs),
        u8::from(t.raman_noise),
        num(t.b3),
        num(t.s),
        num(mmin),
        num(mmax),
        num(theta),
        num(sem),
        r.paths,
        if opts.timings { format!("{:.3}", r.wall_time) } else { "0".into() }
    )
}

pub fn to_csv(records: &[RunRecord], opts: CsvOptions) -> String {
    let mut s = String::with_capacity(128 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&csv_line(r, opts));
        s.push('\n');
    }
    s
}

/// Writes via a temporary file in the same directory and a rename, so a
/// reader never sees a half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().ok_or_else(|| invalid("path", "no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

/// Machine-readable record of a run: enough to repeat it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub software_version: String,
    pub setup: Setup,
    pub study: Study,
    pub paths: usize,
    pub csv_timings: bool,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub summary: Vec<String>,
    #[serde(default)]
    pub failures: Vec<String>,
}

impl RunManifest {
    pub fn new(setup: Setup, study: Study, paths: usize, csv: CsvOptions) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            setup,
            study,
            paths,
            csv_timings: csv.timings,
            outputs: Vec::new(),
            summary: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let m: RunManifest = serde_json::from_str(&text)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", m.schema_version),
            ));
        }
        Ok(m)
    }
}

/// Gnuplot data: one block per layer/series separated by two blank lines
/// (so `index i` selects a series), columns as in the CSV.
pub fn gnuplot_data(study: &Study, out: &StudyOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}", CSV_HEADER.replace(',', " "));
    for (i, series) in series_of(study, out).iter().enumerate() {
        if i > 0 {
            s.push_str("\n\n");
        }
        let _ = writeln!(s, "# {}", series.0);
        for r in &series.1 {
            let _ = writeln!(s, "{}", csv_line(r, CsvOptions::default()).replace(',', " "));
        }
    }
    s
}

fn series_of<'a>(study: &Study, out: &'a StudyOutput) -> Vec<(String, Vec<&'a RunRecord>)> {
    let stride = |n: usize, labels: Vec<String>| {
        labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| (l, out.records.iter().skip(i).step_by(n.max(1)).collect()))
            .collect()
    };
    let chunks = |n: usize, labels: Vec<String>| {
        labels
            .into_iter()
            .zip(out.records.chunks(n.max(1)))
            .map(|(l, c)| (l, c.iter().collect()))
            .collect()
    };
    match study {
        Study::EnergySweep { layers, .. } => stride(layers.len(), layers.iter().map(layer_label).collect()),
        Study::LengthScan { lengths, layers, .. } => chunks(lengths.len(), layers.iter().map(layer_label).collect()),
        Study::B3 { b3_values, energies, .. } => {
            chunks(energies.len(), b3_values.iter().map(|b| format!("B3 = {b}")).collect())
        }
        Study::SelfSteepening { energies, .. } => {
            chunks(energies.len(), vec!["s = 0".into(), "self-steepening".into()])
        }
        Study::Convergence { .. } => vec![("base, dz/2, 2N".into(), out.records.iter().collect())],
    }
}

pub fn gnuplot_script(study: &Study, out: &StudyOutput, data_file: &str) -> String {
    let (xcol, xlabel) = match study {
        Study::LengthScan { .. } => (2, "fibre length (m)"),
        _ => (1, "total pulse energy (pJ)"),
    };
    let series = series_of(study, out);
    let mut s = String::new();
    let _ = writeln!(s, "set xlabel '{xlabel}'");
    let _ = writeln!(s, "set ylabel 'squeezing (dB)'");
    let _ = writeln!(s, "set key bottom right");
    let plots: Vec<String> = series
        .iter()
        .enumerate()
        .map(|(i, (label, _))| {
            format!("'{data_file}' index {i} using {xcol}:9:12 with yerrorlines title '{label}'")
        })
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

/// Paths of everything [`write_outputs`] produced.
#[derive(Debug, Clone)]
pub struct Written {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub data: PathBuf,
    pub script: PathBuf,
}

/// Writes `<study>.csv`, `<study>.json`, `<study>.dat` and `<study>.gp`.
pub fn write_outputs(dir: &Path, manifest: &RunManifest, out: &StudyOutput) -> Result<Written> {
    let stem = manifest.study.name();
    let csv = dir.join(format!("{stem}.csv"));
    let data = dir.join(format!("{stem}.dat"));
    let script = dir.join(format!("{stem}.gp"));
    let json = dir.join(format!("{stem}.json"));
    let opts = CsvOptions {
        timings: manifest.csv_timings,
    };
    write_atomic(&csv, to_csv(&out.records, opts).as_bytes())?;
    write_atomic(&data, gnuplot_data(&manifest.study, out).as_bytes())?;
    let data_name = data.file_name().unwrap().to_string_lossy().into_owned();
    write_atomic(&script, gnuplot_script(&manifest.study, out, &data_name).as_bytes())?;

    let mut m = manifest.clone();
    m.outputs = [&csv, &data, &script]
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    m.summary = out.summary.clone();
    m.failures = out
        .failures()
        .map(|r| format!("E = {} pJ: {}", r.total_energy, r.result.as_ref().unwrap_err()))
        .collect();
    write_atomic(&json, serde_json::to_string_pretty(&m)?.as_bytes())?;
    Ok(Written {
        csv,
        manifest: json,
        data,
        script,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::RecordToggles;
    use crate::measurement::SqueezingResult;

    fn rec(e: f64, m: f64) -> RunRecord {
        RunRecord {
            total_energy: e,
            fibre_length: 1.0,
            toggles: RecordToggles {
                loss: 0.0,
                overlap: 1.0,
                gawbs: 0.0,
                raman_noise: true,
                b3: 0.0,
                s: 0.0,
            },
            paths: 10,
            result: Ok(SqueezingResult {
                m_min: m,
                m_max: 3.0,
                theta_min: 0.25,
                theta_max: 0.25 + std::f64::consts::FRAC_PI_2,
                m_min_db: crate::measurement::to_db(m),
                m_max_db: crate::measurement::to_db(3.0),
                sem_db: 0.2,
                degenerate: false,
            }),
            wall_time: 1.234_56,
        }
    }

    #[test]
    fn csv_has_header_and_fixed_columns() {
        let mut bad = rec(5.0, 0.5);
        bad.result = Err("boom".into());
        let text = to_csv(&[rec(3.0, 0.1), bad], CsvOptions::default());
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        for l in &lines {
            assert_eq!(l.split(',').count(), 14);
        }
        assert!(lines[1].starts_with("3.000000,1.000000,0.000000,1.000000,0.000000,1,"));
        assert!(lines[1].contains(",-10.000000,"));
        assert!(lines[1].ends_with(",10,1.235"));
        assert!(lines[2].contains(",nan,nan,nan,nan,10,"));
        let quiet = to_csv(&[rec(3.0, 0.1)], CsvOptions { timings: false });
        assert!(quiet.lines().nth(1).unwrap().ends_with(",10,0"));
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("x.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        let leftovers: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn manifest_round_trips_and_checks_schema() {
        let dir = tempfile::tempdir().unwrap();
        let study = Study::EnergySweep {
            energies: vec![3.0, 5.0],
            length: 1.0,
            layers: Layer::fig1_presets(0.13, 0.9).to_vec(),
        };
        let m = RunManifest::new(Setup::nl_pm_750_defaults(), study, 100, CsvOptions::default());
        let out = StudyOutput::from_records((0..8).map(|i| rec(3.0 + i as f64, 0.5)).collect());
        let w = write_outputs(dir.path(), &m, &out).unwrap();
        let back = RunManifest::load(&w.manifest).unwrap();
        assert_eq!(back.setup, m.setup);
        assert_eq!(back.study, m.study);
        assert_eq!(back.outputs, vec!["energy_sweep.csv", "energy_sweep.dat", "energy_sweep.gp"]);

        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&w.manifest).unwrap()).unwrap();
        v["schema_version"] = 99.into();
        fs::write(&w.manifest, v.to_string()).unwrap();
        assert!(RunManifest::load(&w.manifest).is_err());
    }

    #[test]
    fn gnuplot_blocks_follow_layers() {
        let study = Study::EnergySweep {
            energies: vec![3.0, 5.0],
            length: 1.0,
            layers: Layer::fig1_presets(0.13, 0.9).to_vec(),
        };
        let out = StudyOutput::from_records((0..8).map(|i| rec(3.0 + i as f64, 0.5)).collect());
        let data = gnuplot_data(&study, &out);
        assert_eq!(data.matches("\n\n\n").count(), 3);
        let script = gnuplot_script(&study, &out, "energy_sweep.dat");
        assert_eq!(script.matches("index").count(), 4);
        assert!(script.contains("title 'loss 0.13 + overlap 0.9 + GAWBS'"));
        assert!(script.contains("title 'pure'"));
    }
}
