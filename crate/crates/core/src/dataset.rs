//! Training corpus: parameter sweeps, labeling, statistics and persistence.

use crate::error::{Error, Result};
use crate::geometry::{
    from_point_cloud, sample_hull, to_point_cloud, validate_params, GridSpec, HullPointCloud,
    WigleyParams,
};
use crate::hydro::{knots_to_ms, label_hull, HullLabel, HydroEnv, QuadratureSpec};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Default ship length [m].
pub const DEFAULT_LENGTH: f64 = 100.0;

const META_COLUMNS: [&str; 10] = ["speed_class", "U_knots", "L", "B", "d", "Cb", "Cm", "Cw", "Cd", "W"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpeedClass {
    High,
    Medium,
    Low,
}

impl SpeedClass {
    pub const ALL: [SpeedClass; 3] = [SpeedClass::High, SpeedClass::Medium, SpeedClass::Low];

    pub fn as_str(self) -> &'static str {
        match self {
            SpeedClass::High => "high",
            SpeedClass::Medium => "mid",
            SpeedClass::Low => "low",
        }
    }

    /// Design speed of the class [kn].
    pub fn design_speed_knots(self) -> f64 {
        match self {
            SpeedClass::High => 25.0,
            SpeedClass::Medium => 20.0,
            SpeedClass::Low => 15.0,
        }
    }
}

impl fmt::Display for SpeedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpeedClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "high" => Ok(SpeedClass::High),
            "mid" | "medium" => Ok(SpeedClass::Medium),
            "low" => Ok(SpeedClass::Low),
            other => Err(Error::Format(format!("unknown speed class {other:?}"))),
        }
    }
}

/// One parameter sweep (a column of the training-data table).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub speed_class: SpeedClass,
    pub u_knots: f64,
    pub bl_values: Vec<f64>,
    pub dl_values: Vec<f64>,
    pub cm_values: Vec<f64>,
    pub cw_values: Vec<f64>,
    pub cb_values: Vec<f64>,
    pub length: f64,
}

/// `first, first + step, ..., last` in thousandths.
fn milli_range(first: u32, last: u32, step: u32) -> Vec<f64> {
    (first..=last).step_by(step as usize).map(|v| v as f64 / 1000.0).collect()
}

fn milli_list(values: &[u32]) -> Vec<f64> {
    values.iter().map(|&v| v as f64 / 1000.0).collect()
}

impl SweepSpec {
    /// The sweep of one speed class.
    ///
    /// The block and waterplane ranges are assigned so that `Cb < Cw`, which
    /// the hull form requires; the mid-speed draft list repeats 0.060 and is
    /// deduplicated by [`enumerate_sweep`].
    pub fn table(class: SpeedClass) -> Self {
        let (bl, dl, cm, cw, cb) = match class {
            SpeedClass::High => (
                milli_list(&[125]),
                milli_list(&[45]),
                milli_range(850, 970, 10),
                milli_range(680, 780, 10),
                milli_range(500, 600, 10),
            ),
            SpeedClass::Medium => (
                milli_range(130, 150, 5),
                milli_list(&[55, 60, 60]),
                milli_list(&[980, 990]),
                milli_range(800, 850, 10),
                milli_range(650, 750, 10),
            ),
            SpeedClass::Low => (
                milli_range(155, 200, 5),
                milli_list(&[65, 70]),
                milli_list(&[950]),
                milli_range(860, 920, 10),
                milli_range(780, 850, 10),
            ),
        };
        Self {
            speed_class: class,
            u_knots: class.design_speed_knots(),
            bl_values: bl,
            dl_values: dl,
            cm_values: cm,
            cw_values: cw,
            cb_values: cb,
            length: DEFAULT_LENGTH,
        }
    }

    pub fn with_length(mut self, length: f64) -> Self {
        self.length = length;
        self
    }

    /// Size of the Cartesian product after deduplication.
    pub fn raw_count(&self) -> usize {
        [&self.bl_values, &self.dl_values, &self.cm_values, &self.cw_values, &self.cb_values]
            .iter()
            .map(|v| dedup(v).len())
            .product()
    }
}

fn dedup(values: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(values.len());
    for &v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Cartesian product of the sweep lists, `B/L` outermost and `Cb` innermost.
pub fn enumerate_sweep(s: &SweepSpec) -> Vec<WigleyParams<f64>> {
    let lists = [&s.bl_values, &s.dl_values, &s.cm_values, &s.cw_values, &s.cb_values];
    for (name, list) in ["B/L", "d/L", "Cm", "Cw", "Cb"].iter().zip(lists) {
        let unique = dedup(list);
        if unique.len() != list.len() {
            log::info!("{} sweep: dropped {} duplicate {name} value(s)", s.speed_class, list.len() - unique.len());
        }
    }
    let (bl, dl, cm, cw, cb) = (
        dedup(&s.bl_values),
        dedup(&s.dl_values),
        dedup(&s.cm_values),
        dedup(&s.cw_values),
        dedup(&s.cb_values),
    );
    let mut out = Vec::with_capacity(bl.len() * dl.len() * cm.len() * cw.len() * cb.len());
    for &b in &bl {
        for &d in &dl {
            for &m in &cm {
                for &w in &cw {
                    for &c in &cb {
                        out.push(WigleyParams::new(s.length, b * s.length, d * s.length, c, m, w));
                    }
                }
            }
        }
    }
    out
}

/// A labeled training hull.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub params: WigleyParams<f64>,
    pub speed_class: SpeedClass,
    /// Design speed [kn].
    pub u_knots: f64,
    pub label: HullLabel<f64>,
    /// Flattened point cloud (`[y0, z0, y1, z1, ...]`).
    pub vector: Vec<f64>,
}

impl LabeledSample {
    /// Design speed [m/s].
    pub fn u_ms(&self) -> f64 {
        knots_to_ms(self.u_knots)
    }

    /// The hull as a point cloud on `grid`.
    pub fn cloud(&self, grid: &GridSpec<f64>) -> Result<HullPointCloud<f64>> {
        HullPointCloud::from_flat(&self.vector, self.params.length, grid)
    }

    /// Recomputes the label from the stored vector.
    pub fn relabel(&self, grid: &GridSpec<f64>, setup: &LabelingSetup) -> Result<HullLabel<f64>> {
        let h = from_point_cloud(&self.cloud(grid)?, grid)?;
        label_hull(&h, self.u_knots, &setup.env, &setup.quadrature)
    }
}

/// Physical constants and quadrature used to label a corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelingSetup {
    pub env: HydroEnv<f64>,
    pub quadrature: QuadratureSpec<f64>,
}

impl Default for LabelingSetup {
    fn default() -> Self {
        Self { env: HydroEnv::default(), quadrature: QuadratureSpec::default() }
    }
}

/// Min/max/mean/std summary of a corpus.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DatasetStats {
    pub count: usize,
    /// `(Cd, W, U)` minima.
    pub label_min: [f64; 3],
    pub label_max: [f64; 3],
    pub label_mean: [f64; 3],
    pub label_std: [f64; 3],
    /// Per-coordinate extrema of the flat hull vector.
    pub coord_min: Vec<f64>,
    pub coord_max: Vec<f64>,
}

fn label_array(l: &HullLabel<f64>) -> [f64; 3] {
    [l.cd, l.w, l.u]
}

impl DatasetStats {
    pub fn compute(samples: &[LabeledSample]) -> Result<Self> {
        let first = samples.first().ok_or_else(|| Error::DegenerateStats("empty corpus".into()))?;
        let dim = first.vector.len();
        let n = samples.len() as f64;
        let mut label_min = [f64::INFINITY; 3];
        let mut label_max = [f64::NEG_INFINITY; 3];
        let mut sum = [0.0; 3];
        let mut coord_min = vec![f64::INFINITY; dim];
        let mut coord_max = vec![f64::NEG_INFINITY; dim];
        for s in samples {
            if s.vector.len() != dim {
                return Err(Error::Shape(format!("sample vector length {} != {dim}", s.vector.len())));
            }
            let l = label_array(&s.label);
            for k in 0..3 {
                label_min[k] = label_min[k].min(l[k]);
                label_max[k] = label_max[k].max(l[k]);
                sum[k] += l[k];
            }
            for (k, &v) in s.vector.iter().enumerate() {
                coord_min[k] = coord_min[k].min(v);
                coord_max[k] = coord_max[k].max(v);
            }
        }
        let label_mean = sum.map(|v| v / n);
        let mut var = [0.0; 3];
        for s in samples {
            let l = label_array(&s.label);
            for k in 0..3 {
                var[k] += (l[k] - label_mean[k]).powi(2);
            }
        }
        let label_std = var.map(|v| (v / n).sqrt());
        Ok(Self { count: samples.len(), label_min, label_max, label_mean, label_std, coord_min, coord_max })
    }
}

/// Min-max maps a label into `[0, 1]³`.
pub fn normalize_labels(label: &HullLabel<f64>, stats: &DatasetStats) -> Result<[f64; 3]> {
    let l = label_array(label);
    let mut out = [0.0; 3];
    for k in 0..3 {
        let span = stats.label_max[k] - stats.label_min[k];
        if !(span > 0.0) {
            return Err(Error::DegenerateStats(format!("label component {k} has max == min")));
        }
        out[k] = (l[k] - stats.label_min[k]) / span;
    }
    Ok(out)
}

/// Inverse of [`normalize_labels`].
pub fn denormalize_labels(n: &[f64; 3], stats: &DatasetStats) -> Result<HullLabel<f64>> {
    let mut out = [0.0; 3];
    for k in 0..3 {
        let span = stats.label_max[k] - stats.label_min[k];
        if !(span > 0.0) {
            return Err(Error::DegenerateStats(format!("label component {k} has max == min")));
        }
        out[k] = stats.label_min[k] + n[k] * span;
    }
    Ok(HullLabel { cd: out[0], w: out[1], u: out[2] })
}

/// A sweep combination that did not make it into the corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    /// Position in the enumeration.
    pub index: usize,
    pub params: WigleyParams<f64>,
    pub reason: String,
}

/// Result of [`build_dataset`].
#[derive(Debug, Clone, Default)]
pub struct DatasetBuild {
    pub samples: Vec<LabeledSample>,
    pub rejections: Vec<Rejection>,
    pub raw_count: usize,
}

impl DatasetBuild {
    pub fn stats(&self) -> Result<DatasetStats> {
        DatasetStats::compute(&self.samples)
    }

    /// Appends `other`, shifting its rejection indices past this build.
    pub fn extend(&mut self, other: DatasetBuild) {
        let offset = self.raw_count;
        self.samples.extend(other.samples);
        self.rejections.extend(other.rejections.into_iter().map(|r| Rejection { index: r.index + offset, ..r }));
        self.raw_count += other.raw_count;
    }
}

/// Enumerates, filters, samples and labels one sweep.
pub fn build_dataset(s: &SweepSpec, grid: &GridSpec<f64>, setup: &LabelingSetup) -> DatasetBuild {
    label_params(s, enumerate_sweep(s), grid, setup)
}

/// Filters, samples and labels `combos` as members of sweep `s` (speed and
/// class come from `s`). Rejection indices refer to positions in `combos`.
pub fn label_params(
    s: &SweepSpec,
    combos: Vec<WigleyParams<f64>>,
    grid: &GridSpec<f64>,
    setup: &LabelingSetup,
) -> DatasetBuild {
    let mut out = DatasetBuild { raw_count: combos.len(), ..Default::default() };
    for (index, params) in combos.into_iter().enumerate() {
        if !validate_params(&params) {
            out.rejections.push(Rejection { index, params, reason: "invalid hull parameters".into() });
            continue;
        }
        let labeled = sample_hull(&params, grid).and_then(|h| {
            let label = label_hull(&h, s.u_knots, &setup.env, &setup.quadrature)?;
            Ok((to_point_cloud(&h).to_flat(), label))
        });
        match labeled {
            Ok((vector, label)) => out.samples.push(LabeledSample {
                params,
                speed_class: s.speed_class,
                u_knots: s.u_knots,
                label,
                vector,
            }),
            Err(e) => out.rejections.push(Rejection { index, params, reason: e.to_string() }),
        }
    }
    out
}

/// Builds several sweeps and concatenates them in the given order.
pub fn build_many(specs: &[SweepSpec], grid: &GridSpec<f64>, setup: &LabelingSetup) -> DatasetBuild {
    let mut all = DatasetBuild::default();
    for s in specs {
        all.extend(build_dataset(s, grid, setup));
    }
    all
}

/// Deterministically splits off `fraction` of the samples: returns
/// `(kept, held_out)`, both in original order.
pub fn split_holdout(samples: &[LabeledSample], fraction: f64, seed: u64) -> (Vec<LabeledSample>, Vec<LabeledSample>) {
    let n_hold = ((samples.len() as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut held = vec![false; samples.len()];
    for &i in &idx[..n_hold] {
        held[i] = true;
    }
    let (mut kept, mut out) = (Vec::new(), Vec::new());
    for (s, h) in samples.iter().zip(held) {
        if h { out.push(s.clone()) } else { kept.push(s.clone()) }
    }
    (kept, out)
}

/// Deterministic subset of at most `n` samples, in original order.
pub fn subset(samples: &[LabeledSample], n: usize, seed: u64) -> Vec<LabeledSample> {
    if samples.len() <= n {
        return samples.to_vec();
    }
    let fraction = 1.0 - n as f64 / samples.len() as f64;
    let (kept, _) = split_holdout(samples, fraction, seed);
    kept
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Path of the statistics sidecar: same basename, `.stats` extension.
pub fn stats_path(path: &Path) -> PathBuf {
    path.with_extension("stats")
}

/// A corpus as persisted on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
    pub stats: DatasetStats,
    pub setup: LabelingSetup,
}

/// Writes the corpus CSV and its `.stats` sidecar.
pub fn write_csv(path: &Path, samples: &[LabeledSample], stats: &DatasetStats, setup: &LabelingSetup) -> Result<()> {
    let dim = stats.coord_min.len();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?));
    let mut header: Vec<String> = META_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((1..=dim).map(|k| format!("v_{k:04}")));
    w.write_record(&header).map_err(csv_err)?;
    for s in samples {
        if s.vector.len() != dim {
            return Err(Error::Shape(format!("sample vector length {} != {dim}", s.vector.len())));
        }
        let p = &s.params;
        let mut rec = vec![s.speed_class.as_str().to_string()];
        rec.extend(
            [s.u_knots, p.length, p.beam, p.draft, p.cb, p.cm, p.cw, s.label.cd, s.label.w]
                .iter()
                .chain(&s.vector)
                .map(|&v| fmt_f64(v)),
        );
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    write_stats(&stats_path(path), stats, setup)
}

fn write_stats(path: &Path, stats: &DatasetStats, setup: &LabelingSetup) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "count={}", stats.count)?;
    for (k, name) in ["cd", "w", "u"].iter().enumerate() {
        writeln!(w, "{name}.min={}", fmt_f64(stats.label_min[k]))?;
        writeln!(w, "{name}.max={}", fmt_f64(stats.label_max[k]))?;
        writeln!(w, "{name}.mean={}", fmt_f64(stats.label_mean[k]))?;
        writeln!(w, "{name}.std={}", fmt_f64(stats.label_std[k]))?;
    }
    writeln!(w, "labeling.g={}", fmt_f64(setup.env.g))?;
    writeln!(w, "labeling.rho={}", fmt_f64(setup.env.rho))?;
    writeln!(w, "labeling.nu={}", fmt_f64(setup.env.nu))?;
    writeln!(w, "labeling.n_theta={}", setup.quadrature.n_theta)?;
    writeln!(w, "labeling.theta_max={}", fmt_f64(setup.quadrature.theta_max))?;
    writeln!(w, "labeling.refinement_factor={}", setup.quadrature.refinement_factor)?;
    writeln!(w, "coord.count={}", stats.coord_min.len())?;
    for (k, (lo, hi)) in stats.coord_min.iter().zip(&stats.coord_max).enumerate() {
        writeln!(w, "coord.min.{:04}={}", k + 1, fmt_f64(*lo))?;
        writeln!(w, "coord.max.{:04}={}", k + 1, fmt_f64(*hi))?;
    }
    w.flush()?;
    Ok(())
}

fn read_stats(path: &Path) -> Result<(DatasetStats, LabelingSetup)> {
    let file = File::open(path)
        .map_err(|e| Error::Format(format!("cannot open stats sidecar {}: {e}", path.display())))?;
    let mut kv = BTreeMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("{}: line {}: expected key=value", path.display(), n + 1)))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| -> Result<f64> {
        let raw = kv.get(k).ok_or_else(|| Error::Format(format!("{}: missing key {k}", path.display())))?;
        raw.parse().map_err(|_| Error::Format(format!("{}: key {k}: not a number: {raw:?}", path.display())))
    };
    let get_usize = |k: &str| -> Result<usize> {
        let raw = kv.get(k).ok_or_else(|| Error::Format(format!("{}: missing key {k}", path.display())))?;
        raw.parse().map_err(|_| Error::Format(format!("{}: key {k}: not an integer: {raw:?}", path.display())))
    };
    let mut stats = DatasetStats {
        count: get_usize("count")?,
        label_min: [0.0; 3],
        label_max: [0.0; 3],
        label_mean: [0.0; 3],
        label_std: [0.0; 3],
        coord_min: Vec::new(),
        coord_max: Vec::new(),
    };
    for (k, name) in ["cd", "w", "u"].iter().enumerate() {
        stats.label_min[k] = get(&format!("{name}.min"))?;
        stats.label_max[k] = get(&format!("{name}.max"))?;
        stats.label_mean[k] = get(&format!("{name}.mean"))?;
        stats.label_std[k] = get(&format!("{name}.std"))?;
    }
    let dim = get_usize("coord.count")?;
    for k in 1..=dim {
        stats.coord_min.push(get(&format!("coord.min.{k:04}"))?);
        stats.coord_max.push(get(&format!("coord.max.{k:04}"))?);
    }
    let setup = LabelingSetup {
        env: HydroEnv { g: get("labeling.g")?, rho: get("labeling.rho")?, nu: get("labeling.nu")? },
        quadrature: QuadratureSpec {
            n_theta: get_usize("labeling.n_theta")?,
            theta_max: get("labeling.theta_max")?,
            refinement_factor: get_usize("labeling.refinement_factor")?,
            convergence_tol: None,
        },
    };
    Ok((stats, setup))
}

/// Reads a corpus CSV and its `.stats` sidecar.
pub fn read_csv(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::Format(format!("cannot open {}: {e}", path.display())))?;
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(BufReader::new(file));
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.len() <= META_COLUMNS.len() || header[..META_COLUMNS.len()] != META_COLUMNS {
        return Err(Error::Format(format!(
            "{}: header must start with {}",
            path.display(),
            META_COLUMNS.join(",")
        )));
    }
    let dim = header.len() - META_COLUMNS.len();
    for (k, name) in header[META_COLUMNS.len()..].iter().enumerate() {
        if *name != format!("v_{:04}", k + 1) {
            return Err(Error::Format(format!("{}: header column {} is {name:?}", path.display(), k + 11)));
        }
    }
    let mut samples = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(csv_err)?;
        if rec.len() != header.len() {
            return Err(Error::Format(format!(
                "{}: row {line}: expected {} columns, found {}",
                path.display(),
                header.len(),
                rec.len()
            )));
        }
        let speed_class: SpeedClass = rec[0]
            .parse()
            .map_err(|_| Error::Format(format!("{}: row {line}, column 1: bad speed class {:?}", path.display(), &rec[0])))?;
        let mut vals = Vec::with_capacity(rec.len() - 1);
        for (col, cell) in rec.iter().enumerate().skip(1) {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::Format(format!(
                    "{}: row {line}, column {} ({}): not a number: {cell:?}",
                    path.display(),
                    col + 1,
                    header[col]
                ))
            })?;
            vals.push(v);
        }
        samples.push(LabeledSample {
            params: WigleyParams::new(vals[1], vals[2], vals[3], vals[4], vals[5], vals[6]),
            speed_class,
            u_knots: vals[0],
            label: HullLabel { cd: vals[7], w: vals[8], u: vals[0] },
            vector: vals[9..].to_vec(),
        });
    }
    debug_assert!(samples.iter().all(|s| s.vector.len() == dim));
    let (stats, setup) = read_stats(&stats_path(path))?;
    if stats.coord_min.len() != dim {
        return Err(Error::Format(format!(
            "stats sidecar has {} coordinates, corpus has {dim}",
            stats.coord_min.len()
        )));
    }
    Ok(Dataset { samples, stats, setup })
}

fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Format(format!("csv error at row {}: {e}", p.line())),
        None => Error::Format(format!("csv error: {e}")),
    }
}
