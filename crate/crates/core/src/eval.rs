//! Closing the loop: relabel generated hulls and score them with MAPE.

use crate::dataset::{LabeledSample, SpeedClass};
use crate::error::{Error, Result};
use crate::geometry::{from_point_cloud, GridSpec, HullPointCloud};
use crate::hydro::{label_hull, HullLabel, HydroEnv, QuadratureSpec};
use crate::wgan::{generate, Checkpoint};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

/// Mean absolute percentage error `(1/n) Σ |ĉᵢ − cᵢ| / |cᵢ|`.
pub fn mape(requested: &[f64], recomputed: &[f64]) -> Result<f64> {
    if requested.len() != recomputed.len() {
        return Err(Error::LengthMismatch { expected: requested.len(), actual: recomputed.len() });
    }
    if requested.is_empty() {
        return Err(Error::EmptyEvaluation("no samples to score".into()));
    }
    let mut sum = 0.0;
    for (i, (&c, &h)) in requested.iter().zip(recomputed).enumerate() {
        if c == 0.0 {
            return Err(Error::DivisionByZero(format!("requested value {i} is zero")));
        }
        sum += ((h - c) / c).abs();
    }
    Ok(sum / requested.len() as f64)
}

/// The headline score: mean of the two MAPEs.
pub fn total_score(mape_cd: f64, mape_w: f64) -> f64 {
    (mape_cd + mape_w) / 2.0
}

/// One requested label and the class it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRequest {
    pub speed_class: SpeedClass,
    pub label: HullLabel<f64>,
}

/// Requests built from the labels of stored samples.
pub fn requests_from_samples(samples: &[LabeledSample]) -> Vec<EvalRequest> {
    samples.iter().map(|s| EvalRequest { speed_class: s.speed_class, label: s.label }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassReport {
    pub speed_class: SpeedClass,
    pub mape_cd: f64,
    pub mape_w: f64,
    pub total: f64,
    /// Scored (non-degenerate) hulls.
    pub samples: usize,
    /// Generated hulls rejected as degenerate.
    pub rejections: usize,
}

/// Per-class scores in class order (high, mid, low) for the classes present.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub classes: Vec<ClassReport>,
}

impl EvalReport {
    pub fn class(&self, c: SpeedClass) -> Option<&ClassReport> {
        self.classes.iter().find(|r| r.speed_class == c)
    }

    pub fn samples(&self) -> usize {
        self.classes.iter().map(|c| c.samples).sum()
    }

    pub fn rejections(&self) -> usize {
        self.classes.iter().map(|c| c.rejections).sum()
    }

    /// CSV with header `speed_class,mape_cd,mape_w,total,samples,rejections`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "speed_class,mape_cd,mape_w,total,samples,rejections")?;
        for c in &self.classes {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{},{}",
                c.speed_class, c.mape_cd, c.mape_w, c.total, c.samples, c.rejections
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8} {:>10} {:>10} {:>10} {:>8} {:>9}", "class", "MAPE(Cd)", "MAPE(W)", "Total", "samples", "rejected")?;
        for c in &self.classes {
            writeln!(
                f,
                "{:<8} {:>10.5} {:>10.5} {:>10.5} {:>8} {:>9}",
                c.speed_class.as_str(),
                c.mape_cd,
                c.mape_w,
                c.total,
                c.samples,
                c.rejections
            )?;
        }
        Ok(())
    }
}

/// Requested vs recomputed labels of every scored hull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterRow {
    pub speed_class: SpeedClass,
    pub cd_requested: f64,
    pub cd_recomputed: f64,
    pub w_requested: f64,
    pub w_recomputed: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScatterData {
    pub rows: Vec<ScatterRow>,
}

/// Column names of the scatter CSV.
pub const SCATTER_HEADER: [&str; 5] = ["speed_class", "cd_requested", "cd_recomputed", "w_requested", "w_recomputed"];

/// Writes the scatter data, two columns per label kind.
pub fn emit_scatter_csv(sd: &ScatterData, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", SCATTER_HEADER.join(","))?;
    for r in &sd.rows {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.speed_class, r.cd_requested, r.cd_recomputed, r.w_requested, r.w_recomputed
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scatter_csv(path: &Path) -> Result<ScatterData> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let header: Vec<String> =
        r.headers().map_err(|e| Error::Format(e.to_string()))?.iter().map(str::to_string).collect();
    if header != SCATTER_HEADER {
        return Err(Error::Format(format!("unexpected scatter header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Format(format!("row {}, column {}: not a number", i + 2, SCATTER_HEADER[k])))
        };
        rows.push(ScatterRow {
            speed_class: rec.get(0).unwrap_or("").parse()?,
            cd_requested: num(1)?,
            cd_recomputed: num(2)?,
            w_requested: num(3)?,
            w_recomputed: num(4)?,
        });
    }
    Ok(ScatterData { rows })
}

/// Scores hulls produced for `requests`: cloud `r * n_per_label + s`
/// answers request `r`. Hulls the hydrostatics reject as degenerate are
/// counted and left out of the MAPEs.
pub fn evaluate_clouds(
    requests: &[EvalRequest],
    clouds: &[HullPointCloud<f64>],
    n_per_label: usize,
    grid: &GridSpec<f64>,
    env: &HydroEnv<f64>,
    q: &QuadratureSpec<f64>,
) -> Result<(EvalReport, ScatterData)> {
    if clouds.len() != requests.len() * n_per_label {
        return Err(Error::LengthMismatch { expected: requests.len() * n_per_label, actual: clouds.len() });
    }
    let mut scatter = ScatterData::default();
    let mut rejected = [0usize; 3];
    for (k, cloud) in clouds.iter().enumerate() {
        let req = &requests[k / n_per_label];
        let relabeled = from_point_cloud(cloud, grid).and_then(|h| label_hull(&h, req.label.u, env, q));
        match relabeled {
            Ok(l) => scatter.rows.push(ScatterRow {
                speed_class: req.speed_class,
                cd_requested: req.label.cd,
                cd_recomputed: l.cd,
                w_requested: req.label.w,
                w_recomputed: l.w,
            }),
            Err(Error::DegenerateHull(why)) => {
                log::debug!("request {} sample {}: rejected ({why})", k / n_per_label, k % n_per_label);
                rejected[class_index(req.speed_class)] += 1;
            }
            Err(e) => return Err(e),
        }
    }
    let mut classes = Vec::new();
    for class in SpeedClass::ALL {
        if !requests.iter().any(|r| r.speed_class == class) {
            continue;
        }
        let rows: Vec<&ScatterRow> = scatter.rows.iter().filter(|r| r.speed_class == class).collect();
        let rej = rejected[class_index(class)];
        if rows.is_empty() {
            return Err(Error::EmptyEvaluation(format!("all {rej} generated {class} hulls were rejected")));
        }
        let cols = |f: fn(&ScatterRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
        let mape_cd = mape(&cols(|r| r.cd_requested), &cols(|r| r.cd_recomputed))?;
        let mape_w = mape(&cols(|r| r.w_requested), &cols(|r| r.w_recomputed))?;
        classes.push(ClassReport {
            speed_class: class,
            mape_cd,
            mape_w,
            total: total_score(mape_cd, mape_w),
            samples: rows.len(),
            rejections: rej,
        });
    }
    if classes.is_empty() {
        return Err(Error::EmptyEvaluation("no requests".into()));
    }
    Ok((EvalReport { classes }, scatter))
}

fn class_index(c: SpeedClass) -> usize {
    match c {
        SpeedClass::High => 0,
        SpeedClass::Medium => 1,
        SpeedClass::Low => 2,
    }
}

/// Generates `n_per_label` hulls per request from `ckpt` and scores them.
pub fn evaluate_model(
    ckpt: &Checkpoint,
    requests: &[EvalRequest],
    n_per_label: usize,
    env: &HydroEnv<f64>,
    q: &QuadratureSpec<f64>,
    seed: u64,
) -> Result<(EvalReport, ScatterData)> {
    let labels: Vec<HullLabel<f64>> = requests.iter().map(|r| r.label).collect();
    let clouds = generate(ckpt, &labels, n_per_label, seed)?;
    evaluate_clouds(requests, &clouds, n_per_label, &ckpt.grid, env, q)
}
