use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Architecture, ExperimentRecord, Settings};
use crate::{Error, Result};

pub const RESULTS_HEADER: [&str; 11] =
    ["arch", "N", "K", "ax", "ay", "az", "deployment", "seed", "p_T_watts", "nf_fraction", "wall_s"];

/// One line of the results CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub arch: Architecture,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub deployment: usize,
    pub seed: u64,
    #[serde(rename = "p_T_watts")]
    pub p_t_watts: f64,
    pub nf_fraction: f64,
    pub wall_s: f64,
}

/// 17 significant digits.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

/// `results.csv` → `results.<suffix>`.
pub fn sidecar_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(io_err(path))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path)(e.into()))?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config_hash: String,
    crate_version: &'static str,
    #[serde(flatten)]
    settings: &'a Settings,
}

/// Writes the results CSV, the resolved settings to `<stem>.config.json`
/// and, with `full`, every record (layouts, near-field flags, fitness
/// traces) to `<stem>.records.json`.
pub fn write_results(records: &[ExperimentRecord], settings: &Settings, path: &Path, full: bool) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(RESULTS_HEADER).map_err(csv_err(path))?;
    for r in records {
        let row = r.row();
        w.write_record([
            row.arch.as_str().to_string(),
            row.n.to_string(),
            row.k.to_string(),
            fmt_f64(row.ax),
            fmt_f64(row.ay),
            fmt_f64(row.az),
            row.deployment.to_string(),
            row.seed.to_string(),
            fmt_f64(row.p_t_watts),
            fmt_f64(row.nf_fraction),
            fmt_f64(row.wall_s),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;

    let sidecar = Sidecar { config_hash: settings.hash(), crate_version: env!("CARGO_PKG_VERSION"), settings };
    write_json(&sidecar, &sidecar_path(path, "config.json"))?;
    if full {
        write_json(&records, &sidecar_path(path, "records.json"))?;
    }
    Ok(())
}

/// Parses a results CSV, checking the header.
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?;
    if header.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(Error::Config(format!(
            "{}: unexpected header, expected {}",
            path.display(),
            RESULTS_HEADER.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}

/// Sum that does not depend on the order of `values`.
fn ordered_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Per-configuration aggregate over deployments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub arch: Architecture,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub count: usize,
    pub failures: usize,
    #[serde(rename = "mean_p_T_watts")]
    pub mean_p_t: f64,
    /// Sample standard deviation over successful deployments.
    #[serde(rename = "std_p_T_watts")]
    pub std_p_t: f64,
    /// Near-field fraction over (device, deployment) pairs.
    pub nf_fraction: f64,
    /// Fraction of deployments with at least one near-field device.
    pub nf_any: f64,
}

type GroupKey = (Architecture, usize, usize, u64, u64, u64);

/// Mean and spread of `p_T` per (arch, N, K, area). Failed rows count
/// towards `failures` only. Permutation-invariant in the input.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<GroupKey, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.arch, r.n, r.k, r.ax.to_bits(), r.ay.to_bits(), r.az.to_bits()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((arch, n, k, ax, ay, az), rows)| {
            let ok: Vec<&ResultRow> = rows.iter().copied().filter(|r| r.p_t_watts.is_finite()).collect();
            let count = ok.len();
            let mut p: Vec<f64> = ok.iter().map(|r| r.p_t_watts).collect();
            let mean = ordered_sum(&mut p) / count as f64;
            let mut sq: Vec<f64> = p.iter().map(|v| (v - mean) * (v - mean)).collect();
            let std = if count > 1 { (ordered_sum(&mut sq) / (count - 1) as f64).sqrt() } else { 0.0 };
            let mut hits: Vec<f64> = ok.iter().map(|r| (r.nf_fraction * r.k as f64).round()).collect();
            let pairs: usize = ok.iter().map(|r| r.k).sum();
            let nf_fraction = ordered_sum(&mut hits) / pairs as f64;
            let any = ok.iter().filter(|r| r.nf_fraction > 0.0).count() as f64 / count as f64;
            SummaryRow {
                arch,
                n,
                k,
                ax: f64::from_bits(ax),
                ay: f64::from_bits(ay),
                az: f64::from_bits(az),
                count,
                failures: rows.len() - count,
                mean_p_t: mean,
                std_p_t: std,
                nf_fraction,
                nf_any: any,
            }
        })
        .collect()
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "arch", "N", "K", "ax", "ay", "az", "count", "failures", "mean_p_T_watts", "std_p_T_watts", "nf_fraction",
        "nf_any",
    ])
    .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.arch.as_str().to_string(),
            r.n.to_string(),
            r.k.to_string(),
            fmt_f64(r.ax),
            fmt_f64(r.ay),
            fmt_f64(r.az),
            r.count.to_string(),
            r.failures.to_string(),
            fmt_f64(r.mean_p_t),
            fmt_f64(r.std_p_t),
            fmt_f64(r.nf_fraction),
            fmt_f64(r.nf_any),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Near-field likelihood for one (architecture, N, area).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearFieldRow {
    pub arch: Architecture,
    #[serde(rename = "N")]
    pub n: usize,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub deployments: usize,
    pub pairs: usize,
    /// Near-field fraction over (device, deployment) pairs.
    pub per_pair: f64,
    /// Fraction of deployments with at least one near-field device.
    pub any_device: f64,
}

/// Groups successful records by (architecture, N, area).
pub fn nearfield_probability(records: &[ExperimentRecord]) -> Vec<NearFieldRow> {
    let mut groups: BTreeMap<(Architecture, usize, u64, u64, u64), (usize, usize, usize, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_success()) {
        let key = (r.architecture, r.n_antennas, r.a_x.to_bits(), r.a_y.to_bits(), r.a_z.to_bits());
        let e = groups.entry(key).or_default();
        let hits = r.near_field.iter().filter(|&&f| f).count();
        e.0 += 1;
        e.1 += r.near_field.len();
        e.2 += hits;
        e.3 += usize::from(hits > 0);
    }
    groups
        .into_iter()
        .map(|((arch, n, ax, ay, az), (deployments, pairs, hits, any))| NearFieldRow {
            arch,
            n,
            ax: f64::from_bits(ax),
            ay: f64::from_bits(ay),
            az: f64::from_bits(az),
            deployments,
            pairs,
            per_pair: hits as f64 / pairs as f64,
            any_device: any as f64 / deployments as f64,
        })
        .collect()
}

pub fn write_nearfield(rows: &[NearFieldRow], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["arch", "N", "ax", "ay", "az", "deployments", "pairs", "nf_per_pair", "nf_any_device"])
        .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.arch.as_str().to_string(),
            r.n.to_string(),
            fmt_f64(r.ax),
            fmt_f64(r.ay),
            fmt_f64(r.az),
            r.deployments.to_string(),
            r.pairs.to_string(),
            fmt_f64(r.per_pair),
            fmt_f64(r.any_device),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(arch: Architecture, d: usize, p: f64, nf: Vec<bool>) -> ExperimentRecord {
        ExperimentRecord {
            config_hash: "h".into(),
            architecture: arch,
            n_antennas: 9,
            n_devices: nf.len(),
            a_x: 8.0,
            a_y: 8.0,
            a_z: 3.0,
            deployment: d,
            seed: u64::MAX - d as u64,
            p_t: p,
            near_field: nf,
            wall_s: 0.1 + d as f64,
            layout: None,
            violations: 0,
            fitness_trace: vec![],
            failure: None,
        }
    }

    #[test]
    fn nearfield_groups_per_pair_and_any() {
        let recs = vec![
            record(Architecture::Ima, 0, 1.0, vec![true, false, false]),
            record(Architecture::Ima, 1, 1.0, vec![false, false, false]),
            record(Architecture::Ula, 0, 1.0, vec![true, true, true]),
        ];
        let t = nearfield_probability(&recs);
        assert_eq!(t.len(), 2);
        assert_eq!((t[0].arch, t[0].per_pair, t[0].any_device), (Architecture::Ima, 1.0 / 6.0, 0.5));
        assert_eq!((t[1].per_pair, t[1].any_device), (1.0, 1.0));
        assert!(nearfield_probability(&[]).is_empty());
    }

    #[test]
    fn summary_is_order_independent() {
        let rows: Vec<ResultRow> = (0..7)
            .map(|d| record(Architecture::Uma, d, 0.1 * (d as f64 + 1.0).sqrt(), vec![d % 2 == 0, false]).row())
            .collect();
        let mut rev = rows.clone();
        rev.reverse();
        rev.swap(1, 4);
        assert_eq!(summarize(&rows), summarize(&rev));
        let s = &summarize(&rows)[0];
        assert_eq!((s.count, s.failures), (7, 0));
        assert_eq!(s.nf_fraction, 4.0 / 14.0);
        assert_eq!(s.nf_any, 4.0 / 7.0);
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar_path(Path::new("out/res.csv"), "config.json"), Path::new("out/res.config.json"));
    }
}
