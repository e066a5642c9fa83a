//! Manifest-driven batch scoring and the report formats.
//!
//! A manifest is a UTF-8 CSV with a header naming `ref_path`, `dist_path`
//! and `mos`. Relative image paths are resolved against the manifest's
//! directory. Rows are scored on a worker pool; output is always in
//! manifest order and a failing row is reported in place instead of
//! aborting the run.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Encoding, MetricConfig, OutputFormat};
use crate::error::{Error, Result};
use crate::eval::ScoreRecord;
use crate::metric::Lgfm;
use crate::similarity::{Mode, QualityScore};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub ref_path: String,
    pub dist_path: String,
    /// Raw `mos` field; parsed per row so one bad value fails only its row.
    pub mos: String,
}

fn manifest_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| manifest_err(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| manifest_err(path, e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| manifest_err(path, format!("missing column {name:?}")))
    };
    let (ci, cd, cm) = (column("ref_path")?, column("dist_path")?, column("mos")?);
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| manifest_err(path, e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("").to_string();
        rows.push(ManifestRow {
            ref_path: field(ci),
            dist_path: field(cd),
            mos: field(cm),
        });
    }
    if rows.is_empty() {
        return Err(manifest_err(path, "no data rows"));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub ref_path: String,
    pub dist_path: String,
    pub mos: Option<f64>,
    /// Final score for the configured mode.
    pub q: Option<f64>,
    pub q_local: Option<f64>,
    pub q_global: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub param_hash: String,
    pub config: MetricConfig,
    pub rows: Vec<BatchRow>,
}

impl BatchReport {
    pub fn succeeded(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_none()).count()
    }

    pub fn write(&self, mut out: impl Write, format: OutputFormat) -> Result<()> {
        match format {
            OutputFormat::Json => {
                serde_json::to_writer_pretty(&mut out, self)
                    .map_err(|e| Error::Io(e.into()))?;
                writeln!(out)?;
            }
            OutputFormat::Csv => {
                let config = serde_json::to_string(&self.config).expect("config serializes");
                writeln!(out, "# param_hash={} config={}", self.param_hash, config)?;
                let mut w = csv::Writer::from_writer(out);
                let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
                w.write_record(["ref_path", "dist_path", "mos", "q", "q_local", "q_global", "error"])
                    .map_err(csv_err)?;
                let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                for r in &self.rows {
                    w.write_record([
                        r.ref_path.clone(),
                        r.dist_path.clone(),
                        num(r.mos),
                        num(r.q),
                        num(r.q_local),
                        num(r.q_global),
                        r.error.clone().unwrap_or_default(),
                    ])
                    .map_err(csv_err)?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

fn resolve(base: Option<&Path>, p: &str) -> PathBuf {
    let path = PathBuf::from(p);
    match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path,
    }
}

fn score_row(metric: &Lgfm, base: Option<&Path>, row: &ManifestRow) -> BatchRow {
    let mut out = BatchRow {
        ref_path: row.ref_path.clone(),
        dist_path: row.dist_path.clone(),
        mos: None,
        q: None,
        q_local: None,
        q_global: None,
        error: None,
    };
    match row.mos.parse::<f64>() {
        Ok(m) if m.is_finite() => out.mos = Some(m),
        _ => {
            out.error = Some(format!("bad mos value {:?}", row.mos));
            return out;
        }
    }
    match metric.score_files(resolve(base, &row.ref_path), resolve(base, &row.dist_path)) {
        Ok(QualityScore {
            q_lgfm,
            q_local,
            q_global,
        }) => {
            out.q = Some(q_lgfm);
            out.q_local = q_local;
            out.q_global = q_global;
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

/// Scores every manifest row on `threads` workers (0 = all cores).
pub fn run_batch(manifest: &Path, config: &MetricConfig, threads: usize) -> Result<BatchReport> {
    let rows = read_manifest(manifest)?;
    let metric = Lgfm::new(config.clone())?;
    let base = manifest.parent();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let scored: Vec<BatchRow> = pool.install(|| {
        rows.par_iter()
            .map(|row| score_row(&metric, base, row))
            .collect()
    });
    Ok(BatchReport {
        param_hash: config.param_hash(),
        config: config.clone(),
        rows: scored,
    })
}

/// Single-pair report emitted by `score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub q_lgfm: f64,
    pub q_local: Option<f64>,
    pub q_global: Option<f64>,
    pub encoding: Encoding,
    pub mode: Mode,
    pub param_hash: String,
    pub config: MetricConfig,
}

impl ScoreReport {
    pub fn new(score: QualityScore, config: &MetricConfig) -> Self {
        Self {
            q_lgfm: score.q_lgfm,
            q_local: score.q_local,
            q_global: score.q_global,
            encoding: config.encoding,
            mode: config.similarity.mode,
            param_hash: config.param_hash(),
            config: config.clone(),
        }
    }

    pub fn write(&self, mut out: impl Write, format: OutputFormat) -> Result<()> {
        match format {
            OutputFormat::Json => {
                serde_json::to_writer_pretty(&mut out, self)
                    .map_err(|e| Error::Io(e.into()))?;
                writeln!(out)?;
            }
            OutputFormat::Csv => {
                let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                let config = serde_json::to_string(&self.config).expect("config serializes");
                writeln!(out, "# config={config}")?;
                writeln!(out, "q_lgfm,q_local,q_global,encoding,mode,param_hash")?;
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    self.q_lgfm,
                    num(self.q_local),
                    num(self.q_global),
                    enum_name(&self.encoding),
                    enum_name(&self.mode),
                    self.param_hash
                )?;
            }
        }
        Ok(())
    }
}

/// Plain string form of a unit enum, as serde names it.
fn enum_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Reads `(q, mos)` pairs from a batch report, CSV or JSON. Rows without a
/// score are skipped; the count of skipped rows is returned alongside.
pub fn read_scores(path: &Path) -> Result<(Vec<ScoreRecord>, usize)> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let report: BatchReport = serde_json::from_str(&text)
            .map_err(|e| manifest_err(path, e.to_string()))?;
        let mut skipped = 0;
        let mut out = Vec::new();
        for row in report.rows {
            match (row.q, row.mos) {
                (Some(q), Some(mos)) => out.push(ScoreRecord {
                    image_id: row.dist_path,
                    q,
                    mos,
                }),
                _ => skipped += 1,
            }
        }
        return Ok((out, skipped));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| manifest_err(path, e.to_string()))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let (Some(cq), Some(cm)) = (find("q"), find("mos")) else {
        return Err(manifest_err(path, "scores file needs `q` and `mos` columns"));
    };
    let cid = find("dist_path").or(find("image_id"));
    let mut skipped = 0;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| manifest_err(path, e.to_string()))?;
        let parse = |c: usize| rec.get(c).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite());
        match (parse(cq), parse(cm)) {
            (Some(q), Some(mos)) => out.push(ScoreRecord {
                image_id: cid
                    .and_then(|c| rec.get(c))
                    .map(str::to_string)
                    .unwrap_or_else(|| i.to_string()),
                q,
                mos,
            }),
            _ => skipped += 1,
        }
    }
    Ok((out, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn manifest_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(&p, "mos, ref_path ,dist_path\n3.5,a.hdr,b.hdr\nx,c.pfm,d.pfm\n").unwrap();
        let rows = read_manifest(&p).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].ref_path, "a.hdr");
        assert_eq!(rows[1].mos, "x");

        fs::write(&p, "ref_path,dist_path,mos\n").unwrap();
        assert!(matches!(read_manifest(&p), Err(Error::Manifest { .. })));
        fs::write(&p, "ref,dist_path,mos\na,b,1\n").unwrap();
        assert!(matches!(read_manifest(&p), Err(Error::Manifest { .. })));
        assert!(read_manifest(&dir.path().join("missing.csv")).is_err());
    }

    #[test]
    fn scores_csv_round_trip() {
        let report = BatchReport {
            param_hash: "abc".into(),
            config: MetricConfig::default(),
            rows: vec![
                BatchRow {
                    ref_path: "r.hdr".into(),
                    dist_path: "d1.hdr".into(),
                    mos: Some(4.0),
                    q: Some(0.97),
                    q_local: Some(0.98),
                    q_global: Some(0.98979),
                    error: None,
                },
                BatchRow {
                    ref_path: "r.hdr".into(),
                    dist_path: "d2.hdr".into(),
                    mos: Some(2.0),
                    q: None,
                    q_local: None,
                    q_global: None,
                    error: Some("i/o error: gone, really".into()),
                },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        for (format, name) in [(OutputFormat::Csv, "s.csv"), (OutputFormat::Json, "s.json")] {
            let p = dir.path().join(name);
            let mut buf = Vec::new();
            report.write(&mut buf, format).unwrap();
            fs::write(&p, &buf).unwrap();
            let (recs, skipped) = read_scores(&p).unwrap();
            assert_eq!(skipped, 1);
            assert_eq!(recs, vec![ScoreRecord { image_id: "d1.hdr".into(), q: 0.97, mos: 4.0 }]);
        }
    }

    #[test]
    fn score_report_csv_has_enum_names() {
        let cfg = MetricConfig::default();
        let r = ScoreReport::new(
            QualityScore { q_lgfm: 0.5, q_local: Some(0.5), q_global: None },
            &cfg,
        );
        let mut buf = Vec::new();
        r.write(&mut buf, OutputFormat::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let last = text.lines().last().unwrap();
        assert!(last.starts_with("0.5,0.5,,pu,full,"), "{last}");
    }
}
