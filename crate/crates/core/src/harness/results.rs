//! Aggregated result tables and their CSV / plot-data forms.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Scheme;
use crate::metrics::TrialMetrics;

pub const CSV_HEADER: &str = "scheme,t_p,nmse_mean,nmse_stderr,rate_mean,rate_stderr,trials";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub t_p: usize,
    pub nmse_mean: f64,
    pub nmse_stderr: f64,
    pub rate_mean: f64,
    pub rate_stderr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

impl ResultsTable {
    /// One row per `(scheme, T_p)`, ordered by scheme then `T_p`. The input
    /// order within a group does not affect the result beyond float
    /// summation order, so callers pass trials sorted by block index.
    pub fn aggregate(metrics: &[TrialMetrics]) -> ResultsTable {
        let mut groups: BTreeMap<(Scheme, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for m in metrics {
            let g = groups.entry((m.scheme, m.t_p)).or_default();
            g.0.push(m.nmse);
            g.1.push(m.rate);
        }
        let rows = groups
            .into_iter()
            .map(|((scheme, t_p), (nm, rt))| {
                let (nmse_mean, nmse_stderr) = mean_stderr(&nm);
                let (rate_mean, rate_stderr) = mean_stderr(&rt);
                ResultRow {
                    scheme,
                    t_p,
                    nmse_mean,
                    nmse_stderr,
                    rate_mean,
                    rate_stderr,
                    trials: nm.len(),
                }
            })
            .collect();
        ResultsTable { rows }
    }

    pub fn get(&self, scheme: Scheme, t_p: usize) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.t_p == t_p)
    }

    pub fn schemes(&self) -> Vec<Scheme> {
        let mut s: Vec<Scheme> = self.rows.iter().map(|r| r.scheme).collect();
        s.sort();
        s.dedup();
        s
    }

    pub fn pilot_lengths(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.rows.iter().map(|r| r.t_p).collect();
        t.sort();
        t.dedup();
        t
    }

    /// Rows of one scheme ordered by `T_p`.
    pub fn series(&self, scheme: Scheme) -> Vec<ResultRow> {
        let mut s: Vec<ResultRow> = self.rows.iter().filter(|r| r.scheme == scheme).copied().collect();
        s.sort_by_key(|r| r.t_p);
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Config(format!("csv encoding failed: {e}")))?;
        }
        let body = w.into_inner().map_err(|e| Error::Config(format!("csv encoding failed: {e}")))?;
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<ResultsTable> {
        let first = text.lines().next().unwrap_or("");
        if first.trim_end() != CSV_HEADER {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header '{CSV_HEADER}'"),
            });
        }
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize::<ResultRow>().enumerate() {
            rows.push(rec.map_err(|e| Error::Parse {
                line: i + 2,
                msg: e.to_string(),
            })?);
        }
        Ok(ResultsTable { rows })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<ResultsTable> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ResultsTable::from_csv(&text)
    }

    /// Plot data with `t_p` as the first column and one column per scheme.
    pub fn plot_data(&self, value: impl Fn(&ResultRow) -> f64) -> String {
        let schemes = self.schemes();
        let mut out = String::from("t_p");
        for s in &schemes {
            out.push(',');
            out.push_str(s.as_str());
        }
        out.push('\n');
        for t in self.pilot_lengths() {
            out.push_str(&t.to_string());
            for s in &schemes {
                out.push(',');
                if let Some(r) = self.get(*s, t) {
                    out.push_str(&value(r).to_string());
                }
            }
            out.push('\n');
        }
        out
    }

    /// Writes `nmse_vs_pilots.csv` and `rate_vs_pilots.csv` into `dir`.
    pub fn write_plot_data(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            ("nmse_vs_pilots.csv", self.plot_data(|r| r.nmse_mean)),
            ("rate_vs_pilots.csv", self.plot_data(|r| r.rate_mean)),
        ];
        let mut paths = Vec::new();
        for (name, body) in files {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
            paths.push(p);
        }
        Ok(paths)
    }
}
