//! `report`: model/method rows × behavior columns, each cell the mean fold
//! metric with its standard error, plus a row-mean column. Cells with no
//! results stay blank.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::Path;

use anyhow::Context;
use mtl_embed::downstream::{mean_and_stderr, Method};

use crate::config::{require_file, usage, Provenance, ReportMetric, RunConfig};
use crate::eval::ResultRow;
use crate::output::{ensure_parent, write_sidecar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub mean: f64,
    pub stderr: f64,
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub behaviors: Vec<String>,
    /// Keyed by (model, method), in sorted order.
    pub rows: Vec<((String, Method), Vec<Option<Cell>>)>,
}

impl Table {
    pub fn row_mean(cells: &[Option<Cell>]) -> Option<f64> {
        let present: Vec<f64> = cells.iter().flatten().map(|c| c.mean).collect();
        (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
    }
}

pub fn read_results(path: &Path) -> anyhow::Result<Vec<ResultRow>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(&line)
                .with_context(|| format!("{}:{}: not a result row", path.display(), i + 1))?,
        );
    }
    Ok(rows)
}

pub fn build_table(rows: &[ResultRow], metric: ReportMetric) -> Table {
    let mut values: BTreeMap<(String, Method), BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    let mut behaviors = BTreeSet::new();
    for r in rows {
        let v = match metric {
            ReportMetric::Accuracy => r.accuracy,
            ReportMetric::Wa => r.wa,
        };
        behaviors.insert(r.behavior.clone());
        values
            .entry((r.model.clone(), r.method))
            .or_default()
            .entry(r.behavior.clone())
            .or_default()
            .push(v);
    }
    let behaviors: Vec<String> = behaviors.into_iter().collect();
    let rows = values
        .into_iter()
        .map(|(key, per_behavior)| {
            let cells = behaviors
                .iter()
                .map(|b| {
                    per_behavior.get(b).map(|v| {
                        let (mean, stderr) = mean_and_stderr(v);
                        Cell {
                            mean,
                            stderr,
                            folds: v.len(),
                        }
                    })
                })
                .collect();
            (key, cells)
        })
        .collect();
    Table { behaviors, rows }
}

pub fn render_text(table: &Table, metric: ReportMetric) -> String {
    let mut header = vec!["model".to_string(), "method".to_string()];
    header.extend(table.behaviors.iter().cloned());
    header.push("mean".into());
    let mut lines = vec![header];
    for ((model, method), cells) in &table.rows {
        let mut line = vec![model.clone(), method.to_string()];
        line.extend(cells.iter().map(|c| match c {
            Some(c) => format!("{:.3} ± {:.3}", c.mean, c.stderr),
            None => String::new(),
        }));
        line.push(Table::row_mean(cells).map_or(String::new(), |m| format!("{m:.3}")));
        lines.push(line);
    }
    let widths: Vec<usize> = (0..lines[0].len())
        .map(|j| lines.iter().map(|l| l[j].chars().count()).max().unwrap_or(0))
        .collect();
    let metric = match metric {
        ReportMetric::Accuracy => "accuracy",
        ReportMetric::Wa => "weighted accuracy",
    };
    let mut out = format!("{metric} (mean ± standard error over folds)\n");
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .zip(&widths)
            .map(|(s, &w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn write_table_csv(path: &Path, table: &Table) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec!["model".to_string(), "method".to_string()];
    for b in &table.behaviors {
        header.push(b.clone());
        header.push(format!("{b}_stderr"));
    }
    header.push("mean".into());
    w.write_record(&header)?;
    for ((model, method), cells) in &table.rows {
        let mut rec = vec![model.clone(), method.to_string()];
        for c in cells {
            match c {
                Some(c) => {
                    rec.push(c.mean.to_string());
                    rec.push(c.stderr.to_string());
                }
                None => {
                    rec.push(String::new());
                    rec.push(String::new());
                }
            }
        }
        rec.push(Table::row_mean(cells).map_or(String::new(), |m| m.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(cfg: &RunConfig) -> anyhow::Result<()> {
    let c = &cfg.report;
    if c.results.is_empty() {
        return Err(usage("missing --results (or `report.results` in the config file)"));
    }
    for p in &c.results {
        require_file(p)?;
    }
    let prov = Provenance::new("report", cfg);
    let mut rows = Vec::new();
    for p in &c.results {
        rows.extend(read_results(p)?);
    }
    if rows.is_empty() {
        return Err(anyhow::anyhow!("the result files hold no rows"));
    }
    let table = build_table(&rows, c.metric);
    let text = render_text(&table, c.metric);
    print!("{text}");
    if let Some(path) = &c.output {
        ensure_parent(path)?;
        std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
        write_sidecar(path, &prov)?;
    }
    if let Some(path) = &c.csv {
        ensure_parent(path)?;
        write_table_csv(path, &table)?;
        write_sidecar(path, &prov)?;
    }
    Ok(())
}
