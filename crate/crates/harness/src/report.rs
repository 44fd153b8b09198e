use std::fmt::Write as _;
use std::path::Path;

use lint_llm::Metric;
use serde::{Deserialize, Serialize};

/// Normal-approximation half width: 1.96 times the standard error, with the
/// sample standard deviation. Zero for fewer than two values.
pub fn ci95(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    1.96 * (var / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mean: f64,
    pub ci: f64,
    pub n: usize,
}

impl Cell {
    pub fn from_values(values: &[f64]) -> Option<Cell> {
        if values.is_empty() {
            return None;
        }
        Some(Cell {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            ci: ci95(values),
            n: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    /// One entry per table metric, `None` when nothing was measured.
    pub cells: Vec<Option<Cell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub title: String,
    pub metrics: Vec<Metric>,
    pub rows: Vec<Row>,
}

pub fn arrow(m: Metric) -> &'static str {
    if m.higher_is_better() {
        "↑"
    } else {
        "↓"
    }
}

fn header(m: Metric) -> String {
    let name = m.name();
    let mut c = name.chars();
    let cap = c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default();
    format!("{cap} {}", arrow(m))
}

impl SummaryTable {
    pub fn new(title: impl Into<String>, metrics: Vec<Metric>) -> Self {
        SummaryTable {
            title: title.into(),
            metrics,
            rows: Vec::new(),
        }
    }

    /// Adds a row from per-program values, one vector per table metric.
    pub fn push(&mut self, label: impl Into<String>, per_metric: &[Vec<f64>]) {
        self.rows.push(Row {
            label: label.into(),
            cells: per_metric.iter().map(|v| Cell::from_values(v)).collect(),
        });
    }

    pub fn row(&self, label: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn cell(&self, label: &str, m: Metric) -> Option<Cell> {
        let i = self.metrics.iter().position(|x| *x == m)?;
        self.row(label)?.cells.get(i).copied().flatten()
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        writeln!(s, "### {}", self.title).unwrap();
        writeln!(s).unwrap();
        let heads: Vec<String> = self.metrics.iter().map(|m| header(*m)).collect();
        writeln!(s, "| Condition | {} |", heads.join(" | ")).unwrap();
        writeln!(s, "|---|{}", "---|".repeat(self.metrics.len())).unwrap();
        for r in &self.rows {
            let cells: Vec<String> = r
                .cells
                .iter()
                .map(|c| match c {
                    Some(c) => format!("{:.3} ± {:.3}", c.mean, c.ci),
                    None => "n/a".to_string(),
                })
                .collect();
            writeln!(s, "| {} | {} |", r.label, cells.join(" | ")).unwrap();
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("table,condition,metric,direction,mean,ci95,n\n");
        for r in &self.rows {
            for (m, c) in self.metrics.iter().zip(&r.cells) {
                let dir = if m.higher_is_better() { "up" } else { "down" };
                match c {
                    Some(c) => writeln!(s, "{},{},{},{},{:.6},{:.6},{}", csv_field(&self.title), csv_field(&r.label), m.name(), dir, c.mean, c.ci, c.n),
                    None => writeln!(s, "{},{},{},{},,,0", csv_field(&self.title), csv_field(&r.label), m.name(), dir),
                }
                .unwrap();
            }
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_markdown(tables: &[SummaryTable]) -> String {
    tables.iter().map(SummaryTable::to_markdown).collect::<Vec<_>>().join("\n")
}

/// CSV of several tables sharing one header.
pub fn render_csv(tables: &[SummaryTable]) -> String {
    let mut s = String::from("table,condition,metric,direction,mean,ci95,n\n");
    for t in tables {
        s.extend(t.to_csv().lines().skip(1).map(|l| format!("{l}\n")));
    }
    s
}

pub const SUMMARY_MD: &str = "summary.md";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const TABLES_JSON: &str = "tables.json";

/// Writes `summary.md`, `summary.csv` and `tables.json` into `dir`.
pub fn write_report(tables: &[SummaryTable], dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(SUMMARY_MD), render_markdown(tables))?;
    std::fs::write(dir.join(SUMMARY_CSV), render_csv(tables))?;
    let json = serde_json::to_string_pretty(tables).expect("tables serialize");
    std::fs::write(dir.join(TABLES_JSON), json + "\n")
}

pub fn read_tables(path: &Path) -> std::io::Result<Vec<SummaryTable>> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> SummaryTable {
        let mut t = SummaryTable::new("Behavior metrics", Metric::ALL.to_vec());
        for label in ["LINT", "Rand", "Rand-Other", "Closest-Syntax", "Closest-Feature", "k-Shot"] {
            t.push(label, &[vec![0.5, 0.7], vec![1.0, 0.0], vec![0.25]]);
        }
        t
    }

    #[test]
    fn ci_examples() {
        assert_eq!(ci95(&[]), 0.0);
        assert_eq!(ci95(&[0.3]), 0.0);
        // sd of (0, 1) is sqrt(0.5); stderr = 0.5
        assert!((ci95(&[0.0, 1.0]) - 0.98).abs() < 1e-12);
        assert!(ci95(&[0.4, 0.4, 0.4]) < 1e-12);
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = SummaryTable::new("Empty", Metric::ALL.to_vec());
        let md = t.to_markdown();
        assert_eq!(md.lines().filter(|l| l.starts_with('|')).count(), 2);
        assert_eq!(t.to_csv().lines().count(), 1);
    }

    #[test]
    fn six_rows_three_columns_with_arrows() {
        let t = table();
        let md = t.to_markdown();
        assert!(md.contains("| Condition | Action ↑ | Outcome ↑ | Feature ↓ |"));
        let body: Vec<&str> = md.lines().filter(|l| l.starts_with('|')).skip(2).collect();
        assert_eq!(body.len(), 6);
        assert!(body.iter().all(|l| l.matches(" ± ").count() == 3));
        assert_eq!(t.to_csv().lines().count(), 1 + 6 * 3);
        let c = t.cell("Rand", Metric::Action).unwrap();
        assert!((c.mean - 0.6).abs() < 1e-12);
    }

    #[test]
    fn deterministic_bytes_and_round_trip() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write_report(&[table()], a.path()).unwrap();
        write_report(&[table()], b.path()).unwrap();
        for f in [SUMMARY_MD, SUMMARY_CSV, TABLES_JSON] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        }
        assert_eq!(read_tables(&a.path().join(TABLES_JSON)).unwrap(), vec![table()]);
    }

    #[test]
    fn csv_quotes_commas() {
        let mut t = SummaryTable::new("a,b", vec![Metric::Action]);
        t.push("x", &[vec![1.0]]);
        assert!(t.to_csv().contains("\"a,b\",x,action,up,1.000000,0.000000,1"));
    }
}
