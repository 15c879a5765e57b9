//! Report rendering: a results table, CSV, JSON and a one-line scatter
//! record for cost/score plots.

use std::fmt::Write as _;

use genomagent_core::{Category, Usd};
use serde::{Deserialize, Serialize};

use crate::run::ScoreReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
    Json,
    Scatter,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 4] = [ReportFormat::Table, ReportFormat::Csv, ReportFormat::Json, ReportFormat::Scatter];

    /// Conventional output file name.
    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Table => "report.txt",
            ReportFormat::Csv => "report.csv",
            ReportFormat::Json => "report.json",
            ReportFormat::Scatter => "scatter.csv",
        }
    }
}

/// One row of the CSV report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub level: String,
    pub name: String,
    pub items: usize,
    pub score: f64,
    pub cost_usd: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub label: String,
    pub avg_score: f64,
    pub total_cost_usd: String,
}

fn short_category(c: Category) -> &'static str {
    match c {
        Category::Nomenclature => "Nomenclature",
        Category::GenomicLocation => "Genomic Location",
        Category::FunctionalAnalysis => "Functional Analysis",
        Category::SequenceAlignment => "Sequence Alignment",
    }
}

fn money(u: Usd) -> String {
    u.format_places(2)
}

fn table(report: &ScoreReport) -> String {
    let mut header = vec!["Method".to_string()];
    let mut row = vec![report.label.clone()];
    for category in Category::ALL {
        header.push(format!("{} Score", short_category(category)));
        header.push(format!("{} Cost", short_category(category)));
        match report.categories.iter().find(|c| c.category == category) {
            Some(c) => {
                row.push(c.score.display(2));
                row.push(money(c.cost_usd));
            }
            None => {
                row.push("-".into());
                row.push("-".into());
            }
        }
    }
    header.push("Avg".into());
    header.push("Total".into());
    row.push(report.category_average.display(2));
    row.push(money(report.total_cost_usd));

    let mut out = String::new();
    let md = |cells: &[String]| format!("| {} |", cells.join(" | "));
    let _ = writeln!(out, "{}", md(&header));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    let _ = writeln!(out, "{}", md(&row));
    let _ = writeln!(out);

    let _ = writeln!(out, "| Task | Items | Score | Cost |");
    let _ = writeln!(out, "|---|---|---|---|");
    for t in &report.tasks {
        let _ = writeln!(out, "| {} | {} | {} | {} |", t.task.short_name(), t.items, t.score.display(2), t.cost_usd);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Macro average over tasks: {}", report.macro_average.display(2));
    let _ = writeln!(out, "Mean over categories: {}", report.category_average.display(2));
    let _ = writeln!(out, "Total cost (USD): {}", report.total_cost_usd);
    let m = &report.metadata;
    let _ = write!(out, "Backend: {}; model: {}", m.backend, m.model);
    if let Some(ts) = &m.timestamp {
        let _ = write!(out, "; run at {ts}");
    }
    out.push('\n');
    out
}

pub fn csv_rows(report: &ScoreReport) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for t in &report.tasks {
        rows.push(CsvRow {
            level: "task".into(),
            name: t.task.slug().into(),
            items: t.items,
            score: t.score.to_f64(),
            cost_usd: t.cost_usd.to_string(),
        });
    }
    for c in &report.categories {
        rows.push(CsvRow {
            level: "category".into(),
            name: c.category.display_name().into(),
            items: c.items,
            score: c.score.to_f64(),
            cost_usd: c.cost_usd.to_string(),
        });
    }
    let items = report.results.len();
    rows.push(CsvRow {
        level: "overall".into(),
        name: "macro_average".into(),
        items,
        score: report.macro_average.to_f64(),
        cost_usd: report.total_cost_usd.to_string(),
    });
    rows.push(CsvRow {
        level: "overall".into(),
        name: "category_average".into(),
        items,
        score: report.category_average.to_f64(),
        cost_usd: report.total_cost_usd.to_string(),
    });
    rows
}

fn write_csv<T: Serialize>(rows: &[T]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("in-memory csv write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

pub fn scatter_rows(report: &ScoreReport) -> Vec<ScatterRow> {
    vec![ScatterRow {
        label: report.label.clone(),
        avg_score: report.category_average.to_f64(),
        total_cost_usd: report.total_cost_usd.to_string(),
    }]
}

pub fn emit_report(report: &ScoreReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => table(report),
        ReportFormat::Csv => write_csv(&csv_rows(report)),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Scatter => write_csv(&scatter_rows(report)),
    }
}
