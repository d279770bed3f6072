//! Report rendering: paper-style plain-text tables (with "—" for
//! not-applicable cells) and a flat CSV form.

use crate::pipeline::EvaluationReport;

fn pct(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:.2}%", v * 100.0),
        None => "—".to_string(),
    }
}

fn num(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v}"),
        None => "—".to_string(),
    }
}

/// Aligned plain-text table, one row per (model family, core feature).
pub fn render_table(report: &EvaluationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("Experiment: {}\n", report.experiment));
    if let Some(a) = &report.annotation {
        out.push_str(&format!("Annotation: {a}\n"));
    }
    out.push_str(&format!(
        "Data: {} train / {} cv / {} test\n\n",
        report.train_count, report.cv_count, report.test_count
    ));

    let header = ["Model", "Core feature", "C", "epsilon", "CV error", "Test error"];
    let rows: Vec<[String; 6]> = report
        .rows
        .iter()
        .map(|r| {
            [
                r.family.clone(),
                r.core_feature.clone(),
                num(r.c),
                num(r.epsilon.map(|e| (e * 1000.0).round() / 1000.0)),
                pct(r.cv_error),
                pct(r.test_error),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let fmt_row = |cells: &[String]| -> String {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{:<width$}", c, width = w))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    out.push_str(&fmt_row(&header.map(String::from)));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in &rows {
        out.push_str(&fmt_row(row));
        out.push('\n');
    }

    let weight_rows: Vec<_> = report.rows.iter().filter(|r| r.weights.is_some()).collect();
    if !weight_rows.is_empty() {
        for r in weight_rows {
            out.push_str(&format!("\nFeature weights — {} ({})\n", r.family, r.core_feature));
            let weights = r.weights.as_ref().unwrap();
            let name_w = weights.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0);
            for (name, w) in weights {
                out.push_str(&format!("  {:<width$}  {:>12.6}\n", name, w, width = name_w));
            }
        }
    }
    out
}

/// Flat CSV rendering of the report rows.
pub fn render_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("family,core_feature,status,c,epsilon,cv_error,test_error\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.family_id,
            r.core_feature,
            r.status,
            r.c.map(|v| v.to_string()).unwrap_or_default(),
            r.epsilon.map(|v| v.to_string()).unwrap_or_default(),
            r.cv_error.map(|v| v.to_string()).unwrap_or_default(),
            r.test_error.map(|v| v.to_string()).unwrap_or_default(),
        ));
    }
    out
}
