//! Fixed-width console tables.

use taxeval::report::{AblationReport, AgreementReport, MetricReport};

const METRIC_HEADERS: [&str; 5] =
    ["Exclusivity ↑", "Coverage ↑", "Balance ↑", "Macro F1 ↑", "Micro F1 ↑"];

/// Canonical row order: the four published taxonomies first, then user
/// taxonomies alphabetically.
pub fn order_key(id: &str) -> (usize, String) {
    match taxeval::taxonomy::builtin::IDS.iter().position(|known| *known == id) {
        Some(i) => (i, String::new()),
        None => (taxeval::taxonomy::builtin::IDS.len(), id.to_string()),
    }
}

fn render_rows(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let emit = |out: &mut String, cells: &[String]| {
        let line: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let pad = widths[i] - c.chars().count();
                if i == 0 {
                    format!("{c}{}", " ".repeat(pad))
                } else {
                    format!("{}{c}", " ".repeat(pad))
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    };
    emit(&mut out, header);
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        emit(&mut out, row);
    }
    out
}

fn score_cells(report: &MetricReport) -> Vec<String> {
    let s = &report.scores;
    vec![
        format!("{:.3}", s.exclusivity),
        format!("{:.3}", s.coverage),
        format!("{:.3}", s.balance),
        format!("{:.3}", s.macro_f1),
        format!("{:.3}", s.micro_f1),
        report.excluded.to_string(),
    ]
}

/// One row per taxonomy, columns Exclusivity/Coverage/Balance/Macro/Micro.
pub fn metric_table(reports: &[&MetricReport]) -> String {
    let mut header: Vec<String> = vec!["Taxonomy".to_string()];
    header.extend(METRIC_HEADERS.iter().map(|s| s.to_string()));
    header.push("Excluded".to_string());
    let mut sorted: Vec<&&MetricReport> = reports.iter().collect();
    sorted.sort_by_key(|r| order_key(&r.taxonomy));
    let rows: Vec<Vec<String>> = sorted
        .iter()
        .map(|r| {
            let mut row = vec![r.taxonomy.clone()];
            row.extend(score_cells(r));
            row
        })
        .collect();
    render_rows(&header, &rows)
}

/// Before/after/delta rows for one fusion ablation.
pub fn ablation_table(report: &AblationReport) -> String {
    let mut header: Vec<String> = vec!["Run".to_string()];
    header.extend(METRIC_HEADERS.iter().map(|s| s.to_string()));
    header.push("Excluded".to_string());
    let mut before = vec![report.taxonomy.clone()];
    before.extend(score_cells(&report.before));
    let mut after = vec![format!("{} (Fusion)", report.taxonomy)];
    after.extend(score_cells(&report.after));
    let d = &report.deltas;
    let delta_row = vec![
        "Delta".to_string(),
        format!("{:+.3}", d.exclusivity),
        format!("{:+.3}", d.coverage),
        format!("{:+.3}", d.balance),
        format!("{:+.3}", d.macro_f1),
        format!("{:+.3}", d.micro_f1),
        String::new(),
    ];
    render_rows(&header, &[before, after, delta_row])
}

/// Pairwise kappa rows plus the average row.
pub fn agreement_table(report: &AgreementReport) -> String {
    let mut header = vec!["Pair".to_string()];
    header.extend(report.taxonomies.iter().cloned());
    let mut rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|row| {
            let mut cells = vec![row.pair.clone()];
            cells.extend(
                report.taxonomies.iter().map(|t| format!("{:.3}", row.kappa[t])),
            );
            cells
        })
        .collect();
    let mut avg = vec!["Average".to_string()];
    avg.extend(report.taxonomies.iter().map(|t| format!("{:.3}", report.average[t])));
    rows.push(avg);
    render_rows(&header, &rows)
}
