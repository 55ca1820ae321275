use std::fmt::Write as _;

use xvrmot_core::ingest::EvaluationReport;

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

/// Human-readable summary: one row per description plus the aggregate.
pub fn render_table(report: &EvaluationReport) -> String {
    let width = report.descriptions.iter().map(|d| d.description_id.len()).max().unwrap_or(0).max(11);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$} {:>8} {:>8} {:>8} {:>8} {:>7} {:>7} {:>7} {:>7}",
        "description", "CVIDF1", "CVMA", "CVIDP", "CVIDR", "GT", "miss", "FP", "MME"
    );
    for d in &report.descriptions {
        let _ = writeln!(
            out,
            "{:<width$} {:>8} {:>8} {:>8} {:>8} {:>7} {:>7} {:>7} {:>7}",
            d.description_id,
            pct(d.cvidf1),
            pct(d.cvma_raw),
            pct(d.id_measures.cvidp),
            pct(d.id_measures.cvidr),
            d.totals.gt,
            d.totals.misses,
            d.totals.false_positives,
            d.totals.mismatches()
        );
    }
    let a = &report.aggregate;
    match (a.cvridf1, a.cvrma) {
        (Some(f1), Some(ma)) => {
            let _ = writeln!(out, "CVRIDF1 {}  CVRMA {}  over {} descriptions", pct(f1), pct(ma), a.n_l);
        }
        _ => {
            let _ = writeln!(out, "CVRIDF1 and CVRMA undefined: no descriptions");
        }
    }
    out
}
