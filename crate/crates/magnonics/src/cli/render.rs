//! Human-readable rendering of fit reports.

use std::fmt::Write as _;

use crate::data::ReportDoc;

fn si(value: f64) -> String {
    let a = value.abs();
    if value == 0.0 {
        "0".to_string()
    } else if a >= 1e9 {
        format!("{:.6} GHz", value / 1e9)
    } else if a >= 1e6 {
        format!("{:.4} MHz", value / 1e6)
    } else if a >= 1e3 {
        format!("{:.4} kHz", value / 1e3)
    } else if a >= 1.0 {
        format!("{value:.4} Hz")
    } else {
        format!("{:.3} mHz", value * 1e3)
    }
}

fn plain(value: f64) -> String {
    let a = value.abs();
    if a != 0.0 && (a >= 1e4 || a < 1e-3) {
        format!("{value:.4e}")
    } else {
        format!("{value:.6}")
    }
}

/// Render one report as a fixed-width text summary. The output is a pure
/// function of the document, so identical inputs give identical bytes.
pub fn render_text(doc: &ReportDoc) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "== {} ({})", doc.kind, doc.manifest.toolkit_version);
    let _ = writeln!(out, "command: {}", doc.manifest.command_line);
    for input in &doc.manifest.inputs {
        let _ = writeln!(out, "input:   {} (fnv1a64 {})", input.path, input.fnv1a64);
    }
    if !doc.manifest.seeds.is_empty() {
        let seeds: Vec<String> = doc.manifest.seeds.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "seeds:   {}", seeds.join(", "));
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "parameters (value +- standard error):");
    for (name, value) in &doc.params {
        let err = doc.errors.get(name).copied().unwrap_or(0.0);
        let rendered = if name.ends_with("_hz") {
            format!("{} +- {}", si(*value), si(err))
        } else {
            format!("{} +- {}", plain(*value), plain(err))
        };
        let _ = writeln!(out, "  {name:<24} {rendered}");
    }
    if !doc.derived.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "derived:");
        for (name, value) in &doc.derived {
            let rendered = if name == "cooperativity" {
                format!("C = {:.1e} ({:.0})", value, value)
            } else if name.ends_with("_hz") {
                si(*value)
            } else {
                plain(*value)
            };
            let _ = writeln!(out, "  {name:<24} {rendered}");
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "convergence: {} ({}) after {} iterations, residual norm {:.6e}",
        if doc.convergence.converged { "converged" } else { "NOT converged" },
        doc.convergence.stop_reason,
        doc.convergence.iterations,
        doc.convergence.residual_norm
    );
    if !doc.columns.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "columns (current_ma, f_fmr, err, converged):");
        for c in &doc.columns {
            let _ = writeln!(
                out,
                "  {:>8.3}  {}  {}  {}",
                c.current_ma,
                si(c.f_fmr_hz),
                si(c.f_fmr_err_hz),
                if c.converged { "yes" } else { "no" }
            );
        }
    }
    if !doc.excluded.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "excluded points (x, observed, model, residual):");
        for row in &doc.excluded {
            let _ = writeln!(
                out,
                "  {:>10.4}  {}  {}  {:+.4e}",
                row.x,
                si(row.observed),
                si(row.model),
                row.residual
            );
        }
    }
    if !doc.notes.is_empty() {
        let _ = writeln!(out);
        for note in &doc.notes {
            let _ = writeln!(out, "note: {note}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Convergence, RunManifest};

    #[test]
    fn cooperativity_rendering_matches_short_form() {
        let doc = ReportDoc {
            schema_version: 1,
            kind: "sweep-fit".into(),
            manifest: RunManifest {
                toolkit_version: "0.1.0".into(),
                command_line: "magnonics fit s.csv".into(),
                inputs: vec![],
                timestamp: None,
                seeds: vec![],
            },
            params: [("g_m_hz".to_string(), 47.0e6)].into(),
            errors: Default::default(),
            derived: [("cooperativity".to_string(), 2975.08)].into(),
            convergence: Convergence {
                converged: true,
                stop_reason: "cost_tolerance".into(),
                iterations: 12,
                residual_norm: 1e-12,
            },
            notes: vec![],
            columns: vec![],
            excluded: vec![],
        };
        let text = render_text(&doc);
        assert!(text.contains("C = 3.0e3 (2975)"), "{text}");
        assert_eq!(text, render_text(&doc));
    }
}
