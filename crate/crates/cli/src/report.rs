use std::fmt::Write;

use rdagg::{ErrorReport, Verdict};

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{:.6e}", x + 0.0))
        .unwrap_or_else(|| "N/A".into())
}

fn verdict(v: &Verdict) -> String {
    if !v.evaluable {
        "not evaluable".into()
    } else if v.pass {
        "pass".into()
    } else {
        "FAIL".into()
    }
}

fn csv_table(out: &mut String, csv: &str) {
    let mut lines = csv.lines();
    let Some(header) = lines.next() else { return };
    let cols: Vec<&str> = header.split(',').collect();
    let _ = writeln!(out, "| {} |", cols.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(cols.len()));
    for l in lines {
        let _ = writeln!(out, "| {} |", l.split(',').collect::<Vec<_>>().join(" | "));
    }
}

/// Markdown summary of a report, the direct-clustering sweep and, when
/// present, the feedback trace.
pub fn render_markdown(
    r: &ErrorReport,
    sweep: &[(usize, ErrorReport)],
    trace_csv: Option<&str>,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Aggregation error report\n");
    let _ = writeln!(s, "- representatives: {}", r.rd_count);
    let _ = writeln!(s, "- reduced-model decision: `{}`", r.decision);
    match &r.reference_decision {
        Some(d) => {
            let _ = writeln!(s, "- reference decision: `{d}`");
        }
        None => {
            let _ = writeln!(s, "- reference decision: N/A (run `rdagg reference`)");
        }
    }
    let _ = writeln!(s, "- reduced-model total: {:.6e}", r.total_reduced);
    let _ = writeln!(
        s,
        "- full-model total of the reduced decision: {:.6e}",
        r.total_full
    );
    let _ = writeln!(s, "- normalizer (reference total): {}\n", num(r.normalizer));

    let _ = writeln!(s, "## Errors\n");
    let _ = writeln!(s, "| error | value | normalized |\n|---|---|---|");
    let rows = [
        ("simplification", r.simplification_error),
        ("decision", r.decision_error),
        (
            "operational estimation (reduced decision)",
            Some(r.op_estimation_error),
        ),
        (
            "operational estimation (reference decision)",
            r.op_estimation_error_ref,
        ),
    ];
    for (name, v) in rows {
        let _ = writeln!(
            s,
            "| {name} | {} | {} |",
            num(v),
            num(v.and_then(|x| r.normalized(x)))
        );
    }

    let _ = writeln!(
        s,
        "\n## Bound checks (tolerance {:.3e})\n",
        r.bounds.tolerance
    );
    let _ = writeln!(s, "| check | verdict | margin | bound |\n|---|---|---|---|");
    for (name, v) in [
        ("general", &r.bounds.general),
        ("practical", &r.bounds.practical),
        ("chain", &r.bounds.chain),
    ] {
        let _ = writeln!(
            s,
            "| {name} | {} | {} | {} |",
            verdict(v),
            num(v.margin),
            num(v.bound)
        );
    }

    let mut worst: Vec<_> = r.per_rd_errors.iter().collect();
    worst.sort_by(|a, b| b.error.abs().total_cmp(&a.error.abs()).then(a.k.cmp(&b.k)));
    let _ = writeln!(s, "\n## Largest per-representative errors\n");
    let _ = writeln!(s, "| k | weight | error |\n|---|---|---|");
    for e in worst.iter().take(5) {
        let _ = writeln!(s, "| {} | {} | {} |", e.k, e.weight, num(Some(e.error)));
    }

    let _ = writeln!(s, "\n## Direct clustering sweep\n");
    let _ = writeln!(s, "| representatives | estimation error | decision error | practical bound |\n|---|---|---|---|");
    for (k, e) in sweep {
        let _ = writeln!(
            s,
            "| {k} | {} | {} | {} |",
            num(Some(e.op_estimation_error)),
            num(e.decision_error),
            num(Some(0.0 - e.op_estimation_error))
        );
    }

    if let Some(t) = trace_csv {
        let _ = writeln!(s, "\n## Feedback trace\n");
        csv_table(&mut s, t);
    }
    s
}
