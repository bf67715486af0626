use std::fmt::Write as _;

use super::DiscoveryReport;
use crate::correlation::{CompositeFit, CompositeForm};
use crate::demos::Answers;
use crate::expr::format_exponent;
use crate::nn::ScreenOutcome;

fn composite_text(fit: &CompositeFit) -> String {
    match fit.form {
        CompositeForm::Linear => format!("b*z1 + z2, b = {:.4}, sse = {:.4e}", fit.b, fit.sse),
        CompositeForm::Power { a } => {
            format!("z1*(b + z2)^{}, b = {:.4}, sse = {:.4e}", format_exponent(a), fit.b, fit.sse)
        }
    }
}

fn list(names: &[String]) -> String {
    if names.is_empty() {
        "none".into()
    } else {
        names.join(", ")
    }
}

/// Plain-text summary: method, dropped features, per-iteration leaders and
/// the final reconstruction, with the known answer alongside when given.
pub fn render_text(report: &DiscoveryReport, answers: Option<&Answers>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Method:            {}", report.method());
    let _ = writeln!(s, "Rows:              {}", report.n_rows);
    let _ = writeln!(s, "Features:          {}", list(&report.features));
    let _ = writeln!(s, "Dropped features:  {}", list(&report.dropped));
    if let Some(a) = answers {
        let _ = writeln!(s, "Known dummies:     {}", list(&a.dummies));
    }
    for it in &report.iterations {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "Iteration {}  (library {}, scored {}, rejected {})",
            it.iteration + 1,
            it.library_size,
            it.scored,
            it.rejected
        );
        if !it.flagged.is_empty() {
            let _ = writeln!(s, "  flagged: {}", it.flagged.join(", "));
        }
        for (k, c) in it.ranked.iter().take(10).enumerate() {
            let _ = writeln!(s, "  {:>2}. r = {:+.6}  {}", k + 1, c.r, c.expr);
        }
        let best = |pick: fn(&super::CompositeRecord) -> Option<CompositeFit>| {
            it.composites
                .iter()
                .filter_map(|c| pick(c).map(|f| (c, f)))
                .min_by(|a, b| a.1.sse.total_cmp(&b.1.sse))
        };
        for (label, found) in [("linear", best(|c| c.linear)), ("power", best(|c| c.power))] {
            if let Some((c, f)) = found {
                let _ = writeln!(s, "  best {label} composite: z1 = {}, z2 = {}: {}", c.first, c.second, composite_text(&f));
            }
        }
        if let Some(p) = &it.peeled {
            let _ = writeln!(s, "  peeled: {p}");
        }
    }
    let _ = writeln!(s);
    if let Some(rec) = &report.reconstruction {
        let _ = writeln!(s, "Discovered:        y = {}", rec.simplified);
        let _ = writeln!(s, "R^2:               {:.12}", rec.r2);
    } else {
        let _ = writeln!(s, "Discovered:        nothing");
    }
    if let Some(a) = answers {
        let _ = writeln!(s, "Ground truth:      y = {}", a.ground_truth);
    }
    if let Some(scr) = &report.screening {
        let _ = writeln!(s);
        let _ = writeln!(s, "Network screen: {} runs, frequencies over the best {}", scr.runs.len(), scr.top_n);
        for f in scr.frequency.iter().take(15) {
            let _ = writeln!(s, "  {:>3}  {}", f.count, f.expr);
        }
        for r in scr.runs.iter().take(5) {
            let feats: Vec<String> = r.features.iter().map(|e| e.to_string()).collect();
            let rmse = r.final_rmse.map_or("diverged".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(s, "  rmse {rmse}  [{}]", feats.join("; "));
        }
    }
    for n in &report.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// One line per ranked candidate of every iteration.
pub fn ranked_csv(report: &DiscoveryReport) -> String {
    let mut s = String::from("iteration,rank,expression,r,node_count\n");
    for it in &report.iterations {
        for (k, c) in it.ranked.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{:.12},{}",
                it.iteration + 1,
                k + 1,
                csv_field(&c.expr.to_string()),
                c.r,
                c.complexity.node_count
            );
        }
    }
    s
}

/// Learning curves of every screening run; diverged points are left blank.
pub fn curves_csv(outcome: &ScreenOutcome) -> String {
    let mut s = String::from("trial,seed,features,train_size,test_rmse\n");
    for r in &outcome.runs {
        let feats: Vec<String> = r.features.iter().map(|e| e.to_string()).collect();
        let feats = csv_field(&feats.join("; "));
        for p in &r.curve {
            let rmse = p.test_rmse.map_or(String::new(), |v| format!("{v:.12}"));
            let _ = writeln!(s, "{},{},{},{},{}", r.trial, r.seed, feats, p.train_size, rmse);
        }
    }
    s
}

/// Function frequencies over the best runs, as pretty JSON.
pub fn frequency_json(outcome: &ScreenOutcome) -> String {
    let v = serde_json::json!({
        "top_n": outcome.top_n,
        "frequency": outcome.frequency,
    });
    serde_json::to_string_pretty(&v).expect("frequencies serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("X1*X2"), "X1*X2");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\", ok"), "\"say \"\"hi\"\", ok\"");
    }
}
