//! Output files: atomic writes, rankings from run records and the markdown
//! report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::evalrig::{Method, RunRecord};
use crate::stats::{ranking_rows, scott_knott, RankingRow, SkConfig};
use crate::Result;

/// Writes `bytes` to a temporary file beside `path`, then renames it over
/// `path`, so readers see either the old or the new contents.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Scott-Knott rankings for every (dataset, metric) group in `records`.
pub fn rank_records(records: &[RunRecord], cfg: &SkConfig) -> Vec<RankingRow> {
    let mut groups: BTreeMap<(String, String), BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.dataset.clone(), r.metric.to_string()))
            .or_default()
            .entry(r.method.clone())
            .or_default()
            .push(r.value);
    }
    groups
        .iter()
        .flat_map(|((dataset, metric), by_method)| ranking_rows(dataset, metric, &scott_knott(by_method, cfg)))
        .collect()
}

/// Total wall time per (dataset, method) in milliseconds. A fit shared by
/// both metric records of a cell is counted once.
pub fn runtime_totals(records: &[RunRecord]) -> BTreeMap<(String, String), f64> {
    let mut seen = std::collections::BTreeSet::new();
    let mut totals = BTreeMap::new();
    for r in records {
        let key = (r.dataset.clone(), r.method.clone(), r.repeat, r.fold, r.runtime_ms.to_bits());
        if seen.insert(key) {
            *totals.entry((r.dataset.clone(), r.method.clone())).or_insert(0.0) += r.runtime_ms;
        }
    }
    totals
}

/// `<n` where n is the whole number of minutes rounded up (at least 1).
pub fn format_minutes(ms: f64) -> String {
    let minutes = (ms / 60_000.0).ceil().max(1.0);
    if ms / 60_000.0 == minutes {
        format!("<{}", minutes as u64 + 1)
    } else {
        format!("<{}", minutes as u64)
    }
}

fn label(method: &str) -> String {
    method.parse::<Method>().map(|m| m.label()).unwrap_or_else(|_| method.to_string())
}

/// Markdown report. Rank columns come only from `rankings`; the runtime
/// table only from `records`.
pub fn render_report(rankings: &[RankingRow], records: &[RunRecord]) -> String {
    let mut out = String::from("# Results\n\n");
    out.push_str(
        "Methods are ordered by median score. Rank 1 is best; methods sharing a rank are not \
         distinguishable by Scott-Knott (splits on means, bootstrap test plus A12 >= 0.6).\n",
    );

    let mut groups: BTreeMap<(&str, &str), Vec<&RankingRow>> = BTreeMap::new();
    for row in rankings {
        groups.entry((&row.dataset, &row.metric)).or_default().push(row);
    }
    for ((dataset, metric), mut rows) in groups {
        rows.sort_by(|a, b| a.rank.cmp(&b.rank).then(b.median.total_cmp(&a.median)).then(a.method.cmp(&b.method)));
        let _ = writeln!(out, "\n## {dataset}: {metric}\n");
        out.push_str("| Rank | Method | Median | IQR |\n|---:|---|---:|---:|\n");
        for r in rows {
            let _ = writeln!(out, "| {} | {} | {:.3} | {:.3} |", r.rank + 1, label(&r.method), r.median, r.iqr);
        }
    }

    let totals = runtime_totals(records);
    if !totals.is_empty() {
        let mut methods: Vec<&str> = Vec::new();
        for (_, m) in totals.keys() {
            if !methods.contains(&m.as_str()) {
                methods.push(m);
            }
        }
        methods.sort_by_key(|m| {
            let order = Method::standard().iter().position(|s| s.name() == *m).unwrap_or(usize::MAX);
            (order, m.to_string())
        });
        out.push_str(
            "\n## Runtime (minutes)\n\nWall time of fitting and scoring summed over every repeat and fold.\n\n",
        );
        let _ = write!(out, "| Dataset |");
        for m in &methods {
            let _ = write!(out, " {} |", label(m));
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(methods.len()));
        out.push('\n');
        let datasets: std::collections::BTreeSet<&str> = totals.keys().map(|(d, _)| d.as_str()).collect();
        for d in datasets {
            let _ = write!(out, "| {d} |");
            for m in &methods {
                match totals.get(&(d.to_string(), m.to_string())) {
                    Some(ms) => {
                        let _ = write!(out, " {} |", format_minutes(*ms));
                    }
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
    }
    out
}
