//! Byte-stable renderings of run results as JSON or CSV.

use framecert_core::constructions::{CertifiedPair, Truncation};
use framecert_core::real::format as real;
use framecert_core::verifier::{FrameReport, LimitReport, RatioRecord};
use serde::Serialize;

use crate::config::Format;
use crate::run::{Description, TransformRow};

fn json<T: Serialize + ?Sized>(x: &T) -> String {
    let mut s = serde_json::to_string_pretty(x).expect("reports serialize");
    s.push('\n');
    s
}

fn csv_rows(rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for r in rows {
        w.write_record(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

fn opt(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

fn record_row(r: &RatioRecord) -> Vec<String> {
    vec![r.id.to_string(), opt(r.ratio), real(r.error), opt(r.tail)]
}

fn summary_rows(rep: &FrameReport, prefix: &[String]) -> Vec<Vec<String>> {
    let row = |k: &str, v: String| -> Vec<String> {
        prefix.iter().cloned().chain([k.to_string(), v]).collect()
    };
    let mut rows = vec![
        row("emp_lower", opt(rep.emp_lower)),
        row("emp_upper", opt(rep.emp_upper)),
    ];
    if let Some(c) = &rep.cert {
        rows.push(row("A", real(c.a())));
        rows.push(row("B", real(c.b())));
        rows.push(row("cert_kind", c.kind().to_string()));
        rows.push(row("provenance", c.provenance_strings().join("; ")));
    }
    rows.push(row("verdict", rep.verdict.as_str().to_string()));
    rows.extend(rep.notes.iter().map(|n| row("note", n.clone())));
    rows
}

const RECORD_HEADER: [&str; 4] = ["id", "ratio", "error", "tail"];

/// One row per test function under a header, then `key,value` summary rows.
pub fn report(rep: &FrameReport, format: Format) -> String {
    match format {
        Format::Json => json(rep),
        Format::Csv => {
            let mut rows = vec![RECORD_HEADER.iter().map(|s| s.to_string()).collect()];
            rows.extend(rep.ratios.iter().map(record_row));
            rows.extend(summary_rows(rep, &[]));
            csv_rows(&rows)
        }
    }
}

pub fn limit(rep: &LimitReport, format: Format) -> String {
    match format {
        Format::Json => json(rep),
        Format::Csv => {
            let mut rows = vec![["n", "id", "ratio", "error", "tail"].iter().map(|s| s.to_string()).collect()];
            for e in &rep.entries {
                rows.extend(e.report.ratios.iter().map(|r| {
                    let mut row = vec![e.n.to_string()];
                    row.extend(record_row(r));
                    row
                }));
            }
            for e in &rep.entries {
                let n = e.n.to_string();
                rows.extend(summary_rows(&e.report, std::slice::from_ref(&n)));
                rows.push(vec![n.clone(), "drift".into(), real(e.drift)]);
                rows.push(vec![n, "budget".into(), real(e.budget)]);
            }
            rows.push(vec!["all_consistent".into(), rep.all_consistent.to_string()]);
            rows.push(vec!["drift_ok".into(), rep.drift_ok.to_string()]);
            csv_rows(&rows)
        }
    }
}

pub fn transform(rows: &[TransformRow], format: Format) -> String {
    match format {
        Format::Json => json(rows),
        Format::Csv => {
            let mut out = vec![["t", "re", "im", "err"].iter().map(|s| s.to_string()).collect()];
            out.extend(rows.iter().map(|r| vec![real(r.t), real(r.re), real(r.im), real(r.err)]));
            csv_rows(&out)
        }
    }
}

pub fn describe(d: &Description, format: Format) -> String {
    match format {
        Format::Json => json(d),
        Format::Csv => {
            let mut rows = vec![
                vec!["field".to_string(), "value".to_string()],
                vec!["dim".into(), d.dim.to_string()],
                vec!["mass".into(), d.mass.map_or("inf".to_string(), real)],
                vec!["mass_error".into(), real(d.mass_error)],
                vec!["support".into(), serde_json::to_string(&d.support).expect("support serializes")],
            ];
            rows.extend(
                d.violations
                    .iter()
                    .map(|v| vec!["violation".into(), format!("{}: {}", v.path, v.message)]),
            );
            csv_rows(&rows)
        }
    }
}

fn truncation_text(t: &Option<Truncation>) -> String {
    t.as_ref()
        .map(|t| serde_json::to_string(t).expect("truncation serializes"))
        .unwrap_or_default()
}

fn pair_row(p: &CertifiedPair) -> Vec<String> {
    vec![
        real(p.cert.a()),
        real(p.cert.b()),
        p.cert.kind().to_string(),
        p.cert.provenance_strings().join("; "),
        serde_json::to_string(&p.mu).expect("measures serialize"),
        serde_json::to_string(&p.nu).expect("measures serialize"),
        truncation_text(&p.truncation),
    ]
}

const PAIR_HEADER: [&str; 7] = ["A", "B", "kind", "provenance", "mu", "nu", "truncation"];

pub fn pair(p: &CertifiedPair, format: Format) -> String {
    match format {
        Format::Json => json(p),
        Format::Csv => csv_rows(&[PAIR_HEADER.iter().map(|s| s.to_string()).collect(), pair_row(p)]),
    }
}

pub fn catalog(pairs: &[CertifiedPair], format: Format) -> String {
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Entry<'a> {
                index: usize,
                #[serde(flatten)]
                pair: &'a CertifiedPair,
            }
            let entries: Vec<Entry> = pairs
                .iter()
                .enumerate()
                .map(|(i, pair)| Entry { index: i + 1, pair })
                .collect();
            json(&entries)
        }
        Format::Csv => {
            let mut rows = vec![std::iter::once("index")
                .chain(PAIR_HEADER)
                .map(String::from)
                .collect::<Vec<_>>()];
            rows.extend(pairs.iter().enumerate().map(|(i, p)| {
                let mut r = vec![(i + 1).to_string()];
                r.extend(pair_row(p));
                r
            }));
            csv_rows(&rows)
        }
    }
}
