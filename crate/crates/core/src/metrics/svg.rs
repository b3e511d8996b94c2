//! Minimal SVG renderings of the exported tables.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::tables::{ExportTables, Flag};

const W: f64 = 800.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const MAX_POINTS: usize = 4000;

/// Event kinds marked on the throughput plot, with their numeric labels.
pub const ANNOTATED_EVENTS: &[(&str, &str)] = &[
    ("LeaderDisconnectDetected", "1"),
    ("LeaderElected", "2"),
    ("BacklogServed", "3"),
    ("LeadershipRestored", "4"),
];

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    s
}

fn axes(s: &mut String, x_label: &str, y_label: &str, x_max: f64, y_max: f64) {
    let (x0, y0, x1, y1) = (PAD, H - PAD, W - PAD, PAD);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    let _ = writeln!(s, r#"<text x="{x1}" y="{}" text-anchor="end">{}</text>"#, y0 + 14.0, fmt(x_max));
    let _ = writeln!(s, r#"<text x="{}" y="{y1}" text-anchor="end">{}</text>"#, x0 - 4.0, fmt(y_max));
}

fn fmt(v: f64) -> String {
    if v >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn sx(x: f64, max: f64) -> f64 {
    PAD + if max > 0.0 { x / max } else { 0.0 } * (W - 2.0 * PAD)
}

fn sy(y: f64, max: f64) -> f64 {
    H - PAD - if max > 0.0 { y / max } else { 0.0 } * (H - 2.0 * PAD)
}

fn legend(s: &mut String, i: usize, name: &str) {
    let y = PAD + 14.0 * i as f64;
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
        W - PAD - 140.0,
        y - 9.0,
        COLORS[i % COLORS.len()],
        W - PAD - 126.0,
        y,
        escape(name)
    );
}

/// Delivery latency against message order, one series per topic.
pub fn latency_svg(t: &ExportTables) -> String {
    let mut by_topic: BTreeMap<&str, Vec<(u64, u64)>> = BTreeMap::new();
    for l in &t.latency {
        by_topic
            .entry(&l.topic)
            .or_default()
            .push((l.produce_time_us, l.deliver_time_us.saturating_sub(l.produce_time_us)));
    }
    let mut series: Vec<(&str, Vec<(f64, f64)>)> = Vec::new();
    for (topic, mut pts) in by_topic {
        pts.sort_unstable();
        let stride = pts.len().div_ceil(MAX_POINTS).max(1);
        let pts = pts
            .iter()
            .enumerate()
            .step_by(stride)
            .map(|(i, (_, lat))| (i as f64, *lat as f64 / 1e3))
            .collect();
        series.push((topic, pts));
    }
    let x_max = series.iter().flat_map(|s| s.1.iter().map(|p| p.0)).fold(0.0, f64::max);
    let y_max = series.iter().flat_map(|s| s.1.iter().map(|p| p.1)).fold(0.0, f64::max);
    let mut s = open("Delivery latency by message order");
    axes(&mut s, "message order", "latency (ms)", x_max, y_max);
    for (i, (topic, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        for (x, y) in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="1.2" fill="{color}"/>"#,
                sx(*x, x_max),
                sy(*y, y_max)
            );
        }
        legend(&mut s, i, topic);
    }
    s.push_str("</svg>\n");
    s
}

/// Receive rate of the busiest ports over time, with key events marked.
pub fn throughput_svg(t: &ExportTables) -> String {
    let mut ports: BTreeMap<(&str, u32), Vec<(f64, u64)>> = BTreeMap::new();
    for p in &t.ports {
        ports.entry((&p.node, p.port)).or_default().push((p.time_s, p.rx_bytes));
    }
    let mut ranked: Vec<_> = ports.into_iter().collect();
    ranked.sort_by(|a, b| {
        let ta = a.1.last().map_or(0, |p| p.1);
        let tb = b.1.last().map_or(0, |p| p.1);
        tb.cmp(&ta).then(a.0.cmp(&b.0))
    });
    ranked.truncate(COLORS.len());
    let rates: Vec<(String, Vec<(f64, f64)>)> = ranked
        .iter()
        .map(|((node, port), s)| {
            let pts = s
                .windows(2)
                .filter(|w| w[1].0 > w[0].0)
                .map(|w| (w[1].0, (w[1].1 - w[0].1) as f64 * 8.0 / (w[1].0 - w[0].0) / 1e3))
                .collect();
            (format!("{node}:{port}"), pts)
        })
        .collect();
    let x_max = t.ports.iter().map(|p| p.time_s).fold(0.0, f64::max);
    let y_max = rates.iter().flat_map(|r| r.1.iter().map(|p| p.1)).fold(0.0, f64::max);
    let mut s = open("Port receive throughput");
    axes(&mut s, "time (s)", "rx (Kbps)", x_max, y_max);
    for (i, (name, pts)) in rates.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{:.1},{:.1}", sx(*x, x_max), sy(*y, y_max)))
            .collect();
        if !path.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
                path.join(" ")
            );
        }
        legend(&mut s, i, name);
    }
    for (kind, label) in ANNOTATED_EVENTS {
        if let Some(e) = t.events.iter().find(|e| e.kind == *kind) {
            let x = sx(e.time.as_micros() as f64 / 1e6, x_max);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="gray" stroke-dasharray="4 3"/><text x="{x:.1}" y="{}" text-anchor="middle">{label}</text>"#,
                H - PAD,
                PAD,
                PAD - 4.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Heat grid: one row per producer and topic, columns are buckets of
/// messages in sequence order, shaded by the delivered fraction.
pub fn delivery_svg(t: &ExportTables) -> String {
    const COLS: usize = 200;
    let mut rows: BTreeMap<(&str, &str), BTreeMap<u64, (u32, u32)>> = BTreeMap::new();
    for d in &t.delivery {
        let cell = rows
            .entry((&d.producer, &d.topic))
            .or_default()
            .entry(d.producer_seq)
            .or_default();
        cell.1 += 1;
        if d.delivered == Flag::Y {
            cell.0 += 1;
        }
    }
    let mut s = open("Delivery matrix");
    let n = rows.len().max(1);
    let row_h = ((H - 2.0 * PAD) / n as f64).min(20.0);
    let grid_w = W - 2.0 * PAD - 80.0;
    for (r, ((producer, topic), msgs)) in rows.iter().enumerate() {
        let msgs: Vec<&(u32, u32)> = msgs.values().collect();
        let per = msgs.len().div_ceil(COLS).max(1);
        let cols = msgs.len().div_ceil(per).max(1);
        let cw = grid_w / cols as f64;
        let y = PAD + r as f64 * row_h;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            PAD + 76.0,
            y + row_h * 0.75,
            escape(&format!("{producer} {topic}"))
        );
        for (c, chunk) in msgs.chunks(per).enumerate() {
            let (got, total) = chunk.iter().fold((0u32, 0u32), |acc, m| (acc.0 + m.0, acc.1 + m.1));
            let frac = if total == 0 { 1.0 } else { f64::from(got) / f64::from(total) };
            let color = if frac >= 1.0 {
                "#2ca02c"
            } else if frac <= 0.0 {
                "#d62728"
            } else {
                "#ff7f0e"
            };
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="{color}"/>"#,
                PAD + 80.0 + c as f64 * cw,
                cw.max(0.5),
                row_h * 0.9
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
