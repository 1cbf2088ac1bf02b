use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use walkdir::WalkDir;

use mbrd::harness::{aggregate, read_eval_csv, Curve, Table};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Half-width of a shaded band around `ys`.
    pub band: Option<Vec<f64>>,
}

pub struct Chart {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub series: Vec<Series>,
}

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn tick_label(x: f64) -> String {
    let a = x.abs();
    if a >= 1e4 {
        format!("{:.0}k", x / 1e3)
    } else if a >= 10.0 || x == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>, pad: f64) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = pad * (hi - lo);
        (lo - pad, hi + pad)
    }
}

impl Chart {
    pub fn render(&self) -> String {
        let (x0, x1) = range(self.series.iter().flat_map(|s| s.xs.iter().copied()), 0.0);
        let (y0, y1) = range(self.series.iter().flat_map(|s| {
            let band = s.band.as_deref().unwrap_or(&[]);
            s.ys.iter().copied().chain(
                s.ys.iter()
                    .zip(band)
                    .flat_map(|(y, b)| [y - b, y + b]),
            )
        }), 0.05);
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            num(LEFT + pw / 2.0),
            escape(&self.title)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let f = f64::from(i) / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let (gx, gy) = (num(px(xv)), num(py(yv)));
            let _ = writeln!(
                svg,
                r##"<line x1="{gx}" y1="{TOP}" x2="{gx}" y2="{}" stroke="#ddd"/><text x="{gx}" y="{}" text-anchor="middle">{}</text>"##,
                num(TOP + ph),
                num(TOP + ph + 16.0),
                tick_label(xv)
            );
            let _ = writeln!(
                svg,
                r##"<line x1="{LEFT}" y1="{gy}" x2="{}" y2="{gy}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{}</text>"##,
                num(LEFT + pw),
                num(LEFT - 6.0),
                num(py(yv) + 4.0),
                tick_label(yv)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(LEFT + pw / 2.0),
            num(HEIGHT - 12.0),
            escape(&self.xlabel)
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            num(TOP + ph / 2.0),
            num(TOP + ph / 2.0),
            escape(&self.ylabel)
        );

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let finite: Vec<(f64, f64, f64)> = s
                .xs
                .iter()
                .zip(&s.ys)
                .enumerate()
                .filter(|(_, (x, y))| x.is_finite() && y.is_finite())
                .map(|(j, (&x, &y))| (x, y, s.band.as_ref().map_or(0.0, |b| b[j])))
                .collect();
            if s.band.is_some() && finite.len() > 1 {
                let mut pts: Vec<String> = finite
                    .iter()
                    .map(|&(x, y, b)| format!("{},{}", num(px(x)), num(py(y + b))))
                    .collect();
                pts.extend(
                    finite
                        .iter()
                        .rev()
                        .map(|&(x, y, b)| format!("{},{}", num(px(x)), num(py(y - b)))),
                );
                let _ = writeln!(
                    svg,
                    r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                    pts.join(" ")
                );
            }
            // NaN gaps split the line.
            let mut segment: Vec<String> = Vec::new();
            let flush = |seg: &mut Vec<String>, svg: &mut String| {
                if seg.len() > 1 {
                    let _ = writeln!(
                        svg,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                        seg.join(" ")
                    );
                } else if let Some(p) = seg.first() {
                    let (cx, cy) = p.split_once(',').expect("point");
                    let _ = writeln!(svg, r#"<circle cx="{cx}" cy="{cy}" r="2" fill="{color}"/>"#);
                }
                seg.clear();
            };
            for (x, y) in s.xs.iter().zip(&s.ys) {
                if x.is_finite() && y.is_finite() {
                    segment.push(format!("{},{}", num(px(*x)), num(py(*y))));
                } else {
                    flush(&mut segment, &mut svg);
                }
            }
            flush(&mut segment, &mut svg);

            let ly = TOP + 10.0 + 20.0 * i as f64;
            let lx = WIDTH - RIGHT + 15.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
                num(lx),
                num(ly),
                num(lx + 20.0),
                num(ly),
                num(lx + 26.0),
                num(ly + 4.0),
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn name_of(p: &Path) -> String {
    p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

/// File stem for a directory below `root`: its relative path joined by `_`,
/// or its own name when it is `root` or lies above it.
fn stem(root: &Path, dir: &Path) -> String {
    match dir.strip_prefix(root) {
        Ok(rel) if !rel.as_os_str().is_empty() => rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("_"),
        _ => name_of(dir),
    }
}

fn comparison_chart(domain: &str, curves: &[Curve]) -> Chart {
    let rows = aggregate(curves);
    let mut by_method: BTreeMap<&str, Series> = BTreeMap::new();
    for r in &rows {
        let s = by_method.entry(&r.method).or_insert_with(|| Series {
            label: String::new(),
            xs: Vec::new(),
            ys: Vec::new(),
            band: Some(Vec::new()),
        });
        s.label = format!("{} (n={})", r.method, r.seeds);
        s.xs.push(r.step as f64);
        s.ys.push(r.mean);
        s.band.as_mut().expect("band").push(r.std);
    }
    Chart {
        title: format!("{domain}: evaluation return"),
        xlabel: "environment steps".into(),
        ylabel: "mean extrinsic return".into(),
        series: by_method.into_values().collect(),
    }
}

fn weight_chart(title: &str, table: &Table, names: &[String]) -> Option<Chart> {
    let steps = table.column("step")?;
    let mut series = Vec::new();
    for i in 0.. {
        let Some(ys) = table.column(&format!("w_{i}")) else {
            break;
        };
        let label = names.get(i).cloned().unwrap_or_else(|| format!("w_{i}"));
        series.push(Series {
            label,
            xs: steps.clone(),
            ys,
            band: None,
        });
    }
    (!series.is_empty()).then(|| Chart {
        title: title.to_string(),
        xlabel: "environment steps".into(),
        ylabel: "event weight".into(),
        series,
    })
}

/// Renders every run below `root`: one return comparison per domain
/// directory and one weight trace per MBRD run. Returns the written files.
pub fn plot_dir(root: &Path, out: &Path) -> Result<Vec<PathBuf>, String> {
    if !root.is_dir() {
        return Err(format!("{} is not a directory", root.display()));
    }
    let mut groups: BTreeMap<PathBuf, Vec<Curve>> = BTreeMap::new();
    let mut traces: Vec<(PathBuf, Chart)> = Vec::new();
    let walker = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.path() != out);
    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                warn!("{e}");
                continue;
            }
        };
        let path = entry.path();
        let file = name_of(path);
        let Some(seed_dir) = path.parent() else { continue };
        if file == "eval.csv" {
            let (Some(method_dir), seed) = (seed_dir.parent(), name_of(seed_dir).parse::<u64>()) else {
                continue;
            };
            let Ok(seed) = seed else {
                warn!("{}: run directory name is not a seed, skipped", path.display());
                continue;
            };
            let Some(domain_dir) = method_dir.parent() else { continue };
            match read_eval_csv(path) {
                Ok(points) if !points.is_empty() => groups.entry(domain_dir.to_path_buf()).or_default().push(Curve {
                    method: name_of(method_dir),
                    domain: name_of(domain_dir),
                    seed,
                    points,
                }),
                Ok(_) => warn!("{}: no evaluation rows, skipped", path.display()),
                Err(e) => warn!("{e}, skipped"),
            }
        } else if file == "updates.csv" {
            match Table::read(path) {
                Ok(t) => {
                    let names: Vec<String> = fs::read_to_string(seed_dir.join("events.txt"))
                        .map(|s| s.lines().map(str::to_string).collect())
                        .unwrap_or_default();
                    let name = stem(root, seed_dir);
                    if let Some(chart) = weight_chart(&format!("{name}: event weights"), &t, &names) {
                        traces.push((out.join(format!("{name}_weights.svg")), chart));
                    }
                }
                Err(e) => warn!("{e}, skipped"),
            }
        }
    }

    let mut charts: Vec<(PathBuf, Chart)> = groups
        .iter()
        .map(|(dir, curves)| {
            let name = stem(root, dir);
            (out.join(format!("{name}.svg")), comparison_chart(&name_of(dir), curves))
        })
        .collect();
    charts.extend(traces);
    if charts.is_empty() {
        return Err(format!("nothing to plot below {}", root.display()));
    }
    fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    let mut written = Vec::new();
    for (path, chart) in charts {
        fs::write(&path, chart.render()).map_err(|e| format!("{}: {e}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
