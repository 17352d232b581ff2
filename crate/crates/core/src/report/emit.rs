use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::params::{mean, sample_sd, Parameter};
use crate::stats::{correlation_strength, AbsErrorSummary, BlandAltmanResult};

use super::{ReportError, StudyReport};

/// Three decimals, with negative zero printed as zero.
fn fmt3(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

fn opt3(v: Option<f64>) -> String {
    v.map(fmt3).unwrap_or_else(|| "NA".to_string())
}

/// Linear-interpolation quantile of a sorted sample (the usual "type 7").
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn table_a(r: &StudyReport) -> String {
    let mut out = String::from("system");
    for p in Parameter::ALL {
        let k = p.key();
        write!(out, ",{k}_mean,{k}_sd,{k}_cv_percent").unwrap();
    }
    out.push('\n');
    for row in &r.table_a {
        out.push_str(&row.system);
        for p in Parameter::ALL {
            let s = row.aggregate.get(p);
            write!(out, ",{},{},{}", fmt3(s.mean), fmt3(s.sd), fmt3(s.cv_percent)).unwrap();
        }
        out.push('\n');
    }
    out
}

fn table_b(r: &StudyReport) -> String {
    let mut out = String::from("system,parameter,bias,loa_lower,loa_upper\n");
    for c in &r.table_b {
        let v = &c.value;
        writeln!(out, "{},{},{},{},{}", c.system, c.parameter.key(), fmt3(v.bias), fmt3(v.loa_lower), fmt3(v.loa_upper))
            .unwrap();
    }
    out
}

fn table_c(r: &StudyReport) -> String {
    let mut out = String::from("system,parameter,accuracy_mu,precision_sigma\n");
    for c in &r.table_c {
        writeln!(out, "{},{},{},{}", c.system, c.parameter.key(), fmt3(c.value.accuracy_mu), fmt3(c.value.precision_sigma))
            .unwrap();
    }
    out
}

fn pearson_csv(r: &StudyReport) -> String {
    let mut out = String::from("system,parameter,r,strength\n");
    for c in &r.pearson {
        let strength = c.value.map(correlation_strength).unwrap_or("NA");
        writeln!(out, "{},{},{},{}", c.system, c.parameter.key(), opt3(c.value), strength).unwrap();
    }
    out
}

fn normality_csv(r: &StudyReport) -> String {
    let mut out = String::from("system,parameter,n,w_statistic,p_value\n");
    for c in &r.normality {
        match &c.value {
            Some(v) => writeln!(out, "{},{},{},{},{}", c.system, c.parameter.key(), v.n, fmt3(v.w_statistic), fmt3(v.p_value)),
            None => writeln!(out, "{},{},NA,NA,NA", c.system, c.parameter.key()),
        }
        .unwrap();
    }
    out
}

/// Human-readable rendering of all tables.
pub fn render_text_report(r: &StudyReport) -> String {
    let mut out = String::new();
    out.push_str("Mean, SD and CV% per system\n\n");
    write!(out, "{:<14}", "system").unwrap();
    for p in Parameter::ALL {
        write!(out, " | {:<28}", p.label()).unwrap();
    }
    out.push('\n');
    for row in &r.table_a {
        write!(out, "{:<14}", row.system).unwrap();
        for p in Parameter::ALL {
            let s = row.aggregate.get(p);
            write!(out, " | {:>8} {:>8} {:>9}", fmt3(s.mean), fmt3(s.sd), fmt3(s.cv_percent)).unwrap();
        }
        out.push('\n');
    }
    if !r.table_b.is_empty() {
        writeln!(out, "\nBland-Altman agreement with {}\n", super::REFERENCE_SYSTEM).unwrap();
        writeln!(out, "{:<14} {:<28} {:>9} {:>9} {:>9}", "system", "parameter", "bias", "lower", "upper").unwrap();
        for c in &r.table_b {
            writeln!(
                out,
                "{:<14} {:<28} {:>9} {:>9} {:>9}",
                c.system,
                c.parameter.label(),
                fmt3(c.value.bias),
                fmt3(c.value.loa_lower),
                fmt3(c.value.loa_upper)
            )
            .unwrap();
        }
        out.push_str("\nAbsolute error\n\n");
        writeln!(out, "{:<14} {:<28} {:>9} {:>9}", "system", "parameter", "mu", "sigma").unwrap();
        for c in &r.table_c {
            writeln!(
                out,
                "{:<14} {:<28} {:>9} {:>9}",
                c.system,
                c.parameter.label(),
                fmt3(c.value.accuracy_mu),
                fmt3(c.value.precision_sigma)
            )
            .unwrap();
        }
        out.push_str("\nPearson correlation\n\n");
        for c in &r.pearson {
            let strength = c.value.map(correlation_strength).unwrap_or("NA");
            writeln!(out, "{:<14} {:<28} {:>9} {}", c.system, c.parameter.label(), opt3(c.value), strength).unwrap();
        }
    }
    out.push_str("\nShapiro-Wilk on per-video values\n\n");
    for c in &r.normality {
        let (w, p) = c.value.map(|v| (fmt3(v.w_statistic), fmt3(v.p_value))).unwrap_or(("NA".into(), "NA".into()));
        writeln!(out, "{:<14} {:<28} W {:>6}  p {:>6}", c.system, c.parameter.label(), w, p).unwrap();
    }
    out
}

fn write_all(dir: &Path, files: Vec<(String, String)>) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(files.len());
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body)?;
        paths.push(p);
    }
    Ok(paths)
}

/// Writes the three tables, Pearson and normality CSVs, `report.txt` and
/// a full-precision `report.json`. Nothing is written for an empty report.
pub fn emit_tables(r: &StudyReport, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    if r.is_empty() {
        return Err(ReportError::EmptyReport);
    }
    let json = serde_json::to_string_pretty(r).map_err(|e| ReportError::Io(e.into()))? + "\n";
    let files = vec![
        ("table_a.csv".to_string(), table_a(r)),
        ("table_b.csv".to_string(), table_b(r)),
        ("table_c.csv".to_string(), table_c(r)),
        ("pearson.csv".to_string(), pearson_csv(r)),
        ("normality.csv".to_string(), normality_csv(r)),
        ("report.txt".to_string(), render_text_report(r)),
        ("report.json".to_string(), json),
    ];
    write_all(dir, files)
}

fn bland_altman_csv(system: &str, p: Parameter, b: &BlandAltmanResult) -> String {
    let mut out = format!(
        "# system,{system}\n# parameter,{}\n# bias,{}\n# loa_lower,{}\n# loa_upper,{}\npair_mean,pair_diff,video_id\n",
        p.key(),
        b.bias,
        b.loa_lower,
        b.loa_upper
    );
    for pt in &b.points {
        writeln!(out, "{},{},{}", pt.pair_mean, pt.pair_diff, pt.video_id).unwrap();
    }
    out
}

fn violin_csv(b: &BlandAltmanResult, a: &AbsErrorSummary) -> String {
    let mut sorted = a.errors.clone();
    sorted.sort_by(f64::total_cmp);
    let (q1, q2, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.5), quantile(&sorted, 0.75));
    let (m, sd) = (mean(&a.errors), sample_sd(&a.errors));
    let mut out = String::from("video_id,abs_error,q1,median,q3,mean,sd\n");
    for (pt, e) in b.points.iter().zip(&a.errors) {
        writeln!(out, "{},{e},{q1},{q2},{q3},{m},{sd}", pt.video_id).unwrap();
    }
    out
}

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 48.0;

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let margin = ((hi - lo) * 0.1).max(1e-6);
    (lo - margin, hi + margin)
}

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{title}</text>\n\
         <rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        W / 2.0,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    )
}

fn bland_altman_svg(system: &str, p: Parameter, b: &BlandAltmanResult) -> String {
    let (x0, x1) = span(b.points.iter().map(|q| q.pair_mean));
    let (y0, y1) = span(b.points.iter().map(|q| q.pair_diff).chain([b.loa_lower, b.loa_upper]));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut out = svg_open(&format!("{system} {}", p.label()));
    out.push_str(&format!(
        "<rect x=\"{PAD}\" y=\"{:.2}\" width=\"{}\" height=\"{:.2}\" fill=\"#dddddd\"/>\n",
        sy(b.loa_upper),
        W - 2.0 * PAD,
        sy(b.loa_lower) - sy(b.loa_upper)
    ));
    for (y, dash) in [(b.bias, ""), (b.loa_lower, " stroke-dasharray=\"4 3\""), (b.loa_upper, " stroke-dasharray=\"4 3\"")] {
        out.push_str(&format!(
            "<line x1=\"{PAD}\" x2=\"{}\" y1=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"{dash}/>\n",
            W - PAD,
            sy(y),
            sy(y)
        ));
    }
    for q in &b.points {
        out.push_str(&format!("<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>\n", sx(q.pair_mean), sy(q.pair_diff)));
    }
    out.push_str("</svg>\n");
    out
}

fn violin_svg(system: &str, p: Parameter, a: &AbsErrorSummary) -> String {
    let mut sorted = a.errors.clone();
    sorted.sort_by(f64::total_cmp);
    let (y0, y1) = span(sorted.iter().copied().chain([0.0]));
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let cx = W / 2.0;
    let mut out = svg_open(&format!("{system} {} absolute error", p.label()));
    let (q1, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.75));
    out.push_str(&format!(
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"40\" height=\"{:.2}\" fill=\"#eeeeee\" stroke=\"black\"/>\n",
        cx - 20.0,
        sy(q3),
        sy(q1) - sy(q3)
    ));
    for e in &sorted {
        out.push_str(&format!("<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"gray\"/>\n", cx - 60.0, sy(*e)));
    }
    let (mu, sigma) = (a.accuracy_mu, a.precision_sigma);
    out.push_str(&format!(
        "<line x1=\"{cx}\" x2=\"{cx}\" y1=\"{:.2}\" y2=\"{:.2}\" stroke=\"goldenrod\" stroke-width=\"3\"/>\n",
        sy((mu - sigma).max(y0)),
        sy(mu + sigma)
    ));
    out.push_str(&format!("<circle cx=\"{cx}\" cy=\"{:.2}\" r=\"4\" fill=\"white\" stroke=\"black\"/>\n", sy(mu)));
    out.push_str("</svg>\n");
    out
}

/// Writes `ba_<system>_<parameter>.csv` and `violin_<system>_<parameter>.csv`
/// per agreement cell, plus matching SVGs when `svg` is set.
pub fn emit_plot_data(r: &StudyReport, dir: &Path, svg: bool) -> Result<Vec<PathBuf>, ReportError> {
    if r.is_empty() {
        return Err(ReportError::EmptyReport);
    }
    let mut files = Vec::new();
    for (b, a) in r.table_b.iter().zip(&r.table_c) {
        debug_assert_eq!((&b.system, b.parameter), (&a.system, a.parameter));
        let stem = format!("{}_{}", b.system, b.parameter.key());
        files.push((format!("ba_{stem}.csv"), bland_altman_csv(&b.system, b.parameter, &b.value)));
        files.push((format!("violin_{stem}.csv"), violin_csv(&b.value, &a.value)));
        if svg {
            files.push((format!("ba_{stem}.svg"), bland_altman_svg(&b.system, b.parameter, &b.value)));
            files.push((format!("violin_{stem}.svg"), violin_svg(&a.system, a.parameter, &a.value)));
        }
    }
    write_all(dir, files)
}
