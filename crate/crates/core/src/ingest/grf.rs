use std::io::{Read, Write};

use super::{GrfSignal, IngestError};

const MAX_PLATFORMS: usize = 8;
/// Allowed relative deviation of any time step from the median step.
const UNIFORMITY_TOLERANCE: f64 = 1e-4;

/// Parses the canonical force-platform table.
///
/// The header must read `time_s,fz1_n[,fz2_n,...]` (one to eight platforms).
/// The sampling rate is inferred from the median time step; a rate within
/// one part per million of an integer is snapped to it.
pub fn parse_grf_csv<R: Read>(reader: R) -> Result<GrfSignal, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        Some(r) => r?,
        None => return Err(IngestError::MalformedHeader("missing header row".into())),
    };
    let n_platforms = check_header(&header)?;
    let width = n_platforms + 1;

    let mut times = Vec::new();
    let mut platforms = vec![Vec::new(); n_platforms];
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        let row = i + 2;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != width {
            return Err(IngestError::RaggedRow { row, expected: width, found: rec.len() });
        }
        for (col, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| IngestError::NonNumeric {
                row,
                column: col + 1,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(IngestError::NonNumeric { row, column: col + 1, value: cell.to_string() });
            }
            if col == 0 {
                times.push(v);
            } else {
                platforms[col - 1].push(v);
            }
        }
    }

    if times.is_empty() {
        return Err(IngestError::EmptyBody);
    }
    if times.len() < 2 {
        return Err(IngestError::TooFewSamples(times.len()));
    }
    let fs = infer_rate(&times)?;
    GrfSignal::new(fs, times[0], platforms)
}

fn check_header(header: &csv::StringRecord) -> Result<usize, IngestError> {
    let cols: Vec<&str> = header.iter().collect();
    if cols.first().map(|c| c.trim_start_matches('\u{feff}')) != Some("time_s") {
        return Err(IngestError::MalformedHeader(format!(
            "first column must be time_s, got {:?}",
            cols.first().copied().unwrap_or("")
        )));
    }
    let n = cols.len() - 1;
    if n == 0 || n > MAX_PLATFORMS {
        return Err(IngestError::MalformedHeader(format!(
            "expected 1 to {MAX_PLATFORMS} force columns, got {n}"
        )));
    }
    for (i, c) in cols[1..].iter().enumerate() {
        let expected = format!("fz{}_n", i + 1);
        if *c != expected {
            return Err(IngestError::MalformedHeader(format!(
                "column {} must be {expected}, got {c:?}",
                i + 2
            )));
        }
    }
    Ok(n)
}

fn infer_rate(times: &[f64]) -> Result<f64, IngestError> {
    let steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sorted = steps.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 0 {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    for (i, &s) in steps.iter().enumerate() {
        if median <= 0.0 || s <= 0.0 || ((s - median) / median).abs() > UNIFORMITY_TOLERANCE {
            return Err(IngestError::NonUniformSampling { row: i + 3, step: s, median });
        }
    }
    let fs = 1.0 / median;
    let snapped = fs.round();
    if snapped > 0.0 && (fs - snapped).abs() <= 1e-6 * fs {
        Ok(snapped)
    } else {
        Ok(fs)
    }
}

/// Writes `g` in the canonical table format. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_grf_csv<W: Write>(g: &GrfSignal, mut w: W) -> std::io::Result<()> {
    write!(w, "time_s")?;
    for i in 0..g.platform_count() {
        write!(w, ",fz{}_n", i + 1)?;
    }
    writeln!(w)?;
    for i in 0..g.len() {
        write!(w, "{}", g.t0() + i as f64 / g.fs())?;
        for p in g.platforms() {
            write!(w, ",{}", p[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows_one_platform() {
        let g = parse_grf_csv("time_s,fz1_n\n0,0\n0.001,5\n0.002,12\n".as_bytes()).unwrap();
        assert_eq!(g.fs(), 1000.0);
        assert_eq!(g.platform_count(), 1);
        assert_eq!(g.platforms()[0], vec![0.0, 5.0, 12.0]);
    }

    #[test]
    fn four_platforms_thousand_rows() {
        let mut s = String::from("time_s,fz1_n,fz2_n,fz3_n,fz4_n\n");
        for i in 0..1000 {
            s.push_str(&format!("{},{},0,1,2\n", i as f64 / 1000.0, i));
        }
        let g = parse_grf_csv(s.as_bytes()).unwrap();
        assert_eq!(g.platform_count(), 4);
        assert!(g.platforms().iter().all(|p| p.len() == 1000));
        assert_eq!(g.fs(), 1000.0);
    }

    #[test]
    fn crlf_accepted() {
        let g = parse_grf_csv("time_s,fz1_n\r\n0,1\r\n0.5,2\r\n".as_bytes()).unwrap();
        assert_eq!(g.fs(), 2.0);
    }

    #[test]
    fn non_uniform_rejected() {
        let e = parse_grf_csv("time_s,fz1_n\n0,0\n0.001,0\n0.003,0\n".as_bytes()).unwrap_err();
        assert!(matches!(e, IngestError::NonUniformSampling { .. }), "{e}");
    }

    #[test]
    fn decreasing_time_rejected() {
        let e = parse_grf_csv("time_s,fz1_n\n0.002,0\n0.001,0\n0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(e, IngestError::NonUniformSampling { .. }));
    }

    #[test]
    fn non_numeric_reports_position() {
        let e = parse_grf_csv("time_s,fz1_n,fz2_n\n0,1,2\n0.001,x,3\n".as_bytes()).unwrap_err();
        match e {
            IngestError::NonNumeric { row, column, value } => {
                assert_eq!((row, column, value.as_str()), (3, 2, "x"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn header_errors() {
        for bad in ["time,fz1_n\n0,0\n", "time_s\n0\n", "time_s,fz2_n\n0,0\n", "time_s,fz1_n,fy2_n\n0,0,0\n"] {
            assert!(matches!(parse_grf_csv(bad.as_bytes()), Err(IngestError::MalformedHeader(_))), "{bad}");
        }
        let nine: String = (1..=9).map(|i| format!(",fz{i}_n")).collect();
        assert!(matches!(
            parse_grf_csv(format!("time_s{nine}\n").as_bytes()),
            Err(IngestError::MalformedHeader(_))
        ));
        assert!(matches!(parse_grf_csv("".as_bytes()), Err(IngestError::MalformedHeader(_))));
    }

    #[test]
    fn empty_body_and_single_row() {
        assert!(matches!(parse_grf_csv("time_s,fz1_n\n".as_bytes()), Err(IngestError::EmptyBody)));
        assert!(matches!(
            parse_grf_csv("time_s,fz1_n\n0,1\n".as_bytes()),
            Err(IngestError::TooFewSamples(1))
        ));
    }

    #[test]
    fn ragged_row() {
        let e = parse_grf_csv("time_s,fz1_n\n0,1\n0.001\n".as_bytes()).unwrap_err();
        assert!(matches!(e, IngestError::RaggedRow { row: 3, expected: 2, found: 1 }));
    }

    #[test]
    fn write_then_parse() {
        let g = GrfSignal::new(1000.0, 0.0, vec![vec![0.0, 1.5, 700.123456789], vec![3.0, 2.0, -0.25]])
            .unwrap();
        let mut buf = Vec::new();
        write_grf_csv(&g, &mut buf).unwrap();
        assert_eq!(parse_grf_csv(buf.as_slice()).unwrap(), g);
    }
}
