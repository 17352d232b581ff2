use std::io::{Read, Write};

use super::{match_layout, IngestError, Keypoint, KeypointSeries};

const COORDS: [&str; 3] = ["x", "y", "likelihood"];

/// Parses DeepLabCut tabular output (`scorer`, `bodyparts`, `coords` header
/// rows followed by one row per frame with a leading frame index).
///
/// Columns are reordered into the canonical order of the detected layout.
/// Empty cells are read as NaN, which marks the sample invalid.
pub fn parse_dlc_csv<R: Read>(reader: R, fps: f64) -> Result<KeypointSeries, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let mut header = |label: &str| -> Result<csv::StringRecord, IngestError> {
        let rec = records
            .next()
            .ok_or_else(|| IngestError::MalformedHeader(format!("missing {label} row")))??;
        let first = rec.get(0).unwrap_or("").trim_start_matches('\u{feff}');
        if !first.eq_ignore_ascii_case(label) {
            return Err(IngestError::MalformedHeader(format!(
                "expected {label} row, found {first:?}"
            )));
        }
        Ok(rec)
    };
    let scorer = header("scorer")?;
    let bodyparts = header("bodyparts")?;
    let coords = header("coords")?;

    let width = bodyparts.len();
    if width < 4 || (width - 1) % 3 != 0 {
        return Err(IngestError::MalformedHeader(format!(
            "bodyparts row has {} data columns, not a multiple of 3",
            width.saturating_sub(1)
        )));
    }
    if scorer.len() != width || coords.len() != width {
        return Err(IngestError::MalformedHeader("header rows differ in length".into()));
    }

    let n_parts = (width - 1) / 3;
    let mut names = Vec::with_capacity(n_parts);
    for p in 0..n_parts {
        let base = 1 + 3 * p;
        let name = &bodyparts[base];
        if bodyparts[base + 1] != *name || bodyparts[base + 2] != *name {
            return Err(IngestError::MalformedHeader(format!(
                "bodypart {name:?} is not repeated over its x, y, likelihood columns"
            )));
        }
        for (k, expected) in COORDS.iter().enumerate() {
            if !coords[base + k].eq_ignore_ascii_case(expected) {
                return Err(IngestError::MalformedHeader(format!(
                    "coords column {} is {:?}, expected {expected}",
                    base + k + 1,
                    &coords[base + k]
                )));
            }
        }
        names.push(name.to_string());
    }
    let matched = match_layout(&names)?;

    let mut frames = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        let row = i + 4;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != width {
            return Err(IngestError::RaggedRow { row, expected: width, found: rec.len() });
        }
        rec[0].parse::<u64>().map_err(|_| IngestError::NonNumeric {
            row,
            column: 1,
            value: rec[0].to_string(),
        })?;
        let mut frame = vec![Keypoint::MISSING; n_parts];
        for p in 0..n_parts {
            let mut v = [0.0; 3];
            for (k, slot) in v.iter_mut().enumerate() {
                let col = 1 + 3 * p + k;
                let cell = &rec[col];
                *slot = if cell.is_empty() {
                    f64::NAN
                } else {
                    cell.parse().map_err(|_| IngestError::NonNumeric {
                        row,
                        column: col + 1,
                        value: cell.to_string(),
                    })?
                };
            }
            frame[matched.columns[p]] = Keypoint::new(v[0], v[1], v[2]);
        }
        frames.push(frame);
    }
    KeypointSeries::new(matched.layout, fps, frames)
}

/// Writes `series` in DeepLabCut tabular form, canonical part order.
pub fn write_dlc_csv<W: Write>(series: &KeypointSeries, scorer: &str, mut w: W) -> std::io::Result<()> {
    let layout = series.layout();
    let n = layout.part_count();
    write!(w, "scorer")?;
    for _ in 0..3 * n {
        write!(w, ",{scorer}")?;
    }
    write!(w, "\nbodyparts")?;
    for p in 0..n {
        let label = layout.column_label(p);
        write!(w, ",{label},{label},{label}")?;
    }
    write!(w, "\ncoords")?;
    for _ in 0..n {
        write!(w, ",x,y,likelihood")?;
    }
    writeln!(w)?;
    for (i, frame) in series.frames().iter().enumerate() {
        write!(w, "{i}")?;
        for k in frame {
            write!(w, ",{},{},{}", k.x, k.y, k.confidence)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{LayoutKind, SkeletonLayout};

    fn table(names: &[&str], frames: usize, coords: &str) -> String {
        let mut s = String::from("scorer");
        for _ in 0..3 * names.len() {
            s.push_str(",DLC_resnet101");
        }
        s.push_str("\nbodyparts");
        for n in names {
            s.push_str(&format!(",{n},{n},{n}"));
        }
        s.push_str("\ncoords");
        for _ in names {
            s.push(',');
            s.push_str(coords);
        }
        s.push('\n');
        for f in 0..frames {
            s.push_str(&f.to_string());
            for p in 0..names.len() {
                s.push_str(&format!(",{},{},0.9", f * 10 + p, 200 + p));
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn fourteen_parts_ten_frames() {
        let names = SkeletonLayout::dlcpt14().parts();
        let s = parse_dlc_csv(table(names, 10, "x,y,likelihood").as_bytes(), 25.0).unwrap();
        assert_eq!(s.layout().kind(), LayoutKind::Dlcpt14);
        assert_eq!(s.frame_count(), 10);
    }

    #[test]
    fn sixteen_parts_custom() {
        let names = SkeletonLayout::dlcct16().parts();
        let s = parse_dlc_csv(table(names, 3, "x,y,likelihood").as_bytes(), 25.0).unwrap();
        assert_eq!(s.layout().kind(), LayoutKind::Dlcct16);
        assert_eq!(s.frames()[2][15], Keypoint::new(35.0, 215.0, 0.9));
    }

    #[test]
    fn reorders_columns() {
        let mut names: Vec<&str> = SkeletonLayout::dlcct16().parts().to_vec();
        names.swap(0, 15);
        let s = parse_dlc_csv(table(&names, 1, "x,y,likelihood").as_bytes(), 25.0).unwrap();
        // file column 0 holds "Left Toe" -> canonical index 15
        assert_eq!(s.frames()[0][15].x, 0.0);
        assert_eq!(s.frames()[0][0].x, 15.0);
    }

    #[test]
    fn xyz_coords_rejected() {
        let names = SkeletonLayout::dlcpt14().parts();
        let e = parse_dlc_csv(table(names, 2, "x,y,z").as_bytes(), 25.0).unwrap_err();
        assert!(matches!(e, IngestError::MalformedHeader(_)), "{e}");
    }

    #[test]
    fn missing_header_rows() {
        let names = SkeletonLayout::dlcpt14().parts();
        let full = table(names, 2, "x,y,likelihood");
        let without_scorer: String = full.lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            parse_dlc_csv(without_scorer.as_bytes(), 25.0),
            Err(IngestError::MalformedHeader(_))
        ));
        assert!(matches!(parse_dlc_csv("".as_bytes(), 25.0), Err(IngestError::MalformedHeader(_))));
    }

    #[test]
    fn misaligned_bodyparts() {
        let s = "scorer,a,a,a,a,a,a\nbodyparts,p,p,q,q,q,q\ncoords,x,y,likelihood,x,y,likelihood\n";
        assert!(matches!(parse_dlc_csv(s.as_bytes(), 25.0), Err(IngestError::MalformedHeader(_))));
    }

    #[test]
    fn ragged_and_non_numeric_rows() {
        let names = SkeletonLayout::dlcpt14().parts();
        let mut s = table(names, 1, "x,y,likelihood");
        s.push_str("1,2,3\n");
        assert!(matches!(
            parse_dlc_csv(s.as_bytes(), 25.0),
            Err(IngestError::RaggedRow { row: 5, found: 3, .. })
        ));
        let s = table(names, 2, "x,y,likelihood").replacen(",0.9", ",abc", 1);
        assert!(matches!(
            parse_dlc_csv(s.as_bytes(), 25.0),
            Err(IngestError::NonNumeric { row: 4, column: 4, .. })
        ));
    }

    #[test]
    fn unknown_layout_from_names() {
        let names: Vec<String> = (0..17).map(|i| format!("part{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        assert!(matches!(
            parse_dlc_csv(table(&refs, 1, "x,y,likelihood").as_bytes(), 25.0),
            Err(IngestError::UnknownLayout { count: 17 })
        ));
    }
}
