/// A local maximum and its topographic prominence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub prominence: f64,
}

/// Local maxima of `x` with at least `min_prominence` and at least
/// `min_distance` samples between kept peaks.
///
/// Flat tops report their middle sample (rounded down). The distance rule
/// is applied before the prominence rule and keeps taller peaks first.
pub fn find_peaks(x: &[f64], min_prominence: f64, min_distance: usize) -> Vec<Peak> {
    let mut peaks = local_maxima(x);

    if min_distance > 1 && peaks.len() > 1 {
        let mut keep = vec![true; peaks.len()];
        let mut order: Vec<usize> = (0..peaks.len()).collect();
        // tallest first, the earlier one winning a tie
        order.sort_by(|&a, &b| x[peaks[b]].total_cmp(&x[peaks[a]]).then(a.cmp(&b)));
        for &i in &order {
            if !keep[i] {
                continue;
            }
            let mut j = i;
            while j > 0 && peaks[i] - peaks[j - 1] < min_distance {
                j -= 1;
                keep[j] = false;
            }
            let mut j = i + 1;
            while j < peaks.len() && peaks[j] - peaks[i] < min_distance {
                keep[j] = false;
                j += 1;
            }
        }
        peaks = peaks.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect();
    }

    peaks
        .into_iter()
        .map(|i| Peak { index: i, prominence: prominence(x, i) })
        .filter(|p| p.prominence >= min_prominence)
        .collect()
}

fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead + 1 < n && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                out.push((i + ahead - 1) / 2);
                i = ahead;
            }
        }
        i += 1;
    }
    out
}

fn prominence(x: &[f64], peak: usize) -> f64 {
    let h = x[peak];
    let mut left_min = h;
    for &v in x[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_peaks() {
        let x = [0.0, 1.0, 0.0, 3.0, 1.0, 2.0, 0.0];
        let p = find_peaks(&x, 0.0, 1);
        assert_eq!(p.iter().map(|p| p.index).collect::<Vec<_>>(), vec![1, 3, 5]);
        assert_eq!(p.iter().map(|p| p.prominence).collect::<Vec<_>>(), vec![1.0, 3.0, 1.0]);
    }

    #[test]
    fn plateau_midpoint() {
        let x = [0.0, 2.0, 2.0, 2.0, 2.0, 0.0];
        assert_eq!(find_peaks(&x, 0.0, 1)[0].index, 2);
        // a plateau that runs into the edge is not a peak
        assert!(find_peaks(&[0.0, 1.0, 1.0], 0.0, 1).is_empty());
    }

    #[test]
    fn distance_keeps_taller() {
        let x = [0.0, 1.0, 0.0, 3.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.5, 0.0];
        let idx: Vec<usize> = find_peaks(&x, 0.0, 3).iter().map(|p| p.index).collect();
        assert_eq!(idx, vec![3, 9]);
    }

    #[test]
    fn equal_heights_keep_earlier() {
        let x = [0.0, 2.0, 0.0, 2.0, 0.0];
        let idx: Vec<usize> = find_peaks(&x, 0.0, 3).iter().map(|p| p.index).collect();
        assert_eq!(idx, vec![1]);
    }

    #[test]
    fn prominence_filter() {
        let x = [0.0, 5.0, 4.5, 4.8, 0.0];
        let p = find_peaks(&x, 1.0, 1);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].index, 1);
        assert!((find_peaks(&x, 0.0, 1)[1].prominence - 0.3).abs() < 1e-12);
    }

    #[test]
    fn constant_has_no_peaks() {
        assert!(find_peaks(&[3.0; 20], 0.0, 1).is_empty());
    }
}
