//! Rank correlation: Spearman on mid-ranks and Kendall's tau-b.

use crate::error::{Error, Result};

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "need at least 3 samples, got {}",
            a.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite sample".into()));
    }
    Ok(())
}

/// 1-based ranks with ties replaced by the mean of the ranks they span.
pub fn midranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

pub fn srocc(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    pearson(&midranks(a), &midranks(b))
        .ok_or_else(|| Error::DegenerateInput("zero rank variance".into()))
}

/// Number of pairs inside runs of equal values of an already sorted slice.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` ascending, returning the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf.push(v[i]);
            i += 1;
        } else {
            // every remaining left element exceeds v[j]
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Tie-corrected Kendall rank correlation in O(n log n).
pub fn krocc(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len() as u64;
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then(b[i].total_cmp(&b[j])));

    let sorted_a: Vec<f64> = order.iter().map(|&i| a[i]).collect();
    let sorted_ab: Vec<(f64, f64)> = order.iter().map(|&i| (a[i], b[i])).collect();
    let ties_a = tied_pairs(&sorted_a);
    let ties_ab = tied_pairs(&sorted_ab);

    let mut seq: Vec<f64> = order.iter().map(|&i| b[i]).collect();
    let mut buf = Vec::with_capacity(seq.len());
    let swaps = merge_count(&mut seq, &mut buf);
    let ties_b = tied_pairs(&seq);

    let n0 = n * (n - 1) / 2;
    if ties_a == n0 || ties_b == n0 {
        return Err(Error::DegenerateInput("all values tied".into()));
    }
    let c_minus_d = n0 as i64 - ties_a as i64 - ties_b as i64 + ties_ab as i64 - 2 * swaps as i64;
    let tau = c_minus_d as f64 / (((n0 - ties_a) as f64) * ((n0 - ties_b) as f64)).sqrt();
    Ok(tau.clamp(-1.0, 1.0))
}
