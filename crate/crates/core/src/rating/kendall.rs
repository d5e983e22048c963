//! Kendall τ-b in O(n log n) (Knight's algorithm).
//!
//! Sort by `(a, b)`, count ties in `a` and joint ties, then count the
//! inversions a merge sort on `b` performs; each inversion is a discordant
//! pair. With n0 = n(n−1)/2, n1/n2 the pairs tied in a/b and n3 the pairs
//! tied in both:
//!
//! τ_b = (n0 − n1 − n2 + n3 − 2·swaps) / sqrt((n0 − n1)(n0 − n2))

use super::RatingError;

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
    if !sorted.is_empty() {
        total += run * (run - 1) / 2;
    }
    total
}

/// Merge sort `v` ascending, returning the number of inversions.
fn sort_count_swaps(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_count_swaps(&mut v[..mid], &mut buf[..mid]);
    swaps += sort_count_swaps(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Tie-corrected Kendall rank correlation between two aligned sequences.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64, RatingError> {
    if a.len() != b.len() {
        return Err(RatingError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(RatingError::TooFewPoints(n));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(RatingError::NonFinite);
    }
    // `+ 0.0` maps -0.0 to 0.0 so sorting and tie detection agree.
    let mut pairs: Vec<(f64, f64)> = a.iter().zip(b).map(|(x, y)| (x + 0.0, y + 0.0)).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let firsts: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let n1 = tied_pairs(&firsts);
    let n3 = tied_pairs(&pairs);

    let mut seconds: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let swaps = sort_count_swaps(&mut seconds, &mut buf);
    let n2 = tied_pairs(&seconds);

    if n1 == n0 || n2 == n0 {
        return Err(RatingError::AllTied);
    }
    let numerator = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * swaps as i64;
    let denominator = (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt();
    Ok(numerator as f64 / denominator)
}
