//! Small statistical helpers shared across modules: compensated summation,
//! tie-aware Kendall tau in O(n log n), and reproducible RNG streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Pairwise (tree) summation; deterministic and far more accurate than a
/// running sum on long alternating-sign series.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n if n <= 8 => {
            let mut s = 0.0;
            for x in v {
                s += x;
            }
            s
        }
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic per-task RNG stream: stream k of a base seed is independent
/// of streams for other k, and stable across thread schedules.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream)))
}

/// Tie-corrected Kendall tau (tau-b) via merge-sort inversion counting.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(y[i].total_cmp(&y[j])));

    let pairs = |t: u64| t * (t - 1) / 2;
    // tie counts in x and joint ties, walking the x-sorted order
    let mut xtie = 0u64;
    let mut ntie = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        xtie += pairs((j - i) as u64);
        let mut k = i;
        while k < j {
            let mut l = k + 1;
            while l < j && y[idx[l]] == y[idx[k]] {
                l += 1;
            }
            ntie += pairs((l - k) as u64);
            k = l;
        }
        i = j;
    }

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let dis = merge_count(&mut ys);

    // tie counts in y
    let mut sorted_y = y.to_vec();
    sorted_y.sort_by(|a, b| a.total_cmp(b));
    let mut ytie = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && sorted_y[j] == sorted_y[i] {
            j += 1;
        }
        ytie += pairs((j - i) as u64);
        i = j;
    }

    let tot = pairs(n as u64);
    let num = tot as i128 - xtie as i128 - ytie as i128 + ntie as i128 - 2 * dis as i128;
    let den = (((tot - xtie) as f64) * ((tot - ytie) as f64)).sqrt();
    if den == 0.0 {
        return 0.0;
    }
    num as f64 / den
}

// counts strictly-decreasing pairs (discordances) by merge sort
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let left = v[..mid].to_vec();
    let right = v[mid..].to_vec();
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        if right[j] < left[i] {
            count += (left.len() - i) as u64;
            v[k] = right[j];
            j += 1;
        } else {
            v[k] = left[i];
            i += 1;
        }
        k += 1;
    }
    while i < left.len() {
        v[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        v[k] = right[j];
        j += 1;
        k += 1;
    }
    count
}
