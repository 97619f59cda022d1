//! Deterministic summation helpers.
//!
//! Sums are split into fixed-size chunks that are reduced in index order, so
//! the result is bit-identical no matter how many rayon threads run the map.

use rayon::prelude::*;

const CHUNK: usize = 4096;

/// Neumaier (improved Kahan) compensated sum.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sums `eval(i)` for `i in 0..n`, evaluating fixed chunks in parallel and
/// reducing them sequentially.
pub(crate) fn chunked_parallel_sum(n: usize, eval: impl Fn(usize) -> f64 + Sync) -> f64 {
    if n <= CHUNK {
        return neumaier_sum((0..n).map(eval));
    }
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * CHUNK;
            let hi = ((ci + 1) * CHUNK).min(n);
            neumaier_sum((lo..hi).map(&eval))
        })
        .collect();
    neumaier_sum(partial)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_beats_naive() {
        // 1 + 1e-16 repeated: naive summation loses the small terms.
        let n = 100_000;
        let vals: Vec<f64> = (0..n)
            .map(|i| if i == 0 { 1.0 } else { 1e-16 })
            .collect();
        let exact = 1.0 + (n as f64 - 1.0) * 1e-16;
        assert!((neumaier_sum(vals.iter().copied()) - exact).abs() < 1e-18);
    }

    #[test]
    fn chunked_matches_serial_bitwise() {
        let eval = |i: usize| ((i as f64) * 0.7).sin() / (1.0 + i as f64);
        let serial = {
            let chunks = 10_007usize.div_ceil(CHUNK);
            let partial: Vec<f64> = (0..chunks)
                .map(|ci| {
                    let lo = ci * CHUNK;
                    let hi = ((ci + 1) * CHUNK).min(10_007);
                    neumaier_sum((lo..hi).map(eval))
                })
                .collect();
            neumaier_sum(partial)
        };
        let parallel = chunked_parallel_sum(10_007, eval);
        assert_eq!(serial.to_bits(), parallel.to_bits());
    }
}
