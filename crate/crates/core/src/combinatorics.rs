//! Binomial coefficients and colexicographic subset enumeration.

use statrs::function::gamma::ln_gamma;

/// Exact `C(n, r)`, or `None` if it does not fit in a `u128`.
pub fn binomial_exact(n: u64, r: u64) -> Option<u128> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) is exact at every step; reduce by the gcd
        // first so the intermediate product overflows as late as possible.
        let num = (n - i) as u128;
        let den = (i + 1) as u128;
        let g = gcd(acc, den);
        let (a, dd) = (acc / g, den / g);
        let g2 = gcd(num, dd);
        let (nn, dd) = (num / g2, dd / g2);
        debug_assert_eq!(dd, 1);
        acc = a.checked_mul(nn)?;
    }
    Some(acc)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Natural log of `C(n, r)`; exact when the coefficient fits in 128 bits.
pub fn ln_binomial(n: u64, r: u64) -> f64 {
    if r > n {
        return f64::NEG_INFINITY;
    }
    match binomial_exact(n, r) {
        Some(c) => (c as f64).ln(),
        None => ln_gamma(n as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((n - r) as f64 + 1.0),
    }
}

/// `C(n, r)` as a float (may be `inf` for huge arguments).
pub fn binomial_f64(n: u64, r: u64) -> f64 {
    match binomial_exact(n, r) {
        Some(c) => c as f64,
        None => ln_binomial(n, r).exp(),
    }
}

/// Rank of a sorted `r`-subset of `0..n` in colexicographic order, which for
/// `n <= 64` is the order of the subsets' bitmask values.
pub fn colex_rank(sorted_members: &[u32]) -> u128 {
    sorted_members
        .iter()
        .enumerate()
        .map(|(i, &c)| binomial_exact(c as u64, i as u64 + 1).expect("rank overflow"))
        .sum()
}

/// Iterator over all `r`-subsets of `0..n` in colexicographic order.
pub struct ColexSubsets {
    current: Vec<u32>,
    n: u32,
    done: bool,
}

impl ColexSubsets {
    pub fn new(n: u32, r: u32) -> Self {
        Self {
            current: (0..r).collect(),
            n,
            done: r > n,
        }
    }
}

impl Iterator for ColexSubsets {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        // Advance: find the lowest position that can move up without
        // colliding with its successor, bump it and reset everything below.
        let r = self.current.len();
        let mut i = 0;
        loop {
            if i == r {
                self.done = true;
                break;
            }
            let limit = if i + 1 < r { self.current[i + 1] } else { self.n };
            if self.current[i] + 1 < limit {
                self.current[i] += 1;
                for (j, c) in self.current.iter_mut().enumerate().take(i) {
                    *c = j as u32;
                }
                break;
            }
            i += 1;
        }
        Some(out)
    }
}
