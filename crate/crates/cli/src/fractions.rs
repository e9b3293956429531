//! Exact, unreduced rank probabilities as integer numerators over a shared
//! denominator.

use mklsgd::Replacement;

fn binomial(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by i + 1 after the multiplication.
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// `(numerators, denominator)`, or `None` when the integers overflow.
pub fn rank_fractions(n: usize, k: usize, replacement: Replacement) -> Option<(Vec<u128>, u128)> {
    let (n, k) = (n as u128, k as u32);
    match replacement {
        Replacement::With => {
            let den = n.checked_pow(k)?;
            let nums = (1..=n)
                .map(|i| Some((n - i + 1).checked_pow(k)? - (n - i).pow(k)))
                .collect::<Option<_>>()?;
            Some((nums, den))
        }
        Replacement::Without => {
            let den = binomial(n, k as u128)?;
            let nums = (1..=n)
                .map(|i| binomial(n - i, k as u128 - 1))
                .collect::<Option<_>>()?;
            Some((nums, den))
        }
    }
}
