#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

fn choose(n: u64, k: u64) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

/// Gap formula evaluated term by term in exact rational arithmetic, exactly
/// as printed: 1 − Σ C(n+α−1, α−1)(p^α q^n − p^{n−β−1} q^{α+β+1}).
pub fn exact_gap_formula(alpha: u64, beta: u64, p: f64) -> BigRational {
    let p = BigRational::from_float(p).expect("finite p");
    let q = BigRational::one() - &p;
    if p <= q {
        return BigRational::one();
    }
    if alpha == 0 {
        return (&q / &p).pow((beta + 1) as i32);
    }
    let mut sum = BigRational::zero();
    for n in 0..=alpha + beta {
        let c = BigRational::from_integer(choose(n + alpha - 1, alpha - 1));
        let lead = p.pow(alpha as i32) * q.pow(n as i32);
        let catchup = p.pow(n as i32 - beta as i32 - 1) * q.pow((alpha + beta + 1) as i32);
        sum += c * (lead - catchup);
    }
    BigRational::one() - sum
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("representable")
}

/// Worst relative disagreement between the log-space implementation and the
/// exact evaluation over α + β ≤ 30 at the given odds.
pub fn worst_relative_error(ps: &[f64]) -> (f64, (u64, u64, f64)) {
    let mut worst = (0.0, (0, 0, 0.0));
    for &p in ps {
        let odds = tanglesim::attack::RaceOdds::from_p(p).unwrap();
        for alpha in 0..=30u64 {
            for beta in 0..=30 - alpha {
                let exact = to_f64(&exact_gap_formula(alpha, beta, p));
                let got = tanglesim::attack::attack_success_with_gap(alpha, beta, &odds);
                let rel = ((got - exact) / exact).abs();
                if rel > worst.0 {
                    worst = (rel, (alpha, beta, p));
                }
            }
        }
    }
    worst
}
