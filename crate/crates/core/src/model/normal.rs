//! Standard normal CDF on the log scale.

use crate::error::{Error, Result};
use crate::real::Real;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
/// Below this the asymptotic Mills-ratio expansion takes over.
const TAIL: f64 = -8.0;

/// `ln Phi(x)` for finite or infinite `x`; `NaN` propagates.
#[inline]
pub fn ln_phi(x: f64) -> f64 {
    if x < TAIL {
        return ln_phi_tail(x);
    }
    if x < 0.0 {
        let t = -x * FRAC_1_SQRT_2;
        (0.5 * erfcx(t)).ln() - t * t
    } else {
        // Upper tail mass is small, so ln_1p keeps it exact.
        (-0.5 * erfc(x * FRAC_1_SQRT_2)).ln_1p()
    }
}

/// `ln(1 - Phi(x)) = ln Phi(-x)`.
#[inline]
pub fn ln_phi_c(x: f64) -> f64 {
    ln_phi(-x)
}

/// `Phi(x)`.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * erfc(-x * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * erfc(x * FRAC_1_SQRT_2)
    }
}

/// `erfc(y)` for `y >= 0`.
#[inline]
fn erfc(y: f64) -> f64 {
    if y > 27.3 {
        return 0.0;
    }
    erfcx(y) * (-y * y).exp()
}

// Cody's rational Chebyshev approximations (SPECFUN CALERF).
const CA: [f64; 5] = [
    3.161_123_743_870_565_6e0,
    1.138_641_541_510_501_6e2,
    3.774_852_376_853_02e2,
    3.209_377_589_138_469_5e3,
    1.857_777_061_846_031_5e-1,
];
const CB: [f64; 4] = [
    2.360_129_095_234_412e1,
    2.440_246_379_344_441_7e2,
    1.282_616_526_077_372_3e3,
    2.844_236_833_439_171e3,
];
const CC: [f64; 9] = [
    5.641_884_969_886_701e-1,
    8.883_149_794_388_376e0,
    6.611_919_063_714_163e1,
    2.986_351_381_974_001e2,
    8.819_522_212_417_69e2,
    1.712_047_612_634_070_6e3,
    2.051_078_377_826_071_5e3,
    1.230_339_354_797_997_2e3,
    2.153_115_354_744_038_5e-8,
];
const CD: [f64; 8] = [
    1.574_492_611_070_983_5e1,
    1.176_939_508_913_125e2,
    5.371_811_018_620_099e2,
    1.621_389_574_566_690_2e3,
    3.290_799_235_733_459_6e3,
    4.362_619_090_143_247e3,
    3.439_367_674_143_721_6e3,
    1.230_339_354_803_749_4e3,
];
const CP: [f64; 6] = [
    3.053_266_349_612_323_4e-1,
    3.603_448_999_498_044_4e-1,
    1.257_817_261_112_292_5e-1,
    1.608_378_514_874_228e-2,
    6.587_491_615_298_378e-4,
    1.631_538_713_730_209_8e-2,
];
const CQ: [f64; 5] = [
    2.568_520_192_289_822,
    1.872_952_849_923_467_3e0,
    5.279_051_029_514_284e-1,
    6.051_834_131_244_132e-2,
    2.335_204_976_268_691_8e-3,
];
const FRAC_1_SQRT_PI: f64 = 5.641_895_835_477_563e-1;

/// Scaled complementary error function `exp(y^2) erfc(y)` for `y >= 0`.
fn erfcx(y: f64) -> f64 {
    if y <= 0.468_75 {
        let ysq = y * y;
        let mut num = CA[4] * ysq;
        let mut den = ysq;
        for i in 0..3 {
            num = (num + CA[i]) * ysq;
            den = (den + CB[i]) * ysq;
        }
        let erf = y * (num + CA[3]) / (den + CB[3]);
        ysq.exp() * (1.0 - erf)
    } else if y <= 4.0 {
        let mut num = CC[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + CC[i]) * y;
            den = (den + CD[i]) * y;
        }
        (num + CC[7]) / (den + CD[7])
    } else {
        let isq = 1.0 / (y * y);
        let mut num = CP[5] * isq;
        let mut den = isq;
        for i in 0..4 {
            num = (num + CP[i]) * isq;
            den = (den + CQ[i]) * isq;
        }
        let r = isq * (num + CP[4]) / (den + CQ[4]);
        (FRAC_1_SQRT_PI - r) / y
    }
}

/// Asymptotic expansion of the lower tail:
/// `Phi(x) ~ phi(x)/|x| * sum_k (-1)^k (2k-1)!! / x^(2k)`.
fn ln_phi_tail(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let inv2 = 1.0 / (x * x);
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    let mut k = 1.0;
    loop {
        let next = -term * (2.0 * k - 1.0) * inv2;
        // Stop at the smallest term of the divergent series, or at precision.
        if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
            if next.abs() < term.abs() {
                sum += next;
            }
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
    -0.5 * x * x - (-x).ln() - HALF_LN_2PI + sum.ln()
}

/// `ln Phi(x)`, rejecting non-finite input.
pub fn log_normal_cdf<T: Real>(x: T) -> Result<T> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("log_normal_cdf: non-finite argument {x}")));
    }
    Ok(T::lit(ln_phi(x.as_f64())))
}

/// `ln(1 - Phi(x))`, rejecting non-finite input.
pub fn log_normal_sf<T: Real>(x: T) -> Result<T> {
    log_normal_cdf(-x)
}
