//! Log-domain standard normal tail routines.
//!
//! Everything here works with `ln Q(z)`, where `Q(z) = P(Z > z)` for a
//! standard normal `Z`, so that tails far beyond the underflow point of
//! `Q` itself (z > 38) stay representable.

#![allow(clippy::excessive_precision)]

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

/// ln(sqrt(2 pi))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Above this point `ln Q` is computed from the Mills-ratio continued fraction.
const CONTINUED_FRACTION_CUTOFF: f64 = 8.0;

/// Beyond this cumulative hazard the rational quantile approximation is
/// replaced by an asymptotic start refined with Newton steps.
const NEWTON_CUTOFF: f64 = 500.0;

/// Standard normal log-density.
#[inline]
pub fn log_phi(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// Mills ratio `Q(z) / phi(z)` for large positive `z`, via the continued
/// fraction `1 / (z + 1/(z + 2/(z + 3/(z + ...))))` (modified Lentz).
fn mills_ratio_cf(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = z;
    let mut c = f;
    let mut d = 0.0;
    for j in 1..500 {
        let a = j as f64;
        d = z + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = z + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Upper tail `Q(z)` in linear scale. Underflows to 0 for z > ~38.
#[inline]
pub fn upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// `ln Q(z)`, accurate in relative terms for all finite `z`.
///
/// For `z < 0` the result is `ln(1 - Q(-z))`, evaluated with `ln_1p` so that
/// values of order `1e-300` are not lost.
pub fn log_upper_tail(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z < 0.0 {
        (-upper_tail(-z)).ln_1p()
    } else if z <= CONTINUED_FRACTION_CUTOFF {
        upper_tail(z).ln()
    } else {
        log_phi(z) + mills_ratio_cf(z).ln()
    }
}

/// Hazard rate of the standard normal, `phi(z) / Q(z)` (inverse Mills ratio).
pub fn normal_hazard(z: f64) -> f64 {
    if z > CONTINUED_FRACTION_CUTOFF {
        1.0 / mills_ratio_cf(z)
    } else {
        (log_phi(z) - log_upper_tail(z)).exp()
    }
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

// Wichura's AS241 (PPND16) coefficients, lowest order first.
const A: [f64; 8] = [
    3.387_132_872_796_366_608,
    133.141_667_891_784_377_45,
    1_971.590_950_306_551_442_7,
    13_731.693_765_509_461_125,
    45_921.953_931_549_871_457,
    67_265.770_927_008_700_853,
    33_430.575_583_588_128_105,
    2_509.080_928_730_122_672_7,
];
const B: [f64; 8] = [
    1.0,
    42.313_330_701_600_911_252,
    687.187_007_492_057_908_3,
    5_394.196_021_424_751_107_7,
    21_213.794_301_586_595_867,
    39_307.895_800_092_710_61,
    28_729.085_735_721_942_674,
    5_226.495_278_852_854_561,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    0.241_780_725_177_450_611_77,
    0.022_723_844_989_269_184_583_3,
    7.745_450_142_783_414_076_4e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    0.689_767_334_985_100_004_55,
    0.148_103_976_427_480_074_59,
    0.015_198_666_563_616_457_196_6,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    0.296_560_571_828_504_891_23,
    0.026_532_189_526_576_123_093,
    0.001_242_660_947_388_078_438_6,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 8] = [
    1.0,
    0.599_832_206_555_887_937_69,
    0.136_929_880_922_735_805_31,
    0.014_875_361_290_850_614_852_5,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

/// Returns `z >= 0` with `Q(z) = p`, for `p = exp(-y) <= 1/2`, taking `y` directly.
fn upper_quantile_tail(y: f64) -> f64 {
    if y > NEWTON_CUTOFF {
        return newton_polish(asymptotic_start(y), y);
    }
    // Central region of AS241: |p - 1/2| <= 0.425.
    let p = (-y).exp();
    let q = 0.5 - p;
    if q <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = y.sqrt();
    if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    }
}

fn asymptotic_start(y: f64) -> f64 {
    // ln Q(z) ~ -z^2/2 - ln(z sqrt(2 pi)); two fixed-point passes.
    let mut z = (2.0 * y).sqrt();
    for _ in 0..2 {
        z = (2.0 * y - 2.0 * LN_SQRT_2PI - 2.0 * z.ln()).sqrt();
    }
    z
}

/// Newton iteration on `ln Q(z) + y = 0`; the derivative of `ln Q` is `-phi/Q`.
fn newton_polish(mut z: f64, y: f64) -> f64 {
    for _ in 0..50 {
        let step = (log_upper_tail(z) + y) / normal_hazard(z);
        z += step;
        if step.abs() <= 1e-15 * z.abs().max(1.0) {
            break;
        }
    }
    z
}

/// Upper-tail quantile from a negative log-probability.
///
/// Returns `z` with `-ln Q(z) = y` for any `y >= 0` without forming
/// `exp(-y)` in the deep tail. `y = 0` maps to `-inf`.
pub fn upper_quantile_from_neg_log(y: f64) -> f64 {
    if y.is_nan() || y < 0.0 {
        return f64::NAN;
    }
    if y == 0.0 {
        return f64::NEG_INFINITY;
    }
    if y.is_infinite() {
        return f64::INFINITY;
    }
    if y >= LN_2 {
        upper_quantile_tail(y)
    } else {
        // Q(z) > 1/2, so z < 0 and Q(-z) = 1 - exp(-y) is the small side.
        let lower = -(-y).exp_m1();
        -upper_quantile_tail(-lower.ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values of ln Q(z) from 40-digit arithmetic.
    const REFERENCE: [(f64, f64); 10] = [
        (0.5, -1.175_911_761_593_618_6),
        (3.0, -6.607_726_221_510_349_5),
        (8.0, -35.013_437_159_914_549_9),
        (10.0, -53.231_285_150_512_470_6),
        (20.0, -203.917_155_371_097_263_9),
        (37.0, -689.030_585_576_890_593_6),
        (40.0, -804.608_442_013_753_788_2),
        (100.0, -5_005.524_208_694_205_088_6),
        (-3.0, -0.001_350_809_964_748_193_8),
        (-10.0, -7.619_853_024_160_526_07e-24),
    ];

    #[test]
    fn log_upper_tail_matches_reference() {
        for (z, want) in REFERENCE {
            let got = log_upper_tail(z);
            assert!(
                ((got - want) / want).abs() < 1e-13,
                "z={z}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn cf_and_erfc_agree_near_cutoff() {
        for z in [6.0, 7.0, 7.9, 8.1, 9.0, 12.0, 20.0] {
            let direct = upper_tail(z).ln();
            let cf = log_phi(z) + mills_ratio_cf(z).ln();
            assert!(((direct - cf) / direct).abs() < 1e-14, "z={z}");
        }
    }

    #[test]
    fn quantile_inverts_log_tail() {
        let mut y = 1e-12;
        while y < 1e6 {
            let z = upper_quantile_from_neg_log(y);
            let back = -log_upper_tail(z);
            assert!(((back - y) / y).abs() < 1e-11, "y={y}: z={z}, back={back}");
            y *= 1.37;
        }
    }

    #[test]
    fn quantile_edges() {
        assert_eq!(upper_quantile_from_neg_log(0.0), f64::NEG_INFINITY);
        assert!(upper_quantile_from_neg_log(-1.0).is_nan());
        assert!(upper_quantile_from_neg_log(LN_2).abs() < 1e-15);
    }

    #[test]
    fn hazard_is_derivative_of_neg_log_tail() {
        for z in [-5.0f64, -1.0, 0.0, 1.5, 7.99, 8.01, 25.0] {
            let h = 1e-5 * (1.0f64).max(z.abs());
            let fd = -(log_upper_tail(z + h) - log_upper_tail(z - h)) / (2.0 * h);
            let got = normal_hazard(z);
            assert!(((got - fd) / got).abs() < 1e-7, "z={z}: {got} vs {fd}");
        }
    }
}
