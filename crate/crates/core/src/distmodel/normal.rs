#![allow(clippy::excessive_precision)]

//! Standard normal upper tail `Q(x) = 1 - Phi(x)` and its inverse.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Upper tail probability `Q(x) = P(Z > x)` for `Z ~ N(0, 1)`.
#[inline]
pub fn normal_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Inverse of [`normal_tail`]: the `x` with `Q(x) = p`.
pub fn normal_tail_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityOutOfRange { value: p });
    }
    Ok(normal_tail_inv_unchecked(p))
}

/// [`normal_tail_inv`] without the range check. Returns `+inf` at 0 and
/// `-inf` at 1.
pub(crate) fn normal_tail_inv_unchecked(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::INFINITY;
    }
    if p >= 1.0 {
        return f64::NEG_INFINITY;
    }
    // Q^{-1}(p) = -Phi^{-1}(p)
    let x = -ppnd16(p);
    // One Newton step on Q(x) - p.
    let d = normal_pdf(x);
    if d > 0.0 {
        x + (normal_tail(x) - p) / d
    } else {
        x
    }
}

const SPLIT1: f64 = 0.425;
const SPLIT2: f64 = 5.0;
const CONST1: f64 = 0.180625;
const CONST2: f64 = 1.6;

// Wichura's AS 241 (PPND16): numerator coefficients in [0..8], denominator in [8..15].
// Digits are kept as published.
const CENTRAL: [f64; 15] = [
    3.387_132_872_796_366_608_0E0,
    1.331_416_678_917_843_774_5E2,
    1.971_590_950_306_551_442_7E3,
    1.373_169_376_550_946_112_5E4,
    4.592_195_393_154_987_145_7E4,
    6.726_577_092_700_870_085_3E4,
    3.343_057_558_358_812_810_5E4,
    2.509_080_928_730_122_672_7E3,
    4.231_333_070_160_091_125_2E1,
    6.871_870_074_920_579_083_0E2,
    5.394_196_021_424_751_107_7E3,
    2.121_379_430_158_659_586_7E4,
    3.930_789_580_009_271_061_0E4,
    2.872_908_573_572_194_267_4E4,
    5.226_495_278_852_854_561_0E3,
];

const INTERMEDIATE: [f64; 15] = [
    1.423_437_110_749_683_577_34E0,
    4.630_337_846_156_545_295_90E0,
    5.769_497_221_460_691_405_50E0,
    3.647_848_324_763_204_605_04E0,
    1.270_458_252_452_368_382_58E0,
    2.417_807_251_774_506_117_70E-1,
    2.272_384_498_926_918_458_33E-2,
    7.745_450_142_783_414_076_40E-4,
    2.053_191_626_637_758_821_87E0,
    1.676_384_830_183_803_849_40E0,
    6.897_673_349_851_000_045_50E-1,
    1.481_039_764_274_800_745_90E-1,
    1.519_866_656_361_645_719_66E-2,
    5.475_938_084_995_344_946_00E-4,
    1.050_750_071_644_416_843_24E-9,
];

const FAR_TAIL: [f64; 15] = [
    6.657_904_643_501_103_777_20E0,
    5.463_784_911_164_114_369_90E0,
    1.784_826_539_917_291_335_80E0,
    2.965_605_718_285_048_912_30E-1,
    2.653_218_952_657_612_309_30E-2,
    1.242_660_947_388_078_438_60E-3,
    2.711_555_568_743_487_578_15E-5,
    2.010_334_399_292_288_132_65E-7,
    5.998_322_065_558_879_376_90E-1,
    1.369_298_809_227_358_053_10E-1,
    1.487_536_129_085_061_485_25E-2,
    7.868_691_311_456_132_591_00E-4,
    1.846_318_317_510_054_681_80E-5,
    1.421_511_758_316_445_888_70E-7,
    2.044_263_103_389_939_785_64E-15,
];

#[inline]
fn rational(z: f64, c: &[f64; 15]) -> f64 {
    let num = c[..8].iter().rev().fold(0.0, |acc, &a| acc * z + a);
    let den = c[8..].iter().rev().fold(0.0, |acc, &b| acc * z + b) * z + 1.0;
    num / den
}

/// Lower-tail standard normal quantile `Phi^{-1}(p)` for `p` in (0, 1).
fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= SPLIT1 {
        let r = CONST1 - q * q;
        return q * rational(r, &CENTRAL);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let z = if r <= SPLIT2 {
        rational(r - CONST2, &INTERMEDIATE)
    } else {
        rational(r - SPLIT2, &FAR_TAIL)
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}
