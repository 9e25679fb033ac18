//! Modified Bessel function of the first kind, order zero.
//!
//! Power series `Σ (x²/4)^k / (k!)²` below [`SERIES_LIMIT`]; all terms are
//! positive so it carries no cancellation. Above the limit the Hankel asymptotic
//! expansion `e^x/√(2πx) · Σ [(2k-1)!!]² / (k! (8x)^k)` is summed until its terms
//! stop shrinking.

/// Switch point between the series and the asymptotic expansion.
pub const SERIES_LIMIT: f64 = 30.0;

/// `I_0(x)`.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        series(x)
    } else {
        x.exp() * asymptotic_scaled(x)
    }
}

/// `e^{-|x|} I_0(x)`, finite for every finite `x`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        (-x).exp() * series(x)
    } else {
        asymptotic_scaled(x)
    }
}

fn series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term <= sum * 1e-17 {
            return sum;
        }
        k += 1.0;
    }
}

fn asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = term * odd * odd / (k as f64 * 8.0 * x);
        if next >= term || next <= sum * 1e-17 {
            if next < term {
                sum += next;
            }
            break;
        }
        term = next;
        sum += term;
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    // 25-digit values from mpmath.besseli(0, x).
    const REFERENCE: &[(f64, f64)] = &[
        (0.0, 1.0),
        (1e-8, 1.000_000_000_000_000_025),
        (0.001, 1.000_000_250_000_015_625),
        (0.5, 1.063_483_370_741_323_519),
        (1.0, 1.266_065_877_752_008_336),
        (2.5, 3.289_839_144_050_123_036),
        (5.0, 27.239_871_823_604_446_89),
        (10.0, 2_815.716_628_466_254_471),
        (15.0, 339_649.373_297_913_879_5),
        (20.0, 43_558_282.559_553_533_27),
        (29.9, 708_478_330_489.015_515_9),
        (30.0, 781_672_297_823.977_489_7),
        (30.1, 862_432_920_031.778_007_4),
        (35.0, 107_338_818_494_514.063_6),
        (40.0, 14_894_774_793_419_899.92),
        (45.0, 2_083_414_075_177_314_816.0),
        (50.0, 293_255_378_384_933_632_665.5),
    ];

    #[test]
    fn matches_high_precision_reference() {
        for &(x, want) in REFERENCE {
            let got = bessel_i0(x);
            let rel = ((got - want) / want).abs();
            assert!(rel < 1e-10, "I0({x}) = {got}, want {want}, rel {rel:e}");
            let scaled = bessel_i0_scaled(x) * x.exp();
            assert!(((scaled - want) / want).abs() < 1e-10);
        }
    }

    #[test]
    fn even_and_unit_at_origin() {
        assert_eq!(bessel_i0(0.0), 1.0);
        assert_eq!(bessel_i0(-3.2), bessel_i0(3.2));
    }

    #[test]
    fn continuous_across_switch() {
        let below = bessel_i0(SERIES_LIMIT);
        let above = bessel_i0(SERIES_LIMIT * (1.0 + 1e-12));
        assert!(((above - below) / below).abs() < 1e-10);
    }

    #[test]
    fn scaled_is_finite_for_huge_arguments() {
        let v = bessel_i0_scaled(1e6);
        assert!(v.is_finite() && v > 0.0);
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI * 1e6).sqrt()).abs() < 1e-9);
    }
}
