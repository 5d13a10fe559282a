use crate::scalar::Real;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural logarithm of the gamma function for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = T::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::lit(i as f64));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    half * T::TAU().ln() + (x + half) * t.ln() - t + acc.ln()
}

/// Fullness of the `(1 - ξ^X2)^X3` section term:
/// `S = Γ(1/X2 + 1) Γ(X3 + 1) / Γ(1/X2 + X3 + 1)`, via log-gamma.
pub fn section_fullness<T: Real>(x2: T, x3: T) -> T {
    let inv = T::one() / x2;
    (ln_gamma(inv + T::one()) + ln_gamma(x3 + T::one()) - ln_gamma(inv + x3 + T::one())).exp()
}
