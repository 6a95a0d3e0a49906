//! Scalar special functions used by the Dirichlet formulas.
//!
//! All functions are defined for strictly positive, finite arguments only.
//! Each one shifts its argument with the appropriate recurrence into a range
//! where a convergent or asymptotic series is accurate to a few ulps.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Below this, digamma and trigamma are shifted upward before the asymptotic series.
const ASYMPTOTIC_THRESHOLD: f64 = 10.0;
/// Above this, log-gamma uses the Stirling series directly.
const STIRLING_THRESHOLD: f64 = 15.0;

/// ζ(k) − 1 for k = 2, 3, …, 41.
#[allow(clippy::excessive_precision)]
const ZETA_MINUS_ONE: [f64; 40] = [
    0.6449340668482264364724,
    0.2020569031595942853997,
    0.082323233711138191516,
    0.03692775514336992633137,
    0.01734306198444913971452,
    0.008349277381922826839798,
    0.004077356197944339378685,
    0.002008392826082214417853,
    0.000994575127818085337146,
    0.0004941886041194645587023,
    0.000246086553308048298638,
    0.0001227133475784891467518,
    0.00006124813505870482925855,
    0.00003058823630702049355173,
    0.00001528225940865187173257,
    0.0000076371976378997622736,
    0.000003817293264999839856462,
    0.000001908212716553938925657,
    9.53962033872796113152e-7,
    4.769329867878064631167e-7,
    2.384505027277329900036e-7,
    1.192199259653110730678e-7,
    5.960818905125947961244e-8,
    2.980350351465228018606e-8,
    1.490155482836504123466e-8,
    7.450711789835429491981e-9,
    3.725334024788457054819e-9,
    1.862659723513049006404e-9,
    9.313274324196681828718e-10,
    4.656629065033784072989e-10,
    2.328311833676505492001e-10,
    1.164155017270051977593e-10,
    5.820772087902700889244e-11,
    2.910385044497099686929e-11,
    1.455192189104198423593e-11,
    7.275959835057481014521e-12,
    3.637979547378651190237e-12,
    1.818989650307065947585e-12,
    9.094947840263889282533e-13,
    4.547473783042154026799e-13,
];

/// Bernoulli numbers B₂, B₄, …, B₁₆.
const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} requires a finite argument > 0, got {x}")))
    }
}

/// Natural logarithm of the gamma function, `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive("log_gamma", x)?;
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        log_gamma_1p(x) - x.ln()
    } else if x <= 1.5 {
        log_gamma_1p(x - 1.0)
    } else if x < STIRLING_THRESHOLD {
        // Walk down into (1.5, 2.5]; every log term is positive.
        let mut y = x;
        let mut log_sum = 0.0;
        while y > 2.5 {
            y -= 1.0;
            log_sum += y.ln();
        }
        // ln Γ(y) = ln Γ(1 + (y − 2)) + ln(y − 1)
        log_gamma_1p(y - 2.0) + (y - 2.0).ln_1p() + log_sum
    } else {
        stirling(x)
    }
}

/// `ln Γ(1 + z)` for `|z| ≤ 0.5`:
/// `−ln(1 + z) + z(1 − γ) + Σₖ₌₂ (ζ(k) − 1)(−z)ᵏ / k`.
fn log_gamma_1p(z: f64) -> f64 {
    let mut acc = 0.0;
    let mut power = -z;
    for (i, zm1) in ZETA_MINUS_ONE.iter().enumerate() {
        let k = (i + 2) as f64;
        power *= -z;
        acc += zm1 * power / k;
    }
    acc - z.ln_1p() + z * (1.0 - EULER_GAMMA)
}

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut power = inv;
    for (i, b) in BERNOULLI_EVEN.iter().enumerate() {
        let k = (i + 1) as f64;
        series += b / (2.0 * k * (2.0 * k - 1.0)) * power;
        power *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + series
}

/// Digamma function `ψ(x) = d/dx ln Γ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(x: f64) -> f64 {
    let mut y = x;
    let mut shift = 0.0;
    while y < ASYMPTOTIC_THRESHOLD {
        shift += 1.0 / y;
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut power = inv2;
    for (i, b) in BERNOULLI_EVEN.iter().enumerate() {
        let k = (i + 1) as f64;
        series += b / (2.0 * k) * power;
        power *= inv2;
    }
    y.ln() - 0.5 * inv - series - shift
}

/// Trigamma function `ψ′(x)` for `x > 0`.
pub fn trigamma(x: f64) -> Result<f64> {
    check_positive("trigamma", x)?;
    Ok(trigamma_unchecked(x))
}

pub(crate) fn trigamma_unchecked(x: f64) -> f64 {
    let mut y = x;
    let mut shift = 0.0;
    while y < ASYMPTOTIC_THRESHOLD {
        shift += 1.0 / (y * y);
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut power = inv2 * inv;
    for b in BERNOULLI_EVEN.iter() {
        series += b * power;
        power *= inv2;
    }
    inv + 0.5 * inv2 + series + shift
}

/// Overflow-safe `ln(1 + eˣ)`.
pub fn softplus(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("softplus requires a finite argument, got {x}")));
    }
    Ok(softplus_unchecked(x))
}

#[inline]
pub(crate) fn softplus_unchecked(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic sigmoid, the derivative of [`softplus`].
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
