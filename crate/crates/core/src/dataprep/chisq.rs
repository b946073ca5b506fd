use crate::error::DataError;

/// Result of Pearson's χ² test of independence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson's χ² test of independence on an `r × s` contingency table.
///
/// Counts are taken as `f64` so expected (fractional) tables can be ranked
/// the same way as observed ones. Every row and column total must be
/// positive.
pub fn chi_square(observed: &[Vec<f64>]) -> Result<ChiSquare, DataError> {
    let rows = observed.len();
    if rows < 2 {
        return Err(DataError::InvalidTable(format!("{rows} row(s), need at least 2")));
    }
    let cols = observed[0].len();
    if cols < 2 {
        return Err(DataError::InvalidTable(format!("{cols} column(s), need at least 2")));
    }
    if observed.iter().any(|r| r.len() != cols) {
        return Err(DataError::InvalidTable("ragged table".into()));
    }
    if observed.iter().flatten().any(|&c| !(c >= 0.0) || !c.is_finite()) {
        return Err(DataError::InvalidTable("negative or non-finite count".into()));
    }

    let row_totals: Vec<f64> = observed.iter().map(|r| r.iter().sum()).collect();
    let col_totals: Vec<f64> = (0..cols)
        .map(|j| observed.iter().map(|r| r[j]).sum())
        .collect();
    if let Some(i) = row_totals.iter().position(|&t| t <= 0.0) {
        return Err(DataError::InvalidTable(format!("row {i} has zero total")));
    }
    if let Some(j) = col_totals.iter().position(|&t| t <= 0.0) {
        return Err(DataError::InvalidTable(format!("column {j} has zero total")));
    }
    let n: f64 = row_totals.iter().sum();

    let mut statistic = 0.0;
    for (i, row) in observed.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = row_totals[i] * col_totals[j] / n;
            statistic += (o - e) * (o - e) / e;
        }
    }
    let dof = (rows - 1) * (cols - 1);
    let p_value = chi2_survival(statistic, dof as f64);
    Ok(ChiSquare {
        statistic,
        dof,
        p_value,
    })
}

fn chi2_survival(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(dof / 2.0, x / 2.0).clamp(0.0, 1.0)
}

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// Regularized lower incomplete gamma function P(a, x).
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "shape must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma function Q(a, x) = 1 − P(a, x).
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "shape must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_continued_fraction(a, x)
    }
}

// P(a, x) by its power series; converges fast for x < a + 1.
fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

// Q(a, x) by the Legendre continued fraction, modified Lentz evaluation.
fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7, nine coefficients).
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
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
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
