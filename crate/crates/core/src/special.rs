//! Special functions needed in closed form: log-factorials, `ln Γ(m/2)`,
//! sphere areas and the von Mises-Fisher sphere average.

use std::f64::consts::PI;

/// `ln n!` by direct summation.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `ln Γ(m/2)` for integer `m >= 1`, using `Γ(1) = 1`, `Γ(1/2) = √π` and
/// `Γ(x + 1) = x Γ(x)`.
pub fn ln_gamma_half(m: usize) -> f64 {
    assert!(m >= 1, "ln_gamma_half needs m >= 1");
    if m.is_multiple_of(2) {
        ln_factorial(m / 2 - 1)
    } else {
        let steps = (m - 1) / 2;
        0.5 * PI.ln() + (0..steps).map(|i| (i as f64 + 0.5).ln()).sum::<f64>()
    }
}

/// Log of the surface measure of the sphere of radius `r` in `R^n`:
/// `2 π^{n/2} r^{n-1} / Γ(n/2)`. For `n = 1` this is the counting measure of
/// the two-point set `{-r, r}`, i.e. `ln 2`.
pub fn ln_sphere_area(dim: usize, radius: f64) -> f64 {
    assert!(dim >= 1);
    let n = dim as f64;
    let radial = if dim == 1 { 0.0 } else { (n - 1.0) * radius.ln() };
    2f64.ln() + 0.5 * n * PI.ln() + radial - ln_gamma_half(dim)
}

pub fn sphere_area(dim: usize, radius: f64) -> f64 {
    if dim > 1 && radius == 0.0 {
        return 0.0;
    }
    ln_sphere_area(dim, radius).exp()
}

/// Lebesgue volume of the ball of radius `r` in `R^n`, `A_n(r) r / n`.
pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    if radius == 0.0 {
        return 0.0;
    }
    (ln_sphere_area(dim, radius) + radius.ln() - (dim as f64).ln()).exp()
}

/// `ln E[exp(κ μ·u)]` for `u` uniform on the unit sphere `S^{n-1}`.
///
/// Uses the series `Γ(n/2) Σ_m (κ²/4)^m / (m! Γ(m + n/2))`, i.e. the
/// normalized Bessel function `Γ(n/2) (2/κ)^{n/2-1} I_{n/2-1}(κ)`, summed in
/// log space so it stays finite for large `κ`.
pub fn vmf_ln_sphere_mean(dim: usize, kappa: f64) -> f64 {
    assert!(dim >= 1);
    assert!(kappa >= 0.0 && kappa.is_finite());
    if kappa == 0.0 {
        return 0.0;
    }
    let half_n = dim as f64 / 2.0;
    let ln_q = 2.0 * (kappa / 2.0).ln();
    let mut ln_terms = Vec::with_capacity(64);
    let mut ln_term = 0.0;
    let mut m = 0usize;
    let mut peak = f64::NEG_INFINITY;
    loop {
        ln_terms.push(ln_term);
        peak = peak.max(ln_term);
        // terms rise until m ≈ κ/2 and then decay super-exponentially
        if m as f64 > kappa && ln_term < peak - 40.0 {
            break;
        }
        let mf = m as f64;
        ln_term += ln_q - (mf + 1.0).ln() - (mf + half_n).ln();
        m += 1;
    }
    peak + ln_terms
        .iter()
        .map(|t| (t - peak).exp())
        .sum::<f64>()
        .ln()
}
