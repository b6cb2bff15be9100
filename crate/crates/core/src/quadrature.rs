//! Composite Gauss-Legendre quadrature for smooth one-dimensional integrals,
//! and Simpson's rule for equally spaced samples.

/// Nodes and weights of the `order`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate `f` over `[a, b]` with `panels` equal panels of a 20-point rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let part: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * f(mid + 0.5 * h * x))
            .sum();
        total += 0.5 * h * part;
    }
    total
}

/// Composite Simpson rule over equally spaced samples `h` apart; needs an
/// odd number of samples (an even number of intervals).
pub fn simpson(samples: &[f64], h: f64) -> Option<f64> {
    let n = samples.len();
    if n < 3 || n.is_multiple_of(2) {
        return None;
    }
    let inner: f64 = samples[1..n - 1]
        .iter()
        .enumerate()
        .map(|(i, v)| if i % 2 == 0 { 4.0 * v } else { 2.0 * v })
        .sum();
    Some(h / 3.0 * (samples[0] + inner + samples[n - 1]))
}
