//! Mode-wise variation-of-constants integrals on a uniform sample grid.
//!
//! Within each panel the forcing is interpolated exponentially when the two
//! endpoint values share a sign and differ by less than a factor `e`, and
//! linearly otherwise; the kernel `e^{±λτ}` is integrated exactly.

/// `g_p(z) = ∫_0^1 u^p e^{-zu} du` for `p ∈ {0, 1}`.
pub(crate) fn g0(z: f64) -> f64 {
    if z.abs() < 0.5 {
        series(z, 0)
    } else {
        -(-z).exp_m1() / z
    }
}

pub(crate) fn g1(z: f64) -> f64 {
    if z.abs() < 0.5 {
        series(z, 1)
    } else {
        (g0(z) - (-z).exp()) / z
    }
}

fn series(z: f64, p: usize) -> f64 {
    // Σ_m (-z)^m / (m! (m + p + 1))
    let mut term = 1.0;
    let mut sum = 0.0;
    for m in 0..20 {
        sum += term / (m + p + 1) as f64;
        term *= -z / (m + 1) as f64;
    }
    sum
}

/// `∫_0^1 e^{zu} F(u) du` with `F(0) = f0`, `F(1) = f1`.
pub(crate) fn panel_moment(z: f64, f0: f64, f1: f64) -> f64 {
    if f0 == 0.0 && f1 == 0.0 {
        return 0.0;
    }
    let ratio = f1 / f0;
    if ratio.is_finite() && ratio > (-1.0f64).exp() && ratio < 1.0f64.exp() {
        f0 * g0(-(z + ratio.ln()))
    } else {
        f0 * (g0(-z) - g1(-z)) + f1 * g1(-z)
    }
}

/// Exponential decay rate of `f` between two consecutive samples, if defined.
pub(crate) fn local_rate(f_prev: f64, f_last: f64, h: f64) -> Option<f64> {
    let ratio = f_prev / f_last;
    (ratio.is_finite() && ratio > 0.0).then(|| ratio.ln() / h)
}

/// `T(s_i) = e^{-λ s_i} T(0) + ∫_0^{s_i} e^{-λ(s_i-τ)} F(τ) dτ`.
pub(crate) fn forward(lambda: f64, h: f64, t0: f64, forcing: &[f64]) -> Vec<f64> {
    let z = lambda * h;
    let decay = (-z).exp();
    let mut out = Vec::with_capacity(forcing.len());
    let mut t = t0;
    out.push(t);
    for w in forcing.windows(2) {
        t = decay * (t + h * panel_moment(z, w[0], w[1]));
        out.push(t);
    }
    out
}

/// `T(s_i) = −∫_{s_i}^{S} e^{λ(τ-s_i)} F(τ) dτ + e^{λ(S-s_i)} T(S)`.
pub(crate) fn backward(lambda: f64, h: f64, t_end: f64, forcing: &[f64]) -> Vec<f64> {
    let z = lambda * h;
    let growth = z.exp();
    let mut out = vec![0.0; forcing.len()];
    let mut t = t_end;
    if let Some(last) = out.last_mut() {
        *last = t;
    }
    for i in (0..forcing.len().saturating_sub(1)).rev() {
        t = growth * t - h * panel_moment(z, forcing[i], forcing[i + 1]);
        out[i] = t;
    }
    out
}

/// `∫_{s_start}^{S} e^{λ(τ - s_start)} F(τ) dτ`, with the same panel weights as
/// [`forward`] and [`backward`].
pub(crate) fn weighted_integral(lambda: f64, h: f64, forcing: &[f64]) -> f64 {
    let z = lambda * h;
    let mut acc = 0.0;
    let mut weight = 1.0;
    for w in forcing.windows(2) {
        acc += weight * h * panel_moment(z, w[0], w[1]);
        weight *= z.exp();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_functions() {
        for z in [-3.0, -0.6, -0.4, -1e-3, 0.0, 1e-6, 0.3, 0.49, 0.51, 4.0] {
            // Midpoint rule on a fine grid as reference.
            let m = 20000;
            let (mut r0, mut r1) = (0.0, 0.0);
            for i in 0..m {
                let u = (i as f64 + 0.5) / m as f64;
                r0 += (-z * u).exp() / m as f64;
                r1 += u * (-z * u).exp() / m as f64;
            }
            assert!((g0(z) - r0).abs() < 1e-8, "g0({z})");
            assert!((g1(z) - r1).abs() < 1e-8, "g1({z})");
        }
    }

    #[test]
    fn exponential_forcing_is_integrated_exactly() {
        let (lambda, beta, h) = (1.5, 4.0, 0.05);
        let forcing: Vec<f64> = (0..41).map(|i| (-beta * h * i as f64).exp()).collect();
        let out = forward(lambda, h, 0.0, &forcing);
        let s = 2.0;
        let exact = ((-beta * s).exp() - (-lambda * s).exp()) / (lambda - beta);
        assert!((out[40] - exact).abs() < 1e-14);
    }

    #[test]
    fn constant_forcing_is_integrated_exactly() {
        let (lambda, h) = (2.0, 0.1);
        let out = forward(lambda, h, 0.0, &[0.7; 11]);
        let exact = 0.7 * (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((out[10] - exact).abs() < 1e-15);
        let back = backward(-0.5, h, 0.0, &[0.7; 11]);
        assert!((back[0] + 1.4 * (1.0 - (-0.5f64).exp())).abs() < 1e-14);
    }
}
