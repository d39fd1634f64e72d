//! Classic fixed-step fourth-order Runge-Kutta.

/// One RK4 step of `dx/dt = f(x)`. Returns `None` when the derivative is
/// undefined at any stage (the caller treats that like an event crossing).
pub fn rk4_step<const N: usize, F>(f: &F, x: &[f64; N], h: f64) -> Option<[f64; N]>
where
    F: Fn(&[f64; N]) -> Option<[f64; N]>,
{
    let k1 = f(x)?;
    let k2 = f(&axpy(x, &k1, 0.5 * h))?;
    let k3 = f(&axpy(x, &k2, 0.5 * h))?;
    let k4 = f(&axpy(x, &k3, h))?;
    let mut out = *x;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out.iter().all(|v| v.is_finite()).then_some(out)
}

fn axpy<const N: usize>(x: &[f64; N], dx: &[f64; N], h: f64) -> [f64; N] {
    let mut out = *x;
    for i in 0..N {
        out[i] += h * dx[i];
    }
    out
}
