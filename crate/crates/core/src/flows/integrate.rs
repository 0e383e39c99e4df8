//! Explicit Runge-Kutta steppers on flat state vectors.

use crate::scalar::Real;

fn axpy<T: Real>(y: &[T], h: T, ks: &[(&[T], T)]) -> Vec<T> {
    let mut out = y.to_vec();
    for (k, c) in ks {
        let hc = h * *c;
        for (o, v) in out.iter_mut().zip(k.iter()) {
            *o += hc * *v;
        }
    }
    out
}

/// Classical fourth-order step.
pub fn rk4_step<T: Real, E>(
    f: &mut impl FnMut(T, &[T]) -> Result<Vec<T>, E>,
    t: T,
    y: &[T],
    h: T,
) -> Result<Vec<T>, E> {
    let half = T::lit(0.5);
    let k1 = f(t, y)?;
    let k2 = f(t + half * h, &axpy(y, h, &[(&k1, half)]))?;
    let k3 = f(t + half * h, &axpy(y, h, &[(&k2, half)]))?;
    let k4 = f(t + h, &axpy(y, h, &[(&k3, T::one())]))?;
    let sixth = T::one() / T::lit(6.0);
    let third = T::one() / T::lit(3.0);
    Ok(axpy(y, h, &[(&k1, sixth), (&k2, third), (&k3, third), (&k4, sixth)]))
}

/// Dormand-Prince 5(4) step: returns the fifth-order solution and the
/// embedded error estimate.
pub fn dopri_step<T: Real, E>(
    f: &mut impl FnMut(T, &[T]) -> Result<Vec<T>, E>,
    t: T,
    y: &[T],
    h: T,
) -> Result<(Vec<T>, Vec<T>), E> {
    let l = T::lit;
    let k1 = f(t, y)?;
    let k2 = f(t + l(1.0 / 5.0) * h, &axpy(y, h, &[(&k1, l(1.0 / 5.0))]))?;
    let k3 = f(t + l(3.0 / 10.0) * h, &axpy(y, h, &[(&k1, l(3.0 / 40.0)), (&k2, l(9.0 / 40.0))]))?;
    let k4 = f(
        t + l(4.0 / 5.0) * h,
        &axpy(y, h, &[(&k1, l(44.0 / 45.0)), (&k2, l(-56.0 / 15.0)), (&k3, l(32.0 / 9.0))]),
    )?;
    let k5 = f(
        t + l(8.0 / 9.0) * h,
        &axpy(
            y,
            h,
            &[
                (&k1, l(19372.0 / 6561.0)),
                (&k2, l(-25360.0 / 2187.0)),
                (&k3, l(64448.0 / 6561.0)),
                (&k4, l(-212.0 / 729.0)),
            ],
        ),
    )?;
    let k6 = f(
        t + h,
        &axpy(
            y,
            h,
            &[
                (&k1, l(9017.0 / 3168.0)),
                (&k2, l(-355.0 / 33.0)),
                (&k3, l(46732.0 / 5247.0)),
                (&k4, l(49.0 / 176.0)),
                (&k5, l(-5103.0 / 18656.0)),
            ],
        ),
    )?;
    let b = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
    let y5 = axpy(
        y,
        h,
        &[(&k1, l(b[0])), (&k3, l(b[2])), (&k4, l(b[3])), (&k5, l(b[4])), (&k6, l(b[5]))],
    );
    let k7 = f(t + h, &y5)?;
    let bs = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];
    let ks: [&[T]; 7] = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
    let bb = [b[0], b[1], b[2], b[3], b[4], b[5], 0.0];
    let mut err = vec![T::zero(); y.len()];
    for (s, k) in ks.iter().enumerate() {
        let c = l(bb[s] - bs[s]) * h;
        for (e, v) in err.iter_mut().zip(k.iter()) {
            *e += c * *v;
        }
    }
    Ok((y5, err))
}

/// Scaled error norm `max_i |err_i| / (atol + rtol·max(|y_i|, |y'_i|))`.
pub fn error_norm<T: Real>(err: &[T], y: &[T], y_new: &[T], rtol: T, atol: T) -> T {
    let mut worst = T::zero();
    for ((e, a), b) in err.iter().zip(y).zip(y_new) {
        let sc = atol + rtol * a.abs().max(b.abs());
        worst = worst.max(e.abs() / sc);
    }
    worst
}
