//! Dormand–Prince 5(4) with PI step-size control on fixed-size states.

use crate::error::{Error, Result};

// Butcher tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive integrator settings. `rtol`/`atol` enter a scaled RMS error norm.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub max_steps: usize,
    pub safety: f64,
    /// PI stabilisation exponent.
    pub beta: f64,
}

impl Dopri5 {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_min: 1e-12,
            max_steps: 1_000_000,
            safety: 0.9,
            beta: 0.04,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integration<const N: usize> {
    pub y: [f64; N],
    pub steps: usize,
    pub rejected: usize,
    /// Sum of accepted local error estimates (max norm), a crude global bound.
    pub est_error: f64,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

impl Dopri5 {
    fn norm<const N: usize>(&self, err: &[f64; N], y0: &[f64; N], y1: &[f64; N]) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            let sc = self.atol + self.rtol * y0[i].abs().max(y1[i].abs());
            s += (err[i] / sc).powi(2);
        }
        (s / N as f64).sqrt()
    }

    fn initial_step<F, const N: usize>(&self, f: &mut F, t0: f64, y0: &[f64; N], f0: &[f64; N], dir: f64) -> f64
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let zero = [0.0; N];
        let d0 = self.norm(y0, &zero, y0).max(1e-300);
        let d1 = self.norm(f0, &zero, y0).max(1e-300);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(1.0);
        let y1 = axpy(y0, dir * h0, &[(1.0, f0)]);
        let f1 = f(t0 + dir * h0, &y1);
        let mut diff = [0.0; N];
        for i in 0..N {
            diff[i] = f1[i] - f0[i];
        }
        let d2 = self.norm(&diff, &zero, y0) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction). `observe` sees every
    /// accepted step, including the initial state.
    pub fn integrate<F, const N: usize>(
        &self,
        mut f: F,
        t0: f64,
        t1: f64,
        y0: [f64; N],
        mut observe: Option<&mut dyn FnMut(f64, &[f64; N])>,
    ) -> Result<Integration<N>>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if let Some(obs) = observe.as_mut() {
            obs(t0, &y0);
        }
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(Integration { y: y0, steps: 0, rejected: 0, est_error: 0.0 });
        }
        let dir = span.signum();
        let end_eps = 1e-14 * t1.abs().max(1.0);

        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let mut h = self.initial_step(&mut f, t, &y, &k1, dir).min(span.abs());
        let expo = 0.2 - self.beta * 0.75;
        let mut facold: f64 = 1e-4;
        let mut steps = 0;
        let mut rejected = 0;
        let mut est_error = 0.0;
        let mut last_rejected = false;

        while (t1 - t) * dir > end_eps {
            if steps + rejected >= self.max_steps {
                return Err(Error::StepFailure { t, h });
            }
            let remaining = (t1 - t).abs();
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            let hs = dir * h;
            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * hs,
                &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + hs,
                &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = f(t + hs, &y_new);

            let mut err = [0.0; N];
            for i in 0..N {
                err[i] = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let err_norm = self.norm(&err, &y, &y_new);
            if !err_norm.is_finite() {
                h *= 0.1;
                rejected += 1;
                if h < self.h_min {
                    return Err(Error::StepFailure { t, h });
                }
                continue;
            }

            let fac11 = err_norm.powf(expo);
            if err_norm <= 1.0 {
                let mut fac = fac11 / facold.powf(self.beta);
                fac = (fac / self.safety).clamp(0.1, 5.0);
                let mut h_new = h / fac;
                if last_rejected {
                    h_new = h_new.min(h);
                }
                facold = err_norm.max(1e-4);
                t = if last { t1 } else { t + hs };
                y = y_new;
                k1 = k7;
                steps += 1;
                est_error += err.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
                last_rejected = false;
                if let Some(obs) = observe.as_mut() {
                    obs(t, &y);
                }
                h = h_new;
            } else {
                h /= (fac11 / self.safety).min(5.0);
                rejected += 1;
                last_rejected = true;
                if h < self.h_min {
                    return Err(Error::StepFailure { t, h });
                }
            }
        }
        Ok(Integration { y, steps, rejected, est_error })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let sol = Dopri5::with_tol(1e-12)
            .integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, 2.0, [1.0], None)
            .unwrap();
        assert!((sol.y[0] - (-2.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let f = |_: f64, y: &[f64; 2]| [y[1], -y[0]];
        let fwd = Dopri5::with_tol(1e-12).integrate(f, 0.0, 3.0, [1.0, 0.0], None).unwrap();
        let back = Dopri5::with_tol(1e-12).integrate(f, 3.0, 0.0, fwd.y, None).unwrap();
        assert!((fwd.y[0] - 3.0f64.cos()).abs() < 1e-10);
        assert!((back.y[0] - 1.0).abs() < 1e-10 && back.y[1].abs() < 1e-10);
    }

    #[test]
    fn observer_sees_endpoints() {
        let mut ts = Vec::new();
        let mut obs = |t: f64, _: &[f64; 1]| ts.push(t);
        Dopri5::with_tol(1e-8)
            .integrate(|t, _: &[f64; 1]| [t.cos()], 0.0, 1.0, [0.0], Some(&mut obs))
            .unwrap();
        assert_eq!(ts[0], 0.0);
        assert_eq!(*ts.last().unwrap(), 1.0);
    }

    #[test]
    fn stiff_blowup_reports_step_failure() {
        let mut opts = Dopri5::with_tol(1e-10);
        opts.max_steps = 10_000;
        let r = opts.integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, 2.0, [1.0], None);
        assert!(matches!(r, Err(Error::StepFailure { .. })));
    }
}
