//! The population-size pgf `F_t(s) = E s^{Z_t}` by three independent routes:
//! the backward Kolmogorov ODE `∂F/∂t = λ[f(F) - F]` (scalar and lifted to
//! the truncated-series ring), and inversion of the master integral equation
//! `π(s, F_t(s)) = λt` with the singularity-extracted integrands.

use crate::error::{Error, Result};
use crate::law::{fixed_points, FixedPoints, OffspringLaw, Regime};
use crate::nabla::nabla;
use crate::ode;
use crate::quad;

/// Default truncation order for distribution computations.
pub const DEFAULT_ORDER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Ode,
    SeriesOde,
    IntegralInversion,
}

/// A scalar `F_t(s)` value with its route and error estimate.
#[derive(Debug, Clone)]
pub struct ScalarEvolve {
    pub t: f64,
    pub s: f64,
    pub value: f64,
    pub error_estimate: f64,
    pub route: Route,
}

/// The distribution `P(Z_t = k)`, `k <= N`, from the series-valued ODE.
#[derive(Debug, Clone)]
pub struct DistEvolve {
    pub t: f64,
    pub probs: Vec<f64>,
    pub error_estimate: f64,
}

impl DistEvolve {
    pub fn order(&self) -> usize {
        self.probs.len() - 1
    }

    /// Evaluate the truncated pgf at `s`.
    pub fn eval(&self, s: f64) -> f64 {
        crate::series::horner(&self.probs, s)
    }

    /// `Σ k P(Z_t = k)` over the truncation.
    pub fn truncated_mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, &p)| k as f64 * p).sum()
    }
}

/// `M_t = e^{λ(m-1)t}`, the population-size mean.
pub fn mean(t: f64, law: &OffspringLaw) -> f64 {
    (law.lambda() * (law.mean() - 1.0) * t).exp()
}

/// Largest admissible evaluation point for the pgf flow.
fn s_max(fp: &FixedPoints) -> f64 {
    match fp.r {
        Some(r) => r.max(1.0),
        None => 1.0,
    }
}

/// `F_t(s)` by adaptive integration of the backward Kolmogorov equation.
pub fn scalar_f(t: f64, s: f64, law: &OffspringLaw, tol: f64) -> Result<ScalarEvolve> {
    if t < 0.0 {
        return Err(Error::Domain("negative time".into()));
    }
    let fp = fixed_points(law);
    if !(0.0..=s_max(&fp)).contains(&s) {
        return Err(Error::Domain(format!("s = {s} outside [0, {}]", s_max(&fp))));
    }
    // Fixed points of the flow stay put; avoids a 0/0 in downstream users.
    if (s - fp.q).abs() < 1e-10 {
        return Ok(ScalarEvolve { t, s, value: fp.q, error_estimate: 0.0, route: Route::Ode });
    }
    if let Some(r) = fp.r {
        if (s - r).abs() < 1e-10 {
            return Ok(ScalarEvolve { t, s, value: r, error_estimate: 0.0, route: Route::Ode });
        }
    }
    let lambda = law.lambda();
    let sol = ode::integrate(
        |y, dy| dy[0] = lambda * (law.pgf(y[0]) - y[0]),
        &[s],
        0.0,
        t,
        tol,
        tol,
    )?;
    Ok(ScalarEvolve {
        t,
        s,
        value: sol.state[0],
        error_estimate: sol.error_estimate,
        route: Route::Ode,
    })
}

/// `1 - F_t(1 - w0)` by integrating the survival variable `w = 1 - F`
/// directly: `w' = -λ w (1 - ∇_1 f(1-w))`. The tail-transform form of the
/// drift never subtracts two values of `f` near 1, so starting points
/// `w0` far below machine epsilon relative to 1 (e.g. `ρ/M_t` for large
/// `t`) stay fully resolved.
pub fn survival_f(t: f64, w0: f64, law: &OffspringLaw, tol: f64) -> Result<ScalarEvolve> {
    if t < 0.0 {
        return Err(Error::Domain("negative time".into()));
    }
    if !(0.0..=1.0).contains(&w0) {
        return Err(Error::Domain(format!("w0 = {w0} outside [0, 1]")));
    }
    let lambda = law.lambda();
    let critical = (law.mean() - 1.0).abs() <= 1e-12;
    let drift = |w: f64| -> f64 {
        if critical {
            // 1 - ∇_1 f = (1-s) ∇_1²f at m = 1; avoids a second cancellation.
            w * nabla(law, &[1.0, 1.0], 1.0 - w)
        } else {
            1.0 - nabla(law, &[1.0], 1.0 - w)
        }
    };
    // Purely relative control: w can travel many orders of magnitude in
    // either direction (sub-epsilon starts that grow, subcritical decay
    // toward zero), so any fixed absolute tolerance would accept
    // arbitrary relative error at one end of the trajectory. w stays
    // strictly positive, so the relative scale never degenerates.
    let atol = 1e-300;
    let sol =
        ode::integrate(|y, dy| dy[0] = -lambda * y[0] * drift(y[0]), &[w0], 0.0, t, atol, tol)?;
    Ok(ScalarEvolve {
        t,
        s: 1.0 - w0,
        value: sol.state[0],
        error_estimate: sol.error_estimate,
        route: Route::Ode,
    })
}

/// The distribution of `Z_t` up to order `n`, by solving the Kolmogorov
/// equation in the ring of truncated power series with `C_0(s) = s`.
pub fn series_f(t: f64, n: usize, law: &OffspringLaw, tol: f64) -> Result<DistEvolve> {
    if t < 0.0 {
        return Err(Error::Domain("negative time".into()));
    }
    if n < 1 {
        return Err(Error::Degenerate("series order must be >= 1".into()));
    }
    let lambda = law.lambda();
    let cutoff = law.tail_cutoff(1e-15, 100_000);
    let outer = law.coefficients(cutoff)?;

    let mut y0 = vec![0.0; n + 1];
    y0[1] = 1.0;
    let sol = ode::integrate(
        |y, dy| {
            series_rhs(&outer, y, dy, lambda);
        },
        &y0,
        0.0,
        t,
        tol,
        tol,
    )?;
    let probs = sol.state.iter().map(|&p| p.max(0.0)).collect();
    Ok(DistEvolve { t, probs, error_estimate: sol.error_estimate })
}

/// `dy = λ (f(y) - y)` in the truncated series ring, `f` given by `outer`.
fn series_rhs(outer: &[f64], y: &[f64], dy: &mut [f64], lambda: f64) {
    let n = y.len() - 1;
    // Horner over the series ring: acc = p_K; acc = acc*y + p_k.
    let mut acc = vec![0.0; n + 1];
    let mut tmp = vec![0.0; n + 1];
    acc[0] = *outer.last().unwrap();
    for &c in outer.iter().rev().skip(1) {
        // tmp = acc * y (truncated), then shift in the constant.
        for v in tmp.iter_mut() {
            *v = 0.0;
        }
        for i in 0..=n {
            let a = acc[i];
            if a == 0.0 {
                continue;
            }
            for j in 0..=n - i {
                tmp[i + j] += a * y[j];
            }
        }
        std::mem::swap(&mut acc, &mut tmp);
        acc[0] += c;
    }
    for i in 0..=n {
        dy[i] = lambda * (acc[i] - y[i]);
    }
}

/// `F_t(s)` by monotone bisection of the singularity-extracted integral
/// equation. Independent of the ODE routes.
pub fn integral_inverse(t: f64, s: f64, law: &OffspringLaw, tol: f64) -> Result<ScalarEvolve> {
    if t < 0.0 {
        return Err(Error::Domain("negative time".into()));
    }
    let fp = fixed_points(law);
    if !(0.0..1.0).contains(&s) && (s - fp.q).abs() >= 1e-10 {
        return Err(Error::Domain(format!("s = {s} outside [0, 1)")));
    }
    if (s - fp.q).abs() < 1e-10 {
        return Ok(ScalarEvolve {
            t,
            s,
            value: fp.q,
            error_estimate: 0.0,
            route: Route::IntegralInversion,
        });
    }
    if t == 0.0 {
        return Ok(ScalarEvolve {
            t,
            s,
            value: s,
            error_estimate: 0.0,
            route: Route::IntegralInversion,
        });
    }
    let lambda_t = law.lambda() * t;
    let q = fp.q;

    // target(F) must equal λt; strictly monotone as F moves from s toward q.
    let target: Box<dyn Fn(f64) -> Result<f64>> = if fp.regime == Regime::Critical {
        // Critical clock: ∫_s^F dx / ((1-x)^2 ∇_1² f(x)).
        Box::new(move |f_val: f64| {
            let (v, _) = quad::integrate(
                |x| {
                    let d2 = nabla(law, &[1.0, 1.0], x);
                    1.0 / ((1.0 - x) * (1.0 - x) * d2)
                },
                s,
                f_val,
                1e-13,
            )?;
            Ok(v)
        })
    } else {
        // Non-critical clock: (1-f'(q)) π(s,F) = ln((q-s)/(q-F)) - ∫_s^F ∇_q²f/(1-∇_q f).
        let fpq = fp.f_prime_q;
        Box::new(move |f_val: f64| {
            let log_term = ((q - s) / (q - f_val)).ln();
            let (corr, _) = quad::integrate(
                |x| nabla(law, &[q, q], x) / (1.0 - nabla(law, &[q], x)),
                s,
                f_val,
                1e-13,
            )?;
            Ok((log_term - corr) / (1.0 - fpq))
        })
    };

    // Bracket: F_t(s) lies strictly between s and q, approaching q.
    let (mut lo, mut hi) = if s < q { (s, q) } else { (q, s) };
    let toward_q = s < q; // target increases toward q on the lower branch
    for _ in 0..200 {
        if (hi - lo).abs() <= tol.max(1e-15) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let val = target(mid)?;
        let go_up = if toward_q { val < lambda_t } else { val > lambda_t };
        if go_up {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let value = 0.5 * (lo + hi);
    Ok(ScalarEvolve {
        t,
        s,
        value,
        error_estimate: (hi - lo).abs(),
        route: Route::IntegralInversion,
    })
}

/// Regularity verdict: `P(Z_t < ∞) = 1` iff `∫^1 dx/(x - f(x)) = ∞`.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub regular: bool,
    pub mean: f64,
    pub note: String,
}

pub fn regularity(law: &OffspringLaw) -> RegularityReport {
    let m = law.mean();
    if m.is_finite() {
        return RegularityReport {
            regular: true,
            mean: m,
            note: "finite offspring mean".into(),
        };
    }
    // m = ∞: probe divergence of ∫_{1-ε}^1 dx/(x - f(x)) on a shrinking ladder.
    let mut increments = Vec::new();
    let mut upper = 1.0 - 0.05;
    for i in 1..=14 {
        let next = 1.0 - 0.05 * 4.0f64.powi(-i);
        let inc = quad::integrate(|x| 1.0 / (x - law.pgf(x)), upper, next, 1e-11)
            .map(|(v, _)| v)
            .unwrap_or(f64::INFINITY);
        increments.push(inc);
        upper = next;
    }
    // Divergent integral keeps contributing; convergent one has geometrically
    // decaying increments.
    let last = increments[increments.len() - 1];
    let prev = increments[increments.len() - 2];
    let regular = !(last.is_finite() && prev.is_finite()) || last > 0.9 * prev;
    RegularityReport {
        regular,
        mean: m,
        note: format!("endpoint increment ratio {:.3e}", last / prev),
    }
}
