//! Limit-law calculators for the three regimes: the subcritical conditional
//! limit (Yaglom-type) pgf and constant `c`, critical survival asymptotics
//! and the exponential/stable Laplace limits, the slowly-varying machinery
//! of the `α = 0` critical boundary case, and the supercritical local limit
//! `P(Z_t = k) ~ a_k γ^t` together with the Laplace transform of the
//! martingale limit `W`.

use crate::error::{Error, Result};
use crate::evolve;
use crate::law::{LawVariant, OffspringLaw, Regime};
use crate::nabla::nabla;
use crate::pifn::PiEvaluator;
use crate::quad;
use crate::series::TruncatedSeries;

/// Limit of the conditional law `Z_t | Z_t > 0` in the subcritical regime.
#[derive(Debug, Clone)]
pub struct SubcriticalLimit {
    /// `c = lim e^{λ(1-m)t} Q_t = e^{-π_1(1)}`; 0 when `π_1(1) = ∞`.
    pub c: f64,
    /// Coefficients of the limit pgf `ψ(s) = 1 - (1-s) e^{π_1(s)}`.
    pub psi_coeffs: TruncatedSeries,
}

/// Supercritical limit data: the local-limit coefficients `a_k` with decay
/// rate `γ`, the conditioned-on-extinction limit pgf, and the Laplace
/// transform `φ(ρ) = E e^{-ρW}` of the martingale limit (including its
/// atom `P(W = 0) = q`).
#[derive(Debug, Clone)]
pub struct SupercriticalLimit {
    /// Per-unit-time decay rate `γ = e^{λ(f'(q)-1)}` of `P(Z_t = k)`.
    pub gamma: f64,
    /// `β = (1-f'(q))/(f'(1)-1)`.
    pub beta: f64,
    /// Coefficients `a_k` of `Σ a_k s^k = q e^{-π_q(q)} + (s-q) e^{π_q(s)-π_q(q)}`.
    pub a_coeffs: TruncatedSeries,
    /// Limit of `E(s^{Z_t} | Z_t > 0, extinction)`; absent when `p_0 = 0`.
    pub extinction_pgf: Option<TruncatedSeries>,
    /// `(ρ, φ(ρ))` solving the fixed-point equation for the transform.
    pub phi_table: Vec<(f64, f64)>,
    /// `P(W = 0) = 1`: the x log x condition fails and `W` degenerates.
    pub w_degenerate: bool,
}

/// Truncated series of `π_a(s) = ∫_0^s ∇_a²f(x)/(1 - ∇_a f(x)) dx` in
/// exact coefficient arithmetic (each output coefficient depends only on
/// same-or-lower-order inputs, so truncation does not feed back).
fn pi_series(law: &OffspringLaw, a: f64, order: usize) -> Result<TruncatedSeries> {
    let work = law.tail_cutoff(1e-16, 200_000).max(order + 2);
    let v = law.to_series(work)?;
    let t1 = v.tail_transform(a)?.series;
    let t2 = t1.tail_transform(a)?.series;
    let denom = t1.scale(-1.0).add_const(1.0);
    let g = t2.div(&denom, order)?;
    Ok(g.integral().truncate(order))
}

/// `1 - (1-s) E(s)` in coefficients, clamping rounding-level negatives.
fn one_minus_one_minus_s_times(e: &TruncatedSeries) -> TruncatedSeries {
    let n = e.order();
    let mut c = vec![0.0; n + 1];
    c[0] = 1.0 - e.coeff(0);
    for k in 1..=n {
        c[k] = e.coeff(k - 1) - e.coeff(k);
    }
    for v in c.iter_mut() {
        if *v < 0.0 && *v > -1e-10 {
            *v = 0.0;
        }
    }
    TruncatedSeries::new(c).expect("non-empty coefficients")
}

/// Subcritical conditional limit: the constant `c` and the limit pgf `ψ`
/// expanded to order `n`.
pub fn subcritical_limit(
    law: &OffspringLaw,
    pe: &PiEvaluator,
    n: usize,
) -> Result<SubcriticalLimit> {
    if !(law.mean() < 1.0) {
        return Err(Error::Domain("subcritical limit needs m < 1".into()));
    }
    let c = if pe.pi_q_finite() { (-pe.pi_q(1.0)?).exp() } else { 0.0 };
    let e = pi_series(law, 1.0, n)?.exp();
    Ok(SubcriticalLimit { c, psi_coeffs: one_minus_one_minus_s_times(&e) })
}

/// Coefficients of `E(s^{Z_t} | Z_t > 0)` to order `n` from the series
/// route; converges to `ψ` as `t` grows (subcritical case).
pub fn conditional_law_at_t(t: f64, law: &OffspringLaw, n: usize) -> Result<TruncatedSeries> {
    let d = evolve::series_f(t, n, law, 1e-13)?;
    let q_t = 1.0 - d.probs[0];
    if q_t < 1e-300 {
        return Err(Error::Underflow(format!("survival probability ~ {q_t} at t = {t}")));
    }
    let mut c: Vec<f64> = d.probs.iter().map(|&p| p / q_t).collect();
    c[0] = 0.0;
    TruncatedSeries::new(c)
}

#[derive(Debug, Clone)]
pub struct CriticalRow {
    pub t: f64,
    /// `Q_t = 1 - F_t(0)` from the survival-variable ODE.
    pub survival: f64,
    /// `1/(bλt)` when the offspring variance is finite.
    pub predicted: Option<f64>,
}

/// Critical survival asymptotics: `Q_t ~ (λt)^{-1/α} 𝓛*(t)`, reducing to
/// `Q_t ~ 1/(bλt)` under a finite variance `f''(1) = 2b`.
#[derive(Debug, Clone)]
pub struct CriticalReport {
    /// `b = f''(1)/2`; `∞` in the stable cases `α < 1`.
    pub b: f64,
    /// Regular-variation index of `1 - f'(s)` at 1 (1 for finite variance).
    pub alpha: f64,
    pub rows: Vec<CriticalRow>,
    /// Least-squares slope of `ln Q_t` against `ln t`; approaches `-1/α`.
    pub fitted_exponent: Option<f64>,
}

impl CriticalReport {
    /// The conditional Laplace limit `lim E(e^{-θ Q_t Z_t} | Z_t > 0)
    /// = 1 - (1 + θ^{-α})^{-1/α}` (exponential limit when `α = 1`).
    pub fn laplace_limit(&self, theta: f64) -> Result<f64> {
        if !(self.alpha > 0.0) {
            return Err(Error::Domain("Laplace limit curve needs alpha > 0".into()));
        }
        if !(theta > 0.0) {
            return Err(Error::Domain("theta must be positive".into()));
        }
        Ok(1.0 - (1.0 + theta.powf(-self.alpha)).powf(-1.0 / self.alpha))
    }
}

/// Survival decay on a time grid for a critical law.
pub fn critical_asymptotics(
    law: &OffspringLaw,
    _pe: &PiEvaluator,
    t_grid: &[f64],
) -> Result<CriticalReport> {
    if (law.mean() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("critical asymptotics need m = 1".into()));
    }
    let (b, alpha) = match law.variant() {
        LawVariant::TailPower { alpha, scale, .. } => {
            if *alpha == 1.0 {
                (*scale, 1.0)
            } else {
                (f64::INFINITY, *alpha)
            }
        }
        _ => (law.derivative(1.0, 2) / 2.0, 1.0),
    };
    let lambda = law.lambda();
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t > 0.0) {
            return Err(Error::Domain("time grid must be positive".into()));
        }
        let survival = evolve::survival_f(t, 1.0, law, 1e-11)?.value;
        let predicted = b.is_finite().then(|| 1.0 / (b * lambda * t));
        rows.push(CriticalRow { t, survival, predicted });
    }
    let fitted_exponent = if rows.len() >= 2 {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.t.ln(), r.survival.ln())).collect();
        Some(least_squares_slope(&pts))
    } else {
        None
    };
    Ok(CriticalReport { b, alpha, rows, fitted_exponent })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

/// The `V(y) = ∫_1^y dz/(z 𝓛(1/z))` machinery of the `α = 0` critical
/// boundary case, where `𝓛(x) = 1 - ∇_1 f(1-x)`.
#[derive(Debug, Clone)]
pub struct A0Report {
    /// `(y, V(y))` on the requested grid.
    pub v_values: Vec<(f64, f64)>,
    /// `V` is increasing along the grid.
    pub increasing: bool,
    /// `(y, V(2y)/V(y))`: tends to 1 (slow variation).
    pub elongation: Vec<(f64, f64)>,
}

/// The predicted limit CDF of the normalized statistic `V(Z_t) 𝓛(Q_t)`
/// conditioned on survival: a standard exponential.
pub fn predicted_limit_cdf(x: f64) -> f64 {
    1.0 - (-x).exp()
}

pub fn theorem_a0_machinery(
    law: &OffspringLaw,
    _pe: &PiEvaluator,
    y_grid: &[f64],
) -> Result<A0Report> {
    match law.variant() {
        LawVariant::TailPower { alpha, .. } if *alpha == 0.0 => {}
        _ => {
            return Err(Error::Domain(
                "theorem-A0 machinery applies to the alpha = 0 critical family".into(),
            ))
        }
    }
    // 𝓛(e^{-u}) after the substitution z = e^u; smooth in u.
    let slow = |u: f64| 1.0 - nabla(law, &[1.0], 1.0 - (-u).exp());
    let v_of = |y: f64| -> Result<f64> {
        let (v, _) = quad::integrate(|u| 1.0 / slow(u), 0.0, y.ln(), 1e-12)?;
        Ok(v)
    };
    let mut v_values = Vec::with_capacity(y_grid.len());
    let mut elongation = Vec::with_capacity(y_grid.len());
    for &y in y_grid {
        if !(y >= 1.0) {
            return Err(Error::Domain("grid points must be >= 1".into()));
        }
        let v = v_of(y)?;
        v_values.push((y, v));
        if v > 0.0 {
            elongation.push((y, v_of(2.0 * y)? / v));
        }
    }
    let increasing = v_values.windows(2).all(|w| w[1].1 > w[0].1);
    Ok(A0Report { v_values, increasing, elongation })
}

fn require_supercritical(law: &OffspringLaw, pe: &PiEvaluator) -> Result<()> {
    if pe.fixed_points().regime != Regime::Supercritical || !law.mean().is_finite() {
        return Err(Error::Domain("needs a supercritical law with 1 < m < ∞".into()));
    }
    Ok(())
}

/// Local limit `P(Z_t = k) ~ a_k γ^t` and the conditioned-on-extinction
/// limit pgf, expanded to order `n`.
pub fn supercritical_local_limit(
    law: &OffspringLaw,
    pe: &PiEvaluator,
    n: usize,
) -> Result<SupercriticalLimit> {
    require_supercritical(law, pe)?;
    let fp = pe.fixed_points();
    let q = fp.q;
    let beta = pe.beta().expect("supercritical law has both roots");
    let pi_q_q = pe.pi_q(q)?;
    let pi = pi_series(law, q, n)?;
    // e^{π_q(s) - π_q(q)} with π_q(q) by quadrature.
    let e = pi.add_const(-pi_q_q).exp();
    // a_0 = 0; a_k = e_{k-1} - q e_k.
    let mut a = vec![0.0; n + 1];
    for k in 1..=n {
        a[k] = e.coeff(k - 1) - q * e.coeff(k);
    }
    let extinction_pgf = if q > 0.0 {
        // 1 - (1-s) e^{π_q(sq)}: scale the series argument by q first.
        let scaled: Vec<f64> =
            pi.coeffs().iter().enumerate().map(|(k, &c)| c * q.powi(k as i32)).collect();
        let e2 = TruncatedSeries::new(scaled)?.exp();
        Some(one_minus_one_minus_s_times(&e2))
    } else {
        None
    };
    Ok(SupercriticalLimit {
        gamma: fp.gamma(),
        beta,
        a_coeffs: TruncatedSeries::new(a)?,
        extinction_pgf,
        phi_table: Vec::new(),
        w_degenerate: false,
    })
}

/// Solve the fixed-point equation for `φ(ρ)`, the normalized Laplace
/// transform of the martingale limit `W`, on a grid of `ρ` values. When
/// the x log x condition fails the transform degenerates (`P(W = 0) = 1`)
/// and the table holds `φ ≡ 1`.
pub fn martingale_limit_transform(
    law: &OffspringLaw,
    pe: &PiEvaluator,
    rho_grid: &[f64],
    tol: f64,
) -> Result<SupercriticalLimit> {
    require_supercritical(law, pe)?;
    let fp = pe.fixed_points();
    let q = fp.q;
    let beta = pe.beta().expect("supercritical law has both roots");
    let degenerate = !pe.pi_rq_finite();
    let mut phi_table = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        if !(rho > 0.0) {
            return Err(Error::Domain("rho grid must be positive".into()));
        }
        if degenerate {
            phi_table.push((rho, 1.0));
            continue;
        }
        phi_table.push((rho, solve_phi(law, q, beta, rho, tol)?));
    }
    Ok(SupercriticalLimit {
        gamma: fp.gamma(),
        beta,
        a_coeffs: TruncatedSeries::zero(0),
        extinction_pgf: None,
        phi_table,
        w_degenerate: degenerate,
    })
}

/// Right-hand side of the fixed-point equation:
/// `G(φ) = q + (1-q)((1-φ)/ρ)^β exp{∫_φ^1 (β∇_1²∇_qf - ∇_1∇_q²f)/∇_1∇_qf}`.
fn phi_map(law: &OffspringLaw, q: f64, beta: f64, rho: f64, phi: f64) -> Result<f64> {
    let (corr, _) = quad::integrate(
        |x| {
            (beta * nabla(law, &[q, 1.0, 1.0], x) - nabla(law, &[q, q, 1.0], x))
                / nabla(law, &[q, 1.0], x)
        },
        phi,
        1.0,
        1e-12,
    )?;
    Ok(q + (1.0 - q) * ((1.0 - phi) / rho).powf(beta) * corr.exp())
}

fn solve_phi(law: &OffspringLaw, q: f64, beta: f64, rho: f64, tol: f64) -> Result<f64> {
    let clamp = |x: f64| x.clamp(1e-12, 1.0 - 1e-12);
    // Damped iteration; the map can oscillate for small rho.
    let mut phi = 0.5;
    for _ in 0..200 {
        let next = clamp(0.5 * phi + 0.5 * phi_map(law, q, beta, rho, phi)?);
        if (next - phi).abs() <= tol {
            return Ok(next);
        }
        phi = next;
    }
    // Bisection on the monotone residual φ - G(φ): negative at 0+, positive
    // at 1- (G(1-) = q < 1).
    let mut lo = 1e-12;
    let mut hi = 1.0 - 1e-12;
    if phi_map(law, q, beta, rho, lo)? - lo < 0.0 || phi_map(law, q, beta, rho, hi)? - hi > 0.0 {
        return Err(Error::Convergence(format!(
            "fixed-point residual does not bracket a root at rho = {rho}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let res = mid - phi_map(law, q, beta, rho, mid)?;
        if res.abs() <= tol || hi - lo <= tol {
            return Ok(mid);
        }
        if res < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence(format!("phi iteration stalled at rho = {rho}")))
}
