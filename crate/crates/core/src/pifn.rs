//! The π-function family: integrals of `1/(f(x) - x)` and their
//! singularity-extracted companions `π_q`, `π_r`, `π_rq`, `π_qr`, the
//! coupling constant `β`, the slowly varying exponential factors, and
//! residual validators for the refined integral equations.

use crate::error::{Error, Result};
use crate::evolve;
use crate::law::{fixed_points, FixedPoints, OffspringLaw, Regime};
use crate::nabla::nabla;
use crate::quad;
use crate::series::{xlogx_diagnostic, Verdict};

/// Roots within this distance are treated as coinciding with a singularity
/// and the raw `1/(f(x)-x)` integrand is replaced by a decomposed form.
const ROOT_GUARD: f64 = 1e-8;

const QUAD_TOL: f64 = 1e-12;

/// Precomputed evaluation context for the π functions of one law.
#[derive(Debug, Clone)]
pub struct PiEvaluator {
    law: OffspringLaw,
    fp: FixedPoints,
    beta: Option<f64>,
    xlogx_q: Option<Verdict>,
    xlogx_r: Option<Verdict>,
}

impl PiEvaluator {
    pub fn new(law: &OffspringLaw) -> Result<Self> {
        let fp = fixed_points(law);
        let beta = fp.beta(law);
        let budget = law.tail_cutoff(1e-15, 60_000).max(64);
        let (xlogx_q, xlogx_r) = match law.to_series(budget) {
            Ok(series) => {
                let at_q = xlogx_diagnostic(&series, fp.q, 2, budget).ok().map(|r| r.verdict());
                let at_r = fp
                    .r
                    .and_then(|r| xlogx_diagnostic(&series, r, 2, budget).ok())
                    .map(|r| r.verdict());
                (at_q, at_r)
            }
            Err(_) => (None, None),
        };
        Ok(Self { law: law.clone(), fp, beta, xlogx_q, xlogx_r })
    }

    pub fn law(&self) -> &OffspringLaw {
        &self.law
    }

    pub fn fixed_points(&self) -> &FixedPoints {
        &self.fp
    }

    /// `β = (1-f'(q))/(f'(r)-1)`; absent in the critical regime.
    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    pub fn xlogx_at_q(&self) -> Option<Verdict> {
        self.xlogx_q
    }

    pub fn xlogx_at_r(&self) -> Option<Verdict> {
        self.xlogx_r
    }

    /// `π_q(q) < ∞`: automatic when `r < ∞`, otherwise the `x log x`
    /// condition at `a = q`.
    pub fn pi_q_finite(&self) -> bool {
        if self.fp.r.is_some() {
            return true;
        }
        matches!(self.xlogx_q, Some(Verdict::Converging))
    }

    /// `π_rq(r) < ∞` iff the `x log x` condition holds at `a = r`.
    pub fn pi_rq_finite(&self) -> bool {
        matches!(self.xlogx_r, Some(Verdict::Converging))
    }

    fn check_not_critical(&self) -> Result<()> {
        if self.fp.regime == Regime::Critical {
            return Err(Error::Domain("operation undefined for a critical law (f'(q) = 1)".into()));
        }
        Ok(())
    }

    fn upper_limit(&self) -> f64 {
        let radius = self.law.radius().unwrap_or(f64::INFINITY);
        self.fp.r.unwrap_or(f64::INFINITY).min(radius)
    }

    /// Raw `π(s_1, s_2) = ∫ dx/(f(x)-x)` on one side of `q`, switching to
    /// the decomposed forms near the roots.
    pub fn pi_plain(&self, s1: f64, s2: f64) -> Result<f64> {
        let q = self.fp.q;
        if s1 == s2 {
            return Ok(0.0);
        }
        let lower = s1 <= s2 && s2 < q && s1 >= 0.0;
        let upper = s2 <= s1 && s2 > q && s1 < self.upper_limit();
        if !lower && !upper {
            return Err(Error::Domain(format!(
                "(s1, s2) = ({s1}, {s2}) straddles q = {q} or leaves the root interval"
            )));
        }
        let near_root = (s1 - q).abs() < ROOT_GUARD
            || (s2 - q).abs() < ROOT_GUARD
            || self
                .fp
                .r
                .map(|r| (s1 - r).abs() < ROOT_GUARD || (s2 - r).abs() < ROOT_GUARD)
                .unwrap_or(false);
        if !near_root {
            let law = &self.law;
            let (v, _) = quad::integrate(|x| 1.0 / (law.pgf(x) - x), s1, s2, QUAD_TOL)?;
            return Ok(v);
        }
        // Singularity-extracted substitutes.
        if self.fp.regime == Regime::Critical {
            let law = &self.law;
            let (v, _) = quad::integrate(
                |x| 1.0 / ((q - x) * (q - x) * nabla(law, &[q, q], x)),
                s1,
                s2,
                QUAD_TOL,
            )?;
            return Ok(v);
        }
        let log_term = ((q - s1) / (q - s2)).ln();
        let corr = self.pi_q_segment(s1, s2)?;
        Ok((log_term - corr) / (1.0 - self.fp.f_prime_q))
    }

    fn pi_q_segment(&self, a: f64, b: f64) -> Result<f64> {
        let law = &self.law;
        let q = self.fp.q;
        let (v, _) = quad::integrate(
            |x| nabla(law, &[q, q], x) / (1.0 - nabla(law, &[q], x)),
            a,
            b,
            QUAD_TOL,
        )?;
        Ok(v)
    }

    /// `π_q(s) = ∫_0^s ∇_q²f(x)/(1-∇_qf(x)) dx`; a generating function.
    pub fn pi_q(&self, s: f64) -> Result<f64> {
        self.check_not_critical()?;
        let hi = self.upper_limit();
        if !(0.0..=hi).contains(&s) || (s >= hi && s != self.fp.q) {
            return Err(Error::Domain(format!("s = {s} outside [0, min(r, R)) = [0, {hi})")));
        }
        self.pi_q_segment(0.0, s)
    }

    /// `π_r(s_1, s_2) = ∫ ∇_r²f(x)/(∇_rf(x)-1) dx` on `(q, r)`.
    pub fn pi_r(&self, s1: f64, s2: f64) -> Result<f64> {
        let r = self
            .fp
            .r
            .ok_or_else(|| Error::Domain("π_r needs a finite second root".into()))?;
        let q = self.fp.q;
        if !(q < s1 && s1 <= s2 && s2 < r) && s1 != s2 {
            return Err(Error::Domain(format!("({s1}, {s2}) outside (q, r) = ({q}, {r})")));
        }
        let law = &self.law;
        let (v, _) = quad::integrate(
            |x| nabla(law, &[r, r], x) / (nabla(law, &[r], x) - 1.0),
            s1,
            s2,
            QUAD_TOL,
        )?;
        Ok(v)
    }

    /// `(π_rq(s), π_qr(s))`, the third-order extracted integrals. `π_qr(r)`
    /// is always finite; `π_rq(r)` is infinite when the `x log x` condition
    /// fails at `a = r` and is then reported as `∞`.
    pub fn pi_rq_qr(&self, s: f64) -> Result<(f64, f64)> {
        let r = self
            .fp
            .r
            .ok_or_else(|| Error::Domain("π_rq/π_qr need a finite second root".into()))?;
        let q = self.fp.q;
        let beta = self.beta.expect("beta exists when both roots do");
        if !(0.0..=r).contains(&s) {
            return Err(Error::Domain(format!("s = {s} outside [0, r]")));
        }
        let law = &self.law;
        let rq = quad::integrate(
            |x| nabla(law, &[q, r, r], x) / nabla(law, &[q, r], x),
            0.0,
            s,
            QUAD_TOL,
        );
        let pi_rq = match rq {
            Ok((v, _)) => beta * v,
            Err(Error::Convergence(_)) if !self.pi_rq_finite() => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let (v_qr, _) = quad::integrate(
            |x| nabla(law, &[q, q, r], x) / nabla(law, &[q, r], x),
            0.0,
            s,
            QUAD_TOL,
        )?;
        Ok((pi_rq, v_qr))
    }

    /// Absolute residual of the regime-appropriate refined integral equation
    /// at `(t, s)`, with `F_t(s)` supplied by the ODE route.
    pub fn theorem_main_residual(&self, t: f64, s: f64) -> Result<f64> {
        if t < 0.0 || !(0.0..1.0).contains(&s) {
            return Err(Error::Domain("need t >= 0 and s in [0, 1)".into()));
        }
        let law = &self.law;
        let lambda = law.lambda();
        let f_ts = evolve::scalar_f(t, s, law, 1e-13)?.value;
        let q = self.fp.q;

        match self.fp.regime {
            Regime::Critical => {
                let (lhs, _) = quad::integrate(
                    |x| 1.0 / ((1.0 - x) * (1.0 - x) * nabla(law, &[1.0, 1.0], x)),
                    s,
                    f_ts,
                    QUAD_TOL,
                )?;
                Ok((lhs - lambda * t).abs())
            }
            Regime::Subcritical | Regime::ExtendableSubcritical => {
                let nabla_q_f = (f_ts - q) / (s - q);
                let corr = self.pi_q_segment(s, f_ts)?;
                let rhs = (self.fp.gamma_exponent * t).exp() * (-corr).exp();
                Ok((nabla_q_f - rhs).abs())
            }
            Regime::Supercritical => {
                let beta = self.beta.expect("supercritical has both roots");
                let nabla_q_f = if (s - q).abs() < 1e-9 {
                    // derivative convention at the anchor
                    return Ok(0.0);
                } else {
                    (f_ts - q) / (s - q)
                };
                let nabla_1_f = (f_ts - 1.0) / (s - 1.0);
                let (corr, _) = quad::integrate(
                    |x| {
                        (nabla(law, &[q, q, 1.0], x) - beta * nabla(law, &[q, 1.0, 1.0], x))
                            / nabla(law, &[q, 1.0], x)
                    },
                    s,
                    f_ts,
                    QUAD_TOL,
                )?;
                let rhs =
                    (self.fp.gamma_exponent * t).exp() * nabla_1_f.powf(beta) * corr.exp();
                Ok((nabla_q_f - rhs).abs())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlowFactor {
    /// `𝓛_q(x) = e^{π_q(q - x)}`.
    Lq,
    /// `𝓛_rq(x) = e^{π_rq(r - x)}`.
    Lrq,
}

#[derive(Debug, Clone)]
pub struct ProfilePoint {
    pub x: f64,
    pub value: f64,
    /// `𝓛(2x)/𝓛(x)`; tends to 1 as `x → 0` (slow variation).
    pub elongation_ratio: f64,
}

/// Profile of a slowly varying exponential factor on a grid of offsets
/// from the corresponding root.
pub fn slowly_varying_profile(
    pe: &PiEvaluator,
    which: SlowFactor,
    grid: &[f64],
) -> Result<Vec<ProfilePoint>> {
    let eval = |x: f64| -> Result<f64> {
        match which {
            SlowFactor::Lq => {
                let q = pe.fixed_points().q;
                Ok(pe.pi_q(q - x)?.exp())
            }
            SlowFactor::Lrq => {
                let r = pe
                    .fixed_points()
                    .r
                    .ok_or_else(|| Error::Domain("𝓛_rq needs a finite r".into()))?;
                let (rq, _) = pe.pi_rq_qr(r - x)?;
                Ok(rq.exp())
            }
        }
    };
    let mut out = Vec::with_capacity(grid.len());
    for &x in grid {
        if !(x > 0.0) {
            return Err(Error::Domain("grid offsets must be positive".into()));
        }
        let value = eval(x)?;
        let doubled = eval(2.0 * x)?;
        out.push(ProfilePoint { x, value, elongation_ratio: doubled / value });
    }
    Ok(out)
}
