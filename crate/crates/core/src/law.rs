//! Offspring-law representations, moments, fixed points of `f(x) = x`,
//! regime classification, the conditioned (dual / success) laws, and the
//! linear-fractional closed forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{horner, AnchorList, TruncatedSeries};

/// Input schema for an offspring law, as consumed by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum LawSpec {
    Explicit {
        probs: Vec<f64>,
        lambda: f64,
    },
    LinearFractional {
        p0: f64,
        p: f64,
        lambda: f64,
    },
    TailPower {
        alpha: f64,
        scale: f64,
        cutoff: usize,
        lambda: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawVariant {
    /// Explicit coefficients `p_0..p_K`.
    Explicit(Vec<f64>),
    /// `f(s) = p0 + (1-p0) p s / (1 - (1-p) s)`.
    LinearFractional { p0: f64, p: f64 },
    /// Regularly varying family around `s = 1`:
    /// `alpha in (0,1]`: `f(s) = s + scale (1-s)^{1+alpha}` (critical);
    /// `alpha = 0`: `f(s) = s + (1-s) scale / ln(e/(1-s))` (critical, heavy);
    /// `alpha in (-1,0)`: `f(s) = 1 - (1-s)^{1+alpha}` (supercritical, `m = ∞`).
    TailPower { alpha: f64, scale: f64, cutoff: usize },
}

/// A validated offspring distribution together with the lifetime rate `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    variant: LawVariant,
    lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
    ExtendableSubcritical,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
            Regime::ExtendableSubcritical => "extendable-subcritical",
        };
        f.write_str(s)
    }
}

/// The roots of `f(x) = x` and the derived regime data.
#[derive(Debug, Clone)]
pub struct FixedPoints {
    /// Smallest non-negative root; the extinction probability.
    pub q: f64,
    /// Second root when it exists and is finite.
    pub r: Option<f64>,
    pub regime: Regime,
    /// Offspring mean `m = f'(1)`.
    pub mean: f64,
    pub f_prime_q: f64,
    /// `λ (f'(q) - 1)`, so that `F_t'(q) = e^{γ_exp · t}`.
    pub gamma_exponent: f64,
}

impl FixedPoints {
    /// `γ = e^{λ(f'(q)-1)}`, the per-unit-time decay of `F_t'(q)`.
    pub fn gamma(&self) -> f64 {
        self.gamma_exponent.exp()
    }

    /// `β = (1 - f'(q)) / (f'(r) - 1)` when both roots exist.
    pub fn beta(&self, law: &OffspringLaw) -> Option<f64> {
        let r = self.r?;
        let fpr = law.derivative(r, 1);
        Some((1.0 - self.f_prime_q) / (fpr - 1.0))
    }
}

const SUM_TOL: f64 = 1e-9;
const CRITICAL_TOL: f64 = 1e-12;
/// Cap on the search for the second root of explicit laws; beyond this
/// the root is reported as absent (`r = ∞`).
const R_SEARCH_CAP: f64 = 1e6;

impl OffspringLaw {
    /// Validate a spec and build the law. Explicit coefficient vectors off
    /// normalization by at most `1e-9` are renormalized, worse are rejected.
    pub fn from_spec(spec: &LawSpec) -> Result<Self> {
        match spec {
            LawSpec::Explicit { probs, lambda } => Self::explicit(probs.clone(), *lambda),
            LawSpec::LinearFractional { p0, p, lambda } => {
                Self::linear_fractional(*p0, *p, *lambda)
            }
            LawSpec::TailPower { alpha, scale, cutoff, lambda } => {
                Self::tail_power(*alpha, *scale, *cutoff, *lambda)
            }
        }
    }

    pub fn explicit(mut probs: Vec<f64>, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if probs.is_empty() {
            return Err(Error::InvalidLaw("empty coefficient vector".into()));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidLaw("negative or non-finite coefficient".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidLaw(format!("coefficients sum to {sum}, not 1")));
        }
        if sum != 1.0 {
            for p in probs.iter_mut() {
                *p /= sum;
            }
        }
        if probs.get(1).copied().unwrap_or(0.0) >= 1.0 - 1e-15 {
            return Err(Error::InvalidLaw("p_1 = 1 is excluded".into()));
        }
        Ok(Self { variant: LawVariant::Explicit(probs), lambda })
    }

    pub fn linear_fractional(p0: f64, p: f64, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if !(0.0..1.0).contains(&p0) {
            return Err(Error::InvalidLaw(format!("p0 = {p0} outside [0, 1)")));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidLaw(format!("p = {p} outside (0, 1]")));
        }
        // p_1 = (1-p0) p = 1 would force p0 = 0, p = 1, the identity law.
        if p0 == 0.0 && p == 1.0 {
            return Err(Error::InvalidLaw("p_1 = 1 is excluded".into()));
        }
        Ok(Self { variant: LawVariant::LinearFractional { p0, p }, lambda })
    }

    pub fn tail_power(alpha: f64, scale: f64, cutoff: usize, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if !alpha.is_finite() || alpha <= -1.0 || alpha > 1.0 {
            return Err(Error::InvalidLaw(format!("alpha = {alpha} outside (-1, 1]")));
        }
        if alpha < 0.0 {
            if (scale - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidLaw(
                    "alpha < 0 requires scale = 1 (f(s) = 1 - (1-s)^{1+alpha})".into(),
                ));
            }
        } else {
            if !(scale > 0.0) {
                return Err(Error::InvalidLaw("scale must be positive".into()));
            }
            if alpha > 0.0 && scale > 1.0 / (1.0 + alpha) + 1e-12 {
                return Err(Error::InvalidLaw(format!(
                    "scale = {scale} makes p_1 negative (needs scale <= 1/(1+alpha))"
                )));
            }
            if alpha == 0.0 && scale > 1.0 {
                return Err(Error::InvalidLaw("alpha = 0 requires scale <= 1".into()));
            }
        }
        Ok(Self { variant: LawVariant::TailPower { alpha, scale, cutoff }, lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn variant(&self) -> &LawVariant {
        &self.variant
    }

    /// Radius of convergence of `f` (None = infinite).
    pub fn radius(&self) -> Option<f64> {
        match &self.variant {
            LawVariant::Explicit(_) => None,
            LawVariant::LinearFractional { p, .. } => {
                if *p < 1.0 {
                    Some(1.0 / (1.0 - p))
                } else {
                    None
                }
            }
            LawVariant::TailPower { .. } => Some(1.0),
        }
    }

    /// The probability generating function `f(s)`.
    pub fn pgf(&self, s: f64) -> f64 {
        match &self.variant {
            LawVariant::Explicit(p) => horner(p, s),
            LawVariant::LinearFractional { p0, p } => {
                p0 + (1.0 - p0) * p * s / (1.0 - (1.0 - p) * s)
            }
            LawVariant::TailPower { alpha, scale, .. } => {
                let x = 1.0 - s;
                if *alpha > 0.0 {
                    s + scale * x.powf(1.0 + alpha)
                } else if *alpha == 0.0 {
                    if x <= 0.0 {
                        s
                    } else {
                        s + x * scale / (1.0 - x.ln())
                    }
                } else {
                    1.0 - x.powf(1.0 + alpha)
                }
            }
        }
    }

    /// `f^{(order)}(s)`; `order = 0` is `f` itself.
    pub fn derivative(&self, s: f64, order: usize) -> f64 {
        if order == 0 {
            return self.pgf(s);
        }
        match &self.variant {
            LawVariant::Explicit(p) => {
                let mut acc = 0.0;
                for (k, &pk) in p.iter().enumerate().skip(order) {
                    let mut fall = 1.0;
                    for j in 0..order {
                        fall *= (k - j) as f64;
                    }
                    acc += pk * fall * s.powi((k - order) as i32);
                }
                acc
            }
            LawVariant::LinearFractional { p0, p } => {
                let c = 1.0 - p;
                let fact: f64 = (1..=order).map(|i| i as f64).product();
                let cpow = if order == 1 { 1.0 } else { c.powi(order as i32 - 1) };
                (1.0 - p0) * p * fact * cpow / (1.0 - c * s).powi(order as i32 + 1)
            }
            LawVariant::TailPower { alpha, scale, .. } => {
                let x = 1.0 - s;
                if *alpha >= 0.0 && *alpha != 0.0 {
                    let b = 1.0 + alpha;
                    let mut fall = 1.0;
                    for j in 0..order {
                        fall *= b - j as f64;
                    }
                    let lead = if order == 1 { 1.0 } else { 0.0 };
                    lead + scale * sign(order) * fall * x.powf(b - order as f64)
                } else if *alpha == 0.0 {
                    // Only the first two derivatives are needed for this family.
                    let l = 1.0 - x.ln();
                    match order {
                        1 => 1.0 - scale / l + scale / (l * l),
                        2 => scale * (1.0 / (x * l * l) - 2.0 / (x * l * l * l)),
                        _ => panic!("derivative order {order} unsupported for alpha = 0"),
                    }
                } else {
                    let b = 1.0 + alpha;
                    let mut fall = 1.0;
                    for j in 0..order {
                        fall *= b - j as f64;
                    }
                    -sign(order) * fall * x.powf(b - order as f64)
                }
            }
        }
    }

    /// Offspring mean `m = f'(1)` (`∞` for the supercritical tail-power family).
    pub fn mean(&self) -> f64 {
        match &self.variant {
            LawVariant::Explicit(p) => {
                p.iter().enumerate().map(|(k, &pk)| k as f64 * pk).sum()
            }
            LawVariant::LinearFractional { p0, p } => (1.0 - p0) / p,
            LawVariant::TailPower { alpha, .. } => {
                if *alpha < 0.0 {
                    f64::INFINITY
                } else {
                    1.0
                }
            }
        }
    }

    /// Coefficients `p_0..p_n`. For the linear-fractional and tail-power
    /// variants these are the exact expansion coefficients (tail-power ones
    /// are zeroed beyond the configured cutoff).
    pub fn coefficients(&self, n: usize) -> Result<Vec<f64>> {
        match &self.variant {
            LawVariant::Explicit(p) => {
                let mut out = p.clone();
                out.resize(n + 1, 0.0);
                out.truncate(n + 1);
                Ok(out)
            }
            LawVariant::LinearFractional { p0, p } => {
                let mut out = Vec::with_capacity(n + 1);
                out.push(*p0);
                let mut geo = (1.0 - p0) * p;
                for _ in 1..=n {
                    out.push(geo);
                    geo *= 1.0 - p;
                }
                Ok(out)
            }
            LawVariant::TailPower { alpha, scale, cutoff } => {
                if *alpha == 0.0 {
                    return Err(Error::Domain(
                        "no closed-form coefficients for the alpha = 0 family".into(),
                    ));
                }
                let b = 1.0 + alpha;
                let mut out = vec![0.0; n + 1];
                if *alpha > 0.0 {
                    out[0] = *scale;
                    if n >= 1 {
                        out[1] = 1.0 - scale * b;
                    }
                    // p_k = scale (-1)^k C(b, k), k >= 2; positive for alpha in (0,1).
                    let mut c = scale * b * *alpha / 2.0;
                    for k in 2..=n.min(*cutoff) {
                        out[k] = c;
                        c *= (k as f64 - b) / (k as f64 + 1.0);
                    }
                } else {
                    // f = 1 - (1-s)^b, b in (0,1): p_k = (-1)^{k+1} C(b, k).
                    let mut c = b;
                    for k in 1..=n.min(*cutoff) {
                        out[k] = c;
                        c *= (k as f64 - b) / (k as f64 + 1.0);
                    }
                }
                Ok(out)
            }
        }
    }

    /// The truncated pgf as a series, radius hint attached.
    pub fn to_series(&self, n: usize) -> Result<TruncatedSeries> {
        TruncatedSeries::with_radius_hint(self.coefficients(n)?, self.radius())
    }

    /// A coefficient order at which the dropped pgf tail mass is below `tol`
    /// (capped at `max`).
    pub fn tail_cutoff(&self, tol: f64, max: usize) -> usize {
        match &self.variant {
            LawVariant::Explicit(p) => (p.len() - 1).min(max),
            LawVariant::LinearFractional { p0, p } => {
                if *p >= 1.0 {
                    return 1;
                }
                // tail mass past K is (1-p0)(1-p)^K
                let k = ((tol / (1.0 - p0)).ln() / (1.0 - p).ln()).ceil();
                (k.max(2.0) as usize).min(max)
            }
            LawVariant::TailPower { cutoff, .. } => (*cutoff).min(max),
        }
    }
}

fn sign(order: usize) -> f64 {
    if order % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidLaw(format!("lambda = {lambda} must be positive")));
    }
    Ok(())
}

/// Locate the fixed points of `f(x) = x` and classify the regime.
///
/// `q = 1` is asserted exactly for `m <= 1` and `r = 1` exactly for `m > 1`;
/// the remaining root is found by bracketed bisection polished with Newton.
pub fn fixed_points(law: &OffspringLaw) -> FixedPoints {
    let m = law.mean();
    let lambda = law.lambda();

    if (m - 1.0).abs() <= CRITICAL_TOL {
        return FixedPoints {
            q: 1.0,
            r: None,
            regime: Regime::Critical,
            mean: m,
            f_prime_q: 1.0,
            gamma_exponent: 0.0,
        };
    }

    if m < 1.0 {
        let q = 1.0;
        let r = find_second_root_above_one(law);
        let regime = if r.is_some() {
            Regime::ExtendableSubcritical
        } else {
            Regime::Subcritical
        };
        let fpq = m;
        return FixedPoints {
            q,
            r,
            regime,
            mean: m,
            f_prime_q: fpq,
            gamma_exponent: lambda * (fpq - 1.0),
        };
    }

    // Supercritical: q in [0, 1), r = 1 exactly.
    let q = if law.pgf(0.0) == 0.0 {
        0.0
    } else {
        // Bracket below 1: f(x) - x < 0 close enough to 1 since f'(1) > 1.
        let mut hi = 0.5;
        while law.pgf(hi) - hi > 0.0 {
            hi = 0.5 * (hi + 1.0);
            if 1.0 - hi < 1e-14 {
                break;
            }
        }
        refine_root(law, 0.0, hi)
    };
    let fpq = law.derivative(q, 1);
    FixedPoints {
        q,
        r: Some(1.0),
        regime: Regime::Supercritical,
        mean: m,
        f_prime_q: fpq,
        gamma_exponent: lambda * (fpq - 1.0),
    }
}

/// For `m < 1`, search `(1, cap]` for the second root of `f(x) = x`.
fn find_second_root_above_one(law: &OffspringLaw) -> Option<f64> {
    if let LawVariant::LinearFractional { p0, p } = law.variant() {
        if *p < 1.0 {
            let r = p0 / (1.0 - p);
            return if r > 1.0 { Some(r) } else { None };
        }
        return None;
    }
    let cap = match law.radius() {
        Some(rad) => rad.min(R_SEARCH_CAP),
        None => R_SEARCH_CAP,
    };
    // f(x) - x is negative just above 1; scan for a sign change.
    let mut lo = 1.0 + 1e-9;
    if law.pgf(lo) - lo >= 0.0 {
        return None;
    }
    let mut hi = 1.5;
    while hi < cap {
        if !(law.pgf(hi) - hi).is_finite() {
            return None;
        }
        if law.pgf(hi) - hi > 0.0 {
            return Some(refine_root(law, lo, hi));
        }
        lo = hi;
        hi *= 2.0;
    }
    None
}

/// Bisection to `1e-14` bracket width, then Newton polish.
fn refine_root(law: &OffspringLaw, mut lo: f64, mut hi: f64) -> f64 {
    let g = |x: f64| law.pgf(x) - x;
    debug_assert!(g(lo) >= 0.0 && g(hi) <= 0.0 || g(lo) <= 0.0 && g(hi) >= 0.0);
    let sign_lo = g(lo) >= 0.0;
    for _ in 0..200 {
        if (hi - lo).abs() < 1e-14 * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if (g(mid) >= 0.0) == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let d = law.derivative(x, 1) - 1.0;
        if d.abs() < 1e-14 {
            break;
        }
        let step = g(x) / d;
        let next = x - step;
        if next >= lo.min(hi) && next <= lo.max(hi) {
            x = next;
        }
    }
    x
}

/// The dual reproduction law `g(s) = f(sq)/q` of a supercritical process:
/// the offspring law conditioned on eventual extinction. Subcritical, with
/// mean `g'(1) = f'(q)`.
pub fn dual_law(law: &OffspringLaw) -> Result<OffspringLaw> {
    let fp = fixed_points(law);
    if fp.regime != Regime::Supercritical {
        return Err(Error::Domain("dual law needs a supercritical process".into()));
    }
    if fp.q == 0.0 {
        return Err(Error::Domain("q = 0: no extinction component to condition on".into()));
    }
    match law.variant() {
        LawVariant::LinearFractional { p0, p } => {
            // f(sq)/q is again linear-fractional with parameters (1-p, 1-p0).
            OffspringLaw::linear_fractional(1.0 - p, 1.0 - p0, law.lambda())
        }
        LawVariant::Explicit(probs) => {
            let q = fp.q;
            let g: Vec<f64> = probs
                .iter()
                .enumerate()
                .map(|(k, &pk)| pk * q.powi(k as i32 - 1))
                .collect();
            OffspringLaw::explicit(g, law.lambda())
        }
        LawVariant::TailPower { .. } => Err(Error::Domain(
            "dual law unsupported for the tail-power family".into(),
        )),
    }
}

/// The success law `h(s) = (f(s(1-q)+q) - q)/(1-q)`: offspring law of the
/// surviving lineage skeleton. `h(0) = 0` and `h'(1) = f'(1)`.
pub fn success_law(law: &OffspringLaw) -> Result<OffspringLaw> {
    let fp = fixed_points(law);
    if fp.q >= 1.0 {
        return Err(Error::Domain("success law needs q < 1".into()));
    }
    if fp.q == 0.0 {
        return Ok(law.clone());
    }
    match law.variant() {
        LawVariant::LinearFractional { p0, p } => {
            // Pure linear-fractional with h_0 = 0 and success parameter p/(1-p0).
            OffspringLaw::linear_fractional(0.0, p / (1.0 - p0), law.lambda())
        }
        LawVariant::Explicit(probs) => {
            let q = fp.q;
            let mut h = vec![0.0; probs.len()];
            // Coefficient of s^j in f(q + (1-q)s): binomial remix.
            for (k, &pk) in probs.iter().enumerate() {
                if pk == 0.0 {
                    continue;
                }
                let mut term = pk * q.powi(k as i32); // j = 0 term
                h[0] += term;
                for j in 1..=k {
                    // C(k,j)(1-q)^j q^{k-j} from the previous j.
                    term *= (k - j + 1) as f64 / j as f64 * (1.0 - q) / q;
                    h[j] += term;
                }
            }
            h[0] = (h[0] - q).max(0.0);
            for hj in h.iter_mut() {
                *hj /= 1.0 - q;
            }
            OffspringLaw::explicit(h, law.lambda())
        }
        LawVariant::TailPower { .. } => Err(Error::Domain(
            "success law unsupported for the tail-power family".into(),
        )),
    }
}

/// Closed form of an iterated tail transform of a linear-fractional pgf:
/// `constant / (1 - pole_rate * s)`.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForm {
    pub constant: f64,
    pub pole_rate: f64,
}

impl ClosedForm {
    pub fn eval(&self, s: f64) -> f64 {
        self.constant / (1.0 - self.pole_rate * s)
    }
}

/// `∇_{a_1}…∇_{a_n} f(s)` for the linear-fractional law: the transform stays
/// linear-fractional, `p(1-p0)(1-p)^{n-1} / Π(1-(1-p)a_i) · 1/(1-(1-p)s)`.
pub fn lf_closed_forms(p0: f64, p: f64, anchors: &AnchorList) -> Result<ClosedForm> {
    if !(0.0..1.0).contains(&p0) || !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidLaw("invalid linear-fractional parameters".into()));
    }
    let c = 1.0 - p;
    let n = anchors.len();
    let mut denom = 1.0;
    for &a in anchors.anchors() {
        let d = 1.0 - c * a;
        if d.abs() < 1e-300 {
            return Err(Error::Pole(format!("anchor {a} at the pole 1/(1-p)")));
        }
        denom *= d;
    }
    let cpow = if n == 1 { 1.0 } else { c.powi(n as i32 - 1) };
    Ok(ClosedForm { constant: p * (1.0 - p0) * cpow / denom, pole_rate: c })
}

/// `β = p/(1-p0) = 1/m` for the linear-fractional law.
pub fn lf_beta(p0: f64, p: f64) -> f64 {
    p / (1.0 - p0)
}
