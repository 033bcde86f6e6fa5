//! Truncated power-series arithmetic and the tail operator `∇_a`.
//!
//! A [`TruncatedSeries`] carries the coefficients `v_0..v_N` of a generating
//! function. The tail transform maps `v` to the series of
//! `(v(s) - v(a)) / (s - a)`, with the coefficient formula
//! `u_k = Σ_j a^j v_{j+k+1}` computed from the truncated tail, so the anchor
//! value never enters as a 0/0 quotient.

use crate::error::{Error, Result};

/// Coefficient sequence of a power series up to a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
    radius_hint: Option<f64>,
}

/// Anchors `a_1..a_n` for iterated tail transforms.
#[derive(Debug, Clone)]
pub struct AnchorList {
    anchors: Vec<f64>,
}

impl AnchorList {
    pub fn new(anchors: Vec<f64>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::Degenerate("anchor list is empty".into()));
        }
        for &a in &anchors {
            if !a.is_finite() || a < 0.0 {
                return Err(Error::Domain(format!("anchor {a} outside [0, R]")));
            }
        }
        Ok(Self { anchors })
    }

    pub fn anchors(&self) -> &[f64] {
        &self.anchors
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    fn check_radius(&self, hint: Option<f64>) -> Result<()> {
        if let Some(r) = hint {
            for &a in &self.anchors {
                if a > r {
                    return Err(Error::Domain(format!("anchor {a} beyond radius {r}")));
                }
            }
        }
        Ok(())
    }
}

/// Result of a tail transform, carrying the estimated error induced by
/// operating on a truncated coefficient sequence.
#[derive(Debug, Clone)]
pub struct TailTransform {
    pub series: TruncatedSeries,
    /// Bound on the dropped-tail contribution evaluated at the anchor.
    /// `INFINITY` when no bound can be inferred from the coefficients.
    pub truncation_bound: f64,
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        Self::with_radius_hint(coeffs, None)
    }

    pub fn with_radius_hint(coeffs: Vec<f64>, radius_hint: Option<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Degenerate("series needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coefficient".into()));
        }
        if let Some(r) = radius_hint {
            if !(r > 0.0) {
                return Err(Error::Domain("radius hint must be positive".into()));
            }
        }
        Ok(Self { coeffs, radius_hint })
    }

    /// The zero series of the given order.
    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![0.0; order + 1], radius_hint: None }
    }

    /// The identity series `s`, at order `order >= 1`.
    pub fn identity(order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[1] = 1.0;
        Self { coeffs, radius_hint: None }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn radius_hint(&self) -> Option<f64> {
        self.radius_hint
    }

    /// True when the coefficients look like a (sub-)probability sequence.
    pub fn is_probability_like(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|&c| c >= -tol) && self.coeffs.iter().sum::<f64>() <= 1.0 + tol
    }

    fn check_in_radius(&self, s: f64) -> Result<()> {
        if !s.is_finite() {
            return Err(Error::Domain("evaluation point not finite".into()));
        }
        if let Some(r) = self.radius_hint {
            if s.abs() > r {
                return Err(Error::Domain(format!("|{s}| beyond radius {r}")));
            }
        }
        Ok(())
    }

    /// Horner evaluation of the truncated series at `s`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        self.check_in_radius(s)?;
        Ok(self.eval_unchecked(s))
    }

    pub(crate) fn eval_unchecked(&self, s: f64) -> f64 {
        horner(&self.coeffs, s)
    }

    /// The tail transform `∇_a v`, of order `N - 1`.
    ///
    /// Coefficients come from the backward recursion
    /// `u_{N-1} = v_N`, `u_k = v_{k+1} + a u_{k+1}`.
    pub fn tail_transform(&self, a: f64) -> Result<TailTransform> {
        if self.order() == 0 {
            return Err(Error::Degenerate("tail transform of an order-0 series".into()));
        }
        if !a.is_finite() || a < 0.0 {
            return Err(Error::Domain(format!("anchor {a} outside [0, R]")));
        }
        if let Some(r) = self.radius_hint {
            if a > r {
                return Err(Error::Domain(format!("anchor {a} beyond radius {r}")));
            }
        }
        let n = self.order();
        let mut u = vec![0.0; n];
        u[n - 1] = self.coeffs[n];
        for k in (0..n - 1).rev() {
            u[k] = self.coeffs[k + 1] + a * u[k + 1];
        }
        let bound = self.dropped_tail_bound(a);
        Ok(TailTransform {
            series: TruncatedSeries { coeffs: u, radius_hint: self.radius_hint },
            truncation_bound: bound,
        })
    }

    /// Estimate of `Σ_{j>N} v_j a^j`, the part of the true series the
    /// truncation cannot see. Exact bound for sub-probability coefficients
    /// with `a <= 1`; geometric extrapolation otherwise.
    fn dropped_tail_bound(&self, a: f64) -> f64 {
        let n = self.order();
        let total: f64 = self.coeffs.iter().sum();
        if a <= 1.0 && self.coeffs.iter().all(|&c| c >= 0.0) && total <= 1.0 + 1e-12 {
            return (1.0 - total).max(0.0) * a.powi(n as i32 + 1);
        }
        // Geometric extrapolation from the last two coefficients.
        let vn = self.coeffs[n].abs();
        if vn == 0.0 {
            return 0.0;
        }
        if n == 0 {
            return f64::INFINITY;
        }
        let prev = self.coeffs[n - 1].abs();
        if prev > 0.0 {
            let ratio = (vn / prev) * a;
            if ratio < 1.0 {
                return vn * a.powi(n as i32 + 1) * ratio / (1.0 - ratio);
            }
        }
        f64::INFINITY
    }

    /// `∇_{a_1}…∇_{a_n} v(s)`: iterated tail transforms, evaluated at `s`.
    pub fn multi_tail(&self, anchors: &AnchorList, s: f64) -> Result<f64> {
        anchors.check_radius(self.radius_hint)?;
        if anchors.len() > self.order() {
            return Err(Error::Degenerate(format!(
                "{} anchors exceed series order {}",
                anchors.len(),
                self.order()
            )));
        }
        let mut w = self.clone();
        for &a in anchors.anchors() {
            w = w.tail_transform(a)?.series;
        }
        w.eval(s)
    }

    /// Newton-form reconstruction of `v(s)` from tail-transform data:
    /// the partial terms `∇_{a_1}…∇_{a_{i-1}} v(a_i)` plus the remainder
    /// `(s-a_1)…(s-a_n) ∇_{a_1}…∇_{a_n} v(s)`. Must reproduce `eval(v, s)`.
    pub fn divided_expansion(&self, anchors: &AnchorList, s: f64) -> Result<f64> {
        anchors.check_radius(self.radius_hint)?;
        if anchors.len() > self.order() {
            return Err(Error::Degenerate(format!(
                "{} anchors exceed series order {}",
                anchors.len(),
                self.order()
            )));
        }
        let mut w = self.clone();
        let mut acc = 0.0;
        let mut prod = 1.0;
        for &a in anchors.anchors() {
            acc += prod * w.eval(a)?;
            w = w.tail_transform(a)?.series;
            prod *= s - a;
        }
        acc += prod * w.eval(s)?;
        Ok(acc)
    }

    // ---- ring operations on fixed-order truncations ----

    pub fn truncate(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.truncate(order + 1);
        coeffs.resize(order + 1, 0.0);
        Self { coeffs, radius_hint: self.radius_hint }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Self { coeffs, radius_hint: self.radius_hint }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - other.coeff(k)).collect();
        Self { coeffs, radius_hint: self.radius_hint }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|v| c * v).collect(),
            radius_hint: self.radius_hint,
        }
    }

    pub fn add_const(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// Product truncated at `order`.
    pub fn mul(&self, other: &Self, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        for (i, &a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate().take(order + 1 - i) {
                coeffs[i + j] += a * b;
            }
        }
        Self { coeffs, radius_hint: self.radius_hint }
    }

    /// Quotient `self / other` truncated at `order`; `other` must have a
    /// non-zero constant term.
    pub fn div(&self, other: &Self, order: usize) -> Result<Self> {
        let d0 = other.coeff(0);
        if d0 == 0.0 {
            return Err(Error::Degenerate("series division by zero constant term".into()));
        }
        let mut q = vec![0.0; order + 1];
        for k in 0..=order {
            let mut acc = self.coeff(k);
            for j in 1..=k {
                acc -= other.coeff(j) * q[k - j];
            }
            q[k] = acc / d0;
        }
        Ok(Self { coeffs: q, radius_hint: self.radius_hint })
    }

    /// `exp` of the series, truncated at its own order.
    pub fn exp(&self) -> Self {
        let n = self.order();
        let mut g = vec![0.0; n + 1];
        g[0] = self.coeffs[0].exp();
        for k in 1..=n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.coeffs[j] * g[k - j];
            }
            g[k] = acc / k as f64;
        }
        Self { coeffs: g, radius_hint: self.radius_hint }
    }

    /// Antiderivative vanishing at 0, of order `N + 1`.
    pub fn integral(&self) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len() + 1];
        for (k, &v) in self.coeffs.iter().enumerate() {
            coeffs[k + 1] = v / (k + 1) as f64;
        }
        Self { coeffs, radius_hint: self.radius_hint }
    }

    /// Coefficient-wise derivative, of order `N - 1`.
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero(0);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &v)| k as f64 * v)
            .collect();
        Self { coeffs, radius_hint: self.radius_hint }
    }
}

/// Horner evaluation of a coefficient slice.
pub(crate) fn horner(coeffs: &[f64], s: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * s + c;
    }
    acc
}

/// `outer(inner(s))` truncated at `order`, by Horner over the series ring.
pub fn compose(outer: &[f64], inner: &TruncatedSeries, order: usize) -> TruncatedSeries {
    let mut acc = TruncatedSeries::zero(order);
    for &c in outer.iter().rev() {
        acc = acc.mul(inner, order).add_const(c);
    }
    acc
}

/// Boundedness verdict for a partial-sum sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converging,
    Diverging,
    Inconclusive,
}

/// Partial sums and partial integrals probing the `x log x`-type moment
/// condition `Σ v_k a^k k^{n-1} ln k < ∞`, which is equivalent to
/// `∫_0^a ∇_a^n v(x) dx < ∞`.
#[derive(Debug, Clone)]
pub struct MomentReport {
    /// `(N, S_N)` with `S_N = Σ_{2<=k<=N} v_k a^k k^{n-1} ln k`.
    pub partial_sums: Vec<(usize, f64)>,
    /// `(N, I_N)` with `I_N = ∫_0^a ∇_a^n v_{<=N}(x) dx`.
    pub partial_integrals: Vec<(usize, f64)>,
    pub sum_verdict: Verdict,
    pub integral_verdict: Verdict,
}

impl MomentReport {
    pub fn verdict(&self) -> Verdict {
        if self.sum_verdict == self.integral_verdict {
            self.sum_verdict
        } else {
            Verdict::Inconclusive
        }
    }
}

/// Classify boundedness from the least-squares slope of `S_N` against
/// `ln N` over the last six points of the truncation ladder, relative to
/// the magnitude of the last partial sum. A convergent sum's slope decays
/// with its tail there, while logarithmically divergent sums keep a slope
/// of order `1/ln N` arbitrarily late.
fn classify(points: &[(usize, f64)]) -> Verdict {
    let last = match points.last() {
        Some(&(_, s)) => s,
        None => return Verdict::Inconclusive,
    };
    let take = points.len().min(6);
    let top: Vec<(f64, f64)> = points[points.len() - take..]
        .iter()
        .map(|&(n, s)| ((n as f64).ln(), s))
        .collect();
    if top.len() < 3 {
        return Verdict::Inconclusive;
    }
    let m = top.len() as f64;
    let mean_x = top.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = top.iter().map(|p| p.1).sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in &top {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Verdict::Inconclusive;
    }
    let slope = sxy / sxx;
    let rel = slope.abs() / last.abs().max(1.0);
    if rel < 1e-6 {
        Verdict::Converging
    } else if rel > 1e-4 {
        Verdict::Diverging
    } else {
        Verdict::Inconclusive
    }
}

/// Probe the moment condition of order `n` at anchor `a` on increasing
/// truncations up to `budget`, by the coefficient-sum route and the
/// tail-transform integral route in parallel.
pub fn xlogx_diagnostic(
    v: &TruncatedSeries,
    a: f64,
    n: usize,
    budget: usize,
) -> Result<MomentReport> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("anchor {a} outside (0, R]")));
    }
    if let Some(r) = v.radius_hint() {
        if a > r {
            return Err(Error::Domain(format!("anchor {a} beyond radius {r}")));
        }
    }
    if n == 0 {
        return Err(Error::Degenerate("moment order n must be >= 1".into()));
    }
    let budget = budget.min(v.order());
    if budget < n + 2 {
        return Err(Error::Degenerate("budget too small for the requested order".into()));
    }

    // Geometric ladder of truncation orders, dense enough that the top
    // factor-2 window used by `classify` holds at least eight points.
    let mut orders: Vec<usize> = Vec::new();
    let lo = (n + 2).max(4);
    let steps = {
        let span = (budget as f64 / lo as f64).max(2.0).ln();
        28usize.max((8.0 * span / std::f64::consts::LN_2).ceil() as usize)
    };
    for i in 0..=steps {
        let x = (lo as f64) * ((budget as f64 / lo as f64).powf(i as f64 / steps as f64));
        let o = x.round() as usize;
        if orders.last() != Some(&o) {
            orders.push(o);
        }
    }

    // Running partial sums S_N, sampled at ladder points.
    let mut partial_sums = Vec::with_capacity(orders.len());
    let mut s_run = 0.0;
    let mut k_done = 1usize;
    for &nn in &orders {
        for k in (k_done + 1).max(2)..=nn {
            let kf = k as f64;
            s_run += v.coeff(k) * a.powi(k as i32) * kf.powi(n as i32 - 1) * kf.ln();
        }
        k_done = k_done.max(nn);
        partial_sums.push((nn, s_run));
    }

    // Integral route: I_N from the n-fold tail transform of the truncation.
    let mut partial_integrals = Vec::with_capacity(orders.len());
    for &nn in &orders {
        let mut w = v.truncate(nn);
        for _ in 0..n {
            w = w.tail_transform(a)?.series;
        }
        let i_n: f64 = w
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, &u)| u * a.powi(k as i32 + 1) / (k + 1) as f64)
            .sum();
        partial_integrals.push((nn, i_n));
    }

    let sum_verdict = classify(&partial_sums);
    let integral_verdict = classify(&partial_integrals);
    Ok(MomentReport { partial_sums, partial_integrals, sum_verdict, integral_verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(coeffs: &[f64]) -> TruncatedSeries {
        TruncatedSeries::new(coeffs.to_vec()).unwrap()
    }

    #[test]
    fn eval_identity() {
        assert_eq!(series(&[0.0, 1.0]).eval(0.7).unwrap(), 0.7);
    }

    #[test]
    fn eval_finite_geometric() {
        assert_eq!(series(&[1.0, 1.0, 1.0]).eval(2.0).unwrap(), 7.0);
    }

    #[test]
    fn eval_lf_mass_at_one() {
        // LF law p=0.5, p0=0.25 truncated at N=30; tail bound 0.5^29.
        let p: f64 = 0.5;
        let p0 = 0.25;
        let mut c = vec![p0];
        for k in 1..=30usize {
            c.push((1.0 - p0) * (1.0 - p).powi(k as i32 - 1) * p);
        }
        let v = series(&c);
        assert!((v.eval(1.0).unwrap() - 1.0).abs() < 0.5f64.powi(29));
    }

    #[test]
    fn eval_out_of_radius() {
        let v = TruncatedSeries::with_radius_hint(vec![1.0, 1.0], Some(1.0)).unwrap();
        assert!(matches!(v.eval(1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn tail_transform_of_square() {
        // ∇_1(s^2) = 1 + s
        let v = series(&[0.0, 0.0, 1.0]);
        let t = v.tail_transform(1.0).unwrap();
        assert_eq!(t.series.coeffs(), &[1.0, 1.0]);
    }

    #[test]
    fn tail_transform_at_zero_is_shift() {
        let v = series(&[3.0, 1.0, 4.0, 1.0, 5.0]);
        let t = v.tail_transform(0.0).unwrap();
        assert_eq!(t.series.coeffs(), &[1.0, 4.0, 1.0, 5.0]);
    }

    #[test]
    fn tail_transform_lf_closed_form() {
        // LF p=0.5, p0=0.25, a=1: ∇_1 f has coefficients 0.75 * 0.5^k.
        let p: f64 = 0.5;
        let p0 = 0.25;
        let n = 60usize;
        let mut c = vec![p0];
        for k in 1..=n {
            c.push((1.0 - p0) * (1.0 - p).powi(k as i32 - 1) * p);
        }
        let t = series(&c).tail_transform(1.0).unwrap();
        for k in 0..20 {
            let expect = 0.75 * 0.5f64.powi(k as i32);
            assert!((t.series.coeff(k) - expect).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn tail_transform_order_zero_rejected() {
        assert!(matches!(
            series(&[1.0]).tail_transform(0.5),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn tail_anchor_convention_is_derivative() {
        // ∇_a v(a) = v'(a) for a polynomial.
        let v = series(&[2.0, -1.0, 3.0, 0.5]);
        let a = 0.6;
        let t = v.tail_transform(a).unwrap();
        let deriv = v.derivative().eval(a).unwrap();
        assert!((t.series.eval(a).unwrap() - deriv).abs() < 1e-14);
    }

    #[test]
    fn multi_tail_geometric() {
        // v = 1/(1-s): ∇_{a1}∇_{a2} v(s) = 1/((1-a1)(1-a2)(1-s)).
        let v = series(&vec![1.0; 41]);
        let anchors = AnchorList::new(vec![0.3, 0.5]).unwrap();
        let got = v.multi_tail(&anchors, 0.2).unwrap();
        let want = 1.0 / (0.7 * 0.5 * 0.8);
        assert!((got - want).abs() < 1e-3, "truncation-level agreement: {got} vs {want}");
    }

    #[test]
    fn multi_tail_equal_anchors_collapse_to_derivative() {
        // n equal anchors at s=a give v^(n)(a)/n!.
        let v = series(&[1.0, 2.0, 0.5, -0.25, 1.5, 0.75, 0.1]);
        let a = 0.4;
        for n in 1..=4usize {
            let anchors = AnchorList::new(vec![a; n]).unwrap();
            let got = v.multi_tail(&anchors, a).unwrap();
            let mut d = v.clone();
            for _ in 0..n {
                d = d.derivative();
            }
            let fact: f64 = (1..=n).map(|i| i as f64).product();
            let want = d.eval(a).unwrap() / fact;
            assert!((got - want).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn multi_tail_too_many_anchors() {
        let v = series(&[0.0, 1.0]);
        let anchors = AnchorList::new(vec![0.1, 0.2]).unwrap();
        assert!(matches!(v.multi_tail(&anchors, 0.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn divided_expansion_cube() {
        let v = series(&[0.0, 0.0, 0.0, 1.0]);
        let anchors = AnchorList::new(vec![1.0, 1.0]).unwrap();
        let got = v.divided_expansion(&anchors, 0.5).unwrap();
        assert!((got - 0.125).abs() < 1e-14);
    }

    #[test]
    fn divided_expansion_single_anchor_is_definition() {
        let v = series(&[0.3, 0.1, 0.25, 0.05, 0.3]);
        let a = 0.7;
        let s = 0.25;
        let anchors = AnchorList::new(vec![a]).unwrap();
        let got = v.divided_expansion(&anchors, s).unwrap();
        assert!((got - v.eval(s).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn combinatorial_identity_brute_force() {
        // Σ_{i_1+..+i_{n+1}=k} a^{i_1+..+i_{n+1}} = C(k+n, n) a^k, k,n <= 6.
        fn count_compositions(k: usize, parts: usize) -> u64 {
            if parts == 1 {
                return 1;
            }
            (0..=k).map(|i| count_compositions(k - i, parts - 1)).sum()
        }
        fn binom(n: u64, k: u64) -> u64 {
            (1..=k).fold(1u64, |acc, i| acc * (n - k + i) / i)
        }
        for n in 1..=6usize {
            for k in 0..=6usize {
                let lhs = count_compositions(k, n + 1);
                let rhs = binom((k + n) as u64, n as u64);
                assert_eq!(lhs, rhs, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn series_exp_matches_scalar() {
        let h = series(&[0.2, 0.5, -0.1, 0.03, 0.0, 0.0, 0.0, 0.0]);
        let g = h.exp();
        for &s in &[0.0, 0.1, 0.3] {
            let want = h.eval(s).unwrap().exp();
            let got = g.eval(s).unwrap();
            assert!((got - want).abs() < 1e-6, "s={s}: {got} vs {want}");
        }
    }

    #[test]
    fn series_div_roundtrip() {
        let a = series(&[1.0, 0.3, 0.2, 0.1, 0.05, 0.01]);
        let b = series(&[2.0, -0.5, 0.25, 0.0, 0.1, 0.0]);
        let q = a.div(&b, 5).unwrap();
        let back = q.mul(&b, 5);
        for k in 0..=5 {
            assert!((back.coeff(k) - a.coeff(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn xlogx_finite_support_converges() {
        let mut c = vec![0.2, 0.3, 0.5];
        c.resize(2001, 0.0);
        let v = series(&c);
        let rep = xlogx_diagnostic(&v, 1.0, 2, 2000).unwrap();
        assert_eq!(rep.verdict(), Verdict::Converging);
        // S_N constant past the support.
        let tail: Vec<f64> = rep.partial_sums.iter().rev().take(5).map(|p| p.1).collect();
        assert!(tail.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-15));
    }

    #[test]
    fn xlogx_log_tail_diverges() {
        // v_k = C / (k^2 sqrt(ln k)): x log x sum grows like sqrt(ln N).
        let n = 120_000usize;
        let mut c = vec![0.0; n + 1];
        let mut mass = 0.0;
        for (k, slot) in c.iter_mut().enumerate().skip(2) {
            let kf = k as f64;
            *slot = 1.0 / (kf * kf * kf.ln().sqrt());
            mass += *slot;
        }
        for slot in c.iter_mut() {
            *slot /= mass;
        }
        let v = series(&c);
        let rep = xlogx_diagnostic(&v, 1.0, 2, n).unwrap();
        assert_eq!(rep.sum_verdict, Verdict::Diverging);
        assert_eq!(rep.integral_verdict, Verdict::Diverging);
    }

    #[test]
    fn xlogx_extendable_lf_at_r_converges() {
        // LF p=0.5, p0=0.75: r=1.5 and p_k r^k decays geometrically.
        let p: f64 = 0.5;
        let p0 = 0.75;
        let n = 400usize;
        let mut c = vec![p0];
        for k in 1..=n {
            c.push((1.0 - p0) * (1.0 - p).powi(k as i32 - 1) * p);
        }
        let v = series(&c);
        let rep = xlogx_diagnostic(&v, 1.5, 2, n).unwrap();
        assert_eq!(rep.verdict(), Verdict::Converging);
    }

    #[test]
    fn xlogx_rejects_bad_anchor() {
        let v = series(&[0.5, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(xlogx_diagnostic(&v, 0.0, 2, 6), Err(Error::Domain(_))));
    }
}
