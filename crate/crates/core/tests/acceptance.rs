//! End-to-end acceptance suite. Each test covers one release criterion and
//! prints a single pass line on success (assertion failures mark the
//! criterion failed).

use branchkit::evolve::{self, integral_inverse, scalar_f, series_f, survival_f};
use branchkit::law::{dual_law, fixed_points, success_law};
use branchkit::limits;
use branchkit::mc::{self, SimConfig};
use branchkit::{AnchorList, LawSpec, OffspringLaw, PiEvaluator, TruncatedSeries};

fn sub_explicit() -> OffspringLaw {
    OffspringLaw::explicit(vec![0.5, 0.3, 0.2], 1.0).unwrap()
}

fn crit_explicit() -> OffspringLaw {
    OffspringLaw::explicit(vec![0.25, 0.5, 0.25], 1.0).unwrap()
}

fn sup_explicit() -> OffspringLaw {
    OffspringLaw::explicit(vec![0.2, 0.3, 0.5], 1.0).unwrap()
}

fn sub_lf() -> OffspringLaw {
    OffspringLaw::linear_fractional(0.75, 0.5, 1.0).unwrap()
}

fn crit_lf() -> OffspringLaw {
    OffspringLaw::linear_fractional(0.5, 0.5, 1.0).unwrap()
}

fn sup_lf() -> OffspringLaw {
    OffspringLaw::linear_fractional(0.25, 0.25, 1.0).unwrap()
}

fn reference_laws() -> Vec<(&'static str, OffspringLaw)> {
    vec![
        ("explicit-sub", sub_explicit()),
        ("explicit-crit", crit_explicit()),
        ("explicit-sup", sup_explicit()),
        ("lf-sub", sub_lf()),
        ("lf-crit", crit_lf()),
        ("lf-sup", sup_lf()),
    ]
}

const T_GRID: [f64; 5] = [0.25, 0.5, 1.0, 1.5, 2.0];
const S_GRID: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.4];

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

#[test]
fn criterion_01_operator_algebra() {
    let series = TruncatedSeries::new(vec![
        0.08, 0.17, 0.12, 0.2, 0.14, 0.09, 0.07, 0.06, 0.04, 0.03,
    ])
    .unwrap();
    let tol = 1e-10;
    // Commutativity of iterated tail transforms.
    for &(a, b) in &[(0.3, 0.9), (0.0, 1.0), (0.5, 0.5)] {
        for &s in &[0.2, 0.7, 1.0] {
            let ab = series.multi_tail(&AnchorList::new(vec![a, b]).unwrap(), s).unwrap();
            let ba = series.multi_tail(&AnchorList::new(vec![b, a]).unwrap(), s).unwrap();
            assert!((ab - ba).abs() < tol, "commutativity ({a},{b},{s})");
        }
    }
    // Coincident node collapses to the derivative.
    for &a in &[0.25, 0.8] {
        let d = series.derivative().eval(a).unwrap();
        let t = series.multi_tail(&AnchorList::new(vec![a]).unwrap(), a).unwrap();
        assert!((t - d).abs() < tol, "derivative collapse at {a}");
    }
    // Newton-form reconstruction over anchor lists reproduces the series.
    let anchors = AnchorList::new(vec![0.2, 0.6, 0.9]).unwrap();
    for &s in &[0.1, 0.5, 0.95] {
        let rebuilt = series.divided_expansion(&anchors, s).unwrap();
        assert!((rebuilt - series.eval(s).unwrap()).abs() < tol, "reconstruction at {s}");
    }
    // First-order exchange identity for divided differences.
    for &(a, b, s) in &[(0.2, 0.7, 0.4), (0.1, 0.9, 0.6)] {
        let da = series.multi_tail(&AnchorList::new(vec![a]).unwrap(), s).unwrap();
        let db = series.multi_tail(&AnchorList::new(vec![b]).unwrap(), s).unwrap();
        let dab = series.multi_tail(&AnchorList::new(vec![a, b]).unwrap(), s).unwrap();
        assert!((da - db - (a - b) * dab).abs() < tol, "exchange ({a},{b},{s})");
        // Symmetry in the evaluation point and anchor.
        let va = series.multi_tail(&AnchorList::new(vec![a]).unwrap(), b).unwrap();
        let vb = series.multi_tail(&AnchorList::new(vec![b]).unwrap(), a).unwrap();
        assert!((va - vb).abs() < tol, "symmetry ({a},{b})");
    }
    // Repeated-anchor coefficients against the brute-force binomial sum,
    // orders and indices up to 6.
    let a: f64 = 0.7;
    for n in 1..=6usize {
        for k in 0..=3usize {
            let mut want = 0.0;
            let mut j = 0usize;
            while j + k + n <= series.order() {
                want += binom(j + n - 1, j) * a.powi(j as i32) * series.coeff(j + k + n);
                j += 1;
            }
            // Extract coefficient k by iterated transforms.
            let mut w = series.clone();
            for _ in 0..n {
                w = w.tail_transform(a).unwrap().series;
            }
            assert!((w.coeff(k) - want).abs() < tol, "n={n} k={k}");
        }
    }
    println!("criterion 1 (operator algebra): pass");
}

#[test]
fn criterion_02_route_agreement() {
    for (name, law) in reference_laws() {
        for &t in &T_GRID {
            let d = series_f(t, 64, &law, 1e-12).unwrap();
            for &s in &S_GRID {
                let a = scalar_f(t, s, &law, 1e-12).unwrap().value;
                let b = integral_inverse(t, s, &law, 1e-12).unwrap().value;
                let c = d.eval(s);
                assert!((a - b).abs() < 1e-7, "{name} t={t} s={s}: ode vs integral");
                assert!((a - c).abs() < 1e-7, "{name} t={t} s={s}: ode vs series");
            }
        }
    }
    println!("criterion 2 (route agreement): pass");
}

#[test]
fn criterion_03_refined_equation_residuals() {
    for (name, law) in reference_laws() {
        let pe = PiEvaluator::new(&law).unwrap();
        for &t in &T_GRID {
            for &s in &S_GRID {
                let r = pe.theorem_main_residual(t, s).unwrap();
                assert!(r < 1e-6, "{name} t={t} s={s}: residual {r}");
            }
        }
        // Decay-rate check: F_t'(q) = e^{λ(f'(q)-1)t}.
        let fp = pe.fixed_points();
        let q = fp.q;
        for &t in &[1.0, 2.0] {
            let d = series_f(t, 96, &law, 1e-13).unwrap();
            let deriv: f64 = d
                .probs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &p)| k as f64 * p * q.powi(k as i32 - 1))
                .sum();
            let want = (fp.gamma_exponent * t).exp();
            assert!((deriv - want).abs() < 1e-7, "{name} t={t}: {deriv} vs {want}");
        }
    }
    println!("criterion 3 (refined-equation residuals): pass");
}

#[test]
fn criterion_04_lf_closed_form_regressions() {
    // Subcritical: ∇_1 F_t(s) = e^{-λ(1-m)t} [∇_r F_t(s)]^m, m = 1/2, r = 3/2.
    let law = sub_lf();
    for &t in &T_GRID {
        for &s in &[0.0, 0.3, 0.6, 0.9] {
            let f = scalar_f(t, s, &law, 1e-13).unwrap().value;
            let lhs = (1.0 - f) / (1.0 - s);
            let rhs = (-0.5 * t).exp() * ((1.5 - f) / (1.5 - s)).powf(0.5);
            assert!((lhs - rhs).abs() < 1e-7, "sub t={t} s={s}");
        }
    }
    // Supercritical: ∇_q F_t(s) = e^{-λ(1-1/m)t} [∇_1 F_t(s)]^{1/m},
    // m = 3, q = 1/3.
    let law = sup_lf();
    let q = 1.0 / 3.0;
    for &t in &T_GRID {
        for &s in &[0.0, 0.2, 0.6, 0.9] {
            let f = scalar_f(t, s, &law, 1e-13).unwrap().value;
            let lhs = (f - q) / (s - q);
            let rhs = (-(1.0 - 1.0 / 3.0) * t).exp() * ((1.0 - f) / (1.0 - s)).powf(1.0 / 3.0);
            assert!((lhs - rhs).abs() < 1e-7, "sup t={t} s={s}");
        }
    }
    println!("criterion 4 (linear-fractional regressions): pass");
}

#[test]
fn criterion_05_subcritical_limits() {
    let law = sub_lf();
    let pe = PiEvaluator::new(&law).unwrap();
    let lim = limits::subcritical_limit(&law, &pe, 64).unwrap();
    let c_want = (1.0f64 / 3.0).sqrt();
    assert!((lim.c - c_want).abs() < 1e-9);
    // Scaled survival within 1% of c at t = 40 (λ(1-m) = 1/2).
    let t = 40.0;
    let q_t = survival_f(t, 1.0, &law, 1e-12).unwrap().value;
    let scaled = (0.5 * t).exp() * q_t;
    assert!((scaled / c_want - 1.0).abs() < 0.01, "scaled survival {scaled}");
    // Conditional pgf within 1e-3 sup-norm of the closed form, via the
    // cancellation-free survival route.
    let psi = |s: f64| 1.0 - (1.0 - s) * (1.0f64 - s / 1.5).powf(-0.5);
    let mut sup: f64 = 0.0;
    for i in 0..=20 {
        let s = i as f64 / 20.0;
        let w = survival_f(t, 1.0 - s, &law, 1e-12).unwrap().value;
        let cond = 1.0 - w / q_t;
        sup = sup.max((cond - psi(s)).abs());
    }
    assert!(sup < 1e-3, "sup-norm {sup}");
    println!("criterion 5 (subcritical limits): pass");
}

#[test]
fn criterion_06_critical_asymptotics() {
    let law = crit_lf();
    let gap = |t: f64| {
        let q_t = survival_f(t, 1.0, &law, 1e-12).unwrap().value;
        (q_t * t - 1.0).abs()
    };
    let g3 = gap(1e3);
    let g4 = gap(1e4);
    assert!(g3 <= 0.02, "Q_t λt gap at 1e3: {g3}");
    assert!(g4 < g3, "trend not monotone: {g4} vs {g3}");
    // Conditional Laplace transform vs the exponential limit at λt = 10³.
    let t = 1e3;
    let q_t = survival_f(t, 1.0, &law, 1e-12).unwrap().value;
    for &theta in &[0.5, 1.0, 2.0] {
        let w0 = -(-theta * q_t).exp_m1();
        let w = survival_f(t, w0, &law, 1e-12).unwrap().value;
        let transform = 1.0 - w / q_t;
        let want = 1.0 / (1.0 + theta);
        assert!((transform / want - 1.0).abs() < 0.02, "theta={theta}");
    }
    println!("criterion 6 (critical asymptotics): pass");
}

#[test]
fn criterion_07_supercritical_limits() {
    let law = sup_lf();
    let pe = PiEvaluator::new(&law).unwrap();
    // Laplace-transform fixed point vs the finite-t value at λt = 20.
    let rhos = [0.25, 1.0, 4.0];
    let mart = limits::martingale_limit_transform(&law, &pe, &rhos, 1e-12).unwrap();
    let m_t = evolve::mean(20.0, &law);
    for &(rho, phi) in &mart.phi_table {
        let w = survival_f(20.0, rho / m_t, &law, 1e-12).unwrap().value;
        let finite_t = 1.0 - w;
        assert!((finite_t - phi).abs() < 1e-3, "rho={rho}: {finite_t} vs {phi}");
    }
    // Local limit at λt = 25.
    let local = limits::supercritical_local_limit(&law, &pe, 32).unwrap();
    let d = series_f(25.0, 32, &law, 1e-13).unwrap();
    let gt = local.gamma.powf(25.0);
    for k in 1..=5 {
        let ratio = d.probs[k] / gt / local.a_coeffs.coeff(k);
        assert!((ratio - 1.0).abs() < 0.01, "k={k}: {ratio}");
    }
    // Degenerate branch: heavy-tailed supercritical law failing the
    // moment condition drifts toward 1 over doubling horizons.
    let k_max = 20_000usize;
    let mut p = vec![0.0; k_max + 1];
    let mut mass = 0.0;
    for (k, slot) in p.iter_mut().enumerate().skip(2) {
        let kf = k as f64;
        *slot = 1.0 / (kf * kf * kf.ln() * kf.ln());
        mass += *slot;
    }
    for slot in p.iter_mut().skip(2) {
        *slot *= 0.9 / mass;
    }
    p[0] = 0.1;
    let heavy = OffspringLaw::explicit(p, 1.0).unwrap();
    let pe_heavy = PiEvaluator::new(&heavy).unwrap();
    let mart_heavy = limits::martingale_limit_transform(&heavy, &pe_heavy, &[1.0], 1e-9).unwrap();
    assert!(mart_heavy.w_degenerate);
    let mut prev = 0.0;
    for &t in &[2.0, 4.0, 8.0] {
        let w = survival_f(t, 1.0 / evolve::mean(t, &heavy), &heavy, 1e-10).unwrap().value;
        let f = 1.0 - w;
        assert!(f > prev, "no upward drift at t={t}");
        prev = f;
    }
    println!("criterion 7 (supercritical limits): pass");
}

#[test]
fn criterion_08_decomposition() {
    let law = sup_explicit();
    let q = fixed_points(&law).q;
    assert!((q - 0.4).abs() < 1e-12);
    let dual = dual_law(&law).unwrap();
    let succ = success_law(&law).unwrap();
    for &t in &[0.5, 1.0, 2.0] {
        // F_t(s) = q G_t(s/q) on [0, q].
        for &s in &[0.0, 0.15, 0.3, 0.39] {
            let f = scalar_f(t, s, &law, 1e-13).unwrap().value;
            let g = scalar_f(t, s / q, &dual, 1e-13).unwrap().value;
            assert!((f - q * g).abs() < 1e-8, "lower branch t={t} s={s}");
        }
        // F_t(s) = q + (1-q) H_t((s-q)/(1-q)) on [q, 1].
        for &s in &[0.4, 0.6, 0.8, 0.99] {
            let f = scalar_f(t, s, &law, 1e-13).unwrap().value;
            let h = scalar_f(t, (s - q) / (1.0 - q), &succ, 1e-13).unwrap().value;
            assert!((f - (q + (1.0 - q) * h)).abs() < 1e-8, "upper branch t={t} s={s}");
        }
    }
    // Second fixed point is invariant for the extendable law.
    let ext = sub_lf();
    for &t in &[0.5, 3.0, 10.0] {
        let f = scalar_f(t, 1.5, &ext, 1e-13).unwrap().value;
        assert!((f - 1.5).abs() < 1e-8, "t={t}");
    }
    println!("criterion 8 (decomposition): pass");
}

/// Chi-square p-value of observed counts against expected probabilities,
/// pooling the tail so every expected count is at least 5.
fn chi_square_p(observed: &[f64], expected: &[f64], n: f64) -> f64 {
    let mut obs_pool = Vec::new();
    let mut exp_pool = Vec::new();
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    for (o, e) in observed.iter().zip(expected) {
        acc_o += o * n;
        acc_e += e * n;
        if acc_e >= 5.0 {
            obs_pool.push(acc_o);
            exp_pool.push(acc_e);
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 {
        if let Some(last) = exp_pool.last_mut() {
            *last += acc_e;
            *obs_pool.last_mut().unwrap() += acc_o;
        }
    }
    let stat: f64 =
        obs_pool.iter().zip(&exp_pool).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (exp_pool.len() - 1) as f64;
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

#[test]
fn criterion_09_monte_carlo_concordance() {
    let cases = [
        (LawSpec::LinearFractional { p0: 0.75, p: 0.5, lambda: 1.0 }, sub_lf(), 3.0),
        (LawSpec::LinearFractional { p0: 0.5, p: 0.5, lambda: 1.0 }, crit_lf(), 5.0),
        (LawSpec::Explicit { probs: vec![0.2, 0.3, 0.5], lambda: 1.0 }, sup_explicit(), 2.0),
    ];
    for (spec, law, t) in cases {
        let n = 200_000u64;
        let cfg = SimConfig::new(spec, t, n, 314_159);
        let stats = mc::simulate(&cfg).unwrap();
        let order = 200.min(cfg.histogram_max);
        let d = series_f(t, order, &law, 1e-12).unwrap();
        // Compare over the analytic support plus the pooled tail.
        let mut expected = d.probs.clone();
        let tail: f64 = 1.0 - expected.iter().sum::<f64>();
        expected.push(tail.max(0.0));
        let mut observed: Vec<f64> = stats.histogram[..=order].to_vec();
        let obs_tail: f64 =
            stats.histogram[order + 1..].iter().sum::<f64>() + stats.overflow;
        observed.push(obs_tail);
        let p = chi_square_p(&observed, &expected, n as f64);
        assert!(p > 0.001, "chi-square p = {p} at t = {t}");
        // Martingale proxy.
        let se_w = (stats.w_proxy_variance / n as f64).sqrt();
        assert!((stats.w_proxy_mean - 1.0).abs() < 4.0 * se_w, "W-proxy at t = {t}");
    }
    println!("criterion 9 (Monte Carlo concordance): pass");
}

#[test]
fn criterion_10_slow_variation_machinery() {
    let law = OffspringLaw::tail_power(0.0, 1.0, 100_000, 1.0).unwrap();
    let pe = PiEvaluator::new(&law).unwrap();
    let grid = [1.0, 10.0, 1e2, 1e4, 1e6];
    let rep = limits::theorem_a0_machinery(&law, &pe, &grid).unwrap();
    assert!(rep.increasing);
    assert!(rep.v_values[0].1.abs() < 1e-12, "V(1) = {}", rep.v_values[0].1);
    let (_, ratio) = rep.elongation.last().unwrap();
    assert!((ratio - 1.0).abs() < 0.10, "doubling ratio at 1e6: {ratio}");
    println!("criterion 10 (slow-variation machinery): pass");
}
