//! Pointwise evaluation of iterated tail transforms `∇_{a_1}…∇_{a_n} f(s)`
//! of an offspring pgf, i.e. the divided difference of `f` over the node
//! multiset `{a_1, …, a_n, s}`.
//!
//! Dispatch avoids cancellation: explicit laws go through the exact
//! coefficient route (all-positive data), linear-fractional laws through the
//! closed form, and only the tail-power family falls back to a confluent
//! divided-difference table.

use crate::law::{lf_closed_forms, LawVariant, OffspringLaw};
use crate::series::{AnchorList, TruncatedSeries};

/// `∇_{anchors} f(s)`. Anchors may repeat and may equal `s`; the value at a
/// coincident node is the analytic limit (derivative convention).
pub fn nabla(law: &OffspringLaw, anchors: &[f64], s: f64) -> f64 {
    if anchors.is_empty() {
        return law.pgf(s);
    }
    match law.variant() {
        LawVariant::Explicit(coeffs) => {
            let v = TruncatedSeries::new(coeffs.clone()).expect("law has coefficients");
            if anchors.len() > v.order() {
                // The polynomial's high-order tail transforms vanish.
                return 0.0;
            }
            let list = AnchorList::new(anchors.to_vec()).expect("non-empty anchors");
            v.multi_tail(&list, s).expect("polynomial evaluation")
        }
        LawVariant::LinearFractional { p0, p } => {
            let list = AnchorList::new(anchors.to_vec()).expect("non-empty anchors");
            lf_closed_forms(*p0, *p, &list)
                .expect("validated LF parameters")
                .eval(s)
        }
        LawVariant::TailPower { alpha, scale, .. } => {
            // Anchors at 1 admit cancellation-free closed forms from
            // 1 - f(s) = (1-s) - scale (1-s)^{1+alpha} (alpha >= 0) /
            // 1 - f(s) = (1-s)^{1+alpha} (alpha < 0); the generic table
            // would subtract values of f agreeing to ~(1-s).
            let len_ok = anchors.len() == 1 || (anchors.len() == 2 && *alpha >= 0.0);
            if anchors.iter().all(|&a| a == 1.0) && len_ok {
                let x = 1.0 - s;
                let one_minus_tail = |x: f64| -> f64 {
                    // (1 - ∇_1 f)(s) as a function of x = 1 - s.
                    if *alpha > 0.0 {
                        scale * x.powf(*alpha)
                    } else if *alpha == 0.0 {
                        if x <= 0.0 {
                            0.0
                        } else {
                            scale / (1.0 - x.ln())
                        }
                    } else {
                        1.0 - x.powf(*alpha)
                    }
                };
                return if anchors.len() == 1 {
                    1.0 - one_minus_tail(x)
                } else {
                    // ∇_1²f(s) = (1 - ∇_1 f(s))/(1 - s).
                    one_minus_tail(x) / x
                };
            }
            let mut nodes = anchors.to_vec();
            nodes.push(s);
            confluent_divdiff(law, nodes)
        }
    }
}

/// Confluent (Hermite) divided-difference table; clusters of nearly equal
/// nodes are snapped together so the derivative limit replaces a 0/0.
fn confluent_divdiff(law: &OffspringLaw, mut nodes: Vec<f64>) -> f64 {
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let snap = 1e-9;
    for i in 1..nodes.len() {
        if (nodes[i] - nodes[i - 1]).abs() < snap {
            nodes[i] = nodes[i - 1];
        }
    }
    let n = nodes.len();
    let mut row: Vec<f64> = nodes.iter().map(|&x| law.pgf(x)).collect();
    for len in 1..n {
        let mut next = vec![0.0; n - len];
        for i in 0..n - len {
            let xi = nodes[i];
            let xj = nodes[i + len];
            next[i] = if xj == xi {
                let fact: f64 = (1..=len).map(|k| k as f64).product();
                law.derivative(xi, len) / fact
            } else {
                (row[i + 1] - row[i]) / (xj - xi)
            };
        }
        row = next;
    }
    row[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_anchor_matches_definition() {
        let law = OffspringLaw::explicit(vec![0.2, 0.3, 0.5], 1.0).unwrap();
        let a = 0.4;
        let s = 0.7;
        let want = (law.pgf(s) - law.pgf(a)) / (s - a);
        assert!((nabla(&law, &[a], s) - want).abs() < 1e-14);
    }

    #[test]
    fn coincident_anchor_gives_derivative() {
        let law = OffspringLaw::explicit(vec![0.2, 0.3, 0.5], 1.0).unwrap();
        let a = 0.4;
        assert!((nabla(&law, &[a], a) - law.derivative(a, 1)).abs() < 1e-14);
        assert!((nabla(&law, &[a, a], a) - law.derivative(a, 2) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn lf_matches_generic_table() {
        let law = OffspringLaw::linear_fractional(0.25, 0.5, 1.0).unwrap();
        // Compare the LF closed form against an explicit truncation.
        let coeffs = law.coefficients(80).unwrap();
        let v = TruncatedSeries::new(coeffs).unwrap();
        let anchors = AnchorList::new(vec![0.3, 0.8]).unwrap();
        let via_series = v.multi_tail(&anchors, 0.5).unwrap();
        let via_closed = nabla(&law, &[0.3, 0.8], 0.5);
        assert!((via_series - via_closed).abs() < 1e-12);
    }

    #[test]
    fn tail_power_table_consistency() {
        let law = OffspringLaw::tail_power(0.5, 0.4, 2000, 1.0).unwrap();
        // ∇_a f(s) against the raw quotient away from coincidence.
        let a = 0.2;
        let s = 0.6;
        let want = (law.pgf(s) - law.pgf(a)) / (s - a);
        assert!((nabla(&law, &[a], s) - want).abs() < 1e-12);
        // Coincident: derivative convention.
        assert!((nabla(&law, &[s], s) - law.derivative(s, 1)).abs() < 1e-10);
    }
}
