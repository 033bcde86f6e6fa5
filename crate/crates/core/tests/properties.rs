//! Randomized invariants of the operator algebra and the law
//! constructions, checked over generated inputs.

use branchkit::law::{dual_law, fixed_points, success_law};
use branchkit::nabla::nabla;
use branchkit::{AnchorList, OffspringLaw, TruncatedSeries};
use proptest::prelude::*;

/// Random offspring law: 3-8 normalized weights, λ in [0.5, 2].
fn law_strategy() -> impl Strategy<Value = OffspringLaw> {
    (prop::collection::vec(0.01f64..1.0, 3..9), 0.5f64..2.0).prop_map(|(w, lambda)| {
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
        OffspringLaw::explicit(probs, lambda).unwrap()
    })
}

fn series_strategy() -> impl Strategy<Value = TruncatedSeries> {
    prop::collection::vec(0.0f64..1.0, 2..12).prop_map(|w| {
        let total: f64 = w.iter().sum::<f64>().max(1e-9);
        TruncatedSeries::new(w.iter().map(|x| x / total).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Conditioned-law consistency: the dual (extinction-conditioned) law
    /// has mean f'(q) and the success law has mean f'(1).
    #[test]
    fn dual_and_success_means(law in law_strategy()) {
        let fp = fixed_points(&law);
        prop_assume!(law.mean() > 1.05 && fp.q > 1e-3);
        let g = dual_law(&law).unwrap();
        let h = success_law(&law).unwrap();
        prop_assert!((g.derivative(1.0, 1) - law.derivative(fp.q, 1)).abs() < 1e-10);
        prop_assert!((h.derivative(1.0, 1) - law.derivative(1.0, 1)).abs() < 1e-10);
    }

    /// Fixed-point factorization: f(s) - s = (q - s)(1 - ∇_q f(s)).
    #[test]
    fn fixed_point_factorization(law in law_strategy(), s in 0.0f64..0.99) {
        let q = fixed_points(&law).q;
        let lhs = law.pgf(s) - s;
        let rhs = (q - s) * (1.0 - nabla(&law, &[q], s));
        prop_assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    /// Cross-anchor normalization: ∇_q f(1) = 1 when q < 1 < mean.
    #[test]
    fn cross_anchor_unit(law in law_strategy()) {
        let fp = fixed_points(&law);
        prop_assume!(law.mean() > 1.05);
        prop_assert!((nabla(&law, &[fp.q], 1.0) - 1.0).abs() < 1e-10);
    }

    /// Iterated tail transforms commute in the anchors.
    #[test]
    fn multi_tail_commutes(
        v in series_strategy(),
        a in 0.0f64..1.2,
        b in 0.0f64..1.2,
        s in 0.0f64..1.0,
    ) {
        prop_assume!(v.order() >= 2);
        let ab = v.multi_tail(&AnchorList::new(vec![a, b]).unwrap(), s).unwrap();
        let ba = v.multi_tail(&AnchorList::new(vec![b, a]).unwrap(), s).unwrap();
        prop_assert!((ab - ba).abs() < 1e-10, "{ab} vs {ba}");
    }

    /// Newton-form expansion over anchors reconstructs the series value.
    #[test]
    fn newton_expansion_reconstructs(
        v in series_strategy(),
        anchors in prop::collection::vec(0.0f64..1.0, 1..4),
        s in 0.0f64..1.0,
    ) {
        prop_assume!(v.order() >= anchors.len());
        let rebuilt = v.divided_expansion(&AnchorList::new(anchors).unwrap(), s).unwrap();
        let direct = v.eval(s).unwrap();
        prop_assert!((rebuilt - direct).abs() < 1e-10, "{rebuilt} vs {direct}");
    }
}
