//! Event-driven Monte Carlo simulation of the continuous-time Markov
//! branching process: the independent statistical oracle for the analytic
//! routes.
//!
//! With `k` particles alive the next death occurs after an `Exp(kλ)` race;
//! the dying particle is replaced by `ν ~ {p_k}` offspring drawn from an
//! alias table built once per law. Replicates are independent, each on its
//! own counter-derived RNG stream, so results are reproducible and
//! merge-order independent.

use crate::error::{Error, Result};
use crate::law::{fixed_points, LawSpec, OffspringLaw, Regime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default abort guard on the population size.
pub const DEFAULT_POPULATION_CAP: u64 = 10_000_000;

/// Default top bucket of the reported histogram.
pub const DEFAULT_HISTOGRAM_MAX: usize = 256;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    /// Offspring law specification (re-validated on use).
    pub law: LawSpec,
    /// Observation horizon.
    pub t: f64,
    pub replicates: u64,
    pub seed: u64,
    /// Population size at which a replicate is censored.
    pub population_cap: u64,
    /// Histogram buckets `0..=histogram_max`; larger values pool into the
    /// overflow mass.
    pub histogram_max: usize,
    /// Horizon used by extinction-conditioned sampling to decide the fate
    /// of a path; `None` picks a multiple of the mean lifetime.
    pub t_max: Option<f64>,
}

impl SimConfig {
    pub fn new(law: LawSpec, t: f64, replicates: u64, seed: u64) -> Self {
        Self {
            law,
            t,
            replicates,
            seed,
            population_cap: DEFAULT_POPULATION_CAP,
            histogram_max: DEFAULT_HISTOGRAM_MAX,
            t_max: None,
        }
    }

    fn validate(&self) -> Result<OffspringLaw> {
        if self.replicates == 0 {
            return Err(Error::Domain("need at least one replicate".into()));
        }
        if self.population_cap == 0 {
            return Err(Error::Domain("population cap must be >= 1".into()));
        }
        if !(self.t >= 0.0) {
            return Err(Error::Domain("negative horizon".into()));
        }
        OffspringLaw::from_spec(&self.law)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimStats {
    pub seed: u64,
    pub t: f64,
    pub replicates: u64,
    /// Empirical `P(Z_t = k)` for `k <= histogram_max`; together with
    /// `overflow` the mass is exactly 1.
    pub histogram: Vec<f64>,
    /// Mass above the top histogram bucket, including censored replicates.
    pub overflow: f64,
    pub survival_frequency: f64,
    /// Sample mean / variance of `Z_t` over uncensored replicates.
    pub mean: f64,
    pub variance: f64,
    /// Sample mean / variance of the martingale proxy `Z_t/M_t`.
    pub w_proxy_mean: f64,
    pub w_proxy_variance: f64,
    /// Replicates that hit the population cap (reported, never dropped).
    pub censored: u64,
    pub warning: Option<String>,
}

/// Alias table for O(1) sampling from a finite discrete distribution.
struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    fn new(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::Degenerate("alias table needs non-negative weights".into()));
        }
        let n = weights.len();
        let mut prob: Vec<f64> = weights.iter().map(|&w| w * n as f64 / total).collect();
        let mut alias = vec![0usize; n];
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, &p) in prob.iter().enumerate() {
            if p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l;
            prob[l] -= 1.0 - prob[s];
            if prob[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        for &i in small.iter().chain(large.iter()) {
            prob[i] = 1.0;
        }
        Ok(Self { prob, alias })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let i = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }
}

fn offspring_table(law: &OffspringLaw) -> Result<AliasTable> {
    let cutoff = law.tail_cutoff(1e-12, 200_000);
    AliasTable::new(&law.coefficients(cutoff)?)
}

/// Per-replicate RNG: one ChaCha stream per replicate index, all derived
/// from the config seed. The derivation is part of the external contract.
fn stream_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// One path of the exponential-race chain up to time `t`. Returns the
/// population at `t`, or `None` if the cap was hit first.
fn run_path<R: Rng>(
    rng: &mut R,
    table: &AliasTable,
    lambda: f64,
    t: f64,
    cap: u64,
) -> Option<u64> {
    let mut z: u64 = 1;
    let mut now = 0.0;
    while z > 0 {
        if z >= cap {
            return None;
        }
        let rate = z as f64 * lambda;
        let u: f64 = rng.gen();
        now += -(1.0 - u).ln() / rate;
        if now > t {
            break;
        }
        z = z - 1 + table.sample(rng) as u64;
    }
    Some(z)
}

/// Run closure `f` over the replicate indices on the rayon pool, honoring
/// the `BRANCHKIT_THREADS` cap.
fn replicate_outcomes<T: Send, F: Fn(u64) -> T + Sync>(replicates: u64, f: F) -> Vec<T> {
    let work = || (0..replicates).into_par_iter().map(&f).collect();
    match std::env::var("BRANCHKIT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(n) if n >= 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(work))
            .unwrap_or_else(|_| work()),
        _ => work(),
    }
}

fn accumulate(
    config: &SimConfig,
    outcomes: &[Option<u64>],
    m_t: f64,
    censor_warning_frac: f64,
) -> SimStats {
    let n = outcomes.len() as f64;
    let mut histogram = vec![0.0; config.histogram_max + 1];
    let mut overflow = 0.0;
    let mut censored = 0u64;
    let mut survivors = 0u64;
    let (mut sum, mut sum2) = (0.0, 0.0);
    let mut kept = 0u64;
    for out in outcomes {
        match out {
            None => {
                censored += 1;
                overflow += 1.0;
                survivors += 1;
            }
            Some(z) => {
                if *z > 0 {
                    survivors += 1;
                }
                if (*z as usize) <= config.histogram_max {
                    histogram[*z as usize] += 1.0;
                } else {
                    overflow += 1.0;
                }
                let zf = *z as f64;
                sum += zf;
                sum2 += zf * zf;
                kept += 1;
            }
        }
    }
    for h in histogram.iter_mut() {
        *h /= n;
    }
    overflow /= n;
    let mean = if kept > 0 { sum / kept as f64 } else { f64::NAN };
    let variance = if kept > 1 {
        (sum2 - sum * sum / kept as f64) / (kept as f64 - 1.0)
    } else {
        f64::NAN
    };
    let warning = (censored as f64 > censor_warning_frac * n).then(|| {
        format!("{censored} of {} replicates censored at the population cap", outcomes.len())
    });
    SimStats {
        seed: config.seed,
        t: config.t,
        replicates: config.replicates,
        histogram,
        overflow,
        survival_frequency: survivors as f64 / n,
        mean,
        variance,
        w_proxy_mean: mean / m_t,
        w_proxy_variance: variance / (m_t * m_t),
        censored,
        warning,
    }
}

/// Simulate `Z_t` over independent replicates.
pub fn simulate(config: &SimConfig) -> Result<SimStats> {
    let law = config.validate()?;
    let table = offspring_table(&law)?;
    let lambda = law.lambda();
    let (t, cap) = (config.t, config.population_cap);
    let outcomes = replicate_outcomes(config.replicates, |i| {
        run_path(&mut stream_rng(config.seed, i), &table, lambda, t, cap)
    });
    let m_t = crate::evolve::mean(config.t, &law);
    Ok(accumulate(config, &outcomes, m_t, 0.01))
}

/// Sample `Z_t` conditioned on eventual extinction: each path runs to
/// extinction or to the censoring horizon `t_max`; only paths extinct by
/// `t_max` contribute. The conditional histogram converges to the law of
/// the dual process.
pub fn extinction_conditioned_sample(config: &SimConfig) -> Result<SimStats> {
    let law = config.validate()?;
    let fp = fixed_points(&law);
    if fp.regime != Regime::Supercritical || !(fp.q > 0.0) {
        return Err(Error::Domain(
            "extinction conditioning needs a supercritical law with q in (0, 1)".into(),
        ));
    }
    let t_max = config.t_max.unwrap_or(config.t + 40.0 / law.lambda());
    if t_max < config.t {
        return Err(Error::Domain("t_max must not precede the observation time".into()));
    }
    let table = offspring_table(&law)?;
    let lambda = law.lambda();
    let (t, cap) = (config.t, config.population_cap);
    // Once the extinction probability q^z drops below ~1e-26 the path's
    // fate is settled: stop it as a survivor instead of simulating its
    // (exponentially many) remaining events.
    let sure_survival = ((60.0 / (1.0 / fp.q).ln()).ceil() as u64).max(2).min(cap);

    // Outcome: Some(z at t) if extinct by t_max, None otherwise.
    let outcomes = replicate_outcomes(config.replicates, |i| {
        let rng = &mut stream_rng(config.seed, i);
        let mut z: u64 = 1;
        let mut now = 0.0;
        let mut z_at_t: Option<u64> = if t == 0.0 { Some(1) } else { None };
        while z > 0 {
            if z >= sure_survival {
                // Capped or almost-surely surviving path; drop it.
                return None;
            }
            let u: f64 = rng.gen();
            let next = now + -(1.0 - u).ln() / (z as f64 * lambda);
            if z_at_t.is_none() && next > t {
                z_at_t = Some(z);
            }
            if next > t_max {
                return None; // fate ambiguous at the censoring horizon
            }
            now = next;
            z = z - 1 + table.sample(rng) as u64;
        }
        if z_at_t.is_none() {
            z_at_t = Some(0); // extinct before t
        }
        z_at_t
    });

    let extinct: Vec<Option<u64>> = outcomes.iter().filter_map(|o| o.map(Some)).collect();
    if extinct.is_empty() {
        return Err(Error::Degenerate("no replicate went extinct before t_max".into()));
    }
    let n = config.replicates as f64;
    let mut stats = accumulate(config, &extinct, 1.0, f64::INFINITY);
    // Survival-complement frequency: fraction of all replicates that did
    // not die out, an estimator of 1 - q.
    stats.survival_frequency = 1.0 - extinct.len() as f64 / n;
    let ambiguous = config.replicates - extinct.len() as u64;
    // Expected non-extinct fraction is 1 - q; flag only genuine ambiguity.
    let excess = ambiguous as f64 / n - (1.0 - fp.q);
    if excess > 0.05 {
        stats.warning =
            Some(format!("{ambiguous} paths undecided at t_max = {t_max} (excess {excess:.3})"));
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::scalar_f;

    fn explicit_235_spec() -> LawSpec {
        LawSpec::Explicit { probs: vec![0.2, 0.3, 0.5], lambda: 1.0 }
    }

    fn law_of(spec: &LawSpec) -> OffspringLaw {
        OffspringLaw::from_spec(spec).unwrap()
    }

    #[test]
    fn zero_horizon_is_deterministic() {
        let cfg = SimConfig::new(explicit_235_spec(), 0.0, 500, 7);
        let stats = simulate(&cfg).unwrap();
        assert_eq!(stats.histogram[1], 1.0);
        assert_eq!(stats.survival_frequency, 1.0);
        assert_eq!(stats.mean, 1.0);
    }

    #[test]
    fn seed_determinism() {
        let cfg = SimConfig::new(explicit_235_spec(), 1.5, 2_000, 42);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a, b);
        let other = simulate(&SimConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn histogram_mass_is_one() {
        let cfg = SimConfig::new(explicit_235_spec(), 2.0, 5_000, 3);
        let s = simulate(&cfg).unwrap();
        let mass: f64 = s.histogram.iter().sum::<f64>() + s.overflow;
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(s.histogram.iter().all(|&h| (0.0..=1.0).contains(&h)));
    }

    #[test]
    fn extinction_probability_matches_ode() {
        let spec = explicit_235_spec();
        let n = 40_000u64;
        let cfg = SimConfig::new(spec.clone(), 1.0, n, 1234);
        let stats = simulate(&cfg).unwrap();
        let p0 = scalar_f(1.0, 0.0, &law_of(&spec), 1e-12).unwrap().value;
        let sigma = (p0 * (1.0 - p0) / n as f64).sqrt();
        let diff = (stats.histogram[0] - p0).abs();
        assert!(diff < 4.0 * sigma, "diff {diff} vs sigma {sigma}");
    }

    #[test]
    fn mean_and_martingale_proxy() {
        let spec = explicit_235_spec();
        let n = 40_000u64;
        let cfg = SimConfig::new(spec.clone(), 2.0, n, 99);
        let stats = simulate(&cfg).unwrap();
        let m_t = crate::evolve::mean(2.0, &law_of(&spec));
        let se = (stats.variance / n as f64).sqrt();
        assert!((stats.mean - m_t).abs() < 4.0 * se, "{} vs {m_t}", stats.mean);
        let se_w = (stats.w_proxy_variance / n as f64).sqrt();
        assert!((stats.w_proxy_mean - 1.0).abs() < 4.0 * se_w);
    }

    #[test]
    fn json_round_trip() {
        let cfg = SimConfig::new(explicit_235_spec(), 0.5, 200, 5);
        let stats = simulate(&cfg).unwrap();
        let js = serde_json::to_string(&stats).unwrap();
        let back: SimStats = serde_json::from_str(&js).unwrap();
        assert_eq!(stats, back);
    }

    #[test]
    fn conditioned_sample_estimates_q() {
        let spec = explicit_235_spec();
        let n = 40_000u64;
        let cfg = SimConfig::new(spec, 2.0, n, 2024);
        let stats = extinction_conditioned_sample(&cfg).unwrap();
        // Complement frequency estimates 1 - q = 0.6.
        let sigma = (0.4 * 0.6 / n as f64).sqrt();
        assert!((stats.survival_frequency - 0.6).abs() < 4.0 * sigma + 0.01);
        assert!(stats.warning.is_none());
    }

    #[test]
    fn conditioned_histogram_matches_dual_law() {
        // Z_t | extinction has the law of the dual process.
        let spec = explicit_235_spec();
        let n = 30_000u64;
        let cfg = SimConfig::new(spec.clone(), 1.0, n, 77);
        let stats = extinction_conditioned_sample(&cfg).unwrap();
        let dual = crate::law::dual_law(&law_of(&spec)).unwrap();
        let d = crate::evolve::series_f(1.0, 32, &dual, 1e-12).unwrap();
        // Effective conditional sample size.
        let m = n as f64 * (1.0 - stats.survival_frequency);
        for k in 0..6 {
            let want = d.probs[k];
            let sigma = (want * (1.0 - want) / m).sqrt();
            let diff = (stats.histogram[k] - want).abs();
            assert!(diff < 4.0 * sigma + 1e-3, "k={k}: diff {diff}, sigma {sigma}");
        }
    }

    #[test]
    fn conditioning_rejects_p0_zero() {
        let spec = LawSpec::Explicit { probs: vec![0.0, 0.4, 0.6], lambda: 1.0 };
        let cfg = SimConfig::new(spec, 1.0, 100, 1);
        assert!(extinction_conditioned_sample(&cfg).is_err());
    }

    #[test]
    fn alias_table_frequencies() {
        let table = AliasTable::new(&[0.2, 0.3, 0.5]).unwrap();
        let mut rng = stream_rng(11, 0);
        let n = 200_000;
        let mut counts = [0u32; 3];
        for _ in 0..n {
            counts[table.sample(&mut rng)] += 1;
        }
        for (i, &want) in [0.2, 0.3, 0.5].iter().enumerate() {
            let freq = counts[i] as f64 / n as f64;
            assert!((freq - want).abs() < 0.005, "i={i}: {freq}");
        }
    }
}
