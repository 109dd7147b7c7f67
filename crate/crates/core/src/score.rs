//! Buffer scoring functions.
//!
//! A buffer score quantifies how well-informed a node's placement decision
//! currently is; the buffer evicts the highest-scoring node first. All
//! scores are monotone non-decreasing under the engine's update events, so
//! every priority update is an increase-key.

use crate::{real_from_u64, Real};

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error("beta must be >= 1, got {0}")]
    BadBeta(String),
    #[error("eta must be in [0, 1], got {0}")]
    BadEta(String),
    #[error("theta must be >= 0, got {0}")]
    BadTheta(String),
    #[error("d_max must be >= 1")]
    BadDMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    /// Assigned neighbors ratio: fraction of neighbors already placed.
    Anr,
    /// Hub-aware assigned neighbors ratio: degree term plus degree-attenuated ANR.
    Haa,
    /// Neighborhood seen score: ANR plus a weighted buffered-neighbor term.
    Nss,
    /// Community-majority score: largest same-block assigned-neighbor fraction.
    Cms,
    /// Linear degree + ANR combination used as a comparison baseline.
    Cbs,
}

impl std::str::FromStr for ScoreKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "anr" => Ok(Self::Anr),
            "haa" => Ok(Self::Haa),
            "nss" => Ok(Self::Nss),
            "cms" => Ok(Self::Cms),
            "cbs" => Ok(Self::Cbs),
            _ => Err(format!("unknown score kind '{s}' (expected anr|haa|nss|cms|cbs)")),
        }
    }
}

impl std::fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Anr => "anr",
            Self::Haa => "haa",
            Self::Nss => "nss",
            Self::Cms => "cms",
            Self::Cbs => "cbs",
        };
        f.write_str(s)
    }
}

/// Parameters for a scoring function.
#[derive(Debug, Clone, Copy)]
pub struct ScoringConfig<F> {
    pub kind: ScoreKind,
    /// Weight of the neighborhood term (HAA, CBS).
    pub theta: F,
    /// Exponent of the degree term, >= 1 (HAA).
    pub beta: F,
    /// Weight of buffered neighbors in [0, 1] (NSS).
    pub eta: F,
    /// Degree normalization and hub threshold.
    pub d_max: u32,
}

impl<F: Real> ScoringConfig<F> {
    pub fn new(kind: ScoreKind, theta: F, beta: F, eta: F, d_max: u32) -> Result<Self, ScoreError> {
        if !(beta >= F::one()) {
            return Err(ScoreError::BadBeta(format!("{beta}")));
        }
        if !(eta >= F::zero() && eta <= F::one()) {
            return Err(ScoreError::BadEta(format!("{eta}")));
        }
        if !(theta >= F::zero()) {
            return Err(ScoreError::BadTheta(format!("{theta}")));
        }
        if d_max == 0 {
            return Err(ScoreError::BadDMax);
        }
        Ok(Self { kind, theta, beta, eta, d_max })
    }

    /// The default configuration: HAA with beta = 2 and theta = 0.75.
    pub fn haa_default(d_max: u32) -> Self {
        Self {
            kind: ScoreKind::Haa,
            theta: crate::real_from_f64(0.75),
            beta: crate::real_from_f64(2.0),
            eta: crate::real_from_f64(0.5),
            d_max,
        }
    }

    pub fn with_kind(mut self, kind: ScoreKind) -> Self {
        self.kind = kind;
        self
    }
}

/// Per-node counters a score is computed from.
#[derive(Debug, Clone, Copy)]
pub struct NodeScoreInputs<'a> {
    pub degree: u32,
    /// Neighbors with a committed or pending block assignment.
    pub assigned_neighbors: u32,
    /// Neighbors currently held in the buffer.
    pub buffered_neighbors: u32,
    /// Committed assigned-neighbor counts per block; only CMS reads this.
    /// Pending neighbors are counted in `assigned_neighbors` but appear in
    /// no block here until their batch commits.
    pub per_block_assigned: &'a [u32],
}

impl<'a> NodeScoreInputs<'a> {
    pub fn new(degree: u32, assigned: u32, buffered: u32, per_block: &'a [u32]) -> Self {
        debug_assert!(assigned + buffered <= degree);
        debug_assert!(per_block.iter().sum::<u32>() <= assigned);
        Self {
            degree,
            assigned_neighbors: assigned,
            buffered_neighbors: buffered,
            per_block_assigned: per_block,
        }
    }
}

/// Buffer score for the configured kind. Degree-0 nodes score 0 for every
/// kind (the ratios have empty numerators and denominators).
pub fn score<F: Real>(cfg: &ScoringConfig<F>, input: &NodeScoreInputs<'_>) -> F {
    if input.degree == 0 {
        return F::zero();
    }
    let degree = real_from_u64::<F>(input.degree as u64);
    let assigned = real_from_u64::<F>(input.assigned_neighbors as u64);
    let anr = assigned / degree;
    match cfg.kind {
        ScoreKind::Anr => anr,
        ScoreKind::Haa => {
            let d_hat = (degree / real_from_u64::<F>(cfg.d_max as u64)).min(F::one());
            d_hat.powf(cfg.beta) + cfg.theta * (F::one() - d_hat) * anr
        }
        ScoreKind::Nss => {
            let buffered = real_from_u64::<F>(input.buffered_neighbors as u64);
            (assigned + cfg.eta * buffered) / degree
        }
        ScoreKind::Cms => {
            let best = input.per_block_assigned.iter().copied().max().unwrap_or(0);
            real_from_u64::<F>(best as u64) / degree
        }
        ScoreKind::Cbs => degree / real_from_u64::<F>(cfg.d_max as u64) + cfg.theta * anr,
    }
}

/// Tight upper bound on [`score`] for degrees within the buffering regime
/// (degree <= d_max). Sizes the bucket queue.
///
/// For HAA the bound is the maximum of `x^beta + theta*(1-x)` over x in
/// [0, 1]; the function is convex in x, so the maximum sits at an endpoint:
/// `max(1, theta)`.
pub fn max_score<F: Real>(cfg: &ScoringConfig<F>) -> F {
    match cfg.kind {
        ScoreKind::Anr | ScoreKind::Nss | ScoreKind::Cms => F::one(),
        ScoreKind::Haa => F::one().max(cfg.theta),
        ScoreKind::Cbs => F::one() + cfg.theta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg(kind: ScoreKind) -> ScoringConfig<f64> {
        ScoringConfig::new(kind, 0.75, 2.0, 0.5, 100).unwrap()
    }

    fn inputs<'a>(degree: u32, assigned: u32, buffered: u32, pb: &'a [u32]) -> NodeScoreInputs<'a> {
        NodeScoreInputs::new(degree, assigned, buffered, pb)
    }

    #[test]
    fn anr_is_assigned_fraction() {
        assert_abs_diff_eq!(score(&cfg(ScoreKind::Anr), &inputs(4, 2, 0, &[])), 0.5);
    }

    #[test]
    fn haa_degree_at_threshold_saturates() {
        // d_hat = 1: the ANR term vanishes regardless of ANR
        let c = cfg(ScoreKind::Haa);
        assert_abs_diff_eq!(score(&c, &inputs(100, 100, 0, &[])), 1.0);
        assert_abs_diff_eq!(score(&c, &inputs(100, 0, 0, &[])), 1.0);
        // clamp: degree above the threshold still saturates at 1
        assert_abs_diff_eq!(score(&c, &inputs(250, 0, 0, &[])), 1.0);
    }

    #[test]
    fn haa_interior_point() {
        // d_hat = 0.5, ANR = 1: 0.25 + 0.75 * 0.5 * 1 = 0.625
        let c = cfg(ScoreKind::Haa);
        assert_abs_diff_eq!(score(&c, &inputs(50, 50, 0, &[])), 0.625);
    }

    #[test]
    fn cbs_sums_degree_and_anr_terms() {
        let c = ScoringConfig::new(ScoreKind::Cbs, 2.0, 2.0, 0.5, 100).unwrap();
        assert_abs_diff_eq!(score(&c, &inputs(100, 100, 0, &[])), 3.0);
    }

    #[test]
    fn cms_takes_block_maximum() {
        assert_abs_diff_eq!(score(&cfg(ScoreKind::Cms), &inputs(8, 4, 0, &[3, 1, 0])), 3.0 / 8.0);
    }

    #[test]
    fn nss_weights_buffered_neighbors() {
        assert_abs_diff_eq!(score(&cfg(ScoreKind::Nss), &inputs(4, 1, 2, &[])), 0.5);
    }

    #[test]
    fn degree_zero_scores_zero_for_all_kinds() {
        for kind in [ScoreKind::Anr, ScoreKind::Haa, ScoreKind::Nss, ScoreKind::Cms, ScoreKind::Cbs] {
            assert_eq!(score(&cfg(kind), &inputs(0, 0, 0, &[])), 0.0);
        }
    }

    #[test]
    fn max_score_values() {
        assert_eq!(max_score(&cfg(ScoreKind::Anr)), 1.0);
        assert_eq!(max_score(&cfg(ScoreKind::Haa)), 1.0);
        let c = ScoringConfig::new(ScoreKind::Cbs, 2.0, 2.0, 0.5, 100).unwrap();
        assert_eq!(max_score(&c), 3.0);
        let c = ScoringConfig::new(ScoreKind::Haa, 1.5, 2.0, 0.5, 100).unwrap();
        assert_eq!(max_score(&c), 1.5);
    }

    // Maximize the HAA bound expression by brute-force grid and compare with
    // the analytic endpoint maximum.
    #[test]
    fn haa_max_matches_grid_search() {
        for (theta, beta) in [(0.75, 2.0), (2.0, 2.0), (0.5, 1.0), (1.5, 3.0), (0.0, 4.0)] {
            let c = ScoringConfig::new(ScoreKind::Haa, theta, beta, 0.5, 100).unwrap();
            let grid_max = (0..=10_000)
                .map(|i| {
                    let x = i as f64 / 10_000.0;
                    x.powf(beta) + theta * (1.0 - x)
                })
                .fold(f64::MIN, f64::max);
            let analytic: f64 = max_score(&c);
            assert!((analytic - grid_max).abs() < 1e-6, "theta={theta} beta={beta}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(ScoringConfig::<f64>::new(ScoreKind::Haa, 0.75, 0.5, 0.5, 100).is_err());
        assert!(ScoringConfig::<f64>::new(ScoreKind::Nss, 0.75, 2.0, 1.5, 100).is_err());
        assert!(ScoringConfig::<f64>::new(ScoreKind::Cbs, -0.1, 2.0, 0.5, 100).is_err());
        assert!(ScoringConfig::<f64>::new(ScoreKind::Anr, 0.75, 2.0, 0.5, 0).is_err());
    }

    // HAA separation: the pure-degree score at d_hat = 1 dominates every
    // lower-degree zero-ANR score, and at low degree the ANR slope is steep.
    #[test]
    fn haa_separates_hubs_and_informed_nodes() {
        let c = cfg(ScoreKind::Haa);
        let hub = score(&c, &inputs(100, 0, 0, &[]));
        for d in 1..=100 {
            assert!(hub >= score(&c, &inputs(d, 0, 0, &[])) - 1e-12);
        }
        // fixed d_hat <= 0.25: strictly increasing in ANR with slope >= 0.5625
        for d in [4u32, 12, 25] {
            let lo = score(&c, &inputs(d, 0, 0, &[]));
            let hi = score(&c, &inputs(d, d, 0, &[]));
            let slope = hi - lo; // ANR went from 0 to 1
            assert!(slope >= 0.5625 - 1e-12, "degree {d} slope {slope}");
        }
    }

    proptest! {
        // Incrementing assigned_neighbors never decreases any score.
        #[test]
        fn monotone_under_assignment(
            degree in 1u32..=100,
            assigned in 0u32..100,
            buffered in 0u32..100,
            block in 0usize..4,
            theta in 0.0f64..3.0,
            beta in 1.0f64..4.0,
            eta in 0.0f64..1.0,
        ) {
            let assigned = assigned.min(degree.saturating_sub(1));
            let buffered = buffered.min(degree - assigned - 1);
            let mut pb = [0u32; 4];
            pb[block] = assigned;
            for kind in [ScoreKind::Anr, ScoreKind::Haa, ScoreKind::Nss, ScoreKind::Cms, ScoreKind::Cbs] {
                let c = ScoringConfig::new(kind, theta, beta, eta, 100).unwrap();
                let before = score(&c, &NodeScoreInputs::new(degree, assigned, buffered, &pb));
                let mut pb2 = pb;
                pb2[block] += 1;
                let after = score(&c, &NodeScoreInputs::new(degree, assigned + 1, buffered, &pb2));
                prop_assert!(after >= before - 1e-12, "{kind:?}: {before} -> {after}");
            }
        }

        // Every score stays within the sizing bound for degrees <= d_max.
        #[test]
        fn scores_bounded_by_max_score(
            degree in 0u32..=100,
            assigned in 0u32..=100,
            buffered in 0u32..=100,
            theta in 0.0f64..3.0,
            beta in 1.0f64..4.0,
            eta in 0.0f64..1.0,
        ) {
            let assigned = assigned.min(degree);
            let buffered = buffered.min(degree - assigned);
            let pb = [assigned, 0, 0, 0];
            for kind in [ScoreKind::Anr, ScoreKind::Haa, ScoreKind::Nss, ScoreKind::Cms, ScoreKind::Cbs] {
                let c = ScoringConfig::new(kind, theta, beta, eta, 100).unwrap();
                let s = score(&c, &NodeScoreInputs::new(degree, assigned, buffered, &pb));
                prop_assert!(s <= max_score(&c) + 1e-12);
                prop_assert!(s >= 0.0);
            }
        }
    }
}
