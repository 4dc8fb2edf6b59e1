//! Scenario features, online normalization and the logistic scorer.

use serde::{Deserialize, Serialize};

use crate::instance::{ModuleLayout, NetworkInstance};
use crate::subproblem::flow_column;

pub const NUM_FEATURES: usize = 8;

/// Feature names in vector order.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "capacity",
    "flow",
    "utilization",
    "betweenness",
    "avg_violation",
    "reliability",
    "total_share",
    "staleness",
];

/// `[κ, ψ, μ, β, ν̄, ρ, τ, ζ]` of one scenario.
pub type FeatureVector = [f64; NUM_FEATURES];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioHistory {
    /// Iterations in which the scenario produced a cut.
    pub cut_iterations: Vec<u64>,
    /// Number of iterations in which the scenario was examined.
    pub examined: u64,
    pub last_examined: Option<u64>,
    pub violation_sum: f64,
}

impl ScenarioHistory {
    pub fn cuts(&self) -> u64 {
        self.cut_iterations.len() as u64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStats {
    pub scenarios: Vec<ScenarioHistory>,
    pub total_cuts: u64,
}

impl ScenarioStats {
    pub fn new(count: usize) -> Self {
        ScenarioStats {
            scenarios: vec![ScenarioHistory::default(); count],
            total_cuts: 0,
        }
    }

    /// Records an examination of `scenario` at `iteration`; `violation` is
    /// `Some` when it produced a cut.
    pub fn record(&mut self, scenario: usize, iteration: u64, violation: Option<f64>) {
        let h = &mut self.scenarios[scenario];
        h.examined += 1;
        h.last_examined = Some(h.last_examined.map_or(iteration, |l| l.max(iteration)));
        if let Some(nu) = violation {
            h.cut_iterations.push(iteration);
            h.violation_sum += nu;
            self.total_cuts += 1;
        }
    }

    /// Clears every historical input of the features.
    pub fn reset_history(&mut self) {
        for h in &mut self.scenarios {
            *h = ScenarioHistory::default();
        }
        self.total_cuts = 0;
    }
}

/// Everything about the current master solution the features need.
pub struct MasterView<'a> {
    pub instance: &'a NetworkInstance,
    pub layout: &'a ModuleLayout,
    pub design: &'a [u32],
    /// Base-case flows `f[d][a]`, indexed by [`flow_column`].
    pub base_flows: &'a [f64],
    pub betweenness: &'a [f64],
}

/// Raw features of `scenario` at iteration `t`.
///
/// Features are defined for single-edge failures; for larger failure sets
/// the first failed edge is used.
pub fn extract_features(scenario: usize, view: &MasterView<'_>, stats: &ScenarioStats, t: u64) -> FeatureVector {
    let inst = view.instance;
    let edge = inst.scenarios[scenario].failed_edges[0];
    debug_assert_eq!(inst.scenarios[scenario].failed_edges.len(), 1);
    let kappa = inst.capacity(view.layout, view.design, edge);
    let arcs = inst.arc_count();
    let psi: f64 = (0..inst.demands.len())
        .map(|d| {
            view.base_flows[flow_column(arcs, d, 2 * edge)].abs()
                + view.base_flows[flow_column(arcs, d, 2 * edge + 1)].abs()
        })
        .sum();
    let mu = if kappa > 0.0 { psi / kappa } else { 0.0 };
    let h = &stats.scenarios[scenario];
    let cuts = h.cuts() as f64;
    let avg_violation = if h.cuts() > 0 { h.violation_sum / cuts } else { 0.0 };
    let reliability = if h.examined > 0 { cuts / h.examined as f64 } else { 0.0 };
    let share = if stats.total_cuts > 0 {
        cuts / stats.total_cuts as f64
    } else {
        0.0
    };
    let staleness = h.last_examined.map_or(0.0, |l| t.saturating_sub(l) as f64);
    [
        kappa,
        psi,
        mu,
        view.betweenness[edge],
        avg_violation,
        reliability,
        share,
        staleness,
    ]
}

/// Welford's running mean and second central moment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn update(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Population variance `M2 / n`, zero before the first sample.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }
}

pub const NORMALIZATION_EPS: f64 = 1e-8;

/// `σ(z) = 1 / (1 + e^-z)`, evaluated without overflow and kept strictly
/// inside (0, 1).
pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-700.0, 700.0);
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn record(&mut self, probability: f64, outcome: bool) {
        match (probability >= 0.5, outcome) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

/// Online logistic regression with L2 regularization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: FeatureVector,
    pub bias: f64,
    pub learning_rate: f64,
    pub regularization: f64,
    pub normalizers: [Welford; NUM_FEATURES],
    /// Classification record of every training example at threshold 0.5.
    pub confusion: Confusion,
}

impl LogisticModel {
    pub const DEFAULT_LEARNING_RATE: f64 = 0.075;
    pub const DEFAULT_REGULARIZATION: f64 = 0.02;

    pub fn new(learning_rate: f64, regularization: f64) -> Self {
        LogisticModel {
            weights: [0.0; NUM_FEATURES],
            bias: 0.0,
            learning_rate,
            regularization,
            normalizers: [Welford::default(); NUM_FEATURES],
            confusion: Confusion::default(),
        }
    }

    pub fn welford_update(&mut self, raw: &FeatureVector) {
        for (w, &x) in self.normalizers.iter_mut().zip(raw) {
            w.update(x);
        }
    }

    /// `(x - mean) / sqrt(var + eps)` per feature; features without any
    /// sample yet normalize to 0.
    pub fn normalize(&self, raw: &FeatureVector) -> FeatureVector {
        let mut out = [0.0; NUM_FEATURES];
        for ((o, w), &x) in out.iter_mut().zip(&self.normalizers).zip(raw) {
            if w.count > 0 {
                *o = (x - w.mean) / (w.variance() + NORMALIZATION_EPS).sqrt();
            }
        }
        out
    }

    pub fn logit(&self, phi: &FeatureVector) -> f64 {
        self.weights.iter().zip(phi).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }

    pub fn predict(&self, phi: &FeatureVector) -> f64 {
        sigmoid(self.logit(phi))
    }

    /// Regularized logistic loss of one example, whose gradient the update
    /// in [`LogisticModel::train`] follows.
    pub fn loss(&self, phi: &FeatureVector, outcome: bool) -> f64 {
        let z = self.logit(phi);
        // log(1 + e^z) - y z, written stably
        let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        let nll = softplus - if outcome { z } else { 0.0 };
        nll + 0.5 * self.regularization * self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Gradient of [`LogisticModel::loss`] with respect to `(w, b)`.
    pub fn gradient(&self, phi: &FeatureVector, outcome: bool) -> (FeatureVector, f64) {
        let err = self.predict(phi) - if outcome { 1.0 } else { 0.0 };
        let mut gw = [0.0; NUM_FEATURES];
        for ((g, x), w) in gw.iter_mut().zip(phi).zip(&self.weights) {
            *g = err * x + self.regularization * w;
        }
        (gw, err)
    }

    /// One stochastic gradient step on a normalized example.
    pub fn train(&mut self, phi: &FeatureVector, outcome: bool) {
        let predicted = self.predict(phi);
        self.confusion.record(predicted, outcome);
        let (gw, gb) = self.gradient(phi, outcome);
        for (w, g) in self.weights.iter_mut().zip(gw) {
            *w -= self.learning_rate * g;
        }
        self.bias -= self.learning_rate * gb;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(2.0) - 0.880_797_077_977_882_3).abs() < 1e-15);
        assert!((sigmoid(-2.0) - (1.0 - sigmoid(2.0))).abs() < 1e-15);
        for z in [-1e6, -800.0, -700.0, 700.0, 1e6, 40.0] {
            let p = sigmoid(z);
            assert!(p > 0.0 && p < 1.0, "σ({z}) = {p}");
        }
    }

    #[test]
    fn welford_small_stream() {
        let mut w = Welford::default();
        for x in [1.0, 2.0, 3.0] {
            w.update(x);
        }
        assert_eq!(w.mean, 2.0);
        assert!((w.variance() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_sample_normalizes_to_zero() {
        let mut m = LogisticModel::new(0.075, 0.02);
        let raw = [3.0, 1.0, 0.5, 0.2, 7.0, 0.3, 0.1, 4.0];
        m.welford_update(&raw);
        assert_eq!(m.normalize(&raw), [0.0; NUM_FEATURES]);
        assert_eq!(m.normalize(&raw), m.normalize(&raw));
    }

    #[test]
    fn first_update_from_zero() {
        let mut m = LogisticModel::new(0.075, 0.02);
        m.train(&[0.0; NUM_FEATURES], true);
        assert_eq!(m.weights, [0.0; NUM_FEATURES]);
        assert_eq!(m.bias, 0.0375);
    }

    #[test]
    fn zero_error_without_regularization_is_a_fixed_point() {
        // σ(0) = 0.5 can't match a {0,1} label, so use the loss gradient
        // directly at a point where the error term vanishes
        let mut m = LogisticModel::new(0.075, 0.0);
        m.weights = [0.3; NUM_FEATURES];
        let phi = [0.0; NUM_FEATURES];
        let (gw, _) = m.gradient(&phi, true);
        assert_eq!(gw, [0.0; NUM_FEATURES]);
    }

    #[test]
    fn pure_decay() {
        let mut m = LogisticModel::new(0.075, 0.02);
        m.weights = [1.0, -2.0, 0.5, 0.0, 3.0, 1.0, 1.0, 1.0];
        m.bias = 0.0;
        let before = m.weights;
        // φ = 0 leaves only the decay term on w
        m.train(&[0.0; NUM_FEATURES], false);
        for (a, b) in m.weights.iter().zip(before) {
            assert!((a - b * (1.0 - 0.075 * 0.02)).abs() < 1e-15);
        }
    }

    #[test]
    fn reset_keeps_model_untouched() {
        let mut stats = ScenarioStats::new(2);
        stats.record(0, 1, Some(2.0));
        stats.record(1, 1, None);
        let mut m = LogisticModel::new(0.075, 0.02);
        m.welford_update(&[1.0; NUM_FEATURES]);
        m.train(&[1.0; NUM_FEATURES], true);
        let snapshot = m.clone();
        stats.reset_history();
        assert_eq!(stats, ScenarioStats::new(2));
        assert_eq!(m, snapshot);
    }

    #[test]
    fn historical_features() {
        let inst = crate::instance::fixtures::triangle();
        let layout = inst.module_layout();
        let beta = crate::instance::edge_betweenness(&inst);
        let flows = vec![0.0; inst.demands.len() * inst.arc_count()];
        let view = MasterView {
            instance: &inst,
            layout: &layout,
            design: &[0, 0, 0],
            base_flows: &flows,
            betweenness: &beta,
        };
        let mut stats = ScenarioStats::new(3);
        let phi = extract_features(0, &view, &stats, 1);
        assert_eq!(phi, [0.0, 0.0, 0.0, beta[0], 0.0, 0.0, 0.0, 0.0]);
        stats.record(0, 4, Some(1.0));
        stats.record(0, 5, None);
        stats.record(0, 6, None);
        stats.record(0, 7, None);
        stats.record(1, 7, Some(3.0));
        let phi = extract_features(0, &view, &stats, 10);
        assert_eq!(phi[4], 1.0);
        assert_eq!(phi[5], 0.25);
        assert_eq!(phi[6], 0.5);
        assert_eq!(phi[7], 3.0);
        let share: f64 = (0..3).map(|s| extract_features(s, &view, &stats, 10)[6]).sum();
        assert!((share - 1.0).abs() < 1e-15);
    }

    #[test]
    fn edge_features_follow_master_solution() {
        let inst = crate::instance::fixtures::triangle();
        let layout = inst.module_layout();
        let beta = crate::instance::edge_betweenness(&inst);
        let mut flows = vec![0.0; inst.demands.len() * inst.arc_count()];
        flows[0] = 4.0; // A→B on edge AB
        let view = MasterView {
            instance: &inst,
            layout: &layout,
            design: &[2, 0, 0],
            base_flows: &flows,
            betweenness: &beta,
        };
        let phi = extract_features(0, &view, &ScenarioStats::new(3), 1);
        assert_eq!(&phi[..3], &[10.0, 4.0, 0.4]);
    }

    fn features() -> impl Strategy<Value = FeatureVector> {
        prop::array::uniform8(-3.0f64..3.0)
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(
            w in features(), b in -2.0f64..2.0, phi in features(),
            z in any::<bool>(), lambda in 0.0f64..0.1,
        ) {
            let mut m = LogisticModel::new(0.075, lambda);
            m.weights = w;
            m.bias = b;
            let (gw, gb) = m.gradient(&phi, z);
            let h = 1e-5;
            for k in 0..=NUM_FEATURES {
                let mut plus = m.clone();
                let mut minus = m.clone();
                if k < NUM_FEATURES {
                    plus.weights[k] += h;
                    minus.weights[k] -= h;
                } else {
                    plus.bias += h;
                    minus.bias -= h;
                }
                let fd = (plus.loss(&phi, z) - minus.loss(&phi, z)) / (2.0 * h);
                let an = if k < NUM_FEATURES { gw[k] } else { gb };
                prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0));
            }
        }

        #[test]
        fn training_step_does_not_increase_loss(
            w in features(), b in -2.0f64..2.0, phi in features(),
            z in any::<bool>(), alpha in 1e-4f64..0.1,
        ) {
            let mut m = LogisticModel::new(alpha, 0.0);
            m.weights = w;
            m.bias = b;
            let before = m.loss(&phi, z);
            m.train(&phi, z);
            prop_assert!(m.loss(&phi, z) <= before + 1e-12);
        }

        #[test]
        fn welford_matches_two_pass(xs in prop::collection::vec(-1e3f64..1e3, 1..500)) {
            let mut w = Welford::default();
            for &x in &xs {
                w.update(x);
            }
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            prop_assert!((w.mean - mean).abs() <= 1e-9 * mean.abs().max(1.0));
            prop_assert!((w.variance() - var).abs() <= 1e-9 * var.max(1.0));
        }

        #[test]
        fn predictions_stay_in_open_interval(w in features(), phi in features(), b in -1e4f64..1e4) {
            let mut m = LogisticModel::new(0.075, 0.02);
            m.weights = w;
            m.bias = b;
            let p = m.predict(&phi);
            prop_assert!(p > 0.0 && p < 1.0);
        }
    }
}
