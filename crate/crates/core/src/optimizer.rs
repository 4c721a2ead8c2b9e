//! Supergradient ascent on the dual objective and the five-value certificate.
//!
//! The objective is concave and piecewise linear in the `u` tables (convex
//! for the upper variant, which is minimized instead). Iterates start at
//! `u ≡ 0`, every `u_i` is projected to zero `μ_i`-mean after each step, and
//! the best value seen so far is returned.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cascade::{verify_subhedge, DualCertificate, DualEvaluator, DualVariables, SubhedgeReport, Variant};
use crate::cost::CostTensor;
use crate::error::{MotError, Result};
use crate::measures::MarginalSequence;
use crate::primal::{solve_primal, solve_primal_max, PrimalOptions, PrimalStatus};

/// Stop when the supergradient norm falls below this and no primal target is known.
pub const GRAD_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    /// `initial_step / √k` along the normalized supergradient.
    Diminishing,
    /// First/second moment accumulation with a `1/√(1 + k/decay)` schedule.
    Adaptive { beta1: f64, beta2: f64, epsilon: f64, decay: f64 },
    /// `(target − f(u)) / ‖g‖²`; needs the primal value, falls back to
    /// [`StepRule::Diminishing`] without it.
    Polyak,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Adaptive {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            decay: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscentConfig {
    pub variant: Variant,
    pub max_iters: usize,
    pub initial_step: f64,
    pub step_rule: StepRule,
    /// Relative gap `|primal − dual| / (1 + |primal|)` to stop at.
    pub target_gap: f64,
    pub seed: u64,
    /// Amplitude of the seeded uniform perturbation of the starting point;
    /// zero keeps the start at `u ≡ 0`.
    pub init_noise: f64,
    /// Primal value of the matching problem, when known.
    pub primal_value: Option<f64>,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Lower,
            max_iters: 5000,
            initial_step: 1.0,
            step_rule: StepRule::default(),
            target_gap: 1e-4,
            seed: 0,
            init_noise: 0.0,
            primal_value: None,
        }
    }
}

impl AscentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step.is_finite() && self.initial_step > 0.0) {
            return Err(MotError::InvalidParameter("initial_step must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(MotError::InvalidParameter("max_iters must be positive".into()));
        }
        if !(self.target_gap > 0.0) || !(self.init_noise >= 0.0) {
            return Err(MotError::InvalidParameter("target_gap and init_noise must be nonnegative".into()));
        }
        if let StepRule::Adaptive { beta1, beta2, epsilon, decay } = self.step_rule {
            let unit = |b: f64| (0.0..1.0).contains(&b);
            if !unit(beta1) || !unit(beta2) || !(epsilon > 0.0) || !(decay > 0.0) {
                return Err(MotError::InvalidParameter("invalid adaptive step parameters".into()));
            }
        }
        Ok(())
    }
}

/// `|primal − dual| / (1 + |primal|)`
pub fn relative_gap(primal: f64, dual: f64) -> f64 {
    (primal - dual).abs() / (1.0 + primal.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AscentStatus {
    /// Reached the target gap against the primal value.
    Converged,
    /// Supergradient norm fell below [`GRAD_TOL`].
    Stationary,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub dual_value: f64,
    pub grad_norm: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscentTrace {
    pub rows: Vec<TraceRow>,
    pub status: AscentStatus,
    /// Iteration at which the best value was found.
    pub best_iter: usize,
    pub certificate: DualCertificate,
}

impl AscentTrace {
    /// Running best value: nondecreasing for lower variants, nonincreasing
    /// for the upper one.
    pub fn best_so_far(&self) -> Vec<f64> {
        let lower = self.certificate.variant.is_lower();
        let mut best = if lower { f64::NEG_INFINITY } else { f64::INFINITY };
        self.rows
            .iter()
            .map(|r| {
                best = if lower { best.max(r.dual_value) } else { best.min(r.dual_value) };
                best
            })
            .collect()
    }

    /// CSV `iter,dual_value,grad_norm,elapsed_ms`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| MotError::Input(format!("csv: {e}"));
        w.write_record(["iter", "dual_value", "grad_norm", "elapsed_ms"]).map_err(io)?;
        for r in &self.rows {
            w.serialize((r.iter, r.dual_value, r.grad_norm, r.elapsed_ms)).map_err(io)?;
        }
        w.flush().map_err(|e| MotError::Input(format!("csv: {e}")))?;
        Ok(())
    }
}

fn run(cost: &CostTensor, ms: &MarginalSequence, cfg: &AscentConfig, sense: f64) -> Result<(DualCertificate, AscentTrace)> {
    cfg.validate()?;
    let mut ev = DualEvaluator::new(cfg.variant, cost, ms)?;
    let start = Instant::now();
    let mut u = DualVariables::zeros(ms);
    if cfg.init_noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let flat: Vec<f64> = (0..u.dim())
            .map(|_| rng.random_range(-cfg.init_noise..=cfg.init_noise))
            .collect();
        u.set_flat(&flat);
        u.project_zero_mean(ms);
    }
    let dim = u.dim();
    let mut x = u.to_flat();
    let mut m1 = vec![0.0; dim];
    let mut m2 = vec![0.0; dim];
    let mut best_value = f64::NEG_INFINITY;
    let mut best_u = u.clone();
    let mut best_iter = 0;
    let mut rows = Vec::new();
    let mut status = AscentStatus::IterationLimit;

    for k in 0..cfg.max_iters {
        u.set_flat(&x);
        let (value, grad) = ev.value_and_gradient(&u)?;
        // maximize sense·f
        let g: Vec<f64> = grad.iter().flatten().map(|v| sense * v).collect();
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        rows.push(TraceRow {
            iter: k,
            dual_value: value,
            grad_norm: gnorm,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if sense * value > best_value {
            best_value = sense * value;
            best_u = u.clone();
            best_iter = k;
        }
        if let Some(p) = cfg.primal_value {
            if relative_gap(p, sense * best_value) <= cfg.target_gap {
                status = AscentStatus::Converged;
                break;
            }
        } else if gnorm < GRAD_TOL {
            status = AscentStatus::Stationary;
            break;
        }
        if gnorm == 0.0 {
            // a zero supergradient certifies optimality of a concave function
            status = AscentStatus::Stationary;
            break;
        }
        let t = (k + 1) as f64;
        match (cfg.step_rule, cfg.primal_value) {
            (StepRule::Polyak, Some(p)) => {
                let h = ((sense * p - sense * value).max(0.0) / (gnorm * gnorm)).min(cfg.initial_step * 1e3);
                for (xi, gi) in x.iter_mut().zip(&g) {
                    *xi += h * gi;
                }
            }
            (StepRule::Adaptive { beta1, beta2, epsilon, decay }, _) => {
                let lr = cfg.initial_step / (1.0 + k as f64 / decay).sqrt();
                let c1 = 1.0 - beta1.powf(t);
                let c2 = 1.0 - beta2.powf(t);
                for i in 0..dim {
                    m1[i] = beta1 * m1[i] + (1.0 - beta1) * g[i];
                    m2[i] = beta2 * m2[i] + (1.0 - beta2) * g[i] * g[i];
                    x[i] += lr * (m1[i] / c1) / ((m2[i] / c2).sqrt() + epsilon);
                }
            }
            _ => {
                let h = cfg.initial_step / t.sqrt() / gnorm;
                for (xi, gi) in x.iter_mut().zip(&g) {
                    *xi += h * gi;
                }
            }
        }
        u.set_flat(&x);
        u.project_zero_mean(ms);
        x = u.to_flat();
    }

    let dual_value = sense * best_value;
    let certificate = DualCertificate {
        variant: cfg.variant,
        dual_variables: best_u,
        dual_value,
        gap_vs_primal: cfg.primal_value.map(|p| relative_gap(p, dual_value)),
    };
    let trace = AscentTrace {
        rows,
        status,
        best_iter,
        certificate: certificate.clone(),
    };
    Ok((certificate, trace))
}

/// Maximizes a lower-variant dual objective (proposition or remark_b).
pub fn ascend(cost: &CostTensor, ms: &MarginalSequence, config: &AscentConfig) -> Result<(DualCertificate, AscentTrace)> {
    if !config.variant.is_lower() {
        return Err(MotError::InvalidParameter(
            "ascend maximizes a lower variant; use descend_upper for remark_a".into(),
        ));
    }
    run(cost, ms, config, 1.0)
}

/// Minimizes the concave-envelope dual, an upper bound on the maximal price.
/// The configured variant is ignored.
pub fn descend_upper(cost: &CostTensor, ms: &MarginalSequence, config: &AscentConfig) -> Result<(DualCertificate, AscentTrace)> {
    let cfg = AscentConfig {
        variant: Variant::Upper,
        ..config.clone()
    };
    run(cost, ms, &cfg, -1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub variant: Variant,
    pub value: f64,
    /// Relative gap to the matching primal value.
    pub gap: f64,
    pub status: AscentStatus,
    pub iterations: usize,
    pub passed: bool,
    /// Weak duality held (lower ≤ primal + 1e-8, upper ≥ primal − 1e-8).
    pub weak_duality: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub primal_min: f64,
    pub primal_max: f64,
    pub lower: BoundReport,
    pub stepwise: BoundReport,
    pub upper: BoundReport,
    pub target_gap: f64,
    pub subhedge_zero: SubhedgeReport,
    pub subhedge_optimized: SubhedgeReport,
    pub passed: bool,
    pub elapsed_ms: f64,
    #[serde(skip)]
    pub certificates: Vec<DualCertificate>,
    #[serde(skip)]
    pub traces: Vec<AscentTrace>,
}

/// Slack for weak-duality checks on reported values.
pub const WEAK_DUALITY_TOL: f64 = 1e-8;

/// Solves both primal problems, runs both lower ascents and the upper
/// descent, and checks conditional sub-hedging for `u ≡ 0` and the best `u`.
///
/// Fails with [`MotError::NotInConvexOrder`] on infeasible marginals.
pub fn certify(
    cost: &CostTensor,
    ms: &MarginalSequence,
    config: &AscentConfig,
    primal_opts: &PrimalOptions,
) -> Result<CertifyReport> {
    let start = Instant::now();
    ms.ensure_valid()?;
    let pmin = solve_primal(cost, ms, primal_opts)?;
    let pmax = solve_primal_max(cost, ms, primal_opts)?;
    for p in [&pmin, &pmax] {
        match p.status {
            PrimalStatus::Optimal => {}
            PrimalStatus::Infeasible => return Err(MotError::Infeasible),
            PrimalStatus::IterationLimit => return Err(MotError::IterationLimit(p.stats.pivots)),
        }
    }
    let coupling = pmin.coupling.as_ref().expect("optimal solution has a coupling");

    let bound = |variant: Variant, primal: f64| -> Result<(BoundReport, DualCertificate, AscentTrace)> {
        let cfg = AscentConfig {
            variant,
            primal_value: Some(primal),
            ..config.clone()
        };
        let (cert, trace) = if variant.is_lower() {
            ascend(cost, ms, &cfg)?
        } else {
            descend_upper(cost, ms, &cfg)?
        };
        let gap = relative_gap(primal, cert.dual_value);
        let weak_duality = if variant.is_lower() {
            cert.dual_value <= primal + WEAK_DUALITY_TOL
        } else {
            cert.dual_value >= primal - WEAK_DUALITY_TOL
        };
        let report = BoundReport {
            variant,
            value: cert.dual_value,
            gap,
            status: trace.status,
            iterations: trace.rows.len(),
            passed: gap <= config.target_gap && weak_duality,
            weak_duality,
        };
        Ok((report, cert, trace))
    };
    let (lower, c_lower, t_lower) = bound(Variant::Lower, pmin.value)?;
    let (stepwise, c_step, t_step) = bound(Variant::Stepwise, pmin.value)?;
    let (upper, c_upper, t_upper) = bound(Variant::Upper, pmax.value)?;

    let subhedge_zero = verify_subhedge(cost, ms, &DualVariables::zeros(ms), coupling)?;
    let subhedge_optimized = verify_subhedge(cost, ms, &c_lower.dual_variables, coupling)?;
    let passed = lower.passed && stepwise.passed && upper.passed && subhedge_zero.passed && subhedge_optimized.passed;
    Ok(CertifyReport {
        primal_min: pmin.value,
        primal_max: pmax.value,
        lower,
        stepwise,
        upper,
        target_gap: config.target_gap,
        subhedge_zero,
        subhedge_optimized,
        passed,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        certificates: vec![c_lower, c_step, c_upper],
        traces: vec![t_lower, t_step, t_upper],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostSpec;
    use crate::measures::DiscreteMeasure;
    use crate::primal::solve_primal;

    fn sym(a: f64) -> DiscreteMeasure {
        DiscreteMeasure::new(vec![-a, a], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn unique_coupling_is_tight_at_start() {
        let ms = MarginalSequence::new(vec![DiscreteMeasure::dirac(0.0), sym(1.0)]).unwrap();
        let cost = CostSpec::SquaredIncrement.tabulate(&ms).unwrap();
        let (cert, trace) = ascend(&cost, &ms, &AscentConfig::default()).unwrap();
        assert_eq!(trace.rows[0].dual_value, 1.0);
        assert_eq!(cert.dual_value, 1.0);
        let (up, _) = descend_upper(&cost, &ms, &AscentConfig::default()).unwrap();
        assert_eq!(up.dual_value, 1.0);
    }

    #[test]
    fn abs_increment_reaches_primal() {
        let mu2 = DiscreteMeasure::uniform(&[-2.0, 0.0, 2.0]).unwrap();
        let ms = MarginalSequence::new(vec![sym(1.0), mu2]).unwrap();
        let cost = CostSpec::AbsIncrement.tabulate(&ms).unwrap();
        let primal = solve_primal(&cost, &ms, &PrimalOptions::default()).unwrap().value;
        let cfg = AscentConfig {
            primal_value: Some(primal),
            target_gap: 1e-3,
            ..AscentConfig::default()
        };
        let (cert, trace) = ascend(&cost, &ms, &cfg).unwrap();
        assert!(relative_gap(primal, cert.dual_value) < 1e-3, "{} vs {primal}", cert.dual_value);
        assert!(cert.dual_value <= primal + 1e-8);
        assert!(trace.rows.len() <= 5000);
    }

    #[test]
    fn best_so_far_is_monotone() {
        let ms = MarginalSequence::new(vec![sym(1.0), sym(2.0), sym(3.0)]).unwrap();
        let cost = CostSpec::AbsIncrement.tabulate(&ms).unwrap();
        let cfg = AscentConfig {
            max_iters: 200,
            ..AscentConfig::default()
        };
        let (_, trace) = ascend(&cost, &ms, &cfg).unwrap();
        assert!(trace.best_so_far().windows(2).all(|w| w[1] >= w[0]));
        let (_, trace) = descend_upper(&cost, &ms, &cfg).unwrap();
        assert!(trace.best_so_far().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn config_validation() {
        let bad = AscentConfig {
            initial_step: 0.0,
            ..AscentConfig::default()
        };
        assert!(bad.validate().is_err());
        let ms = MarginalSequence::new(vec![sym(1.0), sym(2.0)]).unwrap();
        let cost = CostSpec::AbsIncrement.tabulate(&ms).unwrap();
        let upper = AscentConfig {
            variant: Variant::Upper,
            ..AscentConfig::default()
        };
        assert!(ascend(&cost, &ms, &upper).is_err());
    }

    #[test]
    fn trace_csv_header() {
        let ms = MarginalSequence::new(vec![DiscreteMeasure::dirac(0.0), sym(1.0)]).unwrap();
        let cost = CostSpec::SquaredIncrement.tabulate(&ms).unwrap();
        let (_, trace) = ascend(&cost, &ms, &AscentConfig::default()).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("iter,dual_value,grad_norm,elapsed_ms\n0,1.0,"));
    }

    #[test]
    fn certify_hand_solved() {
        let ms = MarginalSequence::new(vec![sym(1.0), sym(2.0)]).unwrap();
        let cost = CostSpec::SquaredIncrement.tabulate(&ms).unwrap();
        let cfg = AscentConfig {
            target_gap: 1e-6,
            ..AscentConfig::default()
        };
        let r = certify(&cost, &ms, &cfg, &PrimalOptions::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.primal_min - 3.0).abs() < 1e-12);

        let bad = MarginalSequence::new(vec![sym(2.0), sym(1.0)]).unwrap();
        let cost = CostSpec::SquaredIncrement.tabulate(&bad).unwrap();
        assert!(matches!(
            certify(&cost, &bad, &cfg, &PrimalOptions::default()),
            Err(MotError::NotInConvexOrder(_))
        ));
    }
}
