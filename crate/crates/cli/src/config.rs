//! JSON run configuration: parsing, defaults, the `--quick` preset, and
//! validation.
//!
//! Precedence for the preset-covered fields (`replicates`, `samples`,
//! `slices`) is: explicit JSON value, then the `--quick` preset, then the
//! default. `--seed` and `--workers` on the command line override their
//! config counterparts.

use serde::Deserialize;

use mgps_core::samplers::GradStepRule;
use mgps_core::{PgdmWeightRule, SliceAggregation, SliceOrder, SwOptions};

use crate::error::{CliError, Result};

/// Experiments the CLI can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Gaussian-mixture benchmark: sliced Wasserstein per method.
    GmBench,
    /// Closed-form W2-versus-η landscape on random Gaussian instances.
    GaussW2,
    /// Sliced Wasserstein as a function of η on the GM protocol.
    AblateEta,
    /// Sliced Wasserstein as a function of a constant gradient-step count.
    AblateGradsteps,
    /// Run one method on one problem description and dump the samples.
    Sample,
}

impl Experiment {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gm-bench" => Ok(Experiment::GmBench),
            "gauss-w2" => Ok(Experiment::GaussW2),
            "ablate-eta" => Ok(Experiment::AblateEta),
            "ablate-gradsteps" => Ok(Experiment::AblateGradsteps),
            "sample" => Ok(Experiment::Sample),
            other => Err(CliError::Config(format!(
                "unknown experiment '{other}' (expected gm-bench, gauss-w2, ablate-eta, \
                 ablate-gradsteps, or sample)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::GmBench => "gm-bench",
            Experiment::GaussW2 => "gauss-w2",
            Experiment::AblateEta => "ablate-eta",
            Experiment::AblateGradsteps => "ablate-gradsteps",
            Experiment::Sample => "sample",
        }
    }
}

/// Gradient-step rule as written in config JSON.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GradStepsSpec {
    /// High count near the end of the chain and on a periodic cadence,
    /// base count elsewhere.
    Periodic {
        tail_window: usize,
        period: usize,
        m_high: usize,
        m_base: usize,
    },
    /// The same count at every step.
    Constant { m: usize },
}

impl GradStepsSpec {
    pub fn to_rule(&self) -> GradStepRule {
        match *self {
            GradStepsSpec::Periodic {
                tail_window,
                period,
                m_high,
                m_base,
            } => GradStepRule::Periodic {
                tail_window,
                period,
                m_high,
                m_base,
            },
            GradStepsSpec::Constant { m } => GradStepRule::Constant(m),
        }
    }
}

/// One method entry in config JSON. Which fields apply depends on `name`;
/// fields that do not apply to the named method must be absent.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub name: String,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub ell: Option<Vec<usize>>,
    #[serde(default)]
    pub lr: Option<f64>,
    #[serde(default)]
    pub grad_steps: Option<GradStepsSpec>,
    #[serde(default)]
    pub warm_start: Option<usize>,
    #[serde(default)]
    pub zetas: Option<Vec<f64>>,
    #[serde(default)]
    pub weight: Option<String>,
}

/// The midpoint plan a method will use, kept abstract of `n` until run time.
#[derive(Debug, Clone)]
pub enum PlanSpec {
    Proportional(f64),
    Explicit(Vec<usize>),
}

/// A fully resolved method.
#[derive(Debug, Clone)]
pub enum Method {
    Mgps {
        label: String,
        plan: PlanSpec,
        lr: f64,
        rule: GradStepRule,
        warm_start: Option<usize>,
    },
    Dps {
        label: String,
        zetas: Vec<f64>,
    },
    Pgdm {
        label: String,
        weight: PgdmWeightRule,
    },
}

impl Method {
    pub fn label(&self) -> &str {
        match self {
            Method::Mgps { label, .. } | Method::Dps { label, .. } | Method::Pgdm { label, .. } => {
                label
            }
        }
    }

    /// The value written to the CSV `eta` column: η for midpoint methods,
    /// 0 otherwise (DPS rows carry the winning ζ instead, filled at run
    /// time).
    pub fn eta_column(&self) -> f64 {
        match self {
            Method::Mgps {
                plan: PlanSpec::Proportional(eta),
                ..
            } => *eta,
            _ => 0.0,
        }
    }
}

/// Benchmark defaults: the reported protocol runs 100 replicates of 1000
/// chains, scores with 10⁴ slices, and discretizes to 300 steps.
pub const DEFAULT_REPLICATES: usize = 100;
pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_SLICES: usize = 10_000;
pub const DEFAULT_N_STEPS: usize = 300;
pub const DEFAULT_SIGMA_Y: f64 = 0.05;

/// `--quick` preset for CI-speed runs.
pub const QUICK_REPLICATES: usize = 30;
pub const QUICK_SAMPLES: usize = 500;
pub const QUICK_SLICES: usize = 2000;

/// Fine-grid schedule defaults (linear β on 1000 steps).
pub const DEFAULT_T_FINE: usize = 1000;
pub const DEFAULT_BETA_MIN: f64 = 1e-4;
pub const DEFAULT_BETA_MAX: f64 = 0.02;

/// DPS step-size grid searched per replicate when the config lists none.
pub const DEFAULT_DPS_ZETAS: &[f64] = &[0.1, 0.3, 1.0];

/// Raw JSON shape. Unknown keys are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    experiment: Option<String>,
    #[serde(default)]
    d: Option<usize>,
    #[serde(default)]
    d_y: Option<usize>,
    #[serde(default)]
    sigma_y: Option<f64>,
    #[serde(default)]
    n_steps: Option<usize>,
    #[serde(default)]
    t_fine: Option<usize>,
    #[serde(default)]
    beta_min: Option<f64>,
    #[serde(default)]
    beta_max: Option<f64>,
    #[serde(default)]
    methods: Option<Vec<MethodSpec>>,
    #[serde(default)]
    samples: Option<usize>,
    #[serde(default)]
    replicates: Option<usize>,
    #[serde(default)]
    slices: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    workers: Option<usize>,
    #[serde(default)]
    etas: Option<Vec<f64>>,
    #[serde(default)]
    grad_step_multipliers: Option<Vec<usize>>,
    #[serde(default)]
    timing: Option<bool>,
    #[serde(default)]
    sw_order: Option<u8>,
    #[serde(default)]
    sw_aggregation: Option<String>,
}

/// A validated run configuration.
#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub experiment: Experiment,
    pub d: usize,
    pub d_y: usize,
    pub sigma_y: f64,
    pub n_steps: usize,
    pub t_fine: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub methods: Vec<Method>,
    pub samples: usize,
    pub replicates: usize,
    pub slices: usize,
    pub seed: u64,
    pub workers: usize,
    pub etas: Vec<f64>,
    pub grad_step_multipliers: Vec<usize>,
    pub timing: bool,
    pub sw: SwOptions,
}

fn resolve_sw(order: Option<u8>, aggregation: Option<&str>) -> Result<SwOptions> {
    let order = match order {
        None | Some(2) => SliceOrder::Two,
        Some(1) => SliceOrder::One,
        Some(other) => {
            return Err(CliError::Config(format!(
                "sw_order must be 1 or 2, got {other}"
            )))
        }
    };
    let aggregation = match aggregation {
        None | Some("rms") => SliceAggregation::RootMeanSquare,
        Some("mean") => SliceAggregation::Mean,
        Some(other) => {
            return Err(CliError::Config(format!(
                "unknown sw_aggregation '{other}' (expected rms or mean)"
            )))
        }
    };
    Ok(SwOptions { order, aggregation })
}

fn resolve_method(spec: &MethodSpec) -> Result<Method> {
    let bad = |field: &str| {
        Err(CliError::Config(format!(
            "method '{}' does not take the field '{field}'",
            spec.name
        )))
    };
    match spec.name.as_str() {
        "mgps" | "mgps-ws" => {
            if spec.zetas.is_some() {
                return bad("zetas");
            }
            if spec.weight.is_some() {
                return bad("weight");
            }
            let plan = match (&spec.ell, spec.eta) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Config(
                        "give either 'eta' or an explicit 'ell' sequence, not both".to_string(),
                    ))
                }
                (Some(seq), None) => PlanSpec::Explicit(seq.clone()),
                (None, eta) => PlanSpec::Proportional(eta.unwrap_or(0.75)),
            };
            let warm_start = if spec.name == "mgps-ws" {
                Some(spec.warm_start.unwrap_or(3))
            } else {
                spec.warm_start
            };
            Ok(Method::Mgps {
                label: spec.name.clone(),
                plan,
                lr: spec.lr.unwrap_or(0.1),
                rule: spec
                    .grad_steps
                    .as_ref()
                    .map(GradStepsSpec::to_rule)
                    .unwrap_or_default(),
                warm_start,
            })
        }
        "dps" => {
            for (present, field) in [
                (spec.eta.is_some(), "eta"),
                (spec.ell.is_some(), "ell"),
                (spec.lr.is_some(), "lr"),
                (spec.grad_steps.is_some(), "grad_steps"),
                (spec.warm_start.is_some(), "warm_start"),
                (spec.weight.is_some(), "weight"),
            ] {
                if present {
                    return bad(field);
                }
            }
            let zetas = spec
                .zetas
                .clone()
                .unwrap_or_else(|| DEFAULT_DPS_ZETAS.to_vec());
            if zetas.is_empty() || zetas.iter().any(|z| !z.is_finite() || *z <= 0.0) {
                return Err(CliError::Config(
                    "dps needs a nonempty list of positive finite ζ values".to_string(),
                ));
            }
            Ok(Method::Dps {
                label: "dps".to_string(),
                zetas,
            })
        }
        "pgdm" => {
            for (present, field) in [
                (spec.eta.is_some(), "eta"),
                (spec.ell.is_some(), "ell"),
                (spec.lr.is_some(), "lr"),
                (spec.grad_steps.is_some(), "grad_steps"),
                (spec.warm_start.is_some(), "warm_start"),
                (spec.zetas.is_some(), "zetas"),
            ] {
                if present {
                    return bad(field);
                }
            }
            let weight = match spec.weight.as_deref() {
                None | Some("alpha_product") => PgdmWeightRule::AlphaProduct,
                Some("alpha_current") => PgdmWeightRule::AlphaCurrent,
                Some(other) => {
                    return Err(CliError::Config(format!(
                        "unknown pgdm weight rule '{other}' (expected alpha_product or \
                         alpha_current)"
                    )))
                }
            };
            Ok(Method::Pgdm {
                label: "pgdm".to_string(),
                weight,
            })
        }
        other => Err(CliError::Config(format!(
            "unknown method '{other}' (expected mgps, mgps-ws, dps, or pgdm)"
        ))),
    }
}

fn default_methods() -> Vec<Method> {
    vec![
        Method::Mgps {
            label: "mgps".to_string(),
            plan: PlanSpec::Proportional(0.75),
            lr: 0.1,
            rule: GradStepRule::default(),
            warm_start: None,
        },
        Method::Dps {
            label: "dps".to_string(),
            zetas: DEFAULT_DPS_ZETAS.to_vec(),
        },
        Method::Pgdm {
            label: "pgdm".to_string(),
            weight: PgdmWeightRule::AlphaProduct,
        },
    ]
}

fn default_eta_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 * 0.05).collect()
}

/// Parse and validate a config JSON string against the chosen experiment
/// and command-line overrides.
pub fn load_config(
    text: &str,
    experiment: Experiment,
    quick: bool,
    seed_override: Option<u64>,
    workers_override: Option<usize>,
) -> Result<BenchmarkConfig> {
    let raw: RawConfig = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("invalid config JSON: {e}")))?;

    if let Some(tag) = &raw.experiment {
        let tagged = Experiment::parse(tag)?;
        if tagged != experiment {
            return Err(CliError::Config(format!(
                "config is tagged for experiment '{}' but '{}' was requested",
                tagged.name(),
                experiment.name()
            )));
        }
    }

    let pick =
        |explicit: Option<usize>, quick_val: usize, default: usize| {
            explicit.unwrap_or(if quick { quick_val } else { default })
        };
    let cfg = BenchmarkConfig {
        experiment,
        d: raw.d.unwrap_or(20),
        d_y: raw.d_y.unwrap_or(1),
        sigma_y: raw.sigma_y.unwrap_or(DEFAULT_SIGMA_Y),
        n_steps: raw.n_steps.unwrap_or(DEFAULT_N_STEPS),
        t_fine: raw.t_fine.unwrap_or(DEFAULT_T_FINE),
        beta_min: raw.beta_min.unwrap_or(DEFAULT_BETA_MIN),
        beta_max: raw.beta_max.unwrap_or(DEFAULT_BETA_MAX),
        methods: match &raw.methods {
            Some(specs) => {
                let mut out = Vec::with_capacity(specs.len());
                for s in specs {
                    out.push(resolve_method(s)?);
                }
                out
            }
            None => default_methods(),
        },
        samples: pick(raw.samples, QUICK_SAMPLES, DEFAULT_SAMPLES),
        replicates: pick(raw.replicates, QUICK_REPLICATES, DEFAULT_REPLICATES),
        slices: pick(raw.slices, QUICK_SLICES, DEFAULT_SLICES),
        seed: seed_override.or(raw.seed).unwrap_or(0),
        workers: workers_override.or(raw.workers).unwrap_or(1),
        etas: raw.etas.unwrap_or_else(default_eta_grid),
        grad_step_multipliers: raw
            .grad_step_multipliers
            .unwrap_or_else(|| vec![1, 2, 5, 10, 20]),
        timing: raw.timing.unwrap_or(false),
        sw: resolve_sw(raw.sw_order, raw.sw_aggregation.as_deref())?,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &BenchmarkConfig) -> Result<()> {
    let fail = |m: String| Err(CliError::Config(m));
    if cfg.replicates < 1 {
        return fail("replicates must be at least 1".to_string());
    }
    let min_samples = if cfg.experiment == Experiment::Sample {
        1
    } else {
        2
    };
    if cfg.samples < min_samples {
        return fail(format!("samples must be at least {min_samples}"));
    }
    if !(cfg.sigma_y > 0.0) || !cfg.sigma_y.is_finite() {
        return fail(format!("sigma_y must be positive, got {}", cfg.sigma_y));
    }
    if cfg.d < 1 || cfg.d_y < 1 {
        return fail(format!("need d ≥ 1 and d_y ≥ 1, got {} and {}", cfg.d, cfg.d_y));
    }
    if cfg.workers < 1 {
        return fail("workers must be at least 1".to_string());
    }
    if cfg.slices < 1 {
        return fail("slices must be at least 1".to_string());
    }
    if cfg.methods.is_empty() {
        return fail("need at least one method".to_string());
    }
    match cfg.experiment {
        Experiment::GaussW2 | Experiment::AblateEta => {
            if cfg.etas.is_empty() {
                return fail("need a nonempty eta grid".to_string());
            }
            if cfg
                .etas
                .iter()
                .any(|e| !e.is_finite() || !(0.0..=1.0).contains(e))
            {
                return fail("every eta must lie in [0, 1]".to_string());
            }
        }
        Experiment::AblateGradsteps => {
            if cfg.grad_step_multipliers.is_empty() {
                return fail("need a nonempty grad_step_multipliers list".to_string());
            }
            if cfg.grad_step_multipliers.iter().any(|&m| m < 1) {
                return fail("every grad-step multiplier must be at least 1".to_string());
            }
        }
        _ => {}
    }
    if cfg.experiment == Experiment::GaussW2 && cfg.d < 10 {
        return fail(format!(
            "gauss-w2 draws random instances, which needs d ≥ 10 (got {})",
            cfg.d
        ));
    }
    for m in &cfg.methods {
        if let Method::Mgps {
            lr,
            plan,
            warm_start,
            ..
        } = m
        {
            if !(*lr > 0.0) || !lr.is_finite() {
                return fail(format!("mgps lr must be positive, got {lr}"));
            }
            if let PlanSpec::Proportional(eta) = plan {
                if !eta.is_finite() || !(0.0..=1.0).contains(eta) {
                    return fail(format!("mgps eta must lie in [0, 1], got {eta}"));
                }
            }
            if let Some(w) = warm_start {
                if *w < 1 {
                    return fail("warm_start must be at least 1".to_string());
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg = load_config("{}", Experiment::GmBench, false, None, None).unwrap();
        assert_eq!(cfg.replicates, 100);
        assert_eq!(cfg.samples, 1000);
        assert_eq!(cfg.slices, 10_000);
        assert_eq!(cfg.n_steps, 300);
        assert_eq!(cfg.sigma_y, 0.05);
        assert_eq!(cfg.methods.len(), 3);
        assert!(!cfg.timing);
    }

    #[test]
    fn quick_preset_applies_unless_overridden() {
        let cfg = load_config(
            r#"{"samples": 1000}"#,
            Experiment::GmBench,
            true,
            None,
            None,
        )
        .unwrap();
        assert_eq!(cfg.replicates, 30);
        assert_eq!(cfg.samples, 1000);
        assert_eq!(cfg.slices, 2000);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(load_config(
            r#"{"replicate_count": 5}"#,
            Experiment::GmBench,
            false,
            None,
            None
        )
        .is_err());
    }

    #[test]
    fn experiment_tag_must_match() {
        assert!(load_config(
            r#"{"experiment": "gm-bench"}"#,
            Experiment::AblateEta,
            false,
            None,
            None
        )
        .is_err());
        assert!(load_config(
            r#"{"experiment": "ablate-eta"}"#,
            Experiment::AblateEta,
            false,
            None,
            None
        )
        .is_ok());
    }

    #[test]
    fn cli_overrides_win() {
        let cfg = load_config(
            r#"{"seed": 7, "workers": 4}"#,
            Experiment::GmBench,
            false,
            Some(9),
            Some(2),
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.workers, 2);
    }

    #[test]
    fn method_fields_are_scoped() {
        assert!(load_config(
            r#"{"methods": [{"name": "dps", "lr": 0.1}]}"#,
            Experiment::GmBench,
            false,
            None,
            None
        )
        .is_err());
        assert!(load_config(
            r#"{"methods": [{"name": "pgdm", "zetas": [1.0]}]}"#,
            Experiment::GmBench,
            false,
            None,
            None
        )
        .is_err());
        let cfg = load_config(
            r#"{"methods": [
                {"name": "mgps", "eta": 0.5, "lr": 0.2,
                 "grad_steps": {"kind": "constant", "m": 3}},
                {"name": "mgps-ws"},
                {"name": "dps", "zetas": [0.5]},
                {"name": "pgdm", "weight": "alpha_current"}
            ]}"#,
            Experiment::GmBench,
            false,
            None,
            None,
        )
        .unwrap();
        assert_eq!(cfg.methods.len(), 4);
        match &cfg.methods[1] {
            Method::Mgps { warm_start, .. } => assert_eq!(*warm_start, Some(3)),
            _ => panic!("expected mgps-ws"),
        }
    }

    #[test]
    fn invariants_are_enforced() {
        for bad in [
            r#"{"replicates": 0}"#,
            r#"{"samples": 1}"#,
            r#"{"sigma_y": 0.0}"#,
            r#"{"workers": 0}"#,
        ] {
            assert!(
                load_config(bad, Experiment::GmBench, false, None, None).is_err(),
                "should reject {bad}"
            );
        }
    }

    #[test]
    fn sw_convention_keys_parse_and_validate() {
        let cfg = load_config("{}", Experiment::GmBench, false, None, None).unwrap();
        assert_eq!(cfg.sw, SwOptions::default());
        let cfg = load_config(
            r#"{"sw_order": 1, "sw_aggregation": "mean"}"#,
            Experiment::GmBench,
            false,
            None,
            None,
        )
        .unwrap();
        assert_eq!(cfg.sw.order, SliceOrder::One);
        assert_eq!(cfg.sw.aggregation, SliceAggregation::Mean);
        for bad in [r#"{"sw_order": 3}"#, r#"{"sw_aggregation": "median"}"#] {
            assert!(
                load_config(bad, Experiment::GmBench, false, None, None).is_err(),
                "should reject {bad}"
            );
        }
    }

    #[test]
    fn eta_grid_is_validated() {
        assert!(load_config(
            r#"{"etas": [0.5, 1.5]}"#,
            Experiment::AblateEta,
            false,
            None,
            None
        )
        .is_err());
        assert!(load_config(
            r#"{"etas": []}"#,
            Experiment::AblateEta,
            false,
            None,
            None
        )
        .is_err());
    }
}
