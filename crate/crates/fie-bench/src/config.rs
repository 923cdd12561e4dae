//! Run configuration and named presets.

use std::path::PathBuf;

use fie::{CostSpec64, DecayMode64, Error, Result, ScenarioConfig64, SolveOptions64};

/// Which experiment family a run belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentMode {
    /// Fixed-magnitude disturbances over a moderate horizon.
    Paper,
    /// Geometrically decaying disturbances; checks error convergence.
    Convergence,
    /// Extended horizon; checks error boundedness.
    LongHorizon,
}

/// Estimators included in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorSet {
    pub fie: bool,
    pub ekf: bool,
}

impl EstimatorSet {
    pub fn both() -> Self {
        Self { fie: true, ekf: true }
    }
}

impl Default for EstimatorSet {
    fn default() -> Self {
        Self::both()
    }
}

/// Full description of one Monte-Carlo run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: ScenarioConfig64,
    pub spec: CostSpec64,
    pub estimators: EstimatorSet,
    pub instances: u64,
    pub out_dir: PathBuf,
    pub mode: ExperimentMode,
    /// Worker threads for instance-level parallelism (0 = library default).
    pub threads: usize,
    pub solve: SolveOptions64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.estimators.fie && !self.estimators.ekf {
            return Err(Error::Domain("at least one estimator must be selected".into()));
        }
        if self.instances == 0 {
            return Err(Error::Domain("instance count must be positive".into()));
        }
        self.scenario.validate()?;
        self.spec.validate()?;
        Ok(())
    }
}

/// Named one-flag configurations for the standard experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Exponential discount, `b2 = 0.81`, 500 instances, horizon 20.
    PaperExp,
    /// Exponential discount with growing weight `b2 = 2`.
    PaperExpB2_2,
    /// Polynomial discount, `b2 = 0.21`, otherwise as `PaperExp`.
    PaperPoly,
    /// Geometric(0.5) disturbance decay, horizon 40, 100 instances.
    Convergence,
    /// Horizon 60, 100 instances.
    LongHorizon,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::PaperExp => "paper-exp",
            Preset::PaperExpB2_2 => "paper-exp-b2-2",
            Preset::PaperPoly => "paper-poly",
            Preset::Convergence => "convergence",
            Preset::LongHorizon => "long-horizon",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "paper-exp" => Some(Preset::PaperExp),
            "paper-exp-b2-2" => Some(Preset::PaperExpB2_2),
            "paper-poly" => Some(Preset::PaperPoly),
            "convergence" => Some(Preset::Convergence),
            "long-horizon" => Some(Preset::LongHorizon),
            _ => None,
        }
    }

    /// The full configuration this preset stands for.
    pub fn config(self) -> RunConfig {
        let scenario = ScenarioConfig64::default();
        let base = RunConfig {
            scenario,
            spec: CostSpec64::exp_discount(0.81).expect("valid preset spec"),
            estimators: EstimatorSet::both(),
            instances: 500,
            out_dir: PathBuf::from("bench-out"),
            mode: ExperimentMode::Paper,
            threads: 0,
            solve: SolveOptions64::default(),
        };
        match self {
            Preset::PaperExp => base,
            Preset::PaperExpB2_2 => RunConfig {
                spec: CostSpec64::exp_discount(2.0).expect("valid preset spec"),
                ..base
            },
            Preset::PaperPoly => RunConfig {
                spec: CostSpec64::poly_discount(0.21).expect("valid preset spec"),
                ..base
            },
            Preset::Convergence => RunConfig {
                scenario: ScenarioConfig64 {
                    horizon: 40,
                    decay: DecayMode64::Geometric { rate: 0.5 },
                    ..ScenarioConfig64::default()
                },
                instances: 100,
                mode: ExperimentMode::Convergence,
                ..base
            },
            Preset::LongHorizon => RunConfig {
                scenario: ScenarioConfig64 {
                    horizon: 60,
                    ..ScenarioConfig64::default()
                },
                instances: 100,
                mode: ExperimentMode::LongHorizon,
                ..base
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fie::DiscountFamily;

    #[test]
    fn presets_round_trip_names() {
        for p in [
            Preset::PaperExp,
            Preset::PaperExpB2_2,
            Preset::PaperPoly,
            Preset::Convergence,
            Preset::LongHorizon,
        ] {
            assert_eq!(Preset::from_name(p.name()), Some(p));
        }
        assert_eq!(Preset::from_name("nope"), None);
    }

    #[test]
    fn preset_configs_validate_and_carry_expected_parameters() {
        let c = Preset::PaperExp.config();
        c.validate().unwrap();
        assert_eq!(c.spec.family, DiscountFamily::Exp);
        assert_eq!(c.spec.b2, 0.81);
        assert_eq!(c.instances, 500);
        assert_eq!(c.scenario.horizon, 20);

        let c = Preset::PaperExpB2_2.config();
        assert_eq!(c.spec.b2, 2.0);

        let c = Preset::PaperPoly.config();
        assert_eq!(c.spec.family, DiscountFamily::Poly);
        assert_eq!(c.spec.b2, 0.21);

        let c = Preset::Convergence.config();
        assert_eq!(c.scenario.horizon, 40);
        assert_eq!(c.instances, 100);
        assert!(matches!(c.scenario.decay, DecayMode64::Geometric { rate } if rate == 0.5));

        let c = Preset::LongHorizon.config();
        assert_eq!(c.scenario.horizon, 60);
        assert_eq!(c.instances, 100);
    }

    #[test]
    fn config_rejects_empty_estimator_set_and_zero_instances() {
        let mut c = Preset::PaperExp.config();
        c.estimators = EstimatorSet { fie: false, ekf: false };
        assert!(c.validate().is_err());

        let mut c = Preset::PaperExp.config();
        c.instances = 0;
        assert!(c.validate().is_err());
    }
}
