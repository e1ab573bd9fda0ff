//! Named scenarios for the three simulation designs.
//!
//! Names follow `sim1-s{1,2,3}-<strength>`, `sim2-s{1,2,3}-<strength>` and
//! `sim3-<strength>` with strength one of `nodif`, `weak`, `medium`,
//! `strong`.

use super::{CovariateDistribution, CovariateSpec, DifBase, DifShape, DifSpec, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifStrength {
    None,
    Weak,
    Medium,
    Strong,
}

impl DifStrength {
    pub const ALL: [DifStrength; 4] = [Self::None, Self::Weak, Self::Medium, Self::Strong];

    pub fn lambda(self) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Weak => 0.25,
            Self::Medium => 0.5,
            Self::Strong => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::None => "nodif",
            Self::Weak => "weak",
            Self::Medium => "medium",
            Self::Strong => "strong",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.label() == s)
    }
}

const MU_2: [f64; 2] = [-0.5, 0.5];
const MU_4: [f64; 4] = [-1.5, -0.5, 0.5, 1.5];

fn binary(name: &str) -> CovariateSpec {
    CovariateSpec {
        name: name.into(),
        distribution: CovariateDistribution::Bernoulli { p: 0.5 },
    }
}

fn base(name: &str, strength: DifStrength, n_items: usize, mu: &[f64]) -> ScenarioSpec {
    ScenarioSpec {
        name: name.into(),
        strength: strength.label().into(),
        n_persons: 500,
        n_items,
        threshold_mean: mu.to_vec(),
        covariates: Vec::new(),
        dif: Vec::new(),
        lambda: strength.lambda(),
        dif_base: DifBase::PriorMean,
        replications: 50,
        seed: 20_160_101,
        min_persons: 60,
    }
}

fn single_binary(name: &str, strength: DifStrength, n_items: usize, mu: &[f64], dif_items: &[usize], shape: DifShape) -> ScenarioSpec {
    let mut spec = base(name, strength, n_items, mu);
    spec.covariates = vec![binary("x")];
    spec.dif = dif_items
        .iter()
        .map(|&item| DifSpec {
            item,
            variable: 0,
            split_point: 0.0,
            shape,
        })
        .collect();
    spec
}

fn three_covariates(name: &str, strength: DifStrength, dif_variable: usize) -> ScenarioSpec {
    let mut spec = base(name, strength, 8, &MU_2);
    spec.covariates = vec![
        binary("x1"),
        CovariateSpec {
            name: "x2".into(),
            distribution: CovariateDistribution::OrderedUniform { low: 1, high: 4 },
        },
        CovariateSpec {
            name: "x3".into(),
            distribution: CovariateDistribution::IntegerUniform { low: 20, high: 50 },
        },
    ];
    spec.dif = vec![DifSpec {
        item: 4,
        variable: dif_variable,
        split_point: spec.covariates[dif_variable].distribution.median_split(),
        shape: DifShape::Homogeneous,
    }];
    spec
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Option<ScenarioSpec> {
    let (design, strength) = name.rsplit_once('-')?;
    let strength = DifStrength::parse(strength)?;
    let spec = match design {
        "sim1-s1" => single_binary(name, strength, 8, &MU_2, &[4], DifShape::Homogeneous),
        "sim1-s2" => single_binary(name, strength, 20, &MU_2, &[4, 9, 14], DifShape::Homogeneous),
        "sim1-s3" => single_binary(name, strength, 8, &MU_4, &[4], DifShape::Homogeneous),
        "sim2-s1" => three_covariates(name, strength, 0),
        "sim2-s2" => three_covariates(name, strength, 1),
        "sim2-s3" => three_covariates(name, strength, 2),
        "sim3" => single_binary(name, strength, 8, &MU_2, &[4], DifShape::Nonhomogeneous),
        _ => return None,
    };
    Some(spec)
}

pub fn preset_names() -> Vec<String> {
    let designs = ["sim1-s1", "sim1-s2", "sim1-s3", "sim2-s1", "sim2-s2", "sim2-s3", "sim3"];
    designs
        .iter()
        .flat_map(|d| DifStrength::ALL.iter().map(move |s| format!("{d}-{}", s.label())))
        .collect()
}
