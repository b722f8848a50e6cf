//! Flat key-value experiment configuration.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Result};
use crate::functionals::{
    builtin_edwards, builtin_exp_integral, builtin_local_time_zero, builtin_supremum, builtin_two_level, builtin_zero,
    FunctionalSpec, Potential, Profile, Profile2,
};
use crate::penalize::{LocalTimeChoice, McParams, TestFunction};
use crate::ray_knight::MeasureConfig;

/// Built-in functional selected by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    Zero,
    LocalTimeZero,
    Supremum,
    ExpIntegral,
    TwoLevel,
    Edwards,
}

/// Output formats; `csv` writes a table next to the JSON report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

fn d_n_paths() -> u64 {
    100_000
}
fn d_time_step_ratio() -> f64 {
    1e-4
}
fn d_local_time() -> LocalTimeChoice {
    LocalTimeChoice::Bridge
}
fn d_l_max() -> f64 {
    40.0
}
fn d_n_levels() -> u64 {
    400
}
fn d_n_mc() -> u64 {
    1000
}
fn d_grid_step() -> f64 {
    1.0 / 64.0
}
fn d_one() -> f64 {
    1.0
}
fn d_y1() -> f64 {
    -0.5
}
fn d_y2() -> f64 {
    0.5
}
fn d_horizons() -> Vec<f64> {
    vec![4.0, 16.0, 64.0]
}
fn d_windows() -> Vec<f64> {
    vec![1.0, 2.0]
}
fn d_times() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn d_test_function() -> TestFunction {
    TestFunction::XPositive
}
fn d_n_prefixes() -> u64 {
    20
}
fn d_tail_a() -> Vec<f64> {
    vec![8.0, 16.0, 32.0]
}
fn d_tail_levels() -> Vec<f64> {
    vec![0.5, 2.0]
}
fn d_output() -> String {
    "report.json".into()
}
fn d_format() -> OutputFormat {
    OutputFormat::Json
}

/// One experiment. Every key except `seed` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,

    pub functional: FunctionalKind,
    #[serde(default = "d_one")]
    pub phi_scale: f64,
    #[serde(default = "d_one")]
    pub phi_rate: f64,
    #[serde(default = "d_one")]
    pub phi_rate2: f64,
    #[serde(default = "d_y1")]
    pub level_y1: f64,
    #[serde(default = "d_y2")]
    pub level_y2: f64,
    #[serde(default = "d_one")]
    pub potential_height: f64,
    #[serde(default = "d_y1")]
    pub potential_lo_y: f64,
    #[serde(default = "d_y2")]
    pub potential_hi_y: f64,

    #[serde(default = "d_n_paths")]
    pub n_paths: u64,
    /// Time step as a fraction of the horizon.
    #[serde(default = "d_time_step_ratio")]
    pub time_step_ratio: f64,
    #[serde(default = "d_local_time")]
    pub local_time: LocalTimeChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_y: Option<f64>,
    #[serde(default = "d_l_max")]
    pub l_max: f64,
    #[serde(default = "d_n_levels")]
    pub n_levels: u64,
    #[serde(default = "d_n_mc")]
    pub n_mc: u64,
    #[serde(default = "d_grid_step")]
    pub grid_step_y: f64,

    #[serde(default = "d_horizons")]
    pub horizons_t: Vec<f64>,
    #[serde(default = "d_windows")]
    pub windows_c: Vec<f64>,
    #[serde(default = "d_times")]
    pub times_s: Vec<f64>,
    #[serde(default = "d_one")]
    pub prefix_time_s: f64,
    #[serde(default = "d_n_prefixes")]
    pub n_prefixes: u64,
    #[serde(default = "d_test_function")]
    pub test_function: TestFunction,
    #[serde(default = "d_tail_a")]
    pub tail_a: Vec<f64>,
    #[serde(default = "d_tail_levels")]
    pub tail_levels_l: Vec<f64>,

    #[serde(default = "d_output")]
    pub output: String,
    #[serde(default = "d_format")]
    pub format: OutputFormat,
}

impl ExperimentConfig {
    /// Defaults for everything but the functional and the seed.
    pub fn new(functional: FunctionalKind, seed: u64) -> Self {
        Self {
            seed,
            functional,
            phi_scale: 1.0,
            phi_rate: 1.0,
            phi_rate2: 1.0,
            level_y1: d_y1(),
            level_y2: d_y2(),
            potential_height: 1.0,
            potential_lo_y: d_y1(),
            potential_hi_y: d_y2(),
            n_paths: d_n_paths(),
            time_step_ratio: d_time_step_ratio(),
            local_time: d_local_time(),
            bandwidth_y: None,
            l_max: d_l_max(),
            n_levels: d_n_levels(),
            n_mc: d_n_mc(),
            grid_step_y: d_grid_step(),
            horizons_t: d_horizons(),
            windows_c: d_windows(),
            times_s: d_times(),
            prefix_time_s: 1.0,
            n_prefixes: d_n_prefixes(),
            test_function: d_test_function(),
            tail_a: d_tail_a(),
            tail_levels_l: d_tail_levels(),
            output: d_output(),
            format: d_format(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// TOML integers are signed, so seeds above `i64::MAX` do not serialize.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.mc_params().validate()?;
        self.functional()?;
        for (name, xs) in [
            ("horizons_t", &self.horizons_t),
            ("windows_c", &self.windows_c),
            ("times_s", &self.times_s),
            ("tail_a", &self.tail_a),
        ] {
            if xs.is_empty() {
                return Err(invalid(name, "must not be empty"));
            }
            for &x in xs.iter() {
                require_positive(name, x)?;
            }
        }
        for &l in &self.tail_levels_l {
            crate::error::require_nonnegative("tail_levels_l", l)?;
        }
        require_positive("prefix_time_s", self.prefix_time_s)?;
        if self.n_prefixes == 0 {
            return Err(invalid("n_prefixes", "must be positive"));
        }
        if self.output.is_empty() {
            return Err(invalid("output", "must not be empty"));
        }
        Ok(())
    }

    pub fn mc_params(&self) -> McParams {
        McParams {
            n_paths: self.n_paths,
            dt_ratio: self.time_step_ratio,
            local_time: self.local_time,
            bandwidth: self.bandwidth_y,
            measure: MeasureConfig {
                l_max: self.l_max,
                n_levels: self.n_levels,
                n_mc: self.n_mc,
            },
            grid_step: self.grid_step_y,
        }
    }

    pub fn functional(&self) -> Result<FunctionalSpec> {
        match self.functional {
            FunctionalKind::Zero => Ok(builtin_zero()),
            FunctionalKind::LocalTimeZero => builtin_local_time_zero(Profile::exp(self.phi_scale, self.phi_rate)?),
            FunctionalKind::Supremum => builtin_supremum(Profile::exp(self.phi_scale, self.phi_rate)?),
            FunctionalKind::ExpIntegral => builtin_exp_integral(Potential::indicator(
                self.potential_height,
                self.potential_lo_y,
                self.potential_hi_y,
            )?),
            FunctionalKind::TwoLevel => builtin_two_level(
                Profile2::exp(self.phi_scale, self.phi_rate, self.phi_rate2)?,
                self.level_y1,
                self.level_y2,
            ),
            FunctionalKind::Edwards => Ok(builtin_edwards()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::parse("seed = 7\nfunctional = \"local_time_zero\"\n").unwrap();
        assert_eq!(c, ExperimentConfig::new(FunctionalKind::LocalTimeZero, 7));
    }

    #[test]
    fn round_trip_is_field_equal() {
        let mut c = ExperimentConfig::new(FunctionalKind::TwoLevel, 42);
        c.bandwidth_y = Some(0.03);
        c.horizons_t = vec![2.0, 8.0];
        c.test_function = TestFunction::SinXExpLocalTime;
        c.format = OutputFormat::Csv;
        assert_eq!(ExperimentConfig::parse(&c.to_toml().unwrap()).unwrap(), c);
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(ExperimentConfig::parse("functional = \"zero\"\n").is_err());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(ExperimentConfig::parse("seed = 1\nfunctional = \"zero\"\nhorizon = 3\n").is_err());
        assert!(ExperimentConfig::parse("seed = 1\nfunctional = \"zero\"\ntime_step_ratio = 0.0\n").is_err());
        assert!(ExperimentConfig::parse("seed = 1\nfunctional = \"zero\"\ntime_step_ratio = -1e-3\n").is_err());
        assert!(ExperimentConfig::parse("seed = 1\nfunctional = \"two_level\"\nlevel_y1 = 1.0\nlevel_y2 = 0.0\n").is_err());
        assert!(ExperimentConfig::parse("seed = 1\nfunctional = \"zero\"\nwindows_c = []\n").is_err());
    }
}
