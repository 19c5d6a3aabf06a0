use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{AlphaMode, MaskSignal, MutationParams, WallSet};
use crate::field::Dims;
use crate::genome::{GeneSchema, GrowthForm, KernelWiring, RingAssignment, N_CHANNELS, N_KERNELS};

/// Run configuration, stored as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub kernels: usize,
    /// Kernel radius `R` in pixels.
    pub radius: usize,
    pub n_ring: usize,
    pub ring_assignment: RingAssignment,
    pub epsilon: f32,
    pub dt: f64,
    pub gamma_mut: f64,
    pub gamma_pen: f64,
    pub r_diff: usize,
    pub r_oxy: usize,
    pub theta_pen: f64,
    pub delta_max: f64,
    /// Half-size `s` of the mutation box.
    pub mutation_half_size: usize,
    pub growth_form: GrowthForm,
    pub alpha_mode: AlphaMode,
    pub alpha_signal: MaskSignal,
    pub occupancy_signal: MaskSignal,
    pub schema: GeneSchema,
    pub wiring: KernelWiring,
    pub walls: WallSet,
    pub seed: u64,
    pub event_log_capacity: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            width: 512,
            height: 1024,
            channels: N_CHANNELS,
            kernels: N_KERNELS,
            radius: 12,
            n_ring: 24,
            ring_assignment: RingAssignment::Linear,
            epsilon: 0.01,
            dt: 0.1,
            gamma_mut: 5.0,
            gamma_pen: 0.2,
            r_diff: 2,
            r_oxy: 12,
            theta_pen: 0.75,
            delta_max: 0.05,
            mutation_half_size: 10,
            growth_form: GrowthForm::Bipolar,
            alpha_mode: AlphaMode::All,
            alpha_signal: MaskSignal::Magnitude,
            occupancy_signal: MaskSignal::Magnitude,
            schema: GeneSchema::default(),
            wiring: KernelWiring::default(),
            walls: WallSet::default(),
            seed: 0,
            event_log_capacity: 4096,
        }
    }
}

impl SimConfig {
    pub fn with_size(width: usize, height: usize) -> Self {
        SimConfig {
            width,
            height,
            ..SimConfig::default()
        }
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.width, self.height)
    }

    pub fn mutation(&self) -> MutationParams {
        MutationParams {
            gamma: self.gamma_mut,
            half_size: self.mutation_half_size,
            delta_max: self.delta_max,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::config("world dimensions must be positive"));
        }
        if self.channels != N_CHANNELS || self.kernels != N_KERNELS {
            return Err(Error::config(format!(
                "only {N_CHANNELS} channels and {N_KERNELS} kernels are supported"
            )));
        }
        let dims = self.dims();
        for (name, r) in [("radius", self.radius), ("r_diff", self.r_diff), ("r_oxy", self.r_oxy)] {
            if 2 * r >= dims.min_side() {
                return Err(Error::RadiusTooLarge { radius: r, dims });
            }
            if r == 0 && name == "radius" {
                return Err(Error::config("radius must be at least 1"));
            }
        }
        if self.n_ring == 0 {
            return Err(Error::config("n_ring must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt must be positive"));
        }
        for (name, v) in [
            ("gamma_mut", self.gamma_mut),
            ("gamma_pen", self.gamma_pen),
            ("delta_max", self.delta_max),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be a finite value >= 0")));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon < 1.0) {
            return Err(Error::config("epsilon must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.theta_pen) {
            return Err(Error::config("theta_pen must lie in [0, 1]"));
        }
        if self.mutation_half_size == 0 {
            return Err(Error::config("mutation_half_size must be at least 1"));
        }
        if self.event_log_capacity == 0 {
            return Err(Error::config("event_log_capacity must be at least 1"));
        }
        self.schema.validate()?;
        self.wiring.validate()?;
        self.walls.validate(dims)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        assert_eq!((cfg.width, cfg.height, cfg.radius, cfg.n_ring), (512, 1024, 12, 24));
        assert_eq!(SimConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn partial_json_uses_defaults() {
        let cfg = SimConfig::from_json(r#"{"width": 64, "height": 64, "gamma_mut": 0.5}"#).unwrap();
        assert_eq!(cfg.gamma_mut, 0.5);
        assert_eq!(cfg.gamma_pen, 0.2);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            r#"{"width": 20, "height": 64}"#,
            r#"{"width": 64, "height": 64, "gamma_pen": -1}"#,
            r#"{"width": 64, "height": 64, "dt": 0}"#,
            r#"{"width": 64, "height": 64, "kernels": 14}"#,
            r#"{"width": 64, "height": 64, "bogus": 1}"#,
        ];
        for text in bad {
            assert!(SimConfig::from_json(text).is_err(), "{text}");
        }
    }
}
