//! Scenario configuration: a strict TOML document (unknown keys are load
//! errors) whose defaults reproduce the desk-scale reference setup. Every
//! range constraint is enforced at load time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, SpacetimePoint};
use crate::nuclearity::TranslationConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    /// Spatial dimension.
    pub s: usize,
    /// Base seed for every stochastic subroutine.
    pub seed: u64,
    /// Localization radius r of the double-cone base.
    pub r: f64,
    /// Energy threshold E.
    pub e_max: f64,
    /// Damping exponent γ ∈ [1/2, (s−1)/2).
    pub gamma: f64,
    /// Decay-loss exponent ε ∈ (0, 1).
    pub epsilon: f64,
    /// Nuclear indices p ∈ (0, 1] to evaluate.
    pub p_values: Vec<f64>,
    /// Multi-index order cutoff K for series and tables.
    pub k_cutoff: usize,
    pub grid: GridSection,
    pub h: HSection,
    pub family: FamilySection,
    pub cutoff: CutoffSection,
    pub fock: FockSection,
    pub corr: CorrSection,
    pub kernel: KernelSection,
    pub refine: RefineSection,
    pub multi_norm: MultiNormSection,
    pub n_sweep: NSweepSection,
    /// Named translation configurations for the N-point checks.
    pub configs: Vec<ConfigSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Points per axis (even).
    pub n: usize,
    /// Momentum cutoff.
    pub pmax: f64,
    /// Half-shifted grid layout (required for negative ω powers).
    pub half_shift: bool,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: 32, pmax: 8.0, half_shift: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HSection {
    /// The smearing function is the autocorrelation of the bump of radius
    /// `bump_fraction · r`.
    pub bump_fraction: f64,
}

impl Default for HSection {
    fn default() -> Self {
        HSection { bump_fraction: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilySection {
    /// Number of test functions.
    pub m: usize,
    /// Relative singular-value cutoff for subspace extraction.
    pub svd_tol: f64,
}

impl Default for FamilySection {
    fn default() -> Self {
        FamilySection { m: 20, svd_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CutoffSection {
    /// Smoothing pad ε̃ of the radial cutoffs, as a fraction of r.
    pub pad_fraction: f64,
}

impl Default for CutoffSection {
    fn default() -> Self {
        CutoffSection { pad_fraction: 0.25 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FockSection {
    /// Total occupancy cutoff.
    pub n_max: usize,
    /// Hard cap on the truncated Fock dimension.
    pub dim_cap: usize,
    /// Occupancy cutoff for Weyl-operator oracles.
    pub weyl_n_max: usize,
}

impl Default for FockSection {
    fn default() -> Self {
        FockSection { n_max: 6, dim_cap: 20_000, weyl_n_max: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrSection {
    /// Number of leading eigenvectors scanned.
    pub eig_count: usize,
    /// Radial fit window (must stay below the wrap limit).
    pub fit_lo: f64,
    pub fit_hi: f64,
    pub n_radii: usize,
    /// x⁰ = ray_fraction · |x⃗| on the spacelike ray scan.
    pub ray_fraction: f64,
    /// Sample budget of the support-vanishing shell scan.
    pub support_samples: usize,
}

impl Default for CorrSection {
    fn default() -> Self {
        CorrSection {
            eig_count: 5,
            fit_lo: 2.2,
            fit_hi: 6.0,
            n_radii: 8,
            ray_fraction: 0.5,
            support_samples: 400,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    /// Cutoff radius ρ of the kernel-norm sweep.
    pub rho: f64,
    /// Number of sweep radii in the valid zone.
    pub n_radii: usize,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection { rho: 1.0, n_radii: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefineSection {
    /// Grid sizes of the refinement sweep (the first is the base grid).
    pub grid_ns: Vec<usize>,
}

impl Default for RefineSection {
    fn default() -> Self {
        RefineSection { grid_ns: vec![32, 48] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiNormSection {
    /// Number of leading eigenmodes entering the multi-index tables.
    pub top_modes: usize,
    /// Multi-index order cutoff of the brute-force sweep.
    pub order_cutoff: usize,
    /// Random restarts of the rank-one ascent.
    pub restarts: usize,
}

impl Default for MultiNormSection {
    fn default() -> Self {
        MultiNormSection { top_modes: 2, order_cutoff: 3, restarts: 5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NSweepSection {
    /// Separation δ at which the N-independence of the bound is profiled.
    pub delta: f64,
    pub counts: Vec<usize>,
    /// δ values of the fixed-N profile.
    pub deltas: Vec<f64>,
}

impl Default for NSweepSection {
    fn default() -> Self {
        NSweepSection {
            delta: 50.0,
            counts: vec![2, 4, 8, 16],
            deltas: vec![0.0, 2.0, 5.0, 10.0, 20.0, 50.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSection {
    pub name: String,
    /// Points as [x0, x1, …, xs] rows.
    pub points: Vec<Vec<f64>>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            s: 3,
            seed: 20_260_809,
            r: 1.0,
            e_max: 4.0,
            gamma: 0.95,
            epsilon: 0.1,
            p_values: vec![0.5, 1.0],
            k_cutoff: 4,
            grid: GridSection::default(),
            h: HSection::default(),
            family: FamilySection::default(),
            cutoff: CutoffSection::default(),
            fock: FockSection::default(),
            corr: CorrSection::default(),
            kernel: KernelSection::default(),
            refine: RefineSection::default(),
            multi_norm: MultiNormSection::default(),
            n_sweep: NSweepSection::default(),
            configs: vec![
                ConfigSection {
                    name: "lightlike_pair".into(),
                    points: vec![vec![0.0, 0.0, 0.0, 0.0], vec![2.0, 2.0, 0.0, 0.0]],
                },
                ConfigSection {
                    name: "spacelike_pair".into(),
                    points: vec![vec![0.0, 0.0, 0.0, 0.0], vec![0.0, 5.0, 0.0, 0.0]],
                },
            ],
        }
    }
}

impl Scenario {
    /// The scale-covariant wide variant: the default geometry stretched by a
    /// factor of four (r = 4, pmax = 2, E = 1), leaving room inside the wrap
    /// limit for configurations separated up to δ = 20.
    pub fn wide() -> Self {
        let mut scn = Scenario::default();
        scn.r = 4.0;
        scn.e_max = 1.0;
        scn.grid.pmax = 2.0;
        scn.corr.fit_lo = 8.8;
        scn.corr.fit_hi = 24.0;
        scn.kernel.rho = 4.0;
        scn.configs = vec![
            ConfigSection {
                name: "lightlike_pair".into(),
                points: vec![vec![0.0, 0.0, 0.0, 0.0], vec![2.0, 2.0, 0.0, 0.0]],
            },
            ConfigSection {
                name: "delta5_pair".into(),
                points: vec![vec![0.0, 0.0, 0.0, 0.0], vec![0.0, 5.0, 0.0, 0.0]],
            },
            ConfigSection {
                name: "delta20_pair".into(),
                points: vec![vec![0.0, 0.0, 0.0, 0.0], vec![0.0, 20.0, 0.0, 0.0]],
            },
        ];
        scn
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let scn: Scenario =
            toml::from_str(text).map_err(|e| Error::Config(format!("scenario parse: {e}")))?;
        scn.validate()?;
        Ok(scn)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("scenario encode: {e}")))
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec { s: self.s, n: self.grid.n, pmax: self.grid.pmax, half_shift: self.grid.half_shift }
    }

    pub fn grid_spec_for_n(&self, n: usize) -> GridSpec {
        GridSpec { s: self.s, n, pmax: self.grid.pmax, half_shift: self.grid.half_shift }
    }

    /// Smoothing pad ε̃ = pad_fraction · r.
    pub fn pad(&self) -> f64 {
        self.cutoff.pad_fraction * self.r
    }

    pub fn translation_configs(&self) -> Result<Vec<TranslationConfig>> {
        let mut out = Vec::with_capacity(self.configs.len());
        for c in &self.configs {
            let mut points = Vec::with_capacity(c.points.len());
            for row in &c.points {
                if row.len() != self.s + 1 {
                    return Err(Error::Config(format!(
                        "config '{}': point has {} coordinates, expected {} (x0 first)",
                        c.name,
                        row.len(),
                        self.s + 1
                    )));
                }
                points.push(SpacetimePoint::from_slice(row));
            }
            out.push(TranslationConfig::new(c.name.clone(), points));
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s < 2 {
            return Err(Error::Config(format!("s = {} < 2", self.s)));
        }
        if self.grid.n < 2 || self.grid.n % 2 != 0 {
            return Err(Error::Config(format!("grid.n = {} must be even", self.grid.n)));
        }
        if !(self.grid.pmax > 0.0) {
            return Err(Error::Config("grid.pmax must be positive".into()));
        }
        if !(self.r > 0.0) {
            return Err(Error::Config("r must be positive".into()));
        }
        if !(self.e_max > 0.0) {
            return Err(Error::Config("e_max must be positive".into()));
        }
        // at s = 2 the admissible range [1/2, (s−1)/2) is empty; loading still
        // succeeds so the decay commands can reject with the dedicated error
        if self.s >= 3 {
            let gamma_hi = (self.s as f64 - 1.0) / 2.0;
            if !(self.gamma >= 0.5 && self.gamma < gamma_hi) {
                return Err(Error::Config(format!(
                    "gamma = {} outside [1/2, (s-1)/2) = [0.5, {gamma_hi})",
                    self.gamma
                )));
            }
        } else if self.gamma < 0.5 {
            return Err(Error::Config(format!("gamma = {} below 1/2", self.gamma)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon = {} outside (0, 1)", self.epsilon)));
        }
        for &p in &self.p_values {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Config(format!("p = {p} outside (0, 1]")));
            }
        }
        if self.family.m == 0 {
            return Err(Error::Config("family.m must be at least 1".into()));
        }
        if !(self.family.svd_tol > 0.0 && self.family.svd_tol < 1.0) {
            return Err(Error::Config("family.svd_tol must lie in (0, 1)".into()));
        }
        if !(self.cutoff.pad_fraction > 0.0) {
            return Err(Error::Config("cutoff.pad_fraction must be positive".into()));
        }
        if self.fock.n_max == 0 {
            return Err(Error::Config("fock.n_max must be at least 1".into()));
        }
        if self.corr.n_radii < 4 {
            return Err(Error::Config("corr.n_radii must be at least 4".into()));
        }
        if !(self.corr.fit_lo > 0.0 && self.corr.fit_hi > self.corr.fit_lo) {
            return Err(Error::Config("corr fit window must satisfy 0 < fit_lo < fit_hi".into()));
        }
        if !(self.corr.ray_fraction >= 0.0 && self.corr.ray_fraction < 1.0) {
            return Err(Error::Config("corr.ray_fraction must lie in [0, 1)".into()));
        }
        if self.refine.grid_ns.is_empty() {
            return Err(Error::Config("refine.grid_ns must not be empty".into()));
        }
        for &n in &self.refine.grid_ns {
            if n < 2 || n % 2 != 0 {
                return Err(Error::Config(format!("refine grid n = {n} must be even")));
            }
        }
        if self.multi_norm.top_modes == 0 || self.multi_norm.restarts == 0 {
            return Err(Error::Config("multi_norm.top_modes and restarts must be positive".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for c in &self.configs {
            if !names.insert(c.name.clone()) {
                return Err(Error::Config(format!("duplicate config name '{}'", c.name)));
            }
            if c.points.is_empty() {
                return Err(Error::Config(format!("config '{}' has no points", c.name)));
            }
        }
        self.translation_configs()?;
        Ok(())
    }

    /// Nuclearity-grade validation: the decay machinery needs s ≥ 3.
    pub fn require_decay_dimension(&self) -> Result<()> {
        if self.s < 3 {
            return Err(Error::Config(format!(
                "s = {} unsupported: the nuclearity bounds fail in two spatial dimensions \
                 (infrared-singular); use s >= 3",
                self.s
            )));
        }
        Ok(())
    }
}

/// Deterministic per-task seed derived from the scenario seed and a label
/// (FNV-1a over the label bytes).
pub fn task_seed(base: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    base ^ h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_is_valid() {
        let scn = Scenario::default();
        scn.validate().unwrap();
        assert_eq!(scn.grid.n, 32);
        assert_eq!(scn.configs.len(), 2);
        let wide = Scenario::wide();
        wide.validate().unwrap();
        assert_eq!(wide.grid.pmax, 2.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Scenario::from_toml("nonexistent_key = 3").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = Scenario::from_toml("[grid]\nn = 16\ntypo = 1").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn gamma_boundary_is_open() {
        // γ = (s−1)/2 exactly must be rejected at load
        let err = Scenario::from_toml("gamma = 1.0").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(Scenario::from_toml("gamma = 0.5").is_ok());
    }

    #[test]
    fn s_two_rejected_for_decay_commands() {
        let scn = Scenario::from_toml("s = 2\ngamma = 0.5\nconfigs = []").unwrap();
        let err = scn.require_decay_dimension().unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("infrared"), "message: {msg}");
    }

    #[test]
    fn roundtrip_and_point_shapes() {
        let scn = Scenario::default();
        let text = scn.to_toml().unwrap();
        let back = Scenario::from_toml(&text).unwrap();
        assert_eq!(back.grid.n, scn.grid.n);
        assert_eq!(back.configs.len(), scn.configs.len());

        let bad = r#"
[[configs]]
name = "short"
points = [[0.0, 1.0]]
"#;
        assert!(Scenario::from_toml(bad).is_err());
    }

    #[test]
    fn task_seeds_differ_by_label() {
        assert_ne!(task_seed(7, "alpha"), task_seed(7, "beta"));
        assert_eq!(task_seed(7, "alpha"), task_seed(7, "alpha"));
    }
}
