//! Experiment configuration, read from a TOML file.
//!
//! Every section is optional and falls back to the defaults used by the
//! shipped `configs/`. Unknown keys are rejected at parse time; range checks
//! live in [`LabConfig::diagnostics`] so that `validate` can report all of
//! them at once.

use std::fmt;
use std::path::{Path, PathBuf};

use anosov_core::cone::{ScanGrid, TimeDirection};
use anosov_core::embedding::{ConvergenceGrid, RadiusSchedule};
use anosov_core::flow::FlowOptions;
use anosov_core::model::horizon::HorizonSampling;
use anosov_core::model::{Disk, DiskLattice, GaussBonnetGrid, ProfileParams, QuotientSpec};
use anosov_core::profile::TubeProfile;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Horizon,
    ModelScan,
    Splitting,
    Lyapunov,
    Conjugate,
    Convergence,
    Periodicity,
    Mesh,
    GaussBonnet,
    PerturbationScan,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Horizon => "horizon",
            Experiment::ModelScan => "model-scan",
            Experiment::Splitting => "splitting",
            Experiment::Lyapunov => "lyapunov",
            Experiment::Conjugate => "conjugate",
            Experiment::Convergence => "convergence",
            Experiment::Periodicity => "periodicity",
            Experiment::Mesh => "mesh",
            Experiment::GaussBonnet => "gauss-bonnet",
            Experiment::PerturbationScan => "perturbation-scan",
        }
    }
}

/// Which surface the flow experiments run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Surface {
    /// Two planes joined by tubes over the lattice, divided by the quotient.
    #[default]
    Model,
    /// The unit flat torus: no tubes.
    FlatTorus,
    /// The tube-free torus `w = embedding.height` of the nested-tori map.
    EmbeddedTorus,
    /// The model quotient with the metric pulled back by the embedding.
    EmbeddedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub surface: Surface,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub quotient: QuotientConfig,
    #[serde(default)]
    pub horizon: HorizonConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub lyapunov: LyapunovConfig,
    #[serde(default)]
    pub splitting: SplittingConfig,
    #[serde(default)]
    pub conjugate: ConjugateConfig,
    #[serde(default)]
    pub gauss_bonnet: GaussBonnetConfig,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub disks: Vec<DiskConfig>,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            disks: DiskLattice::default_two_disk()
                .disks
                .iter()
                .map(|d| DiskConfig {
                    center: d.center,
                    radius: d.radius,
                })
                .collect(),
        }
    }
}

impl LatticeConfig {
    pub fn lattice(&self) -> DiskLattice {
        DiskLattice {
            disks: self
                .disks
                .iter()
                .map(|d| Disk {
                    center: d.center,
                    radius: d.radius,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskConfig {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    pub collar: f64,
    pub neck_fraction: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        let p = ProfileParams::default();
        Self {
            collar: p.collar,
            neck_fraction: p.neck_fraction,
        }
    }
}

impl ProfileConfig {
    pub fn params(&self) -> ProfileParams {
        ProfileParams {
            collar: self.collar,
            neck_fraction: self.neck_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuotientConfig {
    pub a: u32,
    pub b: u32,
}

impl Default for QuotientConfig {
    fn default() -> Self {
        Self { a: 1, b: 1 }
    }
}

impl QuotientConfig {
    pub fn spec(&self) -> QuotientSpec {
        QuotientSpec {
            a: self.a,
            b: self.b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HorizonConfig {
    pub angular: usize,
    pub offsets: usize,
    pub random_rays: usize,
    pub t_max: f64,
}

impl Default for HorizonConfig {
    fn default() -> Self {
        let s = HorizonSampling::default();
        Self {
            angular: s.angular,
            offsets: s.offsets,
            random_rays: s.random_rays,
            t_max: s.t_max,
        }
    }
}

impl HorizonConfig {
    pub fn sampling(&self, seed: u64) -> HorizonSampling {
        HorizonSampling {
            angular: self.angular,
            offsets: self.offsets,
            random_rays: self.random_rays,
            t_max: self.t_max,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        let o = FlowOptions::default();
        Self {
            rtol: o.rtol,
            atol: o.atol,
            max_step: o.max_step,
        }
    }
}

impl FlowConfig {
    pub fn options(&self) -> FlowOptions {
        FlowOptions {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    /// Scan time; when absent, 1.5 times the horizon bound of the cores.
    pub tau: Option<f64>,
    pub spatial: [usize; 2],
    pub angular: usize,
    pub direction: TimeDirection,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let g = ScanGrid::default();
        Self {
            tau: None,
            spatial: g.spatial,
            angular: g.angular,
            direction: TimeDirection::Forward,
        }
    }
}

impl ScanConfig {
    pub fn grid(&self) -> ScanGrid {
        ScanGrid {
            spatial: self.spatial,
            angular: self.angular,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingConfig {
    pub schedule: RadiusSchedule,
    /// Family parameters for `convergence` and `periodicity`.
    pub s_values: Vec<f64>,
    /// Family parameter for `mesh` and the embedded surfaces.
    pub s: f64,
    /// Slab height of the `embedded-torus` surface.
    pub height: f64,
    pub v_samples: usize,
    pub w_samples: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        let g = ConvergenceGrid::default();
        Self {
            schedule: RadiusSchedule::Quadratic,
            s_values: vec![10.0, 20.0, 40.0, 80.0],
            s: 4.0,
            height: 0.0,
            v_samples: g.v_samples,
            w_samples: g.w_samples,
        }
    }
}

impl EmbeddingConfig {
    pub fn grid(&self) -> ConvergenceGrid {
        ConvergenceGrid {
            v_samples: self.v_samples,
            w_samples: self.w_samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub cells_per_unit: usize,
    pub tube_rings: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            cells_per_unit: 24,
            tube_rings: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovConfig {
    pub samples: usize,
    /// Each sample is estimated independently at every listed time.
    pub times: Vec<f64>,
    /// Renormalization interval.
    pub step: f64,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            samples: 4,
            times: vec![500.0, 1000.0],
            step: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplittingConfig {
    pub samples: usize,
    pub iterations: usize,
}

impl Default for SplittingConfig {
    fn default() -> Self {
        Self {
            samples: 16,
            iterations: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConjugateConfig {
    /// Start point in the first bottom chart.
    pub start: [f64; 2],
    pub angle: f64,
    pub duration: f64,
}

impl Default for ConjugateConfig {
    fn default() -> Self {
        Self {
            start: [0.0, 0.0],
            angle: 0.0,
            duration: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussBonnetConfig {
    pub panels: usize,
    pub around: usize,
}

impl Default for GaussBonnetConfig {
    fn default() -> Self {
        let g = GaussBonnetGrid::default();
        Self {
            panels: g.panels,
            around: g.around,
        }
    }
}

impl GaussBonnetConfig {
    pub fn grid(&self) -> GaussBonnetGrid {
        GaussBonnetGrid {
            panels: self.panels,
            around: self.around,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationConfig {
    /// Signed bump amplitudes `ε`, scanned in order of `|ε|`. Negative
    /// values make the corridors between disks positively curved.
    pub amplitudes: Vec<f64>,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            amplitudes: vec![0.0, -2e-6, -5e-6, -1e-5, -2e-5, -5e-5],
        }
    }
}

/// A problem with one config field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

struct Checker(Vec<Diagnostic>);

impl Checker {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic {
            path: path.into(),
            message: message.into(),
        });
    }

    fn positive(&mut self, path: &str, x: f64) {
        if !(x > 0.0 && x.is_finite()) {
            self.push(path, format!("must be positive and finite, got {x}"));
        }
    }

    /// Flow tolerances outside these ranges cannot be met in double
    /// precision or make runs crawl.
    fn within(&mut self, path: &str, x: f64, [lo, hi]: [f64; 2]) {
        if !(lo..=hi).contains(&x) {
            self.push(path, format!("must lie in [{lo:e}, {hi:e}], got {x}"));
        }
    }

    fn at_least(&mut self, path: &str, n: usize, min: usize) {
        if n < min {
            self.push(path, format!("must be at least {min}, got {n}"));
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
}

impl LabConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Every out-of-range field; empty iff the config is runnable.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut c = Checker(Vec::new());
        let lattice = self.lattice.lattice();
        for (i, msg) in lattice.diagnostics() {
            let field = if msg.starts_with("radius") {
                ".radius"
            } else if msg.starts_with("center") {
                ".center"
            } else {
                ""
            };
            c.push(format!("lattice.disks[{i}]{field}"), msg);
        }

        let p = &self.profile;
        if !(p.collar >= 0.0 && p.collar.is_finite()) {
            c.push(
                "profile.collar",
                format!("must be non-negative, got {}", p.collar),
            );
        }
        if !(p.neck_fraction > 0.0 && p.neck_fraction < 1.0) {
            c.push(
                "profile.neck_fraction",
                format!("must lie in (0, 1), got {}", p.neck_fraction),
            );
        }
        if c.0.is_empty() && self.needs_model() {
            for (i, d) in lattice.disks.iter().enumerate() {
                if let Err(e) = TubeProfile::build(d.radius, p.neck_fraction * d.radius, p.collar) {
                    c.push(format!("lattice.disks[{i}].radius"), e.to_string());
                }
            }
        }

        if self.quotient.a == 0 {
            c.push("quotient.a", "must be at least 1");
        }
        if self.quotient.b == 0 {
            c.push("quotient.b", "must be at least 1");
        }

        let h = &self.horizon;
        c.at_least("horizon.angular", h.angular, 1);
        c.at_least("horizon.offsets", h.offsets, 1);
        c.positive("horizon.t_max", h.t_max);

        c.within("flow.rtol", self.flow.rtol, [1e-14, 1e-2]);
        c.within("flow.atol", self.flow.atol, [1e-16, 1e-2]);
        c.within("flow.max_step", self.flow.max_step, [1e-6, 1.0]);

        if let Some(tau) = self.scan.tau {
            c.positive("scan.tau", tau);
        }
        c.at_least("scan.spatial[0]", self.scan.spatial[0], 2);
        c.at_least("scan.spatial[1]", self.scan.spatial[1], 2);
        c.at_least("scan.angular", self.scan.angular, 2);

        let e = &self.embedding;
        if matches!(
            self.experiment,
            Experiment::Convergence | Experiment::Periodicity
        ) && e.s_values.is_empty()
        {
            c.push("embedding.s_values", "must not be empty");
        }
        for (i, s) in e.s_values.iter().enumerate() {
            c.positive(&format!("embedding.s_values[{i}]"), *s);
        }
        c.positive("embedding.s", e.s);
        if !(0.0..=1.0).contains(&e.height) {
            c.push(
                "embedding.height",
                format!("must lie in [0, 1], got {}", e.height),
            );
        }
        c.at_least("embedding.v_samples", e.v_samples, 2);
        c.at_least("embedding.w_samples", e.w_samples, 2);

        c.at_least("mesh.cells_per_unit", self.mesh.cells_per_unit, 2);

        let l = &self.lyapunov;
        c.at_least("lyapunov.samples", l.samples, 1);
        c.positive("lyapunov.step", l.step);
        if l.times.is_empty() {
            c.push("lyapunov.times", "must not be empty");
        }
        for (i, t) in l.times.iter().enumerate() {
            if !(t.is_finite() && *t > l.step) {
                c.push(
                    format!("lyapunov.times[{i}]"),
                    format!("must exceed lyapunov.step, got {t}"),
                );
            }
        }

        c.at_least("splitting.samples", self.splitting.samples, 1);
        c.at_least("splitting.iterations", self.splitting.iterations, 1);
        c.positive("conjugate.duration", self.conjugate.duration);
        c.at_least("gauss_bonnet.panels", self.gauss_bonnet.panels, 1);
        c.at_least("gauss_bonnet.around", self.gauss_bonnet.around, 2);

        if self.experiment == Experiment::PerturbationScan
            && self.perturbation.amplitudes.is_empty()
        {
            c.push("perturbation.amplitudes", "must not be empty");
        }
        for (i, a) in self.perturbation.amplitudes.iter().enumerate() {
            if !(a.abs() < 1.0) {
                c.push(
                    format!("perturbation.amplitudes[{i}]"),
                    format!("must lie in (-1, 1), got {a}"),
                );
            }
        }

        let allowed: &[Surface] = match self.experiment {
            Experiment::ModelScan
            | Experiment::Splitting
            | Experiment::Lyapunov
            | Experiment::Conjugate => &[
                Surface::Model,
                Surface::FlatTorus,
                Surface::EmbeddedTorus,
                Surface::EmbeddedModel,
            ],
            Experiment::GaussBonnet => {
                &[Surface::Model, Surface::FlatTorus, Surface::EmbeddedModel]
            }
            Experiment::PerturbationScan => &[Surface::Model],
            _ => &[Surface::Model],
        };
        if !allowed.contains(&self.surface) {
            c.push(
                "surface",
                format!(
                    "{:?} is not supported by experiment {}",
                    self.surface,
                    self.experiment.name()
                ),
            );
        }
        c.0
    }

    fn needs_model(&self) -> bool {
        let flow_on_model = matches!(self.surface, Surface::Model | Surface::EmbeddedModel)
            && !matches!(
                self.experiment,
                Experiment::Horizon | Experiment::Convergence | Experiment::Periodicity
            );
        flow_on_model || self.experiment == Experiment::Mesh
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = LabConfig::from_toml("experiment = \"model-scan\"").unwrap();
        assert_eq!(c.lattice.lattice(), DiskLattice::default_two_disk());
        assert_eq!(c.scan.grid(), ScanGrid::default());
        assert!(c.diagnostics().is_empty());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = LabConfig::from_toml("experiment = \"horizon\"\nseed = 3").unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
        let err = LabConfig::from_toml("experiment = \"horizon\"\n[scan]\ntau = 1.0\ngrid = 3")
            .unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn round_trips_through_toml() {
        let c = LabConfig::from_toml("experiment = \"lyapunov\"\nrng_seed = 7\n[scan]\ntau = 2.5")
            .unwrap();
        assert_eq!(LabConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
