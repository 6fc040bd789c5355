//! TOML run configuration: a top-level seed and output directory plus one
//! section per runnable model. Unknown keys are rejected everywhere so a
//! typo cannot silently fall back to a default.

use serde::Deserialize;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed; replicate `i` derives its own stream from it.
    pub seed: Option<u64>,
    /// Output directory; created if missing.
    pub out_dir: Option<String>,
    pub ibm: Option<IbmSection>,
    pub pde: Option<PdeSection>,
    pub tss: Option<TssSection>,
    pub inclusion: Option<InclusionSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IbmSection {
    pub xb: f64,
    pub xd: f64,
    pub eta: f64,
    #[serde(default = "default_p_mut")]
    pub p_mut: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    pub initial_size: usize,
    pub t_end: Option<f64>,
    /// Stop after this many accepted events (births and deaths).
    pub max_events: Option<u64>,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: u64,
    #[serde(default = "default_true")]
    pub self_competition: bool,
    #[serde(default)]
    pub unbounded_kernel: bool,
    /// Also write the accepted-event log (one row per birth/death).
    #[serde(default)]
    pub events_csv: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdeMode {
    Monomorphic,
    Bimorphic,
    Linear,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSection {
    pub mode: PdeMode,
    pub xb: f64,
    pub xd: f64,
    /// Second trait (bimorphic mode only).
    pub xb2: Option<f64>,
    pub xd2: Option<f64>,
    pub eta: Option<f64>,
    #[serde(default = "default_da")]
    pub da: f64,
    /// Grid height; defaults to a height fitted to the traits.
    pub a_max: Option<f64>,
    pub t_end: f64,
    /// Initial data is the stationary profile scaled by this factor.
    #[serde(default = "default_one")]
    pub initial_scale: f64,
    /// Bimorphic mode: scale of the second trait's stationary profile.
    #[serde(default = "default_invader_scale")]
    pub invader_scale: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TssSection {
    pub xb: f64,
    pub xd: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_tss_eta")]
    pub eta: f64,
    pub epsilon: f64,
    pub t_end: f64,
    pub max_jumps: Option<u64>,
    /// Use the uniformized (fixed-tick) variant instead of the direct chain.
    #[serde(default)]
    pub subordinated: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionSection {
    pub xb: f64,
    pub xd: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_tss_eta")]
    pub eta: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    /// Constant diagonal mutation-activity policy in [0, 1].
    #[serde(default = "default_one")]
    pub diagonal_policy: f64,
    /// When set, also run substitution-sequence replicates at this step
    /// scale and report whether each stays in the funnel around the flow.
    pub tube_epsilon: Option<f64>,
    /// Funnel half-width for the tube check.
    #[serde(default = "default_tube_delta")]
    pub tube_delta: f64,
}

fn default_p_mut() -> f64 {
    0.05
}
fn default_sigma() -> f64 {
    0.05
}
fn default_snapshot_every() -> u64 {
    1000
}
fn default_true() -> bool {
    true
}
fn default_da() -> f64 {
    0.01
}
fn default_one() -> f64 {
    1.0
}
fn default_invader_scale() -> f64 {
    0.05
}
fn default_tss_eta() -> f64 {
    0.0005
}
fn default_dt() -> f64 {
    1e-3
}
fn default_tube_delta() -> f64 {
    0.05
}
