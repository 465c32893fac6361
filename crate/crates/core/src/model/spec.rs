//! Model description: lattice geometry, time-dependent couplings, noise rates.
//!
//! Indices are 0-based internally. Configuration files use 1-based site, mode
//! and quadrature labels.

use crate::error::ConfigError;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParticleKind {
    Fermion,
    Boson,
}

/// Piecewise-constant function of time.
///
/// `values[0]` holds before `breakpoints[0]`, `values[k]` on
/// `[breakpoints[k-1], breakpoints[k])`, and the last value afterwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl Schedule {
    pub fn constant(v: f64) -> Self {
        Self {
            breakpoints: Vec::new(),
            values: vec![v],
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, String> {
        if values.len() != breakpoints.len() + 1 {
            return Err(format!(
                "schedule needs {} values for {} breakpoints, got {}",
                breakpoints.len() + 1,
                breakpoints.len(),
                values.len()
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err("schedule breakpoints must be strictly increasing".into());
        }
        if breakpoints
            .iter()
            .chain(values.iter())
            .any(|x| !x.is_finite())
        {
            return Err("schedule entries must be finite".into());
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    pub fn at(&self, t: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= t);
        self.values[k]
    }

    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        let mut cuts = vec![t0];
        cuts.extend(
            self.breakpoints
                .iter()
                .copied()
                .filter(|&b| b > t0 && b < t1),
        );
        cuts.push(t1);
        cuts.windows(2)
            .map(|w| self.at(0.5 * (w[0] + w[1])) * (w[1] - w[0]))
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    fn negated(&self) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    fn same_function(&self, other: &Self) -> bool {
        let mut probes: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .copied()
            .collect();
        probes.sort_by(f64::total_cmp);
        probes.dedup();
        sample_times(&probes)
            .into_iter()
            .all(|t| (self.at(t) - other.at(t)).abs() <= 1e-12 * (1.0 + self.at(t).abs()))
    }
}

/// One representative time inside every region delimited by `breakpoints`.
pub fn sample_times(breakpoints: &[f64]) -> Vec<f64> {
    if breakpoints.is_empty() {
        return vec![0.0];
    }
    let mut out = vec![breakpoints[0] - 1.0];
    out.extend(breakpoints.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    out.push(breakpoints[breakpoints.len() - 1] + 1.0);
    out
}

/// Quadratic coupling entry `J^{alpha beta}_{v w}` (complex, time dependent).
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    pub v: usize,
    pub alpha: usize,
    pub w: usize,
    pub beta: usize,
    pub re: Schedule,
    pub im: Schedule,
}

/// Density-density interaction entry `U_{v w}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interaction {
    pub v: usize,
    pub w: usize,
    pub value: Schedule,
}

/// Linear drive entry `Omega^alpha_v` (bosons only).
#[derive(Clone, Debug, PartialEq)]
pub struct Displacement {
    pub v: usize,
    pub alpha: usize,
    pub value: Schedule,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseRates {
    #[serde(default)]
    pub kappa1: f64,
    #[serde(default)]
    pub kappa2: f64,
    #[serde(default)]
    pub kappa3: f64,
}

/// Constants of the initial-state moment assumption.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentAssumption {
    pub c0: f64,
    pub alpha0: f64,
    pub beta0: f64,
}

impl Default for MomentAssumption {
    fn default() -> Self {
        Self {
            c0: 1.0,
            alpha0: 1.0,
            beta0: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialState {
    /// Fock product state, one occupation per mode.
    Fock(Vec<usize>),
    /// Product of coherent states (bosons), one amplitude per mode.
    Coherent(Vec<(f64, f64)>),
}

/// Validated model description.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub kind: ParticleKind,
    pub sites: usize,
    pub modes_per_site: usize,
    /// Symmetrically completed quadratic couplings.
    pub couplings: Vec<Coupling>,
    /// Symmetrically completed interactions.
    pub interactions: Vec<Interaction>,
    pub displacements: Vec<Displacement>,
    pub noise: NoiseRates,
    pub assumption: MomentAssumption,
    pub initial: InitialState,
}

impl ModelSpec {
    pub fn num_modes(&self) -> usize {
        self.sites * self.modes_per_site
    }

    pub fn mode(&self, site: usize, sigma: usize) -> usize {
        site * self.modes_per_site + sigma
    }

    pub fn site_of(&self, v: usize) -> usize {
        v / self.modes_per_site
    }

    /// Union of all schedule breakpoints, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .couplings
            .iter()
            .flat_map(|c| c.re.breakpoints.iter().chain(c.im.breakpoints.iter()))
            .chain(
                self.interactions
                    .iter()
                    .flat_map(|u| u.value.breakpoints.iter()),
            )
            .chain(
                self.displacements
                    .iter()
                    .flat_map(|d| d.value.breakpoints.iter()),
            )
            .copied()
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Breakpoints strictly inside `(t0, t1)`, with the endpoints added.
    pub fn segment_cuts(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut cuts = vec![t0];
        cuts.extend(self.breakpoints().into_iter().filter(|&b| b > t0 && b < t1));
        cuts.push(t1);
        cuts
    }

    /// Quadratic coupling matrix indexed by `2 v + alpha`.
    pub fn gaussian_matrix_at(&self, t: f64) -> DMatrix<Complex64> {
        let m = self.num_modes();
        let mut j = DMatrix::zeros(2 * m, 2 * m);
        for c in &self.couplings {
            j[(2 * c.v + c.alpha, 2 * c.w + c.beta)] += Complex64::new(c.re.at(t), c.im.at(t));
        }
        j
    }

    pub fn gaussian_integral(&self, t0: f64, t1: f64) -> DMatrix<Complex64> {
        let m = self.num_modes();
        let mut j = DMatrix::zeros(2 * m, 2 * m);
        for c in &self.couplings {
            j[(2 * c.v + c.alpha, 2 * c.w + c.beta)] +=
                Complex64::new(c.re.integral(t0, t1), c.im.integral(t0, t1));
        }
        j
    }

    pub fn interaction_at(&self, t: f64) -> DMatrix<f64> {
        let m = self.num_modes();
        let mut u = DMatrix::zeros(m, m);
        for e in &self.interactions {
            u[(e.v, e.w)] += e.value.at(t);
        }
        u
    }

    pub fn interaction_integral(&self, t0: f64, t1: f64) -> DMatrix<f64> {
        let m = self.num_modes();
        let mut u = DMatrix::zeros(m, m);
        for e in &self.interactions {
            u[(e.v, e.w)] += e.value.integral(t0, t1);
        }
        u
    }

    /// Drive vector indexed by `2 v + alpha`.
    pub fn displacement_at(&self, t: f64) -> Vec<f64> {
        let mut o = vec![0.0; 2 * self.num_modes()];
        for d in &self.displacements {
            o[2 * d.v + d.alpha] += d.value.at(t);
        }
        o
    }

    /// Modes `w != v` sharing a nonzero coupling or interaction with `v` on another site.
    pub fn has_intersite_terms(&self) -> bool {
        self.couplings
            .iter()
            .any(|c| self.site_of(c.v) != self.site_of(c.w) && !(c.re.is_zero() && c.im.is_zero()))
            || self
                .interactions
                .iter()
                .any(|u| self.site_of(u.v) != self.site_of(u.w) && !u.value.is_zero())
    }
}

// ---------------------------------------------------------------------------
// configuration schema

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ScheduleConfig {
    Constant(f64),
    Piecewise {
        #[serde(default)]
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

impl ScheduleConfig {
    fn build(&self, entry: &str) -> Result<Schedule, ConfigError> {
        match self {
            ScheduleConfig::Constant(v) if v.is_finite() => Ok(Schedule::constant(*v)),
            ScheduleConfig::Constant(_) => Err(ConfigError::invalid(entry, "value must be finite")),
            ScheduleConfig::Piecewise {
                breakpoints,
                values,
            } => Schedule::new(breakpoints.clone(), values.clone())
                .map_err(|e| ConfigError::invalid(entry, e)),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    /// `[site, mode, quadrature]`, 1-based.
    pub a: [usize; 3],
    pub b: [usize; 3],
    pub re: Option<ScheduleConfig>,
    pub im: Option<ScheduleConfig>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    /// `[site, mode]`, 1-based.
    pub a: [usize; 2],
    pub b: [usize; 2],
    pub value: ScheduleConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementConfig {
    /// `[site, mode, quadrature]`, 1-based.
    pub mode: [usize; 3],
    pub value: ScheduleConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub occupations: Option<Vec<usize>>,
    /// Coherent amplitudes as `[re, im]` pairs.
    pub coherent: Option<Vec<[f64; 2]>>,
}

/// Optional run defaults stored alongside the model.
#[derive(Clone, Debug, Deserialize, Serialize, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub time: Option<f64>,
    pub epsilon: Option<f64>,
    pub trajectories: Option<usize>,
    pub seed: Option<u64>,
    pub trotter_steps: Option<usize>,
    pub truncation: Option<usize>,
    pub truncation_constant: Option<f64>,
    pub resample_every: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub particle: ParticleKind,
    pub sites: usize,
    pub modes_per_site: usize,
    #[serde(default)]
    pub noise: NoiseRates,
    #[serde(default)]
    pub assumption: Option<MomentAssumption>,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub coupling: Vec<CouplingConfig>,
    #[serde(default)]
    pub interaction: Vec<InteractionConfig>,
    #[serde(default)]
    pub displacement: Vec<DisplacementConfig>,
    #[serde(default)]
    pub run: RunConfig,
}

/// Parses a TOML document, applies `key.path=value` overrides, and validates it.
pub fn load_config(
    text: &str,
    overrides: &[String],
) -> Result<(ModelSpec, RunConfig), ConfigError> {
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: ModelConfig = toml::Value::Table(doc)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    let run = cfg.run.clone();
    Ok((build_model(&cfg)?, run))
}

fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(spec.into(), "expected key=value".into()))?;
    let value: toml::Value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = path.trim().split('.').collect();
    let mut root = toml::Value::Table(std::mem::take(doc));
    let res = set_path(&mut root, &parts, value).map_err(|e| ConfigError::Override(spec.into(), e));
    if let toml::Value::Table(t) = root {
        *doc = t;
    }
    res
}

fn set_path(node: &mut toml::Value, parts: &[&str], value: toml::Value) -> Result<(), String> {
    let (head, rest) = parts.split_first().ok_or("empty key")?;
    let child = match node {
        toml::Value::Table(t) => {
            if rest.is_empty() {
                t.insert(head.to_string(), value);
                return Ok(());
            }
            t.entry(head.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        }
        toml::Value::Array(a) => {
            let idx: usize = head
                .parse()
                .map_err(|_| format!("`{head}` is not an array index"))?;
            let len = a.len();
            let slot = a
                .get_mut(idx)
                .ok_or_else(|| format!("index {idx} out of range ({len})"))?;
            if rest.is_empty() {
                *slot = value;
                return Ok(());
            }
            slot
        }
        _ => return Err(format!("`{head}` does not name a table")),
    };
    set_path(child, rest, value)
}

fn mode_label(kind: &str, idx: usize, site: usize, sigma: usize) -> String {
    format!("{kind}[{idx}] (site {site}, mode {sigma})")
}

/// Validates a parsed configuration and completes the coupling symmetries.
pub fn build_model(cfg: &ModelConfig) -> Result<ModelSpec, ConfigError> {
    if cfg.sites == 0 || cfg.modes_per_site == 0 {
        return Err(ConfigError::invalid(
            "lattice",
            "sites and modes_per_site must be positive",
        ));
    }
    let n = cfg.sites;
    let l = cfg.modes_per_site;
    let m = n * l;
    let fermion = cfg.particle == ParticleKind::Fermion;

    for (name, k) in [
        ("kappa1", cfg.noise.kappa1),
        ("kappa2", cfg.noise.kappa2),
        ("kappa3", cfg.noise.kappa3),
    ] {
        if !(k.is_finite() && k >= 0.0) {
            return Err(ConfigError::invalid(
                format!("noise.{name}"),
                "rate must be finite and non-negative",
            ));
        }
    }
    let assumption = cfg.assumption.unwrap_or_default();
    if !(assumption.c0 > 0.0 && assumption.alpha0 > 0.0 && assumption.beta0 >= 0.0) {
        return Err(ConfigError::invalid(
            "assumption",
            "need c0 > 0, alpha0 > 0, beta0 >= 0",
        ));
    }

    let mode_of =
        |kind: &str, idx: usize, site: usize, sigma: usize| -> Result<usize, ConfigError> {
            if site == 0 || site > n || sigma == 0 || sigma > l {
                return Err(ConfigError::invalid(
                    mode_label(kind, idx, site, sigma),
                    format!("index outside lattice of {n} sites x {l} modes"),
                ));
            }
            Ok((site - 1) * l + (sigma - 1))
        };
    let quad = |kind: &str, idx: usize, q: usize| -> Result<usize, ConfigError> {
        if q == 1 || q == 2 {
            Ok(q - 1)
        } else {
            Err(ConfigError::invalid(
                format!("{kind}[{idx}]"),
                "quadrature label must be 1 or 2",
            ))
        }
    };

    // Quadratic couplings, keyed by (v, alpha, w, beta): (re, im, entry name).
    type CouplingKey = (usize, usize, usize, usize);
    let mut cmap: BTreeMap<CouplingKey, (Schedule, Schedule, String)> = BTreeMap::new();
    for (idx, c) in cfg.coupling.iter().enumerate() {
        let entry = format!("coupling[{idx}]");
        let v = mode_of("coupling", idx, c.a[0], c.a[1])?;
        let w = mode_of("coupling", idx, c.b[0], c.b[1])?;
        let alpha = quad("coupling", idx, c.a[2])?;
        let beta = quad("coupling", idx, c.b[2])?;
        let re =
            c.re.as_ref()
                .map(|s| s.build(&entry))
                .transpose()?
                .unwrap_or_else(Schedule::zero);
        let im =
            c.im.as_ref()
                .map(|s| s.build(&entry))
                .transpose()?
                .unwrap_or_else(Schedule::zero);
        if fermion && !re.is_zero() {
            return Err(ConfigError::invalid(
                entry,
                "fermionic quadratic couplings must be purely imaginary (nonzero real part given)",
            ));
        }
        if !fermion && !im.is_zero() {
            return Err(ConfigError::invalid(
                entry,
                "bosonic quadratic couplings must be real",
            ));
        }
        if fermion && v == w && alpha == beta {
            return Err(ConfigError::invalid(
                entry,
                "fermionic diagonal Majorana coupling is not allowed",
            ));
        }
        let key = (v, alpha, w, beta);
        if cmap.contains_key(&key) {
            return Err(ConfigError::invalid(entry, "duplicate coupling entry"));
        }
        cmap.insert(key, (re, im, entry));
    }
    let mut couplings = Vec::new();
    let keys: Vec<_> = cmap.keys().copied().collect();
    for key in &keys {
        let (v, alpha, w, beta) = *key;
        let (re, im, entry) = cmap[key].clone();
        let mirror_key = (w, beta, v, alpha);
        let (mre, mim) = if fermion {
            (re.negated(), im.negated())
        } else {
            (re.clone(), im.clone())
        };
        couplings.push(Coupling {
            v,
            alpha,
            w,
            beta,
            re,
            im,
        });
        if mirror_key == *key {
            continue;
        }
        match cmap.get(&mirror_key) {
            Some((r2, i2, e2)) => {
                if !(r2.same_function(&mre) && i2.same_function(&mim)) {
                    let rule = if fermion {
                        "antisymmetric"
                    } else {
                        "symmetric"
                    };
                    return Err(ConfigError::invalid(
                        format!("{entry} / {e2}"),
                        format!("explicit mirror entries must be {rule}"),
                    ));
                }
            }
            None => couplings.push(Coupling {
                v: w,
                alpha: beta,
                w: v,
                beta: alpha,
                re: mre,
                im: mim,
            }),
        }
    }

    let mut umap: BTreeMap<(usize, usize), (Schedule, String)> = BTreeMap::new();
    for (idx, u) in cfg.interaction.iter().enumerate() {
        let entry = format!("interaction[{idx}]");
        let v = mode_of("interaction", idx, u.a[0], u.a[1])?;
        let w = mode_of("interaction", idx, u.b[0], u.b[1])?;
        let s = u.value.build(&entry)?;
        if umap.contains_key(&(v, w)) {
            return Err(ConfigError::invalid(entry, "duplicate interaction entry"));
        }
        umap.insert((v, w), (s, entry));
    }
    let mut interactions = Vec::new();
    for (&(v, w), (s, entry)) in &umap {
        interactions.push(Interaction {
            v,
            w,
            value: s.clone(),
        });
        if v == w {
            continue;
        }
        match umap.get(&(w, v)) {
            Some((s2, e2)) => {
                if !s2.same_function(s) {
                    return Err(ConfigError::invalid(
                        format!("{entry} / {e2}"),
                        "explicit mirror interactions must be symmetric",
                    ));
                }
            }
            None => interactions.push(Interaction {
                v: w,
                w: v,
                value: s.clone(),
            }),
        }
    }

    let mut displacements = Vec::new();
    for (idx, d) in cfg.displacement.iter().enumerate() {
        let entry = format!("displacement[{idx}]");
        let v = mode_of("displacement", idx, d.mode[0], d.mode[1])?;
        let alpha = quad("displacement", idx, d.mode[2])?;
        let value = d.value.build(&entry)?;
        if fermion && !value.is_zero() {
            return Err(ConfigError::invalid(
                entry,
                "linear terms are not allowed for fermions",
            ));
        }
        displacements.push(Displacement { v, alpha, value });
    }

    let initial = match (&cfg.initial.occupations, &cfg.initial.coherent) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::invalid(
                "initial",
                "give either occupations or coherent, not both",
            ))
        }
        (Some(occ), None) => {
            if occ.len() != m {
                return Err(ConfigError::invalid(
                    "initial.occupations",
                    format!("expected {m} entries"),
                ));
            }
            if fermion && occ.iter().any(|&k| k > 1) {
                return Err(ConfigError::invalid(
                    "initial.occupations",
                    "fermionic occupations must be 0 or 1",
                ));
            }
            InitialState::Fock(occ.clone())
        }
        (None, Some(coh)) => {
            if fermion {
                return Err(ConfigError::invalid(
                    "initial.coherent",
                    "coherent states are bosonic",
                ));
            }
            if coh.len() != m {
                return Err(ConfigError::invalid(
                    "initial.coherent",
                    format!("expected {m} entries"),
                ));
            }
            InitialState::Coherent(coh.iter().map(|z| (z[0], z[1])).collect())
        }
        (None, None) => InitialState::Fock(vec![0; m]),
    };

    Ok(ModelSpec {
        kind: cfg.particle,
        sites: n,
        modes_per_site: l,
        couplings,
        interactions,
        displacements,
        noise: cfg.noise,
        assumption,
        initial,
    })
}
