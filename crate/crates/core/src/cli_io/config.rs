use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fault_model::{
    gradient_slip, AdmissibleSet, BasisFamily, BumpDensity, FaultGeometry, GridSpec, ObservationGrid, Rect, SlipBasis,
    SlipField,
};
use crate::forward_op::{QuadSpec, Truncation};
use crate::jump_lab::{check_sequence, IntegralSettings, PotentialQuadrature, DEFAULT_H};
use crate::kernels::LameParams;
use crate::stability_lab::{AffineFunction, LipschitzOptions, ProblemSetup, StabilityCondition};

fn at<T>(field: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(field, other.to_string()),
    })
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn at_least(field: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be at least {min}, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisSpec {
    pub family: BasisFamily,
    pub n1: usize,
    pub n2: usize,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self {
            family: BasisFamily::Sine,
            n1: 3,
            n2: 3,
        }
    }
}

/// Box of plane coefficients; the rectangle comes from the top-level `rect`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxSpec {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub d: [f64; 2],
    pub depth_min: f64,
    pub exclude_horizontal: bool,
    pub min_tilt: f64,
}

impl Default for BoxSpec {
    fn default() -> Self {
        let s = AdmissibleSet::default();
        Self {
            a: s.a,
            b: s.b,
            d: s.d,
            depth_min: s.depth_min,
            exclude_horizontal: s.exclude_horizontal,
            min_tilt: s.min_tilt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlipSpecKind {
    #[default]
    Free,
    OneDirectional,
    Gradient,
}

/// A slip field in the configured basis. Coefficients are drawn uniformly
/// from `[-1, 1] / (j1 j2)` when not given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlipSpec {
    pub kind: SlipSpecKind,
    /// Overrides the top-level basis family.
    pub family: Option<BasisFamily>,
    pub direction: [f64; 2],
    /// `g1` then `g2` for free slips, a single block otherwise.
    pub coefficients: Option<Vec<f64>>,
    /// Falls back to the top-level seed.
    pub seed: Option<u64>,
}

impl Default for SlipSpec {
    fn default() -> Self {
        Self {
            kind: SlipSpecKind::Free,
            family: None,
            direction: [0.8, 0.6],
            coefficients: None,
            seed: None,
        }
    }
}

impl SlipSpec {
    pub fn of_kind(kind: SlipSpecKind, family: BasisFamily) -> Self {
        Self {
            kind,
            family: Some(family),
            ..Self::default()
        }
    }

    pub fn basis(&self, basis: &BasisSpec, rect: Rect) -> Result<SlipBasis> {
        SlipBasis::new(self.family.unwrap_or(basis.family), basis.n1, basis.n2, rect)
    }

    fn blocks(&self) -> usize {
        match self.kind {
            SlipSpecKind::Free => 2,
            _ => 1,
        }
    }

    /// The field with explicit coefficients, or one drawn with `rng`.
    pub fn draw<R: Rng + ?Sized>(&self, basis: SlipBasis, rng: &mut R) -> Result<SlipField> {
        let n = basis.per_component();
        let coeffs = match &self.coefficients {
            Some(c) => c.clone(),
            None => (0..self.blocks() * n)
                .map(|k| {
                    let i = k % n;
                    let (j1, j2) = (i % basis.n1 + 1, i / basis.n1 + 1);
                    rng.random_range(-1.0..1.0) / (j1 * j2) as f64
                })
                .collect(),
        };
        if coeffs.len() != self.blocks() * n {
            return Err(Error::config(
                "slip.coefficients",
                format!("expected {} values, got {}", self.blocks() * n, coeffs.len()),
            ));
        }
        match self.kind {
            SlipSpecKind::Free => SlipField::free(basis, coeffs[..n].to_vec(), coeffs[n..].to_vec()),
            SlipSpecKind::OneDirectional => SlipField::one_directional(basis, coeffs, self.direction),
            SlipSpecKind::Gradient => gradient_slip(basis, coeffs),
        }
    }

    pub fn build(&self, basis: &BasisSpec, rect: Rect, seed: u64) -> Result<SlipField> {
        let mut rng = slip_rng(self.seed.unwrap_or(seed));
        at("slip", self.draw(self.basis(basis, rect)?, &mut rng))
    }
}

/// Scans draw from stream 0 of the seed; slip coefficients from stream 1.
pub fn scan_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn slip_rng(seed: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(1);
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JumpKnobs {
    pub center: [f64; 2],
    pub radii: [f64; 2],
    pub amplitude: [f64; 3],
    pub points: Vec<[f64; 2]>,
    pub h_sequence: Vec<f64>,
    pub quadrature: PotentialQuadrature,
    /// Fault depth for the half-space comparison.
    pub halfspace_depth: f64,
}

impl Default for JumpKnobs {
    fn default() -> Self {
        Self {
            center: [0.0, 0.0],
            radii: [2.0, 2.0],
            amplitude: [0.7, -0.4, 0.5],
            points: vec![[0.2, 0.12], [0.68, -0.48], [1.44, 0.8]],
            h_sequence: DEFAULT_H.to_vec(),
            quadrature: PotentialQuadrature::default(),
            halfspace_depth: 2.0,
        }
    }
}

impl JumpKnobs {
    pub fn density(&self, tangential: bool) -> Result<BumpDensity> {
        let mut amp = self.amplitude;
        if tangential {
            amp[2] = 0.0;
        }
        at("jumps", BumpDensity::new(self.center, self.radii, amp))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegralKnobs {
    pub settings: IntegralSettings,
    pub tolerance: f64,
}

impl Default for IntegralKnobs {
    fn default() -> Self {
        Self {
            settings: IntegralSettings::default(),
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JacobianKnobs {
    pub samples: usize,
    pub steps: [f64; 2],
    pub tolerance: f64,
    pub min_order: f64,
}

impl Default for JacobianKnobs {
    fn default() -> Self {
        Self {
            samples: 10,
            steps: [1e-2, 1e-3],
            tolerance: 1e-5,
            min_order: 1.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct LipschitzKnobs {
    pub options: LipschitzOptions,
    pub condition: Option<StabilityCondition>,
    pub slip: Option<SlipSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankKnobs {
    pub samples: usize,
    /// Geometries always included ahead of the random ones.
    pub extra: Vec<[f64; 3]>,
    pub condition: Option<StabilityCondition>,
    pub slip: Option<SlipSpec>,
}

impl Default for RankKnobs {
    fn default() -> Self {
        Self {
            samples: 50,
            extra: Vec::new(),
            condition: None,
            slip: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualKnobs {
    pub m0: [f64; 3],
    pub directions: Vec<[f64; 3]>,
    pub steps: Vec<f64>,
    pub truncation: Truncation,
    pub slip: SlipSpec,
}

impl Default for ResidualKnobs {
    fn default() -> Self {
        Self {
            m0: [0.15, -0.1, -2.0],
            directions: vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, -1.0, 1.0]],
            steps: vec![1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1],
            truncation: Truncation::default(),
            slip: SlipSpec::of_kind(SlipSpecKind::OneDirectional, BasisFamily::Lobatto),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectorKnobs {
    pub m0: [f64; 3],
    pub direction: [f64; 3],
    pub steps: Vec<f64>,
    pub family: BasisFamily,
    /// Number of retained singular vectors; all of them when absent.
    pub rank: Option<usize>,
}

impl Default for ProjectorKnobs {
    fn default() -> Self {
        Self {
            m0: [0.15, -0.1, -2.0],
            direction: [1.0, 0.5, -0.5],
            steps: vec![0.0, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1],
            family: BasisFamily::Lobatto,
            rank: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportCase {
    pub f: AffineFunction,
    pub tau: [f64; 2],
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportKnobs {
    pub cases: Vec<TransportCase>,
    /// Interior nodes per direction, coarsest first.
    pub refinements: Vec<usize>,
    pub min_ratio: f64,
}

impl Default for TransportKnobs {
    fn default() -> Self {
        Self {
            cases: vec![
                TransportCase {
                    f: AffineFunction::new(0.0, 0.0, 1.0),
                    tau: [1.0, 0.0],
                    alpha: 1.0,
                },
                TransportCase {
                    f: AffineFunction::new(1.0, 0.0, 0.0),
                    tau: [1.0, 0.0],
                    alpha: 0.0,
                },
            ],
            refinements: vec![64, 128],
            min_ratio: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentityKnobs {
    pub draws: usize,
    pub quartics: usize,
    pub points: usize,
    /// Lamé constants are drawn log-uniformly from this range.
    pub lame_range: [f64; 2],
    pub coefficient_tolerance: f64,
    pub divergence_tolerance: f64,
}

impl Default for IdentityKnobs {
    fn default() -> Self {
        Self {
            draws: 100,
            quartics: 3,
            points: 20,
            lame_range: [0.1, 10.0],
            coefficient_tolerance: 1e-12,
            divergence_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssembleKnobs {
    pub m: [f64; 3],
    /// Defaults to `<out>/cache/operator.fstb`.
    pub cache: Option<PathBuf>,
}

impl Default for AssembleKnobs {
    fn default() -> Self {
        Self {
            m: [0.15, -0.1, -2.0],
            cache: None,
        }
    }
}

/// Everything a run reads. Absent fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lame: LameParams,
    pub rect: Rect,
    pub grid: GridSpec,
    pub quad: QuadSpec,
    pub basis: BasisSpec,
    pub admissible: BoxSpec,
    pub slip: SlipSpec,
    pub jumps: JumpKnobs,
    pub integrals: IntegralKnobs,
    pub jacobian: JacobianKnobs,
    pub lipschitz: LipschitzKnobs,
    pub rank: RankKnobs,
    pub residual: ResidualKnobs,
    pub projector: ProjectorKnobs,
    pub transport: TransportKnobs,
    pub identities: IdentityKnobs,
    pub assemble: AssembleKnobs,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lame: LameParams::default(),
            rect: Rect::default(),
            grid: GridSpec::default(),
            quad: QuadSpec::default(),
            basis: BasisSpec::default(),
            admissible: BoxSpec::default(),
            slip: SlipSpec::default(),
            jumps: JumpKnobs::default(),
            integrals: IntegralKnobs::default(),
            jacobian: JacobianKnobs::default(),
            lipschitz: LipschitzKnobs::default(),
            rank: RankKnobs::default(),
            residual: ResidualKnobs::default(),
            projector: ProjectorKnobs::default(),
            transport: TransportKnobs::default(),
            identities: IdentityKnobs::default(),
            assemble: AssembleKnobs::default(),
            out_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Parses JSON; errors carry the path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "config".to_string() } else { path };
            Error::config(field, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn admissible_set(&self) -> AdmissibleSet {
        let b = &self.admissible;
        AdmissibleSet {
            a: b.a,
            b: b.b,
            d: b.d,
            depth_min: b.depth_min,
            rect: self.rect,
            exclude_horizontal: b.exclude_horizontal,
            min_tilt: b.min_tilt,
        }
    }

    pub fn setup(&self) -> Result<ProblemSetup> {
        at("grid", ProblemSetup::new(self.lame, self.grid, self.quad))
    }

    pub fn geometry(&self, field: &str, m: [f64; 3]) -> Result<FaultGeometry> {
        at(field, FaultGeometry::from_params(m, self.rect, self.admissible.depth_min))
    }

    pub fn slip_field(&self, spec: &SlipSpec) -> Result<SlipField> {
        spec.build(&self.basis, self.rect, self.seed)
    }

    pub fn projector_basis(&self) -> Result<SlipBasis> {
        at(
            "projector.family",
            SlipBasis::new(self.projector.family, self.basis.n1, self.basis.n2, self.rect),
        )
    }

    /// Checks every field before any kernel is evaluated.
    pub fn validate(&self) -> Result<()> {
        at("lame", LameParams::new(self.lame.lambda(), self.lame.mu()))?;
        at("rect", self.rect.validate())?;
        at("grid", ObservationGrid::new(self.grid))?;
        at_least("quad.q1", self.quad.q1, 4)?;
        at_least("quad.q2", self.quad.q2, 4)?;
        at_least("basis.n1", self.basis.n1, 1)?;
        at_least("basis.n2", self.basis.n2, 1)?;
        at("admissible", self.admissible_set().validate())?;
        self.slip_field(&self.slip)?;

        let j = &self.jumps;
        self.jumps.density(false)?;
        if j.points.is_empty() {
            return Err(Error::config("jumps.points", "must not be empty"));
        }
        at_least("jumps.quadrature.order", j.quadrature.order, 2)?;
        positive("jumps.quadrature.max_panel", j.quadrature.max_panel)?;
        positive("jumps.halfspace_depth", j.halfspace_depth)?;
        at("jumps.h_sequence", check_sequence(&j.h_sequence).map_err(|e| match e {
            Error::Config { reason, .. } => Error::config("jumps.h_sequence", reason),
            other => other,
        }))?;
        if j.h_sequence[0] >= j.halfspace_depth {
            return Err(Error::config("jumps.h_sequence", "steps must stay above the half-space fault depth"));
        }

        let s = &self.integrals.settings;
        positive("integrals.settings.radius", s.radius)?;
        at_least("integrals.settings.x3", s.x3.len(), 3)?;
        for &x in &s.x3 {
            positive("integrals.settings.x3", x)?;
        }
        at_least("integrals.settings.theta_points", s.theta_points, 4)?;
        at_least("integrals.settings.gauss_order", s.gauss_order, 2)?;
        positive("integrals.tolerance", self.integrals.tolerance)?;

        let jc = &self.jacobian;
        at_least("jacobian.samples", jc.samples, 1)?;
        if !(jc.steps[0] > jc.steps[1] && jc.steps[1] > 0.0) {
            return Err(Error::config("jacobian.steps", "need two positive steps, largest first"));
        }
        positive("jacobian.tolerance", jc.tolerance)?;

        let lp = &self.lipschitz;
        at_least("lipschitz.options.pairs", lp.options.pairs, 1)?;
        positive("lipschitz.options.near_step", lp.options.near_step)?;
        positive("lipschitz.options.near_tolerance", lp.options.near_tolerance)?;
        positive("lipschitz.options.directional_tolerance", lp.options.directional_tolerance)?;
        if let Some(sp) = &lp.slip {
            at("lipschitz.slip", self.slip_field(sp))?;
        }

        let set = self.admissible_set();
        for (i, &m) in self.rank.extra.iter().enumerate() {
            if !set.contains(m) {
                return Err(Error::config(format!("rank.extra[{i}]"), format!("{m:?} lies outside the admissible box")));
            }
        }
        if let Some(sp) = &self.rank.slip {
            at("rank.slip", self.slip_field(sp))?;
        }

        let r = &self.residual;
        self.geometry("residual.m0", r.m0)?;
        if r.steps.is_empty() {
            return Err(Error::config("residual.steps", "must not be empty"));
        }
        for &t in &r.steps {
            positive("residual.steps", t)?;
        }
        let tmax = r.steps.iter().copied().fold(0.0, f64::max);
        for (i, q) in r.directions.iter().enumerate() {
            self.check_ray(&format!("residual.directions[{i}]"), r.m0, *q, tmax)?;
        }
        if r.directions.is_empty() {
            return Err(Error::config("residual.directions", "must not be empty"));
        }
        if let Truncation::Relative(tau) = r.truncation {
            positive("residual.truncation", tau)?;
        }
        at("residual.slip", self.slip_field(&r.slip))?;

        let p = &self.projector;
        self.geometry("projector.m0", p.m0)?;
        for &t in &p.steps {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::config("projector.steps", format!("must be nonnegative, got {t}")));
            }
        }
        let tmax = p.steps.iter().copied().fold(0.0, f64::max);
        self.check_ray("projector.direction", p.m0, p.direction, tmax)?;
        let pb = self.projector_basis()?;
        if let Some(k) = p.rank {
            if k == 0 || k > pb.len() {
                return Err(Error::config("projector.rank", format!("must lie in 1..={}", pb.len())));
            }
        }

        let t = &self.transport;
        for (i, c) in t.cases.iter().enumerate() {
            if c.tau == [0.0, 0.0] || !c.tau.iter().all(|v| v.is_finite()) {
                return Err(Error::config(format!("transport.cases[{i}].tau"), "must be a nonzero finite vector"));
            }
            if c.f.is_zero() {
                return Err(Error::config(format!("transport.cases[{i}].f"), "must not vanish identically"));
            }
        }
        if t.refinements.is_empty() {
            return Err(Error::config("transport.refinements", "must not be empty"));
        }
        for &n in &t.refinements {
            at_least("transport.refinements", n, 2)?;
        }
        positive("transport.min_ratio", t.min_ratio)?;

        let id = &self.identities;
        at_least("identities.draws", id.draws, 1)?;
        at_least("identities.quartics", id.quartics, 1)?;
        at_least("identities.points", id.points, 1)?;
        positive("identities.lame_range", id.lame_range[0])?;
        if !(id.lame_range[1] >= id.lame_range[0] && id.lame_range[1].is_finite()) {
            return Err(Error::config("identities.lame_range", "upper end below lower end"));
        }

        self.geometry("assemble.m", self.assemble.m)?;
        Ok(())
    }

    fn check_ray(&self, field: &str, m0: [f64; 3], q: [f64; 3], tmax: f64) -> Result<()> {
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::config(field, "must be a nonzero finite vector"));
        }
        let end = [0, 1, 2].map(|k| m0[k] + tmax * q[k] / n);
        self.geometry(field, end).map(|_| ())
    }
}
