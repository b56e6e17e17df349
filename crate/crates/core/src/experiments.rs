//! End-to-end runs: strong-monotonicity violations of the filter channel,
//! weak-monotonicity random walks under fixed-point channels, and sweeps of
//! the CNOT identification protocol.

use serde::{Deserialize, Serialize};

use crate::channels::{
    apply, filter_channel, filter_input_state, kraus_outcomes, random_fixed_point_channel, ChannelFile, KrausChannel,
};
use crate::error::{Error, Result};
use crate::gateid::{
    detect_cnot, failure_distance, failure_family, failure_set_distance, monte_carlo_protocol,
    state_from_bloch, CnotBasis, LayerSpec, Verdict, cross, dot3, norm3,
};
use crate::io::DensityFile;
use crate::linalg::{bloch_of, haar_random_pure, haar_unitary, DensityMatrix, PureState, Rng};
use crate::measures::{rugosity_single, FreeSet};
use crate::roof::{roof_trials, OptimizerConfig};

/// Closed-form and channel routes must agree this closely.
pub const ROUTE_TOL: f64 = 1e-9;
/// Outcome rugosities must hit `ln D` and `0` this closely.
const OUTCOME_TOL: f64 = 1e-10;
/// `violated` requires the metric to exceed 1 by more than this, so the
/// equality cases (`a = 1`, and `D = 2, a = 1/2`) are not flagged by roundoff.
pub const VIOLATION_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    #[serde(rename = "D")]
    pub d: usize,
    pub a: f64,
    /// Rugosity of the input state, `−ln a`.
    pub lhs: f64,
    /// Average outcome rugosity `p₁ ln D`, from the channel outcomes.
    pub rhs: f64,
    /// Probability of the filtering outcome.
    pub p1: f64,
    /// `a·D^{D(1−a)/(D−1)}`
    pub violation_metric: f64,
    pub violated: bool,
}

/// Checks `Σ_j p_j R(σ_j) ≤ R(ρ)` for the filter channel against the free
/// state `|0⟩`.
///
/// Both sides are computed from the channel's outcomes and compared with the
/// closed-form metric; disagreement beyond [`ROUTE_TOL`] is an error.
pub fn strong_monotonicity_check(d: usize, a: f64) -> Result<ViolationReport> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if !(0.5..=1.0).contains(&a) {
        return Err(Error::InvalidArgument(format!("a = {a} not in [1/2, 1]")));
    }
    let free = PureState::basis(d, 0)?;
    let tau = filter_input_state(d, a)?.density();
    let channel = filter_channel(d, a)?;
    let lhs = rugosity_single(&free, &tau)?.value;

    let ln_d = (d as f64).ln();
    let mut rhs = 0.0;
    let mut p1 = 0.0;
    for (j, p, sigma) in kraus_outcomes(&channel, &tau)?.outcomes {
        let r = rugosity_single(&free, &sigma)?.value;
        let expected = if j == 0 { ln_d } else { 0.0 };
        if !((r - expected).abs() <= OUTCOME_TOL) {
            return Err(Error::InvalidChannel(format!("outcome {j} has rugosity {r}, expected {expected}")));
        }
        if j == 0 {
            p1 = p;
        }
        rhs += p * r;
    }

    let metric = a * (d as f64).powf(d as f64 * (1.0 - a) / (d as f64 - 1.0));
    let closed_lhs = -a.ln();
    let closed_rhs = d as f64 * (1.0 - a) / (d as f64 - 1.0) * ln_d;
    let gaps = [lhs - closed_lhs, rhs - closed_rhs, (rhs - lhs).exp() - metric];
    if let Some(g) = gaps.iter().find(|g| !(g.abs() <= ROUTE_TOL)) {
        return Err(Error::InvalidChannel(format!("channel and closed-form routes differ by {g:.3e}")));
    }
    let violated = metric > 1.0 + VIOLATION_MARGIN;
    if violated != (rhs - lhs > VIOLATION_MARGIN) {
        return Err(Error::InvalidChannel("violation flag differs between routes".into()));
    }
    Ok(ViolationReport { d, a, lhs, rhs, p1, violation_metric: metric, violated })
}

/// `a(D) = 1 − 1/(2D)`, a filter strength that violates strong monotonicity.
pub fn violating_strength(d: usize) -> f64 {
    1.0 - 1.0 / (2.0 * d as f64)
}

/// Default grid: the violating family at D ∈ {2, 3, 10} and the three
/// worked examples.
pub fn default_violation_grid() -> Vec<(usize, f64)> {
    let mut grid: Vec<(usize, f64)> = [2, 3, 10].iter().map(|&d| (d, violating_strength(d))).collect();
    grid.extend([(2, 0.75), (3, 5.0 / 6.0), (10, 0.95)]);
    grid.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
    grid.dedup();
    grid
}

/// One round of a random walk, aggregated over optimizer trials.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkRecord {
    pub iteration: usize,
    pub state: DensityMatrix,
    pub mode: f64,
    pub quantile_low: f64,
    pub quantile_high: f64,
    pub free_dim: usize,
    pub values: Vec<f64>,
}

impl Serialize for WalkRecord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let fin = |v: f64| v.is_finite().then_some(v);
        let mut st = s.serialize_struct("WalkRecord", 7)?;
        st.serialize_field("iteration", &self.iteration)?;
        st.serialize_field("free_dim", &self.free_dim)?;
        st.serialize_field("mode", &fin(self.mode))?;
        st.serialize_field("quantile_low", &fin(self.quantile_low))?;
        st.serialize_field("quantile_high", &fin(self.quantile_high))?;
        st.serialize_field("values", &self.values.iter().map(|v| fin(*v)).collect::<Vec<_>>())?;
        st.serialize_field("state", &DensityFile::from_state(&self.state))?;
        st.end()
    }
}

/// Index of the walk's starting state `|4⟩` (zero-based).
pub const WALK_START: usize = 3;

/// Channel sequence and trial seed that fully determine a walk.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPlan {
    pub dim: usize,
    pub free_dim: usize,
    pub channels: Vec<KrausChannel>,
    pub trial_seed: u64,
}

impl WalkPlan {
    /// Draws `n_rounds` channels fixing `|0⟩, …, |m−1⟩`, then one trial seed.
    pub fn random(d: usize, m: usize, kraus_rank: usize, n_rounds: usize, rng: &mut Rng) -> Result<Self> {
        if d <= WALK_START {
            return Err(Error::InvalidArgument(format!("walks start from |4⟩ and need D ≥ 4, got {d}")));
        }
        if m == 0 || m >= d {
            return Err(Error::InvalidArgument(format!("free dimension m = {m} not in 1..{d}")));
        }
        let channels = (0..n_rounds)
            .map(|_| random_fixed_point_channel(d, m, kraus_rank, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim: d, free_dim: m, channels, trial_seed: rng.next_u64() })
    }

    pub fn to_file(&self) -> PlanFile {
        PlanFile {
            dim: self.dim,
            free_dim: self.free_dim,
            trial_seed: self.trial_seed,
            channels: self.channels.iter().map(KrausChannel::to_file).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("plan serialization")
    }

    /// Parses a plan; every channel must fix the plan's free states.
    pub fn from_json(json: &str) -> Result<Self> {
        let file: PlanFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        let channels = file.channels.iter().map(ChannelFile::to_channel).collect::<Result<Vec<_>>>()?;
        if file.dim <= WALK_START || file.free_dim == 0 || file.free_dim >= file.dim {
            return Err(Error::Parse(format!("plan has D = {}, m = {}", file.dim, file.free_dim)));
        }
        for ch in &channels {
            if ch.dim() != file.dim || ch.free_dim() != Some(file.free_dim) {
                return Err(Error::Parse("plan channel does not match the plan's D and m".into()));
            }
        }
        Ok(Self { dim: file.dim, free_dim: file.free_dim, channels, trial_seed: file.trial_seed })
    }
}

/// On-disk walk plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    #[serde(rename = "D")]
    pub dim: usize,
    pub free_dim: usize,
    pub trial_seed: u64,
    pub channels: Vec<ChannelFile>,
}

/// Random walk `ρ^(i) = Λ^(i)(ρ^(i−1))` from `|4⟩⟨4|` with the convex roof
/// estimated `n_trials` times per round.
///
/// Returns `n_rounds + 1` records; record 0 is the starting state, whose
/// measure is `+∞` because it is orthogonal to the free states.
#[allow(clippy::too_many_arguments)]
pub fn random_walk_experiment(
    d: usize,
    m: usize,
    kraus_rank: usize,
    n_rounds: usize,
    n_trials: usize,
    k: usize,
    config: &OptimizerConfig,
    rng: &mut Rng,
) -> Result<Vec<WalkRecord>> {
    let plan = WalkPlan::random(d, m, kraus_rank, n_rounds, rng)?;
    replay_walk(&plan, n_trials, k, config)
}

/// Runs a walk from an explicit plan; equal plans give identical records.
pub fn replay_walk(plan: &WalkPlan, n_trials: usize, k: usize, config: &OptimizerConfig) -> Result<Vec<WalkRecord>> {
    config.validate()?;
    let free = FreeSet::basis_subset(plan.dim, plan.free_dim)?;
    let mut rho = PureState::basis(plan.dim, WALK_START)?.density();
    let mut records = Vec::with_capacity(plan.channels.len() + 1);
    for i in 0..=plan.channels.len() {
        if i > 0 {
            rho = apply(&plan.channels[i - 1], &rho)?;
        }
        let round_seed = Rng::derive(plan.trial_seed, i as u64).next_u64();
        let (_, summary) = roof_trials(&free, &rho, k, config, round_seed, n_trials)?;
        records.push(WalkRecord {
            iteration: i,
            state: rho.clone(),
            mode: summary.mode,
            quantile_low: summary.quantile_low,
            quantile_high: summary.quantile_high,
            free_dim: plan.free_dim,
            values: summary.values,
        });
    }
    Ok(records)
}

/// Largest rise `mode(i) − mode(i−1)` over the walk (`−∞` when every step
/// starts from an infinite measure or there is only one record).
pub fn max_mode_increase(records: &[WalkRecord]) -> f64 {
    records
        .windows(2)
        .filter(|w| w[0].mode.is_finite())
        .map(|w| w[1].mode - w[0].mode)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// CSV text for an infinite measure.
pub const INF_SENTINEL: &str = "inf";

fn csv_number(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        INF_SENTINEL.to_string()
    } else {
        format!("{v}")
    }
}

/// Header row from the first record's field names, then one row per record.
pub fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("flat CSV record");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("UTF-8 CSV")
}

#[derive(Serialize)]
struct WalkRow {
    #[serde(rename = "Iteration")]
    iteration: usize,
    #[serde(rename = "Measure")]
    measure: String,
    #[serde(rename = "Measure_Low")]
    low: String,
    #[serde(rename = "Measure_High")]
    high: String,
}

/// `Iteration,Measure,Measure_Low,Measure_High`, one row per record.
pub fn walk_csv(records: &[WalkRecord]) -> String {
    to_csv(records.iter().map(|r| WalkRow {
        iteration: r.iteration,
        measure: csv_number(r.mode),
        low: csv_number(r.quantile_low),
        high: csv_number(r.quantile_high),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// Haar-random CNOT basis.
    Random,
    /// Basis drawn from the failure family, with ψ placed near its blind states.
    FailureFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Cnot,
    Single,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub basis_index: usize,
    pub basis_kind: BasisKind,
    pub layer: LayerKind,
    pub psi_bloch: [f64; 3],
    /// Bloch angle to the nearest state blind to this basis, or, when the
    /// basis has none, to the union of blind states over all bases (a lower
    /// bound).
    pub distance: f64,
    pub sigma: [f64; 4],
    pub max_abs_z: f64,
    pub detected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateBin {
    pub label: String,
    pub cases: usize,
    pub detected: usize,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Detection rate of CNOT layers by distance.
    pub cnot_bins: Vec<RateBin>,
    /// Detection rate of single-qubit layers (false positives).
    pub single: RateBin,
}

/// Offsets (rad) of ψ from the blind states of failure-family bases.
pub const FAILURE_OFFSETS: [f64; 6] = [0.0, 0.01, 0.03, 0.1, 0.3, 1.0];
/// Upper edges of the distance bins; the last bin is open.
pub const DISTANCE_EDGES: [f64; 4] = [1e-9, 0.1, 0.3, 1.0];
/// A basis counts as having blind states when `n_Y` is this close to normal
/// or parallel to the Hadamard axis.
const BLIND_TOL: f64 = 1e-9;

/// Runs the protocol for `n_bases` bases × `n_psi` reference states, once
/// with the CNOT and once with a random single-qubit layer.
///
/// Even basis indices are Haar-random with Haar-random ψ. Odd indices come
/// from the failure family, with ψ rotated off a blind state by the angles
/// in [`FAILURE_OFFSETS`] in turn.
pub fn gate_id_sweep(
    n_bases: usize,
    n_psi: usize,
    n_samples: usize,
    z_threshold: f64,
    rng: &mut Rng,
) -> Result<SweepReport> {
    if n_bases == 0 || n_psi == 0 {
        return Err(Error::InvalidArgument("sweep counts must be positive".into()));
    }
    let mut rows = Vec::with_capacity(2 * n_bases * n_psi);
    for b in 0..n_bases {
        let (basis, kind, blind) = if b % 2 == 0 {
            (CnotBasis::random(rng), BasisKind::Random, None)
        } else {
            let fam = failure_family(rng.uniform_in(0.0, std::f64::consts::TAU), rng.uniform_in(0.0, std::f64::consts::TAU))?;
            (fam.basis, BasisKind::FailureFamily, Some([fam.psi_plus, fam.psi_minus]))
        };
        for j in 0..n_psi {
            let psi = match &blind {
                None => haar_random_pure(2, rng)?,
                Some(states) => {
                    let offset = FAILURE_OFFSETS[j % FAILURE_OFFSETS.len()];
                    rotate_off(&states[j % 2], offset, rng)?
                }
            };
            let distance = match failure_distance(&psi, &basis, BLIND_TOL)? {
                Some(dist) => dist,
                None => failure_set_distance(&psi)?,
            };
            let psi_bloch = bloch_of(&psi)?.as_array();
            let single = LayerSpec::single(haar_unitary(2, rng)?)?;
            for (layer, spec) in [(LayerKind::Cnot, LayerSpec::Cnot(basis.clone())), (LayerKind::Single, single)] {
                let est = monte_carlo_protocol(&spec, &psi, n_samples, rng)?;
                let report = detect_cnot(&est, z_threshold)?;
                rows.push(SweepRow {
                    basis_index: b,
                    basis_kind: kind,
                    layer,
                    psi_bloch,
                    distance,
                    sigma: est.values(),
                    max_abs_z: report.z_scores.iter().fold(0.0, |m: f64, z| m.max(z.abs())),
                    detected: report.verdict == Verdict::CnotDetected,
                });
            }
        }
    }
    Ok(summarize_sweep(rows))
}

fn rotate_off(psi: &PureState, angle: f64, rng: &mut Rng) -> Result<PureState> {
    if angle == 0.0 {
        return Ok(psi.clone());
    }
    let n = bloch_of(psi)?.as_array();
    let w = loop {
        let r = [rng.normal(), rng.normal(), rng.normal()];
        let w = cross(n, r);
        let len = norm3(w);
        if len > 1e-6 {
            break [w[0] / len, w[1] / len, w[2] / len];
        }
    };
    let (s, c) = angle.sin_cos();
    let v = [c * n[0] + s * w[0], c * n[1] + s * w[1], c * n[2] + s * w[2]];
    debug_assert!((dot3(v, v) - 1.0).abs() < 1e-9);
    state_from_bloch(v)
}

fn bin_label(i: usize) -> String {
    match i {
        0 => format!("[0, {:e}]", DISTANCE_EDGES[0]),
        i if i < DISTANCE_EDGES.len() => format!("({}, {}]", DISTANCE_EDGES[i - 1], DISTANCE_EDGES[i]),
        _ => format!("({}, pi/2]", DISTANCE_EDGES[DISTANCE_EDGES.len() - 1]),
    }
}

fn summarize_sweep(rows: Vec<SweepRow>) -> SweepReport {
    let mut bins: Vec<RateBin> = (0..=DISTANCE_EDGES.len())
        .map(|i| RateBin { label: bin_label(i), cases: 0, detected: 0, rate: None })
        .collect();
    let mut single = RateBin { label: "single".into(), cases: 0, detected: 0, rate: None };
    for row in &rows {
        let bin = match row.layer {
            LayerKind::Single => &mut single,
            LayerKind::Cnot => {
                let i = DISTANCE_EDGES.iter().position(|&e| row.distance <= e).unwrap_or(DISTANCE_EDGES.len());
                &mut bins[i]
            }
        };
        bin.cases += 1;
        bin.detected += usize::from(row.detected);
    }
    for bin in bins.iter_mut().chain(std::iter::once(&mut single)) {
        bin.rate = (bin.cases > 0).then(|| bin.detected as f64 / bin.cases as f64);
    }
    SweepReport { rows, cnot_bins: bins, single }
}

#[derive(Serialize)]
struct SweepCsvRow {
    basis_index: usize,
    basis_kind: BasisKind,
    layer: LayerKind,
    psi_x: f64,
    psi_y: f64,
    psi_z: f64,
    distance: f64,
    sigma_c: f64,
    sigma_t: f64,
    sigma_c_h: f64,
    sigma_t_h: f64,
    max_abs_z: String,
    detected: bool,
}

/// One row per protocol run.
pub fn sweep_csv(report: &SweepReport) -> String {
    to_csv(report.rows.iter().map(|r| SweepCsvRow {
        basis_index: r.basis_index,
        basis_kind: r.basis_kind,
        layer: r.layer,
        psi_x: r.psi_bloch[0],
        psi_y: r.psi_bloch[1],
        psi_z: r.psi_bloch[2],
        distance: r.distance,
        sigma_c: r.sigma[0],
        sigma_t: r.sigma[1],
        sigma_c_h: r.sigma[2],
        sigma_t_h: r.sigma[3],
        max_abs_z: csv_number(r.max_abs_z),
        detected: r.detected,
    }))
}

/// Provenance written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub wall_time_seconds: f64,
}

impl Manifest {
    pub fn new(seed: u64, config: serde_json::Value, wall_time_seconds: f64) -> Self {
        Self { version: format!("texlab-v{}", env!("CARGO_PKG_VERSION")), seed, config, wall_time_seconds }
    }
}
