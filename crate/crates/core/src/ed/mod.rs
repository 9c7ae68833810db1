//! Finite-N exact simulation of the (2,1) hybrid Brownian circuit on
//! N system + N reference qubits.
//!
//! Each timestep applies a weak-measurement layer followed by a Brownian
//! unitary layer, |Ψ(t+δt)⟩ = U(t)·M(t)·|Ψ(t)⟩ with U = exp(−iH δt/2) and
//!
//!   M(t) = (1/2 − i/2)·exp(−iO δt/2) + (1/2 + i/2)·exp(+iO δt/2),
//!
//! both exponentials evaluated in a Krylov subspace. The state is left
//! unnormalized (the +1 measurement record is post-selected), and the
//! recorded Z₂(t), P²(t) series feed the two disorder-averaging protocols.

pub mod krylov;
pub mod rng;
pub mod state;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::ModelParams;
use krylov::KrylovPropagator;
use rng::GaussianStream;
pub use state::{init_epr_state, subset_for_fraction, subsystem_purity, PureState};

#[derive(Debug, Error, PartialEq)]
pub enum EdError {
    #[error("invalid ED parameters: {0}")]
    InvalidParams(String),
    #[error("no trajectory records supplied")]
    EmptyInput,
    #[error("records disagree: {0}")]
    MismatchedRecords(String),
    #[error("Krylov basis degenerated with residual {residual} above tolerance")]
    KrylovBreakdown { residual: f64 },
}

/// Simulation parameters; times in units 1/J, `dt` defaults to 0.01 and the
/// Krylov dimension to 8.
#[derive(Debug, Clone, PartialEq)]
pub struct EdParams {
    pub n: u32,
    pub dt: f64,
    pub total_time: f64,
    pub n_realizations: u32,
    pub krylov_dim: usize,
    pub seed: u64,
    /// Observable output times; defaults to 100 evenly spaced points.
    pub sample_times: Vec<f64>,
    /// Subsystem fractions k whose purities are recorded alongside the full
    /// system.
    pub subsystem_fractions: Vec<f64>,
}

impl EdParams {
    pub fn new(
        n: u32,
        dt: f64,
        total_time: f64,
        n_realizations: u32,
        krylov_dim: usize,
        seed: u64,
    ) -> Result<Self, EdError> {
        let params = Self {
            n,
            dt,
            total_time,
            n_realizations,
            krylov_dim,
            seed,
            sample_times: Self::even_sample_times(total_time, 100),
            subsystem_fractions: Vec::new(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn even_sample_times(total_time: f64, count: usize) -> Vec<f64> {
        (1..=count).map(|i| total_time * i as f64 / count as f64).collect()
    }

    pub fn validate(&self) -> Result<(), EdError> {
        let mut problems = Vec::new();
        if self.n < 1 {
            problems.push("N must be >= 1".to_string());
        }
        if 2 * self.n > 14 {
            problems.push(format!("2N = {} exceeds the desk-scale bound 14", 2 * self.n));
        }
        if !(self.dt > 0.0) {
            problems.push(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.total_time > 0.0) {
            problems.push(format!("total_time must be > 0, got {}", self.total_time));
        }
        if self.n_realizations < 1 {
            problems.push("n_realizations must be >= 1".to_string());
        }
        if self.krylov_dim < 2 {
            problems.push(format!("krylov_dim must be >= 2, got {}", self.krylov_dim));
        }
        for &f in &self.subsystem_fractions {
            if !(0.0..=1.0).contains(&f) {
                problems.push(format!("subsystem fraction {f} outside [0, 1]"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(EdError::InvalidParams(problems.join("; ")))
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.total_time / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Unitary,
    Measurement,
}

/// One layer of Brownian disorder: either the two-qubit couplings
/// J_{ij}^{αβ} (i < j lexicographic, α,β row-major) or the single-site
/// measurement coefficients n_i^α.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderLayer {
    pub kind: LayerKind,
    /// Var[J_{ij}^{αβ}] = (16J/81N)·(2/dt) per coupling (S = 1/2).
    pub pair_couplings: Vec<[[f64; 3]; 3]>,
    /// Var[n_i^α] = (4γ/9)·(2/dt) per coefficient.
    pub site_coeffs: Vec<[f64; 3]>,
}

/// Gaussian disorder for one layer, drawn from the stream keyed by
/// (master seed, realization, step, kind); the draw order over terms is
/// fixed, so every coefficient is a deterministic function of the full key.
pub fn sample_disorder_layer(
    model: &ModelParams,
    ed: &EdParams,
    realization: u32,
    step: u64,
    kind: LayerKind,
) -> DisorderLayer {
    let n = ed.n as usize;
    let kind_tag = match kind {
        LayerKind::Unitary => 0u64,
        LayerKind::Measurement => 1u64,
    };
    let mut stream =
        GaussianStream::keyed(ed.seed, &[realization as u64, step, kind_tag]);
    match kind {
        LayerKind::Unitary => {
            // J = 1 internally: Var = 32/(81 N dt)
            let sigma = (32.0 / (81.0 * n as f64 * ed.dt)).sqrt();
            let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
            for _i in 0..n {
                for _j in (_i + 1)..n {
                    let mut block = [[0.0; 3]; 3];
                    for row in &mut block {
                        for v in row.iter_mut() {
                            *v = stream.normal_scaled(sigma);
                        }
                    }
                    pairs.push(block);
                }
            }
            DisorderLayer { kind, pair_couplings: pairs, site_coeffs: Vec::new() }
        }
        LayerKind::Measurement => {
            let sigma = (8.0 * model.gamma() / (9.0 * ed.dt)).sqrt();
            let sites = (0..n)
                .map(|_| {
                    let mut c = [0.0; 3];
                    for v in &mut c {
                        *v = stream.normal_scaled(sigma);
                    }
                    c
                })
                .collect();
            DisorderLayer { kind, pair_couplings: Vec::new(), site_coeffs: sites }
        }
    }
}

const SIGMA: [[[Complex64; 2]; 2]; 3] = {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mone = Complex64::new(-1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mi = Complex64::new(0.0, -1.0);
    [
        [[zero, one], [one, zero]],   // sigma_x
        [[zero, mi], [i, zero]],      // sigma_y
        [[one, zero], [zero, mone]],  // sigma_z
    ]
};

#[derive(Debug, Clone)]
struct PairBlock {
    i: usize,
    j: usize,
    /// 4×4 in the (b_i, b_j) basis, row-major with index v = 2·b_i + b_j.
    mat: [Complex64; 16],
}

#[derive(Debug, Clone)]
struct SiteBlock {
    i: usize,
    mat: [Complex64; 4],
}

/// Hermitian generator compiled from a disorder layer: H = Σ J S_i^α S_j^β
/// or O = Σ n_i^α S_i^α with S = σ/2, applied term-by-term (per-pair 4×4 and
/// per-site 2×2 blocks) without materializing the full matrix.
#[derive(Debug, Clone)]
pub struct Generator {
    pairs: Vec<PairBlock>,
    sites: Vec<SiteBlock>,
}

impl Generator {
    pub fn from_layer(layer: &DisorderLayer, n: usize) -> Self {
        let mut pairs = Vec::with_capacity(layer.pair_couplings.len());
        let mut idx = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if idx >= layer.pair_couplings.len() {
                    break;
                }
                let block = &layer.pair_couplings[idx];
                idx += 1;
                let mut mat = [Complex64::new(0.0, 0.0); 16];
                for (a, row) in block.iter().enumerate() {
                    for (b, &coupling) in row.iter().enumerate() {
                        if coupling == 0.0 {
                            continue;
                        }
                        // S_i^a S_j^b = (sigma^a ⊗ sigma^b)/4 on (b_i, b_j)
                        for bi_out in 0..2 {
                            for bj_out in 0..2 {
                                for bi_in in 0..2 {
                                    for bj_in in 0..2 {
                                        let m = SIGMA[a][bi_out][bi_in]
                                            * SIGMA[b][bj_out][bj_in]
                                            * (0.25 * coupling);
                                        mat[(2 * bi_out + bj_out) * 4 + (2 * bi_in + bj_in)] += m;
                                    }
                                }
                            }
                        }
                    }
                }
                pairs.push(PairBlock { i, j, mat });
            }
        }
        let sites = layer
            .site_coeffs
            .iter()
            .enumerate()
            .map(|(i, coeffs)| {
                let mut mat = [Complex64::new(0.0, 0.0); 4];
                for (a, &c) in coeffs.iter().enumerate() {
                    for out in 0..2 {
                        for inp in 0..2 {
                            mat[out * 2 + inp] += SIGMA[a][out][inp] * (0.5 * c);
                        }
                    }
                }
                SiteBlock { i, mat }
            })
            .collect();
        Generator { pairs, sites }
    }

    /// out = G·v.
    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        let dim = v.len();
        for block in &self.pairs {
            let mi = 1usize << block.i;
            let mj = 1usize << block.j;
            let m = &block.mat;
            for base in 0..dim {
                if base & (mi | mj) != 0 {
                    continue;
                }
                let idx = [base, base | mj, base | mi, base | mi | mj];
                let inp = [v[idx[0]], v[idx[1]], v[idx[2]], v[idx[3]]];
                for row in 0..4 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for col in 0..4 {
                        acc += m[row * 4 + col] * inp[col];
                    }
                    out[idx[row]] += acc;
                }
            }
        }
        for block in &self.sites {
            let mi = 1usize << block.i;
            let m = &block.mat;
            for base in 0..dim {
                if base & mi != 0 {
                    continue;
                }
                let (v0, v1) = (v[base], v[base | mi]);
                out[base] += m[0] * v0 + m[1] * v1;
                out[base | mi] += m[2] * v0 + m[3] * v1;
            }
        }
    }
}

/// Weak-measurement operator via the exact identity
/// M = (1/2 − i/2)e^{−iOδt/2} + (1/2 + i/2)e^{+iOδt/2} = cos(Oδt/2) − sin(Oδt/2).
pub fn apply_weak_measurement(
    gen: &Generator,
    state: &PureState,
    dt: f64,
    krylov_dim: usize,
) -> Result<PureState, EdError> {
    let mut prop = KrylovPropagator::new(krylov_dim, state.dim());
    let mut out = state.clone();
    let terms = measurement_terms(dt);
    prop.apply_exp_combination(gen, state.amps(), &terms, out.amps_mut())?;
    Ok(out)
}

fn measurement_terms(dt: f64) -> [(f64, Complex64); 2] {
    [
        (0.5 * dt, Complex64::new(0.5, -0.5)),
        (-0.5 * dt, Complex64::new(0.5, 0.5)),
    ]
}

/// Per-realization time series of the unnormalized observables.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub realization: u32,
    pub times: Vec<f64>,
    /// tr ρ̃_Q²(t)
    pub z2: Vec<f64>,
    /// (tr ρ̃_Q(t))²
    pub p2: Vec<f64>,
    pub norm: Vec<f64>,
    /// (fraction, tr ρ̃_A²(t)) for each requested subsystem fraction.
    pub subsystem_z2: Vec<(f64, Vec<f64>)>,
}

/// Run one post-selected trajectory; fully deterministic given
/// (seed, realization).
pub fn run_trajectory(
    model: &ModelParams,
    ed: &EdParams,
    realization: u32,
) -> Result<TrajectoryRecord, EdError> {
    ed.validate()?;
    let n = ed.n as usize;
    let mut state = init_epr_state(n);
    let mut prop = KrylovPropagator::new(ed.krylov_dim, state.dim());
    let mut scratch = state.clone();

    let all_q: Vec<usize> = (0..n).collect();
    let subsets: Vec<(f64, Vec<usize>)> = ed
        .subsystem_fractions
        .iter()
        .map(|&f| Ok((f, subset_for_fraction(n, f)?)))
        .collect::<Result<_, EdError>>()?;

    let mut sample_times = ed.sample_times.clone();
    sample_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut record = TrajectoryRecord {
        realization,
        times: Vec::new(),
        z2: Vec::new(),
        p2: Vec::new(),
        norm: Vec::new(),
        subsystem_z2: subsets.iter().map(|(f, _)| (*f, Vec::new())).collect(),
    };
    let observe = |state: &PureState, t: f64, record: &mut TrajectoryRecord| {
        let (z2, trace) = subsystem_purity(state, &all_q);
        record.times.push(t);
        record.z2.push(z2);
        record.p2.push(trace * trace);
        record.norm.push(trace.sqrt());
        for ((_, subset), (_, series)) in subsets.iter().zip(record.subsystem_z2.iter_mut()) {
            series.push(subsystem_purity(state, subset).0);
        }
    };

    let mut cursor = 0;
    while cursor < sample_times.len() && sample_times[cursor] <= 0.0 {
        observe(&state, 0.0, &mut record);
        cursor += 1;
    }

    let n_steps = ed.n_steps();
    let meas_terms = measurement_terms(ed.dt);
    for step in 0..n_steps {
        // measurement half-layer (skippable identity when gamma = 0)
        if model.gamma() > 0.0 {
            let layer = sample_disorder_layer(model, ed, realization, step as u64, LayerKind::Measurement);
            let gen = Generator::from_layer(&layer, n);
            prop.apply_exp_combination(&gen, state.amps(), &meas_terms, scratch.amps_mut())?;
            std::mem::swap(&mut state, &mut scratch);
        }
        // unitary half-layer U = exp(-i H dt/2)
        let layer = sample_disorder_layer(model, ed, realization, step as u64, LayerKind::Unitary);
        let gen = Generator::from_layer(&layer, n);
        prop.apply_exp_combination(
            &gen,
            state.amps(),
            &[(0.5 * ed.dt, Complex64::new(1.0, 0.0))],
            scratch.amps_mut(),
        )?;
        std::mem::swap(&mut state, &mut scratch);

        let t = (step + 1) as f64 * ed.dt;
        while cursor < sample_times.len() && sample_times[cursor] <= t + 1e-9 {
            observe(&state, t, &mut record);
            cursor += 1;
        }
    }
    // anything past the last step boundary records the final state
    while cursor < sample_times.len() {
        observe(&state, n_steps as f64 * ed.dt, &mut record);
        cursor += 1;
    }
    Ok(record)
}

/// Disorder-averaging protocol for [`aggregate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AveragingProtocol {
    /// ⟨Z₂⟩/⟨P²⟩ — the analytically tractable average.
    RatioOfAverages,
    /// ⟨Z₂/P²⟩ — the per-realization (post-selected) average.
    AverageOfRatios,
}

#[derive(Debug, Clone)]
pub struct SubsystemSeries {
    pub fraction: f64,
    pub purity: Vec<f64>,
    pub entropy_bits: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MutualInfoSeries {
    pub fraction: f64,
    /// I⁽²⁾(Ā:R)(t) = S_{1−k} + S_1 − S_k in bits.
    pub bits: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AveragedSeries {
    pub protocol: AveragingProtocol,
    pub times: Vec<f64>,
    pub purity: Vec<f64>,
    pub entropy_bits: Vec<f64>,
    /// Delete-one jackknife standard error of the entropy.
    pub entropy_stderr: Vec<f64>,
    pub subsystem: Vec<SubsystemSeries>,
    pub mutual_info: Vec<MutualInfoSeries>,
}

fn check_consistent(records: &[TrajectoryRecord]) -> Result<(), EdError> {
    if records.is_empty() {
        return Err(EdError::EmptyInput);
    }
    let t0 = &records[0].times;
    for r in records.iter().skip(1) {
        if r.times != *t0 {
            return Err(EdError::MismatchedRecords("sample times differ".into()));
        }
        if r.subsystem_z2.len() != records[0].subsystem_z2.len() {
            return Err(EdError::MismatchedRecords("subsystem fraction sets differ".into()));
        }
    }
    Ok(())
}

fn ratio_of_sums(z2: impl Iterator<Item = f64>, p2: impl Iterator<Item = f64>) -> f64 {
    let num: f64 = z2.sum();
    let den: f64 = p2.sum();
    num / den
}

/// Disorder-average the records under the chosen protocol, emitting
/// normalized purities, entropies −log₂(·), and (when subsystem data with
/// matching k, 1−k pairs is present) the Rényi-2 mutual information
/// I⁽²⁾(Ā:R) = S_{1−k} + S_1 − S_k.
pub fn aggregate(
    records: &[TrajectoryRecord],
    protocol: AveragingProtocol,
) -> Result<AveragedSeries, EdError> {
    check_consistent(records)?;
    let times = records[0].times.clone();
    let nt = times.len();
    let m = records.len() as f64;

    let purity_at = |z2_of: &dyn Fn(&TrajectoryRecord) -> &[f64], t: usize| -> f64 {
        match protocol {
            AveragingProtocol::RatioOfAverages => ratio_of_sums(
                records.iter().map(|r| z2_of(r)[t]),
                records.iter().map(|r| r.p2[t]),
            ),
            AveragingProtocol::AverageOfRatios => {
                records.iter().map(|r| z2_of(r)[t] / r.p2[t]).sum::<f64>() / m
            }
        }
    };

    let full: &dyn Fn(&TrajectoryRecord) -> &[f64] = &|r| &r.z2;
    let purity: Vec<f64> = (0..nt).map(|t| purity_at(full, t)).collect();
    let entropy_bits: Vec<f64> = purity.iter().map(|p| -p.log2()).collect();

    // delete-one jackknife on the entropy
    let entropy_stderr: Vec<f64> = (0..nt)
        .map(|t| {
            if records.len() < 2 {
                return 0.0;
            }
            let est: Vec<f64> = (0..records.len())
                .map(|skip| {
                    let p = match protocol {
                        AveragingProtocol::RatioOfAverages => ratio_of_sums(
                            records.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, r)| r.z2[t]),
                            records.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, r)| r.p2[t]),
                        ),
                        AveragingProtocol::AverageOfRatios => {
                            records
                                .iter()
                                .enumerate()
                                .filter(|(i, _)| *i != skip)
                                .map(|(_, r)| r.z2[t] / r.p2[t])
                                .sum::<f64>()
                                / (m - 1.0)
                        }
                    };
                    -p.log2()
                })
                .collect();
            let mean = est.iter().sum::<f64>() / m;
            let var = est.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() * (m - 1.0) / m;
            var.sqrt()
        })
        .collect();

    let mut subsystem = Vec::new();
    for (si, (fraction, _)) in records[0].subsystem_z2.iter().enumerate() {
        let getter: Box<dyn Fn(&TrajectoryRecord) -> &[f64]> =
            Box::new(move |r: &TrajectoryRecord| r.subsystem_z2[si].1.as_slice());
        let p: Vec<f64> = (0..nt).map(|t| purity_at(&*getter, t)).collect();
        let e: Vec<f64> = p.iter().map(|v| -v.log2()).collect();
        subsystem.push(SubsystemSeries { fraction: *fraction, purity: p, entropy_bits: e });
    }

    let mut mutual_info = Vec::new();
    for s in &subsystem {
        if let Some(partner) =
            subsystem.iter().find(|o| (o.fraction - (1.0 - s.fraction)).abs() < 1e-9)
        {
            let bits: Vec<f64> = (0..nt)
                .map(|t| partner.entropy_bits[t] + entropy_bits[t] - s.entropy_bits[t])
                .collect();
            mutual_info.push(MutualInfoSeries { fraction: s.fraction, bits });
        }
    }

    Ok(AveragedSeries {
        protocol,
        times,
        purity,
        entropy_bits,
        entropy_stderr,
        subsystem,
        mutual_info,
    })
}

/// Purity under the re-weighted probability 𝒩(V) = π(V)P²(V)/𝒩₀: since
/// 𝒩(V)·Π_Q(V) = π(V)Z₂(V)/𝒩₀ identically, the estimator reduces to
/// Σπ(V)Z₂(V) / Σπ(V)P²(V) and (for the uniform empirical π) is computed by
/// the very same ratio-of-sums as the ⟨Z₂⟩/⟨P²⟩ protocol, making the
/// equality bit-exact.
pub fn reweighted_purity(records: &[TrajectoryRecord]) -> Result<Vec<f64>, EdError> {
    check_consistent(records)?;
    let nt = records[0].times.len();
    Ok((0..nt)
        .map(|t| {
            ratio_of_sums(records.iter().map(|r| r.z2[t]), records.iter().map(|r| r.p2[t]))
        })
        .collect())
}
