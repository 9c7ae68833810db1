//! State vector over N system qubits Q and N reference qubits R, plus the
//! purity observables taken by partial trace.
//!
//! Bit layout of an amplitude index: bit i is qubit i, with qubits 0..N−1
//! forming Q and N..2N−1 forming R; Q_i is EPR-paired with R_i.

use num_complex::Complex64;

use super::EdError;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_pairs: usize,
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn zeros(n_pairs: usize) -> Self {
        Self { n_pairs, amps: vec![Complex64::ZERO; 1 << (2 * n_pairs)] }
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// ⊗_i (|0⟩_{Q_i}|0⟩_{R_i} + |1⟩_{Q_i}|1⟩_{R_i})/√2 — every system qubit
/// maximally entangled with its reference partner.
pub fn init_epr_state(n_pairs: usize) -> PureState {
    assert!(n_pairs >= 1);
    let mut state = PureState::zeros(n_pairs);
    let amp = Complex64::new(1.0 / ((1u64 << n_pairs) as f64).sqrt(), 0.0);
    for q in 0..(1usize << n_pairs) {
        state.amps[q | (q << n_pairs)] = amp;
    }
    state
}

/// Gather the bits of `index` selected by `mask` into a compact integer,
/// preserving ascending bit order.
fn compress_bits(index: usize, mask: usize) -> usize {
    let mut out = 0;
    let mut out_bit = 0;
    let mut m = mask;
    while m != 0 {
        let bit = m.trailing_zeros() as usize;
        out |= ((index >> bit) & 1) << out_bit;
        out_bit += 1;
        m &= m - 1;
    }
    out
}

/// tr ρ̃_A² for a subset A of the system qubits (R and Q∖A traced out),
/// together with tr ρ̃_Q = ⟨ψ|ψ⟩.
///
/// Works through the Gram matrix on the smaller bipartition factor, so the
/// cost is min(d_A, d_rest)² · max(d_A, d_rest).
pub fn subsystem_purity(state: &PureState, subset_q: &[usize]) -> (f64, f64) {
    let n = state.n_pairs;
    let mut mask_a = 0usize;
    for &q in subset_q {
        assert!(q < n, "subset must contain system qubits only");
        mask_a |= 1 << q;
    }
    let total_mask = state.dim() - 1;
    let mask_rest = total_mask & !mask_a;
    let na = mask_a.count_ones() as usize;
    let da = 1usize << na;
    let db = state.dim() >> na;

    let trace = state.norm_sqr();
    if na == 0 {
        // rho_A is the 1x1 matrix [tr rho]; purity is its square
        return (trace * trace, trace);
    }

    // reshape into an (A, rest) matrix
    let mut m = vec![Complex64::ZERO; state.dim()];
    if da <= db {
        for (idx, &a) in state.amps.iter().enumerate() {
            let row = compress_bits(idx, mask_a);
            let col = compress_bits(idx, mask_rest);
            m[row * db + col] = a;
        }
        // gram[r][r'] = Σ_c m[r,c] conj(m[r',c]); purity = Σ |gram|²
        let mut purity = 0.0;
        for r0 in 0..da {
            for r1 in 0..=r0 {
                let mut g = Complex64::ZERO;
                let (row0, row1) = (&m[r0 * db..(r0 + 1) * db], &m[r1 * db..(r1 + 1) * db]);
                for c in 0..db {
                    g += row0[c] * row1[c].conj();
                }
                purity += if r0 == r1 { g.norm_sqr() } else { 2.0 * g.norm_sqr() };
            }
        }
        (purity, trace)
    } else {
        // transpose roles: purity of m†m equals purity of m m†
        for (idx, &a) in state.amps.iter().enumerate() {
            let row = compress_bits(idx, mask_rest);
            let col = compress_bits(idx, mask_a);
            m[row * da + col] = a;
        }
        let mut purity = 0.0;
        for r0 in 0..db {
            for r1 in 0..=r0 {
                let mut g = Complex64::ZERO;
                let (row0, row1) = (&m[r0 * da..(r0 + 1) * da], &m[r1 * da..(r1 + 1) * da]);
                for c in 0..da {
                    g += row0[c] * row1[c].conj();
                }
                purity += if r0 == r1 { g.norm_sqr() } else { 2.0 * g.norm_sqr() };
            }
        }
        (purity, trace)
    }
}

/// First round(k·N) system qubits; the contiguous-choice convention used for
/// fraction-k subsystem records.
pub fn subset_for_fraction(n_pairs: usize, fraction: f64) -> Result<Vec<usize>, EdError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(EdError::InvalidParams(format!("fraction {fraction} outside [0, 1]")));
    }
    let count = (fraction * n_pairs as f64).round() as usize;
    Ok((0..count).collect())
}
