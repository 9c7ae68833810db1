//! Krylov-subspace evaluation of exp(−i·scale·G)|ψ⟩ for Hermitian generators
//! applied matrix-free, via the Lanczos recurrence with full
//! re-orthogonalization and a small tridiagonal eigensolve.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{EdError, Generator};

/// Lanczos pivot below this (relative to ‖ψ‖) counts as breakdown and
/// truncates the subspace.
pub const BREAKDOWN_TOL: f64 = 1e-12;
/// On truncation, the a-posteriori residual estimate must stay below this.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

/// Reusable Lanczos workspace; one instance per trajectory avoids
/// re-allocating the basis every step.
#[derive(Debug)]
pub struct KrylovPropagator {
    m: usize,
    basis: Vec<Vec<Complex64>>,
    w: Vec<Complex64>,
}

impl KrylovPropagator {
    pub fn new(krylov_dim: usize, dim: usize) -> Self {
        assert!(krylov_dim >= 2, "krylov_dim must be >= 2");
        Self {
            m: krylov_dim,
            basis: (0..krylov_dim).map(|_| vec![Complex64::ZERO; dim]).collect(),
            w: vec![Complex64::ZERO; dim],
        }
    }

    pub fn krylov_dim(&self) -> usize {
        self.m
    }

    /// out = Σ_j coeff_j · exp(−i·scale_j·G)·v, sharing one Lanczos basis
    /// across all terms (they only differ in the small-matrix exponential).
    pub fn apply_exp_combination(
        &mut self,
        gen: &Generator,
        v: &[Complex64],
        terms: &[(f64, Complex64)],
        out: &mut [Complex64],
    ) -> Result<(), EdError> {
        let dim = v.len();
        assert_eq!(out.len(), dim);
        let beta0 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if beta0 == 0.0 {
            out.fill(Complex64::ZERO);
            return Ok(());
        }

        let inv = 1.0 / beta0;
        for (b, &a) in self.basis[0].iter_mut().zip(v.iter()) {
            *b = a * inv;
        }

        let mut alphas = Vec::with_capacity(self.m);
        let mut betas = Vec::with_capacity(self.m);
        let mut m_eff = self.m;
        let mut broke_down = false;
        for j in 0..self.m {
            let (head, tail) = self.basis.split_at_mut(j + 1);
            let vj = &head[j];
            gen.apply(vj, &mut self.w);
            // alpha is real for Hermitian generators
            let alpha: f64 = vj.iter().zip(self.w.iter()).map(|(a, b)| (a.conj() * b).re).sum();
            for (w, &a) in self.w.iter_mut().zip(vj.iter()) {
                *w -= alpha * a;
            }
            if j > 0 {
                let beta_prev = betas[j - 1];
                for (w, &a) in self.w.iter_mut().zip(head[j - 1].iter()) {
                    *w -= beta_prev * a;
                }
            }
            // full re-orthogonalization pass
            for prev in head.iter() {
                let overlap: Complex64 =
                    prev.iter().zip(self.w.iter()).map(|(a, b)| a.conj() * b).sum();
                for (w, &a) in self.w.iter_mut().zip(prev.iter()) {
                    *w -= overlap * a;
                }
            }
            alphas.push(alpha);
            if j + 1 == self.m {
                break;
            }
            let beta = self.w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            betas.push(beta);
            if beta < BREAKDOWN_TOL * beta0.max(1.0) {
                m_eff = j + 1;
                broke_down = true;
                break;
            }
            let inv = 1.0 / beta;
            for (b, &w) in tail[0].iter_mut().zip(self.w.iter()) {
                *b = w * inv;
            }
        }

        // T = tridiag(alphas, betas) of size m_eff
        let t = DMatrix::from_fn(m_eff, m_eff, |r, c| {
            if r == c {
                alphas[r]
            } else if r + 1 == c || c + 1 == r {
                betas[r.min(c)]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();

        out.fill(Complex64::ZERO);
        let mut worst_residual = 0.0f64;
        for &(scale, coeff) in terms {
            // y = U exp(-i scale Λ) Uᵀ e1 · beta0
            let mut y = vec![Complex64::ZERO; m_eff];
            for (col, &lambda) in eig.eigenvalues.iter().enumerate() {
                let phase = Complex64::from_polar(1.0, -scale * lambda);
                let u_e1 = eig.eigenvectors[(0, col)];
                for row in 0..m_eff {
                    y[row] += eig.eigenvectors[(row, col)] * phase * u_e1;
                }
            }
            if broke_down && m_eff < self.m {
                // truncated subspace is exact up to the dropped pivot
                let beta_next = betas.get(m_eff - 1).copied().unwrap_or(0.0);
                worst_residual = worst_residual.max(beta_next * y[m_eff - 1].norm());
            }
            for (row, &yv) in y.iter().enumerate() {
                let c = coeff * yv * beta0;
                for (o, &b) in out.iter_mut().zip(self.basis[row].iter()) {
                    *o += c * b;
                }
            }
        }
        if worst_residual > RESIDUAL_LIMIT {
            return Err(EdError::KrylovBreakdown { residual: worst_residual });
        }
        Ok(())
    }
}

/// exp(−i·scale·G)|ψ⟩ in a fresh Krylov subspace of dimension `krylov_dim`.
pub fn krylov_apply_exp(
    gen: &Generator,
    state: &[Complex64],
    scale: f64,
    krylov_dim: usize,
) -> Result<Vec<Complex64>, EdError> {
    let mut prop = KrylovPropagator::new(krylov_dim, state.len());
    let mut out = vec![Complex64::ZERO; state.len()];
    prop.apply_exp_combination(gen, state, &[(scale, Complex64::ONE)], &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::{sample_disorder_layer, EdParams, LayerKind};
    use crate::model::ModelParams;

    fn test_generator(n: usize) -> Generator {
        let model = ModelParams::dimensionless(0.05, n as u32).unwrap();
        let ed = EdParams::new(n as u32, 0.01, 1.0, 1, 8, 99).unwrap();
        let layer = sample_disorder_layer(&model, &ed, 0, 3, LayerKind::Unitary);
        Generator::from_layer(&layer, n)
    }

    fn random_state(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = crate::ed::rng::GaussianStream::keyed(seed, &[1]);
        (0..1usize << (2 * n))
            .map(|_| Complex64::new(rng.normal(), rng.normal()))
            .collect()
    }

    /// exp(−i·scale·G) by plain Taylor series on the dense matrix; valid for
    /// the small norms used in tests.
    fn dense_exp_apply(gen: &Generator, v: &[Complex64], scale: f64) -> Vec<Complex64> {
        let mut term: Vec<Complex64> = v.to_vec();
        let mut sum = v.to_vec();
        let mut tmp = vec![Complex64::ZERO; v.len()];
        for k in 1..64 {
            gen.apply(&term, &mut tmp);
            let f = Complex64::new(0.0, -scale) / k as f64;
            for (t, &s) in term.iter_mut().zip(tmp.iter()) {
                *t = s * f;
            }
            for (s, &t) in sum.iter_mut().zip(term.iter()) {
                *s += t;
            }
            if term.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt() < 1e-18 {
                break;
            }
        }
        sum
    }

    #[test]
    fn zero_scale_is_identity() {
        let gen = test_generator(2);
        let v = random_state(2, 5);
        let out = krylov_apply_exp(&gen, &v, 0.0, 8).unwrap();
        for (a, b) in out.iter().zip(v.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_preserves_norm() {
        let gen = test_generator(2);
        let v = random_state(2, 6);
        let norm_in: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        let out = krylov_apply_exp(&gen, &v, 0.005, 8).unwrap();
        let norm_out: f64 = out.iter().map(|a| a.norm_sqr()).sum();
        assert!((norm_out / norm_in - 1.0).abs() < 1e-10, "norm drift {}", norm_out / norm_in - 1.0);
    }

    #[test]
    fn matches_dense_oracle_at_n2() {
        let gen = test_generator(2);
        let v = random_state(2, 7);
        let scale = 0.005;
        let krylov = krylov_apply_exp(&gen, &v, scale, 8).unwrap();
        let dense = dense_exp_apply(&gen, &v, scale);
        for (a, b) in krylov.iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-8, "diff {}", (a - b).norm());
        }
    }

    #[test]
    fn zero_generator_breaks_down_gracefully() {
        let model = ModelParams::dimensionless(0.0, 2).unwrap();
        let ed = EdParams::new(2, 0.01, 1.0, 1, 8, 1).unwrap();
        let layer = sample_disorder_layer(&model, &ed, 0, 0, LayerKind::Measurement);
        let gen = Generator::from_layer(&layer, 2);
        let v = random_state(2, 8);
        let out = krylov_apply_exp(&gen, &v, 0.7, 8).unwrap();
        for (a, b) in out.iter().zip(v.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn shared_basis_combination_matches_separate_runs() {
        let gen = test_generator(2);
        let v = random_state(2, 9);
        let c1 = Complex64::new(0.5, -0.5);
        let c2 = Complex64::new(0.5, 0.5);
        let mut prop = KrylovPropagator::new(8, v.len());
        let mut combined = vec![Complex64::ZERO; v.len()];
        prop.apply_exp_combination(&gen, &v, &[(0.005, c1), (-0.005, c2)], &mut combined)
            .unwrap();
        let a = krylov_apply_exp(&gen, &v, 0.005, 8).unwrap();
        let b = krylov_apply_exp(&gen, &v, -0.005, 8).unwrap();
        for i in 0..v.len() {
            let sep = c1 * a[i] + c2 * b[i];
            assert!((combined[i] - sep).norm() < 1e-12);
        }
    }

    #[test]
    fn small_subspace_converges_with_dim() {
        let gen = test_generator(2);
        let v = random_state(2, 10);
        let dense = dense_exp_apply(&gen, &v, 0.2);
        let mut errs = Vec::new();
        for m in [2usize, 4, 8] {
            let out = krylov_apply_exp(&gen, &v, 0.2, m).unwrap();
            let err: f64 =
                out.iter().zip(dense.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            errs.push(err);
        }
        assert!(errs[0] > errs[1], "errors not decreasing: {errs:?}");
        assert!(errs[1] > errs[2] || errs[2] < 1e-12, "errors not decreasing: {errs:?}");
    }
}
