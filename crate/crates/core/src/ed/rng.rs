//! Counter-keyed Gaussian streams for the Brownian disorder.
//!
//! Every layer of every realization draws from its own stream keyed by
//! (master seed, realization, step, layer kind); the i-th draw of a stream is
//! the i-th term's coefficient. Realizations can therefore run concurrently
//! in any order and still reproduce bit-identical circuits.

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone)]
pub struct GaussianStream {
    state: u64,
    spare: Option<f64>,
}

impl GaussianStream {
    /// Derive a stream from the master seed and an ordered key tuple.
    pub fn keyed(master_seed: u64, key: &[u64]) -> Self {
        let mut state = mix(master_seed ^ GOLDEN);
        for &part in key {
            state = mix(state.wrapping_mul(GOLDEN).wrapping_add(part).wrapping_add(1));
        }
        Self { state, spare: None }
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform in (0, 1]; never zero, so ln() is safe.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Standard normal via the Box-Muller transform.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let mag = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(mag * angle.sin());
        mag * angle.cos()
    }

    pub fn normal_scaled(&mut self, sigma: f64) -> f64 {
        sigma * self.normal()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_stream() {
        let mut a = GaussianStream::keyed(42, &[1, 7, 0]);
        let mut b = GaussianStream::keyed(42, &[1, 7, 0]);
        for _ in 0..100 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
        }
    }

    #[test]
    fn different_keys_decorrelate() {
        let mut a = GaussianStream::keyed(42, &[1, 7, 0]);
        let mut b = GaussianStream::keyed(42, &[1, 7, 1]);
        let n = 10_000;
        let mut corr = 0.0;
        for _ in 0..n {
            corr += a.normal() * b.normal();
        }
        assert!((corr / n as f64).abs() < 0.05);
    }

    #[test]
    fn moments() {
        let mut s = GaussianStream::keyed(7, &[3]);
        let n = 100_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let z = s.normal();
            sum += z;
            sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 5.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }
}
