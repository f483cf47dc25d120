use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// A reproducible stream of uniform and standard-normal variates.
///
/// The generator is ChaCha8 keyed by `seed` with `stream_id` selecting one of
/// 2⁶⁴ independent keystreams, so parallel ensembles can use the trajectory
/// index as stream id. Normals come from the Marsaglia polar method; the
/// second variate of each accepted pair is cached and returned next.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
    position: u64,
    spare: Option<f64>,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
            position: 0,
            spare: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of normal variates handed out so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Uniform on [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn gaussian(&mut self) -> f64 {
        self.position += 1;
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }

    pub fn gaussians(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.gaussian()).collect()
    }
}

/// `n` standard normals from `stream`, advancing it.
pub fn gaussian_draws(stream: &mut RandomStream, n: usize) -> Vec<f64> {
    stream.gaussians(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn deterministic() {
        let a = gaussian_draws(&mut RandomStream::new(42, 3), 1000);
        let b = gaussian_draws(&mut RandomStream::new(42, 3), 1000);
        assert_eq!(a, b);
        let c = gaussian_draws(&mut RandomStream::new(42, 4), 1000);
        assert_ne!(a, c);
    }

    #[test]
    fn moments() {
        let n = 100_000;
        let x = gaussian_draws(&mut RandomStream::new(7, 0), n);
        let (m, v) = mean_var(&x);
        assert!(m.abs() < 4.0 / (n as f64).sqrt(), "mean {m}");
        assert!((v - 1.0).abs() < 0.05, "var {v}");
    }

    #[test]
    fn streams_uncorrelated() {
        let n = 100_000;
        let x = gaussian_draws(&mut RandomStream::new(7, 0), n);
        let y = gaussian_draws(&mut RandomStream::new(7, 1), n);
        let (mx, vx) = mean_var(&x);
        let (my, vy) = mean_var(&y);
        let cov = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n as f64 - 1.0);
        let r = cov / (vx * vy).sqrt();
        assert!(r.abs() < 0.02, "r={r}");
    }

    #[test]
    fn position_advances() {
        let mut s = RandomStream::new(1, 1);
        s.gaussians(5);
        assert_eq!(s.position(), 5);
        assert_eq!(gaussian_draws(&mut s, 0).len(), 0);
    }
}
