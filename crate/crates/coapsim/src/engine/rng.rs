//! Deterministic, purpose-split random streams.
//!
//! Every consumer of randomness owns its own [`RngStream`], keyed by
//! `(scenario seed, node id, purpose)`. Adding a new consumer therefore
//! never perturbs draws seen by existing ones, which keeps whole-run
//! results stable under unrelated code changes. The generator is a
//! hand-rolled xorshift64* so sequences are bit-identical across
//! platforms and toolchains.

/// What a stream's draws are used for. Streams with different purposes
/// are seeded independently even on the same node.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Purpose {
    /// Initial RTO draws made by congestion-control policies.
    CcRto = 1,
    /// CSMA backoff delays.
    CsmaBackoff = 2,
    /// Per-attempt link delivery (loss) draws.
    LinkLoss = 3,
    /// Application traffic phases and inter-arrival jitter.
    Traffic = 4,
    /// Radio duty-cycle wakeup offsets ahead of transmission attempts.
    MacWakeup = 5,
}

/// Splittable deterministic generator (xorshift64*, splitmix64-seeded).
#[derive(Clone, Debug)]
pub struct RngStream {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(x: &mut u64) -> u64 {
    *x = x.wrapping_add(GOLDEN_GAMMA);
    let mut z = *x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    /// Stream for one `(scenario seed, node, purpose)` triple.
    pub fn for_node(seed: u64, node: u16, purpose: Purpose) -> Self {
        let mut key = seed;
        let a = splitmix64(&mut key);
        key ^= (node as u64).wrapping_mul(GOLDEN_GAMMA) ^ ((purpose as u64) << 32);
        let b = splitmix64(&mut key);
        RngStream::from_seed(a ^ b.rotate_left(17))
    }

    pub fn from_seed(seed: u64) -> Self {
        // xorshift64* cannot sit at zero.
        let state = if seed == 0 { GOLDEN_GAMMA } else { seed };
        RngStream { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo <= hi);
        lo + (hi - lo) * self.next_f64()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Exponential draw with the given mean (inverse-CDF method).
    pub fn exponential(&mut self, mean: f64) -> f64 {
        debug_assert!(mean > 0.0);
        -mean * (1.0 - self.next_f64()).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_sequence() {
        let mut a = RngStream::for_node(42, 3, Purpose::LinkLoss);
        let mut b = RngStream::for_node(42, 3, Purpose::LinkLoss);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn purposes_get_distinct_streams() {
        let mut a = RngStream::for_node(42, 3, Purpose::LinkLoss);
        let mut b = RngStream::for_node(42, 3, Purpose::CsmaBackoff);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn nodes_get_distinct_streams() {
        let mut a = RngStream::for_node(42, 3, Purpose::Traffic);
        let mut b = RngStream::for_node(42, 4, Purpose::Traffic);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn streams_are_statistically_unrelated() {
        // Pearson correlation between two purpose-split streams on the
        // same node should be indistinguishable from noise.
        let mut a = RngStream::for_node(7, 0, Purpose::CcRto);
        let mut b = RngStream::for_node(7, 0, Purpose::Traffic);
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|_| a.next_f64()).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.next_f64()).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mx, my) = (mean(&xs), mean(&ys));
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let r = cov / (vx.sqrt() * vy.sqrt());
        assert!(r.abs() < 0.05, "correlation {r} too high");
    }

    #[test]
    fn uniform_stays_in_range() {
        let mut rng = RngStream::from_seed(1);
        for _ in 0..10_000 {
            let x = rng.uniform(2.0, 3.0);
            assert!((2.0..3.0).contains(&x));
        }
    }

    #[test]
    fn zero_seed_is_remapped() {
        let mut rng = RngStream::from_seed(0);
        assert_ne!(rng.next_u64(), 0);
    }

    #[test]
    fn exponential_mean_is_close() {
        let mut rng = RngStream::from_seed(9);
        let n = 100_000;
        let sum: f64 = (0..n).map(|_| rng.exponential(2.0)).sum();
        let mean = sum / n as f64;
        assert!((mean - 2.0).abs() < 0.05, "mean {mean}");
    }
}
