//! Per-particle random streams.
//!
//! Every particle owns a stream addressed by `(seed, particle_index)`. The
//! generator is ChaCha8 keyed by the seed, with the particle index as the
//! 64-bit stream (nonce) number, so any stream is reachable in O(1) and
//! results never depend on how particles are scheduled over workers.
//!
//! A stream has two lanes. The main lane serves flight times and
//! velocities. The auxiliary lane, a 128-bit PCG generator whose state is
//! a bijective scramble of `(seed, particle_index)`, serves the normal
//! deviates of diffusive increments. A KDMC trajectory therefore consumes
//! the main lane exactly like a kinetic trajectory of the same particle,
//! and the auxiliary lane costs nothing for particles that never use it.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_pcg::Pcg64Mcg;
use rand_distr::{Open01, StandardNormal};

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
    aux: Option<Pcg64Mcg>,
    key: u128,
}

// Odd multiplier and offset for the lane-state scramble.
const AUX_MUL: u128 = 0x2360_ed05_1fc6_5da4_4385_df64_9fcc_f645;
const AUX_ADD: u128 = 0x5851_f42d_4c95_7f2d_1405_7b7e_f767_814f;

/// Stream for particle `particle_index` of a run seeded with `seed`.
pub fn derive_stream(seed: u64, particle_index: u64) -> RngStream {
    let mut inner = ChaCha8Rng::seed_from_u64(seed);
    inner.set_stream(particle_index);
    RngStream {
        inner,
        aux: None,
        key: (u128::from(seed) << 64) | u128::from(particle_index),
    }
}

impl RngStream {
    /// Uniform deviate on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.sample(Open01)
    }

    /// Standard normal deviate.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Standard normal deviate from the auxiliary lane.
    #[inline]
    pub fn aux_normal(&mut self) -> f64 {
        let key = self.key;
        self.aux
            .get_or_insert_with(|| Pcg64Mcg::new(key.wrapping_mul(AUX_MUL).wrapping_add(AUX_ADD)))
            .sample(StandardNormal)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}
