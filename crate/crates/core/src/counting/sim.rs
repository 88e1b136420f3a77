//! Event-driven Monte Carlo of gated detection.
//!
//! Most gates are empty, so the simulator jumps from one eventful gate to the
//! next with a geometric draw. Inside an eventful gate it picks the first
//! active source conditionally and samples the remaining ones freely. Only
//! pairs that reach at least one detector are drawn; by binomial thinning
//! their number is again thermal with a reduced mean.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;

use super::expect::GateModel;
use super::{DetectorConfig, PumpConfig, Routing, ScanResult, ScatterModel};
use crate::error::{Error, Result};

/// Gates per independent batch. Batch `k` draws from stream `k` of the seeded
/// generator and starts with both detectors armed.
pub const BATCH_GATES: u64 = 1 << 22;

struct Sampler {
    model: GateModel,
    quiet: [f64; 5],
    event_probability: f64,
    gap: Option<Geometric>,
    extra_pairs: Option<Geometric>,
}

impl Sampler {
    fn new(model: GateModel) -> Result<Self> {
        let event_probability = model.event_probability();
        let gap = if event_probability > 0.0 {
            Some(Geometric::new(event_probability).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        // Failures before success with success probability 1/(1+m) give the
        // thermal law P(n) = m^n / (1+m)^(n+1).
        let extra_pairs = if model.relevant_pair_mean > 0.0 {
            Some(Geometric::new(1.0 / (1.0 + model.relevant_pair_mean)).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            quiet: model.quiet_probabilities(),
            model,
            event_probability,
            gap,
            extra_pairs,
        })
    }

    /// Index of the first active source, given that at least one is active.
    fn first_active<R: Rng>(&self, rng: &mut R) -> usize {
        let mut u = rng.random::<f64>() * self.event_probability;
        let mut prefix = 1.0;
        let mut last = 0;
        for (k, &z) in self.quiet.iter().enumerate() {
            let w = prefix * (1.0 - z);
            if w > 0.0 {
                last = k;
                if u < w {
                    return k;
                }
                u -= w;
            }
            prefix *= z;
        }
        last
    }

    /// Detector hits in an eventful gate, before dead-time gating.
    fn sample_event<R: Rng>(&self, rng: &mut R) -> (bool, bool) {
        let first = self.first_active(rng);
        let (mut hit1, mut hit2) = (false, false);
        if first == 0 {
            let extra = self.extra_pairs.as_ref().map_or(0, |g| g.sample(rng));
            for _ in 0..=extra {
                let u = rng.random::<f64>();
                if u < self.model.both {
                    hit1 = true;
                    hit2 = true;
                } else if u < self.model.both + self.model.first_only {
                    hit1 = true;
                } else {
                    hit2 = true;
                }
            }
        }
        let probs = [self.model.raman_click[0], self.model.raman_click[1], self.model.dark[0], self.model.dark[1]];
        for (i, &p) in probs.iter().enumerate() {
            let k = i + 1;
            let active = match k.cmp(&first) {
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => true,
                std::cmp::Ordering::Greater => rng.random::<f64>() < p,
            };
            if active {
                if i % 2 == 0 {
                    hit1 = true;
                } else {
                    hit2 = true;
                }
            }
        }
        (hit1, hit2)
    }

    fn run_batch(&self, len: u64, dead: [u64; 2], seed: u64, stream: u64) -> ScanResult {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut out = ScanResult {
            n_gates: len,
            ..Default::default()
        };
        let mut dead_gates = [0u64; 2];
        let Some(gap) = self.gap.as_ref() else {
            out.active_gates_1 = len;
            out.active_gates_2 = len;
            return out;
        };
        let mut armed_from = [0u64; 2];
        let mut g = 0u64;
        loop {
            g = match g.checked_add(gap.sample(&mut rng)) {
                Some(v) if v < len => v,
                _ => break,
            };
            let (hit1, hit2) = self.sample_event(&mut rng);
            let mut clicks = [false; 2];
            for (d, hit) in [hit1, hit2].into_iter().enumerate() {
                if hit && g >= armed_from[d] {
                    clicks[d] = true;
                    armed_from[d] = g + 1 + dead[d];
                    dead_gates[d] += dead[d].min(len - g - 1);
                }
            }
            out.singles_1 += clicks[0] as u64;
            out.singles_2 += clicks[1] as u64;
            out.coincidences += (clicks[0] && clicks[1]) as u64;
            g += 1;
        }
        out.active_gates_1 = len - dead_gates[0];
        out.active_gates_2 = len - dead_gates[1];
        out
    }
}

/// Simulates `n_gates` detector gates and aggregates the counts.
///
/// Identical arguments give identical results regardless of the number of
/// worker threads. The `setting` field of the result is left at zero.
pub fn simulate_gates(
    pump: &PumpConfig,
    det1: &DetectorConfig,
    det2: &DetectorConfig,
    scat: &ScatterModel,
    routing: &Routing,
    n_gates: u64,
    seed: u64,
) -> Result<ScanResult> {
    if n_gates == 0 {
        return Err(Error::Config("n_gates must be positive".into()));
    }
    let sampler = Sampler::new(GateModel::new(pump, det1, det2, scat, routing)?)?;
    let dead = [det1.dead_gates(), det2.dead_gates()];
    let batches = n_gates.div_ceil(BATCH_GATES);
    let total = (0..batches)
        .into_par_iter()
        .map(|b| {
            let len = BATCH_GATES.min(n_gates - b * BATCH_GATES);
            sampler.run_batch(len, dead, seed, b)
        })
        .reduce(ScanResult::default, ScanResult::merge);
    Ok(total.finish(0.0))
}
