//! Finite-arm allocation policies.
//!
//! Roster: explore-then-commit (`ec`), standard UCB (`ucb`), the two-bound
//! prior-assisted UCB (`llm2ucb`), prior-augmented single UCB (`ucbprior`),
//! Thompson sampling (`ts`), Thompson sampling with prior pseudo-samples
//! (`llmts`), and the stateless greedy-on-prior policy (`purellm`).
//!
//! All counter-based policies initialize each arm with one phantom
//! impression and zero clicks (`n=1, c=0, mean=0`), so the `n_aux = 0`
//! reductions to their prior-free counterparts are exact to the bit. The
//! phantom impression biases early means downward by one observation; that
//! is reproduced deliberately rather than corrected.
//!
//! Ties on the decision index are broken by the prior-augmented bound when
//! one is defined (so a prior-informed policy prefers the arm its prior
//! favors), then by a uniform draw from the policy's stream. A draw is
//! consumed only when a tie survives, which keeps reduced and full variants
//! on identical stream positions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Canonical policy identifier strings, as used in manifests and result
/// files.
pub const POLICY_IDS: [&str; 7] = ["ec", "ucb", "llm2ucb", "ucbprior", "ts", "llmts", "purellm"];

/// Per-arm pull/click counters with the phantom-impression initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterState {
    n: Vec<u64>,
    clicks: Vec<u64>,
    mean: Vec<f64>,
}

impl CounterState {
    pub fn new(k: usize) -> Self {
        CounterState { n: vec![1; k], clicks: vec![0; k], mean: vec![0.0; k] }
    }

    pub fn k(&self) -> usize {
        self.n.len()
    }

    pub fn pulls(&self, k: usize) -> u64 {
        self.n[k]
    }

    pub fn clicks(&self, k: usize) -> u64 {
        self.clicks[k]
    }

    pub fn mean(&self, k: usize) -> f64 {
        self.mean[k]
    }

    pub fn record(&mut self, arm: usize, reward: bool) {
        self.n[arm] += 1;
        self.clicks[arm] += reward as u64;
        // Recomputed from the integer counters every time; the mean never
        // drifts from clicks/n.
        self.mean[arm] = self.clicks[arm] as f64 / self.n[arm] as f64;
    }
}

/// Upper-bound scale and pseudo-sample size for the UCB family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcbConfig {
    pub alpha: f64,
    pub n_aux: u64,
}

/// Per-arm Beta posterior parameters for Thompson sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaState {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl BetaState {
    pub fn uniform_prior(k: usize, alpha0: f64, beta0: f64) -> Self {
        assert!(alpha0 > 0.0 && beta0 > 0.0, "Beta parameters must be positive");
        BetaState { alpha: vec![alpha0; k], beta: vec![beta0; k] }
    }

    pub fn params(&self, k: usize) -> (f64, f64) {
        (self.alpha[k], self.beta[k])
    }
}

/// Exploration budget for explore-then-commit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcConfig {
    pub explore_fraction: f64,
}

/// Sample-only upper confidence bound `mean + alpha * sqrt(log t / n)` with
/// the natural log; `log 1 = 0`, so every arm indexes at 0 on the first
/// period.
pub fn ucb_index(state: &CounterState, k: usize, t: u64, alpha: f64) -> f64 {
    state.mean[k] + alpha * ((t as f64).ln() / state.n[k] as f64).sqrt()
}

/// Prior-augmented bound: the sample mean over real plus pseudo
/// observations, with the exploration bonus shrunk by the pseudo count.
pub fn prior_ucb_index(state: &CounterState, prior_ctr: f64, k: usize, t: u64, cfg: UcbConfig) -> f64 {
    let pseudo = cfg.n_aux as f64;
    let mean = (state.clicks[k] as f64 + prior_ctr * pseudo) / (state.n[k] as f64 + pseudo);
    mean + cfg.alpha * ((t as f64).ln() / (state.n[k] as f64 + pseudo)).sqrt()
}

/// Argmax over `primary`, ties narrowed to the maximum of `secondary`
/// (when given), remaining ties broken uniformly from the stream. The
/// stream is consumed only if more than one arm survives.
fn argmax_tiebreak(primary: &[f64], secondary: Option<&[f64]>, stream: &mut RngStream) -> usize {
    debug_assert!(!primary.is_empty());
    let best = primary.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut tied: Vec<usize> = (0..primary.len()).filter(|&i| primary[i] == best).collect();
    if tied.len() > 1 {
        if let Some(sec) = secondary {
            let best_sec = tied.iter().map(|&i| sec[i]).fold(f64::NEG_INFINITY, f64::max);
            tied.retain(|&i| sec[i] == best_sec);
        }
    }
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[stream.next_index(tied.len())]
    }
}

/// Argmax with seeded uniform tie-breaking. The oracle's accuracy
/// measurement shares this rule so calibration and deployment agree on
/// ties.
pub fn argmax_seeded(values: &[f64], stream: &mut RngStream) -> usize {
    argmax_tiebreak(values, None, stream)
}

/// Two-bound rule: play `argmax_k min(U1_k, U2_k)`.
pub fn two_ucb_choose(
    state: &CounterState,
    priors: &[f64],
    cfg: UcbConfig,
    t: u64,
    stream: &mut RngStream,
) -> usize {
    let k = state.k();
    let mut index = Vec::with_capacity(k);
    let mut u2 = Vec::with_capacity(k);
    for i in 0..k {
        let u1_i = ucb_index(state, i, t, cfg.alpha);
        let u2_i = prior_ucb_index(state, priors[i], i, t, cfg);
        index.push(u1_i.min(u2_i));
        u2.push(u2_i);
    }
    argmax_tiebreak(&index, Some(&u2), stream)
}

/// Single-bound benchmark: play `argmax_k U2_k`.
pub fn ucb_llm_prior_choose(
    state: &CounterState,
    priors: &[f64],
    cfg: UcbConfig,
    t: u64,
    stream: &mut RngStream,
) -> usize {
    let k = state.k();
    let u2: Vec<f64> =
        (0..k).map(|i| prior_ucb_index(state, priors[i], i, t, cfg)).collect();
    argmax_tiebreak(&u2, None, stream)
}

/// Standard UCB: play `argmax_k U1_k`.
pub fn standard_ucb_choose(state: &CounterState, alpha: f64, t: u64, stream: &mut RngStream) -> usize {
    let k = state.k();
    let u1: Vec<f64> = (0..k).map(|i| ucb_index(state, i, t, alpha)).collect();
    argmax_tiebreak(&u1, None, stream)
}

/// Sample one Beta variate per arm and play the argmax.
pub fn ts_choose(state: &BetaState, stream: &mut RngStream) -> usize {
    let samples: Vec<f64> = state
        .alpha
        .iter()
        .zip(&state.beta)
        .map(|(&a, &b)| {
            rand_distr::Distribution::sample(
                &rand_distr::Beta::new(a, b).expect("valid Beta parameters"),
                stream,
            )
        })
        .collect();
    argmax_tiebreak(&samples, None, stream)
}

/// Add `(r, 1-r)` to the pulled arm's posterior.
pub fn ts_update(state: &mut BetaState, arm: usize, reward: bool) {
    let r = reward as u64 as f64;
    state.alpha[arm] += r;
    state.beta[arm] += 1.0 - r;
}

/// Posterior-style prior: each arm starts at
/// `(alpha0 + n_aux * p, beta0 + n_aux * (1 - p))` where `p` is its
/// predicted CTR. With `n_aux = 0` this is exactly the base prior.
pub fn llm_ts_init(priors: &[f64], n_aux: u64, base: (f64, f64)) -> BetaState {
    let pseudo = n_aux as f64;
    let (alpha0, beta0) = base;
    BetaState {
        alpha: priors.iter().map(|&p| alpha0 + pseudo * p).collect(),
        beta: priors.iter().map(|&p| beta0 + pseudo * (1.0 - p)).collect(),
    }
}

/// Declarative policy configuration as it appears in run manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "lowercase")]
pub enum PolicyConfig {
    Ec { explore_fraction: f64 },
    Ucb { alpha: f64 },
    Llm2ucb { alpha: f64, n_aux: u64 },
    Ucbprior { alpha: f64, n_aux: u64 },
    Ts { alpha0: f64, beta0: f64 },
    Llmts { alpha0: f64, beta0: f64, n_aux: u64 },
    Purellm,
}

impl PolicyConfig {
    pub fn policy_id(&self) -> &'static str {
        match self {
            PolicyConfig::Ec { .. } => "ec",
            PolicyConfig::Ucb { .. } => "ucb",
            PolicyConfig::Llm2ucb { .. } => "llm2ucb",
            PolicyConfig::Ucbprior { .. } => "ucbprior",
            PolicyConfig::Ts { .. } => "ts",
            PolicyConfig::Llmts { .. } => "llmts",
            PolicyConfig::Purellm => "purellm",
        }
    }

    /// Whether the policy consumes per-arm CTR predictions.
    pub fn requires_prior(&self) -> bool {
        matches!(
            self,
            PolicyConfig::Llm2ucb { .. }
                | PolicyConfig::Ucbprior { .. }
                | PolicyConfig::Llmts { .. }
                | PolicyConfig::Purellm
        )
    }
}

/// Mutable run state for one policy on one test, advanced one impression at
/// a time.
#[derive(Debug, Clone)]
pub enum PolicyState {
    Ec { explore_len: u64, k: usize, pulls: Vec<u64>, clicks: Vec<u64>, committed: Option<usize> },
    Ucb { state: CounterState, alpha: f64 },
    TwoUcb { state: CounterState, priors: Vec<f64>, cfg: UcbConfig },
    UcbPrior { state: CounterState, priors: Vec<f64>, cfg: UcbConfig },
    Ts { state: BetaState },
    PureLlm { priors: Vec<f64> },
}

impl PolicyState {
    /// Build run state for `config` on a K-armed test over `horizon`
    /// periods. `priors` must be present exactly when the policy requires
    /// them, in arm order.
    pub fn new(
        config: &PolicyConfig,
        k: usize,
        horizon: u64,
        priors: Option<&[f64]>,
    ) -> Result<PolicyState> {
        if config.requires_prior() != priors.is_some() {
            return Err(Error::Sim(format!(
                "policy '{}' {} per-arm priors",
                config.policy_id(),
                if config.requires_prior() { "requires" } else { "does not take" }
            )));
        }
        if let Some(p) = priors {
            if p.len() != k {
                return Err(Error::Sim(format!(
                    "policy '{}' got {} priors for {k} arms",
                    config.policy_id(),
                    p.len()
                )));
            }
        }
        Ok(match config {
            PolicyConfig::Ec { explore_fraction } => {
                if !(0.0 < *explore_fraction && *explore_fraction < 1.0) {
                    return Err(Error::Config(format!(
                        "ec explore_fraction must be in (0,1), got {explore_fraction}"
                    )));
                }
                let explore_len = (explore_fraction * horizon as f64).floor() as u64;
                if explore_len < k as u64 {
                    return Err(Error::Config(format!(
                        "ec explore budget {explore_len} is smaller than K={k}"
                    )));
                }
                PolicyState::Ec {
                    explore_len,
                    k,
                    pulls: vec![0; k],
                    clicks: vec![0; k],
                    committed: None,
                }
            }
            PolicyConfig::Ucb { alpha } => {
                PolicyState::Ucb { state: CounterState::new(k), alpha: *alpha }
            }
            PolicyConfig::Llm2ucb { alpha, n_aux } => PolicyState::TwoUcb {
                state: CounterState::new(k),
                priors: priors.unwrap().to_vec(),
                cfg: UcbConfig { alpha: *alpha, n_aux: *n_aux },
            },
            PolicyConfig::Ucbprior { alpha, n_aux } => PolicyState::UcbPrior {
                state: CounterState::new(k),
                priors: priors.unwrap().to_vec(),
                cfg: UcbConfig { alpha: *alpha, n_aux: *n_aux },
            },
            PolicyConfig::Ts { alpha0, beta0 } => {
                PolicyState::Ts { state: BetaState::uniform_prior(k, *alpha0, *beta0) }
            }
            PolicyConfig::Llmts { alpha0, beta0, n_aux } => PolicyState::Ts {
                state: llm_ts_init(priors.unwrap(), *n_aux, (*alpha0, *beta0)),
            },
            PolicyConfig::Purellm => PolicyState::PureLlm { priors: priors.unwrap().to_vec() },
        })
    }

    /// Pick the arm to play on period `t` (1-based).
    pub fn choose(&mut self, t: u64, stream: &mut RngStream) -> usize {
        match self {
            PolicyState::Ec { explore_len, k, pulls, clicks, committed } => {
                if t <= *explore_len {
                    ((t - 1) % *k as u64) as usize
                } else {
                    *committed.get_or_insert_with(|| {
                        // Commit to the best empirical mean at the end of
                        // the exploration phase; every arm has at least one
                        // pull because explore_len >= K.
                        let means: Vec<f64> = pulls
                            .iter()
                            .zip(clicks.iter())
                            .map(|(&n, &c)| c as f64 / n as f64)
                            .collect();
                        argmax_tiebreak(&means, None, stream)
                    })
                }
            }
            PolicyState::Ucb { state, alpha } => standard_ucb_choose(state, *alpha, t, stream),
            PolicyState::TwoUcb { state, priors, cfg } => {
                two_ucb_choose(state, priors, *cfg, t, stream)
            }
            PolicyState::UcbPrior { state, priors, cfg } => {
                ucb_llm_prior_choose(state, priors, *cfg, t, stream)
            }
            PolicyState::Ts { state } => ts_choose(state, stream),
            PolicyState::PureLlm { priors } => argmax_tiebreak(priors, None, stream),
        }
    }

    /// Feed back the observed reward for the pulled arm.
    pub fn update(&mut self, arm: usize, reward: bool) {
        match self {
            PolicyState::Ec { pulls, clicks, .. } => {
                pulls[arm] += 1;
                clicks[arm] += reward as u64;
            }
            PolicyState::Ucb { state, .. }
            | PolicyState::TwoUcb { state, .. }
            | PolicyState::UcbPrior { state, .. } => state.record(arm, reward),
            PolicyState::Ts { state } => ts_update(state, arm, reward),
            PolicyState::PureLlm { .. } => {}
        }
    }
}
