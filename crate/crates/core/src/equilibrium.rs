//! Mixed strategies, the exact minimax solution of a zero-sum matrix game and
//! EXP3 self-play.
//!
//! All functions take the attacker (row, maximizing) payoff matrix. The
//! defender receives its negation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::EquilibriumError;
use crate::lp;
use crate::matrix::Matrix;

const SIMPLEX_TOL: f64 = 1e-9;

/// Probability distribution over an ordered action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(probabilities: Vec<f64>) -> Result<MixedStrategy, EquilibriumError> {
        if probabilities.is_empty() {
            return Err(EquilibriumError::InvalidStrategy("no actions".into()));
        }
        if let Some(p) = probabilities
            .iter()
            .find(|p| !(p.is_finite() && **p >= 0.0))
        {
            return Err(EquilibriumError::InvalidStrategy(format!(
                "bad probability {p}"
            )));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(EquilibriumError::InvalidStrategy(format!(
                "probabilities sum to {sum}"
            )));
        }
        Ok(MixedStrategy(probabilities))
    }

    /// Scales nonnegative weights to sum to one.
    pub fn normalized(weights: Vec<f64>) -> Result<MixedStrategy, EquilibriumError> {
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(EquilibriumError::InvalidStrategy(
                "weights cannot be normalized".into(),
            ));
        }
        MixedStrategy::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(n: usize) -> MixedStrategy {
        assert!(n > 0, "uniform strategy over no actions");
        MixedStrategy(vec![1.0 / n as f64; n])
    }

    pub fn pure(n: usize, index: usize) -> MixedStrategy {
        assert!(index < n, "pure strategy index {index} out of range");
        let mut p = vec![0.0; n];
        p[index] = 1.0;
        MixedStrategy(p)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Indices with probability above `tol`.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.0.len()).filter(|i| self.0[*i] > tol).collect()
    }

    pub fn max_abs_diff(&self, other: &MixedStrategy) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }
}

fn check_dims(m: &Matrix, a: &MixedStrategy, d: &MixedStrategy) -> Result<(), EquilibriumError> {
    if m.is_empty() {
        return Err(EquilibriumError::EmptyMatrix);
    }
    if a.len() != m.rows() {
        return Err(EquilibriumError::DimensionMismatch {
            expected: m.rows(),
            got: a.len(),
        });
    }
    if d.len() != m.cols() {
        return Err(EquilibriumError::DimensionMismatch {
            expected: m.cols(),
            got: d.len(),
        });
    }
    Ok(())
}

/// `Σ_a Σ_d F(a,d) ρ_a μ_d`.
pub fn expected_payoff(
    m: &Matrix,
    attacker: &MixedStrategy,
    defender: &MixedStrategy,
) -> Result<f64, EquilibriumError> {
    check_dims(m, attacker, defender)?;
    Ok(m.mul_vec(defender.probabilities())
        .iter()
        .zip(attacker.probabilities())
        .map(|(v, p)| v * p)
        .sum())
}

/// Best attacker reply value against `defender`: `max_a (F μ)_a`.
pub fn attacker_best_response(m: &Matrix, defender: &MixedStrategy) -> f64 {
    m.mul_vec(defender.probabilities())
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Best defender reply value against `attacker`: `min_d (ρᵀ F)_d`.
pub fn defender_best_response(m: &Matrix, attacker: &MixedStrategy) -> f64 {
    m.vec_mul(attacker.probabilities())
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// `max_a (F μ)_a − min_d (ρᵀ F)_d`, zero exactly at an equilibrium.
pub fn exploitability(
    m: &Matrix,
    attacker: &MixedStrategy,
    defender: &MixedStrategy,
) -> Result<f64, EquilibriumError> {
    check_dims(m, attacker, defender)?;
    Ok((attacker_best_response(m, defender) - defender_best_response(m, attacker)).max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub attacker: MixedStrategy,
    pub defender: MixedStrategy,
    /// Game value to the attacker.
    pub value: f64,
    /// Attacker's guaranteed payoff `min_d (ρᵀ F)_d`.
    pub maximin: f64,
    /// Defender's guaranteed bound `max_a (F μ)_a`.
    pub minimax: f64,
    /// `minimax − maximin`.
    pub gap: f64,
    /// The optimal basis admits ties, so other equilibria may exist.
    pub degenerate: bool,
}

/// Exact equilibrium via the minimax linear program.
///
/// The matrix is mapped affinely onto `[1, 2]`; the defender's LP is then
/// `max Σu` subject to `F̃ u ≤ 1`, whose duals give the attacker strategy.
pub fn solve_minimax(m: &Matrix) -> Result<EquilibriumResult, EquilibriumError> {
    if m.is_empty() {
        return Err(EquilibriumError::EmptyMatrix);
    }
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(EquilibriumError::Solver("non-finite payoff".into()));
    }
    let (lo, hi) = (m.min(), m.max());
    let range = hi - lo;
    let (attacker, defender, degenerate) = if range <= 0.0 {
        (
            MixedStrategy::uniform(m.rows()),
            MixedStrategy::uniform(m.cols()),
            true,
        )
    } else {
        let shifted = m.map(|v| (v - lo) / range + 1.0);
        let sol = lp::maximize(&shifted, &vec![1.0; m.rows()], &vec![1.0; m.cols()], 1e-9)?;
        if sol.objective <= 0.0 {
            return Err(EquilibriumError::Solver("nonpositive optimum".into()));
        }
        (
            MixedStrategy::normalized(sol.duals)?,
            MixedStrategy::normalized(sol.x)?,
            sol.primal_tie || sol.dual_tie,
        )
    };
    let maximin = defender_best_response(m, &attacker);
    let minimax = attacker_best_response(m, &defender);
    Ok(EquilibriumResult {
        value: expected_payoff(m, &attacker, &defender)?,
        gap: (minimax - maximin).max(0.0),
        attacker,
        defender,
        maximin,
        minimax,
        degenerate,
    })
}

/// Learning rates for one EXP3 round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exp3Params {
    pub eta: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl Exp3Params {
    /// `η > 0`, `γ ∈ (0, 1]`, `β ≥ 0`.
    pub fn validate(&self) -> Result<(), EquilibriumError> {
        let Exp3Params { eta, gamma, beta } = *self;
        if !(eta.is_finite() && eta > 0.0) {
            return Err(EquilibriumError::InvalidSchedule(format!("eta = {eta}")));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(EquilibriumError::InvalidSchedule(format!(
                "gamma = {gamma}"
            )));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(EquilibriumError::InvalidSchedule(format!("beta = {beta}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// Rates decay with the round index `t`.
    Anytime,
    /// Rates fixed from the run length `T`.
    Horizon,
}

/// Parameter schedule for one learner with `K` actions:
/// `η = min(1, c_η √(ln K / (K s)))`, `γ = min(1, c_γ √(K ln K / s))`,
/// `β = c_β / (K √s)`, where `s` is `t` or `T` depending on the kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exp3Schedule {
    pub kind: ScheduleKind,
    pub eta_scale: f64,
    pub gamma_scale: f64,
    pub beta_scale: f64,
}

impl Exp3Schedule {
    pub const ANYTIME: Exp3Schedule = Exp3Schedule {
        kind: ScheduleKind::Anytime,
        eta_scale: 1.0,
        gamma_scale: 1.0,
        beta_scale: 1.0,
    };

    pub const HORIZON: Exp3Schedule = Exp3Schedule {
        kind: ScheduleKind::Horizon,
        eta_scale: 4.0,
        gamma_scale: 0.25,
        beta_scale: 1.0,
    };

    pub fn anytime() -> Exp3Schedule {
        Exp3Schedule::ANYTIME
    }

    pub fn horizon() -> Exp3Schedule {
        Exp3Schedule::HORIZON
    }

    pub fn validate(&self) -> Result<(), EquilibriumError> {
        for (name, v) in [
            ("eta", self.eta_scale),
            ("gamma", self.gamma_scale),
            ("beta", self.beta_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(EquilibriumError::InvalidSchedule(format!(
                    "{name} scale = {v}"
                )));
            }
        }
        Ok(())
    }

    /// Parameters for round `t` (1-based) of a `horizon`-round run.
    pub fn params(&self, actions: usize, t: u64, horizon: u64) -> Exp3Params {
        let k = actions.max(1) as f64;
        let ln_k = k.max(2.0).ln();
        let s = match self.kind {
            ScheduleKind::Anytime => t.max(1),
            ScheduleKind::Horizon => horizon.max(1),
        } as f64;
        Exp3Params {
            eta: (self.eta_scale * (ln_k / (k * s)).sqrt()).min(1.0),
            gamma: (self.gamma_scale * (k * ln_k / s).sqrt()).min(1.0),
            beta: self.beta_scale / (k * s.sqrt()),
        }
    }
}

impl Default for Exp3Schedule {
    fn default() -> Self {
        Exp3Schedule::HORIZON
    }
}

/// One EXP3 learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Exp3State {
    scores: Vec<f64>,
    sigma: Vec<f64>,
    weighted_sum: Vec<f64>,
    weight_total: f64,
    t: u64,
}

impl Exp3State {
    /// Uniform start over `actions` actions.
    pub fn new(actions: usize) -> Exp3State {
        assert!(actions > 0, "EXP3 needs at least one action");
        Exp3State {
            scores: vec![0.0; actions],
            sigma: vec![1.0 / actions as f64; actions],
            weighted_sum: vec![0.0; actions],
            weight_total: 0.0,
            t: 0,
        }
    }

    pub fn actions(&self) -> usize {
        self.sigma.len()
    }

    /// Rounds played so far.
    pub fn rounds(&self) -> u64 {
        self.t
    }

    /// Cumulative scores `G`.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Current sampling distribution `σ_t`.
    pub fn current(&self) -> MixedStrategy {
        MixedStrategy(self.sigma.clone())
    }

    /// `σ̄_t = Σ η_τ σ_τ / Σ η_τ`; the current distribution before any round.
    pub fn empirical(&self) -> MixedStrategy {
        if self.weight_total <= 0.0 {
            return self.current();
        }
        let mut p: Vec<f64> = self
            .weighted_sum
            .iter()
            .map(|w| w / self.weight_total)
            .collect();
        let sum: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= sum);
        MixedStrategy(p)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        sample_index(&self.sigma, rng)
    }

    /// Applies one round in place: the chosen action earned `reward ∈ [0,1]`.
    pub fn update(
        &mut self,
        chosen: usize,
        reward: f64,
        params: Exp3Params,
    ) -> Result<(), EquilibriumError> {
        params.validate()?;
        let k = self.sigma.len();
        if chosen >= k {
            return Err(EquilibriumError::ActionOutOfRange {
                index: chosen,
                actions: k,
            });
        }
        if !(0.0..=1.0).contains(&reward) {
            return Err(EquilibriumError::RewardOutOfRange(reward));
        }
        assert!(
            self.sigma[chosen] > 0.0,
            "chosen action has zero probability"
        );

        for (acc, s) in self.weighted_sum.iter_mut().zip(&self.sigma) {
            *acc += params.eta * s;
        }
        self.weight_total += params.eta;

        for a in 0..k {
            let hit = if a == chosen { reward } else { 0.0 };
            self.scores[a] += params.eta * (hit + params.beta) / self.sigma[a];
        }
        let top = self
            .scores
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = self.scores.iter().map(|g| (g - top).exp()).collect();
        let z: f64 = exp.iter().sum();
        let explore = params.gamma / k as f64;
        for (s, e) in self.sigma.iter_mut().zip(&exp) {
            *s = explore + (1.0 - params.gamma) * e / z;
        }
        self.t += 1;
        Ok(())
    }
}

/// Pure form of [`Exp3State::update`].
pub fn exp3_step(
    state: &Exp3State,
    chosen: usize,
    reward: f64,
    params: Exp3Params,
) -> Result<Exp3State, EquilibriumError> {
    let mut next = state.clone();
    next.update(chosen, reward, params)?;
    Ok(next)
}

fn sample_index(p: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, v) in p.iter().enumerate() {
        acc += v;
        if u < acc {
            return i;
        }
    }
    p.iter().rposition(|v| *v > 0.0).unwrap_or(p.len() - 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfPlayConfig {
    pub iterations: u64,
    pub seed: u64,
    pub attacker_schedule: Exp3Schedule,
    pub defender_schedule: Exp3Schedule,
    /// Number of evenly spaced trace samples; the last round is always included.
    pub trace_points: usize,
}

impl SelfPlayConfig {
    pub fn new(iterations: u64, seed: u64) -> SelfPlayConfig {
        SelfPlayConfig {
            iterations,
            seed,
            attacker_schedule: Exp3Schedule::default(),
            defender_schedule: Exp3Schedule::default(),
            trace_points: 100,
        }
    }

    pub fn with_schedule(self, schedule: Exp3Schedule) -> SelfPlayConfig {
        SelfPlayConfig {
            attacker_schedule: schedule,
            defender_schedule: schedule,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: u64,
    pub exploitability: f64,
    pub value_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfPlayResult {
    /// Weighted empirical frequencies `σ̄_A`.
    pub attacker: MixedStrategy,
    /// Weighted empirical frequencies `σ̄_D`.
    pub defender: MixedStrategy,
    /// Last-round sampling distributions.
    pub attacker_last: MixedStrategy,
    pub defender_last: MixedStrategy,
    /// `expected_payoff(σ̄_A, σ̄_D)` on the raw matrix.
    pub value: f64,
    pub exploitability: f64,
    pub trace: Vec<TracePoint>,
    pub iterations: u64,
    pub seed: u64,
}

/// Affine map of attacker payoffs onto `[0, 1]`; for a matrix with zero as
/// its minimum this is division by the largest payoff.
pub fn normalized_rewards(m: &Matrix) -> Matrix {
    let (lo, hi) = (m.min(), m.max());
    if hi > lo {
        m.map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
    } else {
        m.map(|_| 0.0)
    }
}

/// Two EXP3 learners playing each other under bandit feedback.
pub fn exp3_selfplay(
    m: &Matrix,
    config: &SelfPlayConfig,
) -> Result<SelfPlayResult, EquilibriumError> {
    if m.is_empty() {
        return Err(EquilibriumError::EmptyMatrix);
    }
    if config.iterations == 0 {
        return Err(EquilibriumError::InvalidSchedule(
            "iterations must be at least 1".into(),
        ));
    }
    config.attacker_schedule.validate()?;
    config.defender_schedule.validate()?;
    let rewards = normalized_rewards(m);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut attacker = Exp3State::new(m.rows());
    let mut defender = Exp3State::new(m.cols());
    let horizon = config.iterations;
    let every = (horizon / config.trace_points.max(1) as u64).max(1);
    let mut trace = Vec::new();

    for t in 1..=horizon {
        let a = attacker.sample(&mut rng);
        let d = defender.sample(&mut rng);
        let r = rewards.get(a, d);
        attacker.update(a, r, config.attacker_schedule.params(m.rows(), t, horizon))?;
        defender.update(
            d,
            1.0 - r,
            config.defender_schedule.params(m.cols(), t, horizon),
        )?;
        if t % every == 0 || t == horizon {
            let (sa, sd) = (attacker.empirical(), defender.empirical());
            trace.push(TracePoint {
                t,
                exploitability: exploitability(m, &sa, &sd)?,
                value_estimate: expected_payoff(m, &sa, &sd)?,
            });
        }
    }

    let (sa, sd) = (attacker.empirical(), defender.empirical());
    Ok(SelfPlayResult {
        value: expected_payoff(m, &sa, &sd)?,
        exploitability: exploitability(m, &sa, &sd)?,
        attacker_last: attacker.current(),
        defender_last: defender.current(),
        attacker: sa,
        defender: sd,
        trace,
        iterations: horizon,
        seed: config.seed,
    })
}

/// Exported strategy of one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyDocument {
    pub actions: Vec<String>,
    pub probabilities: Vec<f64>,
    pub value: f64,
    pub exploitability: f64,
    pub iterations: Option<u64>,
    pub seed: Option<u64>,
}

impl StrategyDocument {
    pub fn to_strategy(&self) -> Result<MixedStrategy, EquilibriumError> {
        if self.actions.len() != self.probabilities.len() {
            return Err(EquilibriumError::DimensionMismatch {
                expected: self.actions.len(),
                got: self.probabilities.len(),
            });
        }
        MixedStrategy::new(self.probabilities.clone())
    }
}

/// `t,exploitability,value_estimate` rows.
pub fn trace_csv(trace: &[TracePoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in trace {
        w.serialize(p).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}
