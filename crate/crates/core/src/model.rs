//! The agent-based SIS hidden Markov model.
//!
//! Hidden state: one binary state per agent (0 susceptible, 1 infected).
//! Per-agent rates come from logistic links on agent covariates. A
//! susceptible agent is infected with probability `lambda_n` times the
//! fraction of its neighbors that are infected; an infected agent stays
//! infected with probability `1 - gamma_n`. The observed count is a binomial
//! thinning of the number of infected agents with detection probability `rho`.

use rand::Rng;

use crate::error::{ensure, Error, Result};
use crate::network::Network;
use crate::scalar::Real;

/// Infection status of every agent at one time step.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AgentStateVector {
    states: Vec<u8>,
    time_index: usize,
}

impl AgentStateVector {
    pub fn new(states: Vec<u8>, time_index: usize) -> Result<Self> {
        ensure!(states.iter().all(|&s| s <= 1), "agent states must be 0 or 1");
        Ok(Self { states, time_index })
    }

    pub fn susceptible(n_agents: usize, time_index: usize) -> Self {
        Self {
            states: vec![0; n_agents],
            time_index,
        }
    }

    pub(crate) fn from_raw(states: Vec<u8>, time_index: usize) -> Self {
        debug_assert!(states.iter().all(|&s| s <= 1));
        Self { states, time_index }
    }

    pub fn states(&self) -> &[u8] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    pub fn is_infected(&self, agent: usize) -> bool {
        self.states[agent] == 1
    }

    /// `I_t`, the number of infected agents.
    pub fn infected_count(&self) -> u64 {
        self.states.iter().map(|&s| s as u64).sum()
    }

    /// Infected count restricted to `members`.
    pub fn infected_among(&self, members: &[usize]) -> u64 {
        members.iter().map(|&m| self.states[m] as u64).sum()
    }
}

/// A hidden path `x_0, ..., x_T`.
pub type Trajectory = Vec<AgentStateVector>;

/// How recovery probabilities are obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum Recovery<F> {
    /// Every agent shares this recovery probability.
    Fixed(F),
    /// Logistic link on the covariates with these coefficients.
    Covariate(Vec<F>),
}

/// Model parameters: link coefficients for initial infection, infection and
/// (optionally) recovery, plus the detection probability.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet<F> {
    beta_alpha: Vec<F>,
    beta_lambda: Vec<F>,
    recovery: Recovery<F>,
    rho: F,
}

impl<F: Real> ParameterSet<F> {
    pub fn new(beta_alpha: Vec<F>, beta_lambda: Vec<F>, recovery: Recovery<F>, rho: F) -> Result<Self> {
        ensure!(!beta_alpha.is_empty(), "coefficient vectors must be non-empty");
        ensure!(
            beta_alpha.len() == beta_lambda.len(),
            "beta_alpha has dimension {} but beta_lambda has {}",
            beta_alpha.len(),
            beta_lambda.len()
        );
        match &recovery {
            Recovery::Fixed(g) => ensure!(
                *g > F::zero() && *g <= F::one(),
                "fixed recovery rate {g} outside (0, 1]"
            ),
            Recovery::Covariate(b) => ensure!(
                b.len() == beta_alpha.len(),
                "beta_gamma has dimension {} but beta_alpha has {}",
                b.len(),
                beta_alpha.len()
            ),
        }
        ensure!(rho > F::zero() && rho <= F::one(), "rho = {rho} outside (0, 1]");
        let all_finite = beta_alpha
            .iter()
            .chain(&beta_lambda)
            .chain(match &recovery {
                Recovery::Covariate(b) => b.as_slice(),
                Recovery::Fixed(_) => &[],
            })
            .all(|b| b.is_finite());
        ensure!(all_finite, "coefficients must be finite");
        Ok(Self {
            beta_alpha,
            beta_lambda,
            recovery,
            rho,
        })
    }

    pub fn dim(&self) -> usize {
        self.beta_alpha.len()
    }

    pub fn beta_alpha(&self) -> &[F] {
        &self.beta_alpha
    }

    pub fn beta_lambda(&self) -> &[F] {
        &self.beta_lambda
    }

    pub fn recovery(&self) -> &Recovery<F> {
        &self.recovery
    }

    pub fn beta_gamma(&self) -> Option<&[F]> {
        match &self.recovery {
            Recovery::Covariate(b) => Some(b),
            Recovery::Fixed(_) => None,
        }
    }

    pub fn gamma_fixed(&self) -> Option<F> {
        match self.recovery {
            Recovery::Fixed(g) => Some(g),
            Recovery::Covariate(_) => None,
        }
    }

    pub fn rho(&self) -> F {
        self.rho
    }

    pub fn with_rho(&self, rho: F) -> Result<Self> {
        Self::new(
            self.beta_alpha.clone(),
            self.beta_lambda.clone(),
            self.recovery.clone(),
            rho,
        )
    }

    /// Number of sampled coordinates: all free coefficients plus `rho`.
    pub fn n_coordinates(&self) -> usize {
        self.n_coefficients() + 1
    }

    pub fn n_coefficients(&self) -> usize {
        let d = self.dim();
        match self.recovery {
            Recovery::Fixed(_) => 2 * d,
            Recovery::Covariate(_) => 3 * d,
        }
    }

    /// Column names in coordinate order, e.g. `beta_a0, beta_a1, beta_l0, beta_l1, rho`.
    pub fn coordinate_names(&self) -> Vec<String> {
        let d = self.dim();
        let mut names: Vec<String> = (0..d).map(|i| format!("beta_a{i}")).collect();
        names.extend((0..d).map(|i| format!("beta_l{i}")));
        if self.beta_gamma().is_some() {
            names.extend((0..d).map(|i| format!("beta_g{i}")));
        }
        names.push("rho".to_string());
        names
    }

    /// Coordinates on the natural scale (`rho` last, untransformed).
    pub fn natural_values(&self) -> Vec<F> {
        let mut v = self.beta_alpha.clone();
        v.extend_from_slice(&self.beta_lambda);
        if let Some(g) = self.beta_gamma() {
            v.extend_from_slice(g);
        }
        v.push(self.rho);
        v
    }

    /// Coordinates on the sampler scale: coefficients followed by `logit(rho)`.
    pub fn unconstrained(&self) -> Vec<F> {
        let mut v = self.natural_values();
        let last = v.len() - 1;
        v[last] = self.rho.logit();
        v
    }

    /// Rebuilds a parameter set with the same layout (and fixed recovery,
    /// if any) from natural-scale coordinates.
    pub fn with_natural_values(&self, values: &[F]) -> Result<Self> {
        ensure!(
            values.len() == self.n_coordinates(),
            "expected {} coordinates, got {}",
            self.n_coordinates(),
            values.len()
        );
        let d = self.dim();
        let recovery = match self.recovery {
            Recovery::Fixed(g) => Recovery::Fixed(g),
            Recovery::Covariate(_) => Recovery::Covariate(values[2 * d..3 * d].to_vec()),
        };
        Self::new(
            values[..d].to_vec(),
            values[d..2 * d].to_vec(),
            recovery,
            values[values.len() - 1],
        )
    }

    /// Inverse of [`ParameterSet::unconstrained`].
    pub fn with_unconstrained(&self, values: &[F]) -> Result<Self> {
        let mut v = values.to_vec();
        if let Some(last) = v.last_mut() {
            *last = last.logistic();
        }
        self.with_natural_values(&v)
    }

    pub fn cast<G: Real>(&self) -> ParameterSet<G> {
        let c = |v: &[F]| v.iter().map(|x| G::of(x.f64())).collect::<Vec<G>>();
        ParameterSet {
            beta_alpha: c(&self.beta_alpha),
            beta_lambda: c(&self.beta_lambda),
            recovery: match &self.recovery {
                Recovery::Fixed(g) => Recovery::Fixed(G::of(g.f64())),
                Recovery::Covariate(b) => Recovery::Covariate(c(b)),
            },
            rho: G::of(self.rho.f64()),
        }
    }
}

/// Agent covariate rows `z^n`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentPopulation<F> {
    covariates: Vec<F>,
    dim: usize,
}

impl<F: Real> AgentPopulation<F> {
    pub fn new(rows: Vec<Vec<F>>) -> Result<Self> {
        ensure!(!rows.is_empty(), "population must have at least one agent");
        let dim = rows[0].len();
        ensure!(dim > 0, "covariate rows must be non-empty");
        ensure!(
            rows.iter().all(|r| r.len() == dim),
            "all covariate rows must have dimension {dim}"
        );
        Ok(Self {
            covariates: rows.into_iter().flatten().collect(),
            dim,
        })
    }

    /// Rows `(1, v_n)`: an intercept plus one covariate per agent.
    pub fn with_intercept(values: &[F]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![F::one(), v]).collect())
    }

    pub fn len(&self) -> usize {
        self.covariates.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.covariates.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, agent: usize) -> &[F] {
        &self.covariates[agent * self.dim..(agent + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[F]> {
        self.covariates.chunks_exact(self.dim)
    }
}

/// Per-agent `(alpha0, lambda, gamma)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentRates<F> {
    pub alpha0: Vec<F>,
    pub lambda: Vec<F>,
    pub gamma: Vec<F>,
}

impl<F: Real> AgentRates<F> {
    pub fn new(alpha0: Vec<F>, lambda: Vec<F>, gamma: Vec<F>) -> Result<Self> {
        ensure!(
            alpha0.len() == lambda.len() && lambda.len() == gamma.len(),
            "rate vectors must share one length"
        );
        let unit = |v: &[F]| v.iter().all(|&x| x >= F::zero() && x <= F::one());
        ensure!(
            unit(&alpha0) && unit(&lambda) && unit(&gamma),
            "rates must lie in [0, 1]"
        );
        Ok(Self { alpha0, lambda, gamma })
    }

    /// Same rates for every agent.
    pub fn uniform(n_agents: usize, alpha0: F, lambda: F, gamma: F) -> Result<Self> {
        Self::new(vec![alpha0; n_agents], vec![lambda; n_agents], vec![gamma; n_agents])
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

/// `(1 + exp(-beta . z))^-1`.
pub fn logistic_link<F: Real>(beta: &[F], z: &[F]) -> Result<F> {
    ensure!(
        beta.len() == z.len(),
        "beta has dimension {} but z has {}",
        beta.len(),
        z.len()
    );
    Ok(dot(beta, z).logistic())
}

#[inline]
fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn compute_agent_rates<F: Real>(theta: &ParameterSet<F>, pop: &AgentPopulation<F>) -> Result<AgentRates<F>> {
    ensure!(
        pop.dim() == theta.dim(),
        "covariates have dimension {} but parameters have {}",
        pop.dim(),
        theta.dim()
    );
    let alpha0 = pop.rows().map(|z| dot(theta.beta_alpha(), z).logistic()).collect();
    let lambda = pop.rows().map(|z| dot(theta.beta_lambda(), z).logistic()).collect();
    let gamma = match theta.recovery() {
        Recovery::Fixed(g) => vec![*g; pop.len()],
        Recovery::Covariate(b) => pop.rows().map(|z| dot(b, z).logistic()).collect(),
    };
    Ok(AgentRates { alpha0, lambda, gamma })
}

/// Remembers the rates of the last parameter set it saw.
#[derive(Clone, Debug, Default)]
pub struct RateCache<F> {
    key: Option<ParameterSet<F>>,
    rates: Option<AgentRates<F>>,
}

impl<F: Real> RateCache<F> {
    pub fn new() -> Self {
        Self { key: None, rates: None }
    }

    pub fn get(&mut self, theta: &ParameterSet<F>, pop: &AgentPopulation<F>) -> Result<&AgentRates<F>> {
        if self.key.as_ref() != Some(theta) || self.rates.is_none() {
            self.rates = Some(compute_agent_rates(theta, pop)?);
            self.key = Some(theta.clone());
        }
        Ok(self.rates.as_ref().expect("rates cached above"))
    }
}

#[inline]
fn xi_from_count<F: Real>(state: u8, infected_neighbors: u32, degree: usize, lambda: F, gamma: F) -> F {
    if state == 1 {
        F::one() - gamma
    } else if degree == 0 || infected_neighbors == 0 {
        F::zero()
    } else {
        lambda * F::of(infected_neighbors as f64) / F::of(degree as f64)
    }
}

/// Probability that `agent` is infected at the next step.
pub fn transition_probability<F: Real>(
    agent: usize,
    current: &AgentStateVector,
    rates: &AgentRates<F>,
    net: &Network,
) -> F {
    let infected: u32 = net.neighbors(agent).map(|m| current.states[m] as u32).sum();
    xi_from_count(
        current.states[agent],
        infected,
        net.degree(agent),
        rates.lambda[agent],
        rates.gamma[agent],
    )
}

/// All agents' transition probabilities at once, using `counts` as scratch.
pub(crate) fn transition_probabilities_into<F: Real>(
    states: &[u8],
    rates: &AgentRates<F>,
    net: &Network,
    counts: &mut [u32],
    out: &mut [F],
) {
    net.infected_neighbor_counts(states, counts);
    let degrees = net.degrees();
    for n in 0..states.len() {
        out[n] = xi_from_count(states[n], counts[n], degrees[n], rates.lambda[n], rates.gamma[n]);
    }
}

#[inline]
pub(crate) fn bernoulli<F: Real, R: Rng + ?Sized>(rng: &mut R, p: F) -> u8 {
    if p <= F::zero() {
        0
    } else {
        (rng.random::<f64>() < p.f64()) as u8
    }
}

/// One transition of every agent, written into `out`. `counts` is scratch
/// of length N. Agents with zero infection probability consume no randomness.
pub(crate) fn propagate_into<F: Real, R: Rng + ?Sized>(
    states: &[u8],
    rates: &AgentRates<F>,
    net: &Network,
    counts: &mut [u32],
    out: &mut [u8],
    rng: &mut R,
) {
    net.infected_neighbor_counts(states, counts);
    let degrees = net.degrees();
    for n in 0..states.len() {
        let xi = xi_from_count(states[n], counts[n], degrees[n], rates.lambda[n], rates.gamma[n]);
        out[n] = bernoulli(rng, xi);
    }
}

pub(crate) fn initial_into<F: Real, R: Rng + ?Sized>(rates: &AgentRates<F>, out: &mut [u8], rng: &mut R) {
    for (o, &a) in out.iter_mut().zip(&rates.alpha0) {
        *o = bernoulli(rng, a);
    }
}

/// Draws `x_{t+1}` given `x_t`, each agent independently.
pub fn step_agents<F: Real, R: Rng + ?Sized>(
    current: &AgentStateVector,
    rates: &AgentRates<F>,
    net: &Network,
    rng: &mut R,
) -> Result<AgentStateVector> {
    ensure!(
        current.len() == rates.len() && current.len() == net.len(),
        "state has {} agents, rates {}, network {}",
        current.len(),
        rates.len(),
        net.len()
    );
    let mut counts = vec![0u32; current.len()];
    let mut next = vec![0u8; current.len()];
    propagate_into(&current.states, rates, net, &mut counts, &mut next, rng);
    Ok(AgentStateVector::from_raw(next, current.time_index + 1))
}

/// Draws `x_0`: agent `n` is infected with probability `alpha0_n`.
pub fn sample_initial_state<F: Real, R: Rng + ?Sized>(rates: &AgentRates<F>, rng: &mut R) -> AgentStateVector {
    let mut states = vec![0u8; rates.len()];
    initial_into(rates, &mut states, rng);
    AgentStateVector::from_raw(states, 0)
}

/// `log Binomial(y; n, p)`, `-inf` when `y > n`. `p` may be exactly 0 or 1.
pub fn binomial_logpmf<F: Real>(y: u64, n: u64, p: F) -> F {
    if y > n {
        return F::neg_infinity();
    }
    if p >= F::one() {
        return if y == n { F::zero() } else { F::neg_infinity() };
    }
    if p <= F::zero() {
        return if y == 0 { F::zero() } else { F::neg_infinity() };
    }
    let (yf, nf) = (F::of(y as f64), F::of(n as f64));
    let ln_choose = (nf + F::one()).ln_gamma() - (yf + F::one()).ln_gamma() - (nf - yf + F::one()).ln_gamma();
    ln_choose + yf * p.ln() + (nf - yf) * (-p).ln_1p()
}

/// `log p(y_t | x_t) = log Binomial(y_t; I_t, rho)`.
pub fn observation_logpmf<F: Real>(y: u64, state: &AgentStateVector, rho: F) -> F {
    binomial_logpmf(y, state.infected_count(), rho)
}

/// `R_n = lambda_n / gamma_n`.
pub fn reproduction_number<F: Real>(rates: &AgentRates<F>) -> Result<Vec<F>> {
    ensure!(
        rates.gamma.iter().all(|&g| g > F::zero()),
        "reproduction number undefined for an agent with zero recovery rate"
    );
    Ok(rates.lambda.iter().zip(&rates.gamma).map(|(&l, &g)| l / g).collect())
}

/// Complete-data log-likelihood `log p(x_{0:T}, y_{0:T})`: initial Bernoulli
/// terms, product-Bernoulli transitions for `t = 1..T`, binomial emissions
/// for `t = 0..T`.
pub fn complete_data_loglik<F: Real>(
    rates: &AgentRates<F>,
    rho: F,
    net: &Network,
    trajectory: &[AgentStateVector],
    observations: &[u64],
) -> Result<F> {
    ensure!(
        trajectory.len() == observations.len(),
        "trajectory has {} states but there are {} observations",
        trajectory.len(),
        observations.len()
    );
    ensure!(!trajectory.is_empty(), "empty trajectory");
    let n = rates.len();
    ensure!(
        trajectory.iter().all(|s| s.len() == n) && net.len() == n,
        "trajectory width must match the population"
    );
    let ln_bern = |x: u8, p: F| -> F {
        if x == 1 {
            p.ln()
        } else {
            (-p).ln_1p()
        }
    };
    let mut total: F = trajectory[0]
        .states
        .iter()
        .zip(&rates.alpha0)
        .map(|(&x, &a)| ln_bern(x, a))
        .sum();
    let mut counts = vec![0u32; n];
    let mut xi = vec![F::zero(); n];
    for w in trajectory.windows(2) {
        transition_probabilities_into(&w[0].states, rates, net, &mut counts, &mut xi);
        total = total + w[1].states.iter().zip(&xi).map(|(&x, &p)| ln_bern(x, p)).sum::<F>();
        if total == F::neg_infinity() {
            return Ok(total);
        }
    }
    for (s, &y) in trajectory.iter().zip(observations) {
        total = total + observation_logpmf(y, s, rho);
    }
    Ok(total)
}

/// Trajectory width check shared by the filters.
pub(crate) fn check_trajectory(reference: &[AgentStateVector], n_agents: usize, steps: usize) -> Result<()> {
    if reference.len() != steps {
        return Err(Error::Contract(format!(
            "reference trajectory has {} states, expected {steps}",
            reference.len()
        )));
    }
    ensure!(
        reference.iter().all(|s| s.len() == n_agents),
        "reference trajectory width does not match {n_agents} agents"
    );
    Ok(())
}
