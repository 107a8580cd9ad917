//! Closed-form M/M/m (FIFO) analysis of the RSU channel pool.
//!
//! Channels are the servers. `lambda_r` is the arrival rate of communication
//! requests, `mu` the per-channel service rate and `m` the channel count.
//! All steady-state quantities require `lambda_r / (m * mu) < 1`.

use thiserror::Error;

/// Utilization values above this are treated as unstable.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Channel counts above this switch factorials and powers to log space.
const LOG_SPACE_THRESHOLD: u32 = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueueError {
    #[error("invalid queue parameter: {0}")]
    InvalidParameter(String),
    #[error("unstable system: utilization {rho} is not below 1")]
    Unstable { rho: f64 },
}

pub type Result<T> = std::result::Result<T, QueueError>;

/// Arrival rate, per-channel service rate and channel count.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QueueParams {
    pub lambda_r: f64,
    pub mu: f64,
    pub m: u32,
}

impl QueueParams {
    pub fn new(lambda_r: f64, mu: f64, m: u32) -> Result<Self> {
        let params = Self { lambda_r, mu, m };
        params.validate()?;
        Ok(params)
    }

    /// Checks positivity and finiteness. Stability is checked separately so
    /// that overloaded scenarios can still be simulated.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_r.is_finite() && self.lambda_r > 0.0) {
            return Err(QueueError::InvalidParameter(format!(
                "lambda_r must be positive and finite, got {}",
                self.lambda_r
            )));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(QueueError::InvalidParameter(format!(
                "mu must be positive and finite, got {}",
                self.mu
            )));
        }
        if self.m == 0 {
            return Err(QueueError::InvalidParameter("m must be at least 1".into()));
        }
        Ok(())
    }

    /// Offered load per channel, without the stability check.
    pub fn offered_load(&self) -> f64 {
        self.lambda_r / (f64::from(self.m) * self.mu)
    }

    pub fn is_stable(&self) -> bool {
        self.validate().is_ok() && self.offered_load() <= 1.0 - STABILITY_MARGIN
    }
}

/// Steady-state metrics of a stable M/M/m queue.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QueueMetrics {
    pub rho: f64,
    pub p0: f64,
    /// Probability that an arrival waits (Erlang C).
    pub p_wait: f64,
    pub n_q: f64,
    pub t_q: f64,
    pub t_total: f64,
    pub n_r: f64,
}

/// `rho = lambda_r / (m * mu)`, strictly inside (0, 1).
pub fn utilization(params: &QueueParams) -> Result<f64> {
    params.validate()?;
    let rho = params.offered_load();
    if rho > 1.0 - STABILITY_MARGIN {
        return Err(QueueError::Unstable { rho });
    }
    Ok(rho)
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| f64::from(k).ln()).sum()
}

fn factorial(n: u32) -> f64 {
    debug_assert!(n <= LOG_SPACE_THRESHOLD);
    (2..=u64::from(n)).product::<u64>() as f64
}

/// Logarithm of the unnormalized bracket
/// `sum_{k<m} a^k/k! + a^m / (m! (1 - rho))` with `a = m * rho`.
fn ln_bracket(m: u32, rho: f64) -> f64 {
    let a = f64::from(m) * rho;
    if m <= LOG_SPACE_THRESHOLD {
        let head: f64 = (0..m).map(|k| a.powi(k as i32) / factorial(k)).sum();
        let tail = a.powi(m as i32) / (factorial(m) * (1.0 - rho));
        return (head + tail).ln();
    }
    let ln_a = a.ln();
    let mut terms: Vec<f64> = (0..m)
        .map(|k| f64::from(k) * ln_a - ln_factorial(k))
        .collect();
    terms.push(f64::from(m) * ln_a - ln_factorial(m) - (1.0 - rho).ln());
    log_sum_exp(&terms)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Probability of the empty system, the reciprocal of the normalizing bracket.
pub fn p_zero(params: &QueueParams) -> Result<f64> {
    let rho = utilization(params)?;
    Ok((-ln_bracket(params.m, rho)).exp())
}

/// Stationary probability of `n` requests in the system.
pub fn p_n(params: &QueueParams, n: u64) -> Result<f64> {
    let rho = utilization(params)?;
    let m = params.m;
    let ln_p0 = -ln_bracket(m, rho);
    let nf = n as f64;
    let ln_pn = if n <= u64::from(m) {
        let n32 = n as u32;
        let ln_fact = if n32 <= LOG_SPACE_THRESHOLD {
            factorial(n32).ln()
        } else {
            ln_factorial(n32)
        };
        ln_p0 + nf * (f64::from(m) * rho).ln() - ln_fact
    } else {
        let mf = f64::from(m);
        ln_p0 + mf * mf.ln() + nf * rho.ln() - ln_factorial(m)
    };
    Ok(ln_pn.exp())
}

/// Erlang C: probability that an arriving request finds all channels busy.
pub fn prob_wait(params: &QueueParams) -> Result<f64> {
    let rho = utilization(params)?;
    let m = params.m;
    let a = f64::from(m) * rho;
    let ln_tail = f64::from(m) * a.ln() - ln_factorial(m) - (1.0 - rho).ln();
    let p = (ln_tail - ln_bracket(m, rho)).exp();
    Ok(p.clamp(0.0, 1.0))
}

/// All steady-state metrics at once.
pub fn analyze(params: &QueueParams) -> Result<QueueMetrics> {
    let rho = utilization(params)?;
    let p0 = p_zero(params)?;
    let p_wait = prob_wait(params)?;
    let n_q = p_wait * rho / (1.0 - rho);
    let t_q = p_wait * rho / (params.lambda_r * (1.0 - rho));
    let t_total = t_q + 1.0 / params.mu;
    let n_r = f64::from(params.m) * rho + n_q;
    Ok(QueueMetrics {
        rho,
        p0,
        p_wait,
        n_q,
        t_q,
        t_total,
        n_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(l: f64, mu: f64, m: u32) -> QueueParams {
        QueueParams::new(l, mu, m).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    /// Independent oracle: explicit birth-death recursion
    /// `p_{n+1} = p_n * lambda / (min(n+1, m) mu)`, normalized by truncation.
    fn birth_death(l: f64, mu: f64, m: u32, n_max: usize) -> Vec<f64> {
        let mut p = vec![1.0_f64];
        for n in 0..n_max {
            let servers = ((n + 1) as u32).min(m) as f64;
            let next = p[n] * l / (servers * mu);
            p.push(next);
        }
        let total: f64 = p.iter().sum();
        p.iter().map(|x| x / total).collect()
    }

    #[test]
    fn utilization_examples() {
        assert_eq!(utilization(&params(0.5, 1.0, 1)).unwrap(), 0.5);
        assert_eq!(utilization(&params(1.5, 1.0, 2)).unwrap(), 0.75);
        assert!(matches!(
            utilization(&params(2.0, 1.0, 2)),
            Err(QueueError::Unstable { .. })
        ));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(matches!(
            QueueParams::new(0.0, 1.0, 1),
            Err(QueueError::InvalidParameter(_))
        ));
        assert!(QueueParams::new(1.0, -1.0, 1).is_err());
        assert!(QueueParams::new(1.0, 1.0, 0).is_err());
        assert!(QueueParams::new(f64::NAN, 1.0, 1).is_err());
        let bad = QueueParams {
            lambda_r: -1.0,
            mu: 1.0,
            m: 1,
        };
        assert!(matches!(
            utilization(&bad),
            Err(QueueError::InvalidParameter(_))
        ));
    }

    #[test]
    fn margin_rejects_near_critical_load() {
        let p = params(1.0 - 1e-10, 1.0, 1);
        assert!(utilization(&p).is_err());
        assert!(!p.is_stable());
    }

    #[test]
    fn p_zero_examples() {
        assert!(close(p_zero(&params(0.5, 1.0, 1)).unwrap(), 0.5, 1e-12));
        // bracket = 1 + 1.5 + 1.5^2 / (2 * 0.25) = 7
        assert!(close(
            p_zero(&params(1.5, 1.0, 2)).unwrap(),
            1.0 / 7.0,
            1e-12
        ));
        assert!(close(p_zero(&params(0.9, 1.0, 1)).unwrap(), 0.1, 1e-12));
    }

    #[test]
    fn p_n_examples() {
        let mm1 = params(0.5, 1.0, 1);
        assert!(close(p_n(&mm1, 0).unwrap(), 0.5, 1e-12));
        assert!(close(p_n(&mm1, 2).unwrap(), 0.125, 1e-12));
        // (1/7) * 2^2 * 0.75^3 / 2!
        let expected = (1.0 / 7.0) * 4.0 * 0.421875 / 2.0;
        assert!(close(
            p_n(&params(1.5, 1.0, 2), 3).unwrap(),
            expected,
            1e-12
        ));
        assert!((expected - 0.120536).abs() < 1e-6);
    }

    #[test]
    fn prob_wait_examples() {
        assert!(close(prob_wait(&params(0.5, 1.0, 1)).unwrap(), 0.5, 1e-12));
        assert!(close(
            prob_wait(&params(1.5, 1.0, 2)).unwrap(),
            4.5 / 7.0,
            1e-12
        ));

        let light = params(0.1, 1.0, 4);
        let oracle: f64 = birth_death(0.1, 1.0, 4, 200)[4..].iter().sum();
        let pw = prob_wait(&light).unwrap();
        assert!(pw < 1e-3);
        assert!((pw - oracle).abs() <= 1e-6 * oracle);
    }

    #[test]
    fn analyze_examples() {
        let a = analyze(&params(0.5, 1.0, 1)).unwrap();
        assert!(close(a.n_q, 0.5, 1e-12));
        assert!(close(a.t_q, 1.0, 1e-12));
        assert!(close(a.t_total, 2.0, 1e-12));
        assert!(close(a.n_r, 1.0, 1e-12));

        let b = analyze(&params(1.5, 1.0, 2)).unwrap();
        assert!(close(b.n_q, 13.5 / 7.0, 1e-12));
        assert!(close(b.t_q, 9.0 / 7.0, 1e-12));
        assert!(close(b.t_total, 16.0 / 7.0, 1e-12));
        assert!(close(b.n_r, 24.0 / 7.0, 1e-12));

        let c = analyze(&params(0.9, 1.0, 1)).unwrap();
        assert!(close(c.n_q, 8.1, 1e-12));
        assert!(close(c.t_q, 9.0, 1e-12));
        assert!(close(c.t_total, 10.0, 1e-12));
        assert!(close(c.n_r, 9.0, 1e-12));
    }

    #[test]
    fn state_probabilities_match_birth_death_oracle() {
        for &(l, mu, m) in &[
            (1.5, 1.0, 2),
            (2.4, 1.0, 4),
            (7.0, 0.5, 16),
            (20.0, 1.0, 25),
        ] {
            let p = params(l, mu, m);
            let oracle = birth_death(l, mu, m, 2000);
            for n in [0usize, 1, m as usize - 1, m as usize, m as usize + 3] {
                let got = p_n(&p, n as u64).unwrap();
                assert!(
                    (got - oracle[n]).abs() <= 1e-9 * oracle[n].max(1e-300),
                    "p_{n} for {l},{mu},{m}: {got} vs {}",
                    oracle[n]
                );
            }
            let tail: f64 = oracle[m as usize..].iter().sum();
            assert!((prob_wait(&p).unwrap() - tail).abs() <= 1e-6 * tail);
        }
    }

    #[test]
    fn log_space_agrees_with_direct_across_threshold() {
        // m = 21 takes the log-space branch; compare with the oracle.
        let p = params(18.9, 1.0, 21);
        let oracle = birth_death(18.9, 1.0, 21, 4000);
        assert!((p_zero(&p).unwrap() - oracle[0]).abs() <= 1e-9 * oracle[0]);
        // Large pools do not overflow.
        let big = params(900.0, 1.0, 1000);
        let m = analyze(&big).unwrap();
        assert!(m.p0.is_finite() && m.p_wait.is_finite() && m.p_wait <= 1.0);
    }

    #[test]
    fn truncated_normalization() {
        for &(l, mu, m) in &[(0.5, 1.0, 1), (1.5, 1.0, 2), (2.4, 1.0, 4), (3.2, 1.0, 4)] {
            let p = params(l, mu, m);
            let rho = utilization(&p).unwrap();
            let n_max = (f64::from(m) + 50.0 * rho / (1.0 - rho)).ceil() as u64;
            let sum: f64 = (0..=n_max).map(|n| p_n(&p, n).unwrap()).sum();
            assert!((1.0 - sum).abs() < 1e-6, "{l},{mu},{m}: {sum}");
        }
    }

    proptest! {
        #[test]
        fn metric_identities(rho in 0.01f64..0.98, mu in 0.1f64..10.0, m in 1u32..40) {
            let p = params(rho * f64::from(m) * mu, mu, m);
            let q = analyze(&p).unwrap();
            prop_assert!(q.rho > 0.0 && q.rho < 1.0);
            prop_assert!(q.p0 > 0.0 && q.p0 <= 1.0);
            prop_assert!((0.0..=1.0).contains(&q.p_wait));
            prop_assert_eq!(q.t_total, q.t_q + 1.0 / mu);
            prop_assert_eq!(q.n_r, f64::from(m) * q.rho + q.n_q);
            prop_assert!((q.n_q - p.lambda_r * q.t_q).abs() <= 1e-9 * q.n_q.max(1e-300));
            prop_assert!((q.n_r - p.lambda_r * q.t_total).abs() <= 1e-9 * q.n_r);
        }

        #[test]
        fn mm1_closed_forms(rho in 0.01f64..0.99, mu in 0.1f64..10.0) {
            let l = rho * mu;
            let q = analyze(&params(l, mu, 1)).unwrap();
            prop_assert!((q.p_wait - q.rho).abs() <= 1e-12);
            prop_assert!((q.n_q - q.rho * q.rho / (1.0 - q.rho)).abs() <= 1e-9 * q.n_q);
            prop_assert!((q.t_q - q.rho / (mu - l)).abs() <= 1e-9 * q.t_q);
        }

        #[test]
        fn monotone_in_arrival_rate(r1 in 0.05f64..0.9, dr in 0.001f64..0.05, m in 1u32..12) {
            let mu = 1.0;
            let a = analyze(&params(r1 * f64::from(m), mu, m)).unwrap();
            let b = analyze(&params((r1 + dr) * f64::from(m), mu, m)).unwrap();
            prop_assert!(b.p_wait > a.p_wait);
            prop_assert!(b.n_q > a.n_q);
            prop_assert!(b.t_q > a.t_q);
        }
    }
}
