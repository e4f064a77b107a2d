//! Closed-form queue and delay bounds, in exact rational arithmetic.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::engine::ExecutionTrace;
use crate::rational::{big, display, floor_int, to_f64, Rate};
use crate::scheduling::Policy;
use crate::{Error, Result};

/// Parameters shared by all bound formulas: burstiness `b`, rate `r`,
/// latency `h`, and `d`, the number of edges on the longest simple path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundParams {
    pub b: u64,
    pub r: Rate,
    pub h: u64,
    pub d: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    pub queue: BigRational,
    pub delay: BigRational,
}

impl Bounds {
    /// Largest whole number of packets allowed by the queue bound.
    pub fn queue_packets(&self) -> num_bigint::BigInt {
        floor_int(&self.queue)
    }
}

fn check_common(p: &BoundParams) -> Result<()> {
    if p.b == 0 || p.h == 0 || p.d == 0 {
        return Err(Error::Domain(format!("b, h and d must be positive (b={}, h={}, d={})", p.b, p.h, p.d)));
    }
    Ok(())
}

/// `1 - r·h`, required positive.
fn slack(p: &BoundParams) -> Result<BigRational> {
    let s = BigRational::one() - p.r.to_big() * big(p.h as i64);
    if s <= BigRational::zero() {
        return Err(Error::Domain(format!("r·h = {}·{} must be below 1", p.r, p.h)));
    }
    Ok(s)
}

/// `k_1 = b`, `k_{i+1} = (k_i + b) / (1 - r·h)` for `i < d`.
pub fn sis_k_sequence(p: BoundParams) -> Result<Vec<BigRational>> {
    check_common(&p)?;
    let s = slack(&p)?;
    let b = big(p.b as i64);
    let mut ks = vec![b.clone()];
    while ks.len() < p.d as usize {
        let next = (ks.last().expect("non-empty") + &b) / &s;
        ks.push(next);
    }
    Ok(ks)
}

/// Queue bound `k_d`, delay bound `Σ_{i=1..d} h·(k_i + b)/(1 - r·h)`.
pub fn sis_bounds(p: BoundParams) -> Result<Bounds> {
    let ks = sis_k_sequence(p)?;
    let s = slack(&p)?;
    let b = big(p.b as i64);
    let h = big(p.h as i64);
    let delay = ks.iter().fold(BigRational::zero(), |acc, k| acc + (k + &b) / &s * &h);
    Ok(Bounds { queue: ks.last().expect("d >= 1").clone(), delay })
}

/// Delay bound `(b + r)·h·(d - 1) + 1`, queue bound `r·delay + b`.
pub fn lis_bounds(p: BoundParams) -> Result<Bounds> {
    check_common(&p)?;
    if p.r.to_big() * big(p.h as i64) > BigRational::one() {
        return Err(Error::Domain(format!("r·h = {}·{} must not exceed 1", p.r, p.h)));
    }
    let r = p.r.to_big();
    let b = big(p.b as i64);
    let delay = (&b + &r) * big(p.h as i64) * big(p.d as i64 - 1) + BigRational::one();
    let queue = &r * &delay + &b;
    Ok(Bounds { queue, delay })
}

/// Transit time bound for a packet when at most `a` classes are active:
/// `(r·a + b)·h·(d - 1) / (1 + r·h·(d - 1))`.
pub fn lis_transit_bound(a: u64, p: BoundParams) -> BigRational {
    let r = p.r.to_big();
    let hd = big(p.h as i64) * big(p.d as i64 - 1);
    (&r * big(a as i64) + big(p.b as i64)) * &hd / (BigRational::one() + &r * &hd)
}

/// The active-class count at which the transit bound is a fixed point:
/// `(b + r)·h·(d - 1) + 1`.
pub fn lis_fixed_point(p: BoundParams) -> BigRational {
    (big(p.b as i64) + p.r.to_big()) * big(p.h as i64) * big(p.d as i64 - 1) + BigRational::one()
}

/// Like [`lis_transit_bound`] but for a rational `a`.
pub fn lis_transit_bound_at(a: &BigRational, p: BoundParams) -> BigRational {
    let r = p.r.to_big();
    let hd = big(p.h as i64) * big(p.d as i64 - 1);
    (&r * a + big(p.b as i64)) * &hd / (BigRational::one() + &r * &hd)
}

fn ser_rational<S: Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&display(x))
}

/// Observed maxima of one trace against the bounds of its policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub policy: Policy,
    pub params: BoundParams,
    #[serde(serialize_with = "ser_rational")]
    pub queue_bound: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub delay_bound: BigRational,
    pub observed_max_queue: u64,
    pub observed_max_delay: u64,
    pub queue_pass: bool,
    pub delay_pass: bool,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.queue_pass && self.delay_pass
    }

    pub const CSV_HEADER: &'static str =
        "scenario,policy,mode,h,r,b,d,queue_bound,observed_max_queue,delay_bound,observed_max_delay,verdict";

    /// One summary line; `mode` is the hearing control of the run.
    pub fn csv_row(&self, scenario: &str, mode: &str) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            scenario,
            self.policy,
            mode,
            self.params.h,
            self.params.r,
            self.params.b,
            self.params.d,
            display(&self.queue_bound),
            self.observed_max_queue,
            display(&self.delay_bound),
            self.observed_max_delay,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }

    pub fn summary(&self) -> String {
        format!(
            "{} bounds (b={}, r={}, h={}, d={}): max queue {} <= {} ({:.3}) {}; max delay {} <= {} ({:.3}) {}",
            self.policy,
            self.params.b,
            self.params.r,
            self.params.h,
            self.params.d,
            self.observed_max_queue,
            display(&self.queue_bound),
            to_f64(&self.queue_bound),
            if self.queue_pass { "PASS" } else { "FAIL" },
            self.observed_max_delay,
            display(&self.delay_bound),
            to_f64(&self.delay_bound),
            if self.delay_pass { "PASS" } else { "FAIL" },
        )
    }
}

/// Bounds for `policy` (SIS or LIS).
pub fn bounds_for(policy: Policy, p: BoundParams) -> Result<Bounds> {
    match policy {
        Policy::Sis => sis_bounds(p),
        Policy::Lis => lis_bounds(p),
        other => Err(Error::Config(format!("no closed-form bounds for {other}"))),
    }
}

/// Compares the largest per-node queue and the largest packet delay of
/// `trace` with the bounds. Undelivered packets count with their age at the
/// horizon.
pub fn check_bounds(trace: &ExecutionTrace, policy: Policy, p: BoundParams) -> Result<BoundReport> {
    let bounds = bounds_for(policy, p)?;
    let max_queue = trace.max_queue() as u64;
    let max_delay = trace.max_delay();
    let le = |n: u64, x: &BigRational| big(n as i64) <= *x;
    Ok(BoundReport {
        policy,
        params: p,
        queue_pass: le(max_queue, &bounds.queue),
        delay_pass: le(max_delay, &bounds.delay),
        queue_bound: bounds.queue,
        delay_bound: bounds.delay,
        observed_max_queue: max_queue,
        observed_max_delay: max_delay,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::big_ratio;

    fn params(b: u64, r: (u64, u64), h: u64, d: u64) -> BoundParams {
        BoundParams { b, r: Rate::new(r.0, r.1).unwrap(), h, d }
    }

    #[test]
    fn k_sequence_direct_evaluation() {
        let ks = sis_k_sequence(params(1, (1, 4), 2, 3)).unwrap();
        assert_eq!(ks, vec![big(1), big(4), big(10)]);
    }

    #[test]
    fn k_sequence_without_rate_is_linear() {
        let ks = sis_k_sequence(params(3, (0, 1), 5, 4)).unwrap();
        assert_eq!(ks, (1..=4).map(|i| big(3 * i)).collect::<Vec<_>>());
    }

    #[test]
    fn sis_domain_edge() {
        assert!(sis_k_sequence(params(1, (1, 2), 2, 2)).is_err());
        let near = sis_k_sequence(params(1, (99, 200), 2, 2)).unwrap();
        // 1 - rh = 1/100
        assert_eq!(near[1], big(200));
    }

    #[test]
    fn sis_bounds_example() {
        let b = sis_bounds(params(1, (1, 4), 2, 2)).unwrap();
        assert_eq!(b.queue, big(4));
        assert_eq!(b.delay, big(28));
        let single = sis_bounds(params(2, (1, 10), 3, 1)).unwrap();
        // ((b + b)/(1 - rh))·h = 4/(7/10)·3
        assert_eq!(single.delay, big_ratio(120, 7));
        assert_eq!(sis_bounds(params(2, (0, 1), 1, 5)).unwrap().queue, big(10));
    }

    #[test]
    fn lis_bounds_example() {
        let b = lis_bounds(params(2, (1, 10), 2, 3)).unwrap();
        assert_eq!(b.delay, big_ratio(47, 5));
        assert_eq!(b.queue, big_ratio(147, 50));
        assert_eq!(b.queue_packets(), 2.into());
        assert_eq!(lis_bounds(params(3, (1, 5), 4, 1)).unwrap().delay, big(1));
        assert_eq!(lis_bounds(params(3, (0, 1), 4, 6)).unwrap().queue, big(3));
        assert!(lis_bounds(params(1, (1, 2), 3, 2)).is_err());
    }

    #[test]
    fn transit_bound_cases() {
        assert_eq!(lis_transit_bound(7, params(2, (1, 3), 3, 1)), big(0));
        assert_eq!(lis_transit_bound(7, params(2, (0, 1), 3, 4)), big(18));
        let p = params(2, (1, 10), 2, 3);
        let a = lis_fixed_point(p);
        assert_eq!(lis_transit_bound_at(&a, p) + big(1), a);
    }
}
