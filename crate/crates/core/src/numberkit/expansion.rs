use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::precise::{ceil_exp, rational_to_f64, PreciseReal};
use super::tower::Tower;
use super::NumberError;

/// Why an expansion stopped where it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Requested depth reached.
    Complete,
    /// The bracket around `x` no longer pins down the next quotient.
    PrecisionExhausted,
    /// Exact remainder zero: the input is rational.
    Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CfSource {
    Real(PreciseReal),
    Rule(QuotientRule),
}

/// A level beyond the exact integer budget, carried in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLevel {
    pub ln_a: Tower,
    pub ln_q: Tower,
    /// `ln a_n / q_{n-1}`, kept exactly: once `q_{n-1}` is a tower the
    /// constant factor is below the resolution of `ln_a`.
    pub ln_a_per_q: f64,
}

/// Continued-fraction data `alpha = [0; a_1, a_2, ...]`.
///
/// `quotients[k]` is `a_{k+1}` and `convergents[k]` is `(p_{k+1}, q_{k+1})`.
/// Levels past the integer budget (Liouville constructions) live in
/// `extension` as logarithms only.
#[derive(Debug, Clone, PartialEq)]
pub struct CfExpansion {
    pub quotients: Vec<BigUint>,
    pub convergents: Vec<(BigUint, BigUint)>,
    pub extension: Vec<LogLevel>,
    pub source: CfSource,
    pub termination: Termination,
}

impl CfExpansion {
    /// Total number of levels, exact and logarithmic.
    pub fn depth(&self) -> usize {
        self.convergents.len() + self.extension.len()
    }

    pub fn exact_depth(&self) -> usize {
        self.convergents.len()
    }

    /// `q_n` for `0 <= n <= exact_depth`, with `q_0 = 1`.
    pub fn q(&self, n: usize) -> Option<&BigUint> {
        static ONE: std::sync::OnceLock<BigUint> = std::sync::OnceLock::new();
        if n == 0 {
            Some(ONE.get_or_init(BigUint::one))
        } else {
            self.convergents.get(n - 1).map(|c| &c.1)
        }
    }

    pub fn p(&self, n: usize) -> Option<BigUint> {
        if n == 0 {
            Some(BigUint::zero())
        } else {
            self.convergents.get(n - 1).map(|c| c.0.clone())
        }
    }

    /// `q_n` as a machine integer when it fits.
    pub fn q_u64(&self, n: usize) -> Option<u64> {
        self.q(n).and_then(|q| q.to_u64())
    }

    /// All exact denominators `q_1..` that fit in `u64`.
    pub fn denominators_u64(&self) -> Vec<u64> {
        self.convergents.iter().map_while(|c| c.1.to_u64()).collect()
    }

    /// `ln q_n` for `1 <= n <= depth()`.
    pub fn ln_q(&self, n: usize) -> Option<Tower> {
        if n == 0 {
            return Some(Tower::from_f64(0.0));
        }
        if n <= self.convergents.len() {
            Some(Tower::from_f64(Tower::ln_biguint(&self.convergents[n - 1].1)))
        } else {
            self.extension.get(n - 1 - self.convergents.len()).map(|l| l.ln_q)
        }
    }

    /// Deepest exact convergent `p_N / q_N`.
    pub fn deepest_convergent(&self) -> BigRational {
        match self.convergents.last() {
            Some((p, q)) => BigRational::new(BigInt::from(p.clone()), BigInt::from(q.clone())),
            None => BigRational::zero(),
        }
    }

    /// Best available rational value of alpha: the source bracket midpoint
    /// for real inputs, the deepest convergent for rules.
    pub fn alpha_rational(&self) -> BigRational {
        match &self.source {
            CfSource::Real(x) => x.midpoint(),
            CfSource::Rule(_) => self.deepest_convergent(),
        }
    }

    pub fn alpha_f64(&self) -> f64 {
        rational_to_f64(&self.alpha_rational())
    }

    /// `|q_n alpha - p_n|`, evaluated in exact rational arithmetic, which is
    /// `||q_n alpha||` for `n >= 1`.
    pub fn distance_at_level(&self, n: usize) -> Option<f64> {
        let (p, q) = self.convergents.get(n.checked_sub(1)?)?;
        let a = self.alpha_rational();
        let v = &a * BigRational::from_integer(BigInt::from(q.clone()))
            - BigRational::from_integer(BigInt::from(p.clone()));
        Some(rational_to_f64(&v).abs())
    }
}

fn push_level(quotients: &mut Vec<BigUint>, convergents: &mut Vec<(BigUint, BigUint)>, a: BigUint) {
    let n = convergents.len();
    let (p_prev, q_prev) = if n == 0 {
        (BigUint::zero(), BigUint::one())
    } else {
        convergents[n - 1].clone()
    };
    let (p_prev2, q_prev2) = match n {
        0 => (BigUint::one(), BigUint::zero()),
        1 => (BigUint::zero(), BigUint::one()),
        _ => convergents[n - 2].clone(),
    };
    let p = &a * &p_prev + p_prev2;
    let q = &a * &q_prev + q_prev2;
    quotients.push(a);
    convergents.push((p, q));
}

/// Continued-fraction expansion of a bracketed real in (0, 1).
///
/// Quotients are emitted while both bracket endpoints agree on them; an
/// exact remainder of zero marks the input rational.
pub fn cf_expand(x: &PreciseReal, depth: usize) -> Result<CfExpansion, NumberError> {
    let zero = BigRational::zero();
    let one = BigRational::one();
    if x.lo <= zero || x.hi >= one {
        return Err(NumberError::Domain(format!("{:.6}", x.to_f64())));
    }
    if depth == 0 {
        return Err(NumberError::TooShallow { needed: 1, have: 0 });
    }
    let mut quotients = Vec::new();
    let mut convergents = Vec::new();
    let (mut lo, mut hi) = (x.lo.clone(), x.hi.clone());
    let mut termination = Termination::Complete;
    while quotients.len() < depth {
        if lo.is_zero() && hi.is_zero() {
            termination = Termination::Rational;
            break;
        }
        if lo <= zero {
            termination = Termination::PrecisionExhausted;
            break;
        }
        // 1/x is decreasing: 1/hi <= 1/x <= 1/lo
        let inv_lo = lo.recip();
        let inv_hi = hi.recip();
        let a_hi = inv_lo.floor();
        let a_lo = inv_hi.floor();
        if a_hi != a_lo {
            termination = Termination::PrecisionExhausted;
            break;
        }
        let a = a_lo.to_integer();
        let a_rat = BigRational::from_integer(a.clone());
        let (new_lo, new_hi) = (&inv_hi - &a_rat, &inv_lo - &a_rat);
        lo = new_lo;
        hi = new_hi;
        push_level(&mut quotients, &mut convergents, a.to_biguint().expect("positive quotient"));
    }
    if quotients.is_empty() {
        return Err(NumberError::PrecisionExhausted);
    }
    Ok(CfExpansion {
        quotients,
        convergents,
        extension: Vec::new(),
        source: CfSource::Real(x.clone()),
        termination,
    })
}

/// Generators for partial quotients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QuotientRule {
    /// `a_n = k` for all `n`.
    Constant(u64),
    /// `a_n` cycles through the list.
    Periodic(Vec<u64>),
    /// Explicit finite list.
    Explicit(Vec<u64>),
    /// `a_1 = first`, `a_{n+1} = ceil(exp(rate * q_n))`; gives `beta = rate`.
    ExpOfDenominator { first: u64, rate: f64 },
}

impl QuotientRule {
    /// Parses `const=K`, `cycle=K1,K2,..`, `list=K1,..`, `exp=RATE[,FIRST]`.
    pub fn parse(text: &str) -> Result<Self, NumberError> {
        let bad = || NumberError::Parse(text.to_string());
        let (kind, arg) = text.split_once('=').ok_or_else(bad)?;
        let ints = |s: &str| -> Result<Vec<u64>, NumberError> {
            let v: Result<Vec<u64>, _> = s.split(',').map(|t| t.trim().parse::<u64>()).collect();
            let v = v.map_err(|_| bad())?;
            if v.is_empty() || v.contains(&0) {
                return Err(bad());
            }
            Ok(v)
        };
        match kind.trim() {
            "const" => Ok(QuotientRule::Constant(ints(arg)?[0])),
            "cycle" => Ok(QuotientRule::Periodic(ints(arg)?)),
            "list" => Ok(QuotientRule::Explicit(ints(arg)?)),
            "exp" => {
                let mut parts = arg.split(',');
                let rate: f64 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
                let first = match parts.next() {
                    Some(s) => s.trim().parse::<u64>().map_err(|_| bad())?,
                    None => 1,
                };
                if !(rate > 0.0) || first == 0 {
                    return Err(bad());
                }
                Ok(QuotientRule::ExpOfDenominator { first, rate })
            }
            _ => Err(bad()),
        }
    }
}

/// Default cap on the bit length of exact denominators.
pub const DEFAULT_BIT_BUDGET: u64 = 1 << 16;

/// Builds a frequency from a quotient rule.
///
/// Levels whose denominator would exceed `bit_budget` bits are continued in
/// log form when the rule allows it (the exponential rule); otherwise the
/// call fails with `Overflow`.
pub fn alpha_from_quotients(
    rule: &QuotientRule,
    depth: usize,
    bit_budget: u64,
) -> Result<(CfExpansion, f64), NumberError> {
    if depth == 0 {
        return Err(NumberError::TooShallow { needed: 1, have: 0 });
    }
    let mut quotients = Vec::new();
    let mut convergents: Vec<(BigUint, BigUint)> = Vec::new();
    let mut extension: Vec<LogLevel> = Vec::new();
    for n in 1..=depth {
        if !extension.is_empty() {
            let QuotientRule::ExpOfDenominator { rate, .. } = rule else { unreachable!() };
            // ln a_{n} = rate * q_{n-1};  ln q_n = ln a_n + ln q_{n-1}
            let prev_ln_q = extension.last().unwrap().ln_q;
            let ln_a = prev_ln_q.exp().scale(*rate);
            extension.push(LogLevel { ln_a, ln_q: ln_a.add(prev_ln_q), ln_a_per_q: *rate });
            continue;
        }
        let a: BigUint = match rule {
            QuotientRule::Constant(k) => BigUint::from(*k),
            QuotientRule::Periodic(v) => BigUint::from(v[(n - 1) % v.len()]),
            QuotientRule::Explicit(v) => match v.get(n - 1) {
                Some(k) => BigUint::from(*k),
                None => break,
            },
            QuotientRule::ExpOfDenominator { first, rate } => {
                if n == 1 {
                    BigUint::from(*first)
                } else {
                    let q_prev = &convergents[n - 2].1;
                    let est_bits = rate * q_prev.to_f64().unwrap_or(f64::INFINITY) / std::f64::consts::LN_2
                        + q_prev.bits() as f64;
                    if est_bits > bit_budget as f64 {
                        let ln_q_prev = Tower::from_biguint(q_prev).ln();
                        let ln_a = Tower::from_biguint(q_prev).scale(*rate);
                        extension.push(LogLevel { ln_a, ln_q: ln_a.add(ln_q_prev), ln_a_per_q: *rate });
                        continue;
                    }
                    let x = BigRational::from_float(*rate).expect("finite rate")
                        * BigRational::from_integer(BigInt::from(q_prev.clone()));
                    ceil_exp(&x)
                }
            }
        };
        push_level(&mut quotients, &mut convergents, a);
        if convergents.last().unwrap().1.bits() > bit_budget {
            return Err(NumberError::Overflow { level: n, cap_bits: bit_budget });
        }
    }
    let exp = CfExpansion {
        quotients,
        convergents,
        extension,
        source: CfSource::Rule(rule.clone()),
        termination: Termination::Complete,
    };
    let value = exp.alpha_f64();
    Ok((exp, value))
}

/// Finite-depth evidence for `beta(alpha) = limsup ln q_{n+1} / q_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    /// `(n, ln q_{n+1} / q_n)` for `n = 1..depth-1`.
    pub levels: Vec<(usize, f64)>,
    /// `running_sup_tail[k] = sup_{j >= k} levels[j]`.
    pub running_sup_tail: Vec<f64>,
    /// Sup over the last `ceil(N/2)` levels.
    pub verdict_at_depth: f64,
}

pub fn beta_estimate(cf: &CfExpansion) -> Result<BetaEstimate, NumberError> {
    if cf.termination == Termination::Rational {
        return Err(NumberError::RationalInput);
    }
    let depth = cf.depth();
    if depth < 2 {
        return Err(NumberError::TooShallow { needed: 2, have: depth });
    }
    let mut levels = Vec::with_capacity(depth - 1);
    for n in 1..depth {
        let ln_q_n = cf.ln_q(n).unwrap();
        let q_n = ln_q_n.exp();
        let level = match n.checked_sub(cf.convergents.len()).and_then(|k| cf.extension.get(k)) {
            // ln q_{n+1} = ln a_{n+1} + ln q_n + ln(1 + q_{n-1} / (a_{n+1} q_n)); the last term is negligible
            Some(ext) => ext.ln_a_per_q + ln_q_n.ratio(q_n),
            None => cf.ln_q(n + 1).unwrap().ratio(q_n),
        };
        levels.push((n, level));
    }
    let mut running = vec![0.0; levels.len()];
    let mut acc = f64::NEG_INFINITY;
    for k in (0..levels.len()).rev() {
        acc = acc.max(levels[k].1);
        running[k] = acc;
    }
    let tail = levels.len().div_ceil(2);
    let verdict = running[levels.len() - tail];
    Ok(BetaEstimate { levels, running_sup_tail: running, verdict_at_depth: verdict })
}

/// `||k alpha||`, distance to the nearest integer, using an error-free
/// product so that large `k` keeps full double accuracy.
pub fn rotation_distance(k: i64, alpha: f64) -> Result<f64, NumberError> {
    if k == 0 {
        return Err(NumberError::ZeroMultiple);
    }
    Ok(circle_norm(mul_frac(k as f64, alpha)))
}

/// `||k alpha||` for a big multiple and an exact rational alpha.
pub fn rotation_distance_exact(k: &BigInt, alpha: &BigRational) -> Result<f64, NumberError> {
    if k.is_zero() {
        return Err(NumberError::ZeroMultiple);
    }
    let x = alpha * BigRational::from_integer(k.clone());
    let f = &x - x.round();
    Ok(rational_to_f64(&f).abs())
}

/// Fractional part of `k * alpha` in [0, 1), accurate to ~1 ulp even for
/// `|k|` up to 2^53.
pub fn mul_frac(k: f64, alpha: f64) -> f64 {
    let p = k * alpha;
    let err = k.mul_add(alpha, -p);
    let f = (p - p.floor()) + err;
    f - f.floor()
}

/// Distance from `x` to the nearest integer.
pub fn circle_norm(x: f64) -> f64 {
    let f = x - x.round();
    f.abs()
}

/// Frequencies by name, as accepted on the command line.
#[derive(Debug, Clone)]
pub struct Frequency {
    pub expansion: CfExpansion,
    pub value: f64,
    pub label: String,
}

impl Frequency {
    /// `golden`, `sqrt2m1`, a decimal in (0,1), or `rule:<rule>`.
    pub fn parse(spec: &str, depth: usize, bits: u32) -> Result<Self, NumberError> {
        let s = spec.trim();
        let expansion = if let Some(r) = s.strip_prefix("rule:") {
            let rule = QuotientRule::parse(r)?;
            alpha_from_quotients(&rule, depth, DEFAULT_BIT_BUDGET)?.0
        } else {
            let x = match s {
                "golden" => PreciseReal::golden(bits),
                "sqrt2m1" => PreciseReal::sqrt2_minus_1(bits),
                other => PreciseReal::parse_decimal(other)?,
            };
            cf_expand(&x, depth)?
        };
        let value = expansion.alpha_f64();
        Ok(Frequency { expansion, value, label: s.to_string() })
    }

    pub fn golden(depth: usize) -> Self {
        Self::parse("golden", depth, 1024).expect("golden expansion")
    }

    /// Exact denominators fitting in `u64`.
    pub fn denominators(&self) -> Vec<u64> {
        self.expansion.denominators_u64()
    }

    pub fn is_denominator(&self, q: u64) -> bool {
        self.denominators().contains(&q)
    }
}
