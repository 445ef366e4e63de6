//! Separable divergences `D_P(Q) = sum_i term(q_i, p_i)` used as the
//! adversary constraint, plus the transfer operator `t(X, a, b)`.
//!
//! Every supported kind is a separable Bregman divergence, which makes it
//! both 2-symmetric and receding. KL is measured in bits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{check_len, Pmf, SUM_TOLERANCE};

/// Strictly convex scalar generator `f` of a separable Bregman divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// `x^2`
    Square,
    /// `x ln x` (yields KL in nats)
    NegEntropy,
    /// `e^x`
    Exp,
    /// `x^a`
    Power(f64),
}

impl Generator {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Generator::Square => x * x,
            Generator::NegEntropy => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.ln()
                }
            }
            Generator::Exp => x.exp(),
            Generator::Power(a) => x.powf(a),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Generator::Square => 2.0 * x,
            Generator::NegEntropy => x.ln() + 1.0,
            Generator::Exp => x.exp(),
            Generator::Power(a) => a * x.powf(a - 1.0),
        }
    }

    /// Second difference test on a 1e-3 grid over [0, 1].
    pub fn is_strictly_convex(&self) -> bool {
        let h = 1e-3;
        (1..1000).all(|i| {
            let x = i as f64 * h;
            self.value(x - h) + self.value(x + h) - 2.0 * self.value(x) > 0.0
        })
    }

    fn name(&self) -> String {
        match self {
            Generator::Square => "square".into(),
            Generator::NegEntropy => "xlogx".into(),
            Generator::Exp => "exp".into(),
            Generator::Power(a) => format!("pow{a}"),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "square" => Some(Generator::Square),
            "xlogx" | "negentropy" => Some(Generator::NegEntropy),
            "exp" => Some(Generator::Exp),
            _ => s
                .strip_prefix("pow")
                .and_then(|a| a.parse::<f64>().ok())
                .filter(|a| a.is_finite())
                .map(Generator::Power),
        }
    }
}

/// Constraint divergence. Config names: `kl2`, `sqeuclid`, `bregman:<generator>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceKind {
    Kl2,
    SquaredEuclidean,
    SeparableBregman(Generator),
}

impl DivergenceKind {
    /// Builds a Bregman kind after checking the generator's strict convexity.
    pub fn bregman(generator: Generator) -> Result<Self> {
        if generator.is_strictly_convex() {
            Ok(DivergenceKind::SeparableBregman(generator))
        } else {
            Err(Error::NotStrictlyConvex(generator.name()))
        }
    }

    /// Contribution of one coordinate, `x` under the candidate and `p > 0`
    /// under the target.
    #[inline]
    pub fn term(&self, x: f64, p: f64) -> f64 {
        match self {
            DivergenceKind::Kl2 => {
                if x == 0.0 {
                    0.0
                } else {
                    x * (x / p).log2()
                }
            }
            DivergenceKind::SquaredEuclidean => {
                let d = x - p;
                d * d
            }
            DivergenceKind::SeparableBregman(f) => {
                f.value(x) - f.value(p) - f.derivative(p) * (x - p)
            }
        }
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivergenceKind::Kl2 => f.write_str("kl2"),
            DivergenceKind::SquaredEuclidean => f.write_str("sqeuclid"),
            DivergenceKind::SeparableBregman(g) => write!(f, "bregman:{}", g.name()),
        }
    }
}

impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kl2" => Ok(DivergenceKind::Kl2),
            "sqeuclid" => Ok(DivergenceKind::SquaredEuclidean),
            _ => {
                let g = s
                    .strip_prefix("bregman:")
                    .and_then(Generator::parse)
                    .ok_or_else(|| Error::UnknownDivergence(s.to_string()))?;
                DivergenceKind::bregman(g)
            }
        }
    }
}

impl Serialize for DivergenceKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DivergenceKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Moves all mass of event `from` onto event `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransferSpec {
    pub from: usize,
    pub to: usize,
}

impl TransferSpec {
    pub fn new(from: usize, to: usize) -> Result<Self> {
        if from == to {
            return Err(Error::InvalidParameter(
                "transfer endpoints must differ".into(),
            ));
        }
        Ok(Self { from, to })
    }
}

/// `t(X, a, b)`: transfers the probability of event `b` to event `a`.
pub fn transfer(x: &[f64], to: usize, from: usize) -> Vec<f64> {
    let mut out = x.to_vec();
    out[to] = x[to] + x[from];
    out[from] = 0.0;
    out
}

pub(crate) fn check_simplex(q: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for (i, &x) in q.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::OffSimplex(format!("entry {i} is {x}")));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::OffSimplex(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// `D_P(Q)`; `q` indexes the surviving events of `p`.
pub fn evaluate(kind: &DivergenceKind, q: &[f64], p: &Pmf) -> Result<f64> {
    check_len(p.len(), q.len())?;
    check_simplex(q)?;
    Ok(evaluate_unchecked(kind, q, p.probs()))
}

#[inline]
pub(crate) fn evaluate_unchecked(kind: &DivergenceKind, q: &[f64], p: &[f64]) -> f64 {
    q.iter().zip(p).map(|(&x, &pi)| kind.term(x, pi)).sum()
}

/// Divergence of the point mass `X^(j)`.
pub fn point_mass_divergence(kind: &DivergenceKind, j: usize, p: &Pmf) -> Result<f64> {
    if j >= p.len() {
        return Err(Error::IndexOutOfRange {
            index: j,
            n: p.len(),
        });
    }
    Ok(SupportTerms::new(kind, p.probs()).point_mass(j))
}

/// Applies `t(q, to, from)` and reports the divergence of the result.
pub fn check_transfer_feasibility(
    kind: &DivergenceKind,
    p: &Pmf,
    q: &[f64],
    spec: TransferSpec,
) -> Result<(Vec<f64>, f64)> {
    check_len(p.len(), q.len())?;
    check_simplex(q)?;
    for index in [spec.from, spec.to] {
        if index >= q.len() {
            return Err(Error::IndexOutOfRange { index, n: q.len() });
        }
    }
    let moved = transfer(q, spec.to, spec.from);
    let value = evaluate_unchecked(kind, &moved, p.probs());
    Ok((moved, value))
}

/// Precomputed zero-mass terms for divergences of sparse distributions.
#[derive(Debug, Clone)]
pub(crate) struct SupportTerms<'a> {
    kind: DivergenceKind,
    p: &'a [f64],
    zero: Vec<f64>,
    zero_total: f64,
}

impl<'a> SupportTerms<'a> {
    pub fn new(kind: &DivergenceKind, p: &'a [f64]) -> Self {
        let zero: Vec<f64> = p.iter().map(|&pi| kind.term(0.0, pi)).collect();
        let zero_total = zero.iter().sum();
        Self {
            kind: *kind,
            p,
            zero,
            zero_total,
        }
    }

    pub fn point_mass(&self, j: usize) -> f64 {
        self.zero_total - self.zero[j] + self.kind.term(1.0, self.p[j])
    }

    /// Divergence of `q X^(j) + (1 - q) X^(k)`.
    pub fn two_point(&self, j: usize, k: usize, q: f64) -> f64 {
        self.zero_total - self.zero[j] - self.zero[k]
            + self.kind.term(q, self.p[j])
            + self.kind.term(1.0 - q, self.p[k])
    }
}
