use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{invalid, Result};

/// Index of a GP variable.
pub type VarId = usize;

/// Floor applied to AM-GM weights before renormalization.
pub const GAMMA_FLOOR: f64 = 1e-12;

/// `c ∏ x_i^{a_i}` with `c > 0`, stored by `ln c` so that condensed
/// monomials with extreme coefficients stay representable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Monomial {
    pub log_coeff: f64,
    pub exps: BTreeMap<VarId, f64>,
}

impl Monomial {
    pub fn new(coeff: f64) -> Result<Self> {
        if !(coeff > 0.0 && coeff.is_finite()) {
            return Err(invalid(format!("monomial coefficient must be positive, got {coeff}")));
        }
        Ok(Self::from_log(coeff.ln()))
    }

    pub fn from_log(log_coeff: f64) -> Self {
        Self {
            log_coeff,
            exps: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::from_log(0.0)
    }

    /// Multiplies by `x_var^exp`.
    pub fn pow(mut self, var: VarId, exp: f64) -> Self {
        if exp != 0.0 {
            let e = self.exps.entry(var).or_insert(0.0);
            *e += exp;
            if *e == 0.0 {
                self.exps.remove(&var);
            }
        }
        self
    }

    pub fn var(var: VarId) -> Self {
        Self::one().pow(var, 1.0)
    }

    pub fn coeff(&self) -> f64 {
        self.log_coeff.exp()
    }

    pub fn scale(mut self, c: f64) -> Self {
        self.log_coeff += c.ln();
        self
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.clone();
        out.log_coeff += other.log_coeff;
        for (&v, &e) in &other.exps {
            out = out.pow(v, e);
        }
        out
    }

    pub fn powf(&self, p: f64) -> Monomial {
        Monomial {
            log_coeff: self.log_coeff * p,
            exps: self.exps.iter().map(|(&v, &e)| (v, e * p)).collect(),
        }
    }

    pub fn inv(&self) -> Monomial {
        self.powf(-1.0)
    }

    pub fn max_var(&self) -> Option<VarId> {
        self.exps.keys().next_back().copied()
    }

    /// `ln m(e^u)`.
    pub fn log_eval(&self, u: &[f64]) -> f64 {
        self.log_coeff + self.exps.iter().map(|(&v, &e)| e * u[v]).sum::<f64>()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut log = self.log_coeff;
        for (&v, &e) in &self.exps {
            log += e * x[v].ln();
        }
        log.exp()
    }
}

/// Non-empty sum of monomials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Posynomial {
    terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn new(terms: Vec<Monomial>) -> Result<Self> {
        if terms.is_empty() {
            return Err(invalid("posynomial needs at least one term"));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: Monomial) {
        self.terms.push(term);
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Posynomial {
        Posynomial {
            terms: self.terms.iter().map(|t| t.mul(m)).collect(),
        }
    }

    /// Merges terms with identical exponent vectors.
    pub fn simplified(&self) -> Posynomial {
        let mut merged: BTreeMap<Vec<(VarId, u64)>, (Monomial, f64)> = BTreeMap::new();
        for t in &self.terms {
            let key: Vec<_> = t.exps.iter().map(|(&v, &e)| (v, e.to_bits())).collect();
            match merged.get_mut(&key) {
                Some((_, log_sum)) => *log_sum = log_add(*log_sum, t.log_coeff),
                None => {
                    merged.insert(key, (t.clone(), t.log_coeff));
                }
            }
        }
        Posynomial {
            terms: merged
                .into_values()
                .map(|(mut m, l)| {
                    m.log_coeff = l;
                    m
                })
                .collect(),
        }
    }

    pub fn log_eval(&self, u: &[f64]) -> f64 {
        log_sum_exp(self.terms.iter().map(|t| t.log_eval(u)))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn max_var(&self) -> Option<VarId> {
        self.terms.iter().filter_map(Monomial::max_var).max()
    }
}

impl From<Monomial> for Posynomial {
    fn from(m: Monomial) -> Self {
        Posynomial { terms: vec![m] }
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn check_positive(x: &[f64], needed: Option<VarId>) -> Result<()> {
    if let Some(v) = needed {
        if v >= x.len() {
            return Err(invalid(format!("point has {} coordinates, variable {v} referenced", x.len())));
        }
    }
    if let Some((i, xi)) = x.iter().enumerate().find(|(_, xi)| !(**xi > 0.0)) {
        return Err(invalid(format!("coordinate {i} is not positive ({xi})")));
    }
    Ok(())
}

/// Value of `p` at a strictly positive point.
pub fn evaluate(p: &Posynomial, x: &[f64]) -> Result<f64> {
    check_positive(x, p.max_var())?;
    Ok(p.eval(x))
}

/// Weighted AM-GM lower bound `∏_k (g_k / γ_k)^{γ_k}` of `p`, tight at
/// `x0`, with `γ_k = g_k(x0) / p(x0)`.
pub fn condense(p: &Posynomial, x0: &[f64]) -> Result<Monomial> {
    check_positive(x0, p.max_var())?;
    let u0: Vec<f64> = x0.iter().map(|x| x.ln()).collect();
    let logs: Vec<f64> = p.terms.iter().map(|t| t.log_eval(&u0)).collect();
    let total = log_sum_exp(logs.iter().copied());
    let mut gamma: Vec<f64> = logs.iter().map(|l| (l - total).exp().max(GAMMA_FLOOR)).collect();
    let norm: f64 = gamma.iter().sum();
    gamma.iter_mut().for_each(|g| *g /= norm);

    let mut out = Monomial::one();
    for (t, g) in p.terms.iter().zip(&gamma) {
        out.log_coeff += g * (t.log_coeff - g.ln());
        for (&v, &e) in &t.exps {
            out = out.pow(v, g * e);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x_plus_inv() -> Posynomial {
        Posynomial::new(vec![Monomial::var(0), Monomial::var(0).inv()]).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(evaluate(&x_plus_inv(), &[1.0]).unwrap(), 2.0);
        let c: Posynomial = Monomial::new(3.5).unwrap().into();
        assert!((evaluate(&c, &[0.2]).unwrap() - 3.5).abs() < 1e-15);
        assert!(evaluate(&x_plus_inv(), &[0.0]).is_err());
        assert!(evaluate(&x_plus_inv(), &[]).is_err());
        assert!(Monomial::new(0.0).is_err());
        assert!(Posynomial::new(vec![]).is_err());
    }

    #[test]
    fn three_term_matches_direct() {
        let p = Posynomial::new(vec![
            Monomial::new(2.0).unwrap().pow(0, 1.5).pow(1, -0.5),
            Monomial::new(0.3).unwrap().pow(1, 2.0),
            Monomial::new(7.0).unwrap().pow(0, -1.0).pow(2, 0.25),
        ])
        .unwrap();
        let x = [1.7, 0.4, 3.1];
        let direct = 2.0 * 1.7f64.powf(1.5) * 0.4f64.powf(-0.5)
            + 0.3 * 0.4f64.powi(2)
            + 7.0 / 1.7 * 3.1f64.powf(0.25);
        let v = evaluate(&p, &x).unwrap();
        assert!((v - direct).abs() / direct < 1e-14);
    }

    #[test]
    fn condensation_examples() {
        let m = condense(&x_plus_inv(), &[1.0]).unwrap();
        assert!((m.coeff() - 2.0).abs() < 1e-14);
        assert!(m.exps.is_empty());
        assert!(m.eval(&[4.0]) <= x_plus_inv().eval(&[4.0]));
    }

    #[test]
    fn gamma_floor_keeps_condensation_finite() {
        let p = Posynomial::new(vec![
            Monomial::var(0),
            Monomial::new(1e-300).unwrap().pow(0, -1.0),
        ])
        .unwrap();
        let m = condense(&p, &[1.0]).unwrap();
        assert!(m.log_coeff.is_finite());
        assert!((m.eval(&[1.0]) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn simplify_merges_like_terms() {
        let p = Posynomial::new(vec![
            Monomial::new(1.0).unwrap().pow(0, 2.0),
            Monomial::new(2.0).unwrap().pow(1, 1.0),
            Monomial::new(3.0).unwrap().pow(0, 2.0),
        ])
        .unwrap();
        let s = p.simplified();
        assert_eq!(s.len(), 2);
        let x = [0.7, 1.9];
        assert!((s.eval(&x) - p.eval(&x)).abs() < 1e-14);
    }

    fn arb_posynomial() -> impl Strategy<Value = Posynomial> {
        prop::collection::vec(
            (0.1f64..10.0, prop::collection::vec(-2.0f64..2.0, 3)),
            5,
        )
        .prop_map(|terms| {
            Posynomial::new(
                terms
                    .into_iter()
                    .map(|(c, e)| {
                        e.iter()
                            .enumerate()
                            .fold(Monomial::new(c).unwrap(), |m, (v, &a)| m.pow(v, a))
                    })
                    .collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn condensation_is_a_tight_lower_bound(
            p in arb_posynomial(),
            x0 in prop::collection::vec(0.05f64..20.0, 3),
            probes in prop::collection::vec(prop::collection::vec(0.05f64..20.0, 3), 100),
        ) {
            let m = condense(&p, &x0).unwrap();
            let at = p.eval(&x0);
            prop_assert!((m.eval(&x0) - at).abs() <= 1e-10 * at);
            for x in &probes {
                prop_assert!(m.eval(x) <= p.eval(x) * (1.0 + 1e-12));
            }
        }
    }
}
