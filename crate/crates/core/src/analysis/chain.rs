//! Checkers for the Besov regularity chain
//!
//! ```text
//! ‖f‖^p_{Ḃ^{2α/p,p}_p} ≤ C ‖f^{p/2}‖²_{Ḃ^{α,2}_2} ≤ C′ ∫ |f|^{p-2} f Λ^{2α} f
//! ```
//!
//! and for the elementary inequality `|a^ε - b^ε| ≤ |a - b|^ε`.

use serde::Serialize;

use super::norms::{
    besov_seminorm_pow, dissipation_functional, pairing_with_power, sobolev_alpha_energy,
};
use crate::error::{Error, Result};
use crate::spectral::{fractional_laplacian, Field};

/// Values of one chain evaluation on a nonnegative field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChainValues {
    /// `‖f‖^p` in the difference-quotient `Ḃ^{2α/p,p}_p` seminorm.
    pub besov_p: f64,
    /// `‖f^{p/2}‖²` in the difference-quotient `Ḃ^{α,2}_2` seminorm.
    pub middle_difference: f64,
    /// `‖Λ^α f^{p/2}‖₂²`, the spectral form of the middle term.
    pub middle_spectral: f64,
    /// `∫ |f|^{p-2} f Λ^{2α} f`.
    pub dissipation: f64,
    /// `besov_p / middle_difference`.
    pub c: f64,
    /// `middle_spectral / dissipation`.
    pub c_prime: f64,
}

impl ChainValues {
    fn evaluate(f: &Field, p: f64, alpha: f64) -> Result<Self> {
        let s = 2.0 * alpha / p;
        let besov_p = besov_seminorm_pow(f, s, p)?;
        let g = f.map(|x| x.abs().powf(0.5 * p));
        let middle_difference = besov_seminorm_pow(&g, alpha, 2.0)?;
        let middle_spectral = sobolev_alpha_energy(&g, alpha)?;
        let dissipation = dissipation_functional(f, p, alpha)?;
        Ok(Self {
            besov_p,
            middle_difference,
            middle_spectral,
            dissipation,
            c: ratio(besov_p, middle_difference),
            c_prime: ratio(middle_spectral, dissipation),
        })
    }

    /// True when either empirical constant is infinite (or negative).
    pub fn violated(&self) -> bool {
        !(self.c.is_finite() && self.c_prime.is_finite() && self.c >= 0.0 && self.c_prime >= 0.0)
    }
}

/// `a / b`, with `0 / 0 = 0` and `x / 0 = ∞` for `x > 0`.
fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b <= 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainReport {
    pub p: f64,
    pub alpha: f64,
    /// Whether the field is pointwise nonnegative.
    pub nonnegative: bool,
    /// The chain for the field itself (paper form when `nonnegative`).
    pub whole: ChainValues,
    /// Chains of `f₊ = max(f, 0)` and `f₋ = max(-f, 0)`.
    pub positive_part: ChainValues,
    pub negative_part: ChainValues,
    /// `∫ f₊^{p-1} Λ^{2α} f₋`.
    pub cross_plus_minus: f64,
    /// `∫ f₋^{p-1} Λ^{2α} f₊`.
    pub cross_minus_plus: f64,
    pub violation: bool,
}

impl ChainReport {
    /// Largest cross term; the split argument needs it to be `<= 0`.
    pub fn max_cross(&self) -> f64 {
        self.cross_plus_minus.max(self.cross_minus_plus)
    }
}

pub fn check_besov_chain(f: &Field, p: f64, alpha: f64) -> Result<ChainReport> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::Parameter(format!(
            "alpha must lie in (0, 0.5], got {alpha}"
        )));
    }
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::Parameter(format!(
            "the chain needs 2 <= p < ∞, got {p}"
        )));
    }
    let f = f.to_physical();
    let plus = f.map(|x| x.max(0.0));
    let minus = f.map(|x| (-x).max(0.0));
    let whole = ChainValues::evaluate(&f, p, alpha)?;
    let positive_part = ChainValues::evaluate(&plus, p, alpha)?;
    let negative_part = ChainValues::evaluate(&minus, p, alpha)?;
    let lam_plus = fractional_laplacian(&plus, 2.0 * alpha)?;
    let lam_minus = fractional_laplacian(&minus, 2.0 * alpha)?;
    let cross_plus_minus = pairing_with_power(&plus, &lam_minus, p)?;
    let cross_minus_plus = pairing_with_power(&minus, &lam_plus, p)?;
    let nonnegative = f.values().iter().all(|&x| x >= 0.0);
    let violation = whole.violated() || positive_part.violated() || negative_part.violated();
    Ok(ChainReport {
        p,
        alpha,
        nonnegative,
        whole,
        positive_part,
        negative_part,
        cross_plus_minus,
        cross_minus_plus,
        violation,
    })
}

/// True iff `|a^ε - b^ε| <= |a - b|^ε` holds for every sample `(a, b, ε)`,
/// allowing a few ulps of rounding in the evaluation.
pub fn check_distance_power_lemma(samples: &[(f64, f64, f64)]) -> bool {
    distance_power_violations(samples).is_empty()
}

/// Indices of samples that violate the inequality or its preconditions.
pub fn distance_power_violations(samples: &[(f64, f64, f64)]) -> Vec<usize> {
    samples
        .iter()
        .enumerate()
        .filter(|(_, &(a, b, e))| {
            if !(a > 0.0 && b > 0.0 && e > 0.0 && e <= 1.0) {
                return true;
            }
            let (pa, pb) = (a.powf(e), b.powf(e));
            let lhs = (pa - pb).abs();
            let rhs = (a - b).abs().powf(e);
            let slack = 4.0 * f64::EPSILON * (pa.max(pb) + rhs);
            lhs > rhs + slack
        })
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_gives_zero_chain() {
        let g = Grid::square(16, 2.0 * PI).unwrap();
        let r = check_besov_chain(&Field::constant(g, 2.0), 4.0, 0.25).unwrap();
        assert_eq!(r.whole.besov_p, 0.0);
        assert!(r.whole.middle_spectral.abs() < 1e-20);
        assert!(r.whole.dissipation.abs() < 1e-12);
        assert!(!r.violation);
    }

    #[test]
    fn nonnegative_smooth_field_orders_chain() {
        let g = Grid::square(32, 2.0 * PI).unwrap();
        let f = Field::from_fn(g, |x| 1.2 + x[0].sin() * (2.0 * x[1]).cos());
        let r = check_besov_chain(&f, 4.0, 0.25).unwrap();
        assert!(r.nonnegative);
        assert!(!r.violation);
        assert!(r.whole.c <= 1.0);
        assert!(r.whole.c_prime <= 2.0);
    }

    #[test]
    fn sign_split_cross_terms_are_nonpositive() {
        let g = Grid::square(32, 2.0 * PI).unwrap();
        let f = Field::from_fn(g, |x| x[0].sin() + 0.5 * (x[0] + x[1]).cos());
        let r = check_besov_chain(&f, 4.0, 0.25).unwrap();
        assert!(!r.nonnegative);
        assert!(r.max_cross() <= 0.0);
        let split = r.positive_part.dissipation + r.negative_part.dissipation
            - r.cross_plus_minus
            - r.cross_minus_plus;
        assert!((split - r.whole.dissipation).abs() < 1e-10 * r.whole.dissipation.abs());
    }

    #[test]
    fn lemma_examples() {
        assert!(check_distance_power_lemma(&[(4.0, 1.0, 0.5)]));
        assert!(check_distance_power_lemma(&[(2.5, 2.5, 0.3)]));
        assert!(!check_distance_power_lemma(&[(4.0, 1.0, 1.5)]));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let samples: Vec<_> = (0..10_000)
            .map(|_| {
                let a = 10f64.powf(rng.gen_range(-6.0..6.0));
                let b = 10f64.powf(rng.gen_range(-6.0..6.0));
                (a, b, rng.gen_range(1e-3..=1.0))
            })
            .collect();
        assert!(check_distance_power_lemma(&samples));
    }
}
