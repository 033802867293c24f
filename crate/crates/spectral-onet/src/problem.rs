//! Problem definitions: coefficient families with certified bounds, problem
//! files for the CLI, and samplers for the coefficient test families used in
//! the studies.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::spectral::{CoefficientField, ScalarEval, SpectralError};

/// Random trigonometric coefficients `a = base + sum_k amplitudes * modes`
/// with the total amplitude drawn from `[amp_min, amp_max]`, so every sample
/// is certified to lie in `[base - amp_max, base + amp_max]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrigSampler {
    pub d: usize,
    pub base: f64,
    pub amp_min: f64,
    pub amp_max: f64,
    /// Highest frequency per axis.
    pub max_mode: i32,
}

impl TrigSampler {
    /// The family used throughout the studies: certified bounds [0.5, 1.5].
    pub fn unit_band(d: usize) -> Self {
        TrigSampler {
            d,
            base: 1.0,
            amp_min: 0.2,
            amp_max: 0.5,
            max_mode: 2,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.base - self.amp_max, self.base + self.amp_max)
    }

    /// Draw one coefficient with a certified expression form.
    pub fn sample(&self, rng: &mut impl Rng) -> CoefficientField {
        let (a_min, a_max) = self.bounds();
        // enumerate low frequency modes, skip zero
        let mut freqs: Vec<Vec<i32>> = Vec::new();
        let r = (2 * self.max_mode + 1) as usize;
        for flat in 0..r.pow(self.d as u32) {
            let mut rest = flat;
            let mut k = Vec::with_capacity(self.d);
            for _ in 0..self.d {
                k.push((rest % r) as i32 - self.max_mode);
                rest /= r;
            }
            if k.iter().any(|v| *v != 0) {
                freqs.push(k);
            }
        }
        // raw draws, then normalize the total amplitude
        let total: f64 = rng.random_range(self.amp_min..self.amp_max);
        let raw: Vec<(f64, f64)> = freqs
            .iter()
            .map(|_| {
                (
                    rng.random_range(-1.0..1.0f64),
                    rng.random_range(-1.0..1.0f64),
                )
            })
            .collect();
        let mass: f64 = raw.iter().map(|(c, s)| c.abs() + s.abs()).sum();
        let scale = total / mass.max(1e-12);
        let mut terms = vec![Expr::constant(self.base)];
        for (k, (c, s)) in freqs.iter().zip(&raw) {
            if *c != 0.0 {
                terms.push(Expr::cos_mode(k, c * scale));
            }
            if *s != 0.0 {
                terms.push(Expr::sin_mode(k, s * scale));
            }
        }
        CoefficientField::scalar(self.d, Expr::add(terms), a_min, a_max)
    }

    pub fn sample_many(&self, rng: &mut impl Rng, count: usize) -> Vec<CoefficientField> {
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

/// A coefficient-to-solution problem for operator-network construction: a
/// coefficient family with shared bounds and a fixed source term.
#[derive(Debug, Clone)]
pub struct OnetProblem {
    pub d: usize,
    pub family: TrigSampler,
    pub source: Expr,
}

impl OnetProblem {
    pub fn bounds(&self) -> (f64, f64) {
        self.family.bounds()
    }

    pub fn source_eval(&self) -> ScalarEval {
        ScalarEval::Expr(self.source.clone())
    }

    /// The default desk-scale model problem.
    pub fn model_1d() -> Self {
        let pi2 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
        OnetProblem {
            d: 1,
            family: TrigSampler::unit_band(1),
            source: Expr::sin_mode(&[1], pi2),
        }
    }
}

/// On-disk problem description for the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub d: usize,
    pub coefficient: CoefficientSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Expr>,
    /// When present, the source is derived from this prescribed solution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manufactured_u: Option<Expr>,
    pub p: usize,
    pub q: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientSpec {
    Scalar {
        expr: Expr,
        a_min: f64,
        a_max: f64,
    },
    MatrixReaction {
        /// Row-major `d*d` entries.
        matrix: Vec<Expr>,
        reaction: Expr,
        a_min: f64,
        a_max: f64,
        c_min: f64,
        c_max: f64,
    },
}

impl ProblemFile {
    pub fn coefficient_field(&self) -> CoefficientField {
        match &self.coefficient {
            CoefficientSpec::Scalar { expr, a_min, a_max } => {
                CoefficientField::scalar(self.d, expr.clone(), *a_min, *a_max)
            }
            CoefficientSpec::MatrixReaction {
                matrix,
                reaction,
                a_min,
                a_max,
                c_min,
                c_max,
            } => CoefficientField::matrix_reaction(
                self.d,
                matrix.iter().cloned().map(ScalarEval::Expr).collect(),
                reaction.clone(),
                *a_min,
                *a_max,
                *c_min,
                *c_max,
            ),
        }
    }

    /// The source term: explicit, or derived from the manufactured solution.
    pub fn source_eval(&self) -> Result<ScalarEval, SpectralError> {
        if let Some(u) = &self.manufactured_u {
            let f = crate::spectral::manufactured_problem(u, &self.coefficient_field())?;
            return Ok(ScalarEval::Expr(f));
        }
        match &self.source {
            Some(f) => Ok(ScalarEval::Expr(f.clone())),
            None => Err(SpectralError::NotExpressionBacked),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampled_coefficients_respect_certified_bounds() {
        let sampler = TrigSampler::unit_band(1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for coef in sampler.sample_many(&mut rng, 10) {
            for i in 0..=500 {
                let x = [i as f64 / 500.0];
                let v = coef.scalar_value(&x);
                assert!((0.5..=1.5).contains(&v), "value {v} outside bounds");
            }
        }
    }

    #[test]
    fn problem_file_round_trip() {
        let file = ProblemFile {
            d: 1,
            coefficient: CoefficientSpec::Scalar {
                expr: Expr::add(vec![Expr::constant(1.0), Expr::sin_mode(&[1], 0.5)]),
                a_min: 0.5,
                a_max: 1.5,
            },
            source: None,
            manufactured_u: Some(Expr::sin_mode(&[1], 1.0)),
            p: 6,
            q: 7,
        };
        let text = serde_json::to_string_pretty(&file).unwrap();
        let back: ProblemFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.p, 6);
        let f = back.source_eval().unwrap();
        // derived source at a point: -(a u')' with u = sin(2 pi x)
        assert!(f.eval(&[0.3]).is_finite());
    }
}
