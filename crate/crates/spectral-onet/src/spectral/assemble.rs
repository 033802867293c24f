//! Galerkin assembly with numerical integration and the direct solver.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::basis::PeriodicBasis;
use super::quadrature::{gauss_lobatto, QuadratureRule};
use super::{CoefficientField, CoefficientKind, ScalarEval, SpectralError};

/// Assembled matrices and vectors of one coefficient on one discretization.
///
/// For the scalar kind these are the stiffness `A^a`, the unit-coefficient
/// reference `A^1`, the preconditioned matrix `(A^1)^{-1} A^a`, the load
/// vector `c_f`, its preconditioned image, and the Galerkin solution
/// coefficients. The matrix+reaction kind uses the extended basis (constant
/// appended) and the reference form with unit matrix diffusion and unit
/// reaction.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub basis: PeriodicBasis,
    pub quad: QuadratureRule,
    pub extended: bool,
    pub stiffness: DMatrix<f64>,
    pub reference: DMatrix<f64>,
    pub preconditioned: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub rhs_precond: DVector<f64>,
    pub solution: DVector<f64>,
    /// Envelope of the generalized spectrum implied by the declared
    /// coefficient bounds.
    pub envelope: (f64, f64),
}

impl DiscreteSystem {
    pub fn n(&self) -> usize {
        self.stiffness.nrows()
    }
}

/// Galerkin solution as a function: a coefficient vector over the basis
/// (extended by the constant mode in the reaction-diffusion variant).
#[derive(Debug, Clone)]
pub struct SolutionField {
    pub basis: PeriodicBasis,
    pub extended: bool,
    pub coefficients: DVector<f64>,
}

impl SolutionField {
    pub fn value(&self, x: &[f64]) -> f64 {
        let (values, _) = self.basis.eval_all(x, self.extended);
        values
            .iter()
            .zip(self.coefficients.iter())
            .map(|(v, c)| v * c)
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (_, grads) = self.basis.eval_all(x, self.extended);
        let mut out = vec![0.0; self.basis.d];
        for (g, c) in grads.iter().zip(self.coefficients.iter()) {
            for (o, gj) in out.iter_mut().zip(g) {
                *o += c * gj;
            }
        }
        out
    }
}

/// Per-node tables of basis values and gradients on a quadrature grid.
pub(crate) struct BasisTables {
    /// `values[k][i]`: member `i+1` at node `k`.
    pub values: Vec<Vec<f64>>,
    /// `grads[k][i]`: gradient of member `i+1` at node `k`.
    pub grads: Vec<Vec<Vec<f64>>>,
}

pub(crate) fn tabulate(
    basis: &PeriodicBasis,
    quad: &QuadratureRule,
    extended: bool,
) -> BasisTables {
    let mut values = Vec::with_capacity(quad.n_q());
    let mut grads = Vec::with_capacity(quad.n_q());
    for x in &quad.nodes {
        let (v, g) = basis.eval_all(x, extended);
        values.push(v);
        grads.push(g);
    }
    BasisTables { values, grads }
}

/// Reference matrix of the unit coefficient: the quadrature bilinear form
/// with `a == 1` (gradient products only), or with unit matrix diffusion and
/// unit reaction over the extended basis.
pub fn reference_matrix(
    basis: &PeriodicBasis,
    quad: &QuadratureRule,
    extended: bool,
) -> DMatrix<f64> {
    let d = basis.d;
    let n = if extended {
        basis.n_b_extended()
    } else {
        basis.n_b()
    };
    let tables = tabulate(basis, quad, extended);
    let mut out = DMatrix::<f64>::zeros(n, n);
    for (k, w) in quad.weights.iter().enumerate() {
        let g = &tables.grads[k];
        let v = &tables.values[k];
        for i in 0..n {
            for j in 0..=i {
                let mut dot: f64 = (0..d).map(|m| g[i][m] * g[j][m]).sum();
                if extended {
                    dot += v[i] * v[j];
                }
                out[(i, j)] += w * dot;
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            out[(i, j)] = out[(j, i)];
        }
    }
    out
}

/// Assemble the discrete system for one coefficient.
///
/// Requires `q >= p+1`. The load vector uses a finer rule of order `q + 4`
/// since it discretizes an exact integral. For the pure-diffusion kind the
/// source must have zero mean (checked by quadrature to 1e-10).
pub fn assemble(
    coef: &CoefficientField,
    basis: &PeriodicBasis,
    quad: &QuadratureRule,
    f: &ScalarEval,
) -> Result<DiscreteSystem, SpectralError> {
    if quad.q < basis.p + 1 {
        return Err(SpectralError::QuadratureTooCoarse {
            p: basis.p,
            q: quad.q,
        });
    }
    let d = basis.d;
    let extended = !coef.is_scalar();
    let n = if extended {
        basis.n_b_extended()
    } else {
        basis.n_b()
    };
    let tables = tabulate(basis, quad, extended);

    // load vector on a finer rule (c_f discretizes an exact integral)
    let fine = gauss_lobatto(quad.q + 4, d)?;
    if !extended {
        let mean: f64 = fine
            .nodes
            .iter()
            .zip(&fine.weights)
            .map(|(x, w)| w * f.eval(x))
            .sum();
        if mean.abs() > 1e-10 {
            return Err(SpectralError::SourceNotZeroMean { integral: mean });
        }
    }
    let fine_tables = tabulate(basis, &fine, extended);
    let mut rhs = DVector::<f64>::zeros(n);
    for (k, x) in fine.nodes.iter().enumerate() {
        let wf = fine.weights[k] * f.eval(x);
        for i in 0..n {
            rhs[i] += wf * fine_tables.values[k][i];
        }
    }

    // stiffness and reference matrices, accumulated node by node
    let mut stiffness = DMatrix::<f64>::zeros(n, n);
    let mut reference = DMatrix::<f64>::zeros(n, n);
    match &coef.kind {
        CoefficientKind::Scalar(a) => {
            for (k, x) in quad.nodes.iter().enumerate() {
                let w = quad.weights[k];
                let wa = w * a.eval(x);
                let g = &tables.grads[k];
                for i in 0..n {
                    for j in 0..=i {
                        let dot: f64 = (0..d).map(|m| g[i][m] * g[j][m]).sum();
                        stiffness[(i, j)] += wa * dot;
                        reference[(i, j)] += w * dot;
                    }
                }
            }
        }
        CoefficientKind::MatrixReaction {
            matrix, reaction, ..
        } => {
            for (k, x) in quad.nodes.iter().enumerate() {
                let w = quad.weights[k];
                let m: Vec<f64> = matrix.iter().map(|e| e.eval(x)).collect();
                for i in 0..d {
                    for j in (i + 1)..d {
                        let asym = (m[i * d + j] - m[j * d + i]).abs();
                        if asym > 1e-12 {
                            return Err(SpectralError::NonSymmetricMatrix { norm: asym });
                        }
                    }
                }
                let c = reaction.eval(x);
                let g = &tables.grads[k];
                let v = &tables.values[k];
                for i in 0..n {
                    for j in 0..=i {
                        let mut a_grad = 0.0;
                        let mut ref_grad = 0.0;
                        for mm in 0..d {
                            for nn in 0..d {
                                a_grad += m[mm * d + nn] * g[j][nn] * g[i][mm];
                            }
                            ref_grad += g[j][mm] * g[i][mm];
                        }
                        stiffness[(i, j)] += w * (a_grad + c * v[i] * v[j]);
                        reference[(i, j)] += w * (ref_grad + v[i] * v[j]);
                    }
                }
            }
        }
    }
    // mirror the lower triangle
    for i in 0..n {
        for j in (i + 1)..n {
            stiffness[(i, j)] = stiffness[(j, i)];
            reference[(i, j)] = reference[(j, i)];
        }
    }

    let max_entry = stiffness.amax();
    let ref_chol =
        Cholesky::new(reference.clone()).ok_or(SpectralError::NotCoercive)?;
    let stiff_chol = Cholesky::new(stiffness.clone()).ok_or(SpectralError::NotCoercive)?;
    // numerically singular pivots signal a coercivity violation
    for i in 0..n {
        let pivot = stiff_chol.l_dirty()[(i, i)];
        if !(pivot * pivot > 1e-12 * max_entry) {
            return Err(SpectralError::NotCoercive);
        }
    }

    let preconditioned = ref_chol.solve(&stiffness);
    let rhs_precond = ref_chol.solve(&rhs);
    let solution = stiff_chol.solve(&rhs);

    Ok(DiscreteSystem {
        basis: basis.clone(),
        quad: quad.clone(),
        extended,
        stiffness,
        reference,
        preconditioned,
        rhs,
        rhs_precond,
        solution,
        envelope: coef.spectrum_envelope(),
    })
}

/// Assemble and return the fully discrete Galerkin solution; this is the
/// oracle operator networks are tested against.
pub fn galerkin_solve(
    coef: &CoefficientField,
    f: &ScalarEval,
    p: usize,
    q: usize,
) -> Result<SolutionField, SpectralError> {
    let basis = PeriodicBasis::new(coef.d, p)?;
    let quad = gauss_lobatto(q, coef.d)?;
    let sys = assemble(coef, &basis, &quad, f)?;
    Ok(SolutionField {
        basis,
        extended: sys.extended,
        coefficients: sys.solution.clone(),
    })
}
