//! Least-squares polynomial projections on rectangles.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Rect, MAX_DIM};

/// Highest supported polynomial degree.
pub const MAX_DEGREE: usize = 3;

/// Exponent vectors of all monomials of total degree at most `degree` in `dim` variables.
pub fn monomial_exponents(dim: usize, degree: usize) -> Vec<[u8; MAX_DIM]> {
    let mut out = Vec::new();
    for total in 0..=degree {
        let mut current = [0u8; MAX_DIM];
        push_exponents(dim, 0, total, &mut current, &mut out);
    }
    out
}

fn push_exponents(dim: usize, axis: usize, remaining: usize, current: &mut [u8; MAX_DIM], out: &mut Vec<[u8; MAX_DIM]>) {
    if axis + 1 == dim {
        current[axis] = remaining as u8;
        out.push(*current);
        return;
    }
    for k in (0..=remaining).rev() {
        current[axis] = k as u8;
        push_exponents(dim, axis + 1, remaining - k, current, out);
    }
    current[axis] = 0;
}

/// Dimension of the space of polynomials of degree at most `degree` in `dim` variables.
pub fn polynomial_space_dim(dim: usize, degree: usize) -> usize {
    monomial_exponents(dim, degree).len()
}

/// Monomials are evaluated in coordinates centred and scaled to `[-1, 1]` on the rectangle.
fn scaled_coordinates(widths: &[usize]) -> Vec<Vec<f64>> {
    widths
        .iter()
        .map(|&w| (0..w).map(|i| 2.0 * (i as f64 + 0.5) / w as f64 - 1.0).collect())
        .collect()
}

/// The projection `P_R f` onto polynomials of degree at most `m`, for the discrete
/// inner product `⟨f, g⟩_R = avg_R f·g`.
#[derive(Clone, Debug)]
pub struct PolyProjection {
    rect: Rect,
    degree: usize,
    widths: Vec<usize>,
    exponents: Vec<[u8; MAX_DIM]>,
    /// Coefficients in the scaled monomial basis.
    monomial_coefficients: Vec<f64>,
    /// Coefficients in the orthonormal basis obtained from the Cholesky factor of the Gram matrix.
    orthonormal_coefficients: Vec<f64>,
    /// Lower Cholesky factor `L` of the monomial Gram matrix (`G = L·Lᵀ`).
    cholesky: DMatrix<f64>,
}

/// Cached Gram factorisation for one cell layout and degree.
#[derive(Clone, Debug)]
pub struct ProjectionBasis {
    widths: Vec<usize>,
    exponents: Vec<[u8; MAX_DIM]>,
    /// Monomial values, one row per cell (row-major cell order).
    design: Vec<Vec<f64>>,
    cholesky: DMatrix<f64>,
}

impl ProjectionBasis {
    pub fn new(widths: &[usize], degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::Unsupported(format!(
                "polynomial degree {degree} exceeds the supported maximum {MAX_DEGREE}"
            )));
        }
        let dim = widths.len();
        let exponents = monomial_exponents(dim, degree);
        let cell_count: usize = widths.iter().product();
        if cell_count < exponents.len() {
            return Err(Error::InvalidParameter(format!(
                "{} cells cannot determine {} polynomial coefficients",
                cell_count,
                exponents.len()
            )));
        }
        let coords = scaled_coordinates(widths);
        let mut design = Vec::with_capacity(cell_count);
        let mut idx = vec![0usize; dim];
        for _ in 0..cell_count {
            let row: Vec<f64> = exponents
                .iter()
                .map(|e| (0..dim).map(|a| coords[a][idx[a]].powi(e[a] as i32)).product())
                .collect();
            design.push(row);
            for axis in (0..dim).rev() {
                idx[axis] += 1;
                if idx[axis] < widths[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
        let k = exponents.len();
        let mut gram = DMatrix::<f64>::zeros(k, k);
        for row in &design {
            for i in 0..k {
                for j in 0..=i {
                    gram[(i, j)] += row[i] * row[j];
                }
            }
        }
        gram /= cell_count as f64;
        for i in 0..k {
            for j in 0..i {
                gram[(j, i)] = gram[(i, j)];
            }
        }
        let cholesky = gram
            .cholesky()
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "cell layout {widths:?} cannot resolve polynomials of degree {degree}"
                ))
            })?
            .l();
        Ok(Self { widths: widths.to_vec(), exponents, design, cholesky })
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// Monomial coefficients of the projection of `values` (row-major cell order).
    pub fn solve(&self, values: &[f64]) -> Vec<f64> {
        let k = self.len();
        let mut rhs = DVector::<f64>::zeros(k);
        for (row, &v) in self.design.iter().zip(values) {
            for i in 0..k {
                rhs[i] += row[i] * v;
            }
        }
        rhs /= values.len() as f64;
        let y = self.cholesky.solve_lower_triangular(&rhs).expect("nonsingular factor");
        let a = self.cholesky.tr_solve_lower_triangular(&y).expect("nonsingular factor");
        a.iter().copied().collect()
    }

    /// Values of the polynomial with monomial coefficients `coefficients` on every cell.
    pub fn evaluate(&self, coefficients: &[f64]) -> Vec<f64> {
        self.design
            .iter()
            .map(|row| row.iter().zip(coefficients).map(|(m, c)| m * c).sum())
            .collect()
    }

    /// Residual `values − P values`.
    pub fn residual(&self, values: &[f64]) -> Vec<f64> {
        let coefficients = self.solve(values);
        self.evaluate(&coefficients)
            .iter()
            .zip(values)
            .map(|(p, v)| v - p)
            .collect()
    }

    /// Gram matrix of the orthonormalised basis `L^{-1}·monomials` (identity up to rounding).
    pub fn orthonormal_gram(&self) -> DMatrix<f64> {
        let k = self.len();
        let inv = self.cholesky.clone().try_inverse().expect("nonsingular factor");
        let mut gram = DMatrix::<f64>::zeros(k, k);
        for row in &self.design {
            let phi = &inv * DVector::from_column_slice(row);
            gram += &phi * phi.transpose();
        }
        gram / self.design.len() as f64
    }
}

impl PolyProjection {
    pub fn rect(&self) -> &Rect {
        &self.rect
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn monomial_coefficients(&self) -> &[f64] {
        &self.monomial_coefficients
    }

    pub fn orthonormal_coefficients(&self) -> &[f64] {
        &self.orthonormal_coefficients
    }

    /// Evaluates `P_R f` at a point of the rectangle.
    pub fn evaluate_at(&self, x: &[f64]) -> f64 {
        let n = self.widths.len();
        let mut t = [0.0; MAX_DIM];
        for axis in 0..n {
            let lo = self.rect.lower(axis);
            let side = self.rect.side(axis);
            t[axis] = 2.0 * (x[axis] - lo) / side - 1.0;
        }
        self.exponents
            .iter()
            .zip(&self.monomial_coefficients)
            .map(|(e, c)| c * (0..n).map(|a| t[a].powi(e[a] as i32)).product::<f64>())
            .sum()
    }

    /// Values of `P_R f` on the cells of the rectangle, row-major.
    pub fn cell_values(&self) -> Vec<f64> {
        let basis = ProjectionBasis::new(&self.widths, self.degree).expect("basis built before");
        basis.evaluate(&self.monomial_coefficients)
    }

    /// Lower Cholesky factor of the monomial Gram matrix.
    pub fn gram_factor(&self) -> &DMatrix<f64> {
        &self.cholesky
    }

    /// `max_R |P_R f| / avg_R |f|`, the measured projection constant for `f`.
    pub fn sup_over_mean(&self, f: &GridFunction) -> Result<f64> {
        let values = f.restrict(&self.rect)?;
        let mean_abs = values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64;
        let sup = self.cell_values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(sup / mean_abs)
    }
}

/// Residual of the least-squares fit by polynomials of degree at most `degree`, valid
/// also when the cells cannot separate all monomials (the fit then uses a pseudo-inverse).
pub fn least_squares_residual(widths: &[usize], degree: usize, values: &[f64]) -> Result<Vec<f64>> {
    if let Ok(basis) = ProjectionBasis::new(widths, degree) {
        return Ok(basis.residual(values));
    }
    if degree > MAX_DEGREE {
        return Err(Error::Unsupported(format!(
            "polynomial degree {degree} exceeds the supported maximum {MAX_DEGREE}"
        )));
    }
    let dim = widths.len();
    let exponents = monomial_exponents(dim, degree);
    let coords = scaled_coordinates(widths);
    let rows = values.len();
    let mut design = DMatrix::<f64>::zeros(rows, exponents.len());
    let mut idx = vec![0usize; dim];
    for row in 0..rows {
        for (col, e) in exponents.iter().enumerate() {
            design[(row, col)] = (0..dim).map(|a| coords[a][idx[a]].powi(e[a] as i32)).product();
        }
        for axis in (0..dim).rev() {
            idx[axis] += 1;
            if idx[axis] < widths[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
    let rhs = DVector::from_column_slice(values);
    let svd = design.clone().svd(true, true);
    let coefficients = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::InvalidParameter(format!("least-squares fit failed: {e}")))?;
    let fitted = design * coefficients;
    Ok(values.iter().zip(fitted.iter()).map(|(v, p)| v - p).collect())
}

/// Cell widths of an aligned rectangle.
pub fn rect_widths(f: &GridFunction, rect: &Rect) -> Result<Vec<usize>> {
    let cells = f.grid().cell_box(rect)?;
    Ok((0..f.grid().dim()).map(|a| cells.width(a)).collect())
}

/// Computes `P_R f` for polynomials of degree at most `m`.
pub fn project_polynomial(f: &GridFunction, rect: &Rect, m: usize) -> Result<PolyProjection> {
    let widths = rect_widths(f, rect)?;
    let basis = ProjectionBasis::new(&widths, m)?;
    let values = f.restrict(rect)?;
    let monomial_coefficients = basis.solve(&values);
    let ortho = basis.cholesky.transpose() * DVector::from_column_slice(&monomial_coefficients);
    Ok(PolyProjection {
        rect: *rect,
        degree: m,
        widths,
        exponents: basis.exponents.clone(),
        monomial_coefficients,
        orthonormal_coefficients: ortho.iter().copied().collect(),
        cholesky: basis.cholesky,
    })
}
