//! Eigenvalues and eigenspace dimensions of `L = Δ + 1` on the sphere of
//! radius `√(2n)` in `ℝ^{n+1}`.

use std::io::Write;

use num_rational::Ratio;

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

fn check_dimension(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension n must be >= 1".into()));
    }
    Ok(())
}

/// `λ_j = j(j+n-1)/(2n) - 1`, exact.
pub fn eigenvalue(n: usize, j: usize) -> Result<Rational> {
    check_dimension(n)?;
    let (n, j) = (n as i64, j as i64);
    Ok(Rational::new(j * (j + n - 1), 2 * n) - 1)
}

/// Floating-point `λ_j`. Callers are expected to have validated `n`.
pub fn eigenvalue_f64(n: usize, j: usize) -> f64 {
    let (n, j) = (n as f64, j as f64);
    j * (j + n - 1.0) / (2.0 * n) - 1.0
}

/// Eigenvalue of `-Δ` on level `j`, `j(j+n-1)/(2n)`.
pub fn laplace_eigenvalue(n: usize, j: usize) -> f64 {
    eigenvalue_f64(n, j) + 1.0
}

fn binomial(a: u64, b: u64) -> u128 {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    let mut acc: u128 = 1;
    for i in 0..b {
        acc = acc * (a - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// `dim E_j = C(n+j, n) - C(n+j-2, n)`.
pub fn eigenspace_dim(n: usize, j: usize) -> Result<u64> {
    check_dimension(n)?;
    let (n, j) = (n as u64, j as u64);
    let lower = if n + j >= 2 { binomial(n + j - 2, n) } else { 0 };
    Ok((binomial(n + j, n) - lower) as u64)
}

/// `d_k = Σ_{j<k} dim E_j`, the codimension of `F_k`.
pub fn codimension(n: usize, k: usize) -> Result<u64> {
    check_dimension(n)?;
    if k == 0 {
        return Err(Error::InvalidArgument("codimension needs k >= 1".into()));
    }
    (0..k).map(|j| eigenspace_dim(n, j)).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRow {
    pub j: usize,
    pub lambda: Rational,
    pub dim: u64,
    /// `Σ_{i<j} dim E_i` (zero on the first row).
    pub d_cumulative: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumTable {
    pub n: usize,
    pub rows: Vec<SpectrumRow>,
}

impl SpectrumTable {
    pub fn new(n: usize, j_max: usize) -> Result<Self> {
        check_dimension(n)?;
        let mut rows = Vec::with_capacity(j_max + 1);
        let mut cumulative = 0;
        for j in 0..=j_max {
            let dim = eigenspace_dim(n, j)?;
            rows.push(SpectrumRow {
                j,
                lambda: eigenvalue(n, j)?,
                dim,
                d_cumulative: cumulative,
            });
            cumulative += dim;
        }
        Ok(Self { n, rows })
    }

    /// Columns `j, lambda_num, lambda_den, dim, d_cumulative`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "j,lambda_num,lambda_den,dim,d_cumulative")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                row.j,
                row.lambda.numer(),
                row.lambda.denom(),
                row.dim,
                row.d_cumulative
            )?;
        }
        Ok(())
    }
}

/// `j + j(j-1)/n`, the arrival-time exponent attached to level `j`.
pub fn arrival_exponent(n: usize, j: usize) -> Result<Rational> {
    check_dimension(n)?;
    let (n, j) = (n as i64, j as i64);
    Ok(Rational::from_integer(j) + Rational::new(j * (j - 1), n))
}

/// Levels `j >= k` with `λ_j < 2 λ_k`.
pub fn higher_order_levels(n: usize, k: usize) -> Result<Vec<usize>> {
    let bound = eigenvalue(n, k)? * 2;
    let mut levels = Vec::new();
    let mut j = k;
    while eigenvalue(n, j)? < bound {
        levels.push(j);
        j += 1;
    }
    Ok(levels)
}
