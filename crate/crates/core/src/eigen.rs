//! Shift-invert block subspace iteration for a few eigenpairs of a sparse,
//! real, weakly nonsymmetric matrix whose wanted eigenvalues are real and
//! lie just below a known shift.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

/// Compressed-row matrix used for the products A·x.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row entries; rows must be supplied in order.
    pub fn from_rows(n: usize, rows: impl IntoIterator<Item = Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        assert_eq!(row_ptr.len(), n + 1, "row count mismatch");
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            *o = self.cols[span.clone()]
                .iter()
                .zip(&self.vals[span])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
    }

    fn shifted_csc(&self, sigma: f64) -> Result<SparseColMat<usize, f64>> {
        let mut trips = Vec::with_capacity(self.vals.len());
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                let v = if c == r { self.vals[k] - sigma } else { self.vals[k] };
                trips.push(Triplet::new(r, c, v));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &trips)
            .map_err(|e| Error::Numerical(format!("sparse assembly: {e:?}")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Number of eigenpairs that must converge.
    pub wanted: usize,
    /// Relative residual ‖Ax − θx‖ / (|θ| ‖x‖).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            wanted: 1,
            tol: 1e-11,
            max_iter: 400,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Unit 2-norm.
    pub vector: Vec<f64>,
}

/// Eigenpairs of `a` nearest to `sigma`, sorted by descending eigenvalue.
///
/// `start` supplies the initial block columns (each of length `a.dim()`);
/// missing columns are left as given, so callers control determinism.
pub fn shift_invert(
    a: &CsrMatrix,
    sigma: f64,
    start: Vec<Vec<f64>>,
    opts: EigenOptions,
) -> Result<Vec<EigenPair>> {
    let n = a.dim();
    let p = start.len();
    if p < opts.wanted || opts.wanted == 0 {
        return Err(Error::InvalidInput(format!(
            "need at least {} start vectors, got {p}",
            opts.wanted.max(1)
        )));
    }
    let lu = a
        .shifted_csc(sigma)?
        .sp_lu()
        .map_err(|e| Error::Numerical(format!("sparse LU of shifted operator: {e:?}")))?;

    let mut block = Mat::<f64>::zeros(n, p);
    for (j, v) in start.iter().enumerate() {
        assert_eq!(v.len(), n);
        block.col_as_slice_mut(j).copy_from_slice(v);
    }

    let mut worst = f64::INFINITY;
    let mut av = vec![0.0; n];
    for _ in 0..opts.max_iter {
        lu.solve_in_place(block.as_mut());
        orthonormalize(&mut block)?;

        // Rayleigh-Ritz with the unshifted operator.
        let mut aq = Mat::<f64>::zeros(n, p);
        for j in 0..p {
            a.mul_vec(block.col_as_slice(j), &mut av);
            aq.col_as_slice_mut(j).copy_from_slice(&av);
        }
        let h = Mat::<f64>::from_fn(p, p, |r, c| dot(block.col_as_slice(r), aq.col_as_slice(c)));
        let evd = h
            .eigen()
            .map_err(|e| Error::Numerical(format!("Ritz eigendecomposition: {e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&x, &y| s[y].re.total_cmp(&s[x].re).then(x.cmp(&y)));

        // Ritz vectors, real parts; complex pairs only occur before convergence.
        let mut next = Mat::<f64>::zeros(n, p);
        let mut pairs = Vec::with_capacity(opts.wanted);
        worst = 0.0;
        for (slot, &k) in order.iter().enumerate() {
            let coeffs: Vec<f64> = (0..p).map(|r| u[(r, k)].re).collect();
            let x = next.col_as_slice_mut(slot);
            let mut ax = vec![0.0; n];
            for (r, &cf) in coeffs.iter().enumerate() {
                if cf == 0.0 {
                    continue;
                }
                axpy(cf, block.col_as_slice(r), x);
                axpy(cf, aq.col_as_slice(r), &mut ax);
            }
            if slot < opts.wanted {
                let theta = s[k].re;
                let xn = norm(x);
                let res = if xn == 0.0 {
                    f64::INFINITY
                } else {
                    let r2: f64 = ax.iter().zip(x.iter()).map(|(a, b)| (a - theta * b).powi(2)).sum();
                    let imag = s[k].im.abs() / theta.abs().max(f64::MIN_POSITIVE);
                    (r2.sqrt() / (theta.abs() * xn)).max(imag)
                };
                worst = worst.max(res);
                pairs.push((theta, xn));
            }
        }
        block = next;
        if worst < opts.tol {
            let mut out = Vec::with_capacity(opts.wanted);
            for (j, (theta, xn)) in pairs.into_iter().enumerate() {
                let v: Vec<f64> = block.col_as_slice(j).iter().map(|x| x / xn).collect();
                out.push(EigenPair { value: theta, vector: v });
            }
            return Ok(out);
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual: worst,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass.
fn orthonormalize(m: &mut Mat<f64>) -> Result<()> {
    let p = m.ncols();
    let mut cols: Vec<Vec<f64>> = (0..p).map(|j| m.col_as_slice(j).to_vec()).collect();
    for j in 0..p {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        for _ in 0..2 {
            for q in done.iter() {
                let c = dot(q, v);
                axpy(-c, q, v);
            }
        }
        let nv = norm(v);
        if !(nv > 0.0) || !nv.is_finite() {
            return Err(Error::Numerical("subspace collapsed during orthonormalization".into()));
        }
        v.iter_mut().for_each(|x| *x /= nv);
    }
    for (j, c) in cols.iter().enumerate() {
        m.col_as_slice_mut(j).copy_from_slice(c);
    }
    Ok(())
}
