//! Small shared linear-algebra layer.
//!
//! Complex sparse operators are stored in CSR form; factorizations go through
//! the real embedding `z -> [[Re, -Im], [Im, Re]]` so that every solve ends in
//! a plain real Cholesky. A Jacobi-preconditioned conjugate gradient is kept
//! as the alternative solver configuration.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Complex sparse matrix, CSR.
#[derive(Debug, Clone)]
pub struct CsrC {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<C64>,
}

impl CsrC {
    /// Build from unsorted triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, C64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut col_idx: Vec<usize> = Vec::with_capacity(t.len());
        let mut values: Vec<C64> = Vec::with_capacity(t.len());
        let mut rows: Vec<usize> = Vec::with_capacity(t.len());
        for &(r, c, v) in &t {
            if rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        let mut row_ptr = vec![0usize; nrows + 1];
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrC {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        debug_assert_eq!(x.len(), self.ncols);
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        for r in 0..self.nrows {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
        y
    }

    /// y = A^H x (conjugate transpose).
    pub fn adjoint_matvec(&self, x: &[C64]) -> Vec<C64> {
        debug_assert_eq!(x.len(), self.nrows);
        let mut y = vec![C64::new(0.0, 0.0); self.ncols];
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.values[k].conj() * x[r];
            }
        }
        y
    }

    /// Dense copy.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k])] += self.values[k];
            }
        }
        m
    }

    /// Gram matrix A^H W A with a real diagonal weight, returned dense.
    pub fn gram_weighted_dense(&self, w: &[f64]) -> DMatrix<C64> {
        debug_assert_eq!(w.len(), self.nrows);
        let n = self.ncols;
        let mut g = DMatrix::zeros(n, n);
        for r in 0..self.nrows {
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            for a in lo..hi {
                let ca = self.col_idx[a];
                let va = self.values[a].conj() * w[r];
                for b in lo..hi {
                    g[(ca, self.col_idx[b])] += va * self.values[b];
                }
            }
        }
        g
    }
}

/// Real 2n-embedding of a complex Hermitian matrix: [[Re, -Im], [Im, Re]].
pub fn embed_real(h: &DMatrix<C64>) -> DMatrix<f64> {
    let n = h.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            m[(i, j)] = z.re;
            m[(i, j + n)] = -z.im;
            m[(i + n, j)] = z.im;
            m[(i + n, j + n)] = z.re;
        }
    }
    m
}

pub fn embed_vec(x: &[C64]) -> DVector<f64> {
    let n = x.len();
    let mut v = DVector::zeros(2 * n);
    for i in 0..n {
        v[i] = x[i].re;
        v[i + n] = x[i].im;
    }
    v
}

pub fn unembed_vec(v: &DVector<f64>) -> Vec<C64> {
    let n = v.len() / 2;
    (0..n).map(|i| C64::new(v[i], v[i + n])).collect()
}

/// Direct solve of a Hermitian positive-definite complex system via the real
/// embedding and dense Cholesky, with one round of iterative refinement.
pub fn solve_hpd_direct(h: &DMatrix<C64>, rhs: &[C64]) -> Result<Vec<C64>> {
    let m = embed_real(h);
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numerical("Cholesky factorization failed: matrix not positive definite"))?;
    let b = embed_vec(rhs);
    let mut x = chol.solve(&b);
    // one refinement pass: r = b - Mx, x += M^{-1} r
    let r = &b - &m * &x;
    x += chol.solve(&r);
    Ok(unembed_vec(&x))
}

/// Jacobi-preconditioned conjugate gradient for Hermitian positive-definite
/// systems given as a matvec closure.
pub fn solve_hpd_cg<F>(
    n: usize,
    matvec: F,
    diag: &[f64],
    rhs: &[C64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<C64>>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let dot = |a: &[C64], b: &[C64]| -> C64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.conj() * y)
            .sum::<C64>()
    };
    let bnorm = rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok(vec![C64::new(0.0, 0.0); n]);
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut r = rhs.to_vec();
    let prec = |v: &[C64]| -> Vec<C64> {
        v.iter()
            .zip(diag)
            .map(|(z, &d)| z / d.max(1e-300))
            .collect()
    };
    let mut z = prec(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z).re;
    for _ in 0..max_iter {
        let ap = matvec(&p);
        let pap = dot(&p, &ap).re;
        if pap <= 0.0 {
            return Err(Error::numerical("CG breakdown: operator not positive definite"));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if rnorm <= tol * bnorm {
            return Ok(x);
        }
        z = prec(&r);
        let rz_new = dot(&r, &z).re;
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::numerical(format!(
        "CG did not converge in {max_iter} iterations"
    )))
}

/// All eigenvalues of a complex Hermitian pencil (H, M) with M real diagonal
/// positive, ascending. Each eigenvalue of the complex problem appears once
/// (the real embedding doubles them; duplicates are collapsed pairwise).
pub fn hermitian_eigs_ascending(h: &DMatrix<C64>, mass: &[f64]) -> Vec<f64> {
    let n = h.nrows();
    let mut scaled = h.clone();
    for i in 0..n {
        for j in 0..n {
            scaled[(i, j)] /= (mass[i] * mass[j]).sqrt();
        }
    }
    let m = embed_real(&scaled);
    let eig = m.symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // each complex eigenvalue appears twice in the embedding
    vals.into_iter().step_by(2).collect()
}

/// Eigen-decomposition of a real symmetric pencil (H, M) with M diagonal
/// positive; returns (values ascending, vectors as columns in original
/// coordinates).
pub fn sym_eigs_with_vectors(h: &DMatrix<f64>, mass: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let n = h.nrows();
    let mut scaled = h.clone();
    for i in 0..n {
        for j in 0..n {
            scaled[(i, j)] /= (mass[i] * mass[j]).sqrt();
        }
    }
    let eig = scaled.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        for r in 0..n {
            vecs[(r, k)] = eig.eigenvectors[(r, i)] / mass[r].sqrt();
        }
    }
    (vals, vecs)
}

/// Smallest generalized eigenvalue of a symmetric positive-definite-ish
/// matrix pencil (H, M) by inverse power iteration on H^{-1} M, with the
/// Rayleigh quotient converged to `tol` relative.
pub fn smallest_eig_inverse_power(
    h: &DMatrix<f64>,
    mass: &[f64],
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<f64> {
    let n = h.nrows();
    let chol = match h.clone().cholesky() {
        Some(c) => c,
        None => {
            // indefinite: fall back to a dense eigensolve so the failure is
            // still reportable with a value
            let (vals, _) = sym_eigs_with_vectors(h, mass);
            return Ok(vals[0]);
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let mut prev = f64::INFINITY;
    for _ in 0..max_iter {
        let mx = DVector::from_fn(n, |i, _| mass[i] * x[i]);
        let y = chol.solve(&mx);
        let ynorm = (0..n).map(|i| mass[i] * y[i] * y[i]).sum::<f64>().sqrt();
        x = y / ynorm;
        let hx = h * &x;
        let num = x.dot(&hx);
        let den = (0..n).map(|i| mass[i] * x[i] * x[i]).sum::<f64>();
        let lam = num / den;
        if (lam - prev).abs() <= tol * lam.abs().max(1e-300) {
            return Ok(lam);
        }
        prev = lam;
    }
    Err(Error::numerical(
        "inverse power iteration did not converge".to_string(),
    ))
}

/// Seeded RNG used everywhere randomness is requested.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

pub fn random_real_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn cnorm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_hpd(n: usize, seed: u64) -> DMatrix<C64> {
        let mut rng = rng_from_seed(seed);
        let a = DMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let mut h = a.adjoint() * &a;
        for i in 0..n {
            h[(i, i)] += C64::new(0.5, 0.0);
        }
        h
    }

    #[test]
    fn direct_solve_recovers_rhs() {
        let h = small_hpd(12, 3);
        let mut rng = rng_from_seed(7);
        let x_true = random_complex_vec(&mut rng, 12);
        let rhs: Vec<C64> = {
            let xv = DVector::from_column_slice(&x_true);
            let b = &h * xv;
            b.iter().copied().collect()
        };
        let x = solve_hpd_direct(&h, &rhs).unwrap();
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn cg_agrees_with_direct() {
        let h = small_hpd(20, 11);
        let mut rng = rng_from_seed(13);
        let rhs = random_complex_vec(&mut rng, 20);
        let xd = solve_hpd_direct(&h, &rhs).unwrap();
        let diag: Vec<f64> = (0..20).map(|i| h[(i, i)].re).collect();
        let hv = |x: &[C64]| {
            let xv = DVector::from_column_slice(x);
            let y = &h * xv;
            y.iter().copied().collect::<Vec<C64>>()
        };
        let xc = solve_hpd_cg(20, hv, &diag, &rhs, 1e-13, 10_000).unwrap();
        for (a, b) in xd.iter().zip(&xc) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn hermitian_eigs_match_known_diagonal() {
        let mut h = DMatrix::zeros(3, 3);
        h[(0, 0)] = C64::new(2.0, 0.0);
        h[(1, 1)] = C64::new(5.0, 0.0);
        h[(2, 2)] = C64::new(9.0, 0.0);
        let vals = hermitian_eigs_ascending(&h, &[1.0, 1.0, 1.0]);
        assert_eq!(vals.len(), 3);
        assert_relative_eq!(vals[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(vals[2], 9.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_power_finds_smallest() {
        let mut rng = rng_from_seed(5);
        let a = DMatrix::from_fn(15, 15, |_, _| rng.gen_range(-1.0..1.0));
        let h = &a.transpose() * &a + DMatrix::identity(15, 15) * 0.3;
        let mass = vec![1.0; 15];
        let lam = smallest_eig_inverse_power(&h, &mass, 1e-10, 500, 42).unwrap();
        let (vals, _) = sym_eigs_with_vectors(&h, &mass);
        assert_relative_eq!(lam, vals[0], max_relative = 1e-6);
    }

    #[test]
    fn csr_matvec_and_adjoint() {
        let t = vec![
            (0usize, 0usize, C64::new(1.0, 2.0)),
            (0, 2, C64::new(-1.0, 0.5)),
            (2, 1, C64::new(0.0, 1.0)),
        ];
        let a = CsrC::from_triplets(3, 3, t);
        let x = vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(2.0, -1.0),
        ];
        let y = a.matvec(&x);
        assert!((y[0] - (C64::new(1.0, 2.0) + C64::new(-1.0, 0.5) * C64::new(2.0, -1.0))).norm() < 1e-15);
        // adjoint identity <Ax, z> = <x, A^H z>
        let z = vec![
            C64::new(0.3, -0.2),
            C64::new(1.0, 1.0),
            C64::new(-0.5, 0.1),
        ];
        let lhs: C64 = y.iter().zip(&z).map(|(a, b)| a.conj() * b).sum();
        let ahz = a.adjoint_matvec(&z);
        let rhs: C64 = x.iter().zip(&ahz).map(|(a, b)| a.conj() * b).sum();
        assert!((lhs - rhs).norm() < 1e-13);
    }
}
