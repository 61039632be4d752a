//! Dense matrix-equation solvers: Lyapunov (continuous and discrete),
//! Sylvester, and zero-order-hold discretization.
//!
//! The Lyapunov and Sylvester solvers follow Bartels–Stewart: reduce the
//! coefficient matrices to complex upper-triangular Schur form, solve the
//! resulting triangular equation column by column, and transform back.
//! The real Schur form from nalgebra is converted to complex triangular
//! form with Givens rotations so that 2×2 blocks never need special cases.

use nalgebra::{DMatrix, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{check_dims, Error, Result};

/// Default margin used by the Hurwitz and Schur stability tests.
pub const DEFAULT_STABILITY_TOL: f64 = 1e-12;

type CMatrix = DMatrix<Complex64>;

/// Complex Schur factorization `A = U T U*` with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct ComplexSchur {
    u: CMatrix,
    t: CMatrix,
}

impl ComplexSchur {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        check_dims(a.is_square(), || format!("expected square matrix, got {}x{}", a.nrows(), a.ncols()))?;
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Schur input".into()));
        }
        let n = a.nrows();
        if n == 1 {
            return Ok(Self {
                u: CMatrix::identity(1, 1),
                t: a.map(|v| Complex64::new(v, 0.0)),
            });
        }
        let upper = (0..n).all(|j| ((j + 1)..n).all(|i| a[(i, j)] == 0.0));
        if upper {
            return Ok(Self {
                u: CMatrix::identity(n, n),
                t: a.map(|v| Complex64::new(v, 0.0)),
            });
        }
        let max_iter = 200 * n;
        let (q, t) = match nalgebra::Schur::try_new(a.clone(), f64::EPSILON, max_iter) {
            Some(s) => s.unpack(),
            None => {
                // The QR sweep occasionally stalls on exactly repeated spectra;
                // a diagonal shift leaves the Schur vectors unchanged.
                let shift = 1.0 + a.norm();
                let shifted = a + DMatrix::identity(n, n) * shift;
                let (q, mut t) = nalgebra::Schur::try_new(shifted, f64::EPSILON, max_iter)
                    .ok_or(Error::SchurFailed)?
                    .unpack();
                for i in 0..n {
                    t[(i, i)] -= shift;
                }
                (q, t)
            }
        };
        let mut u = q.map(|v| Complex64::new(v, 0.0));
        let mut t = t.map(|v| Complex64::new(v, 0.0));
        real_to_complex_schur(&mut u, &mut t);
        Ok(Self { u, t })
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues().iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max)
    }

    fn to_schur_basis(&self, c: &DMatrix<f64>) -> CMatrix {
        let cc = c.map(|v| Complex64::new(v, 0.0));
        self.u.adjoint() * cc * &self.u
    }

    fn from_schur_basis(&self, y: &CMatrix) -> DMatrix<f64> {
        (&self.u * y * self.u.adjoint()).map(|v| v.re)
    }
}

// Port of the standard rsf2csf reduction: each 2x2 bump on the subdiagonal
// is annihilated with a complex Givens rotation.
fn real_to_complex_schur(u: &mut CMatrix, t: &mut CMatrix) {
    let n = t.nrows();
    for m in (1..n).rev() {
        let sub = t[(m, m - 1)];
        let scale = t[(m - 1, m - 1)].norm() + t[(m, m)].norm();
        if sub.norm() > f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
            let a = t[(m - 1, m - 1)];
            let b = t[(m - 1, m)];
            let c = t[(m, m - 1)];
            let d = t[(m, m)];
            let half_tr = (a + d) * 0.5;
            let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
            let mu = half_tr + disc - d;
            let r = (mu.norm_sqr() + sub.norm_sqr()).sqrt();
            let cs = mu / r;
            let sn = sub / r;
            // G = [[conj(c), s], [-s, c]]
            let g00 = cs.conj();
            let g01 = sn;
            let g10 = -sn;
            let g11 = cs;
            for col in (m - 1)..n {
                let x = t[(m - 1, col)];
                let y = t[(m, col)];
                t[(m - 1, col)] = g00 * x + g01 * y;
                t[(m, col)] = g10 * x + g11 * y;
            }
            // right-multiply by G^H
            for row in 0..=m {
                let x = t[(row, m - 1)];
                let y = t[(row, m)];
                t[(row, m - 1)] = x * g00.conj() + y * g01.conj();
                t[(row, m)] = x * g10.conj() + y * g11.conj();
            }
            for row in 0..u.nrows() {
                let x = u[(row, m - 1)];
                let y = u[(row, m)];
                u[(row, m - 1)] = x * g00.conj() + y * g01.conj();
                u[(row, m)] = x * g10.conj() + y * g11.conj();
            }
        }
        t[(m, m - 1)] = Complex64::new(0.0, 0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Triangle {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy)]
enum TriEquation {
    /// S Y + Y T = C
    Sylvester,
    /// S Y T - Y = C
    Stein,
}

/// Column-by-column solve of a triangular Sylvester or Stein equation.
/// `s` and `t` are given with their triangular orientation; `t` decides the
/// column order, `s` the substitution direction.
fn solve_triangular_equation(
    kind: TriEquation,
    s: &CMatrix,
    s_tri: Triangle,
    t: &CMatrix,
    t_tri: Triangle,
    c: &CMatrix,
) -> Result<CMatrix> {
    let m = s.nrows();
    let n = t.nrows();
    let scale = match kind {
        TriEquation::Sylvester => max_abs_diag(s) + max_abs_diag(t),
        TriEquation::Stein => max_abs_diag(s) * max_abs_diag(t) + 1.0,
    }
    .max(f64::MIN_POSITIVE);
    let mut y = CMatrix::zeros(m, n);
    let order: Vec<usize> = match t_tri {
        Triangle::Upper => (0..n).collect(),
        Triangle::Lower => (0..n).rev().collect(),
    };
    let mut acc = vec![Complex64::new(0.0, 0.0); m];
    let mut rhs = vec![Complex64::new(0.0, 0.0); m];
    let mut min_gap = f64::INFINITY;
    for (pos, &j) in order.iter().enumerate() {
        acc.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for &k in &order[..pos] {
            let tkj = t[(k, j)];
            if tkj.norm_sqr() == 0.0 {
                continue;
            }
            for i in 0..m {
                acc[i] += y[(i, k)] * tkj;
            }
        }
        match kind {
            TriEquation::Sylvester => {
                for i in 0..m {
                    rhs[i] = c[(i, j)] - acc[i];
                }
            }
            TriEquation::Stein => {
                for i in 0..m {
                    let mut sa = Complex64::new(0.0, 0.0);
                    match s_tri {
                        Triangle::Upper => {
                            for l in i..m {
                                sa += s[(i, l)] * acc[l];
                            }
                        }
                        Triangle::Lower => {
                            for l in 0..=i {
                                sa += s[(i, l)] * acc[l];
                            }
                        }
                    }
                    rhs[i] = c[(i, j)] - sa;
                }
            }
        }
        let tjj = t[(j, j)];
        let coef = |i: usize, l: usize| -> Complex64 {
            match kind {
                TriEquation::Sylvester => {
                    if i == l {
                        s[(i, i)] + tjj
                    } else {
                        s[(i, l)]
                    }
                }
                TriEquation::Stein => {
                    if i == l {
                        tjj * s[(i, i)] - 1.0
                    } else {
                        tjj * s[(i, l)]
                    }
                }
            }
        };
        let rows: Vec<usize> = match s_tri {
            Triangle::Upper => (0..m).rev().collect(),
            Triangle::Lower => (0..m).collect(),
        };
        for &i in &rows {
            let mut v = rhs[i];
            match s_tri {
                Triangle::Upper => {
                    for l in (i + 1)..m {
                        v -= coef(i, l) * y[(l, j)];
                    }
                }
                Triangle::Lower => {
                    for l in 0..i {
                        v -= coef(i, l) * y[(l, j)];
                    }
                }
            }
            let d = coef(i, i);
            min_gap = min_gap.min(d.norm());
            if d.norm() <= 1e-14 * scale {
                return Err(Error::SingularPencil { gap: d.norm() });
            }
            y[(i, j)] = v / d;
        }
    }
    if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite(format!("triangular solve (min gap {min_gap:e})")));
    }
    Ok(y)
}

fn max_abs_diag(a: &CMatrix) -> f64 {
    (0..a.nrows()).map(|i| a[(i, i)].norm()).fold(0.0, f64::max)
}

fn check_square_pair(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<()> {
    check_dims(a.is_square() && q.is_square() && a.nrows() == q.nrows(), || {
        format!(
            "A is {}x{}, Q is {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )
    })
}

fn symmetrize(p: DMatrix<f64>) -> DMatrix<f64> {
    (&p + p.transpose()) * 0.5
}

/// Eigendecomposition of the symmetric part of `m`.
///
/// nalgebra's implicit QR loses accuracy on matrices whose entries span
/// many decades (the Hessians of the mixture cost reach 1e10 next to O(1)
/// entries), returning eigenvectors that do not reconstruct the input.
/// Its output is used only as a starting basis: `VᵀMV` is nearly diagonal
/// and a few cyclic Jacobi sweeps bring it to working precision relative
/// to the matrix norm.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, Dyn> {
    let sym = symmetrize(m.clone());
    let start = SymmetricEigen::new(sym.clone()).eigenvectors;
    let a = symmetrize(start.transpose() * &sym * &start);
    let (eigenvalues, rot) = jacobi_eigen(a, sym.norm());
    SymmetricEigen { eigenvectors: start * rot, eigenvalues }
}

fn jacobi_eigen(mut a: DMatrix<f64>, norm: f64) -> (nalgebra::DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = f64::EPSILON * 1e-3 * norm;
    for _sweep in 0..60 {
        let mut off = 0.0;
        for q in 1..n {
            for p in 0..q {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for q in 1..n {
            for p in 0..q {
                let apq = a[(p, q)];
                if apq.abs() <= tol * 1e-3 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta == 0.0 { 1.0 } else { theta.signum() / (theta.abs() + theta.hypot(1.0)) };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                rotate_columns(&mut a, p, q, c, s);
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                rotate_columns(&mut v, p, q, c, s);
            }
        }
    }
    (a.diagonal(), v)
}

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    let (mut cp, mut cq) = m.columns_range_pair_mut(p, q);
    for k in 0..cp.nrows() {
        let (x, y) = (cp[k], cq[k]);
        cp[k] = c * x - s * y;
        cq[k] = s * x + c * y;
    }
}

/// Lyapunov solves that share one Schur factorization of `A`.
///
/// The sparse-LQR inner loop needs both the observability form
/// (`AᵀP + PA = −Q`, or `AᵀPA − P = −Q`) and the controllability form
/// (`AL + LAᵀ = −Q`, or `ALAᵀ − L = −Q`) for the same closed-loop matrix.
#[derive(Debug, Clone)]
pub struct LyapunovSolver {
    schur: ComplexSchur,
    discrete: bool,
}

impl LyapunovSolver {
    /// Factor `a` for continuous-time equations; fails unless `a` is Hurwitz.
    pub fn continuous(a: &DMatrix<f64>, stability_tol: f64) -> Result<Self> {
        let schur = ComplexSchur::new(a)?;
        let max_real = schur.max_real_part();
        if max_real >= -stability_tol {
            return Err(Error::NotHurwitz { max_real });
        }
        Ok(Self { schur, discrete: false })
    }

    /// Factor `a` for discrete-time equations; fails unless `ρ(a) < 1`.
    pub fn discrete(a: &DMatrix<f64>, stability_tol: f64) -> Result<Self> {
        let schur = ComplexSchur::new(a)?;
        let radius = schur.spectral_radius();
        if radius >= 1.0 - stability_tol {
            return Err(Error::NotSchurStable { radius });
        }
        Ok(Self { schur, discrete: true })
    }

    pub fn schur(&self) -> &ComplexSchur {
        &self.schur
    }

    /// Solve `AᵀP + PA = −Q` (continuous) or `AᵀPA − P = −Q` (discrete).
    pub fn observability(&self, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dims(q.nrows() == self.schur.t.nrows() && q.is_square(), || "Q size".into())?;
        let t = &self.schur.t;
        let th = t.adjoint();
        let c = -self.schur.to_schur_basis(q);
        let y = if self.discrete {
            solve_triangular_equation(TriEquation::Stein, &th, Triangle::Lower, t, Triangle::Upper, &c)?
        } else {
            solve_triangular_equation(TriEquation::Sylvester, &th, Triangle::Lower, t, Triangle::Upper, &c)?
        };
        Ok(symmetrize(self.schur.from_schur_basis(&y)))
    }

    /// Solve `AL + LAᵀ = −Q` (continuous) or `ALAᵀ − L = −Q` (discrete).
    pub fn controllability(&self, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dims(q.nrows() == self.schur.t.nrows() && q.is_square(), || "Q size".into())?;
        let t = &self.schur.t;
        let th = t.adjoint();
        let c = -self.schur.to_schur_basis(q);
        let y = if self.discrete {
            solve_triangular_equation(TriEquation::Stein, t, Triangle::Upper, &th, Triangle::Lower, &c)?
        } else {
            solve_triangular_equation(TriEquation::Sylvester, t, Triangle::Upper, &th, Triangle::Lower, &c)?
        };
        Ok(symmetrize(self.schur.from_schur_basis(&y)))
    }
}

/// Solve `AᵀP + PA = −Q` for Hurwitz `A`.
pub fn solve_continuous_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square_pair(a, q)?;
    LyapunovSolver::continuous(a, DEFAULT_STABILITY_TOL)?.observability(q)
}

/// Solve `AᵀPA − P = −Q` for Schur-stable `A`.
pub fn solve_discrete_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square_pair(a, q)?;
    LyapunovSolver::discrete(a, DEFAULT_STABILITY_TOL)?.observability(q)
}

/// Solve `MX + XN = C` with `M` m×m, `N` n×n and `C` m×n.
pub fn solve_sylvester(m: &DMatrix<f64>, n: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dims(
        m.is_square() && n.is_square() && c.nrows() == m.nrows() && c.ncols() == n.nrows(),
        || {
            format!(
                "M {}x{}, N {}x{}, C {}x{}",
                m.nrows(),
                m.ncols(),
                n.nrows(),
                n.ncols(),
                c.nrows(),
                c.ncols()
            )
        },
    )?;
    let sm = ComplexSchur::new(m)?;
    let sn = ComplexSchur::new(n)?;
    let cc = c.map(|v| Complex64::new(v, 0.0));
    let ct = sm.u.adjoint() * cc * &sn.u;
    let y = solve_triangular_equation(TriEquation::Sylvester, &sm.t, Triangle::Upper, &sn.t, Triangle::Upper, &ct)?;
    let x = (&sm.u * y * sn.u.adjoint()).map(|v| v.re);
    Ok(x)
}

/// Sylvester solve for symmetric `M` and `N` through their eigenbases.
pub fn solve_sylvester_symmetric(
    m: &DMatrix<f64>,
    n: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_dims(
        m.is_square() && n.is_square() && c.nrows() == m.nrows() && c.ncols() == n.nrows(),
        || "symmetric Sylvester dimensions".into(),
    )?;
    let em = symmetric_eigen(m);
    let en = symmetric_eigen(n);
    let mut y = em.eigenvectors.transpose() * c * &en.eigenvectors;
    let scale = em.eigenvalues.amax() + en.eigenvalues.amax();
    for j in 0..y.ncols() {
        for i in 0..y.nrows() {
            let d = em.eigenvalues[i] + en.eigenvalues[j];
            if d.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::SingularPencil { gap: d.abs() });
            }
            y[(i, j)] /= d;
        }
    }
    Ok(&em.eigenvectors * y * en.eigenvectors.transpose())
}

/// Zero-order-hold discretization through the exponential of the augmented
/// matrix `[[Ac, Bc], [0, 0]]·dt`.
pub fn zoh_discretize(ac: &DMatrix<f64>, bc: &DMatrix<f64>, dt: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_dims(ac.is_square() && bc.nrows() == ac.nrows(), || {
        format!("Ac {}x{}, Bc {}x{}", ac.nrows(), ac.ncols(), bc.nrows(), bc.ncols())
    })?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::NonPositiveInput(format!("dt = {dt}")));
    }
    let n = ac.nrows();
    let m = bc.ncols();
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(ac * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(bc * dt));
    let e = aug.exp();
    if e.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix exponential".into()));
    }
    Ok((e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn symmetric_eigen_reconstructs_wide_range_matrix() {
        // block-coupled matrix with entries from 1e-2 to 1e10 and negative modes
        let n = 40;
        let h = DMatrix::from_fn(n, n, |i, j| {
            let scale = 10f64.powi(((i + j) % 13) as i32 - 2);
            let v = ((i * 7 + j * 7 + i * j) % 11) as f64 - 5.0;
            if i == j { scale * (v + 0.5) } else { 0.1 * scale * v }
        });
        let h = symmetrize(h);
        let e = symmetric_eigen(&h);
        let recon = &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues) * e.eigenvectors.transpose();
        assert!((&recon - &h).amax() <= 1e-12 * h.amax());
        let orth = e.eigenvectors.transpose() * &e.eigenvectors - DMatrix::identity(n, n);
        assert!(orth.amax() < 1e-12);
    }

    #[test]
    fn scalar_continuous_lyapunov() {
        let p = solve_continuous_lyapunov(&m(1, 1, &[-1.0]), &m(1, 1, &[2.0])).unwrap();
        assert_relative_eq!(p[(0, 0)], 1.0, epsilon = 1e-14);
        let p = solve_continuous_lyapunov(&m(1, 1, &[-1.0]), &m(1, 1, &[0.0])).unwrap();
        assert_eq!(p[(0, 0)], 0.0);
    }

    #[test]
    fn scalar_discrete_lyapunov() {
        let p = solve_discrete_lyapunov(&m(1, 1, &[0.5]), &m(1, 1, &[1.0])).unwrap();
        assert_relative_eq!(p[(0, 0)], 4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_a_discrete_lyapunov_returns_q() {
        let q = m(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let p = solve_discrete_lyapunov(&DMatrix::zeros(2, 2), &q).unwrap();
        assert_relative_eq!(p, q, epsilon = 1e-14);
    }

    #[test]
    fn unstable_inputs_rejected() {
        let e = solve_continuous_lyapunov(&m(1, 1, &[0.0]), &m(1, 1, &[1.0])).unwrap_err();
        assert!(matches!(e, Error::NotHurwitz { .. }));
        let e = solve_discrete_lyapunov(&m(1, 1, &[1.0]), &m(1, 1, &[1.0])).unwrap_err();
        assert!(matches!(e, Error::NotSchurStable { .. }));
        let e = solve_continuous_lyapunov(&m(1, 1, &[-1.0]), &DMatrix::zeros(2, 2)).unwrap_err();
        assert!(matches!(e, Error::DimensionMismatch(_)));
    }

    #[test]
    fn scalar_sylvester() {
        let x = solve_sylvester(&m(1, 1, &[1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[4.0])).unwrap();
        assert_relative_eq!(x[(0, 0)], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn sylvester_with_zero_n_is_inverse() {
        let mm = m(2, 2, &[3.0, 1.0, 0.0, 2.0]);
        let c = m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = solve_sylvester(&mm, &DMatrix::zeros(3, 3), &c).unwrap();
        let expect = mm.clone().try_inverse().unwrap() * &c;
        assert_relative_eq!(x, expect, epsilon = 1e-12);
    }

    #[test]
    fn sylvester_singular_pencil() {
        let e = solve_sylvester(&m(1, 1, &[1.0]), &m(1, 1, &[-1.0]), &m(1, 1, &[1.0])).unwrap_err();
        assert!(matches!(e, Error::SingularPencil { .. }));
    }

    #[test]
    fn sylvester_complex_eigenvalues() {
        // rotation-like blocks force 2x2 bumps in the real Schur form
        let mm = m(3, 3, &[0.0, 2.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let nn = m(2, 2, &[1.0, 3.0, -3.0, 1.0]);
        let c = m(3, 2, &[1.0, -1.0, 2.0, 0.5, 0.0, 3.0]);
        let x = solve_sylvester(&mm, &nn, &c).unwrap();
        let res = &mm * &x + &x * &nn - &c;
        assert!(res.norm() < 1e-12);
    }

    #[test]
    fn symmetric_sylvester_matches_general() {
        let mm = m(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let nn = m(3, 3, &[1.0, 0.1, 0.0, 0.1, 2.0, 0.2, 0.0, 0.2, 3.0]);
        let c = m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let a = solve_sylvester(&mm, &nn, &c).unwrap();
        let b = solve_sylvester_symmetric(&mm, &nn, &c).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn zoh_zero_dynamics() {
        let bc = m(2, 1, &[1.0, 2.0]);
        let (a, b) = zoh_discretize(&DMatrix::zeros(2, 2), &bc, 0.5).unwrap();
        assert_relative_eq!(a, DMatrix::identity(2, 2), epsilon = 1e-15);
        assert_relative_eq!(b, bc * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn zoh_double_integrator() {
        let dt = 10.0;
        let ac = m(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let bc = m(2, 1, &[0.0, 1.0]);
        let (a, b) = zoh_discretize(&ac, &bc, dt).unwrap();
        assert_relative_eq!(a, m(2, 2, &[1.0, dt, 0.0, 1.0]), epsilon = 1e-12);
        assert_relative_eq!(b, m(2, 1, &[dt * dt / 2.0, dt]), epsilon = 1e-12);
    }

    #[test]
    fn zoh_rejects_bad_dt() {
        let e = zoh_discretize(&DMatrix::zeros(1, 1), &DMatrix::zeros(1, 1), 0.0).unwrap_err();
        assert!(matches!(e, Error::NonPositiveInput(_)));
    }

    #[test]
    fn shared_factorization_gives_both_grammians() {
        let a = m(2, 2, &[0.5, 0.2, -0.1, 0.3]);
        let q = m(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let solver = LyapunovSolver::discrete(&a, DEFAULT_STABILITY_TOL).unwrap();
        let p = solver.observability(&q).unwrap();
        let l = solver.controllability(&q).unwrap();
        assert!((a.transpose() * &p * &a - &p + &q).norm() < 1e-13);
        assert!((&a * &l * a.transpose() - &l + &q).norm() < 1e-13);
        let cs = LyapunovSolver::continuous(&(&a - DMatrix::identity(2, 2)), DEFAULT_STABILITY_TOL).unwrap();
        let ac = &a - DMatrix::identity(2, 2);
        let l = cs.controllability(&q).unwrap();
        assert!((&ac * &l + &l * ac.transpose() + &q).norm() < 1e-13);
    }
}
