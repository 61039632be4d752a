use nalgebra::{DMatrix, LU};

use super::{FeedbackGain, SparseLqrProblem, TimeMode};
use crate::error::{Error, Result};

const MAX_ITER: usize = 100;

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn r_inverse(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    r.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::NotPositiveDefinite("R".into()))
}

/// Stabilizing solution of `P = AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA + Q` by the
/// structure-preserving doubling algorithm.
pub fn solve_dare(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut ak = a.clone();
    let mut gk = symmetrize(b * r_inverse(r)? * b.transpose());
    let mut hk = symmetrize(q.clone());
    let eye = DMatrix::<f64>::identity(n, n);
    for _ in 0..MAX_ITER {
        let w = LU::new(&eye + &gk * &hk);
        let wa = w.solve(&ak).ok_or_else(|| Error::RiccatiFailed("singular I + GH in doubling".into()))?;
        let wg = w.solve(&gk).ok_or_else(|| Error::RiccatiFailed("singular I + GH in doubling".into()))?;
        let h_next = symmetrize(&hk + ak.transpose() * &hk * &wa);
        let g_next = symmetrize(&gk + &ak * &wg * ak.transpose());
        let a_next = &ak * &wa;
        let change = (&h_next - &hk).norm();
        hk = h_next;
        gk = g_next;
        ak = a_next;
        if !hk.iter().all(|v| v.is_finite()) {
            return Err(Error::RiccatiFailed("doubling iteration diverged".into()));
        }
        if change <= 1e-14 * hk.norm() {
            return Ok(hk);
        }
    }
    Err(Error::RiccatiFailed("doubling did not converge".into()))
}

/// Stabilizing solution of `AᵀP + PA − PBR⁻¹BᵀP + Q = 0` through the matrix
/// sign function of the Hamiltonian.
pub fn solve_care(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let g = b * r_inverse(r)? * b.transpose();
    let mut z = DMatrix::zeros(2 * n, 2 * n);
    z.view_mut((0, 0), (n, n)).copy_from(a);
    z.view_mut((0, n), (n, n)).copy_from(&(-&g));
    z.view_mut((n, 0), (n, n)).copy_from(&(-q));
    z.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let lu = LU::new(z.clone());
        let log_det: f64 = lu.u().diagonal().iter().map(|d| d.abs().ln()).sum();
        if !log_det.is_finite() {
            return Err(Error::RiccatiFailed("Hamiltonian has eigenvalues on the imaginary axis".into()));
        }
        let c = (log_det / (2 * n) as f64).exp();
        let zinv = lu.try_inverse().ok_or_else(|| Error::RiccatiFailed("singular sign iterate".into()))?;
        let next = (&z / c + zinv * c) * 0.5;
        let change = (&next - &z).norm();
        z = next;
        if change <= 1e-13 * z.norm() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::RiccatiFailed("sign iteration did not converge".into()));
    }
    // [W12; W22 + I] P = −[W11 + I; W21]
    let eye = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&z.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n)).copy_from(&(z.view((n, n), (n, n)) + &eye));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(z.view((0, 0), (n, n)) + &eye)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-z.view((n, 0), (n, n))));
    let p = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::RiccatiFailed(e.to_string()))?;
    Ok(symmetrize(p))
}

/// Unstructured optimal gain from the algebraic Riccati equation.
pub fn centralized_gain(prob: &SparseLqrProblem) -> Result<FeedbackGain> {
    let f = match prob.time_mode {
        TimeMode::Discrete => {
            let p = solve_dare(&prob.a, &prob.b, &prob.q, &prob.r)?;
            let bp = prob.b.transpose() * &p;
            let rt = &prob.r + &bp * &prob.b;
            rt.cholesky()
                .ok_or_else(|| Error::RiccatiFailed("R + BᵀPB not positive definite".into()))?
                .solve(&(bp * &prob.a))
        }
        TimeMode::Continuous => {
            let p = solve_care(&prob.a, &prob.b, &prob.q, &prob.r)?;
            r_inverse(&prob.r)? * prob.b.transpose() * p
        }
    };
    if !prob.is_stabilizing(&f) {
        return Err(Error::RiccatiFailed("Riccati gain does not stabilize the plant".into()));
    }
    Ok(FeedbackGain::full(f))
}
