//! Restarted GMRES with right preconditioning.
//!
//! Textbook formulation: Arnoldi with modified Gram–Schmidt, complex
//! Givens rotations on the Hessenberg column, inner stop on the rotated
//! residual estimate |g_{j+1}|, and a true-residual check b − Ax at
//! every restart (so the reported residual never relies on the
//! estimate). Right preconditioning keeps the residual of the original
//! system: the update is x ← x + M(Σ yⱼVⱼ).

use crate::error::{Error, Result};
use crate::{par, C64};

/// Converged solve: the iterate, true relative residual, and the
/// per-iteration history of relative residual estimates.
pub struct GmresOutcome {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    par::sum_c64(a.len(), |i| a[i].conj() * b[i])
}

fn norm(a: &[C64]) -> f64 {
    par::sum_f64(a.len(), |i| a[i].norm_sqr()).sqrt()
}

/// y ← y + c·x
fn axpy(c: C64, x: &[C64], y: &mut [C64]) {
    par::for_each_index(y, |i, v| *v += c * x[i]);
}

/// GMRES(restart) on A·x = b with right preconditioner M.
///
/// `max_iter` caps the total number of inner (Krylov) iterations. On
/// success the true relative residual ‖b − Ax‖/‖b‖ is at most `tol`;
/// otherwise [`Error::NonConvergence`] carries the best iterate and the
/// whole history.
pub fn gmres<A, M>(
    apply_a: A,
    apply_m: M,
    b: &[C64],
    x0: Option<&[C64]>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<GmresOutcome>
where
    A: Fn(&[C64]) -> Vec<C64>,
    M: Fn(&[C64]) -> Vec<C64>,
{
    assert!(restart >= 1);
    let n = b.len();
    let bn = norm(b);
    let mut x = match x0 {
        Some(g) => {
            assert_eq!(g.len(), n);
            g.to_vec()
        }
        None => vec![C64::new(0.0, 0.0); n],
    };
    if bn == 0.0 {
        return Ok(GmresOutcome { x: vec![C64::new(0.0, 0.0); n], iterations: 0, residual: 0.0, history: Vec::new() });
    }

    let mut history: Vec<f64> = Vec::new();
    let mut it = 0usize;
    loop {
        // true residual at (re)start
        let ax = apply_a(&x);
        let mut rr: Vec<C64> = Vec::with_capacity(n);
        rr.extend(b.iter().zip(&ax).map(|(bi, ai)| bi - ai));
        let beta = norm(&rr);
        let rel = beta / bn;
        history.push(rel);
        if rel <= tol {
            return Ok(GmresOutcome { x, iterations: it, residual: rel, history });
        }
        if it >= max_iter {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: rel,
                tol,
                history,
                best: x,
            });
        }

        // Arnoldi cycle
        let m = restart;
        let mut v: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        {
            let inv = 1.0 / beta;
            let mut v0 = rr;
            par::for_each_index(&mut v0, |_i, c| *c *= inv);
            v.push(v0);
        }
        let mut hess = vec![vec![C64::new(0.0, 0.0); m]; m + 1];
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut cs = vec![C64::new(0.0, 0.0); m];
        let mut sn = vec![C64::new(0.0, 0.0); m];
        let mut k = 0usize;
        for j in 0..m {
            it += 1;
            let mut w = apply_a(&apply_m(&v[j]));
            for i in 0..=j {
                let hij = dot(&v[i], &w);
                hess[i][j] = hij;
                axpy(-hij, &v[i], &mut w);
            }
            let wn = norm(&w);
            hess[j + 1][j] = C64::new(wn, 0.0);
            // previously accumulated rotations; each is the unitary
            // [[c̄, s̄], [−s, c]] acting on rows (i, i+1)
            for i in 0..j {
                let t = cs[i].conj() * hess[i][j] + sn[i].conj() * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            // new rotation annihilating the subdiagonal
            let d = (hess[j][j].norm_sqr() + hess[j + 1][j].norm_sqr()).sqrt();
            if d == 0.0 {
                k = j;
                break;
            }
            cs[j] = hess[j][j] / d;
            sn[j] = hess[j + 1][j] / d;
            hess[j][j] = cs[j].conj() * hess[j][j] + sn[j].conj() * hess[j + 1][j];
            hess[j + 1][j] = C64::new(0.0, 0.0);
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j].conj() * g[j];
            k = j + 1;
            let est = g[j + 1].norm() / bn;
            history.push(est);
            if est <= tol || it >= max_iter {
                break;
            }
            let inv = 1.0 / wn;
            par::for_each_index(&mut w, |_i, c| *c *= inv);
            v.push(w);
        }

        if k > 0 {
            // back-substitution of the triangularized system
            let mut y = vec![C64::new(0.0, 0.0); k];
            for i in (0..k).rev() {
                let mut acc = g[i];
                for j in i + 1..k {
                    acc -= hess[i][j] * y[j];
                }
                y[i] = acc / hess[i][i];
            }
            let mut update = vec![C64::new(0.0, 0.0); n];
            for (j, yj) in y.iter().enumerate() {
                axpy(*yj, &v[j], &mut update);
            }
            let correction = apply_m(&update);
            axpy(C64::new(1.0, 0.0), &correction, &mut x);
        }
    }
}
