//! Fast diagonalization of the shifted discrete Laplacian.
//!
//! On the interior lattice (n = N−2 unknowns per axis, homogeneous
//! Dirichlet ring) the discrete Laplacian separates, and each 1-D factor
//! is diagonalized by the type-I discrete sine transform with
//! eigenvalues −2(1−cos(πk/(n+1)))/h², k = 1..n. The shifted inverse
//! M = (Δ_h + σ)⁻¹ used as a preconditioner is therefore a forward
//! sine transform along every axis, a diagonal division, and an inverse
//! transform. Each line transform is computed as a complex FFT of the
//! odd extension of length 2(n+1), applied to the real and imaginary
//! parts at once by linearity.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;
use crate::{par, C64};

pub(crate) struct CslPlan {
    grid: Grid,
    /// Interior points per axis.
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    sigma: C64,
    /// Positive 1-D eigenvalues 2(1−cos(π(k+1)/(n+1)))/h², k 0-based.
    lam1d: Vec<f64>,
}

impl CslPlan {
    pub fn new(grid: Grid, sigma: C64) -> CslPlan {
        let n = grid.points - 2;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * (n + 1));
        let lam1d = (0..n)
            .map(|k| {
                2.0 * (1.0 - (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos())
                    / (grid.h * grid.h)
            })
            .collect();
        CslPlan { grid, n, fft, sigma, lam1d }
    }

    /// DST-I of every contiguous line (last axis), in place.
    fn transform_lines(&self, data: &mut [C64]) {
        let n = self.n;
        let fft = &self.fft;
        par::for_each_block(data, n, |_b, line| {
            let mut buf = vec![C64::new(0.0, 0.0); 2 * (n + 1)];
            for (j, v) in line.iter().enumerate() {
                buf[1 + j] = *v;
                buf[2 * n + 1 - j] = -*v;
            }
            fft.process(&mut buf);
            let half_i = C64::new(0.0, 0.5);
            for (k, v) in line.iter_mut().enumerate() {
                *v = buf[k + 1] * half_i;
            }
        });
    }

    /// Cyclically rotate the axes so the next-to-be-transformed axis
    /// becomes contiguous; d applications restore the original layout.
    fn rotate_axes(&self, data: &[C64], out: &mut [C64]) {
        let n = self.n;
        if self.grid.dimension == 2 {
            par::fill_c64(out, |e| data[(e % n) * n + e / n]);
        } else {
            let n2 = n * n;
            par::fill_c64(out, |e| {
                let (j, k, i) = (e / n2, (e / n) % n, e % n);
                data[(i * n + j) * n + k]
            });
        }
    }

    /// All-axis sine transform (unnormalized; applying it twice scales
    /// by ((n+1)/2)^d).
    fn dst_all_axes(&self, data: &mut Vec<C64>, scratch: &mut Vec<C64>) {
        for _ in 0..self.grid.dimension {
            self.transform_lines(data);
            self.rotate_axes(data, scratch);
            std::mem::swap(data, scratch);
        }
    }

    /// Apply M = (Δ_h + σ)⁻¹ to a full-grid vector (boundary ring
    /// ignored on input, zero on output).
    pub fn apply(&self, full: &[C64]) -> Vec<C64> {
        let grid = &self.grid;
        let (n, d, np) = (self.n, grid.dimension, grid.points);
        let interior_count = n.pow(d as u32);

        // full-grid index of interior multi-index p
        let to_full = |p: usize| -> usize {
            let mut rest = p;
            let mut m = 0;
            for a in 0..d {
                let stride = n.pow((d - 1 - a) as u32);
                let ia = rest / stride;
                rest %= stride;
                m = m * np + (ia + 1);
            }
            m
        };

        let mut data = vec![C64::new(0.0, 0.0); interior_count];
        par::fill_c64(&mut data, |p| full[to_full(p)]);
        let mut scratch = vec![C64::new(0.0, 0.0); interior_count];

        self.dst_all_axes(&mut data, &mut scratch);

        let sigma = self.sigma;
        let lam1d = &self.lam1d;
        par::for_each_index(&mut data, |p, v| {
            let mut rest = p;
            let mut lap = 0.0;
            for a in 0..d {
                let stride = n.pow((d - 1 - a) as u32);
                lap += lam1d[rest / stride];
                rest %= stride;
            }
            *v /= sigma - lap;
        });

        self.dst_all_axes(&mut data, &mut scratch);

        let scale = (2.0 / (n + 1) as f64).powi(d as i32);
        let mut out = vec![C64::new(0.0, 0.0); grid.node_count()];
        par::for_each_index(&mut data, |_p, v| *v *= scale);
        for p in 0..interior_count {
            out[to_full(p)] = data[p];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    /// Apply the plain interior Laplacian to a full-grid vector.
    fn laplacian(grid: Grid, u: &[C64]) -> Vec<C64> {
        let d = grid.dimension;
        let h2 = grid.h * grid.h;
        let mut out = vec![C64::new(0.0, 0.0); grid.node_count()];
        for m in 0..grid.node_count() {
            if grid.is_boundary(m) {
                continue;
            }
            let mut acc = u[m] * (-2.0 * d as f64);
            for a in 0..d {
                let s = grid.stride(a);
                acc += u[m + s] + u[m - s];
            }
            out[m] = acc / h2;
        }
        out
    }

    #[test]
    fn csl_inverts_the_shifted_laplacian() {
        for (d, np) in [(2usize, 17usize), (3, 17)] {
            let grid = build_grid(d, 4.0, np).unwrap();
            let sigma = C64::new(1.3, 0.7);
            let plan = CslPlan::new(grid, sigma);
            // pseudo-random but deterministic full-grid data, ring zero
            let mut v = vec![C64::new(0.0, 0.0); grid.node_count()];
            for (m, slot) in v.iter_mut().enumerate() {
                if !grid.is_boundary(m) {
                    let t = m as f64;
                    *slot = C64::new((t * 0.37).sin(), (t * 0.59).cos());
                }
            }
            let w = plan.apply(&v);
            // (Δ_h + σ) w should reproduce v on the interior
            let mut aw = laplacian(grid, &w);
            for (m, slot) in aw.iter_mut().enumerate() {
                if !grid.is_boundary(m) {
                    *slot += sigma * w[m];
                }
            }
            let err: f64 = aw
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "d={d}: residual {err}");
        }
    }
}
