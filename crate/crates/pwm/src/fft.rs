//! Centered n-D FFTs matching the continuous e^{−ix·y} convention.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::grid::Grid;

fn transform_axes(values: &mut [Complex64], grid: &Grid, direction: FftDirection) {
    let n = grid.n;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(n, direction);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..grid.dim {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        let outer = grid.len() / (n * stride);
        for o in 0..outer {
            for s in 0..stride {
                let start = o * n * stride + s;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = values[start + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, l) in line.iter().enumerate() {
                    values[start + j * stride] = *l;
                }
            }
        }
    }
}

fn parity(grid: &Grid, flat: usize) -> f64 {
    let idx = grid.unflatten(flat);
    let s: usize = idx[..grid.dim].iter().sum();
    if s % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign (−1)^{Σ(k−n/2)} relating the shifted DFT index to centered frequencies.
fn freq_sign(grid: &Grid) -> f64 {
    if (grid.dim * (grid.n / 2)) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// F(ξ_k) ≈ hⁿ Σ_j f(x_j) e^{−i x_j·ξ_k}.
pub fn forward(grid: &Grid, values: &[Complex64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().enumerate().map(|(j, v)| v * parity(grid, j)).collect();
    transform_axes(&mut buf, grid, FftDirection::Forward);
    let c = grid.cell() * freq_sign(grid);
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= c * parity(grid, k);
    }
    buf
}

/// f(x_j) ≈ (2π)⁻ⁿ (π/L)ⁿ Σ_k F(ξ_k) e^{i x_j·ξ_k}; exact inverse of [`forward`].
pub fn inverse(grid: &Grid, values: &[Complex64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().enumerate().map(|(k, v)| v * parity(grid, k)).collect();
    transform_axes(&mut buf, grid, FftDirection::Inverse);
    let c = freq_sign(grid) / (grid.len() as f64 * grid.cell());
    for (j, v) in buf.iter_mut().enumerate() {
        *v *= c * parity(grid, j);
    }
    buf
}
