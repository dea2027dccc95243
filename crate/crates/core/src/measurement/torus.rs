//! Fourier coefficients of triangles on the unit torus and their derivatives
//! with respect to the vertices.

use std::f64::consts::TAU;

use num_complex::Complex64;

/// `∫_0^1 s^j e^{-ius} ds` for `j ∈ {0, 1}`.
fn edge_moments(u: f64) -> (Complex64, Complex64) {
    if u.abs() < 1.0 {
        let mut m0 = Complex64::new(0.0, 0.0);
        let mut m1 = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..30 {
            m0 += term / (n as f64 + 1.0);
            m1 += term / (n as f64 + 2.0);
            term *= Complex64::new(0.0, -u) / (n as f64 + 1.0);
        }
        return (m0, m1);
    }
    let e = Complex64::new(0.0, -u).exp();
    let iu = Complex64::new(0.0, u);
    let m0 = (Complex64::new(1.0, 0.0) - e) / iu;
    let m1 = (m0 - e) / iu;
    (m0, m1)
}

fn signed_area(v: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
}

/// `∫_T e^{-2πi⟨k, x⟩} dx`.
pub(crate) fn triangle_coefficient(v: &[[f64; 2]; 3], k: [i64; 2]) -> Complex64 {
    let area = signed_area(v);
    if k == [0, 0] {
        return Complex64::new(area.abs(), 0.0);
    }
    let xi = [TAU * k[0] as f64, TAU * k[1] as f64];
    let xi2 = xi[0] * xi[0] + xi[1] * xi[1];
    let orient = area.signum();
    let mut total = Complex64::new(0.0, 0.0);
    for e in 0..3 {
        let p = v[e];
        let q = v[(e + 1) % 3];
        let d = [q[0] - p[0], q[1] - p[1]];
        // Outward normal scaled by the edge length.
        let normal = [orient * d[1], -orient * d[0]];
        let flux = Complex64::new(0.0, (xi[0] * normal[0] + xi[1] * normal[1]) / xi2);
        let phase = Complex64::new(0.0, -(xi[0] * p[0] + xi[1] * p[1])).exp();
        let (m0, _) = edge_moments(xi[0] * d[0] + xi[1] * d[1]);
        total += flux * phase * m0;
    }
    total
}

/// Derivatives of the coefficient with respect to `(v_i)_j`, ordered
/// `[v0x, v0y, v1x, v1y, v2x, v2y]`: the boundary flux of the vertex velocity.
pub(crate) fn triangle_coefficient_gradient(v: &[[f64; 2]; 3], k: [i64; 2]) -> [Complex64; 6] {
    let orient = signed_area(v).signum();
    let xi = [TAU * k[0] as f64, TAU * k[1] as f64];
    let mut grad = [Complex64::new(0.0, 0.0); 6];
    for e in 0..3 {
        let (i, j) = (e, (e + 1) % 3);
        let p = v[i];
        let q = v[j];
        let d = [q[0] - p[0], q[1] - p[1]];
        let normal = [orient * d[1], -orient * d[0]];
        let phase = Complex64::new(0.0, -(xi[0] * p[0] + xi[1] * p[1])).exp();
        let (m0, m1) = edge_moments(xi[0] * d[0] + xi[1] * d[1]);
        // Velocity weight (1 - s) for the start vertex, s for the end vertex.
        let w_start = phase * (m0 - m1);
        let w_end = phase * m1;
        for c in 0..2 {
            grad[2 * i + c] += w_start * normal[c];
            grad[2 * j + c] += w_end * normal[c];
        }
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_frequency_is_area() {
        let t = [[0.1, 0.1], [0.6, 0.2], [0.3, 0.5]];
        let c = triangle_coefficient(&t, [0, 0]);
        assert!((c.re - 0.5 * (0.5 * 0.4 - 0.2 * 0.1)).abs() < 1e-15);
    }

    #[test]
    fn matches_direct_quadrature_on_a_right_triangle() {
        // T = {x, y >= 0, x + y <= 1/2}; integrate the inner x-integral exactly.
        let t = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]];
        let k = [2i64, -1i64];
        let m = 4000;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..m {
            let y = (j as f64 + 0.5) * 0.5 / m as f64;
            let xmax = 0.5 - y;
            let a = TAU * k[0] as f64;
            let inner = (Complex64::new(1.0, 0.0) - Complex64::new(0.0, -a * xmax).exp()) / Complex64::new(0.0, a);
            acc += inner * Complex64::new(0.0, -TAU * k[1] as f64 * y).exp() * (0.5 / m as f64);
        }
        let c = triangle_coefficient(&t, k);
        assert!((c - acc).norm() < 1e-7, "{c} vs {acc}");
    }
}
