//! Symmetric positive definite 3x3 tensors (units 1/length^2).

use nalgebra::{Matrix3, Vector3};

/// Stored as the six independent components
/// `[m11, m12, m13, m22, m23, m33]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTensor {
    pub c: [f64; 6],
}

impl MetricTensor {
    pub fn new(c: [f64; 6]) -> Self {
        Self { c }
    }

    pub fn identity() -> Self {
        Self::isotropic(1.0)
    }

    /// `s * I`.
    pub fn isotropic(s: f64) -> Self {
        Self::new([s, 0.0, 0.0, s, 0.0, s])
    }

    /// Isotropic metric prescribing edge length `h`.
    pub fn from_spacing(h: f64) -> Self {
        Self::isotropic(1.0 / (h * h))
    }

    /// Diagonal metric prescribing spacing `h` per axis.
    pub fn from_spacings(h: [f64; 3]) -> Self {
        Self::new([
            1.0 / (h[0] * h[0]),
            0.0,
            0.0,
            1.0 / (h[1] * h[1]),
            0.0,
            1.0 / (h[2] * h[2]),
        ])
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        let [a, b, c, d, e, f] = self.c;
        Matrix3::new(a, b, c, b, d, e, c, e, f)
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Self::new([
            m[(0, 0)],
            0.5 * (m[(0, 1)] + m[(1, 0)]),
            0.5 * (m[(0, 2)] + m[(2, 0)]),
            m[(1, 1)],
            0.5 * (m[(1, 2)] + m[(2, 1)]),
            m[(2, 2)],
        ])
    }

    pub fn det(&self) -> f64 {
        let [a, b, c, d, e, f] = self.c;
        a * (d * f - e * e) - b * (b * f - c * e) + c * (b * e - c * d)
    }

    pub fn is_spd(&self) -> bool {
        // Sylvester's criterion on leading principal minors.
        let [a, b, _, d, _, _] = self.c;
        a > 0.0 && a * d - b * b > 0.0 && self.det() > 0.0
    }

    /// v^T M v.
    pub fn quadratic_form(&self, v: [f64; 3]) -> f64 {
        let [a, b, c, d, e, f] = self.c;
        a * v[0] * v[0]
            + d * v[1] * v[1]
            + f * v[2] * v[2]
            + 2.0 * (b * v[0] * v[1] + c * v[0] * v[2] + e * v[1] * v[2])
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.c.map(|x| x * s))
    }

    fn map_eigenvalues<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        let eig = self.to_matrix().symmetric_eigen();
        let d = Matrix3::from_diagonal(&Vector3::new(
            f(eig.eigenvalues[0]),
            f(eig.eigenvalues[1]),
            f(eig.eigenvalues[2]),
        ));
        let m = eig.eigenvectors * d * eig.eigenvectors.transpose();
        Self::from_matrix(&m)
    }

    pub fn log(&self) -> Self {
        self.map_eigenvalues(f64::ln)
    }

    pub fn exp(&self) -> Self {
        self.map_eigenvalues(f64::exp)
    }
}

/// exp of the arithmetic mean of logs. Interpolation that stays SPD.
pub fn log_euclidean_mean(tensors: &[MetricTensor]) -> MetricTensor {
    let mut acc = [0.0; 6];
    for t in tensors {
        let l = t.log();
        for k in 0..6 {
            acc[k] += l.c[k];
        }
    }
    let n = tensors.len() as f64;
    MetricTensor::new(acc.map(|x| x / n)).exp()
}

pub fn arithmetic_mean(tensors: &[MetricTensor]) -> MetricTensor {
    let mut acc = [0.0; 6];
    for t in tensors {
        for k in 0..6 {
            acc[k] += t.c[k];
        }
    }
    MetricTensor::new(acc.map(|x| x / tensors.len() as f64))
}
