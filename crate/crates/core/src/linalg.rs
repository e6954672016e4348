//! Small fixed-size vector helpers. The state dimensions here are tiny and
//! known at compile time, so plain arrays beat a general linear-algebra crate.

pub type Vec3 = [f64; 3];
pub type Vec4 = [f64; 4];
pub type Mat4 = [[f64; 4]; 4];

#[inline]
pub fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm<const N: usize>(a: &[f64; N]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub<const N: usize>(a: &[f64; N], b: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| a[i] - b[i])
}

#[inline]
pub fn add<const N: usize>(a: &[f64; N], b: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| a[i] + b[i])
}

#[inline]
pub fn scale<const N: usize>(k: f64, a: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| k * a[i])
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn mat_vec(m: &Mat4, v: &Vec4) -> Vec4 {
    std::array::from_fn(|i| dot(&m[i], v))
}

#[inline]
pub fn mat_t_vec(m: &Mat4, v: &Vec4) -> Vec4 {
    std::array::from_fn(|j| (0..4).map(|i| m[i][j] * v[i]).sum())
}

pub fn transpose(m: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| m[j][i]))
}

pub fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

/// Maximum absolute componentwise difference.
pub fn max_abs_diff<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
