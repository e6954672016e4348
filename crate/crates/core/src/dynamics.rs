//! Hamiltonians, vector fields and the variational matrix, Cartesian and
//! regularized.
//!
//! All derivatives are written out by hand. Finite differences only show up
//! in the tests.

use crate::error::{Body, Error, Result};
use crate::frames::SystemParams;
use crate::ks::{b_vector, ks_matrix, project, CartesianState, KsState};
use crate::linalg::{dot, Mat4, Vec3, Vec4};

/// Distances below this are treated as a collision.
pub const COLLISION_DISTANCE: f64 = 1e-300;

/// The pulsating factor `1 / (1 + eps cos f)`.
#[inline]
pub fn pulsation(f: f64, eps: f64) -> f64 {
    1.0 / (1.0 + eps * f.cos())
}

/// Derivative of [`pulsation`] with respect to `f`.
#[inline]
pub fn pulsation_rate(f: f64, eps: f64) -> f64 {
    let den = 1.0 + eps * f.cos();
    eps * f.sin() / (den * den)
}

fn primary_distances(r: &Vec3, params: &SystemParams) -> Result<(f64, f64)> {
    let mu = params.mu;
    let d1 = ((r[0] + mu).powi(2) + r[1] * r[1] + r[2] * r[2]).sqrt();
    let d2 = ((r[0] - (1.0 - mu)).powi(2) + r[1] * r[1] + r[2] * r[2]).sqrt();
    if d1 <= COLLISION_DISTANCE {
        return Err(Error::Collision {
            body: Body::Primary,
            distance: d1,
        });
    }
    if d2 <= COLLISION_DISTANCE {
        return Err(Error::Collision {
            body: Body::Secondary,
            distance: d2,
        });
    }
    Ok((d1, d2))
}

/// Gravitational bracket `(1-mu)/d1 + mu/d2 - r^2 eps cos f / 2`.
fn potential_bracket(r: &Vec3, f: f64, d1: f64, d2: f64, params: &SystemParams) -> f64 {
    let mu = params.mu;
    (1.0 - mu) / d1 + mu / d2 - 0.5 * dot(r, r) * params.eps * f.cos()
}

/// The Hamiltonian in rotating-pulsating coordinates (without the action).
pub fn hamiltonian_cartesian(state: &CartesianState, params: &SystemParams) -> Result<f64> {
    let (d1, d2) = primary_distances(&state.r, params)?;
    let (r, p) = (&state.r, &state.p);
    let kinetic = 0.5 * dot(p, p) + p[0] * r[1] - r[0] * p[1];
    Ok(kinetic - pulsation(state.f, params.eps) * potential_bracket(r, state.f, d1, d2, params))
}

/// `H + Phi`, identically zero on admissible extended states.
pub fn extended_hamiltonian(state: &CartesianState, params: &SystemParams) -> Result<f64> {
    Ok(hamiltonian_cartesian(state, params)? + state.action)
}

/// Partial derivative of the Hamiltonian with respect to `f`.
pub fn hamiltonian_time_derivative(state: &CartesianState, params: &SystemParams) -> Result<f64> {
    let (d1, d2) = primary_distances(&state.r, params)?;
    let eps = params.eps;
    let f = state.f;
    let bracket = potential_bracket(&state.r, f, d1, d2, params);
    let r2 = dot(&state.r, &state.r);
    Ok(-pulsation_rate(f, eps) * bracket - pulsation(f, eps) * 0.5 * r2 * eps * f.sin())
}

/// The f-dependent Jacobi function, evaluated from velocities.
///
/// Along any state it coincides with the Hamiltonian; it is not conserved
/// unless `eps = 0`.
pub fn jacobi_value(state: &CartesianState, params: &SystemParams) -> Result<f64> {
    let (d1, d2) = primary_distances(&state.r, params)?;
    let v = state.velocity();
    let [x, y, z] = state.r;
    let mu = params.mu;
    let ec = params.eps * state.f.cos();
    let pot = (1.0 - mu) / d1 + mu / d2 + 0.5 * (x * x + y * y - z * z * ec);
    Ok(0.5 * dot(&v, &v) - pulsation(state.f, params.eps) * pot)
}

/// Jacobi constant of the circular problem, `-2 H`.
pub fn jacobi_constant(state: &CartesianState, params: &SystemParams) -> Result<f64> {
    Ok(-2.0 * jacobi_value(state, params)?)
}

/// Hamilton's equations of the extended Cartesian system with respect to
/// `f`. Layout as [`CartesianState::to_array`]; the seventh component is
/// `df/df = 1`.
pub fn vector_field_cartesian(y: &[f64; 8], params: &SystemParams) -> Result<[f64; 8]> {
    let r = [y[0], y[1], y[2]];
    let p = [y[3], y[4], y[5]];
    let f = y[6];
    let (d1, d2) = primary_distances(&r, params)?;
    let mu = params.mu;
    let eps = params.eps;
    let c = pulsation(f, eps);
    let (sf, cf) = f.sin_cos();
    let k1 = (1.0 - mu) / (d1 * d1 * d1);
    let k2 = mu / (d2 * d2 * d2);
    let r1 = [-mu, 0.0, 0.0];
    let r2 = [1.0 - mu, 0.0, 0.0];
    let grad: Vec3 = std::array::from_fn(|i| {
        c * (k1 * (r[i] - r1[i]) + k2 * (r[i] - r2[i]) + r[i] * eps * cf)
    });
    let rr = dot(&r, &r);
    let bracket = (1.0 - mu) / d1 + mu / d2 - 0.5 * rr * eps * cf;
    let dh_df = -pulsation_rate(f, eps) * bracket - c * 0.5 * rr * eps * sf;
    Ok([
        p[0] + r[1],
        p[1] - r[0],
        p[2],
        p[1] - grad[0],
        -p[0] - grad[1],
        -grad[2],
        1.0,
        -dh_df,
    ])
}

/// The regularizing function `G` with `W = |u|^2 G + mu`, its gradient and
/// Hessian in `q`.
struct PotentialQ {
    g: f64,
    grad: Vec3,
    hess: [[f64; 3]; 3],
}

fn potential_q(q: &Vec3, phi: f64, params: &SystemParams) -> Result<PotentialQ> {
    let mu = params.mu;
    let ec = params.eps * phi.cos();
    let w = [q[0] + 1.0, q[1], q[2]];
    let d = dot(&w, &w).sqrt();
    if d <= COLLISION_DISTANCE {
        return Err(Error::Collision {
            body: Body::Primary,
            distance: d,
        });
    }
    let d3 = d * d * d;
    let d5 = d3 * d * d;
    let s = q[0] * q[0] + q[1] * q[1] - q[2] * q[2] * ec;
    let g = (1.0 - mu) * (1.0 / d + q[0]) + 0.5 * s + 0.5 * (1.0 - mu) * (1.0 - mu);
    let grad = [
        (1.0 - mu) * (1.0 - w[0] / d3) + q[0],
        -(1.0 - mu) * w[1] / d3 + q[1],
        -(1.0 - mu) * w[2] / d3 - q[2] * ec,
    ];
    let diag = [1.0, 1.0, -ec];
    let hess = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            (1.0 - mu) * (3.0 * w[i] * w[j] / d5 - delta / d3) + delta * diag[i]
        })
    });
    Ok(PotentialQ { g, grad, hess })
}

/// Jacobian of `pi`, `2` times the first three rows of `A(u)`.
fn projection_jacobian(u: &Vec4) -> [[f64; 4]; 3] {
    let a = ks_matrix(u);
    std::array::from_fn(|i| std::array::from_fn(|j| 2.0 * a[i][j]))
}

/// Constant Hessians of the three components of `pi`.
const PROJECTION_HESSIANS: [Mat4; 3] = [
    [
        [2.0, 0.0, 0.0, 0.0],
        [0.0, -2.0, 0.0, 0.0],
        [0.0, 0.0, -2.0, 0.0],
        [0.0, 0.0, 0.0, 2.0],
    ],
    [
        [0.0, 2.0, 0.0, 0.0],
        [2.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -2.0],
        [0.0, 0.0, -2.0, 0.0],
    ],
    [
        [0.0, 0.0, 2.0, 0.0],
        [0.0, 0.0, 0.0, 2.0],
        [2.0, 0.0, 0.0, 0.0],
        [0.0, 2.0, 0.0, 0.0],
    ],
];

// row1(A(u)) = E1 u, row2(A(u)) = E2 u
const E1: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];
const E2: Mat4 = [
    [0.0, 1.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, -1.0, 0.0],
];

/// Jacobian `db_i/du_j` of [`b_vector`].
pub fn b_jacobian(u: &Vec4) -> Mat4 {
    let a = ks_matrix(u);
    let (r1, r2) = (a[0], a[1]);
    let q = project(u);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            2.0 * (-2.0 * r2[j] * r1[i] - q[1] * E1[i][j] + 2.0 * r1[j] * r2[i] + q[0] * E2[i][j])
        })
    })
}

/// Contraction `sum_i v_i d^2 b_i / du_j du_k`.
fn b_second_contracted(u: &Vec4, v: &Vec4) -> Mat4 {
    let a = ks_matrix(u);
    let (r1, r2) = (a[0], a[1]);
    let e1v: Vec4 = std::array::from_fn(|k| dot(&E1[k], v));
    let e2v: Vec4 = std::array::from_fn(|k| dot(&E2[k], v));
    let vr1 = dot(v, &r1);
    let vr2 = dot(v, &r2);
    std::array::from_fn(|j| {
        std::array::from_fn(|k| {
            2.0 * (-2.0 * (E2[j][k] * vr1 + r2[j] * e1v[k]) + 2.0 * (E1[j][k] * vr2 + r1[j] * e2v[k])
                - 2.0 * r2[k] * e1v[j]
                + 2.0 * r1[k] * e2v[j])
        })
    })
}

/// Pieces of the regularized potential `W` needed by the field.
struct RegularizedPotential {
    w: f64,
    grad_u: Vec4,
    dw_dphi: f64,
}

fn regularized_potential(u: &Vec4, phi: f64, params: &SystemParams) -> Result<RegularizedPotential> {
    let q = project(u);
    let r = dot(u, u);
    let pq = potential_q(&q, phi, params)?;
    let jq = projection_jacobian(u);
    let grad_g: Vec4 = std::array::from_fn(|j| (0..3).map(|i| jq[i][j] * pq.grad[i]).sum());
    Ok(RegularizedPotential {
        w: r * pq.g + params.mu,
        grad_u: std::array::from_fn(|j| 2.0 * u[j] * pq.g + r * grad_g[j]),
        dw_dphi: 0.5 * r * q[2] * q[2] * params.eps * phi.sin(),
    })
}

fn ks_arrays(y: &[f64; 10]) -> (Vec4, f64, Vec4, f64) {
    ([y[0], y[1], y[2], y[3]], y[4], [y[5], y[6], y[7], y[8]], y[9])
}

/// The regularized Hamiltonian `K(u, phi, U, Phi)`.
pub fn hamiltonian_regularized(state: &KsState, params: &SystemParams) -> Result<f64> {
    hamiltonian_regularized_array(&state.to_array(), params)
}

/// [`hamiltonian_regularized`] on the flat layout of [`KsState::to_array`].
pub fn hamiltonian_regularized_array(y: &[f64; 10], params: &SystemParams) -> Result<f64> {
    let (u, phi, big_u, action) = ks_arrays(y);
    let b = b_vector(&u);
    let v: Vec4 = std::array::from_fn(|i| big_u[i] - b[i]);
    let r = dot(&u, &u);
    let q = project(&u);
    let pq = potential_q(&q, phi, params)?;
    let w = r * pq.g + params.mu;
    Ok(0.125 * dot(&v, &v) - pulsation(phi, params.eps) * w + action * r)
}

/// `K / |u|^2`, the autonomous Hamiltonian before rescaling.
pub fn hamiltonian_regularized_normalized(state: &KsState, params: &SystemParams) -> Result<f64> {
    let r = state.distance_to_secondary();
    if r == 0.0 {
        return Err(Error::Collision {
            body: Body::Secondary,
            distance: 0.0,
        });
    }
    Ok(hamiltonian_regularized(state, params)? / r)
}

/// The regularized Hamiltonian split as
/// `|U - b|^2 / 8 - Gamma |u|^2 - mu c(phi) + R6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedSplit {
    pub kinetic: f64,
    pub quadratic: f64,
    pub mass_term: f64,
    pub remainder: f64,
}

impl RegularizedSplit {
    pub fn total(&self) -> f64 {
        self.kinetic + self.quadratic + self.mass_term + self.remainder
    }
}

/// Independent evaluation of the regularized Hamiltonian through its split
/// into the hyperbolic quadratic part and the remainder `R6`.
pub fn hamiltonian_regularized_split(state: &KsState, params: &SystemParams) -> Result<RegularizedSplit> {
    let mu = params.mu;
    let u = &state.u;
    let phi = state.angle;
    let r = dot(u, u);
    let q = project(u);
    let d = ((q[0] + 1.0).powi(2) + q[1] * q[1] + q[2] * q[2]).sqrt();
    if d <= COLLISION_DISTANCE {
        return Err(Error::Collision {
            body: Body::Primary,
            distance: d,
        });
    }
    let c = pulsation(phi, params.eps);
    let b = b_vector(u);
    let v: Vec4 = std::array::from_fn(|i| state.momenta[i] - b[i]);
    let s = q[0] * q[0] + q[1] * q[1] - q[2] * q[2] * params.eps * phi.cos();
    // 1/D + q1 - 1 = O(|q|^2); write it without cancellation
    let d_minus = (d * d - 1.0) / (d + 1.0); // D - 1
    let near = -d_minus / d + q[0];
    Ok(RegularizedSplit {
        kinetic: 0.125 * dot(&v, &v),
        quadratic: -gamma(phi, state.action, params) * r,
        mass_term: -mu * c,
        remainder: -c * ((1.0 - mu) * r * near + 0.5 * r * s),
    })
}

/// The hyperbolicity parameter `Gamma(phi, Phi)`.
pub fn gamma(phi: f64, action: f64, params: &SystemParams) -> f64 {
    let mu = params.mu;
    -action + (3.0 - 4.0 * mu + mu * mu) * 0.5 * pulsation(phi, params.eps)
}

/// Hamilton's equations of the regularized Hamiltonian with respect to the
/// fictitious anomaly `s`. Layout as [`KsState::to_array`].
pub fn vector_field_ks(y: &[f64; 10], params: &SystemParams) -> Result<[f64; 10]> {
    let (u, phi, big_u, action) = ks_arrays(y);
    let eps = params.eps;
    let c = pulsation(phi, eps);
    let b = b_vector(&u);
    let v: Vec4 = std::array::from_fn(|i| big_u[i] - b[i]);
    let jb = b_jacobian(&u);
    let pot = regularized_potential(&u, phi, params)?;
    let r = dot(&u, &u);
    let mut out = [0.0; 10];
    for i in 0..4 {
        out[i] = 0.25 * v[i];
        let jbt_v: f64 = (0..4).map(|k| jb[k][i] * v[k]).sum();
        out[5 + i] = 0.25 * jbt_v + c * pot.grad_u[i] - 2.0 * action * u[i];
    }
    out[4] = r;
    out[9] = pulsation_rate(phi, eps) * pot.w + c * pot.dw_dphi;
    Ok(out)
}

/// 8x8 variational matrix over the `(u, U)` block.
pub type VariationalMatrix = [[f64; 8]; 8];

/// Hessian in `u` of the regularized Hamiltonian at fixed `(phi, U, Phi)`.
pub fn hessian_uu(y: &[f64; 10], params: &SystemParams) -> Result<Mat4> {
    let (u, phi, big_u, action) = ks_arrays(y);
    let c = pulsation(phi, params.eps);
    let b = b_vector(&u);
    let v: Vec4 = std::array::from_fn(|i| big_u[i] - b[i]);
    let jb = b_jacobian(&u);
    let b2 = b_second_contracted(&u, &v);

    let q = project(&u);
    let r = dot(&u, &u);
    let pq = potential_q(&q, phi, params)?;
    let jq = projection_jacobian(&u);
    let grad_g: Vec4 = std::array::from_fn(|j| (0..3).map(|i| jq[i][j] * pq.grad[i]).sum());
    let mut hess = [[0.0; 4]; 4];
    for j in 0..4 {
        for k in 0..4 {
            let mut hg = 0.0;
            for a in 0..3 {
                for bb in 0..3 {
                    hg += jq[a][j] * pq.hess[a][bb] * jq[bb][k];
                }
                hg += pq.grad[a] * PROJECTION_HESSIANS[a][j][k];
            }
            let delta = if j == k { 1.0 } else { 0.0 };
            let hess_w = 2.0 * pq.g * delta + 2.0 * u[j] * grad_g[k] + 2.0 * grad_g[j] * u[k] + r * hg;
            let hess_t: f64 =
                0.25 * (0..4).map(|i| jb[i][j] * jb[i][k]).sum::<f64>() - 0.25 * b2[j][k];
            hess[j][k] = hess_t - c * hess_w + 2.0 * action * delta;
        }
    }
    Ok(hess)
}

/// Jacobian of the `(u, U)` components of [`vector_field_ks`] with respect
/// to `(u, U)`, with `(phi, Phi)` held fixed.
pub fn variational_matrix(y: &[f64; 10], params: &SystemParams) -> Result<VariationalMatrix> {
    let u = [y[0], y[1], y[2], y[3]];
    let jb = b_jacobian(&u);
    let h = hessian_uu(y, params)?;
    let mut x = [[0.0; 8]; 8];
    for i in 0..4 {
        for j in 0..4 {
            x[i][j] = -0.25 * jb[i][j];
            x[4 + i][j] = -h[i][j];
            x[4 + i][4 + j] = 0.25 * jb[j][i];
        }
        x[i][4 + i] = 0.25;
    }
    Ok(x)
}

/// The limit matrix at `u = U = 0`: blocks `0, I/4; 2 Gamma I, 0`.
pub fn variational_matrix_origin(gamma_s: f64) -> VariationalMatrix {
    let mut x = [[0.0; 8]; 8];
    for i in 0..4 {
        x[i][4 + i] = 0.25;
        x[4 + i][i] = 2.0 * gamma_s;
    }
    x
}

/// Eigenvalues of the origin matrix, `+-sqrt(Gamma/2)` each with
/// multiplicity four. Returns `None` when `Gamma <= 0`.
pub fn origin_exponent(gamma_s: f64) -> Option<f64> {
    (gamma_s > 0.0).then(|| (0.5 * gamma_s).sqrt())
}

/// Closed form of `d Gamma / ds` along the regularized flow.
pub fn gamma_rate(y: &[f64; 10], params: &SystemParams) -> Result<f64> {
    let field = vector_field_ks(y, params)?;
    let mu = params.mu;
    let phi = y[4];
    let dphi = field[4];
    let dc = pulsation_rate(phi, params.eps);
    Ok(-field[9] + (3.0 - 4.0 * mu + mu * mu) * 0.5 * dc * dphi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ks::{bilinear_l, fibre_rotation, lift};
    use crate::linalg::mat_vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SJ: SystemParams = SystemParams::SUN_JUPITER;

    fn flyby() -> CartesianState {
        CartesianState {
            r: [1.0 - SJ.mu + 1.921451079855507e-3, 0.0, 0.0],
            p: [0.2, 1.8, 0.6],
            f: 0.0,
            action: 1.3822065668799341,
        }
    }

    fn random_cartesian(rng: &mut ChaCha8Rng) -> CartesianState {
        loop {
            let s = CartesianState {
                r: std::array::from_fn(|_| rng.gen_range(-1.5..1.5)),
                p: std::array::from_fn(|_| rng.gen_range(-1.5..1.5)),
                f: rng.gen_range(-3.0..3.0),
                action: rng.gen_range(-2.0..2.0),
            };
            if s.distance_to_primary(&SJ) > 0.1 && s.distance_to_secondary(&SJ) > 0.05 {
                return s;
            }
        }
    }

    fn random_ks(rng: &mut ChaCha8Rng, radius: f64) -> [f64; 10] {
        let mut y = [0.0; 10];
        for v in y.iter_mut().take(4) {
            *v = rng.gen_range(-radius..radius);
        }
        y[4] = rng.gen_range(-3.0..3.0);
        for v in y.iter_mut().skip(5).take(4) {
            *v = rng.gen_range(-0.5..0.5);
        }
        y[9] = rng.gen_range(-2.0..2.0);
        y
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-3)
    }

    #[test]
    fn flyby_hamiltonian() {
        let h = hamiltonian_cartesian(&flyby(), &SJ).unwrap();
        assert!((h + 1.38220656687993415599).abs() < 1e-13, "{h}");
        assert!(extended_hamiltonian(&flyby(), &SJ).unwrap().abs() < 1e-13);
    }

    #[test]
    fn flyby_regularized_vanishes() {
        let ks = lift(&flyby(), &SJ).unwrap();
        let k = hamiltonian_regularized(&ks, &SJ).unwrap();
        assert!(k.abs() < 1e-13, "{k}");
    }

    #[test]
    fn regularized_is_rescaled_extended_hamiltonian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let c = random_cartesian(&mut rng);
            let ks = lift(&c, &SJ).unwrap();
            let k = hamiltonian_regularized(&ks, &SJ).unwrap();
            let h = extended_hamiltonian(&c, &SJ).unwrap();
            let r = ks.distance_to_secondary();
            assert!((k - r * h).abs() <= 1e-12 * (1.0 + (r * h).abs()), "{k} vs {}", r * h);
        }
    }

    #[test]
    fn regularized_at_origin() {
        for phi in [0.0, 1.0, 2.5] {
            let ks = KsState {
                u: [0.0; 4],
                angle: phi,
                momenta: [0.3, -0.1, 0.2, 0.4],
                action: 0.7,
                s: 0.0,
            };
            let k = hamiltonian_regularized(&ks, &SJ).unwrap();
            let expected = 0.3f64 / 8.0 - SJ.mu / (1.0 + SJ.eps * phi.cos());
            assert!((k - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn split_agrees_with_direct_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rad = SJ.hill_radius_u();
        for _ in 0..1000 {
            let y = random_ks(&mut rng, rad / 2.0);
            let ks = KsState::from_array(&y, 0.0);
            let direct = hamiltonian_regularized(&ks, &SJ).unwrap();
            let split = hamiltonian_regularized_split(&ks, &SJ).unwrap();
            assert!((direct - split.total()).abs() <= 1e-13, "{direct} {}", split.total());
        }
    }

    #[test]
    fn fibre_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let y = random_ks(&mut rng, 0.8);
            let ks = KsState::from_array(&y, 0.0);
            let s = fibre_rotation(rng.gen_range(0.0..6.3));
            let rot = KsState {
                u: mat_vec(&s, &ks.u),
                momenta: mat_vec(&s, &ks.momenta),
                ..ks
            };
            let a = hamiltonian_regularized(&ks, &SJ).unwrap();
            let b = hamiltonian_regularized(&rot, &SJ).unwrap();
            assert!((a - b).abs() <= 1e-13);
        }
    }

    #[test]
    fn gamma_values() {
        let circ = SystemParams::new(SJ.mu, 0.0).unwrap();
        let mu = SJ.mu;
        for phi in [0.0, 1.0, 4.0] {
            assert_eq!(gamma(phi, 0.3, &circ), -0.3 + (3.0 - 4.0 * mu + mu * mu) / 2.0);
        }
    }

    #[test]
    fn cartesian_field_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let h = 1e-6;
        for _ in 0..100 {
            let s = random_cartesian(&mut rng);
            let y = s.to_array();
            let field = vector_field_cartesian(&y, &SJ).unwrap();
            let ham = |y: [f64; 8]| hamiltonian_cartesian(&CartesianState::from_array(&y), &SJ).unwrap();
            let partial = |k: usize| {
                let mut a = y;
                let mut b = y;
                a[k] += h;
                b[k] -= h;
                (ham(a) - ham(b)) / (2.0 * h)
            };
            for i in 0..3 {
                assert!(rel_err(field[i], partial(3 + i)) < 1e-6);
                assert!(rel_err(field[3 + i], -partial(i)) < 1e-6);
            }
            assert!(rel_err(field[7], -partial(6)) < 1e-6);
        }
    }

    #[test]
    fn circular_hamiltonian_is_autonomous() {
        let circ = SystemParams::new(SJ.mu, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..20 {
            let s = random_cartesian(&mut rng);
            let mut a = s;
            let mut b = s;
            a.f += 1e-6;
            b.f -= 1e-6;
            let d = (hamiltonian_cartesian(&a, &circ).unwrap() - hamiltonian_cartesian(&b, &circ).unwrap()) / 2e-6;
            assert!(d.abs() <= 1e-12);
            assert_eq!(vector_field_cartesian(&s.to_array(), &circ).unwrap()[7], 0.0);
        }
    }

    #[test]
    fn rest_point_of_kinematic_part() {
        let s = CartesianState {
            r: [0.3, -0.4, 0.0],
            p: [0.4, 0.3, 0.0],
            f: 0.2,
            action: 0.0,
        };
        let v = vector_field_cartesian(&s.to_array(), &SJ).unwrap();
        assert_eq!(&v[..3], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn jacobi_equals_hamiltonian() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..200 {
            let s = random_cartesian(&mut rng);
            let j = jacobi_value(&s, &SJ).unwrap();
            let h = hamiltonian_cartesian(&s, &SJ).unwrap();
            assert!((j - h).abs() <= 1e-13 * (1.0 + h.abs()));
        }
    }

    #[test]
    fn collisions_are_errors() {
        let mut s = flyby();
        s.r = SJ.secondary_position();
        assert!(matches!(
            hamiltonian_cartesian(&s, &SJ),
            Err(Error::Collision { body: Body::Secondary, .. })
        ));
        s.r = SJ.primary_position();
        assert!(vector_field_cartesian(&s.to_array(), &SJ).is_err());
        // u on the circle mapping onto P1
        let y = [0.0, 1.0, 0.0, 0.0, 0.0, 0.1, 0.1, 0.1, 0.1, 0.0];
        assert!(vector_field_ks(&y, &SJ).is_err());
        assert!(hamiltonian_regularized_array(&y, &SJ).is_err());
    }

    #[test]
    fn ks_field_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = 1e-6;
        for _ in 0..100 {
            let y = random_ks(&mut rng, 0.5);
            let field = vector_field_ks(&y, &SJ).unwrap();
            let partial = |k: usize| {
                let mut a = y;
                let mut b = y;
                a[k] += h;
                b[k] -= h;
                (hamiltonian_regularized_array(&a, &SJ).unwrap()
                    - hamiltonian_regularized_array(&b, &SJ).unwrap())
                    / (2.0 * h)
            };
            for i in 0..4 {
                assert!(rel_err(field[i], partial(5 + i)) < 1e-6);
                assert!(rel_err(field[5 + i], -partial(i)) < 1e-6);
            }
            assert_eq!(field[4], dot(&[y[0], y[1], y[2], y[3]], &[y[0], y[1], y[2], y[3]]));
            assert!(rel_err(field[9], -partial(4)) < 1e-6);
        }
    }

    #[test]
    fn circular_action_is_constant() {
        let circ = SystemParams::new(SJ.mu, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for _ in 0..20 {
            let y = random_ks(&mut rng, 0.5);
            assert_eq!(vector_field_ks(&y, &circ).unwrap()[9], 0.0);
        }
    }

    #[test]
    fn bilinear_invariant_rate_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let c = random_cartesian(&mut rng);
            let ks = lift(&c, &SJ).unwrap();
            let y = ks.to_array();
            let d = vector_field_ks(&y, &SJ).unwrap();
            let du = [d[0], d[1], d[2], d[3]];
            let dw = [d[5], d[6], d[7], d[8]];
            let rate = bilinear_l(&du, &ks.momenta) + bilinear_l(&ks.u, &dw);
            assert!(rate.abs() < 1e-12, "{rate}");
        }
    }

    #[test]
    fn b_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..100 {
            let u: Vec4 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let jb = b_jacobian(&u);
            for j in 0..4 {
                let mut a = u;
                let mut b = u;
                a[j] += 1e-6;
                b[j] -= 1e-6;
                let (ba, bb) = (b_vector(&a), b_vector(&b));
                for i in 0..4 {
                    assert!((jb[i][j] - (ba[i] - bb[i]) / 2e-6).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn variational_matrix_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = 1e-6;
        for _ in 0..100 {
            let y = random_ks(&mut rng, 0.5);
            let x = variational_matrix(&y, &SJ).unwrap();
            let idx = [0, 1, 2, 3, 5, 6, 7, 8];
            let scale = x.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            for (col, &k) in idx.iter().enumerate() {
                let mut a = y;
                let mut b = y;
                a[k] += h;
                b[k] -= h;
                let fa = vector_field_ks(&a, &SJ).unwrap();
                let fb = vector_field_ks(&b, &SJ).unwrap();
                for (row, &i) in idx.iter().enumerate() {
                    let fd = (fa[i] - fb[i]) / (2.0 * h);
                    assert!((x[row][col] - fd).abs() <= 1e-5 * scale, "({row},{col}) {} {fd}", x[row][col]);
                }
            }
        }
    }

    #[test]
    fn variational_matrix_at_origin() {
        let mut y = [0.0; 10];
        y[4] = 0.7;
        y[9] = -0.4;
        let g = gamma(0.7, -0.4, &SJ);
        let x = variational_matrix(&y, &SJ).unwrap();
        let x0 = variational_matrix_origin(g);
        for i in 0..8 {
            for j in 0..8 {
                assert!((x[i][j] - x0[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn variational_deviation_is_second_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let mut y = random_ks(&mut rng, 0.02);
            for v in y.iter_mut().skip(5).take(4) {
                *v *= 0.04;
            }
            let dev = |y: &[f64; 10]| {
                let x = variational_matrix(y, &SJ).unwrap();
                let x0 = variational_matrix_origin(gamma(y[4], y[9], &SJ));
                let mut m = 0.0f64;
                for i in 0..8 {
                    for j in 0..8 {
                        m = m.max((x[i][j] - x0[i][j]).abs());
                    }
                }
                m
            };
            let mut half = y;
            for i in [0, 1, 2, 3, 5, 6, 7, 8] {
                half[i] *= 0.5;
            }
            assert!(dev(&y) / dev(&half) >= 3.5, "{}", dev(&y) / dev(&half));
        }
    }

    #[test]
    fn gamma_rate_matches_closed_form_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let y = random_ks(&mut rng, 0.3);
            let f = vector_field_ks(&y, &SJ).unwrap();
            let h = 1e-6;
            let g = |phi: f64, act: f64| gamma(phi, act, &SJ);
            let fd = (g(y[4] + h * f[4], y[9] + h * f[9]) - g(y[4] - h * f[4], y[9] - h * f[9])) / (2.0 * h);
            assert!((gamma_rate(&y, &SJ).unwrap() - fd).abs() < 1e-9);
        }
    }
}
