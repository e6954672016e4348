//! Kustaanheimo-Stiefel algebra at the secondary body and the maps between
//! Cartesian rotating-pulsating states and regularized states.

use serde::{Deserialize, Serialize};

use crate::error::{Body, Error, Result};
use crate::frames::SystemParams;
use crate::linalg::{dot, mat_t_vec, mat_vec, Mat4, Vec3, Vec4};

/// Extended Cartesian state in the rotating-pulsating frame.
///
/// `action` is the momentum conjugate to the true anomaly; on admissible
/// data it equals minus the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianState {
    pub r: Vec3,
    pub p: Vec3,
    pub f: f64,
    pub action: f64,
}

impl CartesianState {
    pub const DIM: usize = 8;

    /// Layout `(x, y, z, p1, p2, p3, f, action)`.
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.r[0], self.r[1], self.r[2], self.p[0], self.p[1], self.p[2], self.f, self.action,
        ]
    }

    pub fn from_array(y: &[f64; 8]) -> Self {
        Self {
            r: [y[0], y[1], y[2]],
            p: [y[3], y[4], y[5]],
            f: y[6],
            action: y[7],
        }
    }

    /// Position relative to P2.
    pub fn relative_to_secondary(&self, params: &SystemParams) -> Vec3 {
        [self.r[0] - (1.0 - params.mu), self.r[1], self.r[2]]
    }

    pub fn distance_to_secondary(&self, params: &SystemParams) -> f64 {
        let q = self.relative_to_secondary(params);
        dot(&q, &q).sqrt()
    }

    pub fn distance_to_primary(&self, params: &SystemParams) -> f64 {
        let d = [self.r[0] + params.mu, self.r[1], self.r[2]];
        dot(&d, &d).sqrt()
    }

    /// Rotating-frame velocity `dr/df`.
    pub fn velocity(&self) -> Vec3 {
        crate::frames::velocity_from_momenta(&self.r, &self.p)
    }
}

/// Regularized state `(u, phi, U, Phi)` plus proper time `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsState {
    pub u: Vec4,
    /// Extended angle; equals the true anomaly along admissible flows.
    pub angle: f64,
    pub momenta: Vec4,
    pub action: f64,
    pub s: f64,
}

impl KsState {
    pub const DIM: usize = 10;

    /// Layout `(u1..u4, phi, U1..U4, Phi)`; `s` is carried separately as the
    /// independent variable.
    pub fn to_array(&self) -> [f64; 10] {
        let (u, w) = (&self.u, &self.momenta);
        [u[0], u[1], u[2], u[3], self.angle, w[0], w[1], w[2], w[3], self.action]
    }

    pub fn from_array(y: &[f64], s: f64) -> Self {
        Self {
            u: [y[0], y[1], y[2], y[3]],
            angle: y[4],
            momenta: [y[5], y[6], y[7], y[8]],
            action: y[9],
            s,
        }
    }

    /// Cartesian distance to P2, `|u|^2`.
    pub fn distance_to_secondary(&self) -> f64 {
        dot(&self.u, &self.u)
    }
}

/// The KS matrix `A(u)`; its first column is `u` and `A A^T = |u|^2 I`.
pub fn ks_matrix(u: &Vec4) -> Mat4 {
    let [u1, u2, u3, u4] = *u;
    [
        [u1, -u2, -u3, u4],
        [u2, u1, -u4, -u3],
        [u3, u4, u1, u2],
        [u4, -u3, u2, -u1],
    ]
}

/// KS projection `pi(u)`: the first three components of `A(u) u`.
pub fn project(u: &Vec4) -> Vec3 {
    let [u1, u2, u3, u4] = *u;
    [
        u1 * u1 - u2 * u2 - u3 * u3 + u4 * u4,
        2.0 * (u1 * u2 - u3 * u4),
        2.0 * (u1 * u3 + u2 * u4),
    ]
}

/// `b(u) = 2 A(u)^T Lambda A(u) u`, cubic in `u`.
pub fn b_vector(u: &Vec4) -> Vec4 {
    let q = project(u);
    let a = ks_matrix(u);
    // Lambda (q1, q2, q3, 0) = (-q2, q1, 0, 0)
    let lam_q = [-q[1], q[0], 0.0, 0.0];
    let v = mat_t_vec(&a, &lam_q);
    [2.0 * v[0], 2.0 * v[1], 2.0 * v[2], 2.0 * v[3]]
}

/// The KS bilinear form `l(u, U) = u4 U1 - u3 U2 + u2 U3 - u1 U4`.
pub fn bilinear_l(u: &Vec4, w: &Vec4) -> f64 {
    u[3] * w[0] - u[2] * w[1] + u[1] * w[2] - u[0] * w[3]
}

/// The fibre rotation `S_theta`, which leaves `pi` invariant.
pub fn fibre_rotation(theta: f64) -> Mat4 {
    let (s, c) = theta.sin_cos();
    [
        [c, 0.0, 0.0, -s],
        [0.0, c, s, 0.0],
        [0.0, -s, c, 0.0],
        [s, 0.0, 0.0, c],
    ]
}

/// Whether `u` lies on the KS collision set: the origin (collision with P2)
/// or the circle mapping onto P1.
pub fn in_collision_set(u: &Vec4, tol: f64) -> bool {
    let r2 = dot(u, u);
    if r2 <= tol {
        return true;
    }
    u[0].abs() <= tol && u[3].abs() <= tol && (u[1] * u[1] + u[2] * u[2] - 1.0).abs() <= tol
}

/// Which local inverse of `pi` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Defined off the half-axis `q1 <= 0, q2 = q3 = 0`.
    Plus,
    /// Defined off the half-axis `q1 >= 0, q2 = q3 = 0`.
    Minus,
}

impl Branch {
    /// `q1 >= 0` selects the plus branch.
    pub fn for_position(q: &Vec3) -> Self {
        if q[0] >= 0.0 {
            Branch::Plus
        } else {
            Branch::Minus
        }
    }
}

/// Local pre-image of `pi`. Returns `None` on the branch's excluded half-axis.
pub fn inverse_projection(q: &Vec3, branch: Branch) -> Option<Vec4> {
    let d = dot(q, q).sqrt();
    match branch {
        Branch::Plus => {
            let den = d + q[0];
            if den <= 0.0 {
                return None;
            }
            let k = 1.0 / (2.0 * den).sqrt();
            Some([(den / 2.0).sqrt(), q[1] * k, q[2] * k, 0.0])
        }
        Branch::Minus => {
            let den = d - q[0];
            if den <= 0.0 {
                return None;
            }
            let k = 1.0 / (2.0 * den).sqrt();
            Some([q[1] * k, (den / 2.0).sqrt(), 0.0, q[2] * k])
        }
    }
}

/// Lifts a Cartesian state to KS variables with the branch chosen from the
/// sign of `q1`. The action is carried over unchanged and `s = 0`.
pub fn lift(cart: &CartesianState, params: &SystemParams) -> Result<KsState> {
    let q = cart.relative_to_secondary(params);
    lift_with_branch(cart, params, Branch::for_position(&q))
}

/// Lift with an explicit branch; falls back to the other branch when `q` is
/// on the excluded half-axis of the requested one.
pub fn lift_with_branch(
    cart: &CartesianState,
    params: &SystemParams,
    branch: Branch,
) -> Result<KsState> {
    let q = cart.relative_to_secondary(params);
    let d = dot(&q, &q).sqrt();
    if d == 0.0 {
        return Err(Error::Collision {
            body: Body::Secondary,
            distance: 0.0,
        });
    }
    let other = match branch {
        Branch::Plus => Branch::Minus,
        Branch::Minus => Branch::Plus,
    };
    let u = inverse_projection(&q, branch)
        .or_else(|| inverse_projection(&q, other))
        .ok_or(Error::Collision {
            body: Body::Secondary,
            distance: d,
        })?;
    let p_bar = [cart.p[0], cart.p[1] - 1.0 + params.mu, cart.p[2], 0.0];
    let at_p = mat_t_vec(&ks_matrix(&u), &p_bar);
    Ok(KsState {
        u,
        angle: cart.f,
        momenta: [2.0 * at_p[0], 2.0 * at_p[1], 2.0 * at_p[2], 2.0 * at_p[3]],
        action: cart.action,
        s: 0.0,
    })
}

/// Projects a KS state back to Cartesian rotating-pulsating variables.
pub fn push_down(ks: &KsState, params: &SystemParams) -> Result<CartesianState> {
    let r2 = dot(&ks.u, &ks.u);
    if r2 == 0.0 {
        return Err(Error::Collision {
            body: Body::Secondary,
            distance: 0.0,
        });
    }
    let q = project(&ks.u);
    let au = mat_vec(&ks_matrix(&ks.u), &ks.momenta);
    let k = 1.0 / (2.0 * r2);
    Ok(CartesianState {
        r: [q[0] + 1.0 - params.mu, q[1], q[2]],
        p: [k * au[0], k * au[1] + 1.0 - params.mu, k * au[2]],
        f: ks.angle,
        action: ks.action,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat_mul, norm, transpose};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Quad-precision KS data printed for the Jupiter fly-by.
    const FLYBY_U1: f64 = 0.0438343595807618585658005372351908591;
    const FLYBY_U: [f64; 4] = [
        0.0175337438323047538346610707549189101,
        0.0702185800222737827036567637151165400,
        0.0526012314969142580345362603111425415,
        0.0,
    ];

    fn flyby_cartesian() -> CartesianState {
        let mu = SystemParams::SUN_JUPITER.mu;
        CartesianState {
            r: [1.0 - mu + 1.921451079855507e-3, 0.0, 0.0],
            p: [0.2, 1.8, 0.6],
            f: 0.0,
            action: 1.3822065668799341,
        }
    }

    fn random_u(rng: &mut ChaCha8Rng, scale: f64) -> Vec4 {
        std::array::from_fn(|_| rng.gen_range(-scale..scale))
    }

    #[test]
    fn matrix_basics() {
        let a = ks_matrix(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(mat_vec(&a, &[1.0, 0.0, 0.0, 0.0]), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(project(&[0.0, 1.0, 0.0, 0.0]), [-1.0, 0.0, 0.0]);
        assert_eq!(project(&[1.0, 0.0, 0.0, 0.0]), [1.0, 0.0, 0.0]);
        let q = project(&[FLYBY_U1, 0.0, 0.0, 0.0]);
        // the printed u1 squares to the printed offset only to ~2e-17
        assert!((q[0] - 1.921451079855507e-3).abs() < 5e-17);
    }

    #[test]
    fn matrix_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let u = random_u(&mut rng, 2.0);
            let a = ks_matrix(&u);
            let r2 = dot(&u, &u);
            for m in [mat_mul(&a, &transpose(&a)), mat_mul(&transpose(&a), &a)] {
                for i in 0..4 {
                    for j in 0..4 {
                        let expected = if i == j { r2 } else { 0.0 };
                        assert!((m[i][j] - expected).abs() <= 1e-15 * r2.max(1.0) * 4.0);
                    }
                }
            }
            // fourth component of A(u)u vanishes identically
            assert_eq!(mat_vec(&a, &u)[3].abs() < 1e-15 * r2.max(1e-300), true);
        }
    }

    #[test]
    fn norm_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let u = random_u(&mut rng, 3.0);
            let r2 = dot(&u, &u);
            assert!((norm(&project(&u)) - r2).abs() <= 1e-14 * r2);
        }
    }

    #[test]
    fn b_vector_properties() {
        assert_eq!(b_vector(&[0.0; 4]), [0.0; 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let u = random_u(&mut rng, 1.5);
            let b = b_vector(&u);
            let r = norm(&u);
            assert!(bilinear_l(&u, &b).abs() <= 1e-14 * r.powi(4).max(1e-300));
            assert!(norm(&b) <= 2.0 * r.powi(3) * (1.0 + 1e-14));
            let t: f64 = rng.gen_range(-2.0..2.0);
            let bt = b_vector(&std::array::from_fn(|i| t * u[i]));
            for i in 0..4 {
                assert!((bt[i] - t.powi(3) * b[i]).abs() <= 1e-13 * (t.abs().powi(3) * norm(&b)).max(1e-300));
            }
        }
    }

    #[test]
    fn bilinear_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let u = random_u(&mut rng, 2.0);
            assert!(bilinear_l(&u, &u).abs() < 1e-15);
            let pbar = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), 0.0];
            let a = ks_matrix(&u);
            let w: Vec4 = mat_t_vec(&a, &pbar).map(|x| 2.0 * x);
            assert!(bilinear_l(&u, &w).abs() <= 1e-14 * (norm(&u) * norm(&w)).max(1.0));
        }
    }

    #[test]
    fn flyby_lift_matches_reference_data() {
        let params = SystemParams::SUN_JUPITER;
        let ks = lift(&flyby_cartesian(), &params).unwrap();
        assert!((ks.u[0] - FLYBY_U1).abs() < 1e-14);
        assert_eq!(&ks.u[1..], &[0.0, 0.0, 0.0]);
        for i in 0..4 {
            assert!((ks.momenta[i] - FLYBY_U[i]).abs() < 1e-14, "U{}", i + 1);
        }
        assert!(bilinear_l(&ks.u, &ks.momenta).abs() < 1e-17);
        assert_eq!(ks.angle, 0.0);
        assert_eq!(ks.s, 0.0);

        let back = push_down(&ks, &params).unwrap();
        for (a, b) in back.p.iter().zip(&[0.2, 1.8, 0.6]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn lift_push_down_round_trip() {
        let params = SystemParams::SUN_JUPITER;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..2000 {
            let cart = CartesianState {
                r: std::array::from_fn(|_| rng.gen_range(-2.0..2.0)),
                p: std::array::from_fn(|_| rng.gen_range(-2.0..2.0)),
                f: rng.gen_range(-5.0..5.0),
                action: rng.gen_range(-2.0..2.0),
            };
            let ks = lift(&cart, &params).unwrap();
            let back = push_down(&ks, &params).unwrap();
            let err = crate::linalg::max_abs_diff(&cart.to_array(), &back.to_array());
            assert!(err <= 1e-13 * 4.0, "err {err}");
            // KS -> Cartesian -> KS with the same branch reproduces u up to the fibre
            let q = project(&ks.u);
            let again = lift(&back, &params).unwrap();
            assert!(crate::linalg::max_abs_diff(&project(&again.u), &q) <= 1e-13);
        }
    }

    #[test]
    fn branches_agree_on_q1_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let q = [0.0, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let up = inverse_projection(&q, Branch::Plus).unwrap();
            let um = inverse_projection(&q, Branch::Minus).unwrap();
            assert!(crate::linalg::max_abs_diff(&project(&up), &project(&um)) <= 1e-13);
            assert!(crate::linalg::max_abs_diff(&project(&up), &q) <= 1e-13);
        }
    }

    #[test]
    fn excluded_half_axis_switches_branch() {
        let params = SystemParams::SUN_JUPITER;
        let cart = CartesianState {
            r: [1.0 - params.mu - 0.01, 0.0, 0.0],
            p: [0.1, 0.3, 0.0],
            f: 0.0,
            action: 0.0,
        };
        assert!(inverse_projection(&[-0.01, 0.0, 0.0], Branch::Plus).is_none());
        let ks = lift_with_branch(&cart, &params, Branch::Plus).unwrap();
        let back = push_down(&ks, &params).unwrap();
        assert!(crate::linalg::max_abs_diff(&cart.to_array(), &back.to_array()) < 1e-14);
    }

    #[test]
    fn collision_errors() {
        let params = SystemParams::SUN_JUPITER;
        let cart = CartesianState {
            r: params.secondary_position(),
            p: [0.0; 3],
            f: 0.0,
            action: 0.0,
        };
        assert!(matches!(lift(&cart, &params), Err(Error::Collision { .. })));
        let ks = KsState {
            u: [0.0; 4],
            angle: 0.0,
            momenta: [1.0; 4],
            action: 0.0,
            s: 0.0,
        };
        assert!(push_down(&ks, &params).is_err());
        assert!(in_collision_set(&[0.0; 4], 1e-15));
        assert!(in_collision_set(&[0.0, 0.6, 0.8, 0.0], 1e-12));
        let q = project(&[0.0, 0.6, 0.8, 0.0]);
        assert!(crate::linalg::max_abs_diff(&q, &[-1.0, 0.0, 0.0]) < 1e-15);
    }

    #[test]
    fn push_down_is_fibre_invariant() {
        let params = SystemParams::SUN_JUPITER;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let cart = CartesianState {
                r: std::array::from_fn(|_| rng.gen_range(-1.5..1.5)),
                p: std::array::from_fn(|_| rng.gen_range(-1.5..1.5)),
                f: 0.3,
                action: 0.5,
            };
            let ks = lift(&cart, &params).unwrap();
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let s = fibre_rotation(theta);
            let rotated = KsState {
                u: mat_vec(&s, &ks.u),
                momenta: mat_vec(&s, &ks.momenta),
                ..ks
            };
            let a = push_down(&ks, &params).unwrap();
            let b = push_down(&rotated, &params).unwrap();
            assert!(crate::linalg::max_abs_diff(&a.to_array(), &b.to_array()) <= 1e-13);
        }
    }

    proptest! {
        #[test]
        fn projection_of_lift_recovers_position(
            x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0
        ) {
            prop_assume!(x * x + y * y + z * z > 1e-8);
            let q = [x, y, z];
            let u = inverse_projection(&q, Branch::for_position(&q)).unwrap();
            prop_assert!(crate::linalg::max_abs_diff(&project(&u), &q) <= 1e-14 * 4.0);
        }
    }
}
