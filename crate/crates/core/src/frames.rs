//! Coordinate conversions between the barycentric inertial frame, the
//! rotating-pulsating frame and osculating orbital elements.
//!
//! Units are normalized: the primaries have total mass 1, semi-major axis 1
//! and period 2π, so their mean motion is 1. All rotating-frame quantities
//! are parametrized by the true anomaly `f` of the secondary, never by time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{add, cross, dot, norm, scale, sub, Vec3};

/// Kepler solver tolerance on the residual of `E - e sin E - M`.
pub const KEPLER_TOL: f64 = 1e-13;
pub const KEPLER_MAX_ITER: usize = 50;

/// Physical system: mass ratio `mu = m2/(m1+m2)` and eccentricity of the primaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub mu: f64,
    pub eps: f64,
}

impl SystemParams {
    pub const SUN_JUPITER: SystemParams = SystemParams {
        mu: 9.536433730801362e-4,
        eps: 0.0489,
    };
    pub const SUN_EARTH: SystemParams = SystemParams {
        mu: 3.00347e-6,
        eps: 0.0167,
    };

    pub fn new(mu: f64, eps: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 0.5) {
            return Err(Error::InvalidConfig(format!("mass ratio {mu} outside (0, 1/2)")));
        }
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::InvalidConfig(format!("eccentricity {eps} outside [0, 1)")));
        }
        Ok(Self { mu, eps })
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "sun-jupiter" => Some(Self::SUN_JUPITER),
            "sun-earth" => Some(Self::SUN_EARTH),
            _ => None,
        }
    }

    /// Hill radius in KS norm, `mu^(1/6)`.
    pub fn hill_radius_u(&self) -> f64 {
        self.mu.powf(1.0 / 6.0)
    }

    /// Hill radius in Cartesian distance, `mu^(1/3)`. This is `3^(1/3)` times
    /// the conventional Hill radius.
    pub fn hill_radius_q(&self) -> f64 {
        self.mu.cbrt()
    }

    /// Conventional Hill radius `(mu/3)^(1/3)`.
    pub fn conventional_hill_radius(&self) -> f64 {
        (self.mu / 3.0).cbrt()
    }

    /// Position of P1 in the rotating-pulsating frame.
    pub fn primary_position(&self) -> Vec3 {
        [-self.mu, 0.0, 0.0]
    }

    /// Position of P2 in the rotating-pulsating frame.
    pub fn secondary_position(&self) -> Vec3 {
        [1.0 - self.mu, 0.0, 0.0]
    }
}

/// Barycentric inertial position and time velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertialState {
    pub r: Vec3,
    pub v: Vec3,
}

/// Osculating Keplerian elements. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalElements {
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub omega: f64,
    pub node: f64,
    pub f_true: f64,
}

impl OrbitalElements {
    /// Build an element set from a mean anomaly, solving Kepler's equation.
    pub fn from_mean_anomaly(
        a: f64,
        e: f64,
        i: f64,
        omega: f64,
        node: f64,
        mean_anomaly: f64,
    ) -> Result<Self> {
        let ecc_anomaly = solve_kepler(mean_anomaly, e)?;
        let f_true = 2.0
            * ((1.0 + e).sqrt() * (ecc_anomaly / 2.0).sin())
                .atan2((1.0 - e).sqrt() * (ecc_anomaly / 2.0).cos());
        Ok(Self {
            a,
            e,
            i,
            omega,
            node,
            f_true,
        })
    }

    pub fn is_elliptic(&self) -> bool {
        self.a > 0.0 && (0.0..1.0).contains(&self.e)
    }
}

/// Distance between the primaries at true anomaly `f`.
pub fn primaries_distance(f: f64, params: &SystemParams) -> f64 {
    (1.0 - params.eps * params.eps) / (1.0 + params.eps * f.cos())
}

/// `d rho / d f`.
fn primaries_distance_rate(f: f64, params: &SystemParams) -> f64 {
    let den = 1.0 + params.eps * f.cos();
    (1.0 - params.eps * params.eps) * params.eps * f.sin() / (den * den)
}

/// `df/dt` for the primaries' Keplerian ellipse.
pub fn true_anomaly_rate(f: f64, params: &SystemParams) -> f64 {
    let den = 1.0 + params.eps * f.cos();
    den * den / (1.0 - params.eps * params.eps).powf(1.5)
}

/// Rotation about the z axis by angle `f`.
pub fn rotation(f: f64) -> [[f64; 3]; 3] {
    let (s, c) = f.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn rotate(f: f64, v: &Vec3) -> Vec3 {
    let (s, c) = f.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

/// Maps a rotating-pulsating position to the barycentric inertial frame.
pub fn rotating_to_inertial(r: &Vec3, f: f64, params: &SystemParams) -> Vec3 {
    scale(primaries_distance(f, params), &rotate(f, r))
}

/// Inverse of [`rotating_to_inertial`].
pub fn inertial_to_rotating(big_r: &Vec3, f: f64, params: &SystemParams) -> Vec3 {
    scale(1.0 / primaries_distance(f, params), &rotate(-f, big_r))
}

/// Full state map: rotating position and `dr/df` to inertial position and
/// `dR/dt`.
pub fn rotating_to_inertial_state(
    r: &Vec3,
    dr_df: &Vec3,
    f: f64,
    params: &SystemParams,
) -> InertialState {
    let rho = primaries_distance(f, params);
    let rho_f = primaries_distance_rate(f, params);
    // dR/df = rho' R(f) r + rho R'(f) r + rho R(f) r'
    let rot_r = rotate(f, r);
    let rot_dr = rotate(f, dr_df);
    let d_rot_r = [-rot_r[1], rot_r[0], 0.0];
    let dbig_r_df: Vec3 = std::array::from_fn(|k| rho_f * rot_r[k] + rho * (d_rot_r[k] + rot_dr[k]));
    InertialState {
        r: scale(rho, &rot_r),
        v: scale(true_anomaly_rate(f, params), &dbig_r_df),
    }
}

/// Inverse of [`rotating_to_inertial_state`]: returns `(r, dr/df)`.
pub fn inertial_to_rotating_state(
    state: &InertialState,
    f: f64,
    params: &SystemParams,
) -> (Vec3, Vec3) {
    let rho = primaries_distance(f, params);
    let rho_f = primaries_distance_rate(f, params);
    let r = inertial_to_rotating(&state.r, f, params);
    let dbig_r_df = scale(1.0 / true_anomaly_rate(f, params), &state.v);
    // R(f)^T dR/df = rho' r + rho (k x r) + rho r'
    let body = rotate(-f, &dbig_r_df);
    let dr_df = std::array::from_fn(|k| {
        let k_cross_r = [-r[1], r[0], 0.0][k];
        (body[k] - rho_f * r[k]) / rho - k_cross_r
    });
    (r, dr_df)
}

/// Conjugate momenta from rotating-frame velocities: `p = (x'-y, y'+x, z')`.
pub fn momenta_from_velocity(r: &Vec3, dr_df: &Vec3) -> Vec3 {
    [dr_df[0] - r[1], dr_df[1] + r[0], dr_df[2]]
}

/// Rotating-frame velocities from momenta: `(p1+y, p2-x, p3)`.
pub fn velocity_from_momenta(r: &Vec3, p: &Vec3) -> Vec3 {
    [p[0] + r[1], p[1] - r[0], p[2]]
}

/// Inertial state of the primary P1 at true anomaly `f`.
pub fn primary_inertial_state(f: f64, params: &SystemParams) -> InertialState {
    let rel = relative_primaries_state(f, params);
    InertialState {
        r: scale(-params.mu, &rel.r),
        v: scale(-params.mu, &rel.v),
    }
}

/// Inertial state of the secondary P2 at true anomaly `f`.
pub fn secondary_inertial_state(f: f64, params: &SystemParams) -> InertialState {
    let rel = relative_primaries_state(f, params);
    InertialState {
        r: scale(1.0 - params.mu, &rel.r),
        v: scale(1.0 - params.mu, &rel.v),
    }
}

/// P2 relative to P1 on the unit-semi-major-axis ellipse with `G(m1+m2) = 1`.
fn relative_primaries_state(f: f64, params: &SystemParams) -> InertialState {
    let semi_latus = 1.0 - params.eps * params.eps;
    let (s, c) = f.sin_cos();
    let rho = primaries_distance(f, params);
    let k = 1.0 / semi_latus.sqrt();
    InertialState {
        r: [rho * c, rho * s, 0.0],
        v: [-k * s, k * (params.eps + c), 0.0],
    }
}

/// Solves `E - e sin E = M` by Newton iteration from `E0 = M`.
pub fn solve_kepler(mean_anomaly: f64, e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::InvalidElements(format!("eccentricity {e} is not elliptic")));
    }
    let mut ecc = mean_anomaly;
    for _ in 0..KEPLER_MAX_ITER {
        let residual = ecc - e * ecc.sin() - mean_anomaly;
        if residual.abs() <= KEPLER_TOL {
            return Ok(ecc);
        }
        ecc -= residual / (1.0 - e * ecc.cos());
    }
    let residual = ecc - e * ecc.sin() - mean_anomaly;
    if residual.abs() <= KEPLER_TOL {
        Ok(ecc)
    } else {
        Err(Error::KeplerNotConverged {
            iterations: KEPLER_MAX_ITER,
        })
    }
}

/// Conic-to-state conversion relative to a central body of gravitational
/// parameter `grav_param`.
pub fn elements_to_cartesian(el: &OrbitalElements, grav_param: f64) -> Result<InertialState> {
    if !el.is_elliptic() {
        return Err(Error::InvalidElements(format!(
            "a = {}, e = {} is not an elliptic element set",
            el.a, el.e
        )));
    }
    let semi_latus = el.a * (1.0 - el.e * el.e);
    let (sf, cf) = el.f_true.sin_cos();
    let radius = semi_latus / (1.0 + el.e * cf);
    let vk = (grav_param / semi_latus).sqrt();
    // perifocal frame
    let r_pf = [radius * cf, radius * sf, 0.0];
    let v_pf = [-vk * sf, vk * (el.e + cf), 0.0];
    Ok(InertialState {
        r: perifocal_to_inertial(&r_pf, el),
        v: perifocal_to_inertial(&v_pf, el),
    })
}

fn perifocal_to_inertial(v: &Vec3, el: &OrbitalElements) -> Vec3 {
    let (so, co) = el.omega.sin_cos();
    let (sn, cn) = el.node.sin_cos();
    let (si, ci) = el.i.sin_cos();
    let p = [cn * co - sn * so * ci, sn * co + cn * so * ci, so * si];
    let q = [-cn * so - sn * co * ci, -sn * so + cn * co * ci, co * si];
    std::array::from_fn(|k| p[k] * v[0] + q[k] * v[1])
}

/// Osculating elements of a state relative to a central body.
///
/// Hyperbolic and parabolic states return `e >= 1` (and `a < 0` or infinite).
/// Undefined angles are set to zero: the node for planar orbits, the
/// argument of pericenter for circular ones, with the remaining angle
/// measured from the x axis.
pub fn cartesian_to_elements(state: &InertialState, grav_param: f64) -> OrbitalElements {
    const SMALL: f64 = 1e-14;
    let r = &state.r;
    let v = &state.v;
    let rn = norm(r);
    let h = cross(r, v);
    let hn = norm(&h);
    let energy = 0.5 * dot(v, v) - grav_param / rn;
    let a = -grav_param / (2.0 * energy);
    let e_vec: Vec3 = {
        let vxh = cross(v, &h);
        sub(&scale(1.0 / grav_param, &vxh), &scale(1.0 / rn, r))
    };
    let e = norm(&e_vec);
    let i = (h[2] / hn).clamp(-1.0, 1.0).acos();
    let node_vec = [-h[1], h[0], 0.0];
    let nn = norm(&node_vec);

    let planar = nn <= SMALL * hn;
    let circular = e <= SMALL;

    let node = if planar { 0.0 } else { node_vec[1].atan2(node_vec[0]) };
    // reference direction in the orbital plane: line of nodes, or x axis
    let (ref_dir, ref_perp) = if planar {
        let sign = if h[2] >= 0.0 { 1.0 } else { -1.0 };
        ([1.0, 0.0, 0.0], [0.0, sign, 0.0])
    } else {
        let n_hat = scale(1.0 / nn, &node_vec);
        let perp = scale(1.0 / hn, &cross(&h, &n_hat));
        (n_hat, perp)
    };
    let angle_in_plane = |w: &Vec3| dot(w, &ref_perp).atan2(dot(w, &ref_dir));

    let (omega, f_true) = if circular {
        (0.0, angle_in_plane(r))
    } else {
        let omega = angle_in_plane(&e_vec);
        let e_hat = scale(1.0 / e, &e_vec);
        let e_perp = scale(1.0 / hn, &cross(&h, &e_hat));
        (omega, dot(r, &e_perp).atan2(dot(r, &e_hat)))
    };
    OrbitalElements {
        a,
        e,
        i,
        omega,
        node,
        f_true,
    }
}

/// Heliocentric elements about P1 (gravitational parameter `1 - mu`),
/// converted to a barycentric inertial state at true anomaly `f`.
pub fn heliocentric_elements_to_inertial(
    el: &OrbitalElements,
    f: f64,
    params: &SystemParams,
    grav_param: f64,
) -> Result<InertialState> {
    let rel = elements_to_cartesian(el, grav_param)?;
    let sun = primary_inertial_state(f, params);
    Ok(InertialState {
        r: add(&rel.r, &sun.r),
        v: add(&rel.v, &sun.v),
    })
}

/// Barycentric inertial state to osculating heliocentric elements.
pub fn inertial_to_heliocentric_elements(
    state: &InertialState,
    f: f64,
    params: &SystemParams,
    grav_param: f64,
) -> OrbitalElements {
    let sun = primary_inertial_state(f, params);
    let rel = InertialState {
        r: sub(&state.r, &sun.r),
        v: sub(&state.v, &sun.v),
    };
    cartesian_to_elements(&rel, grav_param)
}
