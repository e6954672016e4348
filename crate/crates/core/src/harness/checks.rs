//! Invariant suite run by the `check` subcommand.
//!
//! Randomized states come from a seeded ChaCha stream, so a report is
//! reproducible from the scenario and the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{
    extended_hamiltonian, gamma, hamiltonian_regularized_array, hamiltonian_regularized_normalized, jacobi_constant,
    variational_matrix, variational_matrix_origin, vector_field_cartesian, vector_field_ks,
};
use crate::error::Result;
use crate::frames::SystemParams;
use crate::harness::scenario::Scenario;
use crate::indicators::{chi, default_tangent, propagate_with_tangent, IndicatorConfig};
use crate::integrator::{propagate, propagate_observed, Control, Endpoint, StepperConfig};
use crate::ks::{bilinear_l, fibre_rotation, ks_matrix, lift, project, push_down, CartesianState, KsState};
use crate::linalg::{dot, mat_vec};

/// Random states per randomized check.
pub const SAMPLES: usize = 100;
/// Steps of the conservation runs.
pub const CONSERVATION_STEPS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

fn random_cartesian(rng: &mut ChaCha8Rng, params: &SystemParams) -> CartesianState {
    loop {
        let s = CartesianState {
            r: std::array::from_fn(|_| rng.gen_range(-1.5..1.5)),
            p: std::array::from_fn(|_| rng.gen_range(-1.5..1.5)),
            f: rng.gen_range(-3.0..3.0),
            action: rng.gen_range(-2.0..2.0),
        };
        if s.distance_to_primary(params) > 0.1 && s.distance_to_secondary(params) > 0.05 {
            return s;
        }
    }
}

fn random_ks(rng: &mut ChaCha8Rng, radius: f64) -> [f64; 10] {
    let mut y = [0.0; 10];
    for v in &mut y[..4] {
        *v = rng.gen_range(-radius..radius);
    }
    y[4] = rng.gen_range(-3.0..3.0);
    for v in &mut y[5..9] {
        *v = rng.gen_range(-0.5..0.5);
    }
    y[9] = rng.gen_range(-2.0..2.0);
    y
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1e-3f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Central-difference Hamiltonian field: `dq = dH/dp`, `dp = -dH/dq` for the
/// given conjugate index pairs.
fn fd_field<const N: usize>(
    y: &[f64; N],
    pairs: &[(usize, usize)],
    h: f64,
    ham: impl Fn(&[f64; N]) -> Result<f64>,
) -> Result<[f64; N]> {
    let grad = |k: usize| -> Result<f64> {
        let (mut a, mut b) = (*y, *y);
        a[k] += h;
        b[k] -= h;
        Ok((ham(&a)? - ham(&b)?) / (2.0 * h))
    };
    let mut out = [0.0; N];
    for &(q, p) in pairs {
        out[q] = grad(p)?;
        out[p] = -grad(q)?;
    }
    Ok(out)
}

const CART_PAIRS: [(usize, usize); 4] = [(0, 3), (1, 4), (2, 5), (6, 7)];
const KS_PAIRS: [(usize, usize); 5] = [(0, 5), (1, 6), (2, 7), (3, 8), (4, 9)];

fn ks_algebra(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let mut norm_err = 0.0f64;
    let mut orth_err = 0.0f64;
    for _ in 0..SAMPLES {
        let u: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let r2 = dot(&u, &u);
        let q = project(&u);
        norm_err = norm_err.max((dot(&q, &q).sqrt() - r2).abs() / r2);
        // rows of A(u) are orthogonal with squared norm |u|^2
        let a = ks_matrix(&u);
        for i in 0..4 {
            for j in 0..4 {
                let d = dot(&a[i], &a[j]) - if i == j { r2 } else { 0.0 };
                orth_err = orth_err.max(d.abs() / r2);
            }
        }
    }
    (norm_err, orth_err)
}

fn round_trips(rng: &mut ChaCha8Rng, params: &SystemParams) -> Result<(f64, f64)> {
    let mut trip = 0.0f64;
    let mut ham = 0.0f64;
    for _ in 0..SAMPLES {
        let c = random_cartesian(rng, params);
        let k = lift(&c, params)?;
        let back = push_down(&k, params)?;
        trip = trip.max(rel(&back.to_array(), &c.to_array()));
        let hk = hamiltonian_regularized_normalized(&k, params)?;
        let hc = extended_hamiltonian(&c, params)?;
        ham = ham.max((hk - hc).abs() / hc.abs().max(1.0));
    }
    Ok((trip, ham))
}

fn fibre_invariance(rng: &mut ChaCha8Rng, params: &SystemParams) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..SAMPLES {
        let y = random_ks(rng, 0.5);
        let s = fibre_rotation(rng.gen_range(-3.0..3.0));
        let u = mat_vec(&s, &[y[0], y[1], y[2], y[3]]);
        let w = mat_vec(&s, &[y[5], y[6], y[7], y[8]]);
        let z = [u[0], u[1], u[2], u[3], y[4], w[0], w[1], w[2], w[3], y[9]];
        let (a, b) = (hamiltonian_regularized_array(&y, params)?, hamiltonian_regularized_array(&z, params)?);
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }
    Ok(worst)
}

fn gradients(rng: &mut ChaCha8Rng, params: &SystemParams) -> Result<(f64, f64, f64)> {
    let (mut cart, mut ks, mut jac) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..SAMPLES {
        let c = random_cartesian(rng, params).to_array();
        let fd = fd_field(&c, &CART_PAIRS, 1e-6, |y| extended_hamiltonian(&CartesianState::from_array(y), params))?;
        cart = cart.max(rel(&vector_field_cartesian(&c, params)?, &fd));

        let y = random_ks(rng, 0.5);
        let fd = fd_field(&y, &KS_PAIRS, 1e-6, |z| hamiltonian_regularized_array(z, params))?;
        ks = ks.max(rel(&vector_field_ks(&y, params)?, &fd));

        let x = variational_matrix(&y, params)?;
        let h = 1e-6;
        for j in 0..8 {
            let k = if j < 4 { j } else { j + 1 };
            let (mut a, mut b) = (y, y);
            a[k] += h;
            b[k] -= h;
            let (fa, fb) = (vector_field_ks(&a, params)?, vector_field_ks(&b, params)?);
            let col: Vec<f64> = (0..8)
                .map(|i| {
                    let m = if i < 4 { i } else { i + 1 };
                    (fa[m] - fb[m]) / (2.0 * h)
                })
                .collect();
            let analytic: Vec<f64> = (0..8).map(|i| x[i][j]).collect();
            jac = jac.max(rel(&analytic, &col));
        }
    }
    Ok((cart, ks, jac))
}

/// `X0^2 - (Gamma/2) I` and the trace of the origin matrix.
fn origin_matrix(gamma_s: f64) -> (f64, f64) {
    let x = variational_matrix_origin(gamma_s);
    let mut worst = 0.0f64;
    for i in 0..8 {
        for j in 0..8 {
            let sq: f64 = (0..8).map(|k| x[i][k] * x[k][j]).sum();
            let expect = if i == j { 0.5 * gamma_s } else { 0.0 };
            worst = worst.max((sq - expect).abs());
        }
    }
    let trace: f64 = (0..8).map(|i| x[i][i]).sum();
    (worst / (0.5 * gamma_s.abs()).max(1e-300), trace.abs())
}

/// Largest `|K|` and `|l(u, U)|` along a run from the scenario's start.
fn conservation(sc: &Scenario) -> Result<(f64, f64)> {
    let params = &sc.params;
    let ks0 = lift(&sc.initial_state()?, params)?;
    let field = |_s: f64, y: &[f64; 10]| vector_field_ks(y, params);
    let cfg = StepperConfig::new(
        sc.step,
        Endpoint::Steps {
            count: CONSERVATION_STEPS,
            backward: false,
        },
    )
    .without_samples();
    let (mut k, mut l) = (0.0f64, 0.0f64);
    let l0 = bilinear_l(&ks0.u, &ks0.momenta);
    propagate_observed(&field, ks0.s, &ks0.to_array(), &cfg, |_, y| {
        if let Ok(v) = hamiltonian_regularized_array(y, params) {
            k = k.max(v.abs());
        } else {
            k = f64::INFINITY;
        }
        let st = KsState::from_array(y, 0.0);
        l = l.max((bilinear_l(&st.u, &st.momenta) - l0).abs());
        Control::Continue
    })?;
    Ok((k, l))
}

/// With a circular primary orbit the action is constant and the Jacobi
/// constant is conserved.
fn circular_case(sc: &Scenario) -> Result<(f64, f64)> {
    let params = SystemParams::new(sc.params.mu, 0.0)?;
    let mut c = sc.initial_state()?;
    c.action = -crate::dynamics::hamiltonian_cartesian(&c, &params)?;
    let ks0 = lift(&c, &params)?;
    let j0 = jacobi_constant(&c, &params)?;
    let field = |_s: f64, y: &[f64; 10]| vector_field_ks(y, &params);
    let cfg = StepperConfig::new(
        sc.step,
        Endpoint::Steps {
            count: CONSERVATION_STEPS,
            backward: false,
        },
    );
    let traj = propagate(&field, 0.0, &ks0.to_array(), &cfg)?;
    let (mut da, mut dj) = (0.0f64, 0.0f64);
    for (_, y) in &traj.samples {
        da = da.max((y[9] - ks0.action).abs());
        let cart = push_down(&KsState::from_array(y, 0.0), &params)?;
        dj = dj.max((jacobi_constant(&cart, &params)? - j0).abs() / j0.abs().max(1.0));
    }
    Ok((da, dj))
}

/// Observed global order of the stepper on an eccentric Kepler orbit.
fn stepper_order() -> Result<f64> {
    let kepler = |_t: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        let r3 = (y[0] * y[0] + y[1] * y[1]).powf(1.5);
        Ok([y[2], y[3], -y[0] / r3, -y[1] / r3])
    };
    let energy = |y: &[f64; 4]| 0.5 * (y[2] * y[2] + y[3] * y[3]) - 1.0 / (y[0] * y[0] + y[1] * y[1]).sqrt();
    let e: f64 = 0.8;
    let y0 = [1.0 - e, 0.0, 0.0, ((1.0 + e) / (1.0 - e)).sqrt()];
    let err = |h: f64| -> Result<f64> {
        let cfg = StepperConfig::new(h, Endpoint::Time(1.0)).without_samples();
        Ok((energy(&propagate(&kepler, 0.0, &y0, &cfg)?.final_state) - energy(&y0)).abs())
    };
    Ok((err(0.0025)? / err(0.00125)?).log2())
}

fn chi_values() -> f64 {
    let l = 0.1;
    let cases = [(0.0, 1.0), (0.05, 1.0), (0.1, 0.5), (0.15, 0.0), (0.2, 0.0)];
    cases.iter().fold(0.0f64, |m, &(d, v)| m.max((chi(d, l) - v).abs()))
}

/// With a cutoff that never vanishes the mFLI integral is the log growth of
/// the tangent vector.
fn mfli_log_growth(sc: &Scenario) -> Result<f64> {
    let params = &sc.params;
    let ks0 = lift(&sc.initial_state()?, params)?;
    let mut cfg = IndicatorConfig::new(params, sc.step, ks0.angle + 0.05);
    cfg.lambda = 1e6;
    cfg.record = false;
    let (_, series) = propagate_with_tangent(&ks0, &default_tangent(), params, &cfg)?;
    let growth = series.final_log10_w_norm * std::f64::consts::LN_10;
    Ok((series.mfli_integral - growth).abs() / growth.abs().max(1.0))
}

/// Runs the suite. Integration failures are errors; out-of-tolerance values
/// are reported as failed checks.
pub fn run_checks(sc: &Scenario, seed: u64) -> Result<Vec<CheckResult>> {
    let params = &sc.params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let (n, o) = ks_algebra(&mut rng);
    out.push(CheckResult::new("ks_norm_identity", n, 1e-14));
    out.push(CheckResult::new("ks_matrix_orthogonality", o, 1e-14));
    let (t, h) = round_trips(&mut rng, params)?;
    out.push(CheckResult::new("lift_push_down_round_trip", t, 1e-12));
    out.push(CheckResult::new("regularized_equals_extended_hamiltonian", h, 1e-12));
    out.push(CheckResult::new("fibre_rotation_invariance", fibre_invariance(&mut rng, params)?, 1e-12));
    let (gc, gk, gj) = gradients(&mut rng, params)?;
    out.push(CheckResult::new("cartesian_field_vs_finite_differences", gc, 1e-6));
    out.push(CheckResult::new("ks_field_vs_finite_differences", gk, 1e-6));
    out.push(CheckResult::new("variational_matrix_vs_finite_differences", gj, 1e-5));
    let ks0 = lift(&sc.initial_state()?, params)?;
    let (sq, tr) = origin_matrix(gamma(ks0.angle, ks0.action, params));
    out.push(CheckResult::new("origin_matrix_square", sq, 1e-14));
    out.push(CheckResult::new("origin_matrix_trace", tr, 0.0));
    let (k, l) = conservation(sc)?;
    out.push(CheckResult::new("regularized_hamiltonian_conservation", k, 1e-12));
    out.push(CheckResult::new("bilinear_l_conservation", l, 1e-12));
    let (da, dj) = circular_case(sc)?;
    out.push(CheckResult::new("circular_action_constant", da, 0.0));
    out.push(CheckResult::new("circular_jacobi_conservation", dj, 1e-10));
    let order = stepper_order()?;
    out.push(CheckResult::new("stepper_order_six", (order - 6.0).abs(), 0.25));
    out.push(CheckResult::new("cutoff_values", chi_values(), 1e-15));
    out.push(CheckResult::new("mfli_equals_log_growth", mfli_log_growth(sc)?, 1e-8));
    Ok(out)
}
