//! Regularized fast Lyapunov indicators and the Tisserand parameter.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{gamma, variational_matrix, vector_field_ks};
use crate::error::{Error, Result};
use crate::frames::{inertial_to_heliocentric_elements, rotating_to_inertial_state, OrbitalElements, SystemParams};
use crate::integrator::{propagate_observed, Control, Endpoint, StepperConfig, Trajectory};
use crate::ks::{push_down, CartesianState, KsState};

/// Dimension of the joint system: KS state, tangent vector, mFLI integral.
pub const TANGENT_DIM: usize = 19;
const W: usize = 10;
const M: usize = 18;

/// Cosine cutoff around the secondary: one inside `lambda/2`, zero beyond
/// `3 lambda / 2`.
pub fn chi(distance: f64, lambda: f64) -> f64 {
    if distance <= 0.5 * lambda {
        1.0
    } else if distance <= 1.5 * lambda {
        0.5 * (((distance / lambda) - 0.5) * std::f64::consts::PI).cos() + 0.5
    } else {
        0.0
    }
}

/// The fixed initial tangent vector `(1, ..., 1) / sqrt(8)`.
pub fn default_tangent() -> [f64; 8] {
    [8f64.sqrt().recip(); 8]
}

/// Tangent-flow configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorConfig {
    /// Window scale of the cutoff; defaults to the conventional Hill radius.
    pub lambda: f64,
    /// Step in the fictitious anomaly `s`.
    pub step: f64,
    /// Final true anomaly `F`.
    pub final_anomaly: f64,
    /// Rescale `w` whenever its norm exceeds this.
    pub renorm_threshold: f64,
    pub max_steps: usize,
    /// Keep the per-step indicator samples and trajectory.
    pub record: bool,
}

impl IndicatorConfig {
    pub fn new(params: &SystemParams, step: f64, final_anomaly: f64) -> Self {
        Self {
            lambda: params.conventional_hill_radius(),
            step,
            final_anomaly,
            renorm_threshold: 1e100,
            max_steps: 50_000_000,
            record: true,
        }
    }
}

/// Joint field of the KS flow, the tangent flow and the mFLI integrand.
pub fn tangent_field(y: &[f64; TANGENT_DIM], params: &SystemParams, lambda: f64) -> Result<[f64; TANGENT_DIM]> {
    let ks: [f64; 10] = std::array::from_fn(|i| y[i]);
    let base = vector_field_ks(&ks, params)?;
    let x = variational_matrix(&ks, params)?;
    let mut out = [0.0; TANGENT_DIM];
    out[..10].copy_from_slice(&base);
    let mut dot_wdw = 0.0;
    let mut ww = 0.0;
    for i in 0..8 {
        let mut acc = 0.0;
        for j in 0..8 {
            acc += x[i][j] * y[W + j];
        }
        out[W + i] = acc;
        dot_wdw += y[W + i] * acc;
        ww += y[W + i] * y[W + i];
    }
    let d2 = ks[0] * ks[0] + ks[1] * ks[1] + ks[2] * ks[2] + ks[3] * ks[3];
    out[M] = if ww > 0.0 { chi(d2, lambda) * dot_wdw / ww } else { 0.0 };
    Ok(out)
}

/// One row of the exported series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSample {
    pub s: f64,
    pub f: f64,
    /// `log10(|w| / |w0|)`.
    pub log10_w_norm: f64,
    pub rfli: f64,
    pub mfli: f64,
    /// Running mFLI integral before maximization.
    pub integral: f64,
    pub d2: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSeries {
    pub samples: Vec<IndicatorSample>,
    pub rfli: f64,
    pub mfli: f64,
    /// Running integral at the end (not maximized).
    pub mfli_integral: f64,
    pub final_log10_w_norm: f64,
    pub final_state: KsState,
    pub tisserand_final: Option<f64>,
    pub iteration_count: usize,
    pub renormalizations: usize,
}

impl IndicatorSeries {
    pub fn rfli_final(&self) -> f64 {
        self.rfli
    }

    pub fn mfli_final(&self) -> f64 {
        self.mfli
    }
}

/// Integrates the regularized flow together with the tangent vector and the
/// mFLI integral until the angle reaches `F`.
pub fn propagate_with_tangent(
    ks0: &KsState,
    w0: &[f64; 8],
    params: &SystemParams,
    cfg: &IndicatorConfig,
) -> Result<(Trajectory<TANGENT_DIM>, IndicatorSeries)> {
    let w0_norm = w0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if w0_norm == 0.0 {
        return Err(Error::InvalidConfig("initial tangent vector must be nonzero".into()));
    }
    if !(cfg.lambda > 0.0) {
        return Err(Error::InvalidConfig("lambda must be positive".into()));
    }
    let mut y0 = [0.0; TANGENT_DIM];
    y0[..10].copy_from_slice(&ks0.to_array());
    y0[W..W + 8].copy_from_slice(w0);
    let backward = cfg.final_anomaly < ks0.angle;
    let stepper = StepperConfig {
        step: cfg.step,
        max_steps: cfg.max_steps,
        endpoint: Endpoint::Coordinate {
            index: 4,
            target: cfg.final_anomaly,
            backward,
        },
        record: cfg.record,
    };
    let lambda = cfg.lambda;
    let field = |_s: f64, y: &[f64; TANGENT_DIM]| tangent_field(y, params, lambda);

    let ln10 = std::f64::consts::LN_10;
    let mut log_offset = 0.0; // natural log of accumulated rescalings
    let mut rfli = 0.0f64;
    let mut mfli = 0.0f64;
    let mut renorms = 0usize;
    let mut samples = Vec::new();
    let sample = |s: f64, y: &[f64; TANGENT_DIM], log_offset: f64, rfli: f64, mfli: f64| {
        let wn = y[W..W + 8].iter().map(|v| v * v).sum::<f64>().sqrt();
        IndicatorSample {
            s,
            f: y[4],
            log10_w_norm: ((wn / w0_norm).ln() + log_offset) / ln10,
            rfli,
            mfli,
            integral: y[M],
            d2: y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3],
            gamma: gamma(y[4], y[9], params),
        }
    };
    if cfg.record {
        samples.push(sample(ks0.s, &y0, 0.0, 0.0, 0.0));
    }
    let threshold = cfg.renorm_threshold;
    let traj = propagate_observed(&field, ks0.s, &y0, &stepper, |s, y| {
        let wn = y[W..W + 8].iter().map(|v| v * v).sum::<f64>().sqrt();
        let lw = ((wn / w0_norm).ln() + log_offset) / ln10;
        rfli = rfli.max(lw);
        mfli = mfli.max(y[M]);
        if cfg.record {
            samples.push(sample(s, y, log_offset, rfli, mfli));
        }
        if wn > threshold {
            for v in y[W..W + 8].iter_mut() {
                *v /= wn;
            }
            log_offset += wn.ln();
            renorms += 1;
        }
        Control::Continue
    })?;
    let last = traj.final_state;
    let wn = last[W..W + 8].iter().map(|v| v * v).sum::<f64>().sqrt();
    let final_state = KsState::from_array(&last[..10], traj.final_time);
    let tisserand_final = push_down(&final_state, params)
        .ok()
        .and_then(|c| tisserand(&heliocentric_elements(&c, params, 1.0 - params.mu)).ok());
    let series = IndicatorSeries {
        samples,
        rfli,
        mfli,
        mfli_integral: last[M],
        final_log10_w_norm: ((wn / w0_norm).ln() + log_offset) / ln10,
        final_state,
        tisserand_final,
        iteration_count: traj.iteration_count,
        renormalizations: renorms,
    };
    Ok((traj, series))
}

/// Osculating heliocentric elements of a rotating-frame state.
pub fn heliocentric_elements(state: &CartesianState, params: &SystemParams, grav_param: f64) -> OrbitalElements {
    let inertial = rotating_to_inertial_state(&state.r, &state.velocity(), state.f, params);
    inertial_to_heliocentric_elements(&inertial, state.f, params, grav_param)
}

/// Tisserand parameter `1/a + 2 cos i sqrt(a (1 - e^2))`.
pub fn tisserand(el: &OrbitalElements) -> Result<f64> {
    let p = el.a * (1.0 - el.e * el.e);
    if el.a == 0.0 || p < 0.0 {
        return Err(Error::InvalidElements(format!(
            "a(1-e^2) = {p} is negative (a = {}, e = {})",
            el.a, el.e
        )));
    }
    Ok(1.0 / el.a + 2.0 * el.i.cos() * p.sqrt())
}

/// An increase of the mFLI integral over one contiguous window `chi > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfliJump {
    pub s_start: f64,
    pub s_end: f64,
    pub increase: f64,
    pub d2_min: f64,
}

/// Splits the series into windows where the cutoff is open and reports the
/// increase of the integral across each.
pub fn mfli_windows(series: &IndicatorSeries, lambda: f64) -> Vec<MfliJump> {
    let mut out = Vec::new();
    let mut open: Option<(usize, f64)> = None;
    let integral: Vec<f64> = series.samples.iter().map(|s| s.integral).collect();
    for (k, smp) in series.samples.iter().enumerate() {
        let inside = smp.d2 < 1.5 * lambda;
        match (&mut open, inside) {
            (None, true) => open = Some((k.saturating_sub(1), smp.d2)),
            (Some((_, dmin)), true) => *dmin = dmin.min(smp.d2),
            (Some((start, dmin)), false) => {
                out.push(MfliJump {
                    s_start: series.samples[*start].s,
                    s_end: smp.s,
                    increase: integral[k] - integral[*start],
                    d2_min: *dmin,
                });
                open = None;
            }
            (None, false) => {}
        }
    }
    if let Some((start, dmin)) = open {
        let k = series.samples.len() - 1;
        out.push(MfliJump {
            s_start: series.samples[start].s,
            s_end: series.samples[k].s,
            increase: integral[k] - integral[start],
            d2_min: dmin,
        });
    }
    out
}


/// Number of windows whose mFLI increase exceeds `threshold`.
pub fn count_mfli_jumps(series: &IndicatorSeries, lambda: f64, threshold: f64) -> usize {
    mfli_windows(series, lambda).iter().filter(|j| j.increase > threshold).count()
}

/// Writes the series as CSV with columns `s,f,log10_w_norm,rfli,mfli,d2,gamma`.
pub fn write_series_csv<Wr: Write>(series: &IndicatorSeries, mut out: Wr) -> Result<()> {
    writeln!(out, "s,f,log10_w_norm,rfli,mfli,d2,gamma")?;
    for r in &series.samples {
        writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.s, r.f, r.log10_w_norm, r.rfli, r.mfli, r.d2, r.gamma
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{hamiltonian_cartesian, variational_matrix_origin};
    use crate::integrator::propagate;
    use crate::ks::lift;

    const SJ: SystemParams = SystemParams::SUN_JUPITER;

    #[test]
    fn chi_values() {
        let l = 0.3;
        assert_eq!(chi(l / 4.0, l), 1.0);
        assert!((chi(l, l) - 0.5).abs() < 1e-15);
        assert_eq!(chi(2.0 * l, l), 0.0);
        assert_eq!(chi(1.5 * l + 1e-12, l), 0.0);
        assert!((chi(1.5 * l, l)).abs() < 1e-15);
        // C1 at the seams
        let h = 1e-7;
        for d in [0.5 * l, 1.5 * l] {
            let left = (chi(d, l) - chi(d - h, l)) / h;
            let right = (chi(d + h, l) - chi(d, l)) / h;
            assert!((left - right).abs() < 1e-5);
        }
    }

    #[test]
    fn tisserand_values() {
        let el = |a: f64, e: f64, i: f64| OrbitalElements {
            a,
            e,
            i,
            omega: 0.0,
            node: 0.0,
            f_true: 0.0,
        };
        assert!((tisserand(&el(1.0, 0.0, 0.0)).unwrap() - 3.0).abs() < 1e-15);
        let a = 1.3103706971044482;
        let expected = 1.0 / a + 2.0 * (a * 0.64f64).sqrt();
        assert!((tisserand(&el(a, 0.6, 0.0)).unwrap() - expected).abs() < 1e-15);
        assert!((tisserand(&el(2.0, 0.1, std::f64::consts::FRAC_PI_2)).unwrap() - 0.5).abs() < 1e-15);
        assert!(tisserand(&el(2.0, 1.5, 0.0)).is_err());
    }

    #[test]
    fn frozen_origin_matrix_growth() {
        // w' = X0 w along the unstable eigenvector (v, 4 sqrt(Gamma/2) v)
        let g: f64 = 1.4282186;
        let x0 = variational_matrix_origin(g);
        let lam = (g / 2.0).sqrt();
        let field = |_s: f64, w: &[f64; 8]| -> Result<[f64; 8]> {
            Ok(std::array::from_fn(|i| (0..8).map(|j| x0[i][j] * w[j]).sum()))
        };
        let mut w: [f64; 8] = [0.0; 8];
        for i in 0..4 {
            w[i] = 1.0;
            w[4 + i] = 4.0 * lam;
        }
        let n0 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let traj = propagate(&field, 0.0, &w, &StepperConfig::new(1e-3, Endpoint::Time(1.0))).unwrap();
        for (s, y) in traj.samples.iter().step_by(100) {
            let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(((n / n0) / (lam * s).exp() - 1.0).abs() < 0.01);
        }
    }

    fn flyby_ks(params: &SystemParams) -> KsState {
        let mut c = CartesianState {
            r: [1.0 - SJ.mu + 1.921451079855507e-3, 0.0, 0.0],
            p: [0.2, 1.8, 0.6],
            f: 0.0,
            action: 0.0,
        };
        c.action = -hamiltonian_cartesian(&c, params).unwrap();
        lift(&c, params).unwrap()
    }

    #[test]
    fn isolated_transit_log_growth() {
        // lambda large enough that chi = 1 along the whole leg
        let ks = flyby_ks(&SJ);
        let mut cfg = IndicatorConfig::new(&SJ, std::f64::consts::PI * 1e-3, 0.2);
        cfg.lambda = 10.0;
        let (_, series) = propagate_with_tangent(&ks, &default_tangent(), &SJ, &cfg).unwrap();
        let ln_growth = series.final_log10_w_norm * std::f64::consts::LN_10;
        assert!((series.mfli_integral - ln_growth).abs() < 1e-8, "{} {}", series.mfli_integral, ln_growth);
    }

    #[test]
    fn renormalization_is_transparent() {
        let ks = flyby_ks(&SJ);
        let cfg = IndicatorConfig::new(&SJ, std::f64::consts::PI * 1e-3, 0.3);
        let (_, a) = propagate_with_tangent(&ks, &default_tangent(), &SJ, &cfg).unwrap();
        let mut low = cfg;
        low.renorm_threshold = 1.05;
        let (_, b) = propagate_with_tangent(&ks, &default_tangent(), &SJ, &low).unwrap();
        assert!(b.renormalizations > 0);
        assert!((a.rfli - b.rfli).abs() <= 1e-9);
        assert!((a.mfli - b.mfli).abs() <= 1e-9);
        assert!(a.samples.windows(2).all(|w| w[1].rfli >= w[0].rfli));
    }

    #[test]
    fn tangent_linearity() {
        let ks = flyby_ks(&SJ);
        let cfg = IndicatorConfig::new(&SJ, std::f64::consts::PI * 1e-2, 0.2);
        let w0 = default_tangent();
        let w2 = w0.map(|v| 2.0 * v);
        let (ta, a) = propagate_with_tangent(&ks, &w0, &SJ, &cfg).unwrap();
        let (tb, b) = propagate_with_tangent(&ks, &w2, &SJ, &cfg).unwrap();
        assert!((a.rfli - b.rfli).abs() < 1e-12);
        let na = ta.final_state[W..W + 8].iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = tb.final_state[W..W + 8].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((nb.log10() - na.log10() - 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn window_never_opens_far_away() {
        let params = SystemParams::SUN_EARTH;
        let mut c = CartesianState {
            r: [-0.5, 0.2, 0.0],
            p: [0.0, -0.6, 0.0],
            f: 0.0,
            action: 0.0,
        };
        c.action = -hamiltonian_cartesian(&c, &params).unwrap();
        let ks = lift(&c, &params).unwrap();
        let cfg = IndicatorConfig::new(&params, 0.01, 1.0);
        let (_, s) = propagate_with_tangent(&ks, &default_tangent(), &params, &cfg).unwrap();
        assert!(s.mfli.abs() <= 1e-6);
        assert!(s.samples.iter().all(|x| x.d2 > 1.5 * cfg.lambda));
        assert_eq!(count_mfli_jumps(&s, cfg.lambda, 0.1), 0);
    }

    #[test]
    fn mfli_is_additive() {
        let ks = flyby_ks(&SJ);
        let h = std::f64::consts::PI * 1e-3;
        let whole = IndicatorConfig::new(&SJ, h, 0.3);
        let (_, a) = propagate_with_tangent(&ks, &default_tangent(), &SJ, &whole).unwrap();
        let first = IndicatorConfig::new(&SJ, h, 0.1);
        let (t1, b) = propagate_with_tangent(&ks, &default_tangent(), &SJ, &first).unwrap();
        let mut ks_mid = KsState::from_array(&t1.final_state[..10], t1.final_time);
        ks_mid.s = t1.final_time;
        let w_mid: [f64; 8] = std::array::from_fn(|i| t1.final_state[W + i]);
        let (_, c) = propagate_with_tangent(&ks_mid, &w_mid, &SJ, &whole).unwrap();
        // the split run takes one extra adapted step, so compare at step accuracy
        assert!((a.mfli_integral - (b.mfli_integral + c.mfli_integral)).abs() < 1e-10);
    }

    #[test]
    fn csv_export_columns() {
        let ks = flyby_ks(&SJ);
        let cfg = IndicatorConfig::new(&SJ, std::f64::consts::PI * 1e-2, 0.05);
        let (_, s) = propagate_with_tangent(&ks, &default_tangent(), &SJ, &cfg).unwrap();
        let mut buf = Vec::new();
        write_series_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "s,f,log10_w_norm,rfli,mfli,d2,gamma");
        assert_eq!(text.lines().count(), s.samples.len() + 1);
        let _ = &SJ;
    }
}
