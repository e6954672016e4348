//! Hill-sphere transits on regularized trajectories and their hyperbolicity.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{gamma, origin_exponent, vector_field_ks};
use crate::error::{Error, Result};
use crate::frames::SystemParams;
use crate::integrator::{locate_crossing, Trajectory};

/// One passage through the ball `d2 < radius` around the secondary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncounterRecord {
    pub s_entry: f64,
    pub s_exit: f64,
    pub f_entry: f64,
    pub f_exit: f64,
    pub gamma_0: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub d2_min: f64,
    pub s_min: f64,
    pub f_min: f64,
    pub duration_s: f64,
    pub hyperbolic: bool,
    /// The trajectory started inside the ball.
    pub open_entry: bool,
    /// The trajectory ended inside the ball.
    pub open_exit: bool,
    /// `(s, Gamma)` at entry, every interior sample, and exit.
    #[serde(skip)]
    pub gamma_samples: Vec<(f64, f64)>,
}

impl EncounterRecord {
    pub fn is_complete(&self) -> bool {
        !self.open_entry && !self.open_exit
    }

    /// Band test on the recorded `Gamma` range.
    pub fn in_band(&self) -> bool {
        self.gamma_0 > 0.0 && self.gamma_min >= 0.5 * self.gamma_0 && self.gamma_max <= 1.5 * self.gamma_0
    }
}

fn u_norm2(y: &[f64]) -> f64 {
    y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3]
}

fn ks_part<const N: usize>(y: &[f64; N]) -> [f64; 10] {
    std::array::from_fn(|i| y[i])
}

/// Transits through the Hill sphere `d2 < mu^(1/3)`.
///
/// The trajectory may carry extra components after the ten KS ones (e.g. a
/// tangent vector); only the first ten are used.
pub fn detect_transits<const N: usize>(traj: &Trajectory<N>, params: &SystemParams) -> Result<Vec<EncounterRecord>> {
    detect_transits_with_radius(traj, params, params.hill_radius_q())
}

pub fn detect_transits_with_radius<const N: usize>(
    traj: &Trajectory<N>,
    params: &SystemParams,
    radius: f64,
) -> Result<Vec<EncounterRecord>> {
    assert!(N >= 10, "trajectory must start with the ten KS components");
    let field = |_s: f64, y: &[f64; 10]| vector_field_ks(y, params);
    let inside = |y: &[f64; N]| u_norm2(y) < radius;
    let samples = &traj.samples;
    let mut out = Vec::new();
    let mut current: Option<Builder> = None;

    for (k, (s, y)) in samples.iter().enumerate() {
        let now_in = inside(y);
        if k == 0 {
            if now_in {
                current = Some(Builder::open(*s, &ks_part(y), params));
            }
            continue;
        }
        let (s_prev, y_prev) = &samples[k - 1];
        let was_in = inside(y_prev);
        let yp = ks_part(y_prev);
        let yc = ks_part(y);
        // interior closest approach: d/ds |u|^2 changes sign
        if let Some(b) = current.as_mut() {
            let rate = |y: &[f64; 10]| radial_rate(y, params);
            let (ra, rb) = (rate(&yp), rate(&yc));
            if ra < 0.0 && rb >= 0.0 {
                let (sm, ym) = locate_crossing(&field, (*s_prev, &yp), (*s, &yc), |_, y| radial_rate(y, params))?;
                b.closest(sm, &ym);
            }
        }
        match (was_in, now_in) {
            (false, true) => {
                let (se, ye) = locate_crossing(&field, (*s_prev, &yp), (*s, &yc), |_, y| u_norm2(y) - radius)?;
                let mut b = Builder::entry(se, &ye, params);
                b.sample(*s, &yc, params);
                current = Some(b);
            }
            (true, false) => {
                let (sx, yx) = locate_crossing(&field, (*s_prev, &yp), (*s, &yc), |_, y| u_norm2(y) - radius)?;
                if let Some(mut b) = current.take() {
                    b.sample(sx, &yx, params);
                    out.push(b.finish(sx, yx[4], false));
                }
            }
            (true, true) => {
                if let Some(b) = current.as_mut() {
                    b.sample(*s, &yc, params);
                }
            }
            (false, false) => {}
        }
    }
    if let (Some(b), Some((s, y))) = (current.take(), samples.last()) {
        out.push(b.finish(*s, y[4], true));
    }
    Ok(out)
}

/// `d/ds |u|^2` up to a positive factor: `u . (U - b)`.
fn radial_rate(y: &[f64; 10], params: &SystemParams) -> f64 {
    let f = vector_field_ks(y, params).unwrap_or([f64::NAN; 10]);
    y[0] * f[0] + y[1] * f[1] + y[2] * f[2] + y[3] * f[3]
}

struct Builder {
    s_entry: f64,
    f_entry: f64,
    gamma_0: f64,
    open_entry: bool,
    d2_min: f64,
    s_min: f64,
    f_min: f64,
    samples: Vec<(f64, f64)>,
}

impl Builder {
    fn entry(s: f64, y: &[f64; 10], params: &SystemParams) -> Self {
        let g = gamma(y[4], y[9], params);
        Self {
            s_entry: s,
            f_entry: y[4],
            gamma_0: g,
            open_entry: false,
            d2_min: u_norm2(y),
            s_min: s,
            f_min: y[4],
            samples: vec![(s, g)],
        }
    }

    fn open(s: f64, y: &[f64; 10], params: &SystemParams) -> Self {
        Self {
            open_entry: true,
            ..Self::entry(s, y, params)
        }
    }

    fn sample(&mut self, s: f64, y: &[f64; 10], params: &SystemParams) {
        self.samples.push((s, gamma(y[4], y[9], params)));
        self.closest(s, y);
    }

    fn closest(&mut self, s: f64, y: &[f64; 10]) {
        let d = u_norm2(y);
        if d < self.d2_min {
            self.d2_min = d;
            self.s_min = s;
            self.f_min = y[4];
        }
    }

    fn finish(mut self, s_exit: f64, f_exit: f64, open_exit: bool) -> EncounterRecord {
        // samples arrive in integration order; keep them increasing in s
        if self.samples.len() > 1 && self.samples[0].0 > self.samples[1].0 {
            self.samples.reverse();
        }
        let gmin = self.samples.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let gmax = self.samples.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let backward = s_exit < self.s_entry;
        // a backward run meets the exit first; report entry/exit in increasing s
        let (s_entry, s_exit, f_entry, f_exit, open_entry, open_exit) = if backward {
            (s_exit, self.s_entry, f_exit, self.f_entry, open_exit, self.open_entry)
        } else {
            (self.s_entry, s_exit, self.f_entry, f_exit, self.open_entry, open_exit)
        };
        let gamma_0 = if backward {
            self.samples.first().map(|p| p.1).unwrap_or(self.gamma_0)
        } else {
            self.gamma_0
        };
        let mut rec = EncounterRecord {
            s_entry,
            s_exit,
            f_entry,
            f_exit,
            gamma_0,
            gamma_min: gmin,
            gamma_max: gmax,
            d2_min: self.d2_min,
            s_min: self.s_min,
            f_min: self.f_min,
            duration_s: s_exit - s_entry,
            hyperbolic: false,
            open_entry,
            open_exit,
            gamma_samples: self.samples,
        };
        rec.hyperbolic = rec.in_band();
        rec
    }
}

/// Outcome of [`classify_hyperbolicity`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    pub hyperbolic: bool,
    pub reason: String,
    /// `c (1 - eps)^6 Gamma_0^(3/2)`; zero when `Gamma_0 <= 0`.
    pub mu_threshold: f64,
    pub mu_below_threshold: bool,
    /// `sqrt(Gamma_0 / 2)`, the positive eigenvalue of the limit matrix.
    pub exponent: Option<f64>,
}

/// Band verdict plus the mu-threshold diagnostic with constant `c`.
pub fn classify_hyperbolicity(rec: &EncounterRecord, params: &SystemParams, c: f64) -> Result<HyperbolicityReport> {
    if !rec.is_complete() {
        return Err(Error::InsufficientResolution(
            "open-ended transit cannot be classified".into(),
        ));
    }
    let threshold = if rec.gamma_0 > 0.0 {
        c * (1.0 - params.eps).powi(6) * rec.gamma_0.powf(1.5)
    } else {
        0.0
    };
    let (hyperbolic, reason) = if rec.gamma_0 <= 0.0 {
        (false, "slow/ballistic encounter".to_string())
    } else if rec.gamma_min < 0.5 * rec.gamma_0 {
        (false, format!("Gamma dropped to {:.6e} below Gamma_0/2", rec.gamma_min))
    } else if rec.gamma_max > 1.5 * rec.gamma_0 {
        (false, format!("Gamma rose to {:.6e} above 3 Gamma_0/2", rec.gamma_max))
    } else {
        (true, "Gamma stays within [Gamma_0/2, 3 Gamma_0/2]".to_string())
    };
    Ok(HyperbolicityReport {
        hyperbolic,
        reason,
        mu_threshold: threshold,
        mu_below_threshold: params.mu < threshold,
        exponent: origin_exponent(rec.gamma_0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftCheck {
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Largest finite-difference `|dGamma/ds|` over the stored samples against
/// `5 eps mu / (1 - eps)^2`. The factor 5 is a safety margin.
pub fn gamma_drift_bound(rec: &EncounterRecord, params: &SystemParams) -> Result<DriftCheck> {
    let s = &rec.gamma_samples;
    if s.len() < 5 {
        return Err(Error::InsufficientResolution(format!(
            "{} Gamma samples inside the transit, need at least 3 interior ones",
            s.len()
        )));
    }
    let measured = s
        .windows(2)
        .filter(|w| w[1].0 != w[0].0)
        .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
        .fold(0.0, f64::max);
    let bound = 5.0 * params.eps * params.mu / (1.0 - params.eps).powi(2);
    Ok(DriftCheck {
        measured,
        bound,
        pass: measured <= bound,
    })
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write>(records: &[EncounterRecord], mut out: W) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{propagate, Endpoint, StepperConfig};
    use crate::ks::{lift, CartesianState};

    const SJ: SystemParams = SystemParams::SUN_JUPITER;

    fn flyby_traj(params: &SystemParams, backward_to: f64, forward_to: f64, h: f64) -> Trajectory<10> {
        let c = CartesianState {
            r: [1.0 - SJ.mu + 1.921451079855507e-3, 0.0, 0.0],
            p: [0.2, 1.8, 0.6],
            f: 0.0,
            action: 0.0,
        };
        let mut c = c;
        c.action = -crate::dynamics::hamiltonian_cartesian(&c, params).unwrap();
        let ks = lift(&c, params).unwrap();
        let field = |_s: f64, y: &[f64; 10]| vector_field_ks(y, params);
        let back = propagate(&field, 0.0, &ks.to_array(), &StepperConfig::new(h, Endpoint::Time(backward_to))).unwrap();
        let fwd = propagate(&field, back.final_time, &back.final_state, &StepperConfig::new(h, Endpoint::Time(forward_to))).unwrap();
        fwd
    }

    fn synthetic(gamma_0: f64, gamma_max: f64) -> EncounterRecord {
        EncounterRecord {
            s_entry: 0.0,
            s_exit: 1.0,
            f_entry: 0.0,
            f_exit: 0.1,
            gamma_0,
            gamma_min: gamma_0,
            gamma_max,
            d2_min: 1e-3,
            s_min: 0.5,
            f_min: 0.05,
            duration_s: 1.0,
            hyperbolic: false,
            open_entry: false,
            open_exit: false,
            gamma_samples: vec![],
        }
    }

    #[test]
    fn flyby_single_transit() {
        let traj = flyby_traj(&SJ, -3.7 * std::f64::consts::PI, 3.5 * std::f64::consts::PI, std::f64::consts::PI * 1e-3);
        let recs = detect_transits(&traj, &SJ).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert!(r.is_complete());
        assert!(r.hyperbolic);
        let rad = SJ.hill_radius_q();
        let d = |s: f64| {
            let (_, y) = traj.samples.iter().min_by(|a, b| (a.0 - s).abs().total_cmp(&(b.0 - s).abs())).unwrap();
            u_norm2(y)
        };
        assert!(d(r.s_entry) > 0.9 * rad && d(r.s_exit) > 0.9 * rad);
        assert!(r.f_entry < 0.0 && r.f_exit > 0.0);
        assert!(r.d2_min <= 1.921451079855507e-3 * (1.0 + 1e-12));
        assert!(r.s_min > r.s_entry && r.s_min < r.s_exit);
        let check = gamma_drift_bound(r, &SJ).unwrap();
        assert!(check.pass, "{check:?}");
        let rep = classify_hyperbolicity(r, &SJ, 1.0).unwrap();
        assert!(rep.hyperbolic);
        assert!((rep.exponent.unwrap() - (r.gamma_0 / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn circular_gamma_is_constant() {
        let circ = SystemParams::new(SJ.mu, 0.0).unwrap();
        let traj = flyby_traj(&circ, -3.7 * std::f64::consts::PI, 3.5 * std::f64::consts::PI, std::f64::consts::PI * 2e-3);
        let recs = detect_transits(&traj, &circ).unwrap();
        assert_eq!(recs.len(), 1);
        assert!((recs[0].gamma_max - recs[0].gamma_min).abs() <= 1e-12);
        assert!(gamma_drift_bound(&recs[0], &circ).unwrap().measured <= 1e-12);
    }

    #[test]
    fn open_ended_transits_are_flagged() {
        let traj = flyby_traj(&SJ, -0.05, 3.5 * std::f64::consts::PI, std::f64::consts::PI * 1e-3);
        let recs = detect_transits(&traj, &SJ).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].open_entry && !recs[0].open_exit);
        assert!(classify_hyperbolicity(&recs[0], &SJ, 1.0).is_err());
    }

    #[test]
    fn no_transit_far_away() {
        let traj: Trajectory<10> = Trajectory {
            samples: vec![(0.0, [0.0, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]); 3],
            iteration_count: 2,
            final_time: 0.0,
            final_state: [0.0; 10],
        };
        assert!(detect_transits(&traj, &SJ).unwrap().is_empty());
    }

    #[test]
    fn band_violations() {
        let rep = classify_hyperbolicity(&synthetic(1.0, 2.0), &SJ, 1.0).unwrap();
        assert!(!rep.hyperbolic);
        let rep = classify_hyperbolicity(&synthetic(-0.1, -0.1), &SJ, 1.0).unwrap();
        assert!(!rep.hyperbolic);
        assert_eq!(rep.reason, "slow/ballistic encounter");
        assert_eq!(rep.exponent, None);
        let rep = classify_hyperbolicity(&synthetic(1.0, 1.2), &SJ, 1.0).unwrap();
        assert!(rep.hyperbolic);
        assert!(rep.mu_below_threshold);
    }

    #[test]
    fn drift_needs_samples() {
        assert!(matches!(
            gamma_drift_bound(&synthetic(1.0, 1.0), &SJ),
            Err(Error::InsufficientResolution(_))
        ));
    }

    #[test]
    fn jsonl_round_trip() {
        let rec = synthetic(0.046012345678901234, 0.05);
        let mut buf = Vec::new();
        write_jsonl(&[rec.clone(), rec.clone()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back: EncounterRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(back.gamma_0, rec.gamma_0);
        assert!(text.contains("\"s_entry\""));
    }
}
