//! Fixed-step Runge-Kutta integration with Luther's seven-stage sixth-order
//! scheme, endpoint adaptation and event localization.

use crate::error::{Error, Result};

/// Right-hand side `dy/dt = F(t, y)`.
pub trait Field<const N: usize> {
    fn eval(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;
}

impl<const N: usize, F> Field<N> for F
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    fn eval(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]> {
        self(t, y)
    }
}

const SQRT21: f64 = 4.582_575_694_955_84;

/// Nodes of the tableau.
pub const LUTHER_C: [f64; 7] = [
    0.0,
    1.0,
    0.5,
    2.0 / 3.0,
    (7.0 - SQRT21) / 14.0,
    (7.0 + SQRT21) / 14.0,
    1.0,
];

/// Weights; the second and fourth vanish.
pub const LUTHER_B: [f64; 7] = [
    9.0 / 180.0,
    0.0,
    64.0 / 180.0,
    0.0,
    49.0 / 180.0,
    49.0 / 180.0,
    9.0 / 180.0,
];

/// Strictly lower-triangular coupling coefficients, row by row.
pub fn luther_a() -> [[f64; 6]; 7] {
    let s = SQRT21;
    [
        [0.0; 6],
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 8.0, 1.0 / 8.0, 0.0, 0.0, 0.0, 0.0],
        [8.0 / 27.0, 2.0 / 27.0, 8.0 / 27.0, 0.0, 0.0, 0.0],
        [
            (-21.0 + 9.0 * s) / 392.0,
            (-56.0 + 8.0 * s) / 392.0,
            (336.0 - 48.0 * s) / 392.0,
            (-63.0 + 3.0 * s) / 392.0,
            0.0,
            0.0,
        ],
        [
            (-1155.0 - 255.0 * s) / 1960.0,
            (-280.0 - 40.0 * s) / 1960.0,
            (-320.0 * s) / 1960.0,
            (63.0 + 363.0 * s) / 1960.0,
            (2352.0 + 392.0 * s) / 1960.0,
            0.0,
        ],
        [
            (330.0 + 105.0 * s) / 180.0,
            120.0 / 180.0,
            (-200.0 + 280.0 * s) / 180.0,
            (126.0 - 189.0 * s) / 180.0,
            (-686.0 - 126.0 * s) / 180.0,
            (490.0 - 70.0 * s) / 180.0,
        ],
    ]
}

/// Precomputed tableau, so the hot loop does no square roots.
#[derive(Debug, Clone)]
pub struct Luther {
    a: [[f64; 6]; 7],
}

impl Default for Luther {
    fn default() -> Self {
        Self { a: luther_a() }
    }
}

impl Luther {
    /// One step of size `h` (which may be negative) from `(t, y)`.
    pub fn step<const N: usize, F: Field<N>>(&self, field: &F, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N]> {
        let mut k = [[0.0; N]; 7];
        for stage in 0..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = self.a[stage][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            let ks = field.eval(t + LUTHER_C[stage] * h, &ys)?;
            if ks.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { stage: stage + 1 });
            }
            k[stage] = ks;
        }
        let mut out = *y;
        for (stage, ks) in k.iter().enumerate() {
            let b = LUTHER_B[stage];
            if b != 0.0 {
                for i in 0..N {
                    out[i] += h * b * ks[i];
                }
            }
        }
        Ok(out)
    }
}

/// One RK6 step with a freshly built tableau.
pub fn rk6_step<const N: usize, F: Field<N>>(field: &F, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N]> {
    Luther::default().step(field, t, y, h)
}

/// Where a propagation stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Endpoint {
    /// Land exactly on this value of the independent variable. The
    /// direction of integration follows from its sign relative to the start.
    Time(f64),
    /// Land on `y[index] == target`, which must be reached monotonically.
    Coordinate { index: usize, target: f64, backward: bool },
    /// A fixed number of full steps.
    Steps { count: usize, backward: bool },
    /// Run until the observer stops the propagation.
    Open { backward: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    /// Step magnitude, strictly positive.
    pub step: f64,
    pub max_steps: usize,
    pub endpoint: Endpoint,
    /// Keep every accepted sample.
    pub record: bool,
}

impl StepperConfig {
    pub fn new(step: f64, endpoint: Endpoint) -> Self {
        Self {
            step,
            max_steps: 50_000_000,
            endpoint,
            record: true,
        }
    }

    pub fn without_samples(mut self) -> Self {
        self.record = false;
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidConfig(format!("step must be positive, got {}", self.step)));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// What the observer wants after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Result of a propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    /// `(t, y)` pairs including the initial one; empty if recording was off.
    pub samples: Vec<(f64, [f64; N])>,
    pub iteration_count: usize,
    pub final_time: f64,
    pub final_state: [f64; N],
}

impl<const N: usize> Trajectory<N> {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|(t, _)| *t)
    }
}

/// Secant tolerances for the adapted final step.
pub const ENDPOINT_MAX_ITER: usize = 10;
pub const ENDPOINT_TOL: f64 = 1e-13;

/// Integrates with fixed steps to the configured endpoint.
pub fn propagate<const N: usize, F: Field<N>>(
    field: &F,
    t0: f64,
    y0: &[f64; N],
    config: &StepperConfig,
) -> Result<Trajectory<N>> {
    propagate_observed(field, t0, y0, config, |_, _| Control::Continue)
}

/// As [`propagate`], calling `observer` after every accepted step. The
/// observer may rescale components of the state (e.g. tangent vectors) and
/// may stop the run early.
pub fn propagate_observed<const N: usize, F, O>(
    field: &F,
    t0: f64,
    y0: &[f64; N],
    config: &StepperConfig,
    mut observer: O,
) -> Result<Trajectory<N>>
where
    F: Field<N>,
    O: FnMut(f64, &mut [f64; N]) -> Control,
{
    config.validate()?;
    let rk = Luther::default();
    let mut traj = Trajectory {
        samples: Vec::new(),
        iteration_count: 0,
        final_time: t0,
        final_state: *y0,
    };
    if config.record {
        traj.samples.push((t0, *y0));
    }
    let mut y = *y0;
    let mut t = t0;

    let mut accept = |traj: &mut Trajectory<N>, t: f64, y: &mut [f64; N]| {
        traj.iteration_count += 1;
        let ctl = observer(t, y);
        if config.record {
            traj.samples.push((t, *y));
        }
        ctl
    };

    match config.endpoint {
        Endpoint::Time(target) => {
            let span = target - t0;
            let dir = if span < 0.0 { -1.0 } else { 1.0 };
            let h = dir * config.step;
            let ratio = span.abs() / config.step;
            let nearest = ratio.round();
            // grid times are t0 + k h so rounding does not accumulate
            let (full, partial) = if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
                (nearest as usize, false)
            } else {
                (ratio.floor() as usize, true)
            };
            if full + partial as usize > config.max_steps {
                return Err(Error::MaxSteps { max_steps: config.max_steps });
            }
            for k in 0..full {
                y = rk.step(field, t, &y, h)?;
                t = if k + 1 == full && !partial { target } else { t0 + (k + 1) as f64 * h };
                if accept(&mut traj, t, &mut y) == Control::Stop {
                    return Ok(finish(traj, t, y));
                }
            }
            if partial {
                y = rk.step(field, t, &y, target - t)?;
                t = target;
                accept(&mut traj, t, &mut y);
            }
        }
        Endpoint::Steps { count, backward } => {
            if count > config.max_steps {
                return Err(Error::MaxSteps { max_steps: config.max_steps });
            }
            let h = if backward { -config.step } else { config.step };
            for k in 0..count {
                y = rk.step(field, t, &y, h)?;
                t = t0 + (k + 1) as f64 * h;
                if accept(&mut traj, t, &mut y) == Control::Stop {
                    break;
                }
            }
        }
        Endpoint::Open { backward } => {
            let h = if backward { -config.step } else { config.step };
            let mut k = 0usize;
            loop {
                if k >= config.max_steps {
                    return Err(Error::MaxSteps { max_steps: config.max_steps });
                }
                y = rk.step(field, t, &y, h)?;
                k += 1;
                t = t0 + k as f64 * h;
                if accept(&mut traj, t, &mut y) == Control::Stop {
                    break;
                }
            }
        }
        Endpoint::Coordinate { index, target, backward } => {
            assert!(index < N, "monitored coordinate out of range");
            let h = if backward { -config.step } else { config.step };
            let side = |v: f64| v - target;
            let mut k = 0usize;
            if side(y[index]) == 0.0 {
                return Ok(finish(traj, t, y));
            }
            loop {
                if k >= config.max_steps {
                    return Err(Error::MaxSteps { max_steps: config.max_steps });
                }
                let next = rk.step(field, t, &y, h)?;
                let g0 = side(y[index]);
                let g1 = side(next[index]);
                if g1 == 0.0 || g0.signum() != g1.signum() {
                    // discard the crossing step, land on the target instead
                    let (hf, yf) = secant_step(&rk, field, t, &y, h, index, target, g0, g1, next)?;
                    t += hf;
                    y = yf;
                    y[index] = target;
                    accept(&mut traj, t, &mut y);
                    break;
                }
                y = next;
                k += 1;
                t = t0 + k as f64 * h;
                if accept(&mut traj, t, &mut y) == Control::Stop {
                    break;
                }
            }
        }
    }
    Ok(finish(traj, t, y))
}

fn finish<const N: usize>(mut traj: Trajectory<N>, t: f64, y: [f64; N]) -> Trajectory<N> {
    traj.final_time = t;
    traj.final_state = y;
    traj
}

#[allow(clippy::too_many_arguments)]
fn secant_step<const N: usize, F: Field<N>>(
    rk: &Luther,
    field: &F,
    t: f64,
    y: &[f64; N],
    h: f64,
    index: usize,
    target: f64,
    g0: f64,
    g1: f64,
    full: [f64; N],
) -> Result<(f64, [f64; N])> {
    if g1 == 0.0 {
        return Ok((h, full));
    }
    // Illinois-modified secant on the step size, kept inside the sign bracket
    let (mut ha, mut ga) = (0.0, g0);
    let (mut hb, mut gb) = (h, g1);
    let mut best = (h, full, g1.abs());
    let mut side = 0i8;
    for _ in 0..ENDPOINT_MAX_ITER {
        let hn = hb - gb * (hb - ha) / (gb - ga);
        let yn = rk.step(field, t, y, hn)?;
        let gn = yn[index] - target;
        if gn.abs() < best.2 {
            best = (hn, yn, gn.abs());
        }
        if gn.abs() <= ENDPOINT_TOL * target.abs().max(1.0) {
            return Ok((hn, yn));
        }
        if gn.signum() == gb.signum() {
            hb = hn;
            gb = gn;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            ha = hb;
            ga = gb;
            hb = hn;
            gb = gn;
            side = 1;
        }
    }
    Err(Error::EndpointNotConverged { residual: best.2 })
}

/// Localizes a zero of `event(t, y)` between two consecutive samples by
/// re-integrating from the left one with shortened steps (Illinois-type
/// regula falsi). Returns the time and state at the crossing.
pub fn locate_crossing<const N: usize, F, E>(
    field: &F,
    left: (f64, &[f64; N]),
    right: (f64, &[f64; N]),
    event: E,
) -> Result<(f64, [f64; N])>
where
    F: Field<N>,
    E: Fn(f64, &[f64; N]) -> f64,
{
    const TOL: f64 = 1e-12;
    let rk = Luther::default();
    let (ta, ya) = left;
    let (tb, yb) = right;
    let mut fa = event(ta, ya);
    let mut fb = event(tb, yb);
    if fa == 0.0 {
        return Ok((ta, *ya));
    }
    if fb == 0.0 {
        return Ok((tb, *yb));
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoSignChange);
    }
    let (mut a, mut b) = (0.0, tb - ta);
    let mut side = 0i8;
    for _ in 0..200 {
        let mut h = (a * fb - b * fa) / (fb - fa);
        if !(h > a.min(b) && h < a.max(b)) {
            h = 0.5 * (a + b);
        }
        let y = rk.step(field, ta, ya, h)?;
        let fh = event(ta + h, &y);
        if fh.abs() <= TOL || (b - a).abs() <= f64::EPSILON * ta.abs().max(1.0) {
            return Ok((ta + h, y));
        }
        if fh.signum() == fb.signum() {
            b = h;
            fb = fh;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = h;
            fa = fh;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::EndpointNotConverged { residual: fa.abs().min(fb.abs()) })
}
