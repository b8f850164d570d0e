//! Adaptive Dormand–Prince 5(4) integrator for complex state vectors.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// `y += a·x`.
fn axpy(y: &mut [C64], x: &[C64], a: f64) {
    for (yi, xi) in y.iter_mut().zip(x) {
        yi.re += a * xi.re;
        yi.im += a * xi.im;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
        }
    }
}

/// Step-size limits for one integration call.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub dt_max: f64,
    pub dt_min: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn with_dt_max(dt_max: f64) -> Self {
        Self {
            dt_max,
            dt_min: dt_max * 1e-12,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Reusable workspace for integrating `dy/dt = f(t, y)`.
pub struct DormandPrince {
    tol: Tolerances,
    k: [Vec<C64>; 7],
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
    /// Step size proposed for the next call.
    pub h: f64,
    pub stats: StepStats,
}

impl DormandPrince {
    pub fn new(dim: usize, tol: Tolerances) -> Self {
        let zero = C64::new(0.0, 0.0);
        Self {
            tol,
            k: std::array::from_fn(|_| vec![zero; dim]),
            y_stage: vec![zero; dim],
            y_new: vec![zero; dim],
            h: 0.0,
            stats: StepStats::default(),
        }
    }

    fn error_norm(&mut self, y: &[C64], h: f64) -> f64 {
        let n = y.len();
        let err = &mut self.y_stage;
        err.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for (s, e) in E.iter().enumerate() {
            if *e != 0.0 {
                axpy(err, &self.k[s], h * e);
            }
        }
        let mut sum = 0.0;
        for i in 0..n {
            let mag = y[i].norm_sqr().max(self.y_new[i].norm_sqr()).sqrt();
            let scale = self.tol.atol + self.tol.rtol * mag;
            sum += err[i].norm_sqr() / (scale * scale);
        }
        (sum / n as f64).sqrt()
    }

    /// Evaluate the first stage at `(t, y)`; required before [`Self::try_step`]
    /// whenever `y` was changed outside the integrator.
    pub fn prime<F>(&mut self, f: &mut F, t: f64, y: &[C64])
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        f(t, y, &mut self.k[0]);
        self.stats.evaluations += 1;
    }

    /// One trial step of size `h`; returns the scaled error norm. The candidate
    /// solution is available from [`Self::candidate`] until the next call.
    pub fn try_step<F>(&mut self, f: &mut F, t: f64, y: &[C64], h: f64) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        for s in 1..7 {
            self.y_stage.copy_from_slice(y);
            for (j, a) in A[s][..s].iter().enumerate() {
                if *a != 0.0 {
                    axpy(&mut self.y_stage, &self.k[j], h * a);
                }
            }
            f(t + C[s] * h, &self.y_stage, &mut self.k[s]);
            self.stats.evaluations += 1;
        }
        // Stage 7 is evaluated at the fifth-order solution (FSAL).
        self.y_new.copy_from_slice(&self.y_stage);
        self.error_norm(y, h)
    }

    pub fn candidate(&self) -> &[C64] {
        &self.y_new
    }

    /// Take the last candidate as the new state and reuse its derivative.
    pub fn accept(&mut self, y: &mut [C64]) {
        y.copy_from_slice(&self.y_new);
        self.k.swap(0, 6);
        self.stats.accepted += 1;
    }

    /// Step-size factor after a trial with error norm `err`.
    pub fn factor(err: f64) -> f64 {
        if err <= 1.0 {
            if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            }
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.1, 1.0)
        }
    }

    /// Advance `y` from `t0` to `t1` exactly, with `f` smooth on `[t0, t1]`.
    pub fn integrate<F>(
        &mut self,
        mut f: F,
        t0: f64,
        t1: f64,
        y: &mut [C64],
        control: &StepControl,
    ) -> Result<()>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        if t1 <= t0 {
            return Ok(());
        }
        let mut t = t0;
        self.prime(&mut f, t, y);
        if self.h <= 0.0 {
            self.h = (0.01 * (t1 - t0)).min(control.dt_max);
        }
        let mut steps = 0usize;
        while t < t1 {
            let mut h = self.h.min(control.dt_max);
            let last = t + h >= t1 - 1e-12 * (t1 - t0);
            if last {
                h = t1 - t;
            }
            let err = self.try_step(&mut f, t, y, h);
            if !err.is_finite() {
                return Err(Error::StepFailure {
                    time: t,
                    reason: "non-finite error estimate".into(),
                });
            }
            let factor = Self::factor(err);
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                self.accept(y);
                if !last || factor < 1.0 {
                    self.h = (h * factor).min(control.dt_max);
                }
            } else {
                self.stats.rejected += 1;
                self.h = h * factor;
                if self.h < control.dt_min {
                    return Err(Error::StepFailure {
                        time: t,
                        reason: format!("step size {:e} below minimum", self.h),
                    });
                }
            }
            steps += 1;
            if steps > control.max_steps {
                return Err(Error::StepFailure {
                    time: t,
                    reason: "maximum number of steps exceeded".into(),
                });
            }
        }
        Ok(())
    }
}
