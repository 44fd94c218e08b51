//! Discretization of the simulation window.

use crate::error::{Error, Result};

/// Simulation window of `duration_ms` split into fixed steps of `dt_ms`.
///
/// Step index `s` corresponds to physical time `s * dt_ms`. Every spike time in
/// the crate is a step index in `[0, n_steps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    duration_ms: f64,
    dt_ms: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(duration_ms: f64, dt_ms: f64) -> Result<Self> {
        if !(duration_ms.is_finite() && duration_ms > 0.0) {
            return Err(Error::config(
                "duration_ms",
                format!("must be positive and finite, got {duration_ms}"),
            ));
        }
        if !(dt_ms.is_finite() && dt_ms > 0.0) {
            return Err(Error::config(
                "dt_ms",
                format!("must be positive and finite, got {dt_ms}"),
            ));
        }
        if dt_ms > duration_ms {
            return Err(Error::config(
                "dt_ms",
                format!("step {dt_ms} ms exceeds the window of {duration_ms} ms"),
            ));
        }
        let n_steps = (duration_ms / dt_ms).ceil() as usize;
        Ok(Self {
            duration_ms,
            dt_ms,
            n_steps: n_steps.max(1),
        })
    }

    pub fn duration_ms(&self) -> f64 {
        self.duration_ms
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_ms / 1000.0
    }

    pub fn dt_ms(&self) -> f64 {
        self.dt_ms
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Physical time of a step index in milliseconds.
    pub fn time_ms(&self, step: usize) -> f64 {
        step as f64 * self.dt_ms
    }
}

/// Free-function alias of [`TimeGrid::new`].
pub fn build_time_grid(duration_ms: f64, dt_ms: f64) -> Result<TimeGrid> {
    TimeGrid::new(duration_ms, dt_ms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_counts() {
        assert_eq!(build_time_grid(100.0, 1.0).unwrap().n_steps(), 100);
        // ceil(100 / 3) = 33.33.. -> 34
        assert_eq!(build_time_grid(100.0, 3.0).unwrap().n_steps(), 34);
        assert_eq!(build_time_grid(1.0, 1.0).unwrap().n_steps(), 1);
    }

    #[test]
    fn rejects_bad_arguments_by_field() {
        for (d, dt, field) in [
            (0.0, 1.0, "duration_ms"),
            (-5.0, 1.0, "duration_ms"),
            (f64::NAN, 1.0, "duration_ms"),
            (10.0, 0.0, "dt_ms"),
            (10.0, -1.0, "dt_ms"),
            (10.0, 20.0, "dt_ms"),
        ] {
            match build_time_grid(d, dt) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected config error for ({d}, {dt}), got {other:?}"),
            }
        }
    }

    #[test]
    fn time_of_step() {
        let g = build_time_grid(50.0, 0.5).unwrap();
        assert_eq!(g.n_steps(), 100);
        assert_eq!(g.time_ms(10), 5.0);
    }
}
