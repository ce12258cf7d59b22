//! Power profiles and metric windows.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::params::ParamSet;

/// Slack used when comparing sample times with breakpoints and window edges.
pub const TIME_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("unknown scenario {0:?} (expected large-step, small-steps or a file path)")]
    Unknown(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GovernorKind {
    Pg,
    Lpf,
    None,
}

impl GovernorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GovernorKind::Pg => "pg",
            GovernorKind::Lpf => "lpf",
            GovernorKind::None => "none",
        }
    }
}

impl fmt::Display for GovernorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GovernorKind {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pg" => Ok(GovernorKind::Pg),
            "lpf" => Ok(GovernorKind::Lpf),
            "none" => Ok(GovernorKind::None),
            other => Err(ScenarioError::Parse(format!("unknown governor {other:?}"))),
        }
    }
}

/// Half-open time interval `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Self {
        Window { start, end }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start - TIME_TOLERANCE && t < self.end - TIME_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// `(time s, level W)`, held until the next breakpoint.
    pub breakpoints: Vec<(f64, f64)>,
    pub duration: f64,
    pub governor: GovernorKind,
    pub tracking: Window,
    pub production: Window,
    pub auxiliary: Window,
}

impl Scenario {
    /// Requested power at time `t`.
    pub fn level_at(&self, t: f64) -> f64 {
        self.breakpoints
            .iter()
            .take_while(|(tb, _)| *tb <= t + TIME_TOLERANCE)
            .last()
            .map_or(self.breakpoints[0].1, |b| b.1)
    }

    pub fn validate(&self, params: &ParamSet) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(format!("{}: {m}", self.name)));
        if self.breakpoints.is_empty() {
            return bad("no breakpoints".into());
        }
        if self.breakpoints[0].0 != 0.0 {
            return bad("first breakpoint must be at t = 0".into());
        }
        if let Some(w) = self.breakpoints.windows(2).find(|w| w[1].0 <= w[0].0) {
            return bad(format!("breakpoint times not increasing at {} s", w[1].0));
        }
        let (lo, hi) = (params.solver.power_min, params.solver.power_max);
        if let Some((t, l)) = self.breakpoints.iter().find(|(_, l)| !(*l >= lo && *l <= hi)) {
            return bad(format!("level {l} W at {t} s outside [{lo}, {hi}] W"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration {} s", self.duration));
        }
        if let Some((t, _)) = self.breakpoints.iter().find(|(t, _)| *t > self.duration) {
            return bad(format!("breakpoint at {t} s after the end"));
        }
        for (label, w) in [("tracking", self.tracking), ("production", self.production), ("auxiliary", self.auxiliary)] {
            if !(w.start >= 0.0 && w.start < w.end && w.end <= self.duration + TIME_TOLERANCE) {
                return bad(format!("{label} window [{}, {}) outside [0, {}]", w.start, w.end, self.duration));
            }
        }
        Ok(())
    }

    /// Low to high at 200 s, back to low at 400 s, 600 s in total.
    pub fn large_step(params: &ParamSet) -> Self {
        let s = &params.scenarios;
        Scenario {
            name: "large-step".into(),
            breakpoints: vec![(0.0, s.large_low), (200.0, s.large_high), (400.0, s.large_low)],
            duration: 600.0,
            governor: GovernorKind::Pg,
            tracking: Window::new(200.0, 600.0),
            production: Window::new(200.0, 400.0),
            auxiliary: Window::new(400.0, 600.0),
        }
    }

    /// Three equal up-steps at 200, 400 and 600 s, three down-steps at 800,
    /// 1000 and 1200 s, 1400 s in total.
    pub fn small_steps(params: &ParamSet) -> Self {
        let s = &params.scenarios;
        let level = |k: f64| s.small_base + k * s.small_step;
        Scenario {
            name: "small-steps".into(),
            breakpoints: vec![
                (0.0, level(0.0)),
                (200.0, level(1.0)),
                (400.0, level(2.0)),
                (600.0, level(3.0)),
                (800.0, level(2.0)),
                (1000.0, level(1.0)),
                (1200.0, level(0.0)),
            ],
            duration: 1400.0,
            governor: GovernorKind::Pg,
            tracking: Window::new(200.0, 1300.0),
            production: Window::new(200.0, 800.0),
            auxiliary: Window::new(800.0, 1300.0),
        }
    }

    /// Constant request for `duration` seconds; every window spans the run.
    pub fn constant(level: f64, duration: f64) -> Self {
        let all = Window::new(0.0, duration);
        Scenario {
            name: "constant".into(),
            breakpoints: vec![(0.0, level)],
            duration,
            governor: GovernorKind::Pg,
            tracking: all,
            production: all,
            auxiliary: all,
        }
    }

    pub fn shipped(params: &ParamSet) -> Vec<Scenario> {
        vec![Scenario::large_step(params), Scenario::small_steps(params)]
    }

    pub fn by_name(name: &str, params: &ParamSet) -> Result<Self, ScenarioError> {
        match name {
            "large-step" => Ok(Scenario::large_step(params)),
            "small-steps" => Ok(Scenario::small_steps(params)),
            other => Err(ScenarioError::Unknown(other.into())),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    duration_s: f64,
    #[serde(default = "default_governor")]
    governor: GovernorKind,
    /// `[[time_s, level_w], ...]`
    profile_w: Vec<(f64, f64)>,
    windows: WindowsFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowsFile {
    tracking_s: (f64, f64),
    production_s: (f64, f64),
    auxiliary_s: (f64, f64),
}

fn default_governor() -> GovernorKind {
    GovernorKind::Pg
}

/// Parses a scenario document, e.g.
///
/// ```toml
/// name = "ramp"
/// duration_s = 300.0
/// governor = "lpf"
/// profile_w = [[0.0, 5000.0], [100.0, 9000.0]]
/// [windows]
/// tracking_s = [100.0, 300.0]
/// production_s = [100.0, 200.0]
/// auxiliary_s = [200.0, 300.0]
/// ```
pub fn load_scenario(text: &str, params: &ParamSet) -> Result<Scenario, ScenarioError> {
    let f: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let w = |p: (f64, f64)| Window::new(p.0, p.1);
    let s = Scenario {
        name: f.name,
        breakpoints: f.profile_w,
        duration: f.duration_s,
        governor: f.governor,
        tracking: w(f.windows.tracking_s),
        production: w(f.windows.production_s),
        auxiliary: w(f.windows.auxiliary_s),
    };
    s.validate(params)?;
    Ok(s)
}

pub fn emit_scenario(s: &Scenario) -> String {
    let mut out = format!("name = {:?}\nduration_s = {:?}\ngovernor = \"{}\"\nprofile_w = [", s.name, s.duration, s.governor);
    let pts: Vec<String> = s.breakpoints.iter().map(|(t, l)| format!("[{t:?}, {l:?}]")).collect();
    out.push_str(&pts.join(", "));
    out.push_str("]\n\n[windows]\n");
    for (k, w) in [("tracking_s", s.tracking), ("production_s", s.production), ("auxiliary_s", s.auxiliary)] {
        out.push_str(&format!("{k} = [{:?}, {:?}]\n", w.start, w.end));
    }
    out
}
