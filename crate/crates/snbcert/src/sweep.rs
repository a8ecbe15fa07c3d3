//! Noise-parameter sweeps of the certification game and their CSV output.

use std::io::{self, Write};

use rayon::prelude::*;
use snbcert_core::channels::{compose, dephasing, depolarizing, KrausChannel};
use snbcert_core::game::{certification_game, evaluate, GameResult, MeasurementModel, Mode};

use crate::formats::{verdict_str, Channel};
use crate::parallel::pool;
use crate::FormatError;

/// Channel family indexed by the noise parameter λ ∈ [0, 1].
#[derive(Clone, Debug)]
pub enum Family {
    Depolarizing,
    Dephasing,
    /// Depolarizing noise of strength λ applied after a fixed channel.
    File(Channel),
}

impl Family {
    pub fn channel(&self, d: usize, lambda: f64) -> Result<KrausChannel, FormatError> {
        Ok(match self {
            Self::Depolarizing => depolarizing(d, lambda)?,
            Self::Dephasing => dephasing(d, lambda)?,
            Self::File(ch) => compose(&depolarizing(ch.as_map().d_out(), lambda)?, &ch.to_kraus())?,
        })
    }
}

/// Inclusive grid `start, start + step, …, stop`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl LambdaGrid {
    /// Parses `start:stop:step`.
    pub fn parse(s: &str) -> Result<Self, FormatError> {
        let parts: Vec<&str> = s.split(':').collect();
        let nums = match parts.as_slice() {
            [a, b, c] => [a, b, c].map(|p| p.trim().parse::<f64>()),
            _ => return Err(FormatError::Invalid(format!("lambda grid must be start:stop:step, got {s:?}"))),
        };
        let [start, stop, step] = match nums {
            [Ok(a), Ok(b), Ok(c)] => [a, b, c],
            _ => return Err(FormatError::Invalid(format!("lambda grid has a non-numeric field: {s:?}"))),
        };
        let grid = Self { start, stop, step };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        if self.step.is_nan() || self.step <= 0.0 {
            return Err(FormatError::Invalid(format!("lambda grid step must be > 0, got {}", self.step)));
        }
        if !(0.0..=1.0).contains(&self.start) || !(0.0..=1.0).contains(&self.stop) || self.stop < self.start {
            return Err(FormatError::Invalid(format!(
                "lambda grid bounds must satisfy 0 <= start <= stop <= 1, got {}:{}",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    /// Grid points computed as `start + i·step`; a last point within 1e-9 of
    /// `stop` is snapped onto it.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| {
                let v = self.start + i as f64 * self.step;
                if (v - self.stop).abs() < 1e-9 {
                    self.stop
                } else {
                    v
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub family: Family,
    pub d: usize,
    pub k: usize,
    pub grid: LambdaGrid,
    pub mode: Mode,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub k: usize,
    pub result: GameResult,
}

/// Evaluates every grid point. In sampled mode point `i` uses seed
/// `seed + i` (wrapping).
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, FormatError> {
    cfg.grid.validate()?;
    if let Family::File(ch) = &cfg.family {
        let m = ch.as_map();
        if m.d_in() != cfg.d || m.d_out() != cfg.d {
            return Err(FormatError::Invalid(format!(
                "channel file is {} -> {}, sweep dimension is {}",
                m.d_in(),
                m.d_out(),
                cfg.d
            )));
        }
    }
    let spec = certification_game(cfg.d, cfg.k, MeasurementModel::BellProjector)?;
    let points = cfg.grid.points();
    pool().install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, &lambda)| {
                let ch = cfg.family.channel(cfg.d, lambda)?;
                let mode = match cfg.mode {
                    Mode::Exact => Mode::Exact,
                    Mode::Sampled { shots, seed } => Mode::Sampled {
                        shots,
                        seed: seed.wrapping_add(i as u64),
                    },
                };
                Ok(SweepRow {
                    lambda,
                    k: cfg.k,
                    result: evaluate(&spec, &ch, mode)?,
                })
            })
            .collect()
    })
}

/// `v` rounded to 12 significant digits, printed without exponent.
pub fn fmt12(v: f64) -> String {
    let rounded: f64 = format!("{v:.11e}").parse().expect("float round trip");
    if rounded == 0.0 {
        "0".into()
    } else {
        format!("{rounded}")
    }
}

pub const CSV_HEADER: &str = "lambda,k,exact_payoff,estimate,stderr,verdict";

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let opt = |v: Option<f64>| v.map(fmt12).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt12(r.lambda),
            r.k,
            fmt12(r.result.exact_payoff),
            opt(r.result.estimate),
            opt(r.result.stderr),
            verdict_str(r.result.verdict)
        )?;
    }
    Ok(())
}

/// λ values where the exact payoff changes sign, by linear interpolation
/// between neighbouring rows. A row exactly at zero counts as a crossing.
pub fn zero_crossings(rows: &[SweepRow]) -> Vec<f64> {
    let mut out = Vec::new();
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (fa, fb) = (a.result.exact_payoff, b.result.exact_payoff);
        if fa == 0.0 {
            out.push(a.lambda);
        } else if fa * fb < 0.0 {
            out.push(a.lambda + (b.lambda - a.lambda) * fa / (fa - fb));
        }
    }
    if let Some(last) = rows.last() {
        if last.result.exact_payoff == 0.0 {
            out.push(last.lambda);
        }
    }
    out
}
