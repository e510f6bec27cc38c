//! Sweeps of the exploration constant.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::driver::optimize::optimize;
use crate::driver::settings::OptimizerSettings;
use crate::error::{Error, Result};
use crate::poly::Polynomial;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distribution {
    /// `exp(uniform(ln lo, ln hi))`
    Log,
    Lin,
}

/// Parameters of a sweep, written `lo:hi:log|lin:N` on the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterSpec {
    pub lo: f64,
    pub hi: f64,
    pub distribution: Distribution,
    pub samples: usize,
}

impl ScatterSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lo.is_finite()
            && self.hi.is_finite()
            && self.lo <= self.hi
            && self.lo >= 0.0
            && (self.distribution == Distribution::Lin || self.lo > 0.0);
        if !ok {
            return Err(Error::InvalidSetting(format!("invalid constant range {}:{}", self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        match self.distribution {
            Distribution::Log => rng.gen_range(self.lo.ln()..=self.hi.ln()).exp().clamp(self.lo, self.hi),
            Distribution::Lin => rng.gen_range(self.lo..=self.hi),
        }
    }
}

impl FromStr for ScatterSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSetting(format!("expected lo:hi:log|lin:N, got `{}`", s));
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, dist, n] = parts.as_slice() else { return Err(bad()) };
        let distribution = match *dist {
            "log" => Distribution::Log,
            "lin" => Distribution::Lin,
            _ => return Err(bad()),
        };
        let spec = ScatterSpec {
            lo: lo.parse().map_err(|_| bad())?,
            hi: hi.parse().map_err(|_| bad())?,
            distribution,
            samples: n.parse().map_err(|_| bad())?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterRow {
    pub cp: f64,
    pub final_ops: u64,
    pub seed: u64,
    pub elapsed_ms: u128,
}

/// Runs `base` once per drawn constant. Constants and per-run seeds come
/// from one generator seeded with `seed`, so everything but the timings is
/// reproducible; runs may execute in parallel.
pub fn scatter_experiment(
    polys: &[Polynomial],
    base: &OptimizerSettings,
    spec: &ScatterSpec,
    seed: u64,
) -> Result<Vec<ScatterRow>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(f64, u64)> = (0..spec.samples).map(|_| (spec.draw(&mut rng), rng.gen())).collect();
    draws
        .into_par_iter()
        .map(|(cp, seed)| {
            let mut s = base.clone();
            s.mcts.cp = cp;
            s.seed = seed;
            let start = Instant::now();
            let r = optimize(polys, &s)?;
            Ok(ScatterRow { cp, final_ops: r.after.total, seed, elapsed_ms: start.elapsed().as_millis() })
        })
        .collect()
}

/// Writes rows under the header `cp,final_ops,seed,elapsed_ms`.
pub fn write_csv<W: Write>(rows: &[ScatterRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(["cp", "final_ops", "seed", "elapsed_ms"]).map_err(io)?;
    for r in rows {
        w.write_record([r.cp.to_string(), r.final_ops.to_string(), r.seed.to_string(), r.elapsed_ms.to_string()])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::settings::Level;
    use crate::frontend::parse_expression;
    use crate::poly::Symbols;

    #[test]
    fn parses_spec() {
        let s: ScatterSpec = "0.01:10:log:4000".parse().unwrap();
        assert_eq!(s, ScatterSpec { lo: 0.01, hi: 10.0, distribution: Distribution::Log, samples: 4000 });
        assert!("0:10:log:5".parse::<ScatterSpec>().is_err());
        assert!("2:1:lin:5".parse::<ScatterSpec>().is_err());
        assert!("1:2:cube:5".parse::<ScatterSpec>().is_err());
        assert!("0:1:lin:5".parse::<ScatterSpec>().is_ok());
    }

    #[test]
    fn empty_sweep_has_header_only() {
        let p = Polynomial::var(0);
        let spec = ScatterSpec { lo: 0.01, hi: 10.0, distribution: Distribution::Log, samples: 0 };
        let rows = scatter_experiment(&[p], &OptimizerSettings::preset(Level::O3), &spec, 1).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "cp,final_ops,seed,elapsed_ms\n");
    }

    #[test]
    fn sweep_is_reproducible() {
        let syms = Symbols::new(["x", "y", "z"]).unwrap();
        let p = parse_expression("6*y*z^2+3*y^3-3*x*z^2+6*x*y*z-3*x^2*z+6*x^2*y", &syms).unwrap();
        let mut base = OptimizerSettings::preset(Level::O3);
        base.mcts.num_expand = 50;
        let spec: ScatterSpec = "0.01:10:log:6".parse().unwrap();
        let a = scatter_experiment(std::slice::from_ref(&p), &base, &spec, 7).unwrap();
        let b = scatter_experiment(std::slice::from_ref(&p), &base, &spec, 7).unwrap();
        let key = |r: &ScatterRow| (r.cp.to_bits(), r.final_ops, r.seed);
        assert_eq!(a.iter().map(key).collect::<Vec<_>>(), b.iter().map(key).collect::<Vec<_>>());
        assert!(a.iter().all(|r| (0.01..=10.0).contains(&r.cp) && r.final_ops <= 23));
    }
}
