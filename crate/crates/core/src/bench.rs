//! Wall-clock timings of the operators across image sizes.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryConfig;
use crate::operators::{AdjointPlan, ForwardPlan, InversePlan, OperatorOptions};
use crate::oracle::slow_forward;
use crate::phantom::paper_phantom;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub n_theta: usize,
    pub n_time: usize,
    pub operator: String,
    /// Best of the repetitions.
    pub seconds_min: f64,
    pub seconds_median: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub reps: usize,
    /// The slow oracle is timed only for sizes up to this.
    pub slow_max: usize,
    pub operator_options: OperatorOptions,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            reps: 3,
            slow_max: 257,
            operator_options: OperatorOptions::default(),
        }
    }
}

fn time_once(f: impl FnOnce() -> Result<()>) -> Result<f64> {
    let s = Instant::now();
    f()?;
    Ok(s.elapsed().as_secs_f64())
}

fn min_and_median(mut t: Vec<f64>) -> (f64, f64) {
    t.sort_by(f64::total_cmp);
    (t[0], t[t.len() / 2])
}

const OPERATORS: [&str; 3] = ["forward", "adjoint", "inverse"];

/// Times 𝒜, 𝒜* and 𝒜⁻¹ (plus the slow forward for small sizes) on
/// [`GeometryConfig::scaled`] geometries with the disk phantom. Plan construction
/// is excluded; each operator gets one warm-up call. Repetitions are interleaved
/// across sizes so that a transient slowdown of the machine does not land on a
/// single size and skew the ratios.
pub fn run_bench(sizes: &[usize], opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    if opts.reps == 0 {
        return Err(Error::InvalidArgument("reps must be >= 1".into()));
    }
    let threads = rayon::current_num_threads();
    let mut cases = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let cfg = GeometryConfig::scaled(n);
        cfg.validate()?;
        let f = paper_phantom::<f64>(n, cfg.half_width);
        let fwd = ForwardPlan::<f64>::new(&cfg, opts.operator_options)?;
        let adj = AdjointPlan::<f64>::new(&cfg, opts.operator_options)?;
        let inv = InversePlan::<f64>::new(&cfg, opts.operator_options)?;
        let g = fwd.apply(&f)?;
        adj.apply(&g)?;
        inv.apply(&g)?;
        cases.push((cfg, f, g, fwd, adj, inv));
    }

    let mut times = vec![[const { Vec::new() }; 3]; cases.len()];
    for _ in 0..opts.reps {
        for (c, (_, f, g, fwd, adj, inv)) in cases.iter().enumerate() {
            times[c][0].push(time_once(|| fwd.apply(f).map(drop))?);
            times[c][1].push(time_once(|| adj.apply(g).map(drop))?);
            times[c][2].push(time_once(|| inv.apply(g).map(drop))?);
        }
    }

    let mut rows = Vec::new();
    for ((cfg, f, ..), per_op) in cases.iter().zip(times) {
        let n = cfg.n_image;
        let mut push = |name: &str, (lo, med): (f64, f64)| {
            log::info!("n={n} {name}: {lo:.4}s");
            rows.push(BenchRow {
                n,
                n_theta: cfg.n_theta,
                n_time: cfg.n_time,
                operator: name.into(),
                seconds_min: lo,
                seconds_median: med,
                threads,
            });
        };
        for (name, t) in OPERATORS.iter().zip(per_op) {
            push(name, min_and_median(t));
        }
        if n <= opts.slow_max {
            let t = time_once(|| slow_forward(f, cfg).map(drop))?;
            push("slow_forward", (t, t));
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("n,n_theta,n_time,operator,seconds_min,seconds_median,threads\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{}\n",
            r.n, r.n_theta, r.n_time, r.operator, r.seconds_min, r.seconds_median, r.threads
        ));
    }
    s
}

/// `t(big)/t(small)` for one operator, from the best-of timings.
pub fn time_ratio(rows: &[BenchRow], operator: &str, small: usize, big: usize) -> Option<f64> {
    let get = |n| {
        rows.iter()
            .find(|r| r.n == n && r.operator == operator)
            .map(|r| r.seconds_min)
    };
    Some(get(big)? / get(small)?)
}
