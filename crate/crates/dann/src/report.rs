//! CSV reports written by `train` and `pretrain`.

use std::io::{self, Write};
use std::time::Instant;

use dann_core::trainer::{Clock, TrainReport};

use crate::csvio::fmt_f64;

/// Wall-clock milliseconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct StdClock(Instant);

impl StdClock {
    pub fn start() -> Self {
        StdClock(Instant::now())
    }
}

impl Clock for StdClock {
    fn elapsed_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

pub const ITERATION_HEADER: &str = "iter,j_nns,mmd_sq,elapsed_ms";
pub const LOSS_HEADER: &str = "epoch,loss";
pub const SUMMARY_HEADER: &str = "seed,method,setting,lr,iterations,momentum,l2,dropout,gamma,hidden,\
batch_size,bandwidth,bandwidth_source,final_mmd_sq,accuracy";

pub fn write_iterations<W: Write>(w: &mut W, report: &TrainReport) -> io::Result<()> {
    writeln!(w, "{ITERATION_HEADER}")?;
    for r in &report.records {
        writeln!(
            w,
            "{},{},{},{}",
            r.iteration,
            fmt_f64(r.j_nns),
            fmt_f64(r.mmd_sq),
            fmt_f64(r.elapsed_ms)
        )?;
    }
    Ok(())
}

pub fn write_losses<W: Write>(w: &mut W, losses: &[f64]) -> io::Result<()> {
    writeln!(w, "{LOSS_HEADER}")?;
    for (i, l) in losses.iter().enumerate() {
        writeln!(w, "{},{}", i + 1, fmt_f64(*l))?;
    }
    Ok(())
}

/// One summary row; `accuracy` is empty when no labeled evaluation rows exist.
pub fn summary_row(method: &str, setting: &str, report: &TrainReport) -> String {
    let c = &report.config;
    let fields = [
        report.seed.to_string(),
        method.to_string(),
        setting.to_string(),
        fmt_f64(c.lr),
        c.iterations.to_string(),
        fmt_f64(c.momentum),
        fmt_f64(c.l2),
        fmt_f64(c.dropout_fraction),
        fmt_f64(c.gamma),
        c.hidden.to_string(),
        c.batch_size.to_string(),
        fmt_f64(report.kernel.bandwidth()),
        report.kernel.source().as_str().to_string(),
        fmt_f64(report.final_mmd_sq),
        report.accuracy.map(fmt_f64).unwrap_or_default(),
    ];
    fields.join(",")
}
