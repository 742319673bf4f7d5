use std::io::Write;
use std::path::Path;

use crate::config::RunConfig;
use crate::report::RunReport;
use crate::runner::run;
use crate::BenchError;

/// Side-by-side result of two runs of the same workload.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub a: RunReport,
    pub b: RunReport,
}

impl Comparison {
    /// Throughput of `b` relative to `a`.
    pub fn ratio(&self) -> f64 {
        if self.a.ops_per_sec > 0.0 {
            self.b.ops_per_sec / self.a.ops_per_sec
        } else {
            f64::NAN
        }
    }

    fn table(&self) -> Vec<(&'static str, f64, f64)> {
        let (a, b) = (&self.a.total, &self.b.total);
        vec![
            ("ops_per_sec", self.a.ops_per_sec, self.b.ops_per_sec),
            ("tier0_hits", a.tier0_hits as f64, b.tier0_hits as f64),
            ("tier1_hits", a.tier1_hits as f64, b.tier1_hits as f64),
            ("disk_reads", a.disk_reads as f64, b.disk_reads as f64),
            ("disk_writes", a.disk_writes as f64, b.disk_writes as f64),
            ("migrations", a.migrations as f64, b.migrations as f64),
            ("shootdowns", a.shootdowns as f64, b.shootdowns as f64),
            ("time_disk_pct", a.time_disk_pct, b.time_disk_pct),
            ("time_migration_pct", a.time_migration_pct, b.time_migration_pct),
            ("time_other_pct", a.time_other_pct, b.time_other_pct),
        ]
    }

    /// Rows of `metric,a,b,delta,ratio`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "a", "b", "delta", "ratio"])?;
        for (name, a, b) in self.table() {
            let ratio = if a != 0.0 { format!("{:.4}", b / a) } else { String::new() };
            w.write_record([name.to_string(), format!("{a:.3}"), format!("{b:.3}"), format!("{:.3}", b - a), ratio])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<(), BenchError> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:<20}{:>16}{:>16}{:>12}\n", "metric", "a", "b", "b-a");
        for (name, a, b) in self.table() {
            out.push_str(&format!("{name:<20}{a:>16.2}{b:>16.2}{:>12.2}\n", b - a));
        }
        out.push_str(&format!("throughput ratio b/a: {:.3}\n", self.ratio()));
        out
    }
}

/// Runs `a` then `b`. Both must describe the same workload.
pub fn compare(a: &RunConfig, b: &RunConfig) -> Result<Comparison, BenchError> {
    if !a.workload.same_workload(&b.workload) {
        return Err(BenchError::Config(format!(
            "refusing to compare different workloads: {:?} vs {:?}",
            a.workload, b.workload
        )));
    }
    Ok(Comparison { a: run(a)?, b: run(b)? })
}
