use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub configure_seconds: f64,
    pub compress_seconds: f64,
    pub cluster_compressed_seconds: f64,
    pub cluster_raw_seconds: f64,
}

/// Compression and analytics quality for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub cr: f64,
    pub adr: f64,
    pub ar: f64,
    pub ami: f64,
    pub silhouette: f64,
    pub k: usize,
    pub seeds: Vec<u64>,
    pub timings: Timings,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl MetricsReport {
    pub const CSV_HEADER: [&'static str; 11] = [
        "cr",
        "adr",
        "ar",
        "ami",
        "silhouette",
        "k",
        "seeds",
        "configure_seconds",
        "compress_seconds",
        "cluster_compressed_seconds",
        "cluster_raw_seconds",
    ];

    pub fn write<W: Write>(&self, sink: W, format: ReportFormat) -> Result<()> {
        match format {
            ReportFormat::Json => self.write_json(sink),
            ReportFormat::Csv => self.write_csv(sink),
        }
    }

    pub fn write_json<W: Write>(&self, mut sink: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut sink, self)?;
        writeln!(sink)?;
        Ok(())
    }

    /// One header row and one data row; seeds are `;`-separated.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(Self::CSV_HEADER)?;
        let seeds = self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(";");
        let t = &self.timings;
        w.write_record([
            self.cr.to_string(),
            self.adr.to_string(),
            self.ar.to_string(),
            self.ami.to_string(),
            self.silhouette.to_string(),
            self.k.to_string(),
            seeds,
            t.configure_seconds.to_string(),
            t.compress_seconds.to_string(),
            t.cluster_compressed_seconds.to_string(),
            t.cluster_raw_seconds.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> MetricsReport {
        MetricsReport {
            cr: 0.5,
            adr: 0.01,
            ar: 1.1,
            ami: 0.75,
            silhouette: 0.4,
            k: 5,
            seeds: vec![0, 1],
            timings: Timings::default(),
        }
    }

    #[test]
    fn json_round_trip() {
        let mut out = Vec::new();
        report().write(&mut out, ReportFormat::Json).unwrap();
        let back: MetricsReport = serde_json::from_slice(&out).unwrap();
        assert_eq!(back, report());
    }

    #[test]
    fn csv_has_header_and_row() {
        let mut out = Vec::new();
        report().write(&mut out, ReportFormat::Csv).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("cr,adr,ar,ami,silhouette,k,seeds"));
        assert!(lines[1].starts_with("0.5,0.01,1.1,0.75,0.4,5,0;1,"));
    }
}
