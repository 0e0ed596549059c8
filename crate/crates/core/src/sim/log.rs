use std::io::{self, Write};

/// Record of one protocol iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationLog {
    pub iter: u64,
    pub n_in_range: usize,
    pub m_size: usize,
    pub mps_collisions: usize,
    pub dps_received: usize,
    pub dps_garbled: usize,
    pub dps_idle: usize,
    pub new_records: usize,
    pub elapsed_ms: f64,
    pub data_slots: usize,
    pub overhead_slots: usize,
    /// Busy mini-slots left out of the slot map; their vehicles sit this
    /// iteration out.
    pub mps_excluded: usize,
    pub newly_recorded: Vec<String>,
}

impl IterationLog {
    pub fn charged_slots(&self) -> usize {
        self.data_slots + self.overhead_slots
    }
}

pub const ITERATION_CSV_HEADER: &str =
    "iter,n_in_range,m_size,mps_collisions,dps_received,dps_garbled,new_records,elapsed_ms";

pub fn write_iteration_csv<W: Write>(logs: &[IterationLog], mut out: W) -> io::Result<()> {
    writeln!(out, "{ITERATION_CSV_HEADER}")?;
    for l in logs {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.3}",
            l.iter,
            l.n_in_range,
            l.m_size,
            l.mps_collisions,
            l.dps_received,
            l.dps_garbled,
            l.new_records,
            l.elapsed_ms
        )?;
    }
    Ok(())
}
