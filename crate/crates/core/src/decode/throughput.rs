use super::DecodeResult;

#[derive(Clone, Debug, PartialEq)]
pub struct ThroughputReport {
    pub frames: usize,
    pub elapsed_secs: f64,
    pub frames_per_sec: f64,
    /// Processing time over audio duration at the given frame shift.
    pub real_time_factor: f64,
    pub scorer_calls: usize,
    /// Calls a per-hypothesis scorer would have made.
    pub naive_calls: usize,
    pub relative_savings: f64,
}

pub fn measure_throughput(result: &DecodeResult, frame_shift_ms: f64) -> ThroughputReport {
    let frames = result.num_frames();
    let elapsed_secs = result.elapsed.as_secs_f64();
    let audio = frames as f64 * frame_shift_ms / 1000.0;
    let naive_calls: usize = result.active_hyps.iter().sum();
    let scorer_calls = result.stats.calls;
    ThroughputReport {
        frames,
        elapsed_secs,
        frames_per_sec: if elapsed_secs > 0.0 { frames as f64 / elapsed_secs } else { f64::INFINITY },
        real_time_factor: if audio > 0.0 { elapsed_secs / audio } else { 0.0 },
        scorer_calls,
        naive_calls,
        relative_savings: if naive_calls > 0 { 1.0 - scorer_calls as f64 / naive_calls as f64 } else { 0.0 },
    }
}

impl std::fmt::Display for ThroughputReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "frames\t{}", self.frames)?;
        writeln!(f, "elapsed_secs\t{:.6}", self.elapsed_secs)?;
        writeln!(f, "frames_per_sec\t{:.1}", self.frames_per_sec)?;
        writeln!(f, "rtf\t{:.6}", self.real_time_factor)?;
        writeln!(f, "scorer_calls\t{}", self.scorer_calls)?;
        writeln!(f, "naive_calls\t{}", self.naive_calls)?;
        write!(f, "relative_savings\t{:.4}", self.relative_savings)
    }
}
