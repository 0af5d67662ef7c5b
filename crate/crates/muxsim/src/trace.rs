//! Trace CSV ingestion.
//!
//! Format: header `stream,gop,complexity[,rate,mse]`, one row per
//! (stream, gop) or per R-D sample. Rates are bits per super GOP, mse is
//! luma MSE. Coverage must be rectangular: every stream has every GOP.

use std::collections::BTreeMap;
use std::path::Path;

use crate::domain::{Complexity, Distortion, GopTruth, RateBits, RdSample, Scenario, StreamId, StreamTrace};
use crate::error::{Error, Result};
use crate::rdmodel;

/// Parsed trace: per (stream, gop) the declared complexity and any sampled
/// R-D points.
#[derive(Debug, Clone)]
pub struct TraceData {
    pub stream_count: usize,
    pub gop_count: usize,
    /// `complexity[stream][gop]`
    pub complexity: Vec<Vec<f64>>,
    /// `samples[stream][gop]`
    pub samples: Vec<Vec<Vec<RdSample>>>,
}

pub fn load_trace(path: &Path) -> Result<TraceData> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers: Vec<String> =
        reader.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let expected_min = ["stream", "gop", "complexity"];
    if headers.len() < 3 || headers[..3] != expected_min {
        return Err(Error::Trace(format!(
            "header must start with stream,gop,complexity — got {}",
            headers.join(",")
        )));
    }
    let has_rd = match headers.len() {
        3 => false,
        5 if headers[3] == "rate" && headers[4] == "mse" => true,
        _ => {
            return Err(Error::Trace(format!(
                "unexpected columns after complexity: {}",
                headers[3..].join(",")
            )))
        }
    };

    let mut cells: BTreeMap<(usize, usize), (f64, Vec<RdSample>)> = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = line + 2; // 1-based, after the header
        let parse = |idx: usize, what: &str| -> Result<f64> {
            record
                .get(idx)
                .ok_or_else(|| Error::Trace(format!("row {row}: missing {what}")))?
                .parse::<f64>()
                .map_err(|_| Error::Trace(format!("row {row}: {what} is not a number")))
        };
        let stream = parse(0, "stream")? as usize;
        let gop = parse(1, "gop")? as usize;
        let complexity = parse(2, "complexity")?;
        if !(complexity.is_finite() && complexity > 0.0) {
            return Err(Error::Trace(format!("row {row}: complexity must be positive")));
        }
        let entry = cells.entry((stream, gop)).or_insert((complexity, Vec::new()));
        if entry.0 != complexity {
            return Err(Error::Trace(format!(
                "row {row}: conflicting complexity for stream {stream} GOP {gop} \
                 ({} vs {complexity})",
                entry.0
            )));
        }
        if has_rd {
            let rate = parse(3, "rate")?;
            let mse = parse(4, "mse")?;
            let sample = RdSample {
                rate: RateBits::new(rate)
                    .map_err(|e| Error::Trace(format!("row {row}: {e}")))?,
                distortion: Distortion::new(mse)
                    .map_err(|e| Error::Trace(format!("row {row}: {e}")))?,
            };
            entry.1.push(sample);
        }
    }
    if cells.is_empty() {
        return Err(Error::Trace("trace has no data rows".into()));
    }

    let stream_count = cells.keys().map(|&(s, _)| s).max().unwrap() + 1;
    let gop_count = cells.keys().map(|&(_, g)| g).max().unwrap() + 1;
    let mut complexity = vec![vec![0.0; gop_count]; stream_count];
    let mut samples = vec![vec![Vec::new(); gop_count]; stream_count];
    for s in 0..stream_count {
        for g in 0..gop_count {
            match cells.remove(&(s, g)) {
                Some((c, rd)) => {
                    complexity[s][g] = c;
                    samples[s][g] = rd;
                }
                None => {
                    return Err(Error::Trace(format!(
                        "trace is not rectangular: stream {s} GOP {g} is missing"
                    )))
                }
            }
        }
    }
    Ok(TraceData { stream_count, gop_count, complexity, samples })
}

/// Builds a replayable scenario from a trace. Complexity comes from the
/// trace verbatim; per-stream σ paths are fitted from the pooled R-D
/// samples (constant per stream, used by the genie allocator only).
pub fn scenario_from_trace(
    trace: &TraceData,
    channel_rate: crate::domain::RateBits,
    super_gop_frames: u32,
    frame_rate: f64,
    seed: u64,
) -> Result<Scenario> {
    let mut streams = Vec::with_capacity(trace.stream_count);
    for s in 0..trace.stream_count {
        let points: Vec<(f64, f64, f64)> = (0..trace.gop_count)
            .flat_map(|g| {
                trace.samples[s][g].iter().map(move |p| {
                    (p.rate.bits(), p.distortion.mse(), trace.complexity[s][g])
                })
            })
            .collect();
        if points.is_empty() {
            return Err(Error::Trace(format!(
                "stream {s}: replay needs rate,mse samples in the trace"
            )));
        }
        let (sigma_fit, r2) = rdmodel::fit_hyperbolic_pooled(&points)
            .map_err(|e| Error::Trace(format!("stream {s}: {e}")))?;
        log::info!("stream {s}: fitted σ = {sigma_fit:.4} (r² = {r2:.6})");

        let gops = (0..trace.gop_count)
            .map(|g| {
                if trace.samples[s][g].len() == 1 {
                    log::warn!(
                        "stream {s} GOP {g}: single R-D sample, replay will clamp to it"
                    );
                }
                Ok(GopTruth {
                    true_complexity: Complexity::new(trace.complexity[s][g])
                        .map_err(|e| Error::Trace(format!("stream {s} GOP {g}: {e}")))?,
                    true_sigma: sigma_fit,
                    measured_complexity: Some(
                        Complexity::new(trace.complexity[s][g])
                            .map_err(|e| Error::Trace(format!("stream {s} GOP {g}: {e}")))?,
                    ),
                    rd_samples: trace.samples[s][g].clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        streams.push(StreamTrace { stream: StreamId(s), name: format!("s{s}"), gops });
    }
    Ok(Scenario { streams, channel_rate, super_gop_frames, frame_rate, rng_seed: seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_rd_trace() {
        let f = write_temp(
            "stream,gop,complexity,rate,mse\n\
             0,0,2.0,1000,10.0\n\
             0,0,2.0,2000,5.0\n\
             0,1,2.5,1000,12.0\n\
             1,0,1.0,500,40.0\n\
             1,1,1.0,600,33.0\n",
        );
        let t = load_trace(f.path()).unwrap();
        assert_eq!((t.stream_count, t.gop_count), (2, 2));
        assert_eq!(t.samples[0][0].len(), 2);
        assert_eq!(t.complexity[0][1], 2.5);
    }

    #[test]
    fn missing_cell_is_rejected() {
        let f = write_temp(
            "stream,gop,complexity\n\
             0,0,2.0\n\
             0,1,2.0\n\
             1,0,1.0\n",
        );
        let err = load_trace(f.path()).unwrap_err();
        assert!(err.to_string().contains("stream 1 GOP 1"), "{err}");
    }

    #[test]
    fn conflicting_complexity_is_rejected() {
        let f = write_temp(
            "stream,gop,complexity,rate,mse\n\
             0,0,2.0,1000,10.0\n\
             0,0,3.0,2000,5.0\n",
        );
        assert!(load_trace(f.path()).is_err());
    }

    #[test]
    fn bad_header_is_rejected() {
        let f = write_temp("gop,stream,complexity\n0,0,2.0\n");
        assert!(load_trace(f.path()).is_err());
    }
}
