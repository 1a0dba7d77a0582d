use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::RunTrace;
use crate::error::{Error, Result};
use crate::game::VectorPayoffGame;
use crate::geometry::Point;

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("{other:?}")),
    }
}

/// One row per stage: `stage,i,j,g_1..g_n,in_D,dist_A,f`. The averages are
/// rebuilt from the action sequence so every stage is present regardless of
/// the trace's stride; `f` is empty for strategies without a safe count.
pub fn write_trace_csv_to<W: Write>(trace: &RunTrace, game: &VectorPayoffGame, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = game.dim();
    let mut header = vec!["stage".to_string(), "i".into(), "j".into()];
    header.extend((1..=n).map(|k| format!("g_{k}")));
    header.extend(["in_D".to_string(), "dist_A".into(), "f".into()]);
    w.write_record(&header).map_err(csv_err)?;

    let mut sum = Point::zeros(n);
    let mut row = Vec::with_capacity(n + 6);
    for (k, &(i, j)) in trace.actions.iter().enumerate() {
        let t = k as u64 + 1;
        sum.axpy(1.0, game.payoff(i as usize, j as usize));
        row.clear();
        row.push(t.to_string());
        row.push(i.to_string());
        row.push(j.to_string());
        row.extend(sum.coords().iter().map(|c| real(c / t as f64)));
        row.push(trace.in_region_flags[k].to_string());
        row.push(real(trace.dist_to_target[k]));
        row.push(
            trace
                .safe_count_curve
                .as_ref()
                .map_or(String::new(), |f| f[k].to_string()),
        );
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the trace CSV atomically: a temporary file in the same directory
/// is renamed over `path` only once complete.
pub fn write_trace_csv(trace: &RunTrace, game: &VectorPayoffGame, path: &Path) -> Result<()> {
    write_atomic(path, |f| write_trace_csv_to(trace, game, f))
}

/// Pretty JSON, written atomically.
pub fn write_json_atomic<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_atomic(path, |mut f| {
        serde_json::to_writer_pretty(&mut f, value)
            .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?;
        f.write_all(b"\n")?;
        Ok(())
    })
}

fn write_atomic(path: &Path, body: impl FnOnce(&mut BufWriter<&fs::File>) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
