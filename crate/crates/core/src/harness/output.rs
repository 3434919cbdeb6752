//! CSV and gnuplot output.

use std::io::Write;

use super::PointResult;

pub const CSV_HEADER: &str = "scenario_id,detector,modulation,Nt,Nr,b,Lt,mode,Td,crc,snr_db,trials,\
bit_errors,bits,BER,vec_errors,vectors,VER,eta,ci_low,ci_high,seed,elapsed_ms";

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// One row per point. With `timing = false` the elapsed time is written as 0
/// so repeated runs produce identical files.
pub fn write_results_csv<W: Write>(out: &mut W, points: &[PointResult], timing: bool) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            escape(&p.scenario_id),
            p.detector,
            p.modulation,
            p.nt,
            p.nr,
            p.bits,
            p.lt,
            p.mode,
            p.td,
            p.crc,
            p.snr_db,
            p.trials,
            p.bit_errors,
            p.bits_total,
            p.ber,
            p.vec_errors,
            p.vectors,
            p.ver,
            p.eta,
            p.ci_low,
            p.ci_high,
            p.seed,
            if timing { p.elapsed_ms } else { 0 },
        )?;
    }
    Ok(())
}

/// gnuplot script plotting BER against SNR from a results CSV.
pub fn gnuplot_script(csv_path: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set logscale y\n\
         set grid\n\
         set xlabel 'SNR (dB)'\n\
         set ylabel 'BER'\n\
         set title '{title}'\n\
         plot '{csv_path}' using 11:15 with linespoints title 'BER', \\\n     \
         '' using 11:15:20:21 with yerrorbars notitle\n"
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub kind: &'static str,
    pub modulation: String,
    pub nt: usize,
    pub nr: usize,
    pub snr_db: Option<f64>,
    pub bound: f64,
}

pub const BOUND_HEADER: &str = "type,modulation,Nt,Nr,snr_db,bound";

pub fn write_bounds_csv<W: Write>(out: &mut W, rows: &[BoundRow]) -> std::io::Result<()> {
    writeln!(out, "{BOUND_HEADER}")?;
    for r in rows {
        let snr = r.snr_db.map(|s| s.to_string()).unwrap_or_else(|| "inf".into());
        writeln!(out, "{},{},{},{},{},{}", r.kind, r.modulation, r.nt, r.nr, snr, r.bound)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_has_all_columns() {
        assert_eq!(CSV_HEADER.split(',').count(), 23);
        assert!(CSV_HEADER.starts_with("scenario_id,detector,modulation,Nt,Nr,b,Lt,mode,Td,crc,snr_db"));
        assert!(CSV_HEADER.ends_with("ci_low,ci_high,seed,elapsed_ms"));
    }

    #[test]
    fn escaping() {
        assert_eq!(escape("plain"), "plain");
        assert_eq!(escape("a,b"), "\"a,b\"");
        assert_eq!(escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn bound_rows() {
        let mut buf = Vec::new();
        write_bounds_csv(
            &mut buf,
            &[BoundRow {
                kind: "asymptotic",
                modulation: "bpsk".into(),
                nt: 2,
                nr: 8,
                snr_db: None,
                bound: 2f64.powi(-16),
            }],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "asymptotic,bpsk,2,8,inf,0.0000152587890625"
        );
    }
}
