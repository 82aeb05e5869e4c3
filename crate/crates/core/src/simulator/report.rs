use std::fmt::Write as _;
use std::io;

use super::{SweepCell, SweepTable};

pub const CSV_HEADER: &str =
    "n,m,k,ell,delta_per_hour,gamma_per_hour,trials,seed,mttdl_hours,std_hours,ci95_low,ci95_high";

fn push_row(out: &mut String, cell: &SweepCell) {
    let (c, r, e) = (&cell.config, &cell.rates, &cell.estimate);
    writeln!(
        out,
        "{},{},{},{},{:e},{:e},{},{},{},{},{},{}",
        c.n(),
        c.m(),
        c.k(),
        c.l(),
        r.disk_rate(),
        r.controller_rate(),
        e.trials,
        e.seed,
        e.mean_hours,
        e.std_dev_hours,
        e.ci95_low,
        e.ci95_high
    )
    .expect("writing to a String");
}

/// One CSV row per cell, header first.
pub fn sweep_csv<'a>(cells: impl IntoIterator<Item = &'a SweepCell>) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for cell in cells {
        push_row(&mut out, cell);
    }
    out
}

pub fn write_sweep_csv<W: io::Write>(table: &SweepTable, mut w: W) -> io::Result<()> {
    w.write_all(sweep_csv(&table.cells).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::estimate_mttdl;
    use crate::{FailureModel, HraidConfig};

    #[test]
    fn row_layout() {
        let config = HraidConfig::new(12, 12, 1, 2).unwrap();
        let rates = FailureModel::default();
        let estimate = estimate_mttdl(&config, &rates, 3, 99).unwrap();
        let csv = sweep_csv([&SweepCell {
            config,
            rates,
            estimate: estimate.clone(),
        }]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 12);
        assert_eq!(&row[..8], ["12", "12", "1", "2", "1e-6", "0e0", "3", "99"]);
        assert_eq!(row[8].parse::<f64>().unwrap(), estimate.mean_hours);
        assert_eq!(row[11].parse::<f64>().unwrap(), estimate.ci95_high);
    }
}
