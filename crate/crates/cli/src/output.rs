use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use crate::error::CliError;

/// Formats a float with 12 significant digits in positional notation.
/// Zero prints as `0.0`; very large or small magnitudes fall back to
/// scientific notation.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0.0".into();
    }
    if !x.is_finite() {
        return format!("{x}").to_lowercase();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - exp).max(1) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding may carry into a new leading digit.
    let digits = s.chars().filter(|c| c.is_ascii_digit()).skip_while(|&c| c == '0').count();
    if digits > 12 && decimals > 1 {
        let decimals = decimals - 1;
        return format!("{x:.decimals$}");
    }
    s
}

pub struct CsvOut {
    writer: csv::Writer<Box<dyn Write>>,
}

impl CsvOut {
    pub fn open(path: Option<&Path>) -> Result<Self, CliError> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
            None => Box::new(io::BufWriter::new(io::stdout().lock())),
        };
        let writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
        Ok(Self { writer })
    }

    pub fn header(&mut self, cols: &[&str]) -> Result<(), CliError> {
        self.writer.write_record(cols)?;
        Ok(())
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn nums(&mut self, label: Option<&str>, values: &[f64]) -> Result<(), CliError> {
        let mut fields: Vec<String> = label.map(str::to_string).into_iter().collect();
        fields.extend(values.iter().map(|&v| fmt_num(v)));
        self.row(fields)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush()?;
        Ok(())
    }
}
