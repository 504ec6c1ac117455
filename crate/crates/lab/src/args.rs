//! Command-line grammar. Numeric flags take plain decimal notation; lists are
//! comma separated.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "fredholm-lab", version, about = "Discrete Wiener-Hopf kernel experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Laurent coefficients of both symbol ratios on an index window.
    Coeffs,
    /// Entries of the truncated kernel matrix.
    Kernel,
    /// Eigenvalues, determinants on a v grid, trace and v-derivatives.
    Spectrum,
    /// det(I - vK) with a truncation check.
    Det,
    /// Kernel trace by every available route.
    Trace,
    /// Trace scaling near the spectral edge of the exponential kernel.
    Prop1,
    /// Saddle points, sigma values, traces and determinant for growth parameters.
    Growth,
    /// Growth trace and determinant sweep over s.
    Lemma3,
    /// Spectrum of a product symbol, or a random sweep of them.
    Conjecture,
    /// Monte Carlo estimate of P(lambda_1 <= n) against the determinant.
    Mc,
    /// Approach to the Airy-kernel determinant.
    Twlimit,
    /// Full acceptance suite.
    Accept,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Exp,
    Growth,
    Johansson,
    Conjecture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    #[arg(long, global = true, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long, global = true, value_delimiter = ',', value_parser = decimal)]
    pub t: Vec<f64>,
    /// Offset for the exponential family; symbol degree for growth and Johansson;
    /// index for prop1 and the window for mc.
    #[arg(long, global = true, allow_hyphen_values = true, value_delimiter = ',', value_parser = integer)]
    pub n: Vec<i64>,
    #[arg(long, global = true, value_delimiter = ',', value_parser = integer)]
    pub m: Vec<i64>,
    #[arg(long, global = true, value_parser = decimal)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, value_parser = decimal)]
    pub r: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',', value_parser = decimal)]
    pub s: Vec<f64>,
    #[arg(long, global = true, value_parser = decimal)]
    pub v: Option<f64>,
    #[arg(long, global = true, value_parser = integer)]
    pub size: Option<i64>,
    #[arg(long, global = true, value_parser = decimal)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_parser = integer)]
    pub seed: Option<i64>,
    #[arg(long, global = true, value_parser = integer)]
    pub samples: Option<i64>,
    #[arg(long, global = true, value_delimiter = ',', value_parser = decimal)]
    pub rs: Vec<f64>,
    #[arg(long, global = true, value_delimiter = ',', value_parser = decimal)]
    pub ss: Vec<f64>,
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = integer)]
    pub offset: Option<i64>,
    /// Lowest and highest coefficient index for `coeffs`.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = integer)]
    pub lo: Option<i64>,
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = integer)]
    pub hi: Option<i64>,
    /// v values for `spectrum`.
    #[arg(long, global = true, value_delimiter = ',', value_parser = decimal)]
    pub grid: Vec<f64>,
    #[arg(long, global = true, allow_hyphen_values = true, value_delimiter = ',', value_parser = decimal)]
    pub x: Vec<f64>,
    /// Gauss-Legendre order for the Airy determinant.
    #[arg(long, global = true, value_parser = integer)]
    pub order: Option<i64>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "FREDHOLM_LAB_THREADS", value_parser = integer)]
    pub threads: Option<i64>,
}

fn is_decimal(s: &str) -> bool {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    !(int.is_empty() && frac.is_empty())
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.bytes().all(|b| b.is_ascii_digit())
}

pub fn decimal(s: &str) -> Result<f64, String> {
    if !is_decimal(s) {
        return Err(format!("`{s}` is not a plain decimal number"));
    }
    s.parse::<f64>().map_err(|e| e.to_string())
}

pub fn integer(s: &str) -> Result<i64, String> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("`{s}` is not an integer"));
    }
    s.parse::<i64>().map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_only() {
        assert_eq!(decimal("0.25"), Ok(0.25));
        assert_eq!(decimal("-3"), Ok(-3.0));
        assert_eq!(decimal(".5"), Ok(0.5));
        assert_eq!(decimal("2."), Ok(2.0));
        for bad in ["1e3", "inf", "NaN", "0x10", "", ".", "1,5", "1.2.3"] {
            assert!(decimal(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn integers() {
        assert_eq!(integer("-4"), Ok(-4));
        assert!(integer("4.0").is_err());
        assert!(integer("1e2").is_err());
    }

    #[test]
    fn parses_lists() {
        let cli = Cli::try_parse_from(["lab", "prop1", "--n", "50,100", "--s", "1,2.5"]).unwrap();
        assert_eq!(cli.command, Command::Prop1);
        assert_eq!(cli.flags.n, vec![50, 100]);
        assert_eq!(cli.flags.s, vec![1.0, 2.5]);
    }
}
