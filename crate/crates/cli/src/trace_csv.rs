//! Per-round trace CSV.
//!
//! Columns: `run_id,t,available_mask,played_mask,round_reward,cum_reward,gamma_t`.
//! Masks are bitstrings with character `i` standing for arm `i`; floats
//! carry 12 significant digits; `gamma_t` is empty when not computed.

use std::io::{self, Write};

use cbbsd_core::engine::RoundRecord;

pub const HEADER: &str = "run_id,t,available_mask,played_mask,round_reward,cum_reward,gamma_t";

/// Formats like C's `%.12g`.
pub fn format_g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exp) {
        let fixed = format!("{:.*}", (DIGITS - 1 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_header<W: Write + ?Sized>(w: &mut W) -> io::Result<()> {
    writeln!(w, "{HEADER}")
}

pub fn write_record<W: Write + ?Sized>(
    w: &mut W,
    run_id: u64,
    k: usize,
    r: &RoundRecord,
) -> io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        run_id,
        r.t,
        r.available.to_bitstring(k),
        r.played.to_bitstring(k),
        format_g12(r.round_reward),
        format_g12(r.cum_reward),
        r.gamma.map(format_g12).unwrap_or_default()
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use cbbsd_core::ArmSet;

    #[test]
    fn g12_matches_printf() {
        let cases = [
            (1.0, "1"),
            (0.5, "0.5"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (123456.789, "123456.789"),
            (1e-5, "1e-05"),
            (0.0001, "0.0001"),
            (1.5e15, "1.5e+15"),
            (999999999999.0, "999999999999"),
            (9999999999999.0, "1e+13"),
            (-0.25, "-0.25"),
            (0.1 + 0.2, "0.3"),
        ];
        for (x, s) in cases {
            assert_eq!(format_g12(x), s, "{x}");
        }
    }

    #[test]
    fn record_line() {
        let r = RoundRecord {
            t: 3,
            available: ArmSet::from([0, 2]),
            played: ArmSet::from([2]),
            round_reward: 1.0,
            cum_reward: 2.5,
            gamma: Some(0.1),
            ..Default::default()
        };
        let mut out = Vec::new();
        write_record(&mut out, 4, 3, &r).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "4,3,101,001,1,2.5,0.1\n");
    }
}
