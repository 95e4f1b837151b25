//! CSV writers for solution profiles and step traces.

use std::io::Write;

use crate::mesh::{Mesh1D, Region};
use crate::stepper::{StepperState, Trace};

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const PROFILE_HEADER: &str = "x,u,v,region";
pub const TRACE_HEADER: &str = "step,t,norm_u,norm_v,criterion";

pub fn region_name(r: Region) -> &'static str {
    match r {
        Region::Interior => "interior",
        Region::Collar => "collar",
    }
}

pub fn write_profile(mesh: &Mesh1D, state: &StepperState, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{PROFILE_HEADER}")?;
    for (i, &x) in mesh.nodes().iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(x),
            fmt_f64(state.u[i]),
            fmt_f64(state.v[i]),
            region_name(mesh.node_region(i))
        )?;
    }
    Ok(())
}

pub fn write_trace(trace: &Trace, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in &trace.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.step,
            fmt_f64(r.t),
            fmt_f64(r.norm_u),
            fmt_f64(r.norm_v),
            r.criterion.map(fmt_f64).unwrap_or_default()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, std::f64::consts::PI] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
