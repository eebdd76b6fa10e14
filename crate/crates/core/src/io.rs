//! CSV artifacts. Every file opens with `#` lines echoing the configuration
//! and a units note, followed by one header row. Numbers are written with
//! 16 significant digits so identical runs produce identical bytes.

use std::io::Write;

use faer::c64;

use crate::diagnostics::{CenterlineProfiles, EnvelopeReport, FovReport, Lemma42Report, ProbeConfig, SpectralReport, StepStatistics};
use crate::error::Result;
use crate::mesh::MeshTopology;
use crate::picard::IterationReport;

pub const UNITS_NOTE: &str = "units: nondimensional; lengths in cavity half-widths or step heights, velocities in lid speed or peak inflow speed, p in kinematic units";

pub fn write_echo<W: Write>(out: &mut W, echo: &[String]) -> Result<()> {
    for line in echo {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "# {UNITS_NOTE}")?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// node, x, y, u1, u2, p
pub fn write_solution_csv<W: Write>(
    out: &mut W,
    mesh: &MeshTopology,
    velocity: &[f64],
    pressure: &[f64],
    echo: &[String],
) -> Result<()> {
    write_echo(out, echo)?;
    writeln!(out, "node,x,y,u1,u2,p")?;
    let nv = mesh.node_count();
    for (i, x) in mesh.nodes.iter().enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{},{}",
            num(x[0]),
            num(x[1]),
            num(velocity[i]),
            num(velocity[nv + i]),
            num(pressure[i])
        )?;
    }
    Ok(())
}

/// node, x, y, psi
pub fn write_nodal_scalar_csv<W: Write>(
    out: &mut W,
    mesh: &MeshTopology,
    name: &str,
    values: &[f64],
    echo: &[String],
) -> Result<()> {
    write_echo(out, echo)?;
    writeln!(out, "node,x,y,{name}")?;
    for (i, x) in mesh.nodes.iter().enumerate() {
        writeln!(out, "{i},{},{},{}", num(x[0]), num(x[1]), num(values[i]))?;
    }
    Ok(())
}

/// One row: picard_iters, avg_gmres, table_entry, converged, per-step counts
/// (semicolon separated), final nonlinear residual ratio.
pub fn write_report_csv<W: Write>(out: &mut W, report: &IterationReport, echo: &[String]) -> Result<()> {
    write_echo(out, echo)?;
    writeln!(out, "picard_iters,avg_gmres,table_entry,converged,per_step_gmres,per_step_gmres_converged,final_residual_ratio")?;
    let steps: Vec<String> = report.gmres_iterations_per_step.iter().map(|k| k.to_string()).collect();
    let conv: Vec<&str> = report
        .gmres_converged_per_step
        .iter()
        .map(|c| if *c { "1" } else { "0" })
        .collect();
    let ratio = match (report.nonlinear_residuals.first(), report.nonlinear_residuals.last()) {
        (Some(&s0), Some(&sk)) if s0 > 0.0 => sk / s0,
        _ => 0.0,
    };
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        report.picard_iterations,
        num(report.average_gmres),
        report.table_entry(),
        report.converged as u8,
        steps.join(";"),
        conv.join(";"),
        num(ratio)
    )?;
    Ok(())
}

/// k, ‖s_k‖
pub fn write_nonlinear_history_csv<W: Write>(out: &mut W, report: &IterationReport, echo: &[String]) -> Result<()> {
    write_echo(out, echo)?;
    writeln!(out, "picard_step,nonlinear_residual")?;
    for (k, s) in report.nonlinear_residuals.iter().enumerate() {
        writeln!(out, "{k},{}", num(*s))?;
    }
    Ok(())
}

pub fn write_profiles_csv<W: Write>(out: &mut W, profiles: &CenterlineProfiles, echo: &[String]) -> Result<()> {
    write_echo(out, echo)?;
    writeln!(out, "s,u1_at_x0_y_eq_s,u2_at_y0_x_eq_s")?;
    let v = &profiles.vertical_u1;
    let h = &profiles.horizontal_u2;
    for k in 0..v.coords.len() {
        writeln!(out, "{},{},{}", num(v.coords[k]), num(v.values[k]), num(h.values[k]))?;
    }
    Ok(())
}

pub fn write_step_statistics_csv<W: Write>(out: &mut W, stats: &StepStatistics, echo: &[String]) -> Result<()> {
    write_echo(out, echo)?;
    writeln!(out, "r1,r2,r3")?;
    writeln!(out, "{},{},{}", opt(stats.r1), opt(stats.r2), opt(stats.r3))?;
    Ok(())
}

pub const SPECTRAL_HEADER: &str = "nu,gamma,h,order,advection,eigenvalues,min_real,max_modulus,min_real_over_nu_nu_gamma";

pub fn spectral_row(cfg: &ProbeConfig, rep: &SpectralReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        cfg.nu,
        cfg.gamma,
        cfg.h,
        cfg.order.degree(),
        cfg.advection.name(),
        rep.eigenvalues.len(),
        num(rep.min_real),
        num(rep.max_modulus),
        num(rep.min_real / (cfg.nu * (cfg.nu + cfg.gamma)))
    )
}

pub const FOV_HEADER: &str =
    "nu,gamma,h,order,advection,mu_kp,mu_pk,product,envelope_rate,mu_kp_over_nu_nu_gamma,envelope_steps,envelope_max_excess";

/// Envelope columns stay blank when the check was not run.
pub fn fov_row(cfg: &ProbeConfig, rep: &FovReport, env: Option<&EnvelopeReport>) -> String {
    let (steps, excess) = match env {
        Some(e) => (e.ratios.len().saturating_sub(1).to_string(), num(e.max_excess)),
        None => (String::new(), String::new()),
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{steps},{excess}",
        cfg.nu,
        cfg.gamma,
        cfg.h,
        cfg.order.degree(),
        cfg.advection.name(),
        num(rep.mu_kp),
        num(rep.mu_pk),
        num(rep.mu_kp * rep.mu_pk),
        num(rep.envelope_rate),
        num(rep.mu_kp / (cfg.nu * (cfg.nu + cfg.gamma)))
    )
}

pub const LEMMA42_HEADER: &str = "nu,gamma,h,order,advection,trials,violations,max_excess,observed_constant";

pub fn lemma42_row(cfg: &ProbeConfig, rep: &Lemma42Report) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        cfg.nu,
        cfg.gamma,
        cfg.h,
        cfg.order.degree(),
        cfg.advection.name(),
        rep.trials,
        rep.violations,
        num(rep.max_excess),
        num(rep.observed_constant)
    )
}

/// Eigenvalue cloud: re, im.
pub fn write_eigenvalues_csv<W: Write>(out: &mut W, eigs: &[c64], echo: &[String]) -> Result<()> {
    write_echo(out, echo)?;
    writeln!(out, "re,im")?;
    for z in eigs {
        writeln!(out, "{},{}", num(z.re), num(z.im))?;
    }
    Ok(())
}

/// Header plus preformatted rows.
pub fn write_rows<W: Write>(out: &mut W, header: &str, rows: &[String], echo: &[String]) -> Result<()> {
    write_echo(out, echo)?;
    writeln!(out, "{header}")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_then_header() {
        let mut buf = Vec::new();
        write_rows(&mut buf, "a,b", &["1,2".into()], &["k=v".into()]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# k=v");
        assert!(lines[1].starts_with("# units"));
        assert_eq!(lines[2], "a,b");
        assert_eq!(lines[3], "1,2");
    }

    #[test]
    fn missing_statistics_are_blank() {
        let mut buf = Vec::new();
        let s = StepStatistics {
            r1: Some(4.25),
            r2: None,
            r3: None,
        };
        write_step_statistics_csv(&mut buf, &s, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with("4.2500000000000000e0,,\n"), "{text}");
    }
}
