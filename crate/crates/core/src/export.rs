//! CSV writers. Every table starts with a `#` metadata block; numbers are
//! written in shortest round-trip scientific notation so that identical
//! inputs give byte-identical files.

use std::io::{self, Write};

use crate::classical::{ReducedState, Trajectory};
use crate::phases::PhaseModifierResult;
use crate::radial::PhaseShiftResult;
use crate::sphere::KernelGrid;

/// Ordered `key=value` pairs written as `# key=value` lines.
pub type Metadata = Vec<(String, String)>;

pub fn meta<K: ToString, V: ToString>(pairs: impl IntoIterator<Item = (K, V)>) -> Metadata {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

pub fn write_metadata<W: Write>(out: &mut W, metadata: &[(String, String)]) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn row<W: Write>(out: &mut W, fields: &[String]) -> io::Result<()> {
    writeln!(out, "{}", fields.join(","))
}

/// `t,y1..yd,v1..vd,energy_residual`.
pub fn write_trajectory<W: Write>(out: &mut W, traj: &Trajectory, metadata: &[(String, String)]) -> io::Result<()> {
    write_metadata(out, metadata)?;
    let d = traj.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("y{i}")));
    header.extend((1..=d).map(|i| format!("v{i}")));
    header.push("energy_residual".into());
    row(out, &header)?;
    for (s, e) in traj.samples.iter().zip(traj.energy_residuals()) {
        let mut fields = vec![num(s.t)];
        fields.extend(s.y.iter().map(|&x| num(x)));
        fields.extend(s.v.iter().map(|&x| num(x)));
        fields.push(num(e));
        row(out, &fields)?;
    }
    Ok(())
}

/// `tau,b,cbar_norm,xhat1..xhatd`.
pub fn write_reduced_flow<W: Write>(out: &mut W, path: &[(f64, ReducedState)], metadata: &[(String, String)]) -> io::Result<()> {
    write_metadata(out, metadata)?;
    let d = path.first().map_or(0, |(_, z)| z.xhat.len());
    let mut header = vec!["tau".to_string(), "b".into(), "cbar_norm".into()];
    header.extend((1..=d).map(|i| format!("xhat{i}")));
    row(out, &header)?;
    for (tau, z) in path {
        let mut fields = vec![num(*tau), num(z.b), num(z.cbar_norm())];
        fields.extend(z.xhat.iter().map(|&x| num(x)));
        row(out, &fields)?;
    }
    Ok(())
}

/// `l,k,sigma,D,method,uncertainty`.
pub fn write_phase_shifts<W: Write>(out: &mut W, results: &[PhaseShiftResult], metadata: &[(String, String)]) -> io::Result<()> {
    write_metadata(out, metadata)?;
    row(out, &["l,k,sigma,D,method,uncertainty".to_string()])?;
    for r in results {
        row(
            out,
            &[
                r.l.to_string(),
                num(r.k),
                num(r.sigma),
                num(r.d),
                r.method.to_string(),
                num(r.uncertainty),
            ],
        )?;
    }
    Ok(())
}

/// `w,re,im,abs`, preceded by the grid description.
pub fn write_kernel<W: Write>(
    out: &mut W,
    grid: &KernelGrid,
    theta_or_model: &str,
    metadata: &[(String, String)],
) -> io::Result<()> {
    writeln!(out, "# d={}", grid.d)?;
    writeln!(out, "# L_max={}", grid.l_max)?;
    writeln!(out, "# smoothing={}", grid.smoothing)?;
    writeln!(out, "# theta_or_model={theta_or_model}")?;
    write_metadata(out, metadata)?;
    row(out, &["w,re,im,abs".to_string()])?;
    for (w, v) in grid.w.iter().zip(&grid.values) {
        row(out, &[num(*w), num(v.re), num(v.im), num(v.norm())])?;
    }
    Ok(())
}

/// `lambda,value,asymptotic,rel_err`.
pub fn write_modifier_ladder<W: Write>(
    out: &mut W,
    results: &[PhaseModifierResult],
    metadata: &[(String, String)],
) -> io::Result<()> {
    write_metadata(out, metadata)?;
    row(out, &["lambda,value,asymptotic,rel_err".to_string()])?;
    for r in results {
        row(out, &[num(r.lambda), num(r.value), num(r.asymptotic_value), num(r.rel_err())])?;
    }
    Ok(())
}
