//! Plain-text artifact formats. Every file opens with `#` lines holding the
//! resolved run config; floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use waveguide_core::designer::DesignState;
use waveguide_core::geometry::{BoundaryTag, Mesh, MeshOptions, Region, WaveguideSpec};
use waveguide_core::C64;

/// 17 significant digits (round-trip exact).
pub fn f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comment block naming the artifact and embedding the resolved config.
pub fn header(kind: &str, resolved_config: &str) -> String {
    let mut out = format!("# waveguide {kind}\n# resolved config:\n");
    for line in resolved_config.lines() {
        out.push_str("#   ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn region_tag(r: Region) -> String {
    match r {
        Region::Strip => "strip".into(),
        Region::Chimney(m) => format!("chimney{m}"),
    }
}

fn boundary_tag(t: BoundaryTag) -> &'static str {
    match t {
        BoundaryTag::Wall => "wall",
        BoundaryTag::SigmaMinus => "sigma_minus",
        BoundaryTag::SigmaPlus => "sigma_plus",
    }
}

fn push_elements(out: &mut String, mesh: &Mesh) {
    writeln!(out, "elements {}", mesh.n_elements()).unwrap();
    for (i, (el, r)) in mesh.elements.iter().zip(&mesh.regions).enumerate() {
        writeln!(
            out,
            "{i} {} {} {} {} {} {} {}",
            el[0],
            el[1],
            el[2],
            el[3],
            el[4],
            el[5],
            region_tag(*r)
        )
        .unwrap();
    }
}

/// Sections `vertices`, `elements`, `edges`, each introduced by its name and count.
pub fn mesh_text(mesh: &Mesh, header: &str) -> String {
    let mut out = String::from(header);
    writeln!(out, "vertices {}", mesh.n_nodes()).unwrap();
    for (i, p) in mesh.vertices.iter().enumerate() {
        writeln!(out, "{i} {} {}", f(p[0]), f(p[1])).unwrap();
    }
    push_elements(&mut out, mesh);
    writeln!(out, "edges {}", mesh.boundary_edges.len()).unwrap();
    for (i, e) in mesh.boundary_edges.iter().enumerate() {
        writeln!(
            out,
            "{i} {} {} {} {} {}",
            e.nodes[0],
            e.nodes[1],
            e.nodes[2],
            boundary_tag(e.tag),
            e.element
        )
        .unwrap();
    }
    out
}

/// Sections `nodes` (`index x y re_u im_u abs_u`) and `elements`.
pub fn field_text(mesh: &Mesh, values: &[C64], header: &str) -> String {
    let mut out = String::from(header);
    writeln!(out, "nodes {}", mesh.n_nodes()).unwrap();
    for (i, (p, u)) in mesh.vertices.iter().zip(values).enumerate() {
        writeln!(out, "{i} {} {} {} {} {}", f(p[0]), f(p[1]), f(u.re), f(u.im), f(u.norm())).unwrap();
    }
    push_elements(&mut out, mesh);
    out
}

/// Flat `key = value` document.
#[derive(Clone, Debug, Default)]
pub struct Record {
    entries: Vec<(String, String)>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn real(&mut self, key: impl Into<String>, v: f64) -> &mut Self {
        self.entries.push((key.into(), f(v)));
        self
    }

    /// Writes `re_<key>`, `im_<key>` and `abs_<key>`.
    pub fn complex(&mut self, key: &str, v: C64) -> &mut Self {
        self.real(format!("re_{key}"), v.re);
        self.real(format!("im_{key}"), v.im);
        self.real(format!("abs_{key}"), v.norm())
    }

    pub fn int(&mut self, key: impl Into<String>, v: usize) -> &mut Self {
        self.entries.push((key.into(), v.to_string()));
        self
    }

    pub fn text(&mut self, key: impl Into<String>, v: impl Into<String>) -> &mut Self {
        self.entries.push((key.into(), v.into()));
        self
    }

    /// `k`, chimney layout (`eps`, `x_<m>`, `h_<m>`).
    pub fn spec(&mut self, spec: &WaveguideSpec) -> &mut Self {
        self.real("k", spec.k);
        self.int("n_chimneys", spec.chimneys.len());
        if let Some(w) = spec.width() {
            self.real("eps", w);
        }
        for (m, c) in spec.chimneys.iter().enumerate() {
            self.real(format!("x_{m}"), c.x_center);
            self.real(format!("h_{m}"), c.height);
        }
        self
    }

    pub fn render(&self, header: &str) -> String {
        let mut out = String::from(header);
        for (k, v) in &self.entries {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }
}

/// Parses a record back into `(key, value)` pairs, skipping comments.
pub fn parse_record(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub const CONVERGENCE_COLUMNS: &str = "iter,t1,t2,t3,h1,h2,h3,Re_s_minus,Im_s_minus,Re_s_plus,Im_s_plus,ln_abs_s_minus,ln_abs_s_plus,step_norm";

/// One row per evaluated iterate; `step_norm` is the update proposed from it.
pub fn convergence_csv(state: &DesignState, header: &str) -> String {
    let mut out = String::from(header);
    out.push_str(CONVERGENCE_COLUMNS);
    out.push('\n');
    for r in &state.history {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.iteration,
            f(r.t[0]),
            f(r.t[1]),
            f(r.t[2]),
            f(r.heights[0]),
            f(r.heights[1]),
            f(r.heights[2]),
            f(r.s_minus.re),
            f(r.s_minus.im),
            f(r.s_plus.re),
            f(r.s_plus.im),
            f(r.s_minus.norm().ln()),
            f(r.s_plus.norm().ln()),
            f(r.step_norm)
        )
        .unwrap();
    }
    out
}

pub const SWEEP_COLUMNS: &str = "eps,Re_s_minus,Im_s_minus,Re_s_plus,Im_s_plus,abs_s_minus,abs_s_plus";

pub fn sweep_csv(rows: &[(f64, C64, C64)], header: &str) -> String {
    let mut out = String::from(header);
    out.push_str(SWEEP_COLUMNS);
    out.push('\n');
    for (eps, sm, sp) in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            f(*eps),
            f(sm.re),
            f(sm.im),
            f(sp.re),
            f(sp.im),
            f(sm.norm()),
            f(sp.norm())
        )
        .unwrap();
    }
    out
}

pub const ORACLE_COLUMNS: &str = "solver,level,resolution,Re_s_minus,Im_s_minus,Re_s_plus,Im_s_plus,energy_defect";

/// One row of the oracle comparison table.
#[derive(Clone, Copy, Debug)]
pub struct OracleRow {
    pub solver: &'static str,
    pub level: usize,
    pub resolution: f64,
    pub s_minus: C64,
    pub s_plus: C64,
    pub energy_defect: f64,
}

pub fn oracle_csv(rows: &[OracleRow], header: &str) -> String {
    let mut out = String::from(header);
    out.push_str(ORACLE_COLUMNS);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.solver,
            r.level,
            f(r.resolution),
            f(r.s_minus.re),
            f(r.s_minus.im),
            f(r.s_plus.re),
            f(r.s_plus.im),
            f(r.energy_defect)
        )
        .unwrap();
    }
    out
}

/// A spec and its mesh options as a `[spec]` TOML fragment (for re-running a
/// design result on the same mesh).
pub fn spec_toml(spec: &WaveguideSpec, options: &MeshOptions) -> String {
    let mut out = String::from("[spec]\n");
    writeln!(out, "k = {:?}", spec.k).unwrap();
    writeln!(out, "trunc_half_length = {:?}", spec.trunc_half_length).unwrap();
    writeln!(out, "dtn_terms = {}", spec.dtn_terms).unwrap();
    writeln!(out, "mesh_target_h = {:?}", spec.mesh_target_h).unwrap();
    writeln!(out, "min_cells_across_chimney = {}", spec.min_cells_across_chimney).unwrap();
    writeln!(out, "corner_levels = {}", options.corner_levels).unwrap();
    if let Some(t) = options.transverse_h {
        writeln!(out, "transverse_h = {t:?}").unwrap();
    }
    if let Some(cells) = &options.chimney_vertical_cells {
        writeln!(out, "chimney_vertical_cells = {cells:?}").unwrap();
    }
    for c in &spec.chimneys {
        writeln!(
            out,
            "\n[[spec.chimneys]]\nx_center = {:?}\nheight = {:?}\nwidth = {:?}",
            c.x_center, c.height, c.width
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use waveguide_core::geometry::{generate_mesh, Chimney};

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [std::f64::consts::PI, -1.0 / 3.0, 1e-300, 12345.678901234567] {
            let s = f(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn header_lines_are_comments() {
        let h = header("test", "a = 1\n[b]\nc = 2\n");
        assert!(h.lines().all(|l| l.starts_with('#')));
        assert!(h.contains("#   [b]"));
    }

    #[test]
    fn mesh_sections_have_declared_counts() {
        let spec = WaveguideSpec::strip(2.0, 3.5, 0.5).with_chimneys(vec![Chimney::new(0.0, 0.6, 0.4)]);
        let mesh = generate_mesh(&spec).unwrap();
        let text = mesh_text(&mesh, "# h\n");
        let lines: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(lines[0], format!("vertices {}", mesh.n_nodes()));
        let el_at = 1 + mesh.n_nodes();
        assert_eq!(lines[el_at], format!("elements {}", mesh.n_elements()));
        assert_eq!(lines[el_at + 1].split(' ').count(), 8);
        let ed_at = el_at + 1 + mesh.n_elements();
        assert_eq!(lines[ed_at], format!("edges {}", mesh.boundary_edges.len()));
        assert_eq!(lines.len(), ed_at + 1 + mesh.boundary_edges.len());
    }

    #[test]
    fn record_round_trips() {
        let mut r = Record::new();
        r.real("k", 2.5).complex("s", C64::new(0.25, -1.5)).int("n", 3);
        let parsed = parse_record(&r.render("# x\n"));
        assert_eq!(parsed.len(), 5);
        assert_eq!(parsed[1].0, "re_s");
        assert_eq!(parsed[2].1.parse::<f64>().unwrap(), -1.5);
    }
}
