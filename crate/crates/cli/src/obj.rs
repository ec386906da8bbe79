//! Wavefront OBJ quad meshes.

use std::fmt::Write as _;
use std::path::Path;

use cknet_core::nets::{self, ContactElementNet};
use cknet_core::{Domain, Grid, Vec3};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Vertices row-major (`j` outer), `vn` in the same order, one `f` per face.
/// Degenerate faces become `# degenerate j k`.
pub fn to_obj(net: &ContactElementNet) -> String {
    let d = net.domain();
    let nk = d.nk();
    let idx = |j: i32, k: i32| (j - d.j_min) as usize * nk + (k - d.k_min) as usize + 1;
    let mut s = String::new();
    let _ =
        writeln!(s, "# cknet contact element net, j in [{}, {}], k in [{}, {}]", d.j_min, d.j_max, d.k_min, d.k_max);
    for v in net.x.values() {
        let _ = writeln!(s, "v {} {} {}", num(v.x), num(v.y), num(v.z));
    }
    for n in net.n.values() {
        let _ = writeln!(s, "vn {} {} {}", num(n.x), num(n.y), num(n.z));
    }
    for (j, k) in d.faces() {
        if nets::curvatures(net, j, k).is_err() {
            let _ = writeln!(s, "# degenerate {j} {k}");
        } else {
            let _ = writeln!(s, "f {} {} {} {}", idx(j, k), idx(j, k + 1), idx(j + 1, k + 1), idx(j + 1, k));
        }
    }
    s
}

pub fn export_obj(net: &ContactElementNet, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, to_obj(net))
}

/// Parsed mesh: positions, normals, quads and degenerate-face comments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjMesh {
    pub v: Vec<Vec3>,
    pub vn: Vec<Vec3>,
    pub f: Vec<[usize; 4]>,
    pub degenerate: Vec<(i32, i32)>,
}

pub fn parse_obj(text: &str) -> Result<ObjMesh, String> {
    let mut m = ObjMesh::default();
    let vec3 = |parts: &[&str]| -> Result<Vec3, String> {
        let p: Vec<f64> =
            parts.iter().map(|s| s.parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
        match p[..] {
            [x, y, z] => Ok(Vec3::new(x, y, z)),
            _ => Err("expected three coordinates".into()),
        }
    };
    for line in text.lines() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["v", rest @ ..] => m.v.push(vec3(rest)?),
            ["vn", rest @ ..] => m.vn.push(vec3(rest)?),
            ["f", a, b, c, d] => {
                let p = |s: &str| s.parse::<usize>().map_err(|e| e.to_string());
                m.f.push([p(a)?, p(b)?, p(c)?, p(d)?]);
            }
            ["#", "degenerate", j, k] => {
                m.degenerate.push((j.parse().map_err(|_| "bad j")?, k.parse().map_err(|_| "bad k")?));
            }
            _ => {}
        }
    }
    Ok(m)
}

/// Rebuild a net from a parsed mesh over a known domain.
pub fn to_net(mesh: &ObjMesh, d: Domain) -> Result<ContactElementNet, String> {
    let x = Grid::from_vec(d, mesh.v.clone()).map_err(|e| e.to_string())?;
    let n = Grid::from_vec(d, mesh.vn.clone()).map_err(|e| e.to_string())?;
    ContactElementNet::new(x, n).map_err(|e| e.to_string())
}
