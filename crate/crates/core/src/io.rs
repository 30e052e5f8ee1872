//! Plain-text formats for polynomials, systems, subspaces and nets.
//!
//! A polynomial is one term per line, `alpha_1 ... alpha_n : coefficient`.
//! A system file starts with `n=<n> degrees=<d_1,...,d_{n-1}>` and separates
//! polynomials with `---`. A subspace file starts with `n=<n> d=<d> m=<m>`
//! followed by `m` polynomials in the same block format. Blank lines and text
//! after `#` are ignored.
//!
//! ```
//! use polycond::io::{parse_system, write_system};
//! let text = "n=2 degrees=2\n2 0 : 1\n0 2 : -1\n";
//! let p = parse_system(text).unwrap();
//! assert_eq!(parse_system(&write_system(&p)).unwrap(), p);
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::poly::{HomogeneousPolynomial, PolynomialSystem};
use crate::sphere::{build_net_with, NetSymmetry, SphereNet};
use crate::subspace::{orthonormalize, PolySubspace};

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, message: message.into() })
}

/// Non-empty lines with comments stripped, paired with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

/// Splits content lines into `---`-separated blocks.
fn blocks<'a>(lines: impl Iterator<Item = (usize, &'a str)>) -> Vec<Vec<(usize, &'a str)>> {
    let mut out = vec![Vec::new()];
    for (no, l) in lines {
        if l == "---" {
            out.push(Vec::new());
        } else {
            out.last_mut().expect("nonempty").push((no, l));
        }
    }
    out
}

fn header_fields(no: usize, line: &str) -> Result<Vec<(&str, &str)>> {
    line.split_whitespace()
        .map(|f| f.split_once('=').map_or_else(|| parse_err(no, format!("expected key=value, got {f:?}")), Ok))
        .collect()
}

fn parse_term(no: usize, line: &str, n: usize) -> Result<(Vec<u32>, f64)> {
    let Some((lhs, rhs)) = line.split_once(':') else {
        return parse_err(no, "expected `alpha_1 ... alpha_n : coefficient`");
    };
    let alpha = lhs
        .split_whitespace()
        .map(|a| a.parse::<u32>().or_else(|_| parse_err(no, format!("bad exponent {a:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if alpha.len() != n {
        return parse_err(no, format!("expected {n} exponents, found {}", alpha.len()));
    }
    let c: f64 = rhs.trim().parse().or_else(|_| parse_err(no, format!("bad coefficient {:?}", rhs.trim())))?;
    if !c.is_finite() {
        return parse_err(no, "coefficient is not finite");
    }
    Ok((alpha, c))
}

fn parse_block(block: &[(usize, &str)], n: usize, d: u32, at: usize) -> Result<HomogeneousPolynomial> {
    let mut terms = Vec::with_capacity(block.len());
    for &(no, l) in block {
        let (alpha, c) = parse_term(no, l, n)?;
        if alpha.iter().sum::<u32>() != d {
            return parse_err(no, format!("term has degree {}, expected {d}", alpha.iter().sum::<u32>()));
        }
        terms.push((alpha, c));
    }
    HomogeneousPolynomial::from_terms(n, d, &terms).or_else(|e| parse_err(at, e.to_string()))
}

/// Parses a single polynomial block in `n` variables and degree `d`.
pub fn parse_polynomial(text: &str, n: usize, d: u32) -> Result<HomogeneousPolynomial> {
    let lines: Vec<_> = content_lines(text).collect();
    parse_block(&lines, n, d, 1)
}

/// Serializes the nonzero terms of `p`, one per line.
pub fn write_polynomial(p: &HomogeneousPolynomial) -> String {
    let mut s = String::new();
    for (alpha, c) in p.basis().exponents().zip(p.coeffs()) {
        if *c != 0.0 {
            for a in alpha {
                let _ = write!(s, "{a} ");
            }
            let _ = writeln!(s, ": {c:?}");
        }
    }
    s
}

fn parse_list(no: usize, v: &str) -> Result<Vec<u32>> {
    v.split(',')
        .map(|x| x.trim().parse::<u32>().or_else(|_| parse_err(no, format!("bad degree {x:?}"))))
        .collect()
}

fn parse_usize(no: usize, key: &str, v: &str) -> Result<usize> {
    v.parse().or_else(|_| parse_err(no, format!("bad value for {key}: {v:?}")))
}

/// Parses a system file.
pub fn parse_system(text: &str) -> Result<PolynomialSystem> {
    let mut lines = content_lines(text);
    let Some((hno, header)) = lines.next() else {
        return parse_err(1, "empty system file");
    };
    let (mut n, mut degrees) = (None, None);
    for (k, v) in header_fields(hno, header)? {
        match k {
            "n" => n = Some(parse_usize(hno, k, v)?),
            "degrees" => degrees = Some(parse_list(hno, v)?),
            _ => return parse_err(hno, format!("unknown header key {k:?}")),
        }
    }
    let (Some(n), Some(degrees)) = (n, degrees) else {
        return parse_err(hno, "header must be `n=<n> degrees=<d_1,...>`");
    };
    let bl = blocks(lines);
    if bl.len() != degrees.len() {
        return parse_err(hno, format!("header lists {} degrees but file has {} blocks", degrees.len(), bl.len()));
    }
    let polys = bl
        .iter()
        .zip(&degrees)
        .map(|(b, &d)| parse_block(b, n, d, b.first().map_or(hno, |x| x.0)))
        .collect::<Result<Vec<_>>>()?;
    PolynomialSystem::new(polys).or_else(|e| parse_err(hno, e.to_string()))
}

/// Serializes a system with its header.
pub fn write_system(p: &PolynomialSystem) -> String {
    let degrees: Vec<String> = p.degrees().iter().map(|d| d.to_string()).collect();
    let mut s = format!("n={} degrees={}\n", p.n(), degrees.join(","));
    let blocks: Vec<String> = p.polys().iter().map(write_polynomial).collect();
    s.push_str(&blocks.join("---\n"));
    s
}

/// Parses a subspace file; the listed polynomials are orthonormalized.
pub fn parse_subspace(text: &str) -> Result<PolySubspace> {
    let mut lines = content_lines(text);
    let Some((hno, header)) = lines.next() else {
        return parse_err(1, "empty subspace file");
    };
    let (mut n, mut d, mut m) = (None, None, None);
    for (k, v) in header_fields(hno, header)? {
        match k {
            "n" => n = Some(parse_usize(hno, k, v)?),
            "d" => d = Some(parse_usize(hno, k, v)? as u32),
            "m" => m = Some(parse_usize(hno, k, v)?),
            _ => return parse_err(hno, format!("unknown header key {k:?}")),
        }
    }
    let (Some(n), Some(d), Some(m)) = (n, d, m) else {
        return parse_err(hno, "header must be `n=<n> d=<d> m=<m>`");
    };
    let bl = blocks(lines);
    if bl.len() != m {
        return parse_err(hno, format!("header says m={m} but file has {} blocks", bl.len()));
    }
    let gens = bl
        .iter()
        .map(|b| parse_block(b, n, d, b.first().map_or(hno, |x| x.0)))
        .collect::<Result<Vec<_>>>()?;
    let f = orthonormalize(&gens).or_else(|e| parse_err(hno, e.to_string()))?;
    if f.dim() != m {
        return parse_err(hno, format!("the {m} generators span only {} dimensions", f.dim()));
    }
    Ok(f)
}

/// Serializes the orthonormal basis of `f`.
pub fn write_subspace(f: &PolySubspace) -> String {
    let mut s = format!("n={} d={} m={}\n", f.n(), f.degree(), f.dim());
    let blocks: Vec<String> = f.basis().iter().map(write_polynomial).collect();
    s.push_str(&blocks.join("---\n"));
    s
}

/// Serializes a net: header `n delta_target delta_achieved seed size`, then one point per line.
pub fn write_net(net: &SphereNet) -> String {
    let mut s = format!(
        "{} {:?} {:?} {} {}\n",
        net.n(),
        net.delta_target(),
        net.delta_achieved(),
        net.seed(),
        net.len()
    );
    for x in net.points() {
        let row: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

/// Parses a net file and checks it against a fresh construction with the same header.
pub fn parse_net(text: &str) -> Result<SphereNet> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let Some((hno, header)) = lines.next() else {
        return parse_err(1, "empty net file");
    };
    let f: Vec<&str> = header.split_whitespace().collect();
    if f.len() != 5 {
        return parse_err(hno, "header must be `n delta_target delta_achieved seed size`");
    }
    let bad = |what: &str| Error::Parse { line: hno, message: format!("bad {what}") };
    let n: usize = f[0].parse().map_err(|_| bad("n"))?;
    let target: f64 = f[1].parse().map_err(|_| bad("delta_target"))?;
    let achieved: f64 = f[2].parse().map_err(|_| bad("delta_achieved"))?;
    let seed: u64 = f[3].parse().map_err(|_| bad("seed"))?;
    let size: usize = f[4].parse().map_err(|_| bad("size"))?;
    let mut points = Vec::with_capacity(size * n);
    for (no, l) in lines {
        let row = l
            .split_whitespace()
            .map(|v| v.parse::<f64>().or_else(|_| parse_err(no, format!("bad coordinate {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != n {
            return parse_err(no, format!("expected {n} coordinates"));
        }
        points.extend(row);
    }
    if points.len() != size * n {
        return parse_err(hno, format!("header says {size} points, file has {}", points.len() / n.max(1)));
    }
    for sym in [NetSymmetry::Full, NetSymmetry::Antipodal] {
        let net = build_net_with(n, target, seed, sym)?;
        if net.len() == size {
            if net.delta_achieved() != achieved {
                return parse_err(hno, "delta_achieved does not match the construction");
            }
            let same = net.points().flatten().zip(&points).all(|(a, b)| (a - b).abs() <= 1e-12);
            if !same {
                return parse_err(hno, "points do not match the construction");
            }
            return Ok(net);
        }
    }
    parse_err(hno, "size matches no construction for this header")
}

/// Writes `contents` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// On-disk cache of nets keyed by `(n, delta, seed, symmetry)`.
#[derive(Clone, Debug)]
pub struct NetCache {
    dir: PathBuf,
}

impl NetCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn path_for(&self, n: usize, delta: f64, seed: u64, symmetry: NetSymmetry) -> PathBuf {
        let sym = match symmetry {
            NetSymmetry::Full => "full",
            NetSymmetry::Antipodal => "antipodal",
        };
        self.dir.join(format!("net_n{n}_d{:016x}_s{seed}_{sym}.txt", delta.to_bits()))
    }

    /// Loads a cached net, rebuilding and rewriting it if missing or unreadable.
    pub fn get_or_build(&self, n: usize, delta: f64, seed: u64, symmetry: NetSymmetry) -> Result<SphereNet> {
        let path = self.path_for(n, delta, seed, symmetry);
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(net) = parse_net(&text) {
                if net.symmetry() == symmetry {
                    return Ok(net);
                }
            }
        }
        let net = build_net_with(n, delta, seed, symmetry)?;
        write_atomic(&path, &write_net(&net))?;
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_roundtrip() {
        let text = "# sample\nn=3 degrees=2,1\n2 0 0 : 1.5\n0 1 1 : -2\n---\n0 0 1 : 3\n";
        let p = parse_system(text).unwrap();
        assert_eq!(p.degrees(), vec![2, 1]);
        assert_eq!(p.polys()[0].coeff(&[0, 1, 1]), -2.0);
        assert_eq!(parse_system(&write_system(&p)).unwrap(), p);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let err = parse_system("n=2 degrees=2\n2 0 : 1\n1 0 : 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_system("n=2 degrees=2,2\n2 0 : 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(parse_system("n=2 degrees=2\n2 0 : x\n").is_err());
    }

    #[test]
    fn subspace_roundtrip() {
        let text = "n=2 d=2 m=2\n2 0 : 1\n---\n1 1 : 1\n0 2 : 1\n";
        let f = parse_subspace(text).unwrap();
        let g = parse_subspace(&write_subspace(&f)).unwrap();
        assert_eq!(f.dim(), 2);
        for b in f.basis() {
            assert!(g.distance(&b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn net_roundtrip_and_cache() {
        let dir = tempfile::tempdir().unwrap();
        let cache = NetCache::new(dir.path()).unwrap();
        let a = cache.get_or_build(3, 0.3, 7, NetSymmetry::Antipodal).unwrap();
        let path = cache.path_for(3, 0.3, 7, NetSymmetry::Antipodal);
        assert!(path.exists());
        let b = cache.get_or_build(3, 0.3, 7, NetSymmetry::Antipodal).unwrap();
        assert_eq!(a.len(), b.len());
        assert!(a.points().flatten().eq(b.points().flatten()));
        fs::write(&path, "garbage").unwrap();
        let c = cache.get_or_build(3, 0.3, 7, NetSymmetry::Antipodal).unwrap();
        assert_eq!(c.len(), a.len());
        assert!(parse_net(&fs::read_to_string(&path).unwrap()).is_ok());
    }
}
