//! Run configuration: built-in defaults, then a flat `key = value` file, then flags.

use std::path::PathBuf;

use h3plateau::curve::CurveParams;
use h3plateau::diagnostics::Probe;
use h3plateau::domain::DomainParams;
use h3plateau::h3::QuadOrder;
use h3plateau::solver::SolverConfig;
use h3plateau::tunnel::{TunnelParams, DEFAULT_ANNULUS_L_MAX, DEFAULT_ZD_FRACTION};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub eps1: f64,
    pub del1: f64,
    /// `None` means `δ₁/4`.
    pub zd: Option<f64>,
    pub samples: usize,
    pub margin: Option<f64>,
    pub annulus_l_max: f64,
    pub tunnel_max_iter: usize,
    pub solver: SolverConfig,
    pub probe: Probe,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let c = CurveParams::default();
        Self {
            eps1: c.eps1,
            del1: c.del1,
            zd: None,
            samples: c.samples_per_unit,
            margin: None,
            annulus_l_max: DEFAULT_ANNULUS_L_MAX,
            tunnel_max_iter: TunnelParams::default().max_iter,
            solver: SolverConfig::default(),
            probe: Probe::default(),
            out_dir: PathBuf::from("."),
        }
    }
}

pub fn parse_probe(s: &str) -> Result<Probe, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad probe component {t:?}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z, r] if z > 0.0 && r > 0.0 => Ok(Probe { center: [x, y, z], radius: r }),
        [_, _, _, _] => Err("probe needs z > 0 and r > 0".into()),
        _ => Err(format!("probe must be x,y,z,r; got {s:?}")),
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("bad value {v:?} for {key}"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let s = &mut self.solver;
        match key {
            "eps1" => self.eps1 = num(key, v)?,
            "del1" => self.del1 = num(key, v)?,
            "zd" => self.zd = Some(num(key, v)?),
            "samples" => self.samples = num(key, v)?,
            "margin" => self.margin = Some(num(key, v)?),
            "annulus_l_max" => self.annulus_l_max = num(key, v)?,
            "tunnel_max_iter" => self.tunnel_max_iter = num(key, v)?,
            "grad_tol" => s.grad_tol = num(key, v)?,
            "max_iter" => s.max_iter = num(key, v)?,
            "penalty_init" => s.penalty_init = num(key, v)?,
            "penalty_growth" => s.penalty_growth = num(key, v)?,
            "penalty_rounds" => s.penalty_rounds = num(key, v)?,
            "l_min" => s.l_min = num(key, v)?,
            "l_max" => s.l_max = num(key, v)?,
            "remesh_every" => s.remesh_every = num(key, v)?,
            "quad_order" => {
                s.quad_order = QuadOrder::from_points(num(key, v)?)
                    .ok_or_else(|| format!("quad_order must be 0, 1, 3 or 6; got {v}"))?
            }
            "probe" => self.probe = parse_probe(v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            _ => return Err(format!("unknown config key {key:?}")),
        }
        Ok(())
    }

    /// Applies a flat `key = value` file; `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<(), String> {
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", ln + 1))?;
            self.set(k.trim(), v.trim()).map_err(|e| format!("line {}: {e}", ln + 1))?;
        }
        Ok(())
    }

    pub fn curve(&self, n: usize) -> CurveParams {
        CurveParams { eps1: self.eps1, del1: self.del1, samples_per_unit: self.samples, n }
    }

    pub fn zd(&self) -> f64 {
        self.zd.unwrap_or(DEFAULT_ZD_FRACTION * self.del1)
    }

    pub fn domain(&self, n: usize) -> DomainParams {
        DomainParams { curve: self.curve(n), zd: self.zd(), annulus_l_max: self.annulus_l_max, margin: self.margin }
    }

    pub fn tunnel(&self) -> TunnelParams {
        TunnelParams {
            grad_tol: self.solver.grad_tol,
            max_iter: self.tunnel_max_iter,
            ..self.domain(1).tunnel_params()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_keys_and_comments() {
        let mut c = RunConfig::default();
        c.apply_file("# comment\neps1 = 0.3\n\nmax_iter=7 # trailing\nprobe = 0,0,2,0.5\nquad_order = 3\n").unwrap();
        assert_eq!(c.eps1, 0.3);
        assert_eq!(c.solver.max_iter, 7);
        assert_eq!(c.probe.center, [0.0, 0.0, 2.0]);
        assert_eq!(c.solver.quad_order, QuadOrder::Three);
        assert!(c.apply_file("nope = 1").is_err());
        assert!(c.apply_file("eps1 0.3").is_err());
        assert!(c.apply_file("quad_order = 2").is_err());
    }

    #[test]
    fn probe_parsing() {
        assert!(parse_probe("0,0,1.5,1.0").is_ok());
        assert!(parse_probe("0,0,1.5").is_err());
        assert!(parse_probe("0,0,-1,1").is_err());
    }
}
