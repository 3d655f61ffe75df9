//! 2D FDTD for the axial electric field `Ez` and the in-plane magnetic field
//! `(Hx, Hy)` on a Yee grid, terminated by a convolutional PML.
//!
//! Grid layout: node `(i, j)` carrying `Ez` sits at `origin + (iΔ, jΔ)`, `Hx`
//! lives at `(i, j + ½)` and `Hy` at `(i + ½, j)`. Arrays are row-major with
//! `j` fastest (`index = i * ny + j`). The lens center is always a node and
//! the grid is symmetric about it, so mirrored scenes give mirrored grids.

mod cpml;
pub mod dump;
mod engine;

pub use cpml::PmlParams;
pub use engine::{run_to_steady_state, run_with_options, RunOptions};

use num_complex::Complex64;

use crate::design::{effective_permittivity, loss_conductivity};
use crate::error::{Error, Result};
use crate::scene::{validate_scene, AntennaScene, Point2, Taper};
use crate::units::wavelength;

/// Coarsest grid accepted: cells per wavelength in the densest medium.
pub const MIN_CELLS_PER_MEDIUM_WAVELENGTH: f64 = 10.0;
/// Recommended accuracy level; coarser grids build but carry an advisory.
pub const RECOMMENDED_CELLS_PER_MEDIUM_WAVELENGTH: f64 = 20.0;
const MAX_CELLS: usize = 25_000_000;
const RIM_SUBSAMPLES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum SourceShape {
    /// Line segment of soft `Ez` sources centered at `center`, running along
    /// the unit vector `tangent`.
    Aperture {
        center: Point2,
        tangent: Point2,
        width: f64,
        taper: Taper,
    },
    /// Single soft source on the node nearest `position`.
    Point { position: Point2 },
}

/// One grid node driven by the source and its weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceCell {
    pub index: usize,
    pub weight: f64,
}

/// Half-open index box `[i0, i1) × [j0, j1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridBox {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl GridBox {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i < self.i1 && j >= self.j0 && j < self.j1
    }
}

#[derive(Debug, Clone)]
pub struct SimulationDomain {
    pub f0: f64,
    pub dx: f64,
    pub nx: usize,
    pub ny: usize,
    /// Position of node `(0, 0)`.
    pub origin: Point2,
    /// Lens center; the grid is symmetric about this node.
    pub center: Point2,
    /// Relative permittivity per node.
    pub eps: Vec<f64>,
    /// Conductivity per node (S/m).
    pub sigma: Vec<f64>,
    /// Permittivity of the medium surrounding the lens.
    pub background_eps: f64,
    pub pml: PmlParams,
    pub source_shape: SourceShape,
    pub source: Vec<SourceCell>,
    /// Radius about `center` enclosing lens and source.
    pub enclosed_radius: f64,
    pub port: Option<usize>,
    pub advisories: Vec<String>,
}

impl SimulationDomain {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn node_position(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + i as f64 * self.dx,
            self.origin.y + j as f64 * self.dx,
        )
    }

    /// Nodes outside the absorbing layer.
    pub fn interior(&self) -> GridBox {
        let n = self.pml.cells;
        GridBox {
            i0: n,
            i1: self.nx - n,
            j0: n,
            j1: self.ny - n,
        }
    }

    pub fn nearest_node(&self, p: Point2) -> (usize, usize) {
        let i = ((p.x - self.origin.x) / self.dx).round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((p.y - self.origin.y) / self.dx).round().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    pub fn lambda0(&self) -> f64 {
        wavelength(self.f0)
    }

    /// Uniform medium of relative permittivity `eps` with a source and no lens.
    pub fn free_space(
        f0: f64,
        eps: f64,
        half_extent: f64,
        resolution: f64,
        shape: SourceShape,
        pml: PmlParams,
    ) -> Result<Self> {
        let dx = grid_spacing(f0, resolution, eps)?;
        let mut advisories = Vec::new();
        accuracy_advisory(resolution, eps, &mut advisories);
        let nh = (half_extent / dx).ceil() as usize + pml.cells;
        let n = 2 * nh + 1;
        check_size(n)?;
        let origin = Point2::new(-(nh as f64) * dx, -(nh as f64) * dx);
        let mut d = SimulationDomain {
            f0,
            dx,
            nx: n,
            ny: n,
            origin,
            center: Point2::ORIGIN,
            eps: vec![eps; n * n],
            sigma: vec![0.0; n * n],
            background_eps: eps,
            pml,
            source_shape: shape.clone(),
            source: Vec::new(),
            enclosed_radius: 0.0,
            port: None,
            advisories,
        };
        d.source = rasterize_source(&d, &shape)?;
        d.enclosed_radius = source_extent(&d);
        Ok(d)
    }
}

fn grid_spacing(f0: f64, resolution: f64, max_eps: f64) -> Result<f64> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::Config(format!("resolution must be positive, got {resolution}")));
    }
    let per_medium = resolution / max_eps.sqrt();
    if per_medium < MIN_CELLS_PER_MEDIUM_WAVELENGTH {
        return Err(Error::Config(format!(
            "{resolution} cells/λ0 gives {per_medium:.1} cells per wavelength in ε = {max_eps}; at least {} needed",
            MIN_CELLS_PER_MEDIUM_WAVELENGTH
        )));
    }
    Ok(wavelength(f0) / resolution)
}

fn accuracy_advisory(resolution: f64, max_eps: f64, out: &mut Vec<String>) {
    let per_medium = resolution / max_eps.sqrt();
    if per_medium < RECOMMENDED_CELLS_PER_MEDIUM_WAVELENGTH {
        out.push(format!(
            "{per_medium:.1} cells per wavelength inside ε = {max_eps} (below the recommended {})",
            RECOMMENDED_CELLS_PER_MEDIUM_WAVELENGTH
        ));
    }
}

fn check_size(n: usize) -> Result<()> {
    if n.saturating_mul(n) > MAX_CELLS {
        return Err(Error::Config(format!("grid of {n}x{n} nodes exceeds the {MAX_CELLS}-node limit")));
    }
    Ok(())
}

/// Aperture weights sampled at cell centers across `width`, unit peak.
pub fn aperture_source_profile(width: f64, taper: Taper, dx: f64) -> Result<Vec<f64>> {
    if !(width >= 2.0 * dx) {
        return Err(Error::Config(format!(
            "aperture of {:.4} mm spans fewer than two cells of {:.4} mm",
            width * 1e3,
            dx * 1e3
        )));
    }
    let n = ((width / dx).round() as usize).max(2);
    let step = width / n as f64;
    let w: Vec<f64> = (0..n)
        .map(|k| {
            let x = -0.5 * width + (k as f64 + 0.5) * step;
            match taper {
                Taper::Uniform => 1.0,
                Taper::Cosine => (std::f64::consts::PI * x / width).cos(),
            }
        })
        .collect();
    let peak = w.iter().cloned().fold(0.0, f64::max);
    Ok(w.into_iter().map(|v| v / peak).collect())
}

fn aperture_samples(width: f64, taper: Taper, dx: f64) -> Result<Vec<(f64, f64)>> {
    let w = aperture_source_profile(width, taper, dx)?;
    let n = w.len();
    let step = width / n as f64;
    Ok(w.into_iter()
        .enumerate()
        .map(|(k, v)| (-0.5 * width + (k as f64 + 0.5) * step, v))
        .collect())
}

fn rasterize_source(d: &SimulationDomain, shape: &SourceShape) -> Result<Vec<SourceCell>> {
    let interior = d.interior();
    let mut cells: Vec<SourceCell> = Vec::new();
    let mut deposit = |i: usize, j: usize, w: f64| -> Result<()> {
        if !interior.contains(i, j) {
            return Err(Error::Config("source lies inside the absorbing layer".into()));
        }
        if w != 0.0 {
            cells.push(SourceCell { index: d.index(i, j), weight: w });
        }
        Ok(())
    };
    match shape {
        SourceShape::Point { position } => {
            let (i, j) = d.nearest_node(*position);
            deposit(i, j, 1.0)?;
        }
        SourceShape::Aperture { center, tangent, width, taper } => {
            for (s, w) in aperture_samples(*width, *taper, d.dx)? {
                let p = center.add(tangent.scale(s));
                let fx = (p.x - d.origin.x) / d.dx;
                let fy = (p.y - d.origin.y) / d.dx;
                let (i0, j0) = (fx.floor(), fy.floor());
                let (tx, ty) = (fx - i0, fy - j0);
                if i0 < 0.0 || j0 < 0.0 {
                    return Err(Error::Config("source lies outside the grid".into()));
                }
                let (i0, j0) = (i0 as usize, j0 as usize);
                deposit(i0, j0, w * (1.0 - tx) * (1.0 - ty))?;
                deposit(i0 + 1, j0, w * tx * (1.0 - ty))?;
                deposit(i0, j0 + 1, w * (1.0 - tx) * ty)?;
                deposit(i0 + 1, j0 + 1, w * tx * ty)?;
            }
        }
    }
    cells.sort_by_key(|c| c.index);
    let mut merged: Vec<SourceCell> = Vec::with_capacity(cells.len());
    for c in cells {
        match merged.last_mut() {
            Some(last) if last.index == c.index => last.weight += c.weight,
            _ => merged.push(c),
        }
    }
    Ok(merged)
}

fn source_extent(d: &SimulationDomain) -> f64 {
    d.source
        .iter()
        .map(|c| {
            let p = d.node_position(c.index / d.ny, c.index % d.ny);
            p.sub(d.center).norm()
        })
        .fold(0.0, f64::max)
}

/// Source shape of the aperture of port `index`, tangent to the focal arc.
pub fn port_source(scene: &AntennaScene, index: usize) -> Result<SourceShape> {
    let port = scene
        .port(index)
        .ok_or_else(|| Error::Input(format!("scene has no port F{index}")))?;
    let (s, c) = port.arc_angle_deg.to_radians().sin_cos();
    Ok(SourceShape::Aperture {
        center: port.position(&scene.lens),
        // perpendicular to the radial line through the lens center
        tangent: Point2::new(-s, c),
        width: port.aperture_width,
        taper: port.taper,
    })
}

/// Rasterizes the scene with port `active_port` as the only source.
pub fn build_domain(scene: &AntennaScene, active_port: usize, resolution: f64) -> Result<SimulationDomain> {
    let shape = port_source(scene, active_port)?;
    let mut d = build_with_source(scene, shape, resolution, PmlParams::default())?;
    d.port = Some(active_port);
    Ok(d)
}

/// Rasterizes the scene's lens and places an arbitrary source.
pub fn build_with_source(
    scene: &AntennaScene,
    shape: SourceShape,
    resolution: f64,
    pml: PmlParams,
) -> Result<SimulationDomain> {
    let violations = validate_scene(scene);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::Config(format!("invalid scene: {}", list.join("; "))));
    }
    let lens = &scene.lens;
    let eps_in = effective_permittivity(lens.eps_r, scene.plate_spacing, scene.f0, scene.mode_model)?;
    let eps_out = effective_permittivity(1.0, scene.plate_spacing, scene.f0, scene.mode_model)?;
    let sigma_lens = loss_conductivity(scene.f0, lens.eps_r, lens.tan_delta);

    let max_eps = eps_in.max(eps_out);
    let dx = grid_spacing(scene.f0, resolution, max_eps)?;
    let mut advisories = Vec::new();
    accuracy_advisory(resolution, max_eps, &mut advisories);

    let extent = scene.geometry_radius() + scene.domain_padding;
    let nh = (extent / dx).ceil() as usize + pml.cells;
    let n = 2 * nh + 1;
    check_size(n)?;
    let origin = Point2::new(lens.center.x - nh as f64 * dx, lens.center.y - nh as f64 * dx);

    let mut eps = vec![eps_out; n * n];
    let mut sigma = vec![0.0; n * n];
    let r = lens.radius;
    let rim = 0.75 * dx;
    let sub: Vec<f64> = (0..RIM_SUBSAMPLES)
        .map(|k| ((k as f64 + 0.5) / RIM_SUBSAMPLES as f64 - 0.5) * dx)
        .collect();
    for i in 0..n {
        let x = (i as f64 - nh as f64) * dx;
        for j in 0..n {
            let y = (j as f64 - nh as f64) * dx;
            let dist = x.hypot(y);
            let fill = if dist <= r - rim {
                1.0
            } else if dist >= r + rim {
                0.0
            } else {
                let mut inside = 0usize;
                for &sx in &sub {
                    for &sy in &sub {
                        if (x + sx).hypot(y + sy) < r {
                            inside += 1;
                        }
                    }
                }
                inside as f64 / (RIM_SUBSAMPLES * RIM_SUBSAMPLES) as f64
            };
            if fill > 0.0 {
                let k = i * n + j;
                eps[k] = eps_out + fill * (eps_in - eps_out);
                sigma[k] = fill * sigma_lens;
            }
        }
    }

    let mut d = SimulationDomain {
        f0: scene.f0,
        dx,
        nx: n,
        ny: n,
        origin,
        center: lens.center,
        eps,
        sigma,
        background_eps: eps_out,
        pml,
        source_shape: shape.clone(),
        source: Vec::new(),
        enclosed_radius: 0.0,
        port: None,
        advisories,
    };
    d.source = rasterize_source(&d, &shape)?;
    d.enclosed_radius = scene.geometry_radius().max(source_extent(&d));
    Ok(d)
}

/// Steady-state `Ez` phasor (`e^{jωt}` convention) on the domain's nodes.
#[derive(Debug, Clone)]
pub struct PhasorField {
    pub values: Vec<Complex64>,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub origin: Point2,
    pub center: Point2,
    pub f0: f64,
    pub background_eps: f64,
    /// Absorber-free nodes.
    pub interior: GridBox,
    /// Radius about `center` enclosing every scatterer and source.
    pub enclosed_radius: f64,
    /// Periods simulated before the phasor was taken.
    pub periods: usize,
    /// Relative phasor change over the final period.
    pub convergence: f64,
    pub converged: bool,
}

impl PhasorField {
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.ny + j]
    }

    pub fn node_position(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + i as f64 * self.dx,
            self.origin.y + j as f64 * self.dx,
        )
    }

    /// Field sampled from a closed-form expression, for checking the
    /// near-to-far-field step on its own.
    pub fn from_fn<F>(
        f0: f64,
        dx: f64,
        half_cells: usize,
        margin_cells: usize,
        enclosed_radius: f64,
        f: F,
    ) -> Self
    where
        F: Fn(Point2) -> Complex64,
    {
        let n = 2 * half_cells + 1;
        let origin = Point2::new(-(half_cells as f64) * dx, -(half_cells as f64) * dx);
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(Point2::new(origin.x + i as f64 * dx, origin.y + j as f64 * dx)));
            }
        }
        PhasorField {
            values,
            nx: n,
            ny: n,
            dx,
            origin,
            center: Point2::ORIGIN,
            f0,
            background_eps: 1.0,
            interior: GridBox {
                i0: margin_cells,
                i1: n - margin_cells,
                j0: margin_cells,
                j1: n - margin_cells,
            },
            enclosed_radius,
            periods: 0,
            convergence: 0.0,
            converged: true,
        }
    }

    /// Same field multiplied by a complex constant.
    pub fn scaled(&self, a: Complex64) -> Self {
        let mut f = self.clone();
        for v in &mut f.values {
            *v *= a;
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::default_paper_scene;

    #[test]
    fn uniform_profile() {
        let w = aperture_source_profile(7.112e-3, Taper::Uniform, 0.5e-3).unwrap();
        assert!(w.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn cosine_profile_shape() {
        let dx = 1e-3;
        let w = aperture_source_profile(4.0 * dx, Taper::Cosine, dx).unwrap();
        assert_eq!(w.len(), 4);
        assert!((w[0] - w[3]).abs() < 1e-15 && (w[1] - w[2]).abs() < 1e-15);
        assert!(w[0] < w[1]);
        assert!((w[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_profile_mean() {
        let dx = wavelength(28e9) / 20.0;
        let w = aperture_source_profile(7.112e-3, Taper::Cosine, dx).unwrap();
        assert_eq!(w.len(), 13);
        // mean of cos over its half period is 2/π; weights carry unit peak
        let raw: Vec<f64> = (0..13)
            .map(|k| (std::f64::consts::PI * (-0.5 + (k as f64 + 0.5) / 13.0)).cos())
            .collect();
        let peak = raw.iter().cloned().fold(0.0, f64::max);
        let expected = 2.0 / std::f64::consts::PI * 13.0 / peak;
        let sum: f64 = w.iter().sum();
        assert!((sum / expected - 1.0).abs() < 0.02, "{sum} vs {expected}");
    }

    #[test]
    fn narrow_aperture_is_rejected() {
        assert!(matches!(
            aperture_source_profile(1.5e-3, Taper::Cosine, 1e-3),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn lens_pixel_area() {
        let s = default_paper_scene();
        let d = build_domain(&s, 5, 20.0).unwrap();
        let eps_in = s.lens.eps_r;
        let filled: f64 = d.eps.iter().map(|e| (e - 1.0) / (eps_in - 1.0)).sum();
        let expected = std::f64::consts::PI * (s.lens.radius / d.dx).powi(2);
        assert!((filled / expected - 1.0).abs() < 0.01, "{filled} vs {expected}");
        assert!((s.lens.radius / d.dx - 92.0).abs() < 0.5);
        assert!(d.advisories.iter().any(|a| a.contains("recommended")));
    }

    #[test]
    fn vacuum_lens_gives_uniform_map() {
        let mut s = default_paper_scene();
        s.lens.eps_r = 1.0;
        s.lens.tan_delta = 0.0;
        let d = build_domain(&s, 5, 20.0).unwrap();
        assert!(d.eps.iter().all(|&e| e == 1.0));
        assert!(d.sigma.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn mirrored_ports_give_mirrored_domains() {
        let s = default_paper_scene();
        let a = build_domain(&s, 1, 20.0).unwrap();
        let b = build_domain(&s, 9, 20.0).unwrap();
        let n = a.ny;
        for i in 0..a.nx {
            for j in 0..n {
                assert_eq!(a.eps[i * n + j], b.eps[i * n + n - 1 - j]);
                assert_eq!(a.sigma[i * n + j], b.sigma[i * n + n - 1 - j]);
            }
        }
        let mirror = |c: &SourceCell| (c.index / n, n - 1 - c.index % n);
        let mut ma: Vec<_> = a.source.iter().map(|c| (mirror(c), c.weight)).collect();
        let mut mb: Vec<_> = b.source.iter().map(|c| ((c.index / n, c.index % n), c.weight)).collect();
        ma.sort_by_key(|x| x.0);
        mb.sort_by_key(|x| x.0);
        assert_eq!(ma.len(), mb.len());
        for (x, y) in ma.iter().zip(&mb) {
            assert_eq!(x.0, y.0);
            assert!((x.1 - y.1).abs() < 1e-12);
        }
    }

    #[test]
    fn resolution_floor() {
        let s = default_paper_scene();
        assert!(matches!(build_domain(&s, 5, 12.0), Err(Error::Config(_))));
        assert!(matches!(build_domain(&s, 42, 20.0), Err(Error::Input(_))));
    }

    #[test]
    fn source_weights_are_conserved() {
        let s = default_paper_scene();
        let d = build_domain(&s, 3, 20.0).unwrap();
        let total: f64 = d.source.iter().map(|c| c.weight).sum();
        let expected: f64 = aperture_source_profile(7.112e-3, Taper::Cosine, d.dx).unwrap().iter().sum();
        assert!((total - expected).abs() < 1e-12);
    }
}
