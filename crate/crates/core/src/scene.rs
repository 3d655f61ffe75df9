//! Device model shared by every solver: the lens disk, the plate region and
//! the feed ports on the focal arc.
//!
//! Geometry convention: the lens center is the origin of the scene frame and
//! boresight is the `+x` axis. A port with arc angle `α` sits on the focal arc
//! at polar angle `180° + α`, diametrically opposite the direction its beam
//! points to, so the central port F5 radiates along `+x` and the beam of a
//! port nominally points to azimuth `α`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::units::wavelength;

/// Standard WR-28 broad-wall width (m), the default feed aperture.
pub const KA_BAND_BROAD_WALL: f64 = 7.112e-3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(rho: f64, phi_deg: f64) -> Self {
        let (s, c) = phi_deg.to_radians().sin_cos();
        Self::new(rho * c, rho * s)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LensSpec {
    pub center: Point2,
    /// Lens radius R0 (m).
    pub radius: f64,
    pub eps_r: f64,
    pub tan_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    Uniform,
    Cosine,
}

/// Vertical field model of the plate region used to reduce it to 2D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeModel {
    #[serde(rename = "tem")]
    Tem,
    #[serde(rename = "te1")]
    Te1,
}

impl fmt::Display for ModeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeModel::Tem => "tem",
            ModeModel::Te1 => "te1",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedPort {
    /// 1-based port label (F1, F2, ...).
    pub index: usize,
    pub arc_angle_deg: f64,
    pub aperture_width: f64,
    pub taper: Taper,
    /// Distance from the lens rim to the aperture center (m).
    pub edge_distance: f64,
}

impl FeedPort {
    /// Distance of the aperture center from the lens center.
    pub fn arc_radius(&self, lens: &LensSpec) -> f64 {
        lens.radius + self.edge_distance
    }

    /// Aperture center in the scene frame.
    pub fn position(&self, lens: &LensSpec) -> Point2 {
        // -(cos α, sin α) keeps mirrored ports bit-exact mirror images.
        let (s, c) = self.arc_angle_deg.to_radians().sin_cos();
        let r = self.arc_radius(lens);
        Point2::new(lens.center.x - r * c, lens.center.y - r * s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntennaScene {
    /// Operating frequency (Hz).
    pub f0: f64,
    pub lens: LensSpec,
    pub plate_spacing: f64,
    pub mode_model: ModeModel,
    pub ports: Vec<FeedPort>,
    /// Free space kept beyond all geometry (m).
    pub domain_padding: f64,
    /// When set, ports must be mirror-symmetric about boresight.
    pub symmetric: bool,
}

/// One broken scene invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

fn is_mirrored(a: &[f64]) -> bool {
    a.iter().zip(a.iter().rev()).all(|(x, y)| *x == -*y)
}

/// Arc angles of `count` ports spaced `spacing_deg` apart, centered on boresight.
pub fn symmetric_arc_angles(count: usize, spacing_deg: f64) -> Vec<f64> {
    let mid = (count as f64 - 1.0) / 2.0;
    (0..count).map(|i| (i as f64 - mid) * spacing_deg).collect()
}

/// The reference 28 GHz device: R0 = 4.6 λ0, ε_r = 2.1 Teflon, h = 0.54 λ0 and
/// nine ports at 7.2° spacing, 0.32 R0 from the lens rim.
pub fn default_paper_scene() -> AntennaScene {
    let f0 = 28e9;
    let lambda0 = wavelength(f0);
    let radius = 4.6 * lambda0;
    let edge = 0.32 * radius;
    let ports = symmetric_arc_angles(9, 7.2)
        .into_iter()
        .enumerate()
        .map(|(i, a)| FeedPort {
            index: i + 1,
            arc_angle_deg: a,
            aperture_width: KA_BAND_BROAD_WALL,
            taper: Taper::Cosine,
            edge_distance: edge,
        })
        .collect();
    AntennaScene {
        f0,
        lens: LensSpec {
            center: Point2::ORIGIN,
            radius,
            eps_r: 2.1,
            tan_delta: 0.0002,
        },
        plate_spacing: 0.54 * lambda0,
        mode_model: ModeModel::Tem,
        ports,
        domain_padding: 3.0 * lambda0,
        symmetric: true,
    }
}

impl AntennaScene {
    pub fn lambda0(&self) -> f64 {
        wavelength(self.f0)
    }

    pub fn port(&self, index: usize) -> Option<&FeedPort> {
        self.ports.iter().find(|p| p.index == index)
    }

    /// Port closest to boresight (ties go to the lower index).
    pub fn central_port(&self) -> Option<&FeedPort> {
        self.ports.iter().min_by(|a, b| {
            a.arc_angle_deg
                .abs()
                .total_cmp(&b.arc_angle_deg.abs())
                .then(a.index.cmp(&b.index))
        })
    }

    /// Radius around the lens center enclosing lens and every aperture.
    pub fn geometry_radius(&self) -> f64 {
        self.ports
            .iter()
            .map(|p| p.arc_radius(&self.lens).hypot(0.5 * p.aperture_width))
            .fold(self.lens.radius, f64::max)
    }

    /// Copy with every port moved to `edge_distance` from the rim.
    pub fn with_edge_distance(&self, edge_distance: f64) -> AntennaScene {
        let mut s = self.clone();
        for p in &mut s.ports {
            p.edge_distance = edge_distance;
        }
        s
    }

    /// Copy keeping only the port with `index`.
    pub fn with_single_port(&self, index: usize) -> Result<AntennaScene> {
        let port = self
            .port(index)
            .ok_or_else(|| Error::Input(format!("scene has no port F{index}")))?
            .clone();
        let mut s = self.clone();
        s.symmetric = port.arc_angle_deg == 0.0;
        s.ports = vec![port];
        Ok(s)
    }

    /// Stable short fingerprint of the scene file representation.
    pub fn hash(&self) -> String {
        let text = self.to_toml().unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn to_toml(&self) -> Result<String> {
        SceneFile::from_scene(self)
            .and_then(|f| toml::to_string(&f).map_err(|e| Error::Parse(e.to_string())))
    }

    pub fn from_toml(text: &str) -> Result<AntennaScene> {
        let file: SceneFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_scene()
    }

    pub fn load(path: &Path) -> Result<AntennaScene> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}

fn violation(out: &mut Vec<Violation>, field: &str, rule: impl Into<String>) {
    out.push(Violation {
        field: field.to_string(),
        rule: rule.into(),
    });
}

/// Checks every scene invariant. An empty list means the scene is valid.
pub fn validate_scene(scene: &AntennaScene) -> Vec<Violation> {
    let mut v = Vec::new();
    let lens = &scene.lens;

    if !(scene.f0 > 0.0 && scene.f0.is_finite()) {
        violation(&mut v, "f0", "must be positive and finite");
        return v;
    }
    let lambda0 = scene.lambda0();

    if !(lens.radius > 0.0) {
        violation(&mut v, "lens.radius", "must be > 0");
    }
    if !(lens.eps_r >= 1.0) {
        violation(&mut v, "lens.eps_r", "must be >= 1");
    }
    if !(0.0..0.01).contains(&lens.tan_delta) {
        violation(&mut v, "lens.tan_delta", "must lie in [0, 0.01)");
    }
    if !(scene.plate_spacing > 0.0) {
        violation(&mut v, "plate_spacing_h", "must be > 0");
    } else if scene.mode_model == ModeModel::Te1
        && !(scene.plate_spacing > 0.5 * lambda0 && scene.plate_spacing < lambda0)
    {
        violation(
            &mut v,
            "plate_spacing_h",
            format!(
                "TE1 model needs λ0/2 < h < λ0, got h = {:.4} λ0",
                scene.plate_spacing / lambda0
            ),
        );
    }
    if !(scene.domain_padding >= lambda0) {
        violation(&mut v, "domain_padding", "must be >= λ0");
    }

    for (k, p) in scene.ports.iter().enumerate() {
        let name = format!("ports[F{}]", p.index);
        if p.index == 0 {
            violation(&mut v, &name, "index must be >= 1");
        }
        if !(p.aperture_width > 0.0) {
            violation(&mut v, &format!("{name}.aperture_width"), "must be > 0");
        }
        if !(p.edge_distance > 0.0) {
            violation(&mut v, &format!("{name}.edge_distance"), "must be > 0");
        }
        if k > 0 {
            let prev = &scene.ports[k - 1];
            if !(p.arc_angle_deg > prev.arc_angle_deg) {
                violation(&mut v, &format!("{name}.arc_angle"), "arc angles must strictly increase");
            } else {
                let r = 0.5 * (prev.arc_radius(lens) + p.arc_radius(lens));
                let half = 0.5 * (p.arc_angle_deg - prev.arc_angle_deg).to_radians();
                let chord = 2.0 * r * half.sin();
                if p.aperture_width >= chord || prev.aperture_width >= chord {
                    violation(
                        &mut v,
                        &format!("{name}.aperture_width"),
                        format!("must be narrower than the {:.3} mm chord to the neighbour", chord * 1e3),
                    );
                }
            }
        }
    }

    if scene.symmetric {
        let n = scene.ports.len();
        for k in 0..n / 2 {
            let a = &scene.ports[k];
            let b = &scene.ports[n - 1 - k];
            let mirrored = (a.arc_angle_deg + b.arc_angle_deg).abs() <= 1e-9
                && a.edge_distance == b.edge_distance
                && a.aperture_width == b.aperture_width
                && a.taper == b.taper;
            if !mirrored {
                violation(
                    &mut v,
                    "ports",
                    format!("F{} and F{} are not mirror images about boresight", a.index, b.index),
                );
            }
        }
        if n % 2 == 1 && scene.ports[n / 2].arc_angle_deg.abs() > 1e-9 {
            violation(&mut v, "ports", "middle port of a symmetric layout must sit on boresight");
        }
    }
    v
}

// ---------------------------------------------------------------------------
// Scene file (TOML)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    frequency_hz: f64,
    lens: LensSection,
    plate: PlateSection,
    ports: PortsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<DomainSection>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LensSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius_lambda: Option<f64>,
    eps_r: f64,
    #[serde(default)]
    tan_delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    center_m: Option<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlateSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h_lambda: Option<f64>,
    #[serde(default = "default_mode")]
    mode: ModeModel,
}

fn default_mode() -> ModeModel {
    ModeModel::Tem
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PortsSection {
    count: usize,
    spacing_deg: f64,
    #[serde(default, rename = "edge_distance_over_R0", skip_serializing_if = "Option::is_none")]
    edge_distance_over_r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edge_distance_m: Option<f64>,
    #[serde(default = "default_aperture")]
    aperture_width_m: f64,
    #[serde(default = "default_taper")]
    taper: Taper,
    /// Explicit arc angles, overriding the symmetric count/spacing layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arc_angles_deg: Option<Vec<f64>>,
}

fn default_aperture() -> f64 {
    KA_BAND_BROAD_WALL
}

fn default_taper() -> Taper {
    Taper::Cosine
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    padding_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    padding_lambda: Option<f64>,
}

fn one_of(field: &str, meters: Option<f64>, lambdas: Option<f64>, lambda0: f64) -> Result<f64> {
    match (meters, lambdas) {
        (Some(m), None) => Ok(m),
        (None, Some(l)) => Ok(l * lambda0),
        (Some(_), Some(_)) => Err(Error::Parse(format!(
            "{field}: give either the _m or the _lambda key, not both"
        ))),
        (None, None) => Err(Error::Parse(format!("{field}: missing (_m or _lambda key)"))),
    }
}

impl SceneFile {
    fn into_scene(self) -> Result<AntennaScene> {
        if !(self.frequency_hz > 0.0) {
            return Err(Error::Parse("frequency_hz must be positive".into()));
        }
        let lambda0 = wavelength(self.frequency_hz);
        let radius = one_of("lens.radius", self.lens.radius_m, self.lens.radius_lambda, lambda0)?;
        let h = one_of("plate.h", self.plate.h_m, self.plate.h_lambda, lambda0)?;
        let p = &self.ports;
        let edge = match (p.edge_distance_m, p.edge_distance_over_r0) {
            (Some(m), None) => m,
            (None, Some(r)) => r * radius,
            (Some(_), Some(_)) => {
                return Err(Error::Parse(
                    "ports: give edge_distance_m or edge_distance_over_R0, not both".into(),
                ))
            }
            (None, None) => return Err(Error::Parse("ports: missing edge distance".into())),
        };
        let generated = symmetric_arc_angles(p.count, p.spacing_deg);
        let (angles, symmetric) = match &p.arc_angles_deg {
            Some(a) if a.len() != p.count => {
                return Err(Error::Parse(format!(
                    "ports.arc_angles_deg has {} entries but count = {}",
                    a.len(),
                    p.count
                )))
            }
            Some(a) => (a.clone(), is_mirrored(a)),
            None => (generated, true),
        };
        let ports = angles
            .into_iter()
            .enumerate()
            .map(|(i, a)| FeedPort {
                index: i + 1,
                arc_angle_deg: a,
                aperture_width: p.aperture_width_m,
                taper: p.taper,
                edge_distance: edge,
            })
            .collect();
        let padding = match self.domain {
            Some(d) => match (d.padding_m, d.padding_lambda) {
                (None, None) => 3.0 * lambda0,
                (m, l) => one_of("domain.padding", m, l, lambda0)?,
            },
            None => 3.0 * lambda0,
        };
        let center = self.lens.center_m.unwrap_or([0.0, 0.0]);
        Ok(AntennaScene {
            f0: self.frequency_hz,
            lens: LensSpec {
                center: Point2::new(center[0], center[1]),
                radius,
                eps_r: self.lens.eps_r,
                tan_delta: self.lens.tan_delta,
            },
            plate_spacing: h,
            mode_model: self.plate.mode,
            ports,
            domain_padding: padding,
            symmetric,
        })
    }

    fn from_scene(s: &AntennaScene) -> Result<SceneFile> {
        let first = s.ports.first();
        let uniform = s.ports.iter().all(|p| {
            first.is_some_and(|f| {
                p.edge_distance == f.edge_distance
                    && p.aperture_width == f.aperture_width
                    && p.taper == f.taper
            })
        });
        if !uniform {
            return Err(Error::Parse(
                "scene files describe ports sharing one aperture, taper and edge distance".into(),
            ));
        }
        let angles: Vec<f64> = s.ports.iter().map(|p| p.arc_angle_deg).collect();
        let spacing = if angles.len() >= 2 {
            let raw = (angles[angles.len() - 1] - angles[0]) / (angles.len() - 1) as f64;
            (raw * 1e9).round() / 1e9
        } else {
            0.0
        };
        let explicit = (angles != symmetric_arc_angles(angles.len(), spacing)).then_some(angles.clone());
        let center = (s.lens.center != Point2::ORIGIN).then_some([s.lens.center.x, s.lens.center.y]);
        Ok(SceneFile {
            frequency_hz: s.f0,
            lens: LensSection {
                radius_m: Some(s.lens.radius),
                radius_lambda: None,
                eps_r: s.lens.eps_r,
                tan_delta: s.lens.tan_delta,
                center_m: center,
            },
            plate: PlateSection {
                h_m: Some(s.plate_spacing),
                h_lambda: None,
                mode: s.mode_model,
            },
            ports: PortsSection {
                count: s.ports.len(),
                spacing_deg: spacing,
                edge_distance_over_r0: None,
                edge_distance_m: Some(first.map_or(0.0, |p| p.edge_distance)),
                aperture_width_m: first.map_or(KA_BAND_BROAD_WALL, |p| p.aperture_width),
                taper: first.map_or(Taper::Cosine, |p| p.taper),
                arc_angles_deg: explicit,
            },
            domain: Some(DomainSection {
                padding_m: Some(s.domain_padding),
                padding_lambda: None,
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scene_dimensions() {
        let s = default_paper_scene();
        assert!((s.lens.radius * 1e3 - 49.25).abs() < 0.005);
        assert!((s.lambda0() * 1e3 - 10.707).abs() < 5e-4);
        assert_eq!(s.ports.len(), 9);
        assert!((s.ports[0].arc_angle_deg + 28.8).abs() < 1e-12);
        assert!((s.ports[8].arc_angle_deg - 28.8).abs() < 1e-12);
        for w in s.ports.windows(2) {
            assert!((w[1].arc_angle_deg - w[0].arc_angle_deg - 7.2).abs() < 1e-12);
        }
        assert!((s.ports[4].edge_distance / s.lens.radius - 0.32).abs() < 1e-12);
        assert_eq!(s.ports[4].taper, Taper::Cosine);
    }

    #[test]
    fn default_scene_is_valid_and_deterministic() {
        assert!(validate_scene(&default_paper_scene()).is_empty());
        assert_eq!(default_paper_scene(), default_paper_scene());
        assert_eq!(default_paper_scene().hash(), default_paper_scene().hash());
    }

    #[test]
    fn thin_plates_flag_spacing_under_te1() {
        let mut s = default_paper_scene();
        s.mode_model = ModeModel::Te1;
        s.plate_spacing = 0.4 * s.lambda0();
        let v = validate_scene(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "plate_spacing_h");
    }

    #[test]
    fn sub_unity_permittivity_is_flagged() {
        let mut s = default_paper_scene();
        s.lens.eps_r = 0.5;
        let v = validate_scene(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "lens.eps_r");
    }

    #[test]
    fn wide_apertures_overlap_neighbours() {
        let mut s = default_paper_scene();
        for p in &mut s.ports {
            p.aperture_width = 9e-3;
        }
        let v = validate_scene(&s);
        assert!(!v.is_empty());
        assert!(v.iter().all(|x| x.field.ends_with("aperture_width")));
    }

    #[test]
    fn unsorted_ports_and_broken_symmetry() {
        let mut s = default_paper_scene();
        s.ports.swap(0, 1);
        let v = validate_scene(&s);
        assert!(v.iter().any(|x| x.field.ends_with("arc_angle")));
        assert!(v.iter().any(|x| x.field == "ports"));
    }

    #[test]
    fn mirrored_port_positions() {
        let s = default_paper_scene();
        let a = s.ports[0].position(&s.lens);
        let b = s.ports[8].position(&s.lens);
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, -b.y);
        let c = s.ports[4].position(&s.lens);
        assert!((c.x + 1.32 * s.lens.radius).abs() < 1e-15);
        assert_eq!(c.y, 0.0);
    }

    #[test]
    fn toml_round_trip() {
        let s = default_paper_scene();
        let text = s.to_toml().unwrap();
        assert_eq!(AntennaScene::from_toml(&text).unwrap(), s);

        let mut odd = s.clone();
        odd.ports.truncate(3);
        odd.ports[2].arc_angle_deg = 1.5;
        odd.symmetric = false;
        let back = AntennaScene::from_toml(&odd.to_toml().unwrap()).unwrap();
        assert_eq!(back, odd);
    }

    #[test]
    fn lambda_relative_keys() {
        let text = r#"
frequency_hz = 28e9
[lens]
radius_lambda = 4.6
eps_r = 2.1
tan_delta = 0.0002
[plate]
h_lambda = 0.54
mode = "tem"
[ports]
count = 9
spacing_deg = 7.2
edge_distance_over_R0 = 0.32
aperture_width_m = 0.007112
taper = "cosine"
[domain]
padding_lambda = 3.0
"#;
        let s = AntennaScene::from_toml(text).unwrap();
        assert_eq!(s, default_paper_scene());
    }

    #[test]
    fn conflicting_or_missing_keys() {
        let both = "frequency_hz = 28e9\n[lens]\nradius_m = 0.05\nradius_lambda = 4.6\neps_r = 2.1\n[plate]\nh_lambda = 0.54\n[ports]\ncount = 1\nspacing_deg = 0\nedge_distance_m = 0.01\n";
        assert!(matches!(AntennaScene::from_toml(both), Err(Error::Parse(_))));
        let unknown = "frequency_hz = 28e9\nbogus = 1\n";
        assert!(matches!(AntennaScene::from_toml(unknown), Err(Error::Parse(_))));
    }
}
