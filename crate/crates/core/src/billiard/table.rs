use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use super::geometry::Vec2;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    LorentzTorus,
    SemidispersingRectangle,
    Stadium,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::LorentzTorus => "lorentz-torus",
            Variant::SemidispersingRectangle => "semidispersing-rectangle",
            Variant::Stadium => "stadium",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Vec2,
    pub radius: f64,
}

/// One smooth piece of the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    /// Convex scatterer; the billiard domain is outside the circle.
    Scatterer { center: Vec2, radius: f64 },
    /// Focusing arc; the domain is inside. Angles run over `[theta_start, theta_start + span]`.
    Arc {
        center: Vec2,
        radius: f64,
        theta_start: f64,
        span: f64,
    },
    /// Flat wall from `start` along unit `dir`; `normal` points into the domain.
    Segment {
        start: Vec2,
        dir: Vec2,
        length: f64,
        normal: Vec2,
    },
}

impl Component {
    pub fn length(&self) -> f64 {
        match *self {
            Component::Scatterer { radius, .. } => TAU * radius,
            Component::Arc { radius, span, .. } => radius * span,
            Component::Segment { length, .. } => length,
        }
    }

    pub fn is_curved(&self) -> bool {
        !matches!(self, Component::Segment { .. })
    }

    /// Position for the internal parameter (angle on circles, arclength on segments).
    pub fn point(&self, param: f64) -> Vec2 {
        match *self {
            Component::Scatterer { center, radius } | Component::Arc { center, radius, .. } => {
                center + Vec2::from_angle(param) * radius
            }
            Component::Segment { start, dir, .. } => start + dir * param,
        }
    }

    /// Unit normal pointing into the billiard domain.
    pub fn inward_normal(&self, param: f64) -> Vec2 {
        match *self {
            Component::Scatterer { .. } => Vec2::from_angle(param),
            Component::Arc { .. } => -Vec2::from_angle(param),
            Component::Segment { normal, .. } => normal,
        }
    }

    pub fn param_to_arclength(&self, param: f64) -> f64 {
        match *self {
            Component::Scatterer { radius, .. } => radius * param,
            Component::Arc {
                radius,
                theta_start,
                ..
            } => radius * (param - theta_start),
            Component::Segment { .. } => param,
        }
    }

    pub fn arclength_to_param(&self, r: f64) -> f64 {
        match *self {
            Component::Scatterer { radius, .. } => r / radius,
            Component::Arc {
                radius,
                theta_start,
                ..
            } => theta_start + r / radius,
            Component::Segment { .. } => r,
        }
    }

    /// Internal parameter of a boundary point `q` lying on this component.
    pub fn param_of(&self, q: Vec2) -> f64 {
        match *self {
            Component::Scatterer { center, .. } => (q - center).angle().rem_euclid(TAU),
            Component::Arc {
                center,
                theta_start,
                span,
                ..
            } => {
                let a = (q - center).angle();
                let mid = theta_start + 0.5 * span;
                let rel = (a - mid + PI).rem_euclid(TAU) - PI;
                (mid + rel).clamp(theta_start, theta_start + span)
            }
            Component::Segment {
                start, dir, length, ..
            } => (q - start).dot(dir).clamp(0.0, length),
        }
    }
}

/// Immutable billiard table geometry.
#[derive(Debug, Clone)]
pub struct BilliardTable {
    variant: Variant,
    components: Vec<Component>,
    /// Scatterers of the torus or rectangle, indexed like the first components.
    disks: Vec<Disk>,
    /// Rectangle width/height or stadium (a, rho).
    dims: (f64, f64),
}

const TOUCH_TOL: f64 = 1e-12;

impl BilliardTable {
    pub fn lorentz_torus(disks: Vec<Disk>) -> Result<Self> {
        if disks.is_empty() {
            return Err(Error::InvalidTable(
                "torus needs at least one scatterer".into(),
            ));
        }
        for (i, d) in disks.iter().enumerate() {
            check_disk(i, d)?;
            if !(0.0..1.0).contains(&d.center.x) || !(0.0..1.0).contains(&d.center.y) {
                return Err(Error::InvalidTable(format!(
                    "scatterer {i}: center must lie in [0,1)^2"
                )));
            }
            if 2.0 * d.radius > 1.0 + TOUCH_TOL {
                return Err(Error::InvalidTable(format!(
                    "scatterer {i}: radius > 1/2 overlaps its own image"
                )));
            }
        }
        for i in 0..disks.len() {
            for j in i..disks.len() {
                for ox in -1i32..=1 {
                    for oy in -1i32..=1 {
                        if i == j && ox == 0 && oy == 0 {
                            continue;
                        }
                        let c = disks[j].center + Vec2::new(ox as f64, oy as f64);
                        if (c - disks[i].center).norm()
                            < disks[i].radius + disks[j].radius - TOUCH_TOL
                        {
                            return Err(Error::InvalidTable(format!(
                                "scatterers {i} and {j} overlap"
                            )));
                        }
                    }
                }
            }
        }
        let components = disks
            .iter()
            .map(|d| Component::Scatterer {
                center: d.center,
                radius: d.radius,
            })
            .collect();
        Ok(BilliardTable {
            variant: Variant::LorentzTorus,
            components,
            disks,
            dims: (1.0, 1.0),
        })
    }

    pub fn semidispersing_rectangle(width: f64, height: f64, disks: Vec<Disk>) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::InvalidTable(
                "rectangle sides must be positive".into(),
            ));
        }
        for (i, d) in disks.iter().enumerate() {
            check_disk(i, d)?;
            let c = d.center;
            if c.x - d.radius < 0.0
                || c.x + d.radius > width
                || c.y - d.radius < 0.0
                || c.y + d.radius > height
            {
                return Err(Error::InvalidTable(format!(
                    "scatterer {i} leaves the rectangle"
                )));
            }
        }
        for i in 0..disks.len() {
            for j in i + 1..disks.len() {
                if (disks[i].center - disks[j].center).norm()
                    < disks[i].radius + disks[j].radius - TOUCH_TOL
                {
                    return Err(Error::InvalidTable(format!(
                        "scatterers {i} and {j} overlap"
                    )));
                }
            }
        }
        let mut components: Vec<Component> = disks
            .iter()
            .map(|d| Component::Scatterer {
                center: d.center,
                radius: d.radius,
            })
            .collect();
        let (w, h) = (width, height);
        components.extend([
            seg(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), w),
            seg(Vec2::new(w, 0.0), Vec2::new(0.0, 1.0), h),
            seg(Vec2::new(w, h), Vec2::new(-1.0, 0.0), w),
            seg(Vec2::new(0.0, h), Vec2::new(0.0, -1.0), h),
        ]);
        Ok(BilliardTable {
            variant: Variant::SemidispersingRectangle,
            components,
            disks,
            dims: (w, h),
        })
    }

    /// Bunimovich stadium: two semicircles of radius `rho` centred at `(±a, 0)` joined by segments.
    /// Components: 0 right arc, 1 top segment, 2 left arc, 3 bottom segment.
    pub fn stadium(a: f64, rho: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidTable(
                "stadium half-length a must be >= 0".into(),
            ));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidTable("stadium radius must be > 0".into()));
        }
        let components = vec![
            Component::Arc {
                center: Vec2::new(a, 0.0),
                radius: rho,
                theta_start: -FRAC_PI_2,
                span: PI,
            },
            seg(Vec2::new(a, rho), Vec2::new(-1.0, 0.0), 2.0 * a),
            Component::Arc {
                center: Vec2::new(-a, 0.0),
                radius: rho,
                theta_start: FRAC_PI_2,
                span: PI,
            },
            seg(Vec2::new(-a, -rho), Vec2::new(1.0, 0.0), 2.0 * a),
        ];
        Ok(BilliardTable {
            variant: Variant::Stadium,
            components,
            disks: Vec::new(),
            dims: (a, rho),
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, id: usize) -> &Component {
        &self.components[id]
    }

    pub fn disks(&self) -> &[Disk] {
        &self.disks
    }

    pub fn dims(&self) -> (f64, f64) {
        self.dims
    }

    pub fn perimeter(&self) -> f64 {
        self.components.iter().map(Component::length).sum()
    }

    /// Area of the billiard domain (one fundamental cell for the torus).
    pub fn area(&self) -> f64 {
        let disk_area: f64 = self.disks.iter().map(|d| PI * d.radius * d.radius).sum();
        match self.variant {
            Variant::LorentzTorus => 1.0 - disk_area,
            Variant::SemidispersingRectangle => self.dims.0 * self.dims.1 - disk_area,
            Variant::Stadium => {
                let (a, rho) = self.dims;
                4.0 * a * rho + PI * rho * rho
            }
        }
    }

    /// Mean free path |Q| pi / |dQ| of the Liouville measure.
    pub fn mean_free_path(&self) -> f64 {
        PI * self.area() / self.perimeter()
    }

    /// Whether `q` lies in the closed billiard domain (torus positions are wrapped).
    pub fn contains(&self, q: Vec2) -> bool {
        match self.variant {
            Variant::LorentzTorus => {
                let w = wrap(q);
                !self.disks.iter().any(|d| {
                    (-1..=1).any(|ox| {
                        (-1..=1).any(|oy| {
                            let c = d.center + Vec2::new(ox as f64, oy as f64);
                            (w - c).norm() < d.radius
                        })
                    })
                })
            }
            Variant::SemidispersingRectangle => {
                let (w, h) = self.dims;
                (0.0..=w).contains(&q.x)
                    && (0.0..=h).contains(&q.y)
                    && !self.disks.iter().any(|d| (q - d.center).norm() < d.radius)
            }
            Variant::Stadium => {
                let (a, rho) = self.dims;
                if q.x.abs() <= a {
                    q.y.abs() <= rho
                } else {
                    (q - Vec2::new(a * q.x.signum(), 0.0)).norm() <= rho
                }
            }
        }
    }
}

fn seg(start: Vec2, dir: Vec2, length: f64) -> Component {
    Component::Segment {
        start,
        dir,
        length,
        normal: Vec2::new(-dir.y, dir.x),
    }
}

fn check_disk(i: usize, d: &Disk) -> Result<()> {
    if !(d.radius > 0.0 && d.radius.is_finite()) {
        return Err(Error::InvalidTable(format!(
            "scatterer {i}: radius must be > 0"
        )));
    }
    if !(d.center.x.is_finite() && d.center.y.is_finite()) {
        return Err(Error::InvalidTable(format!(
            "scatterer {i}: center must be finite"
        )));
    }
    Ok(())
}

/// Reduce a position to the unit cell [0,1)^2.
pub fn wrap(q: Vec2) -> Vec2 {
    let mut x = q.x.rem_euclid(1.0);
    let mut y = q.y.rem_euclid(1.0);
    if x >= 1.0 {
        x = 0.0;
    }
    if y >= 1.0 {
        y = 0.0;
    }
    Vec2::new(x, y)
}

/// Serializable table description (the `[table]` section of experiment configs).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub variant: Variant,
    #[serde(default)]
    pub scatterers: Vec<ScattererConfig>,
    /// Default radius for scatterers that omit one.
    pub radius: Option<f64>,
    pub width: Option<f64>,
    pub height: Option<f64>,
    pub stadium: Option<StadiumConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScattererConfig {
    pub center: [f64; 2],
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StadiumConfig {
    pub a: f64,
    pub rho: f64,
}

impl TableConfig {
    /// Build and validate; errors name the offending key under `prefix`.
    pub fn build(&self, prefix: &str) -> Result<BilliardTable> {
        let key = |k: &str| format!("{prefix}.{k}");
        let disks = || -> Result<Vec<Disk>> {
            self.scatterers
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let radius = s.radius.or(self.radius).ok_or_else(|| {
                        Error::config(
                            key(&format!("scatterers[{i}].radius")),
                            "missing radius (and no table.radius default)",
                        )
                    })?;
                    Ok(Disk {
                        center: Vec2::new(s.center[0], s.center[1]),
                        radius,
                    })
                })
                .collect()
        };
        let table = match self.variant {
            Variant::LorentzTorus => {
                if self.scatterers.is_empty() {
                    return Err(Error::config(
                        key("scatterers"),
                        "lorentz-torus needs at least one scatterer",
                    ));
                }
                BilliardTable::lorentz_torus(disks()?)
            }
            Variant::SemidispersingRectangle => {
                let w = self.width.ok_or_else(|| {
                    Error::config(key("width"), "required for semidispersing-rectangle")
                })?;
                let h = self.height.ok_or_else(|| {
                    Error::config(key("height"), "required for semidispersing-rectangle")
                })?;
                BilliardTable::semidispersing_rectangle(w, h, disks()?)
            }
            Variant::Stadium => {
                let s = self
                    .stadium
                    .as_ref()
                    .ok_or_else(|| Error::config(key("stadium"), "required for stadium"))?;
                BilliardTable::stadium(s.a, s.rho)
            }
        };
        table.map_err(|e| match e {
            Error::InvalidTable(m) => Error::config(key("scatterers"), m),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(x: f64, y: f64, r: f64) -> Disk {
        Disk {
            center: Vec2::new(x, y),
            radius: r,
        }
    }

    #[test]
    fn torus_validation() {
        assert!(BilliardTable::lorentz_torus(vec![disk(0.5, 0.5, 0.25)]).is_ok());
        assert!(BilliardTable::lorentz_torus(vec![disk(0.5, 0.5, 0.5)]).is_ok());
        assert!(BilliardTable::lorentz_torus(vec![disk(0.5, 0.5, 0.6)]).is_err());
        assert!(BilliardTable::lorentz_torus(vec![disk(0.5, 0.5, -0.1)]).is_err());
        assert!(
            BilliardTable::lorentz_torus(vec![disk(0.1, 0.5, 0.2), disk(0.9, 0.5, 0.2)]).is_err()
        );
        assert!(
            BilliardTable::lorentz_torus(vec![disk(0.0, 0.0, 0.36), disk(0.5, 0.5, 0.3)]).is_ok()
        );
    }

    #[test]
    fn stadium_components_close_up() {
        let t = BilliardTable::stadium(1.0, 0.5).unwrap();
        let c = t.components();
        for i in 0..4 {
            let end = c[i].point(c[i].arclength_to_param(c[i].length()));
            let next = c[(i + 1) % 4].point(c[(i + 1) % 4].arclength_to_param(0.0));
            assert!((end - next).norm() < 1e-12, "gap after component {i}");
        }
        assert!((t.perimeter() - (4.0 + std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn config_errors_name_keys() {
        let cfg = TableConfig {
            variant: Variant::LorentzTorus,
            scatterers: vec![ScattererConfig {
                center: [0.5, 0.5],
                radius: None,
            }],
            radius: None,
            width: None,
            height: None,
            stadium: None,
        };
        match cfg.build("table") {
            Err(Error::ConfigInvalid { key, .. }) => assert_eq!(key, "table.scatterers[0].radius"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
