use super::grid::GridConfig;
use crate::camera::{DepthFrame, Point3};
use crate::joints::{HandPose, Joint};
use crate::{Error, Result};

/// A training frame cropped to an `N^3` box around its hand and reduced to
/// per-column occupied counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarTemplate {
    pub side: usize,
    /// Row-major `N x N` column counts.
    pub proj: Vec<u16>,
    /// Joints relative to the template's corner, millimeters.
    pub pose: HandPose,
    pub source_id: String,
    /// Lattice index of the template corner in the grid it was built on.
    pub anchor: [i64; 3],
}

impl ExemplarTemplate {
    /// Wraps precomputed counts. Fails if the map is not `side x side` or
    /// any count exceeds `side`.
    pub fn from_counts(side: usize, proj: Vec<u16>, pose: HandPose, source_id: impl Into<String>) -> Result<Self> {
        if proj.len() != side * side {
            return Err(Error::InvalidGrid(format!("expected {} counts, got {}", side * side, proj.len())));
        }
        if let Some(c) = proj.iter().find(|c| **c as usize > side) {
            return Err(Error::InvalidGrid(format!("column count {c} exceeds template side {side}")));
        }
        Ok(Self { side, proj, pose, source_id: source_id.into(), anchor: [0; 3] })
    }

    /// Total occupied voxels.
    pub fn mass(&self) -> u64 {
        self.proj.iter().map(|c| *c as u64).sum()
    }

    pub fn occupied_columns(&self) -> usize {
        self.proj.iter().filter(|c| **c > 0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExemplarOptions {
    /// Fewest occupied columns accepted inside the box.
    pub min_columns: usize,
    /// How far joints may stick out of the box, as a fraction of its side.
    pub max_protrusion: f64,
}

impl Default for ExemplarOptions {
    fn default() -> Self {
        Self { min_columns: 10, max_protrusion: 0.25 }
    }
}

pub fn build_exemplar(frame: &DepthFrame, pose: &HandPose, config: &GridConfig) -> Result<ExemplarTemplate> {
    build_exemplar_with(frame, pose, config, &ExemplarOptions::default())
}

/// Builds a template centered on the pose centroid. The box corner is snapped
/// to the scene lattice of `config`, so a scene voxelized with the same
/// config contains the template as one of its windows.
///
/// Occlusion is taken from the whole frame: a surface in front of the box
/// fills the column completely, surfaces behind it are ignored.
pub fn build_exemplar_with(
    frame: &DepthFrame,
    pose: &HandPose,
    config: &GridConfig,
    options: &ExemplarOptions,
) -> Result<ExemplarTemplate> {
    config.validate()?;
    if pose.visible_count() == 0 {
        return Err(Error::NoVisibleJoints);
    }
    let n = config.template_side;
    let half = config.template_extent() / 2.0;
    let corner_guess = pose.centroid() - nalgebra::Vector3::repeat(half);
    let anchor = config.lattice_index(&corner_guess);
    let corner = config.corner(anchor);

    let extent = config.template_extent();
    let margin = options.max_protrusion * extent;
    for j in Joint::ALL {
        let rel = pose.position(j) - corner;
        if rel.iter().any(|c| !c.is_finite() || *c < -margin || *c > extent + margin) {
            return Err(Error::JointOutsideTemplate(j));
        }
    }

    let mut first = vec![n; n * n];
    let k = frame.intrinsics();
    for (u, v, d) in frame.measurements() {
        let p = k.reproject_pixel(u as f64, v as f64, d as f64);
        let idx = config.lattice_index(&p);
        let (x, y, z) = (idx[0] - anchor[0], idx[1] - anchor[1], idx[2] - anchor[2]);
        if !(0..n as i64).contains(&x) || !(0..n as i64).contains(&y) || z >= n as i64 {
            continue;
        }
        let cell = &mut first[y as usize * n + x as usize];
        *cell = (*cell).min(z.max(0) as usize);
    }
    let proj: Vec<u16> = first.iter().map(|f| (n - f) as u16).collect();
    let found = proj.iter().filter(|c| **c > 0).count();
    if found < options.min_columns {
        return Err(Error::BadCrop { found, required: options.min_columns });
    }
    let rel_pose = pose.translated(&(Point3::origin() - corner));
    Ok(ExemplarTemplate { side: n, proj, pose: rel_pose, source_id: String::new(), anchor })
}

/// An immutable set of templates sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarDb {
    pub config: GridConfig,
    templates: Vec<ExemplarTemplate>,
}

impl ExemplarDb {
    pub fn new(config: GridConfig) -> Self {
        Self { config, templates: Vec::new() }
    }

    pub fn from_templates(config: GridConfig, templates: Vec<ExemplarTemplate>) -> Result<Self> {
        let mut db = Self::new(config);
        for t in templates {
            db.push(t)?;
        }
        Ok(db)
    }

    /// Appends a template and returns its id.
    pub fn push(&mut self, template: ExemplarTemplate) -> Result<usize> {
        if template.side != self.config.template_side || template.proj.len() != template.side * template.side {
            return Err(Error::GridMismatch(format!(
                "template side {} does not match grid template side {}",
                template.side, self.config.template_side
            )));
        }
        self.templates.push(template);
        Ok(self.templates.len() - 1)
    }

    pub fn templates(&self) -> &[ExemplarTemplate] {
        &self.templates
    }

    pub fn get(&self, id: usize) -> Option<&ExemplarTemplate> {
        self.templates.get(id)
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}
