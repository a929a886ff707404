use crate::error::{Error, Result};

use super::Point3;

/// Named per-point channels stored row-major, `dim` values per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Attributes {
    pub names: Vec<String>,
    pub data: Vec<f64>,
}

impl Attributes {
    pub fn dim(&self) -> usize {
        self.names.len()
    }
}

/// Point positions plus optional per-point attributes (colors, normals).
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    positions: Vec<Point3>,
    attributes: Option<Attributes>,
}

impl PointCloud {
    pub fn new(positions: Vec<Point3>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("point cloud must contain at least one point"));
        }
        if let Some(i) = positions.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::invalid(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self {
            positions,
            attributes: None,
        })
    }

    pub fn with_attributes(mut self, names: Vec<String>, data: Vec<f64>) -> Result<Self> {
        let dim = names.len();
        if dim == 0 {
            self.attributes = None;
            return Ok(self);
        }
        if data.len() != dim * self.positions.len() {
            return Err(Error::shape(format!(
                "attribute payload has {} values, expected {} points x {} channels",
                data.len(),
                self.positions.len(),
                dim
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("attributes must be finite"));
        }
        self.attributes = Some(Attributes { names, data });
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    /// Always false for a constructed cloud; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &Point3 {
        &self.positions[i]
    }

    pub fn attributes(&self) -> Option<&Attributes> {
        self.attributes.as_ref()
    }

    pub fn attribute_dim(&self) -> usize {
        self.attributes.as_ref().map_or(0, Attributes::dim)
    }

    pub fn attribute_row(&self, i: usize) -> &[f64] {
        match &self.attributes {
            Some(a) => {
                let d = a.dim();
                &a.data[i * d..(i + 1) * d]
            }
            None => &[],
        }
    }

    /// Copy of the cloud with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let positions = self
            .positions
            .iter()
            .map(|p| [p[0] * factor, p[1] * factor, p[2] * factor])
            .collect();
        let mut out = PointCloud::new(positions)?;
        out.attributes = self.attributes.clone();
        Ok(out)
    }

    pub fn translated(&self, offset: Point3) -> Result<Self> {
        let positions = self
            .positions
            .iter()
            .map(|p| [p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]])
            .collect();
        let mut out = PointCloud::new(positions)?;
        out.attributes = self.attributes.clone();
        Ok(out)
    }
}
