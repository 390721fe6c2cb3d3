use crate::error::{Error, Result};
use crate::numerics::{l2_norm, l2_normalize, Matrix, SeededRng};

use super::{Domain, MemoryLayout};

/// Unit-norm tolerance for stored items.
pub(crate) const UNIT_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBank {
    pub(crate) keys: Matrix,
    pub(crate) values_x: Matrix,
    pub(crate) values_y: Matrix,
    pub(crate) layout: MemoryLayout,
}

impl MemoryBank {
    /// Draws keys and both value planes i.i.d. standard normal (keys, then `v^x`, then
    /// `v^y`, row by row) and normalizes every row.
    pub fn init(layout: MemoryLayout, channels: usize, rng: &mut SeededRng) -> Result<Self> {
        if channels == 0 {
            return Err(Error::Layout("memory needs at least one channel".into()));
        }
        let n = layout.len();
        let mut draw = || -> Matrix {
            let mut m = Matrix::zeros(n, channels);
            for i in 0..n {
                let mut row = rng.normal_vec(channels);
                // A zero draw has probability 0, but a unit row is required.
                while l2_norm(&row) == 0.0 {
                    row = rng.normal_vec(channels);
                }
                m.row_mut(i).copy_from_slice(&l2_normalize(&row));
            }
            m
        };
        let keys = draw();
        let values_x = draw();
        let values_y = draw();
        Ok(MemoryBank {
            keys,
            values_x,
            values_y,
            layout,
        })
    }

    /// Assembles a bank from explicit planes, checking shapes and unit-norm rows.
    pub fn from_parts(layout: MemoryLayout, keys: Matrix, values_x: Matrix, values_y: Matrix) -> Result<Self> {
        let n = layout.len();
        let c = keys.cols();
        if keys.rows() != n {
            return Err(Error::Validation(format!(
                "layout covers {n} items but {} keys were given",
                keys.rows()
            )));
        }
        if c == 0 {
            return Err(Error::Validation("items have zero channels".into()));
        }
        for (name, m) in [("values_x", &values_x), ("values_y", &values_y)] {
            if m.shape() != keys.shape() {
                return Err(Error::Validation(format!(
                    "{name} is {}x{}, keys are {n}x{c}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let bank = MemoryBank {
            keys,
            values_x,
            values_y,
            layout,
        };
        bank.check_unit_rows()?;
        Ok(bank)
    }

    fn check_unit_rows(&self) -> Result<()> {
        for (name, m) in [
            ("keys", &self.keys),
            ("values_x", &self.values_x),
            ("values_y", &self.values_y),
        ] {
            for (i, row) in m.iter_rows().enumerate() {
                let norm = l2_norm(row);
                if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
                    return Err(Error::Validation(format!(
                        "{name}[{i}] has norm {norm}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> &MemoryLayout {
        &self.layout
    }

    pub fn keys(&self) -> &Matrix {
        &self.keys
    }

    pub fn values(&self, domain: Domain) -> &Matrix {
        match domain {
            Domain::X => &self.values_x,
            Domain::Y => &self.values_y,
        }
    }

    pub fn len(&self) -> usize {
        self.keys.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.rows() == 0
    }

    pub fn channels(&self) -> usize {
        self.keys.cols()
    }
}
