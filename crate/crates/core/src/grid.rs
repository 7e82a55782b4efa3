//! Regular grids with bilinear interpolation, read and written as CSV.
//!
//! File layout: a header row `nx,ny,x0,x1,y0,y1` followed by the sample
//! values in row-major order (y varies slowest), one row of the grid per
//! CSV record. The interpolant reproduces the stored samples at the nodes
//! exactly.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::Window;

#[derive(Debug, Clone)]
pub struct GridData {
    pub nx: usize,
    pub ny: usize,
    pub window: Window,
    /// Row-major samples: `values[j * nx + i]` is the sample at
    /// `(x0 + i*dx, y0 + j*dy)`.
    pub values: Vec<f64>,
}

impl GridData {
    pub fn new(nx: usize, ny: usize, window: Window, values: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::ConfigInvalid(
                "grid needs at least 2 samples per axis".into(),
            ));
        }
        if values.len() != nx * ny {
            return Err(Error::ConfigInvalid(format!(
                "grid has {} values, expected {}",
                values.len(),
                nx * ny
            )));
        }
        Ok(GridData {
            nx,
            ny,
            window,
            values,
        })
    }

    pub fn from_fn(nx: usize, ny: usize, window: Window, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let y = window.y0 + (window.y1 - window.y0) * j as f64 / (ny - 1) as f64;
            for i in 0..nx {
                let x = window.x0 + (window.x1 - window.x0) * i as f64 / (nx - 1) as f64;
                values.push(f(x, y));
            }
        }
        GridData {
            nx,
            ny,
            window,
            values,
        }
    }

    pub fn sample(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    /// Bilinear interpolation; clamps to the window edge.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let w = &self.window;
        let fx = ((x - w.x0) / (w.x1 - w.x0) * (self.nx - 1) as f64)
            .clamp(0.0, (self.nx - 1) as f64);
        let fy = ((y - w.y0) / (w.y1 - w.y0) * (self.ny - 1) as f64)
            .clamp(0.0, (self.ny - 1) as f64);
        let i = (fx as usize).min(self.nx - 2);
        let j = (fy as usize).min(self.ny - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v00 = self.sample(i, j);
        let v10 = self.sample(i + 1, j);
        let v01 = self.sample(i, j + 1);
        let v11 = self.sample(i + 1, j + 1);
        v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty
            + v11 * tx * ty
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        let mut lines = std::io::BufReader::new(f).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::ConfigInvalid("empty grid file".into()))??;
        let h: Vec<&str> = header.split(',').map(|s| s.trim()).collect();
        if h.len() != 6 {
            return Err(Error::ConfigInvalid(
                "grid header must be nx,ny,x0,x1,y0,y1".into(),
            ));
        }
        let nx: usize = h[0]
            .parse()
            .map_err(|_| Error::ConfigInvalid("bad nx".into()))?;
        let ny: usize = h[1]
            .parse()
            .map_err(|_| Error::ConfigInvalid("bad ny".into()))?;
        let nums: Vec<f64> = h[2..]
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::ConfigInvalid("bad window bounds".into()))?;
        let window = Window::new(nums[0], nums[1], nums[2], nums[3])?;
        let mut values = Vec::with_capacity(nx * ny);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            for tok in line.split(',') {
                let v: f64 = tok
                    .trim()
                    .parse()
                    .map_err(|_| Error::ConfigInvalid(format!("bad grid value `{tok}`")))?;
                values.push(v);
            }
        }
        GridData::new(nx, ny, window, values)
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(
            out,
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e}",
            self.nx, self.ny, self.window.x0, self.window.x1, self.window.y0, self.window.y1
        )?;
        for j in 0..self.ny {
            let row: Vec<String> = (0..self.nx)
                .map(|i| format!("{:.17e}", self.sample(i, j)))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_reproduces_nodes_exactly() {
        let w = Window::new(-1.0, 1.0, 0.0, 2.0).unwrap();
        let g = GridData::from_fn(9, 7, w, |x, y| x * y + 0.5 * x - y);
        for j in 0..7 {
            let y = w.y0 + 2.0 * j as f64 / 6.0;
            for i in 0..9 {
                let x = w.x0 + 2.0 * i as f64 / 8.0;
                assert_eq!(g.eval(x, y), g.sample(i, j), "node ({i},{j})");
            }
        }
    }

    #[test]
    fn bilinear_is_exact_on_bilinear_functions() {
        let w = Window::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let g = GridData::from_fn(5, 5, w, |x, y| 2.0 + 3.0 * x - y + 4.0 * x * y);
        let v = g.eval(0.3, 0.7);
        assert!((v - (2.0 + 0.9 - 0.7 + 4.0 * 0.21)).abs() < 1e-14);
    }

    #[test]
    fn csv_round_trip() {
        let w = Window::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let g = GridData::from_fn(4, 3, w, |x, y| x - y);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let tmp = std::env::temp_dir().join("hsurf_grid_test.csv");
        std::fs::write(&tmp, &buf).unwrap();
        let g2 = GridData::read_csv(&tmp).unwrap();
        assert_eq!(g2.nx, 4);
        assert_eq!(g2.ny, 3);
        assert_eq!(g2.values, g.values);
        std::fs::remove_file(&tmp).ok();
    }
}
