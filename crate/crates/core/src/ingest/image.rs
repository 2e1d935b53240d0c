//! In-memory color/depth rasters and their PNG encodings.
//!
//! Depth is 16-bit single-channel PNG in millimeters; color is 8-bit RGB PNG.

use std::path::Path;

use image::{ImageBuffer, Luma, Rgb};

use super::IngestError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthImage {
    width: u32,
    height: u32,
    data: Vec<u16>,
}

impl DepthImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; (width * height) as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, u: u32, v: u32) -> u16 {
        self.data[(v * self.width + u) as usize]
    }

    pub fn set(&mut self, u: u32, v: u32, mm: u16) {
        self.data[(v * self.width + u) as usize] = mm;
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let img = image::open(path).map_err(|e| IngestError::Image(path.display().to_string(), e.to_string()))?;
        let img = img.into_luma16();
        Ok(Self {
            width: img.width(),
            height: img.height(),
            data: img.into_raw(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), IngestError> {
        let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
            ImageBuffer::from_raw(self.width, self.height, self.data.clone()).expect("buffer size");
        buf.save(path)
            .map_err(|e| IngestError::Image(path.display().to_string(), e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorImage {
    width: u32,
    height: u32,
    data: Vec<[u8; 3]>,
}

impl ColorImage {
    pub fn new(width: u32, height: u32, fill: [u8; 3]) -> Self {
        Self {
            width,
            height,
            data: vec![fill; (width * height) as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, u: u32, v: u32) -> [u8; 3] {
        self.data[(v * self.width + u) as usize]
    }

    pub fn set(&mut self, u: u32, v: u32, c: [u8; 3]) {
        self.data[(v * self.width + u) as usize] = c;
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.data
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let img = image::open(path).map_err(|e| IngestError::Image(path.display().to_string(), e.to_string()))?;
        let img = img.into_rgb8();
        let (width, height) = img.dimensions();
        let data = img.into_raw().chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(Self { width, height, data })
    }

    fn to_buffer(&self) -> ImageBuffer<Rgb<u8>, Vec<u8>> {
        let raw: Vec<u8> = self.data.iter().flatten().copied().collect();
        ImageBuffer::from_raw(self.width, self.height, raw).expect("buffer size")
    }

    pub fn save(&self, path: &Path) -> Result<(), IngestError> {
        self.to_buffer()
            .save(path)
            .map_err(|e| IngestError::Image(path.display().to_string(), e.to_string()))
    }

    /// PNG-encoded bytes.
    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = std::io::Cursor::new(Vec::new());
        self.to_buffer()
            .write_to(&mut out, image::ImageFormat::Png)
            .expect("in-memory png encoding");
        out.into_inner()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = DepthImage::new(5, 4);
        d.set(2, 3, 54321);
        let p = dir.path().join("d.png");
        d.save(&p).unwrap();
        assert_eq!(DepthImage::load(&p).unwrap(), d);

        let mut c = ColorImage::new(5, 4, [1, 2, 3]);
        c.set(4, 0, [200, 100, 50]);
        let p = dir.path().join("c.png");
        c.save(&p).unwrap();
        assert_eq!(ColorImage::load(&p).unwrap(), c);
    }
}
