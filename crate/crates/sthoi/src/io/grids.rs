//! Binary feature-grid container with random frame access.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "STFG"
//! 4       4     version (u32, currently 1)
//! 8       4     channels (u32)
//! 12      4     height (u32)
//! 16      4     width (u32)
//! 20      4     first frame (u32, absolute video frame)
//! 24      4     frame count (u32)
//! 28      4     frame width in pixels (f32)
//! 32      4     frame height in pixels (f32)
//! 36      -     frame count x (channels*height*width) f32 values,
//!               frame-major, then channel, row, column
//! ```

use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array3;

use crate::error::{Error, Result};
use crate::features::FeatureGrid;
use crate::geometry::FrameSpan;

pub const GRID_MAGIC: [u8; 4] = *b"STFG";
pub const GRID_VERSION: u32 = 1;
const HEADER_SIZE: u64 = 36;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridHeader {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub first_frame: usize,
    pub frame_count: usize,
    pub frame_width: f32,
    pub frame_height: f32,
}

impl GridHeader {
    pub fn frame_len(&self) -> usize {
        self.channels * self.height * self.width
    }

    /// Span covered by the file, `None` for a header-only file.
    pub fn span(&self) -> Option<FrameSpan> {
        (self.frame_count > 0).then(|| FrameSpan {
            begin: self.first_frame,
            end: self.first_frame + self.frame_count - 1,
        })
    }
}

/// Streaming writer; frames must arrive in order and match the declared count.
pub struct GridWriter {
    file: BufWriter<std::fs::File>,
    header: GridHeader,
    written: usize,
    path: PathBuf,
}

impl GridWriter {
    pub fn create(path: &Path, header: GridHeader) -> Result<Self> {
        if header.channels == 0 || header.height == 0 || header.width == 0 {
            return Err(Error::invalid("grid header", "zero-sized dimension"));
        }
        if header.frame_width <= 0.0 || header.frame_height <= 0.0 {
            return Err(Error::invalid("grid header", "non-positive frame extent"));
        }
        let mut file = BufWriter::new(std::fs::File::create(path)?);
        file.write_all(&GRID_MAGIC)?;
        file.write_u32::<LittleEndian>(GRID_VERSION)?;
        file.write_u32::<LittleEndian>(header.channels as u32)?;
        file.write_u32::<LittleEndian>(header.height as u32)?;
        file.write_u32::<LittleEndian>(header.width as u32)?;
        file.write_u32::<LittleEndian>(header.first_frame as u32)?;
        file.write_u32::<LittleEndian>(header.frame_count as u32)?;
        file.write_f32::<LittleEndian>(header.frame_width)?;
        file.write_f32::<LittleEndian>(header.frame_height)?;
        Ok(GridWriter {
            file,
            header,
            written: 0,
            path: path.into(),
        })
    }

    /// Append the next frame's `(channels, height, width)` values.
    pub fn write_frame(&mut self, values: &Array3<f32>) -> Result<()> {
        let expect = (self.header.channels, self.header.height, self.header.width);
        let got = values.dim();
        if got != expect {
            return Err(Error::mismatch(format!(
                "grid frame shape {got:?} != declared {expect:?}"
            )));
        }
        if self.written >= self.header.frame_count {
            return Err(Error::Format {
                path: self.path.clone(),
                message: format!(
                    "more frames written than declared ({})",
                    self.header.frame_count
                ),
            });
        }
        for &v in values.iter() {
            self.file.write_f32::<LittleEndian>(v)?;
        }
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        if self.written != self.header.frame_count {
            return Err(Error::Format {
                path: self.path.clone(),
                message: format!(
                    "{} frames written, header declares {}",
                    self.written, self.header.frame_count
                ),
            });
        }
        self.file.flush()?;
        Ok(())
    }
}

/// Random-access reader over one grid file.
pub struct GridReader {
    file: BufReader<std::fs::File>,
    header: GridHeader,
    path: PathBuf,
}

impl GridReader {
    pub fn open(path: &Path) -> Result<Self> {
        let raw =
            std::fs::File::open(path).map_err(|_| Error::MissingFile { path: path.into() })?;
        let mut file = BufReader::new(raw);
        let bad = |message: String| Error::Format {
            path: path.into(),
            message,
        };

        let mut magic = [0u8; 4];
        file.read_exact(&mut magic)
            .map_err(|_| bad("truncated header".into()))?;
        if magic != GRID_MAGIC {
            return Err(bad(format!("bad magic {magic:?}")));
        }
        let version = file.read_u32::<LittleEndian>()?;
        if version != GRID_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let channels = file.read_u32::<LittleEndian>()? as usize;
        let height = file.read_u32::<LittleEndian>()? as usize;
        let width = file.read_u32::<LittleEndian>()? as usize;
        let first_frame = file.read_u32::<LittleEndian>()? as usize;
        let frame_count = file.read_u32::<LittleEndian>()? as usize;
        let frame_width = file.read_f32::<LittleEndian>()?;
        let frame_height = file.read_f32::<LittleEndian>()?;
        let header = GridHeader {
            channels,
            height,
            width,
            first_frame,
            frame_count,
            frame_width,
            frame_height,
        };
        if channels == 0 || height == 0 || width == 0 {
            return Err(bad("zero-sized dimension".into()));
        }

        let expected = HEADER_SIZE + (frame_count * header.frame_len() * 4) as u64;
        let actual = file.get_ref().metadata()?.len();
        if actual != expected {
            return Err(bad(format!(
                "file is {actual} bytes, header implies {expected}"
            )));
        }
        Ok(GridReader {
            file,
            header,
            path: path.into(),
        })
    }

    pub fn header(&self) -> &GridHeader {
        &self.header
    }

    /// Read one frame's grid by absolute frame number.
    pub fn read_frame(&mut self, frame: usize) -> Result<FeatureGrid> {
        let in_range = self
            .header
            .span()
            .map(|s| s.contains(frame))
            .unwrap_or(false);
        if !in_range {
            return Err(Error::Format {
                path: self.path.clone(),
                message: format!(
                    "frame {frame} outside stored range [{}, {})",
                    self.header.first_frame,
                    self.header.first_frame + self.header.frame_count
                ),
            });
        }
        let idx = frame - self.header.first_frame;
        let offset = HEADER_SIZE + (idx * self.header.frame_len() * 4) as u64;
        self.file.seek(SeekFrom::Start(offset))?;
        let mut data = vec![0f32; self.header.frame_len()];
        self.file.read_f32_into::<LittleEndian>(&mut data)?;
        let values = Array3::from_shape_vec(
            (self.header.channels, self.header.height, self.header.width),
            data,
        )
        .expect("shape matches frame_len");
        Ok(FeatureGrid {
            frame,
            values,
            frame_width: self.header.frame_width as f64,
            frame_height: self.header.frame_height as f64,
        })
    }

    /// Read a contiguous span of frames; the whole span must be stored.
    pub fn read_span(&mut self, span: FrameSpan) -> Result<Vec<FeatureGrid>> {
        span.frames().map(|f| self.read_frame(f)).collect()
    }
}
