use super::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelFormat {
    Rgb8,
    Gray8,
    Label16,
    Depth32,
}

impl PixelFormat {
    pub fn channels(self) -> usize {
        match self {
            PixelFormat::Rgb8 => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PixelData {
    Rgb8(Vec<u8>),
    Gray8(Vec<u8>),
    Label16(Vec<u16>),
    Depth32(Vec<f32>),
}

impl PixelData {
    fn len(&self) -> usize {
        match self {
            PixelData::Rgb8(d) | PixelData::Gray8(d) => d.len(),
            PixelData::Label16(d) => d.len(),
            PixelData::Depth32(d) => d.len(),
        }
    }

    fn format(&self) -> PixelFormat {
        match self {
            PixelData::Rgb8(_) => PixelFormat::Rgb8,
            PixelData::Gray8(_) => PixelFormat::Gray8,
            PixelData::Label16(_) => PixelFormat::Label16,
            PixelData::Depth32(_) => PixelFormat::Depth32,
        }
    }
}

/// Row-major image of one of the supported pixel formats.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    data: PixelData,
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, data: PixelData) -> Result<Self, GeometryError> {
        let expected = width as usize * height as usize * data.format().channels();
        if data.len() != expected {
            return Err(GeometryError::LengthMismatch { expected, got: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn rgb8(width: u32, height: u32, data: Vec<u8>) -> Result<Self, GeometryError> {
        Self::new(width, height, PixelData::Rgb8(data))
    }

    pub fn gray8(width: u32, height: u32, data: Vec<u8>) -> Result<Self, GeometryError> {
        Self::new(width, height, PixelData::Gray8(data))
    }

    pub fn label16(width: u32, height: u32, data: Vec<u16>) -> Result<Self, GeometryError> {
        Self::new(width, height, PixelData::Label16(data))
    }

    pub fn depth32(width: u32, height: u32, data: Vec<f32>) -> Result<Self, GeometryError> {
        Self::new(width, height, PixelData::Depth32(data))
    }

    pub fn filled(width: u32, height: u32, format: PixelFormat) -> Self {
        let n = width as usize * height as usize;
        let data = match format {
            PixelFormat::Rgb8 => PixelData::Rgb8(vec![0; n * 3]),
            PixelFormat::Gray8 => PixelData::Gray8(vec![0; n]),
            PixelFormat::Label16 => PixelData::Label16(vec![0; n]),
            PixelFormat::Depth32 => PixelData::Depth32(vec![f32::INFINITY; n]),
        };
        Self { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn format(&self) -> PixelFormat {
        self.data.format()
    }

    pub fn data(&self) -> &PixelData {
        &self.data
    }

    pub fn into_data(self) -> PixelData {
        self.data
    }

    pub fn same_size(&self, other: &ImageBuffer) -> bool {
        self.dimensions() == other.dimensions()
    }

    pub fn expect_format(&self, format: PixelFormat) -> Result<(), GeometryError> {
        if self.format() == format {
            Ok(())
        } else {
            Err(GeometryError::WrongFormat { expected: format, got: self.format() })
        }
    }

    pub fn as_rgb8(&self) -> Option<&[u8]> {
        match &self.data {
            PixelData::Rgb8(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_rgb8_mut(&mut self) -> Option<&mut [u8]> {
        match &mut self.data {
            PixelData::Rgb8(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_gray8(&self) -> Option<&[u8]> {
        match &self.data {
            PixelData::Gray8(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_gray8_mut(&mut self) -> Option<&mut [u8]> {
        match &mut self.data {
            PixelData::Gray8(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_label16(&self) -> Option<&[u16]> {
        match &self.data {
            PixelData::Label16(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_label16_mut(&mut self) -> Option<&mut [u16]> {
        match &mut self.data {
            PixelData::Label16(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_depth32(&self) -> Option<&[f32]> {
        match &self.data {
            PixelData::Depth32(d) => Some(d),
            _ => None,
        }
    }

    fn index(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y as usize * self.width as usize + x as usize
    }

    /// RGB triple; gray images are broadcast.
    pub fn rgb(&self, x: u32, y: u32) -> [u8; 3] {
        let i = self.index(x, y);
        match &self.data {
            PixelData::Rgb8(d) => [d[3 * i], d[3 * i + 1], d[3 * i + 2]],
            PixelData::Gray8(d) => [d[i]; 3],
            _ => panic!("rgb() on {:?} image", self.format()),
        }
    }

    pub fn label(&self, x: u32, y: u32) -> u16 {
        let i = self.index(x, y);
        match &self.data {
            PixelData::Label16(d) => d[i],
            PixelData::Gray8(d) => u16::from(d[i]),
            _ => panic!("label() on {:?} image", self.format()),
        }
    }

    pub fn depth(&self, x: u32, y: u32) -> f32 {
        let i = self.index(x, y);
        match &self.data {
            PixelData::Depth32(d) => d[i],
            _ => panic!("depth() on {:?} image", self.format()),
        }
    }

    pub fn gray(&self, x: u32, y: u32) -> u8 {
        let i = self.index(x, y);
        match &self.data {
            PixelData::Gray8(d) => d[i],
            _ => panic!("gray() on {:?} image", self.format()),
        }
    }
}
