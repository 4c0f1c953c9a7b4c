use super::Pixel;

/// Element of the dihedral group acting on a grid (rotations are clockwise).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    Identity,
    Rot90,
    Rot180,
    Rot270,
    FlipH,
    FlipV,
    Transpose,
    AntiTranspose,
}

impl Transform {
    pub const ALL: [Transform; 8] = [
        Transform::Identity,
        Transform::Rot90,
        Transform::Rot180,
        Transform::Rot270,
        Transform::FlipH,
        Transform::FlipV,
        Transform::Transpose,
        Transform::AntiTranspose,
    ];

    /// Output `(width, height)` for an input grid of the given size.
    pub fn dims(self, width: usize, height: usize) -> (usize, usize) {
        match self {
            Transform::Identity | Transform::Rot180 | Transform::FlipH | Transform::FlipV => (width, height),
            _ => (height, width),
        }
    }

    pub fn map_pixel(self, (r, c): Pixel, width: usize, height: usize) -> Pixel {
        match self {
            Transform::Identity => (r, c),
            Transform::Rot90 => (c, height - 1 - r),
            Transform::Rot180 => (height - 1 - r, width - 1 - c),
            Transform::Rot270 => (width - 1 - c, r),
            Transform::FlipH => (r, width - 1 - c),
            Transform::FlipV => (height - 1 - r, c),
            Transform::Transpose => (c, r),
            Transform::AntiTranspose => (width - 1 - c, height - 1 - r),
        }
    }

    pub(crate) fn apply<T: Copy>(self, width: usize, height: usize, data: &[T]) -> (usize, usize, Vec<T>) {
        let (w2, h2) = self.dims(width, height);
        let mut out = data.to_vec();
        for r in 0..height {
            for c in 0..width {
                let (r2, c2) = self.map_pixel((r, c), width, height);
                out[r2 * w2 + c2] = data[r * width + c];
            }
        }
        (w2, h2, out)
    }
}
