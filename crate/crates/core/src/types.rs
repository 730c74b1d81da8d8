//! Shared pixel types used across the environment, registration, and
//! network boundaries.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Single grayscale frame, row-major, values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::shape(
                "frame_new",
                format!("{}x{} frame wants {} pixels, got {}", width, height, width * height, data.len()),
            ));
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Frame {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    /// Circularly translates content left by `dx` and up by `dy`
    /// (wrapping), i.e. `out(x, y) = self((x + dx) mod W, (y + dy) mod H)`.
    /// Positive `dx` is what a camera scrolling right produces.
    pub fn shifted(&self, dx: i64, dy: i64) -> Frame {
        let (w, h) = (self.width as i64, self.height as i64);
        let mut out = Frame::zeros(self.width, self.height);
        for y in 0..h {
            let sy = (y + dy).rem_euclid(h) as usize;
            for x in 0..w {
                let sx = (x + dx).rem_euclid(w) as usize;
                out.data[(y as usize) * self.width + x as usize] =
                    self.data[sy * self.width + sx];
            }
        }
        out
    }
}

/// The most recent `k` frames stacked channel-wise, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    frames: Vec<Frame>,
}

impl FrameStack {
    /// Fills the stack with `k` copies of the given frame.
    pub fn filled(frame: Frame, k: usize) -> Self {
        FrameStack {
            frames: vec![frame; k],
        }
    }

    /// Appends `frame`, evicting the oldest.
    pub fn push(&mut self, frame: Frame) {
        self.frames.rotate_left(1);
        let k = self.frames.len();
        self.frames[k - 1] = frame;
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn newest(&self) -> &Frame {
        self.frames.last().expect("stack never empty")
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// Stacks channels into a [k, H, W] tensor.
    pub fn to_tensor(&self) -> Tensor {
        let k = self.frames.len();
        let (w, h) = (self.frames[0].width, self.frames[0].height);
        let mut data = Vec::with_capacity(k * w * h);
        for f in &self.frames {
            data.extend_from_slice(&f.data);
        }
        Tensor::new(vec![k, h, w], data).expect("stack frames share one shape")
    }

    /// Elementwise difference `next - self` as a [k, H, W] tensor; the last
    /// channel is the latest-frame difference.
    pub fn delta_to(&self, next: &FrameStack) -> Tensor {
        let a = self.to_tensor();
        let b = next.to_tensor();
        let data: Vec<f32> = b
            .data()
            .iter()
            .zip(a.data())
            .map(|(n, p)| n - p)
            .collect();
        Tensor::new(a.shape().to_vec(), data).expect("same shape")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stack_evicts_oldest() {
        let mk = |v: f32| Frame::new(2, 2, vec![v; 4]).unwrap();
        let mut s = FrameStack::filled(mk(0.0), 3);
        s.push(mk(1.0));
        s.push(mk(2.0));
        let vals: Vec<f32> = s.frames().iter().map(|f| f.data()[0]).collect();
        assert_eq!(vals, vec![0.0, 1.0, 2.0]);
        s.push(mk(3.0));
        let vals: Vec<f32> = s.frames().iter().map(|f| f.data()[0]).collect();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn shifted_moves_content_left_for_positive_dx() {
        let mut f = Frame::zeros(4, 2);
        f.set(2, 0, 1.0);
        let g = f.shifted(1, 0);
        assert_eq!(g.get(1, 0), 1.0);
        assert_eq!(g.get(2, 0), 0.0);
    }

    #[test]
    fn delta_last_channel_is_latest_frame_difference() {
        let mk = |v: f32| Frame::new(2, 1, vec![v; 2]).unwrap();
        let mut a = FrameStack::filled(mk(0.0), 3);
        a.push(mk(1.0));
        let mut b = a.clone();
        b.push(mk(5.0));
        let d = a.delta_to(&b);
        // stacks: a = [0,0,1], b = [0,1,5]; delta = [0,1,4]
        assert_eq!(d.data()[0], 0.0);
        assert_eq!(d.data()[2], 1.0);
        assert_eq!(d.data()[4], 4.0);
    }
}
