use alloc::vec::Vec;

/// One brightness-change report at a pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Event {
    /// Exposure-normalized time.
    pub t: f64,
    pub x: u16,
    pub y: u16,
    /// `+1` or `-1`.
    pub polarity: i8,
}

/// Time-sorted events of one sensor.
#[derive(Clone, Debug, PartialEq)]
pub struct EventStream {
    events: Vec<Event>,
    width: usize,
    height: usize,
    contrast: f64,
}

impl EventStream {
    /// Validates ordering, bounds and polarities.
    pub fn new(width: usize, height: usize, contrast: f64, events: Vec<Event>) -> crate::Result<Self> {
        validate_events(width, height, &events)?;
        Ok(Self { events, width, height, contrast })
    }

    pub fn empty(width: usize, height: usize, contrast: f64) -> Self {
        Self { events: Vec::new(), width, height, contrast }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Threshold used when the stream was generated.
    pub fn contrast(&self) -> f64 {
        self.contrast
    }

    /// Events with `t_start < t < t_end`.
    pub fn window(&self, t_start: f64, t_end: f64) -> &[Event] {
        let lo = self.events.partition_point(|e| e.t <= t_start);
        let hi = self.events.partition_point(|e| e.t < t_end).max(lo);
        &self.events[lo..hi]
    }
}

pub fn validate_events(width: usize, height: usize, events: &[Event]) -> crate::Result<()> {
    use crate::Error::InvalidEvent;
    let mut last = f64::NEG_INFINITY;
    for (index, e) in events.iter().enumerate() {
        if !e.t.is_finite() {
            return Err(InvalidEvent { index, reason: "non-finite timestamp" });
        }
        if e.t < last {
            return Err(InvalidEvent { index, reason: "timestamps decrease" });
        }
        if e.x as usize >= width || e.y as usize >= height {
            return Err(InvalidEvent { index, reason: "pixel outside the sensor" });
        }
        if e.polarity != 1 && e.polarity != -1 {
            return Err(InvalidEvent { index, reason: "polarity must be +1 or -1" });
        }
        last = e.t;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ev(t: f64, x: u16, y: u16, polarity: i8) -> Event {
        Event { t, x, y, polarity }
    }

    #[test]
    fn validation() {
        assert!(EventStream::new(4, 4, 0.2, vec![ev(0.1, 0, 0, 1), ev(0.1, 3, 3, -1)]).is_ok());
        assert!(EventStream::new(4, 4, 0.2, vec![ev(0.2, 0, 0, 1), ev(0.1, 0, 0, 1)]).is_err());
        assert!(EventStream::new(4, 4, 0.2, vec![ev(0.1, 4, 0, 1)]).is_err());
        assert!(EventStream::new(4, 4, 0.2, vec![ev(0.1, 0, 0, 0)]).is_err());
    }

    #[test]
    fn window_bounds_are_strict() {
        let s = EventStream::new(2, 1, 0.2, vec![ev(0.1, 0, 0, 1), ev(0.2, 0, 0, 1), ev(0.3, 1, 0, 1)]).unwrap();
        assert_eq!(s.window(0.1, 0.3).len(), 1);
        assert_eq!(s.window(0.0, 1.0).len(), 3);
        assert!(s.window(0.5, 0.4).is_empty());
    }
}
