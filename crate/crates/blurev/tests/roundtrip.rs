//! Writer/reader pairs reproduce their input; binary formats byte for byte.
//! Poses pass through a quaternion in text, so they match to rounding.

use std::path::Path;

use blurev::events_io::{decode_events, encode_events};
use blurev::image_io::{decode_raw, encode_raw, quantize_f32};
use blurev::trajectory_io::{read_samples, write_samples};
use blurev_core::lie::se3_exp;
use blurev_core::{Event, EventStream, Image, Twist};
use proptest::prelude::*;

fn events(w: u16, h: u16) -> impl Strategy<Value = Vec<Event>> {
    prop::collection::vec((0.0..=1.0f64, 0..w, 0..h, prop::bool::ANY), 0..200).prop_map(|raw| {
        let mut ev: Vec<Event> =
            raw.into_iter().map(|(t, x, y, p)| Event { t, x, y, polarity: if p { 1 } else { -1 } }).collect();
        ev.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.y.cmp(&b.y)).then(a.x.cmp(&b.x)));
        ev
    })
}

proptest! {
    #[test]
    fn event_files(ev in events(17, 9), contrast in 0.01..1.0f64) {
        let s = EventStream::new(17, 9, contrast, ev).unwrap();
        let bytes = encode_events(&s);
        let back = decode_events(Path::new("e"), &bytes, None, contrast).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(encode_events(&back), bytes);
    }

    #[test]
    fn raw_images(w in 1usize..9, h in 1usize..9, c in prop::sample::select(vec![1usize, 3]), seed in any::<u64>()) {
        let data = (0..w * h * c).map(|i| ((seed.wrapping_mul(i as u64 + 1) >> 11) as f64) / (1u64 << 53) as f64).collect();
        let img = quantize_f32(&Image::from_data(w, h, c, data).unwrap());
        let bytes = encode_raw(&img);
        let back = decode_raw(Path::new("r"), &bytes).unwrap();
        prop_assert_eq!(&back, &img);
        prop_assert_eq!(encode_raw(&back), bytes);
    }

    #[test]
    fn trajectory_text(xs in prop::collection::vec((0.0..=1.0f64, prop::array::uniform6(-1.5..1.5f64)), 1..20)) {
        let samples: Vec<_> = xs.iter().map(|(t, xi)| (*t, se3_exp(&Twist::from_array(*xi)))).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("traj.txt");
        write_samples(&p, &samples).unwrap();
        let back = read_samples(&p).unwrap();
        prop_assert_eq!(back.len(), samples.len());
        for ((ta, a), (tb, b)) in samples.iter().zip(&back) {
            prop_assert_eq!(ta, tb);
            prop_assert!(a.max_abs_diff(b) < 1e-12);
        }
    }
}
