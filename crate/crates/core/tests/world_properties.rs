use proptest::prelude::*;
use tunnel_blimp::geometry::Vec2;
use tunnel_blimp::world::{build_s_track, TunnelMap};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn centerline_offsets_round_trip(
        width in 2.0f64..5.0,
        leg in 6.0f64..20.0,
        frac in 0.0f64..1.0,
        side in -0.45f64..0.45,
    ) {
        let map = build_s_track(width, leg).unwrap();
        prop_assert!((map.total_length() - 5.0 * leg).abs() < 1e-9);
        // Stay clear of the corners, where offsets belong to two legs.
        let seg = ((frac * 5.0).floor() as usize).min(4);
        let along = width + (leg - 2.0 * width) * (frac * 5.0).fract();
        let (c, heading) = map.point_at_station(map.segment_station(seg) + along);
        let p = c + Vec2::from_angle(heading + std::f64::consts::FRAC_PI_2) * (side * width);
        prop_assert!(map.contains(p));
        let frame = map.centerline_frame(p).unwrap();
        prop_assert!((frame.d - side * width).abs() < 1e-9);
        prop_assert_eq!(frame.segment_index, seg);
    }

    #[test]
    fn rays_from_inside_stop_on_a_wall(
        frac in 0.0f64..1.0,
        side in -0.4f64..0.4,
        bearing in -std::f64::consts::PI..std::f64::consts::PI,
    ) {
        let map = build_s_track(3.3, 8.0).unwrap();
        let (c, heading) = map.point_at_station(frac * map.total_length());
        let p = c + Vec2::from_angle(heading + std::f64::consts::FRAC_PI_2) * (side * 3.3);
        prop_assume!(map.contains(p));
        let r = map.raycast(p, bearing, 100.0).unwrap().expect("closed tunnel");
        prop_assert!(r > 0.0);
        let hit = p + Vec2::from_angle(bearing) * r;
        let (_, closest) = map.nearest_wall(hit).unwrap();
        prop_assert!(closest.distance(hit) < 1e-6);
        // Just short of the hit is still free space.
        prop_assert!(map.contains(p + Vec2::from_angle(bearing) * (r - 1e-3).max(0.0)));
    }
}

#[test]
fn outside_points_are_rejected() {
    let map = build_s_track(3.3, 8.0).unwrap();
    assert!(!map.contains(Vec2::new(4.0, 3.0)));
    assert!(map.centerline_frame(Vec2::new(4.0, 3.0)).is_err());
    assert!(map.raycast(Vec2::new(4.0, 3.0), 0.0, 10.0).is_err());
}

#[test]
fn map_files_round_trip() {
    let map = build_s_track(3.3, 9.0).unwrap();
    let text = map.to_toml_string();
    let back = TunnelMap::from_toml_str(&text).unwrap();
    assert_eq!(back.segments(), map.segments());
    assert_eq!(back.corners().len(), 4);
}
