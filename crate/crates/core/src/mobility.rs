//! Random waypoint mobility.

use rand::Rng;

use crate::topology::{Arena, Point};

/// Lower bound on drawn speeds, as a fraction of `v_max`. Keeps the model
/// away from the zero-speed stagnation of plain random waypoint.
pub const MIN_SPEED_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointState {
    pub position: Point,
    pub waypoint: Point,
    /// m/s, in `(0, v_max]`.
    pub speed: f64,
    /// Seconds left in the current pause.
    pub pause_remaining: f64,
}

impl WaypointState {
    /// Fresh node at `position` heading for a newly drawn waypoint.
    pub fn start<R: Rng>(position: Point, arena: &Arena, v_max: f64, rng: &mut R) -> Self {
        let mut state = WaypointState { position, waypoint: position, speed: 0.0, pause_remaining: 0.0 };
        if v_max > 0.0 {
            state.redraw(arena, v_max, rng);
        }
        state
    }

    fn redraw<R: Rng>(&mut self, arena: &Arena, v_max: f64, rng: &mut R) {
        self.waypoint = arena.random_point(rng);
        self.speed = draw_speed(v_max, rng);
    }

    pub fn is_paused(&self) -> bool {
        self.pause_remaining > 0.0
    }
}

/// Uniform in `(MIN_SPEED_FRACTION * v_max, v_max]`.
pub fn draw_speed<R: Rng>(v_max: f64, rng: &mut R) -> f64 {
    let lo = MIN_SPEED_FRACTION * v_max;
    // gen::<f64>() is in [0, 1); flip it so v_max is reachable and lo is not.
    v_max - (v_max - lo) * rng.gen::<f64>()
}

/// Advance one node by `dt` seconds.
///
/// A paused node only burns pause time; a node whose pause has run out and
/// which sits on its waypoint draws a new waypoint and speed and then moves.
/// Arrival clamps to the waypoint and starts a pause of `pause_time`.
pub fn waypoint_step<R: Rng>(
    state: WaypointState,
    dt: f64,
    pause_time: f64,
    v_max: f64,
    arena: &Arena,
    rng: &mut R,
) -> WaypointState {
    debug_assert!(dt > 0.0);
    let mut next = state;
    if v_max <= 0.0 {
        return next;
    }
    if next.is_paused() {
        next.pause_remaining = (next.pause_remaining - dt).max(0.0);
        return next;
    }
    if next.position == next.waypoint {
        next.redraw(arena, v_max, rng);
    }
    let remaining = next.position.distance(next.waypoint);
    let travel = next.speed * dt;
    if travel >= remaining {
        next.position = next.waypoint;
        next.pause_remaining = pause_time;
    } else {
        let f = travel / remaining;
        next.position = Point::new(
            next.position.x + (next.waypoint.x - next.position.x) * f,
            next.position.y + (next.waypoint.y - next.position.y) * f,
        );
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(3)
    }

    #[test]
    fn paused_node_stays_put() {
        let s = WaypointState {
            position: Point::new(10.0, 10.0),
            waypoint: Point::new(10.0, 10.0),
            speed: 5.0,
            pause_remaining: 5.0,
        };
        let n = waypoint_step(s, 1.0, 100.0, 30.0, &Arena::default(), &mut rng());
        assert_eq!(n.position, s.position);
        assert_eq!(n.pause_remaining, 4.0);
    }

    #[test]
    fn moves_exactly_speed_times_dt() {
        let s = WaypointState {
            position: Point::new(0.0, 0.0),
            waypoint: Point::new(60.0, 80.0),
            speed: 10.0,
            pause_remaining: 0.0,
        };
        let n = waypoint_step(s, 1.0, 0.0, 30.0, &Arena::default(), &mut rng());
        assert!((n.position.distance(s.position) - 10.0).abs() < 1e-12);
        assert!((n.position.x - 6.0).abs() < 1e-12 && (n.position.y - 8.0).abs() < 1e-12);
    }

    #[test]
    fn arrival_clamps_and_pauses() {
        let s = WaypointState {
            position: Point::new(0.0, 0.0),
            waypoint: Point::new(3.0, 4.0),
            speed: 10.0,
            pause_remaining: 0.0,
        };
        let n = waypoint_step(s, 1.0, 100.0, 30.0, &Arena::default(), &mut rng());
        assert_eq!(n.position, s.waypoint);
        assert_eq!(n.pause_remaining, 100.0);
    }

    #[test]
    fn pause_expiry_draws_new_leg() {
        let arena = Arena::default();
        let mut r = rng();
        let s = WaypointState {
            position: Point::new(500.0, 500.0),
            waypoint: Point::new(500.0, 500.0),
            speed: 1.0,
            pause_remaining: 0.0,
        };
        let n = waypoint_step(s, 0.1, 0.0, 30.0, &arena, &mut r);
        assert_ne!(n.waypoint, s.waypoint);
        assert!(n.speed > 3.0 && n.speed <= 30.0);
        assert!(arena.contains(n.position));
    }

    #[test]
    fn speeds_stay_in_range() {
        let mut r = rng();
        for _ in 0..10_000 {
            let v = draw_speed(30.0, &mut r);
            assert!(v > 3.0 && v <= 30.0);
        }
    }
}
