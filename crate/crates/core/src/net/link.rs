use crate::model::LinkSpec;
use crate::sim::{RandomSource, SimDuration, SimTime};

/// Fixed header bytes added to every frame on the wire.
pub const FRAME_OVERHEAD_BYTES: u64 = 20;

pub(crate) fn bw_bps(link: &LinkSpec) -> u64 {
    ((link.bw_mbps * 1e6).round() as u64).max(1)
}

pub(crate) fn lat(link: &LinkSpec) -> SimDuration {
    SimDuration::from_millis_f64(link.lat_ms)
}

/// Time to clock `size_bytes` onto a link of `bw_bps`, rounded up to whole μs.
pub fn serialization_time(size_bytes: u64, bw_bps: u64) -> SimDuration {
    let bits = u128::from(size_bytes) * 8 * 1_000_000;
    let bw = u128::from(bw_bps.max(1));
    SimDuration::from_micros(bits.div_ceil(bw) as u64)
}

/// Serialization followed by propagation on an idle link.
pub fn transmission_time(size_bytes: u64, link: &LinkSpec) -> SimDuration {
    serialization_time(size_bytes, bw_bps(link)) + lat(link)
}

/// Runtime state of one link.
#[derive(Debug, Clone)]
pub struct LinkState {
    pub spec: LinkSpec,
    pub up: bool,
    pub effective_loss: f64,
    /// Indexed by direction: 0 is source to target, 1 the reverse.
    pub busy_until: [SimTime; 2],
    /// Bumped on every down transition; frames reserved under an older
    /// generation are dropped on arrival.
    pub generation: u64,
    bw_bps: u64,
    lat: SimDuration,
    rng: RandomSource,
}

impl LinkState {
    pub fn new(spec: LinkSpec, seed: u64) -> Self {
        let rng = RandomSource::new(seed, &format!("link:{}", spec.id));
        LinkState {
            up: true,
            effective_loss: spec.loss_pct,
            busy_until: [SimTime::ZERO; 2],
            generation: 0,
            bw_bps: bw_bps(&spec),
            lat: lat(&spec),
            spec,
            rng,
        }
    }

    pub fn set_down(&mut self) {
        if self.up {
            self.up = false;
            self.generation += 1;
        }
    }

    /// Bring the link up and reset loss to the configured value.
    pub fn set_up(&mut self) {
        self.up = true;
        self.effective_loss = self.spec.loss_pct;
    }

    /// Raise loss; never below the configured value.
    pub fn set_loss(&mut self, pct: f64) {
        self.effective_loss = pct.clamp(self.spec.loss_pct, 100.0);
    }

    /// Queue a frame in direction `dir` at `now`. Returns the arrival time at
    /// the far end and whether the loss draw kept the frame.
    pub(crate) fn reserve(&mut self, now: SimTime, dir: usize, size_bytes: u64) -> (SimTime, bool) {
        let start = now.max(self.busy_until[dir]);
        let done = start + serialization_time(size_bytes, self.bw_bps);
        self.busy_until[dir] = done;
        let lost = self.rng.bernoulli(self.effective_loss / 100.0);
        (done + self.lat, !lost)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(lat_ms: f64, bw_mbps: f64) -> LinkSpec {
        let mut l = LinkSpec::new("l", "a", "b");
        l.lat_ms = lat_ms;
        l.bw_mbps = bw_mbps;
        l
    }

    #[test]
    fn control_probe_costs_only_latency() {
        assert_eq!(transmission_time(0, &link(10.0, 100.0)), SimDuration::from_millis(10));
    }

    #[test]
    fn serialization_plus_propagation() {
        assert_eq!(transmission_time(12_500, &link(10.0, 1.0)), SimDuration::from_millis(110));
    }

    #[test]
    fn rounds_up_to_one_microsecond() {
        assert_eq!(transmission_time(1, &link(0.0, 1000.0)), SimDuration::from_micros(1));
    }

    #[test]
    fn fifo_per_direction() {
        let mut st = LinkState::new(link(1.0, 1.0), 1);
        let (a1, _) = st.reserve(SimTime::ZERO, 0, 125);
        let (a2, _) = st.reserve(SimTime::ZERO, 0, 125);
        let (b1, _) = st.reserve(SimTime::ZERO, 1, 125);
        assert_eq!(a1, SimTime::from_micros(2_000));
        assert_eq!(a2, SimTime::from_micros(3_000));
        assert_eq!(b1, a1);
    }

    #[test]
    fn set_loss_never_below_configured() {
        let mut l = link(0.0, 1.0);
        l.loss_pct = 5.0;
        let mut st = LinkState::new(l, 1);
        st.set_loss(1.0);
        assert_eq!(st.effective_loss, 5.0);
        st.set_loss(30.0);
        assert_eq!(st.effective_loss, 30.0);
        st.set_down();
        st.set_up();
        assert_eq!(st.effective_loss, 5.0);
    }
}
