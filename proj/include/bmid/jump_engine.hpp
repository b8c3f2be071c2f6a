#ifndef BMID_JUMP_ENGINE_HPP
#define BMID_JUMP_ENGINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "bmid/intensity.hpp"
#include "bmid/rng.hpp"
#include "bmid/trajectory.hpp"

namespace bmid {

struct SimOptions {
  bool record_paths = false;           // keep full event logs (memory-bound for large levels)
  std::vector<double> snapshot_times;  // extra observation times in [0, horizon]
  std::uint64_t max_events = 100'000'000;
};

// ---------------------------------------------------------------------------
// Coupled walk (S, Z, U, M, L, V)
//
// S is a symmetric walk jumping up/down at rate 2^(2n) each; Z jumps in the
// direction of the velocity V at rate 2^n|V|; U = S + Z; M is the signed
// running minimum of U; L is 2^n times the occupation time of {U = -M}; and
// V = -v + K*L. Every channel is re-drawn after every event: the constant
// channels are memoryless and the V-dependent channel changes its intensity
// path at each event, so regeneration keeps the simulation exact.

/// State of the coupled walk at one instant. Lattice coordinates are in
/// real units (multiples of 2^-level); local_time is the scaled occupation.
struct LatticeState {
  double time = 0.0;
  double s = 0.0;
  double z = 0.0;
  double u = 0.0;
  double running_min = 0.0;
  double local_time = 0.0;
  double velocity = 0.0;

  double x() const { return u + running_min; }
};

struct SzuResult {
  LatticeState final_state;
  std::vector<LatticeState> snapshots;
  std::uint64_t event_count = 0;
  bool recorded = false;

  // Populated when record_paths is set.
  JumpTrajectory s, z, u;
  JumpTrajectory running_min;          // changes only when the minimum deepens
  LinearTrajectory local_time, velocity;  // nodes at every event time
};

namespace detail {

/// Gap to the next event of the velocity-driven channel with intensity
/// 2^n |V(t)|, where V grows at rate K*2^n while the walk sits at its
/// running minimum and is constant otherwise.
inline double velocity_channel_gap(double v_now, bool at_min, const LatticeParams& p,
                                   RngStream& rng) {
  const double scale = p.drift_scale();
  if (at_min && p.coupling > 0.0) {
    const double lambda0 = scale * v_now;
    const double slope = p.coupling * scale * scale;
    const double target = -std::log(rng.uniform());
    return invert_integrated_intensity(lambda0, slope, 0.0, target);
  }
  return rng.exponential(scale * std::abs(v_now));
}

}  // namespace detail

inline SzuResult simulate_szu(const LatticeParams& params, RngStream& rng,
                              const SimOptions& options = {}) {
  params.validate();
  const double h = params.spacing();
  const double scale = params.drift_scale();
  const double two_walk_rate = 2.0 * params.walk_rate();


  std::vector<double> snaps(options.snapshot_times);
  std::sort(snaps.begin(), snaps.end());
  std::size_t snap_cursor = 0;

  SzuResult out;
  out.recorded = options.record_paths;

  std::int64_t s_units = 0, z_units = 0, u_units = 0, m_units = 0;
  bool at_min = true;  // U(0) = 0 = -M(0)
  double t = 0.0;
  double l_raw = 0.0;  // unscaled occupation time of {U = -M}

  // l is the scaled occupation 2^n * Leb; the velocity is -v + K * l.
  const auto velocity_at = [&](double l) { return -params.velocity + params.coupling * l; };
  const auto make_state = [&](double when, double l) {
    LatticeState st;
    st.time = when;
    st.s = static_cast<double>(s_units) * h;
    st.z = static_cast<double>(z_units) * h;
    st.u = static_cast<double>(u_units) * h;
    st.running_min = static_cast<double>(m_units) * h;
    st.local_time = scale * l;
    st.velocity = velocity_at(scale * l);
    return st;
  };
  const auto emit_until = [&](double bound) {
    // Snapshots strictly before `bound` use the current (pre-event) state.
    while (snap_cursor < snaps.size() && snaps[snap_cursor] < bound) {
      const double ts = snaps[snap_cursor++];
      const double l_at = l_raw + (at_min && ts > t ? ts - t : 0.0);
      out.snapshots.push_back(make_state(ts, l_at));
    }
  };

  if (options.record_paths) {
    out.s.initial_value = out.z.initial_value = out.u.initial_value = 0.0;
    out.running_min.initial_value = 0.0;
    out.local_time.append(0.0, 0.0);
    out.velocity.append(0.0, velocity_at(0.0));
  }

  while (true) {
    const double v_now = velocity_at(scale * l_raw);
    const double gap_s = rng.exponential(two_walk_rate);
    const double gap_z = detail::velocity_channel_gap(v_now, at_min, params, rng);
    const double gap = std::min(gap_s, gap_z);
    const double t_next = t + gap;

    if (!(t_next < params.horizon)) {
      emit_until(params.horizon);
      if (at_min) l_raw += params.horizon - t;
      t = params.horizon;
      break;
    }

    emit_until(t_next);
    if (at_min) l_raw += gap;
    t = t_next;
    if (++out.event_count > options.max_events) throw EventCapExceeded(options.max_events);

    const double v_event = velocity_at(scale * l_raw);
    if (gap_s <= gap_z) {
      const int dir = rng.bernoulli(0.5) ? 1 : -1;
      s_units += dir;
      u_units += dir;
      if (options.record_paths) out.s.append(t, static_cast<double>(s_units) * h);
    } else {
      const int dir = v_event >= 0.0 ? 1 : -1;
      z_units += dir;
      u_units += dir;
      if (options.record_paths) out.z.append(t, static_cast<double>(z_units) * h);
    }

    if (-u_units > m_units) {
      m_units = -u_units;
      if (options.record_paths) out.running_min.append(t, static_cast<double>(m_units) * h);
    }
    at_min = (u_units == -m_units);

    if (options.record_paths) {
      out.u.append(t, static_cast<double>(u_units) * h);
      out.local_time.append(t, scale * l_raw);
      out.velocity.append(t, v_event);
    }
    // Snapshot exactly at an event time sees the post-event state.
    while (snap_cursor < snaps.size() && snaps[snap_cursor] == t) {
      ++snap_cursor;
      out.snapshots.push_back(make_state(t, l_raw));
    }
  }

  out.final_state = make_state(params.horizon, l_raw);
  while (snap_cursor < snaps.size() && snaps[snap_cursor] <= params.horizon) {
    ++snap_cursor;
    out.snapshots.push_back(out.final_state);
  }
  if (options.record_paths) {
    out.local_time.append(params.horizon, scale * l_raw);
    out.velocity.append(params.horizon, velocity_at(scale * l_raw));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Direct simulation of the nonnegative-lattice process (X, V)
//
// X lives on 2^-n * {0, 1, 2, ...}. Away from zero the rate toward the
// velocity's sign is 2^(2n) + 2^n|V| and the opposite rate is 2^(2n), with V
// constant. At zero the velocity grows at rate K*2^n and the blocked
// downward transitions are realized as zero-to-zero self-transitions, so the
// total event rate there is 2^(2n+1) + 2^n|V(t)| with a time-varying clock.

struct DirectState {
  double time = 0.0;
  double x = 0.0;
  double local_time = 0.0;
  double velocity = 0.0;
};

struct XnResult {
  DirectState final_state;
  std::vector<DirectState> snapshots;
  std::uint64_t event_count = 0;
  std::uint64_t zero_self_transitions = 0;
  bool recorded = false;

  JumpTrajectory x;  // self-transitions appear as equal consecutive values
  LinearTrajectory local_time, velocity;
};

inline XnResult simulate_xn_direct(const LatticeParams& params, RngStream& rng,
                                   const SimOptions& options = {}) {
  params.validate();
  const double h = params.spacing();
  const double scale = params.drift_scale();
  const double walk_rate = params.walk_rate();


  std::vector<double> snaps(options.snapshot_times);
  std::sort(snaps.begin(), snaps.end());
  std::size_t snap_cursor = 0;

  XnResult out;
  out.recorded = options.record_paths;

  std::int64_t x_units = 0;
  double t = 0.0;
  double l_raw = 0.0;  // unscaled occupation time of {X = 0}

  // l is the scaled occupation 2^n * Leb; the velocity is -v + K * l.
  const auto velocity_at = [&](double l) { return -params.velocity + params.coupling * l; };
  const auto make_state = [&](double when, double l) {
    DirectState st;
    st.time = when;
    st.x = static_cast<double>(x_units) * h;
    st.local_time = scale * l;
    st.velocity = velocity_at(scale * l);
    return st;
  };
  const auto emit_until = [&](double bound) {
    while (snap_cursor < snaps.size() && snaps[snap_cursor] < bound) {
      const double ts = snaps[snap_cursor++];
      const double l_at = l_raw + (x_units == 0 && ts > t ? ts - t : 0.0);
      out.snapshots.push_back(make_state(ts, l_at));
    }
  };

  if (options.record_paths) {
    out.x.initial_value = 0.0;
    out.local_time.append(0.0, 0.0);
    out.velocity.append(0.0, velocity_at(0.0));
  }

  while (true) {
    const double v_now = velocity_at(scale * l_raw);
    double gap;
    if (x_units == 0 && params.coupling > 0.0) {
      const double target = -std::log(rng.uniform());
      gap = invert_integrated_intensity(scale * v_now, params.coupling * scale * scale,
                                        2.0 * walk_rate, target);
    } else {
      // Total rate is 2^(2n+1) + 2^n|V| both at zero (with the self-loop)
      // and away from it; only the direction split differs.
      gap = rng.exponential(2.0 * walk_rate + scale * std::abs(v_now));
    }
    const double t_next = t + gap;

    if (!(t_next < params.horizon)) {
      emit_until(params.horizon);
      if (x_units == 0) l_raw += params.horizon - t;
      t = params.horizon;
      break;
    }

    emit_until(t_next);
    if (x_units == 0) l_raw += gap;
    t = t_next;
    if (++out.event_count > options.max_events) throw EventCapExceeded(options.max_events);

    const double v_event = velocity_at(scale * l_raw);
    const double boost = scale * std::abs(v_event);
    if (x_units > 0) {
      // Rates are constant away from zero; the boosted direction follows the
      // velocity's sign.
      double p_up;
      if (v_event > 0.0)
        p_up = (walk_rate + boost) / (2.0 * walk_rate + boost);
      else if (v_event < 0.0)
        p_up = walk_rate / (2.0 * walk_rate + boost);
      else
        p_up = 0.5;
      x_units += rng.bernoulli(p_up) ? 1 : -1;
    } else {
      // At zero the downward choice re-enters zero.
      const double p_up = v_event > 0.0 ? (walk_rate + boost) / (2.0 * walk_rate + boost)
                                        : walk_rate / (2.0 * walk_rate + boost);
      if (rng.bernoulli(p_up))
        x_units = 1;
      else
        ++out.zero_self_transitions;
    }

    if (options.record_paths) {
      out.x.append(t, static_cast<double>(x_units) * h);
      out.local_time.append(t, scale * l_raw);
      out.velocity.append(t, v_event);
    }
    while (snap_cursor < snaps.size() && snaps[snap_cursor] == t) {
      ++snap_cursor;
      out.snapshots.push_back(make_state(t, l_raw));
    }
  }

  out.final_state = make_state(params.horizon, l_raw);
  while (snap_cursor < snaps.size() && snaps[snap_cursor] <= params.horizon) {
    ++snap_cursor;
    out.snapshots.push_back(out.final_state);
  }
  if (options.record_paths) {
    out.local_time.append(params.horizon, scale * l_raw);
    out.velocity.append(params.horizon, velocity_at(scale * l_raw));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared-randomness coupling of (S, Z, U, M, L) with the constant-rate
// comparison system (Z', U', M', L')
//
// Z' is a Poisson process at the floor rate |v|*2^n. For v >= 0 it jumps
// downward and Z's negative jumps are realized by thinning Z' (acceptance
// probability |V|/v while V < 0); Z's positive jumps come from a separate
// channel. For v < 0 the velocity stays positive, Z jumps upward only, and
// Z' is the thinning of Z down to the floor rate. Either way Z - Z' never
// decreases, U + M dominates U' + M', and L-increments are bounded by
// L'-increments, pathwise; the simulation checks all three event-by-event
// with integer arithmetic and counts violations (zero expected).

struct CouplingState {
  double time = 0.0;
  double s = 0.0, z = 0.0, u = 0.0, running_min = 0.0, local_time = 0.0, velocity = 0.0;
  double z_prime = 0.0, u_prime = 0.0, running_min_prime = 0.0, local_time_prime = 0.0;

  double x() const { return u + running_min; }
  double x_prime() const { return u_prime + running_min_prime; }
};

struct CouplingResult {
  CouplingState final_state;
  std::vector<CouplingState> snapshots;
  std::uint64_t event_count = 0;
  std::uint64_t z_order_violations = 0;      // Z - Z' decreased
  std::uint64_t sandwich_violations = 0;     // U + M >= U' + M' >= 0 broken
  std::uint64_t occupation_violations = 0;   // L accrued while L' did not
  bool recorded = false;

  JumpTrajectory u, u_prime;
  LinearTrajectory local_time, local_time_prime;
};

inline CouplingResult build_coupling(const LatticeParams& params, RngStream& rng,
                                     const SimOptions& options = {}) {
  params.validate();
  const double h = params.spacing();
  const double scale = params.drift_scale();
  const double two_walk_rate = 2.0 * params.walk_rate();

  const double floor_rate = scale * std::abs(params.velocity);  // Z' intensity
  const bool nonneg_v = params.velocity >= 0.0;

  std::vector<double> snaps(options.snapshot_times);
  std::sort(snaps.begin(), snaps.end());
  std::size_t snap_cursor = 0;

  CouplingResult out;
  out.recorded = options.record_paths;

  std::int64_t s_units = 0, z_units = 0, u_units = 0, m_units = 0;
  std::int64_t zp_units = 0, up_units = 0, mp_units = 0;
  bool at_min = true, at_min_prime = true;
  double t = 0.0, l_raw = 0.0, lp_raw = 0.0;

  // l is the scaled occupation 2^n * Leb; the velocity is -v + K * l.
  const auto velocity_at = [&](double l) { return -params.velocity + params.coupling * l; };
  const auto make_state = [&](double when, double l, double lp) {
    CouplingState st;
    st.time = when;
    st.s = static_cast<double>(s_units) * h;
    st.z = static_cast<double>(z_units) * h;
    st.u = static_cast<double>(u_units) * h;
    st.running_min = static_cast<double>(m_units) * h;
    st.local_time = scale * l;
    st.velocity = velocity_at(scale * l);
    st.z_prime = static_cast<double>(zp_units) * h;
    st.u_prime = static_cast<double>(up_units) * h;
    st.running_min_prime = static_cast<double>(mp_units) * h;
    st.local_time_prime = scale * lp;
    return st;
  };
  const auto emit_until = [&](double bound) {
    while (snap_cursor < snaps.size() && snaps[snap_cursor] < bound) {
      const double ts = snaps[snap_cursor++];
      const double dt_in = ts > t ? ts - t : 0.0;
      out.snapshots.push_back(
          make_state(ts, l_raw + (at_min ? dt_in : 0.0), lp_raw + (at_min_prime ? dt_in : 0.0)));
    }
  };

  if (options.record_paths) {
    out.u.initial_value = out.u_prime.initial_value = 0.0;
    out.local_time.append(0.0, 0.0);
    out.local_time_prime.append(0.0, 0.0);
  }

  // Channel gap for Z's positive jumps only (intensity 2^n * max(V, 0)).
  const auto positive_channel_gap = [&](double v_now) {
    if (at_min && params.coupling > 0.0) {
      const double slope = params.coupling * scale * scale;
      const double target = -std::log(rng.uniform());
      if (v_now >= 0.0) return invert_integrated_intensity(scale * v_now, slope, 0.0, target);
      const double until_sign_change = -v_now / (params.coupling * scale);
      return until_sign_change + invert_integrated_intensity(0.0, slope, 0.0, target);
    }
    return rng.exponential(scale * std::max(v_now, 0.0));
  };

  while (true) {
    const double v_now = velocity_at(scale * l_raw);

    const double gap_s = rng.exponential(two_walk_rate);
    double gap_zfull = std::numeric_limits<double>::infinity();   // v < 0: Z channel
    double gap_zpos = std::numeric_limits<double>::infinity();    // v >= 0: Z positive part
    double gap_zprime = std::numeric_limits<double>::infinity();  // v >= 0: Z' clock
    if (nonneg_v) {
      gap_zpos = positive_channel_gap(v_now);
      gap_zprime = rng.exponential(floor_rate);
    } else {
      gap_zfull = detail::velocity_channel_gap(v_now, at_min, params, rng);
    }

    const double gap = std::min(std::min(gap_s, gap_zfull), std::min(gap_zpos, gap_zprime));
    const double t_next = t + gap;

    if (!(t_next < params.horizon)) {
      emit_until(params.horizon);
      const double tail = params.horizon - t;
      if (at_min) l_raw += tail;
      if (at_min_prime) lp_raw += tail;
      t = params.horizon;
      break;
    }

    emit_until(t_next);
    if (at_min && !at_min_prime) ++out.occupation_violations;
    if (at_min) l_raw += gap;
    if (at_min_prime) lp_raw += gap;
    t = t_next;
    if (++out.event_count > options.max_events) throw EventCapExceeded(options.max_events);

    const double v_event = velocity_at(scale * l_raw);
    const std::int64_t z_gap_before = z_units - zp_units;

    if (gap == gap_s) {
      const int dir = rng.bernoulli(0.5) ? 1 : -1;
      s_units += dir;
      u_units += dir;
      up_units += dir;
    } else if (nonneg_v && gap == gap_zprime) {
      // Z' fires; while the velocity is still negative the event is thinned
      // into Z as a negative jump.
      zp_units -= 1;
      up_units -= 1;
      if (v_event < 0.0 && floor_rate > 0.0 &&
          rng.bernoulli(scale * (-v_event) / floor_rate)) {
        z_units -= 1;
        u_units -= 1;
      }
    } else if (nonneg_v) {
      z_units += 1;
      u_units += 1;
    } else {
      // v < 0: the velocity stays positive, Z jumps upward; Z' keeps the
      // constant floor rate by thinning Z.
      z_units += 1;
      u_units += 1;
      if (rng.bernoulli(floor_rate / (scale * v_event))) {
        zp_units += 1;
        up_units += 1;
      }
    }

    if (-u_units > m_units) m_units = -u_units;
    if (-up_units > mp_units) mp_units = -up_units;
    at_min = (u_units == -m_units);
    at_min_prime = (up_units == -mp_units);

    if (z_units - zp_units < z_gap_before) ++out.z_order_violations;
    const std::int64_t x_units = u_units + m_units;
    const std::int64_t xp_units = up_units + mp_units;
    if (!(x_units >= xp_units && xp_units >= 0)) ++out.sandwich_violations;

    if (options.record_paths) {
      out.u.append(t, static_cast<double>(u_units) * h);
      // u' may be unchanged at a rejected-thinning event; log nodes anyway
      // for the piecewise-linear locals.
      if (out.u_prime.times.empty() || out.u_prime.times.back() < t)
        out.u_prime.append(t, static_cast<double>(up_units) * h);
      out.local_time.append(t, scale * l_raw);
      out.local_time_prime.append(t, scale * lp_raw);
    }
    while (snap_cursor < snaps.size() && snaps[snap_cursor] == t) {
      ++snap_cursor;
      out.snapshots.push_back(make_state(t, l_raw, lp_raw));
    }
  }

  out.final_state = make_state(params.horizon, l_raw, lp_raw);
  while (snap_cursor < snaps.size() && snaps[snap_cursor] <= params.horizon) {
    ++snap_cursor;
    out.snapshots.push_back(out.final_state);
  }
  if (options.record_paths) {
    out.local_time.append(params.horizon, scale * l_raw);
    out.local_time_prime.append(params.horizon, scale * lp_raw);
  }
  return out;
}

}  // namespace bmid

#endif  // BMID_JUMP_ENGINE_HPP
