#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <unordered_set>
#include <vector>

#include "meshsim/sim_time.hpp"

namespace meshsim {

// One line of the optional event trace, emitted per dispatch.
struct DispatchRecord {
  SimTime at;
  std::uint64_t seq;
  const char* target;
  const char* kind;
};

// Deterministic discrete-event core. Events at equal times dispatch in
// insertion order; the dispatch log for a fixed scenario and seed is
// bit-identical across runs.
class Engine {
 public:
  using Handle = std::uint64_t;
  using TraceSink = std::function<void(const DispatchRecord&)>;

  SimTime now() const { return now_; }

  // Enqueues fn to run at `at`. Rejects times before the current clock —
  // that is a logic bug in the caller, not a recoverable condition.
  Handle schedule(SimTime at, const char* target, const char* kind,
                  std::function<void()> fn);

  // True iff the event was pending and is now removed.
  bool cancel(Handle h);

  // Dispatches every event with fire_at <= t_end in (time, seq) order and
  // advances the clock to exactly t_end. Returns the dispatch count.
  std::uint64_t run_until(SimTime t_end);

  void set_trace_sink(TraceSink sink) { trace_ = std::move(sink); }

  std::uint64_t scheduled_count() const { return next_seq_; }
  std::uint64_t dispatched_count() const { return dispatched_; }
  std::uint64_t cancelled_count() const { return cancelled_; }
  std::size_t pending_count() const { return live_.size(); }

 private:
  struct Event {
    SimTime at;
    std::uint64_t seq;
    const char* target;
    const char* kind;
    mutable std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  SimTime now_ = SimTime::zero();
  std::uint64_t next_seq_ = 0;
  std::uint64_t dispatched_ = 0;
  std::uint64_t cancelled_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::unordered_set<Handle> live_;
  TraceSink trace_;
};

}  // namespace meshsim
