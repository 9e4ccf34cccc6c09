#include "meshsim/engine.hpp"

#include <stdexcept>
#include <utility>

namespace meshsim {

Engine::Handle Engine::schedule(SimTime at, const char* target,
                                const char* kind, std::function<void()> fn) {
  if (at < now_)
    throw std::logic_error("Engine::schedule: fire time before current clock");
  const Handle h = next_seq_++;
  queue_.push(Event{at, h, target, kind, std::move(fn)});
  live_.insert(h);
  return h;
}

bool Engine::cancel(Handle h) {
  if (live_.erase(h) == 0) return false;
  ++cancelled_;
  return true;
}

std::uint64_t Engine::run_until(SimTime t_end) {
  if (t_end < now_)
    throw std::logic_error("Engine::run_until: target time before clock");
  std::uint64_t n = 0;
  while (!queue_.empty() && queue_.top().at <= t_end) {
    const Event& top = queue_.top();
    if (live_.erase(top.seq) == 0) {
      queue_.pop();  // cancelled while queued
      continue;
    }
    now_ = top.at;
    auto fn = std::move(top.fn);
    DispatchRecord rec{top.at, top.seq, top.target, top.kind};
    queue_.pop();
    ++dispatched_;
    ++n;
    if (trace_) trace_(rec);
    fn();
  }
  now_ = t_end;
  return n;
}

}  // namespace meshsim
