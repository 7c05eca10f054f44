#include "qpv/spacetime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <json.hpp>

#include "qpv/error.hpp"

namespace qpv {

void Position::validate() const {
  if (coords.empty()) throw ConfigError("position", "needs at least one coordinate");
  for (double c : coords) {
    if (!std::isfinite(c)) throw ConfigError("position", "coordinates must be finite");
  }
}

double distance(const Position& a, const Position& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a.coords[i] - b.coords[i];
    s += d * d;
  }
  return std::sqrt(s);
}

void TimingConfig::validate() const {
  if (!std::isfinite(T)) throw ConfigError("T", "must be finite");
  if (!(delta >= 0.0)) throw ConfigError("delta", "must be >= 0");
  if (!(slack >= 0.0)) throw ConfigError("slack", "must be >= 0");
}

namespace {

// Calls f on every k-subset of {0..n-1}; stops early if f returns true.
template <class F>
bool for_each_subset(std::size_t n, std::size_t k, F&& f) {
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    if (f(idx)) return true;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return false;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

Enclosure is_enclosed(const std::vector<Position>& verifiers, const Position& pos) {
  const std::size_t d = pos.dim();
  if (d == 0) throw std::invalid_argument("is_enclosed: zero-dimensional position");
  if (verifiers.size() < d + 1) throw std::invalid_argument("is_enclosed: need at least d+1 verifiers");
  for (const auto& v : verifiers) {
    if (v.dim() != d) throw std::invalid_argument("is_enclosed: dimension mismatch");
  }
  // A point of a d-dimensional hull lies in the simplex of some d+1 of the
  // points (Caratheodory), so checking barycentric coordinates on every
  // nondegenerate simplex decides membership.
  bool any_simplex = false;
  const bool inside = for_each_subset(verifiers.size(), d + 1, [&](const std::vector<std::size_t>& s) {
    Eigen::MatrixXd m(d, d);
    Eigen::VectorXd rhs(d);
    const auto& p0 = verifiers[s[0]].coords;
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) m(r, c) = verifiers[s[c + 1]].coords[r] - p0[r];
      rhs(r) = pos.coords[r] - p0[r];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    lu.setThreshold(1e-12);
    if (lu.rank() < static_cast<Eigen::Index>(d)) return false;
    any_simplex = true;
    const Eigen::VectorXd lam = lu.solve(rhs);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      if (lam(i) < -1e-9) return false;
      sum += lam(i);
    }
    return sum <= 1.0 + 1e-9;
  });
  if (inside) return Enclosure::Enclosed;
  return any_simplex ? Enclosure::Outside : Enclosure::Degenerate;
}

std::vector<double> schedule_challenges(const std::vector<Position>& verifiers, const Position& prover_pos,
                                        const TimingConfig& cfg) {
  cfg.validate();
  const Enclosure e = is_enclosed(verifiers, prover_pos);
  if (e == Enclosure::Outside) throw ConfigError("prover_pos", "not inside the verifiers' convex hull");
  if (e == Enclosure::Degenerate) throw ConfigError("verifiers", "verifier positions are degenerate");
  std::vector<double> out;
  out.reserve(verifiers.size());
  for (const auto& v : verifiers) out.push_back(cfg.T - distance(v, prover_pos));
  return out;
}

bool in_time(double arrival, const Position& verifier, const Position& prover_pos, const TimingConfig& cfg) {
  return arrival <= cfg.T + distance(verifier, prover_pos) + cfg.slack + kTimeTolerance;
}

// ------------------------------------------------------------------ engine

void EventEngine::place(PartyId id, Position pos) {
  pos.validate();
  positions_[id] = std::move(pos);
}

const Position& EventEngine::position(PartyId id) const {
  const auto it = positions_.find(id);
  if (it == positions_.end()) throw std::invalid_argument("unknown party " + std::to_string(id));
  return it->second;
}

void EventEngine::on(PartyId id, Handler h) { handlers_[id] = std::move(h); }

const std::vector<double>& EventEngine::deliveries_to(PartyId id) const {
  static const std::vector<double> empty;
  const auto it = seen_.find(id);
  return it == seen_.end() ? empty : it->second;
}

bool EventEngine::later(const Pending& a, const Pending& b) {
  if (a.d.arrival_time != b.d.arrival_time) return a.d.arrival_time > b.d.arrival_time;
  if (a.d.to != b.d.to) return a.d.to > b.d.to;
  return a.d.seq > b.d.seq;
}

void EventEngine::send(PartyId from, PartyId to, double emit_time, Payload payload) {
  if (!std::isfinite(emit_time)) throw CausalityViolation("non-finite emission time");
  const double arrival = emit_time + distance(position(from), position(to));
  if (running_) {
    if (arrival < now_ - kTimeTolerance) {
      throw CausalityViolation("message from " + std::to_string(from) + " to " + std::to_string(to) +
                               " would arrive at " + std::to_string(arrival) + ", before current time " +
                               std::to_string(now_));
    }
    if (emit_time < now_ - kTimeTolerance) {
      const auto& seen = deliveries_to(from);
      const bool own_trigger = std::any_of(seen.begin(), seen.end(), [&](double t) {
        return std::abs(t - emit_time) <= kTimeTolerance;
      });
      if (!own_trigger) {
        throw CausalityViolation("party " + std::to_string(from) + " emits at " + std::to_string(emit_time) +
                                 ", in the past of " + std::to_string(now_));
      }
    }
  }
  Pending p;
  p.d.seq = next_seq_++;
  p.d.from = from;
  p.d.to = to;
  p.d.emit_time = emit_time;
  p.d.arrival_time = arrival;
  p.d.payload = std::move(payload);
  heap_.push_back(std::move(p));
  std::push_heap(heap_.begin(), heap_.end(), later);
}

void EventEngine::run() {
  running_ = true;
  now_ = -std::numeric_limits<double>::infinity();
  while (!heap_.empty()) {
    std::pop_heap(heap_.begin(), heap_.end(), later);
    Pending p = std::move(heap_.back());
    heap_.pop_back();
    now_ = std::max(now_, p.d.arrival_time);
    seen_[p.d.to].push_back(p.d.arrival_time);
    transcript_.push_back(TranscriptEntry{p.d.seq, p.d.from, p.d.to, p.d.emit_time, p.d.arrival_time,
                                          p.d.payload.kind, p.d.payload.bits, p.d.payload.qubits.size()});
    const auto it = handlers_.find(p.d.to);
    if (it != handlers_.end()) it->second(p.d, *this);
  }
  running_ = false;
}

std::vector<TranscriptEntry> run_events(const std::map<PartyId, Position>& parties,
                                        const std::vector<InitialEvent>& events,
                                        const std::map<PartyId, EventEngine::Handler>& handlers) {
  EventEngine eng;
  for (const auto& [id, pos] : parties) eng.place(id, pos);
  for (const auto& [id, h] : handlers) eng.on(id, h);
  for (const auto& e : events) eng.send(e.from, e.to, e.emit_time, Payload{e.kind, e.bits, {}});
  eng.run();
  return eng.transcript();
}

void write_transcript_jsonl(std::ostream& os, const std::vector<TranscriptEntry>& t) {
  for (const auto& e : t) {
    nlohmann::json j = {{"seq", e.seq},
                        {"from", e.from},
                        {"to", e.to},
                        {"emit", e.emit_time},
                        {"arrival", e.arrival_time},
                        {"kind", e.kind},
                        {"bits", e.bits},
                        {"qubits", e.n_qubits}};
    os << j.dump() << '\n';
  }
}

}  // namespace qpv
